use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use serde_json::json;

use seedprior::eval::{iou, sweep_w, synth_generate, threshold_predict, IouReport, SynthSpec};
use seedprior::io::{
    bg_path, commit, encode_seeds, objectness_tensors, read_class_field, read_image,
    read_label_map, read_objectness, read_seeds, read_tensor, stage, write_grid, Staged, Tensor,
    TensorData,
};
use seedprior::losses::{
    combine, image_level_loss, objectness_loss, point_loss, ImagePresence, LossWeights,
    ObjectnessTarget, PointLabels,
};
use seedprior::preprocess::Preprocessing;
use seedprior::{generate_objectness, Grid, ObjectnessConfig};

use crate::args::{
    Cli, Command, EvalArgs, Format, GrowFlags, LossesArgs, LossesCommand, ObjectnessArgs,
    PreprocessArgs, PreprocessFlags, SweepArgs, SynthArgs,
};
use crate::log::Log;
use crate::{usage, CliError};

type CliResult<T> = Result<T, CliError>;

pub fn execute(cli: &Cli, out: &mut dyn Write, log: &mut Log) -> CliResult<()> {
    match &cli.command {
        Command::Objectness(a) => objectness(a, log),
        Command::Preprocess(a) => preprocess(a, log),
        Command::Synth(a) => synth(a, log),
        Command::Eval(a) => eval(a, out),
        Command::Sweep(a) => sweep(a, out, log),
        Command::Losses(LossesCommand::Eval(a)) => losses(a, out),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> CliResult<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Io(format!("stdout: {e}")))
}

fn check_w(w: f64, flag: &str) -> CliResult<()> {
    if w >= 0.0 && w.is_finite() {
        Ok(())
    } else {
        Err(usage(format!(
            "{flag} must be a finite non-negative number, got {w}"
        )))
    }
}

fn check_classes(classes: Option<usize>) -> CliResult<()> {
    match classes {
        Some(c) if c < 2 => Err(usage(format!("--classes must be at least 2, got {c}"))),
        _ => Ok(()),
    }
}

fn check_pre(flags: &PreprocessFlags) -> CliResult<()> {
    if flags.diffuse {
        if !(flags.kappa > 0.0 && flags.kappa.is_finite()) {
            return Err(usage(format!(
                "--kappa must be positive, got {}",
                flags.kappa
            )));
        }
        if flags.step.is_nan() || flags.step <= 0.0 {
            return Err(usage(format!(
                "--step must be positive, got {}",
                flags.step
            )));
        }
    }
    if let (Some(m), Some(s)) = (&flags.channel_mean, &flags.channel_std) {
        if m.len() != s.len() {
            return Err(usage(format!(
                "--channel-mean has {} values but --channel-std has {}",
                m.len(),
                s.len()
            )));
        }
        if let Some(v) = s.iter().find(|&&v| v.is_nan() || v <= 0.0) {
            return Err(usage(format!(
                "--channel-std values must be positive, got {v}"
            )));
        }
    }
    Ok(())
}

/// Rank-dependent checks that need the loaded image.
fn chain_for(flags: &PreprocessFlags, g: &Grid) -> CliResult<Preprocessing> {
    let chain = flags.chain();
    if let Some(p) = &chain.diffusion {
        p.validate(g.rank())
            .map_err(|e| usage(format!("--step: {e}")))?;
    }
    if let Some(t) = &chain.channel_target {
        if t.mean.len() != g.channels() {
            return Err(usage(format!(
                "--channel-mean has {} values for a {}-channel image",
                t.mean.len(),
                g.channels()
            )));
        }
    }
    Ok(chain)
}

fn grow_config(g: &GrowFlags) -> ObjectnessConfig {
    ObjectnessConfig {
        w: g.w,
        connectivity: g.connectivity.into(),
        boundary_as_background: !g.no_boundary_background,
    }
}

fn with_context(path: &Path, e: seedprior::Error) -> CliError {
    match CliError::from(e) {
        CliError::Data(m) => CliError::Data(format!("{}: {m}", path.display())),
        other => other,
    }
}

fn objectness(a: &ObjectnessArgs, log: &mut Log) -> CliResult<()> {
    if a.input.len() != a.seeds.len() || a.input.len() != a.output.len() {
        return Err(usage(format!(
            "got {} --input, {} --seeds and {} --output paths; counts must match",
            a.input.len(),
            a.seeds.len(),
            a.output.len()
        )));
    }
    if a.jobs == 0 {
        return Err(usage("--jobs must be at least 1"));
    }
    check_w(a.grow.w, "-w")?;
    check_classes(a.grow.classes)?;
    check_pre(&a.pre)?;
    let cfg = grow_config(&a.grow);

    let run_one = |k: usize| -> CliResult<(Tensor, Tensor)> {
        let g = read_image(&a.input[k])?;
        let seeds = read_seeds(&a.seeds[k], g.shape(), a.grow.classes)?;
        let chain = chain_for(&a.pre, &g)?;
        let m = generate_objectness(&g, &seeds, &cfg, Some(&chain))
            .map_err(|e| with_context(&a.seeds[k], e))?;
        Ok(objectness_tensors(&m))
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs)
        .build()
        .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    let results: Vec<CliResult<(Tensor, Tensor)>> = pool.install(|| {
        use rayon::prelude::*;
        (0..a.input.len()).into_par_iter().map(run_one).collect()
    });

    let mut staged: Vec<Staged> = Vec::with_capacity(2 * results.len());
    for (k, r) in results.into_iter().enumerate() {
        let (probs, mask) = r?;
        staged.push(stage(&a.output[k], &probs.encode())?);
        staged.push(stage(&bg_path(&a.output[k]), &mask.encode())?);
    }
    commit(staged)?;
    for k in 0..a.input.len() {
        log.event(
            "wrote",
            json!({"input": a.input[k], "output": a.output[k], "mask": bg_path(&a.output[k])}),
        );
    }
    Ok(())
}

fn preprocess(a: &PreprocessArgs, log: &mut Log) -> CliResult<()> {
    check_pre(&a.pre)?;
    let g = read_image(&a.input)?;
    let chain = chain_for(&a.pre, &g)?;
    let out = chain.apply(&g).map_err(|e| with_context(&a.input, e))?;
    write_grid(&out, &a.output)?;
    log.event("wrote", json!({"input": a.input, "output": a.output}));
    Ok(())
}

fn synth(a: &SynthArgs, log: &mut Log) -> CliResult<()> {
    if a.shape.len() != 2 && a.shape.len() != 3 {
        return Err(usage(format!(
            "--shape needs 2 or 3 extents, got {:?}",
            a.shape
        )));
    }
    let spec = SynthSpec {
        shape: a.shape.clone(),
        n_objects: a.objects,
        n_classes: a.classes,
        radius_min: a.radius_min,
        radius_max: a.radius_max,
        background: a.background,
        contrast: a.contrast,
        noise_sigma: a.noise,
        edge_width: a.edge_width,
        rng_seed: a.rng_seed,
    };
    let sample = synth_generate(&spec)?;
    let staged = vec![
        stage(&a.image, &Tensor::from_grid(&sample.image).encode())?,
        stage(&a.labels, &Tensor::from_label_map(&sample.labels)?.encode())?,
        stage(&a.seeds, &encode_seeds(&sample.seeds)?)?,
    ];
    commit(staged)?;
    log.event(
        "wrote",
        json!({"image": a.image, "labels": a.labels, "seeds": a.seeds, "objects": sample.seeds.len()}),
    );
    Ok(())
}

fn iou_text(r: &IouReport) -> String {
    let mut s = format!("{:<8}{:>8}\n", "class", "iou");
    for (c, v) in r.per_class.iter().enumerate() {
        match v {
            Some(v) => s += &format!("{c:<8}{v:>8.4}\n"),
            None => s += &format!("{c:<8}{:>8}\n", "-"),
        }
    }
    s += &format!("{:<8}{:>8.4}\n", "mIoU", r.mean);
    s += "# mIoU averages classes present in the prediction or ground truth; '-' marks classes absent from both\n";
    s
}

fn eval(a: &EvalArgs, out: &mut dyn Write) -> CliResult<()> {
    // Integer tensors are already label maps; float tensors are objectness.
    let pred = match read_tensor(&a.pred)?.data {
        TensorData::F32(_) => threshold_predict(&read_objectness(&a.pred)?),
        _ => read_label_map(&a.pred)?,
    };
    let gt = read_label_map(&a.gt)?;
    if gt.shape() != pred.shape() {
        return Err(CliError::Data(format!(
            "{}: shape {:?} does not match prediction {} shape {:?}",
            a.gt.display(),
            gt.shape(),
            a.pred.display(),
            pred.shape()
        )));
    }
    let classes = (pred.max_label().max(gt.max_label()) + 1).max(2);
    let report = iou(&pred, &gt, classes)?;
    let text = match a.format {
        Format::Json => format!(
            "{}\n",
            json!({"per_class": report.per_class, "miou": report.mean})
        ),
        Format::Text => iou_text(&report),
    };
    emit(out, &text)
}

fn sweep(a: &SweepArgs, out: &mut dyn Write, log: &mut Log) -> CliResult<()> {
    if a.candidates.is_empty() {
        return Err(usage("--candidates needs at least one value"));
    }
    for &w in &a.candidates {
        check_w(w, "--candidates")?;
    }
    check_classes(a.classes)?;
    check_pre(&a.pre)?;
    let g = read_image(&a.input)?;
    let seeds = read_seeds(&a.seeds, g.shape(), a.classes)?;
    let gt = read_label_map(&a.gt)?;
    let chain = chain_for(&a.pre, &g)?;
    let base = ObjectnessConfig {
        w: a.candidates[0],
        connectivity: a.connectivity.into(),
        boundary_as_background: !a.no_boundary_background,
    };
    let result = sweep_w(&g, &seeds, &gt, &a.candidates, &base, Some(&chain))
        .map_err(|e| with_context(&a.seeds, e))?;
    if let Some(path) = &a.output {
        let cfg = ObjectnessConfig {
            w: result.best_w,
            ..base
        };
        let m = generate_objectness(&g, &seeds, &cfg, Some(&chain))?;
        seedprior::io::write_objectness(&m, path)?;
        log.event("wrote", json!({"output": path, "w": result.best_w}));
    }
    let text = match a.format {
        Format::Json => format!(
            "{}\n",
            json!({
                "best_w": result.best_w,
                "best_miou": result.best_miou,
                "table": result.table.iter().map(|(w, m)| json!({"w": w, "miou": m})).collect::<Vec<_>>(),
            })
        ),
        Format::Text => {
            let mut s = format!("{:<10}{:>8}\n", "w", "mIoU");
            for (w, m) in &result.table {
                s += &format!("{w:<10}{m:>8.4}\n");
            }
            s += &format!(
                "best w = {} (mIoU {:.4})\n",
                result.best_w, result.best_miou
            );
            s
        }
    };
    emit(out, &text)
}

fn losses(a: &LossesArgs, out: &mut dyn Write) -> CliResult<()> {
    if a.lambda.len() != 3 || a.lambda.iter().any(|&l| l.is_nan() || l < 0.0) {
        return Err(usage(format!(
            "--lambda needs three non-negative weights, got {:?}",
            a.lambda
        )));
    }
    for (flag, v) in [
        ("--alpha-point", a.alpha_point),
        ("--alpha-background", a.alpha_background),
        ("--beta-background", a.beta_background),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(usage(format!("{flag} must be positive, got {v}")));
        }
    }
    let s = read_class_field(&a.pred)?;
    let m = read_objectness(&a.objectness)?;
    if m.shape() != s.shape() || m.num_classes() != s.num_classes() {
        return Err(CliError::Data(format!(
            "{}: objectness {:?}x{} does not match prediction {} {:?}x{}",
            a.objectness.display(),
            m.shape(),
            m.num_classes(),
            a.pred.display(),
            s.shape(),
            s.num_classes()
        )));
    }
    let seeds = read_seeds(&a.seeds, s.shape(), Some(s.num_classes()))?;
    let lattice = seedprior::grid::Lattice::new(s.shape())?;
    let points: Vec<(usize, usize)> = seeds
        .seeds()
        .iter()
        .map(|sd| (lattice.linear(&sd.location), sd.class_id))
        .collect();
    let labels = PointLabels::from_points_and_mask(
        &points,
        &m.background_mask,
        a.alpha_point,
        a.alpha_background,
    )?;
    let present: BTreeSet<usize> = match &a.present {
        Some(p) => p.iter().copied().collect(),
        None => seeds.seeds().iter().map(|sd| sd.class_id).collect(),
    };
    let absent: BTreeSet<usize> = match &a.absent {
        Some(p) => p.iter().copied().collect(),
        None => (1..s.num_classes())
            .filter(|c| !present.contains(c))
            .collect(),
    };
    let presence = ImagePresence::new(present, absent);
    let target = ObjectnessTarget::with_background_weight(m.probabilities, a.beta_background);
    let context = |e: seedprior::Error| with_context(&a.pred, e);
    let weights = LossWeights {
        point: a.lambda[0],
        objectness: a.lambda[1],
        image: a.lambda[2],
    };
    let b = combine(
        point_loss(&s, &labels, a.mean_point).map_err(context)?,
        objectness_loss(&s, &target).map_err(context)?,
        image_level_loss(&s, &presence).map_err(context)?,
        &weights,
    );
    let text = match a.format {
        Format::Json => format!("{}\n", serde_json::to_string(&b).expect("serializes")),
        Format::Text => format!(
            "point      {:.6}\nobjectness {:.6}\nimage      {:.6}\ntotal      {:.6}\n",
            b.point, b.objectness, b.image, b.total
        ),
    };
    emit(out, &text)
}
