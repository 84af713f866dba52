//! Intensity conditioning applied before objectness generation.
//!
//! All operations expect intensities already normalized to `[0, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{normalize_intensity, Connectivity, Grid};

pub const EQUALIZE_BINS: usize = 256;

/// Perona-Malik parameters on normalized intensities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffusionParams {
    /// Edge threshold of the conductance `exp(-(s/kappa)^2)`.
    pub kappa: f64,
    /// Explicit time step; must satisfy `step * max_neighbors <= 1`.
    pub step: f64,
    pub iterations: usize,
}

impl Default for DiffusionParams {
    fn default() -> Self {
        DiffusionParams {
            kappa: 0.05,
            step: 0.15,
            iterations: 10,
        }
    }
}

impl DiffusionParams {
    pub fn validate(&self, rank: usize) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::invalid(format!(
                "diffusion kappa must be positive, got {}",
                self.kappa
            )));
        }
        let max = Connectivity::Faces.max_neighbors(rank) as f64;
        if !(self.step > 0.0 && self.step * max <= 1.0) {
            return Err(Error::invalid(format!(
                "diffusion step {} violates stability bound (0, {}] for rank {}",
                self.step,
                1.0 / max,
                rank
            )));
        }
        Ok(())
    }
}

/// Explicit Perona-Malik diffusion, each channel independently, face neighbours.
///
/// Every iteration is a simultaneous (Jacobi) update. Fluxes are only
/// exchanged across in-bounds pixel pairs, so the per-channel mean is
/// conserved.
pub fn anisotropic_diffusion(g: &Grid, p: &DiffusionParams) -> Result<Grid> {
    p.validate(g.rank())?;
    if p.iterations == 0 {
        return Ok(g.clone());
    }
    let lattice = g.lattice();
    let ch = g.channels();
    let n = g.num_pixels();
    // Each unordered face pair once: forward offsets only.
    let forward: Vec<[isize; 3]> = lattice
        .offsets(Connectivity::Faces)
        .into_iter()
        .filter(|o| o.iter().sum::<isize>() > 0)
        .collect();
    let mut pairs = Vec::with_capacity(n * forward.len());
    for i in 0..n {
        lattice.for_each_neighbor(i, &forward, |q| pairs.push((i, q)));
    }

    let inv_k2 = 1.0 / (p.kappa * p.kappa);
    let mut cur = g.data().to_vec();
    let mut next = cur.clone();
    for _ in 0..p.iterations {
        next.copy_from_slice(&cur);
        for &(i, q) in &pairs {
            for c in 0..ch {
                let delta = cur[q * ch + c] - cur[i * ch + c];
                let flux = p.step * (-(delta * delta) * inv_k2).exp() * delta;
                next[i * ch + c] += flux;
                next[q * ch + c] -= flux;
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    g.with_data(cur)
}

/// Global 256-bin histogram equalization per channel, `T(v) = CDF(bin(v)) / N`.
///
/// A channel occupying a single bin is returned unchanged.
pub fn histogram_equalize(g: &Grid) -> Result<Grid> {
    let ch = g.channels();
    let n = g.num_pixels();
    let bin = |v: f64| ((v.clamp(0.0, 1.0) * EQUALIZE_BINS as f64) as usize).min(EQUALIZE_BINS - 1);
    let mut out = g.data().to_vec();
    for c in 0..ch {
        let mut hist = [0usize; EQUALIZE_BINS];
        for i in 0..n {
            hist[bin(g.data()[i * ch + c])] += 1;
        }
        if hist.iter().filter(|&&h| h > 0).count() <= 1 {
            continue;
        }
        let mut lut = [0.0; EQUALIZE_BINS];
        let mut acc = 0usize;
        for (b, h) in hist.iter().enumerate() {
            acc += h;
            lut[b] = acc as f64 / n as f64;
        }
        for i in 0..n {
            out[i * ch + c] = lut[bin(g.data()[i * ch + c])];
        }
    }
    g.with_data(out)
}

fn channel_stats(g: &Grid, c: usize) -> (f64, f64) {
    let ch = g.channels();
    let n = g.num_pixels() as f64;
    let vals = g.data().iter().skip(c).step_by(ch);
    let mean = vals.clone().sum::<f64>() / n;
    let var = vals.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Per-channel mean/std matching, clamped to `[0, 1]`.
///
/// Zero-variance channels are only mean-shifted.
pub fn channel_normalize(g: &Grid, target_mean: &[f64], target_std: &[f64]) -> Result<Grid> {
    let ch = g.channels();
    if target_mean.len() != ch || target_std.len() != ch {
        return Err(Error::invalid(format!(
            "channel normalization targets have {} means and {} stds for a {}-channel image",
            target_mean.len(),
            target_std.len(),
            ch
        )));
    }
    if let Some(s) = target_std.iter().find(|&&s| s.is_nan() || s <= 0.0) {
        return Err(Error::invalid(format!(
            "target std must be positive, got {s}"
        )));
    }
    let mut out = g.data().to_vec();
    for c in 0..ch {
        let (mean, std) = channel_stats(g, c);
        for v in out.iter_mut().skip(c).step_by(ch) {
            let shifted = if std > 0.0 {
                (*v - mean) / std * target_std[c]
            } else {
                0.0
            };
            *v = (shifted + target_mean[c]).clamp(0.0, 1.0);
        }
    }
    g.with_data(out)
}

/// Per-channel statistics normalization target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelTarget {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Ordered conditioning chain: min-max normalize, channel normalize,
/// equalize, diffuse. Disabled stages are skipped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub normalize: bool,
    pub channel_target: Option<ChannelTarget>,
    pub equalize: bool,
    pub diffusion: Option<DiffusionParams>,
}

impl Default for Preprocessing {
    fn default() -> Self {
        Preprocessing {
            normalize: true,
            channel_target: None,
            equalize: false,
            diffusion: None,
        }
    }
}

impl Preprocessing {
    pub fn apply(&self, g: &Grid) -> Result<Grid> {
        let mut out = if self.normalize {
            normalize_intensity(g)
        } else {
            g.clone()
        };
        if let Some(t) = &self.channel_target {
            out = channel_normalize(&out, &t.mean, &t.std)?;
        }
        if self.equalize {
            out = histogram_equalize(&out)?;
        }
        if let Some(p) = &self.diffusion {
            out = anisotropic_diffusion(&out, p)?;
        }
        Ok(out)
    }
}
