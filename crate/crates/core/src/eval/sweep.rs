use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::objectness::assemble::objectness_from_growth;
use crate::objectness::{grow_regions, ObjectnessConfig, SeedSet};
use crate::preprocess::Preprocessing;

use super::{iou, threshold_predict, LabelMap};

pub const DEFAULT_W_CANDIDATES: [f64; 6] = [5.0, 10.0, 20.0, 50.0, 100.0, 200.0];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub best_w: f64,
    pub best_miou: f64,
    /// `(w, mIoU)` in candidate order.
    pub table: Vec<(f64, f64)>,
}

/// Scores every candidate decay rate by mIoU of the thresholded objectness
/// against `gt` and returns the best; ties go to the smallest `w`.
///
/// The flooding does not depend on `w`, so it runs once.
pub fn sweep_w(
    g: &Grid,
    s: &SeedSet,
    gt: &LabelMap,
    candidates: &[f64],
    base: &ObjectnessConfig,
    pre: Option<&Preprocessing>,
) -> Result<SweepResult> {
    if candidates.is_empty() {
        return Err(Error::invalid("w sweep needs at least one candidate"));
    }
    if gt.shape() != g.shape() {
        return Err(Error::invalid(format!(
            "ground truth shape {:?} does not match image {:?}",
            gt.shape(),
            g.shape()
        )));
    }
    let conditioned = match pre {
        Some(p) => p.apply(g)?,
        None => g.clone(),
    };
    let growth = grow_regions(&conditioned, s, base.connectivity)?;
    let num_classes = s.num_classes().max(gt.max_label() + 1);

    let mut table = Vec::with_capacity(candidates.len());
    for &w in candidates {
        let cfg = ObjectnessConfig { w, ..*base };
        cfg.validate()?;
        let map = objectness_from_growth(&growth, s, &cfg)?;
        let report = iou(&threshold_predict(&map), gt, num_classes)?;
        table.push((w, report.mean));
    }
    let (best_w, best_miou) = table
        .iter()
        .copied()
        .reduce(|best, cur| {
            if cur.1 > best.1 || (cur.1 == best.1 && cur.0 < best.0) {
                cur
            } else {
                best
            }
        })
        .expect("non-empty candidates");
    Ok(SweepResult {
        best_w,
        best_miou,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{synth_generate, SynthSpec};

    fn sample() -> crate::eval::SynthSample {
        synth_generate(&SynthSpec {
            shape: vec![64, 64],
            n_objects: 4,
            radius_min: 4.0,
            radius_max: 8.0,
            rng_seed: 3,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn single_candidate() {
        let s = sample();
        let r = sweep_w(
            &s.image,
            &s.seeds,
            &s.labels,
            &[17.0],
            &Default::default(),
            None,
        )
        .unwrap();
        assert_eq!(r.best_w, 17.0);
        assert_eq!(r.table.len(), 1);
    }

    #[test]
    fn degenerate_w_loses() {
        let s = sample();
        let r = sweep_w(
            &s.image,
            &s.seeds,
            &s.labels,
            &[0.0, 50.0],
            &Default::default(),
            None,
        )
        .unwrap();
        assert_eq!(r.best_w, 50.0);
        assert!(r.table[1].1 > r.table[0].1);
    }

    #[test]
    fn ties_pick_smallest() {
        // Constant image, one seed: every w gives all-foreground.
        let g = Grid::filled(&[8, 8], 1, 0.5).unwrap();
        let s = SeedSet::from_points(&[([4, 4].into(), 1)], 2).unwrap();
        let gt = LabelMap::new(&[8, 8], vec![1; 64]).unwrap();
        let r = sweep_w(&g, &s, &gt, &[30.0, 10.0, 20.0], &Default::default(), None).unwrap();
        assert_eq!(r.best_w, 10.0);
    }

    #[test]
    fn best_is_member_and_max() {
        let s = sample();
        let cands = DEFAULT_W_CANDIDATES;
        let r = sweep_w(
            &s.image,
            &s.seeds,
            &s.labels,
            &cands,
            &Default::default(),
            None,
        )
        .unwrap();
        assert!(cands.contains(&r.best_w));
        assert!(r.table.iter().all(|&(_, m)| m <= r.best_miou));
    }

    #[test]
    fn empty_candidates_rejected() {
        let s = sample();
        assert!(sweep_w(
            &s.image,
            &s.seeds,
            &s.labels,
            &[],
            &Default::default(),
            None
        )
        .is_err());
    }
}
