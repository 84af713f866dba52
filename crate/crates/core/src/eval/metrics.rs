use serde::Serialize;

use crate::error::{Error, Result};
use crate::objectness::ObjectnessMap;

/// Per-pixel class labels over a grid shape.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMap {
    shape: Vec<usize>,
    labels: Vec<usize>,
}

impl LabelMap {
    pub fn new(shape: &[usize], labels: Vec<usize>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if labels.len() != n {
            return Err(Error::invalid(format!(
                "{} labels for shape {:?}",
                labels.len(),
                shape
            )));
        }
        Ok(LabelMap {
            shape: shape.to_vec(),
            labels,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn max_label(&self) -> usize {
        self.labels.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IouReport {
    /// `None` where the class occurs in neither map.
    pub per_class: Vec<Option<f64>>,
    /// Mean over classes that occur in at least one map.
    pub mean: f64,
}

pub fn iou(pred: &LabelMap, gt: &LabelMap, num_classes: usize) -> Result<IouReport> {
    if pred.shape() != gt.shape() {
        return Err(Error::invalid(format!(
            "prediction shape {:?} does not match ground truth {:?}",
            pred.shape(),
            gt.shape()
        )));
    }
    let mut inter = vec![0usize; num_classes];
    let mut union = vec![0usize; num_classes];
    for (&p, &g) in pred.labels().iter().zip(gt.labels()) {
        if p >= num_classes || g >= num_classes {
            return Err(Error::invalid(format!(
                "label {} outside {num_classes} classes",
                p.max(g)
            )));
        }
        if p == g {
            inter[p] += 1;
            union[p] += 1;
        } else {
            union[p] += 1;
            union[g] += 1;
        }
    }
    let per_class: Vec<Option<f64>> = inter
        .iter()
        .zip(&union)
        .map(|(&i, &u)| (u > 0).then(|| i as f64 / u as f64))
        .collect();
    let present: Vec<f64> = per_class.iter().flatten().copied().collect();
    let mean = if present.is_empty() {
        0.0
    } else {
        present.iter().sum::<f64>() / present.len() as f64
    };
    Ok(IouReport { per_class, mean })
}

/// Per-pixel argmax over class probabilities; ties resolve to the lower class,
/// so an even split goes to background.
pub fn threshold_predict(m: &ObjectnessMap) -> LabelMap {
    let p = &m.probabilities;
    let labels = (0..p.num_pixels())
        .map(|i| {
            let mut best = 0;
            for c in 1..p.num_classes() {
                if p.get(c, i) > p.get(best, i) {
                    best = c;
                }
            }
            best
        })
        .collect();
    LabelMap {
        shape: p.shape().to_vec(),
        labels,
    }
}
