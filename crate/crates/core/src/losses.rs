//! Forward-only reference kernels for the point, objectness and image-level
//! supervision terms and their weighted sum.
//!
//! Prediction fields and objectness targets are [`ClassField`]s of shape
//! `(C, *grid)`. Every logarithm is taken of a probability clamped below by
//! [`LOG_EPS`].

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ClassField;

pub const LOG_EPS: f64 = 1e-12;
/// Weight of annotated foreground points.
pub const DEFAULT_ALPHA_POINT: f64 = 1.0;
/// Weight of generated background samples.
pub const DEFAULT_ALPHA_BACKGROUND: f64 = 0.1;

#[inline]
fn safe_ln(p: f64) -> f64 {
    p.max(LOG_EPS).ln()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointLabel {
    pub pixel: usize,
    pub class: usize,
    pub weight: f64,
}

/// Labeled pixel set: annotated foreground points plus generated background.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointLabels {
    entries: Vec<PointLabel>,
}

impl PointLabels {
    pub fn new(entries: Vec<PointLabel>) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            if e.weight.is_nan() || e.weight <= 0.0 {
                return Err(Error::invalid(format!(
                    "point label at pixel {} has non-positive weight {}",
                    e.pixel, e.weight
                )));
            }
            if !seen.insert(e.pixel) {
                return Err(Error::invalid(format!(
                    "pixel {} labeled more than once",
                    e.pixel
                )));
            }
        }
        Ok(PointLabels { entries })
    }

    /// Annotated points with weight `alpha_point`, then every masked pixel not
    /// already annotated as background with weight `alpha_background`.
    pub fn from_points_and_mask(
        points: &[(usize, usize)],
        background_mask: &[bool],
        alpha_point: f64,
        alpha_background: f64,
    ) -> Result<Self> {
        let annotated: HashSet<usize> = points.iter().map(|&(p, _)| p).collect();
        let mut entries: Vec<PointLabel> = points
            .iter()
            .map(|&(pixel, class)| PointLabel {
                pixel,
                class,
                weight: alpha_point,
            })
            .collect();
        entries.extend(
            background_mask
                .iter()
                .enumerate()
                .filter(|&(i, &b)| b && !annotated.contains(&i))
                .map(|(pixel, _)| PointLabel {
                    pixel,
                    class: 0,
                    weight: alpha_background,
                }),
        );
        PointLabels::new(entries)
    }

    pub fn entries(&self) -> &[PointLabel] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Objectness probabilities with per-class weights.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectnessTarget {
    pub probabilities: ClassField,
    pub beta: Vec<f64>,
}

impl ObjectnessTarget {
    /// Unit weights except `beta_background` for class 0.
    pub fn with_background_weight(probabilities: ClassField, beta_background: f64) -> Self {
        let mut beta = vec![1.0; probabilities.num_classes()];
        beta[0] = beta_background;
        ObjectnessTarget {
            probabilities,
            beta,
        }
    }
}

/// Foreground classes known present (`L`) and absent (`L'`) in an image.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ImagePresence {
    pub present: BTreeSet<usize>,
    pub absent: BTreeSet<usize>,
}

impl ImagePresence {
    pub fn new(
        present: impl IntoIterator<Item = usize>,
        absent: impl IntoIterator<Item = usize>,
    ) -> Self {
        ImagePresence {
            present: present.into_iter().collect(),
            absent: absent.into_iter().collect(),
        }
    }

    /// Present = given classes; absent = every other foreground class.
    pub fn from_present(present: impl IntoIterator<Item = usize>, num_classes: usize) -> Self {
        let present: BTreeSet<usize> = present.into_iter().collect();
        let absent = (1..num_classes).filter(|c| !present.contains(c)).collect();
        ImagePresence { present, absent }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub point: f64,
    pub objectness: f64,
    pub image: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            point: 1.0,
            objectness: 1.0,
            image: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub point: f64,
    pub objectness: f64,
    pub image: f64,
    pub total: f64,
}

/// Weighted partial cross-entropy `-sum_i alpha_i ln S[i, G_i]` over the labeled pixels.
///
/// `mean` divides by the label count; off by default to match the summed form.
pub fn point_loss(s: &ClassField, pts: &PointLabels, mean: bool) -> Result<f64> {
    if pts.is_empty() {
        return Err(Error::invalid(
            "point loss needs at least one labeled pixel",
        ));
    }
    let mut total = 0.0;
    for e in pts.entries() {
        if e.pixel >= s.num_pixels() || e.class >= s.num_classes() {
            return Err(Error::invalid(format!(
                "point label (pixel {}, class {}) outside prediction of {} pixels x {} classes",
                e.pixel,
                e.class,
                s.num_pixels(),
                s.num_classes()
            )));
        }
        total -= e.weight * safe_ln(s.get(e.class, e.pixel));
    }
    Ok(if mean {
        total / pts.len() as f64
    } else {
        total
    })
}

/// Beta-weighted cross-entropy of `S` against the objectness, averaged over pixels.
pub fn objectness_loss(s: &ClassField, tgt: &ObjectnessTarget) -> Result<f64> {
    let p = &tgt.probabilities;
    if p.shape() != s.shape() || p.num_classes() != s.num_classes() {
        return Err(Error::invalid(format!(
            "objectness target {:?}x{} does not match prediction {:?}x{}",
            p.shape(),
            p.num_classes(),
            s.shape(),
            s.num_classes()
        )));
    }
    if tgt.beta.len() != s.num_classes() {
        return Err(Error::invalid(format!(
            "{} class weights for {} classes",
            tgt.beta.len(),
            s.num_classes()
        )));
    }
    let n = s.num_pixels();
    let mut total = 0.0;
    for (c, &beta) in tgt.beta.iter().enumerate() {
        let mut acc = 0.0;
        for (pv, sv) in p.class_plane(c).iter().zip(s.class_plane(c)) {
            if *pv != 0.0 {
                acc += pv * safe_ln(*sv);
            }
        }
        total -= beta * acc;
    }
    Ok(total / n as f64)
}

/// Pixel with the highest probability for `class`; ties go to the lowest index.
pub fn class_argmax(s: &ClassField, class: usize) -> usize {
    let plane = s.class_plane(class);
    let mut best = 0;
    for (i, &v) in plane.iter().enumerate() {
        if v > plane[best] {
            best = i;
        }
    }
    best
}

/// Presence loss read at each class's most confident pixel.
///
/// An empty present or absent set contributes nothing.
pub fn image_level_loss(s: &ClassField, pres: &ImagePresence) -> Result<f64> {
    if let Some(c) = pres.present.intersection(&pres.absent).next() {
        return Err(Error::invalid(format!(
            "class {c} marked both present and absent"
        )));
    }
    if pres.present.is_empty() && pres.absent.is_empty() {
        return Err(Error::invalid(
            "image-level loss needs at least one present or absent class",
        ));
    }
    if let Some(&c) = pres
        .present
        .iter()
        .chain(&pres.absent)
        .find(|&&c| c == 0 || c >= s.num_classes())
    {
        return Err(Error::invalid(format!(
            "presence class {c} outside foreground range 1..{}",
            s.num_classes() - 1
        )));
    }
    let peak = |c: usize| s.get(c, class_argmax(s, c));
    let mut loss = 0.0;
    if !pres.present.is_empty() {
        let sum: f64 = pres.present.iter().map(|&c| safe_ln(peak(c))).sum();
        loss -= sum / pres.present.len() as f64;
    }
    if !pres.absent.is_empty() {
        let sum: f64 = pres.absent.iter().map(|&c| safe_ln(1.0 - peak(c))).sum();
        loss -= sum / pres.absent.len() as f64;
    }
    Ok(loss)
}

pub fn total_loss(
    s: &ClassField,
    pts: &PointLabels,
    tgt: &ObjectnessTarget,
    pres: &ImagePresence,
    w: &LossWeights,
) -> Result<LossBreakdown> {
    let point = point_loss(s, pts, false)?;
    let objectness = objectness_loss(s, tgt)?;
    let image = image_level_loss(s, pres)?;
    Ok(combine(point, objectness, image, w))
}

pub fn combine(point: f64, objectness: f64, image: f64, w: &LossWeights) -> LossBreakdown {
    LossBreakdown {
        point,
        objectness,
        image,
        total: w.point * point + w.objectness * objectness + w.image * image,
    }
}

#[cfg(test)]
#[allow(clippy::approx_constant)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Two-class field from class-1 probabilities.
    fn binary(p1: &[f64]) -> ClassField {
        let mut data: Vec<f64> = p1.iter().map(|p| 1.0 - p).collect();
        data.extend_from_slice(p1);
        ClassField::new(&[1, p1.len()], 2, data).unwrap()
    }

    #[test]
    fn point_loss_examples() {
        let s = binary(&[1.0, 0.0, 0.5]);
        let perfect = PointLabels::new(vec![
            PointLabel {
                pixel: 0,
                class: 1,
                weight: 1.0,
            },
            PointLabel {
                pixel: 1,
                class: 0,
                weight: 0.1,
            },
        ])
        .unwrap();
        assert_eq!(point_loss(&s, &perfect, false).unwrap(), 0.0);

        let fg = PointLabels::new(vec![PointLabel {
            pixel: 2,
            class: 1,
            weight: 1.0,
        }])
        .unwrap();
        assert_abs_diff_eq!(
            point_loss(&s, &fg, false).unwrap(),
            0.693147,
            epsilon = 1e-6
        );

        let bg = PointLabels::new(vec![PointLabel {
            pixel: 2,
            class: 0,
            weight: DEFAULT_ALPHA_BACKGROUND,
        }])
        .unwrap();
        assert_abs_diff_eq!(
            point_loss(&s, &bg, false).unwrap(),
            0.0693147,
            epsilon = 1e-6
        );
    }

    #[test]
    fn point_loss_errors_and_mean() {
        let s = binary(&[0.5, 0.5]);
        assert!(point_loss(&s, &PointLabels::default(), false).is_err());
        assert!(PointLabels::new(vec![PointLabel {
            pixel: 0,
            class: 1,
            weight: 0.0
        }])
        .is_err());
        let dup = vec![
            PointLabel {
                pixel: 0,
                class: 1,
                weight: 1.0,
            },
            PointLabel {
                pixel: 0,
                class: 0,
                weight: 1.0,
            },
        ];
        assert!(PointLabels::new(dup).is_err());

        let two = PointLabels::new(vec![
            PointLabel {
                pixel: 0,
                class: 1,
                weight: 1.0,
            },
            PointLabel {
                pixel: 1,
                class: 1,
                weight: 1.0,
            },
        ])
        .unwrap();
        let sum = point_loss(&s, &two, false).unwrap();
        assert_abs_diff_eq!(
            point_loss(&s, &two, true).unwrap(),
            sum / 2.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn zero_probability_is_clamped() {
        let s = binary(&[0.0]);
        let pts = PointLabels::new(vec![PointLabel {
            pixel: 0,
            class: 1,
            weight: 1.0,
        }])
        .unwrap();
        assert_abs_diff_eq!(
            point_loss(&s, &pts, false).unwrap(),
            -LOG_EPS.ln(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn from_points_and_mask_weights() {
        let labels =
            PointLabels::from_points_and_mask(&[(0, 1)], &[true, true, false], 1.0, 0.1).unwrap();
        assert_eq!(labels.len(), 2);
        assert_eq!(
            labels.entries()[1],
            PointLabel {
                pixel: 1,
                class: 0,
                weight: 0.1
            }
        );
    }

    #[test]
    fn objectness_loss_examples() {
        let onehot = binary(&[1.0, 0.0, 1.0]);
        let tgt = ObjectnessTarget::with_background_weight(onehot.clone(), 1.0);
        assert_eq!(objectness_loss(&onehot, &tgt).unwrap(), 0.0);

        let uniform = binary(&[0.5; 4]);
        let tgt = ObjectnessTarget::with_background_weight(uniform.clone(), 1.0);
        assert_abs_diff_eq!(
            objectness_loss(&uniform, &tgt).unwrap(),
            0.693147,
            epsilon = 1e-6
        );

        let tgt = ObjectnessTarget::with_background_weight(uniform.clone(), 2.0);
        assert_abs_diff_eq!(
            objectness_loss(&uniform, &tgt).unwrap(),
            1.039721,
            epsilon = 1e-6
        );
    }

    #[test]
    fn objectness_loss_shape_mismatch() {
        let tgt = ObjectnessTarget::with_background_weight(binary(&[0.5; 3]), 1.0);
        assert!(objectness_loss(&binary(&[0.5; 4]), &tgt).is_err());
    }

    #[test]
    fn image_level_examples() {
        // class 1 peaks at 1.0, class 2 never exceeds 0
        let s = ClassField::new(&[1, 2], 3, vec![0.0, 1.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
        let pres = ImagePresence::new([1], [2]);
        assert_eq!(image_level_loss(&s, &pres).unwrap(), 0.0);

        let s = binary(&[0.2, 0.5, 0.1]);
        let present = ImagePresence::new([1], []);
        assert_abs_diff_eq!(
            image_level_loss(&s, &present).unwrap(),
            0.693147,
            epsilon = 1e-6
        );
        let absent = ImagePresence::new([], [1]);
        assert_abs_diff_eq!(
            image_level_loss(&s, &absent).unwrap(),
            0.693147,
            epsilon = 1e-6
        );
    }

    #[test]
    fn image_level_errors() {
        let s = binary(&[0.5]);
        assert!(image_level_loss(&s, &ImagePresence::new([1], [1])).is_err());
        assert!(image_level_loss(&s, &ImagePresence::default()).is_err());
        assert!(image_level_loss(&s, &ImagePresence::new([0], [])).is_err());
    }

    #[test]
    fn argmax_ties_take_lowest_index() {
        let s = binary(&[0.3, 0.7, 0.7]);
        assert_eq!(class_argmax(&s, 1), 1);
    }

    #[test]
    fn total_is_weighted_sum() {
        let w = LossWeights::default();
        assert_eq!(combine(0.0, 0.0, 0.0, &w).total, 0.0);
        assert_eq!(combine(1.0, 2.0, 3.0, &w).total, 6.0);
        let select = LossWeights {
            point: 0.0,
            objectness: 1.0,
            image: 0.0,
        };
        assert_eq!(combine(1.0, 2.0, 3.0, &select).total, 2.0);
    }

    #[test]
    fn total_loss_composes_kernels() {
        let s = binary(&[0.5, 0.25]);
        let pts = PointLabels::new(vec![PointLabel {
            pixel: 0,
            class: 1,
            weight: 1.0,
        }])
        .unwrap();
        let tgt = ObjectnessTarget::with_background_weight(binary(&[0.5, 0.5]), 1.0);
        let pres = ImagePresence::new([1], []);
        let b = total_loss(&s, &pts, &tgt, &pres, &LossWeights::default()).unwrap();
        assert_abs_diff_eq!(b.total, b.point + b.objectness + b.image, epsilon = 1e-15);
        assert_abs_diff_eq!(b.point, std::f64::consts::LN_2, epsilon = 1e-12);
    }
}
