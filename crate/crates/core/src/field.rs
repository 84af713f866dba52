use crate::error::{Error, Result};

/// Per-pixel, per-class values of shape `(C, *grid)`, stored class-major:
/// entry `(c, i)` lives at `data[c * num_pixels + i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassField {
    shape: Vec<usize>,
    num_classes: usize,
    data: Vec<f64>,
}

impl ClassField {
    pub fn new(shape: &[usize], num_classes: usize, data: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if num_classes == 0 || data.len() != n * num_classes {
            return Err(Error::invalid(format!(
                "class field of {} values does not match {} classes over shape {:?}",
                data.len(),
                num_classes,
                shape
            )));
        }
        Ok(ClassField {
            shape: shape.to_vec(),
            num_classes,
            data,
        })
    }

    pub fn zeros(shape: &[usize], num_classes: usize) -> Self {
        let n: usize = shape.iter().product();
        ClassField {
            shape: shape.to_vec(),
            num_classes,
            data: vec![0.0; n * num_classes],
        }
    }

    /// Spatial shape, without the class axis.
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_pixels(&self) -> usize {
        self.data.len() / self.num_classes
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, class: usize, pixel: usize) -> f64 {
        self.data[class * self.num_pixels() + pixel]
    }

    #[inline]
    pub fn set(&mut self, class: usize, pixel: usize, v: f64) {
        let n = self.num_pixels();
        self.data[class * n + pixel] = v;
    }

    pub fn class_plane(&self, class: usize) -> &[f64] {
        let n = self.num_pixels();
        &self.data[class * n..(class + 1) * n]
    }

    /// Checks that every pixel holds a distribution, within `tol`.
    pub fn check_distribution(&self, tol: f64) -> Result<()> {
        for i in 0..self.num_pixels() {
            let mut sum = 0.0;
            for c in 0..self.num_classes {
                let v = self.get(c, i);
                if !(-tol..=1.0 + tol).contains(&v) {
                    return Err(Error::invalid(format!(
                        "probability {v} out of range at pixel {i}, class {c}"
                    )));
                }
                sum += v;
            }
            if (sum - 1.0).abs() > tol {
                return Err(Error::invalid(format!(
                    "probabilities at pixel {i} sum to {sum}"
                )));
            }
        }
        Ok(())
    }
}
