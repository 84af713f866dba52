use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Coord, Grid, Lattice};
use crate::objectness::SeedSet;

use super::LabelMap;

const MAX_PLACEMENT_TRIES: usize = 10_000;

/// Recipe for a synthetic image of non-overlapping soft-edged ellipses
/// (ellipsoids in 3D) on a flat background with additive Gaussian noise.
///
/// Foreground class `c` has mean `background + contrast * c / (C - 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub shape: Vec<usize>,
    pub n_objects: usize,
    /// Class count including background.
    pub n_classes: usize,
    pub radius_min: f64,
    pub radius_max: f64,
    pub background: f64,
    pub contrast: f64,
    pub noise_sigma: f64,
    /// Width in pixels of the sigmoid edge ramp.
    pub edge_width: f64,
    pub rng_seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            shape: vec![256, 256],
            n_objects: 20,
            n_classes: 2,
            radius_min: 6.0,
            radius_max: 14.0,
            background: 0.3,
            contrast: 0.3,
            noise_sigma: 0.05,
            edge_width: 1.0,
            rng_seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSample {
    pub image: Grid,
    pub labels: LabelMap,
    pub seeds: SeedSet,
}

struct Blob {
    center: Vec<usize>,
    radii: Vec<f64>,
    class: usize,
}

impl Blob {
    /// Normalized elliptical radius; `<= 1` inside.
    fn rho(&self, c: &Coord) -> f64 {
        c.indices()
            .iter()
            .zip(&self.center)
            .zip(&self.radii)
            .map(|((&i, &o), &r)| {
                let d = (i as f64 - o as f64) / r;
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    fn max_radius(&self) -> f64 {
        self.radii.iter().cloned().fold(0.0, f64::max)
    }

    fn min_radius(&self) -> f64 {
        self.radii.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::invalid(format!("synthetic spec: {m}")));
        if self.n_objects == 0 {
            return fail("n_objects must be at least 1".into());
        }
        if self.n_classes < 2 {
            return fail(format!(
                "n_classes must be at least 2, got {}",
                self.n_classes
            ));
        }
        if !(self.radius_min > 0.0 && self.radius_min <= self.radius_max) {
            return fail(format!(
                "radius range [{}, {}] is invalid",
                self.radius_min, self.radius_max
            ));
        }
        let hi = self.background + self.contrast;
        if !(0.0..=1.0).contains(&self.background) || !(0.0..=1.0).contains(&hi) {
            return fail("intensities must stay within [0, 1]".into());
        }
        if !(self.noise_sigma >= 0.0 && self.edge_width > 0.0) {
            return fail("noise sigma must be >= 0 and edge width > 0".into());
        }
        if self
            .shape
            .iter()
            .any(|&s| (s as f64) < 2.0 * self.radius_max + 3.0)
        {
            return fail(format!(
                "shape {:?} too small for radius {}",
                self.shape, self.radius_max
            ));
        }
        Ok(())
    }

    pub fn class_mean(&self, class: usize) -> f64 {
        self.background + self.contrast * class as f64 / (self.n_classes - 1) as f64
    }
}

fn place_blobs(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Result<Vec<Blob>> {
    let mut blobs: Vec<Blob> = Vec::with_capacity(spec.n_objects);
    for k in 0..spec.n_objects {
        let mut placed = false;
        for _ in 0..MAX_PLACEMENT_TRIES {
            let radii: Vec<f64> = spec
                .shape
                .iter()
                .map(|_| rng.random_range(spec.radius_min..=spec.radius_max))
                .collect();
            let reach = radii.iter().cloned().fold(0.0, f64::max);
            let margin = reach.ceil() as usize + 1;
            let center: Vec<usize> = spec
                .shape
                .iter()
                .map(|&s| rng.random_range(margin..s - margin))
                .collect();
            // Keep a two-pixel gap between bounding spheres.
            let clear = blobs.iter().all(|b| {
                let d2: f64 = b
                    .center
                    .iter()
                    .zip(&center)
                    .map(|(&a, &c)| (a as f64 - c as f64).powi(2))
                    .sum();
                d2.sqrt() >= b.max_radius() + reach + 2.0
            });
            if clear {
                let class = 1 + rng.random_range(0..spec.n_classes - 1);
                blobs.push(Blob {
                    center,
                    radii,
                    class,
                });
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::invalid(format!(
                "could not place object {} of {} after {} tries",
                k + 1,
                spec.n_objects,
                MAX_PLACEMENT_TRIES
            )));
        }
    }
    Ok(blobs)
}

/// Deterministic image, exact label map and one centre seed per object.
pub fn synth_generate(spec: &SynthSpec) -> Result<SynthSample> {
    spec.validate()?;
    let lattice = Lattice::new(&spec.shape)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let blobs = place_blobs(spec, &mut rng)?;

    let noise = Normal::new(0.0, spec.noise_sigma)
        .map_err(|e| Error::invalid(format!("noise distribution: {e}")))?;
    let n = lattice.len();
    let mut data = Vec::with_capacity(n);
    let mut labels = vec![0usize; n];
    for (i, label) in labels.iter_mut().enumerate() {
        let c = lattice.coord(i);
        let (blob, rho) = blobs
            .iter()
            .map(|b| (b, b.rho(&c)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("at least one blob");
        if rho <= 1.0 {
            *label = blob.class;
        }
        let ramp = 1.0 / (1.0 + ((rho - 1.0) * blob.min_radius() / spec.edge_width).exp());
        let mean = spec.background + (spec.class_mean(blob.class) - spec.background) * ramp;
        let v = if spec.noise_sigma > 0.0 {
            mean + noise.sample(&mut rng)
        } else {
            mean
        };
        data.push(v.clamp(0.0, 1.0));
    }

    let points: Vec<(Coord, usize)> = blobs
        .iter()
        .map(|b| (Coord::new(&b.center), b.class))
        .collect();
    Ok(SynthSample {
        image: Grid::new(&spec.shape, 1, data)?,
        labels: LabelMap::new(&spec.shape, labels)?,
        seeds: SeedSet::from_points(&points, spec.n_classes)?,
    })
}
