use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ClassField;
use crate::grid::{Connectivity, Grid};
use crate::preprocess::Preprocessing;

use super::{grow_regions, GrowthResult, SeedSet};

/// Decay rate used when none is given, on `[0, 1]`-normalized intensities.
pub const DEFAULT_W: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectnessConfig {
    /// Decay rate of `exp(-w d)`.
    pub w: f64,
    pub connectivity: Connectivity,
    /// Promote region-boundary pixels to hard background.
    pub boundary_as_background: bool,
}

impl Default for ObjectnessConfig {
    fn default() -> Self {
        ObjectnessConfig {
            w: DEFAULT_W,
            connectivity: Connectivity::Faces,
            boundary_as_background: true,
        }
    }
}

impl ObjectnessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.w >= 0.0 && self.w.is_finite()) {
            return Err(Error::invalid(format!(
                "w must be a finite non-negative number, got {}",
                self.w
            )));
        }
        Ok(())
    }
}

/// Soft class probabilities plus the generated background label mask.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectnessMap {
    pub probabilities: ClassField,
    pub background_mask: Vec<bool>,
}

impl ObjectnessMap {
    pub fn shape(&self) -> &[usize] {
        self.probabilities.shape()
    }

    pub fn num_classes(&self) -> usize {
        self.probabilities.num_classes()
    }
}

/// Marks every pixel with a neighbour grown from a different seed.
///
/// Both sides of an inter-region edge are marked.
pub fn extract_boundaries(r: &GrowthResult, conn: Connectivity) -> Vec<bool> {
    let lattice = r.lattice();
    let offsets = lattice.offsets(conn);
    let ids = r.identifier();
    (0..lattice.len())
        .map(|p| {
            let mut edge = false;
            lattice.for_each_neighbor(p, &offsets, |q| edge |= ids[q] != ids[p]);
            edge
        })
        .collect()
}

pub fn distance_to_objectness(d: &[f64], w: f64) -> Vec<f64> {
    d.iter().map(|&d| (-w * d).exp()).collect()
}

/// Splits each pixel's mass between its seed class (`obj`) and background
/// (`1 - obj`). Boundary pixels become one-hot background unless they are
/// seeds.
pub fn assemble_class_maps(
    r: &GrowthResult,
    s: &SeedSet,
    obj: &[f64],
    boundary: &[bool],
    cfg: &ObjectnessConfig,
) -> Result<ObjectnessMap> {
    let n = r.lattice().len();
    if obj.len() != n || boundary.len() != n {
        return Err(Error::invalid(format!(
            "objectness ({}) and boundary ({}) sizes do not match {} pixels",
            obj.len(),
            boundary.len(),
            n
        )));
    }
    let num_classes = s.num_classes();
    let mut is_seed = vec![false; n];
    for seed in s.seeds() {
        is_seed[r.lattice().linear(&seed.location)] = true;
    }

    let mut p = ClassField::zeros(r.shape(), num_classes);
    let mut background_mask = vec![false; n];
    for i in 0..n {
        let class = r.seed_class()[i];
        if class == 0 || class >= num_classes {
            return Err(Error::invalid(format!(
                "pixel {i} has seed class {class}, outside 1..{}",
                num_classes - 1
            )));
        }
        if cfg.boundary_as_background && boundary[i] && !is_seed[i] {
            p.set(0, i, 1.0);
            background_mask[i] = true;
        } else {
            p.set(class, i, obj[i]);
            p.set(0, i, 1.0 - obj[i]);
        }
    }
    Ok(ObjectnessMap {
        probabilities: p,
        background_mask,
    })
}

/// Full pipeline: optional preprocessing, flooding, boundaries, objectness,
/// class maps.
///
/// Without preprocessing, raw intensities feed the distance directly.
pub fn generate_objectness(
    g: &Grid,
    s: &SeedSet,
    cfg: &ObjectnessConfig,
    pre: Option<&Preprocessing>,
) -> Result<ObjectnessMap> {
    cfg.validate()?;
    let conditioned;
    let g = match pre {
        Some(pre) => {
            conditioned = pre.apply(g)?;
            &conditioned
        }
        None => g,
    };
    let r = grow_regions(g, s, cfg.connectivity)?;
    objectness_from_growth(&r, s, cfg)
}

pub(crate) fn objectness_from_growth(
    r: &GrowthResult,
    s: &SeedSet,
    cfg: &ObjectnessConfig,
) -> Result<ObjectnessMap> {
    let boundary = extract_boundaries(r, cfg.connectivity);
    let obj = distance_to_objectness(r.distance(), cfg.w);
    assemble_class_maps(r, s, &obj, &boundary, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Coord;
    use crate::objectness::Seed;
    use approx::assert_abs_diff_eq;

    fn row(vals: &[f64]) -> Grid {
        Grid::new(&[1, vals.len()], 1, vals.to_vec()).unwrap()
    }

    #[test]
    fn single_region_has_no_boundary() {
        let g = row(&[0.1, 0.5, 0.2, 0.9]);
        let s = SeedSet::from_points(&[([0, 2].into(), 1)], 2).unwrap();
        let r = grow_regions(&g, &s, Connectivity::Faces).unwrap();
        assert!(extract_boundaries(&r, Connectivity::Faces)
            .iter()
            .all(|b| !b));
    }

    #[test]
    fn two_regions_in_a_row() {
        let g = row(&[0.0, 0.0, 1.0, 1.0]);
        let s = SeedSet::from_points(&[([0, 0].into(), 1), ([0, 3].into(), 1)], 2).unwrap();
        let r = grow_regions(&g, &s, Connectivity::Faces).unwrap();
        assert_eq!(r.identifier(), &[0, 0, 1, 1]);
        assert_eq!(
            extract_boundaries(&r, Connectivity::Faces),
            vec![false, true, true, false]
        );
    }

    #[test]
    fn two_by_two_boundary() {
        let g = Grid::filled(&[2, 2], 1, 0.0).unwrap();
        let s = SeedSet::from_points(&[([0, 0].into(), 1), ([1, 1].into(), 1)], 2).unwrap();
        let r = grow_regions(&g, &s, Connectivity::Faces).unwrap();
        assert_eq!(
            extract_boundaries(&r, Connectivity::Faces),
            vec![false, true, true, true]
        );
    }

    #[test]
    fn objectness_values() {
        assert_eq!(distance_to_objectness(&[0.0, 3.0], 2.0)[0], 1.0);
        assert!(distance_to_objectness(&[0.0, 3.0, 1e9], 0.0)
            .iter()
            .all(|&v| v == 1.0));
        assert_abs_diff_eq!(
            distance_to_objectness(&[std::f64::consts::LN_2], 1.0)[0],
            0.5,
            epsilon = 1e-15
        );
    }

    fn class_map_fixture() -> (GrowthResult, SeedSet) {
        // pixel 0: class-2 seed, pixel 1: claimed by it, pixel 2: class-1 seed
        let g = row(&[0.0, 0.0, 5.0]);
        let s = SeedSet::new(
            vec![
                Seed {
                    location: Coord::from([0, 0]),
                    class_id: 2,
                    instance_id: 0,
                },
                Seed {
                    location: Coord::from([0, 2]),
                    class_id: 1,
                    instance_id: 1,
                },
            ],
            3,
        )
        .unwrap();
        (grow_regions(&g, &s, Connectivity::Faces).unwrap(), s)
    }

    #[test]
    fn class_map_construction() {
        let (r, s) = class_map_fixture();
        let cfg = ObjectnessConfig::default();
        let obj = [1.0, 0.6, 1.0];
        let none = [false; 3];
        let m = assemble_class_maps(&r, &s, &obj, &none, &cfg).unwrap();
        let p = &m.probabilities;
        assert_eq!([p.get(0, 1), p.get(1, 1), p.get(2, 1)], [0.4, 0.0, 0.6]);
        assert_eq!([p.get(0, 0), p.get(1, 0), p.get(2, 0)], [0.0, 0.0, 1.0]);
        assert_eq!([p.get(0, 2), p.get(1, 2), p.get(2, 2)], [0.0, 1.0, 0.0]);

        let obj = [1.0, 0.9, 1.0];
        let all = [true; 3];
        let m = assemble_class_maps(&r, &s, &obj, &all, &cfg).unwrap();
        let p = &m.probabilities;
        assert_eq!([p.get(0, 1), p.get(1, 1), p.get(2, 1)], [1.0, 0.0, 0.0]);
        assert_eq!(m.background_mask, vec![false, true, false]);
        assert_eq!(p.get(2, 0), 1.0);

        let off = ObjectnessConfig {
            boundary_as_background: false,
            ..cfg
        };
        let m = assemble_class_maps(&r, &s, &obj, &all, &off).unwrap();
        assert!(m.background_mask.iter().all(|b| !b));
    }

    #[test]
    fn class_out_of_range_is_rejected() {
        let (r, _) = class_map_fixture();
        let narrow = SeedSet::from_points(&[([0, 0].into(), 1)], 2).unwrap();
        let res = assemble_class_maps(
            &r,
            &narrow,
            &[1.0; 3],
            &[false; 3],
            &ObjectnessConfig::default(),
        );
        assert!(res.is_err());
    }

    #[test]
    fn pipeline_hand_example() {
        let g = row(&[0.0, 0.1, 0.4]);
        let s = SeedSet::from_points(&[([0, 0].into(), 1)], 2).unwrap();
        let cfg = ObjectnessConfig {
            w: 1.0,
            ..Default::default()
        };
        let m = generate_objectness(&g, &s, &cfg, None).unwrap();
        let p1 = m.probabilities.class_plane(1);
        assert_eq!(p1[0], 1.0);
        assert_abs_diff_eq!(p1[1], 0.990050, epsilon = 1e-6);
        assert_abs_diff_eq!(p1[2], 0.904837, epsilon = 1e-6);

        let shifted = g.map(|v| v + 0.3).unwrap();
        let m2 = generate_objectness(&shifted, &s, &cfg, None).unwrap();
        for (a, b) in m.probabilities.data().iter().zip(m2.probabilities.data()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
    }

    #[test]
    fn constant_image_single_seed() {
        let g = Grid::filled(&[6, 5], 2, 0.3).unwrap();
        let s = SeedSet::from_points(&[([3, 1].into(), 1)], 2).unwrap();
        let m = generate_objectness(&g, &s, &ObjectnessConfig::default(), None).unwrap();
        assert!(m.probabilities.class_plane(1).iter().all(|&v| v == 1.0));
        assert!(m.background_mask.iter().all(|b| !b));
    }

    #[test]
    fn negative_w_rejected() {
        let g = row(&[0.0, 1.0]);
        let s = SeedSet::from_points(&[([0, 0].into(), 1)], 2).unwrap();
        let cfg = ObjectnessConfig {
            w: -1.0,
            ..Default::default()
        };
        assert!(generate_objectness(&g, &s, &cfg, None).is_err());
    }
}
