//! Dimension-agnostic image container and grid-graph neighbourhoods.
//!
//! A [`Grid`] holds a 2D `(rows, cols)` image or a 3D `(slices, rows, cols)`
//! volume. Values are stored row-major with channels interleaved, so the
//! sample for channel `c` of the pixel with linear index `i` lives at
//! `data[i * channels + c]`. This matches the payload layout of the tensor
//! file format.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pixel neighbourhood used for growing and boundary detection.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Connectivity {
    /// Face neighbours only: 4 in 2D, 6 in 3D.
    #[default]
    Faces,
    /// Faces, edges and corners: 8 in 2D, 26 in 3D.
    Full,
}

impl Connectivity {
    pub fn max_neighbors(self, rank: usize) -> usize {
        match self {
            Connectivity::Faces => 2 * rank,
            Connectivity::Full => 3usize.pow(rank as u32) - 1,
        }
    }
}

/// Pixel/voxel index in grid axis order (`[row, col]` or `[slice, row, col]`).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coord {
    idx: [usize; 3],
    rank: u8,
}

impl Coord {
    pub fn new(indices: &[usize]) -> Self {
        assert!(
            indices.len() == 2 || indices.len() == 3,
            "coordinates must have rank 2 or 3"
        );
        let mut idx = [0; 3];
        idx[..indices.len()].copy_from_slice(indices);
        Coord {
            idx,
            rank: indices.len() as u8,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank as usize
    }

    pub fn indices(&self) -> &[usize] {
        &self.idx[..self.rank()]
    }
}

impl std::fmt::Debug for Coord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}", self.indices())
    }
}

impl From<[usize; 2]> for Coord {
    fn from(v: [usize; 2]) -> Self {
        Coord::new(&v)
    }
}

impl From<[usize; 3]> for Coord {
    fn from(v: [usize; 3]) -> Self {
        Coord::new(&v)
    }
}

/// Shape and neighbourhood arithmetic over linear pixel indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lattice {
    shape: Vec<usize>,
    strides: Vec<usize>,
}

impl Lattice {
    pub fn new(shape: &[usize]) -> Result<Self> {
        if shape.len() != 2 && shape.len() != 3 {
            return Err(Error::invalid(format!(
                "grid rank must be 2 or 3, got shape {shape:?}"
            )));
        }
        if shape.contains(&0) {
            return Err(Error::invalid(format!(
                "grid extents must be positive, got shape {shape:?}"
            )));
        }
        let mut strides = vec![1; shape.len()];
        for axis in (0..shape.len() - 1).rev() {
            strides[axis] = strides[axis + 1] * shape[axis + 1];
        }
        Ok(Lattice {
            shape: shape.to_vec(),
            strides,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, c: &Coord) -> bool {
        c.rank() == self.rank() && c.indices().iter().zip(&self.shape).all(|(i, s)| i < s)
    }

    pub fn linear(&self, c: &Coord) -> usize {
        c.indices()
            .iter()
            .zip(&self.strides)
            .map(|(i, s)| i * s)
            .sum()
    }

    pub fn coord(&self, mut linear: usize) -> Coord {
        let mut idx = [0; 3];
        for (axis, stride) in self.strides.iter().enumerate() {
            idx[axis] = linear / stride;
            linear %= stride;
        }
        Coord {
            idx,
            rank: self.rank() as u8,
        }
    }

    /// Non-zero neighbour offsets in lexicographic order.
    pub fn offsets(&self, conn: Connectivity) -> Vec<[isize; 3]> {
        let rank = self.rank();
        let mut out = Vec::new();
        let range = |axis: usize| if axis < rank { -1..=1 } else { 0..=0 };
        for a in range(0) {
            for b in range(1) {
                for c in range(2) {
                    let off = [a, b, c];
                    let nonzero = off.iter().filter(|&&o| o != 0).count();
                    let keep = match conn {
                        Connectivity::Faces => nonzero == 1,
                        Connectivity::Full => nonzero > 0,
                    };
                    if keep {
                        out.push(off);
                    }
                }
            }
        }
        out
    }

    /// Calls `f` for each in-bounds neighbour of `linear`, in offset order.
    #[inline]
    pub(crate) fn for_each_neighbor(
        &self,
        linear: usize,
        offsets: &[[isize; 3]],
        mut f: impl FnMut(usize),
    ) {
        let c = self.coord(linear);
        let rank = self.rank();
        'outer: for off in offsets {
            let mut q = linear as isize;
            for (axis, &step) in off.iter().enumerate().take(rank) {
                let i = c.idx[axis] as isize + step;
                if i < 0 || i >= self.shape[axis] as isize {
                    continue 'outer;
                }
                q += step * self.strides[axis] as isize;
            }
            f(q as usize);
        }
    }

    /// In-bounds neighbours of a linear index, in offset order.
    pub fn neighbor_indices(&self, linear: usize, conn: Connectivity) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_neighbor(linear, &self.offsets(conn), |q| out.push(q));
        out
    }
}

/// Dense multi-channel 2D image or 3D volume of finite values.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    lattice: Lattice,
    channels: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn new(shape: &[usize], channels: usize, data: Vec<f64>) -> Result<Self> {
        let lattice = Lattice::new(shape)?;
        if channels == 0 {
            return Err(Error::invalid("channel count must be positive"));
        }
        let expected = lattice.len() * channels;
        if data.len() != expected {
            return Err(Error::invalid(format!(
                "data length {} does not match shape {:?} x {} channels = {}",
                data.len(),
                shape,
                channels,
                expected
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value {} at sample {}",
                data[pos], pos
            )));
        }
        Ok(Grid {
            lattice,
            channels,
            data,
        })
    }

    pub fn filled(shape: &[usize], channels: usize, value: f64) -> Result<Self> {
        let n: usize = shape.iter().product();
        Grid::new(shape, channels, vec![value; n * channels])
    }

    pub fn shape(&self) -> &[usize] {
        self.lattice.shape()
    }

    pub fn rank(&self) -> usize {
        self.lattice.rank()
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn num_pixels(&self) -> usize {
        self.lattice.len()
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// All channel samples of one pixel.
    #[inline]
    pub fn pixel(&self, linear: usize) -> &[f64] {
        &self.data[linear * self.channels..(linear + 1) * self.channels]
    }

    pub fn get(&self, c: &Coord, channel: usize) -> f64 {
        self.data[self.lattice.linear(c) * self.channels + channel]
    }

    pub fn contains(&self, c: &Coord) -> bool {
        self.lattice.contains(c)
    }

    /// Same shape and channel count, new samples. Values are re-validated.
    pub fn with_data(&self, data: Vec<f64>) -> Result<Self> {
        Grid::new(self.shape(), self.channels, data)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        self.with_data(self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// In-bounds neighbours of `c`, ordered lexicographically by axis offset.
pub fn neighbors(c: &Coord, g: &Grid, conn: Connectivity) -> Vec<Coord> {
    let lattice = g.lattice();
    lattice
        .neighbor_indices(lattice.linear(c), conn)
        .into_iter()
        .map(|q| lattice.coord(q))
        .collect()
}

/// Global min-max rescale of all channels jointly onto `[0, 1]`.
///
/// A constant image maps to all zeros.
pub fn normalize_intensity(g: &Grid) -> Grid {
    let (lo, hi) = g.min_max();
    let range = hi - lo;
    let data = if range > 0.0 {
        g.data
            .iter()
            .map(|&v| ((v - lo) / range).clamp(0.0, 1.0))
            .collect()
    } else {
        vec![0.0; g.data.len()]
    };
    Grid {
        lattice: g.lattice.clone(),
        channels: g.channels,
        data,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn coords(v: Vec<Coord>) -> Vec<Vec<usize>> {
        v.iter().map(|c| c.indices().to_vec()).collect()
    }

    #[test]
    fn corner_faces_clipped() {
        let g = Grid::filled(&[4, 4], 1, 0.0).unwrap();
        let n = neighbors(&Coord::from([0, 0]), &g, Connectivity::Faces);
        assert_eq!(coords(n), vec![vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn interior_counts() {
        let g = Grid::filled(&[4, 4], 1, 0.0).unwrap();
        let c = Coord::from([1, 1]);
        assert_eq!(neighbors(&c, &g, Connectivity::Faces).len(), 4);
        assert_eq!(neighbors(&c, &g, Connectivity::Full).len(), 8);

        let v = Grid::filled(&[3, 3, 3], 1, 0.0).unwrap();
        let c = Coord::from([1, 1, 1]);
        assert_eq!(neighbors(&c, &v, Connectivity::Faces).len(), 6);
        let full = neighbors(&c, &v, Connectivity::Full);
        assert_eq!(full.len(), 26);
        assert!(!full.contains(&c));
    }

    #[test]
    fn faces_order_is_lexicographic() {
        let g = Grid::filled(&[3, 3], 1, 0.0).unwrap();
        let n = neighbors(&Coord::from([1, 1]), &g, Connectivity::Faces);
        assert_eq!(
            coords(n),
            vec![vec![0, 1], vec![1, 0], vec![1, 2], vec![2, 1]]
        );
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(Grid::new(&[2, 2], 1, vec![0.0; 3]).is_err());
        assert!(Grid::new(&[2], 1, vec![0.0; 2]).is_err());
        assert!(Grid::new(&[2, 0], 1, vec![]).is_err());
        assert!(Grid::new(&[1, 2], 1, vec![0.0, f64::NAN]).is_err());
        assert!(Grid::new(&[1, 2], 0, vec![]).is_err());
    }

    #[test]
    fn normalize_examples() {
        let g = Grid::new(&[1, 2], 1, vec![0.0, 255.0]).unwrap();
        assert_eq!(normalize_intensity(&g).data(), &[0.0, 1.0]);

        let g = Grid::filled(&[3, 3], 1, 7.0).unwrap();
        assert!(normalize_intensity(&g).data().iter().all(|&v| v == 0.0));

        let g = Grid::new(&[1, 3], 1, vec![2.0, 4.0, 6.0]).unwrap();
        assert_eq!(normalize_intensity(&g).data(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn normalize_is_joint_over_channels() {
        let g = Grid::new(&[1, 2], 2, vec![0.0, 10.0, 5.0, 20.0]).unwrap();
        assert_eq!(normalize_intensity(&g).data(), &[0.0, 0.5, 0.25, 1.0]);
    }

    #[test]
    fn linear_coord_roundtrip() {
        let l = Lattice::new(&[3, 4, 5]).unwrap();
        for i in 0..l.len() {
            assert_eq!(l.linear(&l.coord(i)), i);
        }
    }

    proptest! {
        #[test]
        fn neighbors_symmetric_and_bounded(
            d0 in 1usize..5, d1 in 1usize..5, d2 in 1usize..5,
            three in any::<bool>(), full in any::<bool>(),
        ) {
            let shape: Vec<usize> = if three { vec![d0, d1, d2] } else { vec![d0, d1] };
            let l = Lattice::new(&shape).unwrap();
            let conn = if full { Connectivity::Full } else { Connectivity::Faces };
            let max = conn.max_neighbors(l.rank());
            for p in 0..l.len() {
                let np = l.neighbor_indices(p, conn);
                prop_assert!(np.len() <= max);
                prop_assert!(!np.contains(&p));
                let c = l.coord(p);
                let interior = c.indices().iter().zip(l.shape()).all(|(&i, &s)| i > 0 && i + 1 < s);
                if interior {
                    prop_assert_eq!(np.len(), max);
                }
                for q in np {
                    prop_assert!(l.neighbor_indices(q, conn).contains(&p));
                }
            }
        }

        #[test]
        fn normalize_idempotent(vals in proptest::collection::vec(0.0f64..1.0, 2..40)) {
            let n = vals.len();
            let g = Grid::new(&[1, n], 1, vals).unwrap();
            let once = normalize_intensity(&g);
            let (lo, hi) = once.min_max();
            prop_assume!(hi > lo);
            let twice = normalize_intensity(&once);
            for (a, b) in once.data().iter().zip(twice.data()) {
                prop_assert!((a - b).abs() < 1e-12);
                prop_assert!((0.0..=1.0).contains(a));
            }
        }
    }
}
