use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::LabelMap;
use crate::field::ClassField;
use crate::grid::Grid;
use crate::objectness::ObjectnessMap;

use super::{commit, read_bytes, stage};

pub const MAGIC: &[u8; 8] = b"SEEDPRI1";
const ORDER: &str = "row-major";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F32,
    U8,
    U16,
}

impl Dtype {
    pub fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::U8 => 1,
            Dtype::U16 => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    U8(Vec<u8>),
    U16(Vec<u16>),
}

impl TensorData {
    pub fn dtype(&self) -> Dtype {
        match self {
            TensorData::F32(_) => Dtype::F32,
            TensorData::U8(_) => Dtype::U8,
            TensorData::U16(_) => Dtype::U16,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            TensorData::F32(v) => v.len(),
            TensorData::U8(v) => v.len(),
            TensorData::U16(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            TensorData::F32(v) => v.iter().map(|&x| x as f64).collect(),
            TensorData::U8(v) => v.iter().map(|&x| x as f64).collect(),
            TensorData::U16(v) => v.iter().map(|&x| x as f64).collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    shape: Vec<usize>,
    channels: usize,
    dtype: Dtype,
    order: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub channels: usize,
    pub data: TensorData,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, channels: usize, data: TensorData) -> Result<Self> {
        let expected = shape.iter().product::<usize>() * channels;
        if shape.is_empty() || channels == 0 || data.len() != expected {
            return Err(Error::invalid(format!(
                "tensor of {} values does not match shape {:?} x {} channels",
                data.len(),
                shape,
                channels
            )));
        }
        Ok(Tensor {
            shape,
            channels,
            data,
        })
    }

    pub fn encode(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&Header {
            shape: self.shape.clone(),
            channels: self.channels,
            dtype: self.data.dtype(),
            order: ORDER.to_string(),
        })
        .expect("header serializes");
        let mut out =
            Vec::with_capacity(12 + header.len() + self.data.len() * self.data.dtype().size());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        match &self.data {
            TensorData::F32(v) => v
                .iter()
                .for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            TensorData::U8(v) => out.extend_from_slice(v),
            TensorData::U16(v) => v
                .iter()
                .for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        }
        out
    }

    pub fn decode(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |m: String| Error::format(path, m);
        if bytes.len() < 12 || &bytes[..8] != MAGIC {
            return Err(bad("not a tensor file (bad magic)".into()));
        }
        let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let header_end = 12usize
            .checked_add(header_len)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| bad("truncated header".into()))?;
        let header: Header = serde_json::from_slice(&bytes[12..header_end])
            .map_err(|e| bad(format!("invalid header: {e}")))?;
        if header.order != ORDER {
            return Err(bad(format!("unsupported order {:?}", header.order)));
        }
        if header.shape.is_empty() || header.channels == 0 {
            return Err(bad("empty shape or zero channels".into()));
        }
        let count = header
            .shape
            .iter()
            .try_fold(header.channels, |acc, &s| acc.checked_mul(s))
            .ok_or_else(|| bad("shape overflows".into()))?;
        let payload = &bytes[header_end..];
        let expected = count * header.dtype.size();
        if payload.len() != expected {
            return Err(bad(format!(
                "payload is {} bytes, header declares {}",
                payload.len(),
                expected
            )));
        }
        let data = match header.dtype {
            Dtype::F32 => TensorData::F32(
                payload
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            ),
            Dtype::U8 => TensorData::U8(payload.to_vec()),
            Dtype::U16 => TensorData::U16(
                payload
                    .chunks_exact(2)
                    .map(|c| u16::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            ),
        };
        Ok(Tensor {
            shape: header.shape,
            channels: header.channels,
            data,
        })
    }

    pub fn from_grid(g: &Grid) -> Self {
        Tensor {
            shape: g.shape().to_vec(),
            channels: g.channels(),
            data: TensorData::F32(g.data().iter().map(|&v| v as f32).collect()),
        }
    }

    pub fn to_grid(&self, path: &Path) -> Result<Grid> {
        Grid::new(&self.shape, self.channels, self.data.to_f64())
            .map_err(|e| Error::format(path, e.to_string()))
    }
}

pub fn read_tensor(path: &Path) -> Result<Tensor> {
    Tensor::decode(&read_bytes(path)?, path)
}

pub fn write_tensor(t: &Tensor, path: &Path) -> Result<()> {
    super::write_atomic(path, &t.encode())
}

/// Writes `g` as `f32`.
pub fn write_grid(g: &Grid, path: &Path) -> Result<()> {
    write_tensor(&Tensor::from_grid(g), path)
}

/// Sibling path holding the background mask of an objectness file.
pub fn bg_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".bg");
    PathBuf::from(s)
}

/// The `(C, *grid)` probability tensor and the `u8` background mask tensor.
pub fn objectness_tensors(m: &ObjectnessMap) -> (Tensor, Tensor) {
    let p = &m.probabilities;
    let mut shape = vec![p.num_classes()];
    shape.extend_from_slice(p.shape());
    let probs = Tensor {
        shape,
        channels: 1,
        data: TensorData::F32(p.data().iter().map(|&v| v as f32).collect()),
    };
    let mask = Tensor {
        shape: p.shape().to_vec(),
        channels: 1,
        data: TensorData::U8(m.background_mask.iter().map(|&b| b as u8).collect()),
    };
    (probs, mask)
}

/// Writes the probabilities to `path` and the mask to `<path>.bg`; neither
/// file appears unless both were staged.
pub fn write_objectness(m: &ObjectnessMap, path: &Path) -> Result<()> {
    let (probs, mask) = objectness_tensors(m);
    let staged = vec![
        stage(path, &probs.encode())?,
        stage(&bg_path(path), &mask.encode())?,
    ];
    commit(staged)
}

/// Reads a `(C, *grid)` tensor as a class field.
pub fn read_class_field(path: &Path) -> Result<ClassField> {
    let t = read_tensor(path)?;
    if t.channels != 1 || !(3..=4).contains(&t.shape.len()) {
        return Err(Error::format(
            path,
            format!(
                "expected a (classes, *grid) single-channel tensor, got shape {:?} x {} channels",
                t.shape, t.channels
            ),
        ));
    }
    ClassField::new(&t.shape[1..], t.shape[0], t.data.to_f64())
        .map_err(|e| Error::format(path, e.to_string()))
}

/// Reads an objectness file and its `.bg` sibling.
pub fn read_objectness(path: &Path) -> Result<ObjectnessMap> {
    let probabilities = read_class_field(path)?;
    let bg = bg_path(path);
    let mask = read_tensor(&bg)?;
    let TensorData::U8(bits) = mask.data else {
        return Err(Error::format(&bg, "background mask must be u8"));
    };
    if mask.shape != probabilities.shape() || mask.channels != 1 {
        return Err(Error::format(
            &bg,
            format!(
                "mask shape {:?} does not match objectness grid {:?}",
                mask.shape,
                probabilities.shape()
            ),
        ));
    }
    Ok(ObjectnessMap {
        probabilities,
        background_mask: bits.into_iter().map(|b| b != 0).collect(),
    })
}

/// Label maps are stored as `u8` when every label fits, `u16` otherwise.
pub fn write_label_map(l: &LabelMap, path: &Path) -> Result<()> {
    write_tensor(&Tensor::from_label_map(l)?, path)
}

impl Tensor {
    pub fn from_label_map(l: &LabelMap) -> Result<Self> {
        let data = if l.max_label() <= u8::MAX as usize {
            TensorData::U8(l.labels().iter().map(|&v| v as u8).collect())
        } else if l.max_label() <= u16::MAX as usize {
            TensorData::U16(l.labels().iter().map(|&v| v as u16).collect())
        } else {
            return Err(Error::invalid(format!(
                "label {} does not fit in u16",
                l.max_label()
            )));
        };
        Tensor::new(l.shape().to_vec(), 1, data)
    }
}

pub fn read_label_map(path: &Path) -> Result<LabelMap> {
    let t = read_tensor(path)?;
    let labels: Vec<usize> = match &t.data {
        TensorData::U8(v) => v.iter().map(|&x| x as usize).collect(),
        TensorData::U16(v) => v.iter().map(|&x| x as usize).collect(),
        TensorData::F32(_) => {
            return Err(Error::format(path, "label maps must be u8 or u16"));
        }
    };
    if t.channels != 1 {
        return Err(Error::format(path, "label maps must have one channel"));
    }
    LabelMap::new(&t.shape, labels).map_err(|e| Error::format(path, e.to_string()))
}
