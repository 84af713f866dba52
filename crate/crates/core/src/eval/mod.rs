//! Desk-scale evaluation: IoU metrics, synthetic blob images with exact
//! ground truth, and a grid sweep over the objectness decay rate.

mod metrics;
mod sweep;
mod synth;

pub use metrics::{iou, threshold_predict, IouReport, LabelMap};
pub use sweep::{sweep_w, SweepResult, DEFAULT_W_CANDIDATES};
pub use synth::{synth_generate, SynthSample, SynthSpec};
