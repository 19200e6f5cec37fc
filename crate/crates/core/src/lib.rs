//! Video matting: sparse-coded per-frame alpha with non-local temporal smoothing.

pub mod aknn;
pub mod config;
pub mod dictionary;
pub mod error;
pub mod eval;
pub mod features;
pub mod imaging;
pub mod patch;
pub mod pipeline;
pub mod sparse_matte;
pub mod temporal_nlm;

pub use aknn::{csh_match, extend_aknn, AknnField, CshParams, Match};
pub use config::PipelineConfig;
pub use error::{MatteError, Result};
pub use imaging::{AlphaMatte, Frame, Label, MatteStage, Trimap};
pub use pipeline::{run_pipeline, run_sequence, PipelineOutput};
pub use sparse_matte::{estimate_frame_matte, MatteParams};
pub use temporal_nlm::{smooth_sequence, NlmConfig};
