//! COMPASS core: a digital-twin pipeline for per-fraction radiotherapy
//! toxicity monitoring.
//!
//! The crate models normal-tissue response as a time series: per-voxel
//! biological dose accumulation (BED/EQD2), multimodal feature extraction
//! per (patient, organ, fraction), GRU-autoencoder trajectory embedding,
//! logistic toxicity classification, leave-one-patient-out evaluation, and
//! per-voxel probability heatmaps. Everything is verifiable end-to-end on
//! seeded synthetic cohorts with a planted dose→toxicity rule.
//!
//! Data-parallel inner loops (voxel maps, feature extraction, folds) run on
//! rayon when the `parallel` feature is enabled (default) and fall back to
//! plain iterators otherwise. Both paths are deterministic: parallel maps
//! are index-preserving and no floating-point reduction depends on
//! scheduling order.

pub mod biodose;
pub mod classifier;
pub mod cohort;
pub mod error;
pub mod eval;
pub mod features;
pub mod gru;
pub mod heatmap;
pub mod par;
pub mod plot;
pub mod preprocess;
pub mod volume;

pub use error::{CompassError, Result};
