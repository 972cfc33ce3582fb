//! Contextual Gabor fingerprint enhancement.
//!
//! Each foreground pixel of a fingerprint is filtered with the kernel of a
//! precomputed Gabor bank whose orientation and frequency best match the
//! local ridge flow. Around that core the crate provides classical
//! orientation and frequency estimators, ground-truth rendering from ridge
//! skeletons, augmentation, a crossing-number minutiae extractor and the
//! evaluation tools (matching, precision/recall/F1, threshold sweeps,
//! Tversky agreement) used to score enhancement results.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the bottom of this file fix the scalar for the common cases.

pub mod augment;
pub mod codec;
pub mod distance;
pub mod enhance;
pub mod error;
pub mod eval;
pub mod fields;
pub mod gabor;
pub mod minutiae;
pub mod pipeline;
pub mod raster;
pub mod scalar;
pub mod synthetic;

pub use augment::{augment, AugmentSpec, Sample, Transform};
pub use distance::erode_mask;
pub use enhance::{enhance_gbfen, gt_enhance, EnhanceOptions, OutputMode, Strategy};
pub use error::{Error, Result};
pub use eval::{match_minutiae, prf1, tversky_loss, EvalReport, MatchCriteria, TverskyParams, TypeMode};
pub use gabor::{build_bank, gabor_kernel, BankParams, GaborBank, GaborKernel};
pub use minutiae::{detect_minutiae, thin, SkeletonImage};
pub use pipeline::{run_pipeline, PipelineConfig};
pub use raster::{EnhancedImage, FrequencyMap, GrayImage, Grid, Minutia, MinutiaKind, MinutiaSet, OrientationField, SegmentationMask};
pub use scalar::Real;

pub type GaborBankF32 = GaborBank<f32>;
pub type GaborBankF64 = GaborBank<f64>;
pub type GaborKernelF64 = GaborKernel<f64>;
pub type OrientationFieldF32 = OrientationField<f32>;
pub type OrientationFieldF64 = OrientationField<f64>;
pub type FrequencyMapF32 = FrequencyMap<f32>;
pub type FrequencyMapF64 = FrequencyMap<f64>;
pub type EnhancedImageF32 = EnhancedImage<f32>;
pub type EnhancedImageF64 = EnhancedImage<f64>;
pub type SampleF64 = Sample<f64>;
