//! Radiomics-guided adaptive post-processing for multi-label 3D tumor
//! segmentations.
//!
//! The pipeline clusters cases by a radiomic signature of their predicted
//! whole tumor, then applies per-cluster small-component removal and
//! ratio-triggered label redefinition. Thresholds are fitted by minimizing a
//! rank-based score built from lesion-wise Dice and normalized surface
//! distance.

pub mod clustering;
pub mod metrics;
pub mod morphology;
pub mod policy;
pub mod radiomics;
pub mod ranking;
pub mod synth;
pub mod volume;
