//! Outlier detection for grid-sampled functional data.
//!
//! The crate provides:
//!
//! - curve orderings ([`depths`]): band depth, modified band depth, extreme
//!   rank length depth, directional quantile, L∞ depth and extremal depth;
//! - robust statistics ([`robust`]): median/MAD, geometric median, FastMCD,
//!   robust distances and the Hardin–Rocke F cutoff;
//! - directional outlyingness and its mean/variation decomposition
//!   ([`dirout`]);
//! - total variation depth and the modified shape similarity index ([`tvd`]);
//! - detectors ([`detect`], [`muod`]): functional boxplot, MS-Plot,
//!   TVD/MSS, sequential transformations and MUOD;
//! - nine seedable contamination models ([`simmodels`]).
//!
//! Curve indices are 0-based throughout the library. Every routine that
//! draws random numbers takes a [`RandomSource`] and is deterministic for a
//! given seed, independent of the rayon thread count.

pub mod depths;
pub mod detect;
pub mod dirout;
pub mod error;
pub mod muod;
pub mod rng;
pub mod robust;
pub mod sample;
pub mod simmodels;
pub mod stats;
pub mod tvd;

pub use depths::{DepthDirection, DepthMethod, DepthVector, ErldType, PointwiseRanks};
pub use detect::{
    FunctionalBoxplotResult, MsplotConfig, MsplotResult, SeqConfig, SeqTransformResult, Stage,
    StageResult, TvdmssConfig, TvdmssResult,
};
pub use dirout::{DirectionalOutlyingnessField, OutlyingnessDecomposition};
pub use error::{FdError, Result};
pub use muod::{CutMethod, MuodIndices, MuodOutliers};
pub use rng::RandomSource;
pub use robust::{FCutoff, McdFit, RobustLocationScale};
pub use sample::{CurveSample, Grid, MultiCurveSample, SampleData};
pub use simmodels::{GaussianProcessSpec, SimulationOutput};
pub use tvd::TvdResult;
