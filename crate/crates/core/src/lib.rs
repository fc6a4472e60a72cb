//! Evaluation, ensemble fusion and synthetic-tumour data preparation for
//! volumetric brain tumour segmentations.
//!
//! The crate works on dense 3D grids stored X-fastest. Labels follow the
//! current challenge convention (0 background, 1 necrotic core, 2 edema,
//! 3 enhancing tumour) and are scored on the nested regions WT, TC and ET.
//!
//! Main entry points:
//!
//! - [`nifti`] reads and writes the uncompressed NIfTI-1 subset used for all
//!   volumes.
//! - [`metrics`] computes legacy and lesion-wise Dice / HD95 with the
//!   challenge's empty-mask penalties.
//! - [`ranking`] implements rank-then-aggregate scoring across solutions.
//! - [`postprocess`] removes small predicted lesions per region.
//! - [`fusion`] averages probability maps or runs STAPLE.
//! - [`synthprep`] builds the noise-corruption inputs and label placements
//!   used to train a tumour-inpainting GAN, plus its loss formulas.
//! - [`phantom`] generates ellipsoid ground-truth/prediction pairs.
//! - [`batch`] runs deterministic multi-case evaluation.

pub mod batch;
pub mod error;
pub mod fusion;
pub mod metrics;
pub mod morphology;
pub mod nifti;
pub mod phantom;
pub mod postprocess;
pub mod ranking;
pub mod regions;
pub mod synthprep;
pub mod volume;

pub use error::{Error, Result};
pub use regions::{BinaryMask, Region};
pub use volume::{Geometry, LabelVolume, RegionProbVolume, ScalarVolume};
