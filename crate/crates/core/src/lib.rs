//! Language-guided category-level 6-DoF object localization on synthetic
//! RGB-D tabletop scenes.
//!
//! Two stages run back to back:
//!
//! 1. **Grounding** – parse a free-form instruction into a structured query
//!    and pick the matching detection with subject / location / relation
//!    scoring ([`instruct`], [`grounding`]).
//! 2. **Localization** – crop the depth image by the chosen box or mask,
//!    back-project, strip outliers, and fit a category-level pose and size
//!    ([`cloudseg`], [`posefit`]).
//!
//! [`scene`] supplies deterministic ground truth, [`evalkit`] scores the
//! output, and [`harness`] runs whole experiments.

pub mod cloudseg;
pub mod error;
pub mod evalkit;
pub mod geom;
pub mod grounding;
pub mod harness;
pub mod instruct;
pub mod posefit;
pub mod raster;
pub mod rng;
pub mod scene;

pub use error::{Error, Result};
