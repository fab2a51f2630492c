//! Economic complexity toolkit.
//!
//! The crate covers the full chain from raw bilateral trade flows to
//! capability inference:
//!
//! * [`trade`] and [`indicators`]: ingest export flows and development indicators,
//!   compute revealed comparative advantage and the binary specialization matrix.
//! * [`complexity`]: Method of Reflections and the eigenvector ECI/PCI.
//! * [`product_space`]: proximity network and its topology statistics.
//! * [`capability`]: the block-structured capability space, product generation
//!   and the CES production function.
//! * [`calibrate`]: CMA-ES fitting of the block parameters to an empirical network.
//! * [`infer`]: KDE targets and simulated annealing over country capability sets.
//! * [`econometrics`]: OLS with HC1 errors, VIF and ordered logit.

pub mod calibrate;
pub mod capability;
pub mod complexity;
pub mod econometrics;
mod error;
pub mod indicators;
pub mod infer;
pub mod io;
pub mod linalg;
pub mod product_space;
pub mod seed;
pub mod stats;
pub mod trade;

pub use error::{Error, Result};
