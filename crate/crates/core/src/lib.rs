//! Zero-shot, transductive, generalized zero-shot and few-shot recognition
//! with attribute-predicted diagonal Gaussian class models.
//!
//! Each class is a diagonal Gaussian in feature space. Seen-class Gaussians
//! are fit by maximum likelihood, a regression from class attributes to
//! Gaussian parameters is learned from them (with an autoencoder-style
//! reconstruction penalty, solved as a Sylvester equation), and the
//! regression then predicts Gaussians for classes with no training data.

pub mod dataset;
pub mod em;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod gaussian;
pub mod linalg;
pub mod metrics;
pub mod pipelines;
pub mod regression;

pub use error::{Error, Result};
pub use exec::Exec;
pub use gaussian::{ClassGaussian, VARIANCE_FLOOR};
pub use linalg::{KernelSpec, Matrix};
pub use regression::{HyperParams, ParamMap};
