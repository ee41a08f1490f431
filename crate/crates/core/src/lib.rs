//! Expectation-maximization transfer learning for labeled Gaussian mixture
//! models and learning vector quantization classifiers.
//!
//! A source-space classifier (an [`lgmm::LabeledGmm`], or an
//! [`lvq::LvqModel`] converted into one) is kept fixed while
//! [`transfer::em_transfer`] learns a linear map `H` that sends target-space
//! data back into the source space, maximizing the likelihood of the labeled
//! target data under the source model.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod datagen;
pub mod dataset;
pub mod document;
pub mod error;
pub mod experiment;
pub mod lgmm;
pub mod linalg;
pub mod lvq;
pub mod optim;
pub mod par;
pub mod rng;
pub mod transfer;

pub use dataset::Dataset;
pub use error::{Error, Result};
pub use lgmm::{LabeledGmm, PrecisionPolicy};
pub use par::Execution;
