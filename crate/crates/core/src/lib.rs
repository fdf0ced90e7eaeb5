//! Single-index conditional copula estimation.
//!
//! The dependence between the components of X given covariates Z is modelled
//! by a parametric copula whose parameter varies with a scalar index β'Z:
//! θ(Z) = ψ(β'Z). The link ψ is estimated by smoothing conditional Kendall's
//! tau along the index, and β by maximizing a trimmed pseudo log-likelihood
//! built from pseudo-observations Û of the conditional margins.
//!
//! ```no_run
//! use sicopula::copulas::{CopulaModel, Family};
//! use sicopula::estimator::{fit, EstimationConfig};
//! use sicopula::simulate::{generate, DGPSpec};
//!
//! let sim = generate(&DGPSpec::tanh_gaussian(1000, 7)).unwrap();
//! let model = CopulaModel::new(Family::Gaussian, 2).unwrap();
//! let res = fit(&sim.data, &model, &EstimationConfig::default()).unwrap();
//! println!("beta = {:?}, se = {:?}", res.beta_hat.beta(), res.std_errors());
//! ```

pub mod cli;
pub mod cond_ecdf;
pub mod copulas;
pub mod dual;
pub mod error;
pub mod estimator;
pub mod kendall;
pub mod kernels;
pub mod link;
pub mod pseudo;
pub mod selftest;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
