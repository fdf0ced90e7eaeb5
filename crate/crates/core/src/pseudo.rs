//! Pseudo-observations and trimming indicators.

use crate::cond_ecdf::{pseudo_marginals, Dataset, TrimBox};
use crate::copulas::EPS_U;
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::stats::norm_cdf;
use ndarray::Array2;
use std::fmt;
use std::sync::Arc;

/// A conditional marginal CDF F_k(x | z) supplied by the caller.
pub trait ConditionalCdf: Send + Sync {
    /// `k` is the zero-based X column.
    fn cdf(&self, k: usize, x: f64, z: &[f64]) -> f64;
}

/// X_k = a_k'Z + σ_k ε with standard normal ε.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianLocation {
    pub loadings: Vec<Vec<f64>>,
    pub scales: Vec<f64>,
}

impl ConditionalCdf for GaussianLocation {
    fn cdf(&self, k: usize, x: f64, z: &[f64]) -> f64 {
        let m: f64 = self.loadings[k].iter().zip(z).map(|(a, b)| a * b).sum();
        norm_cdf((x - m) / self.scales[k])
    }
}

#[derive(Clone)]
pub enum MarginModel {
    Nonparametric { kernel: KernelSpec, h: Vec<f64>, leave_one_out: bool },
    Parametric(Arc<dyn ConditionalCdf>),
}

impl fmt::Debug for MarginModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarginModel::Nonparametric { kernel, h, leave_one_out } => f
                .debug_struct("Nonparametric")
                .field("kernel", kernel)
                .field("h", h)
                .field("leave_one_out", leave_one_out)
                .finish(),
            MarginModel::Parametric(_) => f.write_str("Parametric(..)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoSample {
    pub u_hat: Array2<f64>,
    pub omega: Vec<bool>,
    pub n_kept: usize,
    /// Rows dropped because their kernel window was empty.
    pub empty_rows: usize,
}

impl PseudoSample {
    /// Use known uniforms (for instance the true U of a simulation) directly.
    pub fn from_uniforms(u: Array2<f64>, data: &Dataset, trim: &TrimBox) -> Result<PseudoSample> {
        if u.nrows() != data.n() || u.ncols() != data.d() {
            return Err(Error::DimensionMismatch { expected: data.n() * data.d(), got: u.len() });
        }
        let u = u.mapv(|v| v.clamp(EPS_U, 1.0 - EPS_U));
        finish(data, u, vec![false; data.n()], trim)
    }

    pub fn kept_rows(&self) -> Vec<usize> {
        (0..self.omega.len()).filter(|&i| self.omega[i]).collect()
    }
}

/// Minimum number of kept rows for an index of length `m`.
pub fn required_rows(m: usize) -> usize {
    m + 5
}

fn finish(data: &Dataset, u: Array2<f64>, empty: Vec<bool>, trim: &TrimBox) -> Result<PseudoSample> {
    if trim.m_z.len() != data.p() {
        return Err(Error::DimensionMismatch { expected: data.p(), got: trim.m_z.len() });
    }
    let omega: Vec<bool> = (0..data.n())
        .map(|i| !empty[i] && trim.contains_z(data.z().row(i)) && trim.contains_u(u.row(i)))
        .collect();
    let n_kept = omega.iter().filter(|w| **w).count();
    let required = required_rows(data.p());
    if n_kept < required {
        return Err(Error::InsufficientData { kept: n_kept, required });
    }
    let empty_rows = empty.iter().filter(|e| **e).count();
    Ok(PseudoSample { u_hat: u, omega, n_kept, empty_rows })
}

pub fn build_pseudo_sample(data: &Dataset, margin: &MarginModel, trim: &TrimBox) -> Result<PseudoSample> {
    match margin {
        MarginModel::Nonparametric { kernel, h, leave_one_out } => {
            let pm = pseudo_marginals(data, kernel, h, *leave_one_out)?;
            finish(data, pm.u, pm.empty, trim)
        }
        MarginModel::Parametric(cdf) => {
            let z = data.z();
            let x = data.x();
            let u = Array2::from_shape_fn((data.n(), data.d()), |(i, k)| {
                let zi: Vec<f64> = z.row(i).to_vec();
                cdf.cdf(k, x[[i, k]], &zi).clamp(EPS_U, 1.0 - EPS_U)
            });
            finish(data, u, vec![false; data.n()], trim)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> Dataset {
        let x = Array2::from_shape_fn((30, 2), |(i, k)| ((i * 13 + k * 5) % 30) as f64);
        let z = Array2::from_shape_fn((30, 1), |(i, _)| (i as f64 - 15.0) / 10.0);
        Dataset::new(x, z).unwrap()
    }

    #[test]
    fn no_trim_keeps_everything() {
        let d = data();
        let u = Array2::from_elem((30, 2), 0.3);
        let ps = PseudoSample::from_uniforms(u, &d, &TrimBox::none(1)).unwrap();
        assert_eq!(ps.n_kept, 30);
    }

    #[test]
    fn covariate_box_drops_rows() {
        let d = data();
        let u = Array2::from_elem((30, 2), 0.3);
        let ps = PseudoSample::from_uniforms(u, &d, &TrimBox::new(vec![1.0], 0.0).unwrap()).unwrap();
        assert!(!ps.omega[0]);
        assert!(ps.omega[15]);
    }

    #[test]
    fn too_few_rows() {
        let d = data();
        let u = Array2::from_elem((30, 2), 0.01);
        let r = PseudoSample::from_uniforms(u, &d, &TrimBox::new(vec![10.0], 0.1).unwrap());
        assert_eq!(r, Err(Error::InsufficientData { kept: 0, required: 6 }));
    }
}
