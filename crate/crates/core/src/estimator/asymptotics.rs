//! Plug-in sandwich covariance Σ̂⁻¹ŜΣ̂⁻¹ / n_kept.

use crate::cond_ecdf::Dataset;
use crate::copulas::{theta_derivatives_unchecked, CopulaModel};
use crate::error::{Error, Result};
use crate::kendall::{RankCache, TauEngine};
use crate::kernels::KernelSpec;
use crate::pseudo::PseudoSample;
use nalgebra::{DMatrix, SymmetricEigen};

use super::criterion::row_links;
use super::IndexParam;

pub const MAX_CONDITION: f64 = 1e12;
pub const DEFAULT_FD_STEP: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct Asymptotics {
    pub sigma_hat: DMatrix<f64>,
    pub s_hat: DMatrix<f64>,
    pub cov: DMatrix<f64>,
}

impl Asymptotics {
    /// Symmetric 95% intervals for the free components.
    pub fn intervals(&self, beta_hat: &IndexParam) -> Vec<(f64, f64)> {
        beta_hat
            .free()
            .iter()
            .enumerate()
            .map(|(l, b)| {
                let se = self.cov[(l, l)].max(0.0).sqrt();
                (b - 1.959963984540054 * se, b + 1.959963984540054 * se)
            })
            .collect()
    }

    pub fn standard_errors(&self) -> Vec<f64> {
        (0..self.cov.nrows()).map(|l| self.cov[(l, l)].max(0.0).sqrt()).collect()
    }
}

/// Leave-one-out link values at the kept rows for the index `free`.
fn links_at(
    data: &Dataset,
    cache: &RankCache,
    pseudo: &PseudoSample,
    model: &CopulaModel,
    free: &[f64],
    kernel: &KernelSpec,
    h_tilde: f64,
) -> Result<Vec<f64>> {
    let beta = IndexParam::new(free.to_vec()).beta();
    let eng = TauEngine::new(data, cache, &beta, kernel, h_tilde)?;
    Ok(row_links(model, &eng, pseudo).theta)
}

pub(crate) fn asymptotics_with_cache(
    data: &Dataset,
    cache: &RankCache,
    pseudo: &PseudoSample,
    model: &CopulaModel,
    beta_hat: &IndexParam,
    kernel: &KernelSpec,
    h_tilde: f64,
    fd_step: f64,
) -> Result<Asymptotics> {
    let b0 = beta_hat.free().to_vec();
    let q = b0.len();
    let steps: Vec<f64> = b0.iter().map(|b| fd_step * (1.0 + b.abs())).collect();
    let at = |shift: &[(usize, f64)]| -> Result<Vec<f64>> {
        let mut b = b0.clone();
        for &(l, s) in shift {
            b[l] += s * steps[l];
        }
        links_at(data, cache, pseudo, model, &b, kernel, h_tilde)
    };
    let center = at(&[])?;
    let rows = pseudo.kept_rows();
    let nk = rows.len();
    let mut grad = vec![vec![0.0; q]; nk];
    let mut hess = vec![DMatrix::<f64>::zeros(q, q); nk];
    let mut plus = Vec::with_capacity(q);
    let mut minus = Vec::with_capacity(q);
    for l in 0..q {
        plus.push(at(&[(l, 1.0)])?);
        minus.push(at(&[(l, -1.0)])?);
    }
    for l in 0..q {
        for r in 0..nk {
            grad[r][l] = (plus[l][r] - minus[l][r]) / (2.0 * steps[l]);
            hess[r][(l, l)] = (plus[l][r] - 2.0 * center[r] + minus[l][r]) / (steps[l] * steps[l]);
        }
    }
    for a in 0..q {
        for b in (a + 1)..q {
            let pp = at(&[(a, 1.0), (b, 1.0)])?;
            let pm = at(&[(a, 1.0), (b, -1.0)])?;
            let mp = at(&[(a, -1.0), (b, 1.0)])?;
            let mm = at(&[(a, -1.0), (b, -1.0)])?;
            for r in 0..nk {
                let v = (pp[r] - pm[r] - mp[r] + mm[r]) / (4.0 * steps[a] * steps[b]);
                hess[r][(a, b)] = v;
                hess[r][(b, a)] = v;
            }
        }
    }
    let mut sigma = DMatrix::<f64>::zeros(q, q);
    let mut s = DMatrix::<f64>::zeros(q, q);
    for (r, &i) in rows.iter().enumerate() {
        let u = pseudo.u_hat.row(i);
        let (_, d1, d2) = theta_derivatives_unchecked(model.family(), center[r], u.as_slice().expect("row"));
        if !(d1.is_finite() && d2.is_finite()) {
            return Err(Error::NonFiniteCriterion { row: i });
        }
        for a in 0..q {
            for b in 0..q {
                let g = grad[r][a] * grad[r][b];
                sigma[(a, b)] += d1 * hess[r][(a, b)] + d2 * g;
                s[(a, b)] += d1 * d1 * g;
            }
        }
    }
    sigma /= nk as f64;
    s /= nk as f64;
    let sigma = symmetrize(&sigma);
    let s = symmetrize(&s);
    let eig = SymmetricEigen::new(sigma.clone());
    let abs: Vec<f64> = eig.eigenvalues.iter().map(|v| v.abs()).collect();
    let max = abs.iter().cloned().fold(0.0, f64::max);
    let min = abs.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularHessian { condition });
    }
    let inv_vals = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v));
    let sigma_inv = &eig.eigenvectors * inv_vals * eig.eigenvectors.transpose();
    let cov = symmetrize(&(&sigma_inv * &s * &sigma_inv)) / nk as f64;
    Ok(Asymptotics { sigma_hat: sigma, s_hat: s, cov: floor_psd(&cov) })
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn floor_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    if eig.eigenvalues.iter().all(|v| *v >= 0.0) {
        return m.clone();
    }
    let vals = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.max(0.0)));
    symmetrize(&(&eig.eigenvectors * vals * eig.eigenvectors.transpose()))
}

/// Σ̂, Ŝ and the sandwich covariance at `beta_hat`, with index bandwidth held at `h_tilde`.
pub fn estimate_asymptotics(
    data: &Dataset,
    pseudo: &PseudoSample,
    model: &CopulaModel,
    beta_hat: &IndexParam,
    kernel: &KernelSpec,
    h_tilde: f64,
) -> Result<Asymptotics> {
    let cache = RankCache::new(data);
    asymptotics_with_cache(data, &cache, pseudo, model, beta_hat, kernel, h_tilde, DEFAULT_FD_STEP)
}
