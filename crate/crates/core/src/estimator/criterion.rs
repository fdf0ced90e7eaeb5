//! Trimmed pseudo log-likelihood M_n(β).

use crate::cond_ecdf::Dataset;
use crate::copulas::{log_density_generic, CopulaModel};
use crate::error::{Error, Result};
use crate::kendall::{RankCache, TauEngine};
use crate::kernels::KernelSpec;
use crate::link::{invert_tau, link_from_engine};
use crate::pseudo::PseudoSample;

use super::IndexParam;

/// Leave-one-out link values at the kept rows.
#[derive(Debug, Clone, PartialEq)]
pub struct RowLinks {
    pub rows: Vec<usize>,
    pub theta: Vec<f64>,
    pub clamped: usize,
    /// Rows where the tau estimate failed and the near-independence value was used.
    pub fallbacks: usize,
}

pub(crate) fn row_links(model: &CopulaModel, eng: &TauEngine, pseudo: &PseudoSample) -> RowLinks {
    let rows = pseudo.kept_rows();
    let proj = eng.projection();
    let fallback = invert_tau(model, 0.0).0;
    let mut theta = Vec::with_capacity(rows.len());
    let mut clamped = 0;
    let mut fallbacks = 0;
    for &i in &rows {
        match link_from_engine(model, eng, proj[i], Some(i)) {
            Ok(l) => {
                if l.clamped {
                    clamped += 1;
                }
                theta.push(l.theta_hat);
            }
            Err(_) => {
                fallbacks += 1;
                theta.push(fallback);
            }
        }
    }
    RowLinks { rows, theta, clamped, fallbacks }
}

/// (1/(n_kept+1)) Σ_{kept i} ln c_{θ_i}(Û_i) for given per-row parameters.
/// `theta[r]` belongs to the r-th kept row.
pub fn pseudo_log_likelihood(pseudo: &PseudoSample, model: &CopulaModel, theta: &[f64]) -> Result<f64> {
    let rows = pseudo.kept_rows();
    if theta.len() != rows.len() {
        return Err(Error::DimensionMismatch { expected: rows.len(), got: theta.len() });
    }
    let mut s = 0.0;
    for (&i, &t) in rows.iter().zip(theta) {
        model.check(t)?;
        let u = pseudo.u_hat.row(i);
        let v = log_density_generic(model.family(), t, u.as_slice().expect("contiguous row"));
        if !v.is_finite() {
            return Err(Error::NonFiniteCriterion { row: i });
        }
        s += v;
    }
    Ok(s / (pseudo.n_kept as f64 + 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionValue {
    pub value: f64,
    pub links: RowLinks,
}

pub(crate) fn criterion_with_cache(
    data: &Dataset,
    cache: &RankCache,
    pseudo: &PseudoSample,
    model: &CopulaModel,
    beta: &[f64],
    kernel: &KernelSpec,
    h_tilde: f64,
) -> Result<CriterionValue> {
    let eng = TauEngine::new(data, cache, beta, kernel, h_tilde)?;
    let links = row_links(model, &eng, pseudo);
    let value = pseudo_log_likelihood(pseudo, model, &links.theta)?;
    Ok(CriterionValue { value, links })
}

/// The criterion M_n(β) with leave-one-out link estimates.
pub fn criterion(
    data: &Dataset,
    pseudo: &PseudoSample,
    model: &CopulaModel,
    beta: &IndexParam,
    kernel: &KernelSpec,
    h_tilde: f64,
) -> Result<f64> {
    let cache = RankCache::new(data);
    Ok(criterion_with_cache(data, &cache, pseudo, model, &beta.beta(), kernel, h_tilde)?.value)
}
