//! Link estimation: conditional tau mapped to a copula parameter.

use crate::cond_ecdf::Dataset;
use crate::copulas::{CopulaModel, Family};
use crate::error::Result;
use crate::kendall::{RankCache, TauEngine, TauEstimate};
use crate::kernels::KernelSpec;
use serde::{Deserialize, Serialize};

/// Margin kept from the edges of the attainable tau range when clamping.
pub const TAU_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkEstimate {
    pub theta_hat: f64,
    pub tau_hat: TauEstimate,
    pub clamped: bool,
}

/// Map a tau value to the parameter domain. Values outside the attainable
/// range are pulled inside by [`TAU_MARGIN`] and flagged.
pub fn invert_tau(model: &CopulaModel, tau: f64) -> (f64, bool) {
    let (lo, hi) = model.tau_range();
    let (t, clamped) = if tau > lo && tau < hi {
        (tau, false)
    } else {
        (tau.clamp(lo + TAU_MARGIN, hi - TAU_MARGIN), true)
    };
    match model.tau_to_theta(t) {
        Ok(theta) => (theta, clamped),
        // NaN input: fall back to the parameter closest to independence.
        Err(_) => (model.tau_to_theta(lo.max(0.0) + TAU_MARGIN).unwrap_or(model.domain().0), true),
    }
}

/// Tau functional used by the link for this family: Joe's tau, or the
/// pairwise average for the exchangeable Gaussian model.
pub(crate) fn link_tau(model: &CopulaModel, eng: &TauEngine, y: f64, exclude: Option<usize>) -> Result<TauEstimate> {
    if model.family() == Family::Gaussian && model.dim() > 2 {
        eng.pairwise_mean_tau(y, exclude)
    } else {
        eng.tau(y, exclude)
    }
}

pub(crate) fn link_from_engine(
    model: &CopulaModel,
    eng: &TauEngine,
    y: f64,
    exclude: Option<usize>,
) -> Result<LinkEstimate> {
    let tau_hat = link_tau(model, eng, y, exclude)?;
    let (theta_hat, clamped) = invert_tau(model, tau_hat.value);
    Ok(LinkEstimate { theta_hat, tau_hat, clamped })
}

pub fn estimate_link(
    model: &CopulaModel,
    data: &Dataset,
    beta: &[f64],
    y: f64,
    kernel: &KernelSpec,
    h_tilde: f64,
) -> Result<LinkEstimate> {
    let cache = RankCache::new(data);
    let eng = TauEngine::new(data, &cache, beta, kernel, h_tilde)?;
    link_from_engine(model, &eng, y, None)
}

pub fn link_curve(
    model: &CopulaModel,
    data: &Dataset,
    beta: &[f64],
    y_grid: &[f64],
    kernel: &KernelSpec,
    h_tilde: f64,
) -> Result<Vec<Result<LinkEstimate>>> {
    let cache = RankCache::new(data);
    let eng = TauEngine::new(data, &cache, beta, kernel, h_tilde)?;
    Ok(y_grid.iter().map(|&y| link_from_engine(model, &eng, y, None)).collect())
}

/// Fraction of successfully estimated grid points whose tau was clamped.
pub fn clamp_fraction(curve: &[Result<LinkEstimate>]) -> f64 {
    if curve.is_empty() {
        return 0.0;
    }
    let flagged = curve.iter().filter(|r| matches!(r, Ok(l) if l.clamped)).count();
    flagged as f64 / curve.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_map() {
        let m = CopulaModel::new(Family::Gaussian, 2).unwrap();
        let (t, c) = invert_tau(&m, 0.5);
        assert!((t - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(!c);
    }

    #[test]
    fn clayton_clamps_nonpositive_tau() {
        let m = CopulaModel::new(Family::Clayton, 2).unwrap().with_bounds(0.0, 50.0).unwrap();
        let (theta, c) = invert_tau(&m, -0.2);
        assert!(c);
        assert!((m.theta_to_tau(theta).unwrap() - 1e-6).abs() < 1e-12);
    }
}
