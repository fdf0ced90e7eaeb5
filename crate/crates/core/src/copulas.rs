//! Gaussian (exchangeable), Clayton and Gumbel copulas.
//!
//! Each family has a scalar parameter. Log-densities are written generically
//! over [`Scalar`] so the same code yields values and exact derivatives.

use crate::dual::{Dual2, Scalar};
use crate::error::{Error, Result};
use crate::stats::{norm_cdf, norm_ppf};
use nalgebra::DMatrix;
use ndarray::Array2;
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Clamp applied to every coordinate of a [`UnitPoint`].
pub const EPS_U: f64 = 1e-10;
/// Lower bound on the smallest eigenvalue of a Gaussian correlation matrix.
pub const LAMBDA_MIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Gaussian,
    Clayton,
    Gumbel,
}

impl Family {
    pub fn parse(s: &str) -> Option<Family> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Some(Family::Gaussian),
            "clayton" => Some(Family::Clayton),
            "gumbel" => Some(Family::Gumbel),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Clayton => "clayton",
            Family::Gumbel => "gumbel",
        }
    }
}

/// A point of the open unit cube.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitPoint(Vec<f64>);

impl UnitPoint {
    /// Clamps coordinates into [EPS_U, 1 - EPS_U]; rejects values outside [0, 1].
    pub fn new(u: &[f64]) -> Result<UnitPoint> {
        let mut v = Vec::with_capacity(u.len());
        for &x in u {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::InvalidUnitPoint);
            }
            v.push(x.clamp(EPS_U, 1.0 - EPS_U));
        }
        Ok(UnitPoint(v))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopulaModel {
    family: Family,
    dim: usize,
    lo: f64,
    hi: f64,
}

impl CopulaModel {
    /// Model with the default admissible parameter interval.
    pub fn new(family: Family, dim: usize) -> Result<CopulaModel> {
        if dim < 2 {
            return Err(Error::InvalidParameter(format!("copula dimension must be >= 2, got {dim}")));
        }
        let (lo, hi) = match family {
            Family::Gaussian => (-(1.0 - LAMBDA_MIN) / (dim - 1) as f64, 1.0 - LAMBDA_MIN),
            Family::Clayton => (0.01, 50.0),
            Family::Gumbel => (1.001, 50.0),
        };
        Ok(CopulaModel { family, dim, lo, hi })
    }

    /// Replace the open parameter interval. It must lie inside the family's natural domain.
    pub fn with_bounds(mut self, lo: f64, hi: f64) -> Result<CopulaModel> {
        let (nlo, nhi) = match self.family {
            Family::Gaussian => (-1.0 / (self.dim - 1) as f64, 1.0),
            Family::Clayton => (0.0, f64::INFINITY),
            Family::Gumbel => (1.0, f64::INFINITY),
        };
        if !(lo < hi && lo >= nlo && hi <= nhi && hi.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bounds ({lo}, {hi}) not inside ({nlo}, {nhi})"
            )));
        }
        self.lo = lo;
        self.hi = hi;
        Ok(self)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn contains(&self, theta: f64) -> bool {
        theta > self.lo && theta < self.hi
    }

    pub fn check(&self, theta: f64) -> Result<()> {
        if self.contains(theta) {
            Ok(())
        } else {
            Err(Error::ThetaOutOfDomain { theta, lo: self.lo, hi: self.hi })
        }
    }

    fn check_point(&self, u: &UnitPoint) -> Result<()> {
        if u.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: u.dim() });
        }
        Ok(())
    }

    pub fn log_density(&self, theta: f64, u: &UnitPoint) -> Result<f64> {
        self.check(theta)?;
        self.check_point(u)?;
        Ok(log_density_generic(self.family, theta, u.as_slice()))
    }

    /// ∂θ ln c_θ(u).
    pub fn grad_theta_log_density(&self, theta: f64, u: &UnitPoint) -> Result<f64> {
        Ok(self.theta_derivatives(theta, u)?.1)
    }

    /// (ln c, ∂θ ln c, ∂²θ ln c).
    pub fn theta_derivatives(&self, theta: f64, u: &UnitPoint) -> Result<(f64, f64, f64)> {
        self.check(theta)?;
        self.check_point(u)?;
        Ok(theta_derivatives_unchecked(self.family, theta, u.as_slice()))
    }

    /// ∇_u ln c_θ(u).
    pub fn grad_u_log_density(&self, theta: f64, u: &UnitPoint) -> Result<Vec<f64>> {
        self.check(theta)?;
        self.check_point(u)?;
        let us = u.as_slice();
        let t = Dual2::cst(theta);
        Ok((0..self.dim)
            .map(|k| {
                let du: Vec<Dual2> = us
                    .iter()
                    .enumerate()
                    .map(|(j, &x)| if j == k { Dual2::var(x) } else { Dual2::cst(x) })
                    .collect();
                log_density_generic(self.family, t, &du).d1
            })
            .collect())
    }

    /// Kendall's tau (Joe's multivariate version for Archimedean families,
    /// pairwise tau for the Gaussian family).
    pub fn theta_to_tau(&self, theta: f64) -> Result<f64> {
        self.check(theta)?;
        Ok(self.tau_unchecked(theta))
    }

    fn tau_unchecked(&self, theta: f64) -> f64 {
        let d = self.dim;
        match self.family {
            Family::Gaussian => 2.0 / PI * theta.asin(),
            Family::Clayton => {
                let mut prod = 2f64.powi(d as i32);
                for k in 0..d {
                    let kf = k as f64;
                    prod *= (1.0 + kf * theta) / (2.0 + kf * theta);
                }
                (prod - 1.0) / (2f64.powi(d as i32 - 1) - 1.0)
            }
            Family::Gumbel => {
                if d == 2 {
                    return (theta - 1.0) / theta;
                }
                let mean_c = 1.0 - gumbel_kendall_integral(1.0 / theta, d);
                (2f64.powi(d as i32) * mean_c - 1.0) / (2f64.powi(d as i32 - 1) - 1.0)
            }
        }
    }

    /// Open interval of tau values attained on the parameter domain.
    pub fn tau_range(&self) -> (f64, f64) {
        (self.tau_unchecked(self.lo), self.tau_unchecked(self.hi))
    }

    pub fn tau_to_theta(&self, tau: f64) -> Result<f64> {
        let (tlo, thi) = self.tau_range();
        if !(tau > tlo && tau < thi) {
            return Err(Error::InvalidParameter(format!(
                "tau {tau} outside attainable range ({tlo}, {thi})"
            )));
        }
        let closed = match (self.family, self.dim) {
            (Family::Gaussian, _) => Some((PI * tau / 2.0).sin()),
            (Family::Clayton, 2) => Some(2.0 * tau / (1.0 - tau)),
            (Family::Gumbel, 2) => Some(1.0 / (1.0 - tau)),
            _ => None,
        };
        match closed {
            Some(t) if self.contains(t) => Ok(t),
            _ => Ok(self.bisect_tau(tau)),
        }
    }

    fn bisect_tau(&self, tau: f64) -> f64 {
        let (mut a, mut b) = (self.lo, self.hi);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if self.tau_unchecked(mid) < tau {
                a = mid;
            } else {
                b = mid;
            }
            if b - a < 1e-14 * mid.abs().max(1.0) {
                break;
            }
        }
        0.5 * (a + b)
    }

    /// Copula CDF. Gaussian CDFs are only available for d = 2, or d > 2 with ρ ≥ 0.
    pub fn cdf(&self, theta: f64, u: &UnitPoint) -> Result<f64> {
        self.check(theta)?;
        self.check_point(u)?;
        let u = u.as_slice();
        match self.family {
            Family::Clayton => {
                let s: f64 = u.iter().map(|&x| (-theta * x.ln()).exp_m1()).sum();
                Ok((-s.ln_1p() / theta).exp())
            }
            Family::Gumbel => {
                let s: f64 = u.iter().map(|&x| (-x.ln()).powf(theta)).sum();
                Ok((-s.powf(1.0 / theta)).exp())
            }
            Family::Gaussian => {
                let x: Vec<f64> = u.iter().map(|&v| norm_ppf(v)).collect();
                if self.dim == 2 {
                    Ok(bvn_cdf(x[0], x[1], theta))
                } else if theta >= 0.0 {
                    Ok(exchangeable_normal_cdf(&x, theta))
                } else {
                    Err(Error::InvalidParameter(
                        "Gaussian CDF with negative equicorrelation and d > 2".into(),
                    ))
                }
            }
        }
    }

    /// `n` i.i.d. draws as an n×d matrix.
    pub fn sample(&self, theta: f64, n: usize, seed: u64) -> Result<Array2<f64>> {
        self.check(theta)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sampler = Sampler::new(self, theta)?;
        let mut out = Array2::zeros((n, self.dim));
        let mut row = vec![0.0; self.dim];
        for i in 0..n {
            sampler.draw(&mut rng, &mut row);
            for k in 0..self.dim {
                out[[i, k]] = row[k];
            }
        }
        Ok(out)
    }
}

/// Precomputed state for repeated draws at a fixed parameter.
pub struct Sampler {
    family: Family,
    dim: usize,
    theta: f64,
    chol: Option<DMatrix<f64>>,
    gamma: Option<Gamma<f64>>,
}

impl Sampler {
    pub fn new(model: &CopulaModel, theta: f64) -> Result<Sampler> {
        model.check(theta)?;
        let d = model.dim;
        let mut s = Sampler { family: model.family, dim: d, theta, chol: None, gamma: None };
        match model.family {
            Family::Gaussian => {
                let r = DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { theta });
                let c = r
                    .cholesky()
                    .ok_or_else(|| Error::InvalidParameter("correlation not positive definite".into()))?;
                s.chol = Some(c.l());
            }
            Family::Clayton => {
                s.gamma = Some(
                    Gamma::new(1.0 / theta, 1.0).map_err(|e| Error::InvalidParameter(e.to_string()))?,
                );
            }
            Family::Gumbel => {}
        }
        Ok(s)
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let d = self.dim;
        match self.family {
            Family::Gaussian => {
                let l = self.chol.as_ref().expect("cholesky factor");
                let e: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                for i in 0..d {
                    let mut x = 0.0;
                    for j in 0..=i {
                        x += l[(i, j)] * e[j];
                    }
                    out[i] = norm_cdf(x);
                }
            }
            Family::Clayton => {
                let v = self.gamma.as_ref().expect("gamma law").sample(rng);
                for o in out.iter_mut().take(d) {
                    let e: f64 = rng.sample(Exp1);
                    *o = (-(e / v).ln_1p() / self.theta).exp();
                }
            }
            Family::Gumbel => {
                let alpha = 1.0 / self.theta;
                let s = positive_stable(rng, alpha);
                for o in out.iter_mut().take(d) {
                    let e: f64 = rng.sample(Exp1);
                    *o = (-(e / s).powf(alpha)).exp();
                }
            }
        }
        for o in out.iter_mut().take(d) {
            *o = o.clamp(EPS_U, 1.0 - EPS_U);
        }
    }
}

/// Positive stable variate with Laplace transform exp(-t^alpha) (Kanter's representation).
fn positive_stable<R: Rng + ?Sized>(rng: &mut R, alpha: f64) -> f64 {
    if alpha > 1.0 - 1e-12 {
        return 1.0;
    }
    let u = PI * rng.random::<f64>();
    let w: f64 = rng.sample(Exp1);
    if u <= 0.0 {
        return positive_stable(rng, alpha);
    }
    let ln_a = ((alpha * u).sin().ln() - u.sin().ln()) / (1.0 - alpha)
        + ((1.0 - alpha) * u).sin().ln()
        - (alpha * u).sin().ln();
    (((1.0 - alpha) / alpha) * (ln_a - w.ln())).exp()
}

pub(crate) fn theta_derivatives_unchecked(family: Family, theta: f64, u: &[f64]) -> (f64, f64, f64) {
    let du: Vec<Dual2> = u.iter().map(|&x| Dual2::cst(x)).collect();
    let r = log_density_generic(family, Dual2::var(theta), &du);
    (r.v, r.d1, r.d2)
}

/// ln c_θ(u) for any scalar type; no domain checks.
pub fn log_density_generic<S: Scalar>(family: Family, theta: S, u: &[S]) -> S {
    let d = u.len();
    match family {
        Family::Gaussian => {
            let rho = theta;
            let dm1 = (d - 1) as f64;
            let mut sx = S::cst(0.0);
            let mut sxx = S::cst(0.0);
            for &uk in u {
                let x = uk.norm_ppf();
                sx = sx + x;
                sxx = sxx + x * x;
            }
            let one_m = S::cst(1.0) - rho;
            let one_p = rho * dm1 + 1.0;
            let q = (sxx - rho * sx * sx / one_p) / one_m;
            -(one_m.ln() * dm1 + one_p.ln()) * 0.5 - (q - sxx) * 0.5
        }
        Family::Clayton => {
            let mut out = S::cst(0.0);
            for k in 1..d {
                out = out + (theta * k as f64 + 1.0).ln();
            }
            let mut slog = S::cst(0.0);
            let mut sa = S::cst(0.0);
            for &uk in u {
                let l = uk.ln();
                slog = slog + l;
                sa = sa + (-(theta * l)).exp_m1();
            }
            let ln_a = sa.ln_1p();
            out - (theta + 1.0) * slog - (theta.recip() + d as f64) * ln_a
        }
        Family::Gumbel => {
            let alpha = theta.recip();
            let mut s = S::cst(0.0);
            let mut tail = S::cst(0.0);
            let ln_theta = theta.ln();
            for &uk in u {
                let lu = uk.ln();
                let lt = (-lu).ln();
                s = s + (lt * theta).exp();
                tail = tail + ln_theta + (theta - 1.0) * lt - lu;
            }
            let x = s.pow(alpha);
            let q = gumbel_q_poly(alpha, d);
            let qd = &q[d];
            let mut qv = S::cst(0.0);
            for c in qd.iter().rev() {
                qv = qv * x + *c;
            }
            -x + qv.ln() - s.ln() * d as f64 + tail
        }
    }
}

/// Coefficients of Q_k(x) = (-1)^k s^k ψ^(k)(s) / ψ(s), k = 0..=d, for the
/// generator ψ(s) = exp(-s^α) written in x = s^α. All coefficients are ≥ 0.
fn gumbel_q_poly<S: Scalar>(alpha: S, d: usize) -> Vec<Vec<S>> {
    // a[j] = α(1-α)(2-α)...(j-1-α), j ≥ 1
    let mut a = vec![S::cst(0.0); d + 1];
    if d >= 1 {
        a[1] = alpha;
    }
    for j in 2..=d {
        a[j] = a[j - 1] * (S::cst((j - 1) as f64) - alpha);
    }
    let mut q: Vec<Vec<S>> = vec![vec![S::cst(1.0)]];
    for k in 0..d {
        let mut next = vec![S::cst(0.0); k + 2];
        let mut binom = 1.0;
        for j in 0..=k {
            let prev = &q[k - j];
            let f = a[j + 1] * binom;
            for (m, c) in prev.iter().enumerate() {
                next[m + 1] = next[m + 1] + f * *c;
            }
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
        q.push(next);
    }
    q
}

/// ∫₀¹ K(t) dt for the Gumbel Kendall distribution K.
fn gumbel_kendall_integral(alpha: f64, d: usize) -> f64 {
    let q = gumbel_q_poly(alpha, d - 1);
    let mut total = 0.0;
    let mut kfact = 1.0;
    for (k, qk) in q.iter().enumerate().take(d) {
        if k > 0 {
            kfact *= k as f64;
        }
        let mut mfact = 1.0;
        let mut s = 0.0;
        for (m, c) in qk.iter().enumerate() {
            if m > 0 {
                mfact *= m as f64;
            }
            s += c * mfact / 2f64.powi(m as i32 + 1);
        }
        total += s / kfact;
    }
    total
}

/// Bivariate standard normal CDF via Plackett's integral.
pub fn bvn_cdf(h: f64, k: f64, rho: f64) -> f64 {
    let f = |r: f64| {
        let om = 1.0 - r * r;
        (-(h * h - 2.0 * r * h * k + k * k) / (2.0 * om)).exp() / om.sqrt()
    };
    let integral = crate::kernels::simpson(f, 0.0, rho, 201);
    norm_cdf(h) * norm_cdf(k) + integral / (2.0 * PI)
}

/// P(X ≤ x) for an exchangeable normal vector with correlation ρ ≥ 0.
fn exchangeable_normal_cdf(x: &[f64], rho: f64) -> f64 {
    let sr = rho.sqrt();
    let sc = (1.0 - rho).sqrt();
    let f = |w: f64| {
        crate::stats::norm_pdf(w) * x.iter().map(|&xk| norm_cdf((xk - sr * w) / sc)).product::<f64>()
    };
    crate::kernels::simpson(f, -9.0, 9.0, 2001)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(u: &[f64]) -> UnitPoint {
        UnitPoint::new(u).unwrap()
    }

    #[test]
    fn reference_log_densities() {
        let g = CopulaModel::new(Family::Gaussian, 2).unwrap();
        assert_eq!(g.log_density(0.0, &pt(&[0.2, 0.9])).unwrap(), 0.0);
        let c = CopulaModel::new(Family::Clayton, 2).unwrap();
        let want = (192.0 * 7f64.powf(-2.5)).ln();
        assert!((c.log_density(2.0, &pt(&[0.5, 0.5])).unwrap() - want).abs() < 1e-12);
        let gu = CopulaModel::new(Family::Gumbel, 2).unwrap().with_bounds(1.0, 50.0).unwrap();
        assert!(gu.log_density(1.0 + 1e-9, &pt(&[0.3, 0.7])).unwrap().abs() < 1e-6);
    }

    #[test]
    fn gumbel_bivariate_closed_form() {
        let m = CopulaModel::new(Family::Gumbel, 2).unwrap();
        let (u, v, th) = (0.3f64, 0.6f64, 2.5f64);
        let (a, b) = ((-u.ln()).powf(th), (-v.ln()).powf(th));
        let s = a + b;
        let cval = (-s.powf(1.0 / th)).exp();
        let dens = cval / (u * v) * s.powf(-2.0 + 2.0 / th) * (u.ln() * v.ln()).powf(th - 1.0)
            * (1.0 + (th - 1.0) * s.powf(-1.0 / th));
        assert!((m.log_density(th, &pt(&[u, v])).unwrap() - dens.ln()).abs() < 1e-12);
    }

    #[test]
    fn tau_examples() {
        let c2 = CopulaModel::new(Family::Clayton, 2).unwrap();
        assert!((c2.theta_to_tau(2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((c2.tau_to_theta(0.5).unwrap() - 2.0).abs() < 1e-12);
        assert!((c2.bisect_tau(0.5) - 2.0).abs() < 1e-10);
        let g = CopulaModel::new(Family::Gaussian, 2).unwrap();
        assert!((g.theta_to_tau((PI / 4.0).sin()).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(g.tau_to_theta(0.0).unwrap(), 0.0);
        let gu = CopulaModel::new(Family::Gumbel, 2).unwrap();
        assert!((gu.tau_to_theta(0.5).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gumbel_tau_general_formula_matches_bivariate() {
        let al = 1.0 / 3.0;
        assert!((1.0 - gumbel_kendall_integral(al, 2) - (0.5 - al / 4.0)).abs() < 1e-15);
    }

    #[test]
    fn derivatives_match_differences() {
        let m = CopulaModel::new(Family::Clayton, 2).unwrap();
        let u = pt(&[0.5, 0.5]);
        let g = m.grad_theta_log_density(2.0, &u).unwrap();
        let fd = (m.log_density(2.0 + 1e-6, &u).unwrap() - m.log_density(2.0 - 1e-6, &u).unwrap()) / 2e-6;
        assert!((g - fd).abs() < 1e-8);
        let gauss = CopulaModel::new(Family::Gaussian, 2).unwrap();
        assert!(gauss.grad_theta_log_density(0.0, &u).unwrap().abs() < 1e-15);
        let gu = gauss.grad_u_log_density(0.0, &pt(&[0.3, 0.8])).unwrap();
        assert!(gu.iter().all(|v| v.abs() < 1e-12));
    }
}
