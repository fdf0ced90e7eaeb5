//! Univariate kernels, higher-order constructions and product weights.
//!
//! A kernel of order `s` is stored as `base(u) * P(u²)` where `P` is a
//! polynomial of degree `s/2 - 1` chosen so that the moments of order
//! `1..s-1` vanish.

use crate::error::{Error, Result};
use crate::stats::{norm_cdf, norm_pdf};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

const GAUSS_TRUNC: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelBase {
    Epanechnikov,
    Quartic,
    /// Standard normal density truncated to [-5, 5] and renormalized.
    Gaussian,
}

impl KernelBase {
    pub fn parse(s: &str) -> Option<KernelBase> {
        match s.to_ascii_lowercase().as_str() {
            "epanechnikov" | "epa" => Some(KernelBase::Epanechnikov),
            "quartic" | "biweight" => Some(KernelBase::Quartic),
            "gaussian" | "normal" => Some(KernelBase::Gaussian),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelBase::Epanechnikov => "epanechnikov",
            KernelBase::Quartic => "quartic",
            KernelBase::Gaussian => "gaussian",
        }
    }

    pub fn halfwidth(self) -> f64 {
        match self {
            KernelBase::Gaussian => GAUSS_TRUNC,
            _ => 1.0,
        }
    }

    fn gauss_mass() -> f64 {
        norm_cdf(GAUSS_TRUNC) - norm_cdf(-GAUSS_TRUNC)
    }

    fn eval(self, u: f64) -> f64 {
        if u.abs() > self.halfwidth() {
            return 0.0;
        }
        match self {
            KernelBase::Epanechnikov => 0.75 * (1.0 - u * u),
            KernelBase::Quartic => {
                let t = 1.0 - u * u;
                0.9375 * t * t
            }
            KernelBase::Gaussian => norm_pdf(u) / Self::gauss_mass(),
        }
    }

    fn deriv(self, u: f64) -> f64 {
        if u.abs() > self.halfwidth() {
            return 0.0;
        }
        match self {
            KernelBase::Epanechnikov => -1.5 * u,
            KernelBase::Quartic => -3.75 * u * (1.0 - u * u),
            KernelBase::Gaussian => -u * norm_pdf(u) / Self::gauss_mass(),
        }
    }

    /// Even moment ∫ u^(2k) base(u) du.
    pub fn even_moment(self, k: usize) -> f64 {
        let kf = k as f64;
        match self {
            KernelBase::Epanechnikov => 3.0 / ((2.0 * kf + 1.0) * (2.0 * kf + 3.0)),
            KernelBase::Quartic => {
                1.875 * (1.0 / (2.0 * kf + 1.0) - 2.0 / (2.0 * kf + 3.0) + 1.0 / (2.0 * kf + 5.0))
            }
            KernelBase::Gaussian => {
                // ∫_{-a}^{a} u^{2k} φ = (2k-1) ∫ u^{2k-2} φ - 2 a^{2k-1} φ(a)
                let a = GAUSS_TRUNC;
                let mut m = Self::gauss_mass();
                for j in 1..=k {
                    m = (2 * j - 1) as f64 * m - 2.0 * a.powi(2 * j as i32 - 1) * norm_pdf(a);
                }
                m / Self::gauss_mass()
            }
        }
    }
}

/// Symmetric kernel of even order `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    base: KernelBase,
    order: usize,
    /// Coefficients of the even polynomial factor, in powers of u².
    coef: Vec<f64>,
}

impl KernelSpec {
    pub fn new(base: KernelBase, order: usize) -> Result<KernelSpec> {
        make_higher_order(&KernelSpec::second_order(base), order)
    }

    pub fn second_order(base: KernelBase) -> KernelSpec {
        KernelSpec { base, order: 2, coef: vec![1.0] }
    }

    pub fn epanechnikov() -> KernelSpec {
        Self::second_order(KernelBase::Epanechnikov)
    }

    pub fn quartic() -> KernelSpec {
        Self::second_order(KernelBase::Quartic)
    }

    pub fn gaussian() -> KernelSpec {
        Self::second_order(KernelBase::Gaussian)
    }

    pub fn base(&self) -> KernelBase {
        self.base
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coef
    }

    pub fn support_halfwidth(&self) -> f64 {
        self.base.halfwidth()
    }

    /// Whether the kernel has a continuous derivative everywhere.
    pub fn differentiable(&self) -> bool {
        !matches!(self.base, KernelBase::Epanechnikov)
    }

    /// True when the kernel takes negative values somewhere.
    pub fn signed(&self) -> bool {
        self.order > 2
    }

    fn poly(&self, u2: f64) -> f64 {
        self.coef.iter().rev().fold(0.0, |acc, c| acc * u2 + c)
    }

    fn dpoly(&self, u: f64) -> f64 {
        let u2 = u * u;
        let mut acc = 0.0;
        let mut pw = u;
        for (j, c) in self.coef.iter().enumerate().skip(1) {
            acc += 2.0 * j as f64 * c * pw;
            pw *= u2;
        }
        acc
    }

    pub fn eval(&self, u: f64) -> f64 {
        let b = self.base.eval(u);
        if b == 0.0 {
            return 0.0;
        }
        b * self.poly(u * u)
    }

    pub fn deriv(&self, u: f64) -> f64 {
        if u.abs() > self.support_halfwidth() {
            return 0.0;
        }
        self.base.deriv(u) * self.poly(u * u) + self.base.eval(u) * self.dpoly(u)
    }

    /// ∫ u^j K(u) du from the closed-form base moments.
    pub fn moment(&self, j: usize) -> f64 {
        if j % 2 == 1 {
            return 0.0;
        }
        let k = j / 2;
        self.coef.iter().enumerate().map(|(i, c)| c * self.base.even_moment(k + i)).sum()
    }
}

/// Raise a base kernel to order `s` by multiplying with an even polynomial.
pub fn make_higher_order(base: &KernelSpec, s: usize) -> Result<KernelSpec> {
    if s < 2 || s % 2 == 1 {
        return Err(Error::InvalidKernelOrder(s));
    }
    if s == base.order {
        return Ok(base.clone());
    }
    let b = base.base;
    let r = s / 2;
    let m = DMatrix::from_fn(r, r, |i, j| b.even_moment(i + j));
    let mut rhs = DVector::zeros(r);
    rhs[0] = 1.0;
    let coef = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidParameter("singular kernel moment system".into()))?;
    Ok(KernelSpec { base: b, order: s, coef: coef.iter().copied().collect() })
}

/// Product kernel weight (1/∏h_k) ∏ K(dz_k / h_k).
pub fn product_weight(kernel: &KernelSpec, dz: &[f64], h: &[f64]) -> Result<f64> {
    if dz.len() != h.len() {
        return Err(Error::DimensionMismatch { expected: h.len(), got: dz.len() });
    }
    if let Some(bad) = h.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {bad}")));
    }
    Ok(product_weight_unchecked(kernel, dz, h))
}

pub(crate) fn product_weight_unchecked(kernel: &KernelSpec, dz: &[f64], h: &[f64]) -> f64 {
    let mut w = 1.0;
    for (d, hk) in dz.iter().zip(h) {
        let k = kernel.eval(d / hk);
        if k == 0.0 {
            return 0.0;
        }
        w *= k / hk;
    }
    w
}

/// Composite Simpson rule with `nodes` points (forced odd).
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, nodes: usize) -> f64 {
    let n = if nodes % 2 == 0 { nodes + 1 } else { nodes.max(3) };
    let intervals = n - 1;
    let h = (b - a) / intervals as f64;
    let mut s = f(a) + f(b);
    for i in 1..intervals {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    s * h / 3.0
}

/// Bandwidths for covariate smoothing (`h`) and index smoothing (`h_tilde`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bandwidths {
    pub h: Vec<f64>,
    pub h_tilde: f64,
}

impl Bandwidths {
    pub fn new(h: Vec<f64>, h_tilde: f64) -> Result<Bandwidths> {
        if h.is_empty() || h.iter().any(|v| !(*v > 0.0 && v.is_finite())) || !(h_tilde > 0.0) {
            return Err(Error::InvalidParameter("bandwidths must be positive".into()));
        }
        Ok(Bandwidths { h, h_tilde })
    }
}

/// How default bandwidths are chosen when none is given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BandwidthRule {
    /// Normal-reference rule of thumb with second-order kernels.
    NormalReference,
    /// Undersmoothing rates h ~ n^(-1/(2s+p)) and h̃ ~ n^(-4/9).
    Rate,
}

impl BandwidthRule {
    pub fn parse(s: &str) -> Option<BandwidthRule> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "normal_reference" | "nrd" => Some(BandwidthRule::NormalReference),
            "rate" => Some(BandwidthRule::Rate),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BandwidthRule::NormalReference => "normal_reference",
            BandwidthRule::Rate => "rate",
        }
    }
}

/// Canonical bandwidth (R(K)/μ₂(K)²)^(1/5) of the second-order base kernel divided
/// by that of the standard normal; converts a Gaussian rule of thumb to `base`.
pub fn canonical_ratio(base: KernelBase) -> f64 {
    let gauss = (0.5 / std::f64::consts::PI.sqrt()).powf(0.2);
    let own: f64 = match base {
        KernelBase::Epanechnikov => 15f64.powf(0.2),
        KernelBase::Quartic => 35f64.powf(0.2),
        KernelBase::Gaussian => return 1.0,
    };
    own / gauss
}

/// Normal-reference bandwidth per coordinate for a `dim`-variate product kernel:
/// ratio · sd · (4 / ((dim + 2) n))^(1/(dim + 4)).
pub fn normal_reference_bandwidth(base: KernelBase, sd: f64, n: usize, dim: usize) -> f64 {
    let r = (4.0 / ((dim as f64 + 2.0) * n as f64)).powf(1.0 / (dim as f64 + 4.0));
    canonical_ratio(base) * sd * r
}

/// `sd * n^(-exponent)`, the rate-based scaling used for default bandwidths.
pub fn scaled_bandwidth(sd: f64, n: usize, exponent: f64) -> f64 {
    sd * (n as f64).powf(-exponent)
}

/// Covariate bandwidth exponent 1/(2s + p).
pub fn covariate_exponent(order: usize, p: usize) -> f64 {
    1.0 / (2 * order + p) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_ratios_from_quadrature() {
        for base in [KernelBase::Epanechnikov, KernelBase::Quartic] {
            let k = KernelSpec::second_order(base);
            let rk = simpson(|u| k.eval(u).powi(2), -1.0, 1.0, 10_001);
            let mu2 = simpson(|u| u * u * k.eval(u), -1.0, 1.0, 10_001);
            let gauss = (0.5 / std::f64::consts::PI.sqrt()).powf(0.2);
            let r = (rk / (mu2 * mu2)).powf(0.2) / gauss;
            assert!((r - canonical_ratio(base)).abs() < 1e-9, "{base:?} {r}");
        }
        // Silverman's 1.06 sd n^(-1/5) in one dimension.
        let h = normal_reference_bandwidth(KernelBase::Gaussian, 1.0, 1, 1);
        assert!((h - (4f64 / 3.0).powf(0.2)).abs() < 1e-15);
    }

    fn quad(k: &KernelSpec, j: i32) -> f64 {
        let a = k.support_halfwidth();
        simpson(|u| u.powi(j) * k.eval(u), -a, a, 10_001)
    }

    #[test]
    fn epanechnikov_values() {
        let k = KernelSpec::epanechnikov();
        assert_eq!(k.eval(0.0), 0.75);
        assert_eq!(k.eval(1.5), 0.0);
        assert!((quad(&k, 0) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn base_moments_match_quadrature() {
        for b in [KernelBase::Epanechnikov, KernelBase::Quartic, KernelBase::Gaussian] {
            let k = KernelSpec::second_order(b);
            for j in 0..5 {
                assert!((quad(&k, 2 * j) - b.even_moment(j as usize)).abs() < 1e-8, "{b:?} {j}");
            }
        }
    }

    #[test]
    fn order_four_and_six() {
        for b in [KernelBase::Epanechnikov, KernelBase::Quartic, KernelBase::Gaussian] {
            for s in [4, 6] {
                let k = KernelSpec::new(b, s).unwrap();
                assert!((quad(&k, 0) - 1.0).abs() < 1e-8);
                for j in 1..s as i32 {
                    assert!(quad(&k, j).abs() < 1e-6, "{b:?} s={s} j={j}");
                }
                assert!(quad(&k, s as i32).abs() > 1e-4);
            }
        }
    }

    #[test]
    fn odd_order_rejected() {
        assert_eq!(
            KernelSpec::new(KernelBase::Epanechnikov, 3),
            Err(Error::InvalidKernelOrder(3))
        );
        assert_eq!(KernelSpec::new(KernelBase::Epanechnikov, 2).unwrap(), KernelSpec::epanechnikov());
    }

    #[test]
    fn derivative_matches_differences() {
        for b in [KernelBase::Quartic, KernelBase::Gaussian] {
            let k = KernelSpec::new(b, 4).unwrap();
            for &u in &[-0.8, -0.3, 0.1, 0.55] {
                let fd = (k.eval(u + 1e-6) - k.eval(u - 1e-6)) / 2e-6;
                assert!((k.deriv(u) - fd).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn product_weights() {
        let k = KernelSpec::epanechnikov();
        assert!((product_weight(&k, &[0.0, 0.0], &[1.0, 1.0]).unwrap() - 0.5625).abs() < 1e-15);
        assert!((product_weight(&k, &[0.0, 0.0], &[2.0, 2.0]).unwrap() - 0.140625).abs() < 1e-15);
        assert_eq!(product_weight(&k, &[0.2, 1.0], &[1.0, 1.0]).unwrap(), 0.0);
        assert!(matches!(
            product_weight(&k, &[0.0], &[1.0, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
