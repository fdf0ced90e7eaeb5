//! Simulated single-index conditional copula data and replication studies.

use crate::cond_ecdf::{Dataset, TrimBox};
use crate::copulas::{CopulaModel, Family, Sampler};
use crate::error::{Error, Result};
use crate::estimator::{fit, fit_with_pseudo, EstimationConfig, FitResult, IndexParam};
use crate::pseudo::{GaussianLocation, PseudoSample};
use crate::stats::{mean, norm_ppf};
use ndarray::Array2;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Conditional Kendall tau as a function of the index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LinkShape {
    Constant { tau: f64 },
    /// τ(y) = a + b·y
    AffineTau { a: f64, b: f64 },
    /// τ(y) = a + b·tanh(y)
    TanhTau { a: f64, b: f64 },
}

impl LinkShape {
    pub fn tau(&self, y: f64) -> f64 {
        match *self {
            LinkShape::Constant { tau } => tau,
            LinkShape::AffineTau { a, b } => a + b * y,
            LinkShape::TanhTau { a, b } => a + b * y.tanh(),
        }
    }

    /// Parses `constant:T`, `affine:A,B` or `tanh:A,B`.
    pub fn parse(s: &str) -> Option<LinkShape> {
        let (kind, args) = s.split_once(':')?;
        let v: Vec<f64> = args.split(',').map(|t| t.trim().parse().ok()).collect::<Option<_>>()?;
        match (kind.trim().to_ascii_lowercase().as_str(), v.as_slice()) {
            ("constant", [t]) => Some(LinkShape::Constant { tau: *t }),
            ("affine", [a, b]) => Some(LinkShape::AffineTau { a: *a, b: *b }),
            ("tanh", [a, b]) => Some(LinkShape::TanhTau { a: *a, b: *b }),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            LinkShape::Constant { tau } => format!("constant:{tau}"),
            LinkShape::AffineTau { a, b } => format!("affine:{a},{b}"),
            LinkShape::TanhTau { a, b } => format!("tanh:{a},{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CovariateLaw {
    /// Independent uniforms on [-half_width, half_width].
    UniformBox { half_width: f64 },
    /// Independent N(0, sd²) truncated to [-bound, bound].
    TruncatedNormal { sd: f64, bound: f64 },
}

impl CovariateLaw {
    /// Parses `uniform:W` or `normal:SD,BOUND`.
    pub fn parse(s: &str) -> Option<CovariateLaw> {
        let (kind, args) = s.split_once(':')?;
        let v: Vec<f64> = args.split(',').map(|t| t.trim().parse().ok()).collect::<Option<_>>()?;
        match (kind.trim().to_ascii_lowercase().as_str(), v.as_slice()) {
            ("uniform", [w]) => Some(CovariateLaw::UniformBox { half_width: *w }),
            ("normal", [sd, b]) => Some(CovariateLaw::TruncatedNormal { sd: *sd, bound: *b }),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            CovariateLaw::UniformBox { half_width } => format!("uniform:{half_width}"),
            CovariateLaw::TruncatedNormal { sd, bound } => format!("normal:{sd},{bound}"),
        }
    }

    fn bound(&self) -> f64 {
        match *self {
            CovariateLaw::UniformBox { half_width } => half_width,
            CovariateLaw::TruncatedNormal { bound, .. } => bound,
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            CovariateLaw::UniformBox { half_width } => rng.random_range(-half_width..half_width),
            CovariateLaw::TruncatedNormal { sd, bound } => loop {
                let e: f64 = rng.sample(StandardNormal);
                let v = sd * e;
                if v.abs() <= bound {
                    return v;
                }
            },
        }
    }
}

/// X_k = loadings'Z + scale·Φ⁻¹(U_k).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginSpec {
    pub loadings: Vec<f64>,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DGPSpec {
    pub family: Family,
    pub d: usize,
    pub p: usize,
    pub beta0: IndexParam,
    pub link: LinkShape,
    pub covariates: CovariateLaw,
    pub margins: Vec<MarginSpec>,
    pub n: usize,
    pub seed: u64,
}

/// Default margins: X_k loads 0.5 on Z_(k mod p), unit noise scale.
pub fn default_margins(d: usize, p: usize) -> Vec<MarginSpec> {
    (0..d)
        .map(|k| {
            let mut l = vec![0.0; p];
            l[k % p] = 0.5;
            MarginSpec { loadings: l, scale: 1.0 }
        })
        .collect()
}

impl DGPSpec {
    /// Gaussian copula, d = p = 2, β₀ = (1, 1), τ(y) = 0.3 + 0.25·tanh(y).
    pub fn tanh_gaussian(n: usize, seed: u64) -> DGPSpec {
        DGPSpec {
            family: Family::Gaussian,
            d: 2,
            p: 2,
            beta0: IndexParam::new(vec![1.0]),
            link: LinkShape::TanhTau { a: 0.3, b: 0.25 },
            covariates: CovariateLaw::TruncatedNormal { sd: 1.0, bound: 2.0 },
            margins: default_margins(2, 2),
            n,
            seed,
        }
    }

    pub fn model(&self) -> Result<CopulaModel> {
        CopulaModel::new(self.family, self.d)
    }

    /// Checks dimensions and that the link stays inside the family's tau range.
    pub fn validate(&self) -> Result<CopulaModel> {
        let model = self.model()?;
        if self.p < 2 || self.beta0.len() != self.p {
            return Err(Error::DimensionMismatch { expected: self.p, got: self.beta0.len() });
        }
        if self.margins.len() != self.d || self.margins.iter().any(|m| m.loadings.len() != self.p) {
            return Err(Error::InvalidParameter("one margin with p loadings is needed per X column".into()));
        }
        if self.margins.iter().any(|m| !(m.scale > 0.0)) {
            return Err(Error::InvalidParameter("margin scales must be positive".into()));
        }
        let b = self.covariates.bound();
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidParameter("covariate law needs a positive finite bound".into()));
        }
        if let CovariateLaw::TruncatedNormal { sd, .. } = self.covariates {
            if !(sd > 0.0) {
                return Err(Error::InvalidParameter("covariate sd must be positive".into()));
            }
        }
        if self.n < crate::cond_ecdf::MIN_ROWS {
            return Err(Error::InvalidParameter(format!("n must be >= {}", crate::cond_ecdf::MIN_ROWS)));
        }
        let ymax: f64 = b * self.beta0.beta().iter().map(|v| v.abs()).sum::<f64>();
        let (lo, hi) = model.tau_range();
        for y in [-ymax, ymax] {
            let t = self.link.tau(y);
            if !(t > lo && t < hi) {
                return Err(Error::InvalidParameter(format!(
                    "link gives tau {t} at index {y}, outside ({lo}, {hi})"
                )));
            }
        }
        Ok(model)
    }

    pub fn with_seed(&self, seed: u64) -> DGPSpec {
        DGPSpec { seed, ..self.clone() }
    }

    pub fn margin_model(&self) -> GaussianLocation {
        GaussianLocation {
            loadings: self.margins.iter().map(|m| m.loadings.clone()).collect(),
            scales: self.margins.iter().map(|m| m.scale).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedData {
    pub data: Dataset,
    /// The copula draws behind X.
    pub u: Array2<f64>,
    /// True copula parameter per row.
    pub theta: Vec<f64>,
}

pub fn generate(spec: &DGPSpec) -> Result<SimulatedData> {
    let model = spec.validate()?;
    let (n, d, p) = (spec.n, spec.d, spec.p);
    let beta = spec.beta0.beta();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut x = Array2::zeros((n, d));
    let mut z = Array2::zeros((n, p));
    let mut u = Array2::zeros((n, d));
    let mut theta = Vec::with_capacity(n);
    let mut row = vec![0.0; d];
    for i in 0..n {
        for k in 0..p {
            z[[i, k]] = spec.covariates.draw(&mut rng);
        }
        let y: f64 = (0..p).map(|k| beta[k] * z[[i, k]]).sum();
        let t = model.tau_to_theta(spec.link.tau(y))?;
        Sampler::new(&model, t)?.draw(&mut rng, &mut row);
        for k in 0..d {
            let m = &spec.margins[k];
            let loc: f64 = (0..p).map(|l| m.loadings[l] * z[[i, l]]).sum();
            u[[i, k]] = row[k];
            x[[i, k]] = loc + m.scale * norm_ppf(row[k]);
        }
        theta.push(t);
    }
    Ok(SimulatedData { data: Dataset::new(x, z)?, u, theta })
}

/// Fit using the true uniforms in place of estimated pseudo-observations.
pub fn naive_fit(sim: &SimulatedData, model: &CopulaModel, config: &EstimationConfig) -> Result<FitResult> {
    let r = config.resolve(&sim.data)?;
    let trim = TrimBox::new(r.m_z, r.nu)?;
    let pseudo = PseudoSample::from_uniforms(sim.u.clone(), &sim.data, &trim)?;
    fit_with_pseudo(&sim.data, &pseudo, model, config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRow {
    pub rep: usize,
    pub seed: u64,
    /// Free components of β̂.
    pub beta_hat: Option<Vec<f64>>,
    pub se: Option<Vec<f64>>,
    pub ci: Option<Vec<(f64, f64)>>,
    pub covered: Option<Vec<bool>>,
    pub clamp_fraction: Option<f64>,
    pub n_kept: Option<usize>,
    pub error: Option<String>,
    pub runtime_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationReport {
    pub beta0_free: Vec<f64>,
    pub rows: Vec<ReplicationRow>,
    pub bias: Vec<f64>,
    pub rmse: Vec<f64>,
    /// Coverage among replications with a confidence interval; `None` if there are none.
    pub coverage: Vec<Option<f64>>,
    pub mean_runtime_s: f64,
    pub n_failed: usize,
    pub all_failed: bool,
}

/// Column names of [`ReplicationReport::to_tsv`] for `q` free components.
pub fn replication_columns(q: usize) -> Vec<String> {
    let mut c = vec!["rep".to_string(), "seed".into(), "status".into()];
    for l in 0..q {
        let j = l + 2;
        c.extend([format!("beta{j}"), format!("se{j}"), format!("ci_lo{j}"), format!("ci_hi{j}"), format!("covered{j}")]);
    }
    c.extend(["clamp_fraction".to_string(), "n_kept".into(), "error".into()]);
    c
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "NA".into())
}

impl ReplicationReport {
    pub fn from_rows(beta0_free: Vec<f64>, rows: Vec<ReplicationRow>) -> ReplicationReport {
        let q = beta0_free.len();
        let ok: Vec<&ReplicationRow> = rows.iter().filter(|r| r.beta_hat.is_some()).collect();
        let mut bias = vec![f64::NAN; q];
        let mut rmse = vec![f64::NAN; q];
        let mut coverage = vec![None; q];
        for l in 0..q {
            let errs: Vec<f64> = ok.iter().map(|r| r.beta_hat.as_ref().unwrap()[l] - beta0_free[l]).collect();
            if !errs.is_empty() {
                bias[l] = mean(&errs);
                rmse[l] = mean(&errs.iter().map(|e| e * e).collect::<Vec<_>>()).sqrt();
            }
            let cov: Vec<bool> = rows.iter().filter_map(|r| r.covered.as_ref().map(|c| c[l])).collect();
            if !cov.is_empty() {
                coverage[l] = Some(cov.iter().filter(|c| **c).count() as f64 / cov.len() as f64);
            }
        }
        let n_failed = rows.len() - ok.len();
        let mean_runtime_s = mean(&rows.iter().map(|r| r.runtime_s).collect::<Vec<_>>());
        ReplicationReport { beta0_free, all_failed: ok.is_empty(), rows, bias, rmse, coverage, mean_runtime_s, n_failed }
    }

    /// Per-replication table. Runtime is left out so the output is reproducible.
    pub fn to_tsv(&self) -> String {
        let q = self.beta0_free.len();
        let mut out = replication_columns(q).join("\t");
        out.push('\n');
        for r in &self.rows {
            let mut f = vec![r.rep.to_string(), r.seed.to_string()];
            f.push(if r.beta_hat.is_some() { "ok".into() } else { "failed".into() });
            for l in 0..q {
                f.push(opt(r.beta_hat.as_ref().map(|b| b[l])));
                f.push(opt(r.se.as_ref().map(|s| s[l])));
                f.push(opt(r.ci.as_ref().map(|c| c[l].0)));
                f.push(opt(r.ci.as_ref().map(|c| c[l].1)));
                f.push(opt(r.covered.as_ref().map(|c| c[l] as u8)));
            }
            f.push(opt(r.clamp_fraction));
            f.push(opt(r.n_kept));
            f.push(r.error.clone().unwrap_or_else(|| "NA".into()));
            out.push_str(&f.join("\t"));
            out.push('\n');
        }
        out
    }
}

fn replication_row(rep: usize, seed: u64, beta0: &[f64], fit: Result<FitResult>, runtime_s: f64) -> ReplicationRow {
    match fit {
        Ok(f) => {
            let b = f.beta_hat.free().to_vec();
            let covered = f
                .ci
                .as_ref()
                .map(|ci| ci.iter().zip(beta0).map(|((lo, hi), t)| lo <= t && t <= hi).collect());
            ReplicationRow {
                rep,
                seed,
                se: f.std_errors(),
                ci: f.ci.clone(),
                covered,
                clamp_fraction: Some(f.diagnostics.clamp_fraction),
                n_kept: Some(f.diagnostics.n_kept),
                error: f.asymptotics_error.as_ref().map(|e| e.0.clone()),
                beta_hat: Some(b),
                runtime_s,
            }
        }
        Err(e) => ReplicationRow {
            rep,
            seed,
            beta_hat: None,
            se: None,
            ci: None,
            covered: None,
            clamp_fraction: None,
            n_kept: None,
            error: Some(e.name().to_string()),
            runtime_s,
        },
    }
}

/// One generate → fit cycle.
pub fn run_once(spec: &DGPSpec, config: &EstimationConfig) -> Result<(SimulatedData, FitResult)> {
    let model = spec.validate()?;
    let sim = generate(spec)?;
    let f = fit(&sim.data, &model, config)?;
    Ok((sim, f))
}

/// `r` replications with seeds `spec.seed + rep`; failures are recorded, not fatal.
pub fn run_replications(spec: &DGPSpec, r: usize, config: &EstimationConfig) -> Result<ReplicationReport> {
    let model = spec.validate()?;
    if r == 0 {
        return Err(Error::InvalidParameter("need at least one replication".into()));
    }
    let beta0 = spec.beta0.free().to_vec();
    let rows: Vec<ReplicationRow> = (0..r)
        .into_par_iter()
        .map(|rep| {
            let seed = spec.seed.wrapping_add(rep as u64);
            let t0 = Instant::now();
            let res = generate(&spec.with_seed(seed)).and_then(|sim| fit(&sim.data, &model, config));
            replication_row(rep, seed, &beta0, res, t0.elapsed().as_secs_f64())
        })
        .collect();
    Ok(ReplicationReport::from_rows(beta0, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_shapes() {
        assert_eq!(LinkShape::parse("tanh:0.3,0.25"), Some(LinkShape::TanhTau { a: 0.3, b: 0.25 }));
        assert_eq!(LinkShape::parse("constant:0.1"), Some(LinkShape::Constant { tau: 0.1 }));
        assert_eq!(LinkShape::parse("tanh:0.3"), None);
        assert_eq!(CovariateLaw::parse("normal:1,2"), Some(CovariateLaw::TruncatedNormal { sd: 1.0, bound: 2.0 }));
    }

    #[test]
    fn link_out_of_range_rejected() {
        let mut s = DGPSpec::tanh_gaussian(100, 1);
        s.family = Family::Clayton;
        s.link = LinkShape::AffineTau { a: 0.1, b: 0.3 };
        assert!(s.validate().is_err());
    }

    #[test]
    fn deterministic() {
        let s = DGPSpec::tanh_gaussian(50, 9);
        assert_eq!(generate(&s).unwrap(), generate(&s).unwrap());
    }
}
