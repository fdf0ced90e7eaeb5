//! Single-index M-estimator of β.
//!
//! The criterion is maximized over the free components of β (the first
//! component is fixed at one) by multi-start Nelder–Mead.

pub mod asymptotics;
pub mod criterion;
pub mod nelder_mead;

pub use asymptotics::{estimate_asymptotics, Asymptotics};
pub use criterion::{criterion, pseudo_log_likelihood, CriterionValue, RowLinks};
pub use nelder_mead::{maximize, NelderMeadOptions, NelderMeadResult};

use crate::cond_ecdf::{default_box, default_nu, Dataset, TrimBox};
use crate::copulas::CopulaModel;
use crate::error::{Error, Result};
use crate::kendall::RankCache;
use crate::kernels::{covariate_exponent, normal_reference_bandwidth, scaled_bandwidth, BandwidthRule, KernelBase, KernelSpec};
use crate::pseudo::{build_pseudo_sample, MarginModel, PseudoSample};
use crate::stats::{norm_ppf, sd};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Index vector β = (1, free...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexParam {
    free: Vec<f64>,
}

impl IndexParam {
    pub fn new(free: Vec<f64>) -> IndexParam {
        IndexParam { free }
    }

    /// Accepts a full vector whose first entry must be exactly 1.
    pub fn from_beta(beta: &[f64]) -> Result<IndexParam> {
        match beta.first() {
            Some(&b) if b == 1.0 && beta.len() >= 2 => Ok(IndexParam { free: beta[1..].to_vec() }),
            _ => Err(Error::InvalidParameter(
                "index needs length >= 2 and a first component equal to 1".into(),
            )),
        }
    }

    pub fn free(&self) -> &[f64] {
        &self.free
    }

    pub fn beta(&self) -> Vec<f64> {
        let mut b = Vec::with_capacity(self.free.len() + 1);
        b.push(1.0);
        b.extend_from_slice(&self.free);
        b
    }

    pub fn len(&self) -> usize {
        self.free.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationConfig {
    /// Default bandwidth schedule for both smoothing steps.
    pub bandwidth_rule: BandwidthRule,
    pub margin_kernel: KernelBase,
    /// Order of the covariate kernel; `None` means 2 under the normal-reference rule and 2p under the rate rule.
    pub margin_order: Option<usize>,
    /// Covariate bandwidths; `None` means margin_scale times the rule's value.
    pub margin_bandwidth: Option<Vec<f64>>,
    pub margin_scale: f64,
    pub leave_one_out: bool,
    pub index_kernel: KernelBase,
    pub index_order: usize,
    /// Fixed index bandwidth; `None` means index_scale times the rule's value for sd(β'Z).
    pub index_bandwidth: Option<f64>,
    pub index_scale: f64,
    /// Boundary trim ν; `None` means 0.2 · n^(-1/5).
    pub nu: Option<f64>,
    /// Covariate box half-widths; `None` means the 95th percentile of |Z_k|.
    pub m_z: Option<Vec<f64>>,
    pub starts: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub initial_step: f64,
    /// Free components are restricted to [-beta_bound, beta_bound].
    pub beta_bound: f64,
    pub seed: u64,
    pub asymptotics: bool,
    pub fd_step: f64,
    pub link_input: LinkInput,
}

/// Which X block the conditional tau of the link is computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkInput {
    /// Pseudo-observations Û (conditional probability transforms of X given Z).
    Pseudo,
    /// The raw observations X.
    Raw,
}

/// Dataset whose X block is replaced by the pseudo-observations.
pub fn pseudo_dataset(data: &Dataset, pseudo: &PseudoSample) -> Result<Dataset> {
    Dataset::with_names(pseudo.u_hat.clone(), data.z().clone(), data.x_names().to_vec(), data.z_names().to_vec())
}

impl Default for EstimationConfig {
    fn default() -> Self {
        EstimationConfig {
            bandwidth_rule: BandwidthRule::NormalReference,
            margin_kernel: KernelBase::Epanechnikov,
            margin_order: None,
            margin_bandwidth: None,
            margin_scale: 1.0,
            leave_one_out: true,
            index_kernel: KernelBase::Quartic,
            index_order: 2,
            index_bandwidth: None,
            index_scale: 1.0,
            nu: None,
            m_z: None,
            starts: 5,
            tol: 1e-6,
            max_iter: 200,
            initial_step: 0.5,
            beta_bound: 10.0,
            seed: 0,
            asymptotics: true,
            fd_step: asymptotics::DEFAULT_FD_STEP,
            link_input: LinkInput::Pseudo,
        }
    }
}

/// Index bandwidth exponent of the rate rule.
pub const RATE_INDEX_EXPONENT: f64 = 4.0 / 9.0;

/// Settings after defaults have been filled in for a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedSettings {
    pub margin_order: usize,
    pub h: Vec<f64>,
    pub nu: f64,
    pub m_z: Vec<f64>,
    pub index_order: usize,
}

impl EstimationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.starts == 0 {
            return Err(Error::InvalidParameter("starts must be >= 1".into()));
        }
        if !(self.tol > 0.0) || !(self.initial_step > 0.0) || !(self.beta_bound > 0.0) {
            return Err(Error::InvalidParameter("tol, initial_step and beta_bound must be positive".into()));
        }
        if !(self.margin_scale > 0.0) || !(self.index_scale > 0.0) || !(self.fd_step > 0.0) {
            return Err(Error::InvalidParameter("index bandwidth schedule must be positive".into()));
        }
        if let Some(h) = self.index_bandwidth {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidParameter("index bandwidth must be positive".into()));
            }
        }
        KernelSpec::new(self.index_kernel, self.index_order)?;
        if let Some(s) = self.margin_order {
            KernelSpec::new(self.margin_kernel, s)?;
        }
        Ok(())
    }

    pub fn index_kernel_spec(&self) -> Result<KernelSpec> {
        KernelSpec::new(self.index_kernel, self.index_order)
    }

    pub fn resolve(&self, data: &Dataset) -> Result<ResolvedSettings> {
        self.validate()?;
        let p = data.p();
        let n = data.n();
        let s = self.margin_order.unwrap_or(match self.bandwidth_rule {
            BandwidthRule::NormalReference => 2,
            BandwidthRule::Rate => 2 * p,
        });
        let h = match &self.margin_bandwidth {
            Some(h) => {
                if h.len() != p {
                    return Err(Error::DimensionMismatch { expected: p, got: h.len() });
                }
                h.clone()
            }
            None => data
                .z()
                .columns()
                .into_iter()
                .map(|c| {
                    let sd = sd(&c.to_vec());
                    self.margin_scale
                        * match self.bandwidth_rule {
                            BandwidthRule::NormalReference => normal_reference_bandwidth(self.margin_kernel, sd, n, p),
                            BandwidthRule::Rate => scaled_bandwidth(sd, n, covariate_exponent(s, p)),
                        }
                })
                .collect(),
        };
        if h.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidData("covariate bandwidth is zero (constant covariate?)".into()));
        }
        let m_z = match &self.m_z {
            Some(m) => m.clone(),
            None => default_box(data),
        };
        Ok(ResolvedSettings {
            margin_order: s,
            h,
            nu: self.nu.unwrap_or_else(|| default_nu(n)),
            m_z,
            index_order: self.index_order,
        })
    }

    /// Index bandwidth for direction `beta`.
    pub fn h_tilde(&self, data: &Dataset, beta: &[f64]) -> f64 {
        match self.index_bandwidth {
            Some(h) => h,
            None => {
                let proj = data.index_unchecked(beta);
                let sd = sd(&proj);
                self.index_scale
                    * match self.bandwidth_rule {
                        BandwidthRule::NormalReference => normal_reference_bandwidth(self.index_kernel, sd, data.n(), 1),
                        BandwidthRule::Rate => scaled_bandwidth(sd, data.n(), RATE_INDEX_EXPONENT),
                    }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartTrace {
    pub start: Vec<f64>,
    pub start_value: f64,
    pub optimum: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub n: usize,
    pub n_kept: usize,
    pub empty_rows: usize,
    /// Share of kept rows whose tau was clamped at the optimum.
    pub clamp_fraction: f64,
    /// Kept rows where the tau estimate failed at the optimum.
    pub fallback_rows: usize,
    pub weak_identification: bool,
    pub h_tilde: f64,
    pub settings: ResolvedSettings,
    pub starts: Vec<StartTrace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub beta_hat: IndexParam,
    pub criterion_value: f64,
    pub sigma_hat: Option<Vec<Vec<f64>>>,
    pub s_hat: Option<Vec<Vec<f64>>>,
    pub cov: Option<Vec<Vec<f64>>>,
    pub ci: Option<Vec<(f64, f64)>>,
    /// Name and message of the error raised by the asymptotic step, if any.
    pub asymptotics_error: Option<(String, String)>,
    pub diagnostics: Diagnostics,
}

impl FitResult {
    pub fn std_errors(&self) -> Option<Vec<f64>> {
        self.cov.as_ref().map(|c| (0..c.len()).map(|l| c[l][l].max(0.0).sqrt()).collect())
    }
}

fn to_rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

/// Least-squares starting value: regress products of normal scores of Û on Z.
pub fn least_squares_start(data: &Dataset, pseudo: &PseudoSample) -> Vec<f64> {
    let p = data.p();
    let d = data.d();
    let rows = pseudo.kept_rows();
    let mut xtx = nalgebra::DMatrix::<f64>::zeros(p + 1, p + 1);
    let mut xty = nalgebra::DVector::<f64>::zeros(p + 1);
    for &i in &rows {
        let scores: Vec<f64> = (0..d).map(|k| norm_ppf(pseudo.u_hat[[i, k]])).collect();
        let mut resp = 0.0;
        let mut pairs = 0.0;
        for k in 0..d {
            for l in (k + 1)..d {
                resp += scores[k] * scores[l];
                pairs += 1.0;
            }
        }
        resp /= pairs;
        let mut reg = vec![1.0];
        reg.extend(data.z().row(i).iter());
        for a in 0..=p {
            xty[a] += reg[a] * resp;
            for b in 0..=p {
                xtx[(a, b)] += reg[a] * reg[b];
            }
        }
    }
    let fallback = vec![0.0; p - 1];
    match xtx.lu().solve(&xty) {
        Some(c) if c[1].abs() > 1e-8 => (2..=p).map(|l| c[l] / c[1]).collect(),
        _ => fallback,
    }
}

/// Estimate β with pseudo-observations from nonparametric conditional margins.
pub fn fit(data: &Dataset, model: &CopulaModel, config: &EstimationConfig) -> Result<FitResult> {
    let resolved = config.resolve(data)?;
    let kernel = KernelSpec::new(config.margin_kernel, resolved.margin_order)?;
    let margin = MarginModel::Nonparametric { kernel, h: resolved.h.clone(), leave_one_out: config.leave_one_out };
    let trim = TrimBox::new(resolved.m_z.clone(), resolved.nu)?;
    let pseudo = build_pseudo_sample(data, &margin, &trim)?;
    fit_pseudo_resolved(data, &pseudo, model, config, resolved)
}

/// Estimate β from a pseudo-sample built elsewhere (parametric margins, or true uniforms).
pub fn fit_with_pseudo(
    data: &Dataset,
    pseudo: &PseudoSample,
    model: &CopulaModel,
    config: &EstimationConfig,
) -> Result<FitResult> {
    let resolved = config.resolve(data)?;
    fit_pseudo_resolved(data, pseudo, model, config, resolved)
}

fn fit_pseudo_resolved(
    data: &Dataset,
    pseudo: &PseudoSample,
    model: &CopulaModel,
    config: &EstimationConfig,
    settings: ResolvedSettings,
) -> Result<FitResult> {
    let p = data.p();
    if p < 2 {
        return Err(Error::InvalidParameter("the index needs at least two covariates".into()));
    }
    if data.d() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: data.d() });
    }
    let kernel = config.index_kernel_spec()?;
    let owned;
    let data = match config.link_input {
        LinkInput::Pseudo => {
            owned = pseudo_dataset(data, pseudo)?;
            &owned
        }
        LinkInput::Raw => data,
    };
    let cache = RankCache::new(data);
    let bound = config.beta_bound;
    let eval = |free: &[f64]| -> Result<criterion::CriterionValue> {
        if free.iter().any(|v| !(v.abs() <= bound)) {
            return Err(Error::InvalidParameter("outside the index box".into()));
        }
        let beta = IndexParam::new(free.to_vec()).beta();
        let h = config.h_tilde(data, &beta);
        criterion::criterion_with_cache(data, &cache, pseudo, model, &beta, &kernel, h)
    };
    let objective = |free: &[f64]| -> f64 { eval(free).map(|c| c.value).unwrap_or(f64::NEG_INFINITY) };

    let mut starts = vec![least_squares_start(data, pseudo)
        .into_iter()
        .map(|v| v.clamp(-bound, bound))
        .collect::<Vec<f64>>()];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    while starts.len() < config.starts {
        let s: Vec<f64> = starts[0]
            .iter()
            .map(|v| {
                let e: f64 = StandardNormal.sample(&mut rng);
                (v + 0.5 * e).clamp(-bound, bound)
            })
            .collect();
        starts.push(s);
    }
    let opts = NelderMeadOptions { initial_step: config.initial_step, tol: config.tol, max_iter: config.max_iter };
    let traces: Vec<StartTrace> = starts
        .par_iter()
        .map(|s| {
            let start_value = objective(s);
            let r = maximize(&objective, s, &opts);
            StartTrace {
                start: s.clone(),
                start_value,
                optimum: r.x,
                value: r.value,
                iterations: r.iterations,
                evaluations: r.evaluations,
                converged: r.converged,
            }
        })
        .collect();

    let mut best: Option<usize> = None;
    for (k, t) in traces.iter().enumerate() {
        if !t.value.is_finite() {
            continue;
        }
        best = match best {
            None => Some(k),
            Some(b) => {
                let tb = &traces[b];
                let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
                if t.value > tb.value + 1e-12
                    || ((t.value - tb.value).abs() <= 1e-12 && norm(&t.optimum) < norm(&tb.optimum))
                {
                    Some(k)
                } else {
                    Some(b)
                }
            }
        };
    }
    let best = match best {
        Some(b) => b,
        None => {
            // Surface the error at the first start.
            return Err(eval(&starts[0]).err().unwrap_or(Error::NonFiniteCriterion { row: 0 }));
        }
    };
    let free = traces[best].optimum.clone();
    let beta_hat = IndexParam::new(free.clone());
    let at_opt = eval(&free)?;
    let values: Vec<f64> = traces
        .iter()
        .flat_map(|t| [t.start_value, t.value])
        .filter(|v| v.is_finite())
        .collect();
    let vmax = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let vmin = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let h_tilde = config.h_tilde(data, &beta_hat.beta());
    let nk = pseudo.n_kept;
    let diagnostics = Diagnostics {
        n: data.n(),
        n_kept: nk,
        empty_rows: pseudo.empty_rows,
        clamp_fraction: at_opt.links.clamped as f64 / nk as f64,
        fallback_rows: at_opt.links.fallbacks,
        weak_identification: vmax - vmin < 1e-4,
        h_tilde,
        settings,
        starts: traces,
    };
    let mut out = FitResult {
        beta_hat: beta_hat.clone(),
        criterion_value: at_opt.value,
        sigma_hat: None,
        s_hat: None,
        cov: None,
        ci: None,
        asymptotics_error: None,
        diagnostics,
    };
    if config.asymptotics {
        match asymptotics::asymptotics_with_cache(
            data, &cache, pseudo, model, &beta_hat, &kernel, h_tilde, config.fd_step,
        ) {
            Ok(a) => {
                out.ci = Some(a.intervals(&beta_hat));
                out.sigma_hat = Some(to_rows(&a.sigma_hat));
                out.s_hat = Some(to_rows(&a.s_hat));
                out.cov = Some(to_rows(&a.cov));
            }
            Err(e) => out.asymptotics_error = Some((e.name().to_string(), e.to_string())),
        }
    }
    Ok(out)
}
