//! Command-line front end shared by the `sicop` binary and the tests.
//!
//! Settings come from an optional flat `key = value` file, then from
//! `--set key=value` pairs and the named flags, in that order; later
//! sources win.

use crate::cond_ecdf::{Dataset, TrimBox};
use crate::copulas::{CopulaModel, Family};
use crate::estimator::{fit, pseudo_dataset, EstimationConfig, FitResult, IndexParam, LinkInput};
use crate::kendall::cond_tau_curve;
use crate::kernels::{BandwidthRule, KernelBase, KernelSpec};
use crate::link::link_curve;
use crate::pseudo::{build_pseudo_sample, MarginModel};
use crate::simulate::{default_margins, generate, run_replications, CovariateLaw, DGPSpec, LinkShape};
use crate::stats::percentile;
use clap::{Args, Parser, Subcommand};
use ndarray::Array2;
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_ESTIMATION: i32 = 3;

/// Environment variable read for the worker thread count.
pub const THREADS_ENV: &str = "SICOP_THREADS";

pub const GRID_POINTS: usize = 101;

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> CliError {
        CliError { code: EXIT_USAGE, message: message.into() }
    }

    fn estimation(e: &crate::Error) -> CliError {
        CliError { code: EXIT_ESTIMATION, message: format!("{}: {}", e.name(), e) }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "sicop", version, about = "Single-index conditional copula estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Estimate β from a CSV file.
    Fit(FitArgs),
    /// Write a simulated dataset and, optionally, a replication study.
    Simulate(SimulateArgs),
    /// Conditional Kendall tau along a given or fitted index.
    TauCurve(TauCurveArgs),
    /// Quick numerical self-checks.
    Selftest,
}

#[derive(Args, Debug, Default)]
pub struct CommonArgs {
    /// Flat key = value configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Extra key=value setting (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Default)]
pub struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Comma-separated X column names.
    #[arg(long)]
    pub x_cols: Option<String>,
    /// Comma-separated Z column names.
    #[arg(long)]
    pub z_cols: Option<String>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of replications; 0 writes the dataset only.
    #[arg(long)]
    pub replications: Option<usize>,
}

#[derive(Args, Debug)]
pub struct TauCurveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub data: DataArgs,
    /// Full index vector, first entry 1. Fitted when absent.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
}

/// Every setting the subcommands read, with defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub subcommand: String,
    pub input: Option<PathBuf>,
    pub x_cols: Vec<String>,
    pub z_cols: Vec<String>,
    pub family: Family,
    pub out_dir: PathBuf,
    pub estimation: EstimationConfig,
    pub beta: Option<Vec<f64>>,
    pub grid_points: usize,
    pub d: usize,
    pub p: usize,
    pub n: usize,
    pub beta0: Vec<f64>,
    pub link: LinkShape,
    pub covariates: CovariateLaw,
    pub replications: usize,
}

impl RunConfig {
    pub fn new(subcommand: &str) -> RunConfig {
        let base = DGPSpec::tanh_gaussian(1000, 0);
        RunConfig {
            subcommand: subcommand.to_string(),
            input: None,
            x_cols: Vec::new(),
            z_cols: Vec::new(),
            family: Family::Gaussian,
            out_dir: PathBuf::from("."),
            estimation: EstimationConfig::default(),
            beta: None,
            grid_points: GRID_POINTS,
            d: base.d,
            p: base.p,
            n: base.n,
            beta0: base.beta0.free().to_vec(),
            link: base.link,
            covariates: base.covariates,
            replications: 0,
        }
    }

    /// Simulation spec described by this configuration.
    pub fn dgp(&self) -> DGPSpec {
        DGPSpec {
            family: self.family,
            d: self.d,
            p: self.p,
            beta0: IndexParam::new(self.beta0.clone()),
            link: self.link.clone(),
            covariates: self.covariates.clone(),
            margins: default_margins(self.d, self.p),
            n: self.n,
            seed: self.estimation.seed,
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let v = value.trim();
        let e = &mut self.estimation;
        match key.trim() {
            "input" => self.input = Some(PathBuf::from(v)),
            "x_cols" => self.x_cols = names(v),
            "z_cols" => self.z_cols = names(v),
            "family" => self.family = Family::parse(v).ok_or_else(|| format!("unknown family '{v}'"))?,
            "out" | "out_dir" => self.out_dir = PathBuf::from(v),
            "seed" => e.seed = num(v)?,
            "margin_kernel" => e.margin_kernel = kernel(v)?,
            "margin_order" => e.margin_order = opt_num(v)?,
            "margin_bandwidth" => e.margin_bandwidth = opt_list(v)?,
            "leave_one_out" => e.leave_one_out = boolean(v)?,
            "index_kernel" => e.index_kernel = kernel(v)?,
            "index_order" => e.index_order = num(v)?,
            "index_bandwidth" => e.index_bandwidth = opt_num(v)?,
            "bandwidth_rule" => {
                e.bandwidth_rule = BandwidthRule::parse(v).ok_or_else(|| format!("unknown bandwidth rule '{v}'"))?
            }
            "margin_scale" => e.margin_scale = num(v)?,
            "index_scale" => e.index_scale = num(v)?,
            "nu" => e.nu = opt_num(v)?,
            "m_z" => e.m_z = opt_list(v)?,
            "starts" => e.starts = num(v)?,
            "tol" => e.tol = num(v)?,
            "max_iter" => e.max_iter = num(v)?,
            "initial_step" => e.initial_step = num(v)?,
            "beta_bound" => e.beta_bound = num(v)?,
            "asymptotics" => e.asymptotics = boolean(v)?,
            "fd_step" => e.fd_step = num(v)?,
            "link_input" => {
                e.link_input = match v.to_ascii_lowercase().as_str() {
                    "pseudo" => LinkInput::Pseudo,
                    "raw" => LinkInput::Raw,
                    _ => return Err(format!("link_input must be pseudo or raw, got '{v}'")),
                }
            }
            "beta" => self.beta = Some(list(v)?),
            "grid_points" => self.grid_points = num(v)?,
            "d" => self.d = num(v)?,
            "p" => self.p = num(v)?,
            "n" => self.n = num(v)?,
            "beta0" => self.beta0 = list(v)?,
            "link" => self.link = LinkShape::parse(v).ok_or_else(|| format!("bad link '{v}'"))?,
            "covariates" => self.covariates = CovariateLaw::parse(v).ok_or_else(|| format!("bad covariate law '{v}'"))?,
            "replications" => self.replications = num(v)?,
            other => return Err(format!("unknown key '{other}'")),
        }
        Ok(())
    }
}

fn names(v: &str) -> Vec<String> {
    v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

fn num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse '{v}'"))
}

fn opt_num<T: std::str::FromStr>(v: &str) -> std::result::Result<Option<T>, String> {
    if v.eq_ignore_ascii_case("auto") {
        Ok(None)
    } else {
        num(v).map(Some)
    }
}

fn list(v: &str) -> std::result::Result<Vec<f64>, String> {
    v.split(',').map(|s| num(s.trim())).collect()
}

fn opt_list(v: &str) -> std::result::Result<Option<Vec<f64>>, String> {
    if v.eq_ignore_ascii_case("auto") {
        Ok(None)
    } else {
        list(v).map(Some)
    }
}

fn boolean(v: &str) -> std::result::Result<bool, String> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected true or false, got '{v}'")),
    }
}

fn kernel(v: &str) -> std::result::Result<KernelBase, String> {
    KernelBase::parse(v).ok_or_else(|| format!("unknown kernel '{v}'"))
}

/// Parses a flat `key = value` file. `#` starts a comment; blank lines are skipped.
pub fn parse_config_text(text: &str) -> CliResult<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("config line {}: expected key = value", i + 1)))?;
        out.push((i + 1, k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn build_config(sub: &str, common: &CommonArgs, data: Option<&DataArgs>) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::new(sub);
    if let Some(path) = &common.config {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        for (line, k, v) in parse_config_text(&text)? {
            cfg.set(&k, &v).map_err(|m| CliError::usage(format!("{} line {line}: {m}", path.display())))?;
        }
    }
    for kv in &common.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| CliError::usage(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        cfg.set(k, v).map_err(|m| CliError::usage(format!("--set {k}: {m}")))?;
    }
    let mut flags: Vec<(&str, String)> = Vec::new();
    if let Some(o) = &common.out {
        flags.push(("out", o.display().to_string()));
    }
    if let Some(f) = &common.family {
        flags.push(("family", f.clone()));
    }
    if let Some(s) = common.seed {
        flags.push(("seed", s.to_string()));
    }
    if let Some(d) = data {
        if let Some(i) = &d.input {
            flags.push(("input", i.display().to_string()));
        }
        if let Some(x) = &d.x_cols {
            flags.push(("x_cols", x.clone()));
        }
        if let Some(z) = &d.z_cols {
            flags.push(("z_cols", z.clone()));
        }
    }
    for (k, v) in flags {
        cfg.set(k, &v).map_err(|m| CliError::usage(format!("--{}: {m}", k.replace('_', "-"))))?;
    }
    cfg.estimation.validate().map_err(|e| CliError::usage(e.to_string()))?;
    Ok(cfg)
}

/// Reads the named X and Z columns of a CSV file.
pub fn read_dataset(path: &Path, x_cols: &[String], z_cols: &[String]) -> CliResult<Dataset> {
    let shown = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError::usage(format!("cannot open {shown}: {e}")))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::usage(format!("{shown} line 1: {e}")))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    for c in x_cols {
        if z_cols.contains(c) {
            return Err(CliError::usage(format!("column '{c}' is listed as both X and Z")));
        }
    }
    let find = |c: &String| -> CliResult<usize> {
        header
            .iter()
            .position(|h| h == c)
            .ok_or_else(|| CliError::usage(format!("{shown} line 1: column '{c}' not in header")))
    };
    let xi: Vec<usize> = x_cols.iter().map(find).collect::<CliResult<_>>()?;
    let zi: Vec<usize> = z_cols.iter().map(find).collect::<CliResult<_>>()?;
    let mut xs = Vec::new();
    let mut zs = Vec::new();
    let mut n = 0;
    for (r, rec) in rdr.records().enumerate() {
        let line = r + 2;
        let rec = rec.map_err(|e| CliError::usage(format!("{shown} line {line}: {e}")))?;
        let field = |j: usize| -> CliResult<f64> {
            let s = rec.get(j).unwrap_or("").trim();
            let v: f64 = s
                .parse()
                .map_err(|_| CliError::usage(format!("{shown} line {line}: column '{}': not a number: '{s}'", header[j])))?;
            if !v.is_finite() {
                return Err(CliError::usage(format!("{shown} line {line}: column '{}': non-finite value", header[j])));
            }
            Ok(v)
        };
        for &j in &xi {
            xs.push(field(j)?);
        }
        for &j in &zi {
            zs.push(field(j)?);
        }
        n += 1;
    }
    let x = Array2::from_shape_vec((n, xi.len()), xs).expect("shape");
    let z = Array2::from_shape_vec((n, zi.len()), zs).expect("shape");
    Dataset::with_names(x, z, x_cols.to_vec(), z_cols.to_vec()).map_err(|e| CliError::usage(format!("{shown}: {e}")))
}

/// Writes X and Z columns with round-trip float formatting.
pub fn write_dataset(path: &Path, data: &Dataset) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    let mut header: Vec<String> = data.x_names().to_vec();
    header.extend(data.z_names().iter().cloned());
    w.write_record(&header).map_err(|e| io_err(path, e))?;
    for i in 0..data.n() {
        let row: Vec<String> =
            data.x().row(i).iter().chain(data.z().row(i).iter()).map(|v| v.to_string()).collect();
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError { code: EXIT_ESTIMATION, message: format!("cannot write {}: {e}", path.display()) }
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn out_dir(cfg: &RunConfig) -> CliResult<&Path> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| io_err(&cfg.out_dir, e))?;
    Ok(&cfg.out_dir)
}

fn load(cfg: &RunConfig) -> CliResult<(Dataset, CopulaModel)> {
    let input = cfg.input.as_ref().ok_or_else(|| CliError::usage("no input file given"))?;
    if cfg.x_cols.len() < 2 || cfg.z_cols.len() < 2 {
        return Err(CliError::usage("need at least two x-columns and two z-columns"));
    }
    let data = read_dataset(input, &cfg.x_cols, &cfg.z_cols)?;
    let model = CopulaModel::new(cfg.family, data.d()).map_err(|e| CliError::usage(e.to_string()))?;
    Ok((data, model))
}

/// `n` evenly spaced points from the 5th to the 95th percentile of `proj`.
pub fn index_grid(proj: &[f64], n: usize) -> Vec<f64> {
    let lo = percentile(proj, 5.0);
    let hi = percentile(proj, 95.0);
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|k| if k + 1 == n { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 }).collect()
}

#[derive(Serialize)]
struct FitReport<'a> {
    status: &'a str,
    error: Option<ErrorInfo>,
    beta_hat: Option<Vec<f64>>,
    std_errors: Option<Vec<f64>>,
    fit: Option<&'a FitResult>,
    config: &'a RunConfig,
}

#[derive(Serialize)]
struct ErrorInfo {
    name: String,
    message: String,
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Data used for the link: pseudo-observations or raw X, per the configuration.
pub fn link_data(data: &Dataset, config: &EstimationConfig) -> crate::Result<Dataset> {
    match config.link_input {
        LinkInput::Raw => Ok(data.clone()),
        LinkInput::Pseudo => {
            let r = config.resolve(data)?;
            let kernel = KernelSpec::new(config.margin_kernel, r.margin_order)?;
            let margin = MarginModel::Nonparametric { kernel, h: r.h, leave_one_out: config.leave_one_out };
            let pseudo = build_pseudo_sample(data, &margin, &TrimBox::none(data.p()))?;
            pseudo_dataset(data, &pseudo)
        }
    }
}

fn link_table(data: &Dataset, model: &CopulaModel, config: &EstimationConfig, beta: &[f64], points: usize) -> crate::Result<String> {
    let ld = link_data(data, config)?;
    let proj = ld.index(beta)?;
    let grid = index_grid(&proj, points);
    let kernel = config.index_kernel_spec()?;
    let h = config.h_tilde(&ld, beta);
    let curve = link_curve(model, &ld, beta, &grid, &kernel, h)?;
    let mut out = String::from("y\ttau_hat\ttheta_hat\tclamped\n");
    for (y, r) in grid.iter().zip(curve) {
        match r {
            Ok(l) => writeln!(out, "{y}\t{}\t{}\t{}", l.tau_hat.value, l.theta_hat, l.clamped as u8),
            Err(e) => writeln!(out, "{y}\tNA\tNA\tNA\t# {}", e.name()),
        }
        .expect("string write");
    }
    Ok(out)
}

fn summary(cfg: &RunConfig, f: &FitResult) -> String {
    let mut s = String::new();
    let beta = f.beta_hat.beta();
    let se = f.std_errors();
    let _ = writeln!(s, "family       {}", cfg.family.name());
    let _ = writeln!(s, "n            {} (kept {})", f.diagnostics.n, f.diagnostics.n_kept);
    let _ = writeln!(s, "criterion    {}", f.criterion_value);
    let _ = writeln!(s, "h_tilde      {}", f.diagnostics.h_tilde);
    let _ = writeln!(s, "nu           {}", f.diagnostics.settings.nu);
    let _ = writeln!(s, "\ncoef        estimate     std.err      95% interval");
    for (j, b) in beta.iter().enumerate() {
        let name = cfg.z_cols.get(j).cloned().unwrap_or_else(|| format!("z{}", j + 1));
        if j == 0 {
            let _ = writeln!(s, "{name:<11} {b:<12} (fixed)");
            continue;
        }
        match (&se, &f.ci) {
            (Some(se), Some(ci)) => {
                let (lo, hi) = ci[j - 1];
                let _ = writeln!(s, "{name:<11} {b:<12.6} {:<12.6} [{lo:.6}, {hi:.6}]", se[j - 1]);
            }
            _ => {
                let _ = writeln!(s, "{name:<11} {b:<12.6} NA");
            }
        }
    }
    if let Some((name, msg)) = &f.asymptotics_error {
        let _ = writeln!(s, "\nno standard errors: {name}: {msg}");
    }
    if f.diagnostics.weak_identification {
        let _ = writeln!(s, "\nwarning: weak identification (criterion almost flat across starts)");
    }
    let _ = writeln!(s, "\nclamped links {:.4}, fallback rows {}", f.diagnostics.clamp_fraction, f.diagnostics.fallback_rows);
    s
}

pub fn cmd_fit(cfg: &RunConfig) -> CliResult<()> {
    let (data, model) = load(cfg)?;
    let dir = out_dir(cfg)?;
    match fit(&data, &model, &cfg.estimation) {
        Ok(f) => {
            let report = FitReport {
                status: "ok",
                error: None,
                beta_hat: Some(f.beta_hat.beta()),
                std_errors: f.std_errors(),
                fit: Some(&f),
                config: cfg,
            };
            write(&dir.join("fit_report.json"), &json(&report))?;
            write(&dir.join("fit_summary.txt"), &summary(cfg, &f))?;
            let table = link_table(&data, &model, &cfg.estimation, &f.beta_hat.beta(), cfg.grid_points)
                .map_err(|e| CliError::estimation(&e))?;
            write(&dir.join("link_curve.tsv"), &table)
        }
        Err(e) => {
            let report = FitReport {
                status: "error",
                error: Some(ErrorInfo { name: e.name().into(), message: e.to_string() }),
                beta_hat: None,
                std_errors: None,
                fit: None,
                config: cfg,
            };
            write(&dir.join("fit_report.json"), &json(&report))?;
            Err(CliError::estimation(&e))
        }
    }
}

pub fn cmd_simulate(cfg: &RunConfig) -> CliResult<()> {
    let mut spec = cfg.dgp();
    if spec.beta0.len() != spec.p {
        return Err(CliError::usage(format!("beta0 needs {} free entries for p = {}", spec.p - 1, spec.p)));
    }
    spec.validate().map_err(|e| CliError::usage(e.to_string()))?;
    let dir = out_dir(cfg)?;
    let sim = generate(&spec).map_err(|e| CliError::estimation(&e))?;
    write_dataset(&dir.join("dataset.csv"), &named(&sim.data))?;
    write(&dir.join("simulation.json"), &json(cfg))?;
    if cfg.replications > 0 {
        spec.seed = cfg.estimation.seed;
        let rep = run_replications(&spec, cfg.replications, &cfg.estimation).map_err(|e| CliError::estimation(&e))?;
        write(&dir.join("replications.tsv"), &rep.to_tsv())?;
        let mut s = String::new();
        for (l, b0) in rep.beta0_free.iter().enumerate() {
            let j = l + 2;
            let cov = rep.coverage[l].map(|c| c.to_string()).unwrap_or_else(|| "NA".into());
            let _ = writeln!(s, "beta{j}: true {b0} bias {} rmse {} coverage {cov}", rep.bias[l], rep.rmse[l]);
        }
        let _ = writeln!(s, "failed {} of {}", rep.n_failed, rep.rows.len());
        write(&dir.join("replication_summary.txt"), &s)?;
    }
    Ok(())
}

/// Gives default column names `x1..`, `z1..` to unnamed data.
fn named(data: &Dataset) -> Dataset {
    let xn = (1..=data.d()).map(|k| format!("x{k}")).collect();
    let zn = (1..=data.p()).map(|k| format!("z{k}")).collect();
    Dataset::with_names(data.x().clone(), data.z().clone(), xn, zn).expect("valid data")
}

pub fn cmd_tau_curve(cfg: &RunConfig) -> CliResult<()> {
    let (data, model) = load(cfg)?;
    let beta = match &cfg.beta {
        Some(b) => {
            if b.len() != data.p() {
                return Err(CliError::usage(format!("beta has length {}, expected {}", b.len(), data.p())));
            }
            IndexParam::from_beta(b).map_err(|e| CliError::usage(e.to_string()))?.beta()
        }
        None => fit(&data, &model, &cfg.estimation).map_err(|e| CliError::estimation(&e))?.beta_hat.beta(),
    };
    let dir = out_dir(cfg)?;
    let ld = link_data(&data, &cfg.estimation).map_err(|e| CliError::estimation(&e))?;
    let proj = ld.index(&beta).map_err(|e| CliError::usage(e.to_string()))?;
    let grid = index_grid(&proj, cfg.grid_points);
    let kernel = cfg.estimation.index_kernel_spec().map_err(|e| CliError::usage(e.to_string()))?;
    let h = cfg.estimation.h_tilde(&ld, &beta);
    let curve = cond_tau_curve(&ld, &beta, &grid, &kernel, h).map_err(|e| CliError::estimation(&e))?;
    let mut out = String::from("y\ttau_hat\teffective_weight_mass\n");
    for (y, r) in grid.iter().zip(curve) {
        match r {
            Ok(t) => writeln!(out, "{y}\t{}\t{}", t.value, t.effective_weight_mass),
            Err(_) => writeln!(out, "{y}\tNA\tNA"),
        }
        .expect("string write");
    }
    write(&dir.join("tau_curve.tsv"), &out)
}

/// Honors the thread-count variable once per process.
pub fn init_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit code; messages go to stdout and stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    init_threads();
    let res = match &cli.command {
        Command::Fit(a) => build_config("fit", &a.common, Some(&a.data)).and_then(|c| cmd_fit(&c)),
        Command::Simulate(a) => build_config("simulate", &a.common, None).and_then(|mut c| {
            if let Some(n) = a.n {
                c.n = n;
            }
            if let Some(r) = a.replications {
                c.replications = r;
            }
            cmd_simulate(&c)
        }),
        Command::TauCurve(a) => build_config("tau-curve", &a.common, Some(&a.data)).and_then(|mut c| {
            if let Some(b) = &a.beta {
                c.set("beta", b).map_err(|m| CliError::usage(format!("--beta: {m}")))?;
            }
            cmd_tau_curve(&c)
        }),
        Command::Selftest => {
            let results = crate::selftest::run_all();
            let mut ok = true;
            for r in &results {
                println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
                ok &= r.passed;
            }
            if ok {
                Ok(())
            } else {
                Err(CliError { code: EXIT_ESTIMATION, message: "self-test failed".into() })
            }
        }
    };
    match res {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
