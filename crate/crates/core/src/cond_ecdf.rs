//! Nadaraya–Watson conditional distribution functions.
//!
//! Covariate-conditional marginals F̂_k(x | z), index-conditional CDFs
//! Ĥ_β(x | y), and the kernel density of the index β'Z.

use crate::copulas::EPS_U;
use crate::error::{Error, Result};
use crate::kernels::{product_weight_unchecked, KernelSpec};
use crate::stats::percentile;
use ndarray::{Array2, ArrayView1};

/// Observations (X_i, Z_i) with X in R^d and Z in R^p.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Array2<f64>,
    z: Array2<f64>,
    x_names: Vec<String>,
    z_names: Vec<String>,
}

pub const MIN_ROWS: usize = 10;

impl Dataset {
    pub fn new(x: Array2<f64>, z: Array2<f64>) -> Result<Dataset> {
        let xn = (1..=x.ncols()).map(|k| format!("x{k}")).collect();
        let zn = (1..=z.ncols()).map(|k| format!("z{k}")).collect();
        Self::with_names(x, z, xn, zn)
    }

    pub fn with_names(
        x: Array2<f64>,
        z: Array2<f64>,
        x_names: Vec<String>,
        z_names: Vec<String>,
    ) -> Result<Dataset> {
        if x.nrows() != z.nrows() {
            return Err(Error::DimensionMismatch { expected: x.nrows(), got: z.nrows() });
        }
        if x.nrows() < MIN_ROWS {
            return Err(Error::InvalidData(format!("need at least {MIN_ROWS} rows, got {}", x.nrows())));
        }
        if x.ncols() == 0 || z.ncols() == 0 {
            return Err(Error::InvalidData("X and Z need at least one column each".into()));
        }
        if x_names.len() != x.ncols() || z_names.len() != z.ncols() {
            return Err(Error::InvalidData("column names do not match matrix widths".into()));
        }
        if x.iter().chain(z.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite value".into()));
        }
        Ok(Dataset { x, z, x_names, z_names })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }
    pub fn d(&self) -> usize {
        self.x.ncols()
    }
    pub fn p(&self) -> usize {
        self.z.ncols()
    }
    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }
    pub fn z(&self) -> &Array2<f64> {
        &self.z
    }
    pub fn x_names(&self) -> &[String] {
        &self.x_names
    }
    pub fn z_names(&self) -> &[String] {
        &self.z_names
    }

    /// Index values β'Z_j.
    pub fn index(&self, beta: &[f64]) -> Result<Vec<f64>> {
        if beta.len() != self.p() {
            return Err(Error::DimensionMismatch { expected: self.p(), got: beta.len() });
        }
        Ok(self.index_unchecked(beta))
    }

    pub(crate) fn index_unchecked(&self, beta: &[f64]) -> Vec<f64> {
        self.z
            .rows()
            .into_iter()
            .map(|r| r.iter().zip(beta).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Rows selected by `idx`, in that order.
    pub fn select(&self, idx: &[usize]) -> Result<Dataset> {
        Dataset::with_names(
            self.x.select(ndarray::Axis(0), idx),
            self.z.select(ndarray::Axis(0), idx),
            self.x_names.clone(),
            self.z_names.clone(),
        )
    }
}

/// Trimming box: Z ∈ [-M_z, M_z] componentwise and U ∈ [ν, 1-ν]^d.
#[derive(Debug, Clone, PartialEq)]
pub struct TrimBox {
    pub m_z: Vec<f64>,
    pub nu_n: f64,
}

impl TrimBox {
    pub fn new(m_z: Vec<f64>, nu_n: f64) -> Result<TrimBox> {
        if !(0.0..0.5).contains(&nu_n) {
            return Err(Error::InvalidParameter(format!("nu_n must lie in [0, 0.5), got {nu_n}")));
        }
        if m_z.iter().any(|m| !(*m > 0.0)) {
            return Err(Error::InvalidParameter("covariate box half-widths must be positive".into()));
        }
        Ok(TrimBox { m_z, nu_n })
    }

    /// No trimming at all.
    pub fn none(p: usize) -> TrimBox {
        TrimBox { m_z: vec![f64::INFINITY; p], nu_n: 0.0 }
    }

    /// ν = n^(-1/5) and M_z = componentwise 95th percentile of |Z|.
    pub fn default_for(data: &Dataset) -> TrimBox {
        TrimBox { m_z: default_box(data), nu_n: default_nu(data.n()) }
    }

    pub fn contains_z(&self, z: ArrayView1<f64>) -> bool {
        z.iter().zip(&self.m_z).all(|(v, m)| v.abs() <= *m)
    }

    pub fn contains_u(&self, u: ArrayView1<f64>) -> bool {
        u.iter().all(|&v| v >= self.nu_n && v <= 1.0 - self.nu_n)
    }
}

/// Multiplier of the default boundary trim ν_n = NU_SCALE · n^(-1/5).
pub const NU_SCALE: f64 = 0.2;

pub fn default_nu(n: usize) -> f64 {
    NU_SCALE * (n as f64).powf(-0.2)
}

pub fn default_box(data: &Dataset) -> Vec<f64> {
    data.z
        .columns()
        .into_iter()
        .map(|c| {
            let a: Vec<f64> = c.iter().map(|v| v.abs()).collect();
            percentile(&a, 95.0)
        })
        .collect()
}

fn check_h(h: &[f64], p: usize) -> Result<()> {
    if h.len() != p {
        return Err(Error::DimensionMismatch { expected: p, got: h.len() });
    }
    if h.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter("bandwidths must be positive".into()));
    }
    Ok(())
}

/// Normalized Nadaraya–Watson weights w_j(z); `exclude` drops one row.
pub fn nw_weights(
    data: &Dataset,
    z: &[f64],
    kernel: &KernelSpec,
    h: &[f64],
    exclude: Option<usize>,
) -> Result<Vec<f64>> {
    check_h(h, data.p())?;
    if z.len() != data.p() {
        return Err(Error::DimensionMismatch { expected: data.p(), got: z.len() });
    }
    let mut dz = vec![0.0; data.p()];
    let mut w: Vec<f64> = data
        .z
        .rows()
        .into_iter()
        .enumerate()
        .map(|(j, r)| {
            if Some(j) == exclude {
                return 0.0;
            }
            for (k, v) in r.iter().enumerate() {
                dz[k] = v - z[k];
            }
            product_weight_unchecked(kernel, &dz, h)
        })
        .collect();
    normalize(&mut w)?;
    Ok(w)
}

fn normalize(w: &mut [f64]) -> Result<()> {
    let s: f64 = w.iter().sum();
    if !(s > 0.0) || w.iter().all(|v| *v == 0.0) {
        return Err(Error::EmptyWindow);
    }
    for v in w.iter_mut() {
        *v /= s;
    }
    Ok(())
}

/// Weighted step CDF at `x`, made monotone by a running maximum and clipped to [0, 1].
/// Equals the plain weighted CDF whenever the weights are nonnegative.
fn monotone_cdf_at(points: &mut [(f64, f64)], x: f64) -> f64 {
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut cum = 0.0;
    let mut best: f64 = 0.0;
    for &(v, w) in points.iter() {
        if v > x {
            break;
        }
        cum += w;
        best = best.max(cum);
    }
    best.clamp(0.0, 1.0)
}

/// F̂_k(x | z) = Σ_j w_j(z) 1(X_jk ≤ x). `k` is zero-based.
pub fn cond_marginal_cdf(
    data: &Dataset,
    k: usize,
    x: f64,
    z: &[f64],
    kernel: &KernelSpec,
    h: &[f64],
) -> Result<f64> {
    if k >= data.d() {
        return Err(Error::DimensionMismatch { expected: data.d(), got: k + 1 });
    }
    let w = nw_weights(data, z, kernel, h, None)?;
    let mut pts: Vec<(f64, f64)> = w
        .iter()
        .enumerate()
        .filter(|(_, w)| **w != 0.0)
        .map(|(j, w)| (data.x[[j, k]], *w))
        .collect();
    Ok(monotone_cdf_at(&mut pts, x))
}

fn index_weights(data: &Dataset, beta: &[f64], y: f64, kernel: &KernelSpec, h_tilde: f64) -> Result<Vec<f64>> {
    if !(h_tilde > 0.0 && h_tilde.is_finite()) {
        return Err(Error::InvalidParameter("index bandwidth must be positive".into()));
    }
    let idx = data.index(beta)?;
    let mut w: Vec<f64> = idx.iter().map(|v| kernel.eval((v - y) / h_tilde)).collect();
    normalize(&mut w)?;
    Ok(w)
}

/// F̂_β(x | y) = Σ_j w_j(y) 1(X_j ≤ x componentwise).
pub fn index_cond_cdf(
    data: &Dataset,
    beta: &[f64],
    x: &[f64],
    y: f64,
    kernel: &KernelSpec,
    h_tilde: f64,
) -> Result<f64> {
    if x.len() != data.d() {
        return Err(Error::DimensionMismatch { expected: data.d(), got: x.len() });
    }
    let w = index_weights(data, beta, y, kernel, h_tilde)?;
    let mut s = 0.0;
    for (j, wj) in w.iter().enumerate() {
        if *wj != 0.0 && data.x.row(j).iter().zip(x).all(|(a, b)| a <= b) {
            s += wj;
        }
    }
    Ok(s.clamp(0.0, 1.0))
}

/// Ĥ_β(x, z | y) = Σ_j w_j(y) 1(X_j ≤ x, Z_j ≤ z).
pub fn index_joint_cdf(
    data: &Dataset,
    beta: &[f64],
    x: &[f64],
    z: &[f64],
    y: f64,
    kernel: &KernelSpec,
    h_tilde: f64,
) -> Result<f64> {
    if x.len() != data.d() {
        return Err(Error::DimensionMismatch { expected: data.d(), got: x.len() });
    }
    if z.len() != data.p() {
        return Err(Error::DimensionMismatch { expected: data.p(), got: z.len() });
    }
    let w = index_weights(data, beta, y, kernel, h_tilde)?;
    let mut s = 0.0;
    for (j, wj) in w.iter().enumerate() {
        if *wj != 0.0
            && data.x.row(j).iter().zip(x).all(|(a, b)| a <= b)
            && data.z.row(j).iter().zip(z).all(|(a, b)| a <= b)
        {
            s += wj;
        }
    }
    Ok(s.clamp(0.0, 1.0))
}

/// Kernel density of the index at `y`, floored at zero.
pub fn index_density(data: &Dataset, beta: &[f64], y: f64, kernel: &KernelSpec, h_tilde: f64) -> Result<f64> {
    if !(h_tilde > 0.0) {
        return Err(Error::InvalidParameter("index bandwidth must be positive".into()));
    }
    let idx = data.index(beta)?;
    let s: f64 = idx.iter().map(|v| kernel.eval((v - y) / h_tilde)).sum();
    Ok((s / (data.n() as f64 * h_tilde)).max(0.0))
}

/// Matrix Û with Û_ik = F̂_k(X_ik | Z_i).
#[derive(Debug, Clone)]
pub struct PseudoMarginals {
    pub u: Array2<f64>,
    /// Rows whose kernel window was empty; their entries are placeholders.
    pub empty: Vec<bool>,
}

pub fn pseudo_marginals(
    data: &Dataset,
    kernel: &KernelSpec,
    h: &[f64],
    leave_one_out: bool,
) -> Result<PseudoMarginals> {
    check_h(h, data.p())?;
    let (n, d, p) = (data.n(), data.d(), data.p());
    let orders: Vec<Vec<usize>> = (0..d)
        .map(|k| {
            let mut o: Vec<usize> = (0..n).collect();
            o.sort_by(|&a, &b| data.x[[a, k]].total_cmp(&data.x[[b, k]]));
            o
        })
        .collect();
    let mut u = Array2::from_elem((n, d), 0.5);
    let mut empty = vec![false; n];
    let mut w = vec![0.0; n];
    let mut dz = vec![0.0; p];
    for i in 0..n {
        let zi = data.z.row(i);
        let mut s = 0.0;
        for j in 0..n {
            w[j] = if leave_one_out && j == i {
                0.0
            } else {
                for k in 0..p {
                    dz[k] = data.z[[j, k]] - zi[k];
                }
                product_weight_unchecked(kernel, &dz, h)
            };
            s += w[j];
        }
        if !(s > 0.0) || w.iter().all(|v| *v == 0.0) {
            empty[i] = true;
            continue;
        }
        for k in 0..d {
            let xi = data.x[[i, k]];
            let mut cum = 0.0;
            let mut best: f64 = 0.0;
            for &j in &orders[k] {
                if data.x[[j, k]] > xi {
                    break;
                }
                cum += w[j] / s;
                best = best.max(cum);
            }
            u[[i, k]] = best.clamp(EPS_U, 1.0 - EPS_U);
        }
    }
    Ok(PseudoMarginals { u, empty })
}
