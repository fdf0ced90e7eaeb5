//! Conditional Kendall's tau given an index direction.
//!
//! For kernel weights K_j = K((β'Z_j - y)/h̃) the concordance sum
//! A = Σ_{i≠j} K_i K_j 1(X_j < X_i componentwise) is normalized by
//! S1² - S2 (S1 = ΣK, S2 = ΣK²), which removes the diagonal. Joe's
//! normalization then maps the concordance probability to
//! τ = (2^d S' - 1) / (2^(d-1) - 1).

use crate::cond_ecdf::Dataset;
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauEstimate {
    /// Estimated tau, clamped to [-1, 1].
    pub value: f64,
    /// Kish effective sample size (ΣK)² / ΣK² of the window.
    pub effective_weight_mass: f64,
    pub y: f64,
    pub beta: Vec<f64>,
}

/// Dense ranks of each X column (ties share a rank).
#[derive(Debug, Clone)]
pub struct RankCache {
    ranks: Vec<Vec<u32>>,
    levels: Vec<usize>,
}

impl RankCache {
    pub fn new(data: &Dataset) -> RankCache {
        let n = data.n();
        let mut ranks = Vec::with_capacity(data.d());
        let mut levels = Vec::with_capacity(data.d());
        for col in data.x().columns() {
            let mut o: Vec<usize> = (0..n).collect();
            o.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
            let mut r = vec![0u32; n];
            let mut level = 0u32;
            for (pos, &i) in o.iter().enumerate() {
                if pos > 0 && col[i] != col[o[pos - 1]] {
                    level += 1;
                }
                r[i] = level;
            }
            ranks.push(r);
            levels.push(level as usize + 1);
        }
        RankCache { ranks, levels }
    }

    pub fn dim(&self) -> usize {
        self.ranks.len()
    }
}

/// Joe's normalization of a concordance probability.
pub fn joe_tau(s_prime: f64, d: usize) -> f64 {
    (2f64.powi(d as i32) * s_prime - 1.0) / (2f64.powi(d as i32 - 1) - 1.0)
}

struct Fenwick {
    tree: Vec<f64>,
}

impl Fenwick {
    fn new(n: usize) -> Fenwick {
        Fenwick { tree: vec![0.0; n + 1] }
    }
    fn add(&mut self, i: usize, v: f64) {
        let mut i = i + 1;
        while i < self.tree.len() {
            self.tree[i] += v;
            i += i & i.wrapping_neg();
        }
    }
    /// Sum over positions < i.
    fn prefix(&self, i: usize) -> f64 {
        let mut i = i;
        let mut s = 0.0;
        while i > 0 {
            s += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        s
    }
}

/// Σ_{i≠j} w_i w_j 1(a_j < a_i, b_j < b_i) over (rank_a, rank_b, w) triples.
fn pair_concordance(points: &mut [(u32, u32, f64)], levels_b: usize) -> f64 {
    points.sort_unstable_by(|x, y| x.0.cmp(&y.0).then(x.1.cmp(&y.1)));
    let mut fw = Fenwick::new(levels_b);
    let mut a = 0.0;
    let mut start = 0;
    while start < points.len() {
        let mut end = start;
        while end < points.len() && points[end].0 == points[start].0 {
            end += 1;
        }
        for p in &points[start..end] {
            a += p.2 * fw.prefix(p.1 as usize);
        }
        for p in &points[start..end] {
            fw.add(p.1 as usize, p.2);
        }
        start = end;
    }
    a
}

/// Three-column version of [`pair_concordance`]: divide and conquer over the first
/// rank with a Fenwick sweep on the other two, O(n log² n).
fn triple_concordance(points: &mut [(u32, u32, u32, f64)], levels_c: usize) -> f64 {
    points.sort_unstable_by(|x, y| x.0.cmp(&y.0));
    let mut starts: Vec<usize> = (0..points.len()).filter(|&i| i == 0 || points[i].0 != points[i - 1].0).collect();
    starts.push(points.len());
    let mut fw = Fenwick::new(levels_c);
    let mut buf = Vec::with_capacity(points.len());
    split_concordance(points, &starts, &mut fw, &mut buf)
}

/// `groups` holds the start offsets of equal-first-rank runs plus the end. Leaves
/// `points` sorted by the second rank.
fn split_concordance(
    points: &mut [(u32, u32, u32, f64)],
    groups: &[usize],
    fw: &mut Fenwick,
    buf: &mut Vec<(u32, u32, u32, f64)>,
) -> f64 {
    let base = groups[0];
    let k = groups.len() - 1;
    if k <= 1 {
        points.sort_unstable_by(|x, y| x.1.cmp(&y.1));
        return 0.0;
    }
    let m = k / 2;
    let cut = groups[m] - base;
    let mut a = {
        let (left, right) = points.split_at_mut(cut);
        split_concordance(left, &groups[..=m], fw, buf) + split_concordance(right, &groups[m..], fw, buf)
    };
    let (left, right) = points.split_at(cut);
    let mut l = 0;
    for r in right {
        while l < left.len() && left[l].1 < r.1 {
            fw.add(left[l].2 as usize, left[l].3);
            l += 1;
        }
        a += r.3 * fw.prefix(r.2 as usize);
    }
    for p in &left[..l] {
        fw.add(p.2 as usize, -p.3);
    }
    buf.clear();
    let (mut i, mut j) = (0, 0);
    while i < left.len() || j < right.len() {
        if j == right.len() || (i < left.len() && left[i].1 <= right[j].1) {
            buf.push(left[i]);
            i += 1;
        } else {
            buf.push(right[j]);
            j += 1;
        }
    }
    points.copy_from_slice(buf);
    a
}

/// Same sum in d dimensions by direct pair enumeration.
fn general_concordance(ranks: &[&[u32]], idx: &[usize], w: &[f64]) -> f64 {
    let mut a = 0.0;
    for s in 0..idx.len() {
        let i = idx[s];
        for t in (s + 1)..idx.len() {
            let j = idx[t];
            let mut lt = true;
            let mut gt = true;
            for r in ranks {
                let (ri, rj) = (r[i], r[j]);
                lt &= rj < ri;
                gt &= ri < rj;
                if !lt && !gt {
                    break;
                }
            }
            if lt || gt {
                a += w[s] * w[t];
            }
        }
    }
    a
}

/// Weighted concordance probability S' and effective mass for rows `idx` with weights `w`
/// on the columns `cols`.
fn window_concordance(
    cache: &RankCache,
    cols: &[usize],
    idx: &[usize],
    w: &[f64],
) -> Result<(f64, f64)> {
    let s1: f64 = w.iter().sum();
    let s2: f64 = w.iter().map(|v| v * v).sum();
    let positive = w.iter().filter(|v| **v != 0.0).count();
    let denom = s1 * s1 - s2;
    if positive < 2 || !(denom > 0.0) {
        return Err(Error::InsufficientSupport);
    }
    let a = if cols.len() == 2 {
        let (ra, rb) = (&cache.ranks[cols[0]], &cache.ranks[cols[1]]);
        let mut pts: Vec<(u32, u32, f64)> =
            idx.iter().zip(w).map(|(&i, &wi)| (ra[i], rb[i], wi)).collect();
        pair_concordance(&mut pts, cache.levels[cols[1]])
    } else if cols.len() == 3 {
        let r: Vec<&[u32]> = cols.iter().map(|&c| cache.ranks[c].as_slice()).collect();
        let mut pts: Vec<(u32, u32, u32, f64)> =
            idx.iter().zip(w).map(|(&i, &wi)| (r[0][i], r[1][i], r[2][i], wi)).collect();
        triple_concordance(&mut pts, cache.levels[cols[2]])
    } else {
        let rs: Vec<&[u32]> = cols.iter().map(|&c| cache.ranks[c].as_slice()).collect();
        general_concordance(&rs, idx, w)
    };
    Ok((a / denom, s1 * s1 / s2))
}

/// Weighted Joe tau of the rows of `x` (n×d) with weights `w`.
pub fn weighted_tau(x: &ndarray::Array2<f64>, w: &[f64]) -> Result<f64> {
    if w.len() != x.nrows() {
        return Err(Error::DimensionMismatch { expected: x.nrows(), got: w.len() });
    }
    let z = ndarray::Array2::zeros((x.nrows(), 1));
    let data = Dataset::new(x.clone(), z)?;
    let cache = RankCache::new(&data);
    let cols: Vec<usize> = (0..x.ncols()).collect();
    let idx: Vec<usize> = (0..x.nrows()).filter(|&i| w[i] != 0.0).collect();
    let ww: Vec<f64> = idx.iter().map(|&i| w[i]).collect();
    let (sp, _) = window_concordance(&cache, &cols, &idx, &ww)?;
    Ok(joe_tau(sp, x.ncols()).clamp(-1.0, 1.0))
}

/// Unweighted Kendall tau of two samples (O(n log n)).
pub fn kendall_tau(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let x = ndarray::Array2::from_shape_fn((n, 2), |(i, k)| if k == 0 { a[i] } else { b[i] });
    weighted_tau(&x, &vec![1.0; n]).unwrap_or(f64::NAN)
}

/// Shared state for repeated tau evaluations along one index direction.
pub struct TauEngine<'a> {
    data: &'a Dataset,
    cache: &'a RankCache,
    kernel: &'a KernelSpec,
    h: f64,
    beta: Vec<f64>,
    proj: Vec<f64>,
    order: Vec<usize>,
    sorted: Vec<f64>,
}

impl<'a> TauEngine<'a> {
    pub fn new(
        data: &'a Dataset,
        cache: &'a RankCache,
        beta: &[f64],
        kernel: &'a KernelSpec,
        h_tilde: f64,
    ) -> Result<TauEngine<'a>> {
        if data.d() < 2 {
            return Err(Error::InvalidData("tau needs at least two X columns".into()));
        }
        if !(h_tilde > 0.0 && h_tilde.is_finite()) {
            return Err(Error::InvalidParameter("index bandwidth must be positive".into()));
        }
        let proj = data.index(beta)?;
        let mut order: Vec<usize> = (0..proj.len()).collect();
        order.sort_by(|&a, &b| proj[a].total_cmp(&proj[b]));
        let sorted = order.iter().map(|&i| proj[i]).collect();
        Ok(TauEngine { data, cache, kernel, h: h_tilde, beta: beta.to_vec(), proj, order, sorted })
    }

    pub fn projection(&self) -> &[f64] {
        &self.proj
    }

    pub fn h_tilde(&self) -> f64 {
        self.h
    }

    /// Rows inside the kernel window around `y` and their (unnormalized) weights.
    fn window(&self, y: f64, exclude: Option<usize>) -> (Vec<usize>, Vec<f64>) {
        let half = self.kernel.support_halfwidth() * self.h;
        let lo = self.sorted.partition_point(|v| *v < y - half);
        let hi = self.sorted.partition_point(|v| *v <= y + half);
        let mut idx = Vec::with_capacity(hi - lo);
        let mut w = Vec::with_capacity(hi - lo);
        for &j in &self.order[lo..hi] {
            if Some(j) == exclude {
                continue;
            }
            let k = self.kernel.eval((self.proj[j] - y) / self.h);
            if k != 0.0 {
                idx.push(j);
                w.push(k);
            }
        }
        (idx, w)
    }

    fn estimate(&self, y: f64, value: f64, ess: f64) -> TauEstimate {
        TauEstimate { value: value.clamp(-1.0, 1.0), effective_weight_mass: ess, y, beta: self.beta.clone() }
    }

    /// Joe tau over all X columns; `exclude` leaves one row out.
    pub fn tau(&self, y: f64, exclude: Option<usize>) -> Result<TauEstimate> {
        let (idx, w) = self.window(y, exclude);
        if idx.is_empty() {
            return Err(Error::EmptyWindow);
        }
        let cols: Vec<usize> = (0..self.data.d()).collect();
        let (sp, ess) = window_concordance(self.cache, &cols, &idx, &w)?;
        Ok(self.estimate(y, joe_tau(sp, cols.len()), ess))
    }

    /// Average of the bivariate taus over all column pairs.
    pub fn pairwise_mean_tau(&self, y: f64, exclude: Option<usize>) -> Result<TauEstimate> {
        let (idx, w) = self.window(y, exclude);
        if idx.is_empty() {
            return Err(Error::EmptyWindow);
        }
        let d = self.data.d();
        let mut total = 0.0;
        let mut pairs = 0;
        let mut ess = 0.0;
        for k in 0..d {
            for l in (k + 1)..d {
                let (sp, e) = window_concordance(self.cache, &[k, l], &idx, &w)?;
                total += joe_tau(sp, 2);
                ess = e;
                pairs += 1;
            }
        }
        Ok(self.estimate(y, total / pairs as f64, ess))
    }

    /// Analytic gradient of the unclamped tau in the free index components.
    fn analytic_grad(&self, y: f64) -> Result<Vec<f64>> {
        let (idx, w) = self.window(y, None);
        if idx.is_empty() {
            return Err(Error::EmptyWindow);
        }
        let d = self.data.d();
        let rs: Vec<&[u32]> = (0..d).map(|c| self.cache.ranks[c].as_slice()).collect();
        let mut c = vec![0.0; idx.len()];
        let mut a = 0.0;
        for s in 0..idx.len() {
            for t in (s + 1)..idx.len() {
                let (i, j) = (idx[s], idx[t]);
                let lt = rs.iter().all(|r| r[j] < r[i]);
                let gt = rs.iter().all(|r| r[i] < r[j]);
                if lt || gt {
                    a += w[s] * w[t];
                    c[s] += w[t];
                    c[t] += w[s];
                }
            }
        }
        let s1: f64 = w.iter().sum();
        let s2: f64 = w.iter().map(|v| v * v).sum();
        let denom = s1 * s1 - s2;
        if idx.len() < 2 || !(denom > 0.0) {
            return Err(Error::InsufficientSupport);
        }
        let factor = 2f64.powi(d as i32) / (2f64.powi(d as i32 - 1) - 1.0);
        let z = self.data.z();
        Ok((1..self.data.p())
            .map(|l| {
                let mut da = 0.0;
                let mut ds1 = 0.0;
                let mut ds2 = 0.0;
                for (s, &j) in idx.iter().enumerate() {
                    let dk = self.kernel.deriv((self.proj[j] - y) / self.h) / self.h * z[[j, l]];
                    da += dk * c[s];
                    ds1 += dk;
                    ds2 += 2.0 * w[s] * dk;
                }
                let dden = 2.0 * s1 * ds1 - ds2;
                factor * (da * denom - a * dden) / (denom * denom)
            })
            .collect())
    }
}

/// Conditional tau at index value `y`.
pub fn cond_tau(data: &Dataset, beta: &[f64], y: f64, kernel: &KernelSpec, h_tilde: f64) -> Result<TauEstimate> {
    let cache = RankCache::new(data);
    TauEngine::new(data, &cache, beta, kernel, h_tilde)?.tau(y, None)
}

/// Tau at each grid point, sharing one projection.
pub fn cond_tau_curve(
    data: &Dataset,
    beta: &[f64],
    y_grid: &[f64],
    kernel: &KernelSpec,
    h_tilde: f64,
) -> Result<Vec<Result<TauEstimate>>> {
    let cache = RankCache::new(data);
    let eng = TauEngine::new(data, &cache, beta, kernel, h_tilde)?;
    Ok(y_grid.iter().map(|&y| eng.tau(y, None)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GradMode {
    FiniteDiff,
    Analytic,
}

/// Gradient of τ̂(β, y) in the free components β_2..β_p, with y held fixed.
pub fn grad_beta_cond_tau(
    data: &Dataset,
    beta: &[f64],
    y: f64,
    kernel: &KernelSpec,
    h_tilde: f64,
    mode: GradMode,
) -> Result<Vec<f64>> {
    let cache = RankCache::new(data);
    match mode {
        GradMode::Analytic => {
            if !kernel.differentiable() {
                return Err(Error::NonDifferentiableKernel);
            }
            TauEngine::new(data, &cache, beta, kernel, h_tilde)?.analytic_grad(y)
        }
        GradMode::FiniteDiff => {
            let raw = |b: &[f64]| -> Result<f64> {
                let eng = TauEngine::new(data, &cache, b, kernel, h_tilde)?;
                let (idx, w) = eng.window(y, None);
                let cols: Vec<usize> = (0..data.d()).collect();
                let (sp, _) = window_concordance(&cache, &cols, &idx, &w)?;
                Ok(joe_tau(sp, cols.len()))
            };
            let mut g = Vec::with_capacity(beta.len().saturating_sub(1));
            for l in 1..beta.len() {
                let step = 1e-4 * (1.0 + beta[l].abs());
                let mut bp = beta.to_vec();
                let mut bm = beta.to_vec();
                bp[l] += step;
                bm[l] -= step;
                g.push((raw(&bp)? - raw(&bm)?) / (2.0 * step));
            }
            Ok(g)
        }
    }
}
