//! Fast numerical self-checks run by `sicop selftest`.

use crate::cond_ecdf::{cond_marginal_cdf, nw_weights, Dataset};
use crate::copulas::{CopulaModel, Family, UnitPoint};
use crate::kendall::weighted_tau;
use crate::kernels::KernelSpec;
use ndarray::Array2;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, worst: f64, tol: f64) -> CheckResult {
    CheckResult { name, passed: worst <= tol, detail: format!("worst {worst:.3e}, tolerance {tol:.0e}") }
}

const FAMILIES: [Family; 3] = [Family::Gaussian, Family::Clayton, Family::Gumbel];

fn theta_grid(model: &CopulaModel, k: usize) -> Vec<f64> {
    let (lo, hi) = model.domain();
    let hi = hi.min(20.0);
    (1..=k).map(|j| lo + (hi - lo) * j as f64 / (k + 1) as f64).collect()
}

pub fn tau_round_trip() -> CheckResult {
    let mut worst: f64 = 0.0;
    for f in FAMILIES {
        for d in [2, 3] {
            let m = CopulaModel::new(f, d).expect("model");
            for t in theta_grid(&m, 10) {
                let back = m.tau_to_theta(m.theta_to_tau(t).expect("tau")).expect("theta");
                worst = worst.max((back - t).abs());
            }
        }
    }
    check("tau round trip", worst, 1e-8)
}

pub fn joe_tau_closed_forms() -> CheckResult {
    let c = CopulaModel::new(Family::Clayton, 2).expect("model").theta_to_tau(2.0).expect("tau");
    let g = CopulaModel::new(Family::Gumbel, 2).expect("model").theta_to_tau(2.0).expect("tau");
    let worst = (c - 0.5).abs().max((g - 0.5).abs());
    check("bivariate tau closed forms", worst, 1e-12)
}

pub fn theta_gradient() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for f in FAMILIES {
        let m = CopulaModel::new(f, 2).expect("model");
        let grid = theta_grid(&m, 10);
        for &t in &grid {
            let u = UnitPoint::new(&[rng.random_range(0.05..0.95), rng.random_range(0.05..0.95)]).expect("point");
            let h = 1e-5 * (1.0 + t.abs());
            let fd = (m.log_density(t + h, &u).expect("lc") - m.log_density(t - h, &u).expect("lc")) / (2.0 * h);
            let g = m.grad_theta_log_density(t, &u).expect("grad");
            worst = worst.max((g - fd).abs() / (1.0 + fd.abs()));
        }
    }
    check("theta gradient", worst, 1e-5)
}

pub fn kendall_nested_loop() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let n = 40;
        let x = Array2::from_shape_fn((n, 2), |_| rng.random::<f64>());
        let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let mut conc = 0.0;
        let mut pairs = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    pairs += w[i] * w[j];
                    if x[[j, 0]] < x[[i, 0]] && x[[j, 1]] < x[[i, 1]] {
                        conc += w[i] * w[j];
                    }
                }
            }
        }
        let oracle = 4.0 * conc / pairs - 1.0;
        worst = worst.max((weighted_tau(&x, &w).expect("tau") - oracle).abs());
    }
    check("weighted Kendall tau", worst, 1e-12)
}

pub fn cdf_properties() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let n = 60;
    let x = Array2::from_shape_fn((n, 2), |_| rng.random::<f64>());
    let z = Array2::from_shape_fn((n, 2), |_| rng.random::<f64>());
    let data = Dataset::new(x, z).expect("data");
    let kernel = KernelSpec::new(crate::kernels::KernelBase::Epanechnikov, 4).expect("kernel");
    let h = [0.4, 0.4];
    let mut violations = 0usize;
    for _ in 0..25 {
        let zq = [rng.random::<f64>(), rng.random::<f64>()];
        let w = match nw_weights(&data, &zq, &kernel, &h, None) {
            Ok(w) => w,
            Err(_) => continue,
        };
        if (w.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            violations += 1;
        }
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=20 {
            let v = cond_marginal_cdf(&data, 0, k as f64 / 20.0, &zq, &kernel, &h).unwrap_or(f64::NAN);
            if !(0.0..=1.0).contains(&v) || v < prev {
                violations += 1;
            }
            prev = v;
        }
    }
    check("conditional CDF properties", violations as f64, 0.0)
}

pub fn run_all() -> Vec<CheckResult> {
    vec![tau_round_trip(), joe_tau_closed_forms(), theta_gradient(), kendall_nested_loop(), cdf_properties()]
}
