use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sicopula::copulas::{CopulaModel, Family, UnitPoint};

const FAMILIES: [Family; 3] = [Family::Gaussian, Family::Clayton, Family::Gumbel];

fn pt(u: &[f64]) -> UnitPoint {
    UnitPoint::new(u).unwrap()
}

/// Brute-force concordance estimate of Joe's tau from a sample.
fn concordance_tau(x: &ndarray::Array2<f64>) -> f64 {
    let (n, d) = x.dim();
    let mut conc = 0u64;
    for i in 0..n {
        for j in (i + 1)..n {
            let lt = (0..d).all(|k| x[[i, k]] < x[[j, k]]);
            let gt = (0..d).all(|k| x[[i, k]] > x[[j, k]]);
            if lt || gt {
                conc += 1;
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    let p2 = 2f64.powi(d as i32 - 1);
    (p2 * conc as f64 / pairs - 1.0) / (p2 - 1.0)
}

fn random_theta(m: &CopulaModel, rng: &mut ChaCha8Rng) -> f64 {
    let (lo, hi) = m.domain();
    let hi = hi.min(12.0);
    lo + (hi - lo) * rng.random_range(0.02..0.98)
}

#[test]
fn clayton_density_is_mixed_partial_of_cdf() {
    let m2 = CopulaModel::new(Family::Clayton, 2).unwrap();
    let h = 1e-4;
    for &(u, v, th) in &[(0.5, 0.5, 2.0), (0.2, 0.7, 0.8), (0.9, 0.35, 5.0)] {
        let c = |a: f64, b: f64| m2.cdf(th, &pt(&[a, b])).unwrap();
        let fd = (c(u + h, v + h) - c(u + h, v - h) - c(u - h, v + h) + c(u - h, v - h)) / (4.0 * h * h);
        let dens = m2.log_density(th, &pt(&[u, v])).unwrap().exp();
        assert!((fd - dens).abs() / dens < 1e-5, "d=2 {u} {v} {th}: {fd} vs {dens}");
    }
    let m3 = CopulaModel::new(Family::Clayton, 3).unwrap();
    let h = 2e-3;
    for &(u, th) in &[([0.5, 0.5, 0.5], 2.0), ([0.3, 0.6, 0.8], 1.2), ([0.7, 0.4, 0.55], 4.0)] {
        let mut fd = 0.0;
        for mask in 0..8 {
            let mut q = u;
            let mut sign = 1.0;
            for (k, qk) in q.iter_mut().enumerate() {
                if mask & (1 << k) != 0 {
                    *qk += h;
                } else {
                    *qk -= h;
                    sign = -sign;
                }
            }
            fd += sign * m3.cdf(th, &pt(&q)).unwrap();
        }
        fd /= (2.0 * h).powi(3);
        let dens = m3.log_density(th, &pt(&u)).unwrap().exp();
        assert!((fd - dens).abs() / dens < 1e-4, "d=3 {u:?} {th}: {fd} vs {dens}");
    }
}

#[test]
fn gumbel_and_gaussian_densities_integrate_cdf() {
    let h = 1e-4;
    for (f, th) in [(Family::Gumbel, 2.5), (Family::Gaussian, 0.6), (Family::Gaussian, -0.4)] {
        let m = CopulaModel::new(f, 2).unwrap();
        for &(u, v) in &[(0.3, 0.6), (0.8, 0.75)] {
            let c = |a: f64, b: f64| m.cdf(th, &pt(&[a, b])).unwrap();
            let fd = (c(u + h, v + h) - c(u + h, v - h) - c(u - h, v + h) + c(u - h, v - h)) / (4.0 * h * h);
            let dens = m.log_density(th, &pt(&[u, v])).unwrap().exp();
            assert!((fd - dens).abs() / dens < 1e-4, "{f:?} {u} {v}: {fd} vs {dens}");
        }
    }
}

#[test]
fn gradients_against_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let step = 1e-6;
    for f in FAMILIES {
        for d in [2, 3] {
            let m = CopulaModel::new(f, d).unwrap();
            for _ in 0..100 {
                let th = random_theta(&m, &mut rng);
                let u: Vec<f64> = (0..d).map(|_| rng.random_range(0.02..0.98)).collect();
                let p = pt(&u);
                let g = m.grad_theta_log_density(th, &p).unwrap();
                let fd = (m.log_density(th + step, &p).unwrap() - m.log_density(th - step, &p).unwrap())
                    / (2.0 * step);
                assert!((g - fd).abs() / fd.abs().max(1.0) < 1e-5, "{f:?} d={d} θ={th} u={u:?}: {g} vs {fd}");
                let gu = m.grad_u_log_density(th, &p).unwrap();
                for k in 0..d {
                    let mut a = u.clone();
                    let mut b = u.clone();
                    a[k] += step;
                    b[k] -= step;
                    let fdk = (m.log_density(th, &pt(&a)).unwrap() - m.log_density(th, &pt(&b)).unwrap())
                        / (2.0 * step);
                    assert!(
                        (gu[k] - fdk).abs() / fdk.abs().max(1.0) < 1e-5,
                        "{f:?} d={d} θ={th} u={u:?} k={k}: {} vs {fdk}",
                        gu[k]
                    );
                }
            }
        }
    }
}

#[test]
fn u_gradient_swaps_under_exchange() {
    for (f, th) in [(Family::Gaussian, 0.4), (Family::Clayton, 2.0), (Family::Gumbel, 1.7)] {
        let m = CopulaModel::new(f, 2).unwrap();
        let a = m.grad_u_log_density(th, &pt(&[0.2, 0.65])).unwrap();
        let b = m.grad_u_log_density(th, &pt(&[0.65, 0.2])).unwrap();
        assert!((a[0] - b[1]).abs() < 1e-12 && (a[1] - b[0]).abs() < 1e-12, "{f:?}");
    }
}

#[test]
fn clayton_samples_have_tau_one_half() {
    let m = CopulaModel::new(Family::Clayton, 2).unwrap();
    let x = m.sample(2.0, 100_000, 5).unwrap();
    assert!(x.iter().all(|&v| v > 0.0 && v < 1.0));
    let a: Vec<f64> = x.column(0).to_vec();
    let b: Vec<f64> = x.column(1).to_vec();
    let tau = sicopula::kendall::kendall_tau(&a, &b);
    assert!((tau - 0.5).abs() < 0.01, "{tau}");
}

#[test]
fn independent_gaussian_samples() {
    let m = CopulaModel::new(Family::Gaussian, 3).unwrap();
    let x = m.sample(0.0, 100_000, 6).unwrap();
    assert!(x.iter().all(|&v| v > 0.0 && v < 1.0));
    for (k, l) in [(0, 1), (0, 2), (1, 2)] {
        let tau = sicopula::kendall::kendall_tau(&x.column(k).to_vec(), &x.column(l).to_vec());
        assert!(tau.abs() < 0.01, "{k}{l}: {tau}");
    }
}

#[test]
fn trivariate_taus_match_concordance_of_draws() {
    for (f, th) in [(Family::Clayton, 2.0), (Family::Gumbel, 2.0), (Family::Clayton, 0.7)] {
        let m = CopulaModel::new(f, 3).unwrap();
        let x = m.sample(th, 4000, 7).unwrap();
        let mc = concordance_tau(&x);
        let exact = m.theta_to_tau(th).unwrap();
        assert!((mc - exact).abs() < 0.03, "{f:?} θ={th}: {mc} vs {exact}");
    }
}

#[test]
fn draws_stay_inside_domain_at_extremes() {
    for f in FAMILIES {
        let m = CopulaModel::new(f, 2).unwrap();
        let (lo, hi) = m.domain();
        for th in [lo + 1e-6, hi - 1e-6] {
            let x = m.sample(th, 2000, 8).unwrap();
            assert!(x.iter().all(|&v| v > 0.0 && v < 1.0), "{f:?} {th}");
            let p = pt(&[x[[0, 0]], x[[0, 1]]]);
            assert!(m.log_density(th, &p).unwrap().is_finite());
        }
    }
}

#[test]
fn out_of_domain_theta_is_rejected() {
    let m = CopulaModel::new(Family::Gaussian, 3).unwrap();
    assert!(m.log_density(-0.6, &pt(&[0.5, 0.5, 0.5])).is_err());
    let c = CopulaModel::new(Family::Clayton, 2).unwrap();
    assert!(c.theta_to_tau(-0.5).is_err());
    assert!(c.log_density(2.0, &pt(&[0.5, 0.5, 0.5])).is_err());
    let edge = UnitPoint::new(&[0.0, 1.0]).unwrap();
    assert!(edge.as_slice().iter().all(|v| *v > 0.0 && *v < 1.0));
    assert!(UnitPoint::new(&[0.5, 1.5]).is_err());
}
