use ndarray::{concatenate, Array2, Axis};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sicopula::cond_ecdf::{Dataset, TrimBox};
use sicopula::copulas::{CopulaModel, Family};
use sicopula::estimator::{
    criterion, estimate_asymptotics, fit, pseudo_dataset, pseudo_log_likelihood, EstimationConfig,
    IndexParam,
};
use sicopula::kernels::KernelSpec;
use sicopula::pseudo::{build_pseudo_sample, MarginModel, PseudoSample};
use sicopula::simulate::{generate, DGPSpec, LinkShape};

fn quick() -> EstimationConfig {
    EstimationConfig { starts: 3, ..EstimationConfig::default() }
}

#[test]
fn independence_stub_gives_zero_criterion() {
    let sim = generate(&DGPSpec::tanh_gaussian(200, 61)).unwrap();
    let ps = PseudoSample::from_uniforms(sim.u.clone(), &sim.data, &TrimBox::none(2)).unwrap();
    let model = CopulaModel::new(Family::Gaussian, 2).unwrap();
    assert_eq!(pseudo_log_likelihood(&ps, &model, &vec![0.0; ps.n_kept]).unwrap(), 0.0);
}

#[test]
fn duplicated_rows_rescale_the_criterion() {
    let sim = generate(&DGPSpec::tanh_gaussian(150, 62)).unwrap();
    let model = CopulaModel::new(Family::Gaussian, 2).unwrap();
    let one = PseudoSample::from_uniforms(sim.u.clone(), &sim.data, &TrimBox::none(2)).unwrap();
    let u2 = concatenate![Axis(0), sim.u, sim.u];
    let x2 = concatenate![Axis(0), *sim.data.x(), *sim.data.x()];
    let z2 = concatenate![Axis(0), *sim.data.z(), *sim.data.z()];
    let d2 = Dataset::new(x2, z2).unwrap();
    let two = PseudoSample::from_uniforms(u2, &d2, &TrimBox::none(2)).unwrap();
    let theta: Vec<f64> = sim.theta.clone();
    let theta2: Vec<f64> = theta.iter().chain(theta.iter()).copied().collect();
    let m1 = pseudo_log_likelihood(&one, &model, &theta).unwrap();
    let m2 = pseudo_log_likelihood(&two, &model, &theta2).unwrap();
    // Sum doubles while the normalization goes from k+1 to 2k+1.
    let k = one.n_kept as f64;
    assert!((m2 * (2.0 * k + 1.0) - 2.0 * m1 * (k + 1.0)).abs() < 1e-9);
}

#[test]
fn true_index_beats_distant_index() {
    let mut spec = DGPSpec::tanh_gaussian(1000, 0);
    spec.link = LinkShape::TanhTau { a: 0.4, b: 0.35 };
    let model = spec.model().unwrap();
    let config = EstimationConfig::default();
    let kernel = config.index_kernel_spec().unwrap();
    let mut wins = 0;
    for rep in 0..20 {
        let sim = generate(&spec.with_seed(600 + rep)).unwrap();
        let r = config.resolve(&sim.data).unwrap();
        let margin = MarginModel::Nonparametric { kernel: KernelSpec::epanechnikov(), h: r.h.clone(), leave_one_out: true };
        let ps = build_pseudo_sample(&sim.data, &margin, &TrimBox::new(r.m_z, r.nu).unwrap()).unwrap();
        let ld = pseudo_dataset(&sim.data, &ps).unwrap();
        let m = |b: f64| {
            let beta = IndexParam::new(vec![b]);
            criterion(&ld, &ps, &model, &beta, &kernel, config.h_tilde(&ld, &beta.beta())).unwrap()
        };
        if m(1.0) > m(-1.0) {
            wins += 1;
        }
    }
    assert!(wins >= 18, "{wins}/20");
}

#[test]
fn fit_ignores_row_order() {
    let sim = generate(&DGPSpec::tanh_gaussian(300, 63)).unwrap();
    let model = CopulaModel::new(Family::Gaussian, 2).unwrap();
    let a = fit(&sim.data, &model, &quick()).unwrap();
    let mut idx: Vec<usize> = (0..300).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for i in (1..idx.len()).rev() {
        idx.swap(i, rng.random_range(0..=i));
    }
    let b = fit(&sim.data.select(&idx).unwrap(), &model, &quick()).unwrap();
    assert!((a.beta_hat.free()[0] - b.beta_hat.free()[0]).abs() < 1e-6, "{:?} {:?}", a.beta_hat, b.beta_hat);
    assert!((a.criterion_value - b.criterion_value).abs() < 1e-10);
}

#[test]
fn scalar_sandwich_interval() {
    let sim = generate(&DGPSpec::tanh_gaussian(500, 64)).unwrap();
    let model = CopulaModel::new(Family::Gaussian, 2).unwrap();
    let f = fit(&sim.data, &model, &quick()).unwrap();
    let cov = f.cov.as_ref().unwrap();
    assert_eq!(cov.len(), 1);
    assert_eq!(f.sigma_hat.as_ref().unwrap().len(), 1);
    let b = f.beta_hat.free()[0];
    let (lo, hi) = f.ci.as_ref().unwrap()[0];
    let half = sicopula::stats::norm_ppf(0.975) * cov[0][0].sqrt();
    assert!((lo - (b - half)).abs() < 1e-6 * half && (hi - (b + half)).abs() < 1e-6 * half);
    let s = f.sigma_hat.as_ref().unwrap()[0][0];
    let sh = f.s_hat.as_ref().unwrap()[0][0];
    assert!((cov[0][0] - sh / (s * s) / f.diagnostics.n_kept as f64).abs() < 1e-12 * cov[0][0].abs().max(1.0));
}

#[test]
fn sandwich_bread_matches_criterion_curvature() {
    let mut spec = DGPSpec::tanh_gaussian(4000, 65);
    spec.link = LinkShape::TanhTau { a: 0.3, b: 0.4 };
    let sim = generate(&spec).unwrap();
    let model = spec.model().unwrap();
    let config = EstimationConfig::default();
    let r = config.resolve(&sim.data).unwrap();
    let margin = MarginModel::Nonparametric { kernel: KernelSpec::epanechnikov(), h: r.h.clone(), leave_one_out: true };
    let ps = build_pseudo_sample(&sim.data, &margin, &TrimBox::new(r.m_z, r.nu).unwrap()).unwrap();
    let ld = pseudo_dataset(&sim.data, &ps).unwrap();
    let kernel = config.index_kernel_spec().unwrap();
    let beta = IndexParam::new(vec![1.0]);
    let h = config.h_tilde(&ld, &beta.beta());
    let a = estimate_asymptotics(&ld, &ps, &model, &beta, &kernel, h).unwrap();
    let m = |v: f64| criterion(&ld, &ps, &model, &IndexParam::new(vec![v]), &kernel, h).unwrap();
    // Quadratic fit of the criterion over a symmetric 9-point stencil.
    let xs: Vec<f64> = (-4..=4).map(|k| 0.1 * k as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|x| m(1.0 + x)).collect();
    let (s2, s4) = xs.iter().fold((0.0, 0.0), |(a, b), x| (a + x * x, b + x.powi(4)));
    let ybar = ys.iter().sum::<f64>() / ys.len() as f64;
    let n = xs.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * x * (y - ybar)).sum();
    let curv = 2.0 * sxy / (s4 - s2 * s2 / n);
    let sigma = a.sigma_hat[(0, 0)];
    println!("Sigma_hat {sigma:.4}, criterion curvature {curv:.4}");
    assert!((sigma.abs() - curv.abs()).abs() < 0.2 * curv.abs(), "{sigma} vs {curv}");
}

#[test]
fn flat_criterion_is_flagged() {
    let n = 200;
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let z = Array2::from_shape_fn((n, 2), |(_, k)| if k == 0 { rng.random_range(-1.0..1.0) } else { 0.0 });
    let x = Array2::from_shape_fn((n, 2), |_| rng.random::<f64>());
    let data = Dataset::new(x, z).unwrap();
    let config = EstimationConfig { margin_bandwidth: Some(vec![0.6, 0.6]), m_z: Some(vec![2.0, 2.0]), ..quick() };
    let f = fit(&data, &CopulaModel::new(Family::Gaussian, 2).unwrap(), &config).unwrap();
    assert!(f.diagnostics.weak_identification);
}

#[test]
fn bad_inputs_are_rejected() {
    let sim = generate(&DGPSpec::tanh_gaussian(100, 67)).unwrap();
    let clayton3 = CopulaModel::new(Family::Clayton, 3).unwrap();
    assert!(fit(&sim.data, &clayton3, &quick()).is_err());
    let bad = EstimationConfig { starts: 0, ..quick() };
    assert!(fit(&sim.data, &CopulaModel::new(Family::Gaussian, 2).unwrap(), &bad).is_err());
}
