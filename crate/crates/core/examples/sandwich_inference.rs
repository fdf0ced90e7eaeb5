//! Sandwich covariance at the estimate, next to a finite-difference Hessian of the criterion.

use sicopula::cond_ecdf::TrimBox;
use sicopula::estimator::{criterion, estimate_asymptotics, fit_with_pseudo, pseudo_dataset, EstimationConfig, IndexParam};
use sicopula::kernels::KernelSpec;
use sicopula::pseudo::{build_pseudo_sample, MarginModel};
use sicopula::simulate::{generate, DGPSpec};

fn main() -> sicopula::Result<()> {
    let spec = DGPSpec::tanh_gaussian(1500, 21);
    let sim = generate(&spec)?;
    let model = spec.model()?;
    let config = EstimationConfig::default();

    let r = config.resolve(&sim.data)?;
    let margin = MarginModel::Nonparametric {
        kernel: KernelSpec::new(config.margin_kernel, r.margin_order)?,
        h: r.h.clone(),
        leave_one_out: true,
    };
    let pseudo = build_pseudo_sample(&sim.data, &margin, &TrimBox::new(r.m_z.clone(), r.nu)?)?;
    let res = fit_with_pseudo(&sim.data, &pseudo, &model, &config)?;
    let beta_hat = res.beta_hat.clone();

    let ld = pseudo_dataset(&sim.data, &pseudo)?;
    let kernel = config.index_kernel_spec()?;
    let h = config.h_tilde(&ld, &beta_hat.beta());
    let a = estimate_asymptotics(&ld, &pseudo, &model, &beta_hat, &kernel, h)?;

    let b = beta_hat.free()[0];
    let m = |v: f64| criterion(&ld, &pseudo, &model, &IndexParam::new(vec![v]), &kernel, h);
    let step = 0.1;
    let fd = (m(b + step)? - 2.0 * m(b)? + m(b - step)?) / (step * step);

    println!("beta2_hat {b:.4}");
    println!("Sigma_hat {:.4}   S_hat {:.4}   cov {:.3e}", a.sigma_hat[(0, 0)], a.s_hat[(0, 0)], a.cov[(0, 0)]);
    println!("criterion curvature (step {step}) {fd:.4}");
    let (lo, hi) = a.intervals(&beta_hat)[0];
    println!("95% CI [{lo:.4}, {hi:.4}]");
    Ok(())
}
