//! Estimated conditional margins against the known ones, and the effect of trimming.

use sicopula::cond_ecdf::TrimBox;
use sicopula::estimator::EstimationConfig;
use sicopula::kernels::KernelSpec;
use sicopula::pseudo::{build_pseudo_sample, MarginModel};
use sicopula::simulate::{generate, DGPSpec};
use std::sync::Arc;

fn main() -> sicopula::Result<()> {
    let config = EstimationConfig::default();
    for n in [250, 1000, 4000] {
        let spec = DGPSpec::tanh_gaussian(n, 9);
        let sim = generate(&spec)?;
        let r = config.resolve(&sim.data)?;
        let kernel = KernelSpec::new(config.margin_kernel, r.margin_order)?;
        let margin = MarginModel::Nonparametric { kernel, h: r.h.clone(), leave_one_out: true };
        let trim = TrimBox::new(r.m_z.clone(), r.nu)?;
        let ps = build_pseudo_sample(&sim.data, &margin, &trim)?;
        let oracle = build_pseudo_sample(&sim.data, &MarginModel::Parametric(Arc::new(spec.margin_model())), &trim)?;

        let kept = ps.kept_rows();
        let (mut worst, mut total) = (0.0f64, 0.0);
        for &i in &kept {
            for k in 0..sim.data.d() {
                let e = (ps.u_hat[[i, k]] - sim.u[[i, k]]).abs();
                worst = worst.max(e);
                total += e;
            }
        }
        println!(
            "n={n:<5} h={:.3?} nu={:.3} kept {} (oracle margins {})  mean |U_hat-U| {:.4}  max {:.4}",
            r.h,
            r.nu,
            ps.n_kept,
            oracle.n_kept,
            total / (kept.len() * sim.data.d()) as f64,
            worst
        );
    }
    Ok(())
}
