//! Moment conditions of higher-order kernels and the default bandwidths.

use sicopula::kernels::{normal_reference_bandwidth, simpson, KernelBase, KernelSpec};

fn main() -> sicopula::Result<()> {
    for base in [KernelBase::Epanechnikov, KernelBase::Quartic, KernelBase::Gaussian] {
        for order in [2, 4, 6] {
            let k = KernelSpec::new(base, order)?;
            let a = k.support_halfwidth();
            let moments: Vec<String> = (0..=order)
                .map(|j| format!("{:+.1e}", simpson(|u| u.powi(j as i32) * k.eval(u), -a, a, 20_001)))
                .collect();
            println!("{:<13} s={order}  K(0)={:.4}  moments 0..s: {}", base.name(), k.eval(0.0), moments.join(" "));
        }
    }
    println!();
    for n in [250, 1000, 4000] {
        println!(
            "n={n:<5} covariate h (p=2) {:.3}   index h (sd 1) {:.3}",
            normal_reference_bandwidth(KernelBase::Epanechnikov, 1.0, n, 2),
            normal_reference_bandwidth(KernelBase::Quartic, 1.0, n, 1)
        );
    }
    Ok(())
}
