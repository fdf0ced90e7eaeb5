//! Estimated copula parameter along the index, Clayton family, next to the true link.

use sicopula::cli::{index_grid, link_data};
use sicopula::copulas::Family;
use sicopula::estimator::EstimationConfig;
use sicopula::link::{clamp_fraction, link_curve};
use sicopula::simulate::{generate, DGPSpec, LinkShape};

fn main() -> sicopula::Result<()> {
    let mut spec = DGPSpec::tanh_gaussian(2000, 8);
    spec.family = Family::Clayton;
    spec.link = LinkShape::TanhTau { a: 0.35, b: 0.2 };
    let model = spec.model()?;
    let sim = generate(&spec)?;
    let config = EstimationConfig::default();
    let beta = spec.beta0.beta();

    let ld = link_data(&sim.data, &config)?;
    let grid = index_grid(&ld.index(&beta)?, 9);
    let h = config.h_tilde(&ld, &beta);
    let curve = link_curve(&model, &ld, &beta, &grid, &config.index_kernel_spec()?, h)?;

    println!("{:>8} {:>10} {:>10}", "y", "theta", "theta_hat");
    for (y, l) in grid.iter().zip(&curve) {
        let truth = model.tau_to_theta(spec.link.tau(*y))?;
        match l {
            Ok(l) => println!("{y:>8.3} {truth:>10.3} {:>10.3}{}", l.theta_hat, if l.clamped { " (clamped)" } else { "" }),
            Err(e) => println!("{y:>8.3} {truth:>10.3} {e}"),
        }
    }
    println!("clamped share {:.3}", clamp_fraction(&curve));
    Ok(())
}
