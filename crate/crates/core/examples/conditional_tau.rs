//! Conditional Kendall tau along the true index against the simulated link.

use sicopula::cli::{index_grid, link_data};
use sicopula::estimator::EstimationConfig;
use sicopula::kendall::cond_tau_curve;
use sicopula::simulate::{generate, DGPSpec};

fn main() -> sicopula::Result<()> {
    let spec = DGPSpec::tanh_gaussian(2000, 3);
    let sim = generate(&spec)?;
    let config = EstimationConfig::default();
    let beta = spec.beta0.beta();

    // Tau of the pseudo-observations given the index.
    let ld = link_data(&sim.data, &config)?;
    let grid = index_grid(&ld.index(&beta)?, 11);
    let kernel = config.index_kernel_spec()?;
    let h = config.h_tilde(&ld, &beta);
    let curve = cond_tau_curve(&ld, &beta, &grid, &kernel, h)?;

    println!("h_tilde = {h:.3}");
    println!("{:>8} {:>8} {:>8} {:>8}", "y", "true", "tau_hat", "mass");
    for (y, t) in grid.iter().zip(curve) {
        match t {
            Ok(t) => println!("{y:>8.3} {:>8.3} {:>8.3} {:>8.1}", spec.link.tau(*y), t.value, t.effective_weight_mass),
            Err(e) => println!("{y:>8.3} {e}"),
        }
    }
    Ok(())
}
