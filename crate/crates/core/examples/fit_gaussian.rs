//! Simulate a Gaussian single-index model and estimate β.
//!
//!     cargo run --release --example fit_gaussian -- [n] [seed]

use sicopula::estimator::{fit, EstimationConfig};
use sicopula::simulate::{generate, DGPSpec};

fn main() -> sicopula::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(1000);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(1);

    let spec = DGPSpec::tanh_gaussian(n, seed);
    let sim = generate(&spec)?;
    let model = spec.model()?;
    let res = fit(&sim.data, &model, &EstimationConfig::default())?;

    println!("true beta  {:?}", spec.beta0.beta());
    println!("beta_hat   {:?}", res.beta_hat.beta());
    match (res.std_errors(), &res.ci) {
        (Some(se), Some(ci)) => {
            for (l, (s, (lo, hi))) in se.iter().zip(ci).enumerate() {
                println!("beta{}: se {s:.4}, 95% CI [{lo:.4}, {hi:.4}]", l + 2);
            }
        }
        _ => println!("no standard errors: {:?}", res.asymptotics_error),
    }
    let d = &res.diagnostics;
    println!("kept {} of {} rows, h_tilde {:.3}, clamped links {:.3}", d.n_kept, d.n, d.h_tilde, d.clamp_fraction);
    for s in &d.starts {
        println!("  start {:>8.4} -> {:>8.4}  M = {:.6} ({} evals)", s.start[0], s.optimum[0], s.value, s.evaluations);
    }
    Ok(())
}
