//! A small replication study: bias, RMSE and coverage of β̂₂.
//!
//!     cargo run --release --example monte_carlo_study -- [n] [reps]

use sicopula::estimator::EstimationConfig;
use sicopula::simulate::{run_replications, DGPSpec};

fn main() -> sicopula::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(500);
    let reps: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(10);

    let report = run_replications(&DGPSpec::tanh_gaussian(n, 1000), reps, &EstimationConfig::default())?;
    print!("{}", report.to_tsv());
    println!();
    println!("bias {:.4}  rmse {:.4}  coverage {:?}", report.bias[0], report.rmse[0], report.coverage[0]);
    println!("failed {}  mean runtime {:.2}s", report.n_failed, report.mean_runtime_s);
    Ok(())
}
