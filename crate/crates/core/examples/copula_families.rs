//! Densities, tau maps and samplers of the three families.

use sicopula::copulas::{CopulaModel, Family, UnitPoint};
use sicopula::kendall::weighted_tau;

fn main() -> sicopula::Result<()> {
    let u = UnitPoint::new(&[0.3, 0.6, 0.45])?;
    for family in [Family::Gaussian, Family::Clayton, Family::Gumbel] {
        for d in [2, 3] {
            let model = CopulaModel::new(family, d)?;
            let theta = model.tau_to_theta(0.4)?;
            let pt = UnitPoint::new(&u.as_slice()[..d])?;
            let draws = model.sample(theta, 4000, 5)?;
            let emp = weighted_tau(&draws, &vec![1.0; draws.nrows()])?;
            println!(
                "{:<9} d={d}  theta {:>7.4}  ln c(u) {:>8.4}  dlnc/dtheta {:>8.4}  tau {:.3} (sample {:.3})",
                family.name(),
                theta,
                model.log_density(theta, &pt)?,
                model.grad_theta_log_density(theta, &pt)?,
                model.theta_to_tau(theta)?,
                emp
            );
        }
    }
    Ok(())
}
