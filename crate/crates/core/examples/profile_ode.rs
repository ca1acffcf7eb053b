//! Evaluates the profile ODE along the closed-form family and along a profile
//! that is not a solution.

use isocurv::ambient::ModelConstant;
use isocurv::profile::{closed_form_profile, ode_residual, ProfileFunction};

fn main() -> isocurv::Result<()> {
    let solution = closed_form_profile(0.8, 0.3, 0.0)?;
    let cubic = ProfileFunction::cubic(0.5, -1.0, 1.0);
    let (lo, hi) = solution.domain();
    println!("closed-form domain ({lo:.4}, {hi:.4})");
    for s in solution.samples(9) {
        println!("s={s:+.4}  residual {:+.3e}", ode_residual(&solution, s)?);
    }
    for s in cubic.samples(5) {
        println!("cubic s={s:+.4}  residual {:+.3e}", ode_residual(&cubic, s)?);
    }
    let c = ModelConstant::new(-1)?;
    let (orbit, profile) = isocurv::profile::rotational_curvatures(&solution, 1.0, c, 0.5 * (lo + hi))?;
    println!("rotational curvatures at the midpoint: {orbit:.6} {profile:.6}");
    Ok(())
}
