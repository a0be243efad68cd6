//! Building a model outside the presets: an inertia operator
//! A(rho)u = rho u - d/dx(rho u_x) with a quadratic potential, i.e. a
//! density-weighted H1 metric. Energy is conserved for free because the
//! dynamics are the geodesic equations of the chosen metric.

use semiflow::dynamics::{energy, simulate, Form, PotentialSpec, State};
use semiflow::inertia::{CoefficientSet, PolyInRho};
use semiflow::{Density, Grid, ModelSpec, Result, ScalarField};

fn main() -> Result<()> {
    // a_0(rho) = rho, a_1(rho) = rho; coefficients are polynomials in rho.
    let coefficients = CoefficientSet::new(vec![
        PolyInRho::new(vec![(1.0, 1)])?,
        PolyInRho::new(vec![(1.0, 1)])?,
    ])?;
    let model = ModelSpec::new(coefficients, PotentialSpec::Quadratic(0.5), "weighted_h1");

    let grid = Grid::new(128, 2.0 * std::f64::consts::PI)?;
    let rho0 = Density::from_fn(grid.clone(), |x| 1.0 + 0.2 * x.cos())?;
    let u0 = ScalarField::from_fn(grid.clone(), |x| 0.3 * (2.0 * x).sin());
    let state0 = State::new(0.0, rho0, u0)?;

    let e0 = energy(&model, &state0)?;
    let traj = simulate(&model, &state0, 3.0, 1e-3, Form::Momentum, 300)?;

    println!("model: {}", model.label);
    println!("{:>6}  {:>14}  {:>12}", "t", "|E - E0| / E0", "min rho");
    for d in &traj.diagnostics {
        println!("{:6.2}  {:14.3e}  {:12.6}", d.time, (d.energy - e0).abs() / e0.abs(), d.min_rho);
    }
    Ok(())
}
