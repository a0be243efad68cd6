//! Burgers wave breaking: u0 = sin x steepens and the solver stops honestly
//! with a blow-up flag at the gradient catastrophe near t = 1 instead of
//! integrating garbage.

use semiflow::dynamics::{simulate, Form, State};
use semiflow::presets::{make_preset, Preset};
use semiflow::{Density, Grid, Result, ScalarField};

fn main() -> Result<()> {
    let grid = Grid::new(256, 2.0 * std::f64::consts::PI)?;
    let model = make_preset(Preset::Burgers);
    let rho0 = Density::new(ScalarField::constant(grid.clone(), 1.0))?;
    let u0 = ScalarField::from_fn(grid.clone(), |x| x.sin());
    let state0 = State::new(0.0, rho0, u0)?;

    let traj = simulate(&model, &state0, 2.0, 1e-3, Form::Momentum, 100)?;

    println!("{:>6}  {:>12}  {:>12}", "t", "max |u|", "max |u_x|");
    for state in &traj.states {
        println!(
            "{:6.2}  {:12.6}  {:12.4}",
            state.time,
            state.u.max_abs(),
            state.u.deriv(1).max_abs()
        );
    }
    println!(
        "stopped: {} at t = {:.3} (smooth solutions break at t = 1)",
        traj.termination.as_str(),
        traj.final_state().time
    );
    Ok(())
}
