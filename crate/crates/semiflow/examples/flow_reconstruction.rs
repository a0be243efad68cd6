//! Flow reconstruction: integrate shallow water, reconstruct the Lagrangian
//! flow map of the velocity field by tracking particles, and check that the
//! pushforward of the initial density under the flow matches the PDE density.

use semiflow::dynamics::{simulate, Form, State};
use semiflow::flow::{pushforward_density, reconstruct_flow};
use semiflow::presets::{make_preset, Preset};
use semiflow::{Density, Grid, Result, ScalarField};

fn main() -> Result<()> {
    let grid = Grid::new(128, 2.0 * std::f64::consts::PI)?;
    let model = make_preset(Preset::ShallowWater);
    let rho0 = Density::from_fn(grid.clone(), |x| 1.0 + 0.2 * x.cos())?;
    let u0 = ScalarField::from_fn(grid.clone(), |x| 0.3 * x.sin());
    let state0 = State::new(0.0, rho0.clone(), u0)?;

    let traj = simulate(&model, &state0, 1.0, 1e-3, Form::Momentum, 100)?;
    let flow = reconstruct_flow(&traj)?;

    println!("{:>6}  {:>18}", "t", "sup |phi#rho0 - rho|");
    for (index, state) in traj.states.iter().enumerate() {
        let pushed = pushforward_density(&rho0, &flow, index)?;
        let err = pushed.field().sub(state.rho.field()).max_abs();
        println!("{:6.2}  {:18.3e}", state.time, err);
    }
    Ok(())
}
