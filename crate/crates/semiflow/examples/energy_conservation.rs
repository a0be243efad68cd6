//! Energy and mass conservation for the Serre-Green-Naghdi preset: a smooth
//! wave on a mean flow integrated to t = 5 with RK4 keeps the geodesic energy
//! E = 1/2 int u A(rho) u dx + V(rho) and the mass int rho dx to roundoff.

use semiflow::dynamics::{energy, simulate, Form, State};
use semiflow::presets::{make_preset, Preset};
use semiflow::{Density, Grid, Result, ScalarField};

fn main() -> Result<()> {
    let grid = Grid::new(256, 2.0 * std::f64::consts::PI)?;
    let model = make_preset(Preset::Sgn);
    let rho0 = Density::from_fn(grid.clone(), |x| 1.0 + 0.1 * (4.0 * x).cos())?;
    let u0 = ScalarField::from_fn(grid.clone(), |x| 3.0 + 0.1 * (4.0 * x).sin());
    let state0 = State::new(0.0, rho0, u0)?;

    let e0 = energy(&model, &state0)?;
    let m0 = state0.rho.total_mass();
    let traj = simulate(&model, &state0, 5.0, 1e-3, Form::Momentum, 500)?;

    println!("{:>6}  {:>14}  {:>14}", "t", "|E - E0| / E0", "|M - M0| / M0");
    for d in &traj.diagnostics {
        println!(
            "{:6.2}  {:14.3e}  {:14.3e}",
            d.time,
            (d.energy - e0).abs() / e0.abs(),
            (d.mass - m0).abs() / m0.abs()
        );
    }
    Ok(())
}
