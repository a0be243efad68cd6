//! Linear dispersion of the Serre-Green-Naghdi preset: integrate a tiny
//! standing wave with the full nonlinear solver, fit its oscillation
//! frequency, and compare to the eigenvalues of the Jacobian linearized
//! about the flat state rho = 1, u = 0.

use semiflow::dynamics::{simulate, Form, State};
use semiflow::presets::{dispersion_frequencies, linearized_matrix, make_preset, Preset};
use semiflow::{Density, Grid, Result, ScalarField};

/// Frequency of a sampled cosine via the three-term recurrence
/// s[n+1] + s[n-1] = 2 cos(omega dt) s[n], least squares over the samples.
fn fit_frequency(samples: &[f64], dt: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for n in 1..samples.len() - 1 {
        num += samples[n] * (samples[n + 1] + samples[n - 1]);
        den += 2.0 * samples[n] * samples[n];
    }
    (num / den).clamp(-1.0, 1.0).acos() / dt
}

fn main() -> Result<()> {
    let grid = Grid::new(64, 2.0 * std::f64::consts::PI)?;
    let model = make_preset(Preset::Sgn);
    let jac = linearized_matrix(&model, 1.0, &grid)?;
    let freqs = dispersion_frequencies(&jac);

    println!("{:>5}  {:>14}  {:>14}  {:>10}", "mode", "measured", "eigenvalue", "rel err");
    for kappa in [1.0_f64, 2.0, 3.0] {
        let eps = 1e-4;
        let rho0 = Density::from_fn(grid.clone(), |x| 1.0 + eps * (kappa * x).cos())?;
        let u0 = ScalarField::zeros(grid.clone());
        let state0 = State::new(0.0, rho0, u0)?;
        let dt = 2e-3;
        let traj = simulate(&model, &state0, 30.0, dt, Form::Momentum, 50)?;

        let probe = ScalarField::from_fn(grid.clone(), |x| (kappa * x).cos());
        let samples: Vec<f64> = traj
            .states
            .iter()
            .map(|s| s.rho.field().sub(&ScalarField::constant(grid.clone(), 1.0)).inner(&probe))
            .collect();
        let omega = fit_frequency(&samples, dt * 50.0);

        let reference = freqs
            .iter()
            .map(|w| w.abs())
            .filter(|w| *w > 1e-12)
            .min_by(|a, b| (a - omega).abs().total_cmp(&(b - omega).abs()))
            .expect("Jacobian has oscillatory eigenvalues");
        println!(
            "{:5}  {:14.8}  {:14.8}  {:10.2e}",
            kappa,
            omega,
            reference,
            (omega - reference).abs() / reference
        );
    }
    Ok(())
}
