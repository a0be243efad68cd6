//! Lagrangian flow reconstruction: integrate φ_t = u ∘ φ from stored
//! velocity snapshots and push densities forward along the resulting
//! diffeomorphisms.

use std::sync::Arc;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::grid::{Density, Grid, InterpCoeffs, ScalarField};

/// Particle positions φ(t, x_j) at the snapshot times of a trajectory.
///
/// Positions are kept unwrapped (φ is increasing with φ(x + L) = φ(x) + L),
/// which makes the monotonicity check a plain finite difference.
#[derive(Debug, Clone)]
pub struct FlowMap {
    grid: Arc<Grid>,
    times: Vec<f64>,
    /// phi[i][j] = φ(times[i], x_j), unwrapped.
    phi: Vec<Vec<f64>>,
}

impl FlowMap {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn positions(&self, index: usize) -> &[f64] {
        &self.phi[index]
    }

    fn check_monotone(&self, index: usize) -> Result<()> {
        let phi = &self.phi[index];
        let n = phi.len();
        for j in 0..n {
            let next = if j + 1 < n { phi[j + 1] } else { phi[0] + self.grid.length() };
            if next - phi[j] <= 0.0 {
                return Err(Error::FlowNotInjective);
            }
        }
        Ok(())
    }
}

/// Cubic Lagrange interpolation in time over the four snapshots nearest to
/// `t`, clamped at the trajectory ends.
struct TimeInterp<'a> {
    fields: Vec<&'a ScalarField>,
}

impl<'a> TimeInterp<'a> {
    fn new(traj: &'a Trajectory) -> Self {
        TimeInterp { fields: traj.states.iter().map(|s| &s.u).collect() }
    }

    fn eval(&self, snapshot_times: &[f64], t: f64) -> ScalarField {
        let m = snapshot_times.len();
        debug_assert!(m >= 1);
        if m == 1 {
            return self.fields[0].clone();
        }
        // locate the interval containing t
        let mut i1 = match snapshot_times.partition_point(|&s| s <= t) {
            0 => 0,
            p => p - 1,
        };
        i1 = i1.min(m - 2);
        let lo = i1.saturating_sub(1);
        let hi = (i1 + 2).min(m - 1);
        let idx: Vec<usize> = (lo..=hi).collect();
        let mut out = ScalarField::zeros(self.fields[0].grid().clone());
        for &i in &idx {
            let mut w = 1.0;
            for &j in &idx {
                if j != i {
                    w *= (t - snapshot_times[j]) / (snapshot_times[i] - snapshot_times[j]);
                }
            }
            out = out.add_scaled(self.fields[i], w);
        }
        out
    }
}

/// Reconstruct the flow φ from a completed trajectory with stored snapshots.
///
/// Positions are advanced with RK4 over each snapshot interval; the velocity
/// is evaluated by trigonometric interpolation in space and cubic Lagrange
/// interpolation in time. Monotonicity of φ in x is checked at every
/// snapshot.
pub fn reconstruct_flow(traj: &Trajectory) -> Result<FlowMap> {
    if traj.states.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let grid = traj.states[0].rho.grid().clone();
    let times: Vec<f64> = traj.states.iter().map(|s| s.time).collect();
    let interp = TimeInterp::new(traj);

    let mut phi = vec![grid.nodes().to_vec()];
    for w in times.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let h = t1 - t0;
        let u_lo = interp.eval(&times, t0);
        let u_mid = interp.eval(&times, t0 + 0.5 * h);
        let u_hi = interp.eval(&times, t1);
        let c_lo = InterpCoeffs::new(&u_lo);
        let c_mid = InterpCoeffs::new(&u_mid);
        let c_hi = InterpCoeffs::new(&u_hi);

        let prev = phi.last().expect("at least the identity map");
        let next: Vec<f64> = prev
            .iter()
            .map(|&x| {
                let k1 = c_lo.eval(x);
                let k2 = c_mid.eval(x + 0.5 * h * k1);
                let k3 = c_mid.eval(x + 0.5 * h * k2);
                let k4 = c_hi.eval(x + h * k3);
                x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            })
            .collect();
        phi.push(next);
    }

    let map = FlowMap { grid, times, phi };
    for i in 0..map.times.len() {
        map.check_monotone(i)?;
    }
    Ok(map)
}

/// Push `rho0` forward along φ at snapshot `index`:
/// ρ(t, φ(x)) ∂φ/∂x (x) = ρ₀(x).
///
/// For each grid node y the preimage ξ with φ(ξ) = y is found by Newton
/// iteration on the trigonometric interpolant of the displacement φ - id;
/// ∂φ/∂x comes from spectral differentiation of the same displacement.
pub fn pushforward_density(rho0: &Density, flow: &FlowMap, index: usize) -> Result<Density> {
    flow.check_monotone(index)?;
    let grid = flow.grid().clone();
    let displacement = ScalarField::new(
        grid.clone(),
        flow.phi[index]
            .iter()
            .zip(grid.nodes())
            .map(|(&p, &x)| p - x)
            .collect(),
    )?;
    let disp = InterpCoeffs::new(&displacement);
    let disp_deriv = InterpCoeffs::new(&displacement.deriv(1));
    let rho0_interp = InterpCoeffs::new(rho0);
    let length = grid.length();

    let mut values = Vec::with_capacity(grid.n());
    for &y in grid.nodes() {
        // solve xi + d(xi) = y (mod L), starting from xi = y
        let mut xi = y;
        let mut converged = false;
        for _ in 0..100 {
            let mut residual = (xi + disp.eval(xi) - y) % length;
            if residual > 0.5 * length {
                residual -= length;
            } else if residual < -0.5 * length {
                residual += length;
            }
            let slope = 1.0 + disp_deriv.eval(xi);
            if slope <= 0.0 {
                return Err(Error::FlowNotInjective);
            }
            let step = residual / slope;
            xi -= step;
            if step.abs() < 1e-13 * length.max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NewtonNonConvergence);
        }
        let jac = 1.0 + disp_deriv.eval(xi);
        if jac <= 0.0 {
            return Err(Error::FlowNotInjective);
        }
        values.push(rho0_interp.eval(xi) / jac);
    }
    Density::new(ScalarField::new(grid, values)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{simulate, Form, State, Termination};
    use crate::presets::{make_preset, Preset};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    const TWO_PI: f64 = 2.0 * PI;

    fn constant_velocity_trajectory(c: f64) -> Trajectory {
        let g = Grid::new(32, TWO_PI).unwrap();
        let rho = Density::constant(g.clone(), 1.0).unwrap();
        let u = ScalarField::constant(g.clone(), c);
        let states: Vec<State> = (0..=10)
            .map(|i| State::new(i as f64 * 0.1, rho.clone(), u.clone()).unwrap())
            .collect();
        let diagnostics = Vec::new();
        Trajectory { states, diagnostics, termination: Termination::Completed }
    }

    #[test]
    fn zero_velocity_gives_identity() {
        let traj = constant_velocity_trajectory(0.0);
        let flow = reconstruct_flow(&traj).unwrap();
        let last = flow.positions(flow.times().len() - 1);
        for (p, x) in last.iter().zip(flow.grid().nodes()) {
            assert_abs_diff_eq!(p, x, epsilon = 1e-13);
        }
    }

    #[test]
    fn constant_velocity_translates() {
        let traj = constant_velocity_trajectory(0.7);
        let flow = reconstruct_flow(&traj).unwrap();
        let last = flow.positions(flow.times().len() - 1);
        for (p, x) in last.iter().zip(flow.grid().nodes()) {
            assert_abs_diff_eq!(p, &(x + 0.7), epsilon = 1e-12);
        }
    }

    #[test]
    fn pushforward_identity_returns_initial() {
        let g = Grid::new(32, TWO_PI).unwrap();
        let rho0 = Density::from_fn(g.clone(), |x| 1.0 + 0.3 * x.cos()).unwrap();
        let traj = constant_velocity_trajectory(0.0);
        let flow = reconstruct_flow(&traj).unwrap();
        let pushed = pushforward_density(&rho0, &flow, 0).unwrap();
        assert!(pushed.sub(rho0.field()).max_abs() < 1e-12);
    }

    #[test]
    fn pushforward_static_shear_matches_closed_form() {
        // phi(x) = x + 0.1 sin x, rho0 = 1:
        // rho(y) = 1 / (1 + 0.1 cos(phi^{-1}(y)))
        let g = Grid::new(64, TWO_PI).unwrap();
        let rho0 = Density::constant(g.clone(), 1.0).unwrap();
        let phi: Vec<f64> = g.nodes().iter().map(|&x| x + 0.1 * x.sin()).collect();
        let flow = FlowMap { grid: g.clone(), times: vec![0.0], phi: vec![phi] };
        let pushed = pushforward_density(&rho0, &flow, 0).unwrap();
        for (&y, &v) in g.nodes().iter().zip(pushed.values()) {
            // invert phi by Newton on the closed form
            let mut xi = y;
            for _ in 0..50 {
                xi -= (xi + 0.1 * xi.sin() - y) / (1.0 + 0.1 * xi.cos());
            }
            let expect = 1.0 / (1.0 + 0.1 * xi.cos());
            assert_abs_diff_eq!(v, expect, epsilon = 1e-9);
        }
    }

    #[test]
    fn non_monotone_flow_is_rejected() {
        let g = Grid::new(32, TWO_PI).unwrap();
        let rho0 = Density::constant(g.clone(), 1.0).unwrap();
        let phi: Vec<f64> = g.nodes().iter().map(|&x| x + 1.5 * x.sin()).collect();
        let flow = FlowMap { grid: g.clone(), times: vec![0.0], phi: vec![phi] };
        assert!(matches!(
            pushforward_density(&rho0, &flow, 0),
            Err(Error::FlowNotInjective)
        ));
    }

    #[test]
    fn pushforward_tracks_continuity_equation() {
        let g = Grid::new(128, TWO_PI).unwrap();
        let model = make_preset(Preset::ShallowWater);
        let rho0 = Density::from_fn(g.clone(), |x| 1.0 + 0.1 * x.cos()).unwrap();
        let u0 = ScalarField::from_fn(g.clone(), |x| 0.1 * x.sin());
        let state = State::new(0.0, rho0.clone(), u0).unwrap();
        let traj = simulate(&model, &state, 1.0, 1e-3, Form::Momentum, 10).unwrap();
        assert_eq!(traj.termination, Termination::Completed);
        let flow = reconstruct_flow(&traj).unwrap();
        let last = traj.states.len() - 1;
        let pushed = pushforward_density(&rho0, &flow, last).unwrap();
        let err = pushed.sub(traj.states[last].rho.field()).max_abs();
        assert!(err < 1e-6, "sup error {err:e}");
    }
}
