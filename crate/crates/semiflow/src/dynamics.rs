//! Time evolution of the coupled (ρ, u) system
//!
//!   m_t + u m_x + 2 u_x m - ρ B_x = 0,   m = A(ρ) u,
//!   ρ_t + (ρ u)_x = 0,
//!
//! with B(ρ,u) = ½ Σ a_i'(ρ) (∂^i u)² - δV/δρ, in both momentum form
//! (stepping (ρ, m), one elliptic solve per stage) and velocity form
//! (stepping (ρ, u) with the A'-correction term).

use crate::error::{Error, Result};
use crate::grid::{Density, ScalarField, VelocityField};
use crate::inertia::{apply_a, apply_a_prime, a_prime_star, InertiaSolver, ModelSpec, PolyInRho};

/// Potential energy functional V(ρ).
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    Zero,
    /// V = (c/2) ∫ ρ² dx, δV/δρ = c ρ.
    Quadratic(f64),
    /// V = ∫ e(ρ) ρ dx for a polynomial internal energy e, δV/δρ = e(ρ) + ρ e'(ρ).
    InternalEnergy(PolyInRho),
}

/// Value of V(ρ) together with the variational derivative δV/δρ.
pub fn potential_eval(pot: &PotentialSpec, rho: &Density) -> (f64, ScalarField) {
    match pot {
        PotentialSpec::Zero => (0.0, ScalarField::zeros(rho.grid().clone())),
        PotentialSpec::Quadratic(c) => {
            let value = 0.5 * c * rho.mul(rho).integrate();
            (value, rho.scale(*c))
        }
        PotentialSpec::InternalEnergy(e) => {
            let value = rho.map(|r| e.eval(r) * r).integrate();
            let deriv = rho.map(|r| e.eval(r) + r * e.eval_deriv(r));
            (value, deriv)
        }
    }
}

/// B(ρ, u) = ½ Σ a_i'(ρ) (∂^i u)² - δV/δρ.
pub fn b_field(model: &ModelSpec, rho: &Density, u: &VelocityField) -> Result<ScalarField> {
    let kinetic = a_prime_star(model, rho, u, u)?.scale(0.5);
    let (_, dv) = potential_eval(&model.potential, rho);
    Ok(kinetic.sub(&dv))
}

/// A snapshot of the system at one instant.
#[derive(Debug, Clone)]
pub struct State {
    pub time: f64,
    pub rho: Density,
    pub u: VelocityField,
}

impl State {
    pub fn new(time: f64, rho: Density, u: VelocityField) -> Result<Self> {
        rho.same_grid(&u)?;
        if !u.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(State { time, rho, u })
    }
}

/// Why a simulation stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Completed,
    BlowupDetected,
    DensityFloor,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::BlowupDetected => "blowup_detected",
            Termination::DensityFloor => "density_floor",
        }
    }
}

/// Conserved-quantity time series entry.
#[derive(Debug, Clone)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub energy: f64,
    pub mass: f64,
    pub min_rho: f64,
    pub max_abs_u: f64,
    pub horizontality_defect: Option<f64>,
}

/// Time-ordered snapshots plus diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<State>,
    pub diagnostics: Vec<DiagnosticsRecord>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn final_state(&self) -> &State {
        self.states.last().expect("trajectory contains the initial state")
    }
}

/// Which pair of variables the integrator steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    Momentum,
    Velocity,
}

/// Total energy E = ½ ∫ u A(ρ)u dx + V(ρ); conserved along geodesics.
pub fn energy(model: &ModelSpec, state: &State) -> Result<f64> {
    let m = apply_a(model, &state.rho, &state.u)?;
    let kinetic = 0.5 * state.u.inner(&m);
    let (v, _) = potential_eval(&model.potential, &state.rho);
    Ok(kinetic + v)
}

/// RHS in momentum variables: (ρ_t, m_t) with m = A(ρ)u.
pub fn rhs_momentum(model: &ModelSpec, state: &State) -> Result<(ScalarField, ScalarField)> {
    let m = apply_a(model, &state.rho, &state.u)?;
    let (rho_dot, m_dot) = rhs_momentum_parts(model, &state.rho, &state.u, &m)?;
    Ok((rho_dot, m_dot))
}

fn rhs_momentum_parts(
    model: &ModelSpec,
    rho: &Density,
    u: &VelocityField,
    m: &ScalarField,
) -> Result<(ScalarField, ScalarField)> {
    let b = b_field(model, rho, u)?;
    let m_dot = u
        .mul(&m.deriv(1))
        .add(&u.deriv(1).mul(m).scale(2.0))
        .scale(-1.0)
        .add(&rho.mul(&b.deriv(1)));
    let rho_dot = rho.mul(u).deriv(1).scale(-1.0);
    // 2/3-rule dealiasing: with band-limited states the quadratic products
    // are then alias-free, so discrete energy conservation holds to roundoff
    // and the grid-scale aliasing instability cannot feed on itself.
    Ok((rho_dot.dealias(), m_dot.dealias()))
}

/// RHS in velocity variables: (ρ_t, u_t) via the Eulerian spray
/// u_t = A⁻¹( -u m_x - 2 u_x m + ρ B_x + A'(ρ)(u, (ρu)_x) ).
pub fn rhs_velocity(model: &ModelSpec, state: &State) -> Result<(ScalarField, ScalarField)> {
    let solver = InertiaSolver::new(model, &state.rho)?;
    rhs_velocity_with(model, &solver, &state.rho, &state.u)
}

fn rhs_velocity_with(
    model: &ModelSpec,
    solver: &InertiaSolver,
    rho: &Density,
    u: &VelocityField,
) -> Result<(ScalarField, ScalarField)> {
    let m = apply_a(model, rho, u)?;
    let (rho_dot, m_dot) = rhs_momentum_parts(model, rho, u, &m)?;
    let div_rho_u = rho_dot.scale(-1.0);
    let correction = apply_a_prime(model, rho, u, &div_rho_u)?;
    let u_dot = solver.solve(&m_dot.add(&correction))?;
    Ok((rho_dot, u_dot.dealias()))
}

/// Classical 4-stage Runge–Kutta step for a generic first-order system.
pub fn rk4_system(
    f: impl Fn(f64, &[f64]) -> Result<Vec<f64>>,
    t: f64,
    y: &[f64],
    dt: f64,
) -> Result<Vec<f64>> {
    let axpy = |y: &[f64], k: &[f64], a: f64| -> Vec<f64> {
        y.iter().zip(k).map(|(yi, ki)| yi + a * ki).collect()
    };
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * dt, &axpy(y, &k1, 0.5 * dt))?;
    let k3 = f(t + 0.5 * dt, &axpy(y, &k2, 0.5 * dt))?;
    let k4 = f(t + dt, &axpy(y, &k3, dt))?;
    Ok(y.iter()
        .enumerate()
        .map(|(i, yi)| yi + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Internal phase point: nodal ρ and the stepped companion variable (m or u).
#[derive(Clone)]
struct Phase {
    rho: ScalarField,
    w: ScalarField,
}

impl Phase {
    fn add_scaled(&self, d: &Phase, a: f64) -> Phase {
        Phase { rho: self.rho.add_scaled(&d.rho, a), w: self.w.add_scaled(&d.w, a) }
    }

    fn is_finite(&self) -> bool {
        self.rho.is_finite() && self.w.is_finite()
    }
}

fn guarded_density(rho: &ScalarField, floor: f64) -> Result<Density> {
    if !rho.is_finite() {
        return Err(Error::GuardNonFinite);
    }
    if rho.min() < floor {
        return Err(Error::GuardDensityFloor);
    }
    Density::new(rho.clone()).map_err(|_| Error::GuardDensityFloor)
}

// Stage-level guard: if a Runge-Kutta stage leaves the phase space (non-finite
// values or a non-positive density) the right-hand side cannot be evaluated at
// all; that is classified as blow-up, not as a density-floor stop. The floor
// flag is reserved for completed steps whose state is otherwise valid.
fn phase_rhs(model: &ModelSpec, form: Form, p: &Phase) -> Result<Phase> {
    if !p.is_finite() {
        return Err(Error::GuardNonFinite);
    }
    let rho = Density::new(p.rho.clone()).map_err(|_| Error::GuardNonFinite)?;
    match form {
        Form::Momentum => {
            let solver = InertiaSolver::new(model, &rho)?;
            let u = solver.solve(&p.w)?;
            let (rho_dot, m_dot) = rhs_momentum_parts(model, &rho, &u, &p.w)?;
            Ok(Phase { rho: rho_dot, w: m_dot })
        }
        Form::Velocity => {
            let solver = InertiaSolver::new(model, &rho)?;
            let (rho_dot, u_dot) = rhs_velocity_with(model, &solver, &rho, &p.w)?;
            Ok(Phase { rho: rho_dot, w: u_dot })
        }
    }
}

fn rk4_phase(model: &ModelSpec, form: Form, p: &Phase, dt: f64) -> Result<Phase> {
    let k1 = phase_rhs(model, form, p)?;
    let k2 = phase_rhs(model, form, &p.add_scaled(&k1, 0.5 * dt))?;
    let k3 = phase_rhs(model, form, &p.add_scaled(&k2, 0.5 * dt))?;
    let k4 = phase_rhs(model, form, &p.add_scaled(&k3, dt))?;
    let mut next = p.clone();
    for (k, wgt) in [(&k1, 1.0), (&k2, 2.0), (&k3, 2.0), (&k4, 1.0)] {
        next = next.add_scaled(k, wgt * dt / 6.0);
    }
    if !next.is_finite() {
        return Err(Error::GuardNonFinite);
    }
    Ok(next)
}

/// One guarded RK4 step of the full system.
pub fn rk4_step(model: &ModelSpec, state: &State, dt: f64, form: Form) -> Result<State> {
    if !(dt > 0.0) {
        return Err(Error::NonPositiveDt);
    }
    let w = match form {
        Form::Momentum => apply_a(model, &state.rho, &state.u)?,
        Form::Velocity => state.u.clone(),
    };
    let p = Phase { rho: state.rho.field().clone(), w };
    let next = rk4_phase(model, form, &p, dt)?;
    let rho = guarded_density(&next.rho, 0.0)?;
    let u = match form {
        Form::Momentum => InertiaSolver::new(model, &rho)?.solve(&next.w)?,
        Form::Velocity => next.w,
    };
    State::new(state.time + dt, rho, u)
}

fn diagnostics_for(model: &ModelSpec, state: &State) -> Result<DiagnosticsRecord> {
    Ok(DiagnosticsRecord {
        time: state.time,
        energy: energy(model, state)?,
        mass: state.rho.total_mass(),
        min_rho: state.rho.min(),
        max_abs_u: state.u.max_abs(),
        horizontality_defect: None,
    })
}

/// Fixed-step RK4 integration of the system from `state0` to `t_end`.
///
/// Snapshots (state + diagnostics) are recorded at the initial time, every
/// `snapshot_every` steps and at the final time. The run halts early with
/// [`Termination::BlowupDetected`] when max|u| exceeds 1e6·(initial max|u|+1)
/// or non-finite values appear, and with [`Termination::DensityFloor`] when
/// min ρ drops below 1e-8 of the initial mean density.
pub fn simulate(
    model: &ModelSpec,
    state0: &State,
    t_end: f64,
    dt: f64,
    form: Form,
    snapshot_every: usize,
) -> Result<Trajectory> {
    if !(dt > 0.0) {
        return Err(Error::NonPositiveDt);
    }
    let snapshot_every = snapshot_every.max(1);
    let n_steps = ((t_end - state0.time) / dt).round().max(0.0) as usize;
    let u_cap = 1e6 * (state0.u.max_abs() + 1.0);
    let floor = 1e-8 * state0.rho.mean();

    let cfl = 0.5 * state0.rho.grid().spacing() / state0.u.max_abs().max(1e-300);
    if dt > cfl {
        eprintln!("semiflow: advisory: dt = {dt:.3e} exceeds CFL estimate {cfl:.3e}");
    }

    let w0 = match form {
        Form::Momentum => apply_a(model, &state0.rho, &state0.u)?,
        Form::Velocity => state0.u.clone(),
    };
    let mut phase = Phase { rho: state0.rho.field().clone(), w: w0 };
    let mut states = vec![state0.clone()];
    let mut diagnostics = vec![diagnostics_for(model, state0)?];
    let mut termination = Termination::Completed;

    for step in 1..=n_steps {
        let time = state0.time + step as f64 * dt;
        let next = match rk4_phase(model, form, &phase, dt) {
            Ok(p) => p,
            Err(Error::GuardNonFinite)
            | Err(Error::IndefiniteOperator)
            | Err(Error::InvalidDensity) => {
                termination = Termination::BlowupDetected;
                break;
            }
            Err(e) => return Err(e),
        };

        // post-step guards need u even between snapshots
        let guarded = (|| -> Result<State> {
            let rho = guarded_density(&next.rho, floor)?;
            let u = match form {
                Form::Momentum => InertiaSolver::new(model, &rho)?.solve(&next.w)?,
                Form::Velocity => next.w.clone(),
            };
            State::new(time, rho, u)
        })();
        let state = match guarded {
            Ok(s) => s,
            Err(Error::GuardDensityFloor) => {
                termination = Termination::DensityFloor;
                break;
            }
            Err(_) => {
                termination = Termination::BlowupDetected;
                break;
            }
        };
        if !state.u.is_finite() {
            termination = Termination::BlowupDetected;
            break;
        }
        if state.u.max_abs() > u_cap {
            termination = Termination::BlowupDetected;
            states.push(state.clone());
            diagnostics.push(diagnostics_for(model, &state)?);
            break;
        }
        if state.rho.min() < floor {
            termination = Termination::DensityFloor;
            break;
        }

        phase = next;
        if step % snapshot_every == 0 || step == n_steps {
            diagnostics.push(diagnostics_for(model, &state)?);
            states.push(state);
        }
    }

    Ok(Trajectory { states, diagnostics, termination })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::inertia::CoefficientSet;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;
    use std::sync::Arc;

    const TWO_PI: f64 = 2.0 * PI;

    fn burgers_model() -> ModelSpec {
        let coeffs = CoefficientSet::new(vec![PolyInRho::monomial(1.0, 1).unwrap()]).unwrap();
        ModelSpec::new(coeffs, PotentialSpec::Zero, "burgers")
    }

    fn sgn_model() -> ModelSpec {
        let coeffs = CoefficientSet::new(vec![
            PolyInRho::monomial(1.0, 1).unwrap(),
            PolyInRho::monomial(1.0 / 3.0, 3).unwrap(),
        ])
        .unwrap();
        ModelSpec::new(coeffs, PotentialSpec::Quadratic(1.0), "sgn")
    }

    fn grid32() -> Arc<Grid> {
        Grid::new(32, TWO_PI).unwrap()
    }

    #[test]
    fn potential_eval_variants() {
        let g = grid32();
        let rho = Density::constant(g.clone(), 1.0).unwrap();
        let (v, d) = potential_eval(&PotentialSpec::Zero, &rho);
        assert_eq!(v, 0.0);
        assert_eq!(d.max_abs(), 0.0);

        let (v, d) = potential_eval(&PotentialSpec::Quadratic(1.0), &rho);
        assert_abs_diff_eq!(v, PI, epsilon = 1e-13);
        assert_abs_diff_eq!(d.values()[3], 1.0, epsilon = 1e-14);

        // e(rho) = rho/2 coincides with the quadratic potential at c = 1
        let e = PolyInRho::monomial(0.5, 1).unwrap();
        let (v, d) = potential_eval(&PotentialSpec::InternalEnergy(e), &rho);
        assert_abs_diff_eq!(v, PI, epsilon = 1e-13);
        assert_abs_diff_eq!(d.values()[7], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn b_field_burgers_case() {
        let g = grid32();
        let model = burgers_model();
        let rho = Density::constant(g.clone(), 1.0).unwrap();
        let u = ScalarField::from_fn(g.clone(), |x| x.sin());
        let b = b_field(&model, &rho, &u).unwrap();
        for (bv, x) in b.values().iter().zip(g.nodes()) {
            assert_abs_diff_eq!(bv, &(0.5 * x.sin().powi(2)), epsilon = 1e-13);
        }
    }

    #[test]
    fn b_field_sgn_rest_depth() {
        // a0' = 1, a1' = rho^2; at rho = 1, u = sin x:
        // B = 1/2 (sin^2 + cos^2) - 1 = -1/2
        let g = grid32();
        let model = sgn_model();
        let rho = Density::constant(g.clone(), 1.0).unwrap();
        let u = ScalarField::from_fn(g.clone(), |x| x.sin());
        let b = b_field(&model, &rho, &u).unwrap();
        for bv in b.values() {
            assert_abs_diff_eq!(bv, &-0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn rhs_momentum_burgers_hand_reduction() {
        let g = Grid::new(64, TWO_PI).unwrap();
        let model = burgers_model();
        let rho = Density::constant(g.clone(), 1.0).unwrap();
        let u = ScalarField::from_fn(g.clone(), |x| x.sin());
        let state = State::new(0.0, rho, u).unwrap();
        let (rho_dot, m_dot) = rhs_momentum(&model, &state).unwrap();
        for (v, x) in rho_dot.values().iter().zip(g.nodes()) {
            assert_abs_diff_eq!(v, &(-x.cos()), epsilon = 1e-12);
        }
        for (v, x) in m_dot.values().iter().zip(g.nodes()) {
            assert_abs_diff_eq!(v, &(-2.0 * x.sin() * x.cos()), epsilon = 1e-12);
        }
    }

    #[test]
    fn rest_state_feels_only_potential_force() {
        let g = grid32();
        let model = sgn_model();
        let rho = Density::from_fn(g.clone(), |x| 1.0 + 0.2 * x.cos()).unwrap();
        let u = ScalarField::zeros(g.clone());
        let state = State::new(0.0, rho.clone(), u).unwrap();
        let (rho_dot, m_dot) = rhs_momentum(&model, &state).unwrap();
        assert_eq!(rho_dot.max_abs(), 0.0);
        // m_t = rho * d/dx(-dV/drho) = -rho * rho_x here (V quadratic, c=1)
        let expect = rho.mul(&rho.deriv(1)).scale(-1.0);
        assert!(m_dot.sub(&expect).max_abs() < 1e-12);
    }

    #[test]
    fn rhs_velocity_burgers_reduces_to_advection() {
        let g = Grid::new(64, TWO_PI).unwrap();
        let model = burgers_model();
        let rho = Density::constant(g.clone(), 1.0).unwrap();
        let u = ScalarField::from_fn(g.clone(), |x| x.sin());
        let state = State::new(0.0, rho, u.clone()).unwrap();
        let (_, u_dot) = rhs_velocity(&model, &state).unwrap();
        let expect = u.mul(&u.deriv(1)).scale(-1.0);
        assert!(u_dot.sub(&expect).max_abs() < 1e-11);
    }

    #[test]
    fn momentum_and_velocity_rhs_are_consistent() {
        // d/dt m along the velocity RHS must reproduce the momentum RHS:
        // m_dot = A'(rho)(u, rho_dot) + A(u_dot)
        let g = Grid::new(64, TWO_PI).unwrap();
        let model = sgn_model();
        let rho = Density::from_fn(g.clone(), |x| 1.0 + 0.2 * x.cos()).unwrap();
        let u = ScalarField::from_fn(g.clone(), |x| 0.3 * x.sin() + 0.1 * (2.0 * x).cos());
        let state = State::new(0.0, rho.clone(), u.clone()).unwrap();
        let (rho_dot, u_dot) = rhs_velocity(&model, &state).unwrap();
        let (_, m_dot) = rhs_momentum(&model, &state).unwrap();
        let via_chain = apply_a_prime(&model, &rho, &u, &rho_dot)
            .unwrap()
            .add(&apply_a(&model, &rho, &u_dot).unwrap());
        let rel = via_chain.sub(&m_dot).norm_l2() / m_dot.norm_l2();
        assert!(rel < 1e-9, "rel {rel:e}");
    }

    #[test]
    fn rk4_reproduces_taylor_polynomial() {
        let lambda = -0.7;
        let dt = 0.05;
        let y = rk4_system(|_, y| Ok(vec![lambda * y[0]]), 0.0, &[1.0], dt).unwrap();
        let z = lambda * dt;
        let taylor = 1.0 + z + z * z / 2.0 + z.powi(3) / 6.0 + z.powi(4) / 24.0;
        assert_abs_diff_eq!(y[0], taylor, epsilon = 1e-15);
    }

    #[test]
    fn rk4_step_zero_velocity_keeps_state() {
        let g = grid32();
        let model = burgers_model();
        let rho = Density::constant(g.clone(), 1.0).unwrap();
        let state = State::new(0.0, rho, ScalarField::zeros(g)).unwrap();
        let next = rk4_step(&model, &state, 0.1, Form::Momentum).unwrap();
        assert_abs_diff_eq!(next.time, 0.1, epsilon = 1e-15);
        assert!(next.u.max_abs() < 1e-14);
        assert!(next.rho.sub(&state.rho).max_abs() < 1e-14);
    }

    #[test]
    fn rk4_self_convergence_is_fourth_order() {
        let g = Grid::new(64, TWO_PI).unwrap();
        let model = burgers_model();
        let rho = Density::constant(g.clone(), 1.0).unwrap();
        let u = ScalarField::from_fn(g.clone(), |x| 0.3 * x.sin());
        let state = State::new(0.0, rho, u).unwrap();
        let t_end = 0.5;
        let run = |dt: f64| {
            simulate(&model, &state, t_end, dt, Form::Momentum, usize::MAX)
                .unwrap()
                .final_state()
                .u
                .clone()
        };
        let reference = run(0.0025);
        let err_coarse = run(0.02).sub(&reference).max_abs();
        let err_fine = run(0.01).sub(&reference).max_abs();
        let ratio = err_coarse / err_fine;
        assert!((10.0..25.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn stationary_run_conserves_energy_exactly() {
        let g = grid32();
        let model = burgers_model();
        let rho = Density::from_fn(g.clone(), |x| 1.0 + 0.3 * x.cos()).unwrap();
        let state = State::new(0.0, rho, ScalarField::zeros(g)).unwrap();
        let traj = simulate(&model, &state, 1.0, 0.01, Form::Momentum, 10).unwrap();
        assert_eq!(traj.termination, Termination::Completed);
        let e0 = traj.diagnostics[0].energy;
        for d in &traj.diagnostics {
            assert!((d.energy - e0).abs() < 1e-13);
        }
    }

    #[test]
    fn burgers_breaks_and_is_detected() {
        let g = Grid::new(128, TWO_PI).unwrap();
        let model = burgers_model();
        let rho = Density::constant(g.clone(), 1.0).unwrap();
        let u = ScalarField::from_fn(g.clone(), |x| x.sin());
        let state = State::new(0.0, rho, u).unwrap();
        let traj = simulate(&model, &state, 2.0, 1e-3, Form::Momentum, 50).unwrap();
        assert_ne!(traj.termination, Termination::Completed);
        let t_stop = traj.final_state().time;
        assert!(t_stop < 2.0, "stopped at {t_stop}");
        for s in &traj.states {
            assert!(s.u.is_finite() && s.rho.is_finite());
        }
    }

    #[test]
    fn energy_examples() {
        let g = grid32();
        // u = 0, V = Quadratic(1), rho = 1 -> E = pi
        let model = ModelSpec::new(
            CoefficientSet::new(vec![PolyInRho::monomial(1.0, 1).unwrap()]).unwrap(),
            PotentialSpec::Quadratic(1.0),
            "sw",
        );
        let rho = Density::constant(g.clone(), 1.0).unwrap();
        let state = State::new(0.0, rho.clone(), ScalarField::zeros(g.clone())).unwrap();
        assert_abs_diff_eq!(energy(&model, &state).unwrap(), PI, epsilon = 1e-12);

        // H1 metric: E = 1/2 (∫sin² + ∫cos²) = pi
        let model = ModelSpec::new(
            CoefficientSet::new(vec![
                PolyInRho::constant(1.0).unwrap(),
                PolyInRho::constant(1.0).unwrap(),
            ])
            .unwrap(),
            PotentialSpec::Zero,
            "h1",
        );
        let u = ScalarField::from_fn(g, |x| x.sin());
        let state = State::new(0.0, rho, u).unwrap();
        assert_abs_diff_eq!(energy(&model, &state).unwrap(), PI, epsilon = 1e-12);
    }

    #[test]
    fn mass_is_conserved_to_roundoff() {
        let g = Grid::new(64, TWO_PI).unwrap();
        let model = sgn_model();
        let rho = Density::from_fn(g.clone(), |x| 1.0 + 0.1 * x.cos()).unwrap();
        let u = ScalarField::from_fn(g.clone(), |x| 0.1 * x.sin());
        let state = State::new(0.0, rho, u).unwrap();
        let traj = simulate(&model, &state, 1.0, 1e-2, Form::Momentum, 10).unwrap();
        let m0 = traj.diagnostics[0].mass;
        for d in &traj.diagnostics {
            assert!((d.mass - m0).abs() <= 1e-12 * m0);
        }
    }

    #[test]
    fn momentum_rhs_independent_of_rho_when_right_invariant() {
        // constant coefficients and V = 0: the m-equation does not see rho
        let g = Grid::new(64, TWO_PI).unwrap();
        let model = ModelSpec::new(
            CoefficientSet::new(vec![
                PolyInRho::constant(1.0).unwrap(),
                PolyInRho::constant(1.0).unwrap(),
            ])
            .unwrap(),
            PotentialSpec::Zero,
            "h1",
        );
        let u = ScalarField::from_fn(g.clone(), |x| 0.4 * x.sin() + 0.2 * (3.0 * x).cos());
        let rho1 = Density::constant(g.clone(), 1.0).unwrap();
        let rho2 = Density::from_fn(g.clone(), |x| 2.0 + 0.7 * x.sin()).unwrap();
        let s1 = State::new(0.0, rho1, u.clone()).unwrap();
        let s2 = State::new(0.0, rho2, u).unwrap();
        let (_, m1) = rhs_momentum(&model, &s1).unwrap();
        let (_, m2) = rhs_momentum(&model, &s2).unwrap();
        assert!(m1.sub(&m2).max_abs() < 1e-12);
    }
}
