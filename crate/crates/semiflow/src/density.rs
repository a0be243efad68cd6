//! The induced Riemannian geometry on densities: the operator Ā(ρ) with
//! Ā(ρ)⁻¹ p = -∂( ρ A(ρ)⁻¹( ρ ∂p ) ), the induced metric, horizontal lifts,
//! horizontality diagnostics, and geodesics of densities obtained by lifting
//! to the diffeomorphism group.

use num_complex::Complex;

use crate::dynamics::{simulate, DiagnosticsRecord, Form, State, Trajectory};
use crate::error::{Error, Result};
use crate::grid::{Density, ScalarField, VelocityField};
use crate::inertia::{apply_a, pcg, InertiaSolver, ModelSpec};

fn mean_zero_tol(f: &ScalarField) -> f64 {
    1e-12 * f.grid().n() as f64 * f.max_abs().max(1.0)
}

/// A tangent vector to the space of densities: a mean-zero scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentDensity(ScalarField);

impl TangentDensity {
    pub fn new(field: ScalarField) -> Result<Self> {
        if field.integrate().abs() > mean_zero_tol(&field) {
            return Err(Error::NonZeroMeanTangent);
        }
        Ok(TangentDensity(field))
    }

    pub fn field(&self) -> &ScalarField {
        &self.0
    }
}

impl std::ops::Deref for TangentDensity {
    type Target = ScalarField;

    fn deref(&self) -> &ScalarField {
        &self.0
    }
}

/// Mean-zero representative of a pressure potential in C^∞(M)/ℝ.
#[derive(Debug, Clone, PartialEq)]
pub struct PressurePotential(ScalarField);

impl PressurePotential {
    pub fn new(field: ScalarField) -> Result<Self> {
        if field.integrate().abs() > mean_zero_tol(&field) {
            return Err(Error::NonZeroMeanPressure);
        }
        Ok(PressurePotential(field))
    }

    pub fn field(&self) -> &ScalarField {
        &self.0
    }
}

impl std::ops::Deref for PressurePotential {
    type Target = ScalarField;

    fn deref(&self) -> &ScalarField {
        &self.0
    }
}

/// Ā(ρ)⁻¹ p = -∂( ρ A(ρ)⁻¹( ρ ∂p ) ).
///
/// The output is mean-zero to roundoff by its divergence structure.
pub fn apply_abar_inv(model: &ModelSpec, rho: &Density, p: &PressurePotential) -> Result<TangentDensity> {
    let solver = InertiaSolver::new(model, rho)?;
    TangentDensity::new(apply_abar_inv_with(&solver, model, rho, p.field())?)
}

fn apply_abar_inv_with(
    solver: &InertiaSolver,
    _model: &ModelSpec,
    rho: &Density,
    p: &ScalarField,
) -> Result<ScalarField> {
    let flux = solver.solve(&rho.mul(&p.deriv(1)))?;
    Ok(rho.mul(&flux).deriv(1).scale(-1.0))
}

/// Remove the mean and the Nyquist component, the kernel of the discrete
/// gradient.
fn project_range(f: &ScalarField) -> ScalarField {
    let grid = f.grid().clone();
    let mut spectrum = grid.forward(f.values());
    spectrum[0] = Complex::new(0.0, 0.0);
    let nyq = grid.nyquist_index();
    spectrum[nyq] = Complex::new(0.0, 0.0);
    let values = grid.inverse_real(spectrum);
    ScalarField::new(grid, values).expect("projection output is finite")
}

/// Solve p = Ā(ρ) ρ̇ by conjugate gradients on the symmetric positive
/// operator Ā(ρ)⁻¹ restricted to mean-zero functions; every iteration costs
/// one inner A-solve.
pub fn solve_abar(model: &ModelSpec, rho: &Density, rho_dot: &TangentDensity) -> Result<PressurePotential> {
    let solver = InertiaSolver::new(model, rho)?;
    let grid = rho.grid().clone();

    // preconditioner: constant-coefficient approximation of Abar
    let rho_bar = rho.mean();
    let mean_coeffs: Vec<f64> = model
        .coefficients
        .coeffs()
        .iter()
        .map(|p| rho.map(|r| p.eval(r)).mean())
        .collect();
    let nyq = grid.nyquist_index();
    let precond_symbol: Vec<f64> = grid
        .wavenumbers()
        .iter()
        .enumerate()
        .map(|(j, &kappa)| {
            if j == 0 || j == nyq {
                return 0.0;
            }
            let a_sym: f64 = mean_coeffs
                .iter()
                .enumerate()
                .map(|(i, &a)| a * kappa.powi(2 * i as i32))
                .sum();
            a_sym / (rho_bar * rho_bar * kappa * kappa)
        })
        .collect();
    let precond = |r: &ScalarField| {
        let mut spectrum = r.grid().forward(r.values());
        for (c, &s) in spectrum.iter_mut().zip(&precond_symbol) {
            *c *= s;
        }
        let values = r.grid().inverse_real(spectrum);
        ScalarField::new(r.grid().clone(), values).expect("preconditioner output is finite")
    };

    let rhs = project_range(rho_dot.field());
    let apply = |p: &ScalarField| apply_abar_inv_with(&solver, model, rho, p);
    let p = pcg(apply, precond, &rhs, 1e-13, 20 * grid.n())
        .map_err(|_| Error::AbarSolveFailed)?;
    PressurePotential::new(project_range(&p))
}

/// Induced metric on densities: Ḡ_ρ(ρ̇₁, ρ̇₂) = ∫ (Ā(ρ)ρ̇₁) ρ̇₂ dx.
pub fn induced_metric(
    model: &ModelSpec,
    rho: &Density,
    rho_dot1: &TangentDensity,
    rho_dot2: &TangentDensity,
) -> Result<f64> {
    let p = solve_abar(model, rho, rho_dot1)?;
    Ok(p.inner(rho_dot2))
}

/// Horizontal lift u = A(ρ)⁻¹( ρ ∂p ) with p = Ā(ρ) ρ̇; the unique velocity
/// realizing ρ̇ that is G-orthogonal to volume-preserving directions.
pub fn horizontal_lift(model: &ModelSpec, rho: &Density, rho_dot: &TangentDensity) -> Result<VelocityField> {
    let p = solve_abar(model, rho, rho_dot)?;
    let solver = InertiaSolver::new(model, rho)?;
    solver.solve(&rho.mul(&p.deriv(1)))
}

/// Normalized pairing of A(ρ)u against the vertical family c/ρ:
/// |∫ A(ρ)u / ρ dx| / (‖A(ρ)u‖ ‖1/ρ‖). Zero exactly when u is horizontal.
pub fn horizontality_defect(model: &ModelSpec, rho: &Density, u: &VelocityField) -> Result<f64> {
    let m = apply_a(model, rho, u)?;
    let inv_rho = rho.map(|r| 1.0 / r);
    let numer = m.mul(&inv_rho).integrate().abs();
    let denom = m.norm_l2() * inv_rho.norm_l2();
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok(numer / denom)
}

/// A geodesic of densities with its lift to the diffeomorphism group.
#[derive(Debug, Clone)]
pub struct DensityGeodesic {
    /// The lifted trajectory; diagnostics carry the horizontality defect.
    pub trajectory: Trajectory,
    /// (ρ(t), ρ̇(t)) with ρ̇ = -∂(ρu) at each snapshot.
    pub path: Vec<(Density, TangentDensity)>,
}

/// Lift (ρ₀, ρ̇₀) horizontally, integrate on the diffeomorphism group, and
/// project back to densities.
pub fn density_geodesic(
    model: &ModelSpec,
    rho0: &Density,
    rho_dot0: &TangentDensity,
    t_end: f64,
    dt: f64,
    snapshot_every: usize,
) -> Result<DensityGeodesic> {
    let u0 = horizontal_lift(model, rho0, rho_dot0)?;
    let state0 = State::new(0.0, rho0.clone(), u0)?;
    let mut trajectory = simulate(model, &state0, t_end, dt, Form::Momentum, snapshot_every)?;
    let mut path = Vec::with_capacity(trajectory.states.len());
    let defects: Vec<f64> = trajectory
        .states
        .iter()
        .map(|s| horizontality_defect(model, &s.rho, &s.u))
        .collect::<Result<_>>()?;
    for state in &trajectory.states {
        let rho_dot = TangentDensity(state.rho.mul(&state.u).deriv(1).scale(-1.0));
        path.push((state.rho.clone(), rho_dot));
    }
    for (rec, defect) in trajectory.diagnostics.iter_mut().zip(defects) {
        rec.horizontality_defect = Some(defect);
    }
    Ok(DensityGeodesic { trajectory, path })
}

/// Largest horizontality defect recorded along a lifted geodesic.
pub fn max_defect(diags: &[DiagnosticsRecord]) -> f64 {
    diags
        .iter()
        .filter_map(|d| d.horizontality_defect)
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::presets::{make_preset, Preset};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;
    use std::sync::Arc;

    const TWO_PI: f64 = 2.0 * PI;

    fn otto() -> ModelSpec {
        make_preset(Preset::Burgers)
    }

    fn grid64() -> Arc<Grid> {
        Grid::new(64, TWO_PI).unwrap()
    }

    fn unit_density(g: &Arc<Grid>) -> Density {
        Density::constant(g.clone(), 1.0).unwrap()
    }

    fn mean_zero_field(g: &Arc<Grid>, seed: u64) -> ScalarField {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let coeffs: Vec<(f64, f64)> =
            (1..=5).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        ScalarField::from_fn(g.clone(), |x| {
            coeffs
                .iter()
                .enumerate()
                .map(|(i, (a, b))| {
                    let k = (i + 1) as f64;
                    a * (k * x).sin() + b * (k * x).cos()
                })
                .sum()
        })
    }

    fn random_density(g: &Arc<Grid>, seed: u64) -> Density {
        let f = mean_zero_field(g, seed);
        let amp = f.max_abs().max(1e-12);
        Density::new(f.scale(0.35 / amp).map(|v| 1.0 + v)).unwrap()
    }

    #[test]
    fn otto_operator_is_negative_laplacian() {
        let g = grid64();
        let model = otto();
        let rho = unit_density(&g);
        let p = PressurePotential::new(ScalarField::from_fn(g.clone(), |x| x.cos())).unwrap();
        let out = apply_abar_inv(&model, &rho, &p).unwrap();
        for (v, x) in out.values().iter().zip(g.nodes()) {
            assert_abs_diff_eq!(v, &x.cos(), epsilon = 1e-11);
        }
    }

    #[test]
    fn constant_pressure_maps_to_zero() {
        let g = grid64();
        let model = otto();
        let rho = random_density(&g, 1);
        let p = PressurePotential::new(ScalarField::zeros(g.clone())).unwrap();
        let out = apply_abar_inv(&model, &rho, &p).unwrap();
        assert_eq!(out.max_abs(), 0.0);
    }

    #[test]
    fn abar_inv_quadratic_form_is_positive() {
        let g = grid64();
        for seed in 0..10 {
            let k = (seed % 2) as usize;
            let model = if k == 0 { otto() } else { make_preset(Preset::EpdiffH1) };
            let rho = random_density(&g, 10 + seed);
            let p = PressurePotential::new(project_zero_mean(&mean_zero_field(&g, 30 + seed))).unwrap();
            let out = apply_abar_inv(&model, &rho, &p).unwrap();
            assert!(out.field().inner(&p) > 0.0, "seed {seed}");
        }
    }

    fn project_zero_mean(f: &ScalarField) -> ScalarField {
        f.map({
            let m = f.mean();
            move |v| v - m
        })
    }

    #[test]
    fn solve_abar_inverts_otto_laplacian() {
        let g = grid64();
        let model = otto();
        let rho = unit_density(&g);
        let rho_dot = TangentDensity::new(ScalarField::from_fn(g.clone(), |x| x.cos())).unwrap();
        let p = solve_abar(&model, &rho, &rho_dot).unwrap();
        for (v, x) in p.values().iter().zip(g.nodes()) {
            assert_abs_diff_eq!(v, &x.cos(), epsilon = 1e-10);
        }
    }

    #[test]
    fn solve_abar_round_trip() {
        let g = grid64();
        for seed in 0..6 {
            let model = if seed % 2 == 0 { otto() } else { make_preset(Preset::EpdiffH1) };
            let rho = random_density(&g, 40 + seed);
            let p_in = PressurePotential::new(project_range(&mean_zero_field(&g, 50 + seed))).unwrap();
            let rd = apply_abar_inv(&model, &rho, &p_in).unwrap();
            let p_out = solve_abar(&model, &rho, &rd).unwrap();
            let rel = p_out.sub(p_in.field()).norm_l2() / p_in.norm_l2();
            assert!(rel < 1e-9, "seed {seed}: rel {rel:e}");
        }
    }

    #[test]
    fn solve_abar_zero_maps_to_zero() {
        let g = grid64();
        let model = otto();
        let rho = random_density(&g, 3);
        let rho_dot = TangentDensity::new(ScalarField::zeros(g.clone())).unwrap();
        let p = solve_abar(&model, &rho, &rho_dot).unwrap();
        assert_eq!(p.max_abs(), 0.0);
    }

    #[test]
    fn induced_metric_otto_closed_form() {
        let g = grid64();
        let model = otto();
        let rho = unit_density(&g);
        let rd = TangentDensity::new(ScalarField::from_fn(g.clone(), |x| x.cos())).unwrap();
        let val = induced_metric(&model, &rho, &rd, &rd).unwrap();
        assert_abs_diff_eq!(val, PI, epsilon = 1e-10);
    }

    #[test]
    fn induced_metric_symmetric_and_positive() {
        let g = grid64();
        for seed in 0..5 {
            let model = if seed % 2 == 0 { otto() } else { make_preset(Preset::EpdiffH1) };
            let rho = random_density(&g, 60 + seed);
            let r1 = TangentDensity::new(project_range(&mean_zero_field(&g, 70 + seed))).unwrap();
            let r2 = TangentDensity::new(project_range(&mean_zero_field(&g, 80 + seed))).unwrap();
            let g12 = induced_metric(&model, &rho, &r1, &r2).unwrap();
            let g21 = induced_metric(&model, &rho, &r2, &r1).unwrap();
            let scale = g12.abs().max(g21.abs()).max(1e-30);
            assert!((g12 - g21).abs() / scale < 1e-10, "seed {seed}");
            assert!(induced_metric(&model, &rho, &r1, &r1).unwrap() > 0.0);
        }
    }

    #[test]
    fn horizontal_lift_otto_closed_form() {
        let g = grid64();
        let model = otto();
        let rho = unit_density(&g);
        let rd = TangentDensity::new(ScalarField::from_fn(g.clone(), |x| x.cos())).unwrap();
        let u = horizontal_lift(&model, &rho, &rd).unwrap();
        for (v, x) in u.values().iter().zip(g.nodes()) {
            assert_abs_diff_eq!(v, &(-x.sin()), epsilon = 1e-10);
        }
    }

    #[test]
    fn lift_projects_back() {
        let g = grid64();
        for seed in 0..5 {
            let model = if seed % 2 == 0 { otto() } else { make_preset(Preset::EpdiffH1) };
            let rho = random_density(&g, 90 + seed);
            let rd = TangentDensity::new(project_range(&mean_zero_field(&g, 95 + seed))).unwrap();
            let u = horizontal_lift(&model, &rho, &rd).unwrap();
            let back = rho.mul(&u).deriv(1).scale(-1.0);
            let rel = back.sub(rd.field()).norm_l2() / rd.norm_l2();
            assert!(rel < 1e-8, "seed {seed}: rel {rel:e}");
        }
    }

    #[test]
    fn lifted_field_is_horizontal_and_vertical_is_not() {
        let g = grid64();
        let model = make_preset(Preset::EpdiffH1);
        let rho = random_density(&g, 7);
        let rd = TangentDensity::new(project_range(&mean_zero_field(&g, 8))).unwrap();
        let u = horizontal_lift(&model, &rho, &rd).unwrap();
        assert!(horizontality_defect(&model, &rho, &u).unwrap() <= 1e-10);

        let vertical = rho.map(|r| 1.0 / r);
        assert!(horizontality_defect(&model, &rho, &vertical).unwrap() > 0.1);

        let zero = ScalarField::zeros(g.clone());
        assert_eq!(horizontality_defect(&model, &rho, &zero).unwrap(), 0.0);
    }

    #[test]
    fn submersion_identity() {
        // G(lift, lift) = Gbar(rho_dot, rho_dot)
        let g = grid64();
        for seed in 0..5 {
            let model = if seed % 2 == 0 { otto() } else { make_preset(Preset::EpdiffH1) };
            let rho = random_density(&g, 100 + seed);
            let rd = TangentDensity::new(project_range(&mean_zero_field(&g, 110 + seed))).unwrap();
            let u = horizontal_lift(&model, &rho, &rd).unwrap();
            let g_diff = u.inner(&apply_a(&model, &rho, &u).unwrap());
            let g_dens = induced_metric(&model, &rho, &rd, &rd).unwrap();
            let rel = (g_diff - g_dens).abs() / g_dens.abs().max(1e-30);
            assert!(rel < 1e-9, "seed {seed}: rel {rel:e}");
        }
    }

    #[test]
    fn stationary_density_geodesic() {
        let g = grid64();
        let model = otto();
        let rho0 = random_density(&g, 5);
        let rd0 = TangentDensity::new(ScalarField::zeros(g.clone())).unwrap();
        let geo = density_geodesic(&model, &rho0, &rd0, 0.5, 0.01, 10).unwrap();
        for (rho, rd) in &geo.path {
            assert!(rho.sub(rho0.field()).max_abs() < 1e-12);
            assert!(rd.max_abs() < 1e-12);
        }
    }

    #[test]
    fn horizontality_is_preserved_along_geodesics() {
        let g = grid64();
        let model = otto();
        let rho0 = unit_density(&g);
        let rd0 = TangentDensity::new(ScalarField::from_fn(g.clone(), |x| 0.05 * x.cos())).unwrap();
        let geo = density_geodesic(&model, &rho0, &rd0, 1.0, 1e-2, 10).unwrap();
        let defect = max_defect(&geo.trajectory.diagnostics);
        assert!(defect <= 1e-8, "max defect {defect:e}");
    }

    #[test]
    fn otto_geodesic_matches_displacement_oracle() {
        // initial pressure p0, rho0 = 1: particles travel in straight lines
        // along dp0/dx, and rho(t, x + t p0'(x)) (1 + t p0''(x)) = rho0(x)
        let g = Grid::new(128, TWO_PI).unwrap();
        let model = otto();
        let rho0 = Density::constant(g.clone(), 1.0).unwrap();
        let p0 = ScalarField::from_fn(g.clone(), |x| 0.05 * x.cos());
        let rd0 = TangentDensity::new(p0.deriv(2).scale(-1.0)).unwrap();
        let geo = density_geodesic(&model, &rho0, &rd0, 0.5, 1e-3, 100).unwrap();
        let dp0 = p0.deriv(1);
        let ddp0 = p0.deriv(2);
        for (state, (rho, _)) in geo.trajectory.states.iter().zip(&geo.path) {
            let t = state.time;
            let targets: Vec<f64> = g
                .nodes()
                .iter()
                .zip(dp0.values())
                .map(|(&x, &v)| x + t * v)
                .collect();
            let interped = rho.interp(&targets);
            for ((&iv, &jv), &r0) in interped.iter().zip(ddp0.values()).zip(rho0.values()) {
                let err = (iv * (1.0 + t * jv) - r0).abs();
                assert!(err < 1e-5, "t = {t}: err {err:e}");
            }
        }
    }

    #[test]
    fn tangent_rejects_nonzero_mean() {
        let g = grid64();
        let f = ScalarField::constant(g, 0.5);
        assert!(matches!(TangentDensity::new(f), Err(Error::NonZeroMeanTangent)));
    }
}
