//! Named model instances (Burgers, Camassa–Holm/EPDiff H¹, shallow water,
//! barotropic Euler, Serre–Green–Naghdi) and the analytic oracles the test
//! suite checks them against.

use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::dynamics::{rhs_velocity, PotentialSpec, State};
use crate::error::{Error, Result};
use crate::grid::{Density, Grid, InterpCoeffs, ScalarField, VelocityField};
use crate::inertia::{CoefficientSet, ModelSpec, PolyInRho};

/// The built-in model family.
#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    /// k = 0, a0 = ρ, V = 0. Pressureless transport; the induced distance on
    /// densities is the L²-Wasserstein distance.
    Burgers,
    /// k = 1, a0 = a1 = 1, V = 0. Camassa–Holm / EPDiff with the H¹ metric.
    EpdiffH1,
    /// k = 0, a0 = ρ, V = ½∫ρ². Classical shallow water.
    ShallowWater,
    /// k = 0, a0 = ρ, V = ∫ e(ρ) ρ. Barotropic compressible Euler.
    CompressibleEuler(PolyInRho),
    /// k = 1, a0 = ρ, a1 = ρ³/3, V = ½∫ρ². Serre–Green–Naghdi.
    Sgn,
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Burgers => "burgers",
            Preset::EpdiffH1 => "epdiff_h1",
            Preset::ShallowWater => "shallow_water",
            Preset::CompressibleEuler(_) => "compressible_euler",
            Preset::Sgn => "sgn",
        }
    }

    /// All stable preset names accepted by the CLI config.
    pub fn names() -> &'static [&'static str] {
        &["burgers", "epdiff_h1", "shallow_water", "compressible_euler", "sgn"]
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "burgers" => Ok(Preset::Burgers),
            "epdiff_h1" => Ok(Preset::EpdiffH1),
            "shallow_water" => Ok(Preset::ShallowWater),
            // default internal energy e(ρ) = ρ/2 recovers shallow water
            "compressible_euler" => {
                Ok(Preset::CompressibleEuler(PolyInRho::monomial(0.5, 1).expect("valid monomial")))
            }
            "sgn" => Ok(Preset::Sgn),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }
}

/// Build the [`ModelSpec`] for a preset.
pub fn make_preset(preset: Preset) -> ModelSpec {
    let rho = || PolyInRho::monomial(1.0, 1).expect("valid monomial");
    let one = || PolyInRho::constant(1.0).expect("valid constant");
    match preset {
        Preset::Burgers => ModelSpec::new(
            CoefficientSet::new(vec![rho()]).expect("a0 = rho is definite"),
            PotentialSpec::Zero,
            "burgers",
        ),
        Preset::EpdiffH1 => ModelSpec::new(
            CoefficientSet::new(vec![one(), one()]).expect("constants are definite"),
            PotentialSpec::Zero,
            "epdiff_h1",
        ),
        Preset::ShallowWater => ModelSpec::new(
            CoefficientSet::new(vec![rho()]).expect("a0 = rho is definite"),
            PotentialSpec::Quadratic(1.0),
            "shallow_water",
        ),
        Preset::CompressibleEuler(e) => ModelSpec::new(
            CoefficientSet::new(vec![rho()]).expect("a0 = rho is definite"),
            PotentialSpec::InternalEnergy(e),
            "compressible_euler",
        ),
        Preset::Sgn => ModelSpec::new(
            CoefficientSet::new(vec![rho(), PolyInRho::monomial(1.0 / 3.0, 3).expect("valid monomial")])
                .expect("a0 = rho, a1 = rho^3/3 is definite"),
            PotentialSpec::Quadratic(1.0),
            "sgn",
        ),
    }
}

/// Exact pre-breaking solution of u_t + u u_x = 0 by the method of
/// characteristics: for each node y solve y = ξ + t u₀(ξ) by Newton
/// iteration and return u(y) = u₀(ξ).
pub fn burgers_characteristics(u0: &VelocityField, t: f64, grid: &Arc<Grid>) -> Result<VelocityField> {
    u0.same_grid(&ScalarField::zeros(grid.clone()))?;
    let du0 = u0.deriv(1);
    let steepest = du0.values().iter().fold(0.0_f64, |m, &v| m.max(-v));
    if steepest > 0.0 && t >= 1.0 / steepest {
        return Err(Error::PostBreakingTime);
    }
    let u0_interp = InterpCoeffs::new(u0);
    let length = grid.length();
    let mut values = Vec::with_capacity(grid.n());
    for &y in grid.nodes() {
        let mut xi = y;
        let mut converged = false;
        for _ in 0..200 {
            let mut residual = (xi + t * u0_interp.eval(xi) - y) % length;
            if residual > 0.5 * length {
                residual -= length;
            } else if residual < -0.5 * length {
                residual += length;
            }
            let slope = 1.0 + t * u0_interp.eval_deriv(xi);
            let step = residual / slope;
            xi -= step;
            if step.abs() < 1e-13 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NewtonNonConvergence);
        }
        values.push(u0_interp.eval(xi));
    }
    ScalarField::new(grid.clone(), values)
}

/// Finite-difference Jacobian of the (ρ, u) dynamics about the rest state
/// (ρ̄, 0), as a dense 2n×2n matrix ordered (ρ-block, u-block).
///
/// Central differences with step 1e-6 on each unit nodal perturbation; the
/// eigenvalues give the discrete dispersion relation.
pub fn linearized_matrix(model: &ModelSpec, rho_bar: f64, grid: &Arc<Grid>) -> Result<DMatrix<f64>> {
    let n = grid.n();
    let eps = 1e-6;
    let mut jac = DMatrix::zeros(2 * n, 2 * n);
    let rhs_at = |rho_vals: Vec<f64>, u_vals: Vec<f64>| -> Result<(Vec<f64>, Vec<f64>)> {
        let rho = Density::new(ScalarField::new(grid.clone(), rho_vals)?)?;
        let u = ScalarField::new(grid.clone(), u_vals)?;
        let state = State::new(0.0, rho, u)?;
        let (rho_dot, u_dot) = rhs_velocity(model, &state)?;
        Ok((rho_dot.into_values(), u_dot.into_values()))
    };
    for col in 0..2 * n {
        let mut rho_p = vec![rho_bar; n];
        let mut u_p = vec![0.0; n];
        let mut rho_m = vec![rho_bar; n];
        let mut u_m = vec![0.0; n];
        if col < n {
            rho_p[col] += eps;
            rho_m[col] -= eps;
        } else {
            u_p[col - n] += eps;
            u_m[col - n] -= eps;
        }
        let (rp, up) = rhs_at(rho_p, u_p)?;
        let (rm, um) = rhs_at(rho_m, u_m)?;
        for i in 0..n {
            jac[(i, col)] = (rp[i] - rm[i]) / (2.0 * eps);
            jac[(n + i, col)] = (up[i] - um[i]) / (2.0 * eps);
        }
    }
    Ok(jac)
}

/// Imaginary parts of the Jacobian spectrum, sorted ascending.
pub fn dispersion_frequencies(jac: &DMatrix<f64>) -> Vec<f64> {
    let mut freqs: Vec<f64> = jac.complex_eigenvalues().iter().map(|c: &Complex<f64>| c.im).collect();
    freqs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    freqs
}
