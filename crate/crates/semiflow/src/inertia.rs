//! The density-dependent inertia operator
//!
//!   A(ρ) u = Σ_{i=0}^{k} (-1)^i ∂^i ( a_i(ρ) ∂^i u )
//!
//! together with its ρ-derivative, the scalar adjoint of that derivative,
//! dense assembly and inversion. The coefficients a_i are polynomials in ρ
//! with nonnegative coefficients, so positivity for ρ > 0 and exact
//! derivatives come for free.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex;

use crate::dynamics::PotentialSpec;
use crate::error::{Error, Result};
use crate::grid::{Density, Grid, MomentumField, ScalarField, VelocityField};

/// Polynomial in ρ with nonnegative coefficients: Σ_j c_j ρ^{p_j}.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyInRho {
    terms: Vec<(f64, u32)>,
}

impl PolyInRho {
    pub fn new(terms: Vec<(f64, u32)>) -> Result<Self> {
        if terms.iter().any(|&(c, _)| !(c >= 0.0) || !c.is_finite()) {
            return Err(Error::NegativePolyCoefficient);
        }
        Ok(PolyInRho { terms })
    }

    pub fn zero() -> Self {
        PolyInRho { terms: Vec::new() }
    }

    pub fn constant(c: f64) -> Result<Self> {
        PolyInRho::new(vec![(c, 0)])
    }

    /// The monomial c ρ^p.
    pub fn monomial(c: f64, p: u32) -> Result<Self> {
        PolyInRho::new(vec![(c, p)])
    }

    pub fn terms(&self) -> &[(f64, u32)] {
        &self.terms
    }

    pub fn eval(&self, rho: f64) -> f64 {
        self.terms.iter().map(|&(c, p)| c * rho.powi(p as i32)).sum()
    }

    /// Term-wise power rule.
    pub fn eval_deriv(&self, rho: f64) -> f64 {
        self.terms
            .iter()
            .filter(|&&(_, p)| p > 0)
            .map(|&(c, p)| c * p as f64 * rho.powi(p as i32 - 1))
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|&(c, _)| c == 0.0)
    }

    /// True when the polynomial is c ρ^0 (possibly zero).
    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|&(c, p)| c == 0.0 || p == 0)
    }

    pub fn constant_value(&self) -> f64 {
        self.terms.iter().filter(|&&(_, p)| p == 0).map(|&(c, _)| c).sum()
    }

    fn eval_field(&self, rho: &ScalarField) -> ScalarField {
        rho.map(|r| self.eval(r))
    }

    fn eval_deriv_field(&self, rho: &ScalarField) -> ScalarField {
        rho.map(|r| self.eval_deriv(r))
    }
}

/// The coefficient family {a_i(ρ)}, i = 0..=k.
///
/// Construction checks definiteness: a_0 and a_k must each contain a nonzero
/// term, which makes them strictly positive for every ρ > 0.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    coeffs: Vec<PolyInRho>,
}

impl CoefficientSet {
    pub fn new(coeffs: Vec<PolyInRho>) -> Result<Self> {
        assert!(!coeffs.is_empty(), "need at least a_0");
        if coeffs[0].is_zero() {
            return Err(Error::ZeroLowestCoefficient);
        }
        let k = coeffs.len() - 1;
        if coeffs[k].is_zero() {
            return Err(Error::ZeroLeadingCoefficient(k));
        }
        Ok(CoefficientSet { coeffs })
    }

    /// Differential order k of the operator A is 2k.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, i: usize) -> &PolyInRho {
        &self.coeffs[i]
    }

    pub fn coeffs(&self) -> &[PolyInRho] {
        &self.coeffs
    }

    /// True when every a_i is a constant (the fully right-invariant case).
    pub fn all_constant(&self) -> bool {
        self.coeffs.iter().all(|p| p.is_constant())
    }
}

/// A full model: inertia coefficients plus potential.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub coefficients: CoefficientSet,
    pub potential: PotentialSpec,
    pub label: String,
}

impl ModelSpec {
    pub fn new(coefficients: CoefficientSet, potential: PotentialSpec, label: impl Into<String>) -> Self {
        ModelSpec { coefficients, potential, label: label.into() }
    }

    pub fn order(&self) -> usize {
        self.coefficients.order()
    }
}

/// m = A(ρ) u = Σ_i (-1)^i ∂^i ( a_i(ρ) ∂^i u ).
pub fn apply_a(model: &ModelSpec, rho: &Density, u: &VelocityField) -> Result<MomentumField> {
    rho.same_grid(u)?;
    let mut out = ScalarField::zeros(u.grid().clone());
    for (i, a) in model.coefficients.coeffs().iter().enumerate() {
        let i = i as u32;
        let inner = a.eval_field(rho).mul(&u.deriv(i));
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        out = out.add_scaled(&inner.deriv(i), sign);
    }
    Ok(out)
}

/// Directional derivative of A in ρ: A'(ρ)(u, σ) = Σ_i (-1)^i ∂^i ( a_i'(ρ) σ ∂^i u ).
pub fn apply_a_prime(
    model: &ModelSpec,
    rho: &Density,
    u: &VelocityField,
    sigma: &ScalarField,
) -> Result<MomentumField> {
    rho.same_grid(u)?;
    rho.same_grid(sigma)?;
    let mut out = ScalarField::zeros(u.grid().clone());
    for (i, a) in model.coefficients.coeffs().iter().enumerate() {
        if a.is_constant() {
            continue;
        }
        let i = i as u32;
        let inner = a.eval_deriv_field(rho).mul(sigma).mul(&u.deriv(i));
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        out = out.add_scaled(&inner.deriv(i), sign);
    }
    Ok(out)
}

/// Scalar adjoint of the ρ-derivative: A'(ρ)*(u, v) = Σ_i a_i'(ρ) (∂^i u)(∂^i v).
///
/// Satisfies ∫ A'(ρ)*(u,v) σ dx = ∫ v A'(ρ)(u,σ) dx exactly at the discrete
/// level (discrete integration by parts is exact).
pub fn a_prime_star(
    model: &ModelSpec,
    rho: &Density,
    u: &VelocityField,
    v: &VelocityField,
) -> Result<ScalarField> {
    rho.same_grid(u)?;
    rho.same_grid(v)?;
    let mut out = ScalarField::zeros(u.grid().clone());
    for (i, a) in model.coefficients.coeffs().iter().enumerate() {
        if a.is_constant() {
            continue;
        }
        let i = i as u32;
        let term = a.eval_deriv_field(rho).mul(&u.deriv(i)).mul(&v.deriv(i));
        out = out.add(&term);
    }
    Ok(out)
}

/// Dense symmetric matrix of A(ρ) in the nodal basis.
///
/// Columns are apply_a on unit nodal vectors; the result is symmetrized as
/// (A + Aᵀ)/2 before any factorization.
pub fn assemble_a(model: &ModelSpec, rho: &Density) -> Result<DMatrix<f64>> {
    let grid = rho.grid().clone();
    let n = grid.n();
    let mut mat = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = apply_a(model, rho, &ScalarField::new(grid.clone(), e)?)?;
        for (i, &v) in col.values().iter().enumerate() {
            mat[(i, j)] = v;
        }
    }
    let sym = (&mat + mat.transpose()) * 0.5;
    Ok(sym)
}

/// Fourier symbol of the constant-coefficient operator with coefficients
/// ā_i, per FFT mode index: Σ_i ā_i κ_j^{2i}, odd-i terms dropped at Nyquist.
fn constant_symbol(grid: &Grid, mean_coeffs: &[f64]) -> Vec<f64> {
    let nyq = grid.nyquist_index();
    grid.wavenumbers()
        .iter()
        .enumerate()
        .map(|(j, &kappa)| {
            mean_coeffs
                .iter()
                .enumerate()
                .map(|(i, &a)| {
                    if j == nyq && i % 2 == 1 {
                        0.0
                    } else {
                        a * kappa.powi(2 * i as i32)
                    }
                })
                .sum()
        })
        .collect()
}

/// How [`InertiaSolver`] inverts A(ρ).
enum Plan {
    /// k = 0: A is the multiplication operator a_0(ρ).
    Diagonal(Vec<f64>),
    /// All coefficients constant: division by the Fourier symbol.
    Fourier(Vec<f64>),
    /// Preconditioned conjugate gradients, matrix-free. The preconditioner
    /// is the constant-coefficient operator with mean coefficients.
    Pcg { precond_symbol: Vec<f64> },
    /// Dense Cholesky factorization (fallback and explicit option).
    Dense(Box<Cholesky<f64, nalgebra::Dyn>>),
}

/// Solver choice for [`InertiaSolver::with_strategy`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStrategy {
    /// Diagonal / Fourier fast paths when available, PCG otherwise.
    Auto,
    /// Dense symmetric factorization of the assembled matrix.
    Dense,
    /// Matrix-free preconditioned conjugate gradients.
    Cg,
}

/// Prepared inverse of A(ρ) for a fixed (model, ρ).
pub struct InertiaSolver {
    model: ModelSpec,
    rho: Density,
    plan: Plan,
}

// Iterate essentially to roundoff: solver noise otherwise accumulates over
// thousands of steps and spoils energy-drift and equivariance measurements.
// A run is accepted as long as CG reaches the loose tolerance before stalling.
const PCG_REL_TOL: f64 = 1e-15;
const PCG_LOOSE_TOL: f64 = 1e-12;

impl InertiaSolver {
    pub fn new(model: &ModelSpec, rho: &Density) -> Result<Self> {
        InertiaSolver::with_strategy(model, rho, SolveStrategy::Auto)
    }

    pub fn with_strategy(model: &ModelSpec, rho: &Density, strategy: SolveStrategy) -> Result<Self> {
        // A(ρ) degenerates as ρ → 0.
        if rho.min() < 1e-10 * rho.mean() {
            return Err(Error::IndefiniteOperator);
        }
        let coeffs = &model.coefficients;
        let plan = match strategy {
            SolveStrategy::Dense => {
                let mat = assemble_a(model, rho)?;
                let chol = mat.cholesky().ok_or(Error::IndefiniteOperator)?;
                Plan::Dense(Box::new(chol))
            }
            SolveStrategy::Auto if coeffs.order() == 0 => {
                let a0: Vec<f64> = rho.values().iter().map(|&r| coeffs.coeff(0).eval(r)).collect();
                if a0.iter().any(|&v| v <= 0.0) {
                    return Err(Error::IndefiniteOperator);
                }
                Plan::Diagonal(a0)
            }
            SolveStrategy::Auto if coeffs.all_constant() => {
                let means: Vec<f64> =
                    coeffs.coeffs().iter().map(|p| p.constant_value()).collect();
                Plan::Fourier(constant_symbol(rho.grid(), &means))
            }
            SolveStrategy::Auto | SolveStrategy::Cg => {
                let means: Vec<f64> = coeffs
                    .coeffs()
                    .iter()
                    .map(|p| rho.map(|r| p.eval(r)).mean())
                    .collect();
                Plan::Pcg { precond_symbol: constant_symbol(rho.grid(), &means) }
            }
        };
        Ok(InertiaSolver { model: model.clone(), rho: rho.clone(), plan })
    }

    pub fn rho(&self) -> &Density {
        &self.rho
    }

    /// Solve A(ρ) u = m.
    pub fn solve(&self, m: &MomentumField) -> Result<VelocityField> {
        self.rho.same_grid(m)?;
        let grid = m.grid().clone();
        match &self.plan {
            Plan::Diagonal(a0) => {
                let values = m.values().iter().zip(a0).map(|(v, a)| v / a).collect();
                ScalarField::new(grid, values)
            }
            Plan::Fourier(symbol) => {
                let mut spectrum = grid.forward(m.values());
                for (c, &s) in spectrum.iter_mut().zip(symbol) {
                    if s > 0.0 {
                        *c /= s;
                    } else {
                        *c = Complex::new(0.0, 0.0);
                    }
                }
                ScalarField::new(grid.clone(), grid.inverse_real(spectrum))
            }
            Plan::Pcg { precond_symbol } => {
                let apply = |u: &ScalarField| apply_a(&self.model, &self.rho, u);
                let precond = |r: &ScalarField| symbol_divide(r, precond_symbol);
                match pcg(apply, precond, m, PCG_REL_TOL, 10 * grid.n()) {
                    Ok(u) => Ok(u),
                    Err(Error::IndefiniteOperator) => {
                        // CG stagnated; fall back to the dense factorization.
                        let mat = assemble_a(&self.model, &self.rho)?;
                        let chol = mat.cholesky().ok_or(Error::IndefiniteOperator)?;
                        let sol = chol.solve(&DVector::from_column_slice(m.values()));
                        ScalarField::new(grid, sol.iter().copied().collect())
                    }
                    Err(e) => Err(e),
                }
            }
            Plan::Dense(chol) => {
                let sol = chol.solve(&DVector::from_column_slice(m.values()));
                ScalarField::new(grid, sol.iter().copied().collect())
            }
        }
    }
}

fn symbol_divide(f: &ScalarField, symbol: &[f64]) -> ScalarField {
    let grid = f.grid().clone();
    let mut spectrum = grid.forward(f.values());
    for (c, &s) in spectrum.iter_mut().zip(symbol) {
        if s > 0.0 {
            *c /= s;
        } else {
            *c = Complex::new(0.0, 0.0);
        }
    }
    let values = grid.inverse_real(spectrum);
    ScalarField::new(grid, values).expect("preconditioner output is finite")
}

/// Preconditioned conjugate gradients for a symmetric positive operator.
pub(crate) fn pcg(
    apply: impl Fn(&ScalarField) -> Result<ScalarField>,
    precond: impl Fn(&ScalarField) -> ScalarField,
    b: &ScalarField,
    rel_tol: f64,
    max_iter: usize,
) -> Result<ScalarField> {
    let b_norm = b.norm_l2();
    if b_norm == 0.0 {
        return Ok(ScalarField::zeros(b.grid().clone()));
    }
    let mut x = ScalarField::zeros(b.grid().clone());
    let mut r = b.clone();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = r.inner(&z);
    let mut best = x.clone();
    let mut best_res = r.norm_l2();
    let mut stalled = 0;
    for _ in 0..max_iter {
        let ap = apply(&p)?;
        let pap = p.inner(&ap);
        if !(pap > 0.0) || !pap.is_finite() {
            break;
        }
        let alpha = rz / pap;
        x = x.add_scaled(&p, alpha);
        r = r.add_scaled(&ap, -alpha);
        let res = r.norm_l2();
        if res < best_res {
            best = x.clone();
            best_res = res;
            stalled = 0;
        } else {
            stalled += 1;
        }
        if best_res <= rel_tol * b_norm {
            return Ok(best);
        }
        if stalled >= 5 {
            // roundoff plateau; keep the best iterate if it is good enough
            break;
        }
        z = precond(&r);
        let rz_new = r.inner(&z);
        let beta = rz_new / rz;
        rz = rz_new;
        p = z.add_scaled(&p, beta);
    }
    if best_res <= PCG_LOOSE_TOL * b_norm {
        Ok(best)
    } else {
        Err(Error::IndefiniteOperator)
    }
}

/// Convenience wrapper: build a solver and solve once.
pub fn solve_a(model: &ModelSpec, rho: &Density, m: &MomentumField) -> Result<VelocityField> {
    InertiaSolver::new(model, rho)?.solve(m)
}
