//! Periodic 1-D grid with spectral differentiation, quadrature and
//! trigonometric interpolation.
//!
//! All fields live on uniform nodes x_j = j L / n of the circle of
//! circumference L. Derivatives are computed in Fourier space, which makes
//! the discrete first derivative exactly skew-adjoint with respect to the
//! trapezoid quadrature (odd orders zero the Nyquist mode to keep this
//! property on real grids).

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Discretization of the circle of length `length` with `n` uniform nodes.
pub struct Grid {
    n: usize,
    length: f64,
    nodes: Vec<f64>,
    /// Signed wavenumber κ_j = 2π k_j / L in FFT storage order,
    /// k_j = j for j <= n/2 and j - n otherwise.
    wavenumbers: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Arc<Self>> {
        if n % 2 != 0 {
            return Err(Error::OddGridSize);
        }
        if n < 4 {
            return Err(Error::GridTooSmall);
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::NonPositiveLength);
        }
        let dx = length / n as f64;
        let nodes = (0..n).map(|j| j as f64 * dx).collect();
        let base = 2.0 * PI / length;
        let wavenumbers = (0..n)
            .map(|j| {
                let k = if j <= n / 2 { j as isize } else { j as isize - n as isize };
                base * k as f64
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        Ok(Arc::new(Grid { n, length, nodes, wavenumbers, fft, ifft }))
    }

    /// Default grid: n = 256 points on [0, 2π).
    pub fn default_grid() -> Arc<Self> {
        Grid::new(256, 2.0 * PI).expect("default grid parameters are valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Index of the Nyquist mode in FFT storage order.
    pub fn nyquist_index(&self) -> usize {
        self.n / 2
    }

    /// Wrap a coordinate into [0, L).
    pub fn wrap(&self, x: f64) -> f64 {
        let y = x % self.length;
        if y < 0.0 {
            y + self.length
        } else {
            y
        }
    }

    pub(crate) fn forward(&self, values: &[f64]) -> Vec<Complex<f64>> {
        let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.fft.process(&mut buf);
        buf
    }

    pub(crate) fn inverse_real(&self, mut spectrum: Vec<Complex<f64>>) -> Vec<f64> {
        self.ifft.process(&mut spectrum);
        let scale = 1.0 / self.n as f64;
        spectrum.iter().map(|c| c.re * scale).collect()
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.length == other.length
    }
}

/// Nodal values of a scalar quantity on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

/// In one dimension vector fields have a single scalar component.
pub type VelocityField = ScalarField;
pub type MomentumField = ScalarField;

impl ScalarField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::SizeMismatch { expected: grid.n(), found: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = vec![0.0; grid.n()];
        ScalarField { grid, values }
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Self {
        let values = vec![c; grid.n()];
        ScalarField { grid, values }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_grid(&self, other: &ScalarField) -> Result<()> {
        if **self.grid() == **other.grid() {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Spectral derivative of the given order; order 0 is the identity.
    ///
    /// Mode κ is multiplied by (iκ)^order. For odd orders the Nyquist mode
    /// is zeroed so the operator stays skew-adjoint on real grids.
    pub fn deriv(&self, order: u32) -> ScalarField {
        if order == 0 {
            return self.clone();
        }
        let mut spectrum = self.grid.forward(&self.values);
        let nyq = self.grid.nyquist_index();
        for (j, c) in spectrum.iter_mut().enumerate() {
            let kappa = self.grid.wavenumbers[j];
            if j == nyq && order % 2 == 1 {
                *c = Complex::new(0.0, 0.0);
            } else {
                *c *= Complex::new(0.0, kappa).powu(order);
            }
        }
        let values = self.grid.inverse_real(spectrum);
        ScalarField { grid: self.grid.clone(), values }
    }

    /// Zero all modes with index above n/3 (2/3-rule dealiasing filter).
    ///
    /// Applied to nonlinear tendencies it removes the quadratic aliasing
    /// feedback at grid scale, which otherwise amplifies roundoff at rate
    /// ≈ max|u|·κ_max and destroys long-time conservation.
    pub fn dealias(&self) -> ScalarField {
        let n = self.grid.n;
        let cutoff = n / 3;
        let mut spectrum = self.grid.forward(&self.values);
        for (j, c) in spectrum.iter_mut().enumerate() {
            let mode = j.min(n - j);
            if mode > cutoff {
                *c = Complex::new(0.0, 0.0);
            }
        }
        let values = self.grid.inverse_real(spectrum);
        ScalarField { grid: self.grid.clone(), values }
    }

    /// Quadrature ∫ f dx = (L/n) Σ f_j; spectrally exact below Nyquist.
    pub fn integrate(&self) -> f64 {
        let sum: f64 = self.values.iter().sum();
        sum * self.grid.spacing()
    }

    pub fn mean(&self) -> f64 {
        self.integrate() / self.grid.length()
    }

    /// L² inner product ∫ f g dx.
    pub fn inner(&self, other: &ScalarField) -> f64 {
        let sum: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum();
        sum * self.grid.spacing()
    }

    pub fn norm_l2(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    /// Trigonometric interpolation: evaluate the truncated Fourier series at
    /// arbitrary points (wrapped periodically). The Nyquist mode is treated
    /// as a pure cosine.
    pub fn interp(&self, xs: &[f64]) -> Vec<f64> {
        let coeffs = InterpCoeffs::new(self);
        xs.iter().map(|&x| coeffs.eval(x)).collect()
    }

    pub fn interp_at(&self, x: f64) -> f64 {
        InterpCoeffs::new(self).eval(x)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &ScalarField) -> ScalarField {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        ScalarField { grid: self.grid.clone(), values }
    }

    pub fn add(&self, other: &ScalarField) -> ScalarField {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        ScalarField { grid: self.grid.clone(), values }
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        ScalarField { grid: self.grid.clone(), values }
    }

    pub fn scale(&self, a: f64) -> ScalarField {
        let values = self.values.iter().map(|v| a * v).collect();
        ScalarField { grid: self.grid.clone(), values }
    }

    pub fn add_scaled(&self, other: &ScalarField, a: f64) -> ScalarField {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x + a * y)
            .collect();
        ScalarField { grid: self.grid.clone(), values }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        let values = self.values.iter().map(|&v| f(v)).collect();
        ScalarField { grid: self.grid.clone(), values }
    }

    /// Circular shift by `s` lattice sites: result_j = self_{j-s mod n}.
    pub fn lattice_shift(&self, s: usize) -> ScalarField {
        let n = self.values.len();
        let values = (0..n).map(|j| self.values[(j + n - s % n) % n]).collect();
        ScalarField { grid: self.grid.clone(), values }
    }
}

/// Precomputed Fourier coefficients for repeated point evaluation.
pub struct InterpCoeffs {
    length: f64,
    /// coefficients for modes k = 0 .. n/2 (one-sided), already scaled by 1/n
    coeffs: Vec<Complex<f64>>,
}

impl InterpCoeffs {
    pub fn new(f: &ScalarField) -> Self {
        let grid = f.grid();
        let n = grid.n();
        let spectrum = grid.forward(f.values());
        let scale = 1.0 / n as f64;
        let coeffs = (0..=n / 2).map(|k| spectrum[k] * scale).collect();
        InterpCoeffs { length: grid.length(), coeffs }
    }

    /// Evaluate the series at x. Modes 0 < k < n/2 enter with their conjugate
    /// partner, the Nyquist mode as c cos(κ_N x).
    pub fn eval(&self, x: f64) -> f64 {
        let base = 2.0 * PI / self.length;
        let half = self.coeffs.len() - 1;
        let mut out = self.coeffs[0].re;
        for k in 1..half {
            let angle = base * k as f64 * x;
            let e = Complex::new(angle.cos(), angle.sin());
            out += 2.0 * (self.coeffs[k] * e).re;
        }
        let angle = base * half as f64 * x;
        out += self.coeffs[half].re * angle.cos();
        out
    }

    /// Evaluate the derivative of the series at x (Nyquist dropped).
    pub fn eval_deriv(&self, x: f64) -> f64 {
        let base = 2.0 * PI / self.length;
        let half = self.coeffs.len() - 1;
        let mut out = 0.0;
        for k in 1..half {
            let kappa = base * k as f64;
            let angle = kappa * x;
            let e = Complex::new(angle.cos(), angle.sin());
            out += 2.0 * (self.coeffs[k] * Complex::new(0.0, kappa) * e).re;
        }
        out
    }
}

/// Strictly positive [`ScalarField`] with finite positive total mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Density(ScalarField);

impl Density {
    pub fn new(field: ScalarField) -> Result<Self> {
        if !field.is_finite() || field.min() <= 0.0 {
            return Err(Error::InvalidDensity);
        }
        let mass = field.integrate();
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::InvalidDensity);
        }
        Ok(Density(field))
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Result<Self> {
        Density::new(ScalarField::constant(grid, c))
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        Density::new(ScalarField::from_fn(grid, f))
    }

    pub fn field(&self) -> &ScalarField {
        &self.0
    }

    pub fn into_field(self) -> ScalarField {
        self.0
    }

    pub fn total_mass(&self) -> f64 {
        self.0.integrate()
    }
}

impl std::ops::Deref for Density {
    type Target = ScalarField;

    fn deref(&self) -> &ScalarField {
        &self.0
    }
}
