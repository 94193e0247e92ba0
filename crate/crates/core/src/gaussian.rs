//! Gaussian continuous-variable states: symplectic spectra, logarithmic
//! negativity and the pure-versus-mixed single-mode fidelity.
//!
//! Quadratures are ordered (X₁, P₁, X₂, P₂, …) and the vacuum has variance ½
//! per quadrature.

use crate::error::{Error, Result};
use crate::scalar::{max_abs, Real};
use nalgebra::{DMatrix, DVector, Matrix2, Matrix4, Vector2};
use num_complex::Complex;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState<T: Real> {
    pub mean: DVector<T>,
    pub cov: DMatrix<T>,
}

fn symmetric_tol<T: Real>(m: &DMatrix<T>) -> T {
    T::tol(1e-12, 64.0) * max_abs(m).max(T::one())
}

fn check_symmetric<T: Real>(m: &DMatrix<T>) -> Result<()> {
    if !m.is_square() || !m.nrows().is_multiple_of(2) || m.nrows() == 0 {
        return Err(Error::Domain(format!(
            "covariance must be a non-empty 2n x 2n matrix, got {} x {}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("covariance has non-finite entries".into()));
    }
    let asym = max_abs(&(m - m.transpose()));
    if asym > symmetric_tol(m) {
        return Err(Error::Domain(format!(
            "covariance is not symmetric (max |V - V^T| = {asym})"
        )));
    }
    Ok(())
}

/// Block-diagonal symplectic form with blocks [[0, 1], [−1, 0]].
pub fn symplectic_form<T: Real>(n_modes: usize) -> DMatrix<T> {
    let mut o = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        o[(2 * k, 2 * k + 1)] = T::one();
        o[(2 * k + 1, 2 * k)] = -T::one();
    }
    o
}

/// Symplectic eigenvalues, one per mode, in descending order.
///
/// Computed as the square roots of the doubly degenerate spectrum of the
/// symmetric matrix V^{1/2} Ωᵀ V Ω V^{1/2}, which avoids a non-symmetric
/// eigensolve.
pub fn symplectic_eigenvalues<T: Real>(cov: &DMatrix<T>) -> Result<Vec<T>> {
    check_symmetric(cov)?;
    let sym = (cov + cov.transpose()) * T::lit(0.5);
    if sym.clone().cholesky().is_none() {
        return Err(Error::Domain("covariance is not positive definite".into()));
    }
    let n = sym.nrows() / 2;
    let eig = sym.clone().symmetric_eigen();
    let sqrt_d = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| x.max(T::zero()).sqrt()));
    let root = &eig.eigenvectors * sqrt_d * eig.eigenvectors.transpose();
    let o = symplectic_form::<T>(n);
    let k = &root * o.transpose() * &sym * &o * &root;
    let k = (&k + k.transpose()) * T::lit(0.5);
    let mut sq: Vec<T> = k.symmetric_eigen().eigenvalues.iter().copied().collect();
    sq.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Ok(sq
        .chunks(2)
        .map(|c| ((c[0] + c[1]) / T::lit(2.0)).max(T::zero()).sqrt())
        .collect())
}

impl<T: Real> GaussianState<T> {
    /// Validated state: symmetric covariance with symplectic eigenvalues ≥ ½ − 1e-9.
    pub fn new(mean: DVector<T>, cov: DMatrix<T>) -> Result<Self> {
        check_symmetric(&cov)?;
        if mean.len() != cov.nrows() {
            return Err(Error::Domain(format!(
                "mean has length {} but covariance is {} x {}",
                mean.len(),
                cov.nrows(),
                cov.ncols()
            )));
        }
        let state = Self { mean, cov };
        let nu = symplectic_eigenvalues(&state.cov)?;
        let floor = T::lit(0.5) - T::tol(1e-9, 1e4);
        if let Some(bad) = nu.iter().find(|&&v| v < floor) {
            return Err(Error::Domain(format!(
                "symplectic eigenvalue {bad} violates the uncertainty relation"
            )));
        }
        Ok(state)
    }

    /// Builds a state without the physicality check.
    pub fn new_unchecked(mean: DVector<T>, cov: DMatrix<T>) -> Self {
        Self { mean, cov }
    }

    pub fn n_modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn vacuum(n_modes: usize) -> Self {
        Self {
            mean: DVector::zeros(2 * n_modes),
            cov: DMatrix::identity(2 * n_modes, 2 * n_modes) * T::lit(0.5),
        }
    }

    pub fn thermal(n_bar: T) -> Self {
        Self {
            mean: DVector::zeros(2),
            cov: DMatrix::identity(2, 2) * (n_bar + T::lit(0.5)),
        }
    }

    /// Coherent state |μ⟩: mean (√2 Re μ, √2 Im μ), vacuum covariance.
    pub fn coherent(mu: Complex<T>) -> Self {
        initial_memory_state(mu, T::zero())
    }

    /// Two-mode squeezed vacuum with squeezing s.
    pub fn two_mode_squeezed(s: T) -> Self {
        let half = T::lit(0.5);
        let c = (T::lit(2.0) * s).cosh() * half;
        let sh = (T::lit(2.0) * s).sinh() * half;
        let z = T::zero();
        #[rustfmt::skip]
        let cov = DMatrix::from_row_slice(4, 4, &[
            c, z, sh, z,
            z, c, z, -sh,
            sh, z, c, z,
            z, -sh, z, c,
        ]);
        Self {
            mean: DVector::zeros(4),
            cov,
        }
    }

    /// 1 / (2ⁿ √det V).
    pub fn purity(&self) -> T {
        let det = self.cov.determinant();
        T::one() / (T::lit(2.0).powi(self.n_modes() as i32) * det.sqrt())
    }

    pub fn symplectic_eigenvalues(&self) -> Result<Vec<T>> {
        symplectic_eigenvalues(&self.cov)
    }
}

/// |μ, χ⟩ = D(μ) S(χ) |0⟩ with real χ.
pub fn initial_memory_state<T: Real>(mu: Complex<T>, chi: T) -> GaussianState<T> {
    let sqrt2 = T::lit(2.0).sqrt();
    let half = T::lit(0.5);
    let two_chi = T::lit(2.0) * chi;
    GaussianState {
        mean: DVector::from_vec(vec![sqrt2 * mu.re, sqrt2 * mu.im]),
        cov: DMatrix::from_diagonal(&DVector::from_vec(vec![(-two_chi).exp() * half, two_chi.exp() * half])),
    }
}

/// Reduced state on the given modes (0-based), in the order requested.
pub fn partial_state<T: Real>(state: &GaussianState<T>, modes: &[usize]) -> Result<GaussianState<T>> {
    let n = state.n_modes();
    for (i, &m) in modes.iter().enumerate() {
        if m >= n {
            return Err(Error::Domain(format!(
                "mode index {m} out of range for a {n}-mode state"
            )));
        }
        if modes[..i].contains(&m) {
            return Err(Error::Domain(format!("mode index {m} repeated")));
        }
    }
    let idx: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
    let k = idx.len();
    let mean = DVector::from_fn(k, |i, _| state.mean[idx[i]]);
    let cov = DMatrix::from_fn(k, k, |i, j| state.cov[(idx[i], idx[j])]);
    Ok(GaussianState { mean, cov })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogNegativity<T> {
    pub e_n: T,
    /// Smallest symplectic eigenvalue of the partially transposed state.
    pub eta_minus: T,
}

/// Logarithmic negativity (natural log) of a two-mode covariance matrix.
pub fn log_negativity<T: Real>(cov4: &Matrix4<T>) -> Result<LogNegativity<T>> {
    let a: Matrix2<T> = cov4.fixed_view::<2, 2>(0, 0).into_owned();
    let b: Matrix2<T> = cov4.fixed_view::<2, 2>(2, 2).into_owned();
    let c: Matrix2<T> = cov4.fixed_view::<2, 2>(0, 2).into_owned();
    let sigma = a.determinant() + b.determinant() - T::lit(2.0) * c.determinant();
    let det = cov4.determinant();
    let mut disc = sigma * sigma - T::lit(4.0) * det;
    if disc < T::zero() {
        if disc < -T::tol(1e-12, 64.0) * (sigma * sigma).max(T::one()) {
            return Err(Error::Domain(format!(
                "negative discriminant {disc}: invalid two-mode covariance"
            )));
        }
        disc = T::zero();
    }
    let denom = sigma + disc.sqrt();
    if !(denom > T::zero()) || !(det > T::zero()) {
        return Err(Error::Domain("two-mode covariance is not positive definite".into()));
    }
    // (Σ − √disc)/2 rewritten as 2 det V / (Σ + √disc)
    let eta_minus = (T::lit(2.0) * det / denom).sqrt();
    let e_n = (-(T::lit(2.0) * eta_minus).ln()).max(T::zero());
    Ok(LogNegativity { e_n, eta_minus })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fidelity<T> {
    pub f: T,
    pub n_bar_h: T,
    pub theta_sq: T,
}

/// Fidelity between a pure single-mode state and an arbitrary single-mode state.
///
/// With S = V_i + V_f and d the mean difference: n̄_h = 2√det(S/2) − 1,
/// Θ² = √det(S/2) · dᵀ S⁻¹ d, and F = exp(−Θ²/(1 + n̄_h)) / (1 + n̄_h).
pub fn gaussian_fidelity<T: Real>(initial: &GaussianState<T>, fin: &GaussianState<T>) -> Result<Fidelity<T>> {
    if initial.n_modes() != 1 || fin.n_modes() != 1 || initial.cov.nrows() != 2 || fin.cov.nrows() != 2 {
        return Err(Error::Domain("fidelity needs two single-mode states".into()));
    }
    let vi = Matrix2::from_fn(|i, j| initial.cov[(i, j)]);
    let vf = Matrix2::from_fn(|i, j| fin.cov[(i, j)]);
    let purity_gap = (T::lit(4.0) * vi.determinant() - T::one()).abs();
    if purity_gap > T::tol(1e-6, 64.0) {
        return Err(Error::Precondition(format!(
            "initial state is not pure (4 det V - 1 = {purity_gap})"
        )));
    }
    let s = vi + vf;
    let det_s = s.determinant();
    let Some(s_inv) = s.try_inverse().filter(|_| det_s > T::zero()) else {
        return Err(Error::Domain("V_i + V_f is singular".into()));
    };
    let q = (det_s / T::lit(4.0)).sqrt();
    let d = Vector2::new(initial.mean[0] - fin.mean[0], initial.mean[1] - fin.mean[1]);
    let theta_sq = q * (d.transpose() * s_inv * d)[(0, 0)];
    let n_bar_h = T::lit(2.0) * q - T::one();
    let one_n = T::one() + n_bar_h;
    Ok(Fidelity {
        f: (-theta_sq / one_n).exp() / one_n,
        n_bar_h,
        theta_sq,
    })
}
