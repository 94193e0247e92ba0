//! The five-dimensional linear model (δX, δP, δX_m, δP_m, ψ): drift and
//! diffusion matrices, moment propagation, Lyapunov steady states and
//! stability tests.

use crate::error::{Error, Result};
use crate::gaussian::{partial_state, GaussianState};
use crate::model::{EffectiveParams, PhysicalParams};
use crate::scalar::{max_abs, Real};
use nalgebra::{DMatrix, DVector, Matrix4, Matrix5, Schur, Vector5};
use num_complex::Complex;

/// Index of the phase-noise mode ψ.
pub const PSI: usize = 4;

/// RK4 steps per period of the fastest rate in the drift matrix.
pub const STEPS_PER_PERIOD: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CouplingSign {
    #[default]
    Plus,
    Minus,
}

impl CouplingSign {
    pub fn value<T: Real>(self) -> T {
        match self {
            CouplingSign::Plus => T::one(),
            CouplingSign::Minus => -T::one(),
        }
    }
}

/// Which physical processes are active in a protocol phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Switches {
    pub coupling_on: bool,
    pub coupling_sign: CouplingSign,
    pub phase_noise_on: bool,
    /// With the drive off α = 0, so coupling and phase-noise injection vanish
    /// regardless of the other flags.
    pub drive_on: bool,
}

impl Switches {
    pub const ALL_ON: Self = Self {
        coupling_on: true,
        coupling_sign: CouplingSign::Plus,
        phase_noise_on: true,
        drive_on: true,
    };

    pub const ALL_OFF: Self = Self {
        coupling_on: false,
        coupling_sign: CouplingSign::Plus,
        phase_noise_on: false,
        drive_on: false,
    };

    pub fn write() -> Self {
        Self::ALL_ON
    }

    pub fn store() -> Self {
        Self::ALL_OFF
    }

    pub fn read() -> Self {
        Self {
            coupling_sign: CouplingSign::Minus,
            ..Self::ALL_ON
        }
    }

    fn coupling_active(&self) -> bool {
        self.coupling_on && self.drive_on
    }

    fn phase_noise_active(&self) -> bool {
        self.phase_noise_on && self.drive_on
    }
}

/// Drift matrix in the squeezing frame.
///
/// ```text
/// [ −κ    Δ_e   0      0     0            ]
/// [ −Δ_e  −κ    ±2G    0     −√2|α|e^{−r} ]
/// [ 0     0     −γ_m   Δ_m   0            ]
/// [ ±2G   0     −Δ_m   −γ_m  0            ]
/// [ 0     0     0      0     −γ_c         ]
/// ```
pub fn build_drift<T: Real>(
    eff: &EffectiveParams<T>,
    kappa: T,
    gamma_m: T,
    gamma_c: T,
    switches: Switches,
) -> Matrix5<T> {
    let mut a = Matrix5::zeros();
    a[(0, 0)] = -kappa;
    a[(0, 1)] = eff.delta_e;
    a[(1, 0)] = -eff.delta_e;
    a[(1, 1)] = -kappa;
    a[(2, 2)] = -gamma_m;
    a[(2, 3)] = eff.delta_m;
    a[(3, 2)] = -eff.delta_m;
    a[(3, 3)] = -gamma_m;
    if switches.coupling_active() {
        let c = T::lit(2.0) * eff.coupling * switches.coupling_sign.value::<T>();
        a[(1, 2)] = c;
        a[(3, 0)] = c;
    }
    if switches.phase_noise_active() {
        a[(1, PSI)] = -eff.phase_noise_coupling();
    }
    a[(PSI, PSI)] = -gamma_c;
    a
}

/// diag(κ, κ, γ_m λ(2n_th+1), (γ_m/λ)(2n_th+1), 2γ_c²Γ_L), assuming the
/// squeezed bath matches the optical squeezing.
pub fn build_noise<T: Real>(
    eff: &EffectiveParams<T>,
    kappa: T,
    gamma_m: T,
    gamma_c: T,
    gamma_l: T,
    n_th: T,
) -> Matrix5<T> {
    let two = T::lit(2.0);
    let thermal = two * n_th + T::one();
    Matrix5::from_diagonal(&Vector5::new(
        kappa,
        kappa,
        gamma_m * eff.lambda * thermal,
        gamma_m / eff.lambda * thermal,
        two * gamma_c * gamma_c * gamma_l,
    ))
}

/// δ-correlation coefficients of the squeezing-frame input noise
/// (X̂^in, Ŷ^in) for a squeezed bath (r_e, Φ_e) seen through squeezing r.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathCorrelations<T> {
    pub xx: Complex<T>,
    pub yy: Complex<T>,
    pub xy: Complex<T>,
    pub yx: Complex<T>,
}

pub fn squeezed_bath_correlations<T: Real>(r: T, r_e: T, phi_e: T, theta: T) -> BathCorrelations<T> {
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let phi = phi_e - two * theta;
    let s2 = r_e.sinh() * r_e.sinh();
    let c2 = r_e.cosh() * r_e.cosh();
    let sh = (two * r_e).sinh();
    let re = |x: T| Complex::new(x, T::zero());
    // 1/(2i) (a + ib) = (b − ia)/2
    let over_2i = |a: T, b: T| Complex::new(b * half, -a * half);
    BathCorrelations {
        xx: re((two * r).exp() * half * (s2 + c2 + sh * phi.cos())),
        yy: re((-two * r).exp() * half * (s2 + c2 - sh * phi.cos())),
        xy: over_2i(s2 - c2, -sh * phi.sin()),
        yx: over_2i(c2 - s2, -sh * phi.sin()),
    }
}

/// Drift and diffusion of one protocol phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearModel<T: Real> {
    pub a: Matrix5<T>,
    pub n: Matrix5<T>,
    pub switches: Switches,
}

impl<T: Real> LinearModel<T> {
    pub fn new(eff: &EffectiveParams<T>, p: &PhysicalParams<T>, switches: Switches) -> Self {
        Self {
            a: build_drift(eff, p.kappa, p.gamma_m, p.gamma_c, switches),
            n: build_noise(eff, p.kappa, p.gamma_m, p.gamma_c, p.gamma_l, p.n_th),
            switches,
        }
    }

    /// Fixed RK4 step: one period of the fastest rate over [`STEPS_PER_PERIOD`].
    /// The fastest rate is max(Δ_e, Δ_m, 2G, κ, γ_c); `None` when all vanish.
    pub fn recommended_step(&self) -> Option<T> {
        let a = &self.a;
        let fast = [a[(0, 1)], a[(2, 3)], a[(1, 2)], a[(0, 0)], a[(PSI, PSI)]]
            .iter()
            .fold(T::zero(), |m, x| m.max(x.abs()));
        (fast > T::zero()).then(|| T::two_pi() / (fast * T::usize(STEPS_PER_PERIOD)))
    }
}

/// Quadrature means and covariance at time t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentState<T: Real> {
    pub t: T,
    pub mean: Vector5<T>,
    pub cov: Matrix5<T>,
}

impl<T: Real> MomentState<T> {
    pub fn new(mean: Vector5<T>, cov: Matrix5<T>) -> Self {
        Self {
            t: T::zero(),
            mean,
            cov,
        }
    }

    /// Optical and mechanical modes as a two-mode Gaussian state; ψ is dropped.
    pub fn optomechanical(&self) -> GaussianState<T> {
        GaussianState::new_unchecked(
            DVector::from_fn(4, |i, _| self.mean[i]),
            DMatrix::from_fn(4, 4, |i, j| self.cov[(i, j)]),
        )
    }

    /// Reduced state on modes 0 (optical) and/or 1 (mechanical).
    pub fn partial(&self, modes: &[usize]) -> Result<GaussianState<T>> {
        partial_state(&self.optomechanical(), modes)
    }

    pub fn cov4(&self) -> Matrix4<T> {
        self.cov.fixed_view::<4, 4>(0, 0).into_owned()
    }

    fn is_finite(&self) -> bool {
        self.mean.iter().chain(self.cov.iter()).all(|x| x.is_finite())
    }
}

/// Advances means and covariance by `duration` with classical RK4.
///
/// The step actually used is `duration / ceil(duration / dt)`, so the
/// endpoint is hit exactly. V is re-symmetrized after every step.
pub fn evolve<T: Real>(model: &LinearModel<T>, state: &MomentState<T>, duration: T, dt: T) -> Result<MomentState<T>> {
    if !(dt > T::zero()) || !(duration >= T::zero()) {
        return Err(Error::Precondition(format!(
            "need dt > 0 and duration >= 0, got dt = {dt}, duration = {duration}"
        )));
    }
    let steps = (duration / dt).ceil().to_usize().unwrap_or(0);
    if steps == 0 {
        return Ok(*state);
    }
    let h = duration / T::usize(steps);
    let half = h / T::lit(2.0);
    let sixth = h / T::lit(6.0);
    let two = T::lit(2.0);
    let a = model.a;
    let at = a.transpose();
    let n = model.n;
    let f = |v: &Matrix5<T>| a * v + v * at + n;

    let mut s = *state;
    for k in 0..steps {
        let m = s.mean;
        let l1 = a * m;
        let l2 = a * (m + l1 * half);
        let l3 = a * (m + l2 * half);
        let l4 = a * (m + l3 * h);
        s.mean = m + (l1 + (l2 + l3) * two + l4) * sixth;

        let v = s.cov;
        let k1 = f(&v);
        let k2 = f(&(v + k1 * half));
        let k3 = f(&(v + k2 * half));
        let k4 = f(&(v + k3 * h));
        let v = v + (k1 + (k2 + k3) * two + k4) * sixth;
        s.cov = (v + v.transpose()) * T::lit(0.5);
        s.t = state.t + h * T::usize(k + 1);
        if !s.is_finite() {
            return Err(Error::Divergence { time: s.t.f64() });
        }
    }
    Ok(s)
}

/// Eigenvalue stability of a drift matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stability<T> {
    pub stable: bool,
    /// −max Re λ.
    pub margin: T,
}

/// Stable iff max Re λ(A) < −1e-9 ‖A‖_max.
pub fn is_stable<T: Real>(a: &DMatrix<T>) -> Result<Stability<T>> {
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("drift matrix has non-finite entries".into()));
    }
    let schur = Schur::try_new(a.clone(), T::default_epsilon(), 10_000)
        .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?;
    let max_re = schur
        .complex_eigenvalues()
        .iter()
        .fold(-T::max_value().unwrap_or(T::lit(f64::MAX)), |m, z| m.max(z.re));
    Ok(Stability {
        stable: max_re < -T::lit(1e-9) * max_abs(a),
        margin: -max_re,
    })
}

pub fn is_stable5<T: Real>(a: &Matrix5<T>) -> Result<Stability<T>> {
    is_stable(&DMatrix::from_fn(5, 5, |i, j| a[(i, j)]))
}

/// Solves A V + V Aᵀ = −N for arbitrary dimension through the Kronecker form
/// (I⊗A + A⊗I) vec V = −vec N, with diagonal balancing and one step of
/// iterative refinement.
pub fn solve_lyapunov<T: Real>(a: &DMatrix<T>, n: &DMatrix<T>) -> Result<DMatrix<T>> {
    let k = a.nrows();
    if !a.is_square() || n.shape() != a.shape() {
        return Err(Error::Domain(
            "Lyapunov solve needs square A and N of equal size".into(),
        ));
    }
    // balance so every diagonal variance is O(1)
    let d = DVector::from_fn(k, |i, _| {
        let decay = a[(i, i)].abs();
        let var = if decay > T::zero() {
            n[(i, i)].abs() / (T::lit(2.0) * decay)
        } else {
            T::zero()
        };
        if var > T::zero() && var.is_finite() {
            var.sqrt()
        } else {
            T::one()
        }
    });
    let ab = DMatrix::from_fn(k, k, |i, j| a[(i, j)] * d[j] / d[i]);
    let nb = DMatrix::from_fn(k, k, |i, j| n[(i, j)] / (d[i] * d[j]));

    let mut kron = DMatrix::zeros(k * k, k * k);
    for j in 0..k {
        for i in 0..k {
            let row = i + k * j;
            for l in 0..k {
                kron[(row, l + k * j)] += ab[(i, l)];
                kron[(row, i + k * l)] += ab[(j, l)];
            }
        }
    }
    let lu = kron.lu();
    let solve = |rhs: &DMatrix<T>| -> Result<DMatrix<T>> {
        let b = DVector::from_iterator(k * k, rhs.iter().map(|x| -*x));
        let x = lu
            .solve(&b)
            .ok_or_else(|| Error::Numerical("singular Lyapunov system".into()))?;
        Ok(DMatrix::from_column_slice(k, k, x.as_slice()))
    };
    let mut vb = solve(&nb)?;
    let resid = &ab * &vb + &vb * ab.transpose() + &nb;
    vb += solve(&resid)?;
    let vb = (&vb + vb.transpose()) * T::lit(0.5);
    Ok(DMatrix::from_fn(k, k, |i, j| vb[(i, j)] * d[i] * d[j]))
}

/// ‖A V + V Aᵀ + N‖_max / ‖N‖_max (absolute when N = 0).
pub fn lyapunov_residual<T: Real>(a: &DMatrix<T>, v: &DMatrix<T>, n: &DMatrix<T>) -> T {
    let r = max_abs(&(a * v + v * a.transpose() + n));
    let s = max_abs(n);
    if s > T::zero() {
        r / s
    } else {
        r
    }
}

/// Stationary covariance of a stable model.
///
/// When γ_c = 0 the ψ mode carries no noise and has no decay; its variance is
/// zero and the solve runs on the optomechanical 4×4 block.
pub fn steady_covariance<T: Real>(model: &LinearModel<T>) -> Result<Matrix5<T>> {
    let frozen_psi = model.a[(PSI, PSI)] == T::zero() && model.n[(PSI, PSI)] == T::zero();
    let k = if frozen_psi { 4 } else { 5 };
    let a = DMatrix::from_fn(k, k, |i, j| model.a[(i, j)]);
    let n = DMatrix::from_fn(k, k, |i, j| model.n[(i, j)]);
    let st = is_stable(&a)?;
    if !st.stable {
        return Err(Error::Unstable {
            margin: st.margin.f64(),
            cond_a: None,
            cond_b: None,
        });
    }
    let v = solve_lyapunov(&a, &n)?;
    let res = lyapunov_residual(&a, &v, &n);
    if res > T::tol(1e-10, 1e4) {
        return Err(Error::Numerical(format!("Lyapunov residual {res} above tolerance")));
    }
    Ok(Matrix5::from_fn(
        |i, j| if i < k && j < k { v[(i, j)] } else { T::zero() },
    ))
}

/// Routh-Hurwitz conditions for the optomechanical 4×4 block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouthHurwitz<T> {
    pub cond_a: bool,
    pub cond_b: bool,
    /// ½ ln(S / (4 g² Δ_e Δ_m)) with S = γ_m²Δ_e² + κ²γ_m² + κ²Δ_m² + Δ_e²Δ_m².
    pub r_max: T,
    /// Largest G allowed by the first condition, √(S / (4 Δ_e Δ_m)).
    pub g_max: T,
}

pub fn routh_hurwitz<T: Real>(eff: &EffectiveParams<T>, kappa: T, gamma_m: T) -> Result<RouthHurwitz<T>> {
    let (de, dm, g) = (eff.delta_e, eff.delta_m, eff.coupling);
    if !(de > T::zero()) || !(dm > T::zero()) {
        return Err(Error::Precondition(format!(
            "need Delta_e, Delta_m > 0, got {de}, {dm}"
        )));
    }
    let four = T::lit(4.0);
    let sq = |x: T| x * x;
    let gm = gamma_m;
    let cond_a =
        sq(gm) * sq(de) + sq(kappa) * sq(gm) + sq(kappa) * sq(dm) + (de * dm - four * sq(g)) * de * dm > T::zero();
    let kg = kappa + gm;
    let cond_b = four * kappa * gm * ((sq(de - dm) + sq(kg)) * (sq(de + dm) + sq(kg)))
        + T::lit(16.0) * sq(g) * de * sq(kg) * dm
        > T::zero();
    let s = sq(gm) * sq(de) + sq(kappa) * sq(gm) + sq(kappa) * sq(dm) + sq(de) * sq(dm);
    let r_max = (s / (four * sq(eff.g) * de * dm)).ln() / T::lit(2.0);
    let g_max = (s / (four * de * dm)).sqrt();
    Ok(RouthHurwitz {
        cond_a,
        cond_b,
        r_max,
        g_max,
    })
}
