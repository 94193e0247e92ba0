//! Laboratory parameters, the self-consistent mean fields and the
//! squeezing-frame quantities derived from them.
//!
//! All rates are angular (rad/s). Conversion from configured Hz values happens
//! once, at the CLI boundary.

use crate::error::{Error, Result};
use crate::scalar::{cabs, carg, polar, Real};
use nalgebra::{Matrix4, Vector4};
use num_complex::Complex;

/// Reduced Planck constant (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Largest Duffing amplitude considered experimentally reachable, relative to ω_m.
pub const DUFFING_BOUND_RATIO: f64 = 1e-4;
/// Upper limit on |Ω|/Δ used by the inverted workflow.
pub const MAX_ETA_RATIO: f64 = 0.9999;

/// Non-fatal observations attached to results.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// duffing_eta / omega_m above [`DUFFING_BOUND_RATIO`].
    DuffingAboveBound { ratio: f64 },
    /// A Kerr-estimate input outside the admissible material range.
    KerrInputOutOfRange { name: &'static str, value: f64 },
    /// The homotopy in E_L jumped between branches near this drive strength.
    Multistability { drive_el: f64 },
    /// The seeded solution differs from the branch reached by homotopy from E_L = 0.
    BranchDiffersFromHomotopy { homotopy_alpha_abs: f64 },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::DuffingAboveBound { ratio } => {
                write!(f, "duffing_eta/omega_m = {ratio:e} exceeds {DUFFING_BOUND_RATIO:e}")
            }
            Warning::KerrInputOutOfRange { name, value } => {
                write!(f, "kerr input {name} = {value:e} outside the admissible range")
            }
            Warning::Multistability { drive_el } => {
                write!(f, "mean-field branch jump during homotopy near E_L = {drive_el:e} rad/s")
            }
            Warning::BranchDiffersFromHomotopy { homotopy_alpha_abs } => write!(
                f,
                "operating point is not the branch reached from E_L = 0 (that branch has |alpha| = {homotopy_alpha_abs:e})"
            ),
        }
    }
}

/// Laboratory-frame inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams<T> {
    /// Mechanical angular frequency ω_m.
    pub omega_m: T,
    /// Mechanical damping γ_m.
    pub gamma_m: T,
    /// Cavity decay κ.
    pub kappa: T,
    /// Single-photon optomechanical coupling g₀.
    pub g0: T,
    /// Bare laser-cavity detuning Δ₀.
    pub delta0: T,
    /// Kerr coefficient u.
    pub kerr_u: T,
    /// Duffing amplitude (the quartic coefficient of the mechanical potential).
    pub duffing_eta: T,
    /// Drive strength E_L.
    pub drive_el: T,
    /// Mean thermal phonon number.
    pub n_th: T,
    /// Phase-noise cut-off γ_c (plain rate, s⁻¹).
    pub gamma_c: T,
    /// Laser linewidth Γ_L (plain rate, s⁻¹).
    pub gamma_l: T,
    /// Squeezed-bath amplitude r_e.
    pub r_e: T,
    /// Squeezed-bath angle Φ_e.
    pub phi_e: T,
}

impl<T: Real> PhysicalParams<T> {
    /// Linear, undriven system: no nonlinearities, no noise, no drive.
    pub fn linear(omega_m: T, gamma_m: T, kappa: T, g0: T) -> Self {
        let z = T::zero();
        Self {
            omega_m,
            gamma_m,
            kappa,
            g0,
            delta0: z,
            kerr_u: z,
            duffing_eta: z,
            drive_el: z,
            n_th: z,
            gamma_c: z,
            gamma_l: z,
            r_e: z,
            phi_e: z,
        }
    }

    /// γ_m = ω_m / (2 Q_m).
    pub fn gamma_from_quality(omega_m: T, quality_factor: T) -> T {
        omega_m / (T::lit(2.0) * quality_factor)
    }

    /// Checks the invariants; returns the soft warnings.
    pub fn validate(&self) -> Result<Vec<Warning>> {
        let checks: [(&str, T, bool); 7] = [
            ("omega_m", self.omega_m, self.omega_m > T::zero()),
            ("kappa", self.kappa, self.kappa > T::zero()),
            ("gamma_m", self.gamma_m, self.gamma_m >= T::zero()),
            ("n_th", self.n_th, self.n_th >= T::zero()),
            ("gamma_c", self.gamma_c, self.gamma_c >= T::zero()),
            ("Gamma_L", self.gamma_l, self.gamma_l >= T::zero()),
            ("drive_el", self.drive_el, self.drive_el.is_finite()),
        ];
        for (name, value, ok) in checks {
            if !ok || !value.is_finite() {
                return Err(Error::Domain(format!("{name} = {value} is not admissible")));
            }
        }
        let mut warnings = Vec::new();
        let ratio = (self.duffing_eta.abs() / self.omega_m).f64();
        if ratio > DUFFING_BOUND_RATIO {
            warnings.push(Warning::DuffingAboveBound { ratio });
        }
        Ok(warnings)
    }
}

/// Mean fields and the squeezing-frame quantities built from them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveParams<T> {
    pub alpha: Complex<T>,
    pub beta: Complex<T>,
    /// α = |α| e^{−iθ}.
    pub theta: T,
    /// Δ = Δ₀ − 2 g₀ Re β + 4 u |α|².
    pub delta: T,
    /// |Ω| = 2 |u| |α|².
    pub omega_abs: T,
    /// Ω_m = 6 η_D (4 Re(β)² + 1).
    pub omega_mech: T,
    /// ω'_m = ω_m − Ω_m.
    pub omega_m_prime: T,
    /// |Ω| / Δ.
    pub eta_ratio: T,
    /// |Ω_m| / ω'_m.
    pub eta1_ratio: T,
    pub r: T,
    pub r_m: T,
    /// r' = r_m − r.
    pub r_prime: T,
    /// g = g₀ |α|.
    pub g: T,
    /// G = g e^{r'}.
    pub coupling: T,
    pub delta_e: T,
    pub delta_m: T,
    /// λ = e^{−2 r_m}.
    pub lambda: T,
}

impl<T: Real> EffectiveParams<T> {
    pub fn alpha_abs(&self) -> T {
        cabs(self.alpha)
    }

    /// |α| e^{−r}, the residual phase-noise lever arm.
    pub fn alpha_e_minus_r(&self) -> T {
        self.alpha_abs() * (-self.r).exp()
    }

    /// Magnitude √2 |α| e^{−r} of the drift element feeding ψ into the optical momentum.
    pub fn phase_noise_coupling(&self) -> T {
        T::lit(2.0).sqrt() * self.alpha_e_minus_r()
    }

    /// Effective parameters of the undriven system: α = β = 0 with bare detunings.
    pub fn undriven(delta: T, omega_m: T) -> Self {
        let z = T::zero();
        Self {
            alpha: Complex::new(z, z),
            beta: Complex::new(z, z),
            theta: z,
            delta,
            omega_abs: z,
            omega_mech: z,
            omega_m_prime: omega_m,
            eta_ratio: z,
            eta1_ratio: z,
            r: z,
            r_m: z,
            r_prime: z,
            g: z,
            coupling: z,
            delta_e: delta,
            delta_m: omega_m,
            lambda: T::one(),
        }
    }
}

/// r = ¼ ln((1 + η) / (1 − η)).
pub fn squeezing_parameter<T: Real>(eta: T) -> T {
    ((T::one() + eta) / (T::one() - eta)).ln() / T::lit(4.0)
}

/// ω_c = 2πc/λ for a vacuum wavelength in metres.
pub fn optical_frequency<T: Real>(wavelength_m: T) -> T {
    T::two_pi() * T::lit(SPEED_OF_LIGHT) / wavelength_m
}

/// Kerr coefficient and any range warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct KerrEstimate<T> {
    /// u in rad/s.
    pub kerr_u: T,
    pub warnings: Vec<Warning>,
}

/// u = ħ ω_c² c n₂ / (n₀² V_eff).
///
/// `n2` is in cm²/W and `v_eff` in μm³, the units materials data is quoted in;
/// both are converted to SI before evaluation.
pub fn kerr_coefficient<T: Real>(omega_c: T, n0: T, n2: T, v_eff: T) -> Result<KerrEstimate<T>> {
    for (name, v) in [("omega_c", omega_c), ("n0", n0), ("n2", n2), ("v_eff", v_eff)] {
        if !(v > T::zero()) || !v.is_finite() {
            return Err(Error::Domain(format!("{name} must be positive, got {v}")));
        }
    }
    let mut warnings = Vec::new();
    let ranges: [(&'static str, T, f64, f64); 3] = [
        ("n0", n0, 2.0, 4.0),
        ("n2", n2, 1e-17, 1e-13),
        ("v_eff", v_eff, 1e2, 1e4),
    ];
    for (name, v, lo, hi) in ranges {
        let x = v.f64();
        // relative slack so the corner values themselves never warn
        if x < lo * (1.0 - 1e-12) || x > hi * (1.0 + 1e-12) {
            warnings.push(Warning::KerrInputOutOfRange { name, value: x });
        }
    }
    let n2_si = n2 * T::lit(1e-4);
    let v_si = v_eff * T::lit(1e-18);
    // grouped to stay inside f32 range
    let kerr_u = (T::lit(HBAR) * omega_c) * omega_c * (T::lit(SPEED_OF_LIGHT) * n2_si) / (n0 * n0 * v_si);
    Ok(KerrEstimate { kerr_u, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateOptions {
    /// Number of equal E_L increments from 0 to the target.
    pub homotopy_steps: usize,
    /// Damped fixed-point sweeps tried before Newton at each step.
    pub fixed_point_iterations: usize,
    pub fixed_point_damping: f64,
    pub newton_iterations: usize,
    /// Relative residual target for both mean-field equations.
    pub tolerance: f64,
    /// Ratio between consecutive continuation increments that counts as a jump.
    pub jump_factor: f64,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self {
            homotopy_steps: 100,
            fixed_point_iterations: 30,
            fixed_point_damping: 0.5,
            newton_iterations: 100,
            tolerance: 1e-10,
            jump_factor: 20.0,
        }
    }
}

/// Solution of the mean-field equations.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanField<T> {
    pub alpha: Complex<T>,
    pub beta: Complex<T>,
    /// |cavity residual| / |E_L| (absolute when E_L = 0).
    pub residual_cavity: T,
    /// |mechanical residual| / |g₀ |α|²| (absolute when that vanishes).
    pub residual_mechanics: T,
    pub iterations: usize,
    pub warnings: Vec<Warning>,
}

/// Mean-field equations as four real residuals in the unknowns
/// (Re α, Im α, Re β, Im β).
struct MeanFieldSystem<T> {
    p: PhysicalParams<T>,
    drive: T,
}

impl<T: Real> MeanFieldSystem<T> {
    fn residual(&self, z: &Vector4<T>) -> Vector4<T> {
        let p = &self.p;
        let (ar, ai, br, bi) = (z[0], z[1], z[2], z[3]);
        let two = T::lit(2.0);
        let n = ar * ar + ai * ai;
        // Δ − 2u|α|² with Δ = Δ₀ − 2g₀ Re β + 4u|α|²
        let det = p.delta0 - two * p.g0 * br + two * p.kerr_u * n;
        let duff = T::lit(4.0) * p.duffing_eta * (T::lit(4.0) * br * br * br + T::lit(3.0) * br);
        Vector4::new(
            -p.kappa * ar + det * ai + self.drive,
            -p.kappa * ai - det * ar,
            p.omega_m * bi - p.gamma_m * br,
            -p.omega_m * br - p.gamma_m * bi + p.g0 * n + duff,
        )
    }

    fn jacobian(&self, z: &Vector4<T>) -> Matrix4<T> {
        let p = &self.p;
        let (ar, ai, br, _) = (z[0], z[1], z[2], z[3]);
        let two = T::lit(2.0);
        let four = T::lit(4.0);
        let n = ar * ar + ai * ai;
        let det = p.delta0 - two * p.g0 * br + two * p.kerr_u * n;
        let dd_ar = four * p.kerr_u * ar;
        let dd_ai = four * p.kerr_u * ai;
        let dd_br = -two * p.g0;
        let dduff = four * p.duffing_eta * (T::lit(12.0) * br * br + T::lit(3.0));
        let z0 = T::zero();
        Matrix4::new(
            -p.kappa + ai * dd_ar,
            det + ai * dd_ai,
            ai * dd_br,
            z0,
            -det - ar * dd_ar,
            -p.kappa - ar * dd_ai,
            -ar * dd_br,
            z0,
            z0,
            z0,
            -p.gamma_m,
            p.omega_m,
            two * p.g0 * ar,
            two * p.g0 * ai,
            -p.omega_m + dduff,
            -p.gamma_m,
        )
    }

    /// Residual norms scaled as the acceptance test measures them.
    fn scaled(&self, z: &Vector4<T>) -> (T, T) {
        let f = self.residual(z);
        let cav = (f[0] * f[0] + f[1] * f[1]).sqrt();
        let mech = (f[2] * f[2] + f[3] * f[3]).sqrt();
        let n = z[0] * z[0] + z[1] * z[1];
        let s_cav = self.drive.abs();
        let s_mech = self.p.g0.abs() * n;
        let rel = |r: T, s: T| if s > T::zero() { r / s } else { r };
        (rel(cav, s_cav), rel(mech, s_mech))
    }

    fn converged(&self, z: &Vector4<T>, tol: T) -> bool {
        let (a, b) = self.scaled(z);
        a <= tol && b <= tol
    }

    fn merit(&self, z: &Vector4<T>) -> T {
        let (a, b) = self.scaled(z);
        a.max(b)
    }

    /// Line-search objective with weights frozen at `reference`, so that a
    /// lagging β cannot hide progress in α.
    fn weights(&self, reference: &Vector4<T>) -> (T, T) {
        let p = &self.p;
        let linear = self.drive * self.drive / (p.kappa * p.kappa + p.delta0 * p.delta0);
        let n = (reference[0] * reference[0] + reference[1] * reference[1]).max(linear);
        let pos = |s: T| if s > T::zero() { T::one() / s } else { T::one() };
        (pos(self.drive.abs()), pos(p.g0.abs() * n))
    }

    fn objective(&self, z: &Vector4<T>, w: (T, T)) -> T {
        let f = self.residual(z);
        let c = (f[0] * f[0] + f[1] * f[1]) * w.0 * w.0;
        let m = (f[2] * f[2] + f[3] * f[3]) * w.1 * w.1;
        c + m
    }

    /// One damped fixed-point sweep: α ← E/(κ + iD), β ← i(g₀|α|² + duffing)/(iω_m + γ_m).
    fn fixed_point(&self, z: &Vector4<T>, damping: T) -> Vector4<T> {
        let p = &self.p;
        let two = T::lit(2.0);
        let n = z[0] * z[0] + z[1] * z[1];
        let det = p.delta0 - two * p.g0 * z[2] + two * p.kerr_u * n;
        let alpha = Complex::new(self.drive, T::zero()) / Complex::new(p.kappa, det);
        let br = z[2];
        let duff = T::lit(4.0) * p.duffing_eta * (T::lit(4.0) * br * br * br + T::lit(3.0) * br);
        let num = Complex::new(T::zero(), p.g0 * (alpha.norm_sqr()) + duff);
        let beta = num / Complex::new(p.gamma_m, p.omega_m);
        let next = Vector4::new(alpha.re, alpha.im, beta.re, beta.im);
        z * (T::one() - damping) + next * damping
    }

    /// Newton with backtracking.
    fn newton(&self, mut z: Vector4<T>, iterations: usize, tol: T) -> (Vector4<T>, usize, bool) {
        let w = self.weights(&z);
        let mut obj = self.objective(&z, w);
        for it in 0..iterations {
            if self.converged(&z, tol) {
                return (z, it, true);
            }
            let j = self.jacobian(&z);
            let f = self.residual(&z);
            let Some(step) = j.lu().solve(&(-f)) else {
                return (z, it, false);
            };
            let mut t = T::one();
            let mut accepted = false;
            for _ in 0..40 {
                let trial = z + step * t;
                let o = self.objective(&trial, w);
                if o.is_finite() && (o < obj || self.converged(&trial, tol)) {
                    z = trial;
                    obj = o;
                    accepted = true;
                    break;
                }
                t *= T::lit(0.5);
            }
            if !accepted {
                return (z, it, self.converged(&z, tol));
            }
        }
        (z, iterations, self.converged(&z, tol))
    }

    fn solve_from(&self, z0: Vector4<T>, opts: &SteadyStateOptions) -> (Vector4<T>, usize, bool) {
        let tol = T::tol(opts.tolerance, 64.0);
        let damping = T::lit(opts.fixed_point_damping);
        let w = self.weights(&z0);
        let mut z = z0;
        let mut obj = self.objective(&z, w);
        let mut used = 0;
        for _ in 0..opts.fixed_point_iterations {
            if self.converged(&z, tol) {
                return (z, used, true);
            }
            let next = self.fixed_point(&z, damping);
            let o = self.objective(&next, w);
            used += 1;
            if !o.is_finite() || o >= obj {
                break;
            }
            z = next;
            obj = o;
        }
        let (z, it, ok) = self.newton(z, opts.newton_iterations, tol);
        (z, used + it, ok)
    }

    /// Mechanical mean for a given photon number, from the stationary mechanics
    /// equation (Duffing term by fixed-point iteration).
    fn mechanics_for(&self, n: T) -> Complex<T> {
        let p = &self.p;
        let denom = Complex::new(p.gamma_m, p.omega_m);
        let mut x = T::zero();
        let mut beta = Complex::new(T::zero(), T::zero());
        for _ in 0..60 {
            let duff = T::lit(4.0) * p.duffing_eta * (T::lit(4.0) * x * x * x + T::lit(3.0) * x);
            beta = Complex::new(T::zero(), p.g0 * n + duff) / denom;
            if beta.re == x {
                break;
            }
            x = beta.re;
        }
        beta
    }

    /// Photon-number balance n(κ² + D²) − E² with the mechanics eliminated.
    fn balance(&self, n: T) -> (T, Complex<T>) {
        let p = &self.p;
        let two = T::lit(2.0);
        let beta = self.mechanics_for(n);
        let det = p.delta0 - two * p.g0 * beta.re + two * p.kerr_u * n;
        (n * (p.kappa * p.kappa + det * det) - self.drive * self.drive, beta)
    }

    /// First root of the photon-number balance above `n_min`, as a Newton seed.
    /// Used when continuation falls off a fold.
    fn scan_seed(&self, n_min: T) -> Option<Vector4<T>> {
        let p = &self.p;
        let two = T::lit(2.0);
        let n_max = self.drive * self.drive / (p.kappa * p.kappa) * T::lit(1.000001);
        let lo = n_min.max(n_max * T::lit(1e-12));
        if !(n_max > lo) {
            return None;
        }
        let points = 4000;
        let ratio = (n_max / lo).ln() / T::usize(points);
        let mut a = lo;
        let mut ha = self.balance(a).0;
        for k in 1..=points {
            let b = lo * (ratio * T::usize(k)).exp();
            let hb = self.balance(b).0;
            if ha <= T::zero() && hb > T::zero() {
                let (mut l, mut r) = (a, b);
                for _ in 0..200 {
                    let m = (l + r) / two;
                    if m <= l || m >= r {
                        break;
                    }
                    if self.balance(m).0 > T::zero() {
                        r = m;
                    } else {
                        l = m;
                    }
                }
                let n = (l + r) / two;
                let (_, beta) = self.balance(n);
                let det = p.delta0 - two * p.g0 * beta.re + two * p.kerr_u * n;
                let alpha = Complex::new(self.drive, T::zero()) / Complex::new(p.kappa, det);
                return Some(pack(alpha, beta));
            }
            a = b;
            ha = hb;
        }
        None
    }

    /// Extra Newton steps past the tolerance, kept while they reduce the residual.
    fn polish(&self, mut z: Vector4<T>) -> Vector4<T> {
        let w = self.weights(&z);
        let mut obj = self.objective(&z, w);
        for _ in 0..3 {
            let Some(step) = self.jacobian(&z).lu().solve(&(-self.residual(&z))) else {
                break;
            };
            // only rounding-level corrections; a large step means an ill-conditioned direction
            if step.norm() > T::tol(1e-9, 64.0) * z.norm() {
                break;
            }
            let trial = z + step;
            let o = self.objective(&trial, w);
            if !(o < obj) {
                break;
            }
            z = trial;
            obj = o;
        }
        z
    }
}

fn pack<T: Real>(alpha: Complex<T>, beta: Complex<T>) -> Vector4<T> {
    Vector4::new(alpha.re, alpha.im, beta.re, beta.im)
}

fn finish<T: Real>(sys: &MeanFieldSystem<T>, z: Vector4<T>, iterations: usize, warnings: Vec<Warning>) -> MeanField<T> {
    let (rc, rm) = sys.scaled(&z);
    MeanField {
        alpha: Complex::new(z[0], z[1]),
        beta: Complex::new(z[2], z[3]),
        residual_cavity: rc,
        residual_mechanics: rm,
        iterations,
        warnings,
    }
}

/// Solves the mean-field equations on the branch adiabatically connected to
/// the undriven state: E_L is ramped from 0 in `homotopy_steps` increments,
/// each solved from the previous point.
pub fn solve_steady_state<T: Real>(p: &PhysicalParams<T>, opts: &SteadyStateOptions) -> Result<MeanField<T>> {
    p.validate()?;
    let steps = opts.homotopy_steps.max(1);
    let mut z = Vector4::zeros();
    let mut warnings = Vec::new();
    let mut total = 0;
    let mut prev_increment: Option<T> = None;
    let mut jumped = false;
    let mut last = MeanFieldSystem {
        p: *p,
        drive: T::zero(),
    };
    for k in 1..=steps {
        let drive = p.drive_el * T::usize(k) / T::usize(steps);
        let sys = MeanFieldSystem { p: *p, drive };
        let (mut next, it, mut ok) = sys.solve_from(z, opts);
        total += it;
        if !ok {
            let n_prev = z[0] * z[0] + z[1] * z[1];
            if let Some(seed) = sys.scan_seed(n_prev) {
                let (z2, it2, ok2) = sys.newton(seed, opts.newton_iterations, T::tol(opts.tolerance, 64.0));
                total += it2;
                next = z2;
                ok = ok2;
            }
        }
        if !ok {
            return Err(Error::Convergence {
                iterations: total,
                residual: sys.merit(&next).f64(),
            });
        }
        let inc = (next - z).norm();
        if let Some(prev) = prev_increment {
            let floor = T::lit(1e-6) * next.norm();
            if !jumped && inc > T::lit(opts.jump_factor) * prev && inc > floor {
                warnings.push(Warning::Multistability { drive_el: drive.f64() });
                jumped = true;
            }
        }
        prev_increment = Some(inc);
        z = sys.polish(next);
        last = sys;
    }
    Ok(finish(&last, z, total, warnings))
}

/// Newton refinement of the mean fields from a seed, with no continuation.
/// Used to certify an operating point chosen on a specific branch.
pub fn refine_steady_state<T: Real>(
    p: &PhysicalParams<T>,
    alpha: Complex<T>,
    beta: Complex<T>,
    opts: &SteadyStateOptions,
) -> Result<MeanField<T>> {
    p.validate()?;
    let sys = MeanFieldSystem {
        p: *p,
        drive: p.drive_el,
    };
    let tol = T::tol(opts.tolerance, 64.0);
    let (z, it, ok) = sys.newton(pack(alpha, beta), opts.newton_iterations, tol);
    if !ok {
        return Err(Error::Convergence {
            iterations: it,
            residual: sys.merit(&z).f64(),
        });
    }
    Ok(finish(&sys, z, it, Vec::new()))
}

/// Raw mean-field residual vector (cavity re/im, mechanics re/im) at a point.
pub fn mean_field_residual<T: Real>(p: &PhysicalParams<T>, alpha: Complex<T>, beta: Complex<T>) -> [T; 4] {
    let sys = MeanFieldSystem {
        p: *p,
        drive: p.drive_el,
    };
    let f = sys.residual(&pack(alpha, beta));
    [f[0], f[1], f[2], f[3]]
}

/// Builds every squeezing-frame quantity from the mean fields.
pub fn derive_effective<T: Real>(
    p: &PhysicalParams<T>,
    alpha: Complex<T>,
    beta: Complex<T>,
) -> Result<EffectiveParams<T>> {
    let two = T::lit(2.0);
    let n = alpha.norm_sqr();
    let x = beta.re;
    let delta = p.delta0 - two * p.g0 * x + T::lit(4.0) * p.kerr_u * n;
    let omega_abs = two * p.kerr_u.abs() * n;
    let omega_mech = T::lit(6.0) * p.duffing_eta * (T::lit(4.0) * x * x + T::one());
    let omega_m_prime = p.omega_m - omega_mech;

    let ratio = |num: T, den: T| -> T {
        if num == T::zero() {
            T::zero()
        } else {
            num / den
        }
    };
    let eta_ratio = ratio(omega_abs, delta);
    let eta1_ratio = ratio(omega_mech.abs(), omega_m_prime);
    let admissible = |e: T| e >= T::zero() && e < T::one() && e.is_finite();
    if !admissible(eta_ratio) || !admissible(eta1_ratio) {
        return Err(Error::ParametricInstability {
            eta_ratio: eta_ratio.f64(),
            eta1_ratio: eta1_ratio.f64(),
        });
    }

    let r = squeezing_parameter(eta_ratio);
    let r_m = squeezing_parameter(eta1_ratio);
    let r_prime = r_m - r;
    let g = p.g0 * cabs(alpha);
    let theta = if n > T::zero() { -carg(alpha) } else { T::zero() };
    Ok(EffectiveParams {
        alpha,
        beta,
        theta,
        delta,
        omega_abs,
        omega_mech,
        omega_m_prime,
        eta_ratio,
        eta1_ratio,
        r,
        r_m,
        r_prime,
        g,
        coupling: g * r_prime.exp(),
        delta_e: delta * (T::one() - eta_ratio * eta_ratio).sqrt(),
        delta_m: omega_m_prime * (T::one() - eta1_ratio * eta1_ratio).sqrt(),
        lambda: (-two * r_m).exp(),
    })
}

/// How the squeezing-frame detunings are fixed when designing a drive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Resonance<T> {
    /// Pin Δ_e and Δ_m; the bare mechanical frequency and Duffing amplitude
    /// are back-solved to produce them.
    Pinned { delta_e: T, delta_m: T },
    /// Keep the configured ω_m as the bare mechanical frequency so Δ_m follows
    /// from η₁; Δ_e is set to Δ_m unless given.
    BareMechanics { delta_e: Option<T> },
}

/// What the inverted workflow must reproduce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveTarget<T> {
    /// Target G.
    pub coupling: T,
    pub eta_ratio: T,
    pub r_prime: T,
    pub resonance: Resonance<T>,
}

/// Drive and nonlinearities realizing a [`DriveTarget`].
#[derive(Debug, Clone, PartialEq)]
pub struct DriveDesign<T> {
    pub alpha_abs: T,
    pub drive_el: T,
    pub kerr_u: T,
    /// Completed parameter set (drive, Kerr, Duffing, Δ₀, bare ω_m, matched bath).
    pub params: PhysicalParams<T>,
    pub mean_field: MeanField<T>,
    pub effective: EffectiveParams<T>,
    pub warnings: Vec<Warning>,
}

/// Real mechanical mean Re β solving the stationary mechanics equation once the
/// Duffing amplitude is eliminated through Ω_m. The function is strictly
/// decreasing, so bisection on a sign-changing bracket is exact.
fn mechanical_mean<T: Real>(omega: T, gamma: T, drive: T, omega_mech: T) -> T {
    let two = T::lit(2.0);
    let slope = omega + gamma * gamma / omega;
    let h = |x: T| {
        let s = T::lit(4.0) * x * x;
        x * (s + T::lit(3.0)) / (s + T::one())
    };
    let f = |x: T| -slope * x + drive + two * omega_mech / T::lit(3.0) * h(x);
    if omega_mech == T::zero() {
        return drive / slope;
    }
    let (mut lo, mut hi) = if drive >= T::zero() {
        (T::zero(), drive / (slope - two * omega_mech))
    } else {
        (drive / (slope - two * omega_mech), T::zero())
    };
    if f(lo) == T::zero() {
        return lo;
    }
    for _ in 0..200 {
        let mid = (lo + hi) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / two
}

/// Finds the drive strength, Kerr coefficient and remaining lab-frame
/// quantities that put the linearized system at (G, η, r') with the requested
/// detunings. The result is certified by re-solving the mean-field equations
/// from the designed point and re-deriving the effective parameters.
pub fn invert_for_drive<T: Real>(target: &DriveTarget<T>, base: &PhysicalParams<T>) -> Result<DriveDesign<T>> {
    let one = T::one();
    let two = T::lit(2.0);
    let eta = target.eta_ratio;
    if !(target.coupling > T::zero()) {
        return Err(Error::Precondition(format!(
            "target G must be positive, got {}",
            target.coupling
        )));
    }
    if !(eta >= T::zero()) || eta > T::lit(MAX_ETA_RATIO) {
        return Err(Error::Precondition(format!(
            "eta_ratio must lie in [0, {MAX_ETA_RATIO}], got {eta}"
        )));
    }
    if !(base.g0 > T::zero()) {
        return Err(Error::Infeasible(format!("g0 must be positive, got {}", base.g0)));
    }
    base.validate()?;

    let r = squeezing_parameter(eta);
    let r_m = r + target.r_prime;
    if r_m < T::zero() {
        return Err(Error::Infeasible(format!(
            "r' = {} makes the mechanical squeezing r_m = {} negative",
            target.r_prime, r_m
        )));
    }
    let eta1 = (two * r_m).tanh();
    if !(eta1 < one) {
        return Err(Error::Infeasible(format!(
            "mechanical squeezing r_m = {r_m} is not representable"
        )));
    }
    let alpha_abs = target.coupling / (base.g0 * target.r_prime.exp());
    let n = alpha_abs * alpha_abs;

    let (omega_prime, delta_m) = match target.resonance {
        Resonance::Pinned { delta_m, .. } => {
            if !(delta_m > T::zero()) {
                return Err(Error::Infeasible(format!(
                    "pinned Delta_m must be positive, got {delta_m}"
                )));
            }
            (delta_m / (one - eta1 * eta1).sqrt(), delta_m)
        }
        Resonance::BareMechanics { .. } => {
            let wp = base.omega_m / (one + eta1);
            (wp, wp * (one - eta1 * eta1).sqrt())
        }
    };
    let omega_mech = eta1 * omega_prime;
    let omega_bare = omega_prime + omega_mech;
    let x = mechanical_mean(omega_bare, base.gamma_m, base.g0 * n, omega_mech);
    let beta = Complex::new(x, base.gamma_m * x / omega_bare);
    let duffing_eta = omega_mech / (T::lit(6.0) * (T::lit(4.0) * x * x + one));

    let delta_e = match target.resonance {
        Resonance::Pinned { delta_e, .. } => delta_e,
        Resonance::BareMechanics { delta_e } => delta_e.unwrap_or(delta_m),
    };
    if eta > T::zero() && !(delta_e > T::zero()) {
        return Err(Error::Infeasible(format!(
            "a positive Kerr coefficient needs Delta_e > 0, got {delta_e}"
        )));
    }
    let delta = delta_e / (one - eta * eta).sqrt();
    let kerr_u = eta * delta / (two * n);
    let delta0 = delta + two * base.g0 * x - T::lit(4.0) * kerr_u * n;
    let detuning = delta - two * kerr_u * n;
    let theta = detuning.atan2(base.kappa);
    let drive_el = alpha_abs * (base.kappa * base.kappa + detuning * detuning).sqrt();
    let alpha = polar(alpha_abs, -theta);

    let params = PhysicalParams {
        omega_m: omega_bare,
        duffing_eta,
        kerr_u,
        delta0,
        drive_el,
        r_e: r,
        phi_e: T::pi() + two * theta,
        ..*base
    };
    let mut warnings = params.validate()?;
    let opts = SteadyStateOptions::default();
    let mean_field = refine_steady_state(&params, alpha, beta, &opts)?;
    let effective = derive_effective(&params, mean_field.alpha, mean_field.beta)?;

    let rel = |a: T, b: T| (a - b).abs() / b.abs().max(T::lit(1e-30));
    let tol = T::tol(1e-8, 1e4);
    if rel(effective.coupling, target.coupling) > tol || (eta > T::zero() && rel(effective.eta_ratio, eta) > tol) {
        return Err(Error::Numerical(format!(
            "drive inversion round trip missed: G = {} (target {}), eta = {} (target {})",
            effective.coupling, target.coupling, effective.eta_ratio, eta
        )));
    }

    if let Ok(h) = solve_steady_state(&params, &opts) {
        let here = cabs(mean_field.alpha);
        if (cabs(h.alpha) - here).abs() > T::lit(1e-6) * here {
            warnings.push(Warning::BranchDiffersFromHomotopy {
                homotopy_alpha_abs: cabs(h.alpha).f64(),
            });
        }
        warnings.extend(h.warnings);
    }

    Ok(DriveDesign {
        alpha_abs,
        drive_el,
        kerr_u,
        params,
        mean_field,
        effective,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn memory_base() -> PhysicalParams<f64> {
        let wm = 2.0 * PI * 10e6;
        let mut p = PhysicalParams::linear(
            wm,
            PhysicalParams::gamma_from_quality(wm, 2e6),
            2.0 * PI * 100e3,
            2.0 * PI * 100.0,
        );
        p.n_th = 3.0;
        p
    }

    #[test]
    fn quality_factor_convention() {
        let g = PhysicalParams::gamma_from_quality(2.0 * PI * 10e6, 2e6);
        assert_relative_eq!(g, 2.0 * PI * 2.5, max_relative = 1e-15);
    }

    #[test]
    fn zero_drive_gives_zero_fields() {
        let mut p = memory_base();
        p.kerr_u = 10.0;
        p.duffing_eta = 100.0;
        let mf = solve_steady_state(&p, &SteadyStateOptions::default()).unwrap();
        assert_eq!(mf.alpha, Complex::new(0.0, 0.0));
        assert_eq!(mf.beta, Complex::new(0.0, 0.0));
    }

    #[test]
    fn empty_cavity_closed_form() {
        let mut p = memory_base();
        p.g0 = 0.0;
        p.delta0 = 3.0e5;
        p.drive_el = 1e9;
        let mf = solve_steady_state(&p, &SteadyStateOptions::default()).unwrap();
        let expect = Complex::new(p.drive_el, 0.0) / Complex::new(p.kappa, p.delta0);
        assert_relative_eq!(mf.alpha.re, expect.re, max_relative = 1e-12);
        assert_relative_eq!(mf.alpha.im, expect.im, max_relative = 1e-12);
        assert_eq!(mf.beta.norm(), 0.0);
    }

    #[test]
    fn zero_squeezing_identity() {
        let mut p = memory_base();
        p.delta0 = p.omega_m;
        p.drive_el = 1e10;
        let mf = solve_steady_state(&p, &SteadyStateOptions::default()).unwrap();
        let e = derive_effective(&p, mf.alpha, mf.beta).unwrap();
        assert_eq!((e.r, e.r_m, e.lambda), (0.0, 0.0, 1.0));
        assert_eq!(e.coupling, e.g);
        assert_eq!(e.delta_e, e.delta);
        assert_eq!(e.delta_m, e.omega_m_prime);
    }

    #[test]
    fn squeezing_closed_forms() {
        assert_relative_eq!(squeezing_parameter(0.5), 3f64.ln() / 4.0, max_relative = 1e-15);
        assert_relative_eq!(squeezing_parameter(0.9999), 19999f64.ln() / 4.0, max_relative = 1e-12);
        assert_relative_eq!(squeezing_parameter(0.9999), 2.4759, epsilon = 1e-4);
    }

    #[test]
    fn parametric_instability_is_rejected() {
        let mut p = memory_base();
        p.kerr_u = 1.0;
        p.delta0 = 1.0;
        // |Ω| = 2·1·|α|² = 2e6 against Δ = 1 + 4e6: fine; now push Δ negative
        let alpha = Complex::new(1000.0, 0.0);
        assert!(derive_effective(&p, alpha, Complex::new(0.0, 0.0)).is_ok());
        p.delta0 = -5e6;
        let err = derive_effective(&p, alpha, Complex::new(0.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::ParametricInstability { .. }));
    }

    #[test]
    fn theta_makes_alpha_real() {
        let p = memory_base();
        let alpha = Complex::from_polar(3.0, -0.7);
        let e = derive_effective(&p, alpha, Complex::new(0.0, 0.0)).unwrap();
        let rotated = alpha * Complex::from_polar(1.0, e.theta);
        assert_relative_eq!(rotated.im, 0.0, epsilon = 1e-14);
        assert!(rotated.re > 0.0);
    }

    #[test]
    fn kerr_rejects_non_positive() {
        assert!(kerr_coefficient(1e15, 0.0, 1e-15, 1e3).is_err());
        assert!(kerr_coefficient(1e15, 2.0, -1e-15, 1e3).is_err());
    }

    #[test]
    fn kerr_warns_outside_material_ranges() {
        let w = optical_frequency(1064e-9);
        let k = kerr_coefficient(w, 1.5, 1e-15, 1e3).unwrap();
        assert_eq!(k.warnings.len(), 1);
        let k = kerr_coefficient(w, 2.0, 1e-13, 1e2).unwrap();
        assert!(k.warnings.is_empty());
    }

    #[test]
    fn inversion_rejects_eta_above_cap() {
        let t = DriveTarget {
            coupling: 1e6,
            eta_ratio: 0.99995,
            r_prime: 0.0,
            resonance: Resonance::BareMechanics { delta_e: None },
        };
        assert!(matches!(
            invert_for_drive(&t, &memory_base()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn inversion_rejects_negative_mechanical_squeezing() {
        let t = DriveTarget {
            coupling: 1e6,
            eta_ratio: 0.5,
            r_prime: -1.0,
            resonance: Resonance::BareMechanics { delta_e: None },
        };
        assert!(matches!(
            invert_for_drive(&t, &memory_base()),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn duffing_bound_warning() {
        let mut p = memory_base();
        p.duffing_eta = 2e-4 * p.omega_m;
        assert_eq!(p.validate().unwrap().len(), 1);
    }

    #[test]
    fn strong_kerr_homotopy_flags_jump() {
        // drive past the lower-branch fold of a red-detuned Kerr cavity
        let mut p = memory_base();
        p.g0 = 0.0;
        p.kerr_u = 1.0;
        p.delta0 = -20.0 * p.kappa;
        p.drive_el = 3e10;
        let mf = solve_steady_state(&p, &SteadyStateOptions::default()).unwrap();
        assert!(mf.residual_cavity < 1e-10);
        assert!(mf.warnings.iter().any(|w| matches!(w, Warning::Multistability { .. })));
    }
}
