//! The two experiments: the write/store/read quantum memory and stationary
//! optomechanical entanglement, plus parameter sweeps over both.

use crate::dynamics::{
    evolve, is_stable, routh_hurwitz, steady_covariance, CouplingSign, LinearModel, MomentState, Switches, PSI,
};
use crate::error::{Error, Result};
use crate::gaussian::{gaussian_fidelity, initial_memory_state, log_negativity, GaussianState};
use crate::model::{invert_for_drive, DriveDesign, DriveTarget, EffectiveParams, PhysicalParams, Resonance, Warning};
use crate::scalar::Real;
use nalgebra::{DMatrix, Matrix4, Matrix5, Vector5};
use num_complex::Complex;
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;

/// How the squeezing-frame detunings are chosen for an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DetuningMode {
    /// Δ_e = Δ_m = configured ω_m (Δ_e overridable).
    #[default]
    Pinned,
    /// Configured ω_m is the bare mechanical frequency; Δ_e follows Δ_m.
    BareMechanics,
}

impl DetuningMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DetuningMode::Pinned => "pinned",
            DetuningMode::BareMechanics => "bare-mechanics",
        }
    }
}

impl FromStr for DetuningMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pinned" => Ok(DetuningMode::Pinned),
            "bare-mechanics" => Ok(DetuningMode::BareMechanics),
            other => Err(Error::Config(format!(
                "unknown detuning mode '{other}' (expected 'pinned' or 'bare-mechanics')"
            ))),
        }
    }
}

/// Operating point requested through the inverted workflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint<T> {
    /// Laboratory inputs; drive, Kerr, Duffing, Δ₀ and bath squeezing are overwritten.
    pub base: PhysicalParams<T>,
    /// Target G (rad/s).
    pub coupling: T,
    pub eta_ratio: T,
    pub r_prime: T,
    pub detuning: DetuningMode,
    /// Overrides Δ_e; by default Δ_e equals Δ_m.
    pub delta_e: Option<T>,
}

impl<T: Real> OperatingPoint<T> {
    pub fn target(&self) -> DriveTarget<T> {
        let resonance = match self.detuning {
            DetuningMode::Pinned => Resonance::Pinned {
                delta_e: self.delta_e.unwrap_or(self.base.omega_m),
                delta_m: self.base.omega_m,
            },
            DetuningMode::BareMechanics => Resonance::BareMechanics { delta_e: self.delta_e },
        };
        DriveTarget {
            coupling: self.coupling,
            eta_ratio: self.eta_ratio,
            r_prime: self.r_prime,
            resonance,
        }
    }

    pub fn design(&self) -> Result<DriveDesign<T>> {
        invert_for_drive(&self.target(), &self.base)
    }
}

/// Laboratory parameters shared by both experiments: ω_m = 2π·10 MHz,
/// κ = 2π·100 kHz, g₀ = 2π·100 Hz, Q_m = 2×10⁶, n_th = 3.
pub fn reference_base<T: Real>() -> PhysicalParams<T> {
    let omega_m = T::two_pi() * T::lit(10e6);
    let mut p = PhysicalParams::linear(
        omega_m,
        PhysicalParams::gamma_from_quality(omega_m, T::lit(2e6)),
        T::two_pi() * T::lit(100e3),
        T::two_pi() * T::lit(100.0),
    );
    p.n_th = T::lit(3.0);
    p
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemorySchedule<T> {
    pub t_write: T,
    pub t_store: T,
    pub t_read: T,
    pub read_sign: CouplingSign,
    pub write_phase_noise: bool,
    pub read_phase_noise: bool,
}

impl<T: Real> MemorySchedule<T> {
    /// π/(2G) swaps, storage 65/ω_m, read with reversed coupling sign.
    pub fn standard(coupling: T, omega_m: T) -> Self {
        let swap = T::pi() / (T::lit(2.0) * coupling);
        Self {
            t_write: swap,
            t_store: T::lit(65.0) / omega_m,
            t_read: swap,
            read_sign: CouplingSign::Minus,
            write_phase_noise: true,
            read_phase_noise: true,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, t) in [
            ("t_write", self.t_write),
            ("t_store", self.t_store),
            ("t_read", self.t_read),
        ] {
            if !(t > T::zero()) || !t.is_finite() {
                return Err(Error::Precondition(format!("{name} must be positive, got {t}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryConfig<T> {
    pub point: OperatingPoint<T>,
    pub mu: Complex<T>,
    pub chi: T,
    /// Storage duration in seconds.
    pub store_time: T,
    /// Phase-noise injection during write and read.
    pub phase_noise: bool,
    /// Full schedule override; `None` derives one from G, `store_time` and `phase_noise`.
    pub schedule: Option<MemorySchedule<T>>,
}

impl<T: Real> MemoryConfig<T> {
    /// G = 0.05 ω_m, r' = 0, pinned resonance, μ = 0.1, χ = 0, τ = 65/ω_m.
    pub fn reference(eta_ratio: T, gamma_c: T, gamma_l: T) -> Self {
        let mut base = reference_base::<T>();
        base.gamma_c = gamma_c;
        base.gamma_l = gamma_l;
        Self {
            point: OperatingPoint {
                coupling: T::lit(0.05) * base.omega_m,
                base,
                eta_ratio,
                r_prime: T::zero(),
                detuning: DetuningMode::Pinned,
                delta_e: None,
            },
            mu: Complex::new(T::lit(0.1), T::zero()),
            chi: T::zero(),
            store_time: T::lit(65.0) / base.omega_m,
            phase_noise: true,
            schedule: None,
        }
    }

    pub fn schedule_for(&self, coupling: T) -> MemorySchedule<T> {
        self.schedule.unwrap_or_else(|| {
            let swap = T::pi() / (T::lit(2.0) * coupling);
            MemorySchedule {
                t_write: swap,
                t_store: self.store_time,
                t_read: swap,
                read_sign: CouplingSign::Minus,
                write_phase_noise: self.phase_noise,
                read_phase_noise: self.phase_noise,
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryResult<T: Real> {
    pub fidelity: T,
    pub n_bar_h: T,
    pub theta_sq: T,
    pub initial_optical: GaussianState<T>,
    pub final_optical: GaussianState<T>,
    /// States at t = 0 and after write, store and read.
    pub snapshots: [MomentState<T>; 4],
    pub effective: EffectiveParams<T>,
    pub warnings: Vec<Warning>,
}

/// Rejects exponential growth of the optomechanical block; marginal modes pass.
fn check_not_growing<T: Real>(model: &LinearModel<T>) -> Result<()> {
    let a4 = DMatrix::from_fn(4, 4, |i, j| model.a[(i, j)]);
    let st = is_stable(&a4)?;
    let scale = crate::scalar::max_abs(&a4);
    if -st.margin > T::lit(1e-9) * scale {
        return Err(Error::Unstable {
            margin: st.margin.f64(),
            cond_a: None,
            cond_b: None,
        });
    }
    Ok(())
}

fn run_phase<T: Real>(model: &LinearModel<T>, state: &MomentState<T>, duration: T) -> Result<MomentState<T>> {
    let dt = model.recommended_step().unwrap_or(duration);
    evolve(model, state, duration, dt)
}

/// Write/store/read with already-derived effective parameters.
///
/// ψ starts in its stationary law (variance γ_cΓ_L); the mechanics starts in
/// its ground state.
pub fn memory_protocol<T: Real>(
    eff: &EffectiveParams<T>,
    p: &PhysicalParams<T>,
    mu: Complex<T>,
    chi: T,
    schedule: &MemorySchedule<T>,
) -> Result<MemoryResult<T>> {
    schedule.validate()?;
    let write = LinearModel::new(
        eff,
        p,
        Switches {
            phase_noise_on: schedule.write_phase_noise,
            ..Switches::write()
        },
    );
    let store = LinearModel::new(eff, p, Switches::store());
    let read = LinearModel::new(
        eff,
        p,
        Switches {
            coupling_sign: schedule.read_sign,
            phase_noise_on: schedule.read_phase_noise,
            ..Switches::read()
        },
    );
    for m in [&write, &store, &read] {
        check_not_growing(m)?;
    }

    let input = initial_memory_state(mu, chi);
    let half = T::lit(0.5);
    let mean = Vector5::new(input.mean[0], input.mean[1], T::zero(), T::zero(), T::zero());
    let cov = Matrix5::from_diagonal(&Vector5::new(
        input.cov[(0, 0)],
        input.cov[(1, 1)],
        half,
        half,
        p.gamma_c * p.gamma_l,
    ));
    let s0 = MomentState::new(mean, cov);
    let s1 = run_phase(&write, &s0, schedule.t_write)?;
    let s2 = run_phase(&store, &s1, schedule.t_store)?;
    let s3 = run_phase(&read, &s2, schedule.t_read)?;
    let final_optical = s3.partial(&[0])?;
    let fid = gaussian_fidelity(&input, &final_optical)?;
    Ok(MemoryResult {
        fidelity: fid.f,
        n_bar_h: fid.n_bar_h,
        theta_sq: fid.theta_sq,
        initial_optical: input,
        final_optical,
        snapshots: [s0, s1, s2, s3],
        effective: *eff,
        warnings: Vec::new(),
    })
}

/// Memory fidelity at an operating point designed by drive inversion.
pub fn run_memory<T: Real>(cfg: &MemoryConfig<T>) -> Result<MemoryResult<T>> {
    let design = cfg.point.design()?;
    let schedule = cfg.schedule_for(design.effective.coupling);
    let mut out = memory_protocol(&design.effective, &design.params, cfg.mu, cfg.chi, &schedule)?;
    out.warnings = design.warnings;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntanglementConfig<T> {
    pub point: OperatingPoint<T>,
}

impl<T: Real> EntanglementConfig<T> {
    /// G = 0.5 ω_m, κ = 2π·5 MHz, r' = 0, pinned resonance, γ_c = Γ_L = 10 kHz.
    pub fn reference(eta_ratio: T) -> Self {
        let mut base = reference_base::<T>();
        base.kappa = T::two_pi() * T::lit(5e6);
        base.gamma_c = T::lit(1e4);
        base.gamma_l = T::lit(1e4);
        Self {
            point: OperatingPoint {
                coupling: T::lit(0.5) * base.omega_m,
                base,
                eta_ratio,
                r_prime: T::zero(),
                detuning: DetuningMode::Pinned,
                delta_e: None,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntanglementResult<T: Real> {
    pub e_n: T,
    pub eta_minus: T,
    /// −max Re λ(A).
    pub margin: T,
    pub cond_a: Option<bool>,
    pub cond_b: Option<bool>,
    pub r_max: Option<T>,
    pub g_max: Option<T>,
    pub cov: Matrix5<T>,
    pub effective: EffectiveParams<T>,
    pub warnings: Vec<Warning>,
}

/// Stationary entanglement for already-derived effective parameters.
pub fn stationary_entanglement<T: Real>(
    eff: &EffectiveParams<T>,
    p: &PhysicalParams<T>,
) -> Result<EntanglementResult<T>> {
    let model = LinearModel::new(eff, p, Switches::ALL_ON);
    let rh = routh_hurwitz(eff, p.kappa, p.gamma_m).ok();
    // with γ_c = 0 the ψ mode is frozen and only the optomechanical block matters
    let k = if model.a[(PSI, PSI)] == T::zero() { PSI } else { 5 };
    let st = is_stable(&DMatrix::from_fn(k, k, |i, j| model.a[(i, j)]))?;
    let margin = st.margin;
    if !st.stable {
        return Err(Error::Unstable {
            margin: margin.f64(),
            cond_a: rh.map(|r| r.cond_a),
            cond_b: rh.map(|r| r.cond_b),
        });
    }
    let cov = steady_covariance(&model)?;
    let cov4: Matrix4<T> = cov.fixed_view::<4, 4>(0, 0).into_owned();
    let ln = log_negativity(&cov4)?;
    Ok(EntanglementResult {
        e_n: ln.e_n,
        eta_minus: ln.eta_minus,
        margin,
        cond_a: rh.map(|r| r.cond_a),
        cond_b: rh.map(|r| r.cond_b),
        r_max: rh.map(|r| r.r_max),
        g_max: rh.map(|r| r.g_max),
        cov,
        effective: *eff,
        warnings: Vec::new(),
    })
}

pub fn run_entanglement<T: Real>(cfg: &EntanglementConfig<T>) -> Result<EntanglementResult<T>> {
    let design = cfg.point.design()?;
    let mut out = stationary_entanglement(&design.effective, &design.params)?;
    out.warnings = design.warnings;
    Ok(out)
}

/// Quantities a sweep may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    EtaRatio,
    GammaC,
    GammaL,
    Kappa,
    Chi,
    Coupling,
}

impl Axis {
    pub const ALL: [Axis; 6] = [
        Axis::EtaRatio,
        Axis::GammaC,
        Axis::GammaL,
        Axis::Kappa,
        Axis::Chi,
        Axis::Coupling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axis::EtaRatio => "eta_ratio",
            Axis::GammaC => "gamma_c",
            Axis::GammaL => "Gamma_L",
            Axis::Kappa => "kappa",
            Axis::Chi => "chi",
            Axis::Coupling => "G",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Axis::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| {
            let names: Vec<_> = Axis::ALL.iter().map(|a| a.name()).collect();
            Error::Config(format!(
                "unknown sweep axis '{s}' (expected one of {})",
                names.join(", ")
            ))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

/// One grid axis with explicit values (already in internal units).
#[derive(Debug, Clone, PartialEq)]
pub struct AxisSpec<T> {
    pub axis: Axis,
    pub values: Vec<T>,
}

impl<T: Real> AxisSpec<T> {
    /// `points` values from `min` to `max` inclusive.
    pub fn grid(axis: Axis, min: T, max: T, points: usize, spacing: Spacing) -> Result<Self> {
        if spacing == Spacing::Log && !(min > T::zero() && max > T::zero()) {
            return Err(Error::Config(format!("log axis '{axis}' needs positive bounds")));
        }
        let values = (0..points)
            .map(|k| {
                if k == 0 {
                    return min;
                }
                if k == points - 1 {
                    return max;
                }
                let t = T::usize(k) / T::usize(points - 1);
                match spacing {
                    Spacing::Linear => min + (max - min) * t,
                    Spacing::Log => (min.ln() + (max.ln() - min.ln()) * t).exp(),
                }
            })
            .collect();
        Ok(Self { axis, values })
    }
}

/// Cartesian grid; the last axis varies fastest.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepSpec<T> {
    pub axes: Vec<AxisSpec<T>>,
}

impl<T: Real> SweepSpec<T> {
    pub fn len(&self) -> usize {
        if self.axes.is_empty() {
            0
        } else {
            self.axes.iter().map(|a| a.values.len()).product()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, mut index: usize) -> Vec<T> {
        let mut coords = vec![T::zero(); self.axes.len()];
        for (k, a) in self.axes.iter().enumerate().rev() {
            let n = a.values.len();
            coords[k] = a.values[index % n];
            index /= n;
        }
        coords
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Experiment<T> {
    Memory(MemoryConfig<T>),
    Entanglement(EntanglementConfig<T>),
}

impl<T: Real> Experiment<T> {
    fn point_mut(&mut self) -> &mut OperatingPoint<T> {
        match self {
            Experiment::Memory(m) => &mut m.point,
            Experiment::Entanglement(e) => &mut e.point,
        }
    }

    fn apply(&mut self, axis: Axis, value: T) -> Result<()> {
        match axis {
            Axis::Chi => match self {
                Experiment::Memory(m) => m.chi = value,
                Experiment::Entanglement(_) => {
                    return Err(Error::Config("axis 'chi' only applies to the memory experiment".into()))
                }
            },
            Axis::EtaRatio => self.point_mut().eta_ratio = value,
            Axis::GammaC => self.point_mut().base.gamma_c = value,
            Axis::GammaL => self.point_mut().base.gamma_l = value,
            Axis::Kappa => self.point_mut().base.kappa = value,
            Axis::Coupling => self.point_mut().coupling = value,
        }
        Ok(())
    }
}

/// Outcome class of one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStatus {
    Ok,
    Unstable,
    Infeasible,
    ParametricInstability,
    NumericalFailure,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::Unstable => "unstable",
            RowStatus::Infeasible => "infeasible",
            RowStatus::ParametricInstability => "parametric_instability",
            RowStatus::NumericalFailure => "numerical_failure",
        }
    }

    fn of(e: &Error) -> Self {
        match e {
            Error::Unstable { .. } => RowStatus::Unstable,
            Error::ParametricInstability { .. } => RowStatus::ParametricInstability,
            Error::Infeasible(_) | Error::Precondition(_) | Error::Domain(_) => RowStatus::Infeasible,
            _ => RowStatus::NumericalFailure,
        }
    }
}

/// Result columns of a row; absent values are `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowValues<T> {
    /// F for memory, E_N for entanglement.
    pub value: Option<T>,
    pub eta_minus: Option<T>,
    pub n_bar_h: Option<T>,
    pub theta_sq: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<T> {
    pub index: usize,
    pub coords: Vec<T>,
    pub effective: Option<EffectiveParams<T>>,
    pub values: RowValues<T>,
    pub margin: Option<T>,
    pub cond_a: Option<bool>,
    pub cond_b: Option<bool>,
    pub status: RowStatus,
    pub message: Option<String>,
}

fn evaluate<T: Real>(experiment: &Experiment<T>, spec: &SweepSpec<T>, index: usize) -> Result<SweepRow<T>> {
    let coords = spec.point(index);
    let mut exp = *experiment;
    for (a, v) in spec.axes.iter().zip(&coords) {
        exp.apply(a.axis, *v)?;
    }
    let mut row = SweepRow {
        index,
        coords,
        effective: None,
        values: RowValues {
            value: None,
            eta_minus: None,
            n_bar_h: None,
            theta_sq: None,
        },
        margin: None,
        cond_a: None,
        cond_b: None,
        status: RowStatus::Ok,
        message: None,
    };
    let design = match exp.point_mut().design() {
        Ok(d) => d,
        Err(e) => {
            row.status = RowStatus::of(&e);
            row.message = Some(e.to_string());
            return Ok(row);
        }
    };
    row.effective = Some(design.effective);
    let outcome = match &exp {
        Experiment::Memory(m) => {
            let schedule = m.schedule_for(design.effective.coupling);
            memory_protocol(&design.effective, &design.params, m.mu, m.chi, &schedule).map(|r| RowValues {
                value: Some(r.fidelity),
                eta_minus: None,
                n_bar_h: Some(r.n_bar_h),
                theta_sq: Some(r.theta_sq),
            })
        }
        Experiment::Entanglement(_) => stationary_entanglement(&design.effective, &design.params).map(|r| {
            row.margin = Some(r.margin);
            row.cond_a = r.cond_a;
            row.cond_b = r.cond_b;
            RowValues {
                value: Some(r.e_n),
                eta_minus: Some(r.eta_minus),
                n_bar_h: None,
                theta_sq: None,
            }
        }),
    };
    match outcome {
        Ok(v) => row.values = v,
        Err(e) => {
            if let Error::Unstable { margin, cond_a, cond_b } = &e {
                row.margin = Some(T::lit(*margin));
                row.cond_a = *cond_a;
                row.cond_b = *cond_b;
            }
            row.status = RowStatus::of(&e);
            row.message = Some(e.to_string());
        }
    }
    Ok(row)
}

/// Evaluates every grid point, in parallel, returning rows in grid order.
/// Points that fail physically are flagged through [`RowStatus`]; only
/// configuration errors abort the sweep.
pub fn sweep<T: Real>(spec: &SweepSpec<T>, experiment: &Experiment<T>) -> Result<Vec<SweepRow<T>>> {
    (0..spec.len())
        .into_par_iter()
        .map(|i| evaluate(experiment, spec, i))
        .collect()
}
