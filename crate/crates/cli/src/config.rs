//! TOML run configuration.
//!
//! Frequencies are strings with a mandatory unit (`"10 MHz"`). Mechanical and
//! cavity quantities are 2π-implied (f ↦ ω = 2πf); the phase-noise rates γ_c
//! and Γ_L are plain rates. Every default filled in by [`resolve`] is recorded
//! so the output header can echo it.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::PathBuf;

use num_complex::Complex;
use optomech::{
    reference_base, Axis, AxisSpec, DetuningMode, EntanglementConfig, MemoryConfig, OperatingPoint, PhysicalParams,
    Spacing, SweepSpec,
};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Memory,
    Entangle,
    Sweep,
    Validate,
    Kerr,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Memory => "memory",
            Command::Entangle => "entangle",
            Command::Sweep => "sweep",
            Command::Validate => "validate",
            Command::Kerr => "kerr",
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Option<String>,
    seed: Option<u64>,
    threads: Option<usize>,
    out: Option<PathBuf>,
    params: Option<RawParams>,
    memory: Option<RawMemory>,
    sweep: Option<RawSweep>,
    validate: Option<RawValidate>,
    kerr: Option<RawKerr>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    omega_m: Option<Hz>,
    kappa: Option<Hz>,
    g0: Option<Hz>,
    quality_factor: Option<f64>,
    n_th: Option<f64>,
    gamma_c: Option<Hz>,
    #[serde(rename = "Gamma_L")]
    gamma_l: Option<Hz>,
    eta_ratio: Option<f64>,
    coupling_ratio: Option<f64>,
    r_prime: Option<f64>,
    detuning: Option<String>,
    delta_e: Option<Hz>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMemory {
    mu_re: Option<f64>,
    mu_im: Option<f64>,
    chi: Option<f64>,
    store_time: Option<f64>,
    phase_noise: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    experiment: Option<String>,
    axis: Option<Vec<RawAxis>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAxis {
    name: String,
    min: Bound,
    max: Bound,
    points: usize,
    spacing: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Bound {
    Number(f64),
    Text(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawValidate {
    n_traj: Option<usize>,
    dt: Option<f64>,
    duration: Option<f64>,
    delta_e: Option<f64>,
    delta_m: Option<f64>,
    coupling: Option<f64>,
    kappa: Option<f64>,
    gamma_m: Option<f64>,
    gamma_c: Option<f64>,
    gamma_l: Option<f64>,
    n_th: Option<f64>,
    r_m: Option<f64>,
    alpha_e_minus_r: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKerr {
    wavelength_nm: Option<f64>,
    n0: Option<f64>,
    n2: Option<f64>,
    v_eff: Option<f64>,
}

/// Laboratory and operating-point parameters as configured: frequencies in Hz
/// (2π-implied for ω_m, κ, g₀, Δ_e), γ_c and Γ_L in s⁻¹.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub omega_m_hz: f64,
    pub kappa_hz: f64,
    pub g0_hz: f64,
    pub quality_factor: f64,
    pub n_th: f64,
    pub gamma_c: f64,
    pub gamma_l: f64,
    pub eta_ratio: f64,
    pub coupling_ratio: f64,
    pub r_prime: f64,
    pub detuning: DetuningMode,
    pub delta_e_hz: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryOptions {
    pub mu: Complex<f64>,
    pub chi: f64,
    /// In units of 1/ω_m.
    pub store_time: f64,
    pub phase_noise: bool,
}

/// Dimensionless small model for the Monte Carlo cross-check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidateOptions {
    pub n_traj: usize,
    pub dt: f64,
    pub duration: f64,
    pub delta_e: f64,
    pub delta_m: f64,
    pub coupling: f64,
    pub kappa: f64,
    pub gamma_m: f64,
    pub gamma_c: f64,
    pub gamma_l: f64,
    pub n_th: f64,
    pub r_m: f64,
    pub alpha_e_minus_r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KerrOptions {
    pub wavelength_nm: f64,
    pub n0: f64,
    pub n2: f64,
    pub v_eff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Memory,
    Entangle,
}

impl Target {
    fn name(self) -> &'static str {
        match self {
            Target::Memory => "memory",
            Target::Entangle => "entangle",
        }
    }
}

/// Bounds in configured units: Hz for frequency axes, plain numbers otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub axis: Axis,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub spacing: Spacing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub params: Params,
    pub memory: MemoryOptions,
    pub target: Target,
    pub axes: Vec<SweepAxis>,
    pub validate: ValidateOptions,
    pub kerr: KerrOptions,
    /// `key = value` for every default that was filled in.
    pub defaults: Vec<String>,
}

/// Frequency read from a `"<number> <unit>"` string, in Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Hz(f64);

impl<'de> Deserialize<'de> for Hz {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Hz;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a frequency string such as \"5 kHz\" (units Hz, kHz or MHz are mandatory)")
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Hz, E> {
                parse_frequency(v).map(Hz).map_err(E::custom)
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<Hz, E> {
                Err(E::custom(format!(
                    "{v} has no unit (write e.g. \"{v} Hz\"; Hz, kHz or MHz)"
                )))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<Hz, E> {
                self.visit_i64(v as i64)
            }
            fn visit_f64<E: serde::de::Error>(self, v: f64) -> Result<Hz, E> {
                Err(E::custom(format!(
                    "{v} has no unit (write e.g. \"{v} Hz\"; Hz, kHz or MHz)"
                )))
            }
        }
        d.deserialize_any(V)
    }
}

const UNITS: [(&str, f64); 3] = [("Hz", 1.0), ("kHz", 1e3), ("MHz", 1e6)];

/// Parses `"<number> <unit>"` into hertz.
pub fn parse_frequency(text: &str) -> Result<f64, String> {
    let t = text.trim();
    let unit_start = t
        .char_indices()
        .rev()
        .take_while(|(_, c)| c.is_ascii_alphabetic())
        .last()
        .map_or(t.len(), |(i, _)| i);
    let (number, unit) = (t[..unit_start].trim(), &t[unit_start..]);
    if unit.is_empty() {
        return Err(format!("'{t}' has no unit (expected Hz, kHz or MHz)"));
    }
    let scale = UNITS
        .iter()
        .find(|(u, _)| *u == unit)
        .map(|(_, s)| *s)
        .ok_or_else(|| format!("unknown unit '{unit}' in '{t}' (expected Hz, kHz or MHz)"))?;
    let value: f64 = number
        .parse()
        .map_err(|_| format!("'{number}' is not a number in '{t}'"))?;
    if !value.is_finite() {
        return Err(format!("'{t}' is not finite"));
    }
    Ok(value * scale)
}

fn format_hz(hz: f64) -> String {
    format!("{hz:.16e} Hz")
}

/// Reads `key=value` with a TOML value, falling back to a bare string.
fn parse_override(text: &str) -> Result<(Vec<String>, toml::Value), CliError> {
    let (key, value) = text
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override '{text}' is not of the form key=value")))?;
    let path: Vec<String> = key.trim().split('.').map(str::to_owned).collect();
    if path.iter().any(String::is_empty) {
        return Err(CliError::Config(format!("override key '{key}' is malformed")));
    }
    let value = value.trim();
    let parsed = format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_owned()));
    Ok((path, parsed))
}

fn apply_override(table: &mut toml::Table, path: &[String], value: toml::Value) -> Result<(), CliError> {
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut cur = table;
    for p in parents {
        let entry = cur
            .entry(p.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override path '{}' crosses a non-table value", path.join("."))))?;
    }
    cur.insert(last.clone(), value);
    Ok(())
}

fn parse_raw(text: &str, overrides: &[String]) -> Result<RawConfig, CliError> {
    if overrides.is_empty() {
        return toml::from_str(text).map_err(|e| CliError::Config(e.to_string()));
    }
    let mut table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    for o in overrides {
        let (path, value) = parse_override(o)?;
        apply_override(&mut table, &path, value)?;
    }
    let merged = toml::to_string(&table).map_err(|e| CliError::Config(e.to_string()))?;
    toml::from_str(&merged).map_err(|e| CliError::Config(format!("after overrides: {e}")))
}

struct Defaults(Vec<String>);

impl Defaults {
    fn num(&mut self, key: &str, given: Option<f64>, default: f64) -> f64 {
        given.unwrap_or_else(|| {
            self.0.push(format!("{key} = {default:?}"));
            default
        })
    }

    fn hz(&mut self, key: &str, given: Option<Hz>, default_hz: f64) -> f64 {
        given.map_or_else(
            || {
                self.0.push(format!("{key} = \"{}\"", format_hz(default_hz)));
                default_hz
            },
            |h| h.0,
        )
    }
}

fn experiment_kind(name: &str) -> Result<Target, CliError> {
    match name {
        "memory" => Ok(Target::Memory),
        "entangle" => Ok(Target::Entangle),
        other => Err(CliError::Config(format!(
            "unknown experiment '{other}' (expected 'memory' or 'entangle')"
        ))),
    }
}

fn resolve_params(raw: RawParams, target: Target, d: &mut Defaults) -> Result<Params, CliError> {
    let (kappa_hz, coupling_ratio) = match target {
        Target::Memory => (100e3, 0.05),
        Target::Entangle => (5e6, 0.5),
    };
    let omega_m_hz = d.hz("params.omega_m", raw.omega_m, 10e6);
    let detuning = match raw.detuning.as_deref() {
        Some(s) => s
            .parse()
            .map_err(|e: optomech::Error| CliError::Config(e.to_string()))?,
        None => {
            d.0.push("params.detuning = \"pinned\"".into());
            DetuningMode::Pinned
        }
    };
    let delta_e_hz = raw.delta_e.map(|h| h.0);
    let p = Params {
        omega_m_hz,
        kappa_hz: d.hz("params.kappa", raw.kappa, kappa_hz),
        g0_hz: d.hz("params.g0", raw.g0, 100.0),
        quality_factor: d.num("params.quality_factor", raw.quality_factor, 2e6),
        n_th: d.num("params.n_th", raw.n_th, 3.0),
        gamma_c: d.hz("params.gamma_c", raw.gamma_c, 10e3),
        gamma_l: d.hz("params.Gamma_L", raw.gamma_l, 10e3),
        eta_ratio: d.num("params.eta_ratio", raw.eta_ratio, 0.9999),
        coupling_ratio: d.num("params.coupling_ratio", raw.coupling_ratio, coupling_ratio),
        r_prime: d.num("params.r_prime", raw.r_prime, 0.0),
        detuning,
        delta_e_hz,
    };
    for (name, v) in [
        ("omega_m", p.omega_m_hz),
        ("kappa", p.kappa_hz),
        ("g0", p.g0_hz),
        ("quality_factor", p.quality_factor),
    ] {
        if !(v > 0.0) {
            return Err(CliError::Config(format!("params.{name} must be positive")));
        }
    }
    for (name, v) in [("n_th", p.n_th), ("gamma_c", p.gamma_c), ("Gamma_L", p.gamma_l)] {
        if !(v >= 0.0) {
            return Err(CliError::Config(format!("params.{name} must be non-negative")));
        }
    }
    Ok(p)
}

/// Hz to internal units: 2π-implied frequency, plain rate, or dimensionless.
fn axis_scale(axis: Axis) -> Option<f64> {
    match axis {
        Axis::Kappa | Axis::Coupling => Some(TAU),
        Axis::GammaC | Axis::GammaL => Some(1.0),
        Axis::EtaRatio | Axis::Chi => None,
    }
}

fn resolve_axis(raw: RawAxis) -> Result<SweepAxis, CliError> {
    let axis: Axis = raw
        .name
        .parse()
        .map_err(|e: optomech::Error| CliError::Config(e.to_string()))?;
    let scale = axis_scale(axis);
    let bound = |b: &Bound, which: &str| -> Result<f64, CliError> {
        match (b, scale) {
            (Bound::Text(t), Some(_)) => {
                parse_frequency(t).map_err(|e| CliError::Config(format!("sweep axis '{axis}' {which}: {e}")))
            }
            (Bound::Number(x), None) => Ok(*x),
            (Bound::Number(x), Some(_)) => Err(CliError::Config(format!(
                "sweep axis '{axis}' {which}: {x} has no unit (expected a string such as \"5 kHz\")"
            ))),
            (Bound::Text(t), None) => Err(CliError::Config(format!(
                "sweep axis '{axis}' {which}: '{t}' must be a plain number"
            ))),
        }
    };
    let spacing = match raw.spacing.as_deref().unwrap_or("linear") {
        "linear" => Spacing::Linear,
        "log" => Spacing::Log,
        other => {
            return Err(CliError::Config(format!(
                "sweep axis '{axis}': unknown spacing '{other}' (expected 'linear' or 'log')"
            )))
        }
    };
    Ok(SweepAxis {
        axis,
        min: bound(&raw.min, "min")?,
        max: bound(&raw.max, "max")?,
        points: raw.points,
        spacing,
    })
}

/// Parses a configuration document, applies overrides and fills defaults.
pub fn resolve(command: Command, text: &str, overrides: &[String]) -> Result<RunConfig, CliError> {
    let raw = parse_raw(text, overrides)?;
    if let Some(e) = &raw.experiment {
        if e != command.name() {
            return Err(CliError::Config(format!(
                "config declares experiment '{e}' but the '{}' subcommand was run",
                command.name()
            )));
        }
    }
    let mut d = Defaults(Vec::new());
    let raw_sweep = raw.sweep.unwrap_or_default();
    let target = match command {
        Command::Entangle => Target::Entangle,
        Command::Sweep => match raw_sweep.experiment.as_deref() {
            Some(name) => experiment_kind(name)?,
            None => {
                d.0.push("sweep.experiment = \"memory\"".into());
                Target::Memory
            }
        },
        _ => Target::Memory,
    };
    let seed = raw.seed.unwrap_or_else(|| {
        d.0.push("seed = 0".into());
        0
    });
    let params = resolve_params(raw.params.unwrap_or_default(), target, &mut d)?;

    let m = raw.memory.unwrap_or_default();
    let memory = MemoryOptions {
        mu: Complex::new(d.num("memory.mu_re", m.mu_re, 0.1), d.num("memory.mu_im", m.mu_im, 0.0)),
        chi: d.num("memory.chi", m.chi, 0.0),
        store_time: d.num("memory.store_time", m.store_time, 65.0),
        phase_noise: m.phase_noise.unwrap_or_else(|| {
            d.0.push("memory.phase_noise = true".into());
            true
        }),
    };

    let axes = raw_sweep
        .axis
        .unwrap_or_default()
        .into_iter()
        .map(resolve_axis)
        .collect::<Result<Vec<_>, _>>()?;
    if command == Command::Sweep && target == Target::Entangle && axes.iter().any(|a| a.axis == Axis::Chi) {
        return Err(CliError::Config(
            "sweep axis 'chi' only applies to the memory experiment".into(),
        ));
    }

    let v = raw.validate.unwrap_or_default();
    let validate = ValidateOptions {
        n_traj: v.n_traj.unwrap_or_else(|| {
            d.0.push("validate.n_traj = 10000".into());
            10_000
        }),
        dt: d.num("validate.dt", v.dt, 0.01),
        duration: d.num("validate.duration", v.duration, 3.0),
        delta_e: d.num("validate.delta_e", v.delta_e, 2.0),
        delta_m: d.num("validate.delta_m", v.delta_m, 1.5),
        coupling: d.num("validate.coupling", v.coupling, 0.3),
        kappa: d.num("validate.kappa", v.kappa, 1.0),
        gamma_m: d.num("validate.gamma_m", v.gamma_m, 0.3),
        gamma_c: d.num("validate.gamma_c", v.gamma_c, 0.5),
        gamma_l: d.num("validate.gamma_l", v.gamma_l, 0.8),
        n_th: d.num("validate.n_th", v.n_th, 2.0),
        r_m: d.num("validate.r_m", v.r_m, 0.25),
        alpha_e_minus_r: d.num("validate.alpha_e_minus_r", v.alpha_e_minus_r, 0.7),
    };

    let k = raw.kerr.unwrap_or_default();
    let kerr = KerrOptions {
        wavelength_nm: d.num("kerr.wavelength_nm", k.wavelength_nm, 1064.0),
        n0: d.num("kerr.n0", k.n0, 2.0),
        n2: d.num("kerr.n2", k.n2, 1e-13),
        v_eff: d.num("kerr.v_eff", k.v_eff, 1e2),
    };

    let mut cfg = RunConfig {
        command,
        seed,
        threads: raw.threads,
        out: raw.out,
        params,
        memory,
        target,
        axes,
        validate,
        kerr,
        defaults: Vec::new(),
    };
    cfg.defaults = d.0.into_iter().filter(|k| cfg.uses(k)).collect();
    Ok(cfg)
}

impl RunConfig {
    /// Whether the run reads the given configuration key.
    fn uses(&self, key: &str) -> bool {
        let section = key.split(['.', ' ']).next().unwrap_or("");
        match section {
            "seed" => true,
            "params" => self.uses_params(),
            "memory" => self.uses_params() && self.target == Target::Memory,
            "sweep" => self.command == Command::Sweep,
            "validate" => self.command == Command::Validate,
            "kerr" => self.command == Command::Kerr,
            _ => false,
        }
    }

    fn uses_params(&self) -> bool {
        matches!(self.command, Command::Memory | Command::Entangle | Command::Sweep)
    }

    fn operating_point(&self) -> OperatingPoint<f64> {
        let p = &self.params;
        let omega_m = TAU * p.omega_m_hz;
        let mut base = reference_base::<f64>();
        base.omega_m = omega_m;
        base.gamma_m = PhysicalParams::gamma_from_quality(omega_m, p.quality_factor);
        base.kappa = TAU * p.kappa_hz;
        base.g0 = TAU * p.g0_hz;
        base.n_th = p.n_th;
        base.gamma_c = p.gamma_c;
        base.gamma_l = p.gamma_l;
        OperatingPoint {
            base,
            coupling: p.coupling_ratio * omega_m,
            eta_ratio: p.eta_ratio,
            r_prime: p.r_prime,
            detuning: p.detuning,
            delta_e: p.delta_e_hz.map(|f| TAU * f),
        }
    }

    pub fn memory_config(&self) -> MemoryConfig<f64> {
        let point = self.operating_point();
        MemoryConfig {
            point,
            mu: self.memory.mu,
            chi: self.memory.chi,
            store_time: self.memory.store_time / point.base.omega_m,
            phase_noise: self.memory.phase_noise,
            schedule: None,
        }
    }

    pub fn entanglement_config(&self) -> EntanglementConfig<f64> {
        EntanglementConfig {
            point: self.operating_point(),
        }
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec<f64>, CliError> {
        let axes = self
            .axes
            .iter()
            .map(|a| {
                let s = axis_scale(a.axis).unwrap_or(1.0);
                AxisSpec::grid(a.axis, s * a.min, s * a.max, a.points, a.spacing)
                    .map_err(|e| CliError::Config(e.to_string()))
            })
            .collect::<Result<_, _>>()?;
        Ok(SweepSpec { axes })
    }

    /// Canonical, fully explicit document that reproduces this run.
    pub fn to_toml(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "experiment = \"{}\"", self.command.name());
        let _ = writeln!(s, "seed = {}", self.seed);
        if self.uses_params() {
            self.params_toml(&mut s);
        }
        if self.command == Command::Validate {
            self.validate_toml(&mut s);
        }
        if self.command == Command::Kerr {
            let k = &self.kerr;
            let _ = writeln!(s, "[kerr]");
            for (name, x) in [
                ("wavelength_nm", k.wavelength_nm),
                ("n0", k.n0),
                ("n2", k.n2),
                ("v_eff", k.v_eff),
            ] {
                let _ = writeln!(s, "{name} = {x:?}");
            }
        }
        s
    }

    fn params_toml(&self, s: &mut String) {
        let p = &self.params;
        let m = &self.memory;
        let hz = |f: f64| format!("\"{}\"", format_hz(f));
        let _ = writeln!(s, "[params]");
        let _ = writeln!(s, "omega_m = {}", hz(p.omega_m_hz));
        let _ = writeln!(s, "kappa = {}", hz(p.kappa_hz));
        let _ = writeln!(s, "g0 = {}", hz(p.g0_hz));
        let _ = writeln!(s, "quality_factor = {:?}", p.quality_factor);
        let _ = writeln!(s, "n_th = {:?}", p.n_th);
        let _ = writeln!(s, "gamma_c = {}", hz(p.gamma_c));
        let _ = writeln!(s, "Gamma_L = {}", hz(p.gamma_l));
        let _ = writeln!(s, "eta_ratio = {:?}", p.eta_ratio);
        let _ = writeln!(s, "coupling_ratio = {:?}", p.coupling_ratio);
        let _ = writeln!(s, "r_prime = {:?}", p.r_prime);
        let _ = writeln!(s, "detuning = \"{}\"", p.detuning.as_str());
        if let Some(de) = p.delta_e_hz {
            let _ = writeln!(s, "delta_e = {}", hz(de));
        }
        if self.target == Target::Memory {
            let _ = writeln!(s, "[memory]");
            let _ = writeln!(s, "mu_re = {:?}", m.mu.re);
            let _ = writeln!(s, "mu_im = {:?}", m.mu.im);
            let _ = writeln!(s, "chi = {:?}", m.chi);
            let _ = writeln!(s, "store_time = {:?}", m.store_time);
            let _ = writeln!(s, "phase_noise = {}", m.phase_noise);
        }
        if self.command == Command::Sweep {
            let _ = writeln!(s, "[sweep]");
            let _ = writeln!(s, "experiment = \"{}\"", self.target.name());
            for a in &self.axes {
                let bound = |x: f64| match axis_scale(a.axis) {
                    Some(_) => hz(x),
                    None => format!("{x:?}"),
                };
                let spacing = match a.spacing {
                    Spacing::Linear => "linear",
                    Spacing::Log => "log",
                };
                let _ = writeln!(s, "[[sweep.axis]]");
                let _ = writeln!(s, "name = \"{}\"", a.axis.name());
                let _ = writeln!(s, "min = {}", bound(a.min));
                let _ = writeln!(s, "max = {}", bound(a.max));
                let _ = writeln!(s, "points = {}", a.points);
                let _ = writeln!(s, "spacing = \"{spacing}\"");
            }
        }
    }

    fn validate_toml(&self, s: &mut String) {
        let v = &self.validate;
        let _ = writeln!(s, "[validate]");
        let _ = writeln!(s, "n_traj = {}", v.n_traj);
        for (name, x) in [
            ("dt", v.dt),
            ("duration", v.duration),
            ("delta_e", v.delta_e),
            ("delta_m", v.delta_m),
            ("coupling", v.coupling),
            ("kappa", v.kappa),
            ("gamma_m", v.gamma_m),
            ("gamma_c", v.gamma_c),
            ("gamma_l", v.gamma_l),
            ("n_th", v.n_th),
            ("r_m", v.r_m),
            ("alpha_e_minus_r", v.alpha_e_minus_r),
        ] {
            let _ = writeln!(s, "{name} = {x:?}");
        }
    }
}
