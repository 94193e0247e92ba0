use nalgebra::{Matrix5, Vector5};
use num_complex::Complex;
use optomech::model::optical_frequency;
use optomech::{
    evolve, kerr_coefficient, mc_ensemble, sweep, Axis, AxisSpec, EffectiveParams, Experiment, LinearModel,
    MomentState, PhysicalParams, RowStatus, Sampling, SweepRow, SweepSpec, Switches,
};

use crate::config::{Command, RunConfig, Target};
use crate::error::CliError;
use crate::output::{flag, num, opt, render, Table};

/// Rendered CSV plus a short human summary for stderr.
pub struct Outcome {
    pub bytes: Vec<u8>,
    pub summary: Vec<String>,
    pub numerical_failure: bool,
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cfg.command {
        Command::Memory | Command::Entangle => {
            let spec = SweepSpec {
                axes: vec![AxisSpec {
                    axis: Axis::EtaRatio,
                    values: vec![cfg.params.eta_ratio],
                }],
            };
            grid(cfg, &spec)
        }
        Command::Sweep => {
            if cfg.axes.is_empty() {
                return Err(CliError::Config("sweep needs at least one [[sweep.axis]]".into()));
            }
            grid(cfg, &cfg.sweep_spec()?)
        }
        Command::Validate => validate(cfg),
        Command::Kerr => kerr(cfg),
    }
}

fn grid(cfg: &RunConfig, spec: &SweepSpec<f64>) -> Result<Outcome, CliError> {
    let (experiment, value_name) = match cfg.target {
        Target::Memory => (Experiment::Memory(cfg.memory_config()), "F"),
        Target::Entangle => (Experiment::Entanglement(cfg.entanglement_config()), "E_N"),
    };
    let rows = sweep(spec, &experiment)?;
    let mut columns: Vec<String> = spec.axes.iter().map(|a| a.axis.name().to_owned()).collect();
    columns.extend(
        [
            "alpha_abs",
            "r",
            "r_m",
            "G",
            "Delta_e",
            "Delta_m",
            "alpha_e_minus_r",
            value_name,
            "eta_minus",
            "n_bar_h",
            "Theta_sq",
            "margin",
            "cond_a",
            "cond_b",
            "status",
        ]
        .map(str::to_owned),
    );
    let mut summary = Vec::new();
    for row in &rows {
        match (&row.status, row.values.value) {
            (RowStatus::Ok, Some(v)) => summary.push(format!("row {}: {value_name} = {v:.6}", row.index)),
            (status, _) => summary.push(format!(
                "row {}: {} ({})",
                row.index,
                status.as_str(),
                row.message.as_deref().unwrap_or("")
            )),
        }
    }
    let numerical_failure = rows.iter().any(|r| r.status == RowStatus::NumericalFailure);
    let table = Table {
        columns,
        rows: rows.iter().map(csv_row).collect(),
    };
    let notes = vec![format!(
        "experiment {}; detuning mode {}",
        match cfg.target {
            Target::Memory => "memory",
            Target::Entangle => "entangle",
        },
        cfg.params.detuning.as_str()
    )];
    Ok(Outcome {
        bytes: render(cfg, &notes, &table)?,
        summary,
        numerical_failure,
    })
}

fn csv_row(row: &SweepRow<f64>) -> Vec<String> {
    let mut out: Vec<String> = row.coords.iter().map(|c| num(*c)).collect();
    let eff: [Option<f64>; 7] = match &row.effective {
        Some(e) => [
            Some(e.alpha_abs()),
            Some(e.r),
            Some(e.r_m),
            Some(e.coupling),
            Some(e.delta_e),
            Some(e.delta_m),
            Some(e.alpha_e_minus_r()),
        ],
        None => [None; 7],
    };
    out.extend(eff.map(opt));
    let v = &row.values;
    out.extend([v.value, v.eta_minus, v.n_bar_h, v.theta_sq, row.margin].map(opt));
    out.push(flag(row.cond_a));
    out.push(flag(row.cond_b));
    out.push(row.status.as_str().to_owned());
    out
}

fn validate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let v = &cfg.validate;
    let mut eff = EffectiveParams::undriven(v.delta_e, v.delta_m);
    eff.alpha = Complex::new(v.alpha_e_minus_r, 0.0);
    eff.g = v.coupling;
    eff.coupling = v.coupling;
    eff.r_m = v.r_m;
    eff.r_prime = v.r_m;
    eff.lambda = (-2.0 * v.r_m).exp();
    let mut p = PhysicalParams::linear(1.0, v.gamma_m, v.kappa, 0.0);
    p.gamma_c = v.gamma_c;
    p.gamma_l = v.gamma_l;
    p.n_th = v.n_th;
    let model = LinearModel::new(&eff, &p, Switches::ALL_ON);
    let init = MomentState::new(
        Vector5::new(1.0, 0.0, 0.0, 0.0, 0.0),
        Matrix5::from_diagonal(&Vector5::new(0.5, 0.5, 0.5, 0.5, v.gamma_c * v.gamma_l)),
    );
    let sampling = Sampling {
        seed: cfg.seed,
        n_traj: v.n_traj,
        dt: v.dt,
    };
    let mc = mc_ensemble(&model, &init, v.duration, &sampling)?;
    let step = model.recommended_step().unwrap_or(v.dt).min(v.dt / 10.0);
    let exact = evolve(&model, &init, v.duration, step)?;

    let z = |diff: f64, se: f64| {
        if se > 0.0 {
            diff / se
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    };
    let mut rows = Vec::new();
    let mut max_z: f64 = 0.0;
    for i in 0..5 {
        let zi = z(mc.mean[i] - exact.mean[i], mc.mean_se[i]);
        max_z = max_z.max(zi.abs());
        rows.push(vec![
            "mean".into(),
            i.to_string(),
            String::new(),
            num(exact.mean[i]),
            num(mc.mean[i]),
            num(mc.mean_se[i]),
            num(zi),
        ]);
    }
    for i in 0..5 {
        for j in i..5 {
            let zij = z(mc.cov[(i, j)] - exact.cov[(i, j)], mc.cov_se[(i, j)]);
            max_z = max_z.max(zij.abs());
            rows.push(vec![
                "cov".into(),
                i.to_string(),
                j.to_string(),
                num(exact.cov[(i, j)]),
                num(mc.cov[(i, j)]),
                num(mc.cov_se[(i, j)]),
                num(zij),
            ]);
        }
    }
    let mut summary = vec![format!(
        "{:<5} {:>2} {:>2} {:>14} {:>14} {:>11} {:>8}",
        "kind", "i", "j", "moment", "monte_carlo", "se", "z"
    )];
    for r in &rows {
        let parse = |s: &str| s.parse::<f64>().unwrap_or(f64::NAN);
        summary.push(format!(
            "{:<5} {:>2} {:>2} {:>14.6e} {:>14.6e} {:>11.3e} {:>8.3}",
            r[0],
            r[1],
            r[2],
            parse(&r[3]),
            parse(&r[4]),
            parse(&r[5]),
            parse(&r[6])
        ));
    }
    summary.push(format!("max |z| = {max_z:.3} over {} trajectories", v.n_traj));
    let notes = vec![
        "dimensionless small model; moment equations integrated by RK4, ensemble by exponential Euler-Maruyama"
            .to_owned(),
        format!("max |z| = {}", num(max_z)),
    ];
    let table = Table {
        columns: ["kind", "i", "j", "moment", "monte_carlo", "se", "z"]
            .map(str::to_owned)
            .to_vec(),
        rows,
    };
    Ok(Outcome {
        bytes: render(cfg, &notes, &table)?,
        summary,
        numerical_failure: false,
    })
}

const KERR_WINDOW_HZ: (f64, f64) = (0.0006, 2721.0);

fn kerr(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let k = &cfg.kerr;
    let omega_c = optical_frequency(k.wavelength_nm * 1e-9);
    let est = kerr_coefficient(omega_c, k.n0, k.n2, k.v_eff)?;
    let (lo, hi) = KERR_WINDOW_HZ;
    let inside = (lo..=hi).contains(&est.kerr_u);
    let mut summary = vec![
        format!("u = {} s^-1", num(est.kerr_u)),
        format!(
            "admissible window {lo} - {hi} Hz: {}",
            if inside { "inside" } else { "outside" }
        ),
    ];
    summary.extend(est.warnings.iter().map(|w| format!("warning: {w}")));
    let table = Table {
        columns: [
            "wavelength_nm",
            "n0",
            "n2_cm2_per_W",
            "v_eff_um3",
            "kerr_u",
            "window_min",
            "window_max",
            "inside",
        ]
        .map(str::to_owned)
        .to_vec(),
        rows: vec![vec![
            num(k.wavelength_nm),
            num(k.n0),
            num(k.n2),
            num(k.v_eff),
            num(est.kerr_u),
            num(lo),
            num(hi),
            inside.to_string(),
        ]],
    };
    Ok(Outcome {
        bytes: render(cfg, &[], &table)?,
        summary,
        numerical_failure: false,
    })
}
