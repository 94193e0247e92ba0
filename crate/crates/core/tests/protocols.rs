mod common;

use common::{custom_effective, custom_params, rel};
use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use num_complex::Complex;
use optomech::{
    memory_protocol, run_entanglement, run_memory, stationary_entanglement, sweep, Axis, AxisSpec, EffectiveParams,
    EntanglementConfig, Error, Experiment, LinearModel, MemoryConfig, MemorySchedule, RowStatus, Spacing, SweepSpec,
    Switches,
};

const KHZ: f64 = 1e3;

fn fidelity(eta: f64, gamma_c: f64, gamma_l: f64) -> f64 {
    run_memory(&MemoryConfig::reference(eta, gamma_c, gamma_l))
        .unwrap()
        .fidelity
}

fn log_negativity(eta: f64, gamma_c: f64, gamma_l: f64) -> f64 {
    let mut cfg = EntanglementConfig::reference(eta);
    cfg.point.base.gamma_c = gamma_c;
    cfg.point.base.gamma_l = gamma_l;
    run_entanglement(&cfg).unwrap().e_n
}

/// Lossless flow of the optical mean and covariance through the three phases
/// by matrix exponentials, with F from the pure-state overlap formula.
fn lossless_oracle(eff: &EffectiveParams<f64>, mu: Complex<f64>, chi: f64, schedule: &MemorySchedule<f64>) -> f64 {
    let p = custom_params(0.0, 0.0, 0.0, 0.0, 0.0);
    let phases = [
        (Switches::write(), schedule.t_write),
        (Switches::store(), schedule.t_store),
        (
            Switches {
                coupling_sign: schedule.read_sign,
                ..Switches::read()
            },
            schedule.t_read,
        ),
    ];
    let s2 = 2f64.sqrt();
    let v0 = Matrix2::new((-2.0 * chi).exp() / 2.0, 0.0, 0.0, (2.0 * chi).exp() / 2.0);
    let m0 = Vector2::new(s2 * mu.re, s2 * mu.im);
    let mut m = Vector4::new(m0[0], m0[1], 0.0, 0.0);
    let mut v = Matrix4::identity() * 0.5;
    v.fixed_view_mut::<2, 2>(0, 0).copy_from(&v0);
    for (sw, t) in phases {
        let a = LinearModel::new(eff, &p, sw).a.fixed_view::<4, 4>(0, 0).into_owned();
        let phi = (a * t).exp();
        m = phi * m;
        v = phi * v * phi.transpose();
    }
    let sum = v0 + v.fixed_view::<2, 2>(0, 0);
    let d = m.fixed_rows::<2>(0) - m0;
    (-0.5 * d.dot(&(sum.try_inverse().unwrap() * d))).exp() / sum.determinant().sqrt()
}

#[test]
fn lossless_weak_coupling_memory_is_near_perfect() {
    let g = 0.005;
    let eff = custom_effective(1.0, 1.0, g, 0.0, 0.0);
    let p = custom_params(0.0, 0.0, 0.0, 0.0, 0.0);
    let mut schedule = MemorySchedule::standard(g, 1.0);
    schedule.write_phase_noise = false;
    schedule.read_phase_noise = false;
    let whole_periods = MemorySchedule {
        t_store: 20.0 * std::f64::consts::PI,
        ..schedule
    };
    let cases = [
        (Complex::new(0.0, 0.0), 0.0, schedule, true),
        (Complex::new(0.1, 0.0), 0.0, whole_periods, true),
        (Complex::new(0.1, 0.05), 0.0, whole_periods, true),
        (Complex::new(0.1, 0.0), 0.0, schedule, false),
        (Complex::new(0.0, 0.0), 0.3, schedule, false),
    ];
    for (mu, chi, sched, near_perfect) in cases {
        let r = memory_protocol(&eff, &p, mu, chi, &sched).unwrap();
        let oracle = lossless_oracle(&eff, mu, chi, &sched);
        assert!(
            (r.fidelity - oracle).abs() < 1e-7,
            "mu = {mu}, chi = {chi}: {} vs {oracle}",
            r.fidelity
        );
        if near_perfect {
            assert!(r.fidelity >= 0.99, "mu = {mu}: F = {}", r.fidelity);
        }
    }
}

#[test]
fn vanishing_linewidth_matches_disabled_phase_noise() {
    let cfg = MemoryConfig::reference(0.9, 10.0 * KHZ, 0.0);
    let with = run_memory(&cfg).unwrap();
    let design = cfg.point.design().unwrap();
    let mut schedule = MemorySchedule::standard(design.effective.coupling, cfg.point.base.omega_m);
    schedule.write_phase_noise = false;
    schedule.read_phase_noise = false;
    let without = memory_protocol(&design.effective, &design.params, cfg.mu, cfg.chi, &schedule).unwrap();
    assert!((with.fidelity - without.fidelity).abs() <= 1e-9);
}

#[test]
fn memory_result_bookkeeping() {
    let r = run_memory(&MemoryConfig::reference(0.5, 5.0 * KHZ, 5.0 * KHZ)).unwrap();
    assert!(r.fidelity > 0.0 && r.fidelity <= 1.0);
    assert!(r.n_bar_h >= 0.0 && r.theta_sq >= 0.0);
    assert_eq!(r.snapshots[0].t, 0.0);
    let expected_psi = 25.0 * KHZ * KHZ;
    assert!(rel(r.snapshots[0].cov[(4, 4)], expected_psi) < 1e-15);
    for k in 1..4 {
        assert!(r.snapshots[k].t > 0.0);
    }
    assert_eq!(r.initial_optical.mean[0], 0.1 * 2f64.sqrt());
}

#[test]
fn noiseless_fidelity_is_nearly_flat_in_eta() {
    let low = fidelity(0.0, 0.0, 0.0);
    let high = fidelity(0.9999, 0.0, 0.0);
    assert!(low > 0.96 && high > 0.96, "{low} {high}");
    assert!((low - high).abs() < 0.01);
}

#[test]
fn phase_noise_degrades_memory() {
    for eta in [0.0, 0.9, 0.9999] {
        let clean = fidelity(eta, 0.0, 0.0);
        let noisy = fidelity(eta, 15.0 * KHZ, 15.0 * KHZ);
        assert!(noisy < clean, "eta = {eta}");
    }
}

const NOISE_GRID: [f64; 5] = [1.0, 5.0, 10.0, 20.0, 50.0];

#[test]
fn cut_off_frequency_dominates_linewidth_below_diagonal() {
    for eta in [0.99, 0.9999] {
        for (i, &c) in NOISE_GRID.iter().enumerate() {
            for &l in &NOISE_GRID[i..] {
                for step in [1.0, 10.0] {
                    let (c, l, step) = (c * KHZ, l * KHZ, step * KHZ);
                    let e0 = log_negativity(eta, c, l);
                    let via_c = e0 - log_negativity(eta, c + step, l);
                    let via_l = e0 - log_negativity(eta, c, l + step);
                    assert!(via_c >= via_l && via_l >= 0.0, "E_N, eta = {eta}, ({c}, {l}) + {step}");
                    if c < l {
                        let f0 = fidelity(eta, c, l);
                        let via_c = f0 - fidelity(eta, c + step, l);
                        let via_l = f0 - fidelity(eta, c, l + step);
                        assert!(via_c >= via_l && via_l >= 0.0, "F, eta = {eta}, ({c}, {l}) + {step}");
                    }
                }
            }
        }
    }
}

#[test]
fn memory_noise_is_nearly_symmetric_on_the_diagonal() {
    for eta in [0.0, 0.99, 0.9999] {
        for v in [5.0 * KHZ, 10.0 * KHZ] {
            let f0 = fidelity(eta, v, v);
            let via_c = f0 - fidelity(eta, v + 5.0 * KHZ, v);
            let via_l = f0 - fidelity(eta, v, v + 5.0 * KHZ);
            assert!(
                (via_c - via_l).abs() <= 0.05 * via_l,
                "eta = {eta}, v = {v}: {via_c} vs {via_l}"
            );
        }
    }
}

#[test]
fn linewidth_dominates_far_above_diagonal() {
    let (c, l, step) = (50.0 * KHZ, 1.0 * KHZ, 5.0 * KHZ);
    for eta in [0.0, 0.9999] {
        let f0 = fidelity(eta, c, l);
        assert!(f0 - fidelity(eta, c, l + step) > f0 - fidelity(eta, c + step, l));
    }
    let e0 = log_negativity(0.9999, c, l);
    assert!(e0 > 0.0);
    assert!(e0 - log_negativity(0.9999, c, l + step) > e0 - log_negativity(0.9999, c + step, l));
}

#[test]
fn uncoupled_modes_are_not_entangled() {
    let eff = custom_effective(1.0, 1.0, 0.0, 0.7, 0.4);
    let p = custom_params(0.3, 0.01, 0.5, 0.5, 2.0);
    let r = stationary_entanglement(&eff, &p).unwrap();
    assert_eq!(r.e_n, 0.0);
    assert!(r.eta_minus >= 0.5);
    assert_eq!(r.cond_a, Some(true));
}

#[test]
fn strong_coupling_is_reported_unstable() {
    let eff = custom_effective(1.0, 1.0, 3.0, 0.0, 0.0);
    let p = custom_params(0.3, 0.01, 0.5, 0.5, 0.0);
    match stationary_entanglement(&eff, &p) {
        Err(Error::Unstable { margin, cond_a, .. }) => {
            assert!(margin < 0.0);
            assert_eq!(cond_a, Some(false));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn entanglement_grows_with_eta() {
    let values: Vec<f64> = [0.0, 0.9, 0.99, 0.999, 0.9999]
        .into_iter()
        .map(|eta| log_negativity(eta, 10.0 * KHZ, 10.0 * KHZ))
        .collect();
    assert!(values.windows(2).all(|w| w[1] >= w[0]), "{values:?}");
    assert!(values[4] > 0.0);
}

#[test]
fn single_precision_entanglement_tracks_double() {
    let d = run_entanglement(&EntanglementConfig::<f64>::reference(0.9)).unwrap();
    let s = run_entanglement(&EntanglementConfig::<f32>::reference(0.9)).unwrap();
    assert!(
        (s.e_n as f64 - d.e_n).abs() < 1e-2 * (1.0 + d.e_n),
        "{} {}",
        s.e_n,
        d.e_n
    );
}

#[test]
fn eta_above_working_range_is_rejected() {
    let cfg = MemoryConfig::reference(0.99995, 0.0, 0.0);
    assert!(matches!(run_memory(&cfg), Err(Error::Precondition(_))));
}

fn axis(axis: Axis, values: Vec<f64>) -> AxisSpec<f64> {
    AxisSpec { axis, values }
}

#[test]
fn empty_sweeps_produce_no_rows() {
    let exp = Experiment::Memory(MemoryConfig::reference(0.5, 0.0, 0.0));
    assert!(sweep(&SweepSpec::default(), &exp).unwrap().is_empty());
    let spec = SweepSpec {
        axes: vec![axis(Axis::EtaRatio, vec![])],
    };
    assert!(spec.is_empty());
    assert!(sweep(&spec, &exp).unwrap().is_empty());
}

#[test]
fn chi_axis_requires_memory_experiment() {
    let spec = SweepSpec {
        axes: vec![axis(Axis::Chi, vec![0.1])],
    };
    let exp = Experiment::Entanglement(EntanglementConfig::reference(0.5));
    assert!(matches!(sweep(&spec, &exp), Err(Error::Config(_))));
    assert!(matches!("chi2".parse::<Axis>(), Err(Error::Config(_))));
}

#[test]
fn sweep_rows_are_ordered_and_flagged() {
    let omega_m = 2.0 * std::f64::consts::PI * 10e6;
    let spec = SweepSpec {
        axes: vec![
            axis(Axis::Coupling, vec![0.5 * omega_m, 3.0 * omega_m]),
            axis(Axis::EtaRatio, vec![0.0, 0.99, 0.99995]),
        ],
    };
    let rows = sweep(&spec, &Experiment::Entanglement(EntanglementConfig::reference(0.0))).unwrap();
    assert_eq!(rows.len(), 6);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row.index, i);
        assert_eq!(row.coords, spec.point(i));
    }
    assert_eq!(rows[0].status, RowStatus::Ok);
    assert_eq!(rows[1].status, RowStatus::Ok);
    assert_eq!(rows[2].status, RowStatus::Infeasible);
    assert!(rows[2].message.is_some() && rows[2].values.value.is_none());
    for row in &rows[3..5] {
        assert_ne!(row.status, RowStatus::Ok, "{row:?}");
        assert!(row.values.value.is_none());
    }
    let direct = log_negativity(0.99, 10.0 * KHZ, 10.0 * KHZ);
    assert_eq!(rows[1].values.value, Some(direct));
}

#[test]
fn memory_sweep_matches_direct_runs() {
    let spec = SweepSpec {
        axes: vec![
            axis(Axis::GammaC, vec![0.0, 10.0 * KHZ]),
            axis(Axis::Chi, vec![0.0, 0.5]),
        ],
    };
    let rows = sweep(&spec, &Experiment::Memory(MemoryConfig::reference(0.9, 0.0, 5.0 * KHZ))).unwrap();
    for row in &rows {
        let mut cfg = MemoryConfig::reference(0.9, row.coords[0], 5.0 * KHZ);
        cfg.chi = row.coords[1];
        let direct = run_memory(&cfg).unwrap();
        assert_eq!(row.values.value, Some(direct.fidelity));
        assert_eq!(row.values.n_bar_h, Some(direct.n_bar_h));
        assert!(row.values.eta_minus.is_none());
    }
}

#[test]
fn axis_grids() {
    let lin = AxisSpec::grid(Axis::Chi, 0.0, 1.0, 5, Spacing::Linear).unwrap();
    assert_eq!(lin.values, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    let log = AxisSpec::grid(Axis::Kappa, 1.0, 1e4, 5, Spacing::Log).unwrap();
    for (v, e) in log.values.iter().zip([1.0, 10.0, 100.0, 1e3, 1e4]) {
        assert!(rel(*v, e) < 1e-12);
    }
    assert_eq!(
        AxisSpec::grid(Axis::Chi, 0.3, 1.0, 1, Spacing::Linear).unwrap().values,
        vec![0.3]
    );
    assert!(matches!(
        AxisSpec::grid(Axis::Kappa, 0.0, 1.0, 3, Spacing::Log),
        Err(Error::Config(_))
    ));
}
