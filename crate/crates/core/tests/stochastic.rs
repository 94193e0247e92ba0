mod common;

use common::{custom_effective, custom_params, rel};
use nalgebra::{Matrix5, Vector5};
use optomech::stochastic::{mean_and_se, pairwise_sum};
use optomech::{
    estimate_spectrum, evolve, mc_ensemble, sample_ou, Error, LinearModel, MomentState, NoiseSpec, Sampling, Switches,
};
use proptest::prelude::*;

fn noise(gamma_c: f64, gamma_l: f64, n_traj: usize, dt: f64) -> NoiseSpec<f64> {
    NoiseSpec {
        gamma_c,
        gamma_l,
        sampling: Sampling { seed: 11, n_traj, dt },
    }
}

fn small_model() -> (LinearModel<f64>, MomentState<f64>) {
    let eff = custom_effective(2.0, 1.5, 0.3, 0.7, 0.25);
    let p = custom_params(1.0, 0.3, 0.5, 0.8, 2.0);
    let model = LinearModel::new(&eff, &p, Switches::ALL_ON);
    let init = MomentState::new(
        Vector5::new(1.0, -0.5, 0.3, 0.0, 0.0),
        Matrix5::from_diagonal(&Vector5::new(0.5, 0.5, 0.5, 0.5, 0.4)),
    );
    (model, init)
}

#[test]
fn ou_without_diffusion_stays_at_zero() {
    let spec = noise(2.0, 0.0, 100, 0.01);
    let e = sample_ou(&spec, 1.0).unwrap();
    assert_eq!(e.len(), 101);
    for p in &e.paths {
        assert!(p.iter().all(|&x| x == 0.0));
    }
}

#[test]
fn ou_stationary_moments() {
    let (gc, gl) = (3.0, 5.0);
    let dt = 0.01 / gc;
    let e = sample_ou(&noise(gc, gl, 4000, dt), 2.0 / gc).unwrap();
    let var = gc * gl;
    for k in [0, e.len() / 2, e.len() - 1] {
        let (m, se) = e.correlation(k, 0);
        assert!((m - var).abs() <= 3.0 * se, "k = {k}: {m} vs {var} (se {se})");
    }
    for tau in [0.5, 1.0, 2.0] {
        let lag = (tau / (gc * dt)).round() as usize;
        let (m, se) = e.correlation(0, lag);
        let expect = var * (-tau).exp();
        assert!((m - expect).abs() <= 3.0 * se, "tau = {tau}: {m} vs {expect} (se {se})");
    }
}

#[test]
fn ou_spectrum_is_lorentzian() {
    let (gc, gl) = (2.0, 1.5);
    let dt = 0.01 / gc;
    let e = sample_ou(&noise(gc, gl, 400, dt), 200.0 / gc).unwrap();
    let s = estimate_spectrum(&e).unwrap();
    let lorentz = |w: f64| 2.0 * gl * gc * gc / (gc * gc + w * w);
    let near = |target: f64| {
        let window: Vec<f64> = s
            .omega
            .iter()
            .zip(&s.density)
            .filter(|(w, _)| (**w - target).abs() <= 0.1 * gc)
            .map(|(w, d)| d / lorentz(*w))
            .collect();
        pairwise_sum(&window) / window.len() as f64
    };
    let low: Vec<f64> = (1..=20).map(|k| s.density[k] / lorentz(s.omega[k])).collect();
    assert!((mean_and_se(&low).0 - 1.0).abs() < 0.1);
    let s0 = 2.0 * gl;
    assert!(rel(s.density[1], s0) < 0.5);
    assert!((near(gc) - 1.0).abs() < 0.1);
    assert!((near(3.0 * gc) - 1.0).abs() < 0.1);
    let last = s.omega.last().copied().unwrap();
    assert!(last <= 10.0 * gc + 1e-9 && last > 9.0 * gc);
}

#[test]
fn white_noise_control_has_flat_spectrum() {
    // Band limited to 0.2 γ_c, where the Lorentzian is flat at 2Γ_L.
    let gc = 50.0;
    let e = sample_ou(&noise(gc, 1.0, 200, 0.002 / gc), 100.0 / gc).unwrap();
    let s = estimate_spectrum(&e).unwrap();
    let band: Vec<f64> = s
        .omega
        .iter()
        .zip(&s.density)
        .filter(|(w, _)| **w > 0.0 && **w < 0.2 * gc)
        .map(|(_, d)| *d)
        .collect();
    let (m, _) = mean_and_se(&band);
    assert!(rel(m, 2.0) < 0.1, "{m}");
}

#[test]
fn spectrum_rejects_short_records() {
    let e = sample_ou(&noise(1.0, 1.0, 100, 0.01), 50.0).unwrap();
    assert!(matches!(estimate_spectrum(&e), Err(Error::Precondition(_))));
}

#[test]
fn ou_sampling_preconditions() {
    assert!(matches!(
        sample_ou(&noise(1.0, 1.0, 99, 0.01), 1.0),
        Err(Error::Precondition(_))
    ));
    assert!(matches!(
        sample_ou(&noise(1.0, 1.0, 100, 0.2), 1.0),
        Err(Error::Precondition(_))
    ));
    assert!(matches!(
        sample_ou(&noise(1.0, 1.0, 100, 0.0), 1.0),
        Err(Error::Precondition(_))
    ));
    assert!(matches!(
        sample_ou(&noise(-1.0, 1.0, 100, 0.01), 1.0),
        Err(Error::Domain(_))
    ));
}

#[test]
fn noiseless_ensemble_follows_mean_flow() {
    let (mut model, init) = small_model();
    model.n = Matrix5::zeros();
    let start = MomentState::new(init.mean, Matrix5::zeros());
    let t = 2.0;
    let est = mc_ensemble(
        &model,
        &start,
        t,
        &Sampling {
            seed: 3,
            n_traj: 100,
            dt: 0.01,
        },
    )
    .unwrap();
    let exact = (model.a * t).exp() * init.mean;
    assert!((est.mean - exact).amax() < 1e-12);
    assert!(est.cov.amax() < 1e-24);
}

#[test]
fn ensembles_are_reproducible_per_seed() {
    let (model, init) = small_model();
    let s = Sampling {
        seed: 5,
        n_traj: 300,
        dt: 0.05,
    };
    let a = mc_ensemble(&model, &init, 1.0, &s).unwrap();
    let b = mc_ensemble(&model, &init, 1.0, &s).unwrap();
    assert_eq!(a, b);
    let c = mc_ensemble(&model, &init, 1.0, &Sampling { seed: 6, ..s }).unwrap();
    assert_ne!(a.cov, c.cov);

    let pa = sample_ou(&noise(1.0, 1.0, 100, 0.01), 1.0).unwrap();
    let pb = sample_ou(&noise(1.0, 1.0, 100, 0.01), 1.0).unwrap();
    assert_eq!(pa, pb);
}

#[test]
fn ensemble_agrees_with_moment_equations() {
    let (model, init) = small_model();
    let t = 3.0;
    let est = mc_ensemble(
        &model,
        &init,
        t,
        &Sampling {
            seed: 9,
            n_traj: 20_000,
            dt: 0.02,
        },
    )
    .unwrap();
    let exact = evolve(&model, &init, t, 1e-3).unwrap();
    for i in 0..5 {
        let zm = (est.mean[i] - exact.mean[i]).abs() / est.mean_se[i];
        assert!(zm <= 4.0, "mean {i}: z = {zm}");
        for j in i..5 {
            let z = (est.cov[(i, j)] - exact.cov[(i, j)]).abs() / est.cov_se[(i, j)];
            assert!(z <= 4.0, "cov ({i}, {j}): z = {z}");
        }
    }
}

#[test]
fn standard_error_scales_as_inverse_root_n() {
    let (model, init) = small_model();
    let run = |n| {
        mc_ensemble(
            &model,
            &init,
            1.0,
            &Sampling {
                seed: 2,
                n_traj: n,
                dt: 0.02,
            },
        )
        .unwrap()
    };
    let small = run(1000);
    let large = run(4000);
    for i in 0..5 {
        let ratio = small.cov_se[(i, i)] / large.cov_se[(i, i)];
        assert!((ratio - 2.0).abs() < 0.3, "{i}: {ratio}");
        let ratio = small.mean_se[i] / large.mean_se[i];
        assert!((ratio - 2.0).abs() < 0.2, "{i}: {ratio}");
    }
}

/// Covariance of the discrete scheme u ← Φu + K z, iterated exactly.
fn scheme_covariance(model: &LinearModel<f64>, init: &MomentState<f64>, t: f64, dt: f64) -> Matrix5<f64> {
    let steps = (t / dt).ceil() as usize;
    let h = t / steps as f64;
    let phi = (model.a * h).exp();
    let half = (model.a * (h / 2.0)).exp();
    let q = half * model.n * h * half.transpose();
    let mut v = init.cov;
    for _ in 0..steps {
        v = phi * v * phi.transpose() + q;
    }
    v
}

#[test]
fn discretisation_bias_is_below_sampling_error() {
    let (model, init) = small_model();
    let t = 3.0;
    let dt = 0.02;
    let exact = evolve(&model, &init, t, 1e-3).unwrap().cov;
    let est = mc_ensemble(
        &model,
        &init,
        t,
        &Sampling {
            seed: 1,
            n_traj: 10_000,
            dt,
        },
    )
    .unwrap();
    for halvings in [0, 1] {
        let v = scheme_covariance(&model, &init, t, dt / f64::powi(2.0, halvings));
        for i in 0..5 {
            for j in i..5 {
                assert!((v[(i, j)] - exact[(i, j)]).abs() < est.cov_se[(i, j)], "({i}, {j})");
            }
        }
    }
}

#[test]
fn ensemble_preconditions() {
    let (model, init) = small_model();
    let bad_n = Sampling {
        seed: 0,
        n_traj: 10,
        dt: 0.01,
    };
    assert!(matches!(
        mc_ensemble(&model, &init, 1.0, &bad_n),
        Err(Error::Precondition(_))
    ));
    let coarse = Sampling {
        seed: 0,
        n_traj: 100,
        dt: 1.0,
    };
    assert!(matches!(
        mc_ensemble(&model, &init, 1.0, &coarse),
        Err(Error::Precondition(_))
    ));
    let mut broken = model;
    broken.a[(0, 0)] = f64::NAN;
    let ok = Sampling {
        seed: 0,
        n_traj: 100,
        dt: 0.01,
    };
    assert!(matches!(mc_ensemble(&broken, &init, 1.0, &ok), Err(Error::Domain(_))));
}

#[test]
fn runaway_trajectories_are_reported() {
    let model = LinearModel {
        a: Matrix5::from_diagonal(&Vector5::new(300.0, 300.0, 300.0, 300.0, -1.0)),
        n: Matrix5::zeros(),
        switches: Switches::ALL_OFF,
    };
    let init = MomentState::new(Vector5::repeat(1.0), Matrix5::zeros());
    let r = mc_ensemble(
        &model,
        &init,
        10.0,
        &Sampling {
            seed: 0,
            n_traj: 100,
            dt: 0.01,
        },
    );
    assert!(matches!(r, Err(Error::TrajectoryDivergence { .. })), "{r:?}");
}

proptest! {
    #[test]
    fn pairwise_sum_matches_naive_sum(x in prop::collection::vec(-1e3..1e3f64, 0..300)) {
        let naive: f64 = x.iter().sum();
        prop_assert!((pairwise_sum(&x) - naive).abs() <= 1e-9 * (1.0 + x.iter().map(|v| v.abs()).sum::<f64>()));
    }

    #[test]
    fn standard_error_of_constant_is_zero(c in -10.0..10.0f64, n in 2usize..50) {
        let (m, se) = mean_and_se(&vec![c; n]);
        prop_assert!((m - c).abs() <= 1e-12 * (1.0 + c.abs()));
        prop_assert!(se.abs() <= 1e-12 * (1.0 + c.abs()));
    }
}
