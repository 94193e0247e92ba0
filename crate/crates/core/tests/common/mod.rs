#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex;
use optomech::{EffectiveParams, PhysicalParams};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Hand-built effective parameters: no optical squeezing, so |α|e^{−r} = `alpha_e_minus_r`.
pub fn custom_effective(
    delta_e: f64,
    delta_m: f64,
    coupling: f64,
    alpha_e_minus_r: f64,
    r_m: f64,
) -> EffectiveParams<f64> {
    let mut e = EffectiveParams::undriven(delta_e, delta_m);
    e.alpha = Complex::new(alpha_e_minus_r, 0.0);
    e.g = coupling;
    e.coupling = coupling;
    e.r_m = r_m;
    e.r_prime = r_m;
    e.lambda = (-2.0 * r_m).exp();
    e
}

pub fn custom_params(kappa: f64, gamma_m: f64, gamma_c: f64, gamma_l: f64, n_th: f64) -> PhysicalParams<f64> {
    let mut p = PhysicalParams::linear(1.0, gamma_m, kappa, 0.0);
    p.gamma_c = gamma_c;
    p.gamma_l = gamma_l;
    p.n_th = n_th;
    p
}

/// Random model in units of `scale`; rates are log-uniform.
pub fn random_model(rng: &mut ChaCha8Rng) -> (EffectiveParams<f64>, PhysicalParams<f64>) {
    let scale = 10f64.powf(rng.random_range(0.0..8.0));
    let log = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| 10f64.powf(rng.random_range(lo..hi)) * scale;
    let delta_e = rng.random_range(0.2..2.0) * scale;
    let delta_m = rng.random_range(0.2..2.0) * scale;
    let coupling = rng.random_range(0.0..1.2) * (delta_e * delta_m).sqrt();
    let kappa = log(rng, -2.0, 0.0);
    let gamma_m = log(rng, -7.0, -1.0);
    let gamma_c = log(rng, -4.0, 0.0);
    let gamma_l = log(rng, -4.0, 0.0);
    let amp = rng.random_range(0.0..10.0);
    let r_m = rng.random_range(0.0..2.0);
    let n_th = rng.random_range(0.0..10.0);
    (
        custom_effective(delta_e, delta_m, coupling, amp, r_m),
        custom_params(kappa, gamma_m, gamma_c, gamma_l, n_th),
    )
}

pub fn dyn5(m: &nalgebra::Matrix5<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(5, 5, |i, j| m[(i, j)])
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
