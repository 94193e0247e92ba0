//! Trajectory-level Monte Carlo: the Ornstein-Uhlenbeck phase-noise process
//! and ensembles of the full linear SDE.
//!
//! Random numbers come from ChaCha8 with one stream per trajectory (stream id
//! = trajectory index), so results do not depend on scheduling. Normals use
//! the ziggurat sampler of `rand_distr::StandardNormal`.

use crate::dynamics::{LinearModel, MomentState, PSI};
use crate::error::{Error, Result};
use crate::scalar::Real;
use nalgebra::{Matrix5, Vector5};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::num_complex::Complex as FftComplex;
use rustfft::FftPlanner;

/// Seed, ensemble size and step of a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampling<T> {
    pub seed: u64,
    pub n_traj: usize,
    pub dt: T,
}

/// Phase-noise process ψ̇ = −γ_c ψ + ε with ⟨ε(t)ε(t')⟩ = 2γ_c²Γ_L δ(t − t').
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec<T> {
    pub gamma_c: T,
    pub gamma_l: T,
    pub sampling: Sampling<T>,
}

fn check_sampling<T: Real>(s: &Sampling<T>, fastest_decay: T) -> Result<()> {
    if s.n_traj < 100 {
        return Err(Error::Precondition(format!(
            "n_traj must be at least 100, got {}",
            s.n_traj
        )));
    }
    if !(s.dt > T::zero()) {
        return Err(Error::Precondition(format!("dt must be positive, got {}", s.dt)));
    }
    if !(s.dt * fastest_decay < T::lit(0.1)) {
        return Err(Error::Precondition(format!(
            "dt * gamma_c = {} does not resolve the correlation time (needs < 0.1)",
            s.dt * fastest_decay
        )));
    }
    Ok(())
}

impl<T: Real> NoiseSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_c >= T::zero()) || !(self.gamma_l >= T::zero()) {
            return Err(Error::Domain("gamma_c and Gamma_L must be non-negative".into()));
        }
        check_sampling(&self.sampling, self.gamma_c)
    }
}

fn stream<T>(s: &Sampling<T>, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    rng.set_stream(index as u64);
    rng
}

fn normal<T: Real>(rng: &mut ChaCha8Rng) -> T {
    T::lit(rng.sample::<f64, _>(StandardNormal))
}

/// Sampled ψ paths on a common time grid t_k = k·dt.
#[derive(Debug, Clone, PartialEq)]
pub struct OuEnsemble<T> {
    pub gamma_c: T,
    pub gamma_l: T,
    pub dt: T,
    pub paths: Vec<Vec<T>>,
}

impl<T: Real> OuEnsemble<T> {
    pub fn len(&self) -> usize {
        self.paths.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Ensemble estimate of ⟨ψ(t_k) ψ(t_{k+lag})⟩ and its standard error.
    pub fn correlation(&self, k: usize, lag: usize) -> (T, T) {
        let prods: Vec<T> = self.paths.iter().map(|p| p[k] * p[k + lag]).collect();
        mean_and_se(&prods)
    }
}

/// Mean and standard error of a sample.
pub fn mean_and_se<T: Real>(x: &[T]) -> (T, T) {
    let n = T::usize(x.len());
    let m = pairwise_sum(x) / n;
    let dev: Vec<T> = x.iter().map(|v| (*v - m) * (*v - m)).collect();
    let var = pairwise_sum(&dev) / (n - T::one());
    (m, (var / n).sqrt())
}

/// Pairwise summation; the result depends only on the order of `x`.
pub fn pairwise_sum<T: Real>(x: &[T]) -> T {
    if x.len() <= 8 {
        return x.iter().fold(T::zero(), |a, b| a + *b);
    }
    let (l, r) = x.split_at(x.len() / 2);
    pairwise_sum(l) + pairwise_sum(r)
}

/// Euler-Maruyama paths of ψ started from the stationary law N(0, γ_cΓ_L).
pub fn sample_ou<T: Real>(spec: &NoiseSpec<T>, duration: T) -> Result<OuEnsemble<T>> {
    spec.validate()?;
    let s = &spec.sampling;
    let steps = (duration / s.dt).ceil().to_usize().unwrap_or(0);
    let sd0 = (spec.gamma_c * spec.gamma_l).sqrt();
    let kick = (T::lit(2.0) * spec.gamma_c * spec.gamma_c * spec.gamma_l * s.dt).sqrt();
    let decay = T::one() - spec.gamma_c * s.dt;
    let paths = (0..s.n_traj)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(s, i);
            let mut path = Vec::with_capacity(steps + 1);
            let mut psi = sd0 * normal::<T>(&mut rng);
            path.push(psi);
            for _ in 0..steps {
                psi = decay * psi + kick * normal::<T>(&mut rng);
                path.push(psi);
            }
            path
        })
        .collect();
    Ok(OuEnsemble {
        gamma_c: spec.gamma_c,
        gamma_l: spec.gamma_l,
        dt: s.dt,
        paths,
    })
}

/// Two-sided power spectral density on ω_k = 2πk/(N dt).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    pub omega: Vec<T>,
    pub density: Vec<T>,
}

/// Averaged periodogram S_k = (dt/N) |Σ_n ψ_n e^{−iω_k n dt}|², up to 10 γ_c.
pub fn estimate_spectrum<T: Real>(ensemble: &OuEnsemble<T>) -> Result<Spectrum<T>> {
    let n = ensemble.len();
    let span = ensemble.dt * T::usize(n);
    if ensemble.paths.is_empty() || !(span * ensemble.gamma_c >= T::lit(100.0)) {
        return Err(Error::Precondition(format!(
            "trajectory length {span} s is shorter than 100/gamma_c"
        )));
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let dt = ensemble.dt.f64();
    let omega_max = 10.0 * ensemble.gamma_c.f64();
    let bins = ((omega_max * n as f64 * dt / std::f64::consts::TAU).floor() as usize + 1).min(n / 2 + 1);
    let per_path: Vec<Vec<f64>> = ensemble
        .paths
        .par_iter()
        .map(|p| {
            let mut buf: Vec<FftComplex<f64>> = p.iter().map(|x| FftComplex::new(x.f64(), 0.0)).collect();
            fft.process(&mut buf);
            buf[..bins].iter().map(|z| z.norm_sqr() * dt / n as f64).collect()
        })
        .collect();
    let m = per_path.len() as f64;
    let density = (0..bins)
        .map(|k| {
            let col: Vec<f64> = per_path.iter().map(|row| row[k]).collect();
            T::lit(pairwise_sum(&col) / m)
        })
        .collect();
    let omega = (0..bins)
        .map(|k| T::lit(std::f64::consts::TAU * k as f64 / (n as f64 * dt)))
        .collect();
    Ok(Spectrum { omega, density })
}

/// Sample moments of an ensemble at the final time, with standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate<T: Real> {
    pub n_traj: usize,
    pub mean: Vector5<T>,
    pub cov: Matrix5<T>,
    pub mean_se: Vector5<T>,
    /// Standard error of each covariance element, sd((u_i − m_i)(u_j − m_j))/√n.
    pub cov_se: Matrix5<T>,
}

/// Symmetric square root of a positive semidefinite matrix.
fn psd_sqrt<T: Real>(v: &Matrix5<T>) -> Matrix5<T> {
    let eig = ((v + v.transpose()) * T::lit(0.5)).symmetric_eigen();
    let d = Matrix5::from_diagonal(&eig.eigenvalues.map(|x| x.max(T::zero()).sqrt()));
    eig.eigenvectors * d * eig.eigenvectors.transpose()
}

/// Ensemble of the SDE u̇ = A u + n(t) with ⟨n_i(t) n_j(t')⟩ = N_ij δ(t − t').
///
/// Exponential Euler-Maruyama: the drift is propagated exactly with e^{A h}
/// and each step's noise increment √(N_ii h) z_i enters at the half step,
/// u ← e^{Ah} u + e^{Ah/2} √(N h) z. Initial states are drawn from
/// N(init.mean, init.cov).
pub fn mc_ensemble<T: Real>(
    model: &LinearModel<T>,
    init: &MomentState<T>,
    duration: T,
    sampling: &Sampling<T>,
) -> Result<McEstimate<T>> {
    check_sampling(sampling, model.a[(PSI, PSI)].abs())?;
    if model.a.iter().chain(model.n.iter()).any(|x| !x.is_finite()) {
        return Err(Error::Domain("model has non-finite entries".into()));
    }
    let steps = (duration / sampling.dt).ceil().to_usize().unwrap_or(0);
    let h = if steps > 0 {
        duration / T::usize(steps)
    } else {
        T::zero()
    };
    let phi = (model.a * h).exp();
    let phi_half = (model.a * (h / T::lit(2.0))).exp();
    let sigma = model.n.diagonal().map(|x| (x.max(T::zero()) * h).sqrt());
    let kick = phi_half * Matrix5::from_diagonal(&sigma);
    let root = psd_sqrt(&init.cov);

    let finals: Vec<Vector5<T>> = (0..sampling.n_traj)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(sampling, i);
            let mut draw = || Vector5::from_fn(|_, _| normal::<T>(&mut rng));
            let mut u = init.mean + root * draw();
            for k in 0..steps {
                u = phi * u + kick * draw();
                if !u.iter().all(|x| x.is_finite()) {
                    return Err(Error::TrajectoryDivergence {
                        index: i,
                        time: (h * T::usize(k + 1)).f64(),
                    });
                }
            }
            Ok(u)
        })
        .collect::<Result<_>>()?;
    Ok(moments(&finals))
}

fn moments<T: Real>(u: &[Vector5<T>]) -> McEstimate<T> {
    let n = T::usize(u.len());
    let mean = Vector5::from_fn(|i, _| pairwise_sum(&u.iter().map(|v| v[i]).collect::<Vec<_>>()) / n);
    let mut cov = Matrix5::zeros();
    let mut cov_se = Matrix5::zeros();
    for i in 0..5 {
        for j in i..5 {
            let prods: Vec<T> = u.iter().map(|v| (v[i] - mean[i]) * (v[j] - mean[j])).collect();
            let s = pairwise_sum(&prods);
            let c = s / (n - T::one());
            let m = s / n;
            let dev: Vec<T> = prods.iter().map(|p| (*p - m) * (*p - m)).collect();
            let se = (pairwise_sum(&dev) / (n - T::one()) / n).sqrt();
            cov[(i, j)] = c;
            cov[(j, i)] = c;
            cov_se[(i, j)] = se;
            cov_se[(j, i)] = se;
        }
    }
    let mean_se = Vector5::from_fn(|i, _| (cov[(i, i)] / n).sqrt());
    McEstimate {
        n_traj: u.len(),
        mean,
        cov,
        mean_se,
        cov_se,
    }
}
