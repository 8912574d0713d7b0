//! Geometry and Gaussian machinery for the space of n x n Hermitian
//! positive definite matrices with the affine-invariant metric
//! `ds^2 = tr[(Y^-1 dY)^2]`.
//!
//! The distance is `d(X,Y) = ||log(X^-1/2 Y X^-1/2)||_F`, invariant under
//! congruence `Y -> g Y g^H`. In polar coordinates `Y = U e^r U^H` the
//! radial density of a Gaussian centred at the identity is
//! `p(r) ~ exp(-|r|^2 / 2 sigma^2) prod_{i<j} sinh^2(|r_i - r_j| / 2)`,
//! and the normalizing factor is estimated by importance sampling against
//! N(0, sigma^2 I) in log space (an overall constant is always dropped).

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matfun::{self, CMat};
use crate::rng::{self, Stream};

/// A validated Hermitian positive definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianPd {
    mat: CMat,
}

impl HermitianPd {
    pub fn new(mat: CMat) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows().max(1),
                got: mat.ncols(),
            });
        }
        matfun::check_hermitian(&mat)?;
        let (vals, _) = matfun::hermitian_eigen(&mat)?;
        let min_eig = vals.min();
        if min_eig <= 0.0 {
            return Err(Error::NotPositiveDefinite { min_eig });
        }
        Ok(Self { mat })
    }

    /// Skips validation; for internal use where positivity is structural.
    pub(crate) fn new_unchecked(mat: CMat) -> Self {
        Self { mat }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            mat: matfun::identity(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn sqrt(&self) -> CMat {
        matfun::hermitian_matfun(&self.mat, f64::sqrt).expect("PD matrix has a square root")
    }

    pub fn inv_sqrt(&self) -> CMat {
        matfun::hermitian_matfun(&self.mat, |x| 1.0 / x.sqrt()).expect("PD matrix is invertible")
    }

    pub fn log(&self) -> CMat {
        matfun::hermitian_matfun(&self.mat, f64::ln).expect("PD matrix has a logarithm")
    }
}

fn check_same_dim(x: &HermitianPd, y: &HermitianPd) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: y.dim(),
        });
    }
    Ok(())
}

/// Affine-invariant distance `sqrt(tr log^2(X^-1/2 Y X^-1/2))`.
pub fn distance(x: &HermitianPd, y: &HermitianPd) -> Result<f64> {
    check_same_dim(x, y)?;
    let xi = x.inv_sqrt();
    let mid = &xi * y.matrix() * &xi;
    let (vals, _) = matfun::hermitian_eigen(&mid)?;
    if vals.min() <= 0.0 {
        return Err(Error::NotPositiveDefinite { min_eig: vals.min() });
    }
    Ok(vals.iter().map(|w| w.ln().powi(2)).sum::<f64>().sqrt())
}

/// Riemannian logarithm `Log_X(Y) = X^1/2 log(X^-1/2 Y X^-1/2) X^1/2`,
/// a Hermitian tangent matrix at `X`.
pub fn log_map(x: &HermitianPd, y: &HermitianPd) -> Result<CMat> {
    check_same_dim(x, y)?;
    let xs = x.sqrt();
    let xi = x.inv_sqrt();
    let mid = &xi * y.matrix() * &xi;
    let logm = matfun::hermitian_matfun(&mid, f64::ln)?;
    Ok(&xs * logm * &xs)
}

/// Riemannian exponential `Exp_X(V) = X^1/2 exp(X^-1/2 V X^-1/2) X^1/2`.
pub fn exp_map(x: &HermitianPd, v: &CMat) -> Result<HermitianPd> {
    matfun::check_hermitian(v)?;
    let xs = x.sqrt();
    let xi = x.inv_sqrt();
    let mid = &xi * v * &xi;
    let expm = matfun::hermitian_matfun(&mid, f64::exp)?;
    Ok(HermitianPd::new_unchecked(&xs * expm * &xs))
}

/// Norm of a tangent vector at `X`: `||X^-1/2 V X^-1/2||_F`.
pub fn tangent_norm(x: &HermitianPd, v: &CMat) -> f64 {
    let xi = x.inv_sqrt();
    matfun::frobenius(&(&xi * v * &xi))
}

/// Congruence action `g . Y = g Y g^H` of an invertible matrix.
pub fn group_action(g: &CMat, y: &HermitianPd) -> Result<HermitianPd> {
    if g.nrows() != y.dim() || g.ncols() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: y.dim(),
            got: g.nrows(),
        });
    }
    if g.determinant().norm() < 1e-14 {
        return Err(Error::NotInGroup { residual: f64::INFINITY });
    }
    Ok(HermitianPd::new_unchecked(g * y.matrix() * g.adjoint()))
}

/// Log of the unnormalized radial density of G(I, sigma) in polar
/// coordinates; -inf when two log-eigenvalues coincide.
pub fn log_polar_density(r: &[f64], sigma: f64) -> f64 {
    let mut acc = -r.iter().map(|v| v * v).sum::<f64>() / (2.0 * sigma * sigma);
    let n = r.len();
    for i in 0..n {
        for j in i + 1..n {
            let d = (r[i] - r[j]).abs();
            if d == 0.0 {
                return f64::NEG_INFINITY;
            }
            acc += 2.0 * log_sinh(0.5 * d);
        }
    }
    acc
}

/// Numerically stable log(sinh(x)) for x > 0.
pub fn log_sinh(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    x + (-(-2.0 * x).exp()).ln_1p() - std::f64::consts::LN_2
}

/// Monte Carlo estimate of the radial integral
/// `int exp(-|r|^2/2s^2) prod_{i<j} sinh^2(|r_i-r_j|/2) dr`
/// by importance sampling with proposal N(0, sigma^2 I_n).
///
/// Returns `(log of the integral, standard error of the log)`. The
/// manifold-wide constant C multiplying the integral is never evaluated.
pub fn z_montecarlo(n: usize, sigma: f64, samples: u64, seed: u64) -> Result<(f64, f64)> {
    if sigma <= 0.0 {
        return Err(Error::InvalidParameter("sigma must be positive".into()));
    }
    if samples < 1_000 {
        return Err(Error::InvalidParameter(
            "Monte Carlo needs at least 1000 samples".into(),
        ));
    }
    let log_weight = move |z: &[f64]| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let d = sigma * (z[i] - z[j]).abs();
                if d == 0.0 {
                    return f64::NEG_INFINITY;
                }
                acc += 2.0 * log_sinh(0.5 * d);
            }
        }
        acc
    };
    let (mean_log, stderr_log) = log_mean_stderr(n, samples, seed, log_weight);
    let log_const = 0.5 * n as f64 * (2.0 * std::f64::consts::PI * sigma * sigma).ln();
    Ok((log_const + mean_log, stderr_log))
}

/// Batched log-mean-exp estimator shared by the HPD and Siegel Z
/// integrals: draws standard normal vectors z, evaluates `log_weight(z)`,
/// and returns the log of the sample mean of the weights together with a
/// batch-means standard error of that log. Batches have fixed seeds and a
/// deterministic reduction order, so the result does not depend on the
/// number of threads.
pub(crate) fn log_mean_stderr<F>(dim: usize, samples: u64, seed: u64, log_weight: F) -> (f64, f64)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    const BATCHES: u64 = 64;
    let per_batch = samples.div_ceil(BATCHES);
    let batch_logs: Vec<(f64, u64)> = (0..BATCHES)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng::substream(seed, b);
            let mut z = vec![0.0; dim];
            let mut max = f64::NEG_INFINITY;
            let mut logs = Vec::with_capacity(per_batch as usize);
            for _ in 0..per_batch {
                for zi in z.iter_mut() {
                    *zi = rng::standard_normal(&mut rng);
                }
                let lw = log_weight(&z);
                if lw > max {
                    max = lw;
                }
                logs.push(lw);
            }
            if max == f64::NEG_INFINITY {
                return (f64::NEG_INFINITY, per_batch);
            }
            let sum: f64 = logs.iter().map(|l| (l - max).exp()).sum();
            (max + (sum / per_batch as f64).ln(), per_batch)
        })
        .collect();

    // log of the overall mean (batches have equal weight)
    let max = batch_logs
        .iter()
        .fold(f64::NEG_INFINITY, |m, &(l, _)| m.max(l));
    let mean_of_means: f64 =
        batch_logs.iter().map(|&(l, _)| (l - max).exp()).sum::<f64>() / BATCHES as f64;
    let log_mean = max + mean_of_means.ln();

    // batch-means stderr on the log scale
    let var: f64 = batch_logs
        .iter()
        .map(|&(l, _)| {
            let d = (l - max).exp() - mean_of_means;
            d * d
        })
        .sum::<f64>()
        / (BATCHES as f64 - 1.0);
    let stderr_log = (var / BATCHES as f64).sqrt() / mean_of_means;
    (log_mean, stderr_log)
}

/// Random-walk Metropolis configuration for the polar radial densities.
#[derive(Debug, Clone, Copy)]
pub struct MhConfig {
    /// Proposal standard deviation as a multiple of sigma.
    pub proposal_scale: f64,
    pub burn_in: usize,
    pub thinning: usize,
}

impl Default for MhConfig {
    fn default() -> Self {
        Self {
            proposal_scale: 0.5,
            burn_in: 1000,
            thinning: 10,
        }
    }
}

/// Diagnostics of one Metropolis run.
#[derive(Debug, Clone, Copy)]
pub struct MhDiagnostics {
    pub acceptance_rate: f64,
}

impl MhDiagnostics {
    /// Flags chains whose acceptance rate left the healthy window.
    pub fn healthy(&self) -> bool {
        (0.1..=0.7).contains(&self.acceptance_rate)
    }
}

/// Generic random-walk Metropolis chain over R^d vectors; yields
/// `count` states after burn-in, separated by `thinning` steps.
///
/// The step size adapts towards a 0.35 acceptance rate during the first
/// half of burn-in and is frozen afterwards, so collected states come
/// from a time-homogeneous chain. The reported acceptance rate covers
/// only the post-adaptation steps.
pub(crate) fn metropolis_chain<F>(
    dim: usize,
    count: usize,
    sigma: f64,
    cfg: MhConfig,
    rng: &mut Stream,
    log_density: F,
) -> (Vec<Vec<f64>>, MhDiagnostics)
where
    F: Fn(&[f64]) -> f64,
{
    let mut step = cfg.proposal_scale * sigma;
    let adapt_until = cfg.burn_in / 2;
    // start from a spread draw so distinct coordinates break density zeros
    let mut state: Vec<f64> = (0..dim).map(|_| sigma * rng::standard_normal(rng)).collect();
    let mut logp = log_density(&state);
    let mut accepted = 0u64;
    let mut total = 0u64;
    let mut window_accepted = 0u64;
    let mut window_total = 0u64;
    let mut out = Vec::with_capacity(count);
    let mut proposal = vec![0.0; dim];
    let total_steps = cfg.burn_in + count * cfg.thinning;
    for it in 0..total_steps {
        for (p, s) in proposal.iter_mut().zip(&state) {
            *p = s + step * rng::standard_normal(rng);
        }
        let lp = log_density(&proposal);
        let accept = lp - logp >= 0.0 || rng.gen::<f64>().ln() < lp - logp;
        if accept {
            state.copy_from_slice(&proposal);
            logp = lp;
        }
        if it < adapt_until {
            window_total += 1;
            window_accepted += accept as u64;
            if window_total == 50 {
                let rate = window_accepted as f64 / window_total as f64;
                step = (step * (1.2 * (rate - 0.35)).exp())
                    .clamp(1e-3 * sigma, 10.0 * sigma);
                window_total = 0;
                window_accepted = 0;
            }
        } else {
            total += 1;
            accepted += accept as u64;
        }
        if it >= cfg.burn_in && (it - cfg.burn_in) % cfg.thinning == cfg.thinning - 1 {
            out.push(state.clone());
        }
    }
    (
        out,
        MhDiagnostics {
            acceptance_rate: accepted as f64 / total.max(1) as f64,
        },
    )
}

/// Draws of the log-eigenvalue vector of G(I, sigma); exact for n = 1,
/// Metropolis otherwise.
pub fn sample_polar_r(
    n: usize,
    sigma: f64,
    count: usize,
    cfg: MhConfig,
    rng: &mut Stream,
) -> (Vec<Vec<f64>>, MhDiagnostics) {
    if n == 1 {
        let out = (0..count)
            .map(|_| vec![sigma * rng::standard_normal(rng)])
            .collect();
        return (out, MhDiagnostics { acceptance_rate: 1.0 });
    }
    metropolis_chain(n, count, sigma, cfg, rng, |r| log_polar_density(r, sigma))
}

/// One sample from the Gaussian G(centre, sigma): Haar unitary, radial
/// draw, spectral reassembly, congruence by centre^1/2.
pub fn sample(centre: &HermitianPd, sigma: f64, rng: &mut Stream) -> Result<HermitianPd> {
    let mut out = sample_many(centre, sigma, 1, MhConfig::default(), rng)?;
    Ok(out.0.pop().unwrap())
}

/// Bulk sampler sharing one Metropolis chain across draws.
pub fn sample_many(
    centre: &HermitianPd,
    sigma: f64,
    count: usize,
    cfg: MhConfig,
    rng: &mut Stream,
) -> Result<(Vec<HermitianPd>, MhDiagnostics)> {
    if sigma <= 0.0 {
        return Err(Error::InvalidParameter("sigma must be positive".into()));
    }
    let n = centre.dim();
    let (radials, diag) = sample_polar_r(n, sigma, count, cfg, rng);
    let cs = centre.sqrt();
    let out = radials
        .into_iter()
        .map(|r| {
            let u = matfun::sample_unitary(n, rng);
            let e = CMat::from_diagonal(&DVector::from_iterator(
                n,
                r.iter().map(|&v| Complex64::new(v.exp(), 0.0)),
            ));
            let y = &u * e * u.adjoint();
            HermitianPd::new_unchecked(&cs * y * cs.adjoint())
        })
        .collect();
    Ok((out, diag))
}
