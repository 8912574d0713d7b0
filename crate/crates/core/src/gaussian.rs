//! The Gaussian distribution G(centre, sigma) on a symmetric space:
//! normalizing-factor tables, the convex conjugate machinery behind
//! maximum likelihood, log densities, entropy, sampling, and fitting.
//!
//! All log Z values are stored up to a manifold-wide additive constant
//! (`constant_dropped`). Every consumer in this crate (densities,
//! classifier, EM, BIC comparisons) is invariant to that constant.
//!
//! In the natural parameter eta = -1/(2 sigma^2), psi(eta) = log Z is
//! strictly convex and psi'(eta) equals the expected squared distance to
//! the centre. Fitting sigma from a mean squared distance rho solves
//! psi'(eta) = rho for the unique eta, which is the map Phi of the
//! maximum-likelihood estimator.

use serde::{Deserialize, Serialize};

use crate::block_toeplitz::{self, siegel_z_montecarlo};
use crate::error::{Error, Result};
use crate::hpd::{self, MhConfig};
use crate::interp::MonotoneCubic;
use crate::manifold::{
    self, barycentre_report, BarycentreCfg, ManifoldId, ManifoldPoint, PointPayload,
};
use crate::rng;
use crate::toeplitz;

/// Parameters of one Gaussian distribution.
#[derive(Debug, Clone)]
pub struct GaussianParams {
    pub center: ManifoldPoint,
    pub sigma: f64,
}

impl GaussianParams {
    pub fn new(center: ManifoldPoint, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be positive and finite, got {sigma}"
            )));
        }
        Ok(Self { center, sigma })
    }
}

pub fn eta_of_sigma(sigma: f64) -> f64 {
    -0.5 / (sigma * sigma)
}

pub fn sigma_of_eta(eta: f64) -> f64 {
    (-0.5 / eta).sqrt()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McMeta {
    pub samples: u64,
    pub seed: u64,
    /// Standard error of each log Z entry.
    pub stderr: Vec<f64>,
}

/// Tabulated log Z(sigma) and psi'(eta) for one manifold.
///
/// `psi_prime` holds the derivative of the monotone cubic interpolant of
/// log Z against eta at the grid nodes; it is positive and strictly
/// increasing on every accepted table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ZTableRepr", into = "ZTableRepr")]
pub struct ZTable {
    manifold: ManifoldId,
    sigma: Vec<f64>,
    log_z: Vec<f64>,
    psi_prime: Vec<f64>,
    constant_dropped: bool,
    mc: Option<McMeta>,
    interp: MonotoneCubic,
}

#[derive(Serialize, Deserialize)]
struct ZTableRepr {
    schema_version: u32,
    manifold: ManifoldId,
    constant_dropped: bool,
    sigma: Vec<f64>,
    log_z: Vec<f64>,
    psi_prime: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mc: Option<McMeta>,
}

pub const ZTABLE_SCHEMA_VERSION: u32 = 1;

impl From<ZTable> for ZTableRepr {
    fn from(t: ZTable) -> Self {
        ZTableRepr {
            schema_version: ZTABLE_SCHEMA_VERSION,
            manifold: t.manifold,
            constant_dropped: t.constant_dropped,
            sigma: t.sigma,
            log_z: t.log_z,
            psi_prime: t.psi_prime,
            mc: t.mc,
        }
    }
}

impl TryFrom<ZTableRepr> for ZTable {
    type Error = Error;

    fn try_from(r: ZTableRepr) -> Result<Self> {
        if r.schema_version != ZTABLE_SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                got: r.schema_version,
                supported: ZTABLE_SCHEMA_VERSION,
            });
        }
        ZTable::assemble(r.manifold, r.sigma, r.log_z, r.mc, Some(r.psi_prime))
    }
}

impl ZTable {
    /// Default grid: 60 log-spaced sigmas in [0.05, 3.0].
    pub fn default_grid() -> Vec<f64> {
        log_grid(0.05, 3.0, 60)
    }

    pub fn manifold(&self) -> ManifoldId {
        self.manifold
    }

    pub fn sigma_grid(&self) -> &[f64] {
        &self.sigma
    }

    pub fn log_z_values(&self) -> &[f64] {
        &self.log_z
    }

    pub fn psi_prime_values(&self) -> &[f64] {
        &self.psi_prime
    }

    pub fn constant_dropped(&self) -> bool {
        self.constant_dropped
    }

    pub fn mc_meta(&self) -> Option<&McMeta> {
        self.mc.as_ref()
    }

    pub fn sigma_range(&self) -> (f64, f64) {
        (self.sigma[0], *self.sigma.last().unwrap())
    }

    /// Range of mean squared distances representable by this table.
    pub fn rho_range(&self) -> (f64, f64) {
        (self.psi_prime[0], *self.psi_prime.last().unwrap())
    }

    fn check_sigma(&self, sigma: f64) -> Result<()> {
        let (lo, hi) = self.sigma_range();
        if !(sigma >= lo && sigma <= hi) {
            return Err(Error::SigmaOutOfRange {
                sigma,
                min: lo,
                max: hi,
            });
        }
        Ok(())
    }

    /// Interpolated log Z(sigma), up to the dropped constant.
    pub fn log_z_at(&self, sigma: f64) -> Result<f64> {
        self.check_sigma(sigma)?;
        Ok(self.interp.value(eta_of_sigma(sigma)))
    }

    /// Interpolated psi'(eta) evaluated at sigma.
    pub fn psi_prime_at(&self, sigma: f64) -> Result<f64> {
        self.check_sigma(sigma)?;
        Ok(self.interp.derivative(eta_of_sigma(sigma)))
    }

    fn assemble(
        manifold: ManifoldId,
        sigma: Vec<f64>,
        log_z: Vec<f64>,
        mc: Option<McMeta>,
        psi_prime: Option<Vec<f64>>,
    ) -> Result<Self> {
        manifold.validate()?;
        if sigma.len() != log_z.len() || sigma.len() < 4 {
            return Err(Error::InvalidParameter(
                "table needs at least 4 grid points with matching value count".into(),
            ));
        }
        if sigma.iter().any(|&s| !(s > 0.0)) || sigma.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "sigma grid must be positive and strictly increasing".into(),
            ));
        }
        let eta: Vec<f64> = sigma.iter().map(|&s| eta_of_sigma(s)).collect();

        // convexity of log Z against eta, with Monte Carlo slack
        for i in 1..eta.len() - 1 {
            let h0 = eta[i] - eta[i - 1];
            let h1 = eta[i + 1] - eta[i];
            let second =
                2.0 * ((log_z[i + 1] - log_z[i]) / h1 - (log_z[i] - log_z[i - 1]) / h0) / (h0 + h1);
            let slack = match &mc {
                Some(meta) => {
                    let se = meta.stderr[i - 1].max(meta.stderr[i]).max(meta.stderr[i + 1]);
                    3.0 * se * 2.0 / h0.min(h1).powi(2) * h0.min(h1) // 3 se on values, scaled
                }
                None => 0.0,
            };
            if second <= -slack {
                return Err(Error::ConvexityViolation { index: i });
            }
        }

        let interp = MonotoneCubic::new(eta.clone(), log_z.clone())?;
        let psi_prime = match psi_prime {
            Some(p) => p,
            None => interp.node_slopes().to_vec(),
        };
        if psi_prime.len() != sigma.len()
            || psi_prime.iter().any(|&p| !(p > 0.0))
            || psi_prime.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::InvalidParameter(
                "psi' must be positive and strictly increasing; increase mc samples".into(),
            ));
        }
        Ok(Self {
            manifold,
            sigma,
            log_z,
            psi_prime,
            constant_dropped: true,
            mc,
            interp,
        })
    }
}

pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let ratio = (hi / lo).ln() / (count - 1) as f64;
    (0..count).map(|i| lo * (ratio * i as f64).exp()).collect()
}

/// Builds the Z-table for a manifold: analytic for Toeplitz, Monte Carlo
/// for HPD and for the Siegel factors of block-Toeplitz. Every Monte
/// Carlo entry reuses the same seed, so the estimated curve is smooth in
/// sigma and its interpolant differentiates cleanly.
pub fn build_ztable(
    manifold: ManifoldId,
    grid: &[f64],
    mc_samples: u64,
    seed: u64,
) -> Result<ZTable> {
    manifold.validate()?;
    let sigma = grid.to_vec();
    match manifold {
        ManifoldId::Toeplitz { n } => {
            let log_z = sigma
                .iter()
                .map(|&s| toeplitz::log_z(n, s))
                .collect::<Result<Vec<_>>>()?;
            ZTable::assemble(manifold, sigma, log_z, None, None)
        }
        ManifoldId::Hpd { n } => {
            let mut log_z = Vec::with_capacity(sigma.len());
            let mut stderr = Vec::with_capacity(sigma.len());
            for &s in &sigma {
                let (v, se) = hpd::z_montecarlo(n, s, mc_samples, seed)?;
                check_stderr_budget(se)?;
                log_z.push(v);
                stderr.push(se);
            }
            ZTable::assemble(
                manifold,
                sigma,
                log_z,
                Some(McMeta {
                    samples: mc_samples,
                    seed,
                    stderr,
                }),
                None,
            )
        }
        ManifoldId::BlockToeplitz { n, block } => {
            let mut log_z = Vec::with_capacity(sigma.len());
            let mut stderr = Vec::with_capacity(sigma.len());
            for &s in &sigma {
                let (v, se) = block_toeplitz::block_log_z(n, block, s, |disc_sigma| {
                    siegel_z_montecarlo(block, disc_sigma, mc_samples, seed)
                })?;
                check_stderr_budget(se)?;
                log_z.push(v);
                stderr.push(se);
            }
            ZTable::assemble(
                manifold,
                sigma,
                log_z,
                Some(McMeta {
                    samples: mc_samples,
                    seed,
                    stderr,
                }),
                None,
            )
        }
    }
}

fn check_stderr_budget(se: f64) -> Result<()> {
    // stderr on log Z directly bounds the relative error of Z
    const BUDGET: f64 = 0.10;
    if !se.is_finite() || se > BUDGET {
        return Err(Error::McPrecision {
            rel_stderr: se,
            budget: BUDGET,
        });
    }
    Ok(())
}

/// Log density of G(params) at `x`, up to the table's dropped constant:
/// -log Z(sigma) - d^2(x, centre) / (2 sigma^2).
pub fn log_pdf(x: &ManifoldPoint, params: &GaussianParams, table: &ZTable) -> Result<f64> {
    if x.manifold() != table.manifold() || params.center.manifold() != table.manifold() {
        return Err(Error::ManifoldMismatch(
            x.manifold().describe(),
            table.manifold().describe(),
        ));
    }
    let d2 = manifold::distance_sq(x, &params.center)?;
    Ok(-table.log_z_at(params.sigma)? - d2 / (2.0 * params.sigma * params.sigma))
}

/// The map Phi: mean squared distance rho to the maximum-likelihood
/// sigma, by solving psi'(eta) = rho on the table.
pub fn phi(rho: f64, table: &ZTable) -> Result<f64> {
    let (lo, hi) = table.rho_range();
    if !(rho > 0.0) {
        return Err(Error::DegenerateFit);
    }
    if rho < lo || rho > hi {
        return Err(Error::RhoOutOfRange { rho, min: lo, max: hi });
    }
    // locate bracketing nodes by the stored strictly increasing psi'
    let idx = table
        .psi_prime
        .partition_point(|&p| p < rho)
        .clamp(1, table.psi_prime.len() - 1);
    let mut a = eta_of_sigma(table.sigma[idx - 1]);
    let mut b = eta_of_sigma(table.sigma[idx]);
    let f = |eta: f64| table.interp.derivative(eta) - rho;
    let (mut fa, fb) = (f(a), f(b));
    if fa > 0.0 && fb > 0.0 || fa < 0.0 && fb < 0.0 {
        // interior wiggle of the piecewise quadratic; widen to full range
        a = eta_of_sigma(table.sigma[0]);
        b = eta_of_sigma(*table.sigma.last().unwrap());
        fa = f(a);
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm.abs() < 1e-14 * rho.max(1.0) || (b - a).abs() < 1e-15 * a.abs().max(1e-300) {
            return Ok(sigma_of_eta(m));
        }
        if (fa <= 0.0) == (fm <= 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(sigma_of_eta(0.5 * (a + b)))
}

/// Entropy of G(., sigma) in the sense of the expected log density:
/// psi*(rho) = eta rho - psi(eta) at rho = psi'(eta), up to the dropped
/// constant.
pub fn entropy(sigma: f64, table: &ZTable) -> Result<f64> {
    let eta = eta_of_sigma(sigma);
    let rho = table.psi_prime_at(sigma)?;
    Ok(eta * rho - table.log_z_at(sigma)?)
}

/// Result of a maximum-likelihood fit.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub params: GaussianParams,
    /// Mean squared distance of the samples to the fitted centre.
    pub dispersion: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    /// Residual of psi'(eta_hat) - dispersion at the solved eta.
    pub eta_residual: f64,
}

/// Maximum-likelihood fit: the centre is the Riemannian barycentre, the
/// dispersion maps through Phi to sigma.
pub fn mle_fit(samples: &[ManifoldPoint], table: &ZTable) -> Result<FitReport> {
    mle_fit_weighted(samples, None, table)
}

pub fn mle_fit_weighted(
    samples: &[ManifoldPoint],
    weights: Option<&[f64]>,
    table: &ZTable,
) -> Result<FitReport> {
    if samples.len() < 2 {
        return Err(Error::InvalidParameter(
            "fitting needs at least two samples".into(),
        ));
    }
    for s in samples {
        if s.manifold() != table.manifold() {
            return Err(Error::ManifoldMismatch(
                s.manifold().describe(),
                table.manifold().describe(),
            ));
        }
    }
    let w = manifold::normalize_weights(samples.len(), weights)?;
    let rep = barycentre_report(samples, Some(&w), BarycentreCfg::default())?;
    let mut rho = 0.0;
    for (s, &wi) in samples.iter().zip(&w) {
        if wi > 0.0 {
            rho += wi * manifold::distance_sq(&rep.point, s)?;
        }
    }
    if rho <= 0.0 {
        return Err(Error::DegenerateFit);
    }
    let sigma = phi(rho, table)?;
    let eta_residual = table.psi_prime_at(sigma)? - rho;
    Ok(FitReport {
        params: GaussianParams::new(rep.point, sigma)?,
        dispersion: rho,
        iterations: rep.iterations,
        grad_norm: rep.grad_norm,
        eta_residual,
    })
}

/// Draws `count` samples from G(params); dispatches to the per-space
/// samplers (product factors are sampled independently).
pub fn sample(params: &GaussianParams, count: usize, seed: u64) -> Result<Vec<ManifoldPoint>> {
    let mut stream = rng::stream(seed);
    let cfg = MhConfig::default();
    match params.center.payload() {
        PointPayload::Hpd(c) => {
            let (draws, _) = hpd::sample_many(c, params.sigma, count, cfg, &mut stream)?;
            Ok(draws.into_iter().map(ManifoldPoint::from_hpd).collect())
        }
        PointPayload::Toeplitz(c) => {
            let draws = toeplitz::sample_many(c, params.sigma, count, &mut stream)?;
            Ok(draws.into_iter().map(ManifoldPoint::from_toeplitz).collect())
        }
        PointPayload::BlockToeplitz(c) => {
            let (draws, _) = block_toeplitz::sample_many(c, params.sigma, count, cfg, &mut stream)?;
            Ok(draws
                .into_iter()
                .map(ManifoldPoint::from_block_toeplitz)
                .collect())
        }
    }
}
