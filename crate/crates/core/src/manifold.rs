//! Uniform interface over the three spaces: tagged points, distances,
//! log/exp maps, group actions, and the Riemannian barycentre solver
//! used by maximum likelihood and EM.
//!
//! The barycentre iteration is the fixed-step update
//! `x <- Exp_x(sum_n w_n Log_x(x_n))` (step 1 is safe in non-positive
//! curvature), initialized at the input point with the smallest weighted
//! sum of squared distances. Product manifolds are solved factor by
//! factor: the squared distance is a weighted sum over factors, so the
//! variance functional separates.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::block_toeplitz::{self, BlockToeplitzCoords, BlockToeplitzGroup};
use crate::error::{Error, Result};
use crate::hpd::{self, HermitianPd};
use crate::matfun::{self, CMat};
use crate::rng::Stream;
use crate::toeplitz::{self, ToeplitzCoords, ToeplitzGroup};

/// Identifier of one of the three supported spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManifoldId {
    Hpd { n: usize },
    Toeplitz { n: usize },
    BlockToeplitz { n: usize, block: usize },
}

impl ManifoldId {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ManifoldId::Hpd { n } => n >= 1,
            ManifoldId::Toeplitz { n } => n >= 1,
            ManifoldId::BlockToeplitz { n, block } => n >= 1 && block >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "invalid manifold sizes in {self:?}"
            )))
        }
    }

    /// Real dimension: n^2 for HPD, 2n-1 for Toeplitz,
    /// 2N-1 + (n-1)(N^2+N) for block-Toeplitz.
    pub fn dim(&self) -> usize {
        match *self {
            ManifoldId::Hpd { n } => n * n,
            ManifoldId::Toeplitz { n } => 2 * n - 1,
            ManifoldId::BlockToeplitz { n, block } => {
                2 * block - 1 + (n - 1) * (block * block + block)
            }
        }
    }

    /// Canonical origin used as the centre of polar coordinates.
    pub fn origin(&self) -> ManifoldPoint {
        match *self {
            ManifoldId::Hpd { n } => ManifoldPoint {
                id: *self,
                payload: PointPayload::Hpd(HermitianPd::identity(n)),
            },
            ManifoldId::Toeplitz { n } => ManifoldPoint {
                id: *self,
                payload: PointPayload::Toeplitz(ToeplitzCoords::identity(n)),
            },
            ManifoldId::BlockToeplitz { n, block } => ManifoldPoint {
                id: *self,
                payload: PointPayload::BlockToeplitz(BlockToeplitzCoords::identity(n, block)),
            },
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            ManifoldId::Hpd { n } => format!("hpd:{n}"),
            ManifoldId::Toeplitz { n } => format!("toeplitz:{n}"),
            ManifoldId::BlockToeplitz { n, block } => format!("block-toeplitz:{n}x{block}"),
        }
    }

    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, size) = spec.split_once(':').ok_or_else(|| {
            Error::InvalidParameter(format!(
                "manifold spec '{spec}' should look like hpd:2, toeplitz:4 or block-toeplitz:3x2"
            ))
        })?;
        let bad = |m: &str| Error::InvalidParameter(format!("bad manifold spec '{m}'"));
        let id = match kind {
            "hpd" => ManifoldId::Hpd {
                n: size.parse().map_err(|_| bad(spec))?,
            },
            "toeplitz" => ManifoldId::Toeplitz {
                n: size.parse().map_err(|_| bad(spec))?,
            },
            "block-toeplitz" | "block_toeplitz" => {
                let (n, b) = size.split_once('x').ok_or_else(|| bad(spec))?;
                ManifoldId::BlockToeplitz {
                    n: n.parse().map_err(|_| bad(spec))?,
                    block: b.parse().map_err(|_| bad(spec))?,
                }
            }
            _ => return Err(bad(spec)),
        };
        id.validate()?;
        Ok(id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PointPayload {
    Hpd(HermitianPd),
    Toeplitz(ToeplitzCoords),
    BlockToeplitz(BlockToeplitzCoords),
}

/// A point of one of the three spaces, tagged with its manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldPoint {
    id: ManifoldId,
    payload: PointPayload,
}

impl ManifoldPoint {
    pub fn from_hpd(m: HermitianPd) -> Self {
        let id = ManifoldId::Hpd { n: m.dim() };
        Self {
            id,
            payload: PointPayload::Hpd(m),
        }
    }

    pub fn from_toeplitz(c: ToeplitzCoords) -> Self {
        let id = ManifoldId::Toeplitz { n: c.size() };
        Self {
            id,
            payload: PointPayload::Toeplitz(c),
        }
    }

    pub fn from_block_toeplitz(c: BlockToeplitzCoords) -> Self {
        let id = ManifoldId::BlockToeplitz {
            n: c.blocks(),
            block: c.block_dim(),
        };
        Self {
            id,
            payload: PointPayload::BlockToeplitz(c),
        }
    }

    pub fn manifold(&self) -> ManifoldId {
        self.id
    }

    pub fn payload(&self) -> &PointPayload {
        &self.payload
    }

    pub fn as_hpd(&self) -> Option<&HermitianPd> {
        match &self.payload {
            PointPayload::Hpd(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_toeplitz(&self) -> Option<&ToeplitzCoords> {
        match &self.payload {
            PointPayload::Toeplitz(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_block_toeplitz(&self) -> Option<&BlockToeplitzCoords> {
        match &self.payload {
            PointPayload::BlockToeplitz(c) => Some(c),
            _ => None,
        }
    }
}

fn check_same_manifold(x: &ManifoldPoint, y: &ManifoldPoint) -> Result<()> {
    if x.id != y.id {
        return Err(Error::ManifoldMismatch(x.id.describe(), y.id.describe()));
    }
    Ok(())
}

/// Tangent data, stored factor-wise in each factor's natural chart.
#[derive(Debug, Clone)]
pub enum TangentParts {
    Hpd(CMat),
    Toeplitz {
        t: f64,
        discs: Vec<Complex64>,
    },
    BlockToeplitz {
        t: f64,
        p_discs: Vec<Complex64>,
        siegel: Vec<CMat>,
    },
}

#[derive(Debug, Clone)]
pub struct TangentVector {
    base: ManifoldPoint,
    parts: TangentParts,
}

impl TangentVector {
    pub fn base(&self) -> &ManifoldPoint {
        &self.base
    }

    pub fn parts(&self) -> &TangentParts {
        &self.parts
    }

    pub fn zero(base: &ManifoldPoint) -> Self {
        let parts = match &base.payload {
            PointPayload::Hpd(m) => TangentParts::Hpd(CMat::zeros(m.dim(), m.dim())),
            PointPayload::Toeplitz(c) => TangentParts::Toeplitz {
                t: 0.0,
                discs: vec![Complex64::new(0.0, 0.0); c.size() - 1],
            },
            PointPayload::BlockToeplitz(c) => TangentParts::BlockToeplitz {
                t: 0.0,
                p_discs: vec![Complex64::new(0.0, 0.0); c.block_dim() - 1],
                siegel: vec![CMat::zeros(c.block_dim(), c.block_dim()); c.blocks() - 1],
            },
        };
        Self {
            base: base.clone(),
            parts,
        }
    }

    pub fn scale(&self, f: f64) -> Self {
        let parts = match &self.parts {
            TangentParts::Hpd(v) => TangentParts::Hpd(v.scale(f)),
            TangentParts::Toeplitz { t, discs } => TangentParts::Toeplitz {
                t: t * f,
                discs: discs.iter().map(|d| d * f).collect(),
            },
            TangentParts::BlockToeplitz { t, p_discs, siegel } => TangentParts::BlockToeplitz {
                t: t * f,
                p_discs: p_discs.iter().map(|d| d * f).collect(),
                siegel: siegel.iter().map(|m| m.scale(f)).collect(),
            },
        };
        Self {
            base: self.base.clone(),
            parts,
        }
    }

    pub fn add_assign(&mut self, other: &TangentVector) {
        match (&mut self.parts, &other.parts) {
            (TangentParts::Hpd(a), TangentParts::Hpd(b)) => *a += b,
            (
                TangentParts::Toeplitz { t, discs },
                TangentParts::Toeplitz { t: t2, discs: d2 },
            ) => {
                *t += t2;
                for (x, y) in discs.iter_mut().zip(d2) {
                    *x += y;
                }
            }
            (
                TangentParts::BlockToeplitz { t, p_discs, siegel },
                TangentParts::BlockToeplitz {
                    t: t2,
                    p_discs: p2,
                    siegel: s2,
                },
            ) => {
                *t += t2;
                for (x, y) in p_discs.iter_mut().zip(p2) {
                    *x += y;
                }
                for (x, y) in siegel.iter_mut().zip(s2) {
                    *x += y;
                }
            }
            _ => panic!("tangent parts from different manifolds"),
        }
    }

    /// Riemannian norm at the base point (weights included).
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    fn norm_sq(&self) -> f64 {
        match (&self.base.payload, &self.parts) {
            (PointPayload::Hpd(x), TangentParts::Hpd(v)) => hpd::tangent_norm(x, v).powi(2),
            (PointPayload::Toeplitz(c), TangentParts::Toeplitz { t, discs }) => {
                let n = c.size() as f64;
                let mut acc = n * t * t;
                for (j, (v, a)) in discs.iter().zip(c.alphas()).enumerate() {
                    let w = n - (j as f64 + 1.0);
                    acc += w * (v.norm() / (1.0 - a.norm_sqr())).powi(2);
                }
                acc
            }
            (PointPayload::BlockToeplitz(c), TangentParts::BlockToeplitz { t, p_discs, siegel }) => {
                let n = c.blocks() as f64;
                let nb = c.block_dim() as f64;
                let mut acc = n * nb * t * t;
                for (j, (v, a)) in p_discs.iter().zip(c.p().alphas()).enumerate() {
                    let w = nb - (j as f64 + 1.0);
                    acc += n * w * (v.norm() / (1.0 - a.norm_sqr())).powi(2);
                }
                for (j, (v, omega)) in siegel.iter().zip(c.omegas()).enumerate() {
                    let w = n - (j as f64 + 1.0);
                    let nrm = block_toeplitz::siegel_tangent_norm(omega, v)
                        .expect("tangent at valid Siegel point");
                    acc += w * nrm * nrm;
                }
                acc
            }
            _ => panic!("tangent parts from different manifolds"),
        }
    }
}

/// Group element acting on a manifold.
#[derive(Debug, Clone)]
pub enum GroupElement {
    Hpd(CMat),
    Toeplitz(ToeplitzGroup),
    BlockToeplitz(BlockToeplitzGroup),
}

impl GroupElement {
    pub fn random(id: ManifoldId, rng: &mut Stream) -> Self {
        match id {
            ManifoldId::Hpd { n } => {
                // a well-conditioned invertible matrix
                let g = matfun::random_hpd(n, 0.4, rng);
                let u = matfun::sample_unitary(n, rng);
                GroupElement::Hpd(g * u)
            }
            ManifoldId::Toeplitz { n } => GroupElement::Toeplitz(ToeplitzGroup::random(n, rng)),
            ManifoldId::BlockToeplitz { n, block } => {
                GroupElement::BlockToeplitz(BlockToeplitzGroup::random(n, block, rng))
            }
        }
    }

    /// The translation sending the origin to `x`.
    pub fn translation_to(x: &ManifoldPoint) -> Result<Self> {
        Ok(match x.payload() {
            PointPayload::Hpd(m) => GroupElement::Hpd(m.sqrt()),
            PointPayload::Toeplitz(c) => GroupElement::Toeplitz(ToeplitzGroup::translation_to(c)),
            PointPayload::BlockToeplitz(c) => {
                let siegel = c
                    .omegas()
                    .iter()
                    .map(|w| {
                        Ok(block_toeplitz::SiegelTranslation::to_point(w)?.group_element())
                    })
                    .collect::<Result<Vec<_>>>()?;
                GroupElement::BlockToeplitz(BlockToeplitzGroup {
                    p_part: ToeplitzGroup::translation_to(c.p()),
                    siegel,
                })
            }
        })
    }
}

/// Invariant distance between two points on the same manifold.
pub fn distance(x: &ManifoldPoint, y: &ManifoldPoint) -> Result<f64> {
    check_same_manifold(x, y)?;
    match (&x.payload, &y.payload) {
        (PointPayload::Hpd(a), PointPayload::Hpd(b)) => hpd::distance(a, b),
        (PointPayload::Toeplitz(a), PointPayload::Toeplitz(b)) => toeplitz::distance(a, b),
        (PointPayload::BlockToeplitz(a), PointPayload::BlockToeplitz(b)) => {
            block_toeplitz::distance(a, b)
        }
        _ => unreachable!("same manifold id implies same payload kind"),
    }
}

pub fn distance_sq(x: &ManifoldPoint, y: &ManifoldPoint) -> Result<f64> {
    check_same_manifold(x, y)?;
    match (&x.payload, &y.payload) {
        (PointPayload::Hpd(a), PointPayload::Hpd(b)) => Ok(hpd::distance(a, b)?.powi(2)),
        (PointPayload::Toeplitz(a), PointPayload::Toeplitz(b)) => toeplitz::distance_sq(a, b),
        (PointPayload::BlockToeplitz(a), PointPayload::BlockToeplitz(b)) => {
            block_toeplitz::distance_sq(a, b)
        }
        _ => unreachable!(),
    }
}

/// Riemannian logarithm of `y` at `x`.
pub fn log_map(x: &ManifoldPoint, y: &ManifoldPoint) -> Result<TangentVector> {
    check_same_manifold(x, y)?;
    let parts = match (&x.payload, &y.payload) {
        (PointPayload::Hpd(a), PointPayload::Hpd(b)) => TangentParts::Hpd(hpd::log_map(a, b)?),
        (PointPayload::Toeplitz(a), PointPayload::Toeplitz(b)) => TangentParts::Toeplitz {
            t: b.scale().ln() - a.scale().ln(),
            discs: a
                .alphas()
                .iter()
                .zip(b.alphas())
                .map(|(&p, &q)| toeplitz::disc_log(p, q))
                .collect(),
        },
        (PointPayload::BlockToeplitz(a), PointPayload::BlockToeplitz(b)) => {
            TangentParts::BlockToeplitz {
                t: b.p().scale().ln() - a.p().scale().ln(),
                p_discs: a
                    .p()
                    .alphas()
                    .iter()
                    .zip(b.p().alphas())
                    .map(|(&p, &q)| toeplitz::disc_log(p, q))
                    .collect(),
                siegel: a
                    .omegas()
                    .iter()
                    .zip(b.omegas())
                    .map(|(p, q)| block_toeplitz::siegel_log(p, q))
                    .collect::<Result<Vec<_>>>()?,
            }
        }
        _ => unreachable!(),
    };
    Ok(TangentVector {
        base: x.clone(),
        parts,
    })
}

/// Riemannian exponential at the tangent vector's base point.
pub fn exp_map(v: &TangentVector) -> Result<ManifoldPoint> {
    let x = &v.base;
    let payload = match (&x.payload, &v.parts) {
        (PointPayload::Hpd(a), TangentParts::Hpd(m)) => PointPayload::Hpd(hpd::exp_map(a, m)?),
        (PointPayload::Toeplitz(c), TangentParts::Toeplitz { t, discs }) => {
            let alphas = c
                .alphas()
                .iter()
                .zip(discs)
                .map(|(&a, &d)| toeplitz::disc_exp(a, d))
                .collect::<Result<Vec<_>>>()?;
            PointPayload::Toeplitz(ToeplitzCoords::new((c.scale().ln() + t).exp(), alphas)?)
        }
        (PointPayload::BlockToeplitz(c), TangentParts::BlockToeplitz { t, p_discs, siegel }) => {
            let alphas = c
                .p()
                .alphas()
                .iter()
                .zip(p_discs)
                .map(|(&a, &d)| toeplitz::disc_exp(a, d))
                .collect::<Result<Vec<_>>>()?;
            let p = ToeplitzCoords::new((c.p().scale().ln() + t).exp(), alphas)?;
            let omegas = c
                .omegas()
                .iter()
                .zip(siegel)
                .map(|(w, m)| block_toeplitz::siegel_exp(w, m))
                .collect::<Result<Vec<_>>>()?;
            PointPayload::BlockToeplitz(BlockToeplitzCoords::new(p, omegas)?)
        }
        _ => panic!("tangent parts from different manifolds"),
    };
    Ok(ManifoldPoint {
        id: x.id,
        payload,
    })
}

/// Isometric group action `g . x`.
pub fn group_action(g: &GroupElement, x: &ManifoldPoint) -> Result<ManifoldPoint> {
    let payload = match (g, &x.payload) {
        (GroupElement::Hpd(m), PointPayload::Hpd(y)) => PointPayload::Hpd(hpd::group_action(m, y)?),
        (GroupElement::Toeplitz(t), PointPayload::Toeplitz(c)) => {
            PointPayload::Toeplitz(toeplitz::group_action(t, c)?)
        }
        (GroupElement::BlockToeplitz(b), PointPayload::BlockToeplitz(c)) => {
            PointPayload::BlockToeplitz(block_toeplitz::group_action(b, c)?)
        }
        _ => {
            return Err(Error::ManifoldMismatch(
                "group element".into(),
                x.id.describe(),
            ))
        }
    };
    Ok(ManifoldPoint {
        id: x.id,
        payload,
    })
}

/// Random point with coordinates of the given spread, used by tests,
/// diagnostics, and the Python bindings.
pub fn random_point(id: ManifoldId, spread: f64, rng: &mut Stream) -> ManifoldPoint {
    use rand::Rng;
    match id {
        ManifoldId::Hpd { n } => {
            ManifoldPoint::from_hpd(HermitianPd::new(matfun::random_hpd(n, spread, rng)).unwrap())
        }
        ManifoldId::Toeplitz { n } => {
            let r = (crate::rng::standard_normal(rng) * spread).exp();
            let alphas = (0..n - 1)
                .map(|_| {
                    Complex64::from_polar(
                        rng.gen::<f64>() * spread.min(0.9),
                        rng.gen::<f64>() * 7.0,
                    )
                })
                .collect();
            ManifoldPoint::from_toeplitz(ToeplitzCoords::new(r, alphas).unwrap())
        }
        ManifoldId::BlockToeplitz { n, block } => {
            let r = (crate::rng::standard_normal(rng) * spread).exp();
            let alphas = (0..block - 1)
                .map(|_| {
                    Complex64::from_polar(
                        rng.gen::<f64>() * spread.min(0.9),
                        rng.gen::<f64>() * 7.0,
                    )
                })
                .collect();
            let p = ToeplitzCoords::new(r, alphas).unwrap();
            let omegas = (0..n - 1)
                .map(|_| block_toeplitz::random_siegel(block, spread.min(0.9), rng))
                .collect();
            ManifoldPoint::from_block_toeplitz(BlockToeplitzCoords::new(p, omegas).unwrap())
        }
    }
}

/// Barycentre solver configuration.
#[derive(Debug, Clone, Copy)]
pub struct BarycentreCfg {
    /// Tolerance on the norm of the weighted mean of logs.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for BarycentreCfg {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BarycentreReport {
    pub point: ManifoldPoint,
    pub iterations: usize,
    pub grad_norm: f64,
}

/// Weighted Riemannian barycentre. Weights must be non-negative and are
/// normalized internally; at least one positive weight is required.
pub fn barycentre(
    points: &[ManifoldPoint],
    weights: Option<&[f64]>,
    cfg: BarycentreCfg,
) -> Result<ManifoldPoint> {
    Ok(barycentre_report(points, weights, cfg)?.point)
}

pub fn barycentre_report(
    points: &[ManifoldPoint],
    weights: Option<&[f64]>,
    cfg: BarycentreCfg,
) -> Result<BarycentreReport> {
    if points.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for p in &points[1..] {
        check_same_manifold(&points[0], p)?;
    }
    let w = normalize_weights(points.len(), weights)?;
    if points.len() == 1 {
        return Ok(BarycentreReport {
            point: points[0].clone(),
            iterations: 0,
            grad_norm: 0.0,
        });
    }

    // initialize at the input point with the smallest weighted variance;
    // ties break deterministically by input order
    let mut best = (0usize, f64::INFINITY);
    for (i, cand) in points.iter().enumerate() {
        let mut e = 0.0;
        for (p, &wi) in points.iter().zip(&w) {
            if wi > 0.0 {
                e += wi * distance_sq(cand, p)?;
            }
        }
        if e < best.1 {
            best = (i, e);
        }
    }
    let mut x = points[best.0].clone();

    let mut grad_norm = f64::INFINITY;
    for it in 0..cfg.max_iter {
        let mut step = TangentVector::zero(&x);
        for (p, &wi) in points.iter().zip(&w) {
            if wi > 0.0 {
                step.add_assign(&log_map(&x, p)?.scale(wi));
            }
        }
        grad_norm = step.norm();
        if grad_norm < cfg.tol {
            return Ok(BarycentreReport {
                point: x,
                iterations: it,
                grad_norm,
            });
        }
        x = exp_map(&step)?;
    }
    Err(Error::BarycentreNoConvergence {
        iterations: cfg.max_iter,
        grad_norm,
    })
}

pub(crate) fn normalize_weights(n: usize, weights: Option<&[f64]>) -> Result<Vec<f64>> {
    match weights {
        None => Ok(vec![1.0 / n as f64; n]),
        Some(w) => {
            if w.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: w.len(),
                });
            }
            if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                return Err(Error::InvalidParameter(
                    "weights must be non-negative and finite".into(),
                ));
            }
            let total: f64 = w.iter().sum();
            if total <= 0.0 {
                return Err(Error::InvalidParameter(
                    "weights must not all vanish".into(),
                ));
            }
            Ok(w.iter().map(|&x| x / total).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{self, substream};
    use approx::assert_relative_eq;
    use rand::Rng;

    pub(crate) fn random_point(id: ManifoldId, spread: f64, rng: &mut Stream) -> ManifoldPoint {
        match id {
            ManifoldId::Hpd { n } => {
                ManifoldPoint::from_hpd(HermitianPd::new(matfun::random_hpd(n, spread, rng)).unwrap())
            }
            ManifoldId::Toeplitz { n } => {
                let r = (rng::standard_normal(rng) * spread).exp();
                let alphas = (0..n - 1)
                    .map(|_| {
                        Complex64::from_polar(
                            rng.gen::<f64>() * spread.min(0.9),
                            rng.gen::<f64>() * 7.0,
                        )
                    })
                    .collect();
                ManifoldPoint::from_toeplitz(ToeplitzCoords::new(r, alphas).unwrap())
            }
            ManifoldId::BlockToeplitz { n, block } => {
                let r = (rng::standard_normal(rng) * spread).exp();
                let alphas = (0..block - 1)
                    .map(|_| {
                        Complex64::from_polar(
                            rng.gen::<f64>() * spread.min(0.9),
                            rng.gen::<f64>() * 7.0,
                        )
                    })
                    .collect();
                let p = ToeplitzCoords::new(r, alphas).unwrap();
                let omegas = (0..n - 1)
                    .map(|_| block_toeplitz::random_siegel(block, spread.min(0.9), rng))
                    .collect();
                ManifoldPoint::from_block_toeplitz(BlockToeplitzCoords::new(p, omegas).unwrap())
            }
        }
    }

    const ALL: [ManifoldId; 3] = [
        ManifoldId::Hpd { n: 2 },
        ManifoldId::Toeplitz { n: 3 },
        ManifoldId::BlockToeplitz { n: 2, block: 2 },
    ];

    #[test]
    fn manifold_spec_round_trip() {
        for id in ALL {
            assert_eq!(ManifoldId::parse(&id.describe()).unwrap(), id);
        }
        assert!(ManifoldId::parse("grassmann:3").is_err());
        assert!(ManifoldId::parse("hpd:0").is_err());
    }

    #[test]
    fn dims_match_closed_forms() {
        assert_eq!(ManifoldId::Hpd { n: 3 }.dim(), 9);
        assert_eq!(ManifoldId::Toeplitz { n: 4 }.dim(), 7);
        assert_eq!(ManifoldId::BlockToeplitz { n: 3, block: 2 }.dim(), 15);
    }

    #[test]
    fn distance_mismatch_rejected() {
        let a = ManifoldId::Hpd { n: 2 }.origin();
        let b = ManifoldId::Toeplitz { n: 2 }.origin();
        assert!(matches!(distance(&a, &b), Err(Error::ManifoldMismatch(..))));
    }

    #[test]
    fn log_exp_round_trip_all_manifolds() {
        let mut rng = substream(60, 0);
        for id in ALL {
            for _ in 0..40 {
                let x = random_point(id, 0.5, &mut rng);
                let y = random_point(id, 0.5, &mut rng);
                let v = log_map(&x, &y).unwrap();
                assert_relative_eq!(v.norm(), distance(&x, &y).unwrap(), epsilon = 1e-9);
                let back = exp_map(&v).unwrap();
                assert!(
                    distance(&back, &y).unwrap() < 1e-8,
                    "round trip failed on {}",
                    id.describe()
                );
            }
        }
    }

    #[test]
    fn log_of_self_is_zero() {
        let mut rng = substream(61, 0);
        for id in ALL {
            let x = random_point(id, 0.5, &mut rng);
            assert!(log_map(&x, &x).unwrap().norm() < 1e-10);
            let z = TangentVector::zero(&x);
            assert!(distance(&exp_map(&z).unwrap(), &x).unwrap() < 1e-12);
        }
    }

    #[test]
    fn action_is_isometric() {
        let mut rng = substream(62, 0);
        for id in ALL {
            for _ in 0..30 {
                let x = random_point(id, 0.5, &mut rng);
                let y = random_point(id, 0.5, &mut rng);
                let g = GroupElement::random(id, &mut rng);
                let d0 = distance(&x, &y).unwrap();
                let d1 = distance(&group_action(&g, &x).unwrap(), &group_action(&g, &y).unwrap())
                    .unwrap();
                assert!((d0 - d1).abs() < 1e-9, "{} : {d0} vs {d1}", id.describe());
            }
        }
    }

    #[test]
    fn translation_moves_origin() {
        let mut rng = substream(63, 0);
        for id in ALL {
            let x = random_point(id, 0.5, &mut rng);
            let g = GroupElement::translation_to(&x).unwrap();
            let img = group_action(&g, &id.origin()).unwrap();
            assert!(distance(&img, &x).unwrap() < 1e-9, "{}", id.describe());
        }
    }

    #[test]
    fn barycentre_single_point() {
        let mut rng = substream(64, 0);
        let x = random_point(ManifoldId::Toeplitz { n: 3 }, 0.5, &mut rng);
        let b = barycentre(&[x.clone()], None, BarycentreCfg::default()).unwrap();
        assert_eq!(b, x);
    }

    #[test]
    fn barycentre_commuting_hpd_midpoint() {
        // for commuting HPD matrices the two-point barycentre is
        // exp((log A + log B)/2)
        let a = HermitianPd::new(CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(4.0, 0.0),
        ])))
        .unwrap();
        let b = HermitianPd::new(CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(9.0, 0.0),
            Complex64::new(1.0, 0.0),
        ])))
        .unwrap();
        let mid = matfun::hermitian_matfun(&((a.log() + b.log()).scale(0.5)), f64::exp).unwrap();
        let out = barycentre(
            &[ManifoldPoint::from_hpd(a), ManifoldPoint::from_hpd(b)],
            None,
            BarycentreCfg::default(),
        )
        .unwrap();
        assert!(matfun::frobenius(&(out.as_hpd().unwrap().matrix() - &mid)) < 1e-9);
    }

    #[test]
    fn barycentre_is_fixed_point_and_local_min() {
        let mut rng = substream(65, 0);
        for id in ALL {
            let pts: Vec<_> = (0..8).map(|_| random_point(id, 0.4, &mut rng)).collect();
            let rep = barycentre_report(&pts, None, BarycentreCfg::default()).unwrap();
            assert!(rep.grad_norm < 1e-9);
            let e0: f64 = pts
                .iter()
                .map(|p| distance_sq(&rep.point, p).unwrap())
                .sum::<f64>()
                / pts.len() as f64;
            // perturb along random tangent directions
            for _ in 0..20 {
                let probe = random_point(id, 0.4, &mut rng);
                let dir = log_map(&rep.point, &probe).unwrap();
                let nrm = dir.norm();
                if nrm < 1e-9 {
                    continue;
                }
                let moved = exp_map(&dir.scale(1e-3 / nrm)).unwrap();
                let e1: f64 = pts
                    .iter()
                    .map(|p| distance_sq(&moved, p).unwrap())
                    .sum::<f64>()
                    / pts.len() as f64;
                assert!(
                    e1 >= e0 - 1e-8,
                    "{}: perturbation decreased variance by {}",
                    id.describe(),
                    e0 - e1
                );
            }
        }
    }

    #[test]
    fn barycentre_equivariance() {
        let mut rng = substream(66, 0);
        for id in ALL {
            let pts: Vec<_> = (0..6).map(|_| random_point(id, 0.4, &mut rng)).collect();
            let g = GroupElement::random(id, &mut rng);
            let b1 = barycentre(&pts, None, BarycentreCfg::default()).unwrap();
            let moved: Vec<_> = pts
                .iter()
                .map(|p| group_action(&g, p).unwrap())
                .collect();
            let b2 = barycentre(&moved, None, BarycentreCfg::default()).unwrap();
            let d = distance(&group_action(&g, &b1).unwrap(), &b2).unwrap();
            assert!(d < 1e-7, "{}: equivariance defect {d}", id.describe());
        }
    }

    #[test]
    fn barycentre_weighted_two_points() {
        // on the Euclidean factor the weighted barycentre is the weighted
        // mean of log r
        let a = ManifoldPoint::from_toeplitz(ToeplitzCoords::new(1.0, vec![]).unwrap());
        let b = ManifoldPoint::from_toeplitz(ToeplitzCoords::new(std::f64::consts::E.powi(2), vec![]).unwrap());
        let out = barycentre(&[a, b], Some(&[0.75, 0.25]), BarycentreCfg::default()).unwrap();
        assert_relative_eq!(out.as_toeplitz().unwrap().scale().ln(), 0.5, epsilon = 1e-9);
    }

    #[test]
    fn barycentre_rejects_bad_weights() {
        let x = ManifoldId::Toeplitz { n: 2 }.origin();
        assert!(barycentre(&[x.clone()], Some(&[-1.0]), BarycentreCfg::default()).is_err());
        assert!(barycentre(&[x], Some(&[0.0]), BarycentreCfg::default()).is_err());
        assert!(barycentre(&[], None, BarycentreCfg::default()).is_err());
    }

    #[test]
    fn triangle_inequality_random_triples() {
        let mut rng = substream(67, 0);
        for id in ALL {
            for _ in 0..60 {
                let x = random_point(id, 0.6, &mut rng);
                let y = random_point(id, 0.6, &mut rng);
                let z = random_point(id, 0.6, &mut rng);
                let xy = distance(&x, &y).unwrap();
                let yz = distance(&y, &z).unwrap();
                let xz = distance(&x, &z).unwrap();
                assert!(xz <= xy + yz + 1e-12, "{}", id.describe());
            }
        }
    }

    #[test]
    fn disc_barycentre_matches_grid_search() {
        // brute-force grid minimization of the empirical variance on the
        // Poincare disc factor of a 2 x 2 Toeplitz space
        let mut rng = substream(68, 0);
        let pts: Vec<ManifoldPoint> = (0..10)
            .map(|_| {
                let a = Complex64::from_polar(rng.gen::<f64>() * 0.6, rng.gen::<f64>() * 7.0);
                ManifoldPoint::from_toeplitz(ToeplitzCoords::new(1.0, vec![a]).unwrap())
            })
            .collect();
        let approx = barycentre(&pts, None, BarycentreCfg::default()).unwrap();
        let alpha_hat = approx.as_toeplitz().unwrap().alphas()[0];

        let variance = |cand: Complex64| -> f64 {
            pts.iter()
                .map(|p| {
                    toeplitz::disc_distance(cand, p.as_toeplitz().unwrap().alphas()[0]).powi(2)
                })
                .sum::<f64>()
        };
        // two-stage grid around the solver output and around the origin
        fn scan(
            variance: &dyn Fn(Complex64) -> f64,
            best: (Complex64, f64),
            centre: Complex64,
            half: f64,
            steps: i32,
        ) -> (Complex64, f64) {
            let mut best = best;
            for i in -steps..=steps {
                for j in -steps..=steps {
                    let cand = centre
                        + Complex64::new(i as f64 * half / steps as f64, j as f64 * half / steps as f64);
                    if cand.norm() >= 0.99 {
                        continue;
                    }
                    let v = variance(cand);
                    if v < best.1 {
                        best = (cand, v);
                    }
                }
            }
            best
        }
        let mut best = (Complex64::new(0.0, 0.0), f64::INFINITY);
        best = scan(&variance, best, Complex64::new(0.0, 0.0), 0.8, 40);
        best = scan(&variance, best, best.0, 0.05, 40);
        best = scan(&variance, best, best.0, 0.004, 40);
        assert!(
            (alpha_hat - best.0).norm() < 1e-3,
            "solver {alpha_hat} vs grid {}",
            best.0
        );
    }
}
