//! The space of n x n Toeplitz Hermitian positive definite matrices in
//! reflection-coefficient coordinates.
//!
//! A Toeplitz HPD matrix T (entries T_ij = a_{i-j}, first column
//! a_0 > 0, a_1, ..., a_{n-1}) is identified with the unconstrained
//! coordinates (r, alpha_1, ..., alpha_{n-1}) where r = a_0 > 0 and the
//! reflection coefficients alpha_j lie in the unit disc. The Hessian
//! metric is the product
//!
//!   ds^2 = n (dr/r)^2 + sum_j (n-j) |d alpha_j|^2 / (1 - |alpha_j|^2)^2
//!
//! so the space is R x D x ... x D with a Euclidean factor in t = log r
//! and scaled Poincare discs. Everything here (distance, group action,
//! log Z, sampler) works factor by factor.

use num_complex::Complex64;
use rand::Rng;
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::matfun::CMat;
use crate::rng::{self, Stream};

/// Coefficients just inside the boundary get capped here after Mobius
/// translations, absorbing rounding without changing valid inputs.
pub const DISC_CAP: f64 = 1.0 - 1e-12;

/// Reflection-coefficient coordinates of a Toeplitz HPD matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzCoords {
    r: f64,
    alphas: Vec<Complex64>,
}

impl ToeplitzCoords {
    pub fn new(r: f64, alphas: Vec<Complex64>) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "scale coordinate must be positive and finite, got {r}"
            )));
        }
        for a in &alphas {
            if !(a.re.is_finite() && a.im.is_finite()) || a.norm() >= 1.0 {
                return Err(Error::OutsideDisc { modulus: a.norm() });
            }
        }
        Ok(Self { r, alphas })
    }

    /// Coordinates of the identity matrix: r = 1, all coefficients zero.
    pub fn identity(n: usize) -> Self {
        Self {
            r: 1.0,
            alphas: vec![Complex64::new(0.0, 0.0); n - 1],
        }
    }

    pub fn size(&self) -> usize {
        self.alphas.len() + 1
    }

    pub fn scale(&self) -> f64 {
        self.r
    }

    pub fn alphas(&self) -> &[Complex64] {
        &self.alphas
    }
}

fn check_same_size(a: &ToeplitzCoords, b: &ToeplitzCoords) -> Result<()> {
    if a.size() != b.size() {
        return Err(Error::DimensionMismatch {
            expected: a.size(),
            got: b.size(),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Poincare disc factor
// ---------------------------------------------------------------------------

/// Poincare distance atanh |(a - b) / (1 - a* b)|.
pub fn disc_distance(a: Complex64, b: Complex64) -> f64 {
    let m = (b - a) / (Complex64::new(1.0, 0.0) - a.conj() * b);
    m.norm().min(DISC_CAP).atanh()
}

/// Mobius transform by the SU(1,1) element ((a,b),(c,d)).
pub fn mobius(u: &Su11, z: Complex64) -> Complex64 {
    (u.a * z + u.b) / (u.c * z + u.d)
}

/// An element of SU(1,1) acting on the disc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Su11 {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl Su11 {
    pub fn identity() -> Self {
        Self {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(0.0, 0.0),
            c: Complex64::new(0.0, 0.0),
            d: Complex64::new(1.0, 0.0),
        }
    }

    /// The hyperbolic translation u(alpha) with u(alpha) . 0 = alpha:
    /// entries exp(i theta/2) cosh(rho), exp(i theta/2) sinh(rho) over the
    /// conjugate row, for alpha = tanh(rho) exp(i theta).
    pub fn translation_to(alpha: Complex64) -> Self {
        let rho = alpha.norm().min(DISC_CAP).atanh();
        let theta = if alpha.norm() == 0.0 { 0.0 } else { alpha.arg() };
        let half = Complex64::from_polar(1.0, theta / 2.0);
        Self {
            a: half * rho.cosh(),
            b: half * rho.sinh(),
            c: half.conj() * rho.sinh(),
            d: half.conj() * rho.cosh(),
        }
    }

    pub fn inverse(&self) -> Self {
        // det = 1, so the inverse is the adjugate
        Self {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    /// Residual against the defining identities u^T J u = J and
    /// u^H C u = C (J the symplectic form, C = diag(-1, 1)).
    pub fn membership_residual(&self) -> f64 {
        // u^T J u = J  <=>  det u = 1 for 2 x 2
        let det = self.a * self.d - self.b * self.c;
        let r1 = (det - Complex64::new(1.0, 0.0)).norm();
        // u^H C u = C rows
        let r2 = ((self.a.conj() * self.a - self.c.conj() * self.c) - Complex64::new(1.0, 0.0))
            .norm();
        let r3 = (self.a.conj() * self.b - self.c.conj() * self.d).norm();
        let r4 = ((self.d.conj() * self.d - self.b.conj() * self.b) - Complex64::new(1.0, 0.0))
            .norm();
        r1.max(r2).max(r3).max(r4)
    }

    pub fn check_membership(&self) -> Result<()> {
        let residual = self.membership_residual();
        if residual > 1e-10 {
            return Err(Error::NotInGroup { residual });
        }
        Ok(())
    }

    /// Random element: translation times a rotation.
    pub fn random(rng: &mut Stream) -> Self {
        let rho: f64 = rng.gen::<f64>() * 1.2;
        let theta = rng.gen::<f64>() * std::f64::consts::TAU;
        let phi = rng.gen::<f64>() * std::f64::consts::TAU;
        let t = Self::translation_to(Complex64::from_polar(rho.tanh(), theta));
        let k = Self {
            a: Complex64::from_polar(1.0, phi),
            b: Complex64::new(0.0, 0.0),
            c: Complex64::new(0.0, 0.0),
            d: Complex64::from_polar(1.0, -phi),
        };
        t.compose(&k)
    }
}

/// Disc log map: tangent vector at `a` pointing to `b`, with
/// `|log| / (1 - |a|^2) = d(a, b)`.
///
/// The origin chart is reached through u(a)^-1, which maps b to
/// e^{-i arg a} (b - a)/(1 - a* b); the differential of u(a) at 0 is
/// e^{i arg a} (1 - |a|^2), so the phases cancel.
pub fn disc_log(a: Complex64, b: Complex64) -> Complex64 {
    let m = (b - a) / (Complex64::new(1.0, 0.0) - a.conj() * b);
    let norm = m.norm();
    if norm == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let rho = norm.min(DISC_CAP).atanh();
    (1.0 - a.norm_sqr()) * (m / norm * rho)
}

/// Disc exp map, inverse of [`disc_log`]. Errors when the step overflows
/// the disc rather than clipping.
pub fn disc_exp(a: Complex64, v: Complex64) -> Result<Complex64> {
    let phase = if a.norm() == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        Complex64::from_polar(1.0, a.arg())
    };
    let v0 = v / (phase * (1.0 - a.norm_sqr()));
    let rho = v0.norm();
    if !rho.is_finite() {
        return Err(Error::ExpMapOverflow);
    }
    if rho == 0.0 {
        return Ok(a);
    }
    let target0 = v0 / rho * rho.tanh();
    let out = mobius(&Su11::translation_to(a), target0);
    let norm = out.norm();
    if !norm.is_finite() || norm >= 1.0 {
        return Err(Error::ExpMapOverflow);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Coordinates <-> matrix (Szego-Levinson / Verblunsky)
// ---------------------------------------------------------------------------

/// Autocovariances (a_0, ..., a_{n-1}) from reflection coordinates, by the
/// Levinson recursion run in the generating direction. Exact inverse of
/// [`matrix_to_coords`].
pub fn coords_to_autocov(c: &ToeplitzCoords) -> Vec<Complex64> {
    let n = c.size();
    let mut cov = Vec::with_capacity(n);
    cov.push(Complex64::new(c.r, 0.0));
    let mut pred: Vec<Complex64> = Vec::new(); // prediction coefficients a_{m,1..m}
    let mut err = c.r; // prediction error delta_{m-1}
    for m in 1..n {
        let alpha = c.alphas[m - 1];
        // innovation: delta_m-based update solved for the next covariance
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, p) in pred.iter().enumerate() {
            acc += p * cov[m - 1 - i];
        }
        let a_m = -alpha * err - acc;
        cov.push(a_m);
        // order update of the prediction coefficients
        let mut next = Vec::with_capacity(m);
        for i in 0..m - 1 {
            next.push(pred[i] + alpha * pred[m - 2 - i].conj());
        }
        next.push(alpha);
        pred = next;
        err *= 1.0 - alpha.norm_sqr();
    }
    cov
}

/// Dense matrix T_ij = a_{i-j} from the coordinates.
pub fn coords_to_matrix(c: &ToeplitzCoords) -> CMat {
    let cov = coords_to_autocov(c);
    autocov_to_matrix(&cov)
}

pub fn autocov_to_matrix(cov: &[Complex64]) -> CMat {
    let n = cov.len();
    CMat::from_fn(n, n, |i, j| {
        if i >= j {
            cov[i - j]
        } else {
            cov[j - i].conj()
        }
    })
}

/// Reflection coordinates of a Toeplitz HPD matrix given its first
/// column. A non-positive prediction-error variance signals a non-PD
/// input.
pub fn autocov_to_coords(cov: &[Complex64]) -> Result<ToeplitzCoords> {
    let n = cov.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if cov[0].im.abs() > 1e-12 * cov[0].norm().max(1.0) || cov[0].re <= 0.0 {
        return Err(Error::NotPositiveDefinite { min_eig: cov[0].re });
    }
    let r = cov[0].re;
    let mut alphas = Vec::with_capacity(n - 1);
    let mut pred: Vec<Complex64> = Vec::new();
    let mut err = r;
    for m in 1..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, p) in pred.iter().enumerate() {
            acc += p * cov[m - 1 - i];
        }
        let alpha = -(cov[m] + acc) / err;
        if alpha.norm() >= 1.0 || !alpha.re.is_finite() || !alpha.im.is_finite() {
            return Err(Error::NotPositiveDefinite {
                min_eig: err * (1.0 - alpha.norm_sqr()),
            });
        }
        let mut next = Vec::with_capacity(m);
        for i in 0..m - 1 {
            next.push(pred[i] + alpha * pred[m - 2 - i].conj());
        }
        next.push(alpha);
        pred = next;
        err *= 1.0 - alpha.norm_sqr();
        alphas.push(alpha);
    }
    ToeplitzCoords::new(r, alphas)
}

/// Reflection coordinates of a dense Hermitian Toeplitz PD matrix.
pub fn matrix_to_coords(t: &CMat) -> Result<ToeplitzCoords> {
    let n = t.nrows();
    if n == 0 || t.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n.max(1),
            got: t.ncols(),
        });
    }
    let scale = t.iter().map(|z| z.norm()).fold(0.0f64, f64::max).max(1.0);
    for i in 0..n {
        for j in 0..n {
            if i >= 1 && j >= 1 && (t[(i, j)] - t[(i - 1, j - 1)]).norm() > 1e-10 * scale {
                return Err(Error::InvalidParameter(
                    "matrix is not Toeplitz".into(),
                ));
            }
            if (t[(i, j)] - t[(j, i)].conj()).norm() > 1e-10 * scale {
                return Err(Error::NotHermitian {
                    residual: (t[(i, j)] - t[(j, i)].conj()).norm() / scale,
                    tol: 1e-10,
                });
            }
        }
    }
    let cov: Vec<Complex64> = (0..n).map(|i| t[(i, 0)]).collect();
    autocov_to_coords(&cov)
}

/// det T = r^n prod_j (1 - |alpha_j|^2)^{n-j}.
pub fn determinant(c: &ToeplitzCoords) -> f64 {
    let n = c.size() as i32;
    let mut det = c.r.powi(n);
    for (j, a) in c.alphas.iter().enumerate() {
        det *= (1.0 - a.norm_sqr()).powi(n - (j as i32 + 1));
    }
    det
}

// ---------------------------------------------------------------------------
// Distance, group action
// ---------------------------------------------------------------------------

/// Squared distance, kept separate since the product structure makes it
/// the natural additive quantity.
pub fn distance_sq(a: &ToeplitzCoords, b: &ToeplitzCoords) -> Result<f64> {
    check_same_size(a, b)?;
    let n = a.size() as f64;
    let mut acc = n * (b.r.ln() - a.r.ln()).powi(2);
    for (j, (x, y)) in a.alphas.iter().zip(&b.alphas).enumerate() {
        let w = n - (j as f64 + 1.0);
        acc += w * disc_distance(*x, *y).powi(2);
    }
    Ok(acc)
}

pub fn distance(a: &ToeplitzCoords, b: &ToeplitzCoords) -> Result<f64> {
    Ok(distance_sq(a, b)?.sqrt())
}

/// Group element (s, u_1, .., u_{n-1}) in R+ x SU(1,1)^{n-1}.
#[derive(Debug, Clone)]
pub struct ToeplitzGroup {
    pub scale: f64,
    pub mobius: Vec<Su11>,
}

impl ToeplitzGroup {
    pub fn identity(n: usize) -> Self {
        Self {
            scale: 1.0,
            mobius: vec![Su11::identity(); n - 1],
        }
    }

    /// The translation mapping identity coordinates to `c`.
    pub fn translation_to(c: &ToeplitzCoords) -> Self {
        Self {
            scale: c.r,
            mobius: c.alphas.iter().map(|&a| Su11::translation_to(a)).collect(),
        }
    }

    pub fn random(n: usize, rng: &mut Stream) -> Self {
        Self {
            scale: (rng::standard_normal(rng) * 0.5).exp(),
            mobius: (0..n - 1).map(|_| Su11::random(rng)).collect(),
        }
    }

    pub fn check_membership(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::NotInGroup { residual: f64::INFINITY });
        }
        for u in &self.mobius {
            u.check_membership()?;
        }
        Ok(())
    }
}

/// Action (s, u_j) . (r, alpha_j) = (s r, u_j . alpha_j).
pub fn group_action(g: &ToeplitzGroup, c: &ToeplitzCoords) -> Result<ToeplitzCoords> {
    if g.mobius.len() != c.alphas.len() {
        return Err(Error::DimensionMismatch {
            expected: c.alphas.len(),
            got: g.mobius.len(),
        });
    }
    g.check_membership()?;
    let alphas = g
        .mobius
        .iter()
        .zip(&c.alphas)
        .map(|(u, &a)| cap_disc(mobius(u, a)))
        .collect();
    ToeplitzCoords::new(g.scale * c.r, alphas)
}

pub(crate) fn cap_disc(z: Complex64) -> Complex64 {
    let n = z.norm();
    if n >= DISC_CAP {
        z / n * DISC_CAP
    } else {
        z
    }
}

// ---------------------------------------------------------------------------
// Normalizing factor
// ---------------------------------------------------------------------------

/// log of the Poincare-disc factor Z_D(sigma) = sigma e^{sigma^2/2}
/// erf(sigma / sqrt 2), up to the (2 pi)^{3/2} constant which is dropped.
pub fn log_z_disc(sigma: f64) -> f64 {
    sigma.ln() + 0.5 * sigma * sigma + erf(sigma / std::f64::consts::SQRT_2).ln()
}

/// Analytic log Z(sigma) for the n x n Toeplitz space, up to an additive
/// constant: log(sigma / sqrt n) + sum_j log Z_D(sigma / sqrt(n - j)).
pub fn log_z(n: usize, sigma: f64) -> Result<f64> {
    if sigma <= 0.0 {
        return Err(Error::InvalidParameter("sigma must be positive".into()));
    }
    let nf = n as f64;
    let mut acc = (sigma / nf.sqrt()).ln();
    for j in 1..n {
        acc += log_z_disc(sigma / (nf - j as f64).sqrt());
    }
    Ok(acc)
}

/// d log Z / d eta at eta = -1/(2 sigma^2), computed analytically; equals
/// the expected squared distance to the centre.
pub fn dlog_z_deta(n: usize, sigma: f64) -> Result<f64> {
    if sigma <= 0.0 {
        return Err(Error::InvalidParameter("sigma must be positive".into()));
    }
    let eta = -0.5 / (sigma * sigma);
    let nf = n as f64;
    // Euclidean factor: d/d eta [-1/2 ln(-2 eta)] = -1/(2 eta) = sigma^2
    let mut acc = -0.5 / eta;
    for j in 1..n {
        let w = nf - j as f64;
        acc += dlog_z_disc_deta(eta, w);
    }
    Ok(acc)
}

// d/d eta of log Z_D(s) with s = sigma / sqrt(w) and eta = -1/(2 sigma^2).
fn dlog_z_disc_deta(eta: f64, w: f64) -> f64 {
    let s = (-2.0 * w * eta).powf(-0.5);
    let ds_deta = w * s.powi(3);
    // d/ds [ln s + s^2/2 + ln erf(s / sqrt 2)]
    let erf_term = {
        let x = s / std::f64::consts::SQRT_2;
        let derf = 2.0 / std::f64::consts::PI.sqrt() * (-x * x).exp();
        derf / erf(x) / std::f64::consts::SQRT_2
    };
    (1.0 / s + s + erf_term) * ds_deta
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Exact draw from the radial density p(rho) ~ exp(-rho^2/2 sigma^2)
/// sinh(|rho|) on the real line.
///
/// On rho > 0 the density splits as e^{sigma^2/2} exp(-(rho - sigma^2)^2 /
/// 2 sigma^2) (1 - e^{-2 rho}) / 2, so a N(sigma^2, sigma^2) draw
/// truncated to rho > 0 accepted with probability 1 - e^{-2 rho} is exact;
/// the sign is then symmetrized.
pub fn sample_disc_radius(sigma: f64, rng: &mut Stream) -> f64 {
    let mean = sigma * sigma;
    let rho = loop {
        let cand = mean + sigma * rng::standard_normal(rng);
        if cand <= 0.0 {
            continue;
        }
        if rng.gen::<f64>() < -(-2.0 * cand).exp_m1() {
            break cand;
        }
    };
    if rng.gen::<bool>() {
        rho
    } else {
        -rho
    }
}

/// One draw from the Gaussian G(centre, sigma): log-normal scale part,
/// independent polar draws on each disc, then hyperbolic translation to
/// the centre coefficients.
pub fn sample(centre: &ToeplitzCoords, sigma: f64, rng: &mut Stream) -> Result<ToeplitzCoords> {
    if sigma <= 0.0 {
        return Err(Error::InvalidParameter("sigma must be positive".into()));
    }
    let n = centre.size();
    let nf = n as f64;
    let t = centre.r.ln() + sigma / nf.sqrt() * rng::standard_normal(rng);
    let mut alphas = Vec::with_capacity(n - 1);
    for (j, &abar) in centre.alphas.iter().enumerate() {
        let w = nf - (j as f64 + 1.0);
        let s = sigma / w.sqrt();
        let theta = rng.gen::<f64>() * std::f64::consts::TAU;
        let rho = sample_disc_radius(s, rng);
        let alpha0 = Complex64::from_polar(rho.tanh().abs(), if rho >= 0.0 { theta } else { theta + std::f64::consts::PI });
        let alpha = cap_disc(mobius(&Su11::translation_to(abar), alpha0));
        alphas.push(alpha);
    }
    ToeplitzCoords::new(t.exp(), alphas)
}

pub fn sample_many(
    centre: &ToeplitzCoords,
    sigma: f64,
    count: usize,
    rng: &mut Stream,
) -> Result<Vec<ToeplitzCoords>> {
    (0..count).map(|_| sample(centre, sigma, rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use approx::assert_relative_eq;

    fn random_coords(n: usize, max_alpha: f64, rng: &mut Stream) -> ToeplitzCoords {
        let r = (rng::standard_normal(rng) * 0.4).exp();
        let alphas = (0..n - 1)
            .map(|_| {
                let m: f64 = rng.gen::<f64>() * max_alpha;
                Complex64::from_polar(m, rng.gen::<f64>() * std::f64::consts::TAU)
            })
            .collect();
        ToeplitzCoords::new(r, alphas).unwrap()
    }

    #[test]
    fn identity_coords_give_identity_matrix() {
        let c = ToeplitzCoords::identity(4);
        let t = coords_to_matrix(&c);
        assert!(crate::matfun::frobenius(&(&t - crate::matfun::identity(4))) < 1e-14);
        let c2 = ToeplitzCoords::new(2.0, vec![Complex64::new(0.0, 0.0); 3]).unwrap();
        let t2 = coords_to_matrix(&c2);
        assert!(crate::matfun::frobenius(&(&t2 - crate::matfun::identity(4) * Complex64::new(2.0, 0.0))) < 1e-14);
    }

    #[test]
    fn round_trip_coords_matrix() {
        let mut rng = substream(30, 0);
        for trial in 0..300 {
            let n = 2 + trial % 11; // up to 12
            let c = random_coords(n, 0.95, &mut rng);
            let t = coords_to_matrix(&c);
            let back = matrix_to_coords(&t).unwrap();
            assert_relative_eq!(back.scale(), c.scale(), epsilon = 1e-10);
            for (x, y) in back.alphas().iter().zip(c.alphas()) {
                assert!((x - y).norm() < 1e-10, "trial {trial}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn generated_matrix_is_hpd() {
        let mut rng = substream(31, 0);
        for _ in 0..50 {
            let c = random_coords(6, 0.9, &mut rng);
            let t = coords_to_matrix(&c);
            crate::matfun::check_hermitian(&t).unwrap();
            let (vals, _) = crate::matfun::hermitian_eigen(&t).unwrap();
            assert!(vals.min() > 0.0, "not PD: min eig {}", vals.min());
        }
    }

    #[test]
    fn determinant_identity() {
        let mut rng = substream(32, 0);
        for _ in 0..100 {
            let c = random_coords(6, 0.9, &mut rng);
            let direct = coords_to_matrix(&c).determinant();
            assert!(direct.im.abs() < 1e-8 * direct.norm());
            let fromcoords = determinant(&c);
            assert_relative_eq!(direct.re, fromcoords, max_relative = 1e-9);
        }
    }

    #[test]
    fn non_pd_matrix_rejected() {
        // Toeplitz Hermitian with |a_1| > a_0 cannot be PD
        let cov = vec![Complex64::new(1.0, 0.0), Complex64::new(1.5, 0.0)];
        assert!(matches!(
            autocov_to_coords(&cov),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn distance_basic_cases() {
        let c = ToeplitzCoords::identity(3);
        assert_eq!(distance(&c, &c).unwrap(), 0.0);

        // pure scale: r ratio e, equal alphas -> sqrt(n)
        let a = ToeplitzCoords::new(1.0, vec![Complex64::new(0.3, 0.1); 2]).unwrap();
        let b = ToeplitzCoords::new(std::f64::consts::E, vec![Complex64::new(0.3, 0.1); 2]).unwrap();
        assert_relative_eq!(distance(&a, &b).unwrap(), 3f64.sqrt(), epsilon = 1e-12);

        // single disc factor with weight n-1 = 1: atanh(0.5)
        let x = ToeplitzCoords::new(1.0, vec![Complex64::new(0.0, 0.0)]).unwrap();
        let y = ToeplitzCoords::new(1.0, vec![Complex64::new(0.5, 0.0)]).unwrap();
        assert_relative_eq!(distance(&x, &y).unwrap(), 0.5f64.atanh(), epsilon = 1e-12);
    }

    #[test]
    fn group_action_preserves_distance() {
        let mut rng = substream(33, 0);
        for _ in 0..100 {
            let a = random_coords(4, 0.9, &mut rng);
            let b = random_coords(4, 0.9, &mut rng);
            let g = ToeplitzGroup::random(4, &mut rng);
            let d0 = distance(&a, &b).unwrap();
            let d1 = distance(&group_action(&g, &a).unwrap(), &group_action(&g, &b).unwrap())
                .unwrap();
            assert!((d0 - d1).abs() < 1e-10, "{d0} vs {d1}");
        }
    }

    #[test]
    fn translation_moves_origin_to_point() {
        let mut rng = substream(34, 0);
        for _ in 0..200 {
            let m: f64 = rng.gen::<f64>() * 0.99;
            let alpha = Complex64::from_polar(m, rng.gen::<f64>() * std::f64::consts::TAU);
            let u = Su11::translation_to(alpha);
            u.check_membership().unwrap();
            let z = mobius(&u, Complex64::new(0.0, 0.0));
            assert!((z - alpha).norm() < 1e-10);
        }
    }

    #[test]
    fn group_membership_rejected() {
        let mut u = Su11::identity();
        u.a = Complex64::new(1.1, 0.0);
        assert!(u.check_membership().is_err());
        let g = ToeplitzGroup {
            scale: 1.0,
            mobius: vec![u],
        };
        let c = ToeplitzCoords::identity(2);
        assert!(matches!(group_action(&g, &c), Err(Error::NotInGroup { .. })));
    }

    #[test]
    fn disc_log_exp_round_trip() {
        let mut rng = substream(35, 0);
        for _ in 0..500 {
            let a = Complex64::from_polar(rng.gen::<f64>() * 0.9, rng.gen::<f64>() * 7.0);
            let b = Complex64::from_polar(rng.gen::<f64>() * 0.9, rng.gen::<f64>() * 7.0);
            let v = disc_log(a, b);
            // norm of the log in the Poincare metric equals the distance
            assert_relative_eq!(
                v.norm() / (1.0 - a.norm_sqr()),
                disc_distance(a, b),
                epsilon = 1e-10
            );
            let back = disc_exp(a, v).unwrap();
            assert!((back - b).norm() < 1e-10);
        }
    }

    #[test]
    fn disc_exp_overflow_reported() {
        let a = Complex64::new(0.0, 0.0);
        assert!(matches!(
            disc_exp(a, Complex64::new(f64::INFINITY, 0.0)),
            Err(Error::ExpMapOverflow)
        ));
    }

    #[test]
    fn log_z_scalar_case() {
        // n = 1: only the Euclidean factor
        assert_relative_eq!(log_z(1, 0.7).unwrap(), 0.7f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn log_z_monotone_and_diverging_at_zero() {
        let mut prev = f64::NEG_INFINITY;
        for i in 1..=40 {
            let sigma = 0.02 * i as f64;
            let z = log_z(5, sigma).unwrap();
            assert!(z > prev);
            prev = z;
        }
        assert!(log_z(5, 1e-4).unwrap() < -30.0);
    }

    #[test]
    fn dlog_z_matches_finite_differences() {
        for (n, sigma) in [(3usize, 0.4f64), (5, 0.9), (20, 1.3)] {
            let eta = -0.5 / (sigma * sigma);
            let h = 1e-6 * eta.abs();
            let at = |e: f64| log_z(n, (-0.5 / e).sqrt()).unwrap();
            let fd = (at(eta + h) - at(eta - h)) / (2.0 * h);
            assert_relative_eq!(dlog_z_deta(n, sigma).unwrap(), fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn disc_radius_sampler_moments() {
        // E[rho^2] against 1-D quadrature of the same density
        let sigma = 0.5;
        let mut rng = substream(36, 0);
        let m = 200_000;
        let mean_sq: f64 = (0..m)
            .map(|_| sample_disc_radius(sigma, &mut rng).powi(2))
            .sum::<f64>()
            / m as f64;
        // quadrature on [0, 12 sigma]
        let steps = 40_000;
        let hi = 12.0 * sigma + sigma * sigma;
        let h = hi / steps as f64;
        let f = |rho: f64| (-rho * rho / (2.0 * sigma * sigma)).exp() * rho.sinh();
        let mut num = 0.0;
        let mut den = 0.0;
        for k in 0..steps {
            let x = (k as f64 + 0.5) * h;
            let w = f(x);
            num += x * x * w;
            den += w;
        }
        let expected = num / den;
        assert!(
            (mean_sq - expected).abs() < 0.02 * expected,
            "{mean_sq} vs {expected}"
        );
    }

    #[test]
    fn disc_radius_sign_symmetric() {
        let mut rng = substream(37, 0);
        let m = 100_000;
        let mean: f64 = (0..m).map(|_| sample_disc_radius(0.7, &mut rng)).sum::<f64>() / m as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn sampler_log_scale_marginal() {
        // log r is N(log rbar, sigma^2 / n) by construction
        let mut rng = substream(38, 0);
        let centre = ToeplitzCoords::new(2.0, vec![Complex64::new(0.4, 0.2), Complex64::new(0.0, 0.0)]).unwrap();
        let sigma = 0.8;
        let m = 50_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..m {
            let s = sample(&centre, sigma, &mut rng).unwrap();
            let t = s.scale().ln();
            sum += t;
            sumsq += t * t;
        }
        let mean = sum / m as f64;
        let var = sumsq / m as f64 - mean * mean;
        assert!((mean - 2.0f64.ln()).abs() < 0.01);
        assert!((var - sigma * sigma / 3.0).abs() < 0.01);
    }

    #[test]
    fn sampler_concentrates_for_small_sigma() {
        let mut rng = substream(39, 0);
        let centre = random_coords(4, 0.7, &mut rng);
        let mean_d2: f64 = (0..300)
            .map(|_| {
                let s = sample(&centre, 0.01, &mut rng).unwrap();
                distance_sq(&centre, &s).unwrap()
            })
            .sum::<f64>()
            / 300.0;
        assert!(mean_d2 < 1e-3, "{mean_d2}");
    }
}
