//! Dense-matrix utilities: Hermitian matrix functions, the Takagi
//! factorisation of complex symmetric matrices, and Haar-distributed
//! unitary matrices.
//!
//! These are the building blocks behind the spectral and polar
//! decompositions used by all three covariance-matrix spaces.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rng::{self, Stream};

pub type CMat = DMatrix<Complex64>;

/// Relative tolerance for Hermitian / symmetric structure checks.
pub const STRUCTURE_TOL: f64 = 1e-12;

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn adjoint(m: &CMat) -> CMat {
    m.adjoint()
}

/// Residual of `m` against Hermitian structure, relative to its norm.
pub fn hermitian_residual(m: &CMat) -> f64 {
    let scale = frobenius(m).max(1.0);
    frobenius(&(m - m.adjoint())) / scale
}

/// Residual of `m` against complex-symmetric structure, relative to its norm.
pub fn symmetric_residual(m: &CMat) -> f64 {
    let scale = frobenius(m).max(1.0);
    frobenius(&(m - m.transpose())) / scale
}

pub fn check_hermitian(m: &CMat) -> Result<()> {
    let residual = hermitian_residual(m);
    if residual > STRUCTURE_TOL {
        return Err(Error::NotHermitian {
            residual,
            tol: STRUCTURE_TOL,
        });
    }
    Ok(())
}

pub fn check_symmetric(m: &CMat) -> Result<()> {
    let residual = symmetric_residual(m);
    if residual > STRUCTURE_TOL {
        return Err(Error::NotSymmetric {
            residual,
            tol: STRUCTURE_TOL,
        });
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix: `(eigenvalues, U)` with
/// `m = U diag(w) U^H`. Eigenvalues ascending.
pub fn hermitian_eigen(m: &CMat) -> Result<(DVector<f64>, CMat)> {
    check_hermitian(m)?;
    // Symmetrize first so the decomposition sees an exactly Hermitian input.
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let n = m.nrows();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let vals = DVector::from_iterator(n, idx.iter().map(|&i| eig.eigenvalues[i]));
    let vecs = CMat::from_columns(&idx.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>());
    Ok((vals, vecs))
}

/// Hermitian matrix function: `f` applied to the spectrum, `U f(w) U^H`.
///
/// `f` must be defined (finite) on every eigenvalue; otherwise the
/// offending eigenvalue is reported.
pub fn hermitian_matfun<F: Fn(f64) -> f64>(m: &CMat, f: F) -> Result<CMat> {
    let (vals, u) = hermitian_eigen(m)?;
    let mut fw = DVector::zeros(vals.len());
    for (i, &w) in vals.iter().enumerate() {
        let v = f(w);
        if !v.is_finite() {
            return Err(Error::MatrixFunctionDomain { eig: w });
        }
        fw[i] = v;
    }
    let diag = CMat::from_diagonal(&fw.map(|v| Complex64::new(v, 0.0)));
    Ok(&u * diag * u.adjoint())
}

/// Result of a Takagi factorisation `omega = theta
/// diag(s) theta^T` of a complex symmetric matrix, with `s >= 0` sorted
/// descending and `theta` unitary.
#[derive(Debug, Clone)]
pub struct Takagi {
    pub theta: CMat,
    pub sing_vals: Vec<f64>,
}

impl Takagi {
    pub fn reconstruct(&self) -> CMat {
        let s = CMat::from_diagonal(&DVector::from_iterator(
            self.sing_vals.len(),
            self.sing_vals.iter().map(|&v| Complex64::new(v, 0.0)),
        ));
        &self.theta * s * self.theta.transpose()
    }

    /// Radial coordinates r with s = tanh(r); requires all s < 1.
    pub fn disc_radii(&self) -> Result<Vec<f64>> {
        self.sing_vals
            .iter()
            .map(|&s| {
                if s >= 1.0 {
                    Err(Error::OutsideDisc { modulus: s })
                } else {
                    Ok(s.atanh())
                }
            })
            .collect()
    }
}

/// Takagi factorisation through the real symmetric embedding
/// `[[Re W, Im W], [Im W, -Re W]]`, whose +s eigenvectors are the
/// con-eigenvectors of `W`. Robust under repeated singular values.
pub fn takagi(omega: &CMat) -> Result<Takagi> {
    check_symmetric(omega)?;
    let n = omega.nrows();
    if n == 0 {
        return Ok(Takagi {
            theta: identity(0),
            sing_vals: vec![],
        });
    }
    let w = (omega + omega.transpose()).scale(0.5);

    let mut emb = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = w[(i, j)];
            emb[(i, j)] = z.re;
            emb[(i, j + n)] = z.im;
            emb[(i + n, j)] = z.im;
            emb[(i + n, j + n)] = -z.re;
        }
    }
    let eig = emb.symmetric_eigen();

    // Pair eigenvalues as (+s, -s); keep one con-eigenvector per pair.
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());

    let mut cols: Vec<DVector<Complex64>> = Vec::with_capacity(n);
    let mut svals: Vec<f64> = Vec::with_capacity(n);
    for &k in order.iter() {
        if cols.len() == n {
            break;
        }
        let s = eig.eigenvalues[k];
        if s < 0.0 && cols.len() < n {
            // Only reachable when zero modes were consumed unevenly; the
            // complex Gram-Schmidt below guards against that.
        }
        let col = eig.eigenvectors.column(k);
        let mut v = DVector::from_iterator(
            n,
            (0..n).map(|i| Complex64::new(col[i], col[i + n])),
        );
        // Real-coefficient Gram-Schmidt against the already accepted
        // con-eigenvectors: within a +s/-s pair the real solver can hand
        // back a mix of v and iv, which are conjugate-dependent.
        for u in &cols {
            let inner: Complex64 = u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
            v -= u.scale(inner.re);
            let inner_i: Complex64 = u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
            v -= u.scale(inner_i.im) * Complex64::i();
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-9 {
            continue;
        }
        v /= Complex64::new(norm, 0.0);
        cols.push(v);
        svals.push(s.max(0.0));
    }
    if cols.len() != n {
        return Err(Error::InvalidParameter(
            "takagi embedding produced a defective basis".into(),
        ));
    }
    let theta = CMat::from_columns(&cols);
    Ok(Takagi {
        theta,
        sing_vals: svals,
    })
}

/// Haar-uniform sample from U(n): QR of a complex Ginibre matrix with the
/// R-diagonal phases folded into Q. Without the phase fix QR is not Haar.
pub fn sample_unitary(n: usize, rng: &mut Stream) -> CMat {
    assert!(n >= 1, "dimension must be at least 1");
    loop {
        let z = CMat::from_fn(n, n, |_, _| rng::standard_complex_normal(rng));
        let qr = z.qr();
        let r = qr.r();
        if (0..n).any(|i| r[(i, i)].norm() < 1e-300) {
            continue; // degenerate draw, retry
        }
        let mut q = qr.q();
        for i in 0..n {
            let phase = r[(i, i)] / r[(i, i)].norm();
            for k in 0..n {
                q[(k, i)] *= phase;
            }
        }
        return q;
    }
}

/// Haar sample from U(n) rescaled by the reciprocal determinant phase root,
/// so the output has unit determinant.
pub fn sample_special_unitary(n: usize, rng: &mut Stream) -> CMat {
    let u = sample_unitary(n, rng);
    let det = u.determinant();
    let phase = det.arg();
    u * Complex64::from_polar(1.0, -phase / n as f64)
}

/// Random Hermitian positive definite matrix (for tests and group draws):
/// `exp` of a random Hermitian matrix with entries scaled by `spread`.
pub fn random_hpd(n: usize, spread: f64, rng: &mut Stream) -> CMat {
    let h = random_hermitian(n, spread, rng);
    hermitian_matfun(&h, f64::exp).expect("exp of Hermitian is defined")
}

pub fn random_hermitian(n: usize, spread: f64, rng: &mut Stream) -> CMat {
    let a = CMat::from_fn(n, n, |_, _| rng::standard_complex_normal(rng) * spread);
    (&a + a.adjoint()).scale(0.5)
}

pub fn random_symmetric(n: usize, spread: f64, rng: &mut Stream) -> CMat {
    let a = CMat::from_fn(n, n, |_, _| rng::standard_complex_normal(rng) * spread);
    (&a + a.transpose()).scale(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use approx::assert_relative_eq;

    #[test]
    fn matfun_log_of_identity_is_zero() {
        let m = identity(3);
        let out = hermitian_matfun(&m, f64::ln).unwrap();
        assert!(frobenius(&out) < 1e-14);
    }

    #[test]
    fn matfun_sqrt_of_diagonal() {
        let m = CMat::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(4.0, 0.0),
            Complex64::new(9.0, 0.0),
        ]));
        let out = hermitian_matfun(&m, f64::sqrt).unwrap();
        assert_relative_eq!(out[(0, 0)].re, 2.0, epsilon = 1e-13);
        assert_relative_eq!(out[(1, 1)].re, 3.0, epsilon = 1e-13);
        assert!(out[(0, 1)].norm() < 1e-13);
    }

    #[test]
    fn matfun_exp_log_round_trip() {
        let mut rng = substream(7, 0);
        for _ in 0..20 {
            let y = random_hpd(4, 0.8, &mut rng);
            let logy = hermitian_matfun(&y, f64::ln).unwrap();
            let back = hermitian_matfun(&logy, f64::exp).unwrap();
            assert!(frobenius(&(&back - &y)) < 1e-10 * frobenius(&y).max(1.0));
        }
    }

    #[test]
    fn matfun_identity_function_fixes_input() {
        let mut rng = substream(8, 0);
        let h = random_hermitian(5, 1.0, &mut rng);
        let out = hermitian_matfun(&h, |x| x).unwrap();
        assert!(frobenius(&(&out - &h)) < 1e-12 * frobenius(&h).max(1.0));
    }

    #[test]
    fn matfun_sqrt_squares_back() {
        let mut rng = substream(9, 0);
        let y = random_hpd(4, 1.0, &mut rng);
        let s = hermitian_matfun(&y, f64::sqrt).unwrap();
        assert!(frobenius(&(&s * &s - &y)) < 1e-10 * frobenius(&y));
    }

    #[test]
    fn matfun_rejects_non_hermitian() {
        let m = CMat::from_fn(2, 2, |i, j| Complex64::new((i + 2 * j) as f64, 1.0));
        assert!(matches!(
            hermitian_matfun(&m, |x| x),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn matfun_rejects_log_of_nonpositive() {
        let m = CMat::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(-2.0, 0.0),
        ]));
        assert!(matches!(
            hermitian_matfun(&m, f64::ln),
            Err(Error::MatrixFunctionDomain { .. })
        ));
    }

    #[test]
    fn takagi_zero_matrix() {
        let t = takagi(&CMat::zeros(3, 3)).unwrap();
        assert!(t.sing_vals.iter().all(|&s| s.abs() < 1e-12));
        assert!(frobenius(&(&t.theta * t.theta.adjoint() - identity(3))) < 1e-10);
    }

    #[test]
    fn takagi_scalar_half() {
        let m = CMat::from_element(1, 1, Complex64::new(0.5, 0.0));
        let t = takagi(&m).unwrap();
        assert_relative_eq!(t.sing_vals[0], 0.5, epsilon = 1e-12);
        let r = t.disc_radii().unwrap();
        assert_relative_eq!(r[0], 0.5f64.atanh(), epsilon = 1e-12);
    }

    #[test]
    fn takagi_reconstruction_random() {
        let mut rng = substream(10, 0);
        for trial in 0..200 {
            let n = 1 + (trial % 4);
            let mut w = random_symmetric(n, 0.4, &mut rng);
            // keep spectral norm below 0.99
            let nrm = w.clone().svd(false, false).singular_values.max();
            if nrm >= 0.99 {
                w = w.scale(0.9 / nrm);
            }
            let t = takagi(&w).unwrap();
            assert!(
                frobenius(&(t.reconstruct() - &w)) < 1e-10,
                "reconstruction failed at trial {trial}"
            );
            assert!(frobenius(&(&t.theta * t.theta.adjoint() - identity(n))) < 1e-10);
            assert!(t.sing_vals.windows(2).all(|p| p[0] >= p[1] - 1e-12));
        }
    }

    #[test]
    fn takagi_degenerate_spectrum() {
        // equal singular values: scalar multiple of a unitary symmetric matrix
        let m = identity(3) * Complex64::new(0.0, 0.7);
        let t = takagi(&m).unwrap();
        assert!(frobenius(&(t.reconstruct() - &m)) < 1e-10);
        for &s in &t.sing_vals {
            assert_relative_eq!(s, 0.7, epsilon = 1e-10);
        }
    }

    #[test]
    fn takagi_rejects_nonsymmetric() {
        let m = CMat::from_fn(2, 2, |i, j| Complex64::new(i as f64 - j as f64, 0.0));
        assert!(matches!(takagi(&m), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn unitary_is_unitary() {
        let mut rng = substream(11, 0);
        for n in 1..=5 {
            let u = sample_unitary(n, &mut rng);
            assert!(frobenius(&(u.adjoint() * &u - identity(n))) < 1e-12);
        }
    }

    #[test]
    fn special_unitary_has_unit_determinant() {
        let mut rng = substream(12, 0);
        for n in 1..=5 {
            let u = sample_special_unitary(n, &mut rng);
            assert!((u.determinant() - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        }
        // N = 1 always yields exactly the scalar 1
        let u1 = sample_special_unitary(1, &mut rng);
        assert!((u1[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn haar_first_entry_moment() {
        // E|U_11|^2 = 1/n for Haar measure on U(n).
        let mut rng = substream(13, 0);
        let draws = 20_000;
        let n = 3;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..draws {
            let u = sample_unitary(n, &mut rng);
            let v = u[(0, 0)].norm_sqr();
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / draws as f64;
        let var = (sumsq / draws as f64 - mean * mean).max(0.0);
        let stderr = (var / draws as f64).sqrt();
        assert!(
            (mean - 1.0 / n as f64).abs() < 3.0 * stderr,
            "mean {mean} vs 1/3, stderr {stderr}"
        );
    }
}
