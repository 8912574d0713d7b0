//! The space of Hermitian positive definite block-Toeplitz matrices
//! (n x n blocks of size N x N) in matrix reflection-coefficient
//! coordinates (P, Omega_1, ..., Omega_{n-1}), where P is the Toeplitz
//! HPD diagonal block and each Omega_j lies in the Siegel disc D_N of
//! complex symmetric contractions.
//!
//! The metric is the weighted product of the Toeplitz metric on P and
//! the Siegel metric `tr[(I - W W*)^-1 dW (I - W* W)^-1 dW*]` on each
//! disc factor, with weights n and n - j. The distance on D_N is
//! `d^2(Phi, Psi) = tr atanh^2(R^(1/2))` with
//! `R = (Psi-Phi)(I-Phi* Psi)^-1 (Psi*-Phi*)(I-Phi Psi*)^-1`; after the
//! isometry taking Phi to 0 this becomes the Hermitian matrix M M^H for
//! the translated point M, which is how it is evaluated here.
//!
//! The coordinate map is a multichannel Levinson recursion with the
//! normalized reflection coefficient
//!
//!   Omega_m = - F^(-1/2) Delta_m J conj(F)^(-1/2),   F = forward error
//!   covariance, J = exchange matrix,
//!
//! which is complex symmetric whenever the blocks are persymmetric
//! (symmetric about the anti-diagonal), reduces to the scalar recursion
//! at N = 1, and gives det T = det(P)^n prod det(I - Omega_j^H
//! Omega_j)^(n-j).

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::hpd::{log_mean_stderr, log_sinh, metropolis_chain, MhConfig, MhDiagnostics};
use crate::matfun::{self, CMat};
use crate::rng::{self, Stream};
use crate::toeplitz::{self, ToeplitzCoords, ToeplitzGroup, DISC_CAP};

/// A point of the Siegel disc: complex symmetric with spectral norm < 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SiegelPoint {
    mat: CMat,
}

impl SiegelPoint {
    pub fn new(mat: CMat) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows().max(1),
                got: mat.ncols(),
            });
        }
        matfun::check_symmetric(&mat)?;
        let top = mat.clone().svd(false, false).singular_values.max();
        if !(top < 1.0) {
            return Err(Error::OutsideDisc { modulus: top });
        }
        Ok(Self { mat })
    }

    pub(crate) fn new_unchecked(mat: CMat) -> Self {
        Self { mat }
    }

    pub fn zero(n: usize) -> Self {
        Self {
            mat: CMat::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }
}

/// Random Siegel point with spectral norm at most `max_norm`.
pub fn random_siegel(n: usize, max_norm: f64, rng: &mut Stream) -> SiegelPoint {
    let mut w = matfun::random_symmetric(n, 0.5, rng);
    let top = w.clone().svd(false, false).singular_values.max();
    let target = max_norm * rng.gen::<f64>();
    if top > 0.0 {
        w.scale_mut(target / top);
    }
    SiegelPoint::new_unchecked(w)
}

// ---------------------------------------------------------------------------
// Siegel disc geometry
// ---------------------------------------------------------------------------

/// The translation U(W) with U(W) . 0 = W, built from the Takagi
/// factorisation W = Theta tanh(r) Theta^T:
/// block rows [Theta cosh(r), Theta sinh(r); conj(Theta) sinh(r),
/// conj(Theta) cosh(r)].
pub struct SiegelTranslation {
    theta: CMat,
    radii: Vec<f64>,
}

impl SiegelTranslation {
    pub fn to_point(w: &SiegelPoint) -> Result<Self> {
        let tak = matfun::takagi(w.matrix())?;
        let radii = tak.disc_radii()?;
        Ok(Self {
            theta: tak.theta,
            radii,
        })
    }

    fn diag(&self, f: impl Fn(f64) -> f64) -> CMat {
        CMat::from_diagonal(&DVector::from_iterator(
            self.radii.len(),
            self.radii.iter().map(|&r| Complex64::new(f(r), 0.0)),
        ))
    }

    /// Full 2N x 2N group element.
    pub fn group_element(&self) -> SiegelGroup {
        let n = self.radii.len();
        let a = &self.theta * self.diag(f64::cosh);
        let b = &self.theta * self.diag(f64::sinh);
        let tc = self.theta.conjugate();
        let c = &tc * self.diag(f64::sinh);
        let d = &tc * self.diag(f64::cosh);
        let mut m = CMat::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&a);
        m.view_mut((0, n), (n, n)).copy_from(&b);
        m.view_mut((n, 0), (n, n)).copy_from(&c);
        m.view_mut((n, n), (n, n)).copy_from(&d);
        SiegelGroup { mat: m }
    }

    /// Apply U(W)^-1 . z without forming the 2N matrix.
    pub fn pull(&self, z: &SiegelPoint) -> Result<SiegelPoint> {
        // inverse blocks: A' = ch Theta^H, B' = -sh Theta^T, C' = -sh
        // Theta^H, D' = ch Theta^T (from the symplectic inverse)
        let th = self.theta.adjoint();
        let tt = self.theta.transpose();
        let ch = self.diag(f64::cosh);
        let sh = self.diag(f64::sinh);
        let num = &ch * &th * z.matrix() - &sh * &tt;
        let den = -(&sh) * &th * z.matrix() + &ch * &tt;
        mobius_from_parts(&num, &den)
    }

    /// Apply U(W) . z.
    pub fn push(&self, z: &SiegelPoint) -> Result<SiegelPoint> {
        let ch = self.diag(f64::cosh);
        let sh = self.diag(f64::sinh);
        let num = &self.theta * (&ch * z.matrix() + &sh);
        let den = self.theta.conjugate() * (&sh * z.matrix() + &ch);
        mobius_from_parts(&num, &den)
    }

    /// Differential of U(W) at the origin applied to a symmetric tangent
    /// matrix: Theta cosh(r)^-1 V cosh(r)^-1 Theta^T.
    pub fn push_tangent(&self, v: &CMat) -> CMat {
        let ci = self.diag(|r| 1.0 / r.cosh());
        &self.theta * (&ci * v * &ci) * self.theta.transpose()
    }

    /// Inverse of [`push_tangent`].
    pub fn pull_tangent(&self, v: &CMat) -> CMat {
        let ch = self.diag(f64::cosh);
        let inner = self.theta.adjoint() * v * self.theta.conjugate();
        &ch * inner * &ch
    }
}

fn mobius_from_parts(num: &CMat, den: &CMat) -> Result<SiegelPoint> {
    let inv = den
        .clone()
        .try_inverse()
        .ok_or(Error::ExpMapOverflow)?;
    let raw = num * inv;
    // symmetrize away rounding, then cap just inside the disc
    let sym = (&raw + raw.transpose()).scale(0.5);
    let top = sym.clone().svd(false, false).singular_values.max();
    if !top.is_finite() || top >= 1.0 + 1e-9 {
        return Err(Error::OutsideDisc { modulus: top });
    }
    let capped = if top >= DISC_CAP {
        sym.scale(DISC_CAP / top)
    } else {
        sym
    };
    Ok(SiegelPoint::new_unchecked(capped))
}

/// Element of the group acting on D_N through matrix Mobius transforms.
#[derive(Debug, Clone)]
pub struct SiegelGroup {
    mat: CMat,
}

impl SiegelGroup {
    pub fn new(mat: CMat) -> Result<Self> {
        let g = Self { mat };
        g.check_membership()?;
        Ok(g)
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn block_dim(&self) -> usize {
        self.mat.nrows() / 2
    }

    pub fn identity(n: usize) -> Self {
        Self {
            mat: matfun::identity(2 * n),
        }
    }

    /// Residual against U^T J U = J and U^H C U = C.
    pub fn membership_residual(&self) -> f64 {
        let n = self.block_dim();
        let mut j = CMat::zeros(2 * n, 2 * n);
        let mut c = CMat::zeros(2 * n, 2 * n);
        for i in 0..n {
            j[(i, n + i)] = Complex64::new(-1.0, 0.0);
            j[(n + i, i)] = Complex64::new(1.0, 0.0);
            c[(i, i)] = Complex64::new(-1.0, 0.0);
            c[(n + i, n + i)] = Complex64::new(1.0, 0.0);
        }
        let r1 = matfun::frobenius(&(self.mat.transpose() * &j * &self.mat - &j));
        let r2 = matfun::frobenius(&(self.mat.adjoint() * &c * &self.mat - &c));
        r1.max(r2)
    }

    pub fn check_membership(&self) -> Result<()> {
        let residual = self.membership_residual();
        if residual > 1e-10 {
            return Err(Error::NotInGroup { residual });
        }
        Ok(())
    }

    /// Mobius action (A W + B)(C W + D)^-1.
    pub fn act(&self, w: &SiegelPoint) -> Result<SiegelPoint> {
        let n = self.block_dim();
        if w.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: w.dim(),
            });
        }
        let a = self.mat.view((0, 0), (n, n));
        let b = self.mat.view((0, n), (n, n));
        let c = self.mat.view((n, 0), (n, n));
        let d = self.mat.view((n, n), (n, n));
        let num = a * w.matrix() + b;
        let den = c * w.matrix() + d;
        mobius_from_parts(&num, &den)
    }

    /// Random element: translation composed with a diagonal-embedded
    /// unitary rotation.
    pub fn random(n: usize, rng: &mut Stream) -> Self {
        let w = random_siegel(n, 0.7, rng);
        let t = SiegelTranslation::to_point(&w).unwrap().group_element();
        let u = matfun::sample_unitary(n, rng);
        let mut k = CMat::zeros(2 * n, 2 * n);
        k.view_mut((0, 0), (n, n)).copy_from(&u);
        k.view_mut((n, n), (n, n)).copy_from(&u.conjugate());
        Self {
            mat: &t.mat * k,
        }
    }
}

/// Siegel distance d(Phi, Psi) = sqrt(sum atanh^2 s_i), where s_i are the
/// singular values of the translate of Psi under the isometry sending Phi
/// to the origin (the eigenvalues of the paper's matrix R are s_i^2).
pub fn siegel_distance(a: &SiegelPoint, b: &SiegelPoint) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let m = SiegelTranslation::to_point(a)?.pull(b)?;
    // R at the origin is M M^H, Hermitian PSD
    let r = m.matrix() * m.matrix().adjoint();
    let (vals, _) = matfun::hermitian_eigen(&r)?;
    let mut acc = 0.0;
    for &l in vals.iter() {
        if l >= 1.0 + 1e-9 {
            return Err(Error::OutsideDisc { modulus: l.sqrt() });
        }
        let clipped = l.clamp(0.0, 1.0 - 1e-14);
        acc += clipped.sqrt().atanh().powi(2);
    }
    Ok(acc.sqrt())
}

/// Log map on the Siegel disc: symmetric tangent matrix V at `a` with
/// push-invariant norm equal to the distance.
pub fn siegel_log(a: &SiegelPoint, b: &SiegelPoint) -> Result<CMat> {
    let tr = SiegelTranslation::to_point(a)?;
    let m = tr.pull(b)?;
    let tak = matfun::takagi(m.matrix())?;
    let radii = tak.disc_radii()?;
    let v0 = &tak.theta
        * CMat::from_diagonal(&DVector::from_iterator(
            radii.len(),
            radii.iter().map(|&r| Complex64::new(r, 0.0)),
        ))
        * tak.theta.transpose();
    Ok(tr.push_tangent(&v0))
}

/// Exp map on the Siegel disc, inverse of [`siegel_log`].
pub fn siegel_exp(a: &SiegelPoint, v: &CMat) -> Result<SiegelPoint> {
    matfun::check_symmetric(v)?;
    let tr = SiegelTranslation::to_point(a)?;
    let v0 = tr.pull_tangent(v);
    let tak = matfun::takagi(&v0)?;
    let tanh = CMat::from_diagonal(&DVector::from_iterator(
        tak.sing_vals.len(),
        tak.sing_vals.iter().map(|&s| Complex64::new(s.tanh(), 0.0)),
    ));
    let m = SiegelPoint::new_unchecked(&tak.theta * tanh * tak.theta.transpose());
    tr.push(&m)
}

/// Norm of a tangent matrix at `a` (Frobenius norm of its origin chart).
pub fn siegel_tangent_norm(a: &SiegelPoint, v: &CMat) -> Result<f64> {
    let tr = SiegelTranslation::to_point(a)?;
    Ok(matfun::frobenius(&tr.pull_tangent(v)))
}

// ---------------------------------------------------------------------------
// Block coordinates
// ---------------------------------------------------------------------------

/// Matrix reflection-coefficient coordinates of a block-Toeplitz HPD
/// matrix: diagonal Toeplitz block P and Siegel points Omega_1..Omega_{n-1}.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockToeplitzCoords {
    p: ToeplitzCoords,
    omegas: Vec<SiegelPoint>,
}

impl BlockToeplitzCoords {
    pub fn new(p: ToeplitzCoords, omegas: Vec<SiegelPoint>) -> Result<Self> {
        let n_block = p.size();
        for w in &omegas {
            if w.dim() != n_block {
                return Err(Error::DimensionMismatch {
                    expected: n_block,
                    got: w.dim(),
                });
            }
        }
        Ok(Self { p, omegas })
    }

    pub fn identity(n: usize, block: usize) -> Self {
        Self {
            p: ToeplitzCoords::identity(block),
            omegas: vec![SiegelPoint::zero(block); n - 1],
        }
    }

    /// Number of blocks n.
    pub fn blocks(&self) -> usize {
        self.omegas.len() + 1
    }

    /// Block size N.
    pub fn block_dim(&self) -> usize {
        self.p.size()
    }

    pub fn p(&self) -> &ToeplitzCoords {
        &self.p
    }

    pub fn omegas(&self) -> &[SiegelPoint] {
        &self.omegas
    }
}

fn exchange(n: usize) -> CMat {
    CMat::from_fn(n, n, |i, j| {
        if i + j == n - 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

fn hermitian_sqrt(m: &CMat) -> Result<CMat> {
    matfun::hermitian_matfun(m, f64::sqrt)
}

fn hermitian_inv(m: &CMat) -> Result<CMat> {
    matfun::hermitian_matfun(m, |x| 1.0 / x)
}

struct LevinsonState {
    fwd: Vec<CMat>,
    bwd: Vec<CMat>,
    sig_f: CMat,
    sig_b: CMat,
}

impl LevinsonState {
    fn init(c0: &CMat) -> Self {
        Self {
            fwd: Vec::new(),
            bwd: Vec::new(),
            sig_f: c0.clone(),
            sig_b: c0.clone(),
        }
    }

    /// Order update shared by both directions of the coordinate map.
    fn advance(&mut self, delta: &CMat) -> Result<()> {
        let sb_inv = hermitian_inv(&self.sig_b)?;
        let sf_inv = hermitian_inv(&self.sig_f)?;
        let a_new = -(delta * &sb_inv);
        let b_new = -(delta.adjoint() * &sf_inv);
        let m = self.fwd.len();
        let mut fwd_next = Vec::with_capacity(m + 1);
        let mut bwd_next = Vec::with_capacity(m + 1);
        for i in 0..m {
            fwd_next.push(&self.fwd[i] + &a_new * &self.bwd[m - 1 - i]);
            bwd_next.push(&self.bwd[i] + &b_new * &self.fwd[m - 1 - i]);
        }
        fwd_next.push(a_new);
        bwd_next.push(b_new);
        self.sig_f = &self.sig_f - delta * &sb_inv * delta.adjoint();
        self.sig_b = &self.sig_b - delta.adjoint() * &sf_inv * delta;
        self.fwd = fwd_next;
        self.bwd = bwd_next;
        Ok(())
    }

    fn innovation(&self, cov: &[CMat], m: usize) -> CMat {
        let mut delta = cov[m].clone();
        for (i, a) in self.fwd.iter().enumerate() {
            delta += a * &cov[m - 1 - i];
        }
        delta
    }
}

/// Block autocovariances (C_0, ..., C_{n-1}) generated from coordinates.
pub fn coords_to_blocks(c: &BlockToeplitzCoords) -> Result<Vec<CMat>> {
    let nb = c.block_dim();
    let j = exchange(nb);
    let c0 = toeplitz::coords_to_matrix(&c.p);
    let mut cov = vec![c0.clone()];
    let mut st = LevinsonState::init(&c0);
    for omega in &c.omegas {
        let f_half = hermitian_sqrt(&st.sig_f)?;
        let delta = -(&f_half * omega.matrix() * f_half.conjugate() * &j);
        let m = cov.len();
        let mut next = delta.clone();
        for (i, a) in st.fwd.iter().enumerate() {
            next -= a * &cov[m - 1 - i];
        }
        cov.push(next);
        st.advance(&delta)?;
    }
    Ok(cov)
}

/// Dense nN x nN Hermitian block-Toeplitz matrix from coordinates.
pub fn coords_to_matrix(c: &BlockToeplitzCoords) -> Result<CMat> {
    let blocks = coords_to_blocks(c)?;
    Ok(blocks_to_matrix(&blocks))
}

pub fn blocks_to_matrix(blocks: &[CMat]) -> CMat {
    let n = blocks.len();
    let nb = blocks[0].nrows();
    let mut t = CMat::zeros(n * nb, n * nb);
    for i in 0..n {
        for j in 0..n {
            let blk = if i >= j {
                blocks[i - j].clone()
            } else {
                blocks[j - i].adjoint()
            };
            t.view_mut((i * nb, j * nb), (nb, nb)).copy_from(&blk);
        }
    }
    t
}

/// Extract the first block column of a block-Toeplitz matrix, validating
/// the block-Toeplitz and Hermitian structure.
pub fn matrix_to_blocks(t: &CMat, n: usize, nb: usize) -> Result<Vec<CMat>> {
    if t.nrows() != n * nb || t.ncols() != n * nb {
        return Err(Error::DimensionMismatch {
            expected: n * nb,
            got: t.nrows(),
        });
    }
    let scale = t.iter().map(|z| z.norm()).fold(0.0f64, f64::max).max(1.0);
    matfun::check_hermitian(&t.scale(1.0 / scale))?;
    let blocks: Vec<CMat> = (0..n)
        .map(|k| t.view((k * nb, 0), (nb, nb)).into_owned())
        .collect();
    for i in 0..n {
        for j in 0..n {
            let expect = if i >= j {
                blocks[i - j].clone()
            } else {
                blocks[j - i].adjoint()
            };
            let got = t.view((i * nb, j * nb), (nb, nb));
            if matfun::frobenius(&(got - expect)) > 1e-9 * scale {
                return Err(Error::InvalidParameter(
                    "matrix is not block-Toeplitz".into(),
                ));
            }
        }
    }
    Ok(blocks)
}

/// Inverse of [`coords_to_matrix`]: multichannel Levinson on the block
/// autocovariances. A non-contractive or non-symmetric reflection
/// coefficient signals a non-PD input or a block structure outside the
/// coordinate range.
pub fn matrix_to_coords(t: &CMat, n: usize, nb: usize) -> Result<BlockToeplitzCoords> {
    let cov = matrix_to_blocks(t, n, nb)?;
    blocks_to_coords(&cov)
}

pub fn blocks_to_coords(cov: &[CMat]) -> Result<BlockToeplitzCoords> {
    let nb = cov[0].nrows();
    let j = exchange(nb);
    let p = toeplitz::matrix_to_coords(&cov[0])?;
    let mut st = LevinsonState::init(&cov[0]);
    let mut omegas = Vec::with_capacity(cov.len() - 1);
    for m in 1..cov.len() {
        let delta = st.innovation(cov, m);
        let f_half_inv = matfun::hermitian_matfun(&st.sig_f, |x| {
            if x <= 0.0 {
                f64::NAN
            } else {
                1.0 / x.sqrt()
            }
        })
        .map_err(|_| Error::NotPositiveDefinite { min_eig: 0.0 })?;
        let omega_raw = -(&f_half_inv * &delta * &j * f_half_inv.conjugate());
        let sym_res = matfun::symmetric_residual(&omega_raw);
        if sym_res > 1e-8 {
            return Err(Error::NotSymmetric {
                residual: sym_res,
                tol: 1e-8,
            });
        }
        let omega_sym = (&omega_raw + omega_raw.transpose()).scale(0.5);
        let top = omega_sym.clone().svd(false, false).singular_values.max();
        if !(top < 1.0) {
            return Err(Error::OutsideDisc { modulus: top });
        }
        omegas.push(SiegelPoint::new_unchecked(omega_sym));
        st.advance(&delta)?;
    }
    BlockToeplitzCoords::new(p, omegas)
}

/// det T = det(P)^n prod_j det(I - Omega_j^H Omega_j)^(n-j).
pub fn determinant(c: &BlockToeplitzCoords) -> f64 {
    let n = c.blocks() as i32;
    let mut det = toeplitz::determinant(&c.p).powi(n);
    let id = matfun::identity(c.block_dim());
    for (j, w) in c.omegas.iter().enumerate() {
        let gram = &id - w.matrix().adjoint() * w.matrix();
        det *= gram.determinant().re.powi(n - (j as i32 + 1));
    }
    det
}

// ---------------------------------------------------------------------------
// Distance and group action
// ---------------------------------------------------------------------------

pub fn distance_sq(a: &BlockToeplitzCoords, b: &BlockToeplitzCoords) -> Result<f64> {
    if a.blocks() != b.blocks() || a.block_dim() != b.block_dim() {
        return Err(Error::DimensionMismatch {
            expected: a.blocks() * a.block_dim(),
            got: b.blocks() * b.block_dim(),
        });
    }
    let n = a.blocks() as f64;
    let mut acc = n * toeplitz::distance_sq(&a.p, &b.p)?;
    for (j, (x, y)) in a.omegas.iter().zip(&b.omegas).enumerate() {
        let w = n - (j as f64 + 1.0);
        acc += w * siegel_distance(x, y)?.powi(2);
    }
    Ok(acc)
}

pub fn distance(a: &BlockToeplitzCoords, b: &BlockToeplitzCoords) -> Result<f64> {
    Ok(distance_sq(a, b)?.sqrt())
}

/// Group element: Toeplitz group on the P factor and one Siegel Mobius
/// element per disc factor.
#[derive(Debug, Clone)]
pub struct BlockToeplitzGroup {
    pub p_part: ToeplitzGroup,
    pub siegel: Vec<SiegelGroup>,
}

impl BlockToeplitzGroup {
    pub fn identity(n: usize, nb: usize) -> Self {
        Self {
            p_part: ToeplitzGroup::identity(nb),
            siegel: vec![SiegelGroup::identity(nb); n - 1],
        }
    }

    pub fn random(n: usize, nb: usize, rng: &mut Stream) -> Self {
        Self {
            p_part: ToeplitzGroup::random(nb, rng),
            siegel: (0..n - 1).map(|_| SiegelGroup::random(nb, rng)).collect(),
        }
    }

    pub fn check_membership(&self) -> Result<()> {
        self.p_part.check_membership()?;
        for g in &self.siegel {
            g.check_membership()?;
        }
        Ok(())
    }
}

pub fn group_action(
    g: &BlockToeplitzGroup,
    c: &BlockToeplitzCoords,
) -> Result<BlockToeplitzCoords> {
    if g.siegel.len() != c.omegas.len() {
        return Err(Error::DimensionMismatch {
            expected: c.omegas.len(),
            got: g.siegel.len(),
        });
    }
    g.check_membership()?;
    let p = toeplitz::group_action(&g.p_part, &c.p)?;
    let omegas = g
        .siegel
        .iter()
        .zip(&c.omegas)
        .map(|(u, w)| u.act(w))
        .collect::<Result<Vec<_>>>()?;
    BlockToeplitzCoords::new(p, omegas)
}

// ---------------------------------------------------------------------------
// Normalizing factor
// ---------------------------------------------------------------------------

/// Log of the unnormalized Siegel radial density
/// -|r|^2/2 sigma^2 + sum_{i<j} log sinh|r_i - r_j| + sum_{i<=j} log
/// sinh|r_i + r_j|.
pub fn siegel_log_polar_density(r: &[f64], sigma: f64) -> f64 {
    let mut acc = -r.iter().map(|v| v * v).sum::<f64>() / (2.0 * sigma * sigma);
    let n = r.len();
    for i in 0..n {
        for j in i..n {
            if j > i {
                let d = (r[i] - r[j]).abs();
                if d == 0.0 {
                    return f64::NEG_INFINITY;
                }
                acc += log_sinh(d);
            }
            let s = (r[i] + r[j]).abs();
            if s == 0.0 {
                return f64::NEG_INFINITY;
            }
            acc += log_sinh(s);
        }
    }
    acc
}

/// Monte Carlo estimate of log Z for the Siegel disc D_N (up to the
/// dropped constant): importance sampling with proposal N(0, sigma^2 I).
pub fn siegel_z_montecarlo(nb: usize, sigma: f64, samples: u64, seed: u64) -> Result<(f64, f64)> {
    if sigma <= 0.0 {
        return Err(Error::InvalidParameter("sigma must be positive".into()));
    }
    if samples < 1_000 {
        return Err(Error::InvalidParameter(
            "Monte Carlo needs at least 1000 samples".into(),
        ));
    }
    let log_weight = move |z: &[f64]| -> f64 {
        let n = z.len();
        let mut acc = 0.0;
        for i in 0..n {
            for j in i..n {
                if j > i {
                    let d = sigma * (z[i] - z[j]).abs();
                    if d == 0.0 {
                        return f64::NEG_INFINITY;
                    }
                    acc += log_sinh(d);
                }
                let s = sigma * (z[i] + z[j]).abs();
                if s == 0.0 {
                    return f64::NEG_INFINITY;
                }
                acc += log_sinh(s);
            }
        }
        acc
    };
    let (mean_log, stderr) = log_mean_stderr(nb, samples, seed, log_weight);
    let log_const = 0.5 * nb as f64 * (2.0 * std::f64::consts::PI * sigma * sigma).ln();
    Ok((log_const + mean_log, stderr))
}

/// Composite log Z for the block-Toeplitz space with n blocks of size
/// `nb`: analytic Toeplitz part for the size-nb diagonal block at
/// sigma / sqrt(n), plus Siegel disc parts at sigma / sqrt(n - j)
/// supplied by a callback (normally a cached Monte Carlo table).
/// Returns the value and the propagated stderr.
pub fn block_log_z<F>(n: usize, nb: usize, sigma: f64, disc_log_z: F) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<(f64, f64)>,
{
    if sigma <= 0.0 {
        return Err(Error::InvalidParameter("sigma must be positive".into()));
    }
    let nf = n as f64;
    let mut total = toeplitz::log_z(nb, sigma / nf.sqrt())?;
    let mut var = 0.0;
    for j in 1..n {
        let (v, se) = disc_log_z(sigma / (nf - j as f64).sqrt())?;
        total += v;
        var += se * se;
    }
    Ok((total, var.sqrt()))
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Draws of the Siegel radial vector; exact Metropolis chain shared
/// across draws.
pub fn sample_siegel_r(
    nb: usize,
    sigma: f64,
    count: usize,
    cfg: MhConfig,
    rng: &mut Stream,
) -> (Vec<Vec<f64>>, MhDiagnostics) {
    metropolis_chain(nb, count, sigma, cfg, rng, |r| {
        siegel_log_polar_density(r, sigma)
    })
}

/// Bulk sampler for G(centre, sigma) on the block-Toeplitz space.
pub fn sample_many(
    centre: &BlockToeplitzCoords,
    sigma: f64,
    count: usize,
    cfg: MhConfig,
    rng: &mut Stream,
) -> Result<(Vec<BlockToeplitzCoords>, MhDiagnostics)> {
    if sigma <= 0.0 {
        return Err(Error::InvalidParameter("sigma must be positive".into()));
    }
    let n = centre.blocks();
    let nb = centre.block_dim();
    let nf = n as f64;

    // P factor through the Toeplitz sampler at sigma / sqrt(n)
    let ps = toeplitz::sample_many(&centre.p, sigma / nf.sqrt(), count, rng)?;

    // one radial chain per disc factor
    let mut factor_draws: Vec<Vec<Vec<f64>>> = Vec::with_capacity(n - 1);
    let mut worst = MhDiagnostics { acceptance_rate: 0.5 };
    let mut worst_dev = 0.0;
    for j in 1..n {
        let s = sigma / (nf - j as f64).sqrt();
        let (draws, diag) = sample_siegel_r(nb, s, count, cfg, rng);
        let dev = (diag.acceptance_rate - 0.35).abs();
        if dev > worst_dev {
            worst_dev = dev;
            worst = diag;
        }
        factor_draws.push(draws);
    }

    let translations: Vec<SiegelTranslation> = centre
        .omegas
        .iter()
        .map(SiegelTranslation::to_point)
        .collect::<Result<Vec<_>>>()?;

    let mut out = Vec::with_capacity(count);
    for (k, p) in ps.into_iter().enumerate() {
        let mut omegas = Vec::with_capacity(n - 1);
        for (j, tr) in translations.iter().enumerate() {
            let theta = matfun::sample_special_unitary(nb, rng);
            let r = &factor_draws[j][k];
            let tanh = CMat::from_diagonal(&DVector::from_iterator(
                nb,
                r.iter().map(|&v| Complex64::new(v.tanh(), 0.0)),
            ));
            let w0 = SiegelPoint::new_unchecked(&theta * tanh * theta.transpose());
            omegas.push(tr.push(&w0)?);
        }
        out.push(BlockToeplitzCoords::new(p, omegas)?);
    }
    Ok((out, worst))
}

pub fn sample(
    centre: &BlockToeplitzCoords,
    sigma: f64,
    rng: &mut Stream,
) -> Result<BlockToeplitzCoords> {
    let (mut v, _) = sample_many(centre, sigma, 1, MhConfig::default(), rng)?;
    Ok(v.pop().unwrap())
}
