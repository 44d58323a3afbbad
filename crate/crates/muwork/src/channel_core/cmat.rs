//! Dense complex matrices and the handful of decompositions everything else
//! leans on. Vectorization is row-major throughout: `vec(E_ij) = e_i ⊗ e_j`,
//! so `vec(AXB) = (A ⊗ B^T) vec(X)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = num_complex::Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Shorthand for a real scalar promoted to a complex one.
#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

/// The matrix unit `E_ij` in dimension `d` (zero-based indices).
pub fn matrix_unit(d: usize, i: usize, j: usize) -> CMat {
    let mut m = CMat::zeros(d, d);
    m[(i, j)] = re(1.0);
    m
}

pub fn fnorm(m: &CMat) -> f64 {
    m.norm()
}

/// Relative Frobenius equality: `||a - b|| <= tol * (1 + max(||a||, ||b||))`.
pub fn approx_eq(a: &CMat, b: &CMat, tol: f64) -> bool {
    if a.shape() != b.shape() {
        return false;
    }
    (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

pub fn herm_defect(m: &CMat) -> f64 {
    (m - m.adjoint()).norm()
}

pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    m.is_square() && herm_defect(m) <= tol * (1.0 + m.norm())
}

/// `Tr(a† b)`, the Frobenius inner product (conjugate-linear slot first).
pub fn trace_dot(a: &CMat, b: &CMat) -> C64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().iter().sum()
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
/// The input is Hermitized first; callers that care check the defect.
pub fn eigh(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let h = hermitize(m);
    let se = nalgebra::SymmetricEigen::try_new(h, f64::EPSILON, 100_000)
        .ok_or(Error::EigenFailure)?;
    let n = se.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].partial_cmp(&se.eigenvalues[j]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        vecs.set_column(c, &se.eigenvectors.column(i));
    }
    Ok((vals, vecs))
}

/// Smallest eigenvalue of the Hermitized input.
pub fn min_eig_herm(m: &CMat) -> Result<f64> {
    let (vals, _) = eigh(m)?;
    Ok(vals.first().copied().unwrap_or(0.0))
}

/// PSD test with slack scaled by `1 + ||m||`.
pub fn is_psd(m: &CMat, tol: f64) -> Result<bool> {
    Ok(min_eig_herm(m)? >= -tol * (1.0 + m.norm()))
}

/// Eigenvalues of a general complex matrix via its Schur form.
///
/// Inputs that are Hermitian to machine precision take the symmetric path:
/// tight eigenvalue clusters (exactly what transfer-matrix powers produce)
/// can stall the QR iteration at its strictest tolerance, so the Schur
/// fallback also retries with slightly looser deflation thresholds.
pub fn eigvals(m: &CMat) -> Result<Vec<C64>> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if fnorm(&(m - m.adjoint())) <= 1e-13 * (1.0 + fnorm(m)) {
        let (vals, _) = eigh(m)?;
        return Ok(vals.into_iter().map(|v| C64::new(v, 0.0)).collect());
    }
    for eps in [f64::EPSILON, 1e-14, 1e-12] {
        if let Some(schur) = nalgebra::Schur::try_new(m.clone(), eps, 1_000_000) {
            let (_, t) = schur.unpack();
            return Ok((0..t.nrows()).map(|i| t[(i, i)]).collect());
        }
    }
    Err(Error::EigenFailure)
}

/// Thin complex SVD: `m = u * diag(s) * vt`.
pub fn svd(m: &CMat) -> Result<(CMat, Vec<f64>, CMat)> {
    let svd = nalgebra::SVD::try_new(m.clone(), true, true, f64::EPSILON, 1_000_000)
        .ok_or(Error::EigenFailure)?;
    let s: Vec<f64> = svd.singular_values.iter().copied().collect();
    Ok((svd.u.unwrap(), s, svd.v_t.unwrap()))
}

/// Unitary polar factor `u v†` from the SVD; errors if `m` is not square.
pub fn polar_unitary(m: &CMat) -> Result<CMat> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let (u, _, vt) = svd(m)?;
    Ok(u * vt)
}

pub fn is_unitary(m: &CMat, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let d = m.nrows();
    (m.adjoint() * m - identity(d)).norm() <= tol * (d as f64).sqrt().max(1.0)
}

/// Row-major vectorization: `vec(X)[i*d + j] = X[i, j]`.
pub fn vec_row(m: &CMat) -> CVec {
    let (r, c) = m.shape();
    CVec::from_fn(r * c, |k, _| m[(k / c, k % c)])
}

/// Inverse of [`vec_row`] for square matrices.
pub fn unvec_row(v: &CVec, d: usize) -> CMat {
    assert_eq!(v.len(), d * d, "vector length is not d^2");
    CMat::from_fn(d, d, |i, j| v[i * d + j])
}

/// Direct sum of square blocks.
pub fn block_diag(blocks: &[CMat]) -> CMat {
    let d: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMat::zeros(d, d);
    let mut o = 0;
    for b in blocks {
        let s = b.nrows();
        out.view_mut((o, o), (s, s)).copy_from(b);
        o += s;
    }
    out
}

/// The swap operator on `C^d ⊗ C^d`: `SWAP (x ⊗ y) = y ⊗ x`.
pub fn swap_operator(d: usize) -> CMat {
    let mut m = CMat::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            m[(i * d + j, j * d + i)] = re(1.0);
        }
    }
    m
}

/// Complex Ginibre matrix: i.i.d. entries `(g1 + i g2)/sqrt(2)`.
pub fn ginibre<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        C64::new(a, b) / 2f64.sqrt()
    })
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of the
/// `R` diagonal absorbed so the distribution is exactly Haar.
pub fn haar_unitary<R: Rng>(d: usize, rng: &mut R) -> CMat {
    let g = ginibre(d, d, rng);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        let rj = r[(j, j)];
        let phase = if rj.norm() > 0.0 { rj / rj.norm() } else { re(1.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn random_hermitian<R: Rng>(d: usize, rng: &mut R) -> CMat {
    let g = ginibre(d, d, rng);
    hermitize(&g)
}
