//! Channels fixing the diagonal algebra are Schur-product channels
//! `X ↦ X ∘ C` with a correlation matrix `C`; mixing such a channel toward
//! the map-to-diagonal is the same as decomposing `(C + (d−1)I)/d` into
//! rank-one correlation matrices `zz*` with unit-modulus entries. This
//! module carries the exact roots-of-unity quadrature for that target, the
//! `M(v)` construction from circle densities, the rank-`r` improvement
//! `(C + (r−1)I)/r`, and the sign-vector (real) membership certificates.

use crate::channel_core::cmat::{
    eigh, fnorm, hermitize, identity, matrix_unit, trace_dot, C64, CMat, CVec,
};
use crate::channel_core::{ChannelRep, ChoiMatrix};
use crate::convex_solver::{embed_hermitian, nnls};
use crate::error::{Error, Result};
use crate::tol::Tol;
use crate::Ratio;
use rand::Rng;
use std::f64::consts::TAU;

/// Largest dimension for the exact cube-roots quadrature (3^d atoms).
pub const QUADRATURE_D_MAX: usize = 8;
/// Largest dimension for exhaustive sign-vector membership (2^{d−1} atoms).
pub const Z2_D_MAX: usize = 14;
/// Residual certified by [`mv_decompose`].
pub const MV_RESIDUAL: f64 = 1e-6;
/// Residual deciding membership in [`z2_membership`].
pub const Z2_RESIDUAL: f64 = 1e-8;

/// Positive semidefinite with unit diagonal. The numerical rank (eigenvalue
/// count above `tol.rank` relative to the largest) is fixed at construction,
/// along with the margin separating kept from dropped eigenvalues — rank
/// feeds the mixing constant `p = 1/rank`, which is discontinuous in `C`.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    d: usize,
    mat: CMat,
    rank: usize,
    rank_margin: f64,
}

impl CorrelationMatrix {
    pub fn new(mat: CMat, tol: &Tol) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        let d = mat.nrows();
        if d == 0 {
            return Err(Error::EmptySet);
        }
        let herm_defect = fnorm(&(&mat - mat.adjoint())) / 2.0;
        if herm_defect > tol.eq * (1.0 + fnorm(&mat)) {
            return Err(Error::NotHermitian {
                defect: herm_defect,
            });
        }
        let mat = hermitize(&mat);
        for i in 0..d {
            if (mat[(i, i)] - C64::new(1.0, 0.0)).norm() > tol.eq {
                return Err(Error::Domain(format!(
                    "correlation matrix needs a unit diagonal, entry ({i}, {i}) = {}",
                    mat[(i, i)]
                )));
            }
        }
        let (vals, _) = eigh(&mat)?;
        let min_eig = vals[0];
        if min_eig < -tol.psd * (1.0 + fnorm(&mat)) {
            return Err(Error::NotPsd { min_eig });
        }
        let top = vals[d - 1];
        let cut = tol.rank * top;
        let rank = vals.iter().filter(|v| **v > cut).count().max(1);
        let smallest_kept = vals[d - rank];
        let largest_dropped = if rank < d { vals[d - rank - 1] } else { 0.0 };
        Ok(Self {
            d,
            mat,
            rank,
            rank_margin: smallest_kept - largest_dropped,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn mat(&self) -> &CMat {
        &self.mat
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Gap between the smallest counted eigenvalue and the largest dropped
    /// one (the smallest counted eigenvalue itself at full rank).
    pub fn rank_margin(&self) -> f64 {
        self.rank_margin
    }
}

/// A convex combination of rank-one correlation matrices `zz*` (every entry
/// of every `z` unit-modulus) approximating `target` to `residual`.
#[derive(Debug, Clone)]
pub struct RankOneAtomSet {
    pub atoms: Vec<CVec>,
    pub weights: Vec<f64>,
    pub target: CorrelationMatrix,
    /// `‖Σ λ_z zz* − target‖_F`
    pub residual: f64,
}

impl RankOneAtomSet {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ λ_z · zz*`
    pub fn reconstruction(&self) -> CMat {
        let d = self.target.d();
        let mut out = CMat::zeros(d, d);
        for (w, z) in self.weights.iter().zip(&self.atoms) {
            out += (z * z.adjoint()).scale(*w);
        }
        out
    }

    /// Check every declared invariant: unit-modulus atom entries (1e−9),
    /// nonnegative weights summing to one, and the reconstruction within
    /// the recorded residual.
    pub fn validate(&self, tol: &Tol) -> Result<()> {
        if self.atoms.len() != self.weights.len() {
            return Err(Error::Dimension {
                expected: self.atoms.len(),
                got: self.weights.len(),
            });
        }
        for z in &self.atoms {
            if z.len() != self.target.d() {
                return Err(Error::Dimension {
                    expected: self.target.d(),
                    got: z.len(),
                });
            }
            if z.iter().any(|e| (e.norm() - 1.0).abs() > 1e-9) {
                return Err(Error::Domain(
                    "atom entry is not unit-modulus".into(),
                ));
            }
        }
        if let Some(w) = self.weights.iter().find(|w| **w < 0.0) {
            return Err(Error::BadMixture { sum: *w });
        }
        let sum = self.weight_sum();
        if (sum - 1.0).abs() > tol.eq {
            return Err(Error::BadMixture { sum });
        }
        let gap = fnorm(&(self.reconstruction() - self.target.mat()));
        if gap > self.residual + tol.eq * (1.0 + gap) {
            return Err(Error::Inconsistency(format!(
                "reconstruction misses the target by {gap:.3e}, recorded residual {:.3e}",
                self.residual
            )));
        }
        Ok(())
    }
}

/// Random correlation matrix of the given numerical rank: normalize the
/// Gram matrix of `rank` Ginibre columns.
pub fn random_correlation<R: Rng>(
    d: usize,
    rank: usize,
    rng: &mut R,
    tol: &Tol,
) -> Result<CorrelationMatrix> {
    if rank == 0 || rank > d {
        return Err(Error::Domain(format!(
            "rank must lie in 1..={d}, got {rank}"
        )));
    }
    let a = crate::channel_core::cmat::ginibre(d, rank, rng);
    let g = &a * a.adjoint();
    let mut c = CMat::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let scale = (g[(i, i)].re * g[(j, j)].re).sqrt();
            c[(i, j)] = g[(i, j)] / scale;
        }
    }
    CorrelationMatrix::new(c, tol)
}

/// The Schur-product channel `X ↦ X ∘ C`: its Choi matrix is
/// `Σ_ij c_ij (e_i⊗e_i)(e_j⊗e_j)*`, unital and trace preserving because the
/// diagonal of `C` is one.
pub fn schur_channel(c: &CorrelationMatrix, tol: &Tol) -> Result<ChannelRep> {
    let d = c.d();
    let mut j = CMat::zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            j[(a * d + a, b * d + b)] = c.mat()[(a, b)];
        }
    }
    ChannelRep::from_choi(ChoiMatrix::new(d, j)?, tol)
}

/// Read the correlation matrix off a channel fixing the diagonal algebra:
/// `c_ij = ⟨E_ij, Φ(E_ij)⟩`. Such a channel has diagonal Kraus operators,
/// so it *is* the Schur channel of the result.
pub fn correlation_of(phi: &ChannelRep, tol: &Tol) -> Result<CorrelationMatrix> {
    if !phi.is_trace_preserving(tol) {
        return Err(Error::NotTracePreserving {
            defect: phi.tp_defect(),
        });
    }
    if !phi.is_unital(tol) {
        return Err(Error::NotUnital {
            defect: phi.unital_defect(),
        });
    }
    let d = phi.d();
    for i in 0..d {
        let e = matrix_unit(d, i, i);
        let defect = fnorm(&(phi.apply(&e) - &e));
        if defect > tol.eq * 10.0 {
            return Err(Error::Precondition(format!(
                "channel does not fix the diagonal algebra (defect {defect:.3e} at E_{i}{i})"
            )));
        }
    }
    let mut c = CMat::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let e = matrix_unit(d, i, j);
            c[(i, j)] = trace_dot(&e, &phi.apply(&e));
        }
    }
    CorrelationMatrix::new(c, tol)
}

/// Exact decomposition of `(C + (d−1)I)/d` over the cube-roots grid:
/// atoms `z ∈ {1, ω, ω²}^d` with `ω = e^{2πi/3}`, weights
/// `λ_z = ⟨z, Cz⟩ / (d·3^d)`.
///
/// Averaging `zz*⟨z,Cz⟩` over independent uniform cube roots reproduces the
/// Haar integral exactly: every per-coordinate net degree in the monomials
/// `z_i z̄_j z̄_k z_l` lies in {−2,…,2}, and only degree 0 survives both the
/// circle average and the 3-point average (2 ≢ 0 mod 3 — two-point
/// averaging would leak the degree-2 terms).
pub fn quadrature_decompose(c: &CorrelationMatrix, tol: &Tol) -> Result<RankOneAtomSet> {
    let d = c.d();
    if d > QUADRATURE_D_MAX {
        return Err(Error::SizeLimit(format!(
            "exact quadrature enumerates 3^d atoms and is capped at d = {QUADRATURE_D_MAX} \
             (got {d}); use the sampled route (rank_r_mix / mv_decompose) instead"
        )));
    }
    let count = 3usize.pow(d as u32);
    let omega = C64::from_polar(1.0, TAU / 3.0);
    let roots = [C64::new(1.0, 0.0), omega, omega * omega];
    let norm = 1.0 / (d as f64 * count as f64);
    let mut atoms = Vec::with_capacity(count);
    let mut weights = Vec::with_capacity(count);
    for t in 0..count {
        let z = CVec::from_fn(d, |i, _| roots[(t / 3usize.pow(i as u32)) % 3]);
        let quad = (z.adjoint() * c.mat() * &z)[(0, 0)].re;
        atoms.push(z);
        weights.push(quad.max(0.0) * norm);
    }
    let target_mat = (c.mat() + identity(d) * C64::new(d as f64 - 1.0, 0.0))
        * C64::new(1.0 / d as f64, 0.0);
    let target = CorrelationMatrix::new(target_mat, tol)?;
    let mut set = RankOneAtomSet {
        atoms,
        weights,
        target,
        residual: 0.0,
    };
    set.residual = fnorm(&(set.reconstruction() - set.target.mat()));
    Ok(set)
}

/// The circle density `f_c(θ) = −1 + 1/(1−c·e^{iθ}) + 1/(1−c̄·e^{−iθ})`,
/// nonnegative for `|c| ≤ 1`. Its Fourier coefficients are `c^n` (n ≥ 0)
/// and `c̄^{|n|}` (n < 0), so as a probability density in `θ` it has
/// `∫ e^{iθ} f_c(θ) dθ/2π = c̄` — the measure with *mean* `c` is
/// `θ ↦ f_c(−θ) = f_c̄(θ)`.
pub fn fc_density(c: C64, theta: f64) -> Result<f64> {
    if c.norm() > 1.0 + 1e-12 {
        return Err(Error::Domain(format!(
            "density parameter must satisfy |c| ≤ 1, got |c| = {}",
            c.norm()
        )));
    }
    let w = C64::new(1.0, 0.0) - c * C64::from_polar(1.0, theta);
    let dist = w.norm();
    if dist <= 1e-12 {
        return Err(Error::Pole { dist });
    }
    Ok(-1.0 + 2.0 * (w.inv()).re)
}

/// `M(v)`: same off-diagonal entries as `vv*`, unit diagonal. PSD whenever
/// `‖v‖_∞ ≤ 1` (it is `vv* + diag(1 − |v_i|²)`).
fn m_of(v: &CVec) -> CMat {
    let d = v.len();
    let mut m = v * v.adjoint();
    for i in 0..d {
        m[(i, i)] = C64::new(1.0, 0.0);
    }
    m
}

/// Per-coordinate candidate angles for the product dictionary. `spread`
/// grid angles cover every direction (their hull contains the origin) and
/// the grid angles bracketing `arg(v)` pin the mean's direction; together
/// they span radii up to cos(π/N) along that ray. Moduli beyond cos(π/N)
/// are outside the grid polygon, so the exact direction joins the set.
fn coordinate_angles(v: C64, n_grid: usize, spread: usize) -> Vec<f64> {
    let step = TAU / n_grid as f64;
    let phi = v.arg().rem_euclid(TAU);
    let mut idx: Vec<usize> = Vec::new();
    let lower = (phi / step).floor() as usize % n_grid;
    idx.push(lower);
    idx.push((lower + 1) % n_grid);
    let stride = (n_grid / spread).max(1);
    for k in 0..spread {
        idx.push((k * stride) % n_grid);
    }
    idx.sort_unstable();
    idx.dedup();
    let mut angles: Vec<f64> = idx.into_iter().map(|k| k as f64 * step).collect();
    if v.norm() > (std::f64::consts::PI / n_grid as f64).cos() * 0.999999 {
        angles.push(phi);
    }
    angles
}

/// Decompose `M(v)` into unit-modulus rank-one atoms on (subsets of) the
/// product grid of `n_grid`-th roots of unity.
///
/// Coordinates with `|v_i| = 1` are point masses (the density degenerates)
/// and stay fixed at `v_i`. The rest are gridded — the full per-coordinate
/// grid while the product stays enumerable, per-coordinate angle subsets
/// beyond that — with initial weights proportional to `Π_i f_{v̄_i}(θ_i)`
/// (conjugated so each coordinate's mean is `v_i`, see [`fc_density`]), and
/// a nonnegative least-squares refit against `M(v)` turns the quadrature
/// into a certificate.
pub fn mv_decompose(v: &CVec, n_grid: usize, tol: &Tol) -> Result<RankOneAtomSet> {
    const PRODUCT_CAP: usize = 300_000;
    let d = v.len();
    if d == 0 {
        return Err(Error::EmptySet);
    }
    if n_grid < 2 {
        return Err(Error::Domain(format!(
            "grid needs at least 2 roots of unity, got {n_grid}"
        )));
    }
    let vinf = v.iter().map(|e| e.norm()).fold(0.0, f64::max);
    if vinf > 1.0 + tol.eq {
        return Err(Error::Domain(format!(
            "mean vector must satisfy ‖v‖_∞ ≤ 1, got {vinf}"
        )));
    }
    let target = CorrelationMatrix::new(m_of(v), tol)?;

    // fixed coordinates: unit modulus forces a point mass there
    let fixed: Vec<Option<C64>> = v
        .iter()
        .map(|&e| (e.norm() >= 1.0 - 1e-9).then(|| e / e.norm()))
        .collect();
    let free: Vec<usize> = (0..d).filter(|&i| fixed[i].is_none()).collect();

    if free.is_empty() {
        let z = CVec::from_fn(d, |i, _| fixed[i].unwrap());
        let residual = fnorm(&((&z * z.adjoint()) - target.mat()));
        return Ok(RankOneAtomSet {
            atoms: vec![z],
            weights: vec![1.0],
            target,
            residual,
        });
    }

    // per-free-coordinate angle sets: the full grid while the product is
    // enumerable, otherwise brackets + spread sized to fit the cap
    let full_size = (n_grid as f64).powi(free.len() as i32);
    let sets: Vec<Vec<f64>> = if full_size <= PRODUCT_CAP as f64 {
        free.iter()
            .map(|&i| coordinate_angles(v[i], n_grid, n_grid))
            .collect()
    } else {
        let per = (PRODUCT_CAP as f64).powf(1.0 / free.len() as f64).floor() as usize;
        let spread = per.saturating_sub(3).max(4).min(n_grid);
        free.iter()
            .map(|&i| coordinate_angles(v[i], n_grid, spread))
            .collect()
    };

    // enumerate the product with density weights; prune only the mass the
    // residual certificate cannot feel
    let total: usize = sets.iter().map(|s| s.len()).product();
    if total > 4 * PRODUCT_CAP {
        return Err(Error::SizeLimit(format!(
            "mv grid would hold {total} atoms; reduce the grid or dimension"
        )));
    }
    let mut raw: Vec<(CVec, f64)> = Vec::with_capacity(total);
    let mut max_density = 0.0f64;
    for t in 0..total {
        let mut rem = t;
        let mut z = CVec::from_fn(d, |i, _| fixed[i].unwrap_or(C64::new(1.0, 0.0)));
        let mut density = 1.0;
        for (set, &i) in sets.iter().zip(&free) {
            let theta = set[rem % set.len()];
            rem /= set.len();
            z[i] = C64::from_polar(1.0, theta);
            density *= fc_density(v[i].conj(), theta)?.max(0.0);
        }
        max_density = max_density.max(density);
        raw.push((z, density));
    }
    let keep = max_density * 1e-14;
    let kept: Vec<(CVec, f64)> = raw.into_iter().filter(|(_, w)| *w >= keep).collect();
    if kept.is_empty() {
        return Err(Error::NoCertificate {
            residual: f64::INFINITY,
            atoms: 0,
        });
    }

    let b = embed_hermitian(target.mat());
    let mut a = nalgebra::DMatrix::zeros(b.len(), kept.len());
    for (col, (z, _)) in kept.iter().enumerate() {
        a.set_column(col, &embed_hermitian(&(z * z.adjoint())));
    }
    let fit = nnls(&a, &b)?;

    let max_w = fit.weights.iter().fold(0.0f64, |m, w| m.max(*w));
    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    for ((z, _), w) in kept.into_iter().zip(&fit.weights) {
        if *w > max_w * 1e-12 {
            atoms.push(z);
            weights.push(*w);
        }
    }
    let sum: f64 = weights.iter().sum();
    if sum > 0.0 && (sum - 1.0).abs() <= 1e-6 {
        for w in &mut weights {
            *w /= sum;
        }
    }
    let mut set = RankOneAtomSet {
        atoms,
        weights,
        target,
        residual: 0.0,
    };
    set.residual = fnorm(&(set.reconstruction() - set.target.mat()));
    if set.residual > MV_RESIDUAL {
        return Err(Error::NoCertificate {
            residual: set.residual,
            atoms: set.len(),
        });
    }
    Ok(set)
}

/// Decompose `(C + (r−1)I)/r` with `r = rank(C)`: Gram vectors `v_k` from
/// the spectral decomposition `C = Σ_k v_k v_k*` (each `‖v_k‖_∞ ≤ 1`
/// because the diagonal of `C` is one) give
/// `(C + (r−1)I)/r = (1/r) Σ_k M(v_k)`, and each `M(v_k)` is decomposed by
/// [`mv_decompose`]. Beats the quadrature's `p = 1/d` whenever `r < d`.
pub fn rank_r_mix(c: &CorrelationMatrix, tol: &Tol) -> Result<(Ratio, RankOneAtomSet)> {
    let d = c.d();
    let r = c.rank();
    let (vals, vecs) = eigh(c.mat())?;
    let mut gram = Vec::with_capacity(r);
    for k in 0..r {
        let lam = vals[d - 1 - k].max(0.0);
        let v: CVec = vecs.column(d - 1 - k).into_owned() * C64::new(lam.sqrt(), 0.0);
        let vinf = v.iter().map(|e| e.norm()).fold(0.0, f64::max);
        if vinf > 1.0 + tol.eq {
            return Err(Error::Inconsistency(format!(
                "Gram vector {k} has ‖v‖_∞ = {vinf} > 1; C is not a correlation matrix"
            )));
        }
        gram.push(v);
    }
    let target_mat = (c.mat() + identity(d) * C64::new(r as f64 - 1.0, 0.0))
        * C64::new(1.0 / r as f64, 0.0);
    let target = CorrelationMatrix::new(target_mat, tol)?;

    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    for v in &gram {
        // clamp entries that exceed 1 by eigensolver noise
        let vc = CVec::from_fn(d, |i, _| {
            let e = v[i];
            if e.norm() > 1.0 {
                e / e.norm()
            } else {
                e
            }
        });
        let part = mv_decompose(&vc, 64, tol)?;
        for (z, w) in part.atoms.into_iter().zip(part.weights) {
            atoms.push(z);
            weights.push(w / r as f64);
        }
    }
    let mut set = RankOneAtomSet {
        atoms,
        weights,
        target,
        residual: 0.0,
    };
    set.residual = fnorm(&(set.reconstruction() - set.target.mat()));
    if set.residual > r as f64 * MV_RESIDUAL {
        return Err(Error::NoCertificate {
            residual: set.residual,
            atoms: set.len(),
        });
    }
    Ok((Ratio::new(1, r as u64), set))
}

/// Decide membership of a real correlation matrix in the convex hull of
/// sign-vector atoms `ss^T`, `s ∈ {±1}^d`, by nonnegative least squares
/// over all 2^{d−1} atoms (global sign quotiented away by fixing
/// `s_0 = +1`). Membership holds iff the best fit lands within 1e−8; the
/// returned atoms certify it (or show the best approximation otherwise).
pub fn z2_membership(c: &CorrelationMatrix, tol: &Tol) -> Result<(bool, RankOneAtomSet)> {
    let d = c.d();
    let im = c
        .mat()
        .iter()
        .map(|e| e.im.abs())
        .fold(0.0, f64::max);
    if im > tol.eq {
        return Err(Error::Domain(format!(
            "sign-vector membership needs a real matrix (max imaginary part {im:.3e})"
        )));
    }
    if d > Z2_D_MAX {
        return Err(Error::SizeLimit(format!(
            "sign-vector enumeration holds 2^(d−1) atoms and is capped at d = {Z2_D_MAX} (got {d})"
        )));
    }
    let count = 1usize << (d - 1);
    let mut atoms = Vec::with_capacity(count);
    for t in 0..count {
        let z = CVec::from_fn(d, |i, _| {
            if i > 0 && (t >> (i - 1)) & 1 == 1 {
                C64::new(-1.0, 0.0)
            } else {
                C64::new(1.0, 0.0)
            }
        });
        atoms.push(z);
    }
    let b = embed_hermitian(c.mat());
    let mut a = nalgebra::DMatrix::zeros(b.len(), count);
    for (col, z) in atoms.iter().enumerate() {
        a.set_column(col, &embed_hermitian(&(z * z.adjoint())));
    }
    let fit = nnls(&a, &b)?;

    let max_w = fit.weights.iter().fold(0.0f64, |m, w| m.max(*w));
    let mut kept_atoms = Vec::new();
    let mut weights = Vec::new();
    for (z, w) in atoms.into_iter().zip(&fit.weights) {
        if *w > max_w * 1e-12 {
            kept_atoms.push(z);
            weights.push(*w);
        }
    }
    let sum: f64 = weights.iter().sum();
    if sum > 0.0 && (sum - 1.0).abs() <= 1e-6 {
        for w in &mut weights {
            *w /= sum;
        }
    }
    let mut set = RankOneAtomSet {
        atoms: kept_atoms,
        weights,
        target: c.clone(),
        residual: 0.0,
    };
    set.residual = fnorm(&(set.reconstruction() - set.target.mat()));
    Ok((set.residual <= Z2_RESIDUAL, set))
}

/// Positive definiteness of `f : Z₂^d → R` (values indexed by bitmask):
/// `f` is the Fourier transform of a measure on the dual group iff that
/// measure — the Walsh–Hadamard transform of `f` scaled by `2^{−d}` — is
/// entrywise `≥ −1e−9`.
pub fn walsh_pd_check(f: &[f64]) -> Result<bool> {
    let n = f.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::Domain(format!(
            "need 2^d values on the group, got {n}"
        )));
    }
    let mut t = f.to_vec();
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(2 * h) {
            for i in block..block + h {
                let (x, y) = (t[i], t[i + h]);
                t[i] = x + y;
                t[i + h] = x - y;
            }
        }
        h *= 2;
    }
    let scale = 1.0 / n as f64;
    Ok(t.iter().all(|w| w * scale >= -1e-9))
}
