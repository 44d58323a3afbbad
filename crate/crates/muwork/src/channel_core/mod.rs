//! Channel representations: Kraus sets, Choi matrices, transfer matrices,
//! and the named channels used as fixtures.
//!
//! Conventions (row-major vectorization everywhere):
//! - transfer matrix `T(Φ) = Σ K_i ⊗ conj(K_i)`, acting as `T vec(X) = vec(Φ(X))`;
//! - Choi matrix `J(Φ) = Σ vec(K_i) vec(K_i)†`, PSD iff Φ is completely
//!   positive, trace `d` iff trace preserving;
//! - `J` and `T` are reshuffles of one another: `J[(i,j),(s,t)] = T[(i,s),(j,t)]`.

pub mod cmat;

use std::sync::OnceLock;

use rand::Rng;

use crate::error::{Error, Result};
use crate::tol::Tol;
use cmat::{
    approx_eq, block_diag, eigh, identity, matrix_unit, min_eig_herm, re, trace, unvec_row,
    vec_row, C64, CMat, CVec,
};

/// A finite set of Kraus operators on `M_d`.
#[derive(Debug, Clone)]
pub struct KrausSet {
    d: usize,
    ops: Vec<CMat>,
}

impl KrausSet {
    pub fn new(ops: Vec<CMat>) -> Result<Self> {
        let first = ops.first().ok_or(Error::EmptySet)?;
        if !first.is_square() {
            return Err(Error::NotSquare {
                rows: first.nrows(),
                cols: first.ncols(),
            });
        }
        let d = first.nrows();
        for k in &ops {
            if k.shape() != (d, d) {
                return Err(Error::Dimension {
                    expected: d,
                    got: k.nrows().max(k.ncols()),
                });
            }
        }
        Ok(Self { d, ops })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn ops(&self) -> &[CMat] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// `|| Σ K_i† K_i - I ||` — zero iff trace preserving.
    pub fn tp_defect(&self) -> f64 {
        let mut s = CMat::zeros(self.d, self.d);
        for k in &self.ops {
            s += k.adjoint() * k;
        }
        (s - identity(self.d)).norm()
    }

    /// `|| Σ K_i K_i† - I ||` — zero iff unital.
    pub fn unital_defect(&self) -> f64 {
        let mut s = CMat::zeros(self.d, self.d);
        for k in &self.ops {
            s += k * k.adjoint();
        }
        (s - identity(self.d)).norm()
    }

    pub fn is_trace_preserving(&self, tol: &Tol) -> bool {
        self.tp_defect() <= tol.eq * (1.0 + (self.d as f64).sqrt())
    }

    pub fn is_unital(&self, tol: &Tol) -> bool {
        self.unital_defect() <= tol.eq * (1.0 + (self.d as f64).sqrt())
    }

    pub fn apply(&self, x: &CMat) -> CMat {
        let mut out = CMat::zeros(self.d, self.d);
        for k in &self.ops {
            out += k * x * k.adjoint();
        }
        out
    }
}

/// The Choi matrix of a map on `M_d`, stored as a `d^2 x d^2` matrix.
#[derive(Debug, Clone)]
pub struct ChoiMatrix {
    d: usize,
    mat: CMat,
}

impl ChoiMatrix {
    pub fn new(d: usize, mat: CMat) -> Result<Self> {
        if mat.shape() != (d * d, d * d) {
            return Err(Error::Dimension {
                expected: d * d,
                got: mat.nrows(),
            });
        }
        Ok(Self { d, mat })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn mat(&self) -> &CMat {
        &self.mat
    }

    pub fn trace(&self) -> C64 {
        trace(&self.mat)
    }

    pub fn min_eig(&self) -> Result<f64> {
        min_eig_herm(&self.mat)
    }

    pub fn is_psd(&self, tol: &Tol) -> Result<bool> {
        Ok(self.min_eig()? >= -tol.psd * (1.0 + self.mat.norm()))
    }

    /// Marginal on the input side (output factor traced out); equals
    /// `(Σ K_i† K_i)^T`, so it is `I` iff the map is trace preserving.
    pub fn input_marginal(&self) -> CMat {
        let d = self.d;
        CMat::from_fn(d, d, |j, t| (0..d).map(|a| self.mat[(a * d + j, a * d + t)]).sum())
    }

    /// Marginal on the output side (input factor traced out); equals
    /// `Σ K_i K_i†`, so it is `I` iff the map is unital.
    pub fn output_marginal(&self) -> CMat {
        let d = self.d;
        CMat::from_fn(d, d, |i, s| (0..d).map(|b| self.mat[(i * d + b, s * d + b)]).sum())
    }

    /// Apply the represented map through the Choi matrix:
    /// `Φ(X)_{ab} = Σ_{uv} J[(a,u),(b,v)] X_{uv}`.
    pub fn apply(&self, x: &CMat) -> CMat {
        let d = self.d;
        CMat::from_fn(d, d, |a, b| {
            let mut acc = C64::new(0.0, 0.0);
            for u in 0..d {
                for v in 0..d {
                    acc += self.mat[(a * d + u, b * d + v)] * x[(u, v)];
                }
            }
            acc
        })
    }
}

/// Exchange the middle indices of a `d^2 x d^2` matrix:
/// `out[(i,j),(s,t)] = m[(i,s),(j,t)]`. Maps transfer to Choi and back
/// (it is an involution).
pub fn reshuffle(m: &CMat, d: usize) -> CMat {
    assert_eq!(m.shape(), (d * d, d * d));
    let mut out = CMat::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            for s in 0..d {
                for t in 0..d {
                    out[(i * d + j, s * d + t)] = m[(i * d + s, j * d + t)];
                }
            }
        }
    }
    out
}

pub fn choi_of(kraus: &KrausSet) -> ChoiMatrix {
    let d = kraus.d();
    let mut j = CMat::zeros(d * d, d * d);
    for k in kraus.ops() {
        let v = vec_row(k);
        j += &v * v.adjoint();
    }
    ChoiMatrix { d, mat: j }
}

pub fn transfer_of(kraus: &KrausSet) -> CMat {
    let d = kraus.d();
    let mut t = CMat::zeros(d * d, d * d);
    for k in kraus.ops() {
        t += k.kronecker(&k.conjugate());
    }
    t
}

/// Extract a canonical Kraus set from a Choi matrix: eigenvectors of the
/// Hermitized Choi with eigenvalues above the rank cut, descending, each
/// operator scaled by the square root of its eigenvalue and phase-fixed so
/// its largest-modulus entry is positive real. Errors if the Choi has an
/// eigenvalue below `-tol.psd * (1 + ||J||)`.
pub fn kraus_of_choi(choi: &ChoiMatrix, tol: &Tol) -> Result<KrausSet> {
    let d = choi.d;
    let scale = choi.mat.norm();
    let (vals, vecs) = eigh(&choi.mat)?;
    let min = vals.first().copied().unwrap_or(0.0);
    if min < -tol.psd * (1.0 + scale) {
        return Err(Error::NotPsd { min_eig: min });
    }
    let top = vals.last().copied().unwrap_or(0.0).max(0.0);
    let cut = tol.rank * top;
    let mut ops = Vec::new();
    for i in (0..vals.len()).rev() {
        if vals[i] <= cut || vals[i] <= 0.0 {
            break;
        }
        let col: CVec = vecs.column(i).into();
        let mut k = unvec_row(&col, d).scale(vals[i].sqrt());
        // deterministic phase: largest-modulus entry made positive real
        let mut best = (0.0f64, C64::new(1.0, 0.0));
        for x in k.iter() {
            if x.norm() > best.0 {
                best = (x.norm(), *x);
            }
        }
        if best.0 > 0.0 {
            let phase = best.1.conj() / best.1.norm();
            k *= phase;
        }
        ops.push(k);
    }
    if ops.is_empty() {
        // the zero map: represent with a single zero operator
        ops.push(CMat::zeros(d, d));
    }
    KrausSet::new(ops)
}

/// A channel (or more generally a completely positive map) on `M_d`, held in
/// canonical Kraus form with lazily derived Choi and transfer matrices.
/// Values are immutable once built; the caches are write-once.
#[derive(Debug)]
pub struct ChannelRep {
    d: usize,
    kraus: KrausSet,
    choi: OnceLock<ChoiMatrix>,
    transfer: OnceLock<CMat>,
    tp_defect: f64,
    unital_defect: f64,
}

impl Clone for ChannelRep {
    fn clone(&self) -> Self {
        let choi = OnceLock::new();
        if let Some(c) = self.choi.get() {
            let _ = choi.set(c.clone());
        }
        let transfer = OnceLock::new();
        if let Some(t) = self.transfer.get() {
            let _ = transfer.set(t.clone());
        }
        Self {
            d: self.d,
            kraus: self.kraus.clone(),
            choi,
            transfer,
            tp_defect: self.tp_defect,
            unital_defect: self.unital_defect,
        }
    }
}

impl ChannelRep {
    /// Build from Kraus operators. The set is canonicalized through the Choi
    /// eigenbasis, so equality of channels is a statement about Choi or
    /// transfer matrices, never about raw Kraus lists.
    pub fn from_kraus(ops: Vec<CMat>) -> Result<Self> {
        let raw = KrausSet::new(ops)?;
        let choi = choi_of(&raw);
        Self::from_choi(choi, &Tol::default())
    }

    /// Build from a Choi matrix; errors if it is not PSD at tolerance.
    pub fn from_choi(choi: ChoiMatrix, tol: &Tol) -> Result<Self> {
        let kraus = kraus_of_choi(&choi, tol)?;
        let d = choi.d();
        let cell = OnceLock::new();
        let _ = cell.set(choi);
        Ok(Self {
            d,
            tp_defect: kraus.tp_defect(),
            unital_defect: kraus.unital_defect(),
            kraus,
            choi: cell,
            transfer: OnceLock::new(),
        })
    }

    /// Build from a transfer matrix (reshuffled into a Choi and validated CP).
    pub fn from_transfer(t: CMat, tol: &Tol) -> Result<Self> {
        if !t.is_square() {
            return Err(Error::NotSquare {
                rows: t.nrows(),
                cols: t.ncols(),
            });
        }
        let d2 = t.nrows();
        let d = (d2 as f64).sqrt().round() as usize;
        if d * d != d2 {
            return Err(Error::Dimension { expected: d * d, got: d2 });
        }
        let j = reshuffle(&t, d);
        let rep = Self::from_choi(ChoiMatrix::new(d, j)?, tol)?;
        let _ = rep.transfer.set(t);
        Ok(rep)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn kraus(&self) -> &KrausSet {
        &self.kraus
    }

    pub fn choi(&self) -> &ChoiMatrix {
        self.choi.get_or_init(|| choi_of(&self.kraus))
    }

    pub fn transfer(&self) -> &CMat {
        self.transfer.get_or_init(|| transfer_of(&self.kraus))
    }

    pub fn apply(&self, x: &CMat) -> CMat {
        self.kraus.apply(x)
    }

    pub fn tp_defect(&self) -> f64 {
        self.tp_defect
    }

    pub fn unital_defect(&self) -> f64 {
        self.unital_defect
    }

    pub fn is_trace_preserving(&self, tol: &Tol) -> bool {
        self.kraus.is_trace_preserving(tol)
    }

    pub fn is_unital(&self, tol: &Tol) -> bool {
        self.kraus.is_unital(tol)
    }

    /// The dual (adjoint) map, with Kraus operators `K_i†`.
    pub fn dual(&self) -> Result<Self> {
        Self::from_kraus(self.kraus.ops().iter().map(|k| k.adjoint()).collect())
    }

    /// Composition `self ∘ other` via Kraus products.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.d != other.d {
            return Err(Error::Dimension {
                expected: self.d,
                got: other.d,
            });
        }
        let mut ops = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for a in self.kraus.ops() {
            for b in other.kraus.ops() {
                ops.push(a * b);
            }
        }
        // from_kraus re-canonicalizes, truncating the product set back to <= d^2
        Self::from_kraus(ops)
    }

    /// `Φ^k` via binary exponentiation on the transfer matrix (`k >= 1`).
    pub fn power(&self, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Domain("power requires k >= 1".into()));
        }
        if k == 1 {
            return Ok(self.clone());
        }
        let mut acc: Option<CMat> = None;
        let mut base = self.transfer().clone();
        let mut e = k;
        loop {
            if e & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => &base * a,
                });
            }
            e >>= 1;
            if e == 0 {
                break;
            }
            base = &base * &base;
        }
        Self::from_transfer(acc.unwrap(), &Tol::default())
    }

    /// Relative Frobenius distance between the Choi matrices.
    pub fn choi_distance(&self, other: &Self) -> f64 {
        (self.choi().mat() - other.choi().mat()).norm()
    }

    pub fn approx_eq(&self, other: &Self, tol: &Tol) -> bool {
        self.d == other.d && approx_eq(self.choi().mat(), other.choi().mat(), tol.eq)
    }
}

/// Convex combination `Σ p_i Φ_i`. Weights must be nonnegative (within
/// tolerance) and sum to one.
pub fn convex_combine(parts: &[(f64, &ChannelRep)], tol: &Tol) -> Result<ChannelRep> {
    if parts.is_empty() {
        return Err(Error::EmptySet);
    }
    let d = parts[0].1.d();
    let sum: f64 = parts.iter().map(|(p, _)| p).sum();
    if (sum - 1.0).abs() > 1e-12 + tol.eq || parts.iter().any(|(p, _)| *p < -tol.eq) {
        return Err(Error::BadMixture { sum });
    }
    let mut ops = Vec::new();
    for (p, ch) in parts {
        if ch.d() != d {
            return Err(Error::Dimension {
                expected: d,
                got: ch.d(),
            });
        }
        if *p <= 0.0 {
            continue;
        }
        let s = p.sqrt();
        for k in ch.kraus().ops() {
            ops.push(k.scale(s));
        }
    }
    ChannelRep::from_kraus(ops)
}

/// Build the transfer matrix of an arbitrary linear map from its action on
/// matrix units (column `(i,j)` is `vec(f(E_ij))`).
pub fn transfer_of_map<F: FnMut(&CMat) -> CMat>(d: usize, mut f: F) -> CMat {
    let mut t = CMat::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            let col = vec_row(&f(&matrix_unit(d, i, j)));
            t.set_column(i * d + j, &col);
        }
    }
    t
}

// ---------------------------------------------------------------------------
// named channels
// ---------------------------------------------------------------------------

pub fn identity_channel(d: usize) -> ChannelRep {
    ChannelRep::from_kraus(vec![identity(d)]).expect("identity channel")
}

/// The conjugation `X ↦ U X U†`.
pub fn unitary_channel(u: &CMat, tol: &Tol) -> Result<ChannelRep> {
    if !cmat::is_unitary(u, tol.eq.max(1e-12) * 1e3) {
        return Err(Error::Precondition("operator is not unitary".into()));
    }
    ChannelRep::from_kraus(vec![u.clone()])
}

/// The completely depolarizing channel `X ↦ Tr(X) I / d`.
pub fn depolarizing(d: usize) -> ChannelRep {
    let s = (d as f64).sqrt().recip();
    let mut ops = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            ops.push(matrix_unit(d, i, j).scale(s));
        }
    }
    ChannelRep::from_kraus(ops).expect("depolarizing channel")
}

/// The map to the diagonal `X ↦ Σ X_ii E_ii` (Kraus `{E_ii}`).
pub fn map_to_diagonal(d: usize) -> ChannelRep {
    let ops = (0..d).map(|i| matrix_unit(d, i, i)).collect();
    ChannelRep::from_kraus(ops).expect("map to diagonal")
}

/// The qutrit channel `X ↦ (Tr(X) I - X^T)/2`, with Kraus operators
/// `(E_ij - E_ji)/sqrt(2)` for `i < j` and Choi matrix `(I_9 - SWAP)/2`.
pub fn werner_holevo3() -> ChannelRep {
    let mut ops = Vec::new();
    let s = 2f64.sqrt().recip();
    for i in 0..3 {
        for j in (i + 1)..3 {
            ops.push((matrix_unit(3, i, j) - matrix_unit(3, j, i)).scale(s));
        }
    }
    ChannelRep::from_kraus(ops).expect("werner-holevo channel")
}

/// The `d^2` Weyl–Heisenberg unitaries `W_{a,b} = S^a D^b` with
/// `S = Σ E_{j+1,j}` (cyclic shift) and `D = diag(ω^0, …, ω^{d-1})`,
/// `ω = exp(2πi/d)`, ordered with `b` fastest. Averaging their conjugations
/// uniformly gives the depolarizing channel; they are trace-orthogonal:
/// `Tr(W_{a,b}† W_{a',b'}) = d δ_{aa'} δ_{bb'}`.
pub fn weyl_heisenberg(d: usize) -> Vec<CMat> {
    let omega = 2.0 * std::f64::consts::PI / d as f64;
    let mut shift = CMat::zeros(d, d);
    for j in 0..d {
        shift[((j + 1) % d, j)] = re(1.0);
    }
    let clock = CMat::from_fn(d, d, |i, j| {
        if i == j {
            C64::from_polar(1.0, omega * i as f64)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let mut out = Vec::with_capacity(d * d);
    let mut sa = identity(d);
    for _a in 0..d {
        let mut w = sa.clone();
        for _b in 0..d {
            out.push(w.clone());
            w *= &clock;
        }
        sa = &shift * sa;
    }
    out
}

/// The 24 single-qubit Clifford unitaries (modulo global phase), generated
/// from the Hadamard and phase gates by closure. They form an exact unitary
/// 2-design of `U(2)`.
pub fn qubit_clifford() -> Vec<CMat> {
    let s2 = 2f64.sqrt().recip();
    let h = CMat::from_row_slice(2, 2, &[re(s2), re(s2), re(s2), re(-s2)]);
    let s = CMat::from_row_slice(
        2,
        2,
        &[re(1.0), re(0.0), re(0.0), C64::new(0.0, 1.0)],
    );

    fn canonical(m: &CMat) -> (CMat, Vec<(i64, i64)>) {
        // fix global phase: first entry of maximal modulus made positive real
        let mut best_norm = 0.0;
        let mut best = C64::new(1.0, 0.0);
        for x in m.iter() {
            if x.norm() > best_norm + 1e-12 {
                best_norm = x.norm();
                best = *x;
            }
        }
        let fixed = m.scale(1.0) * (best.conj() / best.norm());
        let key = fixed
            .iter()
            .map(|x| ((x.re * 1e9).round() as i64, (x.im * 1e9).round() as i64))
            .collect();
        (fixed, key)
    }

    let mut seen = std::collections::BTreeSet::new();
    let mut group: Vec<CMat> = Vec::new();
    let mut queue: Vec<CMat> = vec![identity(2)];
    while let Some(u) = queue.pop() {
        let (fixed, key) = canonical(&u);
        if !seen.insert(key) {
            continue;
        }
        queue.push(&h * &fixed);
        queue.push(&s * &fixed);
        group.push(fixed);
    }
    assert_eq!(group.len(), 24, "single-qubit Clifford group has 24 elements");
    group
}

// ---------------------------------------------------------------------------
// random channels
// ---------------------------------------------------------------------------

/// Random unital trace-preserving channel via operator Sinkhorn scaling:
/// Ginibre Kraus operators are alternately normalized on the trace-preserving
/// and unital sides until both defects drop below 1e-13.
pub fn random_unital_channel<R: Rng>(d: usize, kraus_count: usize, rng: &mut R) -> Result<ChannelRep> {
    if kraus_count == 0 {
        return Err(Error::EmptySet);
    }
    let mut ops: Vec<CMat> = (0..kraus_count).map(|_| cmat::ginibre(d, d, rng)).collect();
    let inv_sqrt = |m: &CMat| -> Result<CMat> {
        let (vals, vecs) = eigh(m)?;
        if vals[0] <= 1e-14 {
            return Err(Error::Inconsistency(
                "singular normalizer in channel sampling".into(),
            ));
        }
        let diag = CMat::from_fn(vals.len(), vals.len(), |i, j| {
            if i == j {
                re(vals[i].sqrt().recip())
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Ok(&vecs * diag * vecs.adjoint())
    };
    // the alternating balance converges linearly but the rate degrades for
    // few Kraus operators at small d, so give it room; a plateau under
    // 1e-10 is still far below every working tolerance, so accept it
    // rather than fail the draw
    const CAP: usize = 4000;
    for iter in 0..CAP {
        let mut s = CMat::zeros(d, d);
        for k in &ops {
            s += k.adjoint() * k;
        }
        let m = inv_sqrt(&s)?;
        for k in &mut ops {
            *k = &*k * &m;
        }
        let mut t = CMat::zeros(d, d);
        for k in &ops {
            t += k * k.adjoint();
        }
        let n = inv_sqrt(&t)?;
        for k in &mut ops {
            *k = &n * &*k;
        }
        let set = KrausSet { d, ops: ops.clone() };
        let defect = set.tp_defect().max(set.unital_defect());
        if defect < 1e-13 || (iter + 1 == CAP && defect < 1e-10) {
            return ChannelRep::from_kraus(ops);
        }
        if iter + 1 == CAP {
            return Err(Error::Stagnation {
                residual: defect,
                iterations: CAP,
            });
        }
    }
    unreachable!()
}

/// Random unital channel whose Kraus operators are block-scalar in the frame
/// of the given block sizes: `K_i = W (⊕_k I_{m_k} ⊗ K_{ik}) W†`. The result
/// fixes the algebra `W (⊕ M_{m_k} ⊗ I_{n_k}) W†` pointwise; for generic
/// draws its fixed-point algebra is exactly that algebra.
pub fn random_blockwise_channel<R: Rng>(
    blocks: &[(usize, usize)],
    frame: &CMat,
    kraus_count: usize,
    rng: &mut R,
) -> Result<ChannelRep> {
    let d: usize = blocks.iter().map(|(m, n)| m * n).sum();
    if frame.shape() != (d, d) {
        return Err(Error::Dimension {
            expected: d,
            got: frame.nrows(),
        });
    }
    // independent unital channels on each n_k factor, shared Kraus index
    let mut per_block: Vec<Vec<CMat>> = Vec::new();
    for &(_m, n) in blocks {
        let ch = random_unital_channel(n, kraus_count, rng)?;
        let mut ops: Vec<CMat> = ch.kraus().ops().to_vec();
        // canonicalization may trim; pad with zeros to the shared count
        while ops.len() < kraus_count {
            ops.push(CMat::zeros(n, n));
        }
        ops.truncate(kraus_count);
        per_block.push(ops);
    }
    let mut ops = Vec::with_capacity(kraus_count);
    for i in 0..kraus_count {
        let parts: Vec<CMat> = blocks
            .iter()
            .zip(&per_block)
            .map(|(&(m, _n), bops)| identity(m).kronecker(&bops[i]))
            .collect();
        ops.push(frame * block_diag(&parts) * frame.adjoint());
    }
    ChannelRep::from_kraus(ops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use cmat::{ginibre, haar_unitary, random_hermitian, swap_operator, trace_dot};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn tol() -> Tol {
        Tol::default()
    }

    #[test]
    fn depolarizing_sends_everything_to_scaled_identity() {
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        let dep = depolarizing(3);
        assert!(dep.is_unital(&tol()) && dep.is_trace_preserving(&tol()));
        let x = ginibre(3, 3, &mut rng);
        let want = identity(3).scale(1.0 / 3.0) * trace(&x);
        assert!(approx_eq(&dep.apply(&x), &want, 1e-12));
        // J(δ_d) = I_{d^2}/d
        assert!(approx_eq(dep.choi().mat(), &identity(9).scale(1.0 / 3.0), 1e-12));
    }

    #[test]
    fn map_to_diagonal_keeps_diagonal() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let ch = map_to_diagonal(4);
        let x = ginibre(4, 4, &mut rng);
        let y = ch.apply(&x);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { x[(i, i)] } else { C64::new(0.0, 0.0) };
                assert!((y[(i, j)] - want).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn werner_holevo_formula_and_choi() {
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        let w = werner_holevo3();
        assert!(w.is_unital(&tol()) && w.is_trace_preserving(&tol()));
        let x = ginibre(3, 3, &mut rng);
        let want = (identity(3) * trace(&x) - x.transpose()).scale(0.5);
        assert!(approx_eq(&w.apply(&x), &want, 1e-12));
        let want_choi = (identity(9) - swap_operator(3)).scale(0.5);
        assert!(approx_eq(w.choi().mat(), &want_choi, 1e-12));
    }

    #[test]
    fn transfer_acts_on_vectorization() {
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let ch = random_unital_channel(3, 3, &mut rng).unwrap();
        let x = ginibre(3, 3, &mut rng);
        let lhs = vec_row(&ch.apply(&x));
        let rhs = ch.transfer() * vec_row(&x);
        assert!((lhs - rhs).norm() < 1e-11);
    }

    #[test]
    fn choi_and_kraus_describe_the_same_map() {
        let mut rng = ChaCha12Rng::seed_from_u64(14);
        for _ in 0..5 {
            let ch = random_unital_channel(3, 2, &mut rng).unwrap();
            let x = ginibre(3, 3, &mut rng);
            assert!(approx_eq(&ch.choi().apply(&x), &ch.apply(&x), 1e-11));
        }
    }

    #[test]
    fn reshuffle_is_an_involution_linking_choi_and_transfer() {
        let mut rng = ChaCha12Rng::seed_from_u64(15);
        let ch = random_unital_channel(4, 3, &mut rng).unwrap();
        let t = ch.transfer();
        let j = reshuffle(t, 4);
        assert!(approx_eq(&j, ch.choi().mat(), 1e-11));
        assert!(approx_eq(&reshuffle(&j, 4), t, 1e-13));
    }

    #[test]
    fn kraus_of_choi_roundtrip() {
        let mut rng = ChaCha12Rng::seed_from_u64(16);
        let ch = random_unital_channel(3, 3, &mut rng).unwrap();
        let back = kraus_of_choi(ch.choi(), &tol()).unwrap();
        let j2 = choi_of(&back);
        assert!(approx_eq(j2.mat(), ch.choi().mat(), 1e-11));
        assert!(back.len() <= 9);
    }

    #[test]
    fn kraus_of_choi_rejects_negative() {
        // J(id) - J(δ)/2 has a negative eigenvalue at d = 2
        let id = identity_channel(2);
        let dep = depolarizing(2);
        let j = id.choi().mat() * re(1.0) - dep.choi().mat().scale(0.5);
        let choi = ChoiMatrix::new(2, j).unwrap();
        match kraus_of_choi(&choi, &tol()) {
            Err(Error::NotPsd { min_eig }) => assert!(min_eig < -0.1),
            other => panic!("expected NotPsd, got {other:?}"),
        }
    }

    #[test]
    fn compose_multiplies_transfer_matrices() {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let a = random_unital_channel(3, 2, &mut rng).unwrap();
        let b = random_unital_channel(3, 2, &mut rng).unwrap();
        let c = a.compose(&b).unwrap();
        let want = a.transfer() * b.transfer();
        assert!(approx_eq(c.transfer(), &want, 1e-10));
    }

    #[test]
    fn power_matches_repeated_compose() {
        let mut rng = ChaCha12Rng::seed_from_u64(18);
        let a = random_unital_channel(2, 3, &mut rng).unwrap();
        let p3 = a.power(3).unwrap();
        let c3 = a.compose(&a).unwrap().compose(&a).unwrap();
        assert!(p3.approx_eq(&c3, &tol()));
        assert!(a.power(0).is_err());
    }

    #[test]
    fn dual_is_the_trace_adjoint() {
        let mut rng = ChaCha12Rng::seed_from_u64(19);
        let ch = random_unital_channel(3, 3, &mut rng).unwrap();
        let dual = ch.dual().unwrap();
        let x = random_hermitian(3, &mut rng);
        let y = random_hermitian(3, &mut rng);
        let lhs = trace_dot(&dual.apply(&x), &y);
        let rhs = trace_dot(&x, &ch.apply(&y));
        assert!((lhs - rhs).norm() < 1e-11);
    }

    #[test]
    fn convex_combine_validates_weights() {
        let id = identity_channel(2);
        let dep = depolarizing(2);
        assert!(convex_combine(&[(0.7, &id), (0.7, &dep)], &tol()).is_err());
        assert!(convex_combine(&[(1.3, &id), (-0.3, &dep)], &tol()).is_err());
        let mix = convex_combine(&[(0.25, &id), (0.75, &dep)], &tol()).unwrap();
        let want = id.choi().mat().scale(0.25) + dep.choi().mat().scale(0.75);
        assert!(approx_eq(mix.choi().mat(), &want, 1e-12));
    }

    #[test]
    fn weyl_heisenberg_is_trace_orthogonal_and_averages_to_depolarizing() {
        for d in 2..=5 {
            let ws = weyl_heisenberg(d);
            assert_eq!(ws.len(), d * d);
            for (i, a) in ws.iter().enumerate() {
                assert!(cmat::is_unitary(a, 1e-12));
                for (j, b) in ws.iter().enumerate() {
                    let ip = trace_dot(a, b);
                    let want = if i == j { d as f64 } else { 0.0 };
                    assert!((ip - re(want)).norm() < 1e-10, "d={d} i={i} j={j}");
                }
            }
            // (1/d^2) Σ W X W† = Tr(X) I / d, checked on the transfer matrix
            let mut t = CMat::zeros(d * d, d * d);
            for w in &ws {
                t += w.kronecker(&w.conjugate());
            }
            t = t.scale(1.0 / (d * d) as f64);
            assert!(approx_eq(&t, &transfer_of(depolarizing(d).kraus()), 1e-12));
        }
    }

    #[test]
    fn weyl_heisenberg_d2_is_the_pauli_family() {
        let ws = weyl_heisenberg(2);
        let x = matrix_unit(2, 0, 1) + matrix_unit(2, 1, 0);
        let z = matrix_unit(2, 0, 0) - matrix_unit(2, 1, 1);
        assert!(approx_eq(&ws[0], &identity(2), 1e-14)); // W_00 = I
        assert!(approx_eq(&ws[1], &z, 1e-14)); // W_01 = D = Z
        assert!(approx_eq(&ws[2], &x, 1e-14)); // W_10 = S = X
        assert!(approx_eq(&ws[3], &(&x * &z), 1e-14)); // W_11 = XZ
    }

    #[test]
    fn clifford_group_has_24_unitaries() {
        let g = qubit_clifford();
        assert_eq!(g.len(), 24);
        for u in &g {
            assert!(cmat::is_unitary(u, 1e-12));
        }
    }

    #[test]
    fn sinkhorn_channel_is_unital_tp() {
        let mut rng = ChaCha12Rng::seed_from_u64(20);
        for d in [2, 3, 5] {
            let ch = random_unital_channel(d, 3, &mut rng).unwrap();
            assert!(ch.tp_defect() < 1e-11, "tp defect {}", ch.tp_defect());
            assert!(ch.unital_defect() < 1e-11);
            assert!(ch.choi().is_psd(&tol()).unwrap());
            assert!((ch.choi().trace() - re(d as f64)).norm() < 1e-10);
        }
    }

    #[test]
    fn blockwise_channel_fixes_the_block_algebra() {
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        let blocks = [(1usize, 2usize), (1, 3)];
        let w = haar_unitary(5, &mut rng);
        let ch = random_blockwise_channel(&blocks, &w, 3, &mut rng).unwrap();
        assert!(ch.is_unital(&tol()) && ch.is_trace_preserving(&tol()));
        // elements of W (⊕ M_{m} ⊗ I_{n}) W† are fixed: try the two block projections
        let p1 = &w * block_diag(&[identity(2), CMat::zeros(3, 3)]) * w.adjoint();
        let p2 = &w * block_diag(&[CMat::zeros(2, 2), identity(3)]) * w.adjoint();
        assert!(approx_eq(&ch.apply(&p1), &p1, 1e-10));
        assert!(approx_eq(&ch.apply(&p2), &p2, 1e-10));
    }

    #[test]
    fn unital_non_tp_flags_detected() {
        // amplitude damping: TP but not unital
        let g: f64 = 0.3;
        let k1 = CMat::from_row_slice(2, 2, &[re(1.0), re(0.0), re(0.0), re((1.0 - g).sqrt())]);
        let k2 = CMat::from_row_slice(2, 2, &[re(0.0), re(g.sqrt()), re(0.0), re(0.0)]);
        let ch = ChannelRep::from_kraus(vec![k1, k2]).unwrap();
        assert!(ch.is_trace_preserving(&tol()));
        assert!(!ch.is_unital(&tol()));
    }
}
