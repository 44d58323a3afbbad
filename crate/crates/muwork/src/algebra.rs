//! Unital *-subalgebras of `M_d`: commutants, fixed-point algebras of unital
//! channels, block-structure recovery, trace-preserving conditional
//! expectations, the weighted commutant inner product, and the
//! multiplicity-collapsing channel reduction.
//!
//! Every algebra is stored in a canonical form: a unitary frame `W` and a
//! block signature `[(m_1,n_1), …, (m_r,n_r)]` such that
//! `W† A W = ⊕_k M_{m_k} ⊗ I_{n_k}` (the tensor factor carrying the algebra
//! comes first inside each block). The commutant is then
//! `W (⊕_k I_{m_k} ⊗ M_{n_k}) W†`. Blocks are ordered by `(n_k, m_k)`
//! lexicographically descending so signatures are reproducible.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel_core::cmat::{
    block_diag, eigh, fnorm, haar_unitary, identity, is_unitary, matrix_unit, svd, trace_dot,
    unvec_row, vec_row, C64, CMat,
};
use crate::channel_core::{
    random_blockwise_channel, reshuffle, transfer_of_map, weyl_heisenberg, ChannelRep, ChoiMatrix,
};
use crate::error::{Error, Result};
use crate::mixing::MixedUnitaryDecomposition;
use crate::tol::Tol;

/// Eigenvalue clusters closer than this are treated as degenerate when
/// splitting an algebra into blocks; the split is retried with a fresh
/// random element instead of guessing.
const EIGENVALUE_COLLISION: f64 = 1e-6;

/// How the `(m, n)` pairs of a block signature are to be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    /// `(m_k, n_k)` means the algebra contributes `M_{m_k} ⊗ I_{n_k}`
    /// (the stored canonical form).
    AlgebraFactorFirst,
    /// pairs swapped: the algebra reads `I_{n_k} ⊗ M_{m_k}`-style, i.e. the
    /// commutant's factor is listed first.
    CommutantFactorFirst,
}

/// A trace-orthonormal basis of the commutant of some generator set.
#[derive(Debug, Clone)]
pub struct CommutantBasis {
    pub d: usize,
    pub basis: Vec<CMat>,
}

impl CommutantBasis {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

/// Orthonormalize the span of a matrix family in the trace inner product,
/// via an SVD of the stacked vectorizations. Near-dependent directions are
/// dropped at a relative threshold.
fn orthonormal_span(mats: &[CMat], d: usize) -> Result<Vec<CMat>> {
    if mats.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut stack = CMat::zeros(d * d, mats.len());
    for (j, m) in mats.iter().enumerate() {
        if m.shape() != (d, d) {
            return Err(Error::Dimension {
                expected: d,
                got: m.nrows(),
            });
        }
        stack.set_column(j, &vec_row(m));
    }
    let (u, s, _vt) = svd(&stack)?;
    let s0 = s.first().copied().unwrap_or(0.0);
    let thresh = (s0 * 1e-10).max(1e-12);
    let mut out = Vec::new();
    for (i, &si) in s.iter().enumerate() {
        if si > thresh {
            let col: nalgebra::DVector<C64> = u.column(i).into();
            out.push(unvec_row(&col, d));
        }
    }
    Ok(out)
}

/// Orthonormal basis (trace inner product) of the commutant
/// `{X : XK = KX for all K in generators}`, computed as the null space of
/// the stacked commutator maps `X ↦ K X − X K` with singular-value
/// thresholding. An empty generator list yields all of `M_d`.
pub fn commutant(d: usize, generators: &[CMat]) -> Result<CommutantBasis> {
    if generators.is_empty() {
        let mut basis = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                basis.push(matrix_unit(d, i, j));
            }
        }
        return Ok(CommutantBasis { d, basis });
    }
    let d2 = d * d;
    for k in generators {
        if k.shape() != (d, d) {
            return Err(Error::Dimension {
                expected: d,
                got: k.nrows(),
            });
        }
    }
    // vec(KX − XK) = (K ⊗ I − I ⊗ Kᵀ) vec(X), stacked over generators
    let mut stack = CMat::zeros(generators.len() * d2, d2);
    let eye = identity(d);
    for (g, k) in generators.iter().enumerate() {
        let block = k.kronecker(&eye) - eye.kronecker(&k.transpose());
        stack.view_mut((g * d2, 0), (d2, d2)).copy_from(&block);
    }
    let (_u, s, vt) = svd(&stack)?;
    let s0 = s.first().copied().unwrap_or(0.0);
    // absolute floor matters: for abelian generator sets every commutator is
    // ~0 and the largest singular value itself is noise
    let thresh = (s0 * 1e-10).max(1e-9);
    let mut basis = Vec::new();
    for (i, &si) in s.iter().enumerate() {
        if si <= thresh {
            let row = vt.row(i);
            let col = nalgebra::DVector::<C64>::from_fn(d2, |t, _| row[t].conj());
            basis.push(unvec_row(&col, d));
        }
    }
    Ok(CommutantBasis { d, basis })
}

/// A unital *-subalgebra of `M_d` in canonical block form: a unitary frame
/// `W` and blocks `(m_k, n_k)` with `W† A W = ⊕_k M_{m_k} ⊗ I_{n_k}`.
#[derive(Debug, Clone)]
pub struct AlgebraStructure {
    d: usize,
    blocks: Vec<(usize, usize)>,
    frame: CMat,
    basis: Vec<CMat>,
}

impl AlgebraStructure {
    /// Build the algebra `W (⊕_k M_{m_k} ⊗ I_{n_k}) W†` from its signature
    /// and frame. Blocks are reordered to the canonical `(n_k, m_k)`
    /// lexicographic descending order, permuting frame columns to match.
    pub fn from_blocks(blocks: &[(usize, usize)], frame: CMat) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::EmptySet);
        }
        if blocks.iter().any(|&(m, n)| m == 0 || n == 0) {
            return Err(Error::Precondition("zero-sized block".into()));
        }
        let d: usize = blocks.iter().map(|&(m, n)| m * n).sum();
        if frame.shape() != (d, d) {
            return Err(Error::Dimension {
                expected: d,
                got: frame.nrows(),
            });
        }
        if !is_unitary(&frame, 1e-8) {
            return Err(Error::Precondition("frame is not unitary".into()));
        }

        // canonical order: (n, m) lexicographic descending
        let mut order: Vec<usize> = (0..blocks.len()).collect();
        order.sort_by(|&a, &b| {
            (blocks[b].1, blocks[b].0).cmp(&(blocks[a].1, blocks[a].0))
        });
        let offsets: Vec<usize> = blocks
            .iter()
            .scan(0, |acc, &(m, n)| {
                let o = *acc;
                *acc += m * n;
                Some(o)
            })
            .collect();
        let mut sorted_blocks = Vec::with_capacity(blocks.len());
        let mut sorted_frame = CMat::zeros(d, d);
        let mut col = 0;
        for &k in &order {
            let (m, n) = blocks[k];
            sorted_blocks.push((m, n));
            sorted_frame
                .view_mut((0, col), (d, m * n))
                .copy_from(&frame.view((0, offsets[k]), (d, m * n)));
            col += m * n;
        }

        let mut alg = Self {
            d,
            blocks: sorted_blocks,
            frame: sorted_frame,
            basis: Vec::new(),
        };
        alg.basis = alg.build_basis();
        Ok(alg)
    }

    /// The algebra in standard position (frame = identity).
    pub fn from_blocks_std(blocks: &[(usize, usize)]) -> Result<Self> {
        let d = blocks.iter().map(|&(m, n)| m * n).sum();
        Self::from_blocks(blocks, identity(d))
    }

    fn build_basis(&self) -> Vec<CMat> {
        let mut basis = Vec::with_capacity(self.dim_algebra());
        let mut o = 0;
        for &(m, n) in &self.blocks {
            let scale = (n as f64).sqrt().recip();
            for a in 0..m {
                for b in 0..m {
                    let mut e = CMat::zeros(self.d, self.d);
                    for i in 0..n {
                        e[(o + a * n + i, o + b * n + i)] = C64::new(scale, 0.0);
                    }
                    basis.push(&self.frame * e * self.frame.adjoint());
                }
            }
            o += m * n;
        }
        basis
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Block signature `(m_k, n_k)` in canonical order; the algebra's factor
    /// is `M_{m_k}`, the commutant's is `M_{n_k}`.
    pub fn blocks(&self) -> &[(usize, usize)] {
        &self.blocks
    }

    /// Signature with pairs read in the requested convention.
    pub fn blocks_in(&self, convention: Convention) -> Vec<(usize, usize)> {
        match convention {
            Convention::AlgebraFactorFirst => self.blocks.clone(),
            Convention::CommutantFactorFirst => {
                self.blocks.iter().map(|&(m, n)| (n, m)).collect()
            }
        }
    }

    pub fn frame(&self) -> &CMat {
        &self.frame
    }

    /// Trace-orthonormal basis of the algebra, `Σ_k m_k²` elements.
    pub fn basis(&self) -> &[CMat] {
        &self.basis
    }

    /// Number of blocks.
    pub fn r(&self) -> usize {
        self.blocks.len()
    }

    /// Number of blocks with a nontrivial commutant factor (`n_k > 1`).
    pub fn r_hat(&self) -> usize {
        self.blocks.iter().filter(|&&(_m, n)| n > 1).count()
    }

    /// Linear dimension of the algebra, `Σ_k m_k²`.
    pub fn dim_algebra(&self) -> usize {
        self.blocks.iter().map(|&(m, _n)| m * m).sum()
    }

    /// Linear dimension of the commutant, `D = Σ_k n_k²`.
    pub fn dim_commutant(&self) -> usize {
        self.blocks.iter().map(|&(_m, n)| n * n).sum()
    }

    /// Starting offset of each block along the diagonal (in frame
    /// coordinates), plus the terminating offset `d`.
    pub fn block_offsets(&self) -> Vec<usize> {
        let mut offs = Vec::with_capacity(self.blocks.len() + 1);
        let mut o = 0;
        for &(m, n) in &self.blocks {
            offs.push(o);
            o += m * n;
        }
        offs.push(o);
        offs
    }

    /// Trace-preserving conditional expectation onto the algebra:
    /// the orthogonal projection `E_A(X) = Σ_b ⟨b, X⟩ b` over the
    /// trace-orthonormal basis.
    pub fn conditional_expectation(&self, x: &CMat) -> CMat {
        let mut out = CMat::zeros(self.d, self.d);
        for b in &self.basis {
            out += b * trace_dot(b, x);
        }
        out
    }

    /// The conditional expectation as a channel.
    pub fn expectation_channel(&self, tol: &Tol) -> Result<ChannelRep> {
        let t = transfer_of_map(self.d, |x| self.conditional_expectation(x));
        ChannelRep::from_transfer(t, tol)
    }

    /// Choi matrix of the conditional expectation.
    pub fn expectation_choi(&self) -> ChoiMatrix {
        let t = transfer_of_map(self.d, |x| self.conditional_expectation(x));
        ChoiMatrix::new(self.d, reshuffle(&t, self.d)).expect("square by construction")
    }

    /// Is `x` in the algebra (projection residual at most `tol·(1+‖x‖)`)?
    pub fn contains(&self, x: &CMat, tol: f64) -> bool {
        x.shape() == (self.d, self.d)
            && fnorm(&(self.conditional_expectation(x) - x)) <= tol * (1.0 + fnorm(x))
    }

    /// Trace-orthonormal basis of the commutant `W (⊕ I_{m_k} ⊗ M_{n_k}) W†`,
    /// `D` elements.
    pub fn commutant_basis(&self) -> Vec<CMat> {
        let mut basis = Vec::with_capacity(self.dim_commutant());
        let mut o = 0;
        for &(m, n) in &self.blocks {
            let scale = (m as f64).sqrt().recip();
            for a in 0..n {
                for b in 0..n {
                    let mut e = CMat::zeros(self.d, self.d);
                    for alpha in 0..m {
                        e[(o + alpha * n + a, o + alpha * n + b)] = C64::new(scale, 0.0);
                    }
                    basis.push(&self.frame * e * self.frame.adjoint());
                }
            }
            o += m * n;
        }
        basis
    }

    /// Orthogonal projection onto the commutant.
    pub fn project_commutant(&self, x: &CMat) -> CMat {
        let mut out = CMat::zeros(self.d, self.d);
        for c in self.commutant_basis() {
            let coeff = trace_dot(&c, x);
            out += c * coeff;
        }
        out
    }

    pub fn in_commutant(&self, x: &CMat, tol: f64) -> bool {
        x.shape() == (self.d, self.d)
            && fnorm(&(self.project_commutant(x) - x)) <= tol * (1.0 + fnorm(x))
    }

    /// Read off the per-block commutant components of `x`: writing
    /// `W† x W = ⊕_k I_{m_k} ⊗ A_k`, returns `[A_1, …, A_r]`. The residual of
    /// that block-scalar form is returned alongside; callers decide how much
    /// deviation to accept.
    pub fn commutant_components(&self, x: &CMat) -> (Vec<CMat>, f64) {
        let y = self.frame.adjoint() * x * &self.frame;
        let mut comps = Vec::with_capacity(self.blocks.len());
        let mut rebuilt = CMat::zeros(self.d, self.d);
        let mut o = 0;
        for &(m, n) in &self.blocks {
            let mut a = CMat::zeros(n, n);
            for alpha in 0..m {
                a += y.view((o + alpha * n, o + alpha * n), (n, n));
            }
            a = a.scale(1.0 / m as f64);
            for alpha in 0..m {
                rebuilt
                    .view_mut((o + alpha * n, o + alpha * n), (n, n))
                    .copy_from(&a);
            }
            comps.push(a);
            o += m * n;
        }
        let residual = fnorm(&(y - rebuilt));
        (comps, residual)
    }

    /// Weighted inner product on the commutant:
    /// `⟨U, V⟩ = Σ_k n_k Tr(A_k† B_k)` where `A_k`, `B_k` are the block
    /// components of `U` and `V`. Arguments must lie in the commutant.
    pub fn weighted_inner_product(&self, u: &CMat, v: &CMat, tol: &Tol) -> Result<C64> {
        let (ua, ur) = self.commutant_components(u);
        if ur > tol.eq * (1.0 + fnorm(u)) {
            return Err(Error::Domain(
                "left argument is not in the commutant".into(),
            ));
        }
        let (va, vr) = self.commutant_components(v);
        if vr > tol.eq * (1.0 + fnorm(v)) {
            return Err(Error::Domain(
                "right argument is not in the commutant".into(),
            ));
        }
        Ok(self.weighted_inner_product_of_components(&ua, &va))
    }

    /// The weighted inner product evaluated directly on block components.
    pub fn weighted_inner_product_of_components(&self, a: &[CMat], b: &[CMat]) -> C64 {
        self.blocks
            .iter()
            .zip(a.iter().zip(b))
            .map(|(&(_m, n), (ak, bk))| trace_dot(ak, bk) * C64::new(n as f64, 0.0))
            .sum()
    }

    /// Haar-random unitary in the commutant: `W (⊕_k I_{m_k} ⊗ U_k) W†` with
    /// each `U_k` Haar on `U(n_k)`.
    pub fn haar_commutant_unitary<R: Rng>(&self, rng: &mut R) -> CMat {
        let parts: Vec<CMat> = self
            .blocks
            .iter()
            .map(|&(m, n)| identity(m).kronecker(&haar_unitary(n, rng)))
            .collect();
        &self.frame * block_diag(&parts) * self.frame.adjoint()
    }

    /// Project an arbitrary matrix to a unitary in the commutant: average the
    /// diagonal `n_k`-subblocks over the multiplicity, then replace each block
    /// component by its polar factor. For inputs already of the form
    /// `W (⊕ I_{m_k} ⊗ A_k) W†` with invertible `A_k` this is the nearest
    /// commutant unitary in Frobenius distance.
    pub fn nearest_commutant_unitary(&self, x: &CMat) -> Result<CMat> {
        let (comps, _residual) = self.commutant_components(x);
        let factors: Vec<CMat> = comps
            .iter()
            .map(crate::channel_core::cmat::polar_unitary)
            .collect::<Result<_>>()?;
        self.commutant_element(&factors)
    }

    /// Assemble the commutant element `W (⊕_k I_{m_k} ⊗ A_k) W†` from block
    /// components.
    pub fn commutant_element(&self, components: &[CMat]) -> Result<CMat> {
        if components.len() != self.blocks.len() {
            return Err(Error::Dimension {
                expected: self.blocks.len(),
                got: components.len(),
            });
        }
        let mut parts = Vec::with_capacity(self.blocks.len());
        for (&(m, n), a) in self.blocks.iter().zip(components) {
            if a.shape() != (n, n) {
                return Err(Error::Dimension {
                    expected: n,
                    got: a.nrows(),
                });
            }
            parts.push(identity(m).kronecker(a));
        }
        Ok(&self.frame * block_diag(&parts) * self.frame.adjoint())
    }
}

fn random_combination<R: Rng>(mats: &[CMat], d: usize, rng: &mut R) -> CMat {
    let mut out = CMat::zeros(d, d);
    for m in mats {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        out += m * C64::new(re, im);
    }
    out
}

/// Group the (ascending) eigenvalues into clusters separated by more than
/// the collision threshold; returns the half-open index ranges.
fn eigenvalue_clusters(vals: &[f64]) -> Vec<(usize, usize)> {
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..vals.len() {
        if vals[i] - vals[i - 1] >= EIGENVALUE_COLLISION {
            groups.push((start, i));
            start = i;
        }
    }
    groups.push((start, vals.len()));
    groups
}

/// Recover the canonical block form of the unital *-algebra spanned by
/// `mats`: orthonormalize, verify the span is a *-algebra containing `I`,
/// split along the center by diagonalizing a random self-adjoint central
/// element, then recover each summand's tensor structure from the eigenspaces
/// of a random self-adjoint algebra element and SVD-polar intertwiners.
/// Degenerate random draws are retried up to eight times per stage.
pub fn decompose_algebra<R: Rng>(
    mats: &[CMat],
    rng: &mut R,
    tol: &Tol,
) -> Result<AlgebraStructure> {
    let first = mats.first().ok_or(Error::EmptySet)?;
    let d = first.nrows();
    let basis = orthonormal_span(mats, d)?;
    let dim = basis.len();

    let project = |x: &CMat| -> CMat {
        let mut out = CMat::zeros(d, d);
        for b in &basis {
            out += b * trace_dot(b, x);
        }
        out
    };
    // unital
    let eye = identity(d);
    let res_i = fnorm(&(project(&eye) - &eye));
    if res_i > 1e-8 * (1.0 + (d as f64).sqrt()) {
        return Err(Error::NotAnAlgebra { residual: res_i });
    }
    // *-closed and closed under products
    for b in &basis {
        let adj = b.adjoint();
        let res = fnorm(&(project(&adj) - &adj));
        if res > 1e-8 * (1.0 + fnorm(b)) {
            return Err(Error::NotAnAlgebra { residual: res });
        }
    }
    for bi in &basis {
        for bj in &basis {
            let prod = bi * bj;
            let res = fnorm(&(project(&prod) - &prod));
            if res > 1e-8 * (1.0 + fnorm(&prod)) {
                return Err(Error::NotAnAlgebra { residual: res });
            }
        }
    }

    // center: coefficient null space of all commutators [Σ c_i b_i, b_j] = 0
    let d2 = d * d;
    let mut stack = CMat::zeros(dim * d2, dim);
    for (j, bj) in basis.iter().enumerate() {
        for (i, bi) in basis.iter().enumerate() {
            let comm = bi * bj - bj * bi;
            let v = vec_row(&comm);
            stack.view_mut((j * d2, i), (d2, 1)).copy_from(&v);
        }
    }
    let (_u, s, vt) = svd(&stack)?;
    let s0 = s.first().copied().unwrap_or(0.0);
    let thresh = (s0 * 1e-10).max(1e-9);
    let mut center: Vec<CMat> = Vec::new();
    for (i, &si) in s.iter().enumerate() {
        if si <= thresh {
            let mut z = CMat::zeros(d, d);
            for (t, b) in basis.iter().enumerate() {
                z += b * vt[(i, t)].conj();
            }
            center.push(z);
        }
    }
    let r = center.len();
    if r == 0 {
        return Err(Error::Inconsistency(
            "algebra has an empty center (identity missing?)".into(),
        ));
    }

    // split the space along the center's joint eigenbasis
    let mut summands: Option<Vec<CMat>> = None;
    for _attempt in 0..8 {
        let z = random_combination(&center, d, rng);
        let z = (&z + z.adjoint()).scale(0.5);
        let (vals, vecs) = eigh(&z)?;
        let groups = eigenvalue_clusters(&vals);
        if groups.len() != r {
            continue;
        }
        summands = Some(
            groups
                .iter()
                .map(|&(a, b)| vecs.columns(a, b - a).into_owned())
                .collect(),
        );
        break;
    }
    let summands = summands.ok_or(Error::StructureSearch {
        attempts: 8,
        reason: "central element eigenvalues kept colliding across summands".into(),
    })?;

    // within each summand, find the M_m ⊗ I_n tensor structure
    let mut blocks: Vec<(usize, usize)> = Vec::new();
    let mut frames: Vec<CMat> = Vec::new();
    for vk in &summands {
        let dk = vk.ncols();
        let compressed: Vec<CMat> = basis.iter().map(|b| vk.adjoint() * b * vk).collect();
        let mut found: Option<(usize, usize, CMat)> = None;
        'attempts: for _attempt in 0..8 {
            let a = random_combination(&compressed, dk, rng);
            let a = (&a + a.adjoint()).scale(0.5);
            let (vals, vecs) = eigh(&a)?;
            let groups = eigenvalue_clusters(&vals);
            let n = groups[0].1 - groups[0].0;
            if groups.iter().any(|&(x, y)| y - x != n) {
                continue;
            }
            let m = groups.len();
            if m * n != dk {
                continue;
            }
            // align the eigenspaces with partial isometries from a generic
            // (non-self-adjoint) algebra element
            let g = random_combination(&compressed, dk, rng);
            let v1 = vecs.columns(groups[0].0, n).into_owned();
            let mut cols = CMat::zeros(dk, dk);
            cols.view_mut((0, 0), (dk, n)).copy_from(&v1);
            for (j, &(gs, _ge)) in groups.iter().enumerate().skip(1) {
                let vj = vecs.columns(gs, n).into_owned();
                let x = vj.adjoint() * &g * &v1;
                let (su, sv, svt) = svd(&x)?;
                let smin = sv.last().copied().unwrap_or(0.0);
                let smax = sv.first().copied().unwrap_or(0.0);
                if smax <= 0.0 || smin < 1e-8 * smax {
                    continue 'attempts;
                }
                let rot = su * svt;
                cols.view_mut((0, j * n), (dk, n)).copy_from(&(vj * rot));
            }
            found = Some((m, n, cols));
            break;
        }
        let (m, n, cols) = found.ok_or(Error::StructureSearch {
            attempts: 8,
            reason: "eigenspace splitting inside a central summand stayed degenerate".into(),
        })?;
        blocks.push((m, n));
        frames.push(vk * cols);
    }

    if blocks.iter().map(|&(m, _)| m * m).sum::<usize>() != dim {
        return Err(Error::Inconsistency(format!(
            "recovered blocks {:?} do not account for the spanned dimension {}",
            blocks, dim
        )));
    }

    let mut frame = CMat::zeros(d, d);
    let mut col = 0;
    for f in &frames {
        frame.view_mut((0, col), (d, f.ncols())).copy_from(f);
        col += f.ncols();
    }

    let alg = AlgebraStructure::from_blocks(&blocks, frame)?;
    // the recovered structure must reproduce every input element
    for m in mats {
        let res = fnorm(&(alg.conditional_expectation(m) - m));
        if res > 1e-7 * (1.0 + fnorm(m)) {
            return Err(Error::StructureSearch {
                attempts: 8,
                reason: format!(
                    "recovered frame does not reproduce the algebra (residual {res:.3e})"
                ),
            });
        }
    }
    let _ = tol;
    Ok(alg)
}

/// Orthonormal basis of the smallest unital *-algebra containing the
/// generators: closes the span under adjoints and pairwise products until
/// the dimension stabilizes.
pub fn algebra_generated_by(d: usize, generators: &[CMat]) -> Result<Vec<CMat>> {
    let mut family: Vec<CMat> = vec![identity(d)];
    for g in generators {
        if g.shape() != (d, d) {
            return Err(Error::Dimension {
                expected: d,
                got: g.nrows(),
            });
        }
        family.push(g.clone());
        family.push(g.adjoint());
    }
    let mut basis = orthonormal_span(&family, d)?;
    for _ in 0..32 {
        let mut extended = basis.clone();
        for a in &basis {
            for b in &basis {
                extended.push(a * b);
            }
        }
        let next = orthonormal_span(&extended, d)?;
        if next.len() == basis.len() {
            return Ok(next);
        }
        basis = next;
    }
    Err(Error::Stagnation {
        residual: basis.len() as f64,
        iterations: 32,
    })
}

/// Fixed-point algebra of a unital trace-preserving channel: the commutant
/// of its Kraus operators (taken together with their adjoints), brought to
/// canonical block form. Cross-checked against the transfer matrix: the
/// number of eigenvalues at 1 must equal the algebra's linear dimension, and
/// every basis element must be fixed by the channel.
pub fn fixed_point_algebra<R: Rng>(
    channel: &ChannelRep,
    rng: &mut R,
    tol: &Tol,
) -> Result<AlgebraStructure> {
    if !channel.is_trace_preserving(tol) {
        return Err(Error::NotTracePreserving {
            defect: channel.tp_defect(),
        });
    }
    if !channel.is_unital(tol) {
        return Err(Error::NotUnital {
            defect: channel.unital_defect(),
        });
    }
    let mut gens: Vec<CMat> = channel.kraus().ops().to_vec();
    gens.extend(channel.kraus().ops().iter().map(|k| k.adjoint()));
    let comm = commutant(channel.d(), &gens)?;
    let alg = decompose_algebra(&comm.basis, rng, tol)?;

    for b in alg.basis() {
        let defect = fnorm(&(channel.apply(b) - b));
        if defect > tol.eq * (1.0 + fnorm(b)) * 10.0 {
            return Err(Error::NotFixed { defect });
        }
    }
    let fixed_count = crate::channel_core::cmat::eigvals(channel.transfer())?
        .iter()
        .filter(|l| (*l - C64::new(1.0, 0.0)).norm() <= tol.peripheral)
        .count();
    if fixed_count != alg.dim_algebra() {
        return Err(Error::Inconsistency(format!(
            "transfer matrix has {} peripheral-1 eigenvalues but the fixed algebra has dimension {}",
            fixed_count,
            alg.dim_algebra()
        )));
    }
    Ok(alg)
}

/// Collapse the algebra's multiplicities out of a channel that fixes it.
/// After rotating by `W`, each Kraus operator must be block-scalar,
/// `K_i = ⊕_k I_{m_k} ⊗ K̃_{ik}`; the reduced channel on `M_{Σ n_k}` has
/// Kraus `⊕_k K̃_{ik}`. The reduction is a *-semigroup isomorphism onto its
/// image: composition is preserved, and [`expand_channel`] inverts it.
pub fn reduce_channel(
    channel: &ChannelRep,
    algebra: &AlgebraStructure,
    tol: &Tol,
) -> Result<ChannelRep> {
    if channel.d() != algebra.d() {
        return Err(Error::Dimension {
            expected: algebra.d(),
            got: channel.d(),
        });
    }
    for b in algebra.basis() {
        let defect = fnorm(&(channel.apply(b) - b));
        if defect > tol.eq * (1.0 + fnorm(b)) * 10.0 {
            return Err(Error::NotFixed { defect });
        }
    }
    let mut reduced = Vec::with_capacity(channel.kraus().len());
    for k in channel.kraus().ops() {
        let (comps, residual) = algebra.commutant_components(k);
        if residual > tol.eq * (1.0 + fnorm(k)) * 10.0 {
            return Err(Error::BlockForm { residual });
        }
        reduced.push(block_diag(&comps));
    }
    ChannelRep::from_kraus(reduced)
}

/// Inverse of [`reduce_channel`] on its image: expand a channel on
/// `M_{Σ n_k}` whose Kraus operators are block-diagonal along the `n_k`
/// partition back to `M_d` by tensoring each block with `I_{m_k}`.
pub fn expand_channel(
    reduced: &ChannelRep,
    algebra: &AlgebraStructure,
    tol: &Tol,
) -> Result<ChannelRep> {
    let nsum: usize = algebra.blocks().iter().map(|&(_m, n)| n).sum();
    if reduced.d() != nsum {
        return Err(Error::Dimension {
            expected: nsum,
            got: reduced.d(),
        });
    }
    let mut ops = Vec::with_capacity(reduced.kraus().len());
    for k in reduced.kraus().ops() {
        let mut parts = Vec::with_capacity(algebra.blocks().len());
        let mut rebuilt = CMat::zeros(nsum, nsum);
        let mut o = 0;
        for &(_m, n) in algebra.blocks() {
            let blk = k.view((o, o), (n, n)).into_owned();
            rebuilt.view_mut((o, o), (n, n)).copy_from(&blk);
            parts.push(blk);
            o += n;
        }
        let residual = fnorm(&(k - rebuilt));
        if residual > tol.eq * (1.0 + fnorm(k)) * 10.0 {
            return Err(Error::BlockForm { residual });
        }
        ops.push(algebra.commutant_element(&parts)?);
    }
    ChannelRep::from_kraus(ops)
}

/// Wrapper building a random unital channel whose fixed-point algebra
/// contains (generically equals) the given algebra.
pub fn random_fixing_channel<R: Rng>(
    algebra: &AlgebraStructure,
    kraus_count: usize,
    rng: &mut R,
) -> Result<ChannelRep> {
    random_blockwise_channel(algebra.blocks(), algebra.frame(), kraus_count, rng)
}

/// Explicit finite mixed-unitary decomposition of the conditional
/// expectation. Atoms are `W (⊕_k ω^{j(k+1)} I_{m_k} ⊗ V_k) W†` where the
/// `V_k` range over the Weyl–Heisenberg family on each commutant factor and
/// `ω = exp(2πi/q)` with `q = r` for `r ≥ 2` (no phases for a single block):
/// the per-block average projects each diagonal block onto its algebra
/// factor and the phase average kills everything between blocks. Weights are
/// uniform over all `q·Π_k n_k²` atoms.
pub fn condexp_as_mixed_unitary(algebra: &AlgebraStructure) -> MixedUnitaryDecomposition {
    let blocks = algebra.blocks();
    let r = blocks.len();
    let q = if r == 1 { 1 } else { r };
    let families: Vec<Vec<CMat>> = blocks.iter().map(|&(_m, n)| weyl_heisenberg(n)).collect();
    let combos: usize = families.iter().map(|f| f.len()).product();

    let mut unitaries = Vec::with_capacity(combos * q);
    for flat in 0..combos {
        // decode the odometer, last block fastest
        let mut idx = vec![0usize; r];
        let mut rem = flat;
        for k in (0..r).rev() {
            idx[k] = rem % families[k].len();
            rem /= families[k].len();
        }
        for j in 0..q {
            let parts: Vec<CMat> = blocks
                .iter()
                .enumerate()
                .map(|(k, &(m, _n))| {
                    let phase = if q == 1 {
                        C64::new(1.0, 0.0)
                    } else {
                        C64::from_polar(
                            1.0,
                            2.0 * std::f64::consts::PI * (j * (k + 1)) as f64 / q as f64,
                        )
                    };
                    identity(m).kronecker(&families[k][idx[k]]) * phase
                })
                .collect();
            unitaries.push(algebra.frame() * block_diag(&parts) * algebra.frame().adjoint());
        }
    }
    let count = unitaries.len();
    let weights = vec![1.0 / count as f64; count];
    let target_choi = algebra.expectation_choi();

    let d = algebra.d();
    let mut j = CMat::zeros(d * d, d * d);
    for (w, u) in weights.iter().zip(&unitaries) {
        let v = vec_row(u);
        j += (&v * v.adjoint()).scale(*w);
    }
    let residual = fnorm(&(j - target_choi.mat()));

    MixedUnitaryDecomposition {
        weights,
        unitaries,
        target_choi,
        residual,
    }
}
