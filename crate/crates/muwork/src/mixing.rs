//! Mixing constants, the averaged map `L`, guaranteed-ball membership, and
//! construction of explicit mixed-unitary decompositions.
//!
//! The central quantity is a constant `p` depending only on the fixed-point
//! algebra `A` such that `p·Φ + (1−p)·E_A` is mixed unitary for every unital
//! channel `Φ` fixing `A` pointwise. The constant is reported as an exact
//! integer ratio; floating arithmetic enters only when the mixture is formed.

use rand::Rng;

use crate::algebra::AlgebraStructure;
use crate::channel_core::cmat::{
    approx_eq, eigh, fnorm, hermitize, identity, min_eig_herm, unvec_row, vec_row, CMat, CVec,
};
use crate::channel_core::{depolarizing, ChannelRep, ChoiMatrix, KrausSet};
use crate::convex_solver::{embed_hermitian, frank_wolfe_fit, unembed_hermitian, AtomDictionary};
use crate::error::{Error, Result};
use crate::tol::Tol;
use crate::Ratio;

/// Which case of the mixing-constant formula applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixingBranch {
    /// `A′ = C·I` (algebra is all of `M_d`): only the identity channel fixes
    /// `A`, so `p = 1`.
    Trivial,
    /// single block with `n₁ > 1`: `p = 1/(n₁² − 1)`.
    SingleBlock,
    /// more than one block: `p = 1/(D − r̂ + Σ_{n_k>1} n_k²)`.
    MultiBlock,
}

/// The certified mixing constant for an algebra: `p·Φ + (1−p)·E_A` is mixed
/// unitary whenever the unital channel `Φ` fixes `A` pointwise.
#[derive(Debug, Clone)]
pub struct MixingCertificate {
    pub algebra: AlgebraStructure,
    pub p: Ratio,
    pub branch: MixingBranch,
    /// weight placed on the conditional expectation, `1 − p`
    pub coefficient_on_e: f64,
}

impl MixingCertificate {
    pub fn p_f64(&self) -> f64 {
        self.p.as_f64()
    }
}

/// Compute the mixing constant for an algebra from its block signature alone.
pub fn mixing_constant(algebra: &AlgebraStructure) -> MixingCertificate {
    let blocks = algebra.blocks();
    let big_d = algebra.dim_commutant() as u64;
    let (branch, p) = if big_d == 1 {
        (MixingBranch::Trivial, Ratio::new(1, 1))
    } else if blocks.len() == 1 {
        let n = blocks[0].1 as u64;
        (MixingBranch::SingleBlock, Ratio::new(1, n * n - 1))
    } else {
        let r_hat = algebra.r_hat() as u64;
        let big: u64 = blocks
            .iter()
            .filter(|&&(_m, n)| n > 1)
            .map(|&(_m, n)| (n * n) as u64)
            .sum();
        (MixingBranch::MultiBlock, Ratio::new(1, big_d - r_hat + big))
    };
    let pf = p.as_f64();
    debug_assert!(pf > 0.0 && pf <= 1.0);
    MixingCertificate {
        algebra: algebra.clone(),
        coefficient_on_e: 1.0 - pf,
        p,
        branch,
    }
}

/// An explicit mixed-unitary decomposition `Σ λ_i · ad_{U_i}` of a target
/// channel, certified by the Frobenius distance of the reconstructed Choi
/// matrix to the target's.
#[derive(Debug, Clone)]
pub struct MixedUnitaryDecomposition {
    pub weights: Vec<f64>,
    pub unitaries: Vec<CMat>,
    pub target_choi: ChoiMatrix,
    /// `‖Σ λ_i J(ad_{U_i}) − J_target‖_F`
    pub residual: f64,
}

impl MixedUnitaryDecomposition {
    pub fn len(&self) -> usize {
        self.unitaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unitaries.is_empty()
    }

    pub fn d(&self) -> usize {
        self.target_choi.d()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Choi matrix of the mixture `Σ λ_i · ad_{U_i}`.
    pub fn choi(&self) -> CMat {
        let d = self.d();
        let mut j = CMat::zeros(d * d, d * d);
        for (w, u) in self.weights.iter().zip(&self.unitaries) {
            let v = vec_row(u);
            j += (&v * v.adjoint()).scale(*w);
        }
        j
    }

    pub fn apply(&self, x: &CMat) -> CMat {
        let d = self.d();
        let mut out = CMat::zeros(d, d);
        for (w, u) in self.weights.iter().zip(&self.unitaries) {
            out += (u * x * u.adjoint()).scale(*w);
        }
        out
    }

    /// The mixture as a channel, with Kraus operators `√λ_i · U_i`
    /// (zero-weight atoms dropped).
    pub fn channel(&self) -> Result<ChannelRep> {
        let ops: Vec<CMat> = self
            .weights
            .iter()
            .zip(&self.unitaries)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, u)| u.scale(w.sqrt()))
            .collect();
        ChannelRep::from_kraus(ops)
    }

    /// Check every declared invariant: nonnegative weights summing to one
    /// (1e−8), unitary atoms (1e−9), atoms commuting with the algebra basis
    /// when one is attached, and the reconstructed Choi within the reported
    /// residual.
    pub fn validate(&self, algebra: Option<&AlgebraStructure>, tol: &Tol) -> Result<()> {
        if self.weights.len() != self.unitaries.len() {
            return Err(Error::Dimension {
                expected: self.weights.len(),
                got: self.unitaries.len(),
            });
        }
        if let Some(w) = self.weights.iter().find(|w| **w < 0.0) {
            return Err(Error::BadMixture { sum: *w });
        }
        let sum = self.weight_sum();
        if (sum - 1.0).abs() > 1e-8 {
            return Err(Error::BadMixture { sum });
        }
        let d = self.d();
        for u in &self.unitaries {
            if !approx_eq(&(u.adjoint() * u), &identity(d), 1e-9) {
                return Err(Error::Precondition("decomposition atom is not unitary".into()));
            }
        }
        if let Some(alg) = algebra {
            for u in &self.unitaries {
                for b in alg.basis() {
                    let comm = u * b - b * u;
                    if fnorm(&comm) > tol.eq * (1.0 + fnorm(u) * fnorm(b)) * 10.0 {
                        return Err(Error::Domain(
                            "decomposition atom does not commute with the algebra".into(),
                        ));
                    }
                }
            }
        }
        let recomputed = fnorm(&(self.choi() - self.target_choi.mat()));
        if recomputed > self.residual + 1e-9 * (1.0 + self.target_choi.mat().norm()) {
            return Err(Error::Inconsistency(format!(
                "reported residual {} but reconstruction differs by {}",
                self.residual, recomputed
            )));
        }
        Ok(())
    }
}

/// Error unless the channel fixes every basis element of the algebra.
pub(crate) fn ensure_fixes(channel: &ChannelRep, algebra: &AlgebraStructure, tol: &Tol) -> Result<()> {
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
    Ok(())
}

/// Mix a unital channel with the maximally depolarizing channel:
/// `p·Φ + (1−p)·δ_d`.
pub fn watrous_mix(phi: &ChannelRep, p: f64, tol: &Tol) -> Result<ChannelRep> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("mixing weight {p} outside [0, 1]")));
    }
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
    crate::channel_core::convex_combine(&[(p, phi), (1.0 - p, &depolarizing(phi.d()))], tol)
}

/// Mix a channel fixing the algebra with the conditional expectation at the
/// certified weight: `p·Φ + (1−p)·E_A` where `p = mixing_constant(A).p`.
/// The result is guaranteed to admit a mixed-unitary decomposition over
/// commutant unitaries.
pub fn general_mix(
    phi: &ChannelRep,
    algebra: &AlgebraStructure,
    tol: &Tol,
) -> Result<(ChannelRep, MixingCertificate)> {
    ensure_fixes(phi, algebra, tol)?;
    let cert = mixing_constant(algebra);
    let p = cert.p_f64();
    let e = algebra.expectation_channel(tol)?;
    let mixed = crate::channel_core::convex_combine(&[(p, phi), (1.0 - p, &e)], tol)?;
    Ok((mixed, cert))
}

/// Block components of every canonical Kraus operator of a channel whose
/// Kraus set lies in the commutant: entry `[i][k]` is the `n_k × n_k` factor
/// of the `i`-th Kraus operator on block `k`.
fn kraus_block_components(
    channel: &ChannelRep,
    algebra: &AlgebraStructure,
    tol: &Tol,
) -> Result<Vec<Vec<CMat>>> {
    let mut out = Vec::with_capacity(channel.kraus().len());
    for k in channel.kraus().ops() {
        let (comps, residual) = algebra.commutant_components(k);
        if residual > tol.eq * (1.0 + fnorm(k)) * 10.0 {
            return Err(Error::BlockForm { residual });
        }
        out.push(comps);
    }
    Ok(out)
}

/// Restriction of a commutant-Kraus channel to the `k`-th block (0-based):
/// the channel on `M_{n_k}` whose Kraus operators are the block-`k` factors.
/// Unital and trace preserving whenever the input is.
pub fn restrict_block(
    phi: &ChannelRep,
    algebra: &AlgebraStructure,
    k: usize,
    tol: &Tol,
) -> Result<ChannelRep> {
    if k >= algebra.r() {
        return Err(Error::Domain(format!(
            "block index {k} out of range (algebra has {} blocks)",
            algebra.r()
        )));
    }
    let comps = kraus_block_components(phi, algebra, tol)?;
    ChannelRep::from_kraus(comps.into_iter().map(|mut c| c.swap_remove(k)).collect())
}

/// Embed a channel on the `k`-th block factor `M_{n_k}` back into `M_d`:
/// each Kraus operator becomes `W (0 ⊕ … ⊕ I_{m_k} ⊗ K ⊕ … ⊕ 0) W†`.
/// Completely positive but not trace preserving (the other blocks are
/// annihilated); the Choi trace equals `m_k · n_k`.
pub fn hat_embed(
    block_channel: &ChannelRep,
    algebra: &AlgebraStructure,
    k: usize,
) -> Result<ChannelRep> {
    if k >= algebra.r() {
        return Err(Error::Domain(format!(
            "block index {k} out of range (algebra has {} blocks)",
            algebra.r()
        )));
    }
    let (_m, n) = algebra.blocks()[k];
    if block_channel.d() != n {
        return Err(Error::Dimension {
            expected: n,
            got: block_channel.d(),
        });
    }
    let mut ops = Vec::with_capacity(block_channel.kraus().len());
    for op in block_channel.kraus().ops() {
        let comps: Vec<CMat> = algebra
            .blocks()
            .iter()
            .enumerate()
            .map(|(j, &(_mj, nj))| {
                if j == k {
                    op.clone()
                } else {
                    CMat::zeros(nj, nj)
                }
            })
            .collect();
        ops.push(algebra.commutant_element(&comps)?);
    }
    ChannelRep::from_kraus(ops)
}

/// The hat-embedded block restriction `Φ̂_k = hat_embed(restrict_block(Φ))`
/// as a transfer matrix.
fn hat_transfer(
    phi: &ChannelRep,
    algebra: &AlgebraStructure,
    k: usize,
    tol: &Tol,
) -> Result<CMat> {
    let restricted = restrict_block(phi, algebra, k, tol)?;
    Ok(hat_embed(&restricted, algebra, k)?.transfer().clone())
}

/// Transfer matrix of the hat-embedded depolarizing channel `δ̂_{n_k}`.
fn hat_depolarizing_transfer(algebra: &AlgebraStructure, k: usize) -> Result<CMat> {
    let (_m, n) = algebra.blocks()[k];
    Ok(hat_embed(&depolarizing(n), algebra, k)?.transfer().clone())
}

/// Closed form of the commutant-averaged map
/// `L(Φ)(X) = Σ_i ∫ U X U† |⟨U, K_i⟩|² dμ(U)` (Haar over commutant
/// unitaries, weighted by the commutant inner product against the Kraus
/// operators), returned as a transfer matrix:
/// `L(Φ) = Φ + (D−1)·E_A + Σ_{n_k>1} (1/(n_k²−1))·(Φ̂_k − δ̂_{n_k})`.
pub fn l_closed_form(phi: &ChannelRep, algebra: &AlgebraStructure, tol: &Tol) -> Result<CMat> {
    ensure_fixes(phi, algebra, tol)?;
    let big_d = algebra.dim_commutant() as f64;
    let t_e = algebra.expectation_channel(tol)?.transfer().clone();
    let mut total = phi.transfer() + t_e.scale(big_d - 1.0);
    for (k, &(_m, n)) in algebra.blocks().iter().enumerate() {
        if n <= 1 {
            continue;
        }
        let coeff = 1.0 / ((n * n - 1) as f64);
        total += (hat_transfer(phi, algebra, k, tol)? - hat_depolarizing_transfer(algebra, k)?)
            .scale(coeff);
    }
    Ok(total)
}

/// Closed form of `L` applied to a single hat-embedded block restriction:
/// `L(Φ̂_k) = n_k²·E_A + (n_k²/(n_k²−1))·(Φ̂_k − δ̂_{n_k})` for `n_k > 1`,
/// and `L(Φ̂_k) = E_A` for `n_k = 1`.
pub fn l_hat_closed_form(
    phi: &ChannelRep,
    algebra: &AlgebraStructure,
    k: usize,
    tol: &Tol,
) -> Result<CMat> {
    ensure_fixes(phi, algebra, tol)?;
    if k >= algebra.r() {
        return Err(Error::Domain(format!(
            "block index {k} out of range (algebra has {} blocks)",
            algebra.r()
        )));
    }
    let t_e = algebra.expectation_channel(tol)?.transfer().clone();
    let (_m, n) = algebra.blocks()[k];
    if n == 1 {
        return Ok(t_e);
    }
    let n2 = (n * n) as f64;
    let diff = hat_transfer(phi, algebra, k, tol)? - hat_depolarizing_transfer(algebra, k)?;
    Ok(t_e.scale(n2) + diff.scale(n2 / (n2 - 1.0)))
}

/// Monte-Carlo estimator of `L`: sample commutant unitaries blockwise Haar
/// and average the conjugation transfer matrices weighted by
/// `Σ_i |⟨U, K_i⟩|²`. Unbiased for the closed form; the error decays as
/// `N^{−1/2}`.
pub fn l_monte_carlo<R: Rng>(
    kraus: &KrausSet,
    algebra: &AlgebraStructure,
    samples: usize,
    rng: &mut R,
    tol: &Tol,
) -> Result<CMat> {
    if samples == 0 {
        return Err(Error::Domain("sample count must be positive".into()));
    }
    if kraus.d() != algebra.d() {
        return Err(Error::Dimension {
            expected: algebra.d(),
            got: kraus.d(),
        });
    }
    let mut comp_list = Vec::with_capacity(kraus.len());
    for k in kraus.ops() {
        let (comps, residual) = algebra.commutant_components(k);
        if residual > tol.eq * (1.0 + fnorm(k)) * 10.0 {
            return Err(Error::BlockForm { residual });
        }
        comp_list.push(comps);
    }
    let d = algebra.d();
    let mut acc = CMat::zeros(d * d, d * d);
    for _ in 0..samples {
        let u_comps: Vec<CMat> = algebra
            .blocks()
            .iter()
            .map(|&(_m, n)| crate::channel_core::cmat::haar_unitary(n, rng))
            .collect();
        let u = algebra.commutant_element(&u_comps)?;
        let weight: f64 = comp_list
            .iter()
            .map(|kc| {
                algebra
                    .weighted_inner_product_of_components(&u_comps, kc)
                    .norm_sqr()
            })
            .sum();
        acc += u.kronecker(&u.conjugate()).scale(weight);
    }
    Ok(acc.scale(1.0 / samples as f64))
}

/// Result of the guaranteed-ball membership test for a channel fixing an
/// algebra.
#[derive(Debug)]
pub struct BallMembership {
    /// `J(E_A) + (1/p)·(J(Φ) − J(E_A)) ⪰ 0`, certifying `Φ` mixed unitary
    pub inside: bool,
    /// the algebra's certified mixing constant
    pub p: Ratio,
    /// smallest eigenvalue of the witness candidate's Choi matrix
    pub min_eig: f64,
    /// when inside: the unital channel `Ψ` fixing the algebra with
    /// `Φ = p·Ψ + (1−p)·E_A`
    pub witness: Option<ChannelRep>,
}

/// Test whether a channel lies in the certified ball around the conditional
/// expectation: `Φ` is mixed unitary whenever
/// `J(E_A) + (1/p)·(J(Φ) − J(E_A))` is positive semidefinite, since that
/// matrix is then the Choi matrix of a unital channel `Ψ` fixing the algebra
/// with `Φ = p·Ψ + (1−p)·E_A`.
pub fn is_in_guaranteed_ball(
    phi: &ChannelRep,
    algebra: &AlgebraStructure,
    tol: &Tol,
) -> Result<BallMembership> {
    ensure_fixes(phi, algebra, tol)?;
    let cert = mixing_constant(algebra);
    let p = cert.p_f64();
    let j_e = algebra.expectation_choi();
    let candidate = hermitize(&(j_e.mat() + (phi.choi().mat() - j_e.mat()).scale(1.0 / p)));
    let min_eig = min_eig_herm(&candidate)?;
    let inside = min_eig >= -tol.psd * (1.0 + fnorm(&candidate));
    let witness = if inside {
        let choi = ChoiMatrix::new(phi.d(), candidate)?;
        Some(ChannelRep::from_choi(choi, tol)?)
    } else {
        None
    };
    Ok(BallMembership {
        inside,
        p: cert.p,
        min_eig,
        witness,
    })
}

/// Weight of the sum-to-one row appended to the embedded Choi-fitting
/// system. It softly pins `Σ λ_i = 1` during the nonnegative fits without
/// distorting the Choi residual (which is recomputed exactly afterwards).
const SUM_ROW_WEIGHT: f64 = 100.0;

fn choi_atom_column(u: &CMat) -> nalgebra::DVector<f64> {
    let v = vec_row(u);
    let j = &v * v.adjoint();
    let mut col = embed_hermitian(&j);
    col = col.push(SUM_ROW_WEIGHT);
    col
}

/// Search for an explicit mixed-unitary decomposition of a unital channel
/// whose Kraus operators lie in the algebra's commutant, over unitary atoms
/// from that commutant.
///
/// Fully-corrective Frank–Wolfe on the Choi matrix: the dictionary starts
/// from the conditional-expectation atoms ([`condexp_as_mixed_unitary`]);
/// each round refits all weights by nonnegative least squares, then promotes
/// the residual's leading eigenvectors to new atoms by alternating
/// `v ← vec(nearest commutant unitary of unvec((R + ‖R‖·I) v))` and keeping
/// the candidate with the largest Rayleigh quotient against the residual.
///
/// Success requires the reconstructed Choi matrix within `tol_residual` of
/// the target; otherwise the best residual is reported as a no-certificate
/// error. Failure is inconclusive — it never disproves mixed unitarity.
///
/// [`condexp_as_mixed_unitary`]: crate::algebra::condexp_as_mixed_unitary
pub fn construct_mixed_unitary(
    target: &ChannelRep,
    algebra: &AlgebraStructure,
    tol_residual: f64,
    max_atoms: usize,
    tol: &Tol,
) -> Result<MixedUnitaryDecomposition> {
    if target.d() != algebra.d() {
        return Err(Error::Dimension {
            expected: algebra.d(),
            got: target.d(),
        });
    }
    if tol_residual <= 0.0 {
        return Err(Error::Domain("residual tolerance must be positive".into()));
    }
    if !target.is_trace_preserving(tol) {
        return Err(Error::NotTracePreserving {
            defect: target.tp_defect(),
        });
    }
    if !target.is_unital(tol) {
        return Err(Error::NotUnital {
            defect: target.unital_defect(),
        });
    }
    // Kraus in the commutant ⇒ a decomposition over commutant unitaries is
    // plausible
    kraus_block_components(target, algebra, tol)?;

    let d = algebra.d();
    let d2 = d * d;
    let embed_dim = d2 * d2 + 1;
    let j_target = target.choi().mat().clone();
    let mut b = embed_hermitian(&j_target);
    b = b.push(SUM_ROW_WEIGHT);

    let mut dictionary = AtomDictionary::new(embed_dim);
    for u in condexp_as_mixed_unitary_atoms(algebra) {
        let col = choi_atom_column(&u);
        dictionary.push(u, col)?;
    }

    // seed the dictionary with projections of the target's own leading Choi
    // eigenvectors: for a target at (or near) a single unitary conjugation
    // they recover the atom exactly, which the greedy residual search cannot
    // be relied on to do once a partial fit has tilted the residual
    {
        let (_vals, vecs) = eigh(&hermitize(&j_target))?;
        for s in 0..2.min(d2) {
            let seed: CVec = vecs.column(d2 - 1 - s).into_owned();
            if let Ok(u) = algebra.nearest_commutant_unitary(&unvec_row(&seed, d)) {
                let col = choi_atom_column(&u);
                dictionary.push(u, col)?;
            }
        }
    }

    let generate = |residual: &nalgebra::DVector<f64>| -> Result<Vec<(CMat, nalgebra::DVector<f64>)>> {
        let head = residual.rows(0, d2 * d2).into_owned();
        let r = hermitize(&unembed_hermitian(&head, d2));
        let (vals, vecs) = eigh(&r)?;
        let shift = vals
            .first()
            .copied()
            .unwrap_or(0.0)
            .abs()
            .max(vals.last().copied().unwrap_or(0.0).abs());
        let quadratic_form = |u: &CMat| -> f64 {
            let v = vec_row(u);
            (v.adjoint() * &r * &v)[(0, 0)].re
        };
        let seed_vecs: Vec<CVec> = (0..3.min(d2))
            .map(|s| vecs.column(d2 - 1 - s).into_owned())
            .collect();
        let mut best: Option<(f64, CMat)> = None;
        for seed in seed_vecs {
            // project the seed onto the commutant unitaries before the
            // power iteration touches it: an exact atom direction must
            // survive as a candidate even when the residual map would
            // pull it elsewhere
            let mut u = algebra.nearest_commutant_unitary(&unvec_row(&seed, d))?;
            let mut v = vec_row(&u);
            let score = quadratic_form(&u);
            if best.as_ref().is_none_or(|(bs, _)| score > *bs) {
                best = Some((score, u.clone()));
            }
            for _ in 0..30 {
                let y = &r * &v + v.scale(shift);
                u = algebra.nearest_commutant_unitary(&unvec_row(&y, d))?;
                v = vec_row(&u);
                let score = quadratic_form(&u);
                if best.as_ref().is_none_or(|(bs, _)| score > *bs) {
                    best = Some((score, u.clone()));
                }
            }
        }
        Ok(best
            .map(|(_score, u)| {
                let col = choi_atom_column(&u);
                vec![(u, col)]
            })
            .unwrap_or_default())
    };

    let outcome = frank_wolfe_fit(&b, dictionary, generate, tol_residual, max_atoms)?;

    // prune zero weights, renormalize if the soft constraint left slack, and
    // recompute the certified residual exactly
    let max_w = outcome
        .fit
        .weights
        .iter()
        .cloned()
        .fold(0.0f64, f64::max);
    let mut weights = Vec::new();
    let mut unitaries = Vec::new();
    for (w, u) in outcome
        .fit
        .weights
        .iter()
        .zip(outcome.dictionary.payloads())
    {
        if *w > 1e-12 * max_w.max(1e-300) {
            weights.push(*w);
            unitaries.push(u.clone());
        }
    }
    let atoms = outcome.dictionary.len();
    if weights.is_empty() {
        return Err(Error::NoCertificate {
            residual: outcome.fit.residual,
            atoms,
        });
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        for w in &mut weights {
            *w /= sum;
        }
    }
    let mut j = CMat::zeros(d2, d2);
    for (w, u) in weights.iter().zip(&unitaries) {
        let v = vec_row(u);
        j += (&v * v.adjoint()).scale(*w);
    }
    let residual = fnorm(&(j - &j_target));
    if residual > tol_residual {
        return Err(Error::NoCertificate { residual, atoms });
    }
    Ok(MixedUnitaryDecomposition {
        weights,
        unitaries,
        target_choi: target.choi().clone(),
        residual,
    })
}

/// The unitary atoms of [`crate::algebra::condexp_as_mixed_unitary`],
/// without re-deriving the weights.
fn condexp_as_mixed_unitary_atoms(algebra: &AlgebraStructure) -> Vec<CMat> {
    crate::algebra::condexp_as_mixed_unitary(algebra).unitaries
}
