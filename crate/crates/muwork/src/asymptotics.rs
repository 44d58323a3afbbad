//! Long-run behaviour of unital channels: transfer-spectrum reports,
//! peripheral-eigenvector structure, Cesàro averaging toward the fixed-point
//! expectation, and the smallest power certified mixed unitary.
//!
//! Eigenvalues are those of the `d²×d²` transfer matrix, sorted by descending
//! modulus (ties by angle). An eigenvalue is *peripheral* when its modulus is
//! within `tol_peripheral` of 1; the *period* is the smallest `m ≥ 1` with
//! `λ^m ≈ 1` for every peripheral `λ`; the *gap* is `1 − max{|λ|}` over the
//! non-peripheral eigenvalues (1 when that set is empty).

use crate::algebra::{fixed_point_algebra, AlgebraStructure};
use crate::channel_core::cmat::{
    eigh, eigvals, fnorm, ginibre, hermitize, identity, polar_unitary, unvec_row, vec_row, C64,
    CMat,
};
use crate::channel_core::ChannelRep;
use crate::error::{Error, Result};
use crate::mixing::{
    construct_mixed_unitary, ensure_fixes, is_in_guaranteed_ball, restrict_block,
    MixedUnitaryDecomposition,
};
use crate::tol::Tol;
use crate::Ratio;
use rand::Rng;

/// Spectrum of a channel's transfer matrix, split at the unit circle.
#[derive(Debug, Clone)]
pub struct SpectralReport {
    /// All `d²` transfer eigenvalues, descending modulus, ties by angle.
    pub eigenvalues: Vec<C64>,
    /// The eigenvalues with modulus ≥ `1 − tol_peripheral`.
    pub peripheral: Vec<C64>,
    /// Smallest `m ≥ 1` with `λ^m ≈ 1` for every peripheral `λ`.
    pub period: usize,
    /// `1 − max{|λ| : λ not peripheral}`; `1` if everything is peripheral.
    pub gap: f64,
}

fn require_unital_tp(phi: &ChannelRep, tol: &Tol) -> Result<()> {
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
    Ok(())
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    (a / gcd(a, b)).saturating_mul(b)
}

/// Best rational approximation `p/q` to `x ∈ [0, 1)` with `q ≤ max_den`,
/// by truncating the continued-fraction expansion. Convergents are
/// automatically in lowest terms.
fn rationalize(x: f64, max_den: u64) -> (u64, u64) {
    let (mut h_prev2, mut h_prev) = (0u64, 1u64);
    let (mut k_prev2, mut k_prev) = (1u64, 0u64);
    let (mut best_p, mut best_q) = (0u64, 1u64);
    let mut t = x;
    for _ in 0..64 {
        let a = t.floor();
        if !(0.0..=u64::MAX as f64).contains(&a) {
            break;
        }
        let ai = a as u64;
        let h = ai.saturating_mul(h_prev).saturating_add(h_prev2);
        let k = ai.saturating_mul(k_prev).saturating_add(k_prev2);
        if k > max_den {
            break;
        }
        best_p = h;
        best_q = k.max(1);
        let frac = t - a;
        if frac.abs() < 1e-12 {
            break;
        }
        t = 1.0 / frac;
        h_prev2 = h_prev;
        h_prev = h;
        k_prev2 = k_prev;
        k_prev = k;
    }
    (best_p, best_q)
}

fn divisors(n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut i = 1;
    while i * i <= n {
        if n.is_multiple_of(i) {
            out.push(i);
            if i != n / i {
                out.push(n / i);
            }
        }
        i += 1;
    }
    out.sort_unstable();
    out
}

/// Smallest `m` with every normalized peripheral eigenvalue an `m`-th root
/// of unity: continued-fraction rationalization of the phases proposes a
/// candidate (the lcm of the denominators), its divisors are tested smallest
/// first, and a linear scan backstops rationalization failures.
fn peripheral_period(peripheral: &[C64], tol_peripheral: f64) -> Result<usize> {
    const SCAN_CAP: usize = 4096;
    if peripheral.is_empty() {
        return Ok(1);
    }
    let phases: Vec<C64> = peripheral.iter().map(|l| l / l.norm()).collect();
    let thresh = tol_peripheral.max(1e-9) * 10.0;
    let closes = |m: usize| {
        phases
            .iter()
            .all(|l| (l.powu(m as u32) - C64::new(1.0, 0.0)).norm() <= thresh)
    };
    let mut candidate: u64 = 1;
    for l in &phases {
        let t = (l.arg() / std::f64::consts::TAU).rem_euclid(1.0);
        let (_p, q) = rationalize(t, 1024);
        candidate = lcm(candidate, q).min(1 << 20);
    }
    for m in divisors(candidate as usize) {
        if m <= u32::MAX as usize && closes(m) {
            return Ok(m);
        }
    }
    (1..=SCAN_CAP).find(|&m| closes(m)).ok_or_else(|| {
        Error::Inconsistency(format!(
            "peripheral phases do not close at any period ≤ {SCAN_CAP}"
        ))
    })
}

/// Transfer spectrum of a unital trace-preserving channel, with the
/// peripheral part, its period, and the spectral gap.
pub fn spectral_report(phi: &ChannelRep, tol_peripheral: f64, tol: &Tol) -> Result<SpectralReport> {
    require_unital_tp(phi, tol)?;
    let mut eigenvalues = eigvals(phi.transfer())?;
    eigenvalues.sort_by(|a, b| {
        b.norm()
            .total_cmp(&a.norm())
            .then(a.arg().total_cmp(&b.arg()))
    });
    let peripheral: Vec<C64> = eigenvalues
        .iter()
        .copied()
        .filter(|l| l.norm() >= 1.0 - tol_peripheral)
        .collect();
    let period = peripheral_period(&peripheral, tol_peripheral)?;
    let gap = 1.0
        - eigenvalues
            .iter()
            .map(|l| l.norm())
            .filter(|n| *n < 1.0 - tol_peripheral)
            .fold(0.0, f64::max);
    Ok(SpectralReport {
        eigenvalues,
        peripheral,
        period,
        gap,
    })
}

/// A unital channel is irreducible exactly when its fixed-point algebra is
/// the scalars.
pub fn is_irreducible<R: Rng>(phi: &ChannelRep, rng: &mut R, tol: &Tol) -> Result<bool> {
    let alg = fixed_point_algebra(phi, rng, tol)?;
    Ok(alg.dim_algebra() == 1)
}

/// Irreducible with trivial peripheral spectrum `{1}`.
pub fn is_primitive<R: Rng>(phi: &ChannelRep, rng: &mut R, tol: &Tol) -> Result<bool> {
    if !is_irreducible(phi, rng, tol)? {
        return Ok(false);
    }
    let report = spectral_report(phi, tol.peripheral, tol)?;
    Ok(report.period == 1)
}

/// Verify the commutation structure of a peripheral eigenpair: each Kraus
/// operator satisfies `K_i X = λ X K_i`, and consequently
/// `Φ(XA) = λ X Φ(A)` (spot-checked on random `A`). Returns whether all
/// checks pass; a genuine eigenpair of a unital channel at `|λ| = 1` always
/// does.
pub fn peripheral_eigenvector_check<R: Rng>(
    phi: &ChannelRep,
    x: &CMat,
    lambda: C64,
    rng: &mut R,
    tol: &Tol,
) -> Result<bool> {
    require_unital_tp(phi, tol)?;
    let d = phi.d();
    if x.nrows() != d || x.ncols() != d {
        return Err(Error::Dimension {
            expected: d,
            got: x.nrows(),
        });
    }
    let xn = fnorm(x);
    if xn <= tol.eq {
        return Err(Error::Domain("eigenvector must be nonzero".into()));
    }
    if (lambda.norm() - 1.0).abs() > tol.eq * 10.0 {
        return Err(Error::Precondition(format!(
            "eigenvalue must lie on the unit circle, |λ| = {}",
            lambda.norm()
        )));
    }
    let defect = fnorm(&(phi.apply(x) - x * lambda));
    if defect > tol.eq * (1.0 + xn) * 10.0 {
        return Err(Error::Precondition(format!(
            "(X, λ) is not an eigenpair: defect {defect:.3e}"
        )));
    }

    let slack = tol.eq * (1.0 + xn) * 10.0;
    for k in phi.kraus().ops() {
        if fnorm(&(k * x - x * k * lambda)) > slack {
            return Ok(false);
        }
    }
    for _ in 0..4 {
        let a = ginibre(d, d, rng);
        let lhs = phi.apply(&(x * &a));
        let rhs = x * phi.apply(&a) * lambda;
        if fnorm(&(lhs - rhs)) > tol.eq * (1.0 + xn * fnorm(&a)) * 10.0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// How a peripheral eigenvector sits relative to the fixed-point algebra's
/// block grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeripheralShape {
    /// Every nonzero subblock lies on the diagonal of the grid.
    BlockDiagonal,
    /// Some off-diagonal subblock is a scaled unitary, tying two reduced
    /// channels together by conjugation.
    UnitaryEquivalence,
}

/// A nonzero subblock of the eigenvector: `X_{rc} X_{rc}† = scale · I`.
#[derive(Debug, Clone, Copy)]
pub struct SubblockEntry {
    pub row: usize,
    pub col: usize,
    pub scale: f64,
}

/// Unitary `U` with `transfer(Φ_row) = (U ⊗ Ū) · transfer(Φ_col) · (U ⊗ Ū)†`,
/// where `Φ_j` is the channel reduced to the `j`-th central block.
#[derive(Debug, Clone)]
pub struct EquivalenceCertificate {
    /// Subblock grid coordinates of the witnessing block.
    pub row: usize,
    pub col: usize,
    /// Central blocks the grid coordinates belong to.
    pub row_central: usize,
    pub col_central: usize,
    pub unitary: CMat,
    /// Frobenius gap of the verified transfer identity.
    pub transfer_gap: f64,
}

/// Block-grid report for a peripheral eigenvector.
#[derive(Debug, Clone)]
pub struct PeripheralAnalysis {
    pub lambda: C64,
    /// Subblock sizes: block `k` of the algebra contributes its size `n_k`
    /// once per multiplicity slot, in frame order.
    pub subblock_dims: Vec<usize>,
    pub entries: Vec<SubblockEntry>,
    pub shape: PeripheralShape,
    /// Present when some off-diagonal subblock is nonzero.
    pub certificate: Option<EquivalenceCertificate>,
}

/// Decompose a peripheral eigenvector along the fixed-point algebra's frame.
///
/// The algebra splits the space into subblocks — one slice of size `n_k` per
/// multiplicity slot of each central block — and the Kraus operators act
/// identically on the slots of a block. Every nonzero subblock of a
/// peripheral eigenvector is then a scaled unitary; an off-diagonal one
/// certifies that the two reduced channels are unitarily equivalent, which
/// is verified here on their transfer matrices.
pub fn analyze_peripheral_eigenvector(
    phi: &ChannelRep,
    algebra: &AlgebraStructure,
    x: &CMat,
    lambda: C64,
    tol: &Tol,
) -> Result<PeripheralAnalysis> {
    ensure_fixes(phi, algebra, tol)?;
    let d = phi.d();
    if x.nrows() != d || x.ncols() != d {
        return Err(Error::Dimension {
            expected: d,
            got: x.nrows(),
        });
    }
    let xn = fnorm(x);
    if xn <= tol.eq {
        return Err(Error::Domain("eigenvector must be nonzero".into()));
    }
    if (lambda.norm() - 1.0).abs() > tol.eq * 10.0 {
        return Err(Error::Precondition(format!(
            "eigenvalue must lie on the unit circle, |λ| = {}",
            lambda.norm()
        )));
    }
    let defect = fnorm(&(phi.apply(x) - x * lambda));
    if defect > tol.eq * (1.0 + xn) * 10.0 {
        return Err(Error::Precondition(format!(
            "(X, λ) is not an eigenpair: defect {defect:.3e}"
        )));
    }

    // subblock layout: (offset, size, owning central block)
    let offsets = algebra.block_offsets();
    let mut layout: Vec<(usize, usize, usize)> = Vec::new();
    for (k, &(m, n)) in algebra.blocks().iter().enumerate() {
        for slot in 0..m {
            layout.push((offsets[k] + slot * n, n, k));
        }
    }
    let b = algebra.frame().adjoint() * x * algebra.frame();

    let mut entries = Vec::new();
    let zero_cut = tol.eq * (1.0 + xn) * 10.0;
    for (i, &(oi, ni, _)) in layout.iter().enumerate() {
        for (j, &(oj, nj, _)) in layout.iter().enumerate() {
            let blk = b.view((oi, oj), (ni, nj)).into_owned();
            let nrm = fnorm(&blk);
            if nrm <= zero_cut {
                continue;
            }
            if ni != nj {
                return Err(Error::Inconsistency(format!(
                    "eigenvector joins blocks of different sizes ({ni} vs {nj})"
                )));
            }
            let scale = nrm * nrm / ni as f64;
            let dev = fnorm(&(&blk * blk.adjoint() - identity(ni) * C64::new(scale, 0.0)));
            if dev > tol.eq * (1.0 + scale * ni as f64) * 100.0 {
                return Err(Error::Inconsistency(format!(
                    "subblock ({i}, {j}) of a peripheral eigenvector is not a scaled \
                     unitary (deviation {dev:.3e})"
                )));
            }
            entries.push(SubblockEntry {
                row: i,
                col: j,
                scale,
            });
        }
    }

    let off = entries.iter().find(|e| e.row != e.col).copied();
    let shape = if off.is_some() {
        PeripheralShape::UnitaryEquivalence
    } else {
        PeripheralShape::BlockDiagonal
    };
    let certificate = match off {
        None => None,
        Some(e) => {
            let (oi, ni, ci) = layout[e.row];
            let (oj, _nj, cj) = layout[e.col];
            let blk = b.view((oi, oj), (ni, ni)).into_owned();
            let u = &blk * C64::new(1.0 / e.scale.sqrt(), 0.0);
            let phi_row = restrict_block(phi, algebra, ci, tol)?;
            let phi_col = restrict_block(phi, algebra, cj, tol)?;
            let conj = u.kronecker(&u.conjugate());
            let rhs = &conj * phi_col.transfer() * conj.adjoint();
            let transfer_gap = fnorm(&(phi_row.transfer() - rhs));
            if transfer_gap > tol.eq * (1.0 + fnorm(phi_row.transfer())) * 100.0 {
                return Err(Error::Inconsistency(format!(
                    "off-diagonal eigenvector block failed to certify unitary \
                     equivalence of the reduced channels (gap {transfer_gap:.3e})"
                )));
            }
            Some(EquivalenceCertificate {
                row: e.row,
                col: e.col,
                row_central: ci,
                col_central: cj,
                unitary: u,
                transfer_gap,
            })
        }
    };

    Ok(PeripheralAnalysis {
        lambda,
        subblock_dims: layout.iter().map(|&(_, n, _)| n).collect(),
        entries,
        shape,
        certificate,
    })
}

/// Cesàro mean `(1/N) Σ_{n=1..N} Φ^n` as a channel. For a unital channel it
/// converges to the conditional expectation onto the fixed-point algebra at
/// rate governed by the spectral gap; peripheral rotations average out.
pub fn cesaro_fixed_expectation(phi: &ChannelRep, n: usize, tol: &Tol) -> Result<ChannelRep> {
    require_unital_tp(phi, tol)?;
    if n == 0 {
        return Err(Error::Domain("Cesàro average needs at least one term".into()));
    }
    let t = phi.transfer();
    let mut acc = CMat::zeros(t.nrows(), t.ncols());
    let mut pwr = identity(t.nrows());
    for _ in 0..n {
        pwr = t * pwr;
        acc += &pwr;
    }
    ChannelRep::from_transfer(acc * C64::new(1.0 / n as f64, 0.0), tol)
}

/// One step of the power search.
#[derive(Debug, Clone)]
pub struct PowerAttempt {
    pub k: usize,
    /// Block structure of `Fix(Φ^k)` (it can grow with `k`).
    pub fixed_blocks: Vec<(usize, usize)>,
    /// Mixing constant of that algebra.
    pub p: Ratio,
    /// Whether `Φ^k` passed the guaranteed-ball test.
    pub inside_ball: bool,
    /// Smallest eigenvalue of the ball candidate's Choi matrix.
    pub min_eig: f64,
    /// `Φ^k` was recognized as a single unitary conjugation.
    pub unitary_shortcut: bool,
    /// Residual of the decomposition attempt, when one ran.
    pub construction_residual: Option<f64>,
}

/// Outcome of the smallest-power search. Failure to certify within `k_max`
/// is inconclusive — it never disproves mixed unitarity.
#[derive(Debug, Clone)]
pub enum PowerSearch {
    Certified {
        k: usize,
        decomposition: MixedUnitaryDecomposition,
        attempts: Vec<PowerAttempt>,
    },
    Inconclusive {
        attempts: Vec<PowerAttempt>,
    },
}

impl PowerSearch {
    pub fn certified_k(&self) -> Option<usize> {
        match self {
            PowerSearch::Certified { k, .. } => Some(*k),
            PowerSearch::Inconclusive { .. } => None,
        }
    }

    pub fn attempts(&self) -> &[PowerAttempt] {
        match self {
            PowerSearch::Certified { attempts, .. } => attempts,
            PowerSearch::Inconclusive { attempts } => attempts,
        }
    }
}

/// Recognize a channel that is already a single unitary conjugation: its
/// Choi matrix is rank one. Returns the one-atom decomposition when the
/// reconstruction meets `tol_residual`.
fn unitary_atom_shortcut(
    phi: &ChannelRep,
    tol_residual: f64,
    tol: &Tol,
) -> Result<Option<MixedUnitaryDecomposition>> {
    let j = phi.choi().mat();
    let d2 = j.nrows();
    let (vals, vecs) = eigh(&hermitize(j))?;
    let top = vals[d2 - 1];
    if top <= 0.0 {
        return Ok(None);
    }
    if d2 >= 2 && vals[d2 - 2].abs() > top * tol.rank.max(1e-12) * 10.0 {
        return Ok(None);
    }
    let d = phi.d();
    let raw = unvec_row(&(vecs.column(d2 - 1).into_owned() * C64::new(top.sqrt(), 0.0)), d);
    let u = match polar_unitary(&raw) {
        Ok(u) => u,
        Err(_) => return Ok(None),
    };
    let v = vec_row(&u);
    let residual = fnorm(&(&v * v.adjoint() - j));
    if residual > tol_residual {
        return Ok(None);
    }
    Ok(Some(MixedUnitaryDecomposition {
        weights: vec![1.0],
        unitaries: vec![u],
        target_choi: phi.choi().clone(),
        residual,
    }))
}

/// Search for the smallest `k ≤ k_max` such that `Φ^k` carries a certified
/// mixed-unitary decomposition.
///
/// Per power: recompute the fixed-point algebra (it can grow with `k`), run
/// the guaranteed-ball test against it, and on success construct an explicit
/// decomposition of `Φ^k`. A channel whose Choi matrix is rank one is
/// certified directly as a single unitary conjugation. A failed construction
/// at some `k` is recorded and the search continues — the result is
/// inconclusive rather than negative when nothing certifies by `k_max`.
pub fn find_mixed_unitary_power<R: Rng>(
    phi: &ChannelRep,
    k_max: usize,
    tol_residual: f64,
    max_atoms: usize,
    rng: &mut R,
    tol: &Tol,
) -> Result<PowerSearch> {
    require_unital_tp(phi, tol)?;
    if k_max == 0 {
        return Err(Error::Domain("power search needs k_max ≥ 1".into()));
    }
    let mut attempts = Vec::new();
    for k in 1..=k_max {
        let phik = phi.power(k)?;
        let alg = fixed_point_algebra(&phik, rng, tol)?;
        let ball = is_in_guaranteed_ball(&phik, &alg, tol)?;
        let mut attempt = PowerAttempt {
            k,
            fixed_blocks: alg.blocks().to_vec(),
            p: ball.p,
            inside_ball: ball.inside,
            min_eig: ball.min_eig,
            unitary_shortcut: false,
            construction_residual: None,
        };
        if let Some(mu) = unitary_atom_shortcut(&phik, tol_residual, tol)? {
            attempt.unitary_shortcut = true;
            attempt.construction_residual = Some(mu.residual);
            attempts.push(attempt);
            return Ok(PowerSearch::Certified {
                k,
                decomposition: mu,
                attempts,
            });
        }
        if ball.inside {
            match construct_mixed_unitary(&phik, &alg, tol_residual, max_atoms, tol) {
                Ok(mu) => {
                    attempt.construction_residual = Some(mu.residual);
                    attempts.push(attempt);
                    return Ok(PowerSearch::Certified {
                        k,
                        decomposition: mu,
                        attempts,
                    });
                }
                Err(Error::NoCertificate { residual, .. }) => {
                    attempt.construction_residual = Some(residual);
                }
                Err(e) => return Err(e),
            }
        }
        attempts.push(attempt);
    }
    Ok(PowerSearch::Inconclusive { attempts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::random_fixing_channel;
    use crate::channel_core::cmat::{block_diag, haar_unitary, matrix_unit};
    use crate::channel_core::{
        depolarizing, identity_channel, map_to_diagonal, random_unital_channel, unitary_channel,
        werner_holevo3,
    };
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn diag_unitary(phases: &[C64]) -> CMat {
        CMat::from_fn(phases.len(), phases.len(), |i, j| {
            if i == j {
                phases[i]
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    fn count_close(eigs: &[C64], c: C64, tol: f64) -> usize {
        eigs.iter().filter(|l| (*l - c).norm() <= tol).count()
    }

    fn assert_multiset_close(a: &[C64], b: &[C64], tol: f64) {
        assert_eq!(a.len(), b.len());
        let mut used = vec![false; b.len()];
        for x in a {
            let hit = b
                .iter()
                .enumerate()
                .find(|(j, y)| !used[*j] && (*x - **y).norm() <= tol);
            match hit {
                Some((j, _)) => used[j] = true,
                None => panic!("unmatched eigenvalue {x}"),
            }
        }
    }

    #[test]
    fn spectral_report_of_depolarizing() {
        let t = Tol::default();
        let rep = spectral_report(&depolarizing(3), t.peripheral, &t).unwrap();
        assert_eq!(rep.eigenvalues.len(), 9);
        assert_eq!(count_close(&rep.eigenvalues, C64::new(1.0, 0.0), 1e-9), 1);
        assert_eq!(count_close(&rep.eigenvalues, C64::new(0.0, 0.0), 1e-9), 8);
        assert_eq!(rep.peripheral.len(), 1);
        assert_eq!(rep.period, 1);
        assert!((rep.gap - 1.0).abs() < 1e-9);
    }

    #[test]
    fn spectral_report_of_werner_holevo() {
        // X ↦ ½(Tr(X)·I − Xᵀ) restricted to traceless matrices is −½ on the
        // symmetric part (dim 5) and +½ on the antisymmetric part (dim 3);
        // the identity is fixed.
        let t = Tol::default();
        let rep = spectral_report(&werner_holevo3(), t.peripheral, &t).unwrap();
        assert_eq!(count_close(&rep.eigenvalues, C64::new(1.0, 0.0), 1e-9), 1);
        assert_eq!(count_close(&rep.eigenvalues, C64::new(0.5, 0.0), 1e-9), 3);
        assert_eq!(count_close(&rep.eigenvalues, C64::new(-0.5, 0.0), 1e-9), 5);
        assert_eq!(rep.peripheral.len(), 1);
        assert_eq!(rep.period, 1);
        assert!((rep.gap - 0.5).abs() < 1e-9);
    }

    #[test]
    fn spectral_report_of_phase_unitaries() {
        let t = Tol::default();
        // transfer eigenvalues of ad_U are u_j·conj(u_k)
        let u = diag_unitary(&[C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
        let phi = unitary_channel(&u, &t).unwrap();
        let rep = spectral_report(&phi, t.peripheral, &t).unwrap();
        let want = [
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 1.0),
            C64::new(0.0, -1.0),
        ];
        assert_multiset_close(&rep.eigenvalues, &want, 1e-9);
        assert_eq!(rep.peripheral.len(), 4);
        assert_eq!(rep.period, 4);
        assert!((rep.gap - 1.0).abs() < 1e-12);

        // a seventh root of unity in lowest terms 3/7 has order 7
        let w = C64::from_polar(1.0, std::f64::consts::TAU * 3.0 / 7.0);
        let u7 = diag_unitary(&[C64::new(1.0, 0.0), w]);
        let rep7 = spectral_report(&unitary_channel(&u7, &t).unwrap(), t.peripheral, &t).unwrap();
        assert_eq!(rep7.period, 7);
    }

    #[test]
    fn spectral_mapping_under_powers() {
        let t = Tol::default();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for phi in [
            werner_holevo3(),
            random_unital_channel(2, 3, &mut rng).unwrap(),
        ] {
            let rep1 = spectral_report(&phi, t.peripheral, &t).unwrap();
            let rep2 = spectral_report(&phi.power(2).unwrap(), t.peripheral, &t).unwrap();
            let squares: Vec<C64> = rep1.eigenvalues.iter().map(|l| l * l).collect();
            assert_multiset_close(&rep2.eigenvalues, &squares, 1e-8);
        }
    }

    #[test]
    fn irreducibility_and_primitivity() {
        let t = Tol::default();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        assert!(is_irreducible(&werner_holevo3(), &mut rng, &t).unwrap());
        assert!(is_primitive(&werner_holevo3(), &mut rng, &t).unwrap());
        assert!(is_primitive(&depolarizing(4), &mut rng, &t).unwrap());

        let u = diag_unitary(&[C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]);
        let phi = unitary_channel(&u, &t).unwrap();
        assert!(!is_irreducible(&phi, &mut rng, &t).unwrap());
        assert!(!is_primitive(&phi, &mut rng, &t).unwrap());

        assert!(!is_irreducible(&identity_channel(2), &mut rng, &t).unwrap());
    }

    #[test]
    fn classical_cycle_is_irreducible_but_not_primitive() {
        // population swap: Kraus {E_10, E_01} — the embedded two-cycle.
        // Fixed algebra is trivial, peripheral spectrum {1, −1}, period 2,
        // and the square is exactly the map to the diagonal.
        let t = Tol::default();
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let phi = ChannelRep::from_kraus(vec![matrix_unit(2, 1, 0), matrix_unit(2, 0, 1)]).unwrap();
        assert!(is_irreducible(&phi, &mut rng, &t).unwrap());
        assert!(!is_primitive(&phi, &mut rng, &t).unwrap());
        let rep = spectral_report(&phi, t.peripheral, &t).unwrap();
        assert_eq!(rep.period, 2);
        assert_eq!(rep.peripheral.len(), 2);

        let squared = spectral_report(&phi.power(2).unwrap(), t.peripheral, &t).unwrap();
        assert_eq!(squared.period, 1);
        for l in &squared.peripheral {
            assert!((l - C64::new(1.0, 0.0)).norm() <= 1e-9);
        }
        assert!(phi.power(2).unwrap().approx_eq(&map_to_diagonal(2), &t));
    }

    #[test]
    fn peripheral_check_accepts_genuine_pairs() {
        let t = Tol::default();
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        // λ = 1 with a fixed element of a block algebra
        let alg = AlgebraStructure::from_blocks(&[(1, 2), (1, 1)], haar_unitary(3, &mut rng))
            .unwrap();
        let phi = random_fixing_channel(&alg, 3, &mut rng).unwrap();
        let offs = alg.block_offsets();
        let mut p0 = CMat::zeros(3, 3);
        for i in offs[0]..offs[1] {
            p0[(i, i)] = C64::new(1.0, 0.0);
        }
        let x = alg.frame() * p0 * alg.frame().adjoint();
        assert!(
            peripheral_eigenvector_check(&phi, &x, C64::new(1.0, 0.0), &mut rng, &t).unwrap()
        );

        // λ = −1 for conjugation by diag(1, −1)
        let u = diag_unitary(&[C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]);
        let phi_u = unitary_channel(&u, &t).unwrap();
        let e01 = matrix_unit(2, 0, 1);
        assert!(
            peripheral_eigenvector_check(&phi_u, &e01, C64::new(-1.0, 0.0), &mut rng, &t)
                .unwrap()
        );
    }

    #[test]
    fn peripheral_check_rejects_non_eigenpairs() {
        let t = Tol::default();
        let mut rng = ChaCha12Rng::seed_from_u64(29);
        let u = diag_unitary(&[C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]);
        let phi = unitary_channel(&u, &t).unwrap();
        let x = matrix_unit(2, 0, 1) + identity(2) * C64::new(0.1, 0.0);
        let err = peripheral_eigenvector_check(&phi, &x, C64::new(-1.0, 0.0), &mut rng, &t)
            .unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));

        let err = peripheral_eigenvector_check(
            &phi,
            &matrix_unit(2, 0, 1),
            C64::new(-0.5, 0.0),
            &mut rng,
            &t,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn analyze_central_projection_is_block_diagonal() {
        let t = Tol::default();
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let alg = AlgebraStructure::from_blocks(&[(1, 2), (1, 1)], haar_unitary(3, &mut rng))
            .unwrap();
        let phi = random_fixing_channel(&alg, 3, &mut rng).unwrap();
        let offs = alg.block_offsets();
        let mut p0 = CMat::zeros(3, 3);
        for i in offs[0]..offs[1] {
            p0[(i, i)] = C64::new(1.0, 0.0);
        }
        let x = alg.frame() * p0 * alg.frame().adjoint();
        let report =
            analyze_peripheral_eigenvector(&phi, &alg, &x, C64::new(1.0, 0.0), &t).unwrap();
        assert_eq!(report.shape, PeripheralShape::BlockDiagonal);
        assert_eq!(report.subblock_dims, vec![2, 1]);
        assert_eq!(report.entries.len(), 1);
        assert_eq!((report.entries[0].row, report.entries[0].col), (0, 0));
        assert!((report.entries[0].scale - 1.0).abs() < 1e-9);
        assert!(report.certificate.is_none());
    }

    #[test]
    fn analyze_certifies_scalar_blocks_off_diagonal() {
        let t = Tol::default();
        let u = diag_unitary(&[C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]);
        let phi = unitary_channel(&u, &t).unwrap();
        let alg = AlgebraStructure::from_blocks(&[(1, 1), (1, 1)], identity(2)).unwrap();
        let x = matrix_unit(2, 0, 1);
        let report =
            analyze_peripheral_eigenvector(&phi, &alg, &x, C64::new(-1.0, 0.0), &t).unwrap();
        assert_eq!(report.shape, PeripheralShape::UnitaryEquivalence);
        assert_eq!(report.entries.len(), 1);
        let cert = report.certificate.unwrap();
        assert_eq!((cert.row, cert.col), (0, 1));
        assert_eq!((cert.row_central, cert.col_central), (0, 1));
        assert_eq!(cert.unitary.nrows(), 1);
        assert!((cert.unitary[(0, 0)].norm() - 1.0).abs() < 1e-12);
        assert!(cert.transfer_gap <= 1e-12);
    }

    #[test]
    fn analyze_certifies_conjugated_summands() {
        // Φ = Ψ ⊕ (ad_{U†} ∘ Ψ ∘ ad_U) with a phase twist λ on the second
        // summand's Kraus operators: X = [[0, U], [0, 0]] is then a
        // peripheral eigenvector at λ, strictly off-central, and the
        // certificate must recover the conjugating unitary.
        let t = Tol::default();
        let mut rng = ChaCha12Rng::seed_from_u64(37);
        let psi = random_unital_channel(2, 3, &mut rng).unwrap();
        let u = haar_unitary(2, &mut rng);
        let lam = C64::new(0.0, 1.0);
        let kraus: Vec<CMat> = psi
            .kraus()
            .ops()
            .iter()
            .map(|k| block_diag(&[k.clone(), u.adjoint() * k * &u * lam.conj()]))
            .collect();
        let phi = ChannelRep::from_kraus(kraus).unwrap();
        let alg = fixed_point_algebra(&phi, &mut rng, &t).unwrap();
        assert_eq!(alg.blocks(), &[(1, 2), (1, 2)]);

        let mut x = CMat::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                x[(i, 2 + j)] = u[(i, j)];
            }
        }
        assert!(fnorm(&(phi.apply(&x) - &x * lam)) < 1e-12);

        let report = analyze_peripheral_eigenvector(&phi, &alg, &x, lam, &t).unwrap();
        assert_eq!(report.shape, PeripheralShape::UnitaryEquivalence);
        assert_eq!(report.entries.len(), 1);
        assert!((report.entries[0].scale - 1.0).abs() < 1e-9);
        let cert = report.certificate.unwrap();
        assert_ne!(cert.row_central, cert.col_central);
        assert!(cert.transfer_gap <= 1e-8);
    }

    #[test]
    fn cesaro_of_depolarizing_is_exact() {
        let t = Tol::default();
        let phi = depolarizing(3);
        for n in [1, 7] {
            let avg = cesaro_fixed_expectation(&phi, n, &t).unwrap();
            assert!(avg.approx_eq(&phi, &t));
        }
    }

    #[test]
    fn cesaro_approaches_the_fixed_expectation() {
        // gap ½ ⇒ Cesàro error O(1/N): ‖mean − δ₃‖ ≤ (1/N)·Σ 2⁻ⁿ·(dim terms)
        let t = Tol::default();
        let w = werner_holevo3();
        let mut last = f64::INFINITY;
        for n in [50, 100, 200, 400] {
            let avg = cesaro_fixed_expectation(&w, n, &t).unwrap();
            let err = fnorm(&(avg.transfer() - depolarizing(3).transfer()));
            assert!(err < last, "Cesàro error must shrink with N");
            last = err;
        }
        assert!(last <= 2e-2 / 2.0, "error at N = 400 is {last:.3e}");
    }

    #[test]
    fn cesaro_averages_out_an_alternating_unitary() {
        // ad_diag(1,−1) squares to the identity; an even-length mean is
        // exactly ½(id + ad) = the map to the diagonal.
        let t = Tol::default();
        let u = diag_unitary(&[C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]);
        let phi = unitary_channel(&u, &t).unwrap();
        let avg = cesaro_fixed_expectation(&phi, 200, &t).unwrap();
        assert!(fnorm(&(avg.transfer() - map_to_diagonal(2).transfer())) <= 1e-12);
        let err = cesaro_fixed_expectation(&phi, 0, &t).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn power_search_certifies_werner_holevo_at_four() {
        // the candidates J(δ) + 8·(J(Wᵏ) − J(δ)) have smallest eigenvalues
        // −7/3, −1/3, −1/3 for k = 1, 2, 3 and only k = 4 is PSD
        let t = Tol::default();
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        let search =
            find_mixed_unitary_power(&werner_holevo3(), 6, 1e-9, 48, &mut rng, &t).unwrap();
        assert_eq!(search.certified_k(), Some(4));
        let attempts = search.attempts();
        assert_eq!(attempts.len(), 4);
        assert!((attempts[0].min_eig + 7.0 / 3.0).abs() < 1e-9);
        assert!((attempts[1].min_eig + 1.0 / 3.0).abs() < 1e-9);
        assert!((attempts[2].min_eig + 1.0 / 3.0).abs() < 1e-9);
        assert!(!attempts[0].inside_ball && !attempts[1].inside_ball && !attempts[2].inside_ball);
        assert!(attempts[3].inside_ball);
        assert_eq!(attempts[3].fixed_blocks, vec![(1, 3)]);
        if let PowerSearch::Certified { decomposition, .. } = &search {
            assert!(decomposition.residual <= 1e-9);
            let alg = AlgebraStructure::from_blocks(&[(1, 3)], identity(3)).unwrap();
            decomposition.validate(Some(&alg), &t).unwrap();
        } else {
            unreachable!();
        }
    }

    #[test]
    fn power_search_shortcuts_unitary_conjugations() {
        let t = Tol::default();
        let mut rng = ChaCha12Rng::seed_from_u64(43);
        let u = diag_unitary(&[C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]);
        let phi = unitary_channel(&u, &t).unwrap();
        let search = find_mixed_unitary_power(&phi, 3, 1e-9, 16, &mut rng, &t).unwrap();
        assert_eq!(search.certified_k(), Some(1));
        assert!(search.attempts()[0].unitary_shortcut);
        // outside the ball yet certified: a bare unitary needs no mixing room
        assert!(!search.attempts()[0].inside_ball);

        let search = find_mixed_unitary_power(&depolarizing(3), 3, 1e-9, 16, &mut rng, &t)
            .unwrap();
        assert_eq!(search.certified_k(), Some(1));
        assert!(!search.attempts()[0].unitary_shortcut);
    }

    #[test]
    fn power_search_reports_inconclusive_within_budget() {
        let t = Tol::default();
        let mut rng = ChaCha12Rng::seed_from_u64(47);
        let search =
            find_mixed_unitary_power(&werner_holevo3(), 3, 1e-9, 48, &mut rng, &t).unwrap();
        assert!(search.certified_k().is_none());
        assert_eq!(search.attempts().len(), 3);
        assert!(search.attempts().iter().all(|a| !a.inside_ball));
    }

    #[test]
    fn ball_certificates_persist_beyond_the_first_power() {
        // once Wᵏ enters the guaranteed ball it stays: check k = 4, 5, 6 and
        // construct an explicit decomposition at k = 5
        let t = Tol::default();
        let w = werner_holevo3();
        let alg = AlgebraStructure::from_blocks(&[(1, 3)], identity(3)).unwrap();
        for k in 4..=6 {
            let ball = is_in_guaranteed_ball(&w.power(k).unwrap(), &alg, &t).unwrap();
            assert!(ball.inside, "k = {k} should stay inside the ball");
        }
        let mu = construct_mixed_unitary(&w.power(5).unwrap(), &alg, 1e-6, 150, &t).unwrap();
        assert!(mu.residual <= 1e-6);
        mu.validate(Some(&alg), &t).unwrap();
    }
}
