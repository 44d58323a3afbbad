//! Built-in property suite behind `muwork selftest`.
//!
//! Quick level: exact group averages, closed-form constants, and identities
//! that hold to machine precision. Full level adds the N = 10⁵ Monte-Carlo
//! cross-checks. Each check runs on its own seeded generator so the quick
//! subset is unchanged by the extra checks.

use muwork::algebra::{random_fixing_channel, AlgebraStructure};
use muwork::channel_core::cmat::{
    fnorm, ginibre, haar_unitary, hermitize, identity, min_eig_herm, swap_operator, trace_dot,
    vec_row, CMat,
};
use muwork::channel_core::{depolarizing, qubit_clifford, random_unital_channel, weyl_heisenberg};
use muwork::correlation::{quadrature_decompose, random_correlation};
use muwork::mixing::{
    l_closed_form, l_hat_closed_form, l_monte_carlo, mixing_constant, MixingBranch,
};
use muwork::Tol;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::report::{sig3, CheckInfo};

const MC_SAMPLES: usize = 100_000;

pub fn branch_name(branch: &MixingBranch) -> &'static str {
    match branch {
        MixingBranch::Trivial => "trivial",
        MixingBranch::SingleBlock => "single_block",
        MixingBranch::MultiBlock => "multi_block",
    }
}

/// Run the suite; `full` appends the Monte-Carlo checks.
pub fn run_suite(full: bool, seed: u64, tol: &Tol) -> Vec<CheckInfo> {
    type Body = fn(&mut ChaCha12Rng, &Tol) -> Result<(f64, f64, String), muwork::Error>;
    let quick: &[(&str, Body)] = &[
        ("clifford_vec_projector", clifford_vec_projector),
        ("clifford_swap_twirl", clifford_swap_twirl),
        ("weyl_trace_integral", weyl_trace_integral),
        ("depolarizing_choi", depolarizing_choi),
        ("mixing_constants", mixing_constants),
        ("l_rearrangement", l_rearrangement),
        ("watrous_ball", watrous_ball),
        ("quadrature_exact", quadrature_exact),
    ];
    let mc: &[(&str, Body)] = &[
        ("haar_vec_projector_mc", haar_vec_projector_mc),
        ("haar_swap_mc", haar_swap_mc),
        ("haar_trace_integral_mc", haar_trace_integral_mc),
        ("l_monte_carlo_closed", l_monte_carlo_closed),
    ];
    let mut out = Vec::new();
    for (idx, &(name, body)) in quick.iter().chain(if full { mc } else { &[] }).enumerate() {
        let mut rng = ChaCha12Rng::seed_from_u64(seed.wrapping_add(idx as u64));
        out.push(match body(&mut rng, tol) {
            Ok((measured, bound, detail)) => CheckInfo {
                name: name.into(),
                pass: measured <= bound,
                measured,
                bound,
                detail,
            },
            Err(e) => CheckInfo {
                name: name.into(),
                pass: false,
                measured: f64::MAX,
                bound: 0.0,
                detail: format!("error: {e}"),
            },
        });
    }
    out
}

pub fn render_table(checks: &[CheckInfo]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(4);
    let mut s = String::new();
    for c in checks {
        s.push_str(&format!(
            "  {:<width$}  {}  {:>10} ≤ {:>8}  {}\n",
            c.name,
            if c.pass { "PASS" } else { "FAIL" },
            sig3(c.measured),
            sig3(c.bound),
            c.detail,
        ));
    }
    s
}

/// The 24-element single-qubit group averages `vec(U)vec(U)†` to exactly
/// `I₄/2`, the finite form of the Haar first-moment projector.
fn clifford_vec_projector(
    _rng: &mut ChaCha12Rng,
    _tol: &Tol,
) -> Result<(f64, f64, String), muwork::Error> {
    let group = qubit_clifford();
    let mut acc = CMat::zeros(4, 4);
    for u in &group {
        let v = vec_row(u);
        acc += &v * v.adjoint();
    }
    acc = acc.unscale(group.len() as f64);
    let measured = fnorm(&(acc - identity(4).unscale(2.0)));
    Ok((
        measured,
        1e-12,
        "avg vec(U)vec(U)† over the 24-element qubit group vs I₄/2".into(),
    ))
}

/// Same group, second form: the average of `U ⊗ U†` is `SWAP/2`.
fn clifford_swap_twirl(
    _rng: &mut ChaCha12Rng,
    _tol: &Tol,
) -> Result<(f64, f64, String), muwork::Error> {
    let group = qubit_clifford();
    let mut acc = CMat::zeros(4, 4);
    for u in &group {
        acc += u.kronecker(&u.adjoint());
    }
    acc = acc.unscale(group.len() as f64);
    let measured = fnorm(&(acc - swap_operator(2).unscale(2.0)));
    Ok((
        measured,
        1e-12,
        "avg U ⊗ U† over the 24-element qubit group vs SWAP/2".into(),
    ))
}

/// The d² discrete displacement operators average `|Tr(U X†)|²` to exactly
/// `Tr(X†X)/d` — they form an orthogonal basis, so the finite average equals
/// the Haar integral.
fn weyl_trace_integral(
    rng: &mut ChaCha12Rng,
    tol: &Tol,
) -> Result<(f64, f64, String), muwork::Error> {
    let fam = weyl_heisenberg(3);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let x = ginibre(3, 3, rng);
        let target = trace_dot(&x, &x).re / 3.0;
        let mean = fam
            .iter()
            .map(|w| trace_dot(&x, w).norm_sqr())
            .sum::<f64>()
            / fam.len() as f64;
        worst = worst.max((mean - target).abs() / (1.0 + target.abs()));
    }
    Ok((
        worst,
        tol.eq * 10.0,
        "avg |Tr(U X†)|² over the 9 displacement operators vs Tr(X†X)/3, 5 random X".into(),
    ))
}

/// The Choi matrix of the full trace map on `M_d` is `I_{d²}/d`.
fn depolarizing_choi(
    _rng: &mut ChaCha12Rng,
    _tol: &Tol,
) -> Result<(f64, f64, String), muwork::Error> {
    let mut worst = 0.0f64;
    for d in 2..=5 {
        let gap = fnorm(&(depolarizing(d).choi().mat() - identity(d * d).unscale(d as f64)));
        worst = worst.max(gap);
    }
    Ok((worst, 1e-12, "J(δ_d) = I_{d²}/d for d = 2..5".into()))
}

/// A reference case for `mixing_constants`: block signature, expected p as
/// num/den, expected branch name.
type ConstantCase = (&'static [(usize, usize)], u64, u64, &'static str);

/// Closed-form mixing constants on reference signatures.
fn mixing_constants(
    _rng: &mut ChaCha12Rng,
    _tol: &Tol,
) -> Result<(f64, f64, String), muwork::Error> {
    let cases: &[ConstantCase] = &[
        (&[(1, 3)], 1, 8, "single_block"),
        (&[(2, 2)], 1, 3, "single_block"),
        (&[(1, 2), (1, 3)], 1, 24, "multi_block"),
        (&[(3, 1)], 1, 1, "trivial"),
    ];
    let mut mismatches = 0usize;
    for &(blocks, num, den, branch) in cases {
        let alg = AlgebraStructure::from_blocks_std(blocks)?;
        let c = mixing_constant(&alg);
        if (c.p.num, c.p.den) != (num, den) || branch_name(&c.branch) != branch {
            mismatches += 1;
        }
    }
    Ok((
        mismatches as f64,
        0.0,
        "p = 1/8 (scalars in M₃), 1/3 (M₂⊗I₂), 1/24 (⊕ two blocks), 1 (full algebra)".into(),
    ))
}

/// Rearrangement identity for the averaged map:
/// `L(Φ) − Σ_k L(Φ̂_k)/n_k² = Φ + (D − r − 1)·E_A`.
fn l_rearrangement(
    rng: &mut ChaCha12Rng,
    tol: &Tol,
) -> Result<(f64, f64, String), muwork::Error> {
    let alg = AlgebraStructure::from_blocks_std(&[(1, 2), (1, 3)])?;
    let phi = random_fixing_channel(&alg, 3, rng)?;
    let mut lhs = l_closed_form(&phi, &alg, tol)?;
    for (k, &(_m, n)) in alg.blocks().iter().enumerate() {
        lhs -= l_hat_closed_form(&phi, &alg, k, tol)?.scale(1.0 / (n * n) as f64);
    }
    let t_e = alg.expectation_channel(tol)?.transfer().clone();
    let rhs =
        phi.transfer() + t_e.scale(alg.dim_commutant() as f64 - alg.r() as f64 - 1.0);
    let measured = fnorm(&(lhs - rhs));
    Ok((
        measured,
        tol.eq,
        "L(Φ) − Σ L(Φ̂_k)/n_k² = Φ + (D−r−1)·E_A on ⊕(1,2),(1,3)".into(),
    ))
}

/// `J(δ_n) − J(Φ)/n²` is positive semidefinite for every unital channel `Φ`
/// on `M_n` — the spectral form of the guaranteed ball around `δ_n`.
fn watrous_ball(rng: &mut ChaCha12Rng, tol: &Tol) -> Result<(f64, f64, String), muwork::Error> {
    let mut worst = 0.0f64;
    for n in [2usize, 3] {
        for _ in 0..3 {
            let phi = random_unital_channel(n, 3, rng)?;
            let m = depolarizing(n).choi().mat()
                - phi.choi().mat().unscale((n * n) as f64);
            let min_eig = min_eig_herm(&hermitize(&m))?;
            worst = worst.max((-min_eig).max(0.0));
        }
    }
    Ok((
        worst,
        tol.psd,
        "min eig of J(δ_n) − J(Φ)/n² over 6 random unital channels, n ∈ {2, 3}".into(),
    ))
}

/// Third-roots-of-unity quadrature decomposes `(C + 3I)/4` exactly for a
/// random d = 4 correlation matrix.
fn quadrature_exact(
    rng: &mut ChaCha12Rng,
    tol: &Tol,
) -> Result<(f64, f64, String), muwork::Error> {
    let c = random_correlation(4, 4, rng, tol)?;
    let atoms = quadrature_decompose(&c, tol)?;
    atoms.validate(tol)?;
    let measured = atoms.residual.max((atoms.weight_sum() - 1.0).abs());
    Ok((
        measured,
        tol.eq * 10.0,
        format!(
            "3⁴-point quadrature on a random d = 4 correlation matrix ({} atoms)",
            atoms.len()
        ),
    ))
}

fn haar_vec_projector_mc(
    rng: &mut ChaCha12Rng,
    _tol: &Tol,
) -> Result<(f64, f64, String), muwork::Error> {
    let mut acc = CMat::zeros(9, 9);
    for _ in 0..MC_SAMPLES {
        let u = haar_unitary(3, rng);
        let v = vec_row(&u);
        acc += &v * v.adjoint();
    }
    acc = acc.unscale(MC_SAMPLES as f64);
    let measured = fnorm(&(acc - identity(9).unscale(3.0)));
    Ok((
        measured,
        2.5e-2,
        format!("avg vec(U)vec(U)† vs I₉/3, N = {MC_SAMPLES} Haar samples at d = 3"),
    ))
}

fn haar_swap_mc(rng: &mut ChaCha12Rng, _tol: &Tol) -> Result<(f64, f64, String), muwork::Error> {
    let mut acc = CMat::zeros(9, 9);
    for _ in 0..MC_SAMPLES {
        let u = haar_unitary(3, rng);
        acc += u.kronecker(&u.adjoint());
    }
    acc = acc.unscale(MC_SAMPLES as f64);
    let measured = fnorm(&(acc - swap_operator(3).unscale(3.0)));
    Ok((
        measured,
        2.5e-2,
        format!("avg U ⊗ U† vs SWAP/3, N = {MC_SAMPLES} Haar samples at d = 3"),
    ))
}

fn haar_trace_integral_mc(
    rng: &mut ChaCha12Rng,
    _tol: &Tol,
) -> Result<(f64, f64, String), muwork::Error> {
    let x = ginibre(3, 3, rng);
    let target = trace_dot(&x, &x).re / 3.0;
    let samples: Vec<f64> = (0..MC_SAMPLES)
        .map(|_| trace_dot(&x, &haar_unitary(3, rng)).norm_sqr())
        .collect();
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>()
        / (samples.len() - 1) as f64;
    let se = (var / samples.len() as f64).sqrt();
    let measured = (mean - target).abs() / se;
    Ok((
        measured,
        4.0,
        format!(
            "sample mean {mean:.6} vs Tr(X†X)/3 = {target:.6} in standard errors, N = {MC_SAMPLES}"
        ),
    ))
}

fn l_monte_carlo_closed(
    rng: &mut ChaCha12Rng,
    tol: &Tol,
) -> Result<(f64, f64, String), muwork::Error> {
    let alg = AlgebraStructure::from_blocks_std(&[(1, 2), (1, 3)])?;
    let phi = random_fixing_channel(&alg, 3, rng)?;
    let closed = l_closed_form(&phi, &alg, tol)?;
    let mc = l_monte_carlo(phi.kraus(), &alg, MC_SAMPLES, rng, tol)?;
    let measured = fnorm(&(&closed - &mc)) / fnorm(&closed);
    Ok((
        measured,
        5e-2,
        format!("relative Frobenius gap closed form vs N = {MC_SAMPLES} sampling on ⊕(1,2),(1,3)"),
    ))
}
