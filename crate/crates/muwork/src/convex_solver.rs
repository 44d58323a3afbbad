//! Shared convex-fitting kernel: nonnegative least squares and a
//! fully-corrective Frank–Wolfe loop over structured atom dictionaries.
//!
//! Hermitian matrices are embedded into real vectors (diagonal entries, then
//! √2-scaled real/imaginary parts of the upper triangle) so that the solvers
//! run in real arithmetic while Hilbert–Schmidt inner products are preserved
//! exactly. Atom columns are such embeddings of Choi matrices (or correlation
//! matrices); targets live in the same space.

use nalgebra::{DMatrix, DVector};

use crate::channel_core::cmat::{CMat, C64};
use crate::error::{Error, Result};

/// Embed a Hermitian `n x n` matrix into `R^{n^2}`: the `n` diagonal entries
/// (real parts), then for each `i < j` the pair `(√2·Re h_ij, √2·Im h_ij)`.
/// The map is a linear isometry: `dot(embed(A), embed(B)) = Re Tr(A† B)` for
/// Hermitian `A`, `B`.
pub fn embed_hermitian(h: &CMat) -> DVector<f64> {
    let n = h.nrows();
    debug_assert_eq!(n, h.ncols());
    let mut out = DVector::zeros(n * n);
    let mut k = 0;
    for i in 0..n {
        out[k] = h[(i, i)].re;
        k += 1;
    }
    let s2 = 2f64.sqrt();
    for i in 0..n {
        for j in (i + 1)..n {
            out[k] = s2 * h[(i, j)].re;
            k += 1;
            out[k] = s2 * h[(i, j)].im;
            k += 1;
        }
    }
    out
}

/// Inverse of [`embed_hermitian`].
pub fn unembed_hermitian(v: &DVector<f64>, n: usize) -> CMat {
    debug_assert_eq!(v.len(), n * n);
    let mut h = CMat::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        h[(i, i)] = C64::new(v[k], 0.0);
        k += 1;
    }
    let s2 = 2f64.sqrt();
    for i in 0..n {
        for j in (i + 1)..n {
            let re = v[k] / s2;
            k += 1;
            let im = v[k] / s2;
            k += 1;
            h[(i, j)] = C64::new(re, im);
            h[(j, i)] = C64::new(re, -im);
        }
    }
    h
}

/// A dictionary of atoms: embedded real columns plus the payloads that
/// generated them (a unitary, a phase vector, …).
#[derive(Debug, Clone)]
pub struct AtomDictionary<P> {
    dim: usize,
    columns: Vec<DVector<f64>>,
    payloads: Vec<P>,
}

impl<P> AtomDictionary<P> {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            columns: Vec::new(),
            payloads: Vec::new(),
        }
    }

    pub fn push(&mut self, payload: P, column: DVector<f64>) -> Result<()> {
        if column.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: column.len(),
            });
        }
        if column.iter().any(|x| !x.is_finite()) {
            return Err(Error::Precondition("non-finite atom column".into()));
        }
        self.columns.push(column);
        self.payloads.push(payload);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn payloads(&self) -> &[P] {
        &self.payloads
    }

    pub fn columns(&self) -> &[DVector<f64>] {
        &self.columns
    }

    /// Stack the columns into a dense `dim x len` matrix.
    pub fn matrix(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.dim, self.columns.len());
        for (j, c) in self.columns.iter().enumerate() {
            a.set_column(j, c);
        }
        a
    }
}

/// Result of a nonnegative fit: weights (same order as dictionary columns),
/// the Euclidean residual `‖A w − b‖`, outer iterations used, and whether the
/// active-set loop terminated by optimality.
#[derive(Debug, Clone)]
pub struct ConvexFitResult {
    pub weights: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl ConvexFitResult {
    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

fn lsq_columns(a: &DMatrix<f64>, cols: &[usize], b: &DVector<f64>) -> Result<DVector<f64>> {
    let m = a.nrows();
    let mut ap = DMatrix::zeros(m, cols.len());
    for (j, &c) in cols.iter().enumerate() {
        ap.set_column(j, &a.column(c).into_owned());
    }
    let svd = nalgebra::SVD::try_new(ap, true, true, f64::EPSILON, 100_000)
        .ok_or(Error::EigenFailure)?;
    let sol = svd
        .solve(b, f64::EPSILON.sqrt() * 1e-2)
        .map_err(|_| Error::EigenFailure)?;
    Ok(sol.column(0).into_owned())
}

/// Lawson–Hanson nonnegative least squares: minimize `‖A w − b‖` over
/// `w ≥ 0` by active-set pivoting. The iteration cap is `10 · columns`
/// outer pivots; exceeding it reports stagnation. On success the KKT
/// conditions are re-verified: the gradient of `½‖Aw − b‖²` vanishes to
/// `1e−8` (relative) on the support and is `≥ −1e−8` off it.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<ConvexFitResult> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(Error::Dimension {
            expected: m,
            got: b.len(),
        });
    }
    if n == 0 {
        return Ok(ConvexFitResult {
            weights: vec![],
            residual: b.norm(),
            iterations: 0,
            converged: true,
        });
    }

    let max_iter = 10 * n.max(1);
    let mut x = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];
    let mut support: Vec<usize> = Vec::new();
    let grad_scale = {
        let g0: DVector<f64> = a.transpose() * b;
        g0.amax().max(1.0)
    };
    let tol_w = 10.0 * f64::EPSILON * grad_scale * (m.max(n) as f64);

    let mut iterations = 0usize;
    loop {
        let w: DVector<f64> = a.transpose() * (b - a * &x);
        // pick the most positive gradient among inactive columns
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n {
            if !passive[i] && w[i] > tol_w
                && best.is_none_or(|(_, bw)| w[i] > bw) {
                    best = Some((i, w[i]));
                }
        }
        let Some((t, _)) = best else { break };
        if iterations >= max_iter {
            let residual = (a * &x - b).norm();
            return Err(Error::Stagnation {
                residual,
                iterations,
            });
        }
        iterations += 1;
        passive[t] = true;
        support.push(t);

        // inner loop: restore feasibility of the passive-set solution
        loop {
            let z = lsq_columns(a, &support, b)?;
            if z.iter().all(|&v| v > 0.0) {
                for (j, &c) in support.iter().enumerate() {
                    x[c] = z[j];
                }
                break;
            }
            // step toward z until the first passive variable hits zero
            let mut alpha = f64::INFINITY;
            for (j, &c) in support.iter().enumerate() {
                if z[j] <= 0.0 {
                    let denom = x[c] - z[j];
                    if denom > 0.0 {
                        alpha = alpha.min(x[c] / denom);
                    } else {
                        alpha = 0.0;
                    }
                }
            }
            let alpha = alpha.clamp(0.0, 1.0);
            for (j, &c) in support.iter().enumerate() {
                x[c] += alpha * (z[j] - x[c]);
            }
            // deactivate anything pinned at (or numerically through) zero
            let mut k = 0;
            while k < support.len() {
                let c = support[k];
                if x[c] <= f64::EPSILON * grad_scale {
                    x[c] = 0.0;
                    passive[c] = false;
                    support.swap_remove(k);
                } else {
                    k += 1;
                }
            }
            if support.is_empty() {
                break;
            }
        }
    }

    let residual_vec = a * &x - b;
    let residual = residual_vec.norm();
    // KKT re-verification (gradient of ½‖Aw − b‖² is −Aᵀ(b − Aw))
    let g: DVector<f64> = a.transpose() * (b - a * &x);
    let kkt_tol = 1e-8 * grad_scale;
    for i in 0..n {
        let ok = if passive[i] {
            g[i].abs() <= kkt_tol
        } else {
            g[i] <= kkt_tol
        };
        if !ok {
            return Err(Error::Inconsistency(format!(
                "KKT violation at column {i}: gradient {:.3e}",
                g[i]
            )));
        }
    }

    Ok(ConvexFitResult {
        weights: x.iter().copied().collect(),
        residual,
        iterations,
        converged: true,
    })
}

/// Why a Frank–Wolfe run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// residual reached the requested tolerance
    Converged,
    /// the atom budget was exhausted before the tolerance was met
    AtomBudget,
    /// residual decrease fell below 1e−14 for ten consecutive rounds, or the
    /// generator produced no new atoms
    Stagnation,
}

/// Outcome of [`frank_wolfe_fit`]: the final fit, the grown dictionary, and
/// the stop reason. The best fit found is always returned, including on
/// stagnation, so callers can report how close they got.
#[derive(Debug)]
pub struct FrankWolfeOutcome<P> {
    pub fit: ConvexFitResult,
    pub dictionary: AtomDictionary<P>,
    pub stop: StopReason,
    pub rounds: usize,
}

impl<P> FrankWolfeOutcome<P> {
    pub fn converged(&self) -> bool {
        self.stop == StopReason::Converged
    }
}

/// Fully-corrective Frank–Wolfe: alternate between a complete NNLS refit over
/// the current dictionary and one round of atom generation from the residual.
/// Because every round refits all weights from scratch, the residual sequence
/// is non-increasing; this is asserted.
///
/// `generate` receives the embedded residual `b − A w` and returns candidate
/// `(payload, column)` pairs to append; returning an empty batch ends the run
/// as stagnation. Generator errors propagate.
pub fn frank_wolfe_fit<P, G>(
    target: &DVector<f64>,
    mut dictionary: AtomDictionary<P>,
    mut generate: G,
    tol_residual: f64,
    max_atoms: usize,
) -> Result<FrankWolfeOutcome<P>>
where
    G: FnMut(&DVector<f64>) -> Result<Vec<(P, DVector<f64>)>>,
{
    if target.len() != dictionary.dim() {
        return Err(Error::Dimension {
            expected: dictionary.dim(),
            got: target.len(),
        });
    }
    let mut prev = f64::INFINITY;
    let mut stall = 0usize;
    let mut rounds = 0usize;
    loop {
        rounds += 1;
        let fit = if dictionary.is_empty() {
            ConvexFitResult {
                weights: vec![],
                residual: target.norm(),
                iterations: 0,
                converged: true,
            }
        } else {
            nnls(&dictionary.matrix(), target)?
        };
        assert!(
            fit.residual <= prev + 1e-12 * (1.0 + prev),
            "fully-corrective refit must not increase the residual ({} -> {})",
            prev,
            fit.residual
        );
        let stop = if fit.residual <= tol_residual {
            Some(StopReason::Converged)
        } else if dictionary.len() >= max_atoms {
            Some(StopReason::AtomBudget)
        } else if prev - fit.residual < 1e-14 {
            stall += 1;
            (stall >= 10).then_some(StopReason::Stagnation)
        } else {
            stall = 0;
            None
        };
        if let Some(stop) = stop {
            return Ok(FrankWolfeOutcome {
                fit,
                dictionary,
                stop,
                rounds,
            });
        }
        prev = fit.residual;

        let residual_vec = if dictionary.is_empty() {
            target.clone()
        } else {
            let w = DVector::from_vec(fit.weights.clone());
            target - dictionary.matrix() * w
        };
        let batch = generate(&residual_vec)?;
        if batch.is_empty() {
            return Ok(FrankWolfeOutcome {
                fit,
                dictionary,
                stop: StopReason::Stagnation,
                rounds,
            });
        }
        for (p, col) in batch {
            dictionary.push(p, col)?;
            if dictionary.len() >= max_atoms {
                break;
            }
        }
    }
}
