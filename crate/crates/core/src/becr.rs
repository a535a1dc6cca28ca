//! Batch embedding covariance regularization.
//!
//! The Gini index used here is `G = 1 − Σ pᵢ²` over the normalized
//! eigenvalues `pᵢ = λᵢ / Σλⱼ` of the batch covariance (the Gini impurity of
//! the spectrum, not the Lorenz-curve coefficient). Because `Σλᵢ = tr(K)` and
//! `Σλᵢ² = tr(K²)`, it equals `1 − tr(K²) / tr(K)²` and needs no
//! eigendecomposition. The penalty is the squared hinge
//! `R = max(0, ε − G)²` and the training objective is `(1 − λ)·L + λ·R`.

use alloc::format;

use crate::error::{invalid, Error, Result};
use crate::linalg::{
    center_rows, covariance, dot, gram_matrix, gram_traces, sym_eigenvalues, trace,
    trace_of_square, EigenSpectrum, EmbeddingBatch, Matrix,
};

/// Default Gini threshold `ε`.
pub const DEFAULT_EPSILON: f64 = 0.7;
/// Default mixing weight `λ`.
pub const DEFAULT_LAMBDA: f64 = 0.05;

/// Probabilities are clamped to `[BCE_CLAMP, 1 − BCE_CLAMP]` before taking logs.
pub const BCE_CLAMP: f64 = 1e-7;

/// Hyperparameters of the regularizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BecrConfig {
    epsilon: f64,
    lambda: f64,
}

impl BecrConfig {
    /// Both values must lie in `[0, 1]`.
    pub fn new(epsilon: f64, lambda: f64) -> Result<Self> {
        check_unit("epsilon", epsilon)?;
        check_unit("lambda", lambda)?;
        Ok(Self { epsilon, lambda })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl Default for BecrConfig {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            lambda: DEFAULT_LAMBDA,
        }
    }
}

/// Gini index, penalty and combined loss for one batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BecrResult {
    pub gini: f64,
    pub penalty: f64,
    pub total_loss: f64,
    pub vanilla_loss: f64,
}

fn check_unit(name: &str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(invalid(format!("{name} must lie in [0, 1], got {value}")));
    }
    Ok(())
}

/// Gini index of a spectrum after PSD clamping.
///
/// An all-zero spectrum has no normalized form and yields
/// [`Error::DegenerateSpectrum`].
pub fn gini_from_spectrum(spectrum: &EigenSpectrum) -> Result<f64> {
    let clamped = spectrum.clamped()?;
    let sum: f64 = clamped.values().iter().sum();
    let sum_sq: f64 = clamped.values().iter().map(|v| v * v).sum();
    gini_from_traces(sum, sum_sq)
}

/// `1 − tr(K²) / tr(K)²`, clamped into `[0, 1]`.
pub fn gini_from_traces(tr_k: f64, tr_k2: f64) -> Result<f64> {
    if !(tr_k.is_finite() && tr_k2.is_finite()) {
        return Err(invalid("traces must be finite"));
    }
    if tr_k <= 0.0 {
        return Err(Error::DegenerateSpectrum);
    }
    Ok((1.0 - tr_k2 / (tr_k * tr_k)).clamp(0.0, 1.0))
}

/// Gini index without eigendecomposition.
///
/// Uses the `N × N` Gram matrix of centered rows when `N < D`, so the
/// `D × D` covariance is never built for wide batches; otherwise the direct
/// covariance traces.
pub fn gini_trace(batch: &EmbeddingBatch) -> Result<f64> {
    if batch.n_samples() < batch.dim() {
        let (tr_k, tr_k2) = gram_traces(batch)?;
        gini_from_traces(tr_k, tr_k2)
    } else {
        gini_direct_trace(batch)
    }
}

/// Gini index from `tr(K)` and `‖K‖²_F` of the materialized covariance.
pub fn gini_direct_trace(batch: &EmbeddingBatch) -> Result<f64> {
    let k = covariance(batch)?;
    gini_from_traces(trace(&k), trace_of_square(&k))
}

/// Gini index via the Jacobi eigendecomposition of the covariance.
pub fn gini_eigen(batch: &EmbeddingBatch) -> Result<f64> {
    gini_from_spectrum(&sym_eigenvalues(&covariance(batch)?)?)
}

/// Squared hinge `max(0, ε − G)²`.
pub fn becr_penalty(gini: f64, epsilon: f64) -> Result<f64> {
    check_unit("gini", gini)?;
    check_unit("epsilon", epsilon)?;
    Ok(hinge(gini, epsilon))
}

#[inline]
fn hinge(gini: f64, epsilon: f64) -> f64 {
    let gap = epsilon - gini;
    if gap > 0.0 {
        gap * gap
    } else {
        0.0
    }
}

/// Convex combination `(1 − λ)·vanilla + λ·penalty`.
pub fn total_loss(vanilla: f64, penalty: f64, lambda: f64) -> Result<f64> {
    check_unit("lambda", lambda)?;
    if !(vanilla.is_finite() && penalty.is_finite()) {
        return Err(invalid("losses must be finite"));
    }
    Ok((1.0 - lambda) * vanilla + lambda * penalty)
}

/// Evaluates the full objective for one batch given the caller's task loss.
pub fn evaluate(batch: &EmbeddingBatch, config: &BecrConfig, vanilla: f64) -> Result<BecrResult> {
    let gini = gini_trace(batch)?;
    let penalty = becr_penalty(gini, config.epsilon)?;
    let total_loss = total_loss(vanilla, penalty, config.lambda)?;
    Ok(BecrResult {
        gini,
        penalty,
        total_loss,
        vanilla_loss: vanilla,
    })
}

/// Gradient of the penalty `R` with respect to every entry of the raw batch.
///
/// With `C` the centered batch, `a = ‖C‖²_F = (N−1)·tr(K)` and
/// `b = ‖CCᵀ‖²_F = (N−1)²·tr(K²)`, the Gini index is `1 − b/a²` and
///
/// ```text
/// ∂G/∂C = 4·(b/a³)·C − (4/a²)·C·CᵀC
/// ∂R/∂C = −2·(ε − G)·∂G/∂C          (zero when G ≥ ε)
/// ```
///
/// The hinge is active exactly when [`gini_trace`] is below `ε`. The result
/// is pulled back through the centering map by subtracting its column means. `C·CᵀC` is formed as `(CCᵀ)·C` when `N ≤ D` and as
/// `C·(CᵀC)` otherwise.
pub fn becr_gradient(batch: &EmbeddingBatch, config: &BecrConfig) -> Result<Matrix> {
    batch.require_samples(2)?;
    let centered = center_rows(batch)?;
    let c = centered.matrix();
    let (n, d) = (c.rows(), c.cols());

    let a = c.frobenius_norm_sq();
    if a <= 0.0 {
        return Err(Error::DegenerateSpectrum);
    }
    let cccc = if n <= d {
        let gram = gram_matrix(c);
        let mut out = Matrix::zeros(n, d);
        for i in 0..n {
            let dst = out.row_mut(i);
            for (l, &g) in gram.row(i).iter().enumerate() {
                for (o, v) in dst.iter_mut().zip(c.row(l)) {
                    *o += g * v;
                }
            }
        }
        out
    } else {
        let scatter = scatter_matrix(c);
        let mut out = Matrix::zeros(n, d);
        for i in 0..n {
            let ci = c.row(i);
            for j in 0..d {
                out.set(i, j, dot(ci, scatter.row(j)));
            }
        }
        out
    };
    // b = ‖CᵀC‖²_F = tr((CᵀC)²) = Σ_ij C_ij (C CᵀC)_ij
    let b = dot(c.as_slice(), cccc.as_slice());

    let gap = config.epsilon - gini_trace(batch)?;
    if gap <= 0.0 {
        return Ok(Matrix::zeros(n, d));
    }
    let coef_c = -2.0 * gap * 4.0 * b / (a * a * a);
    let coef_cccc = -2.0 * gap * -4.0 / (a * a);
    let mut grad = Matrix::zeros(n, d);
    for ((g, cv), pv) in grad
        .as_mut_slice()
        .iter_mut()
        .zip(c.as_slice())
        .zip(cccc.as_slice())
    {
        *g = coef_c * cv + coef_cccc * pv;
    }

    let means = crate::linalg::column_means(&grad);
    for i in 0..n {
        for (g, m) in grad.row_mut(i).iter_mut().zip(&means) {
            *g -= m;
        }
    }
    Ok(grad)
}

/// `CᵀC` (unnormalized scatter).
fn scatter_matrix(c: &Matrix) -> Matrix {
    let d = c.cols();
    let mut s = Matrix::zeros(d, d);
    for row in c.row_iter() {
        for i in 0..d {
            let ri = row[i];
            for (acc, rj) in s.row_mut(i)[i..].iter_mut().zip(&row[i..]) {
                *acc += ri * rj;
            }
        }
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let v = s.get(i, j);
            s.set(j, i, v);
        }
    }
    s
}

/// Mean binary cross-entropy with probabilities clamped to
/// `[BCE_CLAMP, 1 − BCE_CLAMP]`.
pub fn bce_loss(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(invalid(format!(
            "predictions ({}) and targets ({}) differ in length",
            predictions.len(),
            targets.len()
        )));
    }
    if predictions.is_empty() {
        return Err(invalid("empty prediction vector"));
    }
    let mut sum = 0.0;
    for (&p, &t) in predictions.iter().zip(targets) {
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid(format!("prediction {p} outside [0, 1]")));
        }
        if t != 0.0 && t != 1.0 {
            return Err(invalid(format!("target {t} is not binary")));
        }
        let p = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
        sum -= t * libm::log(p) + (1.0 - t) * libm::log(1.0 - p);
    }
    Ok(sum / predictions.len() as f64)
}

/// Finite-difference hooks for verifying analytic gradients.
pub mod check {
    use super::*;

    /// Entries of the analytic gradient at or below this magnitude are
    /// excluded from relative-error comparisons.
    pub const MAGNITUDE_FLOOR: f64 = 1e-8;

    /// Central-difference step for an entry of value `x`.
    #[inline]
    pub fn step_for(x: f64) -> f64 {
        1e-5 * (1.0 + x.abs())
    }

    /// Central differences of `f` with respect to every batch entry, using
    /// [`step_for`].
    pub fn central_difference<F>(batch: &EmbeddingBatch, mut f: F) -> Result<Matrix>
    where
        F: FnMut(&EmbeddingBatch) -> Result<f64>,
    {
        let base = batch.matrix();
        let mut out = Matrix::zeros(base.rows(), base.cols());
        let mut work = base.as_slice().to_vec();
        for idx in 0..work.len() {
            let x = work[idx];
            let h = step_for(x);
            work[idx] = x + h;
            let plus = f(&EmbeddingBatch::from_vec(base.rows(), base.cols(), work.clone())?)?;
            work[idx] = x - h;
            let minus = f(&EmbeddingBatch::from_vec(base.rows(), base.cols(), work.clone())?)?;
            work[idx] = x;
            out.as_mut_slice()[idx] = (plus - minus) / (2.0 * h);
        }
        Ok(out)
    }

    /// Penalty as a function of the batch, evaluated through [`gini_trace`].
    pub fn penalty_fn(epsilon: f64) -> impl Fn(&EmbeddingBatch) -> Result<f64> {
        move |b| Ok(hinge(gini_trace(b)?, epsilon))
    }

    /// Largest `|analytic − numeric| / |numeric|` over entries where either
    /// side exceeds [`MAGNITUDE_FLOOR`]. Returns 0 when no entry qualifies.
    pub fn max_relative_error(analytic: &Matrix, numeric: &Matrix) -> f64 {
        analytic
            .as_slice()
            .iter()
            .zip(numeric.as_slice())
            .filter(|(a, n)| a.abs() > MAGNITUDE_FLOOR || n.abs() > MAGNITUDE_FLOOR)
            .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()))
            .fold(0.0, f64::max)
    }

    /// Analytic gradient against central differences of [`penalty_fn`].
    pub fn gradient_check(batch: &EmbeddingBatch, config: &BecrConfig) -> Result<f64> {
        let analytic = becr_gradient(batch, config)?;
        let numeric = central_difference(batch, penalty_fn(config.epsilon))?;
        Ok(max_relative_error(&analytic, &numeric))
    }
}
