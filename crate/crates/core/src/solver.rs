//! ADMM solvers for robust tensor-ring recovery.
//!
//! [`trrpca`] decomposes a fully observed tensor into a low-rank part (small
//! nuclear norms of its balanced unfoldings) plus a sparse part. [`rtrc`]
//! solves the same decomposition when only a sampled subset of entries is
//! observed, with a consensus variable `L` tying the per-unfolding estimates
//! together and a dual variable on the sampled-data constraint.
//!
//! Both solvers run `ceil(d/2)` singular-value-thresholding updates per
//! iteration (one per balanced unfolding), grow the penalty `mu`
//! geometrically, and stop when the relative change of `L` drops to the
//! configured tolerance.

use crate::error::{Error, Result};
use crate::prox::{masked_soft_threshold, soft_threshold, svt};
use crate::tensor::{balanced_fold, DenseTensor, SamplingMask};
use rayon::prelude::*;

/// Sparsity weight: either a fixed value or the data-derived default
/// `1 / sqrt(p * n_bar)` with `n_bar` the longer side of the first balanced
/// unfolding and `p` the sampling probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lambda {
    Auto,
    Fixed(f64),
}

/// Solver parameters. `Default` mirrors the reference settings: `beta = 1.1`,
/// `mu0 = 1e-3`, `mu_max = 1e10`, `tol = 1e-5`, 100 iterations, auto lambda,
/// uniform unfolding weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub lambda: Lambda,
    /// Per-unfolding nuclear-norm weights `w_1..w_{ceil(d/2)}`; `None` means
    /// all ones, which keeps the averaged sparse update exact as derived.
    pub weights: Option<Vec<f64>>,
    pub mu0: f64,
    pub beta: f64,
    pub mu_max: f64,
    pub tol: f64,
    pub max_iters: usize,
    /// Run the independent per-unfolding SVT updates on worker threads.
    pub parallel_unfoldings: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: Lambda::Auto,
            weights: None,
            mu0: 1e-3,
            beta: 1.1,
            mu_max: 1e10,
            tol: 1e-5,
            max_iters: 100,
            parallel_unfoldings: false,
        }
    }
}

impl SolverConfig {
    /// Preset for 8-bit image experiments (`mu0 = 10^-3.2`).
    pub fn image_preset() -> Self {
        Self { mu0: 10f64.powf(-3.2), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu0 > 0.0) || !self.mu0.is_finite() {
            return Err(Error::InvalidParam(format!("mu0 must be positive, got {}", self.mu0)));
        }
        if !(self.beta >= 1.0) || !self.beta.is_finite() {
            return Err(Error::InvalidParam(format!("beta must be >= 1, got {}", self.beta)));
        }
        if !(self.mu_max >= self.mu0) || !self.mu_max.is_finite() {
            return Err(Error::InvalidParam(format!(
                "mu_max must be finite and >= mu0, got {}",
                self.mu_max
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParam(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParam("max_iters must be >= 1".into()));
        }
        if let Lambda::Fixed(l) = self.lambda {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::InvalidParam(format!("lambda must be positive, got {l}")));
            }
        }
        if let Some(w) = &self.weights {
            if w.is_empty() || w.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                return Err(Error::InvalidParam("weights must all be positive".into()));
            }
        }
        Ok(())
    }

    /// Parses a flat `key=value` document. Recognized keys: `lambda` (a number
    /// or `auto`), `beta`, `mu0`, `mu_max`, `tol`, `max_iters`, `parallel`.
    /// Unknown keys are ignored so a solver block can live inside a larger
    /// experiment spec; missing keys keep their defaults.
    pub fn from_kv_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Format(format!(
                    "line {}: expected key=value, got {line:?}",
                    lineno + 1
                )));
            };
            let (key, value) = (key.trim(), value.trim());
            let parse_f64 = |v: &str| {
                v.parse::<f64>().map_err(|_| {
                    Error::Format(format!("line {}: invalid number {v:?} for {key}", lineno + 1))
                })
            };
            match key {
                "lambda" => {
                    cfg.lambda = if value.eq_ignore_ascii_case("auto") {
                        Lambda::Auto
                    } else {
                        Lambda::Fixed(parse_f64(value)?)
                    }
                }
                "beta" => cfg.beta = parse_f64(value)?,
                "mu0" => cfg.mu0 = parse_f64(value)?,
                "mu_max" => cfg.mu_max = parse_f64(value)?,
                "tol" => cfg.tol = parse_f64(value)?,
                "max_iters" => {
                    cfg.max_iters = value.parse::<usize>().map_err(|_| {
                        Error::Format(format!(
                            "line {}: invalid integer {value:?} for max_iters",
                            lineno + 1
                        ))
                    })?
                }
                "parallel" => {
                    cfg.parallel_unfoldings = match value.to_ascii_lowercase().as_str() {
                        "true" | "1" | "yes" => true,
                        "false" | "0" | "no" => false,
                        _ => {
                            return Err(Error::Format(format!(
                                "line {}: invalid boolean {value:?} for parallel",
                                lineno + 1
                            )))
                        }
                    }
                }
                _ => {}
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolved_weights(&self, count: usize) -> Result<Vec<f64>> {
        match &self.weights {
            None => Ok(vec![1.0; count]),
            Some(w) if w.len() == count => Ok(w.clone()),
            Some(w) => Err(Error::InvalidParam(format!(
                "expected {count} unfolding weights, got {}",
                w.len()
            ))),
        }
    }

    fn resolve_lambda(&self, dims: &[usize], p: f64) -> Result<f64> {
        match self.lambda {
            Lambda::Fixed(l) => Ok(l),
            Lambda::Auto => default_lambda(dims, p),
        }
    }
}

/// Outcome of a solve: the split estimates plus per-iteration diagnostics.
#[derive(Debug, Clone)]
pub struct RecoveryResult {
    /// Low-rank estimate `L`.
    pub low_rank: DenseTensor,
    /// Sparse estimate `S`.
    pub sparse: DenseTensor,
    /// Iterations actually executed.
    pub iterations: usize,
    /// Whether the relative-change stopping rule fired before `max_iters`.
    pub converged: bool,
    /// Relative change of `L` per iteration; length equals `iterations`.
    pub rc_trace: Vec<f64>,
    /// Constraint residual per iteration: `max_i ||X^(i) + S - T||_F` for
    /// TRRPCA, `||P (*) (L + S - T)||_F` for RTRC.
    pub residual_trace: Vec<f64>,
    /// Penalty value used in each iteration: `min(mu0 * beta^k, mu_max)`.
    pub mu_trace: Vec<f64>,
    /// The resolved sparsity weight (meaningful when `lambda = auto`).
    pub lambda: f64,
}

/// Default sparsity weight `1 / sqrt(p * n_bar)` where `n_bar` is the longer
/// side of the balanced unfolding at shift 1 and `p` the sampling probability
/// (1 for full observation).
pub fn default_lambda(dims: &[usize], p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParam(format!("sampling probability must be in (0,1], got {p}")));
    }
    if dims.len() < 2 {
        return Err(Error::DimMismatch("default lambda needs order >= 2".into()));
    }
    let split = dims.len().div_ceil(2);
    let rows: usize = dims[..split].iter().product();
    let cols: usize = dims[split..].iter().product();
    let n_bar = rows.max(cols);
    Ok(1.0 / (p * n_bar as f64).sqrt())
}

/// Relative change `||X_k - X_{k-1}||_F / ||X_{k-1}||_F`, with the absolute
/// change substituted when the previous iterate is zero.
pub fn relative_change(current: &DenseTensor, previous: &DenseTensor) -> Result<f64> {
    let diff = current.sub(previous)?.frobenius();
    let prev_norm = previous.frobenius();
    Ok(if prev_norm == 0.0 { diff } else { diff / prev_norm })
}

/// Per-unfolding SVT: folds `D_{w_i / mu}` of the `i`-th balanced unfolding
/// of `inputs[i]` back into tensor shape, optionally in parallel.
fn svt_unfoldings(
    inputs: &[DenseTensor],
    weights: &[f64],
    mu: f64,
    dims: &[usize],
    parallel: bool,
) -> Result<Vec<DenseTensor>> {
    let solve_one = |i: usize| -> Result<DenseTensor> {
        let unfolded = inputs[i].balanced_unfold(i + 1)?;
        let thresholded = svt(&unfolded, weights[i] / mu)?;
        balanced_fold(&thresholded.value, i + 1, dims)
    };
    if parallel && inputs.len() > 1 {
        (0..inputs.len()).into_par_iter().map(solve_one).collect()
    } else {
        (0..inputs.len()).map(solve_one).collect()
    }
}

fn mean(tensors: &[DenseTensor]) -> Result<DenseTensor> {
    let mut acc = tensors[0].clone();
    for t in &tensors[1..] {
        acc = acc.add(t)?;
    }
    Ok(acc.scale(1.0 / tensors.len() as f64))
}

/// Tensor-ring robust PCA: splits a fully observed tensor `T` into `L + S`
/// by minimizing the weighted nuclear norms of the balanced unfoldings of
/// `L` plus `lambda * ||S||_1`.
///
/// Each iteration updates every `X^(i)` by SVT of `T - S - Z^(i)/mu`, then
/// `S` by soft-thresholding the average of `T - X^(i) - Z^(i)/mu`, then the
/// duals `Z^(i)`; the returned `L` is the average of the `X^(i)`.
pub fn trrpca(observed: &DenseTensor, cfg: &SolverConfig) -> Result<RecoveryResult> {
    cfg.validate()?;
    if !observed.is_all_finite() {
        return Err(Error::NonFinite("trrpca input"));
    }
    let d = observed.order();
    if d < 2 {
        return Err(Error::DimMismatch("trrpca input must have order >= 2".into()));
    }
    let dims = observed.dims().to_vec();
    let count = d.div_ceil(2);
    let weights = cfg.resolved_weights(count)?;
    let lambda = cfg.resolve_lambda(&dims, 1.0)?;

    let mut mu = cfg.mu0;
    let mut sparse = DenseTensor::zeros(&dims);
    let mut estimates: Vec<DenseTensor> = vec![observed.clone(); count];
    let mut duals: Vec<DenseTensor> = vec![DenseTensor::zeros(&dims); count];
    let mut low_rank = observed.clone();

    let mut rc_trace = Vec::new();
    let mut residual_trace = Vec::new();
    let mut mu_trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=cfg.max_iters {
        iterations = iter;
        mu_trace.push(mu);

        let data_term = observed.sub(&sparse)?;
        let inputs: Vec<DenseTensor> = duals
            .iter()
            .map(|z| data_term.sub(&z.scale(1.0 / mu)))
            .collect::<Result<_>>()?;
        estimates = svt_unfoldings(&inputs, &weights, mu, &dims, cfg.parallel_unfoldings)?;

        let mut acc = DenseTensor::zeros(&dims);
        for (x, z) in estimates.iter().zip(&duals) {
            acc = acc.add(&observed.sub(x)?.sub(&z.scale(1.0 / mu))?)?;
        }
        sparse = soft_threshold(&acc.scale(1.0 / count as f64), lambda / (count as f64 * mu));

        let mut residual = 0.0f64;
        for (z, x) in duals.iter_mut().zip(&estimates) {
            let gap = x.add(&sparse)?.sub(observed)?;
            residual = residual.max(gap.frobenius());
            *z = z.add(&gap.scale(mu))?;
        }
        residual_trace.push(residual);

        let current = mean(&estimates)?;
        if !current.is_all_finite()
            || !sparse.is_all_finite()
            || duals.iter().any(|z| !z.is_all_finite())
        {
            return Err(Error::Diverged { iteration: iter });
        }
        let rc = relative_change(&current, &low_rank)?;
        rc_trace.push(rc);
        low_rank = current;

        mu = (cfg.beta * mu).min(cfg.mu_max);
        if rc <= cfg.tol {
            converged = true;
            break;
        }
    }

    Ok(RecoveryResult {
        low_rank,
        sparse,
        iterations,
        converged,
        rc_trace,
        residual_trace,
        mu_trace,
        lambda,
    })
}

/// Robust tensor-ring completion: recovers `L + S` from the entries of `T`
/// observed on the mask's support. Unobserved entries of `T` are treated as
/// zero on input.
///
/// Each iteration runs the per-unfolding SVT of `L - Z^(i)/mu`, the closed
///-form consensus update of `L` (an elementwise division by
/// `ceil(d/2) + P`), the masked soft threshold of `S`, and the dual ascents
/// on `Z^(i)` and `W`.
pub fn rtrc(observed: &DenseTensor, mask: &SamplingMask, cfg: &SolverConfig) -> Result<RecoveryResult> {
    cfg.validate()?;
    let d = observed.order();
    if d < 2 {
        return Err(Error::DimMismatch("rtrc input must have order >= 2".into()));
    }
    if mask.dims() != observed.dims() {
        return Err(Error::DimMismatch(format!(
            "mask dims {:?} do not match tensor dims {:?}",
            mask.dims(),
            observed.dims()
        )));
    }
    let dims = observed.dims().to_vec();
    // zero-fill rather than multiply so garbage outside the support is dropped
    let data: Vec<f64> = observed
        .data()
        .iter()
        .zip(mask.tensor().data())
        .map(|(&t, &p)| if p == 1.0 { t } else { 0.0 })
        .collect();
    let observed = DenseTensor::new(dims.clone(), data)?;
    if !observed.is_all_finite() {
        return Err(Error::NonFinite("rtrc observed entries"));
    }

    let count = d.div_ceil(2);
    let weights = cfg.resolved_weights(count)?;
    let lambda = cfg.resolve_lambda(&dims, mask.sampling_ratio())?;
    let denominator = DenseTensor::filled(&dims, count as f64).add(mask.tensor())?;

    let mut mu = cfg.mu0;
    let mut low_rank = observed.clone();
    let mut sparse = DenseTensor::zeros(&dims);
    let mut estimates: Vec<DenseTensor> = vec![low_rank.clone(); count];
    let mut duals: Vec<DenseTensor> = vec![DenseTensor::zeros(&dims); count];
    let mut constraint_dual = DenseTensor::zeros(&dims);

    let mut rc_trace = Vec::new();
    let mut residual_trace = Vec::new();
    let mut mu_trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=cfg.max_iters {
        iterations = iter;
        mu_trace.push(mu);

        let inputs: Vec<DenseTensor> = duals
            .iter()
            .map(|z| low_rank.sub(&z.scale(1.0 / mu)))
            .collect::<Result<_>>()?;
        estimates = svt_unfoldings(&inputs, &weights, mu, &dims, cfg.parallel_unfoldings)?;

        let mut numerator =
            mask.apply(&observed.sub(&sparse)?.sub(&constraint_dual.scale(1.0 / mu))?)?;
        for (x, z) in estimates.iter().zip(&duals) {
            numerator = numerator.add(&x.add(&z.scale(1.0 / mu))?)?;
        }
        let current = numerator.safe_divide(&denominator)?;

        let shrink_input = observed.sub(&current)?.sub(&constraint_dual.scale(1.0 / mu))?;
        sparse = masked_soft_threshold(&shrink_input, mask, lambda / mu)?;

        for (z, x) in duals.iter_mut().zip(&estimates) {
            *z = z.add(&x.sub(&current)?.scale(mu))?;
        }
        let gap = mask.apply(&current.add(&sparse)?.sub(&observed)?)?;
        residual_trace.push(gap.frobenius());
        constraint_dual = constraint_dual.add(&gap.scale(mu))?;

        if !current.is_all_finite()
            || !sparse.is_all_finite()
            || !constraint_dual.is_all_finite()
            || duals.iter().any(|z| !z.is_all_finite())
        {
            return Err(Error::Diverged { iteration: iter });
        }
        let rc = relative_change(&current, &low_rank)?;
        rc_trace.push(rc);
        low_rank = current;

        mu = (cfg.beta * mu).min(cfg.mu_max);
        if rc <= cfg.tol {
            converged = true;
            break;
        }
    }

    Ok(RecoveryResult {
        low_rank,
        sparse,
        iterations,
        converged,
        rc_trace,
        residual_trace,
        mu_trace,
        lambda,
    })
}
