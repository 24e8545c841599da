//! Risk functionals, truncation-error bounds, the aliasing trade-off search,
//! and model-equivalence distance.
//!
//! Monte Carlo estimation is deterministic and schedule-independent: the
//! squared error of evaluation point i is written into slot i of a
//! preallocated buffer (points are keyed by index in the "eval" namespace,
//! disjoint from every training stream), and the buffer is reduced
//! sequentially with compensated summation. Thread counts change wall time,
//! never results.
//!
//! All bound formulas are evaluated in log space first; the linear value is
//! +inf whenever exp overflows. Naive evaluation dies near degree 170.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indexcalc::log_factorial;
use crate::learners::{LearnerSpec, Model};
use crate::rng::{ns, stream_key, CounterRng};
use crate::sampling::{make_dataset, Dataset, InputDistribution};
use crate::targets::{out_of_band_energy, CosineMixtureTarget, Target};

const MC_CHUNK: usize = 4096;

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RiskEstimate {
    #[serde(with = "crate::jsonfmt")]
    pub mean: f64,
    #[serde(with = "crate::jsonfmt")]
    pub std_error: f64,
    pub n_eval: usize,
    pub seed: u64,
}

/// Anything that can stand on one side of a mean-squared-error integral.
#[derive(Clone, Copy)]
pub enum Predictor<'a> {
    Model(&'a Model),
    Target(&'a Target),
    Zero,
}

impl Predictor<'_> {
    fn k(&self) -> Option<usize> {
        match self {
            Predictor::Model(m) => Some(m.k()),
            Predictor::Target(t) => Some(t.k()),
            Predictor::Zero => None,
        }
    }

    #[inline]
    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Predictor::Model(m) => m.eval(x),
            Predictor::Target(t) => t.eval(x),
            Predictor::Zero => 0.0,
        }
    }
}

fn neumaier_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Monte Carlo estimate of ∫ (a(x) − b(x))² p(x) dx over M draws keyed by
/// (seed, "eval", index). Deterministic in its arguments; independent of the
/// rayon schedule.
pub fn mse_distance_mc(
    a: Predictor,
    b: Predictor,
    dist: &InputDistribution,
    m: usize,
    seed: u64,
) -> Result<RiskEstimate> {
    dist.validate()?;
    if m == 0 {
        return Err(Error::InvalidParameter("need at least one evaluation point".into()));
    }
    let k = dist.k();
    for side in [&a, &b] {
        if let Some(pk) = side.k() {
            if pk != k {
                return Err(Error::DimensionMismatch(format!(
                    "predictor is {pk}-dimensional, distribution is {k}-dimensional"
                )));
            }
        }
    }
    let mut errs = vec![0.0f64; m];
    errs.par_chunks_mut(MC_CHUNK)
        .enumerate()
        .for_each(|(chunk_idx, chunk)| {
            let base = chunk_idx * MC_CHUNK;
            let mut x = vec![0.0f64; k];
            for (off, slot) in chunk.iter_mut().enumerate() {
                let mut rng =
                    CounterRng::from_key(stream_key(seed, ns::EVAL, (base + off) as u64));
                dist.sample_into(&mut rng, &mut x);
                let d = a.eval(&x) - b.eval(&x);
                *slot = d * d;
            }
        });
    let mean = neumaier_sum(&errs) / m as f64;
    let std_error = if m > 1 {
        let dev: Vec<f64> = errs.iter().map(|e| (e - mean) * (e - mean)).collect();
        (neumaier_sum(&dev) / (m as f64 - 1.0) / m as f64).sqrt()
    } else {
        0.0
    };
    Ok(RiskEstimate {
        mean,
        std_error,
        n_eval: m,
        seed,
    })
}

/// Mean squared training error (1/N)Σ (y_i − f̂(x_i))². An empty dataset
/// reports 0 — a vacuous fit, which callers should surface, not celebrate.
pub fn empirical_risk(model: &Model, dataset: &Dataset) -> Result<f64> {
    if model.k() != dataset.k {
        return Err(Error::DimensionMismatch(format!(
            "model is {}-dimensional, dataset is {}-dimensional",
            model.k(),
            dataset.k
        )));
    }
    if dataset.is_empty() {
        return Ok(0.0);
    }
    let errs: Vec<f64> = dataset
        .inputs
        .iter()
        .zip(&dataset.outputs)
        .map(|(x, y)| {
            let d = y - model.eval(x);
            d * d
        })
        .collect();
    Ok(neumaier_sum(&errs) / errs.len() as f64)
}

/// Monte Carlo estimate of the expected risk ∫ (f(x) − f̂(x))² p(x) dx.
pub fn expected_risk_mc(
    model: &Model,
    target: &Target,
    dist: &InputDistribution,
    m: usize,
    seed: u64,
) -> Result<RiskEstimate> {
    mse_distance_mc(Predictor::Model(model), Predictor::Target(target), dist, m, seed)
}

/// Expected risk of an arbitrary predictor (the zero baseline, or the target
/// itself as an oracle).
pub fn expected_risk_mc_predictor(
    predictor: Predictor,
    target: &Target,
    dist: &InputDistribution,
    m: usize,
    seed: u64,
) -> Result<RiskEstimate> {
    mse_distance_mc(predictor, Predictor::Target(target), dist, m, seed)
}

/// Monte Carlo L²(p) distance between two fitted models.
pub fn model_distance_mc(
    model_a: &Model,
    model_b: &Model,
    dist: &InputDistribution,
    m: usize,
    seed: u64,
) -> Result<RiskEstimate> {
    mse_distance_mc(Predictor::Model(model_a), Predictor::Model(model_b), dist, m, seed)
}

/// One trial of a repeated-fit experiment.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRisk {
    pub trial: usize,
    pub seed: u64,
    /// Polynomial degree or kernel band, whichever the learner used; NaN for
    /// the oracle.
    #[serde(with = "crate::jsonfmt")]
    pub degree_or_band: f64,
    #[serde(with = "crate::jsonfmt")]
    pub empirical_risk: f64,
    pub expected: RiskEstimate,
    pub degenerate: bool,
    /// Fit failure, recorded instead of aborting the sweep.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeanRiskReport {
    /// Mean expected risk over successful trials (NaN if none succeeded).
    #[serde(with = "crate::jsonfmt")]
    pub mean: f64,
    /// Median alongside the mean: small-N trials have heavy right tails when
    /// a draw lands ill-conditioned.
    #[serde(with = "crate::jsonfmt")]
    pub median: f64,
    pub per_trial: Vec<TrialRisk>,
}

pub(crate) fn median_of(values: &mut Vec<f64>) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Expected risk averaged over T independently drawn size-N training sets.
/// Trial t uses the derived seed hash(seed, t) for its dataset and its
/// evaluation stream; failures are recorded per trial.
pub fn mean_expected_risk(
    target: &Target,
    dist: &InputDistribution,
    learner: &LearnerSpec,
    n: usize,
    trials: usize,
    m: usize,
    seed: u64,
) -> Result<MeanRiskReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    if target.k() != dist.k() {
        return Err(Error::DimensionMismatch(format!(
            "target is {}-dimensional, distribution is {}-dimensional",
            target.k(),
            dist.k()
        )));
    }
    let per_trial: Vec<TrialRisk> = (0..trials)
        .into_par_iter()
        .map(|t| run_trial(target, dist, learner, n, m, seed, t))
        .collect();
    let mut risks: Vec<f64> = per_trial
        .iter()
        .filter(|t| t.error.is_none())
        .map(|t| t.expected.mean)
        .collect();
    let mean = if risks.is_empty() {
        f64::NAN
    } else {
        neumaier_sum(&risks) / risks.len() as f64
    };
    let median = median_of(&mut risks);
    Ok(MeanRiskReport {
        mean,
        median,
        per_trial,
    })
}

pub(crate) fn run_trial(
    target: &Target,
    dist: &InputDistribution,
    learner: &LearnerSpec,
    n: usize,
    m: usize,
    seed: u64,
    t: usize,
) -> TrialRisk {
    let trial_seed = stream_key(seed, ns::TRIAL, t as u64);
    let failed = |msg: String| TrialRisk {
        trial: t,
        seed: trial_seed,
        degree_or_band: f64::NAN,
        empirical_risk: f64::NAN,
        expected: RiskEstimate {
            mean: f64::NAN,
            std_error: f64::NAN,
            n_eval: 0,
            seed: trial_seed,
        },
        degenerate: false,
        error: Some(msg),
    };
    let dataset = match make_dataset(target, dist, n, trial_seed) {
        Ok(d) => d,
        Err(e) => return failed(e.to_string()),
    };
    if learner.is_oracle() {
        let expected = match expected_risk_mc_predictor(
            Predictor::Target(target),
            target,
            dist,
            m,
            trial_seed,
        ) {
            Ok(r) => r,
            Err(e) => return failed(e.to_string()),
        };
        return TrialRisk {
            trial: t,
            seed: trial_seed,
            degree_or_band: f64::NAN,
            empirical_risk: 0.0,
            expected,
            degenerate: false,
            error: None,
        };
    }
    let model = match learner.fit_model(&dataset) {
        Ok(m) => m,
        Err(e) => return failed(e.to_string()),
    };
    let emp = match empirical_risk(&model, &dataset) {
        Ok(v) => v,
        Err(e) => return failed(e.to_string()),
    };
    let expected = match expected_risk_mc(&model, target, dist, m, trial_seed) {
        Ok(r) => r,
        Err(e) => return failed(e.to_string()),
    };
    TrialRisk {
        trial: t,
        seed: trial_seed,
        degree_or_band: model.degree_or_band(),
        empirical_risk: emp,
        expected,
        degenerate: model.degenerate(),
        error: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Theorem2,
    Diagonal,
    Hypercube,
    Approx,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct BoundInputs {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_k: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_k: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
    pub h: f64,
}

/// A truncation-error bound in both linear and log form. `bound` equals
/// `exp(log_bound)`, degrading to the `inf` token when that overflows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    #[serde(with = "crate::jsonfmt")]
    pub bound: f64,
    pub log_bound: f64,
    pub n: u32,
    pub kind: BoundKind,
    pub inputs: BoundInputs,
}

fn check_positive(pairs: &[(&str, f64)]) -> Result<()> {
    for (name, v) in pairs {
        if !(*v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "{name} must be positive and finite, got {v}"
            )));
        }
    }
    Ok(())
}

/// The degree-n truncation bound for an isotropic Gaussian input density:
/// [(√2·K·B·σ)^{n+1} · H / √((n+1)!)]², evaluated as
/// log = 2[(n+1)(½ln2 + lnK + lnB + lnσ) + lnH] − ln((n+1)!).
pub fn theorem2_bound(k: usize, band: f64, sigma: f64, h: f64, n: u32) -> Result<BoundReport> {
    if k < 1 {
        return Err(Error::InvalidParameter("K must be ≥ 1".into()));
    }
    check_positive(&[("B", band), ("sigma", sigma), ("H", h)])?;
    let log_bound = theorem2_log_term(k, band, sigma, h, n);
    Ok(BoundReport {
        bound: log_bound.exp(),
        log_bound,
        n,
        kind: BoundKind::Theorem2,
        inputs: BoundInputs {
            k,
            b: Some(band),
            sigma: Some(sigma),
            h,
            ..Default::default()
        },
    })
}

fn theorem2_log_term(k: usize, band: f64, sigma: f64, h: f64, n: u32) -> f64 {
    let np1 = n as f64 + 1.0;
    2.0 * (np1 * (0.5 * std::f64::consts::LN_2 + (k as f64).ln() + band.ln() + sigma.ln())
        + h.ln())
        - log_factorial(n as u64 + 1)
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().fold(f64::NEG_INFINITY, |m, t| m.max(*t));
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    max + sum.ln()
}

/// Per-axis variant for zero-mean diagonal-covariance Gaussian inputs:
/// (1/K) Σ_k [(√2·K·B_k·σ_k)^{n+1} H / √((n+1)!)]², log-space throughout.
/// Axes with B_k·σ_k = 0 contribute nothing.
pub fn diagonal_bound(
    k: usize,
    b_k: &[f64],
    sigma_k: &[f64],
    h: f64,
    n: u32,
) -> Result<BoundReport> {
    if b_k.len() != k || sigma_k.len() != k || k < 1 {
        return Err(Error::DimensionMismatch(format!(
            "expected {k} per-axis bands and spreads, got {} and {}",
            b_k.len(),
            sigma_k.len()
        )));
    }
    check_positive(&[("H", h)])?;
    for (name, vs) in [("B_k", b_k), ("sigma_k", sigma_k)] {
        if vs.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "{name} entries must be finite and ≥ 0"
            )));
        }
    }
    let terms: Vec<f64> = b_k
        .iter()
        .zip(sigma_k)
        .map(|(b, s)| {
            if b * s == 0.0 {
                f64::NEG_INFINITY
            } else {
                theorem2_log_term(k, *b, *s, h, n)
            }
        })
        .collect();
    let log_bound = log_sum_exp(&terms) - (k as f64).ln();
    Ok(BoundReport {
        bound: log_bound.exp(),
        log_bound,
        n,
        kind: BoundKind::Diagonal,
        inputs: BoundInputs {
            k,
            b_k: Some(b_k.to_vec()),
            sigma_k: Some(sigma_k.to_vec()),
            h,
            ..Default::default()
        },
    })
}

/// Bound for inputs confined to the hypercube [−U, U]^K:
/// [(K·B·U)^{n+1} · H / (n+1)!]².
pub fn hypercube_bound(k: usize, band: f64, u: f64, h: f64, n: u32) -> Result<BoundReport> {
    if k < 1 {
        return Err(Error::InvalidParameter("K must be ≥ 1".into()));
    }
    check_positive(&[("B", band), ("U", u), ("H", h)])?;
    let np1 = n as f64 + 1.0;
    let log_bound = 2.0
        * (np1 * ((k as f64).ln() + band.ln() + u.ln()) + h.ln() - log_factorial(n as u64 + 1));
    Ok(BoundReport {
        bound: log_bound.exp(),
        log_bound,
        n,
        kind: BoundKind::Hypercube,
        inputs: BoundInputs {
            k,
            b: Some(band),
            u: Some(u),
            h,
            ..Default::default()
        },
    })
}

/// Result of the aliasing trade-off search: treat the target as bandlimited
/// by a candidate band B, pay the spectral tail ε²(B) on top of the
/// truncation bound, and minimize over the (finite, exact) grid of component
/// norms.
#[derive(Debug, Clone, Serialize)]
pub struct ApproxBandReport {
    pub epsilon_star: f64,
    pub b_star: f64,
    #[serde(with = "crate::jsonfmt")]
    pub bound: f64,
    pub n: u32,
    /// The tail-energy term is added to a squared-error bound on the
    /// assumption that spectral energy and risk share units; recorded here
    /// because the identification is asserted, not derived.
    pub units_assumed_compatible: bool,
}

/// Minimizes theorem2_bound(K, B, σ, H, n) + ε²(B) over the exact grid of
/// distinct component norms (the objective is piecewise constant between
/// them, so the grid search is exact, not approximate).
pub fn approx_band_bound(
    target: &CosineMixtureTarget,
    sigma: f64,
    h: f64,
    n: u32,
) -> Result<ApproxBandReport> {
    if target.components.is_empty() {
        return Err(Error::InvalidParameter("target has no components".into()));
    }
    check_positive(&[("sigma", sigma), ("H", h)])?;
    let mut norms: Vec<f64> = target.components.iter().map(|c| c.norm()).collect();
    norms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    norms.dedup();
    let mut best: Option<(f64, f64, f64)> = None; // (objective, B, ε²)
    for &b in &norms {
        let eps2 = out_of_band_energy(target, b);
        let truncation = if b > 0.0 {
            theorem2_bound(target.k, b, sigma, h, n)?.bound
        } else {
            0.0
        };
        let objective = truncation + eps2;
        let better = match &best {
            None => true,
            Some((obj, _, _)) => objective < *obj,
        };
        if better {
            best = Some((objective, b, eps2));
        }
    }
    let (bound, b_star, eps2) = best.unwrap();
    Ok(ApproxBandReport {
        epsilon_star: eps2.sqrt(),
        b_star,
        bound,
        n,
        units_assumed_compatible: true,
    })
}

/// The difficulty product K·B·σ; sample requirements scale with it.
pub fn difficulty(k: usize, band: f64, sigma: f64) -> f64 {
    k as f64 * band * sigma
}
