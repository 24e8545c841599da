//! Seeded experiment loops: sweep, equivalence, floor demo.
//!
//! Trial t of every experiment derives its seed as hash(master, "trial", t),
//! shared across all N — so the size-8 dataset of trial 3 is a prefix of its
//! size-16 dataset, and growing the ladder never reshuffles earlier rows.
//! Cells are dispatched to the rayon pool; records land in a preallocated
//! order (N-major, then trial), so thread counts change wall time only.
//!
//! Per-trial wall time is recorded only when timing is requested;
//! otherwise the column is 0 so that reruns are byte-identical.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use bandlab::jsonfmt::fmt_f64;
use bandlab::rng::{ns, stream_key};
use bandlab::{
    empirical_risk, expected_risk_mc, expected_risk_mc_predictor, hypercube_bound, make_dataset,
    model_distance_mc, theorem2_bound, InputDistribution, LearnerSpec, Model, Predictor,
    Target,
};

use crate::config::{EquivConfig, FloorConfig, SweepConfig};
use crate::{CliError, CliResult};

pub const SWEEP_CSV_HEADER: &str =
    "trial,N,degree,seed,emp_risk,exp_risk,exp_risk_se,bound_t2,bound_cube,difficulty,degenerate,wall_ms";
pub const EQUIV_CSV_HEADER: &str =
    "trial,N,seed,emp_risk_a,emp_risk_b,distance,distance_se,degenerate_a,degenerate_b,wall_ms";
pub const FLOOR_CSV_HEADER: &str = "learner,trial,N,seed,emp_risk,exp_risk,exp_risk_se,wall_ms";

/// One sweep row. Numeric columns are NaN (the `nan` token) when undefined:
/// failed fits, bandless targets, or bounds that do not apply to the
/// learner/distribution at hand.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    #[serde(rename = "N")]
    pub n: usize,
    /// Polynomial degree or kernel band actually used.
    #[serde(with = "bandlab::jsonfmt")]
    pub degree: f64,
    pub seed: u64,
    #[serde(with = "bandlab::jsonfmt")]
    pub emp_risk: f64,
    #[serde(with = "bandlab::jsonfmt")]
    pub exp_risk: f64,
    #[serde(with = "bandlab::jsonfmt")]
    pub exp_risk_se: f64,
    #[serde(with = "bandlab::jsonfmt")]
    pub bound_t2: f64,
    #[serde(with = "bandlab::jsonfmt")]
    pub bound_cube: f64,
    #[serde(with = "bandlab::jsonfmt")]
    pub difficulty: f64,
    pub degenerate: bool,
    pub wall_ms: u64,
}

impl TrialRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.trial,
            self.n,
            fmt_f64(self.degree),
            self.seed,
            fmt_f64(self.emp_risk),
            fmt_f64(self.exp_risk),
            fmt_f64(self.exp_risk_se),
            fmt_f64(self.bound_t2),
            fmt_f64(self.bound_cube),
            fmt_f64(self.difficulty),
            self.degenerate,
            self.wall_ms
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPerN {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(with = "bandlab::jsonfmt")]
    pub median_exp_risk: f64,
    #[serde(with = "bandlab::jsonfmt")]
    pub mean_exp_risk: f64,
    #[serde(with = "bandlab::jsonfmt")]
    pub median_emp_risk: f64,
    pub degenerate_trials: usize,
    pub failed_trials: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub schema_version: u32,
    pub kind: &'static str,
    pub target_id: String,
    pub seed: u64,
    pub trials: usize,
    pub eval_points: usize,
    pub per_n: Vec<SweepPerN>,
}

pub struct SweepOutput {
    pub records: Vec<TrialRecord>,
    pub summary: SweepSummary,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Spread parameter of the input law, the σ (or U) that enters KBσ.
fn dist_spread(dist: &InputDistribution) -> f64 {
    match dist {
        InputDistribution::IsotropicGaussian { sigma, .. } => *sigma,
        InputDistribution::DiagonalGaussian { sigmas } => {
            sigmas.iter().fold(0.0f64, |m, s| m.max(*s))
        }
        InputDistribution::BoundedUniform { half_width, .. } => *half_width,
    }
}

fn declared_band_h(target: &Target) -> Option<(f64, f64)> {
    match target {
        Target::Cosine(c) if c.declared_band.is_finite() => Some((c.declared_band, c.h_bound)),
        _ => None,
    }
}

fn sweep_trial(
    target: &Target,
    dist: &InputDistribution,
    learner: &LearnerSpec,
    n: usize,
    m: usize,
    master_seed: u64,
    trial: usize,
    timing: bool,
) -> TrialRecord {
    let started = timing.then(Instant::now);
    let trial_seed = stream_key(master_seed, ns::TRIAL, trial as u64);
    let band_h = declared_band_h(target);
    let mut rec = TrialRecord {
        trial,
        n,
        degree: f64::NAN,
        seed: trial_seed,
        emp_risk: f64::NAN,
        exp_risk: f64::NAN,
        exp_risk_se: f64::NAN,
        bound_t2: f64::NAN,
        bound_cube: f64::NAN,
        difficulty: band_h
            .map(|(b, _)| target.k() as f64 * b * dist_spread(dist))
            .unwrap_or(f64::NAN),
        degenerate: false,
        wall_ms: 0,
    };
    let finish = |mut rec: TrialRecord| {
        rec.wall_ms = started.map(|s| s.elapsed().as_millis() as u64).unwrap_or(0);
        rec
    };
    let dataset = match make_dataset(target, dist, n, trial_seed) {
        Ok(d) => d,
        Err(_) => return finish(rec),
    };
    if learner.is_oracle() {
        rec.emp_risk = 0.0;
        if let Ok(est) =
            expected_risk_mc_predictor(Predictor::Target(target), target, dist, m, trial_seed)
        {
            rec.exp_risk = est.mean;
            rec.exp_risk_se = est.std_error;
        }
        return finish(rec);
    }
    let model = match learner.fit_model(&dataset) {
        Ok(m) => m,
        Err(_) => return finish(rec),
    };
    rec.degree = model.degree_or_band();
    rec.degenerate = model.degenerate();
    if let Ok(v) = empirical_risk(&model, &dataset) {
        rec.emp_risk = v;
    }
    if let Ok(est) = expected_risk_mc(&model, target, dist, m, trial_seed) {
        rec.exp_risk = est.mean;
        rec.exp_risk_se = est.std_error;
    }
    // Truncation bounds apply at a polynomial degree, with the flavor picked
    // by the input law; other rows keep the nan marker.
    if let (Model::Poly(p), Some((band, h))) = (&model, band_h) {
        match dist {
            InputDistribution::IsotropicGaussian { sigma, .. } => {
                if let Ok(b) = theorem2_bound(target.k(), band, *sigma, h, p.degree) {
                    rec.bound_t2 = b.bound;
                }
            }
            InputDistribution::BoundedUniform { half_width, .. } => {
                if let Ok(b) = hypercube_bound(target.k(), band, *half_width, h, p.degree) {
                    rec.bound_cube = b.bound;
                }
            }
            InputDistribution::DiagonalGaussian { .. } => {}
        }
    }
    finish(rec)
}

pub fn run_sweep(config: &SweepConfig, timing: bool) -> CliResult<SweepOutput> {
    config.validate()?;
    let target = config.target.load()?;
    config.distribution.validate().map_err(CliError::from)?;
    if target.k() != config.distribution.k() {
        return Err(bandlab::Error::DimensionMismatch(format!(
            "target is {}-dimensional, distribution is {}-dimensional",
            target.k(),
            config.distribution.k()
        ))
        .into());
    }
    let cells: Vec<(usize, usize)> = config
        .n_list
        .iter()
        .flat_map(|&n| (0..config.trials).map(move |t| (n, t)))
        .collect();
    let records: Vec<TrialRecord> = cells
        .par_iter()
        .map(|&(n, t)| {
            sweep_trial(
                &target,
                &config.distribution,
                &config.learner,
                n,
                config.eval_points,
                config.seed,
                t,
                timing,
            )
        })
        .collect();
    let per_n = config
        .n_list
        .iter()
        .map(|&n| {
            let rows: Vec<&TrialRecord> = records.iter().filter(|r| r.n == n).collect();
            let ok: Vec<&&TrialRecord> = rows.iter().filter(|r| !r.exp_risk.is_nan()).collect();
            let exp: Vec<f64> = ok.iter().map(|r| r.exp_risk).collect();
            let emp: Vec<f64> = ok.iter().map(|r| r.emp_risk).collect();
            SweepPerN {
                n,
                median_exp_risk: median(exp.clone()),
                mean_exp_risk: mean(&exp),
                median_emp_risk: median(emp),
                degenerate_trials: rows.iter().filter(|r| r.degenerate).count(),
                failed_trials: rows.len() - ok.len(),
            }
        })
        .collect();
    let summary = SweepSummary {
        schema_version: 1,
        kind: "sweep",
        target_id: target.content_id(),
        seed: config.seed,
        trials: config.trials,
        eval_points: config.eval_points,
        per_n,
    };
    Ok(SweepOutput { records, summary })
}

pub fn sweep_csv(records: &[TrialRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivRecord {
    pub trial: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
    #[serde(with = "bandlab::jsonfmt")]
    pub emp_risk_a: f64,
    #[serde(with = "bandlab::jsonfmt")]
    pub emp_risk_b: f64,
    #[serde(with = "bandlab::jsonfmt")]
    pub distance: f64,
    #[serde(with = "bandlab::jsonfmt")]
    pub distance_se: f64,
    pub degenerate_a: bool,
    pub degenerate_b: bool,
    pub wall_ms: u64,
}

impl EquivRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.trial,
            self.n,
            self.seed,
            fmt_f64(self.emp_risk_a),
            fmt_f64(self.emp_risk_b),
            fmt_f64(self.distance),
            fmt_f64(self.distance_se),
            self.degenerate_a,
            self.degenerate_b,
            self.wall_ms
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivPerN {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(with = "bandlab::jsonfmt")]
    pub median_distance: f64,
    #[serde(with = "bandlab::jsonfmt")]
    pub median_emp_risk_a: f64,
    #[serde(with = "bandlab::jsonfmt")]
    pub median_emp_risk_b: f64,
    pub failed_trials: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivSummary {
    pub schema_version: u32,
    pub kind: &'static str,
    pub target_id: String,
    pub seed: u64,
    pub trials: usize,
    pub eval_points: usize,
    pub per_n: Vec<EquivPerN>,
}

pub struct EquivOutput {
    pub records: Vec<EquivRecord>,
    pub summary: EquivSummary,
}

fn equiv_trial(
    target: &Target,
    config: &EquivConfig,
    n: usize,
    trial: usize,
    timing: bool,
) -> EquivRecord {
    let started = timing.then(Instant::now);
    let trial_seed = stream_key(config.seed, ns::TRIAL, trial as u64);
    let mut rec = EquivRecord {
        trial,
        n,
        seed: trial_seed,
        emp_risk_a: f64::NAN,
        emp_risk_b: f64::NAN,
        distance: f64::NAN,
        distance_se: f64::NAN,
        degenerate_a: false,
        degenerate_b: false,
        wall_ms: 0,
    };
    let finish = |mut rec: EquivRecord| {
        rec.wall_ms = started.map(|s| s.elapsed().as_millis() as u64).unwrap_or(0);
        rec
    };
    let dist = &config.distribution;
    let dataset = match make_dataset(target, dist, n, trial_seed) {
        Ok(d) => d,
        Err(_) => return finish(rec),
    };
    let model_a = config.learner_a.fit_model(&dataset);
    let model_b = config.learner_b.fit_model(&dataset);
    if let Ok(a) = &model_a {
        rec.degenerate_a = a.degenerate();
        if let Ok(v) = empirical_risk(a, &dataset) {
            rec.emp_risk_a = v;
        }
    }
    if let Ok(b) = &model_b {
        rec.degenerate_b = b.degenerate();
        if let Ok(v) = empirical_risk(b, &dataset) {
            rec.emp_risk_b = v;
        }
    }
    if let (Ok(a), Ok(b)) = (&model_a, &model_b) {
        if let Ok(est) = model_distance_mc(a, b, dist, config.eval_points, trial_seed) {
            rec.distance = est.mean;
            rec.distance_se = est.std_error;
        }
    }
    finish(rec)
}

pub fn run_equivalence(config: &EquivConfig, timing: bool) -> CliResult<EquivOutput> {
    config.validate()?;
    let target = config.target.load()?;
    config.distribution.validate().map_err(CliError::from)?;
    if target.k() != config.distribution.k() {
        return Err(bandlab::Error::DimensionMismatch(format!(
            "target is {}-dimensional, distribution is {}-dimensional",
            target.k(),
            config.distribution.k()
        ))
        .into());
    }
    let cells: Vec<(usize, usize)> = config
        .n_list
        .iter()
        .flat_map(|&n| (0..config.trials).map(move |t| (n, t)))
        .collect();
    let records: Vec<EquivRecord> = cells
        .par_iter()
        .map(|&(n, t)| equiv_trial(&target, config, n, t, timing))
        .collect();
    let per_n = config
        .n_list
        .iter()
        .map(|&n| {
            let rows: Vec<&EquivRecord> = records.iter().filter(|r| r.n == n).collect();
            let ok: Vec<&&EquivRecord> = rows.iter().filter(|r| !r.distance.is_nan()).collect();
            EquivPerN {
                n,
                median_distance: median(ok.iter().map(|r| r.distance).collect()),
                median_emp_risk_a: median(ok.iter().map(|r| r.emp_risk_a).collect()),
                median_emp_risk_b: median(ok.iter().map(|r| r.emp_risk_b).collect()),
                failed_trials: rows.len() - ok.len(),
            }
        })
        .collect();
    let summary = EquivSummary {
        schema_version: 1,
        kind: "equivalence",
        target_id: target.content_id(),
        seed: config.seed,
        trials: config.trials,
        eval_points: config.eval_points,
        per_n,
    };
    Ok(EquivOutput { records, summary })
}

pub fn equiv_csv(records: &[EquivRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(EQUIV_CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct FloorRecord {
    pub learner: String,
    pub trial: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
    #[serde(with = "bandlab::jsonfmt")]
    pub emp_risk: f64,
    #[serde(with = "bandlab::jsonfmt")]
    pub exp_risk: f64,
    #[serde(with = "bandlab::jsonfmt")]
    pub exp_risk_se: f64,
    pub wall_ms: u64,
}

impl FloorRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.learner,
            self.trial,
            self.n,
            self.seed,
            fmt_f64(self.emp_risk),
            fmt_f64(self.exp_risk),
            fmt_f64(self.exp_risk_se),
            self.wall_ms
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FloorPerCell {
    pub learner: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(with = "bandlab::jsonfmt")]
    pub median_exp_risk: f64,
    #[serde(with = "bandlab::jsonfmt")]
    pub median_emp_risk: f64,
    pub failed_trials: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct FloorSummary {
    pub schema_version: u32,
    pub kind: &'static str,
    pub target_id: String,
    pub seed: u64,
    pub trials: usize,
    pub eval_points: usize,
    /// Variance of the per-cell uniform(−1,1) values: the risk any learner
    /// approaches once evaluation points miss the training cells.
    pub analytic_floor: f64,
    pub per_cell: Vec<FloorPerCell>,
}

pub struct FloorOutput {
    pub records: Vec<FloorRecord>,
    pub summary: FloorSummary,
}

pub fn run_floor_demo(config: &FloorConfig, timing: bool) -> CliResult<FloorOutput> {
    config.validate()?;
    let target = config.target.load()?;
    if !matches!(target, Target::HashNoise(_)) {
        return Err(bandlab::Error::InvalidParameter(
            "the floor demo needs a hash-noise target".into(),
        )
        .into());
    }
    config.distribution.validate().map_err(CliError::from)?;
    if target.k() != config.distribution.k() {
        return Err(bandlab::Error::DimensionMismatch(format!(
            "target is {}-dimensional, distribution is {}-dimensional",
            target.k(),
            config.distribution.k()
        ))
        .into());
    }
    let cells: Vec<(usize, usize, usize)> = config
        .learners
        .iter()
        .enumerate()
        .flat_map(|(li, _)| {
            config
                .n_list
                .iter()
                .flat_map(move |&n| (0..config.trials).map(move |t| (li, n, t)))
        })
        .collect();
    let records: Vec<FloorRecord> = cells
        .par_iter()
        .map(|&(li, n, t)| {
            let named = &config.learners[li];
            let sweep = sweep_trial(
                &target,
                &config.distribution,
                &named.learner,
                n,
                config.eval_points,
                config.seed,
                t,
                timing,
            );
            FloorRecord {
                learner: named.name.clone(),
                trial: t,
                n,
                seed: sweep.seed,
                emp_risk: sweep.emp_risk,
                exp_risk: sweep.exp_risk,
                exp_risk_se: sweep.exp_risk_se,
                wall_ms: sweep.wall_ms,
            }
        })
        .collect();
    let per_cell = config
        .learners
        .iter()
        .flat_map(|named| {
            let records = &records;
            config.n_list.iter().map(move |&n| {
                let rows: Vec<&FloorRecord> = records
                    .iter()
                    .filter(|r| r.learner == named.name && r.n == n)
                    .collect();
                let ok: Vec<&&FloorRecord> =
                    rows.iter().filter(|r| !r.exp_risk.is_nan()).collect();
                FloorPerCell {
                    learner: named.name.clone(),
                    n,
                    median_exp_risk: median(ok.iter().map(|r| r.exp_risk).collect()),
                    median_emp_risk: median(ok.iter().map(|r| r.emp_risk).collect()),
                    failed_trials: rows.len() - ok.len(),
                }
            })
        })
        .collect();
    let summary = FloorSummary {
        schema_version: 1,
        kind: "floor",
        target_id: target.content_id(),
        seed: config.seed,
        trials: config.trials,
        eval_points: config.eval_points,
        analytic_floor: 1.0 / 3.0,
        per_cell,
    };
    Ok(FloorOutput { records, summary })
}

pub fn floor_csv(records: &[FloorRecord]) -> String {
    let mut out = String::with_capacity(48 * (records.len() + 1));
    out.push_str(FLOOR_CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}
