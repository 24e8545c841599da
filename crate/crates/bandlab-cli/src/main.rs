//! `bandlab`: synthesize targets, draw datasets, fit interpolants, measure
//! risks, evaluate bounds, and run seeded sweeps.
//!
//! Exit codes: 0 success, 1 runtime error (with an error JSON on stderr),
//! 2 usage error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use bandlab::jsonfmt::fmt_f64;
use bandlab::{
    cell_occupancy, diagonal_bound, empirical_risk, expected_risk_mc, hypercube_bound,
    make_dataset, occupancy_probability, synth_approx, synth_nonbandlimited, synth_strict,
    theorem2_bound, Dataset, Error, InputDistribution, LearnerSpec, Model, RiskEstimate, Target,
};
use bandlab_cli::emit::{write_atomic, write_json_atomic};
use bandlab_cli::{
    equiv_csv, floor_csv, load_config, run_equivalence, run_floor_demo, run_sweep, sweep_csv,
    CliError, CliResult, EquivConfig, FloorConfig, SweepConfig,
};

#[derive(Parser)]
#[command(
    name = "bandlab",
    version,
    about = "Bandlimited-target learning lab: targets, interpolants, risks, bounds"
)]
struct Cli {
    /// Worker threads (default: $BANDLAB_THREADS, then all cores). Changes
    /// wall time only, never output bytes.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Record real per-trial wall times. Off by default so identical runs
    /// produce byte-identical CSV (the wall_ms column stays 0).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthesize a target and write it as JSON. Pick exactly one of --B
    /// (strictly bandlimited), --spectral-std (approximately bandlimited),
    /// or --cell-resolution (hash noise).
    Synth {
        /// Input dimension.
        #[arg(long = "K")]
        k: usize,
        /// Euclidean band limit for strict synthesis.
        #[arg(long = "B")]
        band: Option<f64>,
        /// Gaussian frequency spread for approximate synthesis.
        #[arg(long)]
        spectral_std: Option<f64>,
        /// Quantization cell side for the hash-noise counterexample.
        #[arg(long)]
        cell_resolution: Option<f64>,
        /// Number of cosine components.
        #[arg(long = "J", default_value_t = 8)]
        components: usize,
        /// Certified sup bound H = Σ|a_j|.
        #[arg(long = "H", default_value_t = 1.0)]
        sup_bound: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw a labeled dataset from a target file. Pick one of --sigma
    /// (isotropic Gaussian inputs) or --U (bounded uniform inputs).
    Sample {
        #[arg(long)]
        target: PathBuf,
        /// Sample count.
        #[arg(long = "n")]
        n: usize,
        /// Isotropic Gaussian input spread.
        #[arg(long)]
        sigma: Option<f64>,
        /// Bounded-uniform half width.
        #[arg(long = "U")]
        half_width: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a learner ("poly" or "sinc") to a dataset; write the model JSON
    /// and print fit diagnostics.
    Fit {
        #[arg(long)]
        data: PathBuf,
        /// "poly" or "sinc".
        #[arg(long)]
        learner: String,
        /// Polynomial degree (default: largest that fits the sample count).
        #[arg(long)]
        degree: Option<u32>,
        #[arg(long)]
        degree_cap: Option<u32>,
        /// Reject degrees whose coefficient count exceeds the sample count.
        #[arg(long)]
        exact: bool,
        /// Sinc kernel band B′.
        #[arg(long = "B")]
        band: Option<f64>,
        /// Sinc ridge λ (default 1e-10; escalated on solver failure).
        #[arg(long)]
        ridge: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo expected risk of a model file against a target, and the
    /// empirical risk on a dataset when --data is given.
    Risk {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
        /// Evaluation points.
        #[arg(long = "M", default_value_t = 20_000)]
        eval_points: usize,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long = "U")]
        half_width: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Evaluate a truncation bound; prints the linear value (or the full
    /// report with --json).
    Bound {
        /// "theorem2", "hypercube", or "diagonal".
        #[arg(long, default_value = "theorem2")]
        kind: String,
        #[arg(long = "K")]
        k: usize,
        #[arg(long = "B")]
        band: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        /// Per-axis bands for the diagonal bound, comma-separated.
        #[arg(long = "B-k", value_delimiter = ',')]
        band_per_dim: Option<Vec<f64>>,
        /// Per-axis spreads for the diagonal bound, comma-separated.
        #[arg(long = "sigma-k", value_delimiter = ',')]
        sigma_per_dim: Option<Vec<f64>>,
        #[arg(long = "U")]
        half_width: Option<f64>,
        #[arg(long = "H")]
        sup_bound: f64,
        /// Truncation degree n.
        #[arg(long = "n")]
        n: u32,
        #[arg(long)]
        json: bool,
    },
    /// Seeded sweep over training sizes: writes the CSV, prints summary JSON.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit two learners on shared datasets and measure their L² distance.
    Equiv {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Cell-occupancy diagnostics: coverage of a dataset (--data with --B,
    /// --U) or the exact no-empty-cell probability (--masses with --N).
    Coverage {
        #[arg(long)]
        data: Option<PathBuf>,
        /// Band defining the π/B cell side.
        #[arg(long = "B")]
        band: Option<f64>,
        /// Half width of the covered cube (default: the dataset's, when its
        /// inputs are bounded uniform).
        #[arg(long = "U")]
        half_width: Option<f64>,
        /// Cell masses for the analytic probability, comma-separated.
        #[arg(long, value_delimiter = ',')]
        masses: Option<Vec<f64>>,
        /// Draw count for the analytic probability.
        #[arg(long = "N")]
        draws: Option<u64>,
    },
    /// Hash-noise risk-floor demonstration: writes the CSV, prints summary.
    Floor {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| {
        std::env::var("BANDLAB_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    });
    if let Some(t) = threads {
        // Ignore failure: tests may run several commands in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match run(cli.cmd, cli.timing) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::json!({"error": {"kind": e.kind(), "message": e.to_string()}})
            );
            ExitCode::from(1)
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    Error::InvalidParameter(msg.into()).into()
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        context: format!("reading {what} {}", path.display()),
        source,
    })?;
    Ok(serde_json::from_str(&text).map_err(Error::from)?)
}

/// Builds the input law from the mutually exclusive --sigma / --U flags.
fn dist_from_flags(k: usize, sigma: Option<f64>, half_width: Option<f64>) -> CliResult<InputDistribution> {
    let dist = match (sigma, half_width) {
        (Some(sigma), None) => InputDistribution::IsotropicGaussian { k, sigma },
        (None, Some(half_width)) => InputDistribution::BoundedUniform { k, half_width },
        _ => return Err(invalid("give exactly one of --sigma or --U")),
    };
    dist.validate()?;
    Ok(dist)
}

#[derive(Serialize)]
struct FitDiag {
    kind: &'static str,
    #[serde(rename = "N")]
    n: usize,
    #[serde(with = "bandlab::jsonfmt")]
    degree_or_band: f64,
    degenerate: bool,
    #[serde(with = "bandlab::jsonfmt")]
    condition_estimate: f64,
    #[serde(with = "bandlab::jsonfmt")]
    train_residual: f64,
}

#[derive(Serialize)]
struct RiskOut {
    expected: RiskEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    empirical: Option<f64>,
}

fn run(cmd: Cmd, timing: bool) -> CliResult<()> {
    match cmd {
        Cmd::Synth {
            k,
            band,
            spectral_std,
            cell_resolution,
            components,
            sup_bound,
            seed,
            out,
        } => {
            let target = match (band, spectral_std, cell_resolution) {
                (Some(b), None, None) => {
                    Target::Cosine(synth_strict(k, b, components, sup_bound, seed)?)
                }
                (None, Some(s), None) => {
                    Target::Cosine(synth_approx(k, s, components, sup_bound, seed)?)
                }
                (None, None, Some(c)) => Target::HashNoise(synth_nonbandlimited(k, c, seed)?),
                _ => {
                    return Err(invalid(
                        "give exactly one of --B, --spectral-std, --cell-resolution",
                    ))
                }
            };
            write_json_atomic(&out, &target)?;
            println!(
                "{}",
                serde_json::json!({"path": out.display().to_string(), "id": target.content_id()})
            );
            Ok(())
        }
        Cmd::Sample {
            target,
            n,
            sigma,
            half_width,
            seed,
            out,
        } => {
            let target: Target = read_json(&target, "target")?;
            let dist = dist_from_flags(target.k(), sigma, half_width)?;
            let dataset = make_dataset(&target, &dist, n, seed)?;
            write_json_atomic(&out, &dataset)?;
            println!(
                "{}",
                serde_json::json!({"path": out.display().to_string(), "N": n, "target_id": dataset.target_id})
            );
            Ok(())
        }
        Cmd::Fit {
            data,
            learner,
            degree,
            degree_cap,
            exact,
            band,
            ridge,
            out,
        } => {
            let dataset: Dataset = read_json(&data, "dataset")?;
            let spec = match learner.as_str() {
                "poly" => {
                    if band.is_some() || ridge.is_some() {
                        return Err(invalid("--B/--ridge apply to the sinc learner only"));
                    }
                    LearnerSpec::Poly {
                        degree,
                        degree_cap,
                        exact,
                    }
                }
                "sinc" => {
                    if degree.is_some() || degree_cap.is_some() || exact {
                        return Err(invalid(
                            "--degree/--degree-cap/--exact apply to the poly learner only",
                        ));
                    }
                    LearnerSpec::Sinc {
                        band: band.ok_or_else(|| invalid("the sinc learner needs --B"))?,
                        ridge: ridge.unwrap_or(1e-10),
                    }
                }
                other => return Err(invalid(format!("unknown learner {other:?}"))),
            };
            let model = spec.fit_model(&dataset)?;
            write_json_atomic(&out, &model)?;
            let diag = match &model {
                Model::Poly(p) => FitDiag {
                    kind: "poly",
                    n: dataset.len(),
                    degree_or_band: p.degree as f64,
                    degenerate: p.degenerate,
                    condition_estimate: p.condition_estimate,
                    train_residual: p.residual_norm,
                },
                Model::Sinc(s) => FitDiag {
                    kind: "sinc",
                    n: dataset.len(),
                    degree_or_band: s.band,
                    degenerate: s.degenerate,
                    condition_estimate: s.condition_estimate,
                    train_residual: s.max_train_residual,
                },
            };
            println!("{}", serde_json::to_string(&diag).map_err(Error::from)?);
            Ok(())
        }
        Cmd::Risk {
            model,
            target,
            data,
            eval_points,
            sigma,
            half_width,
            seed,
        } => {
            let model: Model = read_json(&model, "model")?;
            let target: Target = read_json(&target, "target")?;
            let dist = dist_from_flags(target.k(), sigma, half_width)?;
            let expected = expected_risk_mc(&model, &target, &dist, eval_points, seed)?;
            let empirical = match data {
                Some(path) => {
                    let dataset: Dataset = read_json(&path, "dataset")?;
                    Some(empirical_risk(&model, &dataset)?)
                }
                None => None,
            };
            let out = RiskOut {
                expected,
                empirical,
            };
            println!("{}", serde_json::to_string(&out).map_err(Error::from)?);
            Ok(())
        }
        Cmd::Bound {
            kind,
            k,
            band,
            sigma,
            band_per_dim,
            sigma_per_dim,
            half_width,
            sup_bound,
            n,
            json,
        } => {
            let report = match kind.as_str() {
                "theorem2" => theorem2_bound(
                    k,
                    band.ok_or_else(|| invalid("theorem2 bound needs --B"))?,
                    sigma.ok_or_else(|| invalid("theorem2 bound needs --sigma"))?,
                    sup_bound,
                    n,
                )?,
                "hypercube" => hypercube_bound(
                    k,
                    band.ok_or_else(|| invalid("hypercube bound needs --B"))?,
                    half_width.ok_or_else(|| invalid("hypercube bound needs --U"))?,
                    sup_bound,
                    n,
                )?,
                "diagonal" => diagonal_bound(
                    k,
                    &band_per_dim.ok_or_else(|| invalid("diagonal bound needs --B-k"))?,
                    &sigma_per_dim.ok_or_else(|| invalid("diagonal bound needs --sigma-k"))?,
                    sup_bound,
                    n,
                )?,
                other => return Err(invalid(format!("unknown bound kind {other:?}"))),
            };
            if json {
                println!("{}", serde_json::to_string(&report).map_err(Error::from)?);
            } else {
                println!("{}", fmt_f64(report.bound));
            }
            Ok(())
        }
        Cmd::Sweep { config, out, seed } => {
            let mut cfg: SweepConfig = load_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let out = out
                .or(cfg.out.clone())
                .ok_or_else(|| invalid("give --out or set \"out\" in the config"))?;
            let result = run_sweep(&cfg, timing)?;
            write_atomic(&out, sweep_csv(&result.records).as_bytes())?;
            println!(
                "{}",
                serde_json::to_string_pretty(&result.summary).map_err(Error::from)?
            );
            Ok(())
        }
        Cmd::Equiv { config, out, seed } => {
            let mut cfg: EquivConfig = load_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let out = out
                .or(cfg.out.clone())
                .ok_or_else(|| invalid("give --out or set \"out\" in the config"))?;
            let result = run_equivalence(&cfg, timing)?;
            write_atomic(&out, equiv_csv(&result.records).as_bytes())?;
            println!(
                "{}",
                serde_json::to_string_pretty(&result.summary).map_err(Error::from)?
            );
            Ok(())
        }
        Cmd::Coverage {
            data,
            band,
            half_width,
            masses,
            draws,
        } => match (masses, data) {
            (Some(masses), None) => {
                let n = draws.ok_or_else(|| invalid("--masses needs --N"))?;
                let p = occupancy_probability(&masses, n)?;
                println!("{}", fmt_f64(p));
                Ok(())
            }
            (None, Some(path)) => {
                let dataset: Dataset = read_json(&path, "dataset")?;
                let band = band.ok_or_else(|| invalid("coverage needs --B"))?;
                let u = match (half_width, &dataset.distribution) {
                    (Some(u), _) => u,
                    (None, InputDistribution::BoundedUniform { half_width, .. }) => *half_width,
                    _ => {
                        return Err(invalid(
                            "give --U (the dataset's inputs are not bounded uniform)",
                        ))
                    }
                };
                let occ = cell_occupancy(&dataset.inputs, u, band)?;
                println!("{}", serde_json::to_string(&occ).map_err(Error::from)?);
                Ok(())
            }
            _ => Err(invalid("give either --masses with --N, or --data with --B")),
        },
        Cmd::Floor { config, out, seed } => {
            let mut cfg: FloorConfig = load_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let out = out
                .or(cfg.out.clone())
                .ok_or_else(|| invalid("give --out or set \"out\" in the config"))?;
            let result = run_floor_demo(&cfg, timing)?;
            write_atomic(&out, floor_csv(&result.records).as_bytes())?;
            println!(
                "{}",
                serde_json::to_string_pretty(&result.summary).map_err(Error::from)?
            );
            Ok(())
        }
    }
}
