//! Experiment configuration files (JSON).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use bandlab::{Error, InputDistribution, LearnerSpec, Target};

use crate::{CliError, CliResult};

/// A target given inline or as `{"file": "path/to/target.json"}`. File paths
/// are resolved relative to the working directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetSpec {
    File { file: PathBuf },
    Inline(Box<Target>),
}

impl TargetSpec {
    pub fn load(&self) -> CliResult<Target> {
        match self {
            TargetSpec::Inline(t) => Ok((**t).clone()),
            TargetSpec::File { file } => {
                let text = std::fs::read_to_string(file).map_err(|source| CliError::Io {
                    context: format!("reading target file {}", file.display()),
                    source,
                })?;
                Ok(serde_json::from_str(&text).map_err(Error::from)?)
            }
        }
    }
}

fn default_trials() -> usize {
    1
}

fn default_eval_points() -> usize {
    20_000
}

/// Config for `sweep`: one learner, a ladder of training sizes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub target: TargetSpec,
    pub distribution: InputDistribution,
    pub learner: LearnerSpec,
    pub n_list: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_eval_points")]
    pub eval_points: usize,
    #[serde(default)]
    pub seed: u64,
    /// CSV destination; `--out` overrides.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn check_common(n_list: &[usize], trials: usize, eval_points: usize) -> CliResult<()> {
    if n_list.is_empty() {
        return Err(Error::InvalidParameter("n_list must be nonempty".into()).into());
    }
    if !n_list.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidParameter("n_list must be strictly ascending".into()).into());
    }
    if trials < 1 {
        return Err(Error::InvalidParameter("trials must be ≥ 1".into()).into());
    }
    if eval_points < 100 {
        return Err(Error::InvalidParameter(format!(
            "eval_points must be ≥ 100, got {eval_points}"
        ))
        .into());
    }
    Ok(())
}

impl SweepConfig {
    pub fn validate(&self) -> CliResult<()> {
        check_common(&self.n_list, self.trials, self.eval_points)
    }
}

/// Config for `equiv`: two learners fitted on shared datasets.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquivConfig {
    pub target: TargetSpec,
    pub distribution: InputDistribution,
    pub learner_a: LearnerSpec,
    pub learner_b: LearnerSpec,
    pub n_list: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_eval_points")]
    pub eval_points: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl EquivConfig {
    pub fn validate(&self) -> CliResult<()> {
        check_common(&self.n_list, self.trials, self.eval_points)?;
        if self.learner_a.is_oracle() || self.learner_b.is_oracle() {
            return Err(Error::InvalidParameter(
                "equivalence compares fitted models; the oracle has none".into(),
            )
            .into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedLearner {
    pub name: String,
    pub learner: LearnerSpec,
}

/// Config for `floor`: several learners against a hash-noise target.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FloorConfig {
    pub target: TargetSpec,
    pub distribution: InputDistribution,
    pub learners: Vec<NamedLearner>,
    pub n_list: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_eval_points")]
    pub eval_points: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl FloorConfig {
    pub fn validate(&self) -> CliResult<()> {
        check_common(&self.n_list, self.trials, self.eval_points)?;
        if self.learners.is_empty() {
            return Err(Error::InvalidParameter("no learners listed".into()).into());
        }
        let mut names: Vec<&str> = self.learners.iter().map(|l| l.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != self.learners.len() {
            return Err(Error::InvalidParameter("learner names must be unique".into()).into());
        }
        // The demo is about learners constrained to finite data; an oracle
        // row would only muddy it.
        if self.learners.iter().any(|l| l.learner.is_oracle()) {
            return Err(Error::InvalidParameter(
                "the floor demo does not admit the oracle learner".into(),
            )
            .into());
        }
        Ok(())
    }
}

pub fn load_config<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        context: format!("reading config {}", path.display()),
        source,
    })?;
    Ok(serde_json::from_str(&text).map_err(Error::from)?)
}
