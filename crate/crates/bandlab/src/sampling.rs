//! Input distributions, i.i.d. dataset generation, and grid-cell coverage
//! diagnostics.
//!
//! Sample i of a dataset is generated from a counter-based stream keyed by
//! (seed, i): growing N extends a dataset instead of reshuffling it, which is
//! what makes nested-N convergence sweeps and the monotone-coverage
//! invariant possible. The per-scalar algorithms live in [`crate::rng`].

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{ns, stream_key, CounterRng};
use crate::targets::Target;

const MAX_TOTAL_CELLS: u64 = 100_000_000;
const MAX_OCCUPANCY_CELLS: usize = 20;

/// Product-form input densities p(x).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum InputDistribution {
    /// N(0, σ²I) in K dimensions.
    IsotropicGaussian {
        #[serde(rename = "K")]
        k: usize,
        sigma: f64,
    },
    /// Zero-mean Gaussian with diagonal covariance diag(σ_k²).
    DiagonalGaussian { sigmas: Vec<f64> },
    /// Uniform on the hypercube [−U, U)^K.
    BoundedUniform {
        #[serde(rename = "K")]
        k: usize,
        half_width: f64,
    },
}

impl InputDistribution {
    pub fn k(&self) -> usize {
        match self {
            InputDistribution::IsotropicGaussian { k, .. } => *k,
            InputDistribution::DiagonalGaussian { sigmas } => sigmas.len(),
            InputDistribution::BoundedUniform { k, .. } => *k,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            InputDistribution::IsotropicGaussian { k, sigma } => *k >= 1 && *sigma > 0.0,
            InputDistribution::DiagonalGaussian { sigmas } => {
                !sigmas.is_empty() && sigmas.iter().all(|s| *s > 0.0)
            }
            InputDistribution::BoundedUniform { k, half_width } => *k >= 1 && *half_width > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "input distribution parameters must be positive: {self:?}"
            )))
        }
    }

    /// Fills one point from the per-sample generator. Coordinate order is
    /// fixed and part of the reproducibility contract.
    #[inline]
    pub(crate) fn sample_into(&self, rng: &mut CounterRng, out: &mut [f64]) {
        match self {
            InputDistribution::IsotropicGaussian { sigma, .. } => {
                for v in out.iter_mut() {
                    *v = sigma * rng.next_standard_normal();
                }
            }
            InputDistribution::DiagonalGaussian { sigmas } => {
                for (v, s) in out.iter_mut().zip(sigmas) {
                    *v = s * rng.next_standard_normal();
                }
            }
            InputDistribution::BoundedUniform { half_width, .. } => {
                for v in out.iter_mut() {
                    *v = half_width * (2.0 * rng.next_f64() - 1.0);
                }
            }
        }
    }
}

pub(crate) fn draw_inputs_ns(
    dist: &InputDistribution,
    n: usize,
    seed: u64,
    namespace: u64,
) -> Result<Vec<Vec<f64>>> {
    dist.validate()?;
    let k = dist.k();
    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = CounterRng::from_key(stream_key(seed, namespace, i as u64));
        let mut x = vec![0.0; k];
        dist.sample_into(&mut rng, &mut x);
        points.push(x);
    }
    Ok(points)
}

/// N i.i.d. draws from the distribution, deterministic in (dist, seed) and
/// prefix-stable: the first N₁ points of a size-N₂ draw (N₁ ≤ N₂) are
/// bit-identical to a size-N₁ draw.
pub fn draw_inputs(dist: &InputDistribution, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    draw_inputs_ns(dist, n, seed, ns::TRAIN)
}

/// A labeled sample (x_i, y_i), i < N, with its provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "DatasetRepr", into = "DatasetRepr")]
pub struct Dataset {
    pub k: usize,
    pub inputs: Vec<Vec<f64>>,
    pub outputs: Vec<f64>,
    pub seed: u64,
    pub target_id: String,
    pub distribution: InputDistribution,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn max_abs_output(&self) -> f64 {
        self.outputs.iter().fold(0.0, |m, y| m.max(y.abs()))
    }
}

/// Serialized form; carries a redundant N for human consumption and checks
/// it on the way back in.
#[derive(Serialize, Deserialize)]
struct DatasetRepr {
    schema_version: u32,
    #[serde(rename = "K")]
    k: usize,
    n: usize,
    seed: u64,
    target_id: String,
    distribution: InputDistribution,
    inputs: Vec<Vec<f64>>,
    outputs: Vec<f64>,
}

impl From<Dataset> for DatasetRepr {
    fn from(d: Dataset) -> Self {
        DatasetRepr {
            schema_version: 1,
            k: d.k,
            n: d.inputs.len(),
            seed: d.seed,
            target_id: d.target_id,
            distribution: d.distribution,
            inputs: d.inputs,
            outputs: d.outputs,
        }
    }
}

impl TryFrom<DatasetRepr> for Dataset {
    type Error = String;

    fn try_from(r: DatasetRepr) -> std::result::Result<Self, String> {
        if r.inputs.len() != r.n || r.outputs.len() != r.n {
            return Err(format!(
                "dataset claims N={} but has {} inputs / {} outputs",
                r.n,
                r.inputs.len(),
                r.outputs.len()
            ));
        }
        if r.distribution.k() != r.k || r.inputs.iter().any(|x| x.len() != r.k) {
            return Err("dataset dimension fields disagree".into());
        }
        Ok(Dataset {
            k: r.k,
            inputs: r.inputs,
            outputs: r.outputs,
            seed: r.seed,
            target_id: r.target_id,
            distribution: r.distribution,
        })
    }
}

/// Draws inputs and labels them with the target: y_i = f(x_i), bit-exact.
pub fn make_dataset(
    target: &Target,
    dist: &InputDistribution,
    n: usize,
    seed: u64,
) -> Result<Dataset> {
    if target.k() != dist.k() {
        return Err(Error::DimensionMismatch(format!(
            "target is {}-dimensional, distribution is {}-dimensional",
            target.k(),
            dist.k()
        )));
    }
    let inputs = draw_inputs(dist, n, seed)?;
    let outputs = inputs.iter().map(|x| target.eval(x)).collect();
    Ok(Dataset {
        k: dist.k(),
        inputs,
        outputs,
        seed,
        target_id: target.content_id(),
        distribution: dist.clone(),
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CellOccupancy {
    pub total_cells: u64,
    pub occupied_cells: u64,
    pub fraction: f64,
}

/// Partitions [−U, U)^K into cells of side π/B anchored at −U (the last cell
/// per axis is truncated), and counts cells holding at least one point.
/// Points outside the cube are ignored; an empty point set reports fraction 0.
pub fn cell_occupancy(points: &[Vec<f64>], half_width: f64, band: f64) -> Result<CellOccupancy> {
    if !(half_width > 0.0) || !(band > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "cell_occupancy needs U > 0 and B > 0, got U={half_width}, B={band}"
        )));
    }
    if points.is_empty() {
        return Ok(CellOccupancy {
            total_cells: 0,
            occupied_cells: 0,
            fraction: 0.0,
        });
    }
    let k = points[0].len();
    if points.iter().any(|p| p.len() != k) {
        return Err(Error::DimensionMismatch(
            "cell_occupancy: points have mixed dimensions".into(),
        ));
    }
    let side = std::f64::consts::PI / band;
    let per_axis = ((2.0 * half_width / side).ceil() as u64).max(1);
    let mut total: u64 = 1;
    for _ in 0..k {
        total = total
            .checked_mul(per_axis)
            .filter(|t| *t <= MAX_TOTAL_CELLS)
            .ok_or_else(|| {
                Error::Capacity(format!(
                    "cell grid too fine: {per_axis}^{k} cells exceeds {MAX_TOTAL_CELLS}"
                ))
            })?;
    }
    let mut occupied: HashSet<u64> = HashSet::new();
    'point: for p in points {
        let mut linear: u64 = 0;
        for &x in p {
            if !(-half_width..half_width).contains(&x) {
                continue 'point;
            }
            let cell = (((x + half_width) / side).floor() as u64).min(per_axis - 1);
            linear = linear * per_axis + cell;
        }
        occupied.insert(linear);
    }
    Ok(CellOccupancy {
        total_cells: total,
        occupied_cells: occupied.len() as u64,
        fraction: occupied.len() as f64 / total as f64,
    })
}

/// Exact probability that N i.i.d. draws leave none of the M listed cells
/// empty, by inclusion–exclusion over all 2^M subsets:
/// Pr = Σ_S (−1)^{|S|} (1 − mass(S))^N.
///
/// The masses may sum to less than 1 (cells outside the listed region absorb
/// the rest); the full-subset term is included, which matters exactly then.
pub fn occupancy_probability(cell_masses: &[f64], n: u64) -> Result<f64> {
    let m = cell_masses.len();
    if m == 0 {
        return Err(Error::InvalidParameter("no cells listed".into()));
    }
    if m > MAX_OCCUPANCY_CELLS {
        return Err(Error::Capacity(format!(
            "exact occupancy enumeration is limited to {MAX_OCCUPANCY_CELLS} cells, got {m}"
        )));
    }
    if cell_masses.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidParameter(
            "cell masses must be strictly positive".into(),
        ));
    }
    let total: f64 = cell_masses.iter().sum();
    if total > 1.0 + 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "cell masses sum to {total} > 1"
        )));
    }
    // Subset masses by dynamic programming over the lowest set bit.
    let mut subset_mass = vec![0.0f64; 1 << m];
    let mut prob = 0.0f64;
    for s in 0..(1usize << m) {
        if s > 0 {
            let low = s.trailing_zeros() as usize;
            subset_mass[s] = subset_mass[s & (s - 1)] + cell_masses[low];
        }
        let miss = (1.0 - subset_mass[s]).max(0.0);
        let term = if n <= i32::MAX as u64 {
            miss.powi(n as i32)
        } else {
            miss.powf(n as f64)
        };
        if s.count_ones() % 2 == 0 {
            prob += term;
        } else {
            prob -= term;
        }
    }
    Ok(prob.clamp(0.0, 1.0))
}
