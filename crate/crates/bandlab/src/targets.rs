//! Target functions with controlled spectral content.
//!
//! Two kinds: cosine mixtures f(x) = Σ_j a_j cos(ω_j·x + φ_j), whose spectrum
//! is a finite set of point masses at ±ω_j (strictly bandlimited when every
//! ‖ω_j‖₂ ≤ B), and a hash-noise target that is deterministic but has no
//! usable band at all — the adversarial case with an irreducible risk floor.
//!
//! Conventions fixed here and recorded in serialized targets:
//! - "band" always refers to the Euclidean norm of the frequency vectors;
//!   per-dimension bands are the coordinate-wise maxima.
//! - H is stored as Σ|a_j|, a certified upper bound on sup|f|; the true sup
//!   has no closed form for mixtures.
//! - out-of-band "energy" of a discrete spectrum is the tail sum Σ a_j² over
//!   components with ‖ω_j‖₂ > B (the transform is a sum of point masses, so
//!   the integral definition degenerates to this).

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::indexcalc::{enumerate_multi_indices, monomial_eval_raw, MultiIndex};
use crate::rng::{ns, stream_key, CounterRng};

/// One cosine component: a·cos(ω·x + φ).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Component {
    #[serde(rename = "a")]
    pub amplitude: f64,
    #[serde(rename = "omega")]
    pub frequency: Vec<f64>,
    #[serde(rename = "phi")]
    pub phase: f64,
}

impl Component {
    pub fn norm(&self) -> f64 {
        self.frequency.iter().map(|w| w * w).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CosineMixtureTarget {
    pub schema_version: u32,
    #[serde(rename = "K")]
    pub k: usize,
    /// Declared band in Euclidean norm; +inf marks "no declared band"
    /// (approximately bandlimited synthesis).
    #[serde(rename = "B", with = "crate::jsonfmt")]
    pub declared_band: f64,
    /// Certified sup bound H = Σ|a_j|.
    #[serde(rename = "H")]
    pub h_bound: f64,
    pub components: Vec<Component>,
    pub seed: u64,
    /// Stable content hash over all defining fields.
    pub id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HashNoiseTarget {
    #[serde(rename = "K")]
    pub k: usize,
    /// Side of the quantization cell; everything inside one cell shares a value.
    pub cell_resolution: f64,
    pub seed: u64,
}

/// Any target the harness can evaluate; the serialized form carries a `kind`
/// tag so files are self-describing.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Target {
    #[serde(rename = "cosine_mixture")]
    Cosine(CosineMixtureTarget),
    #[serde(rename = "hash_noise")]
    HashNoise(HashNoiseTarget),
}

impl Target {
    pub fn k(&self) -> usize {
        match self {
            Target::Cosine(t) => t.k,
            Target::HashNoise(t) => t.k,
        }
    }

    pub fn content_id(&self) -> String {
        match self {
            Target::Cosine(t) => t.id.clone(),
            Target::HashNoise(t) => t.content_id(),
        }
    }

    /// Unchecked evaluation; callers validate dimensions once at the boundary.
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Target::Cosine(t) => t.eval(x),
            Target::HashNoise(t) => t.eval(x),
        }
    }
}

/// Checked evaluation of any target kind.
pub fn eval_target(target: &Target, x: &[f64]) -> Result<f64> {
    if x.len() != target.k() {
        return Err(Error::DimensionMismatch(format!(
            "eval_target: point has {} coords, target expects {}",
            x.len(),
            target.k()
        )));
    }
    Ok(target.eval(x))
}

impl CosineMixtureTarget {
    /// Builds a mixture from explicit components; computes H = Σ|a| and the
    /// content id. When `declared_band` is finite, every component must
    /// satisfy ‖ω‖₂ ≤ B (up to 1e-12 relative slack for hand-built
    /// boundary components).
    pub fn from_components(
        k: usize,
        components: Vec<Component>,
        declared_band: f64,
        seed: u64,
    ) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidParameter("dimension must be ≥ 1".into()));
        }
        if components.is_empty() {
            return Err(Error::InvalidParameter(
                "mixture needs at least one component".into(),
            ));
        }
        if !(declared_band >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "declared band must be ≥ 0, got {declared_band}"
            )));
        }
        for (j, c) in components.iter().enumerate() {
            if c.frequency.len() != k {
                return Err(Error::DimensionMismatch(format!(
                    "component {j}: frequency has {} coords, expected {k}",
                    c.frequency.len()
                )));
            }
            if !c.amplitude.is_finite() || !c.phase.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "component {j}: non-finite amplitude or phase"
                )));
            }
            if declared_band.is_finite() && c.norm() > declared_band * (1.0 + 1e-12) {
                return Err(Error::InvalidParameter(format!(
                    "component {j}: ‖ω‖ = {} exceeds declared band {declared_band}",
                    c.norm()
                )));
            }
        }
        let h_bound: f64 = components.iter().map(|c| c.amplitude.abs()).sum();
        let id = content_hash(k, declared_band, seed, &components);
        Ok(CosineMixtureTarget {
            schema_version: 1,
            k,
            declared_band,
            h_bound,
            components,
            seed,
            id,
        })
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.k);
        let mut y = 0.0;
        for c in &self.components {
            let mut arg = c.phase;
            for k in 0..x.len() {
                arg += c.frequency[k] * x[k];
            }
            y += c.amplitude * arg.cos();
        }
        y
    }
}

impl HashNoiseTarget {
    pub fn content_id(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"hash_noise");
        h.update((self.k as u64).to_le_bytes());
        h.update(self.cell_resolution.to_bits().to_le_bytes());
        h.update(self.seed.to_le_bytes());
        hex16(&h.finalize())
    }

    /// Quantizes x to its lattice cell and hashes (cell id, seed) to a
    /// uniform value in [−1, 1). Same cell, same value; distinct cells are
    /// independent streams.
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.k);
        let mut key = stream_key(self.seed, ns::HASH_NOISE, 0);
        for &xi in x {
            let cell = (xi / self.cell_resolution).floor() as i64;
            key = stream_key(key, ns::HASH_NOISE, cell as u64);
        }
        2.0 * CounterRng::from_key(key).next_f64() - 1.0
    }
}

fn content_hash(k: usize, declared_band: f64, seed: u64, components: &[Component]) -> String {
    let mut h = Sha256::new();
    h.update(b"cosine_mixture");
    h.update((k as u64).to_le_bytes());
    h.update(declared_band.to_bits().to_le_bytes());
    h.update(seed.to_le_bytes());
    for c in components {
        h.update(c.amplitude.to_bits().to_le_bytes());
        for &w in &c.frequency {
            h.update(w.to_bits().to_le_bytes());
        }
        h.update(c.phase.to_bits().to_le_bytes());
    }
    hex16(&h.finalize())
}

fn hex16(digest: &[u8]) -> String {
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Strictly bandlimited mixture: J frequencies uniform in the Euclidean ball
/// of radius B, phases uniform in [0, 2π), positive amplitudes rescaled so
/// Σ a_j = H. Deterministic in the seed; component j only depends on
/// (seed, j), so growing J keeps earlier components.
pub fn synth_strict(
    k: usize,
    band: f64,
    n_components: usize,
    h: f64,
    seed: u64,
) -> Result<CosineMixtureTarget> {
    if !(band > 0.0) {
        return Err(Error::InvalidParameter(format!("band must be > 0, got {band}")));
    }
    synth_mixture(k, n_components, h, seed, band, |rng, freq| {
        // Uniform in the ball: Gaussian direction, radius B·u^{1/K}.
        let mut norm2 = 0.0;
        for f in freq.iter_mut() {
            *f = rng.next_standard_normal();
            norm2 += *f * *f;
        }
        let norm = norm2.sqrt();
        let radius = band * rng.next_f64_open().powf(1.0 / freq.len() as f64);
        let scale = if norm > 0.0 { radius / norm } else { 0.0 };
        for f in freq.iter_mut() {
            *f *= scale;
        }
        // Guard against the rescaled norm landing a rounding step above B.
        let actual = freq.iter().map(|w| w * w).sum::<f64>().sqrt();
        if actual > band {
            let fix = band / actual * (1.0 - 1e-12);
            for f in freq.iter_mut() {
                *f *= fix;
            }
        }
    })
}

/// Approximately bandlimited mixture: frequencies i.i.d. N(0, s²) per
/// coordinate (unbounded support), declared band +inf.
pub fn synth_approx(
    k: usize,
    spectral_std: f64,
    n_components: usize,
    h: f64,
    seed: u64,
) -> Result<CosineMixtureTarget> {
    if !(spectral_std > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "spectral std must be > 0, got {spectral_std}"
        )));
    }
    synth_mixture(k, n_components, h, seed, f64::INFINITY, |rng, freq| {
        for f in freq.iter_mut() {
            *f = spectral_std * rng.next_standard_normal();
        }
    })
}

fn synth_mixture(
    k: usize,
    n_components: usize,
    h: f64,
    seed: u64,
    declared_band: f64,
    mut draw_frequency: impl FnMut(&mut CounterRng, &mut [f64]),
) -> Result<CosineMixtureTarget> {
    if k < 1 || n_components < 1 {
        return Err(Error::InvalidParameter(
            "dimension and component count must be ≥ 1".into(),
        ));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("H must be > 0, got {h}")));
    }
    let mut components = Vec::with_capacity(n_components);
    let mut amp_total = 0.0;
    for j in 0..n_components {
        let mut rng = CounterRng::from_key(stream_key(seed, ns::SYNTH, j as u64));
        let mut frequency = vec![0.0; k];
        draw_frequency(&mut rng, &mut frequency);
        let phase = 2.0 * std::f64::consts::PI * rng.next_f64();
        let amplitude = rng.next_f64_open();
        amp_total += amplitude;
        components.push(Component {
            amplitude,
            frequency,
            phase,
        });
    }
    let rescale = h / amp_total;
    for c in &mut components {
        c.amplitude *= rescale;
    }
    CosineMixtureTarget::from_components(k, components, declared_band, seed)
}

/// Deterministic pseudo-random target with no spectral decay: a fresh
/// uniform [−1, 1) value per quantization cell.
pub fn synth_nonbandlimited(k: usize, cell_resolution: f64, seed: u64) -> Result<HashNoiseTarget> {
    if k < 1 {
        return Err(Error::InvalidParameter("dimension must be ≥ 1".into()));
    }
    if !(cell_resolution > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "cell resolution must be > 0, got {cell_resolution}"
        )));
    }
    Ok(HashNoiseTarget {
        k,
        cell_resolution,
        seed,
    })
}

/// Tail spectral mass Σ a_j² over components with ‖ω_j‖₂ > B.
pub fn out_of_band_energy(target: &CosineMixtureTarget, band: f64) -> f64 {
    target
        .components
        .iter()
        .filter(|c| c.norm() > band)
        .map(|c| c.amplitude * c.amplitude)
        .sum()
}

/// Smallest threshold B (an exact component norm, or 0) with
/// out_of_band_energy(target, B) ≤ ε².
pub fn approx_band(target: &CosineMixtureTarget, epsilon: f64) -> f64 {
    let budget = epsilon * epsilon;
    let total: f64 = target
        .components
        .iter()
        .map(|c| c.amplitude * c.amplitude)
        .sum();
    if total <= budget {
        return 0.0;
    }
    let mut norms: Vec<f64> = target.components.iter().map(|c| c.norm()).collect();
    norms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    norms.dedup();
    for &b in &norms {
        if out_of_band_energy(target, b) <= budget {
            return b;
        }
    }
    // Unreachable: the largest norm always has an empty tail.
    *norms.last().unwrap()
}

/// Per-dimension bands B_k = max_j |ω_{j,k}|.
pub fn per_dim_bands(target: &CosineMixtureTarget) -> Vec<f64> {
    let mut bands = vec![0.0f64; target.k];
    for c in &target.components {
        for (k, &w) in c.frequency.iter().enumerate() {
            bands[k] = bands[k].max(w.abs());
        }
    }
    bands
}

/// cos(θ + m·π/2) for m = |α| mod 4, evaluated without adding the phase
/// shift to the argument (which would cost accuracy for large |α|).
#[inline]
fn shifted_cos(theta: f64, quarter_turns: u32) -> f64 {
    match quarter_turns % 4 {
        0 => theta.cos(),
        1 => -theta.sin(),
        2 => -theta.cos(),
        _ => theta.sin(),
    }
}

/// Derivative ∂^α f(x0) of a cosine mixture: every derivative of cos is a
/// π/2 phase shift, so ∂^α f(x0) = Σ_j a_j ω_j^α cos(ω_j·x0 + φ_j + |α|π/2).
pub fn derivative_at(
    target: &CosineMixtureTarget,
    x0: &[f64],
    alpha: &MultiIndex,
) -> Result<f64> {
    if x0.len() != target.k || alpha.dim() != target.k {
        return Err(Error::DimensionMismatch(format!(
            "derivative_at: x0 has {} coords, index {}, target expects {}",
            x0.len(),
            alpha.dim(),
            target.k
        )));
    }
    Ok(derivative_raw(target, x0, alpha))
}

fn derivative_raw(target: &CosineMixtureTarget, x0: &[f64], alpha: &MultiIndex) -> f64 {
    let order = alpha.order();
    let zero = vec![0.0; target.k];
    let mut sum = 0.0;
    for c in &target.components {
        let mut arg = c.phase;
        for k in 0..x0.len() {
            arg += c.frequency[k] * x0[k];
        }
        let omega_pow = monomial_eval_raw(&c.frequency, alpha.exponents(), &zero);
        sum += c.amplitude * omega_pow * shifted_cos(arg, order);
    }
    sum
}

/// Taylor coefficient b_α = ∂^α f(x0) / α! of a cosine mixture.
pub fn target_taylor_coeff(
    target: &CosineMixtureTarget,
    x0: &[f64],
    alpha: &MultiIndex,
) -> Result<f64> {
    if x0.len() != target.k || alpha.dim() != target.k {
        return Err(Error::DimensionMismatch(format!(
            "target_taylor_coeff: x0 has {} coords, index {}, target expects {}",
            x0.len(),
            alpha.dim(),
            target.k
        )));
    }
    Ok(derivative_raw(target, x0, alpha) / alpha.factorial())
}

/// Margin report for the derivative-bound check, grouped by order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BernsteinReport {
    pub pass: bool,
    pub orders: Vec<OrderMargin>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrderMargin {
    pub order: u32,
    /// Worst |lhs|/rhs over indices of this order; 0/0 counts as 0.
    pub worst_ratio: f64,
    pub pass: bool,
}

/// Verifies |∂^α f(x0)| ≤ B^{|α|}·H for all |α| ≤ n_max — the
/// derivative-growth inequality every strictly band-B function satisfies.
/// Exact comparison, no tolerance.
pub fn bernstein_check_target(
    target: &CosineMixtureTarget,
    x0: &[f64],
    n_max: u32,
) -> Result<BernsteinReport> {
    if !target.declared_band.is_finite() {
        return Err(Error::InvalidParameter(
            "derivative-bound check needs a finite declared band".into(),
        ));
    }
    if x0.len() != target.k {
        return Err(Error::DimensionMismatch(format!(
            "bernstein_check_target: x0 has {} coords, target expects {}",
            x0.len(),
            target.k
        )));
    }
    let mut orders: Vec<OrderMargin> = (0..=n_max)
        .map(|order| OrderMargin {
            order,
            worst_ratio: 0.0,
            pass: true,
        })
        .collect();
    for alpha in enumerate_multi_indices(target.k, n_max) {
        let order = alpha.order();
        let lhs = derivative_raw(target, x0, &alpha).abs();
        let rhs = target.declared_band.powi(order as i32) * target.h_bound;
        let entry = &mut orders[order as usize];
        if lhs > rhs {
            entry.pass = false;
        }
        let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
        if ratio > entry.worst_ratio {
            entry.worst_ratio = ratio;
        }
    }
    let pass = orders.iter().all(|o| o.pass);
    Ok(BernsteinReport { pass, orders })
}
