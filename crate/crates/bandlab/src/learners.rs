//! The two interpolation learners and their diagnostics.
//!
//! `PolynomialModel` is a total-degree multivariate polynomial fitted by
//! orthogonal-factorization least squares on the monomial design matrix
//! (with column equilibration — raw graded-monomial Vandermonde systems are
//! brutally ill-conditioned). `SincKernelModel` interpolates with the
//! product sinc kernel, the reproducing kernel of the band-B′ Paley–Wiener
//! space, so the fitted model is itself strictly bandlimited (by B′·√K in
//! Euclidean norm). The kernel system gets a ridge fallback that escalates
//! λ by decades up to 1e-4 before giving up.
//!
//! The kernel construction stands in for cardinal interpolation bases, which
//! are not computable for scattered random nodes; it satisfies the same
//! interpolation property wherever the solve succeeds at the requested λ.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indexcalc::{
    count_monomials, degree_for_sample_count, enumerate_multi_indices, for_each_multi_index,
};
use crate::sampling::{Dataset, InputDistribution};
use crate::targets::{BernsteinReport, OrderMargin};

pub const DEFAULT_DEGREE_CAP: u32 = 10;
pub const DEFAULT_RIDGE: f64 = 1e-10;
const MAX_RIDGE: f64 = 1e-4;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolynomialModel {
    pub schema_version: u32,
    #[serde(rename = "K")]
    pub k: usize,
    pub degree: u32,
    /// Expansion center x0.
    pub center: Vec<f64>,
    /// Inputs are divided by this before monomial evaluation.
    pub input_scale: f64,
    /// Aligned to the graded-lex order of `enumerate_multi_indices(K, degree)`.
    pub coefficients: Vec<f64>,
    #[serde(with = "crate::jsonfmt")]
    pub condition_estimate: f64,
    pub residual_norm: f64,
    /// Set when the design matrix was rank-deficient (minimum-norm solution).
    pub degenerate: bool,
}

impl PolynomialModel {
    /// The constant-zero model; the baseline predictor in floor demos.
    pub fn zero(k: usize) -> Self {
        PolynomialModel {
            schema_version: 1,
            k,
            degree: 0,
            center: vec![0.0; k],
            input_scale: 1.0,
            coefficients: vec![0.0],
            condition_estimate: 1.0,
            residual_norm: 0.0,
            degenerate: false,
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.k);
        let deg = self.degree as usize;
        // Coordinate powers u_k^e for u = (x − x0)/s.
        let mut pows = vec![1.0; self.k * (deg + 1)];
        for k in 0..self.k {
            let u = (x[k] - self.center[k]) / self.input_scale;
            for e in 1..=deg {
                pows[k * (deg + 1) + e] = pows[k * (deg + 1) + e - 1] * u;
            }
        }
        let mut y = 0.0;
        for_each_multi_index(self.k, self.degree, &mut |j, exps| {
            let mut mono = 1.0;
            for (k, &e) in exps.iter().enumerate() {
                mono *= pows[k * (deg + 1) + e as usize];
            }
            y += self.coefficients[j] * mono;
        });
        y
    }

    /// Coefficients of (x − x0)^α with the input scale undone:
    /// c̃_α = c_α / s^{|α|}. These are the model's Taylor coefficients at x0.
    pub fn unscaled_coefficients(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.coefficients.len());
        for_each_multi_index(self.k, self.degree, &mut |j, exps| {
            let order: u32 = exps.iter().sum();
            out.push(self.coefficients[j] / self.input_scale.powi(order as i32));
        });
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SincKernelModel {
    pub schema_version: u32,
    #[serde(rename = "K")]
    pub k: usize,
    /// Per-axis band B′ of the kernel; the model is bandlimited by B′·√K.
    pub band: f64,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Effective ridge after any escalation.
    pub ridge: f64,
    #[serde(with = "crate::jsonfmt")]
    pub condition_estimate: f64,
    pub max_train_residual: f64,
    /// Set when the solver had to escalate the ridge beyond the request.
    pub degenerate: bool,
}

impl SincKernelModel {
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.k);
        let mut y = 0.0;
        for (node, w) in self.nodes.iter().zip(&self.weights) {
            y += w * kernel(x, node, self.band);
        }
        y
    }
}

#[inline]
fn sinc(t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        t.sin() / t
    }
}

#[inline]
fn kernel(a: &[f64], b: &[f64], band: f64) -> f64 {
    let mut prod = 1.0;
    for k in 0..a.len() {
        prod *= sinc(band * (a[k] - b[k]));
    }
    prod
}

/// Any fitted model the harness can evaluate or serialize.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Model {
    #[serde(rename = "poly")]
    Poly(PolynomialModel),
    #[serde(rename = "sinc")]
    Sinc(SincKernelModel),
}

impl Model {
    pub fn k(&self) -> usize {
        match self {
            Model::Poly(m) => m.k,
            Model::Sinc(m) => m.k,
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Model::Poly(m) => m.eval(x),
            Model::Sinc(m) => m.eval(x),
        }
    }

    pub fn degenerate(&self) -> bool {
        match self {
            Model::Poly(m) => m.degenerate,
            Model::Sinc(m) => m.degenerate,
        }
    }

    /// The complexity knob that was actually used: polynomial degree or
    /// kernel band. One CSV column holds either.
    pub fn degree_or_band(&self) -> f64 {
        match self {
            Model::Poly(m) => m.degree as f64,
            Model::Sinc(m) => m.band,
        }
    }
}

/// Checked evaluation of either model kind.
pub fn eval_model(model: &Model, x: &[f64]) -> Result<f64> {
    if x.len() != model.k() {
        return Err(Error::DimensionMismatch(format!(
            "eval_model: point has {} coords, model expects {}",
            x.len(),
            model.k()
        )));
    }
    Ok(model.eval(x))
}

#[derive(Debug, Clone, Default)]
pub struct PolyFitOptions {
    /// Explicit degree; default picks the largest degree whose coefficient
    /// count fits the sample count, clamped to `degree_cap`.
    pub degree: Option<u32>,
    pub degree_cap: Option<u32>,
    /// Expansion center; default origin.
    pub center: Option<Vec<f64>>,
    /// Input scale; default is the distribution's spread (σ, max σ_k, or U).
    pub input_scale: Option<f64>,
    /// Exact-interpolation mode: reject degrees whose coefficient count
    /// exceeds the sample count instead of producing a min-norm fit.
    pub exact: bool,
}

fn default_scale(dist: &InputDistribution) -> f64 {
    match dist {
        InputDistribution::IsotropicGaussian { sigma, .. } => *sigma,
        InputDistribution::DiagonalGaussian { sigmas } => {
            sigmas.iter().fold(0.0f64, |m, s| m.max(*s))
        }
        InputDistribution::BoundedUniform { half_width, .. } => *half_width,
    }
}

/// Least-squares polynomial fit over the graded monomial basis.
///
/// The design matrix is column-equilibrated before the SVD solve; the
/// reported condition estimate refers to the equilibrated system (the one
/// actually solved). Rank deficiency yields the minimum-norm solution of the
/// equilibrated system and sets `degenerate`.
pub fn fit_polynomial(dataset: &Dataset, opts: &PolyFitOptions) -> Result<PolynomialModel> {
    let n = dataset.len();
    if n == 0 {
        return Err(Error::InvalidParameter(
            "cannot fit a polynomial to an empty dataset".into(),
        ));
    }
    let k = dataset.k;
    let cap = opts.degree_cap.unwrap_or(DEFAULT_DEGREE_CAP);
    let degree = match opts.degree {
        Some(d) => d,
        None => degree_for_sample_count(n as u64, k, cap),
    };
    let p = count_monomials(k, degree)? as usize;
    if opts.exact && p > n {
        return Err(Error::InvalidParameter(format!(
            "exact mode: degree {degree} needs {p} samples, dataset has {n}"
        )));
    }
    let center = match &opts.center {
        Some(c) => {
            if c.len() != k {
                return Err(Error::DimensionMismatch(format!(
                    "center has {} coords, dataset is {k}-dimensional",
                    c.len()
                )));
            }
            c.clone()
        }
        None => vec![0.0; k],
    };
    let input_scale = opts.input_scale.unwrap_or_else(|| default_scale(&dataset.distribution));
    if !(input_scale > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "input scale must be > 0, got {input_scale}"
        )));
    }

    // Design matrix on scaled inputs u = (x − x0)/s.
    let deg = degree as usize;
    let mut design = DMatrix::zeros(n, p);
    let mut pows = vec![1.0f64; k * (deg + 1)];
    for i in 0..n {
        for kk in 0..k {
            let u = (dataset.inputs[i][kk] - center[kk]) / input_scale;
            for e in 1..=deg {
                pows[kk * (deg + 1) + e] = pows[kk * (deg + 1) + e - 1] * u;
            }
        }
        for_each_multi_index(k, degree, &mut |j, exps| {
            let mut mono = 1.0;
            for (kk, &e) in exps.iter().enumerate() {
                mono *= pows[kk * (deg + 1) + e as usize];
            }
            design[(i, j)] = mono;
        });
    }
    let y = DVector::from_column_slice(&dataset.outputs);

    // Column equilibration.
    let mut col_scale = vec![1.0f64; p];
    for j in 0..p {
        let norm = design.column(j).norm();
        if norm > 0.0 {
            col_scale[j] = norm;
            for i in 0..n {
                design[(i, j)] /= norm;
            }
        }
    }

    let svd = design.clone().svd(true, true);
    let sv = &svd.singular_values;
    let s_max = sv.iter().fold(0.0f64, |m, s| m.max(*s));
    let s_min = sv.iter().fold(f64::INFINITY, |m, s| m.min(*s));
    let tol = s_max * f64::EPSILON * n.max(p) as f64;
    let rank = sv.iter().filter(|s| **s > tol).count();
    let solution = svd
        .solve(&y, tol)
        .map_err(|e| Error::Conditioning(format!("least-squares solve failed: {e}")))?;
    let residual_norm = (&design * &solution - &y).norm();
    let condition_estimate = if s_min > 0.0 { s_max / s_min } else { f64::INFINITY };

    let coefficients: Vec<f64> = solution
        .iter()
        .zip(&col_scale)
        .map(|(c, s)| c / s)
        .collect();

    Ok(PolynomialModel {
        schema_version: 1,
        k,
        degree,
        center,
        input_scale,
        coefficients,
        condition_estimate,
        residual_norm,
        degenerate: rank < p,
    })
}

/// Kernel interpolation fit: solves (G + λI)w = y with
/// G_ij = Π_k sinc(B′(x_ik − x_jk)).
///
/// Bit-identical duplicate nodes are merged with averaged outputs before the
/// solve (exact duplicates make G singular and carry no information for a
/// deterministic target). If the factorization fails, λ escalates by factors
/// of 10 up to 1e-4; escalation beyond the request marks the model
/// degenerate.
pub fn fit_sinc_interpolant(dataset: &Dataset, band: f64, ridge: f64) -> Result<SincKernelModel> {
    if dataset.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot fit an interpolant to an empty dataset".into(),
        ));
    }
    if !(band > 0.0) {
        return Err(Error::InvalidParameter(format!("band must be > 0, got {band}")));
    }
    if !(ridge >= 0.0) {
        return Err(Error::InvalidParameter(format!("ridge must be ≥ 0, got {ridge}")));
    }

    // Merge bit-identical nodes, averaging their outputs.
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut nodes: Vec<Vec<f64>> = Vec::new();
    let mut sums: Vec<(f64, usize)> = Vec::new();
    for (x, &yv) in dataset.inputs.iter().zip(&dataset.outputs) {
        let bits: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
        match seen.get(&bits) {
            Some(&idx) => {
                sums[idx].0 += yv;
                sums[idx].1 += 1;
            }
            None => {
                seen.insert(bits, nodes.len());
                nodes.push(x.clone());
                sums.push((yv, 1));
            }
        }
    }
    let n = nodes.len();
    let y = DVector::from_iterator(n, sums.iter().map(|(s, c)| s / *c as f64));

    let mut gram = DMatrix::zeros(n, n);
    for i in 0..n {
        gram[(i, i)] = 1.0;
        for j in 0..i {
            let v = kernel(&nodes[i], &nodes[j], band);
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }

    let mut lambda = ridge;
    let chol = loop {
        let mut system = gram.clone();
        for i in 0..n {
            system[(i, i)] += lambda;
        }
        match nalgebra::linalg::Cholesky::new(system) {
            Some(c) => break c,
            None => {
                lambda = if lambda <= 0.0 { 1e-12 } else { lambda * 10.0 };
                if lambda > MAX_RIDGE {
                    return Err(Error::Conditioning(format!(
                        "kernel system not factorizable even at ridge {MAX_RIDGE}"
                    )));
                }
            }
        }
    };
    let weights = chol.solve(&y);
    let max_train_residual = (&gram * &weights - &y).amax();

    // λ_max by power iteration on G (shift by λ afterwards), λ_min via
    // inverse iteration through the factorization; deterministic starts.
    let lambda_max = power_iteration_sym(&gram) + lambda;
    let inv_growth = {
        let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
        let mut growth = 0.0f64;
        for _ in 0..80 {
            let w = chol.solve(&v);
            growth = w.norm();
            if growth == 0.0 {
                break;
            }
            v = w / growth;
        }
        growth
    };
    let condition_estimate = if inv_growth > 0.0 {
        lambda_max * inv_growth
    } else {
        f64::INFINITY
    };

    Ok(SincKernelModel {
        schema_version: 1,
        k: dataset.k,
        band,
        nodes,
        weights: weights.iter().copied().collect(),
        ridge: lambda,
        condition_estimate,
        max_train_residual,
        degenerate: lambda > ridge,
    })
}

fn power_iteration_sym(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut lambda = 0.0f64;
    for _ in 0..80 {
        let w = a * &v;
        lambda = w.norm();
        if lambda == 0.0 {
            return 0.0;
        }
        v = w / lambda;
    }
    lambda
}

/// Tests |c̃_α|·α! ≤ B^{|α|}·H coefficient-wise (input scale undone) — the
/// operational check that a fitted polynomial "looks bandlimited by B".
/// Comparisons run in log space with 1e-9 relative slack so that exact
/// boundary coefficients (|c̃_α|·α! == B^{|α|}H) pass despite rounding.
pub fn bernstein_check_model(model: &PolynomialModel, band: f64, h: f64) -> Result<BernsteinReport> {
    if !(band >= 0.0) || !(h > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "band must be ≥ 0 and H > 0, got B={band}, H={h}"
        )));
    }
    let alphas = enumerate_multi_indices(model.k, model.degree);
    let unscaled = model.unscaled_coefficients();
    let mut orders: Vec<OrderMargin> = (0..=model.degree)
        .map(|order| OrderMargin {
            order,
            worst_ratio: 0.0,
            pass: true,
        })
        .collect();
    for (alpha, c) in alphas.iter().zip(&unscaled) {
        let order = alpha.order();
        let entry = &mut orders[order as usize];
        if *c == 0.0 {
            continue;
        }
        let log_lhs = c.abs().ln() + alpha.log_factorial();
        let log_rhs = order as f64 * band.ln() + h.ln();
        let ratio = (log_lhs - log_rhs).exp();
        if ratio > entry.worst_ratio {
            entry.worst_ratio = ratio;
        }
        if log_lhs > log_rhs + 1e-9 {
            entry.pass = false;
        }
    }
    let pass = orders.iter().all(|o| o.pass);
    Ok(BernsteinReport { pass, orders })
}

/// Which learner a sweep trial fits. `Zero` is the constant-0 baseline;
/// `Oracle` predicts with the target itself (no fitted model exists).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerSpec {
    Poly {
        #[serde(default)]
        degree: Option<u32>,
        #[serde(default)]
        degree_cap: Option<u32>,
        #[serde(default)]
        exact: bool,
    },
    Sinc {
        band: f64,
        #[serde(default = "default_ridge")]
        ridge: f64,
    },
    Zero,
    Oracle,
}

fn default_ridge() -> f64 {
    DEFAULT_RIDGE
}

impl LearnerSpec {
    pub fn is_oracle(&self) -> bool {
        matches!(self, LearnerSpec::Oracle)
    }

    /// Fits the learner on a dataset. Errors on `Oracle`, which has no
    /// fitted form — callers must special-case it.
    pub fn fit_model(&self, dataset: &Dataset) -> Result<Model> {
        match self {
            LearnerSpec::Poly {
                degree,
                degree_cap,
                exact,
            } => fit_polynomial(
                dataset,
                &PolyFitOptions {
                    degree: *degree,
                    degree_cap: *degree_cap,
                    exact: *exact,
                    ..PolyFitOptions::default()
                },
            )
            .map(Model::Poly),
            LearnerSpec::Sinc { band, ridge } => {
                fit_sinc_interpolant(dataset, *band, *ridge).map(Model::Sinc)
            }
            LearnerSpec::Zero => Ok(Model::Poly(PolynomialModel::zero(dataset.k))),
            LearnerSpec::Oracle => Err(Error::InvalidParameter(
                "the oracle learner has no fitted model".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indexcalc::MultiIndex;
    use crate::sampling::{draw_inputs, make_dataset};
    use crate::targets::{synth_strict, target_taylor_coeff, Component, CosineMixtureTarget, Target};

    fn hand_dataset(inputs: Vec<Vec<f64>>, outputs: Vec<f64>) -> Dataset {
        let k = inputs[0].len();
        Dataset {
            k,
            inputs,
            outputs,
            seed: 0,
            target_id: "hand".into(),
            distribution: InputDistribution::BoundedUniform { k, half_width: 1.0 },
        }
    }

    #[test]
    fn line_through_two_points() {
        let ds = hand_dataset(vec![vec![0.0], vec![1.0]], vec![1.0, 3.0]);
        let m = fit_polynomial(
            &ds,
            &PolyFitOptions {
                degree: Some(1),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(!m.degenerate);
        assert!((m.coefficients[0] - 1.0).abs() < 1e-12);
        assert!((m.coefficients[1] - 2.0).abs() < 1e-12);
        assert!((m.eval(&[3.0]) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn degree_zero_fits_the_mean() {
        let ds = hand_dataset(vec![vec![-0.5], vec![0.2], vec![0.9]], vec![1.0, 2.0, 6.0]);
        let m = fit_polynomial(
            &ds,
            &PolyFitOptions {
                degree: Some(0),
                ..Default::default()
            },
        )
        .unwrap();
        assert!((m.coefficients[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_inputs_flag_degeneracy() {
        let ds = hand_dataset(vec![vec![0.5], vec![0.5]], vec![1.0, 2.0]);
        let m = fit_polynomial(
            &ds,
            &PolyFitOptions {
                degree: Some(1),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(m.degenerate);
        assert!(m.coefficients.iter().all(|c| c.is_finite()));
    }

    #[test]
    fn exact_mode_rejects_underdetermined_degrees() {
        let ds = hand_dataset(vec![vec![0.0], vec![1.0]], vec![1.0, 2.0]);
        let r = fit_polynomial(
            &ds,
            &PolyFitOptions {
                degree: Some(3),
                exact: true,
                ..Default::default()
            },
        );
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn poised_square_fit_interpolates() {
        let t = Target::Cosine(synth_strict(1, 0.5, 8, 1.0, 3).unwrap());
        let dist = InputDistribution::IsotropicGaussian { k: 1, sigma: 1.0 };
        let ds = make_dataset(&t, &dist, 11, 41).unwrap();
        let m = fit_polynomial(
            &ds,
            &PolyFitOptions {
                degree: Some(10),
                exact: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(!m.degenerate, "cond {}", m.condition_estimate);
        let cap = 1e-8 * (1.0 + ds.max_abs_output());
        for (x, y) in ds.inputs.iter().zip(&ds.outputs) {
            assert!((m.eval(x) - y).abs() <= cap, "residual {}", (m.eval(x) - y).abs());
        }
    }

    #[test]
    fn fit_is_permutation_invariant() {
        let t = Target::Cosine(synth_strict(1, 0.5, 4, 1.0, 6).unwrap());
        let dist = InputDistribution::IsotropicGaussian { k: 1, sigma: 1.0 };
        let ds = make_dataset(&t, &dist, 12, 9).unwrap();
        let mut rev = ds.clone();
        rev.inputs.reverse();
        rev.outputs.reverse();
        let a = fit_polynomial(&ds, &PolyFitOptions::default()).unwrap();
        let b = fit_polynomial(&rev, &PolyFitOptions::default()).unwrap();
        for (ca, cb) in a.coefficients.iter().zip(&b.coefficients) {
            assert!((ca - cb).abs() <= 1e-12 * ca.abs().max(1.0));
        }
    }

    #[test]
    fn scale_consistency() {
        // Fitting with scale s on x equals fitting with scale 1 on x/s after
        // coefficient identification.
        let t = Target::Cosine(synth_strict(1, 0.5, 4, 1.0, 8).unwrap());
        let dist = InputDistribution::IsotropicGaussian { k: 1, sigma: 1.0 };
        let ds = make_dataset(&t, &dist, 10, 14).unwrap();
        let s = 2.5;
        let scaled = fit_polynomial(
            &ds,
            &PolyFitOptions {
                input_scale: Some(s),
                ..Default::default()
            },
        )
        .unwrap();
        let mut ds_pre = ds.clone();
        for x in &mut ds_pre.inputs {
            x[0] /= s;
        }
        let unit = fit_polynomial(
            &ds_pre,
            &PolyFitOptions {
                input_scale: Some(1.0),
                ..Default::default()
            },
        )
        .unwrap();
        for (a, b) in scaled.coefficients.iter().zip(&unit.coefficients) {
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn fitted_coefficients_approach_taylor_oracle() {
        // cos(x) target, degree-7 fit at N=16: Taylor coefficients at the
        // origin recovered to 1e-2 for orders ≤ 3 in the median seed.
        let target = CosineMixtureTarget::from_components(
            1,
            vec![Component {
                amplitude: 1.0,
                frequency: vec![1.0],
                phase: 0.0,
            }],
            1.0,
            0,
        )
        .unwrap();
        let wrapped = Target::Cosine(target.clone());
        let dist = InputDistribution::IsotropicGaussian { k: 1, sigma: 1.0 };
        let mut errs = Vec::new();
        for seed in 0..20u64 {
            let ds = make_dataset(&wrapped, &dist, 16, seed).unwrap();
            let m = fit_polynomial(
                &ds,
                &PolyFitOptions {
                    degree: Some(7),
                    ..Default::default()
                },
            )
            .unwrap();
            let coeffs = m.unscaled_coefficients();
            let mut worst = 0.0f64;
            for (j, alpha) in enumerate_multi_indices(1, 7).iter().enumerate() {
                if alpha.order() > 3 {
                    continue;
                }
                let b = target_taylor_coeff(&target, &[0.0], alpha).unwrap();
                worst = worst.max((coeffs[j] - b).abs());
            }
            errs.push(worst);
        }
        errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = errs[errs.len() / 2];
        assert!(median < 1e-2, "median coefficient error {median}");
    }

    #[test]
    fn sinc_single_node() {
        let ds = hand_dataset(vec![vec![0.0]], vec![1.0]);
        let m = fit_sinc_interpolant(&ds, 2.0, 1e-10).unwrap();
        assert!((m.weights[0] - 1.0 / (1.0 + 1e-10)).abs() < 1e-15);
        assert!((m.eval(&[0.0]) - 1.0).abs() < 1e-9);
        assert!(!m.degenerate);
        assert!((m.condition_estimate - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sinc_nodes_at_kernel_zeros_decouple() {
        // Separation π/B′ makes the off-diagonal vanish (up to sin(π) ulps).
        let band = 2.0;
        let sep = std::f64::consts::PI / band;
        let ds = hand_dataset(vec![vec![0.0], vec![sep]], vec![1.0, -2.0]);
        let m = fit_sinc_interpolant(&ds, band, 0.0).unwrap();
        assert!((m.weights[0] - 1.0).abs() < 1e-12);
        assert!((m.weights[1] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn sinc_interpolates_at_zero_ridge() {
        let t = Target::Cosine(synth_strict(1, 0.5, 6, 1.0, 12).unwrap());
        let dist = InputDistribution::IsotropicGaussian { k: 1, sigma: 1.0 };
        let ds = make_dataset(&t, &dist, 12, 3).unwrap();
        let m = fit_sinc_interpolant(&ds, 4.0, 0.0).unwrap();
        assert!(!m.degenerate);
        let cap = 1e-8 * (1.0 + ds.max_abs_output());
        for (x, y) in ds.inputs.iter().zip(&ds.outputs) {
            assert!((m.eval(x) - y).abs() <= cap);
        }
        assert!(m.max_train_residual <= cap);
    }

    #[test]
    fn sinc_merges_bit_identical_nodes() {
        let ds = hand_dataset(
            vec![vec![0.0], vec![0.0], vec![1.0]],
            vec![1.0, 3.0, 5.0],
        );
        let m = fit_sinc_interpolant(&ds, 2.0, 1e-10).unwrap();
        assert_eq!(m.nodes.len(), 2);
        // Averaged output at the merged node.
        assert!((m.eval(&[0.0]) - 2.0).abs() < 0.2);
    }

    #[test]
    fn gram_matrix_is_psd_up_to_roundoff() {
        let dist = InputDistribution::IsotropicGaussian { k: 2, sigma: 1.0 };
        let pts = draw_inputs(&dist, 24, 31).unwrap();
        let n = pts.len();
        let mut gram = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                gram[(i, j)] = kernel(&pts[i], &pts[j], 3.0);
            }
        }
        for i in 0..n {
            assert_eq!(gram[(i, i)], 1.0);
            for j in 0..n {
                assert_eq!(gram[(i, j)].to_bits(), gram[(j, i)].to_bits());
            }
        }
        let eig = gram.symmetric_eigenvalues();
        for e in eig.iter() {
            assert!(*e >= -1e-10, "eigenvalue {e}");
        }
    }

    #[test]
    fn model_json_round_trip_is_bit_exact() {
        let t = Target::Cosine(synth_strict(1, 0.5, 3, 1.0, 4).unwrap());
        let dist = InputDistribution::IsotropicGaussian { k: 1, sigma: 1.0 };
        let ds = make_dataset(&t, &dist, 9, 5).unwrap();
        for model in [
            Model::Poly(fit_polynomial(&ds, &PolyFitOptions::default()).unwrap()),
            Model::Sinc(fit_sinc_interpolant(&ds, 3.0, 1e-10).unwrap()),
        ] {
            let json = serde_json::to_string(&model).unwrap();
            let back: Model = serde_json::from_str(&json).unwrap();
            for x in [-1.3, 0.0, 0.7, 2.1] {
                assert_eq!(model.eval(&[x]).to_bits(), back.eval(&[x]).to_bits());
            }
        }
    }

    #[test]
    fn coefficient_band_check_hand_cases() {
        // Constant model at the sup bound: passes for any band.
        let mut constant = PolynomialModel::zero(1);
        constant.coefficients[0] = 1.0;
        assert!(bernstein_check_model(&constant, 0.5, 1.0).unwrap().pass);

        // 1 + 2x with B=1, H=1: the slope coefficient violates the bound.
        let line = PolynomialModel {
            schema_version: 1,
            k: 1,
            degree: 1,
            center: vec![0.0],
            input_scale: 1.0,
            coefficients: vec![1.0, 2.0],
            condition_estimate: 1.0,
            residual_norm: 0.0,
            degenerate: false,
        };
        let report = bernstein_check_model(&line, 1.0, 1.0).unwrap();
        assert!(!report.pass);
        assert!(report.orders[0].pass);
        assert!(!report.orders[1].pass);

        // Degree-6 truncation of cos(x): |c_α|·α! = 1 exactly at even orders.
        let mut cos_coeffs = vec![0.0; 7];
        let mut sign = 1.0;
        for e in (0..=6).step_by(2) {
            cos_coeffs[e] = sign / MultiIndex::new(vec![e as u32]).factorial();
            sign = -sign;
        }
        let cos_trunc = PolynomialModel {
            schema_version: 1,
            k: 1,
            degree: 6,
            center: vec![0.0],
            input_scale: 1.0,
            coefficients: cos_coeffs,
            condition_estimate: 1.0,
            residual_norm: 0.0,
            degenerate: false,
        };
        assert!(bernstein_check_model(&cos_trunc, 1.0, 1.0).unwrap().pass);
    }

    #[test]
    fn learner_spec_dispatch() {
        let t = Target::Cosine(synth_strict(1, 0.5, 3, 1.0, 4).unwrap());
        let dist = InputDistribution::IsotropicGaussian { k: 1, sigma: 1.0 };
        let ds = make_dataset(&t, &dist, 8, 6).unwrap();
        let poly = LearnerSpec::Poly {
            degree: None,
            degree_cap: None,
            exact: false,
        }
        .fit_model(&ds)
        .unwrap();
        assert_eq!(poly.degree_or_band(), 7.0);
        let sinc = LearnerSpec::Sinc {
            band: 4.0,
            ridge: 1e-10,
        }
        .fit_model(&ds)
        .unwrap();
        assert_eq!(sinc.degree_or_band(), 4.0);
        let zero = LearnerSpec::Zero.fit_model(&ds).unwrap();
        assert_eq!(zero.eval(&[0.3]), 0.0);
        assert!(LearnerSpec::Oracle.fit_model(&ds).is_err());
    }

    #[test]
    fn eval_model_checks_dimensions() {
        let m = Model::Poly(PolynomialModel::zero(2));
        assert!(eval_model(&m, &[0.0, 1.0]).is_ok());
        assert!(eval_model(&m, &[0.0]).is_err());
    }
}
