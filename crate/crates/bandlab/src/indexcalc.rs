//! Multi-index combinatorics over K variables and the stable scalar helpers
//! shared by learners and bound formulas.
//!
//! Every coefficient vector in this crate is aligned to the graded
//! lexicographic order produced by [`enumerate_multi_indices`], so models are
//! serializable and comparable across runs. Factorials are evaluated in log
//! space; naive evaluation of the bound formulas overflows doubles near
//! degree 170.

use crate::error::{Error, Result};

/// Exponent tuple α = (α_1, ..., α_K) with order |α| = Σ_k α_k.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    exponents: Vec<u32>,
}

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        assert!(!exponents.is_empty(), "multi-index needs at least one slot");
        MultiIndex { exponents }
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    /// |α|, the total order.
    pub fn order(&self) -> u32 {
        self.exponents.iter().sum()
    }

    /// α! = Π_k α_k! as a float; exact for every order this crate fits.
    pub fn factorial(&self) -> f64 {
        self.exponents
            .iter()
            .map(|&e| (1..=e as u128).product::<u128>() as f64)
            .product()
    }

    /// ln(α!) = Σ_k ln(α_k!), safe for arbitrary orders.
    pub fn log_factorial(&self) -> f64 {
        self.exponents.iter().map(|&e| log_factorial(e as u64)).sum()
    }
}

/// All multi-indices with |α| ≤ n in graded lexicographic order: ascending
/// total order, and within an order the leading exponents decrease first,
/// e.g. K=2, n=2 → (0,0),(1,0),(0,1),(2,0),(1,1),(0,2).
pub fn enumerate_multi_indices(k: usize, n: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for_each_multi_index(k, n, &mut |_, exps| out.push(MultiIndex::new(exps.to_vec())));
    out
}

/// Visits (position, exponents) pairs in graded-lex order without allocating
/// per index; the hot path for model evaluation.
pub(crate) fn for_each_multi_index(k: usize, n: u32, f: &mut impl FnMut(usize, &[u32])) {
    assert!(k >= 1, "dimension must be at least 1");
    let mut scratch = vec![0u32; k];
    let mut pos = 0;
    for order in 0..=n {
        visit_compositions(order, 0, &mut scratch, &mut pos, f);
    }
}

fn visit_compositions(
    rest: u32,
    depth: usize,
    scratch: &mut [u32],
    pos: &mut usize,
    f: &mut impl FnMut(usize, &[u32]),
) {
    if depth == scratch.len() - 1 {
        scratch[depth] = rest;
        f(*pos, scratch);
        *pos += 1;
        return;
    }
    for e in (0..=rest).rev() {
        scratch[depth] = e;
        visit_compositions(rest - e, depth + 1, scratch, pos, f);
    }
}

/// Number of monomials of total degree ≤ n in K variables: C(n+K, K).
pub fn count_monomials(k: usize, n: u32) -> Result<u64> {
    assert!(k >= 1, "dimension must be at least 1");
    // Multiplicative formula with exact intermediate division: after the
    // i-th step the accumulator equals C(n+i, i), an integer.
    let mut acc: u128 = 1;
    for i in 1..=k as u128 {
        acc = acc
            .checked_mul(n as u128 + i)
            .ok_or_else(|| Error::Capacity(format!("monomial count overflow at K={k}, n={n}")))?
            / i;
    }
    u64::try_from(acc)
        .map_err(|_| Error::Capacity(format!("monomial count overflow at K={k}, n={n}")))
}

/// Largest degree n with count_monomials(K, n) ≤ N, clamped to `n_cap`.
pub fn degree_for_sample_count(n_samples: u64, k: usize, n_cap: u32) -> u32 {
    let mut degree = 0;
    while degree < n_cap {
        match count_monomials(k, degree + 1) {
            Ok(c) if c <= n_samples => degree += 1,
            _ => break,
        }
    }
    degree
}

/// ln(m!) with relative error below 1e-12 for m up to 10^6.
///
/// Exact integer factorial for m ≤ 20 (fits in u128 with margin), Stirling's
/// series with terms through 1/(1680 m^7) beyond; the first dropped term at
/// m = 21 is below 1e-16 relative.
pub fn log_factorial(m: u64) -> f64 {
    if m < 2 {
        return 0.0;
    }
    if m <= 20 {
        let exact: u128 = (2..=m as u128).product();
        return (exact as f64).ln();
    }
    let x = m as f64;
    let x2 = x * x;
    x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln() + 1.0 / (12.0 * x)
        - 1.0 / (360.0 * x * x2)
        + 1.0 / (1260.0 * x * x2 * x2)
        - 1.0 / (1680.0 * x * x2 * x2 * x2)
}

/// (x − center)^α; the empty product is 1.
pub fn monomial_eval(x: &[f64], alpha: &MultiIndex, center: &[f64]) -> Result<f64> {
    if x.len() != alpha.dim() || center.len() != alpha.dim() {
        return Err(Error::DimensionMismatch(format!(
            "monomial_eval: x has {} coords, center {}, index {}",
            x.len(),
            center.len(),
            alpha.dim()
        )));
    }
    Ok(monomial_eval_raw(x, alpha.exponents(), center))
}

#[inline]
pub(crate) fn monomial_eval_raw(x: &[f64], exponents: &[u32], center: &[f64]) -> f64 {
    let mut prod = 1.0;
    for k in 0..exponents.len() {
        if exponents[k] > 0 {
            prod *= (x[k] - center[k]).powi(exponents[k] as i32);
        }
    }
    prod
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(e: &[u32]) -> MultiIndex {
        MultiIndex::new(e.to_vec())
    }

    #[test]
    fn enumeration_matches_hand_cases() {
        let got: Vec<Vec<u32>> = enumerate_multi_indices(1, 2)
            .iter()
            .map(|a| a.exponents().to_vec())
            .collect();
        assert_eq!(got, vec![vec![0], vec![1], vec![2]]);

        let got: Vec<Vec<u32>> = enumerate_multi_indices(2, 1)
            .iter()
            .map(|a| a.exponents().to_vec())
            .collect();
        assert_eq!(got, vec![vec![0, 0], vec![1, 0], vec![0, 1]]);

        let got = enumerate_multi_indices(3, 0);
        assert_eq!(got, vec![idx(&[0, 0, 0])]);

        let got: Vec<Vec<u32>> = enumerate_multi_indices(2, 2)
            .iter()
            .map(|a| a.exponents().to_vec())
            .collect();
        assert_eq!(
            got,
            vec![
                vec![0, 0],
                vec![1, 0],
                vec![0, 1],
                vec![2, 0],
                vec![1, 1],
                vec![0, 2]
            ]
        );
    }

    #[test]
    fn enumeration_is_deterministic_and_duplicate_free() {
        let a = enumerate_multi_indices(3, 5);
        let b = enumerate_multi_indices(3, 5);
        assert_eq!(a, b);
        let mut seen = std::collections::HashSet::new();
        for m in &a {
            assert!(seen.insert(m.clone()), "duplicate index {m:?}");
        }
        // Orders ascend.
        for w in a.windows(2) {
            assert!(w[0].order() <= w[1].order());
        }
    }

    #[test]
    fn counts_match_enumeration_lengths() {
        for k in 1..=4 {
            for n in 0..=8 {
                let count = count_monomials(k, n).unwrap();
                assert_eq!(count as usize, enumerate_multi_indices(k, n).len());
            }
        }
        assert_eq!(count_monomials(2, 2).unwrap(), 6);
        assert_eq!(count_monomials(5, 0).unwrap(), 1);
        assert_eq!(count_monomials(1, 9).unwrap(), 10);
    }

    #[test]
    fn count_overflow_is_a_capacity_error() {
        assert!(matches!(
            count_monomials(64, u32::MAX),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn degree_selection_matches_hand_cases() {
        assert_eq!(degree_for_sample_count(6, 2, 99), 2);
        assert_eq!(degree_for_sample_count(5, 2, 99), 1);
        assert_eq!(degree_for_sample_count(1000, 1, 10), 10);
        assert_eq!(degree_for_sample_count(1, 3, 99), 0);
    }

    #[test]
    fn degree_selection_is_monotone_and_consistent() {
        let mut prev = 0;
        for n_samples in 1..200u64 {
            let d = degree_for_sample_count(n_samples, 2, 99);
            assert!(d >= prev, "not monotone at N={n_samples}");
            assert!(count_monomials(2, d).unwrap() <= n_samples);
            prev = d;
        }
    }

    #[test]
    fn log_factorial_small_values_are_exact() {
        assert_eq!(log_factorial(0), 0.0);
        assert_eq!(log_factorial(1), 0.0);
        assert!((log_factorial(5) - 120f64.ln()).abs() < 1e-14);
        let mut fact = 1u128;
        for m in 1..=20u64 {
            fact *= m as u128;
            let rel = (log_factorial(m) - (fact as f64).ln()).abs() / (fact as f64).ln().max(1.0);
            assert!(rel < 1e-10, "m={m}");
        }
    }

    #[test]
    fn log_factorial_matches_direct_summation() {
        // Direct-sum oracle with compensated accumulation.
        for &m in &[21u64, 25, 50, 100, 300, 1_000, 10_000, 1_000_000] {
            let mut sum = 0.0f64;
            let mut comp = 0.0f64;
            for k in 2..=m {
                let term = (k as f64).ln();
                let t = sum + term;
                comp += if sum.abs() >= term.abs() {
                    (sum - t) + term
                } else {
                    (term - t) + sum
                };
                sum = t;
            }
            let oracle = sum + comp;
            let rel = (log_factorial(m) - oracle).abs() / oracle;
            assert!(rel < 1e-12, "m={m} rel={rel:e}");
        }
    }

    #[test]
    fn monomial_eval_hand_cases() {
        let a = idx(&[1, 2]);
        assert_eq!(monomial_eval(&[2.0, 3.0], &a, &[0.0, 0.0]).unwrap(), 18.0);
        let zero = idx(&[0, 0, 0]);
        assert_eq!(
            monomial_eval(&[5.0, -1.0, 9.0], &zero, &[1.0, 1.0, 1.0]).unwrap(),
            1.0
        );
        let cube = idx(&[3]);
        assert_eq!(monomial_eval(&[1.0], &cube, &[1.0]).unwrap(), 0.0);
        assert!(monomial_eval(&[1.0, 2.0], &cube, &[0.0]).is_err());
    }

    #[test]
    fn multi_index_factorials() {
        let a = idx(&[3, 2, 0]);
        assert_eq!(a.order(), 5);
        assert_eq!(a.factorial(), 12.0);
        assert!((a.log_factorial() - 12f64.ln()).abs() < 1e-14);
    }
}
