//! Measurement sampling and most-frequent-outcome recovery.
//!
//! A projected state is read out by measuring `N` copies in the computational
//! basis and keeping the outcome seen most often. The gap condition below
//! bounds the `N` for which that outcome is the true mode with probability at
//! least `1 - delta`:
//!
//! ```text
//! p_max - p_secmax > 2 * sqrt(2 ln(4K / delta) / N)
//! ```
//!
//! where `K` counts categories with non-zero probability. The looser variant
//! that puts the sample count inside the logarithm is available as
//! [`GapFormula::Literal`].

use rand::Rng;
use rayon::prelude::*;

use crate::dca::argmax_by_key;
use crate::error::{Error, Result};
use crate::seed;

const SUM_TOL: f64 = 1e-9;

/// Outcome counts from `draws` categorical samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleRecord {
    pub counts: Vec<u64>,
    pub draws: u64,
    pub seed: u64,
}

impl SampleRecord {
    pub fn categories(&self) -> usize {
        self.counts.len()
    }

    /// Largest and second-largest counts.
    pub fn top_two(&self) -> (u64, u64) {
        let mut first = 0;
        let mut second = 0;
        for &c in &self.counts {
            if c > first {
                second = first;
                first = c;
            } else if c > second {
                second = c;
            }
        }
        (first, second)
    }

    pub fn distinct_outcomes(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

/// Checks a probability vector and returns it normalized to sum one.
pub fn validate_probabilities(p: &[f64]) -> Result<Vec<f64>> {
    if p.is_empty() {
        return Err(Error::InvalidProbabilities("empty probability vector".into()));
    }
    if let Some((i, &v)) = p.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidProbabilities(format!(
            "p[{i}] = {v} is negative or not finite"
        )));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > SUM_TOL {
        return Err(Error::InvalidProbabilities(format!("probabilities sum to {total}")));
    }
    Ok(p.iter().map(|v| v / total).collect())
}

/// Inverse-CDF sampler over a fixed categorical distribution.
#[derive(Debug, Clone)]
pub struct CategoricalSampler {
    cumulative: Vec<f64>,
    last_positive: usize,
}

impl CategoricalSampler {
    pub fn new(p: &[f64]) -> Result<Self> {
        let p = validate_probabilities(p)?;
        let mut acc = 0.0;
        let cumulative = p
            .iter()
            .map(|v| {
                acc += v;
                acc
            })
            .collect();
        let last_positive = p.iter().rposition(|&v| v > 0.0).unwrap_or(0);
        Ok(Self {
            cumulative,
            last_positive,
        })
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty");
        let u = rng.random::<f64>() * total;
        let k = self.cumulative.partition_point(|&c| c <= u);
        k.min(self.last_positive)
    }

    pub fn categories(&self) -> usize {
        self.cumulative.len()
    }
}

fn sample_counts(sampler: &CategoricalSampler, draws: u64, seed: u64) -> Vec<u64> {
    let mut rng = seed::rng(seed);
    let mut counts = vec![0u64; sampler.categories()];
    for _ in 0..draws {
        counts[sampler.sample(&mut rng)] += 1;
    }
    counts
}

/// `draws` i.i.d. computational-basis outcomes from distribution `p`.
pub fn measure_samples(p: &[f64], draws: u64, seed: u64) -> Result<SampleRecord> {
    if draws == 0 {
        return Err(Error::InvalidParameter("sample count N must be >= 1".into()));
    }
    let sampler = CategoricalSampler::new(p)?;
    Ok(SampleRecord {
        counts: sample_counts(&sampler, draws, seed),
        draws,
        seed,
    })
}

/// Most frequent outcome, ties toward the lowest index.
pub fn most_frequent_index(rec: &SampleRecord) -> usize {
    let mut best = 0;
    for (i, &c) in rec.counts.iter().enumerate() {
        if c > rec.counts[best] {
            best = i;
        }
    }
    best
}

/// Mode of `p`, ties toward the lowest index.
pub fn distribution_mode(p: &[f64]) -> usize {
    argmax_by_key(p, |v| v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GapFormula {
    /// Support size inside the logarithm, sample count in the denominator.
    #[default]
    SupportSize,
    /// Sample count both inside the logarithm and in the denominator.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapReport {
    pub p_max: f64,
    pub p_sec_max: f64,
    pub threshold: f64,
    pub satisfied: bool,
    /// Categories with non-zero probability.
    pub support: usize,
}

impl GapReport {
    pub fn gap(&self) -> f64 {
        self.p_max - self.p_sec_max
    }
}

/// `(p_max, p_secmax)`; a repeated maximum gives a zero gap.
pub fn top_two(p: &[f64]) -> (f64, f64) {
    let mut first = f64::NEG_INFINITY;
    let mut second = 0.0_f64;
    for &v in p {
        if v > first {
            second = first.max(0.0);
            first = v;
        } else if v > second {
            second = v;
        }
    }
    (first.max(0.0), second)
}

/// Gap threshold for `draws` samples at failure probability `delta`.
pub fn gap_threshold(support: usize, draws: u64, delta: f64, formula: GapFormula) -> f64 {
    let n = draws as f64;
    let inside = match formula {
        GapFormula::SupportSize => support.max(1) as f64,
        GapFormula::Literal => n,
    };
    2.0 * (2.0 * (4.0 * inside / delta).ln() / n).sqrt()
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    Ok(())
}

pub fn gap_condition(p: &[f64], draws: u64, delta: f64) -> Result<GapReport> {
    gap_condition_with(p, draws, delta, GapFormula::SupportSize)
}

pub fn gap_condition_with(p: &[f64], draws: u64, delta: f64, formula: GapFormula) -> Result<GapReport> {
    check_delta(delta)?;
    if draws == 0 {
        return Err(Error::InvalidParameter("sample count N must be >= 1".into()));
    }
    let p = validate_probabilities(p)?;
    let (p_max, p_sec_max) = top_two(&p);
    let support = p.iter().filter(|&&v| v > 0.0).count();
    let threshold = gap_threshold(support, draws, delta, formula);
    Ok(GapReport {
        p_max,
        p_sec_max,
        threshold,
        satisfied: p_max - p_sec_max > threshold,
        support,
    })
}

/// Smallest `N` for which the gap condition holds.
pub fn required_samples(p: &[f64], delta: f64) -> Result<u64> {
    required_samples_with(p, delta, GapFormula::SupportSize)
}

pub fn required_samples_with(p: &[f64], delta: f64, formula: GapFormula) -> Result<u64> {
    check_delta(delta)?;
    let p = validate_probabilities(p)?;
    let (p_max, p_sec) = top_two(&p);
    let gap = p_max - p_sec;
    if gap <= 0.0 {
        return Err(Error::NoFiniteSampleCount);
    }
    let support = p.iter().filter(|&&v| v > 0.0).count();
    let holds = |n: u64| gap > gap_threshold(support, n, delta, formula);

    let mut hi: u64 = 1;
    while !holds(hi) {
        hi = hi.checked_mul(2).ok_or(Error::NoFiniteSampleCount)?;
    }
    // Invariant: holds(hi), and either lo == 0 or !holds(lo).
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Fraction of `trials` in which the most frequent of `draws` outcomes is the
/// mode of `p`.
pub fn empirical_recovery_rate(p: &[f64], draws: u64, trials: usize, seed: u64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    if draws == 0 {
        return Err(Error::InvalidParameter("sample count N must be >= 1".into()));
    }
    let sampler = CategoricalSampler::new(p)?;
    let mode = distribution_mode(p);
    let hits = (0..trials)
        .into_par_iter()
        .filter(|&t| {
            let counts = sample_counts(&sampler, draws, seed::derive(seed, "recovery/trial", t as u64));
            let rec = SampleRecord { counts, draws, seed: 0 };
            most_frequent_index(&rec) == mode
        })
        .count();
    Ok(hits as f64 / trials as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BhcReport {
    /// Fraction of trials with `sum_i |N_i/N - p_i| >= lambda`.
    pub exceedance_rate: f64,
    /// `min(1, 2^l exp(-N lambda^2 / 2))`, `l = p.len()`.
    pub bound: f64,
    /// Three binomial standard deviations at the bound.
    pub slack: f64,
    pub passed: bool,
}

/// `2^l exp(-N lambda^2 / 2)`, capped at one.
pub fn bhc_bound(categories: usize, draws: u64, lambda: f64) -> f64 {
    let log_bound = categories as f64 * std::f64::consts::LN_2 - draws as f64 * lambda * lambda / 2.0;
    log_bound.exp().min(1.0)
}

pub fn bhc_deviation_check(p: &[f64], draws: u64, lambda: f64, trials: usize, seed: u64) -> Result<BhcReport> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must be > 0, got {lambda}")));
    }
    if trials == 0 || draws == 0 {
        return Err(Error::InvalidParameter("trials and N must be >= 1".into()));
    }
    let sampler = CategoricalSampler::new(p)?;
    let probs = validate_probabilities(p)?;
    let n = draws as f64;
    let exceed = (0..trials)
        .into_par_iter()
        .filter(|&t| {
            let counts = sample_counts(&sampler, draws, seed::derive(seed, "bhc/trial", t as u64));
            let l1: f64 = counts
                .iter()
                .zip(&probs)
                .map(|(&c, &pi)| (c as f64 / n - pi).abs())
                .sum();
            l1 >= lambda
        })
        .count();
    let rate = exceed as f64 / trials as f64;
    let bound = bhc_bound(p.len(), draws, lambda);
    let slack = 3.0 * (bound * (1.0 - bound) / trials as f64).sqrt();
    Ok(BhcReport {
        exceedance_rate: rate,
        bound,
        slack,
        passed: rate <= bound + slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn point_mass_counts() {
        let rec = measure_samples(&[1.0, 0.0, 0.0], 50, 1).unwrap();
        assert_eq!(rec.counts, vec![50, 0, 0]);
        assert_eq!(rec.draws, 50);
    }

    #[test]
    fn zero_probability_categories_never_drawn() {
        let rec = measure_samples(&[0.5, 0.0, 0.5, 0.0], 10_000, 3).unwrap();
        assert_eq!(rec.counts[1], 0);
        assert_eq!(rec.counts[3], 0);
    }

    #[test]
    fn fair_coin_within_clt_bound() {
        let rec = measure_samples(&[0.5, 0.5], 100_000, 17).unwrap();
        let f = rec.counts[0] as f64 / 1e5;
        assert!((f - 0.5).abs() <= 4.0 * (0.25f64 / 1e5).sqrt(), "{f}");
    }

    #[test]
    fn measure_is_deterministic() {
        let p = [0.2, 0.3, 0.5];
        assert_eq!(
            measure_samples(&p, 1000, 9).unwrap(),
            measure_samples(&p, 1000, 9).unwrap()
        );
    }

    #[test]
    fn measure_rejects_bad_input() {
        assert!(measure_samples(&[1.2, -0.2], 10, 0).is_err());
        assert!(measure_samples(&[0.5, 0.4], 10, 0).is_err());
        assert!(measure_samples(&[1.0], 0, 0).is_err());
    }

    #[test]
    fn chi_square_does_not_reject() {
        let p = [0.2, 0.3, 0.5];
        let n = 100_000u64;
        let rec = measure_samples(&p, n, 2024).unwrap();
        let chi2: f64 = rec
            .counts
            .iter()
            .zip(&p)
            .map(|(&o, &pi)| {
                let e = pi * n as f64;
                (o as f64 - e).powi(2) / e
            })
            .sum();
        // Two degrees of freedom: P(chi2 > x) = exp(-x / 2).
        let critical = 2.0 * 1e6f64.ln();
        assert!(chi2 < critical, "chi2 = {chi2}");
    }

    #[test]
    fn most_frequent_examples() {
        let rec = |c: Vec<u64>| SampleRecord {
            draws: c.iter().sum(),
            counts: c,
            seed: 0,
        };
        assert_eq!(most_frequent_index(&rec(vec![3, 5, 2])), 1);
        assert_eq!(most_frequent_index(&rec(vec![4, 4])), 0);
    }

    #[test]
    fn gap_examples() {
        let r = gap_condition(&[0.6, 0.3, 0.1], 10_000, 0.05).unwrap();
        let expected = 2.0 * (2.0 * 240f64.ln() / 1e4).sqrt();
        assert!((r.threshold - expected).abs() < 1e-15);
        assert!((r.threshold - 0.0662).abs() < 5e-5);
        assert!(r.satisfied);
        assert!((r.gap() - 0.3).abs() < 1e-12);

        let u = gap_condition(&[0.25; 4], 1_000_000, 0.5).unwrap();
        assert_eq!(u.gap(), 0.0);
        assert!(!u.satisfied);
    }

    #[test]
    fn point_mass_gap_is_satisfied_once_threshold_drops_below_one() {
        // Support size 1: threshold < 1 iff N > 8 ln 40 = 29.5.
        assert!(!gap_condition(&[1.0, 0.0], 29, 0.1).unwrap().satisfied);
        for n in [30, 100, 10_000] {
            assert!(gap_condition(&[1.0, 0.0], n, 0.1).unwrap().satisfied);
        }
    }

    #[test]
    fn literal_formula_is_looser_for_large_n() {
        let p = [0.6, 0.3, 0.1];
        let a = gap_condition_with(&p, 10_000, 0.05, GapFormula::SupportSize).unwrap();
        let b = gap_condition_with(&p, 10_000, 0.05, GapFormula::Literal).unwrap();
        assert!(b.threshold > a.threshold);
        let expected = 2.0 * (2.0 * (4.0 * 1e4 / 0.05f64).ln() / 1e4).sqrt();
        assert!((b.threshold - expected).abs() < 1e-15);
    }

    #[test]
    fn required_samples_point_mass_matches_scan() {
        let n = required_samples(&[1.0, 0.0], 0.1).unwrap();
        let scan = (1u64..)
            .find(|&k| 2.0 * (2.0 * 40f64.ln() / k as f64).sqrt() < 1.0)
            .unwrap();
        assert_eq!(n, scan);
        assert_eq!(n, 30);
    }

    #[test]
    fn required_samples_bracket() {
        for formula in [GapFormula::SupportSize, GapFormula::Literal] {
            let p = [0.6, 0.3, 0.1];
            let n = required_samples_with(&p, 0.05, formula).unwrap();
            assert!(gap_condition_with(&p, n, 0.05, formula).unwrap().satisfied);
            assert!(!gap_condition_with(&p, n - 1, 0.05, formula).unwrap().satisfied);
        }
    }

    #[test]
    fn required_samples_zero_gap() {
        assert!(matches!(
            required_samples(&[0.5, 0.5], 0.1),
            Err(Error::NoFiniteSampleCount)
        ));
    }

    #[test]
    fn recovery_examples() {
        assert_eq!(empirical_recovery_rate(&[1.0, 0.0, 0.0], 5, 200, 1).unwrap(), 1.0);
        let rate = empirical_recovery_rate(&[0.5, 0.5], 10_001, 2000, 4).unwrap();
        assert!((rate - 0.5).abs() <= 3.0 * (0.25f64 / 2000.0).sqrt(), "{rate}");
    }

    #[test]
    fn bhc_examples() {
        let far = bhc_deviation_check(&[0.3, 0.7], 10, 2.5, 500, 0).unwrap();
        assert_eq!(far.exceedance_rate, 0.0);
        assert!(far.passed);

        let r = bhc_deviation_check(&[0.5, 0.5], 100, 0.5, 10_000, 8).unwrap();
        assert!((r.bound - 4.0 * (-12.5f64).exp()).abs() < 1e-18);
        assert_eq!(r.exceedance_rate, 0.0);
        assert!(r.passed);

        let vacuous = bhc_deviation_check(&[0.2, 0.3, 0.5], 5, 0.1, 300, 0).unwrap();
        assert_eq!(vacuous.bound, 1.0);
        assert!(vacuous.passed);
    }

    proptest! {
        #[test]
        fn most_frequent_ignores_appended_zero_categories(
            counts in prop::collection::vec(0u64..50, 1..20),
            extra in 0usize..5,
        ) {
            let draws = counts.iter().sum();
            let a = SampleRecord { counts: counts.clone(), draws, seed: 0 };
            let mut padded = counts;
            padded.extend(std::iter::repeat_n(0, extra));
            let b = SampleRecord { counts: padded, draws, seed: 0 };
            prop_assert_eq!(most_frequent_index(&a), most_frequent_index(&b));
        }

        #[test]
        fn counts_sum_to_draws(w in prop::collection::vec(0.0f64..1.0, 1..10), n in 1u64..500, seed: u64) {
            let total: f64 = w.iter().sum();
            prop_assume!(total > 0.0);
            let p: Vec<f64> = w.iter().map(|v| v / total).collect();
            let rec = measure_samples(&p, n, seed).unwrap();
            prop_assert_eq!(rec.counts.iter().sum::<u64>(), n);
        }

        #[test]
        fn smaller_gap_needs_no_fewer_samples(a in 0.05f64..0.5, b in 0.05f64..0.5) {
            let (big, small) = if a > b { (a, b) } else { (b, a) };
            let p = |g: f64| [0.5 + g / 2.0, 0.5 - g / 2.0];
            prop_assert!(required_samples(&p(small), 0.1).unwrap() >= required_samples(&p(big), 0.1).unwrap());
        }
    }
}
