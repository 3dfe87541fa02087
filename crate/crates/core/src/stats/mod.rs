//! Goodness-of-fit tests used to check the sampler's distributional claims.

mod experiments;
mod gamma;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

pub use experiments::{
    canonical_equivalence, canonical_sample, choice_counts, dynamic_scratch_mismatches, max_stability,
    representation_law, run_choice_experiment, DynamicOutcome, EquivalenceOutcome, MaxStabilityOutcome,
};
pub use gamma::{chi_square_sf, gamma_p, gamma_q, ln_gamma};

/// Significance used for every acceptance decision.
pub const ACCEPTANCE_SIGNIFICANCE: f64 = 1e-3;

/// Levels reported in [`GofReport::reject_at`].
pub const REPORTED_LEVELS: [f64; 3] = [0.05, 0.01, 0.001];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestKind {
    ChiSquare,
    ChiSquareTwoSample,
    KsOneSample,
    KsTwoSample,
}

impl TestKind {
    pub fn name(self) -> &'static str {
        match self {
            TestKind::ChiSquare => "chi-square",
            TestKind::ChiSquareTwoSample => "chi-square-two-sample",
            TestKind::KsOneSample => "ks-one-sample",
            TestKind::KsTwoSample => "ks-two-sample",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GofReport {
    pub test: TestKind,
    pub statistic: f64,
    /// Degrees of freedom for chi-square tests, sample size for KS (the
    /// effective size `nm/(n+m)`, rounded down, for two samples).
    pub df_or_n: u64,
    pub p_value: f64,
    /// `p_value < level` for each of [`REPORTED_LEVELS`].
    pub reject_at: BTreeMap<String, bool>,
}

impl GofReport {
    fn new(test: TestKind, statistic: f64, df_or_n: u64, p_value: f64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        let reject_at = REPORTED_LEVELS
            .iter()
            .map(|&s| (s.to_string(), p_value < s))
            .collect();
        GofReport {
            test,
            statistic,
            df_or_n,
            p_value,
            reject_at,
        }
    }

    pub fn rejects(&self, significance: f64) -> bool {
        self.p_value < significance
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

impl fmt::Display for GofReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dim = match self.test {
            TestKind::ChiSquare | TestKind::ChiSquareTwoSample => "df",
            TestKind::KsOneSample | TestKind::KsTwoSample => "n",
        };
        write!(
            f,
            "{} statistic={} {}={} p={}",
            self.test.name(),
            self.statistic,
            dim,
            self.df_or_n,
            self.p_value
        )?;
        for (level, rejected) in &self.reject_at {
            write!(f, " reject@{}={}", level, if *rejected { "yes" } else { "no" })?;
        }
        Ok(())
    }
}

/// Pearson chi-square goodness of fit of counts against probabilities.
pub fn chi_square_gof(observed: &[u64], expected_probs: &[f64]) -> Result<GofReport> {
    if observed.len() != expected_probs.len() {
        return Err(Error::InvalidArgument(format!(
            "{} observed cells but {} probabilities",
            observed.len(),
            expected_probs.len()
        )));
    }
    if observed.len() < 2 {
        return Err(Error::InvalidArgument("chi-square needs at least two cells".into()));
    }
    let sum: f64 = expected_probs.iter().sum();
    if (sum - 1.0).abs() > (2.0f64).powi(-30) {
        return Err(Error::ProbabilitySum { sum });
    }
    let n: u64 = observed.iter().sum();
    let mut statistic = 0.0;
    for (cell, (&o, &p)) in observed.iter().zip(expected_probs).enumerate() {
        let e = n as f64 * p;
        if !(e >= 5.0) {
            return Err(Error::ExpectedCountTooSmall { cell, expected: e });
        }
        let d = o as f64 - e;
        statistic += d * d / e;
    }
    let df = observed.len() as u64 - 1;
    Ok(GofReport::new(TestKind::ChiSquare, statistic, df, chi_square_sf(statistic, df)))
}

/// Chi-square test that two count vectors come from the same distribution
/// (2 x k contingency table).
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> Result<GofReport> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::InvalidArgument("two-sample chi-square needs equal-length count vectors of at least two cells".into()));
    }
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    let total = na + nb;
    let mut statistic = 0.0;
    for (cell, (&x, &y)) in a.iter().zip(b).enumerate() {
        let col = (x + y) as f64;
        for (obs, rowsum) in [(x as f64, na), (y as f64, nb)] {
            let e = rowsum * col / total;
            if !(e >= 5.0) {
                return Err(Error::ExpectedCountTooSmall { cell, expected: e });
            }
            statistic += (obs - e) * (obs - e) / e;
        }
    }
    let df = a.len() as u64 - 1;
    Ok(GofReport::new(TestKind::ChiSquareTwoSample, statistic, df, chi_square_sf(statistic, df)))
}

/// Asymptotic Kolmogorov tail `P(K > lambda) = 2 Σ (-1)^(k-1) exp(-2 k² λ²)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    // Below 0.2 the tail is 1 to within 1e-20 and the series converges slowly.
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=10_000u32 {
        let k = k as f64;
        let term = 2.0 * (-2.0 * k * k * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-10 {
            break;
        }
        sign = -sign;
    }
    sum.clamp(0.0, 1.0)
}

const KS_MIN: usize = 100;

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<GofReport> {
    if samples.len() < KS_MIN {
        return Err(Error::TooFewSamples {
            what: "ks_one_sample",
            got: samples.len(),
            min: KS_MIN,
        });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0f64, f64::max);
    Ok(GofReport::new(TestKind::KsOneSample, d, sorted.len() as u64, kolmogorov_sf(n.sqrt() * d)))
}

/// Two-sample Kolmogorov-Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<GofReport> {
    for (what, s) in [("ks_two_sample (first)", a), ("ks_two_sample (second)", b)] {
        if s.len() < KS_MIN {
            return Err(Error::TooFewSamples {
                what,
                got: s.len(),
                min: KS_MIN,
            });
        }
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let effective = n * m / (n + m);
    Ok(GofReport::new(TestKind::KsTwoSample, d, effective as u64, kolmogorov_sf(effective.sqrt() * d)))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Q(df/2, x/2), 40-digit reference values.
    const REFERENCE: [(u64, f64, f64); 4] = [
        (1, 1.0, 0.31731050786291410283),
        (3, 4.0, 0.26146412994911062220),
        (10, 15.0, 0.13206185628772060782),
        (20, 30.0, 0.069853660699409767692),
    ];

    #[test]
    fn exact_counts_give_zero_statistic() {
        let r = chi_square_gof(&[100, 200, 300], &[1.0 / 6.0, 1.0 / 3.0, 0.5]).unwrap();
        assert!(r.statistic.abs() < 1e-12);
        assert!((r.p_value - 1.0).abs() < 1e-12);
        assert_eq!(r.df_or_n, 2);
    }

    #[test]
    fn p_values_match_reference() {
        assert!((chi_square_sf(2.0, 2) - (-1.0f64).exp()).abs() < 1e-8);
        for (df, x, q) in REFERENCE {
            let got = chi_square_sf(x, df);
            assert!(((got - q) / q).abs() < 1e-8, "df={df} x={x}: {got} vs {q}");
        }
    }

    #[test]
    fn chi_square_preconditions() {
        assert!(matches!(chi_square_gof(&[10, 10], &[0.5, 0.6]), Err(Error::ProbabilitySum { .. })));
        assert!(matches!(
            chi_square_gof(&[3, 97], &[0.01, 0.99]),
            Err(Error::ExpectedCountTooSmall { cell: 0, .. })
        ));
        assert!(chi_square_gof(&[1, 2, 3], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn reject_flags_follow_p_value() {
        let r = chi_square_gof(&[500, 600], &[0.5, 0.5]).unwrap();
        for (level, rejected) in &r.reject_at {
            assert_eq!(*rejected, r.p_value < level.parse::<f64>().unwrap());
        }
        let line = r.to_string();
        assert!(line.starts_with("chi-square statistic="), "{line}");
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(json["test"], "chi-square");
        assert_eq!(json["df_or_n"], 1);
    }

    #[test]
    fn two_sample_chi_square_of_identical_counts() {
        let r = chi_square_two_sample(&[100, 200, 300], &[100, 200, 300]).unwrap();
        assert!(r.statistic.abs() < 1e-12);
        assert_eq!(r.p_value, 1.0);
        let r = chi_square_two_sample(&[100, 200, 300], &[300, 200, 100]).unwrap();
        assert!(r.rejects(1e-3));
    }

    #[test]
    fn ks_perfect_grid_fits() {
        let n = 1000;
        let samples: Vec<f64> = (0..n).map(|i| ((i as f64 + 0.5) / n as f64).powf(1.0 / 3.0)).collect();
        let r = ks_one_sample(&samples, |t| t.powi(3)).unwrap();
        assert!(r.statistic <= 1.0 / n as f64 + 1e-12);
        assert!(!r.rejects(1e-3));
    }

    #[test]
    fn ks_identical_samples() {
        let a: Vec<f64> = (0..500).map(|i| (i as f64 * 0.37).sin()).collect();
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.df_or_n, 250);
    }

    #[test]
    fn ks_needs_one_hundred_samples() {
        let few = vec![0.5; 99];
        assert!(matches!(ks_one_sample(&few, |t| t), Err(Error::TooFewSamples { .. })));
        assert!(ks_two_sample(&few, &vec![0.5; 200]).is_err());
    }

    #[test]
    fn kolmogorov_tail_values() {
        // Q_KS(1.0) and Q_KS(1.36) from the standard table.
        assert!((kolmogorov_sf(1.0) - 0.26999967167735456).abs() < 1e-9);
        assert!((kolmogorov_sf(1.36) - 0.049485876755377910).abs() < 1e-9);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
        assert!(kolmogorov_sf(3.0) < 1e-7);
    }
}
