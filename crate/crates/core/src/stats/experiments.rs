//! Monte Carlo experiments for the sampler's distributional properties.
//!
//! Every run is a pure function of its arguments: draws come from
//! [`uniform_at`] or per-row derivation, never from a shared generator, so the
//! parallel loops here give the same numbers on any thread count.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use super::{chi_square_gof, ks_one_sample, ks_two_sample, GofReport};
use crate::dynamic::{DynamicTable, UpdateCase};
use crate::error::Result;
use crate::families::{key_canonical, Family, Key, ModelSpec, Orientation};
use crate::sampler::{mix64, reduce_winners, sample_single_group, uniform_at, Row, SeedContext};

/// Winner tallies for one group holding `strengths`, over `replicates`
/// independent replicates.
pub fn choice_counts(spec: &ModelSpec, strengths: &[f64], replicates: u64, seed: u64) -> Result<Vec<u64>> {
    let rows: Vec<Row> = strengths
        .iter()
        .enumerate()
        .map(|(i, &s)| Row::new("g", format!("o{i}"), s))
        .collect();
    for row in &rows {
        spec.check_strength(row.strength)
            .map_err(|e| e.at_row(&row.group_id, &row.label))?;
    }
    let k = rows.len();
    (0..replicates)
        .into_par_iter()
        .try_fold(
            || vec![0u64; k],
            |mut counts, r| {
                if let Some(i) = sample_single_group(&rows, spec, SeedContext::new(seed, r))? {
                    counts[i] += 1;
                }
                Ok(counts)
            },
        )
        .try_reduce(
            || vec![0u64; k],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )
}

/// Chi-square of winner frequencies against `alpha / Σ alpha`, with `alpha`
/// recovered from each strength.
pub fn run_choice_experiment(spec: &ModelSpec, strengths: &[f64], replicates: u64, seed: u64) -> Result<GofReport> {
    let alphas = strengths
        .iter()
        .map(|&s| spec.strength_to_alpha(s))
        .collect::<Result<Vec<f64>>>()?;
    let total: f64 = alphas.iter().sum();
    let expected: Vec<f64> = alphas.iter().map(|a| a / total).collect();
    let counts = choice_counts(spec, strengths, replicates, seed)?;
    chi_square_gof(&counts, &expected)
}

/// `n` canonical keys `U^(1/alpha)` from stream `stream` of `ctx`.
pub fn canonical_sample(alpha: f64, n: usize, ctx: SeedContext, stream: u64) -> Result<Vec<f64>> {
    (0..n as u64)
        .map(|i| key_canonical(alpha, uniform_at(ctx, stream, i)).map(|k| k.value()))
        .collect()
}

/// One-sample KS of canonical keys against `t^alpha`.
pub fn representation_law(alpha: f64, n: usize, ctx: SeedContext) -> Result<GofReport> {
    let keys = canonical_sample(alpha, n, ctx, 0)?;
    ks_one_sample(&keys, |t| t.clamp(0.0, 1.0).powf(alpha))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxStabilityOutcome {
    /// Max of the pair against direct draws at the summed weight.
    pub stability: GofReport,
}

/// Two-sample KS between `max(X_a1, X_a2)` and `X_(a1+a2)`, canonical family,
/// `n` draws each on independent streams.
pub fn max_stability(alpha1: f64, alpha2: f64, n: usize, ctx: SeedContext) -> Result<MaxStabilityOutcome> {
    let first = canonical_sample(alpha1, n, ctx, 1)?;
    let second = canonical_sample(alpha2, n, ctx, 2)?;
    let maxima: Vec<f64> = first.iter().zip(&second).map(|(a, b)| a.max(*b)).collect();
    let direct = canonical_sample(alpha1 + alpha2, n, ctx, 3)?;
    Ok(MaxStabilityOutcome {
        stability: ks_two_sample(&maxima, &direct)?,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquivalenceOutcome {
    pub instances: u64,
    pub agreements: u64,
}

impl EquivalenceOutcome {
    pub fn all_agree(&self) -> bool {
        self.instances == self.agreements
    }
}

fn extremal_index(keys: &[Key], orientation: Orientation) -> usize {
    let mut best = 0;
    for (i, k) in keys.iter().enumerate().skip(1) {
        let better = match orientation {
            Orientation::Max => *k > keys[best],
            Orientation::Min => *k < keys[best],
        };
        if better {
            best = i;
        }
    }
    best
}

/// Random instances of 2..=10 weights with shared uniforms; counts instances
/// where Canonical(alpha), Gumbel1(ln alpha), Frechet2(alpha) and ExpMin(alpha)
/// all pick the same index.
pub fn canonical_equivalence(instances: u64, ctx: SeedContext) -> Result<EquivalenceOutcome> {
    let canonical = ModelSpec::standard(Family::Canonical);
    let gumbel = ModelSpec::new(Family::Gumbel1, 1.0, 0.0)?;
    let frechet = ModelSpec::new(Family::Frechet2, 1.0, 1.0)?;
    let expmin = ModelSpec::standard(Family::ExpMin);

    let agreements = (0..instances)
        .into_par_iter()
        .map(|inst| -> Result<u64> {
            let n = 2 + (mix64(ctx.seed ^ inst.wrapping_mul(0x9E37_79B9_7F4A_7C15)) % 9) as usize;
            let stream = 2 * inst;
            let mut keys: [Vec<Key>; 4] = Default::default();
            for i in 0..n as u64 {
                // Weights spread over three decades.
                let alpha = (uniform_at(ctx, stream, i) * 6.9 - 3.45).exp();
                let u = uniform_at(ctx, stream + 1, i);
                keys[0].push(canonical.key(alpha, u)?);
                keys[1].push(gumbel.key(alpha.ln(), u)?);
                keys[2].push(frechet.key(alpha, u)?);
                keys[3].push(expmin.key(alpha, u)?);
            }
            let picks = [
                extremal_index(&keys[0], Orientation::Max),
                extremal_index(&keys[1], Orientation::Max),
                extremal_index(&keys[2], Orientation::Max),
                extremal_index(&keys[3], Orientation::Min),
            ];
            Ok(u64::from(picks.iter().all(|&p| p == picks[0])))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(EquivalenceOutcome { instances, agreements })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicOutcome {
    pub steps: u64,
    pub checks: u64,
    pub mismatches: u64,
    /// How often each update case fired, with the comparisons it spent.
    pub cases: Vec<(UpdateCase, u64, u64)>,
}

/// Random upsert/delete stream over `groups` groups; compares live winners to
/// a from-scratch reduction every `check_every` steps and once at the end.
pub fn dynamic_scratch_mismatches(
    spec: &ModelSpec,
    steps: u64,
    groups: u64,
    check_every: u64,
    ctx: SeedContext,
) -> Result<DynamicOutcome> {
    let mut table = DynamicTable::new(*spec, ctx);
    let labels_per_group = 12;
    let mut tally: HashMap<UpdateCase, (u64, u64)> = HashMap::new();
    let (mut checks, mut mismatches) = (0u64, 0u64);
    let mut check = |table: &DynamicTable| {
        checks += 1;
        let scratch = reduce_winners(&table.keyed_rows(), spec.orientation());
        let live: Vec<_> = table.winners().cloned().collect();
        let want: Vec<_> = scratch.into_values().collect();
        if live != want {
            mismatches += 1;
        }
    };
    for step in 0..steps {
        let draw = |lane: u64| uniform_at(ctx.with_replicate(u64::MAX), lane, step);
        let g = format!("g{}", (draw(0) * groups as f64) as u64);
        let l = format!("l{}", (draw(1) * labels_per_group as f64) as u64);
        let report = if draw(2) < 0.25 {
            table.delete(&g, &l).ok()
        } else {
            let alpha = (draw(3) * 6.0 - 3.0).exp();
            Some(table.upsert(&g, &l, spec.alpha_to_strength(alpha)?)?)
        };
        if let Some(r) = report {
            let e = tally.entry(r.case).or_default();
            e.0 += 1;
            e.1 += r.comparisons;
        }
        if check_every > 0 && step % check_every == check_every - 1 {
            check(&table);
        }
    }
    check(&table);
    let mut cases: Vec<(UpdateCase, u64, u64)> = tally.into_iter().map(|(c, (n, cmp))| (c, n, cmp)).collect();
    cases.sort_by_key(|(c, _, _)| c.name());
    Ok(DynamicOutcome {
        steps,
        checks,
        mismatches,
        cases,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ACCEPTANCE_SIGNIFICANCE;

    #[test]
    fn equal_strengths_are_fair() {
        let spec = ModelSpec::standard(Family::Gumbel1);
        let counts = choice_counts(&spec, &[0.7, 0.7], 100_000, 3).unwrap();
        let sigma = (100_000f64 * 0.25).sqrt();
        assert!((counts[0] as f64 - 50_000.0).abs() < 3.0 * sigma, "{counts:?}");
    }

    #[test]
    fn choice_experiment_is_deterministic() {
        let spec = ModelSpec::standard(Family::Canonical);
        let a = run_choice_experiment(&spec, &[1.0, 2.0, 3.0], 6000, 8).unwrap();
        let b = run_choice_experiment(&spec, &[1.0, 2.0, 3.0], 6000, 8).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn softmax_and_canonical_laws_hold() {
        let g = ModelSpec::new(Family::Gumbel1, 1.0, 0.0).unwrap();
        let r = run_choice_experiment(&g, &[0.0, 1.0, 2.0], 60_000, 1).unwrap();
        assert!(!r.rejects(ACCEPTANCE_SIGNIFICANCE), "{r}");
        let c = ModelSpec::standard(Family::Canonical);
        let r = run_choice_experiment(&c, &[1.0, 2.0, 3.0], 60_000, 1).unwrap();
        assert!(!r.rejects(ACCEPTANCE_SIGNIFICANCE), "{r}");
    }

    #[test]
    fn degenerate_strength_fails_before_sampling() {
        let f = ModelSpec::standard(Family::Frechet2);
        let err = choice_counts(&f, &[1.0, 0.0], 10, 0).unwrap_err();
        assert!(err.is_domain());
    }

    #[test]
    fn ks_power_checks() {
        let ctx = SeedContext::new(21, 0);
        assert!(!representation_law(3.0, 10_000, ctx).unwrap().rejects(ACCEPTANCE_SIGNIFICANCE));
        let keys = canonical_sample(3.0, 10_000, ctx, 0).unwrap();
        assert!(ks_one_sample(&keys, |t| t * t).unwrap().rejects(ACCEPTANCE_SIGNIFICANCE));
        let out = max_stability(1.0, 2.0, 20_000, ctx).unwrap();
        assert!(!out.stability.rejects(ACCEPTANCE_SIGNIFICANCE), "{}", out.stability);
        let a = canonical_sample(1.0, 20_000, ctx, 7).unwrap();
        let b = canonical_sample(4.0, 20_000, ctx, 8).unwrap();
        assert!(ks_two_sample(&a, &b).unwrap().rejects(ACCEPTANCE_SIGNIFICANCE));
    }

    #[test]
    fn equivalence_and_dynamic_small() {
        let eq = canonical_equivalence(2000, SeedContext::new(4, 0)).unwrap();
        assert!(eq.all_agree(), "{eq:?}");
        let spec = ModelSpec::standard(Family::NegExp);
        let out = dynamic_scratch_mismatches(&spec, 2000, 10, 100, SeedContext::new(4, 0)).unwrap();
        assert_eq!(out.mismatches, 0);
        assert_eq!(out.checks, 21);
    }
}
