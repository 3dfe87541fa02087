//! The validation battery behind `keyrace validate`.

use std::fmt;

use crate::baselines::WeightTable;
use crate::error::{Error, Result};
use crate::families::{Family, Key, ModelSpec};
use crate::io::{read_table, write_winners};
use crate::sampler::{mix64, reduce_winners, sample_par, uniform_at, KeyedRow, Row, SeedContext};
use crate::stats::{
    canonical_equivalence, canonical_sample, chi_square_gof, chi_square_sf, chi_square_two_sample, choice_counts,
    dynamic_scratch_mismatches, ks_one_sample, ks_two_sample, max_stability, run_choice_experiment,
    ACCEPTANCE_SIGNIFICANCE,
};

/// The 14-row worked example with its reference keys.
pub const WORKED_EXAMPLE_CSV: &str = include_str!("../fixtures/worked_example.csv");

/// Upper incomplete gamma reference `(df, x, Q(df/2, x/2))`, computed with
/// 40-digit arithmetic.
#[allow(clippy::excessive_precision)]
pub const INCOMPLETE_GAMMA_REFERENCE: [(u64, f64, f64); 64] = [
    (1, 0.1, 0.75182963404584927583),
    (1, 0.5, 0.47950012218695346232),
    (1, 1.0, 0.31731050786291410283),
    (1, 2.5, 0.11384629800665805028),
    (1, 4.0, 0.045500263896358414401),
    (1, 8.0, 0.0046777349810472658379),
    (1, 15.0, 0.00010751117672950056338),
    (1, 30.0, 4.3204630578274972948e-8),
    (2, 0.1, 0.95122942450071400645),
    (2, 0.5, 0.77880078307140486825),
    (2, 1.0, 0.6065306597126334236),
    (2, 2.5, 0.28650479686019010032),
    (2, 4.0, 0.13533528323661269189),
    (2, 8.0, 0.018315638888734180294),
    (2, 15.0, 0.0005530843701478335831),
    (2, 30.0, 3.0590232050182578837e-7),
    (3, 0.1, 0.99183742373187647779),
    (3, 0.5, 0.91889141165467585936),
    (3, 1.0, 0.80125195690120080243),
    (3, 2.5, 0.47529108334302059016),
    (3, 4.0, 0.2614641299491106222),
    (3, 8.0, 0.046011705689231373552),
    (3, 15.0, 0.0018166489665723232336),
    (3, 30.0, 1.3800570312932547282e-6),
    (4, 0.1, 0.99879089572574970941),
    (4, 0.5, 0.97350097883925608531),
    (4, 1.0, 0.90979598956895013541),
    (4, 2.5, 0.64463579293542772573),
    (4, 4.0, 0.40600584970983807568),
    (4, 8.0, 0.091578194443670901469),
    (4, 15.0, 0.0047012171462565854564),
    (4, 30.0, 4.8944371280292126139e-6),
    (5, 0.1, 0.99983768338807738496),
    (5, 0.5, 0.99212329323262959221),
    (5, 1.0, 0.96256577324729636896),
    (5, 2.5, 0.77649507112332270673),
    (5, 4.0, 0.54941595135278023261),
    (5, 8.0, 0.15623562757772232746),
    (5, 15.0, 0.010362337915786436585),
    (5, 30.0, 0.000014748581038443052281),
    (7, 0.1, 0.99999768858120140312),
    (7, 0.5, 0.99944648139042496549),
    (7, 1.0, 0.99482853651651548226),
    (7, 2.5, 0.92709706501347376501),
    (7, 4.0, 0.77977740847571592093),
    (7, 8.0, 0.3325939025993078537),
    (7, 15.0, 0.035999404763428776638),
    (7, 30.0, 0.000094959725081341837597),
    (10, 0.1, 0.99999999750204866399),
    (10, 0.5, 0.99999338828943896575),
    (10, 1.0, 0.99982788437004415922),
    (10, 2.5, 0.99087572078160472686),
    (10, 4.0, 0.94734698265628884326),
    (10, 8.0, 0.62883693517987352342),
    (10, 15.0, 0.13206185628772060782),
    (10, 30.0, 0.00085664121077530039211),
    (20, 0.1, 0.99999999999999999997),
    (20, 0.5, 0.99999999999979057515),
    (20, 1.0, 0.99999999982903299707),
    (20, 2.5, 0.99999917151251488081),
    (20, 4.0, 0.99995350192498273619),
    (20, 8.0, 0.99186775720306613684),
    (20, 15.0, 0.77640761301971443302),
    (20, 30.0, 0.069853660699409767692),
];

/// Weight vectors every family's choice law is checked on.
pub const CHOICE_WEIGHTS: [&[f64]; 3] = [&[1.0, 1.0], &[1.0, 2.0, 3.0], &[0.1, 1.0, 10.0]];

#[derive(Debug, Clone)]
pub struct ValidateOptions {
    pub seed: u64,
    /// Reduced sample sizes and seed counts.
    pub quick: bool,
    /// Fixture whose groups are each checked for the choice law under `model`.
    pub fixture: Option<(Vec<Row>, ModelSpec)>,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions {
            seed: 0,
            quick: false,
            fixture: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub name: String,
    pub passed: bool,
    pub p_value: Option<f64>,
    pub detail: String,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        match self.p_value {
            Some(p) => write!(f, "CRITERION {} {} p={}", self.name, verdict, p),
            None => write!(f, "CRITERION {} {} p=n/a", self.name, verdict),
        }
    }
}

struct Sizes {
    choice_n: u64,
    choice_seeds: u64,
    ks_n: usize,
    stability_n: usize,
    equivalence: u64,
    dynamic_steps: u64,
    determinism_rows: usize,
    determinism_seeds: u64,
}

impl Sizes {
    fn new(quick: bool) -> Self {
        if quick {
            Sizes {
                choice_n: 6_000,
                choice_seeds: 3,
                ks_n: 2_000,
                stability_n: 4_000,
                equivalence: 1_000,
                dynamic_steps: 2_000,
                determinism_rows: 10_000,
                determinism_seeds: 1,
            }
        } else {
            Sizes {
                choice_n: 60_000,
                choice_seeds: 20,
                ks_n: 10_000,
                stability_n: 20_000,
                equivalence: 10_000,
                dynamic_steps: 10_000,
                determinism_rows: 100_000,
                determinism_seeds: 3,
            }
        }
    }
}

fn result(name: impl Into<String>, passed: bool, p_value: Option<f64>, detail: impl Into<String>) -> CriterionResult {
    CriterionResult {
        name: name.into(),
        passed,
        p_value,
        detail: detail.into(),
    }
}

/// Winners of the worked example with its reference keys, as `(ID, QUAL)`.
pub fn worked_example_winners() -> Result<Vec<(String, String)>> {
    let table = read_table(WORKED_EXAMPLE_CSV.as_bytes())?;
    let keys = table.keys.expect("fixture has keys");
    let keyed: Vec<KeyedRow> = table
        .rows
        .into_iter()
        .zip(keys)
        .map(|(row, k)| KeyedRow::injected(row, Key::new(k)))
        .collect();
    Ok(reduce_winners(&keyed, crate::Orientation::Max)
        .into_values()
        .map(|w| (w.group_id, w.label))
        .collect())
}

/// Strengths that give `weights` under `spec`.
pub fn strengths_for(spec: &ModelSpec, weights: &[f64]) -> Result<Vec<f64>> {
    weights.iter().map(|&w| spec.alpha_to_strength(w)).collect()
}

/// Runs the choice-law chi-square over `seeds` consecutive seeds; passes when
/// at most one seed rejects. Returns the worst p-value.
fn choice_law(spec: &ModelSpec, strengths: &[f64], n: u64, base_seed: u64, seeds: u64) -> Result<(bool, f64, u64)> {
    let mut rejections = 0;
    let mut worst = 1.0f64;
    for s in 0..seeds {
        let r = run_choice_experiment(spec, strengths, n, base_seed.wrapping_add(s))?;
        worst = worst.min(r.p_value);
        if r.rejects(ACCEPTANCE_SIGNIFICANCE) {
            rejections += 1;
        }
    }
    Ok((rejections <= 1, worst, rejections))
}

/// Random table with `n` rows over roughly `n / 8` groups.
pub fn random_table(n: usize, seed: u64) -> Vec<Row> {
    let groups = (n / 8).max(1) as u64;
    (0..n as u64)
        .map(|i| {
            let g = mix64(seed ^ i.wrapping_mul(0xA24B_AED4_963E_E407)) % groups;
            Row::new(format!("G{g:06}"), format!("L{i}"), uniform_at(SeedContext::new(seed, 0), 9, i) * 8.0 - 4.0)
        })
        .collect()
}

/// Sample output text for `rows` on a dedicated pool of `threads` threads.
pub fn sample_output(rows: &[Row], spec: &ModelSpec, ctx: SeedContext, threads: usize) -> Result<Vec<u8>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let winners = pool.install(|| sample_par(rows, spec, ctx))?;
    let mut out = Vec::new();
    write_winners(&mut out, &winners, true, None)?;
    Ok(out)
}

/// Runs every criterion. Errors only for an invalid fixture; failed criteria
/// are reported in the results.
pub fn run_battery(opts: &ValidateOptions) -> Result<Vec<CriterionResult>> {
    if let Some((rows, spec)) = &opts.fixture {
        for row in rows {
            spec.check_strength(row.strength)
                .map_err(|e| e.at_row(&row.group_id, &row.label))?;
        }
    }
    let sizes = Sizes::new(opts.quick);
    let seed = opts.seed;
    let mut out = Vec::new();

    let winners = worked_example_winners()?;
    let want = [("#1", "RED"), ("#2", "WHITE"), ("#3", "WHITE"), ("#4", "YELLOW")];
    let ok = winners.len() == 4 && winners.iter().zip(want).all(|((g, l), (wg, wl))| g == wg && l == wl);
    out.push(result("worked-example", ok, None, format!("{winners:?}")));

    for family in Family::ALL {
        let spec = ModelSpec::standard(family);
        for weights in CHOICE_WEIGHTS {
            let strengths = strengths_for(&spec, weights)?;
            let (ok, p, rej) = choice_law(&spec, &strengths, sizes.choice_n, seed, sizes.choice_seeds)?;
            let tag = weights.iter().map(|w| w.to_string()).collect::<Vec<_>>().join("-");
            out.push(result(
                format!("choice-{family}-{tag}"),
                ok,
                Some(p),
                format!("{rej} of {} seeds rejected", sizes.choice_seeds),
            ));
        }
    }

    let gumbel = ModelSpec::new(Family::Gumbel1, 1.0, 0.0)?;
    let (ok, p, rej) = choice_law(&gumbel, &[0.0, 1.0, 2.0], sizes.choice_n, seed, sizes.choice_seeds)?;
    out.push(result("probit-softmax", ok, Some(p), format!("{rej} of {} seeds rejected", sizes.choice_seeds)));

    let ctx = SeedContext::new(seed, 0);
    let stability = max_stability(1.0, 2.0, sizes.stability_n, ctx)?.stability;
    out.push(result(
        "max-stability",
        !stability.rejects(ACCEPTANCE_SIGNIFICANCE),
        Some(stability.p_value),
        stability.to_string(),
    ));
    let a = canonical_sample(1.0, sizes.stability_n, ctx, 11)?;
    let b = canonical_sample(4.0, sizes.stability_n, ctx, 12)?;
    let control = ks_two_sample(&a, &b)?;
    out.push(result(
        "max-stability-negative-control",
        control.rejects(ACCEPTANCE_SIGNIFICANCE),
        Some(control.p_value),
        control.to_string(),
    ));

    for (stream, alpha) in [(20, 0.5), (21, 1.0), (22, 3.0)] {
        let keys = canonical_sample(alpha, sizes.ks_n, ctx, stream)?;
        let r = ks_one_sample(&keys, |t| t.clamp(0.0, 1.0).powf(alpha))?;
        out.push(result(
            format!("representation-alpha-{alpha}"),
            !r.rejects(ACCEPTANCE_SIGNIFICANCE),
            Some(r.p_value),
            r.to_string(),
        ));
    }

    let eq = canonical_equivalence(sizes.equivalence, ctx)?;
    out.push(result(
        "canonical-equivalence",
        eq.all_agree(),
        None,
        format!("{} of {} instances agree", eq.agreements, eq.instances),
    ));

    let families: &[Family] = if opts.quick { &[Family::Gumbel1] } else { &Family::ALL };
    for &family in families {
        let d = dynamic_scratch_mismatches(&ModelSpec::standard(family), sizes.dynamic_steps, 50, 100, ctx)?;
        out.push(result(
            format!("dynamic-vs-scratch-{family}"),
            d.mismatches == 0,
            None,
            format!("{} mismatches in {} checks", d.mismatches, d.checks),
        ));
    }

    out.push(alias_agreement(sizes.choice_n, seed)?);

    let spec = ModelSpec::standard(Family::Gumbel1);
    let mut identical = true;
    for s in 0..sizes.determinism_seeds {
        let rows = random_table(sizes.determinism_rows, seed.wrapping_add(s));
        let ctx = SeedContext::new(seed.wrapping_add(s), 0);
        let one = sample_output(&rows, &spec, ctx, 1)?;
        for threads in [4, 8] {
            identical &= sample_output(&rows, &spec, ctx, threads)? == one;
        }
    }
    out.push(result("parallel-determinism", identical, None, "threads 1/4/8"));

    let closed = (chi_square_sf(2.0, 2) - (-1.0f64).exp()).abs();
    out.push(result("chi-square-closed-form", closed <= 1e-8, None, format!("|error| = {closed:e}")));
    let worst = INCOMPLETE_GAMMA_REFERENCE
        .iter()
        .map(|&(df, x, q)| ((chi_square_sf(x, df) - q) / q).abs())
        .fold(0.0f64, f64::max);
    out.push(result(
        "incomplete-gamma-reference",
        worst <= 1e-6,
        None,
        format!("max relative error {worst:e}"),
    ));

    if let Some((rows, spec)) = &opts.fixture {
        let mut groups: std::collections::BTreeMap<&str, Vec<f64>> = Default::default();
        for row in rows {
            groups.entry(row.group_id.as_str()).or_default().push(row.strength);
        }
        for (group, strengths) in groups.into_iter().filter(|(_, s)| s.len() > 1) {
            let report = run_choice_experiment(spec, &strengths, sizes.choice_n, seed)?;
            out.push(result(
                format!("fixture-{group}"),
                !report.rejects(ACCEPTANCE_SIGNIFICANCE),
                Some(report.p_value),
                report.to_string(),
            ));
        }
    }

    Ok(out)
}

fn alias_agreement(n: u64, seed: u64) -> Result<CriterionResult> {
    let weights = [1.0, 2.0, 3.0];
    let expected = [1.0 / 6.0, 1.0 / 3.0, 0.5];
    let table = WeightTable::build(&["o0", "o1", "o2"], &weights)?;
    let ctx = SeedContext::new(seed, 0);
    let mut alias = [0u64; 3];
    for i in 0..n {
        alias[table.alias_index_of(uniform_at(ctx, 30, i), uniform_at(ctx, 31, i))] += 1;
    }
    let race = choice_counts(&ModelSpec::standard(Family::Canonical), &weights, n, seed)?;
    let a = chi_square_gof(&alias, &expected)?;
    let r = chi_square_gof(&race, &expected)?;
    let both = chi_square_two_sample(&alias, &race)?;
    let ok = [&a, &r].iter().all(|x| !x.rejects(ACCEPTANCE_SIGNIFICANCE)) && !both.rejects(ACCEPTANCE_SIGNIFICANCE);
    Ok(result(
        "alias-vs-race",
        ok,
        Some(both.p_value),
        format!("alias p={} race p={} two-sample p={}", a.p_value, r.p_value, both.p_value),
    ))
}
