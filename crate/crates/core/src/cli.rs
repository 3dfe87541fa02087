//! `keyrace` subcommands.
//!
//! Exit codes: 0 ok, 1 validation failure, 2 parse error, 3 domain error,
//! 4 warnings in an update stream.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::baselines::{SearchStrategy, WeightTable};
use crate::dynamic::{DynamicTable, UpdateCase};
use crate::error::{Error, Result};
use crate::families::{Family, Key, ModelSpec};
use crate::io::{read_table, write_table, write_winners, Table};
use crate::sampler::{reduce_winners, sample_par, uniform_at, KeyedRow, Row, SeedContext};
use crate::validate::{run_battery, ValidateOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_STREAM_WARNING: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "keyrace", version, about = "Per-group discrete sampling by competition keys")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample one winner per group from an ID,QUAL,Strength table.
    Sample(SampleArgs),
    /// Maintain winners under a stream of UPSERT/DELETE commands on stdin.
    Update(UpdateArgs),
    /// Run the statistical validation battery.
    Validate(ValidateArgs),
    /// Time the key race against alias and inverse-CDF sampling.
    Bench(BenchArgs),
}

/// Settings shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// canonical, gumbel1, frechet2, negexp or expmin.
    #[arg(long, default_value = "gumbel1")]
    pub model: String,
    /// Scale c of the family.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Offset d of the family [default: 0, or 1 for frechet2 and -1 for negexp].
    #[arg(long, allow_negative_numbers = true)]
    pub offset: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub replicates: u64,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

impl RunConfig {
    pub fn model_spec(&self) -> Result<ModelSpec> {
        let family: Family = self.model.parse()?;
        ModelSpec::new(family, self.scale, self.offset.unwrap_or(family.default_offset()))
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))
    }
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    /// Input CSV; `-` or absent reads stdin.
    pub input: Option<PathBuf>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Use the RND2/KEY column as keys instead of generating them.
    #[arg(long)]
    pub inject_keys: bool,
    /// Append the winning key to each line.
    #[arg(long)]
    pub emit_keys: bool,
    #[command(flatten)]
    pub config: RunConfig,
}

#[derive(Debug, Clone, Args)]
pub struct UpdateArgs {
    /// Write the final table (with versions) here at end of stream.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    #[command(flatten)]
    pub config: RunConfig,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    /// Optional fixture; each group is also checked for the choice law under --model.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Reduced sample sizes.
    #[arg(long)]
    pub quick: bool,
    #[command(flatten)]
    pub config: RunConfig,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 1_000_000)]
    pub rows: usize,
    /// Labels per group.
    #[arg(long, default_value_t = 8)]
    pub labels: usize,
    /// Length of the random update stream.
    #[arg(long, default_value_t = 100_000)]
    pub updates: u64,
    #[command(flatten)]
    pub config: RunConfig,
}

/// Runs a parsed command line against the given streams; returns the exit code.
pub fn run(cli: Cli, stdin: &mut dyn BufRead, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let outcome = match cli.command {
        Command::Sample(args) => cmd_sample(&args, stdin, stdout),
        Command::Update(args) => cmd_update(&args, stdin, stdout, stderr),
        Command::Validate(args) => cmd_validate(&args, stdout, stderr),
        Command::Bench(args) => cmd_bench(&args, stdout),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            let _ = writeln!(stderr, "error: {err}");
            exit_code(&err)
        }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse { .. } | Error::DuplicateRow { .. } | Error::Io(_) => EXIT_PARSE,
        e if e.is_domain() => EXIT_DOMAIN,
        Error::InvalidArgument(_) => EXIT_DOMAIN,
        _ => EXIT_VALIDATION,
    }
}

fn read_input(path: Option<&PathBuf>, stdin: &mut dyn BufRead) -> Result<Table> {
    match path {
        Some(p) if p.as_os_str() != "-" => {
            let file = File::open(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            read_table(BufReader::new(file))
        }
        _ => read_table(stdin as &mut dyn Read),
    }
}

pub fn cmd_sample(args: &SampleArgs, stdin: &mut dyn BufRead, stdout: &mut dyn Write) -> Result<i32> {
    let table = read_input(args.input.as_ref(), stdin)?;
    let spec = args.config.model_spec()?;
    let ctx = SeedContext::new(args.config.seed, 0);

    let injected: Option<Vec<KeyedRow>> = if args.inject_keys {
        let keys = table.keys.as_ref().ok_or_else(|| Error::Parse {
            line: 1,
            message: "--inject-keys needs an RND2 or KEY column".into(),
        })?;
        Some(
            table
                .rows
                .iter()
                .zip(keys)
                .map(|(row, &k)| KeyedRow::injected(row.clone(), Key::new(k)))
                .collect(),
        )
    } else {
        None
    };

    let pool = args.config.pool()?;
    let mut sink: Box<dyn Write + '_> = match &args.output {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(stdout)),
    };
    let replicates = args.config.replicates.max(1);
    for r in 0..replicates {
        let winners = match &injected {
            Some(keyed) => reduce_winners(keyed, spec.orientation()),
            None => pool.install(|| sample_par(&table.rows, &spec, ctx.with_replicate(r)))?,
        };
        let prefix = (replicates > 1).then_some(r);
        write_winners(&mut sink, &winners, args.emit_keys, prefix)?;
    }
    sink.flush()?;
    Ok(EXIT_OK)
}

#[derive(Debug, PartialEq)]
enum UpdateCommand<'a> {
    Upsert(&'a str, &'a str, f64),
    Delete(&'a str, &'a str),
}

fn parse_update_line(line: &str) -> std::result::Result<Option<UpdateCommand<'_>>, String> {
    let line = line.trim();
    if line.is_empty() || line.starts_with('#') {
        return Ok(None);
    }
    let (verb, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
    let fields: Vec<&str> = rest.split(',').map(str::trim).collect();
    match (verb.to_ascii_uppercase().as_str(), fields.as_slice()) {
        ("UPSERT", [id, qual, strength]) if !id.is_empty() && !qual.is_empty() => {
            let s: f64 = strength
                .parse()
                .map_err(|_| format!("strength '{strength}' is not a number"))?;
            Ok(Some(UpdateCommand::Upsert(id, qual, s)))
        }
        ("DELETE", [id, qual]) if !id.is_empty() && !qual.is_empty() => Ok(Some(UpdateCommand::Delete(id, qual))),
        _ => Err(format!("expected 'UPSERT id,qual,strength' or 'DELETE id,qual', got '{line}'")),
    }
}

pub fn cmd_update(
    args: &UpdateArgs,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32> {
    let spec = args.config.model_spec()?;
    let mut table = DynamicTable::new(spec, SeedContext::new(args.config.seed, 0));
    let mut warnings = 0u64;
    let mut out = BufWriter::new(stdout);
    for (i, line) in stdin.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let command = match parse_update_line(&line) {
            Ok(Some(c)) => c,
            Ok(None) => continue,
            Err(msg) => {
                warnings += 1;
                writeln!(stderr, "warning: line {lineno}: {msg}")?;
                continue;
            }
        };
        let (group, report) = match command {
            UpdateCommand::Upsert(g, l, s) => (g, table.upsert(g, l, s)),
            UpdateCommand::Delete(g, l) => (g, table.delete(g, l)),
        };
        match report {
            Ok(r) => match &r.winner {
                Some(w) => writeln!(
                    out,
                    "WINNER {},{},{} {} comparisons={}",
                    w.group_id,
                    w.label,
                    w.key.value(),
                    r.case,
                    r.comparisons
                )?,
                None => writeln!(out, "REMOVED {} {} comparisons={}", group, r.case, r.comparisons)?,
            },
            Err(err) => {
                warnings += 1;
                writeln!(stderr, "warning: line {lineno}: {err}")?;
            }
        }
    }
    out.flush()?;
    if let Some(path) = &args.dump {
        let rows: Vec<Row> = table.keyed_rows().into_iter().map(|k| k.row).collect();
        write_table(BufWriter::new(File::create(path)?), &Table { rows, keys: None })?;
    }
    Ok(if warnings > 0 { EXIT_STREAM_WARNING } else { EXIT_OK })
}

pub fn cmd_validate(args: &ValidateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let spec = args.config.model_spec()?;
    let fixture = match &args.input {
        Some(path) => Some((read_input(Some(path), &mut io::empty())?.rows, spec)),
        None => None,
    };
    let opts = ValidateOptions {
        seed: args.config.seed,
        quick: args.quick,
        fixture,
    };
    if args.quick {
        writeln!(stderr, "warning: reduced-power run (--quick); sample sizes are cut roughly tenfold")?;
    }
    let results = args.config.pool()?.install(|| run_battery(&opts))?;
    for r in &results {
        writeln!(stdout, "{:<40} {}", r.name, r.detail)?;
    }
    for r in &results {
        writeln!(stdout, "{r}")?;
    }
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
    if failed.is_empty() {
        writeln!(stdout, "all {} criteria passed", results.len())?;
        Ok(EXIT_OK)
    } else {
        writeln!(stdout, "failed: {}", failed.join(", "))?;
        Ok(EXIT_VALIDATION)
    }
}

fn per_second(n: usize, secs: f64) -> f64 {
    if secs > 0.0 {
        n as f64 / secs
    } else {
        f64::INFINITY
    }
}

pub fn cmd_bench(args: &BenchArgs, stdout: &mut dyn Write) -> Result<i32> {
    let spec = args.config.model_spec()?;
    let ctx = SeedContext::new(args.config.seed, 0);
    let per_group = args.labels.max(1);
    let groups = args.rows.div_ceil(per_group).max(1);
    let alphas: Vec<f64> = (0..args.rows as u64).map(|i| 0.1 + 10.0 * uniform_at(ctx, 40, i)).collect();
    let rows: Vec<Row> = alphas
        .iter()
        .enumerate()
        .map(|(i, &a)| Ok(Row::new(format!("G{}", i / per_group), format!("L{}", i % per_group), spec.alpha_to_strength(a)?)))
        .collect::<Result<_>>()?;
    let pool = args.config.pool()?;

    let mut out = BufWriter::new(stdout);
    writeln!(out, "{} rows, {} groups of up to {} labels, model {}", rows.len(), groups, per_group, spec.family())?;
    writeln!(out, "{:<28} {:>12} {:>14}", "method", "seconds", "rows/s")?;

    let start = Instant::now();
    let race = pool.install(|| sample_par(&rows, &spec, ctx))?;
    let secs = start.elapsed().as_secs_f64();
    writeln!(out, "{:<28} {:>12.4} {:>14.0}", "key race (parallel)", secs, per_second(rows.len(), secs))?;

    let chunks: Vec<&[f64]> = alphas.chunks(per_group).collect();
    let labels: Vec<String> = (0..per_group).map(|i| format!("L{i}")).collect();
    let mut picks: [Vec<usize>; 3] = Default::default();
    let start = Instant::now();
    for (g, w) in chunks.iter().enumerate() {
        let t = WeightTable::build(&labels[..w.len()], w)?;
        picks[0].push(t.alias_index_of(uniform_at(ctx, 41, g as u64), uniform_at(ctx, 42, g as u64)));
    }
    let secs = start.elapsed().as_secs_f64();
    writeln!(out, "{:<28} {:>12.4} {:>14.0}", "alias build+sample", secs, per_second(rows.len(), secs))?;
    for (slot, (name, strategy)) in [("inverse-cdf linear", SearchStrategy::Linear), ("inverse-cdf bisection", SearchStrategy::Bisection)]
        .into_iter()
        .enumerate()
    {
        let start = Instant::now();
        for (g, w) in chunks.iter().enumerate() {
            let t = WeightTable::build(&labels[..w.len()], w)?;
            picks[slot + 1].push(t.inverse_index_of(uniform_at(ctx, 43, g as u64), strategy));
        }
        let secs = start.elapsed().as_secs_f64();
        writeln!(out, "{:<28} {:>12.4} {:>14.0}", name, secs, per_second(rows.len(), secs))?;
    }
    if per_group == 1 {
        let race_all_first = race.values().all(|w| w.label == "L0");
        let agree = race_all_first && picks.iter().all(|p| p.iter().all(|&i| i == 0));
        writeln!(out, "single-label agreement: {}", if agree { "yes" } else { "no" })?;
    }

    // Random updates against the sampled state.
    let mut table = DynamicTable::new(spec, ctx);
    for row in &rows {
        table.upsert(&row.group_id, &row.label, row.strength)?;
    }
    let mut tally: HashMap<UpdateCase, (u64, u64)> = HashMap::new();
    let stream = ctx.with_replicate(1);
    let start = Instant::now();
    for step in 0..args.updates {
        let g = format!("G{}", (uniform_at(stream, 0, step) * groups as f64) as usize);
        let l = format!("L{}", (uniform_at(stream, 1, step) * per_group as f64) as usize);
        let alpha = 0.1 + 10.0 * uniform_at(stream, 2, step);
        let report = if uniform_at(stream, 3, step) < 0.1 {
            table.delete(&g, &l).ok()
        } else {
            Some(table.upsert(&g, &l, spec.alpha_to_strength(alpha)?)?)
        };
        if let Some(r) = report {
            let e = tally.entry(r.case).or_default();
            e.0 += 1;
            e.1 += r.comparisons;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    writeln!(out, "{} updates in {:.4} s", args.updates, secs)?;
    writeln!(out, "{:<16} {:>10} {:>14}", "case", "count", "comparisons")?;
    let mut cases: Vec<_> = tally.into_iter().collect();
    cases.sort_by_key(|(c, _)| c.name());
    for (case, (n, cmp)) in cases {
        writeln!(out, "{:<16} {:>10} {:>14}", case.name(), n, cmp)?;
    }
    out.flush()?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn update_lines() {
        assert_eq!(parse_update_line("UPSERT g,a,1.5"), Ok(Some(UpdateCommand::Upsert("g", "a", 1.5))));
        assert_eq!(parse_update_line("delete g, a"), Ok(Some(UpdateCommand::Delete("g", "a"))));
        assert_eq!(parse_update_line("   "), Ok(None));
        assert_eq!(parse_update_line("# note"), Ok(None));
        assert!(parse_update_line("UPSERT g,a").is_err());
        assert!(parse_update_line("UPSERT g,a,x").is_err());
        assert!(parse_update_line("DELETE g").is_err());
        assert!(parse_update_line("MOVE g,a").is_err());
    }

    #[test]
    fn config_defaults_per_family() {
        let cli = Cli::try_parse_from(["keyrace", "sample", "--model", "negexp"]).unwrap();
        let Command::Sample(args) = cli.command else { panic!() };
        let spec = args.config.model_spec().unwrap();
        assert_eq!(spec.offset_d(), -1.0);
        let cli = Cli::try_parse_from(["keyrace", "sample", "--model", "gumbel1", "--offset", "-2.5"]).unwrap();
        let Command::Sample(args) = cli.command else { panic!() };
        assert_eq!(args.config.model_spec().unwrap().offset_d(), -2.5);
        let cli = Cli::try_parse_from(["keyrace", "sample", "--model", "nope"]).unwrap();
        let Command::Sample(args) = cli.command else { panic!() };
        assert!(args.config.model_spec().is_err());
    }
}
