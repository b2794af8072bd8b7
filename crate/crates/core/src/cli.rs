//! Command-line front end. [`run`] parses arguments, dispatches and writes
//! to the given streams, so the binary and the tests share one code path.

use std::io::{self, Write};
use std::ops::ControlFlow;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analytic::{self, Family, Thresholds};
use crate::enumerate::{self, format_ratio};
use crate::golden;
use crate::parallel::{self, worker_seed};
use crate::sampler::{NfMode, SampleError, SampleResult, Sampler, SamplerClass, SamplerConfig};
use crate::term::TermClass;

const SIZES: &str = "\
Sizes: count, enumerate and densities take natural sizes (a variable is 1,
every successor and abstraction adds 1, every application adds 2). sample
--min/--max take unit sizes, which are natural sizes minus one.";

#[derive(Debug, Parser)]
#[command(
    name = "lambdagen",
    version,
    about = "Enumerate, count and uniformly sample simply-typed lambda terms",
    after_help = SIZES
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Count the terms of a class at a natural size
    #[command(after_help = SIZES)]
    Count(CountArgs),
    /// List the terms of a class at a natural size
    #[command(after_help = SIZES)]
    Enumerate(EnumerateArgs),
    /// Density table of typed terms and typed normal forms
    #[command(after_help = SIZES)]
    Densities(DensitiesArgs),
    /// Calibrate a Boltzmann sampler for an expected natural size
    Tune(TuneArgs),
    /// Draw closed simply-typed terms or normal forms
    #[command(after_help = SIZES)]
    Sample(SampleArgs),
    /// Check published counts, density rows and sampler constants
    Selftest,
}

const CLASS_HELP: &str = "plain, closed, plain-typable, closed-typable, plain-nf, \
plain-typable-nf or closed-typable-nf";

#[derive(Debug, Args)]
struct CountArgs {
    #[arg(long, help = CLASS_HELP)]
    class: TermClass,
    /// natural size
    #[arg(long)]
    size: u32,
    /// print `size count` for every size from 0 up to --size
    #[arg(long)]
    upto: bool,
}

#[derive(Debug, Args)]
struct EnumerateArgs {
    #[arg(long, help = CLASS_HELP)]
    class: TermClass,
    /// natural size
    #[arg(long)]
    size: u32,
    /// print `term:type` (typable classes only)
    #[arg(long)]
    with_types: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TableFormat {
    Text,
    Csv,
}

#[derive(Debug, Args)]
struct DensitiesArgs {
    /// last natural size
    #[arg(long)]
    upto: u32,
    #[arg(long, value_enum, default_value = "text")]
    format: TableFormat,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Emit {
    /// labelled values
    Text,
    /// key=value sampler configuration, readable by `sample --config`
    Config,
}

#[derive(Debug, Args)]
struct TuneArgs {
    /// plain or nf
    #[arg(long)]
    class: Family,
    /// expected natural size
    #[arg(long, default_value_t = 120.0)]
    target_size: f64,
    #[arg(long, default_value_t = analytic::DEFAULT_TOLERANCE)]
    tolerance: f64,
    #[arg(long, value_enum, default_value = "text")]
    emit: Emit,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NfModeArg {
    Faithful,
    Paper,
}

#[derive(Debug, Args)]
struct SampleArgs {
    /// typed or typed-nf
    #[arg(long)]
    class: SamplerClass,
    /// minimum unit size [default: 120 typed, 60 typed-nf]
    #[arg(long)]
    min: Option<u32>,
    /// maximum unit size [default: 150 typed, 80 typed-nf]
    #[arg(long)]
    max: Option<u32>,
    /// attempts per term (per worker with --threads)
    #[arg(long, default_value_t = 10_000_000)]
    max_steps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "faithful")]
    nf_mode: NfModeArg,
    /// one JSON object per line
    #[arg(long)]
    json: bool,
    /// race W workers; 0 uses every hardware thread
    #[arg(long, value_name = "W")]
    threads: Option<usize>,
    /// thresholds from a file written by `tune --emit config`
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// number of terms; term k of a parallel batch uses seed + k
    #[arg(long, default_value_t = 1)]
    count: u64,
}

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    /// failed selftest item or output error
    Failure = 1,
    Exhausted = 2,
    InvalidArgs = 3,
    ParseError = 4,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

enum Failure {
    Status(ExitStatus, String),
    Io(io::Error),
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Status(ExitStatus::InvalidArgs, msg.into())
}

/// Parse `args` (program name first), run the command, report errors on
/// `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{rendered}");
                ExitStatus::InvalidArgs
            } else {
                let _ = write!(out, "{rendered}");
                ExitStatus::Success
            };
        }
    };
    let result = match cli.command {
        Command::Count(a) => count(a, out),
        Command::Enumerate(a) => enumerate_cmd(a, out),
        Command::Densities(a) => densities(a, out),
        Command::Tune(a) => tune(a, out),
        Command::Sample(a) => sample(a, out),
        Command::Selftest => selftest(out),
    };
    let result = result.and_then(|s| out.flush().map(|_| s).map_err(Failure::Io));
    match result {
        Ok(status) => status,
        Err(Failure::Status(status, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            status
        }
        Err(Failure::Io(e)) => {
            let _ = writeln!(err, "error: {e}");
            ExitStatus::Failure
        }
    }
}

fn count(a: CountArgs, out: &mut dyn Write) -> Result<ExitStatus, Failure> {
    if a.upto {
        for n in 0..=a.size {
            writeln!(out, "{n} {}", enumerate::count(a.class, n))?;
        }
    } else {
        writeln!(out, "{}", enumerate::count(a.class, a.size))?;
    }
    Ok(ExitStatus::Success)
}

fn enumerate_cmd(a: EnumerateArgs, out: &mut dyn Write) -> Result<ExitStatus, Failure> {
    if a.with_types && !a.class.is_typable() {
        return Err(invalid(format!("class {} carries no types", a.class)));
    }
    let Some(units) = a.size.checked_sub(1) else {
        return Ok(ExitStatus::Success);
    };
    let mut io_err = None;
    enumerate::for_each_term(a.class, units, |s| {
        let written = match (a.with_types, s.ty()) {
            (true, Some(ty)) => writeln!(out, "{}:{}", s.term(), ty),
            _ => writeln!(out, "{}", s.term()),
        };
        match written {
            Ok(()) => ControlFlow::Continue(()),
            Err(e) => {
                io_err = Some(e);
                ControlFlow::Break(())
            }
        }
    });
    match io_err {
        Some(e) => Err(e.into()),
        None => Ok(ExitStatus::Success),
    }
}

fn densities(a: DensitiesArgs, out: &mut dyn Write) -> Result<ExitStatus, Failure> {
    if a.upto == 0 {
        return Err(invalid("--upto must be at least 1"));
    }
    match a.format {
        TableFormat::Csv => writeln!(out, "size,A,B,C,D,E")?,
        TableFormat::Text => writeln!(
            out,
            "{:>4} {:>12} {:>9} {:>12} {:>9} {:>7}",
            "size", "A", "B", "C", "D", "E"
        )?,
    }
    for n in 1..=a.upto {
        let r = enumerate::density_row(n);
        let (b, d, e) = (
            format_ratio(r.plain_ratio),
            format_ratio(r.nf_ratio),
            format_ratio(r.ratio),
        );
        match a.format {
            TableFormat::Csv => writeln!(out, "{n},{},{b},{},{d},{e}", r.typed, r.typed_nf)?,
            TableFormat::Text => writeln!(
                out,
                "{n:>4} {:>12} {b:>9} {:>12} {d:>9} {e:>7}",
                r.typed, r.typed_nf
            )?,
        }
    }
    Ok(ExitStatus::Success)
}

fn tune(a: TuneArgs, out: &mut dyn Write) -> Result<ExitStatus, Failure> {
    if a.tolerance.is_nan() || a.tolerance <= 0.0 {
        return Err(invalid("--tolerance must be positive"));
    }
    let t = analytic::solve_for_target(a.class, a.target_size, a.tolerance)
        .map_err(|e| invalid(e.to_string()))?;
    match a.emit {
        Emit::Config => write!(out, "{}", t.to_config())?,
        Emit::Text => {
            writeln!(out, "class={}", t.family)?;
            writeln!(out, "target_size={}", t.target)?;
            writeln!(out, "x={}", t.x)?;
            writeln!(out, "rho={}", t.rho)?;
            writeln!(out, "E={}", t.expected_size)?;
            writeln!(out, "sigma={}", t.std_dev)?;
            match t.thresholds {
                Thresholds::Plain {
                    index,
                    lambda,
                    leaf,
                } => {
                    writeln!(out, "index_threshold={index}")?;
                    writeln!(out, "lambda_threshold={lambda}")?;
                    writeln!(out, "leaf_threshold={leaf}")?;
                }
                Thresholds::NormalForm {
                    lambda,
                    index,
                    leaf,
                } => {
                    writeln!(out, "lambda_threshold={lambda}")?;
                    writeln!(out, "index_threshold={index}")?;
                    writeln!(out, "leaf_threshold={leaf}")?;
                }
            }
        }
    }
    Ok(ExitStatus::Success)
}

#[derive(Serialize)]
struct SampleRecord<'a> {
    class: &'static str,
    min: u32,
    max: u32,
    /// requested seed
    seed: u64,
    term: String,
    #[serde(rename = "type")]
    ty: &'a str,
    natural_size: u64,
    steps: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    winner: Option<usize>,
    /// seed of the winning worker, enough to replay it sequentially
    #[serde(skip_serializing_if = "Option::is_none")]
    winner_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    elapsed_ms: Option<f64>,
}

fn sample(a: SampleArgs, out: &mut dyn Write) -> Result<ExitStatus, Failure> {
    let mut config = SamplerConfig::for_class(a.class, a.seed);
    config.min_units = a.min.unwrap_or(config.min_units);
    config.max_units = a.max.unwrap_or(config.max_units);
    config.max_steps = a.max_steps;
    config.nf_mode = match a.nf_mode {
        NfModeArg::Faithful => NfMode::GrammarFaithful,
        NfModeArg::Paper => NfMode::PaperFlattened,
    };
    if let Some(path) = &a.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        config.thresholds = analytic::parse_config(&text).map_err(|e| {
            Failure::Status(ExitStatus::ParseError, format!("{}: {e}", path.display()))
        })?;
    }
    config.validate().map_err(|e| invalid(e.to_string()))?;

    let exhausted = |e: SampleError| match e {
        SampleError::Exhausted { .. } => Failure::Status(ExitStatus::Exhausted, e.to_string()),
        SampleError::InvalidConfig(_) => invalid(e.to_string()),
    };
    let (min, max, base) = (config.min_units, config.max_units, config.seed);
    let emit = |out: &mut dyn Write,
                seed: u64,
                r: &SampleResult,
                par: Option<&parallel::ParallelResult>|
     -> io::Result<()> {
        if a.json {
            let record = SampleRecord {
                class: a.class.name(),
                min,
                max,
                seed,
                term: r.term.to_string(),
                ty: &r.ty,
                natural_size: r.natural_size,
                steps: r.steps,
                winner: par.map(|p| p.winner),
                winner_seed: par.map(|p| p.result.seed),
                workers: par.map(|p| p.workers),
                elapsed_ms: par.map(|p| p.elapsed.as_secs_f64() * 1e3),
            };
            let line = serde_json::to_string(&record).map_err(io::Error::other)?;
            writeln!(out, "{line}")
        } else {
            write!(
                out,
                "{}:{} size={} steps={} seed={}",
                r.term, r.ty, r.natural_size, r.steps, r.seed
            )?;
            if let Some(p) = par {
                write!(
                    out,
                    " winner={} elapsed_ms={:.3}",
                    p.winner,
                    p.elapsed.as_secs_f64() * 1e3
                )?;
            }
            writeln!(out)
        }
    };

    match a.threads {
        None => {
            let mut sampler = Sampler::new(config.clone()).map_err(exhausted)?;
            for _ in 0..a.count {
                let r = sampler.sample().map_err(exhausted)?;
                emit(out, base, &r, None)?;
            }
        }
        Some(threads) => {
            for k in 0..a.count {
                let mut cfg = config.clone();
                cfg.seed = base.wrapping_add(k);
                let p = parallel::sample_parallel(&cfg, threads).map_err(exhausted)?;
                emit(out, cfg.seed, &p.result, Some(&p))?;
            }
        }
    }
    Ok(ExitStatus::Success)
}

fn selftest(out: &mut dyn Write) -> Result<ExitStatus, Failure> {
    let mut failed = 0;
    let mut report = |out: &mut dyn Write, name: String, ok: bool, detail: String| {
        if !ok {
            failed += 1;
        }
        let verdict = if ok { "PASS" } else { "FAIL" };
        writeln!(out, "{verdict} {name}: {detail}")
    };

    for (class, published) in golden::SEQUENCES {
        let upto = golden::quick_limit(class);
        let got: Vec<u64> = (0..=upto)
            .map(|n| enumerate::count_by_enumeration(class, n as u32))
            .collect();
        let ok = got[..] == published[..=upto];
        report(
            out,
            format!("counts {class} 0..={upto}"),
            ok,
            format!("{got:?}"),
        )?;
    }

    for (size, a, b, c, d, e) in golden::DENSITY_ROWS.into_iter().take(3) {
        let r = enumerate::density_row(size);
        let close = |x: Option<f64>, want: f64| x.is_some_and(|x| (x - want).abs() <= 1e-3);
        let ok = r.typed == a.into()
            && r.typed_nf == c.into()
            && close(r.plain_ratio, b)
            && close(r.nf_ratio, d)
            && close(r.ratio, e);
        let detail = format!(
            "{},{},{},{},{}",
            r.typed,
            format_ratio(r.plain_ratio),
            r.typed_nf,
            format_ratio(r.nf_ratio),
            format_ratio(r.ratio)
        );
        report(out, format!("density row {size}"), ok, detail)?;
    }

    let target = crate::sampler::DEFAULT_TARGET_SIZE;
    let tol = analytic::DEFAULT_TOLERANCE;
    let mut constants = Vec::new();
    match analytic::solve_for_target(Family::Plain, target, tol) {
        Ok(t) => {
            constants.push(("x plain", t.x, golden::X_PLAIN, golden::X_PLAIN_TOLERANCE));
            if let Thresholds::Plain {
                index,
                lambda,
                leaf,
            } = t.thresholds
            {
                let c = golden::CONSTANT_TOLERANCE;
                constants.push(("index threshold", index, golden::PLAIN_INDEX, c));
                constants.push(("lambda threshold", lambda, golden::PLAIN_LAMBDA, c));
                constants.push(("leaf threshold", leaf, golden::PLAIN_LEAF, c));
            }
        }
        Err(e) => report(out, "plain calibration".into(), false, e.to_string())?,
    }
    match analytic::solve_for_target(Family::NormalForm, target, tol) {
        Ok(t) => {
            let c = golden::CONSTANT_TOLERANCE;
            constants.push(("x nf", t.x, golden::X_NF, c));
            if let Thresholds::NormalForm { index, leaf, .. } = t.thresholds {
                constants.push(("nf index threshold", index, golden::NF_INDEX, c));
                constants.push(("nf leaf threshold", leaf, golden::NF_LEAF, c));
            }
        }
        Err(e) => report(out, "nf calibration".into(), false, e.to_string())?,
    }
    for (name, got, want, tol) in constants {
        let ok = (got - want).abs() <= tol;
        report(
            out,
            name.to_string(),
            ok,
            format!("{got} (published {want})"),
        )?;
    }

    // the winning worker of a parallel run replays alone from its seed
    let config = SamplerConfig::typed(1).with_units(10, 20);
    let replay = parallel::sample_parallel(&config, 1)
        .map(|p| p.result)
        .and_then(|r| {
            let mut alone = config.clone();
            alone.seed = worker_seed(config.seed, 0);
            Ok((crate::sampler::sample(&alone)?, r))
        });
    let ok = matches!(&replay, Ok((a, b)) if a == b);
    report(out, "seeded replay".into(), ok, String::new())?;

    Ok(if failed == 0 {
        ExitStatus::Success
    } else {
        ExitStatus::Failure
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (ExitStatus, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("lambdagen").chain(args.iter().copied());
        let status = run(argv, &mut out, &mut err);
        (
            status,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn count_prints_the_number() {
        let (s, out, _) = call(&["count", "--class", "closed-typable", "--size", "10"]);
        assert_eq!(s, ExitStatus::Success);
        assert_eq!(out, "508\n");
    }

    #[test]
    fn count_upto() {
        let (_, out, _) = call(&["count", "--class", "closed", "--size", "5", "--upto"]);
        assert_eq!(out, "0 0\n1 0\n2 1\n3 1\n4 3\n5 6\n");
    }

    #[test]
    fn enumerate_with_types() {
        let (s, out, _) = call(&[
            "enumerate",
            "--class",
            "closed-typable",
            "--size",
            "4",
            "--with-types",
        ]);
        assert_eq!(s, ExitStatus::Success);
        assert_eq!(out.lines().count(), 2);
        assert!(out.contains("l(l(s(0))):(A->B->A)"));
        let (s, _, _) = call(&[
            "enumerate",
            "--class",
            "plain",
            "--size",
            "3",
            "--with-types",
        ]);
        assert_eq!(s, ExitStatus::InvalidArgs);
    }

    #[test]
    fn densities_csv() {
        let (_, out, _) = call(&["densities", "--upto", "5", "--format", "csv"]);
        let lines: Vec<_> = out.lines().collect();
        assert_eq!(lines[0], "size,A,B,C,D,E");
        assert_eq!(lines[1], "1,0,NA,0,NA,NA");
        assert_eq!(lines[5], "5,5,4.400,3,5.666,0.776");
    }

    #[test]
    fn tune_prints_full_precision() {
        let (s, out, _) = call(&["tune", "--class", "plain", "--target-size", "120"]);
        assert_eq!(s, ExitStatus::Success);
        assert!(
            out.lines().any(|l| l.starts_with("x=0.29558095907")),
            "{out}"
        );
        let (s, _, _) = call(&["tune", "--class", "nf", "--target-size", "0.5"]);
        assert_eq!(s, ExitStatus::InvalidArgs);
    }

    #[test]
    fn bad_usage_is_status_3() {
        assert_eq!(call(&[]).0, ExitStatus::InvalidArgs);
        assert_eq!(
            call(&["count", "--class", "nope", "--size", "3"]).0,
            ExitStatus::InvalidArgs
        );
        assert_eq!(
            call(&["sample", "--class", "typed", "--min", "9", "--max", "3"]).0,
            ExitStatus::InvalidArgs
        );
        let (s, out, _) = call(&["--help"]);
        assert_eq!(s, ExitStatus::Success);
        assert!(out.contains("natural sizes"));
    }

    #[test]
    fn sample_json_is_self_describing() {
        let args = [
            "sample", "--class", "typed", "--min", "5", "--max", "5", "--seed", "42", "--json",
        ];
        let (s, out, _) = call(&args);
        assert_eq!(s, ExitStatus::Success);
        let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
        assert_eq!(v["class"], "typed");
        assert_eq!(v["seed"], 42);
        assert_eq!(v["natural_size"], 6);
        let term: crate::term::Term = v["term"].as_str().unwrap().parse().unwrap();
        assert!(term.is_closed());
        assert_eq!(
            crate::types::infer_type(&term).unwrap().to_string(),
            v["type"].as_str().unwrap()
        );
        assert_eq!(call(&args).1, out);
    }

    #[test]
    fn sample_exhaustion_is_status_2() {
        let (s, out, err) = call(&[
            "sample",
            "--class",
            "typed-nf",
            "--min",
            "40",
            "--max",
            "40",
            "--max-steps",
            "5",
        ]);
        assert_eq!(s, ExitStatus::Exhausted);
        assert!(out.is_empty());
        assert!(err.contains("5 attempts"));
    }
}
