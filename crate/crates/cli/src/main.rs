mod args;
mod scan;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use tnm_core::mle::{
    sample_standard, verify_datum, verify_sample_sets, SampleSet, VerificationReport, VerifyOptions,
};
use tnm_core::report::ThresholdJson;
use tnm_core::{explain, thresholds, ClassificationReport, Datum, ThresholdReport};

use args::{ClassifyArgs, Cli, Command, Format, ScanArgs, SimulateArgs, ThresholdArgs, VerifyArgs};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

/// A failure carrying its exit code and a one-line diagnostic.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<tnm_core::Error> for Failure {
    fn from(e: tnm_core::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            e.exit()
        }
        Err(e) => {
            let text = e.to_string();
            let line = text
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments");
            eprintln!("{line}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let outcome = match cli.command {
        Command::Classify(a) => classify(a),
        Command::Threshold(a) => threshold(a),
        Command::Scan(a) => run_scan(a),
        Command::Simulate(a) => simulate(a),
        Command::Verify(a) => verify(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn classify(a: ClassifyArgs) -> Outcome {
    let report = explain(&Datum::new(a.dims, a.samples)?);
    match a.format {
        Format::Json => emit(&report.to_json()),
        Format::Text => emit(&classification_text(&report)),
    }
    Ok(0)
}

/// Writes to stdout, adding a final newline if missing. A closed pipe is not
/// an error.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes());
    if !text.ends_with('\n') {
        let _ = out.write_all(b"\n");
    }
}

fn aligned(rows: &[(&str, String)]) -> String {
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    rows.iter()
        .map(|(k, v)| format!("{k:<width$}  {v}\n"))
        .collect()
}

fn bounds_text(t: &ThresholdReport) -> String {
    match &t.cor_bounds {
        Some((lo, hi)) => format!("{lo} {hi}"),
        None => "none".into(),
    }
}

fn classification_text(r: &ClassificationReport) -> String {
    let trace = r
        .castling_trace
        .steps
        .iter()
        .map(Datum::to_string)
        .collect::<Vec<_>>()
        .join(" -> ");
    let indices = r
        .indices
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(" ");
    let p = &r.mle_profile;
    aligned(&[
        ("datum", r.datum.to_string()),
        ("normalized", r.normalized.to_string()),
        ("R", r.r.to_string()),
        ("Delta", r.delta.to_string()),
        ("g_max", r.g_max.to_string()),
        ("Z", r.z.to_string()),
        ("indices", indices),
        ("castling_trace", trace),
        ("class", r.class.to_string()),
        ("class_recursive", r.class_recursive.to_string()),
        ("bounded_as", p.bounded_as.to_string()),
        ("exists_as", p.exists_as.to_string()),
        ("unique_as", p.unique_as.to_string()),
        ("always_unbounded", p.always_unbounded.to_string()),
        ("mlt_b", r.thresholds.mlt_b.to_string()),
        ("mlt_e", r.thresholds.mlt_e.to_string()),
        ("mlt_u", r.thresholds.mlt_u.to_string()),
        ("cor_bounds", bounds_text(&r.thresholds)),
        ("git_dimension", r.git_dimension.to_string()),
    ])
}

fn threshold(a: ThresholdArgs) -> Outcome {
    let t = thresholds(&a.dims)?;
    match a.format {
        Format::Json => {
            let json =
                serde_json::to_string_pretty(&ThresholdJson::from(&t)).expect("serializable");
            emit(&json);
        }
        Format::Text => emit(&aligned(&[
            ("mlt_b", t.mlt_b.to_string()),
            ("mlt_e", t.mlt_e.to_string()),
            ("mlt_u", t.mlt_u.to_string()),
            ("cor_bounds", bounds_text(&t)),
        ])),
    }
    Ok(0)
}

fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool, Failure> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(Failure::usage("--threads must be positive"));
        }
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Failure::usage(e.to_string()))
}

fn run_scan(a: ScanArgs) -> Outcome {
    if a.max_k > 16 {
        return Err(Failure::usage("--max-k must be at most 16"));
    }
    let size = scan::grid_size(a.max_k, a.max_dim, a.max_m);
    if size > scan::MAX_GRID {
        return Err(Failure::usage(format!(
            "grid has more than {} data",
            scan::MAX_GRID
        )));
    }
    let pool = thread_pool(a.threads)?;
    let file =
        File::create(&a.out).map_err(|e| Failure::usage(format!("{}: {e}", a.out.display())))?;
    let data = scan::enumerate(a.max_k, a.max_dim, a.max_m);
    let failures = pool
        .install(|| scan::scan(&data, a.check, BufWriter::new(file)))
        .map_err(|e| Failure::usage(format!("{}: {e}", a.out.display())))?;
    eprintln!(
        "{} data scanned, {failures} failed the {} check",
        data.len(),
        a.check.as_str()
    );
    Ok(if failures == 0 { 0 } else { EXIT_CHECK_FAILED })
}

fn to_usize(dims: &[u64]) -> Result<Vec<usize>, Failure> {
    dims.iter()
        .map(|&d| {
            usize::try_from(d).map_err(|_| Failure::usage(format!("dimension {d} too large")))
        })
        .collect()
}

fn simulate(a: SimulateArgs) -> Outcome {
    let dims = to_usize(&a.dims)?;
    let m = to_usize(&[a.samples])?[0];
    let n = dims.iter().try_fold(m, |acc, &d| acc.checked_mul(d));
    if n.is_none_or(|n| n > 1 << 28) {
        return Err(Failure::usage("sample set too large to simulate"));
    }
    let set = sample_standard(&dims, m, a.seed)?;
    set.write_file(&a.out)
        .map_err(|e| Failure::usage(format!("{}: {e}", a.out.display())))?;
    Ok(0)
}

fn verify(a: VerifyArgs) -> Outcome {
    let opts = VerifyOptions {
        trials: a.trials,
        restarts: a.restarts,
        seed: a.seed,
        ..VerifyOptions::default()
    };
    let pool = thread_pool(a.threads)?;
    let report = match &a.data {
        Some(path) => {
            let set = SampleSet::read_file(path)
                .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            let dims: Vec<u64> = set.dims().iter().map(|&d| d as u64).collect();
            let m = set.m() as u64;
            if a.dims.as_ref().is_some_and(|d| *d != dims) || a.samples.is_some_and(|s| s != m) {
                return Err(Failure::usage(
                    "--dims/--samples disagree with the data file",
                ));
            }
            let datum = Datum::new(dims, m)?;
            pool.install(|| verify_sample_sets(&datum, &[set], &opts))?
        }
        None => {
            let (Some(dims), Some(m)) = (a.dims, a.samples) else {
                return Err(Failure::usage(
                    "--dims and --samples are required without --data",
                ));
            };
            let datum = Datum::new(dims, m)?;
            pool.install(|| verify_datum(&datum, &opts))?
        }
    };
    match a.format {
        Format::Json => emit(&serde_json::to_string_pretty(&report).expect("serializable")),
        Format::Text => emit(&verification_text(&report)),
    }
    if report.numerical_failure() {
        Ok(EXIT_NUMERICAL)
    } else if report.hard_clauses_agree() {
        Ok(0)
    } else {
        Ok(EXIT_CHECK_FAILED)
    }
}

fn verification_text(r: &VerificationReport) -> String {
    use tnm_core::mle::FitStatus;
    let datum = Datum::new(r.dims.clone(), r.m)
        .map(|d| d.to_string())
        .unwrap_or_default();
    let count = |s: FitStatus| {
        r.trials
            .iter()
            .flat_map(|t| &t.statuses)
            .filter(|&&x| x == s)
            .count()
    };
    let mut out = aligned(&[
        ("datum", datum),
        ("trials", r.trials.len().to_string()),
        (
            "fits",
            format!(
                "{} converged, {} diverged, {} max_iterations, {} degenerate",
                count(FitStatus::Converged),
                count(FitStatus::Diverged),
                count(FitStatus::MaxIterations),
                count(FitStatus::DegenerateStatistic),
            ),
        ),
    ]);
    let width = r.clauses.iter().map(|c| c.clause.len()).max().unwrap_or(0);
    for c in &r.clauses {
        out.push_str(&format!(
            "{:<width$}  {:<8}  predicted: {}  observed: {}{}\n",
            c.clause,
            if c.agrees { "agree" } else { "DISAGREE" },
            c.predicted,
            c.observed,
            if c.hard { "" } else { "  (diagnostic)" },
        ));
    }
    out.push_str(if r.numerical_failure() {
        "result: numerical failure\n"
    } else if r.hard_clauses_agree() {
        "result: prediction confirmed\n"
    } else {
        "result: prediction contradicted\n"
    });
    out
}
