use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cascade_core::dictionary::{
    audit_dictionary, load_dictionary, ClassificationDictionary, DictionaryError,
};
use cascade_core::dsl::{parse_script, render_script, Script};
use cascade_core::engine::{
    render_decision, render_stats_tsv, render_trace_json, render_trace_table, run_batch,
    run_batch_traced, run_record_with, EvalError, EvalMode, WaterfallStats,
};
use cascade_core::generate::write_records;
use cascade_core::record::{load_records, parse_record_line, Record, RecordError, RecordReader};
use cascade_core::transform::{
    equivalence_oracle, is_one_decision_list, joint_domain, simplify_cascade, tree_to_cascade,
    DecisionTree, OracleResult, TransformError, DEFAULT_POINT_CAP,
};
use cascade_core::validate::{render_report, validate_script, ReportFormat};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

/// Validate, run and transform cascade rule scripts.
#[derive(Parser)]
#[command(name = "cascade-verify", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every statement's meta-predicates against the dictionary.
    Validate {
        script: PathBuf,
        #[command(flatten)]
        dict: DictArg,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
    },
    /// Evaluate a script over a record file.
    Run(RunArgs),
    /// Show how one record moved through the cascade.
    Trace {
        script: PathBuf,
        record_id: String,
        #[command(flatten)]
        dict: DictArg,
        #[arg(long)]
        records: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
        #[arg(long)]
        no_validate: bool,
        #[arg(long)]
        lenient: bool,
    },
    /// Convert a decision tree file into a cascade script.
    Transform {
        tree: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        simplify: bool,
        /// Compare tree and script on every point of a derived domain.
        #[arg(long)]
        check: bool,
    },
    /// Check a classification dictionary for consistency.
    CheckDict {
        #[arg(long)]
        dict: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
    },
    /// Write seeded synthetic records.
    Gen {
        #[command(flatten)]
        dict: DictArg,
        #[arg(long)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct DictArg {
    /// Dictionary file; the built-in sample dictionary when omitted.
    #[arg(long = "dict")]
    path: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    script: PathBuf,
    #[command(flatten)]
    dict: DictArg,
    #[arg(long)]
    records: PathBuf,
    /// Per-record outcomes, one JSON object per line.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Waterfall statistics as a tab-separated table.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Skip malformed record lines and treat type mismatches as Unknown.
    #[arg(long)]
    lenient: bool,
    /// Write full traces instead of outcomes to --out.
    #[arg(long)]
    trace_all: bool,
    #[arg(long)]
    no_validate: bool,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Human,
    Structured,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Human => ReportFormat::Human,
            Format::Structured => ReportFormat::Structured,
        }
    }
}

const OK: u8 = 0;
const INVALID: u8 = 1;
const INPUT_ERROR: u8 = 2;
const RUNTIME_ERROR: u8 = 3;

/// A message for stderr and the exit status that goes with it.
struct Failure {
    status: u8,
    message: String,
}

fn fail(status: u8, message: impl Into<String>) -> Failure {
    Failure { status, message: message.into() }
}

fn input_error(message: impl Into<String>) -> Failure {
    fail(INPUT_ERROR, message)
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::RecordNotFound { .. } => input_error(e.to_string()),
            other => fail(RUNTIME_ERROR, other.to_string()),
        }
    }
}

impl From<RecordError> for Failure {
    fn from(e: RecordError) -> Self {
        input_error(e.to_string())
    }
}

type Outcome = Result<u8, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn io_failure(path: &Path) -> impl Fn(io::Error) -> Failure + '_ {
    move |e| input_error(format!("{}: {e}", path.display()))
}

fn stdout_failure(e: io::Error) -> Failure {
    input_error(format!("standard output: {e}"))
}

fn load_dict(arg: &DictArg) -> Result<ClassificationDictionary, Failure> {
    match &arg.path {
        None => Ok(ClassificationDictionary::sample()),
        Some(p) => {
            load_dictionary(&read(p)?).map_err(|e| input_error(format!("{}: {e}", p.display())))
        }
    }
}

fn load_script(path: &Path) -> Result<Script, Failure> {
    parse_script(&read(path)?).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn open_records(path: &Path, lenient: bool) -> Result<RecordReader<BufReader<File>>, Failure> {
    let file = File::open(path).map_err(io_failure(path))?;
    Ok(load_records(BufReader::new(file)).lenient(lenient))
}

/// Refuses invalid scripts, printing the report to stderr.
fn gate(script: &Script, dict: &ClassificationDictionary, skip: bool) -> Option<u8> {
    if skip {
        return None;
    }
    let report = validate_script(script, dict);
    if report.valid {
        None
    } else {
        eprint!("{}", render_report(&report, ReportFormat::Human));
        Some(INVALID)
    }
}

fn mode(lenient: bool) -> EvalMode {
    if lenient {
        EvalMode::Lenient
    } else {
        EvalMode::Strict
    }
}

fn cmd_validate(script: &Path, dict: &DictArg, format: Format) -> Outcome {
    let dict = load_dict(dict)?;
    let script = load_script(script)?;
    let report = validate_script(&script, &dict);
    let mut out = io::stdout().lock();
    out.write_all(render_report(&report, format.into()).as_bytes()).map_err(stdout_failure)?;
    Ok(if report.valid { OK } else { INVALID })
}

const CHUNK: usize = 1 << 16;

/// Reads up to `CHUNK` records, parsing lines in parallel. Malformed lines
/// are skipped in lenient mode; otherwise the first one by position fails.
fn next_chunk<R: BufRead>(
    reader: &mut RecordReader<R>,
    lenient: bool,
) -> Result<Vec<Record>, Failure> {
    let mut lines = Vec::with_capacity(CHUNK);
    while lines.len() < CHUNK {
        match reader.next_line() {
            None => break,
            Some(line) => lines.push(line?),
        }
    }
    let parsed: Vec<Result<Record, RecordError>> =
        lines.par_iter().map(|(n, l)| parse_record_line(l, *n)).collect();
    let mut records = Vec::with_capacity(parsed.len());
    for p in parsed {
        match p {
            Ok(r) => records.push(r),
            Err(_) if lenient => reader.note_skipped(1),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(records)
}

fn cmd_run(a: &RunArgs) -> Outcome {
    let dict = load_dict(&a.dict)?;
    let script = load_script(&a.script)?;
    if let Some(status) = gate(&script, &dict, a.no_validate) {
        return Ok(status);
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = a.jobs {
        if n == 0 {
            return Err(input_error("--jobs must be at least 1"));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| input_error(e.to_string()))?;

    let mut reader = open_records(&a.records, a.lenient)?;
    let mut out = a.out.as_deref().map(create).transpose()?;
    let mut stats = WaterfallStats::new(&script);
    let mode = mode(a.lenient);
    loop {
        let records = pool.install(|| next_chunk(&mut reader, a.lenient))?;
        if records.is_empty() {
            break;
        }
        let lines: Vec<String> = if a.trace_all {
            let (traces, s) = pool.install(|| run_batch_traced(&script, &records, mode))?;
            stats.merge(&s);
            if out.is_none() {
                continue;
            }
            traces.iter().map(render_trace_json).collect()
        } else {
            let batch = pool.install(|| run_batch(&script, &records, mode))?;
            stats.merge(&batch.stats);
            if out.is_none() {
                continue;
            }
            batch.outcomes.iter().map(render_decision).collect()
        };
        if let (Some(w), Some(path)) = (out.as_mut(), a.out.as_deref()) {
            for l in lines {
                writeln!(w, "{l}").map_err(io_failure(path))?;
            }
        }
    }
    if let (Some(w), Some(path)) = (out.as_mut(), a.out.as_deref()) {
        w.flush().map_err(io_failure(path))?;
    }
    if let Some(path) = &a.stats {
        let mut w = create(path)?;
        w.write_all(render_stats_tsv(&stats, a.lenient).as_bytes()).map_err(io_failure(path))?;
        w.flush().map_err(io_failure(path))?;
    }

    let mut summary = format!(
        "records: {}, accepted: {}, rejected: {}, by default: {}",
        stats.total(),
        stats.accepted_total,
        stats.rejected_total,
        stats.default_count
    );
    if a.lenient {
        summary.push_str(&format!(
            ", skipped lines: {}, type mismatches: {}",
            reader.skipped(),
            stats.type_mismatches
        ));
    }
    println!("{summary}");
    Ok(OK)
}

#[allow(clippy::too_many_arguments)]
fn cmd_trace(
    script: &Path,
    record_id: &str,
    dict: &DictArg,
    records: &Path,
    format: Format,
    no_validate: bool,
    lenient: bool,
) -> Outcome {
    let dict = load_dict(dict)?;
    let script = load_script(script)?;
    if let Some(status) = gate(&script, &dict, no_validate) {
        return Ok(status);
    }
    for r in open_records(records, lenient)? {
        let r = r?;
        if r.id() != record_id {
            continue;
        }
        let (trace, _) = run_record_with(&script, &r, mode(lenient))?;
        let text = match format {
            Format::Human => render_trace_table(&trace, script.final_action()),
            Format::Structured => format!("{}\n", render_trace_json(&trace)),
        };
        io::stdout().lock().write_all(text.as_bytes()).map_err(stdout_failure)?;
        return Ok(OK);
    }
    Err(EvalError::RecordNotFound { record_id: record_id.to_string() }.into())
}

fn cmd_transform(tree: &Path, out: Option<&Path>, simplify: bool, check: bool) -> Outcome {
    let tree = DecisionTree::from_json_str(&read(tree)?)
        .map_err(|e| input_error(format!("{}: {e}", tree.display())))?;
    let mut script = tree_to_cascade(&tree);
    if simplify {
        script = simplify_cascade(&script).map_err(|e| match e {
            TransformError::SimplificationUnsound { .. } => fail(INVALID, e.to_string()),
            other => fail(INVALID, other.to_string()),
        })?;
    }
    let text = render_script(&script);
    match out {
        Some(path) => fs::write(path, &text).map_err(io_failure(path))?,
        None => io::stdout().lock().write_all(text.as_bytes()).map_err(stdout_failure)?,
    }
    if !check {
        return Ok(OK);
    }

    let mut report = String::new();
    let domain = joint_domain((&tree).into(), (&script).into());
    let status =
        match equivalence_oracle((&tree).into(), (&script).into(), &domain, DEFAULT_POINT_CAP) {
            Ok(OracleResult::Equal { points }) => {
                report.push_str(&format!("equivalent: {points} points checked\n"));
                OK
            }
            Ok(OracleResult::Different { counterexample, left, right }) => {
                let show = |v: Option<bool>| v.map_or("undecided".to_string(), |b| b.to_string());
                report.push_str(&format!(
                    "not equivalent at {}: tree {}, cascade {}\n",
                    counterexample.to_json_line(),
                    show(left),
                    show(right)
                ));
                INVALID
            }
            Err(e) => return Err(fail(INVALID, format!("cannot check equivalence: {e}"))),
        };
    match is_one_decision_list(&script) {
        (true, _) => report.push_str("1-decision list: yes\n"),
        (false, bad) => {
            let steps: Vec<String> = bad.iter().map(|i| i.to_string()).collect();
            report.push_str(&format!("1-decision list: no (statements {})\n", steps.join(", ")));
        }
    }
    // The script owns stdout unless it went to a file.
    if out.is_some() {
        print!("{report}");
    } else {
        eprint!("{report}");
    }
    Ok(status)
}

fn issue_kind(e: &DictionaryError) -> (&'static str, Option<&str>) {
    match e {
        DictionaryError::DuplicateAnnotation { name } => ("DuplicateAnnotation", Some(name)),
        DictionaryError::UnknownDimensionValue { annotation, .. } => {
            ("UnknownDimensionValue", Some(annotation))
        }
        DictionaryError::DomainPurposeMismatch { annotation, .. } => {
            ("DomainPurposeMismatch", Some(annotation))
        }
        DictionaryError::Schema(_) => ("Schema", None),
    }
}

fn cmd_check_dict(path: &Path, format: Format) -> Outcome {
    let (dict, issues) = audit_dictionary(&read(path)?)
        .map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    let valid = issues.is_empty();
    let mut text = String::new();
    match format {
        Format::Human => {
            let status = if valid { "OK" } else { "FAILED" };
            let noun = if issues.len() == 1 { "issue" } else { "issues" };
            text.push_str(&format!(
                "{status}: {} annotations, {} {noun}\n",
                dict.len(),
                issues.len()
            ));
            for i in &issues {
                text.push_str(&format!("- {i}\n"));
            }
        }
        Format::Structured => {
            for i in &issues {
                let (kind, annotation) = issue_kind(i);
                let row = serde_json::json!({
                    "kind": kind,
                    "annotation": annotation,
                    "message": i.to_string(),
                });
                text.push_str(&format!("{row}\n"));
            }
            let summary = serde_json::json!({
                "annotations": dict.len(),
                "issues": issues.len(),
                "valid": valid,
            });
            text.push_str(&format!("{summary}\n"));
        }
    }
    io::stdout().lock().write_all(text.as_bytes()).map_err(stdout_failure)?;
    Ok(if valid { OK } else { INVALID })
}

fn cmd_gen(dict: &DictArg, count: u64, seed: u64, out: Option<&Path>) -> Outcome {
    let dict = load_dict(dict)?;
    match out {
        Some(path) => write_records(&dict, count, seed, create(path)?).map_err(io_failure(path))?,
        None => write_records(&dict, count, seed, BufWriter::new(io::stdout().lock()))
            .map_err(stdout_failure)?,
    }
    Ok(OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate { script, dict, format } => cmd_validate(script, dict, *format),
        Command::Run(a) => cmd_run(a),
        Command::Trace { script, record_id, dict, records, format, no_validate, lenient } => {
            cmd_trace(script, record_id, dict, records, *format, *no_validate, *lenient)
        }
        Command::Transform { tree, out, simplify, check } => {
            cmd_transform(tree, out.as_deref(), *simplify, *check)
        }
        Command::CheckDict { dict, format } => cmd_check_dict(dict, *format),
        Command::Gen { dict, count, seed, out } => cmd_gen(dict, *count, *seed, out.as_deref()),
    };
    match result {
        Ok(status) => ExitCode::from(status),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.status)
        }
    }
}
