//! Command-line front end: `analyze`, `classify`, `approximate`, `families`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::constructor::{approximate_transition, direct_sum_cyclic_vector, DirectSumCheck, TransitionOutcome};
use crate::criteria::{
    aag_cyclic, aag_default_tol, check_justifications, classify, direct_sum_lq, fixed_j_c123,
    quasinilpotent_b123, salas_hypercyclic, salas_supercyclic, sc_witness, shkarin_a123, Budgets,
    ClassificationReport, ConditionStatus, CriterionReport, Justification, RhoSpec, Trace, Verdict,
};
use crate::error::{Error, Result};
use crate::operator_engine::LpExponent;
use crate::report::{format_real, Real};
use crate::weights::{builtin_families, Family, WeightSequence, WeightSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_IO: i32 = 3;

pub const CSV_HEADER: [&str; 7] = ["family", "p", "criterion", "verdict", "value_log", "witness_params", "horizon"];

#[derive(Debug, Parser)]
#[command(name = "wbshift", version, about = "Cyclicity criteria for weighted bilateral shifts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every applicable criterion and write one report per criterion.
    Analyze(AnalyzeArgs),
    /// Derive statuses for the conditions C1..C6 and cyclicity.
    Classify(RunArgs),
    /// Build and verify a transition f_{-k} -> f_{-n}.
    Approximate(ApproximateArgs),
    /// List the built-in weight families.
    Families(OutputArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Output path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Built-in name or inline form such as `beauzamy(1,2)`.
    #[arg(long, required_unless_present = "spec_file", conflicts_with = "spec_file")]
    pub family: Option<Family>,
    /// JSON weight specification.
    #[arg(long)]
    pub spec_file: Option<PathBuf>,
    /// Exponent in [1, inf]; `inf` selects c_0.
    #[arg(long, default_value = "2")]
    pub p: LpExponent,
    /// Tolerance as a magnitude; criteria compare against its logarithm.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 64)]
    pub m_max: i64,
    #[arg(long, default_value_t = 4096)]
    pub n_max: i64,
    #[arg(long, default_value_t = 64)]
    pub j_max: i64,
    /// Worker threads; output does not depend on it.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Submultiplicative sequence for aag_cyclic: `constant(c)`, `poly(c,d)` or `sexp(c,beta)`.
    #[arg(long)]
    pub rho: Option<RhoSpec>,
    /// Power k for aag_cyclic.
    #[arg(long, default_value_t = 1)]
    pub k: i64,
    /// Support radius of the basis vectors used by sc_witness.
    #[arg(long, default_value_t = 8)]
    pub radius: i64,
    #[arg(long, default_value_t = 2)]
    pub c123_j: i64,
    #[arg(long, default_value_t = 1)]
    pub c123_a: i64,
}

#[derive(Debug, Args)]
pub struct ApproximateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub k: i64,
    #[arg(long)]
    pub n: i64,
    #[arg(long)]
    pub eps: f64,
    /// Also check the direct-sum cyclic vector built from `u` with this many copies.
    #[arg(long)]
    pub direct_sum_j: Option<usize>,
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                EXIT_INPUT
            } else {
                EXIT_IO
            }
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Families(out) => emit(out, render_families(out.format)?),
        Command::Analyze(a) => {
            let ctx = Context::new(&a.run)?;
            let body = ctx.in_pool(|| cmd_analyze(&ctx, a))?;
            emit(&a.run.output, body)
        }
        Command::Classify(a) => {
            let ctx = Context::new(a)?;
            let body = ctx.in_pool(|| cmd_classify(&ctx))?;
            emit(&a.output, body)
        }
        Command::Approximate(a) => {
            let ctx = Context::new(&a.run)?;
            let body = ctx.in_pool(|| cmd_approximate(&ctx, a))?;
            emit(&a.run.output, body)
        }
    }
}

/// Validated inputs shared by the run commands.
pub struct Context {
    pub ws: WeightSequence,
    pub label: String,
    pub p: LpExponent,
    pub budgets: Budgets,
    pub format: Format,
    pub seed: u64,
    workers: usize,
}

impl Context {
    pub fn new(a: &RunArgs) -> Result<Context> {
        let ws = match (&a.family, &a.spec_file) {
            (Some(f), _) => WeightSequence::new(f.clone())?,
            (None, Some(path)) => WeightSequence::from_json(&fs::read_to_string(path)?)?,
            (None, None) => return Err(Error::invalid("family", "pass --family or --spec-file")),
        };
        if !(a.tol.is_finite() && a.tol > 0.0) {
            return Err(Error::invalid("tol", "must be a positive magnitude"));
        }
        if a.workers == 0 {
            return Err(Error::invalid("workers", "must be at least 1"));
        }
        let budgets = Budgets {
            tol_log: a.tol.ln(),
            m_max: a.m_max,
            n_max: a.n_max,
            j_max: a.j_max,
        };
        budgets.validate()?;
        Ok(Context {
            label: ws.family().to_string(),
            ws,
            p: a.p,
            budgets,
            format: a.output.format,
            seed: a.seed,
            workers: a.workers,
        })
    }

    fn in_pool<R: Send>(&self, f: impl FnOnce() -> Result<R> + Send) -> Result<R> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::invalid("workers", e.to_string()))?;
        pool.install(f)
    }
}

fn emit(out: &OutputArgs, body: String) -> Result<()> {
    match &out.out {
        Some(path) => fs::write(path, body)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn csv_finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::invalid("csv", e.to_string()))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// One CSV row per report, in the fixed column order.
pub fn report_row(label: &str, p: LpExponent, r: &CriterionReport) -> [String; 7] {
    [
        label.to_string(),
        p.to_string(),
        r.criterion.to_string(),
        r.verdict.as_str().to_string(),
        format_real(r.value_log),
        r.witness.to_string(),
        r.horizon.to_string(),
    ]
}

#[derive(Serialize)]
struct TraceEntry<'a> {
    criterion: &'a str,
    horizon: &'a crate::criteria::Params,
    trace: &'a Trace,
}

fn traces(reports: &[CriterionReport]) -> Vec<TraceEntry<'_>> {
    reports
        .iter()
        .filter_map(|r| {
            r.trace.as_ref().map(|trace| TraceEntry {
                criterion: r.criterion.as_str(),
                horizon: &r.horizon,
                trace,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct Summary {
    witnessed: Vec<&'static str>,
    undetermined: Vec<&'static str>,
}

fn summarize(reports: &[CriterionReport]) -> Summary {
    let mut s = Summary {
        witnessed: Vec::new(),
        undetermined: Vec::new(),
    };
    for r in reports {
        let list = match r.verdict {
            Verdict::Witnessed => &mut s.witnessed,
            Verdict::Undetermined => &mut s.undetermined,
        };
        if !list.contains(&r.criterion.as_str()) {
            list.push(r.criterion.as_str());
        }
    }
    s.undetermined.retain(|c| !s.witnessed.contains(c));
    s
}

/// Criteria run by `analyze`, in output order.
pub fn analyze_reports(ctx: &Context, a: &AnalyzeArgs) -> Result<Vec<CriterionReport>> {
    let (ws, b, p) = (&ctx.ws, &ctx.budgets, ctx.p);
    let mut out = vec![
        salas_hypercyclic(ws, b.m_max, b.n_max, b.tol_log)?,
        salas_supercyclic(ws, b.m_max, b.n_max, b.tol_log)?,
    ];
    for a in 1..=4.min(b.m_max) {
        out.push(shkarin_a123(ws, a, b.j_max, b.m_max, b.tol_log)?);
    }
    out.push(quasinilpotent_b123(ws, b.n_max, b.tol_log)?);
    out.push(fixed_j_c123(ws, a.c123_j, a.c123_a, b.m_max, b.tol_log)?);
    for m in 0..=4.min(b.m_max) {
        out.push(direct_sum_lq(ws, p, p, m, b.n_max, b.tol_log)?);
    }
    if let Some(rho) = &a.rho {
        out.push(aag_cyclic(ws, p, a.k, Some(rho), b.n_max, aag_default_tol())?);
    }
    out.push(sc_witness(ws, a.radius, b.n_max, b.tol_log)?);
    Ok(out)
}

#[derive(Serialize)]
struct AnalyzeJson<'a> {
    family: &'a str,
    spec: WeightSpec,
    p: LpExponent,
    space: String,
    reports: &'a [CriterionReport],
    summary: Summary,
    traces: Vec<TraceEntry<'a>>,
}

pub fn cmd_analyze(ctx: &Context, a: &AnalyzeArgs) -> Result<String> {
    let reports = analyze_reports(ctx, a)?;
    match ctx.format {
        Format::Json => to_json(&AnalyzeJson {
            family: &ctx.label,
            spec: ctx.ws.spec(),
            p: ctx.p,
            space: ctx.p.space(),
            reports: &reports,
            summary: summarize(&reports),
            traces: traces(&reports),
        }),
        Format::Csv => {
            let mut w = csv_writer();
            w.write_record(CSV_HEADER).map_err(csv_err)?;
            for r in &reports {
                w.write_record(report_row(&ctx.label, ctx.p, r)).map_err(csv_err)?;
            }
            let s = summarize(&reports);
            w.write_record([
                ctx.label.clone(),
                ctx.p.to_string(),
                "summary".to_string(),
                format!("witnessed={}", s.witnessed.len()),
                String::new(),
                s.witnessed.join(";"),
                format!("undetermined={}", s.undetermined.join(";")),
            ])
            .map_err(csv_err)?;
            csv_finish(w)
        }
    }
}

#[derive(Serialize)]
struct ClassifyJson<'a> {
    family: &'a str,
    spec: WeightSpec,
    p: LpExponent,
    space: String,
    conditions: &'a [ConditionStatus],
    justifications_valid: bool,
    reports: &'a [CriterionReport],
    traces: Vec<TraceEntry<'a>>,
}

fn justification_text(j: &Justification) -> String {
    match j {
        Justification::Evidence { criterion, witness } => format!("evidence:{criterion}[{witness}]"),
        Justification::Forward { edge } => format!("forward:{}->{}", edge.from.as_str(), edge.to.as_str()),
        Justification::Contrapositive { edge } => {
            format!("contrapositive:{}->{}", edge.from.as_str(), edge.to.as_str())
        }
    }
}

pub fn render_classification(label: &str, ws: &WeightSequence, report: &ClassificationReport, format: Format) -> Result<String> {
    match format {
        Format::Json => to_json(&ClassifyJson {
            family: label,
            spec: ws.spec(),
            p: report.p,
            space: report.p.space(),
            conditions: &report.statuses,
            justifications_valid: check_justifications(report),
            reports: &report.reports,
            traces: traces(&report.reports),
        }),
        Format::Csv => {
            let mut w = csv_writer();
            w.write_record(CSV_HEADER).map_err(csv_err)?;
            for r in &report.reports {
                w.write_record(report_row(label, report.p, r)).map_err(csv_err)?;
            }
            for st in &report.statuses {
                let why: Vec<String> = st.justification.iter().map(justification_text).collect();
                let status = serde_json::to_value(st.status)?;
                w.write_record([
                    label.to_string(),
                    report.p.to_string(),
                    format!("condition:{}", st.condition.as_str()),
                    status.as_str().unwrap_or_default().to_string(),
                    String::new(),
                    why.join(" "),
                    String::new(),
                ])
                .map_err(csv_err)?;
            }
            csv_finish(w)
        }
    }
}

pub fn cmd_classify(ctx: &Context) -> Result<String> {
    let report = classify(&ctx.ws, ctx.p, &ctx.budgets)?;
    render_classification(&ctx.label, &ctx.ws, &report, ctx.format)
}

#[derive(Serialize)]
struct ApproximateJson<'a> {
    family: &'a str,
    #[serde(flatten)]
    outcome: &'a TransitionOutcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    direct_sum: Option<DirectSumCheck>,
}

pub fn cmd_approximate(ctx: &Context, a: &ApproximateArgs) -> Result<String> {
    let b = &ctx.budgets;
    let outcome = approximate_transition(&ctx.ws, a.k, a.n, a.eps, b.j_max, b.m_max)?;
    let direct_sum = match (&outcome, a.direct_sum_j) {
        (TransitionOutcome::Found(r), Some(j)) => Some(direct_sum_cyclic_vector(&ctx.ws, &r.u, j, ctx.seed)?),
        _ => None,
    };
    match ctx.format {
        Format::Json => to_json(&ApproximateJson {
            family: &ctx.label,
            outcome: &outcome,
            direct_sum,
        }),
        Format::Csv => {
            let mut w = csv_writer();
            w.write_record(CSV_HEADER).map_err(csv_err)?;
            let horizon = format!("k={};n={};j_max={};m_max={}", a.k, a.n, b.j_max, b.m_max);
            let row = match &outcome {
                TransitionOutcome::Found(r) => [
                    "found".to_string(),
                    format_real(r.residual_direct_log.0),
                    match (r.j, r.m) {
                        (Some(j), Some(m)) => format!("j={j};m={m}"),
                        _ => format!("monomial={}", a.k - a.n),
                    },
                ],
                TransitionOutcome::NotFound { j, m, best_bound_log, .. } => [
                    "not_found".to_string(),
                    format_real(best_bound_log.0),
                    format!("j={j};m={m}"),
                ],
            };
            let [verdict, value, witness] = row;
            w.write_record([
                ctx.label.clone(),
                ctx.p.to_string(),
                "approximate_transition".to_string(),
                verdict,
                value,
                witness,
                horizon,
            ])
            .map_err(csv_err)?;
            csv_finish(w)
        }
    }
}

#[derive(Serialize)]
struct FamilyJson {
    name: &'static str,
    label: String,
    description: &'static str,
    spec: WeightSpec,
}

pub fn render_families(format: Format) -> Result<String> {
    let list: Vec<FamilyJson> = builtin_families()
        .into_iter()
        .map(|b| FamilyJson {
            name: b.name,
            label: b.family.to_string(),
            description: b.description,
            spec: WeightSpec::from(&b.family),
        })
        .collect();
    match format {
        Format::Json => to_json(&list),
        Format::Csv => {
            let mut w = csv_writer();
            w.write_record(["name", "label", "description"]).map_err(csv_err)?;
            for f in &list {
                w.write_record([f.name, &f.label, f.description]).map_err(csv_err)?;
            }
            csv_finish(w)
        }
    }
}

/// Used by tests comparing the two renderings.
pub fn real_json(x: f64) -> String {
    serde_json::to_string(&Real(x)).expect("serializable")
}
