//! `sda` command line: `test`, `simulate` and `screen`.
//!
//! Tables are written as CSV, metadata as JSON. Every JSON file echoes the
//! validated [`RunConfig`]; wall-clock data and the worker count live in a
//! separate `runtime` field so that the remaining content is reproducible
//! byte for byte.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::dataset::{load_csv, Dataset, OutcomeKind, OutcomeSpec};
use crate::error::SdaError;
use crate::inference::{SdaTester, StatisticKind, TestConfig, VariableTest};
use crate::lasso::DEFAULT_FOLDS;
use crate::screening::{auto_gamma, bh_adjust, CorrelationMethod, FdrReport, Screener};
use crate::simgen::{bundled_scenario, run_scenario, ScenarioConfig, BUNDLED_SCENARIOS};

const EXIT_OK: i32 = 0;
const EXIT_IO: i32 = 1;
const EXIT_CONFIG: i32 = 2;
const EXIT_DATA: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sda", version, about = "Model-free variable selection by sufficient dimension association")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Test every (screened) predictor for association with the outcome.
    Test(TestArgs),
    /// Run a Monte-Carlo size/power scenario.
    Simulate(SimulateArgs),
    /// Correlation screening only.
    Screen(ScreenArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    /// Outcome column; `time,event` for survival outcomes.
    #[arg(long)]
    outcome: String,
    #[arg(long, value_enum, default_value_t = KindArg::Continuous)]
    outcome_kind: KindArg,
    #[arg(long, default_value = ",")]
    delimiter: String,
}

#[derive(Debug, Args)]
struct CommonArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "SDA_WORKERS", default_value_t = 1)]
    workers: usize,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ScreenOpts {
    /// Keep the top K predictors by correlation with the outcome.
    #[arg(long)]
    screen_keep: Option<usize>,
    /// Conditioning-set fraction in (0, 1), or `auto` for (n-2)/(n-1).
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long, value_enum, default_value_t = MethodArg::Pearson)]
    screen_method: MethodArg,
}

#[derive(Debug, Args)]
struct TestArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    screen: ScreenOpts,
    #[arg(long, value_enum, default_value_t = StatArg::Cvm)]
    stat: StatArg,
    /// Number of slices (default ceil(n^(1/3))).
    #[arg(long)]
    h: Option<usize>,
    /// Bootstrap draws (default 1000, or 10000 with --fdr-q).
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long)]
    fdr_q: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    folds: usize,
    /// Scale predictors to unit variance after centering.
    #[arg(long)]
    scale: bool,
    #[arg(long)]
    dump_fits: bool,
    #[arg(long)]
    dump_slices: bool,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Bundled scenario name or path to a scenario JSON file.
    #[arg(long)]
    scenario: String,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "SDA_WORKERS", default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ScreenArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    screen: ScreenOpts,
    #[arg(long, env = "SDA_WORKERS", default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum KindArg {
    Continuous,
    Categorical,
    Survival,
}

impl From<KindArg> for OutcomeKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Continuous => OutcomeKind::Continuous,
            KindArg::Categorical => OutcomeKind::Categorical,
            KindArg::Survival => OutcomeKind::Survival,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum StatArg {
    Ks,
    Cvm,
    Both,
}

impl StatArg {
    fn kinds(self) -> Vec<StatisticKind> {
        match self {
            StatArg::Ks => vec![StatisticKind::Ks],
            StatArg::Cvm => vec![StatisticKind::Cvm],
            StatArg::Both => vec![StatisticKind::Ks, StatisticKind::Cvm],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum MethodArg {
    Pearson,
    Spearman,
}

impl From<MethodArg> for CorrelationMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Pearson => CorrelationMethod::Pearson,
            MethodArg::Spearman => CorrelationMethod::Spearman,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
enum GammaSetting {
    Fixed(f64),
    #[serde(serialize_with = "auto_str")]
    Auto,
}

fn auto_str<S: serde::Serializer>(s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str("auto")
}

impl GammaSetting {
    fn parse(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(GammaSetting::Auto);
        }
        let g: f64 = s.parse().map_err(|_| format!("--gamma: expected a number or 'auto', got '{s}'"))?;
        if !(g > 0.0 && g < 1.0) {
            return Err(format!("--gamma must lie in (0, 1), got {g}"));
        }
        Ok(GammaSetting::Fixed(g))
    }

    fn value(self, n: usize) -> f64 {
        match self {
            GammaSetting::Fixed(g) => g,
            GammaSetting::Auto => auto_gamma(n),
        }
    }
}

/// Validated settings of one invocation. Worker count is not part of it:
/// it never changes any output.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    outcome: Option<OutcomeSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stat: Option<StatArg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    h: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    l_draws: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fdr_q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    folds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    screen_keep: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<GammaSetting>,
    #[serde(skip_serializing_if = "Option::is_none")]
    screen_method: Option<MethodArg>,
    scale: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scenario: Option<ScenarioConfig>,
    output: PathBuf,
}

impl RunConfig {
    fn empty(command: &'static str, output: PathBuf) -> Self {
        RunConfig {
            command,
            input: None,
            outcome: None,
            stat: None,
            h: None,
            l_draws: None,
            alpha: None,
            fdr_q: None,
            folds: None,
            screen_keep: None,
            gamma: None,
            screen_method: None,
            scale: false,
            seed: None,
            scenario: None,
            output,
        }
    }
}

/// Failure classes, mapped onto exit codes.
#[derive(Debug)]
enum CliError {
    Config(String),
    Data(String),
    Output(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Data(_) => EXIT_DATA,
            CliError::Output(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Data(m) | CliError::Output(m) => m,
        }
    }
}

impl From<SdaError> for CliError {
    fn from(e: SdaError) -> Self {
        if e.is_data_error() {
            CliError::Data(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Screen(a) => cmd_screen(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn parse_delimiter(s: &str) -> CliResult<u8> {
    match s {
        "\\t" | "tab" => Ok(b'\t'),
        _ if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        _ => Err(CliError::Config(format!("--delimiter must be a single ASCII character, got '{s}'"))),
    }
}

fn check_workers(w: usize) -> CliResult<()> {
    if w == 0 {
        return Err(CliError::Config("--workers must be at least 1".into()));
    }
    Ok(())
}

fn worker_pool(workers: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Output(format!("cannot start worker pool: {e}")))
}

fn prepare_out(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("cannot create {}: {e}", dir.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::Output(format!("cannot write {}: {e}", path.display())))
}

fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Output(e.to_string()))?;
    s.push('\n');
    write_file(path, s.as_bytes())
}

fn runtime(start: Instant, workers: usize) -> serde_json::Value {
    let unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    json!({
        "finished_unix": unix,
        "elapsed_seconds": start.elapsed().as_secs_f64(),
        "workers": workers,
    })
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Output(e.to_string());
    w.write_record(header).map_err(fail)?;
    for r in rows {
        w.write_record(r).map_err(fail)?;
    }
    w.into_inner().map_err(|e| CliError::Output(e.to_string()))
}

fn load_input(a: &InputArgs) -> CliResult<(OutcomeSpec, Dataset)> {
    let delim = parse_delimiter(&a.delimiter)?;
    let spec = OutcomeSpec::parse(&a.outcome, a.outcome_kind.into()).map_err(|e| CliError::Config(e.to_string()))?;
    let data = load_csv(&a.input, &spec, delim)?;
    Ok((spec, data))
}

fn validate_screen(s: &ScreenOpts) -> CliResult<Option<GammaSetting>> {
    if s.screen_keep == Some(0) {
        return Err(CliError::Config("--screen-keep must be at least 1".into()));
    }
    s.gamma.as_deref().map(GammaSetting::parse).transpose().map_err(CliError::Config)
}

fn fmt_f(v: f64) -> String {
    format!("{v}")
}

/// Candidate columns after optional outcome screening, in increasing order.
fn candidates(screener: &Screener, p: usize, keep: Option<usize>) -> CliResult<Vec<usize>> {
    match keep {
        None => Ok((0..p).collect()),
        Some(k) if k > p => Err(CliError::Config(format!("--screen-keep {k} exceeds the {p} predictors"))),
        Some(k) => {
            let mut c = screener.outcome_screen(k)?;
            c.sort_unstable();
            Ok(c)
        }
    }
}

struct VariableRun {
    index: usize,
    conditioning: usize,
    result: std::result::Result<VariableTest, String>,
}

fn cmd_test(a: TestArgs) -> CliResult<()> {
    let start = Instant::now();
    check_workers(a.common.workers)?;
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(CliError::Config(format!("--alpha must lie in (0, 1), got {}", a.alpha)));
    }
    if let Some(q) = a.fdr_q {
        if !(q > 0.0 && q < 1.0) {
            return Err(CliError::Config(format!("--fdr-q must lie in (0, 1), got {q}")));
        }
    }
    if a.h == Some(0) {
        return Err(CliError::Config("--h must be at least 1".into()));
    }
    if a.draws == Some(0) {
        return Err(CliError::Config("--draws must be at least 1".into()));
    }
    if a.folds < 2 {
        return Err(CliError::Config("--folds must be at least 2".into()));
    }
    let gamma = validate_screen(&a.screen)?;
    let l_draws = a.draws.unwrap_or(if a.fdr_q.is_some() { 10_000 } else { 1000 });

    let (spec, raw) = load_input(&a.input)?;
    let mut data = raw.center_columns()?;
    if a.scale {
        data = data.scale_columns()?;
    }
    let (n, p) = (data.n(), data.p());

    let cfg = RunConfig {
        input: Some(a.input.input.clone()),
        outcome: Some(spec),
        stat: Some(a.stat),
        h: a.h,
        l_draws: Some(l_draws),
        alpha: Some(a.alpha),
        fdr_q: a.fdr_q,
        folds: Some(a.folds),
        screen_keep: a.screen.screen_keep,
        gamma,
        screen_method: Some(a.screen.screen_method),
        scale: a.scale,
        seed: Some(a.common.seed),
        ..RunConfig::empty("test", a.common.out.clone())
    };

    let test_cfg = TestConfig {
        h: a.h,
        l_draws,
        alpha: a.alpha,
        folds: a.folds,
        seed: a.common.seed,
    };
    let tester = SdaTester::new(&data, test_cfg)?;
    let screener = Screener::new(&data, a.screen.screen_method.into());
    let cands = candidates(&screener, p, a.screen.screen_keep)?;
    let gamma_value = gamma.map(|g| g.value(n));
    if let Some(g) = gamma_value {
        if n < 3 {
            return Err(CliError::Data("conditioning-set screening needs at least 3 observations".into()));
        }
        eprintln!("screening: gamma = {g}");
    }

    let pool = worker_pool(a.common.workers)?;
    let runs: Vec<VariableRun> = pool.install(|| {
        cands
            .par_iter()
            .map(|&i| {
                let screen = match gamma_value {
                    Some(g) => match screener.sis_screen(i, g) {
                        Ok(s) => Some(s.kept),
                        Err(e) => {
                            return VariableRun {
                                index: i,
                                conditioning: 0,
                                result: Err(e.to_string()),
                            }
                        }
                    },
                    None => None,
                };
                let conditioning = screen.as_ref().map_or(p - 1, |s| s.len());
                VariableRun {
                    index: i,
                    conditioning,
                    result: tester.test(i, screen.as_deref()).map_err(|e| e.to_string()),
                }
            })
            .collect()
    });

    let names = data.names();
    for r in &runs {
        match &r.result {
            Ok(_) if gamma_value.is_some() => {
                eprintln!("variable {} ({}): conditioning set size {}", r.index, names[r.index], r.conditioning)
            }
            Ok(_) => {}
            Err(e) => eprintln!("warning: variable {} ({}) failed: {e}", r.index, names[r.index]),
        }
    }

    let kinds = a.stat.kinds();
    // BH over the variables that produced a p-value, one pass per statistic
    let mut fdr: Vec<(StatisticKind, Vec<usize>, FdrReport)> = Vec::new();
    if let Some(q) = a.fdr_q {
        for &kind in &kinds {
            let ok: Vec<&VariableRun> = runs.iter().filter(|r| r.result.is_ok()).collect();
            if ok.is_empty() {
                continue;
            }
            let labels: Vec<usize> = ok.iter().map(|r| r.index).collect();
            let ps: Vec<f64> = ok
                .iter()
                .map(|r| r.result.as_ref().map(|t| t.outcome(kind).p_value).unwrap_or(1.0))
                .collect();
            let rep = bh_adjust(&ps, q)?;
            fdr.push((kind, labels, rep));
        }
    }
    let bh_lookup = |kind: StatisticKind, idx: usize| -> Option<(f64, bool)> {
        let (_, labels, rep) = fdr.iter().find(|(k, _, _)| *k == kind)?;
        let pos = labels.iter().position(|&l| l == idx)?;
        Some((rep.adjusted[pos], rep.is_rejected(pos)))
    };

    let mut header = vec![
        "index",
        "name",
        "conditioning_size",
        "lambda",
        "active_size",
        "statistic_kind",
        "statistic",
        "p_value",
        "critical_value",
        "rejected",
    ];
    if a.fdr_q.is_some() {
        header.extend(["bh_adjusted_p", "bh_rejected"]);
    }
    header.push("error");
    let na = || "NA".to_string();
    let mut rows = Vec::new();
    for r in &runs {
        for &kind in &kinds {
            let mut row = vec![r.index.to_string(), names[r.index].clone(), r.conditioning.to_string()];
            match &r.result {
                Ok(t) => {
                    let o = t.outcome(kind);
                    let fit = t.fit.as_ref();
                    row.extend([
                        fit.map_or_else(na, |f| fmt_f(f.lambda)),
                        fit.map_or_else(na, |f| f.active_set.len().to_string()),
                        kind.to_string(),
                        fmt_f(o.statistic),
                        fmt_f(o.p_value),
                        fmt_f(o.critical_value),
                        o.rejected.to_string(),
                    ]);
                    if a.fdr_q.is_some() {
                        let (adj, rej) = bh_lookup(kind, r.index).expect("tested variable has a BH entry");
                        row.extend([fmt_f(adj), rej.to_string()]);
                    }
                    row.push(String::new());
                }
                Err(e) => {
                    row.extend([na(), na(), kind.to_string(), na(), na(), na(), na()]);
                    if a.fdr_q.is_some() {
                        row.extend([na(), na()]);
                    }
                    row.push(e.clone());
                }
            }
            rows.push(row);
        }
    }

    let out = &a.common.out;
    prepare_out(out)?;
    write_file(&out.join("results.csv"), &csv_bytes(&header, &rows)?)?;
    for (kind, labels, rep) in &fdr {
        let mut buf = Vec::new();
        rep.write_csv(&mut buf, Some(labels))?;
        let name = format!("fdr_{}.csv", kind.to_string().to_ascii_lowercase());
        write_file(&out.join(name), &buf)?;
    }

    let plan = tester.plan();
    let failures = runs.iter().filter(|r| r.result.is_err()).count();
    let mut summary = json!({
        "config": cfg,
        "n": n,
        "p": p,
        "h_count": plan.h_count,
        "slice_counts": plan.counts,
        "slice_warnings": plan.warnings,
        "constant_columns": data.constant_columns(),
        "tested": cands.len(),
        "failures": failures,
        "results": runs.iter().filter_map(|r| r.result.as_ref().ok()).map(|t| {
            json!({
                "index": t.target_index,
                "tests": kinds.iter().map(|&k| t.outcome(k)).collect::<Vec<_>>(),
                "sda": t.sda.to_json(),
            })
        }).collect::<Vec<_>>(),
    });
    if let Some(q) = a.fdr_q {
        summary["fdr"] = json!(fdr
            .iter()
            .map(|(kind, labels, rep)| json!({
                "statistic_kind": kind,
                "q": q,
                "threshold_rank": rep.threshold_rank,
                "discoveries": rep.rejected.iter().map(|&k| labels[k]).collect::<Vec<_>>(),
            }))
            .collect::<Vec<_>>());
    }
    if a.dump_fits {
        let fits: Vec<_> = runs
            .iter()
            .filter_map(|r| r.result.as_ref().ok()?.fit.as_ref().map(|f| f.summary()))
            .collect();
        write_json(&out.join("fits.json"), &json!({ "config": cfg, "fits": fits }))?;
    }
    if a.dump_slices {
        write_json(&out.join("slices.json"), &json!({ "config": cfg, "plan": plan }))?;
    }
    summary["runtime"] = runtime(start, a.common.workers);
    write_json(&out.join("summary.json"), &summary)?;

    let rejected = |k| runs.iter().filter(|r| matches!(&r.result, Ok(t) if t.outcome(k).rejected)).count();
    for &k in &kinds {
        eprintln!("{k}: {} of {} tested variables rejected at alpha = {}", rejected(k), cands.len(), a.alpha);
    }
    Ok(())
}

fn load_scenario(name: &str) -> CliResult<ScenarioConfig> {
    if let Some(cfg) = bundled_scenario(name) {
        return Ok(cfg);
    }
    let path = Path::new(name);
    if !path.exists() {
        return Err(CliError::Config(format!(
            "unknown scenario '{name}' (bundled: {})",
            BUNDLED_SCENARIOS.join(", ")
        )));
    }
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {name}: {e}")))?;
    ScenarioConfig::from_json(&text).map_err(|e| CliError::Config(format!("bad scenario {name}: {e}")))
}

fn cmd_simulate(a: SimulateArgs) -> CliResult<()> {
    let start = Instant::now();
    check_workers(a.workers)?;
    let mut scenario = load_scenario(&a.scenario)?;
    if let Some(r) = a.replicates {
        scenario.replicates = r;
    }
    if let Some(s) = a.seed {
        scenario.seed = s;
    }
    scenario.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let cfg = RunConfig {
        seed: Some(scenario.seed),
        scenario: Some(scenario.clone()),
        ..RunConfig::empty("simulate", a.out.clone())
    };

    let report = run_scenario(&scenario, a.workers)?;
    prepare_out(&a.out)?;
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    write_file(&a.out.join("power.csv"), &buf)?;
    write_json(
        &a.out.join("power.json"),
        &json!({
            "config": cfg,
            "report": report,
            "runtime": runtime(start, a.workers),
        }),
    )?;
    for g in &report.groups {
        if let (Some(ks), Some(cvm)) = (g.ks_rate, g.cvm_rate) {
            eprintln!("beta = {:>4}: KS {ks:.3}  CvM {cvm:.3}  ({} trials)", g.beta, g.trials);
        }
    }
    Ok(())
}

fn cmd_screen(a: ScreenArgs) -> CliResult<()> {
    let start = Instant::now();
    check_workers(a.workers)?;
    let gamma = validate_screen(&a.screen)?;
    if a.screen.screen_keep.is_none() && gamma.is_none() {
        return Err(CliError::Config("screen needs --screen-keep and/or --gamma".into()));
    }
    let (spec, raw) = load_input(&a.input)?;
    let data = raw.center_columns()?;
    let (n, p) = (data.n(), data.p());
    let cfg = RunConfig {
        input: Some(a.input.input.clone()),
        outcome: Some(spec),
        screen_keep: a.screen.screen_keep,
        gamma,
        screen_method: Some(a.screen.screen_method),
        ..RunConfig::empty("screen", a.out.clone())
    };
    let screener = Screener::new(&data, a.screen.screen_method.into());
    let names = data.names();
    prepare_out(&a.out)?;
    let mut meta = json!({ "config": cfg, "n": n, "p": p });

    let mut targets: Vec<usize> = (0..p).collect();
    if let Some(k) = a.screen.screen_keep {
        if k > p {
            return Err(CliError::Config(format!("--screen-keep {k} exceeds the {p} predictors")));
        }
        let ranked = screener.outcome_ranking(k)?;
        let rows: Vec<Vec<String>> = ranked
            .iter()
            .enumerate()
            .map(|(r, &(j, c))| vec![(r + 1).to_string(), j.to_string(), names[j].clone(), fmt_f(c)])
            .collect();
        write_file(
            &a.out.join("outcome_screen.csv"),
            &csv_bytes(&["rank", "index", "name", "abs_correlation"], &rows)?,
        )?;
        meta["outcome_screen_kept"] = json!(ranked.len());
        targets = ranked.iter().map(|&(j, _)| j).collect();
        targets.sort_unstable();
    }

    if let Some(g) = gamma {
        let gv = g.value(n);
        let pool = worker_pool(a.workers)?;
        let sets = pool.install(|| {
            targets
                .par_iter()
                .map(|&i| screener.sis_screen(i, gv))
                .collect::<crate::error::Result<Vec<_>>>()
        })?;
        let mut rows = Vec::new();
        for s in &sets {
            for (r, (&j, &c)) in s.kept.iter().zip(&s.correlations).enumerate() {
                rows.push(vec![s.target_index.to_string(), (r + 1).to_string(), j.to_string(), fmt_f(c)]);
            }
        }
        write_file(
            &a.out.join("sis_screen.csv"),
            &csv_bytes(&["target", "rank", "index", "abs_correlation"], &rows)?,
        )?;
        meta["gamma_value"] = json!(gv);
        meta["conditioning_set_size"] = json!(sets.first().map_or(0, |s| s.kept.len()));
        eprintln!("gamma = {gv}: {} columns kept per target", sets.first().map_or(0, |s| s.kept.len()));
    }
    meta["runtime"] = runtime(start, a.workers);
    write_json(&a.out.join("screen.json"), &meta)?;
    Ok(())
}
