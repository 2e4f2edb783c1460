//! Command-line runner: config-driven, seeded commands that write atomic
//! artifacts plus a run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use evcast_core::clustering::{summarize_owners, ClusterModel};
use evcast_core::features::FeatureRow;
use evcast_core::impact::{self, DeterministicRateProvider, ForecastTableProvider, NetworkConfig, PolicyKind, SweepGrid};
use evcast_core::ingest::{clean_trial_data, parse_transactions, write_transactions, ColumnMap};
use evcast_core::io::{fmt_f64, write_atomic};
use evcast_core::pipeline::{
    deployment_decisions, evaluate, forecast_scenario, Ctx, Family, FeatureSet, PMode, TuningBudget,
};
use evcast_core::preprocess::{impute_missing_days, treat_outliers};
use evcast_core::series::{build_daily_series, DailyClusterSeries};
use evcast_core::synth::{generate_trial, peak_plug_share, SynthConfig};
use evcast_core::{seed, Error as CoreError};

pub const MANIFEST: &str = "run_manifest.json";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Numeric(_) => CliError::Numeric(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn data(msg: impl Into<String>) -> CliError {
    CliError::Data(msg.into())
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "evcast", version, about = "EV charging forecasting and feeder impact toolkit")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed; required by stochastic commands unless set in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic charging trial.
    Synth(SynthArgs),
    /// Validate and clean a transactions CSV.
    Ingest(InputArgs),
    /// Cluster owners by battery size and energy per charge.
    Cluster(ClusterArgs),
    /// Build preprocessed day-wise series per cluster.
    Series(SeriesArgs),
    /// Variable-origin evaluation of every family and feature set.
    Evaluate(EvaluateArgs),
    /// Forecast users and consumption for an owners scenario.
    Forecast(ForecastArgs),
    /// Peak-hour feeder impact sweep.
    Impact(ImpactArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub days: Option<usize>,
    /// Final owners per cluster, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub owners: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Fixed cluster count instead of the elbow rule.
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SeriesArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Cluster model JSON written by `cluster`.
    #[arg(long)]
    pub clusters: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Directory holding series_c<k>.csv files.
    #[arg(long)]
    pub series: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub families: Option<Vec<String>>,
    /// `full` or `quick`.
    #[arg(long)]
    pub budget: Option<String>,
    /// `nested` or `oracle`.
    #[arg(long)]
    pub mode: Option<String>,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[arg(long)]
    pub series: Option<PathBuf>,
    /// CSV with columns date,owners and an optional cluster column.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub feature_set: Option<String>,
    #[arg(long)]
    pub budget: Option<String>,
}

#[derive(Debug, Args)]
pub struct ImpactArgs {
    /// `deterministic` or `forecast`.
    #[arg(long)]
    pub provider: Option<String>,
    /// Forecast CSV written by `forecast`, for the forecast provider.
    #[arg(long)]
    pub forecast: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub synth: SynthConfig,
    pub ingest: IngestSection,
    pub cluster: ClusterSection,
    pub series: SeriesSection,
    pub evaluate: EvaluateSection,
    pub forecast: ForecastSection,
    pub impact: ImpactSection,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSection {
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterSection {
    pub input: Option<PathBuf>,
    pub k: Option<usize>,
    pub k_max: usize,
}

impl Default for ClusterSection {
    fn default() -> Self {
        ClusterSection {
            input: None,
            k: None,
            k_max: 10,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeriesSection {
    pub input: Option<PathBuf>,
    pub clusters: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    pub series: Option<PathBuf>,
    pub families: Vec<String>,
    pub budget: String,
    pub mode: String,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        EvaluateSection {
            series: None,
            families: Family::ALL.iter().map(|f| f.name().to_string()).collect(),
            budget: "full".into(),
            mode: "nested".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecastSection {
    pub series: Option<PathBuf>,
    pub scenario: Option<PathBuf>,
    pub family: String,
    pub feature_set: String,
    pub budget: String,
}

impl Default for ForecastSection {
    fn default() -> Self {
        ForecastSection {
            series: None,
            scenario: None,
            family: "gbt".into(),
            feature_set: "+p_users".into(),
            budget: "full".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImpactSection {
    pub provider: String,
    pub forecast: Option<PathBuf>,
    pub rates: DeterministicRateProvider,
    pub network: NetworkConfig,
    pub grid: SweepGrid,
}

impl Default for ImpactSection {
    fn default() -> Self {
        ImpactSection {
            provider: "deterministic".into(),
            forecast: None,
            rates: DeterministicRateProvider::default(),
            network: NetworkConfig::default(),
            grid: SweepGrid::default(),
        }
    }
}

#[derive(Debug, Serialize)]
struct InputRecord {
    path: String,
    bytes: u64,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    seed: Option<u64>,
    inputs: Vec<InputRecord>,
    outputs: Vec<String>,
    settings: serde_json::Value,
    versions: BTreeMap<&'static str, &'static str>,
    threads: usize,
    wall_time_s: f64,
}

/// Collects artifacts and input fingerprints for one command.
struct Run {
    out: PathBuf,
    inputs: Vec<InputRecord>,
    outputs: Vec<String>,
}

impl Run {
    fn read(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = fs::read(path).map_err(|e| data(format!("cannot read {}: {e}", path.display())))?;
        let digest = Sha256::digest(&bytes);
        self.inputs.push(InputRecord {
            path: path.display().to_string(),
            bytes: bytes.len() as u64,
            sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
        });
        Ok(bytes)
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.out.join(name), bytes)?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value).map_err(CoreError::from)?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }
}

/// Parses arguments and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("evcast: {e}");
            e.exit_code()
        }
    }
}

/// Paths in a config file are relative to the file's directory.
fn rebase(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

pub fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| usage(format!("bad config {}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    rebase(&base, &mut cfg.out);
    rebase(&base, &mut cfg.ingest.input);
    rebase(&base, &mut cfg.cluster.input);
    rebase(&base, &mut cfg.series.input);
    rebase(&base, &mut cfg.series.clusters);
    rebase(&base, &mut cfg.evaluate.series);
    rebase(&base, &mut cfg.forecast.series);
    rebase(&base, &mut cfg.forecast.scenario);
    rebase(&base, &mut cfg.impact.forecast);
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli.config.as_deref())?;
    let threads = cli.threads.or(cfg.threads).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| usage(format!("cannot start {threads} threads: {e}")))?;
    let out = cli.out.clone().or(cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let seed = cli.seed.or(cfg.seed);
    let mut run = Run {
        out,
        inputs: Vec::new(),
        outputs: Vec::new(),
    };
    let started = Instant::now();
    let (name, settings) = pool.install(|| execute(&cli.command, &cfg, seed, &mut run))?;
    let manifest = Manifest {
        command: name,
        seed,
        inputs: std::mem::take(&mut run.inputs),
        outputs: std::mem::take(&mut run.outputs),
        settings,
        versions: BTreeMap::from([
            ("evcast", env!("CARGO_PKG_VERSION")),
            ("manifest_format", "1"),
        ]),
        threads: pool.current_num_threads(),
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    run.write_json(MANIFEST, &manifest)
}

fn need_seed(seed: Option<u64>, command: &str) -> Result<u64> {
    seed.ok_or_else(|| usage(format!("`{command}` is stochastic and needs --seed or a `seed` config entry")))
}

fn need_path(p: Option<PathBuf>, what: &str) -> Result<PathBuf> {
    p.ok_or_else(|| usage(format!("missing {what}")))
}

fn settings<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

fn budget_of(name: &str) -> Result<TuningBudget> {
    match name {
        "full" => Ok(TuningBudget::default()),
        "quick" => Ok(TuningBudget::quick()),
        other => Err(usage(format!("unknown budget `{other}` (full or quick)"))),
    }
}

fn family_of(name: &str) -> Result<Family> {
    Family::parse(name).ok_or_else(|| usage(format!("unknown family `{name}`")))
}

fn execute(
    command: &Command,
    cfg: &RunConfig,
    seed: Option<u64>,
    run: &mut Run,
) -> Result<(&'static str, serde_json::Value)> {
    match command {
        Command::Synth(a) => {
            let mut sc = cfg.synth.clone();
            sc.seed = seed::derive(need_seed(seed, "synth")?, "synth");
            if let Some(d) = a.days {
                sc.horizon_days = d;
            }
            if let Some(o) = &a.owners {
                sc.owners_final = o.clone();
            }
            let txns = generate_trial(&sc).map_err(|e| match e {
                CoreError::InvalidInput(m) => usage(m),
                e => e.into(),
            })?;
            let mut buf = Vec::new();
            write_transactions(&mut buf, &txns)?;
            run.write("transactions.csv", &buf)?;
            eprintln!(
                "synth: {} sessions, peak plug-in share {:.3}",
                txns.len(),
                peak_plug_share(&txns)
            );
            Ok(("synth", settings(&sc)))
        }
        Command::Ingest(a) => {
            let input = need_path(a.input.clone().or(cfg.ingest.input.clone()), "--input transactions CSV")?;
            let bytes = run.read(&input)?;
            let (txns, report) = parse_transactions(bytes.as_slice(), &ColumnMap::default())?;
            let parsed = txns.len();
            let clean = clean_trial_data(txns);
            let mut buf = Vec::new();
            write_transactions(&mut buf, &clean)?;
            run.write("transactions_clean.csv", &buf)?;
            let mut rej = Vec::new();
            report.write_json_lines(&mut rej)?;
            run.write("rejects.jsonl", &rej)?;
            eprintln!(
                "ingest: {parsed} valid, {} rejected, {} kept after dropping trial 3",
                report.len(),
                clean.len()
            );
            Ok(("ingest", settings(&serde_json::json!({"valid": parsed, "rejected": report.len(), "kept": clean.len()}))))
        }
        Command::Cluster(a) => {
            let root = need_seed(seed, "cluster")?;
            let input = need_path(a.input.clone().or(cfg.cluster.input.clone()), "--input transactions CSV")?;
            let txns = read_transactions(run, &input)?;
            let owners = summarize_owners(&txns);
            let k = a.k.or(cfg.cluster.k);
            let model = ClusterModel::fit(&owners, k, cfg.cluster.k_max, seed::derive(root, "cluster"))?;
            run.write_json("clusters.json", &model)?;
            let mut csv = String::from(
                "cluster,owners,min_capacity_kwh,max_capacity_kwh,mean_kwh_per_charge,charges_per_day\n",
            );
            for s in model.summarize(&owners) {
                csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    s.cluster,
                    s.owners,
                    fmt_f64(s.min_capacity_kwh),
                    fmt_f64(s.max_capacity_kwh),
                    fmt_f64(s.mean_kwh_per_charge),
                    fmt_f64(s.charges_per_day)
                ));
            }
            run.write("cluster_summary.csv", csv.as_bytes())?;
            eprintln!("cluster: {} owners in {} clusters", owners.len(), model.k);
            Ok(("cluster", settings(&cfg.cluster)))
        }
        Command::Series(a) => {
            let input = need_path(a.input.clone().or(cfg.series.input.clone()), "--input transactions CSV")?;
            let clusters = need_path(a.clusters.clone().or(cfg.series.clusters.clone()), "--clusters model JSON")?;
            let txns = read_transactions(run, &input)?;
            let model: ClusterModel = serde_json::from_slice(&run.read(&clusters)?)
                .map_err(|e| data(format!("bad cluster model: {e}")))?;
            let mut reports = Vec::new();
            for s in build_daily_series(&txns, &model.assignments)? {
                let (imputed, ir) = impute_missing_days(&s)?;
                let (treated, or) = treat_outliers(&imputed)?;
                let mut buf = Vec::new();
                treated.write_csv(&mut buf)?;
                run.write(&format!("series_c{}.csv", s.cluster), &buf)?;
                reports.push(serde_json::json!({"cluster": s.cluster, "days": treated.len(), "imputation": ir, "outliers": or}));
            }
            run.write_json("preprocess_report.json", &reports)?;
            Ok(("series", serde_json::Value::Null))
        }
        Command::Evaluate(a) => {
            let root = need_seed(seed, "evaluate")?;
            let mut sec = cfg.evaluate.clone();
            if let Some(f) = &a.families {
                sec.families = f.clone();
            }
            if let Some(b) = &a.budget {
                sec.budget = b.clone();
            }
            if let Some(m) = &a.mode {
                sec.mode = m.clone();
            }
            let families = sec.families.iter().map(|f| family_of(f)).collect::<Result<Vec<_>>>()?;
            let budget = budget_of(&sec.budget)?;
            let mode = match sec.mode.as_str() {
                "nested" => PMode::Nested,
                "oracle" => PMode::Oracle,
                m => return Err(usage(format!("unknown mode `{m}` (nested or oracle)"))),
            };
            let dir = need_path(a.series.clone().or(sec.series.clone()), "--series directory")?;
            let series = read_series_dir(run, &dir)?;
            let report = evaluate(&series, &families, &budget, mode, seed::derive(root, "evaluate"))?;
            run.write("mape_matrix.csv", report.consumption_csv().as_bytes())?;
            run.write("p_feature_mape.csv", report.p_feature_csv().as_bytes())?;
            run.write_json("evaluation.json", &report)?;
            if !report.all_finite() {
                return Err(CliError::Numeric("evaluation produced non-finite MAPE".into()));
            }
            Ok(("evaluate", settings(&sec)))
        }
        Command::Forecast(a) => {
            let root = need_seed(seed, "forecast")?;
            let mut sec = cfg.forecast.clone();
            if let Some(f) = &a.family {
                sec.family = f.clone();
            }
            if let Some(f) = &a.feature_set {
                sec.feature_set = f.clone();
            }
            if let Some(b) = &a.budget {
                sec.budget = b.clone();
            }
            let family = family_of(&sec.family)?;
            let set = FeatureSet::parse(&sec.feature_set)
                .ok_or_else(|| usage(format!("unknown feature set `{}`", sec.feature_set)))?;
            let ctx = Ctx::new(family, budget_of(&sec.budget)?);
            let dir = need_path(a.series.clone().or(sec.series.clone()), "--series directory")?;
            let scen_path = need_path(a.scenario.clone().or(sec.scenario.clone()), "--scenario CSV")?;
            let series = read_series_dir(run, &dir)?;
            let scenario = read_scenario(&run.read(&scen_path)?)?;
            let root = seed::derive(root, "forecast");
            let mut csv = String::from("cluster,date,owners,users,consumed\n");
            let mut decisions = Vec::new();
            for s in &series {
                let rows: Vec<FeatureRow> = scenario
                    .iter()
                    .filter(|(c, _)| c.is_none_or(|c| c == s.cluster))
                    .map(|(_, r)| r.clone())
                    .collect();
                if rows.is_empty() {
                    continue;
                }
                let d = deployment_decisions(&ctx, s, root)?;
                let f = forecast_scenario(&ctx, s, &rows, set, d, root)?;
                for ((r, u), c) in f.frame.iter().zip(&f.users).zip(&f.consumed) {
                    csv.push_str(&format!(
                        "{},{},{},{},{}\n",
                        s.cluster,
                        r.date,
                        fmt_f64(r.owners),
                        fmt_f64(*u),
                        fmt_f64(*c)
                    ));
                }
                decisions.push(serde_json::json!({"cluster": s.cluster, "decisions": f.decisions}));
            }
            if decisions.is_empty() {
                return Err(data("scenario matches no cluster series"));
            }
            run.write("forecast.csv", csv.as_bytes())?;
            run.write_json("decisions.json", &decisions)?;
            Ok(("forecast", settings(&sec)))
        }
        Command::Impact(a) => {
            let mut sec = cfg.impact.clone();
            if let Some(p) = &a.provider {
                sec.provider = p.clone();
            }
            if a.forecast.is_some() {
                sec.forecast = a.forecast.clone();
            }
            sec.network.validate().map_err(|e| usage(e.to_string()))?;
            let table;
            let provider: &dyn impact::UserForecastProvider = match sec.provider.as_str() {
                "deterministic" => &sec.rates,
                "forecast" => {
                    let path = need_path(sec.forecast.clone(), "--forecast CSV for the forecast provider")?;
                    table = read_forecast_table(&run.read(&path)?, sec.network.n_clusters())?;
                    &table
                }
                p => return Err(usage(format!("unknown provider `{p}` (deterministic or forecast)"))),
            };
            let rows = impact::sweep(&sec.network, &sec.grid, provider)?;
            let k = sec.network.n_clusters();
            run.write("impact.csv", impact::results_csv(&rows, k).as_bytes())?;
            for kind in PolicyKind::ALL {
                let csv = impact::load_plot_csv(&rows, kind, sec.network.feeder_capacity_kva());
                run.write(&format!("plot_load_{}.csv", kind.name()), csv.as_bytes())?;
            }
            let dur = impact::duration_plot_csv(&rows, &sec.network, sec.network.peak_window_h);
            run.write("plot_duration.csv", dur.as_bytes())?;
            let mc = impact::min_control_csv(&sec.network, &sec.grid, provider)?;
            run.write("min_control.csv", mc.as_bytes())?;
            Ok(("impact", settings(&sec)))
        }
    }
}

fn read_transactions(run: &mut Run, path: &Path) -> Result<Vec<evcast_core::ingest::ChargingTransaction>> {
    let bytes = run.read(path)?;
    let (txns, report) = parse_transactions(bytes.as_slice(), &ColumnMap::default())?;
    if !report.is_empty() {
        return Err(data(format!(
            "{} has {} invalid rows; run `ingest` first",
            path.display(),
            report.len()
        )));
    }
    Ok(txns)
}

/// Reads every `series_c<k>.csv` in a directory, ordered by cluster id.
fn read_series_dir(run: &mut Run, dir: &Path) -> Result<Vec<DailyClusterSeries>> {
    let entries = fs::read_dir(dir).map_err(|e| data(format!("cannot list {}: {e}", dir.display())))?;
    let mut found: Vec<(u32, PathBuf)> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().to_string_lossy().into_owned();
            let id = name.strip_prefix("series_c")?.strip_suffix(".csv")?.parse().ok()?;
            Some((id, e.path()))
        })
        .collect();
    found.sort();
    if found.is_empty() {
        return Err(data(format!("no series_c<k>.csv files in {}", dir.display())));
    }
    found
        .into_iter()
        .map(|(id, p)| Ok(DailyClusterSeries::read_csv(id, run.read(&p)?.as_slice())?))
        .collect()
}

/// Scenario rows with an optional cluster restriction.
fn read_scenario(bytes: &[u8]) -> Result<Vec<(Option<u32>, FeatureRow)>> {
    let mut rd = csv::Reader::from_reader(bytes);
    let header = rd.headers().map_err(|e| data(format!("bad scenario header: {e}")))?.clone();
    let col = |n: &str| header.iter().position(|h| h.trim() == n);
    let (Some(di), Some(oi)) = (col("date"), col("owners")) else {
        return Err(data("scenario needs columns date,owners"));
    };
    let ci = col("cluster");
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| data(format!("scenario row {}: {e}", i + 1)))?;
        let bad = |what: &str| data(format!("scenario row {}: bad {what}", i + 1));
        let date: NaiveDate = rec.get(di).unwrap_or("").trim().parse().map_err(|_| bad("date"))?;
        let owners: f64 = rec.get(oi).unwrap_or("").trim().parse().map_err(|_| bad("owners"))?;
        if !(owners >= 0.0 && owners.is_finite()) {
            return Err(bad("owners"));
        }
        let cluster = match ci {
            Some(c) => Some(rec.get(c).unwrap_or("").trim().parse().map_err(|_| bad("cluster"))?),
            None => None,
        };
        out.push((cluster, FeatureRow::new(date, owners)));
    }
    if out.is_empty() {
        return Err(data("scenario has no rows"));
    }
    Ok(out)
}

/// Forecast CSV back into a per-cluster rate table for the impact sweep.
fn read_forecast_table(bytes: &[u8], clusters: usize) -> Result<ForecastTableProvider> {
    let mut rd = csv::Reader::from_reader(bytes);
    let mut per: BTreeMap<u32, (Vec<FeatureRow>, Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| data(format!("forecast row {}: {e}", i + 1)))?;
        let bad = || data(format!("forecast row {} is malformed", i + 1));
        let f = |j: usize| rec.get(j).map(str::trim).ok_or_else(bad);
        let cluster: u32 = f(0)?.parse().map_err(|_| bad())?;
        let date: NaiveDate = f(1)?.parse().map_err(|_| bad())?;
        let num = |j: usize| -> Result<f64> { f(j)?.parse().map_err(|_| bad()) };
        let e = per.entry(cluster).or_default();
        e.0.push(FeatureRow::new(date, num(2)?));
        e.1.push(num(3)?);
        e.2.push(num(4)?);
    }
    let mut table = ForecastTableProvider::default();
    for c in 1..=clusters as u32 {
        let (rows, users, consumed) = per
            .get(&c)
            .ok_or_else(|| data(format!("forecast has no rows for cluster {c}")))?;
        table.push_cluster(rows, users, consumed)?;
    }
    Ok(table)
}
