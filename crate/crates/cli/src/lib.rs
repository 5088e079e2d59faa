//! Command plumbing for the `rmw` binary. Every statistical step is a call
//! into the `rmw` library; this crate only reads inputs, writes outputs and
//! maps failures to exit codes.

pub mod grammar;

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use log::info;
use rmw::harness::{self, AssuranceSpec, MethodSpec, OperatingCharacteristics};
use rmw::simulator::{self, Scenario};
use rmw::{dataset, ComboResult, ComboSpec, WeightSpec};
use serde::Serialize;

pub const THREADS_ENV: &str = "RMW_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) | CliError::Io { .. } => 3,
            CliError::Numerical(_) => 4,
        }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    fn data_at(path: &Path, err: rmw::Error) -> Self {
        match CliError::from(err) {
            CliError::Data(msg) => CliError::Data(format!("{}: {msg}", path.display())),
            other => other,
        }
    }
}

impl From<rmw::Error> for CliError {
    fn from(err: rmw::Error) -> Self {
        use rmw::Error as E;
        if err.is_numerical() {
            return CliError::Numerical(err.to_string());
        }
        match err {
            E::UnknownScenario { .. } | E::InvalidWeight(_) | E::InvalidCombo(_) | E::InvalidPrior(_) | E::InvalidHarness(_) => {
                CliError::Usage(err.to_string())
            }
            _ => CliError::Data(err.to_string()),
        }
    }
}

impl From<rmw::weights::GrammarError> for CliError {
    fn from(err: rmw::weights::GrammarError) -> Self {
        CliError::Usage(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TestKind {
    /// Log-rank combined with the modestly weighted test.
    Rmw,
    /// Log-rank combined with FH(0, 0.5).
    Maxcombo,
    /// A single weighted log-rank test using `w1`.
    Single,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeConfig {
    pub data: PathBuf,
    pub test: TestKind,
    pub method: Option<String>,
    pub w1: Option<String>,
    pub w2: Option<String>,
    pub k1: f64,
    pub alpha: f64,
    pub format: Format,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateConfig {
    pub scenario: String,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PowerConfig {
    pub scenarios: Vec<String>,
    pub methods: Vec<String>,
    pub reps: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AssuranceConfig {
    pub input: PathBuf,
    pub prior: String,
    pub method: Option<String>,
    pub format: Format,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    Analyze(AnalyzeConfig),
    Simulate(SimulateConfig),
    Power(PowerConfig),
    Assurance(AssuranceConfig),
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub command: Command,
    pub threads: Option<usize>,
}

/// Runs one command. Outputs go to `out` when given, otherwise stdout.
pub fn run(config: &RunConfig) -> Result<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = config.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    let extra = pool.install(|| match &config.command {
        Command::Analyze(c) => analyze(c),
        Command::Simulate(c) => simulate(c),
        Command::Power(c) => power(c),
        Command::Assurance(c) => assurance(c),
    })?;
    if let Some(out) = output_path(&config.command) {
        write_manifest(out, config, pool.current_num_threads(), extra)?;
    }
    Ok(())
}

fn output_path(command: &Command) -> Option<&Path> {
    match command {
        Command::Analyze(c) => c.out.as_deref(),
        Command::Simulate(c) => c.out.as_deref(),
        Command::Power(c) => c.out.as_deref(),
        Command::Assurance(c) => c.out.as_deref(),
    }
}

#[derive(Serialize)]
struct AnalyzeOutput<'a> {
    method: &'a str,
    subjects: usize,
    events: usize,
    #[serde(flatten)]
    result: ComboResult,
}

fn analyze_spec(c: &AnalyzeConfig) -> Result<MethodSpec> {
    if let Some(text) = &c.method {
        return Ok(grammar::parse_method_grammar(text)?);
    }
    let weight = |text: &Option<String>, default: WeightSpec| -> Result<WeightSpec> {
        match text {
            Some(t) => Ok(rmw::weights::parse_weight(t)?),
            None => Ok(default),
        }
    };
    let w1 = weight(&c.w1, WeightSpec::Constant)?;
    let spec = match c.test {
        TestKind::Single => ComboSpec::single(w1, c.alpha)?,
        TestKind::Rmw => ComboSpec::new(w1, weight(&c.w2, WeightSpec::modest(0.5)?)?, c.k1, c.alpha)?,
        TestKind::Maxcombo => {
            ComboSpec::new(w1, weight(&c.w2, WeightSpec::fleming_harrington(0.0, 0.5)?)?, c.k1, c.alpha)?
        }
    };
    Ok(MethodSpec::new(harness::combo_label(&spec), spec))
}

fn analyze(c: &AnalyzeConfig) -> Result<Option<serde_json::Value>> {
    let method = analyze_spec(c)?;
    let file = File::open(&c.data).map_err(|e| CliError::io(&c.data, e))?;
    let records = dataset::read_csv(BufReader::new(file)).map_err(|e| CliError::data_at(&c.data, e))?;
    let table = dataset::build_risk_table(&records).map_err(|e| CliError::data_at(&c.data, e))?;
    let result = rmw::combo::analyze(&method.combo, &table)?;
    let output = AnalyzeOutput {
        method: &method.label,
        subjects: records.len(),
        events: records.iter().filter(|r| r.event).count(),
        result,
    };
    let bytes = match c.format {
        Format::Json => json_bytes(&output)?,
        Format::Csv => {
            let r = &output.result;
            let mut w = csv_writer_bytes();
            let header = ["method", "subjects", "events", "z1", "z2", "correlation", "c", "threshold1", "threshold2", "p_value", "reject"];
            let row = [
                output.method.to_string(),
                output.subjects.to_string(),
                output.events.to_string(),
                r.z1.to_string(),
                r.z2.to_string(),
                r.correlation.to_string(),
                r.c.to_string(),
                r.threshold1.to_string(),
                r.threshold2.to_string(),
                r.p_value.to_string(),
                r.reject.to_string(),
            ];
            w.write_record(header).and_then(|_| w.write_record(row)).map_err(|e| CliError::Data(e.to_string()))?;
            w.into_inner().map_err(|e| CliError::Data(e.to_string()))?
        }
    };
    emit(c.out.as_deref(), &bytes)?;
    Ok(None)
}

fn simulate(c: &SimulateConfig) -> Result<Option<serde_json::Value>> {
    let scenario = load_scenario(&c.scenario)?;
    let records = simulator::simulate_trial(&scenario, c.seed)?;
    let mut bytes = Vec::new();
    dataset::write_csv(&records, &mut bytes)?;
    emit(c.out.as_deref(), &bytes)?;
    Ok(Some(serde_json::json!({ "scenario": scenario, "scenario_hash": scenario.content_hash() })))
}

fn power(c: &PowerConfig) -> Result<Option<serde_json::Value>> {
    let scenarios = resolve_scenarios(&c.scenarios)?;
    let methods = resolve_methods(&c.methods)?;
    let mut results: Vec<OperatingCharacteristics> = Vec::with_capacity(scenarios.len());
    for s in &scenarios {
        info!("{}: {} replicates x {} methods", s.name, c.reps, methods.len());
        results.push(harness::estimate_power(s, &methods, c.reps, c.seed)?);
    }
    let mut bytes = Vec::new();
    harness::write_power_csv(&results, &mut bytes)?;
    emit(c.out.as_deref(), &bytes)?;
    let provenance: Vec<_> = results
        .iter()
        .zip(&scenarios)
        .map(|(oc, s)| {
            serde_json::json!({
                "scenario": s,
                "scenario_hash": oc.scenario_hash,
                "degenerate_replicates": oc.degenerate_replicates,
            })
        })
        .collect();
    let specs: Vec<_> = methods.iter().map(|m| serde_json::json!({ "label": m.label, "spec": m.combo })).collect();
    Ok(Some(serde_json::json!({ "scenarios": provenance, "methods": specs })))
}

#[derive(Serialize)]
struct AssuranceRow {
    method: String,
    assurance: f64,
}

fn assurance(c: &AssuranceConfig) -> Result<Option<serde_json::Value>> {
    let prior = AssuranceSpec::parse(&c.prior)?;
    let file = File::open(&c.input).map_err(|e| CliError::io(&c.input, e))?;
    let table = harness::read_power_csv(BufReader::new(file)).map_err(|e| CliError::data_at(&c.input, e))?;
    let labels: Vec<String> = match &c.method {
        Some(m) => vec![m.clone()],
        None => {
            let first = table.values().next().ok_or_else(|| CliError::Data(format!("{}: no rows", c.input.display())))?;
            first.methods.iter().map(|m| m.label.clone()).collect()
        }
    };
    let rows = labels
        .into_iter()
        .map(|method| {
            let assurance = harness::assurance(&table, &prior, &method)?;
            Ok(AssuranceRow { method, assurance })
        })
        .collect::<Result<Vec<_>>>()?;
    let bytes = match c.format {
        Format::Json => json_bytes(&rows)?,
        Format::Csv => {
            let mut w = csv_writer_bytes();
            for row in &rows {
                w.serialize(row).map_err(|e| CliError::Data(e.to_string()))?;
            }
            w.into_inner().map_err(|e| CliError::Data(e.to_string()))?
        }
    };
    emit(c.out.as_deref(), &bytes)?;
    Ok(Some(serde_json::json!({ "prior": prior.prior })))
}

/// Built-in name, or a path to a scenario JSON file.
pub fn load_scenario(text: &str) -> Result<Scenario> {
    let path = Path::new(text);
    if text.ends_with(".json") || path.is_file() {
        let body = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        return Scenario::from_json(&body).map_err(|e| CliError::data_at(path, e));
    }
    Ok(simulator::builtin_scenario(text)?)
}

fn resolve_scenarios(items: &[String]) -> Result<Vec<Scenario>> {
    let mut out = Vec::new();
    for item in items.iter().flat_map(|s| s.split(',')).map(str::trim).filter(|s| !s.is_empty()) {
        if item.eq_ignore_ascii_case("all") {
            out.extend(simulator::builtin_scenarios());
        } else {
            out.push(load_scenario(item)?);
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("no scenarios given".into()));
    }
    Ok(out)
}

fn resolve_methods(items: &[String]) -> Result<Vec<MethodSpec>> {
    let mut out: Vec<MethodSpec> = Vec::new();
    for item in items {
        for m in grammar::parse_method_list(item).map_err(|e| CliError::Usage(format!("`{item}`: {e}")))? {
            if out.iter().any(|o| o.label == m.label) {
                return Err(CliError::Usage(format!("method `{}` given twice", m.label)));
            }
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("no methods given".into()));
    }
    Ok(out)
}

fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn csv_writer_bytes() -> csv::Writer<Vec<u8>> {
    csv::Writer::from_writer(Vec::new())
}

/// Writes to `path` atomically, or to stdout.
fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, bytes),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(bytes).and_then(|_| lock.flush()).map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// `results.csv` -> `results.csv.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    library_version: &'static str,
    created_unix: u64,
    threads: usize,
    output: &'a Path,
    config: &'a RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    provenance: Option<serde_json::Value>,
}

fn write_manifest(out: &Path, config: &RunConfig, threads: usize, provenance: Option<serde_json::Value>) -> Result<()> {
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        library_version: rmw::VERSION,
        created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        threads,
        output: out,
        config,
        provenance,
    };
    write_atomic(&manifest_path(out), &json_bytes(&manifest)?)
}
