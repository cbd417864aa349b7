//! Config-driven end-to-end runs.
//!
//! A run reads one config file, executes the stages in a fixed order
//! (ingest, learn, fit, metrics, infer, mine, argue, gaps) and writes every
//! artifact into the output directory together with `manifest.txt`, which
//! lists each artifact with its SHA-256 checksum and echoes the effective
//! config. Identical config and inputs give identical checksums; on a
//! stage failure, artifacts written so far are removed.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::assurance::{
    build_argument, extract_findings, findings_to_csv, gap_report, gsn_to_dot, load_hazard_table,
    unanticipated_adjacencies, ArgumentTemplate,
};
use crate::bn::{
    evaluate_classifier, fit_parameters, hill_climb, risk_report, structure_to_text,
    train_test_split, BdeuParams, Evidence, RiskReport, SearchConfig,
};
use crate::error::{Error, Result};
use crate::logreg::{evaluate_lr, fit_lr, LrConfig};
use crate::metrics::ClassifierMetrics;
use crate::procmine::{discover_dfg, dfg_to_dot, filter_log, load_event_log, LogFilter};
use crate::records::{load_records, study_schema, EncodingRules, EncounterRecord, Schema};

/// One posterior risk query: a context plus binary exposure and outcome.
#[derive(Debug, Clone, Deserialize, PartialEq, Eq)]
pub struct RiskQuery {
    pub context: String,
    pub exposure: String,
    pub outcome: String,
}

#[derive(Debug, Clone, Deserialize)]
struct RawPaths {
    records: PathBuf,
    events: Option<PathBuf>,
    hazards: PathBuf,
    template: PathBuf,
    out_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
struct RawLearn {
    #[serde(default = "default_alpha")]
    alpha: f64,
    alpha_sweep: Option<Vec<f64>>,
    #[serde(default = "default_max_parents")]
    max_parents: usize,
    #[serde(default = "default_max_iterations")]
    max_iterations: usize,
}

impl Default for RawLearn {
    fn default() -> Self {
        RawLearn {
            alpha: default_alpha(),
            alpha_sweep: None,
            max_parents: default_max_parents(),
            max_iterations: default_max_iterations(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
struct RawSplit {
    #[serde(default = "default_fraction")]
    fraction: f64,
    seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
struct RawClassify {
    #[serde(default = "default_target")]
    target: String,
    #[serde(default = "default_threshold")]
    threshold: f64,
}

impl Default for RawClassify {
    fn default() -> Self {
        RawClassify {
            target: default_target(),
            threshold: default_threshold(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
struct RawLr {
    #[serde(default = "default_learning_rate")]
    learning_rate: f64,
    #[serde(default = "default_max_epochs")]
    max_epochs: usize,
    #[serde(default = "default_l2")]
    l2: f64,
    #[serde(default = "default_lr_tolerance")]
    tolerance: f64,
}

impl Default for RawLr {
    fn default() -> Self {
        RawLr {
            learning_rate: default_learning_rate(),
            max_epochs: default_max_epochs(),
            l2: default_l2(),
            tolerance: default_lr_tolerance(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
struct RawDfg {
    #[serde(default = "default_min_arc")]
    min_arc_count: u64,
    filter: Option<String>,
}

impl Default for RawDfg {
    fn default() -> Self {
        RawDfg {
            min_arc_count: default_min_arc(),
            filter: None,
        }
    }
}

fn default_alpha() -> f64 {
    1.0
}
fn default_max_parents() -> usize {
    3
}
fn default_max_iterations() -> usize {
    1000
}
fn default_fraction() -> f64 {
    0.8
}
fn default_target() -> String {
    "AF".to_string()
}
fn default_threshold() -> f64 {
    0.5
}
fn default_learning_rate() -> f64 {
    1.0
}
fn default_max_epochs() -> usize {
    2000
}
fn default_l2() -> f64 {
    1e-4
}
fn default_lr_tolerance() -> f64 {
    1e-9
}
fn default_min_arc() -> u64 {
    1
}

#[derive(Debug, Clone, Deserialize, Default)]
struct RawEncoding {
    hypotension_threshold_mmhg: Option<f64>,
    post_beta_window_hours: Option<f64>,
    af_icd9_prefix: Option<String>,
    cpt_map: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
struct RawConfig {
    paths: RawPaths,
    #[serde(default)]
    learn: RawLearn,
    split: RawSplit,
    #[serde(default)]
    classify: RawClassify,
    #[serde(default)]
    lr: RawLr,
    #[serde(default)]
    dfg: RawDfg,
    #[serde(default)]
    encoding: RawEncoding,
    #[serde(default)]
    queries: Vec<RiskQuery>,
}

/// Fully resolved run settings. The split seed is mandatory in the file;
/// nothing in a run depends on the wall clock.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub records: PathBuf,
    pub events: Option<PathBuf>,
    pub hazards: PathBuf,
    pub template: PathBuf,
    pub out_dir: PathBuf,
    pub alpha: f64,
    pub alpha_sweep: Option<Vec<f64>>,
    pub max_parents: usize,
    pub max_iterations: usize,
    pub split_fraction: f64,
    pub seed: u64,
    pub target: String,
    pub threshold: f64,
    pub lr: LrConfig,
    pub dfg_min_arc: u64,
    pub dfg_filter: Option<String>,
    /// Encoding rules for upstream data preparation; validated and echoed
    /// so a run records the rules its input CSV was produced under.
    pub encoding: EncodingRules,
    pub queries: Vec<RiskQuery>,
}

impl RunConfig {
    /// Parses a config file. Relative paths are resolved against the config
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let raw: RawConfig =
            toml::from_str(&text).map_err(|e| Error::file(path, format!("config: {e}")))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let resolve = |p: &Path| -> PathBuf {
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        let mut encoding = EncodingRules::default();
        if let Some(threshold) = raw.encoding.hypotension_threshold_mmhg {
            encoding.hypotension_threshold_mmhg = threshold;
        }
        if let Some(window) = raw.encoding.post_beta_window_hours {
            encoding.post_beta_window_hours = window;
        }
        if let Some(prefix) = raw.encoding.af_icd9_prefix {
            encoding.af_icd9_prefix = prefix;
        }
        if let Some(map_path) = raw.encoding.cpt_map.as_deref() {
            encoding.load_cpt_map(&resolve(map_path))?;
        }
        let config = RunConfig {
            records: resolve(&raw.paths.records),
            events: raw.paths.events.as_deref().map(resolve),
            hazards: resolve(&raw.paths.hazards),
            template: resolve(&raw.paths.template),
            out_dir: resolve(&raw.paths.out_dir),
            alpha: raw.learn.alpha,
            alpha_sweep: raw.learn.alpha_sweep,
            max_parents: raw.learn.max_parents,
            max_iterations: raw.learn.max_iterations,
            split_fraction: raw.split.fraction,
            seed: raw.split.seed,
            target: raw.classify.target,
            threshold: raw.classify.threshold,
            lr: LrConfig {
                learning_rate: raw.lr.learning_rate,
                max_epochs: raw.lr.max_epochs,
                l2: raw.lr.l2,
                tolerance: raw.lr.tolerance,
            },
            dfg_min_arc: raw.dfg.min_arc_count,
            dfg_filter: raw.dfg.filter,
            encoding,
            queries: raw.queries,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        for (label, path) in [
            ("records", Some(&self.records)),
            ("hazards", Some(&self.hazards)),
            ("template", Some(&self.template)),
            ("events", self.events.as_ref()),
        ] {
            if let Some(path) = path {
                if !path.exists() {
                    return Err(Error::file(path, format!("{label} file does not exist")));
                }
            }
        }
        if !(self.alpha > 0.0) {
            return Err(Error::Input("alpha must be positive".into()));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::Input("split fraction must be in (0, 1)".into()));
        }
        self.encoding.validate()?;
        Ok(())
    }

    /// The effective settings, echoed into the manifest.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "records = {}", self.records.display());
        if let Some(events) = &self.events {
            let _ = writeln!(out, "events = {}", events.display());
        }
        let _ = writeln!(out, "hazards = {}", self.hazards.display());
        let _ = writeln!(out, "template = {}", self.template.display());
        let _ = writeln!(out, "out_dir = {}", self.out_dir.display());
        let _ = writeln!(out, "alpha = {}", self.alpha);
        if let Some(sweep) = &self.alpha_sweep {
            let rendered: Vec<String> = sweep.iter().map(|a| a.to_string()).collect();
            let _ = writeln!(out, "alpha_sweep = [{}]", rendered.join(", "));
        }
        let _ = writeln!(out, "max_parents = {}", self.max_parents);
        let _ = writeln!(out, "max_iterations = {}", self.max_iterations);
        let _ = writeln!(out, "split_fraction = {}", self.split_fraction);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "target = {}", self.target);
        let _ = writeln!(out, "threshold = {}", self.threshold);
        let _ = writeln!(out, "lr_learning_rate = {}", self.lr.learning_rate);
        let _ = writeln!(out, "lr_max_epochs = {}", self.lr.max_epochs);
        let _ = writeln!(out, "lr_l2 = {}", self.lr.l2);
        let _ = writeln!(out, "lr_tolerance = {}", self.lr.tolerance);
        let _ = writeln!(out, "dfg_min_arc_count = {}", self.dfg_min_arc);
        let _ = writeln!(
            out,
            "encoding = hypotension<{} window:{}h af_prefix:{} cpt_codes:{}",
            self.encoding.hypotension_threshold_mmhg,
            self.encoding.post_beta_window_hours,
            self.encoding.af_icd9_prefix,
            self.encoding.thoracic_cpt_map.len()
        );
        if let Some(filter) = &self.dfg_filter {
            let _ = writeln!(out, "dfg_filter = {filter}");
        }
        for query in &self.queries {
            let _ = writeln!(
                out,
                "query = context:{} exposure:{} outcome:{}",
                query.context, query.exposure, query.outcome
            );
        }
        out
    }
}

/// What a run produced: artifact names with checksums, plus the config echo.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunManifest {
    /// `(artifact name, sha256 hex, size in bytes)` in write order.
    pub entries: Vec<(String, String, u64)>,
    pub config_echo: String,
}

impl RunManifest {
    pub fn to_text(&self) -> String {
        let mut out = String::from("medassure run manifest\n\n[config]\n");
        out.push_str(&self.config_echo);
        out.push_str("\n[artifacts]\n");
        for (name, sha, bytes) in &self.entries {
            let _ = writeln!(out, "{name} sha256={sha} bytes={bytes}");
        }
        out
    }

    pub fn checksum_of(&self, name: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(n, _, _)| n == name)
            .map(|(_, sha, _)| sha.as_str())
    }
}

/// Tracks written artifacts so a failed run can clean up after itself.
struct ArtifactWriter {
    out_dir: PathBuf,
    written: Vec<(String, String, u64)>,
}

impl ArtifactWriter {
    fn new(out_dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        Ok(ArtifactWriter {
            out_dir: out_dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, content: &str) -> Result<()> {
        let path = self.out_dir.join(name);
        std::fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
        let sha = hex_digest(content.as_bytes());
        self.written.push((name.to_string(), sha, content.len() as u64));
        Ok(())
    }

    fn remove_all(&self) {
        for (name, _, _) in &self.written {
            let _ = std::fs::remove_file(self.out_dir.join(name));
        }
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for byte in digest {
        let _ = write!(out, "{byte:02x}");
    }
    out
}

/// Runs every stage and writes `manifest.txt`. See the module docs for the
/// artifact list.
pub fn run_pipeline(config: &RunConfig) -> Result<RunManifest> {
    let mut writer = ArtifactWriter::new(&config.out_dir)?;
    match run_stages(config, &mut writer) {
        Ok(()) => {
            let manifest = RunManifest {
                entries: writer.written.clone(),
                config_echo: config.echo(),
            };
            let path = config.out_dir.join("manifest.txt");
            std::fs::write(&path, manifest.to_text()).map_err(|e| Error::io(&path, e))?;
            Ok(manifest)
        }
        Err(error) => {
            writer.remove_all();
            Err(error)
        }
    }
}

fn stage<T>(name: &'static str, result: Result<T>) -> Result<T> {
    result.map_err(|e| Error::Stage {
        stage: name,
        source: Box::new(e),
    })
}

fn run_stages(config: &RunConfig, writer: &mut ArtifactWriter) -> Result<()> {
    let schema = study_schema();

    // ingest
    let records = stage("ingest", load_records(&config.records, &schema))?;
    if records.is_empty() {
        return Err(Error::Stage {
            stage: "ingest",
            source: Box::new(Error::Input("records file has no rows".into())),
        });
    }

    // learn
    let search = SearchConfig {
        max_parents: config.max_parents,
        max_iterations: config.max_iterations,
        ..SearchConfig::default()
    };
    let params = BdeuParams::new(config.alpha)?;
    let (dag, trace) = stage("learn", hill_climb(&records, &schema, &params, &search))?;
    writer.write("structure.dot", &dag.to_dot(&schema))?;
    writer.write("trace.csv", &trace.to_csv())?;
    if let Some(alphas) = &config.alpha_sweep {
        let mut summary = String::from("alpha,edge_count\n");
        for &alpha in alphas {
            let sweep_params = BdeuParams::new(alpha)?;
            let (sweep_dag, _) =
                stage("learn", hill_climb(&records, &schema, &sweep_params, &search))?;
            writer.write(&format!("structure_a{alpha}.dot"), &sweep_dag.to_dot(&schema))?;
            let _ = writeln!(summary, "{alpha},{}", sweep_dag.edge_count());
        }
        writer.write("sweep.csv", &summary)?;
    }

    // fit
    let (train, test) = stage(
        "fit",
        train_test_split(&records, config.split_fraction, config.seed),
    )?;
    let net = stage("fit", fit_parameters(&dag, &train, &schema, &params))?;
    writer.write("net.bn", &net.to_text())?;

    // metrics
    let bn_metrics = stage(
        "metrics",
        evaluate_classifier(&net, &test, &config.target, config.threshold),
    )?;
    let predictors: Vec<&str> = schema
        .variables()
        .iter()
        .map(|v| v.code.as_str())
        .filter(|code| *code != config.target)
        .collect();
    let lr_model = stage(
        "metrics",
        fit_lr(&train, &schema, &config.target, &predictors, &config.lr),
    )?;
    let lr_metrics = stage("metrics", evaluate_lr(&lr_model, &test, config.threshold))?;
    writer.write(
        "metrics.csv",
        &metrics_csv(&config.target, &bn_metrics, &lr_metrics),
    )?;
    writer.write("lr_weights.txt", &lr_model.to_text())?;

    // infer
    let mut reports: Vec<RiskReport> = Vec::new();
    let mut risk_csv = String::from("query,context,exposure,value\n");
    for query in &config.queries {
        let context = stage("infer", Evidence::parse(&query.context, &schema))?;
        let report = stage(
            "infer",
            risk_report(&net, &context, &query.exposure, &query.outcome),
        )?;
        append_risk_rows(&mut risk_csv, &schema, &report);
        reports.push(report);
    }
    writer.write("risk.csv", &risk_csv)?;

    // mine
    let dfg = match &config.events {
        Some(events_path) => {
            let log = stage("mine", load_event_log(events_path))?;
            let traces = match &config.dfg_filter {
                Some(filter_text) => {
                    let filter = stage("mine", LogFilter::parse(filter_text))?;
                    filter_log(&log.traces, &filter)
                }
                None => log.traces,
            };
            let model = stage("mine", discover_dfg(&traces))?;
            writer.write("dfg.dot", &dfg_to_dot(&model, config.dfg_min_arc))?;
            Some(model)
        }
        None => None,
    };

    // argue
    let hazards = stage("argue", load_hazard_table(&config.hazards))?;
    let template = stage("argue", ArgumentTemplate::load(&config.template))?;
    let mut findings = stage(
        "argue",
        extract_findings(&dag, &schema, &hazards, &reports, dfg.as_ref()),
    )?;
    findings.extend(unanticipated_adjacencies(&dag, &schema, &hazards));
    writer.write("findings.csv", &findings_to_csv(&findings))?;
    let argument = stage("argue", build_argument(&hazards, &findings, &template))?;
    writer.write("argument.dot", &gsn_to_dot(&argument))?;

    // gaps
    let report = gap_report(&hazards, &findings);
    writer.write("gaps.txt", &report.to_text())?;
    writer.write("gaps.csv", &report.to_csv())?;

    // structure text form for downstream tooling
    writer.write("structure.bn", &structure_to_text(&dag, &schema))?;
    Ok(())
}

fn metric_value(value: Option<f64>) -> String {
    value.map(|v| format!("{v:.12}")).unwrap_or_default()
}

fn metrics_csv(target: &str, bn: &ClassifierMetrics, lr: &ClassifierMetrics) -> String {
    let mut out = String::from("query,context,exposure,value\n");
    for (method, metrics) in [("bn", bn), ("lr", lr)] {
        let _ = writeln!(out, "{method}_accuracy,target={target},,{:.12}", metrics.accuracy);
        let _ = writeln!(
            out,
            "{method}_sensitivity,target={target},,{}",
            metric_value(metrics.sensitivity)
        );
        let _ = writeln!(
            out,
            "{method}_specificity,target={target},,{}",
            metric_value(metrics.specificity)
        );
        let _ = writeln!(
            out,
            "{method}_confusion,target={target},,tp={} tn={} fp={} fn={}",
            metrics.tp, metrics.tn, metrics.fp, metrics.fn_
        );
    }
    out
}

fn append_risk_rows(out: &mut String, schema: &Schema, report: &RiskReport) {
    let context = report.context.display(schema);
    let pair = format!("{}->{}", report.exposure, report.outcome);
    let _ = writeln!(out, "p_reference,{context},{pair},{:.12}", report.p_outcome_reference);
    let _ = writeln!(out, "p_treated,{context},{pair},{:.12}", report.p_outcome_treated);
    let _ = writeln!(out, "arr,{context},{pair},{:.12}", report.absolute_risk_reduction);
    let _ = writeln!(
        out,
        "nnt,{context},{pair},{}",
        metric_value(report.number_needed_to_treat)
    );
}

/// Convenience used by tests and the demo: the run directory's main
/// artifact names in stage order.
pub const ARTIFACT_KINDS: [&str; 8] = [
    "structure.dot",
    "trace.csv",
    "net.bn",
    "metrics.csv",
    "risk.csv",
    "dfg.dot",
    "argument.dot",
    "gaps.txt",
];

/// Also writes a sweep without the rest of the pipeline; used by the
/// `sweep` subcommand.
pub fn alpha_sweep(
    records: &[EncounterRecord],
    schema: &Schema,
    alphas: &[f64],
    search: &SearchConfig,
    out_dir: &Path,
) -> Result<Vec<(f64, usize)>> {
    let mut writer = ArtifactWriter::new(out_dir)?;
    let mut results = Vec::with_capacity(alphas.len());
    let mut summary = String::from("alpha,edge_count\n");
    for &alpha in alphas {
        let params = BdeuParams::new(alpha)?;
        let (dag, _) = hill_climb(records, schema, &params, search)?;
        writer.write(&format!("structure_a{alpha}.dot"), &dag.to_dot(schema))?;
        let _ = writeln!(summary, "{alpha},{}", dag.edge_count());
        results.push((alpha, dag.edge_count()));
    }
    writer.write("sweep.csv", &summary)?;
    Ok(results)
}
