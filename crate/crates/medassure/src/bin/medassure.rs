//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 broken internal
//! invariant.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use medassure::assurance::{
    build_argument, findings_from_csv, gap_report, gsn_to_dot, load_hazard_table,
    ArgumentTemplate,
};
use medassure::bn::{
    evaluate_classifier, fit_parameters, hill_climb, infer, risk_report, structure_from_text,
    structure_to_text, train_test_split, BayesNet, BdeuParams, Evidence, SearchConfig,
};
use medassure::error::{Error, ErrorKind};
use medassure::logreg::{evaluate_lr, fit_lr, score_lr, LrConfig};
use medassure::metrics::roc_sweep;
use medassure::pipeline::{alpha_sweep, run_pipeline, RunConfig};
use medassure::procmine::{dfg_to_dot, discover_dfg, filter_log, load_event_log, LogFilter};
use medassure::records::{load_records, study_schema, write_records};
use medassure::synth::{forward_sample, planted_study_net, PlantedModel};

#[derive(Parser)]
#[command(
    name = "medassure",
    about = "Learn clinical dependency and process models, and assemble safety arguments with a gap report",
    version
)]
struct Cli {
    /// Cap on worker threads. Stages currently run serially, so this only
    /// bounds future parallelism; it never affects outputs.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct LearnArgs {
    /// Encounter records CSV.
    #[arg(long)]
    records: PathBuf,
    /// Equivalent sample size of the structure score.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 3)]
    max_parents: usize,
    #[arg(long, default_value_t = 1000)]
    max_iterations: usize,
    /// Extra random-restart climbs.
    #[arg(long, default_value_t = 0)]
    restarts: usize,
    /// Seed for random restarts.
    #[arg(long, default_value_t = 0)]
    restart_seed: u64,
}

impl LearnArgs {
    fn search_config(&self) -> SearchConfig {
        SearchConfig {
            max_parents: self.max_parents,
            max_iterations: self.max_iterations,
            restarts: self.restarts,
            restart_seed: self.restart_seed,
            ..SearchConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the whole pipeline from a config file. Flags override the
    /// corresponding file values.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        fraction: Option<f64>,
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        min_arc: Option<u64>,
    },
    /// Sample synthetic encounter records from the planted model.
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// Output directory for records.csv and planted.bn.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Learn a structure and write it as DOT and text, with the search trace.
    Learn {
        #[command(flatten)]
        learn: LearnArgs,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Fit CPT parameters for a given structure.
    Fit {
        #[arg(long)]
        records: PathBuf,
        /// Structure file (text format, with or without CPTs).
        #[arg(long)]
        structure: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Output network file.
        #[arg(long, default_value = "net.bn")]
        out: PathBuf,
    },
    /// Query a fitted network: a posterior, or a risk report.
    Infer {
        #[arg(long)]
        net: PathBuf,
        /// Evidence, e.g. Surgery=2,Pre_beta=1.
        #[arg(long, default_value = "")]
        context: String,
        /// Posterior target variable (use instead of exposure/outcome).
        #[arg(long)]
        target: Option<String>,
        #[arg(long, requires = "outcome")]
        exposure: Option<String>,
        #[arg(long, requires = "exposure")]
        outcome: Option<String>,
    },
    /// Split, fit and evaluate the network and the regression baseline.
    Metrics {
        #[command(flatten)]
        learn: LearnArgs,
        #[arg(long, default_value_t = 0.8)]
        fraction: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "AF")]
        target: String,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        /// Also sweep thresholds and write roc.csv with this many steps.
        #[arg(long)]
        roc_steps: Option<usize>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Discover a directly-follows graph from an event log.
    Mine {
        #[arg(long)]
        events: PathBuf,
        /// Trace filter: contains=X, excludes=X or cases=a;b.
        #[arg(long)]
        filter: Option<String>,
        #[arg(long, default_value_t = 1)]
        min_arc: u64,
        #[arg(long, default_value = "dfg.dot")]
        out: PathBuf,
    },
    /// Build the safety argument from hazards, findings and a template.
    Argue {
        #[arg(long)]
        hazards: PathBuf,
        #[arg(long)]
        template: PathBuf,
        #[arg(long)]
        findings: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Write the gap report for a hazard table and findings.
    Gaps {
        #[arg(long)]
        hazards: PathBuf,
        #[arg(long)]
        findings: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Learn one structure per alpha and summarize edge counts.
    Sweep {
        #[command(flatten)]
        learn: LearnArgs,
        /// Comma-separated alphas, e.g. 0.5,1,2,5,10.
        #[arg(long)]
        alphas: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders help/version through the error path too
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    if cli.threads == 0 {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(1);
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            let mut source = std::error::Error::source(&error);
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            match error.kind() {
                ErrorKind::Usage => ExitCode::from(1),
                ErrorKind::Data => ExitCode::from(2),
                ErrorKind::Internal => ExitCode::from(3),
            }
        }
    }
}

fn write_out(path: &PathBuf, content: &str) -> Result<(), Error> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    std::fs::write(path, content).map_err(|e| Error::io(path, e))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn dispatch(command: Command) -> Result<(), Error> {
    let schema = study_schema();
    match command {
        Command::Run {
            config,
            out_dir,
            seed,
            alpha,
            fraction,
            target,
            threshold,
            min_arc,
        } => {
            let mut config = RunConfig::load(&config)?;
            if let Some(out_dir) = out_dir {
                config.out_dir = out_dir;
            }
            if let Some(seed) = seed {
                config.seed = seed;
            }
            if let Some(alpha) = alpha {
                config.alpha = alpha;
            }
            if let Some(fraction) = fraction {
                config.split_fraction = fraction;
            }
            if let Some(target) = target {
                config.target = target;
            }
            if let Some(threshold) = threshold {
                config.threshold = threshold;
            }
            if let Some(min_arc) = min_arc {
                config.dfg_min_arc = min_arc;
            }
            config.validate()?;
            let manifest = run_pipeline(&config)?;
            println!("run complete: {} artifacts", manifest.entries.len());
            println!("manifest: {}", config.out_dir.join("manifest.txt").display());
            Ok(())
        }
        Command::Synth { n, seed, out } => {
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            let model = PlantedModel::new(planted_study_net(), seed, n);
            let records = forward_sample(&model)?;
            let records_path = out.join("records.csv");
            write_records(&records_path, &schema, &records)?;
            println!("wrote {}", records_path.display());
            write_out(&out.join("planted.bn"), &model.net.to_text())
        }
        Command::Learn { learn, out } => {
            let records = load_records(&learn.records, &schema)?;
            let params = BdeuParams::new(learn.alpha)?;
            let (dag, trace) = hill_climb(&records, &schema, &params, &learn.search_config())?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            write_out(&out.join("structure.dot"), &dag.to_dot(&schema))?;
            write_out(&out.join("structure.bn"), &structure_to_text(&dag, &schema))?;
            write_out(&out.join("trace.csv"), &trace.to_csv())
        }
        Command::Fit {
            records,
            structure,
            alpha,
            out,
        } => {
            let records = load_records(&records, &schema)?;
            let text = std::fs::read_to_string(&structure).map_err(|e| Error::io(&structure, e))?;
            let dag = structure_from_text(&text, &schema)?;
            let net = fit_parameters(&dag, &records, &schema, &BdeuParams::new(alpha)?)?;
            write_out(&out, &net.to_text())
        }
        Command::Infer {
            net,
            context,
            target,
            exposure,
            outcome,
        } => {
            let text = std::fs::read_to_string(&net).map_err(|e| Error::io(&net, e))?;
            let net = BayesNet::from_text(&text)?;
            let evidence = Evidence::parse(&context, &net.schema)?;
            match (target, exposure, outcome) {
                (Some(target), None, None) => {
                    let posterior = infer(&net, &evidence, &target)?;
                    for (state, p) in posterior.probabilities.iter().enumerate() {
                        println!("P({target} = {state} | {}) = {p:.6}", evidence.display(&net.schema));
                    }
                    Ok(())
                }
                (None, Some(exposure), Some(outcome)) => {
                    let report = risk_report(&net, &evidence, &exposure, &outcome)?;
                    print!("{}", report.to_text(&net.schema));
                    Ok(())
                }
                _ => Err(Error::Query(
                    "pass either --target, or --exposure with --outcome".into(),
                )),
            }
        }
        Command::Metrics {
            learn,
            fraction,
            seed,
            target,
            threshold,
            roc_steps,
            out,
        } => {
            let records = load_records(&learn.records, &schema)?;
            let (train, test) = train_test_split(&records, fraction, seed)?;
            let params = BdeuParams::new(learn.alpha)?;
            let (dag, _) = hill_climb(&train, &schema, &params, &learn.search_config())?;
            let net = fit_parameters(&dag, &train, &schema, &params)?;
            let bn_metrics = evaluate_classifier(&net, &test, &target, threshold)?;
            let predictors: Vec<&str> = schema
                .variables()
                .iter()
                .map(|v| v.code.as_str())
                .filter(|code| *code != target)
                .collect();
            let lr_model = fit_lr(&train, &schema, &target, &predictors, &LrConfig::default())?;
            let lr_metrics = evaluate_lr(&lr_model, &test, threshold)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            let mut csv = String::from("query,context,exposure,value\n");
            for (method, metrics) in [("bn", &bn_metrics), ("lr", &lr_metrics)] {
                csv.push_str(&format!(
                    "{method}_accuracy,target={target},,{:.12}\n",
                    metrics.accuracy
                ));
                csv.push_str(&format!(
                    "{method}_sensitivity,target={target},,{}\n",
                    metrics
                        .sensitivity
                        .map(|v| format!("{v:.12}"))
                        .unwrap_or_default()
                ));
                csv.push_str(&format!(
                    "{method}_specificity,target={target},,{}\n",
                    metrics
                        .specificity
                        .map(|v| format!("{v:.12}"))
                        .unwrap_or_default()
                ));
            }
            write_out(&out.join("metrics.csv"), &csv)?;
            if let Some(steps) = roc_steps {
                let scored = score_lr(&lr_model, &test)?;
                let mut roc = String::from("threshold,sensitivity,specificity\n");
                for (t, m) in roc_sweep(&scored, steps.max(1)) {
                    roc.push_str(&format!(
                        "{t:.4},{},{}\n",
                        m.sensitivity.map(|v| format!("{v:.6}")).unwrap_or_default(),
                        m.specificity.map(|v| format!("{v:.6}")).unwrap_or_default()
                    ));
                }
                write_out(&out.join("roc.csv"), &roc)?;
            }
            Ok(())
        }
        Command::Mine {
            events,
            filter,
            min_arc,
            out,
        } => {
            let log = load_event_log(&events)?;
            if log.skipped_untimestamped > 0 {
                eprintln!(
                    "note: skipped {} events without timestamps",
                    log.skipped_untimestamped
                );
            }
            let traces = match filter {
                Some(text) => filter_log(&log.traces, &LogFilter::parse(&text)?),
                None => log.traces,
            };
            println!("{} traces after filtering", traces.len());
            let model = discover_dfg(&traces)?;
            write_out(&out, &dfg_to_dot(&model, min_arc))
        }
        Command::Argue {
            hazards,
            template,
            findings,
            out,
        } => {
            let hazards = load_hazard_table(&hazards)?;
            let template = ArgumentTemplate::load(&template)?;
            let findings = findings_from_csv(&findings)?;
            let argument = build_argument(&hazards, &findings, &template)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            write_out(&out.join("argument.dot"), &gsn_to_dot(&argument))?;
            let report = gap_report(&hazards, &findings);
            write_out(&out.join("gaps.txt"), &report.to_text())
        }
        Command::Gaps {
            hazards,
            findings,
            out,
        } => {
            let hazards = load_hazard_table(&hazards)?;
            let findings = findings_from_csv(&findings)?;
            let report = gap_report(&hazards, &findings);
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            write_out(&out.join("gaps.txt"), &report.to_text())?;
            write_out(&out.join("gaps.csv"), &report.to_csv())
        }
        Command::Sweep { learn, alphas, out } => {
            let records = load_records(&learn.records, &schema)?;
            let parsed: Result<Vec<f64>, Error> = alphas
                .split(',')
                .map(|a| {
                    a.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Query(format!("bad alpha '{a}'")))
                })
                .collect();
            let results = alpha_sweep(&records, &schema, &parsed?, &learn.search_config(), &out)?;
            for (alpha, edges) in results {
                println!("alpha {alpha}: {edges} edges");
            }
            Ok(())
        }
    }
}
