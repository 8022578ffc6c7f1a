use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use woe_core::dataset::{
    balance, load_concepts, load_csv, split, BalanceStrategy, ConceptActivationTable, CsvSchema, LabeledTable,
};
use woe_core::evidence::condition_view;
use woe_core::metrics::{select_instances, InstanceSelection, ParticipantSummary};
use woe_core::persistence::{to_document, ModelDocument};
use woe_core::{Assumption, Condition, GaussianEvidenceModel, Label, SignificanceScale};
use woe_service::{
    read_session_log, ConditionPolicy, ExportDocument, ServiceConfig, StudyService, SystemClock, TaskPool,
};

mod render;

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 1,
            Self::Data(_) => 2,
            Self::Internal(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Usage(m) | Self::Data(m) | Self::Internal(m) => f.write_str(m),
        }
    }
}

fn data<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Data(e.to_string())
}

type CliResult = Result<String, CliError>;

#[derive(Parser)]
#[command(name = "woe", version, about = "Weight-of-evidence decision support")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Human,
    Doc,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Balance {
    Nearmiss,
    Random,
}

/// Comma-separated numbers.
#[derive(Clone, Debug)]
struct Numbers(Vec<f64>);

impl std::str::FromStr for Numbers {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| format!("'{v}' is not a number")))
            .collect::<Result<_, _>>()
            .map(Numbers)
    }
}

#[derive(Args, Debug)]
struct Input {
    /// CSV file with a header row and a label column.
    #[arg(long, conflicts_with = "concepts")]
    data: Option<PathBuf>,
    /// Concept activation file.
    #[arg(long)]
    concepts: Option<PathBuf>,
    #[arg(long, default_value = "label")]
    label_column: String,
}

#[derive(Args, Debug)]
struct Instance {
    #[command(flatten)]
    input: Input,
    /// Row of the input file to use.
    #[arg(long)]
    row: Option<usize>,
    /// Feature values given directly, comma-separated.
    #[arg(long, conflicts_with_all = ["data", "concepts", "row"])]
    values: Option<Numbers>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model and emit its document.
    Fit {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value = "dependent")]
        assumption: Assumption,
        #[arg(long, default_value_t = woe_core::model::DEFAULT_RIDGE)]
        ridge: f64,
        /// Default importance weights stored with the model.
        #[arg(long)]
        gamma: Option<Numbers>,
        /// Downsample every class to the minority count before fitting.
        #[arg(long)]
        balance: Option<Balance>,
        /// Hold out this fraction (stratified) and report its accuracy.
        #[arg(long)]
        holdout: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "human")]
        format: Format,
    },
    /// Predicted label, posterior and total WoE per hypothesis.
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        instance: Instance,
        #[arg(long, value_enum, default_value = "human")]
        format: Format,
    },
    /// The condition view of one instance.
    Explain {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        instance: Instance,
        #[arg(long, default_value = "C3")]
        condition: Condition,
        #[arg(long)]
        gamma: Option<Numbers>,
        #[arg(long, value_enum, default_value = "human")]
        format: Format,
    },
    /// Pick study instances by correctness and posterior entropy.
    SelectInstances {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = woe_core::metrics::LOW_UNCERTAINTY)]
        low: f64,
        #[arg(long, default_value_t = woe_core::metrics::HIGH_UNCERTAINTY)]
        high: f64,
        #[arg(long, default_value_t = 4)]
        per_category: usize,
        /// Also write the selected instances as a task pool.
        #[arg(long)]
        pool_out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "human")]
        format: Format,
    },
    /// Metric table from session export documents.
    Evaluate {
        #[arg(required = true)]
        exports: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "human")]
        format: Format,
    },
    /// Run the HTTP study service.
    Serve {
        #[arg(long, env = "WOE_MODEL")]
        model: PathBuf,
        /// Task pool document; alternatively --data or --concepts.
        #[arg(long, env = "WOE_TASKS", conflicts_with_all = ["data", "concepts"])]
        tasks: Option<PathBuf>,
        #[command(flatten)]
        input: Input,
        #[arg(long, env = "WOE_POLICY", default_value = "random:C1,C2,C3")]
        policy: ConditionPolicy,
        #[arg(long, env = "WOE_BIND", default_value = "127.0.0.1:8080")]
        bind: std::net::SocketAddr,
        #[arg(long, env = "WOE_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, env = "WOE_LOG_DIR")]
        log_dir: Option<PathBuf>,
        #[arg(long)]
        gamma: Option<Numbers>,
    },
    /// Rebuild a session export from its log file.
    Export {
        #[arg(long, conflicts_with_all = ["log_dir", "session"])]
        log: Option<PathBuf>,
        #[arg(long, requires = "session")]
        log_dir: Option<PathBuf>,
        #[arg(long, requires = "log_dir")]
        session: Option<String>,
        #[arg(long, value_enum, default_value = "doc")]
        format: Format,
    },
}

struct LoadedModel {
    model: GaussianEvidenceModel,
    scale: SignificanceScale,
    gamma: Option<Vec<f64>>,
}

fn load_model(path: &Path) -> Result<LoadedModel, CliError> {
    let doc = ModelDocument::load(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let gamma = doc.gamma_defaults.clone();
    let (model, scale) = doc.into_model().map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(LoadedModel { model, scale, gamma })
}

enum Loaded {
    Table(LabeledTable),
    Concepts(ConceptActivationTable),
}

impl Loaded {
    fn table(&self) -> LabeledTable {
        match self {
            Self::Table(t) => t.clone(),
            Self::Concepts(c) => c.to_table(),
        }
    }

    fn id(&self, row: usize) -> String {
        match self {
            Self::Table(_) => format!("row-{row}"),
            Self::Concepts(c) => c.instance_ids()[row].clone(),
        }
    }
}

fn load_input(input: &Input, model: Option<&GaussianEvidenceModel>) -> Result<Loaded, CliError> {
    if let Some(path) = &input.data {
        let mut schema = CsvSchema::new(&input.label_column);
        if let Some(m) = model {
            schema = schema
                .with_label_names(m.labels().iter().map(|l| l.name.clone()).collect())
                .with_feature_columns(m.feature_names().to_vec());
        }
        return load_csv(path, &schema).map(Loaded::Table).map_err(data);
    }
    if let Some(path) = &input.concepts {
        let table = load_concepts(path).map_err(data)?;
        if let Some(m) = model {
            if table.concept_names() != m.feature_names() {
                return Err(CliError::Data(format!(
                    "{}: concepts do not match the model's features",
                    path.display()
                )));
            }
        }
        return Ok(Loaded::Concepts(table));
    }
    Err(CliError::Usage("one of --data or --concepts is required".into()))
}

/// `(row, values, true label)`; row and label are absent for `--values`.
type Point = (Option<usize>, Vec<f64>, Option<usize>);

fn instance_values(instance: &Instance, model: &GaussianEvidenceModel) -> Result<Vec<Point>, CliError> {
    if let Some(Numbers(v)) = &instance.values {
        return Ok(vec![(None, v.clone(), None)]);
    }
    let table = load_input(&instance.input, Some(model))?.table();
    let rows: Vec<usize> = match instance.row {
        Some(r) if r >= table.len() => {
            return Err(CliError::Data(format!("row {r} out of range for {} rows", table.len())))
        }
        Some(r) => vec![r],
        None => (0..table.len()).collect(),
    };
    Ok(rows
        .into_iter()
        .map(|r| (Some(r), table.rows()[r].clone(), Some(table.labels()[r])))
        .collect())
}

#[derive(Serialize)]
struct Classification {
    #[serde(skip_serializing_if = "Option::is_none")]
    row: Option<usize>,
    label: Label,
    #[serde(skip_serializing_if = "Option::is_none")]
    true_label: Option<usize>,
    posterior: Vec<f64>,
    total_woe: Vec<f64>,
}

#[derive(Serialize)]
struct SessionMetrics {
    session_id: String,
    file: String,
    decisions: usize,
    participant: Option<ParticipantSummary>,
    selected_hypotheses_pct: Option<f64>,
}

fn emit<T: Serialize>(format: Format, value: &T, human: impl FnOnce(&T) -> String) -> String {
    match format {
        Format::Doc => to_document(value) + "\n",
        Format::Human => human(value),
    }
}

fn run(command: Command) -> CliResult {
    match command {
        Command::Fit {
            input,
            assumption,
            ridge,
            gamma,
            balance: balancing,
            holdout,
            seed,
            out,
            format,
        } => {
            let mut table = load_input(&input, None)?.table();
            if let Some(b) = balancing {
                let strategy = match b {
                    Balance::Nearmiss => BalanceStrategy::NearMiss1 { k: 3 },
                    Balance::Random => BalanceStrategy::RandomUndersample,
                };
                table = balance(&table, strategy, seed).map_err(data)?;
            }
            let (train, test) = match holdout {
                Some(f) => {
                    let (train, test) = split(&table, 1.0 - f, seed).map_err(data)?;
                    (train, Some(test))
                }
                None => (table, None),
            };
            let model = GaussianEvidenceModel::fit(&train, assumption, ridge).map_err(data)?;
            let mut doc = ModelDocument::from_model(&model, &SignificanceScale::default());
            if let Some(Numbers(g)) = gamma {
                model.check_gamma(&g).map_err(data)?;
                doc = doc.with_gamma(g);
            }
            if let Some(path) = &out {
                doc.save(path).map_err(data)?;
            }
            let accuracy = match &test {
                Some(t) => {
                    let mut hits = 0usize;
                    for (x, &y) in t.rows().iter().zip(t.labels()) {
                        hits += usize::from(model.classify(x).map_err(data)? == y);
                    }
                    Some(hits as f64 / t.len() as f64)
                }
                None => None,
            };
            Ok(match format {
                Format::Doc => doc.to_json() + "\n",
                Format::Human => render::fit_summary(&model, train.len(), accuracy),
            })
        }
        Command::Classify { model, instance, format } => {
            let m = load_model(&model)?.model;
            let mut out = Vec::new();
            for (row, x, true_label) in instance_values(&instance, &m)? {
                let label = m.classify(&x).map_err(data)?;
                out.push(Classification {
                    row,
                    label: m.labels()[label].clone(),
                    true_label,
                    posterior: m.posterior(&x).map_err(data)?,
                    total_woe: (0..m.num_classes())
                        .map(|h| m.total_woe(&x, h, None))
                        .collect::<Result<_, _>>()
                        .map_err(data)?,
                });
            }
            Ok(emit(format, &out, |c| render::classifications(&m, c)))
        }
        Command::Explain {
            model,
            instance,
            condition,
            gamma,
            format,
        } => {
            let loaded = load_model(&model)?;
            if instance.values.is_none() && instance.row.is_none() {
                return Err(CliError::Usage("explain needs --values or --row".into()));
            }
            let (_, x, _) = instance_values(&instance, &loaded.model)?.remove(0);
            let gamma = gamma.map(|Numbers(g)| g).or(loaded.gamma);
            let view = condition_view(&loaded.model, &x, condition, gamma.as_deref(), &loaded.scale).map_err(data)?;
            Ok(emit(format, &view, render::view))
        }
        Command::SelectInstances {
            model,
            input,
            low,
            high,
            per_category,
            pool_out,
            format,
        } => {
            let m = load_model(&model)?.model;
            let loaded = load_input(&input, Some(&m))?;
            let table = loaded.table();
            let selection = select_instances(&m, &table, low, high, per_category).map_err(data)?;
            if !selection.shortfall.is_empty() {
                let names: Vec<&str> = selection.shortfall.iter().map(|c| c.name()).collect();
                eprintln!("warning: too few instances for: {}", names.join(", "));
            }
            if let Some(path) = &pool_out {
                write_pool(&selection, &table, &loaded, path)?;
            }
            Ok(emit(format, &selection, render::selection))
        }
        Command::Evaluate { exports, format } => {
            let mut rows = Vec::new();
            for path in &exports {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
                let doc = ExportDocument::from_json(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
                let summary = doc.recompute_summary().map_err(data)?;
                if summary != doc.summary {
                    return Err(CliError::Data(format!("{}: stored summary does not match its records", path.display())));
                }
                rows.push(SessionMetrics {
                    session_id: doc.session.id.clone(),
                    file: path.display().to_string(),
                    decisions: summary.decisions,
                    participant: summary.participant,
                    selected_hypotheses_pct: summary.selected_hypotheses_pct,
                });
            }
            Ok(emit(format, &rows, |r| render::metrics_table(r.iter().map(|m| {
                (m.session_id.as_str(), m.decisions, m.participant.as_ref(), m.selected_hypotheses_pct)
            }))))
        }
        Command::Serve {
            model,
            tasks,
            input,
            policy,
            bind,
            seed,
            log_dir,
            gamma,
        } => {
            let loaded = load_model(&model)?;
            let pool = match &tasks {
                Some(path) => TaskPool::load(path).map_err(data)?,
                None => match load_input(&input, Some(&loaded.model))? {
                    Loaded::Table(t) => TaskPool::from_table(&t, None).map_err(data)?,
                    Loaded::Concepts(c) => TaskPool::from_concepts(&c).map_err(data)?,
                },
            };
            let config = ServiceConfig {
                model: loaded.model,
                scale: loaded.scale,
                gamma: gamma.map(|Numbers(g)| g).or(loaded.gamma),
                tasks: pool,
                policy,
                seed,
                log_dir,
            };
            let service = Arc::new(StudyService::new(config, Arc::new(SystemClock)).map_err(data)?);
            let _ = tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env()
                        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
                )
                .with_writer(std::io::stderr)
                .try_init();
            let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Internal(e.to_string()))?;
            runtime
                .block_on(woe_service::serve(service, bind))
                .map_err(|e| CliError::Internal(format!("{bind}: {e}")))?;
            Ok(String::new())
        }
        Command::Export {
            log,
            log_dir,
            session,
            format,
        } => {
            let path = match (log, log_dir, session) {
                (Some(p), _, _) => p,
                (None, Some(dir), Some(id)) => dir.join(format!("{id}.jsonl")),
                _ => return Err(CliError::Usage("give --log, or --log-dir with --session".into())),
            };
            let state = read_session_log(&path).map_err(data)?;
            let doc = ExportDocument::from_state(&state).map_err(data)?;
            Ok(match format {
                Format::Doc => doc.to_json() + "\n",
                Format::Human => render::metrics_table(std::iter::once((
                    doc.session.id.as_str(),
                    doc.summary.decisions,
                    doc.summary.participant.as_ref(),
                    doc.summary.selected_hypotheses_pct,
                ))),
            })
        }
    }
}

fn write_pool(selection: &InstanceSelection, table: &LabeledTable, loaded: &Loaded, path: &Path) -> Result<(), CliError> {
    let rows: Vec<usize> = selection.categories.values().flatten().map(|s| s.index).collect();
    let subset = table.select(&rows);
    let ids = rows.iter().map(|&r| loaded.id(r)).collect();
    let pool = TaskPool::from_table(&subset, Some(ids)).map_err(data)?;
    std::fs::write(path, pool.to_json() + "\n").map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
