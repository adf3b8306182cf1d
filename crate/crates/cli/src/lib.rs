//! The `rr` command line.
//!
//! Exit codes: 0 on success, 1 when the input is invalid or a check fails
//! (validation errors, constraint violations, rejected receipts), 2 on usage
//! errors, 3 on I/O and store errors.
//!
//! `--json` switches every subcommand to compact machine output with fields
//! in a fixed order.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use route_receipt::normalize::{extract_fragment_at, merge, Envelope, ProviderSurface};
use route_receipt::policy::{evaluate, ConstraintPolicy, Violation};
use route_receipt::receipt::{canonical_serialize, parse_receipt, Timestamp};
use route_receipt::redact::{end_user_labels_with, view_for, LabelContext, RedactionPolicy};
use route_receipt::store::{
    AggregateValue, Metric, ReceiptFilter, ReceiptStore, StoreConfig, StoreError, TimeWindow, ENV_STORE_PATH,
};
use route_receipt::{export_schema, validate_document, Audience, RouteReceipt};
use route_receipt_gateway::probes::{
    run_alias_drift_probe, run_fallback_probe, AliasDriftProbe, EventDetail, FallbackProbe, FallbackTrigger,
    ProbeError, ProbeReport,
};
use route_receipt_gateway::scenario::ScenarioError;
use route_receipt_gateway::{Clock, ServiceConfig, SimScenario, SystemClock};
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "rr", version, about = "Route receipt toolkit")]
pub struct Cli {
    /// Compact machine-readable output.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a receipt against the schema and for internal contradictions.
    Validate { file: PathBuf },
    /// Show a receipt as one audience sees it.
    View {
        #[arg(long)]
        audience: Audience,
        /// Redaction policy file; the built-in default otherwise.
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Model the same alias resolved to last time, for the update label.
        #[arg(long)]
        previous_model: Option<String>,
        /// Effective tiers that count as fast mode.
        #[arg(long = "fast-tier")]
        fast_tiers: Vec<String>,
        file: PathBuf,
    },
    /// Build a receipt from provider metadata and an envelope.
    Normalize {
        #[arg(long)]
        surface: ProviderSurface,
        #[arg(long)]
        envelope: PathBuf,
        #[arg(required = true)]
        raw: Vec<PathBuf>,
    },
    /// Check receipts against a route-constraint policy.
    Eval {
        #[arg(long)]
        policy: PathBuf,
        /// One receipt, or JSONL.
        input: PathBuf,
    },
    /// Compute a metric over a stored time window.
    Aggregate {
        #[arg(long)]
        metric: Metric,
        #[arg(long)]
        from: Option<Timestamp>,
        #[arg(long)]
        to: Option<Timestamp>,
        #[arg(long)]
        requested_model: Option<String>,
        #[arg(env = ENV_STORE_PATH)]
        store: PathBuf,
    },
    /// Run a probe against a simulator scenario.
    #[command(subcommand)]
    Probe(ProbeCommand),
    /// Print the receipt JSON Schema.
    Schema,
    /// Run the HTTP gateway.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Append receipts to a store.
    Ingest {
        #[arg(long, env = ENV_STORE_PATH)]
        store: PathBuf,
        /// One receipt, or JSONL.
        input: PathBuf,
    },
    /// Write stored receipts as JSONL, redacted for an audience.
    Export {
        #[arg(long, env = ENV_STORE_PATH)]
        store: PathBuf,
        #[arg(long, default_value = "auditor")]
        audience: Audience,
        /// Redaction policy file; without one nothing is redacted.
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long)]
        from: Option<Timestamp>,
        #[arg(long)]
        to: Option<Timestamp>,
    },
    /// Replace receipts past their retention with tombstones.
    Purge {
        #[arg(long, env = ENV_STORE_PATH)]
        store: PathBuf,
        /// Store config file with retention rules.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Evaluate expiry at this instant instead of now.
        #[arg(long)]
        now: Option<Timestamp>,
    },
}

#[derive(Debug, Subcommand)]
pub enum ProbeCommand {
    /// Report each request index where an alias starts resolving differently.
    AliasDrift {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long = "alias", required = true)]
        aliases: Vec<String>,
        #[arg(long = "prompt")]
        prompts: Vec<String>,
        #[arg(long, default_value_t = 100)]
        n: u64,
    },
    /// Force fallbacks and check that receipts show them.
    Fallback {
        #[arg(long)]
        scenario: PathBuf,
        /// KIND@INDEX, e.g. rate_limit@3.
        #[arg(long = "trigger", value_parser = parse_trigger)]
        triggers: Vec<FallbackTrigger>,
        #[arg(long, default_value = "developer")]
        audience: Audience,
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long)]
        model: Option<String>,
    },
}

fn parse_trigger(s: &str) -> Result<FallbackTrigger, String> {
    let (kind, index) = s.split_once('@').ok_or("expected KIND@INDEX")?;
    let kind =
        serde_json::from_value(serde_json::Value::from(kind)).map_err(|_| format!("unknown trigger kind {kind:?}"))?;
    let request_index = index.parse().map_err(|e| format!("bad index {index:?}: {e}"))?;
    Ok(FallbackTrigger { kind, request_index })
}

/// Why a command did not succeed.
#[derive(Debug)]
enum Failure {
    /// Output was produced but the check it reports did not pass.
    Unclean,
    Invalid(String),
    Usage(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Unclean | Failure::Invalid(_) => EXIT_INVALID,
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Io(_) => EXIT_IO,
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Duplicate(_)
            | StoreError::Invalid(_)
            | StoreError::NotFound(_)
            | StoreError::Purged(_)
            | StoreError::Import { .. } => Failure::Invalid(e.to_string()),
            other => Failure::Io(other.to_string()),
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Read { .. } => Failure::Io(e.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

impl From<ProbeError> for Failure {
    fn from(e: ProbeError) -> Self {
        Failure::Invalid(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(()) => EXIT_OK,
        Err(failure) => {
            match &failure {
                Failure::Unclean => {}
                Failure::Invalid(m) | Failure::Usage(m) | Failure::Io(m) => {
                    let _ = writeln!(err, "rr: {m}");
                }
            }
            failure.code()
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn emit<T: Serialize>(out: &mut dyn Write, value: &T) -> Outcome {
    let text = serde_json::to_string(value).map_err(|e| Failure::Io(e.to_string()))?;
    writeln!(out, "{text}")?;
    Ok(())
}

fn pretty<T: Serialize>(out: &mut dyn Write, value: &T) -> Outcome {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
    writeln!(out, "{text}")?;
    Ok(())
}

fn redaction_policy(path: Option<&Path>, fallback: RedactionPolicy) -> Result<RedactionPolicy, Failure> {
    match path {
        Some(p) => RedactionPolicy::from_json(&read(p)?).map_err(|e| Failure::Invalid(format!("{}: {e}", p.display()))),
        None => Ok(fallback),
    }
}

/// One receipt, or one per non-empty line. Line numbers start at 1.
fn receipts_in(path: &Path) -> Result<Vec<RouteReceipt>, Failure> {
    let text = read(path)?;
    if serde_json::from_str::<serde_json::Value>(&text).is_ok() {
        return parse_receipt(&text)
            .map(|r| vec![r])
            .map_err(|e| Failure::Invalid(format!("{}: {}", path.display(), e.report())));
    }
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            parse_receipt(line).map_err(|e| Failure::Invalid(format!("{}:{}: {}", path.display(), i + 1, e.report())))
        })
        .collect()
}

fn window(from: &Option<Timestamp>, to: &Option<Timestamp>) -> Result<TimeWindow, Failure> {
    TimeWindow::new(from.clone(), to.clone()).map_err(|e| Failure::Usage(e.to_string()))
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let json = cli.json;
    match &cli.command {
        Command::Validate { file } => {
            let report = validate_document(&read(file)?);
            if json {
                emit(out, &report)?;
            } else {
                if report.is_valid() {
                    writeln!(out, "valid")?;
                } else {
                    writeln!(out, "invalid: {} error(s)", report.errors.len())?;
                }
                for e in &report.errors {
                    writeln!(
                        out,
                        "error   {:<28} {:<16} {}",
                        path_or_root(&e.path),
                        snake(&e.kind),
                        e.detail
                    )?;
                }
                for w in &report.warnings {
                    writeln!(
                        out,
                        "warning {:<28} {:<16} {}",
                        path_or_root(&w.path),
                        snake(&w.code),
                        w.detail
                    )?;
                }
            }
            if report.is_valid() {
                Ok(())
            } else {
                Err(Failure::Unclean)
            }
        }

        Command::View {
            audience,
            policy,
            previous_model,
            fast_tiers,
            file,
        } => {
            let receipt = parse_receipt(&read(file)?).map_err(|e| Failure::Invalid(e.report().to_string()))?;
            let policy = redaction_policy(policy.as_deref(), RedactionPolicy::default_policy())?;
            let view = view_for(&receipt, *audience, &policy);
            if json {
                writeln!(out, "{}", canonical_serialize(&view.receipt))?;
                return Ok(());
            }
            if *audience == Audience::EndUser {
                let ctx = LabelContext {
                    previous_resolved_model: previous_model.clone(),
                    fast_tiers: fast_tiers.clone(),
                };
                for label in end_user_labels_with(&receipt, &ctx) {
                    writeln!(out, "{label}")?;
                }
                writeln!(out)?;
            }
            pretty(out, &view.receipt)
        }

        Command::Normalize { surface, envelope, raw } => {
            let envelope: Envelope = serde_json::from_str(&read(envelope)?)
                .map_err(|e| Failure::Invalid(format!("{}: {e}", envelope.display())))?;
            let mut fragments = Vec::new();
            for path in raw {
                let doc: serde_json::Value = serde_json::from_str(&read(path)?)
                    .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
                let fragment = extract_fragment_at(*surface, &doc, envelope.served_at.clone())
                    .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
                fragments.push(fragment);
            }
            let merged = merge(&envelope, &fragments).map_err(|e| Failure::Invalid(e.to_string()))?;
            for w in &merged.warnings {
                writeln!(
                    err,
                    "warning {} {}: {}",
                    path_or_root(&w.path),
                    snake(&w.code),
                    w.detail
                )?;
            }
            if json {
                writeln!(out, "{}", canonical_serialize(&merged.receipt))?;
                Ok(())
            } else {
                pretty(out, &merged.receipt)
            }
        }

        Command::Eval { policy, input } => {
            let policy = ConstraintPolicy::from_json(&read(policy)?)
                .map_err(|e| Failure::Invalid(format!("{}: {e}", policy.display())))?;
            #[derive(Serialize)]
            struct Evaluated {
                receipt_id: String,
                violations: Vec<Violation>,
            }
            let results: Vec<Evaluated> = receipts_in(input)?
                .iter()
                .map(|r| Evaluated {
                    receipt_id: r.receipt_id.clone(),
                    violations: evaluate(r, &policy),
                })
                .collect();
            let violated = results.iter().filter(|e| !e.violations.is_empty()).count();
            if json {
                emit(out, &results)?;
            } else {
                for e in &results {
                    if e.violations.is_empty() {
                        writeln!(out, "{}: ok", e.receipt_id)?;
                    }
                    for v in &e.violations {
                        writeln!(
                            out,
                            "{}: {} at {}: expected {}, observed {}",
                            e.receipt_id,
                            snake(&v.code),
                            v.field_path,
                            v.expected,
                            v.observed
                        )?;
                    }
                }
                writeln!(out, "{violated} of {} receipt(s) violate the policy", results.len())?;
            }
            if violated == 0 {
                Ok(())
            } else {
                Err(Failure::Unclean)
            }
        }

        Command::Aggregate {
            metric,
            from,
            to,
            requested_model,
            store,
        } => {
            let mut filter = ReceiptFilter::in_window(window(from, to)?);
            filter.requested_model = requested_model.clone();
            let store = ReceiptStore::open_read_only(store)?;
            let report = store.aggregate(*metric, &filter);
            if json {
                return emit(out, &report);
            }
            match &report.value {
                AggregateValue::Rate(r) => {
                    writeln!(out, "{metric} = {r:.4} ({}/{})", report.numerator, report.denominator)?
                }
                AggregateValue::Histogram(h) => {
                    writeln!(out, "{metric} over {} receipt(s)", report.denominator)?;
                    for (model, n) in h {
                        writeln!(out, "  {model:<40} {n}")?;
                    }
                }
            }
            Ok(())
        }

        Command::Probe(probe) => {
            let report = match probe {
                ProbeCommand::AliasDrift {
                    scenario,
                    aliases,
                    prompts,
                    n,
                } => {
                    let scenario = SimScenario::load(scenario)?;
                    let mut probe: AliasDriftProbe = serde_json::from_value(serde_json::json!({
                        "aliases": aliases,
                        "n": n,
                    }))
                    .expect("probe shape");
                    if !prompts.is_empty() {
                        probe.prompts = prompts.clone();
                    }
                    run_alias_drift_probe(&probe, &scenario)?
                }
                ProbeCommand::Fallback {
                    scenario,
                    triggers,
                    audience,
                    policy,
                    model,
                } => {
                    let scenario = SimScenario::load(scenario)?;
                    let policy = redaction_policy(policy.as_deref(), RedactionPolicy::default_policy())?;
                    let probe = FallbackProbe {
                        triggers: triggers.clone(),
                        model: model.clone(),
                        audience: *audience,
                    };
                    run_fallback_probe(&probe, &scenario, &policy)?
                }
            };
            if json {
                emit(out, &report)
            } else {
                write!(out, "{}", render_probe(&report))?;
                Ok(())
            }
        }

        Command::Schema => {
            let schema = export_schema();
            out.write_all(schema.as_bytes())?;
            if !schema.ends_with('\n') {
                writeln!(out)?;
            }
            Ok(())
        }

        Command::Serve { config } => {
            let config = ServiceConfig::load(config.as_deref()).map_err(|e| Failure::Usage(e.to_string()))?;
            writeln!(err, "rr: listening on {}", config.listen)?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime
                .block_on(route_receipt_gateway::http::serve(&config))
                .map_err(|e| Failure::Io(e.to_string()))
        }

        Command::Ingest { store, input } => {
            let receipts = receipts_in(input)?;
            let store = ReceiptStore::open(store)?;
            for r in &receipts {
                store.append(r)?;
            }
            #[derive(Serialize)]
            struct Ingested {
                appended: usize,
            }
            if json {
                emit(
                    out,
                    &Ingested {
                        appended: receipts.len(),
                    },
                )
            } else {
                writeln!(out, "appended {} receipt(s)", receipts.len())?;
                Ok(())
            }
        }

        Command::Export {
            store,
            audience,
            policy,
            from,
            to,
        } => {
            let filter = ReceiptFilter::in_window(window(from, to)?);
            let policy = redaction_policy(policy.as_deref(), RedactionPolicy::open())?;
            let store = ReceiptStore::open_read_only(store)?;
            let n = store.export_jsonl(&filter, *audience, &policy, &mut *out)?;
            writeln!(err, "rr: exported {n} receipt(s)")?;
            Ok(())
        }

        Command::Purge { store, config, now } => {
            let mut config = StoreConfig::load(config.as_deref()).map_err(|e| Failure::Usage(e.to_string()))?;
            config.path = Some(store.clone());
            let store = ReceiptStore::from_config(&config)?;
            let now = now.clone().unwrap_or_else(|| SystemClock.now());
            let report = store.enforce_configured_retention(&now)?;
            if json {
                emit(out, &report)
            } else {
                writeln!(out, "purged {} receipt(s)", report.purged.len())?;
                for id in &report.purged {
                    writeln!(out, "  {id}")?;
                }
                Ok(())
            }
        }
    }
}

fn path_or_root(path: &str) -> &str {
    if path.is_empty() {
        "/"
    } else {
        path
    }
}

fn snake<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        _ => String::from("?"),
    }
}

fn render_probe(report: &ProbeReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{}: {} event(s) over {} request(s)",
        snake(&report.probe),
        report.summary.events,
        report.summary.requests
    );
    for e in &report.events {
        match &e.detail {
            EventDetail::Drift { alias, from, to } => {
                let _ = writeln!(s, "  #{:<6} {alias}: {from} -> {to}", e.request_index);
            }
            EventDetail::Fallback {
                kind,
                completion_status,
                visible,
                matches_decision_log,
            } => {
                let _ = writeln!(
                    s,
                    "  #{:<6} {:<18} status={} from={} to={} reason={} completion={} log={}",
                    e.request_index,
                    snake(kind),
                    visible.status,
                    visible.from,
                    visible.to,
                    visible.reason,
                    snake(completion_status),
                    if *matches_decision_log { "agrees" } else { "DISAGREES" }
                );
            }
        }
    }
    if let Some(all) = report.summary.all_visible {
        let _ = writeln!(s, "all fallbacks visible: {all}");
    }
    s
}
