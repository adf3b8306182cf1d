//! Acceptance criteria 1 through 10. Prints one line per criterion and exits
//! nonzero if any criterion fails or runs past its time limit.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use proptest::sample::select;
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use route_receipt::normalize::{extract_fragment_at, merge, AttemptOutcome, Envelope, ProviderSurface, SimulatedRoute};
use route_receipt::policy::{evaluate, ConstraintPolicy, ViolationCode};
use route_receipt::receipt::{
    schema_value, validate_document, validate_value, EffortLevel, ErrorKind, FallbackReason, FallbackStatus,
    RedactionEntry, RedactionReason, RegionClass, RetentionClass, SafetyStatus, Timestamp,
};
use route_receipt::redact::{field_state, view_for, FieldState, RedactionPolicy, RedactionRule, REDACTABLE_FIELDS};
use route_receipt::store::{Metric, ReceiptFilter, ReceiptStore, RetentionRules, TimeWindow};
use route_receipt::{export_schema, Audience, RouteReceipt};
use route_receipt_gateway::probes::{run_alias_drift_probe, AliasDriftProbe};
use route_receipt_gateway::scenario::AliasStep;
use route_receipt_gateway::{
    CompletionExchange, CompletionRequest, FixedClock, Gateway, IdSource, SimScenario, SimulatedUpstream, StepClock,
};
use serde_json::Value;

type Outcome = Result<String, String>;

macro_rules! check {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err(format!($($arg)+));
        }
    };
}

fn manifest() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn read(rel: &str) -> String {
    let path = manifest().join(rel);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn golden(name: &str) -> String {
    read(&format!("../core/fixtures/golden/{name}"))
}

fn scenario(name: &str) -> SimScenario {
    SimScenario::load(&manifest().join("fixtures/scenarios").join(name)).unwrap()
}

fn doc(r: &RouteReceipt) -> Value {
    serde_json::to_value(r).unwrap()
}

fn at(text: &str) -> Timestamp {
    text.parse().unwrap()
}

// ---- 1 -------------------------------------------------------------------

/// The published v0.1 schema listing, frozen as written.
fn published_schema() -> Value {
    serde_json::from_str(&read("../core/fixtures/schema/route_receipt.v0.1.schema.json")).expect("listing is JSON")
}

fn schema_fidelity() -> Outcome {
    let ours: Value = serde_json::from_str(export_schema()).map_err(|e| e.to_string())?;
    check!(
        ours == published_schema(),
        "exported schema differs from the published listing"
    );
    let required = ours["required"].as_array().unwrap();
    check!(required.len() == 10, "{} required fields", required.len());
    let reasons = ours.pointer("/properties/fallback/properties/reason/enum").unwrap();
    check!(
        reasons.as_array().unwrap().contains(&Value::from("moderation_refusal")),
        "moderation_refusal missing"
    );
    let defs: BTreeSet<&str> = ours["$defs"].as_object().unwrap().keys().map(String::as_str).collect();
    check!(
        defs == BTreeSet::from(["provider_hop", "redaction", "tool_use"]),
        "$defs {defs:?}"
    );
    Ok(format!("{} required, {} $defs", required.len(), defs.len()))
}

// ---- 2 -------------------------------------------------------------------

fn golden_receipt() -> Outcome {
    let report = validate_document(&golden("golden_s7.json"));
    check!(report.errors.is_empty(), "golden: {report}");
    check!(report.warnings.is_empty(), "golden warnings: {:?}", report.warnings);

    let mut embedded: Value = serde_json::from_str(&golden("envelope_minimal.json")).unwrap();
    let fragment: Value = serde_json::from_str(&golden("fragment_s6_1.json")).unwrap();
    let obj = embedded.as_object_mut().unwrap();
    obj.insert("schema_version".into(), Value::from("route-receipt.v0.1"));
    obj.insert("safety".into(), serde_json::json!({"status": "unknown"}));
    for (k, v) in fragment.as_object().unwrap() {
        obj.insert(k.clone(), v.clone());
    }
    let report = validate_value(&embedded);
    check!(report.errors.is_empty(), "fragment in envelope: {report}");
    Ok("0 errors, 0 warnings".into())
}

// ---- 3 -------------------------------------------------------------------

fn resolve(node: &Value) -> &Value {
    match node.get("$ref").and_then(Value::as_str) {
        Some(r) => schema_value().pointer(r.trim_start_matches('#')).unwrap(),
        None => node,
    }
}

fn enum_paths(v: &Value, schema: &Value, here: String, out: &mut Vec<String>) {
    let schema = resolve(schema);
    if schema.get("enum").is_some() {
        out.push(here.clone());
    }
    match v {
        Value::Object(m) => {
            for (k, child) in m {
                if let Some(s) = schema.pointer(&format!("/properties/{k}")) {
                    enum_paths(child, s, format!("{here}/{k}"), out);
                }
            }
        }
        Value::Array(items) => {
            if let Some(s) = schema.get("items") {
                for (i, child) in items.iter().enumerate() {
                    enum_paths(child, s, format!("{here}/{i}"), out);
                }
            }
        }
        _ => {}
    }
}

fn mutation_suite() -> Outcome {
    let base: Value = serde_json::from_str(&golden("golden_s7.json")).unwrap();
    let required: Vec<String> = schema_value()["required"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_owned())
        .collect();
    for field in &required {
        let mut d = base.clone();
        d.as_object_mut().unwrap().remove(field);
        let errors = validate_value(&d).errors;
        check!(errors.len() == 1, "deleting {field}: {errors:?}");
        check!(
            errors[0].kind == ErrorKind::MissingRequired && errors[0].path == format!("/{field}"),
            "deleting {field}: {:?}",
            errors[0]
        );
    }

    let full: Value = serde_json::from_str(&golden("full.json")).unwrap();
    let mut paths = Vec::new();
    enum_paths(&full, schema_value(), String::new(), &mut paths);
    for path in &paths {
        let mut d = full.clone();
        *d.pointer_mut(path).unwrap() = Value::from("zz-not-a-member");
        let errors = validate_value(&d).errors;
        check!(errors.len() == 1, "substituting {path}: {errors:?}");
        check!(
            errors[0].kind == ErrorKind::BadEnum && &errors[0].path == path,
            "substituting {path}: {:?}",
            errors[0]
        );
    }
    Ok(format!(
        "{} deletions, {} enum substitutions",
        required.len(),
        paths.len()
    ))
}

// ---- 4 -------------------------------------------------------------------

fn random_policy() -> impl Strategy<Value = RedactionPolicy> {
    let fields: Vec<&str> = REDACTABLE_FIELDS.iter().map(|(p, _)| *p).collect();
    proptest::collection::btree_map(
        select(fields),
        (select(RedactionReason::ALL.to_vec()), select(Audience::ALL.to_vec())),
        0..8,
    )
    .prop_map(|rules| {
        let rules = rules
            .into_iter()
            .map(|(field, (reason, from))| RedactionRule {
                field_path: field.to_owned(),
                reason,
                visible_to: from.and_wider().collect(),
            })
            .collect();
        RedactionPolicy::new(rules, Default::default()).unwrap()
    })
}

fn shown(r: &RouteReceipt) -> BTreeSet<&'static str> {
    let d = doc(r);
    REDACTABLE_FIELDS
        .iter()
        .filter(|(p, _)| matches!(field_state(&d, p), FieldState::Shown(_)))
        .map(|(p, _)| *p)
        .collect()
}

fn redaction_properties() -> Outcome {
    const RECEIPTS: usize = 1000;
    let mut runner = TestRunner::new_with_rng(Config::default(), TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    let receipts = common::receipt();
    let policies = random_policy();
    let mut views = 0;
    for n in 0..RECEIPTS {
        let r = receipts.new_tree(&mut runner).unwrap().current();
        let p = if n % 10 == 0 {
            RedactionPolicy::default_policy()
        } else {
            policies.new_tree(&mut runner).unwrap().current()
        };
        let full = shown(&r);
        let mut previous: Option<BTreeSet<&str>> = None;
        for a in Audience::ALL.iter().copied() {
            let v = view_for(&r, a, &p).receipt;
            views += 1;
            let report = validate_value(&doc(&v));
            check!(report.is_valid(), "receipt {n}, {a}: view invalid: {report}");
            let visible = shown(&v);
            if let Some(narrower) = &previous {
                check!(
                    narrower.is_subset(&visible),
                    "receipt {n}: {a} sees less than a narrower audience"
                );
            }
            for field in full.difference(&visible) {
                let covers = |e: &RedactionEntry| {
                    e.field == *field
                        || field.starts_with(&format!("{}.", e.field))
                        || e.field.starts_with(&format!("{field}."))
                };
                check!(
                    v.redactions.iter().any(|e| covers(e) && !e.is_visible_to(a)),
                    "receipt {n}: {a} lost {field} without a bookkeeping entry"
                );
            }
            previous = Some(visible);
        }
    }
    Ok(format!("{RECEIPTS} receipts, {views} views"))
}

// ---- 5 -------------------------------------------------------------------

/// Drops insignificant whitespace, keeping member order as printed.
fn minify(text: &str) -> String {
    let mut out = String::new();
    let mut in_string = false;
    let mut escaped = false;
    for c in text.chars() {
        if in_string {
            out.push(c);
            match (escaped, c) {
                (true, _) => escaped = false,
                (false, '\\') => escaped = true,
                (false, '"') => in_string = false,
                _ => {}
            }
        } else if c == '"' {
            in_string = true;
            out.push(c);
        } else if !c.is_whitespace() {
            out.push(c);
        }
    }
    out
}

fn normalization_table() -> Outcome {
    let observed = at("2026-06-15T14:05:00Z");
    let envelope: Envelope = serde_json::from_str(&golden("envelope_minimal.json")).unwrap();
    let receipt_for = |surface: ProviderSurface| {
        let raw: Value =
            serde_json::from_str(&read(&format!("../core/fixtures/surfaces/{}.json", surface.as_str()))).unwrap();
        let fragment = extract_fragment_at(surface, &raw, observed.clone()).unwrap();
        (fragment.clone(), merge(&envelope, &[fragment]).unwrap().receipt)
    };

    for (surface, tier) in [
        (ProviderSurface::OpenaiPriority, "default"),
        (ProviderSurface::AnthropicTiers, "standard"),
        (ProviderSurface::BedrockTiers, "priority"),
    ] {
        let (_, r) = receipt_for(surface);
        check!(
            r.effective_tier() == Some(tier),
            "{surface:?}: effective tier {:?}",
            r.effective_tier()
        );
    }

    let (_, r) = receipt_for(ProviderSurface::OpenaiWebSearch);
    let used = r.tools_used();
    check!(
        used.len() == 1 && used[0].name == "web_search" && used[0].invocation_count == 1,
        "web search summary {used:?}"
    );

    let (_, r) = receipt_for(ProviderSurface::OpenrouterFallback);
    check!(
        r.resolved_model.as_deref() == Some("m-b"),
        "resolved {:?}",
        r.resolved_model
    );
    check!(
        r.requested_model.as_deref() == Some("m-a"),
        "requested {:?}",
        r.requested_model
    );
    // the surface returns the model only; endpoints stay unset
    check!(
        r.fallback.status == FallbackStatus::Occurred && r.fallback.from.is_none() && r.fallback.to.is_none(),
        "fallback {:?}",
        r.fallback
    );

    let (fragment, _) = receipt_for(ProviderSurface::OpenaiPriority);
    let printed = minify(&golden("fragment_s6_1.json"));
    let ours = fragment.partial.canonical();
    check!(
        ours == printed,
        "fragment bytes differ:\n  ours    {ours}\n  printed {printed}"
    );
    Ok(format!("5 surfaces, fragment {} bytes identical", ours.len()))
}

// ---- 6 -------------------------------------------------------------------

fn northstar_requests() -> CompletionRequest {
    let mut req = CompletionRequest::new("contract-pro-latest");
    req.service_tier = Some("priority".into());
    req.effort = Some(EffortLevel::High);
    req.tools = Some(vec!["file_search".into()]);
    req.region = Some(RegionClass::UserSelectedRegion);
    req
}

fn northstar_forensics() -> Outcome {
    const N: usize = 200;
    let mut s = scenario("northstar.json");
    s.alias_table.insert(
        "contract-pro-latest".into(),
        vec![AliasStep {
            snapshot: "contract-pro-2026-04-18".into(),
            active_from: 0,
        }],
    );
    let store = Arc::new(ReceiptStore::in_memory());
    let g = Gateway::new(Arc::new(SimulatedUpstream::new(s)), store.clone())
        .with_clock(Arc::new(StepClock::new(
            at("2026-06-15T09:00:00Z"),
            chrono::Duration::minutes(3),
        )))
        .with_ids(IdSource::seeded(615));
    for _ in 0..N {
        g.handle_completion(northstar_requests()).map_err(|e| e.to_string())?;
    }

    let policy = ConstraintPolicy::from_json(&golden("northstar_policy.json")).unwrap();
    let corpus = store.receipts(&ReceiptFilter::all());
    check!(corpus.len() == N, "stored {}", corpus.len());
    for r in &corpus {
        let codes: Vec<ViolationCode> = evaluate(r, &policy).into_iter().map(|v| v.code).collect();
        check!(codes == vec![ViolationCode::ModelDrift], "{}: {codes:?}", r.receipt_id);
    }
    let all = ReceiptFilter::all();
    let fallback = store.aggregate(Metric::FallbackRate, &all);
    let tier = store.aggregate(Metric::TierChangeRate, &all);
    check!(
        fallback.numerator == 0 && tier.numerator == 0,
        "fallback {fallback:?} tier {tier:?}"
    );
    Ok(format!("{N}/{N} model_drift, 0 fallback, 0 tier change"))
}

// ---- 7 -------------------------------------------------------------------

fn instant(t: &Timestamp) -> chrono::DateTime<chrono::FixedOffset> {
    chrono::DateTime::parse_from_rfc3339(&t.to_string()).unwrap()
}

struct Scan {
    fallback: (u64, u64),
    tier: (u64, u64),
    histogram: BTreeMap<String, u64>,
}

fn full_scan(all: &[RouteReceipt], from: &Timestamp, to: &Timestamp, model: Option<&str>) -> Scan {
    let (lo, hi) = (instant(from), instant(to));
    let mut scan = Scan {
        fallback: (0, 0),
        tier: (0, 0),
        histogram: BTreeMap::new(),
    };
    for r in all {
        let t = instant(&r.served_at);
        if t < lo || t >= hi {
            continue;
        }
        if model.is_some() && r.requested_model.as_deref() != model {
            continue;
        }
        scan.fallback.1 += 1;
        if r.fallback.status == FallbackStatus::Occurred {
            scan.fallback.0 += 1;
        }
        if let Some(st) = &r.service_tier {
            if let Some(req) = &st.requested {
                scan.tier.1 += 1;
                if *req != st.effective {
                    scan.tier.0 += 1;
                }
            }
        }
        if let Some(m) = &r.resolved_model {
            *scan.histogram.entry(m.clone()).or_default() += 1;
        }
    }
    scan
}

fn rate(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn aggregate_oracle() -> Outcome {
    let mut runner = TestRunner::new_with_rng(Config::default(), TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    let strategy = common::receipt();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut queries = 0;
    for size in [1usize, 37, 1000, 10_000] {
        let store = ReceiptStore::in_memory();
        let mut all = Vec::with_capacity(size);
        for i in 0..size {
            let mut r = strategy.new_tree(&mut runner).unwrap().current();
            r.receipt_id = format!("rr-{size:05}{i:027}");
            store.append(&r).map_err(|e| e.to_string())?;
            all.push(r);
        }
        let models: Vec<Option<String>> = std::iter::once(None)
            .chain(all.iter().filter_map(|r| r.requested_model.clone()).take(3).map(Some))
            .collect();
        for _ in 0..20 {
            let a = &all[rng.gen_range(0..size)].served_at;
            let b = &all[rng.gen_range(0..size)].served_at;
            let (from, to) = if instant(a) <= instant(b) { (a, b) } else { (b, a) };
            let to = if rng.gen_bool(0.2) {
                at("2027-01-01T00:00:00Z")
            } else {
                to.clone()
            };
            let model = models[rng.gen_range(0..models.len())].clone();
            let mut filter = ReceiptFilter::in_window(TimeWindow::new(Some(from.clone()), Some(to.clone())).unwrap());
            filter.requested_model = model.clone();

            let want = full_scan(&all, from, &to, model.as_deref());
            let fallback = store.aggregate(Metric::FallbackRate, &filter);
            check!(
                (fallback.numerator, fallback.denominator) == want.fallback
                    && fallback.value.rate() == Some(rate(want.fallback.0, want.fallback.1)),
                "fallback_rate over {size}: {fallback:?} vs {:?}",
                want.fallback
            );
            let tier = store.aggregate(Metric::TierChangeRate, &filter);
            check!(
                (tier.numerator, tier.denominator) == want.tier
                    && tier.value.rate() == Some(rate(want.tier.0, want.tier.1)),
                "tier_change_rate over {size}: {tier:?} vs {:?}",
                want.tier
            );
            let hist = store.aggregate(Metric::AliasResolutionHistogram, &filter);
            check!(
                hist.value.histogram() == Some(&want.histogram),
                "histogram over {size}: {:?} vs {:?}",
                hist.value,
                want.histogram
            );
            queries += 1;
        }
    }
    Ok(format!("{queries} windowed queries up to 10000 receipts"))
}

// ---- 8 -------------------------------------------------------------------

fn alias_drift_probe() -> Outcome {
    let probe = AliasDriftProbe {
        aliases: vec!["contract-pro-latest".into()],
        prompts: vec![
            "Summarize the indemnity clause.".into(),
            "List the termination triggers.".into(),
            "Who bears liability for data loss?".into(),
        ],
        n: 100,
    };
    let flipping = scenario("drift_30_70.json");
    let report = run_alias_drift_probe(&probe, &flipping).map_err(|e| e.to_string())?;
    let indices: Vec<u64> = report.events.iter().map(|e| e.request_index).collect();
    check!(indices == vec![30, 70], "drift at {indices:?}");

    let mut quiet = flipping.clone();
    quiet.alias_table.get_mut("contract-pro-latest").unwrap().truncate(1);
    let report = run_alias_drift_probe(&probe, &quiet).map_err(|e| e.to_string())?;
    check!(report.events.is_empty(), "static table drifted: {:?}", report.events);
    Ok("events at [30, 70]; static table quiet".into())
}

// ---- 9 -------------------------------------------------------------------

fn mixed_request(i: usize) -> CompletionRequest {
    let mut req = CompletionRequest::new(["contract-pro-latest", "auto", "m-x"][i % 3]);
    req.service_tier = [Some("priority"), Some("default"), None][(i / 3) % 3].map(str::to_owned);
    req.tools = match (i / 2) % 3 {
        0 => None,
        1 => Some(vec!["web_search".into()]),
        _ => Some(vec!["web_search".into(), "file_search".into()]),
    };
    req.effort = [None, Some(EffortLevel::High), Some(EffortLevel::Low)][(i / 5) % 3];
    req.request_id = Some(format!("req-acceptance-{i:04}"));
    req
}

fn run_mixed(n: usize, gateway: Gateway) -> Result<Vec<CompletionExchange>, String> {
    (0..n)
        .map(|i| gateway.handle_completion(mixed_request(i)).map_err(|e| e.to_string()))
        .collect()
}

/// Fallback record implied by the attempts alone.
fn expected_fallback(route: &SimulatedRoute) -> (FallbackStatus, Option<&str>, Option<&str>, Option<FallbackReason>) {
    match route.attempts.as_slice() {
        [first, .., last] => (
            FallbackStatus::Occurred,
            Some(first.model.as_str()),
            Some(last.model.as_str()),
            Some(match first.outcome {
                AttemptOutcome::RateLimit => FallbackReason::RateLimit,
                AttemptOutcome::ModerationRefusal => FallbackReason::ModerationRefusal,
                _ => FallbackReason::ProviderError,
            }),
        ),
        _ if route.service_tier.downgraded => (FallbackStatus::Occurred, None, None, Some(FallbackReason::Capacity)),
        _ => (FallbackStatus::None, None, None, Some(FallbackReason::None)),
    }
}

fn gateway_fidelity() -> Outcome {
    const N: usize = 500;
    let s = scenario("mixed.json");
    let upstream = Arc::new(SimulatedUpstream::new(s.clone()));
    let g = Gateway::new(upstream.clone(), Arc::new(ReceiptStore::in_memory()))
        .with_clock(Arc::new(FixedClock(at("2026-06-15T14:02:11Z"))))
        .with_ids(IdSource::seeded(9));
    let first = run_mixed(N, g)?;
    let log = upstream.decision_log();
    check!(log.len() == N, "log has {} entries", log.len());

    let mut seen = BTreeMap::<&str, usize>::new();
    for (ex, route) in first.iter().zip(&log) {
        let r = &ex.receipt;
        let i = route.request_index;
        check!(
            ex.response.request_index == i,
            "index {} vs log {i}",
            ex.response.request_index
        );
        check!(
            r.resolved_model.as_deref() == Some(route.resolved_model.as_str()),
            "{i}: resolved_model"
        );
        check!(
            r.effective_tier() == Some(route.service_tier.effective.as_str()),
            "{i}: tier"
        );
        let (status, from, to, reason) = expected_fallback(route);
        check!(
            r.fallback.status == status
                && r.fallback.from.as_deref() == from
                && r.fallback.to.as_deref() == to
                && r.fallback.reason == reason,
            "{i}: fallback {:?} vs attempts {:?}",
            r.fallback,
            route.attempts
        );
        let tools: Vec<(&str, u64, Vec<String>)> = r
            .tools_used()
            .iter()
            .map(|t| {
                (
                    t.name.as_str(),
                    t.invocation_count,
                    t.result_refs.clone().unwrap_or_default(),
                )
            })
            .collect();
        let want: Vec<(&str, u64, Vec<String>)> = route
            .tools
            .iter()
            .map(|t| (t.name.as_str(), t.invocations, t.refs.clone()))
            .collect();
        check!(tools == want, "{i}: tools {tools:?} vs {want:?}");
        let safety = if route.safety.intervened {
            SafetyStatus::Intervened
        } else {
            SafetyStatus::None
        };
        check!(r.safety.status == safety, "{i}: safety {:?}", r.safety.status);
        check!(r.completion_status == route.completion_status, "{i}: completion_status");

        if r.fallback.status == FallbackStatus::Occurred {
            *seen.entry("fallback").or_default() += 1;
        }
        if !r.tools_used().is_empty() {
            *seen.entry("tools").or_default() += 1;
        }
        if r.safety.status == SafetyStatus::Intervened {
            *seen.entry("safety").or_default() += 1;
        }
        if route.service_tier.downgraded {
            *seen.entry("downgrade").or_default() += 1;
        }
        *seen.entry(r.completion_status.as_str()).or_default() += 1;
    }
    for kind in ["fallback", "tools", "safety", "downgrade", "error"] {
        check!(seen.contains_key(kind), "mixed scenario never produced {kind}");
    }

    // fresh ids and the wall clock: only receipt_id and served_at may differ
    let upstream = Arc::new(SimulatedUpstream::new(s));
    let again = run_mixed(N, Gateway::new(upstream, Arc::new(ReceiptStore::in_memory())))?;
    let strip = |ex: &CompletionExchange| {
        let mut d = doc(&ex.receipt);
        let o = d.as_object_mut().unwrap();
        o.remove("receipt_id");
        o.remove("served_at");
        d
    };
    for (a, b) in first.iter().zip(&again) {
        check!(strip(a) == strip(b), "rerun differs at {}", a.response.request_index);
    }
    Ok(format!("{N} receipts agree with the log, rerun identical; {seen:?}"))
}

// ---- 10 ------------------------------------------------------------------

fn round_trip_and_retention() -> Outcome {
    const N: usize = 300;
    let classes = [
        None,
        Some(RetentionClass::Ephemeral),
        Some(RetentionClass::Standard),
        Some(RetentionClass::Regulated),
        Some(RetentionClass::AuditHold),
    ];
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let source = dir.path().join("source");
    {
        let store = Arc::new(ReceiptStore::open(&source).map_err(|e| e.to_string())?);
        let g = Gateway::new(Arc::new(SimulatedUpstream::new(scenario("mixed.json"))), store)
            .with_clock(Arc::new(StepClock::new(
                at("2026-06-01T00:00:00Z"),
                chrono::Duration::seconds(90),
            )))
            .with_ids(IdSource::seeded(10));
        for i in 0..N {
            let mut req = mixed_request(i);
            req.retention_class = classes[i % classes.len()];
            g.handle_completion(req).map_err(|e| e.to_string())?;
        }
    }

    let store = ReceiptStore::open(&source).map_err(|e| e.to_string())?;
    let mut exported = Vec::new();
    let lines = store
        .export_jsonl(
            &ReceiptFilter::all(),
            Audience::Auditor,
            &RedactionPolicy::open(),
            &mut exported,
        )
        .map_err(|e| e.to_string())?;
    check!(lines == N, "exported {lines}");
    let fresh = ReceiptStore::open(dir.path().join("copy")).map_err(|e| e.to_string())?;
    fresh.import_jsonl(exported.as_slice()).map_err(|e| e.to_string())?;
    for id in store.query(&ReceiptFilter::all()) {
        let a = store.get_canonical(&id).map_err(|e| e.to_string())?;
        let b = fresh.get_canonical(&id).map_err(|e| e.to_string())?;
        check!(a == b, "{id} differs after import");
    }
    let mut again = Vec::new();
    fresh
        .export_jsonl(
            &ReceiptFilter::all(),
            Audience::Auditor,
            &RedactionPolicy::open(),
            &mut again,
        )
        .map_err(|e| e.to_string())?;
    check!(again == exported, "re-export is not byte-identical");

    let count = |s: &ReceiptStore, class| {
        let mut f = ReceiptFilter::all();
        f.retention_class = Some(class);
        s.query(&f).len()
    };
    let held = count(&store, RetentionClass::AuditHold);
    let ephemeral = count(&store, RetentionClass::Ephemeral);
    let later = at("2026-06-03T00:00:00Z");
    let purged = store
        .enforce_retention(&RetentionRules::default(), &later)
        .map_err(|e| e.to_string())?;
    check!(
        purged.purged.len() == ephemeral,
        "purged {} of {ephemeral} ephemeral",
        purged.purged.len()
    );
    let twice = store
        .enforce_retention(&RetentionRules::default(), &later)
        .map_err(|e| e.to_string())?;
    check!(twice.purged.is_empty(), "second purge removed {}", twice.purged.len());

    let zero = Some(Duration::ZERO);
    let everything = RetentionRules::new(zero, zero, zero).map_err(|e| e.to_string())?;
    store
        .enforce_retention(&everything, &at("2100-01-01T00:00:00Z"))
        .map_err(|e| e.to_string())?;
    check!(
        count(&store, RetentionClass::AuditHold) == held,
        "audit_hold receipts were purged"
    );
    check!(store.len() == held, "{} left, {held} on hold", store.len());
    drop(store);
    let reopened = ReceiptStore::open(&source).map_err(|e| e.to_string())?;
    check!(reopened.len() == held, "reopened store has {}", reopened.len());
    Ok(format!(
        "{N} receipts byte-identical; {ephemeral} ephemeral purged once; {held} held"
    ))
}

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "schema fidelity", Duration::from_secs(1), schema_fidelity),
        (2, "golden receipt", Duration::from_secs(1), golden_receipt),
        (3, "required-field mutations", Duration::from_secs(5), mutation_suite),
        (4, "redaction properties", Duration::from_secs(60), redaction_properties),
        (5, "normalization table", Duration::from_secs(1), normalization_table),
        (6, "northstar forensics", Duration::from_secs(5), northstar_forensics),
        (7, "aggregate oracle", Duration::from_secs(60), aggregate_oracle),
        (8, "alias-drift probe", Duration::from_secs(10), alias_drift_probe),
        (9, "gateway fidelity", Duration::from_secs(60), gateway_fidelity),
        (
            10,
            "round trip and retention",
            Duration::from_secs(30),
            round_trip_and_retention,
        ),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (n, name, limit, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str()) || f == &n.to_string()) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(_) if elapsed > limit => Err(format!("took {elapsed:.2?}, limit {limit:?}")),
            other => other,
        };
        match outcome {
            Ok(note) => println!("criterion {n:>2} {name:<26} PASS {elapsed:>9.2?} (limit {limit:?})  {note}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n:>2} {name:<26} FAIL {elapsed:>9.2?} (limit {limit:?})  {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
