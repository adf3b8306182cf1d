#![allow(dead_code)]

use proptest::collection::vec;
use proptest::option;
use proptest::prelude::*;
use proptest::sample::select;
use route_receipt::receipt::*;
use serde_json::{Map, Value};

pub fn timestamp() -> impl Strategy<Value = Timestamp> {
    (0i64..30 * 86_400, prop::bool::ANY, 0u32..1000).prop_map(|(secs, frac, ms)| {
        let base = chrono::DateTime::parse_from_rfc3339("2026-06-01T00:00:00Z").unwrap();
        let t = base + chrono::Duration::seconds(secs);
        let text = if frac {
            format!("{}.{ms:03}Z", t.format("%Y-%m-%dT%H:%M:%S"))
        } else {
            t.format("%Y-%m-%dT%H:%M:%SZ").to_string()
        };
        text.parse().unwrap()
    })
}

fn name() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_.-]{0,12}"
}

fn model() -> impl Strategy<Value = String> {
    select(vec![
        "contract-pro-latest",
        "contract-pro-2026-03-02",
        "contract-pro-2026-04-18",
        "m-a",
        "m-b",
        "router/auto",
    ])
    .prop_map(str::to_owned)
}

fn tier() -> impl Strategy<Value = String> {
    select(vec!["priority", "default", "standard", "flex", "auto"]).prop_map(str::to_owned)
}

fn service_tier() -> impl Strategy<Value = ServiceTierRecord> {
    (
        option::of(tier()),
        tier(),
        option::of(select(TierChangeReason::ALL.to_vec())),
    )
        .prop_map(|(requested, effective, change_reason)| ServiceTierRecord {
            requested,
            effective,
            change_reason,
        })
}

fn effort() -> impl Strategy<Value = EffortRecord> {
    (
        option::of(select(EffortLevel::ALL.to_vec())),
        select(EffortStatus::ALL.to_vec()),
    )
        .prop_map(|(requested, effective_status)| EffortRecord {
            requested,
            effective_status,
        })
}

fn tool_use() -> impl Strategy<Value = ToolUse> {
    (
        select(vec!["web_search", "file_search", "code_interpreter", "calculator"]),
        0u64..5,
        option::of(vec("[a-z]{1,6}\\[[0-9]{1,2}\\]", 0..4)),
        option::of(prop::bool::ANY),
    )
        .prop_map(|(name, invocation_count, result_refs, redacted)| ToolUse {
            name: name.to_owned(),
            invocation_count,
            result_refs,
            redacted,
        })
}

fn unique(v: Vec<String>) -> Vec<String> {
    let mut out = Vec::new();
    for s in v {
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

fn tools() -> impl Strategy<Value = ToolsRecord> {
    (
        option::of(vec(name(), 0..3).prop_map(unique)),
        vec(tool_use(), 0..3),
        option::of(
            (
                option::of(vec(name(), 0..3).prop_map(unique)),
                option::of(0u64..20),
                option::of(prop::bool::ANY),
            )
                .prop_map(|(source_classes, retrieved_item_count, redacted)| RetrievalSummary {
                    source_classes,
                    retrieved_item_count,
                    redacted,
                }),
        ),
    )
        .prop_map(|(allowed, used, retrieval_summary)| ToolsRecord {
            allowed,
            used,
            retrieval_summary,
        })
}

fn context() -> impl Strategy<Value = ContextRecord> {
    (
        select(InputTruncated::ALL.to_vec()),
        option::of(0u64..20),
        option::of(select(ContextWindowClass::ALL.to_vec())),
    )
        .prop_map(
            |(input_truncated, retrieved_item_count, context_window_class)| ContextRecord {
                input_truncated,
                retrieved_item_count,
                context_window_class,
            },
        )
}

fn fallback() -> impl Strategy<Value = FallbackRecord> {
    (
        select(FallbackStatus::ALL.to_vec()),
        option::of(model()),
        option::of(model()),
        option::of(select(FallbackReason::ALL.to_vec())),
    )
        .prop_map(|(status, from, to, reason)| FallbackRecord {
            status,
            from,
            to,
            reason,
        })
}

fn safety() -> impl Strategy<Value = SafetyRecord> {
    (
        select(SafetyStatus::ALL.to_vec()),
        option::of(name()),
        option::of(select(SafetyAction::ALL.to_vec())),
    )
        .prop_map(|(status, category, visible_action)| SafetyRecord {
            status,
            category,
            visible_action,
        })
}

fn hop() -> impl Strategy<Value = ProviderHop> {
    (
        select(HopRole::ALL.to_vec()),
        option::of(name()),
        option::of(model()),
        option::of(prop::bool::ANY),
    )
        .prop_map(|(role, provider, model, redacted)| ProviderHop {
            role,
            provider,
            model,
            redacted,
        })
}

fn audiences() -> impl Strategy<Value = Option<Vec<Audience>>> {
    option::of(select(Audience::ALL.to_vec()).prop_map(|a| a.and_wider().collect()))
}

fn redaction() -> impl Strategy<Value = RedactionEntry> {
    (
        select(vec![
            "resolved_model",
            "provider_chain",
            "effort",
            "context",
            "safety.category",
            "tools",
        ]),
        select(RedactionReason::ALL.to_vec()),
        audiences(),
    )
        .prop_map(|(field, reason, visible_to)| RedactionEntry {
            field: field.to_owned(),
            reason,
            visible_to,
        })
}

fn extension_value() -> impl Strategy<Value = Value> {
    let leaf = prop_oneof![
        Just(Value::Null),
        prop::bool::ANY.prop_map(Value::from),
        (-1000i64..1000).prop_map(Value::from),
        "[a-z ]{0,8}".prop_map(Value::from),
    ];
    leaf.prop_recursive(2, 8, 3, |inner| {
        prop_oneof![
            vec(inner.clone(), 0..3).prop_map(Value::from),
            prop::collection::btree_map("[a-z]{1,4}", inner, 0..3)
                .prop_map(|m| Value::Object(m.into_iter().collect::<Map<_, _>>())),
        ]
    })
}

prop_compose! {
    pub fn receipt()(
        id in "[0-9a-f]{8}",
        request_id in "req-[a-z0-9]{1,8}",
        served_at in timestamp(),
        requested_model in option::of(model()),
        resolved_model in option::of(model()),
        model_identifier_type in select(ModelIdentifierType::ALL.to_vec()),
        service_tier in option::of(service_tier()),
        effort in option::of(effort()),
        tools in option::of(tools()),
        context in option::of(context()),
        fallback in fallback(),
        safety in safety(),
        region_class in select(RegionClass::ALL.to_vec()),
        provider_chain in option::of(vec(hop(), 0..3)),
        completion_status in select(CompletionStatus::ALL.to_vec()),
        redactions in vec(redaction(), 0..3),
        retention_class in option::of(select(RetentionClass::ALL.to_vec())),
        provider_extensions in option::of(prop::collection::btree_map("[a-z_]{1,6}", extension_value(), 0..3)),
    ) -> RouteReceipt {
        RouteReceipt {
            schema_version: SCHEMA_VERSION.to_owned(),
            receipt_id: format!("rr-{id}"),
            request_id,
            served_at,
            requested_model,
            resolved_model,
            model_identifier_type,
            service_tier,
            effort,
            tools,
            context,
            fallback,
            safety,
            region_class,
            provider_chain,
            completion_status,
            redactions,
            retention_class,
            provider_extensions: provider_extensions.map(|m| m.into_iter().collect()),
        }
    }
}
