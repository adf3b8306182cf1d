use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::receipt::RouteReceipt;

/// Fields whose difference makes two routes materially different. Fixed so
/// diffs stay comparable between deployments.
pub const MATERIAL_FIELDS: &[&str] = &[
    "/resolved_model",
    "/service_tier/effective",
    "/fallback/status",
    "/region_class",
    "/tools/used names",
    "/completion_status",
    "/safety/status",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangedField {
    pub field_path: String,
    /// `None` when the field is absent on that side.
    pub left_value: Option<Value>,
    pub right_value: Option<Value>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteDiff {
    pub changed_fields: Vec<ChangedField>,
    pub material: bool,
}

impl RouteDiff {
    pub fn is_empty(&self) -> bool {
        self.changed_fields.is_empty()
    }

    pub fn paths(&self) -> Vec<&str> {
        self.changed_fields.iter().map(|c| c.field_path.as_str()).collect()
    }
}

fn escape(key: &str) -> String {
    key.replace('~', "~0").replace('/', "~1")
}

// Arrays are compared whole.
fn flatten(prefix: String, v: &Value, out: &mut BTreeMap<String, Value>) {
    match v {
        Value::Object(map) if !map.is_empty() => {
            for (k, child) in map {
                flatten(format!("{prefix}/{}", escape(k)), child, out);
            }
        }
        _ => {
            out.insert(prefix, v.clone());
        }
    }
}

fn leaves(r: &RouteReceipt) -> BTreeMap<String, Value> {
    let mut out = BTreeMap::new();
    flatten(
        String::new(),
        &serde_json::to_value(r).expect("receipts always serialize"),
        &mut out,
    );
    out
}

fn tool_names(r: &RouteReceipt) -> Vec<&str> {
    let mut names: Vec<&str> = r.tools_used().iter().map(|t| t.name.as_str()).collect();
    names.sort_unstable();
    names
}

/// Every leaf that differs between `a` (left) and `b` (right), in path order.
pub fn diff(a: &RouteReceipt, b: &RouteReceipt) -> RouteDiff {
    let left = leaves(a);
    let right = leaves(b);
    let mut paths: Vec<&String> = left.keys().chain(right.keys()).collect();
    paths.sort();
    paths.dedup();

    let changed_fields: Vec<ChangedField> = paths
        .into_iter()
        .filter(|p| left.get(*p) != right.get(*p))
        .map(|p| ChangedField {
            field_path: p.clone(),
            left_value: left.get(p).cloned(),
            right_value: right.get(p).cloned(),
        })
        .collect();

    let material = changed_fields.iter().any(|c| {
        MATERIAL_FIELDS
            .iter()
            .any(|m| c.field_path == *m || c.field_path.starts_with(&format!("{m}/")))
    }) || tool_names(a) != tool_names(b);

    RouteDiff {
        changed_fields,
        material,
    }
}
