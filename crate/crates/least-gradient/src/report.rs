//! Solve report: the JSON artifact describing one run, plus a small
//! structural validator for the schema shipped in `schema/`.
//!
//! The report is deterministic for a fixed spec and seed: the timings
//! section carries algorithmic work counters rather than wall-clock, so
//! artifacts stay byte-identical across repeated runs and worker counts.

use serde::Serialize;
use serde_json::Value;

/// The schema the report artifact validates against.
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

#[derive(Serialize, Debug, Clone)]
pub struct GridMeta {
    pub width: usize,
    pub height: usize,
    pub spacing: f64,
    pub collar_width: usize,
}

#[derive(Serialize, Debug, Clone)]
pub struct Tolerances {
    /// Relative tolerance of the co-area identity (float accumulation).
    pub coarea_rtol: f64,
    /// Ball-discretization tolerance coefficient: 2h/r per radius step.
    pub density_tol_coeff: f64,
    /// Density bound allowance coefficient: 4h/r.
    pub density_bound_coeff: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            coarea_rtol: crate::diagnostics::COAREA_RTOL,
            density_tol_coeff: 2.0,
            density_bound_coeff: 4.0,
        }
    }
}

#[derive(Serialize, Debug, Clone)]
pub struct Timings {
    pub level_solves: usize,
    pub maxflow_augmentations: u64,
    /// Why these are counters: wall-clock would break byte-identical
    /// artifacts across runs; it is printed to stderr instead.
    pub unit: String,
}

#[derive(Serialize, Debug, Clone)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub stencil_order: usize,
    pub ladder_mode: String,
    pub grid: GridMeta,
    pub tolerances: Tolerances,
    pub timings: Timings,
}

#[derive(Serialize, Debug, Clone)]
pub struct LevelRow {
    pub t: f64,
    pub value: f64,
    pub p_omega: f64,
    pub p_crossing: f64,
    pub p_total: f64,
    pub volume: usize,
}

#[derive(Serialize, Debug, Clone)]
pub struct NestingSection {
    pub ok: bool,
    pub pairs_checked: usize,
    pub touching: Vec<usize>,
}

#[derive(Serialize, Debug, Clone)]
pub struct CoareaSection {
    pub ledger_sum: f64,
    pub edgewise_tv: f64,
    pub rel_err: f64,
    pub ok: bool,
}

#[derive(Serialize, Debug, Clone)]
pub struct BoundarySection {
    pub max_abs_mismatch: f64,
    pub exact: bool,
}

#[derive(Serialize, Debug, Clone)]
pub struct ObstacleSection {
    pub min_slack: f64,
    pub satisfied: bool,
}

#[derive(Serialize, Debug, Clone)]
pub struct HolderSection {
    pub defined: bool,
    pub beta: Option<f64>,
    pub c: Option<f64>,
    pub residual: Option<f64>,
    pub pairs_used: usize,
}

#[derive(Serialize, Debug, Clone)]
pub struct BarrierRow {
    pub x0: [f64; 2],
    /// First sweep constant that sandwiches the field, if any.
    pub kappa: Option<f64>,
    pub nodes_checked: usize,
    pub violations: usize,
    pub ok: bool,
}

#[derive(Serialize, Debug, Clone)]
pub struct ContactSection {
    pub windows: usize,
    pub accepted: usize,
    pub disjoint: usize,
    pub locally_equal: usize,
    pub violations: usize,
    pub ok: bool,
}

#[derive(Serialize, Debug, Clone)]
pub struct DensityProbeRow {
    pub node: usize,
    pub radius: f64,
    pub ratio: f64,
    pub bound: f64,
    pub ok: bool,
}

#[derive(Serialize, Debug, Clone)]
pub struct DensitySection {
    pub delta2: f64,
    pub probes: Vec<DensityProbeRow>,
    pub ok: bool,
}

#[derive(Serialize, Debug, Clone)]
pub struct SolveReport {
    pub meta: Meta,
    pub levels: Vec<LevelRow>,
    pub nesting: NestingSection,
    pub coarea: CoareaSection,
    pub boundary: BoundarySection,
    pub obstacle: ObstacleSection,
    pub holder: Option<HolderSection>,
    pub barriers: Option<Vec<BarrierRow>>,
    pub contact: Option<ContactSection>,
    pub density: Option<DensitySection>,
}

impl SolveReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Validate a JSON value against the structural subset of JSON Schema
/// used by `REPORT_SCHEMA`: `type` (with null unions), `required`,
/// `properties`, and `items`.
pub fn validate_schema(value: &Value, schema: &Value) -> Result<(), String> {
    validate_at(value, schema, "$")
}

fn type_matches(value: &Value, ty: &str) -> bool {
    match ty {
        "object" => value.is_object(),
        "array" => value.is_array(),
        "string" => value.is_string(),
        "boolean" => value.is_boolean(),
        "number" => value.is_number(),
        "integer" => value.is_i64() || value.is_u64(),
        "null" => value.is_null(),
        _ => false,
    }
}

fn validate_at(value: &Value, schema: &Value, path: &str) -> Result<(), String> {
    if let Some(ty) = schema.get("type") {
        let allowed: Vec<&str> = match ty {
            Value::String(s) => vec![s.as_str()],
            Value::Array(items) => items.iter().filter_map(|v| v.as_str()).collect(),
            _ => return Err(format!("{path}: malformed schema type")),
        };
        if !allowed.iter().any(|t| type_matches(value, t)) {
            return Err(format!("{path}: expected {allowed:?}, found {value}"));
        }
        // A null value in a nullable union needs no structural checks.
        if value.is_null() {
            return Ok(());
        }
    }
    if let Some(obj) = value.as_object() {
        if let Some(required) = schema.get("required").and_then(|r| r.as_array()) {
            for key in required.iter().filter_map(|k| k.as_str()) {
                if !obj.contains_key(key) {
                    return Err(format!("{path}: missing required key {key:?}"));
                }
            }
        }
        if let Some(props) = schema.get("properties").and_then(|p| p.as_object()) {
            for (key, sub) in props {
                if let Some(child) = obj.get(key) {
                    validate_at(child, sub, &format!("{path}.{key}"))?;
                }
            }
        }
    }
    if let Some(arr) = value.as_array() {
        if let Some(items) = schema.get("items") {
            for (k, child) in arr.iter().enumerate() {
                validate_at(child, items, &format!("{path}[{k}]"))?;
            }
        }
    }
    Ok(())
}

/// Validate a report against the shipped schema.
pub fn validate_report(report: &SolveReport) -> Result<(), String> {
    let schema: Value = serde_json::from_str(REPORT_SCHEMA).expect("schema parses");
    let value = serde_json::to_value(report).expect("report serializes");
    validate_schema(&value, &schema)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> SolveReport {
        SolveReport {
            meta: Meta {
                tool: "lgob".into(),
                version: "0.1.0".into(),
                seed: 7,
                stencil_order: 16,
                ladder_mode: "quantized".into(),
                grid: GridMeta { width: 10, height: 10, spacing: 0.1, collar_width: 2 },
                tolerances: Tolerances::default(),
                timings: Timings {
                    level_solves: 3,
                    maxflow_augmentations: 42,
                    unit: "counters".into(),
                },
            },
            levels: vec![LevelRow {
                t: -0.5,
                value: 0.0,
                p_omega: 0.0,
                p_crossing: 0.0,
                p_total: 0.0,
                volume: 100,
            }],
            nesting: NestingSection { ok: true, pairs_checked: 0, touching: vec![] },
            coarea: CoareaSection { ledger_sum: 0.0, edgewise_tv: 0.0, rel_err: 0.0, ok: true },
            boundary: BoundarySection { max_abs_mismatch: 0.0, exact: true },
            obstacle: ObstacleSection { min_slack: 0.0, satisfied: true },
            holder: None,
            barriers: None,
            contact: None,
            density: None,
        }
    }

    #[test]
    fn sample_report_validates() {
        validate_report(&sample_report()).unwrap();
    }

    #[test]
    fn missing_key_fails_validation() {
        let schema: Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
        let mut value = serde_json::to_value(sample_report()).unwrap();
        value.as_object_mut().unwrap().remove("coarea");
        assert!(validate_schema(&value, &schema).is_err());
    }

    #[test]
    fn wrong_type_fails_validation() {
        let schema: Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
        let mut value = serde_json::to_value(sample_report()).unwrap();
        value["nesting"]["ok"] = Value::String("yes".into());
        assert!(validate_schema(&value, &schema).is_err());
        let mut value2 = serde_json::to_value(sample_report()).unwrap();
        value2["meta"]["seed"] = Value::from(1.5);
        assert!(validate_schema(&value2, &schema).is_err());
    }

    #[test]
    fn nullable_sections_accept_null_and_content() {
        let schema: Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
        let mut report = sample_report();
        report.holder = Some(HolderSection {
            defined: true,
            beta: Some(0.3),
            c: Some(1.1),
            residual: Some(0.2),
            pairs_used: 150,
        });
        report.contact = Some(ContactSection {
            windows: 10,
            accepted: 8,
            disjoint: 5,
            locally_equal: 3,
            violations: 0,
            ok: true,
        });
        let value = serde_json::to_value(&report).unwrap();
        validate_schema(&value, &schema).unwrap();
    }
}
