//! Native scaffold templates and their instantiation.
//!
//! Templates are plain C text with `@@NAME@@` slots. Instantiation is a
//! single left-to-right pass: slot values are inserted verbatim and never
//! rescanned, so nesting is done by instantiating the inner template first.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{FunctionCase, FunctionSignature, ParamKind, ReturnKind};

pub const SIGIL: &str = "@@";

pub const UNIT_TEMPLATE: &str = include_str!("../assets/harness/unit.c");
pub const PRELUDE: &str = include_str!("../assets/harness/prelude.c");
pub const COMMON_TEMPLATE: &str = include_str!("../assets/harness/common.c");
pub const DIFFERENTIAL_TEMPLATE: &str = include_str!("../assets/harness/differential.c");
pub const TIMING_TEMPLATE: &str = include_str!("../assets/harness/timing.c");

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HarnessError {
    #[error("template slot `{0}` has no value")]
    SlotMissing(String),
    #[error("unterminated slot marker at byte {0}")]
    Unterminated(usize),
}

/// Names of the slots referenced by `template`, in order of first use.
pub fn slot_names(template: &str) -> Vec<String> {
    let mut names = Vec::new();
    let mut rest = template;
    while let Some(start) = rest.find(SIGIL) {
        let after = &rest[start + SIGIL.len()..];
        match after.find(SIGIL) {
            Some(end) => {
                let name = &after[..end];
                if !names.iter().any(|n| n == name) {
                    names.push(name.to_string());
                }
                rest = &after[end + SIGIL.len()..];
            }
            None => break,
        }
    }
    names
}

/// Substitutes every `@@NAME@@` in `template` from `slots`.
pub fn instantiate(template: &str, slots: &BTreeMap<&str, String>) -> Result<String, HarnessError> {
    let mut out = String::with_capacity(template.len() * 2);
    let mut rest = template;
    let mut offset = 0;
    while let Some(start) = rest.find(SIGIL) {
        out.push_str(&rest[..start]);
        let after = &rest[start + SIGIL.len()..];
        let end = after.find(SIGIL).ok_or(HarnessError::Unterminated(offset + start))?;
        let name = &after[..end];
        let value = slots.get(name).ok_or_else(|| HarnessError::SlotMissing(name.to_string()))?;
        out.push_str(value);
        let consumed = start + SIGIL.len() * 2 + end;
        offset += consumed;
        rest = &rest[consumed..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Inclusive value range for one parameter's generated inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueRange {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparePolicy {
    pub rel_tol: f64,
    pub abs_floor: f64,
}

impl Default for ComparePolicy {
    fn default() -> Self {
        ComparePolicy { rel_tol: 1e-4, abs_floor: 1e-6 }
    }
}

impl ComparePolicy {
    pub fn to_c(&self) -> String {
        format!("#define VR_REL_TOL ({:e})\n#define VR_ABS_TOL ({:e})", self.rel_tol, self.abs_floor)
    }
}

fn c_double(v: f64) -> String {
    let s = format!("{v:?}");
    if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

fn element_count(extent: &[String]) -> String {
    extent.iter().map(|d| format!("(size_t)({d})")).collect::<Vec<_>>().join(" * ")
}

fn ret_kind_c(sig: &FunctionSignature) -> String {
    match sig.return_kind {
        ReturnKind::Void => "-1".to_string(),
        ReturnKind::Scalar { numeric } => numeric.harness_tag().to_string(),
    }
}

/// Rows of the parameter table; `ranges` is indexed like `sig.params`.
pub fn ranges_c(sig: &FunctionSignature, ranges: &[ValueRange]) -> String {
    let mut out = String::new();
    for (p, r) in sig.params.iter().zip(ranges) {
        let (kind, is_array, count) = match &p.kind {
            ParamKind::ScalarIn { numeric } => (*numeric, 0, "1".to_string()),
            ParamKind::ArrayInOut { element, extent } => (*element, 1, element_count(extent)),
        };
        out.push_str(&format!(
            "    {{ \"{}\", {}, {}, {}, {}, {} }},\n",
            p.name,
            kind.harness_tag(),
            is_array,
            count,
            c_double(r.lo),
            c_double(r.hi)
        ));
    }
    out
}

fn call_expr(sig: &FunctionSignature, callee: &str) -> String {
    let args: Vec<String> = sig
        .params
        .iter()
        .enumerate()
        .map(|(k, p)| match &p.kind {
            ParamKind::ScalarIn { .. } => format!("*({} *)p[{k}]", p.c_type),
            ParamKind::ArrayInOut { extent, .. } if extent.len() <= 1 => format!("({} *)p[{k}]", p.c_type),
            ParamKind::ArrayInOut { extent, .. } => {
                let tail: String = extent[1..].iter().map(|d| format!("[{d}]")).collect();
                format!("({} (*){})p[{k}]", p.c_type, tail)
            }
        })
        .collect();
    format!("{callee}({})", args.join(", "))
}

/// Adapters that unpack the type-erased buffers into a typed call.
pub fn invoke_c(sig: &FunctionSignature, original: &str, candidate: &str) -> String {
    let mut out = String::new();
    for (adapter, callee) in [("vr_call_original", original), ("vr_call_candidate", candidate)] {
        out.push_str(&format!("static void {adapter}(void **p, void *ret)\n{{\n"));
        if sig.params.is_empty() {
            out.push_str("    (void)p;\n");
        }
        match sig.return_kind {
            ReturnKind::Void => {
                out.push_str("    (void)ret;\n");
                out.push_str(&format!("    {};\n", call_expr(sig, callee)));
            }
            ReturnKind::Scalar { .. } => {
                out.push_str(&format!("    {} r = {};\n", sig.return_c_type, call_expr(sig, callee)));
                out.push_str("    memcpy(ret, &r, sizeof r);\n");
            }
        }
        out.push_str("}\n\n");
    }
    out
}

/// The shared helper block with the case's parameter table filled in.
pub fn common_c(sig: &FunctionSignature, ranges: &[ValueRange], original: &str, candidate: &str) -> String {
    let slots = BTreeMap::from([
        ("RANGES", ranges_c(sig, ranges)),
        ("RET_KIND", ret_kind_c(sig)),
        ("INVOKE", invoke_c(sig, original, candidate)),
    ]);
    instantiate(COMMON_TEMPLATE, &slots).expect("common template slots are fixed")
}

/// Built-in differential driver comparing `sig.name` with its `_opt` slot.
pub fn differential_driver(
    sig: &FunctionSignature,
    ranges: &[ValueRange],
    trials: u32,
    seed: u64,
    policy: &ComparePolicy,
) -> String {
    let slot = sig.slot_name();
    let slots = BTreeMap::from([
        ("ORIGINAL_NAME", sig.name.clone()),
        ("SLOT_NAME", slot.clone()),
        ("COMPARE_POLICY", policy.to_c()),
        ("TRIALS", trials.to_string()),
        ("SEED", seed.to_string()),
        ("COMMON", common_c(sig, ranges, &sig.name, &slot)),
    ]);
    instantiate(DIFFERENTIAL_TEMPLATE, &slots).expect("differential template slots are fixed")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingParams {
    pub runs: u32,
    pub min_run_ns: u64,
    pub seed: u64,
}

impl Default for TimingParams {
    fn default() -> Self {
        TimingParams { runs: 5, min_run_ns: 20_000_000, seed: 0x5eed }
    }
}

pub fn timing_driver(sig: &FunctionSignature, ranges: &[ValueRange], params: &TimingParams) -> String {
    let slots = BTreeMap::from([
        ("RUNS", params.runs.max(1).to_string()),
        ("MIN_RUN_NS", params.min_run_ns.to_string()),
        ("SEED", params.seed.to_string()),
        ("COMPARE_POLICY", ComparePolicy::default().to_c()),
        ("COMMON", common_c(sig, ranges, &sig.name, &sig.slot_name())),
    ]);
    instantiate(TIMING_TEMPLATE, &slots).expect("timing template slots are fixed")
}

/// One translation unit: prelude, context, original, candidate slot, driver.
pub fn unit(case: &FunctionCase, original_fn: &str, candidate_fn: &str, driver: &str) -> String {
    let slots = BTreeMap::from([
        ("PRELUDE", PRELUDE.to_string()),
        ("CONTEXT", case.context_text.clone()),
        ("ORIGINAL_FN", original_fn.to_string()),
        ("CANDIDATE_FN", candidate_fn.to_string()),
        ("DRIVER", driver.to_string()),
    ]);
    instantiate(UNIT_TEMPLATE, &slots).expect("unit template slots are fixed")
}

/// Default input ranges: floats symmetric about zero, integer scalars small
/// and positive (they are usually repetition counts), integer arrays signed.
pub fn default_ranges(sig: &FunctionSignature) -> Vec<ValueRange> {
    sig.params
        .iter()
        .map(|p| match &p.kind {
            ParamKind::ScalarIn { numeric } if !numeric.is_float() => ValueRange { lo: 1.0, hi: 4.0 },
            ParamKind::ArrayInOut { element, .. } if !element.is_float() => ValueRange { lo: -8.0, hi: 8.0 },
            _ => ValueRange { lo: -1.0, hi: 1.0 },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitutes_all_slots() {
        let slots = BTreeMap::from([("A", "1".to_string()), ("B", "two".to_string())]);
        let out = instantiate("x @@A@@ y @@B@@ z @@A@@", &slots).unwrap();
        assert_eq!(out, "x 1 y two z 1");
        assert!(!out.contains(SIGIL));
    }

    #[test]
    fn missing_slot_is_reported() {
        let slots = BTreeMap::from([("PRELUDE", String::new())]);
        let err = instantiate(UNIT_TEMPLATE, &slots).unwrap_err();
        assert_eq!(err, HarnessError::SlotMissing("CONTEXT".into()));
    }

    #[test]
    fn missing_candidate_slot_is_reported() {
        let mut slots: BTreeMap<&str, String> =
            slot_names(UNIT_TEMPLATE).iter().map(|n| (leak(n), String::new())).collect();
        slots.remove("CANDIDATE_FN");
        assert_eq!(instantiate(UNIT_TEMPLATE, &slots).unwrap_err(), HarnessError::SlotMissing("CANDIDATE_FN".into()));
    }

    fn leak(s: &str) -> &'static str {
        Box::leak(s.to_string().into_boxed_str())
    }

    #[test]
    fn values_are_not_rescanned() {
        let slots = BTreeMap::from([("A", "@@B@@".to_string())]);
        assert_eq!(instantiate("@@A@@", &slots).unwrap(), "@@B@@");
    }

    #[test]
    fn unterminated_marker() {
        assert_eq!(instantiate("ab @@X", &BTreeMap::new()).unwrap_err(), HarnessError::Unterminated(3));
    }

    #[test]
    fn template_slot_sets() {
        assert_eq!(slot_names(UNIT_TEMPLATE), ["PRELUDE", "CONTEXT", "ORIGINAL_FN", "CANDIDATE_FN", "DRIVER"]);
        assert_eq!(slot_names(COMMON_TEMPLATE), ["RANGES", "RET_KIND", "INVOKE"]);
        for s in ["ORIGINAL_NAME", "SLOT_NAME", "COMPARE_POLICY", "TRIALS", "SEED", "COMMON"] {
            assert!(slot_names(DIFFERENTIAL_TEMPLATE).contains(&s.to_string()), "{s}");
        }
    }

    #[test]
    fn c_double_always_has_a_point() {
        assert_eq!(c_double(1.0), "1.0");
        assert_eq!(c_double(-8.0), "-8.0");
        assert_eq!(c_double(0.25), "0.25");
    }
}
