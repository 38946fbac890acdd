//! JSON output. Objects use serde_json's default map, so keys come out sorted.

use serde_json::{json, Map, Value};

use stickychase_core::{
    AnswerSet, Assignment, ChaseResult, ClassificationReport, Instance, Position, SchqaEvent,
    StickinessVerdict,
};

use crate::render::{tuple, NullNames};

fn positions<'a>(ps: impl IntoIterator<Item = &'a Position>) -> Value {
    Value::Array(
        ps.into_iter()
            .map(|p| Value::String(p.to_string()))
            .collect(),
    )
}

pub fn classification(report: &ClassificationReport) -> Value {
    let witnesses: Vec<Value> = report
        .witnesses
        .iter()
        .map(|w| {
            json!({
                "class": w.class.name(),
                "rule": w.rule,
                "variable": &*w.variable,
                "reason": w.reason,
            })
        })
        .collect();
    json!({
        "sticky": report.sticky,
        "weakly_acyclic": report.weakly_acyclic,
        "weakly_sticky": report.weakly_sticky,
        "jws": report.jws,
        "finite_rank_positions": positions(&report.finite_rank_positions),
        "finite_existential_positions": positions(&report.finite_existential_positions),
        "witnesses": witnesses,
    })
}

fn assignment(theta: &Assignment, names: &mut NullNames) -> Value {
    let mut m = Map::new();
    for (v, t) in theta.iter() {
        m.insert(v.to_string(), Value::String(names.term(t)));
    }
    Value::Object(m)
}

/// One record per chase step.
pub fn trace_lines(result: &ChaseResult, names: &mut NullNames) -> Vec<String> {
    result
        .trace
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            json!({
                "step": i + 1,
                "rule": s.rule,
                "assignment": assignment(&s.assignment, names),
                "atom": names.atom(result.instance.get(s.atom)),
                "level": s.level,
            })
            .to_string()
        })
        .collect()
}

pub fn instance(inst: &Instance, status: &str, names: &mut NullNames) -> Value {
    let atoms: Vec<Value> = inst.iter().map(|a| Value::String(names.atom(a))).collect();
    json!({ "status": status, "atoms": atoms })
}

/// One record per applied pair, freeze and resumption.
pub fn run_log_lines(events: &[SchqaEvent], inst: &Instance, names: &mut NullNames) -> Vec<String> {
    events
        .iter()
        .map(|e| {
            match e {
                SchqaEvent::Applied {
                    rule,
                    assignment: theta,
                    atom,
                } => json!({
                    "event": "applied",
                    "rule": rule,
                    "assignment": assignment(theta, names),
                    "atom": names.atom(inst.get(*atom)),
                }),
                SchqaEvent::Frozen(n) => json!({
                    "event": "frozen",
                    "null": names.term(&stickychase_core::Term::Null(*n)),
                }),
                SchqaEvent::Resumption(k) => json!({ "event": "resumption", "number": k }),
            }
            .to_string()
        })
        .collect()
}

pub fn answers(a: &AnswerSet) -> Value {
    let tuples: Vec<Value> = a
        .tuples
        .iter()
        .map(|t| Value::Array(t.iter().map(|c| Value::String(c.to_string())).collect()))
        .collect();
    let mut v = json!({
        "boolean": a.boolean,
        "resumptions_used": a.resumptions_used,
        "tuples": tuples,
    });
    if a.boolean {
        v["holds"] = Value::Bool(a.holds());
    }
    v
}

pub fn verdict(v: &StickinessVerdict) -> Value {
    match v {
        StickinessVerdict::NoViolationUpTo(k) => {
            json!({ "verdict": "no_violation_up_to_k", "k": k })
        }
        StickinessVerdict::Violation {
            step,
            rule,
            variable,
            value,
            missing,
        } => json!({
            "verdict": "violation",
            "step": step,
            "rule": rule,
            "variable": &**variable,
            "value": value.to_string(),
            "missing": missing.to_string(),
        }),
    }
}

/// Text form of a tuple list, shared with the text output.
pub fn answer_lines(a: &AnswerSet) -> Vec<String> {
    a.tuples.iter().map(|t| tuple(t)).collect()
}
