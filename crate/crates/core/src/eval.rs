//! Metrics: path-set F1 against a reference domain, and run summaries.

use std::collections::{BTreeMap, BTreeSet};

use induct_pddl::{parse_domain, Domain};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::domain_paths;
use crate::orchestrator::{RunTrace, TraceEvent};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("action signatures differ: {0}")]
    SignatureMismatch(String),
    #[error("trace ends without a run report")]
    Truncated,
    #[error("final domain in the trace does not parse: {0}")]
    Domain(#[from] induct_pddl::PddlError),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ActionCounts {
    pub common: usize,
    pub predicted: usize,
    pub truth: usize,
}

/// All scores in percent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct F1Report {
    /// Shared paths over reference paths.
    pub precision: f64,
    /// Shared paths over predicted paths.
    pub recall: f64,
    pub f1: f64,
    /// The same two ratios under the conventional naming (over predicted / over reference).
    pub conventional_precision: f64,
    pub conventional_recall: f64,
    pub per_action: BTreeMap<String, ActionCounts>,
    pub missing: Vec<String>,
    pub spurious: Vec<String>,
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn action_of(path: &str) -> String {
    path.split('_').next().unwrap_or_default().to_string()
}

/// Pooled F1 between predicted and reference path sets.
pub fn f1_paths(predicted: &BTreeSet<String>, truth: &BTreeSet<String>) -> F1Report {
    let common: BTreeSet<&String> = predicted.intersection(truth).collect();
    let (c, np, nt) = (common.len() as f64, predicted.len() as f64, truth.len() as f64);
    let mut per_action: BTreeMap<String, ActionCounts> = BTreeMap::new();
    for p in predicted {
        per_action.entry(action_of(p)).or_default().predicted += 1;
    }
    for p in truth {
        per_action.entry(action_of(p)).or_default().truth += 1;
    }
    for p in &common {
        per_action.entry(action_of(p)).or_default().common += 1;
    }
    let missing = truth.difference(predicted).cloned().collect();
    let spurious = predicted.difference(truth).cloned().collect();
    if predicted.is_empty() && truth.is_empty() {
        return F1Report {
            precision: 100.0,
            recall: 100.0,
            f1: 100.0,
            conventional_precision: 100.0,
            conventional_recall: 100.0,
            per_action,
            missing,
            spurious,
        };
    }
    let ratio = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
    let precision = ratio(c, nt);
    let recall = ratio(c, np);
    F1Report {
        precision: 100.0 * precision,
        recall: 100.0 * recall,
        f1: 100.0 * harmonic(precision, recall),
        conventional_precision: 100.0 * recall,
        conventional_recall: 100.0 * precision,
        per_action,
        missing,
        spurious,
    }
}

/// F1 between two domains with identical action signatures.
pub fn f1(predicted: &Domain, truth: &Domain) -> Result<F1Report, EvalError> {
    let sig = |d: &Domain| d.actions.iter().map(|a| a.signature()).collect::<Vec<_>>();
    let (a, b) = (sig(predicted), sig(truth));
    if a.len() != b.len() || a.iter().any(|x| !b.contains(x)) {
        let names = |v: &[induct_pddl::ActionSchema]| v.iter().map(|x| x.name.to_string()).collect::<Vec<_>>().join(",");
        return Err(EvalError::SignatureMismatch(format!("[{}] vs [{}]", names(&a), names(&b))));
    }
    Ok(f1_paths(&domain_paths(predicted), &domain_paths(truth)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub f1: f64,
    pub nr: usize,
    pub nes: usize,
    pub success: bool,
    pub gc_fraction: f64,
    pub iterations: usize,
}

/// Metrics of a finished run. An empty trace yields zeros; a trace that
/// stops before its report is rejected.
pub fn summarize(trace: &RunTrace, truth: &Domain) -> Result<Metrics, EvalError> {
    if trace.events.is_empty() {
        return Ok(Metrics { f1: 0.0, nr: 0, nes: 0, success: false, gc_fraction: 0.0, iterations: 0 });
    }
    let report = trace.report().ok_or(EvalError::Truncated)?;
    let best = parse_domain(&report.best_domain)?;
    Ok(Metrics {
        f1: f1(&best, truth)?.f1,
        nr: report.nr,
        nes: report.nes,
        success: report.success,
        gc_fraction: report.gc_fraction,
        iterations: report.iterations,
    })
}

/// `update,key,belief` rows, one per leaf per belief update.
pub fn belief_series_csv(trace: &RunTrace) -> String {
    let mut s = String::from("update,key,belief\n");
    let mut n = 0;
    for e in &trace.events {
        if let TraceEvent::Belief { beliefs } = e {
            n += 1;
            for b in beliefs {
                s.push_str(&format!("{n},\"{}\",{}\n", b.key.replace('"', "\"\""), b.belief));
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn edge_cases() {
        assert_eq!(f1_paths(&set(&[]), &set(&[])).f1, 100.0);
        assert_eq!(f1_paths(&set(&[]), &set(&["A_pre-and-(p)"])).f1, 0.0);
        assert_eq!(f1_paths(&set(&["A_pre-and-(q)"]), &set(&["A_pre-and-(p)"])).f1, 0.0);
    }

    #[test]
    fn per_action_counts() {
        let r = f1_paths(&set(&["A_pre-and-(p)", "B_post-and-(q)"]), &set(&["A_pre-and-(p)"]));
        assert_eq!(r.per_action["A"], ActionCounts { common: 1, predicted: 1, truth: 1 });
        assert_eq!(r.per_action["B"], ActionCounts { common: 0, predicted: 1, truth: 0 });
        assert_eq!(r.spurious, vec!["B_post-and-(q)".to_string()]);
    }
}
