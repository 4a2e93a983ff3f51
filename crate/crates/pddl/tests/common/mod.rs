#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use induct_pddl::{parse_domain, parse_problem, Domain, GroundAction, Problem};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/corpus")
}

pub fn read(name: &str) -> String {
    fs::read_to_string(corpus_dir().join(name)).unwrap()
}

pub fn domain(name: &str) -> Domain {
    parse_domain(&read(&format!("{name}.pddl"))).unwrap()
}

pub fn problem(domain: &Domain, name: &str) -> Problem {
    parse_problem(&read(&format!("{name}.pddl")), domain).unwrap()
}

pub fn blocksworld() -> Domain {
    domain("blocksworld")
}

pub fn actions(lines: &[&str]) -> Vec<GroundAction> {
    lines.iter().map(|l| l.parse().unwrap()).collect()
}

/// All corpus files as (file name, text), sorted.
pub fn corpus() -> BTreeMap<String, String> {
    fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "pddl"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap()))
        .collect()
}

pub const TASK1_PLAN: [&str; 6] = [
    "(unstack orange green)",
    "(putdown orange)",
    "(unstack green yellow)",
    "(stack green blue)",
    "(pickup yellow)",
    "(stack yellow orange)",
];

pub const TASK2_PLAN: [&str; 8] = [
    "(unstack blue orange)",
    "(putdown blue)",
    "(unstack orange yellow)",
    "(putdown orange)",
    "(unstack yellow green)",
    "(putdown yellow)",
    "(pickup orange)",
    "(stack orange green)",
];

/// Alternative task-2 plan that stacks yellow on blue instead of the table.
pub const TASK2_ALT_PLAN: [&str; 8] = [
    "(unstack blue orange)",
    "(putdown blue)",
    "(unstack orange yellow)",
    "(putdown orange)",
    "(unstack yellow green)",
    "(stack yellow blue)",
    "(pickup orange)",
    "(stack orange green)",
];

pub const TASK3_PLAN: [&str; 8] = [
    "(unstack purple yellow)",
    "(putdown purple)",
    "(unstack yellow green)",
    "(putdown yellow)",
    "(unstack green orange)",
    "(stack green purple)",
    "(pickup blue)",
    "(stack blue green)",
];
