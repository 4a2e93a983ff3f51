//! Goal proposal from instruction text, with exemplar retrieval.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use induct_pddl::{parse_condition, CondKind, Condition, Domain, Name};
use serde::Deserialize;

use super::{GoalProposer, ProposerError};

const BUILTIN_CORPUS: &str = include_str!("../../data/goal_corpus.toml");

#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
pub struct Exemplar {
    pub text: String,
    pub goal: String,
}

#[derive(Deserialize)]
struct CorpusFile {
    exemplar: Vec<Exemplar>,
}

pub fn builtin_corpus() -> Vec<Exemplar> {
    toml::from_str::<CorpusFile>(BUILTIN_CORPUS).expect("built-in corpus parses").exemplar
}

pub fn load_corpus(path: &Path) -> Result<Vec<Exemplar>, ProposerError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ProposerError::Config(format!("reading corpus {}: {e}", path.display())))?;
    let f: CorpusFile =
        toml::from_str(&text).map_err(|e| ProposerError::Config(format!("corpus {}: {e}", path.display())))?;
    Ok(f.exemplar)
}

fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '-' || c == '_'))
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

/// Bag-of-tokens F1 overlap in [0, 1].
pub fn token_f1(a: &str, b: &str) -> f64 {
    let count = |ts: Vec<String>| {
        let mut m: BTreeMap<String, usize> = BTreeMap::new();
        for t in ts {
            *m.entry(t).or_default() += 1;
        }
        m
    };
    let (ca, cb) = (count(tokens(a)), count(tokens(b)));
    let (na, nb): (usize, usize) = (ca.values().sum(), cb.values().sum());
    if na == 0 || nb == 0 {
        return 0.0;
    }
    let common: usize = ca.iter().map(|(t, n)| (*n).min(*cb.get(t).unwrap_or(&0))).sum();
    if common == 0 {
        return 0.0;
    }
    let (p, r) = (common as f64 / na as f64, common as f64 / nb as f64);
    2.0 * p * r / (p + r)
}

/// The `k` exemplars most similar to `text`; ties keep corpus order.
pub fn retrieve(text: &str, corpus: &[Exemplar], k: usize) -> Vec<Exemplar> {
    let mut scored: Vec<(f64, usize)> = corpus.iter().enumerate().map(|(i, e)| (token_f1(text, &e.text), i)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.into_iter().take(k).map(|(_, i)| corpus[i].clone()).collect()
}

/// Returns the task's true goal.
#[derive(Debug)]
pub struct OracleGoal {
    goal: Condition,
}

impl OracleGoal {
    pub fn new(goal: Condition) -> Self {
        OracleGoal { goal }
    }
}

impl GoalProposer for OracleGoal {
    fn propose_goal(&mut self, _: &str, _: &Domain, _: &[(Name, Name)], _: &[Exemplar]) -> Result<Condition, ProposerError> {
        Ok(self.goal.clone())
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Slot {
    Word(String),
    Arg(usize),
}

/// A sentence pattern with object slots and the goal atoms it denotes.
#[derive(Clone, Debug)]
struct Template {
    pattern: Vec<Slot>,
    atoms: Vec<(String, Vec<usize>)>,
}

/// Induces sentence templates from the retrieved exemplars (objects become
/// slots) and matches them against the instruction's sentences.
#[derive(Debug, Default)]
pub struct HeuristicGoal;

fn sentences(text: &str) -> Vec<Vec<String>> {
    text.split(['.', ';', '!', '?', '\n']).map(tokens).filter(|s| !s.is_empty()).collect()
}

fn induce(ex: &Exemplar) -> Vec<Template> {
    let Ok(goal) = parse_goal_atoms(&ex.goal) else { return Vec::new() };
    let sents = sentences(&ex.text);
    let mut per_sentence: Vec<Vec<(String, Vec<String>)>> = vec![Vec::new(); sents.len()];
    for (pred, args) in goal {
        if let Some(i) = sents.iter().position(|s| args.iter().all(|a| s.contains(a))) {
            per_sentence[i].push((pred, args));
        }
    }
    let mut out = Vec::new();
    for (sent, atoms) in sents.iter().zip(per_sentence) {
        if atoms.is_empty() {
            continue;
        }
        let mut objects: Vec<String> = Vec::new();
        for (_, args) in &atoms {
            for a in args {
                if !objects.contains(a) {
                    objects.push(a.clone());
                }
            }
        }
        let pattern = sent
            .iter()
            .map(|w| match objects.iter().position(|o| o == w) {
                Some(i) => Slot::Arg(i),
                None => Slot::Word(w.clone()),
            })
            .collect();
        let atoms = atoms
            .into_iter()
            .map(|(p, args)| (p, args.iter().map(|a| objects.iter().position(|o| o == a).unwrap()).collect()))
            .collect();
        out.push(Template { pattern, atoms });
    }
    out
}

/// `(and (p a b) (q c))` → [(p, [a, b]), (q, [c])]; positive atoms only.
fn parse_goal_atoms(text: &str) -> Result<Vec<(String, Vec<String>)>, ()> {
    let toks: Vec<String> = text.replace('(', " ( ").replace(')', " ) ").split_whitespace().map(str::to_lowercase).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        if toks[i] == "(" && i + 1 < toks.len() && toks[i + 1] != "and" && toks[i + 1] != "(" {
            if toks[i + 1] == "not" || toks[i + 1] == "or" || toks[i + 1] == "exists" {
                return Err(());
            }
            let pred = toks[i + 1].clone();
            let mut args = Vec::new();
            let mut j = i + 2;
            while j < toks.len() && toks[j] != ")" {
                args.push(toks[j].clone());
                j += 1;
            }
            out.push((pred, args));
            i = j;
        }
        i += 1;
    }
    Ok(out)
}

fn match_template(t: &Template, sent: &[String], objects: &BTreeSet<String>) -> Option<Vec<String>> {
    if t.pattern.len() != sent.len() {
        return None;
    }
    let mut bind: BTreeMap<usize, String> = BTreeMap::new();
    for (slot, w) in t.pattern.iter().zip(sent) {
        match slot {
            Slot::Word(x) if x == w => {}
            Slot::Word(_) => return None,
            Slot::Arg(i) => {
                if !objects.contains(w) {
                    return None;
                }
                if let Some(prev) = bind.insert(*i, w.clone()) {
                    if &prev != w {
                        return None;
                    }
                }
            }
        }
    }
    let mut atoms = Vec::new();
    for (p, args) in &t.atoms {
        let mut s = format!("({p}");
        for a in args {
            s.push(' ');
            s.push_str(bind.get(a)?);
        }
        s.push(')');
        atoms.push(s);
    }
    Some(atoms)
}

impl GoalProposer for HeuristicGoal {
    fn propose_goal(
        &mut self,
        text: &str,
        skeleton: &Domain,
        objects: &[(Name, Name)],
        exemplars: &[Exemplar],
    ) -> Result<Condition, ProposerError> {
        let templates: Vec<Template> = exemplars.iter().flat_map(induce).collect();
        let names: BTreeSet<String> = objects.iter().map(|(o, _)| o.to_string()).collect();
        let mut atoms: Vec<String> = Vec::new();
        for sent in sentences(text) {
            if let Some(found) = templates.iter().find_map(|t| match_template(t, &sent, &names)) {
                for a in found {
                    if !atoms.contains(&a) {
                        atoms.push(a);
                    }
                }
            }
        }
        if atoms.is_empty() {
            return Err(ProposerError::GoalUnresolvable(text.to_string()));
        }
        let goal = format!("(and {})", atoms.join(" "));
        parse_condition(&goal, CondKind::Goal, skeleton, &[], objects)
            .map_err(|e| ProposerError::GoalUnresolvable(format!("{goal}: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn token_f1_values() {
        assert_eq!(token_f1("a b", "a b"), 1.0);
        assert_eq!(token_f1("a b", "c d"), 0.0);
        // common 1, p = 1/2, r = 1/1
        assert!((token_f1("a b", "a") - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(token_f1("", "a"), 0.0);
    }

    #[test]
    fn retrieval_prefers_overlap() {
        let corpus = builtin_corpus();
        let top = retrieve("Your goal is to move the blocks. x should be on top of y.", &corpus, 2);
        assert_eq!(top.len(), 2);
        assert!(top.iter().all(|e| e.text.contains("move the blocks")));
    }
}
