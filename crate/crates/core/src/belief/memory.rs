use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use induct_pddl::{Domain, Name};
use rand::Rng;

use super::paths::{assemble, LeafPath, TreeKind};
use super::{update_belief, BeliefConfig, BeliefError, ProposedSemantics};

#[derive(Clone, Debug, PartialEq)]
pub struct Leaf {
    pub path: LeafPath,
    pub belief: f64,
    /// Key of the opposite-polarity sibling, when both are in memory.
    pub negation: Option<String>,
    /// First-insertion rank; fixes the order leaves are reassembled in.
    order: u64,
}

/// Immutable snapshot of every statement seen so far, keyed by path.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BeliefMemory {
    leaves: BTreeMap<String, Leaf>,
    next_order: u64,
}

impl BeliefMemory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    pub fn belief(&self, key: &str) -> Option<f64> {
        self.leaves.get(key).map(|l| l.belief)
    }

    pub fn leaf(&self, key: &str) -> Option<&Leaf> {
        self.leaves.get(key)
    }

    /// Leaves in first-insertion order.
    pub fn leaves(&self) -> Vec<&Leaf> {
        let mut v: Vec<&Leaf> = self.leaves.values().collect();
        v.sort_by_key(|l| l.order);
        v
    }

    /// Apply one prediction: every statement predicted now or seen before is
    /// updated; new statements are inserted and negation links refreshed.
    pub fn update(&self, proposed: &ProposedSemantics, skeleton: &Domain, cfg: &BeliefConfig) -> Result<BeliefMemory, BeliefError> {
        cfg.validate()?;
        proposed.validate(skeleton)?;
        let predicted: Vec<LeafPath> = proposed.leaves();
        let predicted_keys: BTreeSet<String> = predicted.iter().map(|l| l.key()).collect();

        let mut next = self.clone();
        for path in predicted {
            let key = path.key();
            if !next.leaves.contains_key(&key) {
                let order = next.next_order;
                next.next_order += 1;
                next.leaves.insert(key, Leaf { path, belief: 0.0, negation: None, order });
            }
        }
        let keys: Vec<String> = next.leaves.keys().cloned().collect();
        for key in &keys {
            let neg_key = next.leaves[key].path.negation().key();
            let linked = next.leaves.contains_key(&neg_key);
            let leaf = next.leaves.get_mut(key).unwrap();
            leaf.negation = linked.then_some(neg_key.clone());
            let prior = self.leaves.get(key).map_or(0.0, |l| l.belief);
            leaf.belief = update_belief(prior, predicted_keys.contains(key), predicted_keys.contains(&neg_key), cfg);
        }
        Ok(next)
    }

    /// Keys of leaves with belief at or above `threshold`.
    pub fn paths_at(&self, threshold: f64) -> BTreeSet<String> {
        self.leaves.iter().filter(|(_, l)| l.belief >= threshold).map(|(k, _)| k.clone()).collect()
    }

    fn build(&self, skeleton: &Domain, mut keep: impl FnMut(&Leaf) -> bool) -> Domain {
        let mut chosen: BTreeMap<(Name, TreeKind), Vec<&LeafPath>> = BTreeMap::new();
        for leaf in self.leaves() {
            if keep(leaf) {
                chosen.entry((leaf.path.action.clone(), leaf.path.kind)).or_default().push(&leaf.path);
            }
        }
        let mut d = skeleton.skeleton();
        for a in &mut d.actions {
            if let Some(ls) = chosen.remove(&(a.name.clone(), TreeKind::Pre)) {
                a.precondition = assemble(ls);
            }
            if let Some(ls) = chosen.remove(&(a.name.clone(), TreeKind::Post)) {
                a.effect = assemble(ls);
            }
        }
        d
    }

    /// Draw each leaf independently with probability equal to its belief.
    pub fn sample_domain<R: Rng + ?Sized>(&self, skeleton: &Domain, rng: &mut R) -> Domain {
        self.build(skeleton, |l| rng.random_bool(l.belief))
    }

    /// Deterministic domain of the leaves with belief ≥ `threshold`.
    pub fn domain_at(&self, skeleton: &Domain, threshold: f64) -> Domain {
        self.build(skeleton, |l| l.belief >= threshold)
    }

    /// Canonical "current best" domain: beliefs ≥ 0.5.
    pub fn best_domain(&self, skeleton: &Domain) -> Domain {
        self.domain_at(skeleton, 0.5)
    }

    /// One tab-separated record per leaf: `action kind path belief`.
    pub fn to_lines(&self) -> String {
        let mut s = String::new();
        for l in self.leaves() {
            let _ = writeln!(s, "{}\t{}\t{}\t{}", l.path.action, l.path.kind, l.path.key(), l.belief);
        }
        s
    }

    pub fn from_lines(text: &str, skeleton: &Domain) -> Result<BeliefMemory, BeliefError> {
        let mut m = BeliefMemory::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let bad = |msg: String| BeliefError::Malformed(format!("line {}: {msg}", i + 1));
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 4 {
                return Err(bad(format!("expected 4 fields, got {}", f.len())));
            }
            let schema = skeleton.action(f[0]).ok_or_else(|| BeliefError::UnknownAction(Name::new(f[0])))?;
            let kind: TreeKind = f[1].parse()?;
            let path = LeafPath::parse(f[2], schema, kind, skeleton)?;
            let belief: f64 = f[3].parse().map_err(|e| bad(format!("belief: {e}")))?;
            if !(0.0..=1.0).contains(&belief) {
                return Err(bad(format!("belief {belief} outside [0,1]")));
            }
            m.push_loaded(f[2], path, belief);
        }
        m.link_negations();
        Ok(m)
    }

    /// Rebuild from `(key, belief)` pairs in insertion order; the action and
    /// tree kind are recovered from each key's prefix.
    pub fn from_entries<'k>(
        entries: impl IntoIterator<Item = (&'k str, f64)>,
        skeleton: &Domain,
    ) -> Result<BeliefMemory, BeliefError> {
        let mut m = BeliefMemory::new();
        for (key, belief) in entries {
            if !(0.0..=1.0).contains(&belief) {
                return Err(BeliefError::Malformed(format!("belief {belief} outside [0,1] for `{key}`")));
            }
            let path = skeleton
                .actions
                .iter()
                .flat_map(|a| [TreeKind::Pre, TreeKind::Post].map(|k| (a, k)))
                .find_map(|(a, k)| LeafPath::parse(key, a, k, skeleton).ok())
                .ok_or_else(|| BeliefError::Malformed(format!("no action of the skeleton matches `{key}`")))?;
            m.push_loaded(key, path, belief);
        }
        m.link_negations();
        Ok(m)
    }

    fn push_loaded(&mut self, key: &str, path: LeafPath, belief: f64) {
        let order = self.next_order;
        self.next_order += 1;
        self.leaves.insert(key.to_string(), Leaf { path, belief, negation: None, order });
    }

    fn link_negations(&mut self) {
        let keys: Vec<String> = self.leaves.keys().cloned().collect();
        for k in keys {
            let neg = self.leaves[&k].path.negation().key();
            if self.leaves.contains_key(&neg) {
                self.leaves.get_mut(&k).unwrap().negation = Some(neg);
            }
        }
    }
}
