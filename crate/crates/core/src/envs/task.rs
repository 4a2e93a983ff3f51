//! Declarative task files: objects, initial atoms and goal for a hidden domain.

use std::collections::BTreeMap;

use induct_pddl::{
    parse_condition, parse_domain, parse_ground_atom, CondKind, Domain, GroundAtom, Name, Problem,
};
use serde::Deserialize;

use super::{EnvError, EnvId};

const BLOCKSWORLD: &str = include_str!("../../data/domains/blocksworld.pddl");
const GRIDQUEST: &str = include_str!("../../data/domains/gridquest.pddl");

const TASK_FILES: &[(&str, &str)] = &[
    ("blocksworld-task0", include_str!("../../data/tasks/blocksworld-task0.toml")),
    ("blocksworld-task1", include_str!("../../data/tasks/blocksworld-task1.toml")),
    ("blocksworld-task2", include_str!("../../data/tasks/blocksworld-task2.toml")),
    ("blocksworld-task3", include_str!("../../data/tasks/blocksworld-task3.toml")),
    ("gridquest-quest1", include_str!("../../data/tasks/gridquest-quest1.toml")),
    ("gridquest-quest2", include_str!("../../data/tasks/gridquest-quest2.toml")),
];

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskFile {
    id: String,
    env: EnvId,
    text: String,
    goal: String,
    #[serde(default)]
    objects: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    init: Vec<String>,
    grid: Option<GridFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    width: usize,
    height: usize,
    start: [usize; 2],
    items: BTreeMap<String, [usize; 2]>,
    monsters: BTreeMap<String, [usize; 2]>,
    beats: BTreeMap<String, String>,
}

/// Cell coordinates of a grid task, keyed by cell object name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridLayout {
    pub width: usize,
    pub height: usize,
    pub cells: BTreeMap<Name, (usize, usize)>,
}

impl GridLayout {
    pub fn cell_name(r: usize, c: usize) -> Name {
        Name::new(&format!("r{r}c{c}"))
    }

    /// Cells within Chebyshev distance `radius` of `cell`.
    pub fn neighborhood(&self, cell: &Name, radius: usize) -> Vec<Name> {
        let Some(&(r, c)) = self.cells.get(cell) else { return Vec::new() };
        let mut out = Vec::new();
        for rr in r.saturating_sub(radius)..=(r + radius).min(self.height - 1) {
            for cc in c.saturating_sub(radius)..=(c + radius).min(self.width - 1) {
                out.push(Self::cell_name(rr, cc));
            }
        }
        out
    }
}

/// A task: the hidden domain, the true problem and the instruction text.
#[derive(Clone, Debug)]
pub struct Task {
    pub id: String,
    pub env: EnvId,
    pub text: String,
    pub domain: Domain,
    pub problem: Problem,
    pub grid: Option<GridLayout>,
}

impl Task {
    /// Built-in task by environment and id.
    pub fn builtin(env: EnvId, id: &str) -> Result<Task, EnvError> {
        let key = format!("{env}-{id}");
        let (_, text) = TASK_FILES
            .iter()
            .find(|(k, _)| *k == key)
            .ok_or_else(|| EnvError::UnknownTask { env, task: id.to_string() })?;
        Task::from_toml(text)
    }

    pub fn builtin_ids(env: EnvId) -> Vec<String> {
        let prefix = format!("{env}-");
        TASK_FILES.iter().filter_map(|(k, _)| k.strip_prefix(&prefix).map(str::to_string)).collect()
    }

    pub fn from_toml(text: &str) -> Result<Task, EnvError> {
        let f: TaskFile = toml::from_str(text).map_err(|e| EnvError::Task(e.to_string()))?;
        let domain = parse_domain(match f.env {
            EnvId::Blocksworld => BLOCKSWORLD,
            EnvId::Gridquest => GRIDQUEST,
        })
        .map_err(|e| EnvError::Task(format!("hidden domain: {e}")))?;

        let mut objects: Vec<(Name, Name)> = Vec::new();
        for (ty, names) in &f.objects {
            objects.extend(names.iter().map(|n| (Name::new(n), Name::new(ty))));
        }
        let mut init: Vec<GroundAtom> = Vec::new();
        for a in &f.init {
            init.push(parse_ground_atom(a).map_err(|e| EnvError::Task(format!("init atom `{a}`: {e}")))?);
        }
        let grid = match (&f.grid, f.env) {
            (Some(g), EnvId::Gridquest) => Some(expand_grid(g, &mut objects, &mut init)?),
            (None, EnvId::Gridquest) => return Err(EnvError::Task("gridquest task without [grid]".into())),
            (Some(_), _) => return Err(EnvError::Task("[grid] is only valid for gridquest".into())),
            (None, _) => None,
        };
        let goal = parse_condition(&f.goal, CondKind::Goal, &domain, &[], &objects)
            .map_err(|e| EnvError::Task(format!("goal: {e}")))?;
        let problem = Problem {
            name: Name::new(&f.id),
            domain_name: domain.name.clone(),
            objects,
            init: init.into_iter().collect(),
            goal,
        };
        induct_pddl::semantics::check_problem(&domain, &problem).map_err(|e| EnvError::Task(e.to_string()))?;
        Ok(Task { id: f.id, env: f.env, text: f.text, domain, problem, grid })
    }
}

fn expand_grid(g: &GridFile, objects: &mut Vec<(Name, Name)>, init: &mut Vec<GroundAtom>) -> Result<GridLayout, EnvError> {
    let in_bounds = |[r, c]: [usize; 2]| r < g.height && c < g.width;
    let mut cells = BTreeMap::new();
    for r in 0..g.height {
        for c in 0..g.width {
            let n = GridLayout::cell_name(r, c);
            objects.push((n.clone(), Name::new("cell")));
            cells.insert(n, (r, c));
        }
    }
    let cell = |p: [usize; 2]| GridLayout::cell_name(p[0], p[1]);
    for r in 0..g.height {
        for c in 0..g.width {
            let here = cell([r, c]);
            let mut next = Vec::new();
            if r > 0 {
                next.push([r - 1, c]);
            }
            if r + 1 < g.height {
                next.push([r + 1, c]);
            }
            if c > 0 {
                next.push([r, c - 1]);
            }
            if c + 1 < g.width {
                next.push([r, c + 1]);
            }
            for n in next {
                init.push(GroundAtom { predicate: Name::new("adj"), args: vec![here.clone(), cell(n)] });
            }
        }
    }
    if !in_bounds(g.start) {
        return Err(EnvError::Task("start outside the grid".into()));
    }
    init.push(GroundAtom { predicate: Name::new("at"), args: vec![cell(g.start)] });
    init.push(GroundAtom::new("hand-empty", &[]));
    for (item, &pos) in &g.items {
        if !in_bounds(pos) {
            return Err(EnvError::Task(format!("item `{item}` outside the grid")));
        }
        objects.push((Name::new(item), Name::new("item")));
        init.push(GroundAtom { predicate: Name::new("item-at"), args: vec![Name::new(item), cell(pos)] });
    }
    for (m, &pos) in &g.monsters {
        if !in_bounds(pos) {
            return Err(EnvError::Task(format!("monster `{m}` outside the grid")));
        }
        objects.push((Name::new(m), Name::new("monster")));
        init.push(GroundAtom { predicate: Name::new("monster-at"), args: vec![Name::new(m), cell(pos)] });
        init.push(GroundAtom { predicate: Name::new("guarded"), args: vec![cell(pos)] });
    }
    for (item, m) in &g.beats {
        init.push(GroundAtom { predicate: Name::new("beats"), args: vec![Name::new(item), Name::new(m)] });
    }
    Ok(GridLayout { width: g.width, height: g.height, cells })
}
