//! Model-backed roles over a chat-completion transport.
//!
//! Every model answer is gated through the PDDL parser: unparseable fragments
//! are dropped, never repaired by guessing.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use induct_pddl::semantics::check_args;
use induct_pddl::{
    parse_action, parse_condition, parse_ground_action, parse_ground_atom, parse_literal, print_domain, print_problem,
    CondKind, Condition, Domain, GroundAction, Name, Term,
};
use serde::{Deserialize, Serialize};

use super::{
    ErrorPredictor, Exemplar, GoalProposer, PredictedError, ProblemChecker, ProblemEdit, ProposerContext,
    ProposerError, Role, SemanticsGenerator, TrajectorySampler,
};
use crate::belief::{ActionSemantics, ProposedSemantics};

const BUILTIN_TEMPLATES: [(Role, &str); 5] = [
    (Role::Trajectory, include_str!("../../data/prompts/trajectory.txt")),
    (Role::Semantics, include_str!("../../data/prompts/semantics.txt")),
    (Role::Error, include_str!("../../data/prompts/error.txt")),
    (Role::Checker, include_str!("../../data/prompts/checker.txt")),
    (Role::Goal, include_str!("../../data/prompts/goal.txt")),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmEndpointConfig {
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub credential_env: String,
    /// Overrides the per-role default (0.7 for trajectories, 0 otherwise).
    pub temperature: Option<f64>,
    pub max_retries: u32,
    pub timeout_secs: u64,
    /// Directory with one template per role; built-in templates when unset.
    pub prompt_dir: Option<PathBuf>,
    /// Role name → template file name inside `prompt_dir` (default `<role>.txt`).
    pub templates: BTreeMap<String, String>,
}

impl Default for LlmEndpointConfig {
    fn default() -> Self {
        LlmEndpointConfig {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4o".into(),
            credential_env: "OPENAI_API_KEY".into(),
            temperature: None,
            max_retries: 3,
            timeout_secs: 120,
            prompt_dir: None,
            templates: BTreeMap::new(),
        }
    }
}

impl LlmEndpointConfig {
    pub fn temperature_for(&self, role: Role) -> f64 {
        self.temperature.unwrap_or(match role {
            Role::Trajectory => 0.7,
            _ => 0.0,
        })
    }

    pub fn validate(&self) -> Result<(), ProposerError> {
        if let Some(t) = self.temperature {
            if !(0.0..=2.0).contains(&t) {
                return Err(ProposerError::Config(format!("temperature must be in [0, 2], got {t}")));
            }
        }
        for k in self.templates.keys() {
            if !Role::ALL.iter().any(|r| r.as_str() == k) {
                return Err(ProposerError::Config(format!("template for unknown role `{k}`")));
            }
        }
        PromptSet::load(self).map(|_| ())
    }
}

/// One template per role with `{name}` placeholders.
#[derive(Clone, Debug)]
pub struct PromptSet {
    templates: BTreeMap<Role, String>,
}

impl PromptSet {
    pub fn builtin() -> Self {
        PromptSet { templates: BUILTIN_TEMPLATES.iter().map(|(r, t)| (*r, t.to_string())).collect() }
    }

    pub fn load(cfg: &LlmEndpointConfig) -> Result<Self, ProposerError> {
        let Some(dir) = &cfg.prompt_dir else { return Ok(Self::builtin()) };
        let mut templates = BTreeMap::new();
        for role in Role::ALL {
            let file = cfg.templates.get(role.as_str()).cloned().unwrap_or_else(|| format!("{role}.txt"));
            let path = dir.join(file);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| ProposerError::Config(format!("prompt template for {role} at {}: {e}", path.display())))?;
            templates.insert(role, text);
        }
        Ok(PromptSet { templates })
    }

    pub fn render(&self, role: Role, vars: &[(&str, String)]) -> String {
        let mut out = self.templates[&role].clone();
        for (k, v) in vars {
            out = out.replace(&format!("{{{k}}}"), v);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
}

/// Message list in, text out.
pub trait ChatTransport: Send {
    fn complete(&mut self, req: &ChatRequest) -> Result<String, ProposerError>;
}

/// OpenAI-compatible `/chat/completions` endpoint with exponential backoff.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
    url: String,
    api_key: String,
    max_retries: u32,
    base_delay: Duration,
}

impl HttpTransport {
    pub fn new(cfg: &LlmEndpointConfig) -> Result<Self, ProposerError> {
        let api_key = std::env::var(&cfg.credential_env)
            .map_err(|_| ProposerError::Config(format!("environment variable {} is not set", cfg.credential_env)))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_secs))
            .build()
            .map_err(|e| ProposerError::Endpoint(e.to_string()))?;
        Ok(HttpTransport {
            client,
            url: format!("{}/chat/completions", cfg.base_url.trim_end_matches('/')),
            api_key,
            max_retries: cfg.max_retries,
            base_delay: Duration::from_millis(500),
        })
    }

    fn once(&self, req: &ChatRequest) -> Result<String, String> {
        let resp = self.client.post(&self.url).bearer_auth(&self.api_key).json(req).send().map_err(|e| e.to_string())?;
        let status = resp.status();
        let body: serde_json::Value = resp.json().map_err(|e| e.to_string())?;
        if !status.is_success() {
            return Err(format!("HTTP {status}: {body}"));
        }
        body["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| format!("response without message content: {body}"))
    }
}

impl ChatTransport for HttpTransport {
    fn complete(&mut self, req: &ChatRequest) -> Result<String, ProposerError> {
        let mut last = String::new();
        for attempt in 0..=self.max_retries {
            if attempt > 0 {
                std::thread::sleep(self.base_delay * 2u32.pow(attempt - 1));
            }
            match self.once(req) {
                Ok(text) => return Ok(text),
                Err(e) => last = e,
            }
        }
        Err(ProposerError::Endpoint(last))
    }
}

/// Canned responses, returned in order. For tests and offline replays.
#[derive(Debug, Default)]
pub struct ScriptedTransport {
    responses: VecDeque<String>,
}

impl ScriptedTransport {
    pub fn new<S: Into<String>>(responses: impl IntoIterator<Item = S>) -> Self {
        ScriptedTransport { responses: responses.into_iter().map(Into::into).collect() }
    }

    /// Responses recorded in a trace, in order.
    pub fn from_exchanges(exchanges: &[LlmExchange]) -> Self {
        Self::new(exchanges.iter().map(|e| e.response.clone()))
    }
}

impl ChatTransport for ScriptedTransport {
    fn complete(&mut self, _req: &ChatRequest) -> Result<String, ProposerError> {
        self.responses.pop_front().ok_or_else(|| ProposerError::Endpoint("scripted transport exhausted".into()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmExchange {
    pub role: Role,
    pub prompt: String,
    pub response: String,
}

struct ClientInner {
    transport: Box<dyn ChatTransport>,
    log: Vec<LlmExchange>,
}

/// Shared handle; clones talk to the same transport and log.
#[derive(Clone)]
pub struct LlmClient {
    inner: Arc<Mutex<ClientInner>>,
    cfg: LlmEndpointConfig,
}

impl std::fmt::Debug for LlmClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LlmClient").field("model", &self.cfg.model).finish()
    }
}

impl LlmClient {
    pub fn new(transport: Box<dyn ChatTransport>, cfg: LlmEndpointConfig) -> Self {
        LlmClient { inner: Arc::new(Mutex::new(ClientInner { transport, log: Vec::new() })), cfg }
    }

    pub fn ask(&self, role: Role, prompt: String) -> Result<String, ProposerError> {
        let req = ChatRequest {
            model: self.cfg.model.clone(),
            messages: vec![ChatMessage { role: "user".into(), content: prompt.clone() }],
            temperature: self.cfg.temperature_for(role),
        };
        let mut inner = self.inner.lock().unwrap_or_else(|e| e.into_inner());
        let response = inner.transport.complete(&req)?;
        inner.log.push(LlmExchange { role, prompt, response: response.clone() });
        Ok(response)
    }

    /// Exchanges since the last drain.
    pub fn drain(&self) -> Vec<LlmExchange> {
        std::mem::take(&mut self.inner.lock().unwrap_or_else(|e| e.into_inner()).log)
    }
}

/// Balanced top-level parenthesized spans of `text`.
pub fn extract_sexprs(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' => {
                if depth == 0 {
                    start = i;
                }
                depth += 1;
            }
            ')' if depth > 0 => {
                depth -= 1;
                if depth == 0 {
                    out.push(&text[start..=i]);
                }
            }
            _ => {}
        }
    }
    out
}

/// All five roles backed by one model client.
#[derive(Clone, Debug)]
pub struct LlmProposer {
    client: LlmClient,
    prompts: PromptSet,
}

impl LlmProposer {
    pub fn new(client: LlmClient, prompts: PromptSet) -> Self {
        LlmProposer { client, prompts }
    }

    fn context_vars(ctx: &ProposerContext) -> Vec<(&'static str, String)> {
        let mut obs = String::new();
        for (i, o) in ctx.observations.iter().enumerate() {
            let _ = writeln!(obs, "o{i}:\n{}", o.render());
        }
        let mut acts = String::new();
        for (i, a) in ctx.actions.iter().enumerate() {
            let status = ctx.statuses.get(i).map(|s| format!("{s:?}")).unwrap_or_default();
            let _ = writeln!(acts, "a{}: {a}  [{}]", i + 1, status.to_lowercase());
        }
        let partial = ctx.partial_plan.as_ref().map(|p| lines(p)).unwrap_or_default();
        vec![
            ("domain", print_domain(&ctx.domain)),
            ("problem", print_problem(&ctx.problem)),
            ("observations", obs),
            ("actions", acts),
            ("partial_plan", partial),
            ("task", ctx.task_text.clone()),
        ]
    }
}

fn lines(actions: &[GroundAction]) -> String {
    actions.iter().map(|a| format!("{a}\n")).collect()
}

/// Rename an action's parameters to the skeleton's when the types line up.
fn align_params(schema: induct_pddl::ActionSchema, sig: &induct_pddl::ActionSchema) -> Option<(Condition, Condition)> {
    if schema.params.len() != sig.params.len() || schema.params.iter().zip(&sig.params).any(|(a, b)| a.ty != b.ty) {
        return None;
    }
    let bind: BTreeMap<Name, Term> =
        schema.params.iter().zip(&sig.params).map(|(a, b)| (a.name.clone(), Term::Var(b.name.clone()))).collect();
    Some((schema.precondition.substitute(&bind), schema.effect.substitute(&bind)))
}

impl TrajectorySampler for LlmProposer {
    fn sample_trajectory(&mut self, ctx: &ProposerContext) -> Result<Vec<GroundAction>, ProposerError> {
        let prompt = self.prompts.render(Role::Trajectory, &Self::context_vars(ctx));
        let text = self.client.ask(Role::Trajectory, prompt)?;
        let plan: Vec<GroundAction> = extract_sexprs(&text)
            .into_iter()
            .filter_map(|s| parse_ground_action(s).ok())
            .filter(|a| {
                ctx.skeleton
                    .action(a.name.as_str())
                    .is_some_and(|sch| check_args(&ctx.skeleton, sch, &a.args, &ctx.problem).is_ok())
            })
            .collect();
        if plan.is_empty() {
            return Err(ProposerError::Unparseable { role: Role::Trajectory });
        }
        Ok(plan)
    }
}

impl SemanticsGenerator for LlmProposer {
    fn generate_semantics(
        &mut self,
        ctx: &ProposerContext,
        error: Option<&PredictedError>,
    ) -> Result<ProposedSemantics, ProposerError> {
        let mut vars = Self::context_vars(ctx);
        vars.push(("error", error.map(|e| e.render()).unwrap_or_else(|| "none".into())));
        let prompt = self.prompts.render(Role::Semantics, &vars);
        let text = self.client.ask(Role::Semantics, prompt)?;
        let mut out = ProposedSemantics::default();
        for s in extract_sexprs(&text) {
            let parsed = parse_action(s, &ctx.skeleton).ok().and_then(|a| {
                let sig = ctx.skeleton.action(a.name.as_str())?;
                let name = sig.name.clone();
                let (pre, post) = align_params(a, sig)?;
                Some((name, ActionSemantics { pre, post }))
            });
            match parsed {
                Some((name, sem)) => {
                    let single = ProposedSemantics {
                        actions: [(name.clone(), sem.clone())].into_iter().collect(),
                        dropped: Vec::new(),
                    };
                    if single.validate(&ctx.skeleton).is_ok() && !out.actions.contains_key(&name) {
                        out.actions.insert(name, sem);
                    } else {
                        out.dropped.push(s.to_string());
                    }
                }
                None => out.dropped.push(s.to_string()),
            }
        }
        if out.actions.is_empty() {
            return Err(ProposerError::Unparseable { role: Role::Semantics });
        }
        for a in &ctx.skeleton.actions {
            out.actions
                .entry(a.name.clone())
                .or_insert_with(|| ActionSemantics { pre: Condition::empty(), post: Condition::empty() });
        }
        Ok(out)
    }
}

impl ErrorPredictor for LlmProposer {
    fn predict_error(&mut self, ctx: &ProposerContext) -> Result<PredictedError, ProposerError> {
        let failing = ctx.failing_step();
        let summary = match failing {
            Some(i) => format!("step a{} ({}) did not behave as expected", i + 1, ctx.actions[i]),
            None if ctx.actions.is_empty() => return Err(ProposerError::NoFailure),
            None => "all actions executed but the goal was not reached".to_string(),
        };
        let mut vars = Self::context_vars(ctx);
        vars.push(("error", summary));
        let prompt = self.prompts.render(Role::Error, &vars);
        let text = self.client.ask(Role::Error, prompt)?;
        let literals: Vec<String> = extract_sexprs(&text)
            .into_iter()
            .filter_map(|s| parse_literal(s).ok())
            .filter(|l| l.atom.is_ground())
            .map(|l| l.to_string())
            .collect();
        let explanation = text
            .lines()
            .find_map(|l| l.trim().strip_prefix("REASON:").map(|r| r.trim().to_string()))
            .unwrap_or_default();
        let e = match failing {
            Some(i) => PredictedError::precondition(i, literals, &explanation),
            None => PredictedError::goal(literals, &explanation),
        };
        e.validate().map_err(|_| ProposerError::Unparseable { role: Role::Error })?;
        Ok(e)
    }
}

impl ProblemChecker for LlmProposer {
    fn check_problem(&mut self, ctx: &ProposerContext) -> Result<Option<ProblemEdit>, ProposerError> {
        let prompt = self.prompts.render(Role::Checker, &Self::context_vars(ctx));
        let text = self.client.ask(Role::Checker, prompt)?;
        let mut edit = ProblemEdit::default();
        for line in text.lines().map(str::trim) {
            if let Some(rest) = line.strip_prefix("OBJECT") {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                if let [name, "-", ty] = parts.as_slice() {
                    if ctx.skeleton.has_type(&Name::new(ty)) {
                        edit.objects_to_add.push((Name::new(name), Name::new(ty)));
                    }
                }
            } else if let Some(rest) = line.strip_prefix("ADD") {
                if let Ok(a) = parse_ground_atom(rest.trim()) {
                    edit.atoms_to_add.push(a);
                }
            } else if let Some(rest) = line.strip_prefix("REMOVE") {
                if let Ok(a) = parse_ground_atom(rest.trim()) {
                    edit.atoms_to_remove.push(a);
                }
            }
        }
        // An edit that does not validate is treated as no edit.
        if edit.is_empty() || edit.apply(&ctx.problem, &ctx.skeleton).is_err() {
            return Ok(None);
        }
        Ok(Some(edit))
    }
}

impl GoalProposer for LlmProposer {
    fn propose_goal(
        &mut self,
        text: &str,
        skeleton: &Domain,
        objects: &[(Name, Name)],
        exemplars: &[Exemplar],
    ) -> Result<Condition, ProposerError> {
        let mut ex = String::new();
        for e in exemplars {
            let _ = writeln!(ex, "Instruction: {}\nGoal: {}", e.text, e.goal);
        }
        let objs: Vec<String> = objects.iter().map(|(o, t)| format!("{o} - {t}")).collect();
        let prompt = self.prompts.render(
            Role::Goal,
            &[
                ("domain", print_domain(skeleton)),
                ("objects", objs.join("\n")),
                ("exemplars", ex),
                ("task", text.to_string()),
            ],
        );
        let answer = self.client.ask(Role::Goal, prompt)?;
        extract_sexprs(&answer)
            .into_iter()
            .find_map(|s| parse_condition(s, CondKind::Goal, skeleton, &[], objects).ok())
            .ok_or_else(|| ProposerError::GoalUnresolvable(text.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sexpr_extraction_skips_noise() {
        let got = extract_sexprs("Sure!\n1. (pickup a)\n2. (stack a (b))) trailing (");
        assert_eq!(got, vec!["(pickup a)", "(stack a (b))"]);
    }

    #[test]
    fn builtin_prompts_have_placeholders() {
        let p = PromptSet::builtin();
        let out = p.render(Role::Trajectory, &[("task", "do it".into())]);
        assert!(out.contains("Task: do it"));
        assert!(out.contains("{domain}"));
    }

    #[test]
    fn missing_template_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = LlmEndpointConfig { prompt_dir: Some(dir.path().to_path_buf()), ..Default::default() };
        assert!(matches!(cfg.validate(), Err(ProposerError::Config(_))));
    }
}
