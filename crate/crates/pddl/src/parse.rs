//! Domain, problem and fragment parsers.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::ast::*;
use crate::error::PddlError;
use crate::name::Name;
use crate::sexpr::{read_one, SExpr};

/// Where a condition appears; decides which connectors are legal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CondKind {
    /// Preconditions and goals: `and`, `or`, `not`, `exists`.
    Goal,
    /// Effects: `and`, `not`, `when` (not nested).
    Effect,
}

/// Names a condition may refer to besides bound variables.
struct Ctx<'a> {
    domain: &'a Domain,
    objects: Option<&'a [(Name, Name)]>,
}

impl Ctx<'_> {
    fn known_constant(&self, n: &Name) -> bool {
        self.domain.constants.iter().any(|(c, _)| c == n)
            || self.objects.is_some_and(|objs| objs.iter().any(|(o, _)| o == n))
    }
}

pub fn parse_domain(text: &str) -> Result<Domain, PddlError> {
    let top = read_one(text)?;
    let items = top.expect_list("`(define ...)`")?;
    expect_head(&top, "define")?;
    let header = items.get(1).ok_or_else(|| top.err("missing `(domain <name>)`"))?;
    let h = header.expect_list("`(domain <name>)`")?;
    if header.head().as_deref() != Some("domain") || h.len() != 2 {
        return Err(header.err("expected `(domain <name>)`"));
    }
    let name = Name::new(h[1].expect_sym("domain name")?);

    let mut domain = Domain {
        name,
        requirements: Vec::new(),
        types: BTreeMap::new(),
        constants: Vec::new(),
        predicates: Vec::new(),
        actions: Vec::new(),
    };
    let mut pending_actions = Vec::new();

    for section in &items[2..] {
        let head = section.head().ok_or_else(|| section.err("expected a `(:section ...)`"))?;
        let body = &section.list().unwrap()[1..];
        match head.as_str() {
            ":requirements" => {
                for r in body {
                    let s = r.expect_sym("requirement flag")?;
                    let flag = s.strip_prefix(':').ok_or_else(|| r.err("requirement flags start with `:`"))?;
                    let flag = flag.to_ascii_lowercase();
                    if !SUPPORTED_REQUIREMENTS.contains(&flag.as_str()) {
                        return Err(PddlError::UnsupportedRequirement(flag));
                    }
                    domain.requirements.push(Name::new(&flag));
                }
            }
            ":types" => {
                for (child, parent) in typed_list(body, false)? {
                    if child.as_str() == OBJECT {
                        continue;
                    }
                    domain.types.insert(child, parent);
                }
                let parents: Vec<Name> = domain.types.values().cloned().collect();
                for p in parents {
                    if p.as_str() != OBJECT && !domain.types.contains_key(&p) {
                        domain.types.insert(p, Name::new(OBJECT));
                    }
                }
                check_type_forest(&domain.types, section)?;
            }
            ":constants" => {
                for (c, ty) in typed_list(body, false)? {
                    require_type(&domain, &ty)?;
                    domain.constants.push((c, ty));
                }
            }
            ":predicates" => {
                for p in body {
                    let l = p.expect_list("predicate declaration")?;
                    let pname = Name::new(l.first().ok_or_else(|| p.err("empty predicate"))?.expect_sym("predicate name")?);
                    let params = typed_list(&l[1..], true)?;
                    for v in &params {
                        require_type(&domain, &v.1)?;
                    }
                    if domain.predicate(pname.as_str()).is_some() {
                        return Err(PddlError::DuplicatePredicate(pname));
                    }
                    domain.predicates.push(PredicateDecl {
                        name: pname,
                        params: params.into_iter().map(|(n, t)| TypedVar { name: n, ty: t }).collect(),
                    });
                }
            }
            ":action" => pending_actions.push(section),
            other => return Err(section.err(format!("unsupported domain section `{other}`"))),
        }
    }

    for a in pending_actions {
        let action = parse_action_sexpr(a, &domain)?;
        if domain.action(action.name.as_str()).is_some() {
            return Err(PddlError::DuplicateAction(action.name));
        }
        domain.actions.push(action);
    }
    Ok(domain)
}

/// Parse a single `(:action ...)` block against an existing domain's
/// predicates and types.
pub fn parse_action(text: &str, domain: &Domain) -> Result<ActionSchema, PddlError> {
    let e = read_one(text)?;
    parse_action_sexpr(&e, domain)
}

fn parse_action_sexpr(e: &SExpr, domain: &Domain) -> Result<ActionSchema, PddlError> {
    if e.head().as_deref() != Some(":action") {
        return Err(e.err("expected `(:action ...)`"));
    }
    let l = e.list().unwrap();
    let name = Name::new(l.get(1).ok_or_else(|| e.err("missing action name"))?.expect_sym("action name")?);
    let mut params = Vec::new();
    let mut pre = None;
    let mut eff = None;
    let mut i = 2;
    while i < l.len() {
        let key = l[i].expect_sym("`:parameters`, `:precondition` or `:effect`")?.to_ascii_lowercase();
        let val = l.get(i + 1).ok_or_else(|| l[i].err(format!("missing value for `{key}`")))?;
        match key.as_str() {
            ":parameters" => {
                params = typed_list(val.expect_list("parameter list")?, true)?
                    .into_iter()
                    .map(|(n, t)| TypedVar { name: n, ty: t })
                    .collect::<Vec<_>>();
                for p in &params {
                    require_type(domain, &p.ty)?;
                }
            }
            ":precondition" => pre = Some(val),
            ":effect" => eff = Some(val),
            other => return Err(l[i].err(format!("unexpected action key `{other}`"))),
        }
        i += 2;
    }
    let ctx = Ctx { domain, objects: None };
    let mut scope: Vec<Name> = params.iter().map(|p| p.name.clone()).collect();
    let precondition = match pre {
        Some(p) if !is_empty_list(p) => condition(p, CondKind::Goal, true, &mut scope, &ctx)?,
        _ => Condition::empty(),
    };
    let effect = match eff {
        Some(p) if !is_empty_list(p) => condition(p, CondKind::Effect, true, &mut scope, &ctx)?,
        _ => Condition::empty(),
    };
    Ok(ActionSchema { name, params, precondition, effect })
}

pub fn parse_problem(text: &str, domain: &Domain) -> Result<Problem, PddlError> {
    let top = read_one(text)?;
    let items = top.expect_list("`(define ...)`")?;
    expect_head(&top, "define")?;
    let header = items.get(1).ok_or_else(|| top.err("missing `(problem <name>)`"))?;
    let h = header.expect_list("`(problem <name>)`")?;
    if header.head().as_deref() != Some("problem") || h.len() != 2 {
        return Err(header.err("expected `(problem <name>)`"));
    }
    let name = Name::new(h[1].expect_sym("problem name")?);
    let mut domain_name = None;
    let mut objects: Vec<(Name, Name)> = Vec::new();
    let mut init_exprs: Vec<&SExpr> = Vec::new();
    let mut goal_expr = None;
    for section in &items[2..] {
        let head = section.head().ok_or_else(|| section.err("expected a `(:section ...)`"))?;
        let body = &section.list().unwrap()[1..];
        match head.as_str() {
            ":domain" => {
                let d = body.first().ok_or_else(|| section.err("missing domain name"))?;
                domain_name = Some(Name::new(d.expect_sym("domain name")?));
            }
            ":objects" => {
                for (o, ty) in typed_list(body, false)? {
                    require_type(domain, &ty)?;
                    if objects.iter().any(|(x, _)| *x == o) {
                        return Err(section.err(format!("duplicate object `{o}`")));
                    }
                    objects.push((o, ty));
                }
            }
            ":init" => init_exprs.extend(body.iter()),
            ":goal" => {
                if body.len() != 1 {
                    return Err(section.err("`:goal` takes exactly one condition"));
                }
                goal_expr = Some(&body[0]);
            }
            other => return Err(section.err(format!("unsupported problem section `{other}`"))),
        }
    }
    let domain_name = domain_name.ok_or_else(|| top.err("missing `(:domain ...)`"))?;
    let ctx = Ctx { domain, objects: Some(&objects) };
    let mut init = BTreeSet::new();
    for e in init_exprs {
        let atom = atom(e, &mut Vec::new(), &ctx)?;
        init.insert(atom.to_ground()?);
    }
    let goal = match goal_expr {
        Some(g) if !is_empty_list(g) => condition(g, CondKind::Goal, false, &mut Vec::new(), &ctx)?,
        _ => Condition::empty(),
    };
    Ok(Problem { name, domain_name, objects, init, goal })
}

/// Parse a condition fragment such as a goal or an action's precondition.
///
/// `params` are the variables in scope; `objects` are constants accepted in
/// addition to the domain's own.
pub fn parse_condition(
    text: &str,
    kind: CondKind,
    domain: &Domain,
    params: &[TypedVar],
    objects: &[(Name, Name)],
) -> Result<Condition, PddlError> {
    let e = read_one(text)?;
    if is_empty_list(&e) {
        return Ok(Condition::empty());
    }
    let ctx = Ctx { domain, objects: Some(objects) };
    let mut scope: Vec<Name> = params.iter().map(|p| p.name.clone()).collect();
    condition(&e, kind, true, &mut scope, &ctx)
}

/// Syntax-only parse of `(pred a b)`; no declaration checks.
pub fn parse_ground_atom(text: &str) -> Result<GroundAtom, PddlError> {
    let e = read_one(text)?;
    let l = e.expect_list("`(predicate args...)`")?;
    let mut syms = l.iter().map(|s| s.expect_sym("identifier"));
    let pred = syms.next().ok_or_else(|| e.err("empty atom"))??;
    let args = syms.map(|s| s.map(Name::new)).collect::<Result<Vec<_>, _>>()?;
    if let Some(v) = args.iter().find(|a| a.is_variable()) {
        return Err(PddlError::FreeVariable(v.clone()));
    }
    Ok(GroundAtom { predicate: Name::new(pred), args })
}

/// Syntax-only parse of `(action a b)`.
pub fn parse_ground_action(text: &str) -> Result<GroundAction, PddlError> {
    let a = parse_ground_atom(text)?;
    Ok(GroundAction { name: a.predicate, args: a.args })
}

/// Syntax-only parse of `(p ?x c)` or `(not (p ?x c))`.
pub fn parse_literal(text: &str) -> Result<Literal, PddlError> {
    let e = read_one(text)?;
    let (inner, negated) = if e.head().as_deref() == Some("not") {
        let l = e.list().unwrap();
        if l.len() != 2 {
            return Err(e.err("`not` takes one atom"));
        }
        (&l[1], true)
    } else {
        (&e, false)
    };
    let l = inner.expect_list("atom")?;
    let mut syms = l.iter().map(|s| s.expect_sym("identifier"));
    let pred = syms.next().ok_or_else(|| inner.err("empty atom"))??;
    let args = syms
        .map(|s| s.map(|s| if s.starts_with('?') { Term::Var(Name::new(s)) } else { Term::Const(Name::new(s)) }))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Literal { atom: Atom { predicate: Name::new(pred), args }, negated })
}

fn expect_head(e: &SExpr, head: &str) -> Result<(), PddlError> {
    if e.head().as_deref() == Some(head) {
        Ok(())
    } else {
        Err(e.err(format!("expected `({head} ...)`")))
    }
}

fn is_empty_list(e: &SExpr) -> bool {
    matches!(e.list(), Some(l) if l.is_empty())
}

fn require_type(domain: &Domain, ty: &Name) -> Result<(), PddlError> {
    if domain.has_type(ty) {
        Ok(())
    } else {
        Err(PddlError::UnknownType(ty.clone()))
    }
}

fn check_type_forest(types: &BTreeMap<Name, Name>, at: &SExpr) -> Result<(), PddlError> {
    for start in types.keys() {
        let mut seen = HashSet::new();
        let mut cur = start;
        while let Some(p) = types.get(cur) {
            if !seen.insert(cur.clone()) {
                return Err(at.err(format!("type hierarchy has a cycle through `{start}`")));
            }
            cur = p;
        }
    }
    Ok(())
}

/// `a b - t c - u d` -> [(a,t),(b,t),(c,u),(d,object)].
fn typed_list(items: &[SExpr], variables: bool) -> Result<Vec<(Name, Name)>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<Name> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let s = items[i].expect_sym(if variables { "variable" } else { "name" })?;
        if s == "-" {
            let ty = items.get(i + 1).ok_or_else(|| items[i].err("missing type after `-`"))?;
            let ty = Name::new(ty.expect_sym("type name (`either` is not supported)")?);
            if pending.is_empty() {
                return Err(items[i].err("`-` without preceding names"));
            }
            out.extend(pending.drain(..).map(|n| (n, ty.clone())));
            i += 2;
            continue;
        }
        if variables != s.starts_with('?') {
            return Err(items[i].err(if variables {
                format!("expected a `?variable`, found `{s}`")
            } else {
                format!("unexpected variable `{s}`")
            }));
        }
        pending.push(Name::new(s));
        i += 1;
    }
    out.extend(pending.into_iter().map(|n| (n, Name::new(OBJECT))));
    Ok(out)
}

fn atom(e: &SExpr, scope: &mut Vec<Name>, ctx: &Ctx<'_>) -> Result<Atom, PddlError> {
    let l = e.expect_list("atom")?;
    let pred = Name::new(l.first().ok_or_else(|| e.err("empty atom"))?.expect_sym("predicate name")?);
    if pred.as_str() == "=" {
        return Err(e.err("equality is not supported"));
    }
    let decl = ctx.domain.predicate(pred.as_str()).ok_or_else(|| PddlError::UnknownPredicate(pred.clone()))?;
    let args = &l[1..];
    if args.len() != decl.params.len() {
        return Err(PddlError::PredicateArity { name: pred, expected: decl.params.len(), got: args.len() });
    }
    let mut terms = Vec::with_capacity(args.len());
    for a in args {
        let s = a.expect_sym("argument")?;
        let n = Name::new(s);
        if n.is_variable() {
            if !scope.contains(&n) {
                return Err(PddlError::UnboundVariable(n));
            }
            terms.push(Term::Var(n));
        } else {
            if !ctx.known_constant(&n) {
                return Err(PddlError::UnknownObject(n));
            }
            terms.push(Term::Const(n));
        }
    }
    Ok(Atom { predicate: pred, args: terms })
}

fn condition(
    e: &SExpr,
    kind: CondKind,
    allow_when: bool,
    scope: &mut Vec<Name>,
    ctx: &Ctx<'_>,
) -> Result<Condition, PddlError> {
    let l = e.expect_list("condition")?;
    if l.is_empty() {
        return Err(e.err("empty condition"));
    }
    let head = e.head().ok_or_else(|| e.err("condition must start with a symbol"))?;
    match head.as_str() {
        "and" => Ok(Condition::And(
            l[1..].iter().map(|c| condition(c, kind, allow_when, scope, ctx)).collect::<Result<_, _>>()?,
        )),
        "or" => {
            if kind == CondKind::Effect {
                return Err(PddlError::OrInEffect);
            }
            Ok(Condition::Or(l[1..].iter().map(|c| condition(c, kind, false, scope, ctx)).collect::<Result<_, _>>()?))
        }
        "not" => {
            if l.len() != 2 {
                return Err(e.err("`not` takes exactly one atom"));
            }
            if l[1].head().is_some_and(|h| matches!(h.as_str(), "and" | "or" | "not" | "when" | "exists")) {
                return Err(l[1].err("`not` applies to atoms only"));
            }
            Ok(Condition::Literal(Literal::neg(atom(&l[1], scope, ctx)?)))
        }
        "when" => {
            if kind != CondKind::Effect || !allow_when {
                return Err(PddlError::IllFormed("`when` is only allowed as a top-level conditional effect".into()));
            }
            if l.len() != 3 {
                return Err(e.err("`when` takes a condition and an effect"));
            }
            let ante = condition(&l[1], CondKind::Goal, false, scope, ctx)?;
            if contains_exists(&ante) {
                return Err(PddlError::IllFormed("`exists` is not allowed in effects".into()));
            }
            let cons = condition(&l[2], CondKind::Effect, false, scope, ctx)?;
            Ok(Condition::When(Box::new(ante), Box::new(cons)))
        }
        "exists" => {
            if kind != CondKind::Goal {
                return Err(PddlError::IllFormed("`exists` is not allowed in effects".into()));
            }
            if l.len() != 3 {
                return Err(e.err("`exists` takes a variable list and a body"));
            }
            let vars: Vec<TypedVar> = typed_list(l[1].expect_list("variable list")?, true)?
                .into_iter()
                .map(|(n, t)| TypedVar { name: n, ty: t })
                .collect();
            for v in &vars {
                require_type(ctx.domain, &v.ty)?;
            }
            let depth = scope.len();
            scope.extend(vars.iter().map(|v| v.name.clone()));
            let body = condition(&l[2], kind, false, scope, ctx);
            scope.truncate(depth);
            Ok(Condition::Exists(vars, Box::new(body?)))
        }
        "forall" | "imply" | "either" | "increase" | "decrease" | "assign" => {
            Err(e.err(format!("`{head}` is outside the supported PDDL fragment")))
        }
        _ => Ok(Condition::Literal(Literal::pos(atom(e, scope, ctx)?))),
    }
}

fn contains_exists(c: &Condition) -> bool {
    match c {
        Condition::Exists(..) => true,
        Condition::Literal(_) => false,
        Condition::And(cs) | Condition::Or(cs) => cs.iter().any(contains_exists),
        Condition::When(a, b) => contains_exists(a) || contains_exists(b),
    }
}
