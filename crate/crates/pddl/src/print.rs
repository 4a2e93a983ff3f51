//! Canonical PDDL printer. Output re-parses to a structurally equal value.

use std::fmt::{self, Write};

use crate::ast::*;

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name().as_str())
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "(not {})", self.atom)
        } else {
            write!(f, "{}", self.atom)
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Literal(l) => write!(f, "{l}"),
            Condition::And(cs) => connective(f, "and", cs),
            Condition::Or(cs) => connective(f, "or", cs),
            Condition::When(a, b) => write!(f, "(when {a} {b})"),
            Condition::Exists(vars, body) => {
                f.write_str("(exists (")?;
                write_typed(f, vars.iter().map(|v| (&v.name, &v.ty)))?;
                write!(f, ") {body})")
            }
        }
    }
}

fn connective(f: &mut fmt::Formatter<'_>, op: &str, cs: &[Condition]) -> fmt::Result {
    if cs.is_empty() {
        return write!(f, "({op} )");
    }
    write!(f, "({op}")?;
    for c in cs {
        write!(f, " {c}")?;
    }
    f.write_str(")")
}

/// Typed list with consecutive same-type names grouped: `a b - block c - cell`.
fn write_typed<'a, W: Write>(w: &mut W, items: impl Iterator<Item = (&'a crate::Name, &'a crate::Name)>) -> fmt::Result {
    let items: Vec<_> = items.collect();
    let mut i = 0;
    let mut first = true;
    while i < items.len() {
        let ty = items[i].1;
        let mut j = i;
        while j < items.len() && items[j].1 == ty {
            if !first {
                w.write_char(' ')?;
            }
            first = false;
            w.write_str(items[j].0.as_str())?;
            j += 1;
        }
        write!(w, " - {ty}")?;
        i = j;
    }
    Ok(())
}

impl fmt::Display for ActionSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(:action {}", self.name)?;
        f.write_str("    :parameters (")?;
        write_typed(f, self.params.iter().map(|p| (&p.name, &p.ty)))?;
        writeln!(f, ")")?;
        writeln!(f, "    :precondition {}", self.precondition)?;
        write!(f, "    :effect {})", self.effect)
    }
}

pub fn print_domain(d: &Domain) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "(define (domain {})", d.name);
    if !d.requirements.is_empty() {
        s.push_str("  (:requirements");
        for r in &d.requirements {
            let _ = write!(s, " :{r}");
        }
        s.push_str(")\n");
    }
    if !d.types.is_empty() {
        s.push_str("  (:types ");
        let _ = write_typed(&mut s, d.types.iter());
        s.push_str(")\n");
    }
    if !d.constants.is_empty() {
        s.push_str("  (:constants ");
        let _ = write_typed(&mut s, d.constants.iter().map(|(a, b)| (a, b)));
        s.push_str(")\n");
    }
    s.push_str("  (:predicates");
    for p in &d.predicates {
        let _ = write!(s, "\n    ({}", p.name);
        if !p.params.is_empty() {
            s.push(' ');
            let _ = write_typed(&mut s, p.params.iter().map(|v| (&v.name, &v.ty)));
        }
        s.push(')');
    }
    s.push_str(")\n");
    for a in &d.actions {
        let text = a.to_string();
        for line in text.lines() {
            let _ = writeln!(s, "  {line}");
        }
    }
    s.push_str(")\n");
    s
}

pub fn print_problem(p: &Problem) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "(define (problem {})", p.name);
    let _ = writeln!(s, "  (:domain {})", p.domain_name);
    if !p.objects.is_empty() {
        s.push_str("  (:objects ");
        let _ = write_typed(&mut s, p.objects.iter().map(|(a, b)| (a, b)));
        s.push_str(")\n");
    }
    if !p.init.is_empty() {
        s.push_str("  (:init");
        for a in &p.init {
            let _ = write!(s, "\n    {a}");
        }
        s.push_str(")\n");
    }
    let _ = writeln!(s, "  (:goal {}))", p.goal);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_domain, parse_problem};
    use crate::Name;

    #[test]
    fn when_prints_golden() {
        let x = || Term::Var(Name::new("?x"));
        let c = Condition::When(
            Box::new(Condition::Literal(Literal::pos(Atom::new("clear", vec![x()])))),
            Box::new(Condition::And(vec![
                Condition::Literal(Literal::pos(Atom::new("on-table", vec![x()]))),
                Condition::Literal(Literal::neg(Atom::new("held", vec![x()]))),
            ])),
        );
        assert_eq!(c.to_string(), "(when (clear ?x) (and (on-table ?x) (not (held ?x))))");
    }

    #[test]
    fn empty_and_and_init() {
        assert_eq!(Condition::empty().to_string(), "(and )");
        let d = parse_domain("(define (domain d) (:predicates (p)))").unwrap();
        let p = parse_problem("(define (problem x) (:domain d) (:goal (p)))", &d).unwrap();
        let text = print_problem(&p);
        assert!(!text.contains(":init"), "{text}");
        assert_eq!(parse_problem(&text, &d).unwrap(), p);
    }

    #[test]
    fn typed_grouping() {
        let d = parse_domain("(define (domain d) (:types block cell) (:predicates (p ?a ?b - block ?c - cell)))").unwrap();
        let text = print_domain(&d);
        assert!(text.contains("(p ?a ?b - block ?c - cell)"), "{text}");
        assert_eq!(parse_domain(&text).unwrap(), d);
    }
}
