//! Formula syntax trees and the canonical printer.

use std::collections::BTreeSet;
use std::fmt;

use crate::structures::{NumConst, NumPred};

/// Prefix of variables introduced by numeral expansion.
pub(crate) const NUMERAL_VAR_PREFIX: &str = "_n";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(NumConst),
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(name.to_string())
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Const(c) => f.write_str(c.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    /// An atom over an input relation symbol.
    Input { rel: String, args: Vec<Term> },
    /// An atom over a built-in numeric relation.
    Numeric { pred: NumPred, args: Vec<Term> },
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Exists(String, Box<Formula>),
    ForAll(String, Box<Formula>),
}

impl Formula {
    pub fn input(rel: &str, args: Vec<Term>) -> Self {
        Formula::Input { rel: rel.to_string(), args }
    }

    pub fn numeric(pred: NumPred, args: Vec<Term>) -> Self {
        Formula::Numeric { pred, args }
    }

    pub fn eq(a: Term, b: Term) -> Self {
        Formula::numeric(NumPred::Eq, vec![a, b])
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    /// Conjunction; collapses the empty and singleton cases.
    pub fn and(mut parts: Vec<Formula>) -> Self {
        match parts.len() {
            0 => Formula::True,
            1 => parts.pop().unwrap(),
            _ => Formula::And(parts),
        }
    }

    /// Disjunction; collapses the empty and singleton cases.
    pub fn or(mut parts: Vec<Formula>) -> Self {
        match parts.len() {
            0 => Formula::False,
            1 => parts.pop().unwrap(),
            _ => Formula::Or(parts),
        }
    }

    pub fn exists(var: &str, body: Formula) -> Self {
        Formula::Exists(var.to_string(), Box::new(body))
    }

    pub fn forall(var: &str, body: Formula) -> Self {
        Formula::ForAll(var.to_string(), Box::new(body))
    }

    /// Free variables in sorted order.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free<'a>(&'a self, bound: &mut Vec<&'a str>, out: &mut BTreeSet<String>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Input { args, .. } | Formula::Numeric { args, .. } => {
                for t in args {
                    if let Term::Var(v) = t {
                        if !bound.contains(&v.as_str()) {
                            out.insert(v.clone());
                        }
                    }
                }
            }
            Formula::Not(f) => f.collect_free(bound, out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_free(bound, out)),
            Formula::Exists(v, f) | Formula::ForAll(v, f) => {
                bound.push(v);
                f.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// Every variable bound by some quantifier inside the formula.
    pub fn bound_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Exists(v, _) | Formula::ForAll(v, _) = f {
                out.insert(v.clone());
            }
        });
        out
    }

    /// Pre-order traversal.
    pub fn visit(&self, cb: &mut impl FnMut(&Formula)) {
        cb(self);
        match self {
            Formula::Not(f) | Formula::Exists(_, f) | Formula::ForAll(_, f) => f.visit(cb),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.visit(cb)),
            _ => {}
        }
    }

    /// True iff no input relation symbol occurs anywhere.
    pub fn is_numeric(&self) -> bool {
        let mut numeric = true;
        self.visit(&mut |f| {
            if matches!(f, Formula::Input { .. }) {
                numeric = false;
            }
        });
        numeric
    }

    /// Top-level conjuncts with nested conjunctions flattened.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        flatten(self, true, &mut out);
        out
    }

    /// Top-level disjuncts with nested disjunctions flattened.
    pub fn disjuncts(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        flatten(self, false, &mut out);
        out
    }

    /// If this formula is exactly the expansion of `t = k` for a numeral
    /// `k >= 2`, returns `(t, k)`.
    pub fn as_numeral(&self) -> Option<(&Term, usize)> {
        let (term, k) = match self {
            Formula::Numeric { pred: NumPred::Suc, args } if args[0] == Term::Const(NumConst::One) => {
                (&args[1], 2)
            }
            Formula::Exists(..) => {
                let mut depth = 0;
                let mut cur = self;
                while let Formula::Exists(_, body) = cur {
                    depth += 1;
                    match body.as_ref() {
                        Formula::And(parts) if parts.len() == 2 => cur = &parts[1],
                        _ => return None,
                    }
                }
                match cur {
                    Formula::Numeric { pred: NumPred::Suc, args } => (&args[1], depth + 2),
                    _ => return None,
                }
            }
            _ => return None,
        };
        if let Term::Var(v) = term {
            if v.starts_with(NUMERAL_VAR_PREFIX) {
                return None;
            }
        }
        (expand_numeral(term.clone(), k) == *self).then_some((term, k))
    }
}

fn flatten<'a>(f: &'a Formula, conj: bool, out: &mut Vec<&'a Formula>) {
    match (f, conj) {
        (Formula::And(fs), true) | (Formula::Or(fs), false) => {
            fs.iter().for_each(|g| flatten(g, conj, out))
        }
        _ => out.push(f),
    }
}

/// Expands `t = k` (`k >= 2`) into a successor chain starting at `1`:
/// `SUC(1,t)` for `k = 2`, and for larger `k`
/// `E _n1 . SUC(1,_n1) & E _n2 . SUC(_n1,_n2) & ... & SUC(_n{k-2},t)`.
pub fn expand_numeral(t: Term, k: usize) -> Formula {
    assert!(k >= 2, "numerals 0 and 1 are constants");
    let var = |i: usize| format!("{NUMERAL_VAR_PREFIX}{i}");
    let steps = k - 2;
    if steps == 0 {
        return Formula::numeric(NumPred::Suc, vec![Term::Const(NumConst::One), t]);
    }
    let mut body = Formula::numeric(NumPred::Suc, vec![Term::Var(var(steps)), t]);
    for i in (1..=steps).rev() {
        let prev = if i == 1 { Term::Const(NumConst::One) } else { Term::Var(var(i - 1)) };
        body = Formula::exists(
            &var(i),
            Formula::And(vec![Formula::numeric(NumPred::Suc, vec![prev, Term::Var(var(i))]), body]),
        );
    }
    body
}

// Printing. `!` binds tightest, then `&`, then `|`; a quantifier body extends
// as far right as possible, so quantifiers under a connective are wrapped.

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some((t, k)) = self.as_numeral() {
            return write!(f, "{t} = {k}");
        }
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Input { rel, args } => write_app(f, rel, args),
            Formula::Numeric { pred, args } => match pred {
                NumPred::Eq | NumPred::Le | NumPred::Lt => {
                    write!(f, "{} {} {}", args[0], pred.name(), args[1])
                }
                _ => write_app(f, pred.name(), args),
            },
            Formula::Not(inner) => {
                f.write_str("!")?;
                write_operand(f, inner, |g| {
                    matches!(g, Formula::And(_) | Formula::Or(_) | Formula::Exists(..) | Formula::ForAll(..))
                        && g.as_numeral().is_none()
                })
            }
            Formula::And(parts) => write_joined(f, parts, " & ", |g| {
                matches!(g, Formula::And(_) | Formula::Or(_) | Formula::Exists(..) | Formula::ForAll(..))
                    && g.as_numeral().is_none()
            }),
            Formula::Or(parts) => write_joined(f, parts, " | ", |g| {
                matches!(g, Formula::Or(_) | Formula::Exists(..) | Formula::ForAll(..)) && g.as_numeral().is_none()
            }),
            Formula::Exists(v, body) => write!(f, "E {v} . {body}"),
            Formula::ForAll(v, body) => write!(f, "A {v} . {body}"),
        }
    }
}

fn write_app(f: &mut fmt::Formatter<'_>, name: &str, args: &[Term]) -> fmt::Result {
    write!(f, "{name}(")?;
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{a}")?;
    }
    f.write_str(")")
}

fn write_operand(
    f: &mut fmt::Formatter<'_>,
    g: &Formula,
    needs_parens: impl Fn(&Formula) -> bool,
) -> fmt::Result {
    if needs_parens(g) {
        write!(f, "({g})")
    } else {
        write!(f, "{g}")
    }
}

fn write_joined(
    f: &mut fmt::Formatter<'_>,
    parts: &[Formula],
    sep: &str,
    needs_parens: impl Fn(&Formula) -> bool + Copy,
) -> fmt::Result {
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        write_operand(f, p, needs_parens)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeral_shapes() {
        let w2 = Term::var("w2");
        assert_eq!(expand_numeral(w2.clone(), 2).to_string(), "w2 = 2");
        let three = expand_numeral(w2.clone(), 3);
        match &three {
            Formula::Exists(v, body) => {
                assert_eq!(v, "_n1");
                assert_eq!(
                    body.as_ref(),
                    &Formula::And(vec![
                        Formula::numeric(NumPred::Suc, vec![Term::Const(NumConst::One), Term::var("_n1")]),
                        Formula::numeric(NumPred::Suc, vec![Term::var("_n1"), w2.clone()]),
                    ])
                );
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(three.as_numeral(), Some((&w2, 3)));
        assert_eq!(expand_numeral(w2.clone(), 7).as_numeral(), Some((&w2, 7)));
        assert_eq!(expand_numeral(w2, 4).to_string(), "w2 = 4");
    }

    #[test]
    fn free_and_bound() {
        let f = Formula::And(vec![
            Formula::input("P", vec![Term::var("x"), Term::var("y")]),
            Formula::exists("y", Formula::input("N", vec![Term::var("y"), Term::var("z")])),
        ]);
        let free: Vec<_> = f.free_vars().into_iter().collect();
        assert_eq!(free, ["x", "y", "z"]);
        assert_eq!(f.bound_vars().into_iter().collect::<Vec<_>>(), ["y"]);
    }
}
