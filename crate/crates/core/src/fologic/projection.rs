//! Recognizing projective formulas and checking guard exclusivity.
//!
//! A projective formula is a disjunction whose disjuncts are either purely
//! numeric or a numeric guard conjoined with exactly one input literal.
//! Disjuncts sharing the same literal form one guarded pair; the individual
//! disjuncts stay available through [`ProjectionForm::guards`].

use std::collections::BTreeMap;
use std::fmt;

use crate::fologic::ast::{Formula, Term};
use crate::fologic::search::{SearchBudget, SearchPlan};
use crate::fologic::FormulaError;
use crate::structures::{Structure, Vocabulary};

/// An input atom or its negation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InputLiteral {
    pub positive: bool,
    pub rel: String,
    pub args: Vec<Term>,
}

impl InputLiteral {
    pub fn to_formula(&self) -> Formula {
        let atom = Formula::Input { rel: self.rel.clone(), args: self.args.clone() };
        if self.positive {
            atom
        } else {
            Formula::not(atom)
        }
    }

    /// The input tuple this literal reads when the parameters take the values
    /// in `env` (indexed like `params`).
    pub fn instantiate(&self, params: &[String], env: &[usize], m: usize) -> Vec<usize> {
        self.args
            .iter()
            .map(|t| match t {
                Term::Const(c) => c.value(m),
                Term::Var(v) => {
                    let i = params.iter().position(|p| p == v).expect("literal variable is a parameter");
                    env[i]
                }
            })
            .collect()
    }
}

impl fmt::Display for InputLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_formula())
    }
}

/// One disjunct of a projective formula: a numeric guard and an optional
/// input literal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Guard {
    pub alpha: Formula,
    pub literal: Option<InputLiteral>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectionForm {
    /// The purely numeric disjuncts.
    pub alpha0: Vec<Formula>,
    /// One entry per distinct literal; the guard is the disjunction of the
    /// numeric parts of every disjunct carrying that literal.
    pub guarded: Vec<(Formula, InputLiteral)>,
    guards: Vec<Guard>,
}

impl ProjectionForm {
    /// Every disjunct, in source order.
    pub fn guards(&self) -> &[Guard] {
        &self.guards
    }
}

impl fmt::Display for ProjectionForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "alpha0: {} disjunct(s)", self.alpha0.len())?;
        for (i, (_, lit)) in self.guarded.iter().enumerate() {
            let n = self.guards.iter().filter(|g| g.literal.as_ref() == Some(lit)).count();
            writeln!(f, "lambda{}: {lit} ({n} disjunct(s))", i + 1)?;
        }
        Ok(())
    }
}

fn not_projective(reason: &str, offending: &Formula) -> FormulaError {
    FormulaError::NotProjective { reason: reason.to_string(), offending: offending.to_string() }
}

fn as_literal(f: &Formula) -> Option<InputLiteral> {
    match f {
        Formula::Input { rel, args } => Some(InputLiteral { positive: true, rel: rel.clone(), args: args.clone() }),
        Formula::Not(inner) => match inner.as_ref() {
            Formula::Input { rel, args } => {
                Some(InputLiteral { positive: false, rel: rel.clone(), args: args.clone() })
            }
            _ => None,
        },
        _ => None,
    }
}

/// Splits `f` into projection form or explains why it is not projective.
pub fn classify_projection(f: &Formula) -> Result<ProjectionForm, FormulaError> {
    let mut alpha0 = Vec::new();
    let mut guards = Vec::new();
    for d in f.disjuncts() {
        if *d == Formula::False {
            continue;
        }
        let mut numeric = Vec::new();
        let mut literal: Option<InputLiteral> = None;
        for c in d.conjuncts() {
            if c.is_numeric() {
                numeric.push(c.clone());
            } else if let Some(lit) = as_literal(c) {
                if literal.is_some() {
                    return Err(not_projective("two input literals in one disjunct", d));
                }
                literal = Some(lit);
            } else if matches!(c, Formula::Exists(..) | Formula::ForAll(..)) {
                return Err(not_projective("input atom under a quantifier", c));
            } else {
                return Err(not_projective("input atom inside a compound subformula", c));
            }
        }
        let alpha = Formula::and(numeric);
        if literal.is_none() {
            alpha0.push(alpha.clone());
        }
        guards.push(Guard { alpha, literal });
    }
    let mut guarded: Vec<(Formula, InputLiteral)> = Vec::new();
    for g in &guards {
        let Some(lit) = &g.literal else { continue };
        if guarded.iter().any(|(_, l)| l == lit) {
            continue;
        }
        let parts =
            guards.iter().filter(|h| h.literal.as_ref() == Some(lit)).map(|h| h.alpha.clone()).collect();
        guarded.push((Formula::or(parts), lit.clone()));
    }
    Ok(ProjectionForm { alpha0, guarded, guards })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Exclusion {
    /// No assignment satisfies two distinct guards.
    Exclusive { pairs: usize },
    /// Guards `first` and `second` (indices into `guards()`) both hold here.
    Overlap { first: usize, second: usize, assignment: BTreeMap<String, usize> },
    /// The budget ran out while examining this pair.
    Undecided { first: usize, second: usize },
}

/// Semantically checks, over a universe of size `m`, that no assignment to
/// `params` satisfies the numeric guards of two distinct disjuncts.
///
/// Each pair is searched exhaustively (with equality propagation), so an
/// `Exclusive` verdict covers all `m^params.len()` assignments.
pub fn check_mutual_exclusion(
    form: &ProjectionForm,
    params: &[String],
    m: usize,
    node_budget: u64,
) -> Result<Exclusion, FormulaError> {
    let vocab = Vocabulary::default();
    let s = Structure::empty(vocab.clone(), m)
        .map_err(|e| FormulaError::Syntax { pos: 0, msg: e.to_string() })?;
    let mut budget = SearchBudget::new(node_budget);
    let gs = form.guards();
    let mut pairs = 0;
    for i in 0..gs.len() {
        for j in i + 1..gs.len() {
            pairs += 1;
            let mut conj = gs[i].alpha.conjuncts();
            conj.extend(gs[j].alpha.conjuncts());
            let plan = SearchPlan::new(&conj, params, &vec![false; params.len()], &vocab)?;
            let mut hit: Option<Vec<usize>> = None;
            let run = plan.run(&s, &vec![0; params.len()], &mut budget, &mut |env| {
                hit = Some(env.to_vec());
                false
            });
            match run {
                Err(FormulaError::BudgetExceeded) => return Ok(Exclusion::Undecided { first: i, second: j }),
                Err(e) => return Err(e),
                Ok(()) => {}
            }
            if let Some(env) = hit {
                let assignment = params.iter().cloned().zip(env).collect();
                return Ok(Exclusion::Overlap { first: i, second: j, assignment });
            }
        }
    }
    Ok(Exclusion::Exclusive { pairs })
}
