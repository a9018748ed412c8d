//! First-order formulas: syntax, parsing, evaluation and projection analysis.

mod ast;
mod eval;
mod parse;
pub mod projection;
pub mod search;

use thiserror::Error;

pub use ast::{expand_numeral, Formula, Term};
pub use eval::{eval, Compiled};
pub use parse::parse_formula;
pub use projection::{
    check_mutual_exclusion, classify_projection, Exclusion, Guard, InputLiteral, ProjectionForm,
};

use crate::structures::Vocabulary;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown relation `{name}` at {pos}")]
    UnknownRelation { name: String, pos: usize },
    #[error("`{name}` takes {expected} arguments, found {found} (at {pos})")]
    ArityMismatch { name: String, expected: usize, found: usize, pos: usize },
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("variable `{var}` = {value} lies outside a universe of size {size}")]
    OutOfUniverse { var: String, value: usize, size: usize },
    #[error("variable `{0}` is both a parameter and quantifier-bound")]
    Shadowed(String),
    #[error("not projective: {reason} in `{offending}`")]
    NotProjective { reason: String, offending: String },
    #[error("search budget exhausted")]
    BudgetExceeded,
}

/// Checks that `f` only mentions relations of `vocab` with the right arities,
/// that its free variables are among `params`, and that no quantifier rebinds
/// a parameter.
pub fn check_well_formed(f: &Formula, vocab: &Vocabulary, params: &[String]) -> Result<(), FormulaError> {
    let mut err = None;
    f.visit(&mut |g| {
        if err.is_some() {
            return;
        }
        match g {
            Formula::Input { rel, args } => match vocab.arity(rel) {
                None => err = Some(FormulaError::UnknownRelation { name: rel.clone(), pos: 0 }),
                Some(a) if a != args.len() => {
                    err = Some(FormulaError::ArityMismatch {
                        name: rel.clone(),
                        expected: a,
                        found: args.len(),
                        pos: 0,
                    })
                }
                Some(_) => {}
            },
            Formula::Exists(v, _) | Formula::ForAll(v, _) if params.contains(v) => {
                err = Some(FormulaError::Shadowed(v.clone()))
            }
            _ => {}
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    match f.free_vars().into_iter().find(|v| !params.contains(v)) {
        Some(v) => Err(FormulaError::UnboundVariable(v)),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn well_formedness() {
        let v = Vocabulary::relational([("P", 2)]).unwrap();
        let ps = vec!["x".to_string(), "y".to_string()];
        let ok = parse_formula("P(x,y) & E t . SUC(x,t)", &v).unwrap();
        assert!(check_well_formed(&ok, &v, &ps).is_ok());
        let shadow = parse_formula("E x . P(x,y)", &v).unwrap();
        assert_eq!(check_well_formed(&shadow, &v, &ps), Err(FormulaError::Shadowed("x".into())));
        let free = parse_formula("P(x,z)", &v).unwrap();
        assert_eq!(check_well_formed(&free, &v, &ps), Err(FormulaError::UnboundVariable("z".into())));
        let other = Vocabulary::relational([("P", 1)]).unwrap();
        assert!(matches!(check_well_formed(&ok, &other, &ps), Err(FormulaError::ArityMismatch { .. })));
    }
}
