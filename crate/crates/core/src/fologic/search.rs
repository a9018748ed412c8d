//! Backtracking enumeration of the satisfying assignments of a conjunction.
//!
//! Variables are assigned in parameter order. A conjunct is checked as soon
//! as its last free variable is assigned, so a false conjunct prunes the whole
//! subtree. Conjuncts of the shape `v = t`, `SUC(t,v)`, `SUC(v,t)` or a
//! numeral `v = k` pin `v` to one candidate instead of all `m`; they are still
//! checked like any other conjunct. The enumeration visits exactly the
//! assignments a full scan of `{0..m-1}^params` would accept.

use crate::fologic::ast::{Formula, Term};
use crate::fologic::eval::Compiled;
use crate::fologic::FormulaError;
use crate::structures::{NumPred, Structure, Vocabulary};

/// Caps the number of partial assignments a search may try.
#[derive(Debug, Clone, Copy)]
pub struct SearchBudget {
    remaining: u64,
}

impl SearchBudget {
    pub fn new(nodes: u64) -> Self {
        Self { remaining: nodes }
    }

    pub fn unlimited() -> Self {
        Self { remaining: u64::MAX }
    }

    pub fn remaining(&self) -> u64 {
        self.remaining
    }

    #[inline]
    fn spend(&mut self) -> Result<(), FormulaError> {
        if self.remaining == 0 {
            return Err(FormulaError::BudgetExceeded);
        }
        self.remaining -= 1;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum Anchor {
    Slot(usize),
    Const(crate::structures::NumConst),
    Value(usize),
}

#[derive(Debug, Clone, Copy)]
enum Hint {
    Equal(Anchor),
    Succ(Anchor),
    Pred(Anchor),
}

/// A conjunction prepared for enumeration with a fixed set of pre-bound
/// parameters.
#[derive(Debug, Clone)]
pub struct SearchPlan {
    params: usize,
    order: Vec<usize>,
    conjuncts: Vec<Compiled>,
    /// `checks[0]` run before any assignment; `checks[l]` after `order[l-1]`.
    checks: Vec<Vec<usize>>,
    hints: Vec<Option<Hint>>,
    slots: usize,
}

impl SearchPlan {
    /// `prebound[i]` marks parameter `i` as supplied by the caller.
    pub fn new(
        conjuncts: &[&Formula],
        params: &[String],
        prebound: &[bool],
        vocab: &Vocabulary,
    ) -> Result<Self, FormulaError> {
        assert_eq!(params.len(), prebound.len());
        let order: Vec<usize> = (0..params.len()).filter(|&i| !prebound[i]).collect();
        let level_of_param = |name: &str| -> Result<usize, FormulaError> {
            let i = params
                .iter()
                .position(|p| p == name)
                .ok_or_else(|| FormulaError::UnboundVariable(name.to_string()))?;
            Ok(order.iter().position(|&o| o == i).map_or(0, |p| p + 1))
        };
        let mut checks = vec![Vec::new(); order.len() + 1];
        let mut hints: Vec<Option<Hint>> = vec![None; order.len() + 1];
        let mut compiled = Vec::with_capacity(conjuncts.len());
        for (ci, f) in conjuncts.iter().enumerate() {
            let mut level = 0;
            for v in f.free_vars() {
                level = level.max(level_of_param(&v)?);
            }
            checks[level].push(ci);
            compiled.push(Compiled::new(f, params, vocab)?);
            if level > 0 && hints[level].is_none() {
                hints[level] = hint_for(f, &params[order[level - 1]], params);
            }
        }
        let slots = compiled.iter().map(Compiled::slots).max().unwrap_or(0).max(params.len());
        Ok(Self { params: params.len(), order, conjuncts: compiled, checks, hints, slots })
    }

    /// Length of the environment slices passed to the visitor.
    pub fn slots(&self) -> usize {
        self.slots
    }

    /// Enumerates assignments extending `fixed` (values of the pre-bound
    /// parameters at their positions; other positions are ignored). The
    /// visitor sees the environment with all parameters in `env[..params]`
    /// and returns `false` to stop early.
    pub fn run(
        &self,
        s: &Structure,
        fixed: &[usize],
        budget: &mut SearchBudget,
        visit: &mut dyn FnMut(&[usize]) -> bool,
    ) -> Result<(), FormulaError> {
        let mut env = vec![0usize; self.slots];
        env[..self.params].copy_from_slice(&fixed[..self.params]);
        for &c in &self.checks[0] {
            if !self.conjuncts[c].eval(s, &mut env) {
                return Ok(());
            }
        }
        self.descend(1, s, &mut env, budget, visit).map(|_| ())
    }

    fn descend(
        &self,
        level: usize,
        s: &Structure,
        env: &mut Vec<usize>,
        budget: &mut SearchBudget,
        visit: &mut dyn FnMut(&[usize]) -> bool,
    ) -> Result<bool, FormulaError> {
        if level > self.order.len() {
            return Ok(visit(&env[..self.params]));
        }
        let m = s.size();
        let var = self.order[level - 1];
        let (lo, hi) = match self.hints[level] {
            None => (0, m),
            Some(h) => match pinned(h, env, m) {
                Some(v) => (v, v + 1),
                None => (0, 0),
            },
        };
        'cand: for v in lo..hi {
            budget.spend()?;
            env[var] = v;
            for &c in &self.checks[level] {
                if !self.conjuncts[c].eval(s, env) {
                    continue 'cand;
                }
            }
            if !self.descend(level + 1, s, env, budget, visit)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn pinned(h: Hint, env: &[usize], m: usize) -> Option<usize> {
    let anchor = |a: Anchor| match a {
        Anchor::Slot(i) => env[i],
        Anchor::Const(c) => c.value(m),
        Anchor::Value(k) => k,
    };
    let v = match h {
        Hint::Equal(a) => anchor(a),
        Hint::Succ(a) => anchor(a) + 1,
        Hint::Pred(a) => anchor(a).checked_sub(1)?,
    };
    (v < m).then_some(v)
}

fn hint_for(f: &Formula, var: &str, params: &[String]) -> Option<Hint> {
    let is_var = |t: &Term| matches!(t, Term::Var(v) if v == var);
    let anchor = |t: &Term| -> Option<Anchor> {
        match t {
            Term::Const(c) => Some(Anchor::Const(*c)),
            Term::Var(v) if v != var => params.iter().position(|p| p == v).map(Anchor::Slot),
            Term::Var(_) => None,
        }
    };
    if let Some((t, k)) = f.as_numeral() {
        return is_var(t).then_some(Hint::Equal(Anchor::Value(k)));
    }
    match f {
        Formula::Numeric { pred: NumPred::Eq, args } => {
            if is_var(&args[0]) {
                anchor(&args[1]).map(Hint::Equal)
            } else if is_var(&args[1]) {
                anchor(&args[0]).map(Hint::Equal)
            } else {
                None
            }
        }
        Formula::Numeric { pred: NumPred::Suc, args } => {
            if is_var(&args[1]) {
                anchor(&args[0]).map(Hint::Succ)
            } else if is_var(&args[0]) {
                anchor(&args[1]).map(Hint::Pred)
            } else {
                None
            }
        }
        _ => None,
    }
}

/// Collects every satisfying assignment of `conjuncts` over `params`.
pub fn all_solutions(
    conjuncts: &[&Formula],
    params: &[String],
    s: &Structure,
    budget: &mut SearchBudget,
) -> Result<Vec<Vec<usize>>, FormulaError> {
    let plan = SearchPlan::new(conjuncts, params, &vec![false; params.len()], s.vocabulary())?;
    let mut out = Vec::new();
    plan.run(s, &vec![0; params.len()], budget, &mut |env| {
        out.push(env.to_vec());
        true
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fologic::parse_formula;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn brute(f: &Formula, params: &[String], s: &Structure) -> Vec<Vec<usize>> {
        let c = Compiled::new(f, params, s.vocabulary()).unwrap();
        let m = s.size();
        let total = m.pow(params.len() as u32);
        let mut env = vec![0; c.slots()];
        let mut out = Vec::new();
        for r in 0..total {
            crate::structures::unrank_into(r, m, &mut env[..params.len()]);
            if c.eval(s, &mut env) {
                out.push(env[..params.len()].to_vec());
            }
        }
        out
    }

    #[test]
    fn agrees_with_full_scan() {
        let vocab = Vocabulary::relational([("P", 2)]).unwrap();
        let s = crate::structures::Structure::new(
            crate::structures::StructureParts::new(vocab.clone(), 4)
                .with_relation("P", [vec![0, 1], vec![2, 3], vec![3, 3]]),
        )
        .unwrap();
        let params = names(&["a", "b", "c"]);
        for text in [
            "a = 0 & SUC(a,b) & c = b",
            "SUC(c,b) & P(a,b) & a <= c",
            "b = 3 & P(a,b)",
            "c = 2 & SUC(b,max) & !P(a,b)",
            "SUC(b,0)",
            "a = max & b = 4",
            "PLUS(a,b,c) & E t . SUC(t,c)",
        ] {
            let f = parse_formula(text, &vocab).unwrap();
            let got = all_solutions(&f.conjuncts(), &params, &s, &mut SearchBudget::unlimited()).unwrap();
            assert_eq!(got, brute(&f, &params, &s), "{text}");
        }
    }

    #[test]
    fn budget_is_reported() {
        let vocab = Vocabulary::default();
        let s = Structure::empty(vocab.clone(), 10).unwrap();
        let f = parse_formula("a <= b", &vocab).unwrap();
        let r = all_solutions(&f.conjuncts(), &names(&["a", "b"]), &s, &mut SearchBudget::new(20));
        assert!(matches!(r, Err(FormulaError::BudgetExceeded)));
    }

    #[test]
    fn prebound_parameters() {
        let vocab = Vocabulary::default();
        let s = Structure::empty(vocab.clone(), 5).unwrap();
        let f = parse_formula("SUC(a,b) & c = b", &vocab).unwrap();
        let params = names(&["a", "b", "c"]);
        let plan = SearchPlan::new(&f.conjuncts(), &params, &[true, false, false], &vocab).unwrap();
        let mut seen = Vec::new();
        plan.run(&s, &[2, 0, 0], &mut SearchBudget::unlimited(), &mut |e| {
            seen.push(e.to_vec());
            true
        })
        .unwrap();
        assert_eq!(seen, vec![vec![2, 3, 3]]);
    }
}
