//! Tarskian evaluation over finite structures.
//!
//! Formulas are first compiled to a slot-indexed form: each free variable gets
//! a fixed slot given by the caller's parameter list, and each quantifier gets
//! its own slot after those. Evaluation then works on a plain `&mut [usize]`.

use std::collections::BTreeMap;

use crate::fologic::ast::{Formula, Term};
use crate::fologic::FormulaError;
use crate::structures::{NumConst, NumPred, Structure, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum CTerm {
    Slot(usize),
    Lit(NumConst),
}

impl CTerm {
    #[inline]
    fn value(self, env: &[usize], m: usize) -> usize {
        match self {
            CTerm::Slot(s) => env[s],
            CTerm::Lit(c) => c.value(m),
        }
    }
}

#[derive(Debug, Clone)]
enum Node {
    True,
    False,
    Input { rel: usize, args: Vec<CTerm> },
    Num { pred: NumPred, args: Vec<CTerm> },
    Not(Box<Node>),
    And(Vec<Node>),
    Or(Vec<Node>),
    Exists(usize, Box<Node>),
    ForAll(usize, Box<Node>),
}

/// A formula compiled against a vocabulary and a parameter list.
#[derive(Debug, Clone)]
pub struct Compiled {
    root: Node,
    params: usize,
    slots: usize,
}

impl Compiled {
    /// Compiles `f` with free variables mapped to the positions of `params`.
    pub fn new(f: &Formula, params: &[String], vocab: &Vocabulary) -> Result<Self, FormulaError> {
        let mut scope: Vec<(String, usize)> =
            params.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        let mut next = params.len();
        let root = compile(f, &mut scope, &mut next, vocab)?;
        Ok(Self { root, params: params.len(), slots: next })
    }

    /// Number of slots an environment must provide.
    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn params(&self) -> usize {
        self.params
    }

    /// Evaluates with the parameters in `env[..params]`. `env` must be at
    /// least [`slots`](Self::slots) long; the tail is scratch space.
    #[inline]
    pub fn eval(&self, s: &Structure, env: &mut [usize]) -> bool {
        debug_assert!(env.len() >= self.slots);
        eval_node(&self.root, s, s.size(), env)
    }
}

fn compile(
    f: &Formula,
    scope: &mut Vec<(String, usize)>,
    next: &mut usize,
    vocab: &Vocabulary,
) -> Result<Node, FormulaError> {
    let term = |t: &Term, scope: &Vec<(String, usize)>| -> Result<CTerm, FormulaError> {
        match t {
            Term::Const(c) => Ok(CTerm::Lit(*c)),
            Term::Var(v) => scope
                .iter()
                .rev()
                .find(|(n, _)| n == v)
                .map(|(_, s)| CTerm::Slot(*s))
                .ok_or_else(|| FormulaError::UnboundVariable(v.clone())),
        }
    };
    Ok(match f {
        Formula::True => Node::True,
        Formula::False => Node::False,
        Formula::Input { rel, args } => {
            let idx = vocab
                .relation_index(rel)
                .ok_or_else(|| FormulaError::UnknownRelation { name: rel.clone(), pos: 0 })?;
            let arity = vocab.relations()[idx].1;
            if arity != args.len() {
                return Err(FormulaError::ArityMismatch { name: rel.clone(), expected: arity, found: args.len(), pos: 0 });
            }
            Node::Input { rel: idx, args: args.iter().map(|t| term(t, scope)).collect::<Result<_, _>>()? }
        }
        Formula::Numeric { pred, args } => {
            if args.len() != pred.arity() {
                return Err(FormulaError::ArityMismatch {
                    name: pred.name().into(),
                    expected: pred.arity(),
                    found: args.len(),
                    pos: 0,
                });
            }
            Node::Num { pred: *pred, args: args.iter().map(|t| term(t, scope)).collect::<Result<_, _>>()? }
        }
        Formula::Not(g) => Node::Not(Box::new(compile(g, scope, next, vocab)?)),
        Formula::And(gs) => Node::And(gs.iter().map(|g| compile(g, scope, next, vocab)).collect::<Result<_, _>>()?),
        Formula::Or(gs) => Node::Or(gs.iter().map(|g| compile(g, scope, next, vocab)).collect::<Result<_, _>>()?),
        Formula::Exists(v, g) | Formula::ForAll(v, g) => {
            let slot = *next;
            *next += 1;
            scope.push((v.clone(), slot));
            let body = compile(g, scope, next, vocab);
            scope.pop();
            let body = Box::new(body?);
            if matches!(f, Formula::Exists(..)) {
                Node::Exists(slot, body)
            } else {
                Node::ForAll(slot, body)
            }
        }
    })
}

fn eval_node(n: &Node, s: &Structure, m: usize, env: &mut [usize]) -> bool {
    match n {
        Node::True => true,
        Node::False => false,
        Node::Input { rel, args } => {
            let mut buf = [0usize; 8];
            if args.len() <= buf.len() {
                for (b, a) in buf.iter_mut().zip(args) {
                    *b = a.value(env, m);
                }
                s.holds(*rel, &buf[..args.len()])
            } else {
                let t: Vec<usize> = args.iter().map(|a| a.value(env, m)).collect();
                s.holds(*rel, &t)
            }
        }
        Node::Num { pred, args } => {
            let mut buf = [0usize; 3];
            for (b, a) in buf.iter_mut().zip(args) {
                *b = a.value(env, m);
            }
            pred.holds(&buf[..args.len()])
        }
        Node::Not(g) => !eval_node(g, s, m, env),
        Node::And(gs) => gs.iter().all(|g| eval_node(g, s, m, env)),
        Node::Or(gs) => gs.iter().any(|g| eval_node(g, s, m, env)),
        Node::Exists(slot, g) => (0..m).any(|v| {
            env[*slot] = v;
            eval_node(g, s, m, env)
        }),
        Node::ForAll(slot, g) => (0..m).all(|v| {
            env[*slot] = v;
            eval_node(g, s, m, env)
        }),
    }
}

/// Evaluates `f` on `s` under the variable assignment `env`.
pub fn eval(f: &Formula, s: &Structure, env: &BTreeMap<String, usize>) -> Result<bool, FormulaError> {
    let params: Vec<String> = env.keys().cloned().collect();
    if let Some(v) = f.free_vars().into_iter().find(|v| !env.contains_key(v)) {
        return Err(FormulaError::UnboundVariable(v));
    }
    if let Some((v, &x)) = env.iter().find(|(_, &x)| x >= s.size()) {
        return Err(FormulaError::OutOfUniverse { var: v.clone(), value: x, size: s.size() });
    }
    let c = Compiled::new(f, &params, s.vocabulary())?;
    let mut slots: Vec<usize> = env.values().copied().collect();
    slots.resize(c.slots(), 0);
    Ok(c.eval(s, &mut slots))
}
