//! Executing k-ary first-order reductions, and the two built-in projections.
//!
//! Output universes are the full k-tuple spaces (`φ0` must hold everywhere),
//! flattened to lexicographic ranks. Free variables of a formula for an output
//! relation of arity `a` are `a` blocks of `k` variables: the last block is
//! `w1..wk`, the earlier ones `x1..xk`, `y1..yk`, `z1..zk`, … in order. `φ0`
//! and the constant formulas use the single block `x1..xk`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use num_bigint::BigUint;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::fologic::search::{SearchBudget, SearchPlan};
use crate::fologic::{
    check_well_formed, classify_projection, expand_numeral, parse_formula, Compiled, Formula, FormulaError, Term,
};
use crate::problems::{bits_to_nat, partition_vocabulary, sat_vocabulary, subsetsum_vocabulary};
use crate::structures::{
    checked_pow, parse_vocabulary_json, rank, unrank_into, NumConst, NumPred, Structure, StructureError,
    StructureParts, TupleLayout, vocabulary_json, Vocabulary,
};

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error("vocabulary mismatch: `{def}` expects {expected}, got {found}")]
    VocabularyMismatch { def: String, expected: String, found: String },
    #[error("`{def}` needs an input of size at least {min}, got {size}")]
    TooSmall { def: String, min: usize, size: usize },
    #[error("invalid definition: {0}")]
    Definition(String),
    #[error("{0}")]
    Formula(#[from] FormulaError),
    #[error("{0}")]
    Structure(#[from] StructureError),
    #[error("definition file: {0}")]
    Json(String),
    #[error("enumeration budget exceeded ({0} assignments)")]
    Budget(u128),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

const BLOCK_LETTERS: [char; 6] = ['x', 'y', 'z', 'u', 'v', 's'];

/// Variable names for an output position of arity `a`, block size `k`.
pub fn block_params(a: usize, k: usize) -> Result<Vec<String>, ReductionError> {
    if a == 0 || a > BLOCK_LETTERS.len() + 1 {
        return Err(ReductionError::Definition(format!("unsupported output arity {a}")));
    }
    let mut out = Vec::with_capacity(a * k);
    for p in 0..a {
        let letter = if p + 1 == a { 'w' } else { BLOCK_LETTERS.get(p).copied().unwrap_or('w') };
        out.extend((1..=k).map(|i| format!("{letter}{i}")));
    }
    Ok(out)
}

/// A k-ary first-order reduction `⟨φ0, φ1..φr, ψ1..ψs⟩`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionDef {
    pub name: String,
    pub arity: usize,
    pub input_vocab: Vocabulary,
    pub output_vocab: Vocabulary,
    pub phi0: Formula,
    pub relations: BTreeMap<String, Formula>,
    pub constants: BTreeMap<String, Formula>,
    /// Smallest accepted input size.
    pub min_size: usize,
}

impl ReductionDef {
    /// Parameters of the formula for output relation `rel`.
    pub fn relation_params(&self, rel: &str) -> Result<Vec<String>, ReductionError> {
        let a = self
            .output_vocab
            .arity(rel)
            .ok_or_else(|| ReductionError::Definition(format!("`{rel}` is not an output relation")))?;
        block_params(a, self.arity)
    }

    /// Parameters of `φ0` and of constant formulas.
    pub fn point_params(&self) -> Vec<String> {
        (1..=self.arity).map(|i| format!("x{i}")).collect()
    }

    /// Checks the structural invariants: numeric `φ0`, one formula per
    /// output symbol, and well-formed formulas over the right parameters.
    pub fn validate(&self) -> Result<(), ReductionError> {
        let bad = |m: String| Err(ReductionError::Definition(m));
        if self.arity == 0 {
            return bad("arity must be positive".into());
        }
        if !self.phi0.is_numeric() {
            return bad("phi0 must be numeric".into());
        }
        check_well_formed(&self.phi0, &self.input_vocab, &self.point_params())?;
        let declared: BTreeSet<&str> = self.output_vocab.relations().iter().map(|(n, _)| n.as_str()).collect();
        let given: BTreeSet<&str> = self.relations.keys().map(String::as_str).collect();
        if declared != given {
            return bad(format!("relation formulas {given:?} do not match output relations {declared:?}"));
        }
        let declared: BTreeSet<&str> = self.output_vocab.constants().iter().map(String::as_str).collect();
        let given: BTreeSet<&str> = self.constants.keys().map(String::as_str).collect();
        if declared != given {
            return bad(format!("constant formulas {given:?} do not match output constants {declared:?}"));
        }
        for (rel, f) in &self.relations {
            check_well_formed(f, &self.input_vocab, &self.relation_params(rel)?)?;
        }
        for f in self.constants.values() {
            check_well_formed(f, &self.input_vocab, &self.point_params())?;
        }
        Ok(())
    }

    pub fn from_json(v: &Value) -> Result<Self, ReductionError> {
        let bad = |m: &str| ReductionError::Json(m.to_string());
        let name = v.get("name").and_then(Value::as_str).ok_or_else(|| bad("missing `name`"))?.to_string();
        let arity = v.get("arity").and_then(Value::as_u64).ok_or_else(|| bad("missing `arity`"))? as usize;
        let input_vocab = parse_vocabulary_json(v.get("input_vocab").ok_or_else(|| bad("missing `input_vocab`"))?)?;
        let output_vocab =
            parse_vocabulary_json(v.get("output_vocab").ok_or_else(|| bad("missing `output_vocab`"))?)?;
        let text = |x: &Value, what: &str| -> Result<Formula, ReductionError> {
            let s = x.as_str().ok_or_else(|| ReductionError::Json(format!("`{what}` must be a string")))?;
            Ok(parse_formula(s, &input_vocab)?)
        };
        let phi0 = text(v.get("phi0").ok_or_else(|| bad("missing `phi0`"))?, "phi0")?;
        let section = |key: &str| -> Result<BTreeMap<String, Formula>, ReductionError> {
            let mut out = BTreeMap::new();
            match v.get(key) {
                None => {}
                Some(Value::Object(m)) => {
                    for (k, f) in m {
                        out.insert(k.clone(), text(f, k)?);
                    }
                }
                Some(_) => return Err(ReductionError::Json(format!("`{key}` must be an object"))),
            }
            Ok(out)
        };
        let relations = section("relations")?;
        let constants = section("constants")?;
        let min_size = match v.get("min_size") {
            None => 2,
            Some(x) => x.as_u64().ok_or_else(|| bad("`min_size` must be a natural"))? as usize,
        };
        let def = Self { name, arity, input_vocab, output_vocab, phi0, relations, constants, min_size: min_size.max(2) };
        def.validate()?;
        Ok(def)
    }

    pub fn to_json(&self) -> Value {
        let section = |m: &BTreeMap<String, Formula>| -> Map<String, Value> {
            m.iter().map(|(k, f)| (k.clone(), Value::String(f.to_string()))).collect()
        };
        json!({
            "name": self.name,
            "arity": self.arity,
            "min_size": self.min_size,
            "input_vocab": vocabulary_json(&self.input_vocab),
            "output_vocab": vocabulary_json(&self.output_vocab),
            "phi0": self.phi0.to_string(),
            "relations": section(&self.relations),
            "constants": section(&self.constants),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ReductionError> {
        let text = std::fs::read_to_string(path)?;
        let v: Value = serde_json::from_str(&text).map_err(|e| ReductionError::Json(e.to_string()))?;
        Self::from_json(&v)
    }
}

fn check_input(def: &ReductionDef, s: &Structure) -> Result<(), ReductionError> {
    if !s.vocabulary().same_symbols(&def.input_vocab) {
        return Err(ReductionError::VocabularyMismatch {
            def: def.name.clone(),
            expected: def.input_vocab.to_string(),
            found: s.vocabulary().to_string(),
        });
    }
    if s.size() < def.min_size {
        return Err(ReductionError::TooSmall { def: def.name.clone(), min: def.min_size, size: s.size() });
    }
    Ok(())
}

/// `φ0` must select every k-tuple; proper subsets would need re-indexing.
fn check_phi0(def: &ReductionDef, s: &Structure) -> Result<(), ReductionError> {
    if def.phi0 == Formula::True {
        return Ok(());
    }
    let c = Compiled::new(&def.phi0, &def.point_params(), s.vocabulary())?;
    let total = checked_pow(s.size(), def.arity)?;
    let mut env = vec![0; c.slots()];
    for r in 0..total {
        unrank_into(r, s.size(), &mut env[..def.arity]);
        if !c.eval(s, &mut env) {
            return Err(ReductionError::Definition(format!(
                "phi0 excludes the tuple {:?}; only universes of all k-tuples are supported",
                &env[..def.arity]
            )));
        }
    }
    Ok(())
}

fn output_tuple(env: &[usize], positions: usize, k: usize, m: usize) -> Vec<usize> {
    (0..positions).map(|p| rank(&env[p * k..(p + 1) * k], m).expect("values are below m")).collect()
}

/// Default cap on search nodes for one output relation.
pub const DEFAULT_NODE_BUDGET: u64 = 1 << 34;

/// Tuples of `rel` defined by `f`, enumerated disjunct by disjunct.
///
/// A disjunct with a positive input literal is driven by the tuples of that
/// literal's relation; all other variables are found by the conjunct search.
fn guard_driven(
    f: &Formula,
    params: &[String],
    positions: usize,
    k: usize,
    s: &Structure,
    budget: &mut SearchBudget,
) -> Result<BTreeSet<Vec<usize>>, ReductionError> {
    let m = s.size();
    let form = classify_projection(f)?;
    let mut out = BTreeSet::new();
    for g in form.guards() {
        let mut conj: Vec<Formula> = g.alpha.conjuncts().into_iter().cloned().collect();
        let mut prebound = vec![false; params.len()];
        let driver = match &g.literal {
            Some(lit) if lit.positive => {
                for t in &lit.args {
                    if let Term::Var(v) = t {
                        prebound[params.iter().position(|p| p == v).expect("well-formed")] = true;
                    }
                }
                Some(lit)
            }
            _ => None,
        };
        if let Some(lit) = &g.literal {
            conj.push(lit.to_formula());
        }
        let refs: Vec<&Formula> = conj.iter().collect();
        let plan = SearchPlan::new(&refs, params, &prebound, s.vocabulary())?;
        let mut emit = |env: &[usize]| {
            out.insert(output_tuple(env, positions, k, m));
            true
        };
        match driver {
            None => plan.run(s, &vec![0; params.len()], budget, &mut emit)?,
            Some(lit) => {
                let idx = s.vocabulary().relation_index(&lit.rel).expect("well-formed");
                let mut fixed = vec![0; params.len()];
                'tuple: for t in s.relation_at(idx) {
                    let mut seen = vec![false; params.len()];
                    for (term, &val) in lit.args.iter().zip(t) {
                        match term {
                            Term::Const(c) if c.value(m) != val => continue 'tuple,
                            Term::Const(_) => {}
                            Term::Var(v) => {
                                let i = params.iter().position(|p| p == v).expect("well-formed");
                                if seen[i] && fixed[i] != val {
                                    continue 'tuple;
                                }
                                seen[i] = true;
                                fixed[i] = val;
                            }
                        }
                    }
                    plan.run(s, &fixed, budget, &mut emit)?;
                }
            }
        }
    }
    Ok(out)
}

fn naive(
    f: &Formula,
    params: &[String],
    positions: usize,
    k: usize,
    s: &Structure,
    max_assignments: u128,
) -> Result<BTreeSet<Vec<usize>>, ReductionError> {
    let m = s.size();
    let total = (m as u128).pow(params.len() as u32);
    if total > max_assignments {
        return Err(ReductionError::Budget(total));
    }
    let c = Compiled::new(f, params, s.vocabulary())?;
    let mut env = vec![0; c.slots()];
    let mut out = BTreeSet::new();
    for r in 0..total as usize {
        unrank_into(r, m, &mut env[..params.len()]);
        if c.eval(s, &mut env) {
            out.insert(output_tuple(&env, positions, k, m));
        }
    }
    Ok(out)
}

fn resolve_constants(def: &ReductionDef, s: &Structure) -> Result<BTreeMap<String, usize>, ReductionError> {
    let mut out = BTreeMap::new();
    let params = def.point_params();
    for (name, f) in &def.constants {
        let sols = naive(f, &params, 1, def.arity, s, u128::MAX)?;
        if sols.len() != 1 {
            return Err(ReductionError::Definition(format!(
                "constant `{name}` is satisfied by {} tuples, expected exactly one",
                sols.len()
            )));
        }
        out.insert(name.clone(), sols.into_iter().next().unwrap()[0]);
    }
    Ok(out)
}

fn apply_with(
    def: &ReductionDef,
    s: &Structure,
    mut relation: impl FnMut(&Formula, &[String], usize) -> Result<BTreeSet<Vec<usize>>, ReductionError>,
) -> Result<Structure, ReductionError> {
    check_input(def, s)?;
    check_phi0(def, s)?;
    let size = checked_pow(s.size(), def.arity)?;
    let mut parts = StructureParts::new(def.output_vocab.clone(), size);
    parts.layout = Some(TupleLayout { base: s.size(), dim: def.arity });
    for (rel, a) in def.output_vocab.relations() {
        let params = block_params(*a, def.arity)?;
        parts.relations.insert(rel.clone(), relation(&def.relations[rel], &params, *a)?);
    }
    parts.constants = resolve_constants(def, s)?;
    Ok(Structure::new(parts)?)
}

/// Applies `def` to `s`. Projective formulas are evaluated guard by guard;
/// anything else falls back to a full scan of the output tuples.
pub fn apply_reduction(def: &ReductionDef, s: &Structure) -> Result<Structure, ReductionError> {
    let mut budget = SearchBudget::new(DEFAULT_NODE_BUDGET);
    apply_with(def, s, |f, params, a| match guard_driven(f, params, a, def.arity, s, &mut budget) {
        Err(ReductionError::Formula(FormulaError::NotProjective { .. })) => {
            naive(f, params, a, def.arity, s, DEFAULT_NAIVE_CAP)
        }
        Err(ReductionError::Formula(FormulaError::BudgetExceeded)) => Err(ReductionError::Budget(DEFAULT_NODE_BUDGET as u128)),
        other => other,
    })
}

/// Largest number of assignments the full scan will try.
pub const DEFAULT_NAIVE_CAP: u128 = 1 << 28;

/// Applies `def` by evaluating every formula on every candidate output tuple.
/// Meant as a reference for [`apply_reduction`] on small inputs.
pub fn apply_reduction_naive(def: &ReductionDef, s: &Structure, max_assignments: u128) -> Result<Structure, ReductionError> {
    apply_with(def, s, |f, params, a| naive(f, params, a, def.arity, s, max_assignments))
}

/// Output of [`compose`]: the final structure and the size after each stage,
/// starting with the input size.
#[derive(Debug, Clone)]
pub struct Composition {
    pub output: Structure,
    pub sizes: Vec<usize>,
}

pub fn compose(defs: &[&ReductionDef], s: &Structure) -> Result<Composition, ReductionError> {
    let mut cur = s.clone();
    let mut sizes = vec![s.size()];
    for d in defs {
        cur = apply_reduction(d, &cur)?;
        sizes.push(cur.size());
    }
    Ok(Composition { output: cur, sizes })
}

/// `Σ_{j ∈ L} 2^(m-1-j)`.
pub fn target_of(s: &Structure) -> Result<BigUint, ReductionError> {
    let l = s
        .relation("L")
        .filter(|_| s.vocabulary().arity("L") == Some(1))
        .ok_or_else(|| ReductionError::Definition("structure has no unary relation L".into()))?;
    Ok(bits_to_nat(l.iter().map(|t| t[0]), s.size()))
}

// Built-in definitions, assembled from AST constructors so that the shipped
// JSON files are checked against an independent transcription.

fn v(name: &str) -> Term {
    Term::var(name)
}

const ZERO: Term = Term::Const(NumConst::Zero);
const ONE: Term = Term::Const(NumConst::One);
const MAX: Term = Term::Const(NumConst::Max);

fn eq(a: Term, b: Term) -> Formula {
    Formula::eq(a, b)
}

fn suc(a: Term, b: Term) -> Formula {
    Formula::numeric(NumPred::Suc, vec![a, b])
}

fn plus(a: Term, b: Term, c: Term) -> Formula {
    Formula::numeric(NumPred::Plus, vec![a, b, c])
}

fn atom(rel: &str, args: &[&str]) -> Formula {
    Formula::input(rel, args.iter().map(|a| v(a)).collect())
}

/// Row tag `(r, ·, 1, x4)` and column tag `(c, ·, 1, max)` shared by ρ1's blocks.
fn rho1_block(row_first: Term, row_last_is_max: bool, col_first: Term) -> Vec<Formula> {
    vec![
        eq(v("x1"), row_first),
        eq(v("x3"), ONE),
        if row_last_is_max { eq(v("x4"), MAX) } else { suc(v("x4"), MAX) },
        eq(v("w1"), col_first),
    ]
}

fn rho1() -> ReductionDef {
    let tag_pair = |row_first: Term, last_max: bool, col_first: Term| {
        let mut c = rho1_block(row_first, last_max, col_first);
        c.extend([eq(v("w2"), v("x2")), eq(v("w3"), ONE), eq(v("w4"), MAX)]);
        Formula::And(c)
    };
    let guarded = |last_max: bool, lit: Formula| {
        let mut c = rho1_block(ZERO, last_max, MAX);
        c.extend([eq(v("w3"), ONE), eq(v("w4"), MAX), lit]);
        Formula::And(c)
    };
    let phi1 = Formula::Or(vec![
        tag_pair(ZERO, false, ZERO),
        tag_pair(ZERO, true, ZERO),
        tag_pair(MAX, false, MAX),
        tag_pair(MAX, true, MAX),
        guarded(false, atom("P", &["x2", "w2"])),
        guarded(true, atom("N", &["x2", "w2"])),
    ]);
    let phi2 = Formula::Or(vec![
        Formula::And(vec![eq(v("w1"), ZERO), eq(v("w3"), ONE), eq(v("w4"), MAX)]),
        Formula::And(vec![eq(v("w1"), MAX), eq(v("w3"), ONE), eq(v("w4"), MAX)]),
        Formula::And(vec![eq(v("w1"), MAX), eq(v("w3"), ONE), suc(v("w4"), MAX)]),
    ]);
    ReductionDef {
        name: "rho1".into(),
        arity: 4,
        input_vocab: sat_vocabulary(),
        output_vocab: subsetsum_vocabulary(),
        phi0: Formula::True,
        relations: BTreeMap::from([("W".to_string(), phi1), ("L".to_string(), phi2)]),
        constants: BTreeMap::new(),
        min_size: 2,
    }
}

/// `w1` lies in the left half of `{0..m-1}`.
pub fn beta_left_half() -> Formula {
    Formula::Or(vec![
        Formula::exists(
            "t1",
            Formula::exists(
                "t2",
                Formula::And(vec![
                    suc(v("t1"), MAX),
                    plus(v("t2"), v("t2"), v("t1")),
                    Formula::numeric(NumPred::Le, vec![v("w1"), v("t2")]),
                ]),
            ),
        ),
        Formula::exists(
            "t2",
            Formula::And(vec![plus(v("t2"), v("t2"), MAX), Formula::numeric(NumPred::Lt, vec![v("w1"), v("t2")])]),
        ),
    ])
}

/// `w1` lies in the right half of `{0..m-1}`.
pub fn beta_right_half() -> Formula {
    Formula::Or(vec![
        Formula::exists(
            "t1",
            Formula::exists(
                "t2",
                Formula::And(vec![
                    suc(v("t1"), MAX),
                    plus(v("t2"), v("t2"), v("t1")),
                    Formula::numeric(NumPred::Lt, vec![v("t2"), v("w1")]),
                ]),
            ),
        ),
        Formula::exists(
            "t2",
            Formula::And(vec![plus(v("t2"), v("t2"), MAX), Formula::numeric(NumPred::Le, vec![v("t2"), v("w1")])]),
        ),
    ])
}

fn rho2() -> ReductionDef {
    let w2_is = |k: usize| match k {
        0 => eq(v("w2"), ZERO),
        1 => eq(v("w2"), ONE),
        k => expand_numeral(v("w2"), k),
    };
    let size_bit = |row: Term, k: usize, left: bool| {
        Formula::And(vec![
            eq(v("x1"), row),
            eq(v("x2"), ONE),
            w2_is(k),
            if left { beta_left_half() } else { beta_right_half() },
            atom("W", &["w1", "w1"]),
        ])
    };
    let mut disjuncts = vec![Formula::And(vec![eq(v("x2"), ZERO), w2_is(4), atom("W", &["x1", "w1"])])];
    // b1 = 3…37…7, b2 = 3…38…8 (binary 11, 111, 1000 at offsets 4..1).
    disjuncts.extend([(4, true), (3, true), (4, false), (3, false), (2, false)].map(|(k, l)| size_bit(ZERO, k, l)));
    disjuncts.extend([(4, true), (3, true), (1, false)].map(|(k, l)| size_bit(ONE, k, l)));
    ReductionDef {
        name: "rho2".into(),
        arity: 2,
        input_vocab: subsetsum_vocabulary(),
        output_vocab: partition_vocabulary(),
        phi0: Formula::True,
        relations: BTreeMap::from([("T".to_string(), Formula::Or(disjuncts))]),
        constants: BTreeMap::new(),
        min_size: 16,
    }
}

#[derive(Debug, Clone)]
pub struct BuiltinDefs {
    pub rho1: ReductionDef,
    pub rho2: ReductionDef,
}

pub fn builtin_defs() -> BuiltinDefs {
    BuiltinDefs { rho1: rho1(), rho2: rho2() }
}

/// The shipped definition files.
pub const RHO1_JSON: &str = include_str!("../defs/rho1.json");
pub const RHO2_JSON: &str = include_str!("../defs/rho2.json");

/// Resolves `rho1`, `rho2` or a path to a definition file.
pub fn resolve_def(name_or_path: &str) -> Result<ReductionDef, ReductionError> {
    match name_or_path {
        "rho1" => Ok(builtin_defs().rho1),
        "rho2" => Ok(builtin_defs().rho2),
        p => ReductionDef::load(Path::new(p)),
    }
}
