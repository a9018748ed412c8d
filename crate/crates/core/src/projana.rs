//! Dependency analysis of projective reductions.
//!
//! Because every guard of a projection is numeric, which guard fires for an
//! output atom depends only on the input size. The table built here records,
//! for each output atom, whether it is constantly 0, constantly 1, or a copy
//! (or negated copy) of exactly one input atom.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use thiserror::Error;

use crate::fologic::search::{SearchBudget, SearchPlan};
use crate::fologic::{classify_projection, Compiled, FormulaError, InputLiteral, ProjectionForm};
use crate::reductions::{apply_reduction, ReductionDef, ReductionError};
use crate::structures::{checked_pow, rank, unrank, Structure, StructureError, StructureParts, Tuple, Vocabulary};

#[derive(Debug, Error)]
pub enum ProjanaError {
    #[error("relation {relation}: {source}")]
    NotProjective { relation: String, source: FormulaError },
    #[error("relation {relation}: guards {first} and {second} both fire at {out:?}")]
    Conflict { relation: String, out: Tuple, first: usize, second: usize },
    #[error("{0}")]
    Formula(#[from] FormulaError),
    #[error("{0}")]
    Reduction(#[from] ReductionError),
    #[error("{0}")]
    Structure(#[from] StructureError),
}

/// What one output atom depends on.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dep {
    Zero,
    One,
    Pos { rel: String, at: Tuple },
    Neg { rel: String, at: Tuple },
}

impl Dep {
    /// Value of the output atom on input `s`.
    pub fn resolve(&self, s: &Structure) -> bool {
        match self {
            Dep::Zero => false,
            Dep::One => true,
            Dep::Pos { rel, at } => s.relation(rel).is_some_and(|r| r.contains(at)),
            Dep::Neg { rel, at } => !s.relation(rel).is_some_and(|r| r.contains(at)),
        }
    }

    /// The input atom read, if any.
    pub fn input_atom(&self) -> Option<(&str, &Tuple)> {
        match self {
            Dep::Pos { rel, at } | Dep::Neg { rel, at } => Some((rel, at)),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Dep::Zero => json!({"kind": "zero"}),
            Dep::One => json!({"kind": "one"}),
            Dep::Pos { rel, at } => json!({"kind": "pos", "rel": rel, "at": at}),
            Dep::Neg { rel, at } => json!({"kind": "neg", "rel": rel, "at": at}),
        }
    }

    fn from_literal(lit: Option<&InputLiteral>, params: &[String], env: &[usize], m: usize) -> Dep {
        match lit {
            None => Dep::One,
            Some(l) => {
                let at = l.instantiate(params, env, m);
                if l.positive {
                    Dep::Pos { rel: l.rel.clone(), at }
                } else {
                    Dep::Neg { rel: l.rel.clone(), at }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DepStats {
    pub zero: u128,
    pub one: u128,
    pub pos: u128,
    pub neg: u128,
}

impl DepStats {
    pub fn total(&self) -> u128 {
        self.zero + self.one + self.pos + self.neg
    }
}

/// Dependencies of one output relation. Atoms not listed are [`Dep::Zero`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationTable {
    pub relation: String,
    pub arity: usize,
    /// Number of candidate output tuples, `(m^k)^arity`.
    pub atoms: u128,
    pub entries: BTreeMap<Tuple, Dep>,
}

impl RelationTable {
    pub fn get(&self, out: &[usize]) -> Dep {
        self.entries.get(out).cloned().unwrap_or(Dep::Zero)
    }

    pub fn stats(&self) -> DepStats {
        let mut s = DepStats::default();
        for d in self.entries.values() {
            match d {
                Dep::Zero => s.zero += 1,
                Dep::One => s.one += 1,
                Dep::Pos { .. } => s.pos += 1,
                Dep::Neg { .. } => s.neg += 1,
            }
        }
        s.zero += self.atoms - self.entries.len() as u128;
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyTable {
    pub reduction: String,
    pub input_size: usize,
    pub output_size: usize,
    pub relations: BTreeMap<String, RelationTable>,
}

impl DependencyTable {
    pub fn dep(&self, rel: &str, out: &[usize]) -> Dep {
        self.relations.get(rel).map_or(Dep::Zero, |t| t.get(out))
    }

    /// Output atoms reading each input atom.
    pub fn readers(&self) -> BTreeMap<(String, Tuple), BTreeSet<(String, Tuple)>> {
        let mut out: BTreeMap<(String, Tuple), BTreeSet<(String, Tuple)>> = BTreeMap::new();
        for (rel, t) in &self.relations {
            for (o, d) in &t.entries {
                if let Some((ir, at)) = d.input_atom() {
                    out.entry((ir.to_string(), at.clone())).or_default().insert((rel.clone(), o.clone()));
                }
            }
        }
        out
    }

    /// The output the table predicts for input `s`.
    pub fn predict(&self, def: &ReductionDef, s: &Structure) -> Result<Structure, ProjanaError> {
        let mut parts = StructureParts::new(def.output_vocab.clone(), self.output_size);
        for (rel, t) in &self.relations {
            let set: BTreeSet<Tuple> = t.entries.iter().filter(|(_, d)| d.resolve(s)).map(|(o, _)| o.clone()).collect();
            parts.relations.insert(rel.clone(), set);
        }
        Ok(Structure::new(parts)?)
    }
}

/// Relation name, arity, parameter names and projection form.
type RelationForm = (String, usize, Vec<String>, ProjectionForm);

fn forms(def: &ReductionDef) -> Result<Vec<RelationForm>, ProjanaError> {
    let mut out = Vec::new();
    for (rel, a) in def.output_vocab.relations() {
        let form = classify_projection(&def.relations[rel])
            .map_err(|source| ProjanaError::NotProjective { relation: rel.clone(), source })?;
        out.push((rel.clone(), *a, def.relation_params(rel)?, form));
    }
    Ok(out)
}

/// Guards sharing a literal (or all literal-free ones) form one group; the
/// projection definition only requires exclusivity across groups.
fn group_ids(form: &ProjectionForm) -> Vec<usize> {
    let mut keys: Vec<Option<&InputLiteral>> = Vec::new();
    form.guards()
        .iter()
        .map(|g| {
            let key = g.literal.as_ref();
            keys.iter().position(|k| *k == key).unwrap_or_else(|| {
                keys.push(key);
                keys.len() - 1
            })
        })
        .collect()
}

/// Builds the full table for input size `m` by enumerating the solutions of
/// every numeric guard.
pub fn build_table(def: &ReductionDef, m: usize, node_budget: u64) -> Result<DependencyTable, ProjanaError> {
    let numeric = Structure::empty(Vocabulary::default(), m)?;
    let out_size = checked_pow(m, def.arity)?;
    let mut budget = SearchBudget::new(node_budget);
    let mut relations = BTreeMap::new();
    for (rel, a, params, form) in forms(def)? {
        let groups = group_ids(&form);
        let mut entries: BTreeMap<Tuple, (Dep, usize, usize)> = BTreeMap::new();
        let mut conflict = None;
        for (gi, g) in form.guards().iter().enumerate() {
            let conj = g.alpha.conjuncts();
            let plan = SearchPlan::new(&conj, &params, &vec![false; params.len()], numeric.vocabulary())?;
            plan.run(&numeric, &vec![0; params.len()], &mut budget, &mut |env| {
                let out: Tuple = (0..a).map(|p| rank(&env[p * def.arity..(p + 1) * def.arity], m).unwrap()).collect();
                let dep = Dep::from_literal(g.literal.as_ref(), &params, env, m);
                match entries.get(&out) {
                    Some((_, first, group)) if *group != groups[gi] => {
                        conflict = Some((out, *first, gi));
                        false
                    }
                    Some(_) => true,
                    None => {
                        entries.insert(out, (dep, gi, groups[gi]));
                        true
                    }
                }
            })?;
            if let Some((out, first, second)) = conflict.take() {
                return Err(ProjanaError::Conflict { relation: rel, out, first, second });
            }
        }
        let atoms = (out_size as u128).pow(a as u32);
        let entries = entries.into_iter().map(|(k, (d, _, _))| (k, d)).collect();
        relations.insert(rel.clone(), RelationTable { relation: rel, arity: a, atoms, entries });
    }
    Ok(DependencyTable { reduction: def.name.clone(), input_size: m, output_size: out_size, relations })
}

/// Dependency of a single output atom, without building a table.
pub fn dep_of(def: &ReductionDef, rel: &str, out: &[usize], m: usize) -> Result<Dep, ProjanaError> {
    let numeric = Structure::empty(Vocabulary::default(), m)?;
    let (_, a, params, form) = forms(def)?
        .into_iter()
        .find(|(r, ..)| r == rel)
        .ok_or_else(|| ReductionError::Definition(format!("`{rel}` is not an output relation")))?;
    if out.len() != a {
        return Err(ReductionError::Definition(format!("`{rel}` has arity {a}")).into());
    }
    let mut env = Vec::with_capacity(params.len());
    for &o in out {
        env.extend(unrank(o, m, def.arity)?);
    }
    let groups = group_ids(&form);
    let mut found: Option<(Dep, usize)> = None;
    for (gi, g) in form.guards().iter().enumerate() {
        let c = Compiled::new(&g.alpha, &params, numeric.vocabulary())?;
        let mut slots = env.clone();
        slots.resize(c.slots(), 0);
        if c.eval(&numeric, &mut slots) {
            match &found {
                Some((_, first)) if groups[*first] != groups[gi] => {
                    return Err(ProjanaError::Conflict { relation: rel.to_string(), out: out.to_vec(), first: *first, second: gi })
                }
                Some(_) => {}
                None => found = Some((Dep::from_literal(g.literal.as_ref(), &params, &env, m), gi)),
            }
        }
    }
    Ok(found.map_or(Dep::Zero, |(d, _)| d))
}

/// First disagreement between a table's prediction and the executor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub structure: usize,
    pub relation: String,
    pub out: Tuple,
    pub predicted: bool,
}

/// Checks the table against [`apply_reduction`] on each given input.
pub fn table_consistency<'a>(
    def: &ReductionDef,
    table: &DependencyTable,
    inputs: impl IntoIterator<Item = &'a Structure>,
) -> Result<Result<usize, Mismatch>, ProjanaError> {
    let mut count = 0;
    for (i, s) in inputs.into_iter().enumerate() {
        let actual = apply_reduction(def, s)?;
        let predicted = table.predict(def, s)?;
        if let Some(mm) = first_difference(&predicted, &actual, i) {
            return Ok(Err(mm));
        }
        count += 1;
    }
    Ok(Ok(count))
}

fn first_difference(predicted: &Structure, actual: &Structure, structure: usize) -> Option<Mismatch> {
    for (rel, _) in actual.vocabulary().relations() {
        let p = predicted.relation(rel).unwrap();
        let a = actual.relation(rel).unwrap();
        if let Some(t) = p.symmetric_difference(a).next() {
            return Some(Mismatch { structure, relation: rel.clone(), out: t.clone(), predicted: p.contains(t) });
        }
    }
    None
}

/// `count` inputs over `vocab` of size `m`, each atom present with
/// probability `density`, from a fixed seed.
pub fn random_structures(vocab: &Vocabulary, m: usize, count: usize, density: f64, seed: u64) -> Result<Vec<Structure>, ProjanaError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut parts = StructureParts::new(vocab.clone(), m);
        for (rel, a) in vocab.relations() {
            let total = checked_pow(m, *a)?;
            let set: BTreeSet<Tuple> =
                (0..total).filter(|_| rng.gen_bool(density)).map(|r| unrank(r, m, *a)).collect::<Result<_, _>>()?;
            parts.relations.insert(rel.clone(), set);
        }
        out.push(Structure::new(parts)?);
    }
    Ok(out)
}

/// An input flip that changed output atoms the table does not attribute to it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalityViolation {
    pub flipped: (String, Tuple),
    pub unexpected: Vec<(String, Tuple)>,
    pub missing: Vec<(String, Tuple)>,
}

/// Flips every input atom of `s` in turn and checks that exactly the output
/// atoms reading it change. Returns the number of flips checked.
pub fn mutation_locality(
    def: &ReductionDef,
    table: &DependencyTable,
    s: &Structure,
) -> Result<Result<usize, LocalityViolation>, ProjanaError> {
    let base = apply_reduction(def, s)?;
    let readers = table.readers();
    let none = BTreeSet::new();
    let mut flips = 0;
    for (rel, a) in s.vocabulary().relations() {
        for r in 0..checked_pow(s.size(), *a)? {
            let t = unrank(r, s.size(), *a)?;
            let flipped = s.with_flipped(rel, &t)?;
            let out = apply_reduction(def, &flipped)?;
            let mut changed = BTreeSet::new();
            for (orel, _) in base.vocabulary().relations() {
                for o in base.relation(orel).unwrap().symmetric_difference(out.relation(orel).unwrap()) {
                    changed.insert((orel.clone(), o.clone()));
                }
            }
            let expected = readers.get(&(rel.clone(), t.clone())).unwrap_or(&none);
            if &changed != expected {
                return Ok(Err(LocalityViolation {
                    flipped: (rel.clone(), t),
                    unexpected: changed.difference(expected).cloned().collect(),
                    missing: expected.difference(&changed).cloned().collect(),
                }));
            }
            flips += 1;
        }
    }
    Ok(Ok(flips))
}

fn stats_json(s: &DepStats) -> Value {
    // u128 counts are emitted as strings only when they overflow u64.
    let n = |x: u128| u64::try_from(x).map_or_else(|_| json!(x.to_string()), |v| json!(v));
    json!({"zero": n(s.zero), "one": n(s.one), "pos": n(s.pos), "neg": n(s.neg), "total": n(s.total())})
}

/// Deterministic JSON rendering. Zero entries are never listed; with
/// `summary_only` no entries are listed at all.
pub fn emit_table(table: &DependencyTable, summary_only: bool) -> Value {
    let rels: Vec<Value> = table
        .relations
        .values()
        .map(|t| {
            let mut v = json!({"relation": t.relation, "arity": t.arity, "stats": stats_json(&t.stats())});
            if !summary_only {
                v["entries"] = t.entries.iter().map(|(o, d)| json!({"out": o, "dep": d.to_json()})).collect();
            }
            v
        })
        .collect();
    json!({
        "reduction": table.reduction,
        "input_size": table.input_size,
        "output_size": table.output_size,
        "tables": rels,
    })
}
