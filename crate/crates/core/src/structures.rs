//! Finite relational structures over initial segments `{0..m-1}`.
//!
//! Output structures of a `k`-ary reduction live over `k`-tuples of the input
//! universe. They are stored flattened: every tuple is replaced by its
//! lexicographic rank, and the `(base, dim)` pair is kept as [`TupleLayout`]
//! so the original tuples can be recovered with [`unrank`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde_json::{json, Map, Value};
use thiserror::Error;

/// A tuple of universe elements.
pub type Tuple = Vec<usize>;

/// Names that can never be used for input relations or constants.
const RESERVED: &[&str] = &["SUC", "PLUS", "TIMES", "E", "A", "true", "false", "max"];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructureError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid vocabulary: {0}")]
    Vocabulary(String),
    #[error("invalid structure: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("unknown numeric symbol `{0}`")]
    UnknownSymbol(String),
    #[error("malformed structure JSON: {0}")]
    Json(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// One broken structure invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    SizeTooSmall(usize),
    ElementOutOfUniverse { relation: String, tuple: Tuple },
    ConstantOutOfUniverse { constant: String, value: usize },
    UnknownRelation(String),
    UnknownConstant(String),
    ArityMismatch { relation: String, expected: usize, tuple: Tuple },
    MissingConstant(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SizeTooSmall(m) => write!(f, "size < 2 (got {m})"),
            Violation::ElementOutOfUniverse { relation, tuple } => {
                write!(f, "element out of universe in {relation}{tuple:?}")
            }
            Violation::ConstantOutOfUniverse { constant, value } => {
                write!(f, "element out of universe: constant {constant} = {value}")
            }
            Violation::UnknownRelation(r) => write!(f, "relation {r} not in vocabulary"),
            Violation::UnknownConstant(c) => write!(f, "constant {c} not in vocabulary"),
            Violation::ArityMismatch { relation, expected, tuple } => write!(
                f,
                "arity mismatch in {relation}{tuple:?}: expected {expected} elements"
            ),
            Violation::MissingConstant(c) => write!(f, "constant {c} has no value"),
        }
    }
}

/// Relation symbols with arities, plus constant symbols.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocabulary {
    relations: Vec<(String, usize)>,
    constants: Vec<String>,
}

impl Vocabulary {
    pub fn new<R: Into<String>, C: Into<String>>(
        relations: impl IntoIterator<Item = (R, usize)>,
        constants: impl IntoIterator<Item = C>,
    ) -> Result<Self, StructureError> {
        let relations: Vec<(String, usize)> =
            relations.into_iter().map(|(n, a)| (n.into(), a)).collect();
        let constants: Vec<String> = constants.into_iter().map(Into::into).collect();
        let mut seen = BTreeSet::new();
        for name in relations.iter().map(|(n, _)| n).chain(constants.iter()) {
            if !is_identifier(name) || RESERVED.contains(&name.as_str()) {
                return Err(StructureError::Vocabulary(format!("illegal symbol name `{name}`")));
            }
            if !seen.insert(name.clone()) {
                return Err(StructureError::Vocabulary(format!("duplicate symbol `{name}`")));
            }
        }
        if let Some((n, _)) = relations.iter().find(|(_, a)| *a == 0) {
            return Err(StructureError::Vocabulary(format!("relation `{n}` has arity 0")));
        }
        Ok(Self { relations, constants })
    }

    /// Relations only, no constants.
    pub fn relational<S: Into<String>>(
        relations: impl IntoIterator<Item = (S, usize)>,
    ) -> Result<Self, StructureError> {
        Self::new(relations, std::iter::empty::<String>())
    }

    pub fn relations(&self) -> &[(String, usize)] {
        &self.relations
    }

    pub fn constants(&self) -> &[String] {
        &self.constants
    }

    pub fn relation_index(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|(n, _)| n == name)
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.relations.iter().find(|(n, _)| n == name).map(|(_, a)| *a)
    }

    pub fn constant_index(&self, name: &str) -> Option<usize> {
        self.constants.iter().position(|c| c == name)
    }

    /// Same symbols with the same arities, ignoring declaration order.
    pub fn same_symbols(&self, other: &Vocabulary) -> bool {
        let a: BTreeSet<_> = self.relations.iter().collect();
        let b: BTreeSet<_> = other.relations.iter().collect();
        let c: BTreeSet<_> = self.constants.iter().collect();
        let d: BTreeSet<_> = other.constants.iter().collect();
        a == b && c == d
    }

    /// Returns a copy extended by one relation symbol.
    pub fn with_relation(&self, name: &str, arity: usize) -> Result<Self, StructureError> {
        let mut rels = self.relations.clone();
        rels.push((name.to_string(), arity));
        Self::new(rels, self.constants.clone())
    }
}

impl fmt::Display for Vocabulary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .relations
            .iter()
            .map(|(n, a)| format!("{n}^{a}"))
            .chain(self.constants.iter().cloned())
            .collect();
        write!(f, "<{}>", parts.join(","))
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Lexicographic rank of `tuple` over `{0..base-1}`.
pub fn rank(tuple: &[usize], base: usize) -> Result<usize, StructureError> {
    let mut acc: usize = 0;
    for &e in tuple {
        if e >= base {
            return Err(StructureError::Domain(format!(
                "element {e} not in universe of size {base}"
            )));
        }
        acc = acc
            .checked_mul(base)
            .and_then(|a| a.checked_add(e))
            .ok_or_else(|| StructureError::Domain("rank overflows usize".into()))?;
    }
    Ok(acc)
}

/// Inverse of [`rank`]: the `dim`-tuple at position `r`.
pub fn unrank(r: usize, base: usize, dim: usize) -> Result<Tuple, StructureError> {
    let bound = checked_pow(base, dim)?;
    if r >= bound {
        return Err(StructureError::Domain(format!(
            "rank {r} out of range for base {base}, dim {dim}"
        )));
    }
    let mut out = vec![0; dim];
    let mut rest = r;
    for slot in out.iter_mut().rev() {
        *slot = rest % base;
        rest /= base;
    }
    Ok(out)
}

pub(crate) fn unrank_into(mut r: usize, base: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = r % base;
        r /= base;
    }
}

pub fn checked_pow(base: usize, exp: usize) -> Result<usize, StructureError> {
    u32::try_from(exp)
        .ok()
        .and_then(|e| base.checked_pow(e))
        .ok_or_else(|| StructureError::Domain(format!("{base}^{exp} overflows usize")))
}

/// A validated position in the lexicographic order of `dim`-tuples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TupleIndex {
    base: usize,
    dim: usize,
    rank: usize,
}

impl TupleIndex {
    pub fn new(base: usize, dim: usize, rank: usize) -> Result<Self, StructureError> {
        if base == 0 || dim == 0 {
            return Err(StructureError::Domain("base and dim must be positive".into()));
        }
        if rank >= checked_pow(base, dim)? {
            return Err(StructureError::Domain(format!("rank {rank} out of range")));
        }
        Ok(Self { base, dim, rank })
    }

    pub fn from_tuple(tuple: &[usize], base: usize) -> Result<Self, StructureError> {
        Self::new(base, tuple.len(), rank(tuple, base)?)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn tuple(&self) -> Tuple {
        unrank(self.rank, self.base, self.dim).expect("validated on construction")
    }
}

/// Built-in numeric relation symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NumPred {
    Eq,
    Le,
    Lt,
    Suc,
    Plus,
    Times,
}

impl NumPred {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "=" => NumPred::Eq,
            "<=" | "≤" => NumPred::Le,
            "<" => NumPred::Lt,
            "SUC" => NumPred::Suc,
            "PLUS" => NumPred::Plus,
            "TIMES" => NumPred::Times,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            NumPred::Eq => "=",
            NumPred::Le => "<=",
            NumPred::Lt => "<",
            NumPred::Suc => "SUC",
            NumPred::Plus => "PLUS",
            NumPred::Times => "TIMES",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            NumPred::Plus | NumPred::Times => 3,
            _ => 2,
        }
    }

    /// Truth value on in-universe arguments. Arithmetic never wraps: a sum or
    /// product past `m-1` simply has no matching third argument.
    #[inline]
    pub fn holds(self, args: &[usize]) -> bool {
        match self {
            NumPred::Eq => args[0] == args[1],
            NumPred::Le => args[0] <= args[1],
            NumPred::Lt => args[0] < args[1],
            NumPred::Suc => args[0].checked_add(1) == Some(args[1]),
            NumPred::Plus => args[0].checked_add(args[1]) == Some(args[2]),
            NumPred::Times => args[0].checked_mul(args[1]) == Some(args[2]),
        }
    }
}

/// Numeric constant symbols `0`, `1` and `max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NumConst {
    Zero,
    One,
    Max,
}

impl NumConst {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "0" => Some(NumConst::Zero),
            "1" => Some(NumConst::One),
            "max" => Some(NumConst::Max),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NumConst::Zero => "0",
            NumConst::One => "1",
            NumConst::Max => "max",
        }
    }

    #[inline]
    pub fn value(self, m: usize) -> usize {
        match self {
            NumConst::Zero => 0,
            NumConst::One => 1,
            NumConst::Max => m - 1,
        }
    }
}

/// Evaluates a built-in numeric relation by name.
pub fn eval_numeric(name: &str, args: &[usize], m: usize) -> Result<bool, StructureError> {
    let pred = NumPred::from_name(name).ok_or_else(|| StructureError::UnknownSymbol(name.into()))?;
    if args.len() != pred.arity() {
        return Err(StructureError::Domain(format!(
            "{name} takes {} arguments, got {}",
            pred.arity(),
            args.len()
        )));
    }
    if let Some(&bad) = args.iter().find(|&&a| a >= m) {
        return Err(StructureError::Domain(format!("{bad} not in universe of size {m}")));
    }
    Ok(pred.holds(args))
}

/// Interprets a numeric constant symbol by name.
pub fn constant_value(name: &str, m: usize) -> Result<usize, StructureError> {
    let c = NumConst::from_name(name).ok_or_else(|| StructureError::UnknownSymbol(name.into()))?;
    if m < 2 {
        return Err(StructureError::Domain(format!("universe size {m} < 2")));
    }
    Ok(c.value(m))
}

/// How ranks of a flattened tuple universe map back to tuples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TupleLayout {
    pub base: usize,
    pub dim: usize,
}

/// Unvalidated structure contents; see [`validate_structure`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureParts {
    pub vocabulary: Vocabulary,
    pub size: usize,
    pub relations: BTreeMap<String, BTreeSet<Tuple>>,
    pub constants: BTreeMap<String, usize>,
    pub layout: Option<TupleLayout>,
}

impl StructureParts {
    pub fn new(vocabulary: Vocabulary, size: usize) -> Self {
        Self {
            vocabulary,
            size,
            relations: BTreeMap::new(),
            constants: BTreeMap::new(),
            layout: None,
        }
    }

    pub fn with_relation<I, T>(mut self, name: &str, tuples: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<Tuple>,
    {
        self.relations
            .entry(name.to_string())
            .or_default()
            .extend(tuples.into_iter().map(Into::into));
        self
    }

    pub fn with_constant(mut self, name: &str, value: usize) -> Self {
        self.constants.insert(name.to_string(), value);
        self
    }
}

/// Checks every structure invariant and reports all violations found.
pub fn validate_structure(parts: &StructureParts) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    let m = parts.size;
    if m < 2 {
        out.push(Violation::SizeTooSmall(m));
    }
    for (name, tuples) in &parts.relations {
        let Some(arity) = parts.vocabulary.arity(name) else {
            out.push(Violation::UnknownRelation(name.clone()));
            continue;
        };
        for t in tuples {
            if t.len() != arity {
                out.push(Violation::ArityMismatch {
                    relation: name.clone(),
                    expected: arity,
                    tuple: t.clone(),
                });
            }
            if t.iter().any(|&e| e >= m) {
                out.push(Violation::ElementOutOfUniverse { relation: name.clone(), tuple: t.clone() });
            }
        }
    }
    for (name, &value) in &parts.constants {
        if parts.vocabulary.constant_index(name).is_none() {
            out.push(Violation::UnknownConstant(name.clone()));
        } else if value >= m {
            out.push(Violation::ConstantOutOfUniverse { constant: name.clone(), value });
        }
    }
    for c in parts.vocabulary.constants() {
        if !parts.constants.contains_key(c) {
            out.push(Violation::MissingConstant(c.clone()));
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// An immutable, validated finite structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Structure {
    vocabulary: Vocabulary,
    size: usize,
    relations: Vec<BTreeSet<Tuple>>,
    constants: Vec<usize>,
    layout: Option<TupleLayout>,
}

impl Structure {
    pub fn new(mut parts: StructureParts) -> Result<Self, StructureError> {
        validate_structure(&parts).map_err(StructureError::Invalid)?;
        let relations = parts
            .vocabulary
            .relations()
            .iter()
            .map(|(n, _)| parts.relations.remove(n).unwrap_or_default())
            .collect();
        let constants = parts.vocabulary.constants().iter().map(|c| parts.constants[c]).collect();
        Ok(Self {
            vocabulary: parts.vocabulary,
            size: parts.size,
            relations,
            constants,
            layout: parts.layout,
        })
    }

    /// A structure with all relations empty. Fails if the vocabulary has constants.
    pub fn empty(vocabulary: Vocabulary, size: usize) -> Result<Self, StructureError> {
        Self::new(StructureParts::new(vocabulary, size))
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn layout(&self) -> Option<TupleLayout> {
        self.layout
    }

    pub fn relation(&self, name: &str) -> Option<&BTreeSet<Tuple>> {
        self.vocabulary.relation_index(name).map(|i| &self.relations[i])
    }

    #[inline]
    pub fn relation_at(&self, index: usize) -> &BTreeSet<Tuple> {
        &self.relations[index]
    }

    pub fn constant(&self, name: &str) -> Option<usize> {
        self.vocabulary.constant_index(name).map(|i| self.constants[i])
    }

    #[inline]
    pub fn holds(&self, index: usize, tuple: &[usize]) -> bool {
        self.relations[index].contains(tuple)
    }

    pub fn to_parts(&self) -> StructureParts {
        StructureParts {
            vocabulary: self.vocabulary.clone(),
            size: self.size,
            relations: self
                .vocabulary
                .relations()
                .iter()
                .zip(&self.relations)
                .map(|((n, _), r)| (n.clone(), r.clone()))
                .collect(),
            constants: self
                .vocabulary
                .constants()
                .iter()
                .zip(&self.constants)
                .map(|(n, v)| (n.clone(), *v))
                .collect(),
            layout: self.layout,
        }
    }

    pub fn with_layout(mut self, layout: Option<TupleLayout>) -> Self {
        self.layout = layout;
        self
    }

    /// Copy with one tuple added to or removed from relation `name`.
    pub fn with_flipped(&self, name: &str, tuple: &[usize]) -> Result<Self, StructureError> {
        let i = self
            .vocabulary
            .relation_index(name)
            .ok_or_else(|| StructureError::Domain(format!("no relation {name}")))?;
        if tuple.len() != self.vocabulary.relations()[i].1 || tuple.iter().any(|&e| e >= self.size) {
            return Err(StructureError::Domain(format!("bad tuple {tuple:?} for {name}")));
        }
        let mut out = self.clone();
        if !out.relations[i].remove(tuple) {
            out.relations[i].insert(tuple.to_vec());
        }
        Ok(out)
    }

    /// Copy extended with a fresh relation symbol.
    pub fn with_extra_relation(
        &self,
        name: &str,
        arity: usize,
        tuples: BTreeSet<Tuple>,
    ) -> Result<Self, StructureError> {
        let mut parts = self.to_parts();
        parts.vocabulary = self.vocabulary.with_relation(name, arity)?;
        parts.relations.insert(name.to_string(), tuples);
        Self::new(parts)
    }

    /// Serializes to the structure JSON wire format.
    pub fn to_json(&self) -> Value {
        let mut rels = Map::new();
        for ((name, _), tuples) in self.vocabulary.relations().iter().zip(&self.relations) {
            rels.insert(name.clone(), json!(tuples.iter().collect::<Vec<_>>()));
        }
        let consts: Map<String, Value> = self
            .vocabulary
            .constants()
            .iter()
            .zip(&self.constants)
            .map(|(n, v)| (n.clone(), json!(v)))
            .collect();
        let mut obj = Map::new();
        obj.insert("size".into(), json!(self.size));
        if let Some(l) = self.layout {
            obj.insert("dim".into(), json!(l.dim));
            obj.insert("base".into(), json!(l.base));
            obj.insert("encoded".into(), json!(true));
        }
        obj.insert(
            "vocabulary".into(),
            json!({
                "relations": self.vocabulary.relations().iter().map(|(n, a)| json!([n, a])).collect::<Vec<_>>(),
                "constants": self.vocabulary.constants(),
            }),
        );
        obj.insert("relations".into(), Value::Object(rels));
        obj.insert("constants".into(), Value::Object(consts));
        Value::Object(obj)
    }

    /// Parses the structure JSON wire format.
    ///
    /// With `"encoded": false` and layout metadata present, every position of
    /// a relation tuple is itself a `dim`-tuple and gets ranked here.
    pub fn from_json(value: &Value) -> Result<Self, StructureError> {
        let bad = |m: &str| StructureError::Json(m.to_string());
        let obj = value.as_object().ok_or_else(|| bad("expected an object"))?;
        let get_usize = |k: &str| -> Result<Option<usize>, StructureError> {
            match obj.get(k) {
                None | Some(Value::Null) => Ok(None),
                Some(v) => v
                    .as_u64()
                    .map(|x| Some(x as usize))
                    .ok_or_else(|| StructureError::Json(format!("`{k}` must be a natural number"))),
            }
        };
        let size = get_usize("size")?.ok_or_else(|| bad("missing `size`"))?;
        let layout = match (get_usize("base")?, get_usize("dim")?) {
            (Some(base), Some(dim)) => Some(TupleLayout { base, dim }),
            (None, None) => None,
            _ => return Err(bad("`base` and `dim` must appear together")),
        };
        let encoded = obj.get("encoded").and_then(Value::as_bool).unwrap_or(layout.is_some());
        let empty = Map::new();
        let rel_obj = match obj.get("relations") {
            Some(Value::Object(m)) => m,
            None => &empty,
            _ => return Err(bad("`relations` must be an object")),
        };
        let mut relations: BTreeMap<String, BTreeSet<Tuple>> = BTreeMap::new();
        for (name, tuples) in rel_obj {
            let list = tuples.as_array().ok_or_else(|| bad("relation must be a list of tuples"))?;
            let set = relations.entry(name.clone()).or_default();
            for t in list {
                let t = t.as_array().ok_or_else(|| bad("tuple must be a list"))?;
                let mut tuple = Vec::with_capacity(t.len());
                for pos in t {
                    if let Some(x) = pos.as_u64() {
                        tuple.push(x as usize);
                    } else if let (Some(inner), Some(l), false) = (pos.as_array(), layout, encoded) {
                        let elems: Option<Vec<usize>> =
                            inner.iter().map(|e| e.as_u64().map(|x| x as usize)).collect();
                        let elems = elems.ok_or_else(|| bad("tuple entries must be naturals"))?;
                        if elems.len() != l.dim {
                            return Err(bad("explicit tuple length differs from `dim`"));
                        }
                        tuple.push(rank(&elems, l.base)?);
                    } else {
                        return Err(bad("tuple entries must be naturals"));
                    }
                }
                set.insert(tuple);
            }
        }
        let mut constants = BTreeMap::new();
        if let Some(c) = obj.get("constants") {
            let c = c.as_object().ok_or_else(|| bad("`constants` must be an object"))?;
            for (k, v) in c {
                let v = v.as_u64().ok_or_else(|| bad("constant values must be naturals"))?;
                constants.insert(k.clone(), v as usize);
            }
        }
        let vocabulary = match obj.get("vocabulary") {
            Some(v) => parse_vocabulary_json(v)?,
            None => {
                let mut rels = Vec::new();
                for (name, set) in &relations {
                    let arity = set.iter().next().map(Vec::len).ok_or_else(|| {
                        StructureError::Json(format!(
                            "cannot infer arity of empty relation `{name}` without `vocabulary`"
                        ))
                    })?;
                    rels.push((name.clone(), arity));
                }
                Vocabulary::new(rels, constants.keys().cloned().collect::<Vec<_>>())?
            }
        };
        Structure::new(StructureParts { vocabulary, size, relations, constants, layout })
    }
}

pub(crate) fn parse_vocabulary_json(v: &Value) -> Result<Vocabulary, StructureError> {
    let bad = |m: &str| StructureError::Json(m.to_string());
    let rels = v.get("relations").and_then(Value::as_array).ok_or_else(|| bad("vocabulary.relations"))?;
    let mut relations = Vec::new();
    for r in rels {
        let pair = r.as_array().filter(|p| p.len() == 2).ok_or_else(|| bad("relation entry must be [name, arity]"))?;
        let name = pair[0].as_str().ok_or_else(|| bad("relation name"))?;
        let arity = pair[1].as_u64().ok_or_else(|| bad("relation arity"))?;
        relations.push((name.to_string(), arity as usize));
    }
    let mut constants = Vec::new();
    if let Some(cs) = v.get("constants") {
        for c in cs.as_array().ok_or_else(|| bad("vocabulary.constants"))? {
            constants.push(c.as_str().ok_or_else(|| bad("constant name"))?.to_string());
        }
    }
    Vocabulary::new(relations, constants)
}

pub(crate) fn vocabulary_json(v: &Vocabulary) -> Value {
    json!({
        "relations": v.relations().iter().map(|(n, a)| json!([n, a])).collect::<Vec<_>>(),
        "constants": v.constants(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sat_vocab() -> Vocabulary {
        Vocabulary::relational([("P", 2), ("N", 2)]).unwrap()
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank(&[0, 0, 1, 1], 2).unwrap(), 3);
        assert_eq!(rank(&[1, 0, 1, 1], 2).unwrap(), 11);
        assert_eq!(rank(&[0, 0, 0, 0], 5).unwrap(), 0);
        assert!(matches!(rank(&[0, 2], 2), Err(StructureError::Domain(_))));
    }

    #[test]
    fn unrank_examples() {
        assert_eq!(unrank(11, 2, 4).unwrap(), vec![1, 0, 1, 1]);
        assert_eq!(unrank(0, 3, 2).unwrap(), vec![0, 0]);
        assert_eq!(unrank(52, 16, 2).unwrap(), vec![3, 4]);
        assert!(unrank(16, 2, 4).is_err());
    }

    #[test]
    fn rank_unrank_exhaustive() {
        for n in 2..=16usize {
            for k in 1..=4usize {
                let total = n.pow(k as u32);
                if total > 70_000 {
                    continue;
                }
                for r in 0..total {
                    let t = unrank(r, n, k).unwrap();
                    assert_eq!(rank(&t, n).unwrap(), r);
                }
            }
        }
        // the big ones are spot-checked at their boundaries
        for n in 2..=16usize {
            let total = n.pow(4);
            for r in [0, 1, total / 2, total - 1] {
                assert_eq!(rank(&unrank(r, n, 4).unwrap(), n).unwrap(), r);
            }
        }
    }

    #[test]
    fn tuple_index() {
        let t = TupleIndex::from_tuple(&[3, 4], 16).unwrap();
        assert_eq!(t.rank(), 52);
        assert_eq!(t.tuple(), vec![3, 4]);
        assert!(TupleIndex::new(2, 2, 4).is_err());
    }

    #[test]
    fn numeric_examples() {
        assert!(eval_numeric("SUC", &[14, 15], 16).unwrap());
        assert!(eval_numeric("PLUS", &[7, 7, 14], 16).unwrap());
        assert!(!eval_numeric("PLUS", &[8, 8, 15], 16).unwrap());
        assert!(eval_numeric("TIMES", &[3, 5, 15], 16).unwrap());
        assert!(!eval_numeric("TIMES", &[4, 4, 0], 16).unwrap());
        assert!(eval_numeric("≤", &[3, 3], 4).unwrap());
        assert!(matches!(eval_numeric("BETWEEN", &[0, 1], 4), Err(StructureError::UnknownSymbol(_))));
        assert!(eval_numeric("SUC", &[0, 16], 16).is_err());
    }

    #[test]
    fn constants() {
        assert_eq!(constant_value("max", 16).unwrap(), 15);
        assert_eq!(constant_value("0", 2).unwrap(), 0);
        assert_eq!(constant_value("1", 81).unwrap(), 1);
        assert!(constant_value("two", 81).is_err());
    }

    #[test]
    fn plus_commutes_and_suc_is_cover() {
        for m in 2..=32usize {
            for i in 0..m {
                for j in 0..m {
                    for k in 0..m {
                        assert_eq!(
                            eval_numeric("PLUS", &[i, j, k], m).unwrap(),
                            eval_numeric("PLUS", &[j, i, k], m).unwrap()
                        );
                    }
                    if eval_numeric("SUC", &[i, j], m).unwrap() {
                        assert!(i < j);
                        assert!(!(0..m).any(|l| i < l && l < j));
                    }
                }
            }
        }
    }

    #[test]
    fn small_sat_structure_is_valid() {
        let parts = StructureParts::new(sat_vocab(), 3)
            .with_relation("P", [vec![0, 0], vec![2, 0], vec![0, 1], vec![2, 2]])
            .with_relation("N", [vec![1, 0], vec![2, 1], vec![2, 2]]);
        assert_eq!(validate_structure(&parts), Ok(()));
    }

    #[test]
    fn violations_are_all_reported() {
        let parts = StructureParts::new(sat_vocab(), 3).with_relation("P", [vec![5, 0]]);
        let v = validate_structure(&parts).unwrap_err();
        assert_eq!(v.len(), 1);
        assert!(v[0].to_string().contains("element out of universe"));

        let parts = StructureParts::new(sat_vocab(), 1)
            .with_relation("P", [vec![0, 0, 1]])
            .with_relation("Q", [vec![0]]);
        let v = validate_structure(&parts).unwrap_err();
        assert!(v[0].to_string().contains("size < 2"));
        assert!(v.iter().any(|x| matches!(x, Violation::ArityMismatch { .. })));
        assert!(v.iter().any(|x| matches!(x, Violation::UnknownRelation(_))));
        assert!(v.len() >= 4);
    }

    #[test]
    fn vocabulary_rules() {
        assert!(Vocabulary::relational([("P", 2), ("P", 1)]).is_err());
        assert!(Vocabulary::relational([("P", 0)]).is_err());
        assert!(Vocabulary::relational([("SUC", 2)]).is_err());
        assert!(Vocabulary::new([("P", 1)], ["P"]).is_err());
    }

    #[test]
    fn json_round_trip_and_explicit_tuples() {
        let s = Structure::new(
            StructureParts::new(Vocabulary::relational([("W", 2), ("L", 1)]).unwrap(), 16)
                .with_relation("W", [vec![2, 3]])
                .with_relation("L", [vec![3]]),
        )
        .unwrap()
        .with_layout(Some(TupleLayout { base: 2, dim: 4 }));
        let back = Structure::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);

        let explicit = json!({
            "size": 16, "dim": 4, "base": 2, "encoded": false,
            "relations": {"W": [[[0,0,1,0],[0,0,1,1]]], "L": [[[0,0,1,1]]]},
            "constants": {}
        });
        let parsed = Structure::from_json(&explicit).unwrap();
        assert_eq!(parsed.relation("W").unwrap().iter().next().unwrap(), &vec![2, 3]);
        assert_eq!(parsed.relation("L").unwrap().iter().next().unwrap(), &vec![3]);

        let no_vocab_empty = json!({"size": 3, "relations": {"P": []}, "constants": {}});
        assert!(Structure::from_json(&no_vocab_empty).is_err());
    }

    #[test]
    fn flipping() {
        let s = Structure::empty(sat_vocab(), 2).unwrap();
        let f = s.with_flipped("P", &[1, 0]).unwrap();
        assert!(f.relation("P").unwrap().contains(&vec![1, 0]));
        assert_eq!(f.with_flipped("P", &[1, 0]).unwrap(), s);
    }

    proptest! {
        #[test]
        fn lex_order_matches_rank_order(
            n in 2usize..=16,
            a in proptest::collection::vec(0usize..16, 4),
            b in proptest::collection::vec(0usize..16, 4),
        ) {
            let a: Vec<usize> = a.into_iter().map(|x| x % n).collect();
            let b: Vec<usize> = b.into_iter().map(|x| x % n).collect();
            prop_assert_eq!(a.cmp(&b), rank(&a, n).unwrap().cmp(&rank(&b, n).unwrap()));
        }
    }
}
