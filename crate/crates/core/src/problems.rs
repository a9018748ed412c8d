//! Natural problem representations and their logical encodings.
//!
//! 3SAT instances are square: as many clauses as variables, each clause made
//! of three distinct literals. SUBSET-SUM and PARTITION sizes are bit rows of
//! a binary matrix whose most significant bit sits in column 0.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::structures::{rank, Structure, StructureError, StructureParts, Vocabulary};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProblemError {
    #[error("invalid 3SAT instance: {0}")]
    Invalid(String),
    #[error("clause {clause}: expected 3 distinct literals, found {found}")]
    ClauseShape { clause: usize, found: usize },
    #[error("DIMACS line {line}: {msg}")]
    Dimacs { line: usize, msg: String },
    #[error("structure lacks {0}")]
    MissingRelation(String),
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub var: usize,
    pub neg: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Self { var, neg: false }
    }

    pub fn neg(var: usize) -> Self {
        Self { var, neg: true }
    }

    /// True under `assignment`.
    pub fn holds(self, assignment: &[bool]) -> bool {
        assignment[self.var] != self.neg
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", if self.neg { "¬" } else { "" }, self.var)
    }
}

/// A square 3CNF instance with `n` variables and `n` clauses.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawCnf")]
pub struct Cnf3Instance {
    n: usize,
    clauses: Vec<[Literal; 3]>,
}

#[derive(Deserialize)]
struct RawCnf {
    n: usize,
    clauses: Vec<Vec<Literal>>,
}

impl TryFrom<RawCnf> for Cnf3Instance {
    type Error = ProblemError;

    fn try_from(raw: RawCnf) -> Result<Self, Self::Error> {
        let clauses = raw
            .clauses
            .into_iter()
            .enumerate()
            .map(|(i, c)| {
                <[Literal; 3]>::try_from(c.as_slice()).map_err(|_| ProblemError::ClauseShape { clause: i, found: c.len() })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Cnf3Instance::new(raw.n, clauses)
    }
}

impl Cnf3Instance {
    /// Validates and canonicalizes (literals sorted within each clause).
    pub fn new(n: usize, clauses: Vec<[Literal; 3]>) -> Result<Self, ProblemError> {
        if clauses.is_empty() {
            return Err(ProblemError::Invalid("no clauses".into()));
        }
        if clauses.len() != n {
            return Err(ProblemError::Invalid(format!("{} clauses over {n} variables; must be square", clauses.len())));
        }
        let mut out = Vec::with_capacity(n);
        for (i, mut c) in clauses.into_iter().enumerate() {
            c.sort();
            if c[0] == c[1] || c[1] == c[2] {
                let found = c.iter().collect::<BTreeSet<_>>().len();
                return Err(ProblemError::ClauseShape { clause: i, found });
            }
            if let Some(l) = c.iter().find(|l| l.var >= n) {
                return Err(ProblemError::Invalid(format!("clause {i} mentions x{} but n = {n}", l.var)));
            }
            out.push(c);
        }
        Ok(Self { n, clauses: out })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn clauses(&self) -> &[[Literal; 3]] {
        &self.clauses
    }

    /// Clause-by-clause evaluation.
    pub fn satisfied_by(&self, assignment: &[bool]) -> bool {
        assignment.len() == self.n && self.clauses.iter().all(|c| c.iter().any(|l| l.holds(assignment)))
    }

    pub fn to_dimacs(&self) -> String {
        let mut s = format!("p cnf {} {}\n", self.n, self.n);
        for c in &self.clauses {
            for l in c {
                let v = l.var as i64 + 1;
                s.push_str(&format!("{} ", if l.neg { -v } else { v }));
            }
            s.push_str("0\n");
        }
        s
    }
}

impl fmt::Display for Cnf3Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                f.write_str(" ∧ ")?;
            }
            write!(f, "({} ∨ {} ∨ {})", c[0], c[1], c[2])?;
        }
        Ok(())
    }
}

pub fn sat_vocabulary() -> Vocabulary {
    Vocabulary::relational([("P", 2), ("N", 2)]).expect("static vocabulary")
}

pub fn subsetsum_vocabulary() -> Vocabulary {
    Vocabulary::relational([("W", 2), ("L", 1)]).expect("static vocabulary")
}

pub fn partition_vocabulary() -> Vocabulary {
    Vocabulary::relational([("T", 2)]).expect("static vocabulary")
}

/// `P(j,i)` iff `x_j` occurs in clause `i`; `N(j,i)` iff `¬x_j` does.
pub fn encode_3sat(c: &Cnf3Instance) -> Structure {
    let clauses: Vec<Vec<Literal>> = c.clauses.iter().map(|cl| cl.to_vec()).collect();
    encode_sat_permissive(c.n, &clauses).expect("a valid instance always encodes")
}

/// Encodes arbitrary clauses (any length, repeats allowed) into a size-`n`
/// structure. Only meant for reproducing hand-made SAT structures; the
/// reduction pipeline takes [`Cnf3Instance`]s.
pub fn encode_sat_permissive(n: usize, clauses: &[Vec<Literal>]) -> Result<Structure, ProblemError> {
    if clauses.len() > n {
        return Err(ProblemError::Invalid(format!("{} clauses do not fit a universe of size {n}", clauses.len())));
    }
    let mut p = BTreeSet::new();
    let mut neg = BTreeSet::new();
    for (i, c) in clauses.iter().enumerate() {
        for l in c {
            if l.var >= n {
                return Err(ProblemError::Invalid(format!("x{} outside a universe of size {n}", l.var)));
            }
            if l.neg { &mut neg } else { &mut p }.insert(vec![l.var, i]);
        }
    }
    Ok(Structure::new(
        StructureParts::new(sat_vocabulary(), n).with_relation("P", p).with_relation("N", neg),
    )?)
}

/// Reads back the clauses of a ⟨P,N⟩ structure (clause `i` is the set of
/// literals whose atoms mention `i`).
pub fn decode_sat(s: &Structure) -> Result<Vec<Vec<Literal>>, ProblemError> {
    let p = s.relation("P").ok_or_else(|| ProblemError::MissingRelation("P".into()))?;
    let nn = s.relation("N").ok_or_else(|| ProblemError::MissingRelation("N".into()))?;
    let mut clauses = vec![Vec::new(); s.size()];
    for t in p {
        clauses[t[1]].push(Literal::pos(t[0]));
    }
    for t in nn {
        clauses[t[1]].push(Literal::neg(t[0]));
    }
    for c in &mut clauses {
        c.sort();
    }
    Ok(clauses)
}

fn big_to_string<S: serde::Serializer>(v: &[BigUint], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| x.to_str_radix(10)))
}

fn big_from_string(s: &str) -> Result<BigUint, String> {
    BigUint::parse_bytes(s.as_bytes(), 10).ok_or_else(|| format!("`{s}` is not a decimal natural"))
}

/// Sizes indexed by element id, plus a target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSubsetSum")]
pub struct SubsetSumInstance {
    #[serde(serialize_with = "big_to_string")]
    pub sizes: Vec<BigUint>,
    #[serde(serialize_with = "serialize_one")]
    pub target: BigUint,
}

fn serialize_one<S: serde::Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_str_radix(10))
}

#[derive(Deserialize)]
struct RawSubsetSum {
    sizes: Vec<String>,
    target: String,
}

impl TryFrom<RawSubsetSum> for SubsetSumInstance {
    type Error = String;

    fn try_from(raw: RawSubsetSum) -> Result<Self, String> {
        Ok(Self {
            sizes: raw.sizes.iter().map(|s| big_from_string(s)).collect::<Result<_, _>>()?,
            target: big_from_string(&raw.target)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPartition")]
pub struct PartitionInstance {
    #[serde(serialize_with = "big_to_string")]
    pub sizes: Vec<BigUint>,
}

#[derive(Deserialize)]
struct RawPartition {
    sizes: Vec<String>,
}

impl TryFrom<RawPartition> for PartitionInstance {
    type Error = String;

    fn try_from(raw: RawPartition) -> Result<Self, String> {
        Ok(Self { sizes: raw.sizes.iter().map(|s| big_from_string(s)).collect::<Result<_, _>>()? })
    }
}

/// `Σ_{j ∈ cols} 2^(m-1-j)`: column 0 is the most significant bit.
pub fn bits_to_nat(cols: impl IntoIterator<Item = usize>, m: usize) -> BigUint {
    let mut x = BigUint::zero();
    for j in cols {
        x.set_bit((m - 1 - j) as u64, true);
    }
    x
}

/// Inverse of [`bits_to_nat`]; `None` if `x` needs more than `m` bits.
pub fn nat_to_bits(x: &BigUint, m: usize) -> Option<Vec<usize>> {
    if x.bits() > m as u64 {
        return None;
    }
    Some((0..m).filter(|&j| x.bit((m - 1 - j) as u64)).collect())
}

fn matrix_rows(s: &Structure, rel: &str) -> Result<Vec<BigUint>, ProblemError> {
    let r = s.relation(rel).filter(|_| s.vocabulary().arity(rel) == Some(2));
    let r = r.ok_or_else(|| ProblemError::MissingRelation(format!("binary relation {rel}")))?;
    let m = s.size();
    let mut sizes = vec![BigUint::zero(); m];
    for t in r {
        sizes[t[0]].set_bit((m - 1 - t[1]) as u64, true);
    }
    Ok(sizes)
}

/// Row `i` of `W` is the size of element `i`; `L` is the target.
pub fn decode_subsetsum(s: &Structure) -> Result<SubsetSumInstance, ProblemError> {
    let sizes = matrix_rows(s, "W")?;
    let l = s
        .relation("L")
        .filter(|_| s.vocabulary().arity("L") == Some(1))
        .ok_or_else(|| ProblemError::MissingRelation("unary relation L".into()))?;
    Ok(SubsetSumInstance { sizes, target: bits_to_nat(l.iter().map(|t| t[0]), s.size()) })
}

pub fn decode_partition(s: &Structure) -> Result<PartitionInstance, ProblemError> {
    Ok(PartitionInstance { sizes: matrix_rows(s, "T")? })
}

/// Writes sizes and target back into a size-`m` ⟨W,L⟩ structure.
pub fn encode_subsetsum(inst: &SubsetSumInstance, m: usize) -> Result<Structure, ProblemError> {
    if inst.sizes.len() > m {
        return Err(ProblemError::Unsupported(format!("{} elements exceed universe size {m}", inst.sizes.len())));
    }
    let too_wide = || ProblemError::Unsupported(format!("a number needs more than {m} bits"));
    let mut w = BTreeSet::new();
    for (i, x) in inst.sizes.iter().enumerate() {
        for j in nat_to_bits(x, m).ok_or_else(too_wide)? {
            w.insert(vec![i, j]);
        }
    }
    let l: BTreeSet<Vec<usize>> = nat_to_bits(&inst.target, m).ok_or_else(too_wide)?.into_iter().map(|j| vec![j]).collect();
    Ok(Structure::new(
        StructureParts::new(subsetsum_vocabulary(), m).with_relation("W", w).with_relation("L", l),
    )?)
}

/// Parses DIMACS CNF (`c` comments, one `p cnf V C` header, zero-terminated
/// clauses) and squares the result with [`normalize_to_square`].
pub fn parse_dimacs(text: &str) -> Result<Cnf3Instance, ProblemError> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses: Vec<Vec<Literal>> = Vec::new();
    let mut current: Vec<Literal> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line_no = ln + 1;
        let err = |msg: String| ProblemError::Dimacs { line: line_no, msg };
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') || trimmed.starts_with('%') {
            continue;
        }
        if trimmed.starts_with('p') {
            if header.is_some() {
                return Err(err("second header".into()));
            }
            let parts: Vec<&str> = trimmed.split_whitespace().collect();
            match parts.as_slice() {
                ["p", "cnf", v, c] => {
                    let v = v.parse().map_err(|_| err(format!("bad variable count `{v}`")))?;
                    let c = c.parse().map_err(|_| err(format!("bad clause count `{c}`")))?;
                    header = Some((v, c));
                }
                _ => return Err(err("expected `p cnf V C`".into())),
            }
            continue;
        }
        let Some((vars, _)) = header else {
            return Err(err("clause before header".into()));
        };
        for tok in trimmed.split_whitespace() {
            let x: i64 = tok.parse().map_err(|_| err(format!("bad literal `{tok}`")))?;
            if x == 0 {
                clauses.push(std::mem::take(&mut current));
                continue;
            }
            let var = x.unsigned_abs() as usize - 1;
            if var >= vars {
                return Err(err(format!("variable {} exceeds header count {vars}", x.unsigned_abs())));
            }
            current.push(Literal { var, neg: x < 0 });
        }
    }
    let (vars, count) = header.ok_or(ProblemError::Dimacs { line: 0, msg: "missing header".into() })?;
    if !current.is_empty() {
        return Err(ProblemError::Dimacs { line: text.lines().count(), msg: "last clause lacks terminating 0".into() });
    }
    if clauses.len() != count {
        return Err(ProblemError::Dimacs {
            line: 0,
            msg: format!("header declares {count} clauses, found {}", clauses.len()),
        });
    }
    let mut triples = Vec::with_capacity(clauses.len());
    for (i, c) in clauses.iter().enumerate() {
        let distinct: BTreeSet<Literal> = c.iter().copied().collect();
        if c.len() != 3 || distinct.len() != 3 {
            return Err(ProblemError::ClauseShape { clause: i, found: distinct.len() });
        }
        triples.push([c[0], c[1], c[2]]);
    }
    normalize_to_square(vars, triples)
}

/// The clause used to pad short instances: `x0 ∨ ¬x0 ∨ x1`, always true.
pub fn padding_clause() -> [Literal; 3] {
    [Literal::pos(0), Literal::neg(0), Literal::pos(1)]
}

/// Makes the clause count equal the variable count: short instances get
/// tautological padding clauses, long ones get unused fresh variables.
pub fn normalize_to_square(vars: usize, mut clauses: Vec<[Literal; 3]>) -> Result<Cnf3Instance, ProblemError> {
    if vars < 2 {
        return Err(ProblemError::Unsupported(format!("need at least 2 variables, have {vars}")));
    }
    let n = vars.max(clauses.len());
    while clauses.len() < n {
        clauses.push(padding_clause());
    }
    Cnf3Instance::new(n, clauses)
}

/// All three-literal clauses over `n` variables, ordered by literal code
/// `2·var + neg`.
fn clause_choices(n: usize) -> Vec<[Literal; 3]> {
    let lit = |code: usize| Literal { var: code / 2, neg: code % 2 == 1 };
    let mut out = Vec::new();
    for a in 0..2 * n {
        for b in a + 1..2 * n {
            for c in b + 1..2 * n {
                out.push([lit(a), lit(b), lit(c)]);
            }
        }
    }
    out
}

/// Every valid instance with `n` variables, in a fixed order: clause 0 is
/// the most significant digit of the index.
#[derive(Debug, Clone)]
pub struct Enumeration {
    n: usize,
    choices: Vec<[Literal; 3]>,
    total: usize,
}

impl Enumeration {
    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn instance_at(&self, index: usize) -> Cnf3Instance {
        assert!(index < self.total);
        let k = self.choices.len();
        let mut digits = vec![0; self.n];
        let mut r = index;
        for d in digits.iter_mut().rev() {
            *d = r % k;
            r /= k;
        }
        let clauses = digits.iter().map(|&d| self.choices[d]).collect();
        Cnf3Instance::new(self.n, clauses).expect("enumerated clauses are valid")
    }

    pub fn iter(&self) -> impl Iterator<Item = Cnf3Instance> + '_ {
        (0..self.total).map(|i| self.instance_at(i))
    }
}

/// Enumeration of all square instances for `n ∈ {2, 3}`.
pub fn enumerate_3sat(n: usize) -> Result<Enumeration, ProblemError> {
    if !(2..=3).contains(&n) {
        return Err(ProblemError::Unsupported(format!("enumeration supports n = 2 or 3, not {n}")));
    }
    let choices = clause_choices(n);
    let total = choices.len().pow(n as u32);
    Ok(Enumeration { n, choices, total })
}

/// Positions of the nonzero rows and columns of a ρ1 output, for an input of
/// size `n` (output size `n^4`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rho1Tags {
    pub n: usize,
}

impl Rho1Tags {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn m(&self) -> usize {
        self.n.pow(4)
    }

    fn at(&self, a: usize, b: usize, c: usize, d: usize) -> usize {
        rank(&[a, b, c, d], self.n).expect("tag within range")
    }

    /// Row chosen when `x_j` is true.
    pub fn y(&self, j: usize) -> usize {
        self.at(0, j, 1, self.n - 2)
    }

    /// Row chosen when `x_j` is false.
    pub fn z(&self, j: usize) -> usize {
        self.at(0, j, 1, self.n - 1)
    }

    pub fn g(&self, i: usize) -> usize {
        self.at(self.n - 1, i, 1, self.n - 2)
    }

    pub fn h(&self, i: usize) -> usize {
        self.at(self.n - 1, i, 1, self.n - 1)
    }

    pub fn var_col(&self, j: usize) -> usize {
        self.z(j)
    }

    pub fn clause_col(&self, i: usize) -> usize {
        self.h(i)
    }

    /// Columns of the target's 1 bits.
    pub fn target_cols(&self) -> BTreeSet<usize> {
        (0..self.n).flat_map(|k| [self.var_col(k), self.clause_col(k), self.g(k)]).collect()
    }
}

/// Rows of the ρ2 output for an input of size `m` (output size `m^2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rho2Tags {
    pub m: usize,
}

impl Rho2Tags {
    pub fn new(m: usize) -> Self {
        Self { m }
    }

    /// Row holding the copy of element `i`.
    pub fn copy_row(&self, i: usize) -> usize {
        i * self.m
    }

    pub fn copy_col(&self, j: usize) -> usize {
        j * self.m + 4
    }

    pub fn b1(&self) -> usize {
        1
    }

    pub fn b2(&self) -> usize {
        self.m + 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageCheck {
    pub label: char,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Result of [`is_rho1_image_form`]. These properties are what the
/// SUBSET-SUM → PARTITION correctness argument uses; they are not claimed to
/// characterize the image exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageFormReport {
    pub checks: Vec<ImageCheck>,
}

impl ImageFormReport {
    pub fn holds(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<char> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.label).collect()
    }
}

impl fmt::Display for ImageFormReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "image-form heuristic: {}", if self.holds() { "holds" } else { "fails" })?;
        for c in &self.checks {
            writeln!(f, "  ({}) {}: {}{}", c.label, c.name, if c.passed { "ok" } else { "FAILED" },
                if c.detail.is_empty() { String::new() } else { format!(" — {}", c.detail) })?;
        }
        Ok(())
    }
}

fn integer_fourth_root(m: usize) -> Option<usize> {
    (2..).take_while(|q: &usize| q.pow(4) <= m).find(|q| q.pow(4) == m)
}

/// Image-form heuristic for ⟨W,L⟩ structures: (a) column `k` is nonzero iff
/// `W(k,k)`; (b) `m = q^4`, `q ≥ 2`; (c) `L` is exactly the target pattern for
/// `q`; (d) variable columns hold two 1s and clause columns five, no other
/// column is nonzero; (e) consecutive nonzero columns have ≥ 3 zero columns
/// between them.
pub fn is_rho1_image_form(s: &Structure) -> ImageFormReport {
    let mut checks = Vec::new();
    let mut push = |label, name, passed, detail: String| checks.push(ImageCheck { label, name, passed, detail });
    let (Some(w), Some(l)) = (s.relation("W"), s.relation("L")) else {
        for (label, name) in CHECK_NAMES {
            push(label, name, false, "structure lacks W or L".into());
        }
        return ImageFormReport { checks };
    };
    let m = s.size();
    let mut col_count = vec![0usize; m];
    for t in w {
        col_count[t[1]] += 1;
    }
    let nonzero: Vec<usize> = (0..m).filter(|&k| col_count[k] > 0).collect();

    let bad_diag: Vec<usize> =
        (0..m).filter(|&k| (col_count[k] > 0) != w.contains(&vec![k, k])).collect();
    push('a', CHECK_NAMES[0].1, bad_diag.is_empty(), detail_list("columns", &bad_diag));

    let q = integer_fourth_root(m);
    push('b', CHECK_NAMES[1].1, q.is_some(), if q.is_some() { String::new() } else { format!("m = {m}") });

    match q {
        Some(q) => {
            let tags = Rho1Tags::new(q);
            let got: BTreeSet<usize> = l.iter().map(|t| t[0]).collect();
            let want = tags.target_cols();
            push('c', CHECK_NAMES[2].1, got == want, if got == want { String::new() } else { format!("L = {got:?}, expected {want:?}") });
            let mut bad = Vec::new();
            for (k, &count) in col_count.iter().enumerate() {
                let expect = if (0..q).any(|j| tags.var_col(j) == k) {
                    2
                } else if (0..q).any(|i| tags.clause_col(i) == k) {
                    5
                } else {
                    0
                };
                if count != expect {
                    bad.push(k);
                }
            }
            push('d', CHECK_NAMES[3].1, bad.is_empty(), detail_list("columns", &bad));
        }
        None => {
            push('c', CHECK_NAMES[2].1, false, "requires (b)".into());
            push('d', CHECK_NAMES[3].1, false, "requires (b)".into());
        }
    }

    let tight: Vec<usize> = nonzero.windows(2).filter(|p| p[1] - p[0] < 4).map(|p| p[1]).collect();
    push('e', CHECK_NAMES[4].1, tight.is_empty(), detail_list("columns", &tight));
    ImageFormReport { checks }
}

const CHECK_NAMES: [(char, &str); 5] = [
    ('a', "nonzero columns match the diagonal"),
    ('b', "size is a fourth power"),
    ('c', "target bits match the numeric pattern"),
    ('d', "column sums are 2 (variables) and 5 (clauses)"),
    ('e', "at least three zero columns between nonzero ones"),
];

fn detail_list(what: &str, xs: &[usize]) -> String {
    if xs.is_empty() {
        String::new()
    } else {
        format!("{what} {xs:?}")
    }
}
