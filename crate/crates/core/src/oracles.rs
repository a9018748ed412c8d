//! Brute-force solvers and witness transport along the reduction chain.
//!
//! All solvers are deliberately naive and deterministic: the witness returned
//! is always the one with the numerically smallest bitmask.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::Zero;
use serde_json::{json, Value};
use thiserror::Error;

use crate::fologic::{parse_formula, Compiled, Formula, FormulaError};
use crate::problems::{
    decode_partition, decode_sat, decode_subsetsum, Literal, PartitionInstance, ProblemError, Rho1Tags, Rho2Tags,
    SubsetSumInstance,
};
use crate::structures::{Structure, StructureError};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{nonzero} nonzero elements exceed the enumeration budget of {cap}")]
    Budget { nonzero: usize, cap: usize },
    #[error("transport failed: {0}")]
    Transport(String),
    #[error("{0}")]
    Problem(#[from] ProblemError),
    #[error("{0}")]
    Formula(#[from] FormulaError),
    #[error("{0}")]
    Structure(#[from] StructureError),
}

/// Env var overriding the subset enumeration cap.
pub const BUDGET_ENV: &str = "FOPFORGE_BUDGET";

/// Cap on the number of items a brute-force search enumerates subsets of.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub max_items: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Self { max_items: 30 }
    }
}

impl Budget {
    pub fn new(max_items: usize) -> Self {
        Self { max_items }
    }

    /// The default, unless `FOPFORGE_BUDGET` holds a number.
    pub fn from_env() -> Self {
        std::env::var(BUDGET_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .map(Self::new)
            .unwrap_or_default()
    }

    fn check(&self, items: usize) -> Result<(), OracleError> {
        if items > self.max_items {
            Err(OracleError::Budget { nonzero: items, cap: self.max_items })
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    pub bits: Vec<bool>,
}

impl Assignment {
    /// Bit `j` of `mask` is the value of `x_j`.
    pub fn from_mask(mask: u64, n: usize) -> Self {
        Self { bits: (0..n).map(|j| mask >> j & 1 == 1).collect() }
    }

    pub fn mask(&self) -> u64 {
        self.bits.iter().enumerate().map(|(j, &b)| (b as u64) << j).sum()
    }

    pub fn to_json(&self) -> Value {
        json!({"kind": "assignment", "bits": self.bits.iter().map(|&b| b as u8).collect::<Vec<_>>()})
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SubsetWitness {
    pub ids: BTreeSet<usize>,
}

impl SubsetWitness {
    pub fn new(ids: impl IntoIterator<Item = usize>) -> Self {
        Self { ids: ids.into_iter().collect() }
    }

    pub fn to_json(&self) -> Value {
        json!({"kind": "subset", "ids": self.ids})
    }
}

/// Σ_{i∈ids} sizes[i]; ids outside the instance make the sum undefined.
pub fn subset_total(sizes: &[BigUint], ids: &BTreeSet<usize>) -> Option<BigUint> {
    let mut acc = BigUint::zero();
    for &i in ids {
        acc += sizes.get(i)?;
    }
    Some(acc)
}

pub fn verify_subsetsum(inst: &SubsetSumInstance, w: &SubsetWitness) -> bool {
    subset_total(&inst.sizes, &w.ids).is_some_and(|s| s == inst.target)
}

/// `w` and its complement have equal sums.
pub fn verify_partition(inst: &PartitionInstance, w: &SubsetWitness) -> bool {
    let total: BigUint = inst.sizes.iter().sum();
    subset_total(&inst.sizes, &w.ids).is_some_and(|s| s * 2u32 == total)
}

/// The matrix of Φ_SAT under a unary `S` holding the true variables.
pub const PHI_SAT_MATRIX: &str = "A x . E y . S(y) & P(y,x) | !S(y) & N(y,x)";

/// Decides a ⟨P,N⟩ structure by trying every `S ⊆ {0..n-1}` in increasing
/// bitmask order against the first-order matrix of Φ_SAT.
pub fn solve_3sat(s: &Structure, budget: Budget) -> Result<Option<Assignment>, OracleError> {
    let n = s.size();
    budget.check(n)?;
    let probe = s.with_extra_relation("S", 1, BTreeSet::new())?;
    let matrix: Formula = parse_formula(PHI_SAT_MATRIX, probe.vocabulary())?;
    let compiled = Compiled::new(&matrix, &[], probe.vocabulary())?;
    let mut env = vec![0; compiled.slots()];
    let clauses = decode_sat(s)?;
    for mask in 0..1u64 << n {
        let chosen = (0..n).filter(|j| mask >> j & 1 == 1).map(|j| vec![j]).collect();
        let with_s = s.with_extra_relation("S", 1, chosen)?;
        if compiled.eval(&with_s, &mut env) {
            let a = Assignment::from_mask(mask, n);
            if !clauses_hold(&clauses, &a.bits) {
                return Err(OracleError::Transport(format!(
                    "evaluator accepted assignment {mask:#b} that leaves a clause false"
                )));
            }
            return Ok(Some(a));
        }
    }
    Ok(None)
}

fn clauses_hold(clauses: &[Vec<Literal>], bits: &[bool]) -> bool {
    clauses.iter().all(|c| c.iter().any(|l| l.holds(bits)))
}

/// Independent clause-by-clause brute force, same enumeration order as
/// [`solve_3sat`].
pub fn brute_force_cnf(n: usize, clauses: &[Vec<Literal>]) -> Option<Assignment> {
    (0..1u64 << n).map(|mask| Assignment::from_mask(mask, n)).find(|a| clauses_hold(clauses, &a.bits))
}

/// Smallest-bitmask subset of the nonzero elements of `sizes` summing to
/// `target`, with bit `i` of the mask standing for the `i`-th nonzero id.
fn smallest_subset(sizes: &[BigUint], target: &BigUint, budget: Budget) -> Result<Option<BTreeSet<usize>>, OracleError> {
    let ids: Vec<usize> = (0..sizes.len()).filter(|&i| !sizes[i].is_zero()).collect();
    budget.check(ids.len())?;
    // low[i] = sum of the first i nonzero sizes, i.e. everything still
    // undecided once indices >= i are fixed.
    let mut low = vec![BigUint::zero()];
    for &i in &ids {
        let next = low.last().unwrap() + &sizes[i];
        low.push(next);
    }
    if &low[ids.len()] < target {
        return Ok(None);
    }
    let mut chosen = vec![false; ids.len()];
    let mut sum = BigUint::zero();
    if dfs(ids.len(), &ids, sizes, target, &low, &mut sum, &mut chosen) {
        Ok(Some(ids.iter().zip(&chosen).filter(|(_, &c)| c).map(|(&i, _)| i).collect()))
    } else {
        Ok(None)
    }
}

/// Decides index `k-1` next, excluding before including, so the first hit
/// has the smallest mask.
fn dfs(
    k: usize,
    ids: &[usize],
    sizes: &[BigUint],
    target: &BigUint,
    low: &[BigUint],
    sum: &mut BigUint,
    chosen: &mut [bool],
) -> bool {
    if &*sum == target {
        return true;
    }
    if k == 0 || &*sum + &low[k] < *target {
        return false;
    }
    let i = k - 1;
    if dfs(i, ids, sizes, target, low, sum, chosen) {
        return true;
    }
    let x = &sizes[ids[i]];
    *sum += x;
    if &*sum <= target {
        chosen[i] = true;
        if dfs(i, ids, sizes, target, low, sum, chosen) {
            return true;
        }
        chosen[i] = false;
    }
    *sum -= x;
    false
}

pub fn solve_subsetsum(inst: &SubsetSumInstance, budget: Budget) -> Result<Option<SubsetWitness>, OracleError> {
    Ok(smallest_subset(&inst.sizes, &inst.target, budget)?.map(|ids| SubsetWitness { ids }))
}

pub fn solve_partition(inst: &PartitionInstance, budget: Budget) -> Result<Option<SubsetWitness>, OracleError> {
    let total: BigUint = inst.sizes.iter().sum();
    if total.bit(0) {
        return Ok(None);
    }
    let half = total >> 1u32;
    Ok(smallest_subset(&inst.sizes, &half, budget)?.map(|ids| SubsetWitness { ids }))
}

fn rho1_tags(s_out: &Structure) -> Result<Rho1Tags, OracleError> {
    let m = s_out.size();
    let n = (2..).take_while(|q: &usize| q.pow(4) <= m).find(|q| q.pow(4) == m);
    n.map(Rho1Tags::new).ok_or_else(|| OracleError::Transport(format!("size {m} is not a fourth power")))
}

/// Builds B′ from a satisfying assignment: `y_j` or `z_j` per variable, then
/// `g_i` (and if needed `h_i`) to lift every clause column to 3.
pub fn transport_3sat_to_subsetsum(a: &Assignment, s_out: &Structure) -> Result<SubsetWitness, OracleError> {
    let tags = rho1_tags(s_out)?;
    if a.bits.len() != tags.n {
        return Err(OracleError::Transport(format!("assignment has {} bits, instance has {} variables", a.bits.len(), tags.n)));
    }
    let w = s_out.relation("W").ok_or_else(|| OracleError::Transport("no W relation".into()))?;
    let mut ids: BTreeSet<usize> =
        (0..tags.n).map(|j| if a.bits[j] { tags.y(j) } else { tags.z(j) }).collect();
    for i in 0..tags.n {
        let col = tags.clause_col(i);
        let digit = ids.iter().filter(|&&r| w.contains(&vec![r, col])).count();
        match digit {
            0 => return Err(OracleError::Transport(format!("clause {i} is not satisfied"))),
            1 => ids.extend([tags.g(i), tags.h(i)]),
            2 => {
                ids.insert(tags.g(i));
            }
            3 => {}
            d => return Err(OracleError::Transport(format!("clause column {i} has digit {d}"))),
        }
    }
    let witness = SubsetWitness { ids };
    if !verify_subsetsum(&decode_subsetsum(s_out)?, &witness) {
        return Err(OracleError::Transport("constructed subset misses the target".into()));
    }
    Ok(witness)
}

/// `x_j` is true iff `y_j ∈ B′`.
pub fn transport_subsetsum_to_3sat(
    w: &SubsetWitness,
    s_in: &Structure,
    s_out: &Structure,
) -> Result<Assignment, OracleError> {
    if !verify_subsetsum(&decode_subsetsum(s_out)?, w) {
        return Err(OracleError::Transport("subset does not sum to the target".into()));
    }
    let tags = rho1_tags(s_out)?;
    if tags.n != s_in.size() {
        return Err(OracleError::Transport("input and output sizes do not correspond".into()));
    }
    let a = Assignment { bits: (0..tags.n).map(|j| w.ids.contains(&tags.y(j))).collect() };
    if !clauses_hold(&decode_sat(s_in)?, &a.bits) {
        return Err(OracleError::Transport("pulled-back assignment leaves a clause false".into()));
    }
    Ok(a)
}

fn rho2_tags(t: &Structure) -> Result<Rho2Tags, OracleError> {
    let big = t.size();
    let m = (2..).take_while(|q: &usize| q * q <= big).find(|q| q * q == big);
    m.map(Rho2Tags::new).ok_or_else(|| OracleError::Transport(format!("size {big} is not a square")))
}

/// `A′ = F(E ∩ B′) ∪ {b1}`, where `F` sends a nonzero element to its copy row.
pub fn transport_subsetsum_to_partition(w: &SubsetWitness, t_struct: &Structure) -> Result<SubsetWitness, OracleError> {
    let tags = rho2_tags(t_struct)?;
    let inst = decode_partition(t_struct)?;
    let mut ids = BTreeSet::from([tags.b1()]);
    for &i in &w.ids {
        if i >= tags.m {
            return Err(OracleError::Transport(format!("element {i} outside the input universe")));
        }
        let row = tags.copy_row(i);
        if !inst.sizes[row].is_zero() {
            ids.insert(row);
        }
    }
    let witness = SubsetWitness { ids };
    if !verify_partition(&inst, &witness) {
        return Err(OracleError::Transport("constructed side is not balanced".into()));
    }
    Ok(witness)
}

/// `B′ = F⁻¹(A′ ∖ {b1})` for the side `A′` holding `b1`.
pub fn transport_partition_to_subsetsum(
    w: &SubsetWitness,
    t_struct: &Structure,
    s_in: &Structure,
) -> Result<SubsetWitness, OracleError> {
    let tags = rho2_tags(t_struct)?;
    let inst = decode_partition(t_struct)?;
    if !verify_partition(&inst, w) {
        return Err(OracleError::Transport("the given side is not balanced".into()));
    }
    let (b1, b2) = (tags.b1(), tags.b2());
    if w.ids.contains(&b1) == w.ids.contains(&b2) {
        return Err(OracleError::Transport("b1 and b2 lie on the same side of a balanced partition".into()));
    }
    let side: BTreeSet<usize> = if w.ids.contains(&b1) {
        w.ids.clone()
    } else {
        (0..inst.sizes.len()).filter(|i| !inst.sizes[*i].is_zero() && !w.ids.contains(i)).collect()
    };
    let mut ids = BTreeSet::new();
    for &r in side.iter().filter(|&&r| r != b1) {
        if inst.sizes[r].is_zero() {
            continue;
        }
        if r % tags.m != 0 {
            return Err(OracleError::Transport(format!("row {r} is not a copy row")));
        }
        ids.insert(r / tags.m);
    }
    let witness = SubsetWitness { ids };
    if !verify_subsetsum(&decode_subsetsum(s_in)?, &witness) {
        return Err(OracleError::Transport("pulled-back subset misses the target".into()));
    }
    Ok(witness)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{encode_3sat, sat_vocabulary, Cnf3Instance};
    use crate::reductions::{apply_reduction, builtin_defs};
    use crate::structures::StructureParts;

    fn i2() -> Structure {
        encode_3sat(
            &Cnf3Instance::new(
                2,
                vec![
                    [Literal::pos(0), Literal::neg(0), Literal::pos(1)],
                    [Literal::pos(0), Literal::pos(1), Literal::neg(1)],
                ],
            )
            .unwrap(),
        )
    }

    fn nat(x: u32) -> BigUint {
        BigUint::from(x)
    }

    #[test]
    fn sat_examples() {
        let b = Budget::default();
        assert_eq!(solve_3sat(&i2(), b).unwrap(), Some(Assignment { bits: vec![false, false] }));
        let all: Vec<Vec<usize>> = (0..3).flat_map(|j| (0..3).map(move |i| vec![j, i])).collect();
        let full = Structure::new(StructureParts::new(sat_vocabulary(), 3).with_relation("P", all)).unwrap();
        // All-true satisfies it; the smallest mask already does (x0 alone).
        assert!(clauses_hold(&decode_sat(&full).unwrap(), &[true; 3]));
        assert_eq!(solve_3sat(&full, b).unwrap(), Some(Assignment { bits: vec![true, false, false] }));
        let empty = Structure::empty(sat_vocabulary(), 3).unwrap();
        assert_eq!(solve_3sat(&empty, b).unwrap(), None);
        assert!(matches!(solve_3sat(&empty, Budget::new(2)), Err(OracleError::Budget { .. })));
    }

    #[test]
    fn subsetsum_examples() {
        let b = Budget::default();
        let empty = SubsetSumInstance { sizes: vec![], target: nat(0) };
        assert_eq!(solve_subsetsum(&empty, b).unwrap(), Some(SubsetWitness::default()));
        let one = SubsetSumInstance { sizes: vec![nat(1)], target: nat(2) };
        assert_eq!(solve_subsetsum(&one, b).unwrap(), None);
        let many = SubsetSumInstance { sizes: (1..=40).map(nat).collect(), target: nat(3) };
        assert!(matches!(solve_subsetsum(&many, b), Err(OracleError::Budget { nonzero: 40, cap: 30 })));
        // Smallest mask: {0,1} (mask 3) beats {2} (mask 4).
        let tie = SubsetSumInstance { sizes: vec![nat(1), nat(2), nat(3)], target: nat(3) };
        assert_eq!(solve_subsetsum(&tie, b).unwrap(), Some(SubsetWitness::new([0, 1])));
    }

    #[test]
    fn partition_examples() {
        let b = Budget::default();
        let even = PartitionInstance { sizes: vec![nat(1), nat(1)] };
        assert_eq!(solve_partition(&even, b).unwrap(), Some(SubsetWitness::new([0])));
        let odd = PartitionInstance { sizes: vec![nat(1), nat(2)] };
        assert_eq!(solve_partition(&odd, b).unwrap(), None);
    }

    #[test]
    fn i2_chain_and_transports() {
        let defs = builtin_defs();
        let s1 = apply_reduction(&defs.rho1, &i2()).unwrap();
        let ss = decode_subsetsum(&s1).unwrap();
        let w = solve_subsetsum(&ss, Budget::default()).unwrap().unwrap();
        assert_eq!(w, SubsetWitness::new([2, 6, 10, 14]));

        let yes = Assignment { bits: vec![true, true] };
        assert_eq!(transport_3sat_to_subsetsum(&yes, &s1).unwrap(), SubsetWitness::new([2, 6, 10, 14]));
        let no = Assignment { bits: vec![false, false] };
        assert_eq!(transport_3sat_to_subsetsum(&no, &s1).unwrap(), SubsetWitness::new([3, 7, 10, 11, 14, 15]));
        assert_eq!(transport_subsetsum_to_3sat(&w, &i2(), &s1).unwrap(), yes);
        let zs = SubsetWitness::new([3, 7, 10, 11, 14, 15]);
        assert_eq!(transport_subsetsum_to_3sat(&zs, &i2(), &s1).unwrap(), no);
        assert!(transport_subsetsum_to_3sat(&SubsetWitness::new([2]), &i2(), &s1).is_err());

        let s2 = apply_reduction(&defs.rho2, &s1).unwrap();
        let a = transport_subsetsum_to_partition(&w, &s2).unwrap();
        assert_eq!(a, SubsetWitness::new([1, 32, 96, 160, 224]));
        assert_eq!(transport_partition_to_subsetsum(&a, &s2, &s1).unwrap(), w);
        let inst = decode_partition(&s2).unwrap();
        let other: BTreeSet<usize> =
            (0..inst.sizes.len()).filter(|&i| !inst.sizes[i].is_zero() && !a.ids.contains(&i)).collect();
        assert!(other.contains(&17));
        assert_eq!(transport_partition_to_subsetsum(&SubsetWitness { ids: other }, &s2, &s1).unwrap(), w);
        assert!(transport_partition_to_subsetsum(&SubsetWitness::new([1]), &s2, &s1).is_err());
        assert!(solve_partition(&inst, Budget::default()).unwrap().is_some());
    }

    #[test]
    fn unsatisfying_assignment_cannot_be_transported() {
        let defs = builtin_defs();
        // Clause 1 is the single literal x0.
        let s = crate::problems::encode_sat_permissive(2, &[vec![Literal::pos(0), Literal::neg(0), Literal::pos(1)], vec![Literal::pos(0)]]).unwrap();
        let out = apply_reduction(&defs.rho1, &s).unwrap();
        let bad = Assignment { bits: vec![false, true] };
        assert!(matches!(transport_3sat_to_subsetsum(&bad, &out), Err(OracleError::Transport(_))));
    }
}
