//! End-to-end checks of the 3SAT → SUBSET-SUM → PARTITION chain on single
//! instances: oracle verdicts, digit identities, witness transport and the
//! b1/b2 separation property.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::Zero;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::oracles::{
    solve_3sat, solve_partition, solve_subsetsum, transport_3sat_to_subsetsum, transport_partition_to_subsetsum,
    transport_subsetsum_to_3sat, transport_subsetsum_to_partition, Budget, OracleError, SubsetWitness,
};
use crate::problems::{
    decode_partition, decode_subsetsum, encode_3sat, Cnf3Instance, PartitionInstance, ProblemError, Rho1Tags, Rho2Tags,
};
use crate::reductions::{apply_reduction, BuiltinDefs, ReductionError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Oracle(#[from] OracleError),
    #[error("{0}")]
    Reduction(#[from] ReductionError),
    #[error("{0}")]
    Problem(#[from] ProblemError),
    #[error("unknown stage `{0}` (expected rho1 or full)")]
    Stage(String),
}

/// How far down the chain an instance is pushed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Rho1,
    Full,
}

impl FromStr for Stage {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rho1" => Ok(Stage::Rho1),
            "full" => Ok(Stage::Full),
            _ => Err(HarnessError::Stage(s.to_string())),
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Rho1 => "rho1",
            Stage::Full => "full",
        })
    }
}

/// Digits of a number over the given units, most significant first, or
/// `None` if it is not a combination of them with small digits.
pub fn digits_over(x: &BigUint, units: &[BigUint]) -> Option<Vec<u32>> {
    let mut rest = x.clone();
    let mut out = Vec::with_capacity(units.len());
    for u in units {
        let d = &rest / u;
        rest -= &d * u;
        out.push(u32::try_from(&d).ok().filter(|&d| d < 10)?);
    }
    rest.is_zero().then_some(out)
}

fn digit_string(d: &[u32]) -> String {
    d.iter().map(|x| char::from_digit(*x, 10).unwrap()).collect()
}

fn pattern(n: usize, hi: u32, lo: u32) -> String {
    digit_string(&[vec![hi; n], vec![lo; n]].concat())
}

/// Digit strings over the target columns (variable columns first).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Digits {
    pub target: String,
    pub row_sum: String,
    pub b1: Option<String>,
    pub b2: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceOutcome {
    pub index: usize,
    pub satisfiable: bool,
    pub subsetsum: bool,
    pub partition: Option<bool>,
    pub target: BigUint,
    pub digits: Digits,
    /// Transport operations run and verified.
    pub transports: usize,
    /// Balanced partitions whose b1/b2 placement was inspected.
    pub partitions_checked: usize,
    pub discrepancies: Vec<String>,
}

impl InstanceOutcome {
    pub fn agrees(&self) -> bool {
        self.discrepancies.is_empty()
    }
}

/// Runs one square 3SAT instance through the chain up to `stage`.
pub fn check_instance(
    index: usize,
    inst: &Cnf3Instance,
    defs: &BuiltinDefs,
    stage: Stage,
    budget: Budget,
) -> Result<InstanceOutcome, HarnessError> {
    let n = inst.n();
    let mut bad = Vec::new();
    let s = encode_3sat(inst);
    let sat = solve_3sat(&s, budget)?;
    if sat.as_ref().is_some_and(|a| !inst.satisfied_by(&a.bits)) {
        bad.push("3SAT oracle returned a non-satisfying assignment".to_string());
    }

    let s1 = apply_reduction(&defs.rho1, &s)?;
    let ss = decode_subsetsum(&s1)?;
    let ss_witness = solve_subsetsum(&ss, budget)?;
    if sat.is_some() != ss_witness.is_some() {
        bad.push(format!("3SAT says {}, SUBSET-SUM says {}", sat.is_some(), ss_witness.is_some()));
    }

    let tags = Rho1Tags::new(n);
    let m = tags.m();
    let cols: Vec<usize> = (0..n).map(|j| tags.var_col(j)).chain((0..n).map(|i| tags.clause_col(i))).collect();
    let unit = |c: usize| BigUint::from(1u8) << (m - 1 - c);
    let units: Vec<BigUint> = cols.iter().map(|&c| unit(c)).collect();
    let row_sum: BigUint = ss.sizes.iter().sum();
    let mut digits = Digits::default();
    check_digits("t", &ss.target, &units, &pattern(n, 1, 3), &mut digits.target, &mut bad);
    check_digits("sum of sizes", &row_sum, &units, &pattern(n, 2, 5), &mut digits.row_sum, &mut bad);

    let mut transports = 0;
    if let (Some(a), Some(w)) = (&sat, &ss_witness) {
        match transport_3sat_to_subsetsum(a, &s1) {
            Ok(_) => transports += 1,
            Err(e) => bad.push(format!("3SAT→SUBSET-SUM transport: {e}")),
        }
        match transport_subsetsum_to_3sat(w, &s, &s1) {
            Ok(_) => transports += 1,
            Err(e) => bad.push(format!("SUBSET-SUM→3SAT transport: {e}")),
        }
    }

    let mut partition = None;
    let mut partitions_checked = 0;
    if stage == Stage::Full {
        let s2 = apply_reduction(&defs.rho2, &s1)?;
        let part = decode_partition(&s2)?;
        let p_witness = solve_partition(&part, budget)?;
        partition = Some(p_witness.is_some());
        if ss_witness.is_some() != p_witness.is_some() {
            bad.push(format!("SUBSET-SUM says {}, PARTITION says {}", ss_witness.is_some(), p_witness.is_some()));
        }

        let t2 = Rho2Tags::new(m);
        let big = m * m;
        let unit2 = |c: usize| BigUint::from(1u8) << (big - 1 - (c * m + 4));
        for (i, x) in ss.sizes.iter().enumerate() {
            let shifted: BigUint = (0..m).filter(|&j| x.bit((m - 1 - j) as u64)).map(unit2).sum();
            if part.sizes[t2.copy_row(i)] != shifted {
                bad.push(format!("copy row of element {i} is not its size shifted into column offset 4"));
            }
        }
        let sigma: BigUint = (0..m).map(|i| &part.sizes[t2.copy_row(i)]).sum();
        // t re-expressed with the same digits in the wider columns.
        let units2: Vec<BigUint> = cols.iter().map(|&c| unit2(c)).collect();
        let t_digits = digits_over(&ss.target, &units).unwrap_or_default();
        let t_shift: BigUint = t_digits.iter().zip(&units2).map(|(&d, u)| u * d).sum();
        let (b1, b2) = (&part.sizes[t2.b1()], &part.sizes[t2.b2()]);
        if *b1 != &sigma * 2u32 - &t_shift {
            bad.push("b1 ≠ 2Σ − t".into());
        }
        if *b2 != &sigma + &t_shift {
            bad.push("b2 ≠ Σ + t".into());
        }
        let (mut d1, mut d2) = (String::new(), String::new());
        check_digits("b1", b1, &units2, &pattern(n, 3, 7), &mut d1, &mut bad);
        check_digits("b2", b2, &units2, &pattern(n, 3, 8), &mut d2, &mut bad);
        digits.b1 = Some(d1);
        digits.b2 = Some(d2);

        if let Some(w) = &ss_witness {
            match transport_subsetsum_to_partition(w, &s2) {
                Ok(_) => transports += 1,
                Err(e) => bad.push(format!("SUBSET-SUM→PARTITION transport: {e}")),
            }
        }
        if let Some(p) = &p_witness {
            match transport_partition_to_subsetsum(p, &s2, &s1) {
                Ok(_) => transports += 1,
                Err(e) => bad.push(format!("PARTITION→SUBSET-SUM transport: {e}")),
            }
        }
        if p_witness.is_some() {
            let sides = balanced_sides(&part, budget)?;
            for side in &sides {
                if side.ids.contains(&t2.b1()) == side.ids.contains(&t2.b2()) {
                    bad.push(format!("b1 and b2 share the balanced side {:?}", side.ids));
                    break;
                }
            }
            partitions_checked = sides.len();
        }
    }

    Ok(InstanceOutcome {
        index,
        satisfiable: sat.is_some(),
        subsetsum: ss_witness.is_some(),
        partition,
        target: ss.target,
        digits,
        transports,
        partitions_checked,
        discrepancies: bad,
    })
}

fn check_digits(what: &str, x: &BigUint, units: &[BigUint], want: &str, out: &mut String, bad: &mut Vec<String>) {
    match digits_over(x, units) {
        Some(d) => {
            *out = digit_string(&d);
            if out != want {
                bad.push(format!("{what} has digits {out}, expected {want}"));
            }
        }
        None => bad.push(format!("{what} is not a digit combination of the target columns")),
    }
}

/// Every subset of the nonzero elements summing to half the total, each
/// partition listed once per side.
pub fn balanced_sides(inst: &PartitionInstance, budget: Budget) -> Result<Vec<SubsetWitness>, OracleError> {
    let ids: Vec<usize> = (0..inst.sizes.len()).filter(|&i| !inst.sizes[i].is_zero()).collect();
    if ids.len() > budget.max_items {
        return Err(OracleError::Budget { nonzero: ids.len(), cap: budget.max_items });
    }
    let total: BigUint = inst.sizes.iter().sum();
    if total.bit(0) {
        return Ok(Vec::new());
    }
    let half = total >> 1u32;
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    collect_sides(&ids, &inst.sizes, &half, 0, &mut BigUint::zero(), &mut chosen, &mut out);
    Ok(out)
}

fn collect_sides(
    ids: &[usize],
    sizes: &[BigUint],
    half: &BigUint,
    k: usize,
    sum: &mut BigUint,
    chosen: &mut Vec<usize>,
    out: &mut Vec<SubsetWitness>,
) {
    if k == ids.len() {
        if sum == half {
            out.push(SubsetWitness::new(chosen.iter().copied()));
        }
        return;
    }
    collect_sides(ids, sizes, half, k + 1, sum, chosen, out);
    *sum += &sizes[ids[k]];
    if &*sum <= half {
        chosen.push(ids[k]);
        collect_sides(ids, sizes, half, k + 1, sum, chosen, out);
        chosen.pop();
    }
    *sum -= &sizes[ids[k]];
}

/// `k` distinct indices below `total`, sorted, from a fixed seed.
pub fn sample_indices(total: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = sample(&mut rng, total, k.min(total)).into_vec();
    v.sort_unstable();
    v
}

/// Aggregate over a batch of outcomes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Summary {
    pub instances: usize,
    pub agree: usize,
    pub satisfiable: usize,
    pub transports: usize,
    pub partitions_checked: usize,
    pub targets: BTreeSet<BigUint>,
    pub first_discrepancy: Option<(usize, String)>,
}

impl Summary {
    pub fn add(&mut self, o: &InstanceOutcome) {
        self.instances += 1;
        self.agree += o.agrees() as usize;
        self.satisfiable += o.satisfiable as usize;
        self.transports += o.transports;
        self.partitions_checked += o.partitions_checked;
        self.targets.insert(o.target.clone());
        if self.first_discrepancy.is_none() {
            if let Some(d) = o.discrepancies.first() {
                self.first_discrepancy = Some((o.index, d.clone()));
            }
        }
    }

    pub fn ok(&self) -> bool {
        self.agree == self.instances && self.targets.len() <= 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{enumerate_3sat, Literal};
    use crate::reductions::builtin_defs;

    #[test]
    fn i2_full_chain() {
        let i2 = Cnf3Instance::new(
            2,
            vec![[Literal::pos(0), Literal::neg(0), Literal::pos(1)], [Literal::pos(0), Literal::pos(1), Literal::neg(1)]],
        )
        .unwrap();
        let o = check_instance(0, &i2, &builtin_defs(), Stage::Full, Budget::default()).unwrap();
        assert!(o.agrees(), "{:?}", o.discrepancies);
        assert_eq!(o.target, BigUint::from(4403u32));
        assert_eq!(o.digits.target, "1133");
        assert_eq!(o.digits.row_sum, "2255");
        assert_eq!(o.digits.b1.as_deref(), Some("3377"));
        assert_eq!(o.digits.b2.as_deref(), Some("3388"));
        assert_eq!(o.transports, 4);
        assert!(o.partitions_checked >= 2 && o.partitions_checked.is_multiple_of(2));
    }

    #[test]
    fn digits_reject_stray_bits() {
        let units = [BigUint::from(16u8), BigUint::from(1u8)];
        assert_eq!(digits_over(&BigUint::from(35u8), &units), Some(vec![2, 3]));
        assert_eq!(digits_over(&BigUint::from(16u8 * 12), &units), None);
    }

    #[test]
    fn balanced_sides_lists_both() {
        let p = PartitionInstance { sizes: [1u8, 2, 3, 0].iter().map(|&x| BigUint::from(x)).collect() };
        let sides: Vec<_> = balanced_sides(&p, Budget::default()).unwrap().into_iter().map(|w| w.ids).collect();
        assert_eq!(sides, vec![BTreeSet::from([2]), BTreeSet::from([0, 1])]);
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_indices(8000, 200, 42);
        assert_eq!(a, sample_indices(8000, 200, 42));
        assert_eq!(a.len(), 200);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(enumerate_3sat(3).unwrap().len(), 8000);
    }
}
