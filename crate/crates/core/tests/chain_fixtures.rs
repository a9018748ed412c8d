//! Frozen fixtures for the two-clause instance I2 = (x0 ∨ ¬x0 ∨ x1) ∧ (x0 ∨ x1 ∨ ¬x1)
//! and chain behaviour on inputs outside 3CNF.

use std::collections::BTreeSet;

use fopforge::harness::{check_instance, Stage};
use fopforge::oracles::{solve_3sat, solve_partition, solve_subsetsum, Budget};
use fopforge::problems::{
    decode_partition, decode_subsetsum, encode_3sat, encode_sat_permissive, enumerate_3sat, is_rho1_image_form,
    Cnf3Instance, Literal,
};
use fopforge::projana::{build_table, random_structures, table_consistency, Dep};
use fopforge::reductions::{apply_reduction, apply_reduction_naive, builtin_defs, compose, target_of, ReductionDef};
use num_bigint::BigUint;

fn i2() -> Cnf3Instance {
    Cnf3Instance::new(
        2,
        vec![[Literal::pos(0), Literal::neg(0), Literal::pos(1)], [Literal::pos(0), Literal::pos(1), Literal::neg(1)]],
    )
    .unwrap()
}

#[test]
fn i2_rho1_output_is_frozen() {
    let out = apply_reduction(&builtin_defs().rho1, &encode_3sat(&i2())).unwrap();
    let w: BTreeSet<Vec<usize>> = [
        (2, 3), (3, 3), (6, 7), (7, 7), (10, 11), (11, 11), (14, 15), (15, 15),
        (2, 11), (6, 11), (2, 15), (6, 15), (3, 11), (7, 15),
    ]
    .iter()
    .map(|&(a, b)| vec![a, b])
    .collect();
    assert_eq!(out.relation("W").unwrap(), &w);
    let l: BTreeSet<Vec<usize>> = [3, 7, 10, 11, 14, 15].iter().map(|&c| vec![c]).collect();
    assert_eq!(out.relation("L").unwrap(), &l);
    assert_eq!(target_of(&out).unwrap(), BigUint::from(4403u32));
    assert!(is_rho1_image_form(&out).holds());
}

#[test]
fn i2_witnesses_are_frozen() {
    let defs = builtin_defs();
    let s = encode_3sat(&i2());
    assert_eq!(solve_3sat(&s, Budget::default()).unwrap().unwrap().bits, vec![false, false]);
    let s1 = apply_reduction(&defs.rho1, &s).unwrap();
    let w = solve_subsetsum(&decode_subsetsum(&s1).unwrap(), Budget::default()).unwrap().unwrap();
    assert_eq!(w.ids, BTreeSet::from([2, 6, 10, 14]));
    let s2 = apply_reduction(&defs.rho2, &s1).unwrap();
    let p = solve_partition(&decode_partition(&s2).unwrap(), Budget::default()).unwrap().unwrap();
    assert_eq!(p.ids, BTreeSet::from([17, 32, 96]));
}

#[test]
fn compose_matches_stepwise_application() {
    let defs = builtin_defs();
    let s = encode_3sat(&i2());
    let c = compose(&[&defs.rho1, &defs.rho2], &s).unwrap();
    assert_eq!(c.sizes, vec![2, 16, 256]);
    let step = apply_reduction(&defs.rho2, &apply_reduction(&defs.rho1, &s).unwrap()).unwrap();
    assert_eq!(c.output, step);
}

#[test]
fn guard_driven_and_naive_execution_agree_on_n2() {
    let rho1 = builtin_defs().rho1;
    for c in enumerate_3sat(2).unwrap().iter() {
        let s = encode_3sat(&c);
        assert_eq!(apply_reduction(&rho1, &s).unwrap(), apply_reduction_naive(&rho1, &s, 1 << 28).unwrap());
    }
}

#[test]
fn non_3cnf_inputs_are_negative_through_rho1_only() {
    let defs = builtin_defs();
    // No clause holds any literal: every clause column stays below 3.
    let empty = encode_sat_permissive(2, &[vec![], vec![]]).unwrap();
    // x0 and ¬x0 as unit clauses.
    let contradiction = encode_sat_permissive(2, &[vec![Literal::pos(0)], vec![Literal::neg(0)]]).unwrap();
    // ρ2 writes b1 and b2 with digit patterns that assume three literals per
    // clause, so it is only sound on images of genuine 3CNF inputs. With empty
    // clauses the partition total is odd in the clause digits and stays
    // negative; with unit clauses g and h can always fill the balanced side.
    for (s, partition_positive) in [(empty, false), (contradiction, true)] {
        assert!(solve_3sat(&s, Budget::default()).unwrap().is_none());
        let s1 = apply_reduction(&defs.rho1, &s).unwrap();
        assert!(solve_subsetsum(&decode_subsetsum(&s1).unwrap(), Budget::default()).unwrap().is_none());
        assert!(!is_rho1_image_form(&s1).holds());
        let s2 = apply_reduction(&defs.rho2, &s1).unwrap();
        let p = solve_partition(&decode_partition(&s2).unwrap(), Budget::default()).unwrap();
        assert_eq!(p.is_some(), partition_positive);
    }
}

#[test]
fn every_n2_instance_passes_the_full_harness() {
    let defs = builtin_defs();
    for (i, c) in enumerate_3sat(2).unwrap().iter().enumerate() {
        let o = check_instance(i, &c, &defs, Stage::Full, Budget::default()).unwrap();
        assert!(o.agrees(), "instance {i}: {:?}", o.discrepancies);
        assert_eq!(o.digits.target, "1133");
        assert_eq!(o.transports, 4);
    }
}

fn rho1_images() -> Vec<fopforge::structures::Structure> {
    let rho1 = builtin_defs().rho1;
    enumerate_3sat(2).unwrap().iter().map(|c| apply_reduction(&rho1, &encode_3sat(&c)).unwrap()).collect()
}

#[test]
fn dependency_tables_are_exact() {
    let defs = builtin_defs();
    let inputs: Vec<_> = enumerate_3sat(2).unwrap().iter().map(|c| encode_3sat(&c)).collect();
    let t1 = build_table(&defs.rho1, 2, 1 << 30).unwrap();
    assert_eq!(table_consistency(&defs.rho1, &t1, &inputs).unwrap(), Ok(16));

    let t2 = build_table(&defs.rho2, 16, 1 << 30).unwrap();
    assert_eq!(table_consistency(&defs.rho2, &t2, &rho1_images()).unwrap(), Ok(16));
    let random = random_structures(&defs.rho2.input_vocab, 16, 50, 0.1, 2024).unwrap();
    assert_eq!(table_consistency(&defs.rho2, &t2, &random).unwrap(), Ok(50));

    // Every dependency reads a valid input atom, and the literals are positive.
    for (def, t, m) in [(&defs.rho1, &t1, 2usize), (&defs.rho2, &t2, 16)] {
        for rt in t.relations.values() {
            for d in rt.entries.values() {
                match d {
                    Dep::Pos { rel, at } => {
                        assert_eq!(def.input_vocab.arity(rel), Some(at.len()));
                        assert!(at.iter().all(|&x| x < m));
                    }
                    Dep::One => {}
                    other => panic!("unexpected dependency {other:?}"),
                }
            }
        }
    }
}

#[test]
fn rho1_one_counts_scale_with_n() {
    let rho1: ReductionDef = builtin_defs().rho1;
    for n in [2usize, 3] {
        let t = build_table(&rho1, n, 1 << 30).unwrap();
        assert_eq!(t.relations["W"].stats().one, 4 * n as u128);
        assert_eq!(t.relations["L"].stats().one, 3 * n as u128);
        assert_eq!(t.relations["W"].stats().pos, 2 * (n * n) as u128);
    }
}
