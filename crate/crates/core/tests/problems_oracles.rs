use std::collections::BTreeSet;

use fopforge::oracles::{
    brute_force_cnf, solve_3sat, solve_partition, solve_subsetsum, verify_partition, verify_subsetsum, Budget,
};
use fopforge::problems::{
    bits_to_nat, decode_subsetsum, encode_3sat, encode_subsetsum, enumerate_3sat, nat_to_bits, normalize_to_square,
    parse_dimacs, Cnf3Instance, Literal, PartitionInstance, SubsetSumInstance,
};
use num_bigint::BigUint;
use proptest::prelude::*;

fn as_vecs(c: &Cnf3Instance) -> Vec<Vec<Literal>> {
    c.clauses().iter().map(|cl| cl.to_vec()).collect()
}

/// Satisfying assignments in increasing mask order, by direct clause checks.
fn models(n: usize, clauses: &[Vec<Literal>]) -> Vec<u64> {
    (0..1u64 << n)
        .filter(|mask| {
            let a: Vec<bool> = (0..n).map(|j| mask >> j & 1 == 1).collect();
            clauses.iter().all(|c| c.iter().any(|l| l.holds(&a)))
        })
        .collect()
}

#[test]
fn sat_oracle_matches_clause_evaluation_exhaustively() {
    for n in [2, 3] {
        for c in enumerate_3sat(n).unwrap().iter() {
            let got = solve_3sat(&encode_3sat(&c), Budget::default()).unwrap();
            let want = models(n, &as_vecs(&c)).first().copied();
            assert_eq!(got.as_ref().map(|a| a.mask()), want, "{c:?}");
            assert_eq!(brute_force_cnf(n, &as_vecs(&c)).map(|a| a.mask()), want);
        }
    }
}

#[test]
fn enumeration_sizes_and_order() {
    let e2 = enumerate_3sat(2).unwrap();
    assert_eq!(e2.len(), 16);
    assert_eq!(enumerate_3sat(3).unwrap().len(), 8000);
    let first = e2.instance_at(0);
    assert_eq!(first.clauses()[0], [Literal::pos(0), Literal::neg(0), Literal::pos(1)]);
    let distinct: BTreeSet<String> = e2.iter().map(|c| c.to_dimacs()).collect();
    assert_eq!(distinct.len(), 16);
    assert!(enumerate_3sat(4).is_err());
}

#[test]
fn dimacs_round_trip() {
    let text = "c demo\np cnf 3 3\n1 -2 3 0\n-1 2 -3 0\n1 2 3 0\n";
    let c = parse_dimacs(text).unwrap();
    assert_eq!(parse_dimacs(&c.to_dimacs()).unwrap(), c);
    assert!(parse_dimacs("p cnf 2 1\n1 2 0\n").is_err());
    assert!(parse_dimacs("p cnf 2 1\n1 3 -1 0\n").is_err());
}

fn clause(n: usize) -> impl Strategy<Value = [Literal; 3]> {
    prop::sample::subsequence((0..2 * n).collect::<Vec<_>>(), 3).prop_map(|codes| {
        let l = |c: usize| Literal { var: c / 2, neg: c % 2 == 1 };
        [l(codes[0]), l(codes[1]), l(codes[2])]
    })
}

fn small_cnf() -> impl Strategy<Value = (usize, Vec<[Literal; 3]>)> {
    (2usize..=5).prop_flat_map(|n| (Just(n), prop::collection::vec(clause(n), 0..8)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn squaring_preserves_satisfiability((n, clauses) in small_cnf()) {
        let vecs: Vec<Vec<Literal>> = clauses.iter().map(|c| c.to_vec()).collect();
        let sq = normalize_to_square(n, clauses).unwrap();
        prop_assert_eq!(sq.n(), sq.clauses().len());
        prop_assert!(sq.n() >= n);
        let before = !models(n, &vecs).is_empty();
        let after = !models(sq.n(), &as_vecs(&sq)).is_empty();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn bits_round_trip(x in any::<u64>(), extra in 0usize..8) {
        let x = BigUint::from(x);
        let m = x.bits() as usize + extra + 1;
        let cols = nat_to_bits(&x, m).unwrap();
        prop_assert_eq!(bits_to_nat(cols, m), x.clone());
        if x.bits() > 1 {
            prop_assert!(nat_to_bits(&x, x.bits() as usize - 1).is_none());
        }
    }

    #[test]
    fn subsetsum_structure_round_trip(sizes in prop::collection::vec(0u32..1000, 1..10), target in 0u32..4000) {
        let inst = SubsetSumInstance {
            sizes: sizes.iter().map(|&x| BigUint::from(x)).collect(),
            target: BigUint::from(target),
        };
        let s = encode_subsetsum(&inst, 16).unwrap();
        let back = decode_subsetsum(&s).unwrap();
        prop_assert_eq!(&back.target, &inst.target);
        prop_assert_eq!(&back.sizes[..sizes.len()], &inst.sizes[..]);
        prop_assert!(back.sizes[sizes.len()..].iter().all(|x| *x == BigUint::from(0u8)));
    }

    #[test]
    fn subsetsum_oracle_finds_smallest_mask(sizes in prop::collection::vec(1u32..50, 1..10), target in 0u32..200) {
        let inst = SubsetSumInstance {
            sizes: sizes.iter().map(|&x| BigUint::from(x)).collect(),
            target: BigUint::from(target),
        };
        let want = (0..1u32 << sizes.len()).find(|mask| {
            (0..sizes.len()).filter(|i| mask >> i & 1 == 1).map(|i| sizes[i]).sum::<u32>() == target
        });
        let got = solve_subsetsum(&inst, Budget::default()).unwrap();
        prop_assert_eq!(got.is_some(), want.is_some());
        if let (Some(w), Some(mask)) = (got, want) {
            prop_assert!(verify_subsetsum(&inst, &w));
            let ids: BTreeSet<usize> = (0..sizes.len()).filter(|i| mask >> i & 1 == 1).collect();
            prop_assert_eq!(w.ids, ids);
        }
    }

    #[test]
    fn partition_oracle_agrees_with_enumeration(sizes in prop::collection::vec(0u32..40, 1..10)) {
        let inst = PartitionInstance { sizes: sizes.iter().map(|&x| BigUint::from(x)).collect() };
        let total: u32 = sizes.iter().sum();
        let exists = total.is_multiple_of(2)
            && (0..1u32 << sizes.len())
                .any(|mask| (0..sizes.len()).filter(|i| mask >> i & 1 == 1).map(|i| sizes[i]).sum::<u32>() * 2 == total);
        let got = solve_partition(&inst, Budget::default()).unwrap();
        prop_assert_eq!(got.is_some(), exists);
        if let Some(w) = got {
            prop_assert!(verify_partition(&inst, &w));
        }
    }
}

#[test]
fn budget_caps_nonzero_items() {
    let inst = SubsetSumInstance { sizes: (1..=12u32).map(BigUint::from).collect(), target: BigUint::from(5u8) };
    assert!(solve_subsetsum(&inst, Budget::new(11)).is_err());
    assert!(solve_subsetsum(&inst, Budget::new(12)).unwrap().is_some());
}
