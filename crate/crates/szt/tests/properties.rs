//! Randomized structural invariants: ordinal arithmetic laws, agreement with
//! the order-type oracle, tree-order axioms, linearity of the summing
//! operator, and homogeneity of the tree norm.

use std::collections::BTreeMap;

use num::{BigInt, BigUint};
use proptest::prelude::*;

use szt::ordinal::{order_type_oracle, OracleOp, Ordinal, OrdinalClass};
use szt::rat::Rat;
use szt::tree::{blossom, truncation_ids, FinTree, NodeId};
use szt::vectors::{chain_inequality_check, james_norm, sigma_apply, SuppVec};

/// Ordinals of the shape `w^2*a + w*b + c` with small coefficients — the
/// range on which the dense-polynomial oracle is exact.
fn small_ordinal() -> impl Strategy<Value = Ordinal> {
    (0u64..=4, 0u64..=4, 0u64..=4).prop_map(|(a, b, c)| {
        let w = Ordinal::omega();
        let w2 = w.mul(&w);
        w2.nat_mul(a).add(&w.nat_mul(b)).add(&Ordinal::from_nat(c))
    })
}

/// Arbitrary ordinals below `w^4` with coefficients up to 6.
fn medium_ordinal() -> impl Strategy<Value = Ordinal> {
    prop::collection::vec(1u64..=6, 0..4).prop_map(|coeffs| {
        let mut terms: Vec<(Ordinal, BigUint)> = Vec::new();
        for (i, c) in coeffs.iter().enumerate() {
            let exp = Ordinal::from_nat((coeffs.len() - 1 - i) as u64);
            terms.push((exp, BigUint::from(*c)));
        }
        Ordinal::from_terms(terms).expect("descending exponents")
    })
}

/// Parent vectors of well-formed finite trees.
fn fin_tree() -> impl Strategy<Value = FinTree> {
    prop::collection::vec(any::<u64>(), 0..11).prop_map(|picks| {
        let mut parent = vec![None];
        for (i, p) in picks.iter().enumerate() {
            parent.push(Some((*p % (i as u64 + 1)) as usize));
        }
        FinTree::new(parent).expect("parents precede children")
    })
}

/// Sparse rational vectors over a fixed truncation window of `blossom(w^2)`.
fn supp_vec_data() -> impl Strategy<Value = Vec<(usize, i32, u32)>> {
    prop::collection::vec((0usize..100, -20i32..=20, 1u32..=9), 0..6)
}

fn build_vec(data: &[(usize, i32, u32)]) -> SuppVec {
    let w2 = Ordinal::omega().mul(&Ordinal::omega());
    let tree = blossom(&w2);
    let window = truncation_ids(&tree, 3, 3).expect("window fits the node budget");
    let mut entries: BTreeMap<NodeId, Rat> = BTreeMap::new();
    for (slot, numer, denom) in data {
        let id = window[slot % window.len()].clone();
        let value = Rat::new(BigInt::from(*numer), BigInt::from(*denom));
        *entries.entry(id).or_insert_with(|| Rat::new(0.into(), 1.into())) += value;
    }
    entries.retain(|_, v| *v != Rat::new(0.into(), 1.into()));
    SuppVec::new(tree, entries).expect("window ids belong to the ambient tree")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn add_is_associative(a in medium_ordinal(), b in medium_ordinal(), c in medium_ordinal()) {
        prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
    }

    #[test]
    fn mul_is_associative(a in medium_ordinal(), b in medium_ordinal(), c in medium_ordinal()) {
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
    }

    #[test]
    fn mul_distributes_on_the_left(a in medium_ordinal(), b in medium_ordinal(), c in medium_ordinal()) {
        prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
    }

    #[test]
    fn addition_is_monotone(a in medium_ordinal(), b in medium_ordinal(), c in medium_ordinal()) {
        if a <= b {
            prop_assert!(c.add(&a) <= c.add(&b));
            prop_assert!(a.add(&c) <= b.add(&c));
        }
    }

    #[test]
    fn arithmetic_agrees_with_the_oracle(a in small_ordinal(), b in small_ordinal()) {
        prop_assert_eq!(a.add(&b), order_type_oracle(&a, &b, OracleOp::Add).unwrap());
        prop_assert_eq!(a.mul(&b), order_type_oracle(&a, &b, OracleOp::Mul).unwrap());
    }

    #[test]
    fn display_round_trips(a in medium_ordinal()) {
        let text = a.to_string();
        prop_assert_eq!(text.parse::<Ordinal>().unwrap(), a);
    }

    #[test]
    fn fundamental_sequence_approaches_limits(a in medium_ordinal(), n in 0u64..6) {
        if matches!(a.classify(), OrdinalClass::Limit) {
            let lower = a.fund_seq(n).unwrap();
            let upper = a.fund_seq(n + 1).unwrap();
            prop_assert!(lower < a);
            prop_assert!(lower <= upper);
        }
    }

    #[test]
    fn tree_order_is_a_partial_order(tree in fin_tree()) {
        let n = tree.len();
        for i in 0..n {
            prop_assert!(tree.leq(i, i));
            for j in 0..n {
                if tree.leq(i, j) && tree.leq(j, i) {
                    prop_assert_eq!(i, j);
                }
                for k in 0..n {
                    if tree.leq(i, j) && tree.leq(j, k) {
                        prop_assert!(tree.leq(i, k));
                    }
                }
            }
        }
    }

    #[test]
    fn children_extend_depth_by_one(tree in fin_tree()) {
        for i in 0..tree.len() {
            for c in tree.children(i) {
                prop_assert_eq!(tree.depth(c), tree.depth(i) + 1);
                prop_assert!(tree.leq(i, c));
            }
        }
    }

    #[test]
    fn summing_operator_is_linear(u in supp_vec_data(), v in supp_vec_data(),
                                  num in -9i32..=9, den in 1u32..=9) {
        let (u, v) = (build_vec(&u), build_vec(&v));
        let c = Rat::new(BigInt::from(num), BigInt::from(den));
        let additive = sigma_apply(&u.add(&v));
        prop_assert!(additive.func_eq(&sigma_apply(&u).add(&sigma_apply(&v))));
        let scaled = sigma_apply(&u.scale(&c));
        prop_assert!(scaled.func_eq(&sigma_apply(&u).scale(&c)));
    }

    #[test]
    fn tree_norm_is_homogeneous(u in supp_vec_data(), num in -9i32..=9, den in 1u32..=9) {
        let u = build_vec(&u);
        let c = Rat::new(BigInt::from(num), BigInt::from(den));
        let plain = james_norm(&u).unwrap().squared;
        let scaled = james_norm(&u.scale(&c)).unwrap().squared;
        prop_assert_eq!(scaled, &c * &c * plain);
    }

    #[test]
    fn chain_inequality_holds_generically(u in supp_vec_data()) {
        let u = build_vec(&u);
        let margins = chain_inequality_check(&u).unwrap();
        prop_assert!(margins.holds);
        prop_assert!(margins.sup_sq <= margins.james_sq);
        prop_assert!(margins.james_sq <= margins.l1_sq);
    }
}
