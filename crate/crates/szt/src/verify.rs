//! Verification suites: one runner per acceptance criterion, shared by the
//! command-line `check` subcommand and the integration test target. Every
//! runner reports a single pass/fail verdict with a short detail line, and
//! all randomness flows from an explicit seed.

use std::collections::BTreeMap;

use num::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::factor::{
    canonical_witness, factorization_to_witness, sigma_matrix, subtree_factorization,
    verify_witness, witness_to_factorization, NormTag, RatOperator,
};
use crate::fdlab::{kk_suite, lower_suite};
use crate::ordinal::{order_type_oracle, OracleOp, Ordinal};
use crate::rat::{parse_rat, Rat};
use crate::szlenk::{build_model, spoindex_check, szlenk_derive, szlenk_index};
use crate::topology::cb_rank;
use crate::tree::{
    blossom, derive, embed, enumerate_compatible, full_subtree, leaf_strip_ranks, rank_tree,
    truncation_ids, verify_embedding, FinTree, NodeId, TreeExpr,
};
use crate::vectors::{
    chain_inequality_check, james_norm, james_norm_oracle, SuppVec,
};

/// Verdict of one criterion runner.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn finish(name: &'static str, outcome: Result<String, String>) -> CheckResult {
    match outcome {
        Ok(detail) => CheckResult { name, pass: true, detail },
        Err(detail) => CheckResult { name, pass: false, detail },
    }
}

fn ord(s: &str) -> Ordinal {
    s.parse().expect("ordinal literal")
}

fn rat(s: &str) -> Rat {
    parse_rat(s).expect("rational literal")
}

/// The ordinal battery used across several criteria.
fn xi_list() -> Vec<Ordinal> {
    ["0", "1", "2", "5", "w", "w+1", "w*2", "w^(2)", "w^(2)+w*3", "w^(w)"]
        .iter()
        .map(|s| ord(s))
        .collect()
}

/// Random finite rooted tree with the given node and depth bounds; the
/// parent vector is topologically ordered.
pub fn random_fin_tree(rng: &mut ChaCha8Rng, max_nodes: usize, max_depth: usize) -> FinTree {
    let n = rng.gen_range(1..=max_nodes.max(1));
    let mut parent: Vec<Option<usize>> = vec![None];
    let mut depth = vec![0usize];
    for i in 1..n {
        let candidates: Vec<usize> = (0..i).filter(|&p| depth[p] < max_depth).collect();
        if candidates.is_empty() {
            break;
        }
        let p = candidates[rng.gen_range(0..candidates.len())];
        parent.push(Some(p));
        depth.push(depth[p] + 1);
    }
    FinTree::new(parent).expect("well-formed parent vector")
}

fn random_nonzero_rat(rng: &mut ChaCha8Rng) -> Rat {
    loop {
        let r = Rat::new(rng.gen_range(-5i64..=5).into(), rng.gen_range(1i64..=4).into());
        if !r.is_zero() {
            return r;
        }
    }
}

// ---------------------------------------------------------------------------
// Criterion runners
// ---------------------------------------------------------------------------

/// Structural ranks of the canonical trees, with an iterative leaf-stripping
/// oracle on truncations for the finite stages.
pub fn blossom_ranks() -> CheckResult {
    finish("blossom_ranks", (|| {
        for xi in xi_list() {
            let tree = blossom(&xi);
            let rank = rank_tree(&tree).map_err(|e| e.to_string())?;
            let expected = xi.add(&Ordinal::one());
            if rank != expected {
                return Err(format!("rank of the {xi}-tree is {rank}, expected {expected}"));
            }
        }
        let mut oracles = 0;
        for n in [0u64, 1, 2, 5] {
            let xi = Ordinal::from_nat(n);
            let fin = crate::tree::truncate(&blossom(&xi), n, 3).map_err(|e| e.to_string())?;
            let root_strip = leaf_strip_ranks(&fin)[0];
            if root_strip != n {
                return Err(format!(
                    "leaf stripping gives root rank {root_strip} on the {n}-tree, expected {n}"
                ));
            }
            oracles += 1;
        }
        Ok(format!("10 ranks exact; {oracles} leaf-strip oracles agree"))
    })())
}

/// Szlenk indices of the dual models across the ordinal battery and the
/// epsilon regimes.
pub fn szlenk_model() -> CheckResult {
    finish("szlenk_model", (|| {
        let mut checked = 0;
        for xi in xi_list() {
            let model = build_model(&blossom(&xi)).map_err(|e| e.to_string())?;
            let expected = xi.add(&Ordinal::one());
            for eps in ["1/4", "1/2", "9/10"] {
                let idx = szlenk_index(&model, &rat(eps)).map_err(|e| e.to_string())?;
                if idx != expected {
                    return Err(format!(
                        "index at epsilon {eps} on the {xi}-tree is {idx}, expected {expected}"
                    ));
                }
                checked += 1;
            }
            for eps in ["1", "3/2"] {
                let idx = szlenk_index(&model, &rat(eps)).map_err(|e| e.to_string())?;
                if idx != Ordinal::one() {
                    return Err(format!(
                        "index at epsilon {eps} on the {xi}-tree is {idx}, expected 1"
                    ));
                }
                checked += 1;
            }
        }
        Ok(format!("{checked} index evaluations exact"))
    })())
}

/// Iterated single-step derivation agrees with the direct level set on
/// truncation windows.
pub fn level_set_equality(seed: u64) -> CheckResult {
    finish("level_set_equality", (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x11);
        let pool: Vec<Ordinal> = ["1", "2", "5", "w", "w+1", "w*2", "w^(2)", "w^(2)+w*3", "w^(w)"]
            .iter()
            .map(|s| ord(s))
            .collect();
        let eps_pool = ["1/4", "1/2", "3/4", "9/10"];
        for case in 0..50 {
            let xi = &pool[rng.gen_range(0..pool.len())];
            let tree = blossom(xi);
            let eps = rat(eps_pool[rng.gen_range(0..eps_pool.len())]);
            let steps = rng.gen_range(0..=4u64);
            let mut model = build_model(&tree).map_err(|e| e.to_string())?;
            for _ in 0..steps {
                model = szlenk_derive(&model, &eps).map_err(|e| e.to_string())?;
            }
            let direct = derive(&tree, &Ordinal::from_nat(steps));
            // Window shapes up to depth/width 6 whose node count stays
            // within the explicit-tree bound.
            let shapes: [(u64, u64); 4] = [(6, 3), (5, 4), (4, 5), (3, 6)];
            let (depth, width) = shapes[rng.gen_range(0..shapes.len())];
            let window = truncation_ids(&tree, depth, width).map_err(|e| e.to_string())?;
            for id in &window {
                let a = model.survivors().contains(id).map_err(|e| e.to_string())?;
                let b = direct.contains(id).map_err(|e| e.to_string())?;
                if a != b {
                    return Err(format!(
                        "case {case}: node {id} survives={a} after {steps} steps but \
                         level set says {b} on the {xi}-tree"
                    ));
                }
            }
        }
        Ok("50 randomized (xi, tree) pairs: survivor sets equal level sets".into())
    })())
}

/// CNF arithmetic against the independent order-type oracle on all pairs
/// below `w^3` with coefficients at most 3.
pub fn ordinal_oracle() -> CheckResult {
    finish("ordinal_oracle", (|| {
        let w = Ordinal::omega();
        let w2 = w.mul(&w);
        let mut values = Vec::new();
        for a in 0..=3u64 {
            for b in 0..=3u64 {
                for c in 0..=3u64 {
                    values.push(w2.nat_mul(a).add(&w.nat_mul(b)).add(&Ordinal::from_nat(c)));
                }
            }
        }
        let mut pairs = 0;
        for x in &values {
            for y in &values {
                for op in [OracleOp::Add, OracleOp::Mul] {
                    let fast = match op {
                        OracleOp::Add => x.add(y),
                        OracleOp::Mul => x.mul(y),
                    };
                    let slow = order_type_oracle(x, y, op).map_err(|e| e.to_string())?;
                    if fast != slow {
                        return Err(format!(
                            "disagreement on ({x}, {y}) under {op:?}: {fast} vs {slow}"
                        ));
                    }
                    pairs += 1;
                }
            }
        }
        Ok(format!("{pairs} oracle comparisons exact"))
    })())
}

/// Index arithmetic `rho * w = w^(alpha+1)` and the minimality of the
/// doubling exponent.
pub fn spoindex_arithmetic() -> CheckResult {
    finish("spoindex_arithmetic", (|| {
        let pool = [
            "1", "2", "5", "w", "w+1", "w+5", "w*2", "w*2+1", "w*3", "w^(2)",
            "w^(2)+w", "w^(2)+w*3", "w^(2)*2", "w^(3)", "w^(3)+w^(2)", "w^(5)",
            "w^(w)", "w^(w)+w", "w^(w+1)", "w^(w)*2",
        ];
        for s in pool {
            let xi = ord(s);
            let report = spoindex_check(&blossom(&xi)).map_err(|e| e.to_string())?;
            let expected = report
                .alpha
                .add(&Ordinal::one())
                .omega_pow()
                .map_err(|e| e.to_string())?;
            if report.product != expected {
                return Err(format!(
                    "product on the {s}-tree is {}, expected {expected}", report.product
                ));
            }
            let n = report
                .rho
                .doubling_exponent(&report.alpha)
                .map_err(|e| e.to_string())?;
            let bound = |k: u32| -> Result<Ordinal, String> {
                let pow = 2u64.checked_pow(k).ok_or("doubling overflow")?;
                Ok(report
                    .alpha
                    .omega_pow()
                    .map_err(|e| e.to_string())?
                    .nat_mul(pow)
                    .add(&Ordinal::one()))
            };
            if report.rho > bound(n)? {
                return Err(format!("doubling exponent {n} too small on the {s}-tree"));
            }
            if n > 0 && report.rho <= bound(n - 1)? {
                return Err(format!("doubling exponent {n} not minimal on the {s}-tree"));
            }
        }
        Ok("20 index products and doubling exponents exact and minimal".into())
    })())
}

/// Random finite trees embed onto downwards closed subtrees of the rank-7
/// canonical tree, verified by the independent checker.
pub fn embeddings(seed: u64) -> CheckResult {
    finish("embeddings", (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x22);
        let xi = Ordinal::from_nat(6u8);
        let target = blossom(&xi);
        for case in 0..200 {
            let fin = random_fin_tree(&mut rng, 16, 6);
            let source = fin.to_expr();
            let map = embed(&source, &xi).map_err(|e| format!("case {case}: {e}"))?;
            verify_embedding(&source, &target, &map)
                .map_err(|e| format!("case {case}: {e}"))?;
        }
        Ok("200 random finite trees embedded and independently verified".into())
    })())
}

/// Child subselection preserves the structural rank.
pub fn full_subtrees() -> CheckResult {
    finish("full_subtrees", (|| {
        let ords = ["1", "2", "5", "w", "w+1", "w*2", "w^(2)", "w^(2)+w*3", "w^(w)", "w^(3)"];
        let params = [(0u64, 1u64), (1, 2)];
        let mut checked = 0;
        for s in ords {
            let xi = ord(s);
            let tree = blossom(&xi);
            let base = rank_tree(&tree).map_err(|e| e.to_string())?;
            for (offset, stride) in params {
                let sub = full_subtree(&tree, offset, stride).map_err(|e| e.to_string())?;
                let rank = rank_tree(&sub).map_err(|e| e.to_string())?;
                if rank != base {
                    return Err(format!(
                        "subselection ({offset},{stride}) of the {s}-tree has rank {rank}, \
                         expected {base}"
                    ));
                }
                checked += 1;
            }
        }
        Ok(format!("{checked} (xi, offset, stride) combinations rank-preserving"))
    })())
}

fn random_supp_vec(
    rng: &mut ChaCha8Rng,
    ambient: &TreeExpr,
    nodes: &[NodeId],
    max_support: usize,
    allow_root: bool,
) -> Result<SuppVec, String> {
    let mut entries: BTreeMap<NodeId, Rat> = BTreeMap::new();
    let want = rng.gen_range(1..=max_support);
    for _ in 0..want {
        let id = nodes[rng.gen_range(0..nodes.len())].clone();
        if !allow_root && id == NodeId::root() {
            continue;
        }
        entries.insert(id, random_nonzero_rat(rng));
    }
    SuppVec::new(ambient.clone(), entries).map_err(|e| e.to_string())
}

/// Branch-and-bound norm vs. the exhaustive partition oracle, the chain
/// inequality, and branch decoupling.
pub fn james_norm_suite(seed: u64) -> CheckResult {
    finish("james_norm_suite", (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x33);
        // Oracle agreement over random trees.
        for case in 0..100 {
            let ambient = random_fin_tree(&mut rng, 12, 5).to_expr();
            let nodes = enumerate_compatible(&ambient, 64).map_err(|e| e.to_string())?;
            let v = random_supp_vec(&mut rng, &ambient, &nodes, 8, true)?;
            let fast = james_norm(&v).map_err(|e| e.to_string())?;
            let slow = james_norm_oracle(&v).map_err(|e| e.to_string())?;
            if fast.squared != slow.squared {
                return Err(format!("case {case}: branch-and-bound differs from the oracle"));
            }
        }
        // Chain inequality on a deep ambient tree.
        let deep = blossom(&ord("w^(6)"));
        let window = truncation_ids(&deep, 4, 4).map_err(|e| e.to_string())?;
        for case in 0..500 {
            let v = random_supp_vec(&mut rng, &deep, &window, 6, true)?;
            let margins = chain_inequality_check(&v).map_err(|e| e.to_string())?;
            if !margins.holds {
                return Err(format!("case {case}: chain inequality violated"));
            }
        }
        // Branch decoupling: root-free vectors split over root branches.
        for case in 0..100 {
            let ambient = random_fin_tree(&mut rng, 12, 4).to_expr();
            let nodes = enumerate_compatible(&ambient, 64).map_err(|e| e.to_string())?;
            if nodes.len() < 2 {
                continue;
            }
            let v = random_supp_vec(&mut rng, &ambient, &nodes, 6, false)?;
            let total = james_norm(&v).map_err(|e| e.to_string())?.squared;
            let branches: std::collections::BTreeSet<u64> =
                v.support().map(|id| id.0[0]).collect();
            let mut sum = Rat::zero();
            for b in branches {
                sum += james_norm(&v.branch_restrict(b)).map_err(|e| e.to_string())?.squared;
            }
            if total != sum {
                return Err(format!("case {case}: branch decoupling fails"));
            }
        }
        Ok("100 oracle matches, 500 chain inequalities, 100 decouplings exact".into())
    })())
}

/// Downward-closed subset of a finite tree together with its inclusion map.
fn random_subtree(rng: &mut ChaCha8Rng, tree: &FinTree) -> (FinTree, BTreeMap<usize, usize>) {
    let mut keep = vec![false; tree.len()];
    keep[tree.root()] = true;
    for node in 1..tree.len() {
        let p = (0..node).find(|&p| tree.children(p).contains(&node));
        if let Some(p) = p {
            if keep[p] && rng.gen_bool(0.6) {
                keep[node] = true;
            }
        }
    }
    let kept: Vec<usize> = (0..tree.len()).filter(|&n| keep[n]).collect();
    let index_of: BTreeMap<usize, usize> = kept.iter().enumerate().map(|(k, &t)| (t, k)).collect();
    let parent: Vec<Option<usize>> = kept
        .iter()
        .map(|&t| {
            (0..t)
                .find(|&p| keep[p] && tree.children(p).contains(&t))
                .map(|p| index_of[&p])
        })
        .collect();
    let sub = FinTree::new(parent).expect("downward-closed subset is a tree");
    let phi: BTreeMap<usize, usize> = kept.iter().enumerate().map(|(k, &t)| (k, t)).collect();
    (sub, phi)
}

/// Exact subtree factorizations and the witness round trip.
pub fn factorization_suite(seed: u64) -> CheckResult {
    finish("factorization_suite", (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x44);
        for case in 0..200 {
            let tree = random_fin_tree(&mut rng, 12, 6);
            let (sub, phi) = random_subtree(&mut rng, &tree);
            let factors =
                subtree_factorization(&sub, &tree, &phi).map_err(|e| format!("case {case}: {e}"))?;
            // Recompute the composition here and compare entrywise.
            let product = factors
                .b
                .compose(&factors.v.compose(
                    &sigma_matrix(&tree).compose(&factors.u.compose(&factors.a).unwrap()).unwrap(),
                ).unwrap())
                .unwrap();
            if product.entries() != sigma_matrix(&sub).entries() {
                return Err(format!("case {case}: composition differs from the subtree operator"));
            }
        }
        for case in 0..200 {
            let tree = random_fin_tree(&mut rng, 10, 5);
            let w = canonical_witness(&tree);
            let top = RatOperator::identity(tree.len(), NormTag::L1, NormTag::L1);
            let (u, v) = witness_to_factorization(&tree, &w, &top, &w.xstar)
                .map_err(|e| format!("case {case}: {e}"))?;
            let back = factorization_to_witness(&tree, &u, &v, &top)
                .map_err(|e| format!("case {case}: {e}"))?;
            let report = verify_witness(&tree, &back).map_err(|e| e.to_string())?;
            if !report.ok {
                return Err(format!(
                    "case {case}: extracted witness invalid: {}",
                    report.counterexample.unwrap_or_default()
                ));
            }
            // delta must meet 1/(|U| |V|): compare squares exactly.
            let lhs = &back.delta * &back.delta * u.op_norm_sq().unwrap() * v.op_norm_sq().unwrap();
            if lhs < Rat::from_integer(1.into()) {
                return Err(format!("case {case}: delta below the norm-product bound"));
            }
        }
        Ok("200 subtree factorizations and 200 witness round trips exact".into())
    })())
}

/// Margins of the net/annihilator lower bound over randomized instances.
pub fn lowerlemma_margins(seed: u64) -> CheckResult {
    finish("lowerlemma_margins", (|| {
        let suite = lower_suite(seed ^ 0x55, 1000).map_err(|e| e.to_string())?;
        let mut exact = 0;
        for (i, inst) in suite.iter().enumerate() {
            if inst.report.margin < -1e-9 {
                return Err(format!("instance {i}: margin {}", inst.report.margin));
            }
            if inst.report.exact_inputs {
                if !inst.report.exact_nonneg {
                    return Err(format!("instance {i}: exact-path margin negative"));
                }
                exact += 1;
            }
        }
        Ok(format!("1000 margins within tolerance; {exact} exact-path instances nonnegative"))
    })())
}

/// Two-sided renorming bound on random instances with `c = sqrt(2)`.
pub fn kadets_klee_bounds(seed: u64) -> CheckResult {
    finish("kadets_klee_bounds", (|| {
        let suite = kk_suite(seed ^ 0x66, 500, 2.0_f64.sqrt(), 1e-12).map_err(|e| e.to_string())?;
        Ok(format!("{} instances within the two-sided bound to 1e-12", suite.len()))
    })())
}

/// Derivative rank equals derivation rank on infinitely branching trees and
/// collapses to 1 on finite trees.
pub fn cb_dichotomy(seed: u64) -> CheckResult {
    finish("cb_dichotomy", (|| {
        let ords = [
            "1", "2", "3", "5", "8", "w", "w+1", "w+2", "w*2", "w*2+1", "w*3", "w^(2)",
            "w^(2)+1", "w^(2)+w", "w^(2)+w*3", "w^(2)*2", "w^(3)", "w^(w)", "w^(w)+w", "w^(w+1)",
        ];
        for s in ords {
            let tree = blossom(&ord(s));
            let cb = cb_rank(&tree).map_err(|e| e.to_string())?;
            let rank = rank_tree(&tree).map_err(|e| e.to_string())?;
            if cb != rank {
                return Err(format!("derivative rank {cb} differs from rank {rank} on the {s}-tree"));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x77);
        let mut done = 0;
        while done < 20 {
            let fin = random_fin_tree(&mut rng, 10, 4);
            if fin.len() < 2 {
                continue;
            }
            let tree = fin.to_expr();
            let cb = cb_rank(&tree).map_err(|e| e.to_string())?;
            let rank = rank_tree(&tree).map_err(|e| e.to_string())?;
            if cb != Ordinal::one() || rank == cb {
                return Err(format!(
                    "finite tree with {} nodes: derivative rank {cb}, rank {rank}",
                    fin.len()
                ));
            }
            done += 1;
        }
        Ok("20 infinite trees match; 20 finite trees collapse to rank 1".into())
    })())
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

/// All twelve criterion runners, in presentation order.
pub fn run_all(seed: u64) -> Vec<CheckResult> {
    vec![
        blossom_ranks(),
        szlenk_model(),
        level_set_equality(seed),
        ordinal_oracle(),
        spoindex_arithmetic(),
        embeddings(seed),
        full_subtrees(),
        james_norm_suite(seed),
        factorization_suite(seed),
        lowerlemma_margins(seed),
        kadets_klee_bounds(seed),
        cb_dichotomy(seed),
    ]
}

/// The runners touching one module; `None` for an unknown module name.
pub fn run_module(module: &str, seed: u64) -> Option<Vec<CheckResult>> {
    Some(match module {
        "ordinal" => vec![ordinal_oracle(), spoindex_arithmetic()],
        "tree" => vec![blossom_ranks(), embeddings(seed), full_subtrees()],
        "topology" => vec![cb_dichotomy(seed)],
        "vectors" => vec![james_norm_suite(seed)],
        "factor" => vec![factorization_suite(seed)],
        "szlenk" => vec![szlenk_model(), level_set_equality(seed), spoindex_arithmetic()],
        "fdlab" => vec![lowerlemma_margins(seed), kadets_klee_bounds(seed)],
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn module_dispatch_covers_known_names() {
        for name in ["ordinal", "tree", "topology", "vectors", "factor", "szlenk", "fdlab"] {
            assert!(run_module(name, 7).is_some(), "{name} missing");
        }
        assert!(run_module("nosuch", 7).is_none());
    }

    #[test]
    fn random_fin_tree_respects_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let t = random_fin_tree(&mut rng, 12, 4);
            assert!(t.len() <= 12);
            for n in 0..t.len() {
                assert!(t.depth(n) <= 4);
            }
        }
    }
}
