//! Symbolic Szlenk derivation on tree-dual point systems: the chain
//! indicator model, ordinal-indexed derivation, index computation, and the
//! halving-schedule bookkeeping.

use num::rational::BigRational;
use num::{One, Signed};
use serde::Serialize;
use thiserror::Error;

use crate::ordinal::{Ordinal, OrdinalError};
use crate::rat::Rat;
use crate::topology::{uniformly_omega_branching, TopologyError};
use crate::tree::{derive, rank_tree, truncation_ids, DerivedView, NodeId, TreeError, TreeExpr};
use crate::vectors::{SuppVec, VectorError};

#[derive(Debug, Error, PartialEq)]
pub enum SzlenkError {
    #[error("epsilon must be positive")]
    EpsilonNotPositive,
    #[error("epsilon must lie in (0, 1) for this operation")]
    EpsilonOutOfRange,
    #[error("the model supports uniformly omega-branching or finite trees; this tree mixes generators")]
    MixedBranching,
    #[error("an infinite blossom-shaped tree is required")]
    NotInfinite,
    #[error("model sanity check failed: {0}")]
    ModelDefect(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Ordinal(#[from] OrdinalError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Vector(#[from] VectorError),
}

/// The dual point system of a tree: node `t` carries the functional
/// indicating the root-free chain below `t` (the root carries the zero
/// functional), with survivors tracked as a symbolic derived view.
#[derive(Debug, Clone, PartialEq)]
pub struct DualModel {
    tree: TreeExpr,
    survivors: DerivedView,
}

impl DualModel {
    pub fn tree(&self) -> &TreeExpr {
        &self.tree
    }

    pub fn survivors(&self) -> &DerivedView {
        &self.survivors
    }

    /// The functional attached to a node: indicator of the chain from the
    /// root (exclusive) to the node.
    pub fn point(&self, t: &NodeId) -> Result<SuppVec, SzlenkError> {
        if !self.tree.node_exists(t) {
            return Err(TreeError::InvalidNode(t.clone()).into());
        }
        let entries = (1..=t.0.len())
            .map(|depth| (NodeId(t.0[..depth].to_vec()), Rat::one()))
            .collect();
        Ok(SuppVec::new(self.tree.clone(), entries)?)
    }

    pub fn is_empty(&self) -> Result<bool, SzlenkError> {
        Ok(self.survivors.is_empty()?)
    }
}

/// Builds the model over all of `T` and certifies 1-separation of the
/// distinct points on a truncation window.
pub fn build_model(tree: &TreeExpr) -> Result<DualModel, SzlenkError> {
    tree.validate()?;
    let model = DualModel { tree: tree.clone(), survivors: derive(tree, &Ordinal::zero()) };
    let window = truncation_ids(tree, 3, 4)?;
    let points: Vec<SuppVec> = window
        .iter()
        .take(20)
        .map(|id| model.point(id))
        .collect::<Result<_, _>>()?;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            let distance = a.sub(b).linf_entries();
            if distance != Rat::one() {
                return Err(SzlenkError::ModelDefect(format!(
                    "pairwise sup distance {} is not 1",
                    distance
                )));
            }
        }
    }
    Ok(model)
}

fn check_epsilon(epsilon: &BigRational) -> Result<(), SzlenkError> {
    if !epsilon.is_positive() {
        return Err(SzlenkError::EpsilonNotPositive);
    }
    Ok(())
}

fn emptied(model: &DualModel) -> Result<DualModel, SzlenkError> {
    Ok(DualModel {
        tree: model.tree.clone(),
        survivors: derive(&model.tree, &rank_tree(&model.tree)?),
    })
}

/// One Szlenk derivation step on the model. Distinct points sit at sup
/// distance exactly 1, so for `epsilon >= 1` everything has small-diameter
/// neighborhoods and the survivors vanish; for `epsilon < 1` exactly the
/// isolated points of the survivor subspace drop out.
pub fn szlenk_derive(model: &DualModel, epsilon: &BigRational) -> Result<DualModel, SzlenkError> {
    check_epsilon(epsilon)?;
    if *epsilon >= Rat::one() {
        return emptied(model);
    }
    if uniformly_omega_branching(&model.tree) && !matches!(model.tree, TreeExpr::Leaf) {
        // Isolated survivors are exactly the maximal ones: next derivative.
        return Ok(DualModel {
            tree: model.tree.clone(),
            survivors: DerivedView {
                base: model.survivors.base.clone(),
                level: model.survivors.level.add(&Ordinal::one()),
            },
        });
    }
    if model.tree.is_finite() {
        // A finite model is discrete: every point is isolated.
        return emptied(model);
    }
    Err(SzlenkError::MixedBranching)
}

/// Least ordinal at which the iterated derivation is empty, computed
/// symbolically from the model semantics.
pub fn szlenk_index(model: &DualModel, epsilon: &BigRational) -> Result<Ordinal, SzlenkError> {
    check_epsilon(epsilon)?;
    if *epsilon >= Rat::one() {
        return Ok(Ordinal::one());
    }
    if model.tree.is_finite() {
        return Ok(Ordinal::one());
    }
    if uniformly_omega_branching(&model.tree) {
        return Ok(rank_tree(&model.tree)?);
    }
    Err(SzlenkError::MixedBranching)
}

/// The survivor set after `xi` derivation steps at small epsilon: equals
/// the tree derivative of the same level.
pub fn level_sets(model: &DualModel, epsilon: &BigRational, xi: &Ordinal) -> Result<DerivedView, SzlenkError> {
    check_epsilon(epsilon)?;
    if *epsilon >= Rat::one() {
        return Err(SzlenkError::EpsilonOutOfRange);
    }
    if !uniformly_omega_branching(&model.tree) {
        return Err(SzlenkError::MixedBranching);
    }
    Ok(derive(&model.tree, xi))
}

/// One reported derivation level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceLevel {
    pub xi: String,
    pub survivors: String,
    pub removed_sample: Vec<Vec<u64>>,
}

/// Runs `steps` successive derivation levels and reports, per level, the
/// symbolic survivor set and a sample of nodes removed at that level
/// (drawn from a truncation window).
pub fn trace(model: &DualModel, epsilon: &BigRational, steps: u64) -> Result<Vec<TraceLevel>, SzlenkError> {
    check_epsilon(epsilon)?;
    let window = truncation_ids(&model.tree, 3, 4)?;
    let mut current = model.clone();
    let mut out = Vec::new();
    for _ in 0..=steps {
        let next = szlenk_derive(&current, epsilon)?;
        let mut removed_sample = Vec::new();
        for id in &window {
            if current.survivors.contains(id)? && !next.survivors.contains(id)? {
                removed_sample.push(id.0.clone());
                if removed_sample.len() >= 5 {
                    break;
                }
            }
        }
        out.push(TraceLevel {
            xi: current.survivors.level.to_string(),
            survivors: format!("derive(T, {})", current.survivors.level),
            removed_sample,
        });
        if next.is_empty()? {
            break;
        }
        current = next;
    }
    Ok(out)
}

/// Report of the index arithmetic for an infinite blossom-shaped tree:
/// `rho * omega` collapses to the omega power above the leading exponent of
/// `rho`. The model index is attached as the certified lower bound; the
/// matching upper bound is analytic and not computed here.
#[derive(Debug, Clone, PartialEq)]
pub struct SpoReport {
    pub rho: Ordinal,
    pub alpha: Ordinal,
    pub product: Ordinal,
    pub model_lower_bound: Ordinal,
}

pub fn spoindex_check(tree: &TreeExpr) -> Result<SpoReport, SzlenkError> {
    if tree.is_finite() {
        return Err(SzlenkError::NotInfinite);
    }
    if !uniformly_omega_branching(tree) {
        return Err(SzlenkError::MixedBranching);
    }
    let rho = rank_tree(tree)?;
    if rho < Ordinal::from_nat(2u8) {
        return Err(SzlenkError::ModelDefect("rank below 2".into()));
    }
    let alpha = rho.leading_alpha()?;
    let omega_alpha = alpha.omega_pow()?;
    if rho <= omega_alpha {
        return Err(SzlenkError::ModelDefect(
            "rank is not strictly above its leading omega power".into(),
        ));
    }
    let product = rho.mul(&Ordinal::omega());
    let expected = alpha.add(&Ordinal::one()).omega_pow()?;
    if product != expected {
        return Err(SzlenkError::ModelDefect(format!(
            "product {} differs from {}",
            product, expected
        )));
    }
    let model_lower_bound = szlenk_index(&build_model(tree)?, &Rat::new(1.into(), 2.into()))?;
    Ok(SpoReport { rho, alpha, product, model_lower_bound })
}

/// The halving schedule: step `n` works at `epsilon / 2^(n+1)` and level
/// `zeta * 2^n`.
pub fn halving_schedule(
    zeta: &Ordinal,
    epsilon: &BigRational,
    n: u32,
) -> Result<(BigRational, Ordinal), SzlenkError> {
    check_epsilon(epsilon)?;
    let denom = Rat::from_integer(num::BigInt::from(2u8).pow(n + 1));
    let level = zeta.nat_mul(2u64.pow(n));
    Ok((epsilon / denom, level))
}
