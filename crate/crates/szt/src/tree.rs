//! Rooted well-founded trees: a constructor algebra for finite and lazily
//! omega-branching trees, transfinite derivation, ordinal ranks, the
//! canonical blossomed trees `T_xi`, enumerations and order-embeddings.
//!
//! Nodes are addressed by their path from the root, so the tree order is
//! prefix order and heights are path lengths.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ordinal::{Ordinal, OrdinalError};

/// Default cap on explicit tree sizes; override with `SZT_MAX_NODES`.
pub const DEFAULT_MAX_NODES: usize = 4096;

pub fn max_nodes() -> usize {
    std::env::var("SZT_MAX_NODES")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_MAX_NODES)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("node {0} does not exist in the tree")]
    InvalidNode(NodeId),
    #[error("node {0} is not in the derived view")]
    NotInView(NodeId),
    #[error("enumeration budget must be positive")]
    BudgetZero,
    #[error("blossom generator requires a positive ordinal")]
    BlossomZero,
    #[error("subselect stride must be positive")]
    StrideZero,
    #[error("an internal node must have at least one child")]
    EmptyChildList,
    #[error("enumeration does not cover the tree: node {0} missing")]
    PsiNotSurjective(usize),
    #[error("rank {rank} exceeds the rank {target} of the embedding target")]
    RankTooLarge { rank: Ordinal, target: Ordinal },
    #[error("operation requires a finite tree")]
    NotFinite,
    #[error("full subtree selection is undefined at finite child lists")]
    FiniteChildren,
    #[error("explicit tree exceeds the node bound {0}")]
    NodeBound(usize),
    #[error("malformed explicit tree: {0}")]
    Malformed(String),
    #[error(transparent)]
    Ordinal(#[from] OrdinalError),
}

// ---------------------------------------------------------------------------
// Node addresses
// ---------------------------------------------------------------------------

/// A node address: the sequence of child indices from the root.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub Vec<u64>);

impl NodeId {
    pub fn root() -> Self {
        NodeId(Vec::new())
    }

    pub fn child(&self, index: u64) -> Self {
        let mut path = self.0.clone();
        path.push(index);
        NodeId(path)
    }

    pub fn parent(&self) -> Option<Self> {
        if self.0.is_empty() {
            None
        } else {
            Some(NodeId(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn is_prefix_of(&self, other: &NodeId) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    /// Height of the node: the order type of its strict predecessor chain.
    pub fn height(&self) -> u64 {
        self.0.len() as u64
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, step) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{step}")?;
        }
        write!(f, "]")
    }
}

// ---------------------------------------------------------------------------
// Constructor algebra
// ---------------------------------------------------------------------------

/// Child generator of an internal node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ChildGen {
    Finite { items: Vec<TreeExpr> },
    Blossom { ordinal: Ordinal },
    Subselect { offset: u64, stride: u64, inner: Box<ChildGen> },
}

/// A rooted well-founded tree, finite or lazily omega-branching.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TreeExpr {
    Leaf,
    Node { children: ChildGen },
}

/// Number of children of a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arity {
    Finite(usize),
    Omega,
}

impl ChildGen {
    pub fn arity(&self) -> Arity {
        match self {
            ChildGen::Finite { items } => Arity::Finite(items.len()),
            ChildGen::Blossom { .. } => Arity::Omega,
            ChildGen::Subselect { offset, stride, inner } => match inner.arity() {
                Arity::Omega => Arity::Omega,
                Arity::Finite(n) => {
                    let n = n as u64;
                    if *offset >= n {
                        Arity::Finite(0)
                    } else {
                        Arity::Finite((1 + (n - 1 - offset) / stride) as usize)
                    }
                }
            },
        }
    }

    fn child(&self, index: u64) -> Result<Option<TreeExpr>, TreeError> {
        match self {
            ChildGen::Finite { items } => Ok(items.get(index as usize).cloned()),
            ChildGen::Blossom { ordinal } => {
                if ordinal.is_zero() {
                    return Err(TreeError::BlossomZero);
                }
                Ok(Some(blossom(&ordinal.fund_seq(index)?)))
            }
            ChildGen::Subselect { offset, stride, inner } => {
                if *stride == 0 {
                    return Err(TreeError::StrideZero);
                }
                inner.child(offset + index * stride)
            }
        }
    }

    /// The ordinal of the underlying blossom generator, looking through
    /// subselect layers. `None` for finite child lists.
    fn blossom_ordinal(&self) -> Option<&Ordinal> {
        match self {
            ChildGen::Finite { .. } => None,
            ChildGen::Blossom { ordinal } => Some(ordinal),
            ChildGen::Subselect { inner, .. } => inner.blossom_ordinal(),
        }
    }

    fn validate(&self) -> Result<(), TreeError> {
        match self {
            ChildGen::Finite { items } => {
                if items.is_empty() {
                    return Err(TreeError::EmptyChildList);
                }
                items.iter().try_for_each(TreeExpr::validate)
            }
            ChildGen::Blossom { ordinal } => {
                if ordinal.is_zero() {
                    Err(TreeError::BlossomZero)
                } else {
                    Ok(())
                }
            }
            ChildGen::Subselect { stride, inner, .. } => {
                if *stride == 0 {
                    return Err(TreeError::StrideZero);
                }
                inner.validate()
            }
        }
    }
}

/// The canonical blossomed tree `T_xi`: a single leaf for `xi = 0`, otherwise
/// a root whose n-th child is the tree for the n-th fundamental-sequence
/// value of `xi`.
pub fn blossom(xi: &Ordinal) -> TreeExpr {
    if xi.is_zero() {
        TreeExpr::Leaf
    } else {
        TreeExpr::Node {
            children: ChildGen::Blossom { ordinal: xi.clone() },
        }
    }
}

impl TreeExpr {
    pub fn finite_node(items: Vec<TreeExpr>) -> TreeExpr {
        TreeExpr::Node {
            children: ChildGen::Finite { items },
        }
    }

    /// A chain of `len` nodes (`len >= 1`).
    pub fn chain(len: usize) -> TreeExpr {
        let mut t = TreeExpr::Leaf;
        for _ in 1..len {
            t = TreeExpr::finite_node(vec![t]);
        }
        t
    }

    pub fn validate(&self) -> Result<(), TreeError> {
        match self {
            TreeExpr::Leaf => Ok(()),
            TreeExpr::Node { children } => children.validate(),
        }
    }

    pub fn arity(&self) -> Arity {
        match self {
            TreeExpr::Leaf => Arity::Finite(0),
            TreeExpr::Node { children } => children.arity(),
        }
    }

    pub fn child(&self, index: u64) -> Result<Option<TreeExpr>, TreeError> {
        match self {
            TreeExpr::Leaf => Ok(None),
            TreeExpr::Node { children } => children.child(index),
        }
    }

    /// The subtree rooted at `id`, if the node exists.
    pub fn resolve(&self, id: &NodeId) -> Result<TreeExpr, TreeError> {
        let mut current = self.clone();
        for &step in &id.0 {
            current = current
                .child(step)?
                .ok_or_else(|| TreeError::InvalidNode(id.clone()))?;
        }
        Ok(current)
    }

    pub fn node_exists(&self, id: &NodeId) -> bool {
        self.resolve(id).is_ok()
    }

    /// True iff the denoted tree is finite (no blossom generator anywhere).
    pub fn is_finite(&self) -> bool {
        match self {
            TreeExpr::Leaf => true,
            TreeExpr::Node { children } => match children {
                ChildGen::Finite { items } => items.iter().all(TreeExpr::is_finite),
                ChildGen::Blossom { .. } => false,
                ChildGen::Subselect { .. } => matches!(children.arity(), Arity::Finite(_)),
            },
        }
    }

    /// Rank of the root node: 0 for leaves, else the supremum of child
    /// ranks plus one. For omega-branching generators the supremum of the
    /// fundamental-sequence child ranks collapses to the blossom ordinal.
    pub fn rank_root(&self) -> Result<Ordinal, TreeError> {
        match self {
            TreeExpr::Leaf => Ok(Ordinal::zero()),
            TreeExpr::Node { children } => match children.arity() {
                Arity::Finite(0) => Err(TreeError::EmptyChildList),
                Arity::Finite(n) => {
                    let mut best = Ordinal::zero();
                    for i in 0..n as u64 {
                        let child = children.child(i)?.expect("index within arity");
                        let r = child.rank_root()?.add(&Ordinal::one());
                        if r > best {
                            best = r;
                        }
                    }
                    Ok(best)
                }
                Arity::Omega => {
                    // sup over a cofinal subsequence of fund_seq(xi, .) + 1,
                    // which is xi both for limits and successors.
                    let xi = children
                        .blossom_ordinal()
                        .expect("omega arity implies a blossom generator");
                    if xi.is_zero() {
                        return Err(TreeError::BlossomZero);
                    }
                    Ok(xi.clone())
                }
            },
        }
    }
}

/// Prefix-order comparison of two nodes of `tree`; errors on invalid nodes.
pub fn leq(tree: &TreeExpr, s: &NodeId, t: &NodeId) -> Result<bool, TreeError> {
    if !tree.node_exists(s) {
        return Err(TreeError::InvalidNode(s.clone()));
    }
    if !tree.node_exists(t) {
        return Err(TreeError::InvalidNode(t.clone()));
    }
    Ok(s.is_prefix_of(t))
}

/// Height of a node of `tree` (its path length); errors on invalid nodes.
pub fn height(tree: &TreeExpr, t: &NodeId) -> Result<u64, TreeError> {
    if !tree.node_exists(t) {
        return Err(TreeError::InvalidNode(t.clone()));
    }
    Ok(t.height())
}

/// Rank of a node inside its ambient tree.
pub fn rank_node(tree: &TreeExpr, t: &NodeId) -> Result<Ordinal, TreeError> {
    tree.resolve(t)?.rank_root()
}

/// Rank of the whole (rooted) tree: root rank plus one.
pub fn rank_tree(tree: &TreeExpr) -> Result<Ordinal, TreeError> {
    Ok(tree.rank_root()?.add(&Ordinal::one()))
}

// ---------------------------------------------------------------------------
// Transfinite derivation
// ---------------------------------------------------------------------------

/// The derived tree `T^(xi)`: membership is `rank >= level`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivedView {
    pub base: TreeExpr,
    pub level: Ordinal,
}

impl DerivedView {
    pub fn contains(&self, t: &NodeId) -> Result<bool, TreeError> {
        Ok(rank_node(&self.base, t)? >= self.level)
    }

    pub fn is_empty(&self) -> Result<bool, TreeError> {
        Ok(self.level >= rank_tree(&self.base)?)
    }
}

pub fn derive(tree: &TreeExpr, xi: &Ordinal) -> DerivedView {
    DerivedView {
        base: tree.clone(),
        level: xi.clone(),
    }
}

/// Is `t` maximal in the view, i.e. does it belong to `T^[level]`?
pub fn is_max(tree: &TreeExpr, view: &DerivedView, t: &NodeId) -> Result<bool, TreeError> {
    let rank = rank_node(tree, t)?;
    if rank < view.level {
        return Err(TreeError::NotInView(t.clone()));
    }
    Ok(rank == view.level)
}

// ---------------------------------------------------------------------------
// Enumerations
// ---------------------------------------------------------------------------

/// Breadth-first, order-compatible enumeration of (a truncation of) the
/// tree: whenever `tau(l)` precedes `tau(m)` in the tree, `l <= m`.
pub fn enumerate_compatible(tree: &TreeExpr, budget: usize) -> Result<Vec<NodeId>, TreeError> {
    if budget == 0 {
        return Err(TreeError::BudgetZero);
    }
    let mut out = Vec::new();
    let mut queue: VecDeque<(NodeId, TreeExpr)> = VecDeque::new();
    queue.push_back((NodeId::root(), tree.clone()));
    while let Some((id, expr)) = queue.pop_front() {
        out.push(id.clone());
        if out.len() == budget {
            break;
        }
        match expr.arity() {
            Arity::Finite(n) => {
                for i in 0..n as u64 {
                    queue.push_back((id.child(i), expr.child(i)?.unwrap()));
                }
            }
            Arity::Omega => {
                // Fill the remaining budget from this level; deeper nodes are
                // unreachable past an omega fan in breadth-first order.
                let remaining = (budget - out.len()) as u64;
                for i in 0..remaining {
                    queue.push_back((id.child(i), expr.child(i)?.unwrap()));
                }
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Explicit finite trees
// ---------------------------------------------------------------------------

/// An explicit finite rooted tree given by a parent map, with elision marks
/// recording where a truncation cut off children.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinTree {
    /// `parent[i]` is the parent index of node `i`; exactly one root.
    pub parent: Vec<Option<usize>>,
    /// `elided[i]` is true when node `i` has children not represented here.
    pub elided: Vec<bool>,
}

impl FinTree {
    pub fn new(parent: Vec<Option<usize>>) -> Result<Self, TreeError> {
        let elided = vec![false; parent.len()];
        FinTree::with_elision(parent, elided)
    }

    pub fn with_elision(parent: Vec<Option<usize>>, elided: Vec<bool>) -> Result<Self, TreeError> {
        if parent.len() > max_nodes() {
            return Err(TreeError::NodeBound(max_nodes()));
        }
        if parent.is_empty() {
            return Err(TreeError::Malformed("tree must be nonempty".into()));
        }
        if elided.len() != parent.len() {
            return Err(TreeError::Malformed("elision mask length mismatch".into()));
        }
        let roots: Vec<usize> = parent
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_none())
            .map(|(i, _)| i)
            .collect();
        if roots.len() != 1 {
            return Err(TreeError::Malformed(format!(
                "expected exactly one root, found {}",
                roots.len()
            )));
        }
        let tree = FinTree { parent, elided };
        // Every node must reach the root without cycles.
        for start in 0..tree.parent.len() {
            let mut current = start;
            let mut steps = 0;
            while let Some(p) = tree.parent[current] {
                if p >= tree.parent.len() || steps > tree.parent.len() {
                    return Err(TreeError::Malformed("cycle or dangling parent".into()));
                }
                current = p;
                steps += 1;
            }
        }
        Ok(tree)
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn root(&self) -> usize {
        self.parent.iter().position(|p| p.is_none()).unwrap()
    }

    /// Children of `node`, in index order.
    pub fn children(&self, node: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.parent[i] == Some(node))
            .collect()
    }

    /// True iff `a` lies on the root path of `b` (inclusive).
    pub fn leq(&self, a: usize, b: usize) -> bool {
        let mut current = b;
        loop {
            if current == a {
                return true;
            }
            match self.parent[current] {
                Some(p) => current = p,
                None => return false,
            }
        }
    }

    pub fn depth(&self, node: usize) -> usize {
        let mut d = 0;
        let mut current = node;
        while let Some(p) = self.parent[current] {
            current = p;
            d += 1;
        }
        d
    }

    /// Converts to a constructor-algebra tree; child numbering follows
    /// [`FinTree::children`] order. Elision marks are dropped.
    pub fn to_expr(&self) -> TreeExpr {
        self.subtree_expr(self.root())
    }

    fn subtree_expr(&self, node: usize) -> TreeExpr {
        let kids = self.children(node);
        if kids.is_empty() {
            TreeExpr::Leaf
        } else {
            TreeExpr::finite_node(kids.iter().map(|&k| self.subtree_expr(k)).collect())
        }
    }
}

/// Canonical order-isomorphism of a finite rooted tree onto a downwards
/// closed subtree of Omega: children are numbered `0..k` in index order.
pub fn omega_code(tree: &FinTree) -> BTreeMap<usize, NodeId> {
    let mut map = BTreeMap::new();
    let mut queue = VecDeque::new();
    queue.push_back((tree.root(), NodeId::root()));
    while let Some((node, id)) = queue.pop_front() {
        map.insert(node, id.clone());
        for (i, child) in tree.children(node).into_iter().enumerate() {
            queue.push_back((child, id.child(i as u64)));
        }
    }
    map
}

/// The well-order on the nodes of `tree` induced by the covering sequence
/// `psi`: block `A_beta` consists of the new chain below `psi(beta)`, blocks
/// in sequence order, tree order within a block.
pub fn induced_wellorder(tree: &FinTree, psi: &[usize]) -> Result<Vec<usize>, TreeError> {
    let mut seen: BTreeSet<usize> = BTreeSet::new();
    let mut order = Vec::new();
    for &target in psi {
        if target >= tree.len() {
            return Err(TreeError::Malformed(format!("psi names node {target}")));
        }
        // Chain below the target, root first.
        let mut chain = Vec::new();
        let mut current = target;
        loop {
            chain.push(current);
            match tree.parent[current] {
                Some(p) => current = p,
                None => break,
            }
        }
        chain.reverse();
        for node in chain {
            if seen.insert(node) {
                order.push(node);
            }
        }
    }
    if let Some(missing) = (0..tree.len()).find(|n| !seen.contains(n)) {
        return Err(TreeError::PsiNotSurjective(missing));
    }
    Ok(order)
}

/// Iterative leaf-stripping: returns for each node the step at which it is
/// removed as a maximal element. Elision marks are ignored; see
/// [`leaf_strip_ranks_strict`] for the elision-safe variant.
pub fn leaf_strip_ranks(tree: &FinTree) -> Vec<u64> {
    let mut ranks = vec![0u64; tree.len()];
    let mut alive: BTreeSet<usize> = (0..tree.len()).collect();
    let mut step = 0u64;
    while !alive.is_empty() {
        let maximal: Vec<usize> = alive
            .iter()
            .copied()
            .filter(|&n| tree.children(n).iter().all(|c| !alive.contains(c)))
            .collect();
        for n in maximal {
            ranks[n] = step;
            alive.remove(&n);
        }
        step += 1;
    }
    ranks
}

/// Elision-safe leaf-stripping: ranks only nodes whose entire subtree is
/// represented, so a truncated node is never misread as maximal.
pub fn leaf_strip_ranks_strict(tree: &FinTree) -> Vec<Option<u64>> {
    // A node is complete when it is not elided and all children are; node
    // indices are not guaranteed topological, so iterate to a fixpoint.
    let mut complete = vec![true; tree.len()];
    let mut changed = true;
    while changed {
        changed = false;
        for node in 0..tree.len() {
            let ok = !tree.elided[node] && tree.children(node).iter().all(|&c| complete[c]);
            if complete[node] != ok {
                complete[node] = ok;
                changed = true;
            }
        }
    }
    let full = leaf_strip_ranks(tree);
    (0..tree.len())
        .map(|n| if complete[n] { Some(full[n]) } else { None })
        .collect()
}

// ---------------------------------------------------------------------------
// Truncation
// ---------------------------------------------------------------------------

/// Finite window of a lazy tree: keeps nodes of height at most `depth` whose
/// path indices are all below `width`, marking elisions.
pub fn truncate(tree: &TreeExpr, depth: u64, width: u64) -> Result<FinTree, TreeError> {
    let mut parent: Vec<Option<usize>> = Vec::new();
    let mut elided: Vec<bool> = Vec::new();
    let mut ids: Vec<NodeId> = Vec::new();
    let mut queue: VecDeque<(Option<usize>, NodeId, TreeExpr)> = VecDeque::new();
    queue.push_back((None, NodeId::root(), tree.clone()));
    while let Some((parent_index, id, expr)) = queue.pop_front() {
        let index = parent.len();
        if index >= max_nodes() {
            return Err(TreeError::NodeBound(max_nodes()));
        }
        parent.push(parent_index);
        ids.push(id.clone());
        let (kept, cut) = match expr.arity() {
            Arity::Finite(n) => {
                let all = n as u64;
                let kept = if id.height() < depth { all.min(width) } else { 0 };
                (kept, kept < all)
            }
            Arity::Omega => {
                let kept = if id.height() < depth { width } else { 0 };
                (kept, true)
            }
        };
        elided.push(cut);
        for i in 0..kept {
            queue.push_back((Some(index), id.child(i), expr.child(i)?.unwrap()));
        }
    }
    FinTree::with_elision(parent, elided)
}

/// Node addresses of a truncation, aligned with its node indices.
pub fn truncation_ids(tree: &TreeExpr, depth: u64, width: u64) -> Result<Vec<NodeId>, TreeError> {
    let fin = truncate(tree, depth, width)?;
    let mut ids = vec![NodeId::root(); fin.len()];
    // Reconstruct by BFS in the same order truncate used.
    let mut child_counter = vec![0u64; fin.len()];
    for i in 1..fin.len() {
        let p = fin.parent[i].unwrap();
        ids[i] = ids[p].child(child_counter[p]);
        child_counter[p] += 1;
    }
    Ok(ids)
}

// ---------------------------------------------------------------------------
// Full subtrees and the star forest
// ---------------------------------------------------------------------------

/// Applies the child subselection at every omega-branching generator,
/// producing a full subtree with the same rank.
pub fn full_subtree(tree: &TreeExpr, offset: u64, stride: u64) -> Result<TreeExpr, TreeError> {
    if stride == 0 {
        return Err(TreeError::StrideZero);
    }
    match tree {
        TreeExpr::Leaf => Ok(TreeExpr::Leaf),
        TreeExpr::Node { children } => {
            if children.blossom_ordinal().is_none() {
                return Err(TreeError::FiniteChildren);
            }
            Ok(TreeExpr::Node {
                children: ChildGen::Subselect {
                    offset,
                    stride,
                    inner: Box::new(children.clone()),
                },
            })
        }
    }
}

/// The forest `T \ MIN(T)`: the root's child subtrees, addresses unchanged.
#[derive(Debug, Clone)]
pub struct Forest {
    pub base: TreeExpr,
}

pub fn star(tree: &TreeExpr) -> Forest {
    Forest { base: tree.clone() }
}

impl Forest {
    pub fn arity(&self) -> Arity {
        self.base.arity()
    }

    pub fn component(&self, n: u64) -> Result<Option<TreeExpr>, TreeError> {
        self.base.child(n)
    }
}

// ---------------------------------------------------------------------------
// Order embeddings into blossomed trees
// ---------------------------------------------------------------------------

/// Order-embedding of a finite rooted tree onto a downwards closed subtree
/// of `blossom(xi)`. Children are matched greedily in non-increasing rank
/// order to the leftmost unused target child of sufficient rank.
pub fn embed(tree: &TreeExpr, xi: &Ordinal) -> Result<BTreeMap<NodeId, NodeId>, TreeError> {
    if !tree.is_finite() {
        return Err(TreeError::NotFinite);
    }
    let rank = rank_tree(tree)?;
    let target_rank = xi.add(&Ordinal::one());
    if rank > target_rank {
        return Err(TreeError::RankTooLarge { rank, target: target_rank });
    }
    let mut map = BTreeMap::new();
    embed_into(tree, &NodeId::root(), xi, &NodeId::root(), &mut map)?;
    Ok(map)
}

fn embed_into(
    sub: &TreeExpr,
    source: &NodeId,
    target_ord: &Ordinal,
    target: &NodeId,
    map: &mut BTreeMap<NodeId, NodeId>,
) -> Result<(), TreeError> {
    map.insert(source.clone(), target.clone());
    let n = match sub.arity() {
        Arity::Finite(n) => n,
        Arity::Omega => return Err(TreeError::NotFinite),
    };
    if n == 0 {
        return Ok(());
    }
    // Process children by non-increasing rank; ties by child index.
    let mut ranked: Vec<(Ordinal, u64, TreeExpr)> = Vec::new();
    for i in 0..n as u64 {
        let child = sub.child(i)?.unwrap();
        ranked.push((child.rank_root()?, i, child));
    }
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut used: BTreeSet<u64> = BTreeSet::new();
    for (child_rank, child_index, child) in ranked {
        // Leftmost unused target child of rank at least the child's rank.
        // The target's child ranks are non-decreasing and cofinal in
        // target_ord, so the scan terminates.
        let mut slot = 0u64;
        let slot_ord = loop {
            if !used.contains(&slot) {
                let candidate = target_ord.fund_seq(slot)?;
                if candidate >= child_rank {
                    break candidate;
                }
            }
            slot += 1;
        };
        used.insert(slot);
        embed_into(
            &child,
            &source.child(child_index),
            &slot_ord,
            &target.child(slot),
            map,
        )?;
    }
    Ok(())
}

/// Independent verifier for embeddings: root to root, totality, injectivity,
/// two-sided order preservation, image validity and downward closure.
pub fn verify_embedding(
    source: &TreeExpr,
    target: &TreeExpr,
    map: &BTreeMap<NodeId, NodeId>,
) -> Result<(), String> {
    if !source.is_finite() {
        return Err("source tree must be finite".into());
    }
    let nodes = enumerate_compatible(source, max_nodes()).map_err(|e| e.to_string())?;
    for node in &nodes {
        if !map.contains_key(node) {
            return Err(format!("node {node} has no image"));
        }
    }
    if map.len() != nodes.len() {
        return Err("map domain is not exactly the source node set".into());
    }
    match map.get(&NodeId::root()) {
        Some(image) if *image == NodeId::root() => {}
        _ => return Err("root is not mapped to the root".into()),
    }
    let mut images: BTreeSet<&NodeId> = BTreeSet::new();
    for (node, image) in map {
        if !target.node_exists(image) {
            return Err(format!("image {image} of {node} is not a target node"));
        }
        if !images.insert(image) {
            return Err(format!("image {image} is hit twice"));
        }
    }
    for (a, fa) in map {
        for (b, fb) in map {
            if a.is_prefix_of(b) != fa.is_prefix_of(fb) {
                return Err(format!(
                    "order not preserved on ({a}, {b}) -> ({fa}, {fb})"
                ));
            }
        }
    }
    for image in map.values() {
        if let Some(parent) = image.parent() {
            if !images.contains(&parent) {
                return Err(format!("image not downwards closed at {image}"));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// DOT export
// ---------------------------------------------------------------------------

/// Graphviz DOT rendering of a truncation, each node annotated with its
/// structural rank; output ordering is stable.
pub fn dot(tree: &TreeExpr, depth: u64, width: u64) -> Result<String, TreeError> {
    let fin = truncate(tree, depth, width)?;
    let ids = truncation_ids(tree, depth, width)?;
    let mut out = String::from("digraph tree {\n  node [shape=box];\n");
    for (i, id) in ids.iter().enumerate() {
        let rank = rank_node(tree, id)?;
        let marker = if fin.elided[i] { " …" } else { "" };
        out.push_str(&format!(
            "  n{i} [label=\"{id}\\nrank {rank}{marker}\"];\n"
        ));
    }
    for (i, p) in fin.parent.iter().enumerate() {
        if let Some(p) = p {
            out.push_str(&format!("  n{p} -> n{i};\n"));
        }
    }
    out.push_str("}\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ord(s: &str) -> Ordinal {
        s.parse().unwrap()
    }

    fn id(path: &[u64]) -> NodeId {
        NodeId(path.to_vec())
    }

    #[test]
    fn prefix_order_and_height() {
        let t = blossom(&ord("w"));
        assert!(leq(&t, &NodeId::root(), &id(&[3, 1])).unwrap());
        assert!(!leq(&t, &id(&[0]), &id(&[1])).unwrap());
        assert!(leq(&t, &id(&[2, 0]), &id(&[2, 0, 1])).unwrap());
        assert_eq!(height(&t, &NodeId::root()).unwrap(), 0);
        assert_eq!(height(&t, &id(&[3, 2])).unwrap(), 2);
        assert!(matches!(
            leq(&TreeExpr::Leaf, &id(&[0]), &NodeId::root()),
            Err(TreeError::InvalidNode(_))
        ));
    }

    #[test]
    fn blossom_structure() {
        assert_eq!(blossom(&Ordinal::zero()), TreeExpr::Leaf);
        // Child 3 of T_w is T_3 under the canonical scheme.
        let t = blossom(&Ordinal::omega());
        assert_eq!(t.child(3).unwrap().unwrap(), blossom(&ord("3")));
        // Children of a successor blossom are constant at the predecessor.
        let t5 = blossom(&ord("5"));
        assert_eq!(t5.child(7).unwrap().unwrap(), blossom(&ord("4")));
    }

    #[test]
    fn ranks() {
        assert_eq!(rank_tree(&TreeExpr::Leaf).unwrap(), ord("1"));
        for xi in ["1", "w", "w*2", "w^(2)"] {
            let xi = ord(xi);
            assert_eq!(rank_tree(&blossom(&xi)).unwrap(), xi.add(&Ordinal::one()));
        }
        assert_eq!(rank_node(&blossom(&ord("w^(2)")), &NodeId::root()).unwrap(), ord("w^(2)"));
        assert_eq!(rank_node(&blossom(&ord("w")), &id(&[4])).unwrap(), ord("4"));
        assert_eq!(rank_tree(&TreeExpr::chain(4)).unwrap(), ord("4"));
    }

    #[test]
    fn derivation() {
        let t = blossom(&ord("w"));
        assert!(derive(&t, &Ordinal::zero()).contains(&id(&[5, 0])).unwrap());
        assert!(derive(&t, &Ordinal::omega()).contains(&NodeId::root()).unwrap());
        assert!(!derive(&t, &Ordinal::omega()).contains(&id(&[5])).unwrap());
        assert!(derive(&t, &ord("w+1")).is_empty().unwrap());
        let t2 = blossom(&ord("2"));
        let v2 = derive(&t2, &ord("2"));
        assert!(v2.contains(&NodeId::root()).unwrap());
        assert!(!v2.contains(&id(&[0])).unwrap());
    }

    #[test]
    fn maximality() {
        let t = blossom(&ord("w"));
        assert!(is_max(&t, &derive(&t, &Ordinal::zero()), &id(&[3, 0, 0, 0])).unwrap());
        let t1 = blossom(&ord("1"));
        assert!(!is_max(&t1, &derive(&t1, &Ordinal::zero()), &NodeId::root()).unwrap());
        assert!(is_max(&t, &derive(&t, &ord("5")), &id(&[5])).unwrap());
        assert!(matches!(
            is_max(&t, &derive(&t, &ord("5")), &id(&[3])),
            Err(TreeError::NotInView(_))
        ));
    }

    #[test]
    fn enumeration() {
        assert_eq!(
            enumerate_compatible(&TreeExpr::chain(3), 10).unwrap().len(),
            3
        );
        let order = enumerate_compatible(&blossom(&ord("1")), 4).unwrap();
        assert_eq!(order, vec![id(&[]), id(&[0]), id(&[1]), id(&[2])]);
        assert_eq!(
            enumerate_compatible(&TreeExpr::Leaf, 0).unwrap_err(),
            TreeError::BudgetZero
        );
        // Order compatibility on a finite mixed tree.
        let t = TreeExpr::finite_node(vec![TreeExpr::chain(3), TreeExpr::Leaf]);
        let order = enumerate_compatible(&t, 100).unwrap();
        for (l, a) in order.iter().enumerate() {
            for (m, b) in order.iter().enumerate() {
                if a.is_prefix_of(b) {
                    assert!(l <= m);
                }
            }
        }
    }

    #[test]
    fn wellorder_blocks() {
        // Root 0 with leaves 1, 2; covering sequence visits the leaves.
        let t = FinTree::new(vec![None, Some(0), Some(0)]).unwrap();
        let order = induced_wellorder(&t, &[1, 2]).unwrap();
        assert_eq!(order, vec![0, 1, 2]);
        // Chain visited bottom-up keeps its order.
        let chain = FinTree::new(vec![None, Some(0), Some(1)]).unwrap();
        assert_eq!(induced_wellorder(&chain, &[0, 1, 2]).unwrap(), vec![0, 1, 2]);
        assert_eq!(
            induced_wellorder(&chain, &[2, 2]).unwrap(),
            vec![0, 1, 2]
        );
        assert!(matches!(
            induced_wellorder(&t, &[1]),
            Err(TreeError::PsiNotSurjective(_))
        ));
    }

    #[test]
    fn wellorder_extends_tree_order() {
        let t = FinTree::new(vec![None, Some(0), Some(0), Some(1), Some(1)]).unwrap();
        let order = induced_wellorder(&t, &[4, 2, 3]).unwrap();
        let pos = |n: usize| order.iter().position(|&x| x == n).unwrap();
        for a in 0..t.len() {
            for b in 0..t.len() {
                if t.leq(a, b) {
                    assert!(pos(a) <= pos(b));
                }
            }
        }
    }

    #[test]
    fn truncation() {
        let single = truncate(&TreeExpr::Leaf, 5, 5).unwrap();
        assert_eq!(single.len(), 1);
        assert!(!single.elided[0]);
        let t = truncate(&blossom(&Ordinal::omega()), 1, 3).unwrap();
        assert_eq!(t.len(), 4);
        assert!(t.elided[t.root()]);
    }

    #[test]
    fn leaf_strip_agrees_with_structural_rank() {
        // Full truncation of a finite blossom-free tree.
        let t = TreeExpr::finite_node(vec![TreeExpr::chain(2), TreeExpr::Leaf]);
        let fin = truncate(&t, 10, 10).unwrap();
        let ids = truncation_ids(&t, 10, 10).unwrap();
        let strip = leaf_strip_ranks(&fin);
        for (i, id) in ids.iter().enumerate() {
            assert_eq!(
                rank_node(&t, id).unwrap(),
                Ordinal::from_nat(strip[i])
            );
        }
    }

    #[test]
    fn strict_strip_respects_elision() {
        let fin = truncate(&blossom(&ord("2")), 10, 2).unwrap();
        let ids = truncation_ids(&blossom(&ord("2")), 10, 2).unwrap();
        let strict = leaf_strip_ranks_strict(&fin);
        for (i, rank) in strict.iter().enumerate() {
            if let Some(r) = rank {
                assert_eq!(
                    rank_node(&blossom(&ord("2")), &ids[i]).unwrap(),
                    Ordinal::from_nat(*r)
                );
            }
        }
        // The elided root must not be ranked.
        assert!(strict[fin.root()].is_none());
    }

    #[test]
    fn full_subtrees() {
        let t = blossom(&Ordinal::omega());
        assert_eq!(
            rank_tree(&full_subtree(&t, 0, 2).unwrap()).unwrap(),
            ord("w+1")
        );
        let identity = full_subtree(&t, 0, 1).unwrap();
        assert_eq!(rank_tree(&identity).unwrap(), ord("w+1"));
        assert_eq!(identity.child(4).unwrap().unwrap(), t.child(4).unwrap().unwrap());
        assert_eq!(
            rank_tree(&full_subtree(&blossom(&ord("w^(2)")), 5, 3).unwrap()).unwrap(),
            ord("w^(2)+1")
        );
        assert_eq!(
            full_subtree(&TreeExpr::chain(2), 0, 2).unwrap_err(),
            TreeError::FiniteChildren
        );
    }

    #[test]
    fn star_components() {
        assert!(matches!(star(&TreeExpr::Leaf).arity(), Arity::Finite(0)));
        let f = star(&blossom(&ord("1")));
        assert_eq!(f.component(11).unwrap().unwrap(), TreeExpr::Leaf);
        let f = star(&blossom(&Ordinal::omega()));
        for n in 0..5u64 {
            assert_eq!(
                rank_tree(&f.component(n).unwrap().unwrap()).unwrap(),
                Ordinal::from_nat(n).add(&Ordinal::one())
            );
        }
    }

    #[test]
    fn embedding_examples() {
        let map = embed(&TreeExpr::Leaf, &ord("w")).unwrap();
        assert_eq!(map.len(), 1);
        verify_embedding(&TreeExpr::Leaf, &blossom(&ord("w")), &map).unwrap();

        let chain = TreeExpr::chain(2);
        let map = embed(&chain, &ord("1")).unwrap();
        verify_embedding(&chain, &blossom(&ord("1")), &map).unwrap();

        let t = TreeExpr::finite_node(vec![TreeExpr::chain(2), TreeExpr::Leaf, TreeExpr::chain(3)]);
        let map = embed(&t, &ord("3")).unwrap();
        verify_embedding(&t, &blossom(&ord("3")), &map).unwrap();

        assert!(matches!(
            embed(&TreeExpr::chain(3), &ord("1")),
            Err(TreeError::RankTooLarge { .. })
        ));
    }

    #[test]
    fn verifier_rejects_corruption() {
        let t = TreeExpr::finite_node(vec![TreeExpr::Leaf, TreeExpr::Leaf]);
        let mut map = embed(&t, &ord("1")).unwrap();
        let keys: Vec<NodeId> = map.keys().cloned().collect();
        let (a, b) = (keys[1].clone(), keys[2].clone());
        let (fa, fb) = (map[&a].clone(), map[&b].clone());
        map.insert(a, fb);
        map.insert(b, fa);
        // Swapping two sibling images keeps it a valid embedding...
        assert!(verify_embedding(&t, &blossom(&ord("1")), &map).is_ok());
        // ...but skipping a level breaks downward closure.
        let chain = TreeExpr::chain(2);
        let mut bad = embed(&chain, &ord("2")).unwrap();
        bad.insert(NodeId(vec![0]), NodeId(vec![5, 0]));
        assert!(verify_embedding(&chain, &blossom(&ord("2")), &bad).is_err());
    }

    #[test]
    fn omega_code_is_downwards_closed() {
        let t = FinTree::new(vec![None, Some(0), Some(0), Some(2)]).unwrap();
        let code = omega_code(&t);
        assert_eq!(code[&t.root()], NodeId::root());
        let images: BTreeSet<&NodeId> = code.values().collect();
        for id in code.values() {
            if let Some(parent) = id.parent() {
                assert!(images.contains(&parent));
            }
        }
        assert_eq!(images.len(), t.len());
    }

    #[test]
    fn json_formats() {
        let t = blossom(&ord("w^(2)"));
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(json, r#"{"kind":"node","children":{"kind":"blossom","ordinal":"w^(2)"}}"#);
        let back: TreeExpr = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
        let sub = serde_json::to_string(&full_subtree(&t, 0, 2).unwrap()).unwrap();
        assert!(sub.contains(r#""kind":"subselect""#));
        let leaf: TreeExpr = serde_json::from_str(r#"{"kind":"leaf"}"#).unwrap();
        assert_eq!(leaf, TreeExpr::Leaf);
        let node_id: NodeId = serde_json::from_str("[0,2,1]").unwrap();
        assert_eq!(node_id, NodeId(vec![0, 2, 1]));
    }

    #[test]
    fn dot_is_stable() {
        let a = dot(&blossom(&ord("2")), 2, 2).unwrap();
        let b = dot(&blossom(&ord("2")), 2, 2).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("digraph tree {"));
        assert!(a.contains("rank 2"));
    }
}
