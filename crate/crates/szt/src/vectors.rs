//! Finitely supported exact-rational vectors over tree nodes, the summing
//! operators `Sigma_T` and `sigma0_T` as exact step functions, and the three
//! norms of interest: `l1`, sup, and the James tree norm computed over
//! pairwise disjoint chain intervals.

use std::collections::{BTreeMap, BTreeSet};

use num::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rat::{format_rat, parse_rat, sqrt_enclosure, Rat};
use crate::tree::{NodeId, TreeError, TreeExpr};

/// Default cap on support size for the James norm search.
pub const JAMES_SUPPORT_CAP: usize = 14;

#[derive(Debug, Error, PartialEq)]
pub enum VectorError {
    #[error("node {0} does not belong to the ambient tree")]
    InvalidNode(NodeId),
    #[error("support contains the root; the reduced summing operator needs a root-free vector")]
    RootInSupport,
    #[error("support size {len} exceeds the cap {cap} for the James norm search")]
    SupportTooLarge { len: usize, cap: usize },
    #[error("bad rational: {0}")]
    Rational(String),
    #[error("bad JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

// ---------------------------------------------------------------------------
// Supported vectors
// ---------------------------------------------------------------------------

/// A finitely supported vector over the nodes of an ambient tree. Zero
/// entries are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SuppVec {
    ambient: TreeExpr,
    entries: BTreeMap<NodeId, Rat>,
}

#[derive(Serialize, Deserialize)]
struct VecDto {
    entries: Vec<EntryDto>,
}

#[derive(Serialize, Deserialize)]
struct EntryDto {
    node: Vec<u64>,
    value: String,
}

impl SuppVec {
    pub fn new(ambient: TreeExpr, entries: BTreeMap<NodeId, Rat>) -> Result<Self, VectorError> {
        for node in entries.keys() {
            if !ambient.node_exists(node) {
                return Err(VectorError::InvalidNode(node.clone()));
            }
        }
        let entries = entries.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        Ok(SuppVec { ambient, entries })
    }

    pub fn zero(ambient: TreeExpr) -> Self {
        SuppVec { ambient, entries: BTreeMap::new() }
    }

    /// The unit vector `e_t`.
    pub fn unit(ambient: TreeExpr, t: NodeId) -> Result<Self, VectorError> {
        Self::new(ambient, BTreeMap::from([(t, Rat::from_integer(1.into()))]))
    }

    pub fn ambient(&self) -> &TreeExpr {
        &self.ambient
    }

    pub fn entries(&self) -> &BTreeMap<NodeId, Rat> {
        &self.entries
    }

    pub fn support(&self) -> impl Iterator<Item = &NodeId> {
        self.entries.keys()
    }

    pub fn get(&self, t: &NodeId) -> Rat {
        self.entries.get(t).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn add(&self, other: &SuppVec) -> SuppVec {
        let mut entries = self.entries.clone();
        for (node, value) in &other.entries {
            let sum = entries.get(node).cloned().unwrap_or_else(Rat::zero) + value;
            if sum.is_zero() {
                entries.remove(node);
            } else {
                entries.insert(node.clone(), sum);
            }
        }
        SuppVec { ambient: self.ambient.clone(), entries }
    }

    pub fn scale(&self, c: &Rat) -> SuppVec {
        if c.is_zero() {
            return SuppVec::zero(self.ambient.clone());
        }
        SuppVec {
            ambient: self.ambient.clone(),
            entries: self.entries.iter().map(|(n, v)| (n.clone(), v * c)).collect(),
        }
    }

    pub fn sub(&self, other: &SuppVec) -> SuppVec {
        self.add(&other.scale(&Rat::from_integer((-1).into())))
    }

    /// Restriction to the subtree under the root child `n` (entries whose
    /// path starts with `n`).
    pub fn branch_restrict(&self, n: u64) -> SuppVec {
        SuppVec {
            ambient: self.ambient.clone(),
            entries: self
                .entries
                .iter()
                .filter(|(node, _)| node.0.first() == Some(&n))
                .map(|(node, v)| (node.clone(), v.clone()))
                .collect(),
        }
    }

    /// The `l∞` size of the coefficient vector itself.
    pub fn linf_entries(&self) -> Rat {
        self.entries.values().map(|v| v.abs()).max().unwrap_or_else(Rat::zero)
    }

    pub fn to_json(&self) -> String {
        let dto = VecDto {
            entries: self
                .entries
                .iter()
                .map(|(node, value)| EntryDto { node: node.0.clone(), value: format_rat(value) })
                .collect(),
        };
        serde_json::to_string(&dto).expect("vector serialization")
    }

    pub fn from_json(ambient: TreeExpr, json: &str) -> Result<Self, VectorError> {
        let dto: VecDto = serde_json::from_str(json).map_err(|e| VectorError::Json(e.to_string()))?;
        let mut entries = BTreeMap::new();
        for entry in dto.entries {
            let value = parse_rat(&entry.value).map_err(VectorError::Rational)?;
            entries.insert(NodeId(entry.node), value);
        }
        Self::new(ambient, entries)
    }
}

pub fn l1_norm(v: &SuppVec) -> Rat {
    v.entries.values().map(|x| x.abs()).sum()
}

// ---------------------------------------------------------------------------
// Step functions
// ---------------------------------------------------------------------------

/// An exact step function on the tree, stored on the downward closure of a
/// finite support; any other node evaluates through its deepest stored
/// ancestor. The region of a stored node (points whose deepest stored
/// ancestor it is) always contains the node itself, so every region is
/// nonempty.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFn {
    values: BTreeMap<NodeId, Rat>,
}

#[derive(Serialize, Deserialize)]
struct StepDto {
    regions: Vec<RegionDto>,
}

#[derive(Serialize, Deserialize)]
struct RegionDto {
    apex: Vec<u64>,
    excluded: Vec<Vec<u64>>,
    value: String,
}

impl StepFn {
    pub fn zero() -> Self {
        StepFn { values: BTreeMap::new() }
    }

    pub fn values(&self) -> &BTreeMap<NodeId, Rat> {
        &self.values
    }

    pub fn eval(&self, t: &NodeId) -> Rat {
        self.values
            .iter()
            .filter(|(k, _)| k.is_prefix_of(t))
            .max_by_key(|(k, _)| k.0.len())
            .map(|(_, v)| v.clone())
            .unwrap_or_else(Rat::zero)
    }

    pub fn scale(&self, c: &Rat) -> StepFn {
        StepFn { values: self.values.iter().map(|(k, v)| (k.clone(), v * c)).collect() }
    }

    pub fn add(&self, other: &StepFn) -> StepFn {
        let keys: BTreeSet<&NodeId> = self.values.keys().chain(other.values.keys()).collect();
        StepFn {
            values: keys
                .into_iter()
                .map(|k| (k.clone(), self.eval(k) + other.eval(k)))
                .collect(),
        }
    }

    pub fn sub(&self, other: &StepFn) -> StepFn {
        self.add(&other.scale(&Rat::from_integer((-1).into())))
    }

    /// Pointwise equality as functions on the whole tree (domains may
    /// differ after cancellation).
    pub fn func_eq(&self, other: &StepFn) -> bool {
        self.values
            .keys()
            .chain(other.values.keys())
            .all(|k| self.eval(k) == other.eval(k))
    }

    pub fn to_json(&self) -> String {
        let regions = self
            .values
            .iter()
            .map(|(apex, value)| {
                // Exclude the wedges at the minimal stored strict
                // descendants: the region is the wedge at `apex` minus them.
                let excluded = self
                    .values
                    .keys()
                    .filter(|d| apex.is_prefix_of(d) && *d != apex)
                    .filter(|d| {
                        !self
                            .values
                            .keys()
                            .any(|m| m != apex && *m != **d && apex.is_prefix_of(m) && m.is_prefix_of(d))
                    })
                    .map(|d| d.0.clone())
                    .collect();
                RegionDto { apex: apex.0.clone(), excluded, value: format_rat(value) }
            })
            .collect();
        serde_json::to_string(&StepDto { regions }).expect("step serialization")
    }
}

/// Maximum absolute value over the (all nonempty) regions.
pub fn sup_norm(f: &StepFn) -> Rat {
    f.values.values().map(|v| v.abs()).max().unwrap_or_else(Rat::zero)
}

/// The summing operator: `(Sigma v)(t)` is the sum of the entries on the
/// chain below `t`.
pub fn sigma_apply(v: &SuppVec) -> StepFn {
    let mut closure: BTreeSet<NodeId> = BTreeSet::new();
    for node in v.support() {
        for depth in 0..=node.0.len() {
            closure.insert(NodeId(node.0[..depth].to_vec()));
        }
    }
    StepFn {
        values: closure
            .into_iter()
            .map(|t| {
                let sum = v
                    .entries
                    .iter()
                    .filter(|(s, _)| s.is_prefix_of(&t))
                    .map(|(_, x)| x.clone())
                    .sum();
                (t, sum)
            })
            .collect(),
    }
}

/// The reduced summing operator on root-free vectors; its output vanishes
/// at the root.
pub fn sigma0_apply(v: &SuppVec) -> Result<StepFn, VectorError> {
    if v.entries.contains_key(&NodeId::root()) {
        return Err(VectorError::RootInSupport);
    }
    Ok(sigma_apply(v))
}

// ---------------------------------------------------------------------------
// James tree norm
// ---------------------------------------------------------------------------

/// The James norm reported exactly: the maximized sum of squared interval
/// sums, plus a certified decimal enclosure of its square root.
#[derive(Debug, Clone, PartialEq)]
pub struct JamesNorm {
    pub squared: Rat,
    pub enclosure: (f64, f64),
}

impl JamesNorm {
    pub fn approx(&self) -> f64 {
        (self.enclosure.0 + self.enclosure.1) / 2.0
    }
}

fn from_squared(squared: Rat) -> JamesNorm {
    let enclosure = sqrt_enclosure(&squared);
    JamesNorm { squared, enclosure }
}

/// All distinct traces of chain intervals on the support: for comparable
/// `a <= b` the trace is every support node between them. Open and
/// half-open intervals yield no further traces, so closed ones suffice.
fn support_traces(support: &[NodeId], values: &[Rat]) -> Vec<(u32, Rat)> {
    let n = support.len();
    let mut seen: BTreeSet<u32> = BTreeSet::new();
    let mut traces = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if !support[a].is_prefix_of(&support[b]) {
                continue;
            }
            let mask: u32 = (0..n)
                .filter(|&i| support[a].is_prefix_of(&support[i]) && support[i].is_prefix_of(&support[b]))
                .fold(0, |m, i| m | (1 << i));
            if seen.insert(mask) {
                let sum: Rat = (0..n)
                    .filter(|&i| mask & (1 << i) != 0)
                    .map(|i| values[i].clone())
                    .sum();
                traces.push((mask, sum));
            }
        }
    }
    traces
}

/// James norm by branch-and-bound over families of pairwise disjoint
/// support traces. Disjoint traces are always realizable by pairwise
/// disjoint closed intervals: intervals with support-node endpoints that
/// met would share a support node.
pub fn james_norm(v: &SuppVec) -> Result<JamesNorm, VectorError> {
    james_norm_capped(v, JAMES_SUPPORT_CAP)
}

pub fn james_norm_capped(v: &SuppVec, cap: usize) -> Result<JamesNorm, VectorError> {
    let len = v.entries.len();
    if len > cap.min(31) {
        return Err(VectorError::SupportTooLarge { len, cap: cap.min(31) });
    }
    let support: Vec<NodeId> = v.entries.keys().cloned().collect();
    let values: Vec<Rat> = v.entries.values().cloned().collect();
    let mut traces: Vec<(u32, Rat)> = support_traces(&support, &values)
        .into_iter()
        .filter(|(_, sum)| !sum.is_zero())
        .map(|(mask, sum)| (mask, &sum * &sum))
        .collect();
    traces.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    // suffix[i] bounds what the traces from position i on could still add.
    let mut suffix: Vec<Rat> = vec![Rat::zero(); traces.len() + 1];
    for i in (0..traces.len()).rev() {
        suffix[i] = &suffix[i + 1] + &traces[i].1;
    }
    let mut best = Rat::zero();
    let mut stack = vec![(0usize, 0u32, Rat::zero())];
    while let Some((i, used, acc)) = stack.pop() {
        if &acc + &suffix[i] <= best && !(acc.is_zero() && best.is_zero()) {
            continue;
        }
        if i == traces.len() {
            if acc > best {
                best = acc;
            }
            continue;
        }
        let (mask, sq) = &traces[i];
        stack.push((i + 1, used, acc.clone()));
        if used & mask == 0 {
            stack.push((i + 1, used | mask, &acc + sq));
        }
    }
    Ok(from_squared(best))
}

fn chain_mask(support: &[NodeId], mask: u32) -> bool {
    let members: Vec<usize> = (0..support.len()).filter(|&i| mask & (1 << i) != 0).collect();
    members.iter().all(|&a| {
        members
            .iter()
            .all(|&b| support[a].is_prefix_of(&support[b]) || support[b].is_prefix_of(&support[a]))
    })
}

fn trace_mask(support: &[NodeId], mask: u32) -> bool {
    if !chain_mask(support, mask) {
        return false;
    }
    let members: Vec<usize> = (0..support.len()).filter(|&i| mask & (1 << i) != 0).collect();
    let min = *members
        .iter()
        .min_by_key(|&&i| support[i].0.len())
        .expect("nonempty block");
    let max = *members
        .iter()
        .max_by_key(|&&i| support[i].0.len())
        .expect("nonempty block");
    (0..support.len())
        .filter(|&i| support[min].is_prefix_of(&support[i]) && support[i].is_prefix_of(&support[max]))
        .all(|i| mask & (1 << i) != 0)
}

/// Exhaustive James norm oracle: every family of disjoint intervals extends
/// to a set partition of the support whose blocks are all traces, so the
/// sup is the best such partition value. Supports up to 8 nodes.
pub fn james_norm_oracle(v: &SuppVec) -> Result<JamesNorm, VectorError> {
    let len = v.entries.len();
    if len > 8 {
        return Err(VectorError::SupportTooLarge { len, cap: 8 });
    }
    let support: Vec<NodeId> = v.entries.keys().cloned().collect();
    let values: Vec<Rat> = v.entries.values().cloned().collect();
    if support.is_empty() {
        return Ok(from_squared(Rat::zero()));
    }
    let mut best = Rat::zero();
    // Restricted growth strings enumerate every set partition once.
    let mut labels = vec![0usize; len];
    enumerate_partitions(&mut labels, 1, 1, &mut |labels, blocks| {
        let mut value = Rat::zero();
        for block in 0..blocks {
            let mask: u32 = (0..len)
                .filter(|&i| labels[i] == block + 1)
                .fold(0, |m, i| m | (1 << i));
            if !trace_mask(&support, mask) {
                return;
            }
            let sum: Rat = (0..len)
                .filter(|&i| mask & (1 << i) != 0)
                .map(|i| values[i].clone())
                .sum();
            value += &sum * &sum;
        }
        if value > best {
            best = value;
        }
    });
    Ok(from_squared(best))
}

fn enumerate_partitions(
    labels: &mut Vec<usize>,
    pos: usize,
    max_used: usize,
    visit: &mut impl FnMut(&[usize], usize),
) {
    if pos > labels.len() {
        visit(labels, max_used);
        return;
    }
    if pos == 1 {
        labels[0] = 1;
        enumerate_partitions(labels, 2, 1, visit);
        return;
    }
    for label in 1..=max_used + 1 {
        labels[pos - 1] = label;
        enumerate_partitions(labels, pos + 1, max_used.max(label), visit);
    }
}

// ---------------------------------------------------------------------------
// Chain inequality, separation, nets
// ---------------------------------------------------------------------------

/// Margins of `sup <= James <= l1`, compared on squared values to stay
/// exact.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainMargins {
    pub holds: bool,
    pub sup_sq: Rat,
    pub james_sq: Rat,
    pub l1_sq: Rat,
    pub lower_gap_sq: Rat,
    pub upper_gap_sq: Rat,
}

pub fn chain_inequality_check(v: &SuppVec) -> Result<ChainMargins, VectorError> {
    let sup = sup_norm(&sigma_apply(v));
    let l1 = l1_norm(v);
    let james = james_norm(v)?;
    let sup_sq = &sup * &sup;
    let l1_sq = &l1 * &l1;
    let lower_gap_sq = &james.squared - &sup_sq;
    let upper_gap_sq = &l1_sq - &james.squared;
    Ok(ChainMargins {
        holds: !lower_gap_sq.is_negative() && !upper_gap_sq.is_negative(),
        sup_sq,
        james_sq: james.squared,
        l1_sq,
        lower_gap_sq,
        upper_gap_sq,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    L1,
    Sup,
}

fn vec_distance(a: &SuppVec, b: &SuppVec, norm: NormKind) -> Rat {
    let diff = a.sub(b);
    match norm {
        NormKind::L1 => l1_norm(&diff),
        NormKind::Sup => diff.linf_entries(),
    }
}

/// Strict pairwise `> eps` separation of coefficient vectors.
pub fn eps_separated(points: &[SuppVec], eps: &Rat, norm: NormKind) -> bool {
    points.iter().enumerate().all(|(i, a)| {
        points[i + 1..]
            .iter()
            .all(|b| vec_distance(a, b, norm) > *eps)
    })
}

/// Strict pairwise `> eps` separation of step functions in sup norm.
pub fn eps_separated_fns(points: &[StepFn], eps: &Rat) -> bool {
    points.iter().enumerate().all(|(i, a)| {
        points[i + 1..]
            .iter()
            .all(|b| sup_norm(&a.sub(b)) > *eps)
    })
}

/// Is `candidates` a delta-net for `targets`: every target within `delta`
/// of some candidate.
pub fn delta_net_check(candidates: &[SuppVec], targets: &[SuppVec], delta: &Rat, norm: NormKind) -> bool {
    targets.iter().all(|t| {
        candidates
            .iter()
            .any(|c| vec_distance(t, c, norm) <= *delta)
    })
}

/// Exact test of `sqrt(sum_sq) <= sqrt(a_sq) + sqrt(b_sq)` on squared
/// values.
pub fn triangle_on_squares(sum_sq: &Rat, a_sq: &Rat, b_sq: &Rat) -> bool {
    let excess = sum_sq - a_sq - b_sq;
    if !excess.is_positive() {
        return true;
    }
    &excess * &excess <= Rat::from_integer(4.into()) * a_sq * b_sq
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ordinal::Ordinal;
    use crate::rat::rat_int;
    use crate::tree::blossom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Deep enough that every path of length <= 6 exists.
    fn ambient() -> TreeExpr {
        blossom(&"w^(6)".parse::<Ordinal>().unwrap())
    }

    fn id(path: &[u64]) -> NodeId {
        NodeId(path.to_vec())
    }

    fn vec_of(pairs: &[(&[u64], i64)]) -> SuppVec {
        let entries = pairs
            .iter()
            .map(|(path, value)| (id(path), rat_int(*value)))
            .collect();
        SuppVec::new(ambient(), entries).unwrap()
    }

    #[test]
    fn l1_examples() {
        assert_eq!(l1_norm(&vec_of(&[(&[3], 1)])), rat_int(1));
        assert_eq!(l1_norm(&SuppVec::zero(ambient())), rat_int(0));
        assert_eq!(l1_norm(&vec_of(&[(&[1], 2), (&[2], -3)])), rat_int(5));
    }

    #[test]
    fn invalid_nodes_rejected() {
        let err = SuppVec::new(TreeExpr::Leaf, BTreeMap::from([(id(&[0]), rat_int(1))]));
        assert_eq!(err.unwrap_err(), VectorError::InvalidNode(id(&[0])));
    }

    #[test]
    fn sigma_is_the_chain_sum() {
        let f = sigma_apply(&vec_of(&[(&[2], 1)]));
        assert_eq!(f.eval(&id(&[2])), rat_int(1));
        assert_eq!(f.eval(&id(&[2, 5, 1])), rat_int(1));
        assert_eq!(f.eval(&id(&[1])), rat_int(0));
        assert_eq!(f.eval(&NodeId::root()), rat_int(0));
        // e_s - e_t on a chain: 1 strictly between, 0 past t.
        let g = sigma_apply(&vec_of(&[(&[2], 1), (&[2, 0, 1], -1)]));
        assert_eq!(g.eval(&id(&[2, 0])), rat_int(1));
        assert_eq!(g.eval(&id(&[2, 0, 1])), rat_int(0));
        assert_eq!(g.eval(&id(&[2, 0, 1, 4])), rat_int(0));
        assert!(sigma_apply(&SuppVec::zero(ambient())).func_eq(&StepFn::zero()));
    }

    #[test]
    fn sup_examples() {
        assert_eq!(sup_norm(&sigma_apply(&vec_of(&[(&[4], 1)]))), rat_int(1));
        let chain = vec_of(&[(&[1], 1), (&[1, 2], 1)]);
        assert_eq!(sup_norm(&sigma_apply(&chain)), rat_int(2));
        let cancel = vec_of(&[(&[1], 1)]).sub(&vec_of(&[(&[1], 1)]));
        assert_eq!(sup_norm(&sigma_apply(&cancel)), rat_int(0));
    }

    #[test]
    fn sigma0_requires_root_free_support() {
        let rooted = vec_of(&[(&[], 2)]);
        assert_eq!(sigma0_apply(&rooted).unwrap_err(), VectorError::RootInSupport);
        let v = vec_of(&[(&[3], 1), (&[3, 1], 2)]);
        let f = sigma0_apply(&v).unwrap();
        assert_eq!(f.eval(&NodeId::root()), rat_int(0));
        assert!(f.func_eq(&sigma_apply(&v)));
        assert_eq!(sup_norm(&f), sup_norm(&sigma_apply(&v)));
    }

    #[test]
    fn james_examples() {
        assert_eq!(james_norm(&vec_of(&[(&[2], 1)])).unwrap().squared, rat_int(1));
        // Incomparable pair: sqrt 2.
        let apart = vec_of(&[(&[0], 1), (&[1], 1)]);
        assert_eq!(james_norm(&apart).unwrap().squared, rat_int(2));
        assert_eq!(james_norm_oracle(&apart).unwrap().squared, rat_int(2));
        // Chain pair: one interval scoops both.
        let chain = vec_of(&[(&[0], 1), (&[0, 0], 1)]);
        assert_eq!(james_norm(&chain).unwrap().squared, rat_int(4));
        assert_eq!(james_norm_oracle(&chain).unwrap().squared, rat_int(4));
        assert_eq!(james_norm(&SuppVec::zero(ambient())).unwrap().squared, rat_int(0));
        let (lo, hi) = james_norm(&apart).unwrap().enclosure;
        assert!(lo <= 2.0f64.sqrt() && 2.0f64.sqrt() <= hi);
    }

    #[test]
    fn james_support_cap() {
        let entries: BTreeMap<NodeId, Rat> =
            (0..15).map(|i| (id(&[i]), rat_int(1))).collect();
        let v = SuppVec::new(ambient(), entries).unwrap();
        assert!(matches!(
            james_norm(&v),
            Err(VectorError::SupportTooLarge { len: 15, cap: 14 })
        ));
    }

    fn random_vec(rng: &mut ChaCha8Rng, support_size: usize) -> SuppVec {
        let mut entries = BTreeMap::new();
        while entries.len() < support_size {
            let depth = rng.gen_range(0..4);
            let path: Vec<u64> = (0..depth).map(|_| rng.gen_range(0..3)).collect();
            let num = rng.gen_range(-4i64..=4);
            let den = rng.gen_range(1i64..=3);
            if num != 0 {
                entries.insert(id(&path), Rat::new(num.into(), den.into()));
            }
        }
        SuppVec::new(ambient(), entries).unwrap()
    }

    #[test]
    fn branch_and_bound_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let v = { let k = rng.gen_range(1..=6); random_vec(&mut rng, k) };
            assert_eq!(
                james_norm(&v).unwrap().squared,
                james_norm_oracle(&v).unwrap().squared,
                "vector {}",
                v.to_json()
            );
        }
    }

    #[test]
    fn chain_inequality_and_margins() {
        let unit = chain_inequality_check(&vec_of(&[(&[5], 1)])).unwrap();
        assert!(unit.holds);
        assert_eq!(unit.lower_gap_sq, rat_int(0));
        assert_eq!(unit.upper_gap_sq, rat_int(0));
        let chain = chain_inequality_check(&vec_of(&[(&[0], 1), (&[0, 1], 1)])).unwrap();
        assert!(chain.holds);
        assert_eq!(chain.james_sq, rat_int(4));
        assert_eq!(chain.lower_gap_sq, rat_int(0));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let v = { let k = rng.gen_range(1..=8); random_vec(&mut rng, k) };
            assert!(chain_inequality_check(&v).unwrap().holds);
        }
    }

    #[test]
    fn sigma_linearity_and_contraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..25 {
            let v = { let k = rng.gen_range(1..=5); random_vec(&mut rng, k) };
            let w = { let k = rng.gen_range(1..=5); random_vec(&mut rng, k) };
            let a = rat_int(rng.gen_range(-3..=3));
            let b = rat_int(rng.gen_range(-3..=3));
            let lhs = sigma_apply(&v.scale(&a).add(&w.scale(&b)));
            let rhs = sigma_apply(&v).scale(&a).add(&sigma_apply(&w).scale(&b));
            assert!(lhs.func_eq(&rhs));
            assert!(sup_norm(&sigma_apply(&v)) <= l1_norm(&v));
        }
    }

    #[test]
    fn james_is_a_norm_on_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let v = { let k = rng.gen_range(1..=4); random_vec(&mut rng, k) };
            let w = { let k = rng.gen_range(1..=4); random_vec(&mut rng, k) };
            let sum_sq = james_norm(&v.add(&w)).unwrap().squared;
            let v_sq = james_norm(&v).unwrap().squared;
            let w_sq = james_norm(&w).unwrap().squared;
            assert!(triangle_on_squares(&sum_sq, &v_sq, &w_sq));
            let c = Rat::new(rng.gen_range(-5i64..=5).into(), rng.gen_range(1i64..=4).into());
            assert_eq!(james_norm(&v.scale(&c)).unwrap().squared, &c * &c * &v_sq);
        }
    }

    #[test]
    fn branch_decoupling() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..25 {
            // Root-free support spread over root branches 0..3.
            let mut entries = BTreeMap::new();
            for _ in 0..rng.gen_range(2..=6) {
                let depth = rng.gen_range(1..4);
                let path: Vec<u64> = (0..depth).map(|_| rng.gen_range(0..3)).collect();
                let num = rng.gen_range(-3i64..=3);
                if num != 0 {
                    entries.insert(id(&path), rat_int(num));
                }
            }
            let v = SuppVec::new(ambient(), entries).unwrap();
            if v.entries().is_empty() {
                continue;
            }
            let total = james_norm(&v).unwrap().squared;
            let split: Rat = (0..3)
                .map(|n| james_norm(&v.branch_restrict(n)).unwrap().squared)
                .sum();
            assert_eq!(total, split);
            assert_eq!(total, james_norm_oracle(&v).unwrap().squared);
        }
    }

    #[test]
    fn separation_and_nets() {
        let half = Rat::new(1.into(), 2.into());
        let chis: Vec<StepFn> = [0u64, 1, 2]
            .iter()
            .map(|&n| sigma_apply(&vec_of(&[(&[n], 1)])))
            .collect();
        assert!(eps_separated_fns(&chis, &half));
        assert!(eps_separated(&[vec_of(&[(&[0], 1)])], &rat_int(100), NormKind::L1));
        let dup = vec![vec_of(&[(&[1], 1)]), vec_of(&[(&[1], 1)])];
        assert!(!eps_separated(&dup, &Rat::new(1.into(), 1000.into()), NormKind::L1));

        let e0 = vec_of(&[(&[0], 1)]);
        let e1 = vec_of(&[(&[1], 1)]);
        assert!(delta_net_check(&[e0.clone()], &[e0.clone()], &rat_int(0), NormKind::L1));
        assert!(!delta_net_check(&[e1.clone()], &[e0.clone()], &half, NormKind::L1));
        // Brute-force cross check on a small grid.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let grid: Vec<SuppVec> = (0..5).map(|_| random_vec(&mut rng, 2)).collect();
        let targets: Vec<SuppVec> = (0..5).map(|_| random_vec(&mut rng, 2)).collect();
        for delta in [rat_int(1), rat_int(3), rat_int(6)] {
            let expect = targets.iter().all(|t| {
                grid.iter()
                    .any(|c| l1_norm(&t.sub(c)) <= delta)
            });
            assert_eq!(delta_net_check(&grid, &targets, &delta, NormKind::L1), expect);
        }
    }

    #[test]
    fn json_roundtrips() {
        let v = vec_of(&[(&[1, 2], 3), (&[0], -1)]);
        let json = v.to_json();
        assert!(json.contains("\"node\":[1,2]"));
        assert!(json.contains("\"value\":\"3/1\""));
        let back = SuppVec::from_json(ambient(), &json).unwrap();
        assert_eq!(back, v);
        let step_json = sigma_apply(&v).to_json();
        assert!(step_json.contains("\"apex\":[]"));
        assert!(step_json.contains("\"excluded\""));
    }
}
