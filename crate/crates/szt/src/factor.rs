//! Exact-rational factorization laboratory on finite trees: the summing
//! operator as a matrix, delta-witness verification, conversion between
//! witnesses and factorizations of the summing operator, subtree
//! factorizations, and glued-tree branch witnesses.

use std::collections::BTreeMap;

use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rat::{format_rat, parse_rat, Rat};
use crate::tree::{FinTree, TreeError};

#[derive(Debug, Error, PartialEq)]
pub enum FactorError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("operator norm not computable for norm pair {0}_to_{1}")]
    UnsupportedNormPair(NormTag, NormTag),
    #[error("witness invalid: {0}")]
    InvalidWitness(String),
    #[error("not an order-embedding: {0}")]
    NotEmbedding(String),
    #[error("composition differs from the summing operator at basis column {0}")]
    SigmaMismatch(usize),
    #[error("column {0} of U vanishes; cannot normalize")]
    ZeroColumn(usize),
    #[error("linear system is singular or inconsistent")]
    Singular,
    #[error("functional norm bound violated: {0}")]
    NormExceeded(String),
    #[error("bad JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormTag {
    L1,
    L2,
    Sup,
}

impl std::fmt::Display for NormTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NormTag::L1 => "l1",
            NormTag::L2 => "l2",
            NormTag::Sup => "sup",
        })
    }
}

impl NormTag {
    fn parse(s: &str) -> Result<NormTag, FactorError> {
        match s {
            "l1" => Ok(NormTag::L1),
            "l2" => Ok(NormTag::L2),
            "sup" => Ok(NormTag::Sup),
            other => Err(FactorError::Json(format!("unknown norm tag {other:?}"))),
        }
    }

    fn dual(self) -> NormTag {
        match self {
            NormTag::L1 => NormTag::Sup,
            NormTag::L2 => NormTag::L2,
            NormTag::Sup => NormTag::L1,
        }
    }
}

/// Squared norm of a coordinate vector; squares keep `l2` exact and respect
/// maxima since all quantities are nonnegative.
pub fn vec_norm_sq(v: &[Rat], tag: NormTag) -> Rat {
    match tag {
        NormTag::L1 => {
            let s: Rat = v.iter().map(|x| x.abs()).sum();
            &s * &s
        }
        NormTag::L2 => v.iter().map(|x| x * x).sum(),
        NormTag::Sup => {
            let m = v.iter().map(|x| x.abs()).max().unwrap_or_else(Rat::zero);
            &m * &m
        }
    }
}

/// A finite exact-rational operator with norm tags on both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct RatOperator {
    pub rows: usize,
    pub cols: usize,
    entries: BTreeMap<(usize, usize), Rat>,
    pub domain_norm: NormTag,
    pub codomain_norm: NormTag,
}

#[derive(Serialize, Deserialize)]
struct OperatorDto {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, String)>,
    norm_pair: String,
}

impl RatOperator {
    pub fn zero(rows: usize, cols: usize, domain_norm: NormTag, codomain_norm: NormTag) -> Self {
        RatOperator { rows, cols, entries: BTreeMap::new(), domain_norm, codomain_norm }
    }

    pub fn identity(n: usize, domain_norm: NormTag, codomain_norm: NormTag) -> Self {
        let mut op = Self::zero(n, n, domain_norm, codomain_norm);
        for i in 0..n {
            op.set(i, i, Rat::one());
        }
        op
    }

    pub fn get(&self, i: usize, j: usize) -> Rat {
        self.entries.get(&(i, j)).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn set(&mut self, i: usize, j: usize, value: Rat) {
        assert!(i < self.rows && j < self.cols, "entry out of range");
        if value.is_zero() {
            self.entries.remove(&(i, j));
        } else {
            self.entries.insert((i, j), value);
        }
    }

    pub fn entries(&self) -> &BTreeMap<(usize, usize), Rat> {
        &self.entries
    }

    pub fn column(&self, j: usize) -> Vec<Rat> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn row(&self, i: usize) -> Vec<Rat> {
        (0..self.cols).map(|j| self.get(i, j)).collect()
    }

    pub fn apply(&self, v: &[Rat]) -> Result<Vec<Rat>, FactorError> {
        if v.len() != self.cols {
            return Err(FactorError::Dimension(format!(
                "operator is {}x{}, vector has length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![Rat::zero(); self.rows];
        for ((i, j), a) in &self.entries {
            out[*i] += a * &v[*j];
        }
        Ok(out)
    }

    /// Matrix composition `self . rhs` (apply `rhs` first).
    pub fn compose(&self, rhs: &RatOperator) -> Result<RatOperator, FactorError> {
        if self.cols != rhs.rows {
            return Err(FactorError::Dimension(format!(
                "cannot compose {}x{} after {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = RatOperator::zero(self.rows, rhs.cols, rhs.domain_norm, self.codomain_norm);
        for ((i, k), a) in &self.entries {
            for j in 0..rhs.cols {
                let b = rhs.get(*k, j);
                if !b.is_zero() {
                    let cur = out.get(*i, j) + a * &b;
                    out.set(*i, j, cur);
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> RatOperator {
        let mut out = RatOperator::zero(self.cols, self.rows, self.codomain_norm.dual(), self.domain_norm.dual());
        for ((i, j), a) in &self.entries {
            out.set(*j, *i, a.clone());
        }
        out
    }

    /// Squared operator norm for the tagged norm pair. Computable when the
    /// domain is `l1` (max column norm) or the codomain is `sup` (max row
    /// dual norm); both formulas agree when both apply.
    pub fn op_norm_sq(&self) -> Result<Rat, FactorError> {
        if self.domain_norm == NormTag::L1 {
            return Ok((0..self.cols)
                .map(|j| vec_norm_sq(&self.column(j), self.codomain_norm))
                .max()
                .unwrap_or_else(Rat::zero));
        }
        if self.codomain_norm == NormTag::Sup {
            return Ok((0..self.rows)
                .map(|i| vec_norm_sq(&self.row(i), self.domain_norm.dual()))
                .max()
                .unwrap_or_else(Rat::zero));
        }
        Err(FactorError::UnsupportedNormPair(self.domain_norm, self.codomain_norm))
    }

    pub fn to_json(&self) -> String {
        let dto = OperatorDto {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .map(|((i, j), a)| (*i, *j, format_rat(a)))
                .collect(),
            norm_pair: format!("{}_to_{}", self.domain_norm, self.codomain_norm),
        };
        serde_json::to_string(&dto).expect("operator serialization")
    }

    pub fn from_json(json: &str) -> Result<Self, FactorError> {
        let dto: OperatorDto = serde_json::from_str(json).map_err(|e| FactorError::Json(e.to_string()))?;
        let (dom, cod) = dto
            .norm_pair
            .split_once("_to_")
            .ok_or_else(|| FactorError::Json(format!("bad norm pair {:?}", dto.norm_pair)))?;
        let mut op = RatOperator::zero(dto.rows, dto.cols, NormTag::parse(dom)?, NormTag::parse(cod)?);
        for (i, j, text) in dto.entries {
            if i >= dto.rows || j >= dto.cols {
                return Err(FactorError::Json(format!("entry ({i},{j}) out of range")));
            }
            op.set(i, j, parse_rat(&text).map_err(FactorError::Json)?);
        }
        Ok(op)
    }
}

/// The summing operator of a finite tree as a 0/1 matrix: entry `(t, s)` is
/// 1 exactly when `s` lies below `t`.
pub fn sigma_matrix(tree: &FinTree) -> RatOperator {
    let n = tree.len();
    let mut op = RatOperator::zero(n, n, NormTag::L1, NormTag::Sup);
    for t in 0..n {
        for s in 0..n {
            if tree.leq(s, t) {
                op.set(t, s, Rat::one());
            }
        }
    }
    op
}

// ---------------------------------------------------------------------------
// Witnesses
// ---------------------------------------------------------------------------

/// A delta-witness: unit vectors `x_t`, functionals `x_t*`, and the diagonal
/// pairings, required to follow the chain/zero pattern with diagonal at
/// least `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub delta: Rat,
    pub space_norm: NormTag,
    pub x: BTreeMap<usize, Vec<Rat>>,
    pub xstar: BTreeMap<usize, Vec<Rat>>,
    pub diag: BTreeMap<usize, Rat>,
}

#[derive(Serialize, Deserialize)]
struct WitnessDto {
    delta: String,
    space_norm: NormTag,
    x: BTreeMap<usize, Vec<String>>,
    xstar: BTreeMap<usize, Vec<String>>,
    diag: BTreeMap<usize, String>,
}

impl Witness {
    pub fn to_json(&self) -> String {
        let fmt_map = |m: &BTreeMap<usize, Vec<Rat>>| {
            m.iter()
                .map(|(k, v)| (*k, v.iter().map(format_rat).collect()))
                .collect()
        };
        let dto = WitnessDto {
            delta: format_rat(&self.delta),
            space_norm: self.space_norm,
            x: fmt_map(&self.x),
            xstar: fmt_map(&self.xstar),
            diag: self.diag.iter().map(|(k, v)| (*k, format_rat(v))).collect(),
        };
        serde_json::to_string(&dto).expect("witness serialization")
    }

    pub fn from_json(json: &str) -> Result<Self, FactorError> {
        let dto: WitnessDto = serde_json::from_str(json).map_err(|e| FactorError::Json(e.to_string()))?;
        let parse_map = |m: &BTreeMap<usize, Vec<String>>| -> Result<BTreeMap<usize, Vec<Rat>>, FactorError> {
            m.iter()
                .map(|(k, v)| {
                    let parsed: Result<Vec<Rat>, _> =
                        v.iter().map(|s| parse_rat(s).map_err(FactorError::Json)).collect();
                    Ok((*k, parsed?))
                })
                .collect()
        };
        Ok(Witness {
            delta: parse_rat(&dto.delta).map_err(FactorError::Json)?,
            space_norm: dto.space_norm,
            x: parse_map(&dto.x)?,
            xstar: parse_map(&dto.xstar)?,
            diag: dto
                .diag
                .iter()
                .map(|(k, v)| Ok((*k, parse_rat(v).map_err(FactorError::Json)?)))
                .collect::<Result<_, FactorError>>()?,
        })
    }
}

/// Outcome of a witness check: success, or the first located defect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessReport {
    pub ok: bool,
    pub counterexample: Option<String>,
}

fn fail(msg: String) -> WitnessReport {
    WitnessReport { ok: false, counterexample: Some(msg) }
}

fn pairing(xstar: &[Rat], x: &[Rat]) -> Rat {
    xstar.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// Exact check of the chain/zero pairing pattern with diagonal at least
/// `delta` and unit vectors `x_t`.
pub fn verify_witness(tree: &FinTree, w: &Witness) -> Result<WitnessReport, FactorError> {
    let n = tree.len();
    if !w.delta.is_positive() {
        return Err(FactorError::InvalidWitness("delta must be positive".into()));
    }
    let dim = w.x.values().next().map(|v| v.len()).unwrap_or(0);
    for t in 0..n {
        let x = w.x.get(&t).ok_or_else(|| FactorError::InvalidWitness(format!("missing x[{t}]")))?;
        let xs = w
            .xstar
            .get(&t)
            .ok_or_else(|| FactorError::InvalidWitness(format!("missing xstar[{t}]")))?;
        if x.len() != dim || xs.len() != dim {
            return Err(FactorError::Dimension(format!("vector at node {t} has wrong length")));
        }
        if !w.diag.contains_key(&t) {
            return Err(FactorError::InvalidWitness(format!("missing diag[{t}]")));
        }
    }
    for t in 0..n {
        if vec_norm_sq(&w.x[&t], w.space_norm) > Rat::one() {
            return Ok(fail(format!("x[{t}] is not in the unit ball")));
        }
        let d = &w.diag[&t];
        if *d < w.delta {
            return Ok(fail(format!("diag[{t}] below delta")));
        }
        if pairing(&w.xstar[&t], &w.x[&t]) != *d {
            return Ok(fail(format!("diag[{t}] does not match the pairing")));
        }
    }
    for t in 0..n {
        for s in 0..n {
            let value = pairing(&w.xstar[&t], &w.x[&s]);
            let expected = if tree.leq(s, t) { w.diag[&s].clone() } else { Rat::zero() };
            if value != expected {
                return Ok(fail(format!(
                    "pairing <xstar[{t}], x[{s}]> = {} but the pattern requires {}",
                    format_rat(&value),
                    format_rat(&expected)
                )));
            }
        }
    }
    Ok(WitnessReport { ok: true, counterexample: None })
}

/// The canonical witness on `l1(T)`: `x_t = e_t`, `x_t*` the chain
/// indicator row, delta 1.
pub fn canonical_witness(tree: &FinTree) -> Witness {
    let n = tree.len();
    let mut x = BTreeMap::new();
    let mut xstar = BTreeMap::new();
    let mut diag = BTreeMap::new();
    for t in 0..n {
        let mut e = vec![Rat::zero(); n];
        e[t] = Rat::one();
        x.insert(t, e);
        let chi = (0..n)
            .map(|s| if tree.leq(s, t) { Rat::one() } else { Rat::zero() })
            .collect();
        xstar.insert(t, chi);
        diag.insert(t, Rat::one());
    }
    Witness { delta: Rat::one(), space_norm: NormTag::L1, x, xstar, diag }
}

// ---------------------------------------------------------------------------
// Witness <-> factorization
// ---------------------------------------------------------------------------

/// Builds `U` and `V` with `V Top U` equal to the summing matrix, given
/// functionals `v_t*` through which each `x_t*` factors. Verifies the
/// witness, the factoring identities, the unit bounds on the `v_t*`, the
/// exact product, and the norm bounds on `U` and `V`.
pub fn witness_to_factorization(
    tree: &FinTree,
    w: &Witness,
    top: &RatOperator,
    vstar: &BTreeMap<usize, Vec<Rat>>,
) -> Result<(RatOperator, RatOperator), FactorError> {
    let report = verify_witness(tree, w)?;
    if !report.ok {
        return Err(FactorError::InvalidWitness(report.counterexample.unwrap_or_default()));
    }
    let n = tree.len();
    let dim = w.x[&0].len();
    if top.cols != dim {
        return Err(FactorError::Dimension("Top does not act on the witness space".into()));
    }
    for t in 0..n {
        let v = vstar
            .get(&t)
            .ok_or_else(|| FactorError::InvalidWitness(format!("missing vstar[{t}]")))?;
        if v.len() != top.rows {
            return Err(FactorError::Dimension(format!("vstar[{t}] has wrong length")));
        }
        // v_t* composed with Top must reproduce x_t*.
        let composed: Vec<Rat> = (0..top.cols)
            .map(|j| pairing(v, &top.column(j)))
            .collect();
        if composed != w.xstar[&t] {
            return Err(FactorError::InvalidWitness(format!(
                "vstar[{t}] does not factor xstar[{t}] through Top"
            )));
        }
        if vec_norm_sq(v, top.codomain_norm.dual()) > Rat::one() {
            return Err(FactorError::NormExceeded(format!("vstar[{t}] leaves the dual unit ball")));
        }
    }
    let mut u = RatOperator::zero(dim, n, NormTag::L1, top.domain_norm);
    for s in 0..n {
        for (i, value) in w.x[&s].iter().enumerate() {
            u.set(i, s, value / &w.diag[&s]);
        }
    }
    let mut v_op = RatOperator::zero(n, top.rows, top.codomain_norm, NormTag::Sup);
    for t in 0..n {
        for (j, value) in vstar[&t].iter().enumerate() {
            v_op.set(t, j, value.clone());
        }
    }
    let product = v_op.compose(&top.compose(&u)?)?;
    let sigma = sigma_matrix(tree);
    if product.entries != sigma.entries {
        let col = (0..n)
            .find(|&s| product.column(s) != sigma.column(s))
            .unwrap_or(0);
        return Err(FactorError::SigmaMismatch(col));
    }
    let delta_sq = &w.delta * &w.delta;
    if u.op_norm_sq()? * &delta_sq > Rat::one() {
        return Err(FactorError::NormExceeded("U exceeds 1/delta".into()));
    }
    if v_op.op_norm_sq()? > Rat::one() {
        return Err(FactorError::NormExceeded("V exceeds 1".into()));
    }
    Ok((u, v_op))
}

/// Minimum-`l2` solution of `v^T Top = xstar^T`; exact via the normal
/// equations. Errors when `Top^T Top` is singular or the system is
/// inconsistent.
pub fn min_l2_vstar(top: &RatOperator, xstar: &[Rat]) -> Result<Vec<Rat>, FactorError> {
    if xstar.len() != top.cols {
        return Err(FactorError::Dimension("functional length differs from Top columns".into()));
    }
    let m = top.cols;
    let gram: Vec<Vec<Rat>> = (0..m)
        .map(|i| (0..m).map(|j| pairing(&top.column(i), &top.column(j))).collect())
        .collect();
    let z = solve_linear(gram, xstar.to_vec()).ok_or(FactorError::Singular)?;
    let v: Vec<Rat> = (0..top.rows)
        .map(|i| pairing(&top.row(i), &z))
        .collect();
    let check: Vec<Rat> = (0..top.cols).map(|j| pairing(&v, &top.column(j))).collect();
    if check != xstar {
        return Err(FactorError::Singular);
    }
    Ok(v)
}

fn solve_linear(mut a: Vec<Vec<Rat>>, mut b: Vec<Rat>) -> Option<Vec<Rat>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col].clone();
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = &a[r][col] / &p;
            for c in col..n {
                let delta = &factor * &a[col][c];
                a[r][c] -= delta;
            }
            let delta = &factor * &b[col];
            b[r] -= delta;
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

/// Extracts a witness from an exact factorization `V Top U = Sigma_T`:
/// normalized columns of `U`, scaled rows of `V Top`, and
/// `delta = 1/(|U| |V|)`. Requires rational norms, so the codomain tag of
/// `U` must be `l1` or `sup`.
pub fn factorization_to_witness(
    tree: &FinTree,
    u: &RatOperator,
    v: &RatOperator,
    top: &RatOperator,
) -> Result<Witness, FactorError> {
    let n = tree.len();
    let product = v.compose(&top.compose(u)?)?;
    let sigma = sigma_matrix(tree);
    if product.entries != sigma.entries {
        let col = (0..n)
            .find(|&s| product.column(s) != sigma.column(s))
            .unwrap_or(0);
        return Err(FactorError::SigmaMismatch(col));
    }
    let space_norm = u.codomain_norm;
    if space_norm == NormTag::L2 {
        return Err(FactorError::UnsupportedNormPair(NormTag::L1, NormTag::L2));
    }
    let rational_norm = |vec: &[Rat]| -> Rat {
        match space_norm {
            NormTag::L1 => vec.iter().map(|x| x.abs()).sum(),
            NormTag::Sup => vec.iter().map(|x| x.abs()).max().unwrap_or_else(Rat::zero),
            NormTag::L2 => unreachable!(),
        }
    };
    let u_norm = (0..u.cols).map(|j| rational_norm(&u.column(j))).max().unwrap_or_else(Rat::zero);
    let v_norm_sq = v.op_norm_sq()?;
    let v_norm = exact_sqrt(&v_norm_sq).ok_or_else(|| {
        FactorError::NormExceeded("the norm of V is irrational; use sup-tagged rows".into())
    })?;
    if u_norm.is_zero() || v_norm.is_zero() {
        return Err(FactorError::ZeroColumn(0));
    }
    let vtop = v.compose(top)?;
    let mut x = BTreeMap::new();
    let mut xstar = BTreeMap::new();
    let mut diag = BTreeMap::new();
    for s in 0..n {
        let col = u.column(s);
        let norm = rational_norm(&col);
        if norm.is_zero() {
            return Err(FactorError::ZeroColumn(s));
        }
        x.insert(s, col.iter().map(|a| a / &norm).collect::<Vec<_>>());
        diag.insert(s, Rat::one() / (&norm * &v_norm));
        xstar.insert(
            s,
            vtop.row(s).iter().map(|a| a / &v_norm).collect::<Vec<_>>(),
        );
    }
    let w = Witness {
        delta: Rat::one() / (&u_norm * &v_norm),
        space_norm,
        x,
        xstar,
        diag,
    };
    let report = verify_witness(tree, &w)?;
    if !report.ok {
        return Err(FactorError::InvalidWitness(report.counterexample.unwrap_or_default()));
    }
    Ok(w)
}

fn exact_sqrt(r: &Rat) -> Option<Rat> {
    let num = r.numer().sqrt();
    let den = r.denom().sqrt();
    let candidate = Rat::new(num, den);
    if &(&candidate * &candidate) == r {
        Some(candidate)
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// Subtree factorization
// ---------------------------------------------------------------------------

/// The four 0/1 operators factoring the summing operator of a subtree
/// through the ambient one: reindex into the image, extend by zero,
/// restrict, and pull back.
#[derive(Debug, Clone, PartialEq)]
pub struct SubtreeFactors {
    pub a: RatOperator,
    pub u: RatOperator,
    pub v: RatOperator,
    pub b: RatOperator,
}

pub fn subtree_factorization(
    sub: &FinTree,
    tree: &FinTree,
    phi: &BTreeMap<usize, usize>,
) -> Result<SubtreeFactors, FactorError> {
    let n = sub.len();
    if phi.len() != n || phi.keys().any(|&s| s >= n) || phi.values().any(|&t| t >= tree.len()) {
        return Err(FactorError::NotEmbedding("map is not total on the subtree nodes".into()));
    }
    let mut image: Vec<usize> = phi.values().copied().collect();
    image.sort_unstable();
    image.dedup();
    if image.len() != n {
        return Err(FactorError::NotEmbedding("map is not injective".into()));
    }
    for s1 in 0..n {
        for s2 in 0..n {
            if sub.leq(s1, s2) != tree.leq(phi[&s1], phi[&s2]) {
                return Err(FactorError::NotEmbedding(format!(
                    "order disagrees on the pair ({s1}, {s2})"
                )));
            }
        }
    }
    let pos: BTreeMap<usize, usize> = image.iter().enumerate().map(|(k, &t)| (t, k)).collect();
    // A: l1(S) -> l1(image), basis e_s to the slot of phi(s).
    let mut a = RatOperator::zero(n, n, NormTag::L1, NormTag::L1);
    for s in 0..n {
        a.set(pos[&phi[&s]], s, Rat::one());
    }
    // U: extend by zero into l1(T).
    let mut u = RatOperator::zero(tree.len(), n, NormTag::L1, NormTag::L1);
    for (k, &t) in image.iter().enumerate() {
        u.set(t, k, Rat::one());
    }
    // V: restrict linf(T) to the image slots.
    let mut v = RatOperator::zero(n, tree.len(), NormTag::Sup, NormTag::Sup);
    for (k, &t) in image.iter().enumerate() {
        v.set(k, t, Rat::one());
    }
    // B: pull back along phi to linf(S).
    let mut b = RatOperator::zero(n, n, NormTag::Sup, NormTag::Sup);
    for s in 0..n {
        b.set(s, pos[&phi[&s]], Rat::one());
    }
    let product = b
        .compose(&v.compose(&sigma_matrix(tree).compose(&u.compose(&a)?)?)?)?;
    let sigma = sigma_matrix(sub);
    if product.entries != sigma.entries {
        let col = (0..n)
            .find(|&s| product.column(s) != sigma.column(s))
            .unwrap_or(0);
        return Err(FactorError::SigmaMismatch(col));
    }
    Ok(SubtreeFactors { a, u, v, b })
}

// ---------------------------------------------------------------------------
// Glued trees and branch witnesses
// ---------------------------------------------------------------------------

/// Glues a family of finite trees under a fresh root; returns the glued
/// tree and, per branch, the map from original indices to glued ones.
pub fn glue_family(family: &[FinTree]) -> Result<(FinTree, Vec<Vec<usize>>), FactorError> {
    let mut parent: Vec<Option<usize>> = vec![None];
    let mut maps = Vec::with_capacity(family.len());
    for branch in family {
        let offset = parent.len();
        let map: Vec<usize> = (0..branch.len()).map(|i| offset + i).collect();
        for i in 0..branch.len() {
            parent.push(Some(branch.parent[i].map_or(0, |p| offset + p)));
        }
        maps.push(map);
    }
    Ok((FinTree::new(parent)?, maps))
}

/// A witness on a glued tree with strict per-branch lower bounds on the
/// diagonal pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchWitness {
    pub witness: Witness,
    /// Strict lower bound required of pairings whose upper node lies in
    /// branch `n`.
    pub thresholds: BTreeMap<usize, Rat>,
}

/// Checks the strict biorthogonal pattern on a glued family: comparable
/// pairs whose upper node lies in branch `n` must pair strictly above the
/// branch threshold, all other pairs must pair to zero. The report names
/// the offending branch.
pub fn verify_branch_witness(
    family: &[FinTree],
    w: &BranchWitness,
) -> Result<WitnessReport, FactorError> {
    let (glued, maps) = glue_family(family)?;
    let n = glued.len();
    let wit = &w.witness;
    for t in 0..n {
        if !wit.x.contains_key(&t) || !wit.xstar.contains_key(&t) {
            return Err(FactorError::InvalidWitness(format!("missing vectors at node {t}")));
        }
        if vec_norm_sq(&wit.x[&t], wit.space_norm) > Rat::one() {
            return Ok(fail(format!("x[{t}] is not in the unit ball")));
        }
    }
    let branch_of: BTreeMap<usize, usize> = maps
        .iter()
        .enumerate()
        .flat_map(|(b, map)| map.iter().map(move |&g| (g, b)))
        .collect();
    for t in 0..n {
        for s in 0..n {
            let value = pairing(&wit.xstar[&t], &wit.x[&s]);
            if glued.leq(s, t) {
                if let Some(&b) = branch_of.get(&t) {
                    let bound = w
                        .thresholds
                        .get(&b)
                        .ok_or_else(|| FactorError::InvalidWitness(format!("missing threshold for branch {b}")))?;
                    if value <= *bound {
                        return Ok(fail(format!(
                            "branch {b}: pairing <xstar[{t}], x[{s}]> = {} is not above {}",
                            format_rat(&value),
                            format_rat(bound)
                        )));
                    }
                }
            } else if !value.is_zero() {
                return Ok(fail(format!(
                    "pairing <xstar[{t}], x[{s}]> should vanish but is {}",
                    format_rat(&value)
                )));
            }
        }
    }
    Ok(WitnessReport { ok: true, counterexample: None })
}

/// The canonical branch witness on a glued family: unit vectors, chain
/// indicator functionals, zero functional at the glued root.
pub fn canonical_branch_witness(family: &[FinTree], thresholds: BTreeMap<usize, Rat>) -> Result<BranchWitness, FactorError> {
    let (glued, _) = glue_family(family)?;
    let mut witness = canonical_witness(&glued);
    witness.xstar.insert(glued.root(), vec![Rat::zero(); glued.len()]);
    witness.diag.insert(glued.root(), Rat::zero());
    Ok(BranchWitness { witness, thresholds })
}

/// Largest partial-span projection norm of the witness system in its
/// natural enumeration: the projections are assembled from the
/// biorthogonalized functionals and measured `l1 -> l1` exactly.
pub fn grunblum_margin(tree: &FinTree, w: &Witness) -> Result<Rat, FactorError> {
    let report = verify_witness(tree, w)?;
    if !report.ok {
        return Err(FactorError::InvalidWitness(report.counterexample.unwrap_or_default()));
    }
    let n = tree.len();
    let dim = w.x[&0].len();
    // Biorthogonalize: y_t* = x_t*/diag(t) - x_parent(t)*/diag(parent).
    let scaled = |t: usize| -> Vec<Rat> {
        w.xstar[&t].iter().map(|a| a / &w.diag[&t]).collect()
    };
    let mut best = Rat::zero();
    let mut proj = RatOperator::zero(dim, dim, NormTag::L1, NormTag::L1);
    for t in 0..n {
        let mut y = scaled(t);
        if let Some(p) = tree.parent[t] {
            for (a, b) in y.iter_mut().zip(scaled(p)) {
                *a -= b;
            }
        }
        for i in 0..dim {
            for j in 0..dim {
                let add = &w.x[&t][i] * &y[j];
                if !add.is_zero() {
                    let cur = proj.get(i, j) + add;
                    proj.set(i, j, cur);
                }
            }
        }
        let norm_sq = proj.op_norm_sq()?;
        if norm_sq > best {
            best = norm_sq;
        }
    }
    exact_sqrt(&best).ok_or_else(|| FactorError::NormExceeded("projection norm is irrational".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat_int;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn chain2() -> FinTree {
        FinTree::new(vec![None, Some(0)]).unwrap()
    }

    fn fork() -> FinTree {
        FinTree::new(vec![None, Some(0), Some(0), Some(1)]).unwrap()
    }

    fn random_tree(rng: &mut ChaCha8Rng, max_nodes: usize) -> FinTree {
        let n = rng.gen_range(1..=max_nodes);
        let parent = (0..n)
            .map(|i| if i == 0 { None } else { Some(rng.gen_range(0..i)) })
            .collect();
        FinTree::new(parent).unwrap()
    }

    #[test]
    fn sigma_matrix_shape() {
        let sigma = sigma_matrix(&chain2());
        assert_eq!(sigma.get(1, 0), Rat::one());
        assert_eq!(sigma.get(0, 1), Rat::zero());
        assert_eq!(sigma.op_norm_sq().unwrap(), Rat::one());
        let json = sigma.to_json();
        assert!(json.contains("\"norm_pair\":\"l1_to_sup\""));
        assert_eq!(RatOperator::from_json(&json).unwrap(), sigma);
    }

    #[test]
    fn operator_norms() {
        let mut op = RatOperator::zero(2, 2, NormTag::L1, NormTag::Sup);
        op.set(0, 0, rat_int(3));
        op.set(1, 1, rat_int(-5));
        assert_eq!(op.op_norm_sq().unwrap(), rat_int(25));
        let mut l2 = RatOperator::zero(2, 1, NormTag::L1, NormTag::L2);
        l2.set(0, 0, rat_int(3));
        l2.set(1, 0, rat_int(4));
        assert_eq!(l2.op_norm_sq().unwrap(), rat_int(25));
        let bad = RatOperator::identity(2, NormTag::L2, NormTag::L2);
        assert!(matches!(bad.op_norm_sq(), Err(FactorError::UnsupportedNormPair(_, _))));
    }

    #[test]
    fn canonical_witness_is_valid_and_perturbations_fail() {
        let t = fork();
        let w = canonical_witness(&t);
        assert!(verify_witness(&t, &w).unwrap().ok);
        let mut bad = w.clone();
        // Node 2 is incomparable with node 1: the pairing must vanish.
        bad.xstar.get_mut(&2).unwrap()[1] = Rat::new(1.into(), 7.into());
        let report = verify_witness(&t, &bad).unwrap();
        assert!(!report.ok);
        assert!(report.counterexample.unwrap().contains("xstar[2], x[1]"));
    }

    #[test]
    fn random_scaled_witnesses_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let t = random_tree(&mut rng, 8);
            let mut w = canonical_witness(&t);
            let mut delta = Rat::one();
            for s in 0..t.len() {
                let c = Rat::new(rng.gen_range(1i64..=4).into(), 4.into());
                w.x.get_mut(&s).unwrap()[s] = c.clone();
                w.diag.insert(s, c.clone());
                if c < delta {
                    delta = c;
                }
            }
            w.delta = delta;
            assert!(verify_witness(&t, &w).unwrap().ok, "tree {:?}", t.parent);
        }
    }

    #[test]
    fn witness_factorization_identity_top() {
        let t = fork();
        let w = canonical_witness(&t);
        let top = RatOperator::identity(t.len(), NormTag::L1, NormTag::L1);
        let vstar: BTreeMap<usize, Vec<Rat>> = w.xstar.clone();
        let (u, v) = witness_to_factorization(&t, &w, &top, &vstar).unwrap();
        let product = v.compose(&top.compose(&u).unwrap()).unwrap();
        assert_eq!(product.entries(), sigma_matrix(&t).entries());
    }

    #[test]
    fn scaled_witness_still_factors() {
        let t = chain2();
        let mut w = canonical_witness(&t);
        for s in 0..t.len() {
            let half = Rat::new(1.into(), 2.into());
            w.x.get_mut(&s).unwrap()[s] = half.clone();
            w.diag.insert(s, half);
        }
        w.delta = Rat::new(1.into(), 2.into());
        let top = RatOperator::identity(t.len(), NormTag::L1, NormTag::L1);
        let vstar = w.xstar.clone();
        let (u, v) = witness_to_factorization(&t, &w, &top, &vstar).unwrap();
        let product = v.compose(&top.compose(&u).unwrap()).unwrap();
        assert_eq!(product.entries(), sigma_matrix(&t).entries());
        assert!(u.op_norm_sq().unwrap() <= rat_int(4));
    }

    #[test]
    fn random_permuted_top_factors_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let t = random_tree(&mut rng, 8);
            let n = t.len();
            let w = canonical_witness(&t);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let mut top = RatOperator::zero(n, n, NormTag::L1, NormTag::L1);
            for (j, &i) in perm.iter().enumerate() {
                top.set(i, j, Rat::one());
            }
            let vstar: BTreeMap<usize, Vec<Rat>> = (0..n)
                .map(|s| (s, min_l2_vstar(&top, &w.xstar[&s]).unwrap()))
                .collect();
            let (u, v) = witness_to_factorization(&t, &w, &top, &vstar).unwrap();
            let product = v.compose(&top.compose(&u).unwrap()).unwrap();
            assert_eq!(product.entries(), sigma_matrix(&t).entries());
        }
    }

    #[test]
    fn factorization_roundtrip() {
        let t = fork();
        let w = canonical_witness(&t);
        let top = RatOperator::identity(t.len(), NormTag::L1, NormTag::L1);
        let (u, v) = witness_to_factorization(&t, &w, &top, &w.xstar).unwrap();
        let back = factorization_to_witness(&t, &u, &v, &top).unwrap();
        assert!(verify_witness(&t, &back).unwrap().ok);
        // delta meets the proof's bound 1/(|U| |V|) exactly by construction.
        let u_norm_sq = u.op_norm_sq().unwrap();
        let v_norm_sq = v.op_norm_sq().unwrap();
        assert_eq!(&back.delta * &back.delta * u_norm_sq * v_norm_sq, Rat::one());
    }

    #[test]
    fn identity_factorization_gives_delta_one() {
        let t = chain2();
        let u = RatOperator::identity(2, NormTag::L1, NormTag::L1);
        let v = RatOperator::identity(2, NormTag::Sup, NormTag::Sup);
        let top = sigma_matrix(&t);
        let w = factorization_to_witness(&t, &u, &v, &top).unwrap();
        assert_eq!(w.delta, Rat::one());
    }

    #[test]
    fn broken_factorization_reports_column() {
        let t = chain2();
        let u = RatOperator::identity(2, NormTag::L1, NormTag::L1);
        let v = RatOperator::identity(2, NormTag::Sup, NormTag::Sup);
        let top = RatOperator::identity(2, NormTag::L1, NormTag::Sup);
        assert!(matches!(
            factorization_to_witness(&t, &u, &v, &top),
            Err(FactorError::SigmaMismatch(0))
        ));
    }

    #[test]
    fn subtree_identity_and_random() {
        let t = fork();
        let phi: BTreeMap<usize, usize> = (0..t.len()).map(|i| (i, i)).collect();
        let factors = subtree_factorization(&t, &t, &phi).unwrap();
        for op in [&factors.a, &factors.u, &factors.v, &factors.b] {
            assert!(op.entries().values().all(|x| *x == Rat::one()));
            assert_eq!(op.op_norm_sq().unwrap(), Rat::one());
        }
        // 2-chain into a bigger tree: nodes 0 -> 0, 1 -> 3 in the fork.
        let phi2 = BTreeMap::from([(0, 0), (1, 3)]);
        assert!(subtree_factorization(&chain2(), &t, &phi2).is_ok());
        // Order violation: map the chain onto incomparable fork nodes.
        let bad = BTreeMap::from([(0, 1), (1, 2)]);
        assert!(matches!(
            subtree_factorization(&chain2(), &t, &bad),
            Err(FactorError::NotEmbedding(_))
        ));
    }

    #[test]
    fn random_subtree_factorizations() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let t = random_tree(&mut rng, 10);
            // Random downward-closed selection, relabeled as its own tree.
            let mut chosen = vec![false; t.len()];
            chosen[0] = true;
            for i in 1..t.len() {
                if chosen[t.parent[i].unwrap()] && rng.gen_bool(0.7) {
                    chosen[i] = true;
                }
            }
            let picked: Vec<usize> = (0..t.len()).filter(|&i| chosen[i]).collect();
            let slot: BTreeMap<usize, usize> =
                picked.iter().enumerate().map(|(k, &i)| (i, k)).collect();
            let parent = picked
                .iter()
                .map(|&i| t.parent[i].map(|p| slot[&p]))
                .collect();
            let s = FinTree::new(parent).unwrap();
            let phi: BTreeMap<usize, usize> = picked.iter().enumerate().map(|(k, &i)| (k, i)).collect();
            let factors = subtree_factorization(&s, &t, &phi).unwrap();
            assert!(factors
                .a
                .entries()
                .values()
                .chain(factors.u.entries().values())
                .all(|x| *x == Rat::one()));
        }
    }

    #[test]
    fn branch_witness_checks() {
        let family = vec![chain2(), FinTree::new(vec![None]).unwrap()];
        let thresholds = BTreeMap::from([
            (0, Rat::new(1.into(), 9.into())),
            (1, Rat::new(1.into(), 10.into())),
        ]);
        let w = canonical_branch_witness(&family, thresholds.clone()).unwrap();
        assert!(verify_branch_witness(&family, &w).unwrap().ok);
        // Violate the threshold on branch 1 only.
        let mut bad = w.clone();
        bad.thresholds.insert(1, rat_int(2));
        let report = verify_branch_witness(&family, &bad).unwrap();
        assert!(!report.ok);
        assert!(report.counterexample.unwrap().starts_with("branch 1"));
    }

    #[test]
    fn random_branch_witnesses() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..15 {
            let family: Vec<FinTree> =
                (0..rng.gen_range(1..=3)).map(|_| random_tree(&mut rng, 4)).collect();
            let thresholds = (0..family.len())
                .map(|b| (b, Rat::new(1.into(), (10 + b as i64).into())))
                .collect();
            let mut w = canonical_branch_witness(&family, thresholds).unwrap();
            // Scale the diagonal; pairings stay strictly above 1/2.
            let (glued, _) = glue_family(&family).unwrap();
            for s in 0..glued.len() {
                if s == glued.root() {
                    continue;
                }
                let c = Rat::new(rng.gen_range(3i64..=4).into(), 4.into());
                w.witness.x.get_mut(&s).unwrap()[s] = c;
            }
            assert!(verify_branch_witness(&family, &w).unwrap().ok);
        }
    }

    #[test]
    fn partial_span_projections_stay_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..10 {
            let t = random_tree(&mut rng, 7);
            let margin = grunblum_margin(&t, &canonical_witness(&t)).unwrap();
            assert!(margin <= Rat::one() + Rat::new(1.into(), 100.into()));
        }
    }

    #[test]
    fn witness_json_roundtrip() {
        let w = canonical_witness(&fork());
        let json = w.to_json();
        assert!(json.contains("\"delta\":\"1/1\""));
        assert_eq!(Witness::from_json(&json).unwrap(), w);
    }
}
