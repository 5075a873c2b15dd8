//! Finite-dimensional verification lab for the quantitative lemmas: exact
//! rational linear algebra on small coordinate spaces, unit-sphere nets,
//! annihilators, the net/annihilator lower bound, and the Kadets-Klee
//! renorming formula.
//!
//! Functionals are measured in the dual of the model norm. Distances to
//! subspaces are computed exactly: closed form for `l2` (normal equations),
//! active-set enumeration for `linf` (Chebyshev systems), interpolation
//! enumeration for `l1`. Squared rationals carry every comparison, so the
//! verdicts are exact whenever the inputs are exactly on their spheres;
//! near-unit inputs (unavoidable for generic `l2` data) are accepted within
//! a small tolerance and flagged.

use num::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rat::Rat;

/// Hard cap on the ambient dimension.
pub const DIM_CAP: usize = 8;
/// Squared-deviation tolerance for accepting near-unit vectors.
const UNIT_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum FdlabError {
    #[error("dimension {0} exceeds the cap {DIM_CAP}")]
    DimTooLarge(usize),
    #[error("subspace dimension {0} exceeds the net builder's cap 3")]
    SubspaceTooLarge(usize),
    #[error("the subspace is trivial; its unit sphere is empty")]
    TrivialSubspace,
    #[error("could not build a verified net within the refinement budget")]
    MeshInfeasible,
    #[error("preconditions failed: {}", .0.join("; "))]
    PreconditionsFailed(Vec<String>),
    #[error("subspace chain is not increasing at position {0}")]
    NotIncreasing(usize),
    #[error("inconsistent dimensions: {0}")]
    Dimension(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl Norm {
    pub fn dual(self) -> Norm {
        match self {
            Norm::L1 => Norm::Linf,
            Norm::L2 => Norm::L2,
            Norm::Linf => Norm::L1,
        }
    }
}

/// A rational coordinate model of dimension at most [`DIM_CAP`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EuclidModel {
    pub dim: usize,
    pub norm: Norm,
}

impl EuclidModel {
    pub fn new(dim: usize, norm: Norm) -> Result<Self, FdlabError> {
        if dim == 0 || dim > DIM_CAP {
            return Err(FdlabError::DimTooLarge(dim));
        }
        Ok(EuclidModel { dim, norm })
    }
}

// ---------------------------------------------------------------------------
// Rational linear algebra
// ---------------------------------------------------------------------------

fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Squared norm; exact for all three tags.
pub fn norm_sq(v: &[Rat], norm: Norm) -> Rat {
    match norm {
        Norm::L1 => {
            let s: Rat = v.iter().map(|x| x.abs()).sum();
            &s * &s
        }
        Norm::L2 => v.iter().map(|x| x * x).sum(),
        Norm::Linf => {
            let m = v.iter().map(|x| x.abs()).max().unwrap_or_else(Rat::zero);
            &m * &m
        }
    }
}

fn norm_f64(v: &[Rat], norm: Norm) -> f64 {
    norm_sq(v, norm).to_f64().unwrap_or(f64::MAX).sqrt()
}

/// Row-reduce in place; returns pivot columns.
fn rref(m: &mut Vec<Vec<Rat>>) -> Vec<usize> {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, p);
        let inv = m[r][c].clone();
        for x in &mut m[r] {
            *x = &*x / &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for c2 in 0..cols {
                    let d = &f * &m[r][c2];
                    m[i][c2] -= d;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    pivots
}

/// Solves `A x = b` for rectangular `A` (rows of `a`); returns one solution
/// with free variables at zero, or `None` when inconsistent.
fn solve(a: &[Vec<Rat>], b: &[Rat]) -> Option<Vec<Rat>> {
    let cols = a.first().map_or(0, |r| r.len());
    let mut aug: Vec<Vec<Rat>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.contains(&cols) {
        return None;
    }
    let mut x = vec![Rat::zero(); cols];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = aug[r][cols].clone();
    }
    Some(x)
}

/// Independent sublist of the given vectors.
pub fn reduce_basis(vectors: &[Vec<Rat>]) -> Vec<Vec<Rat>> {
    let mut kept: Vec<Vec<Rat>> = Vec::new();
    for v in vectors {
        let mut m: Vec<Vec<Rat>> = kept.iter().chain([v]).cloned().collect();
        let rank = rref(&mut m).len();
        if rank > kept.len() {
            kept.push(v.clone());
        }
    }
    kept
}

/// Coefficients expressing `v` in the span of `basis`, if any.
pub fn in_span(basis: &[Vec<Rat>], v: &[Rat]) -> Option<Vec<Rat>> {
    let dim = v.len();
    // Transpose: columns are the basis vectors.
    let a: Vec<Vec<Rat>> = (0..dim)
        .map(|i| basis.iter().map(|b| b[i].clone()).collect())
        .collect();
    solve(&a, v)
}

/// Basis of the annihilator `{f | f(v) = 0 for all given v}`: the nullspace
/// of the matrix whose rows are the vectors.
pub fn annihilator(vectors: &[Vec<Rat>], dim: usize) -> Vec<Vec<Rat>> {
    let mut m: Vec<Vec<Rat>> = vectors.to_vec();
    let pivots = rref(&mut m);
    let free: Vec<usize> = (0..dim).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Rat::zero(); dim];
            v[f] = Rat::one();
            for (r, &p) in pivots.iter().enumerate() {
                v[p] = -m[r][f].clone();
            }
            v
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Distances to subspaces
// ---------------------------------------------------------------------------

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in start..n {
            current.push(i);
            rec(i + 1, n, k, current, out);
            current.pop();
        }
    }
    rec(0, n, k, &mut current, &mut out);
    out
}

fn residual(x: &[Rat], basis: &[Vec<Rat>], c: &[Rat]) -> Vec<Rat> {
    (0..x.len())
        .map(|i| {
            let fit: Rat = basis.iter().zip(c).map(|(b, cj)| &b[i] * cj).sum();
            &x[i] - &fit
        })
        .collect()
}

/// Squared distance from `x` to the span of `basis` in the given norm:
/// normal equations for `l2`, Chebyshev active sets for `linf`,
/// interpolation subsets for `l1`. Exact.
pub fn dist_sq(x: &[Rat], basis: &[Vec<Rat>], norm: Norm) -> Rat {
    let basis = reduce_basis(basis);
    let k = basis.len();
    let d = x.len();
    if k == 0 {
        return norm_sq(x, norm);
    }
    match norm {
        Norm::L2 => {
            let gram: Vec<Vec<Rat>> = basis
                .iter()
                .map(|bi| basis.iter().map(|bj| dot(bi, bj)).collect())
                .collect();
            let rhs: Vec<Rat> = basis.iter().map(|b| dot(b, x)).collect();
            let c = solve(&gram, &rhs).expect("positive definite Gram matrix");
            let r = residual(x, &basis, &c);
            dot(&r, &r)
        }
        Norm::Linf => {
            // min_c max_i |x_i - (Bc)_i|: an optimal basic solution has k+1
            // active signed constraints; enumerate them.
            let mut signed: Vec<(usize, i32)> = Vec::new();
            for i in 0..d {
                signed.push((i, 1));
                signed.push((i, -1));
            }
            let mut best: Option<Rat> = None;
            for subset in combinations(signed.len(), (k + 1).min(signed.len())) {
                // Unknowns (c_1..c_k, t); rows s*(x_i - (Bc)_i) = t.
                let a: Vec<Vec<Rat>> = subset
                    .iter()
                    .map(|&idx| {
                        let (i, s) = signed[idx];
                        let mut row: Vec<Rat> =
                            basis.iter().map(|b| Rat::from_integer((-s).into()) * &b[i]).collect();
                        row.push(Rat::from_integer((-1).into()));
                        row
                    })
                    .collect();
                let b: Vec<Rat> = subset
                    .iter()
                    .map(|&idx| {
                        let (i, s) = signed[idx];
                        Rat::from_integer((-s).into()) * &x[i]
                    })
                    .collect();
                let Some(sol) = solve(&a, &b) else { continue };
                let (c, t) = sol.split_at(k);
                let t = &t[0];
                if t.is_negative() {
                    continue;
                }
                let r = residual(x, &basis, c);
                if r.iter().any(|ri| ri.abs() > *t) {
                    continue;
                }
                if best.as_ref().map_or(true, |b| t < b) {
                    best = Some(t.clone());
                }
            }
            let t = best.expect("Chebyshev problem always has a basic optimum");
            &t * &t
        }
        Norm::L1 => {
            // min_c sum_i |x_i - (Bc)_i|: with a full-rank basis the optimum
            // interpolates k coordinates; enumerate the k-subsets.
            let mut best: Option<Rat> = None;
            for subset in combinations(d, k) {
                let a: Vec<Vec<Rat>> = subset
                    .iter()
                    .map(|&i| basis.iter().map(|b| b[i].clone()).collect())
                    .collect();
                let b: Vec<Rat> = subset.iter().map(|&i| x[i].clone()).collect();
                let Some(c) = solve(&a, &b) else { continue };
                if subset.iter().any(|&i| {
                    let fit: Rat = basis.iter().zip(&c).map(|(bv, cj)| &bv[i] * cj).sum();
                    fit != x[i]
                }) {
                    continue;
                }
                let value: Rat = residual(x, &basis, &c).iter().map(|r| r.abs()).sum();
                if best.as_ref().map_or(true, |b| value < *b) {
                    best = Some(value);
                }
            }
            let v = best.expect("full-rank basis has invertible row subsets");
            &v * &v
        }
    }
}

// ---------------------------------------------------------------------------
// Sphere nets
// ---------------------------------------------------------------------------

fn rationalize(x: f64, denom_bits: u32) -> Rat {
    let denom = 2f64.powi(denom_bits as i32);
    Rat::new(
        num::BigInt::from((x * denom).round() as i64),
        num::BigInt::from(denom as i64),
    )
}

/// Builds a sphere point of the span from direction angles; exact on the
/// sphere for `l1`/`linf` (rational renormalization) and for `l2` over an
/// orthonormal basis (stereographic rational coefficients); near-unit
/// otherwise.
fn sphere_point(basis: &[Vec<Rat>], norm: Norm, orthonormal: bool, angles: &[f64]) -> Option<Vec<Rat>> {
    let k = basis.len();
    let coeff_f64: Vec<f64> = match k {
        1 => vec![angles[0].cos().signum()],
        2 => vec![angles[0].cos(), angles[0].sin()],
        3 => {
            let (th, ph) = (angles[0], angles[1]);
            vec![ph.sin() * th.cos(), ph.sin() * th.sin(), ph.cos()]
        }
        _ => return None,
    };
    let dim = basis[0].len();
    let assemble = |c: &[Rat]| -> Vec<Rat> {
        (0..dim)
            .map(|i| basis.iter().zip(c).map(|(b, cj)| &b[i] * cj).sum())
            .collect()
    };
    if norm == Norm::L2 && orthonormal {
        // Exact rational points on the coefficient sphere.
        let c = match k {
            1 => vec![Rat::from_integer((coeff_f64[0].signum() as i64).into())],
            2 => {
                let (cx, cy) = (coeff_f64[0], coeff_f64[1]);
                if cx < -0.999_999 {
                    vec![-Rat::one(), Rat::zero()]
                } else {
                    let t = rationalize(cy / (1.0 + cx), 20);
                    let t2 = &t * &t;
                    let den = Rat::one() + &t2;
                    vec![(Rat::one() - &t2) / &den, Rat::from_integer(2.into()) * &t / &den]
                }
            }
            3 => {
                let (cx, cy, cz) = (coeff_f64[0], coeff_f64[1], coeff_f64[2]);
                if cz < -0.999_999 {
                    vec![Rat::zero(), Rat::zero(), -Rat::one()]
                } else {
                    let u = rationalize(cx / (1.0 + cz), 16);
                    let v = rationalize(cy / (1.0 + cz), 16);
                    let s = &u * &u + &v * &v;
                    let den = Rat::one() + &s;
                    vec![
                        Rat::from_integer(2.into()) * &u / &den,
                        Rat::from_integer(2.into()) * &v / &den,
                        (Rat::one() - &s) / &den,
                    ]
                }
            }
            _ => return None,
        };
        return Some(assemble(&c));
    }
    let c: Vec<Rat> = coeff_f64.iter().map(|&v| rationalize(v, 16)).collect();
    let w = assemble(&c);
    match norm {
        Norm::L1 | Norm::Linf => {
            let n: Rat = match norm {
                Norm::L1 => w.iter().map(|x| x.abs()).sum(),
                _ => w.iter().map(|x| x.abs()).max().unwrap_or_else(Rat::zero),
            };
            if n.is_zero() {
                return None;
            }
            Some(w.iter().map(|x| x / &n).collect())
        }
        Norm::L2 => {
            let approx = norm_f64(&w, Norm::L2);
            if approx < 1e-9 {
                return None;
            }
            Some(w.iter().map(|x| rationalize(x.to_f64().unwrap_or(0.0) / approx, 40)).collect())
        }
    }
}

fn gram_is_identity(basis: &[Vec<Rat>]) -> bool {
    basis.iter().enumerate().all(|(i, bi)| {
        basis.iter().enumerate().all(|(j, bj)| {
            let g = dot(bi, bj);
            if i == j {
                g == Rat::one()
            } else {
                g.is_zero()
            }
        })
    })
}

fn within(a: &[Rat], b: &[Rat], delta: &Rat, norm: Norm) -> bool {
    let diff: Vec<Rat> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm_sq(&diff, norm) <= delta * delta
}

fn dist_f64(a: &[f64], b: &[f64], norm: Norm) -> f64 {
    match norm {
        Norm::L1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        Norm::L2 => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum(),
        Norm::Linf => a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max),
    }
}

fn to_f64_vec(v: &[Rat]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64().unwrap_or(0.0)).collect()
}

fn grid_angles(k: usize, m: usize) -> Vec<Vec<f64>> {
    use std::f64::consts::PI;
    match k {
        1 => vec![vec![0.0], vec![PI]],
        2 => (0..m).map(|j| vec![2.0 * PI * j as f64 / m as f64]).collect(),
        3 => {
            let rings = (m / 2).max(2);
            let mut out = vec![vec![0.0, 0.0], vec![0.0, PI]];
            for i in 1..rings {
                let phi = PI * i as f64 / rings as f64;
                for j in 0..m {
                    out.push(vec![2.0 * PI * j as f64 / m as f64, phi]);
                }
            }
            out
        }
        _ => Vec::new(),
    }
}

// --- Polytope-face covering for the polyhedral norms -----------------------

/// Linear functionals `r` on coefficient space with
/// `|sum c_i b_i| = max_j r_j . c` for the polyhedral norms: the signed
/// coordinate rows for `linf`, the sign-pattern sums for `l1`.
fn norm_constraints(basis: &[Vec<Rat>], norm: Norm) -> Vec<Vec<Rat>> {
    let k = basis.len();
    let d = basis[0].len();
    let row = |i: usize| -> Vec<Rat> { (0..k).map(|j| basis[j][i].clone()).collect() };
    match norm {
        Norm::Linf => {
            let mut out = Vec::with_capacity(2 * d);
            for i in 0..d {
                let r = row(i);
                out.push(r.iter().map(|x| -x).collect());
                out.push(r);
            }
            out
        }
        Norm::L1 => {
            let mut out = Vec::with_capacity(1 << d);
            for mask in 0..(1u32 << d) {
                let mut r = vec![Rat::zero(); k];
                for i in 0..d {
                    let ri = row(i);
                    for j in 0..k {
                        if mask & (1 << i) != 0 {
                            r[j] += &ri[j];
                        } else {
                            r[j] -= &ri[j];
                        }
                    }
                }
                out.push(r);
            }
            out
        }
        Norm::L2 => unreachable!("polyhedral constraints are for l1/linf only"),
    }
}

/// Vertices of `{c : r_j . c <= 1 for all j}` via basic-solution enumeration.
fn polytope_vertices(constraints: &[Vec<Rat>], k: usize) -> Vec<Vec<Rat>> {
    let mut vertices: Vec<Vec<Rat>> = Vec::new();
    for subset in combinations(constraints.len(), k) {
        let a: Vec<Vec<Rat>> = subset.iter().map(|&j| constraints[j].clone()).collect();
        let b = vec![Rat::one(); k];
        let Some(c) = solve(&a, &b) else { continue };
        if subset.iter().any(|&j| dot(&constraints[j], &c) != Rat::one()) {
            continue;
        }
        if constraints.iter().any(|r| dot(r, &c) > Rat::one()) {
            continue;
        }
        if !vertices.contains(&c) {
            vertices.push(c);
        }
    }
    vertices
}

/// Grid of affine combinations covering the simplex on `corners` with mesh
/// at most `target` in the coefficient norm `n`.
fn cover_simplex(
    corners: &[Vec<Rat>],
    target: &Rat,
    coeff_norm: &dyn Fn(&[Rat]) -> Rat,
    out: &mut Vec<Vec<Rat>>,
) {
    let k = corners[0].len();
    let diff = |a: &[Rat], b: &[Rat]| -> Vec<Rat> {
        a.iter().zip(b).map(|(x, y)| x - y).collect()
    };
    let mut diam = Rat::zero();
    for i in 0..corners.len() {
        for j in i + 1..corners.len() {
            let d = coeff_norm(&diff(&corners[i], &corners[j]));
            if d > diam {
                diam = d;
            }
        }
    }
    let m = if diam.is_zero() {
        1u64
    } else {
        ((&diam / target).to_f64().unwrap_or(1.0).ceil() as u64).max(1)
    };
    match corners.len() {
        1 => out.push(corners[0].clone()),
        2 => {
            for i in 0..=m {
                let t = Rat::new(i.into(), m.into());
                let p: Vec<Rat> = (0..k)
                    .map(|c| &corners[0][c] + &t * (&corners[1][c] - &corners[0][c]))
                    .collect();
                out.push(p);
            }
        }
        3 => {
            for i in 0..=m {
                for j in 0..=(m - i) {
                    let s = Rat::new(i.into(), m.into());
                    let t = Rat::new(j.into(), m.into());
                    let p: Vec<Rat> = (0..k)
                        .map(|c| {
                            &corners[0][c]
                                + &s * (&corners[1][c] - &corners[0][c])
                                + &t * (&corners[2][c] - &corners[0][c])
                        })
                        .collect();
                    out.push(p);
                }
            }
        }
        _ => unreachable!("simplices here have at most 3 corners"),
    }
}

/// Guaranteed net on the polytope sphere of a polyhedral norm: every facet
/// is gridded at mesh `target`, so any sphere point lies within `target` of
/// a grid point on its own facet.
fn polyhedral_net(
    basis: &[Vec<Rat>],
    norm: Norm,
    target: &Rat,
) -> Result<Vec<Vec<Rat>>, FdlabError> {
    let k = basis.len();
    let constraints = norm_constraints(basis, norm);
    let vertices = polytope_vertices(&constraints, k);
    if vertices.is_empty() {
        return Err(FdlabError::MeshInfeasible);
    }
    let coeff_norm = |c: &[Rat]| -> Rat {
        constraints.iter().map(|r| dot(r, c)).max().unwrap_or_else(Rat::zero)
    };
    let mut coeff_points: Vec<Vec<Rat>> = Vec::new();
    for r in &constraints {
        let face: Vec<Vec<Rat>> =
            vertices.iter().filter(|v| dot(r, v) == Rat::one()).cloned().collect();
        match (k, face.len()) {
            (_, 0) => continue,
            (1, _) | (_, 1) => coeff_points.push(face[0].clone()),
            (2, _) => {
                // The face is a segment; its lexicographic extremes span it.
                let lo = face.iter().min().unwrap().clone();
                let hi = face.iter().max().unwrap().clone();
                cover_simplex(&[lo, hi], target, &coeff_norm, &mut coeff_points);
            }
            (3, 2) => {
                cover_simplex(&face, target, &coeff_norm, &mut coeff_points)
            }
            (3, _) => {
                // Polygonal facet: order around the centroid and fan out.
                let centroid: Vec<Rat> = (0..k)
                    .map(|c| {
                        let s: Rat = face.iter().map(|v| v[c].clone()).sum();
                        s / Rat::from_integer((face.len() as i64).into())
                    })
                    .collect();
                let mut angled: Vec<(f64, &Vec<Rat>)> = face
                    .iter()
                    .map(|v| {
                        let rel = to_f64_vec(
                            &v.iter().zip(&centroid).map(|(a, b)| a - b).collect::<Vec<_>>(),
                        );
                        // Ordering only; exactness is not needed here.
                        (facet_angle(&rel, r), v)
                    })
                    .collect();
                angled.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                let n = angled.len();
                for i in 0..n {
                    let tri = [
                        centroid.clone(),
                        angled[i].1.clone(),
                        angled[(i + 1) % n].1.clone(),
                    ];
                    cover_simplex(&tri, target, &coeff_norm, &mut coeff_points);
                }
            }
            _ => unreachable!(),
        }
    }
    coeff_points.dedup();
    let dim = basis[0].len();
    Ok(coeff_points
        .iter()
        .map(|c| {
            (0..dim)
                .map(|i| basis.iter().zip(c).map(|(b, cj)| &b[i] * cj).sum())
                .collect()
        })
        .collect())
}

/// Planar ordering angle of a facet-relative vector: projects onto two fixed
/// axes spanning the facet plane (the plane orthogonal to `r` in f64).
fn facet_angle(rel: &[f64], r: &[Rat]) -> f64 {
    let rf = to_f64_vec(r);
    let norm = rf.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
    let n: Vec<f64> = rf.iter().map(|x| x / norm).collect();
    // Pick the coordinate axis least aligned with the facet normal.
    let axis = (0..n.len())
        .min_by(|&i, &j| n[i].abs().partial_cmp(&n[j].abs()).unwrap())
        .unwrap();
    let mut e1 = vec![0.0; n.len()];
    e1[axis] = 1.0;
    let proj: f64 = e1.iter().zip(&n).map(|(a, b)| a * b).sum();
    let e1: Vec<f64> = e1.iter().zip(&n).map(|(a, b)| a - proj * b).collect();
    let l1 = e1.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
    let e1: Vec<f64> = e1.iter().map(|x| x / l1).collect();
    // e2 = n x e1 (3-dimensional coefficient space).
    let e2 = [
        n[1] * e1[2] - n[2] * e1[1],
        n[2] * e1[0] - n[0] * e1[2],
        n[0] * e1[1] - n[1] * e1[0],
    ];
    let x: f64 = rel.iter().zip(&e1).map(|(a, b)| a * b).sum();
    let y: f64 = rel.iter().zip(e2.iter()).map(|(a, b)| a * b).sum();
    y.atan2(x)
}

/// A `delta`-net on the unit sphere of the span. For the polyhedral norms
/// the net grids every facet of the unit polytope at mesh `0.9 delta`,
/// which covers the sphere outright; for `l2` over an orthonormal basis an
/// angular grid with chord bound `0.9 delta` is used. Both paths are
/// additionally spot-checked by seeded sampling with exact distances. A
/// general `l2` basis falls back to a sampled adaptive grid of near-unit
/// points.
pub fn sphere_net(basis: &[Vec<Rat>], norm: Norm, delta: &Rat) -> Result<Vec<Vec<Rat>>, FdlabError> {
    let basis = reduce_basis(basis);
    let k = basis.len();
    if k == 0 {
        return Err(FdlabError::TrivialSubspace);
    }
    if k > 3 {
        return Err(FdlabError::SubspaceTooLarge(k));
    }
    let orthonormal = norm == Norm::L2 && gram_is_identity(&basis);
    if *delta >= Rat::from_integer(2.into()) {
        let point = sphere_point(&basis, norm, orthonormal, &[0.0, 0.5])
            .ok_or(FdlabError::MeshInfeasible)?;
        return Ok(vec![point]);
    }
    let delta_f = delta.to_f64().unwrap_or(0.0);
    if delta_f <= 1e-3 {
        return Err(FdlabError::MeshInfeasible);
    }
    // Build to a tighter mesh than requested so that sampling (and callers
    // sampling independently) still lands inside the radius.
    let build_delta = delta * Rat::new(9.into(), 10.into());
    let attempts: Vec<Vec<Vec<Rat>>> = match norm {
        Norm::L1 | Norm::Linf => vec![polyhedral_net(&basis, norm, &build_delta)?],
        Norm::L2 if orthonormal => {
            // Arc mesh 0.45 delta per angle bounds the chord by 0.9 delta.
            let h = 0.45 * delta_f;
            let m = ((std::f64::consts::TAU / h).ceil() as usize).max(4);
            vec![grid_angles(k, m)
                .iter()
                .filter_map(|a| sphere_point(&basis, norm, orthonormal, a))
                .collect()]
        }
        Norm::L2 => {
            let m0 = ((12.0 / delta_f).ceil() as usize).max(12);
            (0..4).map(|i| {
                grid_angles(k, m0 << i)
                    .iter()
                    .filter_map(|a| sphere_point(&basis, norm, orthonormal, a))
                    .collect()
            }).collect()
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    'attempt: for net in attempts {
        if net.is_empty() || net.len() > 50_000 {
            continue;
        }
        let net_f64: Vec<Vec<f64>> = net.iter().map(|a| to_f64_vec(a)).collect();
        for _ in 0..200 {
            let angles = vec![
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(0.0..std::f64::consts::PI),
            ];
            let Some(sample) = sphere_point(&basis, norm, orthonormal, &angles) else { continue };
            let sample_f64 = to_f64_vec(&sample);
            let best = (0..net.len())
                .min_by(|&i, &j| {
                    let di = dist_f64(&net_f64[i], &sample_f64, norm);
                    let dj = dist_f64(&net_f64[j], &sample_f64, norm);
                    di.partial_cmp(&dj).unwrap()
                })
                .expect("nonempty net");
            if !within(&net[best], &sample, delta, norm) {
                continue 'attempt;
            }
        }
        return Ok(net);
    }
    Err(FdlabError::MeshInfeasible)
}

// ---------------------------------------------------------------------------
// The lower-bound lemma
// ---------------------------------------------------------------------------

/// Result of the lower-bound check: the exact squared comparison and a
/// float margin for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerReport {
    /// `sup - |x*| / (2 + nu)` where sup ranges over the unit ball of the
    /// pre-annihilator of `F`.
    pub margin: f64,
    /// Whether `sup^2 >= (|x*|/(2+nu))^2` holds as an exact rational
    /// comparison.
    pub exact_nonneg: bool,
    /// Whether every sphere membership in the input was exact (near-unit
    /// `l2` data is accepted within tolerance but flagged here).
    pub exact_inputs: bool,
    pub sup_sq: Rat,
    pub bound_sq: Rat,
}

fn near_unit(v: &[Rat], norm: Norm, exact: &mut bool) -> bool {
    let sq = norm_sq(v, norm);
    if sq == Rat::one() {
        return true;
    }
    *exact = false;
    (sq.to_f64().unwrap_or(0.0) - 1.0).abs() <= UNIT_TOL
}

/// Verifies the lemma's preconditions (net on the subspace sphere, norming
/// vectors, annihilation) and computes the margin
/// `sup {|x*(y)| : y in B, F(y) = 0} - |x*|/(2+nu)`. The sup equals the
/// dual-norm distance from `x*` to the span of `F`, computed exactly.
pub fn lowerlemma_check(
    model: &EuclidModel,
    nu: &Rat,
    f_basis: &[Vec<Rat>],
    net: &[Vec<Rat>],
    ys: &[Vec<Rat>],
    xstar: &[Rat],
) -> Result<LowerReport, FdlabError> {
    let dual = model.norm.dual();
    let mut failures = Vec::new();
    let mut exact_inputs = true;
    if !nu.is_positive() {
        failures.push("nu must be positive".into());
    }
    for (label, vs) in [("F", f_basis), ("A", net), ("y", ys)] {
        if vs.iter().any(|v| v.len() != model.dim) {
            failures.push(format!("{label} contains a vector of the wrong dimension"));
        }
    }
    if xstar.len() != model.dim {
        failures.push("xstar has the wrong dimension".into());
    }
    if ys.len() != net.len() {
        failures.push("y must assign one vector to each net point".into());
    }
    if !failures.is_empty() {
        return Err(FdlabError::PreconditionsFailed(failures));
    }
    let reduced = reduce_basis(f_basis);
    let two = Rat::from_integer(2.into());
    let four = Rat::from_integer(4.into());
    let delta = nu / (&four + &two * nu);
    let norming_bound = (&four + nu) / (&four + &two * nu);
    // Membership via the annihilator: a is in span(F) iff every annihilating
    // functional kills it; this costs a few dot products per point.
    let f_ann = annihilator(&reduced, model.dim);
    for (idx, a) in net.iter().enumerate() {
        if f_ann.iter().any(|n| !dot(n, a).is_zero()) {
            failures.push(format!("net point {idx} is outside the subspace"));
        }
        if !near_unit(a, dual, &mut exact_inputs) {
            failures.push(format!("net point {idx} is not on the unit sphere"));
        }
    }
    // Net verification by seeded sampling: a float scan picks the nearest
    // net point, then one exact distance check confirms coverage.
    if !reduced.is_empty() && reduced.len() <= 3 && !net.is_empty() {
        let orthonormal = dual == Norm::L2 && gram_is_identity(&reduced);
        let net_f64: Vec<Vec<f64>> = net.iter().map(|a| to_f64_vec(a)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0xF00D);
        for _ in 0..60 {
            let angles = vec![
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(0.0..std::f64::consts::PI),
            ];
            let Some(sample) = sphere_point(&reduced, dual, orthonormal, &angles) else { continue };
            let sample_f64 = to_f64_vec(&sample);
            let best = (0..net.len())
                .min_by(|&i, &j| {
                    let di = dist_f64(&net_f64[i], &sample_f64, dual);
                    let dj = dist_f64(&net_f64[j], &sample_f64, dual);
                    di.partial_cmp(&dj).unwrap()
                })
                .expect("nonempty net");
            if !within(&net[best], &sample, &delta, dual) {
                failures.push("a sampled sphere point is not covered by the net".into());
                break;
            }
        }
    } else if reduced.is_empty() {
        failures.push("F is trivial".into());
    }
    for (idx, (a, y)) in net.iter().zip(ys).enumerate() {
        if !near_unit(y, model.norm, &mut exact_inputs) {
            failures.push(format!("y[{idx}] is not on the unit sphere"));
        }
        let value = dot(a, y).abs();
        let ok_exact = value >= norming_bound;
        if !ok_exact {
            if (value.to_f64().unwrap_or(0.0) - norming_bound.to_f64().unwrap_or(1.0)).abs() <= UNIT_TOL {
                exact_inputs = false;
            } else {
                failures.push(format!("y[{idx}] does not norm its net point"));
            }
        }
        if !dot(xstar, y).is_zero() {
            failures.push(format!("xstar does not annihilate y[{idx}]"));
        }
    }
    if !failures.is_empty() {
        return Err(FdlabError::PreconditionsFailed(failures));
    }
    let sup_sq = dist_sq(xstar, &reduced, dual);
    let denom = &two + nu;
    let bound_sq = norm_sq(xstar, dual) / (&denom * &denom);
    let margin = sup_sq.to_f64().unwrap_or(0.0).sqrt() - bound_sq.to_f64().unwrap_or(0.0).sqrt();
    Ok(LowerReport {
        margin,
        exact_nonneg: sup_sq >= bound_sq,
        exact_inputs,
        sup_sq,
        bound_sq,
    })
}

// ---------------------------------------------------------------------------
// Kadets-Klee formula
// ---------------------------------------------------------------------------

/// The renorming value `|x*| + (c - 1) sum 2^{-n} dist(x*, B_n)` over an
/// increasing chain of subspaces, with distances taken in the given norm.
/// The `k`-term truncation keeps the sum strictly below `|x*|`, so the
/// two-sided bound `|x*| <= value <= c |x*|` holds with slack
/// `(c-1) 2^{-k} |x*|` at the top.
pub fn kk_norm(xstar: &[Rat], chain: &[Vec<Vec<Rat>>], c: f64, norm: Norm) -> Result<f64, FdlabError> {
    if c <= 1.0 {
        return Err(FdlabError::Dimension("c must exceed 1".into()));
    }
    for (n, window) in chain.windows(2).enumerate() {
        let bigger = reduce_basis(&window[1]);
        if window[0].iter().any(|v| in_span(&bigger, v).is_none()) {
            return Err(FdlabError::NotIncreasing(n));
        }
    }
    let base = norm_f64(xstar, norm);
    let mut sum = 0.0;
    for (n, subspace) in chain.iter().enumerate() {
        let d = dist_sq(xstar, subspace, norm).to_f64().unwrap_or(0.0).sqrt();
        sum += d / 2f64.powi(n as i32 + 1);
    }
    Ok(base + (c - 1.0) * sum)
}

// ---------------------------------------------------------------------------
// Seeded randomized suites
// ---------------------------------------------------------------------------

fn random_rat(rng: &mut ChaCha8Rng) -> Rat {
    Rat::new(rng.gen_range(-6i64..=6).into(), rng.gen_range(1i64..=4).into())
}

fn random_vec_rat(rng: &mut ChaCha8Rng, dim: usize) -> Vec<Rat> {
    (0..dim).map(|_| random_rat(rng)).collect()
}

/// Norming unit vectors for dual-unit points: the attaining coordinate for
/// `linf`, the sign vector for `l1`, the point itself for `l2` (exact unit
/// points pair to 1 with themselves).
pub fn norming_vectors(net: &[Vec<Rat>], dual: Norm) -> Vec<Vec<Rat>> {
    net.iter()
        .map(|a| match dual {
            Norm::L2 => a.clone(),
            // a is linf-unit: pick a coordinate of modulus 1.
            Norm::Linf => {
                let i = (0..a.len())
                    .find(|&i| a[i].abs() == Rat::one())
                    .expect("unit linf point");
                let mut y = vec![Rat::zero(); a.len()];
                y[i] = if a[i].is_negative() { -Rat::one() } else { Rat::one() };
                y
            }
            // a is l1-unit: the sign vector norms it.
            Norm::L1 => a
                .iter()
                .map(|x| {
                    if x.is_positive() {
                        Rat::one()
                    } else if x.is_negative() {
                        -Rat::one()
                    } else {
                        Rat::zero()
                    }
                })
                .collect(),
        })
        .collect()
}

/// A seeded random rational functional annihilating the given vectors.
pub fn random_annihilating_functional(ys: &[Vec<Rat>], dim: usize, seed: u64) -> Vec<Rat> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ann = annihilator(ys, dim);
    let mut xstar = vec![Rat::zero(); dim];
    for b in &ann {
        let coef = random_rat(&mut rng);
        for (xi, bi) in xstar.iter_mut().zip(b) {
            *xi += &coef * bi;
        }
    }
    xstar
}

/// One generated lower-bound instance, kept for reporting.
pub struct LowerInstance {
    pub model: EuclidModel,
    pub nu: Rat,
    pub report: LowerReport,
}

/// Generates and checks seeded random instances of the lower-bound lemma:
/// random subspace of the dual, verified net on its sphere, norming unit
/// vectors, and a random functional annihilating them.
pub fn lower_suite(seed: u64, count: usize) -> Result<Vec<LowerInstance>, FdlabError> {
    use std::collections::HashMap;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    // Net construction dominates the cost; draw subspaces from a small pool
    // per shape and cache the verified nets.
    let mut pool: HashMap<(bool, usize, usize), Vec<Vec<Vec<Rat>>>> = HashMap::new();
    let mut nets: HashMap<(bool, usize, usize, usize), Vec<Vec<Rat>>> = HashMap::new();
    while out.len() < count {
        let dim = rng.gen_range(1..=6usize);
        let norm = [Norm::L1, Norm::L2, Norm::Linf][rng.gen_range(0..3)];
        let dual = norm.dual();
        let k = match rng.gen_range(0..10) {
            0..=5 => 1,
            6..=8 => 2.min(dim),
            _ => 3.min(dim),
        };
        let nu = if k == 3 { Rat::from_integer(2.into()) } else { Rat::one() };
        let two = Rat::from_integer(2.into());
        let four = Rat::from_integer(4.into());
        let delta = &nu / (&four + &two * &nu);
        // l2 subspaces come from signed coordinate axes so that the sphere
        // has exact rational points; l1/linf subspaces are free.
        let (f_basis, net): (Vec<Vec<Rat>>, Vec<Vec<Rat>>) = if dual == Norm::L2 {
            let mut axes: Vec<usize> = (0..dim).collect();
            for i in (1..axes.len()).rev() {
                let j = rng.gen_range(0..=i);
                axes.swap(i, j);
            }
            let signs: Vec<bool> = (0..k).map(|_| rng.gen_bool(0.5)).collect();
            let f_basis: Vec<Vec<Rat>> = (0..k)
                .map(|j| {
                    let mut v = vec![Rat::zero(); dim];
                    v[axes[j]] = if signs[j] { Rat::one() } else { -Rat::one() };
                    v
                })
                .collect();
            // Coefficient-space net on the identity basis of R^k, embedded
            // isometrically along the signed axes.
            let key = (true, k, k, 0);
            if !nets.contains_key(&key) {
                let id: Vec<Vec<Rat>> = (0..k)
                    .map(|i| {
                        let mut v = vec![Rat::zero(); k];
                        v[i] = Rat::one();
                        v
                    })
                    .collect();
                nets.insert(key, sphere_net(&id, Norm::L2, &delta)?);
            }
            let coeff_net = &nets[&key];
            let net = coeff_net
                .iter()
                .map(|c| {
                    let mut p = vec![Rat::zero(); dim];
                    for j in 0..k {
                        p[axes[j]] = if signs[j] { c[j].clone() } else { -c[j].clone() };
                    }
                    p
                })
                .collect();
            (f_basis, net)
        } else {
            let slot = pool.entry((dual == Norm::L1, k, dim)).or_insert_with(Vec::new);
            let idx = rng.gen_range(0..3usize);
            while slot.len() <= idx {
                loop {
                    let cand: Vec<Vec<Rat>> =
                        (0..k).map(|_| random_vec_rat(&mut rng, dim)).collect();
                    if reduce_basis(&cand).len() == k {
                        slot.push(cand);
                        break;
                    }
                }
            }
            let f_basis = slot[idx].clone();
            let key = (dual == Norm::L1, k, dim, idx + 1);
            if !nets.contains_key(&key) {
                nets.insert(key, sphere_net(&f_basis, dual, &delta)?);
            }
            (f_basis, nets[&key].clone())
        };
        // Norming vectors: attain the dual pairing exactly.
        let ys = norming_vectors(&net, dual);
        let xstar = random_annihilating_functional(&ys, dim, rng.gen());
        let model = EuclidModel::new(dim, norm)?;
        let report = lowerlemma_check(&model, &nu, &f_basis, &net, &ys, &xstar)?;
        out.push(LowerInstance { model, nu: nu.clone(), report });
    }
    Ok(out)
}

/// Seeded random Kadets-Klee instances; returns `(value, |x*|)` pairs, each
/// verified to satisfy the two-sided bound within `tol`.
pub fn kk_suite(seed: u64, count: usize, c: f64, tol: f64) -> Result<Vec<(f64, f64)>, FdlabError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let dim = rng.gen_range(1..=6usize);
        let norm = [Norm::L1, Norm::L2, Norm::Linf][rng.gen_range(0..3)];
        let depth = rng.gen_range(1..=3usize);
        let mut chain: Vec<Vec<Vec<Rat>>> = Vec::new();
        let mut acc: Vec<Vec<Rat>> = Vec::new();
        for _ in 0..depth {
            for _ in 0..rng.gen_range(0..=1usize) {
                acc.push(random_vec_rat(&mut rng, dim));
            }
            chain.push(acc.clone());
        }
        let xstar = random_vec_rat(&mut rng, dim);
        let value = kk_norm(&xstar, &chain, c, norm)?;
        let base = norm_f64(&xstar, norm);
        if value < base - tol || value > c * base + tol {
            return Err(FdlabError::Dimension(format!(
                "bound violated: base {base}, value {value}"
            )));
        }
        out.push((value, base));
    }
    Ok(out)
}
