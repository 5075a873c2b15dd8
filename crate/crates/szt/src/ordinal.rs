//! Ordinal arithmetic in Cantor normal form for ordinals below epsilon-0.
//!
//! An [`Ordinal`] is a finite sum of terms `w^e * c` with strictly decreasing
//! exponents and positive integer coefficients. The empty sum is 0.

use std::cmp::Ordering;
use std::fmt;

use num::bigint::BigUint;
use num::{One, Zero};
use thiserror::Error;

/// Maximum nesting depth of exponents. Everything in this crate needs depth
/// at most 3 or so; the cap turns runaway recursion into an explicit error.
pub const MAX_EXPONENT_DEPTH: usize = 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OrdinalError {
    #[error("exponent nesting depth exceeds {MAX_EXPONENT_DEPTH}")]
    DepthLimit,
    #[error("operation undefined for ordinal 0")]
    ZeroArgument,
    #[error("no N with xi <= w^alpha * 2^N + 1 exists: xi >= w^(alpha+1)")]
    DoublingUnbounded,
    #[error("oracle input out of range: need a, b < w^3 with coefficients <= 8")]
    OracleOutOfRange,
    #[error("ordinal parse error: {0}")]
    Parse(String),
}

/// An ordinal below epsilon-0 in Cantor normal form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ordinal {
    /// `(exponent, coefficient)` pairs, exponents strictly decreasing,
    /// coefficients >= 1.
    terms: Vec<(Ordinal, BigUint)>,
}

/// Shape of an ordinal: zero, successor (with predecessor), or limit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OrdinalClass {
    Zero,
    Successor(Ordinal),
    Limit,
}

impl Ordinal {
    pub fn zero() -> Self {
        Ordinal { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Ordinal::from_nat(1u32)
    }

    pub fn omega() -> Self {
        Ordinal {
            terms: vec![(Ordinal::one(), BigUint::one())],
        }
    }

    pub fn from_nat<N: Into<BigUint>>(n: N) -> Self {
        let n: BigUint = n.into();
        if n.is_zero() {
            Ordinal::zero()
        } else {
            Ordinal {
                terms: vec![(Ordinal::zero(), n)],
            }
        }
    }

    /// Builds an ordinal from CNF terms, validating canonicality.
    pub fn from_terms(terms: Vec<(Ordinal, BigUint)>) -> Result<Self, OrdinalError> {
        for window in terms.windows(2) {
            if window[0].0.cmp(&window[1].0) != Ordering::Greater {
                return Err(OrdinalError::Parse(
                    "exponents must be strictly decreasing".into(),
                ));
            }
        }
        if terms.iter().any(|(_, c)| c.is_zero()) {
            return Err(OrdinalError::Parse("coefficients must be positive".into()));
        }
        Ok(Ordinal { terms })
    }

    pub fn terms(&self) -> &[(Ordinal, BigUint)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True iff the ordinal is a natural number (possibly 0).
    pub fn is_finite(&self) -> bool {
        self.terms.len() <= 1 && self.terms.iter().all(|(e, _)| e.is_zero())
    }

    /// Returns `Some(n)` when the ordinal is the natural number `n`.
    pub fn as_nat(&self) -> Option<BigUint> {
        if self.is_zero() {
            Some(BigUint::zero())
        } else if self.is_finite() {
            Some(self.terms[0].1.clone())
        } else {
            None
        }
    }

    fn leading_exponent(&self) -> Option<&Ordinal> {
        self.terms.first().map(|(e, _)| e)
    }

    /// Nesting depth of the exponent tower: 0 for 0, else 1 + max over exponents.
    pub fn depth(&self) -> usize {
        self.terms
            .iter()
            .map(|(e, _)| 1 + e.depth())
            .max()
            .unwrap_or(0)
    }

    /// Ordinal sum. Terms of `self` below the leading exponent of `other`
    /// are absorbed.
    pub fn add(&self, other: &Ordinal) -> Ordinal {
        let Some(lead) = other.leading_exponent() else {
            return self.clone();
        };
        let mut terms: Vec<(Ordinal, BigUint)> = Vec::new();
        for (e, c) in &self.terms {
            match e.cmp(lead) {
                Ordering::Greater => terms.push((e.clone(), c.clone())),
                _ => break,
            }
        }
        let mut rest = other.terms.clone();
        if let Some(last) = self
            .terms
            .iter()
            .find(|(e, _)| e == lead)
            .map(|(_, c)| c.clone())
        {
            rest[0].1 += last;
        }
        terms.extend(rest);
        Ordinal { terms }
    }

    /// Ordinal product, distributing `self` over the CNF of `other` from the
    /// left.
    pub fn mul(&self, other: &Ordinal) -> Ordinal {
        if self.is_zero() || other.is_zero() {
            return Ordinal::zero();
        }
        let lead_exp = self.leading_exponent().unwrap().clone();
        let mut acc = Ordinal::zero();
        for (f, d) in &other.terms {
            let partial = if f.is_zero() {
                // Right factor a natural number: scale the leading coefficient.
                let mut terms = self.terms.clone();
                terms[0].1 = &terms[0].1 * d;
                Ordinal { terms }
            } else {
                Ordinal {
                    terms: vec![(lead_exp.add(f), d.clone())],
                }
            };
            acc = acc.add(&partial);
        }
        acc
    }

    /// `self * n` for a natural `n`; fast path of [`Ordinal::mul`].
    pub fn nat_mul<N: Into<BigUint>>(&self, n: N) -> Ordinal {
        self.mul(&Ordinal::from_nat(n))
    }

    /// `w^self`, failing if the exponent tower would exceed the depth cap.
    pub fn omega_pow(&self) -> Result<Ordinal, OrdinalError> {
        if self.depth() + 1 > MAX_EXPONENT_DEPTH {
            return Err(OrdinalError::DepthLimit);
        }
        Ok(Ordinal {
            terms: vec![(self.clone(), BigUint::one())],
        })
    }

    /// Zero / successor / limit classification, returning the predecessor in
    /// the successor case.
    pub fn classify(&self) -> OrdinalClass {
        match self.terms.last() {
            None => OrdinalClass::Zero,
            Some((e, c)) if e.is_zero() => {
                let mut terms = self.terms.clone();
                if c.is_one() {
                    terms.pop();
                } else {
                    let last = terms.last_mut().unwrap();
                    last.1 = &last.1 - BigUint::one();
                }
                OrdinalClass::Successor(Ordinal { terms })
            }
            Some(_) => OrdinalClass::Limit,
        }
    }

    /// The n-th element of the canonical non-decreasing sequence cofinal in
    /// `self`. Constant at the predecessor for successors; for limits a
    /// Wainer-style scheme on the CNF tail term.
    pub fn fund_seq(&self, n: u64) -> Result<Ordinal, OrdinalError> {
        match self.classify() {
            OrdinalClass::Zero => Err(OrdinalError::ZeroArgument),
            OrdinalClass::Successor(pred) => Ok(pred),
            OrdinalClass::Limit => {
                let (beta, c) = self.terms.last().unwrap().clone();
                let head = Ordinal {
                    terms: self.terms[..self.terms.len() - 1].to_vec(),
                };
                let reduced_tail = if c.is_one() {
                    Ordinal::zero()
                } else {
                    Ordinal {
                        terms: vec![(beta.clone(), &c - BigUint::one())],
                    }
                };
                let step = match beta.classify() {
                    OrdinalClass::Zero => unreachable!("limit ordinal has positive tail exponent"),
                    OrdinalClass::Successor(gamma) => {
                        if gamma.is_zero() {
                            Ordinal::from_nat(n)
                        } else {
                            gamma.omega_pow()?.nat_mul(n + 1)
                        }
                    }
                    OrdinalClass::Limit => beta.fund_seq(n)?.omega_pow()?,
                };
                Ok(head.add(&reduced_tail).add(&step))
            }
        }
    }

    /// The unique alpha with `w^alpha <= self < w^(alpha+1)`: the leading
    /// CNF exponent.
    pub fn leading_alpha(&self) -> Result<Ordinal, OrdinalError> {
        self.leading_exponent()
            .cloned()
            .ok_or(OrdinalError::ZeroArgument)
    }

    /// Minimal `N >= 0` with `self <= w^alpha * 2^N + 1`, by incremental
    /// search. Requires `self < w^(alpha+1)`.
    pub fn doubling_exponent(&self, alpha: &Ordinal) -> Result<u32, OrdinalError> {
        let alpha_succ_pow = alpha.add(&Ordinal::one()).omega_pow()?;
        if *self >= alpha_succ_pow {
            return Err(OrdinalError::DoublingUnbounded);
        }
        let omega_alpha = alpha.omega_pow()?;
        let mut pow2 = BigUint::one();
        for n in 0..u32::MAX {
            let bound = omega_alpha.mul(&Ordinal::from_nat(pow2.clone())).add(&Ordinal::one());
            if *self <= bound {
                return Ok(n);
            }
            pow2 = &pow2 * 2u32;
        }
        Err(OrdinalError::DoublingUnbounded)
    }
}

impl PartialOrd for Ordinal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ordinal {
    fn cmp(&self, other: &Self) -> Ordering {
        let mut a = self.terms.iter();
        let mut b = other.terms.iter();
        loop {
            match (a.next(), b.next()) {
                (None, None) => return Ordering::Equal,
                (None, Some(_)) => return Ordering::Less,
                (Some(_), None) => return Ordering::Greater,
                (Some((ea, ca)), Some((eb, cb))) => {
                    match ea.cmp(eb).then_with(|| ca.cmp(cb)) {
                        Ordering::Equal => continue,
                        ord => return ord,
                    }
                }
            }
        }
    }
}

impl serde::Serialize for Ordinal {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Ordinal {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Text grammar: `ordinal := "0" | term ("+" term)*`
//               `term := nat | "w" | "w*" nat | "w^(" ordinal ")" ["*" nat]`
// ---------------------------------------------------------------------------

impl fmt::Display for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, "+")?;
            }
            if e.is_zero() {
                write!(f, "{c}")?;
            } else if e.as_nat().map_or(false, |n| n == BigUint::one()) {
                if c.is_one() {
                    write!(f, "w")?;
                } else {
                    write!(f, "w*{c}")?;
                }
            } else if c.is_one() {
                write!(f, "w^({e})")?;
            } else {
                write!(f, "w^({e})*{c}")?;
            }
        }
        Ok(())
    }
}

impl std::str::FromStr for Ordinal {
    type Err = OrdinalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = Parser {
            input: s.as_bytes(),
            pos: 0,
        };
        let ord = p.ordinal()?;
        if p.pos != p.input.len() {
            return Err(OrdinalError::Parse(format!(
                "trailing input at byte {}",
                p.pos
            )));
        }
        Ok(ord)
    }
}

struct Parser<'a> {
    input: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<u8> {
        self.input.get(self.pos).copied()
    }

    fn eat(&mut self, byte: u8) -> Result<(), OrdinalError> {
        if self.peek() == Some(byte) {
            self.pos += 1;
            Ok(())
        } else {
            Err(OrdinalError::Parse(format!(
                "expected '{}' at byte {}",
                byte as char, self.pos
            )))
        }
    }

    fn nat(&mut self) -> Result<BigUint, OrdinalError> {
        let start = self.pos;
        while self.peek().map_or(false, |b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(OrdinalError::Parse(format!(
                "expected a natural number at byte {start}"
            )));
        }
        let text = std::str::from_utf8(&self.input[start..self.pos]).unwrap();
        text.parse::<BigUint>()
            .map_err(|e| OrdinalError::Parse(e.to_string()))
    }

    /// One term as an `(exponent, coefficient)` pair.
    fn term(&mut self) -> Result<(Ordinal, BigUint), OrdinalError> {
        if self.peek() == Some(b'w') {
            self.pos += 1;
            let exponent = if self.peek() == Some(b'^') {
                self.pos += 1;
                self.eat(b'(')?;
                let e = self.ordinal()?;
                self.eat(b')')?;
                e
            } else {
                Ordinal::one()
            };
            let coeff = if self.peek() == Some(b'*') {
                self.pos += 1;
                self.nat()?
            } else {
                BigUint::one()
            };
            Ok((exponent, coeff))
        } else {
            let n = self.nat()?;
            Ok((Ordinal::zero(), n))
        }
    }

    fn ordinal(&mut self) -> Result<Ordinal, OrdinalError> {
        // Lone "0" denotes the empty sum; 0 is not a valid term otherwise.
        if self.peek() == Some(b'0')
            && !self
                .input
                .get(self.pos + 1)
                .map_or(false, |b| b.is_ascii_digit())
        {
            self.pos += 1;
            return Ok(Ordinal::zero());
        }
        let mut terms = vec![self.term()?];
        while self.peek() == Some(b'+') {
            self.pos += 1;
            terms.push(self.term()?);
        }
        Ordinal::from_terms(terms)
    }
}

// ---------------------------------------------------------------------------
// Order-type oracle for validating add/mul at small ranges.
// ---------------------------------------------------------------------------

/// Binary operation selector for [`order_type_oracle`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleOp {
    Add,
    Mul,
}

const ORACLE_MAX_COEFF: u32 = 8;

/// Independent computation of `a + b` or `a * b` for `a, b < w^3` with
/// coefficients at most 8.
///
/// Works on a dense polynomial encoding: an ordinal below `w^k` is the order
/// type of a lexicographic set of k-tuples of naturals, represented here by
/// its coefficient vector `[c_0, ..., c_(k-1)]` (value `sum c_i * w^i`). The
/// concatenation order and the product order are formed on these tuple codes
/// and their types read off degree by degree; the code path shares nothing
/// with the CNF arithmetic above.
pub fn order_type_oracle(a: &Ordinal, b: &Ordinal, op: OracleOp) -> Result<Ordinal, OrdinalError> {
    let da = Dense::try_from_ordinal(a, 3)?;
    let db = Dense::try_from_ordinal(b, 3)?;
    let result = match op {
        OracleOp::Add => da.concat(&db),
        OracleOp::Mul => da.stack(&db),
    };
    Ok(result.to_ordinal())
}

/// Dense coefficient vector `[c_0, c_1, ...]` for an ordinal `sum c_i * w^i`.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Dense(Vec<BigUint>);

impl Dense {
    fn try_from_ordinal(ord: &Ordinal, max_degree: usize) -> Result<Self, OrdinalError> {
        let mut coeffs = vec![BigUint::zero(); max_degree];
        for (e, c) in ord.terms() {
            let degree = e
                .as_nat()
                .and_then(|n| usize::try_from(&n).ok())
                .ok_or(OrdinalError::OracleOutOfRange)?;
            if degree >= max_degree || *c > BigUint::from(ORACLE_MAX_COEFF) {
                return Err(OrdinalError::OracleOutOfRange);
            }
            coeffs[degree] = c.clone();
        }
        Ok(Dense(coeffs))
    }

    fn degree(&self) -> Option<usize> {
        self.0.iter().rposition(|c| !c.is_zero())
    }

    /// Order type of the concatenation "a then b" of the two tuple orders.
    /// A point of `a` with degree below `deg(b)` is followed, inside `b`'s
    /// copy, by tuples of every larger degree-`deg(b)` prefix, so it sits at
    /// no limit position of its own: only degrees `>= deg(b)` of `a` survive.
    fn concat(&self, b: &Dense) -> Dense {
        let Some(db) = b.degree() else {
            return self.clone();
        };
        let mut coeffs = b.0.clone();
        if coeffs.len() < self.0.len() {
            coeffs.resize(self.0.len(), BigUint::zero());
        }
        for (degree, c) in self.0.iter().enumerate() {
            match degree.cmp(&db) {
                Ordering::Greater => coeffs[degree] = c.clone(),
                Ordering::Equal => coeffs[degree] = &coeffs[degree] + c,
                Ordering::Less => {}
            }
        }
        Dense(coeffs)
    }

    /// Order type of `b`-many stacked copies of `a` (pairs `(j, i)`, `j` in
    /// `b`, ordered lexicographically): each point of `b` at degree `k > 0`
    /// contributes a copy of `a` whose sup is `w^(deg(a) + k)`, while the
    /// finite part of `b` contributes that many literal copies of `a`.
    fn stack(&self, b: &Dense) -> Dense {
        let (Some(da), Some(_)) = (self.degree(), b.degree()) else {
            return Dense(vec![BigUint::zero(); self.0.len()]);
        };
        let mut acc = Dense(vec![BigUint::zero(); self.0.len() + b.0.len()]);
        for (k, c) in b.0.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if k > 0 {
                let mut copy = Dense(vec![BigUint::zero(); da + k + 1]);
                copy.0[da + k] = c.clone();
                acc = acc.concat(&copy);
            } else {
                let mut n = c.clone();
                while !n.is_zero() {
                    acc = acc.concat(self);
                    n -= BigUint::one();
                }
            }
        }
        acc
    }

    fn to_ordinal(&self) -> Ordinal {
        let mut terms = Vec::new();
        for (degree, c) in self.0.iter().enumerate().rev() {
            if !c.is_zero() {
                terms.push((Ordinal::from_nat(degree as u64), c.clone()));
            }
        }
        Ordinal::from_terms(terms).expect("dense vector yields canonical CNF")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ord(s: &str) -> Ordinal {
        s.parse().unwrap()
    }

    #[test]
    fn comparison_basics() {
        assert_eq!(Ordinal::omega().cmp(&ord("3")), Ordering::Greater);
        assert_eq!(ord("w*2+1").cmp(&ord("w*2+1")), Ordering::Equal);
        assert_eq!(ord("w^(w)").cmp(&ord("w^(3)*5")), Ordering::Greater);
        assert!(ord("w") < ord("w+1"));
        assert!(ord("w^(2)") > ord("w*1000+999"));
    }

    #[test]
    fn add_absorption_and_successor() {
        assert_eq!(Ordinal::one().add(&Ordinal::omega()), Ordinal::omega());
        assert_eq!(Ordinal::omega().add(&Ordinal::one()), ord("w+1"));
        assert_eq!(ord("w^(2)+w").add(&ord("w*3")), ord("w^(2)+w*4"));
        assert_ne!(
            Ordinal::one().add(&Ordinal::omega()),
            Ordinal::omega().add(&Ordinal::one())
        );
    }

    #[test]
    fn mul_basics() {
        assert_eq!(ord("2").mul(&Ordinal::omega()), Ordinal::omega());
        assert_eq!(Ordinal::omega().mul(&ord("2")), ord("w*2"));
        assert_eq!(ord("w+1").mul(&Ordinal::omega()), ord("w^(2)"));
        assert_eq!(ord("w+1").nat_mul(4u32), ord("w*4+1"));
        assert_eq!(Ordinal::omega().nat_mul(8u32), ord("w*8"));
        assert_eq!(Ordinal::zero().nat_mul(5u32), Ordinal::zero());
    }

    #[test]
    fn omega_pow_and_depth() {
        assert_eq!(Ordinal::zero().omega_pow().unwrap(), Ordinal::one());
        assert_eq!(Ordinal::one().omega_pow().unwrap(), Ordinal::omega());
        assert_eq!(Ordinal::omega().omega_pow().unwrap(), ord("w^(w)"));
        let mut tower = Ordinal::one();
        for _ in 0..MAX_EXPONENT_DEPTH - 1 {
            tower = tower.omega_pow().unwrap();
        }
        assert_eq!(tower.omega_pow().unwrap_err(), OrdinalError::DepthLimit);
    }

    #[test]
    fn classification() {
        assert_eq!(Ordinal::zero().classify(), OrdinalClass::Zero);
        assert_eq!(
            ord("w*2+3").classify(),
            OrdinalClass::Successor(ord("w*2+2"))
        );
        assert_eq!(ord("w^(2)").classify(), OrdinalClass::Limit);
        assert_eq!(ord("1").classify(), OrdinalClass::Successor(Ordinal::zero()));
    }

    #[test]
    fn fundamental_sequences() {
        for n in 0..6 {
            assert_eq!(Ordinal::omega().fund_seq(n).unwrap(), Ordinal::from_nat(n));
            assert_eq!(ord("5").fund_seq(n).unwrap(), ord("4"));
        }
        assert_eq!(ord("w^(2)").fund_seq(3).unwrap(), ord("w*4"));
        assert_eq!(ord("w*2").fund_seq(4).unwrap(), ord("w+4"));
        assert_eq!(ord("w^(w)").fund_seq(2).unwrap(), ord("w^(2)"));
        assert_eq!(
            Ordinal::zero().fund_seq(0).unwrap_err(),
            OrdinalError::ZeroArgument
        );
    }

    #[test]
    fn leading_alpha_examples() {
        assert_eq!(ord("w*3+2").leading_alpha().unwrap(), Ordinal::one());
        assert_eq!(ord("1").leading_alpha().unwrap(), Ordinal::zero());
        assert_eq!(ord("w^(w)*2+w").leading_alpha().unwrap(), Ordinal::omega());
        assert!(Ordinal::zero().leading_alpha().is_err());
    }

    #[test]
    fn doubling_exponent_examples() {
        assert_eq!(ord("w*3+1").doubling_exponent(&Ordinal::one()).unwrap(), 2);
        assert_eq!(ord("2").doubling_exponent(&Ordinal::zero()).unwrap(), 0);
        assert_eq!(ord("w^(2)*5").doubling_exponent(&ord("2")).unwrap(), 3);
        assert_eq!(
            ord("w^(2)").doubling_exponent(&Ordinal::one()).unwrap_err(),
            OrdinalError::DoublingUnbounded
        );
    }

    #[test]
    fn oracle_examples() {
        let oracle = |a: &str, b: &str, op| order_type_oracle(&ord(a), &ord(b), op).unwrap();
        assert_eq!(oracle("1", "w", OracleOp::Add), Ordinal::omega());
        assert_eq!(oracle("w+1", "w", OracleOp::Mul), ord("w^(2)"));
        assert_eq!(oracle("w*2", "3", OracleOp::Add), ord("w*2+3"));
        assert_eq!(oracle("w^(2)+w", "w*3", OracleOp::Add), ord("w^(2)+w*4"));
        assert_eq!(oracle("w+1", "4", OracleOp::Mul), ord("w*4+1"));
        assert!(order_type_oracle(&ord("w^(3)"), &ord("1"), OracleOp::Add).is_err());
        assert!(order_type_oracle(&ord("w*9"), &ord("1"), OracleOp::Add).is_err());
    }

    #[test]
    fn parse_rejects_noncanonical() {
        assert!("w+w^(2)".parse::<Ordinal>().is_err());
        assert!("1+1".parse::<Ordinal>().is_err());
        assert!("w*0".parse::<Ordinal>().is_err());
        assert!("0+w".parse::<Ordinal>().is_err());
        assert!("".parse::<Ordinal>().is_err());
    }

    #[test]
    fn display_roundtrip() {
        for s in ["0", "1", "w", "w*4", "w+1", "w^(2)*3+w*4+7", "w^(w)", "w^(w+1)*2+5"] {
            assert_eq!(ord(s).to_string(), s);
        }
    }
}
