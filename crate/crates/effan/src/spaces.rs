//! Effective Banach spaces: finite-dimensional coordinate spaces and the
//! complex sequence space `l2`, with computable points given as streams of
//! finite rational basis combinations (`|x - approx(n)| <= 2^-n` in norm).
//!
//! The effectively generating set is fixed to the standard coordinate basis
//! `e_j`. A point is then exactly the data of the Effective Density lemma:
//! a stream of finite combinations with geometric modulus. All norms are
//! Euclidean/`l2`, so radicands of finite combinations are exact rationals
//! and norm streams inherit certificates from the integer square root.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::creal::{CComplex, CReal, QueryError};
use crate::encoding::{
    cantor_pair, cantor_unpair, rational_bijection, rational_bijection_index,
};
use crate::rat::{rat_sqrt_approx, GaussianRational, Rational};

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum SpaceError {
    #[error("space mismatch: {0} vs {1}")]
    Mismatch(String, String),
    #[error("basis index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("real space cannot carry a nonzero imaginary coefficient at index {index}")]
    ComplexCoefficientInRealSpace { index: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Field {
    Real,
    Complex,
}

/// The two space kinds carried by this crate: `F^dim` and complex `l2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceDesc {
    FinDim { dim: usize, field: Field },
    L2Seq,
}

impl fmt::Display for SpaceDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceDesc::FinDim { dim, field: Field::Real } => write!(f, "R^{dim}"),
            SpaceDesc::FinDim { dim, field: Field::Complex } => write!(f, "C^{dim}"),
            SpaceDesc::L2Seq => write!(f, "l2"),
        }
    }
}

impl SpaceDesc {
    pub fn real(dim: usize) -> Self {
        assert!(dim >= 1);
        SpaceDesc::FinDim { dim, field: Field::Real }
    }

    pub fn complex(dim: usize) -> Self {
        assert!(dim >= 1);
        SpaceDesc::FinDim { dim, field: Field::Complex }
    }

    pub fn l2() -> Self {
        SpaceDesc::L2Seq
    }

    pub fn validate_combo(&self, combo: &FiniteCombo) -> Result<(), SpaceError> {
        match self {
            SpaceDesc::L2Seq => Ok(()),
            SpaceDesc::FinDim { dim, field } => {
                for (index, coeff) in combo.terms() {
                    if *index >= *dim {
                        return Err(SpaceError::IndexOutOfRange { index: *index, dim: *dim });
                    }
                    if *field == Field::Real && !coeff.im.is_zero() {
                        return Err(SpaceError::ComplexCoefficientInRealSpace { index: *index });
                    }
                }
                Ok(())
            }
        }
    }

    fn expect_same(&self, other: &SpaceDesc) -> Result<(), SpaceError> {
        if self == other {
            Ok(())
        } else {
            Err(SpaceError::Mismatch(self.to_string(), other.to_string()))
        }
    }
}

/// A finite rational basis combination: sorted indices, no zero coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FiniteCombo {
    terms: Vec<ComboTerm>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComboTerm {
    pub index: usize,
    pub coeff: GaussianRational,
}

impl FiniteCombo {
    pub fn zero() -> Self {
        FiniteCombo::default()
    }

    pub fn new(terms: impl IntoIterator<Item = (usize, GaussianRational)>) -> Self {
        let mut map: BTreeMap<usize, GaussianRational> = BTreeMap::new();
        for (i, c) in terms {
            let entry = map
                .entry(i)
                .or_insert_with(|| GaussianRational::from_int(0));
            *entry = &*entry + &c;
        }
        FiniteCombo {
            terms: map
                .into_iter()
                .filter(|(_, c)| !c.is_zero())
                .map(|(index, coeff)| ComboTerm { index, coeff })
                .collect(),
        }
    }

    pub fn singleton(index: usize, coeff: GaussianRational) -> Self {
        FiniteCombo::new([(index, coeff)])
    }

    pub fn terms(&self) -> impl Iterator<Item = (&usize, &GaussianRational)> {
        self.terms.iter().map(|t| (&t.index, &t.coeff))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, index: usize) -> GaussianRational {
        self.terms
            .iter()
            .find(|t| t.index == index)
            .map(|t| t.coeff.clone())
            .unwrap_or_else(|| GaussianRational::from_int(0))
    }

    pub fn add(&self, other: &FiniteCombo) -> FiniteCombo {
        FiniteCombo::new(
            self.terms()
                .chain(other.terms())
                .map(|(i, c)| (*i, c.clone())),
        )
    }

    pub fn sub(&self, other: &FiniteCombo) -> FiniteCombo {
        self.add(&other.scale(&GaussianRational::from_int(-1)))
    }

    pub fn scale(&self, c: &GaussianRational) -> FiniteCombo {
        if c.is_zero() {
            return FiniteCombo::zero();
        }
        FiniteCombo {
            terms: self
                .terms
                .iter()
                .map(|t| ComboTerm { index: t.index, coeff: &t.coeff * c })
                .collect(),
        }
    }

    /// Exact `||c||^2 = sum |coeff|^2`.
    pub fn norm_sq(&self) -> Rational {
        let mut s = Rational::from_int(0);
        for t in &self.terms {
            s = &s + &t.coeff.norm_sq();
        }
        s
    }

    /// A rational upper bound on the Euclidean norm.
    pub fn norm_upper(&self) -> Rational {
        let approx = rat_sqrt_approx(&self.norm_sq(), 1).expect("nonnegative radicand");
        &approx + &Rational::ratio(1, 2)
    }

    /// Exact inner product `(self | other) = sum self_j conj(other_j)`.
    pub fn inner(&self, other: &FiniteCombo) -> GaussianRational {
        let mut acc = GaussianRational::from_int(0);
        let mut i = 0;
        let mut j = 0;
        while i < self.terms.len() && j < other.terms.len() {
            let a = &self.terms[i];
            let b = &other.terms[j];
            match a.index.cmp(&b.index) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc = &acc + &(&a.coeff * &b.coeff.conj());
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn max_index(&self) -> Option<usize> {
        self.terms.last().map(|t| t.index)
    }
}

/// The norm of a fixed combination, as a computable real.
pub fn combo_norm(space: &SpaceDesc, combo: &FiniteCombo) -> Result<CReal, SpaceError> {
    space.validate_combo(combo)?;
    Ok(CReal::sqrt_of_rational(combo.norm_sq()).expect("nonnegative radicand"))
}

type ComboFn = dyn Fn(u32) -> Result<FiniteCombo, QueryError> + Send + Sync;

struct ComboStream {
    f: Box<ComboFn>,
    cache: Mutex<BTreeMap<u32, FiniteCombo>>,
}

impl ComboStream {
    fn approx(&self, n: u32) -> Result<FiniteCombo, QueryError> {
        if let Some(c) = self.cache.lock().unwrap().get(&n) {
            return Ok(c.clone());
        }
        let c = (self.f)(n)?;
        self.cache
            .lock()
            .unwrap()
            .entry(n)
            .or_insert_with(|| c.clone());
        Ok(c)
    }
}

/// A computable point of a space: a stream of finite combinations with
/// `||approx(n) - x|| <= 2^-n`.
#[derive(Clone)]
pub struct CVector {
    space: SpaceDesc,
    stream: Arc<ComboStream>,
    constant: Option<FiniteCombo>,
}

impl fmt::Debug for CVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CVector({} in {})",
            match self.approx(10) {
                Ok(c) => format!("{} terms @2^-10", c.len()),
                Err(e) => format!("<{e}>"),
            },
            self.space)
    }
}

impl CVector {
    pub fn from_fn<F>(space: SpaceDesc, f: F) -> Self
    where
        F: Fn(u32) -> Result<FiniteCombo, QueryError> + Send + Sync + 'static,
    {
        CVector {
            space,
            stream: Arc::new(ComboStream { f: Box::new(f), cache: Mutex::new(BTreeMap::new()) }),
            constant: None,
        }
    }

    pub fn from_combo(space: SpaceDesc, combo: FiniteCombo) -> Result<Self, SpaceError> {
        space.validate_combo(&combo)?;
        let c = combo.clone();
        let mut v = CVector::from_fn(space, move |_| Ok(c.clone()));
        v.constant = Some(combo);
        Ok(v)
    }

    pub fn zero(space: SpaceDesc) -> Self {
        CVector::from_combo(space, FiniteCombo::zero()).expect("empty combo is valid")
    }

    /// The exact combination this point is a constant of, when known; exact
    /// fast paths key off this.
    pub fn as_constant(&self) -> Option<&FiniteCombo> {
        self.constant.as_ref()
    }

    pub fn basis_vector(space: SpaceDesc, j: usize) -> Result<Self, SpaceError> {
        CVector::from_combo(space, FiniteCombo::singleton(j, GaussianRational::from_int(1)))
    }

    pub fn space(&self) -> &SpaceDesc {
        &self.space
    }

    pub fn approx(&self, n: u32) -> Result<FiniteCombo, QueryError> {
        self.stream.approx(n)
    }

    /// `||x||` with the same modulus shifted by one, via the reverse
    /// triangle inequality.
    pub fn norm(&self) -> CReal {
        let v = self.clone();
        CReal::from_fn(move |n| {
            let c = v.approx(n + 1)?;
            Ok(rat_sqrt_approx(&c.norm_sq(), n + 1).expect("nonnegative radicand"))
        })
    }

    pub fn add(&self, other: &CVector) -> Result<CVector, SpaceError> {
        cvector_linear(
            &[Scalar::one(), Scalar::one()],
            &[self.clone(), other.clone()],
        )
    }

    pub fn sub(&self, other: &CVector) -> Result<CVector, SpaceError> {
        cvector_linear(
            &[Scalar::one(), Scalar::Exact(GaussianRational::from_int(-1))],
            &[self.clone(), other.clone()],
        )
    }
}

/// A scalar for linear combinations: exact Gaussian rationals multiply
/// combinations with zero error, computable scalars are approximated.
#[derive(Clone)]
pub enum Scalar {
    Exact(GaussianRational),
    Stream(CComplex),
}

impl Scalar {
    pub fn one() -> Self {
        Scalar::Exact(GaussianRational::from_int(1))
    }

    pub fn from_rational(r: Rational) -> Self {
        Scalar::Exact(GaussianRational::from_rational(r))
    }
}

impl From<Rational> for Scalar {
    fn from(r: Rational) -> Self {
        Scalar::from_rational(r)
    }
}

impl From<GaussianRational> for Scalar {
    fn from(g: GaussianRational) -> Self {
        Scalar::Exact(g)
    }
}

impl From<CComplex> for Scalar {
    fn from(z: CComplex) -> Self {
        Scalar::Stream(z)
    }
}

fn ceil_log2_usize(m: usize) -> u32 {
    (usize::BITS - m.saturating_sub(1).leading_zeros()).min(62)
}

/// `sum_i c_i x_i` with per-term precision budgeting: each of the `m` terms
/// receives `2^-(N+1)/m`, split between scalar and vector error for stream
/// scalars and spent entirely on the vector for exact ones.
pub fn cvector_linear(scalars: &[Scalar], vectors: &[CVector]) -> Result<CVector, SpaceError> {
    if scalars.len() != vectors.len() {
        return Err(SpaceError::LengthMismatch(scalars.len(), vectors.len()));
    }
    assert!(!vectors.is_empty(), "empty linear combination has no space");
    let space = *vectors[0].space();
    for v in vectors {
        space.expect_same(v.space())?;
    }
    let terms: Vec<(Scalar, CVector)> = scalars
        .iter()
        .cloned()
        .zip(vectors.iter().cloned())
        .collect();
    let lm = ceil_log2_usize(terms.len());
    Ok(CVector::from_fn(space, move |n| {
        let mut acc = FiniteCombo::zero();
        for (c, x) in &terms {
            let term = match c {
                Scalar::Exact(g) => {
                    if g.is_zero() {
                        continue;
                    }
                    let shift = g.abs_upper().mag_exponent();
                    let combo = x.approx(n + 1 + lm + shift)?;
                    combo.scale(g)
                }
                Scalar::Stream(z) => {
                    let bx = &x.approx(0)?.norm_upper() + &Rational::from_int(1);
                    let g0 = z.approx_gaussian(0)?;
                    let bc = &g0.abs_upper() + &Rational::from_int(2);
                    let pc = n + 3 + lm + bx.mag_exponent();
                    let px = n + 2 + lm + bc.mag_exponent();
                    let g = z.approx_gaussian(pc)?;
                    x.approx(px)?.scale(&g)
                }
            };
            acc = acc.add(&term);
        }
        Ok(acc)
    }))
}

/// An effectively convergent sequence of points.
#[derive(Clone)]
pub struct VecSeq {
    pub at: Arc<dyn Fn(u64) -> CVector + Send + Sync>,
    pub modulus: Arc<dyn Fn(u32) -> u64 + Send + Sync>,
}

impl VecSeq {
    pub fn new<A, M>(at: A, modulus: M) -> Self
    where
        A: Fn(u64) -> CVector + Send + Sync + 'static,
        M: Fn(u32) -> u64 + Send + Sync + 'static,
    {
        VecSeq { at: Arc::new(at), modulus: Arc::new(modulus) }
    }
}

/// Effective limit of a vector sequence along its modulus.
pub fn cvector_lim_star(space: SpaceDesc, seq: &VecSeq) -> CVector {
    let seq = seq.clone();
    CVector::from_fn(space, move |n| {
        let k = (seq.modulus)(n + 1);
        (seq.at)(k).approx(n + 1)
    })
}

/// `(x | y)` as a computable complex number, by the bilinear estimate
/// `|(x|y) - (x_p|y_p)| <= Bx ||y - y_p|| + ||x - x_p|| By'`.
pub fn inner_product(x: &CVector, y: &CVector) -> Result<CComplex, SpaceError> {
    x.space().expect_same(y.space())?;
    let (x, y) = (x.clone(), y.clone());
    Ok(CComplex::from_gaussian_fn(move |n| {
        let bx = &x.approx(0)?.norm_upper() + &Rational::from_int(1);
        let by = &y.approx(0)?.norm_upper() + &Rational::from_int(1);
        let p = n + 1 + (&(&bx + &by) + &Rational::from_int(1)).mag_exponent();
        Ok(x.approx(p)?.inner(&y.approx(p)?))
    }))
}

/// Heaviside re-indexing of a double sum: collapses
/// `sum_{j<=x} sum_{i<=f(j)} a(i,j) e_i` into a single combination whose
/// coefficient at `i` is `sum_{j<=x} a(i,j) [f(j) >= i]`.
pub fn merge_double_sum(
    outer_bound: usize,
    inner_bound: &dyn Fn(usize) -> usize,
    coeff: &dyn Fn(usize, usize) -> GaussianRational,
) -> FiniteCombo {
    let max_i = (0..=outer_bound).map(inner_bound).max().unwrap_or(0);
    let mut terms = Vec::new();
    for i in 0..=max_i {
        let mut acc = GaussianRational::from_int(0);
        for j in 0..=outer_bound {
            if inner_bound(j) >= i {
                acc = &acc + &coeff(i, j);
            }
        }
        terms.push((i, acc));
    }
    FiniteCombo::new(terms)
}

/// Canonical bijective enumeration of finite combinations (v1, frozen):
/// a combination is coded as a list of (index-gap, nonzero-coefficient)
/// pairs, each Cantor-paired, the list coded by iterated Cantor pairing
/// with a +1 shift, and nonzero Gaussian rationals coded by Cantor-pairing
/// two Calkin-Wilf rational codes and skipping the origin slot.
pub fn combo_enum(n: &BigUint) -> FiniteCombo {
    let mut rest = n.clone();
    let mut next_index = 0usize;
    let mut terms = Vec::new();
    while !rest.is_zero() {
        let (head, tail) = cantor_unpair(&(rest - BigUint::one()));
        let (gap, coeff_code) = cantor_unpair(&head);
        let gap = usize::try_from(&gap).unwrap_or(usize::MAX / 4);
        next_index += gap;
        terms.push((next_index, gaussian_nonzero(&coeff_code)));
        next_index += 1;
        rest = tail;
    }
    FiniteCombo::new(terms)
}

/// Inverse of [`combo_enum`] on canonical combinations.
pub fn combo_index(c: &FiniteCombo) -> BigUint {
    let mut code = BigUint::zero();
    let mut prev_end: Option<usize> = None;
    let mut heads = Vec::new();
    for (i, coeff) in c.terms() {
        let gap = match prev_end {
            None => *i,
            Some(e) => *i - e - 1,
        };
        prev_end = Some(*i);
        heads.push(cantor_pair(
            &BigUint::from(gap),
            &gaussian_nonzero_index(coeff),
        ));
    }
    for head in heads.into_iter().rev() {
        code = cantor_pair(&head, &code) + BigUint::one();
    }
    code
}

/// The basis-recovery function: the enumeration index of `e_j`.
pub fn basis_index(j: usize) -> BigUint {
    combo_index(&FiniteCombo::singleton(j, GaussianRational::from_int(1)))
}

fn gaussian_nonzero(code: &BigUint) -> GaussianRational {
    let (re, im) = cantor_unpair(&(code + BigUint::one()));
    GaussianRational::new(rational_bijection(&re), rational_bijection(&im))
}

fn gaussian_nonzero_index(g: &GaussianRational) -> BigUint {
    assert!(!g.is_zero(), "zero coefficients are never stored");
    cantor_pair(
        &rational_bijection_index(&g.re),
        &rational_bijection_index(&g.im),
    ) - BigUint::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    fn g(n: i64, d: i64) -> GaussianRational {
        GaussianRational::from_rational(r(n, d))
    }

    fn assert_real_close(x: &CReal, value: &Rational, levels: impl IntoIterator<Item = u32>) {
        for n in levels {
            let err = (&x.expect_approx(n) - value).abs();
            assert!(err <= Rational::pow2(-(n as i64)), "level {n}: err {err}");
        }
    }

    #[test]
    fn combo_canonical_form() {
        let c = FiniteCombo::new([(3, g(1, 2)), (1, g(1, 1)), (3, g(-1, 2))]);
        assert_eq!(c.len(), 1);
        assert_eq!(c.coeff(1), g(1, 1));
        assert_eq!(c.coeff(3), g(0, 1));
        assert!(FiniteCombo::new([(0, g(0, 1))]).is_empty());
    }

    #[test]
    fn combo_norms() {
        let space = SpaceDesc::l2();
        assert_real_close(
            &combo_norm(&space, &FiniteCombo::zero()).unwrap(),
            &r(0, 1),
            [0, 10],
        );
        assert_real_close(
            &combo_norm(&space, &FiniteCombo::singleton(4, g(3, 1))).unwrap(),
            &r(3, 1),
            [0, 10, 30],
        );
        // (e0 + e1): norm sqrt(2), radicand exactly 2.
        let c = FiniteCombo::new([(0, g(1, 1)), (1, g(1, 1))]);
        assert_eq!(c.norm_sq(), r(2, 1));
        let norm = combo_norm(&space, &c).unwrap();
        let q = norm.expect_approx(30);
        assert!((&(&q * &q) - &r(2, 1)).abs() <= Rational::pow2(-27));
    }

    #[test]
    fn space_validation() {
        let real2 = SpaceDesc::real(2);
        assert!(real2
            .validate_combo(&FiniteCombo::singleton(2, g(1, 1)))
            .is_err());
        assert!(real2
            .validate_combo(&FiniteCombo::singleton(0, GaussianRational::i()))
            .is_err());
        assert!(real2.validate_combo(&FiniteCombo::singleton(1, g(7, 2))).is_ok());
        assert!(SpaceDesc::l2()
            .validate_combo(&FiniteCombo::singleton(1000, GaussianRational::i()))
            .is_ok());
    }

    #[test]
    fn linear_combinations() {
        let l2 = SpaceDesc::l2();
        let e0 = CVector::basis_vector(l2, 0).unwrap();
        let e1 = CVector::basis_vector(l2, 1).unwrap();
        let sum = e0.add(&e1).unwrap();
        let q = sum.norm().expect_approx(25);
        assert!((&(&q * &q) - &r(2, 1)).abs() <= Rational::pow2(-22));

        // 2 e0 - 2 e0 = 0 at every level.
        let two_e0 = cvector_linear(&[r(2, 1).into()], &[e0.clone()]).unwrap();
        let diff = two_e0.sub(&two_e0).unwrap();
        for n in [0u32, 8, 20] {
            assert!(diff.norm().expect_approx(n) <= Rational::pow2(-(n as i64)) + r(0, 1));
        }

        // A stream scalar: sqrt(2) * e0 has norm sqrt(2).
        let s = CComplex::from_real(CReal::sqrt_of_rational(r(2, 1)).unwrap());
        let v = cvector_linear(&[s.into()], &[e0]).unwrap();
        let q = v.norm().expect_approx(20);
        assert!((&(&q * &q) - &r(2, 1)).abs() <= Rational::pow2(-16));
    }

    #[test]
    fn lim_star_partial_sums_in_l2() {
        // x = sum_j 2^-j e_j: partial sums to k, modulus N -> N+1
        // (tail^2 = sum_{j>k} 4^-j <= 4^-k / 3 < 4^-k, tail < 2^-k).
        let l2 = SpaceDesc::l2();
        let seq = VecSeq::new(
            |k| {
                let terms: Vec<_> = (0..=k as usize)
                    .map(|j| {
                        (j, GaussianRational::from_rational(Rational::pow2(-(j as i64))))
                    })
                    .collect();
                CVector::from_combo(SpaceDesc::l2(), FiniteCombo::new(terms)).unwrap()
            },
            |n| u64::from(n) + 1,
        );
        let x = cvector_lim_star(l2, &seq);
        // ||x||^2 = sum 4^-j = 4/3.
        let q = x.norm().expect_approx(20);
        let err = (&(&q * &q) - &r(4, 3)).abs();
        assert!(err <= Rational::pow2(-17), "err {err}");

        // Sequence e_k 2^-k -> 0.
        let seq = VecSeq::new(
            |k| {
                CVector::from_combo(
                    SpaceDesc::l2(),
                    FiniteCombo::singleton(
                        k as usize,
                        GaussianRational::from_rational(Rational::pow2(-(k as i64))),
                    ),
                )
                .unwrap()
            },
            |n| u64::from(n),
        );
        let zero = cvector_lim_star(SpaceDesc::l2(), &seq);
        assert!(zero.norm().expect_approx(12) <= Rational::pow2(-11));
    }

    #[test]
    fn inner_products() {
        let l2 = SpaceDesc::l2();
        let e0 = CVector::basis_vector(l2, 0).unwrap();
        let e1 = CVector::basis_vector(l2, 1).unwrap();
        let ip = inner_product(&e0, &e1).unwrap();
        assert_real_close(&ip.re, &r(0, 1), [0, 10]);
        assert_real_close(&ip.im, &r(0, 1), [0, 10]);
        let ip = inner_product(&e0, &e0).unwrap();
        assert_real_close(&ip.re, &r(1, 1), [0, 10, 25]);

        // (1,1) . (1,-1) = 0 exactly.
        let x = CVector::from_combo(l2, FiniteCombo::new([(0, g(1, 1)), (1, g(1, 1))])).unwrap();
        let y = CVector::from_combo(l2, FiniteCombo::new([(0, g(1, 1)), (1, g(-1, 1))])).unwrap();
        let ip = inner_product(&x, &y).unwrap();
        assert_real_close(&ip.re, &r(0, 1), [0, 15]);

        // Conjugate symmetry on a complex pair.
        let z = CVector::from_combo(l2, FiniteCombo::singleton(0, GaussianRational::i())).unwrap();
        let w = CVector::basis_vector(l2, 0).unwrap();
        let zw = inner_product(&z, &w).unwrap().approx_gaussian(10).unwrap();
        let wz = inner_product(&w, &z).unwrap().approx_gaussian(10).unwrap();
        assert_eq!(zw, wz.conj());
    }

    #[test]
    fn parallelogram_law_exact_on_radicands() {
        let combos = [
            FiniteCombo::new([(0, g(1, 2)), (2, g(-3, 1))]),
            FiniteCombo::new([(1, GaussianRational::new(r(1, 3), r(1, 5)))]),
            FiniteCombo::new([(0, g(2, 1)), (1, g(1, 7)), (5, GaussianRational::i())]),
        ];
        for x in &combos {
            for y in &combos {
                let lhs = &x.add(y).norm_sq() + &x.sub(y).norm_sq();
                let rhs_half = &x.norm_sq() + &y.norm_sq();
                assert_eq!(lhs, &rhs_half + &rhs_half);
            }
        }
    }

    #[test]
    fn merge_double_sum_hand_case() {
        // x=1, f(0)=0, f(1)=1, all a=1: coefficient 2 on e0 and 1 on e1.
        let merged = merge_double_sum(1, &|j| j, &|_i, _j| g(1, 1));
        assert_eq!(merged.coeff(0), g(2, 1));
        assert_eq!(merged.coeff(1), g(1, 1));
        let zero = merge_double_sum(3, &|_| 2, &|_, _| g(0, 1));
        assert!(zero.is_empty());
    }

    #[test]
    fn merge_double_sum_matches_brute_force() {
        let mut state = 0x2545f4914f6cdd1du64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..200 {
            let x = (next() % 5) as usize;
            let f_vals: Vec<usize> = (0..=x).map(|_| (next() % 5) as usize).collect();
            let coeffs: Vec<Vec<GaussianRational>> = (0..=x)
                .map(|_| {
                    (0..=5)
                        .map(|_| {
                            GaussianRational::new(
                                r((next() % 9) as i64 - 4, 1 + (next() % 4) as i64),
                                r((next() % 9) as i64 - 4, 1 + (next() % 4) as i64),
                            )
                        })
                        .collect()
                })
                .collect();
            let f = |j: usize| f_vals[j];
            let a = |i: usize, j: usize| coeffs[j][i].clone();
            let merged = merge_double_sum(x, &f, &a);
            // Brute force: loop the double sum directly.
            let mut direct = FiniteCombo::zero();
            for j in 0..=x {
                for i in 0..=f_vals[j] {
                    direct = direct.add(&FiniteCombo::singleton(i, a(i, j)));
                }
            }
            assert_eq!(merged, direct);
        }
    }

    #[test]
    fn combo_enum_bijection() {
        assert!(combo_enum(&BigUint::zero()).is_empty());
        assert_eq!(combo_index(&FiniteCombo::zero()), BigUint::zero());
        for n in 0u64..600 {
            let n = BigUint::from(n);
            let c = combo_enum(&n);
            assert_eq!(combo_index(&c), n, "combo {c:?}");
        }
        // Round trip from the combo side, including sparse high indices.
        let samples = [
            FiniteCombo::singleton(7, g(-3, 5)),
            FiniteCombo::new([(0, g(1, 1)), (9, GaussianRational::i())]),
            FiniteCombo::new([(2, g(1, 3)), (3, g(5, 2)), (40, g(-1, 1))]),
        ];
        for c in &samples {
            assert_eq!(&combo_enum(&combo_index(c)), c);
        }
        // g(j) recovers the basis.
        for j in [0usize, 1, 5, 23] {
            let c = combo_enum(&basis_index(j));
            assert_eq!(c, FiniteCombo::singleton(j, g(1, 1)));
        }
    }
}
