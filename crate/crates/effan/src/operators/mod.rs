//! Effective bounded linear operators.
//!
//! An operator is its action on the generating set (the vectors `T e_j`)
//! plus a rational certificate `M >= ||T||`. Application transports the
//! input's modulus through the bound: to get `Tx` at level `N`, read `x` at
//! `N + 1 + K` with `2^K >= M`, push the resulting finite combination
//! through the images at per-term budgets, and collapse the double sum by
//! the Heaviside re-indexing. Shape tags (diagonal, matrix, finite-rank)
//! enable exact fast paths without changing semantics.
//!
//! Boundedness itself is Sigma_2 and never decided here: `M` is trusted,
//! and only necessary conditions of it are ever checked by tests.

pub mod special;

use std::sync::Arc;

use crate::creal::{CComplex, CReal, CSeq, QueryError};
use crate::rat::{GaussianRational, Rational};
use crate::roots::{char_poly_exact, char_poly_stream, find_roots, CPoly, RootsError};
use crate::spaces::{
    cvector_linear, inner_product, merge_double_sum, CVector, FiniteCombo, Scalar, SpaceDesc,
    SpaceError,
};

#[derive(Debug, Clone, thiserror::Error)]
pub enum OperatorError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),
    #[error("bound certificate must be positive, got {0}")]
    InvalidBound(Rational),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("step budget exhausted: {0}")]
    Budget(String),
}

/// One diagonal entry: exact, or a computable real/complex scalar.
#[derive(Clone)]
pub enum DiagEntry {
    Exact(Rational),
    Real(CReal),
    Complex(CComplex),
}

impl DiagEntry {
    fn as_complex(&self) -> CComplex {
        match self {
            DiagEntry::Exact(r) => {
                CComplex::from_gaussian(GaussianRational::from_rational(r.clone()))
            }
            DiagEntry::Real(x) => CComplex::from_real(x.clone()),
            DiagEntry::Complex(z) => z.clone(),
        }
    }

    fn sub(&self, other: &DiagEntry) -> DiagEntry {
        match (self, other) {
            (DiagEntry::Exact(a), DiagEntry::Exact(b)) => DiagEntry::Exact(a - b),
            _ => DiagEntry::Complex(self.as_complex().sub(&other.as_complex())),
        }
    }
}

/// One matrix entry: exact Gaussian rational or a computable complex number.
#[derive(Clone)]
pub enum MatrixEntry {
    Exact(GaussianRational),
    Stream(CComplex),
}

impl MatrixEntry {
    fn as_exact(&self) -> Option<&GaussianRational> {
        match self {
            MatrixEntry::Exact(g) => Some(g),
            MatrixEntry::Stream(_) => None,
        }
    }

    fn as_complex(&self) -> CComplex {
        match self {
            MatrixEntry::Exact(g) => CComplex::from_gaussian(g.clone()),
            MatrixEntry::Stream(z) => z.clone(),
        }
    }

    fn conj(&self) -> MatrixEntry {
        match self {
            MatrixEntry::Exact(g) => MatrixEntry::Exact(g.conj()),
            MatrixEntry::Stream(z) => MatrixEntry::Stream(z.conj()),
        }
    }
}

type DiagFn = dyn Fn(usize) -> DiagEntry + Send + Sync;
type ImagesFn = dyn Fn(usize) -> CVector + Send + Sync;

#[derive(Clone)]
pub enum Shape {
    Diagonal(Arc<DiagFn>),
    Matrix(Vec<Vec<MatrixEntry>>),
    FiniteRank { xs: Vec<CVector>, ys: Vec<CVector> },
    General(Arc<ImagesFn>),
}

/// An effectively determined bounded operator.
#[derive(Clone)]
pub struct EffOperator {
    domain: SpaceDesc,
    codomain: SpaceDesc,
    bound: Rational,
    shape: Shape,
}

impl EffOperator {
    pub fn diagonal(
        space: SpaceDesc,
        entries: Arc<DiagFn>,
        bound: Rational,
    ) -> Result<Self, OperatorError> {
        if !bound.is_positive() {
            return Err(OperatorError::InvalidBound(bound));
        }
        Ok(EffOperator {
            domain: space,
            codomain: space,
            bound,
            shape: Shape::Diagonal(entries),
        })
    }

    pub fn identity(space: SpaceDesc) -> Self {
        EffOperator::diagonal(
            space,
            Arc::new(|_| DiagEntry::Exact(Rational::from_int(1))),
            Rational::from_int(1),
        )
        .expect("bound 1 is positive")
    }

    /// A square matrix on `F^dim`. For exact entries the bound certificate
    /// defaults to the entrywise-sum upper bound (at least the Frobenius
    /// norm, hence at least the operator norm).
    pub fn matrix(
        space: SpaceDesc,
        entries: Vec<Vec<MatrixEntry>>,
        bound: Option<Rational>,
    ) -> Result<Self, OperatorError> {
        let SpaceDesc::FinDim { dim, .. } = space else {
            return Err(OperatorError::UnsupportedShape(
                "matrix operators need a finite-dimensional space".into(),
            ));
        };
        if entries.len() != dim || entries.iter().any(|r| r.len() != dim) {
            return Err(OperatorError::LengthMismatch(entries.len(), dim));
        }
        let bound = match bound {
            Some(b) => b,
            None => {
                let mut s = Rational::from_int(0);
                for row in &entries {
                    for e in row {
                        match e {
                            MatrixEntry::Exact(g) => s = &s + &g.abs_upper(),
                            MatrixEntry::Stream(_) => {
                                return Err(OperatorError::Precondition(
                                    "stream matrices need an explicit bound certificate".into(),
                                ))
                            }
                        }
                    }
                }
                if s.is_zero() {
                    Rational::from_int(1)
                } else {
                    s
                }
            }
        };
        if !bound.is_positive() {
            return Err(OperatorError::InvalidBound(bound));
        }
        Ok(EffOperator {
            domain: space,
            codomain: space,
            bound,
            shape: Shape::Matrix(entries),
        })
    }

    pub fn matrix_exact(
        space: SpaceDesc,
        entries: Vec<Vec<GaussianRational>>,
    ) -> Result<Self, OperatorError> {
        EffOperator::matrix(
            space,
            entries
                .into_iter()
                .map(|row| row.into_iter().map(MatrixEntry::Exact).collect())
                .collect(),
            None,
        )
    }

    /// `T = sum_i xs_i (.|ys_i)`; bound `sum ||x_i|| ||y_i||` from the
    /// level-0 approximations.
    pub fn finite_rank(xs: Vec<CVector>, ys: Vec<CVector>) -> Result<Self, OperatorError> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(OperatorError::LengthMismatch(xs.len(), ys.len()));
        }
        let space = *xs[0].space();
        let mut bound = Rational::from_int(0);
        for (x, y) in xs.iter().zip(&ys) {
            if x.space() != &space || y.space() != &space {
                return Err(SpaceError::Mismatch(space.to_string(), "rank-1 factor".into()).into());
            }
            let bx = vector_norm_upper(x)?;
            let by = vector_norm_upper(y)?;
            bound = &bound + &(&bx * &by);
        }
        if !bound.is_positive() {
            bound = Rational::from_int(1);
        }
        Ok(EffOperator {
            domain: space,
            codomain: space,
            bound,
            shape: Shape::FiniteRank { xs, ys },
        })
    }

    pub fn general(
        domain: SpaceDesc,
        codomain: SpaceDesc,
        images: Arc<ImagesFn>,
        bound: Rational,
    ) -> Result<Self, OperatorError> {
        if !bound.is_positive() {
            return Err(OperatorError::InvalidBound(bound));
        }
        Ok(EffOperator {
            domain,
            codomain,
            bound,
            shape: Shape::General(images),
        })
    }

    pub fn domain(&self) -> &SpaceDesc {
        &self.domain
    }

    pub fn codomain(&self) -> &SpaceDesc {
        &self.codomain
    }

    pub fn bound(&self) -> &Rational {
        &self.bound
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// The image `T e_j` of a generating vector.
    pub fn image(&self, j: usize) -> CVector {
        match &self.shape {
            Shape::Diagonal(entries) => match entries(j) {
                DiagEntry::Exact(r) => CVector::from_fn(self.codomain, move |_| {
                    Ok(FiniteCombo::singleton(j, GaussianRational::from_rational(r.clone())))
                }),
                DiagEntry::Real(x) => CVector::from_fn(self.codomain, move |n| {
                    Ok(FiniteCombo::singleton(
                        j,
                        GaussianRational::from_rational(x.approx(n)?),
                    ))
                }),
                DiagEntry::Complex(z) => CVector::from_fn(self.codomain, move |n| {
                    Ok(FiniteCombo::singleton(j, z.approx_gaussian(n + 1)?))
                }),
            },
            Shape::Matrix(entries) => {
                let column: Vec<MatrixEntry> =
                    entries.iter().map(|row| row[j].clone()).collect();
                if column.iter().all(|e| e.as_exact().is_some()) {
                    let combo = FiniteCombo::new(
                        column
                            .iter()
                            .enumerate()
                            .map(|(i, e)| (i, e.as_exact().unwrap().clone())),
                    );
                    CVector::from_fn(self.codomain, move |_| Ok(combo.clone()))
                } else {
                    let dim_shift = ceil_log2(column.len()) + 1;
                    CVector::from_fn(self.codomain, move |n| {
                        let p = n + 1 + dim_shift;
                        let mut terms = Vec::new();
                        for (i, e) in column.iter().enumerate() {
                            terms.push((
                                i,
                                match e {
                                    MatrixEntry::Exact(g) => g.clone(),
                                    MatrixEntry::Stream(z) => z.approx_gaussian(p)?,
                                },
                            ));
                        }
                        Ok(FiniteCombo::new(terms))
                    })
                }
            }
            Shape::FiniteRank { xs, ys } => {
                let e_j = CVector::basis_vector(self.domain, j)
                    .expect("generating indices are valid for the domain");
                let scalars: Vec<Scalar> = ys
                    .iter()
                    .map(|y| {
                        Scalar::Stream(
                            inner_product(&e_j, y).expect("factors live in the domain"),
                        )
                    })
                    .collect();
                cvector_linear(&scalars, xs).expect("factors share the codomain")
            }
            Shape::General(images) => images(j),
        }
    }
}

fn ceil_log2(m: usize) -> u32 {
    (usize::BITS - m.saturating_sub(1).leading_zeros()).min(62)
}

/// Rational upper bound `||x|| <= ||x_0|| + 1` from the level-0 combo.
fn vector_norm_upper(x: &CVector) -> Result<Rational, OperatorError> {
    let c = x
        .approx(0)
        .map_err(|e| OperatorError::Budget(e.to_string()))?;
    Ok(&c.norm_upper() + &Rational::from_int(1))
}

/// Apply an operator to a computable point; the result carries the modulus
/// `||Tx - approx(N)|| <= 2^-N` by reading `x` at `N + 1 + K` (`2^K >= M`)
/// and the images at per-term budgets.
pub fn op_apply(t: &EffOperator, x: &CVector) -> Result<CVector, OperatorError> {
    if x.space() != &t.domain {
        return Err(SpaceError::Mismatch(t.domain.to_string(), x.space().to_string()).into());
    }
    let k_m = t.bound.mag_exponent();
    let t = t.clone();
    let x = x.clone();
    let codomain = t.codomain;
    Ok(CVector::from_fn(codomain, move |n| {
        let a = x.approx(n + 1 + k_m)?;
        match &t.shape {
            // Exact diagonal scaling: only the transport error remains.
            Shape::Diagonal(entries) => {
                let m = a.len().max(1);
                let lm = ceil_log2(m);
                let mut terms = Vec::new();
                for (j, alpha) in a.terms() {
                    let coeff = match entries(*j) {
                        DiagEntry::Exact(r) => GaussianRational::from_rational(r),
                        DiagEntry::Real(v) => {
                            let p = n + 2 + lm + alpha.abs_upper().mag_exponent();
                            GaussianRational::from_rational(v.approx(p)?)
                        }
                        DiagEntry::Complex(z) => {
                            let p = n + 3 + lm + alpha.abs_upper().mag_exponent();
                            z.approx_gaussian(p)?
                        }
                    };
                    terms.push((*j, &coeff * alpha));
                }
                Ok(FiniteCombo::new(terms))
            }
            // Exact matrix-vector product on the snapshot combination.
            Shape::Matrix(entries) if entries
                .iter()
                .all(|row| row.iter().all(|e| e.as_exact().is_some())) =>
            {
                let dim = entries.len();
                let mut terms = Vec::new();
                for i in 0..dim {
                    let mut acc = GaussianRational::from_int(0);
                    for (j, alpha) in a.terms() {
                        acc = &acc + &(entries[i][*j].as_exact().unwrap() * alpha);
                    }
                    terms.push((i, acc));
                }
                Ok(FiniteCombo::new(terms))
            }
            // General route: per-term image evaluation plus the Heaviside
            // collapse of the double sum.
            _ => {
                if a.is_empty() {
                    return Ok(FiniteCombo::zero());
                }
                let m = a.len();
                let lm = ceil_log2(m);
                let mut scaled: Vec<FiniteCombo> = Vec::with_capacity(m);
                for (j, alpha) in a.terms() {
                    let l_j = n + 2 + lm + alpha.abs_upper().mag_exponent();
                    let img = t.image(*j).approx(l_j)?;
                    scaled.push(img.scale(alpha));
                }
                let inner_bound = |j: usize| scaled[j].max_index().unwrap_or(0);
                let coeff = |i: usize, j: usize| scaled[j].coeff(i);
                Ok(merge_double_sum(m - 1, &inner_bound, &coeff))
            }
        }
    }))
}

/// `F . G`: images are `F(G e_j)`, the bound certificate multiplies.
pub fn op_compose(f: &EffOperator, g: &EffOperator) -> Result<EffOperator, OperatorError> {
    if g.codomain != f.domain {
        return Err(SpaceError::Mismatch(g.codomain.to_string(), f.domain.to_string()).into());
    }
    let (f_cl, g_cl) = (f.clone(), g.clone());
    EffOperator::general(
        g.domain,
        f.codomain,
        Arc::new(move |j| {
            op_apply(&f_cl, &g_cl.image(j)).expect("composition spaces were checked")
        }),
        &f.bound * &g.bound,
    )
}

/// Conjugate transpose of a matrix-shaped operator.
pub fn op_adjoint_matrix(t: &EffOperator) -> Result<EffOperator, OperatorError> {
    let Shape::Matrix(entries) = &t.shape else {
        return Err(OperatorError::UnsupportedShape(
            "adjoint is implemented for matrix shapes".into(),
        ));
    };
    let dim = entries.len();
    let transposed: Vec<Vec<MatrixEntry>> = (0..dim)
        .map(|i| (0..dim).map(|j| entries[j][i].conj()).collect())
        .collect();
    EffOperator::matrix(t.domain, transposed, Some(t.bound.clone()))
}

/// Difference `A - B` (used by neighbourhood membership): exact entrywise on
/// matching diagonal/matrix shapes, image-wise otherwise.
pub fn op_sub(a: &EffOperator, b: &EffOperator) -> Result<EffOperator, OperatorError> {
    if a.domain != b.domain || a.codomain != b.codomain {
        return Err(SpaceError::Mismatch(a.domain.to_string(), b.domain.to_string()).into());
    }
    let bound = &a.bound + &b.bound;
    match (&a.shape, &b.shape) {
        (Shape::Diagonal(ea), Shape::Diagonal(eb)) => {
            let (ea, eb) = (ea.clone(), eb.clone());
            EffOperator::diagonal(a.domain, Arc::new(move |j| ea(j).sub(&eb(j))), bound)
        }
        (Shape::Matrix(ma), Shape::Matrix(mb)) => {
            let dim = ma.len();
            let entries: Vec<Vec<MatrixEntry>> = (0..dim)
                .map(|i| {
                    (0..dim)
                        .map(|j| match (&ma[i][j], &mb[i][j]) {
                            (MatrixEntry::Exact(x), MatrixEntry::Exact(y)) => {
                                MatrixEntry::Exact(x - y)
                            }
                            (x, y) => MatrixEntry::Stream(x.as_complex().sub(&y.as_complex())),
                        })
                        .collect()
                })
                .collect();
            EffOperator::matrix(a.domain, entries, Some(bound))
        }
        _ => {
            let (ac, bc) = (a.clone(), b.clone());
            EffOperator::general(
                a.domain,
                a.codomain,
                Arc::new(move |j| {
                    ac.image(j)
                        .sub(&bc.image(j))
                        .expect("images share the codomain")
                }),
                bound,
            )
        }
    }
}

fn roots_to_query(e: RootsError) -> QueryError {
    match e {
        RootsError::Query(q) => q,
        RootsError::Budget { level, .. } => QueryError::BudgetExhausted { level },
        other => QueryError::CertificateRefuted {
            level: 0,
            detail: other.to_string(),
        },
    }
}

/// The largest real part over all root clusters at level `n+1`; for
/// polynomials with nonnegative real spectrum this is `lambda_max` within
/// `2^-n`.
fn lambda_max_real(poly: &Arc<CPoly>) -> CReal {
    let poly = poly.clone();
    CReal::from_fn(move |n| {
        let clusters = find_roots(&poly, n + 1).map_err(roots_to_query)?;
        let mut best = Rational::from_int(0);
        for c in &clusters {
            if c.center.re > best {
                best = c.center.re.clone();
            }
        }
        Ok(best)
    })
}

/// Operator norm of a matrix-shaped operator on a finite-dimensional
/// Hilbert space: `sqrt(lambda_max(A* A))` through the characteristic
/// polynomial and the certified root finder.
pub fn findim_norm(t: &EffOperator) -> Result<CReal, OperatorError> {
    let Shape::Matrix(entries) = &t.shape else {
        return Err(OperatorError::UnsupportedShape(
            "findim_norm is for matrix shapes".into(),
        ));
    };
    let dim = entries.len();
    let poly = if entries
        .iter()
        .all(|row| row.iter().all(|e| e.as_exact().is_some()))
    {
        // A* A exactly.
        let a: Vec<Vec<GaussianRational>> = entries
            .iter()
            .map(|row| row.iter().map(|e| e.as_exact().unwrap().clone()).collect())
            .collect();
        let mut ata = vec![vec![GaussianRational::from_int(0); dim]; dim];
        for (i, row) in ata.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                for a_k in a.iter() {
                    *cell = &*cell + &(&a_k[i].conj() * &a_k[j]);
                }
            }
        }
        char_poly_exact(&ata).map_err(|e| OperatorError::Precondition(e.to_string()))?
    } else {
        let a: Vec<Vec<CComplex>> = entries
            .iter()
            .map(|row| row.iter().map(|e| e.as_complex()).collect())
            .collect();
        let mut ata = Vec::with_capacity(dim);
        for i in 0..dim {
            let mut row = Vec::with_capacity(dim);
            for j in 0..dim {
                let mut acc = a[0][i].conj().mul(&a[0][j]);
                for a_k in a.iter().skip(1) {
                    acc = acc.add(&a_k[i].conj().mul(&a_k[j]));
                }
                row.push(acc);
            }
            ata.push(row);
        }
        char_poly_stream(&ata).map_err(|e| OperatorError::Precondition(e.to_string()))?
    };
    Ok(lambda_max_real(&Arc::new(poly)).sqrt())
}

/// Exact Gram product `Gx * Gy` for combination lists, where
/// `Gx[i][j] = (x_j | x_i)`.
pub fn gram_product_exact(
    xs: &[FiniteCombo],
    ys: &[FiniteCombo],
) -> Result<Vec<Vec<GaussianRational>>, OperatorError> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(OperatorError::LengthMismatch(xs.len(), ys.len()));
    }
    let n = xs.len();
    let gx: Vec<Vec<GaussianRational>> = (0..n)
        .map(|i| (0..n).map(|j| xs[j].inner(&xs[i])).collect())
        .collect();
    let gy: Vec<Vec<GaussianRational>> = (0..n)
        .map(|i| (0..n).map(|j| ys[j].inner(&ys[i])).collect())
        .collect();
    Ok(crate::roots::mat_mul(&gx, &gy))
}

/// `||sum_i x_i (.|y_i)||` for exact combination factors:
/// `sqrt(lambda_max(Gx Gy))`, everything up to the root finder exact.
pub fn finite_rank_norm_combos(
    xs: &[FiniteCombo],
    ys: &[FiniteCombo],
) -> Result<CReal, OperatorError> {
    let product = gram_product_exact(xs, ys)?;
    let poly = char_poly_exact(&product).map_err(|e| OperatorError::Precondition(e.to_string()))?;
    Ok(lambda_max_real(&Arc::new(poly)).sqrt())
}

/// `||sum_i x_i (.|y_i)||` for computable factors, through computable Gram
/// matrices. Constant factors take the exact route.
pub fn finite_rank_norm(xs: &[CVector], ys: &[CVector]) -> Result<CReal, OperatorError> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(OperatorError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.iter().chain(ys).all(|v| v.as_constant().is_some()) {
        let cx: Vec<FiniteCombo> = xs.iter().map(|v| v.as_constant().unwrap().clone()).collect();
        let cy: Vec<FiniteCombo> = ys.iter().map(|v| v.as_constant().unwrap().clone()).collect();
        return finite_rank_norm_combos(&cx, &cy);
    }
    let n = xs.len();
    let gram = |vs: &[CVector]| -> Result<Vec<Vec<CComplex>>, OperatorError> {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| inner_product(&vs[j], &vs[i]).map_err(OperatorError::Space))
                    .collect()
            })
            .collect()
    };
    let gx = gram(xs)?;
    let gy = gram(ys)?;
    let mut product = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            let mut acc = gx[i][0].mul(&gy[0][j]);
            for k in 1..n {
                acc = acc.add(&gx[i][k].mul(&gy[k][j]));
            }
            row.push(acc);
        }
        product.push(row);
    }
    let poly = char_poly_stream(&product).map_err(|e| OperatorError::Precondition(e.to_string()))?;
    Ok(lambda_max_real(&Arc::new(poly)).sqrt())
}

/// Norm of an effectively compact operator: the effective limit of the
/// finite-rank norms along the operator-norm modulus
/// (`| ||T_k|| - ||T|| | <= ||T_k - T||`).
pub fn eff_compact_norm(
    stages: Arc<dyn Fn(u64) -> (Vec<CVector>, Vec<CVector>) + Send + Sync>,
    modulus: Arc<dyn Fn(u32) -> u64 + Send + Sync>,
) -> CReal {
    let seq = CSeq::new(
        move |k| {
            let (xs, ys) = stages(k);
            match finite_rank_norm(&xs, &ys) {
                Ok(norm) => norm,
                Err(e) => {
                    let msg = e.to_string();
                    CReal::from_fn(move |n| {
                        Err(QueryError::CertificateRefuted {
                            level: n,
                            detail: msg.clone(),
                        })
                    })
                }
            }
        },
        move |n| modulus(n),
    );
    CReal::lim_star(&seq)
}

/// Effective uniform continuity: `||x - y|| <= delta` implies
/// `||Tx - Ty|| <= 2^-N`, with `delta = 2^-(N+K)`, `2^K >= M`.
pub fn continuity_modulus(t: &EffOperator, n: u32) -> Rational {
    Rational::pow2(-(i64::from(n) + i64::from(t.bound.mag_exponent())))
}

/// Seminorms inducing the strong and weak operator topologies.
#[derive(Clone)]
pub enum Seminorm {
    /// `m_x(T) = ||T x||`
    Strong(CVector),
    /// `m_{x,y}(T) = |(y | T x)|`
    Weak(CVector, CVector),
}

pub fn seminorm_eval(s: &Seminorm, t: &EffOperator) -> Result<CReal, OperatorError> {
    match s {
        Seminorm::Strong(x) => Ok(op_apply(t, x)?.norm()),
        Seminorm::Weak(x, y) => {
            let tx = op_apply(t, x)?;
            Ok(inner_product(y, &tx)?.modulus())
        }
    }
}

/// A basic neighbourhood in the strong or weak operator topology.
pub struct BasicNbhd {
    pub center: EffOperator,
    pub radius: Rational,
    pub witnesses: NbhdWitnesses,
}

pub enum NbhdWitnesses {
    Strong(Vec<CVector>),
    Weak(Vec<(CVector, CVector)>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Membership {
    Inside,
    Outside,
    Unresolved,
}

/// Refine every witness seminorm of `T - center` until all certify below
/// the radius, one certifies above, or the precision budget runs out.
/// `Inside` and `Outside` answers are sound.
pub fn nbhd_member_semidecide(
    b: &BasicNbhd,
    t: &EffOperator,
    budget: u32,
) -> Result<Membership, OperatorError> {
    let diff = op_sub(t, &b.center)?;
    let seminorms: Vec<Seminorm> = match &b.witnesses {
        NbhdWitnesses::Strong(xs) => xs.iter().map(|x| Seminorm::Strong(x.clone())).collect(),
        NbhdWitnesses::Weak(ps) => ps
            .iter()
            .map(|(x, y)| Seminorm::Weak(x.clone(), y.clone()))
            .collect(),
    };
    let values: Vec<CReal> = seminorms
        .iter()
        .map(|s| seminorm_eval(s, &diff))
        .collect::<Result<_, _>>()?;
    for n in 0..=budget {
        let eps = Rational::pow2(-(n as i64));
        let mut all_below = true;
        for v in &values {
            let q = v
                .approx(n)
                .map_err(|e| OperatorError::Budget(e.to_string()))?;
            if &q - &eps > b.radius {
                return Ok(Membership::Outside);
            }
            if !(&q + &eps < b.radius) {
                all_below = false;
            }
        }
        if all_below {
            return Ok(Membership::Inside);
        }
    }
    Ok(Membership::Unresolved)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::Field;

    fn r(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    fn g(n: i64) -> GaussianRational {
        GaussianRational::from_int(n)
    }

    fn l2() -> SpaceDesc {
        SpaceDesc::l2()
    }

    fn norm_sq_close(x: &CVector, want: &Rational, n: u32) {
        let q = x.norm().expect_approx(n);
        let err = (&(&q * &q) - want).abs();
        assert!(err <= Rational::pow2(-(n as i64 - 3)), "err {err}");
    }

    #[test]
    fn identity_applies() {
        let id = EffOperator::identity(l2());
        let x = CVector::from_combo(
            l2(),
            FiniteCombo::new([(0, g(1)), (3, g(2))]),
        )
        .unwrap();
        let y = op_apply(&id, &x).unwrap();
        norm_sq_close(&y.sub(&x).unwrap(), &r(0, 1), 20);
    }

    #[test]
    fn diagonal_halves_e1() {
        let t = EffOperator::diagonal(
            l2(),
            Arc::new(|j| DiagEntry::Exact(Rational::pow2(-(j as i64)))),
            r(1, 1),
        )
        .unwrap();
        let e1 = CVector::basis_vector(l2(), 1).unwrap();
        let y = op_apply(&t, &e1).unwrap();
        let expected = CVector::from_combo(
            l2(),
            FiniteCombo::singleton(1, GaussianRational::from_rational(r(1, 2))),
        )
        .unwrap();
        norm_sq_close(&y.sub(&expected).unwrap(), &r(0, 1), 20);
    }

    #[test]
    fn exact_matrix_swap_is_exact_at_every_level() {
        let space = SpaceDesc::complex(2);
        let t = EffOperator::matrix_exact(space, vec![vec![g(0), g(1)], vec![g(1), g(0)]])
            .unwrap();
        let x = CVector::from_combo(space, FiniteCombo::new([(0, g(1)), (1, g(2))])).unwrap();
        let y = op_apply(&t, &x).unwrap();
        for n in [0u32, 7, 23] {
            let c = y.approx(n).unwrap();
            assert_eq!(c.coeff(0), g(2));
            assert_eq!(c.coeff(1), g(1));
        }
    }

    #[test]
    fn general_route_uses_heaviside_merge() {
        // The same swap matrix forced through the general route.
        let space = SpaceDesc::complex(2);
        let t = EffOperator::matrix_exact(space, vec![vec![g(0), g(1)], vec![g(1), g(0)]])
            .unwrap();
        let gen = EffOperator::general(
            space,
            space,
            {
                let t = t.clone();
                Arc::new(move |j| t.image(j))
            },
            t.bound().clone(),
        )
        .unwrap();
        let x = CVector::from_combo(space, FiniteCombo::new([(0, g(1)), (1, g(2))])).unwrap();
        let fast = op_apply(&t, &x).unwrap();
        let slow = op_apply(&gen, &x).unwrap();
        norm_sq_close(&fast.sub(&slow).unwrap(), &r(0, 1), 18);
    }

    #[test]
    fn compose_and_identity_laws() {
        let two = EffOperator::diagonal(l2(), Arc::new(|_| DiagEntry::Exact(r(2, 1))), r(2, 1))
            .unwrap();
        let three = EffOperator::diagonal(l2(), Arc::new(|_| DiagEntry::Exact(r(3, 1))), r(3, 1))
            .unwrap();
        let six = op_compose(&two, &three).unwrap();
        assert_eq!(six.bound(), &r(6, 1));
        let e0 = CVector::basis_vector(l2(), 0).unwrap();
        let y = op_apply(&six, &e0).unwrap();
        let expected =
            CVector::from_combo(l2(), FiniteCombo::singleton(0, g(6))).unwrap();
        norm_sq_close(&y.sub(&expected).unwrap(), &r(0, 1), 18);

        // compose(T, I) = T on samples.
        let id = EffOperator::identity(l2());
        let t_id = op_compose(&two, &id).unwrap();
        let z = CVector::from_combo(l2(), FiniteCombo::new([(0, g(1)), (2, g(-3))])).unwrap();
        let lhs = op_apply(&t_id, &z).unwrap();
        let rhs = op_apply(&two, &z).unwrap();
        norm_sq_close(&lhs.sub(&rhs).unwrap(), &r(0, 1), 18);
    }

    #[test]
    fn compose_matches_matrix_product() {
        let space = SpaceDesc::complex(2);
        let a = EffOperator::matrix_exact(space, vec![vec![g(1), g(2)], vec![g(0), g(1)]])
            .unwrap();
        let b = EffOperator::matrix_exact(space, vec![vec![g(3), g(0)], vec![g(1), g(1)]])
            .unwrap();
        let ab = op_compose(&a, &b).unwrap();
        // Product matrix: [[5, 2], [1, 1]].
        let product =
            EffOperator::matrix_exact(space, vec![vec![g(5), g(2)], vec![g(1), g(1)]]).unwrap();
        for sample in [
            FiniteCombo::new([(0, g(1))]),
            FiniteCombo::new([(1, g(1))]),
            FiniteCombo::new([(0, g(2)), (1, g(-1))]),
        ] {
            let x = CVector::from_combo(space, sample).unwrap();
            let lhs = op_apply(&ab, &x).unwrap();
            let rhs = op_apply(&product, &x).unwrap();
            norm_sq_close(&lhs.sub(&rhs).unwrap(), &r(0, 1), 18);
        }
    }

    #[test]
    fn adjoint_matrix_cases() {
        let space = SpaceDesc::complex(2);
        let t = EffOperator::matrix_exact(space, vec![vec![g(0), g(1)], vec![g(0), g(0)]])
            .unwrap();
        let adj = op_adjoint_matrix(&t).unwrap();
        let Shape::Matrix(m) = adj.shape() else { panic!() };
        assert_eq!(m[0][0].as_exact().unwrap(), &g(0));
        assert_eq!(m[1][0].as_exact().unwrap(), &g(1));
        // Conjugation.
        let ti = EffOperator::matrix_exact(
            space,
            vec![vec![GaussianRational::i(), g(0)], vec![g(0), g(0)]],
        )
        .unwrap();
        let adj = op_adjoint_matrix(&ti).unwrap();
        let Shape::Matrix(m) = adj.shape() else { panic!() };
        assert_eq!(m[0][0].as_exact().unwrap(), &GaussianRational::i().conj());
        // Involution.
        let twice = op_adjoint_matrix(&op_adjoint_matrix(&ti).unwrap()).unwrap();
        let Shape::Matrix(m) = twice.shape() else { panic!() };
        assert_eq!(m[0][0].as_exact().unwrap(), &GaussianRational::i());

        // Adjoint pairing (T* y | x) = (y | T x) at precision.
        let x = CVector::from_combo(space, FiniteCombo::new([(0, g(1)), (1, g(2))])).unwrap();
        let y = CVector::from_combo(space, FiniteCombo::new([(0, g(-1)), (1, g(1))])).unwrap();
        let t_adj = op_adjoint_matrix(&ti).unwrap();
        let lhs = inner_product(&op_apply(&t_adj, &y).unwrap(), &x).unwrap();
        let rhs = inner_product(&y, &op_apply(&ti, &x).unwrap()).unwrap();
        for n in [5u32, 15] {
            let d = lhs.sub(&rhs).approx_gaussian(n).unwrap();
            assert!(d.abs_upper() <= Rational::pow2(-(n as i64 - 2)));
        }
    }

    #[test]
    fn findim_norm_diagonal_and_shear() {
        let space = SpaceDesc::complex(2);
        let t = EffOperator::matrix_exact(space, vec![vec![g(3), g(0)], vec![g(0), g(4)]])
            .unwrap();
        let norm = findim_norm(&t).unwrap();
        let q = norm.expect_approx(12);
        assert!((&q - &r(4, 1)).abs() <= Rational::pow2(-12));

        // [[1,1],[0,1]]: norm^2 is the largest root of l^2 - 3l + 1,
        // (3 + sqrt 5)/2.
        let t = EffOperator::matrix_exact(space, vec![vec![g(1), g(1)], vec![g(0), g(1)]])
            .unwrap();
        let norm = findim_norm(&t).unwrap().expect_approx(16);
        let sq = &norm * &norm;
        let sqrt5 = crate::rat::rat_sqrt_approx(&r(5, 1), 30).unwrap();
        let expected = &(&r(3, 1) + &sqrt5) * &r(1, 2);
        assert!((&sq - &expected).abs() <= Rational::pow2(-10), "{sq} vs {expected}");

        let zero = EffOperator::matrix_exact(space, vec![vec![g(0), g(0)], vec![g(0), g(0)]])
            .unwrap();
        assert!(findim_norm(&zero).unwrap().expect_approx(10) <= Rational::pow2(-10));
    }

    #[test]
    fn finite_rank_norms() {
        // Rank 1: ||x (.|y)|| = ||x|| ||y||: x = 2 e0, y = 3 e1 gives 6.
        let xs = vec![FiniteCombo::singleton(0, g(2))];
        let ys = vec![FiniteCombo::singleton(1, g(3))];
        let product = gram_product_exact(&xs, &ys).unwrap();
        assert_eq!(product[0][0], g(36)); // exact radicand ||x||^2 ||y||^2
        let norm = finite_rank_norm_combos(&xs, &ys).unwrap();
        assert!((&norm.expect_approx(14) - &r(6, 1)).abs() <= Rational::pow2(-13));

        // xs = (e0, e1), ys = (e0, e0): Gx = I, Gy = [[1,1],[1,1]],
        // lambda_max = 2, norm sqrt 2.
        let xs = vec![
            FiniteCombo::singleton(0, g(1)),
            FiniteCombo::singleton(1, g(1)),
        ];
        let ys = vec![
            FiniteCombo::singleton(0, g(1)),
            FiniteCombo::singleton(0, g(1)),
        ];
        let norm = finite_rank_norm_combos(&xs, &ys).unwrap().expect_approx(16);
        let sq = &norm * &norm;
        assert!((&sq - &r(2, 1)).abs() <= Rational::pow2(-12));

        // Projection: xs = ys = (e0): norm 1.
        let e0 = vec![FiniteCombo::singleton(0, g(1))];
        let norm = finite_rank_norm_combos(&e0, &e0).unwrap().expect_approx(12);
        assert!((&norm - &r(1, 1)).abs() <= Rational::pow2(-11));

        // The genuinely lazy route agrees on the rank-1 case (no constant
        // marker, so the Gram matrices go through computable streams).
        let xs = vec![CVector::from_fn(l2(), |_| {
            Ok(FiniteCombo::singleton(0, GaussianRational::from_int(2)))
        })];
        let ys = vec![CVector::from_fn(l2(), |_| {
            Ok(FiniteCombo::singleton(1, GaussianRational::from_int(3)))
        })];
        let norm = finite_rank_norm(&xs, &ys).unwrap().expect_approx(10);
        assert!((&norm - &r(6, 1)).abs() <= Rational::pow2(-8));
    }

    #[test]
    fn eff_compact_norm_of_diagonal_sum() {
        // Partial sums of sum_j 2^-j e_j (.|e_j): norm 1 at every stage >= 0,
        // so the limit is 1.
        let stages = Arc::new(|k: u64| {
            let xs: Vec<CVector> = (0..=k as usize)
                .map(|j| {
                    CVector::from_combo(
                        SpaceDesc::l2(),
                        FiniteCombo::singleton(
                            j,
                            GaussianRational::from_rational(Rational::pow2(-(j as i64))),
                        ),
                    )
                    .unwrap()
                })
                .collect();
            let ys: Vec<CVector> = (0..=k as usize)
                .map(|j| CVector::basis_vector(SpaceDesc::l2(), j).unwrap())
                .collect();
            (xs, ys)
        });
        let norm = eff_compact_norm(stages, Arc::new(|n| u64::from(n) + 1));
        let q = norm.expect_approx(6);
        assert!((&q - &r(1, 1)).abs() <= Rational::pow2(-5), "{q}");
    }

    #[test]
    fn continuity_modulus_matches_bound_magnitude() {
        let t = EffOperator::identity(l2());
        assert_eq!(continuity_modulus(&t, 5), Rational::pow2(-5));
        let t8 = EffOperator::diagonal(l2(), Arc::new(|_| DiagEntry::Exact(r(8, 1))), r(8, 1))
            .unwrap();
        assert_eq!(continuity_modulus(&t8, 5), Rational::pow2(-8));
        // Sampled verification on the halving diagonal.
        let t = EffOperator::diagonal(
            l2(),
            Arc::new(|j| DiagEntry::Exact(Rational::pow2(-(j as i64)))),
            r(1, 1),
        )
        .unwrap();
        let delta = continuity_modulus(&t, 6);
        let x = CVector::from_combo(l2(), FiniteCombo::singleton(0, g(1))).unwrap();
        let y = CVector::from_combo(
            l2(),
            FiniteCombo::singleton(0, &g(1) + &GaussianRational::from_rational(&delta * &r(1, 2))),
        )
        .unwrap();
        let d = op_apply(&t, &x)
            .unwrap()
            .sub(&op_apply(&t, &y).unwrap())
            .unwrap();
        assert!(d.norm().expect_approx(10) <= &Rational::pow2(-6) + &Rational::pow2(-10));
    }

    #[test]
    fn seminorms_on_diagonal() {
        let space = SpaceDesc::complex(2);
        let t = EffOperator::matrix_exact(space, vec![vec![g(2), g(0)], vec![g(0), g(1)]])
            .unwrap();
        let e0 = CVector::basis_vector(space, 0).unwrap();
        let e1 = CVector::basis_vector(space, 1).unwrap();
        let strong = seminorm_eval(&Seminorm::Strong(e0.clone()), &t).unwrap();
        assert!((&strong.expect_approx(12) - &r(2, 1)).abs() <= Rational::pow2(-11));
        let weak_cross = seminorm_eval(&Seminorm::Weak(e0.clone(), e1), &EffOperator::identity(space))
            .unwrap();
        assert!(weak_cross.expect_approx(12) <= Rational::pow2(-11));
        let weak_diag = seminorm_eval(&Seminorm::Weak(e0.clone(), e0), &t).unwrap();
        assert!((&weak_diag.expect_approx(12) - &r(2, 1)).abs() <= Rational::pow2(-11));
    }

    #[test]
    fn nbhd_membership_three_ways() {
        let space = SpaceDesc::complex(2);
        let center = EffOperator::identity(space);
        let e0 = CVector::basis_vector(space, 0).unwrap();
        let nbhd = BasicNbhd {
            center: center.clone(),
            radius: r(1, 1),
            witnesses: NbhdWitnesses::Strong(vec![e0.clone()]),
        };
        // The center itself: inside at a low budget.
        assert_eq!(
            nbhd_member_semidecide(&nbhd, &center, 4).unwrap(),
            Membership::Inside
        );
        // diag(3, 1): distance 2 on witness e0: outside.
        let far = EffOperator::matrix_exact(space, vec![vec![g(3), g(0)], vec![g(0), g(1)]])
            .unwrap();
        assert_eq!(
            nbhd_member_semidecide(&nbhd, &far, 8).unwrap(),
            Membership::Outside
        );
        // diag(2, 1): distance exactly the radius: unresolvable.
        let boundary = EffOperator::matrix_exact(space, vec![vec![g(2), g(0)], vec![g(0), g(1)]])
            .unwrap();
        assert_eq!(
            nbhd_member_semidecide(&nbhd, &boundary, 10).unwrap(),
            Membership::Unresolved
        );
    }

    #[test]
    fn bound_respected_on_samples() {
        let space = SpaceDesc::FinDim { dim: 3, field: Field::Complex };
        let t = EffOperator::matrix_exact(
            space,
            vec![
                vec![g(1), g(2), g(0)],
                vec![g(0), g(-1), g(1)],
                vec![g(3), g(0), g(1)],
            ],
        )
        .unwrap();
        let m = t.bound().clone();
        let x = CVector::from_combo(space, FiniteCombo::new([(0, g(1)), (2, g(2))])).unwrap();
        let tx = op_apply(&t, &x).unwrap();
        for n in [0u32, 10, 25] {
            let norm_bound = &(&m * &(&x.approx(0).unwrap().norm_upper() + &r(1, 1)))
                + &Rational::pow2(-(n as i64));
            let val = rat_sqrt_upper(&tx.approx(n).unwrap().norm_sq());
            assert!(val <= norm_bound);
        }
    }

    fn rat_sqrt_upper(v: &Rational) -> Rational {
        &crate::rat::rat_sqrt_approx(v, 4).unwrap() + &Rational::pow2(-4)
    }
}
