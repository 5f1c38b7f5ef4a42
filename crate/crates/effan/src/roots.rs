//! Certified complex root finding by grid subdivision.
//!
//! All roots lie in the Cauchy disc, covered by one square. Each refinement
//! level halves the squares and discards those where rectangle interval
//! evaluation certifies `p != 0`. Retained squares group into connected
//! components; once every component is small enough and can be ringed by a
//! contour through discarded territory, the number of roots inside is
//! counted exactly by the argument principle: the contour is split until the
//! interval image of each piece misses zero, which makes the image curve
//! homotopic (within convex zero-free rectangles) to the polygon through the
//! exactly-evaluated snapshot values, whose winding number is exact integer
//! arithmetic.
//!
//! Computable-coefficient polynomials are handled by snapshotting each
//! coefficient at a precision that grows with the refinement level; the
//! snapshot error is folded into every interval evaluation, so exclusions
//! and windings are certified for the true polynomial.

use std::fmt;

use serde::Serialize;

use crate::creal::{CComplex, QueryError};
use crate::exec::{map_batch, ExecMode};
use crate::rat::{GaussianRational, Rational};

#[derive(Debug, Clone, thiserror::Error)]
pub enum RootsError {
    #[error("polynomial must have degree >= 1")]
    DegreeZero,
    #[error("leading coefficient is zero or its certificate is empty")]
    ZeroLeading,
    #[error("leading-coefficient lower bound {claimed} refuted at precision 2^-{precision}")]
    LeadingRefuted { claimed: Rational, precision: u32 },
    #[error("refinement cap reached at level {level}; {} partial clusters", partial.len())]
    Budget {
        level: u32,
        partial: Vec<RootCluster>,
    },
    #[error(transparent)]
    Query(#[from] QueryError),
}

/// Closed rational interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatInterval {
    pub lo: Rational,
    pub hi: Rational,
}

impl RatInterval {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        debug_assert!(lo <= hi);
        RatInterval { lo, hi }
    }

    pub fn point(v: Rational) -> Self {
        RatInterval { lo: v.clone(), hi: v }
    }

    pub fn centered(center: &Rational, radius: &Rational) -> Self {
        RatInterval { lo: center - radius, hi: center + radius }
    }

    pub fn add(&self, o: &RatInterval) -> RatInterval {
        RatInterval { lo: &self.lo + &o.lo, hi: &self.hi + &o.hi }
    }

    pub fn sub(&self, o: &RatInterval) -> RatInterval {
        RatInterval { lo: &self.lo - &o.hi, hi: &self.hi - &o.lo }
    }

    pub fn mul(&self, o: &RatInterval) -> RatInterval {
        let c = [
            &self.lo * &o.lo,
            &self.lo * &o.hi,
            &self.hi * &o.lo,
            &self.hi * &o.hi,
        ];
        let mut lo = c[0].clone();
        let mut hi = c[0].clone();
        for v in &c[1..] {
            if v < &lo {
                lo = v.clone();
            }
            if v > &hi {
                hi = v.clone();
            }
        }
        RatInterval { lo, hi }
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }
}

/// Axis-aligned rectangle in the complex plane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplexBox {
    pub re: RatInterval,
    pub im: RatInterval,
}

impl ComplexBox {
    pub fn point(g: &GaussianRational) -> Self {
        ComplexBox {
            re: RatInterval::point(g.re.clone()),
            im: RatInterval::point(g.im.clone()),
        }
    }

    pub fn centered(center: &GaussianRational, radius: &Rational) -> Self {
        ComplexBox {
            re: RatInterval::centered(&center.re, radius),
            im: RatInterval::centered(&center.im, radius),
        }
    }

    pub fn add(&self, o: &ComplexBox) -> ComplexBox {
        ComplexBox { re: self.re.add(&o.re), im: self.im.add(&o.im) }
    }

    pub fn mul(&self, o: &ComplexBox) -> ComplexBox {
        ComplexBox {
            re: self.re.mul(&o.re).sub(&self.im.mul(&o.im)),
            im: self.re.mul(&o.im).add(&self.im.mul(&o.re)),
        }
    }

    pub fn contains_zero(&self) -> bool {
        self.re.contains_zero() && self.im.contains_zero()
    }
}

/// One polynomial coefficient: exact, or a computable complex snapshotted on
/// demand.
#[derive(Clone)]
pub enum PolyCoeff {
    Exact(GaussianRational),
    Stream(CComplex),
}

impl PolyCoeff {
    fn snapshot(&self, prec: u32) -> Result<GaussianRational, QueryError> {
        match self {
            PolyCoeff::Exact(g) => Ok(g.clone()),
            PolyCoeff::Stream(z) => z.approx_gaussian(prec),
        }
    }

    fn abs_upper(&self, prec: u32) -> Result<Rational, QueryError> {
        match self {
            PolyCoeff::Exact(g) => Ok(g.abs_upper()),
            PolyCoeff::Stream(z) => {
                let g = z.approx_gaussian(prec)?;
                Ok(&g.abs_upper() + &Rational::pow2(1 - prec as i64))
            }
        }
    }
}

/// A polynomial with certified-nonzero leading coefficient, low-to-high.
pub struct CPoly {
    coeffs: Vec<PolyCoeff>,
    leading_lower: Rational,
}

impl fmt::Debug for CPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CPoly(degree {})", self.degree())
    }
}

impl CPoly {
    /// Exact coefficients; the leading one must be literally nonzero.
    pub fn from_exact(coeffs: Vec<GaussianRational>) -> Result<Self, RootsError> {
        if coeffs.len() < 2 {
            return Err(RootsError::DegreeZero);
        }
        let leading = coeffs.last().unwrap();
        let lower = leading.abs_lower();
        if !lower.is_positive() {
            return Err(RootsError::ZeroLeading);
        }
        Ok(CPoly {
            coeffs: coeffs.into_iter().map(PolyCoeff::Exact).collect(),
            leading_lower: lower,
        })
    }

    /// General coefficients with a caller-certified lower bound on the
    /// modulus of the leading one.
    pub fn new(coeffs: Vec<PolyCoeff>, leading_lower: Rational) -> Result<Self, RootsError> {
        if coeffs.len() < 2 {
            return Err(RootsError::DegreeZero);
        }
        if !leading_lower.is_positive() {
            return Err(RootsError::ZeroLeading);
        }
        Ok(CPoly { coeffs, leading_lower })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Certified enclosure of `p` over a rectangle, coefficients snapshotted
    /// at `prec`: the snapshot polynomial is Taylor-shifted exactly to the
    /// rectangle center and interval-evaluated in the centered variable.
    /// Centering is what keeps the enclosure width linear in the rectangle
    /// size near multiple roots, where plain Horner cancellation blows up.
    /// The snapshot error is folded in as a uniform pad, so the enclosure
    /// covers the true polynomial.
    pub fn eval_box(&self, z: &ComplexBox, prec: u32) -> Result<ComplexBox, QueryError> {
        let half = Rational::ratio(1, 2);
        let center = GaussianRational::new(
            &(&z.re.lo + &z.re.hi) * &half,
            &(&z.im.lo + &z.im.hi) * &half,
        );
        let snapshot: Vec<GaussianRational> = self
            .coeffs
            .iter()
            .map(|c| c.snapshot(prec))
            .collect::<Result<_, _>>()?;
        let shifted = taylor_shift(&snapshot, &center);
        let w = ComplexBox {
            re: z.re.sub(&RatInterval::point(center.re.clone())),
            im: z.im.sub(&RatInterval::point(center.im.clone())),
        };
        let mut acc = ComplexBox::point(shifted.last().unwrap());
        for c in shifted.iter().rev().skip(1) {
            acc = acc.mul(&w).add(&ComplexBox::point(c));
        }
        if self.has_stream_coeff() {
            // |p(z) - snapshot(z)| <= sum_k 2^(1-prec) |z|^k.
            let zmax = &z.re.lo.abs().max(z.re.hi.abs()) + &z.im.lo.abs().max(z.im.hi.abs());
            let zmax = zmax.max(Rational::from_int(1));
            let mut pad = Rational::from_int(0);
            let mut pw = Rational::pow2(1 - prec as i64);
            for _ in 0..self.coeffs.len() {
                pad = &pad + &pw;
                pw = &pw * &zmax;
            }
            let pad = RatInterval::centered(&Rational::from_int(0), &pad);
            acc = ComplexBox {
                re: acc.re.add(&pad),
                im: acc.im.add(&pad),
            };
        }
        Ok(acc)
    }

    fn has_stream_coeff(&self) -> bool {
        self.coeffs
            .iter()
            .any(|c| matches!(c, PolyCoeff::Stream(_)))
    }

    /// Exact Horner evaluation of the `prec`-snapshot polynomial at a point.
    pub fn eval_snapshot(
        &self,
        z: &GaussianRational,
        prec: u32,
    ) -> Result<GaussianRational, QueryError> {
        let mut acc = self.coeffs.last().unwrap().snapshot(prec)?;
        for c in self.coeffs.iter().rev().skip(1) {
            acc = &(&acc * z) + &c.snapshot(prec)?;
        }
        Ok(acc)
    }

    fn check_leading(&self, prec: u32) -> Result<(), RootsError> {
        if let PolyCoeff::Stream(z) = self.coeffs.last().unwrap() {
            let g = z.approx_gaussian(prec).map_err(RootsError::Query)?;
            let upper = &g.abs_upper() + &Rational::pow2(1 - prec as i64);
            if upper < self.leading_lower {
                return Err(RootsError::LeadingRefuted {
                    claimed: self.leading_lower.clone(),
                    precision: prec,
                });
            }
        }
        Ok(())
    }
}

/// Shifted coefficients of `p(c + w)` as a polynomial in `w`, exact
/// (Ruffini-Horner synthetic division).
fn taylor_shift(coeffs: &[GaussianRational], c: &GaussianRational) -> Vec<GaussianRational> {
    let n = coeffs.len();
    let mut b = coeffs.to_vec();
    for k in 0..n.saturating_sub(1) {
        for j in (k..n - 1).rev() {
            b[j] = &b[j] + &(c * &b[j + 1]);
        }
    }
    b
}

/// Cauchy bound: all roots lie in the closed disc of this radius.
pub fn root_bound(p: &CPoly) -> Result<Rational, RootsError> {
    let mut max_upper = Rational::from_int(0);
    for c in &p.coeffs[..p.coeffs.len() - 1] {
        let u = c.abs_upper(4).map_err(RootsError::Query)?;
        if u > max_upper {
            max_upper = u;
        }
    }
    Ok(&Rational::from_int(1) + &(&max_upper / &p.leading_lower))
}

/// A certified root cluster: every point of the cluster is within `radius`
/// of `center`, and the cluster holds exactly `multiplicity` roots counted
/// with multiplicity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RootCluster {
    pub center: GaussianRational,
    pub radius: Rational,
    pub multiplicity: usize,
}

/// Find all roots to cluster radius `<= 2^-n`, parallel when enabled.
pub fn find_roots(p: &CPoly, n: u32) -> Result<Vec<RootCluster>, RootsError> {
    find_roots_mode(p, n, ExecMode::Auto)
}

/// Sequential reference path; identical output to [`find_roots`].
pub fn find_roots_seq(p: &CPoly, n: u32) -> Result<Vec<RootCluster>, RootsError> {
    find_roots_mode(p, n, ExecMode::Sequential)
}

#[derive(Clone)]
struct Square {
    x: Rational,
    y: Rational,
}

impl Square {
    fn as_box(&self, side: &Rational) -> ComplexBox {
        ComplexBox {
            re: RatInterval::new(self.x.clone(), &self.x + side),
            im: RatInterval::new(self.y.clone(), &self.y + side),
        }
    }
}

struct Component {
    min_x: Rational,
    min_y: Rational,
    max_x: Rational,
    max_y: Rational,
    members: Vec<usize>,
}

impl Component {
    fn cluster(&self, side: &Rational) -> RootCluster {
        let w = &(&self.max_x + side) - &self.min_x;
        let h = &(&self.max_y + side) - &self.min_y;
        let half = Rational::ratio(1, 2);
        RootCluster {
            center: GaussianRational::new(
                &(&self.min_x + &(&self.max_x + side)) * &half,
                &(&self.min_y + &(&self.max_y + side)) * &half,
            ),
            radius: &(&w + &h) * &half,
            multiplicity: 0,
        }
    }
}

pub fn find_roots_mode(p: &CPoly, n: u32, mode: ExecMode) -> Result<Vec<RootCluster>, RootsError> {
    let radius = root_bound(p)?;
    let tolerance = Rational::pow2(-(n as i64));
    let mut side = &radius + &radius;
    let mut frontier = vec![Square {
        x: -&radius,
        y: -&radius,
    }];
    let cap = n + 80;
    for level in 1..=cap {
        let prec = level + 8;
        p.check_leading(prec)?;
        side = &side * &Rational::ratio(1, 2);
        let candidates: Vec<Square> = frontier
            .iter()
            .flat_map(|sq| {
                let mx = &sq.x + &side;
                let my = &sq.y + &side;
                [
                    Square { x: sq.x.clone(), y: sq.y.clone() },
                    Square { x: mx.clone(), y: sq.y.clone() },
                    Square { x: sq.x.clone(), y: my.clone() },
                    Square { x: mx, y: my },
                ]
            })
            .collect();
        let side_ref = side.clone();
        let keep_flags = map_batch(mode, candidates.clone(), |sq| {
            p.eval_box(&sq.as_box(&side_ref), prec)
                .map(|b| b.contains_zero())
        });
        let mut retained = Vec::new();
        for (sq, keep) in candidates.into_iter().zip(keep_flags) {
            if keep.map_err(RootsError::Query)? {
                retained.push(sq);
            }
        }
        assert!(
            !retained.is_empty(),
            "exclusion is sound, so some square must survive"
        );
        frontier = retained;

        let comps = components(&frontier, &side);
        let clusters: Vec<RootCluster> = comps.iter().map(|c| c.cluster(&side)).collect();
        if level < 3 || clusters.iter().any(|c| c.radius > tolerance) {
            continue;
        }
        if let Some(done) = try_certify(p, prec, &frontier, &comps, &side)? {
            let mut done: Vec<RootCluster> = done
                .into_iter()
                .filter(|c| c.multiplicity > 0)
                .collect();
            if done.iter().map(|c| c.multiplicity).sum::<usize>() == p.degree() {
                done.sort_by(|a, b| a.center.cmp(&b.center));
                return Ok(done);
            }
        }
    }
    let comps = components(&frontier, &side);
    Err(RootsError::Budget {
        level: cap,
        partial: comps.iter().map(|c| c.cluster(&side)).collect(),
    })
}

/// Group retained squares into connected components (closed squares sharing
/// any boundary point are connected).
fn components(squares: &[Square], side: &Rational) -> Vec<Component> {
    let n = squares.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let r = find(parent, parent[i]);
            parent[i] = r;
        }
        parent[i]
    }
    for i in 0..n {
        for j in i + 1..n {
            let dx = (&squares[i].x - &squares[j].x).abs();
            let dy = (&squares[i].y - &squares[j].y).abs();
            if dx <= *side && dy <= *side {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups
        .into_values()
        .map(|members| {
            let first = &squares[members[0]];
            let mut c = Component {
                min_x: first.x.clone(),
                min_y: first.y.clone(),
                max_x: first.x.clone(),
                max_y: first.y.clone(),
                members: members.clone(),
            };
            for &i in members.iter().skip(1) {
                let s = &squares[i];
                if s.x < c.min_x {
                    c.min_x = s.x.clone();
                }
                if s.y < c.min_y {
                    c.min_y = s.y.clone();
                }
                if s.x > c.max_x {
                    c.max_x = s.x.clone();
                }
                if s.y > c.max_y {
                    c.max_y = s.y.clone();
                }
            }
            c
        })
        .collect()
}

/// Try to ring every component with a zero-free contour and count its roots.
/// `None` means some contour could not be certified at this level.
fn try_certify(
    p: &CPoly,
    prec: u32,
    all_squares: &[Square],
    comps: &[Component],
    side: &Rational,
) -> Result<Option<Vec<RootCluster>>, RootsError> {
    let half = &*side * &Rational::ratio(1, 2);
    let mut out = Vec::with_capacity(comps.len());
    for comp in comps {
        // Contour rectangle: the component bbox inflated by half a side.
        let x0 = &comp.min_x - &half;
        let y0 = &comp.min_y - &half;
        let x1 = &(&comp.max_x + side) + &half;
        let y1 = &(&comp.max_y + side) + &half;
        // The contour must put exactly this component's squares strictly
        // inside and every other square strictly outside; anything touching
        // the ring means the level is still too coarse.
        let mut valid = true;
        for (idx, sq) in all_squares.iter().enumerate() {
            let sx1 = &sq.x + side;
            let sy1 = &sq.y + side;
            let strictly_inside = sq.x > x0 && sq.y > y0 && sx1 < x1 && sy1 < y1;
            let strictly_outside = sx1 < x0 || sq.x > x1 || sy1 < y0 || sq.y > y1;
            let member = comp.members.contains(&idx);
            if (member && !strictly_inside) || (!member && !strictly_outside) {
                valid = false;
                break;
            }
        }
        if !valid {
            return Ok(None);
        }
        let Some(mult) = winding_number(p, prec, &x0, &y0, &x1, &y1)? else {
            return Ok(None);
        };
        debug_assert!(mult >= 0, "CCW contour around roots");
        let mut cluster = comp.cluster(side);
        cluster.multiplicity = mult.max(0) as usize;
        out.push(cluster);
    }
    Ok(Some(out))
}

/// Exact winding number of `p` along the CCW rectangle contour, or `None`
/// when some piece cannot be certified zero-free at this precision.
fn winding_number(
    p: &CPoly,
    prec: u32,
    x0: &Rational,
    y0: &Rational,
    x1: &Rational,
    y1: &Rational,
) -> Result<Option<i64>, RootsError> {
    let corners = [
        GaussianRational::new(x0.clone(), y0.clone()),
        GaussianRational::new(x1.clone(), y0.clone()),
        GaussianRational::new(x1.clone(), y1.clone()),
        GaussianRational::new(x0.clone(), y1.clone()),
    ];
    let mut vertices = Vec::new();
    for i in 0..4 {
        let a = &corners[i];
        let b = &corners[(i + 1) % 4];
        if !refine_edge(p, prec, a, b, 64, &mut vertices)? {
            return Ok(None);
        }
    }
    // vertices holds the segment endpoints in contour order, ending at the
    // start corner; evaluate the snapshot polynomial exactly at each.
    let mut values = Vec::with_capacity(vertices.len());
    for v in &vertices {
        values.push(p.eval_snapshot(v, prec).map_err(RootsError::Query)?);
    }
    Ok(Some(polygon_winding(&values)))
}

/// Split the segment until each piece's interval image misses zero; push the
/// pieces' endpoints in order. Both endpoints of a certified piece and the
/// whole image curve lie in one zero-free convex rectangle, which is what
/// justifies replacing the curve by the polygon through the endpoint values.
fn refine_edge(
    p: &CPoly,
    prec: u32,
    a: &GaussianRational,
    b: &GaussianRational,
    depth: u32,
    vertices: &mut Vec<GaussianRational>,
) -> Result<bool, RootsError> {
    let seg = ComplexBox {
        re: if a.re <= b.re {
            RatInterval::new(a.re.clone(), b.re.clone())
        } else {
            RatInterval::new(b.re.clone(), a.re.clone())
        },
        im: if a.im <= b.im {
            RatInterval::new(a.im.clone(), b.im.clone())
        } else {
            RatInterval::new(b.im.clone(), a.im.clone())
        },
    };
    let image = p.eval_box(&seg, prec).map_err(RootsError::Query)?;
    if !image.contains_zero() {
        if vertices.is_empty() {
            vertices.push(a.clone());
        }
        vertices.push(b.clone());
        return Ok(true);
    }
    if depth == 0 {
        return Ok(false);
    }
    let half = Rational::ratio(1, 2);
    let mid = GaussianRational::new(&(&a.re + &b.re) * &half, &(&a.im + &b.im) * &half);
    Ok(refine_edge(p, prec, a, &mid, depth - 1, vertices)?
        && refine_edge(p, prec, &mid, b, depth - 1, vertices)?)
}

/// Winding number about the origin of the closed polygon through `values`
/// (exact signed ray-crossing count; no vertex may be the origin).
fn polygon_winding(values: &[GaussianRational]) -> i64 {
    let mut w = 0i64;
    let k = values.len();
    for i in 0..k {
        let a = &values[i];
        let b = &values[(i + 1) % k];
        let cross = &(&a.re * &b.im) - &(&a.im * &b.re);
        if !a.im.is_positive() && b.im.is_positive() && cross.is_positive() {
            w += 1;
        } else if a.im.is_positive() && !b.im.is_positive() && cross.is_negative() {
            w -= 1;
        }
    }
    w
}

/// Characteristic polynomial `det(lambda I - A)` of an exact square matrix
/// by the Faddeev-LeVerrier recurrence; monic, exact.
pub fn char_poly_exact(a: &[Vec<GaussianRational>]) -> Result<CPoly, RootsError> {
    let n = a.len();
    assert!(n >= 1 && a.iter().all(|row| row.len() == n), "square matrix");
    assert!(n <= 16, "characteristic polynomials are capped at 16x16");
    let zero = GaussianRational::from_int(0);
    let one = GaussianRational::from_int(1);
    let mut coeffs = vec![zero.clone(); n + 1];
    coeffs[n] = one.clone();
    // M := I; repeatedly M := A M + c I, c = -tr(A M)/(k).
    let mut m: Vec<Vec<GaussianRational>> = identity(n);
    for k in 1..=n {
        let am = mat_mul(a, &m);
        let tr = trace(&am);
        let c = tr.scale(&-&Rational::ratio(1, k as i64));
        coeffs[n - k] = c.clone();
        if k < n {
            m = am;
            for (i, row) in m.iter_mut().enumerate() {
                row[i] = &row[i] + &c;
            }
        }
    }
    CPoly::from_exact(coeffs)
}

/// Characteristic polynomial over computable complex entries; coefficients
/// come out as computable complex numbers.
pub fn char_poly_stream(a: &[Vec<CComplex>]) -> Result<CPoly, RootsError> {
    let n = a.len();
    assert!(n >= 1 && a.iter().all(|row| row.len() == n), "square matrix");
    assert!(n <= 16, "stream characteristic polynomials are capped at 16x16");
    let mut coeffs: Vec<PolyCoeff> = vec![
        PolyCoeff::Exact(GaussianRational::from_int(0));
        n + 1
    ];
    coeffs[n] = PolyCoeff::Exact(GaussianRational::from_int(1));
    let mut m: Vec<Vec<CComplex>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    CComplex::from_gaussian(if i == j {
                        GaussianRational::from_int(1)
                    } else {
                        GaussianRational::from_int(0)
                    })
                })
                .collect()
        })
        .collect();
    for k in 1..=n {
        let am = cmat_mul(a, &m);
        let mut tr = am[0][0].clone();
        for (i, row) in am.iter().enumerate().skip(1) {
            tr = tr.add(&row[i]);
        }
        let c = tr.scale_rational(&-&Rational::ratio(1, k as i64));
        coeffs[n - k] = PolyCoeff::Stream(c.clone());
        if k < n {
            m = am;
            for (i, row) in m.iter_mut().enumerate() {
                row[i] = row[i].add(&c);
            }
        }
    }
    CPoly::new(coeffs, Rational::from_int(1))
}

fn identity(n: usize) -> Vec<Vec<GaussianRational>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| GaussianRational::from_int(i64::from(i == j)))
                .collect()
        })
        .collect()
}

pub(crate) fn mat_mul(
    a: &[Vec<GaussianRational>],
    b: &[Vec<GaussianRational>],
) -> Vec<Vec<GaussianRational>> {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut s = GaussianRational::from_int(0);
                    for (k, bk) in b.iter().enumerate() {
                        s = &s + &(&a[i][k] * &bk[j]);
                    }
                    s
                })
                .collect()
        })
        .collect()
}

fn cmat_mul(a: &[Vec<CComplex>], b: &[Vec<CComplex>]) -> Vec<Vec<CComplex>> {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut s = a[i][0].mul(&b[0][j]);
                    for (k, bk) in b.iter().enumerate().skip(1) {
                        s = s.add(&a[i][k].mul(&bk[j]));
                    }
                    s
                })
                .collect()
        })
        .collect()
}

fn trace(a: &[Vec<GaussianRational>]) -> GaussianRational {
    let mut t = GaussianRational::from_int(0);
    for (i, row) in a.iter().enumerate() {
        t = &t + &row[i];
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat_sqrt_approx;

    fn g(n: i64) -> GaussianRational {
        GaussianRational::from_int(n)
    }

    fn gr(n: i64, d: i64) -> GaussianRational {
        GaussianRational::from_rational(Rational::ratio(n, d))
    }

    fn poly(coeffs: &[i64]) -> CPoly {
        CPoly::from_exact(coeffs.iter().map(|&c| g(c)).collect()).unwrap()
    }

    #[test]
    fn cauchy_bounds() {
        assert_eq!(root_bound(&poly(&[-2, 0, 1])).unwrap(), Rational::from_int(3));
        assert_eq!(root_bound(&poly(&[0, 0, 0, 1])).unwrap(), Rational::from_int(1));
        assert_eq!(root_bound(&poly(&[-8, 0, 2])).unwrap(), Rational::from_int(5));
    }

    #[test]
    fn roots_of_x2_plus_1() {
        let clusters = find_roots(&poly(&[1, 0, 1]), 20).unwrap();
        assert_eq!(clusters.len(), 2);
        for c in &clusters {
            assert_eq!(c.multiplicity, 1);
            assert!(c.radius <= Rational::pow2(-20));
            assert!(c.center.re.abs() <= Rational::pow2(-18));
            assert!((&c.center.im.abs() - &Rational::from_int(1)).abs() <= Rational::pow2(-18));
        }
        assert!(clusters[0].center.im < clusters[1].center.im);
    }

    #[test]
    fn roots_of_x2_minus_2() {
        let clusters = find_roots(&poly(&[-2, 0, 1]), 30).unwrap();
        assert_eq!(clusters.len(), 2);
        let sqrt2 = rat_sqrt_approx(&Rational::from_int(2), 40).unwrap();
        for c in &clusters {
            assert_eq!(c.multiplicity, 1);
            let re_err = (&c.center.re.abs() - &sqrt2).abs();
            assert!(re_err <= Rational::pow2(-28), "err {re_err}");
            // |center^2 - 2| <= 2^-25 per the acceptance statement.
            let sq = &c.center * &c.center;
            assert!((&sq.re - &Rational::from_int(2)).abs() <= Rational::pow2(-25));
            assert!(sq.im.abs() <= Rational::pow2(-25));
        }
    }

    #[test]
    fn triple_root_multiplicity() {
        // (x - 1)^3 = -1 + 3x - 3x^2 + x^3.
        let clusters = find_roots(&poly(&[-1, 3, -3, 1]), 10).unwrap();
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].multiplicity, 3);
        assert!((&clusters[0].center.re - &Rational::from_int(1)).abs() <= Rational::pow2(-9));
    }

    #[test]
    fn parallel_and_sequential_agree() {
        for coeffs in [&[-2i64, 0, 1][..], &[1, 0, 1], &[-6, 11, -6, 1], &[-1, 3, -3, 1]] {
            let a = find_roots(&poly(coeffs), 14).unwrap();
            let b = find_roots_seq(&poly(coeffs), 14).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn rational_quadratics_match_closed_forms() {
        // (x - r1)(x - r2) scaled by a.
        let cases = [(1i64, 2i64, 3i64), (2, -1, 1), (1, 0, 0), (3, 2, 2)];
        for (a, r1, r2) in cases {
            let c0 = a * r1 * r2;
            let c1 = -a * (r1 + r2);
            let clusters = find_roots(&poly(&[c0, c1, a]), 16).unwrap();
            let mut expected = vec![Rational::from_int(r1), Rational::from_int(r2)];
            expected.sort();
            expected.dedup();
            assert_eq!(clusters.len(), expected.len(), "roots {r1},{r2}");
            let total: usize = clusters.iter().map(|c| c.multiplicity).sum();
            assert_eq!(total, 2);
            for (c, e) in clusters.iter().zip(&expected) {
                assert!((&c.center.re - e).abs() <= Rational::pow2(-14));
                assert!(c.center.im.abs() <= Rational::pow2(-14));
            }
        }
    }

    #[test]
    fn gaussian_coefficients() {
        // (x - i)(x - 2) = 2i - (2 + i)x + x^2.
        let coeffs = vec![
            GaussianRational::new(Rational::from_int(0), Rational::from_int(2)),
            GaussianRational::new(Rational::from_int(-2), Rational::from_int(-1)),
            g(1),
        ];
        let p = CPoly::from_exact(coeffs).unwrap();
        let clusters = find_roots(&p, 16).unwrap();
        assert_eq!(clusters.len(), 2);
        let near = |c: &RootCluster, re: i64, im: i64| {
            (&c.center.re - &Rational::from_int(re)).abs() <= Rational::pow2(-14)
                && (&c.center.im - &Rational::from_int(im)).abs() <= Rational::pow2(-14)
        };
        assert!(clusters.iter().any(|c| near(c, 0, 1)));
        assert!(clusters.iter().any(|c| near(c, 2, 0)));
    }

    #[test]
    fn stream_coefficients_converge() {
        // x^2 - 2 with the constant given as a computable real.
        let minus_two = CComplex::from_real(
            crate::creal::CReal::from_rational(Rational::from_int(-2)),
        );
        let p = CPoly::new(
            vec![
                PolyCoeff::Stream(minus_two),
                PolyCoeff::Exact(g(0)),
                PolyCoeff::Exact(g(1)),
            ],
            Rational::from_int(1),
        )
        .unwrap();
        let clusters = find_roots(&p, 16).unwrap();
        assert_eq!(clusters.len(), 2);
        let sqrt2 = rat_sqrt_approx(&Rational::from_int(2), 30).unwrap();
        for c in &clusters {
            assert!((&c.center.re.abs() - &sqrt2).abs() <= Rational::pow2(-14));
        }
    }

    #[test]
    fn monotone_refinement_keeps_roots() {
        // Each coarse cluster contains a finer cluster.
        let p = poly(&[-6, 11, -6, 1]); // roots 1, 2, 3
        let coarse = find_roots(&p, 8).unwrap();
        let fine = find_roots(&p, 13).unwrap();
        for c in &coarse {
            assert!(fine.iter().any(|f| {
                (&f.center.re - &c.center.re).abs() <= &c.radius + &f.radius
                    && (&f.center.im - &c.center.im).abs() <= &c.radius + &f.radius
            }));
        }
    }

    #[test]
    fn char_poly_cases() {
        // diag(3,4): l^2 - 7l + 12.
        let a = vec![vec![g(3), g(0)], vec![g(0), g(4)]];
        let p = char_poly_exact(&a).unwrap();
        let cs: Vec<GaussianRational> = (0..=2).map(|k| match &p.coeffs[k] {
            PolyCoeff::Exact(v) => v.clone(),
            _ => unreachable!(),
        }).collect();
        assert_eq!(cs, vec![g(12), g(-7), g(1)]);

        // [[1,1],[1,2]]: l^2 - 3l + 1.
        let a = vec![vec![g(1), g(1)], vec![g(1), g(2)]];
        let p = char_poly_exact(&a).unwrap();
        let c0 = match &p.coeffs[0] { PolyCoeff::Exact(v) => v.clone(), _ => unreachable!() };
        let c1 = match &p.coeffs[1] { PolyCoeff::Exact(v) => v.clone(), _ => unreachable!() };
        assert_eq!((c0, c1), (g(1), g(-3)));

        // Zero 2x2: l^2.
        let a = vec![vec![g(0), g(0)], vec![g(0), g(0)]];
        let p = char_poly_exact(&a).unwrap();
        let roots = find_roots(&p, 10).unwrap();
        assert_eq!(roots.len(), 1);
        assert_eq!(roots[0].multiplicity, 2);

        // 3x3 with fractional entries: compare against cofactor expansion
        // at a sample point: det(5I - A) = p(5).
        let a = vec![
            vec![gr(1, 2), g(1), g(0)],
            vec![g(0), gr(-2, 3), g(1)],
            vec![g(1), g(0), gr(1, 5)],
        ];
        let p = char_poly_exact(&a).unwrap();
        let five = g(5);
        let at5 = p.eval_snapshot(&five, 0).unwrap();
        let det = det3(&[
            [&five - &a[0][0], -&a[0][1], -&a[0][2]],
            [-&a[1][0], &five - &a[1][1], -&a[1][2]],
            [-&a[2][0], -&a[2][1], &five - &a[2][2]],
        ]);
        assert_eq!(at5, det);
    }

    fn det3(m: &[[GaussianRational; 3]; 3]) -> GaussianRational {
        let t1 = &m[0][0] * &(&(&m[1][1] * &m[2][2]) - &(&m[1][2] * &m[2][1]));
        let t2 = &m[0][1] * &(&(&m[1][0] * &m[2][2]) - &(&m[1][2] * &m[2][0]));
        let t3 = &m[0][2] * &(&(&m[1][0] * &m[2][1]) - &(&m[1][1] * &m[2][0]));
        &(&t1 - &t2) + &t3
    }
}
