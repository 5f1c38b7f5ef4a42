//! The counterexample constructions: the halting-stage multiplication
//! operator, the diagonal refutation of recursive norm bounds, the two
//! sum-pathologies, and the triangle function.

use std::sync::{Arc, Mutex};

use num_bigint::BigUint;
use num_traits::One;

use crate::creal::{CComplex, CReal};
use crate::encoding::{cantor_pair, cantor_unpair};
use crate::machine::asm::Asm;
use crate::machine::eval::run_to_halt;
use crate::machine::{halting_stage, Program};
use crate::rat::{GaussianRational, Rational};
use crate::spaces::SpaceDesc;

use super::{DiagEntry, EffOperator, OperatorError};

/// Stage entry of the halting-norm operator: `sum_{k in K_n, k >= 1} 2^-k`,
/// exact. Monotone nondecreasing in `n` and strictly below 1.
pub fn halting_norm_entry(n: u64) -> Rational {
    let stage = halting_stage(n);
    let mut s = Rational::from_int(0);
    for &k in &stage.members {
        if k >= 1 {
            s = &s + &Rational::pow2(-(k as i64));
        }
    }
    s
}

/// The multiplication operator on `l2` whose `n`-th diagonal entry is the
/// stage-`n` halting sum. Its norm is the limit `r_K`, a left-computable
/// real that no computable real equals; the operator itself is effective
/// with bound certificate 1.
pub fn halting_norm_operator() -> EffOperator {
    let cache: Arc<Mutex<Vec<Rational>>> = Arc::new(Mutex::new(Vec::new()));
    EffOperator::diagonal(
        SpaceDesc::l2(),
        Arc::new(move |j| {
            let mut cache = cache.lock().unwrap();
            while cache.len() <= j {
                let n = cache.len() as u64;
                cache.push(halting_norm_entry(n));
            }
            DiagEntry::Exact(cache[j].clone())
        }),
        Rational::from_int(1),
    )
    .expect("bound 1 is positive")
}

/// The demo numbering of diagonal step-operators: `T^d = O^{e,x}` with
/// `(e, x) = op_unpair(d)`. Its diagonal is linear, which is what lets a
/// register machine compute `d = op_pair(x, x)` in one pass.
pub fn op_pair(e: &BigUint, x: &BigUint) -> BigUint {
    if e == x {
        e << 1
    } else {
        (cantor_pair(e, x) << 1) + BigUint::one()
    }
}

pub fn op_unpair(d: &BigUint) -> (BigUint, BigUint) {
    if (d & BigUint::one()).is_one() {
        cantor_unpair(&(d >> 1))
    } else {
        let e: BigUint = d >> 1;
        (e.clone(), e)
    }
}

/// The operator `O^{e,x}`: diagonal with `a_ss = phi_{e,s}(x)` once the run
/// has halted within `s` steps and `0` before. The bound is a caller
/// certificate (the true norm is `phi_e(x)` when defined, else 0).
pub fn o_ex_operator(e: &BigUint, x: &BigUint, bound: Rational) -> Result<EffOperator, OperatorError> {
    let program = Program::decode(e);
    let x = x.clone();
    EffOperator::diagonal(
        SpaceDesc::l2(),
        Arc::new(move |s| {
            match crate::machine::step_eval(&program, &x, &BigUint::from(s as u64)) {
                Ok(crate::machine::EvalOutcome::Halted { output, .. }) => {
                    DiagEntry::Exact(Rational::from_biguint(&output))
                }
                _ => DiagEntry::Exact(Rational::from_int(0)),
            }
        }),
        bound,
    )
}

/// Everything the refutation run produces, all values exact.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RefuterReport {
    /// Index of the constructed program `k(x) = g(op_pair(x,x)) + 1`.
    pub witness_index: String,
    /// The operator index `h(c, c) = op_pair(c, c)`.
    pub operator_index: String,
    /// `g(h(c,c))`: the claimed strict upper bound for the operator norm.
    pub claimed_bound: String,
    /// `phi_c(c) = g(h(c,c)) + 1`: the actual norm of `O^{cc}`.
    pub operator_norm: String,
    /// The exact step at which `phi_c(c)` halts (the diagonal entries jump
    /// from 0 to the norm value at this stage).
    pub halting_step: String,
    /// `operator_norm > claimed_bound`, checked in exact integer arithmetic.
    pub inequality_holds: bool,
}

/// Refute a claimed recursive norm bound `g` (a program with
/// `g(e) > ||T^e||` for every `e`, allegedly): build `k(x) = g(2x) + 1` as a
/// machine program with index `c`, evaluate `phi_c(c)` exactly, and exhibit
/// `||O^{cc}|| = g(h(c,c)) + 1 > g(h(c,c))`.
pub fn norm_bound_refuter(
    g: &Program,
    fuel: u64,
) -> Result<(RefuterReport, EffOperator), OperatorError> {
    let zero = g.max_register().unwrap_or(0).max(1) + 1;
    let mut asm = Asm::new(zero);
    // r1 := 2 * r0  (the operator pairing on the diagonal), then feed it to g.
    asm.loop_add(0, &[(1, 2)]);
    asm.move_into(1, 0);
    let cont = asm.fresh_label();
    asm.inline_program(g, cont);
    asm.place(cont);
    asm.inc(0);
    asm.halt();
    let k_program = asm.assemble().expect("refuter program assembles");
    let c = k_program.encode();
    let h_cc = op_pair(&c, &c);
    let Some((g_value, _)) = run_to_halt(g, &h_cc, fuel) else {
        return Err(OperatorError::Budget(format!(
            "g did not halt on {h_cc} within the engine fuel"
        )));
    };
    let Some((v, halt_step)) = run_to_halt(&k_program, &c, fuel) else {
        return Err(OperatorError::Budget(
            "phi_c(c) did not halt within the engine fuel".into(),
        ));
    };
    debug_assert_eq!(v, &g_value + BigUint::one());
    // O^{cc} directly from the certified halting step: entries 0 before it,
    // the halting value from it on.
    let value = Rational::from_biguint(&v);
    let step = halt_step.clone();
    let val = value.clone();
    let operator = EffOperator::diagonal(
        SpaceDesc::l2(),
        Arc::new(move |s| {
            if BigUint::from(s as u64) >= step {
                DiagEntry::Exact(val.clone())
            } else {
                DiagEntry::Exact(Rational::from_int(0))
            }
        }),
        &value + &Rational::from_int(1),
    )?;
    let report = RefuterReport {
        witness_index: c.to_string(),
        operator_index: h_cc.to_string(),
        claimed_bound: g_value.to_string(),
        operator_norm: v.to_string(),
        halting_step: halt_step.to_string(),
        inequality_holds: v > g_value,
    };
    Ok((report, operator))
}

/// `g = const v`: ignores its input and outputs `v`.
pub fn constant_bound_program(v: u64) -> Program {
    let mut asm = Asm::new(3);
    asm.clear(0);
    asm.build_const(0, &BigUint::from(v), 1);
    asm.halt();
    asm.assemble().expect("constant program assembles")
}

/// `g = successor`.
pub fn successor_program() -> Program {
    "INC 0\nHALT".parse().expect("fixed text parses")
}

/// The `R + S` pathology around a diagonal operator `T` with exact entries
/// and `t_0 = 0`: `R = diag(M, t_1, t_2, ...)`, `S = diag(-M, 0, 0, ...)`.
/// Then `||R|| = ||S|| = M` exactly while `R + S = T` entrywise.
pub struct RsPathology {
    pub r: EffOperator,
    pub s: EffOperator,
    /// The common norm of `R` and `S`, exact.
    pub norm: Rational,
}

pub fn norm_pathology_rs(
    t_entries: Arc<dyn Fn(usize) -> Rational + Send + Sync>,
    t_bound: &Rational,
    m_int: i64,
) -> Result<RsPathology, OperatorError> {
    let m = Rational::from_int(m_int);
    if !(&m > t_bound) {
        return Err(OperatorError::Precondition(format!(
            "integer {m_int} must exceed the bound certificate {t_bound}"
        )));
    }
    if !t_entries(0).is_zero() {
        return Err(OperatorError::Precondition(
            "the first diagonal entry must vanish for R + S = T to be exact".into(),
        ));
    }
    let m_r = m.clone();
    let entries_r = t_entries.clone();
    let r = EffOperator::diagonal(
        SpaceDesc::l2(),
        Arc::new(move |j| {
            DiagEntry::Exact(if j == 0 { m_r.clone() } else { entries_r(j) })
        }),
        m.clone(),
    )?;
    let m_s = m.clone();
    let s = EffOperator::diagonal(
        SpaceDesc::l2(),
        Arc::new(move |j| {
            DiagEntry::Exact(if j == 0 { -&m_s } else { Rational::from_int(0) })
        }),
        m.clone(),
    )?;
    Ok(RsPathology { r, s, norm: m })
}

/// `e^(i theta)` for rational `theta` in `[-2, 2]`, by exact truncated
/// cosine/sine series with a certified alternating-tail bound.
pub fn exp_i_theta(theta: &Rational) -> CComplex {
    assert!(theta.abs() <= Rational::from_int(2), "series budgeted for |theta| <= 2");
    let theta = theta.clone();
    CComplex::from_gaussian_fn(move |n| {
        let tol = Rational::pow2(-(n as i64 + 3));
        Ok(GaussianRational::new(
            trig_series(&theta, &tol, true),
            trig_series(&theta, &tol, false),
        ))
    })
}

/// Partial sum of cos (even) or sin (odd) with all terms below `tol`
/// truncated; for `|theta| <= 2` the dropped tail is at most `3 * tol`.
fn trig_series(theta: &Rational, tol: &Rational, even: bool) -> Rational {
    let theta_sq = theta * theta;
    let mut term = if even {
        Rational::from_int(1)
    } else {
        theta.clone()
    };
    let mut k = if even { 0i64 } else { 1 };
    let mut acc = Rational::from_int(0);
    loop {
        acc = &acc + &term;
        // next term: * (-theta^2) / ((k+1)(k+2))
        term = &(&term * &theta_sq) * &Rational::ratio(-1, (k + 1) * (k + 2));
        k += 2;
        if term.abs() <= *tol && k >= 3 {
            return acc;
        }
    }
}

/// The `P + Q` pathology: `P` diagonal with entries `e^(i theta_j)` for a
/// nonincreasing positive rational sequence, `Q` the identity. Each entry
/// has modulus one, so `||P|| = ||Q|| = 1`, while
/// `||P + Q|| = sup_n |e^(i theta_n) + 1|`, which is the value at the limit
/// angle; stage values are nondecreasing.
pub struct PqPathology {
    pub p: EffOperator,
    pub q: EffOperator,
    thetas: Arc<dyn Fn(usize) -> Rational + Send + Sync>,
}

impl PqPathology {
    /// `|e^(i theta_n) + 1|` as a computable real.
    pub fn stage_value(&self, n: usize) -> CReal {
        self.stage_value_sq(n).sqrt()
    }

    /// The squared stage value `2 + 2 cos theta_n`, which compares exactly
    /// enough to certify monotonicity between distinct angles.
    pub fn stage_value_sq(&self, n: usize) -> CReal {
        let theta = (self.thetas)(n);
        let tol_shift = 2;
        CReal::from_fn(move |lvl| {
            let tol = Rational::pow2(-(lvl as i64 + tol_shift + 2));
            let cos = trig_series(&theta, &tol, true);
            Ok(&Rational::from_int(2) + &(&cos + &cos))
        })
    }

    pub fn theta(&self, n: usize) -> Rational {
        (self.thetas)(n)
    }
}

pub fn norm_pathology_pq(
    thetas: Arc<dyn Fn(usize) -> Rational + Send + Sync>,
    check_depth: usize,
) -> Result<PqPathology, OperatorError> {
    let two = Rational::from_int(2);
    for n in 0..=check_depth {
        let t = thetas(n);
        if !t.is_positive() || t > two {
            return Err(OperatorError::Precondition(format!(
                "theta_{n} = {t} out of (0, 2]"
            )));
        }
        if n > 0 && thetas(n - 1) < t {
            return Err(OperatorError::Precondition(format!(
                "theta sequence increases at {n}"
            )));
        }
    }
    let entries = thetas.clone();
    let p = EffOperator::diagonal(
        SpaceDesc::l2(),
        Arc::new(move |j| DiagEntry::Complex(exp_i_theta(&entries(j)))),
        &Rational::from_int(1) + &Rational::pow2(-20),
    )?;
    let q = EffOperator::identity(SpaceDesc::l2());
    Ok(PqPathology { p, q, thetas })
}

/// The default angle schedule for the demo: a fixed near-`pi/2` rational
/// scaled down as halting stages accumulate, hence nonincreasing with a
/// non-computable limit angle.
pub fn halting_driven_thetas() -> Arc<dyn Fn(usize) -> Rational + Send + Sync> {
    let base = Rational::ratio(157, 100);
    Arc::new(move |n| {
        let entry = halting_norm_entry(n as u64);
        &base * &(&Rational::from_int(1) - &(&entry * &Rational::ratio(1, 2)))
    })
}

/// The triangle function `x -> max(0, h - |x - (x1+x2)/2|)`: peak `h` at the
/// interval midpoint, Lipschitz constant 1, support `[mid - h, mid + h]`.
pub struct TriangleFunction {
    midpoint: Rational,
    height: Rational,
}

impl TriangleFunction {
    pub fn new(x1: Rational, x2: Rational, h: Rational) -> Result<Self, OperatorError> {
        if !(x1 < x2) || !h.is_positive() {
            return Err(OperatorError::Precondition(
                "need x1 < x2 and h > 0".into(),
            ));
        }
        Ok(TriangleFunction {
            midpoint: &(&x1 + &x2) * &Rational::ratio(1, 2),
            height: h,
        })
    }

    pub fn peak(&self) -> &Rational {
        &self.midpoint
    }

    pub fn support(&self) -> (Rational, Rational) {
        (&self.midpoint - &self.height, &self.midpoint + &self.height)
    }

    /// Evaluate at a computable real; max and abs preserve the modulus.
    pub fn eval(&self, x: &CReal) -> CReal {
        let centered = x.sub(&CReal::from_rational(self.midpoint.clone()));
        let tent = CReal::from_rational(self.height.clone()).sub(&centered.abs());
        CReal::from_int(0).max(&tent)
    }
}
