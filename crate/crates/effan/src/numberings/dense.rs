//! The canonical enumeration `a : N -> Q` of the dense subset, and register
//! machine programs that emit indices into it.
//!
//! # Index packing (v1, frozen)
//!
//! The index of `(-1)^s * p/q` (`p >= 0`, `q >= 1`) is the natural number of
//! the bit string `g(p+1) g(q) s` under `bits <-> bin(1 bits) - 1`, where `g`
//! is the Elias gamma code. Decoding ignores reducibility (the value is
//! reduced on read) and maps anything unparseable to 1; in particular
//! `a(0) = 1`, which serves as the distinguished element `a_0`. The scheme is
//! chosen so that a register machine can assemble the index of a fraction it
//! holds in two registers using only count-down and halving loops.

use num_bigint::BigUint;
use num_traits::One;

use crate::encoding::{bits_to_nat, gamma_decode, gamma_encode, nat_to_bits};
use crate::machine::asm::Asm;
use crate::machine::Program;
use crate::rat::Rational;

/// The distinguished nonzero element `a_0 = a(0) = 1`.
pub fn a0() -> Rational {
    Rational::from_int(1)
}

/// Total decoding of an index into a rational.
pub fn rational_at(n: &BigUint) -> Rational {
    let bits = nat_to_bits(n);
    let mut pos = 0usize;
    let Some(p_plus_1) = gamma_decode(&bits, &mut pos) else {
        return a0();
    };
    let Some(q) = gamma_decode(&bits, &mut pos) else {
        return a0();
    };
    if pos + 1 != bits.len() {
        return a0(); // exactly one sign bit must remain
    }
    let negative = bits[pos];
    let p = p_plus_1 - BigUint::one();
    let v = Rational::new(p.into(), q.into()).expect("gamma q >= 1");
    if negative {
        -v
    } else {
        v
    }
}

/// The canonical index of a rational; `rational_at(index_of(r)) == r`.
pub fn index_of(r: &Rational) -> BigUint {
    let mut bits = Vec::new();
    let p = r.numer().magnitude();
    let q = r.denom().magnitude();
    gamma_encode(&mut bits, &(p + BigUint::one()));
    gamma_encode(&mut bits, q);
    bits.push(r.is_negative());
    bits_to_nat(&bits)
}

/// A one-argument program that ignores its input and outputs `idx`.
pub fn const_emitter(idx: &BigUint) -> Program {
    let mut asm = Asm::new(3);
    asm.clear(0);
    asm.build_const(0, idx, 1);
    asm.halt();
    asm.assemble().expect("const emitter assembles")
}

/// Registers used by the Pell emitter and the index-packing macro.
mod regs {
    pub const P: u32 = 1;
    pub const Q: u32 = 2;
    pub const T: u32 = 3;
    pub const QC: u32 = 4;
    pub const Q2: u32 = 5;
    pub const TB: u32 = 6;
    pub const ACC: u32 = 7;
    pub const LEN: u32 = 8;
    pub const LEN2: u32 = 9;
    pub const VR: u32 = 10;
    pub const H: u32 = 11;
    pub const REM: u32 = 12;
    pub const ZERO: u32 = 13;
}

/// Append the gamma code of register `v` (>= 1, consumed) to the bit
/// accumulator `ACC`. All scratch registers must be zero on entry and are
/// zero on exit.
fn emit_gamma_of_register(asm: &mut Asm, v: u32) {
    use regs::*;
    // Phase 1: LEN/LEN2 := bitlength(v), VR := bit-reversal of v.
    let top = asm.fresh_label();
    let done = asm.fresh_label();
    asm.place(top);
    asm.decjz(v, done);
    asm.inc(v); // probe undone
    asm.halve_into(v, H, REM); // H = v/2, REM = parity, v = 0
    asm.loop_add(VR, &[(v, 2)]); // v := 2*VR (v is free here)
    asm.move_into(v, VR); // VR := 2*VR
    asm.move_into(REM, VR); // VR += parity
    asm.move_into(H, v); // v := v/2 for the next round
    asm.inc(LEN);
    asm.inc(LEN2);
    asm.jmp(top);
    asm.place(done);
    // Phase 2: LEN-1 leading zeros: ACC <<= 1 each.
    asm.dec_or_next(LEN);
    let ztop = asm.fresh_label();
    let zdone = asm.fresh_label();
    asm.place(ztop);
    asm.decjz(LEN, zdone);
    asm.loop_add(ACC, &[(H, 2)]);
    asm.move_into(H, ACC);
    asm.jmp(ztop);
    asm.place(zdone);
    // Phase 3: LEN2 payload bits, MSB first = LSB-first of the reversal.
    let btop = asm.fresh_label();
    let bdone = asm.fresh_label();
    asm.place(btop);
    asm.decjz(LEN2, bdone);
    asm.halve_into(VR, H, REM); // REM = next bit
    asm.move_into(H, VR);
    asm.loop_add(ACC, &[(H, 2)]);
    asm.move_into(H, ACC); // ACC <<= 1
    asm.move_into(REM, ACC); // ACC += bit
    asm.jmp(btop);
    asm.place(bdone);
}

/// Pack `P/Q` (positive) from registers into register 0 as an `a`-index.
/// `P` and `Q` are consumed; register 0 must be zero on entry.
fn emit_pack_index(asm: &mut Asm) {
    use regs::*;
    asm.inc(ACC); // leading 1 of the bits<->nat bijection
    asm.inc(P); // gamma(p+1)
    emit_gamma_of_register(asm, P);
    emit_gamma_of_register(asm, Q); // gamma(q)
    asm.loop_add(ACC, &[(H, 2)]); // sign bit 0: ACC <<= 1
    asm.move_into(H, ACC);
    asm.dec_or_next(ACC); // index = ACC - 1
    asm.move_into(ACC, 0);
}

/// The standard-index program for `sqrt 2`: on input `n` it runs `n + 2`
/// Pell steps from `(p, q) = (1, 1)` (so `|p/q - sqrt 2| <= q^-2 <= 2^-2(n+2)`)
/// and outputs the `a`-index of `p/q`. Honest runtimes are on the order of
/// the emitted index value, about `2^(5n)` steps; pair queries with
/// [`pell_budget`].
pub fn pell_sqrt2_emitter() -> Program {
    use regs::*;
    let mut asm = Asm::new(ZERO);
    asm.inc(P);
    asm.inc(Q);
    asm.inc(0);
    asm.inc(0);
    let outer = asm.fresh_label();
    let pack = asm.fresh_label();
    asm.place(outer);
    asm.decjz(0, pack);
    // (p, q) := (p + 2q, p + q)
    asm.move_into(P, T);
    asm.loop_add(Q, &[(QC, 1), (Q2, 1)]);
    asm.move_into(Q2, Q);
    asm.loop_add(T, &[(P, 1), (TB, 1)]);
    asm.loop_add(QC, &[(P, 2)]);
    asm.move_into(TB, Q);
    asm.jmp(outer);
    asm.place(pack);
    emit_pack_index(&mut asm);
    asm.halt();
    asm.assemble().expect("pell emitter assembles")
}

/// A step budget ample for `pell_sqrt2_emitter` at query level `n`.
pub fn pell_budget(n: u32) -> BigUint {
    BigUint::one() << (6 * n as usize + 40)
}

/// Exact Pell convergent `p_k / q_k` from `(1,1)`; matches what the emitter
/// holds after `k` loop iterations.
pub fn pell_convergent(k: u32) -> Rational {
    let mut p = BigUint::one();
    let mut q = BigUint::one();
    for _ in 0..k {
        let np = &p + &q * 2u32;
        let nq = &p + &q;
        p = np;
        q = nq;
    }
    &Rational::from_biguint(&p) / &Rational::from_biguint(&q)
}

/// A table program: on input `m < values.len()` it outputs
/// `index_of(values[m])`; on larger inputs it diverges (the quasi-reading
/// then stalls, exactly like a partial function). Entry `m` costs `m + 1`
/// dispatch steps plus the index build, so within a fixed builder the
/// runtime of entry `m` depends only on `values[m]`.
pub fn table_program(values: &[Rational]) -> Program {
    let mut asm = Asm::new(3);
    let entries: Vec<_> = (0..values.len()).map(|_| asm.fresh_label()).collect();
    for l in &entries {
        asm.decjz(0, *l);
    }
    let dead = asm.fresh_label();
    asm.place(dead);
    asm.jmp(dead); // table exhausted: diverge
    for (v, l) in values.iter().zip(&entries) {
        asm.place(*l);
        asm.build_const(0, &index_of(v), 1);
        asm.halt();
    }
    asm.assemble().expect("table assembles")
}

/// The `m`-th value of the scaled canonical approximation table for
/// `scale * sqrt 2`.
pub fn scaled_pell_value(scale: &Rational, m: u32) -> Rational {
    &pell_convergent(m + 2) * scale
}

/// Canonical quasi-sequence table for `scale * sqrt 2`, `entries` deep.
pub fn scaled_pell_table(scale: &Rational, entries: u32) -> Program {
    let values: Vec<Rational> = (0..entries).map(|m| scaled_pell_value(scale, m)).collect();
    table_program(&values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::eval::{run_to_halt, step_eval, EvalOutcome};
    use crate::rat::rat_sqrt_approx;
    use num_traits::Zero;

    #[test]
    fn enumeration_is_total_and_sectioned() {
        assert_eq!(rational_at(&BigUint::zero()), Rational::from_int(1));
        for n in 0u64..4000 {
            let v = rational_at(&BigUint::from(n));
            assert_eq!(rational_at(&index_of(&v)), v);
        }
        for r in [
            Rational::from_int(0),
            Rational::from_int(2),
            Rational::ratio(-7, 3),
            Rational::ratio(355, 113),
        ] {
            assert_eq!(rational_at(&index_of(&r)), r);
        }
        // The index the zeta construction counts up to.
        assert_eq!(index_of(&Rational::from_int(2)), BigUint::from(45u32));
    }

    #[test]
    fn const_emitter_outputs_its_index() {
        let idx = index_of(&Rational::ratio(-7, 3));
        let p = const_emitter(&idx);
        for input in [0u32, 5, 100] {
            let (out, _) = run_to_halt(&p, &BigUint::from(input), 1_000_000).unwrap();
            assert_eq!(out, idx);
        }
    }

    #[test]
    fn pell_emitter_emits_sqrt2_indices() {
        let p = pell_sqrt2_emitter();
        for n in [0u32, 1, 2, 5, 9] {
            let budget = pell_budget(n);
            let EvalOutcome::Halted { output, steps } =
                step_eval(&p, &BigUint::from(n), &budget).unwrap()
            else {
                panic!("pell emitter should halt at level {n}");
            };
            assert!(steps <= budget);
            let v = rational_at(&output);
            assert_eq!(v, pell_convergent(n + 2), "level {n}");
            // |v - sqrt2| <= 2^-n, checked against a 2^-(n+20) reference.
            let reference = rat_sqrt_approx(&Rational::from_int(2), n + 20).unwrap();
            let gap = (&v - &reference).abs();
            assert!(gap <= Rational::pow2(-(n as i64)), "level {n}: {gap}");
        }
    }

    #[test]
    fn table_program_dispatch_and_stall() {
        let values = vec![
            Rational::from_int(1),
            Rational::ratio(7, 5),
            Rational::ratio(17, 12),
        ];
        let p = table_program(&values);
        for (m, v) in values.iter().enumerate() {
            let (out, _) = run_to_halt(&p, &BigUint::from(m), 10_000_000).unwrap();
            assert_eq!(rational_at(&out), *v, "entry {m}");
        }
        // Beyond the table: diverges.
        assert!(run_to_halt(&p, &BigUint::from(values.len()), 100_000).is_none());
    }
}
