//! A tiny macro assembler for register-machine programs.
//!
//! Callers designate one register as the `zero` register; it is never
//! incremented, so `DECJZ zero L` is an unconditional jump. The loop macros
//! below emit exactly the shapes the accelerated evaluator recognizes, which
//! keeps the generated programs runnable at astronomical step budgets.

use num_bigint::BigUint;
use num_traits::Zero;

use super::{Instr, MachineError, Program};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Label(usize);

#[derive(Debug, Clone, Copy)]
enum Target {
    Label(Label),
    Next,
}

#[derive(Debug, Clone, Copy)]
enum Draft {
    Inc(u32),
    DecJz(u32, Target),
    Halt,
}

pub struct Asm {
    zero: u32,
    code: Vec<Draft>,
    labels: Vec<Option<usize>>,
}

impl Asm {
    /// `zero` must be nonzero (register 0 carries the input) and never
    /// written by inlined code.
    pub fn new(zero: u32) -> Self {
        assert!(zero != 0, "register 0 holds the input");
        Asm {
            zero,
            code: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn zero_register(&self) -> u32 {
        self.zero
    }

    pub fn fresh_label(&mut self) -> Label {
        self.labels.push(None);
        Label(self.labels.len() - 1)
    }

    pub fn place(&mut self, l: Label) {
        assert!(self.labels[l.0].is_none(), "label placed twice");
        self.labels[l.0] = Some(self.code.len());
    }

    pub fn inc(&mut self, r: u32) {
        assert_ne!(r, self.zero, "the zero register must stay zero");
        self.code.push(Draft::Inc(r));
    }

    pub fn decjz(&mut self, r: u32, l: Label) {
        self.code.push(Draft::DecJz(r, Target::Label(l)));
    }

    /// Decrement-or-skip: `DECJZ r <next>`; used to drop a unit or probe zero.
    pub fn dec_or_next(&mut self, r: u32) {
        self.code.push(Draft::DecJz(r, Target::Next));
    }

    pub fn jmp(&mut self, l: Label) {
        let z = self.zero;
        self.code.push(Draft::DecJz(z, Target::Label(l)));
    }

    pub fn halt(&mut self) {
        self.code.push(Draft::Halt);
    }

    /// Drain `counter`, adding `counter * count` to each target register.
    /// Emits the accelerable count-down shape.
    pub fn loop_add(&mut self, counter: u32, targets: &[(u32, u32)]) {
        let top = self.fresh_label();
        let done = self.fresh_label();
        self.place(top);
        self.decjz(counter, done);
        for (r, count) in targets {
            assert_ne!(*r, counter, "cannot add a counter into itself");
            for _ in 0..*count {
                self.inc(*r);
            }
        }
        self.jmp(top);
        self.place(done);
    }

    pub fn clear(&mut self, r: u32) {
        self.loop_add(r, &[]);
    }

    /// Destructive move: `dst += src; src = 0`.
    pub fn move_into(&mut self, src: u32, dst: u32) {
        self.loop_add(src, &[(dst, 1)]);
    }

    /// `half_dst += floor(src/2); rem_dst += src mod 2; src = 0`.
    /// Emits the accelerable halving shape.
    pub fn halve_into(&mut self, src: u32, half_dst: u32, rem_dst: u32) {
        let top = self.fresh_label();
        let even = self.fresh_label();
        let odd = self.fresh_label();
        self.place(top);
        self.decjz(src, even);
        self.decjz(src, odd);
        self.inc(half_dst);
        self.jmp(top);
        self.place(odd);
        self.inc(rem_dst);
        self.place(even);
    }

    /// `r += v` for a small constant by plain increments.
    pub fn add_small(&mut self, r: u32, v: u64) {
        for _ in 0..v {
            self.inc(r);
        }
    }

    /// `r := v` for an arbitrary constant, by doubling through `scratch`.
    /// Both `r` and `scratch` must currently be zero.
    pub fn build_const(&mut self, r: u32, v: &BigUint, scratch: u32) {
        if v.is_zero() {
            return;
        }
        if v.bits() <= 6 {
            self.add_small(r, u64::try_from(v).unwrap());
            return;
        }
        for i in (0..v.bits()).rev() {
            if i + 1 < v.bits() {
                // r := 2r
                self.loop_add(r, &[(scratch, 2)]);
                self.move_into(scratch, r);
            }
            if v.bit(i) {
                self.inc(r);
            }
        }
    }

    /// Splice a whole program in: jump targets shift to the current offset,
    /// `HALT` (and jumps to the body's end) become jumps to `cont`. The body
    /// must not touch this assembler's zero register.
    pub fn inline_program(&mut self, body: &Program, cont: Label) {
        if let Some(max) = body.max_register() {
            assert!(max < self.zero, "inlined body collides with the zero register");
        }
        let offset = self.code.len();
        let end = body.len();
        // Pre-allocate one label per body position so shifted jumps resolve.
        let pos_labels: Vec<Label> = (0..end).map(|_| self.fresh_label()).collect();
        for (i, ins) in body.instrs().iter().enumerate() {
            debug_assert_eq!(self.code.len(), offset + i);
            self.place(pos_labels[i]);
            match ins {
                Instr::Halt => {
                    let z = self.zero;
                    self.code.push(Draft::DecJz(z, Target::Label(cont)));
                }
                Instr::Inc(r) => self.code.push(Draft::Inc(*r)),
                Instr::DecJz(r, t) => {
                    let target = if *t == end {
                        Target::Label(cont)
                    } else {
                        Target::Label(pos_labels[*t])
                    };
                    self.code.push(Draft::DecJz(*r, target));
                }
            }
        }
    }

    pub fn assemble(self) -> Result<Program, MachineError> {
        let len = self.code.len();
        let mut instrs = Vec::with_capacity(len);
        for (i, d) in self.code.iter().enumerate() {
            instrs.push(match d {
                Draft::Inc(r) => Instr::Inc(*r),
                Draft::Halt => Instr::Halt,
                Draft::DecJz(r, Target::Next) => Instr::DecJz(*r, i + 1),
                Draft::DecJz(r, Target::Label(l)) => {
                    let pos = self.labels[l.0].ok_or_else(|| {
                        MachineError::Invalid(format!("unplaced label {:?}", l))
                    })?;
                    Instr::DecJz(*r, pos)
                }
            });
        }
        Program::new(instrs)
    }
}
