//! Step-indexed evaluation with exact instruction counting.
//!
//! Two interpreters compute the same function. [`naive_step_eval`] executes
//! one instruction per engine tick and is the reference. [`step_eval`]
//! additionally recognizes two first-order loop shapes and replays all their
//! iterations in closed form, keeping register effects and the step count
//! bit-for-bit equal to the naive run. That makes step budgets far beyond
//! any feasible tick count (the programs emitted by [`super::asm`] run for
//! `~2^k` honest steps while assembling `k`-bit indices) decidable in
//! milliseconds.
//!
//! Accelerated shapes, with `z` a register that is currently zero and not
//! touched by the body:
//!
//! ```text
//! L: DECJZ c E          L: DECJZ c E1
//!    INC a1 ...            DECJZ c E2
//!    DECJZ z L             INC a1 ...
//!                          DECJZ z L
//! ```
//!
//! The left shape drains `c`, adding `c` to each `a_i`; the right shape
//! halves it. Everything else falls back to single stepping.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::{Instr, Program};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalOutcome {
    Halted { output: BigUint, steps: BigUint },
    Running,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("evaluator fuel exhausted after {ticks} engine ticks (budget not yet consumed)")]
    FuelExhausted { ticks: u64 },
}

/// Default engine-tick allowance; one tick is one instruction or one whole
/// accelerated loop.
pub const DEFAULT_FUEL: u64 = 50_000_000;

/// Exact budgeted evaluation with loop acceleration.
pub fn step_eval(
    program: &Program,
    input: &BigUint,
    budget: &BigUint,
) -> Result<EvalOutcome, EvalError> {
    Evaluator::new(program, input).run(budget, DEFAULT_FUEL)
}

/// Reference interpreter: strictly one instruction per tick, `u64` budget.
pub fn naive_step_eval(program: &Program, input: &BigUint, budget: u64) -> EvalOutcome {
    let mut regs = initial_registers(program, input);
    let mut pc = 0usize;
    let mut steps = 0u64;
    loop {
        if pc >= program.len() {
            return EvalOutcome::Halted {
                output: regs[0].clone(),
                steps: BigUint::from(steps),
            };
        }
        if steps == budget {
            return EvalOutcome::Running;
        }
        match program.instrs()[pc] {
            Instr::Halt => {
                return EvalOutcome::Halted {
                    output: regs[0].clone(),
                    steps: BigUint::from(steps + 1),
                };
            }
            Instr::Inc(r) => {
                regs[r as usize] += 1u32;
                pc += 1;
            }
            Instr::DecJz(r, t) => {
                if regs[r as usize].is_zero() {
                    pc = t;
                } else {
                    regs[r as usize] -= 1u32;
                    pc += 1;
                }
            }
        }
        steps += 1;
    }
}

fn initial_registers(program: &Program, input: &BigUint) -> Vec<BigUint> {
    let count = program.max_register().map_or(1, |m| m + 1).max(1) as usize;
    let mut regs = vec![BigUint::zero(); count];
    regs[0] = input.clone();
    regs
}

/// Resumable machine state; used directly by callers that need the exact
/// halting step of a long run.
pub struct Evaluator<'p> {
    program: &'p Program,
    regs: Vec<BigUint>,
    pc: usize,
    steps: BigUint,
}

enum LoopShape {
    /// `(body_len, dec_per_iter, counter, inc_counts)`
    Simple {
        counter: usize,
        dec_per_iter: u32,
        body_len: u64,
        incs: Vec<(usize, u64)>,
    },
}

impl<'p> Evaluator<'p> {
    pub fn new(program: &'p Program, input: &BigUint) -> Self {
        Evaluator {
            program,
            regs: initial_registers(program, input),
            pc: 0,
            steps: BigUint::zero(),
        }
    }

    pub fn steps(&self) -> &BigUint {
        &self.steps
    }

    /// True when the machine provably never halts from its current state.
    pub fn certified_diverging(&self) -> bool {
        self.in_zero_cycle()
    }

    /// Run until halt, the budget, or the fuel limit.
    pub fn run(&mut self, budget: &BigUint, fuel: u64) -> Result<EvalOutcome, EvalError> {
        let mut ticks = 0u64;
        loop {
            if self.pc >= self.program.len() {
                return Ok(EvalOutcome::Halted {
                    output: self.regs[0].clone(),
                    steps: self.steps.clone(),
                });
            }
            let remaining = budget - &self.steps; // steps <= budget is an invariant
            if remaining.is_zero() {
                return Ok(EvalOutcome::Running);
            }
            if ticks >= fuel {
                return Err(EvalError::FuelExhausted { ticks });
            }
            ticks += 1;
            if self.in_zero_cycle() {
                // The machine sits in a jump cycle over registers that are
                // all zero: the state recurs exactly, so it never halts.
                // Consuming the whole budget is the exact outcome.
                self.steps = budget.clone();
                return Ok(EvalOutcome::Running);
            }
            if let Some(shape) = self.match_loop() {
                if self.apply_loop(&shape, &remaining) {
                    continue;
                }
            }
            match self.program.instrs()[self.pc] {
                Instr::Halt => {
                    self.steps += 1u32;
                    return Ok(EvalOutcome::Halted {
                        output: self.regs[0].clone(),
                        steps: self.steps.clone(),
                    });
                }
                Instr::Inc(r) => {
                    self.regs[r as usize] += 1u32;
                    self.pc += 1;
                    self.steps += 1u32;
                }
                Instr::DecJz(r, t) => {
                    if self.regs[r as usize].is_zero() {
                        self.pc = t;
                    } else {
                        self.regs[r as usize] -= 1u32;
                        self.pc += 1;
                    }
                    self.steps += 1u32;
                }
            }
        }
    }

    /// Certified divergence: from the current pc, jumps over zero-valued
    /// registers alone lead back to a visited position. No register changes
    /// along such a walk, so the exact machine state repeats forever.
    fn in_zero_cycle(&self) -> bool {
        let instrs = self.program.instrs();
        let Some(Instr::DecJz(r, _)) = instrs.get(self.pc) else {
            return false;
        };
        if !self.regs[*r as usize].is_zero() {
            return false;
        }
        let mut cur = self.pc;
        let mut visited = vec![false; instrs.len() + 1];
        loop {
            if cur >= instrs.len() {
                return false; // falls off the end: halts
            }
            if visited[cur] {
                return true;
            }
            visited[cur] = true;
            match instrs[cur] {
                Instr::DecJz(r, t) if self.regs[r as usize].is_zero() => cur = t,
                _ => return false,
            }
        }
    }

    /// Recognize an accelerable loop headed at the current pc.
    fn match_loop(&self) -> Option<LoopShape> {
        let instrs = self.program.instrs();
        let Instr::DecJz(counter, _) = instrs[self.pc] else {
            return None;
        };
        let counter = counter as usize;
        let mut j = self.pc + 1;
        let mut dec_per_iter = 1u32;
        // Optional second DECJZ on the same counter (halving shape).
        if let Some(Instr::DecJz(c2, _)) = instrs.get(j) {
            if *c2 as usize == counter {
                dec_per_iter = 2;
                j += 1;
            }
        }
        let mut incs: Vec<(usize, u64)> = Vec::new();
        loop {
            match instrs.get(j) {
                Some(Instr::Inc(r)) => {
                    let r = *r as usize;
                    if r == counter {
                        return None;
                    }
                    match incs.iter_mut().find(|(reg, _)| *reg == r) {
                        Some((_, c)) => *c += 1,
                        None => incs.push((r, 1)),
                    }
                    j += 1;
                }
                Some(Instr::DecJz(z, t)) => {
                    let z = *z as usize;
                    // Unconditional back jump: z is zero now and stays zero.
                    if *t == self.pc
                        && z != counter
                        && self.regs[z].is_zero()
                        && incs.iter().all(|(r, _)| *r != z)
                    {
                        return Some(LoopShape::Simple {
                            counter,
                            dec_per_iter,
                            body_len: (j - self.pc + 1) as u64,
                            incs,
                        });
                    }
                    return None;
                }
                _ => return None,
            }
        }
    }

    /// Replay as many whole iterations as the counter and budget allow.
    /// Returns false when not even one iteration fits (single stepping then
    /// makes the remaining progress exactly).
    fn apply_loop(&mut self, shape: &LoopShape, remaining: &BigUint) -> bool {
        let LoopShape::Simple {
            counter,
            dec_per_iter,
            body_len,
            incs,
        } = shape;
        let by_counter = &self.regs[*counter] / BigUint::from(*dec_per_iter);
        let by_budget = remaining / BigUint::from(*body_len);
        let k = by_counter.min(by_budget);
        if k.is_zero() {
            return false;
        }
        self.regs[*counter] -= &k * BigUint::from(*dec_per_iter);
        for (r, c) in incs {
            self.regs[*r] += &k * BigUint::from(*c);
        }
        self.steps += &k * BigUint::from(*body_len);
        true
    }
}

/// Unbounded run: evaluates until halt or fuel exhaustion, reporting the
/// exact halting step. `None` means the fuel ran out with the machine still
/// going (which for non-accelerable diverging programs is the only answer a
/// finite engine can give).
pub fn run_to_halt(program: &Program, input: &BigUint, fuel: u64) -> Option<(BigUint, BigUint)> {
    let mut ev = Evaluator::new(program, input);
    // A budget beyond any value a fueled run can reach.
    let mut budget = BigUint::one();
    loop {
        budget <<= 64;
        match ev.run(&budget, fuel) {
            Ok(EvalOutcome::Halted { output, steps }) => return Some((output, steps)),
            Ok(EvalOutcome::Running) if ev.certified_diverging() => return None,
            Ok(EvalOutcome::Running) => continue,
            Err(EvalError::FuelExhausted { .. }) => return None,
        }
    }
}
