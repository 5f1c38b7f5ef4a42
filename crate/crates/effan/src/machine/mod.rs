//! A minimal register machine standing in for the partial computable
//! functions `phi_e`.
//!
//! Three instructions: `INC r` increments register `r`; `DECJZ r l` jumps to
//! `l` when register `r` is zero and decrements it otherwise; `HALT` stops.
//! Input arrives in register 0 and output is read from register 0 at halt
//! (a two-argument program takes its first argument in register 1). One step
//! is one instruction execution; reaching the end of the program halts at no
//! step cost. Jump targets lie in `[0, len]`, with `len` acting as `HALT`.
//!
//! # Index coding (v1, frozen)
//!
//! A program is a bit string: `HALT` is `00`, `INC r` is `01 g(r+1)`,
//! `DECJZ r l` is `10 g(r+1) g(l+1)`, where `g` is the Elias gamma code.
//! Bit strings biject with naturals via `s <-> bin(1s) - 1`, so every
//! program has an index and indices are dense. Decoding is total: any index
//! that fails to parse (or jumps out of range) denotes the canonical
//! diverging program `DECJZ 1 0`.

pub mod asm;
pub mod eval;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::encoding::{bits_to_nat, gamma_decode, gamma_encode, nat_to_bits};
use crate::exec::{map_batch, ExecMode};

pub use eval::{naive_step_eval, step_eval, EvalError, EvalOutcome, Evaluator};

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum MachineError {
    #[error("cannot parse instruction `{0}`")]
    Parse(String),
    #[error("invalid program: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Instr {
    Inc(u32),
    DecJz(u32, usize),
    Halt,
}

/// A validated program: every jump target is within `[0, len]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Program {
    instrs: Vec<Instr>,
}

impl Program {
    pub fn new(instrs: Vec<Instr>) -> Result<Self, MachineError> {
        let len = instrs.len();
        for (i, ins) in instrs.iter().enumerate() {
            if let Instr::DecJz(_, t) = ins {
                if *t > len {
                    return Err(MachineError::Invalid(format!(
                        "instruction {i} jumps to {t}, past program end {len}"
                    )));
                }
            }
        }
        Ok(Program { instrs })
    }

    /// The canonical diverging program: `DECJZ 1 0` loops forever on any
    /// input, since register 1 starts at zero and the jump lands on itself.
    pub fn diverging() -> Self {
        Program {
            instrs: vec![Instr::DecJz(1, 0)],
        }
    }

    pub fn instrs(&self) -> &[Instr] {
        &self.instrs
    }

    pub fn len(&self) -> usize {
        self.instrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instrs.is_empty()
    }

    /// Highest register index mentioned; `None` for the empty program.
    pub fn max_register(&self) -> Option<u32> {
        self.instrs
            .iter()
            .map(|i| match i {
                Instr::Inc(r) => Some(*r),
                Instr::DecJz(r, _) => Some(*r),
                Instr::Halt => None,
            })
            .max()
            .flatten()
    }

    /// True when the program never reads or writes register 0, so its
    /// behaviour (and halting) is independent of the input.
    pub fn is_input_oblivious(&self) -> bool {
        self.instrs.iter().all(|i| match i {
            Instr::Inc(r) => *r != 0,
            Instr::DecJz(r, _) => *r != 0,
            Instr::Halt => true,
        })
    }

    pub fn encode(&self) -> BigUint {
        let mut bits = Vec::new();
        for ins in &self.instrs {
            match ins {
                Instr::Halt => {
                    bits.push(false);
                    bits.push(false);
                }
                Instr::Inc(r) => {
                    bits.push(false);
                    bits.push(true);
                    gamma_encode(&mut bits, &BigUint::from(*r + 1));
                }
                Instr::DecJz(r, t) => {
                    bits.push(true);
                    bits.push(false);
                    gamma_encode(&mut bits, &BigUint::from(*r + 1));
                    gamma_encode(&mut bits, &BigUint::from(*t as u64 + 1));
                }
            }
        }
        bits_to_nat(&bits)
    }

    /// Total decoding; anything unparseable is the diverging program.
    pub fn decode(e: &BigUint) -> Self {
        let bits = nat_to_bits(e);
        let mut pos = 0usize;
        let mut instrs = Vec::new();
        while pos < bits.len() {
            if pos + 1 >= bits.len() {
                return Program::diverging();
            }
            let (b0, b1) = (bits[pos], bits[pos + 1]);
            pos += 2;
            match (b0, b1) {
                (false, false) => instrs.push(Instr::Halt),
                (false, true) => {
                    let Some(r) = gamma_decode(&bits, &mut pos) else {
                        return Program::diverging();
                    };
                    let Ok(r) = u32::try_from(&r - 1u32) else {
                        return Program::diverging();
                    };
                    instrs.push(Instr::Inc(r));
                }
                (true, false) => {
                    let Some(r) = gamma_decode(&bits, &mut pos) else {
                        return Program::diverging();
                    };
                    let Some(t) = gamma_decode(&bits, &mut pos) else {
                        return Program::diverging();
                    };
                    let (Ok(r), Ok(t)) = (u32::try_from(&r - 1u32), usize::try_from(&t - 1u32))
                    else {
                        return Program::diverging();
                    };
                    instrs.push(Instr::DecJz(r, t));
                }
                (true, true) => return Program::diverging(),
            }
        }
        Program::new(instrs).unwrap_or_else(|_| Program::diverging())
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, ins) in self.instrs.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            match ins {
                Instr::Inc(r) => write!(f, "INC {r}")?,
                Instr::DecJz(r, t) => write!(f, "DECJZ {r} {t}")?,
                Instr::Halt => write!(f, "HALT")?,
            }
        }
        Ok(())
    }
}

impl FromStr for Program {
    type Err = MachineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut instrs = Vec::new();
        for line in s.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let op = parts.next().unwrap_or_default().to_ascii_uppercase();
            let ins = match op.as_str() {
                "HALT" => Instr::Halt,
                "INC" => {
                    let r = parts
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| MachineError::Parse(line.to_string()))?;
                    Instr::Inc(r)
                }
                "DECJZ" => {
                    let r = parts
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| MachineError::Parse(line.to_string()))?;
                    let t = parts
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| MachineError::Parse(line.to_string()))?;
                    Instr::DecJz(r, t)
                }
                _ => return Err(MachineError::Parse(line.to_string())),
            };
            if parts.next().is_some() {
                return Err(MachineError::Parse(line.to_string()));
            }
            instrs.push(ins);
        }
        Program::new(instrs)
    }
}

/// `s-1-1`: from a two-argument program (first argument in register 1) and a
/// value `x`, the index of a one-argument program with
/// `phi_{s11(e,x)}(y) = phi_e(x, y)`, realized by prefixing `x` increments
/// of register 1 and shifting the body's jump targets.
pub fn s11(e: &BigUint, x: u64) -> BigUint {
    let body = Program::decode(e);
    let shift = usize::try_from(x).expect("s11 prefix length fits in memory");
    let mut instrs = Vec::with_capacity(shift + body.len());
    for _ in 0..shift {
        instrs.push(Instr::Inc(1));
    }
    for ins in body.instrs() {
        instrs.push(match ins {
            Instr::DecJz(r, t) => Instr::DecJz(*r, t + shift),
            other => *other,
        });
    }
    Program::new(instrs)
        .expect("shifted targets stay in range")
        .encode()
}

/// Stage `n` of the self-halting set: `K_n = { e <= n : phi_{e,n}(e) halts }`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CeStage {
    pub stage: u64,
    pub members: BTreeSet<u64>,
}

pub fn halting_stage(n: u64) -> CeStage {
    let budget = BigUint::from(n);
    let members = (0..=n)
        .filter(|&e| {
            let p = Program::decode(&BigUint::from(e));
            matches!(
                step_eval(&p, &BigUint::from(e), &budget),
                Ok(EvalOutcome::Halted { .. })
            )
        })
        .collect();
    CeStage { stage: n, members }
}

/// All stages `0..=n`, batched (parallel under the `parallel` feature; the
/// output is identical either way).
pub fn halting_stages(n: u64, mode: ExecMode) -> Vec<CeStage> {
    map_batch(mode, (0..=n).collect(), halting_stage)
}
