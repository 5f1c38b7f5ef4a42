//! The curated program corpus: 50 register-machine programs with known
//! halting-on-self status, used by the dichotomy and reduction demos.
//!
//! Every entry is input-oblivious (never touches register 0), so halting on
//! its own index equals halting on any input and the `zeta` construction can
//! observe it at feasible stages. Halters are verified by running them;
//! divergers are built as increment-free jump cycles, so their machine state
//! repeats exactly and divergence is certified by state repetition.
//!
//! # File format (v1)
//!
//! JSON lines. The first line is `{"format":"effan-corpus","version":1}`;
//! each following line is
//! `{"name": ..., "program": "<text, \n-separated>", "halts_on_self": ...,
//! "budget": ...}` with the program in the `INC r` / `DECJZ r l` / `HALT`
//! text format. The `EFFAN_CORPUS` environment variable overrides the
//! built-in corpus with a file.

use std::collections::HashSet;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::machine::asm::Asm;
use crate::machine::{naive_step_eval, EvalOutcome, Instr, Program};

pub const CORPUS_ENV: &str = "EFFAN_CORPUS";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, thiserror::Error)]
pub enum CorpusError {
    #[error("corpus i/o: {0}")]
    Io(String),
    #[error("corpus format: {0}")]
    Format(String),
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub name: String,
    pub program: Program,
    pub halts_on_self: bool,
    /// Steps that decide the status: halters halt within it; divergers have
    /// repeated a machine state within it.
    pub budget: u64,
}

impl CorpusEntry {
    pub fn index(&self) -> BigUint {
        self.program.encode()
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
}

#[derive(Serialize, Deserialize)]
struct Record {
    name: String,
    program: String,
    halts_on_self: bool,
    budget: u64,
}

pub fn to_jsonl(entries: &[CorpusEntry]) -> String {
    let mut out = serde_json::to_string(&Header {
        format: "effan-corpus".into(),
        version: FORMAT_VERSION,
    })
    .unwrap();
    for e in entries {
        out.push('\n');
        out.push_str(
            &serde_json::to_string(&Record {
                name: e.name.clone(),
                program: e.program.to_string(),
                halts_on_self: e.halts_on_self,
                budget: e.budget,
            })
            .unwrap(),
        );
    }
    out
}

pub fn from_jsonl(text: &str) -> Result<Vec<CorpusEntry>, CorpusError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Header = serde_json::from_str(lines.next().ok_or_else(|| {
        CorpusError::Format("empty corpus".into())
    })?)
    .map_err(|e| CorpusError::Format(e.to_string()))?;
    if header.format != "effan-corpus" || header.version != FORMAT_VERSION {
        return Err(CorpusError::Format(format!(
            "unsupported corpus format {}/{}",
            header.format, header.version
        )));
    }
    lines
        .map(|l| {
            let r: Record =
                serde_json::from_str(l).map_err(|e| CorpusError::Format(e.to_string()))?;
            let program: Program = r
                .program
                .parse()
                .map_err(|e: crate::machine::MachineError| CorpusError::Format(e.to_string()))?;
            Ok(CorpusEntry {
                name: r.name,
                program,
                halts_on_self: r.halts_on_self,
                budget: r.budget,
            })
        })
        .collect()
}

pub fn load_file(path: &std::path::Path) -> Result<Vec<CorpusEntry>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|e| CorpusError::Io(e.to_string()))?;
    from_jsonl(&text)
}

/// The built-in corpus, or the file named by `EFFAN_CORPUS` when set.
pub fn resolve() -> Result<Vec<CorpusEntry>, CorpusError> {
    match std::env::var_os(CORPUS_ENV) {
        Some(path) => load_file(std::path::Path::new(&path)),
        None => Ok(builtin()),
    }
}

fn oblivious_halter(name: &str, build: impl FnOnce(&mut Asm)) -> CorpusEntry {
    let mut asm = Asm::new(9);
    build(&mut asm);
    asm.halt();
    let program = asm.assemble().expect("corpus program assembles");
    assert!(program.is_input_oblivious(), "{name} touches register 0");
    // Measure the actual runtime on input 0 (input-independent).
    let budget = match naive_step_eval(&program, &BigUint::from(0u32), 50_000_000) {
        EvalOutcome::Halted { steps, .. } => u64::try_from(&steps).unwrap() + 16,
        EvalOutcome::Running => panic!("{name} is supposed to halt"),
    };
    CorpusEntry {
        name: name.to_string(),
        program,
        halts_on_self: true,
        budget,
    }
}

fn certified_diverger(name: &str, instrs: Vec<Instr>) -> CorpusEntry {
    let program = Program::new(instrs).expect("corpus program assembles");
    assert!(program.is_input_oblivious(), "{name} touches register 0");
    assert!(
        state_repeats(&program, 4096),
        "{name} did not repeat a state; divergence unproven"
    );
    CorpusEntry {
        name: name.to_string(),
        program,
        halts_on_self: false,
        budget: 4096,
    }
}

/// Run from input 0 and check the exact machine state recurs: for these
/// increment-free cycles that certifies divergence on every input.
fn state_repeats(p: &Program, within: u64) -> bool {
    let regs = p.max_register().map_or(1, |m| m + 1).max(1) as usize;
    let mut state = (0usize, vec![0u64; regs]);
    let mut seen = HashSet::new();
    for _ in 0..within {
        if !seen.insert(state.clone()) {
            return true;
        }
        let (pc, mut rs) = state;
        if pc >= p.len() {
            return false; // halted
        }
        state = match p.instrs()[pc] {
            Instr::Halt => return false,
            Instr::Inc(r) => {
                rs[r as usize] += 1;
                (pc + 1, rs)
            }
            Instr::DecJz(r, t) => {
                if rs[r as usize] == 0 {
                    (t, rs)
                } else {
                    rs[r as usize] -= 1;
                    (pc + 1, rs)
                }
            }
        };
    }
    false
}

/// 25 halters and 25 certified divergers, all input-oblivious.
pub fn builtin() -> Vec<CorpusEntry> {
    let mut out = Vec::with_capacity(50);
    out.push(oblivious_halter("halt-now", |_| {}));
    for k in 1..=8u64 {
        out.push(oblivious_halter(&format!("bump-{k}"), |asm| {
            asm.add_small(1, k);
        }));
    }
    for c in [10u64, 50, 120, 400, 1100, 2600] {
        out.push(oblivious_halter(&format!("countdown-{c}"), |asm| {
            asm.build_const(1, &BigUint::from(c), 2);
            asm.clear(1);
        }));
    }
    for c in [6_000u64, 20_000, 45_000, 90_000, 200_000] {
        out.push(oblivious_halter(&format!("slow-countdown-{c}"), |asm| {
            asm.build_const(1, &BigUint::from(c), 2);
            asm.clear(1);
        }));
    }
    for (i, c) in [40u64, 90, 300, 700, 1500].iter().enumerate() {
        out.push(oblivious_halter(&format!("shuffle-{i}"), |asm| {
            asm.build_const(1, &BigUint::from(*c), 2);
            asm.loop_add(1, &[(2, 2), (3, 1)]);
            asm.move_into(2, 4);
            asm.clear(3);
            asm.clear(4);
        }));
    }
    debug_assert_eq!(out.len(), 25);

    // Divergers: increment-free cycles at varying positions and registers.
    out.push(certified_diverger(
        "spin-r1",
        vec![Instr::DecJz(1, 0)],
    ));
    out.push(certified_diverger(
        "spin-r2",
        vec![Instr::DecJz(2, 0), Instr::Halt],
    ));
    for r in 1..=6u32 {
        out.push(certified_diverger(
            &format!("two-hop-r{r}"),
            vec![
                Instr::DecJz(r, 1),
                Instr::DecJz(r + 1, 0),
                Instr::Halt,
            ],
        ));
    }
    for pad in 1..=6usize {
        // `pad` increments run once, then an unreachable-exit cycle spins.
        let mut instrs: Vec<Instr> = (0..pad).map(|_| Instr::Inc(1)).collect();
        let top = instrs.len();
        instrs.push(Instr::DecJz(2, top));
        instrs.push(Instr::Halt);
        out.push(certified_diverger(&format!("warmup-{pad}"), instrs));
    }
    for r in 1..=6u32 {
        out.push(certified_diverger(
            &format!("three-hop-r{r}"),
            vec![
                Instr::DecJz(r, 1),
                Instr::DecJz(r + 1, 2),
                Instr::DecJz(r + 2, 0),
                Instr::Halt,
            ],
        ));
    }
    for k in 1..=5u64 {
        let mut instrs: Vec<Instr> = (0..k).map(|_| Instr::Inc(3)).collect();
        let top = instrs.len();
        instrs.push(Instr::DecJz(4, top));
        instrs.push(Instr::DecJz(3, 0));
        out.push(certified_diverger(&format!("pebble-{k}"), instrs));
    }
    debug_assert_eq!(out.len(), 50);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::step_eval;

    #[test]
    fn corpus_shape_and_ground_truth() {
        let corpus = builtin();
        assert_eq!(corpus.len(), 50);
        let halters = corpus.iter().filter(|e| e.halts_on_self).count();
        assert_eq!(halters, 25);
        for e in &corpus {
            assert!(e.program.is_input_oblivious(), "{}", e.name);
            // Oblivious programs behave identically on any input; feed the
            // self index honestly and decide within the recorded budget.
            let outcome = step_eval(&e.program, &e.index(), &BigUint::from(e.budget));
            match (e.halts_on_self, outcome.unwrap()) {
                (true, EvalOutcome::Halted { .. }) => {}
                (false, EvalOutcome::Running) => {}
                (h, o) => panic!("{}: claimed halts={h}, got {o:?}", e.name),
            }
        }
    }

    #[test]
    fn jsonl_round_trip() {
        let corpus = builtin();
        let text = to_jsonl(&corpus);
        let back = from_jsonl(&text).unwrap();
        assert_eq!(back.len(), corpus.len());
        for (a, b) in corpus.iter().zip(&back) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.program, b.program);
            assert_eq!(a.halts_on_self, b.halts_on_self);
        }
        assert!(from_jsonl("{\"format\":\"other\",\"version\":9}").is_err());
    }

    #[test]
    fn distinct_indices() {
        let corpus = builtin();
        let mut seen = std::collections::HashSet::new();
        for e in &corpus {
            assert!(seen.insert(e.index()), "duplicate program {}", e.name);
        }
    }
}
