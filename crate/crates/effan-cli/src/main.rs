//! Command-line front end: evaluate computable-real expressions to `n` bits,
//! certified root finding, finite-dimensional operator norms, and the
//! counterexample demos. Output is JSON lines by default (`--pretty` for
//! tables); identical invocations print identical bytes.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use effan::demos;
use effan::numberings::corpus;
use effan::operators::{findim_norm, EffOperator};
use effan::rat::{GaussianRational, Rational};
use effan::roots::{find_roots, CPoly};
use effan::spaces::SpaceDesc;

#[derive(Parser)]
#[command(name = "effan", version, about = "Exact computable analysis toolkit")]
struct Cli {
    /// TOML config with defaults: bits, stages, precision, digits.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Human-readable output instead of JSON lines.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate an expression (rationals, + - * /, sqrt, abs, min, max).
    Eval {
        expr: String,
        /// Precision exponent: the printed value is within 2^-bits.
        #[arg(long)]
        bits: Option<u32>,
    },
    /// All complex roots of a polynomial, clusters within 2^-bits.
    Roots {
        /// Coefficients low-to-high, comma separated, rational or Gaussian
        /// rational text (e.g. "-2,0,1" or "0+2/1i,-2-1/1i,1").
        #[arg(long)]
        poly: String,
        #[arg(long)]
        bits: Option<u32>,
    },
    /// Operator norm of a square matrix via A*A eigenvalues.
    Norm {
        /// JSON rows of rational/Gaussian-rational text, e.g.
        /// [["1","1"],["0","1"]].
        #[arg(long)]
        matrix: String,
        #[arg(long)]
        bits: Option<u32>,
    },
    /// Counterexample gallery.
    Demo {
        #[command(subcommand)]
        which: DemoCmd,
    },
}

#[derive(Subcommand)]
enum DemoCmd {
    /// Stage table of the halting-set multiplication operator.
    HaltingNorm {
        #[arg(long)]
        stages: Option<u64>,
    },
    /// Refute a claimed recursive norm bound (`const:<n>` or `succ`).
    NormBoundRefuter {
        #[arg(long)]
        g: String,
    },
    /// Verdict table of the sqrt(2)-scaling reduction over the corpus.
    Sqrt2Quasi {
        #[arg(long)]
        precision: Option<u32>,
        /// Corpus file (JSON lines); defaults to the built-in corpus or
        /// the EFFAN_CORPUS environment variable.
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Ternary digits of the diagonal real missed by a total numbering.
    TotalNumberingDiagonal {
        #[arg(long)]
        digits: Option<u32>,
    },
    /// R + S with computable norms summing to the halting-norm operator.
    RsPathology {
        #[arg(long)]
        stages: Option<usize>,
        #[arg(long, default_value_t = 2)]
        m: i64,
    },
    /// Diagonal rotations plus identity: stagewise norms of P + Q.
    PqPathology {
        #[arg(long)]
        stages: Option<usize>,
    },
}

#[derive(Deserialize, Default)]
struct Config {
    bits: Option<u32>,
    stages: Option<u64>,
    precision: Option<u32>,
    digits: Option<u32>,
}

fn load_config(path: &Option<PathBuf>) -> Result<Config, String> {
    match path {
        None => Ok(Config::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("config: {e}"))?;
            toml::from_str(&text).map_err(|e| format!("config: {e}"))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn emit<T: Serialize>(pretty: bool, line: &T, render: impl FnOnce() -> String) {
    if pretty {
        println!("{}", render());
    } else {
        println!("{}", serde_json::to_string(line).expect("serializable"));
    }
}

#[derive(Serialize)]
struct EvalLine<'a> {
    expr: &'a str,
    bits: u32,
    approx: String,
    error_bound: String,
}

fn run(cli: &Cli) -> Result<(), String> {
    let config = load_config(&cli.config)?;
    let pretty = cli.pretty;
    match &cli.command {
        Command::Eval { expr, bits } => {
            let bits = bits.or(config.bits).unwrap_or(30);
            let value = effan::expr::eval_str(expr).map_err(|e| e.to_string())?;
            let approx = value.approx(bits).map_err(|e| e.to_string())?;
            let line = EvalLine {
                expr,
                bits,
                approx: approx.to_ratio_string(),
                error_bound: Rational::pow2(-i64::from(bits)).to_ratio_string(),
            };
            emit(pretty, &line, || {
                format!("{} = {}  (error <= 2^-{})", expr, line.approx, bits)
            });
            Ok(())
        }
        Command::Roots { poly, bits } => {
            let bits = bits.or(config.bits).unwrap_or(20);
            let coeffs: Vec<GaussianRational> = poly
                .split(',')
                .map(|t| t.trim().parse().map_err(|e: effan::rat::ScalarError| e.to_string()))
                .collect::<Result<_, _>>()?;
            let p = CPoly::from_exact(coeffs).map_err(|e| e.to_string())?;
            let clusters = find_roots(&p, bits).map_err(|e| e.to_string())?;
            let report = demos::roots_report(&clusters, p.degree());
            for c in &report.clusters {
                emit(pretty, c, || {
                    format!(
                        "root {} (radius <= {}, multiplicity {})",
                        c.center, c.radius, c.multiplicity
                    )
                });
            }
            Ok(())
        }
        Command::Norm { matrix, bits } => {
            let bits = bits.or(config.bits).unwrap_or(20);
            let rows: Vec<Vec<String>> =
                serde_json::from_str(matrix).map_err(|e| format!("matrix: {e}"))?;
            let dim = rows.len();
            if dim == 0 || rows.iter().any(|r| r.len() != dim) {
                return Err("matrix must be square and nonempty".into());
            }
            let entries: Vec<Vec<GaussianRational>> = rows
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|t| t.parse().map_err(|e: effan::rat::ScalarError| e.to_string()))
                        .collect()
                })
                .collect::<Result<_, _>>()?;
            let t = EffOperator::matrix_exact(SpaceDesc::complex(dim), entries)
                .map_err(|e| e.to_string())?;
            let norm = findim_norm(&t).map_err(|e| e.to_string())?;
            let approx = norm.approx(bits).map_err(|e| e.to_string())?;
            #[derive(Serialize)]
            struct NormLine {
                bits: u32,
                norm_approx: String,
                error_bound: String,
            }
            let line = NormLine {
                bits,
                norm_approx: approx.to_ratio_string(),
                error_bound: Rational::pow2(-i64::from(bits)).to_ratio_string(),
            };
            emit(pretty, &line, || {
                format!("norm = {}  (error <= 2^-{})", line.norm_approx, bits)
            });
            Ok(())
        }
        Command::Demo { which } => run_demo(which, &config, pretty),
    }
}

fn resolve_corpus(path: &Option<PathBuf>) -> Result<Vec<corpus::CorpusEntry>, String> {
    match path {
        Some(p) => corpus::load_file(p).map_err(|e| e.to_string()),
        None => corpus::resolve().map_err(|e| e.to_string()),
    }
}

fn run_demo(which: &DemoCmd, config: &Config, pretty: bool) -> Result<(), String> {
    match which {
        DemoCmd::HaltingNorm { stages } => {
            let stages = stages.or(config.stages).unwrap_or(8);
            let report = demos::halting_norm_demo(stages);
            for st in &report.stages {
                emit(pretty, st, || {
                    format!(
                        "stage {:>4}: entry {}  members {:?}",
                        st.stage, st.entry, st.members
                    )
                });
            }
            #[derive(Serialize)]
            struct Summary {
                monotone: bool,
            }
            emit(pretty, &Summary { monotone: report.monotone }, || {
                format!("monotone: {}", report.monotone)
            });
            Ok(())
        }
        DemoCmd::NormBoundRefuter { g } => {
            let report = demos::refuter_demo(g).map_err(|e| e.to_string())?;
            emit(pretty, &report, || {
                format!(
                    "witness c with ||O^cc|| = {} > {} = g(h(c,c))  (holds: {}; halt step {})",
                    report.operator_norm,
                    report.claimed_bound,
                    report.inequality_holds,
                    report.halting_step
                )
            });
            Ok(())
        }
        DemoCmd::Sqrt2Quasi { precision, corpus: corpus_path } => {
            let precision = precision.or(config.precision).unwrap_or(12);
            let entries = resolve_corpus(corpus_path)?;
            let report = demos::sqrt2_quasi_demo(&entries, precision).map_err(|e| e.to_string())?;
            for e in &report.entries {
                emit(pretty, e, || {
                    format!(
                        "{:<24} halts={:<5} zeta_limit={:<4} cheat={:?}({}) naive={:?}({})",
                        e.name,
                        e.halts_on_self,
                        e.zeta_limit,
                        e.cheating_verdict,
                        if e.cheating_correct { "ok" } else { "WRONG" },
                        e.naive_verdict,
                        if e.naive_correct { "ok" } else { "WRONG" },
                    )
                });
            }
            #[derive(Serialize)]
            struct Summary<'a> {
                precision: u32,
                separation_lower: &'a str,
                cheating_all_correct: bool,
                naive_witnesses: &'a [String],
            }
            let s = Summary {
                precision: report.precision,
                separation_lower: &report.separation_lower,
                cheating_all_correct: report.cheating_all_correct,
                naive_witnesses: &report.naive_witnesses,
            };
            emit(pretty, &s, || {
                format!(
                    "cheating oracle all correct: {}; naive oracle witnesses: {:?}",
                    s.cheating_all_correct, s.naive_witnesses
                )
            });
            Ok(())
        }
        DemoCmd::TotalNumberingDiagonal { digits } => {
            let digits = digits.or(config.digits).unwrap_or(10);
            let report = demos::total_numbering_diagonal_demo(digits).map_err(|e| e.to_string())?;
            for d in &report.digits {
                emit(pretty, d, || {
                    format!(
                        "position {:>2}: row limit {:<8} excluded digit {}",
                        d.position, d.row_limit, d.excluded_digit
                    )
                });
            }
            #[derive(Serialize)]
            struct Summary<'a> {
                partial_value: &'a str,
            }
            emit(pretty, &Summary { partial_value: &report.partial_value }, || {
                format!("b (partial) = {}", report.partial_value)
            });
            Ok(())
        }
        DemoCmd::RsPathology { stages, m } => {
            let stages = stages.or(config.stages.map(|s| s as usize)).unwrap_or(10);
            let report = demos::rs_pathology_demo(stages, *m).map_err(|e| e.to_string())?;
            for st in &report.stages {
                emit(pretty, st, || {
                    format!(
                        "j {:>3}: r {:<10} s {:<10} t {:<10} sum ok {}",
                        st.index, st.r_entry, st.s_entry, st.t_entry, st.sum_matches
                    )
                });
            }
            #[derive(Serialize)]
            struct Summary<'a> {
                r_norm: &'a str,
                s_norm: &'a str,
                all_sums_match: bool,
            }
            let s = Summary {
                r_norm: &report.r_norm,
                s_norm: &report.s_norm,
                all_sums_match: report.all_sums_match,
            };
            emit(pretty, &s, || {
                format!(
                    "||R|| = {}, ||S|| = {}, R+S = T entrywise: {}",
                    s.r_norm, s.s_norm, s.all_sums_match
                )
            });
            Ok(())
        }
        DemoCmd::PqPathology { stages } => {
            let stages = stages.or(config.stages.map(|s| s as usize)).unwrap_or(8);
            let report = demos::pq_pathology_demo(stages).map_err(|e| e.to_string())?;
            for st in &report.stages {
                emit(pretty, st, || {
                    format!(
                        "n {:>3}: theta {:<12} |e^(i theta)+1| = {} (err <= {})",
                        st.index, st.theta, st.value_approx, st.error_bound
                    )
                });
            }
            #[derive(Serialize)]
            struct Summary {
                nondecreasing: bool,
            }
            emit(pretty, &Summary { nondecreasing: report.nondecreasing }, || {
                format!("stage values nondecreasing: {}", report.nondecreasing)
            });
            Ok(())
        }
    }
}
