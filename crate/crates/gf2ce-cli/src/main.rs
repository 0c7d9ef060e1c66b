//! Command-line front-end: every pipeline with machine-readable output.
//!
//! Exit codes: 0 decided/true path, 1 decided/false path, 2 error,
//! 3 budget exceeded.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use gf2ce_core::acceptance::{check_acceptance, RegularTree};
use gf2ce_core::automata::{ata_from_json, ata_to_json};
use gf2ce_core::bisim;
use gf2ce_core::emptiness::emptiness;
use gf2ce_core::entailment::{decide, witness_search, Mode, Problem};
use gf2ce_core::gadgets::{
    atm_to_gf2, rm_to_gf3, run_2rm, tiling_to_fo2, validate_output, AlternatingTM, GadgetOutput,
    TilingSystem, TwoRegisterMachine,
};
use gf2ce_core::sat::satisfiable;
use gf2ce_core::structures::{model_check, FiniteStructure};
use gf2ce_core::syntax::{normalize, parse, print, validate_gf2_sentence, Signature, Var};
use gf2ce_core::{Budget, Error};

#[derive(Parser)]
#[command(name = "gf2ce", about = "Decision engine for GF² conservative extensions")]
struct Cli {
    /// add a prose summary on standard error
    #[arg(long, global = true)]
    human: bool,
    /// include wall-clock timing in the stats (off keeps output byte-stable)
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// decide satisfiability of a GF² sentence file
    Sat { file: PathBuf },
    /// decide Σ-entailment, conservative extension or inseparability
    Decide(DecideArgs),
    /// search for a witness sentence certifying non-entailment
    Witness(WitnessArgs),
    /// bisimulation checks between two structures
    Bisim(BisimArgs),
    /// evaluate a sentence on a structure
    Modelcheck {
        #[arg(long)]
        structure: PathBuf,
        #[arg(long)]
        formula: PathBuf,
    },
    /// generate reduction gadgets
    Gadget {
        #[command(subcommand)]
        kind: GadgetKind,
    },
    /// automaton emptiness and membership
    Automaton {
        #[command(subcommand)]
        op: AutomatonOp,
    },
}

#[derive(Args)]
struct DecideArgs {
    #[arg(long)]
    phi1: PathBuf,
    #[arg(long)]
    phi2: PathBuf,
    /// comma separated predicate names; arities come from the sentences
    #[arg(long, default_value = "")]
    sigma: String,
    #[arg(long, value_enum, default_value = "entail")]
    mode: CliMode,
    /// when the answer is negative, also search for a witness sentence up
    /// to this guarded depth
    #[arg(long)]
    witness_depth: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CliMode {
    Entail,
    Ce,
    Insep,
}

#[derive(Args)]
struct WitnessArgs {
    #[arg(long)]
    phi1: PathBuf,
    #[arg(long)]
    phi2: PathBuf,
    #[arg(long, default_value = "")]
    sigma: String,
    #[arg(long, default_value_t = 2)]
    max_depth: usize,
    #[arg(long, default_value_t = 80)]
    max_size: usize,
}

#[derive(Args)]
struct BisimArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long, default_value = "")]
    sigma: String,
    /// elements to compare; defaults to the first element of each domain
    #[arg(long)]
    elem_a: Option<String>,
    #[arg(long)]
    elem_b: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    global: bool,
    #[arg(long)]
    delimited: bool,
    /// comma separated marked elements of the first structure
    #[arg(long, default_value = "")]
    markers: String,
}

#[derive(Subcommand)]
enum GadgetKind {
    /// two-register machine to GF³
    Rm {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// tiling system to FO²
    Tiling {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// alternating Turing machine plus input word to GF²
    Atm {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// input word: comma separated symbols
        #[arg(long)]
        word: String,
    },
}

#[derive(Subcommand)]
enum AutomatonOp {
    Empty {
        #[arg(long)]
        aut: PathBuf,
    },
    Member {
        #[arg(long)]
        aut: PathBuf,
        #[arg(long)]
        tree: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((value, code)) => {
            println!("{}", serde_json::to_string_pretty(&value).unwrap());
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Budget(_) => 3,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}

fn read_sentence(path: &Path) -> Result<gf2ce_core::Formula, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
    parse(&text)
}

fn read_structure(path: &Path) -> Result<FiniteStructure, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
    let s: FiniteStructure =
        serde_json::from_str(&text).map_err(|e| Error::Invalid(format!("structure json: {e}")))?;
    s.validate()?;
    Ok(s)
}

/// Σ from comma separated names; arities resolved against the sentences.
fn parse_sigma(csv: &str, refs: &[&gf2ce_core::Formula]) -> Result<Signature, Error> {
    let mut sig = Signature::new();
    let mut known = Signature::new();
    for f in refs {
        known = known.union(&gf2ce_core::signature_of(f));
    }
    for name in csv.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match known.preds.get(name) {
            Some(a) => sig.insert(name, *a),
            None => {
                return Err(Error::Invalid(format!(
                    "signature symbol {name} does not occur in the input sentences"
                )))
            }
        }
    }
    Ok(sig)
}

fn run(cli: &Cli) -> Result<(Value, u8), Error> {
    let budget = Budget::from_env();
    match &cli.command {
        Command::Sat { file } => {
            let f = read_sentence(file)?;
            validate_gf2_sentence(&f)?;
            let sat = satisfiable(&normalize(&f), &budget)?;
            if cli.human {
                eprintln!(
                    "{} is {}",
                    file.display(),
                    if sat { "satisfiable" } else { "unsatisfiable" }
                );
            }
            Ok((json!({ "satisfiable": sat }), u8::from(!sat)))
        }
        Command::Decide(args) => {
            let phi1 = read_sentence(&args.phi1)?;
            let phi2 = read_sentence(&args.phi2)?;
            let sigma = parse_sigma(&args.sigma, &[&phi1, &phi2])?;
            let mode = match args.mode {
                CliMode::Entail => Mode::Entailment,
                CliMode::Ce => Mode::ConservativeExtension,
                CliMode::Insep => Mode::Inseparability,
            };
            let p = Problem {
                phi1,
                phi2,
                sigma,
                mode,
            };
            let v = decide(&p, &budget)?;
            let mut witness_sentence = v.witness_sentence.clone().map(|f| print(&f));
            if !v.answer && witness_sentence.is_none() && mode == Mode::Entailment {
                if let Some(depth) = args.witness_depth {
                    if let Some(psi) = witness_search(&p, depth, 120, &budget)? {
                        witness_sentence = Some(print(&psi));
                    }
                }
            }
            let mode_name = match mode {
                Mode::Entailment => "entail",
                Mode::ConservativeExtension => "ce",
                Mode::Inseparability => "insep",
            };
            let mut stats = serde_json::to_value(&v.stats).unwrap();
            if !cli.timing {
                stats["millis"] = json!(0);
            }
            let out = json!({
                "mode": mode_name,
                "answer": v.answer,
                "sigma_reduced": v.sigma_reduced,
                "witness_tree": v.witness_tree,
                "witness_structure": v.witness_structure,
                "witness_sentence": witness_sentence,
                "stats": stats,
            });
            if cli.human {
                eprintln!("{}: {}", mode_name, if v.answer { "holds" } else { "fails" });
            }
            Ok((out, u8::from(!v.answer)))
        }
        Command::Witness(args) => {
            let phi1 = read_sentence(&args.phi1)?;
            let phi2 = read_sentence(&args.phi2)?;
            let sigma = parse_sigma(&args.sigma, &[&phi1, &phi2])?;
            let p = Problem {
                phi1,
                phi2,
                sigma,
                mode: Mode::Entailment,
            };
            let w = witness_search(&p, args.max_depth, args.max_size, &budget)?;
            let found = w.is_some();
            let out = json!({ "witness": w.map(|f| print(&f)) });
            if cli.human {
                eprintln!("witness {}", if found { "found" } else { "not found" });
            }
            Ok((out, u8::from(!found)))
        }
        Command::Bisim(args) => {
            let sa = read_structure(&args.a)?;
            let sb = read_structure(&args.b)?;
            let mut sigma = Signature::new();
            let known = sa.signature().union(&sb.signature());
            for name in args
                .sigma
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
            {
                match known.preds.get(name) {
                    Some(a) => sigma.insert(name, *a),
                    None => {
                        return Err(Error::Invalid(format!(
                            "signature symbol {name} not in the structures"
                        )))
                    }
                }
            }
            if sigma.preds.is_empty() {
                sigma = known;
            }
            let result = if args.global {
                let mode = match args.k {
                    Some(k) => bisim::GlobalMode::Bounded(k),
                    None => bisim::GlobalMode::Full,
                };
                bisim::globally_bisimilar(&sa, &sb, &sigma, mode)?
            } else {
                let ea = args
                    .elem_a
                    .clone()
                    .or_else(|| sa.domain.first().cloned())
                    .ok_or_else(|| Error::Invalid("empty first domain".into()))?;
                let eb = args
                    .elem_b
                    .clone()
                    .or_else(|| sb.domain.first().cloned())
                    .ok_or_else(|| Error::Invalid("empty second domain".into()))?;
                if args.delimited {
                    let markers: BTreeSet<String> = args
                        .markers
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(String::from)
                        .collect();
                    bisim::delimited_bisimilar(&sa, &ea, &markers, &sb, &eb, &sigma)?
                } else if let Some(k) = args.k {
                    bisim::k_bisimilar(&sa, &ea, &sb, &eb, &sigma, k)?
                } else {
                    bisim::bisimilar(&sa, &ea, &sb, &eb, &sigma)?
                }
            };
            if cli.human {
                eprintln!("bisimilar: {result}");
            }
            Ok((json!({ "bisimilar": result }), u8::from(!result)))
        }
        Command::Modelcheck { structure, formula } => {
            let s = read_structure(structure)?;
            let f = read_sentence(formula)?;
            let holds = if f.is_sentence() {
                model_check(&s, &normalize(&f), &BTreeMap::new())?
            } else {
                // free variables default to the least element
                let mut env: BTreeMap<Var, String> = BTreeMap::new();
                let least = s
                    .domain
                    .first()
                    .cloned()
                    .ok_or_else(|| Error::Invalid("empty domain".into()))?;
                for v in f.free_vars() {
                    env.insert(v, least.clone());
                }
                model_check(&s, &normalize(&f), &env)?
            };
            if cli.human {
                eprintln!("holds: {holds}");
            }
            Ok((json!({ "holds": holds }), u8::from(!holds)))
        }
        Command::Gadget { kind } => {
            let (out_dir, output) = match kind {
                GadgetKind::Rm { input, out } => {
                    let text = std::fs::read_to_string(input)
                        .map_err(|e| Error::Invalid(format!("{e}")))?;
                    let m: TwoRegisterMachine = serde_json::from_str(&text)
                        .map_err(|e| Error::Invalid(format!("machine json: {e}")))?;
                    let g = rm_to_gf3(&m)?;
                    let _ = run_2rm(&m, 64)?;
                    (out.clone(), g)
                }
                GadgetKind::Tiling { input, out } => {
                    let text = std::fs::read_to_string(input)
                        .map_err(|e| Error::Invalid(format!("{e}")))?;
                    let d: TilingSystem = serde_json::from_str(&text)
                        .map_err(|e| Error::Invalid(format!("tiling json: {e}")))?;
                    (out.clone(), tiling_to_fo2(&d)?)
                }
                GadgetKind::Atm { input, out, word } => {
                    let text = std::fs::read_to_string(input)
                        .map_err(|e| Error::Invalid(format!("{e}")))?;
                    let m: AlternatingTM = serde_json::from_str(&text)
                        .map_err(|e| Error::Invalid(format!("machine json: {e}")))?;
                    let w: Vec<String> = word
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(String::from)
                        .collect();
                    (out.clone(), atm_to_gf2(&m, &w)?)
                }
            };
            write_gadget(&out_dir, &output, cli.human)
        }
        Command::Automaton { op } => match op {
            AutomatonOp::Empty { aut } => {
                let text =
                    std::fs::read_to_string(aut).map_err(|e| Error::Invalid(format!("{e}")))?;
                let v: Value = serde_json::from_str(&text)
                    .map_err(|e| Error::Invalid(format!("automaton json: {e}")))?;
                let a = ata_from_json(&v)?;
                let (empty, witness) = emptiness(&a, &budget)?;
                if cli.human {
                    eprintln!("empty: {empty}");
                }
                Ok((
                    json!({ "empty": empty, "witness": witness }),
                    u8::from(!empty),
                ))
            }
            AutomatonOp::Member { aut, tree } => {
                let atext =
                    std::fs::read_to_string(aut).map_err(|e| Error::Invalid(format!("{e}")))?;
                let av: Value = serde_json::from_str(&atext)
                    .map_err(|e| Error::Invalid(format!("automaton json: {e}")))?;
                let a = ata_from_json(&av)?;
                let ttext =
                    std::fs::read_to_string(tree).map_err(|e| Error::Invalid(format!("{e}")))?;
                let t: RegularTree = serde_json::from_str(&ttext)
                    .map_err(|e| Error::Invalid(format!("tree json: {e}")))?;
                let accepts = check_acceptance(&a, &t, &budget)?;
                if cli.human {
                    eprintln!("accepts: {accepts}");
                }
                let _ = ata_to_json(&a);
                Ok((json!({ "accepts": accepts }), u8::from(!accepts)))
            }
        },
    }
}

fn write_gadget(dir: &Path, g: &GadgetOutput, human: bool) -> Result<(Value, u8), Error> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Invalid(format!("{e}")))?;
    let p1 = dir.join("phi1.gf");
    let p2 = dir.join("phi2.gf");
    std::fs::write(&p1, print(&g.phi1) + "\n").map_err(|e| Error::Invalid(format!("{e}")))?;
    std::fs::write(&p2, print(&g.phi2) + "\n").map_err(|e| Error::Invalid(format!("{e}")))?;
    let report = validate_output(g);
    let report_json = serde_json::to_value(&report).unwrap();
    std::fs::write(
        dir.join("report.json"),
        serde_json::to_string_pretty(&report_json).unwrap() + "\n",
    )
    .map_err(|e| Error::Invalid(format!("{e}")))?;
    // the emitted files must parse back to the same formulas
    let back1 = parse(&std::fs::read_to_string(&p1).unwrap())?;
    let back2 = parse(&std::fs::read_to_string(&p2).unwrap())?;
    if back1 != g.phi1 || back2 != g.phi2 {
        return Err(Error::Invalid("emitted formulas do not round-trip".into()));
    }
    if human {
        eprintln!("wrote {} and {}", p1.display(), p2.display());
    }
    Ok((
        json!({
            "phi1": p1,
            "phi2": p2,
            "sigma": g.sigma.preds,
            "report": report_json,
        }),
        0,
    ))
}
