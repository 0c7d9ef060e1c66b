//! Decision engine for Σ-entailment, conservative extensions and
//! Σ-inseparability in the two-variable guarded fragment GF², together with
//! the bisimulation, satisfiability, model-checking and gadget machinery
//! needed to exercise it at desk scale.


pub mod acceptance;
pub mod automata;
pub mod bisim;
pub mod emptiness;
pub mod entailment;
pub mod gadgets;
pub mod game;



pub mod sat;
pub mod structures;
pub mod syntax;

use thiserror::Error as ThisError;

/// Errors across the whole engine. `Budget` maps to a dedicated CLI exit
/// code: exceeding a budget is an error, never a wrong answer.
#[derive(ThisError, Debug, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("guardedness violation: {0}")]
    Guardedness(String),
    #[error("arity mismatch for predicate {pred}: expected {expected}, got {got}")]
    Arity {
        pred: String,
        expected: usize,
        got: usize,
    },
    #[error("unknown predicate {0}")]
    UnknownPredicate(String),
    #[error("not a forest structure: {0}")]
    NotForest(String),
    #[error("input outside GF²: {0}")]
    NotGf2(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Resource budgets. Defaults can be overridden through the
/// `GF2CE_BUDGET_POSITIONS` and `GF2CE_BUDGET_TYPES` environment variables.
#[derive(Clone, Copy, Debug)]
pub struct Budget {
    /// Cap on game positions materialized during automaton emptiness.
    pub positions: usize,
    /// Cap on the number of one-variable closure formulas admitted by the
    /// type enumerator (the candidate space is exponential in this).
    pub type_formulas: usize,
    /// Cap on domain size for exhaustive extension search.
    pub extension_domain: usize,
}

impl Default for Budget {
    fn default() -> Budget {
        Budget {
            positions: 1 << 20,
            type_formulas: 24,
            extension_domain: 6,
        }
    }
}

impl Budget {
    /// Default budget with environment overrides applied.
    pub fn from_env() -> Budget {
        let mut b = Budget::default();
        if let Ok(v) = std::env::var("GF2CE_BUDGET_POSITIONS") {
            if let Ok(n) = v.parse() {
                b.positions = n;
            }
        }
        if let Ok(v) = std::env::var("GF2CE_BUDGET_TYPES") {
            if let Ok(n) = v.parse() {
                b.type_formulas = n;
            }
        }
        b
    }
}

pub use syntax::{closure, guarded_depth, normalize, parse, parse_gf2, print, signature_of};
pub use syntax::{ClosureSet, Formula, Quant, Signature, Var};
