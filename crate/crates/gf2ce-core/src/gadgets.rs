//! Generators for the three reductions that transport machine and tiling
//! problems into formula pairs: two-register machines into GF³,
//! rectangle tilings into FO², and exponentially space bounded alternating
//! Turing machines into GF². Outputs are export artifacts; only the GF²
//! generator's output may enter the decision pipeline.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::structures::FiniteStructure;
use crate::syntax::{Formula, Signature, Var, X, Y, Z};
use crate::{Error, Result};

/// Formula pair plus the signature of the first sentence, with the
/// top-level conjunct groups kept separate for validation.
#[derive(Clone, Debug)]
pub struct GadgetOutput {
    pub phi1: Formula,
    pub phi2: Formula,
    pub sigma: Signature,
    pub phi1_groups: Vec<Formula>,
    pub phi2_groups: Vec<Formula>,
}


/// Printed-form canonicalization: constructed formulas re-read through the
/// parser so that emitted files round-trip structurally.
fn reparse(f: &Formula) -> Formula {
    crate::syntax::parse(&crate::syntax::print(f)).expect("printed formulas parse")
}

fn canonical_output(
    phi1_groups: Vec<Formula>,
    phi2_groups: Vec<Formula>,
    sigma: Signature,
) -> GadgetOutput {
    let phi1_groups: Vec<Formula> = phi1_groups.iter().map(reparse).collect();
    let phi2_groups: Vec<Formula> = phi2_groups.iter().map(reparse).collect();
    let phi1 = reparse(&Formula::conj(phi1_groups.clone()));
    let phi2 = reparse(&Formula::conj(phi2_groups.clone()));
    GadgetOutput {
        phi1,
        phi2,
        sigma,
        phi1_groups,
        phi2_groups,
    }
}

// ---------------------------------------------------------------------------
// Two-register machines
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Instr {
    /// increment register p, go to the state
    Inc(u8, usize),
    /// on zero go to the first state; otherwise decrement and go to the
    /// second
    Dec(u8, usize, usize),
}

/// A deterministic two-register machine with states q0..q_l; the last
/// state halts and instruction i belongs to state qi.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TwoRegisterMachine {
    pub instructions: Vec<Instr>,
}

impl TwoRegisterMachine {
    pub fn state_count(&self) -> usize {
        self.instructions.len() + 1
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.instructions.len();
        if l < 1 {
            return Err(Error::Invalid("a machine needs at least one instruction".into()));
        }
        for (i, ins) in self.instructions.iter().enumerate() {
            match ins {
                Instr::Inc(p, j) => {
                    if *p > 1 || *j > l {
                        return Err(Error::Invalid(format!("instruction {i} out of range")));
                    }
                }
                Instr::Dec(p, j, k) => {
                    if *p > 1 || *j > l || *k > l {
                        return Err(Error::Invalid(format!("instruction {i} out of range")));
                    }
                    if j == k {
                        return Err(Error::Invalid(format!(
                            "instruction {i}: decrement branches must differ"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// One configuration of a 2RM run.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub struct RmConfig {
    pub state: usize,
    pub r0: u64,
    pub r1: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RmTrace {
    pub configs: Vec<RmConfig>,
    pub halted: bool,
}

/// The unique computation from (q0, 0, 0), truncated at `bound` steps.
pub fn run_2rm(m: &TwoRegisterMachine, bound: usize) -> Result<RmTrace> {
    m.validate()?;
    if bound < 1 {
        return Err(Error::Invalid("bound must be at least 1".into()));
    }
    let halt = m.instructions.len();
    let mut cfg = RmConfig {
        state: 0,
        r0: 0,
        r1: 0,
    };
    let mut configs = vec![cfg];
    for _ in 0..bound {
        if cfg.state == halt {
            return Ok(RmTrace {
                configs,
                halted: true,
            });
        }
        let regs = [cfg.r0, cfg.r1];
        cfg = match m.instructions[cfg.state] {
            Instr::Inc(p, j) => {
                let mut r = regs;
                r[p as usize] += 1;
                RmConfig {
                    state: j,
                    r0: r[0],
                    r1: r[1],
                }
            }
            Instr::Dec(p, j, k) => {
                if regs[p as usize] == 0 {
                    RmConfig {
                        state: j,
                        r0: cfg.r0,
                        r1: cfg.r1,
                    }
                } else {
                    let mut r = regs;
                    r[p as usize] -= 1;
                    RmConfig {
                        state: k,
                        r0: r[0],
                        r1: r[1],
                    }
                }
            }
        };
        configs.push(cfg);
    }
    let halted = cfg.state == halt;
    Ok(RmTrace { configs, halted })
}

fn qname(i: usize) -> String {
    format!("q{i}")
}

fn reg_name(p: u8) -> String {
    format!("R{p}")
}

/// The GF³ reduction: the machine halts iff φ₁ ∧ φ₂ is not a conservative
/// extension of φ₁. φ₁ is a conjunction of GF² sentences over Σ; φ₂ uses
/// defect predicates with ternary guards.
pub fn rm_to_gf3(m: &TwoRegisterMachine) -> Result<GadgetOutput> {
    m.validate()?;
    let l = m.instructions.len();
    let mut sigma = Signature::new();
    sigma.insert("N", 2);
    sigma.insert("R0", 2);
    sigma.insert("R1", 2);
    sigma.insert("S", 1);
    for i in 0..=l {
        sigma.insert(&qname(i), 1);
    }

    let has_reg = |p: u8| {
        // exists y. Rp(x,y)
        Formula::exists(Y, Formula::atom(&reg_name(p), &[X, Y]), Formula::True)
    };

    // start group
    let start = Formula::and(
        Formula::exists(X, Formula::atom("S", &[X]), Formula::True),
        Formula::forall(
            X,
            Formula::atom("S", &[X]),
            Formula::conj(vec![
                Formula::atom(&qname(0), &[X]),
                Formula::not(has_reg(0)),
                Formula::not(has_reg(1)),
            ]),
        ),
    );
    let mut phi1_groups = vec![start];

    let step_to = |j: usize| {
        Formula::exists(
            Y,
            Formula::atom("N", &[X, Y]),
            Formula::atom(&qname(j), &[Y]),
        )
    };
    for (i, ins) in m.instructions.iter().enumerate() {
        match ins {
            Instr::Inc(_p, j) => {
                phi1_groups.push(Formula::forall(
                    X,
                    Formula::atom(&qname(i), &[X]),
                    step_to(*j),
                ));
            }
            Instr::Dec(p, j, k) => {
                phi1_groups.push(Formula::forall(
                    X,
                    Formula::atom(&qname(i), &[X]),
                    Formula::implies(Formula::not(has_reg(*p)), step_to(*j)),
                ));
                phi1_groups.push(Formula::forall(
                    X,
                    Formula::atom(&qname(i), &[X]),
                    Formula::implies(has_reg(*p), step_to(*k)),
                ));
            }
        }
    }
    // φ₂: nontermination or a register-update defect
    let nonterm = Formula::and(
        Formula::exists(X, Formula::atom("S", &[X]), Formula::atom("P", &[X])),
        Formula::forall(
            X,
            Formula::atom("P", &[X]),
            Formula::exists(Y, Formula::atom("N", &[X, Y]), Formula::atom("P", &[Y])),
        ),
    );

    let defect_kind = |kind: &str, p: u8| format!("D{kind}{p}");
    let mut defect_cases: Vec<Formula> = Vec::new();
    for (i, ins) in m.instructions.iter().enumerate() {
        match ins {
            Instr::Inc(p, j) => {
                defect_cases.push(Formula::conj(vec![
                    Formula::atom(&qname(i), &[X]),
                    Formula::atom(&qname(*j), &[Y]),
                    Formula::or(
                        Formula::atom(&defect_kind("p", *p), &[X, Y]),
                        Formula::atom(&defect_kind("e", 1 - *p), &[X, Y]),
                    ),
                ]));
            }
            Instr::Dec(p, j, k) => {
                defect_cases.push(Formula::conj(vec![
                    Formula::atom(&qname(i), &[X]),
                    Formula::atom(&qname(*k), &[Y]),
                    Formula::or(
                        Formula::atom(&defect_kind("m", *p), &[X, Y]),
                        Formula::atom(&defect_kind("e", 1 - *p), &[X, Y]),
                    ),
                ]));
                defect_cases.push(Formula::conj(vec![
                    Formula::atom(&qname(i), &[X]),
                    Formula::atom(&qname(*j), &[Y]),
                    Formula::or(
                        Formula::atom(&defect_kind("e", *p), &[X, Y]),
                        Formula::atom(&defect_kind("e", 1 - *p), &[X, Y]),
                    ),
                ]));
            }
        }
    }
    let pick_defect = Formula::exists_unguarded(
        &[X, Y],
        Formula::and(Formula::atom("N", &[X, Y]), Formula::disj(defect_cases)),
    );

    // recursion schema for the defect predicates on register paths; the
    // ternary H guards make the existentials guarded in GF³
    let reg_succ = |from: Var, p: u8| {
        Formula::exists(
            Z,
            Formula::atom(&reg_name(p), &[from, Z]),
            Formula::True,
        )
    };
    let path_len_ge2 = |from: Var, p: u8| {
        // some Rp-successor that has another Rp-successor
        Formula::exists(
            Z,
            Formula::atom(&reg_name(p), &[from, Z]),
            Formula::exists(X, Formula::atom(&reg_name(p), &[Z, X]), Formula::True),
        )
    };
    let recurse = |kind: &str, p: u8| {
        // ∃z (H1 x y z ∧ Rp x z ∧ ∃x (H2 x z y ∧ Rp y x ∧ D z x))
        let h1 = format!("H{kind}1");
        let h2 = format!("H{kind}2");
        Formula::exists(
            Z,
            Formula::atom(&h1, &[X, Y, Z]),
            Formula::and(
                Formula::atom(&reg_name(p), &[X, Z]),
                Formula::exists(
                    X,
                    Formula::atom(&h2, &[X, Z, Y]),
                    Formula::and(
                        Formula::atom(&reg_name(p), &[Y, X]),
                        Formula::atom(&defect_kind(kind, p), &[Z, X]),
                    ),
                ),
            ),
        )
    };

    let mut behavior: Vec<Formula> = Vec::new();
    for p in [0u8, 1u8] {
        // increment defect: target path is not source + 1
        behavior.push(Formula::forall_unguarded(
            &[X, Y],
            Formula::implies(
                Formula::atom(&defect_kind("p", p), &[X, Y]),
                Formula::disj(vec![
                    Formula::not(reg_succ(Y, p)),
                    Formula::and(Formula::not(reg_succ(X, p)), path_len_ge2(Y, p)),
                    recurse("p", p),
                ]),
            ),
        ));
        // decrement defect: target path is not source - 1
        behavior.push(Formula::forall_unguarded(
            &[X, Y],
            Formula::implies(
                Formula::atom(&defect_kind("m", p), &[X, Y]),
                Formula::disj(vec![
                    Formula::not(reg_succ(X, p)),
                    Formula::and(Formula::not(reg_succ(Y, p)), path_len_ge2(X, p)),
                    recurse("m", p),
                ]),
            ),
        ));
        // preservation defect: paths differ
        behavior.push(Formula::forall_unguarded(
            &[X, Y],
            Formula::implies(
                Formula::atom(&defect_kind("e", p), &[X, Y]),
                Formula::disj(vec![
                    Formula::and(Formula::not(reg_succ(Y, p)), reg_succ(X, p)),
                    Formula::and(Formula::not(reg_succ(X, p)), reg_succ(Y, p)),
                    recurse("e", p),
                ]),
            ),
        ));
    }

    let phi2_groups = vec![Formula::or(
        nonterm,
        Formula::conj(std::iter::once(pick_defect).chain(behavior).collect()),
    )];
    Ok(canonical_output(phi1_groups, phi2_groups, sigma))
}

/// The explicit structure describing a halting computation: an N-path of
/// configurations with register paths hanging off each one.
pub fn rm_witness_structure(m: &TwoRegisterMachine, bound: usize) -> Result<FiniteStructure> {
    let trace = run_2rm(m, bound)?;
    if !trace.halted {
        return Err(Error::Invalid(
            "machine does not halt within the bound".into(),
        ));
    }
    let k = trace.configs.len();
    let mut names: Vec<String> = (0..k).map(|i| format!("c{i}")).collect();
    let mut reg_paths: Vec<Vec<(u8, usize, Vec<String>)>> = Vec::new();
    for (i, cfg) in trace.configs.iter().enumerate() {
        let mut paths = Vec::new();
        for (p, len) in [(0u8, cfg.r0), (1u8, cfg.r1)] {
            let path: Vec<String> = (0..len).map(|j| format!("r{p}_{i}_{j}")).collect();
            names.extend(path.iter().cloned());
            paths.push((p, i, path));
        }
        reg_paths.push(paths);
    }
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let mut s = FiniteStructure::new(&refs);
    s.declare_binary("N");
    s.declare_binary("R0");
    s.declare_binary("R1");
    s.declare_unary("S");
    for i in 0..m.state_count() {
        s.declare_unary(&qname(i));
    }
    s.add_unary("S", "c0");
    for (i, cfg) in trace.configs.iter().enumerate() {
        s.add_unary(&qname(cfg.state), &format!("c{i}"));
        if i + 1 < k {
            s.add_binary("N", &format!("c{i}"), &format!("c{}", i + 1));
        }
    }
    for paths in &reg_paths {
        for (p, i, path) in paths {
            let pred = reg_name(*p);
            let mut prev = format!("c{i}");
            for node in path {
                s.add_binary(&pred, &prev, node);
                prev = node.clone();
            }
        }
    }
    Ok(s)
}

// ---------------------------------------------------------------------------
// Tiling systems
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TilingSystem {
    pub tiles: Vec<String>,
    pub horizontal: Vec<(String, String)>,
    pub vertical: Vec<(String, String)>,
    pub right: Vec<String>,
    pub left: Vec<String>,
    pub top: Vec<String>,
    pub bottom: Vec<String>,
}

impl TilingSystem {
    pub fn validate(&self) -> Result<()> {
        if self.tiles.is_empty() {
            return Err(Error::Invalid("a tiling system needs tiles".into()));
        }
        let ts: BTreeSet<&String> = self.tiles.iter().collect();
        for t in self
            .right
            .iter()
            .chain(&self.left)
            .chain(&self.top)
            .chain(&self.bottom)
        {
            if !ts.contains(t) {
                return Err(Error::Invalid(format!("{t} is not a tile")));
            }
        }
        for (a, b) in self.horizontal.iter().chain(&self.vertical) {
            if !ts.contains(a) || !ts.contains(b) {
                return Err(Error::Invalid("matching relation mentions a non-tile".into()));
            }
        }
        Ok(())
    }
}

fn tile_pred(t: &str) -> String {
    format!("T_{t}")
}

/// The FO² reduction: the system has a solution iff φ₁ ∧ φ₂ is not a
/// conservative extension of φ₁. Export only.
pub fn tiling_to_fo2(d: &TilingSystem) -> Result<GadgetOutput> {
    d.validate()?;
    let mut sigma = Signature::new();
    for p in ["Rh", "Rv", "Sh", "Sv"] {
        sigma.insert(p, 2);
    }
    for p in ["G", "O", "Bright", "Bleft", "Bup", "Bdown"] {
        sigma.insert(p, 1);
    }
    for t in &d.tiles {
        sigma.insert(&tile_pred(t), 1);
    }

    let g = |v: Var| Formula::atom("G", &[v]);

    // 1: unique tiles and matching conditions
    let unique = Formula::forall(
        X,
        g(X),
        Formula::disj(
            d.tiles
                .iter()
                .map(|t| {
                    Formula::conj(
                        std::iter::once(Formula::atom(&tile_pred(t), &[X]))
                            .chain(d.tiles.iter().filter(|u| *u != t).map(|u| {
                                Formula::not(Formula::atom(&tile_pred(u), &[X]))
                            }))
                            .collect(),
                    )
                })
                .collect(),
        ),
    );
    let matching = Formula::forall(
        X,
        g(X),
        Formula::conj(
            d.tiles
                .iter()
                .map(|t| {
                    let hsucc = Formula::disj(
                        d.horizontal
                            .iter()
                            .filter(|(a, _)| a == t)
                            .map(|(_, b)| {
                                Formula::forall(
                                    Y,
                                    Formula::atom("Rh", &[X, Y]),
                                    Formula::atom(&tile_pred(b), &[Y]),
                                )
                            })
                            .collect(),
                    );
                    let vsucc = Formula::disj(
                        d.vertical
                            .iter()
                            .filter(|(a, _)| a == t)
                            .map(|(_, b)| {
                                Formula::forall(
                                    Y,
                                    Formula::atom("Rv", &[X, Y]),
                                    Formula::atom(&tile_pred(b), &[Y]),
                                )
                            })
                            .collect(),
                    );
                    Formula::implies(
                        Formula::atom(&tile_pred(t), &[X]),
                        Formula::and(hsucc, vsucc),
                    )
                })
                .collect(),
        ),
    );
    let group1 = Formula::and(unique, matching);

    // 2: border markers, one pair of sentences per border
    let border = |b: &str, out_rel: &str, incoming: bool, keep_rel: &str| {
        let edge_absent = if incoming {
            Formula::not(Formula::exists(
                Y,
                Formula::atom(out_rel, &[Y, X]),
                Formula::True,
            ))
        } else {
            Formula::not(Formula::exists(
                Y,
                Formula::atom(out_rel, &[X, Y]),
                Formula::True,
            ))
        };
        let keep = Formula::and(
            Formula::forall(
                Y,
                Formula::atom(keep_rel, &[X, Y]),
                Formula::atom(b, &[Y]),
            ),
            Formula::forall(
                Y,
                Formula::atom(keep_rel, &[Y, X]),
                Formula::atom(b, &[Y]),
            ),
        );
        let present = Formula::forall_unguarded(
            &[X],
            Formula::implies(
                Formula::and(g(X), Formula::atom(b, &[X])),
                Formula::and(edge_absent, keep),
            ),
        );
        let absent = Formula::forall_unguarded(
            &[X],
            Formula::implies(
                Formula::and(g(X), Formula::not(Formula::atom(b, &[X]))),
                if incoming {
                    Formula::exists(Y, Formula::atom(out_rel, &[Y, X]), Formula::True)
                } else {
                    Formula::exists(Y, Formula::atom(out_rel, &[X, Y]), Formula::True)
                },
            ),
        );
        Formula::and(present, absent)
    };
    let group2 = Formula::conj(vec![
        border("Bright", "Rh", false, "Rv"),
        border("Bleft", "Rh", true, "Rv"),
        border("Bup", "Rv", false, "Rh"),
        border("Bdown", "Rv", true, "Rh"),
    ]);

    // 3: a grid origin
    let group3 = Formula::exists(
        X,
        Formula::atom("O", &[X]),
        Formula::and(Formula::atom("Bleft", &[X]), Formula::atom("Bdown", &[X])),
    );

    // 4: grid closure
    let group4 = Formula::conj(vec![
        Formula::forall(X, Formula::atom("O", &[X]), g(X)),
        Formula::forall(
            X,
            g(X),
            Formula::forall(Y, Formula::atom("Rh", &[X, Y]), g(Y)),
        ),
        Formula::forall(
            X,
            g(X),
            Formula::forall(Y, Formula::atom("Rv", &[X, Y]), g(Y)),
        ),
    ]);

    // 5: border tiles
    let border_tiles = |b: &str, allowed: &[String]| {
        Formula::forall(
            X,
            Formula::atom(b, &[X]),
            Formula::disj(
                allowed
                    .iter()
                    .map(|t| Formula::atom(&tile_pred(t), &[X]))
                    .collect(),
            ),
        )
    };
    let group5 = Formula::conj(vec![
        border_tiles("Bright", &d.right),
        border_tiles("Bleft", &d.left),
        border_tiles("Bup", &d.top),
        border_tiles("Bdown", &d.bottom),
    ]);

    // 6: Sh and Sv occur through a tautology
    let taut = |p: &str| {
        Formula::forall_unguarded(
            &[X, Y],
            Formula::implies(Formula::atom(p, &[X, Y]), Formula::atom(p, &[X, Y])),
        )
    };
    let group6 = Formula::and(taut("Sh"), taut("Sv"));

    let phi1_groups = vec![group1, group2, group3, group4, group5, group6];

    // φ₂: Q propagation to a defect
    let defect = Formula::and(
        Formula::exists(
            Y,
            Formula::atom("Rh", &[X, Y]),
            Formula::forall(X, Formula::atom("Rv", &[Y, X]), Formula::atom("P", &[X])),
        ),
        Formula::exists(
            Y,
            Formula::atom("Rv", &[X, Y]),
            Formula::forall(
                X,
                Formula::atom("Rh", &[Y, X]),
                Formula::not(Formula::atom("P", &[X])),
            ),
        ),
    );
    let phi2_groups = vec![
        Formula::exists(X, Formula::atom("O", &[X]), Formula::atom("Q", &[X])),
        Formula::forall(
            X,
            Formula::atom("Q", &[X]),
            Formula::disj(vec![
                Formula::exists(Y, Formula::atom("Rh", &[X, Y]), Formula::atom("Q", &[Y])),
                Formula::exists(Y, Formula::atom("Rv", &[X, Y]), Formula::atom("Q", &[Y])),
                defect,
            ]),
        ),
    ];
    Ok(canonical_output(phi1_groups, phi2_groups, sigma))
}

// ---------------------------------------------------------------------------
// Alternating Turing machines
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AtmTransition {
    pub state: String,
    pub write: String,
    /// 'L' or 'R'
    pub movement: char,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlternatingTM {
    pub existential: Vec<String>,
    pub universal: Vec<String>,
    pub accept: String,
    pub reject: String,
    pub start: String,
    pub input_alphabet: Vec<String>,
    pub work_alphabet: Vec<String>,
    pub blank: String,
    /// ordered transition pairs per (state, symbol)
    pub delta: Vec<((String, String), (AtmTransition, AtmTransition))>,
}

impl AlternatingTM {
    pub fn states(&self) -> Vec<String> {
        let mut qs: Vec<String> = self
            .existential
            .iter()
            .chain(&self.universal)
            .cloned()
            .collect();
        qs.push(self.accept.clone());
        qs.push(self.reject.clone());
        qs.sort();
        qs.dedup();
        qs
    }

    pub fn validate(&self) -> Result<()> {
        if !self.existential.contains(&self.start) {
            return Err(Error::Invalid("the start state must be existential".into()));
        }
        if !self.work_alphabet.contains(&self.blank) {
            return Err(Error::Invalid("the blank must be a work symbol".into()));
        }
        for a in &self.input_alphabet {
            if !self.work_alphabet.contains(a) {
                return Err(Error::Invalid(format!("{a} is not a work symbol")));
            }
        }
        let nonhalting: BTreeSet<&String> =
            self.existential.iter().chain(&self.universal).collect();
        for ((q, a), _) in &self.delta {
            if q == &self.accept || q == &self.reject {
                return Err(Error::Invalid(
                    "halting states must have no transitions".into(),
                ));
            }
            if !nonhalting.contains(q) || !self.work_alphabet.contains(a) {
                return Err(Error::Invalid(format!("bad transition source ({q},{a})")));
            }
        }
        for q in nonhalting {
            for a in &self.work_alphabet {
                let present = self
                    .delta
                    .iter()
                    .filter(|((s, b), _)| s == q && b == a)
                    .count();
                if present != 1 {
                    return Err(Error::Invalid(format!(
                        "state {q} and symbol {a} need exactly one ordered transition pair"
                    )));
                }
            }
        }
        Ok(())
    }

    fn pair(&self, q: &str, a: &str) -> &(AtmTransition, AtmTransition) {
        &self
            .delta
            .iter()
            .find(|((s, b), _)| s == q && b == a)
            .unwrap()
            .1
    }
}

fn sym(pred: &str, parts: &[&str]) -> String {
    let mut s = pred.to_string();
    for p in parts {
        s.push('_');
        s.push_str(p);
    }
    s
}

struct Counter {
    bits: usize,
    prefix: &'static str,
}

impl Counter {
    fn bit(&self, j: usize, v: Var) -> Formula {
        Formula::atom(&format!("{}{}", self.prefix, j), &[v])
    }

    fn equals(&self, i: u64, v: Var) -> Formula {
        Formula::conj(
            (0..self.bits)
                .map(|j| {
                    if i >> j & 1 == 1 {
                        self.bit(j, v)
                    } else {
                        Formula::not(self.bit(j, v))
                    }
                })
                .collect(),
        )
    }

    fn less_than(&self, i: u64, v: Var) -> Formula {
        // some bit where the value has 0 and i has 1, higher bits agree
        let mut cases = Vec::new();
        for j in 0..self.bits {
            if i >> j & 1 == 1 {
                let mut conj = vec![Formula::not(self.bit(j, v))];
                for k in (j + 1)..self.bits {
                    if i >> k & 1 == 1 {
                        conj.push(self.bit(k, v));
                    } else {
                        conj.push(Formula::not(self.bit(k, v)));
                    }
                }
                cases.push(Formula::conj(conj));
            }
        }
        Formula::disj(cases)
    }

    fn at_least(&self, i: u64, v: Var) -> Formula {
        Formula::not(self.less_than(i, v))
    }

    fn increment(&self, from: Var, to: Var) -> Formula {
        // ripple increment modulo 2^bits
        let mut cases = Vec::new();
        for j in 0..self.bits {
            let mut conj = Vec::new();
            for k in 0..j {
                conj.push(self.bit(k, from));
                conj.push(Formula::not(self.bit(k, to)));
            }
            conj.push(Formula::not(self.bit(j, from)));
            conj.push(self.bit(j, to));
            for k in (j + 1)..self.bits {
                let same = Formula::or(
                    Formula::and(self.bit(k, from), self.bit(k, to)),
                    Formula::and(
                        Formula::not(self.bit(k, from)),
                        Formula::not(self.bit(k, to)),
                    ),
                );
                conj.push(same);
            }
            cases.push(Formula::conj(conj));
        }
        // wrap around
        let mut wrap = Vec::new();
        for k in 0..self.bits {
            wrap.push(self.bit(k, from));
            wrap.push(Formula::not(self.bit(k, to)));
        }
        cases.push(Formula::conj(wrap));
        Formula::disj(cases)
    }
}

/// The GF² reduction from exponentially space bounded ATMs: the machine
/// accepts the word iff φ₁ ∧ φ₂ is not a conservative extension of φ₁.
pub fn atm_to_gf2(m: &AlternatingTM, word: &[String]) -> Result<GadgetOutput> {
    m.validate()?;
    let n = word.len();
    if n == 0 {
        return Err(Error::Invalid("the input word must be nonempty".into()));
    }
    for a in word {
        if !m.input_alphabet.contains(a) {
            return Err(Error::Invalid(format!("{a} is not an input symbol")));
        }
    }
    let c = Counter {
        bits: n,
        prefix: "C",
    };
    let cp = Counter {
        bits: n,
        prefix: "Cp",
    };
    let full = (1u64 << n) - 1;

    // symbol inventory: α ranges over Γ ∪ (Q × Γ)
    let mut alphas: Vec<(String, Option<String>)> = Vec::new();
    for a in &m.work_alphabet {
        alphas.push((a.clone(), None));
    }
    for q in m.states() {
        for a in &m.work_alphabet {
            alphas.push((a.clone(), Some(q.clone())));
        }
    }
    let s_of = |alpha: &(String, Option<String>)| match &alpha.1 {
        None => sym("S", &[&alpha.0]),
        Some(q) => sym("S", &[q, &alpha.0]),
    };
    let sp_of = |alpha: &(String, Option<String>)| match &alpha.1 {
        None => sym("Sp", &[&alpha.0]),
        Some(q) => sym("Sp", &[q, &alpha.0]),
    };
    let y_pt = |side: &str, t: &AtmTransition| {
        sym(
            &format!("Y{side}"),
            &[&t.state, &t.write, &t.movement.to_string()],
        )
    };
    let y_t = |t: &AtmTransition| sym("Y", &[&t.state, &t.write, &t.movement.to_string()]);
    let z_of = |alpha: &(String, Option<String>)| match &alpha.1 {
        None => sym("Z", &[&alpha.0]),
        Some(q) => sym("Z", &[q, &alpha.0]),
    };

    let mut sigma = Signature::new();
    for p in ["P", "F"] {
        sigma.insert(p, 1);
    }
    for p in ["N", "R", "L"] {
        sigma.insert(p, 2);
    }
    for j in 0..n {
        sigma.insert(&format!("C{j}"), 1);
    }
    for alpha in &alphas {
        sigma.insert(&s_of(alpha), 1);
        sigma.insert(&sp_of(alpha), 1);
    }
    let mut transitions: Vec<AtmTransition> = Vec::new();
    for (_, (tl, tr)) in &m.delta {
        transitions.push(tl.clone());
        transitions.push(tr.clone());
    }
    transitions.sort_by_key(|t| (t.state.clone(), t.write.clone(), t.movement));
    transitions.dedup_by_key(|t| (t.state.clone(), t.write.clone(), t.movement));
    for t in &transitions {
        sigma.insert(&y_pt("L", t), 1);
        sigma.insert(&y_pt("R", t), 1);
        sigma.insert(&y_t(t), 1);
    }

    let fa = |p: &str, v: Var| Formula::atom(p, &[v]);
    let mut g: Vec<Formula> = Vec::new();

    // (1) the root starts the counter
    g.push(Formula::forall(X, fa("P", X), c.equals(0, X)));
    // (2) counter steps along N
    g.push(Formula::forall_unguarded(
        &[X],
        Formula::implies(
            c.less_than(full, X),
            Formula::and(
                Formula::exists(Y, Formula::atom("N", &[X, Y]), Formula::True),
                Formula::forall(Y, Formula::atom("N", &[X, Y]), c.increment(X, Y)),
            ),
        ),
    ));
    // (3) branching at the last cell
    let branch = |rel: &str| {
        Formula::and(
            Formula::exists(Y, Formula::atom(rel, &[X, Y]), Formula::True),
            Formula::forall(Y, Formula::atom(rel, &[X, Y]), c.equals(0, Y)),
        )
    };
    g.push(Formula::forall_unguarded(
        &[X],
        Formula::implies(
            c.equals(full, X),
            Formula::and(branch("L"), branch("R")),
        ),
    ));
    // (4) the top configuration marker
    g.push(Formula::forall_unguarded(
        &[X],
        Formula::and(
            Formula::implies(fa("P", X), fa("F", X)),
            Formula::implies(
                fa("F", X),
                Formula::forall(Y, Formula::atom("N", &[X, Y]), fa("F", Y)),
            ),
        ),
    ));
    // (5) unique cell content
    let unique_over = |which: &dyn Fn(&(String, Option<String>)) -> String| {
        Formula::forall_unguarded(
            &[X],
            Formula::disj(
                alphas
                    .iter()
                    .map(|alpha| {
                        Formula::conj(
                            std::iter::once(Formula::atom(&which(alpha), &[X]))
                                .chain(alphas.iter().filter(|b| *b != alpha).map(|b| {
                                    Formula::not(Formula::atom(&which(b), &[X]))
                                }))
                                .collect(),
                        )
                    })
                    .collect(),
            ),
        )
    };
    g.push(unique_over(&s_of));
    // (6) and for the previous configuration
    g.push(unique_over(&sp_of));
    // (7)-(9) the top configuration is the initial one
    g.push(Formula::forall_unguarded(
        &[X],
        Formula::implies(
            Formula::and(fa("F", X), c.equals(0, X)),
            Formula::atom(&sym("S", &[&m.start, &word[0]]), &[X]),
        ),
    ));
    {
        let mut inner = Vec::new();
        for (i, a) in word.iter().enumerate().skip(1) {
            inner.push(Formula::implies(
                Formula::and(fa("F", X), c.equals(i as u64, X)),
                Formula::atom(&sym("S", &[a]), &[X]),
            ));
        }
        g.push(Formula::forall_unguarded(&[X], Formula::conj(inner)));
    }
    g.push(Formula::forall_unguarded(
        &[X],
        Formula::implies(
            Formula::and(fa("F", X), c.at_least(n as u64, X)),
            Formula::atom(&sym("S", &[&m.blank]), &[X]),
        ),
    ));
    // (10) universal choices
    {
        let mut inner = Vec::new();
        for q in &m.universal {
            for a in &m.work_alphabet {
                let (tl, tr) = m.pair(q, a);
                inner.push(Formula::implies(
                    Formula::atom(&sym("S", &[q, a]), &[X]),
                    Formula::and(
                        Formula::atom(&y_pt("L", tl), &[X]),
                        Formula::atom(&y_pt("R", tr), &[X]),
                    ),
                ));
            }
        }
        g.push(Formula::forall_unguarded(&[X], Formula::conj(inner)));
    }
    // (11) existential choices follow the ordered pair
    {
        let mut inner = Vec::new();
        for q in &m.existential {
            for a in &m.work_alphabet {
                let (tl, tr) = m.pair(q, a);
                inner.push(Formula::implies(
                    Formula::atom(&sym("S", &[q, a]), &[X]),
                    Formula::or(
                        Formula::and(
                            Formula::atom(&y_pt("L", tl), &[X]),
                            Formula::atom(&y_pt("R", tl), &[X]),
                        ),
                        Formula::and(
                            Formula::atom(&y_pt("L", tr), &[X]),
                            Formula::atom(&y_pt("R", tr), &[X]),
                        ),
                    ),
                ));
            }
        }
        g.push(Formula::forall_unguarded(&[X], Formula::conj(inner)));
    }
    // (12) choices propagate along N
    {
        let mut inner = Vec::new();
        for side in ["L", "R"] {
            for t in &transitions {
                let y = sym(&format!("Y{side}"), &[&t.state, &t.write, &t.movement.to_string()]);
                inner.push(Formula::implies(
                    Formula::atom(&y, &[X]),
                    Formula::forall(Y, Formula::atom("N", &[X, Y]), Formula::atom(&y, &[Y])),
                ));
            }
        }
        g.push(Formula::forall_unguarded(&[X], Formula::conj(inner)));
    }
    // (13) choices transfer through the branch edges
    {
        let mut inner = Vec::new();
        for (side, rel) in [("L", "L"), ("R", "R")] {
            for t in &transitions {
                inner.push(Formula::implies(
                    Formula::atom(&y_pt(side, t), &[X]),
                    Formula::forall(
                        Y,
                        Formula::atom(rel, &[X, Y]),
                        Formula::atom(&y_t(t), &[Y]),
                    ),
                ));
            }
        }
        g.push(Formula::forall_unguarded(&[X], Formula::conj(inner)));
    }
    // (14) the executed choice propagates along N
    {
        let mut inner = Vec::new();
        for t in &transitions {
            inner.push(Formula::implies(
                Formula::atom(&y_t(t), &[X]),
                Formula::forall(Y, Formula::atom("N", &[X, Y]), Formula::atom(&y_t(t), &[Y])),
            ));
        }
        g.push(Formula::forall_unguarded(&[X], Formula::conj(inner)));
    }
    // (15) the written symbol at the previous head position
    {
        let mut inner = Vec::new();
        for t in &transitions {
            for q2 in m.states() {
                for b in &m.work_alphabet {
                    inner.push(Formula::implies(
                        Formula::and(
                            Formula::atom(&y_t(t), &[X]),
                            Formula::atom(&sym("Sp", &[&q2, b]), &[X]),
                        ),
                        Formula::atom(&sym("S", &[&t.write]), &[X]),
                    ));
                }
            }
        }
        g.push(Formula::forall_unguarded(&[X], Formula::conj(inner)));
    }
    // (16)-(19) head movement; the head cell of the previous configuration
    // is visible one N-step away
    let head_disj = Formula::disj(
        m.states()
            .iter()
            .flat_map(|q| {
                m.work_alphabet
                    .iter()
                    .map(move |a| Formula::atom(&sym("Sp", &[q, a]), &[Y]))
            })
            .collect(),
    );
    let head_next = Formula::exists(Y, Formula::atom("N", &[X, Y]), head_disj.clone());
    let head_prev = Formula::exists(Y, Formula::atom("N", &[Y, X]), head_disj.clone());
    for (line, movement, from_next, new_state) in [
        (16, 'L', true, true),
        (17, 'R', true, false),
        (18, 'R', false, true),
        (19, 'L', false, false),
    ] {
        let _ = line;
        let mut inner = Vec::new();
        for t in &transitions {
            if t.movement != movement {
                continue;
            }
            for b in &m.work_alphabet {
                let cond = Formula::conj(vec![
                    Formula::atom(&y_t(t), &[X]),
                    Formula::atom(&sym("Sp", &[b]), &[X]),
                    if from_next {
                        head_next.clone()
                    } else {
                        head_prev.clone()
                    },
                ]);
                let conclusion = if new_state {
                    Formula::atom(&sym("S", &[&t.state, b]), &[X])
                } else {
                    Formula::atom(&sym("S", &[b]), &[X])
                };
                inner.push(Formula::implies(cond, conclusion));
            }
        }
        g.push(Formula::forall_unguarded(&[X], Formula::conj(inner)));
    }
    // (20) cells away from the head keep their content
    {
        let mut inner = Vec::new();
        for a in &m.work_alphabet {
            let headless = Formula::disj(
                m.work_alphabet
                    .iter()
                    .map(|b| Formula::atom(&sym("Sp", &[b]), &[Y]))
                    .collect(),
            );
            let away_next = Formula::exists(Y, Formula::atom("N", &[X, Y]), headless.clone());
            let away_prev = Formula::exists(Y, Formula::atom("N", &[Y, X]), headless.clone());
            inner.push(Formula::implies(
                Formula::conj(vec![
                    away_next,
                    Formula::atom(&sym("Sp", &[a]), &[X]),
                    away_prev,
                ]),
                Formula::atom(&sym("S", &[a]), &[X]),
            ));
        }
        g.push(Formula::forall_unguarded(&[X], Formula::conj(inner)));
    }
    // (21) never a rejecting configuration
    {
        let mut inner = Vec::new();
        for a in &m.work_alphabet {
            inner.push(Formula::not(Formula::atom(
                &sym("S", &[&m.reject, a]),
                &[X],
            )));
        }
        g.push(Formula::forall_unguarded(&[X], Formula::conj(inner)));
    }

    let phi1_groups = g;

    // φ₂, lines (22)-(27)
    let mut h: Vec<Formula> = Vec::new();
    // (22)
    h.push(Formula::implies(
        Formula::exists(X, fa("P", X), Formula::True),
        Formula::exists(X, fa("D", X), Formula::True),
    ));
    // (23)
    h.push(Formula::forall(
        X,
        fa("D", X),
        Formula::and(fa("M", X), cp.equals(0, X)),
    ));
    // (24)
    {
        let mut inner = Vec::new();
        for alpha in &alphas {
            inner.push(Formula::implies(
                Formula::and(fa("D", X), Formula::atom(&s_of(alpha), &[X])),
                Formula::atom(&z_of(alpha), &[X]),
            ));
        }
        h.push(Formula::forall_unguarded(&[X], Formula::conj(inner)));
    }
    // (25)
    {
        let mut inner = Vec::new();
        for alpha in &alphas {
            inner.push(Formula::implies(
                Formula::conj(vec![
                    fa("M", X),
                    c.less_than(full, X),
                    cp.less_than(full, X),
                    Formula::atom(&z_of(alpha), &[X]),
                ]),
                Formula::exists(
                    Y,
                    Formula::atom("N", &[X, Y]),
                    Formula::conj(vec![
                        fa("M", Y),
                        Formula::atom(&z_of(alpha), &[Y]),
                        cp.increment(X, Y),
                    ]),
                ),
            ));
        }
        h.push(Formula::forall_unguarded(&[X], Formula::conj(inner)));
    }
    // (26)
    {
        let mut inner = Vec::new();
        for alpha in &alphas {
            let step = |rel: &str| {
                Formula::exists(
                    Y,
                    Formula::atom(rel, &[X, Y]),
                    Formula::conj(vec![
                        fa("M", Y),
                        Formula::atom(&z_of(alpha), &[Y]),
                        cp.increment(X, Y),
                    ]),
                )
            };
            inner.push(Formula::implies(
                Formula::conj(vec![
                    fa("M", X),
                    c.equals(full, X),
                    cp.less_than(full, X),
                    Formula::atom(&z_of(alpha), &[X]),
                ]),
                Formula::or(step("L"), step("R")),
            ));
        }
        h.push(Formula::forall_unguarded(&[X], Formula::conj(inner)));
    }
    // (27) the walk of a full counter period ends at a cell whose previous
    // configuration content must differ
    {
        let mut inner = Vec::new();
        for alpha in &alphas {
            inner.push(Formula::implies(
                Formula::conj(vec![
                    fa("M", X),
                    cp.equals(full, X),
                    Formula::atom(&z_of(alpha), &[X]),
                ]),
                Formula::exists(
                    Y,
                    Formula::atom("N", &[X, Y]),
                    Formula::not(Formula::atom(&sp_of(alpha), &[Y])),
                ),
            ));
        }
        h.push(Formula::forall_unguarded(&[X], Formula::conj(inner)));
    }

    let phi2_groups = h;
    Ok(canonical_output(phi1_groups, phi2_groups, sigma))
}

/// Validator report over a generated pair.
#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub phi1_groups: usize,
    pub phi2_groups: usize,
    pub phi1_guarded: bool,
    pub phi1_two_variable: bool,
    pub phi2_guarded: bool,
    pub phi2_two_variable: bool,
}

pub fn validate_output(out: &GadgetOutput) -> ValidationReport {
    use crate::syntax::{validate_guarded, validate_two_var};
    ValidationReport {
        phi1_groups: out.phi1_groups.len(),
        phi2_groups: out.phi2_groups.len(),
        phi1_guarded: validate_guarded(&out.phi1, true).is_ok(),
        phi1_two_variable: validate_two_var(&out.phi1).is_ok(),
        phi2_guarded: validate_guarded(&out.phi2, true).is_ok(),
        phi2_two_variable: validate_two_var(&out.phi2).is_ok(),
    }
}
