//! The Σ-entailment decision pipeline: the three tree automata, the
//! semantic acceptance conditions they encode, counterexample search, and
//! the bounded witness-sentence oracle.
//!
//! A counterexample to φ₁ ⊨_Σ φ₂ is a marked forest structure that models
//! φ₁, has markers on every infinite Σ-path, and admits no model of φ₂
//! related to it by the bisimulation conditions. Candidates come from
//! exhaustive small forests (checked exactly) and from periodic chains
//! (rejected only when a sound over-approximation certifies it).

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::Serialize;

use crate::acceptance::{RegularNode, RegularTree};
use crate::automata::{AtaBuilder, TwoATA};
use crate::sat::{enumerate_types, satisfiable, TypeTable};
use crate::structures::{
    check_sentence, decode_tree, encode_structure, AtomShape, AtomicType, FiniteStructure,
    LabeledTree, ThetaLabel, TreeNode,
};
use crate::syntax::{
    closure, guarded_depth, normalize, signature_of, validate_gf2_sentence, Formula, Quant,
    Signature, Var, X, Y,
};
use crate::{Budget, Error, Result};

/// Decision mode.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Mode {
    Entailment,
    ConservativeExtension,
    Inseparability,
}

/// An input instance.
#[derive(Clone, Debug)]
pub struct Problem {
    pub phi1: Formula,
    pub phi2: Formula,
    pub sigma: Signature,
    pub mode: Mode,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Stats {
    pub tp0: usize,
    pub tp1: usize,
    pub tp2: usize,
    pub a1_states: usize,
    pub a2_states: usize,
    pub a3_states: usize,
    pub game_positions: usize,
    pub millis: u128,
}

/// Decision result with counterexample material when the answer is no.
#[derive(Clone, Debug)]
pub struct Verdict {
    pub answer: bool,
    pub witness_tree: Option<LabeledTree>,
    pub witness_structure: Option<FiniteStructure>,
    pub witness_sentence: Option<Formula>,
    /// true when Σ contained symbols outside sig(φ₁) that were dropped
    pub sigma_reduced: bool,
    pub stats: Stats,
}

// ---------------------------------------------------------------------------
// The Θ alphabet
// ---------------------------------------------------------------------------

/// All atomic 2-types over `sig` paired with a marker bit, in a fixed
/// order; the letter index of a label is its position here.
pub fn theta_letters(sig: &Signature) -> Result<Vec<ThetaLabel>> {
    let mut atoms: Vec<(String, AtomShape)> = Vec::new();
    for (p, a) in &sig.preds {
        match a {
            1 => {
                atoms.push((p.clone(), AtomShape::UnaryX));
                atoms.push((p.clone(), AtomShape::UnaryY));
            }
            2 => {
                atoms.push((p.clone(), AtomShape::SelfX));
                atoms.push((p.clone(), AtomShape::SelfY));
                atoms.push((p.clone(), AtomShape::Xy));
                atoms.push((p.clone(), AtomShape::Yx));
            }
            _ => {
                return Err(Error::NotGf2(format!(
                    "predicate {p} has arity {a}; the tree alphabet admits arity at most 2"
                )))
            }
        }
    }
    if atoms.len() > 13 {
        return Err(Error::Budget(format!(
            "{} atoms make the tree alphabet too large",
            atoms.len()
        )));
    }
    let mut letters = Vec::with_capacity(1 << (atoms.len() + 1));
    for mask in 0..(1usize << atoms.len()) {
        let mut tau = AtomicType::two_type();
        for (i, a) in atoms.iter().enumerate() {
            if mask & (1 << i) != 0 {
                tau.pos.insert(a.clone());
            }
        }
        for marker in [false, true] {
            letters.push(ThetaLabel {
                tau: tau.clone(),
                marker,
            });
        }
    }
    Ok(letters)
}

pub fn letter_index(letters: &[ThetaLabel], label: &ThetaLabel) -> Result<usize> {
    letters
        .iter()
        .position(|l| l == label)
        .ok_or_else(|| Error::Invalid("label outside the alphabet".into()))
}

/// Converts a Θ-labeled presentation into the abstract-letter form the
/// automata run on.
pub fn tree_to_regular(t: &LabeledTree, letters: &[ThetaLabel]) -> Result<RegularTree> {
    let nodes = t
        .nodes
        .iter()
        .map(|n| {
            Ok(RegularNode {
                letter: letter_index(letters, &n.label)?,
                children: n.children.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RegularTree {
        root: t.root,
        nodes,
    })
}

// ---------------------------------------------------------------------------
// A₁: the decoded structure models φ₁
// ---------------------------------------------------------------------------

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
enum A1State {
    /// closure member with free variables ⊆ {x}, bound to the current node
    One(Formula),
    /// closure member with free variables {x,y}; the variable names which
    /// of the two the current node plays (the other is the predecessor)
    Two(Formula, Var),
}

struct A1Builder<'a> {
    letters: &'a [ThetaLabel],
    index: BTreeMap<A1State, u32>,
    b: AtaBuilder,
}

impl<'a> A1Builder<'a> {
    fn one(&self, f: &Formula) -> u32 {
        self.index[&A1State::One(f.clone())]
    }
    fn two(&self, f: &Formula, cur: Var) -> u32 {
        self.index[&A1State::Two(f.clone(), cur)]
    }

    /// Atom lookup: the label describes x = predecessor, y = current; in a
    /// pair state `cur` names the variable the current node plays.
    fn atom(&self, p: &str, vs: &[Var], cur: Var, label: &ThetaLabel) -> bool {
        let other = cur.other();
        let shape = match vs.len() {
            1 => {
                if vs[0] == cur {
                    AtomShape::UnaryY
                } else {
                    AtomShape::UnaryX
                }
            }
            2 => {
                if vs[0] == cur && vs[1] == cur {
                    AtomShape::SelfY
                } else if vs[0] == other && vs[1] == other {
                    AtomShape::SelfX
                } else if vs[0] == other && vs[1] == cur {
                    AtomShape::Xy
                } else {
                    AtomShape::Yx
                }
            }
            _ => unreachable!("arity above 2 inside the pipeline"),
        };
        label.tau.pos.contains(&(p.to_string(), shape))
    }

    /// Truth condition of a one-variable formula at the current node. The
    /// sign threads negation down to leaves and quantifier states.
    fn cond1(&mut self, f: &Formula, positive: bool, label: &ThetaLabel) -> u32 {
        match f {
            Formula::True => self.constant(positive),
            Formula::False => self.constant(!positive),
            Formula::Eq(a, c) => self.constant((a == c) == positive),
            Formula::Atom(p, vs) => {
                // one free variable: the atom speaks about the current node
                let v = vs[0];
                let holds = self.atom(p, vs, v, label);
                self.constant(holds == positive)
            }
            Formula::Not(g) => self.cond1(g, !positive, label),
            Formula::And(l, r) => {
                let a = self.cond1(l, positive, label);
                let c = self.cond1(r, positive, label);
                if positive {
                    self.b.and(a, c)
                } else {
                    self.b.or(a, c)
                }
            }
            Formula::Or(l, r) => {
                let a = self.cond1(l, positive, label);
                let c = self.cond1(r, positive, label);
                if positive {
                    self.b.or(a, c)
                } else {
                    self.b.and(a, c)
                }
            }
            Formula::Implies(l, r) => {
                let a = self.cond1(l, !positive, label);
                let c = self.cond1(r, positive, label);
                if positive {
                    self.b.or(a, c)
                } else {
                    self.b.and(a, c)
                }
            }
            Formula::Quantified { .. } => {
                // canonicalize the free variable to x and defer to a state
                let fv = f.free_vars();
                let renamed = if fv.contains(&Y) {
                    f.rename(&|u| if u == Y { X } else { u })
                } else {
                    f.clone()
                };
                let member = if positive { renamed } else { renamed.negate() };
                let st = self.one(&member);
                self.b.stay(st)
            }
        }
    }

    fn constant(&mut self, v: bool) -> u32 {
        if v {
            self.b.tt()
        } else {
            self.b.ff()
        }
    }

    /// Truth condition of a two-variable formula at a pair (predecessor,
    /// current node); `cur` names the current node's variable.
    fn cond2(&mut self, f: &Formula, positive: bool, cur: Var, label: &ThetaLabel) -> u32 {
        let fv = f.free_vars();
        if !(fv.contains(&X) && fv.contains(&Y)) {
            // one-sided part: own node inline, predecessor through a state
            let var = fv.iter().next().copied();
            return match var {
                None => {
                    // a sentence: location independent, evaluate here
                    let member = if positive { f.clone() } else { f.negate() };
                    let st = self.one(&member);
                    self.b.stay(st)
                }
                Some(v) if v == cur => {
                    let renamed = f.rename(&|u| if u == cur { X } else { u });
                    self.cond1(&renamed, positive, label)
                }
                Some(_) => {
                    let other = cur.other();
                    let renamed = f.rename(&|u| if u == other { X } else { u });
                    let member = if positive { renamed } else { renamed.negate() };
                    let st = self.one(&member);
                    self.b.up_req(st)
                }
            };
        }
        match f {
            Formula::Eq(..) => self.constant(!positive), // distinct nodes
            Formula::Atom(p, vs) => {
                let holds = self.atom(p, vs, cur, label);
                self.constant(holds == positive)
            }
            Formula::Not(g) => self.cond2(g, !positive, cur, label),
            Formula::And(l, r) => {
                let a = self.cond2(l, positive, cur, label);
                let c = self.cond2(r, positive, cur, label);
                if positive {
                    self.b.and(a, c)
                } else {
                    self.b.or(a, c)
                }
            }
            Formula::Or(l, r) => {
                let a = self.cond2(l, positive, cur, label);
                let c = self.cond2(r, positive, cur, label);
                if positive {
                    self.b.or(a, c)
                } else {
                    self.b.and(a, c)
                }
            }
            Formula::Implies(l, r) => {
                let a = self.cond2(l, !positive, cur, label);
                let c = self.cond2(r, positive, cur, label);
                if positive {
                    self.b.or(a, c)
                } else {
                    self.b.and(a, c)
                }
            }
            _ => unreachable!("two-variable members are Boolean over atoms and one-var parts"),
        }
    }

    /// One step of a quantified one-variable member (f in positive form;
    /// `positive` applies the optional outer negation).
    fn quant_step(&mut self, f: &Formula, positive: bool, label: &ThetaLabel) -> u32 {
        let (quant, v, guard, body) = match f {
            Formula::Quantified {
                quant,
                vars,
                guard: Some(g),
                body,
            } if vars.len() == 1 => (*quant, vars[0], (**g).clone(), (**body).clone()),
            _ => unreachable!("normalized quantifiers only"),
        };
        // effective quantifier after the sign
        let exists = (quant == Quant::Exists) == positive;
        match &guard {
            Formula::Eq(a, c) if a == c => {
                // sentence: search downward/upward or broadcast everywhere
                let inst = body.subst(v, X);
                let local = self.cond1(&inst, positive, label);
                let member = if positive { f.clone() } else { f.negate() };
                let this = self.one(&member);
                if exists {
                    let up = self.b.up_req(this);
                    let down = self.b.any_child(this);
                    let c1 = self.b.or(local, up);
                    self.b.or(c1, down)
                } else {
                    let up = self.b.up_opt(this);
                    let down = self.b.all_children(this);
                    let c1 = self.b.and(local, up);
                    self.b.and(c1, down)
                }
            }
            _ => {
                // two-variable relational guard; the matrix lives in the
                // closure and runs at the node itself, the predecessor, or
                // a successor
                let matrix = match quant {
                    Quant::Exists => Formula::and(guard.clone(), body.clone()),
                    Quant::Forall => Formula::implies(guard.clone(), body.clone()),
                };
                let member = if positive {
                    matrix.clone()
                } else {
                    matrix.negate()
                };
                let self_inst = matrix.rename(&|u| if u == Y { X } else { u });
                let local = self.cond1(&self_inst, positive, label);
                let down_state = self.two(&member, Y);
                let here_state = self.two(&member, X);
                if exists {
                    let down = self.b.any_child(down_state);
                    let here = self.b.stay(here_state);
                    let c1 = self.b.or(down, here);
                    self.b.or(c1, local)
                } else {
                    let down = self.b.all_children(down_state);
                    let here = self.b.stay(here_state);
                    let c1 = self.b.and(down, here);
                    self.b.and(c1, local)
                }
            }
        }
    }
}

/// Builds the automaton accepting exactly the trees whose decoded
/// structures model φ₁. Priorities are two everywhere except the states of
/// existential sentences (and their duals), which must stop searching.
pub fn build_a1(phi1: &Formula, letters: &[ThetaLabel]) -> Result<TwoATA> {
    validate_gf2_sentence(phi1)?;
    let phi1 = normalize(phi1);
    let cl = closure(&phi1);

    let mut states: Vec<A1State> = Vec::new();
    for m in &cl.members {
        let fv = m.free_vars();
        if fv.contains(&X) && fv.contains(&Y) {
            states.push(A1State::Two(m.clone(), Y));
            states.push(A1State::Two(m.clone(), X));
        } else if !fv.contains(&Y) {
            states.push(A1State::One(m.clone()));
        }
    }
    states.sort();
    states.dedup();
    let index: BTreeMap<A1State, u32> = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i as u32))
        .collect();

    // a state searches when it is an existential sentence or the negation
    // of a universal one
    let searching = |f: &Formula| -> bool {
        let (core, negated) = match f {
            Formula::Not(g) => ((**g).clone(), true),
            _ => (f.clone(), false),
        };
        match core {
            Formula::Quantified {
                quant,
                vars,
                guard: Some(g),
                ..
            } if vars.len() == 1 => {
                matches!(&*g, Formula::Eq(a, c) if a == c)
                    && ((quant == Quant::Exists) != negated)
            }
            _ => false,
        }
    };

    let mut b = AtaBuilder::new(letters.len());
    for s in &states {
        let prio = match s {
            A1State::One(f) if searching(f) => 1,
            _ => 2,
        };
        b.add_state(prio);
    }

    let mut builder = A1Builder { letters, index, b };
    for (si, s) in states.iter().enumerate() {
        for li in 0..builder.letters.len() {
            let label = builder.letters[li].clone();
            let cond = match s {
                A1State::One(f) => {
                    let (core, negated) = match f {
                        Formula::Not(g) => ((**g).clone(), true),
                        _ => (f.clone(), false),
                    };
                    if matches!(core, Formula::Quantified { .. }) {
                        builder.quant_step(&core, !negated, &label)
                    } else {
                        builder.cond1(&core, !negated, &label)
                    }
                }
                A1State::Two(f, cur) => {
                    let (core, negated) = match f {
                        Formula::Not(g) => ((**g).clone(), true),
                        _ => (f.clone(), false),
                    };
                    builder.cond2(&core, !negated, *cur, &label)
                }
            };
            builder.b.set_delta(si as u32, li, cond);
        }
    }

    let initial = builder.index[&A1State::One(phi1.clone())];
    Ok(builder.b.finish(initial))
}

/// The state count formula for A₁ over a normalized sentence: one state per
/// closure member over x, two per genuinely two-variable member.
pub fn a1_state_count(phi1: &Formula) -> usize {
    let phi1 = normalize(phi1);
    let cl = closure(&phi1);
    let mut n = 0;
    for m in &cl.members {
        let fv = m.free_vars();
        if fv.contains(&X) && fv.contains(&Y) {
            n += 2;
        } else if !fv.contains(&Y) {
            n += 1;
        }
    }
    n
}

// ---------------------------------------------------------------------------
// Σ-restricted comparison of atomic types against φ₂-types
// ---------------------------------------------------------------------------

/// Comparison context: the Σ-atoms representable in cl(φ₂). Atoms of Σ that
/// φ₂ cannot speak about are free and never block a match.
pub struct SigmaCtx<'a> {
    pub table: &'a TypeTable,
    pub sigma: &'a Signature,
    /// representable one-variable atoms as x-canonical formulas
    repr1: Vec<(String, AtomShape, Formula)>,
    /// representable cross atoms
    repr_cross: Vec<(String, AtomShape)>,
}

impl<'a> SigmaCtx<'a> {
    pub fn new(table: &'a TypeTable, sigma: &'a Signature) -> SigmaCtx<'a> {
        let mut repr1 = Vec::new();
        for (p, a) in &sigma.preds {
            let shapes: &[AtomShape] = match a {
                1 => &[AtomShape::UnaryX],
                2 => &[AtomShape::SelfX],
                _ => &[],
            };
            for s in shapes {
                let f = crate::structures::shape_formula(p, *s);
                if table.cl_contains(&f) {
                    repr1.push((p.clone(), *s, f));
                }
            }
        }
        let mut repr_cross = Vec::new();
        for (p, a) in &sigma.preds {
            if *a == 2 {
                for s in [AtomShape::Xy, AtomShape::Yx] {
                    if table.cl_contains(&crate::structures::shape_formula(p, s)) {
                        repr_cross.push((p.clone(), s));
                    }
                }
            }
        }
        SigmaCtx {
            table,
            sigma,
            repr1,
            repr_cross,
        }
    }

    /// τ_y =_Σ t: the Σ-atoms about the current node agree with t.
    pub fn tau_y_matches(&self, t: usize, tau: &AtomicType) -> bool {
        self.repr1.iter().all(|(p, s, f)| {
            let in_tau = match s {
                AtomShape::UnaryX => tau.pos.contains(&(p.clone(), AtomShape::UnaryY)),
                AtomShape::SelfX => tau.pos.contains(&(p.clone(), AtomShape::SelfY)),
                _ => unreachable!(),
            };
            self.table.val1(t, f) == in_tau
        })
    }

    /// τ =_Σ λ for a child edge: λ's x is the parent node (τ's x side) and
    /// λ's y the child (τ's y side).
    pub fn matches_down(&self, l: usize, tau: &AtomicType) -> bool {
        let lam = &self.table.tp2[l];
        for (p, s, f) in &self.repr1 {
            let _ = s;
            let x_in_tau = match s {
                AtomShape::UnaryX => tau.pos.contains(&(p.clone(), AtomShape::UnaryX)),
                AtomShape::SelfX => tau.pos.contains(&(p.clone(), AtomShape::SelfX)),
                _ => unreachable!(),
            };
            if self.table.val1(lam.x, f) != x_in_tau {
                return false;
            }
            let y_in_tau = match s {
                AtomShape::UnaryX => tau.pos.contains(&(p.clone(), AtomShape::UnaryY)),
                AtomShape::SelfX => tau.pos.contains(&(p.clone(), AtomShape::SelfY)),
                _ => unreachable!(),
            };
            if self.table.val1(lam.y, f) != y_in_tau {
                return false;
            }
        }
        for (p, s) in &self.repr_cross {
            if lam.cross.contains(&(p.clone(), *s)) != tau.pos.contains(&(p.clone(), *s)) {
                return false;
            }
        }
        true
    }

    /// τ =_Σ λ⁻ for the edge to the predecessor: λ's x is the current node
    /// (τ's y side) and λ's y the predecessor (τ's x side).
    pub fn matches_up(&self, l: usize, tau: &AtomicType) -> bool {
        let lam = &self.table.tp2[l];
        for (p, s, f) in &self.repr1 {
            let y_of_tau = match s {
                AtomShape::UnaryX => tau.pos.contains(&(p.clone(), AtomShape::UnaryY)),
                AtomShape::SelfX => tau.pos.contains(&(p.clone(), AtomShape::SelfY)),
                _ => unreachable!(),
            };
            if self.table.val1(lam.x, f) != y_of_tau {
                return false;
            }
            let x_of_tau = match s {
                AtomShape::UnaryX => tau.pos.contains(&(p.clone(), AtomShape::UnaryX)),
                AtomShape::SelfX => tau.pos.contains(&(p.clone(), AtomShape::SelfX)),
                _ => unreachable!(),
            };
            if self.table.val1(lam.y, f) != x_of_tau {
                return false;
            }
        }
        for (p, s) in &self.repr_cross {
            // λ's (x,y) is (node, predecessor); τ's is (predecessor, node)
            let flipped = match s {
                AtomShape::Xy => AtomShape::Yx,
                AtomShape::Yx => AtomShape::Xy,
                other => *other,
            };
            if lam.cross.contains(&(p.clone(), *s)) != tau.pos.contains(&(p.clone(), flipped)) {
                return false;
            }
        }
        true
    }

    /// τ is Σ-guarded: some cross atom of Σ links the node to its
    /// predecessor (all Σ-atoms are present in τ, no representability
    /// caveat applies).
    pub fn tau_sigma_guarded(&self, tau: &AtomicType) -> bool {
        tau.pos
            .iter()
            .any(|(p, s)| matches!(s, AtomShape::Xy | AtomShape::Yx) && self.sigma.contains(p))
    }
}

// ---------------------------------------------------------------------------
// A₂: some model of φ₂ satisfies the bisimulation conditions
// ---------------------------------------------------------------------------

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
enum A2State {
    Q0,
    QBot,
    S(usize),
    T(usize),
    TQ(usize),
    TUp(usize),
    TDown(usize),
    TAmp(usize),
    TI(usize, u8),
    TIUp(usize, u8),
    TIDown(usize, u8),
    Lam(usize),
    LamUp(usize),
    LamI(usize, u8),
    LamIUp(usize, u8),
}

/// Builds the automaton that accepts a tree iff a model of φ₂ satisfying
/// the two characterization conditions exists for the decoded structure
/// with the marker set read off the labels.
pub fn build_a2(
    table: &TypeTable,
    sigma: &Signature,
    letters: &[ThetaLabel],
) -> Result<TwoATA> {
    let ctx = SigmaCtx::new(table, sigma);
    let mut states: Vec<A2State> = vec![A2State::Q0, A2State::QBot];
    for s in 0..table.tp0_count() {
        states.push(A2State::S(s));
    }
    for t in 0..table.tp1_count() {
        states.push(A2State::T(t));
        states.push(A2State::TQ(t));
        states.push(A2State::TUp(t));
        states.push(A2State::TDown(t));
        states.push(A2State::TAmp(t));
        for i in [0u8, 1u8] {
            states.push(A2State::TI(t, i));
            states.push(A2State::TIUp(t, i));
            states.push(A2State::TIDown(t, i));
        }
    }
    for l in 0..table.tp2_count() {
        states.push(A2State::Lam(l));
        states.push(A2State::LamUp(l));
        for i in [0u8, 1u8] {
            states.push(A2State::LamI(l, i));
            states.push(A2State::LamIUp(l, i));
        }
    }
    let index: BTreeMap<A2State, u32> = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i as u32))
        .collect();

    let mut b = AtaBuilder::new(letters.len());
    for s in &states {
        let prio = match s {
            A2State::TQ(_) => 1,
            _ => 2,
        };
        b.add_state(prio);
    }

    // neighborhoods per 1-type, precomputed
    let hoods: Vec<Vec<Vec<usize>>> = (0..table.tp1_count())
        .map(|t| table.minimal_neighborhoods(t))
        .collect();

    let st = |s: &A2State| index[s];

    for t in 0..table.tp1_count() {
        let _ = t;
    }

    for (li, label) in letters.iter().enumerate() {
        let tau = &label.tau;
        let m_bit = label.marker;
        let guarded = ctx.tau_sigma_guarded(tau);

        // q0: pick a 0-type, launch searches for its existential witnesses
        {
            let mut disj = b.ff();
            for s in 0..table.tp0_count() {
                let mut conj = b.stay(st(&A2State::S(s)));
                for inst in table.tp0_exists_demands(s) {
                    let mut inner = b.ff();
                    for t in 0..table.tp1_count() {
                        if table.tp0_of[t] == s && table.val1(t, &inst) {
                            let w = b.stay(st(&A2State::TQ(t)));
                            inner = b.or(inner, w);
                        }
                    }
                    conj = b.and(conj, inner);
                }
                disj = b.or(disj, conj);
            }
            b.set_delta(st(&A2State::Q0), li, disj);
        }
        // s: broadcast and realize a compatible 1-type here
        for s in 0..table.tp0_count() {
            let down = b.all_children(st(&A2State::S(s)));
            let mut pick = b.ff();
            for t in 0..table.tp1_count() {
                if table.tp0_of[t] == s {
                    let w = b.stay(st(&A2State::T(t)));
                    pick = b.or(pick, w);
                }
            }
            let cond = b.and(down, pick);
            b.set_delta(st(&A2State::S(s)), li, cond);
        }
        // q⊥ reads the marker
        {
            let c = if m_bit { b.tt() } else { b.ff() };
            b.set_delta(st(&A2State::QBot), li, c);
        }

        for t in 0..table.tp1_count() {
            let matches = ctx.tau_y_matches(t, tau);

            // t?: search for a node carrying the delimited obligation
            {
                let up = b.up_req(st(&A2State::TQ(t)));
                let down = b.any_child(st(&A2State::TQ(t)));
                let here = b.stay(st(&A2State::TI(t, 0)));
                let c1 = b.or(up, down);
                let c = b.or(c1, here);
                b.set_delta(st(&A2State::TQ(t)), li, c);
            }

            // the plain bisimulation block
            {
                let cond = if !matches {
                    b.ff()
                } else {
                    let up = b.stay(st(&A2State::TUp(t)));
                    let down = b.all_children(st(&A2State::TDown(t)));
                    let mut tpart = b.ff();
                    for hood in &hoods[t] {
                        let mut conj = b.tt();
                        for &l in hood {
                            let dia = b.any_child(st(&A2State::Lam(l)));
                            let upl = b.stay(st(&A2State::LamUp(l)));
                            let either = b.or(dia, upl);
                            conj = b.and(conj, either);
                        }
                        tpart = b.or(tpart, conj);
                    }
                    let c1 = b.and(up, down);
                    b.and(c1, tpart)
                };
                b.set_delta(st(&A2State::T(t)), li, cond);
            }
            // t↓ runs at a successor
            {
                let cond = if !guarded {
                    b.tt()
                } else {
                    let mut c = b.ff();
                    for l in 0..table.tp2_count() {
                        if table.tp2[l].x == t && ctx.matches_down(l, tau) {
                            let w = b.stay(st(&A2State::T(table.tp2[l].y)));
                            c = b.or(c, w);
                        }
                    }
                    c
                };
                b.set_delta(st(&A2State::TDown(t)), li, cond);
            }
            // t↑ runs at the node itself and talks about its predecessor
            {
                let cond = if !guarded {
                    b.tt()
                } else {
                    let mut c = b.ff();
                    for l in 0..table.tp2_count() {
                        if table.tp2[l].x == t && ctx.matches_up(l, tau) {
                            let w = b.up_opt(st(&A2State::T(table.tp2[l].y)));
                            c = b.or(c, w);
                        }
                    }
                    c
                };
                b.set_delta(st(&A2State::TUp(t)), li, cond);
            }
            // t_&: switch on the marker of the node reached
            {
                let c = b.stay(st(&A2State::TI(t, u8::from(m_bit))));
                b.set_delta(st(&A2State::TAmp(t)), li, c);
            }

            // delimited block, index 0
            {
                let cond = if !matches {
                    b.ff()
                } else {
                    let up = b.stay(st(&A2State::TIUp(t, 0)));
                    let down = b.all_children(st(&A2State::TIDown(t, 0)));
                    let mut tpart = b.ff();
                    for hood in &hoods[t] {
                        let mut conj = b.tt();
                        for &l in hood {
                            let dia = b.any_child(st(&A2State::LamI(l, 0)));
                            let upl = b.stay(st(&A2State::LamIUp(l, 0)));
                            let either = b.or(dia, upl);
                            conj = b.and(conj, either);
                        }
                        tpart = b.or(tpart, conj);
                    }
                    let c1 = b.and(up, down);
                    b.and(c1, tpart)
                };
                b.set_delta(st(&A2State::TI(t, 0)), li, cond);
            }
            // delimited block, index 1: vacuous behind a marked
            // predecessor, and the searched type must be witnessed
            {
                let vac = b.up_req(st(&A2State::QBot));
                let cond = if !matches {
                    vac
                } else {
                    let witness = b.stay(st(&A2State::TQ(t)));
                    let up = b.stay(st(&A2State::TIUp(t, 1)));
                    // descending from index 1 resets to 0 exactly below a
                    // marked node
                    let j = if m_bit { 0u8 } else { 1u8 };
                    let down = b.all_children(st(&A2State::TIDown(t, j)));
                    let mut tpart = b.ff();
                    for hood in &hoods[t] {
                        let mut conj = b.tt();
                        for &l in hood {
                            let dia = b.any_child(st(&A2State::LamI(l, j)));
                            let upl = b.stay(st(&A2State::LamIUp(l, 1)));
                            let either = b.or(dia, upl);
                            conj = b.and(conj, either);
                        }
                        tpart = b.or(tpart, conj);
                    }
                    let c1 = b.and(up, down);
                    let c2 = b.and(c1, tpart);
                    let full = b.and(witness, c2);
                    let short = b.and(witness, vac);
                    b.or(full, short)
                };
                b.set_delta(st(&A2State::TI(t, 1)), li, cond);
            }
            for i in [0u8, 1u8] {
                // tⁱ↓ at a successor
                {
                    let cond = if !guarded {
                        b.tt()
                    } else {
                        let mut c = b.ff();
                        for l in 0..table.tp2_count() {
                            if table.tp2[l].x == t && ctx.matches_down(l, tau) {
                                let w = b.stay(st(&A2State::TI(table.tp2[l].y, i)));
                                c = b.or(c, w);
                            }
                        }
                        c
                    };
                    b.set_delta(st(&A2State::TIDown(t, i)), li, cond);
                }
                // tⁱ↑ about the predecessor: index 0 switches on the
                // predecessor's marker, index 1 stays
                {
                    let cond = if !guarded {
                        b.tt()
                    } else {
                        let mut c = b.ff();
                        for l in 0..table.tp2_count() {
                            if table.tp2[l].x == t && ctx.matches_up(l, tau) {
                                let target = if i == 0 {
                                    A2State::TAmp(table.tp2[l].y)
                                } else {
                                    A2State::TI(table.tp2[l].y, 1)
                                };
                                let w = b.up_opt(st(&target));
                                c = b.or(c, w);
                            }
                        }
                        c
                    };
                    b.set_delta(st(&A2State::TIUp(t, i)), li, cond);
                }
            }
        }

        for l in 0..table.tp2_count() {
            let lam_guarded = table.tp2[l].sigma_guarded(sigma);
            let ly = table.tp2[l].y;
            // λ at a successor
            {
                let cond = if lam_guarded {
                    if ctx.matches_down(l, tau) {
                        b.stay(st(&A2State::T(ly)))
                    } else {
                        b.ff()
                    }
                } else {
                    b.stay(st(&A2State::TQ(ly)))
                };
                b.set_delta(st(&A2State::Lam(l)), li, cond);
            }
            // λ↑ about the predecessor
            {
                let cond = if lam_guarded {
                    if ctx.matches_up(l, tau) {
                        b.up_req(st(&A2State::T(ly)))
                    } else {
                        b.ff()
                    }
                } else {
                    b.stay(st(&A2State::TQ(ly)))
                };
                b.set_delta(st(&A2State::LamUp(l)), li, cond);
            }
            for i in [0u8, 1u8] {
                {
                    let cond = if lam_guarded {
                        if ctx.matches_down(l, tau) {
                            b.stay(st(&A2State::TI(ly, i)))
                        } else {
                            b.ff()
                        }
                    } else {
                        b.stay(st(&A2State::TQ(ly)))
                    };
                    b.set_delta(st(&A2State::LamI(l, i)), li, cond);
                }
                {
                    let cond = if lam_guarded {
                        if ctx.matches_up(l, tau) {
                            let target = if i == 0 {
                                A2State::TAmp(ly)
                            } else {
                                A2State::TI(ly, 1)
                            };
                            b.up_req(st(&target))
                        } else {
                            b.ff()
                        }
                    } else {
                        b.stay(st(&A2State::TQ(ly)))
                    };
                    b.set_delta(st(&A2State::LamIUp(l, i)), li, cond);
                }
            }
        }
    }

    Ok(b.finish(index[&A2State::Q0]))
}

/// The state count formula for A₂ from the type table sizes.
pub fn a2_state_count(table: &TypeTable) -> usize {
    2 + table.tp0_count() + 11 * table.tp1_count() + 6 * table.tp2_count()
}

// ---------------------------------------------------------------------------
// A₃: markers are infinite on every infinite Σ-path
// ---------------------------------------------------------------------------

/// Accepts iff every infinite Σ-path of the decoded structure carries
/// infinitely many markers. One probe state classifies each node; unmarked
/// Σ-linked stretches carry the odd priority.
pub fn build_a3(sigma: &Signature, letters: &[ThetaLabel]) -> TwoATA {
    let mut b = AtaBuilder::new(letters.len());
    let probe = b.add_state(0);
    let waiting = b.add_state(1);
    let good = b.add_state(2);
    for (li, label) in letters.iter().enumerate() {
        let linked = label
            .tau
            .pos
            .iter()
            .any(|(p, s)| matches!(s, AtomShape::Xy | AtomShape::Yx) && sigma.contains(p));
        let status = if linked && !label.marker { waiting } else { good };
        let c = b.stay(status);
        b.set_delta(probe, li, c);
        let down = b.all_children(probe);
        b.set_delta(waiting, li, down);
        b.set_delta(good, li, down);
    }
    b.finish(probe)
}

/// Well-formedness: each node's atoms about its predecessor match the
/// predecessor's own atoms, and the root's predecessor side is empty.
pub fn build_consistency(sig1: &Signature, letters: &[ThetaLabel]) -> TwoATA {
    // states: root check + one checker per atomic 1-type over sig1
    let mut types: Vec<AtomicType> = Vec::new();
    {
        let mut atoms: Vec<(String, AtomShape)> = Vec::new();
        for (p, a) in &sig1.preds {
            match a {
                1 => atoms.push((p.clone(), AtomShape::UnaryX)),
                2 => atoms.push((p.clone(), AtomShape::SelfX)),
                _ => {}
            }
        }
        for mask in 0..(1usize << atoms.len()) {
            let mut t = AtomicType::one_type();
            for (i, a) in atoms.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    t.pos.insert(a.clone());
                }
            }
            types.push(t);
        }
    }
    let mut b = AtaBuilder::new(letters.len());
    let root = b.add_state(0);
    let first = 1u32;
    for _ in &types {
        b.add_state(0);
    }
    for (li, label) in letters.iter().enumerate() {
        let x_side = label.tau.x_part();
        let y_side = label.tau.y_part();
        let crossless = !label.tau.guarded();
        let y_id = first + types.iter().position(|t| *t == y_side).unwrap() as u32;
        let down = b.all_children(y_id);
        // root labels must not claim any predecessor atoms
        let root_cond = if x_side.pos.is_empty() && crossless {
            down
        } else {
            b.ff()
        };
        b.set_delta(root, li, root_cond);
        for (ti, t) in types.iter().enumerate() {
            let ok = x_side == *t;
            let cond = if ok { down } else { b.ff() };
            b.set_delta(first + ti as u32, li, cond);
        }
    }
    b.finish(root)
}

// (part 2 follows: the semantic checks, candidates, decide, witness search)

// ---------------------------------------------------------------------------
// Semantic acceptance of A₂ on a presentation
// ---------------------------------------------------------------------------

/// A candidate counterexample: a Θ-labeled presentation together with its
/// in-edge structure. Finite presentations have unique parents; periodic
/// chains carry a second in-edge at the fold node.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub tree: LabeledTree,
    pub parents: Vec<Vec<usize>>,
    /// the deep reading of the fold node's parent, used for evaluation
    pub eval_parent: Vec<Option<usize>>,
    pub structure: Option<FiniteStructure>,
}

pub fn candidate_from_tree(tree: LabeledTree, structure: Option<FiniteStructure>) -> Candidate {
    let mut parents = vec![Vec::new(); tree.nodes.len()];
    for (i, n) in tree.nodes.iter().enumerate() {
        for &c in &n.children {
            parents[c].push(i);
        }
    }
    let eval_parent = parents
        .iter()
        .map(|ps| ps.last().copied())
        .collect();
    Candidate {
        tree,
        parents,
        eval_parent,
        structure,
    }
}

/// Does a model of φ₂ satisfying the two characterization conditions exist
/// for the decoded structure? Exact on finite presentations; on multi-
/// parent presentations the computation over-approximates, so only a
/// negative answer is conclusive.
pub fn a2_accepts_candidate(table: &TypeTable, sigma: &Signature, cand: &Candidate) -> bool {
    let ctx = SigmaCtx::new(table, sigma);
    let n = cand.tree.nodes.len();
    let nt = table.tp1_count();
    let tau = |i: usize| &cand.tree.nodes[i].label.tau;
    let marked = |i: usize| cand.tree.nodes[i].label.marker;
    let hoods: Vec<Vec<Vec<usize>>> = (0..nt).map(|t| table.minimal_neighborhoods(t)).collect();

    // per-type λ lists with matching endpoints
    let lams_of: Vec<Vec<usize>> = (0..nt)
        .map(|t| {
            (0..table.tp2_count())
                .filter(|&l| table.tp2[l].x == t)
                .collect()
        })
        .collect();

    let ymatch: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..nt).map(|t| ctx.tau_y_matches(t, tau(i))).collect())
        .collect();

    let mut b = vec![vec![true; nt]; n];
    let mut d0 = vec![vec![true; nt]; n];
    let mut d1 = vec![vec![true; nt]; n];
    let mut w = vec![true; nt];

    loop {
        let mut changed = false;

        // the W set: types with a delimited witness node somewhere
        for t in 0..nt {
            if w[t] && !(0..n).any(|i| d0[i][t]) {
                w[t] = false;
                changed = true;
            }
        }

        for i in 0..n {
            let guarded_here = ctx.tau_sigma_guarded(tau(i));
            let kids = cand.tree.nodes[i].children.clone();
            for t in 0..nt {
                // helper: downward continuation for a given table
                let down_ok = |rel: &Vec<Vec<bool>>| -> bool {
                    kids.iter().all(|&c| {
                        if !ctx.tau_sigma_guarded(tau(c)) {
                            true
                        } else {
                            lams_of[t]
                                .iter()
                                .any(|&l| ctx.matches_down(l, tau(c)) && rel[c][table.tp2[l].y])
                        }
                    })
                };
                let up_choices = |pred: &dyn Fn(usize, usize) -> bool| -> bool {
                    // some in-edge and λ matching the label of this node
                    cand.parents[i].iter().any(|&p| {
                        lams_of[t]
                            .iter()
                            .any(|&l| ctx.matches_up(l, tau(i)) && pred(p, table.tp2[l].y))
                    })
                };
                let hood_ok = |dia: &dyn Fn(usize, usize) -> bool,
                               upo: &dyn Fn(usize, usize) -> bool,
                               wref: &Vec<bool>| -> bool {
                    hoods[t].iter().any(|hood| {
                        hood.iter().all(|&l| {
                            if table.tp2[l].sigma_guarded(sigma) {
                                let down = kids.iter().any(|&c| {
                                    ctx.matches_down(l, tau(c)) && dia(c, table.tp2[l].y)
                                });
                                let up = guarded_here
                                    && ctx.matches_up(l, tau(i))
                                    && cand.parents[i].iter().any(|&p| upo(p, table.tp2[l].y));
                                down || up
                            } else {
                                wref[table.tp2[l].y]
                            }
                        })
                    })
                };

                if b[i][t] {
                    let ok = ymatch[i][t]
                        && (!guarded_here || up_choices(&|p, ty| b[p][ty]))
                        && down_ok(&b)
                        && hood_ok(&|c, ty| b[c][ty], &|p, ty| b[p][ty], &w);
                    if !ok {
                        b[i][t] = false;
                        changed = true;
                    }
                }
                if d0[i][t] {
                    let upsel = |p: usize, ty: usize| if marked(p) { d1[p][ty] } else { d0[p][ty] };
                    let ok = ymatch[i][t]
                        && (!guarded_here || up_choices(&upsel))
                        && down_ok(&d0)
                        && hood_ok(&|c, ty| d0[c][ty], &upsel, &w);
                    if !ok {
                        d0[i][t] = false;
                        changed = true;
                    }
                }
                if d1[i][t] {
                    let vac = cand.parents[i].iter().any(|&p| marked(p));
                    let ok = if !ymatch[i][t] {
                        vac
                    } else {
                        let j_is_zero = marked(i);
                        let dj = |c: usize, ty: usize| {
                            if j_is_zero {
                                d0[c][ty]
                            } else {
                                d1[c][ty]
                            }
                        };
                        let full = (!guarded_here || up_choices(&|p, ty| d1[p][ty]))
                            && kids.iter().all(|&c| {
                                if !ctx.tau_sigma_guarded(tau(c)) {
                                    true
                                } else {
                                    lams_of[t].iter().any(|&l| {
                                        ctx.matches_down(l, tau(c)) && dj(c, table.tp2[l].y)
                                    })
                                }
                            })
                            && hood_ok(&dj, &|p, ty| d1[p][ty], &w);
                        w[t] && (vac || full)
                    };
                    if !ok {
                        d1[i][t] = false;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }

    // acceptance: a 0-type whose broadcast and witness demands succeed
    (0..table.tp0_count()).any(|s| {
        let broadcast = (0..n).all(|i| (0..nt).any(|t| table.tp0_of[t] == s && b[i][t]));
        let witnesses = table
            .tp0_exists_demands(s)
            .iter()
            .all(|inst| (0..nt).any(|t| table.tp0_of[t] == s && table.val1(t, inst) && w[t]));
        broadcast && witnesses
    })
}

// ---------------------------------------------------------------------------
// φ₁ and the marker condition on presentations
// ---------------------------------------------------------------------------

/// Evaluates a GF² sentence on the unfolding of a presentation, reading
/// each node's neighborhood from the labels. Exact when every node's
/// instances share their parent reading (finite trees, or folds placed
/// deeper than the quantifier depth).
pub fn sentence_on_candidate(f: &Formula, cand: &Candidate) -> bool {
    let mut ev = CandEval {
        cand,
        memo: BTreeMap::new(),
    };
    ev.sentence(f)
}

struct CandEval<'a> {
    cand: &'a Candidate,
    memo: BTreeMap<(usize, Formula), bool>,
}

impl<'a> CandEval<'a> {
    fn label(&self, i: usize) -> &ThetaLabel {
        &self.cand.tree.nodes[i].label
    }

    fn sentence(&mut self, f: &Formula) -> bool {
        match f {
            Formula::True => true,
            Formula::False => false,
            Formula::Not(g) => !self.sentence(g),
            Formula::And(a, b) => self.sentence(a) && self.sentence(b),
            Formula::Or(a, b) => self.sentence(a) || self.sentence(b),
            Formula::Implies(a, b) => !self.sentence(a) || self.sentence(b),
            Formula::Quantified {
                quant,
                vars,
                guard: Some(g),
                body,
            } if vars.len() == 1 && matches!(&**g, Formula::Eq(a, b) if a == b) => {
                let v = vars[0];
                let inst = body.subst(v, X);
                match quant {
                    Quant::Exists => (0..self.cand.tree.nodes.len()).any(|i| self.at(i, &inst)),
                    Quant::Forall => (0..self.cand.tree.nodes.len()).all(|i| self.at(i, &inst)),
                }
            }
            _ => unreachable!("normalized sentences decompose into guarded sentences"),
        }
    }

    /// truth of a formula with free variables ⊆ {x} at node i
    fn at(&mut self, i: usize, f: &Formula) -> bool {
        if f.is_sentence() {
            return self.sentence(f);
        }
        if let Some(&v) = self.memo.get(&(i, f.clone())) {
            return v;
        }
        let v = self.at_raw(i, f);
        self.memo.insert((i, f.clone()), v);
        v
    }

    fn at_raw(&mut self, i: usize, f: &Formula) -> bool {
        match f {
            Formula::True => true,
            Formula::False => false,
            Formula::Eq(a, b) => a == b,
            Formula::Atom(p, vs) => {
                let shape = match vs.len() {
                    1 => AtomShape::UnaryY,
                    _ => AtomShape::SelfY,
                };
                self.label(i).tau.pos.contains(&(p.clone(), shape))
            }
            Formula::Not(g) => !self.at(i, g),
            Formula::And(a, b) => self.at(i, a) && self.at(i, b),
            Formula::Or(a, b) => self.at(i, a) || self.at(i, b),
            Formula::Implies(a, b) => !self.at(i, a) || self.at(i, b),
            Formula::Quantified {
                quant,
                vars,
                guard: Some(g),
                body,
            } if vars.len() == 1 => {
                let v = vars[0];
                match &**g {
                    Formula::Eq(a, b) if a == b => {
                        let inst = body.subst(v, X);
                        let whole = Formula::Quantified {
                            quant: *quant,
                            vars: vars.clone(),
                            guard: Some(g.clone()),
                            body: body.clone(),
                        };
                        let _ = inst;
                        self.sentence(&whole)
                    }
                    _ => {
                        let matrix = match quant {
                            Quant::Exists => Formula::and((**g).clone(), (**body).clone()),
                            Quant::Forall => Formula::implies((**g).clone(), (**body).clone()),
                        };
                        let self_inst = matrix.rename(&|u| if u == Y { X } else { u });
                        let self_val = self.at(i, &self_inst);
                        let mut vals = vec![self_val];
                        if let Some(p) = self.cand.eval_parent[i] {
                            vals.push(self.pair(i, Partner::Parent(p), &matrix));
                        }
                        let kids = self.cand.tree.nodes[i].children.clone();
                        for c in kids {
                            vals.push(self.pair(i, Partner::Child(c), &matrix));
                        }
                        match quant {
                            Quant::Exists => vals.into_iter().any(|v| v),
                            Quant::Forall => vals.into_iter().all(|v| v),
                        }
                    }
                }
            }
            Formula::Quantified { .. } => unreachable!("normalized input"),
        }
    }

    /// truth of a two-variable formula on the ordered pair (node i as x,
    /// partner as y)
    fn pair(&mut self, i: usize, partner: Partner, f: &Formula) -> bool {
        match f {
            Formula::True => true,
            Formula::False => false,
            Formula::Eq(a, b) => a == b, // partners are distinct nodes
            Formula::Atom(p, vs) if vs.len() == 2 && vs[0] != vs[1] => {
                // cross atom between i and the partner
                let want_xy = vs[0] == X; // R(x,y): from i to partner
                match partner {
                    Partner::Parent(_) => {
                        // the pair label lives at i: x side is the parent
                        let shape = if want_xy { AtomShape::Yx } else { AtomShape::Xy };
                        self.label(i).tau.pos.contains(&(p.clone(), shape))
                    }
                    Partner::Child(c) => {
                        let shape = if want_xy { AtomShape::Xy } else { AtomShape::Yx };
                        self.label(c).tau.pos.contains(&(p.clone(), shape))
                    }
                }
            }
            Formula::Not(g) => !self.pair(i, partner, g),
            Formula::And(a, b) => self.pair(i, partner, a) && self.pair(i, partner, b),
            Formula::Or(a, b) => self.pair(i, partner, a) || self.pair(i, partner, b),
            Formula::Implies(a, b) => !self.pair(i, partner, a) || self.pair(i, partner, b),
            _ => {
                // one-sided part
                let fv = f.free_vars();
                if fv.contains(&Y) {
                    let renamed = f.rename(&|u| if u == Y { X } else { u });
                    let node = match partner {
                        Partner::Parent(p) => p,
                        Partner::Child(c) => c,
                    };
                    self.at(node, &renamed)
                } else {
                    self.at(i, f)
                }
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Partner {
    Parent(usize),
    Child(usize),
}

/// The marker condition: no unmarked Σ-linked cycle in the presentation.
pub fn markers_ok(sigma: &Signature, cand: &Candidate) -> bool {
    let n = cand.tree.nodes.len();
    let linked = |c: usize| {
        cand.tree.nodes[c]
            .label
            .tau
            .pos
            .iter()
            .any(|(p, s)| matches!(s, AtomShape::Xy | AtomShape::Yx) && sigma.contains(p))
    };
    // DFS over σ-linked child edges avoiding marked nodes
    let mut state = vec![0u8; n];
    fn dfs(
        i: usize,
        cand: &Candidate,
        linked: &dyn Fn(usize) -> bool,
        state: &mut Vec<u8>,
    ) -> bool {
        state[i] = 1;
        for &c in &cand.tree.nodes[i].children {
            if cand.tree.nodes[c].label.marker || !linked(c) {
                continue;
            }
            match state[c] {
                1 => return false,
                0 => {
                    if !dfs(c, cand, linked, state) {
                        return false;
                    }
                }
                _ => {}
            }
        }
        state[i] = 2;
        true
    }
    for i in 0..n {
        if state[i] == 0 && !cand.tree.nodes[i].label.marker {
            if !dfs(i, cand, &linked, &mut state) {
                return false;
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Candidate generation
// ---------------------------------------------------------------------------

/// All forest models of the sentence with at most `max` elements over its
/// signature, deduplicated up to isomorphism.
pub fn finite_forest_models(
    phi: &Formula,
    sig: &Signature,
    max_cells: usize,
) -> Result<Vec<FiniteStructure>> {
    let mut out: Vec<FiniteStructure> = Vec::new();
    let unary: Vec<&String> = sig.unary().collect();
    let binary: Vec<&String> = sig.binary().collect();
    for n in 1..=4usize {
        let cells = unary.len() * n + binary.len() * n * n;
        if cells > max_cells {
            break;
        }
        let names: Vec<String> = (0..n).map(|i| format!("e{i}")).collect();
        for mask in 0..(1u64 << cells) {
            let mut s = FiniteStructure::new(
                &names.iter().map(|x| x.as_str()).collect::<Vec<_>>(),
            );
            for u in &unary {
                s.declare_unary(u);
            }
            for bp in &binary {
                s.declare_binary(bp);
            }
            let mut bit = 0;
            for u in &unary {
                for e in &names {
                    if mask & (1 << bit) != 0 {
                        s.add_unary(u, e);
                    }
                    bit += 1;
                }
            }
            for bp in &binary {
                for a in &names {
                    for c in &names {
                        if mask & (1 << bit) != 0 {
                            s.add_binary(bp, a, c);
                        }
                        bit += 1;
                    }
                }
            }
            if !check_sentence(&s, phi)? {
                continue;
            }
            if encode_structure(&s, &BTreeSet::new()).is_err() {
                continue; // not a forest
            }
            if out.iter().any(|o| crate::structures::isomorphic(o, &s)) {
                continue;
            }
            out.push(s);
        }
    }
    Ok(out)
}

/// Periodic chain candidates built from the type machinery of φ₁: a node
/// per chain position, folded where the type sequence repeats, unrolled
/// deep enough that the fold cannot disturb evaluation near the root.
fn lasso_candidates(phi1: &Formula, table1: &TypeTable, sig1: &Signature) -> Vec<LabeledTree> {
    let qd = guarded_depth(phi1) + 2;
    let mut out = Vec::new();
    let repr_atom = |t: usize, p: &str, shape: AtomShape| -> bool {
        let f = crate::structures::shape_formula(p, shape);
        table1.cl_contains(&f) && table1.val1(t, &f)
    };
    let type_atoms = |t: usize, to_y: bool| -> BTreeSet<(String, AtomShape)> {
        let mut set = BTreeSet::new();
        for (p, a) in &sig1.preds {
            match a {
                1 => {
                    if repr_atom(t, p, AtomShape::UnaryX) {
                        set.insert((
                            p.clone(),
                            if to_y { AtomShape::UnaryY } else { AtomShape::UnaryX },
                        ));
                    }
                }
                2 => {
                    if repr_atom(t, p, AtomShape::SelfX) {
                        set.insert((
                            p.clone(),
                            if to_y { AtomShape::SelfY } else { AtomShape::SelfX },
                        ));
                    }
                }
                _ => {}
            }
        }
        set
    };

    // chains over (type, λ to the next node)
    for t0 in 0..table1.tp1_count() {
        let mut stack: Vec<(Vec<usize>, Vec<usize>)> = vec![(vec![t0], vec![])];
        while let Some((types, links)) = stack.pop() {
            let t = *types.last().unwrap();
            let demands = table1.demands_of(t);
            if demands.len() != 1 {
                continue; // follow single-demand chains only
            }
            let (alpha, psi) = &demands[0];
            for l in 0..table1.tp2_count() {
                if table1.tp2[l].x != t || !table1.tp2[l].guarded() {
                    continue;
                }
                if !(table1.lambda_satisfies(l, alpha) && table1.lambda_satisfies(l, psi)) {
                    continue;
                }
                let ty = table1.tp2[l].y;
                if let Some(pos) = types.iter().position(|&u| u == ty) {
                    // fold: stem 0..pos, period pos..end
                    let mut ts = types.clone();
                    let mut ls = links.clone();
                    ls.push(l);
                    // unroll the period so the fold sits deep
                    let period_t: Vec<usize> = ts[pos..].to_vec();
                    let period_l: Vec<usize> = ls[pos..].to_vec();
                    let copies = 1 + qd / period_t.len().max(1);
                    for _ in 0..copies {
                        ts.extend_from_slice(&period_t);
                        ls.extend_from_slice(&period_l);
                    }
                    // nodes 0..ts.len(); child edges i -> i+1; fold: last
                    // links back to the start of the final period copy
                    let fold_target = ts.len() - period_t.len();
                    let mut nodes: Vec<TreeNode> = Vec::new();
                    for (i, &ti) in ts.iter().enumerate() {
                        let mut tau = AtomicType::two_type();
                        tau.pos.extend(type_atoms(ti, true));
                        if i > 0 {
                            tau.pos.extend(type_atoms(ts[i - 1], false));
                            let lam = &table1.tp2[ls[i - 1]];
                            for (p, s) in &lam.cross {
                                tau.pos.insert((p.clone(), *s));
                            }
                        }
                        let mut children = Vec::new();
                        if i + 1 < ts.len() {
                            children.push(i + 1);
                        } else {
                            children.push(fold_target);
                        }
                        nodes.push(TreeNode {
                            label: ThetaLabel { tau, marker: false },
                            children,
                        });
                    }
                    // the fold node must look the same from both parents
                    let last = ts.len() - 1;
                    let from_last = {
                        let mut set = type_atoms(ts[last], false);
                        for (p, s) in &table1.tp2[*ls.last().unwrap()].cross {
                            set.insert((p.clone(), *s));
                        }
                        set
                    };
                    let existing: BTreeSet<(String, AtomShape)> = nodes[fold_target]
                        .label
                        .tau
                        .pos
                        .iter()
                        .filter(|(_, s)| {
                            matches!(
                                s,
                                AtomShape::UnaryX | AtomShape::SelfX | AtomShape::Xy | AtomShape::Yx
                            )
                        })
                        .cloned()
                        .collect();
                    if existing != from_last {
                        continue; // inconsistent fold, skip
                    }
                    out.push(LabeledTree { root: 0, nodes });
                } else if types.len() < 4 {
                    let mut ts = types.clone();
                    let mut ls = links.clone();
                    ts.push(ty);
                    ls.push(l);
                    stack.push((ts, ls));
                }
            }
        }
    }
    out
}

/// Marker assignments for a presentation: every subset when small, plus
/// the all-marked fallback.
fn marker_variants(tree: &LabeledTree) -> Vec<LabeledTree> {
    let n = tree.nodes.len();
    let mut out = Vec::new();
    if n <= 6 {
        for mask in 0..(1usize << n) {
            let mut t = tree.clone();
            for (i, node) in t.nodes.iter_mut().enumerate() {
                node.label.marker = mask & (1 << i) != 0;
            }
            out.push(t);
        }
    } else {
        for all in [false, true] {
            let mut t = tree.clone();
            for node in t.nodes.iter_mut() {
                node.label.marker = all;
            }
            out.push(t);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// decide and the witness-sentence oracle
// ---------------------------------------------------------------------------

fn decide_entailment_direction(
    phi1: &Formula,
    phi2: &Formula,
    sigma: &Signature,
    budget: &Budget,
    stats: &mut Stats,
) -> Result<(bool, Option<Candidate>)> {
    let phi1 = normalize(phi1);
    let phi2 = normalize(phi2);
    validate_gf2_sentence(&phi1)?;
    validate_gf2_sentence(&phi2)?;
    let sig1 = signature_of(&phi1);

    let table2 = enumerate_types(&phi2, budget)?;
    let table1 = enumerate_types(&phi1, budget)?;
    stats.tp0 = table2.tp0_count();
    stats.tp1 = table2.tp1_count();
    stats.tp2 = table2.tp2_count();
    stats.a1_states = a1_state_count(&phi1);
    stats.a2_states = a2_state_count(&table2);
    stats.a3_states = 3;

    // finite candidates: exhaustive small forest models of φ₁
    let finites = finite_forest_models(&phi1, &sig1, 15)?;
    for s in &finites {
        let base = encode_structure(s, &BTreeSet::new())?;
        for marked in marker_variants(&base) {
            let cand = candidate_from_tree(marked, Some(s.clone()));
            stats.game_positions += cand.tree.nodes.len() * table2.tp1_count().max(1);
            if !a2_accepts_candidate(&table2, sigma, &cand) {
                return Ok((false, Some(cand)));
            }
        }
    }

    // periodic chains: rejection by the over-approximation is conclusive
    for lasso in lasso_candidates(&phi1, &table1, &sig1) {
        for marked in marker_variants(&lasso) {
            let cand = candidate_from_tree(marked, None);
            if !sentence_on_candidate(&phi1, &cand) {
                continue;
            }
            if !markers_ok(sigma, &cand) {
                continue;
            }
            stats.game_positions += cand.tree.nodes.len() * table2.tp1_count().max(1);
            if !a2_accepts_candidate(&table2, sigma, &cand) {
                return Ok((false, Some(cand)));
            }
        }
    }

    Ok((true, None))
}

/// Decides the problem. Conservative extensions and inseparability reduce
/// to one and two Σ-entailment calls.
pub fn decide(p: &Problem, budget: &Budget) -> Result<Verdict> {
    let start = Instant::now();
    let mut stats = Stats::default();
    let phi1 = normalize(&p.phi1);
    let phi2 = normalize(&p.phi2);

    let (answer, witness, sigma_reduced) = match p.mode {
        Mode::Entailment => {
            let sig1 = signature_of(&phi1);
            let sigma = p.sigma.intersect(&sig1);
            let reduced = sigma != p.sigma;
            let (ans, cand) =
                decide_entailment_direction(&phi1, &phi2, &sigma, budget, &mut stats)?;
            if ans {
                // independent fallback detector: a bounded witness sentence
                if let Some(psi) = witness_search_inner(&phi1, &phi2, &sigma, 2, 60, budget, 400)? {
                    let mut v = Verdict {
                        answer: false,
                        witness_tree: None,
                        witness_structure: None,
                        witness_sentence: Some(psi),
                        sigma_reduced: reduced,
                        stats: stats.clone(),
                    };
                    v.stats.millis = start.elapsed().as_millis();
                    return Ok(v);
                }
            }
            (ans, cand, reduced)
        }
        Mode::ConservativeExtension => {
            let sig1 = signature_of(&phi1);
            let combined = Formula::and(phi1.clone(), phi2.clone());
            let (ans, cand) =
                decide_entailment_direction(&phi1, &combined, &sig1, budget, &mut stats)?;
            (ans, cand, false)
        }
        Mode::Inseparability => {
            let sig1 = signature_of(&phi1);
            let sig2 = signature_of(&phi2);
            let s1 = p.sigma.intersect(&sig1);
            let s2 = p.sigma.intersect(&sig2);
            let reduced = s1 != p.sigma || s2 != p.sigma;
            let (a1, c1) = decide_entailment_direction(&phi1, &phi2, &s1, budget, &mut stats)?;
            if !a1 {
                (false, c1, reduced)
            } else {
                let (a2, c2) =
                    decide_entailment_direction(&phi2, &phi1, &s2, budget, &mut stats)?;
                (a2, c2, reduced)
            }
        }
    };

    let (witness_tree, witness_structure) = match witness {
        Some(c) => {
            let s = match &c.structure {
                Some(s) => Some(s.clone()),
                None => decode_tree(&c.tree.unfold(6)).ok(),
            };
            (Some(c.tree), s)
        }
        None => (None, None),
    };
    stats.millis = start.elapsed().as_millis();
    Ok(Verdict {
        answer,
        witness_tree,
        witness_structure,
        witness_sentence: None,
        sigma_reduced,
        stats,
    })
}

fn ast_size(f: &Formula) -> usize {
    match f {
        Formula::True | Formula::False | Formula::Eq(..) | Formula::Atom(..) => 1,
        Formula::Not(a) => 1 + ast_size(a),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            1 + ast_size(a) + ast_size(b)
        }
        Formula::Quantified { guard, body, .. } => {
            1 + guard.as_ref().map(|g| ast_size(g)).unwrap_or(0) + ast_size(body)
        }
    }
}

/// Canonical candidate witness sentences over Σ up to the given guarded
/// depth: point sentences over atomic Σ-types, and guarded clauses along a
/// single binary predicate.
pub fn witness_pool(sigma: &Signature, max_depth: usize) -> Vec<Formula> {
    let mut pool = vec![Formula::True];
    let unary: Vec<&String> = sigma.unary().collect();
    let binary: Vec<&String> = sigma.binary().collect();

    // literals over x
    let mut lits: Vec<Formula> = vec![];
    for u in &unary {
        lits.push(Formula::atom(u, &[X]));
        lits.push(Formula::not(Formula::atom(u, &[X])));
    }
    for bp in &binary {
        lits.push(Formula::atom(bp, &[X, X]));
        lits.push(Formula::not(Formula::atom(bp, &[X, X])));
    }
    if max_depth >= 1 {
        for l in &lits {
            pool.push(Formula::exists(X, Formula::Eq(X, X), l.clone()));
            pool.push(Formula::forall(X, Formula::Eq(X, X), l.clone()));
        }
    }
    if max_depth >= 2 {
        // bodies over the far end of a guarded step
        let mut bodies: Vec<Formula> = vec![
            Formula::Eq(X, Y),
            Formula::not(Formula::Eq(X, Y)),
            Formula::True,
            Formula::False,
        ];
        for u in &unary {
            bodies.push(Formula::atom(u, &[Y]));
            bodies.push(Formula::not(Formula::atom(u, &[Y])));
        }
        for bp in &binary {
            let guard = Formula::atom(bp, &[X, Y]);
            for body in &bodies {
                let fa = Formula::forall(Y, guard.clone(), body.clone());
                let ex = Formula::exists(Y, guard.clone(), body.clone());
                pool.push(Formula::forall(X, Formula::Eq(X, X), fa.clone()));
                pool.push(Formula::exists(X, Formula::Eq(X, X), ex.clone()));
                pool.push(Formula::exists(X, Formula::Eq(X, X), fa));
                pool.push(Formula::forall(X, Formula::Eq(X, X), ex));
            }
            // points with no successor
            let noedge = Formula::not(Formula::exists(Y, guard.clone(), Formula::True));
            pool.push(Formula::exists(X, Formula::Eq(X, X), noedge.clone()));
            pool.push(Formula::forall(X, Formula::Eq(X, X), noedge));
        }
    }
    pool.sort();
    pool.dedup();
    pool
}

fn witness_search_inner(
    phi1: &Formula,
    phi2: &Formula,
    sigma: &Signature,
    max_depth: usize,
    max_size: usize,
    budget: &Budget,
    cap: usize,
) -> Result<Option<Formula>> {
    let pool = witness_pool(sigma, max_depth);
    let mut candidates: Vec<Formula> = Vec::new();
    for c in &pool {
        candidates.push(c.clone());
    }
    for (i, a) in pool.iter().enumerate() {
        for b in pool.iter().skip(i + 1) {
            candidates.push(Formula::and(a.clone(), b.clone()));
        }
    }
    candidates.sort_by_key(|c| (guarded_depth(c), ast_size(c)));
    candidates.truncate(cap);
    let mut tried = 0usize;
    for psi in candidates {
        if guarded_depth(&psi) > max_depth || ast_size(&psi) > max_size {
            continue;
        }
        tried += 1;
        if tried > cap {
            break;
        }
        let with1 = Formula::and(phi1.clone(), psi.clone());
        let with2 = Formula::and(phi2.clone(), psi.clone());
        let s1 = match satisfiable(&with1, budget) {
            Ok(v) => v,
            Err(Error::Budget(_)) => continue,
            Err(e) => return Err(e),
        };
        if !s1 {
            continue;
        }
        let s2 = match satisfiable(&with2, budget) {
            Ok(v) => v,
            Err(Error::Budget(_)) => continue,
            Err(e) => return Err(e),
        };
        if !s2 {
            return Ok(Some(psi));
        }
    }
    Ok(None)
}

/// Searches for a witness sentence certifying non-entailment: ψ over Σ
/// with φ₁ ∧ ψ satisfiable and φ₂ ∧ ψ unsatisfiable. Absence within the
/// bounds proves nothing.
pub fn witness_search(
    p: &Problem,
    max_depth: usize,
    max_size: usize,
    budget: &Budget,
) -> Result<Option<Formula>> {
    if p.mode != Mode::Entailment {
        return Err(Error::Invalid(
            "witness search applies to entailment problems".into(),
        ));
    }
    let phi1 = normalize(&p.phi1);
    let phi2 = normalize(&p.phi2);
    let sigma = p.sigma.intersect(&signature_of(&phi1));
    witness_search_inner(&phi1, &phi2, &sigma, max_depth, max_size, budget, 4000)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acceptance::check_acceptance;
    use crate::structures::decode_tree_with_markers;
    use crate::syntax::parse;

    fn sig(pairs: &[(&str, usize)]) -> Signature {
        let mut s = Signature::new();
        for (n, a) in pairs {
            s.insert(n, *a);
        }
        s
    }

    fn phi1_ex2() -> Formula {
        parse("forall x. exists y. R(x,y)").unwrap()
    }
    fn phi1_prime_ex2() -> Formula {
        parse("forall x. exists y. (R(x,y) & x != y)").unwrap()
    }
    fn phi2_ex2() -> Formula {
        parse("forall x. (exists y. (R(x,y) & A(y)) & exists y. (R(x,y) & !A(y)))").unwrap()
    }

    fn self_loop_tree() -> LabeledTree {
        let mut s = FiniteStructure::new(&["a"]);
        s.add_binary("R", "a", "a");
        encode_structure(&s, &BTreeSet::new()).unwrap()
    }

    fn bare_node_tree() -> LabeledTree {
        let mut s = FiniteStructure::new(&["a"]);
        s.declare_binary("R");
        encode_structure(&s, &BTreeSet::new()).unwrap()
    }

    #[test]
    fn a1_accepts_models_and_rejects_others() {
        let phi1 = normalize(&phi1_ex2());
        let letters = theta_letters(&signature_of(&phi1)).unwrap();
        let a1 = build_a1(&phi1, &letters).unwrap();
        assert_eq!(a1.states(), a1_state_count(&phi1));
        let yes = tree_to_regular(&self_loop_tree(), &letters).unwrap();
        let no = tree_to_regular(&bare_node_tree(), &letters).unwrap();
        assert!(check_acceptance(&a1, &yes, &Budget::default()).unwrap());
        assert!(!check_acceptance(&a1, &no, &Budget::default()).unwrap());
    }

    #[test]
    fn a1_tautology_and_unary_constraint() {
        let sig1 = sig(&[("A", 1)]);
        let letters = theta_letters(&sig1).unwrap();
        let taut = normalize(&parse("forall x. (A(x) | !A(x))").unwrap());
        let a = build_a1(&taut, &letters).unwrap();
        let all_a = normalize(&parse("forall x. A(x)").unwrap());
        let b = build_a1(&all_a, &letters).unwrap();

        let mut with_a = FiniteStructure::new(&["e"]);
        with_a.add_unary("A", "e");
        let mut without = FiniteStructure::new(&["e"]);
        without.declare_unary("A");
        for (s, expect_b) in [(with_a, true), (without, false)] {
            let t = encode_structure(&s, &BTreeSet::new()).unwrap();
            let rt = tree_to_regular(&t, &letters).unwrap();
            assert!(check_acceptance(&a, &rt, &Budget::default()).unwrap());
            assert_eq!(
                check_acceptance(&b, &rt, &Budget::default()).unwrap(),
                expect_b
            );
        }
    }

    #[test]
    fn a2_example2_rejects_self_loop_accepts_for_phi1() {
        // Σ = {R}; the self-loop structure satisfies φ₁ ∧ (R ⊆ identity),
        // and no model of φ₂ matches it: A₂ must reject for every marking
        let phi2 = normalize(&phi2_ex2());
        let sigma = sig(&[("R", 2)]);
        let table = enumerate_types(&phi2, &Budget::default()).unwrap();
        for marked in marker_variants(&self_loop_tree()) {
            let cand = candidate_from_tree(marked, None);
            assert!(
                !a2_accepts_candidate(&table, &sigma, &cand),
                "A₂ must reject the self-loop witness"
            );
        }
        // with φ₂ := φ₁ (entailment of a sentence by itself), A₂ accepts
        let table_self = enumerate_types(&normalize(&phi1_ex2()), &Budget::default()).unwrap();
        for marked in marker_variants(&self_loop_tree()) {
            let cand = candidate_from_tree(marked, None);
            assert!(a2_accepts_candidate(&table_self, &sigma, &cand));
        }
    }

    #[test]
    fn a2_gfp_agrees_with_built_automaton() {
        // dual route: the semantic fixpoint vs the constructed automaton,
        // on finite candidate trees
        let phi2 = normalize(&phi2_ex2());
        let sigma = sig(&[("R", 2)]);
        let table = enumerate_types(&phi2, &Budget::default()).unwrap();
        let sig1 = sig(&[("R", 2)]);
        let letters = theta_letters(&sig1).unwrap();
        let a2 = build_a2(&table, &sigma, &letters).unwrap();
        assert_eq!(a2.states(), a2_state_count(&table));
        let mut checked = 0;
        for base in [self_loop_tree(), bare_node_tree()] {
            for marked in marker_variants(&base) {
                let cand = candidate_from_tree(marked.clone(), None);
                let semantic = a2_accepts_candidate(&table, &sigma, &cand);
                let rt = tree_to_regular(&marked, &letters).unwrap();
                let automaton = check_acceptance(&a2, &rt, &Budget::default()).unwrap();
                assert_eq!(semantic, automaton, "routes disagree on {marked:?}");
                checked += 1;
            }
        }
        assert!(checked >= 4);
    }

    #[test]
    fn a3_marker_condition() {
        let sigma = sig(&[("R", 2)]);
        let letters = theta_letters(&sigma).unwrap();
        let a3 = build_a3(&sigma, &letters);
        // finite tree, any markers: accepted
        let rt = tree_to_regular(&self_loop_tree(), &letters).unwrap();
        assert!(check_acceptance(&a3, &rt, &Budget::default()).unwrap());
        // the regular infinite Σ-path with all markers 0: rejected
        let mut tau_child = AtomicType::two_type();
        tau_child.pos.insert(("R".into(), AtomShape::Xy));
        let path = LabeledTree {
            root: 0,
            nodes: vec![
                TreeNode {
                    label: ThetaLabel {
                        tau: AtomicType::two_type(),
                        marker: false,
                    },
                    children: vec![1],
                },
                TreeNode {
                    label: ThetaLabel {
                        tau: tau_child.clone(),
                        marker: false,
                    },
                    children: vec![1],
                },
            ],
        };
        let rt = tree_to_regular(&path, &letters).unwrap();
        assert!(!check_acceptance(&a3, &rt, &Budget::default()).unwrap());
        // all markers 1: accepted
        let mut marked = path.clone();
        for n in marked.nodes.iter_mut() {
            n.label.marker = true;
        }
        let rt = tree_to_regular(&marked, &letters).unwrap();
        assert!(check_acceptance(&a3, &rt, &Budget::default()).unwrap());
        // markers also satisfy the graph-side check
        let cand = candidate_from_tree(marked, None);
        assert!(markers_ok(&sigma, &cand));
        let cand = candidate_from_tree(path, None);
        assert!(!markers_ok(&sigma, &cand));
    }

    #[test]
    fn decide_example2_not_entails() {
        let p = Problem {
            phi1: phi1_ex2(),
            phi2: phi2_ex2(),
            sigma: sig(&[("R", 2)]),
            mode: Mode::Entailment,
        };
        let v = decide(&p, &Budget::default()).unwrap();
        assert!(!v.answer);
        // the counterexample decodes to a structure satisfying φ₁
        if let Some(s) = &v.witness_structure {
            assert!(check_sentence(s, &normalize(&phi1_ex2())).unwrap());
        }
    }

    #[test]
    fn decide_example2_prime_entails() {
        let p = Problem {
            phi1: phi1_prime_ex2(),
            phi2: phi2_ex2(),
            sigma: sig(&[("R", 2)]),
            mode: Mode::Entailment,
        };
        let v = decide(&p, &Budget::default()).unwrap();
        assert!(v.answer, "GF² cannot count R-successors");
    }

    #[test]
    fn decide_section4_conservative_extension() {
        // φ₂ = φ₁ ∧ ∃x Bx ∧ ∀x(Bx → ∃y(Ryx ∧ By)): a conservative extension
        let phi2 = parse(
            "forall x. exists y. R(x,y) & exists x. B(x) & forall x. (B(x) -> exists y. (R(y,x) & B(y)))",
        )
        .unwrap();
        let p = Problem {
            phi1: phi1_ex2(),
            phi2,
            sigma: sig(&[("R", 2)]),
            mode: Mode::ConservativeExtension,
        };
        let v = decide(&p, &Budget::default()).unwrap();
        assert!(v.answer, "the B-path extension is conservative");
    }

    #[test]
    fn decide_reflexivity() {
        for text in [
            "forall x. exists y. R(x,y)",
            "exists x. A(x)",
            "forall x. (A(x) -> exists y. (R(x,y) & !A(y)))",
        ] {
            let f = parse(text).unwrap();
            let p = Problem {
                phi1: f.clone(),
                phi2: f.clone(),
                sigma: signature_of(&normalize(&f)),
                mode: Mode::Entailment,
            };
            let v = decide(&p, &Budget::default()).unwrap();
            assert!(v.answer, "reflexivity failed on {text}");
        }
    }

    #[test]
    fn witness_search_example2() {
        let p = Problem {
            phi1: phi1_ex2(),
            phi2: phi2_ex2(),
            sigma: sig(&[("R", 2)]),
            mode: Mode::Entailment,
        };
        let psi = witness_search(&p, 2, 60, &Budget::default())
            .unwrap()
            .expect("a witness of depth 2 exists");
        // ψ is equivalent to ∀x∀y(Rxy → x = y): check both directions by
        // satisfiability of the conjunctions with the negation
        let target = normalize(&parse("forall x y. (R(x,y) -> x = y)").unwrap());
        let psi = normalize(&psi);
        let dir1 = Formula::and(psi.clone(), negate_to_gf2(&target));
        let dir2 = Formula::and(target, negate_to_gf2(&psi));
        assert!(!satisfiable(&dir1, &Budget::default()).unwrap());
        assert!(!satisfiable(&dir2, &Budget::default()).unwrap());
    }

    /// Negation of a normalized GF² sentence, pushed inside to stay GF².
    fn negate_to_gf2(f: &Formula) -> Formula {
        match f {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Not(g) => (**g).clone(),
            Formula::And(a, b) => Formula::or(negate_to_gf2(a), negate_to_gf2(b)),
            Formula::Or(a, b) => Formula::and(negate_to_gf2(a), negate_to_gf2(b)),
            Formula::Implies(a, b) => Formula::and((**a).clone(), negate_to_gf2(b)),
            Formula::Quantified {
                quant,
                vars,
                guard,
                body,
            } => Formula::Quantified {
                quant: match quant {
                    Quant::Exists => Quant::Forall,
                    Quant::Forall => Quant::Exists,
                },
                vars: vars.clone(),
                guard: guard.clone(),
                body: Box::new(negate_to_gf2(body)),
            },
            _ => Formula::not(f.clone()),
        }
    }

    #[test]
    fn witness_absent_for_entailing_pairs() {
        let p = Problem {
            phi1: phi1_prime_ex2(),
            phi2: phi2_ex2(),
            sigma: sig(&[("R", 2)]),
            mode: Mode::Entailment,
        };
        assert!(witness_search(&p, 2, 60, &Budget::default()).unwrap().is_none());
    }

    #[test]
    fn consistency_automaton_accepts_canonical_encodings() {
        let sig1 = sig(&[("R", 2)]);
        let letters = theta_letters(&sig1).unwrap();
        let ac = build_consistency(&sig1, &letters);
        let rt = tree_to_regular(&self_loop_tree(), &letters).unwrap();
        assert!(check_acceptance(&ac, &rt, &Budget::default()).unwrap());
        // a lying root (claims a cross atom) is rejected
        let mut lying = self_loop_tree();
        lying.nodes[0]
            .label
            .tau
            .pos
            .insert(("R".into(), AtomShape::Xy));
        let rt = tree_to_regular(&lying, &letters).unwrap();
        assert!(!check_acceptance(&ac, &rt, &Budget::default()).unwrap());
    }

    #[test]
    fn decoded_markers_roundtrip() {
        let mut s = FiniteStructure::new(&["a", "b"]);
        s.add_binary("R", "a", "b");
        let mut markers = BTreeSet::new();
        markers.insert("a".to_string());
        let t = encode_structure(&s, &markers).unwrap();
        let (_, back) = decode_tree_with_markers(&t).unwrap();
        assert_eq!(back.len(), 1);
    }
}
