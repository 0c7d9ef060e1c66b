//! GF² satisfiability by type elimination, and the type machinery the
//! decision pipeline builds on: 0-, 1- and 2-types for a sentence,
//! compatibility, and neighborhoods.
//!
//! A candidate 1-type is a Boolean-coherent polarity assignment to the
//! one-variable closure formulas. Types whose guarded existential demands
//! cannot be met by a coherent 2-type with a surviving partner are deleted
//! until stable; the sentence is satisfiable iff some surviving group with a
//! common 0-type realizes all of its existential sentences.

use std::collections::{BTreeMap, BTreeSet};

use crate::structures::{extension_search, AtomShape, FiniteStructure};
use crate::syntax::{
    closure, normalize, validate_gf2_sentence, ClosureSet, Formula, Quant, Signature, X, Y,
};
use crate::{signature_of, Budget, Error, Result};

/// Classification of a one-variable closure core.
#[derive(Clone, Debug)]
enum CoreKind {
    /// truth value forced (true, false, x = x)
    Const(bool),
    /// unary or self-loop atom over x: a free choice
    AtomBase,
    /// Boolean combination: value derived from parts
    Derived,
    /// ∃v (v = v ∧ ψ): a sentence; positive occurrences demand a witness
    /// element somewhere; `inst` is ψ at the local element
    SentenceExists { inst: Formula },
    /// ∀v (v = v → ψ): negative occurrences demand a counterexample
    SentenceForall { inst: Formula },
    /// ∃y (α(x,y) ∧ ψ(x,y)) with a two-variable relational guard
    TwoVarExists { alpha: Formula, psi: Formula },
    /// ∀y (α(x,y) → ψ(x,y))
    TwoVarForall { alpha: Formula, psi: Formula },
}

/// A 2-type for φ: endpoint 1-types plus polarities of the representable
/// cross atoms; ¬(x = y) is implicit.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Lambda {
    pub x: usize,
    pub y: usize,
    /// positive cross atoms, shapes Xy / Yx only
    pub cross: BTreeSet<(String, AtomShape)>,
}

impl Lambda {
    pub fn guarded(&self) -> bool {
        !self.cross.is_empty()
    }

    pub fn sigma_guarded(&self, sigma: &Signature) -> bool {
        self.cross.iter().any(|(p, _)| sigma.contains(p))
    }

    pub fn swapped(&self) -> Lambda {
        Lambda {
            x: self.y,
            y: self.x,
            cross: self
                .cross
                .iter()
                .map(|(p, s)| {
                    let ns = match s {
                        AtomShape::Xy => AtomShape::Yx,
                        AtomShape::Yx => AtomShape::Xy,
                        other => *other,
                    };
                    (p.clone(), ns)
                })
                .collect(),
        }
    }
}

/// The enumerated type machinery of a normalized GF² sentence.
#[derive(Clone, Debug)]
pub struct TypeTable {
    pub phi: Formula,
    pub sig: Signature,
    pub cl: ClosureSet,
    /// one-variable cores (never negations), x-canonical, sorted
    cores: Vec<Formula>,
    core_idx: BTreeMap<Formula, usize>,
    kinds: Vec<CoreKind>,
    /// representable cross atoms over the binary predicates of `sig`
    pub cross_atoms: Vec<(String, AtomShape)>,
    /// surviving 1-types as total valuations over `cores`
    pub tp1: Vec<Vec<bool>>,
    /// distinct 0-types as polarity maps over the sentence cores
    pub tp0: Vec<BTreeMap<usize, bool>>,
    /// 0-type of each 1-type
    pub tp0_of: Vec<usize>,
    /// 2-types
    pub tp2: Vec<Lambda>,
    tp2_idx: BTreeMap<Lambda, usize>,
    /// two-variable demands of each 1-type not witnessed by the element
    /// itself: (guard, required body)
    demands: Vec<Vec<(Formula, Formula)>>,
}

impl TypeTable {
    pub fn tp1_count(&self) -> usize {
        self.tp1.len()
    }
    pub fn tp0_count(&self) -> usize {
        self.tp0.len()
    }
    pub fn tp2_count(&self) -> usize {
        self.tp2.len()
    }

    /// Value of a closure formula with free variables ⊆ {x} in 1-type `t`.
    pub fn val1(&self, t: usize, f: &Formula) -> bool {
        val_of(f, &self.tp1[t], &self.core_idx)
    }

    /// The member set of a 1-type: every closure core over x, in the
    /// polarity the type assigns.
    pub fn members1(&self, t: usize) -> Vec<Formula> {
        self.cores
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if self.tp1[t][i] {
                    c.clone()
                } else {
                    c.negate()
                }
            })
            .collect()
    }

    /// The member set of a 2-type, including ¬(x = y).
    pub fn members2(&self, l: usize) -> Vec<Formula> {
        let lam = &self.tp2[l];
        let mut out = vec![Formula::not(Formula::Eq(X, Y))];
        for m in self.members1(lam.x) {
            out.push(m);
        }
        for m in self.members1(lam.y) {
            out.push(m.swap_xy());
        }
        for (p, s) in &self.cross_atoms {
            let atom = crate::structures::shape_formula(p, *s);
            if lam.cross.contains(&(p.clone(), *s)) {
                out.push(atom);
            } else {
                out.push(Formula::not(atom));
            }
        }
        out
    }

    pub fn lambda_x(&self, l: usize) -> usize {
        self.tp2[l].x
    }

    pub fn lambda_y(&self, l: usize) -> usize {
        self.tp2[l].y
    }

    /// λ⁻ as an index into tp2.
    pub fn lambda_swap(&self, l: usize) -> usize {
        self.tp2_idx[&self.tp2[l].swapped()]
    }

    pub fn cl_contains(&self, f: &Formula) -> bool {
        self.cl.contains(f)
    }

    /// λ compatible with t: φ ∧ ∃xy (t(x) ∧ λ(x,y)) is satisfiable. For
    /// maximal types this reduces to λ_x = t: the conjunction repeats λ's
    /// own x-side or contradicts it.
    pub fn compatible(&self, t: usize, l: usize) -> bool {
        self.tp2[l].x == t
    }

    /// Neighborhood test: T is a set of guarded 2-types with left endpoint
    /// t that can be jointly realized around a t-element while exhausting
    /// its guarded links.
    pub fn neighborhood(&self, t: usize, ts: &[usize]) -> Result<bool> {
        for &l in ts {
            if !self.tp2[l].guarded() {
                return Err(Error::Invalid(
                    "neighborhoods admit only guarded 2-types".into(),
                ));
            }
        }
        if ts.iter().any(|&l| self.tp2[l].x != t) {
            return Ok(false);
        }
        for (alpha, psi) in &self.demands[t] {
            let ok = ts
                .iter()
                .any(|&l| self.val2(&self.tp2[l], alpha) && self.val2(&self.tp2[l], psi));
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// All inclusion-minimal neighborhoods of t. Contains the empty set
    /// exactly when t has no unmet demands.
    pub fn minimal_neighborhoods(&self, t: usize) -> Vec<Vec<usize>> {
        let dem = &self.demands[t];
        if dem.is_empty() {
            return vec![vec![]];
        }
        let cands: Vec<usize> = (0..self.tp2.len())
            .filter(|&l| self.tp2[l].x == t && self.tp2[l].guarded())
            .collect();
        let mut per: Vec<Vec<usize>> = Vec::new();
        for (alpha, psi) in dem {
            let ws: Vec<usize> = cands
                .iter()
                .copied()
                .filter(|&l| self.val2(&self.tp2[l], alpha) && self.val2(&self.tp2[l], psi))
                .collect();
            if ws.is_empty() {
                return vec![];
            }
            per.push(ws);
        }
        fn rec(
            per: &[Vec<usize>],
            i: usize,
            cur: &mut BTreeSet<usize>,
            out: &mut BTreeSet<BTreeSet<usize>>,
        ) {
            if out.len() > 4096 {
                return;
            }
            if i == per.len() {
                out.insert(cur.clone());
                return;
            }
            for &w in &per[i] {
                let fresh = cur.insert(w);
                rec(per, i + 1, cur, out);
                if fresh {
                    cur.remove(&w);
                }
            }
        }
        let mut covers: BTreeSet<BTreeSet<usize>> = BTreeSet::new();
        rec(&per, 0, &mut BTreeSet::new(), &mut covers);
        let list: Vec<BTreeSet<usize>> = covers.into_iter().collect();
        list.iter()
            .filter(|c| !list.iter().any(|d| d.len() < c.len() && d.is_subset(c)))
            .map(|c| c.iter().copied().collect())
            .collect()
    }

    pub fn demands_of(&self, t: usize) -> &[(Formula, Formula)] {
        &self.demands[t]
    }

    /// Truth of a closure formula with free variables ⊆ {x,y} in a 2-type.
    pub fn lambda_satisfies(&self, l: usize, f: &Formula) -> bool {
        self.val2(&self.tp2[l], f)
    }

    /// The existential witness obligations of a 0-type: local instances ψ(x)
    /// of positive sentences ∃v(v = v ∧ ψ) and negated ∀v(v = v → ψ).
    pub fn tp0_exists_demands(&self, s: usize) -> Vec<Formula> {
        let mut out = Vec::new();
        for (&core, &pos) in &self.tp0[s] {
            match &self.kinds[core] {
                CoreKind::SentenceExists { inst } if pos => out.push(inst.clone()),
                CoreKind::SentenceForall { inst } if !pos => out.push(inst.negate()),
                _ => {}
            }
        }
        out
    }

    /// Value of a closure formula with free variables ⊆ {x,y} in a 2-type.
    fn val2(&self, lam: &Lambda, f: &Formula) -> bool {
        match f {
            Formula::True => true,
            Formula::False => false,
            Formula::Eq(a, b) => a == b,
            Formula::Not(g) => !self.val2(lam, g),
            Formula::And(a, b) => self.val2(lam, a) && self.val2(lam, b),
            Formula::Or(a, b) => self.val2(lam, a) || self.val2(lam, b),
            Formula::Implies(a, b) => !self.val2(lam, a) || self.val2(lam, b),
            _ => {
                let fv = f.free_vars();
                if fv.contains(&X) && fv.contains(&Y) {
                    match f {
                        Formula::Atom(p, vs) if vs.len() == 2 => {
                            let shape = if vs[0] == X {
                                AtomShape::Xy
                            } else {
                                AtomShape::Yx
                            };
                            lam.cross.contains(&(p.clone(), shape))
                        }
                        _ => unreachable!("two-variable closure members decompose to atoms"),
                    }
                } else if fv.contains(&Y) {
                    let renamed = f.rename(&|v| if v == Y { X } else { v });
                    val_of(&renamed, &self.tp1[lam.y], &self.core_idx)
                } else {
                    val_of(f, &self.tp1[lam.x], &self.core_idx)
                }
            }
        }
    }
}

fn val_of(f: &Formula, v: &[bool], idx: &BTreeMap<Formula, usize>) -> bool {
    match f {
        Formula::Not(g) => !val_of(g, v, idx),
        _ => match idx.get(f) {
            Some(i) => v[*i],
            None => match f {
                Formula::True => true,
                Formula::False => false,
                Formula::Eq(a, b) => a == b,
                Formula::And(a, b) => val_of(a, v, idx) && val_of(b, v, idx),
                Formula::Or(a, b) => val_of(a, v, idx) || val_of(b, v, idx),
                Formula::Implies(a, b) => !val_of(a, v, idx) || val_of(b, v, idx),
                _ => panic!("formula outside the closure: {f}"),
            },
        },
    }
}

/// Enumerates the complete type machinery for a GF² sentence (normalized
/// internally; normalization is idempotent).
pub fn enumerate_types(phi: &Formula, budget: &Budget) -> Result<TypeTable> {
    validate_gf2_sentence(phi)?;
    let phi = normalize(phi);
    let sig = signature_of(&phi);
    let cl = closure(&phi);

    let mut cores: Vec<Formula> = Vec::new();
    for m in &cl.members {
        if matches!(m, Formula::Not(_)) {
            continue;
        }
        if m.free_vars().contains(&Y) {
            continue;
        }
        cores.push(m.clone());
    }
    cores.sort();
    let core_idx: BTreeMap<Formula, usize> = cores
        .iter()
        .enumerate()
        .map(|(i, c)| (c.clone(), i))
        .collect();

    let kinds: Vec<CoreKind> = cores
        .iter()
        .map(classify_core)
        .collect::<Result<_>>()?;

    let base: Vec<usize> = kinds
        .iter()
        .enumerate()
        .filter(|(_, k)| {
            matches!(
                k,
                CoreKind::AtomBase
                    | CoreKind::SentenceExists { .. }
                    | CoreKind::SentenceForall { .. }
                    | CoreKind::TwoVarExists { .. }
                    | CoreKind::TwoVarForall { .. }
            )
        })
        .map(|(i, _)| i)
        .collect();
    if base.len() > budget.type_formulas {
        return Err(Error::Budget(format!(
            "{} independent one-variable closure formulas exceed the type budget {}",
            base.len(),
            budget.type_formulas
        )));
    }

    let mut cross_atoms: Vec<(String, AtomShape)> = Vec::new();
    for p in sig.binary() {
        for s in [AtomShape::Xy, AtomShape::Yx] {
            if cl.contains(&crate::structures::shape_formula(p, s)) {
                cross_atoms.push((p.clone(), s));
            }
        }
    }

    let mut candidates: Vec<Vec<bool>> = Vec::new();
    let mut assign: Vec<Option<bool>> = vec![None; cores.len()];
    enumerate_rec(
        &cores, &kinds, &core_idx, &phi, &base, 0, &mut assign, &mut candidates,
    );

    // eliminate types whose demands cannot be met by a coherent 2-type
    // whose other endpoint survives
    let demand_list: Vec<Vec<(Formula, Formula)>> = candidates
        .iter()
        .map(|v| unmet_demands(&kinds, &core_idx, v))
        .collect();
    let cross_opts = cross_assignments(&cross_atoms);
    let mut alive: Vec<bool> = vec![true; candidates.len()];
    loop {
        let mut changed = false;
        for i in 0..candidates.len() {
            if !alive[i] {
                continue;
            }
            for (alpha, psi) in &demand_list[i] {
                let mut witnessed = false;
                'outer: for (j, cand) in candidates.iter().enumerate() {
                    if !alive[j] || !sentence_agree(&kinds, &candidates[i], cand) {
                        continue;
                    }
                    for cross in &cross_opts {
                        let lam = LambdaView {
                            x: &candidates[i],
                            y: cand,
                            cross,
                        };
                        if lam.coherent(&kinds, &core_idx)
                            && lam.val(alpha, &core_idx)
                            && lam.val(psi, &core_idx)
                        {
                            witnessed = true;
                            break 'outer;
                        }
                    }
                }
                if !witnessed {
                    alive[i] = false;
                    changed = true;
                    break;
                }
            }
        }
        if !changed {
            break;
        }
    }

    // keep groups with a realizable 0-type
    let sentence_cores: Vec<usize> = cores
        .iter()
        .enumerate()
        .filter(|(_, c)| c.is_sentence())
        .map(|(i, _)| i)
        .collect();
    let mut groups: BTreeMap<Vec<bool>, Vec<usize>> = BTreeMap::new();
    for (i, cand) in candidates.iter().enumerate() {
        if alive[i] {
            let key: Vec<bool> = sentence_cores.iter().map(|&c| cand[c]).collect();
            groups.entry(key).or_default().push(i);
        }
    }
    let mut kept: Vec<usize> = Vec::new();
    for members in groups.values() {
        let rep = &candidates[members[0]];
        let mut ok = true;
        for (c, k) in kinds.iter().enumerate() {
            let need = match k {
                CoreKind::SentenceExists { inst } if rep[c] => Some((inst, true)),
                CoreKind::SentenceForall { inst } if !rep[c] => Some((inst, false)),
                _ => None,
            };
            if let Some((inst, want)) = need {
                let witnessed = members
                    .iter()
                    .any(|&m| val_of(inst, &candidates[m], &core_idx) == want);
                if !witnessed {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            kept.extend(members.iter().copied());
        }
    }
    kept.sort();

    let tp1: Vec<Vec<bool>> = kept.iter().map(|&i| candidates[i].clone()).collect();
    let mut tp0: Vec<BTreeMap<usize, bool>> = Vec::new();
    let mut tp0_keys: BTreeMap<Vec<bool>, usize> = BTreeMap::new();
    let mut tp0_of: Vec<usize> = Vec::new();
    for v in &tp1 {
        let key: Vec<bool> = sentence_cores.iter().map(|&c| v[c]).collect();
        let id = *tp0_keys.entry(key).or_insert_with(|| {
            let id = tp0.len();
            tp0.push(sentence_cores.iter().map(|&c| (c, v[c])).collect());
            id
        });
        tp0_of.push(id);
    }

    let mut tp2: Vec<Lambda> = Vec::new();
    for (ix, vx) in tp1.iter().enumerate() {
        for (iy, vy) in tp1.iter().enumerate() {
            if !sentence_agree(&kinds, vx, vy) {
                continue;
            }
            for cross in &cross_opts {
                let lam = LambdaView {
                    x: vx,
                    y: vy,
                    cross,
                };
                if lam.coherent(&kinds, &core_idx) {
                    tp2.push(Lambda {
                        x: ix,
                        y: iy,
                        cross: cross.clone(),
                    });
                }
            }
        }
    }
    tp2.sort();
    tp2.dedup();
    let tp2_idx: BTreeMap<Lambda, usize> = tp2
        .iter()
        .enumerate()
        .map(|(i, l)| (l.clone(), i))
        .collect();

    let demands: Vec<Vec<(Formula, Formula)>> = tp1
        .iter()
        .map(|v| unmet_demands(&kinds, &core_idx, v))
        .collect();

    Ok(TypeTable {
        phi,
        sig,
        cl,
        cores,
        core_idx,
        kinds,
        cross_atoms,
        tp1,
        tp0,
        tp0_of,
        tp2,
        tp2_idx,
        demands,
    })
}

fn classify_core(c: &Formula) -> Result<CoreKind> {
    Ok(match c {
        Formula::True => CoreKind::Const(true),
        Formula::False => CoreKind::Const(false),
        Formula::Eq(a, b) => CoreKind::Const(a == b),
        Formula::Atom(..) => CoreKind::AtomBase,
        Formula::And(..) | Formula::Or(..) | Formula::Implies(..) => CoreKind::Derived,
        Formula::Not(_) => unreachable!("cores are never negations"),
        Formula::Quantified {
            quant,
            vars,
            guard,
            body,
        } => {
            if vars.len() != 1 || guard.is_none() {
                return Err(Error::NotGf2(format!("quantifier not normalized: {c}")));
            }
            let v = vars[0];
            let g = guard.as_ref().unwrap();
            match &**g {
                Formula::Eq(a, b) if a == b => {
                    let inst = body.subst(v, X);
                    match quant {
                        Quant::Exists => CoreKind::SentenceExists { inst },
                        Quant::Forall => CoreKind::SentenceForall { inst },
                    }
                }
                Formula::Atom(_, vs) if vs.len() == 2 && vs.contains(&X) && vs.contains(&Y) => {
                    debug_assert!(v == Y, "x-canonical cores bind y");
                    match quant {
                        Quant::Exists => CoreKind::TwoVarExists {
                            alpha: (**g).clone(),
                            psi: (**body).clone(),
                        },
                        Quant::Forall => CoreKind::TwoVarForall {
                            alpha: (**g).clone(),
                            psi: (**body).clone(),
                        },
                    }
                }
                _ => return Err(Error::NotGf2(format!("unsupported guard in {c}"))),
            }
        }
    })
}

/// Self-instance of a two-variable formula: y renamed to x.
fn self_inst(f: &Formula) -> Formula {
    f.rename(&|v| if v == Y { X } else { v })
}

#[allow(clippy::too_many_arguments)]
fn enumerate_rec(
    cores: &[Formula],
    kinds: &[CoreKind],
    idx: &BTreeMap<Formula, usize>,
    phi: &Formula,
    base: &[usize],
    i: usize,
    assign: &mut Vec<Option<bool>>,
    out: &mut Vec<Vec<bool>>,
) {
    if i == base.len() {
        // first the forced and chosen cores, then Boolean cores evaluated
        // structurally down to those leaves (core order is lexicographic,
        // not topological)
        let mut v = vec![false; cores.len()];
        for (c, k) in kinds.iter().enumerate() {
            match k {
                CoreKind::Const(b) => v[c] = *b,
                CoreKind::Derived => {}
                _ => v[c] = assign[c].unwrap(),
            }
        }
        fn structural(f: &Formula, v: &[bool], idx: &BTreeMap<Formula, usize>) -> bool {
            match f {
                Formula::True => true,
                Formula::False => false,
                Formula::Eq(a, b) => a == b,
                Formula::Not(g) => !structural(g, v, idx),
                Formula::And(a, b) => structural(a, v, idx) && structural(b, v, idx),
                Formula::Or(a, b) => structural(a, v, idx) || structural(b, v, idx),
                Formula::Implies(a, b) => !structural(a, v, idx) || structural(b, v, idx),
                _ => v[idx[f]],
            }
        }
        for (c, k) in kinds.iter().enumerate() {
            if matches!(k, CoreKind::Derived) {
                v[c] = structural(&cores[c], &v, idx);
            }
        }
        if !coherent_locally(kinds, idx, &v) {
            return;
        }
        if !val_of(phi, &v, idx) {
            return;
        }
        out.push(v);
        return;
    }
    for b in [false, true] {
        assign[base[i]] = Some(b);
        enumerate_rec(cores, kinds, idx, phi, base, i + 1, assign, out);
    }
    assign[base[i]] = None;
}

/// Local Hintikka conditions on a complete valuation: self-instances of
/// universal members hold, negative existentials are not self-witnessed,
/// sentence members constrain their local instances.
fn coherent_locally(kinds: &[CoreKind], idx: &BTreeMap<Formula, usize>, v: &[bool]) -> bool {
    for (c, k) in kinds.iter().enumerate() {
        match k {
            CoreKind::TwoVarForall { alpha, psi } => {
                if v[c]
                    && val_of(&self_inst(alpha), v, idx)
                    && !val_of(&self_inst(psi), v, idx)
                {
                    return false;
                }
            }
            CoreKind::TwoVarExists { alpha, psi } => {
                if !v[c]
                    && val_of(&self_inst(alpha), v, idx)
                    && val_of(&self_inst(psi), v, idx)
                {
                    return false;
                }
            }
            CoreKind::SentenceExists { inst } => {
                if !v[c] && val_of(inst, v, idx) {
                    return false;
                }
            }
            CoreKind::SentenceForall { inst } => {
                if v[c] && !val_of(inst, v, idx) {
                    return false;
                }
            }
            _ => {}
        }
    }
    true
}

/// Two-variable demands not witnessed by the element itself: positive
/// guarded existentials and negated guarded universals.
fn unmet_demands(
    kinds: &[CoreKind],
    idx: &BTreeMap<Formula, usize>,
    v: &[bool],
) -> Vec<(Formula, Formula)> {
    let mut out = Vec::new();
    for (c, k) in kinds.iter().enumerate() {
        match k {
            CoreKind::TwoVarExists { alpha, psi } if v[c] => {
                let selfok =
                    val_of(&self_inst(alpha), v, idx) && val_of(&self_inst(psi), v, idx);
                if !selfok {
                    out.push((alpha.clone(), psi.clone()));
                }
            }
            CoreKind::TwoVarForall { alpha, psi } if !v[c] => {
                let neg = psi.negate();
                let selfok =
                    val_of(&self_inst(alpha), v, idx) && val_of(&self_inst(&neg), v, idx);
                if !selfok {
                    out.push((alpha.clone(), neg));
                }
            }
            _ => {}
        }
    }
    out
}

fn sentence_agree(kinds: &[CoreKind], a: &[bool], b: &[bool]) -> bool {
    kinds.iter().enumerate().all(|(c, k)| {
        !matches!(
            k,
            CoreKind::SentenceExists { .. } | CoreKind::SentenceForall { .. }
        ) || a[c] == b[c]
    })
}

fn cross_assignments(atoms: &[(String, AtomShape)]) -> Vec<BTreeSet<(String, AtomShape)>> {
    let mut out = Vec::with_capacity(1 << atoms.len());
    for mask in 0..(1u32 << atoms.len() as u32) {
        let mut set = BTreeSet::new();
        for (i, a) in atoms.iter().enumerate() {
            if mask & (1 << i) != 0 {
                set.insert(a.clone());
            }
        }
        out.push(set);
    }
    out
}

/// A 2-type candidate before interning.
struct LambdaView<'a> {
    x: &'a [bool],
    y: &'a [bool],
    cross: &'a BTreeSet<(String, AtomShape)>,
}

impl<'a> LambdaView<'a> {
    fn val(&self, f: &Formula, idx: &BTreeMap<Formula, usize>) -> bool {
        match f {
            Formula::True => true,
            Formula::False => false,
            Formula::Eq(a, b) => a == b,
            Formula::Not(g) => !self.val(g, idx),
            Formula::And(a, b) => self.val(a, idx) && self.val(b, idx),
            Formula::Or(a, b) => self.val(a, idx) || self.val(b, idx),
            Formula::Implies(a, b) => !self.val(a, idx) || self.val(b, idx),
            _ => {
                let fv = f.free_vars();
                if fv.contains(&X) && fv.contains(&Y) {
                    match f {
                        Formula::Atom(p, vs) if vs.len() == 2 => {
                            let shape = if vs[0] == X {
                                AtomShape::Xy
                            } else {
                                AtomShape::Yx
                            };
                            self.cross.contains(&(p.clone(), shape))
                        }
                        _ => unreachable!("two-variable non-atom leaf"),
                    }
                } else if fv.contains(&Y) {
                    let renamed = f.rename(&|v| if v == Y { X } else { v });
                    val_of(&renamed, self.y, idx)
                } else {
                    val_of(f, self.x, idx)
                }
            }
        }
    }

    /// Pair coherence: universal members of either endpoint hold for the
    /// link, negative existentials are not witnessed by it, and sentence
    /// members agree (checked separately).
    fn coherent(&self, kinds: &[CoreKind], idx: &BTreeMap<Formula, usize>) -> bool {
        for (c, k) in kinds.iter().enumerate() {
            match k {
                CoreKind::TwoVarForall { alpha, psi } => {
                    if self.x[c] && self.val(alpha, idx) && !self.val(psi, idx) {
                        return false;
                    }
                    if self.y[c] {
                        let asw = alpha.swap_xy();
                        let psw = psi.swap_xy();
                        if self.val(&asw, idx) && !self.val(&psw, idx) {
                            return false;
                        }
                    }
                }
                CoreKind::TwoVarExists { alpha, psi } => {
                    if !self.x[c] && self.val(alpha, idx) && self.val(psi, idx) {
                        return false;
                    }
                    if !self.y[c] {
                        let asw = alpha.swap_xy();
                        let psw = psi.swap_xy();
                        if self.val(&asw, idx) && self.val(&psw, idx) {
                            return false;
                        }
                    }
                }
                _ => {}
            }
        }
        true
    }
}

/// GF² satisfiability by type elimination.
pub fn satisfiable(f: &Formula, budget: &Budget) -> Result<bool> {
    let table = enumerate_types(f, budget)?;
    Ok(table.tp1_count() > 0)
}

/// Bounded model search: a model of size ≤ max_size if one exists within
/// the budget. Absence proves nothing.
pub fn small_model(
    f: &Formula,
    max_size: usize,
    budget: &Budget,
) -> Result<Option<FiniteStructure>> {
    let f = normalize(f);
    let sig = signature_of(&f);
    for n in 1..=max_size {
        let names: Vec<String> = (0..n).map(|i| format!("e{i}")).collect();
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let empty = FiniteStructure::new(&refs);
        match extension_search(&empty, &sig, &f, budget) {
            Ok(Some(m)) => return Ok(Some(m)),
            Ok(None) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::check_sentence;
    use crate::syntax::parse;

    fn sat(s: &str) -> bool {
        satisfiable(&normalize(&parse(s).unwrap()), &Budget::default()).unwrap()
    }

    #[test]
    fn contradiction_unsat() {
        assert!(!sat("exists x. (A(x) & !A(x))"));
    }

    #[test]
    fn simple_sat() {
        assert!(sat("exists x. A(x)"));
        assert!(sat("true"));
        assert!(sat("forall x. (A(x) -> exists y. (R(x,y) & B(y)))"));
    }

    #[test]
    fn example2_phi1_with_psi_sat() {
        // φ₁ ∧ ∀xy(Rxy → x=y): the self-loop model
        assert!(sat(
            "forall x. exists y. R(x,y) & forall x y. (R(x,y) -> x = y)"
        ));
    }

    #[test]
    fn example2_phi2_with_psi_unsat() {
        // φ₂ needs an A- and a ¬A-successor; R ⊆ identity pushes both onto
        // the element itself
        assert!(!sat(
            "forall x. (exists y. (R(x,y) & A(y)) & exists y. (R(x,y) & !A(y))) & forall x y. (R(x,y) -> x = y)"
        ));
    }

    #[test]
    fn example2_phi2_sat_alone() {
        assert!(sat(
            "forall x. (exists y. (R(x,y) & A(y)) & exists y. (R(x,y) & !A(y)))"
        ));
    }

    #[test]
    fn distinct_successor_demand_sat() {
        assert!(sat("forall x. exists y. (R(x,y) & x != y)"));
    }

    #[test]
    fn unsat_by_propagation() {
        assert!(!sat("exists x. B(x) & forall x. !B(x)"));
    }

    #[test]
    fn tp0_contains_phi() {
        let phi = normalize(&parse("exists x. A(x)").unwrap());
        let t = enumerate_types(&phi, &Budget::default()).unwrap();
        assert_eq!(t.tp0_count(), 1);
        for i in 0..t.tp1_count() {
            assert!(t.val1(i, &t.phi.clone()));
        }
    }

    #[test]
    fn tp2_projections_closed() {
        let phi = normalize(
            &parse("forall x. (exists y. (R(x,y) & A(y)) & exists y. (R(x,y) & !A(y)))").unwrap(),
        );
        let t = enumerate_types(&phi, &Budget::default()).unwrap();
        assert!(t.tp2_count() > 0);
        for l in 0..t.tp2_count() {
            let lx = t.lambda_x(l);
            let ly = t.lambda_y(l);
            assert!(lx < t.tp1_count() && ly < t.tp1_count());
            let sw = t.lambda_swap(l);
            assert_eq!(t.lambda_x(sw), ly);
            assert_eq!(t.lambda_y(sw), lx);
            let members = t.members2(l);
            assert!(members.contains(&Formula::not(Formula::Eq(X, Y))));
        }
    }

    #[test]
    fn compatible_requires_matching_projection() {
        let phi = normalize(&parse("forall x. exists y. R(x,y)").unwrap());
        let t = enumerate_types(&phi, &Budget::default()).unwrap();
        for l in 0..t.tp2_count() {
            let lx = t.lambda_x(l);
            assert!(t.compatible(lx, l));
            for other in 0..t.tp1_count() {
                if other != lx {
                    assert!(!t.compatible(other, l));
                }
            }
        }
    }

    #[test]
    fn neighborhood_empty_for_demand_free_type() {
        let phi = normalize(&parse("exists x. A(x)").unwrap());
        let t = enumerate_types(&phi, &Budget::default()).unwrap();
        for i in 0..t.tp1_count() {
            assert!(t.neighborhood(i, &[]).unwrap());
        }
    }

    #[test]
    fn neighborhood_rejects_unguarded_member() {
        let phi = normalize(&parse("forall x. exists y. R(x,y)").unwrap());
        let t = enumerate_types(&phi, &Budget::default()).unwrap();
        if let Some(l) = (0..t.tp2_count()).find(|&l| !t.tp2[l].guarded()) {
            let tx = t.lambda_x(l);
            assert!(t.neighborhood(tx, &[l]).is_err());
        }
    }

    #[test]
    fn neighborhood_covers_demands() {
        let phi = normalize(&parse("forall x. exists y. (R(x,y) & x != y)").unwrap());
        let t = enumerate_types(&phi, &Budget::default()).unwrap();
        for i in 0..t.tp1_count() {
            let mins = t.minimal_neighborhoods(i);
            assert!(!mins.is_empty(), "every surviving type has a neighborhood");
            for ts in &mins {
                assert!(t.neighborhood(i, ts).unwrap());
            }
            if !t.demands_of(i).is_empty() {
                assert!(mins.iter().all(|ts| !ts.is_empty()));
                assert!(!t.neighborhood(i, &[]).unwrap());
            }
        }
    }

    #[test]
    fn small_model_finds_witnesses() {
        let f = normalize(&parse("exists x. A(x)").unwrap());
        let m = small_model(&f, 2, &Budget::default()).unwrap().unwrap();
        assert!(check_sentence(&m, &f).unwrap());
        assert_eq!(m.domain.len(), 1);
    }

    #[test]
    fn small_model_example2_phi2() {
        let f = normalize(
            &parse("forall x. (exists y. (R(x,y) & A(y)) & exists y. (R(x,y) & !A(y)))").unwrap(),
        );
        let m = small_model(&f, 3, &Budget::default()).unwrap().unwrap();
        assert!(check_sentence(&m, &f).unwrap());
        assert!(m.domain.len() <= 3);
    }

    #[test]
    fn small_model_absent_for_unsat() {
        let f = normalize(&parse("exists x. (A(x) & !A(x))").unwrap());
        for n in 1..=3 {
            assert!(small_model(&f, n, &Budget::default()).unwrap().is_none());
        }
    }

    #[test]
    fn small_model_implies_satisfiable() {
        for s in [
            "exists x. A(x)",
            "exists x. (A(x) & !A(x))",
            "forall x. exists y. R(x,y)",
            "exists x. (A(x) & exists y. (R(x,y) & !A(y)))",
        ] {
            let f = normalize(&parse(s).unwrap());
            if small_model(&f, 3, &Budget::default()).unwrap().is_some() {
                assert!(
                    satisfiable(&f, &Budget::default()).unwrap(),
                    "small model exists but satisfiable says no: {s}"
                );
            }
        }
    }

    #[test]
    fn type_realizability_self_consistency() {
        let phi = normalize(&parse("forall x. (A(x) -> exists y. (R(x,y) & B(y)))").unwrap());
        let t = enumerate_types(&phi, &Budget::default()).unwrap();
        assert!(t.tp1_count() > 0);
        for i in 0..t.tp1_count() {
            let conj = Formula::conj(t.members1(i));
            let sentence = Formula::and(phi.clone(), Formula::exists(X, Formula::Eq(X, X), conj));
            assert!(
                satisfiable(&sentence, &Budget::default()).unwrap(),
                "1-type {i} not realizable with phi"
            );
        }
    }

    #[test]
    fn compatible_matches_sentence_satisfiability_on_guarded_types() {
        // dual route: for guarded λ, t ≈ λ iff φ ∧ ∃x(x=x ∧ t(x) ∧ ∃y λ(x,y))
        // is satisfiable, with the guard of λ lifted out
        let phi = normalize(&parse("forall x. exists y. (R(x,y) & x != y)").unwrap());
        let t = enumerate_types(&phi, &Budget::default()).unwrap();
        let mut checked = 0;
        for l in 0..t.tp2_count() {
            let lam = &t.tp2[l];
            if !lam.guarded() {
                continue;
            }
            let guard_atom = {
                let (p, s) = lam.cross.iter().next().unwrap();
                crate::structures::shape_formula(p, *s)
            };
            for ti in 0..t.tp1_count() {
                let mut conj = t.members1(ti);
                let lam_conj: Vec<Formula> = t
                    .members2(l)
                    .into_iter()
                    .filter(|m| *m != guard_atom)
                    .collect();
                conj.push(Formula::exists(Y, guard_atom.clone(), Formula::conj(lam_conj)));
                let sentence = Formula::and(
                    phi.clone(),
                    Formula::exists(X, Formula::Eq(X, X), Formula::conj(conj)),
                );
                let by_sat = satisfiable(&sentence, &Budget::default()).unwrap();
                assert_eq!(
                    by_sat,
                    t.compatible(ti, l),
                    "compatibility shortcut disagrees with satisfiability"
                );
                checked += 1;
                if checked > 12 {
                    return;
                }
            }
        }
    }
}
