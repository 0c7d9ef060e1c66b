//! Finite relational structures, model checking, atomic type extraction and
//! the Θ-labeled-tree encoding/decoding used by the decision pipeline.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::syntax::{Formula, Quant, Signature, Var, X, Y};
use crate::{Budget, Error, Result};

/// A finite relational structure over unary/binary (and, for gadget
/// verification only, ternary) predicates with equality semantics.
#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
pub struct FiniteStructure {
    pub domain: Vec<String>,
    #[serde(default)]
    pub unary: BTreeMap<String, BTreeSet<String>>,
    #[serde(default)]
    pub binary: BTreeMap<String, BTreeSet<(String, String)>>,
    #[serde(default)]
    pub ternary: BTreeMap<String, BTreeSet<(String, String, String)>>,
}

impl FiniteStructure {
    pub fn new(domain: &[&str]) -> FiniteStructure {
        FiniteStructure {
            domain: domain.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn add_unary(&mut self, pred: &str, elem: &str) {
        self.unary
            .entry(pred.to_string())
            .or_default()
            .insert(elem.to_string());
    }

    pub fn add_binary(&mut self, pred: &str, a: &str, b: &str) {
        self.binary
            .entry(pred.to_string())
            .or_default()
            .insert((a.to_string(), b.to_string()));
    }

    pub fn add_ternary(&mut self, pred: &str, a: &str, b: &str, c: &str) {
        self.ternary
            .entry(pred.to_string())
            .or_default()
            .insert((a.to_string(), b.to_string(), c.to_string()));
    }

    pub fn declare_unary(&mut self, pred: &str) {
        self.unary.entry(pred.to_string()).or_default();
    }

    pub fn declare_binary(&mut self, pred: &str) {
        self.binary.entry(pred.to_string()).or_default();
    }

    pub fn signature(&self) -> Signature {
        let mut sig = Signature::new();
        for p in self.unary.keys() {
            sig.insert(p, 1);
        }
        for p in self.binary.keys() {
            sig.insert(p, 2);
        }
        for p in self.ternary.keys() {
            sig.insert(p, 3);
        }
        sig
    }

    pub fn has_unary(&self, pred: &str, a: &str) -> bool {
        self.unary.get(pred).map(|s| s.contains(a)).unwrap_or(false)
    }

    pub fn has_binary(&self, pred: &str, a: &str, b: &str) -> bool {
        self.binary
            .get(pred)
            .map(|s| s.contains(&(a.to_string(), b.to_string())))
            .unwrap_or(false)
    }

    pub fn validate(&self) -> Result<()> {
        let dom: BTreeSet<&String> = self.domain.iter().collect();
        for (p, set) in &self.unary {
            for e in set {
                if !dom.contains(e) {
                    return Err(Error::Invalid(format!("{p}({e}): element not in domain")));
                }
            }
        }
        for (p, set) in &self.binary {
            for (a, b) in set {
                if !dom.contains(a) || !dom.contains(b) {
                    return Err(Error::Invalid(format!(
                        "{p}({a},{b}): element not in domain"
                    )));
                }
            }
        }
        for (p, set) in &self.ternary {
            for (a, b, c) in set {
                if !dom.contains(a) || !dom.contains(b) || !dom.contains(c) {
                    return Err(Error::Invalid(format!(
                        "{p}({a},{b},{c}): element not in domain"
                    )));
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Model checking
// ---------------------------------------------------------------------------

/// Standard first-order evaluation with equality.
pub fn model_check(
    s: &FiniteStructure,
    f: &Formula,
    assignment: &BTreeMap<Var, String>,
) -> Result<bool> {
    match f {
        Formula::True => Ok(true),
        Formula::False => Ok(false),
        Formula::Eq(a, b) => Ok(lookup(assignment, *a)? == lookup(assignment, *b)?),
        Formula::Atom(p, vs) => {
            let args: Vec<String> = vs
                .iter()
                .map(|v| lookup(assignment, *v).cloned())
                .collect::<Result<_>>()?;
            match args.len() {
                1 => {
                    let set = s
                        .unary
                        .get(p)
                        .ok_or_else(|| Error::UnknownPredicate(p.clone()))?;
                    Ok(set.contains(&args[0]))
                }
                2 => {
                    let set = s
                        .binary
                        .get(p)
                        .ok_or_else(|| Error::UnknownPredicate(p.clone()))?;
                    Ok(set.contains(&(args[0].clone(), args[1].clone())))
                }
                3 => {
                    let set = s
                        .ternary
                        .get(p)
                        .ok_or_else(|| Error::UnknownPredicate(p.clone()))?;
                    Ok(set.contains(&(args[0].clone(), args[1].clone(), args[2].clone())))
                }
                n => Err(Error::Arity {
                    pred: p.clone(),
                    expected: 2,
                    got: n,
                }),
            }
        }
        Formula::Not(a) => Ok(!model_check(s, a, assignment)?),
        Formula::And(a, b) => Ok(model_check(s, a, assignment)? && model_check(s, b, assignment)?),
        Formula::Or(a, b) => Ok(model_check(s, a, assignment)? || model_check(s, b, assignment)?),
        Formula::Implies(a, b) => {
            Ok(!model_check(s, a, assignment)? || model_check(s, b, assignment)?)
        }
        Formula::Quantified {
            quant,
            vars,
            guard,
            body,
        } => {
            let mut scope = assignment.clone();
            eval_quant(s, *quant, vars, guard.as_deref(), body, &mut scope, 0)
        }
    }
}

fn lookup(assignment: &BTreeMap<Var, String>, v: Var) -> Result<&String> {
    assignment
        .get(&v)
        .ok_or_else(|| Error::Invalid(format!("unbound variable {}", v.name())))
}

fn eval_quant(
    s: &FiniteStructure,
    quant: Quant,
    vars: &[Var],
    guard: Option<&Formula>,
    body: &Formula,
    scope: &mut BTreeMap<Var, String>,
    i: usize,
) -> Result<bool> {
    if i == vars.len() {
        return match (quant, guard) {
            (Quant::Exists, Some(g)) => {
                Ok(model_check(s, g, scope)? && model_check(s, body, scope)?)
            }
            (Quant::Forall, Some(g)) => {
                Ok(!model_check(s, g, scope)? || model_check(s, body, scope)?)
            }
            (_, None) => model_check(s, body, scope),
        };
    }
    let v = vars[i];
    let saved = scope.get(&v).cloned();
    for elem in &s.domain {
        scope.insert(v, elem.clone());
        let r = eval_quant(s, quant, vars, guard, body, scope, i + 1)?;
        match (quant, r) {
            (Quant::Exists, true) => {
                restore(scope, v, saved);
                return Ok(true);
            }
            (Quant::Forall, false) => {
                restore(scope, v, saved);
                return Ok(false);
            }
            _ => {}
        }
    }
    restore(scope, v, saved);
    Ok(quant == Quant::Forall)
}

fn restore(scope: &mut BTreeMap<Var, String>, v: Var, saved: Option<String>) {
    match saved {
        Some(e) => {
            scope.insert(v, e);
        }
        None => {
            scope.remove(&v);
        }
    }
}

/// Checks a sentence against a structure.
pub fn check_sentence(s: &FiniteStructure, f: &Formula) -> Result<bool> {
    model_check(s, f, &BTreeMap::new())
}

// ---------------------------------------------------------------------------
// Atomic types
// ---------------------------------------------------------------------------

/// Shape of an atomic formula over the canonical variables: `x` names the
/// first element of a pair (or the single element of a 1-type), `y` the
/// second.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum AtomShape {
    /// A(x)
    UnaryX,
    /// A(y)
    UnaryY,
    /// R(x,x)
    SelfX,
    /// R(y,y)
    SelfY,
    /// R(x,y)
    Xy,
    /// R(y,x)
    Yx,
}

/// An atomic 1- or 2-type: a maximal set of atomic Σ-literals, represented
/// by its positive atoms. 2-types implicitly contain ¬(x = y).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct AtomicType {
    pub two: bool,
    pub pos: BTreeSet<(String, AtomShape)>,
}

impl AtomicType {
    pub fn one_type() -> AtomicType {
        AtomicType {
            two: false,
            pos: BTreeSet::new(),
        }
    }

    pub fn two_type() -> AtomicType {
        AtomicType {
            two: true,
            pos: BTreeSet::new(),
        }
    }

    /// Atoms mentioning only x, as a 1-type.
    pub fn x_part(&self) -> AtomicType {
        assert!(self.two);
        AtomicType {
            two: false,
            pos: self
                .pos
                .iter()
                .filter(|(_, s)| matches!(s, AtomShape::UnaryX | AtomShape::SelfX))
                .cloned()
                .collect(),
        }
    }

    /// Atoms mentioning only y, renamed to a 1-type over x.
    pub fn y_part(&self) -> AtomicType {
        assert!(self.two);
        AtomicType {
            two: false,
            pos: self
                .pos
                .iter()
                .filter_map(|(p, s)| match s {
                    AtomShape::UnaryY => Some((p.clone(), AtomShape::UnaryX)),
                    AtomShape::SelfY => Some((p.clone(), AtomShape::SelfX)),
                    _ => None,
                })
                .collect(),
        }
    }

    /// Exchange of x and y.
    pub fn swap(&self) -> AtomicType {
        assert!(self.two);
        AtomicType {
            two: true,
            pos: self
                .pos
                .iter()
                .map(|(p, s)| {
                    let ns = match s {
                        AtomShape::UnaryX => AtomShape::UnaryY,
                        AtomShape::UnaryY => AtomShape::UnaryX,
                        AtomShape::SelfX => AtomShape::SelfY,
                        AtomShape::SelfY => AtomShape::SelfX,
                        AtomShape::Xy => AtomShape::Yx,
                        AtomShape::Yx => AtomShape::Xy,
                    };
                    (p.clone(), ns)
                })
                .collect(),
        }
    }

    /// A 2-type is guarded if it links x and y by some atom.
    pub fn guarded(&self) -> bool {
        self.pos
            .iter()
            .any(|(_, s)| matches!(s, AtomShape::Xy | AtomShape::Yx))
    }

    /// Guarded by a predicate from `sigma`.
    pub fn sigma_guarded(&self, sigma: &Signature) -> bool {
        self.pos
            .iter()
            .any(|(p, s)| matches!(s, AtomShape::Xy | AtomShape::Yx) && sigma.contains(p))
    }

    /// Restriction of the positive atoms to predicates in `sigma`.
    pub fn restrict(&self, sigma: &Signature) -> AtomicType {
        AtomicType {
            two: self.two,
            pos: self
                .pos
                .iter()
                .filter(|(p, _)| sigma.contains(p))
                .cloned()
                .collect(),
        }
    }

    /// The full literal list over `sigma`: (atom, polarity) pairs.
    pub fn literals(&self, sigma: &Signature) -> Vec<(Formula, bool)> {
        let mut out = Vec::new();
        for (p, arity) in &sigma.preds {
            let shapes: &[AtomShape] = if self.two {
                if *arity == 1 {
                    &[AtomShape::UnaryX, AtomShape::UnaryY]
                } else {
                    &[
                        AtomShape::SelfX,
                        AtomShape::SelfY,
                        AtomShape::Xy,
                        AtomShape::Yx,
                    ]
                }
            } else if *arity == 1 {
                &[AtomShape::UnaryX]
            } else {
                &[AtomShape::SelfX]
            };
            for s in shapes {
                let present = self.pos.contains(&(p.clone(), *s));
                out.push((shape_formula(p, *s), present));
            }
        }
        out
    }
}

pub fn shape_formula(pred: &str, shape: AtomShape) -> Formula {
    match shape {
        AtomShape::UnaryX => Formula::atom(pred, &[X]),
        AtomShape::UnaryY => Formula::atom(pred, &[Y]),
        AtomShape::SelfX => Formula::atom(pred, &[X, X]),
        AtomShape::SelfY => Formula::atom(pred, &[Y, Y]),
        AtomShape::Xy => Formula::atom(pred, &[X, Y]),
        AtomShape::Yx => Formula::atom(pred, &[Y, X]),
    }
}

/// The atomic 1- or 2-type realized by `a` (and `b`) in `s`, restricted to
/// the signature `sigma`.
pub fn atomic_type(
    s: &FiniteStructure,
    sigma: &Signature,
    a: &str,
    b: Option<&str>,
) -> Result<AtomicType> {
    if !s.domain.iter().any(|e| e == a) {
        return Err(Error::Invalid(format!("element {a} not in domain")));
    }
    if let Some(b) = b {
        if !s.domain.iter().any(|e| e == b) {
            return Err(Error::Invalid(format!("element {b} not in domain")));
        }
        if a == b {
            return Err(Error::Invalid(
                "atomic 2-types require two distinct elements".into(),
            ));
        }
        let mut t = AtomicType::two_type();
        for (p, arity) in &sigma.preds {
            match arity {
                1 => {
                    if s.has_unary(p, a) {
                        t.pos.insert((p.clone(), AtomShape::UnaryX));
                    }
                    if s.has_unary(p, b) {
                        t.pos.insert((p.clone(), AtomShape::UnaryY));
                    }
                }
                2 => {
                    if s.has_binary(p, a, a) {
                        t.pos.insert((p.clone(), AtomShape::SelfX));
                    }
                    if s.has_binary(p, b, b) {
                        t.pos.insert((p.clone(), AtomShape::SelfY));
                    }
                    if s.has_binary(p, a, b) {
                        t.pos.insert((p.clone(), AtomShape::Xy));
                    }
                    if s.has_binary(p, b, a) {
                        t.pos.insert((p.clone(), AtomShape::Yx));
                    }
                }
                _ => {}
            }
        }
        Ok(t)
    } else {
        let mut t = AtomicType::one_type();
        for (p, arity) in &sigma.preds {
            match arity {
                1 => {
                    if s.has_unary(p, a) {
                        t.pos.insert((p.clone(), AtomShape::UnaryX));
                    }
                }
                2 => {
                    if s.has_binary(p, a, a) {
                        t.pos.insert((p.clone(), AtomShape::SelfX));
                    }
                }
                _ => {}
            }
        }
        Ok(t)
    }
}

// ---------------------------------------------------------------------------
// Θ-labeled trees
// ---------------------------------------------------------------------------

/// A letter of the tree alphabet Θ: a full atomic 2-type over sig(φ₁)
/// describing (predecessor, current node), plus a marker bit.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct ThetaLabel {
    pub tau: AtomicType,
    pub marker: bool,
}

/// A finite or finitely-presented regular Θ-labeled tree. Finite trees are
/// acyclic presentations; back edges encode regular infinite trees.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct LabeledTree {
    pub root: usize,
    pub nodes: Vec<TreeNode>,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct TreeNode {
    pub label: ThetaLabel,
    pub children: Vec<usize>,
}

impl LabeledTree {
    pub fn single(label: ThetaLabel) -> LabeledTree {
        LabeledTree {
            root: 0,
            nodes: vec![TreeNode {
                label,
                children: vec![],
            }],
        }
    }

    /// True when the presentation is acyclic (denotes a finite tree).
    pub fn is_finite(&self) -> bool {
        fn dfs(t: &LabeledTree, n: usize, stack: &mut [bool], done: &mut [bool]) -> bool {
            if stack[n] {
                return false;
            }
            if done[n] {
                return true;
            }
            stack[n] = true;
            for &c in &t.nodes[n].children {
                if !dfs(t, c, stack, done) {
                    return false;
                }
            }
            stack[n] = false;
            done[n] = true;
            true
        }
        let mut stack = vec![false; self.nodes.len()];
        let mut done = vec![false; self.nodes.len()];
        dfs(self, self.root, &mut stack, &mut done)
    }

    /// Finite unfolding of the presentation to the given depth.
    pub fn unfold(&self, depth: usize) -> LabeledTree {
        fn go(t: &LabeledTree, n: usize, depth: usize, nodes: &mut Vec<TreeNode>) -> usize {
            let id = nodes.len();
            nodes.push(TreeNode {
                label: t.nodes[n].label.clone(),
                children: vec![],
            });
            if depth > 0 {
                let mut kids = Vec::new();
                for &c in &t.nodes[n].children {
                    kids.push(go(t, c, depth - 1, nodes));
                }
                nodes[id].children = kids;
            }
            id
        }
        let mut nodes = Vec::new();
        let root = go(self, self.root, depth, &mut nodes);
        LabeledTree { root, nodes }
    }
}

/// Decodes a finite Θ-labeled tree into the forest structure it represents.
/// Atoms that involve only the variable x are ignored.
pub fn decode_tree(t: &LabeledTree) -> Result<FiniteStructure> {
    Ok(decode_tree_with_markers(t)?.0)
}

/// Decoding that also returns the marker set A⊥.
pub fn decode_tree_with_markers(t: &LabeledTree) -> Result<(FiniteStructure, BTreeSet<String>)> {
    if !t.is_finite() {
        return Err(Error::Invalid(
            "decode_tree requires a finite tree (unfold a regular presentation first)".into(),
        ));
    }
    let mut sig = Signature::new();
    for n in &t.nodes {
        for (p, s) in &n.label.tau.pos {
            let arity = match s {
                AtomShape::UnaryX | AtomShape::UnaryY => 1,
                _ => 2,
            };
            sig.insert(p, arity);
        }
    }
    let name = |i: usize| format!("n{i}");
    let order = dfs_order(t);
    let mut st = FiniteStructure {
        domain: order.iter().map(|&i| name(i)).collect(),
        ..Default::default()
    };
    for (p, a) in &sig.preds {
        match a {
            1 => st.declare_unary(p),
            2 => st.declare_binary(p),
            _ => {}
        }
    }
    let mut markers = BTreeSet::new();
    for &i in &order {
        let node = &t.nodes[i];
        if node.label.marker {
            markers.insert(name(i));
        }
        for (p, s) in &node.label.tau.pos {
            match s {
                AtomShape::UnaryY => st.add_unary(p, &name(i)),
                AtomShape::SelfY => st.add_binary(p, &name(i), &name(i)),
                _ => {}
            }
        }
        for &c in &node.children {
            for (p, s) in &t.nodes[c].label.tau.pos {
                match s {
                    AtomShape::Xy => st.add_binary(p, &name(i), &name(c)),
                    AtomShape::Yx => st.add_binary(p, &name(c), &name(i)),
                    _ => {}
                }
            }
        }
    }
    Ok((st, markers))
}

fn dfs_order(t: &LabeledTree) -> Vec<usize> {
    fn go(t: &LabeledTree, n: usize, out: &mut Vec<usize>) {
        out.push(n);
        for &c in &t.nodes[n].children {
            go(t, c, out);
        }
    }
    let mut out = Vec::new();
    go(t, t.root, &mut out);
    out
}

/// Encodes a forest structure as a Θ-labeled tree with marker bits taken
/// from `markers`. Roots are the lexicographically least elements of each
/// Gaifman component; components beyond the first hang below the global
/// root through atom-free tree edges.
pub fn encode_structure(s: &FiniteStructure, markers: &BTreeSet<String>) -> Result<LabeledTree> {
    s.validate()?;
    if !s.ternary.is_empty() {
        return Err(Error::Invalid("cannot encode ternary predicates".into()));
    }
    if s.domain.is_empty() {
        return Err(Error::Invalid("cannot encode an empty structure".into()));
    }
    let sig = s.signature();
    let mut adj: BTreeMap<&String, BTreeSet<&String>> = BTreeMap::new();
    for e in &s.domain {
        adj.entry(e).or_default();
    }
    for set in s.binary.values() {
        for (a, b) in set {
            if a != b {
                adj.entry(a).or_default().insert(b);
                adj.entry(b).or_default().insert(a);
            }
        }
    }
    let mut sorted: Vec<&String> = s.domain.iter().collect();
    sorted.sort();
    sorted.dedup();
    let mut visited: BTreeSet<&String> = BTreeSet::new();
    let mut parent: BTreeMap<&String, Option<&String>> = BTreeMap::new();
    let mut component_roots: Vec<&String> = Vec::new();
    let mut order: Vec<&String> = Vec::new();
    for &start in &sorted {
        if visited.contains(start) {
            continue;
        }
        component_roots.push(start);
        let mut stack = vec![(start, None::<&String>)];
        visited.insert(start);
        parent.insert(start, None);
        while let Some((e, par)) = stack.pop() {
            order.push(e);
            let mut kids: Vec<&String> = adj[&e]
                .iter()
                .filter(|n| Some(**n) != par)
                .copied()
                .collect();
            kids.sort();
            for k in kids {
                if visited.contains(k) {
                    return Err(Error::NotForest(format!(
                        "cycle through {k} in the Gaifman graph"
                    )));
                }
                visited.insert(k);
                parent.insert(k, Some(e));
                stack.push((k, Some(e)));
            }
        }
    }

    let mut ids: BTreeMap<&String, usize> = BTreeMap::new();
    let mut nodes: Vec<TreeNode> = Vec::new();
    for e in &order {
        ids.insert(e, nodes.len());
        nodes.push(TreeNode {
            label: ThetaLabel {
                tau: AtomicType::two_type(),
                marker: markers.contains(*e),
            },
            children: vec![],
        });
    }
    let global_root = component_roots[0];
    for e in &order {
        let id = ids[e];
        let par: Option<&String> = match parent[e] {
            Some(p) => Some(p),
            None => {
                if *e == global_root {
                    None
                } else {
                    Some(global_root)
                }
            }
        };
        let mut tau = AtomicType::two_type();
        for (p, arity) in &sig.preds {
            match arity {
                1 => {
                    if s.has_unary(p, e) {
                        tau.pos.insert((p.clone(), AtomShape::UnaryY));
                    }
                    if let Some(pe) = par {
                        if s.has_unary(p, pe) {
                            tau.pos.insert((p.clone(), AtomShape::UnaryX));
                        }
                    }
                }
                2 => {
                    if s.has_binary(p, e, e) {
                        tau.pos.insert((p.clone(), AtomShape::SelfY));
                    }
                    if let Some(pe) = par {
                        if s.has_binary(p, pe, pe) {
                            tau.pos.insert((p.clone(), AtomShape::SelfX));
                        }
                        if s.has_binary(p, pe, e) {
                            tau.pos.insert((p.clone(), AtomShape::Xy));
                        }
                        if s.has_binary(p, e, pe) {
                            tau.pos.insert((p.clone(), AtomShape::Yx));
                        }
                    }
                }
                _ => {}
            }
        }
        nodes[id].label.tau = tau;
        if let Some(pe) = par {
            let pid = ids[pe];
            nodes[pid].children.push(id);
        }
    }
    Ok(LabeledTree {
        root: ids[global_root],
        nodes,
    })
}

// ---------------------------------------------------------------------------
// Isomorphism (used by encode/decode round-trip checks)
// ---------------------------------------------------------------------------

/// Backtracking isomorphism test with degree-signature pruning.
pub fn isomorphic(a: &FiniteStructure, b: &FiniteStructure) -> bool {
    if a.domain.len() != b.domain.len() {
        return false;
    }
    if a.signature() != b.signature() {
        return false;
    }
    let sigkey = |s: &FiniteStructure, e: &String| -> Vec<usize> {
        let mut key = Vec::new();
        for set in s.unary.values() {
            key.push(usize::from(set.contains(e)));
        }
        for set in s.binary.values() {
            key.push(set.iter().filter(|(x, _)| x == e).count());
            key.push(set.iter().filter(|(_, y)| y == e).count());
        }
        for set in s.ternary.values() {
            key.push(set.iter().filter(|(x, _, _)| x == e).count());
        }
        key
    };
    let mut akeys: Vec<(Vec<usize>, &String)> = a.domain.iter().map(|e| (sigkey(a, e), e)).collect();
    let mut bkeys: Vec<(Vec<usize>, &String)> = b.domain.iter().map(|e| (sigkey(b, e), e)).collect();
    akeys.sort();
    bkeys.sort();
    if akeys.iter().map(|(k, _)| k).ne(bkeys.iter().map(|(k, _)| k)) {
        return false;
    }

    fn extend_ok(
        a: &FiniteStructure,
        b: &FiniteStructure,
        map: &BTreeMap<&String, &String>,
        e: &String,
        img: &String,
    ) -> bool {
        for (p, set) in &a.unary {
            if set.contains(e) != b.unary.get(p).map(|s| s.contains(img)).unwrap_or(false) {
                return false;
            }
        }
        for (p, _) in &a.binary {
            for (other, oimg) in map.iter() {
                if a.has_binary(p, e, other) != b.has_binary(p, img, oimg) {
                    return false;
                }
                if a.has_binary(p, other, e) != b.has_binary(p, oimg, img) {
                    return false;
                }
            }
            if a.has_binary(p, e, e) != b.has_binary(p, img, img) {
                return false;
            }
        }
        true
    }

    fn rec<'a>(
        a: &'a FiniteStructure,
        b: &'a FiniteStructure,
        order: &[&'a String],
        cands: &BTreeMap<&'a String, Vec<&'a String>>,
        map: &mut BTreeMap<&'a String, &'a String>,
        used: &mut BTreeSet<&'a String>,
        i: usize,
    ) -> bool {
        if i == order.len() {
            return true;
        }
        let e = order[i];
        for &c in &cands[e] {
            if used.contains(c) {
                continue;
            }
            if !extend_ok(a, b, map, e, c) {
                continue;
            }
            map.insert(e, c);
            used.insert(c);
            if rec(a, b, order, cands, map, used, i + 1) {
                return true;
            }
            map.remove(e);
            used.remove(c);
        }
        false
    }

    if !a.ternary.is_empty() {
        // ternary structures only occur in gadget verification where the
        // round-trip checker is not used; fall back to equality
        return a == b;
    }

    let order: Vec<&String> = akeys.iter().map(|(_, e)| *e).collect();
    let cands: BTreeMap<&String, Vec<&String>> = akeys
        .iter()
        .map(|(k, e)| {
            (
                *e,
                bkeys
                    .iter()
                    .filter(|(k2, _)| k2 == k)
                    .map(|(_, e2)| *e2)
                    .collect(),
            )
        })
        .collect();
    rec(
        a,
        b,
        &order,
        &cands,
        &mut BTreeMap::new(),
        &mut BTreeSet::new(),
        0,
    )
}

// ---------------------------------------------------------------------------
// Extension search
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Tri {
    True,
    False,
    Unknown,
}

type Cell = (String, Vec<String>);

struct ExtSearch<'a> {
    base: &'a FiniteStructure,
    extra: &'a Signature,
    assign: BTreeMap<Cell, bool>,
    steps: usize,
    max_steps: usize,
}

/// Exhaustively searches for an interpretation of the predicates in `extra`
/// turning `s` into a model of `f`. Absence is a proof that no extension
/// exists within the budget. The search branches lazily on the truth of
/// individual tuples, guided by three-valued evaluation.
pub fn extension_search(
    s: &FiniteStructure,
    extra: &Signature,
    f: &Formula,
    budget: &Budget,
) -> Result<Option<FiniteStructure>> {
    s.validate()?;
    let n = s.domain.len();
    let has_ternary = extra.preds.values().any(|a| *a == 3);
    let cap = if has_ternary {
        budget.extension_domain.min(5)
    } else {
        budget.extension_domain
    };
    if n > cap {
        return Err(Error::Budget(format!(
            "extension search domain {n} exceeds cap {cap}"
        )));
    }
    for p in extra.preds.keys() {
        if s.signature().contains(p) {
            return Err(Error::Invalid(format!(
                "extra predicate {p} already interpreted by the structure"
            )));
        }
    }
    let mut search = ExtSearch {
        base: s,
        extra,
        assign: BTreeMap::new(),
        steps: 0,
        max_steps: 20_000_000,
    };
    if search.solve(f)? {
        let mut out = s.clone();
        for (p, arity) in &extra.preds {
            match arity {
                1 => out.declare_unary(p),
                2 => out.declare_binary(p),
                3 => {
                    out.ternary.entry(p.clone()).or_default();
                }
                _ => {}
            }
        }
        for ((p, args), v) in &search.assign {
            if *v {
                match args.len() {
                    1 => out.add_unary(p, &args[0]),
                    2 => out.add_binary(p, &args[0], &args[1]),
                    3 => out.add_ternary(p, &args[0], &args[1], &args[2]),
                    _ => {}
                }
            }
        }
        Ok(Some(out))
    } else {
        Ok(None)
    }
}

impl<'a> ExtSearch<'a> {
    fn solve(&mut self, f: &Formula) -> Result<bool> {
        self.steps += 1;
        if self.steps > self.max_steps {
            return Err(Error::Budget("extension search step limit".into()));
        }
        let mut witness: Option<Cell> = None;
        match self.eval(f, &BTreeMap::new(), &mut witness)? {
            Tri::True => Ok(true),
            Tri::False => Ok(false),
            Tri::Unknown => {
                let cell = witness.expect("unknown result must carry a cell");
                for v in [true, false] {
                    self.assign.insert(cell.clone(), v);
                    if self.solve(f)? {
                        return Ok(true);
                    }
                }
                self.assign.remove(&cell);
                Ok(false)
            }
        }
    }

    fn eval(
        &self,
        f: &Formula,
        env: &BTreeMap<Var, String>,
        witness: &mut Option<Cell>,
    ) -> Result<Tri> {
        match f {
            Formula::True => Ok(Tri::True),
            Formula::False => Ok(Tri::False),
            Formula::Eq(a, b) => {
                let ea = env
                    .get(a)
                    .ok_or_else(|| Error::Invalid("unbound var".into()))?;
                let eb = env
                    .get(b)
                    .ok_or_else(|| Error::Invalid("unbound var".into()))?;
                Ok(bool_tri(ea == eb))
            }
            Formula::Atom(p, vs) => {
                let args: Vec<String> = vs
                    .iter()
                    .map(|v| {
                        env.get(v)
                            .cloned()
                            .ok_or_else(|| Error::Invalid("unbound var".into()))
                    })
                    .collect::<Result<_>>()?;
                if self.extra.contains(p) {
                    let cell = (p.clone(), args);
                    match self.assign.get(&cell) {
                        Some(v) => Ok(bool_tri(*v)),
                        None => {
                            if witness.is_none() {
                                *witness = Some(cell);
                            }
                            Ok(Tri::Unknown)
                        }
                    }
                } else {
                    let v = match args.len() {
                        1 => self.base.has_unary(p, &args[0]),
                        2 => self.base.has_binary(p, &args[0], &args[1]),
                        3 => self
                            .base
                            .ternary
                            .get(p)
                            .map(|set| {
                                set.contains(&(args[0].clone(), args[1].clone(), args[2].clone()))
                            })
                            .unwrap_or(false),
                        _ => false,
                    };
                    Ok(bool_tri(v))
                }
            }
            Formula::Not(a) => Ok(match self.eval(a, env, witness)? {
                Tri::True => Tri::False,
                Tri::False => Tri::True,
                Tri::Unknown => Tri::Unknown,
            }),
            Formula::And(a, b) => {
                let l = self.eval(a, env, witness)?;
                if l == Tri::False {
                    return Ok(Tri::False);
                }
                let r = self.eval(b, env, witness)?;
                Ok(match (l, r) {
                    (_, Tri::False) => Tri::False,
                    (Tri::True, Tri::True) => Tri::True,
                    _ => Tri::Unknown,
                })
            }
            Formula::Or(a, b) => {
                let l = self.eval(a, env, witness)?;
                if l == Tri::True {
                    return Ok(Tri::True);
                }
                let r = self.eval(b, env, witness)?;
                Ok(match (l, r) {
                    (_, Tri::True) => Tri::True,
                    (Tri::False, Tri::False) => Tri::False,
                    _ => Tri::Unknown,
                })
            }
            Formula::Implies(a, b) => {
                let l = self.eval(a, env, witness)?;
                if l == Tri::False {
                    return Ok(Tri::True);
                }
                let r = self.eval(b, env, witness)?;
                Ok(match (l, r) {
                    (_, Tri::True) => Tri::True,
                    (Tri::True, Tri::False) => Tri::False,
                    _ => Tri::Unknown,
                })
            }
            Formula::Quantified {
                quant,
                vars,
                guard,
                body,
            } => {
                let matrix = match (quant, guard) {
                    (Quant::Exists, Some(g)) => Formula::and((**g).clone(), (**body).clone()),
                    (Quant::Forall, Some(g)) => Formula::implies((**g).clone(), (**body).clone()),
                    (_, None) => (**body).clone(),
                };
                self.eval_quant(*quant, vars, &matrix, env, 0, witness)
            }
        }
    }

    fn eval_quant(
        &self,
        quant: Quant,
        vars: &[Var],
        matrix: &Formula,
        env: &BTreeMap<Var, String>,
        i: usize,
        witness: &mut Option<Cell>,
    ) -> Result<Tri> {
        if i == vars.len() {
            return self.eval(matrix, env, witness);
        }
        let mut any_unknown = false;
        for elem in &self.base.domain {
            let mut env2 = env.clone();
            env2.insert(vars[i], elem.clone());
            match self.eval_quant(quant, vars, matrix, &env2, i + 1, witness)? {
                Tri::True if quant == Quant::Exists => return Ok(Tri::True),
                Tri::False if quant == Quant::Forall => return Ok(Tri::False),
                Tri::Unknown => any_unknown = true,
                _ => {}
            }
        }
        if any_unknown {
            Ok(Tri::Unknown)
        } else {
            Ok(bool_tri(quant == Quant::Forall))
        }
    }
}

fn bool_tri(b: bool) -> Tri {
    if b {
        Tri::True
    } else {
        Tri::False
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{normalize, parse};

    fn ex2_witness() -> FiniteStructure {
        let mut s = FiniteStructure::new(&["a"]);
        s.add_binary("R", "a", "a");
        s
    }

    #[test]
    fn model_check_example2_witness() {
        let s = ex2_witness();
        let phi1 = normalize(&parse("forall x. exists y. R(x,y)").unwrap());
        let psi = normalize(&parse("forall x y. (R(x,y) -> x = y)").unwrap());
        assert!(check_sentence(&s, &phi1).unwrap());
        assert!(check_sentence(&s, &psi).unwrap());
        assert!(check_sentence(&s, &Formula::and(phi1, psi)).unwrap());
    }

    #[test]
    fn model_check_truth() {
        let s = ex2_witness();
        assert!(check_sentence(&s, &Formula::True).unwrap());
    }

    #[test]
    fn model_check_unknown_predicate() {
        let s = ex2_witness();
        let f = parse("exists x. Q(x)").unwrap();
        assert!(matches!(
            check_sentence(&s, &f),
            Err(Error::UnknownPredicate(_))
        ));
    }

    #[test]
    fn atomic_type_single_element() {
        let mut s = FiniteStructure::new(&["a"]);
        s.add_unary("A", "a");
        let mut sigma = Signature::new();
        sigma.insert("A", 1);
        let t = atomic_type(&s, &sigma, "a", None).unwrap();
        assert!(t.pos.contains(&("A".into(), AtomShape::UnaryX)));
        assert_eq!(t.pos.len(), 1);
    }

    #[test]
    fn atomic_type_pair() {
        let mut s = FiniteStructure::new(&["a", "b"]);
        s.add_binary("R", "a", "b");
        let mut sigma = Signature::new();
        sigma.insert("R", 2);
        let t = atomic_type(&s, &sigma, "a", Some("b")).unwrap();
        assert!(t.pos.contains(&("R".into(), AtomShape::Xy)));
        assert!(!t.pos.contains(&("R".into(), AtomShape::Yx)));
        assert!(!t.pos.contains(&("R".into(), AtomShape::SelfX)));
        assert!(!t.pos.contains(&("R".into(), AtomShape::SelfY)));
        assert!(t.guarded());
        let lits = t.literals(&sigma);
        assert_eq!(lits.len(), 4);
        assert_eq!(lits.iter().filter(|(_, pos)| *pos).count(), 1);
        assert!(atomic_type(&s, &sigma, "a", Some("a")).is_err());
    }

    #[test]
    fn guarded_flag_false_without_link() {
        let mut s = FiniteStructure::new(&["a", "b"]);
        s.declare_binary("R");
        let mut sigma = Signature::new();
        sigma.insert("R", 2);
        let t = atomic_type(&s, &sigma, "a", Some("b")).unwrap();
        assert!(!t.guarded());
    }

    #[test]
    fn decode_single_self_loop() {
        let mut tau = AtomicType::two_type();
        tau.pos.insert(("A".into(), AtomShape::UnaryY));
        tau.pos.insert(("R".into(), AtomShape::SelfY));
        let t = LabeledTree::single(ThetaLabel { tau, marker: false });
        let s = decode_tree(&t).unwrap();
        assert_eq!(s.domain.len(), 1);
        assert!(s.has_unary("A", "n0"));
        assert!(s.has_binary("R", "n0", "n0"));
    }

    #[test]
    fn decode_parent_child_edge() {
        let mut root_tau = AtomicType::two_type();
        root_tau.pos.insert(("A".into(), AtomShape::UnaryY));
        let mut child_tau = AtomicType::two_type();
        child_tau.pos.insert(("R".into(), AtomShape::Xy));
        child_tau.pos.insert(("A".into(), AtomShape::UnaryX));
        let t = LabeledTree {
            root: 0,
            nodes: vec![
                TreeNode {
                    label: ThetaLabel {
                        tau: root_tau,
                        marker: false,
                    },
                    children: vec![1],
                },
                TreeNode {
                    label: ThetaLabel {
                        tau: child_tau,
                        marker: false,
                    },
                    children: vec![],
                },
            ],
        };
        let s = decode_tree(&t).unwrap();
        assert!(s.has_binary("R", "n0", "n1"));
        assert!(!s.has_binary("R", "n1", "n0"));
        assert!(s.has_unary("A", "n0"));
        assert!(!s.has_unary("A", "n1"));
    }

    #[test]
    fn decode_empty_unary() {
        let tau = AtomicType::two_type();
        let t = LabeledTree::single(ThetaLabel { tau, marker: false });
        let s = decode_tree(&t).unwrap();
        assert_eq!(s.domain.len(), 1);
        assert!(s.unary.is_empty() && s.binary.is_empty());
    }

    #[test]
    fn encode_decode_roundtrip_path() {
        let mut s = FiniteStructure::new(&["p", "q", "r"]);
        s.add_binary("R", "p", "q");
        s.add_binary("R", "q", "r");
        let t = encode_structure(&s, &BTreeSet::new()).unwrap();
        let back = decode_tree(&t).unwrap();
        assert!(isomorphic(&s, &back));
    }

    #[test]
    fn encode_isolated_node() {
        let s = FiniteStructure::new(&["a"]);
        let t = encode_structure(&s, &BTreeSet::new()).unwrap();
        assert_eq!(t.nodes.len(), 1);
        let back = decode_tree(&t).unwrap();
        assert!(isomorphic(&s, &back));
    }

    #[test]
    fn encode_cycle_fails() {
        let mut s = FiniteStructure::new(&["a", "b", "c"]);
        s.add_binary("R", "a", "b");
        s.add_binary("R", "b", "c");
        s.add_binary("R", "c", "a");
        assert!(matches!(
            encode_structure(&s, &BTreeSet::new()),
            Err(Error::NotForest(_))
        ));
    }

    #[test]
    fn encode_two_cycle_ok() {
        // forests admit cycles of length one and two
        let mut s = FiniteStructure::new(&["a", "b"]);
        s.add_binary("R", "a", "b");
        s.add_binary("R", "b", "a");
        let t = encode_structure(&s, &BTreeSet::new()).unwrap();
        let back = decode_tree(&t).unwrap();
        assert!(isomorphic(&s, &back));
    }

    #[test]
    fn encode_marker_bits() {
        let mut s = FiniteStructure::new(&["a", "b"]);
        s.add_binary("R", "a", "b");
        let mut markers = BTreeSet::new();
        markers.insert("b".to_string());
        let t = encode_structure(&s, &markers).unwrap();
        let (_, back_markers) = decode_tree_with_markers(&t).unwrap();
        assert_eq!(back_markers.len(), 1);
    }

    #[test]
    fn extension_search_odd_cycle_has_no_two_coloring() {
        let mut s = FiniteStructure::new(&["a", "b", "c"]);
        for (u, v) in [("a", "b"), ("b", "c"), ("c", "a")] {
            s.add_binary("R", u, v);
            s.add_binary("R", v, u);
        }
        let f = parse(
            "forall x. (A(x) -> forall y. (R(x,y) -> !A(y))) & forall x. (!A(x) -> forall y. (R(x,y) -> A(y)))",
        )
        .unwrap();
        let mut extra = Signature::new();
        extra.insert("A", 1);
        let r = extension_search(&s, &extra, &f, &Budget::default()).unwrap();
        assert!(r.is_none());
    }

    #[test]
    fn extension_search_even_cycle_two_colorable() {
        let mut s = FiniteStructure::new(&["a", "b", "c", "d"]);
        for (u, v) in [("a", "b"), ("b", "c"), ("c", "d"), ("d", "a")] {
            s.add_binary("R", u, v);
            s.add_binary("R", v, u);
        }
        let f = parse(
            "forall x. (A(x) -> forall y. (R(x,y) -> !A(y))) & forall x. (!A(x) -> forall y. (R(x,y) -> A(y)))",
        )
        .unwrap();
        let mut extra = Signature::new();
        extra.insert("A", 1);
        let r = extension_search(&s, &extra, &f, &Budget::default()).unwrap();
        let ext = r.expect("even cycle is 2-colorable");
        assert!(check_sentence(&ext, &f).unwrap());
    }

    #[test]
    fn extension_search_empty_extra() {
        let s = ex2_witness();
        let f = parse("exists x. R(x,x)").unwrap();
        let r = extension_search(&s, &Signature::new(), &f, &Budget::default()).unwrap();
        assert_eq!(r, Some(s));
    }

    #[test]
    fn structure_json_roundtrip() {
        let mut s = FiniteStructure::new(&["a", "b"]);
        s.add_unary("A", "a");
        s.add_binary("R", "a", "b");
        let json = serde_json::to_string(&s).unwrap();
        let back: FiniteStructure = serde_json::from_str(&json).unwrap();
        assert_eq!(s, back);
    }
}
