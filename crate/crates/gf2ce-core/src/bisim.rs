//! Game-based checkers for GF²(Σ)-bisimilarity on finite structures:
//! unbounded, k-bounded, global, and A⊥-delimited variants.

use std::collections::{BTreeMap, BTreeSet};

use crate::structures::{atomic_type, AtomicType, FiniteStructure};
use crate::syntax::Signature;
use crate::{Error, Result};

/// A bisimulation relation as a set of element pairs.
pub type BisimRelation = BTreeSet<(String, String)>;

/// All pairs (a, b) with equal atomic Σ-1-types: the starting relation of
/// every fixpoint below.
fn type_equal_pairs(
    sa: &FiniteStructure,
    sb: &FiniteStructure,
    sigma: &Signature,
) -> Result<BisimRelation> {
    let mut rel = BisimRelation::new();
    for a in &sa.domain {
        let ta = atomic_type(sa, sigma, a, None)?;
        for b in &sb.domain {
            let tb = atomic_type(sb, sigma, b, None)?;
            if ta == tb {
                rel.insert((a.clone(), b.clone()));
            }
        }
    }
    Ok(rel)
}

/// The guarded partners of `a`: all a' ≠ a whose atomic 2-type with `a` is
/// guarded, along with that 2-type.
fn guarded_partners(
    s: &FiniteStructure,
    sigma: &Signature,
    a: &str,
) -> Result<Vec<(String, AtomicType)>> {
    let mut out = Vec::new();
    for a2 in &s.domain {
        if a2 == a {
            continue;
        }
        let t = atomic_type(s, sigma, a, Some(a2))?;
        if t.guarded() {
            out.push((a2.clone(), t));
        }
    }
    Ok(out)
}

/// Checks the forth condition for the pair (a, b) against a candidate
/// relation; called with the structures exchanged it checks back.
fn forth_holds(
    sa: &FiniteStructure,
    sb: &FiniteStructure,
    sigma: &Signature,
    rel: &BisimRelation,
    a: &str,
    b: &str,
    swapped: bool,
) -> Result<bool> {
    for (a2, t) in guarded_partners(sa, sigma, a)? {
        let mut matched = false;
        for b2 in &sb.domain {
            if b2 == b {
                continue;
            }
            let tb = atomic_type(sb, sigma, b, Some(b2))?;
            if tb != t {
                continue;
            }
            let pair = if swapped {
                (b2.clone(), a2.clone())
            } else {
                (a2.clone(), b2.clone())
            };
            if rel.contains(&pair) {
                matched = true;
                break;
            }
        }
        if !matched {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Greatest GF²(Σ)-bisimulation between two finite structures, computed by
/// deleting pairs that violate back or forth until stable.
pub fn maximal_bisimulation(
    sa: &FiniteStructure,
    sb: &FiniteStructure,
    sigma: &Signature,
) -> Result<BisimRelation> {
    let mut rel = type_equal_pairs(sa, sb, sigma)?;
    loop {
        let mut next = BisimRelation::new();
        for (a, b) in &rel {
            if forth_holds(sa, sb, sigma, &rel, a, b, false)?
                && forth_holds(sb, sa, sigma, &rel, b, a, true)?
            {
                next.insert((a.clone(), b.clone()));
            }
        }
        if next == rel {
            return Ok(rel);
        }
        rel = next;
    }
}

/// (𝔄,a) ∼_Σ (𝔅,b): membership in the greatest bisimulation.
pub fn bisimilar(
    sa: &FiniteStructure,
    a: &str,
    sb: &FiniteStructure,
    b: &str,
    sigma: &Signature,
) -> Result<bool> {
    let rel = maximal_bisimulation(sa, sb, sigma)?;
    Ok(rel.contains(&(a.to_string(), b.to_string())))
}

/// The k-th refinement layer: pairs that survive k rounds of back-and-forth.
pub fn k_bisimulation(
    sa: &FiniteStructure,
    sb: &FiniteStructure,
    sigma: &Signature,
    k: usize,
) -> Result<BisimRelation> {
    let mut rel = type_equal_pairs(sa, sb, sigma)?;
    for _ in 0..k {
        let mut next = BisimRelation::new();
        for (a, b) in &rel {
            if forth_holds(sa, sb, sigma, &rel, a, b, false)?
                && forth_holds(sb, sa, sigma, &rel, b, a, true)?
            {
                next.insert((a.clone(), b.clone()));
            }
        }
        if next == rel {
            // stabilized early; all further layers coincide
            return Ok(rel);
        }
        rel = next;
    }
    Ok(rel)
}

/// (𝔄,a) ∼ᵏ_Σ (𝔅,b) per the inductive definition.
pub fn k_bisimilar(
    sa: &FiniteStructure,
    a: &str,
    sb: &FiniteStructure,
    b: &str,
    sigma: &Signature,
    k: usize,
) -> Result<bool> {
    let rel = k_bisimulation(sa, sb, sigma, k)?;
    Ok(rel.contains(&(a.to_string(), b.to_string())))
}

/// Mode selector for the global checker.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum GlobalMode {
    Full,
    Bounded(usize),
}

/// Global (k-)bisimilarity: every element on each side has a partner.
pub fn globally_bisimilar(
    sa: &FiniteStructure,
    sb: &FiniteStructure,
    sigma: &Signature,
    mode: GlobalMode,
) -> Result<bool> {
    let rel = match mode {
        GlobalMode::Full => maximal_bisimulation(sa, sb, sigma)?,
        GlobalMode::Bounded(k) => k_bisimulation(sa, sb, sigma, k)?,
    };
    let left: BTreeSet<&String> = rel.iter().map(|(a, _)| a).collect();
    let right: BTreeSet<&String> = rel.iter().map(|(_, b)| b).collect();
    Ok(sa.domain.iter().all(|a| left.contains(a)) && sb.domain.iter().all(|b| right.contains(b)))
}

// ---------------------------------------------------------------------------
// A⊥-delimited bisimulations
// ---------------------------------------------------------------------------

/// Predecessor function of a forest structure: parents in the directed
/// rooting where each Gaifman component is rooted at its least element.
pub fn forest_predecessors(s: &FiniteStructure) -> Result<BTreeMap<String, String>> {
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
    let mut visited: BTreeSet<&String> = BTreeSet::new();
    let mut parent: BTreeMap<String, String> = BTreeMap::new();
    for &start in &sorted {
        if visited.contains(start) {
            continue;
        }
        visited.insert(start);
        let mut stack = vec![(start, None::<&String>)];
        while let Some((e, par)) = stack.pop() {
            for n in &adj[&e] {
                if Some(*n) == par {
                    continue;
                }
                if visited.contains(n) {
                    return Err(Error::NotForest(format!(
                        "cycle through {n} in the Gaifman graph"
                    )));
                }
                visited.insert(n);
                parent.insert((*n).clone(), e.clone());
                stack.push((n, Some(e)));
            }
        }
    }
    Ok(parent)
}

/// (𝔄,a) ∼^{A⊥}_Σ (𝔅,b): existence of an A⊥-delimited GF²(Σ)-bisimulation
/// with the pair in the index-0 relation. 𝔄 must be a forest; indices
/// switch on marked predecessors, and root pairs are switch-free.
pub fn delimited_bisimilar(
    sa: &FiniteStructure,
    a: &str,
    markers: &BTreeSet<String>,
    sb: &FiniteStructure,
    b: &str,
    sigma: &Signature,
) -> Result<bool> {
    let rel = maximal_delimited(sa, markers, sb, sigma)?;
    Ok(rel.contains(&(a.to_string(), b.to_string(), 0)))
}

/// Greatest delimited bisimulation: triples (a, b, i) with i ∈ {0, 1}.
pub fn maximal_delimited(
    sa: &FiniteStructure,
    markers: &BTreeSet<String>,
    sb: &FiniteStructure,
    sigma: &Signature,
) -> Result<BTreeSet<(String, String, u8)>> {
    let pred = forest_predecessors(sa)?;
    let marked = |e: &str| markers.contains(e);

    let base = type_equal_pairs(sa, sb, sigma)?;
    let mut rel: BTreeSet<(String, String, u8)> = BTreeSet::new();
    for (a, b) in &base {
        rel.insert((a.clone(), b.clone(), 0));
        rel.insert((a.clone(), b.clone(), 1));
    }
    // index-1 pairs whose a-side predecessor is marked impose no conditions,
    // not even 1-type agreement
    for a in &sa.domain {
        if pred.get(a).map(|p| marked(p)).unwrap_or(false) {
            for b in &sb.domain {
                rel.insert((a.clone(), b.clone(), 1));
            }
        }
    }

    loop {
        let mut next = BTreeSet::new();
        'pairs: for (a, b, i) in &rel {
            if *i == 1 && pred.get(a).map(|p| marked(p)).unwrap_or(false) {
                next.insert((a.clone(), b.clone(), 1));
                continue;
            }
            // index of the continuation when the a-side moves to a2
            let index_for = |a2: &str| -> u8 {
                if *i == 0 {
                    // moving up into a marked predecessor switches to 1
                    if pred.get(a).map(|p| p == a2).unwrap_or(false) && marked(a2) {
                        1
                    } else {
                        0
                    }
                } else {
                    // moving down through a marked node resets to 0
                    if pred.get(a2).map(|p| p == a).unwrap_or(false) && marked(a) {
                        0
                    } else {
                        1
                    }
                }
            };
            // forth
            for (a2, t) in guarded_partners(sa, sigma, a)? {
                let j = index_for(&a2);
                let mut matched = false;
                for b2 in &sb.domain {
                    if b2 == b {
                        continue;
                    }
                    if atomic_type(sb, sigma, b, Some(b2))? == t
                        && rel.contains(&(a2.clone(), b2.clone(), j))
                    {
                        matched = true;
                        break;
                    }
                }
                if !matched {
                    continue 'pairs;
                }
            }
            // back
            for (b2, t) in guarded_partners(sb, sigma, b)? {
                let mut matched = false;
                for a2 in &sa.domain {
                    if a2 == a {
                        continue;
                    }
                    if atomic_type(sa, sigma, a, Some(a2))? == t {
                        let j = index_for(a2);
                        if rel.contains(&(a2.clone(), b2.clone(), j)) {
                            matched = true;
                            break;
                        }
                    }
                }
                if !matched {
                    continue 'pairs;
                }
            }
            next.insert((a.clone(), b.clone(), *i));
        }
        if next == rel {
            return Ok(rel);
        }
        rel = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig_r() -> Signature {
        let mut s = Signature::new();
        s.insert("R", 2);
        s
    }

    fn path(n: usize) -> FiniteStructure {
        let names: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let mut s = FiniteStructure::new(&refs);
        s.declare_binary("R");
        for i in 0..n - 1 {
            s.add_binary("R", &names[i], &names[i + 1]);
        }
        s
    }

    fn self_loop() -> FiniteStructure {
        let mut s = FiniteStructure::new(&["a"]);
        s.add_binary("R", "a", "a");
        s
    }

    fn two_cycle() -> FiniteStructure {
        let mut s = FiniteStructure::new(&["u", "v"]);
        s.add_binary("R", "u", "v");
        s.add_binary("R", "v", "u");
        s
    }

    #[test]
    fn isolated_points_bisimilar() {
        let a = FiniteStructure::new(&["a"]);
        let b = FiniteStructure::new(&["b"]);
        assert!(bisimilar(&a, "a", &b, "b", &sig_r()).unwrap());
    }

    #[test]
    fn self_loop_vs_two_cycle_distinguished_by_self_atom() {
        // the self-loop realizes R(x,x) in its atomic 1-type, cycle points
        // do not
        let a = self_loop();
        let b = two_cycle();
        assert!(!bisimilar(&a, "a", &b, "u", &sig_r()).unwrap());
    }

    #[test]
    fn two_cycle_vs_four_cycle_bisimilar() {
        // symmetric cycles: every point sees one symmetric R-partner type
        let mut b = FiniteStructure::new(&["u", "v"]);
        b.add_binary("R", "u", "v");
        b.add_binary("R", "v", "u");
        let mut c = FiniteStructure::new(&["p", "q", "r", "s"]);
        for (u, v) in [("p", "q"), ("q", "r"), ("r", "s"), ("s", "p")] {
            c.add_binary("R", u, v);
            c.add_binary("R", v, u);
        }
        assert!(bisimilar(&b, "u", &c, "p", &sig_r()).unwrap());
        assert!(globally_bisimilar(&b, &c, &sig_r(), GlobalMode::Full).unwrap());
    }

    #[test]
    fn path_ends_not_bisimilar() {
        let a = path(2);
        let b = path(3);
        assert!(!bisimilar(&a, "p0", &b, "p0", &sig_r()).unwrap());
    }

    #[test]
    fn k_zero_is_type_equality() {
        let a = path(2);
        let b = path(3);
        assert!(k_bisimilar(&a, "p0", &b, "p0", &sig_r(), 0).unwrap());
        let c = self_loop();
        assert!(!k_bisimilar(&a, "p0", &c, "a", &sig_r(), 0).unwrap());
    }

    #[test]
    fn path_examples_k_one_yes_k_two_no() {
        let a = path(3);
        let b = path(2);
        assert!(k_bisimilar(&a, "p0", &b, "p0", &sig_r(), 1).unwrap());
        assert!(!k_bisimilar(&a, "p0", &b, "p0", &sig_r(), 2).unwrap());
    }

    #[test]
    fn k_monotone_and_stabilizes() {
        let a = path(3);
        let b = path(4);
        let sigma = sig_r();
        let bound = a.domain.len() * b.domain.len();
        let mut prev: Option<BisimRelation> = None;
        for k in 0..=bound + 2 {
            let rel = k_bisimulation(&a, &b, &sigma, k).unwrap();
            if let Some(p) = &prev {
                assert!(rel.is_subset(p), "k-bisimulations must shrink with k");
            }
            prev = Some(rel);
        }
        let stable = k_bisimulation(&a, &b, &sigma, bound).unwrap();
        let full = maximal_bisimulation(&a, &b, &sigma).unwrap();
        assert_eq!(stable, full);
    }

    #[test]
    fn global_self_identity() {
        let a = path(3);
        for mode in [
            GlobalMode::Full,
            GlobalMode::Bounded(0),
            GlobalMode::Bounded(5),
        ] {
            assert!(globally_bisimilar(&a, &a, &sig_r(), mode).unwrap());
        }
    }

    #[test]
    fn delimited_empty_markers_coincides_with_unbounded() {
        let sigma = sig_r();
        for (sa, sb) in [(path(2), path(3)), (path(3), path(3)), (path(4), path(2))] {
            for a in &sa.domain {
                for b in &sb.domain {
                    let d = delimited_bisimilar(&sa, a, &BTreeSet::new(), &sb, b, &sigma).unwrap();
                    let u = bisimilar(&sa, a, &sb, b, &sigma).unwrap();
                    assert_eq!(d, u, "delimited with no markers must equal unbounded");
                }
            }
        }
    }

    #[test]
    fn delimited_marked_root_single_edge() {
        let sa = path(2);
        let mut markers = BTreeSet::new();
        markers.insert("p0".to_string());
        let sb = path(2);
        assert!(delimited_bisimilar(&sa, "p0", &markers, &sb, "p0", &sig_r()).unwrap());
        assert!(delimited_bisimilar(&sa, "p1", &markers, &sb, "p1", &sig_r()).unwrap());
    }

    #[test]
    fn delimited_marker_weakens_upward_demand() {
        // A: 4-node path with markers on p1 and p2; B: 5-node path seen
        // from its end. Unbounded bisimilarity fails (the path depths
        // differ), but climbing up through the marked p2 switches to index
        // 1, and the pair at p2 is vacuous because its predecessor p1 is
        // marked as well: the second marker on the path ends the game.
        let sa = path(4);
        let mut markers = BTreeSet::new();
        markers.insert("p1".to_string());
        markers.insert("p2".to_string());
        let sb = path(5);
        assert!(!bisimilar(&sa, "p3", &sb, "p4", &sig_r()).unwrap());
        assert!(delimited_bisimilar(&sa, "p3", &markers, &sb, "p4", &sig_r()).unwrap());
    }

    #[test]
    fn delimited_requires_forest() {
        let mut s = FiniteStructure::new(&["a", "b", "c"]);
        s.add_binary("R", "a", "b");
        s.add_binary("R", "b", "c");
        s.add_binary("R", "c", "a");
        let r = delimited_bisimilar(&s, "a", &BTreeSet::new(), &path(2), "p0", &sig_r());
        assert!(matches!(r, Err(Error::NotForest(_))));
    }
}
