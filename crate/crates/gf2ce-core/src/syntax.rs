//! Abstract syntax for the two-variable guarded fragment and the FO superset
//! used by the gadget generators: parsing, printing, normalization and the
//! structural measures (closure sets, guarded depth, signatures).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::Error;

/// A first-order variable. The pipeline only ever uses `x` and `y`; `z` is
/// reserved for gadget output (GF³ guards).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Var(pub u8);

pub const X: Var = Var(0);
pub const Y: Var = Var(1);
pub const Z: Var = Var(2);

impl Var {
    pub fn name(self) -> &'static str {
        match self.0 {
            0 => "x",
            1 => "y",
            2 => "z",
            _ => "?",
        }
    }

    pub fn from_name(s: &str) -> Option<Var> {
        match s {
            "x" => Some(X),
            "y" => Some(Y),
            "z" => Some(Z),
            _ => None,
        }
    }

    /// The other variable of the two-variable fragment.
    pub fn other(self) -> Var {
        if self == X {
            Y
        } else {
            X
        }
    }
}

/// Quantifier polarity.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Quant {
    Forall,
    Exists,
}

/// Formula AST. Quantifiers carry an optional guard; `normalize` turns every
/// quantifier into a single-variable one with an explicit guard.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Formula {
    True,
    False,
    Atom(String, Vec<Var>),
    Eq(Var, Var),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Quantified {
        quant: Quant,
        vars: Vec<Var>,
        guard: Option<Box<Formula>>,
        body: Box<Formula>,
    },
}

use Formula::*;

impl Formula {
    pub fn not(f: Formula) -> Formula {
        Not(Box::new(f))
    }
    pub fn and(a: Formula, b: Formula) -> Formula {
        And(Box::new(a), Box::new(b))
    }
    pub fn or(a: Formula, b: Formula) -> Formula {
        Or(Box::new(a), Box::new(b))
    }
    pub fn implies(a: Formula, b: Formula) -> Formula {
        Implies(Box::new(a), Box::new(b))
    }
    pub fn atom(p: &str, vars: &[Var]) -> Formula {
        Atom(p.to_string(), vars.to_vec())
    }

    pub fn forall(v: Var, guard: Formula, body: Formula) -> Formula {
        Quantified {
            quant: Quant::Forall,
            vars: vec![v],
            guard: Some(Box::new(guard)),
            body: Box::new(body),
        }
    }

    pub fn exists(v: Var, guard: Formula, body: Formula) -> Formula {
        Quantified {
            quant: Quant::Exists,
            vars: vec![v],
            guard: Some(Box::new(guard)),
            body: Box::new(body),
        }
    }

    pub fn exists_unguarded(vars: &[Var], body: Formula) -> Formula {
        Quantified {
            quant: Quant::Exists,
            vars: vars.to_vec(),
            guard: None,
            body: Box::new(body),
        }
    }

    pub fn forall_unguarded(vars: &[Var], body: Formula) -> Formula {
        Quantified {
            quant: Quant::Forall,
            vars: vars.to_vec(),
            guard: None,
            body: Box::new(body),
        }
    }

    /// Left-assoc conjunction of a list, `true` when empty.
    pub fn conj(fs: Vec<Formula>) -> Formula {
        let mut it = fs.into_iter();
        match it.next() {
            None => True,
            Some(first) => it.fold(first, Formula::and),
        }
    }

    /// Left-assoc disjunction of a list, `false` when empty.
    pub fn disj(fs: Vec<Formula>) -> Formula {
        let mut it = fs.into_iter();
        match it.next() {
            None => False,
            Some(first) => it.fold(first, Formula::or),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<Var>) {
        match self {
            True | False => {}
            Atom(_, vs) => out.extend(vs.iter().copied()),
            Eq(a, b) => {
                out.insert(*a);
                out.insert(*b);
            }
            Not(f) => f.collect_free(out),
            And(a, b) | Or(a, b) | Implies(a, b) => {
                a.collect_free(out);
                b.collect_free(out);
            }
            Quantified {
                vars, guard, body, ..
            } => {
                let mut inner = BTreeSet::new();
                if let Some(g) = guard {
                    g.collect_free(&mut inner);
                }
                body.collect_free(&mut inner);
                for v in vars {
                    inner.remove(v);
                }
                out.extend(inner);
            }
        }
    }

    pub fn is_sentence(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Renames free variables through `map`, alpha-renaming bound variables
    /// to avoid capture. Only meaningful for {x,y}-formulas.
    pub fn rename(&self, map: &dyn Fn(Var) -> Var) -> Formula {
        match self {
            True => True,
            False => False,
            Atom(p, vs) => Atom(p.clone(), vs.iter().map(|v| map(*v)).collect()),
            Eq(a, b) => Eq(map(*a), map(*b)),
            Not(f) => Formula::not(f.rename(map)),
            And(a, b) => Formula::and(a.rename(map), b.rename(map)),
            Or(a, b) => Formula::or(a.rename(map), b.rename(map)),
            Implies(a, b) => Formula::implies(a.rename(map), b.rename(map)),
            Quantified {
                quant,
                vars,
                guard,
                body,
            } => {
                assert!(vars.len() == 1, "rename requires single-variable quantifiers");
                let bound = vars[0];
                let free: BTreeSet<Var> = self.free_vars();
                // Does any free variable map onto the bound one?
                let collision = free.iter().any(|v| map(*v) == bound);
                let new_bound = if collision { bound.other() } else { bound };
                let inner = move |v: Var| {
                    if v == bound {
                        new_bound
                    } else {
                        map(v)
                    }
                };
                Quantified {
                    quant: *quant,
                    vars: vec![new_bound],
                    guard: guard.as_ref().map(|g| Box::new(g.rename(&inner))),
                    body: Box::new(body.rename(&inner)),
                }
            }
        }
    }

    /// Substitutes variable `from` by `to` in free positions.
    pub fn subst(&self, from: Var, to: Var) -> Formula {
        self.rename(&move |v| if v == from { to } else { v })
    }

    /// Swap x and y in free positions.
    pub fn swap_xy(&self) -> Formula {
        self.rename(&|v| if v == X { Y } else if v == Y { X } else { v })
    }

    /// Negation normal form with single negation stripped where possible:
    /// used to keep closure sets closed under single negation.
    pub fn negate(&self) -> Formula {
        match self {
            Not(f) => (**f).clone(),
            f => Formula::not(f.clone()),
        }
    }
}

/// Finite set of (predicate, arity) pairs. Equality is a logical symbol and
/// never appears here.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Signature {
    pub preds: BTreeMap<String, usize>,
}

impl Signature {
    pub fn new() -> Signature {
        Signature::default()
    }

    pub fn insert(&mut self, name: &str, arity: usize) {
        self.preds.insert(name.to_string(), arity);
    }

    pub fn contains(&self, name: &str) -> bool {
        self.preds.contains_key(name)
    }

    pub fn unary(&self) -> impl Iterator<Item = &String> {
        self.preds.iter().filter(|(_, a)| **a == 1).map(|(n, _)| n)
    }

    pub fn binary(&self) -> impl Iterator<Item = &String> {
        self.preds.iter().filter(|(_, a)| **a == 2).map(|(n, _)| n)
    }

    pub fn is_subset_of(&self, other: &Signature) -> bool {
        self.preds
            .iter()
            .all(|(n, a)| other.preds.get(n) == Some(a))
    }

    pub fn intersect(&self, other: &Signature) -> Signature {
        Signature {
            preds: self
                .preds
                .iter()
                .filter(|(n, a)| other.preds.get(*n) == Some(a))
                .map(|(n, a)| (n.clone(), *a))
                .collect(),
        }
    }

    pub fn union(&self, other: &Signature) -> Signature {
        let mut preds = self.preds.clone();
        for (n, a) in &other.preds {
            preds.insert(n.clone(), *a);
        }
        Signature { preds }
    }
}

/// All predicates occurring in a formula, with their arities.
pub fn signature_of(f: &Formula) -> Signature {
    let mut sig = Signature::new();
    collect_sig(f, &mut sig);
    sig
}

fn collect_sig(f: &Formula, sig: &mut Signature) {
    match f {
        True | False | Eq(..) => {}
        Atom(p, vs) => sig.insert(p, vs.len()),
        Not(a) => collect_sig(a, sig),
        And(a, b) | Or(a, b) | Implies(a, b) => {
            collect_sig(a, sig);
            collect_sig(b, sig);
        }
        Quantified { guard, body, .. } => {
            if let Some(g) = guard {
                collect_sig(g, sig);
            }
            collect_sig(body, sig);
        }
    }
}

/// Maximal nesting of guarded quantifiers. Every quantifier of a normalized
/// sentence counts, including those with `v = v` guards.
pub fn guarded_depth(f: &Formula) -> usize {
    match f {
        True | False | Atom(..) | Eq(..) => 0,
        Not(a) => guarded_depth(a),
        And(a, b) | Or(a, b) | Implies(a, b) => guarded_depth(a).max(guarded_depth(b)),
        Quantified { guard, body, .. } => {
            let g = guard.as_ref().map(|g| guarded_depth(g)).unwrap_or(0);
            1 + g.max(guarded_depth(body))
        }
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    arities: BTreeMap<String, usize>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Parser<'a> {
        Parser {
            src: src.as_bytes(),
            pos: 0,
            arities: BTreeMap::new(),
        }
    }

    fn err(&self, msg: &str) -> Error {
        Error::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        loop {
            while self.pos < self.src.len() && (self.src[self.pos] as char).is_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.src.len() && self.src[self.pos] == b'#' {
                while self.pos < self.src.len() && self.src[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(tok.as_bytes()) {
            // keywords must not glue to identifier characters
            let end = self.pos + tok.len();
            let alpha = tok.chars().next().map(|c| c.is_alphabetic()).unwrap_or(false);
            if alpha {
                if let Some(&c) = self.src.get(end) {
                    if (c as char).is_alphanumeric() || c == b'_' {
                        return false;
                    }
                }
            }
            self.pos = end;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<(), Error> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{tok}`")))
        }
    }

    fn ident(&mut self) -> Result<String, Error> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos] as char;
            if c.is_alphanumeric() || c == '_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        if start == self.pos {
            return Err(self.err("expected identifier"));
        }
        Ok(std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .to_string())
    }

    fn var(&mut self) -> Result<Var, Error> {
        let at = self.pos;
        let name = self.ident()?;
        Var::from_name(&name).ok_or(Error::Syntax {
            pos: at,
            msg: format!("unknown variable `{name}` (use x, y or z)"),
        })
    }

    fn formula(&mut self) -> Result<Formula, Error> {
        self.iff()
    }

    fn iff(&mut self) -> Result<Formula, Error> {
        let lhs = self.implies()?;
        if self.eat("<->") {
            let rhs = self.implies()?;
            // sugar: (a -> b) & (b -> a)
            Ok(Formula::and(
                Formula::implies(lhs.clone(), rhs.clone()),
                Formula::implies(rhs, lhs),
            ))
        } else {
            Ok(lhs)
        }
    }

    fn implies(&mut self) -> Result<Formula, Error> {
        let lhs = self.or()?;
        if self.peek() == Some(b'-') && self.src[self.pos..].starts_with(b"->") {
            self.pos += 2;
            let rhs = self.implies()?;
            Ok(Formula::implies(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn or(&mut self) -> Result<Formula, Error> {
        let mut f = self.and()?;
        while self.peek() == Some(b'|') {
            self.pos += 1;
            f = Formula::or(f, self.and()?);
        }
        Ok(f)
    }

    fn and(&mut self) -> Result<Formula, Error> {
        let mut f = self.unary()?;
        while self.peek() == Some(b'&') {
            self.pos += 1;
            f = Formula::and(f, self.unary()?);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula, Error> {
        self.skip_ws();
        if self.eat("!") {
            return Ok(Formula::not(self.unary()?));
        }
        if self.eat("true") {
            return Ok(True);
        }
        if self.eat("false") {
            return Ok(False);
        }
        if self.eat("forall") {
            return self.quantifier(Quant::Forall);
        }
        if self.eat("exists") {
            return self.quantifier(Quant::Exists);
        }
        if self.peek() == Some(b'(') {
            self.pos += 1;
            let f = self.formula()?;
            self.expect(")")?;
            return Ok(f);
        }
        // atom or equality
        let at = self.pos;
        let name = self.ident()?;
        self.skip_ws();
        match self.src.get(self.pos) {
            Some(b'(') => {
                self.pos += 1;
                let mut args = vec![self.var()?];
                while self.eat(",") {
                    args.push(self.var()?);
                }
                self.expect(")")?;
                let arity = args.len();
                if let Some(&known) = self.arities.get(&name) {
                    if known != arity {
                        return Err(Error::Arity {
                            pred: name,
                            expected: known,
                            got: arity,
                        });
                    }
                } else {
                    self.arities.insert(name.clone(), arity);
                }
                Ok(Atom(name, args))
            }
            Some(b'!') if self.src[self.pos..].starts_with(b"!=") => {
                self.pos += 2;
                let v = Var::from_name(&name).ok_or(Error::Syntax {
                    pos: at,
                    msg: format!("`{name}` is not a variable"),
                })?;
                let w = self.var()?;
                Ok(Formula::not(Eq(v, w)))
            }
            Some(b'=') => {
                self.pos += 1;
                let v = Var::from_name(&name).ok_or(Error::Syntax {
                    pos: at,
                    msg: format!("`{name}` is not a variable"),
                })?;
                let w = self.var()?;
                Ok(Eq(v, w))
            }
            _ => Err(self.err("expected `(`, `=` or `!=` after identifier")),
        }
    }

    fn quantifier(&mut self, quant: Quant) -> Result<Formula, Error> {
        let mut vars = vec![self.var()?];
        loop {
            self.skip_ws();
            if let Some(c) = self.src.get(self.pos) {
                if (*c as char).is_alphabetic() {
                    let save = self.pos;
                    let id = self.ident()?;
                    if let Some(v) = Var::from_name(&id) {
                        vars.push(v);
                        continue;
                    }
                    self.pos = save;
                }
            }
            break;
        }
        self.expect(".")?;
        // quantifier bodies bind tightly; composite bodies take parentheses
        let body = self.unary()?;
        Ok(structure_quantifier(quant, vars, body))
    }
}

/// Splits the guard off a quantifier body: the guard is the first
/// conjunct (existential) or antecedent (universal) when it is an atom or
/// equality covering all free variables of the remainder plus the bound
/// variables. Multi-variable and unguarded quantifiers are kept as sugar,
/// to be resolved by `normalize`.
fn structure_quantifier(quant: Quant, vars: Vec<Var>, body: Formula) -> Formula {
    if vars.len() == 1 {
        let v = vars[0];
        if let Some((g, rest)) = split_guard(quant, &body, v) {
            return Quantified {
                quant,
                vars,
                guard: Some(Box::new(g)),
                body: Box::new(rest),
            };
        }
    }
    Quantified {
        quant,
        vars,
        guard: None,
        body: Box::new(body),
    }
}

fn is_guard_shape(f: &Formula) -> bool {
    matches!(f, Atom(..) | Eq(..))
}

fn guard_covers(g: &Formula, rest: &Formula, bound: Var) -> bool {
    let gv = g.free_vars();
    let mut need = rest.free_vars();
    need.insert(bound);
    need.iter().all(|v| gv.contains(v))
}

fn split_guard(quant: Quant, body: &Formula, bound: Var) -> Option<(Formula, Formula)> {
    match (quant, body) {
        (Quant::Exists, And(a, b)) => {
            // flatten the left spine to find the leading conjunct
            let mut lhs: &Formula = a;
            let mut tail: Vec<&Formula> = vec![b];
            while let And(a2, b2) = lhs {
                tail.push(b2);
                lhs = a2;
            }
            if is_guard_shape(lhs) {
                tail.reverse();
                let rest = Formula::conj(tail.into_iter().cloned().collect());
                if guard_covers(lhs, &rest, bound) {
                    return Some((lhs.clone(), rest));
                }
            }
            None
        }
        (Quant::Exists, g) if is_guard_shape(g) && guard_covers(g, &True, bound) => {
            Some((g.clone(), True))
        }
        (Quant::Forall, Implies(a, b)) => {
            if is_guard_shape(a) && guard_covers(a, b, bound) {
                Some(((**a).clone(), (**b).clone()))
            } else {
                None
            }
        }
        _ => None,
    }
}

/// Parses a formula in the surface grammar. Performs syntax and arity
/// checking only; use [`validate_gf2_sentence`] for guardedness.
pub fn parse(text: &str) -> Result<Formula, Error> {
    let mut p = Parser::new(text);
    let f = p.formula()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("trailing input"));
    }
    check_arities(&f, &mut BTreeMap::new())?;
    Ok(f)
}

/// Parses and validates a GF² sentence (possibly in sugar form).
pub fn parse_gf2(text: &str) -> Result<Formula, Error> {
    let f = parse(text)?;
    validate_gf2_sentence(&f)?;
    Ok(f)
}

fn check_arities(f: &Formula, seen: &mut BTreeMap<String, usize>) -> Result<(), Error> {
    match f {
        Atom(p, vs) => {
            if let Some(&a) = seen.get(p) {
                if a != vs.len() {
                    return Err(Error::Arity {
                        pred: p.clone(),
                        expected: a,
                        got: vs.len(),
                    });
                }
            } else {
                seen.insert(p.clone(), vs.len());
            }
            Ok(())
        }
        True | False | Eq(..) => Ok(()),
        Not(a) => check_arities(a, seen),
        And(a, b) | Or(a, b) | Implies(a, b) => {
            check_arities(a, seen)?;
            check_arities(b, seen)
        }
        Quantified { guard, body, .. } => {
            if let Some(g) = guard {
                check_arities(g, seen)?;
            }
            check_arities(body, seen)
        }
    }
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print(self))
    }
}

/// Prints in the surface grammar; `parse(print(f))` is structurally `f` for
/// formulas produced by `parse` or the constructors.
pub fn print(f: &Formula) -> String {
    let mut s = String::new();
    write_formula(f, &mut s);
    s
}

fn write_formula(f: &Formula, out: &mut String) {
    match f {
        True => out.push_str("true"),
        False => out.push_str("false"),
        Atom(p, vs) => {
            out.push_str(p);
            out.push('(');
            for (i, v) in vs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(v.name());
            }
            out.push(')');
        }
        Eq(a, b) => {
            out.push_str(a.name());
            out.push_str(" = ");
            out.push_str(b.name());
        }
        Not(inner) => {
            if let Eq(a, b) = &**inner {
                out.push_str(a.name());
                out.push_str(" != ");
                out.push_str(b.name());
            } else {
                out.push('!');
                write_formula(inner, out);
            }
        }
        And(a, b) => {
            out.push('(');
            write_formula(a, out);
            out.push_str(" & ");
            write_formula(b, out);
            out.push(')');
        }
        Or(a, b) => {
            out.push('(');
            write_formula(a, out);
            out.push_str(" | ");
            write_formula(b, out);
            out.push(')');
        }
        Implies(a, b) => {
            out.push('(');
            write_formula(a, out);
            out.push_str(" -> ");
            write_formula(b, out);
            out.push(')');
        }
        Quantified {
            quant,
            vars,
            guard,
            body,
        } => {
            out.push_str(match quant {
                Quant::Forall => "forall",
                Quant::Exists => "exists",
            });
            for v in vars {
                out.push(' ');
                out.push_str(v.name());
            }
            out.push_str(". ");
            match (quant, guard) {
                (Quant::Exists, Some(g)) => {
                    if **body == True {
                        write_formula(g, out);
                    } else {
                        out.push('(');
                        write_formula(g, out);
                        out.push_str(" & ");
                        write_formula(body, out);
                        out.push(')');
                    }
                }
                (Quant::Forall, Some(g)) => {
                    out.push('(');
                    write_formula(g, out);
                    out.push_str(" -> ");
                    write_formula(body, out);
                    out.push(')');
                }
                (_, None) => match &**body {
                    And(..) | Or(..) | Implies(..) => {
                        out.push('(');
                        write_formula(body, out);
                        out.push(')');
                    }
                    _ => write_formula(body, out),
                },
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

/// Rewrites a GF² sentence (possibly with sugar quantifiers) so that every
/// quantifier binds exactly one variable and carries an explicit atomic or
/// equality guard, and no subformula of the shape `exists x. (x = y & f)`
/// with distinct variables remains. The result is logically equivalent.
pub fn normalize(f: &Formula) -> Formula {
    match f {
        True | False | Atom(..) | Eq(..) => f.clone(),
        Not(a) => Formula::not(normalize(a)),
        And(a, b) => Formula::and(normalize(a), normalize(b)),
        Or(a, b) => Formula::or(normalize(a), normalize(b)),
        Implies(a, b) => Formula::implies(normalize(a), normalize(b)),
        Quantified {
            quant,
            vars,
            guard,
            body,
        } => {
            if vars.len() > 1 {
                // exists x y. f  =>  exists x. (x = x & exists y. f)
                let head = vars[0];
                let rest = Quantified {
                    quant: *quant,
                    vars: vars[1..].to_vec(),
                    guard: guard.clone(),
                    body: body.clone(),
                };
                let inner = normalize(&rest);
                return match quant {
                    Quant::Exists => Formula::exists(head, Eq(head, head), inner),
                    Quant::Forall => Formula::forall(head, Eq(head, head), inner),
                };
            }
            let v = vars[0];
            let nbody = normalize(body);
            match guard {
                Some(g) => {
                    let g = normalize(g);
                    if let Eq(a, b) = &g {
                        if a != b {
                            // exists x. (x = y & f)  =>  f[x/y]
                            let (bound, other) = if *a == v { (*a, *b) } else { (*b, *a) };
                            debug_assert!(bound == v);
                            let substituted = nbody.subst(bound, other);
                            return match quant {
                                Quant::Exists => substituted,
                                // forall x. (x = y -> f) is f[y/x] as well
                                Quant::Forall => substituted,
                            };
                        }
                    }
                    // a one-variable relational guard folds into the body
                    // under a fresh equality guard
                    let gfree = g.free_vars();
                    if matches!(g, Atom(..)) && gfree.len() <= 1 && !gfree.contains(&v.other()) {
                        return match quant {
                            Quant::Exists => Formula::exists(
                                v,
                                Eq(v, v),
                                Formula::and(g, nbody),
                            ),
                            Quant::Forall => Formula::forall(
                                v,
                                Eq(v, v),
                                Formula::implies(g, nbody),
                            ),
                        };
                    }
                    Quantified {
                        quant: *quant,
                        vars: vec![v],
                        guard: Some(Box::new(g)),
                        body: Box::new(nbody),
                    }
                }
                None => {
                    // the body may supply the guard: first conjunct or
                    // antecedent when it is a covering atom
                    if let Some((g, rest)) = split_guard(*quant, &nbody, v) {
                        let requantified = Quantified {
                            quant: *quant,
                            vars: vec![v],
                            guard: Some(Box::new(g)),
                            body: Box::new(rest),
                        };
                        return normalize(&requantified);
                    }
                    // unguarded sugar: insert a v = v guard
                    match quant {
                        Quant::Exists => Formula::exists(v, Eq(v, v), nbody),
                        Quant::Forall => Formula::forall(v, Eq(v, v), nbody),
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// Checks that a formula is a GF² sentence (possibly in sugar form): no free
/// variables, variables within {x,y}, predicates of arity at most two, and
/// each quantifier either properly guarded or a rewritable sugar form.
pub fn validate_gf2_sentence(f: &Formula) -> Result<(), Error> {
    if !f.is_sentence() {
        return Err(Error::Guardedness(
            "GF² input must be a sentence (no free variables)".into(),
        ));
    }
    for (p, a) in &signature_of(f).preds {
        if *a > 2 {
            return Err(Error::Guardedness(format!(
                "predicate {p} has arity {a}; GF² admits arity at most 2"
            )));
        }
    }
    validate_guarded_rec(f, true)
}

/// Checks the guarded fragment discipline for any arity (used on gadget
/// output); sugar quantifiers are rejected unless `allow_sugar`.
pub fn validate_guarded(f: &Formula, allow_sugar: bool) -> Result<(), Error> {
    validate_guarded_rec(f, allow_sugar)
}

fn validate_guarded_rec(f: &Formula, allow_sugar: bool) -> Result<(), Error> {
    match f {
        True | False | Atom(..) | Eq(..) => Ok(()),
        Not(a) => validate_guarded_rec(a, allow_sugar),
        And(a, b) | Or(a, b) | Implies(a, b) => {
            validate_guarded_rec(a, allow_sugar)?;
            validate_guarded_rec(b, allow_sugar)
        }
        Quantified {
            vars, guard, body, ..
        } => {
            match guard {
                Some(g) => {
                    if !is_guard_shape(g) {
                        return Err(Error::Guardedness(format!(
                            "guard `{}` is not an atom or equality",
                            print(g)
                        )));
                    }
                    let gv = g.free_vars();
                    let mut need = body.free_vars();
                    for v in vars {
                        need.insert(*v);
                    }
                    if !need.iter().all(|v| gv.contains(v)) {
                        return Err(Error::Guardedness(format!(
                            "guard `{}` does not cover all variables of `{}`",
                            print(g),
                            print(body)
                        )));
                    }
                }
                None => {
                    // sugar: allowed when the quantified formula has no free
                    // variables beyond what the bound variables deliver
                    let mut free = body.free_vars();
                    for v in vars {
                        free.remove(v);
                    }
                    if !(allow_sugar && free.is_empty()) {
                        return Err(Error::Guardedness(format!(
                            "unguarded quantifier over `{}`",
                            print(body)
                        )));
                    }
                }
            }
            validate_guarded_rec(body, allow_sugar)
        }
    }
}

/// Checks that a formula uses only the variables x and y (the FO² condition,
/// used on tiling gadget output).
pub fn validate_two_var(f: &Formula) -> Result<(), Error> {
    fn rec(f: &Formula) -> bool {
        match f {
            True | False => true,
            Atom(_, vs) => vs.iter().all(|v| *v == X || *v == Y),
            Eq(a, b) => (*a == X || *a == Y) && (*b == X || *b == Y),
            Not(a) => rec(a),
            And(a, b) | Or(a, b) | Implies(a, b) => rec(a) && rec(b),
            Quantified {
                vars, guard, body, ..
            } => {
                vars.iter().all(|v| *v == X || *v == Y)
                    && guard.as_ref().map(|g| rec(g)).unwrap_or(true)
                    && rec(body)
            }
        }
    }
    if rec(f) {
        Ok(())
    } else {
        Err(Error::Guardedness(
            "formula uses variables beyond x and y".into(),
        ))
    }
}

// ---------------------------------------------------------------------------
// Closure sets
// ---------------------------------------------------------------------------

/// The closure `cl(f)`: subformulas of `f` closed under single negation and
/// renaming of free variables within {x,y}.
#[derive(Clone, Debug)]
pub struct ClosureSet {
    pub members: Vec<Formula>,
    pub index: BTreeMap<Formula, usize>,
}

impl ClosureSet {
    pub fn contains(&self, f: &Formula) -> bool {
        self.index.contains_key(f)
    }

    pub fn position(&self, f: &Formula) -> Option<usize> {
        self.index.get(f).copied()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Computes cl(f) for a normalized GF² sentence.
pub fn closure(f: &Formula) -> ClosureSet {
    let mut subs = BTreeSet::new();
    collect_subformulas(f, &mut subs);

    // close under the four renamings of free variables into {x,y}
    let renamings: [fn(Var) -> Var; 4] = [
        |v| v,
        |v| if v == X { Y } else if v == Y { X } else { v },
        |v| if v == Y { X } else { v },
        |v| if v == X { Y } else { v },
    ];
    let mut renamed = BTreeSet::new();
    for m in &subs {
        for r in &renamings {
            renamed.insert(m.rename(r));
        }
    }
    // close under single negation
    let mut all = BTreeSet::new();
    for m in renamed {
        all.insert(m.negate());
        all.insert(m);
    }
    let members: Vec<Formula> = all.into_iter().collect();
    let index = members
        .iter()
        .enumerate()
        .map(|(i, m)| (m.clone(), i))
        .collect();
    ClosureSet { members, index }
}

fn collect_subformulas(f: &Formula, out: &mut BTreeSet<Formula>) {
    out.insert(f.clone());
    match f {
        True | False | Atom(..) | Eq(..) => {}
        Not(a) => collect_subformulas(a, out),
        And(a, b) | Or(a, b) | Implies(a, b) => {
            collect_subformulas(a, out);
            collect_subformulas(b, out);
        }
        Quantified {
            quant,
            guard,
            body,
            ..
        } => {
            if let Some(g) = guard {
                collect_subformulas(g, out);
                // the quantifier matrix (guard joined with the body) is a
                // subformula for closure purposes: types and automaton
                // states decompose through it
                let matrix = match quant {
                    Quant::Exists => Formula::and((**g).clone(), (**body).clone()),
                    Quant::Forall => Formula::implies((**g).clone(), (**body).clone()),
                };
                out.insert(matrix);
            }
            collect_subformulas(body, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex2_phi1() -> Formula {
        parse("forall x. exists y. R(x,y)").unwrap()
    }

    fn ex2_phi1_prime() -> Formula {
        parse("forall x. exists y. (R(x,y) & x != y)").unwrap()
    }

    fn ex2_phi2() -> Formula {
        parse("forall x. (exists y. (R(x,y) & A(y)) & exists y. (R(x,y) & !A(y)))").unwrap()
    }

    #[test]
    fn parse_phi1_prime_shape() {
        let f = ex2_phi1_prime();
        match &f {
            Quantified {
                quant: Quant::Forall,
                vars,
                guard: None,
                body,
            } => {
                assert_eq!(vars, &vec![X]);
                match &**body {
                    Quantified {
                        quant: Quant::Exists,
                        guard: Some(g),
                        body: inner,
                        ..
                    } => {
                        assert_eq!(**g, Formula::atom("R", &[X, Y]));
                        assert_eq!(**inner, Formula::not(Eq(X, Y)));
                    }
                    other => panic!("unexpected body {other:?}"),
                }
            }
            other => panic!("unexpected shape {other:?}"),
        }
    }

    #[test]
    fn parse_truth_constant() {
        assert_eq!(parse("true").unwrap(), True);
        assert!(parse("true").unwrap().free_vars().is_empty());
    }

    #[test]
    fn parse_canonical_guarded_shape() {
        let f = parse("forall x. (A(x) -> exists y. (R(x,y) & B(y)))").unwrap();
        validate_gf2_sentence(&f).unwrap();
        match f {
            Quantified {
                quant: Quant::Forall,
                guard: Some(g),
                ..
            } => assert_eq!(*g, Formula::atom("A", &[X])),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse("forall x."), Err(Error::Syntax { .. })));
        assert!(matches!(
            parse("R(x,y) & R(x)"),
            Err(Error::Arity { .. })
        ));
        let unguarded = parse("forall y. A(x)").unwrap();
        assert!(validate_gf2_sentence(&unguarded).is_err());
    }

    #[test]
    fn normalize_two_var_exists() {
        // exists x y. R(x,y)  =>  exists x. (x = x & exists y. R(x,y))
        let sugar = Formula::exists_unguarded(&[X, Y], Formula::atom("R", &[X, Y]));
        let expected = Formula::exists(
            X,
            Eq(X, X),
            Formula::exists(Y, Formula::atom("R", &[X, Y]), True),
        );
        assert_eq!(normalize(&sugar), expected);
    }

    #[test]
    fn normalize_idempotent() {
        for text in [
            "forall x. exists y. R(x,y)",
            "exists x. (A(x) & !B(x))",
            "forall x. (exists y. (R(x,y) & A(y)) & exists y. (R(x,y) & !A(y)))",
        ] {
            let f = parse(text).unwrap();
            let n1 = normalize(&f);
            let n2 = normalize(&n1);
            assert_eq!(n1, n2, "normalize not idempotent on {text}");
        }
    }

    #[test]
    fn normalize_equality_guard_substitution() {
        // exists x. (x = y & A(x))  =>  A(y)
        let f = Formula::exists(X, Eq(X, Y), Formula::atom("A", &[X]));
        assert_eq!(normalize(&f), Formula::atom("A", &[Y]));
    }

    #[test]
    fn print_parse_roundtrip() {
        for text in [
            "forall x. exists y. R(x,y)",
            "forall x. exists y. (R(x,y) & x != y)",
            "forall x. (exists y. (R(x,y) & A(y)) & exists y. (R(x,y) & !A(y)))",
            "true",
        ] {
            let f = parse(text).unwrap();
            assert_eq!(parse(&print(&f)).unwrap(), f, "roundtrip failed on {text}");
            let n = normalize(&f);
            assert_eq!(parse(&print(&n)).unwrap(), n);
        }
    }

    #[test]
    fn closure_contains_renamings_and_negations() {
        let f = normalize(&parse("forall x. A(x)").unwrap());
        let cl = closure(&f);
        for want in [
            Formula::atom("A", &[X]),
            Formula::not(Formula::atom("A", &[X])),
            Formula::atom("A", &[Y]),
            Formula::not(Formula::atom("A", &[Y])),
            f.clone(),
            f.negate(),
        ] {
            assert!(cl.contains(&want), "closure missing {}", print(&want));
        }
        // closed under single negation
        for m in &cl.members {
            assert!(cl.contains(&m.negate()), "not closed under negation");
        }
    }

    #[test]
    fn closure_of_true() {
        let cl = closure(&True);
        assert!(cl.contains(&True));
        assert!(cl.contains(&Formula::not(True)));
        assert_eq!(cl.len(), 2);
    }

    #[test]
    fn guarded_depth_examples() {
        assert_eq!(guarded_depth(&Formula::atom("A", &[X])), 0);
        let phi1 = normalize(&ex2_phi1());
        assert_eq!(guarded_depth(&phi1), 2);
        let psi = normalize(&parse("forall x y. (R(x,y) -> x = y)").unwrap());
        assert_eq!(guarded_depth(&psi), 2);
    }

    #[test]
    fn signature_examples() {
        let sig = signature_of(&ex2_phi2());
        assert_eq!(sig.preds.get("R"), Some(&2));
        assert_eq!(sig.preds.get("A"), Some(&1));
        assert_eq!(sig.preds.len(), 2);
        assert!(signature_of(&parse("x = y").unwrap()).preds.is_empty());
        assert!(signature_of(&True).preds.is_empty());
    }

    #[test]
    fn swap_alpha_renames_bound() {
        // exists y. R(x,y), swap x/y => exists x. R(y,x)
        let f = Formula::exists(Y, Formula::atom("R", &[X, Y]), True);
        let swapped = f.swap_xy();
        let expected = Formula::exists(X, Formula::atom("R", &[Y, X]), True);
        assert_eq!(swapped, expected);
    }
}
