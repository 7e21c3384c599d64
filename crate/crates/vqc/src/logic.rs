//! Propositional formulae over the atoms of the flow analysis.
//!
//! Four kinds of atom track what an execution may establish:
//!
//! * [`Literal::Chan`] — some output on the channel has happened, so a
//!   value is available on it;
//! * [`Literal::Guess`] — the environment supplied the value on the
//!   channel rather than the process itself;
//! * [`Literal::InVar`] — the input variable holds real data (`some(..)`)
//!   rather than the `none` placeholder;
//! * [`Literal::Lab`] — control has reached the program point.
//!
//! Formulae are plain syntax trees; [`Formula::eval`] interprets them
//! against a set of true atoms, [`Formula::nnf`] computes negation normal
//! form, and [`equivalent`] decides equivalence by exhausting assignments
//! (usable for the small systems that appear in tests).

use crate::ast::{InVarId, LabelId, Name};
use std::collections::BTreeSet;
use std::fmt;

/// A positive atom. `Ord` follows the canonical rendering so that sorted
/// containers iterate in a stable, implementation-independent order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Literal {
    /// A value is available on the channel.
    Chan(Name),
    /// The environment provides the value on the channel.
    Guess(Name),
    /// The input variable carries actual data.
    InVar(InVarId),
    /// The labelled point is reachable.
    Lab(LabelId),
}

impl Literal {
    /// Unambiguous text form, also used as the canonical sort key.
    pub fn canonical(&self) -> String {
        match self {
            Literal::Chan(c) => format!("chan:{c}"),
            Literal::Guess(c) => format!("guess:{c}"),
            Literal::InVar(x) => format!("var:{x}"),
            Literal::Lab(l) => format!("lab:{l}"),
        }
    }

    pub fn is_guess(&self) -> bool {
        matches!(self, Literal::Guess(_))
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Lit(Literal),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn lit(l: Literal) -> Formula {
        Formula::Lit(l)
    }

    pub fn chan(name: impl Into<String>) -> Formula {
        Formula::Lit(Literal::Chan(Name::new(name)))
    }

    pub fn guess(name: impl Into<String>) -> Formula {
        Formula::Lit(Literal::Guess(Name::new(name)))
    }

    pub fn invar(name: impl Into<String>) -> Formula {
        Formula::Lit(Literal::InVar(InVarId::new(name)))
    }

    pub fn lab(l: u32) -> Formula {
        Formula::Lit(Literal::Lab(LabelId(l)))
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    /// Truth value under the assignment that makes exactly `truths` true.
    pub fn eval(&self, truths: &BTreeSet<Literal>) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Lit(l) => truths.contains(l),
            Formula::Not(f) => !f.eval(truths),
            Formula::And(fs) => fs.iter().all(|f| f.eval(truths)),
            Formula::Or(fs) => fs.iter().any(|f| f.eval(truths)),
            Formula::Implies(a, b) => !a.eval(truths) || b.eval(truths),
            Formula::Iff(a, b) => a.eval(truths) == b.eval(truths),
        }
    }

    /// Every atom occurring in the formula.
    pub fn atoms(&self) -> BTreeSet<Literal> {
        let mut acc = BTreeSet::new();
        self.collect_atoms(&mut acc);
        acc
    }

    fn collect_atoms(&self, acc: &mut BTreeSet<Literal>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Lit(l) => {
                acc.insert(l.clone());
            }
            Formula::Not(f) => f.collect_atoms(acc),
            Formula::And(fs) | Formula::Or(fs) => {
                for f in fs {
                    f.collect_atoms(acc);
                }
            }
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.collect_atoms(acc);
                b.collect_atoms(acc);
            }
        }
    }

    /// Negation normal form: no `Implies`/`Iff`, negation only on atoms.
    /// Empty conjunctions/disjunctions never appear in the result.
    pub fn nnf(&self) -> Formula {
        self.nnf_under(false)
    }

    fn nnf_under(&self, negated: bool) -> Formula {
        match self {
            Formula::True => {
                if negated {
                    Formula::False
                } else {
                    Formula::True
                }
            }
            Formula::False => {
                if negated {
                    Formula::True
                } else {
                    Formula::False
                }
            }
            Formula::Lit(l) => {
                if negated {
                    Formula::not(Formula::Lit(l.clone()))
                } else {
                    Formula::Lit(l.clone())
                }
            }
            Formula::Not(f) => f.nnf_under(!negated),
            Formula::And(fs) => {
                let parts: Vec<_> = fs.iter().map(|f| f.nnf_under(negated)).collect();
                match (negated, parts.is_empty()) {
                    (false, true) => Formula::True,
                    (true, true) => Formula::False,
                    (false, _) => Formula::And(parts),
                    (true, _) => Formula::Or(parts),
                }
            }
            Formula::Or(fs) => {
                let parts: Vec<_> = fs.iter().map(|f| f.nnf_under(negated)).collect();
                match (negated, parts.is_empty()) {
                    (false, true) => Formula::False,
                    (true, true) => Formula::True,
                    (false, _) => Formula::Or(parts),
                    (true, _) => Formula::And(parts),
                }
            }
            Formula::Implies(a, b) => {
                if negated {
                    // !(a -> b) = a & !b
                    Formula::And(vec![a.nnf_under(false), b.nnf_under(true)])
                } else {
                    Formula::Or(vec![a.nnf_under(true), b.nnf_under(false)])
                }
            }
            Formula::Iff(a, b) => {
                // a <-> b  =  (a & b) | (!a & !b); negation swaps one side.
                let (pa, na) = (a.nnf_under(false), a.nnf_under(true));
                let (pb, nb) = (b.nnf_under(negated), b.nnf_under(!negated));
                Formula::Or(vec![Formula::And(vec![pa, pb]), Formula::And(vec![na, nb])])
            }
        }
    }

    /// Unambiguous prefix rendering; equal strings iff equal trees.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        self.write_canonical(&mut s);
        s
    }

    fn write_canonical(&self, out: &mut String) {
        match self {
            Formula::True => out.push_str("tt"),
            Formula::False => out.push_str("ff"),
            Formula::Lit(l) => out.push_str(&l.canonical()),
            Formula::Not(f) => {
                out.push_str("(not ");
                f.write_canonical(out);
                out.push(')');
            }
            Formula::And(fs) => {
                out.push_str("(and");
                for f in fs {
                    out.push(' ');
                    f.write_canonical(out);
                }
                out.push(')');
            }
            Formula::Or(fs) => {
                out.push_str("(or");
                for f in fs {
                    out.push(' ');
                    f.write_canonical(out);
                }
                out.push(')');
            }
            Formula::Implies(a, b) => {
                out.push_str("(implies ");
                a.write_canonical(out);
                out.push(' ');
                b.write_canonical(out);
                out.push(')');
            }
            Formula::Iff(a, b) => {
                out.push_str("(iff ");
                a.write_canonical(out);
                out.push(' ');
                b.write_canonical(out);
                out.push(')');
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

/// Semantic equivalence by exhausting assignments over the combined atom
/// set. Intended for tests and small golden systems.
///
/// # Panics
///
/// Panics when the combined atom set exceeds 24 atoms; exhaustive
/// comparison past that point is a bug in the calling test, not a job for
/// this helper.
pub fn equivalent(a: &Formula, b: &Formula) -> bool {
    let mut atoms = a.atoms();
    atoms.extend(b.atoms());
    let atoms: Vec<_> = atoms.into_iter().collect();
    assert!(
        atoms.len() <= 24,
        "equivalence check over {} atoms is infeasible",
        atoms.len()
    );
    for bits in 0u64..(1u64 << atoms.len()) {
        let truths: BTreeSet<Literal> = atoms
            .iter()
            .enumerate()
            .filter(|(i, _)| bits & (1 << i) != 0)
            .map(|(_, l)| l.clone())
            .collect();
        if a.eval(&truths) != b.eval(&truths) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(n: &str) -> Formula {
        Formula::chan(n)
    }

    #[test]
    fn eval_connectives() {
        let truths: BTreeSet<_> = [Literal::Chan(Name::new("a"))].into_iter().collect();
        assert!(c("a").eval(&truths));
        assert!(!c("b").eval(&truths));
        assert!(Formula::not(c("b")).eval(&truths));
        assert!(Formula::And(vec![c("a"), Formula::True]).eval(&truths));
        assert!(!Formula::And(vec![c("a"), c("b")]).eval(&truths));
        assert!(Formula::Or(vec![c("b"), c("a")]).eval(&truths));
        assert!(Formula::implies(c("b"), c("a")).eval(&truths));
        assert!(!Formula::implies(c("a"), c("b")).eval(&truths));
        assert!(Formula::iff(c("a"), c("a")).eval(&truths));
        assert!(!Formula::iff(c("a"), c("b")).eval(&truths));
    }

    #[test]
    fn empty_and_is_true_and_empty_or_is_false() {
        let truths = BTreeSet::new();
        assert!(Formula::And(vec![]).eval(&truths));
        assert!(!Formula::Or(vec![]).eval(&truths));
    }

    #[test]
    fn atoms_are_collected_across_connectives() {
        let f = Formula::iff(
            Formula::And(vec![c("a"), Formula::guess("a"), Formula::invar("x")]),
            Formula::lab(3),
        );
        let atoms = f.atoms();
        assert_eq!(atoms.len(), 4);
        assert!(atoms.contains(&Literal::Guess(Name::new("a"))));
    }

    #[test]
    fn canonical_distinguishes_atom_kinds() {
        assert_ne!(c("a").canonical(), Formula::guess("a").canonical());
        assert_ne!(c("x").canonical(), Formula::invar("x").canonical());
        assert_eq!(
            Formula::iff(Formula::guess("c"), c("c")).canonical(),
            "(iff guess:c chan:c)"
        );
    }

    #[test]
    fn nnf_eliminates_implications() {
        let f = Formula::implies(c("a"), Formula::iff(c("b"), c("d")));
        let g = f.nnf();
        fn clean(h: &Formula) -> bool {
            match h {
                Formula::Implies(..) | Formula::Iff(..) => false,
                Formula::Not(inner) => matches!(**inner, Formula::Lit(_)),
                Formula::And(fs) | Formula::Or(fs) => fs.iter().all(clean),
                _ => true,
            }
        }
        assert!(clean(&g));
        assert!(equivalent(&f, &g));
    }

    #[test]
    fn equivalence_is_semantic_not_syntactic() {
        let f = Formula::Or(vec![c("a"), c("b")]);
        let g = Formula::not(Formula::And(vec![
            Formula::not(c("b")),
            Formula::not(c("a")),
        ]));
        assert!(equivalent(&f, &g));
        assert!(!equivalent(&f, &c("a")));
    }

    proptest! {
        #[test]
        fn nnf_preserves_meaning(f in arb_formula(), bits in any::<u32>()) {
            let atoms: Vec<_> = f.atoms().into_iter().collect();
            let truths: BTreeSet<_> = atoms
                .iter()
                .enumerate()
                .filter(|(i, _)| bits & (1 << (i % 32)) != 0)
                .map(|(_, l)| l.clone())
                .collect();
            prop_assert_eq!(f.eval(&truths), f.nnf().eval(&truths));
        }

        #[test]
        fn canonical_text_is_injective_on_random_pairs(
            f in arb_formula(),
            g in arb_formula(),
        ) {
            prop_assert_eq!(f.canonical() == g.canonical(), f == g);
        }
    }

    fn arb_formula() -> impl Strategy<Value = Formula> {
        let leaf = prop_oneof![
            Just(Formula::True),
            Just(Formula::False),
            "[a-e]".prop_map(Formula::chan),
            "[a-e]".prop_map(Formula::guess),
            "[x-z]".prop_map(Formula::invar),
            (1u32..9).prop_map(Formula::lab),
        ];
        leaf.prop_recursive(4, 24, 3, |inner| {
            prop_oneof![
                inner.clone().prop_map(Formula::not),
                prop::collection::vec(inner.clone(), 0..3).prop_map(Formula::And),
                prop::collection::vec(inner.clone(), 0..3).prop_map(Formula::Or),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Formula::implies(a, b)),
                (inner.clone(), inner).prop_map(|(a, b)| Formula::iff(a, b)),
            ]
        })
    }
}
