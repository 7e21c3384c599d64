//! Propositional satisfiability and model enumeration.
//!
//! The constraint systems this crate produces are small — tens of atoms —
//! but they are solved many times in a row with varying blocking clauses,
//! so the solver favours predictability over raw speed: a Tseitin
//! encoding to CNF followed by a plain DPLL search with unit propagation.
//!
//! Determinism is part of the contract.  Decisions are made over the
//! original atoms in a fixed order (attacker guesses last, within each
//! group by canonical spelling) and always try `false` first, so the
//! first model found is the least-guessing one for its channel
//! assignment, and enumeration order is reproducible run to run.

use std::collections::{BTreeMap, BTreeSet};

use crate::ast::Name;
use crate::logic::{Formula, Literal};
use crate::translate::ConstraintSystem;

/// A model as the set of original atoms assigned `true`; every atom of
/// the formula that is absent is `false`.  Models are always total over
/// the formula's atom set.
pub type Model = BTreeSet<Literal>;

struct Cnf {
    /// Original atoms in decision order; variable `i + 1` is `atoms[i]`.
    atoms: Vec<Literal>,
    index: BTreeMap<Literal, usize>,
    clauses: Vec<Vec<i32>>,
    vars: usize,
}

impl Cnf {
    fn new(f: &Formula) -> Cnf {
        let mut atoms: Vec<Literal> = f.atoms().into_iter().collect();
        atoms.sort_by_key(|a| (a.is_guess(), a.canonical()));
        let index: BTreeMap<Literal, usize> =
            atoms.iter().cloned().zip(1..).collect();
        let mut cnf = Cnf {
            vars: atoms.len(),
            atoms,
            index,
            clauses: Vec::new(),
        };
        let root = cnf.encode(f);
        cnf.clauses.push(vec![root]);
        cnf
    }

    fn fresh(&mut self) -> i32 {
        self.vars += 1;
        self.vars as i32
    }

    /// Tseitin encoding: return a solver literal equivalent to `f`,
    /// adding defining clauses for compound subformulas.
    fn encode(&mut self, f: &Formula) -> i32 {
        match f {
            Formula::True => {
                let v = self.fresh();
                self.clauses.push(vec![v]);
                v
            }
            Formula::False => {
                let v = self.fresh();
                self.clauses.push(vec![-v]);
                v
            }
            Formula::Lit(l) => self.index[l] as i32,
            Formula::Not(inner) => -self.encode(inner),
            Formula::And(items) => {
                let parts: Vec<i32> = items.iter().map(|i| self.encode(i)).collect();
                let v = self.fresh();
                let mut long = vec![v];
                for p in &parts {
                    self.clauses.push(vec![-v, *p]);
                    long.push(-p);
                }
                self.clauses.push(long);
                v
            }
            Formula::Or(items) => {
                let parts: Vec<i32> = items.iter().map(|i| self.encode(i)).collect();
                let v = self.fresh();
                let mut long = vec![-v];
                for p in &parts {
                    self.clauses.push(vec![v, -p]);
                    long.push(*p);
                }
                self.clauses.push(long);
                v
            }
            Formula::Implies(a, b) => {
                let (pa, pb) = (self.encode(a), self.encode(b));
                let v = self.fresh();
                self.clauses.push(vec![-v, -pa, pb]);
                self.clauses.push(vec![v, pa]);
                self.clauses.push(vec![v, -pb]);
                v
            }
            Formula::Iff(a, b) => {
                let (pa, pb) = (self.encode(a), self.encode(b));
                let v = self.fresh();
                self.clauses.push(vec![-v, -pa, pb]);
                self.clauses.push(vec![-v, pa, -pb]);
                self.clauses.push(vec![v, pa, pb]);
                self.clauses.push(vec![v, -pa, -pb]);
                v
            }
        }
    }
}

/// Unit propagation to fixpoint.  Returns `false` on conflict.
fn propagate(clauses: &[Vec<i32>], assign: &mut [i8]) -> bool {
    loop {
        let mut changed = false;
        for clause in clauses {
            let mut unassigned: Option<i32> = None;
            let mut count = 0usize;
            let mut satisfied = false;
            for &lit in clause {
                match assign[lit.unsigned_abs() as usize] {
                    0 => {
                        unassigned = Some(lit);
                        count += 1;
                    }
                    v => {
                        if (v > 0) == (lit > 0) {
                            satisfied = true;
                            break;
                        }
                    }
                }
            }
            if satisfied {
                continue;
            }
            match count {
                0 => return false,
                1 => {
                    let lit = unassigned.unwrap();
                    assign[lit.unsigned_abs() as usize] = if lit > 0 { 1 } else { -1 };
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            return true;
        }
    }
}

/// DPLL over all variables, false first, in variable order.  Original
/// atoms occupy the low indices, so the Tseitin auxiliaries are in
/// practice forced by propagation before they are ever decided.
fn search(clauses: &[Vec<i32>], assign: &[i8], vars: usize) -> Option<Vec<i8>> {
    let var = match (1..=vars).find(|&v| assign[v] == 0) {
        None => return Some(assign.to_vec()),
        Some(v) => v,
    };
    for value in [-1i8, 1] {
        let mut trial = assign.to_vec();
        trial[var] = value;
        if propagate(clauses, &mut trial) {
            if let Some(model) = search(clauses, &trial, vars) {
                return Some(model);
            }
        }
    }
    None
}

/// Incremental model enumeration over one formula.  Each call to
/// [`ModelIter::next_model`] returns a fresh total model unless a
/// blocking clause (added automatically or via [`ModelIter::block`])
/// rules everything out.
pub struct ModelIter {
    cnf: Cnf,
}

impl ModelIter {
    pub fn new(f: &Formula) -> ModelIter {
        ModelIter { cnf: Cnf::new(f) }
    }

    /// The atoms of the underlying formula, in decision order.
    pub fn atoms(&self) -> &[Literal] {
        &self.cnf.atoms
    }

    /// Find a model not yet excluded, without blocking it.
    pub fn next_model(&mut self) -> Option<Model> {
        let mut assign = vec![0i8; self.cnf.vars + 1];
        if !propagate(&self.cnf.clauses, &mut assign) {
            return None;
        }
        let full = search(&self.cnf.clauses, &assign, self.cnf.vars)?;
        Some(
            self.cnf
                .atoms
                .iter()
                .enumerate()
                .filter(|(i, _)| full[i + 1] > 0)
                .map(|(_, a)| a.clone())
                .collect(),
        )
    }

    /// Exclude every assignment that agrees with `fixed` on all the
    /// listed atoms.
    pub fn block(&mut self, fixed: &[(Literal, bool)]) {
        let clause: Vec<i32> = fixed
            .iter()
            .map(|(atom, value)| {
                let v = self.cnf.index[atom] as i32;
                if *value {
                    -v
                } else {
                    v
                }
            })
            .collect();
        self.cnf.clauses.push(clause);
    }

    /// Exclude exactly the given total model.
    pub fn block_model(&mut self, model: &Model) {
        let fixed: Vec<(Literal, bool)> = self
            .cnf
            .atoms
            .iter()
            .map(|a| (a.clone(), model.contains(a)))
            .collect();
        self.block(&fixed);
    }
}

/// First model of `f`, if any.
pub fn sat(f: &Formula) -> Option<Model> {
    ModelIter::new(f).next_model()
}

/// All total models of `f` over its atom set, in enumeration order.
pub fn all_models(f: &Formula) -> Vec<Model> {
    let mut iter = ModelIter::new(f);
    let mut out = Vec::new();
    while let Some(m) = iter.next_model() {
        iter.block_model(&m);
        out.push(m);
    }
    out
}

/// The attack a model describes: the channels the attacker guessed.
pub fn attack(model: &Model, universe: &BTreeSet<Name>) -> BTreeSet<Name> {
    universe
        .iter()
        .filter(|c| model.contains(&Literal::Guess((*c).clone())))
        .cloned()
        .collect()
}

/// Every set of channels whose guessing lets the attacker drive the
/// system to the queried label — one set per satisfying model, collapsed
/// into a family.
pub fn attack_sets(cs: &ConstraintSystem) -> BTreeSet<BTreeSet<Name>> {
    all_models(&cs.formula())
        .iter()
        .map(|m| attack(m, &cs.universe))
        .collect()
}

/// The inclusion-minimal elements of a family of sets.
pub fn minimal_sets(family: &BTreeSet<BTreeSet<Name>>) -> BTreeSet<BTreeSet<Name>> {
    family
        .iter()
        .filter(|s| !family.iter().any(|t| t != *s && t.is_subset(s)))
        .cloned()
        .collect()
}
