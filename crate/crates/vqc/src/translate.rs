//! Extraction of propositional flow constraints from a process.
//!
//! Every action in a process is guarded by the conjunction of conditions
//! that must have held for control to reach it: channels that delivered a
//! message, and case branches that were taken.  Walking the process once
//! yields a set of *flow rules* `antecedent ~> consequent`, one for each
//! way a channel, input variable, or label can become active.
//!
//! [`constraint_system`] post-processes the raw rules into the closed
//! system the solver works on: rules with the same consequent are merged
//! into a disjunction, every channel additionally admits an attacker guess
//! `g_c`, the implications are strengthened to biimplications, and the
//! queried label is asserted as a fact.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::ast::{self, Binder, Guard, LabelId, Name, Process};
use crate::logic::{Formula, Literal};

/// A single flow rule.  Before augmentation it reads as an implication
/// `antecedent ~> consequent`; inside a [`ConstraintSystem`] it stands for
/// the biimplication `antecedent <=> consequent`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowRule {
    pub antecedent: Formula,
    pub consequent: Literal,
}

impl fmt::Display for FlowRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ~> {}", self.antecedent, self.consequent.canonical())
    }
}

/// The closed constraint system for one query label.
///
/// `rules` holds exactly one biimplication per consequent, in source
/// order, with the guess-only rules for channels that no component ever
/// sends on appended alphabetically.  `universe` is the set of names the
/// process mentions anywhere: these are the channels an attacker may
/// guess, and attack sets are subsets of it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintSystem {
    pub rules: Vec<FlowRule>,
    pub query: LabelId,
    pub universe: BTreeSet<Name>,
}

/// Errors raised while closing a constraint system over a query.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslateError {
    /// The queried label does not occur in the process.
    #[error("label {0} does not occur in the process")]
    UnknownLabel(LabelId),
}

/// Conjunction that keeps formulas in the flat shape the extraction
/// expects: nested conjunctions are spliced and `tt` conjuncts dropped.
/// Duplicate conjuncts are deliberately kept — repeated inputs on one
/// channel really do contribute one condition each.
pub fn conj(a: Formula, b: Formula) -> Formula {
    let mut parts = Vec::new();
    push_conjuncts(a, &mut parts);
    push_conjuncts(b, &mut parts);
    match parts.len() {
        0 => Formula::True,
        1 => parts.pop().unwrap(),
        _ => Formula::And(parts),
    }
}

fn push_conjuncts(f: Formula, parts: &mut Vec<Formula>) {
    match f {
        Formula::True => {}
        Formula::And(items) => {
            for item in items {
                push_conjuncts(item, parts);
            }
        }
        other => parts.push(other),
    }
}

fn push_disjuncts(f: Formula, parts: &mut Vec<Formula>) {
    match f {
        Formula::Or(items) => {
            for item in items {
                push_disjuncts(item, parts);
            }
        }
        other => parts.push(other),
    }
}

/// The condition under which a binder is satisfied: an input demands its
/// channel, and a quality binder combines its sub-binders with the
/// connective its guard denotes.
pub fn hp(b: &Binder) -> Formula {
    match b {
        Binder::Input { channel, .. } => Formula::chan(channel.0.clone()),
        Binder::Quality { guard, subs } => {
            let mut parts: Vec<Formula> = subs.iter().map(hp).collect();
            if parts.len() == 1 {
                return parts.pop().unwrap();
            }
            match guard {
                Guard::Forall => Formula::And(parts),
                Guard::Exists => Formula::Or(parts),
            }
        }
    }
}

/// Rules describing when the variables of a binder receive data: each
/// input `c?x` reached under `phi` yields `phi /\ c ~> x`.  All
/// sub-binders of a quality binder share the same `phi`, since they
/// listen simultaneously.
pub fn th(phi: &Formula, b: &Binder) -> Vec<FlowRule> {
    let mut out = Vec::new();
    th_into(phi, b, &mut out);
    out
}

fn th_into(phi: &Formula, b: &Binder, out: &mut Vec<FlowRule>) {
    match b {
        Binder::Input { channel, var } => out.push(FlowRule {
            antecedent: conj(phi.clone(), Formula::chan(channel.0.clone())),
            consequent: Literal::InVar(var.clone()),
        }),
        Binder::Quality { subs, .. } => {
            for sub in subs {
                th_into(phi, sub, out);
            }
        }
    }
}

/// Extract the raw flow rules of a process, in source order.
///
/// Restriction and replication are transparent: restricting a name does
/// not hide it from an attacker who guesses it, and every copy of a
/// replicated process satisfies the same constraints.
pub fn translate(p: &Process) -> Vec<FlowRule> {
    let mut rules = Vec::new();
    walk(p, &Formula::True, &mut rules);
    rules
}

fn walk(p: &Process, phi: &Formula, out: &mut Vec<FlowRule>) {
    match p {
        Process::Nil => {}
        Process::Restrict { body, .. } => walk(body, phi, out),
        Process::Repl { body } => walk(body, phi, out),
        Process::Par { left, right } => {
            walk(left, phi, out);
            walk(right, phi, out);
        }
        Process::Bind {
            label,
            binder,
            body,
        } => {
            out.extend(th(phi, binder));
            out.push(FlowRule {
                antecedent: phi.clone(),
                consequent: Literal::Lab(*label),
            });
            let inner = conj(phi.clone(), hp(binder));
            walk(body, &inner, out);
        }
        Process::Output {
            label,
            channel,
            body,
            ..
        } => {
            out.push(FlowRule {
                antecedent: phi.clone(),
                consequent: Literal::Chan(channel.clone()),
            });
            out.push(FlowRule {
                antecedent: phi.clone(),
                consequent: Literal::Lab(*label),
            });
            walk(body, phi, out);
        }
        Process::Case {
            label,
            scrutinee,
            then_branch,
            else_branch,
            ..
        } => {
            out.push(FlowRule {
                antecedent: phi.clone(),
                consequent: Literal::Lab(*label),
            });
            let var = Formula::invar(scrutinee.0.clone());
            walk(then_branch, &conj(phi.clone(), var.clone()), out);
            walk(else_branch, &conj(phi.clone(), Formula::not(var)), out);
        }
    }
}

/// Merge rules sharing a consequent into one rule whose antecedent is the
/// disjunction of the individual antecedents, in source order.  The first
/// occurrence of each consequent fixes the position of its merged rule.
pub fn normalize(rules: Vec<FlowRule>) -> Vec<FlowRule> {
    let mut order: Vec<Literal> = Vec::new();
    let mut premises: BTreeMap<Literal, Vec<Formula>> = BTreeMap::new();
    for rule in rules {
        if !premises.contains_key(&rule.consequent) {
            order.push(rule.consequent.clone());
        }
        premises
            .entry(rule.consequent)
            .or_default()
            .push(rule.antecedent);
    }
    order
        .into_iter()
        .map(|consequent| {
            let mut ants = premises.remove(&consequent).unwrap();
            let antecedent = if ants.len() == 1 {
                ants.pop().unwrap()
            } else {
                let mut parts = Vec::new();
                for a in ants {
                    push_disjuncts(a, &mut parts);
                }
                Formula::Or(parts)
            };
            FlowRule {
                antecedent,
                consequent,
            }
        })
        .collect()
}

/// Close normalized rules under attacker guesses.  Every channel rule
/// gains a fresh disjunct `g_c` — the attacker may know the name outright
/// — and every name in the universe without a rule becomes reachable only
/// by guessing: `g_c <=> c`.
pub fn augment(rules: Vec<FlowRule>, universe: &BTreeSet<Name>) -> Vec<FlowRule> {
    let mut out = Vec::with_capacity(rules.len() + universe.len());
    let mut ruled: BTreeSet<Name> = BTreeSet::new();
    for rule in rules {
        match &rule.consequent {
            Literal::Chan(c) => {
                ruled.insert(c.clone());
                let mut parts = vec![Formula::guess(c.0.clone())];
                push_disjuncts(rule.antecedent, &mut parts);
                out.push(FlowRule {
                    antecedent: Formula::Or(parts),
                    consequent: rule.consequent,
                });
            }
            _ => out.push(rule),
        }
    }
    for c in universe {
        if !ruled.contains(c) {
            out.push(FlowRule {
                antecedent: Formula::guess(c.0.clone()),
                consequent: Literal::Chan(c.clone()),
            });
        }
    }
    out
}

/// Build the closed constraint system asking how label `query` can be
/// reached in `p`.
pub fn constraint_system(
    p: &Process,
    query: LabelId,
) -> Result<ConstraintSystem, TranslateError> {
    if !ast::labels(p).contains(&query) {
        return Err(TranslateError::UnknownLabel(query));
    }
    let universe = ast::names(p);
    let rules = augment(normalize(translate(p)), &universe);
    Ok(ConstraintSystem {
        rules,
        query,
        universe,
    })
}

impl ConstraintSystem {
    /// The system as a single formula: the conjunction of all
    /// biimplications, with the queried label asserted as a fact.
    pub fn formula(&self) -> Formula {
        let mut parts: Vec<Formula> = self
            .rules
            .iter()
            .map(|r| {
                Formula::iff(
                    r.antecedent.clone(),
                    Formula::lit(r.consequent.clone()),
                )
            })
            .collect();
        parts.push(Formula::lab(self.query.0));
        Formula::And(parts)
    }

    /// All atoms the system mentions.
    pub fn atoms(&self) -> BTreeSet<Literal> {
        self.formula().atoms()
    }

    /// The system read as one implication per consequent, with attacker
    /// guesses erased.  Channels reachable only by guessing drop out
    /// entirely; for the rest, the `g_c` disjunct is removed.  This is
    /// the view attack-tree synthesis unfolds.
    pub fn implication_view(&self) -> BTreeMap<Literal, Formula> {
        let mut view = BTreeMap::new();
        for rule in &self.rules {
            let antecedent = match (&rule.consequent, &rule.antecedent) {
                (Literal::Chan(_), Formula::Or(parts)) => {
                    let kept: Vec<Formula> = parts
                        .iter()
                        .filter(|p| !matches!(p, Formula::Lit(Literal::Guess(_))))
                        .cloned()
                        .collect();
                    match kept.len() {
                        0 => continue,
                        1 => kept.into_iter().next().unwrap(),
                        _ => Formula::Or(kept),
                    }
                }
                (Literal::Chan(_), Formula::Lit(Literal::Guess(_))) => continue,
                _ => rule.antecedent.clone(),
            };
            view.insert(rule.consequent.clone(), antecedent);
        }
        view
    }
}

/// Total number of literal occurrences in a set of rules, counting each
/// consequent once and omitting `tt` antecedents.
pub fn size(rules: &[FlowRule]) -> usize {
    rules
        .iter()
        .map(|r| literal_occurrences(&r.antecedent) + 1)
        .sum()
}

fn literal_occurrences(f: &Formula) -> usize {
    match f {
        Formula::True | Formula::False => 0,
        Formula::Lit(_) => 1,
        Formula::Not(inner) => literal_occurrences(inner),
        Formula::And(items) | Formula::Or(items) => {
            items.iter().map(literal_occurrences).sum()
        }
        Formula::Implies(a, b) | Formula::Iff(a, b) => {
            literal_occurrences(a) + literal_occurrences(b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_process;

    fn corpus(name: &str) -> Process {
        let path = format!("{}/../../corpus/{name}", env!("CARGO_MANIFEST_DIR"));
        let src = std::fs::read_to_string(&path).unwrap();
        parse_process(&src).unwrap()
    }

    fn chan(n: &str) -> Formula {
        Formula::chan(n)
    }

    fn invar(n: &str) -> Formula {
        Formula::invar(n)
    }

    fn rule_for<'a>(cs: &'a ConstraintSystem, lit: &Literal) -> &'a FlowRule {
        cs.rules
            .iter()
            .find(|r| &r.consequent == lit)
            .unwrap_or_else(|| panic!("no rule for {}", lit.canonical()))
    }

    #[test]
    fn single_input_system() {
        let p = parse_process("1: c?x . 0").unwrap();
        let cs = constraint_system(&p, LabelId(1)).unwrap();
        assert_eq!(
            cs.rules,
            vec![
                FlowRule {
                    antecedent: chan("c"),
                    consequent: Literal::InVar(ast::InVarId("x".into())),
                },
                FlowRule {
                    antecedent: Formula::True,
                    consequent: Literal::Lab(LabelId(1)),
                },
                FlowRule {
                    antecedent: Formula::guess("c"),
                    consequent: Literal::Chan(Name("c".into())),
                },
            ]
        );
        let f = cs.formula();
        assert_eq!(
            f.canonical(),
            "(and (iff chan:c var:x) (iff tt lab:1) (iff guess:c chan:c) lab:1)"
        );
    }

    #[test]
    fn unknown_query_label_is_an_error() {
        let p = parse_process("1: c?x . 0").unwrap();
        assert_eq!(
            constraint_system(&p, LabelId(9)),
            Err(TranslateError::UnknownLabel(LabelId(9)))
        );
    }

    #[test]
    fn output_keeps_body_at_same_condition() {
        let p = parse_process("1: a?x . 2: c!k . 3: d!k . 0").unwrap();
        let rules = translate(&p);
        // Both outputs fire under the same condition as the first.
        assert_eq!(rules[2].antecedent, chan("a"));
        assert_eq!(rules[2].consequent, Literal::Chan(Name("c".into())));
        assert_eq!(rules[4].antecedent, chan("a"));
        assert_eq!(rules[4].consequent, Literal::Chan(Name("d".into())));
    }

    #[test]
    fn quality_binder_condition_follows_the_guards() {
        let p = parse_process("1: &forall(a?x, &exists(b?y, c?z)) . 2: d!k . 0").unwrap();
        let rules = translate(&p);
        // th: every input listens under the incoming condition, here tt.
        assert_eq!(rules[0].antecedent, chan("a"));
        assert_eq!(rules[1].antecedent, chan("b"));
        assert_eq!(rules[2].antecedent, chan("c"));
        // The continuation sees the combined satisfaction condition.
        let phi = Formula::And(vec![
            chan("a"),
            Formula::Or(vec![chan("b"), chan("c")]),
        ]);
        assert_eq!(rules[4].antecedent, phi);
        assert_eq!(rules[4].consequent, Literal::Chan(Name("d".into())));
    }

    #[test]
    fn singleton_quality_binder_collapses() {
        let p = parse_process("1: &exists(a?x) . 2: c!k . 0").unwrap();
        let rules = translate(&p);
        assert_eq!(rules[2].antecedent, chan("a"));
    }

    #[test]
    fn top_level_disjunctions_are_spliced_when_merging() {
        let p = parse_process("1: &exists(a?x, b?y) . 2: c!k . 0").unwrap();
        let cs = constraint_system(&p, LabelId(2)).unwrap();
        let c_rule = rule_for(&cs, &Literal::Chan(Name("c".into())));
        assert_eq!(
            c_rule.antecedent,
            Formula::Or(vec![Formula::guess("c"), chan("a"), chan("b")])
        );
    }

    #[test]
    fn restriction_and_replication_are_transparent() {
        let p = corpus("restrict_repl.vqc");
        let stripped = parse_process(
            "1: a?x_a . 2: c!c . 0 | 3: c?x_c . 4: c?x'_c . 5: c?x''_c . 0",
        )
        .unwrap();
        assert_eq!(translate(&p), translate(&stripped));
    }

    #[test]
    fn repeated_inputs_accumulate_duplicate_conjuncts() {
        let p = corpus("restrict_repl.vqc");
        let cs = constraint_system(&p, LabelId(5)).unwrap();
        assert_eq!(cs.rules.len(), 11);
        assert_eq!(cs.atoms().len(), 13);
        // Three sequential inputs on c pile up one condition per input.
        let l5 = rule_for(&cs, &Literal::Lab(LabelId(5)));
        assert_eq!(l5.antecedent, Formula::And(vec![chan("c"), chan("c")]));
        let c_rule = rule_for(&cs, &Literal::Chan(Name("c".into())));
        assert_eq!(
            c_rule.antecedent,
            Formula::Or(vec![Formula::guess("c"), chan("a")])
        );
        // a is never sent on, so it is reachable only by guessing, and its
        // rule comes last.
        let last = cs.rules.last().unwrap();
        assert_eq!(last.consequent, Literal::Chan(Name("a".into())));
        assert_eq!(last.antecedent, Formula::guess("a"));
    }

    fn nemid_phi() -> Formula {
        Formula::Or(vec![
            chan("cert"),
            Formula::And(vec![chan("id"), chan("pwd"), chan("otp")]),
        ])
    }

    #[test]
    fn login_service_constraint_system() {
        let p = corpus("nemid.vqc");
        let cs = constraint_system(&p, LabelId(13)).unwrap();
        assert_eq!(cs.rules.len(), 28);
        assert_eq!(cs.atoms().len(), 36);
        assert_eq!(cs.universe.len(), 8);

        let phi = nemid_phi();

        // Access is granted by a broadcast on login, or by guessing.
        let access = rule_for(&cs, &Literal::Chan(Name("access".into())));
        assert_eq!(
            access.antecedent,
            Formula::Or(vec![Formula::guess("access"), chan("login")])
        );

        // The three ways the components send on login, in source order,
        // after the guess.
        let login = rule_for(&cs, &Literal::Chan(Name("login".into())));
        assert_eq!(
            login.antecedent,
            Formula::Or(vec![
                Formula::guess("login"),
                Formula::And(vec![phi.clone(), invar("x_cert")]),
                Formula::And(vec![
                    phi.clone(),
                    Formula::not(invar("x_cert")),
                    invar("x_id"),
                    invar("x_pwd"),
                    invar("x_otp"),
                ]),
                Formula::And(vec![
                    chan("id"),
                    chan("pin"),
                    invar("x'_id"),
                    invar("x_pin"),
                ]),
            ])
        );

        // Spot-check the label rules along the applet's else chain.
        let l6 = rule_for(&cs, &Literal::Lab(LabelId(6)));
        assert_eq!(
            l6.antecedent,
            Formula::And(vec![
                phi.clone(),
                Formula::not(invar("x_cert")),
                invar("x_id"),
                invar("x_pwd"),
            ])
        );
        let l13 = rule_for(&cs, &Literal::Lab(LabelId(13)));
        assert_eq!(l13.antecedent, chan("login"));
        let l2 = rule_for(&cs, &Literal::Lab(LabelId(2)));
        assert_eq!(l2.antecedent, phi);

        // Names only ever used as payloads still join the universe.
        let ok = rule_for(&cs, &Literal::Chan(Name("ok".into())));
        assert_eq!(ok.antecedent, Formula::guess("ok"));

        // Guess-only rules close the system alphabetically.
        let tail: Vec<&Literal> = cs.rules[22..].iter().map(|r| &r.consequent).collect();
        let expect = ["cert", "id", "ok", "otp", "pin", "pwd"];
        for (lit, name) in tail.iter().zip(expect) {
            assert_eq!(**lit, Literal::Chan(Name(name.into())));
        }
    }

    #[test]
    fn rules_have_unique_consequents_and_guesses_only_in_channel_rules() {
        for name in [
            "nemid.vqc",
            "restrict_repl.vqc",
            "cyclic.vqc",
            "twopath.vqc",
            "unreachable.vqc",
        ] {
            let p = corpus(name);
            let query = *ast::labels(&p).first().unwrap();
            let cs = constraint_system(&p, query).unwrap();
            let mut seen = BTreeSet::new();
            for rule in &cs.rules {
                assert!(seen.insert(rule.consequent.clone()), "{name}");
                assert!(!rule.consequent.is_guess(), "{name}");
                let has_guess = rule
                    .antecedent
                    .atoms()
                    .iter()
                    .any(|a| a.is_guess());
                if has_guess {
                    assert!(
                        matches!(rule.consequent, Literal::Chan(_)),
                        "{name}: guess outside a channel rule"
                    );
                }
            }
            // Every name in the universe has exactly one channel rule.
            for c in &cs.universe {
                assert_eq!(
                    cs.rules
                        .iter()
                        .filter(|r| r.consequent == Literal::Chan(c.clone()))
                        .count(),
                    1,
                    "{name}: {c}"
                );
            }
        }
    }

    #[test]
    fn implication_view_erases_guesses() {
        let p = corpus("nemid.vqc");
        let cs = constraint_system(&p, LabelId(13)).unwrap();
        let view = cs.implication_view();
        // Guess-only channels drop out of the view.
        assert!(!view.contains_key(&Literal::Chan(Name("cert".into()))));
        // A single remaining disjunct loses the enclosing disjunction.
        assert_eq!(
            view[&Literal::Chan(Name("access".into()))],
            chan("login")
        );
        // Multiple remaining disjuncts keep it.
        match &view[&Literal::Chan(Name("login".into()))] {
            Formula::Or(parts) => assert_eq!(parts.len(), 3),
            other => panic!("unexpected shape: {other}"),
        }
        // Label and variable rules pass through unchanged.
        assert_eq!(view[&Literal::Lab(LabelId(13))], chan("login"));
        assert_eq!(view[&Literal::InVar(ast::InVarId("x_pin".into()))], chan("pin"));
    }

    #[test]
    fn sequential_input_chains_grow_quadratically() {
        for n in 1..=8u32 {
            let mut src = String::new();
            for i in 1..=n {
                src.push_str(&format!("{i}: c{i}?x{i} . "));
            }
            src.push('0');
            let p = parse_process(&src).unwrap();
            let rules = translate(&p);
            assert_eq!(
                size(&rules),
                (n * n + 2 * n) as usize,
                "chain of {n} inputs"
            );
        }
    }

    #[test]
    fn size_omits_tt_and_counts_occurrences() {
        let p = parse_process("1: c?x . 2: c?y . 0").unwrap();
        let rules = translate(&p);
        // c ~> x (2), tt ~> 1 (1), c /\ c ~> y (3), c ~> 2 (2).
        assert_eq!(size(&rules), 8);
    }
}
