//! Cross-cutting structural properties: the flow translation is blind to
//! operators that only shape the runtime topology, every constraint
//! system it produces is closed, and the operational oracle can only gain
//! behaviours when the attacker learns more names.

use std::collections::BTreeSet;
use std::path::PathBuf;

use vqc::ast::{self, Name, Process};
use vqc::generate::random_process;
use vqc::logic::Literal;
use vqc::parser::parse_process;
use vqc::semantics::reaches;
use vqc::translate::{constraint_system, translate};

fn load(name: &str) -> Process {
    let mut path = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    path.pop();
    path.pop();
    path.push("corpus");
    path.push(name);
    let src = std::fs::read_to_string(&path).expect("corpus file");
    parse_process(&src).expect("corpus parses")
}

/// Restriction scopes names and replication multiplies components, but
/// neither moves any action relative to the path conditions, so the raw
/// rule list must not change when a process is wrapped in them.
#[test]
fn translation_is_blind_to_restriction_and_replication() {
    for seed in 0..150 {
        let p = random_process(seed, 6, 4);
        let raw = translate(&p);

        let restricted = Process::Restrict {
            name: Name("z".to_string()),
            body: Box::new(p.clone()),
        };
        assert_eq!(translate(&restricted), raw, "seed {seed}: restriction");

        let replicated = Process::Repl { body: Box::new(p.clone()) };
        assert_eq!(translate(&replicated), raw, "seed {seed}: replication");

        let both = Process::Repl {
            body: Box::new(Process::Restrict {
                name: Name("z".to_string()),
                body: Box::new(p.clone()),
            }),
        };
        assert_eq!(translate(&both), raw, "seed {seed}: nesting");
    }
}

/// After grouping, every labelled point and every universe channel owns
/// exactly one biimplication, every atom a rule consumes is produced by
/// some rule (guesses are the free inputs), and no antecedent ever
/// mentions a label: reachability facts flow out of the system, never
/// back in.
#[test]
fn constraint_systems_are_closed_with_one_rule_per_site() {
    for seed in 0..150 {
        let p = random_process(seed, 7, 4);
        let labels = ast::labels(&p);
        let cs = constraint_system(&p, labels[0]).unwrap();

        for &label in &labels {
            let defining = cs
                .rules
                .iter()
                .filter(|r| r.consequent == Literal::Lab(label))
                .count();
            assert_eq!(defining, 1, "seed {seed}: label {label}");
        }
        for c in &cs.universe {
            let defining = cs
                .rules
                .iter()
                .filter(|r| r.consequent == Literal::Chan(c.clone()))
                .count();
            assert_eq!(defining, 1, "seed {seed}: channel {c}");
        }

        let defined: BTreeSet<&Literal> =
            cs.rules.iter().map(|r| &r.consequent).collect();
        for rule in &cs.rules {
            match &rule.consequent {
                Literal::Lab(l) => {
                    assert!(labels.contains(l), "seed {seed}: foreign label")
                }
                Literal::Chan(c) => {
                    assert!(cs.universe.contains(c), "seed {seed}: foreign channel")
                }
                _ => {}
            }
            for atom in rule.antecedent.atoms() {
                assert!(
                    !matches!(atom, Literal::Lab(_)),
                    "seed {seed}: label consumed by {rule}"
                );
                if !atom.is_guess() {
                    assert!(
                        defined.contains(&atom),
                        "seed {seed}: {atom} has no defining rule"
                    );
                }
            }
        }
    }
}

/// Extra knowledge only adds attacker broadcasts, so anything reachable
/// against a weaker attacker stays reachable against a stronger one.
#[test]
fn reachability_grows_with_attacker_knowledge() {
    let cases: [(&str, &[&str]); 3] = [
        ("restrict_repl.vqc", &["a", "c"]),
        ("cyclic.vqc", &["a", "b", "c"]),
        ("twopath.vqc", &["a", "b", "t", "done"]),
    ];
    for (file, alphabet) in cases {
        let p = load(file);
        for &label in &ast::labels(&p) {
            let mut outcome = vec![false; 1 << alphabet.len()];
            for (mask, slot) in outcome.iter_mut().enumerate() {
                let knowledge: BTreeSet<Name> = alphabet
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, n)| Name(n.to_string()))
                    .collect();
                *slot = reaches(&p, label, &knowledge, 8, 2);
            }
            for mask in 0..outcome.len() {
                for bit in 0..alphabet.len() {
                    if mask & (1 << bit) == 0 && outcome[mask] {
                        assert!(
                            outcome[mask | (1 << bit)],
                            "{file} label {label}: losing {} broke mask {mask:b}",
                            alphabet[bit]
                        );
                    }
                }
            }
        }
    }
}
