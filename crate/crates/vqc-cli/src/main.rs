//! Batch command-line front end for the protection analyser.
//!
//! One analysis per invocation: parse a process, discover or price the
//! attacks on a label, check a security architecture, synthesize an
//! attack tree, or confront the static answer with the bounded
//! operational semantics.  Output is plain text by default and a
//! deterministic JSON document `{command, input, result, diagnostics}`
//! under `--json`.
//!
//! Exit codes: 0 success, 1 usage, 2 process parse/validation errors
//! (including unknown query labels), 3 unsatisfiable query (the label is
//! unreachable), 4 malformed cost, lattice, level or security files.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use vqc::ast::{self, LabelId, Name, Process};
use vqc::cost::{
    minimal_attacks, minimal_models_of_formula, CostAssignment, CostStructure, CostValue,
    FiniteLattice,
};
use vqc::parser;
use vqc::security::{self, LevelMap, Outcome, SecurityRequirement};
use vqc::semantics::{check_underapprox, Witness};
use vqc::solver::{attack_sets, minimal_sets};
use vqc::translate::constraint_system;
use vqc::tree::{synthesize, to_dot};

#[derive(Parser)]
#[command(name = "vqc", version, about = "Protection analysis for value-passing processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a process, echoing its canonical form.
    Parse {
        /// Process source file.
        file: PathBuf,
        /// Emit a JSON document instead of plain text.
        #[arg(long)]
        json: bool,
    },
    /// Enumerate the attacks that reach a label.
    Discover {
        /// Process source file.
        file: PathBuf,
        /// Target label.
        #[arg(long)]
        label: u32,
        /// Report only the inclusion-minimal attacks.
        #[arg(long)]
        minimal: bool,
        /// Emit a JSON document instead of plain text.
        #[arg(long)]
        json: bool,
    },
    /// Compute the cost-minimal attacks that reach a label.
    Quantify {
        /// Process source file.
        file: PathBuf,
        /// Target label.
        #[arg(long)]
        label: u32,
        /// Channel cost file (`name = value` lines).
        #[arg(long)]
        costs: PathBuf,
        /// Cost lattice file; switches from numeric to symbolic costs.
        #[arg(long)]
        lattice: Option<PathBuf>,
        /// Emit a JSON document instead of plain text.
        #[arg(long)]
        json: bool,
    },
    /// Check deployed protection against a security architecture.
    Check {
        /// Process source file.
        file: PathBuf,
        /// Comma-separated labels to check (may be empty).
        #[arg(long, default_value = "")]
        labels: String,
        /// Channel cost file.
        #[arg(long)]
        costs: PathBuf,
        /// Cost lattice file; switches from numeric to symbolic costs.
        #[arg(long)]
        lattice: Option<PathBuf>,
        /// Level map from attack costs to security levels.
        #[arg(long)]
        levels: PathBuf,
        /// Security requirements (`label N : level` lines).
        #[arg(long)]
        security: PathBuf,
        /// Security lattice file.
        #[arg(long)]
        security_lattice: PathBuf,
        /// Emit a JSON document instead of plain text.
        #[arg(long)]
        json: bool,
    },
    /// Synthesize the attack-tree denotation of a label.
    Tree {
        /// Process source file.
        file: PathBuf,
        /// Target label.
        #[arg(long)]
        label: u32,
        /// Print the denotation, or price its minimal models.
        #[arg(long, value_enum, default_value_t = Via::Direct)]
        via: Via,
        /// Channel cost file for `--via constraints` (unit costs if absent).
        #[arg(long)]
        costs: Option<PathBuf>,
        /// Cost lattice file; switches from numeric to symbolic costs.
        #[arg(long)]
        lattice: Option<PathBuf>,
        /// Write the tree in DOT format to this path.
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Title rendered above the DOT tree.
        #[arg(long)]
        title: Option<String>,
        /// Emit a JSON document instead of plain text.
        #[arg(long)]
        json: bool,
    },
    /// Run the bounded semantics oracle against the static analysis.
    Simulate {
        /// Process source file.
        file: PathBuf,
        /// Target label.
        #[arg(long)]
        label: u32,
        /// Comma-separated channels the attacker knows (may be empty).
        #[arg(long, default_value = "")]
        know: String,
        /// Exploration depth in broadcast/case steps.
        #[arg(long, default_value_t = 12)]
        depth: usize,
        /// Copies each replication is unfolded into.
        #[arg(long, default_value_t = 2)]
        unfold: usize,
        /// Emit a JSON document instead of plain text.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Via {
    /// Print the synthesized denotation.
    Direct,
    /// Price the minimal models of the denotation.
    Constraints,
}

/// A diagnosed failure: message for stderr plus the exit class.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn parse(message: impl Into<String>) -> Failure {
        Failure { code: 2, message: message.into() }
    }

    fn config(message: impl Into<String>) -> Failure {
        Failure { code: 4, message: message.into() }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version texts are not usage errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli.command) {
        Ok(code) => std::process::exit(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            std::process::exit(f.code);
        }
    }
}

fn run(command: Command) -> Result<i32, Failure> {
    match command {
        Command::Parse { file, json } => cmd_parse(&file, json),
        Command::Discover { file, label, minimal, json } => {
            cmd_discover(&file, LabelId(label), minimal, json)
        }
        Command::Quantify { file, label, costs, lattice, json } => cmd_quantify(
            &file,
            LabelId(label),
            &costs,
            lattice.as_deref(),
            json,
        ),
        Command::Check {
            file,
            labels,
            costs,
            lattice,
            levels,
            security,
            security_lattice,
            json,
        } => cmd_check(
            &file,
            &labels,
            &costs,
            lattice.as_deref(),
            &levels,
            &security,
            &security_lattice,
            json,
        ),
        Command::Tree { file, label, via, costs, lattice, dot, title, json } => cmd_tree(
            &file,
            LabelId(label),
            via,
            costs.as_deref(),
            lattice.as_deref(),
            dot.as_deref(),
            title.as_deref(),
            json,
        ),
        Command::Simulate { file, label, know, depth, unfold, json } => cmd_simulate(
            &file,
            LabelId(label),
            &know,
            depth,
            unfold,
            json,
        ),
    }
}

fn cmd_parse(file: &Path, json: bool) -> Result<i32, Failure> {
    let p = load_process(file)?;
    let canonical = parser::pretty(&p);
    emit(
        json,
        "parse",
        file,
        json!({ "canonical": canonical }),
        &[],
        &canonical,
    );
    Ok(0)
}

fn cmd_discover(file: &Path, label: LabelId, minimal: bool, json: bool) -> Result<i32, Failure> {
    let p = load_process(file)?;
    let cs = constraint_system(&p, label).map_err(|e| Failure::parse(e.to_string()))?;
    let family = attack_sets(&cs);
    let family = if minimal { minimal_sets(&family) } else { family };
    if family.is_empty() {
        emit(
            json,
            "discover",
            file,
            json!({ "label": label.0, "minimal": minimal, "attacks": [] }),
            &["unreachable".to_string()],
            "unreachable",
        );
        return Ok(3);
    }
    let lines: Vec<String> = family.iter().map(format_attack).collect();
    let sets: Vec<Value> = family.iter().map(attack_value).collect();
    emit(
        json,
        "discover",
        file,
        json!({ "label": label.0, "minimal": minimal, "attacks": sets }),
        &[],
        &lines.join("\n"),
    );
    Ok(0)
}

fn cmd_quantify(
    file: &Path,
    label: LabelId,
    costs: &Path,
    lattice: Option<&Path>,
    json: bool,
) -> Result<i32, Failure> {
    let p = load_process(file)?;
    let cs = constraint_system(&p, label).map_err(|e| Failure::parse(e.to_string()))?;
    let assignment = load_costs(Some(costs), lattice)?;
    let minima = minimal_attacks(&cs, &assignment);
    priced_report(json, "quantify", file, label, Some(minima))
}

#[allow(clippy::too_many_arguments)]
fn cmd_check(
    file: &Path,
    labels: &str,
    costs: &Path,
    lattice: Option<&Path>,
    levels: &Path,
    security: &Path,
    security_lattice: &Path,
    json: bool,
) -> Result<i32, Failure> {
    let p = load_process(file)?;
    let sec_lat = FiniteLattice::parse(&read_config(security_lattice)?)
        .map_err(|e| Failure::config(format!("{}: {e}", security_lattice.display())))?;
    let assignment = load_costs(Some(costs), lattice)?;
    let map = LevelMap::parse(&read_config(levels)?, &assignment.structure, &sec_lat)
        .map_err(|e| Failure::config(format!("{}: {e}", levels.display())))?;
    let requirements = security::parse_security(&read_config(security)?, &sec_lat)
        .map_err(|e| Failure::config(format!("{}: {e}", security.display())))?;

    let mut selected: Vec<SecurityRequirement> = Vec::new();
    for field in labels.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let number: u32 = field
            .parse()
            .map_err(|_| Failure::parse(format!("bad label {field}")))?;
        let req = requirements
            .iter()
            .find(|r| r.label == LabelId(number))
            .ok_or_else(|| {
                Failure::config(format!("label {number} has no security requirement"))
            })?;
        selected.push(req.clone());
    }

    let reports = security::check_architecture(&p, &selected, &assignment, &map, &sec_lat)
        .map_err(|e| match e {
            security::CheckError::Translate(t) => Failure::parse(t.to_string()),
            security::CheckError::Lattice(l) => Failure::config(l.to_string()),
        })?;

    let lines: Vec<String> = reports.iter().map(|r| r.to_string()).collect();
    let rows: Vec<Value> = reports
        .iter()
        .map(|r| {
            let (outcome, deployed, gap) = match &r.outcome {
                Outcome::Pass { deployed } => ("pass", Some(deployed.clone()), None),
                Outcome::Unreachable => ("unreachable", None, None),
                Outcome::Inversion { deployed, gap } => (
                    "inversion",
                    Some(deployed.clone()),
                    gap.as_ref().map(CostValue::to_string),
                ),
            };
            json!({
                "label": r.label.0,
                "required": r.required,
                "deployed": deployed,
                "outcome": outcome,
                "gap": gap,
                "attacks": priced_values(&r.minimal),
            })
        })
        .collect();
    emit(json, "check", file, json!({ "reports": rows }), &[], &lines.join("\n"));
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_tree(
    file: &Path,
    label: LabelId,
    via: Via,
    costs: Option<&Path>,
    lattice: Option<&Path>,
    dot: Option<&Path>,
    title: Option<&str>,
    json: bool,
) -> Result<i32, Failure> {
    let p = load_process(file)?;
    let cs = constraint_system(&p, label).map_err(|e| Failure::parse(e.to_string()))?;
    let tree = synthesize(&cs).map_err(|e| Failure::parse(e.to_string()))?;
    if let Some(path) = dot {
        fs::write(path, to_dot(&tree, title))
            .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    }
    match via {
        Via::Direct => {
            let rendered = tree.to_string();
            emit(
                json,
                "tree",
                file,
                json!({
                    "label": label.0,
                    "via": "direct",
                    "formula": rendered,
                    "dot": dot.map(|p| p.display().to_string()),
                }),
                &[],
                &rendered,
            );
            Ok(0)
        }
        Via::Constraints => {
            let assignment = load_costs(costs, lattice)?;
            let minima = minimal_models_of_formula(&tree.as_formula(), &assignment);
            priced_report(json, "tree", file, label, minima)
        }
    }
}

fn cmd_simulate(
    file: &Path,
    label: LabelId,
    know: &str,
    depth: usize,
    unfold: usize,
    json: bool,
) -> Result<i32, Failure> {
    let p = load_process(file)?;
    let knowledge: BTreeSet<Name> = know
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(Name::new)
        .collect();
    let witness = check_underapprox(&p, label, &knowledge, depth, unfold)
        .map_err(|e| Failure::parse(e.to_string()))?;
    let verdict = match witness {
        Witness::Vacuous => "vacuous",
        Witness::Covered => "covered",
        Witness::Uncovered => "uncovered",
    };
    emit(
        json,
        "simulate",
        file,
        json!({
            "label": label.0,
            "knowledge": knowledge.iter().map(|n| n.as_str()).collect::<Vec<_>>(),
            "depth": depth,
            "unfold": unfold,
            "verdict": verdict,
        }),
        &[],
        verdict,
    );
    Ok(0)
}

/// Shared tail of `quantify` and `tree --via constraints`: price lines,
/// or the unreachable verdict when there is no model at any cost.
fn priced_report(
    json: bool,
    command: &str,
    file: &Path,
    label: LabelId,
    minima: Option<Vec<(BTreeSet<Name>, CostValue)>>,
) -> Result<i32, Failure> {
    let unreachable = match &minima {
        None => true,
        Some(v) => v.is_empty(),
    };
    if unreachable {
        emit(
            json,
            command,
            file,
            json!({ "label": label.0, "attacks": [] }),
            &["unreachable".to_string()],
            "unreachable",
        );
        return Ok(3);
    }
    let minima = minima.unwrap();
    let lines: Vec<String> = minima
        .iter()
        .map(|(a, k)| format!("{} : {k}", format_attack(a)))
        .collect();
    emit(
        json,
        command,
        file,
        json!({ "label": label.0, "attacks": priced_values(&minima) }),
        &[],
        &lines.join("\n"),
    );
    Ok(0)
}

fn load_process(file: &Path) -> Result<Process, Failure> {
    let src = fs::read_to_string(file)
        .map_err(|e| Failure::parse(format!("{}: {e}", file.display())))?;
    let p = parser::parse_process(&src)
        .map_err(|e| Failure::parse(format!("{}: {e}", file.display())))?;
    let violations = ast::validate(&p);
    if let Some(v) = violations.first() {
        return Err(Failure::parse(format!("{}: {v}", file.display())));
    }
    Ok(p)
}

fn read_config(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

/// Build the cost assignment for a command: explicit files when given,
/// unit costs otherwise.
fn load_costs(costs: Option<&Path>, lattice: Option<&Path>) -> Result<CostAssignment, Failure> {
    let structure = match lattice {
        None => CostStructure::Numeric,
        Some(path) => {
            let lat = FiniteLattice::parse(&read_config(path)?)
                .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
            CostStructure::Symbolic(lat)
        }
    };
    match costs {
        None if lattice.is_some() => {
            Err(Failure::config("--lattice requires a cost file".to_string()))
        }
        None => Ok(CostAssignment::unit()),
        Some(path) => CostAssignment::parse(&read_config(path)?, structure)
            .map_err(|e| Failure::config(format!("{}: {e}", path.display()))),
    }
}

fn format_attack(a: &BTreeSet<Name>) -> String {
    let names: Vec<&str> = a.iter().map(|n| n.as_str()).collect();
    format!("{{{}}}", names.join(", "))
}

fn attack_value(a: &BTreeSet<Name>) -> Value {
    Value::Array(a.iter().map(|n| Value::String(n.0.clone())).collect())
}

fn priced_values(minima: &[(BTreeSet<Name>, CostValue)]) -> Vec<Value> {
    minima
        .iter()
        .map(|(a, k)| json!({ "channels": attack_value(a), "cost": k.to_string() }))
        .collect()
}

/// Print the command result: a JSON document on one line, or the plain
/// rendering when non-empty.
fn emit(json: bool, command: &str, input: &Path, result: Value, diagnostics: &[String], human: &str) {
    if json {
        let doc = json!({
            "command": command,
            "input": input.display().to_string(),
            "result": result,
            "diagnostics": diagnostics,
        });
        println!("{doc}");
    } else if !human.is_empty() {
        println!("{human}");
    }
}
