//! Attack trees: a human-readable unfolding of how a program point can
//! be reached.
//!
//! Synthesis walks the implication view of a constraint system.  A
//! channel can be obtained directly (a leaf: the attacker knows the
//! name) or by making some component send on it, so a ruled channel
//! unfolds into `c OR <how c is produced>`; dually, the absence of a
//! ruled channel unfolds into `NOT c AND <how its production fails>`.
//! Input variables are transparent and expand in place.  Each signed
//! channel is unfolded at most once along any branch — revisiting keeps
//! the plain leaf — which bounds the tree depth by twice the universe.
//!
//! The And/Or constructors fold as they build: nested nodes of the same
//! kind are spliced, constants propagate, and duplicate children are
//! dropped no matter how their own children happen to be ordered.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::ast::{LabelId, Name};
use crate::logic::{Formula, Literal};
use crate::translate::ConstraintSystem;

/// A node in an attack tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeNode {
    /// Obtain (or, negated, deny) one channel.
    Leaf { channel: Name, negated: bool },
    And(Vec<TreeNode>),
    Or(Vec<TreeNode>),
    Const(bool),
}

impl TreeNode {
    pub fn leaf(channel: impl Into<String>) -> TreeNode {
        TreeNode::Leaf {
            channel: Name(channel.into()),
            negated: false,
        }
    }

    pub fn neg_leaf(channel: impl Into<String>) -> TreeNode {
        TreeNode::Leaf {
            channel: Name(channel.into()),
            negated: true,
        }
    }

    /// A canonical key that ignores child order, used for deduplication:
    /// two nodes describing the same combination in a different order
    /// get the same key.
    fn key(&self) -> String {
        match self {
            TreeNode::Leaf { channel, negated } => {
                if *negated {
                    format!("!{channel}")
                } else {
                    channel.0.clone()
                }
            }
            TreeNode::Const(b) => if *b { "#t" } else { "#f" }.to_string(),
            TreeNode::And(items) | TreeNode::Or(items) => {
                let mut keys: Vec<String> = items.iter().map(|c| c.key()).collect();
                keys.sort();
                let tag = if matches!(self, TreeNode::And(_)) { "&" } else { "|" };
                format!("({tag} {})", keys.join(" "))
            }
        }
    }

    /// The formula this tree denotes, over channel atoms.
    pub fn as_formula(&self) -> Formula {
        match self {
            TreeNode::Leaf { channel, negated } => {
                let f = Formula::chan(channel.0.clone());
                if *negated {
                    Formula::not(f)
                } else {
                    f
                }
            }
            TreeNode::Const(true) => Formula::True,
            TreeNode::Const(false) => Formula::False,
            TreeNode::And(items) => {
                Formula::And(items.iter().map(|c| c.as_formula()).collect())
            }
            TreeNode::Or(items) => {
                Formula::Or(items.iter().map(|c| c.as_formula()).collect())
            }
        }
    }
}

impl fmt::Display for TreeNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeNode::Leaf { channel, negated } => {
                if *negated {
                    write!(f, "(not {channel})")
                } else {
                    write!(f, "{channel}")
                }
            }
            TreeNode::Const(b) => write!(f, "{}", if *b { "tt" } else { "ff" }),
            TreeNode::And(items) => {
                write!(f, "(and")?;
                for c in items {
                    write!(f, " {c}")?;
                }
                write!(f, ")")
            }
            TreeNode::Or(items) => {
                write!(f, "(or")?;
                for c in items {
                    write!(f, " {c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Conjoin children: splice nested conjunctions, drop `tt`, collapse on
/// `ff`, dedup order-insensitively (first occurrence wins), and collapse
/// singletons.
pub fn and_fold(children: Vec<TreeNode>) -> TreeNode {
    fold(children, true)
}

/// Disjoin children, dually to [`and_fold`].
pub fn or_fold(children: Vec<TreeNode>) -> TreeNode {
    fold(children, false)
}

fn fold(children: Vec<TreeNode>, conj: bool) -> TreeNode {
    let mut flat: Vec<TreeNode> = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for child in children {
        let items = match child {
            TreeNode::And(items) if conj => items,
            TreeNode::Or(items) if !conj => items,
            TreeNode::Const(b) => {
                if b == conj {
                    continue; // neutral element
                }
                return TreeNode::Const(!conj); // absorbing element
            }
            other => vec![other],
        };
        for item in items {
            if let TreeNode::Const(b) = item {
                if b == conj {
                    continue;
                }
                return TreeNode::Const(!conj);
            }
            if seen.insert(item.key()) {
                flat.push(item);
            }
        }
    }
    match flat.len() {
        0 => TreeNode::Const(conj),
        1 => flat.pop().unwrap(),
        _ => {
            if conj {
                TreeNode::And(flat)
            } else {
                TreeNode::Or(flat)
            }
        }
    }
}

/// An error during tree synthesis or formula-to-tree conversion.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("label {0} has no rule to unfold")]
    UnknownLabel(LabelId),
    #[error("no rule for {0} in the implication view")]
    Dangling(String),
    #[error("cannot render {0} as an attack tree")]
    Unsupported(String),
}

/// Synthesize the attack tree for the system's query label by unfolding
/// its rule in the implication view.
pub fn synthesize(cs: &ConstraintSystem) -> Result<TreeNode, TreeError> {
    let view = cs.implication_view();
    let start = view
        .get(&Literal::Lab(cs.query))
        .ok_or(TreeError::UnknownLabel(cs.query))?;
    unfold(start, false, &BTreeSet::new(), &view)
}

fn unfold(
    f: &Formula,
    negated: bool,
    seen: &BTreeSet<(Name, bool)>,
    view: &BTreeMap<Literal, Formula>,
) -> Result<TreeNode, TreeError> {
    match f {
        Formula::True => Ok(TreeNode::Const(!negated)),
        Formula::False => Ok(TreeNode::Const(negated)),
        Formula::Not(inner) => unfold(inner, !negated, seen, view),
        Formula::And(items) | Formula::Or(items) => {
            let folded: Result<Vec<TreeNode>, TreeError> = items
                .iter()
                .map(|i| unfold(i, negated, seen, view))
                .collect();
            // under negation, a conjunction of reasons becomes a choice
            // of refutations, and vice versa
            let conjunctive = matches!(f, Formula::And(_)) != negated;
            Ok(if conjunctive {
                and_fold(folded?)
            } else {
                or_fold(folded?)
            })
        }
        Formula::Lit(Literal::Chan(c)) => {
            let leaf = TreeNode::Leaf {
                channel: c.clone(),
                negated,
            };
            let rule = view.get(&Literal::Chan(c.clone()));
            let (Some(phi), false) = (rule, seen.contains(&(c.clone(), negated)))
            else {
                return Ok(leaf);
            };
            let mut inner_seen = seen.clone();
            inner_seen.insert((c.clone(), negated));
            let sub = unfold(phi, negated, &inner_seen, view)?;
            Ok(if negated {
                // the channel stays silent, and so does every producer
                and_fold(vec![leaf, sub])
            } else {
                // know the name outright, or make a component send on it
                or_fold(vec![leaf, sub])
            })
        }
        Formula::Lit(Literal::InVar(x)) => {
            let phi = view
                .get(&Literal::InVar(x.clone()))
                .ok_or_else(|| TreeError::Dangling(format!("var:{x}")))?;
            unfold(phi, negated, seen, view)
        }
        Formula::Lit(other) => Err(TreeError::Dangling(other.canonical())),
        Formula::Implies(..) | Formula::Iff(..) => {
            Err(TreeError::Unsupported(f.canonical()))
        }
    }
}

/// Convert a formula over channel atoms (negation only over atoms or
/// pushed inward on the fly) into a folded tree.
pub fn parse_tree(f: &Formula) -> Result<TreeNode, TreeError> {
    let empty = BTreeMap::new();
    match unfold(f, false, &BTreeSet::new(), &empty) {
        Err(TreeError::Dangling(lit)) => Err(TreeError::Unsupported(lit)),
        other => other,
    }
}

/// Render a family of attacks as a tree: any attack works, and an attack
/// needs all its channels.
pub fn from_attacks(attacks: &[BTreeSet<Name>]) -> TreeNode {
    or_fold(
        attacks
            .iter()
            .map(|a| {
                and_fold(
                    a.iter()
                        .map(|c| TreeNode::Leaf {
                            channel: c.clone(),
                            negated: false,
                        })
                        .collect(),
                )
            })
            .collect(),
    )
}

/// Render the tree in DOT.  Nodes are numbered in preorder; connectives
/// are circles labelled AND/OR, leaves are boxes carrying the channel
/// name (with a `NOT ` prefix when negated).
pub fn to_dot(tree: &TreeNode, title: Option<&str>) -> String {
    use std::fmt::Write;

    let mut out = String::new();
    let _ = writeln!(out, "digraph attack_tree {{");
    if let Some(t) = title {
        let _ = writeln!(out, "  label=\"{}\";", t.replace('"', "\\\""));
        let _ = writeln!(out, "  labelloc=\"t\";");
    }
    fn emit(node: &TreeNode, next: &mut usize, out: &mut String) -> usize {
        use std::fmt::Write;
        let id = *next;
        *next += 1;
        match node {
            TreeNode::Leaf { channel, negated } => {
                let text = if *negated {
                    format!("NOT {channel}")
                } else {
                    channel.0.clone()
                };
                let _ = writeln!(out, "  n{id} [label=\"{text}\", shape=box];");
            }
            TreeNode::Const(b) => {
                let text = if *b { "TRUE" } else { "FALSE" };
                let _ = writeln!(out, "  n{id} [label=\"{text}\", shape=box];");
            }
            TreeNode::And(items) | TreeNode::Or(items) => {
                let text = if matches!(node, TreeNode::And(_)) {
                    "AND"
                } else {
                    "OR"
                };
                let _ = writeln!(out, "  n{id} [label=\"{text}\", shape=circle];");
                for child in items {
                    let cid = emit(child, next, out);
                    let _ = writeln!(out, "  n{id} -> n{cid};");
                }
            }
        }
        id
    }
    let mut next = 0;
    emit(tree, &mut next, &mut out);
    let _ = writeln!(out, "}}");
    out
}
