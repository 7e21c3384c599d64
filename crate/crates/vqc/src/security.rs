//! Security architectures: how much protection each program point
//! requires, how much the attack costs actually deploy, and where the
//! two invert.
//!
//! A *level map* folds attack costs into a finite lattice of protection
//! levels.  Numeric costs pass through a monotone sequence of threshold
//! regions (`< bound : level`, closed by a mandatory `else`); symbolic
//! costs use a total, monotone table from the cost lattice to the
//! security lattice.
//!
//! A program point is protected as well as its *cheapest* attacks allow:
//! the deployed protection is the meet of the levels its cost-minimal
//! attacks reach.  An inversion is a point whose required level is not
//! below what is deployed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use crate::ast::{LabelId, Name, Process};
use crate::cost::{
    minimal_attacks, parse_numeric, CostAssignment, CostStructure, CostValue,
    FiniteLattice, LatticeError,
};
use crate::translate::{constraint_system, TranslateError};

/// An error in a level map: bad syntax, a violated validation rule, or a
/// dangling element name.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LevelError {
    #[error("line {line}: expected `< bound : level`, `<= bound : level`, `else : level`, or `cost : level`")]
    Syntax { line: usize },
    #[error("line {line}: {name} is not a security level")]
    UnknownLevel { line: usize, name: String },
    #[error("line {line}: {name} is not a cost element")]
    UnknownCost { line: usize, name: String },
    #[error("line {line}: bound does not increase")]
    BoundsNotIncreasing { line: usize },
    #[error("numeric level map needs a final `else` line")]
    MissingElse,
    #[error("level map is not monotone: a higher cost may not lower the level ({0} vs {1})")]
    NotMonotone(String, String),
    #[error("no level for cost element {0}")]
    NotTotal(String),
    #[error("line {line}: {name} is mapped twice")]
    Duplicate { line: usize, name: String },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// One numeric threshold region: costs up to `bound` (strictly, unless
/// `inclusive`) reach `level`, provided no earlier region matched.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub bound: BigRational,
    pub inclusive: bool,
    pub level: String,
}

/// A validated map from attack costs to protection levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LevelMap {
    Numeric {
        regions: Vec<Region>,
        else_level: String,
    },
    Symbolic(BTreeMap<String, String>),
}

impl LevelMap {
    /// Parse a level map whose expected shape follows the cost
    /// structure, and validate it against the security lattice:
    /// regions must have increasing bounds and non-decreasing levels;
    /// symbolic tables must be total and monotone.
    pub fn parse(
        src: &str,
        costs: &CostStructure,
        security: &FiniteLattice,
    ) -> Result<LevelMap, LevelError> {
        match costs {
            CostStructure::Numeric => parse_numeric_map(src, security),
            CostStructure::Symbolic(cost_lat) => {
                parse_symbolic_map(src, cost_lat, security)
            }
        }
    }

    /// The protection level a given attack cost reaches.
    pub fn level(&self, cost: &CostValue) -> &str {
        match (self, cost) {
            (LevelMap::Numeric { regions, else_level }, CostValue::Numeric(q)) => {
                for r in regions {
                    if *q < r.bound || (r.inclusive && *q == r.bound) {
                        return &r.level;
                    }
                }
                else_level
            }
            (LevelMap::Symbolic(table), CostValue::Symbolic(e)) => {
                table.get(e).expect("validated total table")
            }
            _ => panic!("cost value does not match the level map"),
        }
    }

    /// The smallest numeric cost that reaches a level at or above
    /// `required`, when the map is numeric and some region gets there.
    pub fn numeric_threshold(
        &self,
        required: &str,
        security: &FiniteLattice,
    ) -> Option<BigRational> {
        let LevelMap::Numeric { regions, else_level } = self else {
            return None;
        };
        for (i, r) in regions.iter().enumerate() {
            if security.leq(required, &r.level).ok()? {
                return Some(if i == 0 {
                    BigRational::zero()
                } else {
                    regions[i - 1].bound.clone()
                });
            }
        }
        if security.leq(required, else_level).ok()? {
            return regions.last().map(|r| r.bound.clone());
        }
        None
    }
}

fn split_entry(raw: &str, lineno: usize) -> Result<Option<(String, String)>, LevelError> {
    let line = raw.split('#').next().unwrap().trim();
    if line.is_empty() {
        return Ok(None);
    }
    let (lhs, rhs) = line
        .split_once(':')
        .ok_or(LevelError::Syntax { line: lineno })?;
    Ok(Some((lhs.trim().to_string(), rhs.trim().to_string())))
}

fn parse_numeric_map(
    src: &str,
    security: &FiniteLattice,
) -> Result<LevelMap, LevelError> {
    let mut regions: Vec<Region> = Vec::new();
    let mut else_level: Option<String> = None;
    for (idx, raw) in src.lines().enumerate() {
        let lineno = idx + 1;
        let Some((lhs, level)) = split_entry(raw, lineno)? else {
            continue;
        };
        if !security.contains(&level) {
            return Err(LevelError::UnknownLevel {
                line: lineno,
                name: level,
            });
        }
        if lhs == "else" {
            if else_level.is_some() {
                return Err(LevelError::Duplicate {
                    line: lineno,
                    name: "else".into(),
                });
            }
            else_level = Some(level);
            continue;
        }
        if else_level.is_some() {
            // regions after the catch-all can never match
            return Err(LevelError::Syntax { line: lineno });
        }
        let (inclusive, bound_src) = match lhs.strip_prefix("<=") {
            Some(rest) => (true, rest),
            None => match lhs.strip_prefix('<') {
                Some(rest) => (false, rest),
                None => return Err(LevelError::Syntax { line: lineno }),
            },
        };
        let bound = parse_numeric(bound_src)
            .ok_or(LevelError::Syntax { line: lineno })?;
        if let Some(prev) = regions.last() {
            let extends = prev.bound < bound
                || (prev.bound == bound && !prev.inclusive && inclusive);
            if !extends {
                return Err(LevelError::BoundsNotIncreasing { line: lineno });
            }
        }
        regions.push(Region {
            bound,
            inclusive,
            level,
        });
    }
    let else_level = else_level.ok_or(LevelError::MissingElse)?;
    let mut levels: Vec<&String> = regions.iter().map(|r| &r.level).collect();
    levels.push(&else_level);
    for pair in levels.windows(2) {
        if !security.leq(pair[0], pair[1])? {
            return Err(LevelError::NotMonotone(
                pair[0].clone(),
                pair[1].clone(),
            ));
        }
    }
    Ok(LevelMap::Numeric {
        regions,
        else_level,
    })
}

fn parse_symbolic_map(
    src: &str,
    cost_lat: &FiniteLattice,
    security: &FiniteLattice,
) -> Result<LevelMap, LevelError> {
    let mut table: BTreeMap<String, String> = BTreeMap::new();
    for (idx, raw) in src.lines().enumerate() {
        let lineno = idx + 1;
        let Some((cost, level)) = split_entry(raw, lineno)? else {
            continue;
        };
        if !cost_lat.contains(&cost) {
            return Err(LevelError::UnknownCost {
                line: lineno,
                name: cost,
            });
        }
        if !security.contains(&level) {
            return Err(LevelError::UnknownLevel {
                line: lineno,
                name: level,
            });
        }
        if table.insert(cost.clone(), level).is_some() {
            return Err(LevelError::Duplicate {
                line: lineno,
                name: cost,
            });
        }
    }
    for e in cost_lat.elements() {
        if !table.contains_key(e) {
            return Err(LevelError::NotTotal(e.clone()));
        }
    }
    for a in cost_lat.elements() {
        for b in cost_lat.elements() {
            if cost_lat.leq(a, b)? && !security.leq(&table[a], &table[b])? {
                return Err(LevelError::NotMonotone(
                    table[a].clone(),
                    table[b].clone(),
                ));
            }
        }
    }
    Ok(LevelMap::Symbolic(table))
}

/// A requirement read from a security architecture file: the named
/// program point must be protected at least this well.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecurityRequirement {
    pub label: LabelId,
    pub level: String,
}

/// An error in a security architecture file.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SecurityError {
    #[error("line {line}: expected `label N : level`")]
    Syntax { line: usize },
    #[error("line {line}: {name} is not a security level")]
    UnknownLevel { line: usize, name: String },
    #[error("line {line}: label {label} is required twice")]
    Duplicate { line: usize, label: LabelId },
}

/// Parse `label N : level` lines, preserving their order.
pub fn parse_security(
    src: &str,
    security: &FiniteLattice,
) -> Result<Vec<SecurityRequirement>, SecurityError> {
    let mut out: Vec<SecurityRequirement> = Vec::new();
    for (idx, raw) in src.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let syntax = || SecurityError::Syntax { line: lineno };
        let (lhs, level) = line.split_once(':').ok_or_else(syntax)?;
        let number = lhs
            .trim()
            .strip_prefix("label")
            .ok_or_else(syntax)?
            .trim();
        let label = LabelId(number.parse().map_err(|_| syntax())?);
        let level = level.trim().to_string();
        if !security.contains(&level) {
            return Err(SecurityError::UnknownLevel {
                line: lineno,
                name: level,
            });
        }
        if out.iter().any(|r| r.label == label) {
            return Err(SecurityError::Duplicate {
                line: lineno,
                label,
            });
        }
        out.push(SecurityRequirement { label, level });
    }
    Ok(out)
}

/// What the check found at one program point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    /// Deployed protection meets the requirement.
    Pass { deployed: String },
    /// No attack reaches the point at any cost; the requirement holds
    /// vacuously.
    Unreachable,
    /// The requirement exceeds the deployed protection.  For numeric
    /// costs, `gap` is how much the cheapest attack falls short of the
    /// cost the required level demands.
    Inversion {
        deployed: String,
        gap: Option<CostValue>,
    },
}

impl Outcome {
    pub fn is_inversion(&self) -> bool {
        matches!(self, Outcome::Inversion { .. })
    }
}

/// The verdict for one requirement, together with the cost-minimal
/// attacks it rests on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelReport {
    pub label: LabelId,
    pub required: String,
    pub minimal: Vec<(BTreeSet<Name>, CostValue)>,
    pub outcome: Outcome,
}

impl fmt::Display for LabelReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.outcome {
            Outcome::Pass { deployed } => write!(
                f,
                "label {}: pass (required {}, deployed {})",
                self.label, self.required, deployed
            ),
            Outcome::Unreachable => write!(
                f,
                "label {}: pass (required {}, unreachable)",
                self.label, self.required
            ),
            Outcome::Inversion { deployed, gap } => {
                write!(
                    f,
                    "label {}: INVERSION (required {}, deployed {}",
                    self.label, self.required, deployed
                )?;
                if let Some(g) = gap {
                    write!(f, ", gap {g}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// The protection actually deployed at a point: the meet of the levels
/// its cost-minimal attacks reach.  `None` when there is no attack.
pub fn deployed_protection(
    minimal: &[(BTreeSet<Name>, CostValue)],
    map: &LevelMap,
    security: &FiniteLattice,
) -> Result<Option<String>, LatticeError> {
    let mut deployed: Option<String> = None;
    for (_, cost) in minimal {
        let level = map.level(cost);
        deployed = Some(match deployed {
            None => level.to_string(),
            Some(d) => security.glb(&d, level)?.to_string(),
        });
    }
    Ok(deployed)
}

/// An error raised while checking an architecture.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Check every requirement against the process: compute the cost-minimal
/// attacks on the label, fold their costs into deployed protection, and
/// compare with what the architecture demands.
pub fn check_architecture(
    p: &Process,
    requirements: &[SecurityRequirement],
    costs: &CostAssignment,
    map: &LevelMap,
    security: &FiniteLattice,
) -> Result<Vec<LabelReport>, CheckError> {
    let mut reports = Vec::new();
    for req in requirements {
        let cs = constraint_system(p, req.label)?;
        let minimal = minimal_attacks(&cs, costs);
        let outcome = match deployed_protection(&minimal, map, security)? {
            None => Outcome::Unreachable,
            Some(deployed) => {
                if security.leq(&req.level, &deployed)? {
                    Outcome::Pass { deployed }
                } else {
                    let gap = map
                        .numeric_threshold(&req.level, security)
                        .and_then(|threshold| match &minimal.first()?.1 {
                            CostValue::Numeric(achieved) => {
                                Some(CostValue::Numeric(threshold - achieved))
                            }
                            CostValue::Symbolic(_) => None,
                        });
                    Outcome::Inversion { deployed, gap }
                }
            }
        };
        reports.push(LabelReport {
            label: req.label,
            required: req.level.clone(),
            minimal,
            outcome,
        });
    }
    Ok(reports)
}
