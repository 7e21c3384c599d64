//! Attack costs: exact numeric costs, finite symbolic cost lattices, and
//! the computation of cost-minimal attacks.
//!
//! A cost structure is either the non-negative rationals under addition
//! or a finite join-semilattice under least upper bound.  Numeric costs
//! are parsed exactly — `3.4e616` becomes the full 617-digit integer, not
//! a float — so comparisons never suffer rounding.
//!
//! [`minimal_attacks`] enumerates one model per satisfiable channel
//! assignment (blocking each channel class as it is found; the solver's
//! decision order guarantees the representative model guesses as little
//! as possible), prices each resulting attack, and keeps the cost-minimal
//! ones, discarding supersets that merely pad an attack with free
//! channels.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{pow, One, Signed, Zero};
use thiserror::Error;

use crate::ast::Name;
use crate::logic::{Formula, Literal};
use crate::solver::{attack, ModelIter};
use crate::translate::ConstraintSystem;

/// A single cost: an exact rational or an element of a finite lattice.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum CostValue {
    Numeric(BigRational),
    Symbolic(String),
}

impl fmt::Display for CostValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostValue::Numeric(q) => {
                if q.is_integer() {
                    write!(f, "{}", q.numer())
                } else {
                    write!(f, "{}/{}", q.numer(), q.denom())
                }
            }
            CostValue::Symbolic(s) => write!(f, "{s}"),
        }
    }
}

/// Parse a decimal numeral with optional fraction and exponent into an
/// exact rational.  `1.5e4` is 15000; `3.4e616` is 34 followed by 615
/// zeros.  Returns `None` on malformed input.
pub fn parse_numeric(s: &str) -> Option<BigRational> {
    let s = s.trim();
    let (sign, rest) = match s.strip_prefix('-') {
        Some(r) => (-1, r),
        None => (1, s.strip_prefix('+').unwrap_or(s)),
    };
    let (mantissa, exponent) = match rest.split_once(['e', 'E']) {
        Some((m, e)) => {
            let exp: i64 = e.parse().ok()?;
            (m, exp)
        }
        None => (rest, 0),
    };
    // Guard against pathological exponents before allocating the digits.
    if exponent.abs() > 10_000 {
        return None;
    }
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let digits: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
    let shift = exponent - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let value = if shift >= 0 {
        BigRational::from_integer(digits * pow(ten, shift as usize))
    } else {
        BigRational::new(digits, pow(ten, (-shift) as usize))
    };
    Some(if sign < 0 { -value } else { value })
}

/// A violation of the lattice laws, or a syntax error in a lattice file.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("line {line}: expected `keyword: ...`")]
    Syntax { line: usize },
    #[error("element {0} is declared twice")]
    DuplicateElement(String),
    #[error("element {0} is not declared")]
    UnknownElement(String),
    #[error("no elements declared")]
    NoElements,
    #[error("no bottom declared")]
    NoBottom,
    #[error("not a partial order: {0} and {1} are ordered both ways")]
    NotAntisymmetric(String, String),
    #[error("lub missing: {0} and {1} have no least upper bound")]
    LubMissing(String, String),
    #[error("bottom is not an identity: {0} does not sit above it")]
    BottomNotIdentity(String),
    #[error("declared top does not sit above {0}")]
    TopNotAbove(String),
    #[error("combine is not extensive at {0}, {1}")]
    NotExtensive(String, String),
    #[error("combine is not monotone at ({0}, {1}) vs ({2}, {3})")]
    NotMonotone(String, String, String, String),
}

/// A validated finite lattice: a partial order with all binary least
/// upper bounds, a bottom element, and (therefore) all greatest lower
/// bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteLattice {
    elements: Vec<String>,
    index: BTreeMap<String, usize>,
    bottom: usize,
    leq: Vec<Vec<bool>>,
    lubs: Vec<Vec<usize>>,
    glbs: Vec<Vec<usize>>,
}

/// Check every lattice law over the declared order and build the lub and
/// glb tables.  The first violation found is reported.
pub fn validate_lattice(
    elements: Vec<String>,
    bottom: &str,
    top: Option<&str>,
    edges: &[(String, String)],
) -> Result<FiniteLattice, LatticeError> {
    if elements.is_empty() {
        return Err(LatticeError::NoElements);
    }
    let mut index = BTreeMap::new();
    for (i, e) in elements.iter().enumerate() {
        if index.insert(e.clone(), i).is_some() {
            return Err(LatticeError::DuplicateElement(e.clone()));
        }
    }
    let lookup = |name: &str| -> Result<usize, LatticeError> {
        index
            .get(name)
            .copied()
            .ok_or_else(|| LatticeError::UnknownElement(name.to_string()))
    };
    let n = elements.len();
    let bot = lookup(bottom)?;
    let mut leq = vec![vec![false; n]; n];
    for (i, row) in leq.iter_mut().enumerate() {
        row[i] = true;
    }
    for (a, b) in edges {
        let (ia, ib) = (lookup(a)?, lookup(b)?);
        leq[ia][ib] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if leq[i][k] && leq[k][j] {
                    leq[i][j] = true;
                }
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if leq[i][j] && leq[j][i] {
                return Err(LatticeError::NotAntisymmetric(
                    elements[i].clone(),
                    elements[j].clone(),
                ));
            }
        }
    }
    for (x, name) in elements.iter().enumerate() {
        if !leq[bot][x] {
            return Err(LatticeError::BottomNotIdentity(name.clone()));
        }
    }
    if let Some(t) = top {
        let it = lookup(t)?;
        for (x, name) in elements.iter().enumerate() {
            if !leq[x][it] {
                return Err(LatticeError::TopNotAbove(name.clone()));
            }
        }
    }
    let bound = |a: usize, b: usize, leq: &Vec<Vec<bool>>, upper: bool| -> Option<usize> {
        let cands: Vec<usize> = (0..n)
            .filter(|&u| {
                if upper {
                    leq[a][u] && leq[b][u]
                } else {
                    leq[u][a] && leq[u][b]
                }
            })
            .collect();
        cands
            .iter()
            .copied()
            .find(|&u| {
                cands
                    .iter()
                    .all(|&v| if upper { leq[u][v] } else { leq[v][u] })
            })
    };
    let mut lubs = vec![vec![0usize; n]; n];
    let mut glbs = vec![vec![0usize; n]; n];
    for a in 0..n {
        for b in 0..n {
            lubs[a][b] = bound(a, b, &leq, true).ok_or_else(|| {
                LatticeError::LubMissing(elements[a].clone(), elements[b].clone())
            })?;
            // With all lubs and a bottom present, every pair also has a
            // glb: the lub of the (non-empty) set of common lower bounds.
            glbs[a][b] = bound(a, b, &leq, false).ok_or_else(|| {
                LatticeError::LubMissing(elements[a].clone(), elements[b].clone())
            })?;
        }
    }
    for a in 0..n {
        if lubs[bot][a] != a {
            return Err(LatticeError::BottomNotIdentity(elements[a].clone()));
        }
        for b in 0..n {
            if !leq[a][lubs[a][b]] || !leq[b][lubs[a][b]] {
                return Err(LatticeError::NotExtensive(
                    elements[a].clone(),
                    elements[b].clone(),
                ));
            }
        }
    }
    for a in 0..n {
        for b in 0..n {
            for a2 in 0..n {
                for b2 in 0..n {
                    if leq[a][a2] && leq[b][b2] && !leq[lubs[a][b]][lubs[a2][b2]] {
                        return Err(LatticeError::NotMonotone(
                            elements[a].clone(),
                            elements[b].clone(),
                            elements[a2].clone(),
                            elements[b2].clone(),
                        ));
                    }
                }
            }
        }
    }
    Ok(FiniteLattice {
        elements,
        index,
        bottom: bot,
        leq,
        lubs,
        glbs,
    })
}

impl FiniteLattice {
    /// Parse and validate a lattice description: `elements:`, `bottom:`,
    /// optional `top:`, and one `leq: a < b` line per covering edge.
    pub fn parse(src: &str) -> Result<FiniteLattice, LatticeError> {
        let mut elements: Vec<String> = Vec::new();
        let mut bottom: Option<String> = None;
        let mut top: Option<String> = None;
        let mut edges: Vec<(String, String)> = Vec::new();
        for (idx, raw) in src.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let syntax = || LatticeError::Syntax { line: idx + 1 };
            let (key, rest) = line.split_once(':').ok_or_else(syntax)?;
            let rest = rest.trim();
            match key.trim() {
                "elements" => {
                    elements.extend(
                        rest.split(',').map(|e| e.trim().to_string()),
                    );
                }
                "bottom" => bottom = Some(rest.to_string()),
                "top" => top = Some(rest.to_string()),
                "leq" => {
                    let (a, b) = rest.split_once('<').ok_or_else(syntax)?;
                    edges.push((a.trim().to_string(), b.trim().to_string()));
                }
                _ => return Err(syntax()),
            }
        }
        let bottom = bottom.ok_or(LatticeError::NoBottom)?;
        validate_lattice(elements, &bottom, top.as_deref(), &edges)
    }

    pub fn contains(&self, e: &str) -> bool {
        self.index.contains_key(e)
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn bottom(&self) -> &str {
        &self.elements[self.bottom]
    }

    fn idx(&self, e: &str) -> Result<usize, LatticeError> {
        self.index
            .get(e)
            .copied()
            .ok_or_else(|| LatticeError::UnknownElement(e.to_string()))
    }

    pub fn leq(&self, a: &str, b: &str) -> Result<bool, LatticeError> {
        Ok(self.leq[self.idx(a)?][self.idx(b)?])
    }

    pub fn lub(&self, a: &str, b: &str) -> Result<&str, LatticeError> {
        Ok(&self.elements[self.lubs[self.idx(a)?][self.idx(b)?]])
    }

    pub fn glb(&self, a: &str, b: &str) -> Result<&str, LatticeError> {
        Ok(&self.elements[self.glbs[self.idx(a)?][self.idx(b)?]])
    }
}

/// How costs combine: exact addition over the non-negative rationals, or
/// least upper bound in a finite lattice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CostStructure {
    Numeric,
    Symbolic(FiniteLattice),
}

impl CostStructure {
    /// The cost of doing nothing: 0, or the lattice bottom.
    pub fn bottom(&self) -> CostValue {
        match self {
            CostStructure::Numeric => CostValue::Numeric(BigRational::zero()),
            CostStructure::Symbolic(lat) => {
                CostValue::Symbolic(lat.bottom().to_string())
            }
        }
    }

    pub fn combine(&self, a: &CostValue, b: &CostValue) -> CostValue {
        match (self, a, b) {
            (CostStructure::Numeric, CostValue::Numeric(x), CostValue::Numeric(y)) => {
                CostValue::Numeric(x + y)
            }
            (
                CostStructure::Symbolic(lat),
                CostValue::Symbolic(x),
                CostValue::Symbolic(y),
            ) => CostValue::Symbolic(
                lat.lub(x, y).expect("validated cost value").to_string(),
            ),
            _ => panic!("cost value does not match the cost structure"),
        }
    }

    pub fn leq(&self, a: &CostValue, b: &CostValue) -> bool {
        match (self, a, b) {
            (CostStructure::Numeric, CostValue::Numeric(x), CostValue::Numeric(y)) => {
                x <= y
            }
            (
                CostStructure::Symbolic(lat),
                CostValue::Symbolic(x),
                CostValue::Symbolic(y),
            ) => lat.leq(x, y).expect("validated cost value"),
            _ => panic!("cost value does not match the cost structure"),
        }
    }
}

/// A syntax or well-formedness error in a cost assignment file.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CostFileError {
    #[error("line {line}: expected `name = value`")]
    Syntax { line: usize },
    #[error("line {line}: {value} is not a valid cost")]
    BadValue { line: usize, value: String },
    #[error("line {line}: costs must not be negative")]
    Negative { line: usize },
    #[error("line {line}: {name} is assigned twice")]
    Duplicate { line: usize, name: String },
    #[error("no default cost given")]
    MissingDefault,
}

/// Per-channel costs over a fixed cost structure.  Channels without an
/// explicit entry take the mandatory default.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostAssignment {
    pub structure: CostStructure,
    pub default: CostValue,
    pub per_channel: BTreeMap<Name, CostValue>,
}

impl CostAssignment {
    /// Parse `name = value` lines (with `#` comments) against the given
    /// structure.  Numeric costs must be non-negative; symbolic costs
    /// must name lattice elements.
    pub fn parse(
        src: &str,
        structure: CostStructure,
    ) -> Result<CostAssignment, CostFileError> {
        let mut default: Option<CostValue> = None;
        let mut per_channel: BTreeMap<Name, CostValue> = BTreeMap::new();
        for (idx, raw) in src.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let (name, value) = line
                .split_once('=')
                .ok_or(CostFileError::Syntax { line: lineno })?;
            let (name, value) = (name.trim(), value.trim());
            let cost = match &structure {
                CostStructure::Numeric => {
                    let q = parse_numeric(value).ok_or_else(|| {
                        CostFileError::BadValue {
                            line: lineno,
                            value: value.to_string(),
                        }
                    })?;
                    if q.is_negative() {
                        return Err(CostFileError::Negative { line: lineno });
                    }
                    CostValue::Numeric(q)
                }
                CostStructure::Symbolic(lat) => {
                    if !lat.contains(value) {
                        return Err(CostFileError::BadValue {
                            line: lineno,
                            value: value.to_string(),
                        });
                    }
                    CostValue::Symbolic(value.to_string())
                }
            };
            if name == "default" {
                if default.is_some() {
                    return Err(CostFileError::Duplicate {
                        line: lineno,
                        name: name.to_string(),
                    });
                }
                default = Some(cost);
            } else if per_channel.insert(Name(name.to_string()), cost).is_some() {
                return Err(CostFileError::Duplicate {
                    line: lineno,
                    name: name.to_string(),
                });
            }
        }
        Ok(CostAssignment {
            default: default.ok_or(CostFileError::MissingDefault)?,
            per_channel,
            structure,
        })
    }

    /// A uniform assignment: every channel costs one unit.
    pub fn unit() -> CostAssignment {
        CostAssignment {
            structure: CostStructure::Numeric,
            default: CostValue::Numeric(BigRational::one()),
            per_channel: BTreeMap::new(),
        }
    }

    pub fn channel_cost(&self, c: &Name) -> &CostValue {
        self.per_channel.get(c).unwrap_or(&self.default)
    }

    /// The cost of mounting an attack: combine the costs of all guessed
    /// channels; the empty attack is free.
    pub fn cost_of(&self, attack: &BTreeSet<Name>) -> CostValue {
        attack.iter().fold(self.structure.bottom(), |acc, c| {
            self.structure.combine(&acc, self.channel_cost(c))
        })
    }
}

/// Keep the cost-minimal candidates, then drop any that contain another
/// surviving attack — a superset at the same (minimal) cost only pads
/// the attack with channels that cost nothing extra.
fn prune(
    candidates: BTreeMap<BTreeSet<Name>, CostValue>,
    costs: &CostAssignment,
) -> Vec<(BTreeSet<Name>, CostValue)> {
    let cheapest: Vec<(&BTreeSet<Name>, &CostValue)> = candidates
        .iter()
        .filter(|(_, c)| {
            !candidates
                .values()
                .any(|other| other != *c && costs.structure.leq(other, c))
        })
        .collect();
    cheapest
        .iter()
        .filter(|(a, _)| {
            !cheapest
                .iter()
                .any(|(b, _)| *b != *a && b.is_subset(a))
        })
        .map(|(a, c)| ((*a).clone(), (*c).clone()))
        .collect()
}

/// All cost-minimal attacks on the queried label, with their costs.
///
/// Each satisfiable assignment of the channel atoms is visited once; the
/// representative model the solver returns for it guesses only the
/// channels whose rules cannot otherwise fire, so the candidate attack
/// for the class is as small as possible.  An unreachable label yields
/// the empty vector.
pub fn minimal_attacks(
    cs: &ConstraintSystem,
    costs: &CostAssignment,
) -> Vec<(BTreeSet<Name>, CostValue)> {
    let chan_atoms: Vec<Literal> = cs
        .universe
        .iter()
        .map(|c| Literal::Chan(c.clone()))
        .collect();
    let mut iter = ModelIter::new(&cs.formula());
    let mut candidates: BTreeMap<BTreeSet<Name>, CostValue> = BTreeMap::new();
    while let Some(model) = iter.next_model() {
        let fixed: Vec<(Literal, bool)> = chan_atoms
            .iter()
            .map(|a| (a.clone(), model.contains(a)))
            .collect();
        iter.block(&fixed);
        let a = attack(&model, &cs.universe);
        let cost = costs.cost_of(&a);
        candidates.entry(a).or_insert(cost);
    }
    prune(candidates, costs)
}

/// Cost-minimal models of a formula over channel atoms only, read as
/// attacks: the channels assigned true.  Returns `None` when the formula
/// is unsatisfiable — no attack at any price — which is distinct from a
/// reachable-for-free result `[(∅, ⊥)]`.
pub fn minimal_models_of_formula(
    f: &Formula,
    costs: &CostAssignment,
) -> Option<Vec<(BTreeSet<Name>, CostValue)>> {
    let universe: BTreeSet<Name> = f
        .atoms()
        .into_iter()
        .map(|a| match a {
            Literal::Chan(c) => c,
            other => panic!("non-channel atom {} in attack formula", other.canonical()),
        })
        .collect();
    let mut iter = ModelIter::new(f);
    let mut candidates: BTreeMap<BTreeSet<Name>, CostValue> = BTreeMap::new();
    let mut any = false;
    while let Some(model) = iter.next_model() {
        iter.block_model(&model);
        any = true;
        let a: BTreeSet<Name> = universe
            .iter()
            .filter(|c| model.contains(&Literal::Chan((*c).clone())))
            .cloned()
            .collect();
        let cost = costs.cost_of(&a);
        candidates.entry(a).or_insert(cost);
    }
    if !any {
        return None;
    }
    Some(prune(candidates, costs))
}
