//! Process syntax: names, optional-data variables, binders and processes,
//! together with the well-formedness checks the analyses rely on.
//!
//! Labels decorate every action and are the query points of the whole
//! pipeline; variables come in two kinds, input variables (`x`, holding
//! optional data filled in by a binder) and term variables (`y`, bound by
//! the some-branch of a case clause).

use std::collections::BTreeSet;
use std::fmt;

/// A channel or constant name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Name(pub String);

impl Name {
    pub fn new(s: impl Into<String>) -> Self {
        Name(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An input variable, bound (exactly once) by a binder.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InVarId(pub String);

impl InVarId {
    pub fn new(s: impl Into<String>) -> Self {
        InVarId(s.into())
    }
}

impl fmt::Display for InVarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A term variable, bound (exactly once) by the some-branch of a case.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TermVarId(pub String);

impl TermVarId {
    pub fn new(s: impl Into<String>) -> Self {
        TermVarId(s.into())
    }
}

impl fmt::Display for TermVarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A program-point label. Positive; uniqueness is checked by [`validate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabelId(pub u32);

impl fmt::Display for LabelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Quality guard of a composite binder: all sub-binders, or at least one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Guard {
    Forall,
    Exists,
}

/// An input binder: either a simple input `c?x` or a quality binder
/// combining sub-binders under a guard.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Binder {
    Input { channel: Name, var: InVarId },
    Quality { guard: Guard, subs: Vec<Binder> },
}

impl Binder {
    /// Input variables bound by this binder, in syntactic order.
    pub fn bound_vars(&self) -> Vec<&InVarId> {
        match self {
            Binder::Input { var, .. } => vec![var],
            Binder::Quality { subs, .. } => subs.iter().flat_map(|b| b.bound_vars()).collect(),
        }
    }

    /// Channels this binder listens on, in syntactic order.
    pub fn channels(&self) -> Vec<&Name> {
        match self {
            Binder::Input { channel, .. } => vec![channel],
            Binder::Quality { subs, .. } => subs.iter().flat_map(|b| b.channels()).collect(),
        }
    }
}

/// A term in output position: a constant name or a case-bound variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Const(Name),
    Var(TermVarId),
}

/// A process.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Process {
    Nil,
    Restrict {
        name: Name,
        body: Box<Process>,
    },
    Par {
        left: Box<Process>,
        right: Box<Process>,
    },
    Bind {
        label: LabelId,
        binder: Binder,
        body: Box<Process>,
    },
    Output {
        label: LabelId,
        channel: Name,
        payload: Term,
        body: Box<Process>,
    },
    Repl {
        body: Box<Process>,
    },
    Case {
        label: LabelId,
        scrutinee: InVarId,
        var: TermVarId,
        then_branch: Box<Process>,
        else_branch: Box<Process>,
    },
}

/// A well-formedness defect found by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// Labels start at 1; 0 is reserved as "no label" in diagnostics.
    NonPositiveLabel,
    DuplicateLabel(LabelId),
    /// An input or term variable bound more than once.
    DuplicateBinding(String),
    /// A case clause scrutinises a variable no enclosing binder binds.
    UnboundInVar { var: InVarId, label: LabelId },
    /// An output payload uses a variable no enclosing case branch binds.
    UnboundTermVar { var: TermVarId, label: LabelId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveLabel => write!(f, "label 0 is not a valid program point"),
            Violation::DuplicateLabel(l) => write!(f, "label {l} occurs more than once"),
            Violation::DuplicateBinding(v) => write!(f, "variable {v} is bound more than once"),
            Violation::UnboundInVar { var, label } => {
                write!(f, "case at label {label} scrutinises unbound variable {var}")
            }
            Violation::UnboundTermVar { var, label } => {
                write!(f, "output at label {label} uses unbound variable {var}")
            }
        }
    }
}

/// Check the three global well-formedness conditions: labels are positive
/// and pairwise distinct, every variable is bound exactly once, and every
/// use of a variable sits inside the scope of its binder.
///
/// Returns all violations, in a stable traversal order; an empty vector
/// means the process is well formed.
pub fn validate(p: &Process) -> Vec<Violation> {
    let mut st = Validator::default();
    st.walk(p, &mut Vec::new(), &mut Vec::new());
    st.violations
}

#[derive(Default)]
struct Validator {
    labels: BTreeSet<u32>,
    in_vars: BTreeSet<String>,
    term_vars: BTreeSet<String>,
    violations: Vec<Violation>,
}

impl Validator {
    fn label(&mut self, l: LabelId) {
        if l.0 == 0 {
            self.violations.push(Violation::NonPositiveLabel);
        } else if !self.labels.insert(l.0) {
            self.violations.push(Violation::DuplicateLabel(l));
        }
    }

    fn bind_in_var(&mut self, v: &InVarId) {
        if !self.in_vars.insert(v.0.clone()) {
            self.violations.push(Violation::DuplicateBinding(v.0.clone()));
        }
    }

    fn bind_term_var(&mut self, v: &TermVarId) {
        if !self.term_vars.insert(v.0.clone()) {
            self.violations.push(Violation::DuplicateBinding(v.0.clone()));
        }
    }

    fn walk(&mut self, p: &Process, xs: &mut Vec<InVarId>, ys: &mut Vec<TermVarId>) {
        match p {
            Process::Nil => {}
            Process::Restrict { body, .. } | Process::Repl { body } => self.walk(body, xs, ys),
            Process::Par { left, right } => {
                self.walk(left, xs, ys);
                self.walk(right, xs, ys);
            }
            Process::Bind { label, binder, body } => {
                self.label(*label);
                let bound: Vec<InVarId> = binder.bound_vars().into_iter().cloned().collect();
                for v in &bound {
                    self.bind_in_var(v);
                }
                let n = bound.len();
                xs.extend(bound);
                self.walk(body, xs, ys);
                xs.truncate(xs.len() - n);
            }
            Process::Output { label, payload, body, .. } => {
                self.label(*label);
                if let Term::Var(y) = payload {
                    if !ys.contains(y) {
                        self.violations.push(Violation::UnboundTermVar {
                            var: y.clone(),
                            label: *label,
                        });
                    }
                }
                self.walk(body, xs, ys);
            }
            Process::Case { label, scrutinee, var, then_branch, else_branch } => {
                self.label(*label);
                if !xs.contains(scrutinee) {
                    self.violations.push(Violation::UnboundInVar {
                        var: scrutinee.clone(),
                        label: *label,
                    });
                }
                self.bind_term_var(var);
                ys.push(var.clone());
                self.walk(then_branch, xs, ys);
                ys.pop();
                self.walk(else_branch, xs, ys);
            }
        }
    }
}

/// All names occurring in the process, restricted or not: restriction
/// binders, input channels, output channels and constant payloads.
pub fn names(p: &Process) -> BTreeSet<Name> {
    let mut acc = BTreeSet::new();
    collect_names(p, &mut acc);
    acc
}

fn collect_names(p: &Process, acc: &mut BTreeSet<Name>) {
    match p {
        Process::Nil => {}
        Process::Restrict { name, body } => {
            acc.insert(name.clone());
            collect_names(body, acc);
        }
        Process::Par { left, right } => {
            collect_names(left, acc);
            collect_names(right, acc);
        }
        Process::Bind { binder, body, .. } => {
            for c in binder.channels() {
                acc.insert(c.clone());
            }
            collect_names(body, acc);
        }
        Process::Output { channel, payload, body, .. } => {
            acc.insert(channel.clone());
            if let Term::Const(n) = payload {
                acc.insert(n.clone());
            }
            collect_names(body, acc);
        }
        Process::Repl { body } => collect_names(body, acc),
        Process::Case { then_branch, else_branch, .. } => {
            collect_names(then_branch, acc);
            collect_names(else_branch, acc);
        }
    }
}

/// Names occurring free, i.e. not under a restriction binding them.
pub fn free_names(p: &Process) -> BTreeSet<Name> {
    let mut acc = BTreeSet::new();
    collect_free(p, &mut Vec::new(), &mut acc);
    acc
}

fn collect_free(p: &Process, bound: &mut Vec<Name>, acc: &mut BTreeSet<Name>) {
    let hit = |n: &Name, bound: &[Name], acc: &mut BTreeSet<Name>| {
        if !bound.contains(n) {
            acc.insert(n.clone());
        }
    };
    match p {
        Process::Nil => {}
        Process::Restrict { name, body } => {
            bound.push(name.clone());
            collect_free(body, bound, acc);
            bound.pop();
        }
        Process::Par { left, right } => {
            collect_free(left, bound, acc);
            collect_free(right, bound, acc);
        }
        Process::Bind { binder, body, .. } => {
            for c in binder.channels() {
                hit(c, bound, acc);
            }
            collect_free(body, bound, acc);
        }
        Process::Output { channel, payload, body, .. } => {
            hit(channel, bound, acc);
            if let Term::Const(n) = payload {
                hit(n, bound, acc);
            }
            collect_free(body, bound, acc);
        }
        Process::Repl { body } => collect_free(body, bound, acc),
        Process::Case { then_branch, else_branch, .. } => {
            collect_free(then_branch, bound, acc);
            collect_free(else_branch, bound, acc);
        }
    }
}

/// All labels occurring in the process, in syntactic order.
pub fn labels(p: &Process) -> Vec<LabelId> {
    let mut acc = Vec::new();
    collect_labels(p, &mut acc);
    acc
}

fn collect_labels(p: &Process, acc: &mut Vec<LabelId>) {
    match p {
        Process::Nil => {}
        Process::Restrict { body, .. } | Process::Repl { body } => collect_labels(body, acc),
        Process::Par { left, right } => {
            collect_labels(left, acc);
            collect_labels(right, acc);
        }
        Process::Bind { label, body, .. } => {
            acc.push(*label);
            collect_labels(body, acc);
        }
        Process::Output { label, body, .. } => {
            acc.push(*label);
            collect_labels(body, acc);
        }
        Process::Case { label, then_branch, else_branch, .. } => {
            acc.push(*label);
            collect_labels(then_branch, acc);
            collect_labels(else_branch, acc);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(s: &str) -> Name {
        Name::new(s)
    }

    fn input(c: &str, x: &str) -> Binder {
        Binder::Input { channel: n(c), var: InVarId::new(x) }
    }

    fn bind(l: u32, b: Binder, p: Process) -> Process {
        Process::Bind { label: LabelId(l), binder: b, body: Box::new(p) }
    }

    #[test]
    fn nil_is_well_formed() {
        assert!(validate(&Process::Nil).is_empty());
        assert!(names(&Process::Nil).is_empty());
        assert!(free_names(&Process::Nil).is_empty());
    }

    #[test]
    fn duplicate_labels_are_reported() {
        let p = Process::Par {
            left: Box::new(bind(1, input("c", "x1"), Process::Nil)),
            right: Box::new(bind(1, input("d", "x2"), Process::Nil)),
        };
        assert_eq!(validate(&p), vec![Violation::DuplicateLabel(LabelId(1))]);
    }

    #[test]
    fn label_zero_is_rejected() {
        let p = bind(0, input("c", "x"), Process::Nil);
        assert_eq!(validate(&p), vec![Violation::NonPositiveLabel]);
    }

    #[test]
    fn rebinding_a_variable_is_reported() {
        let p = bind(1, input("c", "x"), bind(2, input("d", "x"), Process::Nil));
        assert_eq!(validate(&p), vec![Violation::DuplicateBinding("x".into())]);
    }

    #[test]
    fn case_on_unbound_variable_is_reported() {
        let p = Process::Case {
            label: LabelId(1),
            scrutinee: InVarId::new("x"),
            var: TermVarId::new("y"),
            then_branch: Box::new(Process::Nil),
            else_branch: Box::new(Process::Nil),
        };
        assert_eq!(
            validate(&p),
            vec![Violation::UnboundInVar { var: InVarId::new("x"), label: LabelId(1) }]
        );
    }

    #[test]
    fn term_variable_scope_is_the_then_branch() {
        // y is visible in the then-branch ...
        let ok = bind(
            1,
            input("c", "x"),
            Process::Case {
                label: LabelId(2),
                scrutinee: InVarId::new("x"),
                var: TermVarId::new("y"),
                then_branch: Box::new(Process::Output {
                    label: LabelId(3),
                    channel: n("c"),
                    payload: Term::Var(TermVarId::new("y")),
                    body: Box::new(Process::Nil),
                }),
                else_branch: Box::new(Process::Nil),
            },
        );
        assert!(validate(&ok).is_empty());

        // ... but not in the else-branch.
        let bad = bind(
            1,
            input("c", "x"),
            Process::Case {
                label: LabelId(2),
                scrutinee: InVarId::new("x"),
                var: TermVarId::new("y"),
                then_branch: Box::new(Process::Nil),
                else_branch: Box::new(Process::Output {
                    label: LabelId(3),
                    channel: n("c"),
                    payload: Term::Var(TermVarId::new("y")),
                    body: Box::new(Process::Nil),
                }),
            },
        );
        assert_eq!(
            validate(&bad),
            vec![Violation::UnboundTermVar { var: TermVarId::new("y"), label: LabelId(3) }]
        );
    }

    #[test]
    fn quality_binder_binds_all_sub_variables() {
        let b = Binder::Quality {
            guard: Guard::Exists,
            subs: vec![
                input("c1", "x1"),
                Binder::Quality {
                    guard: Guard::Forall,
                    subs: vec![input("c2", "x2"), input("c3", "x3")],
                },
            ],
        };
        assert_eq!(
            b.bound_vars().iter().map(|v| v.0.as_str()).collect::<Vec<_>>(),
            vec!["x1", "x2", "x3"]
        );
        assert_eq!(
            b.channels().iter().map(|c| c.as_str()).collect::<Vec<_>>(),
            vec!["c1", "c2", "c3"]
        );
    }

    #[test]
    fn names_include_restricted_and_payload_constants() {
        let p = Process::Restrict {
            name: n("a"),
            body: Box::new(Process::Nil),
        };
        assert_eq!(names(&p), [n("a")].into_iter().collect());

        let q = Process::Output {
            label: LabelId(1),
            channel: n("c"),
            payload: Term::Const(n("k")),
            body: Box::new(Process::Nil),
        };
        assert_eq!(names(&q), [n("c"), n("k")].into_iter().collect());
    }

    #[test]
    fn free_names_subtract_restrictions() {
        let p = Process::Restrict {
            name: n("c"),
            body: Box::new(bind(1, input("c", "x"), bind(2, input("d", "x2"), Process::Nil))),
        };
        assert_eq!(free_names(&p), [n("d")].into_iter().collect());
        assert_eq!(names(&p), [n("c"), n("d")].into_iter().collect());
    }
}
