//! A bounded operational oracle for the broadcast semantics.
//!
//! States are soups of parallel components.  Replication is unfolded
//! eagerly, a fixed number of copies per bang, and restriction is simply
//! dropped: unfolded copies share their restricted names, so an attacker
//! who knows such a name can talk to every copy at once.  Together with
//! a step bound this explores a *subset* of the real behaviours, which
//! is the right direction for testing the static analysis: whatever the
//! oracle reaches, the analysis must predict.
//!
//! Broadcasts are non-blocking and reach every listening binder in one
//! step.  A component whose head is a case clause blocks broadcasts —
//! nothing can interleave past it — until its silent step resolves the
//! branch.  The attacker owns the knowledge set: at any unblocked moment
//! it may broadcast one known channel, carrying an opaque payload.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::ast::{Binder, Guard, InVarId, LabelId, Name, Process, Term, TermVarId};
use crate::solver::attack_sets;
use crate::translate::{constraint_system, TranslateError};

/// What a case-bound or input-bound variable holds at runtime.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
struct Env {
    inputs: BTreeMap<InVarId, Option<Name>>,
    terms: BTreeMap<TermVarId, Name>,
}

/// A binder in mid-flight: inputs that already received hold their
/// payload.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum RtBinder {
    Input { channel: Name, var: InVarId },
    Received { var: InVarId, payload: Name },
    Quality { guard: Guard, subs: Vec<RtBinder> },
}

impl RtBinder {
    fn lift(b: &Binder) -> RtBinder {
        match b {
            Binder::Input { channel, var } => RtBinder::Input {
                channel: channel.clone(),
                var: var.clone(),
            },
            Binder::Quality { guard, subs } => RtBinder::Quality {
                guard: *guard,
                subs: subs.iter().map(RtBinder::lift).collect(),
            },
        }
    }

    /// One broadcast arrives: matching inputs catch the payload, already
    /// satisfied parts are unaffected.
    fn update(&self, channel: &Name, payload: &Name) -> RtBinder {
        match self {
            RtBinder::Input { channel: c, var } if c == channel => {
                RtBinder::Received {
                    var: var.clone(),
                    payload: payload.clone(),
                }
            }
            RtBinder::Input { .. } | RtBinder::Received { .. } => self.clone(),
            RtBinder::Quality { guard, subs } => RtBinder::Quality {
                guard: *guard,
                subs: subs.iter().map(|b| b.update(channel, payload)).collect(),
            },
        }
    }

    /// Boolean interpretation and induced substitution: has the binder
    /// received enough, and what does each of its variables hold?
    fn satisfied(&self) -> (bool, Env) {
        match self {
            RtBinder::Input { var, .. } => {
                let mut env = Env::default();
                env.inputs.insert(var.clone(), None);
                (false, env)
            }
            RtBinder::Received { var, payload } => {
                let mut env = Env::default();
                env.inputs.insert(var.clone(), Some(payload.clone()));
                (true, env)
            }
            RtBinder::Quality { guard, subs } => {
                let mut env = Env::default();
                let mut flags = Vec::with_capacity(subs.len());
                for sub in subs {
                    let (r, theta) = sub.satisfied();
                    flags.push(r);
                    env.inputs.extend(theta.inputs);
                }
                let ok = match guard {
                    Guard::Forall => flags.iter().all(|&r| r),
                    Guard::Exists => flags.iter().any(|&r| r),
                };
                (ok, env)
            }
        }
    }
}

/// One parallel component in head normal form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Item {
    Listen {
        label: LabelId,
        binder: RtBinder,
        body: Process,
        env: Env,
    },
    /// An output- or case-headed process.
    Head(Process, Env),
}

type State = Vec<Item>;

/// Decompose a process into head components: parallel compositions are
/// split, restrictions dropped, dead ends removed, and each replication
/// expanded into `unfold` parallel copies sharing all names.
fn push_items(p: &Process, env: &Env, unfold: usize, out: &mut Vec<Item>) {
    match p {
        Process::Nil => {}
        Process::Par { left, right } => {
            push_items(left, env, unfold, out);
            push_items(right, env, unfold, out);
        }
        Process::Restrict { body, .. } => push_items(body, env, unfold, out),
        Process::Repl { body } => {
            for _ in 0..unfold {
                push_items(body, env, unfold, out);
            }
        }
        Process::Bind {
            label,
            binder,
            body,
        } => out.push(Item::Listen {
            label: *label,
            binder: RtBinder::lift(binder),
            body: (**body).clone(),
            env: env.clone(),
        }),
        Process::Output { .. } | Process::Case { .. } => {
            out.push(Item::Head(p.clone(), env.clone()))
        }
    }
}

fn canonical(mut state: State) -> State {
    state.sort();
    state
}

fn head_label(item: &Item) -> LabelId {
    match item {
        Item::Listen { label, .. } => *label,
        Item::Head(Process::Output { label, .. }, _) => *label,
        Item::Head(Process::Case { label, .. }, _) => *label,
        Item::Head(..) => unreachable!("heads are outputs or cases"),
    }
}

fn resolve(payload: &Term, env: &Env) -> Name {
    match payload {
        Term::Const(n) => n.clone(),
        Term::Var(y) => env
            .terms
            .get(y)
            .cloned()
            .expect("well-formed processes bind payload variables"),
    }
}

/// Deliver one broadcast to every listening component; satisfied binders
/// release their continuations.
fn deliver(state: &[Item], skip: Option<usize>, channel: &Name, payload: &Name, unfold: usize) -> State {
    let mut next = Vec::with_capacity(state.len());
    for (j, item) in state.iter().enumerate() {
        if Some(j) == skip {
            continue;
        }
        match item {
            Item::Listen {
                label,
                binder,
                body,
                env,
            } => {
                let updated = binder.update(channel, payload);
                let (ok, theta) = updated.satisfied();
                if ok {
                    let mut env = env.clone();
                    env.inputs.extend(theta.inputs);
                    push_items(body, &env, unfold, &mut next);
                } else {
                    next.push(Item::Listen {
                        label: *label,
                        binder: updated,
                        body: body.clone(),
                        env: env.clone(),
                    });
                }
            }
            other => next.push(other.clone()),
        }
    }
    next
}

/// All one-step successors: silent case resolutions, component
/// broadcasts, and attacker broadcasts.  Any pending case blocks every
/// broadcast in the soup.
fn successors(
    state: &State,
    knowledge: &BTreeSet<Name>,
    unfold: usize,
) -> Vec<State> {
    let attacker_payload = Name("_atk".into());
    let blocked = state
        .iter()
        .any(|it| matches!(it, Item::Head(Process::Case { .. }, _)));
    let mut out = Vec::new();
    for (i, item) in state.iter().enumerate() {
        match item {
            Item::Head(
                Process::Case {
                    scrutinee,
                    var,
                    then_branch,
                    else_branch,
                    ..
                },
                env,
            ) => {
                let mut next: State = state
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, it)| it.clone())
                    .collect();
                let held = env
                    .inputs
                    .get(scrutinee)
                    .cloned()
                    .expect("well-formed processes bind scrutinees");
                match held {
                    Some(payload) => {
                        let mut env = env.clone();
                        env.terms.insert(var.clone(), payload);
                        push_items(then_branch, &env, unfold, &mut next);
                    }
                    None => push_items(else_branch, env, unfold, &mut next),
                }
                out.push(canonical(next));
            }
            Item::Head(
                Process::Output {
                    channel,
                    payload,
                    body,
                    ..
                },
                env,
            ) if !blocked => {
                let sent = resolve(payload, env);
                let mut next = deliver(state, Some(i), channel, &sent, unfold);
                push_items(body, env, unfold, &mut next);
                out.push(canonical(next));
            }
            _ => {}
        }
    }
    if !blocked {
        for channel in knowledge {
            out.push(canonical(deliver(
                state,
                None,
                channel,
                &attacker_payload,
                unfold,
            )));
        }
    }
    out
}

/// Does some execution of `p`, against an attacker knowing `knowledge`,
/// bring the action labelled `target` to the head of a component within
/// `depth` steps?  Replications contribute `unfold` copies each.
pub fn reaches(
    p: &Process,
    target: LabelId,
    knowledge: &BTreeSet<Name>,
    depth: usize,
    unfold: usize,
) -> bool {
    let mut initial = Vec::new();
    push_items(p, &Env::default(), unfold, &mut initial);
    let initial = canonical(initial);

    let hit =
        |state: &State| state.iter().any(|item| head_label(item) == target);
    if hit(&initial) {
        return true;
    }
    let mut visited: BTreeSet<State> = BTreeSet::new();
    visited.insert(initial.clone());
    let mut frontier: VecDeque<(State, usize)> = VecDeque::new();
    frontier.push_back((initial, 0));
    while let Some((state, d)) = frontier.pop_front() {
        if d == depth {
            continue;
        }
        for next in successors(&state, knowledge, unfold) {
            if !visited.insert(next.clone()) {
                continue;
            }
            if hit(&next) {
                return true;
            }
            frontier.push_back((next, d + 1));
        }
    }
    false
}

/// The verdict of one oracle run against the static analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Witness {
    /// The bounded run never reached the target; nothing to compare.
    Vacuous,
    /// Reached, and some predicted attack set lies within the attacker's
    /// knowledge — the analysis accounts for this run.
    Covered,
    /// Reached, but no predicted attack set is available to the
    /// attacker: the analysis under-approximates reality.
    Uncovered,
}

/// Run the bounded semantics and confront the result with the attack
/// sets the constraint analysis predicts for the same label.
pub fn check_underapprox(
    p: &Process,
    target: LabelId,
    knowledge: &BTreeSet<Name>,
    depth: usize,
    unfold: usize,
) -> Result<Witness, TranslateError> {
    let cs = constraint_system(p, target)?;
    if !reaches(p, target, knowledge, depth, unfold) {
        return Ok(Witness::Vacuous);
    }
    let covered = attack_sets(&cs)
        .iter()
        .any(|attack| attack.is_subset(knowledge));
    Ok(if covered {
        Witness::Covered
    } else {
        Witness::Uncovered
    })
}
