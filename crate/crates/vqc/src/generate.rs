//! Seeded generation of random well-formed processes for the property
//! suites.
//!
//! Two generators are provided.  [`random_process`] draws freely from the
//! whole syntax.  [`random_acyclic_process`] additionally keeps the
//! channel-support relation well-founded: channels are ranked, and an
//! action on a channel may only sit below binders on strictly
//! lower-ranked channels.  The flow rule of a channel then never depends,
//! directly or through other channel rules, on the channel itself.  The
//! attack-agreement property is stated over this fragment — a
//! self-supporting loop (an output on `a` guarded by `b` and vice versa)
//! admits biconditional models with no counterpart in the backward-chained
//! denotation, which is exactly the divergence the cyclic corpus process
//! pins down.
//!
//! Both generators are deterministic functions of the seed, so a failing
//! case can be replayed by quoting the seed alone.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ast::{Binder, Guard, InVarId, LabelId, Name, Process, Term, TermVarId};

/// Channel pool shared by both generators; ranks follow the order here.
const POOL: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

/// Limit on consecutive non-action wrappers (restriction, replication) so
/// recursion cannot dodge the action budget forever.
const WRAPPER_FUEL: usize = 3;

/// A random well-formed process with at most `max_actions` labelled
/// actions over at most `max_channels` distinct channels.
///
/// The result always carries at least one label, every label and variable
/// is bound exactly once, and the textual form pretty-prints and reparses
/// to the same tree.
pub fn random_process(seed: u64, max_actions: usize, max_channels: usize) -> Process {
    generate(seed, max_actions, max_channels, false)
}

/// Like [`random_process`], but the generated process has acyclic channel
/// support: every action on a channel is guarded only by binders on
/// strictly lower-ranked channels.
pub fn random_acyclic_process(seed: u64, max_actions: usize, max_channels: usize) -> Process {
    generate(seed, max_actions, max_channels, true)
}

fn generate(seed: u64, max_actions: usize, max_channels: usize, acyclic: bool) -> Process {
    assert!(max_actions >= 1, "need room for at least one action");
    let pool = max_channels.clamp(1, POOL.len());
    let mut gen = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        channels: POOL[..pool].iter().map(|s| Name::new(*s)).collect(),
        acyclic,
        next_label: 0,
        next_in_var: 0,
        next_term_var: 0,
    };
    loop {
        gen.next_label = 0;
        gen.next_in_var = 0;
        gen.next_term_var = 0;
        let budget = gen.rng.gen_range(1..=max_actions);
        let p = gen.process(budget, 0, &mut Vec::new(), &mut Vec::new(), WRAPPER_FUEL);
        // Wrapper-heavy draws can bottom out without consuming the budget;
        // retry until the process has a label to query.
        if !crate::ast::labels(&p).is_empty() {
            debug_assert!(crate::ast::validate(&p).is_empty());
            return p;
        }
    }
}

struct Gen {
    rng: ChaCha8Rng,
    channels: Vec<Name>,
    acyclic: bool,
    next_label: u32,
    next_in_var: u32,
    next_term_var: u32,
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Output,
    Input,
    Quality,
    Case,
    Par,
    Restrict,
    Repl,
}

impl Gen {
    fn label(&mut self) -> LabelId {
        self.next_label += 1;
        LabelId(self.next_label)
    }

    fn in_var(&mut self) -> InVarId {
        self.next_in_var += 1;
        InVarId::new(format!("x{}", self.next_in_var))
    }

    fn term_var(&mut self) -> TermVarId {
        self.next_term_var += 1;
        TermVarId::new(format!("y{}", self.next_term_var))
    }

    /// Channels an action may use at this point: all of them in the free
    /// generator, only ranks at or above `floor` in the acyclic one.
    fn usable(&self, floor: usize) -> usize {
        if self.acyclic {
            self.channels.len().saturating_sub(floor)
        } else {
            self.channels.len()
        }
    }

    fn pick_channel(&mut self, floor: usize) -> (usize, Name) {
        let lo = if self.acyclic { floor } else { 0 };
        let rank = self.rng.gen_range(lo..self.channels.len());
        (rank, self.channels[rank].clone())
    }

    /// Build a process consuming at most `budget` labelled actions.
    ///
    /// `floor` is the acyclic-mode rank bound induced by the binders
    /// guarding this position; `xs`/`ys` are the variables in scope.
    fn process(
        &mut self,
        budget: usize,
        floor: usize,
        xs: &mut Vec<InVarId>,
        ys: &mut Vec<TermVarId>,
        fuel: usize,
    ) -> Process {
        if budget == 0 || self.usable(floor) == 0 {
            return Process::Nil;
        }
        let mut choices: Vec<(Kind, u32)> = vec![(Kind::Output, 3), (Kind::Input, 3)];
        if self.usable(floor) >= 2 {
            choices.push((Kind::Quality, 2));
        }
        if !xs.is_empty() {
            choices.push((Kind::Case, 2));
        }
        if budget >= 2 {
            choices.push((Kind::Par, 2));
        }
        if fuel > 0 {
            choices.push((Kind::Restrict, 1));
            choices.push((Kind::Repl, 1));
        }
        let total: u32 = choices.iter().map(|(_, w)| w).sum();
        let mut roll = self.rng.gen_range(0..total);
        let kind = choices
            .iter()
            .find(|(_, w)| {
                if roll < *w {
                    true
                } else {
                    roll -= w;
                    false
                }
            })
            .expect("weights cover the roll")
            .0;
        match kind {
            Kind::Output => {
                let label = self.label();
                let (_, channel) = self.pick_channel(floor);
                let payload = if !ys.is_empty() && self.rng.gen_bool(0.3) {
                    let y = ys[self.rng.gen_range(0..ys.len())].clone();
                    Term::Var(y)
                } else {
                    let any = self.rng.gen_range(0..self.channels.len());
                    Term::Const(self.channels[any].clone())
                };
                // An output adds no hypothesis, so the continuation keeps
                // the same rank floor.
                let body = self.process(budget - 1, floor, xs, ys, WRAPPER_FUEL);
                Process::Output {
                    label,
                    channel,
                    payload,
                    body: Box::new(body),
                }
            }
            Kind::Input => {
                let label = self.label();
                let (rank, channel) = self.pick_channel(floor);
                let var = self.in_var();
                xs.push(var.clone());
                let inner_floor = if self.acyclic { rank + 1 } else { 0 };
                let body = self.process(budget - 1, inner_floor, xs, ys, WRAPPER_FUEL);
                xs.pop();
                Process::Bind {
                    label,
                    binder: Binder::Input { channel, var },
                    body: Box::new(body),
                }
            }
            Kind::Quality => {
                let label = self.label();
                let binder = self.quality(floor, 0);
                let max_rank = self.max_rank(&binder);
                let bound: Vec<InVarId> = binder.bound_vars().into_iter().cloned().collect();
                let n = bound.len();
                xs.extend(bound);
                let inner_floor = if self.acyclic { max_rank + 1 } else { 0 };
                let body = self.process(budget - 1, inner_floor, xs, ys, WRAPPER_FUEL);
                xs.truncate(xs.len() - n);
                Process::Bind {
                    label,
                    binder,
                    body: Box::new(body),
                }
            }
            Kind::Case => {
                let label = self.label();
                let scrutinee = xs[self.rng.gen_range(0..xs.len())].clone();
                let var = self.term_var();
                let rest = budget - 1;
                let left = self.rng.gen_range(0..=rest);
                ys.push(var.clone());
                let then_branch = self.process(left, floor, xs, ys, WRAPPER_FUEL);
                ys.pop();
                let else_branch = self.process(rest - left, floor, xs, ys, WRAPPER_FUEL);
                Process::Case {
                    label,
                    scrutinee,
                    var,
                    then_branch: Box::new(then_branch),
                    else_branch: Box::new(else_branch),
                }
            }
            Kind::Par => {
                let left_budget = self.rng.gen_range(1..budget);
                let left = self.process(left_budget, floor, xs, ys, WRAPPER_FUEL);
                let right = self.process(budget - left_budget, floor, xs, ys, WRAPPER_FUEL);
                Process::Par {
                    left: Box::new(left),
                    right: Box::new(right),
                }
            }
            Kind::Restrict => {
                let any = self.rng.gen_range(0..self.channels.len());
                let name = self.channels[any].clone();
                let body = self.process(budget, floor, xs, ys, fuel - 1);
                Process::Restrict {
                    name,
                    body: Box::new(body),
                }
            }
            Kind::Repl => {
                let body = self.process(budget, floor, xs, ys, fuel - 1);
                Process::Repl {
                    body: Box::new(body),
                }
            }
        }
    }

    /// A quality binder over distinct channels at rank `floor` or above;
    /// occasionally one slot nests a second-level quality binder.
    fn quality(&mut self, floor: usize, depth: usize) -> Binder {
        let lo = if self.acyclic { floor } else { 0 };
        let mut ranks: Vec<usize> = (lo..self.channels.len()).collect();
        // Fisher-Yates prefix shuffle to draw distinct channels.
        for i in 0..ranks.len().saturating_sub(1) {
            let j = self.rng.gen_range(i..ranks.len());
            ranks.swap(i, j);
        }
        let arity = self.rng.gen_range(2..=ranks.len().min(3));
        let guard = if self.rng.gen_bool(0.5) {
            Guard::Forall
        } else {
            Guard::Exists
        };
        let mut subs = Vec::with_capacity(arity);
        for (slot, rank) in ranks.into_iter().take(arity).enumerate() {
            if depth == 0 && slot == 0 && arity > 2 && self.rng.gen_bool(0.25) {
                subs.push(self.quality(floor, depth + 1));
            } else {
                subs.push(Binder::Input {
                    channel: self.channels[rank].clone(),
                    var: self.in_var(),
                });
            }
        }
        Binder::Quality { guard, subs }
    }

    fn max_rank(&self, binder: &Binder) -> usize {
        match binder {
            Binder::Input { channel, .. } => self
                .channels
                .iter()
                .position(|c| c == channel)
                .expect("generated channels come from the pool"),
            Binder::Quality { subs, .. } => {
                subs.iter().map(|b| self.max_rank(b)).max().unwrap_or(0)
            }
        }
    }
}
