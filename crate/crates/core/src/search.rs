//! Priority-first partial state-space expansion. Produces an explicit partial
//! CTMC in which every rate that leaves the explored region is redirected to a
//! single absorbing sink, so transient analysis yields a lower bound.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};
use std::fmt;
use std::str::FromStr;

use indexmap::IndexSet;
use serde::Serialize;

use crate::depgraph::DependencyGraph;
use crate::linalg::{AffineSpace, LatticeResidual, Rat};
use crate::model::{PropertySpec, State, VasModel};
use crate::solution_space::{is_single_solution, SolutionSpace};
use crate::subspaces::IndexedSubspaceChain;

pub const DEFAULT_MAX_STATES: usize = 5_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sdp,
    Isr,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Sdp => "sdp",
            Method::Isr => "isr",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sdp" => Ok(Method::Sdp),
            "isr" => Ok(Method::Isr),
            other => Err(format!("unknown method `{other}` (expected sdp|isr)")),
        }
    }
}

/// How ISR ranks states that share chain membership.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparator {
    /// Deepest containing index, then the residual one level deeper.
    #[default]
    Default,
    /// Lexicographic comparison of all distances `(d_I, …, d_0)`.
    Lex,
}

/// How states with identical residual keys are ordered.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TieBreak {
    /// Insertion order.
    #[default]
    Fifo,
    /// Lexicographically smaller state vector first, then insertion order.
    State,
}

impl FromStr for TieBreak {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fifo" => Ok(TieBreak::Fifo),
            "state" => Ok(TieBreak::State),
            other => Err(format!("unknown tie-break `{other}` (expected fifo|state)")),
        }
    }
}

impl FromStr for Comparator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "default" => Ok(Comparator::Default),
            "lex" => Ok(Comparator::Lex),
            other => Err(format!(
                "unknown comparator `{other}` (expected default|lex)"
            )),
        }
    }
}

/// Search order of a discovered state; greater compares as "explore first".
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PriorityKey {
    Sdp {
        dist: Rat,
        seq: u64,
    },
    Isr {
        p: i32,
        tie_residual: Rat,
        dist: Rat,
        seq: u64,
    },
    IsrLex {
        profile: Vec<Rat>,
        dist: Rat,
        seq: u64,
    },
}

impl PriorityKey {
    pub fn seq(&self) -> u64 {
        match self {
            PriorityKey::Sdp { seq, .. }
            | PriorityKey::Isr { seq, .. }
            | PriorityKey::IsrLex { seq, .. } => *seq,
        }
    }
}

impl PriorityKey {
    /// Comparison ignoring the insertion counter.
    pub fn cmp_residuals(&self, other: &Self) -> Ordering {
        use PriorityKey::*;
        match (self, other) {
            (Sdp { dist: a, .. }, Sdp { dist: b, .. }) => b.cmp(a),
            (
                Isr {
                    p: pa,
                    tie_residual: ta,
                    dist: da,
                    ..
                },
                Isr {
                    p: pb,
                    tie_residual: tb,
                    dist: db,
                    ..
                },
            ) => pa.cmp(pb).then(tb.cmp(ta)).then(db.cmp(da)),
            (
                IsrLex {
                    profile: pa,
                    dist: da,
                    ..
                },
                IsrLex {
                    profile: pb,
                    dist: db,
                    ..
                },
            ) => pb.cmp(pa).then(db.cmp(da)),
            _ => panic!("priority keys of different methods are not comparable"),
        }
    }
}

impl Ord for PriorityKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_residuals(other).then(other.seq().cmp(&self.seq()))
    }
}

impl PartialOrd for PriorityKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// What steers the search.
#[derive(Clone, Copy)]
pub enum Guide<'a> {
    Sdp,
    Isr {
        graph: &'a DependencyGraph,
        chain: &'a IndexedSubspaceChain,
        comparator: Comparator,
    },
}

impl Guide<'_> {
    pub fn method(&self) -> Method {
        match self {
            Guide::Sdp => Method::Sdp,
            Guide::Isr { .. } => Method::Isr,
        }
    }
}

/// Computes priority keys for one search.
pub struct Prioritizer<'a> {
    guide: Guide<'a>,
    solution: LatticeResidual,
}

impl<'a> Prioritizer<'a> {
    pub fn new(guide: Guide<'a>, sol: &SolutionSpace) -> Self {
        Self {
            guide,
            solution: sol.space().lattice_residual(),
        }
    }

    pub fn key(&self, s: &[i64], seq: u64) -> PriorityKey {
        let dist = self.solution.dist(s);
        match self.guide {
            Guide::Sdp => PriorityKey::Sdp { dist, seq },
            Guide::Isr {
                chain,
                comparator: Comparator::Default,
                ..
            } => {
                let pos = chain.deepest_zero_index(s);
                PriorityKey::Isr {
                    p: pos.p,
                    tie_residual: pos.tie_residual,
                    dist,
                    seq,
                }
            }
            Guide::Isr {
                chain,
                comparator: Comparator::Lex,
                ..
            } => PriorityKey::IsrLex {
                profile: chain.distance_profile(s),
                dist,
                seq,
            },
        }
    }
}

/// Priority of `s` under the given guide (insertion counter 0).
pub fn priority_of(guide: Guide<'_>, s: &[i64], sol: &SolutionSpace) -> PriorityKey {
    Prioritizer::new(guide, sol).key(s, 0)
}

/// Blanketing space: `s0 + span(all update vectors)`.
pub fn blanketing_space(model: &VasModel) -> AffineSpace {
    AffineSpace::new(model.update_matrix(), model.initial.to_rat())
}

/// `K` after the termination clamp: 1 when the solution set within
/// `s0_space` is a single point and clamping is enabled.
pub fn effective_k(k: usize, clamp: bool, sol: &SolutionSpace, s0_space: &AffineSpace) -> usize {
    if clamp && is_single_solution(sol, s0_space) {
        1
    } else {
        k.max(1)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    /// States dequeued and expanded or labeled (both phases).
    pub explored: usize,
    /// Distinct concrete states indexed (excludes the sink).
    pub enqueued: usize,
    pub satisfying: usize,
    /// Satisfying states found before the main loop stopped.
    pub satisfying_phase1: usize,
    /// True when the main loop stopped because of the state cap.
    pub truncated: bool,
}

#[derive(Clone, Debug)]
pub struct PartialStateGraph {
    states: IndexSet<State>,
    out: Vec<Vec<(usize, f64)>>,
    absorbed: Vec<f64>,
    sat: BTreeSet<usize>,
    expanded: Vec<bool>,
    pub stats: SearchStats,
}

impl PartialStateGraph {
    fn new() -> Self {
        Self {
            states: IndexSet::new(),
            out: Vec::new(),
            absorbed: Vec::new(),
            sat: BTreeSet::new(),
            expanded: Vec::new(),
            stats: SearchStats::default(),
        }
    }

    /// Indexes `s`; returns its id and whether it was new.
    fn intern(&mut self, s: State) -> (usize, bool) {
        let (id, new) = self.states.insert_full(s);
        if new {
            self.out.push(Vec::new());
            self.absorbed.push(0.0);
            self.expanded.push(false);
        }
        (id, new)
    }

    fn add_rate(&mut self, from: usize, to: usize, rate: f64) {
        let row = &mut self.out[from];
        match row.iter_mut().find(|(t, _)| *t == to) {
            Some((_, r)) => *r += rate,
            None => row.push((to, rate)),
        }
    }

    /// Builds a graph from explicit parts (used by the exhaustive oracle and import).
    pub fn from_parts(
        states: Vec<State>,
        edges: &[(usize, usize, f64)],
        absorbed: Vec<f64>,
        sat: BTreeSet<usize>,
    ) -> Self {
        let mut g = Self::new();
        for s in states {
            g.intern(s);
        }
        for &(from, to, rate) in edges {
            g.add_rate(from, to, rate);
            g.expanded[from] = true;
        }
        for (i, a) in absorbed.into_iter().enumerate() {
            if a > 0.0 {
                g.expanded[i] = true;
            }
            g.absorbed[i] = a;
        }
        g.stats.satisfying = sat.len();
        g.stats.satisfying_phase1 = sat.len();
        g.stats.enqueued = g.states.len();
        g.stats.explored = g.expanded.iter().filter(|&&e| e).count() + sat.len();
        g.sat = sat;
        g
    }

    /// Concrete states plus the sink.
    pub fn n_states(&self) -> usize {
        self.states.len() + 1
    }

    pub fn initial_id(&self) -> usize {
        0
    }

    /// Reserved id of the absorbing sink (after all concrete states).
    pub fn abs_id(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, id: usize) -> Option<&State> {
        self.states.get_index(id)
    }

    pub fn id_of(&self, s: &State) -> Option<usize> {
        self.states.get_index_of(s)
    }

    pub fn states(&self) -> impl Iterator<Item = &State> {
        self.states.iter()
    }

    pub fn sat_ids(&self) -> &BTreeSet<usize> {
        &self.sat
    }

    pub fn is_expanded(&self, id: usize) -> bool {
        self.expanded.get(id).copied().unwrap_or(false)
    }

    /// Rate routed from `id` to the sink.
    pub fn absorbed_rate(&self, id: usize) -> f64 {
        self.absorbed[id]
    }

    /// Kept outgoing edges of `id` (excluding the sink), in discovery order.
    pub fn successors(&self, id: usize) -> &[(usize, f64)] {
        &self.out[id]
    }

    /// All positive-rate transitions including those into the sink, sorted by
    /// source then target.
    pub fn transitions(&self) -> Vec<(usize, usize, f64)> {
        let abs = self.abs_id();
        let mut all = Vec::new();
        for (from, row) in self.out.iter().enumerate() {
            let mut row: Vec<(usize, f64)> =
                row.iter().copied().filter(|&(_, r)| r > 0.0).collect();
            if self.absorbed[from] > 0.0 {
                row.push((abs, self.absorbed[from]));
            }
            row.sort_by_key(|&(to, _)| to);
            all.extend(row.into_iter().map(|(to, r)| (from, to, r)));
        }
        all
    }

    pub fn n_transitions(&self) -> usize {
        self.transitions().len()
    }

    /// Kept plus absorbed rate leaving `id`.
    pub fn outgoing_rate(&self, id: usize) -> f64 {
        self.out[id].iter().map(|&(_, r)| r).sum::<f64>() + self.absorbed[id]
    }
}

struct Entry {
    key: PriorityKey,
    /// State vector when ties are broken by state order.
    order: Option<Vec<i64>>,
    id: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key
            .cmp_residuals(&other.key)
            .then_with(|| other.order.cmp(&self.order))
            .then(other.key.seq().cmp(&self.key.seq()))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Runs the two-phase search with the already-clamped `k`.
///
/// Phase 1 expands states in priority order until `k` satisfying states are
/// found, the queue empties, or `max_states` states are indexed. SDP keeps
/// every successor; ISR keeps only successors reached through reactions of the
/// dependency graph. Phase 2 expands the remaining queue, keeping only edges to
/// already-indexed states. All other rate goes to the sink.
pub fn run_search(
    model: &VasModel,
    prop: &PropertySpec,
    sol: &SolutionSpace,
    guide: Guide<'_>,
    k: usize,
    max_states: usize,
) -> PartialStateGraph {
    run_search_with(model, prop, sol, guide, k, max_states, TieBreak::Fifo)
}

/// [`run_search`] with an explicit tie-break rule.
pub fn run_search_with(
    model: &VasModel,
    prop: &PropertySpec,
    sol: &SolutionSpace,
    guide: Guide<'_>,
    k: usize,
    max_states: usize,
    tie_break: TieBreak,
) -> PartialStateGraph {
    let order_of = |s: &State| (tie_break == TieBreak::State).then(|| s.counts().to_vec());
    let prioritizer = Prioritizer::new(guide, sol);
    let keep = |reaction: usize| match guide {
        Guide::Sdp => true,
        Guide::Isr { graph, .. } => graph.contains_reaction(reaction),
    };

    let mut g = PartialStateGraph::new();
    let mut heap = BinaryHeap::new();
    let mut seq: u64 = 0;
    let (s0_id, _) = g.intern(model.initial.clone());
    heap.push(Entry {
        key: prioritizer.key(model.initial.counts(), seq),
        order: order_of(&model.initial),
        id: s0_id,
    });
    seq += 1;

    while g.sat.len() < k {
        if g.states.len() >= max_states {
            g.stats.truncated = true;
            log::warn!("state cap of {max_states} reached; finishing with the states found so far");
            break;
        }
        let Some(Entry { id, .. }) = heap.pop() else {
            break;
        };
        g.stats.explored += 1;
        let s = g.states[id].clone();
        if prop.satisfies(&s) {
            g.sat.insert(id);
            continue;
        }
        g.expanded[id] = true;
        for succ in model.enabled_successors(&s) {
            if keep(succ.reaction) {
                let (to, new) = g.intern(succ.state);
                g.add_rate(id, to, succ.rate);
                if new {
                    let key = prioritizer.key(g.states[to].counts(), seq);
                    seq += 1;
                    heap.push(Entry {
                        key,
                        order: order_of(&g.states[to]),
                        id: to,
                    });
                }
            } else {
                g.absorbed[id] += succ.rate;
            }
        }
    }
    g.stats.satisfying_phase1 = g.sat.len();

    while let Some(Entry { id, .. }) = heap.pop() {
        g.stats.explored += 1;
        let s = g.states[id].clone();
        if prop.satisfies(&s) {
            g.sat.insert(id);
            continue;
        }
        g.expanded[id] = true;
        for succ in model.enabled_successors(&s) {
            match g.id_of(&succ.state) {
                Some(to) => g.add_rate(id, to, succ.rate),
                None => g.absorbed[id] += succ.rate,
            }
        }
    }

    g.stats.enqueued = g.states.len();
    g.stats.satisfying = g.sat.len();
    g
}
