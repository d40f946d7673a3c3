//! Transition dependency graph: which reactions must fire, and how often, for
//! the target species to reach their required counts, rooted at an abstract
//! property node. Also computes each node's minimal leaf distance.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::{self, Write as _};

use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::linalg::{rat, Rat};
use crate::model::{PropertySpec, VasModel};

/// A dependency-graph node: the abstract property node or a reaction index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Node {
    Psi,
    Reaction(usize),
}

impl Node {
    fn label(self, model: &VasModel) -> String {
        match self {
            Node::Psi => "Psi".to_string(),
            Node::Reaction(r) => model.reactions[r].name.clone(),
        }
    }
}

/// `from` needs `quantity` units of `species` produced (or consumed) by `to`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DepEdge {
    pub from: Node,
    pub to: Node,
    pub species: usize,
    pub quantity: u64,
}

/// Where construction failed: a species needed by `node` that no candidate
/// reaction could supply through dependencies ending in initially enabled ones.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UnreachableEvidence {
    pub node: Node,
    pub species: usize,
    pub species_name: String,
    /// Reactions that would change the species but could not be resolved.
    pub candidates: Vec<usize>,
}

impl fmt::Display for UnreachableEvidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let node = match self.node {
            Node::Psi => "the property".to_string(),
            Node::Reaction(r) => format!("reaction #{r}"),
        };
        if self.candidates.is_empty() {
            write!(
                f,
                "species {} needed by {node} has no reaction able to supply it",
                self.species_name
            )
        } else {
            write!(
                f,
                "species {} needed by {node}: none of the reactions {:?} can be enabled from the initial state",
                self.species_name, self.candidates
            )
        }
    }
}

#[derive(Clone, Debug)]
pub struct DependencyGraph {
    nodes: BTreeSet<Node>,
    edges: Vec<DepEdge>,
    required_count: BTreeMap<Node, u64>,
    mld: BTreeMap<Node, u32>,
    root_needs: Vec<(usize, i64)>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Visit {
    InProgress,
    Resolved,
    Failed,
}

struct Builder<'a> {
    model: &'a VasModel,
    s0: &'a [i64],
    visit: BTreeMap<usize, Visit>,
    children: BTreeMap<usize, Vec<(usize, usize)>>,
    first_failure: Option<UnreachableEvidence>,
}

impl Builder<'_> {
    /// Species `r` lacks at the initial state.
    fn missing(&self, r: usize) -> Vec<usize> {
        let reactants = &self.model.reactions[r].reactants;
        (0..self.model.m())
            .filter(|&p| self.s0[p] < reactants[p] as i64)
            .collect()
    }

    fn producers(&self, p: usize) -> Vec<usize> {
        (0..self.model.n())
            .filter(|&c| self.model.reactions[c].update[p] > 0)
            .collect()
    }

    fn consumers(&self, p: usize) -> Vec<usize> {
        (0..self.model.n())
            .filter(|&c| self.model.reactions[c].update[p] < 0)
            .collect()
    }

    /// Tries each candidate; returns the resolved ones and whether any was
    /// skipped because it lies on the current expansion path.
    fn resolve_candidates(&mut self, candidates: &[usize]) -> (Vec<usize>, bool) {
        let mut ok = Vec::new();
        let mut tainted = false;
        for &c in candidates {
            match self.visit.get(&c) {
                Some(Visit::InProgress) => tainted = true,
                Some(Visit::Resolved) => ok.push(c),
                Some(Visit::Failed) => {}
                None => {
                    let (resolved, t) = self.resolve(c);
                    tainted |= t;
                    if resolved {
                        ok.push(c);
                    }
                }
            }
        }
        (ok, tainted)
    }

    /// Returns (resolved, tainted). A failure is memoized only when it did not
    /// depend on an ancestor being excluded.
    fn resolve(&mut self, r: usize) -> (bool, bool) {
        if self.model.is_enabled(r, self.s0) {
            self.visit.insert(r, Visit::Resolved);
            self.children.insert(r, Vec::new());
            return (true, false);
        }
        self.visit.insert(r, Visit::InProgress);
        let mut kids = Vec::new();
        let mut tainted = false;
        for p in self.missing(r) {
            let candidates = self.producers(p);
            let (ok, t) = self.resolve_candidates(&candidates);
            tainted |= t;
            if ok.is_empty() {
                if self.first_failure.is_none() {
                    self.first_failure = Some(UnreachableEvidence {
                        node: Node::Reaction(r),
                        species: p,
                        species_name: self.model.species[p].name.clone(),
                        candidates,
                    });
                }
                if tainted {
                    self.visit.remove(&r);
                } else {
                    self.visit.insert(r, Visit::Failed);
                }
                return (false, tainted);
            }
            kids.extend(ok.into_iter().map(|c| (c, p)));
        }
        self.visit.insert(r, Visit::Resolved);
        self.children.insert(r, kids);
        (true, tainted)
    }
}

/// Net change per target species from `s0` to the requirement target.
///
/// Each formula is evaluated with every other species at its current target
/// value (starting from `s0`), iterated until the coupled targets settle; a
/// fractional target is rounded away from `s0` to the next integer.
pub fn root_requirements(model: &VasModel, prop: &PropertySpec) -> Vec<(usize, i64)> {
    let s0 = model.initial.counts();
    let mut t: Vec<Rat> = s0.iter().map(|&x| rat(x)).collect();
    for _ in 0..=prop.substates.len() {
        let mut changed = false;
        for f in &prop.substates {
            let v = f
                .coeffs
                .iter()
                .fold(rat(f.beta as i64), |acc, (&k, a)| acc + a * &t[k]);
            if v != t[f.target] {
                t[f.target] = v;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let targets: BTreeSet<usize> = prop.substates.iter().map(|f| f.target).collect();
    targets
        .into_iter()
        .filter_map(|j| {
            let start = rat(s0[j]);
            let v = if t[j] >= start {
                t[j].ceil()
            } else {
                t[j].floor()
            };
            let v = if v.is_negative() { Rat::zero() } else { v };
            let delta = (v - start).to_integer().to_i64().unwrap_or(i64::MAX);
            (delta != 0).then_some((j, delta))
        })
        .collect()
}

pub fn build_dependency_graph(
    model: &VasModel,
    prop: &PropertySpec,
) -> Result<DependencyGraph, UnreachableEvidence> {
    let s0 = model.initial.counts();
    let root_needs = root_requirements(model, prop);
    let mut b = Builder {
        model,
        s0,
        visit: BTreeMap::new(),
        children: BTreeMap::new(),
        first_failure: None,
    };

    let mut root_kids: Vec<(usize, usize)> = Vec::new();
    for &(j, delta) in &root_needs {
        let candidates = if delta > 0 {
            b.producers(j)
        } else {
            b.consumers(j)
        };
        let (ok, _) = b.resolve_candidates(&candidates);
        if ok.is_empty() {
            let inner = b.first_failure.take();
            // report the deepest failure when the root's candidates themselves exist
            return Err(match inner {
                Some(e) if !candidates.is_empty() => e,
                _ => UnreachableEvidence {
                    node: Node::Psi,
                    species: j,
                    species_name: model.species[j].name.clone(),
                    candidates,
                },
            });
        }
        root_kids.extend(ok.into_iter().map(|c| (c, j)));
    }

    // collect nodes reachable from the root
    let mut adjacency: BTreeMap<Node, Vec<(Node, usize)>> = BTreeMap::new();
    adjacency.insert(
        Node::Psi,
        root_kids
            .iter()
            .map(|&(c, p)| (Node::Reaction(c), p))
            .collect(),
    );
    let mut nodes = BTreeSet::from([Node::Psi]);
    let mut stack: Vec<usize> = root_kids.iter().map(|&(c, _)| c).collect();
    while let Some(r) = stack.pop() {
        if !nodes.insert(Node::Reaction(r)) {
            continue;
        }
        let kids = &b.children[&r];
        adjacency.insert(
            Node::Reaction(r),
            kids.iter().map(|&(c, p)| (Node::Reaction(c), p)).collect(),
        );
        stack.extend(kids.iter().map(|&(c, _)| c));
    }

    let order = topological_order(&nodes, &adjacency);
    let root_delta: BTreeMap<usize, i64> = root_needs.iter().copied().collect();

    // required counts and edge quantities, parents before children
    let mut required_count: BTreeMap<Node, u64> = BTreeMap::from([(Node::Psi, 1)]);
    let mut edges = Vec::new();
    for &node in &order {
        let count = required_count.get(&node).copied().unwrap_or(1);
        for &(child, p) in &adjacency[&node] {
            let Node::Reaction(c) = child else {
                unreachable!()
            };
            let quantity: u64 = match node {
                Node::Psi => root_delta[&p].unsigned_abs(),
                Node::Reaction(r) => {
                    let need =
                        count as i128 * model.reactions[r].reactants[p] as i128 - s0[p] as i128;
                    need.clamp(0, u64::MAX as i128) as u64
                }
            };
            let per_firing = model.reactions[c].update[p].unsigned_abs().max(1);
            let child_count = Integer::div_ceil(&quantity, &per_firing).max(1);
            let slot = required_count.entry(child).or_insert(0);
            *slot = (*slot).max(child_count);
            edges.push(DepEdge {
                from: node,
                to: child,
                species: p,
                quantity,
            });
        }
    }
    edges.sort_by_key(|a| (a.from, a.to, a.species));

    // minimal leaf distances, children before parents
    let mut mld: BTreeMap<Node, u32> = BTreeMap::new();
    for &node in order.iter().rev() {
        let kids = &adjacency[&node];
        let d = kids.iter().map(|(c, _)| mld[c] + 1).min().unwrap_or(0);
        mld.insert(node, d);
    }

    Ok(DependencyGraph {
        nodes,
        edges,
        required_count,
        mld,
        root_needs,
    })
}

fn topological_order(
    nodes: &BTreeSet<Node>,
    adjacency: &BTreeMap<Node, Vec<(Node, usize)>>,
) -> Vec<Node> {
    let mut indegree: BTreeMap<Node, usize> = nodes.iter().map(|&n| (n, 0)).collect();
    for kids in adjacency.values() {
        for (c, _) in kids {
            *indegree.get_mut(c).unwrap() += 1;
        }
    }
    let mut ready: VecDeque<Node> = indegree
        .iter()
        .filter(|(_, &d)| d == 0)
        .map(|(&n, _)| n)
        .collect();
    let mut order = Vec::with_capacity(nodes.len());
    while let Some(n) = ready.pop_front() {
        order.push(n);
        for (c, _) in &adjacency[&n] {
            let d = indegree.get_mut(c).unwrap();
            *d -= 1;
            if *d == 0 {
                ready.push_back(*c);
            }
        }
    }
    assert_eq!(order.len(), nodes.len(), "dependency graph must be acyclic");
    order
}

impl DependencyGraph {
    pub fn nodes(&self) -> &BTreeSet<Node> {
        &self.nodes
    }

    /// Reaction indices of all non-root nodes, ascending.
    pub fn reaction_nodes(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Reaction(r) => Some(*r),
                Node::Psi => None,
            })
            .collect()
    }

    pub fn contains_reaction(&self, r: usize) -> bool {
        self.nodes.contains(&Node::Reaction(r))
    }

    pub fn edges(&self) -> &[DepEdge] {
        &self.edges
    }

    pub fn children(&self, node: Node) -> Vec<Node> {
        let mut kids: Vec<Node> = self
            .edges
            .iter()
            .filter(|e| e.from == node)
            .map(|e| e.to)
            .collect();
        kids.dedup();
        kids
    }

    pub fn is_leaf(&self, node: Node) -> bool {
        self.nodes.contains(&node) && !self.edges.iter().any(|e| e.from == node)
    }

    /// How many times the node's reaction must fire (1 for the root).
    pub fn required_count(&self, node: Node) -> Option<u64> {
        self.required_count.get(&node).copied()
    }

    /// Minimal leaf distance.
    pub fn mld(&self, node: Node) -> Option<u32> {
        self.mld.get(&node).copied()
    }

    /// Largest minimal leaf distance over reaction nodes (0 when there are none).
    pub fn max_mld(&self) -> u32 {
        self.reaction_nodes()
            .into_iter()
            .map(|r| self.mld[&Node::Reaction(r)])
            .max()
            .unwrap_or(0)
    }

    /// `(species, signed change)` the property demands from the initial state.
    pub fn root_needs(&self) -> &[(usize, i64)] {
        &self.root_needs
    }

    /// Nodes with parents before children.
    pub fn topological_order(&self) -> Vec<Node> {
        let mut adjacency: BTreeMap<Node, Vec<(Node, usize)>> =
            self.nodes.iter().map(|&n| (n, Vec::new())).collect();
        for e in &self.edges {
            adjacency.get_mut(&e.from).unwrap().push((e.to, e.species));
        }
        topological_order(&self.nodes, &adjacency)
    }

    /// Graphviz rendering; node labels carry the required count and mld.
    pub fn to_dot(&self, model: &VasModel) -> String {
        let mut out = String::from("digraph dependencies {\n");
        for &n in &self.nodes {
            let name = n.label(model);
            let count = self.required_count.get(&n).copied().unwrap_or(1);
            let shape = if n == Node::Psi {
                "doublecircle"
            } else {
                "box"
            };
            let _ = writeln!(
                out,
                "  \"{name}\" [shape={shape}, label=\"{name} x{count}\\nmld={}\"];",
                self.mld[&n]
            );
        }
        for e in &self.edges {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"{} ({})\"];",
                e.from.label(model),
                e.to.label(model),
                model.species[e.species].name,
                e.quantity
            );
        }
        out.push_str("}\n");
        out
    }
}
