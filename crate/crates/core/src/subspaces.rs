//! Nested indexed subspaces `S_I ⊆ … ⊆ S_0` built from the dependency graph:
//! `S_i` is generated by the update vectors of graph reactions whose minimal
//! leaf distance is at least `i`, and every `S_i` shares the offset `s0 + f`.

use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::depgraph::{DependencyGraph, Node};
use crate::linalg::{
    add_vec, rat, rat_to_string, scale_vec, solve_min_norm, sub_vec, AffineSpace, LatticeResidual,
    Rat, RatMatrix, RatVector,
};
use crate::model::VasModel;
use crate::solution_space::SolutionSpace;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SubspaceError {
    #[error("no displacement vector places s0 + f in the solution space using the graph's update vectors")]
    NoDisplacement,
}

/// How the displacement vector `f` is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DisplacementRule {
    /// Solve `[M_0 | −M_s]·x̂ = s_p − 2·s0` and set `f = M_0·x + s0`.
    #[default]
    Shifted,
    /// Solve `[M_0 | −M_s]·x̂ = s_p − s0` and set `f = M_0·x`, so that
    /// `s0 ∈ S_0` and `f` lies in the span of the graph's update vectors.
    Span,
}

impl FromStr for DisplacementRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "shifted" => Ok(Self::Shifted),
            "span" => Ok(Self::Span),
            other => Err(format!(
                "unknown displacement rule `{other}` (expected shifted|span)"
            )),
        }
    }
}

impl fmt::Display for DisplacementRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Shifted => "shifted",
            Self::Span => "span",
        })
    }
}

/// Displacement vector together with how it was obtained.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Displacement {
    pub f: RatVector,
    /// Coefficients `x` over the columns of `M_0`.
    pub coefficients: RatVector,
    /// True when the requested rule was inconsistent and the span rule was used.
    pub fell_back: bool,
}

fn solve_stacked(m0: &RatMatrix, sol: &SolutionSpace, rhs: &[Rat]) -> Option<RatVector> {
    let a = m0.hstack(&sol.basis().neg());
    let xhat = solve_min_norm(&a, rhs)?;
    Some(xhat[..m0.cols()].to_vec())
}

/// Computes `f` such that `s0 + f ∈ V_Ψ`.
pub fn compute_f(
    m0: &RatMatrix,
    sol: &SolutionSpace,
    s0: &[Rat],
    rule: DisplacementRule,
) -> Result<Displacement, SubspaceError> {
    let sp = sol.particular();
    if rule == DisplacementRule::Shifted {
        let rhs = sub_vec(sp, &scale_vec(s0, &rat(2)));
        if let Some(x) = solve_stacked(m0, sol, &rhs) {
            let f = add_vec(&m0.mul_vec(&x), s0);
            return Ok(Displacement {
                f,
                coefficients: x,
                fell_back: false,
            });
        }
        log::warn!("displacement system inconsistent; falling back to the span rule");
    }
    let rhs = sub_vec(sp, s0);
    let x = solve_stacked(m0, sol, &rhs).ok_or(SubspaceError::NoDisplacement)?;
    Ok(Displacement {
        f: m0.mul_vec(&x),
        coefficients: x,
        fell_back: rule == DisplacementRule::Shifted,
    })
}

/// Result of locating a state in the chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainPosition {
    /// Deepest index whose space contains the state, or −1.
    pub p: i32,
    /// Distance to `S_{p+1}`, or to `V_Ψ` when `p = I`.
    pub tie_residual: Rat,
}

#[derive(Clone, Debug)]
pub struct IndexedSubspaceChain {
    spaces: Vec<AffineSpace>,
    evaluators: Vec<LatticeResidual>,
    generator_sets: Vec<Vec<usize>>,
    solution: LatticeResidual,
    displacement: Displacement,
    rule: DisplacementRule,
}

/// Builds `S_0..S_I` from the graph's reaction nodes.
pub fn build_chain(
    graph: &DependencyGraph,
    model: &VasModel,
    sol: &SolutionSpace,
    rule: DisplacementRule,
) -> Result<IndexedSubspaceChain, SubspaceError> {
    let m = model.m();
    let s0 = model.initial.to_rat();
    let reactions = graph.reaction_nodes();
    let top = graph.max_mld();
    let generator_sets: Vec<Vec<usize>> = (0..=top)
        .map(|i| {
            reactions
                .iter()
                .copied()
                .filter(|&r| graph.mld(Node::Reaction(r)).unwrap_or(0) >= i)
                .collect()
        })
        .collect();
    let columns = |set: &[usize]| -> RatMatrix {
        let cols: Vec<RatVector> = set.iter().map(|&r| model.update_vector(r)).collect();
        RatMatrix::from_columns(m, &cols)
    };
    let m0 = columns(&generator_sets[0]);
    let displacement = compute_f(&m0, sol, &s0, rule)?;
    assemble_chain(model, sol, generator_sets, displacement, rule)
}

/// Builds the chain for an explicitly chosen displacement.
pub fn assemble_chain(
    model: &VasModel,
    sol: &SolutionSpace,
    generator_sets: Vec<Vec<usize>>,
    displacement: Displacement,
    rule: DisplacementRule,
) -> Result<IndexedSubspaceChain, SubspaceError> {
    let m = model.m();
    let s0 = model.initial.to_rat();
    let columns = |set: &[usize]| -> RatMatrix {
        let cols: Vec<RatVector> = set.iter().map(|&r| model.update_vector(r)).collect();
        RatMatrix::from_columns(m, &cols)
    };
    let offset = add_vec(&s0, &displacement.f);
    let spaces: Vec<AffineSpace> = generator_sets
        .iter()
        .map(|set| AffineSpace::new(columns(set), offset.clone()))
        .collect();

    assert!(
        sol.space().contains(&offset),
        "s0 + f must satisfy the property"
    );
    assert!(
        generator_sets.len() == 1 || !generator_sets[generator_sets.len() - 1].is_empty(),
        "the deepest subspace must have a generator"
    );

    let evaluators = spaces.iter().map(AffineSpace::lattice_residual).collect();
    Ok(IndexedSubspaceChain {
        spaces,
        evaluators,
        generator_sets,
        solution: sol.space().lattice_residual(),
        displacement,
        rule,
    })
}

impl IndexedSubspaceChain {
    /// `I`, the deepest index.
    pub fn depth(&self) -> usize {
        self.spaces.len() - 1
    }

    pub fn spaces(&self) -> &[AffineSpace] {
        &self.spaces
    }

    pub fn space(&self, i: usize) -> &AffineSpace {
        &self.spaces[i]
    }

    /// Reaction indices generating `S_i`.
    pub fn generators(&self, i: usize) -> &[usize] {
        &self.generator_sets[i]
    }

    pub fn f(&self) -> &RatVector {
        &self.displacement.f
    }

    pub fn displacement(&self) -> &Displacement {
        &self.displacement
    }

    pub fn rule(&self) -> DisplacementRule {
        self.rule
    }

    /// Shared offset `s0 + f`.
    pub fn offset(&self) -> &RatVector {
        self.spaces[0].offset()
    }

    pub fn distance(&self, i: usize, s: &[i64]) -> Rat {
        self.evaluators[i].dist(s)
    }

    pub fn solution_distance(&self, s: &[i64]) -> Rat {
        self.solution.dist(s)
    }

    /// Scans from `S_I` down and stops at the first space containing `s`.
    pub fn deepest_zero_index(&self, s: &[i64]) -> ChainPosition {
        let top = self.depth();
        for i in (0..=top).rev() {
            if self.evaluators[i].is_zero(s) {
                let tie_residual = if i == top {
                    self.solution.dist(s)
                } else {
                    self.evaluators[i + 1].dist(s)
                };
                return ChainPosition {
                    p: i as i32,
                    tie_residual,
                };
            }
        }
        ChainPosition {
            p: -1,
            tie_residual: self.evaluators[0].dist(s),
        }
    }

    /// Distances `(d_I, …, d_0)` for the lexicographic comparator.
    pub fn distance_profile(&self, s: &[i64]) -> Vec<Rat> {
        (0..=self.depth())
            .rev()
            .map(|i| self.evaluators[i].dist(s))
            .collect()
    }

    /// JSON description: generator reactions per index, `f`, and the offset.
    pub fn to_json(&self, model: &VasModel) -> serde_json::Value {
        let vec_str = |v: &[Rat]| v.iter().map(rat_to_string).collect::<Vec<_>>();
        let spaces: Vec<serde_json::Value> = self
            .spaces
            .iter()
            .enumerate()
            .map(|(i, space)| {
                serde_json::json!({
                    "index": i,
                    "generators": self.generator_sets[i]
                        .iter()
                        .map(|&r| model.reactions[r].name.clone())
                        .collect::<Vec<_>>(),
                    "dimension": space.dim(),
                    "offset": vec_str(space.offset()),
                })
            })
            .collect();
        serde_json::json!({
            "depth": self.depth(),
            "rule": self.rule.to_string(),
            "fell_back": self.displacement.fell_back,
            "f": vec_str(&self.displacement.f),
            "spaces": spaces,
        })
    }
}

/// True when every space in the chain is contained in all shallower ones.
pub fn is_nested(chain: &IndexedSubspaceChain) -> bool {
    chain.spaces.windows(2).all(|w| w[0].contains_space(&w[1]))
}

/// `s0 + f` lies in every `S_i` and in `V_Ψ`.
pub fn offset_in_all(chain: &IndexedSubspaceChain) -> bool {
    let o = chain.offset();
    chain.spaces.iter().all(|s| s.residual(o).dist.is_zero()) && chain.solution.space().contains(o)
}
