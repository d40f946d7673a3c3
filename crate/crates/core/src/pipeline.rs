//! End-to-end run: solution space → (dependency graph and subspace chain for
//! ISR) → search → CTMC → transient lower bound.

use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::ctmc::{
    build_ctmc, transient_lower_bound, CtmcError, TransientResult, DEFAULT_TOLERANCE,
};
use crate::depgraph::{build_dependency_graph, DependencyGraph, UnreachableEvidence};
use crate::model::{PropertySpec, VasModel};
use crate::search::{
    blanketing_space, effective_k, run_search_with, Comparator, Guide, Method, PartialStateGraph,
    TieBreak, DEFAULT_MAX_STATES,
};
use crate::solution_space::{build_solution_space, SolutionSpaceError};
use crate::subspaces::{build_chain, DisplacementRule, IndexedSubspaceChain, SubspaceError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    SolutionSpace(#[from] SolutionSpaceError),
    #[error(transparent)]
    Subspace(#[from] SubspaceError),
    #[error(transparent)]
    Ctmc(#[from] CtmcError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub method: Method,
    pub k: usize,
    /// Overrides the model's time bound.
    pub time: Option<f64>,
    pub tol: f64,
    pub max_states: usize,
    pub comparator: Comparator,
    pub clamp_k: bool,
    pub displacement: DisplacementRule,
    pub tie_break: TieBreak,
}

impl RunOptions {
    pub fn new(method: Method, k: usize) -> Self {
        Self {
            method,
            k,
            time: None,
            tol: DEFAULT_TOLERANCE,
            max_states: DEFAULT_MAX_STATES,
            comparator: Comparator::Default,
            clamp_k: true,
            displacement: DisplacementRule::default(),
            tie_break: TieBreak::default(),
        }
    }

    fn validate(&self) -> Result<(), PipelineError> {
        if self.k == 0 {
            return Err(PipelineError::Config("K must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.tol <= 1e-3) {
            return Err(PipelineError::Config(format!(
                "tolerance must lie in (0, 1e-3], got {}",
                self.tol
            )));
        }
        if let Some(t) = self.time {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(PipelineError::Config(format!(
                    "time bound must be finite and nonnegative, got {t}"
                )));
            }
        }
        if self.max_states == 0 {
            return Err(PipelineError::Config("state cap must be at least 1".into()));
        }
        Ok(())
    }
}

/// Everything a run produced.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub method: Method,
    pub k_requested: usize,
    pub k_effective: usize,
    pub time_bound: f64,
    pub depgraph: Option<DependencyGraph>,
    pub chain: Option<IndexedSubspaceChain>,
    pub graph: Option<PartialStateGraph>,
    pub transient: Option<TransientResult>,
    /// Set when the dependency graph proves the property unreachable.
    pub unreachable: Option<UnreachableEvidence>,
    pub p_min: f64,
    pub wall_time_ms: u128,
}

/// JSON summary of one run.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub method: Method,
    #[serde(rename = "K")]
    pub k: usize,
    pub k_effective: usize,
    pub states: usize,
    pub transitions: usize,
    pub sat_count: usize,
    pub p_min: f64,
    pub lambda: f64,
    pub terms_used: usize,
    pub wall_time_ms: u128,
    pub explored: usize,
    pub truncated: bool,
    pub time_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unreachable: Option<String>,
}

impl RunOutcome {
    pub fn report(&self) -> RunReport {
        let stats = self
            .graph
            .as_ref()
            .map(|g| g.stats.clone())
            .unwrap_or_default();
        RunReport {
            method: self.method,
            k: self.k_requested,
            k_effective: self.k_effective,
            states: self.graph.as_ref().map_or(0, PartialStateGraph::n_states),
            transitions: self
                .graph
                .as_ref()
                .map_or(0, PartialStateGraph::n_transitions),
            sat_count: stats.satisfying,
            p_min: self.p_min,
            lambda: self.transient.as_ref().map_or(0.0, |t| t.lambda),
            terms_used: self.transient.as_ref().map_or(0, |t| t.terms_used),
            wall_time_ms: self.wall_time_ms,
            explored: stats.explored,
            truncated: stats.truncated,
            time_bound: self.time_bound,
            unreachable: self.unreachable.as_ref().map(ToString::to_string),
        }
    }
}

/// Builds the solution space, dependency graph, chain and partial state graph
/// without running transient analysis (`p_min` stays 0).
pub fn explore(
    model: &VasModel,
    prop: &PropertySpec,
    opts: &RunOptions,
) -> Result<RunOutcome, PipelineError> {
    opts.validate()?;
    let start = Instant::now();
    let time_bound = opts.time.unwrap_or(prop.time_bound);
    let sol = build_solution_space(prop, model.m())?;
    let depgraph = build_dependency_graph(model, prop);

    let mut outcome = RunOutcome {
        method: opts.method,
        k_requested: opts.k,
        k_effective: opts.k,
        time_bound,
        depgraph: None,
        chain: None,
        graph: None,
        transient: None,
        unreachable: None,
        p_min: 0.0,
        wall_time_ms: 0,
    };

    let graph = match opts.method {
        Method::Isr => {
            let dg = match depgraph {
                Ok(dg) => dg,
                Err(evidence) => {
                    outcome.unreachable = Some(evidence);
                    outcome.wall_time_ms = start.elapsed().as_millis();
                    return Ok(outcome);
                }
            };
            let chain = build_chain(&dg, model, &sol, opts.displacement)?;
            outcome.k_effective = effective_k(opts.k, opts.clamp_k, &sol, chain.space(0));
            let guide = Guide::Isr {
                graph: &dg,
                chain: &chain,
                comparator: opts.comparator,
            };
            let g = run_search_with(
                model,
                prop,
                &sol,
                guide,
                outcome.k_effective,
                opts.max_states,
                opts.tie_break,
            );
            outcome.depgraph = Some(dg);
            outcome.chain = Some(chain);
            g
        }
        Method::Sdp => {
            match depgraph {
                Ok(dg) => outcome.depgraph = Some(dg),
                Err(evidence) => {
                    log::warn!(
                        "satisfying states are unreachable ({evidence}); the bound will be 0"
                    );
                    outcome.unreachable = Some(evidence);
                }
            }
            outcome.k_effective = effective_k(opts.k, opts.clamp_k, &sol, &blanketing_space(model));
            run_search_with(
                model,
                prop,
                &sol,
                Guide::Sdp,
                outcome.k_effective,
                opts.max_states,
                opts.tie_break,
            )
        }
    };

    outcome.graph = Some(graph);
    outcome.wall_time_ms = start.elapsed().as_millis();
    Ok(outcome)
}

/// Runs transient analysis on an explored outcome.
pub fn analyse(outcome: &mut RunOutcome, tol: f64) -> Result<(), PipelineError> {
    let start = Instant::now();
    if let Some(graph) = &outcome.graph {
        let transient = transient_lower_bound(&build_ctmc(graph), outcome.time_bound, tol)?;
        outcome.p_min = transient.p_min;
        outcome.transient = Some(transient);
    }
    outcome.wall_time_ms += start.elapsed().as_millis();
    Ok(())
}

/// Full run: [`explore`] then [`analyse`].
pub fn run(
    model: &VasModel,
    prop: &PropertySpec,
    opts: &RunOptions,
) -> Result<RunOutcome, PipelineError> {
    let mut outcome = explore(model, prop, opts)?;
    analyse(&mut outcome, opts.tol)?;
    Ok(outcome)
}
