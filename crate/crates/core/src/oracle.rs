//! Brute-force references: exhaustive state-space construction inside a box,
//! membership by solving the generating system, and dense matrix-exponential
//! transient analysis for tiny chains.

use std::collections::{BTreeSet, VecDeque};

use indexmap::IndexSet;
use thiserror::Error;

use crate::ctmc::SparseCtmc;
use crate::linalg::{rref, sub_vec, AffineSpace, Rat, RatMatrix};
use crate::model::{PropertySpec, State, VasModel};
use crate::search::PartialStateGraph;

/// Largest box volume the exhaustive oracle accepts.
pub const MAX_BOX_VOLUME: f64 = 1e7;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("truncation box holds more than 10^7 states")]
    BoxTooLarge,
    #[error("truncation box has {got} bounds for {expected} species")]
    Arity { expected: usize, got: usize },
    #[error("initial state lies outside the truncation box")]
    InitialOutside,
}

/// Inclusive per-species upper bounds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncationBox {
    pub bounds: Vec<i64>,
}

impl TruncationBox {
    pub fn new(bounds: Vec<i64>) -> Self {
        Self { bounds }
    }

    pub fn uniform(m: usize, bound: i64) -> Self {
        Self {
            bounds: vec![bound; m],
        }
    }

    pub fn contains(&self, s: &[i64]) -> bool {
        s.iter().zip(&self.bounds).all(|(&x, &b)| x >= 0 && x <= b)
    }

    pub fn volume(&self) -> f64 {
        self.bounds.iter().map(|&b| (b + 1) as f64).product()
    }
}

/// Breadth-first expansion of every state reachable inside the box.
/// Satisfying states are not expanded; out-of-box successors go to the sink.
pub fn exhaustive_graph(
    model: &VasModel,
    prop: &PropertySpec,
    bx: &TruncationBox,
) -> Result<PartialStateGraph, OracleError> {
    if bx.bounds.len() != model.m() {
        return Err(OracleError::Arity {
            expected: model.m(),
            got: bx.bounds.len(),
        });
    }
    if bx.volume() > MAX_BOX_VOLUME {
        return Err(OracleError::BoxTooLarge);
    }
    if !bx.contains(model.initial.counts()) {
        return Err(OracleError::InitialOutside);
    }
    let mut states: IndexSet<State> = IndexSet::new();
    let mut edges = Vec::new();
    let mut absorbed = Vec::new();
    let mut sat = BTreeSet::new();
    states.insert(model.initial.clone());
    absorbed.push(0.0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(id) = queue.pop_front() {
        let s = states[id].clone();
        if prop.satisfies(&s) {
            sat.insert(id);
            continue;
        }
        for succ in model.enabled_successors(&s) {
            if !bx.contains(&succ.state) {
                absorbed[id] += succ.rate;
                continue;
            }
            let (to, new) = states.insert_full(succ.state);
            if new {
                absorbed.push(0.0);
                queue.push_back(to);
            }
            edges.push((id, to, succ.rate));
        }
    }
    Ok(PartialStateGraph::from_parts(
        states.into_iter().collect(),
        &edges,
        absorbed,
        sat,
    ))
}

/// Whether `gen·x = v − offset` has a rational solution.
pub fn membership_bruteforce(space: &AffineSpace, v: &[Rat]) -> bool {
    let rhs = sub_vec(v, space.offset());
    let gen = space.generators();
    let augmented = gen.hstack(&RatMatrix::column_vector(&rhs));
    let (_, pivots) = rref(&augmented);
    // inconsistent iff the last column holds a pivot
    !pivots.contains(&gen.cols())
}

/// `exp(A)` by Taylor series with scaling and squaring.
pub fn expm(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let norm = (0..n)
        .map(|j| (0..n).map(|i| a[i][j].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scale = 2f64.powi(squarings as i32);
    let scaled: Vec<Vec<f64>> = a
        .iter()
        .map(|r| r.iter().map(|x| x / scale).collect())
        .collect();

    let identity = |n: usize| -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect()
    };
    let mut result = identity(n);
    let mut term = identity(n);
    for k in 1..=40 {
        term = matmul(&term, &scaled);
        for row in term.iter_mut() {
            for x in row.iter_mut() {
                *x /= k as f64;
            }
        }
        for i in 0..n {
            for j in 0..n {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    result
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let m = b[0].len();
    let mut c = vec![vec![0.0; m]; n];
    for i in 0..n {
        for k in 0..b.len() {
            let aik = a[i][k];
            if aik != 0.0 {
                for j in 0..m {
                    c[i][j] += aik * b[k][j];
                }
            }
        }
    }
    c
}

/// Reachability of the satisfying states within `t` via the dense generator.
pub fn dense_transient(ctmc: &SparseCtmc, t: f64) -> f64 {
    let n = ctmc.n_states();
    let mut q = vec![vec![0.0; n]; n];
    for (i, row) in q.iter_mut().enumerate() {
        for (j, r) in ctmc.row(i) {
            row[j] += r * t;
            row[i] -= r * t;
        }
    }
    let e = expm(&q);
    let init = ctmc.initial();
    (0..n).filter(|&j| ctmc.is_sat(j)).map(|j| e[init][j]).sum()
}
