//! Sparse CTMC built from a partial state graph, transient reachability by
//! uniformization, and explicit transition/label file export and import.

use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::search::PartialStateGraph;

pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// Inflation of the maximal exit rate used as the uniformization rate.
const LAMBDA_FACTOR: f64 = 1.02;

#[derive(Debug, Error)]
pub enum CtmcError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("invalid transient-analysis input: {0}")]
    InvalidInput(String),
}

/// Row-compressed rate matrix with absorbing satisfying states and sink.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseCtmc {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    rates: Vec<f64>,
    exit: Vec<f64>,
    initial: usize,
    sat: Vec<bool>,
    abs: Option<usize>,
}

impl SparseCtmc {
    /// Builds from `(from, to, rate)` triples; duplicates are summed, self
    /// loops and rows of absorbing states are dropped.
    pub fn from_transitions(
        n: usize,
        transitions: &[(usize, usize, f64)],
        initial: usize,
        sat: &BTreeSet<usize>,
        abs: Option<usize>,
    ) -> Self {
        let mut sat_flags = vec![false; n];
        for &s in sat {
            sat_flags[s] = true;
        }
        let absorbing = |i: usize| sat_flags[i] || abs == Some(i);
        let mut sorted: Vec<(usize, usize, f64)> = transitions
            .iter()
            .copied()
            .filter(|&(f, t, r)| f != t && r > 0.0 && !absorbing(f))
            .collect();
        sorted.sort_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(sorted.len());
        let mut rates: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut exit = vec![0.0; n];
        let mut last: Option<(usize, usize)> = None;
        for (f, t, r) in sorted {
            if last == Some((f, t)) {
                *rates.last_mut().unwrap() += r;
            } else {
                cols.push(t);
                rates.push(r);
                row_ptr[f + 1] += 1;
                last = Some((f, t));
            }
            exit[f] += r;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            cols,
            rates,
            exit,
            initial,
            sat: sat_flags,
            abs,
        }
    }

    pub fn n_states(&self) -> usize {
        self.n
    }

    pub fn n_transitions(&self) -> usize {
        self.cols.len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn is_sat(&self, i: usize) -> bool {
        self.sat[i]
    }

    pub fn absorbing_id(&self) -> Option<usize> {
        self.abs
    }

    pub fn exit_rate(&self, i: usize) -> f64 {
        self.exit[i]
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.cols[k], self.rates[k]))
    }

    /// Sorted `(from, to, rate)` triples.
    pub fn transitions(&self) -> Vec<(usize, usize, f64)> {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, r)| (i, j, r)))
            .collect()
    }

    pub fn max_exit_rate(&self) -> f64 {
        self.exit.iter().copied().fold(0.0, f64::max)
    }
}

/// Satisfying states and the sink become absorbing.
pub fn build_ctmc(graph: &PartialStateGraph) -> SparseCtmc {
    SparseCtmc::from_transitions(
        graph.n_states(),
        &graph.transitions(),
        graph.initial_id(),
        graph.sat_ids(),
        Some(graph.abs_id()),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransientResult {
    pub p_min: f64,
    pub lambda: f64,
    pub terms_used: usize,
    pub tolerance: f64,
    /// Poisson mass beyond the last term used.
    pub truncation_error: f64,
    /// Largest deviation of total probability mass from 1 over all steps.
    pub mass_error: f64,
    /// The initial state is absorbing (or T = 0), so no series was needed.
    pub degenerate: bool,
}

#[derive(Clone, Copy, Debug, Default)]
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Truncated Poisson(q) distribution: weights for `k = left..=right`.
#[derive(Clone, Debug, PartialEq)]
pub struct PoissonWindow {
    pub left: usize,
    pub weights: Vec<f64>,
    /// Mass below `left`.
    pub left_mass: f64,
    /// Mass above the last stored weight.
    pub right_tail: f64,
}

impl PoissonWindow {
    pub fn right(&self) -> usize {
        self.left + self.weights.len() - 1
    }

    /// Weight of `k` (0 outside the window).
    pub fn weight(&self, k: usize) -> f64 {
        k.checked_sub(self.left)
            .and_then(|i| self.weights.get(i))
            .copied()
            .unwrap_or(0.0)
    }

    /// Total truncated mass on both sides.
    pub fn truncation_error(&self) -> f64 {
        self.left_mass + self.right_tail
    }
}

/// Poisson(q) weights, evaluated in log space outward from the mode so that
/// large `q` neither underflows nor stores negligible terms. The window is
/// chosen so that the dropped mass on both sides totals at most `tol`; the
/// left cut only drops mass below `tol / 1000`.
pub fn poisson_weights(q: f64, tol: f64) -> PoissonWindow {
    if q == 0.0 {
        return PoissonWindow {
            left: 0,
            weights: vec![1.0],
            left_mass: 0.0,
            right_tail: 0.0,
        };
    }
    let ln_q = q.ln();
    let mode = q.floor() as usize;
    let lw_mode = -q + mode as f64 * ln_q - libm::lgamma(mode as f64 + 1.0);
    let negligible = tol * 1e-6;

    let mut right = Vec::new();
    let mut lw = lw_mode;
    let mut k = mode;
    loop {
        let w = lw.exp();
        right.push(w);
        let kf = k as f64;
        if kf + 1.0 > q {
            // geometric bound on the remaining tail
            let ratio = q / (kf + 2.0);
            let bound = w * ratio / (1.0 - ratio);
            if bound < negligible || (w == 0.0 && kf > q) {
                break;
            }
        }
        k += 1;
        lw += ln_q - (k as f64).ln();
    }

    let mut left = Vec::new();
    let mut lw = lw_mode;
    let mut k = mode;
    while k > 0 {
        lw += (k as f64).ln() - ln_q;
        k -= 1;
        let w = lw.exp();
        left.push(w);
        // Σ_{j ≤ k} w_j ≤ w_k / (1 − k/q)
        if w / (1.0 - k as f64 / q) < negligible {
            break;
        }
    }
    let lo = mode - left.len();
    left.reverse();
    let mut weights: Vec<f64> = left.into_iter().chain(right).collect();
    let len = weights.len();
    // the mode's log weight carries the rounding error of lgamma for large q;
    // the window holds all but a negligible part of the mass, so normalize
    let mut total = Kahan::default();
    weights.iter().for_each(|&w| total.add(w));
    weights.iter_mut().for_each(|w| *w /= total.sum);

    // prefix[i] = Σ_{j < i} w, suffix[i] = Σ_{j ≥ i} w (window-relative)
    let mut prefix = vec![0.0; len + 1];
    let mut acc = Kahan::default();
    for i in 0..len {
        acc.add(weights[i]);
        prefix[i + 1] = acc.sum;
    }
    let mut suffix = vec![0.0; len + 1];
    let mut acc = Kahan::default();
    for i in (0..len).rev() {
        acc.add(weights[i]);
        suffix[i] = acc.sum;
    }
    let cut_left = (0..len)
        .take_while(|&i| prefix[i + 1] <= tol * 1e-3)
        .count();
    let left_mass = prefix[cut_left];
    let cut_right = (cut_left..len)
        .find(|&i| suffix[i + 1] <= tol - left_mass)
        .unwrap_or(len - 1);
    PoissonWindow {
        left: lo + cut_left,
        weights: weights[cut_left..=cut_right].to_vec(),
        left_mass,
        right_tail: suffix[cut_right + 1],
    }
}

/// Probability of reaching a satisfying state within `[0, t]` from the
/// initial state.
pub fn transient_lower_bound(
    ctmc: &SparseCtmc,
    t: f64,
    tol: f64,
) -> Result<TransientResult, CtmcError> {
    if t.is_nan() || t < 0.0 || !t.is_finite() {
        return Err(CtmcError::InvalidInput(format!(
            "time bound must be finite and nonnegative, got {t}"
        )));
    }
    if !(tol > 0.0 && tol <= 1e-3) {
        return Err(CtmcError::InvalidInput(format!(
            "tolerance must lie in (0, 1e-3], got {tol}"
        )));
    }
    let init = ctmc.initial;
    let degenerate = |p: f64| TransientResult {
        p_min: p,
        lambda: 0.0,
        terms_used: 0,
        tolerance: tol,
        truncation_error: 0.0,
        mass_error: 0.0,
        degenerate: true,
    };
    if ctmc.sat[init] {
        return Ok(degenerate(1.0));
    }
    let max_exit = ctmc.max_exit_rate();
    if t == 0.0 || max_exit == 0.0 || ctmc.exit[init] == 0.0 {
        return Ok(degenerate(0.0));
    }

    let lambda = LAMBDA_FACTOR * max_exit;
    let window = poisson_weights(lambda * t, tol);

    let n = ctmc.n;
    let absorbing: Vec<bool> = (0..n).map(|i| ctmc.sat[i] || ctmc.abs == Some(i)).collect();
    let stay: Vec<f64> = (0..n).map(|i| 1.0 - ctmc.exit[i] / lambda).collect();
    let mut pi = vec![0.0; n];
    pi[init] = 1.0;
    let mut next = vec![0.0; n];
    let mut sat_mass = Kahan::default();
    let mut abs_mass = Kahan::default();
    let mut p = Kahan::default();
    let mut mass_error: f64 = 0.0;
    let last = window.right();
    let mut terms_used = last + 1;

    for k in 0..=last {
        let w = window.weight(k);
        if k > 0 {
            next.iter_mut().for_each(|x| *x = 0.0);
            for i in 0..n {
                let mass = pi[i];
                if mass == 0.0 {
                    continue;
                }
                next[i] += mass * stay[i];
                for (j, r) in ctmc.row(i) {
                    let flow = mass * (r / lambda);
                    if ctmc.sat[j] {
                        sat_mass.add(flow);
                    } else if absorbing[j] {
                        abs_mass.add(flow);
                    } else {
                        next[j] += flow;
                    }
                }
            }
            std::mem::swap(&mut pi, &mut next);
        }
        p.add(w * sat_mass.sum);

        let transient: f64 = pi.iter().sum();
        mass_error = mass_error.max((transient + sat_mass.sum + abs_mass.sum - 1.0).abs());
        if transient <= (sat_mass.sum * 1e-15).max(1e-300) {
            // nothing left to move: the satisfying mass is final
            let rest: f64 =
                (k + 1..=last).map(|j| window.weight(j)).sum::<f64>() + window.right_tail;
            p.add(rest * sat_mass.sum);
            terms_used = k + 1;
            break;
        }
    }

    Ok(TransientResult {
        p_min: p.sum.clamp(0.0, 1.0),
        lambda,
        terms_used,
        tolerance: tol,
        truncation_error: window.truncation_error(),
        mass_error,
        degenerate: false,
    })
}

/// `%.17g`-style rendering with trailing zeros removed (`1.0` → `1`).
pub fn format_rate(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.16e}", x);
    let (_, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if !(-4..17).contains(&exp) {
        let (mant, _) = sci.split_once('e').unwrap();
        let mant = strip_zeros(mant);
        return format!("{mant}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let decimals = (16 - exp).max(0) as usize;
    strip_zeros(&format!("{:.*}", decimals, x)).to_string()
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes `<from> <to> <rate>` lines and `<id> init|sat|abs` lines.
pub fn export_explicit(graph: &PartialStateGraph, tra: &Path, lab: &Path) -> Result<(), CtmcError> {
    let ctmc = build_ctmc(graph);
    write_ctmc(&ctmc, tra, lab)
}

pub fn write_ctmc(ctmc: &SparseCtmc, tra: &Path, lab: &Path) -> Result<(), CtmcError> {
    let mut t = String::new();
    for (from, to, rate) in ctmc.transitions() {
        t.push_str(&format!("{from} {to} {}\n", format_rate(rate)));
    }
    let mut l = String::new();
    for i in 0..ctmc.n {
        if i == ctmc.initial {
            l.push_str(&format!("{i} init\n"));
        }
        if ctmc.sat[i] {
            l.push_str(&format!("{i} sat\n"));
        }
        if ctmc.abs == Some(i) {
            l.push_str(&format!("{i} abs\n"));
        }
    }
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CtmcError::Io { path, source }
    };
    fs::write(tra, t).map_err(io_err(tra))?;
    fs::write(lab, l).map_err(io_err(lab))?;
    Ok(())
}

/// Reads files written by [`export_explicit`].
pub fn import_explicit(tra: &Path, lab: &Path) -> Result<SparseCtmc, CtmcError> {
    let read = |path: &Path| {
        fs::read_to_string(path).map_err(|source| CtmcError::Io {
            path: path.to_path_buf(),
            source,
        })
    };
    let fmt_err = |path: &Path, line: usize, message: String| CtmcError::Format {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut transitions = Vec::new();
    let mut n = 0;
    for (i, line) in read(tra)?.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let parsed = match fields.as_slice() {
            [f, t, r] => f
                .parse::<usize>()
                .ok()
                .zip(t.parse::<usize>().ok())
                .zip(r.parse::<f64>().ok()),
            _ => None,
        };
        let ((from, to), rate) = parsed.ok_or_else(|| {
            fmt_err(
                tra,
                i + 1,
                format!("expected `<from> <to> <rate>`, got `{line}`"),
            )
        })?;
        n = n.max(from + 1).max(to + 1);
        transitions.push((from, to, rate));
    }
    let mut initial = None;
    let mut sat = BTreeSet::new();
    let mut abs = None;
    for (i, line) in read(lab)?.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let (id, label) = match fields.as_slice() {
            [id, label] => (id.parse::<usize>().ok(), *label),
            _ => (None, ""),
        };
        let id = id
            .ok_or_else(|| fmt_err(lab, i + 1, format!("expected `<id> <label>`, got `{line}`")))?;
        n = n.max(id + 1);
        match label {
            "init" => initial = Some(id),
            "sat" => {
                sat.insert(id);
            }
            "abs" => abs = Some(id),
            other => return Err(fmt_err(lab, i + 1, format!("unknown label `{other}`"))),
        }
    }
    let initial = initial.ok_or_else(|| fmt_err(lab, 0, "no `init` label".to_string()))?;
    Ok(SparseCtmc::from_transitions(
        n,
        &transitions,
        initial,
        &sat,
        abs,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize, edges: &[(usize, usize, f64)], sat: &[usize]) -> SparseCtmc {
        SparseCtmc::from_transitions(n, edges, 0, &sat.iter().copied().collect(), None)
    }

    #[test]
    fn single_edge_matches_closed_form() {
        let c = chain(2, &[(0, 1, 1.0)], &[1]);
        let r = transient_lower_bound(&c, 1.0, 1e-12).unwrap();
        assert!(
            (r.p_min - (1.0 - (-1.0f64).exp())).abs() < 1e-12,
            "{}",
            r.p_min
        );
        for (lambda, t) in [(0.3, 2.0), (5.0, 0.1), (2.5, 40.0)] {
            let c = chain(2, &[(0, 1, lambda)], &[1]);
            let r = transient_lower_bound(&c, t, 1e-12).unwrap();
            assert!((r.p_min - (1.0 - (-lambda * t).exp())).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_cases() {
        let c = chain(2, &[(0, 1, 1.0)], &[1]);
        let r = transient_lower_bound(&c, 0.0, 1e-12).unwrap();
        assert_eq!(r.p_min, 0.0);
        assert!(r.degenerate);
        let c = chain(2, &[(0, 1, 1.0)], &[0]);
        assert_eq!(transient_lower_bound(&c, 5.0, 1e-12).unwrap().p_min, 1.0);
        let c = chain(2, &[], &[1]);
        assert_eq!(transient_lower_bound(&c, 5.0, 1e-12).unwrap().p_min, 0.0);
        assert!(transient_lower_bound(&c, -1.0, 1e-12).is_err());
        assert!(transient_lower_bound(&c, 1.0, 0.1).is_err());
    }

    #[test]
    fn duplicates_are_summed() {
        let c = chain(2, &[(0, 1, 1.0), (0, 1, 0.5)], &[1]);
        assert_eq!(c.n_transitions(), 1);
        assert_eq!(c.transitions(), vec![(0, 1, 1.5)]);
    }

    #[test]
    fn poisson_tail_is_within_tolerance() {
        for q in [0.5, 10.0, 400.0, 20_000.0, 3e7] {
            let w = poisson_weights(q, 1e-12);
            assert!(w.truncation_error() <= 1e-12);
            let total: f64 = w.weights.iter().sum();
            assert!(
                (total + w.truncation_error() - 1.0).abs() < 1e-9,
                "q={q} total={total}"
            );
        }
        // small rates keep the full left side
        assert_eq!(poisson_weights(10.0, 1e-12).left, 0);
        // large rates store only the significant window
        let w = poisson_weights(3e7, 1e-12);
        assert!(w.left > 0 && w.weights.len() < 100_000);
    }

    #[test]
    fn rate_formatting() {
        assert_eq!(format_rate(1.0), "1");
        assert_eq!(format_rate(0.025 * 40.0), "1");
        assert_eq!(format_rate(0.55), "0.55000000000000004");
        assert_eq!(format_rate(3.21), "3.21");
        assert_eq!(format_rate(1050.0), "1050");
        assert_eq!(format_rate(1e-7), "9.9999999999999995e-08");
        assert_eq!(format_rate(2.5e20), "2.5e+20");
        for x in [0.55, 3.21, 1e-7, 7.9094, 123456.789] {
            assert_eq!(format_rate(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn export_import_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (tra, lab) = (dir.path().join("g.tra"), dir.path().join("g.lab"));
        let c = SparseCtmc::from_transitions(
            4,
            &[(0, 1, 0.5), (0, 3, 0.25), (1, 2, 1.0), (1, 0, 0.1)],
            0,
            &BTreeSet::from([2]),
            Some(3),
        );
        write_ctmc(&c, &tra, &lab).unwrap();
        assert_eq!(
            fs::read_to_string(&tra).unwrap(),
            "0 1 0.5\n0 3 0.25\n1 0 0.10000000000000001\n1 2 1\n"
        );
        assert_eq!(fs::read_to_string(&lab).unwrap(), "0 init\n2 sat\n3 abs\n");
        let back = import_explicit(&tra, &lab).unwrap();
        assert_eq!(back, c);
    }
}
