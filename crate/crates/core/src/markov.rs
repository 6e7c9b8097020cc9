//! Stochastic one-player machinery: ergodic structure of stochastic matrices,
//! the invariant-measure eigenvalue formula, multichain policy iteration for
//! the maximizing player, and the critical graph of a reduced operator.

use std::collections::HashSet;

use serde::Serialize;

use crate::error::MarkovError;
use crate::game::{GameSpec, PaymentVector, Policy, StateVector};
use crate::graph::{final_classes, tarjan_scc};

/// Row-sum tolerance for stochastic matrices.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Residual contract for invariant measures (1-norm of `mP - m`).
pub const MEASURE_TOL: f64 = 1e-10;

/// Argmax tie tolerance; the single knob coupling numerics to combinatorics.
pub const TIE_TOL: f64 = 1e-9;

/// Cap on support-pattern enumeration in the critical graph.
pub const PATTERN_CAP: u128 = 1 << 16;

/// Default cap on MAX counter-policy enumeration.
pub const DEFAULT_PI_CAP: u128 = 1_000_000;

/// Ergodic structure of a stochastic matrix.
#[derive(Debug, Clone)]
pub struct ChainStructure {
    pub final_classes: Vec<Vec<usize>>,
    pub transient: Vec<usize>,
}

/// Stationary distribution supported on one final class.
#[derive(Debug, Clone)]
pub struct InvariantMeasure {
    pub class: Vec<usize>,
    /// Probability weights, aligned with `class`.
    pub weights: Vec<f64>,
}

/// Eigenpair of a one-player (or two-player) operator.
#[derive(Debug, Clone, Serialize)]
pub struct EigenPair {
    pub lambda: f64,
    pub bias: StateVector,
    /// Sup-norm residual of the eigen-equation under direct re-evaluation.
    pub residual: f64,
    /// State index where the bias is normalized to zero.
    pub anchor: usize,
}

/// Outcome of one-player policy iteration.
#[derive(Debug, Clone)]
pub enum HowardOutcome {
    Eigen(EigenPair),
    /// The operator has no eigenvalue: the optimal gain is state-dependent.
    NotWellPosed { gain: StateVector },
}

/// Critical graph of a reduced operator at an eigenvector.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalGraphReport {
    /// Per state, MAX actions attaining the max at the bias (tie tolerance
    /// `TIE_TOL`).
    pub active_supports: Vec<Vec<usize>>,
    pub critical_arcs: Vec<(usize, usize)>,
    pub critical_nodes: Vec<usize>,
    pub critical_classes: Vec<Vec<usize>>,
    /// Set when the support-pattern cap was hit and the class list is only a
    /// lower bound.
    pub classes_lower_bound: bool,
}

fn validate_stochastic(p: &[Vec<f64>]) -> Result<(), MarkovError> {
    for (i, row) in p.iter().enumerate() {
        if let Some(&v) = row.iter().find(|&&v| !(0.0..=1.0 + STOCHASTIC_TOL).contains(&v)) {
            return Err(MarkovError::NotStochastic {
                row: i,
                reason: format!("entry {v} outside [0, 1]"),
            });
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(MarkovError::NotStochastic {
                row: i,
                reason: format!("row sums to {sum}"),
            });
        }
    }
    Ok(())
}

fn support_adjacency(p: &[Vec<f64>]) -> Vec<Vec<usize>> {
    p.iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|(_, &v)| v > 0.0)
                .map(|(j, _)| j)
                .collect()
        })
        .collect()
}

/// Final classes (sink components of the support-graph condensation) and
/// transient nodes of a stochastic matrix.
pub fn chain_structure(p: &[Vec<f64>]) -> Result<ChainStructure, MarkovError> {
    validate_stochastic(p)?;
    let (finals, transient) = final_classes(&support_adjacency(p));
    Ok(ChainStructure {
        final_classes: finals,
        transient,
    })
}

/// Gaussian elimination with partial pivoting; `None` when singular.
#[allow(clippy::needless_range_loop)] // row `row` and pivot row `col` are borrowed together
fn linsolve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()
        })?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in col + 1..n {
            s -= a[col][k] * x[k];
        }
        x[col] = s / a[col][col];
    }
    Some(x)
}

/// Invariant measure of a final class: solves `m P|_C = m`, `sum m = 1`.
pub fn invariant_measure(p: &[Vec<f64>], class: &[usize]) -> Result<InvariantMeasure, MarkovError> {
    let k = class.len();
    // (P|C^T - I) m = 0 with the last equation replaced by sum(m) = 1.
    let mut a = vec![vec![0.0; k]; k];
    for (ri, &i) in class.iter().enumerate() {
        for (rj, &j) in class.iter().enumerate() {
            a[ri][rj] = p[j][i] - if ri == rj { 1.0 } else { 0.0 };
        }
    }
    for v in a[k - 1].iter_mut() {
        *v = 1.0;
    }
    let mut b = vec![0.0; k];
    b[k - 1] = 1.0;
    let m = linsolve(a, b).ok_or(MarkovError::SingularSystem)?;
    // residual ||m P - m||_1 restricted to the class
    let residual: f64 = class
        .iter()
        .enumerate()
        .map(|(rj, &j)| {
            let mp: f64 = class.iter().enumerate().map(|(ri, &i)| m[ri] * p[i][j]).sum();
            (mp - m[rj]).abs()
        })
        .sum();
    if residual > MEASURE_TOL || m.iter().any(|&w| w < -MEASURE_TOL) {
        return Err(MarkovError::SingularSystem);
    }
    Ok(InvariantMeasure {
        class: class.to_vec(),
        weights: m.iter().map(|&w| w.max(0.0)).collect(),
    })
}

/// Branch table of the reduced operator: per state, `(payment, row)` for each
/// MAX action available under the fixed MIN policy.
fn branch_table<'a>(
    spec: &'a GameSpec,
    r: &PaymentVector,
    sigma: &Policy,
) -> Vec<Vec<(f64, &'a [f64])>> {
    (0..spec.n_states())
        .map(|i| {
            let a = sigma.choice[i];
            (0..spec.max_action_count(i, a))
                .map(|b| {
                    let e = spec.entry_index(i, a, b);
                    (r.values()[e], spec.entry(e).row.as_slice())
                })
                .collect()
        })
        .collect()
}

fn dot(row: &[f64], x: &[f64]) -> f64 {
    row.iter().zip(x).map(|(p, v)| p * v).sum()
}

/// Gain and bias of a fixed policy pair: per-class average payments
/// propagated to transient states, and the anchored bias solving
/// `(I - P) v = r - g`.
fn evaluate_policy(
    pay: &[f64],
    p: &[Vec<f64>],
) -> Result<(StateVector, StateVector), MarkovError> {
    let n = p.len();
    let cs = chain_structure(p)?;
    let mut gain = vec![f64::NAN; n];
    let mut bias = vec![f64::NAN; n];

    for class in &cs.final_classes {
        let m = invariant_measure(p, class)?;
        let g: f64 = class
            .iter()
            .zip(&m.weights)
            .map(|(&i, &w)| w * pay[i])
            .sum();
        for &i in class {
            gain[i] = g;
        }
        // (I - P|C) v = r - g on the class, anchored at its smallest node.
        let k = class.len();
        let anchor = 0; // classes are sorted, class[0] is the smallest node
        let mut a = vec![vec![0.0; k]; k];
        let mut b = vec![0.0; k];
        for (ri, &i) in class.iter().enumerate() {
            if ri == anchor {
                a[ri][ri] = 1.0;
                b[ri] = 0.0;
                continue;
            }
            for (rj, &j) in class.iter().enumerate() {
                a[ri][rj] = (if ri == rj { 1.0 } else { 0.0 }) - p[i][j];
            }
            b[ri] = pay[i] - g;
        }
        let v = linsolve(a, b).ok_or(MarkovError::SingularSystem)?;
        for (ri, &i) in class.iter().enumerate() {
            bias[i] = v[ri];
        }
    }

    if !cs.transient.is_empty() {
        let t = &cs.transient;
        let k = t.len();
        let idx_of = |i: usize| t.iter().position(|&x| x == i);
        // gain on transient states: (I - P_TT) g_T = P_TR g_R
        let mut a = vec![vec![0.0; k]; k];
        let mut b = vec![0.0; k];
        for (ri, &i) in t.iter().enumerate() {
            for (rj, &j) in t.iter().enumerate() {
                a[ri][rj] = (if ri == rj { 1.0 } else { 0.0 }) - p[i][j];
            }
            b[ri] = (0..n)
                .filter(|&j| idx_of(j).is_none())
                .map(|j| p[i][j] * gain[j])
                .sum();
        }
        let gt = linsolve(a.clone(), b).ok_or(MarkovError::SingularSystem)?;
        for (ri, &i) in t.iter().enumerate() {
            gain[i] = gt[ri];
        }
        // bias on transient states: (I - P_TT) v_T = (r - g)_T + P_TR v_R
        let mut b = vec![0.0; k];
        for (ri, &i) in t.iter().enumerate() {
            b[ri] = pay[i] - gain[i]
                + (0..n)
                    .filter(|&j| idx_of(j).is_none())
                    .map(|j| p[i][j] * bias[j])
                    .sum::<f64>();
        }
        let vt = linsolve(a, b).ok_or(MarkovError::SingularSystem)?;
        for (ri, &i) in t.iter().enumerate() {
            bias[i] = vt[ri];
        }
    }

    Ok((gain, bias))
}

/// Multichain policy iteration over the MAX counter-policies against a fixed
/// MIN policy. Improvement is on gain first, then on bias among gain-optimal
/// actions, keeping the incumbent whenever it attains the max. Returns an
/// eigenpair when the terminal gain is constant, `NotWellPosed` otherwise.
pub fn howard_solve(
    spec: &GameSpec,
    r: &PaymentVector,
    sigma: &Policy,
) -> Result<HowardOutcome, MarkovError> {
    let n = spec.n_states();
    let branches = branch_table(spec, r, sigma);
    let mut pi: Vec<usize> = vec![0; n];
    let mut visited: HashSet<Vec<usize>> = HashSet::new();
    visited.insert(pi.clone());

    loop {
        let pay: Vec<f64> = (0..n).map(|i| branches[i][pi[i]].0).collect();
        let p: Vec<Vec<f64>> = (0..n).map(|i| branches[i][pi[i]].1.to_vec()).collect();
        let (gain, bias) = evaluate_policy(&pay, &p)?;

        // Phase 1: gain improvement.
        let mut next = pi.clone();
        let mut changed = false;
        for i in 0..n {
            let qs: Vec<f64> = branches[i].iter().map(|(_, row)| dot(row, &gain)).collect();
            let best = qs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if qs[pi[i]] < best - TIE_TOL {
                next[i] = qs
                    .iter()
                    .position(|&q| q >= best - TIE_TOL)
                    .expect("argmax exists");
                changed = true;
            }
        }
        // Phase 2: bias improvement among gain-optimal actions.
        if !changed {
            for i in 0..n {
                let qs: Vec<f64> = branches[i].iter().map(|(_, row)| dot(row, &gain)).collect();
                let best_q = qs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let ws: Vec<f64> = branches[i]
                    .iter()
                    .map(|(pay, row)| pay + dot(row, &bias))
                    .collect();
                let best_w = qs
                    .iter()
                    .zip(&ws)
                    .filter(|(q, _)| **q >= best_q - TIE_TOL)
                    .map(|(_, w)| *w)
                    .fold(f64::NEG_INFINITY, f64::max);
                if qs[pi[i]] >= best_q - TIE_TOL && ws[pi[i]] >= best_w - TIE_TOL {
                    continue; // incumbent attains the max
                }
                next[i] = (0..branches[i].len())
                    .find(|&b| qs[b] >= best_q - TIE_TOL && ws[b] >= best_w - TIE_TOL)
                    .expect("argmax exists");
                changed = true;
            }
        }

        if !changed {
            let gmin = gain.iter().cloned().fold(f64::INFINITY, f64::min);
            let gmax = gain.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if gmax - gmin > TIE_TOL {
                return Ok(HowardOutcome::NotWellPosed { gain });
            }
            let lambda = gain[0];
            let anchor = 0;
            let shift = bias[anchor];
            let bias: StateVector = bias.iter().map(|v| v - shift).collect();
            let reduced = spec.reduce_min(r, sigma);
            let tv = reduced.apply(&bias);
            let residual = tv
                .iter()
                .zip(&bias)
                .map(|(t, v)| (t - lambda - v).abs())
                .fold(0.0, f64::max);
            if residual > TIE_TOL {
                return Err(MarkovError::ResidualExceeded {
                    residual,
                    tol: TIE_TOL,
                });
            }
            return Ok(HowardOutcome::Eigen(EigenPair {
                lambda,
                bias,
                residual,
                anchor,
            }));
        }

        pi = next;
        if !visited.insert(pi.clone()) {
            return Err(MarkovError::CycleDetected);
        }
    }
}

/// Eigenvalue of the reduced operator by the invariant-measure formula:
/// `max over (pi, final class C) of <m_C, r^{sigma pi}>`. Full enumeration of
/// the counter-policies, capped.
pub fn lemma_eigenvalue(
    spec: &GameSpec,
    r: &PaymentVector,
    sigma: &Policy,
    cap: u128,
) -> Result<f64, MarkovError> {
    let count = spec.counter_policy_count(sigma);
    if count > cap {
        return Err(MarkovError::EnumerationCapExceeded {
            what: "counter-policies",
            cap,
        });
    }
    let mut best = f64::NEG_INFINITY;
    for pi in spec.counter_policies(sigma) {
        let (pay, p) = spec.matrix_of(r, sigma, &pi);
        let cs = chain_structure(&p)?;
        for class in &cs.final_classes {
            let m = invariant_measure(&p, class)?;
            let v: f64 = class
                .iter()
                .zip(&m.weights)
                .map(|(&i, &w)| w * pay[i])
                .sum();
            best = best.max(v);
        }
    }
    Ok(best)
}

/// Critical graph of the reduced operator at an eigenpair: union of the
/// final graphs over all support patterns of active (argmax) actions.
pub fn critical_graph(
    spec: &GameSpec,
    r: &PaymentVector,
    sigma: &Policy,
    pair: &EigenPair,
) -> Result<CriticalGraphReport, MarkovError> {
    let n = spec.n_states();
    let branches = branch_table(spec, r, sigma);
    let u = &pair.bias;

    let mut active: Vec<Vec<usize>> = Vec::with_capacity(n);
    for row in branches.iter() {
        let ws: Vec<f64> = row.iter().map(|(pay, p)| pay + dot(p, u)).collect();
        let best = ws.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        active.push(
            ws.iter()
                .enumerate()
                .filter(|(_, &w)| w >= best - TIE_TOL)
                .map(|(b, _)| b)
                .collect(),
        );
    }

    // Patterns: one nonempty subset of active actions per state.
    let pattern_count: u128 = active
        .iter()
        .fold(1u128, |acc, a| acc.saturating_mul((1u128 << a.len()) - 1));
    let mut arcs: std::collections::BTreeSet<(usize, usize)> = Default::default();
    let mut lower_bound = false;

    let mut process_pattern = |subset_per_state: &[Vec<usize>]| {
        // union-support adjacency of the pattern
        let adj: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                let mut mask = 0u64;
                for &b in &subset_per_state[i] {
                    mask |= spec
                        .entry(spec.entry_index(i, sigma.choice[i], b))
                        .support;
                }
                (0..n).filter(|&j| mask & (1 << j) != 0).collect()
            })
            .collect();
        let (finals, _) = final_classes(&adj);
        for class in &finals {
            for &i in class {
                for &j in &adj[i] {
                    arcs.insert((i, j));
                }
            }
        }
    };

    if pattern_count <= PATTERN_CAP {
        // mixed-radix over nonempty subsets (encoded 1..2^k - 1 per state)
        let radices: Vec<usize> = active.iter().map(|a| (1usize << a.len()) - 1).collect();
        for digits in crate::game::MixedRadix::new(radices) {
            let subset: Vec<Vec<usize>> = digits
                .iter()
                .enumerate()
                .map(|(i, &d)| {
                    let code = d + 1;
                    active[i]
                        .iter()
                        .enumerate()
                        .filter(|(k, _)| code & (1 << k) != 0)
                        .map(|(_, &b)| b)
                        .collect()
                })
                .collect();
            process_pattern(&subset);
        }
    } else {
        // Degrade to the maximal pattern plus all single-action patterns,
        // still capped; the class list is then only a lower bound.
        lower_bound = true;
        process_pattern(&active.clone());
        let radices: Vec<usize> = active.iter().map(|a| a.len()).collect();
        let mut budget = PATTERN_CAP;
        for digits in crate::game::MixedRadix::new(radices) {
            if budget == 0 {
                break;
            }
            budget -= 1;
            let subset: Vec<Vec<usize>> = digits
                .iter()
                .enumerate()
                .map(|(i, &d)| vec![active[i][d]])
                .collect();
            process_pattern(&subset);
        }
    }

    let mut nodes: Vec<usize> = arcs.iter().flat_map(|&(i, j)| [i, j]).collect();
    nodes.sort_unstable();
    nodes.dedup();
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in &arcs {
        adj[i].push(j);
    }
    let mut classes: Vec<Vec<usize>> = tarjan_scc(&adj)
        .into_iter()
        .filter(|c| c.iter().any(|&v| nodes.binary_search(&v).is_ok()))
        .collect();
    classes.sort_by_key(|c| c[0]);

    if nodes.is_empty() {
        return Err(MarkovError::NoEigenpair);
    }

    Ok(CriticalGraphReport {
        active_supports: active,
        critical_arcs: arcs.into_iter().collect(),
        critical_nodes: nodes,
        critical_classes: classes,
        classes_lower_bound: lower_bound,
    })
}

/// One critical class means the bias of the reduced operator is unique up to
/// an additive constant (the operators here are piecewise affine).
pub fn one_player_uniqueness(report: &CriticalGraphReport) -> bool {
    report.critical_classes.len() == 1 && !report.classes_lower_bound
}
