//! Shared oracles and seeded generators for the integration suites.
//!
//! Everything here is deliberately naive: full enumerations and fixed-point
//! definitions taken literally, to serve as independent checks on the
//! production algorithms.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mpg_core::game::{GameSpec, PaymentVector, RawEntry, RawGame};
use mpg_core::maxplus::{MaxPlusMatrix, Trop, Weight};
use mpg_core::structural::{in_f_minus, in_f_plus, StateSet};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random row-stochastic game: `n` states, 1..=`max_min` MIN actions per
/// state, 1..=`max_max` MAX actions per slot. Rows sum to 1 exactly (last
/// entry closes the sum).
pub fn random_game(rng: &mut ChaCha8Rng, n: usize, max_min: usize, max_max: usize) -> GameSpec {
    let states: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
    let mut entries = Vec::new();
    for i in 0..n {
        let amin = rng.gen_range(1..=max_min);
        for a in 0..amin {
            let bmax = rng.gen_range(1..=max_max);
            for b in 0..bmax {
                entries.push(RawEntry {
                    state: states[i].clone(),
                    min_action: format!("a{a}"),
                    max_action: format!("b{b}"),
                    payment: rng.gen_range(-5.0..5.0),
                    transition: random_row(rng, &states),
                });
            }
        }
    }
    GameSpec::validate(&RawGame { states, entries }).expect("generated game is valid")
}

fn random_row(
    rng: &mut ChaCha8Rng,
    states: &[String],
) -> std::collections::BTreeMap<String, f64> {
    let n = states.len();
    let k = rng.gen_range(1..=n);
    let mut support: Vec<usize> = (0..n).collect();
    for t in 0..k {
        let j = rng.gen_range(t..n);
        support.swap(t, j);
    }
    let support = &support[..k];
    let weights: Vec<f64> = (0..k).map(|_| rng.gen_range(1..=5) as f64).collect();
    let total: f64 = weights.iter().sum();
    let mut row = std::collections::BTreeMap::new();
    let mut acc = 0.0;
    for (t, &s) in support.iter().enumerate() {
        let p = if t + 1 == k {
            1.0 - acc
        } else {
            weights[t] / total
        };
        acc += p;
        row.insert(states[s].clone(), p);
    }
    row
}

/// Keeps drawing games until `keep` accepts one.
pub fn random_game_where(
    rng: &mut ChaCha8Rng,
    n: usize,
    max_min: usize,
    max_max: usize,
    mut keep: impl FnMut(&GameSpec) -> bool,
) -> GameSpec {
    loop {
        let spec = random_game(rng, n, max_min, max_max);
        if keep(&spec) {
            return spec;
        }
    }
}

pub fn random_payment(rng: &mut ChaCha8Rng, spec: &GameSpec) -> PaymentVector {
    PaymentVector::from_values(
        (0..spec.num_entries())
            .map(|_| rng.gen_range(-5.0..5.0))
            .collect(),
    )
}

/// Random max-plus matrix with small rational entries, in both float and
/// exact form. No row is all -inf, so every matrix has a circuit.
#[cfg(feature = "exact-rational")]
pub fn random_trop_matrix(
    rng: &mut ChaCha8Rng,
    n: usize,
    neg_inf_density: f64,
) -> (MaxPlusMatrix<f64>, MaxPlusMatrix<num_rational::Rational64>) {
    use num_rational::Rational64;
    let mut f_rows: Vec<Vec<Trop<f64>>> = Vec::with_capacity(n);
    let mut q_rows: Vec<Vec<Trop<Rational64>>> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut f_row = vec![None; n];
        let mut q_row = vec![None; n];
        for j in 0..n {
            if rng.gen_bool(neg_inf_density) {
                continue;
            }
            let num = rng.gen_range(-12i64..=12);
            let den = rng.gen_range(1i64..=4);
            f_row[j] = Some(num as f64 / den as f64);
            q_row[j] = Some(Rational64::new(num, den));
        }
        if f_row.iter().all(|e| e.is_none()) {
            let j = rng.gen_range(0..n);
            let num = rng.gen_range(-12i64..=12);
            f_row[j] = Some(num as f64);
            q_row[j] = Some(Rational64::new(num, 1));
        }
        f_rows.push(f_row);
        q_rows.push(q_row);
    }
    (
        MaxPlusMatrix::new(f_rows).unwrap(),
        MaxPlusMatrix::new(q_rows).unwrap(),
    )
}

/// Elementary circuits of the precedence graph: node lists in visit order,
/// anchored at their smallest node.
pub fn elementary_circuits<W: Weight>(m: &MaxPlusMatrix<W>) -> Vec<Vec<usize>> {
    let n = m.size();
    let mut out = Vec::new();
    for start in 0..n {
        let mut path = vec![start];
        let mut on_path = vec![false; n];
        on_path[start] = true;
        circuits_dfs(m, start, &mut path, &mut on_path, &mut out);
    }
    out
}

fn circuits_dfs<W: Weight>(
    m: &MaxPlusMatrix<W>,
    start: usize,
    path: &mut Vec<usize>,
    on_path: &mut Vec<bool>,
    out: &mut Vec<Vec<usize>>,
) {
    let current = *path.last().unwrap();
    for next in 0..m.size() {
        if m.get(current, next).is_none() {
            continue;
        }
        if next == start {
            out.push(path.clone());
        } else if next > start && !on_path[next] {
            on_path[next] = true;
            path.push(next);
            circuits_dfs(m, start, path, on_path, out);
            path.pop();
            on_path[next] = false;
        }
    }
}

/// Brute-force circuit analysis: the maximal mean over all elementary
/// circuits and the arcs/nodes lying on a mean-maximizing circuit.
pub struct CircuitOracle<W> {
    pub rho: W,
    pub critical_arcs: BTreeSet<(usize, usize)>,
    pub critical_nodes: BTreeSet<usize>,
}

pub fn circuit_oracle<W: Weight>(m: &MaxPlusMatrix<W>, tol: f64) -> Option<CircuitOracle<W>> {
    let circuits = elementary_circuits(m);
    let mean_of = |c: &[usize]| -> W {
        let mut total = W::zero();
        for t in 0..c.len() {
            let w = m.get(c[t], c[(t + 1) % c.len()]).clone().unwrap();
            total = total.add(&w);
        }
        W::mean_of(&total, c.len())
    };
    let mut rho: Option<W> = None;
    for c in &circuits {
        let mean = mean_of(c);
        rho = match rho {
            None => Some(mean),
            Some(r) => Some(if mean > r { mean } else { r }),
        };
    }
    let rho = rho?;
    let mut arcs = BTreeSet::new();
    let mut nodes = BTreeSet::new();
    for c in &circuits {
        if mean_of(c).close_to(&rho, tol) {
            for t in 0..c.len() {
                arcs.insert((c[t], c[(t + 1) % c.len()]));
                nodes.insert(c[t]);
            }
        }
    }
    Some(CircuitOracle {
        rho,
        critical_arcs: arcs,
        critical_nodes: nodes,
    })
}

fn full_mask(n: usize) -> StateSet {
    (1u64 << n) - 1
}

/// `Phi(I)` by the definition: union of all `J` in `F+` disjoint from `I`.
pub fn brute_phi(spec: &GameSpec, i_set: StateSet) -> StateSet {
    let full = full_mask(spec.n_states());
    let mut union = 0u64;
    for j in 0..=full {
        if j & i_set == 0 && in_f_plus(spec, j) {
            union |= j;
        }
    }
    union
}

/// `Phi*(J)` by the definition: union of all `I` in `F-` disjoint from `J`.
pub fn brute_phi_star(spec: &GameSpec, j_set: StateSet) -> StateSet {
    let full = full_mask(spec.n_states());
    let mut union = 0u64;
    for i in 0..=full {
        if i & j_set == 0 && in_f_minus(spec, i) {
            union |= i;
        }
    }
    union
}

/// Family membership by the invariant-face characterization of the recession
/// function on indicator vectors, independent of the bitmask abstractions.
pub fn face_in_f_minus(spec: &GameSpec, i_set: StateSet) -> bool {
    let ind = indicator(spec.n_states(), full_mask(spec.n_states()) & !i_set);
    spec.recession_apply(&ind)
        .iter()
        .zip(&ind)
        .all(|(t, x)| *t <= x + 1e-12)
}

pub fn face_in_f_plus(spec: &GameSpec, j_set: StateSet) -> bool {
    let ind = indicator(spec.n_states(), j_set);
    spec.recession_apply(&ind)
        .iter()
        .zip(&ind)
        .all(|(t, x)| *t >= x - 1e-12)
}

pub fn indicator(n: usize, set: StateSet) -> Vec<f64> {
    (0..n)
        .map(|i| if set & (1 << i) != 0 { 1.0 } else { 0.0 })
        .collect()
}

/// Invariant measure of a final class by power iteration of the lazy chain
/// `(P + I) / 2` (aperiodic, same invariant measure).
pub fn power_measure(p: &[Vec<f64>], class: &[usize]) -> Vec<f64> {
    let k = class.len();
    let mut m = vec![1.0 / k as f64; k];
    for _ in 0..200_000 {
        let mut next = vec![0.0; k];
        for (a, &i) in class.iter().enumerate() {
            for (b, &j) in class.iter().enumerate() {
                let lazy = 0.5 * p[i][j] + if i == j { 0.5 } else { 0.0 };
                next[b] += m[a] * lazy;
            }
        }
        let diff: f64 = next
            .iter()
            .zip(&m)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        m = next;
        if diff < 1e-14 {
            break;
        }
    }
    m
}
