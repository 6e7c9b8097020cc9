//! Max-plus (tropical) linear algebra for the deterministic case.
//!
//! A matrix over `R u {-inf}` is stored with `Option<W>` entries (`None` is
//! the -inf sentinel; addition saturates by construction, so no large
//! negative float can create spurious circuits). The algorithms are generic
//! over the scalar: `f64` for production, `Rational64` (feature
//! `exact-rational`) for the exact oracle mode used in tests.

use serde::{Deserialize, Serialize};

use crate::error::MaxPlusError;
use crate::game::{GameSpec, PaymentVector, Policy};
use crate::graph::tarjan_scc;

/// Absolute tolerance for "circuit mean equals rho" on floats.
pub const CRITICAL_TOL: f64 = 1e-9;

/// Scalar usable as a max-plus weight.
pub trait Weight: Clone + PartialOrd + std::fmt::Debug {
    fn zero() -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    /// `total / len`, the mean of a circuit of the given length.
    fn mean_of(total: &Self, len: usize) -> Self;
    /// Equality within the weight's own notion of tolerance.
    fn close_to(&self, other: &Self, tol: f64) -> bool;
}

impl Weight for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mean_of(total: &Self, len: usize) -> Self {
        total / len as f64
    }
    fn close_to(&self, other: &Self, tol: f64) -> bool {
        (self - other).abs() <= tol
    }
}

#[cfg(feature = "exact-rational")]
impl Weight for num_rational::Rational64 {
    fn zero() -> Self {
        num_rational::Rational64::new(0, 1)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mean_of(total: &Self, len: usize) -> Self {
        total / num_rational::Rational64::new(len as i64, 1)
    }
    fn close_to(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }
}

/// Tropical value: `None` is -inf.
pub type Trop<W> = Option<W>;

fn trop_add<W: Weight>(a: &Trop<W>, b: &Trop<W>) -> Trop<W> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.add(y)),
        _ => None,
    }
}

fn trop_max<W: Weight>(a: Trop<W>, b: Trop<W>) -> Trop<W> {
    match (a, b) {
        (Some(x), Some(y)) => {
            if x >= y {
                Some(x)
            } else {
                Some(y)
            }
        }
        (Some(x), None) => Some(x),
        (None, y) => y,
    }
}

/// Square matrix over the max-plus semiring. No row is identically -inf.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxPlusMatrix<W = f64> {
    n: usize,
    rows: Vec<Vec<Trop<W>>>,
}

/// Critical-circuit analysis of a max-plus matrix.
#[derive(Debug, Clone)]
pub struct CircuitMeanReport<W = f64> {
    pub rho: W,
    pub critical_arcs: Vec<(usize, usize)>,
    pub critical_nodes: Vec<usize>,
    /// Strongly connected components of the critical graph, sorted by
    /// smallest node.
    pub critical_classes: Vec<Vec<usize>>,
}

impl<W: Weight> MaxPlusMatrix<W> {
    pub fn new(rows: Vec<Vec<Trop<W>>>) -> Result<Self, MaxPlusError> {
        let n = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(MaxPlusError::NotSquare);
            }
            if row.iter().all(|e| e.is_none()) {
                return Err(MaxPlusError::EmptyRow(i));
            }
        }
        Ok(MaxPlusMatrix { n, rows })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Trop<W> {
        &self.rows[i][j]
    }

    pub fn rows(&self) -> &[Vec<Trop<W>>] {
        &self.rows
    }

    /// Max-plus matrix-vector product `(M (x) u)_i = max_j (M_ij + u_j)`.
    pub fn apply(&self, u: &[Trop<W>]) -> Vec<Trop<W>> {
        (0..self.n)
            .map(|i| {
                (0..self.n).fold(None, |acc, j| {
                    trop_max(acc, trop_add(&self.rows[i][j], &u[j]))
                })
            })
            .collect()
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, e)| e.is_some())
                    .map(|(j, _)| j)
                    .collect()
            })
            .collect()
    }

    /// Maximal circuit mean `rho(M)`, by Karp's dynamic program run inside
    /// each strongly connected component of the precedence graph.
    pub fn maximal_circuit_mean(&self) -> Result<W, MaxPlusError> {
        let adj = self.adjacency();
        let comps = tarjan_scc(&adj);
        let mut best: Option<W> = None;
        for comp in &comps {
            let has_arc = comp.len() > 1
                || self.rows[comp[0]][comp[0]].is_some();
            if !has_arc {
                continue;
            }
            let rho = self.karp_in_component(comp);
            best = match best {
                None => Some(rho),
                Some(b) => Some(if rho > b { rho } else { b }),
            };
        }
        best.ok_or(MaxPlusError::NoCircuit)
    }

    /// Karp's algorithm on the subgraph induced by a strongly connected
    /// component: `rho = max_v min_k mean(F_m(v) - F_k(v), m - k)` where
    /// `F_k(v)` is the max weight of a length-k walk from a fixed source.
    fn karp_in_component(&self, comp: &[usize]) -> W {
        let m = comp.len();
        let local: std::collections::HashMap<usize, usize> = comp
            .iter()
            .enumerate()
            .map(|(l, &g)| (g, l))
            .collect();
        // f[k][v], walks of length k from source comp[0].
        let mut f: Vec<Vec<Trop<W>>> = vec![vec![None; m]; m + 1];
        f[0][0] = Some(W::zero());
        for k in 1..=m {
            for (lu, &gu) in comp.iter().enumerate() {
                if f[k - 1][lu].is_none() {
                    continue;
                }
                let base = f[k - 1][lu].clone();
                for (j, w) in self.rows[gu].iter().enumerate() {
                    if w.is_none() {
                        continue;
                    }
                    if let Some(&lv) = local.get(&j) {
                        let cand = trop_add(&base, w);
                        f[k][lv] = trop_max(f[k][lv].clone(), cand);
                    }
                }
            }
        }
        let mut rho: Option<W> = None;
        for lv in 0..m {
            let fm = match &f[m][lv] {
                Some(x) => x.clone(),
                None => continue,
            };
            let mut inner: Option<W> = None;
            for (k, fk_row) in f.iter().enumerate().take(m) {
                if let Some(fk) = &fk_row[lv] {
                    let mean = W::mean_of(&fm.sub(fk), m - k);
                    inner = match inner {
                        None => Some(mean),
                        Some(cur) => Some(if mean < cur { mean } else { cur }),
                    };
                }
            }
            if let Some(x) = inner {
                rho = match rho {
                    None => Some(x),
                    Some(cur) => Some(if x > cur { x } else { cur }),
                };
            }
        }
        rho.expect("strongly connected component with an arc has a circuit")
    }

    /// Max-plus metric closure `A+ = A (+) A^2 (+) ... (+) A^n` of the
    /// rho-normalized matrix (entries `M_ij - rho`). Requires rho so that no
    /// circuit has positive normalized weight.
    fn normalized_closure(&self, rho: &W) -> Vec<Vec<Trop<W>>> {
        let mut c: Vec<Vec<Trop<W>>> = self
            .rows
            .iter()
            .map(|row| row.iter().map(|e| e.as_ref().map(|w| w.sub(rho))).collect())
            .collect();
        for k in 0..self.n {
            for i in 0..self.n {
                if c[i][k].is_none() {
                    continue;
                }
                for j in 0..self.n {
                    let via = trop_add(&c[i][k], &c[k][j]);
                    c[i][j] = trop_max(c[i][j].clone(), via);
                }
            }
        }
        c
    }

    /// Critical arcs, nodes, and classes: arc `(i, j)` is critical iff
    /// `(M_ij - rho) + closure_{ji} = 0`, i.e. it lies on a circuit of mean
    /// exactly rho.
    pub fn critical_analysis(&self) -> Result<CircuitMeanReport<W>, MaxPlusError> {
        let rho = self.maximal_circuit_mean()?;
        let closure = self.normalized_closure(&rho);
        let zero = W::zero();
        let mut arcs = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            for (j, entry) in row.iter().enumerate() {
                let w = match entry {
                    Some(w) => w.sub(&rho),
                    None => continue,
                };
                // For a self-loop the return path is empty (weight 0); any
                // nonempty return walk has weight <= 0 so it cannot help.
                let total = if i == j {
                    w
                } else {
                    match &closure[j][i] {
                        Some(back) => w.add(back),
                        None => continue,
                    }
                };
                if total.close_to(&zero, CRITICAL_TOL) {
                    arcs.push((i, j));
                }
            }
        }
        let mut nodes: Vec<usize> = arcs
            .iter()
            .flat_map(|&(i, j)| [i, j])
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        // Classes: SCCs of the critical subgraph.
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j) in &arcs {
            adj[i].push(j);
        }
        let mut classes: Vec<Vec<usize>> = tarjan_scc(&adj)
            .into_iter()
            .filter(|comp| {
                comp.iter().any(|&v| nodes.binary_search(&v).is_ok())
            })
            .collect();
        classes.sort_by_key(|c| c[0]);
        Ok(CircuitMeanReport {
            rho,
            critical_arcs: arcs,
            critical_nodes: nodes,
            critical_classes: classes,
        })
    }

    /// One tropical eigenvector per critical class: the column of the metric
    /// closure of the rho-normalized matrix at the class representative
    /// (smallest node). Each satisfies `M (x) u = rho 1 + u`.
    pub fn tropical_eigenvectors(&self) -> Result<Vec<Vec<Trop<W>>>, MaxPlusError> {
        let report = self.critical_analysis()?;
        let closure = self.normalized_closure(&report.rho);
        let mut out = Vec::with_capacity(report.critical_classes.len());
        for class in &report.critical_classes {
            let c = class[0];
            let u: Vec<Trop<W>> = (0..self.n)
                .map(|i| {
                    if i == c {
                        Some(W::zero())
                    } else {
                        closure[i][c].clone()
                    }
                })
                .collect();
            out.push(u);
        }
        Ok(out)
    }

    /// True iff `M (x) u = lambda 1 + u` within `CRITICAL_TOL` for a finite
    /// `u`; by the max-plus spectral theorem this forces `lambda = rho(M)`.
    pub fn eigenvalue_is_rho(&self, lambda: &W, u: &[W]) -> bool {
        let tu: Vec<Trop<W>> = u.iter().cloned().map(Some).collect();
        let mu = self.apply(&tu);
        mu.iter().zip(u).all(|(m, ui)| match m {
            Some(m) => m.close_to(&lambda.add(ui), CRITICAL_TOL),
            None => false,
        })
    }
}

impl MaxPlusMatrix<f64> {
    /// JSON form with `"-inf"` sentinels.
    pub fn to_json_rows(&self) -> Vec<Vec<serde_json::Value>> {
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|e| match e {
                        Some(w) => serde_json::json!(w),
                        None => serde_json::json!("-inf"),
                    })
                    .collect()
            })
            .collect()
    }

    pub fn from_json_rows(rows: &[Vec<serde_json::Value>]) -> Result<Self, MaxPlusError> {
        let parsed: Vec<Vec<Trop<f64>>> = rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|v| match v {
                        serde_json::Value::String(s) if s == "-inf" => None,
                        other => other.as_f64().map(Some).unwrap_or(None),
                    })
                    .collect()
            })
            .collect();
        MaxPlusMatrix::new(parsed)
    }
}

/// Serializable report with `-inf`-free payload (rho and arcs only).
#[derive(Debug, Serialize, Deserialize)]
pub struct CircuitMeanReportJson {
    pub rho: f64,
    pub critical_arcs: Vec<(usize, usize)>,
    pub critical_nodes: Vec<usize>,
    pub critical_classes: Vec<Vec<usize>>,
    pub tolerance: f64,
}

impl CircuitMeanReport<f64> {
    pub fn to_json(&self) -> CircuitMeanReportJson {
        CircuitMeanReportJson {
            rho: self.rho,
            critical_arcs: self.critical_arcs.clone(),
            critical_nodes: self.critical_nodes.clone(),
            critical_classes: self.critical_classes.clone(),
            tolerance: CRITICAL_TOL,
        }
    }
}

/// Max-plus matrix of the one-player operator of a deterministic game under
/// a MIN policy: entry `(i, j)` is the best payment among MAX branches moving
/// `i -> j`, `-inf` when no branch does.
pub fn deterministic_matrix(
    spec: &GameSpec,
    r: &PaymentVector,
    sigma: &Policy,
) -> Result<MaxPlusMatrix<f64>, MaxPlusError> {
    let n = spec.n_states();
    let mut rows: Vec<Vec<Trop<f64>>> = vec![vec![None; n]; n];
    for (i, row) in rows.iter_mut().enumerate() {
        let a = sigma.choice[i];
        for b in 0..spec.max_action_count(i, a) {
            let e = spec.entry_index(i, a, b);
            let entry = spec.entry(e);
            if entry.support.count_ones() != 1 {
                return Err(MaxPlusError::NotDeterministic {
                    state: i,
                    min_action: a,
                    max_action: b,
                    support: entry.support.count_ones() as usize,
                });
            }
            let j = entry.support.trailing_zeros() as usize;
            let w = r.values()[e];
            row[j] = trop_max(row[j], Some(w));
        }
    }
    MaxPlusMatrix::new(rows)
}
