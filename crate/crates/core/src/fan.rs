//! Exploration of the payment parameter space: uniqueness classification over
//! affine slices by dense sampling, and exact 2-D cell boundary candidates
//! for deterministic games via circuit-mean line arrangements.

use serde::Serialize;

use crate::error::FanError;
use crate::game::{GameSpec, PaymentVector, Policy};
use crate::hoffman_karp::{
    certify_uniqueness, hoffman_karp, CertifyOptions, SolveOptions, SolveOutcome,
    UniquenessVerdict,
};
use crate::structural::{structural_verdict, StructuralVerdict, DEFAULT_STATE_CAP};

/// Cap on elementary circuit enumeration for exact 2-D cells.
pub const CIRCUIT_CAP: usize = 100_000;

/// An affine slice of the payment space.
#[derive(Debug, Clone)]
pub struct AffineSlice {
    pub base: PaymentVector,
    pub directions: Vec<PaymentVector>,
    /// Per-direction sampling interval.
    pub bounds: Vec<(f64, f64)>,
    /// Samples per axis.
    pub resolution: usize,
}

impl AffineSlice {
    pub fn validate(&self, spec: &GameSpec) -> Result<(), FanError> {
        let q = spec.num_entries();
        if self.base.len() != q {
            return Err(FanError::BadSlice(format!(
                "base payment has {} entries, game has {q}",
                self.base.len()
            )));
        }
        if self.directions.is_empty() {
            return Err(FanError::DependentDirections);
        }
        for d in &self.directions {
            if d.len() != q {
                return Err(FanError::BadSlice(format!(
                    "direction has {} entries, game has {q}",
                    d.len()
                )));
            }
        }
        if self.bounds.len() != self.directions.len() {
            return Err(FanError::BadSlice(
                "one bounding interval per direction required".into(),
            ));
        }
        if self.resolution < 2 {
            return Err(FanError::BadSlice("resolution must be at least 2".into()));
        }
        // Gram-Schmidt rank check.
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for d in &self.directions {
            let mut v: Vec<f64> = d.values().to_vec();
            for b in &basis {
                let proj: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= proj * y;
                }
            }
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-9 {
                return Err(FanError::DependentDirections);
            }
            for x in &mut v {
                *x /= norm;
            }
            basis.push(v);
        }
        Ok(())
    }

    pub fn payment_at(&self, coords: &[f64]) -> PaymentVector {
        let mut r = self.base.clone();
        for (t, d) in coords.iter().zip(&self.directions) {
            r = r.axpy(*t, d);
        }
        r
    }

    /// Axis values of the sampling grid for one direction.
    pub fn axis(&self, dim: usize) -> Vec<f64> {
        let (lo, hi) = self.bounds[dim];
        (0..self.resolution)
            .map(|k| lo + (hi - lo) * k as f64 / (self.resolution - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SampleVerdict {
    Unique,
    NotUnique,
    Inconclusive,
    Failed,
}

/// One grid sample.
#[derive(Debug, Clone, Serialize)]
pub struct SampleRecord {
    pub coords: Vec<f64>,
    pub lambda: Option<f64>,
    pub verdict: SampleVerdict,
    pub bias: Option<Vec<f64>>,
    /// Terminal MIN policy; the discrete fingerprint used for boundary
    /// detection.
    pub policy: Option<Vec<usize>>,
    pub failure: Option<String>,
}

/// Boundary segment between two adjacent samples with different fingerprints.
#[derive(Debug, Clone, Serialize)]
pub struct BoundarySegment {
    pub from: Vec<f64>,
    pub to: Vec<f64>,
}

/// Classification of a sampled slice.
#[derive(Debug, Clone, Serialize)]
pub struct CellMap {
    pub dims: Vec<usize>,
    pub samples: Vec<SampleRecord>,
    pub boundaries: Vec<BoundarySegment>,
    pub tolerance: f64,
}

impl CellMap {
    /// One row per sample: coords, lambda, verdict, bias entries.
    pub fn to_csv(&self) -> String {
        let d = self.dims.len();
        let n = self
            .samples
            .iter()
            .filter_map(|s| s.bias.as_ref().map(|b| b.len()))
            .next()
            .unwrap_or(0);
        let mut out = String::new();
        for k in 0..d {
            out.push_str(&format!("coord{k},"));
        }
        out.push_str("lambda,verdict");
        for k in 0..n {
            out.push_str(&format!(",bias{k}"));
        }
        out.push('\n');
        for s in &self.samples {
            for c in &s.coords {
                out.push_str(&format!("{c},"));
            }
            match s.lambda {
                Some(l) => out.push_str(&format!("{l}")),
                None => out.push_str("nan"),
            }
            out.push_str(match s.verdict {
                SampleVerdict::Unique => ",UNIQUE",
                SampleVerdict::NotUnique => ",NOT_UNIQUE",
                SampleVerdict::Inconclusive => ",INCONCLUSIVE",
                SampleVerdict::Failed => ",FAILED",
            });
            for k in 0..n {
                match &s.bias {
                    Some(b) => out.push_str(&format!(",{}", b[k])),
                    None => out.push_str(",nan"),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Classify every grid point of the slice by solving and certifying; solver
/// failures are recorded per sample and do not abort the sweep.
pub fn explore_slice(spec: &GameSpec, slice: &AffineSlice) -> Result<CellMap, FanError> {
    slice.validate(spec)?;
    let report = structural_verdict(spec, DEFAULT_STATE_CAP)?;
    if report.verdict != StructuralVerdict::SolvableForAllPayments {
        return Err(FanError::NotSolvable);
    }

    let d = slice.directions.len();
    let axes: Vec<Vec<f64>> = (0..d).map(|k| slice.axis(k)).collect();
    let dims: Vec<usize> = vec![slice.resolution; d];
    let total: usize = dims.iter().product();
    let mut samples = Vec::with_capacity(total);

    let mut idx = vec![0usize; d];
    for _ in 0..total {
        let coords: Vec<f64> = idx.iter().enumerate().map(|(k, &i)| axes[k][i]).collect();
        let r = slice.payment_at(&coords);
        let record = match hoffman_karp(spec, &r, &Policy::first(spec), SolveOptions::default()) {
            Ok(SolveOutcome::Eigen(pair, trace)) => {
                let policy = trace.steps.last().map(|s| s.sigma.choice.clone());
                match certify_uniqueness(spec, &r, &pair, CertifyOptions::default()) {
                    Ok(cert) => SampleRecord {
                        coords,
                        lambda: Some(pair.lambda),
                        verdict: match cert.verdict {
                            UniquenessVerdict::Unique => SampleVerdict::Unique,
                            UniquenessVerdict::NotUnique => SampleVerdict::NotUnique,
                            UniquenessVerdict::Inconclusive => SampleVerdict::Inconclusive,
                        },
                        bias: Some(pair.bias),
                        policy,
                        failure: None,
                    },
                    Err(e) => SampleRecord {
                        coords,
                        lambda: Some(pair.lambda),
                        verdict: SampleVerdict::Failed,
                        bias: Some(pair.bias),
                        policy,
                        failure: Some(e.to_string()),
                    },
                }
            }
            Ok(SolveOutcome::NotWellPosed { gain, .. }) => SampleRecord {
                coords,
                lambda: None,
                verdict: SampleVerdict::Failed,
                bias: None,
                policy: None,
                failure: Some(format!("not well posed, gain {gain:?}")),
            },
            Err(e) => SampleRecord {
                coords,
                lambda: None,
                verdict: SampleVerdict::Failed,
                bias: None,
                policy: None,
                failure: Some(e.to_string()),
            },
        };
        samples.push(record);
        // advance the grid index (row-major, last dim fastest)
        for k in (0..d).rev() {
            idx[k] += 1;
            if idx[k] < dims[k] {
                break;
            }
            idx[k] = 0;
        }
    }

    // Boundary segments between axis-adjacent samples with different
    // discrete fingerprints (verdict or terminal policy).
    let mut boundaries = Vec::new();
    let strides: Vec<usize> = {
        let mut s = vec![1usize; d];
        for k in (0..d.saturating_sub(1)).rev() {
            s[k] = s[k + 1] * dims[k + 1];
        }
        s
    };
    for (flat, s) in samples.iter().enumerate() {
        for k in 0..d {
            let i_k = flat / strides[k] % dims[k];
            if i_k + 1 >= dims[k] {
                continue;
            }
            let neighbor = &samples[flat + strides[k]];
            let differs = s.verdict != neighbor.verdict || s.policy != neighbor.policy;
            if differs {
                boundaries.push(BoundarySegment {
                    from: s.coords.clone(),
                    to: neighbor.coords.clone(),
                });
            }
        }
    }

    Ok(CellMap {
        dims,
        samples,
        boundaries,
        tolerance: crate::markov::TIE_TOL,
    })
}

/// A line `a * t1 + b * t2 = c` in slice coordinates.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Line {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Circuit mean as an affine function of 2-D slice coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
struct AffineMean {
    c0: f64,
    c1: f64,
    c2: f64,
}

/// Exact boundary candidates for a deterministic game over a 2-D slice: for
/// each MIN policy, every elementary circuit of the precedence multigraph
/// has an affine mean in the slice coordinates; the pairwise equality lines
/// between circuit means of the same policy form a superset of the cell
/// boundaries of the fan restricted to the slice.
pub fn exact_deterministic_cells_2d(
    spec: &GameSpec,
    slice: &AffineSlice,
) -> Result<Vec<Line>, FanError> {
    slice.validate(spec)?;
    if slice.directions.len() != 2 {
        return Err(FanError::BadSlice("exact cells require a 2-D slice".into()));
    }
    if !spec.is_deterministic() {
        return Err(FanError::MaxPlus(
            crate::error::MaxPlusError::NotDeterministic {
                state: 0,
                min_action: 0,
                max_action: 0,
                support: 0,
            },
        ));
    }

    let n = spec.n_states();
    let mut lines: Vec<Line> = Vec::new();
    let mut push_line = |l: Line| {
        const TOL: f64 = 1e-9;
        if !lines
            .iter()
            .any(|e| (e.a - l.a).abs() < TOL && (e.b - l.b).abs() < TOL && (e.c - l.c).abs() < TOL)
        {
            lines.push(l);
        }
    };

    // Circuit means pooled across all MIN policies: the eigenvalue is the
    // min over policies of the max circuit mean, so every boundary of the
    // fan restricted to the slice lies on an equality line of two means.
    let mut means: Vec<AffineMean> = Vec::new();
    let mut count = 0usize;
    for sigma in spec.policies() {
        // Parallel edges (i -> j, entry e) of the precedence multigraph.
        let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (i, out) in edges.iter_mut().enumerate() {
            let a = sigma.choice[i];
            for b in 0..spec.max_action_count(i, a) {
                let e = spec.entry_index(i, a, b);
                let j = spec.entry(e).support.trailing_zeros() as usize;
                out.push((j, e));
            }
        }
        // Elementary circuits with the smallest node as anchor, expanded over
        // parallel-edge choices.
        for start in 0..n {
            let mut path_nodes = vec![start];
            let mut path_entries: Vec<usize> = Vec::new();
            let mut on_path = vec![false; n];
            on_path[start] = true;
            dfs_circuits(
                &edges,
                start,
                start,
                &mut path_nodes,
                &mut path_entries,
                &mut on_path,
                &mut |entries: &[usize]| -> Result<(), FanError> {
                    count += 1;
                    if count > CIRCUIT_CAP {
                        return Err(FanError::CircuitCapExceeded { cap: CIRCUIT_CAP });
                    }
                    let len = entries.len() as f64;
                    let mut m = AffineMean {
                        c0: 0.0,
                        c1: 0.0,
                        c2: 0.0,
                    };
                    for &e in entries {
                        m.c0 += slice.base.values()[e];
                        m.c1 += slice.directions[0].values()[e];
                        m.c2 += slice.directions[1].values()[e];
                    }
                    m.c0 /= len;
                    m.c1 /= len;
                    m.c2 /= len;
                    // circuits recur across policies; keep one copy per mean
                    const TOL: f64 = 1e-12;
                    if !means.iter().any(|e| {
                        (e.c0 - m.c0).abs() < TOL
                            && (e.c1 - m.c1).abs() < TOL
                            && (e.c2 - m.c2).abs() < TOL
                    }) {
                        means.push(m);
                    }
                    Ok(())
                },
            )?;
        }
    }
    for (x, ma) in means.iter().enumerate() {
        for mb in means.iter().skip(x + 1) {
            let (da, db, dc) = (ma.c1 - mb.c1, ma.c2 - mb.c2, mb.c0 - ma.c0);
            let norm = (da * da + db * db).sqrt();
            if norm < 1e-12 {
                continue; // parallel functionals, no boundary line
            }
            let sign = if da < -1e-12 || (da.abs() <= 1e-12 && db < 0.0) {
                -1.0
            } else {
                1.0
            };
            push_line(Line {
                a: sign * da / norm,
                b: sign * db / norm,
                c: sign * dc / norm,
            });
        }
    }
    Ok(lines)
}

/// DFS over elementary circuits whose smallest node is `start`, branching
/// over parallel edges; calls `emit` with the entry list of each circuit.
fn dfs_circuits(
    edges: &[Vec<(usize, usize)>],
    start: usize,
    current: usize,
    path_nodes: &mut Vec<usize>,
    path_entries: &mut Vec<usize>,
    on_path: &mut Vec<bool>,
    emit: &mut dyn FnMut(&[usize]) -> Result<(), FanError>,
) -> Result<(), FanError> {
    for &(next, e) in &edges[current] {
        if next == start {
            path_entries.push(e);
            emit(path_entries)?;
            path_entries.pop();
        } else if next > start && !on_path[next] {
            on_path[next] = true;
            path_nodes.push(next);
            path_entries.push(e);
            dfs_circuits(edges, start, next, path_nodes, path_entries, on_path, emit)?;
            path_entries.pop();
            path_nodes.pop();
            on_path[next] = false;
        }
    }
    Ok(())
}
