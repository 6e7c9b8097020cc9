//! Two-player policy iteration and the bias uniqueness certificate.
//!
//! The outer loop alternates a one-player solve for the current MIN policy
//! with a MIN improvement step that keeps the incumbent whenever it attains
//! the min. The uniqueness certificate sweeps every MIN policy whose
//! one-player eigenvalue matches, checks its critical classes, and compares
//! the resulting bias lines.

use std::time::Duration;

use serde::Serialize;

use crate::error::SolveError;
use crate::game::{GameSpec, PaymentVector, Policy, StateVector};
use crate::markov::{critical_graph, howard_solve, EigenPair, HowardOutcome, TIE_TOL};

/// Default cap on MIN-policy enumeration in the certificate.
pub const DEFAULT_SIGMA_CAP: u128 = 1_000_000;

/// Two biases are on the same line when their difference is constant within
/// this tolerance (max - min of the difference vector).
pub const LINE_TOL: f64 = 1e-8;

/// One outer step of the iteration.
#[derive(Debug, Clone, Serialize)]
pub struct IterationStep {
    pub sigma: Policy,
    pub lambda: f64,
    pub bias: StateVector,
    /// One-player residual of the step's eigenpair.
    pub residual: f64,
    #[serde(skip)]
    pub elapsed: Duration,
}

/// Trace of the outer iteration. The eigenvalues are nonincreasing along the
/// trace; the terminal step repeats its policy.
#[derive(Debug, Clone, Serialize)]
pub struct IterationTrace {
    pub steps: Vec<IterationStep>,
    pub terminal: bool,
    pub failure: Option<String>,
}

/// Result of the two-player iteration.
#[derive(Debug, Clone)]
pub enum SolveOutcome {
    Eigen(EigenPair, IterationTrace),
    /// Some encountered MIN policy has a one-player operator without an
    /// eigenvalue; the state-dependent gain is the diagnosis.
    NotWellPosed {
        sigma: Policy,
        gain: StateVector,
        trace: IterationTrace,
    },
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub tol: f64,
    /// Bound on outer steps; `None` means the number of MIN policies + 1.
    pub max_outer: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: TIE_TOL,
            max_outer: None,
        }
    }
}

/// Residual of the full eigen-equation: `||T_r(u) - lambda 1 - u||_inf`.
pub fn residual_check(spec: &GameSpec, r: &PaymentVector, lambda: f64, u: &[f64]) -> f64 {
    spec.shapley_apply(r, u)
        .iter()
        .zip(u)
        .map(|(t, v)| (t - lambda - v).abs())
        .fold(0.0, f64::max)
}

/// Policy iteration from an arbitrary initial MIN policy.
pub fn hoffman_karp(
    spec: &GameSpec,
    r: &PaymentVector,
    sigma0: &Policy,
    opts: SolveOptions,
) -> Result<SolveOutcome, SolveError> {
    let bound = opts.max_outer.unwrap_or_else(|| {
        usize::try_from(spec.policy_count().saturating_add(1)).unwrap_or(usize::MAX)
    });
    let mut sigma = sigma0.clone();
    let mut trace = IterationTrace {
        steps: Vec::new(),
        terminal: false,
        failure: None,
    };

    for _ in 0..bound {
        let t0 = std::time::Instant::now();
        let pair = match howard_solve(spec, r, &sigma)? {
            HowardOutcome::Eigen(p) => p,
            HowardOutcome::NotWellPosed { gain } => {
                trace.failure = Some("one-player operator has no eigenvalue".into());
                return Ok(SolveOutcome::NotWellPosed {
                    sigma,
                    gain,
                    trace,
                });
            }
        };
        trace.steps.push(IterationStep {
            sigma: sigma.clone(),
            lambda: pair.lambda,
            bias: pair.bias.clone(),
            residual: pair.residual,
            elapsed: t0.elapsed(),
        });

        // Improvement: keep the incumbent whenever it attains the min.
        let mut next = sigma.clone();
        let mut changed = false;
        for i in 0..spec.n_states() {
            let values = spec.min_action_values(r, &pair.bias, i);
            let best = values.iter().cloned().fold(f64::INFINITY, f64::min);
            if values[sigma.choice[i]] > best + opts.tol {
                next.choice[i] = values
                    .iter()
                    .position(|&v| v <= best + opts.tol)
                    .expect("argmin exists");
                changed = true;
            }
        }

        if !changed {
            trace.terminal = true;
            let lambda = pair.lambda;
            let residual = residual_check(spec, r, lambda, &pair.bias);
            let shift = pair.bias[0];
            let bias: StateVector = pair.bias.iter().map(|v| v - shift).collect();
            return Ok(SolveOutcome::Eigen(
                EigenPair {
                    lambda,
                    bias,
                    residual,
                    anchor: 0,
                },
                trace,
            ));
        }
        sigma = next;
    }

    Err(SolveError::MaxOuterIterationsExceeded { bound })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum UniquenessVerdict {
    Unique,
    NotUnique,
    Inconclusive,
}

/// Certificate for the uniqueness of the bias vector of `T_r` up to an
/// additive constant.
#[derive(Debug, Clone, Serialize)]
pub struct UniquenessCertificate {
    pub verdict: UniquenessVerdict,
    pub lambda: f64,
    /// Representative anchored biases, one per distinct line found.
    pub eigenvector_lines: Vec<StateVector>,
    /// Policies whose critical structure blocks the sweep (multiple critical
    /// classes, or a one-player solve failure).
    pub blocking_policies: Vec<Policy>,
    /// For `NotUnique`: two eigenvectors not differing by a constant.
    pub witnesses: Option<(StateVector, StateVector)>,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct CertifyOptions {
    pub tol: f64,
    pub sigma_cap: u128,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            tol: TIE_TOL,
            sigma_cap: DEFAULT_SIGMA_CAP,
        }
    }
}

fn same_line(a: &[f64], b: &[f64], tol: f64) -> bool {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let max = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = d.iter().cloned().fold(f64::INFINITY, f64::min);
    max - min <= tol
}

/// Sweep all MIN policies: every eigenvector of `T_r` is an eigenvector of
/// some reduced operator with matching eigenvalue, so UNIQUE requires every
/// such reduced operator to pin its bias to the one certified line. Two
/// distinct lines that both pass the full residual check give NOT_UNIQUE;
/// a reduced operator with several critical classes leaves the sweep
/// INCONCLUSIVE.
pub fn certify_uniqueness(
    spec: &GameSpec,
    r: &PaymentVector,
    pair: &EigenPair,
    opts: CertifyOptions,
) -> Result<UniquenessCertificate, SolveError> {
    if spec.policy_count() > opts.sigma_cap {
        return Err(SolveError::EnumerationCapExceeded {
            cap: opts.sigma_cap,
        });
    }
    let mut lines: Vec<StateVector> = Vec::new();
    let mut blocking: Vec<Policy> = Vec::new();

    for sigma in spec.policies() {
        let solved = match howard_solve(spec, r, &sigma) {
            Ok(HowardOutcome::Eigen(p)) => p,
            Ok(HowardOutcome::NotWellPosed { .. }) => continue,
            Err(_) => {
                // a degenerate one-player solve cannot be enumerated; the
                // sweep is inconclusive for this policy
                blocking.push(sigma);
                continue;
            }
        };
        if (solved.lambda - pair.lambda).abs() > opts.tol {
            continue;
        }
        let report = match critical_graph(spec, r, &sigma, &solved) {
            Ok(rep) => rep,
            Err(_) => {
                blocking.push(sigma);
                continue;
            }
        };
        if report.critical_classes.len() != 1 || report.classes_lower_bound {
            blocking.push(sigma);
            continue;
        }
        if residual_check(spec, r, pair.lambda, &solved.bias) > opts.tol {
            continue; // bias of the reduced operator is not a bias of T
        }
        if !lines.iter().any(|l| same_line(l, &solved.bias, LINE_TOL)) {
            lines.push(solved.bias);
        }
    }

    let (verdict, witnesses) = if lines.len() >= 2 {
        (
            UniquenessVerdict::NotUnique,
            Some((lines[0].clone(), lines[1].clone())),
        )
    } else if !blocking.is_empty() || lines.is_empty() {
        (UniquenessVerdict::Inconclusive, None)
    } else {
        (UniquenessVerdict::Unique, None)
    };

    Ok(UniquenessCertificate {
        verdict,
        lambda: pair.lambda,
        eigenvector_lines: lines,
        blocking_policies: blocking,
        witnesses,
        tolerance: opts.tol,
    })
}
