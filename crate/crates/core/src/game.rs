//! Data model of a finite perfect-information zero-sum stochastic game and
//! evaluation of its Shapley operator.
//!
//! States and action identifiers are strings in the external JSON format and
//! are mapped to dense indices internally. Payment keys `(state, min action,
//! max action)` are flattened in lexicographic index order; a [`PaymentVector`]
//! is a plain vector over that key order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::GameError;

/// Tolerance for probability row validation.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// A real vector indexed by states.
pub type StateVector = Vec<f64>;

/// External JSON form of a game description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawGame {
    pub states: Vec<String>,
    pub entries: Vec<RawEntry>,
}

/// One `(state, min action, max action)` slot of the external format.
/// Missing transition keys mean probability zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawEntry {
    pub state: String,
    pub min_action: String,
    pub max_action: String,
    pub payment: f64,
    pub transition: BTreeMap<String, f64>,
}

/// One flattened `(state, min action, max action)` slot.
#[derive(Debug, Clone)]
pub struct Entry {
    pub state: usize,
    pub min_action: usize,
    pub max_action: usize,
    pub payment: f64,
    pub row: Vec<f64>,
    /// Bitmask of states with strictly positive probability.
    pub support: u64,
}

impl Entry {
    pub fn dot(&self, x: &[f64]) -> f64 {
        self.row.iter().zip(x).map(|(p, v)| p * v).sum()
    }
}

/// Validated game description. Immutable after construction; all operations
/// are pure functions of their inputs.
#[derive(Debug, Clone)]
pub struct GameSpec {
    states: Vec<String>,
    min_action_ids: Vec<Vec<String>>,
    max_action_ids: Vec<Vec<Vec<String>>>,
    /// slots[i][a][b] -> entry index (also the payment key index).
    slots: Vec<Vec<Vec<usize>>>,
    entries: Vec<Entry>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ValidateOptions {
    /// Renormalize rows whose sum deviates from 1 within the tolerance cutoff
    /// of 1e-6; rows are never silently renormalized by default.
    pub renormalize: bool,
}

impl GameSpec {
    pub fn validate(raw: &RawGame) -> Result<Self, GameError> {
        Self::validate_with(raw, ValidateOptions::default())
    }

    pub fn from_json(text: &str) -> Result<Self, GameError> {
        let raw: RawGame = serde_json::from_str(text)?;
        Self::validate(&raw)
    }

    pub fn validate_with(raw: &RawGame, opts: ValidateOptions) -> Result<Self, GameError> {
        let n = raw.states.len();
        let mut state_index: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, s) in raw.states.iter().enumerate() {
            state_index.insert(s.as_str(), i);
        }

        let mut min_action_ids: Vec<Vec<String>> = vec![Vec::new(); n];
        let mut max_action_ids: Vec<Vec<Vec<String>>> = vec![Vec::new(); n];
        // (state, a, b) -> raw entry index, action indices by first appearance
        let mut keyed: BTreeMap<(usize, usize, usize), usize> = BTreeMap::new();

        for (raw_idx, e) in raw.entries.iter().enumerate() {
            let &i = state_index
                .get(e.state.as_str())
                .ok_or_else(|| GameError::MissingKey {
                    id: e.state.clone(),
                    context: format!("entry {raw_idx} state"),
                })?;
            let a = match min_action_ids[i].iter().position(|x| x == &e.min_action) {
                Some(a) => a,
                None => {
                    min_action_ids[i].push(e.min_action.clone());
                    max_action_ids[i].push(Vec::new());
                    min_action_ids[i].len() - 1
                }
            };
            let b = match max_action_ids[i][a].iter().position(|x| x == &e.max_action) {
                Some(b) => b,
                None => {
                    max_action_ids[i][a].push(e.max_action.clone());
                    max_action_ids[i][a].len() - 1
                }
            };
            if keyed.insert((i, a, b), raw_idx).is_some() {
                return Err(GameError::DuplicateKey {
                    state: e.state.clone(),
                    min_action: e.min_action.clone(),
                    max_action: e.max_action.clone(),
                });
            }
        }

        for (i, s) in raw.states.iter().enumerate() {
            if min_action_ids[i].is_empty() {
                return Err(GameError::EmptyActionSet { state: s.clone() });
            }
        }

        let mut entries = Vec::with_capacity(keyed.len());
        let mut slots: Vec<Vec<Vec<usize>>> = (0..n)
            .map(|i| {
                (0..min_action_ids[i].len())
                    .map(|a| vec![usize::MAX; max_action_ids[i][a].len()])
                    .collect()
            })
            .collect();

        for (&(i, a, b), &raw_idx) in &keyed {
            let e = &raw.entries[raw_idx];
            let mut row = vec![0.0; n];
            for (sid, &p) in &e.transition {
                let &j = state_index
                    .get(sid.as_str())
                    .ok_or_else(|| GameError::MissingKey {
                        id: sid.clone(),
                        context: format!(
                            "transition of (state {:?}, min action {:?}, max action {:?})",
                            e.state, e.min_action, e.max_action
                        ),
                    })?;
                row[j] = p;
            }
            let invalid = |reason: String| GameError::ProbabilityRowInvalid {
                state: e.state.clone(),
                min_action: e.min_action.clone(),
                max_action: e.max_action.clone(),
                reason,
            };
            if let Some(p) = row.iter().find(|&&p| !(0.0..=1.0).contains(&p)) {
                return Err(invalid(format!("entry {p} outside [0, 1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                if opts.renormalize && sum > 1e-6 {
                    for p in &mut row {
                        *p /= sum;
                    }
                } else {
                    return Err(invalid(format!("row sums to {sum}")));
                }
            }
            let mut support = 0u64;
            for (j, &p) in row.iter().enumerate() {
                if p > 0.0 {
                    support |= 1 << j;
                }
            }
            slots[i][a][b] = entries.len();
            entries.push(Entry {
                state: i,
                min_action: a,
                max_action: b,
                payment: e.payment,
                row,
                support,
            });
        }

        Ok(GameSpec {
            states: raw.states.clone(),
            min_action_ids,
            max_action_ids,
            slots,
            entries,
        })
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_ids(&self) -> &[String] {
        &self.states
    }

    pub fn state_index(&self, id: &str) -> Option<usize> {
        self.states.iter().position(|s| s == id)
    }

    /// Number of payment keys (the dimension q of the payment space).
    pub fn num_entries(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn entry(&self, idx: usize) -> &Entry {
        &self.entries[idx]
    }

    pub fn entry_index(&self, i: usize, a: usize, b: usize) -> usize {
        self.slots[i][a][b]
    }

    pub fn min_action_count(&self, i: usize) -> usize {
        self.min_action_ids[i].len()
    }

    pub fn max_action_count(&self, i: usize, a: usize) -> usize {
        self.max_action_ids[i][a].len()
    }

    pub fn min_action_id(&self, i: usize, a: usize) -> &str {
        &self.min_action_ids[i][a]
    }

    pub fn max_action_id(&self, i: usize, a: usize, b: usize) -> &str {
        &self.max_action_ids[i][a][b]
    }

    /// The payments stored in the description, in key order.
    pub fn base_payment(&self) -> PaymentVector {
        PaymentVector {
            values: self.entries.iter().map(|e| e.payment).collect(),
        }
    }

    /// Base payment shifted by a per-state offset: every key of state `i`
    /// receives `offsets[i]`.
    pub fn payment_with_state_offsets(&self, offsets: &[f64]) -> PaymentVector {
        assert_eq!(offsets.len(), self.n_states());
        PaymentVector {
            values: self
                .entries
                .iter()
                .map(|e| e.payment + offsets[e.state])
                .collect(),
        }
    }

    /// Direction vector that is 1 on every key of state `i` and 0 elsewhere.
    pub fn state_direction(&self, i: usize) -> PaymentVector {
        PaymentVector {
            values: self
                .entries
                .iter()
                .map(|e| if e.state == i { 1.0 } else { 0.0 })
                .collect(),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        self.entries.iter().all(|e| e.support.count_ones() == 1)
    }

    /// The Shapley operator: `[T_r(x)]_i = min_a max_b (r_i^{ab} + P_i^{ab} x)`.
    pub fn shapley_apply(&self, r: &PaymentVector, x: &[f64]) -> StateVector {
        (0..self.n_states())
            .map(|i| self.min_envelope(r, x, i).0)
            .collect()
    }

    /// Value and lowest-index argmin over MIN actions of the MAX envelope.
    pub fn min_envelope(&self, r: &PaymentVector, x: &[f64], i: usize) -> (f64, usize) {
        let mut best = f64::INFINITY;
        let mut arg = 0;
        for (a, slot) in self.slots[i].iter().enumerate() {
            let v = self.max_envelope(r, x, slot);
            if v < best {
                best = v;
                arg = a;
            }
        }
        (best, arg)
    }

    /// Per-MIN-action values `max_b (r + P x)` for state `i`.
    pub fn min_action_values(&self, r: &PaymentVector, x: &[f64], i: usize) -> Vec<f64> {
        self.slots[i]
            .iter()
            .map(|slot| self.max_envelope(r, x, slot))
            .collect()
    }

    fn max_envelope(&self, r: &PaymentVector, x: &[f64], slot: &[usize]) -> f64 {
        slot.iter()
            .map(|&e| r.values[e] + self.entries[e].dot(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// The recession (payment-free) operator: `min_a max_b P_i^{ab} x`.
    pub fn recession_apply(&self, x: &[f64]) -> StateVector {
        (0..self.n_states())
            .map(|i| {
                self.slots[i]
                    .iter()
                    .map(|slot| {
                        slot.iter()
                            .map(|&e| self.entries[e].dot(x))
                            .fold(f64::NEG_INFINITY, f64::max)
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    /// One-player operator obtained by fixing the MIN policy.
    pub fn reduce_min<'a>(
        &'a self,
        r: &'a PaymentVector,
        sigma: &'a Policy,
    ) -> ReducedOperator<'a> {
        debug_assert!(sigma.is_valid_for(self));
        ReducedOperator {
            spec: self,
            r,
            sigma,
        }
    }

    /// Payment column and transition matrix of the Markov chain induced by a
    /// policy pair.
    pub fn matrix_of(
        &self,
        r: &PaymentVector,
        sigma: &Policy,
        pi: &CounterPolicy,
    ) -> (Vec<f64>, Vec<Vec<f64>>) {
        let mut pay = Vec::with_capacity(self.n_states());
        let mut rows = Vec::with_capacity(self.n_states());
        for i in 0..self.n_states() {
            let e = self.entry_index(i, sigma.choice[i], pi.choice[i]);
            pay.push(r.values[e]);
            rows.push(self.entries[e].row.clone());
        }
        (pay, rows)
    }

    /// Value iteration `v^0 = 0`, `v^{j+1} = T_r(v^j)`; returns `(v^k, v^k/k)`.
    pub fn value_iterate(&self, r: &PaymentVector, k: usize) -> (StateVector, StateVector) {
        assert!(k >= 1);
        let mut v = vec![0.0; self.n_states()];
        for _ in 0..k {
            v = self.shapley_apply(r, &v);
        }
        let mean = v.iter().map(|x| x / k as f64).collect();
        (v, mean)
    }

    /// Number of MIN policies, saturating at `u128::MAX`.
    pub fn policy_count(&self) -> u128 {
        self.min_action_ids
            .iter()
            .fold(1u128, |acc, a| acc.saturating_mul(a.len() as u128))
    }

    /// Enumerate all MIN policies in lexicographic order.
    pub fn policies(&self) -> impl Iterator<Item = Policy> + '_ {
        let radices: Vec<usize> = (0..self.n_states())
            .map(|i| self.min_action_count(i))
            .collect();
        MixedRadix::new(radices).map(|choice| Policy { choice })
    }

    /// Number of MAX counter-policies against `sigma`.
    pub fn counter_policy_count(&self, sigma: &Policy) -> u128 {
        (0..self.n_states()).fold(1u128, |acc, i| {
            acc.saturating_mul(self.max_action_count(i, sigma.choice[i]) as u128)
        })
    }

    /// Enumerate all MAX counter-policies against `sigma`.
    pub fn counter_policies<'a>(
        &'a self,
        sigma: &'a Policy,
    ) -> impl Iterator<Item = CounterPolicy> + 'a {
        let radices: Vec<usize> = (0..self.n_states())
            .map(|i| self.max_action_count(i, sigma.choice[i]))
            .collect();
        MixedRadix::new(radices).map(|choice| CounterPolicy { choice })
    }

    /// External JSON form, with key order preserved.
    pub fn to_raw(&self) -> RawGame {
        let entries = self
            .entries
            .iter()
            .map(|e| RawEntry {
                state: self.states[e.state].clone(),
                min_action: self.min_action_ids[e.state][e.min_action].clone(),
                max_action: self.max_action_ids[e.state][e.min_action][e.max_action].clone(),
                payment: e.payment,
                transition: e
                    .row
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(j, &p)| (self.states[j].clone(), p))
                    .collect(),
            })
            .collect();
        RawGame {
            states: self.states.clone(),
            entries,
        }
    }
}

/// A point of the payment space, in the owning game's key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaymentVector {
    values: Vec<f64>,
}

impl PaymentVector {
    pub fn new(spec: &GameSpec, values: Vec<f64>) -> Result<Self, GameError> {
        if values.len() != spec.num_entries() {
            return Err(GameError::PaymentLengthMismatch {
                got: values.len(),
                expected: spec.num_entries(),
            });
        }
        Ok(PaymentVector { values })
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        PaymentVector { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `self + t * dir`, componentwise.
    pub fn axpy(&self, t: f64, dir: &PaymentVector) -> PaymentVector {
        PaymentVector {
            values: self
                .values
                .iter()
                .zip(&dir.values)
                .map(|(a, d)| a + t * d)
                .collect(),
        }
    }
}

/// A stationary deterministic policy of player MIN.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Policy {
    pub choice: Vec<usize>,
}

impl Policy {
    pub fn first(spec: &GameSpec) -> Self {
        Policy {
            choice: vec![0; spec.n_states()],
        }
    }

    pub fn is_valid_for(&self, spec: &GameSpec) -> bool {
        self.choice.len() == spec.n_states()
            && self
                .choice
                .iter()
                .enumerate()
                .all(|(i, &a)| a < spec.min_action_count(i))
    }
}

/// A stationary deterministic counter-policy of player MAX, relative to some
/// MIN policy.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CounterPolicy {
    pub choice: Vec<usize>,
}

/// One-player operator `T_r^sigma` (MIN policy fixed).
pub struct ReducedOperator<'a> {
    spec: &'a GameSpec,
    r: &'a PaymentVector,
    sigma: &'a Policy,
}

impl ReducedOperator<'_> {
    /// `[T_r^sigma(x)]_i = max_b (r_i^{sigma(i) b} + P_i^{sigma(i) b} x)`.
    pub fn apply(&self, x: &[f64]) -> StateVector {
        (0..self.spec.n_states())
            .map(|i| {
                self.branch_entries(i)
                    .map(|e| self.r.values()[e] + self.spec.entry(e).dot(x))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    }

    /// Entry indices of the MAX branches available in state `i`.
    pub fn branch_entries(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let a = self.sigma.choice[i];
        (0..self.spec.max_action_count(i, a)).map(move |b| self.spec.entry_index(i, a, b))
    }

    pub fn spec(&self) -> &GameSpec {
        self.spec
    }

    pub fn payment(&self) -> &PaymentVector {
        self.r
    }

    pub fn sigma(&self) -> &Policy {
        self.sigma
    }
}

/// Lexicographic counter over mixed radices; yields `Vec<usize>` digit tuples.
pub(crate) struct MixedRadix {
    radices: Vec<usize>,
    current: Option<Vec<usize>>,
}

impl MixedRadix {
    pub fn new(radices: Vec<usize>) -> Self {
        let current = if radices.iter().all(|&r| r > 0) {
            Some(vec![0; radices.len()])
        } else {
            None
        };
        MixedRadix { radices, current }
    }
}

impl Iterator for MixedRadix {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let cur = self.current.as_mut().unwrap();
        let mut pos = self.radices.len();
        loop {
            if pos == 0 {
                self.current = None;
                break;
            }
            pos -= 1;
            cur[pos] += 1;
            if cur[pos] < self.radices[pos] {
                break;
            }
            cur[pos] = 0;
        }
        Some(out)
    }
}
