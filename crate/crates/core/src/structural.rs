//! Support-only solvability analysis.
//!
//! Decides, from the supports of the transition probabilities alone, whether
//! the spectral problem `T_r(u) = lambda 1 + u` is solvable for every payment
//! vector. The machinery is a pair of Boolean abstractions of the payment-free
//! operator, the lattices of invariant faces they generate, and the Galois
//! connection pairing disjoint faces. A nontrivial face closed under the
//! connection certifies a nonconstant fixed point of the recession function,
//! which rules out solvability for some payments.

use serde::Serialize;

use crate::error::StructuralError;
use crate::game::{GameSpec, StateVector};

/// Default cap on the number of states for the 2^n family enumeration.
pub const DEFAULT_STATE_CAP: usize = 20;

/// Residual tolerance for the nontrivial fixed-point witness.
pub const WITNESS_TOL: f64 = 1e-8;

/// Iteration budget for the witness computation.
pub const WITNESS_BUDGET: usize = 100_000;

/// A subset of states as a bitmask (bit i = state i).
pub type StateSet = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FamilyTag {
    Minus,
    Plus,
}

/// A family of subsets of states, as sorted bitmasks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetFamily {
    pub tag: FamilyTag,
    pub members: Vec<StateSet>,
}

impl SubsetFamily {
    pub fn contains(&self, set: StateSet) -> bool {
        self.members.binary_search(&set).is_ok()
    }

    pub fn is_union_closed(&self) -> bool {
        self.members.iter().all(|&a| {
            self.members
                .iter()
                .all(|&b| self.contains(a | b))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StructuralVerdict {
    SolvableForAllPayments,
    NotStructurallySolvable,
}

/// Approximate nonconstant fixed point of the recession function.
#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub x: StateVector,
    pub residual: f64,
    pub iterations: usize,
    /// The argmin of the witness is only guaranteed to contain the closed
    /// set it was built from, not to equal it.
    pub argmin_guaranteed_superset_only: bool,
}

/// Output of the structural analysis.
#[derive(Debug, Clone)]
pub struct GaloisReport {
    pub f_minus: SubsetFamily,
    pub f_plus: SubsetFamily,
    /// `Phi(I)` for every `I` in `f_minus`, in family order.
    pub phi: Vec<(StateSet, StateSet)>,
    /// `Phi*(J)` for every `J` in `f_plus`, in family order.
    pub phi_star: Vec<(StateSet, StateSet)>,
    /// Nontrivial members of `f_minus` closed for the connection.
    pub closed_nontrivial: Vec<StateSet>,
    pub verdict: StructuralVerdict,
    pub witnesses: Vec<(StateSet, Witness)>,
}

fn full_mask(n: usize) -> StateSet {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Upper Boolean abstraction: `min_a max_b max_{j in supp} x_j`.
pub fn boolean_upper(spec: &GameSpec, x: StateSet) -> StateSet {
    let mut out = 0u64;
    for i in 0..spec.n_states() {
        let mut state_bit = true;
        for a in 0..spec.min_action_count(i) {
            let mut action_bit = false;
            for b in 0..spec.max_action_count(i, a) {
                let supp = spec.entry(spec.entry_index(i, a, b)).support;
                if supp & x != 0 {
                    action_bit = true;
                    break;
                }
            }
            if !action_bit {
                state_bit = false;
                break;
            }
        }
        if state_bit {
            out |= 1 << i;
        }
    }
    out
}

/// Lower Boolean abstraction: `min_a max_b min_{j in supp} x_j`.
pub fn boolean_lower(spec: &GameSpec, x: StateSet) -> StateSet {
    let mut out = 0u64;
    for i in 0..spec.n_states() {
        let mut state_bit = true;
        for a in 0..spec.min_action_count(i) {
            let mut action_bit = false;
            for b in 0..spec.max_action_count(i, a) {
                let supp = spec.entry(spec.entry_index(i, a, b)).support;
                if supp & !x == 0 {
                    action_bit = true;
                    break;
                }
            }
            if !action_bit {
                state_bit = false;
                break;
            }
        }
        if state_bit {
            out |= 1 << i;
        }
    }
    out
}

/// Membership test for the lower family: `F+(1_{complement I}) <= 1_{complement I}`.
pub fn in_f_minus(spec: &GameSpec, i_set: StateSet) -> bool {
    let full = full_mask(spec.n_states());
    boolean_upper(spec, full & !i_set) & i_set == 0
}

/// Membership test for the upper family: `F-(1_J) >= 1_J`.
pub fn in_f_plus(spec: &GameSpec, j_set: StateSet) -> bool {
    boolean_lower(spec, j_set) & j_set == j_set
}

fn check_cap(spec: &GameSpec, cap: usize) -> Result<(), StructuralError> {
    let n = spec.n_states();
    if n > cap || n > 63 {
        return Err(StructuralError::StateCapExceeded { n, cap });
    }
    Ok(())
}

/// Both invariant-face families, by full 2^n enumeration.
pub fn compute_families(
    spec: &GameSpec,
    cap: usize,
) -> Result<(SubsetFamily, SubsetFamily), StructuralError> {
    check_cap(spec, cap)?;
    let n = spec.n_states();
    let mut minus = Vec::new();
    let mut plus = Vec::new();
    for set in 0..=full_mask(n) {
        if in_f_minus(spec, set) {
            minus.push(set);
        }
        if in_f_plus(spec, set) {
            plus.push(set);
        }
    }
    Ok((
        SubsetFamily {
            tag: FamilyTag::Minus,
            members: minus,
        },
        SubsetFamily {
            tag: FamilyTag::Plus,
            members: plus,
        },
    ))
}

/// Greatest element of `F+` disjoint from `I`, by the decreasing iteration
/// `J_0 = complement(I)`, `J_{t+1} = J_t /\ F-(1_{J_t})`.
pub fn galois_phi(spec: &GameSpec, i_set: StateSet) -> Result<StateSet, StructuralError> {
    if !in_f_minus(spec, i_set) {
        return Err(StructuralError::NotInFamily);
    }
    let full = full_mask(spec.n_states());
    let mut j = full & !i_set;
    loop {
        let next = j & boolean_lower(spec, j);
        if next == j {
            return Ok(j);
        }
        j = next;
    }
}

/// Greatest element of `F-` disjoint from `J`, dual iteration.
pub fn galois_phi_star(spec: &GameSpec, j_set: StateSet) -> Result<StateSet, StructuralError> {
    if !in_f_plus(spec, j_set) {
        return Err(StructuralError::NotInFamily);
    }
    let full = full_mask(spec.n_states());
    let mut i = full & !j_set;
    loop {
        let next = i & !boolean_upper(spec, full & !i);
        if next == i {
            return Ok(i);
        }
        i = next;
    }
}

/// Closure `Phi* ( Phi (I) )`.
pub fn closure(spec: &GameSpec, i_set: StateSet) -> Result<StateSet, StructuralError> {
    galois_phi_star(spec, galois_phi(spec, i_set)?)
}

/// Full structural analysis: families, Galois maps, closed nontrivial sets,
/// and the solvability verdict (solvable iff no nontrivial closed set).
pub fn structural_verdict(spec: &GameSpec, cap: usize) -> Result<GaloisReport, StructuralError> {
    let (f_minus, f_plus) = compute_families(spec, cap)?;
    let full = full_mask(spec.n_states());
    let mut phi = Vec::with_capacity(f_minus.members.len());
    let mut closed_nontrivial = Vec::new();
    for &i_set in &f_minus.members {
        let p = galois_phi(spec, i_set)?;
        phi.push((i_set, p));
        if i_set != 0 && i_set != full && galois_phi_star(spec, p)? == i_set {
            closed_nontrivial.push(i_set);
        }
    }
    let mut phi_star = Vec::with_capacity(f_plus.members.len());
    for &j_set in &f_plus.members {
        phi_star.push((j_set, galois_phi_star(spec, j_set)?));
    }
    let verdict = if closed_nontrivial.is_empty() {
        StructuralVerdict::SolvableForAllPayments
    } else {
        StructuralVerdict::NotStructurallySolvable
    };
    let mut witnesses = Vec::new();
    for &i_set in &closed_nontrivial {
        if let Ok(w) = nontrivial_fixed_point_witness(spec, i_set) {
            witnesses.push((i_set, w));
        }
    }
    Ok(GaloisReport {
        f_minus,
        f_plus,
        phi,
        phi_star,
        closed_nontrivial,
        verdict,
        witnesses,
    })
}

/// Nonconstant approximate fixed point of the recession function, for a
/// nontrivial closed `I`: monotone iteration from `1_{Phi(I)}`, nondecreasing
/// and bounded above by `1_{complement I}`.
pub fn nontrivial_fixed_point_witness(
    spec: &GameSpec,
    i_set: StateSet,
) -> Result<Witness, StructuralError> {
    let n = spec.n_states();
    let full = full_mask(n);
    if i_set == 0 || i_set == full {
        return Err(StructuralError::NotInFamily);
    }
    let phi = galois_phi(spec, i_set)?;
    if galois_phi_star(spec, phi)? != i_set {
        return Err(StructuralError::NotInFamily);
    }
    let mut x: StateVector = (0..n)
        .map(|i| if phi & (1 << i) != 0 { 1.0 } else { 0.0 })
        .collect();
    let mut residual = f64::INFINITY;
    for iter in 0..WITNESS_BUDGET {
        let next = spec.recession_apply(&x);
        residual = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        x = next;
        if residual <= WITNESS_TOL {
            return Ok(Witness {
                x,
                residual,
                iterations: iter + 1,
                argmin_guaranteed_superset_only: true,
            });
        }
    }
    Err(StructuralError::IterationBudgetExceeded {
        tol: WITNESS_TOL,
        budget: WITNESS_BUDGET,
        residual,
        best: x,
    })
}

/// JSON form of a [`GaloisReport`] with original state identifiers.
#[derive(Debug, Serialize)]
pub struct GaloisReportJson {
    pub f_minus: Vec<Vec<String>>,
    pub f_plus: Vec<Vec<String>>,
    pub phi: Vec<(Vec<String>, Vec<String>)>,
    pub phi_star: Vec<(Vec<String>, Vec<String>)>,
    pub closed_nontrivial: Vec<Vec<String>>,
    pub verdict: String,
    pub witnesses: Vec<WitnessJson>,
}

#[derive(Debug, Serialize)]
pub struct WitnessJson {
    pub closed_set: Vec<String>,
    pub x: Vec<f64>,
    pub residual: f64,
    pub tolerance: f64,
    pub argmin_guaranteed_superset_only: bool,
}

impl GaloisReport {
    pub fn to_json(&self, spec: &GameSpec) -> GaloisReportJson {
        let names = |set: StateSet| -> Vec<String> {
            (0..spec.n_states())
                .filter(|i| set & (1 << i) != 0)
                .map(|i| spec.state_ids()[i].clone())
                .collect()
        };
        GaloisReportJson {
            f_minus: self.f_minus.members.iter().map(|&s| names(s)).collect(),
            f_plus: self.f_plus.members.iter().map(|&s| names(s)).collect(),
            phi: self
                .phi
                .iter()
                .map(|&(i, p)| (names(i), names(p)))
                .collect(),
            phi_star: self
                .phi_star
                .iter()
                .map(|&(j, p)| (names(j), names(p)))
                .collect(),
            closed_nontrivial: self.closed_nontrivial.iter().map(|&s| names(s)).collect(),
            verdict: match self.verdict {
                StructuralVerdict::SolvableForAllPayments => "SOLVABLE_FOR_ALL_PAYMENTS".into(),
                StructuralVerdict::NotStructurallySolvable => "NOT_STRUCTURALLY_SOLVABLE".into(),
            },
            witnesses: self
                .witnesses
                .iter()
                .map(|(s, w)| WitnessJson {
                    closed_set: names(*s),
                    x: w.x.clone(),
                    residual: w.residual,
                    tolerance: WITNESS_TOL,
                    argmin_guaranteed_superset_only: w.argmin_guaranteed_superset_only,
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture;
    use crate::fixture::decoupled_game as decoupled;

    #[test]
    fn example_boolean_abstractions() {
        let (spec, _) = fixture::example_game();
        // x = (0,1,0)
        assert_eq!(boolean_upper(&spec, 0b010), 0b000);
        // x = (0,0,1)
        assert_eq!(boolean_lower(&spec, 0b100), 0b100);
        // top and bottom
        assert_eq!(boolean_upper(&spec, 0b111), 0b111);
        assert_eq!(boolean_upper(&spec, 0), 0);
        assert_eq!(boolean_lower(&spec, 0b111), 0b111);
    }

    #[test]
    fn example_families_and_verdict() {
        let (spec, _) = fixture::example_game();
        let report = structural_verdict(&spec, DEFAULT_STATE_CAP).unwrap();
        // F- = { {}, {1,3}, {1,2,3} }, F+ = { {}, {3}, {1,2,3} }
        assert_eq!(report.f_minus.members, vec![0b000, 0b101, 0b111]);
        assert_eq!(report.f_plus.members, vec![0b000, 0b100, 0b111]);
        // Phi({1,3}) = {} and closure is the full set, so not closed.
        assert_eq!(galois_phi(&spec, 0b101).unwrap(), 0);
        assert_eq!(closure(&spec, 0b101).unwrap(), 0b111);
        assert!(report.closed_nontrivial.is_empty());
        assert_eq!(report.verdict, StructuralVerdict::SolvableForAllPayments);
    }

    #[test]
    fn decoupled_states_not_solvable() {
        let spec = decoupled([0.0, 1.0]);
        let report = structural_verdict(&spec, DEFAULT_STATE_CAP).unwrap();
        assert_eq!(report.f_minus.members, vec![0b00, 0b01, 0b10, 0b11]);
        assert_eq!(report.f_plus.members, vec![0b00, 0b01, 0b10, 0b11]);
        assert_eq!(
            report.verdict,
            StructuralVerdict::NotStructurallySolvable
        );
        assert!(report.closed_nontrivial.contains(&0b01));

        let w = nontrivial_fixed_point_witness(&spec, 0b01).unwrap();
        assert_eq!(w.x, vec![0.0, 1.0]);
        assert_eq!(w.residual, 0.0);
    }

    #[test]
    fn phi_of_empty_is_full_set() {
        let (spec, _) = fixture::example_game();
        assert_eq!(galois_phi(&spec, 0).unwrap(), 0b111);
        assert_eq!(galois_phi_star(&spec, 0).unwrap(), 0b111);
        assert_eq!(galois_phi_star(&spec, 0b111).unwrap(), 0);
    }

    #[test]
    fn probability_values_do_not_matter() {
        // Same supports as the example but with skewed probabilities.
        let (spec, _) = fixture::example_game();
        let mut raw = spec.to_raw();
        for e in &mut raw.entries {
            if e.transition.len() == 2 {
                let keys: Vec<String> = e.transition.keys().cloned().collect();
                e.transition.insert(keys[0].clone(), 0.9);
                e.transition.insert(keys[1].clone(), 0.1);
            }
        }
        let skewed = GameSpec::validate(&raw).unwrap();
        let a = structural_verdict(&spec, DEFAULT_STATE_CAP).unwrap();
        let b = structural_verdict(&skewed, DEFAULT_STATE_CAP).unwrap();
        assert_eq!(a.verdict, b.verdict);
        assert_eq!(a.f_minus.members, b.f_minus.members);
        assert_eq!(a.f_plus.members, b.f_plus.members);
    }

    #[test]
    fn cap_is_enforced() {
        let (spec, _) = fixture::example_game();
        match compute_families(&spec, 2) {
            Err(StructuralError::StateCapExceeded { n: 3, cap: 2 }) => {}
            other => panic!("expected StateCapExceeded, got {other:?}"),
        }
    }
}
