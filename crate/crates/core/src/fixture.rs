//! Built-in 3-state example game used by the CLI `example` subcommand and
//! throughout the test suites.
//!
//! The operator, with payments `r = (r1, ..., r7)`:
//!
//! ```text
//! [T(x)]_1 = r1 + (x1+x3)/2  /\  r2 + (x1+x2)/2
//! [T(x)]_2 = r3 + (x1+x3)/2  /\  ( r4 + (x1+x2)/2  \/  r5 + x3 )
//! [T(x)]_3 = r6 + (x1+x3)/2  \/  r7 + x3
//! ```
//!
//! with base payments `(0, 1, 2, 1, -2, -3, 1)` and per-state perturbations
//! `g = (g1, g2, g3)` adding `g_i` to every payment of state `i`.

use std::collections::BTreeMap;

use crate::game::{GameSpec, PaymentVector, RawEntry, RawGame};

fn entry(
    state: &str,
    min_action: &str,
    max_action: &str,
    payment: f64,
    transition: &[(&str, f64)],
) -> RawEntry {
    RawEntry {
        state: state.into(),
        min_action: min_action.into(),
        max_action: max_action.into(),
        payment,
        transition: transition
            .iter()
            .map(|&(s, p)| (s.to_string(), p))
            .collect::<BTreeMap<_, _>>(),
    }
}

/// The raw (JSON-shaped) form of the example game.
pub fn example_raw() -> RawGame {
    RawGame {
        states: vec!["1".into(), "2".into(), "3".into()],
        entries: vec![
            entry("1", "a1", "b1", 0.0, &[("1", 0.5), ("3", 0.5)]),
            entry("1", "a2", "b1", 1.0, &[("1", 0.5), ("2", 0.5)]),
            entry("2", "a1", "b1", 2.0, &[("1", 0.5), ("3", 0.5)]),
            entry("2", "a2", "b1", 1.0, &[("1", 0.5), ("2", 0.5)]),
            entry("2", "a2", "b2", -2.0, &[("3", 1.0)]),
            entry("3", "a1", "b1", -3.0, &[("1", 0.5), ("3", 0.5)]),
            entry("3", "a1", "b2", 1.0, &[("3", 1.0)]),
        ],
    }
}

/// The example game and its base payment vector `(0, 1, 2, 1, -2, -3, 1)`.
pub fn example_game() -> (GameSpec, PaymentVector) {
    let spec = GameSpec::validate(&example_raw()).expect("example fixture must validate");
    let base = spec.base_payment();
    (spec, base)
}

/// Payment vector of the example game shifted by a per-state offset
/// `g = (g1, g2, g3)`.
pub fn example_payment(g: [f64; 3]) -> PaymentVector {
    let (spec, _) = example_game();
    spec.payment_with_state_offsets(&g)
}

/// Two decoupled absorbing states with the given payments. The recession
/// operator is the identity, so the eigenproblem is not solvable for
/// state-dependent payments.
pub fn decoupled_game(payments: [f64; 2]) -> GameSpec {
    let raw = RawGame {
        states: vec!["1".into(), "2".into()],
        entries: vec![
            entry("1", "a", "b", payments[0], &[("1", 1.0)]),
            entry("2", "a", "b", payments[1], &[("2", 1.0)]),
        ],
    };
    GameSpec::validate(&raw).expect("decoupled fixture must validate")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seven_payment_keys() {
        let (spec, base) = example_game();
        assert_eq!(spec.num_entries(), 7);
        assert_eq!(base.values(), &[0.0, 1.0, 2.0, 1.0, -2.0, -3.0, 1.0]);
    }

    #[test]
    fn shapley_values_at_origin() {
        let (spec, base) = example_game();
        assert_eq!(spec.shapley_apply(&base, &[0.0, 0.0, 0.0]), vec![0.0, 1.0, 1.0]);
        // (-2,-2,0) is an eigenvector with eigenvalue 1.
        assert_eq!(
            spec.shapley_apply(&base, &[-2.0, -2.0, 0.0]),
            vec![-1.0, -1.0, 1.0]
        );
    }

    #[test]
    fn recession_values() {
        let (spec, _) = example_game();
        assert_eq!(spec.recession_apply(&[0.0, 1.0, 0.0]), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn reduce_min_with_first_actions() {
        let (spec, base) = example_game();
        let sigma = crate::game::Policy { choice: vec![0, 0, 0] };
        let reduced = spec.reduce_min(&base, &sigma);
        assert_eq!(reduced.apply(&[0.0, 0.0, 0.0]), vec![0.0, 2.0, 1.0]);
    }

    #[test]
    fn chain_row_for_second_max_branch_unused_in_state3() {
        let (spec, base) = example_game();
        let sigma = crate::game::Policy { choice: vec![0, 0, 0] };
        let pi = crate::game::CounterPolicy { choice: vec![0, 0, 0] };
        let (pay, rows) = spec.matrix_of(&base, &sigma, &pi);
        assert_eq!(pay, vec![0.0, 2.0, -3.0]);
        assert_eq!(rows[2], vec![0.5, 0.0, 0.5]);
    }

    #[test]
    fn mean_payoff_estimate_tends_to_one() {
        let (spec, base) = example_game();
        let (_, mean) = spec.value_iterate(&base, 1000);
        for m in mean {
            assert!((m - 1.0).abs() < 1e-2, "mean estimate {m} not close to 1");
        }
    }
}
