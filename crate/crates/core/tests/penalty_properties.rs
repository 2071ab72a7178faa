mod common;

use common::{bits, brute_min_slack, SlackCase};
use gridpart::penalty::{
    equality_penalty, integer_slack_penalty, min_slack_scaled, min_slack_value, LinearConstraint, SlackEncoding,
};
use gridpart::qubo::{QuboBuilder, Var};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn closed_form_slack_matches_brute_force_on_ten_thousand_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..10_000 {
        let k = rng.gen_range(1..=8u32);
        let lower = rng.gen_range(-3.0..0.0);
        let upper = lower + rng.gen_range(0.1..4.0);
        let enc = SlackEncoding::new(k, lower, upper).unwrap();
        // Every fourth case lands exactly on a half-integer to exercise ties.
        let raw = if trial % 4 == 0 {
            let half = rng.gen_range(0..(1u64 << k) + 2) as f64 + 0.5;
            lower + half / enc.scale()
        } else {
            rng.gen_range(lower - 1.0..upper + 1.0)
        };
        let scaled = enc.scaled(raw);
        assert_eq!(min_slack_value(&enc, raw), brute_min_slack(k, scaled), "k={k} scaled={scaled}");
    }
}

#[test]
fn half_integer_ties_round_to_even() {
    assert_eq!(min_slack_scaled(3, 2.5).0, 2);
    assert_eq!(min_slack_scaled(3, 3.5).0, 4);
    assert_eq!(min_slack_scaled(3, 0.5).0, 0);
}

#[test]
fn feasibility_equivalence_on_random_constraints() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..50 {
        let case = SlackCase::random(&mut rng);
        for (_, lhs, min) in case.compiled_minima() {
            if (lhs - case.b).abs() < 1e-12 {
                continue;
            }
            assert_eq!(lhs <= case.b, min <= 0.25 + 1e-12, "{case:?} lhs={lhs} min={min}");
        }
    }
}

#[test]
fn equality_penalty_is_squared_residual() {
    let mut b = QuboBuilder::new();
    for i in 0..3 {
        b.add_variable(Var::Bit(i));
    }
    let c = LinearConstraint::equality(vec![(Var::Bit(0), 1.0), (Var::Bit(1), 2.0), (Var::Bit(2), -1.0)], 1.0).unwrap();
    equality_penalty(&c, &mut b, 3.0).unwrap();
    let (q, _) = b.finish();
    for mask in 0..8 {
        let x = bits(mask, 3);
        let r = x[0] as u8 as f64 + 2.0 * x[1] as u8 as f64 - x[2] as u8 as f64 - 1.0;
        assert!((q.energy(&x) - 3.0 * r * r).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn integer_slack_is_exact(a in proptest::collection::vec(-4i32..=4, 1..=5), b in -4i32..=8) {
        let a: Vec<f64> = a.into_iter().map(f64::from).collect();
        prop_assume!(a.iter().any(|&v| v != 0.0));
        let c: f64 = a.iter().filter(|&&v| v < 0.0).sum();
        prop_assume!(b as f64 - c >= 1.0);
        let n = a.len();
        let mut builder = QuboBuilder::new();
        for i in 0..n {
            builder.add_variable(Var::Bit(i));
        }
        let con = LinearConstraint::at_most(a.iter().enumerate().map(|(i, &v)| (Var::Bit(i), v)).collect(), b as f64).unwrap();
        let slack = integer_slack_penalty(&con, |bit| Var::Slack { group: 0, bit }, &mut builder, 1.0).unwrap();
        let (q, _) = builder.finish();
        let k = slack.coefficients.len();
        // Slack values reach exactly 0..=b−c.
        prop_assert_eq!(slack.coefficients.iter().sum::<f64>(), b as f64 - c);
        for mask in 0..1u64 << n {
            let lhs: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| a[i]).sum();
            let min = (0..1u64 << k)
                .map(|z| q.energy(&bits(mask | z << n, n + k)))
                .fold(f64::INFINITY, f64::min);
            if lhs <= b as f64 {
                prop_assert_eq!(min, 0.0);
            } else {
                prop_assert!(min >= 1.0);
            }
        }
    }
}
