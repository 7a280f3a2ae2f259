//! Property tests for the algebraic invariants that hold for arbitrary
//! inputs, not just the curated examples.

use proptest::prelude::*;

use wzs_core::decompose::canonicalize;
use wzs_core::engine::{has_zero_window, prefix_sum_free, window_reach, Seq};
use wzs_core::ring::{natural_map, Residue, WeightSet, ZnContext};

fn modulus() -> impl Strategy<Value = u64> {
    2u64..=40
}

fn seq_over(max_len: usize) -> impl Strategy<Value = Seq> {
    modulus().prop_flat_map(move |n| {
        prop::collection::vec(0..n, 0..=max_len)
            .prop_map(move |terms| Seq::new(n, terms).unwrap())
    })
}

fn weights_for(n: u64) -> impl Strategy<Value = WeightSet> {
    prop::collection::btree_set(1..n.max(2), 1..=4usize.min(n as usize - 1)).prop_map(
        move |values| WeightSet::explicit(n, &values.into_iter().collect::<Vec<_>>()).unwrap(),
    )
}

fn seq_and_weights(max_len: usize) -> impl Strategy<Value = (Seq, WeightSet)> {
    modulus().prop_flat_map(move |n| {
        (
            prop::collection::vec(0..n, 0..=max_len)
                .prop_map(move |terms| Seq::new(n, terms).unwrap()),
            weights_for(n),
        )
    })
}

proptest! {
    /// Zero windows persist under any extension.
    #[test]
    fn windows_are_monotone((s, weights) in seq_and_weights(6), x in 0u64..1_000_000) {
        if has_zero_window(&s, &weights).unwrap().is_some() {
            let n = s.modulus();
            let mut terms = s.terms().to_vec();
            terms.push(x % n);
            let extended = Seq::new(n, terms).unwrap();
            prop_assert!(has_zero_window(&extended, &weights).unwrap().is_some());
        }
    }

    /// The prefix-sum criterion is exactly zero-window-freeness for A = {1}.
    #[test]
    fn prefix_sums_match_windows(s in seq_over(8)) {
        let weights = WeightSet::one(s.modulus()).unwrap();
        prop_assert_eq!(
            prefix_sum_free(&s),
            has_zero_window(&s, &weights).unwrap().is_none()
        );
    }

    /// A global unit scaling never changes whether a window reaches zero.
    #[test]
    fn unit_scaling_preserves_windows((s, weights) in seq_and_weights(6), pick in 0usize..64) {
        let n = s.modulus();
        let units = ZnContext::new(n).unwrap().unit_values();
        let c = units[pick % units.len()];
        let scaled = Seq::new(n, s.terms().iter().map(|&t| (t * c) % n).collect()).unwrap();
        prop_assert_eq!(
            has_zero_window(&s, &weights).unwrap().is_some(),
            has_zero_window(&scaled, &weights).unwrap().is_some()
        );
    }

    /// The reach set never shrinks when weights are added.
    #[test]
    fn reach_grows_with_weights(s in seq_over(5)) {
        let n = s.modulus();
        if s.is_empty() || n < 3 {
            return Ok(());
        }
        let small = WeightSet::one(n).unwrap();
        let big = WeightSet::explicit(n, &[1, n - 1]).unwrap();
        let r_small = window_reach(&s, &small).unwrap();
        let r_big = window_reach(&s, &big).unwrap();
        for v in r_small.values() {
            prop_assert!(r_big.contains(v));
        }
    }

    /// Canonicalization is idempotent and constant on unit scalings.
    #[test]
    fn canonical_form_is_stable(s in seq_over(5), pick in 0usize..64) {
        let n = s.modulus();
        let ctx = ZnContext::new(n).unwrap();
        let weights = WeightSet::units_pow(&ctx, 2).unwrap();
        let class = canonicalize(&s, &weights).unwrap();
        let again = canonicalize(&class.canonical, &weights).unwrap();
        prop_assert_eq!(&class.canonical, &again.canonical);
        prop_assert_eq!(class.orbit_size, again.orbit_size);
        let units = ctx.unit_values();
        let c = units[pick % units.len()];
        let scaled = Seq::new(n, s.terms().iter().map(|&t| (t * c) % n).collect()).unwrap();
        prop_assert_eq!(&canonicalize(&scaled, &weights).unwrap().canonical, &class.canonical);
    }

    /// The natural map commutes with sequence reduction term by term.
    #[test]
    fn natural_map_commutes_on_terms(s in seq_over(6)) {
        let n = s.modulus();
        let ctx = ZnContext::new(n).unwrap();
        for m in ctx.divisors() {
            if m < 2 {
                continue;
            }
            let mapped = s.natural_map(m).unwrap();
            for (&t, &u) in s.terms().iter().zip(mapped.terms()) {
                let direct = natural_map(Residue::reduced(t, n), m).unwrap();
                prop_assert_eq!(direct.value(), u);
            }
        }
    }
}
