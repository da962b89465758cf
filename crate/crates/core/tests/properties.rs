use nu_entangle::bell::{self, BellTimes};
use nu_entangle::oscillation::*;
use nu_entangle::qkd::{self, QkdConfig};
use nu_entangle::source;
use proptest::prelude::*;

fn physics() -> (OscillationParams, MixingMatrix) {
    (OscillationParams::default(), tribimaximal_matrix())
}

fn flavor() -> impl Strategy<Value = Flavor> {
    prop_oneof![Just(Flavor::E), Just(Flavor::Mu), Just(Flavor::Tau)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn table_is_a_distribution(tl in 0.0..1.0f64, tr in 0.0..1.0f64) {
        let (p, m) = physics();
        let t = coincidence_table(tl, tr, &p, &m);
        prop_assert!((t.total() - 1.0).abs() < 1e-10);
        for x in t.p.iter().flatten() {
            prop_assert!(*x >= -1e-15 && *x <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn evolution_preserves_norm(tl in 0.0..5.0f64, tr in 0.0..5.0f64) {
        let (p, m) = physics();
        let st = evolve_pair(&initial_pair_state(&m), tl, tr, &p);
        prop_assert!((st.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_signaling(t in 0.0..1.0f64, a in 0.0..1.0f64, b in 0.0..1.0f64, f in flavor()) {
        let (p, m) = physics();
        let r1 = coincidence_table(a, t, &p, &m).right_marginal(f);
        let r2 = coincidence_table(b, t, &p, &m).right_marginal(f);
        let l1 = coincidence_table(t, a, &p, &m).left_marginal(f);
        let l2 = coincidence_table(t, b, &p, &m).left_marginal(f);
        prop_assert!((r1 - r2).abs() < 1e-12);
        prop_assert!((l1 - l2).abs() < 1e-12);
    }

    #[test]
    fn ch_is_numerator_minus_denominator(t in prop::array::uniform4(0.0..0.6f64)) {
        let (p, m) = physics();
        let r = bell::evaluate(&BellTimes::from_array(t), &p, &m);
        prop_assert!((r.ch - (r.h_numerator - r.h_denominator)).abs() < 1e-12);
        if r.h_denominator > 0.01 {
            prop_assert_eq!(r.h.unwrap() > 1.0, r.ch > 0.0);
        }
        for x in r.terms.to_array() {
            prop_assert!((-1e-15..=1.0 + 1e-12).contains(&x));
        }
    }

    #[test]
    fn distance_round_trip(s in 0.0..10.0f64, e in 1e-3..10.0f64) {
        let back = source::distance_to_s(source::s_to_distance(s, e), e).unwrap();
        prop_assert!((back - s).abs() <= 1e-12 * s.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn spectral_density_nonnegative(e in 0.0..0.2113f64) {
        let cfg = source::SourceConfig::default();
        prop_assert!(source::spectral_density(e, &cfg).unwrap() >= 0.0);
    }

    #[test]
    fn product_state_same_flavor_is_periodic(tau in 0.0..1.0f64, a in flavor(), b in flavor()) {
        let (p, m) = physics();
        let x = qkd::product_same_flavor_prob((a, b), tau, &p, &m);
        let y = qkd::product_same_flavor_prob((a, b), tau + std::f64::consts::FRAC_PI_4, &p, &m);
        prop_assert!((x - y).abs() < 1e-9);
        prop_assert!((-1e-15..=1.0 + 1e-12).contains(&x));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn intact_pairs_never_give_same_flavor(
        t1 in 0.0..0.5f64,
        gap in 1e-3..0.5f64,
        seed in any::<u64>(),
        eta in 0.2..1.0f64,
    ) {
        let (p, m) = physics();
        let cfg = QkdConfig { t1, t2: t1 + gap, n_pairs: 3000, seed, efficiency: eta, ..Default::default() };
        let rep = qkd::run_protocol(&cfg, &p, &m).unwrap();
        prop_assert_eq!(rep.same_flavor_count, 0);
        prop_assert!(!rep.alarm);
        prop_assert!(rep.alice_bits.iter().zip(&rep.bob_bits).all(|(a, b)| a ^ b == 1));
    }
}
