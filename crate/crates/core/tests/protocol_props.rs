use proptest::prelude::*;
use qss_core::gaussian::symplectic_eigenvalues;
use qss_core::oracle::{oracle_reduced_cm, oracle_reduced_cm_with, OracleOptions};
use qss_core::protocol::{
    bipartite_cm, detector_loss_transform, reduced_cm_multipartite, ChannelParams, Completion, GroupSpec,
    ProtocolConfig,
};
use qss_core::rates::{optimize_modulation, secret_key_rate, DEFAULT_MU_MAX};
use qss_core::schemes::bipartite_distances;

/// Full-house configs with 2 or 3 groups and at most `max_users` ports.
fn full_house(max_users: usize) -> impl Strategy<Value = ProtocolConfig> {
    (2usize..=3)
        .prop_flat_map(move |m| {
            (
                proptest::collection::vec(1usize..=max_users / m, m),
                proptest::collection::vec(0.05..=1.0f64, m),
                proptest::collection::vec(1.0..=1.3f64, m),
                1.0..=100.0f64,
                prop_oneof![Just(1.0), Just(0.98), 0.9..1.0f64],
            )
        })
        .prop_map(|(sizes, eta, omega, mu, tau)| {
            let groups = sizes
                .iter()
                .zip(&eta)
                .zip(&omega)
                .map(|((&n, &e), &w)| GroupSpec::new(n, ChannelParams::new(e, w).unwrap()))
                .collect();
            ProtocolConfig::full_house(groups).with_mu(mu).with_tau(tau)
        })
}

fn two_groups() -> impl Strategy<Value = ProtocolConfig> {
    (1usize..=6, 1usize..=6, 0.05..=1.0f64, 0.05..=1.0f64, 1.0..=1.3f64, 1.0..=1.3f64, 1.0..=1e4f64).prop_map(
        |(n1, n2, e1, e2, w1, w2, mu)| {
            ProtocolConfig::full_house(vec![
                GroupSpec::new(n1, ChannelParams::new(e1, w1).unwrap()),
                GroupSpec::new(n2, ChannelParams::new(e2, w2).unwrap()),
            ])
            .with_mu(mu)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_form_matches_oracle(cfg in full_house(6)) {
        let (o, _) = oracle_reduced_cm(&cfg).unwrap();
        let a = reduced_cm_multipartite(&cfg).unwrap();
        prop_assert!((o.matrix() - a.matrix()).amax() <= 1e-9);
    }

    #[test]
    fn every_pipeline_stage_is_physical(cfg in full_house(6)) {
        let (_, trace) = oracle_reduced_cm(&cfg).unwrap();
        for s in &trace.stages {
            let nu = symplectic_eigenvalues(&s.cm).unwrap().min();
            prop_assert!(nu >= 1.0 - 1e-9, "{}: {nu}", s.name);
        }
    }

    #[test]
    fn localization_basis_is_irrelevant(cfg in full_house(6)) {
        let opts = OracleOptions { completion: Completion::GramSchmidt, q_order: None };
        let (a, _) = oracle_reduced_cm(&cfg).unwrap();
        let (b, _) = oracle_reduced_cm_with(&cfg, &opts).unwrap();
        prop_assert!((a.matrix() - b.matrix()).amax() <= 1e-9);
    }

    #[test]
    fn q_homodyne_order_is_irrelevant(cfg in full_house(6), seed in any::<u64>()) {
        let n = cfg.total_users;
        let mut order: Vec<usize> = (1..n).collect();
        // Deterministic shuffle from the seed.
        let mut s = seed;
        for i in (1..order.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let opts = OracleOptions { completion: Completion::default(), q_order: Some(order) };
        let (a, _) = oracle_reduced_cm(&cfg).unwrap();
        let (b, _) = oracle_reduced_cm_with(&cfg, &opts).unwrap();
        prop_assert!((a.matrix() - b.matrix()).amax() <= 1e-9);
    }

    #[test]
    fn group_labels_permute_blocks(cfg in full_house(6)) {
        let m = cfg.m();
        let perm: Vec<usize> = (0..m).rev().collect();
        let mut swapped = cfg.clone();
        swapped.groups = perm.iter().map(|&j| cfg.groups[j].clone()).collect();
        let a = reduced_cm_multipartite(&cfg).unwrap();
        let b = reduced_cm_multipartite(&swapped).unwrap();
        let a = a.select_modes(&perm).unwrap();
        prop_assert!((a.matrix() - b.matrix()).amax() <= 1e-12 * a.scale());
    }

    #[test]
    fn perfect_detectors_change_nothing(cfg in two_groups()) {
        let shift = detector_loss_transform(&cfg.clone().with_tau(1.0)).unwrap();
        prop_assert_eq!(shift.x_shift, 0.0);
        prop_assert_eq!(shift.lambda_shift, 0.0);
        let a = bipartite_cm(&cfg).unwrap();
        let b = reduced_cm_multipartite(&cfg).unwrap();
        prop_assert!((a.matrix() - b.matrix()).amax() <= 1e-9 * a.scale());
    }

    #[test]
    fn rate_identity(cfg in two_groups(), xi in 0.9..=1.0f64, tau in 0.9..=1.0f64) {
        let r = secret_key_rate(&cfg.with_xi(xi).with_tau(tau)).unwrap();
        prop_assert_eq!(r.rate, r.xi * r.mutual_information - r.holevo);
        prop_assert!(r.holevo >= -1e-9);
    }

    #[test]
    fn splitting_is_symmetric_without_noise(
        a in 1usize..=10, b in 1usize..=10, d1 in 0.0..50.0f64, d2 in 0.0..50.0f64, mu in 1.0..1e4f64,
    ) {
        let n = a + b;
        let r = |k: usize| {
            secret_key_rate(&bipartite_distances(n, k as f64 / n as f64, [d1, d2], [1.0, 1.0]).unwrap().with_mu(mu))
                .unwrap()
                .rate
        };
        prop_assert!((r(a) - r(b)).abs() <= 1e-9);
    }

    #[test]
    fn rate_is_continuous_in_transmissivity(cfg in two_groups(), step in -1e-7..1e-7f64) {
        let mut moved = cfg.clone();
        let e = (moved.groups[0].channel.eta + step).clamp(0.05, 1.0);
        moved.groups[0].channel = ChannelParams::new(e, moved.groups[0].channel.omega).unwrap();
        let a = secret_key_rate(&cfg).unwrap().rate;
        let b = secret_key_rate(&moved).unwrap().rate;
        prop_assert!((a - b).abs() <= 1e-4, "{a} vs {b}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn optimized_rate_is_monotone(
        d in 0.0..60.0f64, dd in 0.5..20.0f64, w in 1.0..1.2f64, dw in 0.005..0.1f64,
        xi in 0.95..=1.0f64, dxi in 0.005..0.05f64, tau in 0.9..=1.0f64, dtau in 0.005..0.05f64,
    ) {
        let cfg = |d1: f64, w1: f64| bipartite_distances(12, 0.5, [d1, 0.1], [w1, 1.0]).unwrap();
        let opt = |c: &ProtocolConfig| optimize_modulation(c, DEFAULT_MU_MAX).unwrap().1.rate;
        let base = opt(&cfg(d, w).with_xi(xi).with_tau(tau));
        let tol = 1e-9;
        prop_assert!(opt(&cfg(d + dd, w).with_xi(xi).with_tau(tau)) <= base + tol);
        prop_assert!(opt(&cfg(d, w + dw).with_xi(xi).with_tau(tau)) <= base + tol);
        prop_assert!(opt(&cfg(d, w).with_xi(xi - dxi).with_tau(tau)) <= base + tol);
        prop_assert!(opt(&cfg(d, w).with_xi(xi).with_tau(tau - dtau)) <= base + tol);
    }
}
