use arena_core::autobidder::{best_response, fpa_best_response, ResponseOptions};
use arena_core::bounds::{
    eval_f, g_rfpa, g_rtruth, make_rtruth_lb_instance, matching_coefficient,
    rfpa_spend_coefficient, rtruth_lb_ratio, verify_lower_bound, BetaGrid, BoundVariant, Case1Term,
};
use arena_core::equilibrium::GammaScan;
use arena_core::mechanisms::{
    myerson_price_numeric, play, rfpa_outcome, rfpa_win_prob, rtruth_expected_price, rtruth_outcome,
};
use arena_core::model::{liquid_welfare, optimal_welfare};
use arena_core::{Allocation, BidProfile, Instance, MechanismSpec};
use proptest::prelude::*;

fn instance_strategy(
    n: std::ops::RangeInclusive<usize>,
    m: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = Instance> {
    (n, m).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(prop::collection::vec(0.0f64..1.0, m), n),
            prop::collection::vec(0.2f64..3.0, n),
        )
            .prop_map(|(values, targets)| Instance::new(values, targets).unwrap())
    })
}

fn random_allocation(n: usize, m: usize, raw: &[f64]) -> Allocation {
    // Column-normalised weights, so each query is allocated with total mass <= 1.
    let mut rows = vec![vec![0.0; m]; n];
    for j in 0..m {
        let col: f64 = (0..n).map(|i| raw[i * m + j]).sum::<f64>() + 1.0;
        for (i, row) in rows.iter_mut().enumerate() {
            row[j] = raw[i * m + j] / col;
        }
    }
    Allocation::new(rows).unwrap()
}

fn brute_force_opt(inst: &Instance) -> f64 {
    let n = inst.num_advertisers();
    let m = inst.num_queries();
    let mut best = 0.0f64;
    let total = n.pow(m as u32);
    for code in 0..total {
        let mut c = code;
        let winners: Vec<usize> = (0..m)
            .map(|_| {
                let w = c % n;
                c /= n;
                w
            })
            .collect();
        let rows = (0..n)
            .map(|i| {
                winners
                    .iter()
                    .map(|&w| if w == i { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect();
        let lw = liquid_welfare(inst, &Allocation::new(rows).unwrap()).unwrap();
        best = best.max(lw);
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalizing_keeps_welfare(
        inst in instance_strategy(2..=4, 1..=6),
        raw in prop::collection::vec(0.0f64..1.0, 24),
    ) {
        let alloc = random_allocation(inst.num_advertisers(), inst.num_queries(), &raw);
        let norm = inst.normalize();
        prop_assert!(norm.is_normalized());
        let a = liquid_welfare(&inst, &alloc).unwrap();
        let b = liquid_welfare(&norm, &alloc).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        prop_assert!((optimal_welfare(&inst).0 - optimal_welfare(&norm).0).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn welfare_is_linear_in_the_allocation(
        inst in instance_strategy(2..=3, 1..=5),
        raw in prop::collection::vec(0.0f64..1.0, 15),
        lambda in 0.0f64..1.0,
    ) {
        let alloc = random_allocation(inst.num_advertisers(), inst.num_queries(), &raw);
        let full = liquid_welfare(&inst, &alloc).unwrap();
        let part = liquid_welfare(&inst, &alloc.scaled(lambda)).unwrap();
        prop_assert!((part - lambda * full).abs() <= 1e-12 * full.max(1.0));
        prop_assert!(full <= optimal_welfare(&inst).0 + 1e-12);
    }

    #[test]
    fn optimum_matches_brute_force(inst in instance_strategy(2..=3, 1..=6)) {
        let (opt, alloc) = optimal_welfare(&inst);
        prop_assert!((opt - brute_force_opt(&inst)).abs() <= 1e-12);
        prop_assert!((liquid_welfare(&inst, &alloc).unwrap() - opt).abs() <= 1e-12);
    }

    #[test]
    fn randomized_auctions_are_anonymous(b1 in 0.01f64..10.0, b2 in 0.01f64..10.0, alpha in 1.0f64..4.0) {
        for f in [rfpa_outcome, rtruth_outcome] {
            let a = f(b1, b2, alpha).unwrap();
            let b = f(b2, b1, alpha).unwrap();
            if b1 != b2 || alpha > 1.0 {
                prop_assert!((a.win_prob[0] - b.win_prob[1]).abs() <= 1e-12);
                prop_assert!((a.expected_payment[0] - b.expected_payment[1]).abs() <= 1e-12 * b1.max(b2));
            }
            prop_assert!((a.win_prob[0] + a.win_prob[1] - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn win_probability_is_monotone(b1 in 0.01f64..10.0, up in 1.0f64..3.0, b2 in 0.01f64..10.0, alpha in 1.0f64..4.0) {
        let lo = rfpa_win_prob(b1, b2, alpha).unwrap();
        let hi = rfpa_win_prob(b1 * up, b2, alpha).unwrap();
        prop_assert!(hi >= lo);
        prop_assert!((0.0..=1.0).contains(&lo));
    }

    #[test]
    fn win_probability_is_continuous_at_the_edges(b2 in 0.01f64..10.0, alpha in 1.01f64..4.0) {
        let d = 1e-9;
        let top = rfpa_win_prob(b2 * alpha * (1.0 - d), b2, alpha).unwrap();
        let bottom = rfpa_win_prob(b2 / alpha * (1.0 + d), b2, alpha).unwrap();
        prop_assert!((1.0 - top).abs() < 1e-6);
        prop_assert!(bottom.abs() < 1e-6);
        prop_assert!((rfpa_win_prob(b2, b2, alpha).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn myerson_quadrature_matches_the_closed_form(ratio in 0.3f64..3.0, other in 0.1f64..5.0, alpha in 1.05f64..3.0) {
        let bid = ratio * other;
        let numeric = myerson_price_numeric(|z, o| rfpa_win_prob(z, o, alpha).unwrap_or(0.0), bid, other).unwrap();
        let closed = rtruth_expected_price(bid, other, alpha);
        prop_assert!((numeric - closed).abs() <= 1e-8 * other.max(1.0), "{numeric} vs {closed}");
        // Myerson prices never exceed the bid times the win probability.
        prop_assert!(closed <= bid * rfpa_win_prob(bid, other, alpha).unwrap() + 1e-12);
    }

    #[test]
    fn best_responses_respect_ros(
        inst in instance_strategy(2..=2, 1..=6),
        opp in prop::collection::vec(0.0f64..1.5, 6),
        alpha in 1.05f64..2.5,
    ) {
        let m = inst.num_queries();
        let opponent: Vec<f64> = opp[..m].to_vec();
        let profile = BidProfile::new(vec![vec![0.0; m], opponent]).unwrap();
        let scale = inst.scale();
        let specs = [
            MechanismSpec::spa(),
            MechanismSpec::rtruth(alpha).unwrap(),
            MechanismSpec::rfpa(alpha).unwrap(),
        ];
        for spec in specs {
            let br = best_response(&inst, 0, &profile, &spec, &ResponseOptions::default()).unwrap();
            let mut p = profile.clone();
            p.set_bids_of(0, &br.bids);
            let outcome = play(&inst, &p, &spec).unwrap();
            let slack = outcome.slack(&inst)[0];
            prop_assert!(slack >= -1e-9 * scale, "{:?}: slack {slack}", spec.kind);
            prop_assert!((inst.target(0) * outcome.value[0] - br.value).abs() <= 1e-9 * scale);
        }
        let br = fpa_best_response(&inst, 0, &profile, 1e-6).unwrap();
        let mut p = profile.clone();
        p.set_bids_of(0, &br.bids);
        let outcome = play(&inst, &p, &MechanismSpec::fpa()).unwrap();
        prop_assert!(outcome.slack(&inst)[0] >= -1e-9 * scale);
    }

    #[test]
    fn rfpa_bound_splits_into_matching_and_spend(
        alpha in 1.05f64..3.0,
        t in 0.0f64..1.0,
        gamma in 0.0f64..1.0,
    ) {
        let beta = (1.0 / alpha) * (alpha * alpha).powf(t);
        let g = g_rfpa(alpha, beta, gamma, 1.0 - gamma).unwrap();
        let parts = gamma * matching_coefficient(alpha, beta) + (1.0 - gamma) * rfpa_spend_coefficient(alpha, beta);
        prop_assert!((g - parts).abs() <= 1e-12);
        prop_assert!(g_rtruth(alpha, beta, gamma, 1.0 - gamma).unwrap().is_finite());
    }

    #[test]
    fn bound_is_stable_under_grid_refinement(alpha in 1.1f64..3.0, gamma in 0.1f64..0.9) {
        for variant in [BoundVariant::Rfpa, BoundVariant::Rtruth] {
            let coarse = eval_f(alpha, gamma, variant, &BetaGrid { points: 2048, refine: true }, Case1Term::EtaSpend).unwrap();
            let fine = eval_f(alpha, gamma, variant, &BetaGrid { points: 4096, refine: true }, Case1Term::EtaSpend).unwrap();
            prop_assert!((coarse.f_value - fine.f_value).abs() <= 1e-9);
            prop_assert!(fine.f_value <= fine.term_gamma && fine.f_value <= fine.g_min + 1e-12);
        }
    }

    #[test]
    fn rtruth_lower_bound_instances_hold(alpha in 1.1f64..3.5, log_eps in -5.0f64..-2.0) {
        let lb = make_rtruth_lb_instance(alpha, 10f64.powf(log_eps)).unwrap();
        let v = verify_lower_bound(&lb, &GammaScan::default()).unwrap();
        prop_assert!(v.check.is_equilibrium, "{:?}", v.check);
        prop_assert!(v.rel_error <= 1e-9);
        prop_assert!(v.measured_ratio < rtruth_lb_ratio(alpha).unwrap());
    }
}

#[test]
fn rtruth_lb_ratio_decreases_from_two() {
    let mut prev = 2.0;
    for k in 1..=100 {
        let alpha = 1.0 + 0.05 * k as f64;
        let r = rtruth_lb_ratio(alpha).unwrap();
        assert!(r > 1.0 && r < prev, "alpha {alpha}: {r} vs {prev}");
        prev = r;
    }
    assert!(2.0 - rtruth_lb_ratio(1.0001).unwrap() < 1e-6);
}
