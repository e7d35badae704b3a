use super::*;
use crate::geom::unit_square;
use crate::models::{AreaModel, CrttModel};
use crate::ops::Split;
use crate::tess::SegmentEnd;
use approx::assert_relative_eq;

fn empty() -> TTessellation<f64> {
    TTessellation::new_empty(unit_square::<f64>()).unwrap()
}

#[test]
fn merge_and_flip_hold_on_the_empty_tessellation() {
    // Only merges and flips are ever proposed; none applies to the empty
    // state, so the chain must stay put while counting proposals.
    let proposals = ProposalConfig::new(0.0, 0.5, 0.5);
    let mut chain = ChainState::new(empty(), CrttModel::new(1.9), proposals, 5);
    chain.run(50);
    assert_eq!(chain.tessellation().counts().internal_segments, 0);
    let c = chain.counters();
    assert_eq!(c.proposed[1] + c.proposed[2], 50);
    assert_eq!(c.accepted, [0, 0, 0]);
}

#[test]
fn same_seed_same_trajectory() {
    let run = || {
        let mut chain = ChainState::new(
            empty(),
            CrttModel::new(1.9),
            ProposalConfig::thirds(),
            31337,
        );
        chain.run(3000);
        chain
    };
    let a = run();
    let b = run();
    assert_eq!(a.counters().accepted, b.counters().accepted);
    assert!(a.tessellation().geometry_eq(b.tessellation(), 0.0));
    assert_eq!(a.energy(), b.energy());
}

#[test]
fn zero_iterations_change_nothing() {
    let mut chain = ChainState::new(empty(), CrttModel::new(1.0), ProposalConfig::thirds(), 1);
    chain.run(0);
    assert_eq!(chain.iteration(), 0);
    assert_eq!(chain.tessellation().counts().internal_segments, 0);
}

#[test]
fn hastings_ratio_of_first_split_is_four_tau_over_pi() {
    // Empty unit square, p_split = p_merge: r = tau * (2*4-4) / (pi * 1).
    let tau = 1.7;
    let model = CrttModel::new(tau);
    let proposals = ProposalConfig::thirds();
    let mut t = empty();
    let before = *t.stats();
    let cell = t.cell_ids()[0];
    let line = crate::geom::Line::new(std::f64::consts::FRAC_PI_2, -0.37);
    let receipt = t
        .apply(&crate::ops::Update::Split(Split { cell, line }))
        .unwrap();
    let r = hastings_ratio(&model, &proposals, 4.0, &before, &receipt);
    assert_relative_eq!(r, 4.0 * tau / std::f64::consts::PI, max_relative = 1e-12);

    // The reverse merge ratio is the exact reciprocal.
    let before_merge = *t.stats();
    let inv = receipt.inverse;
    let receipt_m = t.apply(&inv).unwrap();
    let rm = hastings_ratio(&model, &proposals, 4.0, &before_merge, &receipt_m);
    assert_relative_eq!(r * rm, 1.0, max_relative = 1e-12);
}

#[test]
fn detailed_balance_products_along_a_chain() {
    // r(T,U) * r(UT, U^-1) = 1 for split/merge pairs (1e-10 relative) and
    // exactly matching counts for flips.
    let model = CrttModel::new(1.9);
    let proposals = ProposalConfig::new(0.4, 0.25, 0.3);
    let mut chain = ChainState::new(empty(), model, proposals, 99);
    chain.run(2000);
    let t = &mut chain.tess;
    let perim = t.domain().perimeter();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut pairs = 0;
    while pairs < 300 {
        let update = match rng.gen_range(0..3) {
            0 => crate::ops::Update::Split(t.sample_uniform_split(&mut rng)),
            1 => match t.enumerate_merges().first() {
                Some(&m) => crate::ops::Update::Merge(m),
                None => continue,
            },
            _ => {
                let fs = t.enumerate_flips();
                if fs.is_empty() {
                    continue;
                }
                crate::ops::Update::Flip(fs[rng.gen_range(0..fs.len())])
            }
        };
        let before = *t.stats();
        let receipt = match t.apply(&update) {
            Ok(r) => r,
            Err(_) => continue,
        };
        let r1 = hastings_ratio(&model, &proposals, perim, &before, &receipt);
        let before_inv = *t.stats();
        let receipt_inv = t.apply(&receipt.inverse).expect("inverse applies");
        let r2 = hastings_ratio(&model, &proposals, perim, &before_inv, &receipt_inv);
        t.stats = before;
        if receipt.kind == UpdateKind::Flip {
            // Counter symmetry is exact.
            assert_eq!(receipt.delta.d_blocking, -receipt_inv.delta.d_blocking);
        }
        assert!(
            (r1 * r2 - 1.0).abs() <= 1e-10,
            "pair product {} for {:?}",
            r1 * r2,
            receipt.kind
        );
        pairs += 1;
    }
}

#[test]
fn split_acceptance_rate_matches_ratio() {
    // CRTT(tau = 0.5): the first split of the empty square is accepted with
    // probability 4 tau / pi < 1.
    let tau = 0.5;
    let expected = 4.0 * tau / std::f64::consts::PI;
    let n = 4000;
    let mut accepted = 0;
    for i in 0..n {
        let mut chain = ChainState::new(
            empty(),
            CrttModel::new(tau),
            ProposalConfig::thirds(),
            1000 + i as u64,
        );
        loop {
            let outcome = chain.step();
            if outcome.kind == Some(UpdateKind::Split) && outcome.evaluated {
                if outcome.accepted {
                    accepted += 1;
                }
                break;
            }
        }
    }
    let p = accepted as f64 / n as f64;
    let se = (expected * (1.0 - expected) / n as f64).sqrt();
    assert!(
        (p - expected).abs() < 3.0 * se,
        "acceptance {p} vs {expected}"
    );
}

#[test]
fn crtt_acceptance_rates_are_high() {
    let mut chain = ChainState::new(empty(), CrttModel::new(1.0), ProposalConfig::thirds(), 2024);
    chain.run(20_000);
    let c = chain.counters();
    assert!(c.acceptance_rate(UpdateKind::Split) > 0.5, "{:?}", c);
    assert!(c.acceptance_rate(UpdateKind::Merge) > 0.5, "{:?}", c);
}

#[test]
fn convergence_report_for_builtin_models() {
    let report =
        check_convergence_conditions(&CrttModel::new(1.9), &ProposalConfig::<f64>::thirds());
    assert_eq!(report.verdict, Verdict::Convergent);

    let no_flips = ProposalConfig::new(0.5, 0.0, 0.0);
    let report = check_convergence_conditions(&CrttModel::new(1.9), &no_flips);
    assert!(!report.aperiodic);
    assert_eq!(report.verdict, Verdict::Unknown);

    struct Flat;
    impl EnergyModel<f64> for Flat {
        fn energy_of(&self, _: &StatsCache<f64>) -> f64 {
            0.0
        }
        fn log_h_ratio(&self, _: &crate::tess::StatDelta<f64>) -> f64 {
            0.0
        }
        fn strictly_positive(&self) -> bool {
            false
        }
        fn stability_constant(&self) -> Option<f64> {
            None
        }
        fn name(&self) -> String {
            "flat".into()
        }
    }
    let report = check_convergence_conditions(&Flat, &ProposalConfig::thirds());
    assert_eq!(report.verdict, Verdict::Unknown);
}

#[test]
fn gnz_split_identity_crtt_small() {
    // phi = 1: E[nnbseint] = tau E[(2l - l(D)) / pi].
    let opts = GnzOptions {
        n_states: 1500,
        subsample_period: 20,
        burn_in: 2000,
        split_draws: 10,
        batches: 30,
    };
    let report = verify_gnz_split(
        &unit_square::<f64>(),
        &CrttModel::new(1.0),
        "phi = 1",
        |_, _| 1.0,
        &opts,
        42,
    )
    .unwrap();
    assert!(
        report.consistent(3.5),
        "lhs {} ({}) vs rhs {} ({})",
        report.lhs_estimate,
        report.lhs_se,
        report.rhs_estimate,
        report.rhs_se
    );
    assert!(
        report.lhs_estimate > 0.2,
        "chain barely moved: {}",
        report.lhs_estimate
    );
}

#[test]
fn gnz_split_identity_area_small() {
    let opts = GnzOptions {
        n_states: 1500,
        subsample_period: 20,
        burn_in: 2000,
        split_draws: 10,
        batches: 30,
    };
    let report = verify_gnz_split(
        &unit_square::<f64>(),
        &AreaModel::new(1.0, 10.0),
        "phi = 1",
        |_, _| 1.0,
        &opts,
        43,
    )
    .unwrap();
    assert!(
        report.consistent(3.5),
        "lhs {} ({}) vs rhs {} ({})",
        report.lhs_estimate,
        report.lhs_se,
        report.rhs_estimate,
        report.rhs_se
    );
}

#[test]
fn gnz_zero_functional_gives_zero() {
    let opts = GnzOptions {
        n_states: 100,
        subsample_period: 5,
        burn_in: 100,
        split_draws: 3,
        batches: 10,
    };
    let report = verify_gnz_split(
        &unit_square::<f64>(),
        &CrttModel::new(1.0),
        "phi = 0",
        |_, _| 0.0,
        &opts,
        1,
    )
    .unwrap();
    assert_eq!(report.lhs_estimate, 0.0);
    assert_eq!(report.rhs_estimate, 0.0);
    assert!(report.consistent(3.0));
}

#[test]
fn gnz_split_identity_with_length_functional() {
    // phi = length of the splitting segment. Unlike phi = 1, this couples
    // the identity to where splits land, so a biased split sampler (wrong
    // cell weights or a non-isotropic line draw) breaks the balance between
    // the sum of non-blocking segment lengths and the weighted integral.
    let opts = GnzOptions {
        n_states: 2500,
        subsample_period: 20,
        burn_in: 2000,
        split_draws: 10,
        batches: 30,
    };
    let report = verify_gnz_split(
        &unit_square::<f64>(),
        &CrttModel::new(1.4),
        "phi = split length",
        |f, _| f.length,
        &opts,
        45,
    )
    .unwrap();
    assert!(
        report.consistent(3.5),
        "lhs {} ({}) vs rhs {} ({})",
        report.lhs_estimate,
        report.lhs_se,
        report.rhs_estimate,
        report.rhs_se
    );
    assert!(report.lhs_estimate > 0.1);
}

#[test]
fn every_state_along_a_short_chain_is_valid() {
    // Validation period 1: every reached state (accepted or rolled back)
    // passes the full structural check for ten thousand steps.
    let mut chain = ChainState::new(empty(), CrttModel::new(1.9), ProposalConfig::thirds(), 1234)
        .with_validation_period(Some(1));
    chain.run(10_000);
    assert!(chain.tessellation().counts().internal_segments > 0);
}

#[test]
fn chain_runs_on_non_square_domains() {
    use crate::geom::{Point, Polygon};
    // A scalene triangle and an irregular hexagon: corner angles far from
    // a right angle exercise the boundary bookkeeping.
    let tri = Polygon::convex_domain(vec![
        Point::new(0.0, 0.0),
        Point::new(2.0, 0.3),
        Point::new(0.4, 1.5),
    ])
    .unwrap();
    let hexa = Polygon::convex_domain(vec![
        Point::new(0.0, 0.0),
        Point::new(1.2, -0.2),
        Point::new(2.0, 0.7),
        Point::new(1.8, 1.6),
        Point::new(0.7, 1.9),
        Point::new(-0.3, 0.9),
    ])
    .unwrap();
    for (domain, seed) in [(tri, 1u64), (hexa, 2)] {
        let area = domain.area();
        let t0 = TTessellation::new_empty(domain).unwrap();
        let mut chain = ChainState::new(t0, CrttModel::new(2.5), ProposalConfig::thirds(), seed);
        chain.run(4000);
        let t = chain.tessellation();
        assert!(t.validate().is_empty(), "{:?}", t.validate());
        assert!(t.counts().internal_segments > 0, "chain never grew");
        let total: f64 = t.cell_areas().iter().sum();
        assert!((total - area).abs() <= 1e-9 * area);
    }
}

#[test]
fn gnz_flip_identity_small() {
    // phi = length of the edge the flip adds; asymmetric under inversion.
    let opts = GnzOptions {
        n_states: 1500,
        subsample_period: 20,
        burn_in: 2000,
        split_draws: 1,
        batches: 30,
    };
    let report = verify_gnz_flip(
        &unit_square::<f64>(),
        &CrttModel::new(1.9),
        "phi = added edge length",
        |f, _| f.added_length,
        &opts,
        44,
    )
    .unwrap();
    assert!(
        report.consistent(3.5),
        "lhs {} ({}) vs rhs {} ({})",
        report.lhs_estimate,
        report.lhs_se,
        report.rhs_estimate,
        report.rhs_se
    );
    assert!(report.lhs_estimate > 0.1);
}

#[test]
fn uniformity_on_two_crossing_lines() {
    let pattern = LinePattern::new(
        unit_square::<f64>(),
        vec![
            crate::geom::Line::new(std::f64::consts::FRAC_PI_2, -0.45),
            crate::geom::Line::new(0.1, 0.55),
        ],
    )
    .unwrap();
    let report = conditional_uniformity_test(&pattern, 20_000, 5, 5, 77).unwrap();
    assert_eq!(report.counts.len(), 4);
    assert!(
        report.p_value > 0.01,
        "chi2 {} p {}",
        report.chi_square,
        report.p_value
    );
}

#[test]
fn uniformity_on_three_crossing_lines() {
    let pattern = LinePattern::new(
        unit_square::<f64>(),
        vec![
            crate::geom::Line::new(std::f64::consts::FRAC_PI_2, -0.45),
            crate::geom::Line::new(0.1, 0.25),
            crate::geom::Line::new(2.1, -0.684),
        ],
    )
    .unwrap();
    let report = conditional_uniformity_test(&pattern, 30_000, 5, 5, 78).unwrap();
    assert!(report.counts.len() > 4);
    assert!(
        report.p_value > 0.01,
        "chi2 {} p {}",
        report.chi_square,
        report.p_value
    );
}

#[test]
fn uniformity_single_state_is_trivial() {
    let pattern = LinePattern::new(
        unit_square::<f64>(),
        vec![crate::geom::Line::new(std::f64::consts::FRAC_PI_2, -0.3)],
    )
    .unwrap();
    let report = conditional_uniformity_test(&pattern, 100, 2, 5, 1).unwrap();
    assert_eq!(report.p_value, 1.0);
    assert_eq!(report.counts, vec![100]);
}

#[test]
fn energy_ring_keeps_latest() {
    let mut ring = EnergyRing::new(4);
    for i in 0..10u64 {
        ring.push((i, i as f64));
    }
    let v = ring.to_vec();
    assert_eq!(v.len(), 4);
    assert_eq!(v[0].0, 6);
    assert_eq!(v[3].0, 9);
}

#[test]
fn flip_end_enumeration_is_stable() {
    // Symmetric sanity check on SegmentEnd round-trips through flips.
    let mut chain = ChainState::new(empty(), CrttModel::new(2.5), ProposalConfig::thirds(), 404);
    chain.run(500);
    let t = &mut chain.tess;
    for f in t.enumerate_flips() {
        assert!(matches!(f.end, SegmentEnd::Tail | SegmentEnd::Head));
    }
}
