use super::*;
use crate::geom::{unit_square, Line, Point, Tolerance};
use crate::lines::{enumerate_ttessellations, match_state, LinePattern};
use crate::tess::{SegmentSpec, TTessellation};
use approx::assert_relative_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tol() -> Tolerance<f64> {
    Tolerance::new(1e-9, 1e-9)
}

fn vertical(x: f64) -> Line<f64> {
    Line::from_points(Point::new(x, 0.0), Point::new(x, 1.0), &tol()).unwrap()
}

fn horizontal(y: f64) -> Line<f64> {
    Line::from_points(Point::new(0.0, y), Point::new(1.0, y), &tol()).unwrap()
}

fn empty() -> TTessellation<f64> {
    TTessellation::new_empty(unit_square::<f64>()).unwrap()
}

/// Cross-check the incremental cache against a from-scratch recomputation.
fn assert_stats_consistent(t: &TTessellation<f64>) {
    let cached = *t.stats();
    let fresh = t.recompute_stats();
    assert_eq!(cached.internal_segments, fresh.internal_segments);
    assert_eq!(cached.non_blocking_segments, fresh.non_blocking_segments);
    assert_eq!(cached.blocking_segments, fresh.blocking_segments);
    assert_eq!(cached.internal_vertices, fresh.internal_vertices);
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + b.abs());
    assert!(close(cached.total_edge_length, fresh.total_edge_length));
    assert!(close(cached.sum_sq_cell_area, fresh.sum_sq_cell_area));
    assert!(close(cached.sum_angle_internal, fresh.sum_angle_internal));
    assert!(close(cached.sum_angle_boundary, fresh.sum_angle_boundary));
}

/// Grow a pseudo-random valid state by accepting uniform splits blindly.
fn grown(seed: u64, n_splits: usize) -> TTessellation<f64> {
    let mut t = empty();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_splits {
        let s = t.sample_uniform_split(&mut rng);
        t.apply(&Update::Split(s)).expect("sampled split applies");
    }
    t
}

#[test]
fn split_of_empty_square() {
    let mut t = empty();
    let cell = t.cell_ids()[0];
    let r = t
        .apply(&Update::Split(Split {
            cell,
            line: vertical(0.3),
        }))
        .unwrap();
    assert_eq!(r.delta.d_internal_segments, 1);
    assert_eq!(r.delta.d_non_blocking, 1);
    assert_eq!(r.delta.d_blocking, 0);
    assert_eq!(r.delta.d_internal_vertices, 0); // both ends on the boundary
    assert_eq!(r.xi, 0);
    assert_relative_eq!(r.added_edge_length, 1.0, max_relative = 1e-9);
    let c = t.counts();
    assert_eq!(
        (c.vertices, c.edges, c.cells, c.internal_segments),
        (6, 7, 2, 1)
    );
    let mut areas = t.cell_areas();
    areas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_relative_eq!(areas[0], 0.3, max_relative = 1e-9);
    assert_relative_eq!(areas[1], 0.7, max_relative = 1e-9);
    assert!(t.validate().is_empty(), "{:?}", t.validate());
    assert_stats_consistent(&t);
}

#[test]
fn split_then_inverse_merge_restores() {
    let mut t = grown(11, 6);
    let reference = t.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let s = t.sample_uniform_split(&mut rng);
    let r = t.apply(&Update::Split(s)).unwrap();
    assert!(!t.geometry_eq(&reference, 1e-9));
    t.apply(&r.inverse).unwrap();
    assert!(t.geometry_eq(&reference, 1e-9));
    assert_eq!(t.counts(), reference.counts());
    assert_stats_consistent(&t);
}

#[test]
fn abutting_chord_blocks_its_host() {
    // Full vertical chord A, then a horizontal chord B in the left cell
    // landing on A: A becomes blocking, merges = {B}, flips = 2 (ends of A).
    let mut t = empty();
    let cell = t.cell_ids()[0];
    let ra = t
        .apply(&Update::Split(Split {
            cell,
            line: vertical(0.5),
        }))
        .unwrap();
    let a_seg = match ra.inverse {
        Update::Merge(m) => m.segment,
        _ => unreachable!(),
    };
    let left_cell = *t
        .cell_ids()
        .iter()
        .find(|&&c| t.cell_polygon(c).centroid().x < 0.5)
        .unwrap();
    let rb = t
        .apply(&Update::Split(Split {
            cell: left_cell,
            line: horizontal(0.5),
        }))
        .unwrap();
    assert_eq!(rb.xi, 1);
    assert_eq!(rb.delta.d_non_blocking, 0); // +1 new, -1 converted host
    assert_eq!(rb.delta.d_blocking, 1);
    assert_eq!(rb.delta.d_internal_vertices, 1); // one end on A, one on the boundary
    let b_seg = match rb.inverse {
        Update::Merge(m) => m.segment,
        _ => unreachable!(),
    };
    let merges = t.enumerate_merges();
    assert_eq!(merges.len(), 1);
    assert_eq!(merges[0].segment, b_seg);
    let flips = t.enumerate_flips();
    assert_eq!(flips.len(), 2);
    assert!(flips.iter().all(|f| f.segment == a_seg));
    assert!(t.validate().is_empty());
    assert_stats_consistent(&t);
}

#[test]
fn xi_counts_non_blocking_hosts() {
    // Two full vertical chords; a horizontal chord across the middle cell
    // lands on both: xi = 2.
    let mut t = empty();
    let cell = t.cell_ids()[0];
    t.apply(&Update::Split(Split {
        cell,
        line: vertical(0.3),
    }))
    .unwrap();
    let mid = *t
        .cell_ids()
        .iter()
        .find(|&&c| t.cell_polygon(c).centroid().x > 0.3)
        .unwrap();
    t.apply(&Update::Split(Split {
        cell: mid,
        line: vertical(0.7),
    }))
    .unwrap();
    let mid = *t
        .cell_ids()
        .iter()
        .find(|&&c| {
            let x = t.cell_polygon(c).centroid().x;
            x > 0.3 && x < 0.7
        })
        .unwrap();
    let split = Split {
        cell: mid,
        line: horizontal(0.5),
    };
    assert_eq!(t.xi(&split).unwrap(), 2);
    let before_nnb = t.stats().non_blocking_segments;
    let r = t.apply(&Update::Split(split)).unwrap();
    assert_eq!(r.xi, 2);
    assert_eq!(
        t.stats().non_blocking_segments as i32,
        before_nnb as i32 + 1 - 2
    );
    assert_eq!(r.delta.d_internal_vertices, 2);
    assert!(t.validate().is_empty());
}

#[test]
fn flip_moves_the_junction_and_preserves_lines() {
    // A full vertical at 0.5, B horizontal abutting from the left.
    let spec_a = SegmentSpec {
        line: vertical(0.5),
        a: Point::new(0.5, 0.0),
        b: Point::new(0.5, 1.0),
    };
    let spec_b = SegmentSpec {
        line: horizontal(0.5),
        a: Point::new(0.0, 0.5),
        b: Point::new(0.5, 0.5),
    };
    let mut t =
        TTessellation::from_internal_segments(unit_square::<f64>(), &[spec_a, spec_b]).unwrap();
    let pattern_before = t.line_pattern();
    let a_seg = *t
        .internal_segment_ids()
        .iter()
        .find(|&&s| t.is_blocking(s))
        .unwrap();
    let reference = t.clone();

    // Enumerate the four states supported by this pattern; identify where we
    // are and where each flip lands.
    let pattern = LinePattern::new(unit_square::<f64>(), pattern_before.lines().to_vec()).unwrap();
    let states = enumerate_ttessellations(&pattern, 5).unwrap();
    assert_eq!(states.len(), 4);
    let here = match_state(&t, &states).expect("current state enumerated");

    let flips = t.enumerate_flips();
    assert_eq!(flips.len(), 2);
    let f = flips[0];
    let r = t.apply(&Update::Flip(f)).unwrap();
    assert_eq!(r.delta.d_internal_segments, 0);
    assert!(t.validate().is_empty(), "{:?}", t.validate());
    assert_stats_consistent(&t);
    // Lines unchanged, state moved to another enumerated T in T(L).
    assert_eq!(t.line_pattern().common_count(&pattern_before), 2);
    let there = match_state(&t, &states).expect("flipped state enumerated");
    assert_ne!(here, there);
    // After flipping an end of A, B runs across: A is now the abutting one.
    assert!(t.is_non_blocking(a_seg));

    // Reverse flip restores everything.
    t.apply(&r.inverse).unwrap();
    assert!(t.geometry_eq(&reference, 1e-9));
    assert_eq!(t.counts(), reference.counts());
    assert_stats_consistent(&t);
}

#[test]
fn random_walk_apply_inverse_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let mut t = empty();
    let mut tested = 0usize;
    for step in 0..400 {
        // Quick invertibility probe on a random applicable update.
        let kind = rng.gen_range(0..3);
        let update = match kind {
            0 => Some(Update::Split(t.sample_uniform_split(&mut rng))),
            1 => {
                let ms = t.enumerate_merges();
                if ms.is_empty() {
                    None
                } else {
                    Some(Update::Merge(ms[rng.gen_range(0..ms.len())]))
                }
            }
            _ => {
                let fs = t.enumerate_flips();
                if fs.is_empty() {
                    None
                } else {
                    Some(Update::Flip(fs[rng.gen_range(0..fs.len())]))
                }
            }
        };
        let Some(update) = update else { continue };
        let reference = t.clone();
        let receipt = match t.apply(&update) {
            Ok(r) => r,
            Err(ApplyError::DegenerateFlip(_)) => continue,
            Err(e) => panic!("step {step}: unexpected apply error {e}"),
        };
        t.apply(&receipt.inverse).expect("inverse applies");
        assert!(
            t.geometry_eq(&reference, 1e-9),
            "step {step}: inverse did not restore"
        );
        assert_eq!(t.counts(), reference.counts(), "step {step}");
        tested += 1;
        // Advance the walk with the same update; bias toward splits keeps
        // the state from collapsing to empty.
        let advance = if rng.gen_bool(0.7) {
            Update::Split(t.sample_uniform_split(&mut rng))
        } else {
            update
        };
        let _ = t.apply(&advance);
        if step % 50 == 0 {
            assert!(t.validate().is_empty(), "step {step}: {:?}", t.validate());
            assert_stats_consistent(&t);
        }
    }
    assert!(tested > 200, "too few invertibility probes: {tested}");
}

#[test]
fn enumeration_lengths_match_counters() {
    for seed in [3u64, 17, 29] {
        let t = grown(seed, 12);
        assert_eq!(
            t.enumerate_merges().len(),
            t.stats().non_blocking_segments as usize
        );
        assert_eq!(
            t.enumerate_flips().len(),
            2 * t.stats().blocking_segments as usize
        );
    }
}

#[test]
fn flip_delta_blocking_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(5150);
    let mut t = grown(20, 15);
    for _ in 0..200 {
        let fs = t.enumerate_flips();
        if fs.is_empty() {
            break;
        }
        let f = fs[rng.gen_range(0..fs.len())];
        let before = t.line_pattern();
        match t.apply(&Update::Flip(f)) {
            Ok(r) => {
                assert!(r.delta.d_blocking.abs() <= 2);
                assert_eq!(r.delta.d_internal_segments, 0);
                assert_eq!(t.line_pattern().common_count(&before), before.len());
            }
            Err(ApplyError::DegenerateFlip(_)) => continue,
            Err(e) => panic!("unexpected {e}"),
        }
    }
    assert!(t.validate().is_empty());
}

#[test]
fn greedy_emptier_reaches_empty() {
    for seed in [1u64, 2, 3, 4, 5] {
        let mut t = grown(seed, 14);
        let nseint = t.stats().internal_segments as usize;
        let max_edges = t
            .internal_segment_ids()
            .iter()
            .map(|&s| t.segment(s).edges.len())
            .max()
            .unwrap_or(1);
        let budget = 50 * nseint * max_edges;
        let applied = empty_out(&mut t, budget).expect("emptier terminates");
        assert_eq!(t.stats().internal_segments, 0);
        assert_eq!(t.counts().cells, 1);
        assert!(t.validate().is_empty());
        assert!(applied.len() <= budget);
    }
}

#[test]
fn uniform_split_picks_cells_by_perimeter() {
    // Two equal half-square cells: each should host about half the splits.
    let mut t = empty();
    let cell = t.cell_ids()[0];
    t.apply(&Update::Split(Split {
        cell,
        line: vertical(0.5),
    }))
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let n = 4000usize;
    let mut left = 0usize;
    for _ in 0..n {
        let s = t.sample_uniform_split(&mut rng);
        if t.cell_polygon(s.cell).centroid().x < 0.5 {
            left += 1;
        }
    }
    let p = left as f64 / n as f64;
    let se = (0.25f64 / n as f64).sqrt();
    assert!((p - 0.5).abs() < 3.0 * se, "left fraction {p}");
}

#[test]
fn uniform_split_chord_measure_ratio() {
    // Fraction of chords of the empty unit square hitting the centered
    // sub-square of side 1/2 equals the ratio of Haar masses, 1/2.
    let t = empty();
    let sub = crate::geom::Polygon::convex_domain(vec![
        Point::new(0.25, 0.25),
        Point::new(0.75, 0.25),
        Point::new(0.75, 0.75),
        Point::new(0.25, 0.75),
    ])
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(123);
    let n = 20_000usize;
    let mut hits = 0usize;
    for _ in 0..n {
        let s = t.sample_uniform_split(&mut rng);
        if crate::geom::chord(s.line, &sub, t.tolerance()).is_some() {
            hits += 1;
        }
    }
    let p = hits as f64 / n as f64;
    let se = (0.25f64 / n as f64).sqrt();
    assert!((p - 0.5).abs() < 3.0 * se, "hit fraction {p}");
}

#[test]
fn proposal_densities() {
    let mut t = empty();
    // Empty square: split density pi / (2*4 - 4) = pi / 4.
    assert_relative_eq!(
        t.split_density_uniform(),
        std::f64::consts::PI / 4.0,
        max_relative = 1e-12
    );
    assert!(t.merge_pmf_uniform().is_err());
    assert!(t.flip_pmf_uniform().is_err());
    let cell = t.cell_ids()[0];
    t.apply(&Update::Split(Split {
        cell,
        line: vertical(0.25),
    }))
    .unwrap();
    assert_relative_eq!(t.merge_pmf_uniform().unwrap(), 1.0, max_relative = 1e-12);
}

#[test]
fn inapplicable_updates_leave_state_unchanged() {
    let mut t = grown(8, 5);
    let reference = t.clone();
    // Merging a blocking or boundary segment must fail cleanly.
    for s in t.segment_ids() {
        if !t.is_non_blocking(s) {
            assert!(t.apply(&Update::Merge(Merge { segment: s })).is_err());
        }
        if !t.is_blocking(s) {
            assert!(t
                .apply(&Update::Flip(Flip {
                    segment: s,
                    end: crate::tess::SegmentEnd::Tail
                }))
                .is_err());
        }
    }
    assert!(t.geometry_eq(&reference, 0.0));
    assert_stats_consistent(&t);
}
