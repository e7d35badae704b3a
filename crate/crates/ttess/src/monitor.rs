//! Chain diagnostics and summary statistics: energy/acceptance traces,
//! segment survival versus time lag, Lorenz curves of cell areas, angle
//! histograms, and the CSV/SVG exports behind the command line tool.
//!
//! CSV schemas (one header row each):
//! - trace:    `iteration,energy,acc_split,acc_merge,acc_flip`
//! - survival: `lag,fraction`
//! - lorenz:   `x,y`
//! - angles:   `bin_low,bin_high,count`

use crate::lines::LinePattern;
use crate::real::Real;
use crate::tess::TTessellation;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MonitorError {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("need at least two snapshots for survival curves")]
    TooFewSnapshots,
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One row of the chain trace: iteration, energy, and cumulative
/// per-type acceptance rates.
#[derive(Clone, Copy, Debug)]
pub struct TraceRecord<S> {
    pub iteration: u64,
    pub energy: S,
    pub acc_split: f64,
    pub acc_merge: f64,
    pub acc_flip: f64,
}

/// Fraction of segments surviving across increasing time lags.
#[derive(Clone, Debug)]
pub struct SurvivalCurve {
    pub lags: Vec<usize>,
    pub fraction_common: Vec<f64>,
}

/// Lorenz curve of positive values: fraction of smallest cells versus the
/// fraction of total area they cover. Starts implicitly at (0,0), ends at
/// (1,1); the curve is convex and lies on or below the diagonal.
pub fn lorenz_curve<S: Real>(areas: &[S]) -> Result<Vec<(S, S)>, MonitorError> {
    if areas.is_empty() {
        return Err(MonitorError::EmptyInput("areas"));
    }
    let mut sorted: Vec<S> = areas.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite areas"));
    let total = sorted.iter().fold(S::zero(), |a, &x| a + x);
    let n = S::of(sorted.len() as f64);
    let mut acc = S::zero();
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            acc += a;
            (S::of((i + 1) as f64) / n, acc / total)
        })
        .collect())
}

/// Linear interpolation of a Lorenz curve at abscissa `x` in [0,1].
pub fn lorenz_at<S: Real>(curve: &[(S, S)], x: S) -> S {
    let mut prev = (S::zero(), S::zero());
    for &(cx, cy) in curve {
        if x <= cx {
            let w = cx - prev.0;
            if w <= S::zero() {
                return cy;
            }
            return prev.1 + (cy - prev.1) * (x - prev.0) / w;
        }
        prev = (cx, cy);
    }
    S::one()
}

/// Segment survival: average over snapshot pairs at each lag of the fraction
/// of supporting lines still present. Snapshots must be equally spaced in
/// chain time; empty-pattern terms are skipped.
pub fn segment_survival<S: Real>(
    snapshots: &[LinePattern<S>],
    lags: &[usize],
) -> Result<SurvivalCurve, MonitorError> {
    if snapshots.len() < 2 {
        return Err(MonitorError::TooFewSnapshots);
    }
    let mut fractions = Vec::with_capacity(lags.len());
    for &lag in lags {
        let mut acc = 0.0f64;
        let mut terms = 0usize;
        for t in 0..snapshots.len().saturating_sub(lag) {
            let a = &snapshots[t];
            let b = &snapshots[t + lag];
            if a.is_empty() {
                continue;
            }
            acc += a.common_count(b) as f64 / a.len() as f64;
            terms += 1;
        }
        fractions.push(if terms == 0 {
            f64::NAN
        } else {
            acc / terms as f64
        });
    }
    Ok(SurvivalCurve {
        lags: lags.to_vec(),
        fraction_common: fractions,
    })
}

/// Survival under strict segment identity: a segment counts as surviving
/// only while both its supporting line and its extremities are unchanged, so
/// flips (which shorten one segment and extend another) count as changes.
/// This is the "segments left unchanged" statistic; the line-identity
/// variant above only tracks the supporting lines.
pub fn segment_survival_strict<S: Real>(
    snapshots: &[TTessellation<S>],
    lags: &[usize],
) -> Result<SurvivalCurve, MonitorError> {
    if snapshots.len() < 2 {
        return Err(MonitorError::TooFewSnapshots);
    }
    let tol = crate::geom::Tolerance::for_domain(snapshots[0].domain());
    let eps = snapshots[0].domain().diameter() * S::of(1e-6);
    let sigs: Vec<_> = snapshots.iter().map(|t| t.segment_signature()).collect();
    let mut fractions = Vec::with_capacity(lags.len());
    for &lag in lags {
        let mut acc = 0.0f64;
        let mut terms = 0usize;
        for t in 0..sigs.len().saturating_sub(lag) {
            let a = &sigs[t];
            let b = &sigs[t + lag];
            if a.is_empty() {
                continue;
            }
            let common = a
                .iter()
                .filter(|(la, pa, qa)| {
                    b.iter().any(|(lb, pb, qb)| {
                        la.approx_eq(*lb, &tol)
                            && ((pa.dist(*pb) <= eps && qa.dist(*qb) <= eps)
                                || (pa.dist(*qb) <= eps && qa.dist(*pb) <= eps))
                    })
                })
                .count();
            acc += common as f64 / a.len() as f64;
            terms += 1;
        }
        fractions.push(if terms == 0 {
            f64::NAN
        } else {
            acc / terms as f64
        });
    }
    Ok(SurvivalCurve {
        lags: lags.to_vec(),
        fraction_common: fractions,
    })
}

/// Reference Lorenz curve for uniformly distributed areas: `y = x^2`,
/// emitted alongside empirical curves as a plotting aid.
pub fn lorenz_reference_curve<S: Real>(points: usize) -> Vec<(S, S)> {
    (1..=points.max(1))
        .map(|i| {
            let x = S::of(i as f64 / points as f64);
            (x, x * x)
        })
        .collect()
}

/// Histogram of acute junction angles over `(0, pi/2]`.
#[derive(Clone, Debug)]
pub struct AngleHistogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

pub fn angle_histogram<S: Real>(angles: &[S], bins: usize) -> Result<AngleHistogram, MonitorError> {
    if angles.is_empty() {
        return Err(MonitorError::EmptyInput("angles"));
    }
    let bins = bins.max(1);
    let top = std::f64::consts::FRAC_PI_2;
    let width = top / bins as f64;
    let mut counts = vec![0u64; bins];
    for &a in angles {
        let a = a.f64();
        let idx = ((a / width).ceil() as usize).clamp(1, bins) - 1;
        counts[idx] += 1;
    }
    let bin_edges = (0..=bins).map(|i| i as f64 * width).collect();
    Ok(AngleHistogram { bin_edges, counts })
}

/// Empirical CDF of a sample evaluated at `x`.
pub fn empirical_cdf<S: Real>(sample: &[S], x: S) -> f64 {
    if sample.is_empty() {
        return f64::NAN;
    }
    sample.iter().filter(|&&v| v <= x).count() as f64 / sample.len() as f64
}

pub fn trace_csv<S: Real>(records: &[TraceRecord<S>]) -> String {
    let mut out = String::from("iteration,energy,acc_split,acc_merge,acc_flip\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.iteration, r.energy, r.acc_split, r.acc_merge, r.acc_flip
        ));
    }
    out
}

pub fn survival_csv(curve: &SurvivalCurve) -> String {
    let mut out = String::from("lag,fraction\n");
    for (lag, f) in curve.lags.iter().zip(&curve.fraction_common) {
        out.push_str(&format!("{lag},{f}\n"));
    }
    out
}

pub fn lorenz_csv<S: Real>(curve: &[(S, S)]) -> String {
    let mut out = String::from("x,y\n");
    for (x, y) in curve {
        out.push_str(&format!("{x},{y}\n"));
    }
    out
}

pub fn angles_csv(hist: &AngleHistogram) -> String {
    let mut out = String::from("bin_low,bin_high,count\n");
    for (i, c) in hist.counts.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{}\n",
            hist.bin_edges[i],
            hist.bin_edges[i + 1],
            c
        ));
    }
    out
}

/// Render a tessellation as an SVG 1.1 drawing in domain coordinates.
/// With `color_segments`, internal segments are drawn in blue (blocking) or
/// orange (non-blocking); the domain boundary stays black.
pub fn render_svg<S: Real>(t: &TTessellation<S>, color_segments: bool) -> String {
    let vs = t.domain().vertices();
    let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
    let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for v in vs {
        min_x = min_x.min(v.x.f64());
        max_x = max_x.max(v.x.f64());
        min_y = min_y.min(v.y.f64());
        max_y = max_y.max(v.y.f64());
    }
    let w = max_x - min_x;
    let h = max_y - min_y;
    let pad = 0.02 * w.max(h);
    let stroke = 0.004 * w.max(h);
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         viewBox=\"{} {} {} {}\" width=\"600\" height=\"{}\">\n",
        min_x - pad,
        min_y - pad,
        w + 2.0 * pad,
        h + 2.0 * pad,
        (600.0 * (h + 2.0 * pad) / (w + 2.0 * pad)).round(),
    ));
    // Flip the y axis so the drawing matches mathematical orientation.
    out.push_str(&format!(
        "<g transform=\"matrix(1 0 0 -1 0 {})\" stroke-linecap=\"round\">\n",
        min_y + max_y
    ));
    for s in t.segment_ids() {
        let seg = t.segment(s);
        let color = if !seg.internal || !color_segments {
            "black"
        } else if seg.edges.len() == 1 {
            "#e07b00"
        } else {
            "#1f4e9c"
        };
        for &e in &seg.edges {
            let (a, b) = t.edge_points(e);
            out.push_str(&format!(
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"{}\"/>\n",
                a.x, a.y, b.x, b.y, color, stroke
            ));
        }
    }
    out.push_str("</g>\n</svg>\n");
    out
}

pub fn write_file(path: &std::path::Path, content: &str) -> Result<(), MonitorError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| MonitorError::Io {
                path: parent.display().to_string(),
                source: e,
            })?;
        }
    }
    std::fs::write(path, content).map_err(|e| MonitorError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{unit_square, Line, Point, Tolerance};
    use crate::lines::LinePattern;
    use crate::tess::{SegmentSpec, TTessellation};
    use approx::assert_relative_eq;

    #[test]
    fn lorenz_of_equal_areas_is_diagonal() {
        let curve = lorenz_curve(&[1.0f64, 1.0, 1.0, 1.0]).unwrap();
        for (i, (x, y)) in curve.iter().enumerate() {
            assert_relative_eq!(*x, (i + 1) as f64 / 4.0, max_relative = 1e-12);
            assert_relative_eq!(*y, *x, max_relative = 1e-12);
        }
    }

    #[test]
    fn lorenz_hand_computed_cases() {
        let curve = lorenz_curve(&[1.0f64, 3.0]).unwrap();
        assert_eq!(curve.len(), 2);
        assert_relative_eq!(curve[0].0, 0.5);
        assert_relative_eq!(curve[0].1, 0.25);
        assert_relative_eq!(curve[1].0, 1.0);
        assert_relative_eq!(curve[1].1, 1.0);

        let curve = lorenz_curve(&[1.0f64, 1.0, 2.0]).unwrap();
        assert_relative_eq!(curve[0].0, 1.0 / 3.0);
        assert_relative_eq!(curve[0].1, 0.25);
        assert_relative_eq!(curve[1].0, 2.0 / 3.0);
        assert_relative_eq!(curve[1].1, 0.5);
        assert_relative_eq!(curve[2].1, 1.0);
    }

    #[test]
    fn lorenz_lies_below_diagonal() {
        let curve = lorenz_curve(&[0.1f64, 0.5, 0.2, 1.7, 0.9]).unwrap();
        for (x, y) in &curve {
            assert!(*y <= x + 1e-12);
        }
        assert!(lorenz_curve::<f64>(&[]).is_err());
    }

    #[test]
    fn lorenz_interpolation() {
        let curve = lorenz_curve(&[1.0f64, 3.0]).unwrap();
        assert_relative_eq!(lorenz_at(&curve, 0.5), 0.25, max_relative = 1e-12);
        assert_relative_eq!(lorenz_at(&curve, 0.75), 0.625, max_relative = 1e-12);
        assert_relative_eq!(lorenz_at(&curve, 1.0), 1.0, max_relative = 1e-12);
    }

    fn pattern(lines: Vec<Line<f64>>) -> LinePattern<f64> {
        LinePattern::new(unit_square::<f64>(), lines).unwrap()
    }

    #[test]
    fn survival_of_identical_snapshots_is_one() {
        let p = pattern(vec![Line::new(0.3, 0.2), Line::new(1.2, -0.1)]);
        let snaps = vec![p.clone(), p.clone(), p.clone()];
        let curve = segment_survival(&snaps, &[0, 1, 2]).unwrap();
        assert_eq!(curve.fraction_common, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn survival_of_disjoint_snapshots_is_zero() {
        let a = pattern(vec![Line::new(0.3, 0.2)]);
        let b = pattern(vec![Line::new(1.2, -0.1)]);
        let curve = segment_survival(&[a, b], &[1]).unwrap();
        assert_eq!(curve.fraction_common, vec![0.0]);
        assert!(segment_survival(&[pattern(vec![])], &[0]).is_err());
    }

    #[test]
    fn angle_histogram_perpendicular_in_top_bin() {
        let t = TTessellation::from_internal_segments(
            unit_square::<f64>(),
            &[
                SegmentSpec {
                    line: Line::from_points(
                        Point::new(0.5, 0.0),
                        Point::new(0.5, 1.0),
                        &Tolerance::new(1e-9, 1e-9),
                    )
                    .unwrap(),
                    a: Point::new(0.5, 0.0),
                    b: Point::new(0.5, 1.0),
                },
                SegmentSpec {
                    line: Line::from_points(
                        Point::new(0.0, 0.5),
                        Point::new(1.0, 0.5),
                        &Tolerance::new(1e-9, 1e-9),
                    )
                    .unwrap(),
                    a: Point::new(0.0, 0.5),
                    b: Point::new(0.5, 0.5),
                },
            ],
        )
        .unwrap();
        let hist = angle_histogram(&t.vertex_angles(), 32).unwrap();
        let total: u64 = hist.counts.iter().sum();
        assert_eq!(hist.counts[31], total, "all angles are right angles");
        assert!(angle_histogram::<f64>(&[], 32).is_err());
    }

    #[test]
    fn uniform_angles_fill_bins_roughly_evenly() {
        let angles: Vec<f64> = (0..3200)
            .map(|i| (i as f64 + 0.5) / 3200.0 * std::f64::consts::FRAC_PI_2)
            .collect();
        let hist = angle_histogram(&angles, 32).unwrap();
        for c in &hist.counts {
            assert_eq!(*c, 100);
        }
    }

    #[test]
    fn trace_csv_round_trip() {
        let records = vec![
            TraceRecord {
                iteration: 1,
                energy: -0.5f64,
                acc_split: 0.9,
                acc_merge: 0.8,
                acc_flip: 1.0,
            },
            TraceRecord {
                iteration: 2,
                energy: -1.25,
                acc_split: 0.95,
                acc_merge: 0.75,
                acc_flip: 0.5,
            },
        ];
        let text = trace_csv(&records);
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("iteration,energy,acc_split,acc_merge,acc_flip")
        );
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[0].parse::<u64>().unwrap(), 1);
        assert_eq!(row[1].parse::<f64>().unwrap(), -0.5);
        assert_eq!(row[4].parse::<f64>().unwrap(), 1.0);
    }

    #[test]
    fn empty_tessellation_svg_has_boundary_only() {
        let t = TTessellation::new_empty(unit_square::<f64>()).unwrap();
        let svg = render_svg(&t, true);
        assert_eq!(svg.matches("<line ").count(), 4);
        assert!(svg.starts_with("<svg "));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn cdf_basics() {
        let sample = [0.1f64, 0.2, 0.3, 0.4];
        assert_relative_eq!(empirical_cdf(&sample, 0.25), 0.5);
        assert_relative_eq!(empirical_cdf(&sample, 1.0), 1.0);
    }
}
