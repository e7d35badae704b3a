//! Poisson line process sampling under the scaled Haar measure, and
//! brute-force enumeration of all T-tessellations supported by a small line
//! pattern. The enumeration is the test oracle for conditional uniformity:
//! it assembles candidate states purely geometrically and accepts exactly
//! those passing `validate()`-grade conditions.

use crate::geom::{chord, Line, Point, Polygon, Tolerance};
use crate::real::Real;
use crate::tess::{SegmentSpec, TTessellation};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PatternError {
    #[error("line {0} does not hit the domain")]
    LineMissesDomain(usize),
    #[error("lines {0} and {1} coincide within tolerance")]
    DuplicateLine(usize, usize),
    #[error("pattern has {k} lines, enumeration cap is {k_max}")]
    TooManyLines { k: usize, k_max: usize },
    #[error("pattern is in degenerate position: {0}")]
    DegeneratePosition(String),
    #[error("assembled state failed validation: {0}")]
    AssembledInvalid(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A finite pattern of distinct lines hitting a convex domain.
#[derive(Clone, Debug)]
pub struct LinePattern<S> {
    domain: Polygon<S>,
    lines: Vec<Line<S>>,
}

impl<S: Real> LinePattern<S> {
    pub fn new(domain: Polygon<S>, lines: Vec<Line<S>>) -> Result<Self, PatternError> {
        let tol = Tolerance::for_domain(&domain);
        for (i, l) in lines.iter().enumerate() {
            if chord(*l, &domain, &tol).is_none() {
                return Err(PatternError::LineMissesDomain(i));
            }
            for (j, m) in lines.iter().enumerate().take(i) {
                if l.approx_eq(*m, &tol) {
                    return Err(PatternError::DuplicateLine(j, i));
                }
            }
        }
        Ok(LinePattern { domain, lines })
    }

    pub(crate) fn new_unchecked(domain: Polygon<S>, lines: Vec<Line<S>>) -> Self {
        LinePattern { domain, lines }
    }

    pub fn domain(&self) -> &Polygon<S> {
        &self.domain
    }

    pub fn lines(&self) -> &[Line<S>] {
        &self.lines
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    /// Lines of `self` also present in `other`, matched within tolerance.
    pub fn common_count(&self, other: &LinePattern<S>) -> usize {
        let tol = Tolerance::for_domain(&self.domain);
        self.lines
            .iter()
            .filter(|l| other.lines.iter().any(|m| l.approx_eq(*m, &tol)))
            .count()
    }
}

/// One isotropic uniform random line hitting a convex polygon: rejection from
/// the covering disk, exact for the Haar measure restricted to hitting lines.
pub fn uniform_line_hitting<S: Real, R: Rng + ?Sized>(
    poly: &Polygon<S>,
    tol: &Tolerance<S>,
    rng: &mut R,
) -> Line<S> {
    let center = poly.centroid();
    let radius = poly.covering_radius(center);
    loop {
        let theta = rng.gen_range(S::zero()..S::PI());
        let line0 = Line::new(theta, S::zero());
        let c = line0.normal().dot(center);
        let p = rng.gen_range(c - radius..c + radius);
        let line = Line::new(theta, p);
        if chord(line, poly, tol).is_some() {
            return line;
        }
    }
}

/// Sample a Poisson line process of the given linear intensity (mean length
/// per unit area) restricted to lines hitting the domain. The line count is
/// Poisson with parameter `intensity * perimeter / pi`.
pub fn sample_poisson_lines<S: Real, R: Rng + ?Sized>(
    domain: &Polygon<S>,
    intensity: S,
    rng: &mut R,
) -> LinePattern<S> {
    assert!(intensity > S::zero(), "intensity must be positive");
    let tol = Tolerance::for_domain(domain);
    let lambda = (intensity * domain.perimeter() / S::PI()).f64();
    let count = Poisson::new(lambda).expect("positive rate").sample(rng) as usize;
    let lines = (0..count)
        .map(|_| uniform_line_hitting(domain, &tol, rng))
        .collect();
    LinePattern::new_unchecked(domain.clone(), lines)
}

pub fn serialize_pattern<S: Real>(pattern: &LinePattern<S>) -> String {
    let mut out = String::new();
    out.push_str("line-pattern v1\n");
    let vs = pattern.domain.vertices();
    writeln!(out, "domain {}", vs.len()).unwrap();
    for v in vs {
        writeln!(out, "{} {}", v.x, v.y).unwrap();
    }
    writeln!(out, "lines {}", pattern.lines.len()).unwrap();
    for l in &pattern.lines {
        writeln!(out, "{} {}", l.theta, l.p).unwrap();
    }
    out.push_str("end\n");
    out
}

pub fn parse_pattern<S: Real>(text: &str) -> Result<LinePattern<S>, PatternError> {
    let mut rows = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let mut need = |what: &str| {
        rows.next().ok_or_else(|| PatternError::Parse {
            line: 0,
            msg: format!("unexpected end of input, expected {what}"),
        })
    };
    let (ln, header) = need("header")?;
    if header != "line-pattern v1" {
        return Err(PatternError::Parse {
            line: ln,
            msg: format!("unknown header `{header}`"),
        });
    }
    let (ln, dom) = need("domain")?;
    let n: usize = dom
        .strip_prefix("domain ")
        .and_then(|r| r.trim().parse().ok())
        .ok_or_else(|| PatternError::Parse {
            line: ln,
            msg: "expected `domain <n>`".into(),
        })?;
    let mut vs = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, row) = need("domain vertex")?;
        let toks: Vec<&str> = row.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(PatternError::Parse {
                line: ln,
                msg: "expected `<x> <y>`".into(),
            });
        }
        let x = S::parse(toks[0]).ok_or_else(|| PatternError::Parse {
            line: ln,
            msg: "bad number".into(),
        })?;
        let y = S::parse(toks[1]).ok_or_else(|| PatternError::Parse {
            line: ln,
            msg: "bad number".into(),
        })?;
        vs.push(Point::new(x, y));
    }
    let domain = Polygon::convex_domain(vs).map_err(|e| PatternError::Parse {
        line: ln,
        msg: format!("bad domain: {e}"),
    })?;
    let (ln, lhdr) = need("lines")?;
    let k: usize = lhdr
        .strip_prefix("lines ")
        .and_then(|r| r.trim().parse().ok())
        .ok_or_else(|| PatternError::Parse {
            line: ln,
            msg: "expected `lines <k>`".into(),
        })?;
    let mut lines = Vec::with_capacity(k);
    for _ in 0..k {
        let (ln, row) = need("line")?;
        let toks: Vec<&str> = row.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(PatternError::Parse {
                line: ln,
                msg: "expected `<theta> <p>`".into(),
            });
        }
        let theta = S::parse(toks[0]).ok_or_else(|| PatternError::Parse {
            line: ln,
            msg: "bad number".into(),
        })?;
        let p = S::parse(toks[1]).ok_or_else(|| PatternError::Parse {
            line: ln,
            msg: "bad number".into(),
        })?;
        lines.push(Line::new(theta, p));
    }
    let (ln, end) = need("end")?;
    if end != "end" {
        return Err(PatternError::Parse {
            line: ln,
            msg: "expected `end`".into(),
        });
    }
    LinePattern::new(domain, lines)
}

/// Default cap on the pattern size for exhaustive enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 5;

#[derive(Clone, Copy, PartialEq, Eq)]
enum CrossStatus {
    Outside,
    Endpoint,
    Interior,
}

/// All T-tessellations supported by the pattern, assembled by depth-first
/// search over per-line segment choices. Requires general position: pairwise
/// crossings strictly inside the domain and well separated.
///
/// The number of supported tessellations grows super-exponentially with the
/// number of lines (roughly like `(k / log k)^k` up to an exponential
/// factor), hence the hard cap `k_max`.
pub fn enumerate_ttessellations<S: Real>(
    pattern: &LinePattern<S>,
    k_max: usize,
) -> Result<Vec<TTessellation<S>>, PatternError> {
    let k = pattern.lines.len();
    if k > k_max {
        return Err(PatternError::TooManyLines { k, k_max });
    }
    let tol = Tolerance::for_domain(&pattern.domain);
    let sep = tol.eps_len * S::of(100.0);

    if k == 0 {
        let t = TTessellation::new_empty(pattern.domain.clone())
            .map_err(|e| PatternError::DegeneratePosition(e.to_string()))?;
        return Ok(vec![t]);
    }

    // Chord of each line, as a parameter interval.
    let mut chords = Vec::with_capacity(k);
    for (i, l) in pattern.lines.iter().enumerate() {
        let (a, b) = chord(*l, &pattern.domain, &tol).ok_or(PatternError::LineMissesDomain(i))?;
        chords.push((l.param_of(a), l.param_of(b)));
    }

    // Crossings strictly inside the domain subdivide both chords.
    // breakpoints[i] lists (param on line i, other line index).
    let mut breakpoints: Vec<Vec<(S, usize)>> = vec![Vec::new(); k];
    for i in 0..k {
        for j in (i + 1)..k {
            let q = match pattern.lines[i].intersection(pattern.lines[j], &tol) {
                Some(q) => q,
                None => continue,
            };
            let ti = pattern.lines[i].param_of(q);
            let tj = pattern.lines[j].param_of(q);
            let inside_i = ti > chords[i].0 + sep && ti < chords[i].1 - sep;
            let inside_j = tj > chords[j].0 + sep && tj < chords[j].1 - sep;
            let outside_i = ti < chords[i].0 - sep || ti > chords[i].1 + sep;
            let outside_j = tj < chords[j].0 - sep || tj > chords[j].1 + sep;
            if inside_i && inside_j {
                breakpoints[i].push((ti, j));
                breakpoints[j].push((tj, i));
            } else if !(outside_i || outside_j) {
                return Err(PatternError::DegeneratePosition(format!(
                    "crossing of lines {i} and {j} too close to the boundary"
                )));
            }
        }
    }

    // Per-line stop lists: chord tail, crossings in order, chord head.
    // stops[i][idx] = parameter; cross_idx maps (i, j) -> breakpoint index.
    let mut stops: Vec<Vec<S>> = Vec::with_capacity(k);
    let mut cross_idx: std::collections::HashMap<(usize, usize), usize> =
        std::collections::HashMap::new();
    for i in 0..k {
        breakpoints[i].sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite params"));
        for w in breakpoints[i].windows(2) {
            if w[1].0 - w[0].0 <= sep {
                return Err(PatternError::DegeneratePosition(format!(
                    "two crossings nearly coincide on line {i}"
                )));
            }
        }
        let mut list = vec![chords[i].0];
        for (idx, (t, j)) in breakpoints[i].iter().enumerate() {
            cross_idx.insert((i, *j), idx + 1);
            list.push(*t);
        }
        list.push(chords[i].1);
        stops.push(list);
    }

    // Depth-first search over (lo, hi) stop index choices per line.
    let mut choice: Vec<(usize, usize)> = Vec::with_capacity(k);
    let mut out = Vec::new();
    dfs(pattern, &stops, &cross_idx, &mut choice, &mut out)?;
    Ok(out)
}

fn status(choice: (usize, usize), idx: usize) -> CrossStatus {
    if idx == choice.0 || idx == choice.1 {
        CrossStatus::Endpoint
    } else if idx > choice.0 && idx < choice.1 {
        CrossStatus::Interior
    } else {
        CrossStatus::Outside
    }
}

fn pair_ok(a: CrossStatus, b: CrossStatus) -> bool {
    use CrossStatus::*;
    matches!(
        (a, b),
        (Outside, Outside)
            | (Outside, Interior)
            | (Interior, Outside)
            | (Interior, Endpoint)
            | (Endpoint, Interior)
    )
}

fn dfs<S: Real>(
    pattern: &LinePattern<S>,
    stops: &[Vec<S>],
    cross_idx: &std::collections::HashMap<(usize, usize), usize>,
    choice: &mut Vec<(usize, usize)>,
    out: &mut Vec<TTessellation<S>>,
) -> Result<(), PatternError> {
    let k = pattern.lines.len();
    let i = choice.len();
    if i == k {
        let specs: Vec<SegmentSpec<S>> = (0..k)
            .map(|j| {
                let l = pattern.lines[j];
                SegmentSpec {
                    line: l,
                    a: l.point_at(stops[j][choice[j].0]),
                    b: l.point_at(stops[j][choice[j].1]),
                }
            })
            .collect();
        let t = TTessellation::from_internal_segments(pattern.domain.clone(), &specs)
            .map_err(|e| PatternError::AssembledInvalid(e.to_string()))?;
        let report = t.validate();
        if !report.is_empty() {
            return Err(PatternError::AssembledInvalid(format!(
                "search produced an invalid state: {}",
                report[0]
            )));
        }
        out.push(t);
        return Ok(());
    }
    let last = stops[i].len() - 1;
    for lo in 0..last {
        'hi: for hi in (lo + 1)..=last {
            for j in 0..i {
                // Crossing of lines i and j, if it subdivides both.
                let (bi, bj) = match (cross_idx.get(&(i, j)), cross_idx.get(&(j, i))) {
                    (Some(&bi), Some(&bj)) => (bi, bj),
                    _ => continue,
                };
                if !pair_ok(status((lo, hi), bi), status(choice[j], bj)) {
                    continue 'hi;
                }
            }
            choice.push((lo, hi));
            dfs(pattern, stops, cross_idx, choice, out)?;
            choice.pop();
        }
    }
    Ok(())
}

/// Number of T-tessellations supported by the pattern.
pub fn nttl<S: Real>(pattern: &LinePattern<S>, k_max: usize) -> Result<usize, PatternError> {
    Ok(enumerate_ttessellations(pattern, k_max)?.len())
}

/// Index of the enumerated state geometrically equal to `t`, if any.
pub fn match_state<S: Real>(t: &TTessellation<S>, states: &[TTessellation<S>]) -> Option<usize> {
    let eps = t.domain().diameter() * S::of(1e-6);
    states.iter().position(|s| t.geometry_eq(s, eps))
}

/// Whether the flip graph over an enumerated family of states is connected.
/// Errors if a flip lands outside the family (it never should: flips
/// preserve the supporting lines).
pub fn flip_graph_connected<S: Real>(states: &[TTessellation<S>]) -> Result<bool, PatternError> {
    let m = states.len();
    if m <= 1 {
        return Ok(true);
    }
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let r = find(parent, parent[i]);
            parent[i] = r;
        }
        parent[i]
    }
    let mut parent: Vec<usize> = (0..m).collect();
    for (i, state) in states.iter().enumerate() {
        for f in state.enumerate_flips() {
            let mut probe = state.clone();
            if probe.apply(&crate::ops::Update::Flip(f)).is_ok() {
                let j = match_state(&probe, states).ok_or_else(|| {
                    PatternError::AssembledInvalid("a flip left the enumerated set".into())
                })?;
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri] = rj;
            }
        }
    }
    let root = find(&mut parent, 0);
    Ok((0..m).all(|i| find(&mut parent, i) == root))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::unit_square;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cross_pattern() -> LinePattern<f64> {
        // Two lines crossing inside the unit square.
        LinePattern::new(
            unit_square::<f64>(),
            vec![
                Line::new(std::f64::consts::FRAC_PI_2, -0.45), // vertical x = 0.45
                Line::new(0.1, 0.55),
            ],
        )
        .unwrap()
    }

    #[test]
    fn enumerate_empty_pattern() {
        let p = LinePattern::new(unit_square::<f64>(), vec![]).unwrap();
        assert_eq!(nttl(&p, 5).unwrap(), 1);
    }

    #[test]
    fn enumerate_single_line() {
        let p = LinePattern::new(
            unit_square::<f64>(),
            vec![Line::new(std::f64::consts::FRAC_PI_2, -0.3)],
        )
        .unwrap();
        let states = enumerate_ttessellations(&p, 5).unwrap();
        assert_eq!(states.len(), 1);
        assert_eq!(states[0].counts().internal_segments, 1);
        assert_eq!(states[0].counts().cells, 2);
    }

    #[test]
    fn enumerate_two_crossing_lines() {
        let states = enumerate_ttessellations(&cross_pattern(), 5).unwrap();
        assert_eq!(states.len(), 4);
        for t in &states {
            assert!(t.validate().is_empty());
            assert_eq!(t.counts().internal_segments, 2);
            // One full segment, one abutting: 1 blocking + 1 non-blocking.
            assert_eq!(t.counts().blocking_segments, 1);
            assert_eq!(t.counts().non_blocking_segments, 1);
        }
        // All four states are distinct.
        for i in 0..4 {
            assert_eq!(match_state(&states[i], &states), Some(i));
        }
    }

    #[test]
    fn enumerate_two_disjoint_lines() {
        let p = LinePattern::new(
            unit_square::<f64>(),
            vec![
                Line::new(std::f64::consts::FRAC_PI_2, -0.2),
                Line::new(std::f64::consts::FRAC_PI_2, -0.8),
            ],
        )
        .unwrap();
        assert_eq!(nttl(&p, 5).unwrap(), 1);
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let p = cross_pattern();
        assert!(matches!(
            enumerate_ttessellations(&p, 1),
            Err(PatternError::TooManyLines { k: 2, k_max: 1 })
        ));
    }

    #[test]
    fn enumerated_states_carry_the_pattern() {
        let p = cross_pattern();
        let tol = Tolerance::for_domain(p.domain());
        for t in enumerate_ttessellations(&p, 5).unwrap() {
            let lp = t.line_pattern();
            assert_eq!(lp.len(), 2);
            for l in p.lines() {
                assert!(lp.lines().iter().any(|m| m.approx_eq(*l, &tol)));
            }
        }
    }

    #[test]
    fn nttl_invariant_under_rigid_motion() {
        let p = cross_pattern();
        let base = nttl(&p, 5).unwrap();
        // Rotate by 0.3 rad and translate by (2, 1): map both the domain and
        // the lines through two carried points.
        let rot = |q: Point<f64>| -> Point<f64> {
            let (s, c) = (0.3f64.sin(), 0.3f64.cos());
            Point::new(c * q.x - s * q.y + 2.0, s * q.x + c * q.y + 1.0)
        };
        let tol = Tolerance::for_domain(p.domain());
        let verts = p.domain().vertices().iter().map(|&v| rot(v)).collect();
        let dom = Polygon::convex_domain(verts).unwrap();
        let lines = p
            .lines()
            .iter()
            .map(|l| Line::from_points(rot(l.point_at(0.0)), rot(l.point_at(1.0)), &tol).unwrap())
            .collect();
        let moved = LinePattern::new(dom, lines).unwrap();
        assert_eq!(nttl(&moved, 5).unwrap(), base);
    }

    fn three_crossing_lines() -> LinePattern<f64> {
        LinePattern::new(
            unit_square::<f64>(),
            vec![
                Line::new(std::f64::consts::FRAC_PI_2, -0.45),
                Line::new(0.1, 0.25),
                Line::new(2.1, -0.684),
            ],
        )
        .unwrap()
    }

    #[test]
    fn three_crossing_lines_oracle_self_consistency() {
        // Pairwise crossings inside the square; assert only that the oracle
        // output is valid, distinct, pattern-preserving and flip-connected.
        let p = three_crossing_lines();
        let states = enumerate_ttessellations(&p, 5).unwrap();
        assert!(
            states.len() > 4,
            "three crossing lines support {} states",
            states.len()
        );
        for (i, t) in states.iter().enumerate() {
            assert_eq!(t.counts().internal_segments, 3);
            assert_eq!(match_state(t, &states), Some(i), "duplicate state");
        }
        assert!(flip_graph_connected(&states).unwrap());
    }

    #[test]
    fn four_line_flip_graph_is_connected() {
        let p = LinePattern::new(
            unit_square::<f64>(),
            vec![
                Line::new(std::f64::consts::FRAC_PI_2, -0.45),
                Line::new(0.1, 0.25),
                Line::new(2.1, -0.684),
                Line::new(0.9, 0.1),
            ],
        )
        .unwrap();
        let states = enumerate_ttessellations(&p, 5).unwrap();
        assert!(
            states.len() > 4,
            "four crossing lines support {} states",
            states.len()
        );
        assert!(flip_graph_connected(&states).unwrap());
    }

    #[test]
    fn poisson_count_matches_haar_mass() {
        let sq = unit_square::<f64>();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 20_000;
        let mut total = 0usize;
        for _ in 0..n {
            let p = sample_poisson_lines(&sq, 1.0, &mut rng);
            total += p.len();
            for l in p.lines() {
                assert!(chord(*l, &sq, &Tolerance::for_domain(&sq)).is_some());
            }
        }
        let mean = total as f64 / n as f64;
        let lambda = 4.0 / std::f64::consts::PI;
        let se = (lambda / n as f64).sqrt();
        assert!(
            (mean - lambda).abs() < 3.0 * se,
            "mean {mean} vs {lambda} (se {se})"
        );
    }

    #[test]
    fn poisson_intensity_scales() {
        let sq = unit_square::<f64>();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 20_000;
        let total: usize = (0..n)
            .map(|_| sample_poisson_lines(&sq, 2.0, &mut rng).len())
            .sum();
        let mean = total as f64 / n as f64;
        let lambda = 8.0 / std::f64::consts::PI;
        let se = (lambda / n as f64).sqrt();
        assert!((mean - lambda).abs() < 3.0 * se, "mean {mean} vs {lambda}");
    }

    #[test]
    fn pattern_round_trip() {
        let p = cross_pattern();
        let text = serialize_pattern(&p);
        let back: LinePattern<f64> = parse_pattern(&text).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back.common_count(&p), 2);
    }
}
