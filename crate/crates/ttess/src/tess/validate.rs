//! Structural validation: every defining property of a T-tessellation plus
//! the counting identities and cache consistency, reported as a list of
//! violations rather than panics so that deliberately broken fixtures can be
//! inspected.

use super::{CellId, EdgeId, SegmentId, TTessellation, VertexId};
use crate::geom::dist_point_segment;
use crate::real::Real;

/// One violated invariant. An empty report means the state is a valid
/// T-tessellation with a consistent cache.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    CornerDegree {
        vertex: VertexId,
        degree: usize,
    },
    NotTVertex {
        vertex: VertexId,
        degree: usize,
    },
    BoundaryFlagWrong {
        vertex: VertexId,
    },
    DegenerateEdge {
        edge: EdgeId,
    },
    EdgeEndsUnordered {
        edge: EdgeId,
    },
    EdgeOffLine {
        edge: EdgeId,
    },
    EdgeSideCount {
        edge: EdgeId,
        sides: usize,
    },
    EdgeCellMismatch {
        edge: EdgeId,
    },
    VertexInsideEdge {
        edge: EdgeId,
        vertex: VertexId,
    },
    EmptySegment {
        segment: SegmentId,
    },
    SegmentNotContiguous {
        segment: SegmentId,
    },
    AlignedSegments {
        first: SegmentId,
        second: SegmentId,
    },
    InternalFlagWrong {
        segment: SegmentId,
    },
    SegmentEndsAtCorner {
        segment: SegmentId,
    },
    BrokenCellCycle {
        cell: CellId,
    },
    NonPositiveCellArea {
        cell: CellId,
    },
    CellCacheMismatch {
        cell: CellId,
    },
    CellAreasDontSum {
        total: f64,
        domain: f64,
    },
    CountingIdentity {
        feature: &'static str,
        expected: usize,
        got: usize,
    },
    StatsMismatch {
        field: &'static str,
        cached: f64,
        recomputed: f64,
    },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::CornerDegree { vertex, degree } => {
                write!(f, "domain corner {vertex} has degree {degree}, expected 2")
            }
            Violation::NotTVertex { vertex, degree } => {
                write!(f, "vertex {vertex} (degree {degree}) is not a T-vertex")
            }
            Violation::BoundaryFlagWrong { vertex } => {
                write!(f, "vertex {vertex} has an incorrect boundary flag")
            }
            Violation::DegenerateEdge { edge } => write!(f, "edge {edge} has near-zero length"),
            Violation::EdgeEndsUnordered { edge } => {
                write!(
                    f,
                    "edge {edge} endpoints are not ordered along the line direction"
                )
            }
            Violation::EdgeOffLine { edge } => {
                write!(f, "edge {edge} strays from its segment's supporting line")
            }
            Violation::EdgeSideCount { edge, sides } => {
                write!(
                    f,
                    "edge {edge} has {sides} side cells, inconsistent with its position"
                )
            }
            Violation::EdgeCellMismatch { edge } => {
                write!(f, "edge {edge} side cells disagree with the cell cycles")
            }
            Violation::VertexInsideEdge { edge, vertex } => {
                write!(f, "vertex {vertex} lies strictly inside edge {edge}")
            }
            Violation::EmptySegment { segment } => write!(f, "segment {segment} has no edges"),
            Violation::SegmentNotContiguous { segment } => {
                write!(f, "segment {segment} edges are not contiguous")
            }
            Violation::AlignedSegments { first, second } => {
                write!(f, "segments {first} and {second} share a supporting line")
            }
            Violation::InternalFlagWrong { segment } => {
                write!(f, "segment {segment} internal flag is wrong")
            }
            Violation::SegmentEndsAtCorner { segment } => {
                write!(f, "internal segment {segment} ends at a domain corner")
            }
            Violation::BrokenCellCycle { cell } => write!(f, "cell {cell} cycle is not closed"),
            Violation::NonPositiveCellArea { cell } => {
                write!(f, "cell {cell} has non-positive area")
            }
            Violation::CellCacheMismatch { cell } => {
                write!(f, "cell {cell} cached area/perimeter mismatch")
            }
            Violation::CellAreasDontSum { total, domain } => {
                write!(f, "cell areas sum to {total}, domain area is {domain}")
            }
            Violation::CountingIdentity {
                feature,
                expected,
                got,
            } => {
                write!(f, "{feature} count off: expected {expected}, got {got}")
            }
            Violation::StatsMismatch {
                field,
                cached,
                recomputed,
            } => {
                write!(
                    f,
                    "stats cache field {field}: cached {cached}, recomputed {recomputed}"
                )
            }
        }
    }
}

impl<S: Real> TTessellation<S> {
    /// Check every structural invariant; returns the list of violations.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let eps = self.tol.eps_len;
        let rel = S::of(1e-9).max(S::epsilon() * S::of(100.0));

        // Vertices.
        for (vi, vert) in self.verts.iter() {
            let v = VertexId(vi);
            let deg = vert.edges.len();
            if vert.corner {
                if deg != 2 {
                    out.push(Violation::CornerDegree {
                        vertex: v,
                        degree: deg,
                    });
                }
            } else if deg != 3 || self.through_segment_at(v).is_none() {
                out.push(Violation::NotTVertex {
                    vertex: v,
                    degree: deg,
                });
            }
            let on_bnd = self.on_domain_boundary(vert.position);
            if on_bnd != vert.on_boundary {
                out.push(Violation::BoundaryFlagWrong { vertex: v });
            }
        }

        // Edges.
        for (ei, edge) in self.edges.iter() {
            let e = EdgeId(ei);
            let (a, b) = self.edge_points(e);
            if a.dist(b) <= eps {
                out.push(Violation::DegenerateEdge { edge: e });
                continue;
            }
            let line = self.segs.get(edge.segment.0).line;
            if line.param_of(a) >= line.param_of(b) {
                out.push(Violation::EdgeEndsUnordered { edge: e });
            }
            if line.signed_distance(a).abs() > eps || line.signed_distance(b).abs() > eps {
                out.push(Violation::EdgeOffLine { edge: e });
            }
            let sides = edge.cells.iter().flatten().count();
            let expected = if self.segs.get(edge.segment.0).internal {
                2
            } else {
                1
            };
            if sides != expected {
                out.push(Violation::EdgeSideCount { edge: e, sides });
            }
            for (side, cell) in edge.cells.iter().enumerate() {
                if let Some(c) = cell {
                    let hit = self
                        .cells
                        .get(c.0)
                        .cycle
                        .iter()
                        .any(|de| de.edge == e && de.forward == (side == 0));
                    if !hit {
                        out.push(Violation::EdgeCellMismatch { edge: e });
                    }
                }
            }
            // No vertex strictly between the endpoints.
            for (wi, w) in self.verts.iter() {
                let wid = VertexId(wi);
                if wid == edge.ends[0] || wid == edge.ends[1] {
                    continue;
                }
                if dist_point_segment(w.position, a, b) <= eps {
                    out.push(Violation::VertexInsideEdge {
                        edge: e,
                        vertex: wid,
                    });
                }
            }
        }

        // Segments.
        let seg_ids: Vec<u32> = self.segs.iter().map(|(i, _)| i).collect();
        for &si in &seg_ids {
            let s = SegmentId(si);
            let seg = self.segs.get(si);
            if seg.edges.is_empty() {
                out.push(Violation::EmptySegment { segment: s });
                continue;
            }
            for w in seg.edges.windows(2) {
                if self.edges.get(w[0].0).ends[1] != self.edges.get(w[1].0).ends[0] {
                    out.push(Violation::SegmentNotContiguous { segment: s });
                    break;
                }
            }
            let boundary_line = self
                .domain_side_lines()
                .iter()
                .any(|l| l.approx_eq(seg.line, &self.tol));
            if seg.internal == boundary_line {
                out.push(Violation::InternalFlagWrong { segment: s });
            }
            if seg.internal {
                for end in super::SegmentEnd::BOTH {
                    let v = self.segment_end_vertex(s, end);
                    if self.verts.get(v.0).corner {
                        out.push(Violation::SegmentEndsAtCorner { segment: s });
                    }
                }
            }
        }
        for (k, &si) in seg_ids.iter().enumerate() {
            for &sj in &seg_ids[k + 1..] {
                let (a, b) = (self.segs.get(si), self.segs.get(sj));
                if a.line.approx_eq(b.line, &self.tol) {
                    out.push(Violation::AlignedSegments {
                        first: SegmentId(si),
                        second: SegmentId(sj),
                    });
                }
            }
        }

        // Cells.
        let mut area_total = S::zero();
        for (ci, cell) in self.cells.iter() {
            let c = CellId(ci);
            let cyc = &cell.cycle;
            if cyc.len() < 3 {
                out.push(Violation::BrokenCellCycle { cell: c });
                continue;
            }
            let mut closed = true;
            for k in 0..cyc.len() {
                let cur = &cyc[k];
                let nxt = &cyc[(k + 1) % cyc.len()];
                let head = {
                    let e = self.edges.get(cur.edge.0);
                    if cur.forward {
                        e.ends[1]
                    } else {
                        e.ends[0]
                    }
                };
                let tail = {
                    let e = self.edges.get(nxt.edge.0);
                    if nxt.forward {
                        e.ends[0]
                    } else {
                        e.ends[1]
                    }
                };
                if head != tail {
                    closed = false;
                }
            }
            if !closed {
                out.push(Violation::BrokenCellCycle { cell: c });
                continue;
            }
            let poly = self.cell_polygon(c);
            let area = poly.area();
            if area <= S::zero() {
                out.push(Violation::NonPositiveCellArea { cell: c });
            }
            area_total += area;
            let scale = S::one() + area.abs();
            if (area - cell.area).abs() > rel * scale
                || (poly.perimeter() - cell.perimeter).abs() > rel * (S::one() + cell.perimeter)
            {
                out.push(Violation::CellCacheMismatch { cell: c });
            }
        }
        let da = self.domain.area();
        if (area_total - da).abs() > rel * da {
            out.push(Violation::CellAreasDontSum {
                total: area_total.f64(),
                domain: da.f64(),
            });
        }

        // Counting identities (1)-(3).
        let nved = self.domain.vertices().len();
        let nseint = self.stats.internal_segments as usize;
        let checks = [
            ("vertex", nved + 2 * nseint, self.verts.len()),
            ("edge", nved + 3 * nseint, self.edges.len()),
            ("cell", nseint + 1, self.cells.len()),
        ];
        for (feature, expected, got) in checks {
            if expected != got {
                out.push(Violation::CountingIdentity {
                    feature,
                    expected,
                    got,
                });
            }
        }

        // Cache consistency.
        let fresh = self.recompute_stats();
        let ints: [(&'static str, u32, u32); 4] = [
            (
                "internal_segments",
                self.stats.internal_segments,
                fresh.internal_segments,
            ),
            (
                "non_blocking_segments",
                self.stats.non_blocking_segments,
                fresh.non_blocking_segments,
            ),
            (
                "blocking_segments",
                self.stats.blocking_segments,
                fresh.blocking_segments,
            ),
            (
                "internal_vertices",
                self.stats.internal_vertices,
                fresh.internal_vertices,
            ),
        ];
        for (field, cached, recomputed) in ints {
            if cached != recomputed {
                out.push(Violation::StatsMismatch {
                    field,
                    cached: cached as f64,
                    recomputed: recomputed as f64,
                });
            }
        }
        let reals: [(&'static str, S, S); 4] = [
            (
                "total_edge_length",
                self.stats.total_edge_length,
                fresh.total_edge_length,
            ),
            (
                "sum_sq_cell_area",
                self.stats.sum_sq_cell_area,
                fresh.sum_sq_cell_area,
            ),
            (
                "sum_angle_internal",
                self.stats.sum_angle_internal,
                fresh.sum_angle_internal,
            ),
            (
                "sum_angle_boundary",
                self.stats.sum_angle_boundary,
                fresh.sum_angle_boundary,
            ),
        ];
        for (field, cached, recomputed) in reals {
            if (cached - recomputed).abs() > rel * (S::one() + recomputed.abs()) {
                out.push(Violation::StatsMismatch {
                    field,
                    cached: cached.f64(),
                    recomputed: recomputed.f64(),
                });
            }
        }

        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    fn on_domain_boundary(&self, p: crate::geom::Point<S>) -> bool {
        let vs = self.domain.vertices();
        let n = vs.len();
        (0..n).any(|i| dist_point_segment(p, vs[i], vs[(i + 1) % n]) <= self.tol.eps_len)
    }

    fn domain_side_lines(&self) -> Vec<crate::geom::Line<S>> {
        let vs = self.domain.vertices();
        let n = vs.len();
        (0..n)
            .map(|i| {
                crate::geom::Line::from_points(vs[i], vs[(i + 1) % n], &self.tol)
                    .expect("domain side")
            })
            .collect()
    }
}
