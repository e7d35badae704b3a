//! The T-tessellation state: vertices, edges, segments and cells with full
//! adjacency, plus a cached statistics block kept incrementally up to date by
//! the operators.
//!
//! Conventions baked into the structure:
//! - Edge endpoints are ordered along the supporting line direction of their
//!   segment (`ends[0]` has the smaller line parameter).
//! - `cells[0]` is the cell on the left of the line direction, `cells[1]` on
//!   the right; boundary edges have exactly one side cell.
//! - Cell boundary cycles run counter-clockwise; an entry traverses its edge
//!   forward exactly when the cell lies left of the edge's line direction.
//! - "Internal" features are those not contained in the boundary of the
//!   domain; an internal segment may still have endpoints on the boundary.

mod build;
mod io;
mod validate;

pub use build::{BuildError, SegmentSpec};
pub use io::{
    parse_snapshots, parse_tessellation, serialize_tessellation, snapshot_block, IoError,
};
pub use validate::Violation;

use crate::geom::{acute_angle, GeomError, Line, Point, Polygon, Tolerance};
use crate::lines::LinePattern;
use crate::real::Real;

macro_rules! id_type {
    ($name:ident, $tag:literal) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub(crate) u32);

        impl std::fmt::Display for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                write!(f, "{}{}", $tag, self.0)
            }
        }
    };
}

id_type!(VertexId, "v");
id_type!(EdgeId, "e");
id_type!(SegmentId, "s");
id_type!(CellId, "c");

/// Slab with a free list; ids are reused after removal.
#[derive(Clone, Debug)]
pub(crate) struct Store<T> {
    slots: Vec<Option<T>>,
    free: Vec<u32>,
}

impl<T> Store<T> {
    fn new() -> Self {
        Store {
            slots: Vec::new(),
            free: Vec::new(),
        }
    }

    pub(crate) fn insert(&mut self, value: T) -> u32 {
        if let Some(id) = self.free.pop() {
            self.slots[id as usize] = Some(value);
            id
        } else {
            self.slots.push(Some(value));
            (self.slots.len() - 1) as u32
        }
    }

    pub(crate) fn remove(&mut self, id: u32) -> T {
        let v = self.slots[id as usize].take().expect("stale id");
        self.free.push(id);
        v
    }

    pub(crate) fn get(&self, id: u32) -> &T {
        self.slots[id as usize].as_ref().expect("stale id")
    }

    pub(crate) fn get_mut(&mut self, id: u32) -> &mut T {
        self.slots[id as usize].as_mut().expect("stale id")
    }

    pub(crate) fn contains(&self, id: u32) -> bool {
        (id as usize) < self.slots.len() && self.slots[id as usize].is_some()
    }

    pub(crate) fn len(&self) -> usize {
        self.slots.len() - self.free.len()
    }

    pub(crate) fn iter(&self) -> impl Iterator<Item = (u32, &T)> {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.as_ref().map(|v| (i as u32, v)))
    }
}

#[derive(Clone, Debug)]
pub struct Vertex<S> {
    pub position: Point<S>,
    /// Incident edge ids, unordered.
    pub edges: Vec<EdgeId>,
    /// Lies on the boundary of the domain.
    pub on_boundary: bool,
    /// Is a corner of the domain.
    pub corner: bool,
}

#[derive(Clone, Debug)]
pub struct Edge {
    /// Endpoints ordered along the segment's line direction.
    pub ends: [VertexId; 2],
    pub segment: SegmentId,
    /// Side cells: `[left, right]` of the line direction.
    pub cells: [Option<CellId>; 2],
}

#[derive(Clone, Debug)]
pub struct Segment<S> {
    pub line: Line<S>,
    /// Contiguous edges ordered along the line direction.
    pub edges: Vec<EdgeId>,
    /// Not contained in the boundary of the domain.
    pub internal: bool,
}

/// One step of a cell's counter-clockwise boundary walk.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DirectedEdge {
    pub edge: EdgeId,
    /// Traversal agrees with the edge's endpoint order.
    pub forward: bool,
}

#[derive(Clone, Debug)]
pub struct Cell<S> {
    pub cycle: Vec<DirectedEdge>,
    pub area: S,
    pub perimeter: S,
}

/// Which extremity of a segment, along its line direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SegmentEnd {
    /// Smaller line parameter (first edge's first endpoint).
    Tail,
    /// Larger line parameter (last edge's second endpoint).
    Head,
}

impl SegmentEnd {
    pub const BOTH: [SegmentEnd; 2] = [SegmentEnd::Tail, SegmentEnd::Head];
}

/// Global statistics maintained incrementally across operator applications.
#[derive(Clone, Copy, Debug)]
pub struct StatsCache<S> {
    /// Total edge length l(T), boundary included.
    pub total_edge_length: S,
    /// Number of internal segments.
    pub internal_segments: u32,
    /// Internal segments consisting of a single edge.
    pub non_blocking_segments: u32,
    /// Internal segments with two or more edges.
    pub blocking_segments: u32,
    /// Vertices not lying on the domain boundary.
    pub internal_vertices: u32,
    /// Sum of squared cell areas.
    pub sum_sq_cell_area: S,
    /// Sum of vertex acute angles over internal vertices.
    pub sum_angle_internal: S,
    /// Sum of vertex acute angles over boundary non-corner vertices.
    pub sum_angle_boundary: S,
}

impl<S: Real> StatsCache<S> {
    pub fn apply(&mut self, d: &StatDelta<S>) {
        self.total_edge_length += d.d_length;
        self.internal_segments = add_i(self.internal_segments, d.d_internal_segments);
        self.non_blocking_segments = add_i(self.non_blocking_segments, d.d_non_blocking);
        self.blocking_segments = add_i(self.blocking_segments, d.d_blocking);
        self.internal_vertices = add_i(self.internal_vertices, d.d_internal_vertices);
        self.sum_sq_cell_area += d.d_sum_sq_cell_area;
        self.sum_angle_internal += d.d_sum_angle_internal;
        self.sum_angle_boundary += d.d_sum_angle_boundary;
    }
}

fn add_i(base: u32, d: i32) -> u32 {
    let v = base as i64 + d as i64;
    debug_assert!(v >= 0, "counter underflow");
    v as u32
}

/// Per-statistic changes carried by an update receipt.
#[derive(Clone, Copy, Debug)]
pub struct StatDelta<S> {
    pub d_length: S,
    pub d_internal_segments: i32,
    pub d_non_blocking: i32,
    pub d_blocking: i32,
    pub d_internal_vertices: i32,
    pub d_sum_sq_cell_area: S,
    pub d_sum_angle_internal: S,
    pub d_sum_angle_boundary: S,
}

impl<S: Real> StatDelta<S> {
    pub fn zero() -> Self {
        StatDelta {
            d_length: S::zero(),
            d_internal_segments: 0,
            d_non_blocking: 0,
            d_blocking: 0,
            d_internal_vertices: 0,
            d_sum_sq_cell_area: S::zero(),
            d_sum_angle_internal: S::zero(),
            d_sum_angle_boundary: S::zero(),
        }
    }

    pub fn negated(&self) -> Self {
        StatDelta {
            d_length: -self.d_length,
            d_internal_segments: -self.d_internal_segments,
            d_non_blocking: -self.d_non_blocking,
            d_blocking: -self.d_blocking,
            d_internal_vertices: -self.d_internal_vertices,
            d_sum_sq_cell_area: -self.d_sum_sq_cell_area,
            d_sum_angle_internal: -self.d_sum_angle_internal,
            d_sum_angle_boundary: -self.d_sum_angle_boundary,
        }
    }
}

/// Feature counts as reported by [`TTessellation::counts`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Counts {
    pub vertices: usize,
    pub edges: usize,
    pub cells: usize,
    pub internal_segments: usize,
    pub internal_vertices: usize,
    pub non_blocking_segments: usize,
    pub blocking_segments: usize,
}

/// A T-tessellation of a convex polygonal domain.
#[derive(Clone, Debug)]
pub struct TTessellation<S> {
    pub(crate) domain: Polygon<S>,
    pub(crate) tol: Tolerance<S>,
    pub(crate) verts: Store<Vertex<S>>,
    pub(crate) edges: Store<Edge>,
    pub(crate) segs: Store<Segment<S>>,
    pub(crate) cells: Store<Cell<S>>,
    pub(crate) stats: StatsCache<S>,
}

impl<S: Real> TTessellation<S> {
    /// The empty tessellation: a single cell spanning the whole domain.
    pub fn new_empty(domain: Polygon<S>) -> Result<Self, GeomError> {
        let domain = Polygon::convex_domain(domain.vertices().to_vec())?;
        let tol = Tolerance::for_domain(&domain);
        let mut t = TTessellation {
            domain: domain.clone(),
            tol,
            verts: Store::new(),
            edges: Store::new(),
            segs: Store::new(),
            cells: Store::new(),
            stats: StatsCache {
                total_edge_length: S::zero(),
                internal_segments: 0,
                non_blocking_segments: 0,
                blocking_segments: 0,
                internal_vertices: 0,
                sum_sq_cell_area: S::zero(),
                sum_angle_internal: S::zero(),
                sum_angle_boundary: S::zero(),
            },
        };
        let n = domain.vertices().len();
        let vids: Vec<VertexId> = domain
            .vertices()
            .iter()
            .map(|&p| {
                VertexId(t.verts.insert(Vertex {
                    position: p,
                    edges: Vec::new(),
                    on_boundary: true,
                    corner: true,
                }))
            })
            .collect();
        let cell_id = CellId(t.cells.insert(Cell {
            cycle: Vec::new(),
            area: domain.area(),
            perimeter: domain.perimeter(),
        }));
        let mut cycle = Vec::with_capacity(n);
        for i in 0..n {
            let a = vids[i];
            let b = vids[(i + 1) % n];
            let pa = t.verts.get(a.0).position;
            let pb = t.verts.get(b.0).position;
            let line = Line::from_points(pa, pb, &tol).expect("domain side");
            // Endpoint order along the canonical line direction.
            let forward = line.param_of(pa) < line.param_of(pb);
            let ends = if forward { [a, b] } else { [b, a] };
            // Interior is left of the CCW walk; map to the line-direction side.
            let cells = if forward {
                [Some(cell_id), None]
            } else {
                [None, Some(cell_id)]
            };
            let eid = EdgeId(t.edges.insert(Edge {
                ends,
                segment: SegmentId(0),
                cells,
            }));
            let sid = SegmentId(t.segs.insert(Segment {
                line,
                edges: vec![eid],
                internal: false,
            }));
            t.edges.get_mut(eid.0).segment = sid;
            t.verts.get_mut(a.0).edges.push(eid);
            t.verts.get_mut(b.0).edges.push(eid);
            cycle.push(DirectedEdge { edge: eid, forward });
        }
        t.cells.get_mut(cell_id.0).cycle = cycle;
        t.stats = t.recompute_stats();
        Ok(t)
    }

    pub fn domain(&self) -> &Polygon<S> {
        &self.domain
    }

    pub fn tolerance(&self) -> &Tolerance<S> {
        &self.tol
    }

    pub fn stats(&self) -> &StatsCache<S> {
        &self.stats
    }

    pub fn counts(&self) -> Counts {
        Counts {
            vertices: self.verts.len(),
            edges: self.edges.len(),
            cells: self.cells.len(),
            internal_segments: self.stats.internal_segments as usize,
            internal_vertices: self.stats.internal_vertices as usize,
            non_blocking_segments: self.stats.non_blocking_segments as usize,
            blocking_segments: self.stats.blocking_segments as usize,
        }
    }

    pub fn vertex(&self, v: VertexId) -> &Vertex<S> {
        self.verts.get(v.0)
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        self.edges.get(e.0)
    }

    pub fn segment(&self, s: SegmentId) -> &Segment<S> {
        self.segs.get(s.0)
    }

    pub fn cell(&self, c: CellId) -> &Cell<S> {
        self.cells.get(c.0)
    }

    pub fn vertex_ids(&self) -> Vec<VertexId> {
        self.verts.iter().map(|(i, _)| VertexId(i)).collect()
    }

    pub fn edge_ids(&self) -> Vec<EdgeId> {
        self.edges.iter().map(|(i, _)| EdgeId(i)).collect()
    }

    pub fn segment_ids(&self) -> Vec<SegmentId> {
        self.segs.iter().map(|(i, _)| SegmentId(i)).collect()
    }

    pub fn cell_ids(&self) -> Vec<CellId> {
        self.cells.iter().map(|(i, _)| CellId(i)).collect()
    }

    pub fn internal_segment_ids(&self) -> Vec<SegmentId> {
        self.segs
            .iter()
            .filter(|(_, s)| s.internal)
            .map(|(i, _)| SegmentId(i))
            .collect()
    }

    pub fn edge_points(&self, e: EdgeId) -> (Point<S>, Point<S>) {
        let edge = self.edges.get(e.0);
        (
            self.verts.get(edge.ends[0].0).position,
            self.verts.get(edge.ends[1].0).position,
        )
    }

    pub fn edge_length(&self, e: EdgeId) -> S {
        let (a, b) = self.edge_points(e);
        a.dist(b)
    }

    /// Internal segment consisting of a single edge (the mergeable ones).
    pub fn is_non_blocking(&self, s: SegmentId) -> bool {
        let seg = self.segs.get(s.0);
        seg.internal && seg.edges.len() == 1
    }

    /// Internal segment with two or more edges.
    pub fn is_blocking(&self, s: SegmentId) -> bool {
        let seg = self.segs.get(s.0);
        seg.internal && seg.edges.len() >= 2
    }

    pub fn segment_end_vertex(&self, s: SegmentId, end: SegmentEnd) -> VertexId {
        let seg = self.segs.get(s.0);
        match end {
            SegmentEnd::Tail => self.edges.get(seg.edges[0].0).ends[0],
            SegmentEnd::Head => self.edges.get(seg.edges[seg.edges.len() - 1].0).ends[1],
        }
    }

    /// Extremity points of a segment, tail then head.
    pub fn segment_extremities(&self, s: SegmentId) -> (Point<S>, Point<S>) {
        (
            self.verts
                .get(self.segment_end_vertex(s, SegmentEnd::Tail).0)
                .position,
            self.verts
                .get(self.segment_end_vertex(s, SegmentEnd::Head).0)
                .position,
        )
    }

    pub fn segment_length(&self, s: SegmentId) -> S {
        let (a, b) = self.segment_extremities(s);
        a.dist(b)
    }

    /// Among the edges at a T-vertex, the segment contributing two aligned
    /// edges (the one passing through). `None` for corners or non-T vertices.
    pub fn through_segment_at(&self, v: VertexId) -> Option<SegmentId> {
        let vert = self.verts.get(v.0);
        if vert.edges.len() != 3 {
            return None;
        }
        let segs: Vec<SegmentId> = vert
            .edges
            .iter()
            .map(|e| self.edges.get(e.0).segment)
            .collect();
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            if segs[j] == segs[k] && segs[i] != segs[j] {
                return Some(segs[j]);
            }
        }
        None
    }

    /// The segment whose single edge abuts at a T-vertex.
    pub fn abutting_segment_at(&self, v: VertexId) -> Option<SegmentId> {
        let through = self.through_segment_at(v)?;
        let vert = self.verts.get(v.0);
        vert.edges
            .iter()
            .map(|e| self.edges.get(e.0).segment)
            .find(|&s| s != through)
    }

    /// Acute angle between the two lines meeting at a non-corner vertex.
    pub fn vertex_angle(&self, v: VertexId) -> Option<S> {
        let through = self.through_segment_at(v)?;
        let abutting = self.abutting_segment_at(v)?;
        acute_angle(
            self.segs.get(through.0).line.direction(),
            self.segs.get(abutting.0).line.direction(),
        )
        .ok()
    }

    /// Boundary cycle of a cell as its traversal points (CCW). Entry `i` is
    /// the tail of the `i`-th directed edge.
    pub fn cell_points(&self, c: CellId) -> Vec<Point<S>> {
        self.cells
            .get(c.0)
            .cycle
            .iter()
            .map(|de| {
                let e = self.edges.get(de.edge.0);
                let v = if de.forward { e.ends[0] } else { e.ends[1] };
                self.verts.get(v.0).position
            })
            .collect()
    }

    pub fn cell_polygon(&self, c: CellId) -> Polygon<S> {
        Polygon::from_cycle(self.cell_points(c))
    }

    /// Areas of all cells.
    pub fn cell_areas(&self) -> Vec<S> {
        self.cells.iter().map(|(_, c)| c.area).collect()
    }

    /// Acute angles at all non-corner vertices, each in `(0, pi/2]`.
    pub fn vertex_angles(&self) -> Vec<S> {
        self.verts
            .iter()
            .filter(|(_, v)| !v.corner)
            .filter_map(|(i, _)| self.vertex_angle(VertexId(i)))
            .collect()
    }

    /// Supporting lines of the internal segments, one per segment.
    pub fn line_pattern(&self) -> LinePattern<S> {
        let lines = self
            .segs
            .iter()
            .filter(|(_, s)| s.internal)
            .map(|(_, s)| s.line)
            .collect();
        LinePattern::new_unchecked(self.domain.clone(), lines)
    }

    /// Recompute the statistics block from scratch (cell areas included).
    pub fn recompute_stats(&self) -> StatsCache<S> {
        let mut total_len = S::zero();
        for (i, _) in self.edges.iter() {
            total_len += self.edge_length(EdgeId(i));
        }
        let mut nseint = 0u32;
        let mut nnb = 0u32;
        let mut nb = 0u32;
        for (_, seg) in self.segs.iter() {
            if seg.internal {
                nseint += 1;
                if seg.edges.len() == 1 {
                    nnb += 1;
                } else {
                    nb += 1;
                }
            }
        }
        let mut nveint = 0u32;
        let mut phi_int = S::zero();
        let mut phi_bnd = S::zero();
        for (i, v) in self.verts.iter() {
            if !v.on_boundary {
                nveint += 1;
            }
            if !v.corner {
                if let Some(phi) = self.vertex_angle(VertexId(i)) {
                    if v.on_boundary {
                        phi_bnd += phi;
                    } else {
                        phi_int += phi;
                    }
                }
            }
        }
        let mut sum_sq = S::zero();
        for (i, _) in self.cells.iter() {
            let a = self.cell_polygon(CellId(i)).area();
            sum_sq += a * a;
        }
        StatsCache {
            total_edge_length: total_len,
            internal_segments: nseint,
            non_blocking_segments: nnb,
            blocking_segments: nb,
            internal_vertices: nveint,
            sum_sq_cell_area: sum_sq,
            sum_angle_internal: phi_int,
            sum_angle_boundary: phi_bnd,
        }
    }

    // ------------------------------------------------------------------
    // Local mutation helpers used by the operators. These keep adjacency,
    // cycles and per-cell caches consistent but do not touch `stats`.
    // ------------------------------------------------------------------

    /// Split an edge at an interior point, producing two edges and the new
    /// vertex. The host segment's edge list and both side cells' cycles are
    /// updated.
    pub(crate) fn split_edge(&mut self, e: EdgeId, at: Point<S>) -> (EdgeId, EdgeId, VertexId) {
        let edge = self.edges.get(e.0).clone();
        let seg_id = edge.segment;
        let on_boundary = !self.segs.get(seg_id.0).internal;
        let v = VertexId(self.verts.insert(Vertex {
            position: at,
            edges: Vec::new(),
            on_boundary,
            corner: false,
        }));
        let e1 = EdgeId(self.edges.insert(Edge {
            ends: [edge.ends[0], v],
            segment: seg_id,
            cells: edge.cells,
        }));
        let e2 = EdgeId(self.edges.insert(Edge {
            ends: [v, edge.ends[1]],
            segment: seg_id,
            cells: edge.cells,
        }));
        // Segment edge list keeps its direction order.
        let seg = self.segs.get_mut(seg_id.0);
        let pos = seg
            .edges
            .iter()
            .position(|&x| x == e)
            .expect("edge in segment");
        seg.edges.splice(pos..=pos, [e1, e2]);
        // Vertex incidences.
        replace_in(&mut self.verts.get_mut(edge.ends[0].0).edges, e, e1);
        replace_in(&mut self.verts.get_mut(edge.ends[1].0).edges, e, e2);
        self.verts.get_mut(v.0).edges = vec![e1, e2];
        // Side cells' cycles.
        for (side, cell) in edge.cells.iter().enumerate() {
            if let Some(c) = cell {
                let cycle = &mut self.cells.get_mut(c.0).cycle;
                let pos = cycle
                    .iter()
                    .position(|de| de.edge == e)
                    .expect("edge in cell cycle");
                let fwd = side == 0;
                debug_assert_eq!(cycle[pos].forward, fwd);
                let pair = if fwd {
                    [
                        DirectedEdge {
                            edge: e1,
                            forward: true,
                        },
                        DirectedEdge {
                            edge: e2,
                            forward: true,
                        },
                    ]
                } else {
                    [
                        DirectedEdge {
                            edge: e2,
                            forward: false,
                        },
                        DirectedEdge {
                            edge: e1,
                            forward: false,
                        },
                    ]
                };
                cycle.splice(pos..=pos, pair);
            }
        }
        self.edges.remove(e.0);
        (e1, e2, v)
    }

    /// Merge the two collinear edges meeting at a degree-2 vertex, removing
    /// the vertex. Inverse of `split_edge`.
    pub(crate) fn merge_edges_at(&mut self, v: VertexId) -> EdgeId {
        let vert = self.verts.get(v.0);
        debug_assert_eq!(vert.edges.len(), 2, "merge_edges_at needs degree 2");
        let (ea, eb) = (vert.edges[0], vert.edges[1]);
        // Order so that `first` ends at v and `second` starts at v.
        let (first, second) = if self.edges.get(ea.0).ends[1] == v {
            (ea, eb)
        } else {
            (eb, ea)
        };
        let fe = self.edges.get(first.0).clone();
        let se = self.edges.get(second.0).clone();
        debug_assert_eq!(fe.ends[1], v);
        debug_assert_eq!(se.ends[0], v);
        debug_assert_eq!(fe.segment, se.segment);
        debug_assert_eq!(fe.cells, se.cells);
        let merged = EdgeId(self.edges.insert(Edge {
            ends: [fe.ends[0], se.ends[1]],
            segment: fe.segment,
            cells: fe.cells,
        }));
        let seg = self.segs.get_mut(fe.segment.0);
        let pos = seg
            .edges
            .iter()
            .position(|&x| x == first)
            .expect("edge in segment");
        debug_assert_eq!(seg.edges.get(pos + 1), Some(&second));
        seg.edges.splice(pos..=pos + 1, [merged]);
        replace_in(&mut self.verts.get_mut(fe.ends[0].0).edges, first, merged);
        replace_in(&mut self.verts.get_mut(se.ends[1].0).edges, second, merged);
        for (side, cell) in fe.cells.iter().enumerate() {
            if let Some(c) = cell {
                let cycle = &mut self.cells.get_mut(c.0).cycle;
                let fwd = side == 0;
                // Forward traversal passes first then second; backward the
                // reverse. The pair may wrap around the cycle end.
                let lead = if fwd { first } else { second };
                let pos = cycle
                    .iter()
                    .position(|de| de.edge == lead)
                    .expect("edge in cell cycle");
                let next = (pos + 1) % cycle.len();
                debug_assert_eq!(cycle[next].edge, if fwd { second } else { first });
                if next == 0 {
                    cycle.pop();
                    cycle[0] = DirectedEdge {
                        edge: merged,
                        forward: fwd,
                    };
                } else {
                    cycle.splice(
                        pos..=next,
                        [DirectedEdge {
                            edge: merged,
                            forward: fwd,
                        }],
                    );
                }
            }
        }
        self.edges.remove(first.0);
        self.edges.remove(second.0);
        self.verts.remove(v.0);
        merged
    }

    /// Create a new internal segment made of the single edge `[a, b]`.
    /// Side cells are left unset; `split_cell_by` fills them.
    pub(crate) fn add_single_edge_segment(
        &mut self,
        a: VertexId,
        b: VertexId,
        line: Line<S>,
    ) -> (SegmentId, EdgeId) {
        let (pa, pb) = (self.verts.get(a.0).position, self.verts.get(b.0).position);
        let ends = if line.param_of(pa) < line.param_of(pb) {
            [a, b]
        } else {
            [b, a]
        };
        let e = EdgeId(self.edges.insert(Edge {
            ends,
            segment: SegmentId(0),
            cells: [None, None],
        }));
        let s = SegmentId(self.segs.insert(Segment {
            line,
            edges: vec![e],
            internal: true,
        }));
        self.edges.get_mut(e.0).segment = s;
        self.verts.get_mut(a.0).edges.push(e);
        self.verts.get_mut(b.0).edges.push(e);
        (s, e)
    }

    /// Append a new edge extending segment `s` from its extremity vertex
    /// `from` to the new vertex `to`. Side cells left unset.
    pub(crate) fn extend_segment(&mut self, s: SegmentId, from: VertexId, to: VertexId) -> EdgeId {
        let line = self.segs.get(s.0).line;
        let (pf, pt) = (
            self.verts.get(from.0).position,
            self.verts.get(to.0).position,
        );
        let forward = line.param_of(pf) < line.param_of(pt);
        let ends = if forward { [from, to] } else { [to, from] };
        let e = EdgeId(self.edges.insert(Edge {
            ends,
            segment: s,
            cells: [None, None],
        }));
        let seg = self.segs.get_mut(s.0);
        if forward {
            // Extends past the head.
            seg.edges.push(e);
        } else {
            seg.edges.insert(0, e);
        }
        self.verts.get_mut(from.0).edges.push(e);
        self.verts.get_mut(to.0).edges.push(e);
        e
    }

    /// Split cell `c` along the fresh edge `e_new` whose endpoints already
    /// sit on the cell's boundary walk. Returns the two new cells
    /// `(left, right)` of the new edge's line direction.
    pub(crate) fn split_cell_by(&mut self, c: CellId, e_new: EdgeId) -> (CellId, CellId) {
        let [va, vb] = self.edges.get(e_new.0).ends;
        let cycle = self.cells.get(c.0).cycle.clone();
        let m = cycle.len();
        let head_of = |t: &Self, de: &DirectedEdge| -> VertexId {
            let e = t.edges.get(de.edge.0);
            if de.forward {
                e.ends[1]
            } else {
                e.ends[0]
            }
        };
        let ia = (0..m)
            .find(|&i| head_of(self, &cycle[i]) == va)
            .expect("split vertex on cell walk");
        let ib = (0..m)
            .find(|&i| head_of(self, &cycle[i]) == vb)
            .expect("split vertex on cell walk");
        // Walk from va to vb: entries ia+1 ..= ib (cyclic); this chain plus
        // e_new traversed vb->va closes the cell right of the direction.
        let mut chain_right = Vec::new();
        let mut i = ia;
        loop {
            i = (i + 1) % m;
            chain_right.push(cycle[i]);
            if i == ib {
                break;
            }
        }
        let mut chain_left = Vec::new();
        let mut i = ib;
        loop {
            i = (i + 1) % m;
            chain_left.push(cycle[i]);
            if i == ia {
                break;
            }
        }
        let mut right_cycle = chain_right;
        right_cycle.push(DirectedEdge {
            edge: e_new,
            forward: false,
        });
        let mut left_cycle = chain_left;
        left_cycle.push(DirectedEdge {
            edge: e_new,
            forward: true,
        });

        self.cells.remove(c.0);
        let left = CellId(self.cells.insert(Cell {
            cycle: left_cycle,
            area: S::zero(),
            perimeter: S::zero(),
        }));
        let right = CellId(self.cells.insert(Cell {
            cycle: right_cycle,
            area: S::zero(),
            perimeter: S::zero(),
        }));
        self.edges.get_mut(e_new.0).cells = [Some(left), Some(right)];
        for cid in [left, right] {
            self.reassign_cycle_cells(cid);
            self.refresh_cell_metrics(cid);
        }
        (left, right)
    }

    /// Remove edge `e` and merge its two side cells. The edge is removed
    /// from the edge store and from its endpoints' incidence lists; the
    /// caller maintains the segment's edge list.
    pub(crate) fn merge_cells_across(&mut self, e: EdgeId) -> CellId {
        let edge = self.edges.get(e.0).clone();
        let left = edge.cells[0].expect("internal edge");
        let right = edge.cells[1].expect("internal edge");
        debug_assert_ne!(left, right);
        let lc = self.cells.get(left.0).cycle.clone();
        let rc = self.cells.get(right.0).cycle.clone();
        // Left cell traverses e forward; drop it and rotate so the chain
        // starts just after e. Same for the right cell (backward entry).
        let chain = |cycle: &[DirectedEdge], forward: bool| -> Vec<DirectedEdge> {
            let pos = cycle
                .iter()
                .position(|de| de.edge == e && de.forward == forward)
                .expect("edge in cell cycle");
            let mut out = Vec::with_capacity(cycle.len() - 1);
            for k in 1..cycle.len() {
                out.push(cycle[(pos + k) % cycle.len()]);
            }
            out
        };
        let left_chain = chain(&lc, true); // runs vb -> va
        let right_chain = chain(&rc, false); // runs va -> vb
        let mut cycle = left_chain;
        cycle.extend(right_chain);
        self.cells.remove(left.0);
        self.cells.remove(right.0);
        let merged = CellId(self.cells.insert(Cell {
            cycle,
            area: S::zero(),
            perimeter: S::zero(),
        }));
        self.reassign_cycle_cells(merged);
        self.refresh_cell_metrics(merged);
        let [va, vb] = edge.ends;
        remove_from(&mut self.verts.get_mut(va.0).edges, e);
        remove_from(&mut self.verts.get_mut(vb.0).edges, e);
        self.edges.remove(e.0);
        merged
    }

    fn reassign_cycle_cells(&mut self, c: CellId) {
        let cycle = self.cells.get(c.0).cycle.clone();
        for de in cycle {
            let edge = self.edges.get_mut(de.edge.0);
            let side = if de.forward { 0 } else { 1 };
            edge.cells[side] = Some(c);
        }
    }

    pub(crate) fn refresh_cell_metrics(&mut self, c: CellId) {
        let pts = self.cell_points(c);
        let poly = Polygon::from_cycle(pts);
        let cell = self.cells.get_mut(c.0);
        cell.area = poly.area();
        cell.perimeter = poly.perimeter();
    }
}

fn replace_in<T: PartialEq + Copy>(list: &mut Vec<T>, old: T, new: T) {
    let pos = list
        .iter()
        .position(|&x| x == old)
        .expect("element present");
    list[pos] = new;
}

fn remove_from<T: PartialEq>(list: &mut Vec<T>, item: T) {
    let pos = list
        .iter()
        .position(|x| *x == item)
        .expect("element present");
    list.swap_remove(pos);
}
