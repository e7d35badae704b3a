//! Assemble a tessellation from raw geometry: the domain plus the supporting
//! line and extremities of every internal segment. Vertices, edges and cells
//! are reconstructed by subdividing carriers at landing points and tracing
//! faces. The builder is deliberately mechanical: structurally broken inputs
//! (X-vertices, dangling ends) still assemble and are reported by
//! `validate()` instead.

use super::{
    Cell, DirectedEdge, Edge, EdgeId, Segment, SegmentId, StatsCache, Store, TTessellation, Vertex,
    VertexId,
};
use crate::geom::{GeomError, Line, Point, Polygon, Tolerance};
use crate::real::Real;
use thiserror::Error;

/// Geometry of one internal segment to assemble.
#[derive(Clone, Copy, Debug)]
pub struct SegmentSpec<S> {
    pub line: Line<S>,
    pub a: Point<S>,
    pub b: Point<S>,
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("invalid domain: {0}")]
    Domain(#[from] GeomError),
    #[error("segment {0} has near-zero length")]
    EmptySegment(usize),
    #[error("segment {index} endpoint is {dist} away from its line")]
    OffLine { index: usize, dist: f64 },
    #[error("face tracing found {0} outer faces; the subdivision is not connected")]
    Disconnected(usize),
}

struct Carrier<S> {
    line: Line<S>,
    internal: bool,
    /// Parameter extent along the line.
    lo: S,
    hi: S,
    /// (node index, line parameter), sorted by parameter after collection.
    hits: Vec<(usize, S)>,
}

impl<S: Real> TTessellation<S> {
    /// Rebuild a tessellation from its domain and internal segment geometry.
    pub fn from_internal_segments(
        domain: Polygon<S>,
        specs: &[SegmentSpec<S>],
    ) -> Result<Self, BuildError> {
        let domain = Polygon::convex_domain(domain.vertices().to_vec())?;
        let tol = Tolerance::for_domain(&domain);
        let eps = tol.eps_len;

        // Deduplicated node list: domain corners, then segment extremities.
        let mut nodes: Vec<Point<S>> = domain.vertices().to_vec();
        let ncorners = nodes.len();
        let node_of = |nodes: &mut Vec<Point<S>>, p: Point<S>| -> usize {
            for (i, q) in nodes.iter().enumerate() {
                if q.dist(p) <= eps {
                    return i;
                }
            }
            nodes.push(p);
            nodes.len() - 1
        };

        let mut carriers: Vec<Carrier<S>> = Vec::new();
        for i in 0..ncorners {
            let a = domain.vertices()[i];
            let b = domain.vertices()[(i + 1) % ncorners];
            let line = Line::from_points(a, b, &tol).map_err(BuildError::Domain)?;
            let (ta, tb) = (line.param_of(a), line.param_of(b));
            carriers.push(Carrier {
                line,
                internal: false,
                lo: ta.min(tb),
                hi: ta.max(tb),
                hits: Vec::new(),
            });
        }
        for (k, spec) in specs.iter().enumerate() {
            if spec.a.dist(spec.b) <= eps {
                return Err(BuildError::EmptySegment(k));
            }
            for p in [spec.a, spec.b] {
                let d = spec.line.signed_distance(p).abs();
                if d > eps {
                    return Err(BuildError::OffLine {
                        index: k,
                        dist: d.f64(),
                    });
                }
                node_of(&mut nodes, p);
            }
            let (ta, tb) = (spec.line.param_of(spec.a), spec.line.param_of(spec.b));
            carriers.push(Carrier {
                line: spec.line,
                internal: true,
                lo: ta.min(tb),
                hi: ta.max(tb),
                hits: Vec::new(),
            });
        }

        // Strict interior crossings between carriers also become nodes, so
        // that structurally broken inputs (X-vertices) assemble mechanically
        // and can be reported by validation. Valid tessellations never have
        // such crossings: every junction is already a segment extremity.
        for i in 0..carriers.len() {
            for j in (i + 1)..carriers.len() {
                if !(carriers[i].internal || carriers[j].internal) {
                    continue;
                }
                if let Some(q) = carriers[i].line.intersection(carriers[j].line, &tol) {
                    let ti = carriers[i].line.param_of(q);
                    let tj = carriers[j].line.param_of(q);
                    if ti > carriers[i].lo + eps
                        && ti < carriers[i].hi - eps
                        && tj > carriers[j].lo + eps
                        && tj < carriers[j].hi - eps
                    {
                        node_of(&mut nodes, q);
                    }
                }
            }
        }

        // Attach every node to every carrier it lies on, within the carrier's
        // own extent.
        for c in carriers.iter_mut() {
            for (i, p) in nodes.iter().enumerate() {
                if c.line.signed_distance(*p).abs() <= eps {
                    let t = c.line.param_of(*p);
                    if t >= c.lo - eps && t <= c.hi + eps {
                        c.hits.push((i, t));
                    }
                }
            }
            c.hits
                .sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite params"));
            c.hits.dedup_by_key(|h| h.0);
        }

        // Stores.
        let mut verts: Store<Vertex<S>> = Store::new();
        let vids: Vec<VertexId> = nodes
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                VertexId(verts.insert(Vertex {
                    position: p,
                    edges: Vec::new(),
                    on_boundary: i < ncorners, // refined below
                    corner: i < ncorners,
                }))
            })
            .collect();
        let mut edges: Store<Edge> = Store::new();
        let mut segs: Store<Segment<S>> = Store::new();
        for c in &carriers {
            let sid = SegmentId(segs.insert(Segment {
                line: c.line,
                edges: Vec::new(),
                internal: c.internal,
            }));
            for w in c.hits.windows(2) {
                let (a, b) = (vids[w[0].0], vids[w[1].0]);
                let eid = EdgeId(edges.insert(Edge {
                    ends: [a, b],
                    segment: sid,
                    cells: [None, None],
                }));
                segs.get_mut(sid.0).edges.push(eid);
                verts.get_mut(a.0).edges.push(eid);
                verts.get_mut(b.0).edges.push(eid);
            }
            if !c.internal {
                for h in &c.hits {
                    verts.get_mut(vids[h.0].0).on_boundary = true;
                }
            }
        }

        // Face tracing. Outgoing half-edges per vertex sorted by direction
        // angle; the next half-edge of a CCW (interior-left) walk is the
        // clockwise neighbour of the reversed half-edge around its head.
        let vert_ids: Vec<u32> = verts.iter().map(|(i, _)| i).collect();
        let mut outgoing: std::collections::HashMap<u32, Vec<(EdgeId, bool)>> =
            std::collections::HashMap::new();
        for &vi in &vert_ids {
            let mut list: Vec<(EdgeId, bool, S)> = Vec::new();
            for &e in &verts.get(vi).edges {
                let edge = edges.get(e.0);
                let dir = segs.get(edge.segment.0).line.direction();
                if edge.ends[0].0 == vi {
                    list.push((e, true, dir.y.atan2(dir.x)));
                }
                if edge.ends[1].0 == vi {
                    let d = dir.scale(-S::one());
                    list.push((e, false, d.y.atan2(d.x)));
                }
            }
            list.sort_by(|a, b| a.2.partial_cmp(&b.2).expect("finite angles"));
            outgoing.insert(vi, list.into_iter().map(|(e, f, _)| (e, f)).collect());
        }
        let head = |edges: &Store<Edge>, e: EdgeId, fwd: bool| -> VertexId {
            let edge = edges.get(e.0);
            if fwd {
                edge.ends[1]
            } else {
                edge.ends[0]
            }
        };

        let mut visited: std::collections::HashSet<(u32, bool)> = std::collections::HashSet::new();
        let mut faces: Vec<Vec<DirectedEdge>> = Vec::new();
        for (ei, _) in edges.iter() {
            for fwd in [true, false] {
                if visited.contains(&(ei, fwd)) {
                    continue;
                }
                let mut walk = Vec::new();
                let (mut ce, mut cf) = (EdgeId(ei), fwd);
                loop {
                    if !visited.insert((ce.0, cf)) {
                        break;
                    }
                    walk.push(DirectedEdge {
                        edge: ce,
                        forward: cf,
                    });
                    let v = head(&edges, ce, cf);
                    let ring = &outgoing[&v.0];
                    let idx = ring
                        .iter()
                        .position(|&(e, f)| e == ce && f == !cf)
                        .expect("reverse half-edge present");
                    let (ne, nf) = ring[(idx + ring.len() - 1) % ring.len()];
                    ce = ne;
                    cf = nf;
                    if ce.0 == ei && cf == fwd {
                        break;
                    }
                }
                faces.push(walk);
            }
        }

        let mut cells: Store<Cell<S>> = Store::new();
        let mut outer = 0usize;
        for walk in faces {
            let pts: Vec<Point<S>> = walk
                .iter()
                .map(|de| {
                    let e = edges.get(de.edge.0);
                    let v = if de.forward { e.ends[0] } else { e.ends[1] };
                    verts.get(v.0).position
                })
                .collect();
            let poly = Polygon::from_cycle(pts);
            let area = poly.area();
            if area <= S::zero() {
                outer += 1;
                continue;
            }
            let cid = CellId(cells.insert(Cell {
                cycle: walk.clone(),
                area,
                perimeter: poly.perimeter(),
            }));
            for de in &walk {
                let side = if de.forward { 0 } else { 1 };
                edges.get_mut(de.edge.0).cells[side] = Some(cid);
            }
        }
        if outer != 1 {
            return Err(BuildError::Disconnected(outer));
        }

        let mut t = TTessellation {
            domain,
            tol,
            verts,
            edges,
            segs,
            cells,
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
        t.stats = t.recompute_stats();
        Ok(t)
    }
}

use super::CellId;
