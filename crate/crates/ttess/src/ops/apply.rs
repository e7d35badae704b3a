//! Application of the three updates with exact inverse receipts.
//!
//! Every `apply_*` runs a read-only landing phase first; the tessellation is
//! only mutated once the update is known to be applicable and
//! non-degenerate. Counter deltas are derived by reclassifying the affected
//! segments before and after the mutation rather than by case analysis.

use super::{Flip, Merge, Split, Touched, Update, UpdateKind, UpdateReceipt};
use crate::geom::{acute_angle, chord, dist_point_segment, Point};
use crate::real::Real;
use crate::tess::{EdgeId, SegmentEnd, SegmentId, StatDelta, TTessellation, VertexId};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ApplyError {
    #[error("no applicable {0:?} update")]
    EmptyUpdateSet(UpdateKind),
    #[error("update refers to a stale id")]
    StaleId,
    #[error("segment {0} is not an internal non-blocking segment")]
    NotNonBlocking(SegmentId),
    #[error("segment {0} is not an internal blocking segment")]
    NotBlocking(SegmentId),
    #[error("line does not cut the cell")]
    NoChord,
    #[error("degenerate split proposal: {0}")]
    DegenerateSplit(&'static str),
    #[error("degenerate flip proposal: {0}")]
    DegenerateFlip(&'static str),
}

pub(crate) struct SplitLanding<S> {
    pub pa: Point<S>,
    pub pb: Point<S>,
    pub host_a: EdgeId,
    pub host_b: EdgeId,
    pub seg_a: SegmentId,
    pub seg_b: SegmentId,
    pub xi: u8,
    pub length: S,
}

/// (non_blocking, blocking) contribution of a segment to the counters.
fn seg_class<S: Real>(t: &TTessellation<S>, s: SegmentId) -> (i32, i32) {
    if !t.segs.contains(s.0) {
        return (0, 0);
    }
    let seg = t.segment(s);
    if !seg.internal {
        (0, 0)
    } else if seg.edges.len() == 1 {
        (1, 0)
    } else {
        (0, 1)
    }
}

fn class_delta<S: Real>(
    t: &TTessellation<S>,
    affected: &[SegmentId],
    before: &[(i32, i32)],
) -> (i32, i32) {
    let mut d_nb = 0;
    let mut d_b = 0;
    for (i, &s) in affected.iter().enumerate() {
        let (nb1, b1) = seg_class(t, s);
        d_nb += nb1 - before[i].0;
        d_b += b1 - before[i].1;
    }
    (d_nb, d_b)
}

fn dedup_segments(mut ids: Vec<SegmentId>) -> Vec<SegmentId> {
    ids.sort();
    ids.dedup();
    ids
}

impl<S: Real> TTessellation<S> {
    /// Read-only applicability analysis of a split: chord, host edges, and
    /// the degeneracy rejections (endpoint near an existing vertex, line
    /// aligned with an existing segment).
    pub(crate) fn split_landing(&self, split: &Split<S>) -> Result<SplitLanding<S>, ApplyError> {
        if !self.cells.contains(split.cell.0) {
            return Err(ApplyError::StaleId);
        }
        let tol = *self.tolerance();
        let margin = tol.eps_len * S::of(10.0);
        let poly = self.cell_polygon(split.cell);
        let (pa, pb) = chord(split.line, &poly, &tol).ok_or(ApplyError::NoChord)?;
        let length = pa.dist(pb);
        if length <= margin {
            return Err(ApplyError::DegenerateSplit("chord too short"));
        }
        for (_, seg) in self.segs.iter() {
            if seg.line.approx_eq(split.line, &tol) {
                return Err(ApplyError::DegenerateSplit(
                    "aligned with an existing segment",
                ));
            }
        }
        let locate = |p: Point<S>| -> Result<EdgeId, ApplyError> {
            let mut best = (S::infinity(), EdgeId(0));
            for de in &self.cell(split.cell).cycle {
                let (a, b) = self.edge_points(de.edge);
                let d = dist_point_segment(p, a, b);
                if d < best.0 {
                    best = (d, de.edge);
                }
            }
            if best.0 > margin {
                return Err(ApplyError::DegenerateSplit(
                    "endpoint off the cell boundary",
                ));
            }
            let (a, b) = self.edge_points(best.1);
            if p.dist(a) <= margin || p.dist(b) <= margin {
                return Err(ApplyError::DegenerateSplit(
                    "endpoint near an existing vertex",
                ));
            }
            Ok(best.1)
        };
        let host_a = locate(pa)?;
        let host_b = locate(pb)?;
        if host_a == host_b {
            return Err(ApplyError::DegenerateSplit("both endpoints on one edge"));
        }
        let seg_a = self.edge(host_a).segment;
        let seg_b = self.edge(host_b).segment;
        if seg_a == seg_b {
            return Err(ApplyError::DegenerateSplit("both endpoints on one segment"));
        }
        let xi = [seg_a, seg_b]
            .iter()
            .filter(|&&s| self.is_non_blocking(s))
            .count() as u8;
        Ok(SplitLanding {
            pa,
            pb,
            host_a,
            host_b,
            seg_a,
            seg_b,
            xi,
            length,
        })
    }

    pub(crate) fn apply_split(&mut self, split: &Split<S>) -> Result<UpdateReceipt<S>, ApplyError> {
        let landing = self.split_landing(split)?;
        let a_old = self.cell(split.cell).area;
        let internal_a = self.segment(landing.seg_a).internal;
        let internal_b = self.segment(landing.seg_b).internal;
        let dir = split.line.direction();
        let phi_a = acute_angle(self.segment(landing.seg_a).line.direction(), dir)
            .expect("unit directions");
        let phi_b = acute_angle(self.segment(landing.seg_b).line.direction(), dir)
            .expect("unit directions");
        let affected = dedup_segments(vec![landing.seg_a, landing.seg_b]);
        let before: Vec<(i32, i32)> = affected.iter().map(|&s| seg_class(self, s)).collect();

        let (_, _, va) = self.split_edge(landing.host_a, landing.pa);
        let (_, _, vb) = self.split_edge(landing.host_b, landing.pb);
        let (s_new, e_new) = self.add_single_edge_segment(va, vb, split.line);
        let (c_left, c_right) = self.split_cell_by(split.cell, e_new);

        let (d_nb, d_b) = class_delta(self, &affected, &before);
        let d_nb = d_nb + 1; // the new single-edge segment
        let a1 = self.cell(c_left).area;
        let a2 = self.cell(c_right).area;
        let mut delta = StatDelta::zero();
        delta.d_length = landing.length;
        delta.d_internal_segments = 1;
        delta.d_non_blocking = d_nb;
        delta.d_blocking = d_b;
        delta.d_internal_vertices = internal_a as i32 + internal_b as i32;
        delta.d_sum_sq_cell_area = a1 * a1 + a2 * a2 - a_old * a_old;
        for (internal, phi) in [(internal_a, phi_a), (internal_b, phi_b)] {
            if internal {
                delta.d_sum_angle_internal += phi;
            } else {
                delta.d_sum_angle_boundary += phi;
            }
        }
        debug_assert_eq!(delta.d_non_blocking, 1 - landing.xi as i32);
        self.stats.apply(&delta);

        let mut segments = affected;
        segments.push(s_new);
        Ok(UpdateReceipt {
            kind: UpdateKind::Split,
            inverse: Update::Merge(Merge { segment: s_new }),
            delta,
            xi: landing.xi,
            removed_edge_length: S::zero(),
            added_edge_length: landing.length,
            touched: Touched {
                cells: vec![c_left, c_right],
                segments,
            },
        })
    }

    pub(crate) fn apply_merge(&mut self, merge: &Merge) -> Result<UpdateReceipt<S>, ApplyError> {
        let s = merge.segment;
        if !self.segs.contains(s.0) {
            return Err(ApplyError::StaleId);
        }
        if !self.is_non_blocking(s) {
            return Err(ApplyError::NotNonBlocking(s));
        }
        let line = self.segment(s).line;
        let e = self.segment(s).edges[0];
        let edge = self.edge(e).clone();
        let [va, vb] = edge.ends;
        let length = self.edge_length(e);
        let t_a = self.through_segment_at(va).ok_or(ApplyError::StaleId)?;
        let t_b = self.through_segment_at(vb).ok_or(ApplyError::StaleId)?;
        let internal_a = !self.vertex(va).on_boundary;
        let internal_b = !self.vertex(vb).on_boundary;
        let phi_a = self.vertex_angle(va).expect("T-vertex angle");
        let phi_b = self.vertex_angle(vb).expect("T-vertex angle");
        let a1 = self.cell(edge.cells[0].expect("internal edge")).area;
        let a2 = self.cell(edge.cells[1].expect("internal edge")).area;
        let affected = dedup_segments(vec![s, t_a, t_b]);
        let before: Vec<(i32, i32)> = affected.iter().map(|&x| seg_class(self, x)).collect();

        let merged = self.merge_cells_across(e);
        self.segs.remove(s.0);
        self.merge_edges_at(va);
        self.merge_edges_at(vb);

        let (d_nb, d_b) = class_delta(self, &affected, &before);
        let a_new = self.cell(merged).area;
        let mut delta = StatDelta::zero();
        delta.d_length = -length;
        delta.d_internal_segments = -1;
        delta.d_non_blocking = d_nb;
        delta.d_blocking = d_b;
        delta.d_internal_vertices = -(internal_a as i32) - (internal_b as i32);
        delta.d_sum_sq_cell_area = a_new * a_new - a1 * a1 - a2 * a2;
        for (internal, phi) in [(internal_a, phi_a), (internal_b, phi_b)] {
            if internal {
                delta.d_sum_angle_internal -= phi;
            } else {
                delta.d_sum_angle_boundary -= phi;
            }
        }
        self.stats.apply(&delta);

        let segments = affected.into_iter().filter(|&x| x != s).collect();
        Ok(UpdateReceipt {
            kind: UpdateKind::Merge,
            inverse: Update::Split(Split { cell: merged, line }),
            delta,
            xi: 0,
            removed_edge_length: length,
            added_edge_length: S::zero(),
            touched: Touched {
                cells: vec![merged],
                segments,
            },
        })
    }

    pub(crate) fn apply_flip(&mut self, flip: &Flip) -> Result<UpdateReceipt<S>, ApplyError> {
        let s = flip.segment;
        if !self.segs.contains(s.0) {
            return Err(ApplyError::StaleId);
        }
        if !self.is_blocking(s) {
            return Err(ApplyError::NotBlocking(s));
        }
        let tol = *self.tolerance();
        let margin = tol.eps_len * S::of(10.0);
        let s_line = self.segment(s).line;

        // Terminal edge at the chosen end: v_ext is the extremity, w the
        // adjacent T-vertex where some segment u is blocked.
        let (e_term, v_ext, w) = {
            let seg = self.segment(s);
            match flip.end {
                SegmentEnd::Tail => {
                    let e = seg.edges[0];
                    let ends = self.edge(e).ends;
                    (e, ends[0], ends[1])
                }
                SegmentEnd::Head => {
                    let e = *seg.edges.last().expect("blocking segment has edges");
                    let ends = self.edge(e).ends;
                    (e, ends[1], ends[0])
                }
            }
        };
        debug_assert_eq!(self.through_segment_at(w), Some(s));
        let u = self
            .abutting_segment_at(w)
            .ok_or(ApplyError::DegenerateFlip("inner vertex is not a T-vertex"))?;
        let t_v = self
            .through_segment_at(v_ext)
            .ok_or(ApplyError::DegenerateFlip("extremity is not a T-vertex"))?;
        debug_assert!(self.segment(u).internal, "blocked segments are internal");

        // Which end of u sits at w, and the direction extending u past w.
        let u_line = self.segment(u).line;
        let (u_end, u_term) = if self.segment_end_vertex(u, SegmentEnd::Head) == w {
            (
                SegmentEnd::Head,
                *self.segment(u).edges.last().expect("edges"),
            )
        } else if self.segment_end_vertex(u, SegmentEnd::Tail) == w {
            (SegmentEnd::Tail, self.segment(u).edges[0])
        } else {
            return Err(ApplyError::DegenerateFlip(
                "blocked segment does not end at the junction",
            ));
        };
        let ext_dir = match u_end {
            SegmentEnd::Head => u_line.direction(),
            SegmentEnd::Tail => u_line.direction().scale(-S::one()),
        };

        // The cell entered by the extension: the side cell of the terminal
        // edge opposite to u's body.
        let u_other = {
            let ends = self.edge(u_term).ends;
            if ends[0] == w {
                ends[1]
            } else {
                ends[0]
            }
        };
        let side_u = s_line.signed_distance(self.vertex(u_other).position);
        let e_term_cells = self.edge(e_term).cells;
        let (cell_far, cell_near) = if side_u > S::zero() {
            (e_term_cells[1], e_term_cells[0])
        } else {
            (e_term_cells[0], e_term_cells[1])
        };
        let cell_far = cell_far.ok_or(ApplyError::DegenerateFlip("missing far cell"))?;
        let cell_near = cell_near.ok_or(ApplyError::DegenerateFlip("missing near cell"))?;

        // Ray-cast from w across the far cell to find the landing point.
        let w_pos = self.vertex(w).position;
        let mut best: Option<(S, Point<S>, EdgeId)> = None;
        for de in &self.cell(cell_far).cycle {
            let ends = self.edge(de.edge).ends;
            if ends[0] == w || ends[1] == w {
                continue;
            }
            let (a, b) = self.edge_points(de.edge);
            let e_vec = b.sub(a);
            let denom = ext_dir.cross(e_vec);
            if denom.abs() <= S::epsilon() {
                continue;
            }
            let t_ray = a.sub(w_pos).cross(e_vec) / denom;
            if t_ray <= margin {
                continue;
            }
            let x = w_pos.add(ext_dir.scale(t_ray));
            let along = e_vec.dot(x.sub(a)) / e_vec.dot(e_vec);
            if along < -S::of(1e-9) || along > S::one() + S::of(1e-9) {
                continue;
            }
            if best.map_or(true, |(bt, _, _)| t_ray < bt) {
                best = Some((t_ray, x, de.edge));
            }
        }
        let (_, x, host_e) =
            best.ok_or(ApplyError::DegenerateFlip("extension found no obstacle"))?;
        for (vi, vert) in self.verts.iter() {
            if VertexId(vi) != v_ext && vert.position.dist(x) <= margin {
                return Err(ApplyError::DegenerateFlip(
                    "extension lands near an existing vertex",
                ));
            }
        }
        let t_x = self.edge(host_e).segment;

        // Pre-mutation metrics.
        let e_term_len = self.edge_length(e_term);
        let internal_v = !self.vertex(v_ext).on_boundary;
        let phi_v = self.vertex_angle(v_ext).expect("T-vertex angle");
        let internal_x = self.segment(t_x).internal;
        let phi_x =
            acute_angle(u_line.direction(), self.segment(t_x).line.direction()).expect("units");
        let a_before = {
            let a1 = self.cell(cell_far).area;
            let a2 = self.cell(cell_near).area;
            a1 * a1 + a2 * a2
        };
        let affected = dedup_segments(vec![s, u, t_v, t_x]);
        let before: Vec<(i32, i32)> = affected.iter().map(|&z| seg_class(self, z)).collect();

        // Mutation.
        let merged_cell = self.merge_cells_across(e_term);
        {
            let seg = self.segs.get_mut(s.0);
            match flip.end {
                SegmentEnd::Tail => {
                    seg.edges.remove(0);
                }
                SegmentEnd::Head => {
                    seg.edges.pop();
                }
            }
        }
        let m_v = self.merge_edges_at(v_ext);
        let host_now = if self.edges.contains(host_e.0) {
            host_e
        } else {
            m_v
        };
        let (_, _, vx) = self.split_edge(host_now, x);
        let e_u = self.extend_segment(u, w, vx);
        let (c1, c2) = self.split_cell_by(merged_cell, e_u);

        // Deltas.
        let (d_nb, d_b) = class_delta(self, &affected, &before);
        let added_len = w_pos.dist(x);
        let a_after = {
            let a1 = self.cell(c1).area;
            let a2 = self.cell(c2).area;
            a1 * a1 + a2 * a2
        };
        let mut delta = StatDelta::zero();
        delta.d_length = added_len - e_term_len;
        delta.d_non_blocking = d_nb;
        delta.d_blocking = d_b;
        delta.d_internal_vertices = internal_x as i32 - internal_v as i32;
        delta.d_sum_sq_cell_area = a_after - a_before;
        if internal_v {
            delta.d_sum_angle_internal -= phi_v;
        } else {
            delta.d_sum_angle_boundary -= phi_v;
        }
        if internal_x {
            delta.d_sum_angle_internal += phi_x;
        } else {
            delta.d_sum_angle_boundary += phi_x;
        }
        debug_assert!(delta.d_blocking.abs() <= 2);
        self.stats.apply(&delta);

        Ok(UpdateReceipt {
            kind: UpdateKind::Flip,
            inverse: Update::Flip(Flip {
                segment: u,
                end: u_end,
            }),
            delta,
            xi: 0,
            removed_edge_length: e_term_len,
            added_edge_length: added_len,
            touched: Touched {
                cells: vec![c1, c2],
                segments: affected,
            },
        })
    }
}
