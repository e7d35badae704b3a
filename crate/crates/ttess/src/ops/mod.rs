//! The three local updates: split, merge, flip. Enumeration, uniform
//! sampling, exact application with per-statistic deltas, and exact
//! inversion. Every applied update returns a receipt whose `inverse` undoes
//! it (geometry within tolerance, counters exactly).

mod apply;

pub use apply::ApplyError;

use crate::geom::Line;
use crate::lines::uniform_line_hitting;
use crate::real::Real;
use crate::tess::{CellId, SegmentEnd, SegmentId, StatDelta, TTessellation};
use rand::Rng;

/// Insert a chord into a cell.
#[derive(Clone, Copy, Debug)]
pub struct Split<S> {
    pub cell: CellId,
    pub line: Line<S>,
}

/// Delete a non-blocking internal segment.
#[derive(Clone, Copy, Debug)]
pub struct Merge {
    pub segment: SegmentId,
}

/// Delete the terminal edge at one end of a blocking segment and extend the
/// segment blocked at its inner vertex until the next obstacle.
#[derive(Clone, Copy, Debug)]
pub struct Flip {
    pub segment: SegmentId,
    pub end: SegmentEnd,
}

#[derive(Clone, Copy, Debug)]
pub enum Update<S> {
    Split(Split<S>),
    Merge(Merge),
    Flip(Flip),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UpdateKind {
    Split,
    Merge,
    Flip,
}

impl UpdateKind {
    pub const ALL: [UpdateKind; 3] = [UpdateKind::Split, UpdateKind::Merge, UpdateKind::Flip];
}

impl<S> Update<S> {
    pub fn kind(&self) -> UpdateKind {
        match self {
            Update::Split(_) => UpdateKind::Split,
            Update::Merge(_) => UpdateKind::Merge,
            Update::Flip(_) => UpdateKind::Flip,
        }
    }
}

/// Ids of records modified by an update.
#[derive(Clone, Debug, Default)]
pub struct Touched {
    pub cells: Vec<CellId>,
    pub segments: Vec<SegmentId>,
}

/// Everything needed to invert an applied update and to evaluate Hastings
/// ratios incrementally.
#[derive(Clone, Debug)]
pub struct UpdateReceipt<S> {
    pub kind: UpdateKind,
    pub inverse: Update<S>,
    pub delta: StatDelta<S>,
    /// For splits: number of internal non-blocking host segments the chord
    /// endpoints landed on (0, 1 or 2).
    pub xi: u8,
    /// Length of the removed edge (merges and flips; zero for splits).
    pub removed_edge_length: S,
    /// Length of the added edge (splits and flips; zero for merges).
    pub added_edge_length: S,
    pub touched: Touched,
}

impl<S: Real> TTessellation<S> {
    /// All applicable merges: one per internal non-blocking segment.
    pub fn enumerate_merges(&self) -> Vec<Merge> {
        let mut ids: Vec<SegmentId> = self
            .internal_segment_ids()
            .into_iter()
            .filter(|&s| self.is_non_blocking(s))
            .collect();
        ids.sort();
        ids.into_iter().map(|segment| Merge { segment }).collect()
    }

    /// All applicable flips: two per internal blocking segment.
    pub fn enumerate_flips(&self) -> Vec<Flip> {
        let mut ids: Vec<SegmentId> = self
            .internal_segment_ids()
            .into_iter()
            .filter(|&s| self.is_blocking(s))
            .collect();
        ids.sort();
        ids.into_iter()
            .flat_map(|segment| {
                SegmentEnd::BOTH
                    .into_iter()
                    .map(move |end| Flip { segment, end })
            })
            .collect()
    }

    /// Total mass of the uniform split measure: `(2 l(T) - l(D)) / pi`, the
    /// sum of cell perimeters over pi.
    pub fn split_measure_mass(&self) -> S {
        let two = S::of(2.0);
        (two * self.stats().total_edge_length - self.domain().perimeter()) / S::PI()
    }

    /// Density of a uniformly sampled split with respect to the split
    /// measure: `pi / (2 l(T) - l(D))`.
    pub fn split_density_uniform(&self) -> S {
        S::one() / self.split_measure_mass()
    }

    /// Probability of each merge under the uniform proposal: `1 / nnbseint`.
    pub fn merge_pmf_uniform(&self) -> Result<S, ApplyError> {
        let n = self.stats().non_blocking_segments;
        if n == 0 {
            return Err(ApplyError::EmptyUpdateSet(UpdateKind::Merge));
        }
        Ok(S::one() / S::of(n as f64))
    }

    /// Probability of each flip under the uniform proposal: `1 / (2 nbseint)`.
    pub fn flip_pmf_uniform(&self) -> Result<S, ApplyError> {
        let n = self.stats().blocking_segments;
        if n == 0 {
            return Err(ApplyError::EmptyUpdateSet(UpdateKind::Flip));
        }
        Ok(S::one() / (S::of(2.0) * S::of(n as f64)))
    }

    /// Number of internal non-blocking segments the chord endpoints of an
    /// applicable split land on.
    pub fn xi(&self, split: &Split<S>) -> Result<u8, ApplyError> {
        Ok(self.split_landing(split)?.xi)
    }

    /// Draw a split uniformly with respect to the split measure: pick a cell
    /// with probability proportional to its perimeter, then an isotropic
    /// uniform line hitting it. Degenerate proposals (chord through an
    /// existing vertex, line aligned with an existing segment) have measure
    /// zero and are rejected and resampled.
    pub fn sample_uniform_split<R: Rng + ?Sized>(&self, rng: &mut R) -> Split<S> {
        for _ in 0..10_000 {
            let cell = self.sample_cell_by_perimeter(rng);
            let poly = self.cell_polygon(cell);
            let line = uniform_line_hitting(&poly, self.tolerance(), rng);
            let split = Split { cell, line };
            if self.split_landing(&split).is_ok() {
                return split;
            }
        }
        panic!("could not sample a non-degenerate split after 10000 attempts");
    }

    fn sample_cell_by_perimeter<R: Rng + ?Sized>(&self, rng: &mut R) -> CellId {
        let ids = self.cell_ids();
        let total: S = ids
            .iter()
            .fold(S::zero(), |acc, &c| acc + self.cell(c).perimeter);
        let mut r = rng.gen_range(S::zero()..total);
        for &c in &ids {
            let p = self.cell(c).perimeter;
            if r < p {
                return c;
            }
            r -= p;
        }
        *ids.last().expect("at least one cell")
    }

    /// Apply an update in place. On error the tessellation is unchanged.
    pub fn apply(&mut self, update: &Update<S>) -> Result<UpdateReceipt<S>, ApplyError> {
        match update {
            Update::Split(s) => self.apply_split(s),
            Update::Merge(m) => self.apply_merge(m),
            Update::Flip(f) => self.apply_flip(f),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EmptierError {
    #[error("step budget {0} exhausted before reaching the empty tessellation")]
    BudgetExhausted(usize),
    #[error("no applicable update could be applied: {0}")]
    Stuck(ApplyError),
}

/// Constructive reachability: empty a tessellation by merges and flips.
/// Repeatedly merges any non-blocking segment; when none exists, flips the
/// lowest-id blocking segment at its head, which shortens it by one edge.
/// Returns the sequence of applied updates.
pub fn empty_out<S: Real>(
    t: &mut TTessellation<S>,
    max_steps: usize,
) -> Result<Vec<Update<S>>, EmptierError> {
    let mut applied = Vec::new();
    let mut steps = 0usize;
    while t.stats().internal_segments > 0 {
        if steps >= max_steps {
            return Err(EmptierError::BudgetExhausted(max_steps));
        }
        steps += 1;
        if let Some(m) = t.enumerate_merges().into_iter().next() {
            let u = Update::Merge(m);
            t.apply(&u).map_err(EmptierError::Stuck)?;
            applied.push(u);
            continue;
        }
        // All internal segments are blocking; shorten one by flipping.
        let flips = t.enumerate_flips();
        let mut done = false;
        let mut last_err = None;
        for f in flips {
            match t.apply(&Update::Flip(f)) {
                Ok(_) => {
                    applied.push(Update::Flip(f));
                    done = true;
                    break;
                }
                Err(e) => last_err = Some(e),
            }
        }
        if !done {
            return Err(EmptierError::Stuck(
                last_err.unwrap_or(ApplyError::EmptyUpdateSet(UpdateKind::Flip)),
            ));
        }
    }
    Ok(applied)
}

#[cfg(test)]
mod tests;
