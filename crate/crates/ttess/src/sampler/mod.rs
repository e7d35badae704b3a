//! Metropolis-Hastings-Green chain over T-tessellations: proposal mixture of
//! uniform splits, merges and flips, closed-form Hastings ratios, and the
//! numerical verifiers (Georgii-Nguyen-Zessin identities, conditional
//! uniformity on a fixed line pattern, convergence preconditions).
//!
//! A step applies the proposed update eagerly, evaluates the ratio from the
//! receipt, and rolls back via the exact inverse on rejection; the cached
//! statistics block is restored bit-for-bit from a snapshot.

use crate::geom::{Line, Point, Polygon};
use crate::lines::{enumerate_ttessellations, match_state, LinePattern, PatternError};
use crate::models::{is_hereditary, EnergyModel};
use crate::ops::{ApplyError, Update, UpdateKind, UpdateReceipt};
use crate::real::Real;
use crate::tess::{StatsCache, TTessellation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

/// State-independent probabilities of considering each update type.
/// Their sum may be below one; the remainder proposes nothing.
#[derive(Clone, Copy, Debug)]
pub struct ProposalConfig<S> {
    pub p_split: S,
    pub p_merge: S,
    pub p_flip: S,
}

impl<S: Real> ProposalConfig<S> {
    pub fn new(p_split: S, p_merge: S, p_flip: S) -> Self {
        assert!(
            p_split >= S::zero() && p_merge >= S::zero() && p_flip >= S::zero(),
            "proposal probabilities must be non-negative"
        );
        assert!(
            p_split + p_merge + p_flip <= S::one() + S::of(1e-12),
            "proposal probabilities must sum to at most one"
        );
        ProposalConfig {
            p_split,
            p_merge,
            p_flip,
        }
    }

    /// The default equal mixture (1/3, 1/3, 1/3).
    pub fn thirds() -> Self {
        let third = S::one() / S::of(3.0);
        ProposalConfig {
            p_split: third,
            p_merge: third,
            p_flip: third,
        }
    }

    /// Flip-only proposals, used by the conditional uniformity chain.
    pub fn flips_only() -> Self {
        ProposalConfig {
            p_split: S::zero(),
            p_merge: S::zero(),
            p_flip: S::one(),
        }
    }
}

/// Hastings ratio of an applied update, evaluated from the pre-update
/// statistics snapshot and the update receipt. Uniform proposal densities
/// are assumed. A non-positive denominator signals a structurally impossible
/// reverse proposal and yields ratio zero.
pub fn hastings_ratio<S: Real, M: EnergyModel<S>>(
    model: &M,
    proposals: &ProposalConfig<S>,
    domain_perimeter: S,
    before: &StatsCache<S>,
    receipt: &UpdateReceipt<S>,
) -> S {
    let h_ratio = model.log_h_ratio(&receipt.delta).exp();
    let two = S::of(2.0);
    let pi = S::PI();
    match receipt.kind {
        UpdateKind::Split => {
            let nnb_after =
                before.non_blocking_segments as i64 + receipt.delta.d_non_blocking as i64;
            if nnb_after <= 0 {
                return S::zero();
            }
            let mass = two * before.total_edge_length - domain_perimeter;
            h_ratio * (proposals.p_merge / proposals.p_split) * mass
                / (pi * S::of(nnb_after as f64))
        }
        UpdateKind::Merge => {
            let len_after = before.total_edge_length + receipt.delta.d_length;
            let mass_after = two * len_after - domain_perimeter;
            if mass_after <= S::zero() {
                return S::zero();
            }
            h_ratio
                * (proposals.p_split / proposals.p_merge)
                * pi
                * S::of(before.non_blocking_segments as f64)
                / mass_after
        }
        UpdateKind::Flip => {
            let nb_after = before.blocking_segments as i64 + receipt.delta.d_blocking as i64;
            if nb_after <= 0 {
                return S::zero();
            }
            h_ratio * S::of(before.blocking_segments as f64) / S::of(nb_after as f64)
        }
    }
}

/// Per-type proposal and acceptance counters.
#[derive(Clone, Copy, Debug, Default)]
pub struct ProposalCounters {
    pub proposed: [u64; 3],
    pub accepted: [u64; 3],
}

fn kind_index(kind: UpdateKind) -> usize {
    match kind {
        UpdateKind::Split => 0,
        UpdateKind::Merge => 1,
        UpdateKind::Flip => 2,
    }
}

impl ProposalCounters {
    pub fn acceptance_rate(&self, kind: UpdateKind) -> f64 {
        let i = kind_index(kind);
        if self.proposed[i] == 0 {
            return 0.0;
        }
        self.accepted[i] as f64 / self.proposed[i] as f64
    }
}

/// What one chain step did.
#[derive(Clone, Copy, Debug)]
pub struct StepOutcome<S> {
    /// Drawn update type; `None` when the mixture proposed nothing.
    pub kind: Option<UpdateKind>,
    /// Whether an applicable update was actually drawn and evaluated.
    pub evaluated: bool,
    pub accepted: bool,
    pub ratio: Option<S>,
}

/// Fixed-capacity ring of recent (iteration, energy) pairs.
#[derive(Clone, Debug)]
pub struct EnergyRing<S> {
    buf: Vec<(u64, S)>,
    cap: usize,
    start: usize,
}

impl<S: Copy> EnergyRing<S> {
    pub fn new(cap: usize) -> Self {
        EnergyRing {
            buf: Vec::with_capacity(cap),
            cap: cap.max(1),
            start: 0,
        }
    }

    pub fn push(&mut self, item: (u64, S)) {
        if self.buf.len() < self.cap {
            self.buf.push(item);
        } else {
            self.buf[self.start] = item;
            self.start = (self.start + 1) % self.cap;
        }
    }

    /// Oldest-to-newest snapshot.
    pub fn to_vec(&self) -> Vec<(u64, S)> {
        let mut out = Vec::with_capacity(self.buf.len());
        out.extend_from_slice(&self.buf[self.start..]);
        out.extend_from_slice(&self.buf[..self.start]);
        out
    }
}

/// A running chain: tessellation, target model, proposal mixture, RNG state
/// and trace accumulators.
pub struct ChainState<S, M> {
    tess: TTessellation<S>,
    model: M,
    proposals: ProposalConfig<S>,
    rng: ChaCha8Rng,
    iteration: u64,
    energy: S,
    counters: ProposalCounters,
    energy_ring: EnergyRing<S>,
    validation_period: Option<u64>,
}

impl<S: Real, M: EnergyModel<S>> ChainState<S, M> {
    pub fn new(tess: TTessellation<S>, model: M, proposals: ProposalConfig<S>, seed: u64) -> Self {
        let energy = model.energy(&tess);
        ChainState {
            tess,
            model,
            proposals,
            rng: ChaCha8Rng::seed_from_u64(seed),
            iteration: 0,
            energy,
            counters: ProposalCounters::default(),
            energy_ring: EnergyRing::new(4096),
            validation_period: Some(100),
        }
    }

    /// How often accepted states are structurally validated (`None` turns
    /// the spot-check off). Violations panic: they indicate a kernel bug.
    pub fn with_validation_period(mut self, period: Option<u64>) -> Self {
        self.validation_period = period;
        self
    }

    pub fn tessellation(&self) -> &TTessellation<S> {
        &self.tess
    }

    pub fn into_tessellation(self) -> TTessellation<S> {
        self.tess
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn proposals(&self) -> &ProposalConfig<S> {
        &self.proposals
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn energy(&self) -> S {
        self.energy
    }

    pub fn counters(&self) -> &ProposalCounters {
        &self.counters
    }

    pub fn energy_trace(&self) -> &EnergyRing<S> {
        &self.energy_ring
    }

    /// One Metropolis-Hastings-Green iteration.
    pub fn step(&mut self) -> StepOutcome<S> {
        let u: S = self.rng.gen_range(S::zero()..S::one());
        let kind = if u < self.proposals.p_split {
            Some(UpdateKind::Split)
        } else if u < self.proposals.p_split + self.proposals.p_merge {
            Some(UpdateKind::Merge)
        } else if u < self.proposals.p_split + self.proposals.p_merge + self.proposals.p_flip {
            Some(UpdateKind::Flip)
        } else {
            None
        };
        let outcome = match kind {
            None => StepOutcome {
                kind: None,
                evaluated: false,
                accepted: false,
                ratio: None,
            },
            Some(kind) => {
                self.counters.proposed[kind_index(kind)] += 1;
                match self.draw_update(kind) {
                    None => {
                        // No update of this type applies; the chain holds.
                        StepOutcome {
                            kind: Some(kind),
                            evaluated: false,
                            accepted: false,
                            ratio: None,
                        }
                    }
                    Some(update) => self.evaluate(kind, update),
                }
            }
        };
        self.iteration += 1;
        self.energy_ring.push((self.iteration, self.energy));
        if let Some(p) = self.validation_period {
            // Spot-check regardless of acceptance, so rolled-back states are
            // covered too.
            if self.iteration % p == 0 {
                let report = self.tess.validate();
                assert!(
                    report.is_empty(),
                    "chain reached an invalid state at iteration {}: {}",
                    self.iteration,
                    report[0]
                );
            }
        }
        outcome
    }

    fn draw_update(&mut self, kind: UpdateKind) -> Option<Update<S>> {
        match kind {
            UpdateKind::Split => Some(Update::Split(self.tess.sample_uniform_split(&mut self.rng))),
            UpdateKind::Merge => {
                let ms = self.tess.enumerate_merges();
                if ms.is_empty() {
                    return None;
                }
                Some(Update::Merge(ms[self.rng.gen_range(0..ms.len())]))
            }
            UpdateKind::Flip => {
                let fs = self.tess.enumerate_flips();
                if fs.is_empty() {
                    return None;
                }
                Some(Update::Flip(fs[self.rng.gen_range(0..fs.len())]))
            }
        }
    }

    fn evaluate(&mut self, kind: UpdateKind, update: Update<S>) -> StepOutcome<S> {
        let before = *self.tess.stats();
        let receipt = match self.tess.apply(&update) {
            Ok(r) => r,
            Err(ApplyError::DegenerateFlip(_)) => {
                // Measure-zero geometry; treat as a rejected proposal.
                return StepOutcome {
                    kind: Some(kind),
                    evaluated: true,
                    accepted: false,
                    ratio: None,
                };
            }
            Err(e) => panic!("drawn update failed to apply: {e}"),
        };
        let ratio = hastings_ratio(
            &self.model,
            &self.proposals,
            self.tess.domain().perimeter(),
            &before,
            &receipt,
        );
        let accept = self.rng.gen_range(S::zero()..S::one()) < ratio;
        if accept {
            self.energy -= self.model.log_h_ratio(&receipt.delta);
            self.counters.accepted[kind_index(kind)] += 1;
        } else {
            self.tess.apply(&receipt.inverse).expect("inverse applies");
            self.tess.stats = before;
        }
        StepOutcome {
            kind: Some(kind),
            evaluated: true,
            accepted: accept,
            ratio: Some(ratio),
        }
    }

    pub fn run(&mut self, iterations: u64) {
        for _ in 0..iterations {
            self.step();
        }
    }

    /// Run with a per-step callback (trace recording, snapshot export).
    pub fn run_with<F: FnMut(&ChainState<S, M>, &StepOutcome<S>)>(
        &mut self,
        iterations: u64,
        mut callback: F,
    ) {
        for _ in 0..iterations {
            let outcome = self.step();
            callback(self, &outcome);
        }
    }
}

/// Verdict of the convergence precondition check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Convergent,
    Unknown,
}

/// Sufficient conditions for irreducibility and aperiodicity of the chain
/// with uniform proposals, and the combined total-variation convergence
/// verdict.
#[derive(Clone, Copy, Debug)]
pub struct ConvergenceReport {
    /// The target density is strictly positive (sufficient for
    /// irreducibility under uniform proposals).
    pub h_strictly_positive: bool,
    /// All three update types have positive proposal probability.
    pub all_types_proposable: bool,
    /// A merge or flip is proposed at the empty tessellation, which then
    /// holds in place with positive probability.
    pub aperiodic: bool,
    pub verdict: Verdict,
}

impl std::fmt::Display for ConvergenceReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "h strictly positive:  {}", self.h_strictly_positive)?;
        writeln!(f, "all types proposable: {}", self.all_types_proposable)?;
        writeln!(f, "aperiodicity:         {}", self.aperiodic)?;
        write!(f, "verdict:              {:?}", self.verdict)
    }
}

pub fn check_convergence_conditions<S: Real, M: EnergyModel<S> + ?Sized>(
    model: &M,
    proposals: &ProposalConfig<S>,
) -> ConvergenceReport {
    let h_strictly_positive = model.strictly_positive();
    let all_types_proposable = proposals.p_split > S::zero()
        && proposals.p_merge > S::zero()
        && proposals.p_flip > S::zero();
    let aperiodic = proposals.p_merge > S::zero() || proposals.p_flip > S::zero();
    let verdict = if h_strictly_positive && all_types_proposable && aperiodic {
        Verdict::Convergent
    } else {
        Verdict::Unknown
    };
    ConvergenceReport {
        h_strictly_positive,
        all_types_proposable,
        aperiodic,
        verdict,
    }
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("model is not hereditary; the identity requires heredity")]
    NotHereditary,
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error("flip graph on the enumerated states is disconnected")]
    DisconnectedFlipGraph,
}

/// Monte Carlo estimate report of one side-by-side identity check.
#[derive(Clone, Copy, Debug)]
pub struct GnzReport<S> {
    pub lhs_estimate: S,
    pub rhs_estimate: S,
    pub lhs_se: S,
    pub rhs_se: S,
    pub n_states: usize,
    pub test_functional: &'static str,
}

impl<S: Real> GnzReport<S> {
    pub fn combined_se(&self) -> S {
        (self.lhs_se * self.lhs_se + self.rhs_se * self.rhs_se).sqrt()
    }

    /// Whether the two estimates agree within `k` combined standard errors
    /// (with a tiny absolute floor for identically-zero functionals).
    pub fn consistent(&self, k: S) -> bool {
        let floor = S::of(1e-12) * (S::one() + self.lhs_estimate.abs());
        (self.lhs_estimate - self.rhs_estimate).abs() <= k * self.combined_se() + floor
    }
}

/// Options for the chain driving a GNZ verification.
#[derive(Clone, Copy, Debug)]
pub struct GnzOptions {
    pub n_states: usize,
    pub subsample_period: usize,
    pub burn_in: usize,
    /// Importance-sampling draws per retained state on the split side.
    pub split_draws: usize,
    pub batches: usize,
}

impl Default for GnzOptions {
    fn default() -> Self {
        GnzOptions {
            n_states: 10_000,
            subsample_period: 50,
            burn_in: 5_000,
            split_draws: 10,
            batches: 32,
        }
    }
}

/// Geometry of an addable (or removable) splitting segment handed to the
/// test functional.
#[derive(Clone, Copy, Debug)]
pub struct SplitFeature<S> {
    pub line: Line<S>,
    pub a: Point<S>,
    pub b: Point<S>,
    pub length: S,
}

/// Geometry of a flip handed to the test functional: the edge it removes and
/// the edge it adds.
#[derive(Clone, Copy, Debug)]
pub struct FlipFeature<S> {
    pub removed_length: S,
    pub added_length: S,
}

fn batch_means<S: Real>(series: &[S], batches: usize) -> (S, S) {
    let n = series.len();
    assert!(n > 0);
    let mean = series.iter().fold(S::zero(), |a, &x| a + x) / S::of(n as f64);
    let b = batches.min(n).max(1);
    let per = n / b;
    if per == 0 || b < 2 {
        return (mean, S::zero());
    }
    let used = per * b;
    let mut batch_means = Vec::with_capacity(b);
    for i in 0..b {
        let chunk = &series[i * per..(i + 1) * per];
        batch_means.push(chunk.iter().fold(S::zero(), |a, &x| a + x) / S::of(per as f64));
    }
    let grand = series[..used].iter().fold(S::zero(), |a, &x| a + x) / S::of(used as f64);
    let var = batch_means
        .iter()
        .fold(S::zero(), |a, &m| a + (m - grand) * (m - grand))
        / S::of((b - 1) as f64);
    (mean, (var / S::of(b as f64)).sqrt())
}

/// Verify the split identity: the chain average of the functional summed
/// over removable segments must match the integral of the functional times
/// the density ratio over addable splits, estimated by importance sampling
/// under the uniform split measure.
pub fn verify_gnz_split<S, M, F>(
    domain: &Polygon<S>,
    model: &M,
    functional_name: &'static str,
    phi: F,
    opts: &GnzOptions,
    seed: u64,
) -> Result<GnzReport<S>, VerifyError>
where
    S: Real,
    M: EnergyModel<S>,
    F: Fn(&SplitFeature<S>, &TTessellation<S>) -> S,
{
    if !is_hereditary(model) {
        return Err(VerifyError::NotHereditary);
    }
    let tess =
        TTessellation::new_empty(domain.clone()).unwrap_or_else(|e| panic!("invalid domain: {e}"));
    let mut chain =
        ChainState::new(tess, model, ProposalConfig::thirds(), seed).with_validation_period(None);
    chain.run(opts.burn_in as u64);
    let mut lhs_series = Vec::with_capacity(opts.n_states);
    let mut rhs_series = Vec::with_capacity(opts.n_states);
    let mut aux_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
    for _ in 0..opts.n_states {
        chain.run(opts.subsample_period as u64);
        let t = &mut chain.tess;

        // Left side: sum over removable (non-blocking) segments of
        // phi(segment, T minus segment).
        let mut lhs = S::zero();
        for m in t.enumerate_merges() {
            let (a, b) = t.segment_extremities(m.segment);
            let feature = SplitFeature {
                line: t.segment(m.segment).line,
                a,
                b,
                length: a.dist(b),
            };
            let before = *t.stats();
            let receipt = t
                .apply(&Update::Merge(m))
                .expect("enumerated merge applies");
            lhs += phi(&feature, t);
            t.apply(&receipt.inverse).expect("inverse applies");
            t.stats = before;
        }

        // Right side: total split mass times the average over uniform split
        // draws of phi(s, T) multiplied by the density ratio h(sT)/h(T).
        let mass = t.split_measure_mass();
        let mut acc = S::zero();
        for _ in 0..opts.split_draws {
            let split = t.sample_uniform_split(&mut aux_rng);
            let landing = t.split_landing(&split).expect("sampled split lands");
            let feature = SplitFeature {
                line: split.line,
                a: landing.pa,
                b: landing.pb,
                length: landing.length,
            };
            let value = phi(&feature, t);
            let before = *t.stats();
            let receipt = t
                .apply(&Update::Split(split))
                .expect("sampled split applies");
            let weight = model.log_h_ratio(&receipt.delta).exp();
            t.apply(&receipt.inverse).expect("inverse applies");
            t.stats = before;
            acc += value * weight;
        }
        lhs_series.push(lhs);
        rhs_series.push(mass * acc / S::of(opts.split_draws as f64));
    }
    let (lhs_estimate, lhs_se) = batch_means(&lhs_series, opts.batches);
    let (rhs_estimate, rhs_se) = batch_means(&rhs_series, opts.batches);
    Ok(GnzReport {
        lhs_estimate,
        rhs_estimate,
        lhs_se,
        rhs_se,
        n_states: opts.n_states,
        test_functional: functional_name,
    })
}

/// Verify the flip identity: the chain average of the functional evaluated
/// at inverted flips of the flipped states matches the average weighted by
/// the density ratio at the original states.
pub fn verify_gnz_flip<S, M, F>(
    domain: &Polygon<S>,
    model: &M,
    functional_name: &'static str,
    phi: F,
    opts: &GnzOptions,
    seed: u64,
) -> Result<GnzReport<S>, VerifyError>
where
    S: Real,
    M: EnergyModel<S>,
    F: Fn(&FlipFeature<S>, &TTessellation<S>) -> S,
{
    if !is_hereditary(model) {
        return Err(VerifyError::NotHereditary);
    }
    let tess =
        TTessellation::new_empty(domain.clone()).unwrap_or_else(|e| panic!("invalid domain: {e}"));
    let mut chain =
        ChainState::new(tess, model, ProposalConfig::thirds(), seed).with_validation_period(None);
    chain.run(opts.burn_in as u64);
    let mut lhs_series = Vec::with_capacity(opts.n_states);
    let mut rhs_series = Vec::with_capacity(opts.n_states);
    let mut skipped = 0usize;
    for _ in 0..opts.n_states {
        chain.run(opts.subsample_period as u64);
        let t = &mut chain.tess;
        let mut lhs = S::zero();
        let mut rhs = S::zero();
        for f in t.enumerate_flips() {
            let before = *t.stats();
            let receipt = match t.apply(&Update::Flip(f)) {
                Ok(r) => r,
                Err(ApplyError::DegenerateFlip(_)) => {
                    skipped += 1;
                    continue;
                }
                Err(e) => panic!("enumerated flip failed: {e}"),
            };
            // The inverse flip applied to FT removes what F added and adds
            // back what F removed.
            let inv_feature = FlipFeature {
                removed_length: receipt.added_edge_length,
                added_length: receipt.removed_edge_length,
            };
            lhs += phi(&inv_feature, t);
            let weight = model.log_h_ratio(&receipt.delta).exp();
            t.apply(&receipt.inverse).expect("inverse applies");
            t.stats = before;
            let fwd_feature = FlipFeature {
                removed_length: receipt.removed_edge_length,
                added_length: receipt.added_edge_length,
            };
            rhs += phi(&fwd_feature, t) * weight;
        }
        lhs_series.push(lhs);
        rhs_series.push(rhs);
    }
    if skipped > 0 {
        log::warn!("flip verification skipped {skipped} degenerate flips");
    }
    let (lhs_estimate, lhs_se) = batch_means(&lhs_series, opts.batches);
    let (rhs_estimate, rhs_se) = batch_means(&rhs_series, opts.batches);
    Ok(GnzReport {
        lhs_estimate,
        rhs_estimate,
        lhs_se,
        rhs_se,
        n_states: opts.n_states,
        test_functional: functional_name,
    })
}

/// Result of the chi-square test of uniformity over the enumerated states.
#[derive(Clone, Debug)]
pub struct UniformityReport {
    pub counts: Vec<u64>,
    pub n_states: u64,
    pub chi_square: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Run a flip-only chain on the (fixed) line pattern and classify visited
/// states against the enumeration oracle. Given the lines, the target is
/// uniform over the supported T-tessellations; flips preserve the lines, so
/// the chain explores exactly that finite set.
pub fn conditional_uniformity_test<S: Real>(
    pattern: &LinePattern<S>,
    n_retained: usize,
    subsample_period: usize,
    k_max: usize,
    seed: u64,
) -> Result<UniformityReport, VerifyError> {
    let states = enumerate_ttessellations(pattern, k_max)?;
    let m = states.len();
    if m == 1 {
        return Ok(UniformityReport {
            counts: vec![n_retained as u64],
            n_states: n_retained as u64,
            chi_square: 0.0,
            dof: 0,
            p_value: 1.0,
        });
    }

    if !crate::lines::flip_graph_connected(&states)? {
        return Err(VerifyError::DisconnectedFlipGraph);
    }

    let mut t = states[0].clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; m];
    for _ in 0..n_retained {
        for _ in 0..subsample_period {
            let fs = t.enumerate_flips();
            if fs.is_empty() {
                break;
            }
            let f = fs[rng.gen_range(0..fs.len())];
            let before = *t.stats();
            match t.apply(&Update::Flip(f)) {
                Ok(receipt) => {
                    let nb_before = S::of(before.blocking_segments as f64);
                    let nb_after = S::of(
                        (before.blocking_segments as i64 + receipt.delta.d_blocking as i64) as f64,
                    );
                    let ratio = nb_before / nb_after;
                    if !(rng.gen_range(S::zero()..S::one()) < ratio) {
                        t.apply(&receipt.inverse).expect("inverse applies");
                        t.stats = before;
                    }
                }
                Err(ApplyError::DegenerateFlip(_)) => continue,
                Err(e) => panic!("enumerated flip failed: {e}"),
            }
        }
        let idx = match_state(&t, &states).expect("chain state stays in the enumerated set");
        counts[idx] += 1;
    }
    let n = n_retained as f64;
    let expected = n / m as f64;
    let chi_square: f64 = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    let dof = m - 1;
    let p_value = 1.0
        - ChiSquared::new(dof as f64)
            .expect("dof > 0")
            .cdf(chi_square);
    Ok(UniformityReport {
        counts,
        n_states: n_retained as u64,
        chi_square,
        dof,
        p_value,
    })
}

#[cfg(test)]
mod tests;
