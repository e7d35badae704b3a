//! Gibbs energy models: unnormalized densities `h` specified through an
//! energy `-log h` over the cached statistics block, plus the exact
//! incremental log-ratio under any update receipt. All built-ins are
//! strictly positive, hence hereditary, and stable with an explicit witness
//! constant `K` such that `h(T) <= K^n` with `n` the internal segment count.

use crate::real::Real;
use crate::tess::{StatDelta, StatsCache, TTessellation};

/// Which vertices enter the angle sum of the angle-penalty energy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum AngleVertices {
    /// Every vertex except the domain corners (the literal reading).
    #[default]
    AllNonCorner,
    /// Only vertices strictly inside the domain.
    InternalOnly,
}

/// An unnormalized density over T-tessellations, stable and evaluated
/// through the statistics cache.
pub trait EnergyModel<S: Real> {
    /// Energy `-log h` up to an additive constant, as a function of the
    /// statistics block.
    fn energy_of(&self, stats: &StatsCache<S>) -> S;

    /// `log h(UT) - log h(T)` from the per-statistic deltas of an applied
    /// update; must equal the energy difference up to rounding.
    fn log_h_ratio(&self, delta: &StatDelta<S>) -> S;

    /// Whether `h > 0` everywhere (all built-ins are).
    fn strictly_positive(&self) -> bool {
        true
    }

    /// A stability witness: `h(T) <= K^nseint(T)`.
    fn stability_constant(&self) -> Option<S>;

    fn name(&self) -> String;

    /// Total energy of a tessellation.
    fn energy(&self, t: &TTessellation<S>) -> S {
        self.energy_of(t.stats())
    }
}

/// A model is hereditary whenever its density never vanishes; removing or
/// flipping features then cannot leave the support.
pub fn is_hereditary<S: Real, M: EnergyModel<S> + ?Sized>(model: &M) -> bool {
    model.strictly_positive()
}

/// Completely random T-tessellation with scaling parameter `tau`:
/// energy `-nseint log tau`.
#[derive(Clone, Copy, Debug)]
pub struct CrttModel<S> {
    pub tau: S,
}

impl<S: Real> CrttModel<S> {
    pub fn new(tau: S) -> Self {
        assert!(tau > S::zero(), "tau must be positive");
        CrttModel { tau }
    }
}

impl<S: Real> EnergyModel<S> for CrttModel<S> {
    fn energy_of(&self, stats: &StatsCache<S>) -> S {
        -S::of(stats.internal_segments as f64) * self.tau.ln()
    }

    fn log_h_ratio(&self, delta: &StatDelta<S>) -> S {
        S::of(delta.d_internal_segments as f64) * self.tau.ln()
    }

    fn stability_constant(&self) -> Option<S> {
        Some(self.tau.max(S::one()))
    }

    fn name(&self) -> String {
        format!("crtt(tau={})", self.tau)
    }
}

/// Arak-Clifford-Surgailis T-tessellation:
/// energy `(tau/pi) l(T) + nveint log 2 - nseint log tau`. The linear
/// intensity of the model equals `tau`.
#[derive(Clone, Copy, Debug)]
pub struct AcsModel<S> {
    pub tau: S,
}

impl<S: Real> AcsModel<S> {
    pub fn new(tau: S) -> Self {
        assert!(tau > S::zero(), "tau must be positive");
        AcsModel { tau }
    }
}

impl<S: Real> EnergyModel<S> for AcsModel<S> {
    fn energy_of(&self, stats: &StatsCache<S>) -> S {
        self.tau / S::PI() * stats.total_edge_length
            + S::of(stats.internal_vertices as f64) * S::of(2.0).ln()
            - S::of(stats.internal_segments as f64) * self.tau.ln()
    }

    fn log_h_ratio(&self, delta: &StatDelta<S>) -> S {
        -(self.tau / S::PI() * delta.d_length
            + S::of(delta.d_internal_vertices as f64) * S::of(2.0).ln()
            - S::of(delta.d_internal_segments as f64) * self.tau.ln())
    }

    fn stability_constant(&self) -> Option<S> {
        // The length and vertex terms only increase the energy.
        Some(self.tau.max(S::one()))
    }

    fn name(&self) -> String {
        format!("acs(tau={})", self.tau)
    }
}

/// Squared cell area penalty: energy `-nseint log tau + alpha a2(T)`.
/// Penalizes dispersed cell sizes; `a2(T) <= a(D)^2` keeps it stable.
#[derive(Clone, Copy, Debug)]
pub struct AreaModel<S> {
    pub tau: S,
    pub alpha: S,
}

impl<S: Real> AreaModel<S> {
    pub fn new(tau: S, alpha: S) -> Self {
        assert!(tau > S::zero() && alpha >= S::zero());
        AreaModel { tau, alpha }
    }
}

impl<S: Real> EnergyModel<S> for AreaModel<S> {
    fn energy_of(&self, stats: &StatsCache<S>) -> S {
        -S::of(stats.internal_segments as f64) * self.tau.ln() + self.alpha * stats.sum_sq_cell_area
    }

    fn log_h_ratio(&self, delta: &StatDelta<S>) -> S {
        S::of(delta.d_internal_segments as f64) * self.tau.ln()
            - self.alpha * delta.d_sum_sq_cell_area
    }

    fn stability_constant(&self) -> Option<S> {
        Some(self.tau.max(S::one()))
    }

    fn name(&self) -> String {
        format!("area(tau={}, alpha={})", self.tau, self.alpha)
    }
}

/// Angle reward: energy `-nseint log tau - beta sum_v phi(v)`, favouring
/// junction angles close to a right angle when `beta > 0`.
#[derive(Clone, Copy, Debug)]
pub struct AngleModel<S> {
    pub tau: S,
    pub beta: S,
    pub vertices: AngleVertices,
}

impl<S: Real> AngleModel<S> {
    pub fn new(tau: S, beta: S) -> Self {
        assert!(tau > S::zero() && beta >= S::zero());
        AngleModel {
            tau,
            beta,
            vertices: AngleVertices::AllNonCorner,
        }
    }

    pub fn with_vertices(mut self, vertices: AngleVertices) -> Self {
        self.vertices = vertices;
        self
    }

    fn angle_sum(&self, internal: S, boundary: S) -> S {
        match self.vertices {
            AngleVertices::AllNonCorner => internal + boundary,
            AngleVertices::InternalOnly => internal,
        }
    }
}

impl<S: Real> EnergyModel<S> for AngleModel<S> {
    fn energy_of(&self, stats: &StatsCache<S>) -> S {
        -S::of(stats.internal_segments as f64) * self.tau.ln()
            - self.beta * self.angle_sum(stats.sum_angle_internal, stats.sum_angle_boundary)
    }

    fn log_h_ratio(&self, delta: &StatDelta<S>) -> S {
        S::of(delta.d_internal_segments as f64) * self.tau.ln()
            + self.beta * self.angle_sum(delta.d_sum_angle_internal, delta.d_sum_angle_boundary)
    }

    fn stability_constant(&self) -> Option<S> {
        // Each internal segment contributes two vertices, each with an acute
        // angle at most pi/2: sum phi <= pi * nseint.
        Some(self.tau * (self.beta * S::PI()).exp())
    }

    fn name(&self) -> String {
        format!("angle(tau={}, beta={})", self.tau, self.beta)
    }
}

/// Sum of component energies (product of densities).
pub struct CompositeModel<S> {
    components: Vec<Box<dyn EnergyModel<S> + Send + Sync>>,
}

impl<S: Real> CompositeModel<S> {
    pub fn new(components: Vec<Box<dyn EnergyModel<S> + Send + Sync>>) -> Self {
        assert!(
            !components.is_empty(),
            "composite needs at least one component"
        );
        CompositeModel { components }
    }
}

impl<S: Real> EnergyModel<S> for CompositeModel<S> {
    fn energy_of(&self, stats: &StatsCache<S>) -> S {
        self.components
            .iter()
            .fold(S::zero(), |acc, m| acc + m.energy_of(stats))
    }

    fn log_h_ratio(&self, delta: &StatDelta<S>) -> S {
        self.components
            .iter()
            .fold(S::zero(), |acc, m| acc + m.log_h_ratio(delta))
    }

    fn strictly_positive(&self) -> bool {
        self.components.iter().all(|m| m.strictly_positive())
    }

    fn stability_constant(&self) -> Option<S> {
        self.components
            .iter()
            .map(|m| m.stability_constant())
            .try_fold(S::one(), |acc, k| k.map(|k| acc * k))
    }

    fn name(&self) -> String {
        let parts: Vec<String> = self.components.iter().map(|m| m.name()).collect();
        format!("composite({})", parts.join(" + "))
    }
}

impl<S: Real, M: EnergyModel<S> + ?Sized> EnergyModel<S> for &M {
    fn energy_of(&self, stats: &StatsCache<S>) -> S {
        (**self).energy_of(stats)
    }
    fn log_h_ratio(&self, delta: &StatDelta<S>) -> S {
        (**self).log_h_ratio(delta)
    }
    fn strictly_positive(&self) -> bool {
        (**self).strictly_positive()
    }
    fn stability_constant(&self) -> Option<S> {
        (**self).stability_constant()
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::unit_square;
    use crate::ops::Update;
    use crate::tess::TTessellation;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn empty() -> TTessellation<f64> {
        TTessellation::new_empty(unit_square::<f64>()).unwrap()
    }

    #[test]
    fn crtt_tau_one_has_zero_energy() {
        let m = CrttModel::new(1.0);
        let t = empty();
        assert_eq!(m.energy(&t), 0.0);
        // Any split ratio is log tau = 0.
        let mut delta = crate::tess::StatDelta::zero();
        delta.d_internal_segments = 1;
        assert_eq!(m.log_h_ratio(&delta), 0.0);
    }

    #[test]
    fn acs_energy_of_empty_square() {
        let tau = 10.75f64;
        let m = AcsModel::new(tau);
        let t = empty();
        // nveint = 0, nseint = 0, l = 4.
        assert_relative_eq!(
            m.energy(&t),
            tau / std::f64::consts::PI * 4.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn area_energy_of_empty_square() {
        let m = AreaModel::new(1.0, 3.5);
        assert_relative_eq!(m.energy(&empty()), 3.5, max_relative = 1e-12);
    }

    #[test]
    fn crtt_flip_ratio_is_one() {
        let m = CrttModel::new(1.9);
        let mut delta = crate::tess::StatDelta::zero();
        delta.d_length = 0.37; // flips change lengths but not segment counts
        assert_eq!(m.log_h_ratio(&delta), 0.0);
    }

    #[test]
    fn acs_split_ratio_for_interior_chord() {
        // A split by an interior chord adds one segment and two internal
        // vertices: log ratio = -(tau/pi) l(s) - 2 log 2 + log tau.
        let tau = 2.5f64;
        let m = AcsModel::new(tau);
        let len = 0.42;
        let mut delta = crate::tess::StatDelta::zero();
        delta.d_internal_segments = 1;
        delta.d_internal_vertices = 2;
        delta.d_length = len;
        assert_relative_eq!(
            m.log_h_ratio(&delta),
            -tau / std::f64::consts::PI * len - 2.0 * 2.0f64.ln() + tau.ln(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn builtins_are_hereditary() {
        assert!(is_hereditary::<f64, _>(&CrttModel::new(1.0)));
        assert!(is_hereditary::<f64, _>(&AcsModel::new(2.0)));
        assert!(is_hereditary::<f64, _>(&AreaModel::new(1.0, 10.0)));
        assert!(is_hereditary::<f64, _>(&AngleModel::new(1.0, 2.0)));
        let comp = CompositeModel::new(vec![
            Box::new(AreaModel::new(2.0, 93000.0)),
            Box::new(AngleModel::new(1.0, 200.0)),
        ]);
        assert!(is_hereditary::<f64, _>(&comp));
    }

    /// Incremental/total consistency over random accepted updates, and the
    /// stability bound h <= K^n checked on visited states.
    #[test]
    fn incremental_matches_recomputed_energy() {
        let models: Vec<Box<dyn EnergyModel<f64> + Send + Sync>> = vec![
            Box::new(CrttModel::new(1.9)),
            Box::new(AcsModel::new(4.0)),
            Box::new(AreaModel::new(1.0, 12.0)),
            Box::new(AngleModel::new(1.5, 2.5)),
            Box::new(CompositeModel::new(vec![
                Box::new(AreaModel::new(2.0, 9.3)),
                Box::new(AngleModel::new(1.0, 2.0)),
            ])),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for m in &models {
            let mut t = empty();
            let mut energy = m.energy(&t);
            for step in 0..300 {
                let update = match rng.gen_range(0..3) {
                    0 => Update::Split(t.sample_uniform_split(&mut rng)),
                    1 => match t.enumerate_merges().first() {
                        Some(&u) => Update::Merge(u),
                        None => continue,
                    },
                    _ => {
                        let fs = t.enumerate_flips();
                        if fs.is_empty() {
                            continue;
                        }
                        Update::Flip(fs[rng.gen_range(0..fs.len())])
                    }
                };
                let receipt = match t.apply(&update) {
                    Ok(r) => r,
                    Err(_) => continue,
                };
                energy += -m.log_h_ratio(&receipt.delta);
                let fresh = m.energy_of(&t.recompute_stats());
                assert!(
                    (energy - fresh).abs() <= 1e-8 * (1.0 + fresh.abs()),
                    "{} step {step}: incremental {energy} vs fresh {fresh}",
                    m.name()
                );
                // Stability: h <= K^nseint, i.e. -energy <= nseint log K.
                if let Some(k) = m.stability_constant() {
                    let n = t.stats().internal_segments as f64;
                    assert!(
                        -fresh <= n * k.ln() + 1e-9,
                        "{}: stability violated at n={n}: h exceeds K^n",
                        m.name()
                    );
                }
            }
        }
    }
}
