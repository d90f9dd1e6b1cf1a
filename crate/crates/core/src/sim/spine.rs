//! Spine decomposition of a splitting tree conditioned to survive.
//!
//! On survival the tree splits into a Yule tree of rate `eta` (the lineages
//! with infinite descent), trees grafted at rate `b - eta` along every spine
//! lineage, and trees grafted at the times of an `A`-renewal process started
//! on each spine branch whose ancestors live `R`. Grafted trees are
//! conditioned on extinction, which makes them subcritical splitting trees
//! with lifespan measure `e^{-eta r} Lambda(dr)`.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::{poisson, BranchingLaw, TreeSimulator};
use crate::error::{Error, Result};
use crate::model::{DerivedParams, Lifespan, LifespanModel};

/// Tolerance on the identity `int e^{-eta r} Lambda(dr) = b - eta`.
const MASS_TOL: f64 = 1e-10;

/// Splitting tree conditioned on extinction: birth rate `b - eta`, lifespan
/// law `e^{-eta r} Lambda(dr) / (b - eta)`.
#[derive(Debug, Clone, Copy)]
pub struct ConditionedLaw<'a> {
    base: &'a LifespanModel,
    eta: f64,
    rate: f64,
}

impl<'a> ConditionedLaw<'a> {
    pub fn new(base: &'a LifespanModel, params: &DerivedParams) -> Self {
        ConditionedLaw {
            base,
            eta: params.eta,
            rate: (base.birth_rate() - params.eta).max(0.0),
        }
    }
}

impl BranchingLaw for ConditionedLaw<'_> {
    #[inline]
    fn birth_rate(&self) -> f64 {
        self.rate
    }

    fn sample_lifespan<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.base.lifespan() {
            Lifespan::Exponential { rate } => Exp::new(rate + self.eta)
                .map(|d| d.sample(rng))
                .unwrap_or(f64::INFINITY),
            Lifespan::DiracInfinite => f64::INFINITY,
            _ => loop {
                // Acceptance probability is (b - eta) / b > 0.
                let z = self.base.sample_lifespan(rng);
                if rng.random::<f64>() < libm::exp(-self.eta * z) {
                    break z;
                }
            },
        }
    }

    fn mean_offspring(&self) -> Result<f64> {
        Ok(self.base.birth_rate() * self.base.lifespan().size_biased_laplace(self.eta)?)
    }
}

/// Parameters of the decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpineConfig {
    pub eta: f64,
    /// Rate `b - eta` of grafts along each spine lineage.
    pub graft_right_rate: f64,
    /// `int e^{-eta r} Lambda(dr)`, equal to `graft_right_rate`.
    pub conditioned_mass: f64,
}

impl SpineConfig {
    pub fn new(model: &LifespanModel, params: &DerivedParams) -> Result<Self> {
        let rate = model.birth_rate() - params.eta;
        let mass = model.birth_rate() * model.lifespan().laplace(params.eta)?;
        if (mass - rate).abs() > MASS_TOL * model.birth_rate().max(1.0) {
            return Err(Error::invalid(alloc::format!(
                "conditioned mass {mass} differs from b - eta = {rate}"
            )));
        }
        Ok(SpineConfig {
            eta: params.eta,
            graft_right_rate: rate,
            conditioned_mass: mass,
        })
    }
}

/// Draws `(A, R)` with `P(A + R in dz, R in dr) = e^{-eta r} dr Lambda(dz)`, `0 < r < z`.
///
/// `Z = A + R` has law `(1 - e^{-eta z}) Lambda(dz) / eta` (sampled by
/// rejection from `Lambda / b`), then `R | Z = z` is exponential with rate
/// `eta` truncated to `(0, z)`.
pub fn sample_ar<R: Rng + ?Sized>(
    model: &LifespanModel,
    params: &DerivedParams,
    rng: &mut R,
) -> (f64, f64) {
    let eta = params.eta;
    let (z, keep) = loop {
        let z = model.sample_lifespan(rng);
        let keep = -libm::expm1(-eta * z);
        if rng.random::<f64>() < keep {
            break (z, keep);
        }
    };
    let u: f64 = rng.random();
    let r = -libm::log1p(-u * keep) / eta;
    (z - r, r)
}

/// Counts produced by [`simulate_conditioned_spine`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpineRun {
    /// Spine lineages alive at `t` (the Yule part).
    pub spine: u64,
    /// Alive at `t` in trees grafted at rate `b - eta`.
    pub right: u64,
    /// Alive at `t` in trees grafted at the `A`-renewal times.
    pub left: u64,
}

impl SpineRun {
    pub fn population_at_t(&self) -> u64 {
        self.spine + self.right + self.left
    }
}

/// Samples the population at `t` of a tree conditioned on non-extinction.
pub fn simulate_conditioned_spine<R: Rng + ?Sized>(
    model: &LifespanModel,
    params: &DerivedParams,
    t: f64,
    sim: &mut TreeSimulator,
    rng: &mut R,
) -> Result<SpineRun> {
    if !(t >= 0.0) {
        return Err(Error::invalid("simulation horizon must be non-negative"));
    }
    let law = ConditionedLaw::new(model, params);
    let eta = params.eta;
    let right_rate = law.birth_rate();
    let mut branches: Vec<f64> = Vec::with_capacity(16);
    branches.push(0.0);
    let mut run = SpineRun {
        spine: 0,
        right: 0,
        left: 0,
    };
    let mut next = 0;
    while next < branches.len() {
        let start = branches[next];
        next += 1;
        let span = t - start;

        let splits = poisson(eta * span, rng);
        for _ in 0..splits {
            branches.push(start + span * rng.random::<f64>());
        }
        if branches.len() as u64 > sim.cap() {
            return Err(Error::PopulationCap { cap: sim.cap() });
        }

        let grafts = poisson(right_rate * span, rng);
        for _ in 0..grafts {
            let at = start + span * rng.random::<f64>();
            run.right += sim.count_alive(&law, None, t - at, rng)?;
        }

        let mut at = start;
        loop {
            let (a, r) = sample_ar(model, params, rng);
            at += a;
            if !(at <= t) {
                break;
            }
            run.left += sim.count_alive(&law, Some(r), t - at, rng)?;
        }
    }
    run.spine = branches.len() as u64;
    Ok(run)
}

/// Total number of individuals ever born in a subcritical tree, ancestor included.
pub fn total_progeny_subcritical<L: BranchingLaw, R: Rng + ?Sized>(
    law: &L,
    cap: u64,
    rng: &mut R,
) -> Result<u64> {
    let m = law.mean_offspring()?;
    if !(m < 1.0) {
        return Err(Error::invalid(alloc::format!(
            "total progeny needs a subcritical law, mean offspring is {m}"
        )));
    }
    let b = law.birth_rate();
    let mut total = 1u64;
    let mut pending = 1u64;
    while pending > 0 {
        pending -= 1;
        let kids = poisson(b * law.sample_lifespan(rng), rng);
        total += kids;
        pending += kids;
        if total > cap {
            return Err(Error::PopulationCap { cap });
        }
    }
    Ok(total)
}
