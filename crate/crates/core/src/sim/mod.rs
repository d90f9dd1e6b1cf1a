//! Forward simulation of splitting trees.

mod spine;
mod tree;

pub use spine::{
    sample_ar, simulate_conditioned_spine, total_progeny_subcritical, ConditionedLaw, SpineConfig,
    SpineRun,
};
pub use tree::{
    scaled_limit_sample, simulate_tree, TreeRunResult, TreeSimulator, DEFAULT_POPULATION_CAP,
};

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::Result;
use crate::model::LifespanModel;

/// Birth rate and lifespan law of a homogeneous binary branching population.
pub trait BranchingLaw {
    fn birth_rate(&self) -> f64;
    fn sample_lifespan<R: Rng + ?Sized>(&self, rng: &mut R) -> f64;
    /// Mean number of children per individual.
    fn mean_offspring(&self) -> Result<f64>;
}

impl BranchingLaw for LifespanModel {
    #[inline]
    fn birth_rate(&self) -> f64 {
        LifespanModel::birth_rate(self)
    }

    #[inline]
    fn sample_lifespan<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        LifespanModel::sample_lifespan(self, rng)
    }

    fn mean_offspring(&self) -> Result<f64> {
        LifespanModel::mean_offspring(self)
    }
}

/// Poisson draw that accepts a zero mean.
#[inline]
pub(crate) fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if !(mean > 0.0) {
        return 0;
    }
    match Poisson::new(mean) {
        Ok(d) => d.sample(rng) as u64,
        Err(_) => u64::MAX,
    }
}
