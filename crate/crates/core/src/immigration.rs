//! Splitting trees with Poissonian immigration under the three type models:
//! every immigrant founds a new type (Model I), types are drawn from a fixed
//! distribution (Model II), or each immigrant comes from a mainland species
//! picked with probability proportional to its abundance and itself starts an
//! immigration process at rate equal to that abundance (Model III).

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};
use crate::model::{GenericDensity, LifespanModel};
use crate::quad;
use crate::scale::ScaleGrid;
use crate::sim::TreeSimulator;
use crate::special::ln_gamma;

/// Type probabilities `p_1, p_2, ...` for Model II: an explicit head,
/// optionally followed by a geometric tail `p_{K+j} = tau (1 - r) r^{j-1}`
/// carrying the remaining mass `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeWeights {
    head: Vec<f64>,
    tail_ratio: Option<f64>,
    tail_mass: f64,
}

impl TypeWeights {
    pub fn finite(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() || p.iter().any(|x| !(*x > 0.0)) {
            return Err(Error::invalid("type probabilities must be positive"));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(alloc::format!(
                "type probabilities sum to {sum}, not 1"
            )));
        }
        Ok(TypeWeights {
            head: p,
            tail_ratio: None,
            tail_mass: 0.0,
        })
    }

    pub fn with_geometric_tail(head: Vec<f64>, ratio: f64) -> Result<Self> {
        if head.iter().any(|x| !(*x > 0.0)) {
            return Err(Error::invalid("type probabilities must be positive"));
        }
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::invalid("geometric tail ratio must lie in (0, 1)"));
        }
        let tail_mass = 1.0 - head.iter().sum::<f64>();
        if !(tail_mass > 0.0) {
            return Err(Error::invalid(
                "head probabilities leave no mass for the tail",
            ));
        }
        Ok(TypeWeights {
            head,
            tail_ratio: Some(ratio),
            tail_mass,
        })
    }

    /// Number of types, `None` when infinite.
    pub fn type_count(&self) -> Option<usize> {
        match self.tail_ratio {
            None => Some(self.head.len()),
            Some(_) => None,
        }
    }

    pub fn head(&self) -> &[f64] {
        &self.head
    }

    /// `p_i` for `i >= 1`.
    pub fn p(&self, i: usize) -> f64 {
        if i == 0 {
            return 0.0;
        }
        if i <= self.head.len() {
            return self.head[i - 1];
        }
        match self.tail_ratio {
            Some(r) => self.tail_mass * (1.0 - r) * libm::pow(r, (i - self.head.len() - 1) as f64),
            None => 0.0,
        }
    }

    /// `sum_{j > i} p_j`, computed from the tail to avoid cancellation.
    pub fn remaining_after(&self, i: usize) -> f64 {
        let k = self.head.len();
        if i >= k {
            return match self.tail_ratio {
                Some(r) => self.tail_mass * libm::pow(r, (i - k) as f64),
                None => 0.0,
            };
        }
        self.head[i..].iter().sum::<f64>() + self.tail_mass
    }

    fn sample_label<R: Rng + ?Sized>(&self, rng: &mut R) -> TypeLabel {
        let mut u: f64 = rng.random();
        for (i, p) in self.head.iter().enumerate() {
            if u < *p {
                return TypeLabel::Type(i as u32 + 1);
            }
            u -= p;
        }
        match self.tail_ratio {
            Some(_) => TypeLabel::Tail,
            // Rounding left a sliver of mass past the last type.
            None => TypeLabel::Type(self.head.len() as u32),
        }
    }
}

/// Mainland abundance density `f` for Model III.
#[derive(Debug, Clone)]
pub enum AbundanceDensity {
    /// `f(x) = e^{-a x} / x`: immigration rates are `Exponential(a)`, `theta = 1/a`.
    FisherLogSeries { a: f64 },
    /// Arbitrary `f`, stored through its normalized size-biased density `x f(x) / theta`.
    Generic {
        size_biased: GenericDensity,
        theta: f64,
        second_moment: f64,
    },
}

impl AbundanceDensity {
    pub fn fisher_log_series(a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::invalid("log-series parameter a must be positive"));
        }
        Ok(AbundanceDensity::FisherLogSeries { a })
    }

    /// Builds Model III from `f` on `(0, upper)`; needs finite `int x f` and `int x^2 f`.
    pub fn generic<F>(f: F, upper: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let size_biased = GenericDensity::new(move |x| x * f(x), upper)?;
        let theta = size_biased.raw_mass();
        let second_moment = theta * size_biased.expect(|x| x)?;
        if !second_moment.is_finite() {
            return Err(Error::invalid("int x^2 f(x) dx must be finite"));
        }
        Ok(AbundanceDensity::Generic {
            size_biased,
            theta,
            second_moment,
        })
    }

    /// `theta = int x f(x) dx`.
    pub fn theta(&self) -> f64 {
        match self {
            AbundanceDensity::FisherLogSeries { a } => 1.0 / a,
            AbundanceDensity::Generic { theta, .. } => *theta,
        }
    }

    /// `int x^2 f(x) dx`.
    pub fn second_moment(&self) -> f64 {
        match self {
            AbundanceDensity::FisherLogSeries { a } => 1.0 / (a * a),
            AbundanceDensity::Generic { second_moment, .. } => *second_moment,
        }
    }

    /// Density of an immigrant's rate `Delta`, i.e. `x f(x) / theta`.
    pub fn rate_pdf(&self, x: f64) -> f64 {
        match self {
            AbundanceDensity::FisherLogSeries { a } => {
                if x > 0.0 {
                    a * libm::exp(-a * x)
                } else {
                    0.0
                }
            }
            AbundanceDensity::Generic { size_biased, .. } => size_biased.pdf(x),
        }
    }

    pub fn rate_upper(&self) -> f64 {
        match self {
            AbundanceDensity::FisherLogSeries { .. } => f64::INFINITY,
            AbundanceDensity::Generic { size_biased, .. } => size_biased.upper(),
        }
    }

    pub fn sample_rate<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            AbundanceDensity::FisherLogSeries { a } => {
                Exp::new(*a).map(|d| d.sample(rng)).unwrap_or(0.0)
            }
            AbundanceDensity::Generic { size_biased, .. } => size_biased.sample(rng),
        }
    }

    /// `E[g(Delta)]` by quadrature against the rate density.
    pub fn expect_rate<G: Fn(f64) -> f64>(&self, g: G) -> Result<f64> {
        quad::integrate(|x| self.rate_pdf(x) * g(x), 0.0, self.rate_upper())
    }
}

#[derive(Debug, Clone)]
pub enum ImmigrationModel {
    /// Model I: every immigrant founds a new type.
    Fresh,
    /// Model II: immigrant types drawn from fixed probabilities.
    Typed(TypeWeights),
    /// Model III: size-biased mainland species, each immigrating at its own rate.
    SizeBiased(AbundanceDensity),
}

#[derive(Debug, Clone)]
pub struct ImmigrationConfig {
    theta: f64,
    model: ImmigrationModel,
}

impl ImmigrationConfig {
    pub fn model_i(theta: f64) -> Result<Self> {
        Self::check_theta(theta)?;
        Ok(ImmigrationConfig {
            theta,
            model: ImmigrationModel::Fresh,
        })
    }

    pub fn model_ii(theta: f64, weights: TypeWeights) -> Result<Self> {
        Self::check_theta(theta)?;
        Ok(ImmigrationConfig {
            theta,
            model: ImmigrationModel::Typed(weights),
        })
    }

    /// Model III; `theta` is determined by the abundance density.
    pub fn model_iii(density: AbundanceDensity) -> Result<Self> {
        let theta = density.theta();
        Self::check_theta(theta)?;
        Ok(ImmigrationConfig {
            theta,
            model: ImmigrationModel::SizeBiased(density),
        })
    }

    fn check_theta(theta: f64) -> Result<()> {
        if theta > 0.0 && theta.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid("immigration rate theta must be positive"))
        }
    }

    #[inline]
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn model(&self) -> &ImmigrationModel {
        &self.model
    }

    /// Short model name: `I`, `II` or `III`.
    pub fn model_name(&self) -> &'static str {
        match self.model {
            ImmigrationModel::Fresh => "I",
            ImmigrationModel::Typed(_) => "II",
            ImmigrationModel::SizeBiased(_) => "III",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TypeLabel {
    /// Model I: the family's arrival index.
    Family(u64),
    /// Model II head type.
    Type(u32),
    /// Model II geometric tail, pooled.
    Tail,
    /// Model III: the mainland species' arrival index.
    Species(u64),
}

impl fmt::Display for TypeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeLabel::Family(i) | TypeLabel::Species(i) => write!(f, "{i}"),
            TypeLabel::Type(i) => write!(f, "{i}"),
            TypeLabel::Tail => f.write_str("tail"),
        }
    }
}

/// One family: the descendants of one arrival (in Model III, of all the
/// arrivals of one mainland species).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Family {
    pub immigration_time: f64,
    pub label: TypeLabel,
    pub abundance: u64,
    /// Model III immigration rate `Delta`.
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSnapshot {
    pub t: f64,
    /// Ordered by increasing immigration time.
    pub families: Vec<Family>,
    pub total: u64,
}

fn poisson_times<R: Rng + ?Sized>(
    rate: f64,
    from: f64,
    to: f64,
    rng: &mut R,
    mut each: impl FnMut(f64, &mut R) -> Result<()>,
) -> Result<()> {
    if !(rate > 0.0) {
        return Ok(());
    }
    let gap = Exp::new(rate).map_err(|_| Error::invalid("bad Poisson rate"))?;
    let mut s = from;
    loop {
        s += gap.sample(rng);
        if !(s <= to) {
            return Ok(());
        }
        each(s, rng)?;
    }
}

/// Simulates the island population at `t`; the first immigrant arrives at
/// the first point of the rate-`theta` Poisson process (no immigrant at 0).
pub fn simulate_immigration<R: Rng + ?Sized>(
    model: &LifespanModel,
    config: &ImmigrationConfig,
    t: f64,
    sim: &mut TreeSimulator,
    rng: &mut R,
) -> Result<PopulationSnapshot> {
    if !(t >= 0.0) {
        return Err(Error::invalid("observation time must be non-negative"));
    }
    let mut families = Vec::new();
    let mut total = 0u64;
    let mut index = 0u64;
    poisson_times(config.theta, 0.0, t, rng, |arrival, rng| {
        index += 1;
        let (label, abundance, rate) = match &config.model {
            ImmigrationModel::Fresh => (
                TypeLabel::Family(index),
                sim.count_alive(model, None, t - arrival, rng)?,
                None,
            ),
            ImmigrationModel::Typed(w) => {
                let label = w.sample_label(rng);
                (label, sim.count_alive(model, None, t - arrival, rng)?, None)
            }
            ImmigrationModel::SizeBiased(d) => {
                let delta = d.sample_rate(rng);
                let mut sub = 0u64;
                poisson_times(delta, arrival, t, rng, |s, rng| {
                    sub += sim.count_alive(model, None, t - s, rng)?;
                    Ok(())
                })?;
                (TypeLabel::Species(index), sub, Some(delta))
            }
        };
        total += abundance;
        families.push(Family {
            immigration_time: arrival,
            label,
            abundance,
            rate,
        });
        Ok(())
    })?;
    Ok(PopulationSnapshot { t, families, total })
}

/// Negative binomial law of `I(t)` (Models I and II): parameters
/// `p = 1 - 1/W(t)` and `k = theta / b`.
pub fn i_t_pmf(grid: &ScaleGrid, config: &ImmigrationConfig, t: f64, n: u64) -> Result<f64> {
    if matches!(config.model, ImmigrationModel::SizeBiased(_)) {
        return Err(Error::invalid("no closed-form law of I(t) for Model III"));
    }
    if !(t > 0.0) {
        return Err(Error::invalid("i_t_pmf requires t > 0"));
    }
    let w = grid.w_at(t)?.0;
    let k = config.theta / grid.birth_rate();
    let q = 1.0 / w;
    if n == 0 {
        return Ok(libm::pow(q, k));
    }
    let p = 1.0 - q;
    if p <= 0.0 {
        return Ok(0.0);
    }
    let nf = n as f64;
    Ok(libm::exp(
        ln_gamma(k + nf) - ln_gamma(k) - ln_gamma(nf + 1.0) + nf * libm::log(p) + k * libm::log(q),
    ))
}

/// Fractions of the surviving families, oldest first.
pub fn ranked_surviving_fractions(snapshot: &PopulationSnapshot) -> Result<Vec<f64>> {
    if snapshot.total == 0 {
        return Err(Error::EmptyPopulation);
    }
    let total = snapshot.total as f64;
    Ok(snapshot
        .families
        .iter()
        .filter(|f| f.abundance > 0)
        .map(|f| f.abundance as f64 / total)
        .collect())
}

/// Fraction of the population carried by each type label present.
pub fn type_aggregated_fractions(snapshot: &PopulationSnapshot) -> Result<Vec<(TypeLabel, f64)>> {
    if snapshot.total == 0 {
        return Err(Error::EmptyPopulation);
    }
    let mut by_type: BTreeMap<TypeLabel, u64> = BTreeMap::new();
    for f in &snapshot.families {
        *by_type.entry(f.label).or_insert(0) += f.abundance;
    }
    let total = snapshot.total as f64;
    Ok(by_type
        .into_iter()
        .map(|(l, a)| (l, a as f64 / total))
        .collect())
}
