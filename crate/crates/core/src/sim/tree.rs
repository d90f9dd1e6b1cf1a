use alloc::collections::VecDeque;
use alloc::vec::Vec;

use rand::Rng;

use super::{poisson, BranchingLaw};
use crate::error::{Error, Result};
use crate::model::{DerivedParams, LifespanModel};

pub const DEFAULT_POPULATION_CAP: u64 = 100_000_000;

/// Outcome of one tree simulated up to `horizon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeRunResult {
    pub population_at_t: u64,
    pub extinct_by_t: bool,
    /// Individuals born after the ancestor.
    pub total_births: u64,
    /// `max_s e^{-eta s} X(s)` over event times, when tracked.
    pub sup_scaled: Option<f64>,
    pub horizon: f64,
}

/// Reusable breadth-first simulator.
///
/// Each individual draws its lifespan, then `Poisson(b * w)` children at
/// uniform times over the part `w` of its life before the horizon. No time
/// discretization is involved.
#[derive(Debug)]
pub struct TreeSimulator {
    cap: u64,
    queue: VecDeque<(f64, f64)>,
    stack: Vec<f64>,
    events: Vec<(f64, i8)>,
    alive_ends: Vec<f64>,
}

impl Default for TreeSimulator {
    fn default() -> Self {
        Self::with_cap(DEFAULT_POPULATION_CAP)
    }
}

impl TreeSimulator {
    pub fn with_cap(cap: u64) -> Self {
        TreeSimulator {
            cap,
            queue: VecDeque::new(),
            stack: Vec::new(),
            events: Vec::new(),
            alive_ends: Vec::new(),
        }
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    /// Simulates one tree on `[0, t]`. The ancestor lifespan is drawn from the
    /// law unless given; `track_sup = Some(eta)` records `sup e^{-eta s} X(s)`.
    pub fn run<L: BranchingLaw, R: Rng + ?Sized>(
        &mut self,
        law: &L,
        ancestor_lifespan: Option<f64>,
        t: f64,
        track_sup: Option<f64>,
        rng: &mut R,
    ) -> Result<TreeRunResult> {
        self.run_inner(law, ancestor_lifespan, t, track_sup, false, rng)
    }

    /// Number alive at `t`; the fast path used by the immigration models.
    #[inline]
    pub fn count_alive<L: BranchingLaw, R: Rng + ?Sized>(
        &mut self,
        law: &L,
        ancestor_lifespan: Option<f64>,
        t: f64,
        rng: &mut R,
    ) -> Result<u64> {
        Ok(self
            .run_inner(law, ancestor_lifespan, t, None, false, rng)?
            .population_at_t)
    }

    /// Simulates to `t` and then decides, by a depth-first search that stops
    /// at the first hit, whether anyone is alive at `proxy_horizon >= t`.
    pub fn run_with_survival<L: BranchingLaw, R: Rng + ?Sized>(
        &mut self,
        law: &L,
        t: f64,
        proxy_horizon: f64,
        rng: &mut R,
    ) -> Result<(TreeRunResult, bool)> {
        let result = self.run_inner(law, None, t, None, true, rng)?;
        let alive_later = self.search_alive(law, t, proxy_horizon.max(t), rng)?;
        Ok((result, alive_later))
    }

    fn run_inner<L: BranchingLaw, R: Rng + ?Sized>(
        &mut self,
        law: &L,
        ancestor_lifespan: Option<f64>,
        t: f64,
        track_sup: Option<f64>,
        keep_alive: bool,
        rng: &mut R,
    ) -> Result<TreeRunResult> {
        if !(t >= 0.0) {
            return Err(Error::invalid("simulation horizon must be non-negative"));
        }
        let b = law.birth_rate();
        self.queue.clear();
        self.events.clear();
        self.alive_ends.clear();
        let first = ancestor_lifespan.unwrap_or_else(|| law.sample_lifespan(rng));
        self.queue.push_back((0.0, first));
        let mut alive = 0u64;
        let mut births = 0u64;
        while let Some((born, life)) = self.queue.pop_front() {
            let end = born + life;
            if end > t {
                alive += 1;
                if keep_alive {
                    self.alive_ends.push(end);
                }
            }
            if track_sup.is_some() {
                self.events.push((born, 1));
                if end <= t {
                    self.events.push((end, -1));
                }
            }
            let window = end.min(t) - born;
            let kids = poisson(b * window, rng);
            births += kids;
            if births > self.cap {
                return Err(Error::PopulationCap { cap: self.cap });
            }
            for _ in 0..kids {
                let at = born + window * rng.random::<f64>();
                let life = law.sample_lifespan(rng);
                self.queue.push_back((at, life));
            }
        }
        let sup_scaled = track_sup.map(|eta| self.sweep_sup(eta));
        Ok(TreeRunResult {
            population_at_t: alive,
            extinct_by_t: alive == 0,
            total_births: births,
            sup_scaled,
            horizon: t,
        })
    }

    // X is piecewise constant and e^{-eta s} decreasing, so the supremum is
    // attained right after some event.
    fn sweep_sup(&mut self, eta: f64) -> f64 {
        self.events
            .sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
        let mut x: i64 = 0;
        let mut best: f64 = 0.0;
        let mut i = 0;
        while i < self.events.len() {
            let s = self.events[i].0;
            while i < self.events.len() && self.events[i].0 == s {
                x += i64::from(self.events[i].1);
                i += 1;
            }
            best = best.max(libm::exp(-eta * s) * x as f64);
        }
        best
    }

    fn search_alive<L: BranchingLaw, R: Rng + ?Sized>(
        &mut self,
        law: &L,
        t: f64,
        horizon: f64,
        rng: &mut R,
    ) -> Result<bool> {
        if self.alive_ends.iter().any(|&end| end > horizon) {
            return Ok(true);
        }
        let b = law.birth_rate();
        let mut explored = 0u64;
        for idx in 0..self.alive_ends.len() {
            let end = self.alive_ends[idx];
            self.stack.clear();
            let kids = poisson(b * (end - t), rng);
            for _ in 0..kids {
                self.stack.push(t + (end - t) * rng.random::<f64>());
            }
            while let Some(born) = self.stack.pop() {
                let life = law.sample_lifespan(rng);
                if born + life > horizon {
                    return Ok(true);
                }
                explored += 1;
                if explored > self.cap {
                    return Err(Error::PopulationCap { cap: self.cap });
                }
                let kids = poisson(b * life, rng);
                for _ in 0..kids {
                    self.stack.push(born + life * rng.random::<f64>());
                }
            }
        }
        Ok(false)
    }
}

/// One splitting tree from a single ancestor, observed at `t`.
pub fn simulate_tree<R: Rng + ?Sized>(
    model: &LifespanModel,
    t: f64,
    rng: &mut R,
) -> Result<TreeRunResult> {
    TreeSimulator::default().run(model, None, t, None, rng)
}

/// `e^{-eta t} X(t)` if the tree is alive at `t`, `None` otherwise.
pub fn scaled_limit_sample<R: Rng + ?Sized>(
    model: &LifespanModel,
    params: &DerivedParams,
    t: f64,
    rng: &mut R,
) -> Result<Option<f64>> {
    let x = simulate_tree(model, t, rng)?.population_at_t;
    Ok((x > 0).then(|| libm::exp(-params.eta * t) * x as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Lifespan;
    use crate::rng::stream;
    use crate::scale::solve_scale;
    use crate::stats::{chi_square_discrete, ks_test, moment_z, DEFAULT_LEVEL};
    use core::f64::consts::LN_2;

    fn exp21() -> LifespanModel {
        LifespanModel::exponential(2.0, 1.0).unwrap()
    }

    #[test]
    fn zero_horizon() {
        let r = simulate_tree(&exp21(), 0.0, &mut stream(1, 0)).unwrap();
        assert_eq!(r.population_at_t, 1);
        assert_eq!(r.total_births, 0);
        assert!(!r.extinct_by_t);
    }

    #[test]
    fn reproducible_given_stream() {
        let a = simulate_tree(&exp21(), 4.0, &mut stream(9, 3)).unwrap();
        let b = simulate_tree(&exp21(), 4.0, &mut stream(9, 3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn result_invariants_and_sup() {
        let model = exp21();
        let mut sim = TreeSimulator::default();
        for i in 0..500 {
            let r = sim
                .run(&model, None, 3.0, Some(1.0), &mut stream(2, i))
                .unwrap();
            assert!(r.population_at_t <= r.total_births + 1);
            assert_eq!(r.extinct_by_t, r.population_at_t == 0);
            let sup = r.sup_scaled.unwrap();
            assert!(sup >= 1.0);
            assert!(sup >= (-3.0f64).exp() * r.population_at_t as f64 - 1e-12);
        }
    }

    #[test]
    fn cap_is_an_error() {
        let mut sim = TreeSimulator::with_cap(50);
        let model = LifespanModel::new(1.0, Lifespan::DiracInfinite).unwrap();
        let r = sim.run(&model, None, 10.0, None, &mut stream(3, 0));
        assert!(matches!(r, Err(Error::PopulationCap { cap: 50 })));
    }

    #[test]
    fn transient_law_exponential() {
        let model = exp21();
        let grid = solve_scale(&model, 1.0, 1e-4).unwrap();
        let mut sim = TreeSimulator::default();
        let xs: Vec<u64> = (0..10_000)
            .map(|i| {
                sim.count_alive(&model, None, LN_2, &mut stream(21, i))
                    .unwrap()
            })
            .collect();
        let r = chi_square_discrete(
            "x",
            &xs,
            |n| grid.x_t_pmf(LN_2, n).unwrap(),
            5.0,
            DEFAULT_LEVEL,
            11,
        )
        .unwrap();
        assert!(r.passed, "{r:?}");
        let zeros: Vec<f64> = xs.iter().map(|&x| f64::from(u8::from(x == 0))).collect();
        let z = moment_z("p0", &zeros, 1.0 / 3.0, Some((2.0f64 / 9.0).sqrt()), 3.0).unwrap();
        assert!(z.passed, "{z:?}");
    }

    #[test]
    fn transient_law_other_families() {
        for model in [
            LifespanModel::new(1.0, Lifespan::DiracInfinite).unwrap(),
            LifespanModel::new(2.0, Lifespan::DiracFinite { at: 1.0 }).unwrap(),
            LifespanModel::new(1.5, Lifespan::Uniform { lo: 0.5, hi: 2.5 }).unwrap(),
            LifespanModel::new(
                2.0,
                Lifespan::Gamma {
                    shape: 2.0,
                    rate: 1.5,
                },
            )
            .unwrap(),
        ] {
            let t = 2.0;
            let grid = solve_scale(&model, t, 1e-3).unwrap();
            let mut sim = TreeSimulator::default();
            let xs: Vec<u64> = (0..10_000)
                .map(|i| {
                    sim.count_alive(&model, None, t, &mut stream(22, i))
                        .unwrap()
                })
                .collect();
            let r = chi_square_discrete(
                "x",
                &xs,
                |n| grid.x_t_pmf(t, n).unwrap(),
                5.0,
                DEFAULT_LEVEL,
                11,
            )
            .unwrap();
            assert!(r.passed, "{:?} {r:?}", model.lifespan());
        }
    }

    #[test]
    fn pure_birth_is_geometric_by_ks_on_continuous_scale() {
        // KS needs a continuous law; X(2) ~ Geometric(e^{-2}) is checked through
        // the jittered value X - U, whose CDF is piecewise linear.
        let model = LifespanModel::new(1.0, Lifespan::DiracInfinite).unwrap();
        let p = (-2.0f64).exp();
        let mut rng = stream(23, 0);
        let mut sim = TreeSimulator::default();
        let xs: Vec<f64> = (0..10_000)
            .map(|_| {
                sim.count_alive(&model, None, 2.0, &mut rng).unwrap() as f64 - rng.random::<f64>()
            })
            .collect();
        let cdf = |y: f64| {
            if y <= 0.0 {
                return 0.0;
            }
            let k = libm::floor(y);
            let below = 1.0 - (1.0 - p).powi(k as i32);
            below + (y - k) * p * (1.0 - p).powi(k as i32)
        };
        assert!(ks_test("geo", &xs, cdf, DEFAULT_LEVEL).unwrap().passed);
    }

    #[test]
    fn extinction_fraction_approaches_limit_from_below() {
        let model = exp21();
        let mut sim = TreeSimulator::default();
        let mut fracs = Vec::new();
        for t in [1.0, 4.0] {
            let n = 10_000;
            let ext = (0..n)
                .filter(|&i| {
                    sim.count_alive(&model, None, t, &mut stream(24, i))
                        .unwrap()
                        == 0
                })
                .count();
            fracs.push(ext as f64 / n as f64);
        }
        // P(X(t) = 0) = 1 - e^t / (2e^t - 1).
        for (f, t) in fracs.iter().zip([1.0f64, 4.0]) {
            let exact = 1.0 - t.exp() / (2.0 * t.exp() - 1.0);
            let se = (exact * (1.0 - exact) / 10_000.0).sqrt();
            assert!((f - exact).abs() < 4.0 * se);
            assert!(*f < 0.5 + 4.0 * se);
        }
        assert!(fracs[0] <= fracs[1] + 0.01);
    }

    #[test]
    fn survival_search_matches_exact_probability() {
        // Alive at 4 given the state at 1, for b=2, d=1: P(X(4) > 0) = e^4/(2e^4-1).
        let model = exp21();
        let mut sim = TreeSimulator::default();
        let n = 10_000;
        let alive = (0..n)
            .filter(|&i| {
                sim.run_with_survival(&model, 1.0, 4.0, &mut stream(25, i))
                    .unwrap()
                    .1
            })
            .count();
        let exact = 4f64.exp() / (2.0 * 4f64.exp() - 1.0);
        let se = (exact * (1.0 - exact) / n as f64).sqrt();
        assert!((alive as f64 / n as f64 - exact).abs() < 4.0 * se);
    }
}
