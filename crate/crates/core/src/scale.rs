//! The scale function `W` (Laplace transform `1/psi`) and the exact law of the
//! population size it encodes.
//!
//! `W` solves `W' = b W - W * Lambda` with `W(0) = 1` and `W(u) = 0` for
//! `u < 0`. The convolution is evaluated by product integration: `W` is taken
//! piecewise linear between grid points and integrated exactly against
//! `Lambda` cell by cell, which keeps Dirac atoms exact (an atom at `a` reads
//! `b W(t - a)` by linear interpolation). Time stepping is Heun's method.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{DerivedParams, LifespanModel};

/// `W` and `W'` sampled on the uniform grid `k h`, `k = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleGrid {
    step: f64,
    birth_rate: f64,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

/// Default solver step `1e-3 * min(1, 1/eta)`.
pub fn default_step(params: &DerivedParams) -> f64 {
    1e-3 * (1.0f64).min(1.0 / params.eta)
}

/// Solves for `W` on `[0, horizon]` with step `h`.
pub fn solve_scale(model: &LifespanModel, horizon: f64, h: f64) -> Result<ScaleGrid> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid("scale step must be positive"));
    }
    if !(horizon >= h && horizon.is_finite()) {
        return Err(Error::invalid("scale horizon must be at least one step"));
    }
    let n = libm::round(horizon / h) as usize;
    let b = model.birth_rate();

    // Cell j = (jh, (j+1)h]; with u = r/h - j the convolution weight of
    // W(t - jh) is int (1-u) Lambda(dr) and of W(t - (j+1)h) is int u Lambda(dr).
    let mut near = Vec::with_capacity(n);
    let mut far = Vec::with_capacity(n);
    for j in 0..n {
        let lo = j as f64 * h;
        let (mass, moment) = model.interval_moments(lo, (j + 1) as f64 * h)?;
        let u_mass = ((moment - lo * mass) / h).clamp(0.0, mass);
        near.push(mass - u_mass);
        far.push(u_mass);
    }

    // W' jumps by -b at a grid-aligned atom; the step ending there uses the left limit.
    let atom_index = model.lifespan().atom().and_then(|a| {
        let x = a / h;
        let j = libm::round(x);
        ((x - j).abs() <= 1e-9 * j.max(1.0)).then_some(j as usize)
    });

    let mut values = Vec::with_capacity(n + 1);
    let mut derivs = Vec::with_capacity(n + 1);
    values.push(1.0);
    derivs.push(b);
    for k in 0..n {
        // History part of (W * Lambda)((k+1)h): everything except the W_{k+1} term.
        let mut history = far[0] * values[k];
        for j in 1..=k {
            history += near[j] * values[k + 1 - j] + far[j] * values[k - j];
        }
        let slope = |w: f64| b * w - (near[0] * w + history);
        let jump = if atom_index == Some(k + 1) {
            b * values[0]
        } else {
            0.0
        };
        let wk = values[k];
        let predictor = wk + h * derivs[k];
        let next = wk + 0.5 * h * (derivs[k] + slope(predictor) + jump);
        if !(next > wk) || !next.is_finite() {
            return Err(Error::SolverInstability {
                t: (k + 1) as f64 * h,
                h,
            });
        }
        values.push(next);
        derivs.push(slope(next));
    }
    Ok(ScaleGrid {
        step: h,
        birth_rate: b,
        values,
        derivs,
    })
}

impl ScaleGrid {
    #[inline]
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn horizon(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivs(&self) -> &[f64] {
        &self.derivs
    }

    pub fn birth_rate(&self) -> f64 {
        self.birth_rate
    }

    /// Linearly interpolated `(W(t), W'(t))`.
    pub fn w_at(&self, t: f64) -> Result<(f64, f64)> {
        let horizon = self.horizon();
        // Allow a rounding-level overshoot of the last grid point.
        if !(t >= 0.0) || t > horizon * (1.0 + 1e-12) {
            return Err(Error::OutOfRange { t, horizon });
        }
        let x = t / self.step;
        let last = self.values.len() - 1;
        let k = (libm::floor(x) as usize).min(last);
        if k == last {
            return Ok((self.values[last], self.derivs[last]));
        }
        let frac = x - k as f64;
        let lerp = |v: &[f64]| v[k] + frac * (v[k + 1] - v[k]);
        Ok((lerp(&self.values), lerp(&self.derivs)))
    }

    /// `W(u)` with the convention `W(u) = 0` for `u < 0`.
    pub fn w(&self, u: f64) -> Result<f64> {
        if u < 0.0 {
            Ok(0.0)
        } else {
            self.w_at(u).map(|(w, _)| w)
        }
    }

    /// `P(X(t) = n)` for a tree started from one ancestor with random lifespan.
    pub fn x_t_pmf(&self, t: f64, n: u64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::invalid("x_t_pmf requires t > 0"));
        }
        let (w, wp) = self.w_at(t)?;
        let alive = wp / (self.birth_rate * w);
        Ok(if n == 0 {
            1.0 - alive
        } else {
            libm::pow(1.0 - 1.0 / w, (n - 1) as f64) * alive / w
        })
    }

    /// `P(X(t) = n)` given that the ancestor lives exactly `x`.
    pub fn x_t_pmf_given_ancestor(&self, x: f64, t: f64, n: u64) -> Result<f64> {
        if !(t > 0.0) || !(x > 0.0) {
            return Err(Error::invalid(
                "x_t_pmf_given_ancestor requires t > 0 and x > 0",
            ));
        }
        let w = self.w_at(t)?.0;
        let extinct = self.w(t - x)? / w;
        Ok(if n == 0 {
            extinct
        } else {
            (1.0 - extinct) * libm::pow(1.0 - 1.0 / w, (n - 1) as f64) / w
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Lifespan;
    use crate::quad;
    use core::f64::consts::LN_2;

    fn exp21() -> LifespanModel {
        LifespanModel::exponential(2.0, 1.0).unwrap()
    }

    fn max_rel_err(grid: &ScaleGrid, upto: f64, exact: impl Fn(f64) -> f64) -> f64 {
        grid.values()
            .iter()
            .enumerate()
            .map(|(k, w)| (k as f64 * grid.step(), w))
            .filter(|(t, _)| *t <= upto)
            .map(|(t, w)| ((w - exact(t)) / exact(t)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn closed_forms() {
        let g = solve_scale(&exp21(), 10.0, 1e-3).unwrap();
        assert!(max_rel_err(&g, 10.0, |t| 2.0 * t.exp() - 1.0) <= 1e-4);
        let (w, wp) = g.w_at(LN_2).unwrap();
        assert!((w - 3.0).abs() < 1e-4 && (wp - 4.0).abs() < 1e-3);

        let m = LifespanModel::new(1.0, Lifespan::DiracInfinite).unwrap();
        let g = solve_scale(&m, 10.0, 1e-3).unwrap();
        assert!(max_rel_err(&g, 10.0, |t| t.exp()) <= 1e-4);

        let m = LifespanModel::new(2.0, Lifespan::DiracFinite { at: 1.0 }).unwrap();
        let g = solve_scale(&m, 10.0, 1e-3).unwrap();
        assert!(max_rel_err(&g, 1.0 - 1e-9, |t| (2.0 * t).exp()) <= 1e-4);
        assert!((g.w_at(1.0).unwrap().0 / 2f64.exp() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn w_at_edges() {
        let g = solve_scale(&exp21(), 1.0, 1e-2).unwrap();
        assert_eq!(g.w_at(0.0).unwrap(), (1.0, 2.0));
        assert_eq!(g.w_at(0.5).unwrap(), (g.values()[50], g.derivs()[50]));
        assert!(matches!(g.w_at(1.5), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn pmf_examples() {
        let g = solve_scale(&exp21(), 1.0, 1e-4).unwrap();
        assert!((g.x_t_pmf(LN_2, 0).unwrap() - 1.0 / 3.0).abs() < 1e-6);
        for n in 1..6u64 {
            let exact = (2.0f64 / 3.0).powi(n as i32 - 1) * 2.0 / 9.0;
            assert!((g.x_t_pmf(LN_2, n).unwrap() - exact).abs() < 1e-6);
        }
        let total: f64 = (0..2000).map(|n| g.x_t_pmf(0.8, n).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-9);
        // n = 0 term against the algebraic closed form of the n >= 1 sum.
        let (w, wp) = g.w_at(0.8).unwrap();
        assert_eq!(g.x_t_pmf(0.8, 0).unwrap(), 1.0 - wp / (2.0 * w));

        let m = LifespanModel::new(1.0, Lifespan::DiracInfinite).unwrap();
        let g = solve_scale(&m, 3.0, 1e-3).unwrap();
        assert!(g.x_t_pmf(2.0, 0).unwrap().abs() < 1e-12);
        let succ = (-2.0f64).exp();
        for n in 1..5u64 {
            let geo = (1.0 - succ).powi(n as i32 - 1) * succ;
            assert!((g.x_t_pmf(2.0, n).unwrap() - geo).abs() < 1e-6);
        }
    }

    #[test]
    fn given_ancestor() {
        let g = solve_scale(&exp21(), 1.0, 1e-4).unwrap();
        let p0 = g.x_t_pmf_given_ancestor(LN_2, LN_2, 0).unwrap();
        assert!((p0 - 1.0 / 3.0).abs() < 1e-6);
        assert_eq!(g.x_t_pmf_given_ancestor(5.0, 0.5, 0).unwrap(), 0.0);
        let total: f64 = (0..3000)
            .map(|n| g.x_t_pmf_given_ancestor(0.3, 0.9, n).unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mixing_over_ancestor_lifespan_reproduces_marginal() {
        let model = exp21();
        let h = 1e-3;
        let g = solve_scale(&model, 1.0, h).unwrap();
        let k = 700;
        let t = k as f64 * h;
        let density = |x: f64| (-x).exp();
        for n in 0..4u64 {
            // Piecewise-linear W is smooth inside each cell, so integrate cell by cell.
            let mut mixed = 0.0;
            for j in 0..k {
                let (lo, hi) = (j as f64 * h, (j + 1) as f64 * h);
                mixed += quad::integrate(
                    |x| density(x) * g.x_t_pmf_given_ancestor(x, t, n).unwrap(),
                    lo,
                    hi,
                )
                .unwrap();
            }
            mixed += quad::integrate(
                |x| density(x) * g.x_t_pmf_given_ancestor(x, t, n).unwrap(),
                t,
                f64::INFINITY,
            )
            .unwrap();
            let direct = g.x_t_pmf(t, n).unwrap();
            assert!((mixed - direct).abs() < 1e-8, "n={n}: {mixed} vs {direct}");
        }
    }

    #[test]
    fn laplace_transform_and_limit() {
        for model in [
            exp21(),
            LifespanModel::new(2.0, Lifespan::DiracFinite { at: 1.0 }).unwrap(),
            LifespanModel::new(1.0, Lifespan::DiracInfinite).unwrap(),
            LifespanModel::new(
                2.0,
                Lifespan::Gamma {
                    shape: 2.0,
                    rate: 1.5,
                },
            )
            .unwrap(),
            LifespanModel::new(1.5, Lifespan::Uniform { lo: 0.5, hi: 2.5 }).unwrap(),
        ] {
            let p = model.malthusian().unwrap();
            let horizon = 12.0 / p.eta;
            let h = default_step(&p);
            let g = solve_scale(&model, horizon, h).unwrap();
            let w_end = g.values().last().unwrap();
            let limit = p.c * (-p.eta * g.horizon()).exp() * w_end;
            assert!(
                (limit - 1.0).abs() <= 1e-3,
                "{:?}: {limit}",
                model.lifespan()
            );

            let lam = 2.0 * p.eta;
            // Trapezoid rule on the grid plus the analytic e^{eta t}/c tail.
            let vals = g.values();
            let mut lt = 0.0;
            for k in 0..vals.len() - 1 {
                let (t0, t1) = (k as f64 * h, (k + 1) as f64 * h);
                lt += 0.5 * h * ((-lam * t0).exp() * vals[k] + (-lam * t1).exp() * vals[k + 1]);
            }
            let hz = g.horizon();
            lt += (-(lam - p.eta) * hz).exp() / (p.c * (lam - p.eta));
            let target = 1.0 / model.psi(lam).unwrap();
            assert!(
                ((lt - target) / target).abs() <= 2e-3,
                "{:?}: {lt} vs {target}",
                model.lifespan()
            );
        }
    }

    #[test]
    fn grid_invariants() {
        let g = solve_scale(&exp21(), 5.0, 1e-3).unwrap();
        assert_eq!(g.values()[0], 1.0);
        assert!(g.values().windows(2).all(|w| w[1] > w[0]));
        assert!(g.derivs().iter().all(|d| *d >= 0.0));
    }
}
