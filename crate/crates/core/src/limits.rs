//! Limiting laws of the scaled population and its partition into families:
//! the Gamma limit of `e^{-eta t} I(t)`, GEM and Beta stick-breaking, the
//! Poisson point processes of scaled family sizes, and the law of their sum.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Beta, Distribution, Exp1, Gamma};

use crate::error::{Error, Result};
use crate::immigration::{AbundanceDensity, TypeWeights};
use crate::model::DerivedParams;
use crate::quad::{self, Quadrature};
use crate::special::{gamma_p, gamma_q};

/// Atoms of a limiting partition together with the total mass they split.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitSample {
    /// GEM sticks in age order; PPP atoms in decreasing order.
    pub points: Vec<f64>,
    /// 1 for GEM; for a PPP the sum of all atoms, including those below the cutoff.
    pub total: f64,
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(alloc::format!(
            "{name} must be positive and finite, got {x}"
        )))
    }
}

/// One draw of `Gamma(shape, rate)`, the limit of `e^{-eta t} I(t)` for
/// `shape = theta / b`, `rate = c`.
pub fn gamma_limit_sample<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    positive("shape", shape)?;
    positive("rate", rate)?;
    let g = Gamma::new(shape, 1.0 / rate).map_err(|_| Error::invalid("bad gamma parameters"))?;
    Ok(g.sample(rng))
}

pub fn gamma_limit_cdf(shape: f64, rate: f64, x: f64) -> f64 {
    gamma_p(shape, rate * x)
}

/// First `k` sticks of GEM(`alpha`): `P_i = B_i prod_{j<i} (1 - B_j)`, `B_i ~ Beta(1, alpha)`.
pub fn gem_sample<R: Rng + ?Sized>(alpha: f64, k: usize, rng: &mut R) -> Result<LimitSample> {
    positive("alpha", alpha)?;
    if k == 0 {
        return Err(Error::invalid("need at least one stick"));
    }
    let mut rest = 1.0;
    let mut points = Vec::with_capacity(k);
    for _ in 0..k {
        // Beta(1, alpha) by inversion: 1 - U^{1/alpha}; U in (0, 1].
        let u: f64 = 1.0 - rng.random::<f64>();
        let b = -libm::expm1(libm::log(u) / alpha);
        points.push(rest * b);
        rest *= 1.0 - b;
    }
    Ok(LimitSample { points, total: 1.0 })
}

/// First `k` limiting type fractions of Model II: stick-breaking with
/// independent `B'_i ~ Beta(alpha p_i, alpha sum_{j>i} p_j)`, `alpha = theta / b`.
pub fn model2_limit_sample<R: Rng + ?Sized>(
    alpha: f64,
    weights: &TypeWeights,
    k: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    positive("theta / b", alpha)?;
    if let Some(n) = weights.type_count() {
        if k > n {
            return Err(Error::invalid(alloc::format!(
                "asked for {k} fractions of {n} types"
            )));
        }
    }
    let mut rest = 1.0;
    let mut out = Vec::with_capacity(k);
    for i in 1..=k {
        let tail = weights.remaining_after(i);
        let b = if tail <= 0.0 {
            1.0
        } else {
            Beta::new(alpha * weights.p(i), alpha * tail)
                .map_err(|_| Error::invalid("bad beta parameters"))?
                .sample(rng)
        };
        out.push(rest * b);
        rest *= 1.0 - b;
    }
    Ok(out)
}

/// Intensity `(rho / r) F(v) / v` of the scaled image of a Poisson process
/// of rate `rho` under `t -> e^{-r t} zeta`, with `P(zeta >= v) = F(v)`.
#[derive(Debug, Clone, Copy)]
pub struct ScaledIntensity<F> {
    rho: f64,
    r: f64,
    tail: F,
}

pub fn ppp_scaled_intensity<F: Fn(f64) -> f64>(
    rho: f64,
    r: f64,
    tail: F,
) -> Result<ScaledIntensity<F>> {
    positive("rho", rho)?;
    positive("r", r)?;
    Ok(ScaledIntensity { rho, r, tail })
}

impl<F: Fn(f64) -> f64> ScaledIntensity<F> {
    pub fn eval(&self, v: f64) -> f64 {
        if v <= 0.0 {
            return f64::INFINITY;
        }
        let f = (self.tail)(v);
        if f <= 0.0 {
            0.0
        } else {
            self.rho / self.r * f / v
        }
    }

    pub fn tail(&self, v: f64) -> f64 {
        (self.tail)(v)
    }

    /// Expected number of atoms in `[u, inf)`.
    pub fn expected_count(&self, u: f64) -> Result<f64> {
        positive("u", u)?;
        tail_quad().integrate(|v| self.eval(v), u, f64::INFINITY)
    }

    /// Expected total size of the atoms below `eps`: `(rho / r) int_0^eps F`.
    pub fn mass_below(&self, eps: f64) -> Result<f64> {
        positive("eps", eps)?;
        Ok(self.rho / self.r * tail_quad().integrate(|v| (self.tail)(v), 0.0, eps)?)
    }
}

fn tail_quad() -> Quadrature {
    Quadrature::with_tolerance(1e-13, 1e-9)
}

const STEPS_PER_E: f64 = 64.0;
const TOP_MASS: f64 = 1e-12;

/// Sampler of the atoms above `eps` of a Poisson process with a
/// [`ScaledIntensity`], inverting its tail mass at the arrival times of a
/// unit-rate process. In `x = ln v` the tail mass has derivative
/// `-(rho / r) F(e^x)`, which is tabulated at half steps of `1/64` and
/// integrated piecewise quadratically.
#[derive(Debug, Clone)]
pub struct PppSampler {
    eps: f64,
    below: f64,
    x0: f64,
    h: f64,
    // g at the left end, midpoint and right end of each step.
    g: Vec<[f64; 3]>,
    // Tail mass above the left end of each step, plus one entry for the top.
    mass: Vec<f64>,
}

impl PppSampler {
    /// `scale` sets where the search for the top of the support starts.
    pub fn new<F: Fn(f64) -> f64>(
        intensity: &ScaledIntensity<F>,
        eps: f64,
        scale: f64,
    ) -> Result<Self> {
        positive("eps", eps)?;
        positive("scale", scale)?;
        let q = tail_quad();
        let mut top = scale.max(eps);
        let top_mass = loop {
            let m = q.integrate(|v| intensity.eval(v), top, f64::INFINITY)?;
            if m < TOP_MASS {
                break m;
            }
            top *= 2.0;
            if top > 1e300 {
                return Err(Error::invalid("intensity tail does not decay"));
            }
        };
        let (x0, x_top) = (libm::log(eps), libm::log(top));
        let n = libm::ceil((x_top - x0) * STEPS_PER_E).max(1.0) as usize;
        let h = (x_top - x0) / n as f64;
        let k = intensity.rho / intensity.r;
        let gx = |x: f64| k * intensity.tail(libm::exp(x)).max(0.0);
        let mut left = gx(x0);
        let mut g = Vec::with_capacity(n);
        for i in 0..n {
            let xi = x0 + i as f64 * h;
            let right = gx(xi + h);
            g.push([left, gx(xi + 0.5 * h), right]);
            left = right;
        }
        if g.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("tail function returned a non-finite value"));
        }
        let mut mass = vec![0.0; n + 1];
        mass[n] = top_mass;
        for i in (0..n).rev() {
            let [a, m, b] = g[i];
            mass[i] = mass[i + 1] + h * (a + 4.0 * m + b) / 6.0;
        }
        Ok(PppSampler {
            eps,
            below: intensity.mass_below(eps)?,
            x0,
            h,
            g,
            mass,
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Expected number of atoms above `eps`.
    pub fn mass_above_eps(&self) -> f64 {
        self.mass[0]
    }

    /// Expected total size of the atoms below `eps`.
    pub fn mass_below_eps(&self) -> f64 {
        self.below
    }

    /// Solves `M(u) = target` for `u`.
    fn invert(&self, target: f64) -> f64 {
        let n = self.g.len();
        if target <= self.mass[n] {
            // Probability below TOP_MASS: clamp to the top of the grid.
            return libm::exp(self.x0 + n as f64 * self.h);
        }
        let j = self.mass.partition_point(|m| *m >= target) - 1;
        let [g0, gm, g1] = self.g[j];
        let a = -3.0 * g0 + 4.0 * gm - g1;
        let b = 2.0 * g0 - 4.0 * gm + 2.0 * g1;
        let prim = |t: f64| t * (g0 + t * (a / 2.0 + t * b / 3.0));
        let total = prim(1.0);
        // Mass between tau and 1 equals (target - mass[j+1]) / h.
        let want = total - (target - self.mass[j + 1]) / self.h;
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut t = if total > 0.0 {
            (want / total).clamp(0.0, 1.0)
        } else {
            0.5
        };
        for _ in 0..100 {
            let f = prim(t) - want;
            if f < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let d = g0 + t * (a + t * b);
            let mut next = if d > 0.0 { t - f / d } else { 0.5 * (lo + hi) };
            if !(next >= lo && next <= hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() < 1e-15 || hi - lo < 1e-15 {
                t = next;
                break;
            }
            t = next;
        }
        libm::exp(self.x0 + (j as f64 + t) * self.h)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> LimitSample {
        let mut points = Vec::new();
        let mut gamma = 0.0;
        loop {
            let e: f64 = Exp1.sample(rng);
            gamma += e;
            if gamma > self.mass[0] {
                break;
            }
            points.push(self.invert(gamma).max(self.eps));
        }
        let total = points.iter().sum::<f64>() + self.below;
        LimitSample { points, total }
    }
}

/// Tail `F(v) = P(G >= v)` of the limiting scaled size of a Model III
/// species, where `G | Delta ~ Gamma(Delta / b, c)` and `Delta` has density
/// `x f(x) / theta`.
pub fn model3_tail_f(density: &AbundanceDensity, params: &DerivedParams, v: f64) -> Result<f64> {
    if !(v >= 0.0) {
        return Err(Error::invalid("v must be non-negative"));
    }
    if v == 0.0 {
        return Ok(1.0);
    }
    let (b, cv) = (params.birth_rate, params.c * v);
    let q = Quadrature::with_tolerance(1e-14, 1e-11);
    let f = q.integrate(
        |x| density.rate_pdf(x) * gamma_q(x / b, cv),
        0.0,
        density.rate_upper(),
    )?;
    Ok(f.clamp(0.0, 1.0))
}

/// Scaled intensity of the Model III species limits: `rho = theta`, `r = eta`.
pub fn model3_intensity<'a>(
    density: &'a AbundanceDensity,
    params: &'a DerivedParams,
) -> Result<ScaledIntensity<impl Fn(f64) -> f64 + 'a>> {
    ppp_scaled_intensity(density.theta(), params.eta, move |v| {
        model3_tail_f(density, params, v).unwrap_or(f64::NAN)
    })
}

/// `E[exp(-s sigma)] = exp(-(theta / eta) int_0^inf F(v) (1 - e^{-s v}) / v dv)`.
pub fn sigma_laplace(density: &AbundanceDensity, params: &DerivedParams, s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::invalid("s must be non-negative"));
    }
    if s == 0.0 {
        return Ok(1.0);
    }
    let outer = Quadrature::with_tolerance(1e-12, 1e-8);
    let mut failed = None;
    let integral = outer.integrate(
        |v| {
            if v <= 0.0 {
                return 0.0;
            }
            match model3_tail_f(density, params, v) {
                Ok(f) => f * -libm::expm1(-s * v) / v,
                Err(e) => {
                    failed.get_or_insert(e);
                    0.0
                }
            }
        },
        0.0,
        f64::INFINITY,
    )?;
    if let Some(e) = failed {
        return Err(e);
    }
    Ok(libm::exp(-density.theta() / params.eta * integral))
}

/// `E[sigma] = int x^2 f(x) dx / (eta b c)`.
pub fn sigma_mean(density: &AbundanceDensity, params: &DerivedParams) -> f64 {
    density.second_moment() / (params.eta * params.birth_rate * params.c)
}

/// `P(S > a) = min(rho / a, 1)` for `S = sup_t A_t / t`, `A` a Poisson process of rate `rho`.
pub fn sup_poisson_tail(rho: f64, a: f64) -> Result<f64> {
    positive("rho", rho)?;
    positive("a", a)?;
    Ok((rho / a).min(1.0))
}

/// `max_k k / t_k` over the jump times `t_k <= horizon` of a rate-`rho`
/// Poisson process (0 if there are none).
pub fn sample_poisson_sup<R: Rng + ?Sized>(rho: f64, horizon: f64, rng: &mut R) -> Result<f64> {
    positive("rho", rho)?;
    let mut t = 0.0;
    let mut best: f64 = 0.0;
    let mut k = 0u64;
    loop {
        let e: f64 = Exp1.sample(rng);
        t += e / rho;
        if t > horizon {
            return Ok(best);
        }
        k += 1;
        best = best.max(k as f64 / t);
    }
}

/// Counts the points `e^{-r T_i} zeta_i >= u` for `T_i` the jumps of a
/// rate-`rho` Poisson process up to `horizon`.
pub fn image_points_above<R, Z>(
    rho: f64,
    r: f64,
    u: f64,
    horizon: f64,
    rng: &mut R,
    mut zeta: Z,
) -> Result<u64>
where
    R: Rng + ?Sized,
    Z: FnMut(&mut R) -> f64,
{
    positive("rho", rho)?;
    positive("r", r)?;
    let mut t = 0.0;
    let mut count = 0;
    loop {
        let e: f64 = Exp1.sample(rng);
        t += e / rho;
        if t > horizon {
            return Ok(count);
        }
        if libm::exp(-r * t) * zeta(rng) >= u {
            count += 1;
        }
    }
}

/// `E_1(x) = int_x^inf e^{-t} / t dt`.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    positive("x", x)?;
    quad::integrate(|t| libm::exp(-t) / t, x, f64::INFINITY)
}
