//! Lifespan measures, the Laplace exponent `psi` and the Malthusian parameter.
//!
//! A splitting tree is described by its birth rate `b` and a lifespan law; the
//! lifespan measure is `Lambda = b * (lifespan law)`. Every analytic functional
//! below dispatches on the lifespan family: closed forms for the built-in
//! families, adaptive quadrature for tabulated or user-supplied densities.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};

use crate::error::{Error, Result};
use crate::quad::{self, Quadrature};
use crate::special::{gamma_p, gamma_q};

/// Number of cells in the inverse-CDF table of a [`GenericDensity`].
const DENSITY_TABLE_CELLS: usize = 4096;

/// A probability density on `(0, upper)` given by an arbitrary function.
///
/// The function is normalized on construction. Sampling inverts a tabulated
/// CDF (linear interpolation inside each of 4096 cells).
#[derive(Clone)]
pub struct GenericDensity {
    density: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    upper: f64,
    norm: f64,
    // CDF at the cell boundaries of the (possibly compactified) support.
    cdf: Vec<f64>,
}

impl fmt::Debug for GenericDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GenericDensity")
            .field("upper", &self.upper)
            .field("norm", &self.norm)
            .finish_non_exhaustive()
    }
}

impl GenericDensity {
    pub fn new<F>(density: F, upper: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(upper > 0.0) {
            return Err(Error::invalid(
                "density upper support bound must be positive",
            ));
        }
        let quad = Quadrature::default();
        let norm = quad.integrate(&density, 0.0, upper)?;
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::invalid("density must have finite positive mass"));
        }
        let mut out = GenericDensity {
            density: Arc::new(density),
            upper,
            norm,
            cdf: Vec::new(),
        };
        let mut cdf = Vec::with_capacity(DENSITY_TABLE_CELLS + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for i in 0..DENSITY_TABLE_CELLS {
            let lo = out.unit_to_support(i as f64 / DENSITY_TABLE_CELLS as f64);
            let hi = out.unit_to_support((i + 1) as f64 / DENSITY_TABLE_CELLS as f64);
            acc += quad.integrate(|x| out.pdf(x), lo, hi)?;
            cdf.push(acc);
        }
        let last = *cdf.last().unwrap_or(&1.0);
        for v in &mut cdf {
            *v /= last;
        }
        out.cdf = cdf;
        Ok(out)
    }

    /// Normalized density.
    #[inline]
    pub fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= self.upper {
            0.0
        } else {
            (self.density)(x) / self.norm
        }
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// Mass of the unnormalized function supplied on construction.
    pub fn raw_mass(&self) -> f64 {
        self.norm
    }

    fn unit_to_support(&self, u: f64) -> f64 {
        if self.upper.is_infinite() {
            if u >= 1.0 {
                f64::INFINITY
            } else {
                u / (1.0 - u)
            }
        } else {
            u * self.upper
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let i = match self.cdf.binary_search_by(|c| c.total_cmp(&u)) {
            Ok(i) => i.min(DENSITY_TABLE_CELLS - 1),
            Err(i) => i.saturating_sub(1).min(DENSITY_TABLE_CELLS - 1),
        };
        let (c0, c1) = (self.cdf[i], self.cdf[i + 1]);
        let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        let n = DENSITY_TABLE_CELLS as f64;
        self.unit_to_support((i as f64 + frac) / n)
    }

    /// `E[g(X)]` by adaptive quadrature.
    pub fn expect<G: Fn(f64) -> f64>(&self, g: G) -> Result<f64> {
        quad::integrate(|x| self.pdf(x) * g(x), 0.0, self.upper)
    }

    fn expect_on<G: Fn(f64) -> f64>(&self, g: G, lo: f64, hi: f64) -> Result<f64> {
        let hi = hi.min(self.upper);
        if hi <= lo {
            return Ok(0.0);
        }
        quad::integrate(|x| self.pdf(x) * g(x), lo, hi)
    }
}

/// Lifespan distribution `Lambda / b`.
#[derive(Debug, Clone)]
pub enum Lifespan {
    Exponential {
        rate: f64,
    },
    /// Deterministic finite lifespan.
    DiracFinite {
        at: f64,
    },
    /// Individuals never die: `Lambda = b * delta_inf`.
    DiracInfinite,
    Uniform {
        lo: f64,
        hi: f64,
    },
    Gamma {
        shape: f64,
        rate: f64,
    },
    Density(GenericDensity),
}

impl Lifespan {
    fn validate(&self) -> Result<()> {
        let ok = match self {
            Lifespan::Exponential { rate } => *rate > 0.0 && rate.is_finite(),
            Lifespan::DiracFinite { at } => *at > 0.0 && at.is_finite(),
            Lifespan::DiracInfinite | Lifespan::Density(_) => true,
            Lifespan::Uniform { lo, hi } => *lo >= 0.0 && hi > lo && hi.is_finite(),
            Lifespan::Gamma { shape, rate } => {
                *shape > 0.0 && *rate > 0.0 && shape.is_finite() && rate.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("lifespan parameters out of range"))
        }
    }

    /// `E[exp(-lambda * zeta)]`, with `exp(-0 * inf) = 1`.
    pub fn laplace(&self, lambda: f64) -> Result<f64> {
        if lambda == 0.0 {
            return Ok(1.0);
        }
        Ok(match self {
            Lifespan::Exponential { rate } => rate / (rate + lambda),
            Lifespan::DiracFinite { at } => libm::exp(-lambda * at),
            Lifespan::DiracInfinite => 0.0,
            Lifespan::Uniform { lo, hi } => {
                let w = hi - lo;
                libm::exp(-lambda * lo) * (-libm::expm1(-lambda * w)) / (lambda * w)
            }
            Lifespan::Gamma { shape, rate } => libm::pow(rate / (rate + lambda), *shape),
            Lifespan::Density(d) => d.expect(|x| libm::exp(-lambda * x))?,
        })
    }

    /// `E[zeta * exp(-lambda * zeta)]` (infinite at `lambda = 0` for `DiracInfinite`).
    pub fn size_biased_laplace(&self, lambda: f64) -> Result<f64> {
        Ok(match self {
            Lifespan::Exponential { rate } => rate / ((rate + lambda) * (rate + lambda)),
            Lifespan::DiracFinite { at } => at * libm::exp(-lambda * at),
            Lifespan::DiracInfinite => {
                if lambda == 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            Lifespan::Uniform { lo, hi } => {
                let w = hi - lo;
                if lambda * w < 1.0 {
                    let mut g = |r: f64| r * libm::exp(-lambda * r);
                    quad::gk15(&mut g, *lo, *hi).0 / w
                } else {
                    let prim =
                        |r: f64| -libm::exp(-lambda * r) * (r / lambda + 1.0 / (lambda * lambda));
                    (prim(*hi) - prim(*lo)) / w
                }
            }
            Lifespan::Gamma { shape, rate } => {
                shape / rate * libm::pow(rate / (rate + lambda), shape + 1.0)
            }
            Lifespan::Density(d) => d.expect(|x| x * libm::exp(-lambda * x))?,
        })
    }

    pub fn mean(&self) -> Result<f64> {
        self.size_biased_laplace(0.0)
    }

    /// `P(zeta >= x)`.
    pub fn survival(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok(1.0);
        }
        Ok(match self {
            Lifespan::Exponential { rate } => libm::exp(-rate * x),
            Lifespan::DiracFinite { at } => {
                if x <= *at {
                    1.0
                } else {
                    0.0
                }
            }
            Lifespan::DiracInfinite => 1.0,
            Lifespan::Uniform { lo, hi } => {
                if x <= *lo {
                    1.0
                } else if x >= *hi {
                    0.0
                } else {
                    (hi - x) / (hi - lo)
                }
            }
            Lifespan::Gamma { shape, rate } => gamma_q(*shape, rate * x),
            Lifespan::Density(d) => {
                if x >= d.upper {
                    0.0
                } else {
                    d.expect_on(|_| 1.0, x, d.upper)?
                }
            }
        })
    }

    /// `(P(lo < zeta <= hi), E[zeta; lo < zeta <= hi])` for finite `0 <= lo < hi`.
    pub fn interval_moments(&self, lo: f64, hi: f64) -> Result<(f64, f64)> {
        Ok(match self {
            Lifespan::Exponential { rate } => {
                let (elo, ehi) = (libm::exp(-rate * lo), libm::exp(-rate * hi));
                let mass = elo * (-libm::expm1(-rate * (hi - lo)));
                let prim = |r: f64, e: f64| -e * (r + 1.0 / rate);
                (mass, prim(hi, ehi) - prim(lo, elo))
            }
            Lifespan::DiracFinite { at } => {
                if *at > lo && *at <= hi {
                    (1.0, *at)
                } else {
                    (0.0, 0.0)
                }
            }
            Lifespan::DiracInfinite => (0.0, 0.0),
            Lifespan::Uniform { lo: a, hi: b } => {
                let l = lo.max(*a);
                let h = hi.min(*b);
                if h <= l {
                    (0.0, 0.0)
                } else {
                    let w = b - a;
                    ((h - l) / w, 0.5 * (h * h - l * l) / w)
                }
            }
            Lifespan::Gamma { shape, rate } => {
                let diff = |k: f64| {
                    let (xl, xh) = (rate * lo, rate * hi);
                    // Use whichever tail keeps the difference well conditioned.
                    if xl > k {
                        gamma_q(k, xl) - gamma_q(k, xh)
                    } else {
                        gamma_p(k, xh) - gamma_p(k, xl)
                    }
                };
                (diff(*shape), shape / rate * diff(shape + 1.0))
            }
            Lifespan::Density(d) => (d.expect_on(|_| 1.0, lo, hi)?, d.expect_on(|x| x, lo, hi)?),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Lifespan::Exponential { rate } => Exp::new(*rate)
                .map(|d| d.sample(rng))
                .unwrap_or(f64::INFINITY),
            Lifespan::DiracFinite { at } => *at,
            Lifespan::DiracInfinite => f64::INFINITY,
            Lifespan::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Lifespan::Gamma { shape, rate } => Gamma::new(*shape, 1.0 / rate)
                .map(|d| d.sample(rng))
                .unwrap_or(f64::NAN),
            Lifespan::Density(d) => d.sample(rng),
        }
    }

    /// Location of the finite atom, if the law has one.
    pub fn atom(&self) -> Option<f64> {
        match self {
            Lifespan::DiracFinite { at } => Some(*at),
            _ => None,
        }
    }

    /// Largest value in the support (`+inf` when unbounded).
    pub fn support_upper(&self) -> f64 {
        match self {
            Lifespan::DiracFinite { at } => *at,
            Lifespan::Uniform { hi, .. } => *hi,
            Lifespan::Density(d) => d.upper,
            _ => f64::INFINITY,
        }
    }
}

/// Birth rate `b` together with the lifespan law; `Lambda = b * lifespan`.
#[derive(Debug, Clone)]
pub struct LifespanModel {
    birth_rate: f64,
    lifespan: Lifespan,
}

/// Quantities derived from a supercritical model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    /// Malthusian parameter: the positive root of `psi`.
    pub eta: f64,
    /// `psi'(eta)`.
    pub c: f64,
    /// Mean number of children per individual (may be `+inf`).
    pub m: f64,
    /// Extinction probability `1 - eta / b`.
    pub p_ext: f64,
    pub birth_rate: f64,
}

/// `|psi| <= ROOT_TOL` at the returned Malthusian parameter.
pub const ROOT_TOL: f64 = 1e-12;

impl LifespanModel {
    pub fn new(birth_rate: f64, lifespan: Lifespan) -> Result<Self> {
        if !(birth_rate > 0.0 && birth_rate.is_finite()) {
            return Err(Error::invalid("birth rate must be positive and finite"));
        }
        lifespan.validate()?;
        Ok(LifespanModel {
            birth_rate,
            lifespan,
        })
    }

    pub fn exponential(birth_rate: f64, death_rate: f64) -> Result<Self> {
        Self::new(birth_rate, Lifespan::Exponential { rate: death_rate })
    }

    #[inline]
    pub fn birth_rate(&self) -> f64 {
        self.birth_rate
    }

    #[inline]
    pub fn lifespan(&self) -> &Lifespan {
        &self.lifespan
    }

    /// `m = int r Lambda(dr)`.
    pub fn mean_offspring(&self) -> Result<f64> {
        Ok(self.birth_rate * self.lifespan.mean()?)
    }

    /// `psi(lambda) = lambda - int (1 - e^{-lambda r}) Lambda(dr)`.
    pub fn psi(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0) {
            return Err(Error::invalid("psi requires lambda >= 0"));
        }
        if lambda == 0.0 {
            return Ok(0.0);
        }
        let one_minus = match &self.lifespan {
            // 1 - laplace loses digits for small lambda; use expm1 forms instead.
            Lifespan::DiracFinite { at } => -libm::expm1(-lambda * at),
            Lifespan::Exponential { rate } => lambda / (rate + lambda),
            Lifespan::Gamma { shape, rate } => {
                -libm::expm1(shape * libm::log1p(-lambda / (rate + lambda)))
            }
            other => 1.0 - other.laplace(lambda)?,
        };
        Ok(lambda - self.birth_rate * one_minus)
    }

    /// `psi'(lambda) = 1 - int r e^{-lambda r} Lambda(dr)`.
    pub fn psi_prime(&self, lambda: f64) -> Result<f64> {
        Ok(1.0 - self.birth_rate * self.lifespan.size_biased_laplace(lambda)?)
    }

    /// Offspring generating function of the generation-counting Galton-Watson process.
    pub fn offspring_pgf(&self, s: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::invalid("pgf argument must lie in [0, 1]"));
        }
        self.lifespan.laplace(self.birth_rate * (1.0 - s))
    }

    /// Density `Lambda([x, inf))` of the reproduction intensity measure.
    pub fn birth_intensity_density(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::invalid("birth intensity requires x >= 0"));
        }
        Ok(self.birth_rate * self.lifespan.survival(x)?)
    }

    /// `(Lambda((lo, hi]), int_{(lo, hi]} r Lambda(dr))`.
    pub fn interval_moments(&self, lo: f64, hi: f64) -> Result<(f64, f64)> {
        let (p, m) = self.lifespan.interval_moments(lo, hi)?;
        Ok((self.birth_rate * p, self.birth_rate * m))
    }

    pub fn sample_lifespan<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.lifespan.sample(rng)
    }

    pub fn is_supercritical(&self) -> Result<bool> {
        Ok(self.mean_offspring()? > 1.0)
    }

    /// Malthusian parameter by doubling bracket and bisection on `psi`.
    pub fn malthusian(&self) -> Result<DerivedParams> {
        let m = self.mean_offspring()?;
        if !(m > 1.0) {
            return Err(Error::Subcritical { m });
        }
        let b = self.birth_rate;
        let eta = match self.lifespan {
            Lifespan::DiracInfinite => b,
            _ => self.bisect_root()?,
        };
        let c = self.psi_prime(eta)?;
        Ok(DerivedParams {
            eta,
            c,
            m,
            p_ext: 1.0 - eta / b,
            birth_rate: b,
        })
    }

    fn bisect_root(&self) -> Result<f64> {
        // psi < 0 on (0, eta), psi > 0 beyond; psi(lambda) > 0 once lambda > b.
        let mut hi = 1.0_f64.min(self.birth_rate);
        while self.psi(hi)? <= 0.0 {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::invalid("could not bracket the Malthusian parameter"));
            }
        }
        let mut lo = 0.0;
        let mut best = (hi, self.psi(hi)?.abs());
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            let v = self.psi(mid)?;
            if v.abs() < best.1 {
                best = (mid, v.abs());
            }
            if v.abs() <= ROOT_TOL {
                return Ok(mid);
            }
            if v > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                break;
            }
        }
        Ok(best.0)
    }
}
