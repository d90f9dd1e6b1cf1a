//! Adaptive Gauss-Kronrod (7/15) quadrature on finite and half-infinite intervals.

use alloc::vec::Vec;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances and subdivision cap for [`Quadrature::integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_subdivisions: 4000,
        }
    }
}

#[derive(Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

/// One 15-point Kronrod rule on `[lo, hi]`, returning (estimate, error estimate).
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> (f64, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = kronrod.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = kronrod * half;
    let abs_result = abs_sum * half.abs();
    let asc = asc * half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && err != 0.0 {
        err = asc * libm::pow(200.0 * err / asc, 1.5).min(1.0);
    }
    let round = 50.0 * f64::EPSILON * abs_result;
    if abs_result > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(round);
    }
    (result, err)
}

impl Quadrature {
    pub fn with_tolerance(abs_tol: f64, rel_tol: f64) -> Self {
        Quadrature {
            abs_tol,
            rel_tol,
            ..Default::default()
        }
    }

    /// Integrates `f` over `[lo, hi]`; `hi` may be `+inf`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, lo: f64, hi: f64) -> Result<f64> {
        if lo == hi {
            return Ok(0.0);
        }
        if hi.is_infinite() {
            // x = lo + u / (1 - u) maps [0, 1) onto [lo, inf).
            let mut g = |u: f64| {
                let v = 1.0 - u;
                let y = f(lo + u / v);
                if y == 0.0 {
                    0.0
                } else {
                    y / (v * v)
                }
            };
            return self.adaptive(&mut g, 0.0, 1.0).map_err(|e| match e {
                Error::Quadrature {
                    estimate,
                    error,
                    subdivisions,
                    ..
                } => Error::Quadrature {
                    lo,
                    hi,
                    estimate,
                    error,
                    subdivisions,
                },
                other => other,
            });
        }
        self.adaptive(&mut f, lo, hi)
    }

    fn adaptive<F: FnMut(f64) -> f64>(&self, f: &mut F, lo: f64, hi: f64) -> Result<f64> {
        let (value, error) = gk15(f, lo, hi);
        let mut segments: Vec<Segment> = Vec::with_capacity(64);
        segments.push(Segment {
            lo,
            hi,
            value,
            error,
        });
        let mut total = value;
        let mut total_err = error;
        loop {
            if !total.is_finite() || !total_err.is_finite() {
                return Err(Error::Quadrature {
                    lo,
                    hi,
                    estimate: total,
                    error: total_err,
                    subdivisions: segments.len(),
                });
            }
            if total_err <= self.abs_tol.max(self.rel_tol * total.abs()) {
                return Ok(total);
            }
            if segments.len() >= self.max_subdivisions {
                return Err(Error::Quadrature {
                    lo,
                    hi,
                    estimate: total,
                    error: total_err,
                    subdivisions: segments.len(),
                });
            }
            let (idx, _) =
                segments
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |acc, (i, s)| {
                        if s.error > acc.1 {
                            (i, s.error)
                        } else {
                            acc
                        }
                    });
            let worst = segments.swap_remove(idx);
            let mid = 0.5 * (worst.lo + worst.hi);
            if mid <= worst.lo || mid >= worst.hi {
                // Interval can no longer be split in floating point.
                return Err(Error::Quadrature {
                    lo,
                    hi,
                    estimate: total,
                    error: total_err,
                    subdivisions: segments.len() + 1,
                });
            }
            let (v1, e1) = gk15(f, worst.lo, mid);
            let (v2, e2) = gk15(f, mid, worst.hi);
            total += v1 + v2 - worst.value;
            total_err += e1 + e2 - worst.error;
            segments.push(Segment {
                lo: worst.lo,
                hi: mid,
                value: v1,
                error: e1,
            });
            segments.push(Segment {
                lo: mid,
                hi: worst.hi,
                value: v2,
                error: e2,
            });
            // Refresh sums periodically to avoid drift from incremental updates.
            if segments.len().is_multiple_of(64) {
                total = segments.iter().map(|s| s.value).sum();
                total_err = segments.iter().map(|s| s.error).sum();
            }
        }
    }
}

/// Integrates with default tolerances.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, lo: f64, hi: f64) -> Result<f64> {
    Quadrature::default().integrate(f, lo, hi)
}
