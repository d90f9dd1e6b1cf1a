//! Goodness-of-fit and moment tests that turn Monte Carlo output into
//! pass/fail evidence.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::special::{chi_square_cdf, chi_square_sf, kolmogorov_q, normal_cdf};

/// Default significance level of distributional tests.
pub const DEFAULT_LEVEL: f64 = 1e-3;
/// Default bound on `|z|` for moment tests.
pub const DEFAULT_Z_MAX: f64 = 4.0;

/// Outcome of one validation check.
///
/// For p-value tests `passed` is `p_value >= level`. For z tests `statistic`
/// is `z`, `level` is the bound on `|z|` and `p_value` the two-sided normal
/// p-value. For deterministic tolerance checks `statistic` is the observed
/// error, `level` the tolerance and `p_value` is 1 on pass, 0 on failure.
#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub p_value: f64,
    pub n: u64,
    pub passed: bool,
    pub level: f64,
}

impl TestReport {
    pub fn from_p_value(
        name: impl Into<String>,
        statistic: f64,
        p_value: f64,
        n: u64,
        level: f64,
    ) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        TestReport {
            name: name.into(),
            statistic,
            p_value,
            n,
            passed: p_value >= level,
            level,
        }
    }

    pub fn from_z(name: impl Into<String>, z: f64, n: u64, z_max: f64) -> Self {
        let p_value = if z.is_nan() {
            0.0
        } else {
            2.0 * normal_cdf(-z.abs())
        };
        TestReport {
            name: name.into(),
            statistic: z,
            p_value,
            n,
            passed: z.abs() <= z_max,
            level: z_max,
        }
    }

    /// Deterministic check `error <= tolerance`.
    pub fn tolerance(name: impl Into<String>, error: f64, tolerance: f64, n: u64) -> Self {
        let passed = error.abs() <= tolerance;
        TestReport {
            name: name.into(),
            statistic: error,
            p_value: if passed { 1.0 } else { 0.0 },
            n,
            passed,
            level: tolerance,
        }
    }
}

/// One-sample two-sided Kolmogorov-Smirnov test with the asymptotic p-value
/// `Q(sqrt(n) D_n)`.
pub fn ks_test<F: Fn(f64) -> f64>(
    name: &str,
    samples: &[f64],
    cdf: F,
    level: f64,
) -> Result<TestReport> {
    let n = samples.len();
    if n < 20 {
        return Err(Error::InvalidInput(alloc::format!(
            "KS test needs n >= 20, got {n}"
        )));
    }
    let mut xs: Vec<f64> = samples.to_vec();
    if xs.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidInput("NaN sample".into()));
    }
    xs.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mut d: f64 = 0.0;
    let mut prev = f64::NEG_INFINITY;
    for (i, x) in xs.iter().enumerate() {
        let f = cdf(*x);
        if !(-1e-12..=1.0 + 1e-12).contains(&f) || f < prev - 1e-12 {
            return Err(Error::InvalidInput(alloc::format!(
                "cdf not monotone in [0,1] at x = {x}"
            )));
        }
        prev = f;
        d = d.max(f - i as f64 / nf).max((i + 1) as f64 / nf - f);
    }
    let p = kolmogorov_q(libm::sqrt(nf) * d);
    Ok(TestReport::from_p_value(name, d, p, n as u64, level))
}

/// Two-sample Kolmogorov-Smirnov test (asymptotic p-value with effective size
/// `n m / (n + m)`). Ties are handled by stepping both empirical CDFs past
/// equal values, which makes the test conservative for discrete data.
pub fn ks_two_sample(name: &str, a: &[f64], b: &[f64], level: f64) -> Result<TestReport> {
    if a.len() < 20 || b.len() < 20 {
        return Err(Error::InvalidInput(
            "two-sample KS needs 20 samples per side".into(),
        ));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = na * nb / (na + nb);
    let p = kolmogorov_q(libm::sqrt(ne) * d);
    Ok(TestReport::from_p_value(
        name,
        d,
        p,
        (a.len() + b.len()) as u64,
        level,
    ))
}

/// Pearson chi-square test of observed bin counts against bin probabilities.
///
/// Adjacent bins are merged left to right until each expected count reaches
/// `merge_min`; a short final group joins its predecessor. `dof = bins - 1`.
pub fn chi_square_pmf_test(
    name: &str,
    counts: &[u64],
    probs: &[f64],
    merge_min: f64,
    level: f64,
) -> Result<TestReport> {
    if counts.len() != probs.len() {
        return Err(Error::InvalidInput(
            "counts and probabilities differ in length".into(),
        ));
    }
    let total: u64 = counts.iter().sum();
    let nf = total as f64;
    let mut merged: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    for (c, p) in counts.iter().zip(probs) {
        obs += *c as f64;
        exp += p * nf;
        if exp >= merge_min {
            merged.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    if exp > 0.0 || obs > 0.0 {
        match merged.last_mut() {
            Some(last) => {
                last.0 += obs;
                last.1 += exp;
            }
            None => merged.push((obs, exp)),
        }
    }
    if merged.len() < 2 {
        return Err(Error::DegenerateTest(alloc::format!(
            "{name}: only {} bin(s) after merging",
            merged.len()
        )));
    }
    let stat: f64 = merged
        .iter()
        .map(|(o, e)| {
            if *e > 0.0 {
                (o - e) * (o - e) / e
            } else if *o > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .sum();
    let dof = (merged.len() - 1) as f64;
    Ok(TestReport::from_p_value(
        name,
        stat,
        chi_square_sf(stat, dof),
        total,
        level,
    ))
}

/// Chi-square test of integer samples against a pmf on `{0, 1, ...}`.
///
/// Bins are `{0}, {1}, ..., {K-1}, {>= K}` where `K` is the first value at
/// which the remaining tail mass is below `1e-12`, capped at `max_bins`.
pub fn chi_square_discrete<P: Fn(u64) -> f64>(
    name: &str,
    samples: &[u64],
    pmf: P,
    merge_min: f64,
    level: f64,
    max_bins: usize,
) -> Result<TestReport> {
    let mut probs = Vec::new();
    let mut cum = 0.0;
    while probs.len() + 1 < max_bins && 1.0 - cum > 1e-12 {
        let p = pmf(probs.len() as u64);
        probs.push(p);
        cum += p;
    }
    probs.push((1.0 - cum).max(0.0));
    let k = probs.len() - 1;
    let mut counts = alloc::vec![0u64; probs.len()];
    for &s in samples {
        counts[(s as usize).min(k)] += 1;
    }
    chi_square_pmf_test(name, &counts, &probs, merge_min, level)
}

/// `z = (mean - target) / (sd / sqrt(n))`, passing iff `|z| <= z_max`.
/// With `sd = None` the sample standard deviation is used.
pub fn moment_z(
    name: &str,
    samples: &[f64],
    target_mean: f64,
    sd: Option<f64>,
    z_max: f64,
) -> Result<TestReport> {
    let n = samples.len();
    if n < 100 {
        return Err(Error::InvalidInput(alloc::format!(
            "moment test needs n >= 100, got {n}"
        )));
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let sd = match sd {
        Some(s) => s,
        None => {
            libm::sqrt(samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (nf - 1.0))
        }
    };
    let diff = mean - target_mean;
    let z = if sd > 0.0 {
        diff / (sd / libm::sqrt(nf))
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(diff)
    };
    Ok(TestReport::from_z(name, z, n as u64, z_max))
}

/// Poisson dispersion test: `sum (c_i - m)^2 / m` is chi-square with `n - 1`
/// degrees of freedom when `m` is the sample mean (`mean = None`), or `n`
/// when a known mean is supplied. Two-sided p-value.
pub fn poisson_dispersion(
    name: &str,
    counts: &[u64],
    mean: Option<f64>,
    level: f64,
) -> Result<TestReport> {
    let n = counts.len();
    if n < 50 {
        return Err(Error::InvalidInput(alloc::format!(
            "dispersion test needs n >= 50, got {n}"
        )));
    }
    let (m, dof) = match mean {
        Some(m) => (m, n as f64),
        None => (counts.iter().sum::<u64>() as f64 / n as f64, (n - 1) as f64),
    };
    if !(m > 0.0) {
        return Err(Error::DegenerateTest(
            "dispersion test with zero mean".into(),
        ));
    }
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - m) * (c as f64 - m) / m)
        .sum();
    let p = 2.0 * chi_square_sf(stat, dof).min(chi_square_cdf(stat, dof));
    Ok(TestReport::from_p_value(name, stat, p, n as u64, level))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;
    use rand_distr::{Distribution, Exp, Geometric, Poisson};

    #[test]
    fn ks_null_calibration_and_degenerate() {
        let mut fails = 0;
        for rep in 0..200 {
            let mut rng = stream(11, rep);
            let xs: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
            let r = ks_test("u", &xs, |x| x.clamp(0.0, 1.0), DEFAULT_LEVEL).unwrap();
            fails += usize::from(!r.passed);
        }
        assert!(fails <= 1, "{fails}");
        let same = [0.5; 100];
        let r = ks_test("same", &same, |x| x, DEFAULT_LEVEL).unwrap();
        assert!(r.p_value < 1e-10 && !r.passed);
        let xs: Vec<f64> = (0..50).map(|i| i as f64 / 50.0).collect();
        assert!(matches!(
            ks_test("dec", &xs, |x| 1.0 - x, 0.01),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn ks_exponential_samples() {
        let mut rng = stream(5, 0);
        let e = Exp::new(0.5).unwrap();
        let xs: Vec<f64> = (0..5000).map(|_| e.sample(&mut rng)).collect();
        let r = ks_test("exp", &xs, |x| 1.0 - (-0.5 * x).exp(), DEFAULT_LEVEL).unwrap();
        assert!(r.passed);
        let r = ks_test("exp-wrong", &xs, |x| 1.0 - (-0.6 * x).exp(), DEFAULT_LEVEL).unwrap();
        assert!(!r.passed);
        let r = moment_z("exp-mean", &xs, 2.0, None, DEFAULT_Z_MAX).unwrap();
        assert!(r.passed);
    }

    #[test]
    fn two_sample_ks() {
        let mut rng = stream(6, 0);
        let a: Vec<f64> = (0..2000).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..3000).map(|_| rng.random::<f64>()).collect();
        assert!(ks_two_sample("same", &a, &b, DEFAULT_LEVEL).unwrap().passed);
        let c: Vec<f64> = b.iter().map(|x| x * 0.8).collect();
        assert!(
            !ks_two_sample("shift", &a, &c, DEFAULT_LEVEL)
                .unwrap()
                .passed
        );
    }

    #[test]
    fn chi_square_examples() {
        let probs = [0.1, 0.2, 0.3, 0.4];
        let counts = [100, 200, 300, 400];
        let r = chi_square_pmf_test("exact", &counts, &probs, 5.0, DEFAULT_LEVEL).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert!(matches!(
            chi_square_pmf_test("one", &[3, 1], &[0.5, 0.5], 5.0, DEFAULT_LEVEL),
            Err(Error::DegenerateTest(_))
        ));

        let mut fails = 0;
        for rep in 0..200 {
            let mut rng = stream(12, rep);
            let pois = Poisson::new(3.0).unwrap();
            let xs: Vec<u64> = (0..1000).map(|_| pois.sample(&mut rng) as u64).collect();
            let pmf = |k: u64| {
                (-3.0f64 + k as f64 * 3.0f64.ln() - crate::special::ln_gamma(k as f64 + 1.0)).exp()
            };
            let r = chi_square_discrete("pois", &xs, pmf, 5.0, DEFAULT_LEVEL, 64).unwrap();
            fails += usize::from(!r.passed);
        }
        assert!(fails <= 1, "{fails}");
    }

    #[test]
    fn moment_z_examples() {
        let xs = [3.0; 200];
        assert_eq!(moment_z("eq", &xs, 3.0, None, 4.0).unwrap().statistic, 0.0);
        let r = moment_z("ne", &xs, 2.0, None, 4.0).unwrap();
        assert!(r.statistic.is_infinite() && !r.passed);

        let mut rng = stream(7, 0);
        let e = rand_distr::StandardNormal;
        let xs: Vec<f64> = (0..10_000)
            .map(|_| 1.0 + Distribution::<f64>::sample(&e, &mut rng))
            .collect();
        let r = moment_z("shift", &xs, 0.0, Some(1.0), 4.0).unwrap();
        assert!((r.statistic - 100.0).abs() < 5.0 && !r.passed);
    }

    #[test]
    fn dispersion_examples() {
        let counts = [5u64; 100];
        let r = poisson_dispersion("const", &counts, None, DEFAULT_LEVEL).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(!r.passed);

        let mut fails = 0;
        for rep in 0..200 {
            let mut rng = stream(13, rep);
            let pois = Poisson::new(5.0).unwrap();
            let xs: Vec<u64> = (0..1000).map(|_| pois.sample(&mut rng) as u64).collect();
            fails += usize::from(
                !poisson_dispersion("p", &xs, None, DEFAULT_LEVEL)
                    .unwrap()
                    .passed,
            );
        }
        assert!(fails <= 1, "{fails}");

        let mut rng = stream(14, 0);
        let geo = Geometric::new(0.2).unwrap();
        let xs: Vec<u64> = (0..1000).map(|_| geo.sample(&mut rng)).collect();
        assert!(
            !poisson_dispersion("geo", &xs, None, DEFAULT_LEVEL)
                .unwrap()
                .passed
        );
        assert!(matches!(
            poisson_dispersion("zero", &[0u64; 60], None, DEFAULT_LEVEL),
            Err(Error::DegenerateTest(_))
        ));
    }

    #[test]
    fn p_values_monotone_in_statistic() {
        let mut prev = 1.0;
        for i in 0..100 {
            let p = chi_square_sf(i as f64 * 0.5, 5.0);
            assert!(p <= prev && (0.0..=1.0).contains(&p));
            prev = p;
        }
        let mut prev = 1.0;
        for i in 0..100 {
            let p = kolmogorov_q(i as f64 * 0.03);
            assert!(p <= prev + 1e-15 && (0.0..=1.0).contains(&p));
            prev = p;
        }
    }
}
