//! Validation suites. Each check draws from its own labelled stream family,
//! so adding or removing a check never changes the others.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use splitree_core::estimate::estimate_alpha;
use splitree_core::immigration::{
    i_t_pmf, ranked_surviving_fractions, simulate_immigration, type_aggregated_fractions,
    AbundanceDensity, ImmigrationConfig, TypeLabel, TypeWeights,
};
use splitree_core::limits::{
    exp_integral_e1, gamma_limit_cdf, gamma_limit_sample, gem_sample, image_points_above,
    model2_limit_sample, model3_intensity, ppp_scaled_intensity, sample_poisson_sup, sigma_laplace,
    sigma_mean, sup_poisson_tail, PppSampler,
};
use splitree_core::rng::{labelled_seed, stream};
use splitree_core::scale::{default_step, solve_scale};
use splitree_core::sim::{
    sample_ar, simulate_conditioned_spine, total_progeny_subcritical, ConditionedLaw,
    DEFAULT_POPULATION_CAP,
};
use splitree_core::special::beta_inc;
use splitree_core::stats::{
    chi_square_discrete, ks_test, ks_two_sample, moment_z, poisson_dispersion, TestReport,
    DEFAULT_LEVEL, DEFAULT_Z_MAX,
};
use splitree_core::{DerivedParams, Lifespan, LifespanModel};

use crate::config::RunConfig;
use crate::replicate::replicate;

/// Bound on `|z|` for checks stated as "within 3 standard errors".
pub const Z3: f64 = 3.0;
/// Level of the two-sample comparison of PPP atoms with simulated families.
pub const ATOM_LEVEL: f64 = 5e-3;
/// Scaled-time horizon `eta t` of the long-run checks.
pub const LONG_RUN: f64 = 8.0;
/// Longer horizon for comparing Model III family fractions with their limit,
/// whose convergence is slowed by species with small immigration rates.
pub const ATOM_RUN: f64 = 10.0;
/// Model III atoms are cut at `ATOM_EPS / c`; a cut at 1e-6 leaves about
/// e^{-10} probability of no atom at all, this one about e^{-22}.
pub const ATOM_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Scale,
    Transient,
    Limits,
    Gem,
    Model2,
    Model3,
    Spine,
    Lemmas,
    All,
}

impl Suite {
    pub const EACH: [Suite; 8] = [
        Suite::Scale,
        Suite::Transient,
        Suite::Limits,
        Suite::Gem,
        Suite::Model2,
        Suite::Model3,
        Suite::Spine,
        Suite::Lemmas,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Scale => "scale",
            Suite::Transient => "transient",
            Suite::Limits => "limits",
            Suite::Gem => "gem",
            Suite::Model2 => "model2",
            Suite::Model3 => "model3",
            Suite::Spine => "spine",
            Suite::Lemmas => "lemmas",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        Suite::EACH
            .iter()
            .chain([Suite::All].iter())
            .copied()
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                anyhow::anyhow!(
                    "unknown suite '{s}' (expected one of scale, transient, limits, gem, model2, model3, spine, lemmas, all)"
                )
            })
    }
}

/// Everything the checks need, built once from a validated config.
pub struct Context {
    pub seed: u64,
    pub model: LifespanModel,
    pub params: DerivedParams,
    pub theta: f64,
    pub weights: TypeWeights,
    pub abundance: AbundanceDensity,
    pub step: f64,
}

impl Context {
    pub fn new(cfg: &RunConfig) -> anyhow::Result<Self> {
        cfg.validate()?;
        let model = cfg.lifespan_model()?;
        let params = model.malthusian()?;
        Ok(Context {
            seed: cfg.run.seed,
            step: cfg.run.step.unwrap_or_else(|| default_step(&params)),
            theta: cfg.theta()?,
            weights: cfg.type_weights()?,
            abundance: cfg.abundance()?,
            model,
            params,
        })
    }

    fn alpha(&self) -> f64 {
        self.theta / self.params.birth_rate
    }

    fn long_run_t(&self) -> f64 {
        LONG_RUN / self.params.eta
    }
}

pub fn run_suite(suite: Suite, ctx: &Context) -> anyhow::Result<Vec<TestReport>> {
    Ok(match suite {
        Suite::Scale => scale_suite(ctx)?,
        Suite::Transient => transient_suite(ctx)?,
        Suite::Limits => limits_suite(ctx)?,
        Suite::Gem => gem_suite(ctx)?,
        Suite::Model2 => model2_suite(ctx)?,
        Suite::Model3 => model3_suite(ctx)?,
        Suite::Spine => spine_suite(ctx)?,
        Suite::Lemmas => lemmas_suite(ctx)?,
        Suite::All => {
            let mut all = Vec::new();
            for s in Suite::EACH {
                all.extend(run_suite(s, ctx)?);
            }
            all
        }
    })
}

fn exp21() -> LifespanModel {
    LifespanModel::exponential(2.0, 1.0).expect("valid model")
}

fn dirac_infinite() -> LifespanModel {
    LifespanModel::new(1.0, Lifespan::DiracInfinite).expect("valid model")
}

fn dirac_finite() -> LifespanModel {
    LifespanModel::new(2.0, Lifespan::DiracFinite { at: 1.0 }).expect("valid model")
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Pinned scale-function step of the closed-form checks.
pub const SCALE_STEP: f64 = 1e-3;
pub const SCALE_REL_TOL: f64 = 1e-4;
pub const SCALE_LIMIT_TOL: f64 = 1e-3;

fn closed_form(
    name: &str,
    model: &LifespanModel,
    horizon: f64,
    end_included: bool,
    exact: impl Fn(f64) -> f64,
) -> anyhow::Result<TestReport> {
    let grid = solve_scale(model, horizon, SCALE_STEP)?;
    let (mut worst, mut n) = (0.0f64, 0u64);
    for (i, w) in grid.values().iter().enumerate() {
        let t = i as f64 * SCALE_STEP;
        if t > horizon + 1e-12 || (!end_included && t >= horizon - 1e-12) {
            continue;
        }
        let e = exact(t);
        worst = worst.max((w - e).abs() / e);
        n += 1;
    }
    Ok(TestReport::tolerance(name, worst, SCALE_REL_TOL, n))
}

fn scale_limit(name: &str, model: &LifespanModel, h: f64) -> anyhow::Result<TestReport> {
    let p = model.malthusian()?;
    let t = 12.0 / p.eta;
    let grid = solve_scale(model, t + h, h)?;
    let w = grid.w_at(t)?.0;
    Ok(TestReport::tolerance(
        name,
        (p.c * (-p.eta * t).exp() * w - 1.0).abs(),
        SCALE_LIMIT_TOL,
        1,
    ))
}

fn scale_suite(ctx: &Context) -> anyhow::Result<Vec<TestReport>> {
    Ok(vec![
        closed_form("scale/closed-form exponential", &exp21(), 10.0, true, |t| {
            2.0 * t.exp() - 1.0
        })?,
        closed_form(
            "scale/closed-form dirac-infinite",
            &dirac_infinite(),
            10.0,
            true,
            f64::exp,
        )?,
        closed_form(
            "scale/closed-form dirac-finite",
            &dirac_finite(),
            1.0,
            false,
            |t| (2.0 * t).exp(),
        )?,
        scale_limit("scale/limit exponential", &exp21(), SCALE_STEP)?,
        scale_limit("scale/limit dirac-infinite", &dirac_infinite(), SCALE_STEP)?,
        scale_limit("scale/limit dirac-finite", &dirac_finite(), SCALE_STEP)?,
        scale_limit("scale/limit config", &ctx.model, ctx.step)?,
    ])
}

pub const TRANSIENT_N: u64 = 10_000;
const MERGE_MIN: f64 = 5.0;
const MAX_BINS: usize = 2000;

fn tree_pmf_check(
    name: &str,
    seed: u64,
    model: &LifespanModel,
    t: f64,
) -> anyhow::Result<TestReport> {
    let h = 1e-4;
    let grid = solve_scale(model, t + h, h)?;
    let xs = replicate(seed, name, TRANSIENT_N, |rng, sim| {
        sim.count_alive(model, None, t, rng)
    })?;
    Ok(chi_square_discrete(
        name,
        &xs,
        |n| grid.x_t_pmf(t, n).unwrap_or(0.0),
        MERGE_MIN,
        DEFAULT_LEVEL,
        MAX_BINS,
    )?)
}

fn immigration_law_checks(
    ctx: &Context,
    theta: f64,
    eta_t: f64,
) -> anyhow::Result<Vec<TestReport>> {
    let t = eta_t / ctx.params.eta;
    let h = 1e-4;
    let grid = solve_scale(&ctx.model, t + h, h)?;
    let cfg = ImmigrationConfig::model_i(theta)?;
    let name = format!("transient/I(t) negbin theta={theta} t={t:.4}");
    let xs = replicate(ctx.seed, &name, TRANSIENT_N, |rng, sim| {
        Ok(simulate_immigration(&ctx.model, &cfg, t, sim, rng)?.total)
    })?;
    let chi = chi_square_discrete(
        &name,
        &xs,
        |n| i_t_pmf(&grid, &cfg, t, n).unwrap_or(0.0),
        MERGE_MIN,
        DEFAULT_LEVEL,
        MAX_BINS,
    )?;
    let w = grid.w_at(t)?.0;
    let fs: Vec<f64> = xs.iter().map(|x| *x as f64).collect();
    let mean_name = format!("transient/I(t) mean theta={theta} t={t:.4}");
    let mean = moment_z(
        &mean_name,
        &fs,
        theta / ctx.params.birth_rate * (w - 1.0),
        None,
        DEFAULT_Z_MAX,
    )?;
    Ok(vec![chi, mean])
}

fn transient_suite(ctx: &Context) -> anyhow::Result<Vec<TestReport>> {
    let t = std::f64::consts::LN_2 / ctx.params.eta;
    let mut out = vec![
        tree_pmf_check(
            &format!("transient/X(t) config t={t:.4}"),
            ctx.seed,
            &ctx.model,
            t,
        )?,
        tree_pmf_check(
            "transient/X(t) dirac-infinite t=2",
            ctx.seed,
            &dirac_infinite(),
            2.0,
        )?,
    ];
    out.extend(immigration_law_checks(
        ctx,
        ctx.theta,
        std::f64::consts::LN_2,
    )?);
    out.extend(immigration_law_checks(ctx, 1.0, 1.0)?);
    Ok(out)
}

pub const SURVIVAL_N: u64 = 10_000;
pub const GAMMA_N: u64 = 5_000;

fn limits_suite(ctx: &Context) -> anyhow::Result<Vec<TestReport>> {
    let p = ctx.params;
    let t = ctx.long_run_t();
    let scale = (-p.eta * t).exp();
    let mut out = Vec::new();

    let xs = replicate(ctx.seed, "limits/survival", SURVIVAL_N, |rng, sim| {
        sim.count_alive(&ctx.model, None, t, rng)
    })?;
    let alive = xs.iter().filter(|x| **x > 0).count() as f64;
    let n = xs.len() as f64;
    let target = p.eta / p.birth_rate;
    let se = (target * (1.0 - target) / n).sqrt();
    let z = if se > 0.0 {
        (alive / n - target) / se
    } else if alive == n {
        0.0
    } else {
        f64::INFINITY
    };
    out.push(TestReport::from_z(
        "limits/survival fraction",
        z,
        xs.len() as u64,
        Z3,
    ));
    let survivors: Vec<f64> = xs
        .iter()
        .filter(|x| **x > 0)
        .map(|x| scale * *x as f64)
        .collect();
    out.push(ks_test(
        "limits/survivors exponential",
        &survivors,
        |x| 1.0 - (-p.c * x).exp(),
        DEFAULT_LEVEL,
    )?);

    let alpha = ctx.alpha();
    let cfg = ImmigrationConfig::model_i(ctx.theta)?;
    let totals = replicate(ctx.seed, "limits/gamma", GAMMA_N, |rng, sim| {
        Ok(scale * simulate_immigration(&ctx.model, &cfg, t, sim, rng)?.total as f64)
    })?;
    out.push(ks_test(
        "limits/I(t) gamma",
        &totals,
        |x| gamma_limit_cdf(alpha, p.c, x),
        DEFAULT_LEVEL,
    )?);

    let g = replicate(ctx.seed, "limits/gamma-sampler", 100_000, |rng, _| {
        gamma_limit_sample(alpha, p.c, rng)
    })?;
    out.push(moment_z(
        "limits/gamma sampler mean",
        &g,
        alpha / p.c,
        None,
        Z3,
    )?);
    let var_target = alpha / (p.c * p.c);
    let sq: Vec<f64> = g.iter().map(|x| (x - alpha / p.c).powi(2)).collect();
    out.push(moment_z(
        "limits/gamma sampler variance",
        &sq,
        var_target,
        None,
        Z3,
    )?);

    let nu = ppp_scaled_intensity(ctx.theta * p.eta / p.birth_rate, p.eta, |v: f64| {
        (-p.c * v).exp()
    })?;
    let sampler = PppSampler::new(&nu, 1e-6 / p.c, 1.0 / p.c)?;
    let sums = replicate(ctx.seed, "limits/ppp", GAMMA_N, |rng, _| {
        Ok(sampler.sample(rng).total)
    })?;
    out.push(ks_test(
        "limits/ppp sum gamma",
        &sums,
        |x| gamma_limit_cdf(alpha, p.c, x),
        DEFAULT_LEVEL,
    )?);
    Ok(out)
}

pub const FRACTIONS_N: u64 = 2_000;
pub const GEM_MEAN_TOL: f64 = 0.02;

/// Simulates until the population at `t` is non-empty.
fn nonempty_snapshot<R: Rng>(
    model: &LifespanModel,
    cfg: &ImmigrationConfig,
    t: f64,
    sim: &mut splitree_core::sim::TreeSimulator,
    rng: &mut R,
) -> splitree_core::Result<splitree_core::immigration::PopulationSnapshot> {
    loop {
        let s = simulate_immigration(model, cfg, t, sim, rng)?;
        if s.total > 0 {
            return Ok(s);
        }
    }
}

fn gem_suite(ctx: &Context) -> anyhow::Result<Vec<TestReport>> {
    let t = ctx.long_run_t();
    let mut out = Vec::new();
    for theta in [ctx.theta, 2.0 * ctx.theta] {
        let alpha = theta / ctx.params.birth_rate;
        let cfg = ImmigrationConfig::model_i(theta)?;
        let label = format!("gem/alpha={alpha}");
        let p1 = replicate(ctx.seed, &label, FRACTIONS_N, |rng, sim| {
            let s = nonempty_snapshot(&ctx.model, &cfg, t, sim, rng)?;
            Ok(ranked_surviving_fractions(&s)?[0])
        })?;
        let (mean, _) = mean_and_se(&p1);
        out.push(TestReport::tolerance(
            format!("gem/P1 mean alpha={alpha}"),
            (mean - 1.0 / (1.0 + alpha)).abs(),
            GEM_MEAN_TOL,
            p1.len() as u64,
        ));
        let cdf = |x: f64| 1.0 - (1.0 - x.clamp(0.0, 1.0)).powf(alpha);
        out.push(ks_test(
            &format!("gem/P1 beta alpha={alpha}"),
            &p1,
            cdf,
            DEFAULT_LEVEL,
        )?);
        let sticks = replicate(
            ctx.seed,
            &format!("gem/sampler alpha={alpha}"),
            10_000,
            |rng, _| Ok(gem_sample(alpha, 1, rng)?.points[0]),
        )?;
        out.push(ks_test(
            &format!("gem/sampler P1 beta alpha={alpha}"),
            &sticks,
            cdf,
            DEFAULT_LEVEL,
        )?);
    }
    let mut rng = stream(labelled_seed(ctx.seed, "gem/estimate"), 0);
    let e = estimate_alpha(&gem_sample(2.0, 1000, &mut rng)?.points)?;
    out.push(TestReport::tolerance(
        "gem/estimate alpha=2 K=1000",
        (e.alpha - 2.0).abs(),
        0.1,
        1000,
    ));
    Ok(out)
}

fn model2_suite(ctx: &Context) -> anyhow::Result<Vec<TestReport>> {
    let t = ctx.long_run_t();
    let alpha = ctx.alpha();
    let w = &ctx.weights;
    let k = w.head().len();
    let cfg = ImmigrationConfig::model_ii(ctx.theta, w.clone())?;
    let fractions = replicate(ctx.seed, "model2/fractions", FRACTIONS_N, |rng, sim| {
        let s = nonempty_snapshot(&ctx.model, &cfg, t, sim, rng)?;
        let by_type = type_aggregated_fractions(&s)?;
        Ok((1..=k)
            .map(|i| {
                by_type
                    .iter()
                    .find(|(l, _)| *l == TypeLabel::Type(i as u32))
                    .map_or(0.0, |x| x.1)
            })
            .collect::<Vec<f64>>())
    })?;
    let (a, b) = (alpha * w.p(1), alpha * w.remaining_after(1));
    let cdf = |x: f64| {
        if b > 0.0 {
            beta_inc(a, b, x.clamp(0.0, 1.0))
        } else if x >= 1.0 {
            1.0
        } else {
            0.0
        }
    };
    let mut out = Vec::new();
    let first: Vec<f64> = fractions.iter().map(|f| f[0]).collect();
    out.push(ks_test(
        "model2/type-1 fraction beta",
        &first,
        cdf,
        DEFAULT_LEVEL,
    )?);
    for i in 0..k {
        let xs: Vec<f64> = fractions.iter().map(|f| f[i]).collect();
        out.push(moment_z(
            &format!("model2/type-{} mean", i + 1),
            &xs,
            w.p(i + 1),
            None,
            Z3,
        )?);
    }
    let limit = replicate(ctx.seed, "model2/sampler", 10_000, |rng, _| {
        Ok(model2_limit_sample(alpha, w, 1, rng)?[0])
    })?;
    out.push(ks_test(
        "model2/sampler type-1 beta",
        &limit,
        cdf,
        DEFAULT_LEVEL,
    )?);
    Ok(out)
}

fn model3_suite(ctx: &Context) -> anyhow::Result<Vec<TestReport>> {
    let p = ctx.params;
    let t = ctx.long_run_t();
    let scale = (-p.eta * t).exp();
    let d = &ctx.abundance;
    let cfg = ImmigrationConfig::model_iii(d.clone())?;
    let sigma_hat = replicate(ctx.seed, "model3/snapshots", FRACTIONS_N, |rng, sim| {
        Ok(scale * simulate_immigration(&ctx.model, &cfg, t, sim, rng)?.total as f64)
    })?;
    let mut out = vec![moment_z(
        "model3/sigma mean",
        &sigma_hat,
        sigma_mean(d, &p),
        None,
        Z3,
    )?];
    for s in [0.5, 1.0, 2.0] {
        let lt: Vec<f64> = sigma_hat.iter().map(|x| (-s * x).exp()).collect();
        out.push(moment_z(
            &format!("model3/sigma laplace s={s}"),
            &lt,
            sigma_laplace(d, &p, s)?,
            None,
            Z3,
        )?);
    }
    let t_atoms = ATOM_RUN / p.eta;
    let simulated = replicate(
        ctx.seed,
        "model3/largest family",
        FRACTIONS_N,
        |rng, sim| {
            let s = nonempty_snapshot(&ctx.model, &cfg, t_atoms, sim, rng)?;
            let largest = s.families.iter().map(|f| f.abundance).max().unwrap_or(0);
            Ok(largest as f64 / s.total as f64)
        },
    )?;
    let nu = model3_intensity(d, &p)?;
    let sampler = PppSampler::new(&nu, ATOM_EPS / p.c, 1.0 / p.c)?;
    let atoms = replicate(ctx.seed, "model3/ppp", FRACTIONS_N, |rng, _| {
        let s = sampler.sample(rng);
        Ok(s.points.first().map_or(0.0, |x| x / s.total))
    })?;
    out.push(ks_two_sample(
        "model3/largest atom vs simulation",
        &atoms,
        &simulated,
        ATOM_LEVEL,
    )?);
    Ok(out)
}

pub const AR_N: u64 = 100_000;
pub const SPINE_N: u64 = 5_000;
pub const PROGENY_N: u64 = 10_000;

fn spine_suite(ctx: &Context) -> anyhow::Result<Vec<TestReport>> {
    let (m, p) = (&ctx.model, ctx.params);
    let mut out = Vec::new();
    let ar = replicate(ctx.seed, "spine/ar", AR_N, |rng, _| {
        Ok(sample_ar(m, &p, rng))
    })?;
    if p.m.is_finite() {
        let a: Vec<f64> = ar.iter().map(|x| x.0).collect();
        out.push(moment_z(
            "spine/A mean",
            &a,
            (p.m - 1.0) / p.eta,
            None,
            DEFAULT_Z_MAX,
        )?);
    }
    let r: Vec<f64> = ar.iter().map(|x| x.1).collect();
    out.push(moment_z(
        "spine/R mean",
        &r,
        p.c / p.eta,
        None,
        DEFAULT_Z_MAX,
    )?);

    let t = 3.0 / p.eta;
    let spine = replicate(ctx.seed, "spine/spine", SPINE_N, |rng, sim| {
        Ok(simulate_conditioned_spine(m, &p, t, sim, rng)?.population_at_t() as f64)
    })?;
    let rejection = replicate(ctx.seed, "spine/rejection", SPINE_N, |rng, sim| loop {
        let (run, survived) = sim.run_with_survival(m, t, t + 15.0 / p.eta, rng)?;
        if survived {
            return Ok(run.population_at_t as f64);
        }
    })?;
    out.push(ks_two_sample(
        "spine/spine vs rejection",
        &spine,
        &rejection,
        DEFAULT_LEVEL,
    )?);

    let law = ConditionedLaw::new(m, &p);
    let progeny = replicate(ctx.seed, "spine/progeny", PROGENY_N, |rng, _| {
        Ok(total_progeny_subcritical(&law, DEFAULT_POPULATION_CAP, rng)? as f64)
    })?;
    out.push(moment_z(
        "spine/conditioned progeny mean",
        &progeny,
        1.0 / p.c,
        None,
        DEFAULT_Z_MAX,
    )?);
    Ok(out)
}

pub const LEMMA_N: u64 = 10_000;
pub const SUP_TOL: f64 = 0.02;

fn lemmas_suite(ctx: &Context) -> anyhow::Result<Vec<TestReport>> {
    let mut out = Vec::new();
    for (rho, a) in [(1.0, 2.0), (2.0, 1.0)] {
        let name = format!("lemmas/sup exceedance rho={rho} a={a}");
        let hits = replicate(ctx.seed, &name, LEMMA_N, |rng, _| {
            Ok(sample_poisson_sup(rho, 1e3 / rho, rng)? > a)
        })?;
        let freq = hits.iter().filter(|h| **h).count() as f64 / hits.len() as f64;
        out.push(TestReport::tolerance(
            name,
            (freq - sup_poisson_tail(rho, a)?).abs(),
            SUP_TOL,
            hits.len() as u64,
        ));
    }

    let p = ctx.params;
    let (rho, r) = (ctx.theta * p.eta / p.birth_rate, p.eta);
    let u = 1.0 / p.c;
    let nu = ppp_scaled_intensity(rho, r, |v: f64| (-p.c * v).exp())?;
    let mean = nu.expected_count(u)?;
    let e1 = rho / r * exp_integral_e1(p.c * u)?;
    out.push(TestReport::tolerance(
        "lemmas/image intensity quadrature",
        ((mean - e1) / e1).abs(),
        1e-8,
        1,
    ));
    let horizon = 6.0 / p.eta;
    let counts = replicate(ctx.seed, "lemmas/image counts", LEMMA_N, |rng, _| {
        image_points_above(rho, r, u, horizon, rng, |rng| {
            -(1.0 - rng.random::<f64>()).ln() / p.c
        })
    })?;
    out.push(poisson_dispersion(
        "lemmas/image count dispersion",
        &counts,
        None,
        DEFAULT_LEVEL,
    )?);
    let fs: Vec<f64> = counts.iter().map(|c| *c as f64).collect();
    out.push(moment_z(
        "lemmas/image count mean",
        &fs,
        mean,
        Some(mean.sqrt()),
        DEFAULT_Z_MAX,
    )?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for s in Suite::EACH.iter().chain([Suite::All].iter()) {
            assert_eq!(s.name().parse::<Suite>().unwrap(), *s);
        }
        assert!("everything".parse::<Suite>().is_err());
    }

    #[test]
    fn subcritical_config_is_rejected() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"model": {"birth_rate": 1, "lifespan": {"family": "exponential", "rate": 2}}}"#,
        )
        .unwrap();
        assert!(Context::new(&cfg).is_err());
    }

    #[test]
    fn scale_suite_passes() {
        let ctx = Context::new(&RunConfig::default()).unwrap();
        let reports = run_suite(Suite::Scale, &ctx).unwrap();
        assert_eq!(reports.len(), 7);
        assert!(reports.iter().all(|r| r.passed), "{reports:#?}");
    }
}
