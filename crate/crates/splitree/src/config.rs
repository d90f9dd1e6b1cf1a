//! JSON run configuration: `{ "model": ..., "immigration": ..., "run": ... }`.
//! Every field has a default; command-line flags override the `run` block.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context};
use serde::{Deserialize, Serialize};
use splitree_core::immigration::{AbundanceDensity, ImmigrationConfig, TypeWeights};
use splitree_core::{GenericDensity, Lifespan, LifespanModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub immigration: ImmigrationSpec,
    pub run: RunSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub birth_rate: f64,
    pub lifespan: LifespanSpec,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            birth_rate: 2.0,
            lifespan: LifespanSpec::Exponential { rate: 1.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum LifespanSpec {
    Exponential {
        rate: f64,
    },
    DiracFinite {
        at: f64,
    },
    DiracInfinite,
    Uniform {
        lo: f64,
        hi: f64,
    },
    Gamma {
        shape: f64,
        rate: f64,
    },
    /// Piecewise-linear density through `(x[i], density[i])`, zero outside; normalized on load.
    Tabulated {
        x: Vec<f64>,
        density: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum ImmigrationKind {
    #[default]
    I,
    II,
    III,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImmigrationSpec {
    pub model: ImmigrationKind,
    /// Immigration rate for Models I and II (default 2). Model III takes it
    /// from the abundance density; a value given here must agree.
    pub theta: Option<f64>,
    /// Model II type probabilities (the head, if `tail_ratio` is set).
    pub p: Vec<f64>,
    /// Model II geometric tail ratio; the tail carries `1 - sum(p)`.
    pub tail_ratio: Option<f64>,
    /// Model III mainland abundance density.
    pub abundance: AbundanceSpec,
}

impl Default for ImmigrationSpec {
    fn default() -> Self {
        ImmigrationSpec {
            model: ImmigrationKind::I,
            theta: None,
            p: vec![0.5, 0.5],
            tail_ratio: None,
            abundance: AbundanceSpec::FisherLogSeries { a: 1.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AbundanceSpec {
    /// `f(x) = e^{-a x} / x`.
    FisherLogSeries { a: f64 },
    /// Piecewise-linear `f` through `(x[i], f[i])`, zero outside.
    Tabulated { x: Vec<f64>, f: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSpec {
    pub seed: u64,
    pub replicates: u64,
    /// Observation time for `simulate` and `estimate`; horizon for `scale`.
    pub t: f64,
    /// Scale-function step; default `1e-3 min(1, 1/eta)`.
    pub step: Option<f64>,
    /// Worker threads; default is one per core.
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Default for RunSpec {
    fn default() -> Self {
        RunSpec {
            seed: 42,
            replicates: 100,
            t: 4.0,
            step: None,
            workers: None,
            out: None,
        }
    }
}

pub const DEFAULT_THETA: f64 = 2.0;

fn piecewise_linear(
    x: &[f64],
    y: &[f64],
) -> anyhow::Result<impl Fn(f64) -> f64 + Send + Sync + 'static> {
    ensure!(
        x.len() >= 2 && x.len() == y.len(),
        "tabulated function needs matching x and value arrays of length >= 2"
    );
    ensure!(x[0] >= 0.0, "tabulated x must be non-negative");
    ensure!(
        x.windows(2).all(|w| w[0] < w[1]),
        "tabulated x must be strictly increasing"
    );
    ensure!(
        y.iter().all(|v| v.is_finite() && *v >= 0.0),
        "tabulated values must be finite and non-negative"
    );
    ensure!(
        x.iter().all(|v| v.is_finite()),
        "tabulated x must be finite"
    );
    let (x, y) = (x.to_vec(), y.to_vec());
    Ok(move |u: f64| {
        if !(u >= x[0] && u <= x[x.len() - 1]) {
            return 0.0;
        }
        let j = x.partition_point(|v| *v <= u).clamp(1, x.len() - 1);
        let s = (u - x[j - 1]) / (x[j] - x[j - 1]);
        y[j - 1] + s * (y[j] - y[j - 1])
    })
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        ensure!(self.run.replicates >= 1, "replicates must be at least 1");
        ensure!(
            self.run.t.is_finite() && self.run.t >= 0.0,
            "t must be finite and non-negative"
        );
        if let Some(h) = self.run.step {
            ensure!(h > 0.0 && h.is_finite(), "step must be positive");
        }
        if let Some(w) = self.run.workers {
            ensure!(w >= 1, "workers must be at least 1");
        }
        self.lifespan_model()?;
        self.immigration_config()?;
        Ok(())
    }

    pub fn lifespan_model(&self) -> anyhow::Result<LifespanModel> {
        let lifespan = match &self.model.lifespan {
            LifespanSpec::Exponential { rate } => Lifespan::Exponential { rate: *rate },
            LifespanSpec::DiracFinite { at } => Lifespan::DiracFinite { at: *at },
            LifespanSpec::DiracInfinite => Lifespan::DiracInfinite,
            LifespanSpec::Uniform { lo, hi } => Lifespan::Uniform { lo: *lo, hi: *hi },
            LifespanSpec::Gamma { shape, rate } => Lifespan::Gamma {
                shape: *shape,
                rate: *rate,
            },
            LifespanSpec::Tabulated { x, density } => {
                let upper = x.last().copied().unwrap_or(0.0);
                Lifespan::Density(GenericDensity::new(piecewise_linear(x, density)?, upper)?)
            }
        };
        Ok(LifespanModel::new(self.model.birth_rate, lifespan)?)
    }

    pub fn abundance(&self) -> anyhow::Result<AbundanceDensity> {
        Ok(match &self.immigration.abundance {
            AbundanceSpec::FisherLogSeries { a } => AbundanceDensity::fisher_log_series(*a)?,
            AbundanceSpec::Tabulated { x, f } => {
                let upper = x.last().copied().unwrap_or(0.0);
                AbundanceDensity::generic(piecewise_linear(x, f)?, upper)?
            }
        })
    }

    pub fn type_weights(&self) -> anyhow::Result<TypeWeights> {
        let p = self.immigration.p.clone();
        Ok(match self.immigration.tail_ratio {
            None => TypeWeights::finite(p)?,
            Some(r) => TypeWeights::with_geometric_tail(p, r)?,
        })
    }

    /// Immigration rate of the configured model.
    pub fn theta(&self) -> anyhow::Result<f64> {
        let theta = match self.immigration.model {
            ImmigrationKind::I | ImmigrationKind::II => {
                self.immigration.theta.unwrap_or(DEFAULT_THETA)
            }
            ImmigrationKind::III => {
                let from_density = self.abundance()?.theta();
                if let Some(t) = self.immigration.theta {
                    if (t - from_density).abs() > 1e-9 * from_density {
                        bail!("theta = {t} disagrees with int x f(x) dx = {from_density} for Model III");
                    }
                }
                from_density
            }
        };
        ensure!(
            theta > 0.0 && theta.is_finite(),
            "theta must be positive (got {theta})"
        );
        Ok(theta)
    }

    pub fn immigration_config(&self) -> anyhow::Result<ImmigrationConfig> {
        let theta = self.theta()?;
        Ok(match self.immigration.model {
            ImmigrationKind::I => ImmigrationConfig::model_i(theta)?,
            ImmigrationKind::II => ImmigrationConfig::model_ii(theta, self.type_weights()?)?,
            ImmigrationKind::III => ImmigrationConfig::model_iii(self.abundance()?)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_default() {
        let cfg: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
        cfg.validate().unwrap();
        assert_eq!(cfg.theta().unwrap(), 2.0);
    }

    #[test]
    fn full_round_trip() {
        let text = r#"{
            "model": {"birth_rate": 1.5, "lifespan": {"family": "gamma", "shape": 2.0, "rate": 1.0}},
            "immigration": {"model": "II", "theta": 3.0, "p": [0.5], "tail_ratio": 0.5},
            "run": {"seed": 7, "replicates": 10, "t": 2.0, "workers": 2}
        }"#;
        let cfg: RunConfig = serde_json::from_str(text).unwrap();
        cfg.validate().unwrap();
        let again: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.immigration_config().unwrap().model_name(), "II");
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            r#"{"immigration": {"theta": 0.0}}"#,
            r#"{"run": {"replicates": 0}}"#,
            r#"{"model": {"lifespan": {"family": "weibull"}}}"#,
            r#"{"immigration": {"model": "II", "p": [0.5, 0.4]}}"#,
            r#"{"immigration": {"model": "III", "theta": 2.0}}"#,
            r#"{"model": {"birth_rate": -1}}"#,
            r#"{"bogus": 1}"#,
        ];
        for text in bad {
            let parsed: Result<RunConfig, _> = serde_json::from_str(text);
            assert!(parsed.map_or(true, |c| c.validate().is_err()), "{text}");
        }
    }

    #[test]
    fn tabulated_densities() {
        let text = r#"{
            "model": {"lifespan": {"family": "tabulated", "x": [0, 1, 2], "density": [1, 1, 0]}},
            "immigration": {"model": "III", "abundance": {"kind": "tabulated", "x": [0, 2], "f": [1, 1]}}
        }"#;
        let cfg: RunConfig = serde_json::from_str(text).unwrap();
        cfg.validate().unwrap();
        // int_0^2 x dx = 2.
        assert!((cfg.theta().unwrap() - 2.0).abs() < 1e-10);
        // Mass 3/2, first moment 7/6.
        let m = cfg.lifespan_model().unwrap();
        let mean = m.lifespan().mean().unwrap();
        assert!((mean - 7.0 / 9.0).abs() < 1e-9, "{mean}");
    }
}
