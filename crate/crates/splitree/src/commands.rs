//! The five subcommands, as library functions over a [`RunConfig`].

use std::collections::BTreeMap;
use std::io::{Read, Write};

use anyhow::{bail, ensure};
use splitree_core::estimate::estimate_alpha_pooled;
use splitree_core::immigration::{simulate_immigration, PopulationSnapshot};
use splitree_core::scale::{default_step, solve_scale};
use splitree_core::stats::TestReport;

use crate::config::RunConfig;
use crate::output::{
    family_rows, read_family_rows, write_scale_csv, EstimateJson, FamilyRow, ParamsJson,
    SimulateWriter,
};
use crate::replicate::{replicate, with_workers};
use crate::suites::{run_suite, Context, Suite};

pub fn cmd_params(cfg: &RunConfig) -> anyhow::Result<ParamsJson> {
    cfg.validate()?;
    Ok(ParamsJson::from(&cfg.lifespan_model()?.malthusian()?))
}

/// Scale function on `[0, run.t]`.
pub fn cmd_scale<W: Write>(cfg: &RunConfig, out: W) -> anyhow::Result<()> {
    cfg.validate()?;
    let model = cfg.lifespan_model()?;
    let params = model.malthusian()?;
    let h = cfg.run.step.unwrap_or_else(|| default_step(&params));
    let grid = solve_scale(&model, cfg.run.t, h)?;
    write_scale_csv(out, &grid, params.eta)
}

/// Island populations at `run.t`, one per replicate.
pub fn simulate_snapshots(cfg: &RunConfig) -> anyhow::Result<Vec<PopulationSnapshot>> {
    cfg.validate()?;
    let model = cfg.lifespan_model()?;
    let imm = cfg.immigration_config()?;
    let t = cfg.run.t;
    Ok(with_workers(cfg.run.workers, || {
        replicate(cfg.run.seed, "simulate", cfg.run.replicates, |rng, sim| {
            simulate_immigration(&model, &imm, t, sim, rng)
        })
    })??)
}

pub fn cmd_simulate<W: Write>(cfg: &RunConfig, out: W) -> anyhow::Result<()> {
    let snaps = simulate_snapshots(cfg)?;
    let model = cfg.immigration_config()?.model_name();
    let mut w = SimulateWriter::new(out)?;
    for (i, s) in snaps.iter().enumerate() {
        for row in family_rows(i as u64, model, s) {
            w.write(&row)?;
        }
    }
    w.finish()
}

pub fn cmd_validate(cfg: &RunConfig, suite: Suite) -> anyhow::Result<Vec<TestReport>> {
    let ctx = Context::new(cfg)?;
    with_workers(cfg.run.workers, || run_suite(suite, &ctx))?
}

/// Age-ranked surviving fractions of each replicate in `simulate` output.
pub fn fractions_from_rows(rows: &[FamilyRow]) -> anyhow::Result<Vec<Vec<f64>>> {
    let mut by_rep: BTreeMap<u64, Vec<&FamilyRow>> = BTreeMap::new();
    for r in rows {
        if r.model != "I" {
            bail!(
                "estimation needs Model I families (every immigrant a new type), found model {}",
                r.model
            );
        }
        by_rep.entry(r.replicate).or_default().push(r);
    }
    let mut out = Vec::new();
    for (rep, mut fams) in by_rep {
        let total = fams[0].total;
        ensure!(
            fams.iter().all(|f| f.total == total),
            "replicate {rep} has inconsistent totals"
        );
        if total == 0 {
            continue;
        }
        fams.retain(|f| f.abundance > 0);
        fams.sort_by(|a, b| a.immigration_time.total_cmp(&b.immigration_time));
        out.push(
            fams.iter()
                .map(|f| f.abundance as f64 / total as f64)
                .collect(),
        );
    }
    Ok(out)
}

/// Estimates `theta / b` from `simulate` CSV, or from a fresh simulation of
/// the configuration when no input is given.
pub fn cmd_estimate<R: Read>(cfg: &RunConfig, input: Option<R>) -> anyhow::Result<EstimateJson> {
    let rows = match input {
        Some(r) => read_family_rows(r)?,
        None => {
            let model = cfg.immigration_config()?.model_name();
            let snaps = simulate_snapshots(cfg)?;
            snaps
                .iter()
                .enumerate()
                .flat_map(|(i, s)| family_rows(i as u64, model, s).collect::<Vec<_>>())
                .collect()
        }
    };
    let fractions = fractions_from_rows(&rows)?;
    ensure!(
        !fractions.is_empty(),
        "no replicate has a surviving population"
    );
    let e = estimate_alpha_pooled(fractions.iter().map(|f| f.as_slice()))?;
    Ok(EstimateJson::new(&e, fractions.len()))
}
