//! CSV and JSON formats. Floats in CSV are written with 17 significant
//! digits, which round-trips every `f64` exactly.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use splitree_core::estimate::AlphaEstimate;
use splitree_core::immigration::PopulationSnapshot;
use splitree_core::scale::ScaleGrid;
use splitree_core::stats::TestReport;
use splitree_core::DerivedParams;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub const SCALE_HEADER: [&str; 4] = ["t", "W", "Wprime", "exp_scaled"];
pub const SIMULATE_HEADER: [&str; 7] = [
    "replicate",
    "model",
    "t",
    "type_label",
    "immigration_time",
    "abundance",
    "total",
];

/// `t, W(t), W'(t), e^{-eta t} W(t)` at every grid point.
pub fn write_scale_csv<W: Write>(out: W, grid: &ScaleGrid, eta: f64) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SCALE_HEADER)?;
    let h = grid.step();
    for (i, (v, d)) in grid.values().iter().zip(grid.derivs()).enumerate() {
        let t = i as f64 * h;
        w.write_record([
            fmt_f64(t),
            fmt_f64(*v),
            fmt_f64(*d),
            fmt_f64((-eta * t).exp() * v),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One family of one replicate, as written by `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyRow {
    pub replicate: u64,
    pub model: String,
    pub t: f64,
    pub type_label: String,
    pub immigration_time: f64,
    pub abundance: u64,
    pub total: u64,
}

pub fn family_rows<'a>(
    replicate: u64,
    model: &'a str,
    snap: &'a PopulationSnapshot,
) -> impl Iterator<Item = FamilyRow> + 'a {
    let model = model.to_string();
    snap.families.iter().map(move |f| FamilyRow {
        replicate,
        model: model.clone(),
        t: snap.t,
        type_label: f.label.to_string(),
        immigration_time: f.immigration_time,
        abundance: f.abundance,
        total: snap.total,
    })
}

pub struct SimulateWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> SimulateWriter<W> {
    pub fn new(out: W) -> anyhow::Result<Self> {
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(SIMULATE_HEADER)?;
        Ok(SimulateWriter { inner })
    }

    pub fn write(&mut self, row: &FamilyRow) -> anyhow::Result<()> {
        self.inner.write_record([
            row.replicate.to_string(),
            row.model.clone(),
            fmt_f64(row.t),
            row.type_label.clone(),
            fmt_f64(row.immigration_time),
            row.abundance.to_string(),
            row.total.to_string(),
        ])?;
        Ok(())
    }

    pub fn finish(mut self) -> anyhow::Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

pub fn read_family_rows<R: Read>(input: R) -> anyhow::Result<Vec<FamilyRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    anyhow::ensure!(
        header.iter().eq(SIMULATE_HEADER.iter().copied()),
        "expected columns {}",
        SIMULATE_HEADER.join(",")
    );
    Ok(r.deserialize().collect::<Result<Vec<FamilyRow>, _>>()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportJson {
    pub name: String,
    pub statistic: f64,
    pub p_value: f64,
    pub n: u64,
    pub passed: bool,
    pub level: f64,
}

impl From<&TestReport> for ReportJson {
    fn from(r: &TestReport) -> Self {
        ReportJson {
            name: r.name.clone(),
            statistic: r.statistic,
            p_value: r.p_value,
            n: r.n,
            passed: r.passed,
            level: r.level,
        }
    }
}

pub fn reports_json(reports: &[TestReport]) -> anyhow::Result<String> {
    let rows: Vec<ReportJson> = reports.iter().map(ReportJson::from).collect();
    Ok(serde_json::to_string_pretty(&rows)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsJson {
    pub eta: f64,
    pub c: f64,
    /// `null` when infinite.
    pub m: Option<f64>,
    pub p_ext: f64,
}

impl From<&DerivedParams> for ParamsJson {
    fn from(p: &DerivedParams) -> Self {
        ParamsJson {
            eta: p.eta,
            c: p.c,
            m: p.m.is_finite().then_some(p.m),
            p_ext: p.p_ext,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateJson {
    pub alpha: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub sticks: usize,
    pub replicates: usize,
}

impl EstimateJson {
    pub fn new(e: &AlphaEstimate, replicates: usize) -> Self {
        EstimateJson {
            alpha: e.alpha,
            std_error: e.std_error,
            ci_low: e.ci_low,
            ci_high: e.ci_high,
            sticks: e.sticks,
            replicates,
        }
    }
}
