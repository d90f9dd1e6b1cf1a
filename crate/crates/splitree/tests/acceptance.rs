//! Acceptance run: the twelve criteria, one PASS/FAIL line each.
//!
//! Runs `validate --suite all --seed 42` on the default configuration
//! (exponential lifespans with b = 2, d = 1; theta = 2; Model II types
//! p = (1/2, 1/2); Model III log-series a = 1) three times: twice on eight
//! workers and once on one. Criteria 1-11 read the first run's reports;
//! criterion 12 compares the JSON bytes of all three.

use std::process::ExitCode;
use std::time::Instant;

use splitree::commands::cmd_validate;
use splitree::output::reports_json;
use splitree::{RunConfig, Suite};
use splitree_core::stats::TestReport;

const SEED: u64 = 42;

// Level recorded by each kind of check.
const P_LEVEL: f64 = 1e-3;
const Z3: f64 = 3.0;
const Z4: f64 = 4.0;
const SCALE_REL: f64 = 1e-4;
const SCALE_LIMIT: f64 = 1e-3;
const GEM_MEAN: f64 = 0.02;
const SUP_FREQ: f64 = 0.02;

struct Criterion {
    id: u32,
    title: &'static str,
    checks: &'static [(&'static str, f64)],
}

const CRITERIA: &[Criterion] = &[
    Criterion {
        id: 1,
        title: "scale function matches closed forms",
        checks: &[
            ("scale/closed-form exponential", SCALE_REL),
            ("scale/closed-form dirac-infinite", SCALE_REL),
            ("scale/closed-form dirac-finite", SCALE_REL),
        ],
    },
    Criterion {
        id: 2,
        title: "c e^{-eta t} W(t) -> 1 at t = 12/eta",
        checks: &[
            ("scale/limit exponential", SCALE_LIMIT),
            ("scale/limit dirac-infinite", SCALE_LIMIT),
            ("scale/limit dirac-finite", SCALE_LIMIT),
        ],
    },
    Criterion {
        id: 3,
        title: "exact law of X(t)",
        checks: &[
            ("transient/X(t) config t=0.6931", P_LEVEL),
            ("transient/X(t) dirac-infinite t=2", P_LEVEL),
        ],
    },
    Criterion {
        id: 4,
        title: "survival probability and exponential limit",
        checks: &[
            ("limits/survival fraction", Z3),
            ("limits/survivors exponential", P_LEVEL),
        ],
    },
    Criterion {
        id: 5,
        title: "negative binomial law of I(t)",
        checks: &[
            ("transient/I(t) negbin theta=2 t=0.6931", P_LEVEL),
            ("transient/I(t) mean theta=2 t=0.6931", Z4),
            ("transient/I(t) negbin theta=1 t=1.0000", P_LEVEL),
            ("transient/I(t) mean theta=1 t=1.0000", Z4),
        ],
    },
    Criterion {
        id: 6,
        title: "gamma limit of e^{-eta t} I(t)",
        checks: &[("limits/I(t) gamma", P_LEVEL)],
    },
    Criterion {
        id: 7,
        title: "GEM limit of Model I fractions",
        checks: &[
            ("gem/P1 mean alpha=1", GEM_MEAN),
            ("gem/P1 beta alpha=1", P_LEVEL),
            ("gem/P1 mean alpha=2", GEM_MEAN),
            ("gem/P1 beta alpha=2", P_LEVEL),
        ],
    },
    Criterion {
        id: 8,
        title: "Beta limit of Model II type fractions",
        checks: &[
            ("model2/type-1 fraction beta", P_LEVEL),
            ("model2/type-1 mean", Z3),
            ("model2/type-2 mean", Z3),
        ],
    },
    Criterion {
        id: 9,
        title: "Model III limit sigma: mean and Laplace transform",
        checks: &[
            ("model3/sigma mean", Z3),
            ("model3/sigma laplace s=0.5", Z3),
            ("model3/sigma laplace s=1", Z3),
            ("model3/sigma laplace s=2", Z3),
        ],
    },
    Criterion {
        id: 10,
        title: "spine decomposition",
        checks: &[
            ("spine/A mean", Z4),
            ("spine/R mean", Z4),
            ("spine/spine vs rejection", P_LEVEL),
            ("spine/conditioned progeny mean", Z4),
        ],
    },
    Criterion {
        id: 11,
        title: "Poisson supremum tail and image point process",
        checks: &[
            ("lemmas/sup exceedance rho=1 a=2", SUP_FREQ),
            ("lemmas/sup exceedance rho=2 a=1", SUP_FREQ),
            ("lemmas/image count dispersion", P_LEVEL),
            ("lemmas/image count mean", Z4),
        ],
    },
];

fn run(workers: usize) -> (Vec<TestReport>, String) {
    let mut cfg = RunConfig::default();
    cfg.run.seed = SEED;
    cfg.run.workers = Some(workers);
    let reports = cmd_validate(&cfg, Suite::All).expect("suite runs");
    let json = reports_json(&reports).expect("serializes");
    (reports, json)
}

fn judge(c: &Criterion, reports: &[TestReport]) -> Result<(), String> {
    let mut problems = Vec::new();
    for (name, level) in c.checks {
        match reports.iter().find(|r| r.name == *name) {
            None => problems.push(format!("missing check '{name}'")),
            Some(r) if r.level != *level => problems.push(format!(
                "'{name}' ran at level {} instead of {level}",
                r.level
            )),
            Some(r) if !r.passed => problems.push(format!(
                "'{name}' failed: statistic {}, p {}, n {}",
                r.statistic, r.p_value, r.n
            )),
            Some(_) => {}
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(problems.join("; "))
    }
}

fn line(id: u32, title: &str, outcome: &Result<(), String>) {
    match outcome {
        Ok(()) => println!("criterion {id:>2} PASS  {title}"),
        Err(why) => println!("criterion {id:>2} FAIL  {title}: {why}"),
    }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let (reports, first) = run(8);
    let (_, second) = run(8);
    let (_, single) = run(1);

    let mut failed = 0;
    for c in CRITERIA {
        let outcome = judge(c, &reports);
        failed += usize::from(outcome.is_err());
        line(c.id, c.title, &outcome);
    }
    let determinism = if first != second {
        Err("two runs with seed 42 differ".to_string())
    } else if first != single {
        Err("1 and 8 workers differ".to_string())
    } else {
        Ok(())
    };
    failed += usize::from(determinism.is_err());
    line(
        12,
        "byte-identical reports across runs and worker counts",
        &determinism,
    );

    let total = reports.len();
    let passed = reports.iter().filter(|r| r.passed).count();
    println!(
        "{passed}/{total} checks passed, {failed} criteria failed, {:.1}s",
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
