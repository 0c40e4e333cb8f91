//! Single runs, parameter sweeps and the σ-continuation study.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{classify, envelope_fraction, lojasiewicz_constant, FitReport, Regime};
use crate::error::{Error, Result};
use crate::functionals::h1_distance;
use crate::harness::config::{make_initial_data, ExperimentConfig, RheologyKind};
use crate::harness::output::{write_json, write_snapshot_csv, write_trajectory_csv};
use crate::model::Rheology;
use crate::spatial::FilmState;
use crate::timestep::{integrate, Termination, Trajectory};

pub const SOFTWARE: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
/// Largest relative mass drift a run may show.
pub const MASS_TOLERANCE: f64 = 1e-10;
/// Allowed energy increase between samples, in units of `rel_tol · E₀`.
pub const ENERGY_SLACK: f64 = 10.0;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub software: String,
    pub config: ExperimentConfig,
    pub rheology: String,
    pub seed: u64,
    pub termination: Termination,
    pub t_star: Option<f64>,
    pub t_final: f64,
    pub accepted_steps: u64,
    pub rejected_steps: u64,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub initial_h1_distance: f64,
    /// Whether the film stayed in `[ū₀/2, 2ū₀]` initially and at every step.
    pub in_corridor: bool,
    pub mass_drift: f64,
    /// Largest sampled energy increase, relative to `E₀`.
    pub max_energy_increase: f64,
    /// `|E(T) - E₀ + ∫D dt| / E₀`.
    pub energy_identity_residual: f64,
    #[serde(flatten)]
    pub fit: FitReport,
    pub assertions: Vec<Assertion>,
    pub failures: Vec<String>,
    pub passed: bool,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.termination.is_numerical_failure() {
            EXIT_NUMERICAL
        } else if self.passed {
            EXIT_OK
        } else {
            EXIT_ASSERTION
        }
    }
}

pub struct RunOutcome {
    pub summary: RunSummary,
    pub trajectory: Trajectory,
}

/// Integrates, classifies and checks the hard assertions, without touching disk.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let rheo = cfg.rheology()?;
    let reg = cfg.regularisation()?;
    let init = make_initial_data(cfg)?;
    let mut icfg = cfg.integrator.clone();
    icfg.snapshots = icfg.snapshots.max(cfg.output.snapshots);
    let traj = integrate(&init.state, &rheo, reg, &icfg)?;
    let fit = classify(&traj, &rheo);

    let e0 = traj.initial().energy;
    let rel = |v: f64| if e0 > 0.0 { v / e0 } else { v };
    let mass_drift = traj.mass_drift();
    let increase = traj.max_energy_increase();
    let mut assertions = vec![
        Assertion {
            name: "mass_conservation".into(),
            passed: mass_drift <= MASS_TOLERANCE,
            detail: format!("relative drift {mass_drift:.3e} (limit {MASS_TOLERANCE:e})"),
        },
        Assertion {
            name: "energy_monotonicity".into(),
            passed: increase <= ENERGY_SLACK * icfg.rel_tol * e0,
            detail: format!(
                "largest increase {:.3e} E0 (limit {:.1e} E0)",
                rel(increase),
                ENERGY_SLACK * icfg.rel_tol
            ),
        },
    ];
    if let Rheology::PowerLaw { alpha } = rheo {
        if alpha.value() > 1.0 {
            let fraction = fit.envelope_fraction.or_else(|| {
                lojasiewicz_constant(&traj, alpha)
                    .ok()
                    .map(|c| envelope_fraction(&traj, alpha, c))
            });
            assertions.push(match fraction {
                Some(f) => Assertion {
                    name: "polynomial_envelope".into(),
                    passed: f == 1.0,
                    detail: format!("fraction of samples under the envelope {f}"),
                },
                None => Assertion {
                    name: "polynomial_envelope".into(),
                    passed: false,
                    detail: "envelope constant could not be computed".into(),
                },
            });
        }
    }
    let failures: Vec<String> = assertions
        .iter()
        .filter(|a| !a.passed)
        .map(|a| a.name.clone())
        .collect();
    let passed = failures.is_empty() && !traj.termination.is_numerical_failure();

    let summary = RunSummary {
        software: SOFTWARE.to_string(),
        config: cfg.clone(),
        rheology: rheo.name().to_string(),
        seed: cfg.initial.seed,
        termination: traj.termination,
        t_star: traj.termination.extinction_time(),
        t_final: traj.last().t,
        accepted_steps: traj.accepted_steps,
        rejected_steps: traj.rejected_steps,
        initial_energy: e0,
        final_energy: traj.last().energy,
        initial_h1_distance: init.h1_distance,
        in_corridor: init.in_corridor && traj.stays_in_corridor(cfg.initial.mean),
        mass_drift,
        max_energy_increase: rel(increase),
        energy_identity_residual: rel(traj.energy_identity_residual()),
        fit,
        assertions,
        failures,
        passed,
    };
    Ok(RunOutcome {
        summary,
        trajectory: traj,
    })
}

/// Writes `trajectory.csv`, `summary.json` and any snapshots under `dir`.
pub fn write_artifacts(dir: &Path, outcome: &RunOutcome) -> Result<()> {
    write_trajectory_csv(&dir.join("trajectory.csv"), &outcome.trajectory.samples)?;
    let snaps = &outcome.trajectory.snapshots;
    if !snaps.is_empty() {
        let sdir = dir.join("snapshots");
        let mut index = String::from("index,t\n");
        for (k, snap) in snaps.iter().enumerate() {
            write_snapshot_csv(&sdir.join(format!("snapshot_{k:04}.csv")), &snap.state)?;
            index.push_str(&format!("{k},{:.16e}\n", snap.t));
        }
        crate::harness::output::write_atomic(&sdir.join("index.csv"), index.as_bytes())?;
    }
    write_json(&dir.join("summary.json"), &outcome.summary)
}

/// Runs `cfg` and writes its artifacts to `cfg.output.dir`.
pub fn run(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let outcome = run_experiment(cfg)?;
    write_artifacts(&cfg.output.dir, &outcome)?;
    Ok(outcome.summary)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Alpha,
    Epsilon,
    NCells,
    Sigma,
}

impl std::str::FromStr for SweepParameter {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alpha" => Ok(SweepParameter::Alpha),
            "epsilon" => Ok(SweepParameter::Epsilon),
            "n_cells" => Ok(SweepParameter::NCells),
            "sigma" => Ok(SweepParameter::Sigma),
            other => Err(Error::Config(format!(
                "unknown sweep parameter {other:?}; expected alpha, epsilon, n_cells or sigma"
            ))),
        }
    }
}

impl SweepParameter {
    fn name(self) -> &'static str {
        match self {
            SweepParameter::Alpha => "alpha",
            SweepParameter::Epsilon => "epsilon",
            SweepParameter::NCells => "n_cells",
            SweepParameter::Sigma => "sigma",
        }
    }

    /// `base` with this parameter set to `value`. Sweeping α on a Newtonian
    /// config switches it to the power law.
    pub fn apply(self, base: &ExperimentConfig, value: f64) -> Result<ExperimentConfig> {
        let mut cfg = base.clone();
        match self {
            SweepParameter::Alpha => {
                cfg.rheology.alpha = value;
                if cfg.rheology.kind == RheologyKind::Newtonian {
                    cfg.rheology.kind = RheologyKind::PowerLaw;
                }
            }
            SweepParameter::Epsilon => cfg.initial.epsilon = value,
            SweepParameter::NCells => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::Config(format!("n_cells must be a positive integer, got {value}")));
                }
                cfg.grid.n_cells = value as usize;
            }
            SweepParameter::Sigma => cfg.rheology.sigma = value,
        }
        cfg.output.dir = base.output.dir.join(format!("{}={value}", self.name()));
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub parameter: SweepParameter,
    pub value: f64,
    /// `ok`, `assertion_failed`, `numerical_failure` or `error`.
    pub status: String,
    pub regime: Option<Regime>,
    pub fitted_exponent_or_rate: Option<f64>,
    pub theoretical_value: Option<f64>,
    pub relative_gap: Option<f64>,
    pub r_squared: Option<f64>,
    /// `-2/(α-1)` on α-sweeps with `α > 1`.
    pub theoretical_exponent: Option<f64>,
    pub t_star: Option<f64>,
    pub lojasiewicz_c: Option<f64>,
    pub in_corridor: Option<bool>,
    pub mass_drift: Option<f64>,
    pub message: String,
}

/// Independent runs of `base` with `parameter` set to each value, executed
/// in parallel. A failing run marks its row and the sweep carries on. With
/// `write` set, each run's artifacts go to `<dir>/<param>=<value>/`.
pub fn sweep(base: &ExperimentConfig, parameter: SweepParameter, values: &[f64], write: bool) -> Vec<SweepRow> {
    values
        .par_iter()
        .map(|&value| {
            let mut row = SweepRow {
                parameter,
                value,
                status: "error".into(),
                regime: None,
                fitted_exponent_or_rate: None,
                theoretical_value: None,
                relative_gap: None,
                r_squared: None,
                theoretical_exponent: None,
                t_star: None,
                lojasiewicz_c: None,
                in_corridor: None,
                mass_drift: None,
                message: String::new(),
            };
            if parameter == SweepParameter::Alpha && value > 1.0 {
                row.theoretical_exponent = Some(-2.0 / (value - 1.0));
            }
            let outcome = parameter.apply(base, value).and_then(|cfg| {
                let outcome = run_experiment(&cfg)?;
                if write {
                    write_artifacts(&cfg.output.dir, &outcome)?;
                }
                Ok(outcome)
            });
            match outcome {
                Ok(o) => {
                    let s = &o.summary;
                    row.status = match s.exit_code() {
                        EXIT_OK => "ok",
                        EXIT_NUMERICAL => "numerical_failure",
                        _ => "assertion_failed",
                    }
                    .into();
                    row.regime = Some(s.fit.regime);
                    row.fitted_exponent_or_rate = Some(s.fit.fitted_exponent_or_rate);
                    row.theoretical_value = Some(s.fit.theoretical_value);
                    row.relative_gap = Some(s.fit.relative_gap);
                    row.r_squared = Some(s.fit.r_squared);
                    row.t_star = s.t_star;
                    row.lojasiewicz_c = Some(s.fit.lojasiewicz_c);
                    row.in_corridor = Some(s.in_corridor);
                    row.mass_drift = Some(s.mass_drift);
                    row.message = s.failures.join(";");
                    if !s.in_corridor {
                        if !row.message.is_empty() {
                            row.message.push(';');
                        }
                        row.message.push_str("corridor_exit");
                    }
                }
                Err(e) => row.message = e.to_string(),
            }
            row
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let enc = |e: csv::Error| Error::Config(format!("csv encoding failed: {e}"));
    w.write_record([
        "parameter",
        "value",
        "status",
        "regime",
        "fitted",
        "theoretical",
        "relative_gap",
        "r_squared",
        "theoretical_exponent",
        "t_star",
        "lojasiewicz_c",
        "in_corridor",
        "mass_drift",
        "message",
    ])
    .map_err(enc)?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.parameter.name().to_string(),
            format!("{}", r.value),
            r.status.clone(),
            r.regime.map(|g| format!("{g:?}")).unwrap_or_default(),
            opt(r.fitted_exponent_or_rate),
            opt(r.theoretical_value),
            opt(r.relative_gap),
            opt(r.r_squared),
            opt(r.theoretical_exponent),
            opt(r.t_star),
            opt(r.lojasiewicz_c),
            r.in_corridor.map(|b| b.to_string()).unwrap_or_default(),
            opt(r.mass_drift),
            r.message.clone(),
        ])
        .map_err(enc)?;
    }
    w.into_inner()
        .map_err(|e| Error::Config(format!("csv encoding failed: {e}")))
}

/// Distances below this multiple of the film height count as round-off.
pub const ROUND_OFF: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaStudy {
    pub alpha: f64,
    pub sigmas: Vec<f64>,
    pub t_end: f64,
    pub terminations: Vec<Termination>,
    pub final_energies: Vec<f64>,
    /// `‖u^{σ_j}(T) - u^{σ_{j+1}}(T)‖_{H¹}` for consecutive σ.
    pub distances: Vec<f64>,
    pub decreasing: bool,
    /// All final states equal to round-off (expected at `α = 1`).
    pub identical: bool,
    pub warning: Option<String>,
}

/// Runs the same initial data at each σ (in parallel) and compares the final
/// states of consecutive runs.
pub fn sigma_study(cfg: &ExperimentConfig, sigmas: &[f64]) -> Result<SigmaStudy> {
    if cfg.rheology.kind != RheologyKind::PowerLaw {
        return Err(Error::Config("sigma study needs power-law rheology".into()));
    }
    if sigmas.len() < 3 {
        return Err(Error::Config(format!("sigma study needs at least 3 values, got {}", sigmas.len())));
    }
    if sigmas.windows(2).any(|p| p[1] >= p[0]) {
        return Err(Error::Config("sigmas must be strictly decreasing".into()));
    }
    let runs: Vec<Result<(Termination, f64, FilmState)>> = sigmas
        .par_iter()
        .map(|&sigma| {
            let mut c = cfg.clone();
            c.rheology.sigma = sigma;
            c.validate()?;
            let init = make_initial_data(&c)?;
            let traj = integrate(&init.state, &c.rheology()?, c.regularisation()?, &c.integrator)?;
            Ok((traj.termination, traj.last().energy, traj.final_state))
        })
        .collect();
    let runs: Vec<(Termination, f64, FilmState)> = runs.into_iter().collect::<Result<_>>()?;
    let distances: Vec<f64> = runs
        .windows(2)
        .map(|p| h1_distance(&p[0].2, &p[1].2))
        .collect::<Result<_>>()?;
    let decreasing = distances.windows(2).all(|p| p[1] < p[0]);
    let size = runs[0].2.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let identical = distances.iter().all(|&d| d <= ROUND_OFF * size);
    let mut warning = None;
    if !decreasing && !identical {
        warning = Some(format!("pairwise distances are not decreasing: {distances:?}"));
    }
    if let Some((s, _)) = sigmas
        .iter()
        .zip(&runs)
        .find(|(_, r)| r.0 != Termination::ReachedTEnd)
    {
        let note = format!("run at sigma = {s} stopped early");
        warning = Some(match warning {
            Some(w) => format!("{w}; {note}"),
            None => note,
        });
    }
    Ok(SigmaStudy {
        alpha: cfg.rheology.alpha,
        sigmas: sigmas.to_vec(),
        t_end: cfg.integrator.t_end,
        terminations: runs.iter().map(|r| r.0).collect(),
        final_energies: runs.iter().map(|r| r.1).collect(),
        distances,
        decreasing,
        identical,
        warning,
    })
}
