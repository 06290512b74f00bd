use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::config::{fmt_f64, OdeSetup, Resolved, RpSetup, SweepMode};
use super::HarnessError;
use crate::eos::PrimitiveState;
use crate::fv::{run_riemann_problem, write_snapshot_csv, RiemannRun};
use crate::reference::{observed_order, rkgl3_integrate, OrderFit};
use crate::relax::{integrate, integrate_fixed, SolverConfig, TrajectoryPoint};

const COMPONENTS: [&str; 5] = ["u1", "u2", "p1", "p2", "alpha1"];

/// Summary of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub label: String,
    pub accepted: usize,
    pub rejected: usize,
    pub iteration_histogram: Vec<usize>,
    pub wall_time: Duration,
    pub final_state: Option<PrimitiveState>,
    /// Componentwise relative error against the reference solver at `t_end`.
    pub oracle_error: Option<[f64; 5]>,
}

impl RunReport {
    pub fn max_oracle_error(&self) -> Option<f64> {
        self.oracle_error.map(|e| e.into_iter().fold(0.0, f64::max))
    }

    fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "run: {}", self.label);
        let _ = writeln!(s, "accepted_steps: {}", self.accepted);
        let _ = writeln!(s, "rejected_steps: {}", self.rejected);
        let hist: Vec<String> = self
            .iteration_histogram
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(k, c)| format!("{k}:{c}"))
            .collect();
        let _ = writeln!(s, "iterations_histogram: {}", hist.join(" "));
        let _ = writeln!(s, "wall_time_s: {:.3}", self.wall_time.as_secs_f64());
        if let Some(v) = self.final_state {
            for (name, x) in COMPONENTS.iter().zip(v.to_array()) {
                let _ = writeln!(s, "final_{name}: {x:.16e}");
            }
        }
        if let Some(e) = self.oracle_error {
            for (name, x) in COMPONENTS.iter().zip(e) {
                let _ = writeln!(s, "oracle_rel_error_{name}: {x:.3e}");
            }
        }
        s
    }
}

/// `|a − b|` relative to the reference, with velocities and pressures scaled
/// by the larger member of their pair so a component crossing zero does not
/// blow up the ratio.
pub fn relative_errors(a: &PrimitiveState, reference: &PrimitiveState) -> [f64; 5] {
    let (x, y) = (a.to_array(), reference.to_array());
    let u = y[0].abs().max(y[1].abs());
    let p = y[2].abs().max(y[3].abs());
    let scale = [u, u, p, p, y[4].abs()];
    std::array::from_fn(|i| {
        let d = (x[i] - y[i]).abs();
        if scale[i] > 0.0 {
            d / scale[i]
        } else {
            d
        }
    })
}

/// Writes the echoed configuration to `resolved.cfg`.
pub fn write_resolved(resolved: &Resolved, out_dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("resolved.cfg"), resolved.echo())?;
    Ok(())
}

fn write_trajectory(path: &Path, points: &[TrajectoryPoint]) -> Result<(), HarnessError> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "t,u1,u2,p1,p2,alpha1,dt,iterations")?;
    for p in points {
        let v = p.state;
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            p.t, v.u1, v.u2, v.p1, v.p2, v.alpha1, p.dt, p.iterations
        )?;
    }
    out.flush()?;
    Ok(())
}

const ODE_PLOT: &str = r#"# Plots trajectory.csv (and reference.csv when present).
import csv
import sys
import matplotlib.pyplot as plt

def load(name):
    with open(name) as f:
        rows = list(csv.DictReader(f))
    return {k: [float(r[k]) for r in rows] for k in rows[0]}

run = load("trajectory.csv")
try:
    ref = load("reference.csv")
except FileNotFoundError:
    ref = None
fig, axes = plt.subplots(1, 3, figsize=(14, 4))
for ax, keys in zip(axes, [("u1", "u2"), ("p1", "p2"), ("alpha1",)]):
    for k in keys:
        if ref:
            ax.plot(ref["t"], ref[k], "-", label=k + " reference")
        ax.plot(run["t"], run[k], "o", label=k)
    ax.set_xlabel("t")
    ax.legend()
fig.tight_layout()
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else "trajectory.png")
"#;

const CONVERGENCE_PLOT: &str = r#"# Log-log plot of convergence.csv.
import csv
import sys
import matplotlib.pyplot as plt

with open("convergence.csv") as f:
    rows = list(csv.DictReader(f))
h = [float(r["step"]) for r in rows]
for k in ("err_p1", "err_alpha1"):
    plt.loglog(h, [float(r[k]) for r in rows], "o", label=k)
plt.xlabel("step size")
plt.ylabel("relative error at t_end")
plt.legend()
plt.savefig(sys.argv[1] if len(sys.argv) > 1 else "convergence.png")
"#;

const RP_PLOT: &str = r#"# Plots the final profile of every run listed in runs.csv.
import csv
import sys
import matplotlib.pyplot as plt

with open("runs.csv") as f:
    runs = list(csv.DictReader(f))
fig, axes = plt.subplots(2, 2, figsize=(12, 8))
for run in runs:
    with open(run["final_profile"]) as f:
        rows = list(csv.DictReader(f))
    x = [float(r["x"]) for r in rows]
    label = "nu=" + run["nu"]
    for ax, k in zip(axes.flat, ("alpha1", "p_mix", "u1", "rho1")):
        ax.plot(x, [float(r[k]) for r in rows], label=label)
        ax.set_title(k)
for ax in axes.flat:
    ax.legend()
fig.tight_layout()
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else "profiles.png")
"#;

/// Adaptive relaxation run, optionally checked against the reference solver.
/// Writes `trajectory.csv`, `reference.csv` with the oracle, `summary.txt`
/// and `plot.py` when `out_dir` is given.
pub fn run_ode(setup: &OdeSetup, label: &str, out_dir: Option<&Path>) -> Result<RunReport, HarnessError> {
    let p = &setup.problem;
    let start = Instant::now();
    let run = integrate(&p.initial, 0.0, p.t_end, &p.params, &setup.solver)?;
    let wall_time = start.elapsed();
    let reference = if setup.oracle {
        Some(rkgl3_integrate(&p.initial, 0.0, p.t_end, &p.params, &setup.oracle_settings)?)
    } else {
        None
    };
    let report = RunReport {
        label: label.to_string(),
        accepted: run.stats.accepted,
        rejected: run.stats.rejected,
        iteration_histogram: run.stats.iteration_histogram.clone(),
        wall_time,
        final_state: Some(run.final_state()),
        oracle_error: reference.as_ref().map(|r| relative_errors(&run.final_state(), &r.final_state())),
    };
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        write_trajectory(&dir.join("trajectory.csv"), &run.trajectory)?;
        if let Some(r) = &reference {
            let points: Vec<TrajectoryPoint> = r
                .points
                .windows(2)
                .map(|w| TrajectoryPoint { t: w[1].t, state: w[1].state, dt: w[1].t - w[0].t, iterations: 0 })
                .collect();
            let mut all = vec![TrajectoryPoint { t: r.points[0].t, state: r.points[0].state, dt: 0.0, iterations: 0 }];
            all.extend(points);
            write_trajectory(&dir.join("reference.csv"), &all)?;
        }
        fs::write(dir.join("summary.txt"), report.render())?;
        fs::write(dir.join("plot.py"), ODE_PLOT)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    /// Uniform step, or `t_end / accepted` in the `delta_max` sweep.
    pub step: f64,
    pub steps: usize,
    /// `delta_max` of the run in the `delta_max` sweep.
    pub delta_max: Option<f64>,
    pub errors: [f64; 5],
    pub unconverged: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// Fits for `u1`, `p1` and `alpha1`.
    pub fit_u1: OrderFit,
    pub fit_p1: OrderFit,
    pub fit_alpha1: OrderFit,
    pub wall_time: Duration,
}

impl ConvergenceReport {
    fn render(&self, label: &str) -> String {
        let mut s = format!("run: {label}\nruns: {}\n", self.rows.len());
        for (name, fit) in [("u1", &self.fit_u1), ("p1", &self.fit_p1), ("alpha1", &self.fit_alpha1)] {
            let _ = writeln!(s, "slope_{name}: {:.4}{}", fit.slope, if fit.degenerate { " (degenerate)" } else { "" });
        }
        let _ = writeln!(s, "p1_error_ratio_per_halving: {:.3}", 2f64.powf(self.fit_p1.slope));
        let _ = writeln!(s, "wall_time_s: {:.3}", self.wall_time.as_secs_f64());
        s
    }
}

/// Error-vs-step study against the reference solver. Runs are independent and
/// are spread over the worker pool.
pub fn run_convergence(setup: &OdeSetup, label: &str, out_dir: Option<&Path>) -> Result<ConvergenceReport, HarnessError> {
    let p = &setup.problem;
    let c = &setup.convergence;
    let start = Instant::now();
    let n = c.n_runs;
    let geometric = |lo: f64, hi: f64, k: usize| lo * (hi / lo).powf(k as f64 / (n - 1) as f64);

    let rows: Vec<Result<ConvergenceRow, HarnessError>> = match c.sweep {
        SweepMode::Dt => {
            let reference = rkgl3_integrate(&p.initial, 0.0, c.t_end, &p.params, &c.reference)?.final_state();
            let cfg = SolverConfig { r_max: c.fixed_r_max, k_max: c.fixed_k_max, ..setup.solver };
            (0..n)
                .into_par_iter()
                .map(|k| {
                    let steps = geometric(c.steps_min as f64, c.steps_max as f64, k).round() as usize;
                    let run = integrate_fixed(&p.initial, 0.0, c.t_end, steps, &p.params, &cfg)?;
                    Ok(ConvergenceRow {
                        step: c.t_end / steps as f64,
                        steps,
                        delta_max: None,
                        errors: relative_errors(&run.final_state(), &reference),
                        unconverged: run.stats.unconverged,
                    })
                })
                .collect()
        }
        SweepMode::DeltaMax => {
            let reference = rkgl3_integrate(&p.initial, 0.0, p.t_end, &p.params, &c.reference)?.final_state();
            (0..n)
                .into_par_iter()
                .map(|k| {
                    let d = geometric(c.delta_range.0, c.delta_range.1, k);
                    let run = integrate(&p.initial, 0.0, p.t_end, &p.params, &setup.solver.with_delta_max(d))?;
                    Ok(ConvergenceRow {
                        step: p.t_end / run.stats.accepted as f64,
                        steps: run.stats.accepted,
                        delta_max: Some(d),
                        errors: relative_errors(&run.final_state(), &reference),
                        unconverged: 0,
                    })
                })
                .collect()
        }
    };
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;

    let noise = 100.0 * c.reference.tol;
    let steps: Vec<f64> = rows.iter().map(|r| r.step).collect();
    let fit = |i: usize| observed_order(&steps, &rows.iter().map(|r| r.errors[i]).collect::<Vec<_>>(), noise);
    let report = ConvergenceReport {
        fit_u1: fit(0),
        fit_p1: fit(2),
        fit_alpha1: fit(4),
        rows,
        wall_time: start.elapsed(),
    };
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        let mut out = BufWriter::new(fs::File::create(dir.join("convergence.csv"))?);
        writeln!(out, "run,step,steps,delta_max,err_u1,err_u2,err_p1,err_p2,err_alpha1,unconverged")?;
        for (k, r) in report.rows.iter().enumerate() {
            let d = r.delta_max.map(fmt_f64).unwrap_or_default();
            let e = r.errors;
            writeln!(
                out,
                "{k},{:.16e},{},{d},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                r.step, r.steps, e[0], e[1], e[2], e[3], e[4], r.unconverged
            )?;
        }
        out.flush()?;
        fs::write(dir.join("summary.txt"), report.render(label))?;
        fs::write(dir.join("plot.py"), CONVERGENCE_PLOT)?;
    }
    Ok(report)
}

/// One Riemann run of a `ν` sweep.
#[derive(Debug, Clone)]
pub struct RpReport {
    pub nu: f64,
    pub run_id: String,
    pub report: RunReport,
    pub run: RiemannRun,
}

/// Runs the Riemann problem once per `ν`, in parallel. Each run writes
/// `<run-id>_t<index>.csv` profiles; `runs.csv` indexes them.
pub fn run_rp(setup: &RpSetup, out_dir: Option<&Path>) -> Result<Vec<RpReport>, HarnessError> {
    let runs: Vec<Result<RpReport, HarnessError>> = setup
        .nus
        .par_iter()
        .enumerate()
        .map(|(k, &nu)| {
            let mut problem = setup.problem.clone();
            problem.physics.nu = nu;
            let run_id = if setup.nus.len() == 1 { problem.name.clone() } else { format!("{}_nu{k}", problem.name) };
            let start = Instant::now();
            let run = run_riemann_problem(&problem, &setup.options)?;
            let report = RunReport {
                label: format!("{run_id} (nu = {})", fmt_f64(nu)),
                accepted: run.steps,
                rejected: run.diagnostics.relax.rejected,
                iteration_histogram: run.diagnostics.relax.iteration_histogram.clone(),
                wall_time: start.elapsed(),
                final_state: None,
                oracle_error: None,
            };
            Ok(RpReport { nu, run_id, report, run })
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>, _>>()?;

    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        let mut index = String::from("run_id,nu,snapshot,t,file\n");
        let mut summary = String::new();
        for r in &runs {
            for (i, snap) in r.run.snapshots.iter().enumerate() {
                let name = format!("{}_t{i}.csv", r.run_id);
                write_snapshot_csv(&dir.join(&name), &r.run.grid, &snap.cells).map_err(HarnessError::from)?;
                let _ = writeln!(index, "{},{},{i},{:.16e},{name}", r.run_id, fmt_f64(r.nu), snap.t);
            }
            summary.push_str(&r.report.render());
            let d = &r.run.diagnostics;
            let _ = writeln!(summary, "cells: {}", r.run.grid.n_cells);
            let _ = writeln!(summary, "max_pressure_gap: {:.3e}", d.max_pressure_gap);
            let _ = writeln!(summary, "final_pressure_gap: {:.3e}", final_pressure_gap(&r.run));
            let _ = writeln!(summary, "fallback_cells: {}", d.fallback_cells);
            let _ = writeln!(summary, "relaxed_cells: {}", d.relaxed_cells);
            let _ = writeln!(summary, "drag_first_cells: {}", d.drag_first_cells);
            let _ = writeln!(summary, "pressure_reset_cells: {}", d.pressure_reset_cells);
            let _ = writeln!(summary, "equilibrium_cells: {}\n", d.equilibrium_cells);
        }
        let mut runs_csv = String::from("run_id,nu,final_profile\n");
        for r in &runs {
            let _ = writeln!(runs_csv, "{},{},{}_t{}.csv", r.run_id, fmt_f64(r.nu), r.run_id, r.run.snapshots.len() - 1);
        }
        fs::write(dir.join("snapshots.csv"), index)?;
        fs::write(dir.join("runs.csv"), runs_csv)?;
        fs::write(dir.join("summary.txt"), summary)?;
        fs::write(dir.join("plot.py"), RP_PLOT)?;
    }
    Ok(runs)
}

/// `max |p1 − p2| / (|p1| + |p2|)` over the final profile.
pub fn final_pressure_gap(run: &RiemannRun) -> f64 {
    run.final_profile()
        .cells
        .iter()
        .map(|w| {
            let den = w.p1.abs() + w.p2.abs();
            if den > 0.0 {
                (w.p1 - w.p2).abs() / den
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}
