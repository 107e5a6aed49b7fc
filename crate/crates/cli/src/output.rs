//! CSV trace and summary emission.
//!
//! Numbers are written in Rust's shortest round-trip representation, so a
//! re-parse reproduces the in-memory values exactly and reruns are
//! byte-stable.

use fes_ilc_sim::{RunReport, Scenario, TrialRecord};
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

pub const TRIAL_HEADER: &str = "t,r_d,r,e,u_fb,u_ff,u_applied,r_dot";
pub const SUMMARY_HEADER: &str = "iteration,rmse_m,nrmse,pd_energy,max_velocity_mps,constraint_bound";

fn trial_csv(trial: &TrialRecord) -> String {
    let mut out = String::with_capacity(trial.t.len() * 64);
    out.push_str(TRIAL_HEADER);
    out.push('\n');
    for k in 0..trial.t.len() {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            trial.t[k],
            trial.r_d[k],
            trial.r[k],
            trial.e[k],
            trial.u_fb[k],
            trial.u_ff[k],
            trial.u_applied[k],
            trial.r_dot[k]
        )
        .expect("write to string");
    }
    out
}

fn summary_csv(report: &RunReport) -> String {
    let mut out = String::new();
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for (k, trial) in report.trials.iter().enumerate() {
        let bound = trial
            .constraint_bound
            .map(|b| b.to_string())
            .unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            k + 1,
            trial.rmse,
            trial.nrmse,
            trial.pd_energy,
            trial.max_velocity,
            bound
        )
        .expect("write to string");
    }
    out
}

fn scenario_name(s: Scenario) -> &'static str {
    match s {
        Scenario::FeedbackOnly => "1 (feedback only)",
        Scenario::FeedbackPlusPilc => "2 (feedback + learning feedforward)",
        Scenario::FullConstrained => "3 (feedback + feedforward + velocity constraint)",
    }
}

fn report_text(report: &RunReport) -> String {
    let cfg = &report.config;
    let mut out = String::new();
    let _ = writeln!(out, "scenario: {}", scenario_name(cfg.scenario));
    let _ = writeln!(out, "iterations: {}", cfg.iterations);
    let _ = writeln!(out, "ts_s: {}", cfg.ts);
    let _ = writeln!(out, "duration_s: {}", cfg.duration);
    let _ = writeln!(out, "learning_gain: {}", cfg.learning_gain);
    let _ = writeln!(out, "psi: {}", cfg.psi);
    let _ = writeln!(out, "q_cutoff_hz: {}", cfg.q_cutoff_hz);
    let _ = writeln!(out, "q_mode: {:?}", cfg.q_mode);
    let _ = writeln!(out, "injection: {:?}", cfg.injection);
    let _ = writeln!(out, "trajectory: ({}, {}) -> ({}, {})", cfg.p1.0, cfg.p1.1, cfg.p2.0, cfg.p2.1);
    let _ = writeln!(out, "profile: {:?}", cfg.profile);
    let _ = writeln!(
        out,
        "plant: 1/({}s^2 + {}s)   muscle wn: {}",
        cfg.plant.inertial_sum, cfg.plant.damping, cfg.muscle.w_n
    );
    let _ = writeln!(
        out,
        "lead: Kp {} Kd {} omega {}",
        cfg.lead.kp, cfg.lead.kd, cfg.lead.omega_lead
    );
    if let Some((rmax, v0)) = report.identified_bound {
        let _ = writeln!(out, "identified velocity bound_mps: {rmax}");
        let _ = writeln!(out, "initial constraint level: {v0}");
        let _ = writeln!(
            out,
            "velocity within bound on every iteration: {}",
            report.velocity_within_bound
        );
    }
    match report.plateau_iteration {
        Some(k) => {
            let _ = writeln!(out, "plateau: iteration {k} (|drmse| < 1e-4 m)");
        }
        None => {
            let _ = writeln!(out, "plateau: not reached within the run");
        }
    }
    let _ = writeln!(out, "iteration  rmse_m     nrmse");
    for (k, trial) in report.trials.iter().enumerate() {
        let _ = writeln!(out, "{:>9}  {:.6}  {:.6}", k + 1, trial.rmse, trial.nrmse);
    }
    out
}

/// Writes `trial_<k>.csv` per iteration, `summary.csv`, and `report.txt`
/// into `dir`, creating it as needed. Returns the written paths.
pub fn emit_outputs(report: &RunReport, dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for (k, trial) in report.trials.iter().enumerate() {
        let path = dir.join(format!("trial_{}.csv", k + 1));
        fs::write(&path, trial_csv(trial))?;
        paths.push(path);
    }
    let summary = dir.join("summary.csv");
    fs::write(&summary, summary_csv(report))?;
    paths.push(summary);
    let txt = dir.join("report.txt");
    fs::write(&txt, report_text(report))?;
    paths.push(txt);
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use fes_ilc_sim::{run_scenario, Scenario, ScenarioConfig};

    fn small_report() -> RunReport {
        let cfg = ScenarioConfig {
            iterations: 2,
            duration: 2.0,
            ..ScenarioConfig::for_scenario(Scenario::FeedbackPlusPilc)
        };
        run_scenario(&cfg).unwrap()
    }

    #[test]
    fn trial_csv_shape() {
        let report = small_report();
        let text = trial_csv(&report.trials[0]);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), TRIAL_HEADER);
        assert_eq!(text.lines().count(), 1 + report.trials[0].t.len());
        assert!(text.ends_with('\n'));
        for line in lines {
            assert_eq!(line.split(',').count(), 8);
        }
    }

    #[test]
    fn csv_round_trips_exact_values() {
        let report = small_report();
        let trial = &report.trials[1];
        let text = trial_csv(trial);
        for (k, line) in text.lines().skip(1).enumerate() {
            let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
            assert_eq!(cols[0].to_bits(), trial.t[k].to_bits());
            assert_eq!(cols[2].to_bits(), trial.r[k].to_bits());
            assert_eq!(cols[4].to_bits(), trial.u_fb[k].to_bits());
            assert_eq!(cols[7].to_bits(), trial.r_dot[k].to_bits());
        }
    }

    #[test]
    fn summary_blank_bound_without_constraint() {
        let report = small_report();
        let text = summary_csv(&report);
        assert_eq!(text.lines().next().unwrap(), SUMMARY_HEADER);
        for line in text.lines().skip(1) {
            assert!(line.ends_with(','), "no constraint bound expected: {line}");
        }
    }
}
