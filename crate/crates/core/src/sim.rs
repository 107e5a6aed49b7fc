//! Fixed-step trial execution, trial-to-trial learning across iterations,
//! the three experiment scenarios, and tracking metrics.

use crate::control::{
    build_phase_lead, dilc_update, ilc_update, ConstraintState, FesConfig, IlcMemory,
    PhaseLeadConfig, QMode,
};
use crate::error::{Result, SimError};
use crate::kinematics::{
    differentiate, line_trajectory, resultant_velocity, ArmKinematics, TaskTrajectory,
    TimeProfile, VelocityProfile,
};
use crate::lti::{discretize_tustin, discretize_zoh, to_state_space, DiscreteSystem};
use crate::plant::{build_muscle_linear, build_plant, ArmParams, MuscleParams, PlantCoefficients};

/// The three control configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Phase-lead feedback alone.
    FeedbackOnly,
    /// Feedback plus learning feedforward.
    FeedbackPlusPilc,
    /// Feedback, learning feedforward, and the velocity-constraint
    /// controller.
    FullConstrained,
}

/// Where the learned feedforward enters the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InjectionPoint {
    /// Added to the error at the compensator input (shifts the effective
    /// reference). The iteration-domain contraction is then `|1 − L·T|`,
    /// which is what the published per-gain convergence rates show.
    ReferenceShift,
    /// Added to the compensator output (summed into the stimulation
    /// command).
    Serial,
}

/// How the plant-specific velocity bound is identified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VelocityIdentification {
    /// Hold the feedback controller's task-scale command into the
    /// muscle-plant chain with the loop open and take the peak
    /// displacement rate. The type-1 plant settles at its velocity
    /// constant times the command, the largest rate the task-scale
    /// stimulation can produce.
    OpenLoop,
    /// Peak resultant velocity of one closed-loop feedback-only trial on
    /// the configured task.
    ClosedLoop,
}

/// Declarative description of a multi-iteration experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub iterations: usize,
    /// sample period, s
    pub ts: f64,
    /// trial duration, s
    pub duration: f64,
    /// proportional learning gain
    pub learning_gain: f64,
    /// constraint learning rate
    pub psi: f64,
    /// initial constraint level as a fraction of the baseline command
    /// energy
    pub v0_scale: f64,
    /// learning-filter cutoff, Hz
    pub q_cutoff_hz: f64,
    pub q_mode: QMode,
    pub injection: InjectionPoint,
    pub velocity_id: VelocityIdentification,
    /// task-line endpoints, m
    pub p1: (f64, f64),
    pub p2: (f64, f64),
    pub profile: TimeProfile,
    pub plant: PlantCoefficients,
    pub muscle: MuscleParams,
    pub lead: PhaseLeadConfig,
    pub arm: ArmParams,
    pub fes: FesConfig,
    /// lower velocity bound, m/s
    pub r_dot_min: f64,
    /// include the stationary first sample in the lower-bound check
    pub strict_first_sample: bool,
    /// skip identification and use these (r_dot_max, V0) values directly
    pub bound_override: Option<(f64, f64)>,
    /// restrict the learning gain to the published [0.1, 1] range
    pub paper_faithful: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::FeedbackOnly,
            iterations: 10,
            ts: 0.05,
            duration: 10.0,
            learning_gain: 0.1,
            psi: 5e-4,
            v0_scale: 0.42,
            q_cutoff_hz: 0.40,
            q_mode: QMode::ZeroPhase,
            injection: InjectionPoint::ReferenceShift,
            velocity_id: VelocityIdentification::OpenLoop,
            p1: (0.0, 0.0),
            p2: (0.2, 0.2),
            profile: TimeProfile::Ramp,
            plant: PlantCoefficients::default(),
            muscle: MuscleParams::default(),
            lead: PhaseLeadConfig::default(),
            arm: ArmParams::default(),
            fes: FesConfig::default(),
            r_dot_min: 0.0,
            strict_first_sample: false,
            bound_override: None,
            paper_faithful: true,
        }
    }
}

impl ScenarioConfig {
    /// Default iteration counts per scenario: 10 feedback-only trials,
    /// 16 learning trials, 13 constrained trials.
    pub fn for_scenario(scenario: Scenario) -> Self {
        let iterations = match scenario {
            Scenario::FeedbackOnly => 10,
            Scenario::FeedbackPlusPilc => 16,
            Scenario::FullConstrained => 13,
        };
        Self {
            scenario,
            iterations,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(SimError::InvalidConfig("iterations must be >= 1".into()));
        }
        if self.ts <= 0.0 {
            return Err(SimError::InvalidSamplePeriod(self.ts));
        }
        let steps = self.duration / self.ts;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return Err(SimError::NonIntegralHorizon {
                duration: self.duration,
                ts: self.ts,
            });
        }
        if self.paper_faithful && !(0.1..=1.0).contains(&self.learning_gain) {
            return Err(SimError::OutOfRange {
                what: "learning gain",
                value: self.learning_gain,
                range: "[0.1, 1] in paper-faithful mode",
            });
        }
        if self.learning_gain <= 0.0 {
            return Err(SimError::OutOfRange {
                what: "learning gain",
                value: self.learning_gain,
                range: "(0, inf)",
            });
        }
        self.plant.validate()?;
        self.muscle.validate()?;
        self.lead.validate()?;
        self.arm.validate()?;
        self.fes.validate()?;
        Ok(())
    }

    pub fn samples(&self) -> usize {
        (self.duration / self.ts).round() as usize + 1
    }

    pub fn trajectory(&self) -> Result<TaskTrajectory> {
        line_trajectory(self.p1, self.p2, self.duration, self.ts, self.profile)
    }

    pub fn kinematics(&self) -> ArmKinematics {
        ArmKinematics::for_task(self.p1, self.p2, &self.arm)
    }
}

/// Per-sample time series and per-trial metrics of one executed trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub t: Vec<f64>,
    /// reference displacement, m
    pub r_d: Vec<f64>,
    /// achieved displacement, m
    pub r: Vec<f64>,
    /// tracking error, m
    pub e: Vec<f64>,
    /// elbow angle, rad
    pub theta_f: Vec<f64>,
    /// feedback compensator output
    pub u_fb: Vec<f64>,
    /// learned feedforward
    pub u_ff: Vec<f64>,
    /// stimulation command after any saturation
    pub u_applied: Vec<f64>,
    /// resultant end-effector speed, m/s
    pub r_dot: Vec<f64>,
    pub rmse: f64,
    pub nrmse: f64,
    /// energy statistic of the pre-saturation command
    pub pd_energy: f64,
    pub max_velocity: f64,
    pub constraint_bound: Option<f64>,
}

impl TrialRecord {
    /// Energy statistic of the post-saturation command.
    pub fn constrained_energy(&self, ts: f64) -> f64 {
        signal_energy(&self.u_applied, ts)
    }
}

/// Report of a full multi-iteration run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub config: ScenarioConfig,
    pub trials: Vec<TrialRecord>,
    /// first 1-based iteration whose rmse changed from the previous one by
    /// less than 1e-4 m
    pub plateau_iteration: Option<usize>,
    /// identified (r_dot_max, V0) when the constraint controller ran
    pub identified_bound: Option<(f64, f64)>,
    /// every trial respected the velocity bound (vacuously true without a
    /// constraint)
    pub velocity_within_bound: bool,
}

impl RunReport {
    pub fn rmse_series(&self) -> Vec<f64> {
        self.trials.iter().map(|t| t.rmse).collect()
    }
}

/// Root-mean-square error `√(Σ(x_d − x_i)²/n)`.
pub fn rmse(desired: &[f64], actual: &[f64]) -> Result<f64> {
    if desired.len() != actual.len() {
        return Err(SimError::LengthMismatch {
            a: desired.len(),
            b: actual.len(),
        });
    }
    if desired.is_empty() {
        return Err(SimError::LengthMismatch { a: 0, b: 0 });
    }
    let sum: f64 = desired
        .iter()
        .zip(actual.iter())
        .map(|(&d, &a)| (d - a) * (d - a))
        .sum();
    Ok((sum / desired.len() as f64).sqrt())
}

/// RMSE normalized by the range of the desired series.
pub fn nrmse(desired: &[f64], actual: &[f64]) -> Result<f64> {
    let r = rmse(desired, actual)?;
    let max = desired.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = desired.iter().copied().fold(f64::INFINITY, f64::min);
    let range = max - min;
    if range <= 0.0 {
        return Err(SimError::ZeroRange);
    }
    Ok(r / range)
}

/// L2 time-energy statistic `√(Ts·Σu²)` of a command signal. This is the
/// RMS level scaled by the square root of the horizon, the scale the
/// constraint bookkeeping is calibrated in.
pub fn signal_energy(signal: &[f64], ts: f64) -> f64 {
    (signal.iter().map(|&u| u * u).sum::<f64>() * ts).sqrt()
}

struct LoopBlocks {
    lead: DiscreteSystem,
    muscle: DiscreteSystem,
    plant: DiscreteSystem,
}

fn build_blocks(cfg: &ScenarioConfig) -> Result<LoopBlocks> {
    Ok(LoopBlocks {
        lead: discretize_tustin(&to_state_space(&build_phase_lead(&cfg.lead)?)?, cfg.ts)?,
        muscle: discretize_zoh(&to_state_space(&build_muscle_linear(&cfg.muscle))?, cfg.ts)?,
        plant: discretize_zoh(&to_state_space(&build_plant(&cfg.plant))?, cfg.ts)?,
    })
}

/// Executes one fixed-step trial of the loop. All block states start at
/// zero, the standing trial-reset assumption of trial-to-trial learning.
pub fn run_trial(
    cfg: &ScenarioConfig,
    ilc: Option<&IlcMemory>,
    cs: Option<&ConstraintState>,
) -> Result<TrialRecord> {
    cfg.validate()?;
    let traj = cfg.trajectory()?;
    let kin = cfg.kinematics();
    let blocks = build_blocks(cfg)?;
    let n = traj.samples.len();

    if let Some(mem) = ilc {
        if mem.feedforward.len() != n {
            return Err(SimError::LengthMismatch {
                a: mem.feedforward.len(),
                b: n,
            });
        }
    }
    if let Some(state) = cs {
        if state.v.len() != n {
            return Err(SimError::LengthMismatch {
                a: state.v.len(),
                b: n,
            });
        }
    }
    let bound = cs.map(|state| state.bound().max(0.0));

    let mut x_lead = blocks.lead.zero_state();
    let mut x_mus = blocks.muscle.zero_state();
    let mut x_pl = blocks.plant.zero_state();

    let mut t = Vec::with_capacity(n);
    let mut r_d = Vec::with_capacity(n);
    let mut r = Vec::with_capacity(n);
    let mut e = Vec::with_capacity(n);
    let mut theta_f = Vec::with_capacity(n);
    let mut u_fb = Vec::with_capacity(n);
    let mut u_ff = Vec::with_capacity(n);
    let mut u_pd = Vec::with_capacity(n);
    let mut u_applied = Vec::with_capacity(n);

    for (k, sample) in traj.samples.iter().enumerate() {
        let y = blocks.plant.output(&x_pl, 0.0);
        let err = sample.r_d - y;
        let ff = ilc.map(|m| m.feedforward[k]).unwrap_or(0.0);
        let (lead_in, ff_out) = match cfg.injection {
            InjectionPoint::ReferenceShift => (err + ff, 0.0),
            InjectionPoint::Serial => (err, ff),
        };
        let fb = blocks.lead.step(&mut x_lead, lead_in);
        let pd = fb + ff_out;
        let applied = match bound {
            Some(b) => pd.signum() * pd.abs().min(b),
            None => pd,
        };
        if !y.is_finite() || !fb.is_finite() || !applied.is_finite() {
            return Err(SimError::NonFinite {
                sample: k,
                context: "trial loop",
            });
        }
        let torque = blocks.muscle.step(&mut x_mus, applied);
        blocks.plant.advance(&mut x_pl, torque);

        let (_, tf_angle) = kin.joints_at_displacement(y)?;
        t.push(sample.t);
        r_d.push(sample.r_d);
        r.push(y);
        e.push(err);
        theta_f.push(tf_angle);
        u_fb.push(fb);
        u_ff.push(ff);
        u_pd.push(pd);
        u_applied.push(applied);
    }

    let velocity = resultant_velocity(&kin, &theta_f, cfg.ts)?;
    let r_dot = velocity.values();
    let trial_rmse = rmse(&r_d, &r)?;
    let trial_nrmse = if traj.magnitude() > 0.0 {
        nrmse(&r_d, &r)?
    } else {
        0.0
    };
    Ok(TrialRecord {
        t,
        r_d,
        r,
        e,
        theta_f,
        u_fb,
        u_ff,
        u_applied,
        r_dot,
        rmse: trial_rmse,
        nrmse: trial_nrmse,
        pd_energy: signal_energy(&u_pd, cfg.ts),
        max_velocity: velocity.max(),
        constraint_bound: bound,
    })
}

/// Identifies the plant-specific velocity bound and the baseline command
/// energy. The velocity comes from the configured identification mode; the
/// energy statistic always comes from one closed-loop feedback-only trial
/// on the configured task (the unconstrained baseline the constraint level
/// is anchored to).
pub fn identify_velocity_bound(cfg: &ScenarioConfig) -> Result<(f64, f64)> {
    cfg.validate()?;
    let baseline_cfg = ScenarioConfig {
        scenario: Scenario::FeedbackOnly,
        ..cfg.clone()
    };
    let baseline = run_trial(&baseline_cfg, None, None)?;
    let energy = baseline.pd_energy;
    let r_dot_max = match cfg.velocity_id {
        VelocityIdentification::ClosedLoop => baseline.max_velocity,
        VelocityIdentification::OpenLoop => {
            let traj = cfg.trajectory()?;
            let magnitude = traj.magnitude();
            let blocks = build_blocks(cfg)?;
            let mut x_lead = blocks.lead.zero_state();
            let mut x_mus = blocks.muscle.zero_state();
            let mut x_pl = blocks.plant.zero_state();
            let n = traj.samples.len();
            let mut y = Vec::with_capacity(n);
            for k in 0..n {
                let out = blocks.plant.output(&x_pl, 0.0);
                if !out.is_finite() {
                    return Err(SimError::NonFinite {
                        sample: k,
                        context: "velocity identification",
                    });
                }
                y.push(out);
                let command = blocks.lead.step(&mut x_lead, magnitude);
                let torque = blocks.muscle.step(&mut x_mus, command);
                blocks.plant.advance(&mut x_pl, torque);
            }
            differentiate(&y, cfg.ts)
                .iter()
                .map(|v| v.abs())
                .fold(0.0, f64::max)
        }
    };
    Ok((r_dot_max, energy))
}

/// Runs a full scenario: repeated trials with the learning and constraint
/// memories advanced between them.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunReport> {
    cfg.validate()?;
    let n = cfg.samples();
    let mut trials = Vec::with_capacity(cfg.iterations);
    let mut velocity_within_bound = true;
    let mut identified = None;

    match cfg.scenario {
        Scenario::FeedbackOnly => {
            for _ in 0..cfg.iterations {
                trials.push(run_trial(cfg, None, None)?);
            }
        }
        Scenario::FeedbackPlusPilc => {
            let mut ilc = IlcMemory::new(n, cfg.learning_gain, cfg.q_cutoff_hz, cfg.q_mode)?;
            for _ in 0..cfg.iterations {
                let rec = run_trial(cfg, Some(&ilc), None)?;
                ilc.record_error(&rec.e)?;
                ilc_update(&mut ilc, cfg.ts)?;
                trials.push(rec);
            }
        }
        Scenario::FullConstrained => {
            let (r_dot_max, v0) = match cfg.bound_override {
                Some(pair) => pair,
                None => {
                    let (vmax, energy) = identify_velocity_bound(cfg)?;
                    (vmax, cfg.v0_scale * energy)
                }
            };
            identified = Some((r_dot_max, v0));
            let mut ilc = IlcMemory::new(n, cfg.learning_gain, cfg.q_cutoff_hz, cfg.q_mode)?;
            let mut cs = ConstraintState::new(n, v0, cfg.psi, r_dot_max, cfg.r_dot_min)?;
            cs.strict_first_sample = cfg.strict_first_sample;
            for _ in 0..cfg.iterations {
                let rec = run_trial(cfg, Some(&ilc), Some(&cs))?;
                if rec.max_velocity > r_dot_max {
                    velocity_within_bound = false;
                }
                ilc.record_error(&rec.e)?;
                ilc_update(&mut ilc, cfg.ts)?;
                let profile = VelocityProfile {
                    samples: rec
                        .t
                        .iter()
                        .zip(rec.r_dot.iter())
                        .map(|(&t, &v)| crate::kinematics::VelocitySample { t, r_dot: v })
                        .collect(),
                };
                cs = dilc_update(&cs, &profile)?;
                trials.push(rec);
            }
        }
    }

    let plateau_iteration = trials
        .windows(2)
        .position(|w| (w[1].rmse - w[0].rmse).abs() < 1e-4)
        .map(|i| i + 2);

    Ok(RunReport {
        config: cfg.clone(),
        trials,
        plateau_iteration,
        identified_bound: identified,
        velocity_within_bound,
    })
}
