//! The three control laws: phase-lead feedback, proportional iterative
//! learning feedforward with a low-pass learning filter, and the learning
//! velocity-constraint controller (derivative-type trial-to-trial update,
//! bounded-error acceptance test, saturation), plus the stimulation
//! pulse-width mapping.

use crate::error::{Result, SimError};
use crate::kinematics::VelocityProfile;
use crate::lti::{discretize_tustin, to_state_space, DiscreteSystem, TransferFunction};

/// Phase-lead compensator gains. `omega_lead` is the lead ratio: as it
/// approaches zero the compensator approaches a pure PD law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseLeadConfig {
    pub kp: f64,
    pub kd: f64,
    pub omega_lead: f64,
}

impl Default for PhaseLeadConfig {
    fn default() -> Self {
        // Unique gains reproducing the published closed loop by coefficient
        // matching: DC gain 71.29/7.129 = Kp, zero at Kp/Kd = 5, lead pole
        // from the quintic's leading coefficient.
        Self {
            kp: 10.0,
            kd: 2.0,
            omega_lead: 0.05,
        }
    }
}

impl PhaseLeadConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kp <= 0.0 {
            return Err(SimError::OutOfRange {
                what: "kp",
                value: self.kp,
                range: "(0, inf)",
            });
        }
        if self.kd < 0.0 {
            return Err(SimError::OutOfRange {
                what: "kd",
                value: self.kd,
                range: "[0, inf)",
            });
        }
        if self.omega_lead <= 0.0 || self.omega_lead >= 1.0 {
            return Err(SimError::OutOfRange {
                what: "omega_lead",
                value: self.omega_lead,
                range: "(0, 1)",
            });
        }
        Ok(())
    }
}

/// `(Kd·s + Kp)/((ω·Kd/Kp)·s + 1)`; collapses to the static gain `Kp` when
/// `Kd = 0`.
pub fn build_phase_lead(cfg: &PhaseLeadConfig) -> Result<TransferFunction> {
    cfg.validate()?;
    if cfg.kd == 0.0 {
        return TransferFunction::new(vec![cfg.kp], vec![1.0]);
    }
    let tau = cfg.kd / cfg.kp;
    TransferFunction::new(vec![cfg.kd, cfg.kp], vec![cfg.omega_lead * tau, 1.0])
}

/// First-order unity-DC low-pass `ω_c/(s + ω_c)` with `ω_c = 2π·cutoff`.
pub fn build_q_filter(cutoff_hz: f64) -> Result<TransferFunction> {
    if cutoff_hz <= 0.0 {
        return Err(SimError::OutOfRange {
            what: "q cutoff",
            value: cutoff_hz,
            range: "(0, inf)",
        });
    }
    let wc = 2.0 * std::f64::consts::PI * cutoff_hz;
    TransferFunction::new(vec![wc], vec![1.0, wc])
}

/// How the learning filter is applied to the stored trial signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QMode {
    /// Forward and reverse causal passes from zero state. No net phase;
    /// the reverse pass rolls off at the end of the horizon, which is what
    /// lets the learned error plateau instead of chasing the transient.
    ZeroPhase,
    /// Single forward causal pass from zero state.
    Causal,
    /// No filtering.
    Off,
}

/// Trial-to-trial feedforward memory.
#[derive(Debug, Clone, PartialEq)]
pub struct IlcMemory {
    /// feedforward series applied next trial, same length as the trial
    pub feedforward: Vec<f64>,
    /// error series recorded from the last trial
    pub error: Vec<f64>,
    /// proportional learning gain
    pub learning_gain: f64,
    /// learning-filter cutoff, Hz
    pub q_cutoff_hz: f64,
    pub q_mode: QMode,
    pub iteration_index: usize,
}

impl IlcMemory {
    pub fn new(len: usize, learning_gain: f64, q_cutoff_hz: f64, q_mode: QMode) -> Result<Self> {
        if learning_gain <= 0.0 {
            return Err(SimError::OutOfRange {
                what: "learning gain",
                value: learning_gain,
                range: "(0, inf)",
            });
        }
        Ok(Self {
            feedforward: vec![0.0; len],
            error: vec![0.0; len],
            learning_gain,
            q_cutoff_hz,
            q_mode,
            iteration_index: 0,
        })
    }

    pub fn record_error(&mut self, error: &[f64]) -> Result<()> {
        if error.len() != self.feedforward.len() {
            return Err(SimError::LengthMismatch {
                a: error.len(),
                b: self.feedforward.len(),
            });
        }
        self.error.clear();
        self.error.extend_from_slice(error);
        Ok(())
    }
}

fn q_forward_pass(dsys: &DiscreteSystem, signal: &[f64]) -> Vec<f64> {
    let mut x = dsys.zero_state();
    signal.iter().map(|&u| dsys.step(&mut x, u)).collect()
}

fn apply_q(dsys: &DiscreteSystem, mode: QMode, signal: &[f64]) -> Vec<f64> {
    match mode {
        QMode::Off => signal.to_vec(),
        QMode::Causal => q_forward_pass(dsys, signal),
        QMode::ZeroPhase => {
            let mut fwd = q_forward_pass(dsys, signal);
            fwd.reverse();
            let mut back = q_forward_pass(dsys, &fwd);
            back.reverse();
            back
        }
    }
}

/// Learning update `U_{k+1} = Q(U_k + L·e_k)` on the stored memory.
/// Returns the new feedforward series and increments the iteration index.
pub fn ilc_update(mem: &mut IlcMemory, ts: f64) -> Result<Vec<f64>> {
    if mem.error.len() != mem.feedforward.len() {
        return Err(SimError::LengthMismatch {
            a: mem.error.len(),
            b: mem.feedforward.len(),
        });
    }
    let raw: Vec<f64> = mem
        .feedforward
        .iter()
        .zip(mem.error.iter())
        .map(|(&u, &e)| u + mem.learning_gain * e)
        .collect();
    let filtered = match mem.q_mode {
        QMode::Off => raw,
        mode => {
            let q = discretize_tustin(&to_state_space(&build_q_filter(mem.q_cutoff_hz)?)?, ts)?;
            apply_q(&q, mode, &raw)
        }
    };
    mem.feedforward = filtered.clone();
    mem.iteration_index += 1;
    Ok(filtered)
}

/// Velocity-constraint learning state: the per-sample constraint series,
/// its learning rate, and the velocity bounds it enforces.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintState {
    /// per-sample constraint series on the stimulation command
    pub v: Vec<f64>,
    /// slow learning derivative gain
    pub psi: f64,
    /// identified maximum resultant velocity, m/s
    pub r_dot_max: f64,
    /// lower velocity bound, m/s
    pub r_dot_min: f64,
    /// margin computed by the last bound check
    pub epsilon: Option<f64>,
    /// include the stationary first sample in the lower-bound branch
    pub strict_first_sample: bool,
}

impl ConstraintState {
    pub fn new(len: usize, v0: f64, psi: f64, r_dot_max: f64, r_dot_min: f64) -> Result<Self> {
        // psi = 0 freezes the constraint learning, which is allowed
        if psi < 0.0 {
            return Err(SimError::OutOfRange {
                what: "psi",
                value: psi,
                range: "[0, inf)",
            });
        }
        if r_dot_max <= r_dot_min || r_dot_min < 0.0 {
            return Err(SimError::OutOfRange {
                what: "r_dot_max",
                value: r_dot_max,
                range: "(r_dot_min, inf), r_dot_min >= 0",
            });
        }
        Ok(Self {
            v: vec![v0; len],
            psi,
            r_dot_max,
            r_dot_min,
            epsilon: None,
            strict_first_sample: false,
        })
    }

    /// Saturation level: the maximum of the constraint series.
    pub fn bound(&self) -> f64 {
        self.v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Two-sided bound margin
/// `min(min(ṙ_max − ṙ_i), min(ṙ_i − ṙ_min))`; the bound is violated iff the
/// result is ≤ 0. Every trial starts at rest (the actuation chain needs a
/// few samples before the hand moves), so by default the leading stationary
/// prefix is excluded from the lower-bound branch; `strict_first_sample`
/// restores the literal reading over all samples.
pub fn bea_epsilon(r_dot: &VelocityProfile, cs: &ConstraintState) -> f64 {
    let hi = r_dot
        .samples
        .iter()
        .map(|s| cs.r_dot_max - s.r_dot)
        .fold(f64::INFINITY, f64::min);
    let skip = if cs.strict_first_sample {
        0
    } else {
        r_dot
            .samples
            .iter()
            .take_while(|s| s.r_dot == 0.0)
            .count()
    };
    let lo = r_dot
        .samples
        .iter()
        .skip(skip)
        .map(|s| s.r_dot - cs.r_dot_min)
        .fold(f64::INFINITY, f64::min);
    hi.min(lo)
}

/// Trial-to-trial constraint update. While the bound holds the constraint
/// grows with the per-sample velocity headroom; on a violation it backs off
/// by the per-sample overshoot instead.
pub fn dilc_update(cs: &ConstraintState, r_dot: &VelocityProfile) -> Result<ConstraintState> {
    if r_dot.len() != cs.v.len() {
        return Err(SimError::LengthMismatch {
            a: r_dot.len(),
            b: cs.v.len(),
        });
    }
    let eps = bea_epsilon(r_dot, cs);
    let v = if eps > 0.0 {
        cs.v
            .iter()
            .zip(r_dot.samples.iter())
            .map(|(&v, s)| v + cs.psi * (cs.r_dot_max - s.r_dot))
            .collect()
    } else {
        cs.v
            .iter()
            .zip(r_dot.samples.iter())
            .map(|(&v, s)| v - cs.psi * (s.r_dot - cs.r_dot_max).max(0.0))
            .collect()
    };
    Ok(ConstraintState {
        v,
        epsilon: Some(eps),
        ..cs.clone()
    })
}

/// Clamps each sample's magnitude at the maximum of the constraint series.
pub fn sat_constrain(u_pd: &[f64], cs: &ConstraintState) -> Vec<f64> {
    let b = cs.bound().max(0.0);
    u_pd
        .iter()
        .map(|&u| u.signum() * u.abs().min(b))
        .collect()
}

/// Stimulation block settings. Amplitude and frequency are held constant;
/// the controller modulates pulse width only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FesConfig {
    pub amplitude_ma: f64,
    pub frequency_hz: f64,
    /// pulse-width command floor, µs
    pub pw_min_us: f64,
    /// pulse-width command ceiling, µs
    pub pw_max_us: f64,
    /// controller output mapped to `pw_max_us`
    pub full_scale: f64,
}

impl Default for FesConfig {
    fn default() -> Self {
        Self {
            amplitude_ma: 5.0,
            frequency_hz: 50.0,
            pw_min_us: 0.0,
            pw_max_us: 300.0,
            full_scale: 1.0,
        }
    }
}

impl FesConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pw_min_us >= self.pw_max_us {
            return Err(SimError::OutOfRange {
                what: "pw_min_us",
                value: self.pw_min_us,
                range: "< pw_max_us",
            });
        }
        if self.full_scale <= 0.0 {
            return Err(SimError::OutOfRange {
                what: "full_scale",
                value: self.full_scale,
                range: "(0, inf)",
            });
        }
        Ok(())
    }
}

/// Affine map of the controller output onto the pulse-width command range,
/// hard-clipped at both ends.
pub fn fes_modulate(u: &[f64], cfg: &FesConfig) -> Vec<f64> {
    let span = cfg.pw_max_us - cfg.pw_min_us;
    u.iter()
        .map(|&v| cfg.pw_min_us + (v / cfg.full_scale).clamp(0.0, 1.0) * span)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::VelocitySample;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn profile(values: &[f64]) -> VelocityProfile {
        VelocityProfile {
            samples: values
                .iter()
                .enumerate()
                .map(|(k, &v)| VelocitySample {
                    t: k as f64 * 0.05,
                    r_dot: v,
                })
                .collect(),
        }
    }

    #[test]
    fn phase_lead_default_gains() {
        let tf = build_phase_lead(&PhaseLeadConfig::default()).unwrap();
        assert_eq!(tf.num(), &[2.0, 10.0]);
        assert_relative_eq!(tf.den()[0], 0.01, max_relative = 1e-12);
        assert_relative_eq!(tf.den()[1], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn phase_lead_dc_gain_is_kp() {
        for kp in [1.0, 10.0, 37.5] {
            let tf = build_phase_lead(&PhaseLeadConfig {
                kp,
                kd: 2.0,
                omega_lead: 0.3,
            })
            .unwrap();
            assert_relative_eq!(tf.dc_gain(), kp, max_relative = 1e-12);
        }
    }

    #[test]
    fn phase_lead_small_omega_approaches_pd() {
        // numerator stays Kd·s + Kp as the lead pole retreats
        let tf = build_phase_lead(&PhaseLeadConfig {
            kp: 10.0,
            kd: 2.0,
            omega_lead: 1e-9,
        })
        .unwrap();
        let s = Complex64::new(0.0, 3.0);
        let pd = Complex64::new(10.0, 2.0 * 3.0);
        assert!((tf.eval(s) - pd).norm() / pd.norm() < 1e-6);
    }

    #[test]
    fn phase_lead_validates_ranges() {
        assert!(build_phase_lead(&PhaseLeadConfig {
            kp: 0.0,
            kd: 1.0,
            omega_lead: 0.5
        })
        .is_err());
        assert!(build_phase_lead(&PhaseLeadConfig {
            kp: 1.0,
            kd: 1.0,
            omega_lead: 1.0
        })
        .is_err());
    }

    #[test]
    fn q_filter_anchor_magnitudes() {
        let q = build_q_filter(0.40).unwrap();
        let wc = 2.0 * std::f64::consts::PI * 0.40;
        assert_relative_eq!(wc, 2.5133, max_relative = 1e-4);
        assert_relative_eq!(q.eval(Complex64::new(0.0, 0.0)).norm(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(
            q.eval(Complex64::new(0.0, wc)).norm(),
            1.0 / 2f64.sqrt(),
            max_relative = 1e-9
        );
        assert_relative_eq!(
            q.eval(Complex64::new(0.0, 10.0 * wc)).norm(),
            0.0995,
            max_relative = 1e-2
        );
    }

    #[test]
    fn ilc_fixed_point_on_zero_error() {
        // constant feedforward, zero error: the filtered update stays near
        // the constant away from the horizon edges
        let mut mem = IlcMemory::new(201, 0.5, 0.40, QMode::ZeroPhase).unwrap();
        mem.feedforward = vec![0.7; 201];
        mem.record_error(&vec![0.0; 201]).unwrap();
        let u = ilc_update(&mut mem, 0.05).unwrap();
        for &v in &u[60..140] {
            assert_relative_eq!(v, 0.7, max_relative = 1e-3);
        }
        assert_eq!(mem.iteration_index, 1);
    }

    #[test]
    fn ilc_one_step_law_without_filter() {
        let mut mem = IlcMemory::new(10, 0.5, 0.40, QMode::Off).unwrap();
        mem.record_error(&vec![2.0; 10]).unwrap();
        let u = ilc_update(&mut mem, 0.05).unwrap();
        assert!(u.iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn ilc_update_matches_direct_recursion() {
        // mid-trial step error through the causal filter, checked against an
        // independently coded first-order recursion
        let n = 201;
        let ts = 0.05;
        let mut mem = IlcMemory::new(n, 0.5, 0.40, QMode::Causal).unwrap();
        let mut e = vec![0.0; n];
        for v in e.iter_mut().skip(100) {
            *v = 1.0;
        }
        mem.record_error(&e).unwrap();
        let u = ilc_update(&mut mem, ts).unwrap();

        // Tustin recursion for wc/(s+wc): y[k] = a*y[k-1] + b*(x[k]+x[k-1])
        let wc = 2.0 * std::f64::consts::PI * 0.40;
        let c = wc * ts / 2.0;
        let a = (1.0 - c) / (1.0 + c);
        let b = c / (1.0 + c);
        let mut expect = vec![0.0; n];
        let mut yprev = 0.0;
        let mut xprev = 0.0;
        for k in 0..n {
            let x = 0.5 * e[k];
            let y = a * yprev + b * (x + xprev);
            expect[k] = y;
            yprev = y;
            xprev = x;
        }
        for k in 0..n {
            assert_abs_diff_eq!(u[k], expect[k], epsilon = 1e-10);
        }
    }

    #[test]
    fn ilc_rejects_length_mismatch() {
        let mut mem = IlcMemory::new(10, 0.5, 0.40, QMode::Off).unwrap();
        assert!(mem.record_error(&vec![0.0; 9]).is_err());
        mem.error = vec![0.0; 9];
        assert!(ilc_update(&mut mem, 0.05).is_err());
    }

    #[test]
    fn epsilon_positive_inside_bounds() {
        let cs = ConstraintState::new(4, 0.4, 0.01, 0.5, 0.0).unwrap();
        let p = profile(&[0.0, 0.2, 0.3, 0.1]);
        assert!(bea_epsilon(&p, &cs) > 0.0);
    }

    #[test]
    fn epsilon_zero_at_upper_boundary() {
        let cs = ConstraintState::new(3, 0.4, 0.01, 0.5, 0.0).unwrap();
        let p = profile(&[0.1, 0.5, 0.2]);
        assert_abs_diff_eq!(bea_epsilon(&p, &cs), 0.0);
    }

    #[test]
    fn epsilon_first_sample_handling() {
        // published-style numbers: bound 0.4791, profile max 0.4546, rest at 0
        let mut cs = ConstraintState::new(3, 0.46, 0.01, 0.4791, 0.0).unwrap();
        let p = profile(&[0.0, 0.2, 0.4546]);
        // strict reading: the stationary start touches the lower bound
        cs.strict_first_sample = true;
        assert_abs_diff_eq!(bea_epsilon(&p, &cs), 0.0);
        // default reading skips the first sample
        cs.strict_first_sample = false;
        let eps = bea_epsilon(&p, &cs);
        assert!(eps > 0.0);
        assert_relative_eq!(eps, 0.0245, max_relative = 1e-9);
    }

    #[test]
    fn dilc_no_change_at_bound() {
        let cs = ConstraintState::new(3, 0.4, 0.01, 0.5, 0.0).unwrap();
        let p = profile(&[0.5, 0.5, 0.5]);
        // eps = 0 -> violation branch, but overshoot is zero everywhere
        let next = dilc_update(&cs, &p).unwrap();
        assert_eq!(next.v, cs.v);
        assert_eq!(next.epsilon, Some(0.0));
    }

    #[test]
    fn dilc_grows_below_bound() {
        let cs = ConstraintState::new(3, 0.4, 0.01, 0.5, 0.0).unwrap();
        let p = profile(&[0.0, 0.1, 0.2]);
        let next = dilc_update(&cs, &p).unwrap();
        for (k, (&v1, &v0)) in next.v.iter().zip(cs.v.iter()).enumerate() {
            assert!(v1 > v0, "sample {k}");
            assert!(v1.is_finite());
        }
        // headroom-proportional increments
        assert_relative_eq!(next.v[0] - cs.v[0], 0.01 * 0.5, max_relative = 1e-12);
        assert_relative_eq!(next.v[2] - cs.v[2], 0.01 * 0.3, max_relative = 1e-12);
    }

    #[test]
    fn dilc_backs_off_on_violation() {
        let cs = ConstraintState::new(3, 0.4, 0.01, 0.5, 0.0).unwrap();
        let p = profile(&[0.1, 0.7, 0.2]);
        let next = dilc_update(&cs, &p).unwrap();
        assert!(next.epsilon.unwrap() <= 0.0);
        assert_relative_eq!(cs.v[1] - next.v[1], 0.01 * 0.2, max_relative = 1e-12);
        assert_eq!(next.v[0], cs.v[0]);
        assert_eq!(next.v[2], cs.v[2]);
    }

    #[test]
    fn dilc_frozen_when_psi_zero() {
        let cs = ConstraintState::new(3, 0.4, 0.0, 0.5, 0.0).unwrap();
        let p = profile(&[0.0, 0.1, 0.2]);
        let next = dilc_update(&cs, &p).unwrap();
        assert_eq!(next.v, cs.v);
        assert!(ConstraintState::new(3, 0.4, -0.1, 0.5, 0.0).is_err());
    }

    #[test]
    fn sat_passthrough_below_bound() {
        let cs = ConstraintState::new(3, 0.46, 0.01, 0.5, 0.0).unwrap();
        let u = vec![0.1, -0.2, 0.45];
        assert_eq!(sat_constrain(&u, &cs), u);
    }

    #[test]
    fn sat_clamps_published_row() {
        let cs = ConstraintState::new(4, 0.4605, 0.01, 0.5, 0.0).unwrap();
        let u = vec![0.5047; 4];
        let out = sat_constrain(&u, &cs);
        assert!(out.iter().all(|&v| (v - 0.4605).abs() < 1e-12));
    }

    #[test]
    fn sat_zero_bound_zeroes_output() {
        let cs = ConstraintState::new(2, 0.0, 0.01, 0.5, 0.0).unwrap();
        let out = sat_constrain(&[0.3, -0.7], &cs);
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sat_idempotent_and_never_amplifies() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let b = rng.gen_range(0.0..1.0);
            let cs = ConstraintState::new(64, b, 0.01, 0.5, 0.0).unwrap();
            let u: Vec<f64> = (0..64).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let once = sat_constrain(&u, &cs);
            let twice = sat_constrain(&once, &cs);
            assert_eq!(once, twice);
            for (a, o) in u.iter().zip(once.iter()) {
                assert!(o.abs() <= a.abs() + 1e-15);
            }
        }
    }

    #[test]
    fn fes_map_anchors() {
        let cfg = FesConfig::default();
        let out = fes_modulate(&[0.0, cfg.full_scale, 2.0 * cfg.full_scale, -1.0], &cfg);
        assert_abs_diff_eq!(out[0], cfg.pw_min_us);
        assert_abs_diff_eq!(out[1], cfg.pw_max_us);
        assert_abs_diff_eq!(out[2], cfg.pw_max_us);
        assert_abs_diff_eq!(out[3], cfg.pw_min_us);
    }

    #[test]
    fn fes_constants_recorded() {
        let cfg = FesConfig::default();
        assert_eq!(cfg.amplitude_ma, 5.0);
        assert_eq!(cfg.frequency_hz, 50.0);
        assert!(cfg.validate().is_ok());
    }
}
