//! Task-space line trajectory, planar two-link arm kinematics, and
//! Jacobian-based resultant end-effector velocity.
//!
//! The task is a straight-line point-to-point reach. The arm is shoulder +
//! elbow in the task plane; with the hand constrained to the task line the
//! elbow angle determines the shoulder angle, so a joint series plus the
//! line geometry is enough to reconstruct hand velocities.

use crate::error::{Result, SimError};
use crate::plant::ArmParams;

/// Time profile of the reference displacement along the line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeProfile {
    /// Constant-velocity ramp from 0 to the line magnitude.
    Ramp,
    /// `3τ² − 2τ³` ease-in/ease-out.
    Smoothstep,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    /// displacement along the line, m
    pub r_d: f64,
    pub x: f64,
    pub y: f64,
}

/// Sampled reference trajectory for one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskTrajectory {
    pub ts: f64,
    pub samples: Vec<TrajectorySample>,
}

impl TaskTrajectory {
    pub fn magnitude(&self) -> f64 {
        self.samples.last().map(|s| s.r_d).unwrap_or(0.0)
    }

    pub fn displacements(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.r_d).collect()
    }
}

/// Straight-line point-to-point trajectory of `duration/Ts + 1` samples.
pub fn line_trajectory(
    p1: (f64, f64),
    p2: (f64, f64),
    duration: f64,
    ts: f64,
    profile: TimeProfile,
) -> Result<TaskTrajectory> {
    if ts <= 0.0 {
        return Err(SimError::InvalidSamplePeriod(ts));
    }
    if duration <= 0.0 {
        return Err(SimError::InvalidConfig(format!(
            "duration must be positive, got {duration}"
        )));
    }
    let steps = duration / ts;
    if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
        return Err(SimError::NonIntegralHorizon { duration, ts });
    }
    let n = steps.round() as usize;
    let magnitude = ((p2.0 - p1.0).powi(2) + (p2.1 - p1.1).powi(2)).sqrt();
    let (ux, uy) = if magnitude > 0.0 {
        ((p2.0 - p1.0) / magnitude, (p2.1 - p1.1) / magnitude)
    } else {
        (0.0, 0.0)
    };
    let samples = (0..=n)
        .map(|k| {
            let t = k as f64 * ts;
            let tau = t / duration;
            let r_d = match profile {
                TimeProfile::Ramp => magnitude * tau,
                TimeProfile::Smoothstep => magnitude * (3.0 * tau * tau - 2.0 * tau * tau * tau),
            };
            TrajectorySample {
                t,
                r_d,
                x: p1.0 + r_d * ux,
                y: p1.1 + r_d * uy,
            }
        })
        .collect();
    Ok(TaskTrajectory { ts, samples })
}

/// Polar form of a task-plane offset: reach `√(d² + L²)` and orientation
/// `atan(d/L)` of a point `d` above the body line at forward distance `L`.
pub fn task_plane_polar(d: f64, l: f64) -> (f64, f64) {
    ((d * d + l * l).sqrt(), (d / l).atan())
}

/// Planar two-link arm tied to a task line.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmKinematics {
    /// upper-arm length, m
    pub l_u: f64,
    /// forearm length, m
    pub l_f: f64,
    /// shoulder position in the task plane, m
    pub shoulder_base: (f64, f64),
    /// start of the task line, m
    pub line_origin: (f64, f64),
    /// orientation of the task line, rad
    pub line_angle: f64,
}

impl Default for ArmKinematics {
    fn default() -> Self {
        Self::for_task((0.0, 0.0), (0.2, 0.2), &ArmParams::default())
    }
}

impl ArmKinematics {
    /// Builds the arm geometry for a task line. The shoulder sits at the
    /// configured horizontal offset `d1` from the line origin.
    pub fn for_task(p1: (f64, f64), p2: (f64, f64), arm: &ArmParams) -> Self {
        let angle = if p1 == p2 {
            0.0
        } else {
            (p2.1 - p1.1).atan2(p2.0 - p1.0)
        };
        Self {
            l_u: arm.upper_arm_length(),
            l_f: arm.forearm_length(),
            shoulder_base: (p1.0, p1.1 - arm.d1),
            line_origin: p1,
            line_angle: angle,
        }
    }

    pub fn reach_min(&self) -> f64 {
        (self.l_u - self.l_f).abs()
    }

    pub fn reach_max(&self) -> f64 {
        self.l_u + self.l_f
    }

    fn line_unit(&self) -> (f64, f64) {
        (self.line_angle.cos(), self.line_angle.sin())
    }

    /// Point on the task line at displacement `d` from the origin.
    pub fn line_point(&self, d: f64) -> (f64, f64) {
        let (ux, uy) = self.line_unit();
        (self.line_origin.0 + d * ux, self.line_origin.1 + d * uy)
    }

    /// Shoulder and elbow angles for a hand on the line at displacement `d`.
    pub fn joints_at_displacement(&self, d: f64) -> Result<(f64, f64)> {
        let (x, y) = self.line_point(d);
        inverse_kinematics(self, x, y)
    }

    /// Along-line displacement of the hand for a given elbow angle, taking
    /// the forward branch of the line-circle intersection.
    pub fn displacement_of_elbow(&self, theta_f: f64) -> Result<f64> {
        let rho2 =
            self.l_u * self.l_u + self.l_f * self.l_f + 2.0 * self.l_u * self.l_f * theta_f.cos();
        let (ux, uy) = self.line_unit();
        let ox = self.line_origin.0 - self.shoulder_base.0;
        let oy = self.line_origin.1 - self.shoulder_base.1;
        let b = ux * ox + uy * oy;
        let c = ox * ox + oy * oy - rho2;
        let disc = b * b - c;
        if disc < 0.0 {
            let (x, y) = self.line_point(0.0);
            return Err(SimError::Unreachable { x, y });
        }
        Ok(-b + disc.sqrt())
    }
}

/// Hand position for given shoulder and elbow angles. The elbow angle is
/// the forearm rotation relative to the upper arm, zero when straight.
pub fn forward_kinematics(kin: &ArmKinematics, theta_u: f64, theta_f: f64) -> (f64, f64) {
    let (sx, sy) = kin.shoulder_base;
    let ex = sx + kin.l_u * theta_u.cos();
    let ey = sy + kin.l_u * theta_u.sin();
    (
        ex + kin.l_f * (theta_u + theta_f).cos(),
        ey + kin.l_f * (theta_u + theta_f).sin(),
    )
}

/// Elbow-down inverse kinematics. Errors when the point is outside the
/// reachable annulus.
pub fn inverse_kinematics(kin: &ArmKinematics, x: f64, y: f64) -> Result<(f64, f64)> {
    let dx = x - kin.shoulder_base.0;
    let dy = y - kin.shoulder_base.1;
    let rho2 = dx * dx + dy * dy;
    let rho = rho2.sqrt();
    if rho < kin.reach_min() - 1e-12 || rho > kin.reach_max() + 1e-12 {
        return Err(SimError::Unreachable { x, y });
    }
    let cos_tf = ((rho2 - kin.l_u * kin.l_u - kin.l_f * kin.l_f)
        / (2.0 * kin.l_u * kin.l_f))
        .clamp(-1.0, 1.0);
    let theta_f = cos_tf.acos();
    let psi = dy.atan2(dx);
    let cos_alpha = ((kin.l_u * kin.l_u + rho2 - kin.l_f * kin.l_f) / (2.0 * kin.l_u * rho))
        .clamp(-1.0, 1.0);
    let theta_u = psi - cos_alpha.acos();
    Ok((theta_u, theta_f))
}

/// Backward difference `(s[k] − s[k−1])/Ts`, first element zero.
pub fn differentiate(signal: &[f64], ts: f64) -> Vec<f64> {
    let mut out = vec![0.0; signal.len()];
    for k in 1..signal.len() {
        out[k] = (signal[k] - signal[k - 1]) / ts;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocitySample {
    pub t: f64,
    /// resultant end-effector speed, m/s
    pub r_dot: f64,
}

/// Resultant end-effector velocity per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityProfile {
    pub samples: Vec<VelocitySample>,
}

impl VelocityProfile {
    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.r_dot).collect()
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().map(|s| s.r_dot).fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

const SINGULARITY_TOL: f64 = 1e-9;

/// Resultant velocity of the hand from an elbow-angle series: the elbow
/// rate comes from `differentiate`, the shoulder rate is induced by the
/// hand-on-line constraint, and both map through the arm Jacobian.
pub fn resultant_velocity(
    kin: &ArmKinematics,
    theta_f: &[f64],
    ts: f64,
) -> Result<VelocityProfile> {
    if theta_f.len() < 2 {
        return Err(SimError::LengthMismatch {
            a: theta_f.len(),
            b: 2,
        });
    }
    if ts <= 0.0 {
        return Err(SimError::InvalidSamplePeriod(ts));
    }
    let mut theta_u = Vec::with_capacity(theta_f.len());
    for (k, &tf) in theta_f.iter().enumerate() {
        if tf.sin().abs() < SINGULARITY_TOL {
            return Err(SimError::SingularConfiguration {
                sample: k,
                theta_f: tf,
            });
        }
        let d = kin.displacement_of_elbow(tf)?;
        let (tu, _) = kin.joints_at_displacement(d)?;
        theta_u.push(tu);
    }
    let dtf = differentiate(theta_f, ts);
    let dtu = differentiate(&theta_u, ts);
    let samples = (0..theta_f.len())
        .map(|k| {
            let (tu, tf) = (theta_u[k], theta_f[k]);
            let s_u = tu.sin();
            let c_u = tu.cos();
            let s_uf = (tu + tf).sin();
            let c_uf = (tu + tf).cos();
            let xdot = -(kin.l_u * s_u + kin.l_f * s_uf) * dtu[k] - kin.l_f * s_uf * dtf[k];
            let ydot = (kin.l_u * c_u + kin.l_f * c_uf) * dtu[k] + kin.l_f * c_uf * dtf[k];
            VelocitySample {
                t: k as f64 * ts,
                r_dot: xdot.hypot(ydot),
            }
        })
        .collect();
    Ok(VelocityProfile { samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn line_trajectory_magnitude() {
        let t = line_trajectory((0.0, 0.0), (0.2, 0.2), 10.0, 0.05, TimeProfile::Ramp).unwrap();
        assert_eq!(t.samples.len(), 201);
        assert_relative_eq!(t.magnitude(), 0.28284, max_relative = 1e-4);
        assert_abs_diff_eq!(t.samples[0].r_d, 0.0);
        // r_d is non-decreasing
        for w in t.samples.windows(2) {
            assert!(w[1].r_d >= w[0].r_d);
        }
    }

    #[test]
    fn line_trajectory_degenerate_endpoints() {
        let t = line_trajectory((0.1, 0.1), (0.1, 0.1), 2.0, 0.05, TimeProfile::Ramp).unwrap();
        assert!(t.samples.iter().all(|s| s.r_d == 0.0));
        assert!(t.samples.iter().all(|s| s.x == 0.1 && s.y == 0.1));
    }

    #[test]
    fn line_trajectory_rejects_fractional_horizon() {
        assert!(matches!(
            line_trajectory((0.0, 0.0), (0.2, 0.2), 10.013, 0.05, TimeProfile::Ramp),
            Err(SimError::NonIntegralHorizon { .. })
        ));
    }

    #[test]
    fn smoothstep_profile_endpoints() {
        let t =
            line_trajectory((0.0, 0.0), (0.2, 0.2), 10.0, 0.05, TimeProfile::Smoothstep).unwrap();
        assert_abs_diff_eq!(t.samples[0].r_d, 0.0);
        assert_relative_eq!(t.magnitude(), 0.28284, max_relative = 1e-4);
        // midpoint of smoothstep is half the magnitude
        assert_relative_eq!(t.samples[100].r_d, 0.5 * t.magnitude(), max_relative = 1e-9);
    }

    #[test]
    fn polar_form_consistent_with_arm_table() {
        let (r, phi) = task_plane_polar(0.2, 0.2857);
        assert_relative_eq!(phi, 0.6107, max_relative = 1e-3);
        assert_relative_eq!(r, (0.2f64.powi(2) + 0.2857f64.powi(2)).sqrt(), max_relative = 1e-12);
        // close to the published task orientation 0.6109
        assert!((phi - 0.6109).abs() < 1e-3);
    }

    #[test]
    fn fk_anchor_poses() {
        let kin = ArmKinematics {
            shoulder_base: (0.0, 0.0),
            ..ArmKinematics::default()
        };
        let (x, y) = forward_kinematics(&kin, 0.0, 0.0);
        assert_abs_diff_eq!(x, kin.l_u + kin.l_f, epsilon = 1e-12);
        assert_abs_diff_eq!(y, 0.0, epsilon = 1e-12);
        let (x, y) = forward_kinematics(&kin, std::f64::consts::FRAC_PI_2, 0.0);
        assert_abs_diff_eq!(x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(y, kin.l_u + kin.l_f, epsilon = 1e-12);
    }

    #[test]
    fn ik_full_extension_and_right_angle() {
        let kin = ArmKinematics {
            shoulder_base: (0.0, 0.0),
            ..ArmKinematics::default()
        };
        let (_, tf) = inverse_kinematics(&kin, kin.l_u + kin.l_f, 0.0).unwrap();
        assert_abs_diff_eq!(tf, 0.0, epsilon = 1e-6);
        let rho = (kin.l_u * kin.l_u + kin.l_f * kin.l_f).sqrt();
        let (_, tf) = inverse_kinematics(&kin, rho, 0.0).unwrap();
        assert_abs_diff_eq!(tf, std::f64::consts::FRAC_PI_2, epsilon = 1e-9);
    }

    #[test]
    fn ik_rejects_unreachable() {
        let kin = ArmKinematics::default();
        assert!(inverse_kinematics(&kin, 5.0, 5.0).is_err());
        assert!(inverse_kinematics(&kin, kin.shoulder_base.0, kin.shoulder_base.1).is_err());
    }

    #[test]
    fn fk_ik_round_trip_over_workspace() {
        let kin = ArmKinematics::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut tested = 0;
        while tested < 100 {
            let rho = rng.gen_range(kin.reach_min() + 0.01..kin.reach_max() - 0.01);
            let ang = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            let x = kin.shoulder_base.0 + rho * ang.cos();
            let y = kin.shoulder_base.1 + rho * ang.sin();
            let (tu, tf) = inverse_kinematics(&kin, x, y).unwrap();
            let (x2, y2) = forward_kinematics(&kin, tu, tf);
            assert_abs_diff_eq!(x, x2, epsilon = 1e-9);
            assert_abs_diff_eq!(y, y2, epsilon = 1e-9);
            tested += 1;
        }
    }

    #[test]
    fn displacement_elbow_round_trip() {
        let kin = ArmKinematics::default();
        for k in 0..=20 {
            let d = 0.28284 * k as f64 / 20.0;
            let (_, tf) = kin.joints_at_displacement(d).unwrap();
            let back = kin.displacement_of_elbow(tf).unwrap();
            assert_abs_diff_eq!(back, d, epsilon = 1e-9);
        }
    }

    #[test]
    fn differentiate_ramp_and_constant() {
        let ramp: Vec<f64> = (0..100).map(|k| 0.028284 * 0.05 * k as f64).collect();
        let d = differentiate(&ramp, 0.05);
        assert_abs_diff_eq!(d[0], 0.0);
        for &v in &d[1..] {
            assert_relative_eq!(v, 0.028284, max_relative = 1e-9);
        }
        let d = differentiate(&[3.0; 50], 0.05);
        assert!(d.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn differentiate_sine_matches_cosine() {
        let ts = 0.05;
        let sig: Vec<f64> = (0..200).map(|k| (k as f64 * ts).sin()).collect();
        let d = differentiate(&sig, ts);
        let mut worst = 0.0f64;
        for k in 1..200 {
            let t = k as f64 * ts;
            worst = worst.max((d[k] - t.cos()).abs());
        }
        // backward-difference error bound Ts/2 * max|f''| = 0.025
        assert!(worst <= ts / 2.0 * 1.01, "worst {worst}");
        assert!(worst > ts / 2.0 * 0.9, "bound should be tight, worst {worst}");
    }

    #[test]
    fn zero_motion_zero_velocity() {
        let kin = ArmKinematics::default();
        let (_, tf0) = kin.joints_at_displacement(0.1).unwrap();
        let thetas = vec![tf0; 40];
        let v = resultant_velocity(&kin, &thetas, 0.05).unwrap();
        assert!(v.samples.iter().all(|s| s.r_dot == 0.0));
    }

    #[test]
    fn line_constrained_velocity_matches_displacement_rate() {
        // analytic smoothstep motion along the line
        let kin = ArmKinematics::default();
        let ts = 0.05;
        let mag = 0.28284f64;
        let dur = 10.0;
        let n = 200usize;
        let disp: Vec<f64> = (0..=n)
            .map(|k| {
                let tau = k as f64 * ts / dur;
                mag * (3.0 * tau * tau - 2.0 * tau * tau * tau)
            })
            .collect();
        let thetas: Vec<f64> = disp
            .iter()
            .map(|&d| kin.joints_at_displacement(d).unwrap().1)
            .collect();
        let v = resultant_velocity(&kin, &thetas, ts).unwrap();
        let ddot = differentiate(&disp, ts);
        // second-difference bound: max |d''| of the smoothstep
        let max_acc = 6.0 * mag / (dur * dur);
        for k in 1..=n {
            assert!(
                (v.samples[k].r_dot - ddot[k].abs()).abs() <= 2.0 * ts * max_acc,
                "sample {k}: {} vs {}",
                v.samples[k].r_dot,
                ddot[k]
            );
        }
    }

    #[test]
    fn straight_arm_flags_singularity() {
        let kin = ArmKinematics::default();
        let thetas = vec![0.0, 0.001, 0.002];
        assert!(matches!(
            resultant_velocity(&kin, &thetas, 0.05),
            Err(SimError::SingularConfiguration { sample: 0, .. })
        ));
    }
}
