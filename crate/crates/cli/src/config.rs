//! Configuration assembly: built-in defaults, overridden by a flat
//! `key = value` config file, overridden by command-line flags.

use fes_ilc_sim::control::QMode;
use fes_ilc_sim::{
    InjectionPoint, Scenario, ScenarioConfig, TimeProfile, VelocityIdentification,
};
use std::collections::BTreeMap;
use std::path::Path;

/// Keys that change the model or task rather than the experiment shape.
/// `paper_faithful` mode refuses them so a run labeled paper-faithful can
/// only differ in scenario, gain, iteration count, and output location.
const MODEL_KEYS: &[&str] = &[
    "ts",
    "duration",
    "plant_inertia",
    "plant_damping",
    "muscle_wn",
    "kp",
    "kd",
    "omega_lead",
    "q_cutoff_hz",
    "p1_x",
    "p1_y",
    "p2_x",
    "p2_y",
    "profile",
    "d1",
];

/// Parses the flat config-file format: one `key = value` per line, `#`
/// starts a comment, blank lines ignored.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`, got `{raw}`", lineno + 1))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn parse_f64(key: &str, value: &str) -> Result<f64, String> {
    value
        .parse::<f64>()
        .map_err(|_| format!("key `{key}`: `{value}` is not a number"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, String> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(format!("key `{key}`: `{value}` is not a boolean")),
    }
}

pub fn scenario_from_number(n: u32) -> Result<Scenario, String> {
    match n {
        1 => Ok(Scenario::FeedbackOnly),
        2 => Ok(Scenario::FeedbackPlusPilc),
        3 => Ok(Scenario::FullConstrained),
        _ => Err(format!("scenario must be 1, 2, or 3, got {n}")),
    }
}

/// Applies config-file overrides onto a scenario configuration.
pub fn apply_overrides(
    cfg: &mut ScenarioConfig,
    map: &BTreeMap<String, String>,
    paper_faithful: bool,
) -> Result<(), String> {
    if paper_faithful {
        if let Some(key) = MODEL_KEYS.iter().find(|k| map.contains_key(**k)) {
            return Err(format!(
                "config key `{key}` changes the model; remove it or drop --paper-faithful"
            ));
        }
    }
    for (key, value) in map {
        match key.as_str() {
            "scenario" => {
                let n = value
                    .parse::<u32>()
                    .map_err(|_| format!("scenario `{value}` is not a number"))?;
                cfg.scenario = scenario_from_number(n)?;
            }
            "iterations" => {
                cfg.iterations = value
                    .parse::<usize>()
                    .map_err(|_| format!("iterations `{value}` is not an integer"))?;
            }
            "gain" | "learning_gain" => cfg.learning_gain = parse_f64(key, value)?,
            "psi" => cfg.psi = parse_f64(key, value)?,
            "v0_scale" => cfg.v0_scale = parse_f64(key, value)?,
            "ts" => cfg.ts = parse_f64(key, value)?,
            "duration" => cfg.duration = parse_f64(key, value)?,
            "q_cutoff_hz" => cfg.q_cutoff_hz = parse_f64(key, value)?,
            "q_mode" => {
                cfg.q_mode = match value.as_str() {
                    "zerophase" => QMode::ZeroPhase,
                    "causal" => QMode::Causal,
                    "off" => QMode::Off,
                    _ => return Err(format!("q_mode `{value}` (zerophase|causal|off)")),
                }
            }
            "injection" => {
                cfg.injection = match value.as_str() {
                    "refshift" => InjectionPoint::ReferenceShift,
                    "serial" => InjectionPoint::Serial,
                    _ => return Err(format!("injection `{value}` (refshift|serial)")),
                }
            }
            "velocity_id" => {
                cfg.velocity_id = match value.as_str() {
                    "openloop" => VelocityIdentification::OpenLoop,
                    "closedloop" => VelocityIdentification::ClosedLoop,
                    _ => return Err(format!("velocity_id `{value}` (openloop|closedloop)")),
                }
            }
            "profile" => {
                cfg.profile = match value.as_str() {
                    "ramp" => TimeProfile::Ramp,
                    "smoothstep" => TimeProfile::Smoothstep,
                    _ => return Err(format!("profile `{value}` (ramp|smoothstep)")),
                }
            }
            "p1_x" => cfg.p1.0 = parse_f64(key, value)?,
            "p1_y" => cfg.p1.1 = parse_f64(key, value)?,
            "p2_x" => cfg.p2.0 = parse_f64(key, value)?,
            "p2_y" => cfg.p2.1 = parse_f64(key, value)?,
            "plant_inertia" => cfg.plant.inertial_sum = parse_f64(key, value)?,
            "plant_damping" => cfg.plant.damping = parse_f64(key, value)?,
            "muscle_wn" => cfg.muscle.w_n = parse_f64(key, value)?,
            "kp" => cfg.lead.kp = parse_f64(key, value)?,
            "kd" => cfg.lead.kd = parse_f64(key, value)?,
            "omega_lead" => cfg.lead.omega_lead = parse_f64(key, value)?,
            "d1" => cfg.arm.d1 = parse_f64(key, value)?,
            "r_dot_min" => cfg.r_dot_min = parse_f64(key, value)?,
            "strict_first_sample" => cfg.strict_first_sample = parse_bool(key, value)?,
            "paper_faithful" => cfg.paper_faithful = parse_bool(key, value)?,
            _ => return Err(format!("unknown config key `{key}`")),
        }
    }
    Ok(())
}

pub fn load_config_file(path: &Path) -> Result<BTreeMap<String, String>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    parse_config_file(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_format() {
        let map = parse_config_file("# comment\n gain = 0.2 \n\niterations=8 # trailing\n").unwrap();
        assert_eq!(map["gain"], "0.2");
        assert_eq!(map["iterations"], "8");
        assert_eq!(map.len(), 2);
    }

    #[test]
    fn rejects_malformed_line() {
        assert!(parse_config_file("gain 0.2").is_err());
    }

    #[test]
    fn rejects_unknown_key() {
        let mut cfg = ScenarioConfig::default();
        let map = parse_config_file("turbo = yes").unwrap();
        assert!(apply_overrides(&mut cfg, &map, false).is_err());
    }

    #[test]
    fn paper_faithful_refuses_model_keys() {
        let mut cfg = ScenarioConfig::default();
        let map = parse_config_file("kp = 12.0").unwrap();
        assert!(apply_overrides(&mut cfg, &map, true).is_err());
        assert!(apply_overrides(&mut cfg, &map, false).is_ok());
        assert_eq!(cfg.lead.kp, 12.0);
    }

    #[test]
    fn overrides_apply() {
        let mut cfg = ScenarioConfig::default();
        let map =
            parse_config_file("scenario = 2\ngain = 0.8\niterations = 4\nq_mode = causal").unwrap();
        apply_overrides(&mut cfg, &map, false).unwrap();
        assert_eq!(cfg.scenario, Scenario::FeedbackPlusPilc);
        assert_eq!(cfg.learning_gain, 0.8);
        assert_eq!(cfg.iterations, 4);
        assert_eq!(cfg.q_mode, QMode::Causal);
    }
}
