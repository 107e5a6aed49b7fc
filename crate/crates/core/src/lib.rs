//! Deterministic fixed-step simulator of a hybrid FES + robot upper-limb
//! rehabilitation control loop.
//!
//! The loop stimulates a muscle model to drive a composite arm-robot plant
//! along a straight-line reaching task. Three control configurations are
//! provided: phase-lead feedback alone, feedback plus a proportional
//! iterative-learning feedforward, and the full stack with a learning
//! velocity-constraint controller that saturates the stimulation command so
//! a patient-specific velocity bound is never exceeded while tracking
//! improves from trial to trial.

pub mod control;
pub mod error;
pub mod kinematics;
pub mod lti;
pub mod plant;
pub mod sim;

pub use control::{
    bea_epsilon, build_phase_lead, build_q_filter, dilc_update, fes_modulate, ilc_update,
    sat_constrain, ConstraintState, FesConfig, IlcMemory, PhaseLeadConfig, QMode,
};
pub use error::{Result, SimError};
pub use kinematics::{
    differentiate, forward_kinematics, inverse_kinematics, line_trajectory, resultant_velocity,
    task_plane_polar, ArmKinematics, TaskTrajectory, TimeProfile, VelocityProfile,
};
pub use lti::{
    bandwidth_3db, discretize_tustin, discretize_zoh, feedback_unity, frequency_response, series,
    simulate, to_state_space, DiscreteSystem, FrequencyPoint, StateSpace, TransferFunction,
};
pub use plant::{
    build_muscle_linear, build_plant, compute_b_a3, f_ma, f_mp, h_irc, h_irc_inverse,
    verify_linearization, ArmParams, MuscleParams, PlantCoefficients,
};
pub use sim::{
    identify_velocity_bound, nrmse, rmse, run_scenario, run_trial, signal_energy, InjectionPoint,
    RunReport, Scenario, ScenarioConfig, TrialRecord, VelocityIdentification,
};
