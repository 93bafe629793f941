//! Motion complexity scores and tracking evaluation metrics.

mod complexity;
mod tracking;

pub use complexity::{
    airborne_ratio, analyze_clip, base_angular_velocity, com_vertical_speed, contact_switch_freq,
    difficulty_scores, max_kinematics, ComplexityScores, KinematicMaxima, RawComplexity, DEFAULT_H_AIR,
};
pub use tracking::{
    aggregate_episodes, check_termination, delta_acc, delta_vel, mpjpe, success_rate, EpisodeMetrics,
    EpisodeOutcome, TerminationThresholds, TrackingErrors, TrackingMetrics,
};
