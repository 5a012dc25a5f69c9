//! Clean and pseudo-measured micro-Doppler signatures from parametric
//! point-scatterer kinematics, plus the AWGN and patch-bootstrap noise
//! datasets.

mod kinematics;
mod noise;
mod radar;

pub use kinematics::{
    activity_profile, ActivityId, ActivityProfile, Ease, Envelope, Oscillator, RangePath,
    ScattererTrack, LIMB_TRACKS, MAX_RANGE_M, MIN_RANGE_M, TEMPLATE_VERSION,
};
pub use noise::{add_awgn_image, apply_patch_noise, awgn_noise, fit_patch_noise, PatchNoiseModel};
pub use radar::{
    random_env, render, simulate_clean, simulate_measured, synthesize_return, EnvConfig,
    MultipathEcho, OcclusionWindow, RadarConfig, RenderConfig, SimConfig,
};
