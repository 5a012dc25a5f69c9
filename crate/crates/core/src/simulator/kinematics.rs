//! Activity kinematic templates. One torso track plus four limb oscillators
//! (two arms, two legs) per activity; the parameter table below is the
//! versioned template set shipped with the crate.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub const TEMPLATE_VERSION: u32 = 1;
pub const MIN_RANGE_M: f64 = 0.3;
pub const MAX_RANGE_M: f64 = 6.0;
/// Number of limb tracks following the torso.
pub const LIMB_TRACKS: usize = 4;

const TORSO_RCS: f64 = 1.0;
const ARM_RCS: f64 = 0.3;
const LEG_RCS: f64 = 0.45;

/// The ten activities, numbered 1..=10.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ActivityId {
    SitDown,
    StandUp,
    StandUpToWalk,
    WalkToSit,
    WalkToFall,
    StandUpFromGroundToWalk,
    BodyRotating,
    WalkBackAndForth,
    Punching,
    PickUpObject,
}

impl ActivityId {
    pub const ALL: [ActivityId; 10] = [
        ActivityId::SitDown,
        ActivityId::StandUp,
        ActivityId::StandUpToWalk,
        ActivityId::WalkToSit,
        ActivityId::WalkToFall,
        ActivityId::StandUpFromGroundToWalk,
        ActivityId::BodyRotating,
        ActivityId::WalkBackAndForth,
        ActivityId::Punching,
        ActivityId::PickUpObject,
    ];

    /// 1-based activity number.
    pub fn number(self) -> usize {
        self.index() + 1
    }

    /// 0-based class index.
    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&a| a == self).unwrap()
    }

    pub fn from_number(n: usize) -> Result<Self> {
        n.checked_sub(1)
            .and_then(|i| Self::ALL.get(i).copied())
            .ok_or_else(|| Error::invalid(format!("activity number {n} outside 1..=10")))
    }

    pub fn from_index(i: usize) -> Result<Self> {
        Self::from_number(i + 1)
    }

    pub fn description(self) -> &'static str {
        match self {
            ActivityId::SitDown => "Sit down on chair",
            ActivityId::StandUp => "Stand up from chair",
            ActivityId::StandUpToWalk => "Stand up from chair to walk",
            ActivityId::WalkToSit => "Walk to sit down on chair",
            ActivityId::WalkToFall => "Walk to fall",
            ActivityId::StandUpFromGroundToWalk => "Stand up from ground to walk",
            ActivityId::BodyRotating => "Bodyrotating",
            ActivityId::WalkBackAndForth => "Walking back and forth",
            ActivityId::Punching => "Punching",
            ActivityId::PickUpObject => "Pickup object from ground and dropping it back",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ease {
    /// Constant velocity between knots.
    Linear,
    /// Raised-cosine blend, zero velocity at every knot.
    Smooth,
}

/// Piecewise range trajectory through `(t, range)` knots. Outside the knot
/// span the range holds at the first/last knot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangePath {
    knots: Vec<(f64, f64)>,
    ease: Ease,
}

impl RangePath {
    pub fn new(knots: Vec<(f64, f64)>, ease: Ease) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::invalid("range path needs at least one knot"));
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::invalid("range path knot times must increase"));
        }
        Ok(Self { knots, ease })
    }

    pub fn constant(range_m: f64) -> Self {
        Self { knots: vec![(0.0, range_m)], ease: Ease::Linear }
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn at(&self, t: f64) -> f64 {
        let k = &self.knots;
        if t <= k[0].0 {
            return k[0].1;
        }
        let i = k.partition_point(|&(kt, _)| kt <= t);
        if i >= k.len() {
            return k[k.len() - 1].1;
        }
        let (t0, r0) = k[i - 1];
        let (t1, r1) = k[i];
        let u = (t - t0) / (t1 - t0);
        let w = match self.ease {
            Ease::Linear => u,
            Ease::Smooth => 0.5 - 0.5 * (PI * u).cos(),
        };
        r0 + (r1 - r0) * w
    }
}

/// Trapezoidal activity gate with raised-cosine ramps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub start_s: f64,
    pub end_s: f64,
    pub ramp_s: f64,
}

impl Envelope {
    pub fn always() -> Self {
        Self { start_s: f64::NEG_INFINITY, end_s: f64::INFINITY, ramp_s: 0.0 }
    }

    pub fn at(&self, t: f64) -> f64 {
        if t <= self.start_s || t >= self.end_s {
            return 0.0;
        }
        let edge = (t - self.start_s).min(self.end_s - t);
        if self.ramp_s <= 0.0 || edge >= self.ramp_s {
            1.0
        } else {
            0.5 - 0.5 * (PI * edge / self.ramp_s).cos()
        }
    }
}

/// Sinusoidal range oscillation `amplitude * gate(t) * sin(2π f t + φ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Oscillator {
    pub amplitude_m: f64,
    pub freq_hz: f64,
    pub phase_rad: f64,
    pub gate: Envelope,
}

impl Oscillator {
    pub fn at(&self, t: f64) -> f64 {
        self.amplitude_m * self.gate.at(t) * (2.0 * PI * self.freq_hz * t + self.phase_rad).sin()
    }
}

/// A single point scatterer: base path, optional oscillation, reflectivity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScattererTrack {
    pub path: RangePath,
    /// Constant offset added to the path (limbs sit slightly in front of or
    /// behind the torso).
    pub offset_m: f64,
    /// Gated oscillations summed on top of the path; empty for the torso.
    pub oscillations: Vec<Oscillator>,
    pub rcs_amp: f64,
}

impl ScattererTrack {
    pub fn range_at(&self, t: f64) -> f64 {
        self.path.at(t) + self.offset_m + self.oscillations.iter().map(|o| o.at(t)).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityProfile {
    pub activity: ActivityId,
    /// Torso first, then left arm, right arm, left leg, right leg.
    pub tracks: Vec<ScattererTrack>,
    pub duration_s: f64,
}

impl ActivityProfile {
    pub fn torso(&self) -> &ScattererTrack {
        &self.tracks[0]
    }

    pub fn limbs(&self) -> &[ScattererTrack] {
        &self.tracks[1..]
    }

    /// Torso range extremes sampled on a fine grid.
    pub fn torso_range_extent(&self) -> (f64, f64) {
        let n = 4000;
        (0..=n)
            .map(|i| self.torso().path.at(self.duration_s * i as f64 / n as f64))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)))
    }
}

/// Limb motion pattern for one phase of an activity.
#[derive(Clone, Copy)]
struct Limbs {
    arm_amp: f64,
    leg_amp: f64,
    freq: f64,
    /// Phase between the two arms (π = alternating).
    arm_split: f64,
    /// Phase between the two legs.
    leg_split: f64,
    gate: Envelope,
}

struct Draw<'a> {
    rng: &'a mut rng::Rng,
}

impl Draw<'_> {
    fn u(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.rng.random::<f64>()
    }
}

fn gait(freq: f64, start: f64, end: f64) -> Limbs {
    Limbs {
        arm_amp: 0.11,
        leg_amp: 0.2,
        freq,
        arm_split: PI,
        leg_split: PI,
        gate: Envelope { start_s: start, end_s: end, ramp_s: 0.4 },
    }
}

/// Short limb flexion during a posture transition: roughly one cycle.
fn transition(start: f64, dur: f64, arm_amp: f64, leg_amp: f64) -> Limbs {
    Limbs {
        arm_amp,
        leg_amp,
        freq: 1.0 / dur,
        arm_split: 0.4,
        leg_split: 0.3,
        gate: Envelope { start_s: start, end_s: start + dur, ramp_s: 0.25 * dur },
    }
}

/// Deterministic kinematic template for an activity.
///
/// `subject_scale` multiplies every limb oscillation amplitude; every other
/// parameter is drawn from the seeded stream and does not depend on it.
pub fn activity_profile(activity: ActivityId, subject_scale: f64, seed: u64) -> Result<ActivityProfile> {
    if !(0.8..=1.2).contains(&subject_scale) {
        return Err(Error::invalid(format!("subject_scale {subject_scale} outside [0.8, 1.2]")));
    }
    let mut stream = rng::stream(seed, &[rng::tag::PROFILE, activity.number() as u64]);
    let mut d = Draw { rng: &mut stream };
    let phase0 = d.u(0.0, 2.0 * PI);
    let cadence = d.u(0.8, 1.05);

    use ActivityId::*;
    let (duration, path, phases): (f64, RangePath, Vec<Limbs>) = match activity {
        SitDown | StandUp => {
            let duration = d.u(5.0, 6.5);
            let r0 = d.u(1.4, 3.0);
            let t0 = d.u(1.0, 2.0);
            let dur = d.u(1.3, 1.9);
            let shift = d.u(0.3, 0.45);
            // sitting moves the torso back (receding), standing forward
            let sign = if activity == SitDown { 1.0 } else { -1.0 };
            let path = RangePath::new(
                vec![(t0, r0), (t0 + dur, r0 + sign * shift)],
                Ease::Smooth,
            )?;
            (duration, path, vec![transition(t0, dur, 0.07, 0.12)])
        }
        StandUpToWalk => {
            let duration = d.u(6.0, 8.0);
            let r0 = d.u(3.3, 3.7);
            let t0 = d.u(0.6, 1.2);
            let dur = d.u(1.2, 1.6);
            let rise = d.u(0.25, 0.35);
            let t_walk = t0 + dur + d.u(0.1, 0.3);
            let walk_end = duration - d.u(0.2, 0.6);
            let r_end = d.u(0.9, 1.3);
            let path = RangePath::new(
                vec![(t0, r0), (t0 + dur, r0 - rise), (t_walk, r0 - rise), (walk_end, r_end)],
                Ease::Smooth,
            )?;
            (duration, path, vec![transition(t0, dur, 0.07, 0.12), gait(cadence, t_walk, walk_end)])
        }
        WalkToSit => {
            let duration = d.u(6.0, 8.0);
            let r0 = d.u(3.4, 3.8);
            let t_stop = d.u(3.0, 4.0);
            let r_stop = d.u(1.2, 1.6);
            let t_sit = t_stop + d.u(0.3, 0.7);
            let dur = d.u(1.3, 1.8);
            let shift = d.u(0.3, 0.45);
            let path = RangePath::new(
                vec![(0.0, r0), (t_stop, r_stop), (t_sit, r_stop), (t_sit + dur, r_stop + shift)],
                Ease::Smooth,
            )?;
            (duration, path, vec![gait(cadence, 0.0, t_stop), transition(t_sit, dur, 0.07, 0.12)])
        }
        WalkToFall => {
            let duration = d.u(5.5, 7.5);
            let r0 = d.u(3.4, 3.8);
            let t_fall = d.u(2.5, 3.5);
            let r_fall = d.u(1.8, 2.3);
            let fall_dur = d.u(0.5, 0.8);
            let drop = d.u(0.7, 1.0);
            let path = RangePath::new(
                vec![(0.0, r0), (t_fall, r_fall), (t_fall + fall_dur, r_fall - drop)],
                Ease::Smooth,
            )?;
            let flail = Limbs {
                arm_amp: 0.25,
                leg_amp: 0.15,
                freq: 1.0 / fall_dur,
                arm_split: 0.5,
                leg_split: 0.2,
                gate: Envelope { start_s: t_fall - 0.1, end_s: t_fall + fall_dur + 0.2, ramp_s: 0.15 },
            };
            (duration, path, vec![gait(cadence, 0.0, t_fall), flail])
        }
        StandUpFromGroundToWalk => {
            let duration = d.u(7.0, 9.0);
            let r0 = d.u(0.9, 1.2);
            let t0 = d.u(0.5, 1.0);
            let dur = d.u(2.2, 3.0);
            let rise = d.u(0.3, 0.45);
            let t_walk = t0 + dur + d.u(0.2, 0.4);
            let walk_end = duration - d.u(0.2, 0.6);
            let r_end = d.u(3.2, 3.7);
            // rising from the floor brings the chest up and back
            let path = RangePath::new(
                vec![(t0, r0), (t0 + dur, r0 + rise), (t_walk, r0 + rise), (walk_end, r_end)],
                Ease::Smooth,
            )?;
            (
                duration,
                path,
                vec![transition(t0, dur, 0.12, 0.18), gait(cadence, t_walk, walk_end)],
            )
        }
        BodyRotating => {
            let duration = d.u(5.0, 7.0);
            let r0 = d.u(1.5, 3.0);
            let freq = d.u(0.35, 0.55);
            let amp = d.u(0.12, 0.18);
            let n = (duration * 20.0) as usize;
            // torso centre swings back and forth with the rotation
            let knots = (0..=n)
                .map(|i| {
                    let t = duration * i as f64 / n as f64;
                    (t, r0 + amp * (2.0 * PI * freq * t + phase0).sin())
                })
                .collect();
            let path = RangePath::new(knots, Ease::Linear)?;
            let arms = Limbs {
                arm_amp: 0.32,
                leg_amp: 0.03,
                freq,
                arm_split: 0.35,
                leg_split: PI,
                gate: Envelope::always(),
            };
            (duration, path, vec![arms])
        }
        WalkBackAndForth => {
            let legs = 3usize;
            let duration = d.u(7.5, 9.5);
            let margin = d.u(0.2, 0.4);
            let leg_time = (duration - 2.0 * margin) / legs as f64;
            let start_far = d.u(0.0, 1.0) < 0.5;
            let mut knots = Vec::with_capacity(legs + 3);
            let mut far = start_far;
            knots.push((0.0, if far { 3.8 } else { 0.8 }));
            for k in 0..=legs {
                knots.push((margin + k as f64 * leg_time, if far { 3.8 } else { 0.8 }));
                far = !far;
            }
            knots.push((duration, knots.last().unwrap().1));
            knots.dedup_by(|b, a| b.0 <= a.0);
            let path = RangePath::new(knots, Ease::Linear)?;
            (duration, path, vec![gait(cadence, 0.0, duration)])
        }
        Punching => {
            let duration = d.u(5.0, 7.0);
            let r0 = d.u(1.3, 2.8);
            let path = RangePath::constant(r0);
            let punches = Limbs {
                arm_amp: 0.3,
                leg_amp: 0.02,
                freq: d.u(1.3, 1.8),
                arm_split: PI,
                leg_split: PI,
                gate: Envelope { start_s: d.u(0.3, 0.8), end_s: duration - d.u(0.3, 0.8), ramp_s: 0.2 },
            };
            (duration, path, vec![punches])
        }
        PickUpObject => {
            let duration = d.u(6.0, 8.0);
            let r0 = d.u(1.4, 3.0);
            let bend = d.u(0.3, 0.4);
            let t1 = d.u(0.6, 1.2);
            let down = d.u(1.0, 1.4);
            let hold = d.u(0.4, 0.8);
            let t2 = t1 + 2.0 * down + hold + d.u(0.5, 1.0);
            let knots = vec![
                (t1, r0),
                (t1 + down, r0 - bend),
                (t1 + down + hold, r0 - bend),
                (t1 + 2.0 * down + hold, r0),
                (t2, r0),
                (t2 + down, r0 - bend),
                (t2 + down + hold, r0 - bend),
                (t2 + 2.0 * down + hold, r0),
            ];
            let path = RangePath::new(knots, Ease::Smooth)?;
            let reach = |s: f64| Limbs {
                arm_amp: 0.16,
                leg_amp: 0.05,
                freq: 0.5 / down,
                arm_split: 0.2,
                leg_split: 0.2,
                gate: Envelope { start_s: s, end_s: s + 2.0 * down + hold, ramp_s: 0.3 },
            };
            (duration, path, vec![reach(t1), reach(t2)])
        }
    };

    let torso = ScattererTrack { path: path.clone(), offset_m: 0.0, oscillations: vec![], rcs_amp: TORSO_RCS };
    let mut tracks = vec![torso];
    for limb in 0..LIMB_TRACKS {
        let is_arm = limb < 2;
        let side = if limb % 2 == 0 { 0.0 } else { 1.0 };
        let jitter = d.u(-0.15, 0.15);
        let offset = if is_arm { d.u(-0.15, -0.05) } else { d.u(0.0, 0.08) };
        let oscillations = phases
            .iter()
            .map(|p| {
                let (amp, split) = if is_arm { (p.arm_amp, p.arm_split) } else { (p.leg_amp, p.leg_split) };
                Oscillator {
                    amplitude_m: amp * subject_scale,
                    freq_hz: p.freq,
                    // legs swing against the arms
                    phase_rad: phase0 + side * split + jitter + if is_arm { 0.0 } else { PI },
                    gate: p.gate,
                }
            })
            .collect();
        let rcs_amp = if is_arm { ARM_RCS } else { LEG_RCS };
        tracks.push(ScattererTrack { path: path.clone(), offset_m: offset, oscillations, rcs_amp });
    }
    Ok(ActivityProfile { activity, tracks, duration_s: duration })
}
