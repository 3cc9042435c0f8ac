//! 2D kinematics, acoustic attenuation and point-elastic collisions.
//!
//! Agents are circles of radius [`AGENT_RADIUS`] moving in an unlimited
//! arena. An emitted signal attenuates with distance (inverse-square beyond
//! a plateau of twice the body radius) and with the length of its path
//! through the sensing agent's own body (self-shadowing).

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_4, TAU};
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// Body radius of every agent, in length units.
pub const AGENT_RADIUS: f64 = 4.0;

/// Shadow factor when the signal crosses a full body diameter.
pub const SHADOW_FLOOR: f64 = 0.1;

/// 2D point or vector in arena coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    /// Vector of length `r` at angle `theta` from the positive x axis.
    pub fn polar(r: f64, theta: f64) -> Self {
        Vec2::new(r * theta.cos(), r * theta.sin())
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Wrap an angle into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let wrapped = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs.
    if wrapped >= TAU {
        0.0
    } else {
        wrapped
    }
}

/// Pose and velocity of one circular body.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyPose {
    pub center: Vec2,
    /// Heading in radians, wrapped into `[0, 2π)`.
    pub heading: f64,
    pub radius: f64,
    pub velocity: Vec2,
}

impl BodyPose {
    /// Body at rest with the standard agent radius.
    pub fn at(center: Vec2, heading: f64) -> Self {
        BodyPose {
            center,
            heading: wrap_angle(heading),
            radius: AGENT_RADIUS,
            velocity: Vec2::ZERO,
        }
    }
}

/// World coordinates of the two front sensors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorGeometry {
    pub left: Vec2,
    pub right: Vec2,
}

/// Sensors sit on the circumference at ±45° from the heading.
pub fn sensor_positions(pose: &BodyPose) -> SensorGeometry {
    SensorGeometry {
        left: pose.center + Vec2::polar(pose.radius, pose.heading + FRAC_PI_4),
        right: pose.center + Vec2::polar(pose.radius, pose.heading - FRAC_PI_4),
    }
}

/// Which distance the full-strength plateau is measured on.
///
/// The rolloff itself is always inverse-square on the emitter-to-sensor
/// distance; only the plateau test differs. `CenterToCenter` introduces a
/// discontinuity at the plateau edge and exists for comparison runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlateauReference {
    #[default]
    EmitterToSensor,
    CenterToCenter,
}

fn plateau_radius() -> f64 {
    2.0 * AGENT_RADIUS
}

/// Inverse-square attenuation with a full-strength plateau out to `2R`,
/// both measured emitter-to-sensor. Continuous at the plateau edge.
pub fn distance_attenuation(source: Vec2, sensor: Vec2, strength: f64) -> f64 {
    let d = source.distance(sensor);
    let plateau = plateau_radius();
    if d <= plateau {
        strength
    } else {
        strength * (plateau / d).powi(2)
    }
}

/// Attenuation with a configurable plateau reference distance.
pub fn distance_attenuation_with(
    reference: PlateauReference,
    source: Vec2,
    sensor: Vec2,
    body_center: Vec2,
    strength: f64,
) -> f64 {
    match reference {
        PlateauReference::EmitterToSensor => distance_attenuation(source, sensor, strength),
        PlateauReference::CenterToCenter => {
            let plateau = plateau_radius();
            if source.distance(body_center) <= plateau {
                strength
            } else {
                let d = source.distance(sensor);
                if d <= plateau {
                    strength
                } else {
                    strength * (plateau / d).powi(2)
                }
            }
        }
    }
}

/// Length of the segment `[source, sensor]` inside the open disc of `body`,
/// clamped into `[0, 2R]`.
pub fn shielded_distance(source: Vec2, sensor: Vec2, body: &BodyPose) -> f64 {
    let segment = sensor - source;
    let length = segment.norm();
    if length == 0.0 {
        return 0.0;
    }
    // Solve |source + t*segment - center|^2 = R^2 for t in [0, 1].
    let offset = source - body.center;
    let a = segment.norm_sq();
    let b = 2.0 * segment.dot(offset);
    let c = offset.norm_sq() - body.radius * body.radius;
    let discriminant = b * b - 4.0 * a * c;
    if discriminant <= 0.0 {
        return 0.0;
    }
    let sqrt_disc = discriminant.sqrt();
    let t_enter = (-b - sqrt_disc) / (2.0 * a);
    let t_exit = (-b + sqrt_disc) / (2.0 * a);
    let lo = t_enter.max(0.0);
    let hi = t_exit.min(1.0);
    let chord = (hi - lo).max(0.0) * length;
    chord.min(2.0 * body.radius)
}

/// Linear shadowing factor: 1 at no shielding down to [`SHADOW_FLOOR`] at a
/// full body diameter of shielding.
pub fn shadow_factor(shielded: f64) -> f64 {
    let diameter = 2.0 * AGENT_RADIUS;
    assert!(
        (0.0..=diameter).contains(&shielded),
        "shielded distance {shielded} outside [0, {diameter}]"
    );
    1.0 - (1.0 - SHADOW_FLOOR) * shielded / diameter
}

/// Signal strength arriving at one sensor: distance attenuation times the
/// self-shadowing factor of the sensing body.
pub fn sensory_input(source: Vec2, strength: f64, sensor: Vec2, body: &BodyPose) -> f64 {
    distance_attenuation(source, sensor, strength) * shadow_factor(shielded_distance(source, sensor, body))
}

/// [`sensory_input`] with a configurable plateau reference.
pub fn sensory_input_with(
    reference: PlateauReference,
    source: Vec2,
    strength: f64,
    sensor: Vec2,
    body: &BodyPose,
) -> f64 {
    distance_attenuation_with(reference, source, sensor, body.center, strength)
        * shadow_factor(shielded_distance(source, sensor, body))
}

/// One explicit Euler step of motor-driven motion: heading first, then the
/// body translates along the new heading.
pub fn step_motion(pose: &BodyPose, linear_v: f64, angular_v: f64, dt: f64) -> BodyPose {
    let heading = wrap_angle(pose.heading + angular_v * dt);
    let velocity = Vec2::polar(linear_v, heading);
    BodyPose {
        center: pose.center + velocity * dt,
        heading,
        radius: pose.radius,
        velocity,
    }
}

/// One Euler step that keeps the body's current velocity vector (used for
/// the step after a collision exchange); the heading stays motor-driven.
pub fn coast(pose: &BodyPose, angular_v: f64, dt: f64) -> BodyPose {
    BodyPose {
        center: pose.center + pose.velocity * dt,
        heading: wrap_angle(pose.heading + angular_v * dt),
        radius: pose.radius,
        velocity: pose.velocity,
    }
}

/// Whether the two bodies' discs overlap.
pub fn overlapping(a: &BodyPose, b: &BodyPose) -> bool {
    a.center.distance(b.center) < a.radius + b.radius
}

/// Point-elastic collision: overlapping bodies exchange velocity vectors;
/// headings are untouched and total squared speed is conserved exactly.
pub fn resolve_collision(a: &BodyPose, b: &BodyPose) -> (BodyPose, BodyPose) {
    if overlapping(a, b) {
        let mut swapped_a = *a;
        let mut swapped_b = *b;
        swapped_a.velocity = b.velocity;
        swapped_b.velocity = a.velocity;
        (swapped_a, swapped_b)
    } else {
        (*a, *b)
    }
}
