use serde::{Deserialize, Serialize};

use super::state::PdGains;
use super::vec2::Vec2;

/// Normalised per-agent command `(v_x, v_y, v_theta, k_x, k_y)`, each
/// component in [-1, 1] before remapping.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ActionCommand {
    pub v_x: f64,
    pub v_y: f64,
    pub v_theta: f64,
    pub k_x: f64,
    pub k_y: f64,
}

impl ActionCommand {
    pub const DIM: usize = 5;

    pub fn from_slice(a: &[f64]) -> Self {
        debug_assert_eq!(a.len(), Self::DIM);
        Self { v_x: a[0], v_y: a[1], v_theta: a[2], k_x: a[3], k_y: a[4] }
    }

    pub fn to_array(self) -> [f64; 5] {
        [self.v_x, self.v_y, self.v_theta, self.k_x, self.k_y]
    }

    /// Translational command after the square-to-disc remap, ego frame.
    pub fn base_velocity(&self) -> Vec2 {
        let (x, y) = remap_unit_disk(self.v_x, self.v_y);
        Vec2::new(x, y)
    }

    /// Kick command after the square-to-disc remap, ego frame.
    pub fn kick(&self) -> Vec2 {
        let (x, y) = remap_unit_disk(self.k_x, self.k_y);
        Vec2::new(x, y)
    }

    pub fn turn(&self) -> f64 {
        self.v_theta.clamp(-1.0, 1.0)
    }
}

/// Maps the square [-1, 1]^2 onto the closed unit disc:
/// `x' = x sqrt(1 - y^2/2)`, `y' = y sqrt(1 - x^2/2)`.
///
/// Inputs outside the square are clamped first.
pub fn remap_unit_disk(x: f64, y: f64) -> (f64, f64) {
    debug_assert!(
        x.is_nan() || y.is_nan() || (x.abs() <= 1.0 + 1e-9 && y.abs() <= 1.0 + 1e-9),
        "remap input outside [-1, 1]: ({x}, {y})"
    );
    let x = x.clamp(-1.0, 1.0);
    let y = y.clamp(-1.0, 1.0);
    (x * (1.0 - 0.5 * y * y).sqrt(), y * (1.0 - 0.5 * x * x).sqrt())
}

/// Inverse of [`remap_unit_disk`] for points in the closed unit disc.
/// Points outside the disc are projected onto it first.
pub fn inverse_remap_unit_disk(u: f64, v: f64) -> (f64, f64) {
    let p = Vec2::new(u, v).clamp_norm(1.0);
    let (u, v) = (p.x, p.y);
    let r2 = 2.0_f64.sqrt();
    let d = u * u - v * v;
    let sx = |s: f64| s.max(0.0).sqrt();
    let x = 0.5 * sx(2.0 + d + 2.0 * r2 * u) - 0.5 * sx(2.0 + d - 2.0 * r2 * u);
    let y = 0.5 * sx(2.0 - d + 2.0 * r2 * v) - 0.5 * sx(2.0 - d - 2.0 * r2 * v);
    (x.clamp(-1.0, 1.0), y.clamp(-1.0, 1.0))
}

/// Velocity triple in the world frame: (v_x, v_y) m/s and omega rad/s.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Twist {
    pub linear: Vec2,
    pub angular: f64,
}

/// Force/torque produced by [`pd_track`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Wrench {
    pub force: Vec2,
    pub torque: f64,
}

/// Velocity tracker: proportional on the velocity error, derivative on the
/// measured acceleration (no derivative kick on command changes). Output is
/// saturated at the configured force and torque limits.
pub fn pd_track(command: Twist, current: Twist, measured_rate: Twist, gains: &PdGains) -> Wrench {
    let force = (command.linear - current.linear) * gains.kp_linear - measured_rate.linear * gains.kd_linear;
    let torque = gains.kp_angular * (command.angular - current.angular) - gains.kd_angular * measured_rate.angular;
    Wrench {
        force: force.clamp_norm(gains.max_force),
        torque: torque.clamp(-gains.max_torque, gains.max_torque),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn remap_examples() {
        assert_eq!(remap_unit_disk(1.0, 0.0), (1.0, 0.0));
        assert_eq!(remap_unit_disk(0.0, 0.0), (0.0, 0.0));
        let (x, y) = remap_unit_disk(1.0, 1.0);
        assert!((x - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((y - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((x.hypot(y) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pd_zero_error_zero_output() {
        let t = Twist { linear: Vec2::new(0.3, -0.2), angular: 0.7 };
        let w = pd_track(t, t, Twist::default(), &PdGains::default());
        assert_eq!(w, Wrench::default());
    }

    #[test]
    fn pd_saturates() {
        let g = PdGains::default();
        let w = pd_track(
            Twist { linear: Vec2::new(100.0, 0.0), angular: 100.0 },
            Twist::default(),
            Twist::default(),
            &g,
        );
        assert!((w.force.norm() - g.max_force).abs() < 1e-12);
        assert_eq!(w.torque, g.max_torque);
    }

    proptest! {
        #[test]
        fn remap_stays_in_disc(x in -1.0f64..=1.0, y in -1.0f64..=1.0) {
            let (a, b) = remap_unit_disk(x, y);
            prop_assert!(a.hypot(b) <= 1.0 + 1e-12);
            prop_assert_eq!(a.signum() * x.signum() >= 0.0, true);
            prop_assert_eq!(b.signum() * y.signum() >= 0.0, true);
        }

        #[test]
        fn remap_monotone_in_each_coordinate(x1 in -1.0f64..=1.0, x2 in -1.0f64..=1.0, y in -1.0f64..=1.0) {
            let (a1, _) = remap_unit_disk(x1, y);
            let (a2, _) = remap_unit_disk(x2, y);
            if x1 < x2 { prop_assert!(a1 <= a2); }
            let (_, b1) = remap_unit_disk(y, x1);
            let (_, b2) = remap_unit_disk(y, x2);
            if x1 < x2 { prop_assert!(b1 <= b2); }
        }

        #[test]
        fn inverse_remap_round_trips(x in -1.0f64..=1.0, y in -1.0f64..=1.0) {
            let (u, v) = remap_unit_disk(x, y);
            let (x2, y2) = inverse_remap_unit_disk(u, v);
            prop_assert!((x - x2).abs() < 1e-6, "{} vs {}", x, x2);
            prop_assert!((y - y2).abs() < 1e-6, "{} vs {}", y, y2);
        }
    }
}
