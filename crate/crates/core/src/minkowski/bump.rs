use serde::{Deserialize, Serialize};

/// Smooth compactly supported profile on `(-1, 1)`, equal to 1 at 0.
#[inline]
pub fn smooth_bump(t: f64) -> f64 {
    let a = t * t;
    if a >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - a)).exp()
    }
}

/// A bump `alpha(x, y)` on the 2-D unit sphere bundle: a product of a radial
/// profile around `center` in the base and an angular profile around
/// `angle` in the fiber. Depends on `y` only through its direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionalBump {
    pub center: Vec<f64>,
    pub radius: f64,
    /// Direction angle of the bump peak (radians).
    pub angle: f64,
    pub half_width: f64,
}

impl DirectionalBump {
    #[inline]
    pub fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        let dx = x[0] - self.center[0];
        let dy = x[1] - self.center[1];
        let r = (dx * dx + dy * dy).sqrt() / self.radius;
        if r >= 1.0 {
            return 0.0;
        }
        let t = crate::numeric::wrap_angle(y[1].atan2(y[0]) - self.angle) / self.half_width;
        smooth_bump(r) * smooth_bump(t)
    }

    pub fn flipped(&self) -> Self {
        DirectionalBump {
            angle: crate::numeric::wrap_angle(self.angle + std::f64::consts::PI),
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_is_compact_and_peaked() {
        assert_eq!(smooth_bump(1.0), 0.0);
        assert_eq!(smooth_bump(-1.5), 0.0);
        assert!((smooth_bump(0.0) - 1.0).abs() < 1e-15);
        assert!(smooth_bump(0.999) < 1e-200);
    }

    #[test]
    fn direction_only_dependence() {
        let b = DirectionalBump {
            center: vec![0.0, 0.0],
            radius: 0.5,
            angle: 0.3,
            half_width: 0.4,
        };
        let y = [0.3f64.cos(), 0.3f64.sin()];
        let y2 = [5.0 * y[0], 5.0 * y[1]];
        assert_eq!(b.value(&[0.1, 0.0], &y), b.value(&[0.1, 0.0], &y2));
        assert_eq!(b.value(&[0.6, 0.0], &y), 0.0);
    }
}
