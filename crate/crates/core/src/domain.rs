//! Compact planar regions with parameterized smooth boundaries.
//!
//! Boundaries are closed counterclockwise curves `theta -> z(theta)` on
//! `[0, 2 pi)`. The signed clearance is positive inside and vanishes on the
//! boundary; it is only used to detect boundary crossings, so it does not
//! have to be the exact Euclidean distance.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    Disk {
        center: [f64; 2],
        radius: f64,
    },
    Ellipse {
        center: [f64; 2],
        semi_x: f64,
        semi_y: f64,
    },
    /// Rectangle `[-half_length, half_length] x [-radius, radius]` capped by
    /// half disks; parameterized by normalized arc length.
    Stadium {
        half_length: f64,
        radius: f64,
    },
    /// `r(theta) = radius (1 + amplitude cos(lobes theta))`
    Star {
        radius: f64,
        amplitude: f64,
        lobes: u32,
    },
}

/// A planar domain with a boundary node mesh of `boundary_nodes` points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    #[serde(flatten)]
    pub shape: Shape,
    pub boundary_nodes: usize,
}

/// A boundary node: parameter and position.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryNode {
    pub theta: f64,
    pub point: [f64; 2],
}

impl Domain {
    pub fn new(shape: Shape, boundary_nodes: usize) -> Result<Self> {
        let d = Domain {
            shape,
            boundary_nodes,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn unit_disk(boundary_nodes: usize) -> Self {
        Domain {
            shape: Shape::Disk {
                center: [0.0, 0.0],
                radius: 1.0,
            },
            boundary_nodes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match &self.shape {
            Shape::Disk { radius, .. } => *radius > 0.0,
            Shape::Ellipse { semi_x, semi_y, .. } => *semi_x > 0.0 && *semi_y > 0.0,
            Shape::Stadium {
                half_length,
                radius,
            } => *half_length >= 0.0 && *radius > 0.0,
            Shape::Star {
                radius,
                amplitude,
                lobes,
            } => *radius > 0.0 && amplitude.abs() < 1.0 && *lobes >= 1,
        };
        if !ok {
            return Err(Error::Input(format!("invalid domain {:?}", self.shape)));
        }
        if self.boundary_nodes < 8 {
            return Err(Error::Input("at least 8 boundary nodes required".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        2
    }

    pub fn is_convex(&self) -> bool {
        match &self.shape {
            Shape::Star {
                amplitude, lobes, ..
            } => {
                // curvature of r(t) stays positive iff r^2 + 2 r'^2 - r r'' > 0
                let k = *lobes as f64;
                amplitude.abs() * (k * k - 1.0) <= 1.0 - amplitude.abs()
            }
            _ => true,
        }
    }

    /// Boundary point `z(theta)`.
    pub fn point(&self, theta: f64) -> [f64; 2] {
        match &self.shape {
            Shape::Disk { center, radius } => {
                [center[0] + radius * theta.cos(), center[1] + radius * theta.sin()]
            }
            Shape::Ellipse {
                center,
                semi_x,
                semi_y,
            } => [center[0] + semi_x * theta.cos(), center[1] + semi_y * theta.sin()],
            Shape::Stadium {
                half_length,
                radius,
            } => stadium_point(*half_length, *radius, theta).0,
            Shape::Star {
                radius,
                amplitude,
                lobes,
            } => {
                let r = radius * (1.0 + amplitude * (*lobes as f64 * theta).cos());
                [r * theta.cos(), r * theta.sin()]
            }
        }
    }

    /// `dz / dtheta`
    pub fn tangent(&self, theta: f64) -> [f64; 2] {
        match &self.shape {
            Shape::Disk { radius, .. } => [-radius * theta.sin(), radius * theta.cos()],
            Shape::Ellipse { semi_x, semi_y, .. } => [-semi_x * theta.sin(), semi_y * theta.cos()],
            Shape::Stadium {
                half_length,
                radius,
            } => stadium_point(*half_length, *radius, theta).1,
            Shape::Star {
                radius,
                amplitude,
                lobes,
            } => {
                let k = *lobes as f64;
                let r = radius * (1.0 + amplitude * (k * theta).cos());
                let dr = -radius * amplitude * k * (k * theta).sin();
                [
                    dr * theta.cos() - r * theta.sin(),
                    dr * theta.sin() + r * theta.cos(),
                ]
            }
        }
    }

    /// Euclidean unit outward normal at `z(theta)`.
    pub fn outward_normal(&self, theta: f64) -> [f64; 2] {
        let t = self.tangent(theta);
        let n = (t[0] * t[0] + t[1] * t[1]).sqrt();
        [t[1] / n, -t[0] / n]
    }

    /// Signed clearance: positive inside, zero on the boundary.
    pub fn clearance(&self, x: &[f64]) -> f64 {
        match &self.shape {
            Shape::Disk { center, radius } => {
                radius - ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)).sqrt()
            }
            Shape::Ellipse {
                center,
                semi_x,
                semi_y,
            } => {
                let u = (x[0] - center[0]) / semi_x;
                let v = (x[1] - center[1]) / semi_y;
                (1.0 - (u * u + v * v).sqrt()) * semi_x.min(*semi_y)
            }
            Shape::Stadium {
                half_length,
                radius,
            } => {
                let px = x[0].clamp(-half_length, *half_length);
                radius - ((x[0] - px).powi(2) + x[1] * x[1]).sqrt()
            }
            Shape::Star {
                radius,
                amplitude,
                lobes,
            } => {
                let th = x[1].atan2(x[0]);
                radius * (1.0 + amplitude * (*lobes as f64 * th).cos()) - (x[0] * x[0] + x[1] * x[1]).sqrt()
            }
        }
    }

    pub fn inside(&self, x: &[f64]) -> bool {
        self.clearance(x) >= 0.0
    }

    /// Boundary parameter of the point of `∂M` associated with `x`
    /// (radial or elliptic angle, nearest point for the stadium).
    pub fn param_of(&self, x: &[f64]) -> f64 {
        let th = match &self.shape {
            Shape::Disk { center, .. } => (x[1] - center[1]).atan2(x[0] - center[0]),
            Shape::Ellipse {
                center,
                semi_x,
                semi_y,
            } => ((x[1] - center[1]) / semi_y).atan2((x[0] - center[0]) / semi_x),
            Shape::Star { .. } => x[1].atan2(x[0]),
            Shape::Stadium {
                half_length,
                radius,
            } => {
                let per = stadium_perimeter(*half_length, *radius);
                let l = *half_length;
                let r = *radius;
                let s = if x[0] > l {
                    let phi = x[1].atan2(x[0] - l);
                    if phi >= 0.0 {
                        r * phi
                    } else {
                        per + r * phi
                    }
                } else if x[0] < -l {
                    let phi = x[1].atan2(x[0] + l).rem_euclid(TAU);
                    0.5 * PI * r + 2.0 * l + r * (phi - 0.5 * PI)
                } else if x[1] >= 0.0 {
                    0.5 * PI * r + (l - x[0])
                } else {
                    1.5 * PI * r + 2.0 * l + (x[0] + l)
                };
                TAU * s / per
            }
        };
        th.rem_euclid(TAU)
    }

    /// Boundary mesh: `boundary_nodes` parameters equally spaced from 0, counterclockwise.
    pub fn boundary_mesh(&self) -> Vec<BoundaryNode> {
        (0..self.boundary_nodes)
            .map(|i| {
                let theta = TAU * i as f64 / self.boundary_nodes as f64;
                BoundaryNode {
                    theta,
                    point: self.point(theta),
                }
            })
            .collect()
    }

    /// Axis-aligned bounding box `([xmin, ymin], [xmax, ymax])`.
    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for i in 0..2048 {
            let p = self.point(TAU * i as f64 / 2048.0);
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        // curvature bulge between samples
        let pad = 1e-3 * (hi[0] - lo[0]).max(hi[1] - lo[1]);
        ([lo[0] - pad, lo[1] - pad], [hi[0] + pad, hi[1] + pad])
    }

    /// Euclidean diameter estimated on a dense boundary sample.
    pub fn diameter(&self) -> f64 {
        match &self.shape {
            Shape::Disk { radius, .. } => 2.0 * radius,
            Shape::Ellipse { semi_x, semi_y, .. } => 2.0 * semi_x.max(*semi_y),
            Shape::Stadium {
                half_length,
                radius,
            } => 2.0 * (half_length + radius),
            Shape::Star { .. } => {
                let pts: Vec<[f64; 2]> = (0..720).map(|i| self.point(TAU * i as f64 / 720.0)).collect();
                let mut d: f64 = 0.0;
                for a in &pts {
                    for b in &pts {
                        d = d.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
                    }
                }
                d
            }
        }
    }

    /// Uniform random interior points with clearance at least `margin`.
    pub fn interior_samples(&self, count: usize, margin: f64, seed: u64) -> Vec<[f64; 2]> {
        let (lo, hi) = self.bounding_box();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let p = [rng.gen_range(lo[0]..hi[0]), rng.gen_range(lo[1]..hi[1])];
            if self.clearance(&p) >= margin {
                out.push(p);
            }
        }
        out
    }

    /// True if the straight segment stays inside up to `slack`.
    pub fn segment_inside(&self, a: &[f64], b: &[f64], spacing: f64, slack: f64) -> bool {
        if self.is_convex() {
            return true;
        }
        let len = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        let n = (len / spacing).ceil().max(1.0) as usize;
        (0..=n).all(|i| {
            let t = i as f64 / n as f64;
            let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            self.clearance(&p) >= -slack
        })
    }
}

fn stadium_perimeter(l: f64, r: f64) -> f64 {
    4.0 * l + TAU * r
}

fn stadium_point(l: f64, r: f64, theta: f64) -> ([f64; 2], [f64; 2]) {
    let per = stadium_perimeter(l, r);
    let s = theta.rem_euclid(TAU) / TAU * per;
    let ds = per / TAU;
    let q = 0.5 * PI * r;
    if s < q {
        let phi = s / r;
        ([l + r * phi.cos(), r * phi.sin()], [-phi.sin() * ds, phi.cos() * ds])
    } else if s < q + 2.0 * l {
        ([l - (s - q), r], [-ds, 0.0])
    } else if s < 3.0 * q + 2.0 * l {
        let phi = 0.5 * PI + (s - q - 2.0 * l) / r;
        ([-l + r * phi.cos(), r * phi.sin()], [-phi.sin() * ds, phi.cos() * ds])
    } else if s < 3.0 * q + 4.0 * l {
        ([-l + (s - 3.0 * q - 2.0 * l), -r], [ds, 0.0])
    } else {
        let phi = -0.5 * PI + (s - 3.0 * q - 4.0 * l) / r;
        ([l + r * phi.cos(), r * phi.sin()], [-phi.sin() * ds, phi.cos() * ds])
    }
}

/// A ball in 3-D, used for elastic travel-time tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: [f64; 3],
    pub radius: f64,
}

impl Ball {
    pub fn boundary_nodes(&self, count: usize) -> Vec<[f64; 3]> {
        crate::numeric::fibonacci_sphere(count)
            .into_iter()
            .map(|u| {
                [
                    self.center[0] + self.radius * u[0],
                    self.center[1] + self.radius * u[1],
                    self.center[2] + self.radius * u[2],
                ]
            })
            .collect()
    }

    pub fn clearance(&self, x: &[f64]) -> f64 {
        self.radius - crate::numeric::distance(&self.center, x)
    }
}
