//! Vectors, rotations and rigid poses.
//!
//! World convention: right-handed, +X forward, +Y left, +Z up, meters.
//! Orientations are yaw (about +Z, positive turns left), pitch (positive
//! raises the nose) and roll, applied yaw then pitch then roll.

use core::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn length_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn length(self) -> f64 {
        libm::sqrt(self.length_squared())
    }

    /// Unit vector in the same direction. Zero vectors stay zero.
    pub fn normalized(self) -> Vec3 {
        let len = self.length();
        if len > 0.0 {
            self / len
        } else {
            self
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn min(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).length()
    }

    /// Distance in the ground (XY) plane.
    pub fn planar_distance(self, o: Vec3) -> f64 {
        libm::hypot(self.x - o.x, self.y - o.y)
    }

    pub fn lerp(self, o: Vec3, t: f64) -> Vec3 {
        self + (o - self) * t
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Proper rotation stored as a row-major 3x3 matrix.
///
/// Columns are the rotated body axes expressed in the parent frame, so
/// `rotate(Vec3::X)` is the body's forward direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation {
    m: [[f64; 3]; 3],
}

impl Default for Rotation {
    fn default() -> Self {
        Rotation::IDENTITY
    }
}

impl Rotation {
    pub const IDENTITY: Rotation = Rotation {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    pub fn about_z(angle: f64) -> Rotation {
        let (s, c) = (libm::sin(angle), libm::cos(angle));
        Rotation {
            m: [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// Exact rotation by `k` quarter turns about +Z (no rounding noise).
    pub fn quarter_turns(k: i32) -> Rotation {
        let (s, c) = match k.rem_euclid(4) {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        };
        Rotation {
            m: [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    fn about_y(angle: f64) -> Rotation {
        let (s, c) = (libm::sin(angle), libm::cos(angle));
        Rotation {
            m: [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]],
        }
    }

    fn about_x(angle: f64) -> Rotation {
        let (s, c) = (libm::sin(angle), libm::cos(angle));
        Rotation {
            m: [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]],
        }
    }

    pub fn from_ypr(yaw: f64, pitch: f64, roll: f64) -> Rotation {
        // Positive pitch lifts +X toward +Z, i.e. a negative turn about +Y.
        Rotation::about_z(yaw)
            .then(&Rotation::about_y(-pitch))
            .then(&Rotation::about_x(roll))
    }

    /// `(yaw, pitch, roll)` with pitch in `[-pi/2, pi/2]`.
    pub fn to_ypr(&self) -> (f64, f64, f64) {
        let m = &self.m;
        let pitch = libm::asin(m[2][0].clamp(-1.0, 1.0));
        let yaw = libm::atan2(m[1][0], m[0][0]);
        let roll = libm::atan2(m[2][1], m[2][2]);
        (yaw, pitch, roll)
    }

    /// `self * inner`: apply `inner` first, then `self`.
    pub fn then(&self, inner: &Rotation) -> Rotation {
        let a = &self.m;
        let b = &inner.m;
        let mut m = [[0.0; 3]; 3];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = a[r][0] * b[0][c] + a[r][1] * b[1][c] + a[r][2] * b[2][c];
            }
        }
        Rotation { m }
    }

    pub fn inverse(&self) -> Rotation {
        let m = &self.m;
        Rotation {
            m: [
                [m[0][0], m[1][0], m[2][0]],
                [m[0][1], m[1][1], m[2][1]],
                [m[0][2], m[1][2], m[2][2]],
            ],
        }
    }

    pub fn rotate(&self, v: Vec3) -> Vec3 {
        let m = &self.m;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    /// Applies the inverse rotation without forming it.
    pub fn unrotate(&self, v: Vec3) -> Vec3 {
        let m = &self.m;
        Vec3::new(
            m[0][0] * v.x + m[1][0] * v.y + m[2][0] * v.z,
            m[0][1] * v.x + m[1][1] * v.y + m[2][1] * v.z,
            m[0][2] * v.x + m[1][2] * v.y + m[2][2] * v.z,
        )
    }

    pub fn forward(&self) -> Vec3 {
        self.rotate(Vec3::X)
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Rotation) -> f64 {
        let mut d: f64 = 0.0;
        for r in 0..3 {
            for c in 0..3 {
                d = d.max((self.m[r][c] - other.m[r][c]).abs());
            }
        }
        d
    }
}

/// Rigid transform: rotate, then translate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "PoseRepr", into = "PoseRepr")]
pub struct Pose {
    pub position: Vec3,
    pub rotation: Rotation,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseRepr {
    position: Vec3,
    #[serde(default)]
    yaw: f64,
    #[serde(default)]
    pitch: f64,
    #[serde(default)]
    roll: f64,
}

impl From<PoseRepr> for Pose {
    fn from(r: PoseRepr) -> Self {
        Pose::new(r.position, r.yaw, r.pitch, r.roll)
    }
}

impl From<Pose> for PoseRepr {
    fn from(p: Pose) -> Self {
        let (yaw, pitch, roll) = p.rotation.to_ypr();
        PoseRepr {
            position: p.position,
            yaw,
            pitch,
            roll,
        }
    }
}

impl Pose {
    pub const IDENTITY: Pose = Pose {
        position: Vec3::ZERO,
        rotation: Rotation::IDENTITY,
    };

    pub fn new(position: Vec3, yaw: f64, pitch: f64, roll: f64) -> Pose {
        Pose {
            position,
            rotation: Rotation::from_ypr(yaw, pitch, roll),
        }
    }

    pub fn at(position: Vec3) -> Pose {
        Pose {
            position,
            rotation: Rotation::IDENTITY,
        }
    }

    pub fn from_parts(position: Vec3, rotation: Rotation) -> Pose {
        Pose { position, rotation }
    }

    pub fn ypr(&self) -> (f64, f64, f64) {
        self.rotation.to_ypr()
    }

    pub fn yaw(&self) -> f64 {
        self.ypr().0
    }

    /// Local point to parent frame.
    pub fn transform_point(&self, p: Vec3) -> Vec3 {
        self.rotation.rotate(p) + self.position
    }

    /// Parent-frame point to local frame.
    pub fn inverse_transform_point(&self, p: Vec3) -> Vec3 {
        self.rotation.unrotate(p - self.position)
    }

    pub fn transform_dir(&self, d: Vec3) -> Vec3 {
        self.rotation.rotate(d)
    }

    pub fn inverse_transform_dir(&self, d: Vec3) -> Vec3 {
        self.rotation.unrotate(d)
    }

    /// `self ∘ local`: the pose of a child frame given in `self`'s frame.
    pub fn compose(&self, local: &Pose) -> Pose {
        Pose {
            position: self.transform_point(local.position),
            rotation: self.rotation.then(&local.rotation),
        }
    }

    pub fn inverse(&self) -> Pose {
        let rotation = self.rotation.inverse();
        Pose {
            position: -rotation.rotate(self.position),
            rotation,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.is_finite() && self.rotation.is_finite()
    }
}

pub fn deg(radians: f64) -> f64 {
    radians * (180.0 / core::f64::consts::PI)
}

pub fn rad(degrees: f64) -> f64 {
    degrees * (core::f64::consts::PI / 180.0)
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    use core::f64::consts::{PI, TAU};
    let mut w = libm::fmod(a + PI, TAU);
    if w <= 0.0 {
        w += TAU;
    }
    w - PI
}
