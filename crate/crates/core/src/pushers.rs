//! Per-particle velocity and position kernels for the 2D2V push.
//!
//! The magnetic field only has a z component, so `v x B` is the rotation
//! `(vy * bz, -vx * bz)`.

/// In-plane vector.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
    #[inline]
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }
    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }
    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }
    /// `self x (bz z_hat)`
    #[inline]
    pub fn cross_z(self, bz: f64) -> Vec2 {
        Vec2::new(self.y * bz, -self.x * bz)
    }
    #[inline]
    pub fn scale(self, a: f64) -> Vec2 {
        Vec2::new(a * self.x, a * self.y)
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

/// `x + (dt/2) v`, not wrapped. Callers wrap with [`crate::particles::wrap`].
#[inline]
pub fn half_drift(x: Vec2, v: Vec2, dt: f64) -> Vec2 {
    x + v.scale(0.5 * dt)
}

/// Solves `v* = v + (dt/2) (E + v* x B)` in closed form.
#[inline]
pub fn implicit_magnetic_half_velocity(v: Vec2, e: Vec2, bz: f64, dt: f64) -> Vec2 {
    let h = 0.5 * dt;
    let a = h * bz;
    let ux = v.x + h * e.x;
    let uy = v.y + h * e.y;
    let inv = 1.0 / (1.0 + a * a);
    Vec2::new((ux + a * uy) * inv, (uy - a * ux) * inv)
}

/// Below this `|v_dagger|` the rescaling is skipped.
pub const DEGENERATE_SPEED: f64 = 1e-300;

/// Energy-correction factor `v^{n+1} = gamma * v_dagger`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaResult {
    pub gamma: f64,
    /// True when the target squared speed was negative (or `v_dagger` was
    /// degenerate) and `gamma` was replaced by 1.
    pub fallback: bool,
}

/// Rescales `v_dagger` to the closest vector whose squared speed is
/// `|v_n|^2 + 2 v_star . (v_dagger - v_n)`.
#[inline]
pub fn gamma_factor(v_n: Vec2, v_star: Vec2, v_dagger: Vec2) -> GammaResult {
    let target = v_n.norm_sq() + 2.0 * v_star.dot(v_dagger - v_n);
    let speed = v_dagger.norm();
    if target < 0.0 || speed < DEGENERATE_SPEED {
        GammaResult {
            gamma: 1.0,
            fallback: true,
        }
    } else {
        GammaResult {
            gamma: target.sqrt() / speed,
            fallback: false,
        }
    }
}

/// One step of the symmetric Boris push with `E` and `B` evaluated at the
/// half-drifted position. Returns the unwrapped `(x', v')`.
#[inline]
pub fn boris_step(x: Vec2, v: Vec2, e: Vec2, bz: f64, dt: f64) -> (Vec2, Vec2) {
    let x_half = half_drift(x, v, dt);
    // v^{n+1/2} solves the same linear system as the half-step velocity.
    let v_mid = implicit_magnetic_half_velocity(v, e, bz, dt);
    let v_new = v_mid.scale(2.0) - v;
    (half_drift(x_half, v_new, dt), v_new)
}
