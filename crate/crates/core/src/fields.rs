//! Divergence-free vector fields generated from stream functions.
//!
//! Every field is `v = (−∂_y ψ, ∂_x ψ)`, so `div v = 0` holds identically
//! and `v·n = 0` on `∂Ω` whenever ψ is constant on the boundary.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::{Mat2, Vec2};

/// Stream function value together with its first and second derivatives.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StreamDerivatives {
    pub psi: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
}

impl StreamDerivatives {
    #[inline]
    pub fn velocity(&self) -> Vec2 {
        Vec2::new(-self.dy, self.dx)
    }

    /// `(∇v)_{ij} = ∂_j v_i`.
    #[inline]
    pub fn velocity_gradient(&self) -> Mat2 {
        Mat2::new(-self.dxy, -self.dyy, self.dxx, self.dxy)
    }
}

/// User-supplied stream function for `custom` velocities.
pub trait StreamFunction: Send + Sync {
    fn derivatives(&self, x: Vec2, t: f64) -> StreamDerivatives;

    /// Whether ψ is independent of time.
    fn autonomous(&self) -> bool {
        true
    }
}

/// Built-in velocity kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityKind {
    Zero,
    SingleVortex,
    DoubleVortex,
    Custom,
}

/// Divergence-free velocity `v = ∇^⊥ψ`.
#[derive(Clone)]
pub struct StreamVelocity {
    kind: VelocityKind,
    amplitude: f64,
    custom: Option<Arc<dyn StreamFunction>>,
}

impl fmt::Debug for StreamVelocity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StreamVelocity")
            .field("kind", &self.kind)
            .field("amplitude", &self.amplitude)
            .finish()
    }
}

impl StreamVelocity {
    pub fn zero() -> Self {
        Self { kind: VelocityKind::Zero, amplitude: 0.0, custom: None }
    }

    /// `ψ = A sin²(πx) sin²(πy)`: one vortex centered at (1/2, 1/2).
    pub fn single_vortex(amplitude: f64) -> Self {
        Self { kind: VelocityKind::SingleVortex, amplitude, custom: None }
    }

    /// `ψ = A sin(2πx) sin(πy)`: two counter-rotating cells.
    pub fn double_vortex(amplitude: f64) -> Self {
        Self { kind: VelocityKind::DoubleVortex, amplitude, custom: None }
    }

    pub fn custom(stream: Arc<dyn StreamFunction>) -> Self {
        Self { kind: VelocityKind::Custom, amplitude: 1.0, custom: Some(stream) }
    }

    /// Build a built-in kind from its config name.
    pub fn from_kind(kind: VelocityKind, amplitude: f64) -> crate::Result<Self> {
        match kind {
            VelocityKind::Zero => Ok(Self::zero()),
            VelocityKind::SingleVortex => Ok(Self::single_vortex(amplitude)),
            VelocityKind::DoubleVortex => Ok(Self::double_vortex(amplitude)),
            VelocityKind::Custom => Err(crate::Error::Config(
                "custom velocities must be constructed in code".into(),
            )),
        }
    }

    pub fn kind(&self) -> VelocityKind {
        self.kind
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn is_zero(&self) -> bool {
        self.kind == VelocityKind::Zero || self.amplitude == 0.0
    }

    pub fn autonomous(&self) -> bool {
        match &self.custom {
            Some(s) => s.autonomous(),
            None => true,
        }
    }

    /// Upper bound for `|v|` on the box.
    pub fn max_speed(&self) -> f64 {
        let a = self.amplitude.abs();
        match self.kind {
            VelocityKind::Zero => 0.0,
            VelocityKind::SingleVortex => PI * a,
            // |∇ψ|² = π²A²(4cos²(2πx)sin²(πy) + sin²(2πx)cos²(πy)) ≤ 4π²A²
            VelocityKind::DoubleVortex => 2.0 * PI * a,
            VelocityKind::Custom => {
                // Sampled bound, padded.
                let s = self.custom.as_ref().expect("custom stream");
                let mut m: f64 = 0.0;
                for j in 0..=64 {
                    for i in 0..=64 {
                        let p = Vec2::new(i as f64 / 64.0, j as f64 / 64.0);
                        m = m.max(s.derivatives(p, 0.0).velocity().norm());
                    }
                }
                1.25 * m
            }
        }
    }

    #[inline]
    pub fn stream(&self, x: Vec2, t: f64) -> StreamDerivatives {
        let a = self.amplitude;
        match self.kind {
            VelocityKind::Zero => StreamDerivatives::default(),
            VelocityKind::SingleVortex => {
                let (sx, cx) = (PI * x.x).sin_cos();
                let (sy, cy) = (PI * x.y).sin_cos();
                let (sx2, sy2) = (sx * sx, sy * sy);
                // d/dx sin²(πx) = π sin(2πx) = 2π sx cx; d²/dx² = 2π² cos(2πx)
                let d1x = 2.0 * PI * sx * cx;
                let d1y = 2.0 * PI * sy * cy;
                let d2x = 2.0 * PI * PI * (cx * cx - sx2);
                let d2y = 2.0 * PI * PI * (cy * cy - sy2);
                StreamDerivatives {
                    psi: a * sx2 * sy2,
                    dx: a * d1x * sy2,
                    dy: a * sx2 * d1y,
                    dxx: a * d2x * sy2,
                    dxy: a * d1x * d1y,
                    dyy: a * sx2 * d2y,
                }
            }
            VelocityKind::DoubleVortex => {
                let (s2x, c2x) = (2.0 * PI * x.x).sin_cos();
                let (sy, cy) = (PI * x.y).sin_cos();
                StreamDerivatives {
                    psi: a * s2x * sy,
                    dx: a * 2.0 * PI * c2x * sy,
                    dy: a * PI * s2x * cy,
                    dxx: -a * 4.0 * PI * PI * s2x * sy,
                    dxy: a * 2.0 * PI * PI * c2x * cy,
                    dyy: -a * PI * PI * s2x * sy,
                }
            }
            VelocityKind::Custom => self.custom.as_ref().expect("custom stream").derivatives(x, t),
        }
    }

    #[inline]
    pub fn velocity_at(&self, x: Vec2, t: f64) -> Vec2 {
        if self.kind == VelocityKind::Zero {
            return Vec2::zeros();
        }
        let a = self.amplitude;
        match self.kind {
            VelocityKind::SingleVortex => {
                let (sx, cx) = (PI * x.x).sin_cos();
                let (sy, cy) = (PI * x.y).sin_cos();
                let two_pi_a = 2.0 * PI * a;
                Vec2::new(-two_pi_a * sx * sx * sy * cy, two_pi_a * sx * cx * sy * sy)
            }
            _ => self.stream(x, t).velocity(),
        }
    }

    #[inline]
    pub fn velocity_grad_at(&self, x: Vec2, t: f64) -> Mat2 {
        self.stream(x, t).velocity_gradient()
    }
}

/// Divergence-free test field `φ = ∇^⊥ψ_φ` with `ψ_φ` a product of smooth
/// compactly supported bumps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestField {
    pub center: [f64; 2],
    pub halfwidth: f64,
    pub amplitude: f64,
}

/// `b(q) = exp(1 − 1/(1 − q²))` on `|q| < 1`, with first and second derivatives.
#[inline]
fn bump(q: f64) -> (f64, f64, f64) {
    if q.abs() >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let w = 1.0 - q * q;
    let b = (1.0 - 1.0 / w).exp();
    let g1 = -2.0 * q / (w * w);
    let g2 = -2.0 / (w * w) - 8.0 * q * q / (w * w * w);
    (b, g1 * b, (g2 + g1 * g1) * b)
}

impl TestField {
    pub fn new(center: Vec2, halfwidth: f64, amplitude: f64) -> Self {
        Self { center: [center.x, center.y], halfwidth, amplitude }
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new(self.center[0], self.center[1])
    }

    /// Support rectangle `(min corner, max corner)`.
    pub fn support_box(&self) -> (Vec2, Vec2) {
        let c = self.center();
        let w = Vec2::new(self.halfwidth, self.halfwidth);
        (c - w, c + w)
    }

    pub fn stream(&self, x: Vec2) -> StreamDerivatives {
        let w = self.halfwidth;
        let qx = (x.x - self.center[0]) / w;
        let qy = (x.y - self.center[1]) / w;
        if qx.abs() >= 1.0 || qy.abs() >= 1.0 {
            return StreamDerivatives::default();
        }
        let (bx, bx1, bx2) = bump(qx);
        let (by, by1, by2) = bump(qy);
        let a = self.amplitude;
        StreamDerivatives {
            psi: a * bx * by,
            dx: a * bx1 * by / w,
            dy: a * bx * by1 / w,
            dxx: a * bx2 * by / (w * w),
            dxy: a * bx1 * by1 / (w * w),
            dyy: a * bx * by2 / (w * w),
        }
    }

    #[inline]
    pub fn testfield_at(&self, x: Vec2) -> Vec2 {
        self.stream(x).velocity()
    }

    #[inline]
    pub fn testfield_grad_at(&self, x: Vec2) -> Mat2 {
        self.stream(x).velocity_gradient()
    }

    /// `n⊗n : ∇φ` at `x`.
    #[inline]
    pub fn normal_stress(&self, x: Vec2, n: Vec2) -> f64 {
        let s = self.stream(x);
        (n.y * n.y - n.x * n.x) * s.dxy + n.x * n.y * (s.dxx - s.dyy)
    }

    /// Scale the amplitude (the functionals are linear in φ).
    pub fn scaled(&self, factor: f64) -> Self {
        Self { amplitude: self.amplitude * factor, ..*self }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_points() -> Vec<Vec2> {
        // Deterministic scatter (golden-ratio sequence).
        let g = 0.618_033_988_749_894_9;
        (0..200).map(|k| Vec2::new((k as f64 * g).fract(), (k as f64 * g * g + 0.3).fract())).collect()
    }

    #[test]
    fn zero_velocity_everywhere() {
        let v = StreamVelocity::zero();
        for p in sample_points() {
            assert_eq!(v.velocity_at(p, 0.3), Vec2::zeros());
        }
    }

    #[test]
    fn built_ins_are_tangential_and_divergence_free() {
        for v in [StreamVelocity::single_vortex(1.0), StreamVelocity::double_vortex(0.7)] {
            for k in 0..=100 {
                let s = k as f64 / 100.0;
                for (p, n) in [
                    (Vec2::new(0.0, s), Vec2::new(-1.0, 0.0)),
                    (Vec2::new(1.0, s), Vec2::new(1.0, 0.0)),
                    (Vec2::new(s, 0.0), Vec2::new(0.0, -1.0)),
                    (Vec2::new(s, 1.0), Vec2::new(0.0, 1.0)),
                ] {
                    assert!(v.velocity_at(p, 0.0).dot(&n).abs() <= 1e-14);
                }
            }
            for p in sample_points() {
                assert!(v.velocity_grad_at(p, 0.0).trace().abs() <= 1e-14);
            }
        }
        let sv = StreamVelocity::single_vortex(1.0);
        assert!(sv.velocity_at(Vec2::new(1.0, 0.37), 0.0).norm() < 1e-14);
        assert!(sv.velocity_at(Vec2::new(0.5, 0.5), 0.0).norm() < 1e-15);
    }

    #[test]
    fn velocity_fast_path_matches_stream() {
        let v = StreamVelocity::single_vortex(1.3);
        for p in sample_points() {
            assert!((v.velocity_at(p, 0.0) - v.stream(p, 0.0).velocity()).norm() < 1e-13);
        }
    }

    fn measured_order(f: impl Fn(f64) -> f64) -> f64 {
        let (e1, e2) = (f(1e-2), f(5e-3));
        (e1 / e2).log2()
    }

    #[test]
    fn velocity_gradient_matches_finite_differences() {
        for v in [StreamVelocity::single_vortex(1.0), StreamVelocity::double_vortex(1.0)] {
            let err = |h: f64| {
                let mut worst: f64 = 0.0;
                for p in sample_points().into_iter().filter(|p| p.x > 0.02 && p.x < 0.98 && p.y > 0.02 && p.y < 0.98) {
                    let g = v.velocity_grad_at(p, 0.0);
                    let ex = Vec2::new(h, 0.0);
                    let ey = Vec2::new(0.0, h);
                    let dx = (v.velocity_at(p + ex, 0.0) - v.velocity_at(p - ex, 0.0)) / (2.0 * h);
                    let dy = (v.velocity_at(p + ey, 0.0) - v.velocity_at(p - ey, 0.0)) / (2.0 * h);
                    let fd = Mat2::new(dx.x, dy.x, dx.y, dy.y);
                    worst = worst.max((fd - g).abs().max());
                }
                worst
            };
            assert!(measured_order(err) >= 1.9);
        }
    }

    #[test]
    fn testfield_support_and_gradients() {
        let phi = TestField::new(Vec2::new(0.5, 0.5), 0.2, 1.0);
        assert_eq!(phi.testfield_at(Vec2::new(0.75, 0.5)), Vec2::zeros());
        assert_eq!(phi.testfield_grad_at(Vec2::new(0.1, 0.9)), Mat2::zeros());
        let h = 1e-3;
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for p in sample_points() {
            let g = phi.testfield_grad_at(p);
            assert!(g.trace().abs() <= 1e-14);
        }
        // Inner half of the support, where the bump is well resolved at this h.
        for k in 0..400 {
            let q = Vec2::new((k % 20) as f64 / 19.0 - 0.5, (k / 20) as f64 / 19.0 - 0.5);
            let p = phi.center() + q * phi.halfwidth;
            let g = phi.testfield_grad_at(p);
            scale = scale.max(g.abs().max());
            let ex = Vec2::new(h, 0.0);
            let ey = Vec2::new(0.0, h);
            let dx = (phi.testfield_at(p + ex) - phi.testfield_at(p - ex)) / (2.0 * h);
            let dy = (phi.testfield_at(p + ey) - phi.testfield_at(p - ey)) / (2.0 * h);
            let fd = Mat2::new(dx.x, dy.x, dx.y, dy.y);
            worst = worst.max((fd - g).abs().max());
        }
        // Truncation error is h²/6 |∂³φ| with |∂³φ| ~ |∇φ| / w², about 2e-5 relative.
        assert!(worst <= 5e-5 * scale, "{worst} vs {scale}");
        let err = |h: f64| {
            let p = Vec2::new(0.57, 0.46);
            let g = phi.testfield_grad_at(p);
            let ex = Vec2::new(h, 0.0);
            let dx = (phi.testfield_at(p + ex) - phi.testfield_at(p - ex)) / (2.0 * h);
            (dx.x - g[(0, 0)]).abs().max((dx.y - g[(1, 0)]).abs())
        };
        assert!(measured_order(err) >= 1.9);
    }
}
