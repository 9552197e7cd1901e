//! Characteristic flow maps of a stream-function velocity, with Jacobians
//! from the variational equation.

use crate::fields::StreamVelocity;
use crate::grid::Grid;
use crate::{Error, Mat2, Result, Vec2};

/// Default RK4 step for characteristic integration.
pub const DEFAULT_FLOW_STEP: f64 = 1e-3;

/// Tolerance for a trajectory leaving the closed unit box before it is
/// reported instead of clamped.
const DOMAIN_SLACK: f64 = 1e-8;

/// Flow map `X_{t0→t1}` of `dX/dt = v(X, t)`.
#[derive(Debug, Clone)]
pub struct FlowMap {
    pub velocity: StreamVelocity,
    pub t0: f64,
    pub t1: f64,
    pub step: f64,
}

impl FlowMap {
    /// Flow map from time 0 to `t` with the default step.
    pub fn new(velocity: StreamVelocity, t: f64) -> Self {
        Self::between(velocity, 0.0, t)
    }

    pub fn between(velocity: StreamVelocity, t0: f64, t1: f64) -> Self {
        Self { velocity, t0, t1, step: DEFAULT_FLOW_STEP }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    fn steps(&self) -> (usize, f64) {
        let span = self.t1 - self.t0;
        if span == 0.0 || self.velocity.is_zero() {
            return (0, 0.0);
        }
        let n = (span.abs() / self.step).ceil().max(1.0) as usize;
        (n, span / n as f64)
    }

    /// `X_{t0→t1}(x)`.
    pub fn flow_forward(&self, x: Vec2) -> Result<Vec2> {
        let (n, dt) = self.steps();
        integrate(&self.velocity, x, self.t0, dt, n)
    }

    /// `X_{t0→t1}⁻¹(x)`, integrating the reversed-time field from `t1` to `t0`.
    pub fn flow_backward(&self, x: Vec2) -> Result<Vec2> {
        let (n, dt) = self.steps();
        integrate(&self.velocity, x, self.t1, -dt, n)
    }

    /// Forward image and its Jacobian `DX`.
    pub fn forward_with_jacobian(&self, x: Vec2) -> Result<(Vec2, Mat2)> {
        let (n, dt) = self.steps();
        integrate_variational(&self.velocity, x, self.t0, dt, n)
    }

    /// Backward image and the Jacobian of the backward map, `D(X⁻¹)`.
    pub fn backward_with_jacobian(&self, x: Vec2) -> Result<(Vec2, Mat2)> {
        let (n, dt) = self.steps();
        integrate_variational(&self.velocity, x, self.t1, -dt, n)
    }
}

fn confine(p: Vec2) -> Result<Vec2> {
    let outside = (-p.x).max(-p.y).max(p.x - 1.0).max(p.y - 1.0);
    if !(outside <= DOMAIN_SLACK) {
        return Err(Error::LeftDomain { x: p.x, y: p.y });
    }
    Ok(Vec2::new(p.x.clamp(0.0, 1.0), p.y.clamp(0.0, 1.0)))
}

/// `n` RK4 steps of signed size `dt` starting at time `t`.
pub(crate) fn integrate(v: &StreamVelocity, mut x: Vec2, mut t: f64, dt: f64, n: usize) -> Result<Vec2> {
    for _ in 0..n {
        let k1 = v.velocity_at(x, t);
        let k2 = v.velocity_at(x + 0.5 * dt * k1, t + 0.5 * dt);
        let k3 = v.velocity_at(x + 0.5 * dt * k2, t + 0.5 * dt);
        let k4 = v.velocity_at(x + dt * k3, t + dt);
        x = confine(x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))?;
        t += dt;
    }
    Ok(x)
}

fn integrate_variational(
    v: &StreamVelocity,
    mut x: Vec2,
    mut t: f64,
    dt: f64,
    n: usize,
) -> Result<(Vec2, Mat2)> {
    let mut j = Mat2::identity();
    let rhs = |x: Vec2, j: &Mat2, t: f64| {
        let s = v.stream(x, t);
        (s.velocity(), s.velocity_gradient() * j)
    };
    for _ in 0..n {
        let (a1, b1) = rhs(x, &j, t);
        let (a2, b2) = rhs(x + 0.5 * dt * a1, &(j + 0.5 * dt * b1), t + 0.5 * dt);
        let (a3, b3) = rhs(x + 0.5 * dt * a2, &(j + 0.5 * dt * b2), t + 0.5 * dt);
        let (a4, b4) = rhs(x + dt * a3, &(j + dt * b3), t + dt);
        x = confine(x + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4))?;
        j += dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        t += dt;
    }
    let det = j.determinant();
    if det.abs() < 1e-12 {
        return Err(Error::SingularJacobian(det));
    }
    Ok((x, j))
}

/// Backward characteristic feet `X_t⁻¹(x)` for every grid node, advanced
/// incrementally in time.
///
/// For an autonomous velocity `X_{t+τ}⁻¹ = X_t⁻¹ ∘ Φ_{−τ}` is applied to the
/// stored feet; otherwise each request is integrated from scratch.
#[derive(Debug, Clone)]
pub struct NodalBackwardMap {
    velocity: StreamVelocity,
    grid: Grid,
    time: f64,
    feet: Vec<Vec2>,
    max_step: f64,
}

impl NodalBackwardMap {
    pub fn new(velocity: StreamVelocity, grid: Grid, max_step: f64) -> Self {
        Self { velocity, grid, time: 0.0, feet: grid.nodes(), max_step }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn feet(&self) -> &[Vec2] {
        &self.feet
    }

    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        if t == self.time || self.velocity.is_zero() {
            self.time = t;
            return Ok(());
        }
        let (start, span) = if self.velocity.autonomous() && t > self.time {
            (self.feet.clone(), t - self.time)
        } else {
            (self.grid.nodes(), t)
        };
        let n = (span.abs() / self.max_step).ceil().max(1.0) as usize;
        // Reversed-time field: for autonomous v the start time is irrelevant.
        let dt = -span / n as f64;
        let t_start = t;
        self.feet = start
            .into_iter()
            .map(|p| integrate(&self.velocity, p, t_start, dt, n))
            .collect::<Result<_>>()?;
        self.time = t;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vortex() -> StreamVelocity {
        StreamVelocity::single_vortex(1.0)
    }

    #[test]
    fn zero_velocity_and_zero_time_are_identity() {
        let x = Vec2::new(0.3, 0.7);
        assert_eq!(FlowMap::new(StreamVelocity::zero(), 0.5).flow_forward(x).unwrap(), x);
        assert_eq!(FlowMap::between(vortex(), 0.3, 0.3).flow_forward(x).unwrap(), x);
    }

    #[test]
    fn stagnation_point_is_fixed() {
        let c = Vec2::new(0.5, 0.5);
        let y = FlowMap::new(vortex(), 1.0).flow_forward(c).unwrap();
        assert!((y - c).norm() < 1e-10);
    }

    #[test]
    fn round_trip_and_refined_step() {
        let map = FlowMap::new(vortex(), 0.5);
        for x in [Vec2::new(0.5, 0.75), Vec2::new(0.2, 0.3), Vec2::new(0.9, 0.05)] {
            let y = map.flow_forward(x).unwrap();
            assert!((map.flow_backward(y).unwrap() - x).norm() < 0.5e-8);
            let fine = map.clone().with_step(1e-4).flow_forward(x).unwrap();
            assert!((fine - y).norm() < 1e-8);
        }
    }

    #[test]
    fn liouville_for_builtin_velocities() {
        for v in [vortex(), StreamVelocity::double_vortex(0.5)] {
            let map = FlowMap::new(v, 1.0);
            for x in [Vec2::new(0.5, 0.75), Vec2::new(0.21, 0.33), Vec2::new(0.6, 0.1)] {
                let (_, j) = map.forward_with_jacobian(x).unwrap();
                assert!((j.determinant() - 1.0).abs() < 1e-8);
                let (_, k) = map.backward_with_jacobian(x).unwrap();
                assert!((k.determinant() - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let map = FlowMap::new(vortex(), 0.4).with_step(2e-4);
        let x = Vec2::new(0.35, 0.6);
        let (_, j) = map.forward_with_jacobian(x).unwrap();
        let h = 1e-6;
        for k in 0..2 {
            let mut e = Vec2::zeros();
            e[k] = h;
            let col = (map.flow_forward(x + e).unwrap() - map.flow_forward(x - e).unwrap()) / (2.0 * h);
            assert!((col - j.column(k)).norm() < 1e-6);
        }
    }

    #[test]
    fn boundary_points_stay_in_domain() {
        let map = FlowMap::new(vortex(), 0.7);
        let y = map.flow_forward(Vec2::new(0.3, 0.0)).unwrap();
        assert!(y.y == 0.0 && (0.0..=1.0).contains(&y.x));
    }

    #[test]
    fn nodal_map_incremental_matches_direct() {
        let grid = Grid::new(33).unwrap();
        let mut m = NodalBackwardMap::new(vortex(), grid, 1e-3);
        for t in [0.1, 0.2, 0.3] {
            m.advance_to(t).unwrap();
        }
        let direct = FlowMap::new(vortex(), 0.3);
        for (k, p) in grid.nodes().iter().enumerate().step_by(37) {
            assert!((direct.flow_backward(*p).unwrap() - m.feet()[k]).norm() < 1e-10);
        }
    }
}
