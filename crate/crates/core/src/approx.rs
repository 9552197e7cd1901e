//! The transported-profile approximation `c_A` and its norm estimates.
//!
//! `c_A(x, t) = ζ(e/δ) θ₀(e/ε) + (1 − ζ(e/δ)) sign(e)` with the transported
//! level set `e = d₀ ∘ X_t⁻¹`. The formula reduces to `θ₀(e/ε)` on the
//! plateau `|e| < δ/2` and to `±1` outside the δ-tube.

use std::sync::Arc;

use crate::fields::StreamVelocity;
use crate::geometry::{DistanceFunction, FlowMap, NodalBackwardMap, DEFAULT_FLOW_STEP};
use crate::grid::{Grid, ScalarField};
use crate::profile::{layered_value, Cutoff, ProfileTable};
use crate::solver::Trajectory;
use crate::{Error, Result, Vec2};

/// `c_A` for one `(ε, δ)`, initial interface and velocity.
#[derive(Clone)]
pub struct ApproxSolution {
    eps: f64,
    delta: f64,
    d0: Arc<dyn DistanceFunction>,
    velocity: StreamVelocity,
    profile: Arc<ProfileTable>,
    cutoff: Cutoff,
    flow_step: f64,
}

impl std::fmt::Debug for ApproxSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ApproxSolution")
            .field("eps", &self.eps)
            .field("delta", &self.delta)
            .field("velocity", &self.velocity)
            .finish()
    }
}

impl ApproxSolution {
    pub fn new(
        eps: f64,
        delta: f64,
        d0: Arc<dyn DistanceFunction>,
        velocity: StreamVelocity,
        profile: Arc<ProfileTable>,
    ) -> Self {
        Self { eps, delta, d0, velocity, profile, cutoff: Cutoff, flow_step: DEFAULT_FLOW_STEP }
    }

    /// Largest RK4 step used for backward characteristics.
    pub fn with_flow_step(mut self, step: f64) -> Self {
        self.flow_step = step;
        self
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn velocity(&self) -> &StreamVelocity {
        &self.velocity
    }

    pub fn flow_step(&self) -> f64 {
        self.flow_step
    }

    pub fn profile(&self) -> &ProfileTable {
        &self.profile
    }

    pub fn distance(&self) -> &dyn DistanceFunction {
        self.d0.as_ref()
    }

    /// `c_A` as a function of the level-set value `e`.
    #[inline]
    pub fn value_from_level(&self, e: f64) -> f64 {
        layered_value(&self.profile, &self.cutoff, e, self.eps, self.delta)
    }

    fn flow_map(&self, t: f64) -> FlowMap {
        FlowMap::new(self.velocity.clone(), t).with_step(self.flow_step)
    }

    /// `e(x, t) = d₀(X_t⁻¹(x))`.
    pub fn level_set_at(&self, x: Vec2, t: f64) -> Result<f64> {
        Ok(self.d0.value(self.flow_map(t).flow_backward(x)?))
    }

    pub fn approx_at(&self, x: Vec2, t: f64) -> Result<f64> {
        Ok(self.value_from_level(self.level_set_at(x, t)?))
    }

    /// Nodal `e(·, t)`.
    pub fn level_set_nodal(&self, grid: Grid, t: f64) -> Result<ScalarField> {
        let mut map = NodalBackwardMap::new(self.velocity.clone(), grid, self.flow_step);
        map.advance_to(t)?;
        Ok(ScalarField { grid, values: map.feet().iter().map(|y| self.d0.value(*y)).collect() })
    }

    /// Nodal `c_A(·, t)`.
    pub fn nodal(&self, grid: Grid, t: f64) -> Result<ScalarField> {
        let mut e = self.level_set_nodal(grid, t)?;
        e.values.iter_mut().for_each(|v| *v = self.value_from_level(*v));
        Ok(e)
    }

    /// Nodal `c_A` from precomputed backward characteristic feet.
    pub(crate) fn nodal_from_feet(&self, grid: Grid, feet: &[Vec2]) -> ScalarField {
        ScalarField { grid, values: feet.iter().map(|y| self.value_from_level(self.d0.value(*y))).collect() }
    }
}

/// The four norms bounded by the layer estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerNorms {
    pub eps: f64,
    pub t: f64,
    /// `‖∇c_A‖_{L²}`
    pub grad_l2: f64,
    /// `‖Δc_A‖_{L²}`
    pub lap_l2: f64,
    /// `‖f(c_A)‖_{L²}`
    pub f_l2: f64,
    /// `‖c_A − (2χ_{Q⁺} − 1)‖_{L²}`
    pub indicator_l2: f64,
}

/// Norms of `c_A(·, t)` on `grid`, which must satisfy `h ≤ ε/8`.
pub fn layer_norms(a: &ApproxSolution, t: f64, grid: Grid) -> Result<LayerNorms> {
    let limit = a.eps / 8.0;
    if grid.h() > limit * (1.0 + 1e-12) {
        return Err(Error::Resolution { h: grid.h(), limit });
    }
    let e = a.level_set_nodal(grid, t)?;
    let c = ScalarField { grid, values: e.values.iter().map(|v| a.value_from_level(*v)).collect() };
    let well = a.profile.well();
    let n = grid.n();
    let h = grid.h();
    let (mut g2, mut l2, mut f2, mut i2) = (0.0, 0.0, 0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            let w = grid.trapezoid_weight(i, j);
            let k = grid.index(i, j);
            let ck = c.values[k];
            f2 += w * well.f(ck).powi(2);
            let sign = if e.values[k] >= 0.0 { 1.0 } else { -1.0 };
            i2 += w * (ck - sign).powi(2);
            if grid.is_boundary(i, j) {
                continue;
            }
            let gx = (c.values[k + 1] - c.values[k - 1]) / (2.0 * h);
            let gy = (c.values[k + n] - c.values[k - n]) / (2.0 * h);
            g2 += w * (gx * gx + gy * gy);
            let lap = (c.values[k + 1] + c.values[k - 1] + c.values[k + n] + c.values[k - n] - 4.0 * ck) / (h * h);
            l2 += w * lap * lap;
        }
    }
    Ok(LayerNorms { eps: a.eps, t, grad_l2: g2.sqrt(), lap_l2: l2.sqrt(), f_l2: f2.sqrt(), indicator_l2: i2.sqrt() })
}

/// Norms of `u = c − c_A` over a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DifferenceNorms {
    /// `sup_t ‖u(t)‖_{L²}`
    pub sup_l2: f64,
    /// `‖∇u‖_{L²(Ω_T)}`
    pub grad_l2_spacetime: f64,
    /// `‖c − (2χ_{Q⁺} − 1)‖²_{L²(Ω_T)}`
    pub indicator_sq_spacetime: f64,
}

/// Trapezoid rule over (possibly non-uniform) snapshot times.
pub(crate) fn trapezoid_in_time(times: &[f64], values: &[f64]) -> f64 {
    times.windows(2).zip(values.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum()
}

/// Difference norms of a trajectory against `c_A`, evaluated on the solver
/// grid at the snapshot times.
pub fn difference_norms(traj: &Trajectory, a: &ApproxSolution) -> Result<DifferenceNorms> {
    let computed;
    let approx: &[ScalarField] = match &traj.approx {
        Some(list) => list,
        None => {
            computed = traj
                .times
                .iter()
                .zip(&traj.snapshots)
                .map(|(t, c)| a.nodal(c.grid, *t))
                .collect::<Result<Vec<_>>>()?;
            &computed
        }
    };
    let mut sup = 0.0f64;
    let mut grad = Vec::with_capacity(traj.times.len());
    let mut ind = Vec::with_capacity(traj.times.len());
    for (c, ca) in traj.snapshots.iter().zip(approx) {
        c.check_same_grid(ca)?;
        let u = ScalarField { grid: c.grid, values: c.values.iter().zip(&ca.values).map(|(x, y)| x - y).collect() };
        sup = sup.max(u.l2_norm());
        grad.push(u.gradient_sq_integral());
        let chi = ScalarField {
            grid: c.grid,
            values: c
                .values
                .iter()
                .zip(&ca.values)
                .map(|(x, y)| x - if *y >= 0.0 { 1.0 } else { -1.0 })
                .collect(),
        };
        ind.push(chi.l2_norm().powi(2));
    }
    Ok(DifferenceNorms {
        sup_l2: sup,
        grad_l2_spacetime: trapezoid_in_time(&traj.times, &grad).sqrt(),
        indicator_sq_spacetime: trapezoid_in_time(&traj.times, &ind),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CircleDistance;
    use crate::profile::Cutoff;
    use crate::solver::{initial_condition, RunParams};

    fn v1(eps: f64) -> ApproxSolution {
        let d0 = CircleDistance::new(Vec2::new(0.5, 0.5), 0.25).unwrap();
        ApproxSolution::new(
            eps,
            0.125,
            Arc::new(d0),
            StreamVelocity::single_vortex(1.0),
            Arc::new(ProfileTable::quartic_default()),
        )
    }

    #[test]
    fn pointwise_examples() {
        let a = v1(0.04);
        assert_eq!(a.approx_at(Vec2::new(0.75, 0.5), 0.0).unwrap(), 0.0);
        assert_eq!(a.approx_at(Vec2::new(0.5, 0.5 + 0.25 + 0.25), 0.0).unwrap(), 1.0);
        assert_eq!(a.value_from_level(2.0 * a.delta()), 1.0);
        assert_eq!(a.value_from_level(-2.0 * a.delta()), -1.0);
        // Plateau: exactly the profile.
        let e = 0.3 * a.delta();
        assert_eq!(a.value_from_level(e), a.profile().value(e / a.eps()));
    }

    #[test]
    fn matches_initial_condition_at_time_zero() {
        let a = v1(0.04);
        let grid = Grid::new(129).unwrap();
        let d0 = ScalarField::from_fn(grid, |p| a.distance().value(p));
        let params = RunParams {
            eps: 0.04,
            theta: 3.0,
            m0: 1.0,
            delta: 0.125,
            dt: 1e-3,
            t_final: 0.0,
            snapshot_every: 1,
            boundary_value: 1.0,
            well: crate::profile::DoubleWell::quartic(),
            max_principle_tol: crate::solver::MAX_PRINCIPLE_TOL,
        };
        let c0 = initial_condition(&params, &d0, a.profile(), &Cutoff);
        let ca = a.nodal(grid, 0.0).unwrap();
        let err = c0.values.iter().zip(&ca.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-10);
    }

    #[test]
    fn range_and_transport_identity() {
        let a = v1(0.05);
        let grid = Grid::new(101).unwrap();
        let (t, dt) = (0.2, 1e-4);
        let c0 = a.nodal(grid, t - dt).unwrap();
        let c1 = a.nodal(grid, t + dt).unwrap();
        let cm = a.nodal(grid, t).unwrap();
        assert!(cm.values.iter().all(|v| v.abs() <= 1.0));
        let mut worst = 0.0f64;
        for j in 1..grid.n() - 1 {
            for i in 1..grid.n() - 1 {
                let dc = (c1.at(i, j) - c0.at(i, j)) / (2.0 * dt);
                let adv = a.velocity().velocity_at(grid.node(i, j), t).dot(&cm.gradient_at(i, j));
                worst = worst.max((dc + adv).abs());
            }
        }
        // |v| |∇c_A| is of order π/ε ≈ 60; the residual is a small fraction.
        assert!(worst < 0.05 * std::f64::consts::PI / 0.05, "{worst}");
    }

    #[test]
    fn norms_guard_and_leading_order() {
        let a = v1(0.04);
        assert!(matches!(layer_norms(&a, 0.0, Grid::new(129).unwrap()), Err(Error::Resolution { .. })));
        let grid = Grid::with_max_spacing(0.04 / 8.0).unwrap();
        let n = layer_norms(&a, 0.0, grid).unwrap();
        // ‖∇c_A‖² ≈ (2σ/ε)·|Γ| to leading order (co-area with ∫θ₀'² = 2σ).
        let sigma = 2.0 * 2f64.sqrt() / 3.0;
        let expected = (2.0 * sigma / 0.04 * std::f64::consts::TAU * 0.25).sqrt();
        assert!((n.grad_l2 - expected).abs() / expected < 0.02, "{} {}", n.grad_l2, expected);
    }

    #[test]
    fn self_difference_is_zero() {
        let a = v1(0.08);
        let grid = Grid::new(41).unwrap();
        let times = vec![0.0, 0.05, 0.1];
        let snaps: Vec<ScalarField> = times.iter().map(|t| a.nodal(grid, *t).unwrap()).collect();
        let traj = Trajectory {
            times,
            mass: vec![0.0; 3],
            overshoot: vec![0.0; 3],
            approx: None,
            snapshots: snaps,
            dt: 0.05,
            steps: 2,
        };
        let d = difference_norms(&traj, &a).unwrap();
        assert_eq!(d.sup_l2, 0.0);
        assert_eq!(d.grad_l2_spacetime, 0.0);
    }
}
