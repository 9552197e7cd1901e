//! Explicit finite-difference solver for the convective Allen-Cahn equation
//! with Dirichlet boundary data on the unit box.
//!
//! Two formulations share the stencils:
//!
//! * [`simulate`] advances `c` directly with midpoint RK2, 5-point Laplacian
//!   and central advection.
//! * [`simulate_residual`] advances `u = c − c_A`, where `c_A` is the
//!   transported-profile approximation. Since `∂t c_A + v·∇c_A = 0` holds
//!   exactly, `u` obeys
//!   `∂t u + v·∇u = m_ε (Δ(c_A + u) − ε⁻² f(c_A + u))`,
//!   which is the same equation without the advection of the sharp ε-layer.

use serde::{Deserialize, Serialize};

use crate::approx::ApproxSolution;
use crate::fields::StreamVelocity;
use crate::geometry::NodalBackwardMap;
use crate::grid::{Grid, ScalarField};
use crate::profile::{layered_value, Cutoff, DoubleWell, ProfileTable};
use crate::{Error, Result};

/// Safety factor applied to the explicit stability bounds.
pub const STABILITY_SAFETY: f64 = 0.4;
/// Default largest admitted excursion of `c` beyond `[−1, 1]`.
pub const MAX_PRINCIPLE_TOL: f64 = 1e-6;

/// Which unknown the explicit scheme advances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    #[default]
    Direct,
    Residual,
}

/// Parameters of one run.
#[derive(Debug, Clone)]
pub struct RunParams {
    pub eps: f64,
    pub theta: f64,
    pub m0: f64,
    /// Tube half-width of the cutoff.
    pub delta: f64,
    pub dt: f64,
    pub t_final: f64,
    pub snapshot_every: usize,
    /// Dirichlet value of `c` on ∂Ω.
    pub boundary_value: f64,
    pub well: DoubleWell,
    /// Excursion beyond `[−1, 1]` that aborts the run.
    pub max_principle_tol: f64,
}

impl RunParams {
    /// `m_ε = m₀ ε^θ`.
    pub fn mobility(&self) -> f64 {
        self.m0 * self.eps.powf(self.theta)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidInput(msg.to_string()));
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return bad("eps must lie in (0, 1]");
        }
        if !(self.theta >= 0.0) {
            return bad("theta must be non-negative");
        }
        if !(self.m0 > 0.0) {
            return bad("m0 must be positive");
        }
        if !(self.delta > 0.0) {
            return bad("delta must be positive");
        }
        if !(self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if !(self.t_final >= 0.0) {
            return bad("T must be non-negative");
        }
        if self.snapshot_every == 0 {
            return bad("snapshot_every must be at least 1");
        }
        if self.boundary_value.abs() != 1.0 {
            return bad("boundary value must be +1 or -1");
        }
        if !(self.max_principle_tol >= 0.0) {
            return bad("max_principle_tol must be non-negative");
        }
        Ok(())
    }

    /// Interface resolution guard `h ≤ ε/4`.
    pub fn check_resolution(&self, grid: &Grid) -> Result<()> {
        let limit = self.eps / 4.0;
        if grid.h() > limit * (1.0 + 1e-12) {
            return Err(Error::Resolution { h: grid.h(), limit });
        }
        Ok(())
    }
}

/// `safety · min(h²/(4m), ε²/(m·L_f), h/v_max)`; a zero `vmax` drops the
/// advection bound.
pub fn stability_dt(eps: f64, mobility: f64, grid: &Grid, vmax: f64, lipschitz: f64) -> f64 {
    let h = grid.h();
    let mut bound = (h * h / (4.0 * mobility)).min(eps * eps / (mobility * lipschitz));
    if vmax > 0.0 {
        bound = bound.min(h / vmax);
    }
    STABILITY_SAFETY * bound
}

/// The layered initial value built from the nodal signed distance `d0`.
pub fn initial_condition(params: &RunParams, d0: &ScalarField, profile: &ProfileTable, cutoff: &Cutoff) -> ScalarField {
    // The profile is within 1e-5 of ±1 beyond |z| = 6; the plateau |d| < δ/2
    // should contain that layer.
    if 6.0 * params.eps > params.delta / 2.0 {
        log::warn!(
            "eps = {} is wide relative to delta = {}: the profile layer extends past the cutoff plateau",
            params.eps,
            params.delta
        );
    }
    let mut c = ScalarField::zeros(d0.grid);
    for (ci, d) in c.values.iter_mut().zip(&d0.values) {
        *ci = layered_value(profile, cutoff, *d, params.eps, params.delta);
    }
    c
}

/// Discrete Lyapunov functional `∫ ε|∇c|²/2 + F(c)/ε` with edge differences
/// for the gradient and trapezoid weights for the potential.
pub fn energy(c: &ScalarField, eps: f64, well: &DoubleWell) -> f64 {
    let grid = c.grid;
    let n = grid.n();
    let mut grad = 0.0;
    for j in 0..n {
        for i in 0..n {
            if i + 1 < n {
                let d = c.at(i + 1, j) - c.at(i, j);
                grad += d * d;
            }
            if j + 1 < n {
                let d = c.at(i, j + 1) - c.at(i, j);
                grad += d * d;
            }
        }
    }
    // Each edge difference squared over h², times the cell area h².
    0.5 * eps * grad + c.integral_of(|v| well.potential(v)) / eps
}

/// Snapshots of one run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<ScalarField>,
    /// `∫ c dx` per snapshot.
    pub mass: Vec<f64>,
    /// `max(max c − 1, −1 − min c)` per snapshot (non-positive when the
    /// maximum principle holds exactly).
    pub overshoot: Vec<f64>,
    /// `c_A` at the snapshot times (residual formulation only).
    pub approx: Option<Vec<ScalarField>>,
    /// Effective time step.
    pub dt: f64,
    pub steps: usize,
}

impl Trajectory {
    fn new(dt: f64, steps: usize, with_approx: bool) -> Self {
        Self {
            times: Vec::new(),
            snapshots: Vec::new(),
            mass: Vec::new(),
            overshoot: Vec::new(),
            approx: with_approx.then(Vec::new),
            dt,
            steps,
        }
    }

    fn record(&mut self, t: f64, c: &ScalarField, approx: Option<&ScalarField>) {
        self.times.push(t);
        self.mass.push(c.integral());
        self.overshoot.push((c.max() - 1.0).max(-1.0 - c.min()));
        self.snapshots.push(c.clone());
        if let (Some(list), Some(a)) = (self.approx.as_mut(), approx) {
            list.push(a.clone());
        }
    }

    pub fn last(&self) -> &ScalarField {
        self.snapshots.last().expect("trajectory has at least one snapshot")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one snapshot")
    }

    /// Largest overshoot over all snapshots.
    pub fn max_overshoot(&self) -> f64 {
        self.overshoot.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Uniform schedule ending exactly at `T`.
fn schedule(params: &RunParams) -> (usize, f64) {
    if params.t_final == 0.0 {
        return (0, params.dt);
    }
    let steps = (params.t_final / params.dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    (steps, params.t_final / steps as f64)
}

/// Velocity samples at the nodes, refreshed only for time-dependent fields.
struct NodalVelocity {
    v: StreamVelocity,
    grid: Grid,
    vx: Vec<f64>,
    vy: Vec<f64>,
    time: Option<f64>,
}

impl NodalVelocity {
    fn new(v: &StreamVelocity, grid: Grid) -> Self {
        let len = grid.len();
        Self { v: v.clone(), grid, vx: vec![0.0; len], vy: vec![0.0; len], time: None }
    }

    fn update(&mut self, t: f64) {
        if self.v.is_zero() {
            return;
        }
        if self.time.is_some() && (self.v.autonomous() || self.time == Some(t)) {
            return;
        }
        for (k, p) in self.grid.nodes().into_iter().enumerate() {
            let w = self.v.velocity_at(p, t);
            self.vx[k] = w.x;
            self.vy[k] = w.y;
        }
        self.time = Some(t);
    }
}

/// Semi-discrete right-hand side
/// `−v·∇_h w + m (Δ_h c − ε⁻² f(c))` at interior nodes, where `c = base + w`
/// (`base` absent means `c = w`). Boundary entries are set to zero.
fn rhs(
    out: &mut [f64],
    w: &[f64],
    base: Option<&[f64]>,
    vel: &NodalVelocity,
    params: &RunParams,
) {
    let grid = vel.grid;
    let n = grid.n();
    let h = grid.h();
    let m = params.mobility();
    let inv_h2 = 1.0 / (h * h);
    let inv_2h = 0.5 / h;
    let react = 1.0 / (params.eps * params.eps);
    let advect = !vel.v.is_zero();
    let well = &params.well;
    out.iter_mut().for_each(|o| *o = 0.0);
    for j in 1..n - 1 {
        let row = j * n;
        for i in 1..n - 1 {
            let k = row + i;
            let c = |idx: usize| match base {
                Some(b) => b[idx] + w[idx],
                None => w[idx],
            };
            let ck = c(k);
            let lap = (c(k - 1) + c(k + 1) + c(k - n) + c(k + n) - 4.0 * ck) * inv_h2;
            let mut val = m * (lap - react * well.f(ck));
            if advect {
                let dx = (w[k + 1] - w[k - 1]) * inv_2h;
                let dy = (w[k + n] - w[k - n]) * inv_2h;
                val -= vel.vx[k] * dx + vel.vy[k] * dy;
            }
            out[k] = val;
        }
    }
}

fn set_boundary(values: &mut [f64], grid: &Grid, value: f64) {
    let n = grid.n();
    for k in 0..n {
        values[k] = value;
        values[(n - 1) * n + k] = value;
        values[k * n] = value;
        values[k * n + n - 1] = value;
    }
}

/// Abort on non-finite entries or a maximum-principle violation.
fn check_state(c: &[f64], grid: &Grid, t: f64, tol: f64) -> Result<()> {
    let n = grid.n();
    let mut excess = 0.0f64;
    for (k, v) in c.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite { i: k % n, j: k / n, t });
        }
        excess = excess.max(v.abs() - 1.0);
    }
    if excess > tol {
        return Err(Error::MaxPrinciple { excess, t });
    }
    Ok(())
}

/// One midpoint RK2 step of the direct formulation from time `t`.
pub fn step(c: &ScalarField, params: &RunParams, v: &StreamVelocity, t: f64) -> Result<ScalarField> {
    let grid = c.grid;
    let mut vel = NodalVelocity::new(v, grid);
    let mut next = c.clone();
    let mut k = vec![0.0; grid.len()];
    let mut mid = vec![0.0; grid.len()];
    direct_step(&mut next.values, &mut k, &mut mid, &mut vel, params, t, params.dt);
    check_state(&next.values, &grid, t + params.dt, params.max_principle_tol)?;
    Ok(next)
}

fn direct_step(
    c: &mut [f64],
    k: &mut [f64],
    mid: &mut [f64],
    vel: &mut NodalVelocity,
    params: &RunParams,
    t: f64,
    dt: f64,
) {
    // The right-hand side vanishes on ∂Ω, so boundary values are preserved.
    vel.update(t);
    rhs(k, c, None, vel, params);
    for ((m, ci), ki) in mid.iter_mut().zip(c.iter()).zip(k.iter()) {
        *m = ci + 0.5 * dt * ki;
    }
    vel.update(t + 0.5 * dt);
    rhs(k, mid, None, vel, params);
    for (ci, ki) in c.iter_mut().zip(k.iter()) {
        *ci += dt * ki;
    }
}

/// Advance `c0` to `T` with the direct formulation.
pub fn simulate(params: &RunParams, v: &StreamVelocity, c0: &ScalarField) -> Result<Trajectory> {
    params.validate()?;
    let grid = c0.grid;
    let (steps, dt) = schedule(params);
    let mut traj = Trajectory::new(dt, steps, false);
    let mut c = c0.clone();
    set_boundary(&mut c.values, &grid, params.boundary_value);
    traj.record(0.0, &c, None);
    let mut vel = NodalVelocity::new(v, grid);
    let mut k = vec![0.0; grid.len()];
    let mut mid = vec![0.0; grid.len()];
    for s in 1..=steps {
        let t = (s - 1) as f64 * dt;
        direct_step(&mut c.values, &mut k, &mut mid, &mut vel, params, t, dt);
        let t1 = s as f64 * dt;
        check_state(&c.values, &grid, t1, params.max_principle_tol)?;
        if s % params.snapshot_every == 0 || s == steps {
            traj.record(t1, &c, None);
        }
    }
    Ok(traj)
}

/// Advance `u = c − c_A` with Heun's method (stages at `t_n` and `t_{n+1}`)
/// and return snapshots of `c = c_A + u` together with `c_A`.
pub fn simulate_residual(params: &RunParams, approx: &ApproxSolution, grid: Grid) -> Result<Trajectory> {
    params.validate()?;
    let v = approx.velocity();
    let (steps, dt) = schedule(params);
    let mut traj = Trajectory::new(dt, steps, true);
    let mut map = NodalBackwardMap::new(v.clone(), grid, approx.flow_step());
    let mut ca = approx.nodal_from_feet(grid, map.feet());
    let mut u = vec![0.0; grid.len()];
    let mut c = ca.clone();
    traj.record(0.0, &c, Some(&ca));
    let mut vel = NodalVelocity::new(v, grid);
    let (mut k1, mut k2, mut trial) = (vec![0.0; grid.len()], vec![0.0; grid.len()], vec![0.0; grid.len()]);
    for s in 1..=steps {
        let t0 = (s - 1) as f64 * dt;
        let t1 = s as f64 * dt;
        vel.update(t0);
        rhs(&mut k1, &u, Some(&ca.values), &vel, params);
        for ((w, ui), ki) in trial.iter_mut().zip(&u).zip(&k1) {
            *w = ui + dt * ki;
        }
        map.advance_to(t1)?;
        ca = approx.nodal_from_feet(grid, map.feet());
        vel.update(t1);
        rhs(&mut k2, &trial, Some(&ca.values), &vel, params);
        for ((ui, a), b) in u.iter_mut().zip(&k1).zip(&k2) {
            *ui += 0.5 * dt * (a + b);
        }
        for ((ci, a), ui) in c.values.iter_mut().zip(&ca.values).zip(&u) {
            *ci = a + ui;
        }
        check_state(&c.values, &grid, t1, params.max_principle_tol)?;
        if s % params.snapshot_every == 0 || s == steps {
            traj.record(t1, &c, Some(&ca));
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Vec2;

    fn params(eps: f64, theta: f64, dt: f64) -> RunParams {
        RunParams {
            eps,
            theta,
            m0: 1.0,
            delta: 0.125,
            dt,
            t_final: 0.0,
            snapshot_every: 1,
            boundary_value: 1.0,
            well: DoubleWell::quartic(),
            max_principle_tol: MAX_PRINCIPLE_TOL,
        }
    }

    #[test]
    fn stability_bounds() {
        let grid = Grid::with_max_spacing(0.01).unwrap();
        let h = grid.h();
        let dt = stability_dt(0.04, 0.04f64.powi(3), &grid, 1.0, 8.0);
        assert!((dt - 0.4 * h).abs() < 1e-15);
        let grid = Grid::with_max_spacing(0.01).unwrap();
        let dt = stability_dt(0.04, 1.0, &grid, 0.0, 8.0);
        let h = grid.h();
        assert!((dt - 0.4 * (h * h / 4.0).min(0.04 * 0.04 / 8.0)).abs() < 1e-18);
    }

    #[test]
    fn initial_condition_examples() {
        let grid = Grid::new(401).unwrap();
        let p = params(0.01, 0.0, 1e-3);
        let profile = ProfileTable::quartic_default();
        // A distance field holding the three example values at chosen nodes.
        let mut d0 = ScalarField::constant(grid, 0.0);
        d0.values[1] = 2.0 * p.delta;
        d0.values[2] = p.eps;
        let c = initial_condition(&p, &d0, &profile, &Cutoff);
        assert_eq!(c.values[0], 0.0);
        assert_eq!(c.values[1], 1.0);
        assert!((c.values[2] - 2f64.sqrt().tanh()).abs() < 1e-8);
        assert!((c.values[2] - 0.88839).abs() < 1e-5);
    }

    #[test]
    fn constant_states() {
        let grid = Grid::new(33).unwrap();
        let p = params(0.1, 0.0, 1e-4);
        let v = StreamVelocity::single_vortex(1.0);
        let one = ScalarField::constant(grid, 1.0);
        assert_eq!(step(&one, &p, &v, 0.0).unwrap(), one);
        let mut zero = ScalarField::zeros(grid);
        zero.values.iter_mut().enumerate().for_each(|(k, x)| {
            let (i, j) = (k % 33, k / 33);
            if grid.is_boundary(i, j) {
                *x = 1.0;
            }
        });
        let next = step(&zero, &p, &StreamVelocity::zero(), 0.0).unwrap();
        // The two RK2 stages reach two rings into the interior; beyond that c stays 0.
        for j in 3..30 {
            for i in 3..30 {
                assert_eq!(next.at(i, j), 0.0);
            }
        }
    }

    fn flat_front_drift(n: usize) -> f64 {
        let eps = 0.05;
        let grid = Grid::new(n).unwrap();
        let profile = ProfileTable::quartic_default();
        let mut p = params(eps, 0.0, 0.0);
        p.dt = stability_dt(eps, 1.0, &grid, 0.0, 8.0);
        p.t_final = 0.01;
        let c0 = ScalarField::from_fn(grid, |x| profile.value((x.x - 0.5) / eps));
        // Dirichlet data are the boundary values of the front itself.
        let mut c = c0.clone();
        let mut vel = NodalVelocity::new(&StreamVelocity::zero(), grid);
        let (mut k, mut mid) = (vec![0.0; grid.len()], vec![0.0; grid.len()]);
        let (steps, dt) = schedule(&p);
        for _ in 0..steps {
            direct_step(&mut c.values, &mut k, &mut mid, &mut vel, &p, 0.0, dt);
        }
        c.values.iter().zip(&c0.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn flat_front_is_steady_to_second_order() {
        let coarse = flat_front_drift(81);
        let fine = flat_front_drift(161);
        assert!(coarse / fine > 3.5 && fine < 2e-3, "{coarse} {fine}");
    }

    #[test]
    fn zero_final_time_returns_initial_state() {
        let grid = Grid::new(33).unwrap();
        let p = params(0.1, 0.0, 1e-4);
        let c0 = ScalarField::from_fn(grid, |x| ((x - Vec2::new(0.5, 0.5)).norm() - 0.25).signum());
        let traj = simulate(&p, &StreamVelocity::zero(), &c0).unwrap();
        assert_eq!(traj.snapshots.len(), 1);
        assert_eq!(traj.snapshots[0], c0);
    }

    #[test]
    fn nan_is_reported() {
        let grid = Grid::new(33).unwrap();
        let p = params(0.1, 0.0, 1e-4);
        let mut c = ScalarField::constant(grid, 1.0);
        c.values[grid.index(10, 10)] = f64::NAN;
        assert!(matches!(step(&c, &p, &StreamVelocity::zero(), 0.0), Err(Error::NonFinite { .. })));
    }
}
