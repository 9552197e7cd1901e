//! A configured scenario: builds grids, run parameters and `c_A` per ε, runs
//! the solver and measures a trajectory against `c_A`, the sharp limits and
//! the motion-law oracles.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::{difference_norms, layer_norms, trapezoid_in_time, ApproxSolution};
use crate::config::{InterfaceSpec, RunConfig};
use crate::fields::{StreamVelocity, TestField};
use crate::functionals::{discrete_heps, limit_functional, time_integrated, vertex_stretch, FunctionalRecord};
use crate::geometry::{
    extract_zero_contour, hausdorff_distance, CircleDistance, DistanceFunction, FlowMap, Interface, PolylineDistance,
};
use crate::grid::{Grid, ScalarField};
use crate::oracles::{mcf_oracle_between, transport_oracle};
use crate::profile::{surface_tension, Cutoff, ProfileTable};
use crate::solver::{initial_condition, simulate, simulate_residual, stability_dt, Formulation, RunParams, Trajectory};
use crate::{Error, Result, Vec2};

/// Vertices of the reference interface used for limits and oracles.
pub const REFERENCE_VERTICES: usize = 1024;
/// Vertices of the front-tracking oracle.
pub const TRACKING_VERTICES: usize = 256;

/// Signed distance with the sign flipped (positive inside).
struct Flipped(Arc<dyn DistanceFunction>);

impl DistanceFunction for Flipped {
    fn value(&self, p: Vec2) -> f64 {
        -self.0.value(p)
    }

    fn gradient(&self, p: Vec2) -> Vec2 {
        -self.0.gradient(p)
    }
}

/// One configured experiment.
pub struct Scenario {
    pub config: RunConfig,
    profile: Arc<ProfileTable>,
    sigma: f64,
    /// Initial signed distance in the run's sign convention.
    d0: Arc<dyn DistanceFunction>,
    /// Unflipped distance (positive outside), used for stretch factors.
    d0_geometric: Arc<dyn DistanceFunction>,
    gamma0: Interface,
    velocity: StreamVelocity,
}

impl std::fmt::Debug for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scenario").field("config", &self.config).finish()
    }
}

impl Scenario {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let velocity = StreamVelocity::from_kind(config.velocity.kind, config.velocity.amplitude)?;
        let (gamma0, d0): (Interface, Arc<dyn DistanceFunction>) = match &config.initial_interface {
            InterfaceSpec::Circle { center, radius } => {
                let center = Vec2::new(center[0], center[1]);
                let d = CircleDistance::new(center, *radius)?;
                (Interface::circle(center, *radius, REFERENCE_VERTICES), Arc::new(d))
            }
            InterfaceSpec::Polyline { file } => {
                let raw = Interface::read_csv(std::fs::File::open(file)?)?;
                let iface = raw.resampled_count(REFERENCE_VERTICES)?;
                (iface.clone(), Arc::new(PolylineDistance::new(raw)))
            }
        };
        let clearance = gamma0
            .vertices()
            .iter()
            .map(|p| p.x.min(p.y).min(1.0 - p.x).min(1.0 - p.y))
            .fold(f64::INFINITY, f64::min);
        if clearance < 2.0 * config.delta * (1.0 - 1e-9) {
            return Err(Error::Clearance { clearance: 2.0 * config.delta });
        }
        let d0_signed: Arc<dyn DistanceFunction> = match config.boundary_value {
            1.0 => d0.clone(),
            -1.0 => Arc::new(Flipped(d0.clone())),
            v => return Err(Error::Config(format!("boundary_value must be ±1, got {v}"))),
        };
        let profile = Arc::new(ProfileTable::quartic_default());
        let sigma = surface_tension(&profile)?;
        Ok(Self { config, profile, sigma, d0: d0_signed, d0_geometric: d0, gamma0, velocity })
    }

    pub fn velocity(&self) -> &StreamVelocity {
        &self.velocity
    }

    pub fn profile(&self) -> &ProfileTable {
        &self.profile
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn testfield(&self) -> &TestField {
        &self.config.testfield
    }

    pub fn initial_interface(&self) -> &Interface {
        &self.gamma0
    }

    /// Initial signed distance, positive outside `Γ₀`.
    pub fn distance(&self) -> &dyn DistanceFunction {
        self.d0_geometric.as_ref()
    }

    /// Solver grid: `grid_n` if set, else the coarsest with `h ≤ ε/cells_per_eps`.
    pub fn grid(&self, eps: f64) -> Result<Grid> {
        match self.config.grid_n {
            Some(n) => Grid::new(n),
            None => Grid::with_max_spacing(eps / self.config.cells_per_eps),
        }
    }

    pub fn params(&self, eps: f64, grid: &Grid) -> Result<RunParams> {
        let cfg = &self.config;
        let well = self.profile.well().clone();
        let mobility = cfg.m0 * eps.powf(cfg.theta);
        let dt = match cfg.dt {
            Some(dt) => dt,
            None => stability_dt(eps, mobility, grid, self.velocity.max_speed(), well.lipschitz()),
        };
        let steps = (cfg.t_final / dt).ceil().max(1.0) as usize;
        let snapshot_every = cfg.snapshot_every.unwrap_or_else(|| steps.div_ceil(cfg.snapshots).max(1));
        let params = RunParams {
            eps,
            theta: cfg.theta,
            m0: cfg.m0,
            delta: cfg.delta,
            dt,
            t_final: cfg.t_final,
            snapshot_every,
            boundary_value: cfg.boundary_value,
            well,
            max_principle_tol: cfg.max_principle_tol,
        };
        params.validate()?;
        params.check_resolution(grid)?;
        Ok(params)
    }

    pub fn approx(&self, eps: f64) -> ApproxSolution {
        ApproxSolution::new(eps, self.config.delta, self.d0.clone(), self.velocity.clone(), self.profile.clone())
    }

    /// Run the solver for one ε with the configured formulation.
    pub fn simulate(&self, eps: f64) -> Result<Run> {
        let grid = self.grid(eps)?;
        let params = self.params(eps, &grid)?;
        let started = std::time::Instant::now();
        let traj = match self.config.formulation {
            Formulation::Direct => {
                let d0 = ScalarField::from_fn(grid, |x| self.d0.value(x));
                let c0 = initial_condition(&params, &d0, &self.profile, &Cutoff);
                simulate(&params, &self.velocity, &c0)?
            }
            Formulation::Residual => simulate_residual(&params, &self.approx(eps), grid)?,
        };
        log::info!(
            "eps = {eps}: {} steps on {}² nodes in {:.1} s, max overshoot {:.2e}",
            traj.steps,
            grid.n(),
            started.elapsed().as_secs_f64(),
            traj.max_overshoot()
        );
        Ok(Run { eps, grid, params, traj })
    }

    /// `Γ_t = X_t(Γ₀)`.
    pub fn transported_interface(&self, t: f64) -> Result<Interface> {
        transport_oracle(&self.gamma0, &self.velocity, t)
    }

    /// Sharp limit and its stretched variant at time `t`.
    pub fn limits_at(&self, t: f64) -> Result<(f64, f64)> {
        let gamma = self.transported_interface(t)?;
        let map = FlowMap::new(self.velocity.clone(), t);
        let stretch = vertex_stretch(&gamma, self.d0_geometric.as_ref(), &map)?;
        let phi = &self.config.testfield;
        Ok((
            limit_functional(&gamma, phi, self.sigma, Some(&stretch))?,
            limit_functional(&gamma, phi, self.sigma, None)?,
        ))
    }

    /// Whether the motion-law oracle is curvature flow (`θ = 0`) or transport.
    pub fn curvature_oracle(&self) -> bool {
        self.config.theta == 0.0
    }

    /// Oracle interfaces at the given increasing times.
    pub fn oracle_interfaces(&self, times: &[f64]) -> Result<Vec<Interface>> {
        if !self.curvature_oracle() {
            return times.par_iter().map(|t| self.transported_interface(*t)).collect();
        }
        let m0 = self.config.m0;
        let mut iface = self.gamma0.resampled_count(TRACKING_VERTICES)?;
        let ds = iface.perimeter() / iface.len() as f64;
        let vmax = self.velocity.max_speed();
        let mut dt = 0.5 * ds * ds / (4.0 * m0);
        if vmax > 0.0 {
            dt = dt.min(0.25 * ds / vmax);
        }
        let mut out = Vec::with_capacity(times.len());
        let mut t = 0.0;
        for &target in times {
            if target > t {
                iface = mcf_oracle_between(&iface, &self.velocity, m0, t, target, dt, |_, _| {})?;
                t = target;
            }
            out.push(iface.clone());
        }
        Ok(out)
    }

    /// Per-snapshot and summary measurements of a run.
    pub fn measure(&self, run: &Run) -> Result<Measurement> {
        let traj = &run.traj;
        let a = self.approx(run.eps);
        let approx: Vec<ScalarField> = match &traj.approx {
            Some(list) => list.clone(),
            None => traj.times.iter().map(|t| a.nodal(run.grid, *t)).collect::<Result<_>>()?,
        };
        let oracles = self.oracle_interfaces(&traj.times)?;
        let phi = &self.config.testfield;
        let eps = run.eps;
        let theta = self.config.theta;
        let rows = (0..traj.times.len())
            .into_par_iter()
            .map(|k| {
                let (t, c, ca) = (traj.times[k], &traj.snapshots[k], &approx[k]);
                let u = ScalarField { grid: c.grid, values: c.values.iter().zip(&ca.values).map(|(x, y)| x - y).collect() };
                let ind = c.integral_of_pairs(ca, |x, y| (x - if y >= 0.0 { 1.0 } else { -1.0 }).powi(2));
                let h_eps = discrete_heps(c, phi, eps)?;
                let h_eps_a = discrete_heps(ca, phi, eps)?;
                let (limit_stretched, limit_sharp) = self.limits_at(t)?;
                let hausdorff = match extract_zero_contour(c) {
                    Ok(contour) => hausdorff_distance(&contour, &oracles[k]),
                    Err(e) => {
                        log::warn!("eps = {eps}, t = {t}: no solver contour ({e})");
                        f64::NAN
                    }
                };
                Ok(SnapshotRow {
                    eps,
                    theta,
                    t,
                    u_l2: u.l2_norm(),
                    grad_u_sq: u.gradient_sq_integral(),
                    indicator_sq: ind,
                    h_eps,
                    h_eps_a,
                    limit_stretched,
                    limit_sharp,
                    gap_stretched: (h_eps - limit_stretched).abs(),
                    gap_sharp: (h_eps - limit_sharp).abs(),
                    hausdorff_to_oracle: hausdorff,
                    overshoot: traj.overshoot[k],
                    mass: traj.mass[k],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let norms = difference_norms(traj, &a)?;
        let col = |f: fn(&SnapshotRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
        let times = &traj.times;
        let integrate = |v: &[f64]| -> Result<f64> {
            if times.len() >= 3 {
                time_integrated(times, v)
            } else {
                Ok(trapezoid_in_time(times, v))
            }
        };
        let h_int = integrate(&col(|r| r.h_eps))?;
        let ha_int = integrate(&col(|r| r.h_eps_a))?;
        let ls_int = integrate(&col(|r| r.limit_stretched))?;
        let lh_int = integrate(&col(|r| r.limit_sharp))?;
        let diff_int = integrate(&col(|r| r.h_eps - r.h_eps_a))?;
        let summary = SummaryRow {
            eps,
            theta,
            n: run.grid.n(),
            h: run.grid.h(),
            dt: traj.dt,
            steps: traj.steps,
            sup_l2: norms.sup_l2,
            eps_grad_sq: eps * norms.grad_l2_spacetime.powi(2),
            indicator_sq: norms.indicator_sq_spacetime,
            h_eps_int: h_int,
            h_eps_a_int: ha_int,
            limit_stretched_int: ls_int,
            limit_sharp_int: lh_int,
            gap_stretched_int: (h_int - ls_int).abs(),
            gap_sharp_int: (h_int - lh_int).abs(),
            heps_diff_int: diff_int.abs(),
            hausdorff_final: rows.last().map_or(f64::NAN, |r| r.hausdorff_to_oracle),
            max_overshoot: traj.max_overshoot(),
        };
        Ok(Measurement { rows, summary })
    }

    /// Norms of `c_A` at the configured times on a grid with `h ≤ ε/8`.
    pub fn approx_norms(&self, eps: f64, times: &[f64]) -> Result<Vec<ApproxNormRow>> {
        let grid = Grid::with_max_spacing(eps / self.config.cells_per_eps.max(8.0))?;
        let a = self.approx(eps);
        times
            .iter()
            .map(|t| {
                let n = layer_norms(&a, *t, grid)?;
                Ok(ApproxNormRow {
                    eps,
                    theta: self.config.theta,
                    t: *t,
                    grad_l2: n.grad_l2,
                    lap_l2: n.lap_l2,
                    f_l2: n.f_l2,
                    indicator_l2: n.indicator_l2,
                })
            })
            .collect()
    }
}

/// A finished solver run.
#[derive(Debug, Clone)]
pub struct Run {
    pub eps: f64,
    pub grid: Grid,
    pub params: RunParams,
    pub traj: Trajectory,
}

/// Measurements at one snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRow {
    pub eps: f64,
    pub theta: f64,
    pub t: f64,
    /// `‖c − c_A‖_{L²}`
    pub u_l2: f64,
    /// `‖∇(c − c_A)‖²_{L²}`
    pub grad_u_sq: f64,
    /// `‖c − (2χ − 1)‖²_{L²}`
    pub indicator_sq: f64,
    pub h_eps: f64,
    pub h_eps_a: f64,
    pub limit_stretched: f64,
    pub limit_sharp: f64,
    pub gap_stretched: f64,
    pub gap_sharp: f64,
    /// Hausdorff distance from the solver's zero contour to the oracle.
    pub hausdorff_to_oracle: f64,
    pub overshoot: f64,
    pub mass: f64,
}

impl SnapshotRow {
    pub fn functional_record(&self) -> FunctionalRecord {
        FunctionalRecord {
            eps: self.eps,
            theta: self.theta,
            t: Some(self.t),
            h_eps: self.h_eps,
            h_eps_a: self.h_eps_a,
            limit_stretched: self.limit_stretched,
            limit_sharp: self.limit_sharp,
        }
    }
}

/// Per-run summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub eps: f64,
    pub theta: f64,
    pub n: usize,
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    /// `sup_t ‖c − c_A‖_{L²}`
    pub sup_l2: f64,
    /// `ε ‖∇(c − c_A)‖²_{L²(Ω_T)}`
    pub eps_grad_sq: f64,
    /// `‖c − (2χ − 1)‖²_{L²(Ω_T)}`
    pub indicator_sq: f64,
    pub h_eps_int: f64,
    pub h_eps_a_int: f64,
    pub limit_stretched_int: f64,
    pub limit_sharp_int: f64,
    pub gap_stretched_int: f64,
    pub gap_sharp_int: f64,
    /// `|∫⟨H^ε − H^ε_A, φ⟩ dt|`
    pub heps_diff_int: f64,
    pub hausdorff_final: f64,
    pub max_overshoot: f64,
}

impl SummaryRow {
    pub fn functional_record(&self) -> FunctionalRecord {
        FunctionalRecord {
            eps: self.eps,
            theta: self.theta,
            t: None,
            h_eps: self.h_eps_int,
            h_eps_a: self.h_eps_a_int,
            limit_stretched: self.limit_stretched_int,
            limit_sharp: self.limit_sharp_int,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Measurement {
    pub rows: Vec<SnapshotRow>,
    pub summary: SummaryRow,
}

/// Norms of `c_A` at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxNormRow {
    pub eps: f64,
    pub theta: f64,
    pub t: f64,
    #[serde(rename = "grad_L2")]
    pub grad_l2: f64,
    #[serde(rename = "lap_L2")]
    pub lap_l2: f64,
    #[serde(rename = "f_L2")]
    pub f_l2: f64,
    #[serde(rename = "indicator_L2")]
    pub indicator_l2: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> RunConfig {
        let mut cfg = RunConfig::single_vortex_circle();
        cfg.t_final = 0.05;
        cfg.cells_per_eps = 4.0;
        cfg.eps = 0.08;
        cfg
    }

    #[test]
    fn grid_and_params_follow_config() {
        let s = Scenario::new(small()).unwrap();
        let g = s.grid(0.08).unwrap();
        assert!(g.h() <= 0.02 + 1e-15);
        let p = s.params(0.08, &g).unwrap();
        assert_eq!(p.mobility(), 0.08f64.powi(3));
        assert!(p.t_final / p.dt / p.snapshot_every as f64 <= 41.0);
    }

    #[test]
    fn clearance_is_checked() {
        let mut cfg = small();
        cfg.initial_interface = InterfaceSpec::Circle { center: [0.5, 0.5], radius: 0.3 };
        assert!(matches!(Scenario::new(cfg), Err(Error::Clearance { .. })));
    }

    #[test]
    fn flipped_convention_gives_same_geometry() {
        let s = Scenario::new(small()).unwrap();
        let mut cfg = small();
        cfg.boundary_value = -1.0;
        let f = Scenario::new(cfg).unwrap();
        let (a, b) = (s.simulate(0.08).unwrap(), f.simulate(0.08).unwrap());
        for (x, y) in a.traj.last().values.iter().zip(&b.traj.last().values) {
            assert!((x + y).abs() < 1e-12);
        }
        let (ma, mb) = (s.measure(&a).unwrap(), f.measure(&b).unwrap());
        assert!((ma.summary.h_eps_int - mb.summary.h_eps_int).abs() < 1e-12);
        assert!((ma.summary.sup_l2 - mb.summary.sup_l2).abs() < 1e-12);
    }

    #[test]
    fn short_run_measures() {
        let s = Scenario::new(small()).unwrap();
        let run = s.simulate(0.08).unwrap();
        let m = s.measure(&run).unwrap();
        assert_eq!(m.rows.len(), run.traj.times.len());
        assert_eq!(m.rows[0].u_l2, 0.0);
        assert!(m.summary.hausdorff_final < 2.0 * 0.08, "{}", m.summary.hausdorff_final);
        assert!(m.rows.iter().all(|r| r.h_eps.is_finite() && r.limit_sharp.is_finite()));
    }

    #[test]
    fn curvature_oracle_hits_requested_times() {
        let mut cfg = small();
        cfg.theta = 0.0;
        cfg.velocity.kind = crate::fields::VelocityKind::Zero;
        let s = Scenario::new(cfg).unwrap();
        let out = s.oracle_interfaces(&[0.0, 0.005, 0.01]).unwrap();
        let r = |i: &Interface| (i.enclosed_area() / std::f64::consts::PI).sqrt();
        assert!((r(&out[2]) / crate::oracles::shrinking_circle_radius(0.25, 1.0, 0.01).unwrap() - 1.0).abs() < 5e-3);
        assert!(r(&out[0]) > r(&out[1]) && r(&out[1]) > r(&out[2]));
    }
}
