//! The diffuse mean-curvature functional, its two candidate sharp limits and
//! the normal-profile fit.
//!
//! `⟨H^ε, φ⟩ = ε ∫ ∇c ⊗ ∇c : ∇φ dx` is evaluated with centered differences
//! for `∇c` and the analytic `∇φ`. The sharp limit `2σ ∫_Γ n⊗n : ∇φ` and its
//! stretched variant, weighted by `|∇e|`, are polyline quadratures.

use rayon::prelude::*;
use serde::Serialize;

use crate::fields::TestField;
use crate::geometry::{DistanceFunction, FlowMap, Interface};
use crate::grid::ScalarField;
use crate::profile::ProfileTable;
use crate::{Error, Mat2, Result, Vec2};

/// Values of the functionals at one time, or integrated over `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalRecord {
    pub eps: f64,
    pub theta: f64,
    /// Snapshot time; `None` for time-integrated values.
    pub t: Option<f64>,
    pub h_eps: f64,
    pub h_eps_a: f64,
    pub limit_stretched: f64,
    pub limit_sharp: f64,
}

impl FunctionalRecord {
    pub fn gap_stretched(&self) -> f64 {
        (self.h_eps - self.limit_stretched).abs()
    }

    pub fn gap_sharp(&self) -> f64 {
        (self.h_eps - self.limit_sharp).abs()
    }
}

/// `ε Σ (∇_h c ⊗ ∇_h c) : G(x) h²` over interior nodes, for any tensor field `G`.
pub(crate) fn stress_quadrature(c: &ScalarField, eps: f64, grad_phi: impl Fn(Vec2) -> Mat2 + Sync) -> f64 {
    let grid = c.grid;
    let n = grid.n();
    let h = grid.h();
    let sum: f64 = (1..n - 1)
        .into_par_iter()
        .map(|j| {
            let mut row = 0.0;
            for i in 1..n - 1 {
                let g = c.gradient_at(i, j);
                if g.x == 0.0 && g.y == 0.0 {
                    continue;
                }
                row += g.dot(&(grad_phi(grid.node(i, j)) * g));
            }
            row
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    eps * sum * h * h
}

/// `⟨H^ε, φ⟩` for the grid field `c`. The support of `φ` must keep two cells
/// of clearance from the boundary.
pub fn discrete_heps(c: &ScalarField, phi: &TestField, eps: f64) -> Result<f64> {
    let clearance = 2.0 * c.grid.h();
    let (lo, hi) = phi.support_box();
    if lo.x < clearance || lo.y < clearance || hi.x > 1.0 - clearance || hi.y > 1.0 - clearance {
        return Err(Error::SupportClearance);
    }
    Ok(stress_quadrature(c, eps, |x| phi.testfield_grad_at(x)))
}

/// `2σ Σ_segments s · (n⊗n : ∇φ)(midpoint) · length`, with `s` the mean of
/// the endpoint stretches, or 1 for the sharp functional.
pub fn limit_functional(iface: &Interface, phi: &TestField, sigma: f64, stretch: Option<&[f64]>) -> Result<f64> {
    if let Some(s) = stretch {
        if s.len() != iface.len() {
            return Err(Error::InvalidInput(format!(
                "{} stretch values for {} vertices",
                s.len(),
                iface.len()
            )));
        }
    }
    let v = iface.vertices();
    let m = v.len();
    let mut total = 0.0;
    for k in 0..m {
        let (a, b) = (v[k], v[(k + 1) % m]);
        let t = b - a;
        let len = t.norm();
        if len == 0.0 {
            continue;
        }
        // Counter-clockwise orientation: (t_y, −t_x) points outward.
        let n = Vec2::new(t.y, -t.x) / len;
        let weight = stretch.map_or(1.0, |s| 0.5 * (s[k] + s[(k + 1) % m]));
        total += weight * phi.normal_stress(0.5 * (a + b), n) * len;
    }
    Ok(2.0 * sigma * total)
}

/// `|∇e|` at every vertex of `iface`, where `map` runs from 0 to the
/// interface's time and `d0` is the initial signed distance.
pub fn vertex_stretch(iface: &Interface, d0: &dyn DistanceFunction, map: &FlowMap) -> Result<Vec<f64>> {
    iface
        .vertices()
        .par_iter()
        .map(|x| crate::geometry::stretch_factor(d0, map, *x))
        .collect()
}

/// Trapezoid rule in time over at least three snapshot values.
pub fn time_integrated(times: &[f64], values: &[f64]) -> Result<f64> {
    if times.len() != values.len() {
        return Err(Error::InvalidInput(format!("{} times for {} values", times.len(), values.len())));
    }
    if times.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: times.len() });
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("snapshot times must increase".into()));
    }
    Ok(crate::approx::trapezoid_in_time(times, values))
}

/// Per-vertex least-squares fit of `θ₀(s(r − εb)/ε)` to samples along the
/// vertex normals.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ProfileFit {
    /// Fitted stretch `s` per vertex (NaN where skipped).
    pub stretch: Vec<f64>,
    /// Fitted shift `b` per vertex (NaN where skipped).
    pub shift: Vec<f64>,
    /// RMS residual per vertex (NaN where skipped).
    pub residual: Vec<f64>,
    /// Vertices whose fit diverged.
    pub skipped: Vec<usize>,
}

impl ProfileFit {
    /// Fitted stretch values of the vertices that were not skipped.
    pub fn fitted_stretch(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.stretch.iter().copied().enumerate().filter(|(_, s)| s.is_finite())
    }
}

pub const FIT_STRETCH_RANGE: (f64, f64) = (0.3, 3.0);
pub const FIT_SHIFT_RANGE: (f64, f64) = (-2.0, 2.0);
/// Samples per normal line of half-length 3ε.
const FIT_SAMPLES: usize = 49;

struct LineFit {
    s: f64,
    b: f64,
    rms: f64,
}

fn sum_sq(profile: &ProfileTable, r: &[f64], y: &[f64], s: f64, b: f64) -> f64 {
    r.iter().zip(y).map(|(r, y)| (profile.value(s * (r - b)) - y).powi(2)).sum()
}

/// Fit one normal line; `r` is measured in units of ε.
fn fit_line(profile: &ProfileTable, r: &[f64], y: &[f64]) -> Option<LineFit> {
    let (s_lo, s_hi) = FIT_STRETCH_RANGE;
    let (b_lo, b_hi) = FIT_SHIFT_RANGE;
    // Global grid search avoids spurious minima at weak-gradient vertices.
    let mut best = (f64::INFINITY, 1.0, 0.0);
    for is in 0..=27 {
        let s = s_lo + 0.1 * is as f64;
        for ib in 0..=40 {
            let b = b_lo + 0.1 * ib as f64;
            let e = sum_sq(profile, r, y, s, b);
            if e < best.0 {
                best = (e, s, b);
            }
        }
    }
    let (mut err, mut s, mut b) = best;
    // Damped Gauss-Newton refinement.
    let mut lambda = 1e-3;
    for _ in 0..100 {
        let (mut jtj, mut jtr) = (Mat2::zeros(), Vec2::zeros());
        for (ri, yi) in r.iter().zip(y) {
            let z = s * (ri - b);
            let d = profile.derivative(z);
            let j = Vec2::new(d * (ri - b), -s * d);
            jtj += j * j.transpose();
            jtr += j * (profile.value(z) - yi);
        }
        let damped = jtj + Mat2::from_diagonal(&jtj.diagonal()) * lambda;
        let Some(delta) = damped.try_inverse().map(|m| -(m * jtr)) else {
            break;
        };
        let (s_new, b_new) = (s + delta.x, b + delta.y);
        let e_new = sum_sq(profile, r, y, s_new, b_new);
        if e_new.is_finite() && e_new < err {
            let done = (err - e_new) <= 1e-15 * err.max(1e-300) || delta.norm() < 1e-13;
            (s, b, err) = (s_new, b_new, e_new);
            lambda = (lambda * 0.3).max(1e-12);
            if done {
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e8 {
                break;
            }
        }
    }
    let inside = (s_lo..=s_hi).contains(&s) && (b_lo..=b_hi).contains(&b);
    (inside && err.is_finite()).then(|| LineFit { s, b, rms: (err / r.len() as f64).sqrt() })
}

/// Fit the optimal profile along the normal of every vertex of `iface`,
/// sampling `sample` on lines of half-length 3ε.
pub fn profile_fit_with(
    sample: impl Fn(Vec2) -> f64 + Sync,
    iface: &Interface,
    profile: &ProfileTable,
    eps: f64,
) -> ProfileFit {
    let r: Vec<f64> = (0..FIT_SAMPLES).map(|k| -3.0 + 6.0 * k as f64 / (FIT_SAMPLES - 1) as f64).collect();
    let fits: Vec<Option<LineFit>> = iface
        .vertices()
        .par_iter()
        .zip(iface.normals().par_iter())
        .map(|(p, n)| {
            let y: Vec<f64> = r.iter().map(|rk| sample(p + n * (rk * eps))).collect();
            if y.iter().any(|v| !v.is_finite()) {
                return None;
            }
            fit_line(profile, &r, &y)
        })
        .collect();
    let mut out = ProfileFit::default();
    for (k, fit) in fits.into_iter().enumerate() {
        match fit {
            Some(f) => {
                out.stretch.push(f.s);
                out.shift.push(f.b);
                out.residual.push(f.rms);
            }
            None => {
                log::warn!("profile fit diverged at vertex {k}");
                out.stretch.push(f64::NAN);
                out.shift.push(f64::NAN);
                out.residual.push(f64::NAN);
                out.skipped.push(k);
            }
        }
    }
    out
}

/// [`profile_fit_with`] on the bicubic interpolant of a grid field.
pub fn profile_fit(c: &ScalarField, iface: &Interface, profile: &ProfileTable, eps: f64) -> ProfileFit {
    profile_fit_with(|x| c.interpolate(x), iface, profile, eps)
}
