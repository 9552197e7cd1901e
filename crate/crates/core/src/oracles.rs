//! Sharp-interface reference evolutions: pure transport, convective curve
//! shortening by front tracking, and the shrinking-circle closed form.

use crate::fields::StreamVelocity;
use crate::geometry::{FlowMap, Interface};
use crate::{Error, Result};

/// Push the vertices of `iface0` forward by the flow up to time `t` and
/// resample to uniform spacing with the same vertex count.
pub fn transport_oracle(iface0: &Interface, v: &StreamVelocity, t: f64) -> Result<Interface> {
    if v.is_zero() || t == 0.0 {
        return Ok(iface0.clone());
    }
    let map = FlowMap::new(v.clone(), t);
    iface0.map_vertices(|p| map.flow_forward(p))?.resampled_count(iface0.len())
}

/// Minimum vertex count for resolvable curvature.
pub const MCF_MIN_VERTICES: usize = 64;

/// Spacing ratio (max/min) beyond which vertices are redistributed.
pub const RESAMPLE_SPACING_RATIO: f64 = 1.2;

/// Front tracking of `V = n·v + m₀κ`, with `κ` signed as in
/// [`Interface::curvatures`] (negative on convex curves), by forward Euler
/// with uniform-arclength redistribution.
///
/// Each spline resampling perturbs the curve by a small fixed amount, so
/// vertices are redistributed only once the spacing ratio exceeds
/// [`RESAMPLE_SPACING_RATIO`]. Redistributing every step would make the
/// accumulated perturbation grow as `dt` shrinks.
///
/// `observer` sees the interface after every step. Steps are subdivided when
/// shrinking spacing makes `dt` exceed the explicit bound `ds²/(4m₀)`.
pub fn mcf_oracle_with(
    iface0: &Interface,
    v: &StreamVelocity,
    m0: f64,
    t_end: f64,
    dt: f64,
    observer: impl FnMut(f64, &Interface),
) -> Result<Interface> {
    mcf_oracle_between(iface0, v, m0, 0.0, t_end, dt, observer)
}

/// [`mcf_oracle_with`] started from `iface0` at time `t0`.
pub fn mcf_oracle_between(
    iface0: &Interface,
    v: &StreamVelocity,
    m0: f64,
    t0: f64,
    t_end: f64,
    dt: f64,
    mut observer: impl FnMut(f64, &Interface),
) -> Result<Interface> {
    if iface0.len() < MCF_MIN_VERTICES {
        return Err(Error::InvalidInput(format!(
            "front tracking needs at least {MCF_MIN_VERTICES} vertices, got {}",
            iface0.len()
        )));
    }
    if !(m0 >= 0.0 && dt > 0.0 && t_end >= t0) {
        return Err(Error::InvalidInput("need m0 ≥ 0, dt > 0 and t_end ≥ t0".into()));
    }
    let bound = |iface: &Interface| {
        let ds = min_spacing(iface);
        if m0 > 0.0 {
            ds * ds / (4.0 * m0)
        } else {
            f64::INFINITY
        }
    };
    if dt > bound(iface0) * (1.0 + 1e-12) {
        return Err(Error::InvalidInput(format!(
            "dt = {dt:e} exceeds the front-tracking bound {:e}",
            bound(iface0)
        )));
    }
    let count = iface0.len();
    let steps = ((t_end - t0) / dt * (1.0 - 1e-12)).ceil() as usize;
    let mut iface = iface0.clone();
    let mut t = t0;
    for k in 0..steps {
        let target = if k + 1 == steps { t_end } else { t0 + (k + 1) as f64 * dt };
        let sub = ((target - t) / bound(&iface)).ceil().max(1.0) as usize;
        let h = (target - t) / sub as f64;
        for _ in 0..sub {
            iface = euler_step(&iface, v, m0, t, h).map_err(|e| match e {
                Error::SelfIntersection(..) => Error::FrontIntersection(t + h),
                other => other,
            })?;
            if iface.spacing_ratio() > RESAMPLE_SPACING_RATIO {
                iface = iface.resampled_count(count).map_err(|e| match e {
                    Error::SelfIntersection(..) => Error::FrontIntersection(t + h),
                    other => other,
                })?;
            }
            t += h;
        }
        t = target;
        observer(t, &iface);
    }
    Ok(iface)
}

/// [`mcf_oracle_with`] without an observer.
pub fn mcf_oracle(iface0: &Interface, v: &StreamVelocity, m0: f64, t_end: f64, dt: f64) -> Result<Interface> {
    mcf_oracle_with(iface0, v, m0, t_end, dt, |_, _| {})
}

/// Three-point curvature `κ = (2/(a+b)) ((x₊ − x)/a − (x − x₋)/b) · n`.
///
/// Same sign convention as the interface curvatures. The five-vertex circle
/// fit used for static curvature amplifies short-wave perturbations when fed
/// back into the motion, while this second difference damps them.
fn tracking_curvature(iface: &Interface) -> Vec<f64> {
    let v = iface.vertices();
    let m = v.len();
    (0..m)
        .map(|k| {
            let (prev, x, next) = (v[(k + m - 1) % m], v[k], v[(k + 1) % m]);
            let (a, b) = ((next - x).norm(), (x - prev).norm());
            let kn = ((next - x) / a - (x - prev) / b) * (2.0 / (a + b));
            kn.dot(&iface.normals()[k])
        })
        .collect()
}

fn euler_step(iface: &Interface, v: &StreamVelocity, m0: f64, t: f64, dt: f64) -> Result<Interface> {
    let kappa = tracking_curvature(iface);
    let moved = iface
        .vertices()
        .iter()
        .zip(iface.normals())
        .zip(&kappa)
        .map(|((x, n), kappa)| {
            let speed = v.velocity_at(*x, t).dot(n) + m0 * kappa;
            x + n * (speed * dt)
        })
        .collect();
    Interface::new(moved)
}

fn min_spacing(iface: &Interface) -> f64 {
    iface.segments().map(|(a, b)| (b - a).norm()).fold(f64::INFINITY, f64::min)
}

/// `√(R₀² − 2m₀t)`, the radius of a circle shrinking by `V = m₀κ`.
pub fn shrinking_circle_radius(r0: f64, m0: f64, t: f64) -> Result<f64> {
    if !(r0 > 0.0 && m0 >= 0.0 && t >= 0.0) {
        return Err(Error::InvalidInput("need R0 > 0, m0 ≥ 0 and t ≥ 0".into()));
    }
    let extinction = r0 * r0 / (2.0 * m0);
    if t >= extinction {
        return Err(Error::Extinction { extinction, t });
    }
    Ok((r0 * r0 - 2.0 * m0 * t).sqrt())
}
