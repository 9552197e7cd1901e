//! Periodic cubic-spline resampling of closed polylines.

use crate::Vec2;

/// Resample a closed polyline to `count` points equally spaced in the
/// chord-length parameter of a periodic interpolating cubic spline.
pub(crate) fn resample_closed(pts: &[Vec2], count: usize) -> Vec<Vec2> {
    let n = pts.len();
    let h: Vec<f64> = (0..n).map(|k| (pts[(k + 1) % n] - pts[k]).norm()).collect();
    let mut knots = Vec::with_capacity(n + 1);
    knots.push(0.0);
    for hk in &h {
        knots.push(knots.last().unwrap() + hk);
    }
    let total = knots[n];
    let xs: Vec<f64> = pts.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.y).collect();
    let mx = periodic_moments(&h, &xs);
    let my = periodic_moments(&h, &ys);

    let mut out = Vec::with_capacity(count);
    let mut k = 0;
    for m in 0..count {
        let s = total * m as f64 / count as f64;
        while k + 1 < n && knots[k + 1] <= s {
            k += 1;
        }
        let k1 = (k + 1) % n;
        let eval = |y: &[f64], mm: &[f64]| {
            let hk = h[k];
            let a = knots[k + 1] - s;
            let b = s - knots[k];
            mm[k] * a.powi(3) / (6.0 * hk)
                + mm[k1] * b.powi(3) / (6.0 * hk)
                + (y[k] / hk - mm[k] * hk / 6.0) * a
                + (y[k1] / hk - mm[k1] * hk / 6.0) * b
        };
        out.push(Vec2::new(eval(&xs, &mx), eval(&ys, &my)));
    }
    out
}

/// Second-derivative moments of the periodic spline through `y` with
/// interval lengths `h` (cyclic tridiagonal solve via Sherman–Morrison).
fn periodic_moments(h: &[f64], y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut c = vec![0.0; n];
    let mut r = vec![0.0; n];
    for k in 0..n {
        let hp = h[(k + n - 1) % n];
        let hk = h[k];
        a[k] = hp;
        b[k] = 2.0 * (hp + hk);
        c[k] = hk;
        r[k] = 6.0 * ((y[(k + 1) % n] - y[k]) / hk - (y[k] - y[(k + n - 1) % n]) / hp);
    }
    solve_cyclic(&a, &b, &c, &r)
}

/// Solve the cyclic tridiagonal system with sub-diagonal `a`, diagonal `b`,
/// super-diagonal `c`; `a[0]` and `c[n-1]` are the corner entries.
fn solve_cyclic(a: &[f64], b: &[f64], c: &[f64], r: &[f64]) -> Vec<f64> {
    let n = b.len();
    let alpha = c[n - 1];
    let beta = a[0];
    let gamma = -b[0];
    let mut bb = b.to_vec();
    bb[0] -= gamma;
    bb[n - 1] -= alpha * beta / gamma;
    let x = solve_tridiagonal(a, &bb, c, r);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = solve_tridiagonal(a, &bb, c, &u);
    let fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

fn solve_tridiagonal(a: &[f64], b: &[f64], c: &[f64], r: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    cp[0] = c[0] / b[0];
    dp[0] = r[0] / b[0];
    for i in 1..n {
        let m = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / m;
        dp[i] = (r[i] - a[i] * dp[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_solver_matches_dense() {
        let n = 7;
        let a: Vec<f64> = (0..n).map(|k| 1.0 + 0.1 * k as f64).collect();
        let b: Vec<f64> = (0..n).map(|k| 5.0 + k as f64).collect();
        let c: Vec<f64> = (0..n).map(|k| 0.5 + 0.2 * k as f64).collect();
        let r: Vec<f64> = (0..n).map(|k| (k as f64).sin()).collect();
        let x = solve_cyclic(&a, &b, &c, &r);
        for i in 0..n {
            let lhs = a[i] * x[(i + n - 1) % n] + b[i] * x[i] + c[i] * x[(i + 1) % n];
            assert!((lhs - r[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn resampled_circle_stays_on_circle() {
        let pts: Vec<Vec2> = (0..40)
            .map(|k| {
                let a = std::f64::consts::TAU * (k as f64 + 0.3 * (k as f64).sin()) / 40.0;
                Vec2::new(a.cos(), a.sin())
            })
            .collect();
        for p in resample_closed(&pts, 200) {
            assert!((p.norm() - 1.0).abs() < 1e-4);
        }
    }
}
