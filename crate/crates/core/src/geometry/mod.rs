//! Interfaces, signed distances, characteristic flow maps and the
//! transported level set.
//!
//! Sign conventions: the interface Γ bounds the inner phase Ω⁻, normals point
//! out of Ω⁻, signed distances are negative inside, and curvature is taken so
//! that a circle of radius `R` has curvature `−1/R`.

mod contour;
mod distance;
mod flow;
mod levelset;
mod spline;

pub use contour::extract_zero_contour;
pub use distance::{
    signed_distance_circle, signed_distance_polyline, CircleDistance, DistanceFunction,
    PolylineDistance,
};
pub use flow::{FlowMap, NodalBackwardMap, DEFAULT_FLOW_STEP};
pub use levelset::{stretch_factor, transported_level_set, LevelSetField};

use std::io::{Read, Write};

use crate::{Error, Result, Vec2};

/// Closed, simple, positively oriented polyline with per-vertex outward
/// normals and signed curvatures.
#[derive(Debug, Clone, PartialEq)]
pub struct Interface {
    vertices: Vec<Vec2>,
    normals: Vec<Vec2>,
    curvatures: Vec<f64>,
}

impl Interface {
    /// Validate and orient a closed polyline (the closing segment is implied).
    pub fn new(mut vertices: Vec<Vec2>) -> Result<Self> {
        if vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 5 {
            return Err(Error::InvalidInput(format!(
                "interface needs at least 5 vertices, got {}",
                vertices.len()
            )));
        }
        if let Some(p) = vertices.iter().find(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite vertex {p:?}")));
        }
        check_simple(&vertices)?;
        if shoelace(&vertices) < 0.0 {
            vertices.reverse();
        }
        Ok(Self::from_oriented(vertices))
    }

    /// Internal constructor for vertex lists known to be simple and CCW.
    pub(crate) fn from_oriented(vertices: Vec<Vec2>) -> Self {
        let normals = vertex_normals(&vertices);
        let curvatures = circle_fit_curvatures(&vertices, &normals);
        Self { vertices, normals, curvatures }
    }

    /// Regular `n`-gon inscribed in a circle.
    pub fn circle(center: Vec2, radius: f64, n: usize) -> Self {
        let vertices = (0..n)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / n as f64;
                center + radius * Vec2::new(a.cos(), a.sin())
            })
            .collect();
        Self::from_oriented(vertices)
    }

    /// Ellipse with semi-axes `a` (along x) and `b` (along y), sampled
    /// uniformly in the parameter angle.
    pub fn ellipse(center: Vec2, a: f64, b: f64, n: usize) -> Self {
        let vertices = (0..n)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / n as f64;
                center + Vec2::new(a * t.cos(), b * t.sin())
            })
            .collect();
        Self::from_oriented(vertices)
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn normals(&self) -> &[Vec2] {
        &self.normals
    }

    pub fn curvatures(&self) -> &[f64] {
        &self.curvatures
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Segments `(a, b)` including the closing one.
    pub fn segments(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn perimeter(&self) -> f64 {
        self.segments().map(|(a, b)| (b - a).norm()).sum()
    }

    /// Shoelace area (positive for the CCW orientation).
    pub fn enclosed_area(&self) -> f64 {
        shoelace(&self.vertices)
    }

    /// `L² / (4πA)`, equal to 1 for a circle.
    pub fn isoperimetric_ratio(&self) -> f64 {
        let l = self.perimeter();
        l * l / (4.0 * std::f64::consts::PI * self.enclosed_area())
    }

    pub fn mean_spacing(&self) -> f64 {
        self.perimeter() / self.len() as f64
    }

    /// Ratio of the largest to the smallest adjacent-vertex spacing.
    pub fn spacing_ratio(&self) -> f64 {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (a, b) in self.segments() {
            let d = (b - a).norm();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        hi / lo
    }

    /// Area centroid.
    pub fn centroid(&self) -> Vec2 {
        let mut c = Vec2::zeros();
        let mut a2 = 0.0;
        for (p, q) in self.segments() {
            let cr = p.x * q.y - q.x * p.y;
            a2 += cr;
            c += (p + q) * cr;
        }
        c / (3.0 * a2)
    }

    /// Least-squares (Kåsa) circle through all vertices: `(center, radius)`.
    pub fn fit_circle(&self) -> Option<(Vec2, f64)> {
        kasa_fit(&self.vertices)
    }

    /// Resample to (nearly) uniform arclength with the given target spacing by
    /// periodic cubic-spline interpolation through the current vertices.
    pub fn resampled(&self, spacing: f64) -> Result<Self> {
        let count = ((self.perimeter() / spacing).round() as usize).max(8);
        self.resampled_count(count)
    }

    pub fn resampled_count(&self, count: usize) -> Result<Self> {
        let pts = spline::resample_closed(&self.vertices, count);
        Self::new(pts)
    }

    /// Apply a map to every vertex and rebuild normals and curvatures.
    pub fn map_vertices(&self, mut f: impl FnMut(Vec2) -> Result<Vec2>) -> Result<Self> {
        let v = self.vertices.iter().map(|p| f(*p)).collect::<Result<Vec<_>>>()?;
        Self::new(v)
    }

    /// CSV vertex list with columns `x, y`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["x", "y"])?;
        for p in &self.vertices {
            wtr.write_record([p.x.to_string(), p.y.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut v = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |k: usize| -> Result<f64> {
                rec.get(k)
                    .ok_or_else(|| Error::InvalidInput("missing column".into()))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidInput(format!("bad coordinate: {e}")))
            };
            v.push(Vec2::new(parse(0)?, parse(1)?));
        }
        Self::new(v)
    }
}

/// Per-vertex signed curvature by 5-vertex circle fits.
pub fn interface_curvature(iface: &Interface) -> Vec<f64> {
    iface.curvatures.clone()
}

/// Symmetric Hausdorff distance between two polylines, measured from the
/// vertices of each to the segments of the other.
pub fn hausdorff_distance(a: &Interface, b: &Interface) -> f64 {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

fn directed_hausdorff(a: &Interface, b: &Interface) -> f64 {
    a.vertices
        .iter()
        .map(|p| b.segments().map(|(s, t)| point_segment_distance(*p, s, t)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

#[inline]
pub(crate) fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    (p - closest_on_segment(p, a, b)).norm()
}

#[inline]
pub(crate) fn closest_on_segment(p: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let d = b - a;
    let l2 = d.norm_squared();
    if l2 == 0.0 {
        return a;
    }
    let t = ((p - a).dot(&d) / l2).clamp(0.0, 1.0);
    a + t * d
}

pub(crate) fn shoelace(v: &[Vec2]) -> f64 {
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n {
        let (p, q) = (v[i], v[(i + 1) % n]);
        s += p.x * q.y - q.x * p.y;
    }
    0.5 * s
}

fn vertex_normals(v: &[Vec2]) -> Vec<Vec2> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let t = v[(i + 1) % n] - v[(i + n - 1) % n];
            Vec2::new(t.y, -t.x).normalize()
        })
        .collect()
}

fn circle_fit_curvatures(v: &[Vec2], normals: &[Vec2]) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let pts: Vec<Vec2> = (0..5).map(|k| v[(i + n + k - 2) % n]).collect();
            // Collinearity guard: deviation of the stencil from its chord.
            let chord = pts[4] - pts[0];
            let len = chord.norm();
            let dev = pts
                .iter()
                .map(|p| ((p - pts[0]).perp(&chord) / len).abs())
                .fold(0.0, f64::max);
            if len == 0.0 || dev <= 1e-14 * len {
                return 0.0;
            }
            match kasa_fit(&pts) {
                Some((c, r)) => {
                    if (c - v[i]).dot(&normals[i]) < 0.0 {
                        -1.0 / r
                    } else {
                        1.0 / r
                    }
                }
                None => 0.0,
            }
        })
        .collect()
}

/// Algebraic least-squares circle fit in shifted, scaled coordinates.
fn kasa_fit(pts: &[Vec2]) -> Option<(Vec2, f64)> {
    let m = pts.iter().sum::<Vec2>() / pts.len() as f64;
    let scale = pts.iter().map(|p| (p - m).norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    let mut a = nalgebra::Matrix3::<f64>::zeros();
    let mut rhs = nalgebra::Vector3::<f64>::zeros();
    for p in pts {
        let q = (p - m) / scale;
        let row = nalgebra::Vector3::new(q.x, q.y, 1.0);
        let z = -(q.x * q.x + q.y * q.y);
        a += row * row.transpose();
        rhs += row * z;
    }
    let sol = a.lu().solve(&rhs)?;
    let center = Vec2::new(-sol[0] / 2.0, -sol[1] / 2.0);
    let r2 = center.norm_squared() - sol[2];
    if !(r2 > 0.0) || !r2.is_finite() {
        return None;
    }
    Some((m + center * scale, r2.sqrt() * scale))
}

/// Reject self-intersecting polylines with a sorted sweep over segment x-extents.
fn check_simple(v: &[Vec2]) -> Result<()> {
    let n = v.len();
    let mut order: Vec<usize> = (0..n).collect();
    let lo = |i: usize| v[i].x.min(v[(i + 1) % n].x);
    let hi = |i: usize| v[i].x.max(v[(i + 1) % n].x);
    order.sort_by(|&a, &b| lo(a).total_cmp(&lo(b)));
    for (k, &i) in order.iter().enumerate() {
        let hi_i = hi(i);
        for &j in &order[k + 1..] {
            if lo(j) > hi_i {
                break;
            }
            let adjacent = (i + 1) % n == j || (j + 1) % n == i;
            if adjacent {
                continue;
            }
            if segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                return Err(Error::SelfIntersection(i.min(j), i.max(j)));
            }
        }
    }
    Ok(())
}

fn segments_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let orient = |a: Vec2, b: Vec2, c: Vec2| (b - a).perp(&(c - a));
    let on_seg = |a: Vec2, b: Vec2, c: Vec2| {
        c.x >= a.x.min(b.x) && c.x <= a.x.max(b.x) && c.y >= a.y.min(b.y) && c.y <= a.y.max(b.y)
    };
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_seg(q1, q2, p1))
        || (d2 == 0.0 && on_seg(q1, q2, p2))
        || (d3 == 0.0 && on_seg(p1, p2, q1))
        || (d4 == 0.0 && on_seg(p1, p2, q2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    fn c0() -> Vec2 {
        Vec2::new(0.5, 0.5)
    }

    #[test]
    fn circle_curvature_and_normals() {
        let iface = Interface::circle(c0(), 0.25, 512);
        for (k, n) in iface.curvatures().iter().zip(iface.normals()) {
            assert!((k + 4.0).abs() < 1e-3, "{k}");
            assert!((n.norm() - 1.0).abs() < 1e-12);
        }
        let v = iface.vertices()[0];
        assert!((iface.normals()[0] - (v - c0()).normalize()).norm() < 1e-12);
    }

    #[test]
    fn ellipse_curvature_at_major_axis() {
        let iface = Interface::ellipse(c0(), 0.3, 0.2, 1024);
        let expected = -0.3 / (0.2 * 0.2);
        assert!((iface.curvatures()[0] - expected).abs() < 0.01 * expected.abs());
    }

    /// Rounded square: straight sides joined by quarter circles, sampled at
    /// roughly uniform spacing `ds`. Returns the vertices and the index of a
    /// vertex in the middle of a straight side.
    fn rounded_square(half: f64, r: f64, ds: f64) -> (Vec<Vec2>, usize) {
        let m_arc = ((PI * r / 2.0) / ds).round() as usize;
        let m_side = ((2.0 * (half - r)) / ds).round() as usize;
        let mut v = Vec::new();
        let corners = [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)];
        for (k, (sx, sy)) in corners.iter().enumerate() {
            let cc = c0() + Vec2::new(sx * (half - r), sy * (half - r));
            let a0 = k as f64 * PI / 2.0;
            for m in 0..m_arc {
                let a = a0 + (PI / 2.0) * m as f64 / m_arc as f64;
                v.push(cc + r * Vec2::new(a.cos(), a.sin()));
            }
            let a = a0 + PI / 2.0;
            let start = cc + r * Vec2::new(a.cos(), a.sin());
            let next = corners[(k + 1) % 4];
            let end_c = c0() + Vec2::new(next.0 * (half - r), next.1 * (half - r));
            let end = end_c + r * Vec2::new(a.cos(), a.sin());
            for m in 0..m_side {
                v.push(start + (end - start) * (m as f64 / m_side as f64));
            }
        }
        (v, m_arc + m_side / 2)
    }

    #[test]
    fn straight_segment_has_zero_curvature() {
        let (v, mid) = rounded_square(0.2, 0.05, 0.004);
        let iface = Interface::new(v).unwrap();
        let k = iface.curvatures()[mid];
        assert!(k.abs() < 1e-3, "{k}");
    }

    #[test]
    fn curvature_integral_is_minus_two_pi() {
        for iface in [
            Interface::circle(c0(), 0.25, 300),
            Interface::ellipse(c0(), 0.3, 0.2, 400),
            Interface::new(rounded_square(0.2, 0.05, 0.002).0).unwrap(),
        ] {
            let n = iface.len();
            let total: f64 = (0..n)
                .map(|i| {
                    let v = iface.vertices();
                    let ds = 0.5 * ((v[(i + 1) % n] - v[i]).norm() + (v[i] - v[(i + n - 1) % n]).norm());
                    iface.curvatures()[i] * ds
                })
                .sum();
            assert!((total + TAU).abs() < 0.01 * TAU, "{total}");
        }
    }

    #[test]
    fn orientation_is_normalized_and_self_intersection_rejected() {
        let mut v: Vec<Vec2> = Interface::circle(c0(), 0.2, 64).vertices().to_vec();
        v.reverse();
        let iface = Interface::new(v).unwrap();
        assert!(iface.enclosed_area() > 0.0);
        let bow = vec![
            Vec2::new(0.2, 0.2),
            Vec2::new(0.8, 0.8),
            Vec2::new(0.8, 0.5),
            Vec2::new(0.5, 0.3),
            Vec2::new(0.2, 0.8),
        ];
        assert!(matches!(Interface::new(bow), Err(Error::SelfIntersection(_, _))));
    }

    #[test]
    fn hausdorff_basics() {
        let a = Interface::circle(c0(), 0.25, 512);
        assert_eq!(hausdorff_distance(&a, &a), 0.0);
        let b = Interface::circle(c0(), 0.27, 512);
        let d = hausdorff_distance(&a, &b);
        let poly_err = 0.27 * (1.0 - (PI / 512.0).cos());
        assert!((d - 0.02).abs() <= poly_err + 1e-12, "{d}");
    }

    #[test]
    fn resampling_is_uniform_and_preserves_shape() {
        let iface = Interface::ellipse(c0(), 0.3, 0.2, 97);
        let r = iface.resampled(0.005).unwrap();
        assert!(r.spacing_ratio() < 1.05, "{}", r.spacing_ratio());
        let exact = PI * 0.3 * 0.2;
        assert!((r.enclosed_area() - exact).abs() / exact < 1e-3);
        assert!(hausdorff_distance(&iface, &r) < 1e-3);
    }

    #[test]
    fn csv_round_trip() {
        let iface = Interface::circle(c0(), 0.2, 32);
        let mut buf = Vec::new();
        iface.write_csv(&mut buf).unwrap();
        let back = Interface::read_csv(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back.vertices(), iface.vertices());
    }

    #[test]
    fn circle_fit_recovers_radius() {
        let iface = Interface::circle(Vec2::new(0.4, 0.6), 0.17, 64);
        let (c, r) = iface.fit_circle().unwrap();
        assert!((c - Vec2::new(0.4, 0.6)).norm() < 1e-12 && (r - 0.17).abs() < 1e-12);
    }
}
