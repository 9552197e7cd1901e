//! Signed distance functions (negative inside Ω⁻).

use super::{closest_on_segment, Interface};
use crate::grid::{Grid, ScalarField};
use crate::{Error, Result, Vec2};

/// A signed distance (or level-set) function that can be evaluated off-grid.
pub trait DistanceFunction: Send + Sync {
    fn value(&self, p: Vec2) -> f64;
    fn gradient(&self, p: Vec2) -> Vec2;
}

/// Exact signed distance to a circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleDistance {
    pub center: Vec2,
    pub radius: f64,
}

impl CircleDistance {
    pub fn new(center: Vec2, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::NonPositive(radius));
        }
        Ok(Self { center, radius })
    }

    /// Smallest distance from the circle to the boundary of the unit box.
    pub fn clearance(&self) -> f64 {
        let c = self.center;
        c.x.min(c.y).min(1.0 - c.x).min(1.0 - c.y) - self.radius
    }
}

impl DistanceFunction for CircleDistance {
    fn value(&self, p: Vec2) -> f64 {
        (p - self.center).norm() - self.radius
    }

    fn gradient(&self, p: Vec2) -> Vec2 {
        let d = p - self.center;
        let r = d.norm();
        if r == 0.0 {
            Vec2::zeros()
        } else {
            d / r
        }
    }
}

/// Signed distance to a closed polyline, sign by winding number.
#[derive(Debug, Clone)]
pub struct PolylineDistance {
    iface: Interface,
}

impl PolylineDistance {
    pub fn new(iface: Interface) -> Self {
        Self { iface }
    }

    pub fn interface(&self) -> &Interface {
        &self.iface
    }

    fn closest(&self, p: Vec2) -> (Vec2, f64) {
        let mut best = (p, f64::INFINITY);
        for (a, b) in self.iface.segments() {
            let q = closest_on_segment(p, a, b);
            let d = (p - q).norm_squared();
            if d < best.1 {
                best = (q, d);
            }
        }
        (best.0, best.1.sqrt())
    }

    fn winding(&self, p: Vec2) -> i32 {
        let mut w = 0;
        for (a, b) in self.iface.segments() {
            let side = (b - a).perp(&(p - a));
            if a.y <= p.y {
                if b.y > p.y && side > 0.0 {
                    w += 1;
                }
            } else if b.y <= p.y && side < 0.0 {
                w -= 1;
            }
        }
        w
    }
}

impl DistanceFunction for PolylineDistance {
    fn value(&self, p: Vec2) -> f64 {
        let (_, d) = self.closest(p);
        if d == 0.0 {
            0.0
        } else if self.winding(p) != 0 {
            -d
        } else {
            d
        }
    }

    fn gradient(&self, p: Vec2) -> Vec2 {
        let (q, d) = self.closest(p);
        if d == 0.0 {
            return Vec2::zeros();
        }
        let g = (p - q) / d;
        if self.winding(p) != 0 {
            -g
        } else {
            g
        }
    }
}

/// Bicubic interpolation of a nodal field.
impl DistanceFunction for ScalarField {
    fn value(&self, p: Vec2) -> f64 {
        self.interpolate(p)
    }

    fn gradient(&self, p: Vec2) -> Vec2 {
        self.interpolate_gradient(p)
    }
}

/// Nodal signed distance to a circle, requiring `clearance` to ∂Ω.
pub fn signed_distance_circle(center: Vec2, radius: f64, grid: Grid, clearance: f64) -> Result<ScalarField> {
    let circle = CircleDistance::new(center, radius)?;
    if circle.clearance() < clearance {
        return Err(Error::Clearance { clearance: circle.clearance() });
    }
    Ok(ScalarField::from_fn(grid, |p| circle.value(p)))
}

/// Nodal signed distance to a closed polyline.
pub fn signed_distance_polyline(iface: &Interface, grid: Grid) -> Result<ScalarField> {
    // Re-validate: interfaces built internally skip the simplicity check.
    let checked = Interface::new(iface.vertices().to_vec())?;
    let dist = PolylineDistance::new(checked);
    Ok(ScalarField::from_fn(grid, |p| dist.value(p)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_examples() {
        let grid = Grid::new(101).unwrap();
        let d = signed_distance_circle(Vec2::new(0.5, 0.5), 0.25, grid, 0.2).unwrap();
        assert_eq!(d.at(50, 50), -0.25);
        assert!(d.at(75, 50).abs() < 1e-15);
        assert!((d.at(90, 50) - 0.15).abs() < 1e-15);
        assert!(matches!(
            signed_distance_circle(Vec2::new(0.5, 0.5), 0.4, grid, 0.2),
            Err(Error::Clearance { .. })
        ));
    }

    #[test]
    fn polygon_matches_circle() {
        let grid = Grid::new(65).unwrap();
        let c = Vec2::new(0.5, 0.5);
        let exact = signed_distance_circle(c, 0.25, grid, 0.2).unwrap();
        let poly = signed_distance_polyline(&Interface::circle(c, 0.25, 512), grid).unwrap();
        let err = exact.values.iter().zip(&poly.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-4, "{err}");
        let bound = 0.25 * (1.0 - (std::f64::consts::PI / 512.0).cos());
        assert!(err <= bound + 1e-14);
    }

    #[test]
    fn square_center_and_vertex() {
        let v: Vec<Vec2> = [(0.3, 0.3), (0.5, 0.3), (0.7, 0.3), (0.7, 0.7), (0.3, 0.7)]
            .iter()
            .map(|&(x, y)| Vec2::new(x, y))
            .collect();
        let d = PolylineDistance::new(Interface::new(v).unwrap());
        assert!((d.value(Vec2::new(0.5, 0.5)) + 0.2).abs() < 1e-15);
        assert_eq!(d.value(Vec2::new(0.7, 0.7)), 0.0);
        assert!((d.value(Vec2::new(0.9, 0.5)) - 0.2).abs() < 1e-15);
    }
}
