//! Zero-contour extraction by marching squares.

use std::collections::HashMap;

use super::Interface;
use crate::grid::ScalarField;
use crate::{Error, Result, Vec2};

/// Edge identifier: `(vertical, i, j)` for the edge leaving node `(i, j)` in
/// +x (`vertical = false`) or +y direction.
type EdgeId = (bool, usize, usize);

/// Extract the zero level set of `field` as a single closed interface,
/// resampled to spacing ≈ h and oriented so the enclosed region is where
/// the field is negative.
///
/// Edge crossings are located on the cubic interpolant along the grid line
/// through four nodes, so the contour is fourth-order accurate for smooth
/// fields.
pub fn extract_zero_contour(field: &ScalarField) -> Result<Interface> {
    let grid = field.grid;
    let n = grid.n();
    let neg = |i: usize, j: usize| field.at(i, j) < 0.0;
    if field.values.iter().all(|v| *v < 0.0) || field.values.iter().all(|v| *v >= 0.0) {
        return Err(Error::NoSignChange);
    }

    let mut segments: Vec<(EdgeId, EdgeId)> = Vec::new();
    for j in 0..n - 1 {
        for i in 0..n - 1 {
            let c = [neg(i, j), neg(i + 1, j), neg(i + 1, j + 1), neg(i, j + 1)];
            // Edges: bottom, right, top, left.
            let edges: [EdgeId; 4] = [(false, i, j), (true, i + 1, j), (false, i, j + 1), (true, i, j)];
            let cut = [c[0] != c[1], c[1] != c[2], c[2] != c[3], c[3] != c[0]];
            let count = cut.iter().filter(|x| **x).count();
            if count == 2 {
                let mut it = (0..4).filter(|k| cut[*k]);
                let (a, b) = (it.next().unwrap(), it.next().unwrap());
                segments.push((edges[a], edges[b]));
            } else if count == 4 {
                let center = 0.25 * (field.at(i, j) + field.at(i + 1, j) + field.at(i + 1, j + 1) + field.at(i, j + 1));
                if (center < 0.0) == c[0] {
                    // Corners 1 and 3 are cut off.
                    segments.push((edges[0], edges[1]));
                    segments.push((edges[2], edges[3]));
                } else {
                    segments.push((edges[3], edges[0]));
                    segments.push((edges[1], edges[2]));
                }
            }
        }
    }

    let mut by_edge: HashMap<EdgeId, Vec<usize>> = HashMap::new();
    for (k, (a, b)) in segments.iter().enumerate() {
        by_edge.entry(*a).or_default().push(k);
        by_edge.entry(*b).or_default().push(k);
    }
    if by_edge.values().any(|s| s.len() != 2) {
        return Err(Error::ContourNearBoundary);
    }

    let mut used = vec![false; segments.len()];
    let mut loops: Vec<Vec<EdgeId>> = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (first, mut cur) = segments[start];
        let mut chain = vec![first];
        let mut seg = start;
        while cur != first {
            chain.push(cur);
            let next = by_edge[&cur].iter().copied().find(|s| *s != seg).unwrap();
            used[next] = true;
            seg = next;
            let (a, b) = segments[next];
            cur = if a == cur { b } else { a };
        }
        loops.push(chain);
    }
    if loops.len() != 1 {
        return Err(Error::MultipleComponents(loops.len()));
    }

    let mut pts: Vec<Vec2> = Vec::with_capacity(loops[0].len());
    for e in &loops[0] {
        let p = crossing(field, *e);
        if pts.last().is_none_or(|q: &Vec2| (p - q).norm() > 1e-9 * grid.h()) {
            pts.push(p);
        }
    }
    while pts.len() > 1 && (pts[0] - pts[pts.len() - 1]).norm() <= 1e-9 * grid.h() {
        pts.pop();
    }
    let raw = Interface::new(pts)?;
    let count = ((raw.perimeter() / grid.h()).round() as usize).max(8);
    let iface = raw.resampled_count(count)?;
    // Orientation: the normal must point towards positive values.
    let v = iface.vertices()[0] + 0.5 * grid.h() * iface.normals()[0];
    if field.interpolate(v) < field.interpolate(iface.vertices()[0]) {
        let mut r = iface.vertices().to_vec();
        r.reverse();
        return Ok(Interface::from_oriented(r));
    }
    Ok(iface)
}

/// Zero of the cubic interpolant along the grid line containing edge `e`.
fn crossing(field: &ScalarField, e: EdgeId) -> Vec2 {
    let grid = field.grid;
    let n = grid.n();
    let (vertical, i, j) = e;
    let (k, line): (usize, Box<dyn Fn(usize) -> f64>) = if vertical {
        (j, Box::new(move |m| field.at(i, m)))
    } else {
        (i, Box::new(move |m| field.at(m, j)))
    };
    let s = k.saturating_sub(1).min(n - 4);
    let g: [f64; 4] = std::array::from_fn(|q| line(s + q));
    let cubic = |x: f64| {
        // Lagrange basis on local nodes 0..3.
        let l0 = -(x - 1.0) * (x - 2.0) * (x - 3.0) / 6.0;
        let l1 = x * (x - 2.0) * (x - 3.0) / 2.0;
        let l2 = -x * (x - 1.0) * (x - 3.0) / 2.0;
        let l3 = x * (x - 1.0) * (x - 2.0) / 6.0;
        g[0] * l0 + g[1] * l1 + g[2] * l2 + g[3] * l3
    };
    let (mut a, mut b) = ((k - s) as f64, (k - s + 1) as f64);
    let (mut fa, fb) = (cubic(a), cubic(b));
    let mut x = a + fa / (fa - fb);
    for _ in 0..60 {
        let fx = cubic(x);
        if fx == 0.0 {
            break;
        }
        if (fx < 0.0) == (fa < 0.0) {
            a = x;
            fa = fx;
        } else {
            b = x;
        }
        x = 0.5 * (a + b);
        if b - a < 1e-14 {
            break;
        }
    }
    let t = (s as f64 + x) * grid.h();
    if vertical {
        Vec2::new(i as f64 * grid.h(), t)
    } else {
        Vec2::new(t, j as f64 * grid.h())
    }
}
