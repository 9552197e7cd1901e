//! Uniform node grid on the unit box and grid-sampled scalar fields.
//!
//! Node `(i, j)` sits at `(i h, j h)`; values are stored row-major with the
//! row index `j` running along `y`.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::{Error, Result, Vec2};

/// Minimum number of nodes per side.
pub const MIN_NODES: usize = 33;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    h: f64,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n < MIN_NODES {
            return Err(Error::InvalidInput(format!("grid needs n >= {MIN_NODES}, got {n}")));
        }
        Ok(Self { n, h: 1.0 / (n - 1) as f64 })
    }

    /// Smallest grid with spacing at most `h_max`.
    pub fn with_max_spacing(h_max: f64) -> Result<Self> {
        let cells = (1.0 / h_max - 1e-9).ceil().max(1.0) as usize;
        Self::new((cells + 1).max(MIN_NODES))
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(i as f64 * self.h, j as f64 * self.h)
    }

    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.n - 1 || j == self.n - 1
    }

    /// Composite trapezoid weight of node `(i, j)` (area units).
    #[inline]
    pub fn trapezoid_weight(&self, i: usize, j: usize) -> f64 {
        let wx = if i == 0 || i == self.n - 1 { 0.5 } else { 1.0 };
        let wy = if j == 0 || j == self.n - 1 { 0.5 } else { 1.0 };
        wx * wy * self.h * self.h
    }

    /// All nodes in storage order.
    pub fn nodes(&self) -> Vec<Vec2> {
        let mut out = Vec::with_capacity(self.len());
        for j in 0..self.n {
            for i in 0..self.n {
                out.push(self.node(i, j));
            }
        }
        out
    }
}

/// Scalar samples on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self { grid, values: vec![value; grid.len()] }
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(Vec2) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.n() {
            for i in 0..grid.n() {
                values.push(f(grid.node(i, j)));
            }
        }
        Self { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Composite trapezoid integral over the box.
    pub fn integral(&self) -> f64 {
        self.integral_of(|v| v)
    }

    pub fn integral_of(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        let n = self.grid.n();
        let mut s = 0.0;
        for j in 0..n {
            for i in 0..n {
                s += self.grid.trapezoid_weight(i, j) * f(self.at(i, j));
            }
        }
        s
    }

    /// Trapezoid integral of `f(self, other)` nodewise; the grids must match.
    pub fn integral_of_pairs(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        let n = self.grid.n();
        let mut s = 0.0;
        for j in 0..n {
            for i in 0..n {
                let k = self.grid.index(i, j);
                s += self.grid.trapezoid_weight(i, j) * f(self.values[k], other.values[k]);
            }
        }
        s
    }

    /// `Σ |∇_h u|² h²` over interior nodes with centered differences.
    pub fn gradient_sq_integral(&self) -> f64 {
        let n = self.grid.n();
        let h = self.grid.h();
        let mut s = 0.0;
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                s += self.gradient_at(i, j).norm_squared();
            }
        }
        s * h * h
    }

    /// L² norm by the composite trapezoid rule.
    pub fn l2_norm(&self) -> f64 {
        self.integral_of(|v| v * v).sqrt()
    }

    pub fn check_same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "n = {} vs n = {}",
                self.grid.n(),
                other.grid.n()
            )));
        }
        Ok(())
    }

    /// Centered-difference gradient at a node; one-sided second-order
    /// differences on the boundary.
    pub fn gradient_at(&self, i: usize, j: usize) -> Vec2 {
        let n = self.grid.n();
        let h = self.grid.h();
        let diff = |a: usize, v: &dyn Fn(usize) -> f64| {
            if a == 0 {
                (-3.0 * v(0) + 4.0 * v(1) - v(2)) / (2.0 * h)
            } else if a == n - 1 {
                (3.0 * v(n - 1) - 4.0 * v(n - 2) + v(n - 3)) / (2.0 * h)
            } else {
                (v(a + 1) - v(a - 1)) / (2.0 * h)
            }
        };
        Vec2::new(diff(i, &|k| self.at(k, j)), diff(j, &|k| self.at(i, k)))
    }

    /// Field of centered-difference gradient magnitudes.
    pub fn gradient_norm(&self) -> ScalarField {
        let n = self.grid.n();
        let mut out = ScalarField::zeros(self.grid);
        for j in 0..n {
            for i in 0..n {
                out.values[self.grid.index(i, j)] = self.gradient_at(i, j).norm();
            }
        }
        out
    }

    /// Tensor-product cubic Lagrange interpolation at an arbitrary point of the
    /// closed box. The 4×4 stencil is shifted inward near the boundary.
    pub fn interpolate(&self, p: Vec2) -> f64 {
        let (ix, wx) = cubic_weights(p.x, &self.grid);
        let (iy, wy) = cubic_weights(p.y, &self.grid);
        let mut s = 0.0;
        for (b, wyb) in wy.iter().enumerate() {
            let row = (iy + b) * self.grid.n();
            let mut r = 0.0;
            for (a, wxa) in wx.iter().enumerate() {
                r += wxa * self.values[row + ix + a];
            }
            s += wyb * r;
        }
        s
    }

    /// Gradient of the cubic interpolant.
    pub fn interpolate_gradient(&self, p: Vec2) -> Vec2 {
        let (ix, wx) = cubic_weights(p.x, &self.grid);
        let (iy, wy) = cubic_weights(p.y, &self.grid);
        let dwx = cubic_weight_derivatives(p.x, ix, &self.grid);
        let dwy = cubic_weight_derivatives(p.y, iy, &self.grid);
        let (mut gx, mut gy) = (0.0, 0.0);
        for b in 0..4 {
            let row = (iy + b) * self.grid.n();
            for a in 0..4 {
                let v = self.values[row + ix + a];
                gx += dwx[a] * wy[b] * v;
                gy += wx[a] * dwy[b] * v;
            }
        }
        Vec2::new(gx, gy)
    }

    /// Write the snapshot format: a header `n h time` and `n` rows of `n`
    /// space-separated values.
    pub fn write_snapshot<W: Write>(&self, mut w: W, time: f64) -> Result<()> {
        let n = self.grid.n();
        writeln!(w, "{} {} {}", n, self.grid.h(), time)?;
        for j in 0..n {
            let row = &self.values[j * n..(j + 1) * n];
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn save_snapshot(&self, path: &Path, time: f64) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_snapshot(&mut w, time)?;
        w.flush()?;
        Ok(())
    }

    /// Parse the snapshot format; returns the field and its time stamp.
    pub fn read_snapshot<R: BufRead>(r: R) -> Result<(Self, f64)> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidInput("empty snapshot".into()))??;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::InvalidInput(format!("bad snapshot header '{header}'")));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::InvalidInput(format!("bad number '{s}': {e}")))
        };
        let n: usize = parts[0]
            .parse()
            .map_err(|e| Error::InvalidInput(format!("bad node count: {e}")))?;
        let time = parse(parts[2])?;
        let grid = Grid::new(n)?;
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| Error::InvalidInput("truncated snapshot".into()))??;
            let row: Vec<f64> = line.split_whitespace().map(parse).collect::<Result<_>>()?;
            if row.len() != n {
                return Err(Error::InvalidInput(format!("row has {} values, expected {n}", row.len())));
            }
            values.extend(row);
        }
        Ok((Self { grid, values }, time))
    }
}

/// Snapshot file name `c_eps<val>_theta<val>_t<index>.dat`.
pub fn snapshot_file_name(eps: f64, theta: f64, index: usize) -> String {
    format!("c_eps{eps}_theta{theta}_t{index}.dat")
}

#[inline]
fn cubic_weights(x: f64, grid: &Grid) -> (usize, [f64; 4]) {
    let n = grid.n();
    let s = (x / grid.h()).clamp(0.0, (n - 1) as f64);
    let cell = (s.floor() as usize).min(n - 2);
    let start = cell.saturating_sub(1).min(n - 4);
    let t = s - start as f64;
    // Lagrange basis on nodes 0, 1, 2, 3 evaluated at t.
    let w = [
        -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0,
        t * (t - 2.0) * (t - 3.0) / 2.0,
        -t * (t - 1.0) * (t - 3.0) / 2.0,
        t * (t - 1.0) * (t - 2.0) / 6.0,
    ];
    (start, w)
}

#[inline]
fn cubic_weight_derivatives(x: f64, start: usize, grid: &Grid) -> [f64; 4] {
    let n = grid.n();
    let s = (x / grid.h()).clamp(0.0, (n - 1) as f64);
    let t = s - start as f64;
    let inv_h = 1.0 / grid.h();
    [
        -(3.0 * t * t - 12.0 * t + 11.0) / 6.0 * inv_h,
        (3.0 * t * t - 10.0 * t + 6.0) / 2.0 * inv_h,
        -(3.0 * t * t - 8.0 * t + 3.0) / 2.0 * inv_h,
        (3.0 * t * t - 6.0 * t + 2.0) / 6.0 * inv_h,
    ]
}
