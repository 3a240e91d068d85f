//! Coordinate boxes, sampling grids, fourth-order stencils and Simpson
//! quadrature.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exprlang::Jet2;

/// Half-open coordinate box of a single chart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChartBox {
    pub coord_names: [String; 3],
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    /// +1 if the ordered coordinate frame is positively oriented, -1 otherwise.
    pub orientation: f64,
}

impl ChartBox {
    pub fn new(coord_names: [&str; 3], lo: [f64; 3], hi: [f64; 3], orientation: f64) -> Result<Self> {
        for i in 0..3 {
            if !(lo[i] < hi[i]) {
                return Err(Error::Invalid(format!(
                    "box axis {i}: lo {} must be below hi {}",
                    lo[i], hi[i]
                )));
            }
            for j in 0..i {
                if coord_names[i] == coord_names[j] {
                    return Err(Error::Invalid(format!(
                        "duplicate coordinate name `{}`",
                        coord_names[i]
                    )));
                }
            }
        }
        if orientation != 1.0 && orientation != -1.0 {
            return Err(Error::Invalid("orientation must be +1 or -1".into()));
        }
        Ok(ChartBox {
            coord_names: coord_names.map(str::to_string),
            lo,
            hi,
            orientation,
        })
    }

    pub fn volume(&self) -> f64 {
        (0..3).map(|i| self.hi[i] - self.lo[i]).product()
    }

    pub fn center(&self) -> [f64; 3] {
        [0, 1, 2].map(|i| 0.5 * (self.lo[i] + self.hi[i]))
    }

    pub fn names(&self) -> [&str; 3] {
        [
            self.coord_names[0].as_str(),
            self.coord_names[1].as_str(),
            self.coord_names[2].as_str(),
        ]
    }

    pub fn contains(&self, p: &[f64; 3]) -> bool {
        (0..3).all(|i| p[i] >= self.lo[i] && p[i] <= self.hi[i])
    }
}

/// Uniform tensor grid with `n[i] + 1` nodes per axis, including both ends.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    pub chart: ChartBox,
    pub n: [usize; 3],
}

impl Grid {
    pub fn new(chart: ChartBox, n: [usize; 3]) -> Result<Self> {
        if n.iter().any(|&m| m < 4) {
            return Err(Error::Grid(format!("grid {n:?} too coarse for 5-point stencils")));
        }
        Ok(Grid { chart, n })
    }

    pub fn uniform(chart: ChartBox, n: usize) -> Result<Self> {
        Grid::new(chart, [n; 3])
    }

    #[inline]
    pub fn spacing(&self) -> [f64; 3] {
        [0, 1, 2].map(|i| (self.chart.hi[i] - self.chart.lo[i]) / self.n[i] as f64)
    }

    #[inline]
    pub fn dims(&self) -> [usize; 3] {
        [self.n[0] + 1, self.n[1] + 1, self.n[2] + 1]
    }

    pub fn len(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i: [usize; 3]) -> usize {
        let d = self.dims();
        (i[0] * d[1] + i[1]) * d[2] + i[2]
    }

    #[inline]
    pub fn multi_index(&self, mut idx: usize) -> [usize; 3] {
        let d = self.dims();
        let k = idx % d[2];
        idx /= d[2];
        let j = idx % d[1];
        [idx / d[1], j, k]
    }

    #[inline]
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let m = self.multi_index(idx);
        let h = self.spacing();
        [0, 1, 2].map(|a| self.chart.lo[a] + m[a] as f64 * h[a])
    }

    /// Samples a pointwise function over all nodes.
    pub fn sample<T, F>(&self, f: F) -> Result<FieldSample<T>>
    where
        T: Send,
        F: Fn([f64; 3]) -> Result<T> + Sync,
    {
        let data = (0..self.len())
            .into_par_iter()
            .map(|idx| f(self.point(idx)))
            .collect::<Result<Vec<T>>>()?;
        Ok(FieldSample {
            grid: self.clone(),
            data,
        })
    }

    /// Composite Simpson weights per node (including the cell volume).
    pub fn simpson_weights(&self) -> Result<Vec<f64>> {
        if self.n.iter().any(|&m| m < 8 || m % 2 != 0) {
            return Err(Error::Grid(format!(
                "Simpson quadrature needs even n >= 8 per axis, got {:?}",
                self.n
            )));
        }
        let h = self.spacing();
        let axis_w: Vec<Vec<f64>> = (0..3)
            .map(|a| {
                (0..=self.n[a])
                    .map(|i| {
                        let c = if i == 0 || i == self.n[a] {
                            1.0
                        } else if i % 2 == 1 {
                            4.0
                        } else {
                            2.0
                        };
                        c * h[a] / 3.0
                    })
                    .collect()
            })
            .collect();
        Ok((0..self.len())
            .map(|idx| {
                let m = self.multi_index(idx);
                axis_w[0][m[0]] * axis_w[1][m[1]] * axis_w[2][m[2]]
            })
            .collect())
    }

    /// Nodes whose coordinates lie within `region` (closed).
    pub fn mask_in(&self, region: &ChartBox) -> Vec<bool> {
        (0..self.len())
            .map(|idx| {
                let p = self.point(idx);
                (0..3).all(|a| p[a] >= region.lo[a] - 1e-12 && p[a] <= region.hi[a] + 1e-12)
            })
            .collect()
    }
}

/// Grid-indexed samples of a field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample<T> {
    pub grid: Grid,
    pub data: Vec<T>,
}

pub type ScalarField = FieldSample<f64>;

impl<T: Clone + Send + Sync> FieldSample<T> {
    pub fn map<U: Send, F: Fn(&T) -> U + Sync + Send>(&self, f: F) -> FieldSample<U> {
        FieldSample {
            grid: self.grid.clone(),
            data: self.data.par_iter().map(f).collect(),
        }
    }
}

impl ScalarField {
    pub fn constant(grid: &Grid, v: f64) -> Self {
        FieldSample {
            grid: grid.clone(),
            data: vec![v; grid.len()],
        }
    }

    pub fn check_finite(&self, what: &str) -> Result<()> {
        if self.data.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite(what.to_string()))
        }
    }
}

// 4th-order first-derivative stencils: central, and one-sided within two
// nodes of either end.
const D1_CENTRAL: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
const D1_EDGE0: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
const D1_EDGE1: [f64; 5] = [-3.0, -10.0, 18.0, -6.0, 1.0];

/// Fourth-order derivative along one axis of a scalar array laid out on `grid`.
pub fn derivative_along(grid: &Grid, data: &[f64], axis: usize) -> Result<Vec<f64>> {
    let dims = grid.dims();
    let m = dims[axis];
    if m < 5 {
        return Err(Error::Grid(format!("axis {axis} has {m} nodes; stencil needs 5")));
    }
    if data.len() != grid.len() {
        return Err(Error::Grid("field shape does not match grid".into()));
    }
    let inv = 1.0 / (12.0 * grid.spacing()[axis]);
    let stride = match axis {
        0 => dims[1] * dims[2],
        1 => dims[2],
        _ => 1,
    };
    let out = (0..data.len())
        .into_par_iter()
        .map(|idx| {
            let i = grid.multi_index(idx)[axis];
            let base = idx - i * stride;
            let at = |k: usize| data[base + k * stride];
            let (coeffs, start, sign) = if i >= 2 && i + 2 < m {
                (&D1_CENTRAL, i - 2, 1.0)
            } else if i == 0 {
                (&D1_EDGE0, 0, 1.0)
            } else if i == 1 {
                (&D1_EDGE1, 0, 1.0)
            } else if i == m - 1 {
                (&D1_EDGE0, m - 1, -1.0)
            } else {
                (&D1_EDGE1, m - 1, -1.0)
            };
            let mut acc = 0.0;
            if sign > 0.0 {
                for (q, c) in coeffs.iter().enumerate() {
                    acc += c * at(start + q);
                }
            } else {
                // mirrored one-sided stencil at the upper end
                for (q, c) in coeffs.iter().enumerate() {
                    acc -= c * at(start - q);
                }
            }
            acc * inv
        })
        .collect();
    Ok(out)
}

/// Coordinate gradient of a scalar field by fourth-order stencils.
pub fn gradient(f: &ScalarField) -> Result<[Vec<f64>; 3]> {
    Ok([
        derivative_along(&f.grid, &f.data, 0)?,
        derivative_along(&f.grid, &f.data, 1)?,
        derivative_along(&f.grid, &f.data, 2)?,
    ])
}

/// `V^i ∂_i f` by fourth-order stencils.
pub fn directional_derivative(f: &ScalarField, v: &[[f64; 3]]) -> Result<ScalarField> {
    if v.len() != f.data.len() {
        return Err(Error::Grid("vector field shape does not match grid".into()));
    }
    let g = gradient(f)?;
    let data = (0..f.data.len())
        .map(|i| v[i][0] * g[0][i] + v[i][1] * g[1][i] + v[i][2] * g[2][i])
        .collect();
    Ok(FieldSample {
        grid: f.grid.clone(),
        data,
    })
}

/// `∫ f √det g dx¹dx²dx³` by composite Simpson; `volume` holds `√det g`
/// at each node.
pub fn integrate(f: &ScalarField, volume: &ScalarField) -> Result<f64> {
    let w = f.grid.simpson_weights()?;
    integrate_with_weights(&w, &f.data, &volume.data)
}

pub fn integrate_with_weights(w: &[f64], f: &[f64], volume: &[f64]) -> Result<f64> {
    if let Some(i) = volume.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::Invalid(format!(
            "non-positive volume weight {} at node {i}",
            volume[i]
        )));
    }
    Ok(w.iter()
        .zip(f)
        .zip(volume)
        .map(|((w, f), v)| w * f * v)
        .sum())
}

/// Smooth compactly supported product bump, equal to 1 at `center`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bump {
    pub center: [f64; 3],
    pub radius: [f64; 3],
}

impl Bump {
    /// The support must stay at least two grid cells away from the boundary.
    pub fn new(center: [f64; 3], radius: [f64; 3], grid: &Grid) -> Result<Self> {
        let h = grid.spacing();
        let b = &grid.chart;
        for a in 0..3 {
            if !(radius[a] > 0.0)
                || center[a] - radius[a] < b.lo[a] + 2.0 * h[a]
                || center[a] + radius[a] > b.hi[a] - 2.0 * h[a]
            {
                return Err(Error::Invalid(format!(
                    "bump support on axis {a} touches the two-cell boundary collar"
                )));
            }
        }
        Ok(Bump { center, radius })
    }

    fn factor(r: f64) -> (f64, f64, f64) {
        if r.abs() >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        let q = 1.0 - r * r;
        let f = (1.0 - 1.0 / q).exp();
        // d/dr of (1 - 1/q) = -2r/q²
        let a = -2.0 * r / (q * q);
        // d²/dr² of (1 - 1/q) = -2/q² - 8r²/q³
        let da = -2.0 / (q * q) - 8.0 * r * r / (q * q * q);
        (f, f * a, f * (a * a + da))
    }

    pub fn value(&self, p: &[f64; 3]) -> f64 {
        (0..3)
            .map(|a| Self::factor((p[a] - self.center[a]) / self.radius[a]).0)
            .product()
    }

    /// Value with exact first and second derivatives.
    pub fn jet(&self, p: &[f64; 3]) -> Jet2 {
        let mut out = Jet2::constant(1.0);
        for a in 0..3 {
            let r = (p[a] - self.center[a]) / self.radius[a];
            let (f, df, d2f) = Self::factor(r);
            let s = 1.0 / self.radius[a];
            let mut j = Jet2::constant(f);
            j.grad[a] = df * s;
            j.hess[crate::exprlang::sym_index(a, a)] = d2f * s * s;
            out = out * j;
        }
        out
    }

    pub fn contains(&self, p: &[f64; 3]) -> bool {
        (0..3).all(|a| (p[a] - self.center[a]).abs() < self.radius[a])
    }
}
