use super::jet1::{values, Jet1, Vec1};
use super::PointJets;
use crate::error::{Error, Result};
use crate::exprlang::sym_index;

#[inline]
pub(crate) fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    if i == j || j == k || i == k {
        0.0
    } else if (i, j, k) == (0, 1, 2) || (i, j, k) == (1, 2, 0) || (i, j, k) == (2, 0, 1) {
        1.0
    } else {
        -1.0
    }
}

/// First-order local data of `(g, T)` at one point: metric, inverse,
/// volume density and Christoffel symbols, all carried with their
/// coordinate gradients.
#[derive(Debug, Clone)]
pub struct Local {
    pub point: [f64; 3],
    pub orientation: f64,
    pub g: [[Jet1; 3]; 3],
    pub ginv: [[Jet1; 3]; 3],
    pub sqrt_det: Jet1,
    /// `gamma[c][a][b] = Γ^c_{ab}`
    pub gamma: [[[Jet1; 3]; 3]; 3],
    pub t: Vec1,
    /// `dt[e][c] = ∂_e T^c`
    pub dt: [Vec1; 3],
}

impl Local {
    pub fn new(point: [f64; 3], jets: &PointJets, orientation: f64) -> Result<Self> {
        let m = &jets.metric.comps;
        let mut g = [[Jet1::ZERO; 3]; 3];
        // dg[e][i][j] = ∂_e g_ij
        let mut dg = [[[Jet1::ZERO; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let c = &m[sym_index(i, j)];
                g[i][j] = Jet1::from_jet2(c);
                for (e, dge) in dg.iter_mut().enumerate() {
                    dge[i][j] = Jet1::partial_of(c, e);
                }
            }
        }
        let gv = [0, 1, 2].map(|i| [0, 1, 2].map(|j| g[i][j].v));
        let m1 = gv[0][0];
        let m2 = gv[0][0] * gv[1][1] - gv[0][1] * gv[1][0];
        let cof = |i: usize, j: usize| {
            let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
            let (c0, c1) = ((j + 1) % 3, (j + 2) % 3);
            g[r0][c0] * g[r1][c1] - g[r0][c1] * g[r1][c0]
        };
        let det = g[0][0] * cof(0, 0) + g[0][1] * cof(0, 1) + g[0][2] * cof(0, 2);
        if !(m1 > 0.0 && m2 > 0.0 && det.v > 0.0) || !det.v.is_finite() {
            return Err(Error::NotPositiveDefinite { point });
        }
        let inv_det = det.recip();
        let mut ginv = [[Jet1::ZERO; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                // symmetric matrix: inverse is cofactor transpose / det
                ginv[i][j] = cof(j, i) * inv_det;
            }
        }
        let mut gamma = [[[Jet1::ZERO; 3]; 3]; 3];
        for c in 0..3 {
            for a in 0..3 {
                for b in a..3 {
                    let mut acc = Jet1::ZERO;
                    for d in 0..3 {
                        acc += ginv[c][d] * (dg[a][b][d] + dg[b][a][d] - dg[d][a][b]);
                    }
                    gamma[c][a][b] = acc * 0.5;
                    gamma[c][b][a] = gamma[c][a][b];
                }
            }
        }
        let f = &jets.field.comps;
        let t = [0, 1, 2].map(|c| Jet1::from_jet2(&f[c]));
        let dt = [0, 1, 2].map(|e| [0, 1, 2].map(|c| Jet1::partial_of(&f[c], e)));
        Ok(Local {
            point,
            orientation,
            g,
            ginv,
            sqrt_det: det.sqrt(),
            gamma,
            t,
            dt,
        })
    }

    pub fn metric_values(&self) -> [[f64; 3]; 3] {
        [0, 1, 2].map(|i| [0, 1, 2].map(|j| self.g[i][j].v))
    }

    pub fn inner(&self, x: &Vec1, y: &Vec1) -> Jet1 {
        let mut acc = Jet1::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                acc += self.g[i][j] * x[i] * y[j];
            }
        }
        acc
    }

    pub fn dot(&self, x: &[f64; 3], y: &[f64; 3]) -> f64 {
        let mut acc = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                acc += self.g[i][j].v * x[i] * y[j];
            }
        }
        acc
    }

    pub fn norm(&self, x: &[f64; 3]) -> f64 {
        self.dot(x, x).max(0.0).sqrt()
    }

    pub fn flat(&self, x: &[f64; 3]) -> [f64; 3] {
        [0, 1, 2].map(|i| (0..3).map(|j| self.g[i][j].v * x[j]).sum())
    }

    /// Metric cross product: `⟨X×Y, Z⟩ = vol(X, Y, Z)`.
    pub fn cross(&self, x: &Vec1, y: &Vec1) -> Vec1 {
        let mut low = [Jet1::ZERO; 3];
        for (l, lo) in low.iter_mut().enumerate() {
            for j in 0..3 {
                for k in 0..3 {
                    let e = levi_civita(l, j, k);
                    if e != 0.0 {
                        *lo += x[j] * y[k] * e;
                    }
                }
            }
        }
        let s = self.sqrt_det * self.orientation;
        [0, 1, 2].map(|i| {
            let mut acc = Jet1::ZERO;
            for (l, lo) in low.iter().enumerate() {
                acc += self.ginv[i][l] * *lo;
            }
            acc * s
        })
    }

    pub fn cross_values(&self, x: &[f64; 3], y: &[f64; 3]) -> [f64; 3] {
        values(&self.cross(&x.map(Jet1::constant), &y.map(Jet1::constant)))
    }

    /// `∇_X T` with `X` carried as a jet, returned as a jet.
    pub fn nabla_t(&self, x: &Vec1) -> Vec1 {
        [0, 1, 2].map(|c| {
            let mut acc = Jet1::ZERO;
            for a in 0..3 {
                acc += x[a] * self.dt[a][c];
                for b in 0..3 {
                    acc += self.gamma[c][a][b] * x[a] * self.t[b];
                }
            }
            acc
        })
    }

    /// `(∇_X Y)^c = X^e ∂_e Y^c + Γ^c_{ab} X^a Y^b` at this point.
    pub fn covariant(&self, x: &[f64; 3], y: &Vec1) -> [f64; 3] {
        [0, 1, 2].map(|c| {
            let mut acc = y[c].along(x);
            for a in 0..3 {
                for b in 0..3 {
                    acc += self.gamma[c][a][b].v * x[a] * y[b].v;
                }
            }
            acc
        })
    }

    /// Coordinate Lie bracket `[X, Y]`.
    pub fn bracket(x: &Vec1, y: &Vec1) -> [f64; 3] {
        let xv = values(x);
        let yv = values(y);
        [0, 1, 2].map(|c| y[c].along(&xv) - x[c].along(&yv))
    }

    /// `φ^i_k = o √g g^{il} ε_{ljk} T^j`, i.e. `φX = T × X`.
    pub fn phi(&self) -> [[Jet1; 3]; 3] {
        let s = self.sqrt_det * self.orientation;
        let mut out = [[Jet1::ZERO; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (k, entry) in row.iter_mut().enumerate() {
                let mut acc = Jet1::ZERO;
                for l in 0..3 {
                    for j in 0..3 {
                        let e = levi_civita(l, j, k);
                        if e != 0.0 {
                            acc += self.ginv[i][l] * self.t[j] * e;
                        }
                    }
                }
                *entry = acc * s;
            }
        }
        out
    }

    pub fn div_t(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..3 {
            acc += self.dt[i][i].v;
            for j in 0..3 {
                acc += self.gamma[i][i][j].v * self.t[j].v;
            }
        }
        acc
    }
}
