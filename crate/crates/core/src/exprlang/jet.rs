use std::ops::{Add, Div, Mul, Neg, Sub};

/// Index of the symmetric second partial `(i, j)` inside [`Jet2::hess`].
#[inline]
pub const fn sym_index(i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    match (a, b) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 2) => 2,
        (1, 1) => 3,
        (1, 2) => 4,
        _ => 5,
    }
}

/// Second-order forward-mode jet in three variables.
///
/// `hess` stores the upper triangle `(00, 01, 02, 11, 12, 22)`, so symmetry
/// holds by construction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet2 {
    pub value: f64,
    pub grad: [f64; 3],
    pub hess: [f64; 6],
}

impl Jet2 {
    pub const fn constant(value: f64) -> Self {
        Jet2 {
            value,
            grad: [0.0; 3],
            hess: [0.0; 6],
        }
    }

    /// The coordinate function `x_i` evaluated at `value`.
    pub fn variable(value: f64, i: usize) -> Self {
        let mut grad = [0.0; 3];
        grad[i] = 1.0;
        Jet2 {
            value,
            grad,
            hess: [0.0; 6],
        }
    }

    #[inline]
    pub fn d2(&self, i: usize, j: usize) -> f64 {
        self.hess[sym_index(i, j)]
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|v| v.is_finite())
            && self.hess.iter().all(|v| v.is_finite())
    }

    /// Applies a scalar function given its value and first two derivatives
    /// at `self.value`.
    #[inline]
    pub fn chain(&self, f: f64, df: f64, d2f: f64) -> Self {
        let g = self.grad;
        let mut out = Jet2::constant(f);
        for i in 0..3 {
            out.grad[i] = df * g[i];
        }
        let mut k = 0;
        for i in 0..3 {
            for j in i..3 {
                out.hess[k] = df * self.hess[k] + d2f * g[i] * g[j];
                k += 1;
            }
        }
        out
    }

    pub fn recip(&self) -> Self {
        let x = self.value;
        self.chain(1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x))
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn tan(&self) -> Self {
        let t = self.value.tan();
        let sec2 = 1.0 + t * t;
        self.chain(t, sec2, 2.0 * t * sec2)
    }

    pub fn exp(&self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn ln(&self) -> Self {
        let x = self.value;
        self.chain(x.ln(), 1.0 / x, -1.0 / (x * x))
    }

    pub fn sqrt(&self) -> Self {
        let r = self.value.sqrt();
        self.chain(r, 0.5 / r, -0.25 / (r * self.value))
    }

    pub fn sinh(&self) -> Self {
        let (s, c) = (self.value.sinh(), self.value.cosh());
        self.chain(s, c, s)
    }

    pub fn cosh(&self) -> Self {
        let (s, c) = (self.value.sinh(), self.value.cosh());
        self.chain(c, s, c)
    }

    pub fn tanh(&self) -> Self {
        let t = self.value.tanh();
        let sech2 = 1.0 - t * t;
        self.chain(t, sech2, -2.0 * t * sech2)
    }

    pub fn abs(&self) -> Self {
        let s = if self.value < 0.0 { -1.0 } else { 1.0 };
        self.chain(self.value.abs(), s, 0.0)
    }

    /// `self ^ c` for a constant real exponent. Integer exponents accept
    /// negative bases.
    pub fn powf(&self, c: f64) -> Self {
        let x = self.value;
        if c == 0.0 {
            return Jet2::constant(1.0);
        }
        if c.fract() == 0.0 && c.abs() < i32::MAX as f64 {
            let n = c as i32;
            let f = x.powi(n);
            let df = c * x.powi(n - 1);
            let d2f = if n == 1 { 0.0 } else { c * (c - 1.0) * x.powi(n - 2) };
            self.chain(f, df, d2f)
        } else {
            self.chain(
                x.powf(c),
                c * x.powf(c - 1.0),
                c * (c - 1.0) * x.powf(c - 2.0),
            )
        }
    }
}

impl From<f64> for Jet2 {
    fn from(v: f64) -> Self {
        Jet2::constant(v)
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(mut self, rhs: Jet2) -> Jet2 {
        self.value += rhs.value;
        for i in 0..3 {
            self.grad[i] += rhs.grad[i];
        }
        for k in 0..6 {
            self.hess[k] += rhs.hess[k];
        }
        self
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: Jet2) -> Jet2 {
        self + (-rhs)
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(mut self) -> Jet2 {
        self.value = -self.value;
        self.grad.iter_mut().for_each(|v| *v = -*v);
        self.hess.iter_mut().for_each(|v| *v = -*v);
        self
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: Jet2) -> Jet2 {
        let (a, b) = (&self, &rhs);
        let mut out = Jet2::constant(a.value * b.value);
        for i in 0..3 {
            out.grad[i] = a.value * b.grad[i] + b.value * a.grad[i];
        }
        let mut k = 0;
        for i in 0..3 {
            for j in i..3 {
                out.hess[k] = a.value * b.hess[k]
                    + b.value * a.hess[k]
                    + a.grad[i] * b.grad[j]
                    + a.grad[j] * b.grad[i];
                k += 1;
            }
        }
        out
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(mut self, rhs: f64) -> Jet2 {
        self.value *= rhs;
        self.grad.iter_mut().for_each(|v| *v *= rhs);
        self.hess.iter_mut().for_each(|v| *v *= rhs);
        self
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    fn div(self, rhs: Jet2) -> Jet2 {
        self * rhs.recip()
    }
}
