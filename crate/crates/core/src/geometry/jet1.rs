use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use crate::exprlang::Jet2;

/// First-order jet: a value and its coordinate gradient.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet1 {
    pub v: f64,
    pub d: [f64; 3],
}

impl Jet1 {
    pub const ZERO: Jet1 = Jet1 { v: 0.0, d: [0.0; 3] };

    pub const fn constant(v: f64) -> Self {
        Jet1 { v, d: [0.0; 3] }
    }

    /// Drops the second-order part of a [`Jet2`].
    pub fn from_jet2(j: &Jet2) -> Self {
        Jet1 { v: j.value, d: j.grad }
    }

    /// The jet of `∂_e f` given the second-order jet of `f`.
    pub fn partial_of(j: &Jet2, e: usize) -> Self {
        Jet1 {
            v: j.grad[e],
            d: [j.d2(e, 0), j.d2(e, 1), j.d2(e, 2)],
        }
    }

    pub fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        let s = 0.5 / r;
        Jet1 {
            v: r,
            d: self.d.map(|x| x * s),
        }
    }

    pub fn recip(self) -> Self {
        let r = 1.0 / self.v;
        let s = -r * r;
        Jet1 {
            v: r,
            d: self.d.map(|x| x * s),
        }
    }

    /// Directional derivative `X^e ∂_e` of this jet.
    #[inline]
    pub fn along(&self, x: &[f64; 3]) -> f64 {
        self.d[0] * x[0] + self.d[1] * x[1] + self.d[2] * x[2]
    }
}

impl Add for Jet1 {
    type Output = Jet1;
    #[inline]
    fn add(self, o: Jet1) -> Jet1 {
        Jet1 {
            v: self.v + o.v,
            d: [self.d[0] + o.d[0], self.d[1] + o.d[1], self.d[2] + o.d[2]],
        }
    }
}

impl AddAssign for Jet1 {
    #[inline]
    fn add_assign(&mut self, o: Jet1) {
        *self = *self + o;
    }
}

impl Sub for Jet1 {
    type Output = Jet1;
    #[inline]
    fn sub(self, o: Jet1) -> Jet1 {
        Jet1 {
            v: self.v - o.v,
            d: [self.d[0] - o.d[0], self.d[1] - o.d[1], self.d[2] - o.d[2]],
        }
    }
}

impl Neg for Jet1 {
    type Output = Jet1;
    #[inline]
    fn neg(self) -> Jet1 {
        Jet1 {
            v: -self.v,
            d: self.d.map(|x| -x),
        }
    }
}

impl Mul for Jet1 {
    type Output = Jet1;
    #[inline]
    fn mul(self, o: Jet1) -> Jet1 {
        Jet1 {
            v: self.v * o.v,
            d: [
                self.v * o.d[0] + o.v * self.d[0],
                self.v * o.d[1] + o.v * self.d[1],
                self.v * o.d[2] + o.v * self.d[2],
            ],
        }
    }
}

impl Mul<f64> for Jet1 {
    type Output = Jet1;
    #[inline]
    fn mul(self, s: f64) -> Jet1 {
        Jet1 {
            v: self.v * s,
            d: self.d.map(|x| x * s),
        }
    }
}

impl Div for Jet1 {
    type Output = Jet1;
    #[inline]
    fn div(self, o: Jet1) -> Jet1 {
        self * o.recip()
    }
}

pub type Vec1 = [Jet1; 3];

#[inline]
pub fn values(v: &Vec1) -> [f64; 3] {
    [v[0].v, v[1].v, v[2].v]
}
