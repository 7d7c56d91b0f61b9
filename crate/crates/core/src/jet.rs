//! Truncated second-order Taylor jets.
//!
//! A [`Jet2`] carries the value of a scalar function together with its
//! gradient and Hessian at a point of a chart. Arithmetic follows the
//! truncated Taylor rules, so composing jets is forward-mode automatic
//! differentiation to second order.
//!
//! Every jet records the highest derivative order it knows exactly. Taking a
//! partial derivative lowers that order by one, and binary operations keep the
//! minimum of their operands' orders. Exact constants have unbounded order.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Order marker for exact constants (all derivatives known and zero).
pub const CONST_ORDER: u8 = u8::MAX;

/// Packed index of the symmetric entry `(i, j)`.
#[inline]
pub fn sym_index(i: usize, j: usize) -> usize {
    let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
    hi * (hi + 1) / 2 + lo
}

#[inline]
fn packed_len(n: usize) -> usize {
    n * (n + 1) / 2
}

#[derive(Clone, PartialEq)]
pub struct Jet2 {
    order: u8,
    value: f64,
    /// Gradient, present when `order >= 1` and not constant.
    first: Vec<f64>,
    /// Packed lower-triangular Hessian, present when `order >= 2` and not constant.
    second: Vec<f64>,
}

impl fmt::Debug for Jet2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_constant() {
            write!(f, "Jet2::const({})", self.value)
        } else {
            f.debug_struct("Jet2")
                .field("order", &self.order)
                .field("value", &self.value)
                .field("first", &self.first)
                .field("second", &self.second)
                .finish()
        }
    }
}

impl Default for Jet2 {
    fn default() -> Self {
        Jet2::constant(0.0)
    }
}

impl From<f64> for Jet2 {
    fn from(v: f64) -> Self {
        Jet2::constant(v)
    }
}

impl Jet2 {
    pub fn constant(value: f64) -> Self {
        Jet2 {
            order: CONST_ORDER,
            value,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    pub fn zero() -> Self {
        Jet2::constant(0.0)
    }

    /// A value whose derivatives are unknown.
    pub fn order0(value: f64) -> Self {
        Jet2 {
            order: 0,
            value,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    /// The coordinate function `x_index` on an `n`-dimensional chart, valued
    /// `value` at the expansion point, known to `order` (at most 2).
    pub fn variable(value: f64, index: usize, n: usize, order: u8) -> Self {
        assert!(index < n, "variable index {index} out of range for dimension {n}");
        let order = order.min(2);
        let mut first = Vec::new();
        let mut second = Vec::new();
        if order >= 1 {
            first = vec![0.0; n];
            first[index] = 1.0;
        }
        if order >= 2 {
            second = vec![0.0; packed_len(n)];
        }
        Jet2 {
            order,
            value,
            first,
            second,
        }
    }

    /// Builds a jet from raw parts. `second` is the full symmetric matrix
    /// flattened row-major; only its lower triangle is read.
    pub fn from_parts(value: f64, first: Vec<f64>, second_full: Option<&[f64]>) -> Self {
        let n = first.len();
        match second_full {
            Some(h) => {
                assert_eq!(h.len(), n * n);
                let mut second = vec![0.0; packed_len(n)];
                for i in 0..n {
                    for j in 0..=i {
                        second[sym_index(i, j)] = h[i * n + j];
                    }
                }
                Jet2 {
                    order: 2,
                    value,
                    first,
                    second,
                }
            }
            None => Jet2 {
                order: 1,
                value,
                first,
                second: Vec::new(),
            },
        }
    }

    /// Seeds every coordinate of `coords` as a variable of the given order.
    pub fn seed(coords: &[f64], order: u8) -> Vec<Jet2> {
        let n = coords.len();
        coords
            .iter()
            .enumerate()
            .map(|(i, &c)| Jet2::variable(c, i, n, order))
            .collect()
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.value
    }

    #[inline]
    pub fn order(&self) -> u8 {
        self.order
    }

    #[inline]
    pub fn is_constant(&self) -> bool {
        self.order == CONST_ORDER
    }

    /// Chart dimension, if the jet carries derivative data.
    pub fn dim(&self) -> Option<usize> {
        if self.first.is_empty() {
            None
        } else {
            Some(self.first.len())
        }
    }

    /// First partial `∂_i`, or zero for constants and missing data.
    pub fn d(&self, i: usize) -> f64 {
        self.first.get(i).copied().unwrap_or(0.0)
    }

    /// Second partial `∂_i ∂_j`.
    pub fn dd(&self, i: usize, j: usize) -> f64 {
        self.second.get(sym_index(i, j)).copied().unwrap_or(0.0)
    }

    pub fn gradient(&self) -> &[f64] {
        &self.first
    }

    /// Drops derivative information above `order`.
    pub fn truncate(&self, order: u8) -> Jet2 {
        if order >= self.order {
            return self.clone();
        }
        let mut out = self.clone();
        out.order = order;
        if order < 2 {
            out.second = Vec::new();
        }
        if order < 1 {
            out.first = Vec::new();
        }
        out
    }

    /// The partial derivative `∂_i` as a jet of one lower order.
    ///
    /// Panics on a jet of order 0, whose derivatives are unknown.
    pub fn partial(&self, i: usize) -> Jet2 {
        if self.is_constant() {
            return Jet2::zero();
        }
        assert!(self.order >= 1, "partial derivative of an order-0 jet");
        if self.order == 1 || self.first.is_empty() {
            return Jet2::order0(self.d(i)).truncate(self.order - 1);
        }
        let n = self.first.len();
        let first = (0..n).map(|j| self.dd(i, j)).collect();
        Jet2 {
            order: 1,
            value: self.first[i],
            first,
            second: Vec::new(),
        }
    }

    /// Directional derivative `Σ v_i ∂_i self` along a jet-valued direction.
    pub fn directional(&self, v: &[Jet2]) -> Jet2 {
        if self.is_constant() {
            return Jet2::zero();
        }
        let mut acc = Jet2::zero();
        for (i, vi) in v.iter().enumerate() {
            if vi.is_constant() && vi.value == 0.0 {
                continue;
            }
            acc += &(vi * &self.partial(i));
        }
        let ord = v
            .iter()
            .map(|x| x.order)
            .min()
            .unwrap_or(CONST_ORDER)
            .min(self.order - 1);
        acc.truncate(ord)
    }

    fn result_shape(a: &Jet2, b: &Jet2) -> (u8, usize) {
        let order = a.order.min(b.order);
        let n = a.first.len().max(b.first.len());
        (order, n)
    }

    /// Applies a scalar function given its value and first two derivatives
    /// at `self.value`.
    pub fn chain(&self, f0: f64, f1: f64, f2: f64) -> Jet2 {
        if self.is_constant() {
            return Jet2::constant(f0);
        }
        let first: Vec<f64> = self.first.iter().map(|g| f1 * g).collect();
        let mut second = Vec::new();
        if self.order >= 2 {
            let n = self.first.len();
            second = vec![0.0; packed_len(n)];
            for i in 0..n {
                for j in 0..=i {
                    let k = sym_index(i, j);
                    second[k] = f1 * self.dd(i, j) + f2 * self.first[i] * self.first[j];
                }
            }
        }
        Jet2 {
            order: self.order,
            value: f0,
            first,
            second,
        }
    }

    pub fn sqrt(&self) -> Jet2 {
        let s = self.value.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.value))
    }

    pub fn recip(&self) -> Jet2 {
        let r = 1.0 / self.value;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }

    pub fn exp(&self) -> Jet2 {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn ln(&self) -> Jet2 {
        let v = self.value;
        self.chain(v.ln(), 1.0 / v, -1.0 / (v * v))
    }

    pub fn sin(&self) -> Jet2 {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Jet2 {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn sinh(&self) -> Jet2 {
        let (s, c) = (self.value.sinh(), self.value.cosh());
        self.chain(s, c, s)
    }

    pub fn cosh(&self) -> Jet2 {
        let (s, c) = (self.value.sinh(), self.value.cosh());
        self.chain(c, s, c)
    }

    pub fn powi(&self, k: i32) -> Jet2 {
        let v = self.value;
        let kf = k as f64;
        self.chain(
            v.powi(k),
            kf * v.powi(k - 1),
            kf * (kf - 1.0) * v.powi(k - 2),
        )
    }

    pub fn scale(&self, s: f64) -> Jet2 {
        Jet2 {
            order: self.order,
            value: self.value * s,
            first: self.first.iter().map(|x| x * s).collect(),
            second: self.second.iter().map(|x| x * s).collect(),
        }
    }

    fn add_impl(a: &Jet2, b: &Jet2, sign: f64) -> Jet2 {
        let (order, n) = Jet2::result_shape(a, b);
        let value = a.value + sign * b.value;
        if order == CONST_ORDER {
            return Jet2::constant(value);
        }
        let mut first = Vec::new();
        if order >= 1 {
            first = vec![0.0; n];
            for (i, x) in first.iter_mut().enumerate() {
                *x = a.d(i) + sign * b.d(i);
            }
        }
        let mut second = Vec::new();
        if order >= 2 {
            let m = packed_len(n);
            second = vec![0.0; m];
            for (k, x) in second.iter_mut().enumerate() {
                *x = a.second.get(k).copied().unwrap_or(0.0)
                    + sign * b.second.get(k).copied().unwrap_or(0.0);
            }
        }
        Jet2 {
            order,
            value,
            first,
            second,
        }
    }

    fn mul_impl(a: &Jet2, b: &Jet2) -> Jet2 {
        if a.is_constant() {
            return b.scale(a.value);
        }
        if b.is_constant() {
            return a.scale(b.value);
        }
        let (order, n) = Jet2::result_shape(a, b);
        let value = a.value * b.value;
        let mut first = Vec::new();
        if order >= 1 {
            first = (0..n).map(|i| a.value * b.d(i) + b.value * a.d(i)).collect();
        }
        let mut second = Vec::new();
        if order >= 2 {
            second = vec![0.0; packed_len(n)];
            for i in 0..n {
                for j in 0..=i {
                    let k = sym_index(i, j);
                    second[k] = a.value * b.dd(i, j)
                        + b.value * a.dd(i, j)
                        + a.d(i) * b.d(j)
                        + a.d(j) * b.d(i);
                }
            }
        }
        Jet2 {
            order,
            value,
            first,
            second,
        }
    }
}

impl Add<&Jet2> for &Jet2 {
    type Output = Jet2;
    fn add(self, rhs: &Jet2) -> Jet2 {
        Jet2::add_impl(self, rhs, 1.0)
    }
}

impl Sub<&Jet2> for &Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: &Jet2) -> Jet2 {
        Jet2::add_impl(self, rhs, -1.0)
    }
}

impl Mul<&Jet2> for &Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: &Jet2) -> Jet2 {
        Jet2::mul_impl(self, rhs)
    }
}

impl Div<&Jet2> for &Jet2 {
    type Output = Jet2;
    fn div(self, rhs: &Jet2) -> Jet2 {
        if rhs.is_constant() {
            return self.scale(1.0 / rhs.value);
        }
        Jet2::mul_impl(self, &rhs.recip())
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Jet2> for Jet2 {
            type Output = Jet2;
            fn $m(self, rhs: Jet2) -> Jet2 {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Jet2> for Jet2 {
            type Output = Jet2;
            fn $m(self, rhs: &Jet2) -> Jet2 {
                (&self).$m(rhs)
            }
        }
        impl $tr<Jet2> for &Jet2 {
            type Output = Jet2;
            fn $m(self, rhs: Jet2) -> Jet2 {
                self.$m(&rhs)
            }
        }
        impl $tr<f64> for Jet2 {
            type Output = Jet2;
            fn $m(self, rhs: f64) -> Jet2 {
                (&self).$m(&Jet2::constant(rhs))
            }
        }
        impl $tr<f64> for &Jet2 {
            type Output = Jet2;
            fn $m(self, rhs: f64) -> Jet2 {
                self.$m(&Jet2::constant(rhs))
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for &Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

impl AddAssign<&Jet2> for Jet2 {
    fn add_assign(&mut self, rhs: &Jet2) {
        *self = &*self + rhs;
    }
}

impl AddAssign<Jet2> for Jet2 {
    fn add_assign(&mut self, rhs: Jet2) {
        *self = &*self + &rhs;
    }
}

impl SubAssign<&Jet2> for Jet2 {
    fn sub_assign(&mut self, rhs: &Jet2) {
        *self = &*self - rhs;
    }
}

impl SubAssign<Jet2> for Jet2 {
    fn sub_assign(&mut self, rhs: Jet2) {
        *self = &*self - &rhs;
    }
}

impl MulAssign<f64> for Jet2 {
    fn mul_assign(&mut self, rhs: f64) {
        *self = self.scale(rhs);
    }
}

/// Scalar types the closed-form model formulas are written against.
pub trait Scalar:
    Clone
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
{
    fn cst(v: f64) -> Self;
    fn val(&self) -> f64;
    fn sqrt(&self) -> Self;
    fn exp(&self) -> Self;
    fn sinh(&self) -> Self;
    fn cosh(&self) -> Self;
}

impl Scalar for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn val(&self) -> f64 {
        *self
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn sinh(&self) -> Self {
        f64::sinh(*self)
    }
    fn cosh(&self) -> Self {
        f64::cosh(*self)
    }
}

impl Scalar for Jet2 {
    fn cst(v: f64) -> Self {
        Jet2::constant(v)
    }
    fn val(&self) -> f64 {
        self.value
    }
    fn sqrt(&self) -> Self {
        Jet2::sqrt(self)
    }
    fn exp(&self) -> Self {
        Jet2::exp(self)
    }
    fn sinh(&self) -> Self {
        Jet2::sinh(self)
    }
    fn cosh(&self) -> Self {
        Jet2::cosh(self)
    }
}
