//! Second-order Taylor jets for derivatives w.r.t. network inputs.
//!
//! A jet carries a value together with first and (optionally) second
//! derivatives w.r.t. up to three input axes. Propagating jets through a
//! forward pass yields exact input derivatives (u_t, u_x, u_xx, ...) with no
//! finite differencing. The scalar type is generic: with `T = f64` this is a
//! plain forward evaluation, with `T = Var` the whole jet computation lands
//! on the reverse tape and residuals built from jet components stay
//! differentiable w.r.t. the parameters.

use super::scalar::Scalar;
use crate::error::{Error, Result};

/// Which input derivatives a network evaluation should produce.
///
/// Order 0 is a plain forward pass, order 1 adds first derivatives on every
/// input axis, order 2 adds the full symmetric set of second derivatives.
/// Orders above 2 are not supported.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DerivRequest {
    order: u8,
}

impl DerivRequest {
    pub const VALUE: Self = Self { order: 0 };
    pub const FIRST: Self = Self { order: 1 };
    pub const SECOND: Self = Self { order: 2 };

    pub fn with_order(order: u8) -> Result<Self> {
        if order > 2 {
            return Err(Error::Capability(format!(
                "derivative order {order} requested, jets support orders <= 2"
            )));
        }
        Ok(Self { order })
    }

    pub fn order(self) -> u8 {
        self.order
    }
}

fn n_second(k: usize) -> usize {
    k * (k + 1) / 2
}

fn n_comps(k: usize, order: u8) -> usize {
    match order {
        0 => 1,
        1 => 1 + k,
        _ => 1 + k + n_second(k),
    }
}

/// Index of the symmetric pair (i, j), i <= j, in the upper-triangle layout.
fn pair_offset(k: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < k);
    i * (2 * k + 1 - i) / 2 + (j - i)
}

/// Truncated Taylor expansion: value, gradient and symmetric Hessian w.r.t.
/// `k` input axes, to the requested order.
#[derive(Clone, Debug)]
pub struct Jet<T> {
    k: usize,
    order: u8,
    comps: Vec<T>,
}

impl<T: Scalar> Jet<T> {
    pub fn constant(k: usize, order: u8, value: T) -> Self {
        let mut comps = vec![T::zero(); n_comps(k, order)];
        comps[0] = value;
        Self { k, order, comps }
    }

    /// A jet seeded on input axis `axis`: d1[axis] = 1, everything else 0.
    pub fn variable(k: usize, order: u8, axis: usize, value: T) -> Self {
        assert!(axis < k, "axis {axis} out of range for {k} inputs");
        let mut jet = Self::constant(k, order, value);
        if order >= 1 {
            jet.comps[1 + axis] = T::one();
        }
        jet
    }

    pub fn axes(&self) -> usize {
        self.k
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn value(&self) -> T {
        self.comps[0]
    }

    pub fn d1(&self, axis: usize) -> T {
        assert!(self.order >= 1 && axis < self.k);
        self.comps[1 + axis]
    }

    pub fn d2(&self, i: usize, j: usize) -> T {
        assert!(self.order >= 2 && i < self.k && j < self.k);
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.comps[1 + self.k + pair_offset(self.k, i, j)]
    }

    pub fn set_d1(&mut self, axis: usize, v: T) {
        assert!(self.order >= 1 && axis < self.k);
        self.comps[1 + axis] = v;
    }

    pub fn set_d2(&mut self, i: usize, j: usize, v: T) {
        assert!(self.order >= 2 && i < self.k && j < self.k);
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.comps[1 + self.k + pair_offset(self.k, i, j)] = v;
    }

    fn assert_compatible(&self, other: &Self) {
        assert!(
            self.k == other.k && self.order == other.order,
            "jet shape mismatch"
        );
    }

    pub fn add(&self, other: &Self) -> Self {
        self.assert_compatible(other);
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(&a, &b)| a + b)
            .collect();
        Self { k: self.k, order: self.order, comps }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.assert_compatible(other);
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(&a, &b)| a - b)
            .collect();
        Self { k: self.k, order: self.order, comps }
    }

    pub fn neg(&self) -> Self {
        let comps = self.comps.iter().map(|&a| -a).collect();
        Self { k: self.k, order: self.order, comps }
    }

    pub fn scale(&self, c: T) -> Self {
        let comps = self.comps.iter().map(|&a| a * c).collect();
        Self { k: self.k, order: self.order, comps }
    }

    pub fn add_value(&self, c: T) -> Self {
        let mut out = self.clone();
        out.comps[0] = out.comps[0] + c;
        out
    }

    /// Product rule to second order.
    pub fn mul(&self, other: &Self) -> Self {
        self.assert_compatible(other);
        let k = self.k;
        let mut out = Self::constant(k, self.order, self.comps[0] * other.comps[0]);
        if self.order >= 1 {
            for i in 0..k {
                out.comps[1 + i] =
                    self.comps[1 + i] * other.comps[0] + self.comps[0] * other.comps[1 + i];
            }
        }
        if self.order >= 2 {
            for i in 0..k {
                for j in i..k {
                    let p = 1 + k + pair_offset(k, i, j);
                    out.comps[p] = self.comps[p] * other.comps[0]
                        + self.comps[1 + i] * other.comps[1 + j]
                        + self.comps[1 + j] * other.comps[1 + i]
                        + self.comps[0] * other.comps[p];
                }
            }
        }
        out
    }

    /// Composition with a univariate function given its value and first two
    /// derivatives at this jet's value: (f∘g)' = f'·g', (f∘g)'' = f'·g'' + f''·g'·g'.
    pub fn chain(&self, f0: T, f1: T, f2: T) -> Self {
        let k = self.k;
        let mut out = Self::constant(k, self.order, f0);
        if self.order >= 1 {
            for i in 0..k {
                out.comps[1 + i] = f1 * self.comps[1 + i];
            }
        }
        if self.order >= 2 {
            for i in 0..k {
                for j in i..k {
                    let p = 1 + k + pair_offset(k, i, j);
                    out.comps[p] =
                        f1 * self.comps[p] + f2 * self.comps[1 + i] * self.comps[1 + j];
                }
            }
        }
        out
    }
}
