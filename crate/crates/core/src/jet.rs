//! Truncated Taylor arithmetic.
//!
//! A [`Jet`] of degree `d` stores the normalized Taylor coefficients
//! `c_k = f^(k)(t0) / k!` for `k = 0..=d`. Every operation propagates the
//! coefficients exactly (up to rounding) through the recurrences of the
//! corresponding elementary function, so derivatives never involve a step
//! size.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    coeffs: Vec<f64>,
}

impl Jet {
    pub fn constant(value: f64, degree: usize) -> Self {
        let mut coeffs = vec![0.0; degree + 1];
        coeffs[0] = value;
        Self { coeffs }
    }

    /// The independent variable expanded around `t0`.
    pub fn variable(t0: f64, degree: usize) -> Self {
        let mut jet = Self::constant(t0, degree);
        if degree >= 1 {
            jet.coeffs[1] = 1.0;
        }
        jet
    }

    pub fn zero(degree: usize) -> Self {
        Self::constant(0.0, degree)
    }

    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "a jet needs at least one coefficient");
        Self { coeffs }
    }

    /// Builds a jet from plain derivatives `[f, f', f'', ...]`.
    pub fn from_derivatives(derivs: &[f64]) -> Self {
        let mut fact = 1.0;
        let coeffs = derivs
            .iter()
            .enumerate()
            .map(|(k, d)| {
                if k > 0 {
                    fact *= k as f64;
                }
                d / fact
            })
            .collect();
        Self::from_coeffs(coeffs)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// The `k`-th derivative at the expansion point, or 0 beyond the degree.
    pub fn derivative(&self, k: usize) -> f64 {
        match self.coeffs.get(k) {
            Some(c) => c * factorial(k),
            None => 0.0,
        }
    }

    /// All derivatives `[f, f', ..., f^(d)]`.
    pub fn derivatives(&self) -> Vec<f64> {
        (0..=self.degree()).map(|k| self.derivative(k)).collect()
    }

    /// The jet of `f'`; its degree is one less.
    ///
    /// # Panics
    /// If the jet has degree 0.
    pub fn differentiate(&self) -> Self {
        assert!(self.degree() >= 1, "cannot differentiate a degree-0 jet");
        let coeffs = (1..self.coeffs.len())
            .map(|k| k as f64 * self.coeffs[k])
            .collect();
        Self { coeffs }
    }

    pub fn truncate(&self, degree: usize) -> Self {
        let keep = (degree + 1).min(self.coeffs.len());
        Self {
            coeffs: self.coeffs[..keep].to_vec(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// `1 / self`. Returns `None` when the value is zero.
    pub fn recip(&self) -> Option<Self> {
        Self::constant(1.0, self.degree()).checked_div(self)
    }

    /// `self / rhs`. Returns `None` when `rhs` has zero value.
    pub fn checked_div(&self, rhs: &Self) -> Option<Self> {
        let b0 = rhs.coeffs[0];
        if b0 == 0.0 {
            return None;
        }
        let d = self.degree().min(rhs.degree());
        let mut out = vec![0.0; d + 1];
        for k in 0..=d {
            let mut acc = self.coeffs[k];
            for j in 1..=k {
                acc -= rhs.coeffs[j] * out[k - j];
            }
            out[k] = acc / b0;
        }
        Some(Self { coeffs: out })
    }

    pub fn exp(&self) -> Self {
        let d = self.degree();
        let mut out = vec![0.0; d + 1];
        out[0] = self.coeffs[0].exp();
        for k in 1..=d {
            let acc: f64 = (1..=k)
                .map(|j| j as f64 * self.coeffs[j] * out[k - j])
                .sum();
            out[k] = acc / k as f64;
        }
        Self { coeffs: out }
    }

    /// Returns `(sin self, cos self)`; both series are coupled.
    pub fn sin_cos(&self) -> (Self, Self) {
        let d = self.degree();
        let mut s = vec![0.0; d + 1];
        let mut c = vec![0.0; d + 1];
        s[0] = self.coeffs[0].sin();
        c[0] = self.coeffs[0].cos();
        for k in 1..=d {
            let mut ds = 0.0;
            let mut dc = 0.0;
            for j in 1..=k {
                let w = j as f64 * self.coeffs[j];
                ds += w * c[k - j];
                dc -= w * s[k - j];
            }
            s[k] = ds / k as f64;
            c[k] = dc / k as f64;
        }
        (Self { coeffs: s }, Self { coeffs: c })
    }

    pub fn sin(&self) -> Self {
        self.sin_cos().0
    }

    pub fn cos(&self) -> Self {
        self.sin_cos().1
    }

    /// Square root; `None` unless the value is strictly positive.
    pub fn sqrt(&self) -> Option<Self> {
        let a0 = self.coeffs[0];
        if a0 <= 0.0 {
            return None;
        }
        let d = self.degree();
        let mut out = vec![0.0; d + 1];
        out[0] = a0.sqrt();
        for k in 1..=d {
            let mut acc = self.coeffs[k];
            for j in 1..k {
                acc -= out[j] * out[k - j];
            }
            out[k] = acc / (2.0 * out[0]);
        }
        Some(Self { coeffs: out })
    }

    /// Integer power by repeated squaring. Negative exponents need a
    /// nonzero value.
    pub fn powi(&self, exp: i32) -> Option<Self> {
        let base = if exp < 0 { self.recip()? } else { self.clone() };
        let mut e = exp.unsigned_abs();
        let mut acc = Self::constant(1.0, self.degree());
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &sq;
            }
            e >>= 1;
            if e > 0 {
                sq = &sq * &sq;
            }
        }
        Some(acc)
    }

    /// Real power `self^p`; requires a strictly positive value.
    pub fn powf(&self, p: f64) -> Option<Self> {
        let a0 = self.coeffs[0];
        if a0 <= 0.0 {
            return None;
        }
        // a * y' = p * a' * y, written on coefficients.
        let d = self.degree();
        let mut out = vec![0.0; d + 1];
        out[0] = a0.powf(p);
        for k in 1..=d {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += (p * j as f64 - (k - j) as f64) * self.coeffs[j] * out[k - j];
            }
            out[k] = acc / (k as f64 * a0);
        }
        Some(Self { coeffs: out })
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let d = self.degree().min(rhs.degree());
        Self {
            coeffs: (0..=d).map(|k| f(self.coeffs[k], rhs.coeffs[k])).collect(),
        }
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        let d = self.degree().min(rhs.degree());
        let mut out = vec![0.0; d + 1];
        for (i, a) in self.coeffs.iter().take(d + 1).enumerate() {
            if *a == 0.0 {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().take(d + 1 - i).enumerate() {
                out[i + j] += a * b;
            }
        }
        Jet { coeffs: out }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

/// Ring operations shared by `f64` and [`Jet`], so frame algebra can be
/// written once for plain values and for Taylor expansions.
pub trait Scalar:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    /// A zero compatible with `self` (same jet degree).
    fn zero_like(&self) -> Self;
    fn scaled(&self, s: f64) -> Self;
}

impl Scalar for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn scaled(&self, s: f64) -> Self {
        self * s
    }
}

impl Scalar for Jet {
    fn zero_like(&self) -> Self {
        Jet::zero(self.degree())
    }
    fn scaled(&self, s: f64) -> Self {
        self.scale(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sin_series_at_zero() {
        let t = Jet::variable(0.0, 4);
        let s = t.scale(2.0).sin();
        assert_eq!(s.derivatives(), vec![0.0, 2.0, 0.0, -8.0, 0.0]);
    }

    #[test]
    fn quartic_monomial() {
        let t = Jet::variable(1.0, 4);
        let p = &(&t * &t) * &(&t * &t);
        let d = p.derivatives();
        for (got, want) in d.iter().zip([1.0, 4.0, 12.0, 24.0, 24.0]) {
            assert_relative_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn division_inverts_multiplication() {
        let t = Jet::variable(0.3, 5);
        let a = t.exp();
        let b = &t.cos() + &Jet::constant(2.0, 5);
        let q = (&a * &b).checked_div(&b).unwrap();
        for (x, y) in q.coeffs().iter().zip(a.coeffs()) {
            assert_relative_eq!(x, y, epsilon = 1e-13);
        }
        assert!(a.checked_div(&Jet::zero(5)).is_none());
    }

    #[test]
    fn sqrt_and_powf_agree() {
        let t = Jet::variable(0.7, 4);
        let a = &t.exp() + &Jet::constant(1.0, 4);
        let s = a.sqrt().unwrap();
        let p = a.powf(0.5).unwrap();
        for (x, y) in s.coeffs().iter().zip(p.coeffs()) {
            assert_relative_eq!(x, y, epsilon = 1e-13);
        }
        assert!(Jet::constant(-1.0, 2).sqrt().is_none());
    }

    #[test]
    fn negative_integer_power() {
        let t = Jet::variable(2.0, 3);
        let p = t.powi(-2).unwrap();
        // t^-2 -> -2 t^-3 -> 6 t^-4 -> -24 t^-5
        let want = [0.25, -0.25, 6.0 / 16.0, -24.0 / 32.0];
        for (got, w) in p.derivatives().iter().zip(want) {
            assert_relative_eq!(*got, w, epsilon = 1e-13);
        }
        assert!(Jet::variable(0.0, 3).powi(-1).is_none());
        assert_eq!(Jet::variable(0.0, 3).powi(0).unwrap().value(), 1.0);
    }

    #[test]
    fn differentiate_drops_degree() {
        let t = Jet::variable(0.0, 4);
        let d = t.sin().differentiate();
        assert_eq!(d.degree(), 3);
        assert_eq!(d.derivatives(), vec![1.0, 0.0, -1.0, 0.0]);
    }
}
