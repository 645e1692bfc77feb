//! Random Legendre curves with known structure, used as test inputs.
//!
//! Unit-speed families prescribe the unit tangent `u(t)` in frame
//! components as a combination of fixed horizontal vectors with
//! trigonometric coefficients; positions follow by exact integration
//! (`y_i' = 2a_i`, `x_i' = 2b_i`, `z' = Σ y_i x_i'`). Products of
//! trigonometric series are expanded in closed form, so every curve is an
//! ordinary expression-based [`CurveSpec`].

use std::f64::consts::PI;

use rand::Rng;

use crate::curve::{CurveSpec, Grid};
use crate::error::Result;
use crate::expr::Expr;

const FREQ_EPS: f64 = 1e-12;
const DRIFT_EPS: f64 = 1e-12;

fn poly_add(a: &mut Vec<f64>, b: &[f64], s: f64) {
    if a.len() < b.len() {
        a.resize(b.len(), 0.0);
    }
    for (x, y) in a.iter_mut().zip(b) {
        *x += s * y;
    }
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_derivative(a: &[f64]) -> Vec<f64> {
    a.iter().enumerate().skip(1).map(|(p, c)| c * p as f64).collect()
}

fn poly_eval(a: &[f64], t: f64) -> f64 {
    a.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

fn poly_is_constant(a: &[f64]) -> bool {
    a.iter().skip(1).all(|c| c.abs() < DRIFT_EPS)
}

fn poly_expr(a: &[f64]) -> Option<Expr> {
    let t = || Box::new(Expr::Param);
    a.iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(p, c)| match p {
            0 => Expr::Const(*c),
            1 => Expr::Mul(Box::new(Expr::Const(*c)), t()),
            _ => Expr::Mul(Box::new(Expr::Const(*c)), Box::new(Expr::Pow(t(), p as f64))),
        })
        .reduce(|a, b| Expr::Add(Box::new(a), Box::new(b)))
}

/// `C(t)·cos(freq·t) + S(t)·sin(freq·t)` with polynomial amplitudes and
/// `freq > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Wave {
    pub freq: f64,
    pub cos_amp: Vec<f64>,
    pub sin_amp: Vec<f64>,
}

/// A polynomial plus a finite sum of waves with polynomial amplitudes.
/// The class is closed under products, derivatives and integrals.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrigSeries {
    /// Polynomial coefficients in `t`, lowest first.
    pub poly: Vec<f64>,
    pub waves: Vec<Wave>,
}

impl TrigSeries {
    pub fn constant(c: f64) -> Self {
        Self {
            poly: vec![c],
            waves: Vec::new(),
        }
    }

    pub fn cos(freq: f64) -> Self {
        Self::wave(freq, 1.0, 0.0)
    }

    pub fn sin(freq: f64) -> Self {
        Self::wave(freq, 0.0, 1.0)
    }

    pub fn wave(freq: f64, cos_amp: f64, sin_amp: f64) -> Self {
        let mut s = Self::default();
        s.push_wave(freq, &[cos_amp], &[sin_amp]);
        s
    }

    fn push_wave(&mut self, freq: f64, cos_amp: &[f64], sin_amp: &[f64]) {
        // cos is even, sin is odd.
        let sign = if freq < 0.0 { -1.0 } else { 1.0 };
        let freq = freq.abs();
        if freq < FREQ_EPS {
            poly_add(&mut self.poly, cos_amp, 1.0);
            return;
        }
        let idx = match self.waves.iter().position(|w| (w.freq - freq).abs() < FREQ_EPS) {
            Some(i) => i,
            None => {
                self.waves.push(Wave {
                    freq,
                    cos_amp: Vec::new(),
                    sin_amp: Vec::new(),
                });
                self.waves.len() - 1
            }
        };
        let w = &mut self.waves[idx];
        poly_add(&mut w.cos_amp, cos_amp, 1.0);
        poly_add(&mut w.sin_amp, sin_amp, sign);
    }

    /// Sets the sine amplitude of the wave at `freq` to the constant `v`.
    fn set_sin_amp(&mut self, freq: f64, v: f64) {
        let w = self
            .waves
            .iter_mut()
            .find(|w| (w.freq - freq).abs() < FREQ_EPS)
            .expect("wave present");
        w.sin_amp = vec![v];
    }

    pub fn scaled(&self, s: f64) -> Self {
        let scale = |p: &[f64]| p.iter().map(|c| c * s).collect();
        Self {
            poly: scale(&self.poly),
            waves: self
                .waves
                .iter()
                .map(|w| Wave {
                    freq: w.freq,
                    cos_amp: scale(&w.cos_amp),
                    sin_amp: scale(&w.sin_amp),
                })
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        poly_add(&mut out.poly, &other.poly, 1.0);
        for w in &other.waves {
            out.push_wave(w.freq, &w.cos_amp, &w.sin_amp);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self {
            poly: poly_mul(&self.poly, &other.poly),
            waves: Vec::new(),
        };
        for w in &other.waves {
            out.push_wave(w.freq, &poly_mul(&self.poly, &w.cos_amp), &poly_mul(&self.poly, &w.sin_amp));
        }
        for w in &self.waves {
            out.push_wave(w.freq, &poly_mul(&other.poly, &w.cos_amp), &poly_mul(&other.poly, &w.sin_amp));
        }
        for p in &self.waves {
            for q in &other.waves {
                let (sum, diff) = (p.freq + q.freq, p.freq - q.freq);
                // cos·cos, sin·sin, sin·cos and cos·sin product rules.
                let cc = poly_mul(&p.cos_amp, &q.cos_amp);
                let ss = poly_mul(&p.sin_amp, &q.sin_amp);
                let sc = poly_mul(&p.sin_amp, &q.cos_amp);
                let cs = poly_mul(&p.cos_amp, &q.sin_amp);
                let comb = |a: &[f64], b: &[f64], s: f64| {
                    let mut out: Vec<f64> = a.iter().map(|v| 0.5 * v).collect();
                    poly_add(&mut out, b, 0.5 * s);
                    out
                };
                out.push_wave(diff, &comb(&cc, &ss, 1.0), &comb(&sc, &cs, -1.0));
                out.push_wave(sum, &comb(&cc, &ss, -1.0), &comb(&sc, &cs, 1.0));
            }
        }
        out
    }

    pub fn derivative(&self) -> Self {
        let mut out = Self {
            poly: poly_derivative(&self.poly),
            waves: Vec::new(),
        };
        for w in &self.waves {
            let mut c = poly_derivative(&w.cos_amp);
            poly_add(&mut c, &w.sin_amp, w.freq);
            let mut s = poly_derivative(&w.sin_amp);
            poly_add(&mut s, &w.cos_amp, -w.freq);
            out.push_wave(w.freq, &c, &s);
        }
        out
    }

    /// `∫₀ᵗ`.
    pub fn integral(&self) -> Self {
        let mut out = Self {
            poly: std::iter::once(0.0)
                .chain(self.poly.iter().enumerate().map(|(p, c)| c / (p + 1) as f64))
                .collect(),
            waves: Vec::new(),
        };
        for w in &self.waves {
            // Antiderivative A cos + B sin needs A' + ωB = C and
            // B' − ωA = S; the derivative terms are nilpotent, so the
            // fixed-point iteration is exact after deg + 1 rounds.
            let rounds = w.cos_amp.len().max(w.sin_amp.len()) + 1;
            let (mut a, mut b) = (Vec::new(), Vec::new());
            for _ in 0..rounds {
                let mut na = poly_derivative(&b);
                poly_add(&mut na, &w.sin_amp, -1.0);
                let na: Vec<f64> = na.iter().map(|v| v / w.freq).collect();
                let mut nb = w.cos_amp.clone();
                poly_add(&mut nb, &poly_derivative(&na), -1.0);
                b = nb.iter().map(|v| v / w.freq).collect();
                a = na;
            }
            out.push_wave(w.freq, &a, &b);
            // Subtract the value at 0, which is A(0).
            poly_add(&mut out.poly, &[a.first().copied().unwrap_or(0.0)], -1.0);
        }
        out
    }

    pub fn eval(&self, t: f64) -> f64 {
        poly_eval(&self.poly, t)
            + self
                .waves
                .iter()
                .map(|w| poly_eval(&w.cos_amp, t) * (w.freq * t).cos() + poly_eval(&w.sin_amp, t) * (w.freq * t).sin())
                .sum::<f64>()
    }

    /// Coefficient of `t` in the polynomial part.
    pub fn drift(&self) -> f64 {
        self.poly.get(1).copied().unwrap_or(0.0)
    }

    /// True when every frequency is an integer and no amplitude grows, so
    /// the series has period `2π`.
    pub fn is_2pi_periodic(&self) -> bool {
        poly_is_constant(&self.poly)
            && self.waves.iter().all(|w| {
                poly_is_constant(&w.cos_amp)
                    && poly_is_constant(&w.sin_amp)
                    && (w.freq - w.freq.round()).abs() < 1e-9
            })
    }

    pub fn to_expr(&self) -> Expr {
        let mut terms: Vec<Expr> = Vec::new();
        if let Some(p) = poly_expr(&self.poly) {
            terms.push(p);
        }
        for w in &self.waves {
            let arg = || Box::new(Expr::Mul(Box::new(Expr::Const(w.freq)), Box::new(Expr::Param)));
            if let Some(c) = poly_expr(&w.cos_amp) {
                terms.push(Expr::Mul(Box::new(c), Box::new(Expr::Cos(arg()))));
            }
            if let Some(s) = poly_expr(&w.sin_amp) {
                terms.push(Expr::Mul(Box::new(s), Box::new(Expr::Sin(arg()))));
            }
        }
        terms
            .into_iter()
            .reduce(|a, b| Expr::Add(Box::new(a), Box::new(b)))
            .unwrap_or(Expr::Const(0.0))
    }
}

/// `J(a, b) = (−b, a)` on horizontal frame components.
pub fn complex_structure(v: &[f64]) -> Vec<f64> {
    let n = v.len() / 2;
    let mut out = vec![0.0; v.len()];
    for i in 0..n {
        out[i] = -v[n + i];
        out[n + i] = v[i];
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A random unit vector in `ℝ^{2n}` orthogonal to every vector in `avoid`
/// (which must be orthonormal).
pub fn random_unit_orthogonal<R: Rng>(rng: &mut R, dim: usize, avoid: &[Vec<f64>]) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for a in avoid {
            let p = dot(&v, a);
            for (vc, ac) in v.iter_mut().zip(a) {
                *vc -= p * ac;
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 0.1 {
            return v.into_iter().map(|c| c / norm).collect();
        }
    }
}

/// Orthonormal `e_1..e_k` spanning an isotropic subspace (`⟨Je_i, e_j⟩ = 0`),
/// `k ≤ n`.
pub fn random_isotropic_frame<R: Rng>(rng: &mut R, n: usize, k: usize) -> Vec<Vec<f64>> {
    assert!(k <= n, "isotropic subspaces have dimension at most n");
    let mut avoid: Vec<Vec<f64>> = Vec::new();
    let mut out = Vec::new();
    for _ in 0..k {
        let e = random_unit_orthogonal(rng, 2 * n, &avoid);
        avoid.push(e.clone());
        avoid.push(complex_structure(&e));
        out.push(e);
    }
    out
}

/// Unit tangent `u(t) = Σ_j w_j(t) e_j` with constant horizontal `e_j`.
#[derive(Clone, Debug)]
pub struct TangentModel {
    pub n: usize,
    pub basis: Vec<Vec<f64>>,
    pub weights: Vec<TrigSeries>,
}

impl TangentModel {
    /// Frame component `c` of `u` as a series.
    fn component(&self, c: usize) -> TrigSeries {
        self.basis
            .iter()
            .zip(&self.weights)
            .fold(TrigSeries::default(), |acc, (e, w)| acc.add(&w.scaled(e[c])))
    }

    /// Coordinates `(x, y, z)` starting from `(x0, y0, z0)` at `t = 0`.
    pub fn integrate(&self, x0: &[f64], y0: &[f64], z0: f64) -> Vec<TrigSeries> {
        let n = self.n;
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            y.push(self.component(i).scaled(2.0).integral().add(&TrigSeries::constant(y0[i])));
            x.push(self.component(n + i).scaled(2.0).integral().add(&TrigSeries::constant(x0[i])));
        }
        let mut rate = TrigSeries::default();
        for i in 0..n {
            rate = rate.add(&y[i].mul(&x[i].derivative()));
        }
        let z = rate.integral().add(&TrigSeries::constant(z0));
        x.into_iter().chain(y).chain(std::iter::once(z)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyKind {
    /// Constant tangent.
    Line,
    /// Circle in an isotropic plane: `r = 2`, `f ≡ 0`.
    IsotropicCircle,
    /// Circle in a complex line: `r = 3`, `|f| ≡ 1`, `k₂ ≡ 1`.
    ComplexCircle,
    /// Circle with `0 < |f| < 1`: `r = 5`, `k₂ = |f|`, `k₃ = √(1−f²)`, `k₄ = k₁`.
    TiltedCircle,
    /// Tangent rotating in two orthogonal planes at different rates.
    DoubleRotation,
    /// Tangent tracing a small circle of the sphere in an isotropic
    /// 3-space (`n ≥ 3`): a helix with `r = 3` and `φT ⊥ E₂`.
    IsotropicHelix,
    /// Double rotation inside an isotropic 4-space (`n ≥ 4`): `r = 4`.
    IsotropicDoubleRotation,
    /// Random trigonometric profile, not unit speed.
    Profile,
}

#[derive(Clone, Debug)]
pub struct GeneratedCurve {
    pub kind: FamilyKind,
    pub spec: CurveSpec,
    pub coords: Vec<TrigSeries>,
    /// Osculating order implied by the construction, when known.
    pub expected_order: Option<usize>,
    pub unit_speed: bool,
    /// Every coordinate has period `2π`.
    pub closed: bool,
}

impl GeneratedCurve {
    fn from_series(kind: FamilyKind, n: usize, coords: Vec<TrigSeries>, expected_order: Option<usize>, unit_speed: bool) -> Result<Self> {
        let closed = coords.iter().all(TrigSeries::is_2pi_periodic);
        let spec = CurveSpec::new(n, coords.iter().map(TrigSeries::to_expr).collect())?;
        Ok(Self {
            kind,
            spec,
            coords,
            expected_order,
            unit_speed,
            closed,
        })
    }

    /// A grid with `count` samples: one period for closed curves, else `[0, 2π]`.
    pub fn grid(&self, count: usize) -> Grid {
        if self.closed {
            Grid::closed(0.0, 2.0 * PI, count)
        } else {
            Grid::open(0.0, 2.0 * PI, count)
        }
    }
}

fn random_offsets<R: Rng>(rng: &mut R, n: usize) -> (Vec<f64>, Vec<f64>, f64) {
    let x0 = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let y0 = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    (x0, y0, rng.gen_range(-1.0..1.0))
}

fn unit_speed<R: Rng>(rng: &mut R, kind: FamilyKind, model: TangentModel, order: Option<usize>) -> Result<GeneratedCurve> {
    let n = model.n;
    let (x0, y0, z0) = random_offsets(rng, n);
    GeneratedCurve::from_series(kind, n, model.integrate(&x0, &y0, z0), order, true)
}

fn circle_model(n: usize, e1: Vec<f64>, e2: Vec<f64>, omega: f64) -> TangentModel {
    TangentModel {
        n,
        basis: vec![e1, e2],
        weights: vec![TrigSeries::cos(omega), TrigSeries::sin(omega)],
    }
}

fn random_omega<R: Rng>(rng: &mut R) -> f64 {
    rng.gen_range(1..=3) as f64
}

pub fn line<R: Rng>(rng: &mut R, n: usize) -> Result<GeneratedCurve> {
    let e = random_unit_orthogonal(rng, 2 * n, &[]);
    let model = TangentModel {
        n,
        basis: vec![e],
        weights: vec![TrigSeries::constant(1.0)],
    };
    unit_speed(rng, FamilyKind::Line, model, Some(1))
}

pub fn isotropic_circle<R: Rng>(rng: &mut R, n: usize) -> Result<GeneratedCurve> {
    let mut frame = random_isotropic_frame(rng, n, 2);
    let e2 = frame.pop().expect("two vectors");
    let e1 = frame.pop().expect("two vectors");
    let omega = random_omega(rng);
    unit_speed(rng, FamilyKind::IsotropicCircle, circle_model(n, e1, e2, omega), Some(2))
}

pub fn complex_circle<R: Rng>(rng: &mut R, n: usize) -> Result<GeneratedCurve> {
    let e1 = random_unit_orthogonal(rng, 2 * n, &[]);
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let e2: Vec<f64> = complex_structure(&e1).iter().map(|c| sign * c).collect();
    let omega = random_omega(rng);
    unit_speed(rng, FamilyKind::ComplexCircle, circle_model(n, e1, e2, omega), Some(3))
}

/// `f` is drawn from `0.2 ≤ |f| ≤ 0.8`.
pub fn tilted_circle<R: Rng>(rng: &mut R, n: usize) -> Result<GeneratedCurve> {
    let e1 = random_unit_orthogonal(rng, 2 * n, &[]);
    let je1 = complex_structure(&e1);
    let w = random_unit_orthogonal(rng, 2 * n, &[e1.clone(), je1.clone()]);
    let f: f64 = rng.gen_range(0.2..0.8) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let s = (1.0 - f * f).sqrt();
    let e2: Vec<f64> = je1.iter().zip(&w).map(|(a, b)| f * a + s * b).collect();
    let omega = random_omega(rng);
    let order = (2 * n + 1).min(5);
    unit_speed(rng, FamilyKind::TiltedCircle, circle_model(n, e1, e2, omega), Some(order))
}

fn double_rotation_model(n: usize, basis: Vec<Vec<f64>>, beta: f64, w1: f64, w2: f64) -> TangentModel {
    let (cb, sb) = (beta.cos(), beta.sin());
    TangentModel {
        n,
        basis,
        weights: vec![
            TrigSeries::cos(w1).scaled(cb),
            TrigSeries::sin(w1).scaled(cb),
            TrigSeries::cos(w2).scaled(sb),
            TrigSeries::sin(w2).scaled(sb),
        ],
    }
}

fn distinct_rates<R: Rng>(rng: &mut R) -> (f64, f64) {
    let w1 = rng.gen_range(1..=3) as f64;
    let mut w2 = rng.gen_range(1..=3) as f64;
    if w2 == w1 {
        w2 = w1 + 1.0;
    }
    (w1, w2)
}

/// Needs `n ≥ 2`. The osculating order is left to the analysis.
pub fn double_rotation<R: Rng>(rng: &mut R, n: usize) -> Result<GeneratedCurve> {
    assert!(n >= 2, "a double rotation needs four horizontal directions");
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for _ in 0..4 {
        let e = random_unit_orthogonal(rng, 2 * n, &basis);
        basis.push(e);
    }
    let beta: f64 = rng.gen_range(0.3..1.2);
    let (w1, w2) = distinct_rates(rng);
    unit_speed(rng, FamilyKind::DoubleRotation, double_rotation_model(n, basis, beta, w1, w2), None)
}

/// Needs `n ≥ 3`.
pub fn isotropic_helix<R: Rng>(rng: &mut R, n: usize) -> Result<GeneratedCurve> {
    assert!(n >= 3, "an isotropic 3-space needs n ≥ 3");
    let basis = random_isotropic_frame(rng, n, 3);
    let beta: f64 = rng.gen_range(0.3..1.2);
    let omega = random_omega(rng);
    let model = TangentModel {
        n,
        basis,
        weights: vec![
            TrigSeries::cos(omega).scaled(beta.cos()),
            TrigSeries::sin(omega).scaled(beta.cos()),
            TrigSeries::constant(beta.sin()),
        ],
    };
    unit_speed(rng, FamilyKind::IsotropicHelix, model, Some(3))
}

/// Needs `n ≥ 4`.
pub fn isotropic_double_rotation<R: Rng>(rng: &mut R, n: usize) -> Result<GeneratedCurve> {
    assert!(n >= 4, "an isotropic 4-space needs n ≥ 4");
    let basis = random_isotropic_frame(rng, n, 4);
    let beta: f64 = rng.gen_range(0.3..1.2);
    let (w1, w2) = distinct_rates(rng);
    let model = double_rotation_model(n, basis, beta, w1, w2);
    unit_speed(rng, FamilyKind::IsotropicDoubleRotation, model, Some(4))
}

/// Random trigonometric `x_i, y_i` with harmonics `1..=harmonics`, and
/// `z` chosen so the curve is Legendre. With `closed`, one coefficient is
/// adjusted so the symplectic area over a period vanishes and `z` is
/// periodic. Resamples until the speed stays above `0.2`.
pub fn profile<R: Rng>(rng: &mut R, n: usize, harmonics: usize, closed: bool) -> Result<GeneratedCurve> {
    loop {
        let series = |rng: &mut R| -> TrigSeries {
            let mut s = TrigSeries::constant(rng.gen_range(-1.0..1.0));
            for k in 1..=harmonics {
                let decay = 1.0 / k as f64;
                s.push_wave(k as f64, &[decay * rng.gen_range(-1.0..1.0)], &[decay * rng.gen_range(-1.0..1.0)]);
            }
            s
        };
        let mut x: Vec<TrigSeries> = (0..n).map(|_| series(rng)).collect();
        let y: Vec<TrigSeries> = (0..n).map(|_| series(rng)).collect();
        let rate = |x: &[TrigSeries]| {
            (0..n).fold(TrigSeries::default(), |acc, i| acc.add(&y[i].mul(&x[i].derivative())))
        };
        if closed {
            // The drift of z is linear in x_1's first-harmonic sine
            // amplitude; solve for the value that cancels it.
            let drift = |x: &[TrigSeries]| rate(x).poly.first().copied().unwrap_or(0.0);
            let set = |x: &mut [TrigSeries], v: f64| x[0].set_sin_amp(1.0, v);
            set(&mut x, 0.0);
            let d0 = drift(&x);
            set(&mut x, 1.0);
            let d1 = drift(&x);
            if (d1 - d0).abs() < 1e-3 {
                continue;
            }
            set(&mut x, -d0 / (d1 - d0));
        }
        let mut z = rate(&x).integral().add(&TrigSeries::constant(rng.gen_range(-1.0..1.0)));
        if closed && z.drift().abs() < DRIFT_EPS {
            z.poly.truncate(1);
        }
        let speed_ok = (0..256).all(|k| {
            let t = 2.0 * PI * k as f64 / 256.0;
            let s2: f64 = (0..n)
                .map(|i| x[i].derivative().eval(t).powi(2) + y[i].derivative().eval(t).powi(2))
                .sum();
            0.25 * s2 > 0.04
        });
        if !speed_ok {
            continue;
        }
        let coords: Vec<TrigSeries> = x.into_iter().chain(y).chain(std::iter::once(z)).collect();
        return GeneratedCurve::from_series(FamilyKind::Profile, n, coords, None, false);
    }
}
