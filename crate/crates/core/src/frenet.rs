//! Frenet apparatus of curves in the model, computed pointwise with jets.
//!
//! At each sample the chain `E_1 = T`, `V_i = ∇_T E_i + k_{i−1} E_{i−1}`,
//! `k_i = ‖V_i‖`, `E_{i+1} = V_i / k_i` is evaluated on Taylor expansions,
//! so the curvatures come with exact derivatives (`k_1''` and `k_2'` are
//! what the sesqui-harmonic residual needs). The osculating order is then
//! fixed globally: the first curvature that stays below the tolerance on
//! the whole grid ends the frame.
//!
//! Everything is taken with respect to arc length, so the parametrization
//! only has to be regular.

use serde::Serialize;

use crate::curve::{five_point_derivative, AlongJets, CurveSpec, Grid};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::model::{frame_connection, frame_phi};

pub const DEFAULT_ORDER_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrenetSample {
    pub t: f64,
    /// `‖γ'(t)‖`; 1 for synthetic data.
    pub speed: f64,
    /// Coordinates of the curve point; empty for synthetic data.
    pub point: Vec<f64>,
    /// `E_1..E_r` in frame components; empty for synthetic data.
    pub frames: Vec<Vec<f64>>,
    /// `[k_i, k_i', k_i'']` for `i = 1..r−1`, derivatives by arc length.
    /// Derivatives beyond the available jet degree are NaN.
    pub curvatures: Vec<[f64; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrenetData {
    pub n: usize,
    pub r: usize,
    pub samples: Vec<FrenetSample>,
}

impl FrenetData {
    /// Frame data without vectors, e.g. built from prescribed curvature
    /// functions. `curvatures[s]` must hold `r − 1` entries.
    pub fn synthetic(n: usize, r: usize, samples: Vec<(f64, Vec<[f64; 3]>)>) -> Result<Self> {
        if r == 0 || r > 2 * n + 1 {
            return Err(Error::Structural(format!("osculating order {r} outside 1..={}", 2 * n + 1)));
        }
        let samples = samples
            .into_iter()
            .map(|(t, curvatures)| {
                if curvatures.len() != r - 1 {
                    return Err(Error::DimensionMismatch {
                        expected: r - 1,
                        found: curvatures.len(),
                    });
                }
                Ok(FrenetSample {
                    t,
                    speed: 1.0,
                    point: Vec::new(),
                    frames: Vec::new(),
                    curvatures,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { n, r, samples })
    }

    /// `m = min{r, 4}`.
    pub fn m(&self) -> usize {
        self.r.min(4)
    }

    pub fn has_frames(&self) -> bool {
        self.samples.first().is_some_and(|s| !s.frames.is_empty())
    }

    /// `k_i` (1-based) at sample `s`, zero when `i ≥ r`.
    pub fn k(&self, s: usize, i: usize) -> f64 {
        self.k_deriv(s, i, 0)
    }

    /// `order`-th derivative of `k_i`; zero when `i ≥ r`.
    pub fn k_deriv(&self, s: usize, i: usize, order: usize) -> f64 {
        match self.samples[s].curvatures.get(i - 1) {
            Some(k) => k[order],
            None => 0.0,
        }
    }

    /// Max deviation of the Gram matrix of `E_1..E_r` from the identity.
    pub fn max_gram_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for s in &self.samples {
            for (a, ea) in s.frames.iter().enumerate() {
                for (b, eb) in s.frames.iter().enumerate() {
                    let want = if a == b { 1.0 } else { 0.0 };
                    worst = worst.max((dot(ea, eb) - want).abs());
                }
            }
        }
        worst
    }

    pub fn curvature_range(&self, i: usize) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in 0..self.samples.len() {
            let k = self.k(s, i);
            lo = lo.min(k);
            hi = hi.max(k);
        }
        (lo, hi)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dot_jet(a: &[Jet], b: &[Jet]) -> Jet {
    let d = a[0].degree().min(b[0].degree());
    let mut acc = Jet::zero(d);
    for (x, y) in a.iter().zip(b) {
        acc = acc + x.truncate(d) * y.truncate(d);
    }
    acc
}

/// Jet degree needed to resolve every curvature in dimension `2n+1` and
/// still carry `k_1''`.
pub fn frenet_degree(n: usize) -> usize {
    (2 * n + 1).max(4)
}

struct Chain {
    speed: f64,
    frames: Vec<Vec<f64>>,
    curvatures: Vec<[f64; 3]>,
}

fn chain_at(spec: &CurveSpec, t: f64, tol: f64) -> Result<(Chain, Vec<f64>)> {
    let n = spec.n();
    let degree = frenet_degree(n);
    let (velocity, coords) = spec.velocity_frame_jets(t, degree)?;
    let point: Vec<f64> = coords.iter().map(Jet::value).collect();
    let along = AlongJets::arclength(&velocity, t)?;
    let speed = along.inv_speed.as_ref().map_or(1.0, |j| 1.0 / j.value());
    let mut frames: Vec<Vec<Jet>> = vec![along.tangent.clone()];
    let mut ks: Vec<Jet> = Vec::new();
    for i in 1..=2 * n {
        let e_i = &frames[i - 1];
        let mut v = along.derive(e_i);
        let d = v[0].degree();
        if i >= 2 {
            let k_prev = ks[i - 2].truncate(d);
            for (vc, ec) in v.iter_mut().zip(&frames[i - 2]) {
                *vc = &*vc + &(&k_prev * &ec.truncate(d));
            }
        }
        // Re-orthogonalize; the projections vanish identically in exact
        // arithmetic, so this only removes rounding drift.
        for e in &frames {
            let proj = dot_jet(&v, e);
            for (vc, ec) in v.iter_mut().zip(e) {
                *vc = &*vc - &(&proj * &ec.truncate(d));
            }
        }
        let norm2 = dot_jet(&v, &v);
        let k = if norm2.value() > 0.0 {
            norm2.sqrt().expect("positive value")
        } else {
            Jet::zero(d)
        };
        let small = k.value() < tol;
        if !small {
            let next: Vec<Jet> = v
                .iter()
                .map(|c| c.checked_div(&k).expect("nonzero curvature"))
                .collect();
            frames.push(next);
        }
        ks.push(k);
        if small {
            break;
        }
    }
    let chain = Chain {
        speed,
        frames: frames
            .iter()
            .map(|f| f.iter().map(Jet::value).collect())
            .collect(),
        curvatures: ks
            .iter()
            .map(|k| {
                let mut out = [k.value(), f64::NAN, f64::NAN];
                let mut cur = k.clone();
                for slot in out.iter_mut().skip(1) {
                    if cur.degree() == 0 {
                        break;
                    }
                    cur = along.derive_scalar(&cur);
                    *slot = cur.value();
                }
                out
            })
            .collect(),
    };
    Ok((chain, point))
}

/// Frenet frames and curvatures on `grid`, with the osculating order fixed
/// by `tol`.
pub fn frenet_apparatus(spec: &CurveSpec, grid: &Grid, tol: f64) -> Result<FrenetData> {
    grid.validate()?;
    if !(tol > 0.0) {
        return Err(Error::Config("osculating-order tolerance must be positive".into()));
    }
    let n = spec.n();
    let ts = grid.points();
    let mut chains = Vec::with_capacity(ts.len());
    for &t in &ts {
        chains.push(chain_at(spec, t, tol)?);
    }
    let below = |c: &Chain, i: usize| c.curvatures.get(i).is_none_or(|k| k[0] < tol);
    let mut r = 2 * n + 1;
    for i in 0..2 * n {
        if chains.iter().all(|(c, _)| below(c, i)) {
            r = i + 1;
            break;
        }
    }
    for j in 0..r - 1 {
        if let Some(((_, _), t)) = chains
            .iter()
            .zip(&ts)
            .find(|((c, _), _)| below(c, j))
        {
            return Err(Error::NonConstantOrder { index: j + 1, t: *t });
        }
    }
    let samples = chains
        .into_iter()
        .zip(ts)
        .map(|((mut c, point), t)| {
            c.frames.truncate(r);
            c.curvatures.truncate(r - 1);
            FrenetSample {
                t,
                speed: c.speed,
                point,
                frames: c.frames,
                curvatures: c.curvatures,
            }
        })
        .collect();
    Ok(FrenetData { n, r, samples })
}

/// Max over the grid and over `i = 1..r` of
/// `‖∇_T E_i − (−k_{i−1}E_{i−1} + k_i E_{i+1})‖`, with `∇_T E_i`
/// recomputed from the sampled frames by five-point differences.
/// Boundary samples of open grids are skipped.
pub fn frenet_equation_residual(frenet: &FrenetData, grid: &Grid) -> Result<f64> {
    if !frenet.has_frames() {
        return Err(Error::Structural("frame vectors are required".into()));
    }
    let count = frenet.samples.len();
    let mut worst: f64 = 0.0;
    for i in 0..frenet.r {
        let values: Vec<Vec<f64>> = frenet.samples.iter().map(|s| s.frames[i].clone()).collect();
        for k in 0..count {
            if !grid.closed && (k < 2 || k + 2 >= count) {
                continue;
            }
            let s = &frenet.samples[k];
            let rate: Vec<f64> = five_point_derivative(grid, &values, k)?
                .iter()
                .map(|v| v / s.speed)
                .collect();
            let conn = frame_connection(&s.frames[0], &s.frames[i]);
            let mut expected = vec![0.0; s.frames[0].len()];
            if i >= 1 {
                let kp = s.curvatures[i - 1][0];
                for (e, v) in expected.iter_mut().zip(&s.frames[i - 1]) {
                    *e -= kp * v;
                }
            }
            if i + 1 < frenet.r {
                let kn = s.curvatures[i][0];
                for (e, v) in expected.iter_mut().zip(&s.frames[i + 1]) {
                    *e += kn * v;
                }
            }
            let res: f64 = rate
                .iter()
                .zip(&conn)
                .zip(&expected)
                .map(|((a, b), c)| (a + b - c).powi(2))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(res);
        }
    }
    Ok(worst)
}

/// Pairings of `φT` and `ξ` with the Frenet frame, sampled on the grid.
/// Entries for frame vectors beyond the osculating order are zero.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrameScalars {
    pub t: Vec<f64>,
    /// `f = g(φT, E_2)`
    pub f: Vec<f64>,
    pub phi_e3: Vec<f64>,
    pub phi_e4: Vec<f64>,
    pub eta_e2: Vec<f64>,
    pub eta_e3: Vec<f64>,
    pub eta_e4: Vec<f64>,
    /// `‖φT − Σ_{i=2}^{m} g(φT,E_i)E_i‖` with `m = min{r, 4}`.
    pub phi_off_span: Vec<f64>,
    /// `‖ξ − Σ_{i=2}^{m} η(E_i)E_i‖`.
    pub xi_off_span: Vec<f64>,
}

impl FrameScalars {
    /// Scalars prescribed directly. The off-span parts follow from `φT`
    /// and `ξ` being unit vectors orthogonal to `T` on a Legendre curve.
    #[allow(clippy::too_many_arguments)]
    pub fn synthetic(
        m: usize,
        t: Vec<f64>,
        f: Vec<f64>,
        phi_e3: Vec<f64>,
        phi_e4: Vec<f64>,
        eta_e2: Vec<f64>,
        eta_e3: Vec<f64>,
        eta_e4: Vec<f64>,
    ) -> Result<Self> {
        let len = t.len();
        for v in [&f, &phi_e3, &phi_e4, &eta_e2, &eta_e3, &eta_e4] {
            if v.len() != len {
                return Err(Error::DimensionMismatch {
                    expected: len,
                    found: v.len(),
                });
            }
        }
        let off = |a: &[f64], b: &[f64], c: &[f64]| -> Vec<f64> {
            (0..len)
                .map(|s| {
                    let parts = [a[s], b[s], c[s]];
                    let inside: f64 = parts.iter().take(m.saturating_sub(1)).map(|v| v * v).sum();
                    (1.0 - inside).max(0.0).sqrt()
                })
                .collect()
        };
        let phi_off_span = off(&f, &phi_e3, &phi_e4);
        let xi_off_span = off(&eta_e2, &eta_e3, &eta_e4);
        Ok(Self {
            t,
            f,
            phi_e3,
            phi_e4,
            eta_e2,
            eta_e3,
            eta_e4,
            phi_off_span,
            xi_off_span,
        })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn range(values: &[f64]) -> (f64, f64) {
        values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(*v), hi.max(*v))
        })
    }
}

pub fn frame_scalars(frenet: &FrenetData) -> Result<FrameScalars> {
    if !frenet.has_frames() {
        return Err(Error::Structural("frame vectors are required".into()));
    }
    let m = frenet.m();
    let len = frenet.samples.len();
    let mut out = FrameScalars {
        t: Vec::with_capacity(len),
        f: Vec::with_capacity(len),
        phi_e3: Vec::with_capacity(len),
        phi_e4: Vec::with_capacity(len),
        eta_e2: Vec::with_capacity(len),
        eta_e3: Vec::with_capacity(len),
        eta_e4: Vec::with_capacity(len),
        phi_off_span: Vec::with_capacity(len),
        xi_off_span: Vec::with_capacity(len),
    };
    for s in &frenet.samples {
        let phi_t = frame_phi(&s.frames[0]);
        let last = phi_t.len() - 1;
        let pair = |i: usize| s.frames.get(i - 1).map_or(0.0, |e| dot(&phi_t, e));
        let eta = |i: usize| s.frames.get(i - 1).map_or(0.0, |e| e[last]);
        out.t.push(s.t);
        out.f.push(pair(2));
        out.phi_e3.push(pair(3));
        out.phi_e4.push(pair(4));
        out.eta_e2.push(eta(2));
        out.eta_e3.push(eta(3));
        out.eta_e4.push(eta(4));
        let mut phi_rest = phi_t.clone();
        let mut xi_rest = vec![0.0; phi_t.len()];
        xi_rest[last] = 1.0;
        for e in s.frames.iter().take(m).skip(1) {
            let a = dot(&phi_t, e);
            let b = e[last];
            for ((p, x), ec) in phi_rest.iter_mut().zip(xi_rest.iter_mut()).zip(e) {
                *p -= a * ec;
                *x -= b * ec;
            }
        }
        out.phi_off_span.push(dot(&phi_rest, &phi_rest).sqrt());
        out.xi_off_span.push(dot(&xi_rest, &xi_rest).sqrt());
    }
    Ok(out)
}
