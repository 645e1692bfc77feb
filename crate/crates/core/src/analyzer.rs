//! Tension, bitension and the interpolating sesqui-harmonic residual
//! `τ_δ = δ₂τ₂ − δ₁τ`, computed two ways:
//!
//! * directly, by covariant differentiation of jets along the curve and the
//!   space-form curvature operator;
//! * in closed form from the Frenet data and the frame scalars.
//!
//! On top of these sit the theorem check, the case classification, the
//! δ-ratio solver and the case-specific diagnostics.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::curve::{AlongJets, CurveSpec, Grid};
use crate::error::{Error, Result};
use crate::frenet::{dot, FrameScalars, FrenetData};
use crate::jet::Jet;
use crate::model::{curvature_frame, frame_phi};

/// Default tolerance for constancy tests and equation verdicts.
pub const DEFAULT_TOL: f64 = 1e-6;

/// Jet degree of the coordinates for the direct route; `τ₂` needs the
/// fourth derivative.
const DIRECT_DEGREE: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DeltaPair {
    pub delta1: f64,
    pub delta2: f64,
}

impl DeltaPair {
    pub fn new(delta1: f64, delta2: f64) -> Self {
        Self { delta1, delta2 }
    }

    /// `δ₁/δ₂`, undefined when `δ₂ = 0`.
    pub fn ratio(&self) -> Option<f64> {
        (self.delta2 != 0.0).then(|| self.delta1 / self.delta2)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(self.delta1 * s, self.delta2 * s)
    }
}

/// Sign of the `(c+3)/4` term in the `E₂` coefficient. `Corrected` is the
/// one that reproduces the case propositions; `AsPrinted` is the variant
/// with the opposite sign, kept for comparison.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SignConvention {
    #[default]
    Corrected,
    AsPrinted,
}

impl SignConvention {
    fn factor(self) -> f64 {
        match self {
            Self::Corrected => 1.0,
            Self::AsPrinted => -1.0,
        }
    }
}

/// Which parameter the derivatives are taken against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Parametrization {
    /// Geometric fields: unit tangent and arc-length derivatives.
    #[default]
    ArcLength,
    /// Fields of the map `t ↦ γ(t)`: `τ = ∇_{∂t}γ'`. This is what the
    /// energy's first variation sees.
    Parameter,
}

/// Direct-route fields at one parameter value, in frame components.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirectFields {
    pub t: f64,
    pub tangent: Vec<f64>,
    pub tension: Vec<f64>,
    /// `∇∇∇T − R(T, ∇T)T`
    pub bitension: Vec<f64>,
}

impl DirectFields {
    /// `δ₂τ₂ − δ₁τ`
    pub fn residual(&self, delta: DeltaPair) -> Vec<f64> {
        self.bitension
            .iter()
            .zip(&self.tension)
            .map(|(b, t)| delta.delta2 * b - delta.delta1 * t)
            .collect()
    }
}

fn along(spec: &CurveSpec, t: f64, mode: Parametrization) -> Result<AlongJets> {
    let (velocity, _) = spec.velocity_frame_jets(t, DIRECT_DEGREE)?;
    match mode {
        Parametrization::ArcLength => AlongJets::arclength(&velocity, t),
        Parametrization::Parameter => Ok(AlongJets::parameter(velocity)),
    }
}

pub fn direct_fields(spec: &CurveSpec, t: f64, c: f64, mode: Parametrization) -> Result<DirectFields> {
    let along = along(spec, t, mode)?;
    let tension = along.derive(&along.tangent);
    let d2 = along.derive(&tension);
    let d3 = along.derive(&d2);
    let value = |v: &[Jet]| -> Vec<f64> { v.iter().map(Jet::value).collect() };
    let (tangent, tau) = (value(&along.tangent), value(&tension));
    let curv = curvature_frame(c, &tangent, &tau, &tangent);
    let bitension = d3.iter().zip(&curv).map(|(a, r)| a.value() - r).collect();
    Ok(DirectFields {
        t,
        tangent,
        tension: tau,
        bitension,
    })
}

/// `∇_T T` at every grid point (arc-length parametrization).
pub fn tension(spec: &CurveSpec, grid: &Grid) -> Result<Vec<Vec<f64>>> {
    grid.points()
        .into_iter()
        .map(|t| direct_fields(spec, t, -3.0, Parametrization::ArcLength).map(|f| f.tension))
        .collect()
}

/// `τ₂` at every grid point. The direct route uses the structure tensors
/// of the concrete model, so it is geometric only for `c = −3`; other `c`
/// plug a different curvature operator into the same calculus.
pub fn bitension(spec: &CurveSpec, grid: &Grid, c: f64) -> Result<Vec<Vec<f64>>> {
    grid.points()
        .into_iter()
        .map(|t| direct_fields(spec, t, c, Parametrization::ArcLength).map(|f| f.bitension))
        .collect()
}

/// Expansion `Σ_{i≤4} e_i E_i + phi_t·φT + xi·ξ` of the closed form.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Expansion {
    pub e: [f64; 4],
    pub phi_t: f64,
    pub xi: f64,
}

/// One sample of a residual report. Projections are `g(τ_δ, ·)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualSample {
    pub t: f64,
    /// `g(τ_δ, E_i)`, `i = 1..4`; zero beyond the osculating order.
    pub projections: [f64; 4],
    pub phi_t: f64,
    pub xi: f64,
    /// Part of `τ_δ` outside `span{E_1..E_m, φT, ξ}`.
    pub leakage: f64,
    pub norm: f64,
    /// Closed-form coefficients; absent on the direct route.
    pub expansion: Option<Expansion>,
    /// Frame components, when frame vectors are available.
    pub vector: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Direct,
    ClosedForm,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub route: Route,
    pub c: f64,
    pub delta: DeltaPair,
    pub m: usize,
    pub samples: Vec<ResidualSample>,
    pub max_norm: f64,
    pub max_leakage: f64,
    /// Max over the grid of `|g(τ_δ, E_i)|` for `i = 1..m`.
    pub equations: Vec<f64>,
}

impl ResidualReport {
    fn assemble(route: Route, c: f64, delta: DeltaPair, m: usize, samples: Vec<ResidualSample>) -> Self {
        let max_norm = samples.iter().map(|s| s.norm).fold(0.0, f64::max);
        let max_leakage = samples.iter().map(|s| s.leakage).fold(0.0, f64::max);
        let equations = (0..m)
            .map(|i| samples.iter().map(|s| s.projections[i].abs()).fold(0.0, f64::max))
            .collect();
        Self {
            route,
            c,
            delta,
            m,
            samples,
            max_norm,
            max_leakage,
            equations,
        }
    }

    /// Max pointwise distance between the residual vectors of two reports.
    pub fn max_vector_deviation(&self, other: &Self) -> Result<f64> {
        if self.samples.len() != other.samples.len() {
            return Err(Error::DimensionMismatch {
                expected: self.samples.len(),
                found: other.samples.len(),
            });
        }
        let mut worst: f64 = 0.0;
        for (a, b) in self.samples.iter().zip(&other.samples) {
            let (Some(u), Some(v)) = (&a.vector, &b.vector) else {
                return Err(Error::Structural("residual vectors are required".into()));
            };
            let d: f64 = u.iter().zip(v).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            worst = worst.max(d);
        }
        Ok(worst)
    }
}

/// Distance from `v` to the span of `basis` (not necessarily independent).
fn off_span(v: &[f64], basis: &[&[f64]]) -> f64 {
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    for b in basis {
        let mut w = b.to_vec();
        for o in &ortho {
            let p = dot(&w, o);
            for (wc, oc) in w.iter_mut().zip(o) {
                *wc -= p * oc;
            }
        }
        let norm = dot(&w, &w).sqrt();
        if norm > 1e-9 {
            ortho.push(w.into_iter().map(|c| c / norm).collect());
        }
    }
    let mut rest = v.to_vec();
    for o in &ortho {
        let p = dot(&rest, o);
        for (rc, oc) in rest.iter_mut().zip(o) {
            *rc -= p * oc;
        }
    }
    dot(&rest, &rest).sqrt()
}

fn xi_vector(dim: usize) -> Vec<f64> {
    let mut xi = vec![0.0; dim];
    xi[dim - 1] = 1.0;
    xi
}

/// Projections, leakage and norm of a concrete residual vector.
fn decompose(frenet: &FrenetData, s: usize, v: Vec<f64>, expansion: Option<Expansion>) -> ResidualSample {
    let sample = &frenet.samples[s];
    let frames = &sample.frames;
    let dim = v.len();
    let mut projections = [0.0; 4];
    for (p, e) in projections.iter_mut().zip(frames.iter()) {
        *p = dot(&v, e);
    }
    let phi_t = frame_phi(&frames[0]);
    let xi = xi_vector(dim);
    let mut basis: Vec<&[f64]> = frames.iter().take(frenet.m()).map(Vec::as_slice).collect();
    basis.push(&phi_t);
    basis.push(&xi);
    ResidualSample {
        t: sample.t,
        projections,
        phi_t: dot(&v, &phi_t),
        xi: v[dim - 1],
        leakage: off_span(&v, &basis),
        norm: dot(&v, &v).sqrt(),
        expansion,
        vector: Some(v),
    }
}

/// `δ₂τ₂ − δ₁τ` by direct covariant calculus at the Frenet samples,
/// decomposed along the Frenet frame.
pub fn residual_direct(spec: &CurveSpec, frenet: &FrenetData, c: f64, delta: DeltaPair) -> Result<ResidualReport> {
    if !frenet.has_frames() {
        return Err(Error::Structural("frame vectors are required".into()));
    }
    let samples = (0..frenet.samples.len())
        .map(|s| {
            let f = direct_fields(spec, frenet.samples[s].t, c, Parametrization::ArcLength)?;
            Ok(decompose(frenet, s, f.residual(delta), None))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualReport::assemble(Route::Direct, c, delta, frenet.m(), samples))
}

/// Closed-form coefficients at sample `s`.
pub fn closed_form_expansion(
    frenet: &FrenetData,
    scalars: &FrameScalars,
    s: usize,
    c: f64,
    delta: DeltaPair,
    sign: SignConvention,
) -> Result<Expansion> {
    let k1 = frenet.k(s, 1);
    let (k1p, k1pp) = (frenet.k_deriv(s, 1, 1), frenet.k_deriv(s, 1, 2));
    let (k2, k2p) = (frenet.k(s, 2), frenet.k_deriv(s, 2, 1));
    let k3 = frenet.k(s, 3);
    for (name, v) in [("k1", k1), ("k1'", k1p), ("k1''", k1pp), ("k2", k2), ("k2'", k2p), ("k3", k3)] {
        if !v.is_finite() {
            return Err(Error::Structural(format!("curvature datum {name} unavailable at sample {s}")));
        }
    }
    let (d1, d2) = (delta.delta1, delta.delta2);
    let a = (c + 3.0) / 4.0;
    let b = (c - 1.0) / 4.0;
    Ok(Expansion {
        e: [
            -3.0 * d2 * k1 * k1p,
            d2 * (k1pp - k1.powi(3) - k1 * k2 * k2 + sign.factor() * a * k1) - d1 * k1,
            d2 * (2.0 * k1p * k2 + k1 * k2p),
            d2 * k1 * k2 * k3,
        ],
        phi_t: 3.0 * b * d2 * k1 * scalars.f[s],
        xi: -b * d2 * k1 * scalars.eta_e2[s],
    })
}

/// Projections and norm of an expansion from the frame scalars alone.
fn expansion_sample(frenet: &FrenetData, scalars: &FrameScalars, s: usize, ex: Expansion) -> ResidualSample {
    let g_phi = [0.0, scalars.f[s], scalars.phi_e3[s], scalars.phi_e4[s]];
    let g_eta = [0.0, scalars.eta_e2[s], scalars.eta_e3[s], scalars.eta_e4[s]];
    let mut projections = [0.0; 4];
    for i in 0..4 {
        projections[i] = ex.e[i] + ex.phi_t * g_phi[i] + ex.xi * g_eta[i];
    }
    let e_phi: f64 = (0..4).map(|i| ex.e[i] * g_phi[i]).sum();
    let e_eta: f64 = (0..4).map(|i| ex.e[i] * g_eta[i]).sum();
    let e_sq: f64 = ex.e.iter().map(|v| v * v).sum();
    let norm2 = e_sq + ex.phi_t.powi(2) + ex.xi.powi(2) + 2.0 * ex.phi_t * e_phi + 2.0 * ex.xi * e_eta;
    ResidualSample {
        t: frenet.samples[s].t,
        projections,
        phi_t: e_phi + ex.phi_t,
        xi: e_eta + ex.xi,
        leakage: 0.0,
        norm: norm2.max(0.0).sqrt(),
        expansion: Some(ex),
        vector: None,
    }
}

fn check_aligned(frenet: &FrenetData, scalars: &FrameScalars) -> Result<()> {
    if scalars.len() != frenet.samples.len() {
        return Err(Error::DimensionMismatch {
            expected: frenet.samples.len(),
            found: scalars.len(),
        });
    }
    Ok(())
}

/// The closed-form residual. With frame vectors present the expansion is
/// also reconstructed as a vector and decomposed like the direct route.
pub fn residual_closed_form(
    frenet: &FrenetData,
    scalars: &FrameScalars,
    c: f64,
    delta: DeltaPair,
    sign: SignConvention,
) -> Result<ResidualReport> {
    check_aligned(frenet, scalars)?;
    let with_frames = frenet.has_frames();
    let samples = (0..frenet.samples.len())
        .map(|s| {
            let ex = closed_form_expansion(frenet, scalars, s, c, delta, sign)?;
            if !with_frames {
                return Ok(expansion_sample(frenet, scalars, s, ex));
            }
            let frames = &frenet.samples[s].frames;
            let phi_t = frame_phi(&frames[0]);
            let mut v: Vec<f64> = phi_t.iter().map(|p| ex.phi_t * p).collect();
            let last = v.len() - 1;
            v[last] += ex.xi;
            for (coef, e) in ex.e.iter().zip(frames) {
                for (vc, ec) in v.iter_mut().zip(e) {
                    *vc += coef * ec;
                }
            }
            Ok(decompose(frenet, s, v, Some(ex)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualReport::assemble(Route::ClosedForm, c, delta, frenet.m(), samples))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquationCheck {
    pub index: usize,
    pub max_residual: f64,
    pub pass: bool,
}

/// Condition (1) of the theorem: `c = 1`, or `φT ⊥ E₂`, or `φT` inside
/// `span{E₂..E_m}`. The last is tested through the leakage of the residual's
/// `φT` and `ξ` parts outside `span{E₁..E_m}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionOne {
    pub c_is_one: bool,
    pub max_abs_f: f64,
    pub max_phi_off_span: f64,
    /// Bound on `‖off-span part of (b·φT + c_ξ·ξ)‖` over the grid.
    pub leakage: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoremCheck {
    pub m: usize,
    pub equations: Vec<EquationCheck>,
    pub condition1: ConditionOne,
    pub pass: bool,
}

pub fn theorem31_check(
    frenet: &FrenetData,
    scalars: &FrameScalars,
    c: f64,
    delta: DeltaPair,
    tol: f64,
    sign: SignConvention,
) -> Result<TheoremCheck> {
    check_aligned(frenet, scalars)?;
    let m = frenet.m();
    let mut eq_max = vec![0.0f64; m];
    let mut leakage: f64 = 0.0;
    for s in 0..frenet.samples.len() {
        let ex = closed_form_expansion(frenet, scalars, s, c, delta, sign)?;
        let sample = expansion_sample(frenet, scalars, s, ex);
        for (i, slot) in eq_max.iter_mut().enumerate() {
            *slot = slot.max(sample.projections[i].abs());
        }
        let leak = ex.phi_t.abs() * scalars.phi_off_span[s] + ex.xi.abs() * scalars.xi_off_span[s];
        leakage = leakage.max(leak);
    }
    let equations: Vec<EquationCheck> = eq_max
        .into_iter()
        .enumerate()
        .map(|(i, v)| EquationCheck {
            index: i + 1,
            max_residual: v,
            pass: v <= tol,
        })
        .collect();
    let max_abs_f = scalars.f.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let max_phi_off_span = scalars.phi_off_span.iter().fold(0.0f64, |a, v| a.max(*v));
    let c_is_one = (c - 1.0).abs() <= tol;
    let condition1 = ConditionOne {
        c_is_one,
        max_abs_f,
        max_phi_off_span,
        leakage,
        pass: c_is_one || max_abs_f <= tol || leakage <= tol,
    };
    let pass = condition1.pass && equations.iter().all(|e| e.pass);
    Ok(TheoremCheck {
        m,
        equations,
        condition1,
        pass,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Geodesic,
    Circle,
    Helix,
    General,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Case {
    I,
    II,
    III,
    IV,
}

impl Case {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "I" | "1" => Some(Self::I),
            "II" | "2" => Some(Self::II),
            "III" | "3" => Some(Self::III),
            "IV" | "4" => Some(Self::IV),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveClass {
    pub shape: Shape,
    pub case: Option<Case>,
    /// Case IV: `f = cos α₀`, `g(E₄, φT) = sin α₀`, `α₀ ∈ (0, 2π)`.
    pub alpha0: Option<f64>,
    /// Case IV: mean of `k₂² + 3(c−1)/4·f²`.
    pub w0: Option<f64>,
    pub diagnostics: Vec<String>,
}

fn spread(values: impl Iterator<Item = f64>) -> (f64, f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut sum = 0.0;
    let mut count = 0usize;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
        sum += v;
        count += 1;
    }
    let mean = if count == 0 { 0.0 } else { sum / count as f64 };
    (lo, hi, mean)
}

fn is_constant(values: impl Iterator<Item = f64>, tol: f64) -> bool {
    let (lo, hi, _) = spread(values);
    !(hi - lo > tol)
}

fn curvature_constant(frenet: &FrenetData, i: usize, tol: f64) -> bool {
    is_constant((0..frenet.samples.len()).map(|s| frenet.k(s, i)), tol)
}

pub fn classify(frenet: &FrenetData, scalars: &FrameScalars, c: f64, tol: f64) -> Result<CurveClass> {
    check_aligned(frenet, scalars)?;
    let mut diagnostics = Vec::new();
    let mut shape = match frenet.r {
        1 => Shape::Geodesic,
        2 if curvature_constant(frenet, 1, tol) => Shape::Circle,
        3 if curvature_constant(frenet, 1, tol) && curvature_constant(frenet, 2, tol) => Shape::Helix,
        _ => Shape::General,
    };
    let c_is_one = (c - 1.0).abs() <= tol;
    if shape == Shape::Geodesic {
        return Ok(CurveClass {
            shape,
            case: c_is_one.then_some(Case::I),
            alpha0: None,
            w0: None,
            diagnostics,
        });
    }
    let abs_f = spread(scalars.f.iter().map(|v| v.abs()));
    let (mut alpha0, mut w0) = (None, None);
    let case = if c_is_one {
        Case::I
    } else if abs_f.1 <= tol {
        Case::II
    } else if abs_f.0 >= 1.0 - tol {
        Case::III
    } else {
        let (f_lo, f_hi, f_mean) = spread(scalars.f.iter().copied());
        if f_hi - f_lo > tol {
            diagnostics.push(format!(
                "f varies over [{f_lo:.6e}, {f_hi:.6e}]; the case IV system then needs the full ODE residuals"
            ));
            shape = Shape::General;
        } else {
            let (_, _, g4_mean) = spread(scalars.phi_e4.iter().copied());
            let (_, e3_max, _) = spread(scalars.phi_e3.iter().map(|v| v.abs()));
            let mut a = g4_mean.atan2(f_mean);
            if a <= 0.0 {
                a += 2.0 * std::f64::consts::PI;
            }
            alpha0 = Some(a);
            let unit_defect = (f_mean * f_mean + g4_mean * g4_mean - 1.0).abs();
            if unit_defect > tol || e3_max > tol {
                diagnostics.push(format!(
                    "φT is not cos α₀ E₂ + sin α₀ E₄: |f² + g(E₄,φT)² − 1| = {unit_defect:.3e}, max |g(E₃,φT)| = {e3_max:.3e}"
                ));
            }
            let w = (0..frenet.samples.len()).map(|s| frenet.k(s, 2).powi(2) + 0.75 * (c - 1.0) * scalars.f[s].powi(2));
            w0 = Some(spread(w).2);
        }
        Case::IV
    };
    Ok(CurveClass {
        shape,
        case: Some(case),
        alpha0,
        w0,
        diagnostics,
    })
}

/// The case formulas as pure functions of the constants, shared by the
/// solver and the parameter sweep. `δ₂ = 1`, so `ρ = δ₁`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseVerdict {
    pub case: Case,
    pub rho: f64,
    /// The case propositions assume `δ₁/δ₂ ≠ 0`.
    pub excluded_zero_ratio: bool,
    /// The case's sign constraints on `ρ` (and `α₀` in case IV).
    pub sign_constraints: bool,
    /// `(c, ρ)` lies in the range where only geodesics qualify.
    pub geodesic_only: bool,
    pub feasible: bool,
}

pub fn case_verdict(case: Case, c: f64, k1: f64, k2: f64, alpha0: Option<f64>) -> CaseVerdict {
    let sum = k1 * k1 + k2 * k2;
    let (rho, sign_constraints, geodesic_only) = match case {
        Case::I => {
            let rho = 1.0 - sum;
            (rho, 1.0 - rho > 0.0, false)
        }
        Case::II => {
            let rho = (c + 3.0) / 4.0 - sum;
            (rho, true, c <= -3.0 && rho >= 0.0)
        }
        Case::III => {
            let rho = c - 1.0 - k1 * k1;
            (rho, true, c < 1.0 && rho >= 0.0)
        }
        Case::IV => {
            let a = alpha0.unwrap_or(f64::NAN);
            let cos2 = a.cos().powi(2);
            let rho = (c + 3.0) / 4.0 + 0.75 * (c - 1.0) * cos2 - sum;
            let first = (c + 3.0 + 3.0 * (c - 1.0) * cos2) - 4.0 * rho > 0.0;
            let second = 3.0 * (c - 1.0) * (2.0 * a).sin() < 0.0;
            (rho, first && second, c <= -3.0 && rho >= 0.0)
        }
    };
    let excluded_zero_ratio = rho == 0.0 || rho.abs() < 1e-12;
    CaseVerdict {
        case,
        rho,
        excluded_zero_ratio,
        sign_constraints,
        geodesic_only,
        feasible: sign_constraints && !geodesic_only && !excluded_zero_ratio && rho.is_finite(),
    }
}

/// Pointwise ratio `ρ(t) = ⟨τ₂, τ⟩/⟨τ, τ⟩` and the parallelism defect
/// `‖τ₂ − ρτ‖`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenericRatio {
    pub rho_min: f64,
    pub rho_max: f64,
    pub rho_mean: f64,
    pub max_parallel_defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaSolution {
    /// Every δ works: `τ ≡ 0`.
    pub any_delta: bool,
    pub case: Option<Case>,
    pub rho: Option<f64>,
    pub verdict: Option<CaseVerdict>,
    pub generic: Option<GenericRatio>,
    /// Side conditions of the case (constancy, `k₂k₃`, ...).
    pub checks: Vec<Check>,
    pub feasible: bool,
    pub notes: Vec<String>,
}

pub fn generic_ratio(frenet: &FrenetData, scalars: &FrameScalars, c: f64, sign: SignConvention) -> Result<GenericRatio> {
    check_aligned(frenet, scalars)?;
    let mut rhos = Vec::with_capacity(frenet.samples.len());
    let mut defect: f64 = 0.0;
    for s in 0..frenet.samples.len() {
        let k1 = frenet.k(s, 1);
        let bi = closed_form_expansion(frenet, scalars, s, c, DeltaPair::new(0.0, 1.0), sign)?;
        let proj = expansion_sample(frenet, scalars, s, bi).projections[1];
        let rho = proj / k1;
        let mut diff = bi;
        diff.e[1] -= rho * k1;
        defect = defect.max(expansion_sample(frenet, scalars, s, diff).norm);
        rhos.push(rho);
    }
    let (lo, hi, mean) = spread(rhos.into_iter());
    Ok(GenericRatio {
        rho_min: lo,
        rho_max: hi,
        rho_mean: mean,
        max_parallel_defect: defect,
    })
}

pub fn solve_delta(
    frenet: &FrenetData,
    scalars: &FrameScalars,
    c: f64,
    tol: f64,
    sign: SignConvention,
) -> Result<DeltaSolution> {
    let class = classify(frenet, scalars, c, tol)?;
    if class.shape == Shape::Geodesic {
        return Ok(DeltaSolution {
            any_delta: true,
            case: class.case,
            rho: None,
            verdict: None,
            generic: None,
            checks: Vec::new(),
            feasible: true,
            notes: vec!["τ ≡ 0: any δ admissible".into()],
        });
    }
    let generic = generic_ratio(frenet, scalars, c, sign)?;
    let count = frenet.samples.len();
    let mean_k = |i: usize| spread((0..count).map(|s| frenet.k(s, i))).2;
    let (k1, k2) = (mean_k(1), mean_k(2));
    let mut checks = vec![Check {
        name: "k1 constant".into(),
        value: spread((0..count).map(|s| frenet.k(s, 1))).1 - spread((0..count).map(|s| frenet.k(s, 1))).0,
        pass: curvature_constant(frenet, 1, tol),
    }];
    checks.push(Check {
        name: "k2 constant".into(),
        value: spread((0..count).map(|s| frenet.k(s, 2))).1 - spread((0..count).map(|s| frenet.k(s, 2))).0,
        pass: curvature_constant(frenet, 2, tol),
    });
    let mut notes = class.diagnostics.clone();
    let case = class.case.expect("non-geodesics always carry a case");
    if case != Case::IV {
        let k2k3 = (0..count).map(|s| (frenet.k(s, 2) * frenet.k(s, 3)).abs()).fold(0.0, f64::max);
        checks.push(Check {
            name: "k2 k3 = 0".into(),
            value: k2k3,
            pass: k2k3 <= tol,
        });
    }
    let verdict = match (case, class.alpha0) {
        (Case::IV, None) => None,
        _ => Some(case_verdict(case, c, k1, k2, class.alpha0)),
    };
    if case == Case::III {
        checks.push(Check {
            name: "k2 = 1".into(),
            value: (k2 - 1.0).abs(),
            pass: (k2 - 1.0).abs() <= tol,
        });
        notes.push(format!(
            "sum-rule ratio c − k1² − k2² = {:.16e}",
            c - k1 * k1 - k2 * k2
        ));
    }
    if let (Case::IV, Some(a)) = (case, class.alpha0) {
        let target = -3.0 * (c - 1.0) / 8.0 * (2.0 * a).sin();
        let worst = (0..count)
            .map(|s| (frenet.k(s, 2) * frenet.k(s, 3) - target).abs())
            .fold(0.0, f64::max);
        checks.push(Check {
            name: "k2 k3 = -3(c-1)/8 sin 2a0".into(),
            value: worst,
            pass: worst <= tol,
        });
        checks.push(Check {
            name: "k3 constant".into(),
            value: spread((0..count).map(|s| frenet.k(s, 3))).1 - spread((0..count).map(|s| frenet.k(s, 3))).0,
            pass: curvature_constant(frenet, 3, tol),
        });
    }
    let rho = verdict.as_ref().map(|v| v.rho);
    if let Some(r) = rho {
        let agree = (generic.rho_mean - r).abs();
        checks.push(Check {
            name: "case ratio matches pointwise ratio".into(),
            value: agree,
            pass: agree <= tol.max(1e-6),
        });
    }
    checks.push(Check {
        name: "tau2 parallel to tau".into(),
        value: generic.max_parallel_defect,
        pass: generic.max_parallel_defect <= tol,
    });
    let feasible = verdict.as_ref().is_some_and(|v| v.feasible) && checks.iter().all(|c| c.pass);
    Ok(DeltaSolution {
        any_delta: false,
        case: Some(case),
        rho,
        verdict,
        generic: Some(generic),
        checks,
        feasible,
        notes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndependenceReport {
    /// Labels of the vectors in the tested set.
    pub set: Vec<String>,
    pub min_singular_value: f64,
    pub independent: bool,
    /// Smallest `n` that can hold the set: `2n+1 ≥ |set|`.
    pub implied_min_n: usize,
    pub dimension_ok: bool,
}

/// Smallest singular value of the matrix whose columns are
/// `{T, E₂, (E₃ if r = 3), φT, ∇_TφT, ξ}`, minimized over the grid.
pub fn independence_check(spec: &CurveSpec, frenet: &FrenetData, tol: f64) -> Result<IndependenceReport> {
    if !frenet.has_frames() || frenet.r < 2 {
        return Err(Error::Structural("independence check needs frame vectors and r ≥ 2".into()));
    }
    let with_e3 = frenet.r >= 3;
    let mut set: Vec<String> = vec!["T".into(), "E2".into()];
    if with_e3 {
        set.push("E3".into());
    }
    set.extend(["phiT".into(), "nabla_T phiT".into(), "xi".into()]);
    let dim = 2 * frenet.n + 1;
    let cols = set.len();
    let implied_min_n = (cols - 1).div_ceil(2);
    let mut min_sv = f64::INFINITY;
    for sample in &frenet.samples {
        let along = along(spec, sample.t, Parametrization::ArcLength)?;
        let phi_t = frame_phi(&along.tangent);
        let dphi: Vec<f64> = along.derive(&phi_t).iter().map(Jet::value).collect();
        let mut columns: Vec<Vec<f64>> = vec![sample.frames[0].clone(), sample.frames[1].clone()];
        if with_e3 {
            columns.push(sample.frames[2].clone());
        }
        columns.push(phi_t.iter().map(Jet::value).collect());
        columns.push(dphi);
        columns.push(xi_vector(dim));
        let sv = if cols > dim {
            0.0
        } else {
            let m = DMatrix::from_fn(dim, cols, |i, j| columns[j][i]);
            m.singular_values().min()
        };
        min_sv = min_sv.min(sv);
    }
    Ok(IndependenceReport {
        set,
        min_singular_value: min_sv,
        independent: min_sv > tol,
        implied_min_n,
        dimension_ok: frenet.n >= implied_min_n,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Case4Report {
    /// `max |k₁'|`
    pub k1_constancy: f64,
    /// `max |k₁² + k₂² − (c+3)/4 − 3(c−1)/4·f² + ρ|`
    pub sum_rule: f64,
    /// `max |k₂' + 3(c−1)/4·f·g(E₃,φT)|`
    pub k2_rate: f64,
    /// `max |k₂k₃ + 3(c−1)/4·f·g(E₄,φT)|`
    pub k2k3: f64,
    /// Mean and variance of `k₂² + 3(c−1)/4·f²` over the grid.
    pub w0: f64,
    pub w0_variance: f64,
    pub pass: bool,
}

pub fn case4_ode_residuals(
    frenet: &FrenetData,
    scalars: &FrameScalars,
    c: f64,
    delta: DeltaPair,
    tol: f64,
) -> Result<Case4Report> {
    check_aligned(frenet, scalars)?;
    let rho = delta
        .ratio()
        .ok_or_else(|| Error::Config("case IV residuals need δ₂ ≠ 0".into()))?;
    let b = 0.75 * (c - 1.0);
    let count = frenet.samples.len();
    let max = |f: &dyn Fn(usize) -> f64| (0..count).map(f).fold(0.0f64, |a, v| a.max(v.abs()));
    let k1_constancy = max(&|s| frenet.k_deriv(s, 1, 1));
    let sum_rule = max(&|s| {
        frenet.k(s, 1).powi(2) + frenet.k(s, 2).powi(2) - (c + 3.0) / 4.0 - b * scalars.f[s].powi(2) + rho
    });
    let k2_rate = max(&|s| frenet.k_deriv(s, 2, 1) + b * scalars.f[s] * scalars.phi_e3[s]);
    let k2k3 = max(&|s| frenet.k(s, 2) * frenet.k(s, 3) + b * scalars.f[s] * scalars.phi_e4[s]);
    let w: Vec<f64> = (0..count)
        .map(|s| frenet.k(s, 2).powi(2) + b * scalars.f[s].powi(2))
        .collect();
    let w0 = w.iter().sum::<f64>() / count.max(1) as f64;
    let w0_variance = w.iter().map(|v| (v - w0).powi(2)).sum::<f64>() / count.max(1) as f64;
    let pass = [k1_constancy, sum_rule, k2_rate, k2k3].iter().all(|v| *v <= tol);
    Ok(Case4Report {
        k1_constancy,
        sum_rule,
        k2_rate,
        k2k3,
        w0,
        w0_variance,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frenet::{frame_scalars, frenet_apparatus, DEFAULT_ORDER_TOL};
    use std::f64::consts::PI;

    fn example() -> CurveSpec {
        CurveSpec::parse(2, &["sin(2*t)", "-cos(2*t)", "0", "0", "1"]).unwrap()
    }

    fn example_data() -> (CurveSpec, FrenetData, FrameScalars) {
        let spec = example();
        let fr = frenet_apparatus(&spec, &Grid::closed(0.0, PI, 64), DEFAULT_ORDER_TOL).unwrap();
        let sc = frame_scalars(&fr).unwrap();
        (spec, fr, sc)
    }

    #[test]
    fn example_fields() {
        let f = direct_fields(&example(), 0.3, -3.0, Parametrization::ArcLength).unwrap();
        let e2 = [0.0, 0.0, -(0.6f64).sin(), (0.6f64).cos(), 0.0];
        for i in 0..5 {
            assert!((f.tension[i] - 2.0 * e2[i]).abs() < 1e-12);
            assert!((f.bitension[i] + 8.0 * e2[i]).abs() < 1e-11);
        }
    }

    #[test]
    fn example_residuals() {
        let (spec, fr, sc) = example_data();
        let good = DeltaPair::new(-8.0, 2.0);
        let direct = residual_direct(&spec, &fr, -3.0, good).unwrap();
        assert!(direct.max_norm < 1e-10);
        let bi = residual_direct(&spec, &fr, -3.0, DeltaPair::new(0.0, 1.0)).unwrap();
        assert!((bi.max_norm - 8.0).abs() < 1e-10);
        let closed = residual_closed_form(&fr, &sc, -3.0, DeltaPair::new(0.0, 1.0), SignConvention::Corrected).unwrap();
        assert!(closed.max_vector_deviation(&bi).unwrap() < 1e-10);
        let check = theorem31_check(&fr, &sc, -3.0, good, DEFAULT_TOL, SignConvention::Corrected).unwrap();
        assert!(check.pass);
        assert_eq!(check.equations.len(), 2);
    }

    #[test]
    fn example_classification_and_ratio() {
        let (spec, fr, sc) = example_data();
        let class = classify(&fr, &sc, -3.0, DEFAULT_TOL).unwrap();
        assert_eq!(class.shape, Shape::Circle);
        assert_eq!(class.case, Some(Case::II));
        let sol = solve_delta(&fr, &sc, -3.0, DEFAULT_TOL, SignConvention::Corrected).unwrap();
        assert!((sol.rho.unwrap() + 4.0).abs() < 1e-10);
        assert!(sol.feasible, "{sol:?}");
        let ind = independence_check(&spec, &fr, 0.1).unwrap();
        assert!(ind.independent);
        assert!((ind.min_singular_value - 0.874).abs() < 1e-3, "{}", ind.min_singular_value);
    }

    #[test]
    fn synthetic_case_one_helix() {
        // k₁² + k₂² = 0.75 at c = 1 gives ρ = 0.25.
        let (k1, k2) = (0.6f64, (0.75f64 - 0.36).sqrt());
        let fr = FrenetData::synthetic(2, 3, vec![(0.0, vec![[k1, 0.0, 0.0], [k2, 0.0, 0.0]])]).unwrap();
        let sc = FrameScalars::synthetic(3, vec![0.0], vec![0.3], vec![0.1], vec![0.0], vec![0.0], vec![0.3 / k2], vec![0.0]).unwrap();
        let v = case_verdict(Case::I, 1.0, k1, k2, None);
        assert!((v.rho - 0.25).abs() < 1e-12 && v.feasible);
        let check = theorem31_check(&fr, &sc, 1.0, DeltaPair::new(0.25, 1.0), 1e-12, SignConvention::Corrected).unwrap();
        assert!(check.pass, "{check:?}");
    }

    #[test]
    fn scan_formulas() {
        let ex = case_verdict(Case::II, -3.0, 2.0, 0.0, None);
        assert_eq!(ex.rho, -4.0);
        assert!(ex.feasible);
        let zero = case_verdict(Case::I, 1.0, 1.0, 0.0, None);
        assert!(zero.excluded_zero_ratio && !zero.feasible);
        let iv = case_verdict(Case::IV, -3.0, 1.0, 1.0, Some(PI / 4.0));
        assert!(iv.sign_constraints);
        // A curve with k₁ > 0 never lands in the geodesic-only range.
        let geo = case_verdict(Case::III, 0.0, 0.5, 1.0, None);
        assert!(geo.rho < 0.0 && !geo.geodesic_only);
    }

    #[test]
    fn sign_of_the_space_form_term_is_decided_away_from_minus_three() {
        use crate::families::profile;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let curve = profile(&mut rng, 2, 2, false).unwrap();
        let fr = frenet_apparatus(&curve.spec, &curve.grid(24), DEFAULT_ORDER_TOL).unwrap();
        let sc = frame_scalars(&fr).unwrap();
        let delta = DeltaPair::new(0.4, 1.0);
        for c in [1.0, 5.0] {
            let direct = residual_direct(&curve.spec, &fr, c, delta).unwrap();
            let good = residual_closed_form(&fr, &sc, c, delta, SignConvention::Corrected).unwrap();
            let bad = residual_closed_form(&fr, &sc, c, delta, SignConvention::AsPrinted).unwrap();
            let scale = direct.max_norm.max(1.0);
            assert!(direct.max_vector_deviation(&good).unwrap() < 1e-10 * scale);
            let (k_lo, _) = fr.curvature_range(1);
            let gap = direct.max_vector_deviation(&bad).unwrap();
            assert!(gap >= 0.99 * (c + 3.0) / 2.0 * k_lo, "c = {c}: gap {gap}");
        }
    }

    #[test]
    fn geodesic_any_delta() {
        let spec = CurveSpec::parse(2, &["2*t", "0", "0", "0", "0"]).unwrap();
        let fr = frenet_apparatus(&spec, &Grid::open(0.0, 1.0, 17), DEFAULT_ORDER_TOL).unwrap();
        let sc = frame_scalars(&fr).unwrap();
        let sol = solve_delta(&fr, &sc, -3.0, DEFAULT_TOL, SignConvention::Corrected).unwrap();
        assert!(sol.any_delta);
        let res = residual_direct(&spec, &fr, -3.0, DeltaPair::new(3.0, -1.0)).unwrap();
        assert!(res.max_norm < 1e-14);
        let class = classify(&fr, &sc, -3.0, DEFAULT_TOL).unwrap();
        assert_eq!((class.shape, class.case), (Shape::Geodesic, None));
    }
}
