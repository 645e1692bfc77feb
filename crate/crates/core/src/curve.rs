//! Curves in ℝ^{2n+1}(−3) with exact derivatives.
//!
//! A [`CurveSpec`] holds one source per coordinate. Expression coordinates
//! are differentiated with jets; the z-coordinate of a curve built by
//! [`make_legendre`] is an integral whose value comes from adaptive
//! Gauss–Legendre quadrature and whose derivatives come from the jet of the
//! (analytic) integrand `Σ y_i x_i'`.

use std::cell::RefCell;
use std::f64::consts::PI;

use gauss_quad::GaussLegendre;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::Jet;
use crate::model::{self, coords_to_frame_generic, frame_connection, ModelPoint, TangentVec};

/// Jet degree used for plain coordinate jets.
pub const JET_DEGREE: usize = 4;

#[derive(Clone, Debug)]
pub enum Coordinate {
    Expr(Expr),
    /// `z(t) = z0 + ∫_0^t Σ y_i(s) x_i'(s) ds`.
    LegendreZ { z0: f64 },
}

#[derive(Clone, Debug)]
pub struct CurveSpec {
    n: usize,
    coords: Vec<Coordinate>,
    quad_tol: f64,
}

impl CurveSpec {
    pub fn new(n: usize, exprs: Vec<Expr>) -> Result<Self> {
        Self::from_coordinates(n, exprs.into_iter().map(Coordinate::Expr).collect())
    }

    pub fn from_coordinates(n: usize, coords: Vec<Coordinate>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Structural("curve dimension needs n >= 1".into()));
        }
        if coords.len() != 2 * n + 1 {
            return Err(Error::DimensionMismatch {
                expected: 2 * n + 1,
                found: coords.len(),
            });
        }
        if coords[..2 * n]
            .iter()
            .any(|c| matches!(c, Coordinate::LegendreZ { .. }))
        {
            return Err(Error::Structural(
                "only the z-coordinate may be an integrated Legendre coordinate".into(),
            ));
        }
        Ok(Self {
            n,
            coords,
            quad_tol: 1e-13,
        })
    }

    pub fn parse(n: usize, exprs: &[&str]) -> Result<Self> {
        let parsed = exprs
            .iter()
            .map(|s| Expr::parse(s))
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, parsed)
    }

    /// Reads the curve-file format: a header `n=<int>`, then one
    /// expression per coordinate in the order `x_1..x_n, y_1..y_n, z`.
    /// `#` starts a comment. The z line may be `@legendre <z0>` to request
    /// the integrated Legendre coordinate.
    pub fn parse_file(text: &str) -> Result<Self> {
        let mut n = None;
        let mut coords = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::CurveFile {
                line: lineno + 1,
                message,
            };
            match n {
                None => {
                    let value = line
                        .strip_prefix("n=")
                        .or_else(|| line.strip_prefix("n ="))
                        .ok_or_else(|| err("expected header 'n=<int>'".into()))?;
                    let parsed: usize = value
                        .trim()
                        .parse()
                        .map_err(|_| err(format!("invalid dimension '{}'", value.trim())))?;
                    if parsed == 0 {
                        return Err(err("n must be at least 1".into()));
                    }
                    n = Some(parsed);
                }
                Some(dim) => {
                    if coords.len() == 2 * dim + 1 {
                        return Err(err(format!("more than {} coordinate lines", 2 * dim + 1)));
                    }
                    if let Some(rest) = line.strip_prefix("@legendre") {
                        if coords.len() != 2 * dim {
                            return Err(err("@legendre is only allowed on the z line".into()));
                        }
                        let z0 = rest.trim();
                        let z0 = if z0.is_empty() {
                            0.0
                        } else {
                            z0.parse()
                                .map_err(|_| err(format!("invalid z0 '{z0}'")))?
                        };
                        coords.push(Coordinate::LegendreZ { z0 });
                    } else {
                        let e = Expr::parse(line).map_err(|e| match e {
                            Error::Parse { position, message } => {
                                err(format!("column {}: {message}", position + 1))
                            }
                            other => other,
                        })?;
                        coords.push(Coordinate::Expr(e));
                    }
                }
            }
        }
        let n = n.ok_or(Error::CurveFile {
            line: 0,
            message: "missing header 'n=<int>'".into(),
        })?;
        if coords.len() != 2 * n + 1 {
            return Err(Error::CurveFile {
                line: 0,
                message: format!("expected {} coordinate lines, found {}", 2 * n + 1, coords.len()),
            });
        }
        Self::from_coordinates(n, coords)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }

    pub fn coordinates(&self) -> &[Coordinate] {
        &self.coords
    }

    pub fn with_quadrature_tol(mut self, tol: f64) -> Self {
        self.quad_tol = tol;
        self
    }

    /// Jets of all coordinates at `t`.
    pub fn jets(&self, t: f64, degree: usize) -> Result<Vec<Jet>> {
        let n = self.n;
        let mut out = Vec::with_capacity(self.dim());
        for c in &self.coords[..2 * n] {
            match c {
                Coordinate::Expr(e) => out.push(e.jet(t, degree)?),
                Coordinate::LegendreZ { .. } => unreachable!("checked in constructor"),
            }
        }
        let z = match &self.coords[2 * n] {
            Coordinate::Expr(e) => e.jet(t, degree)?,
            Coordinate::LegendreZ { z0 } => {
                let value = z0 + self.integrate_contact(0.0, t)?;
                let mut coeffs = vec![value];
                if degree >= 1 {
                    let integrand = contact_integrand(&out, n);
                    coeffs.extend(
                        integrand
                            .coeffs()
                            .iter()
                            .enumerate()
                            .map(|(k, c)| c / (k + 1) as f64),
                    );
                }
                Jet::from_coeffs(coeffs)
            }
        };
        out.push(z);
        Ok(out)
    }

    pub fn point(&self, t: f64) -> Result<ModelPoint> {
        let values = self.jets(t, 0)?.iter().map(Jet::value).collect();
        ModelPoint::new(values)
    }

    /// Frame components of the velocity as jets of degree `degree - 1`,
    /// together with the coordinate jets they came from.
    pub fn velocity_frame_jets(&self, t: f64, degree: usize) -> Result<(Vec<Jet>, Vec<Jet>)> {
        let jets = self.jets(t, degree)?;
        let n = self.n;
        let vel: Vec<Jet> = jets.iter().map(Jet::differentiate).collect();
        let y: Vec<Jet> = jets[n..2 * n]
            .iter()
            .map(|j| j.truncate(degree - 1))
            .collect();
        Ok((coords_to_frame_generic(&y, &vel), jets))
    }

    fn integrate_contact(&self, a: f64, b: f64) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        let rule = GaussLegendre::new(10).expect("degree 10 is valid");
        let failure: RefCell<Option<Error>> = RefCell::new(None);
        let integrand = |s: f64| -> f64 {
            match self.contact_rate(s) {
                Ok(v) => v,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    0.0
                }
            }
        };
        // Unit-length pieces keep the adaptive recursion shallow.
        let pieces = ((b - a).abs().ceil() as usize).max(1);
        let step = (b - a) / pieces as f64;
        let mut total = 0.0;
        for k in 0..pieces {
            let lo = a + step * k as f64;
            let hi = if k + 1 == pieces { b } else { lo + step };
            let whole = rule.integrate(lo, hi, integrand);
            total += adaptive(&rule, &integrand, lo, hi, whole, self.quad_tol, 0)?;
        }
        match failure.into_inner() {
            Some(e) => Err(e),
            None => Ok(total),
        }
    }

    fn contact_rate(&self, s: f64) -> Result<f64> {
        let n = self.n;
        let mut acc = 0.0;
        for i in 0..n {
            let x = expr_of(&self.coords[i]).jet(s, 1)?;
            let y = expr_of(&self.coords[n + i]).eval(s)?;
            acc += y * x.derivative(1);
        }
        Ok(acc)
    }
}

fn expr_of(c: &Coordinate) -> &Expr {
    match c {
        Coordinate::Expr(e) => e,
        Coordinate::LegendreZ { .. } => unreachable!("x and y coordinates are expressions"),
    }
}

/// Jet of `Σ y_i x_i'` from coordinate jets.
fn contact_integrand(jets: &[Jet], n: usize) -> Jet {
    let d = jets[0].degree() - 1;
    let mut acc = Jet::zero(d);
    for i in 0..n {
        acc = acc + jets[n + i].truncate(d) * jets[i].differentiate();
    }
    acc
}

const MAX_QUAD_DEPTH: usize = 40;

fn adaptive(
    rule: &GaussLegendre,
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let left = rule.integrate(a, m, f);
    let right = rule.integrate(m, b, f);
    let refined = left + right;
    if (refined - whole).abs() <= tol * refined.abs().max(1.0) {
        return Ok(refined);
    }
    if depth >= MAX_QUAD_DEPTH {
        return Err(Error::Quadrature {
            a,
            b,
            detail: format!(
                "estimate still moving by {:e} after {depth} bisections",
                (refined - whole).abs()
            ),
        });
    }
    Ok(adaptive(rule, f, a, m, left, tol, depth + 1)? + adaptive(rule, f, m, b, right, tol, depth + 1)?)
}

/// Builds a Legendre curve from `x_1..x_n`, `y_1..y_n` profiles; the
/// z-coordinate is integrated from `z0` at `t = 0`.
pub fn make_legendre(x: Vec<Expr>, y: Vec<Expr>, z0: f64) -> Result<CurveSpec> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let n = x.len();
    let mut coords: Vec<Coordinate> = x.into_iter().chain(y).map(Coordinate::Expr).collect();
    coords.push(Coordinate::LegendreZ { z0 });
    CurveSpec::from_coordinates(n, coords)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoordinateJet {
    pub t: f64,
    pub values: Vec<f64>,
    /// `derivatives[i][k-1]` is the k-th derivative of coordinate `i`.
    pub derivatives: Vec<[f64; 4]>,
}

pub fn parse_and_jet(spec: &CurveSpec, t: f64) -> Result<CoordinateJet> {
    let jets = spec.jets(t, JET_DEGREE)?;
    Ok(CoordinateJet {
        t,
        values: jets.iter().map(Jet::value).collect(),
        derivatives: jets
            .iter()
            .map(|j| [j.derivative(1), j.derivative(2), j.derivative(3), j.derivative(4)])
            .collect(),
    })
}

pub fn velocity(spec: &CurveSpec, t: f64) -> Result<TangentVec> {
    let jets = spec.jets(t, 1)?;
    let base = ModelPoint::new(jets.iter().map(Jet::value).collect())?;
    TangentVec::new(base, jets.iter().map(|j| j.derivative(1)).collect())
}

/// `η(γ')`; zero exactly when the curve is Legendre at `t`.
pub fn legendre_defect(spec: &CurveSpec, t: f64) -> Result<f64> {
    let v = velocity(spec, t)?;
    model::eta(v.base(), &v)
}

/// A uniform parameter grid. Closed grids are periodic and exclude the end
/// point; open grids include both ends.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub start: f64,
    pub end: f64,
    pub count: usize,
    pub closed: bool,
}

impl Grid {
    pub fn closed(start: f64, end: f64, count: usize) -> Self {
        Self {
            start,
            end,
            count,
            closed: true,
        }
    }

    pub fn open(start: f64, end: f64, count: usize) -> Self {
        Self {
            start,
            end,
            count,
            closed: false,
        }
    }

    /// 512 periodic samples of `[0, 2π)`.
    pub fn default_period() -> Self {
        Self::closed(0.0, 2.0 * PI, 512)
    }

    pub fn spacing(&self) -> f64 {
        let intervals = if self.closed { self.count } else { self.count - 1 };
        (self.end - self.start) / intervals as f64
    }

    pub fn point(&self, k: usize) -> f64 {
        self.start + self.spacing() * k as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.point(k)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let min = if self.closed { 5 } else { 2 };
        if self.count < min || !(self.end > self.start) {
            return Err(Error::Config(format!(
                "grid needs at least {min} samples on a nonempty interval"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ArclengthReport {
    /// `max |‖γ'‖_g − 1|` over the grid.
    pub max_deviation: f64,
    pub worst_t: f64,
    /// `max |Σ_{i ≤ 2n} (γ_i')² − 4|`, the Euclidean form of unit speed
    /// for Legendre curves.
    pub horizontal_identity_deviation: f64,
    /// `max |Σ_{i ≤ 2n+1} (γ_i')² − 4|`; diagnostic only, it includes `z'`
    /// which is not part of the g-norm.
    pub full_sum_deviation: f64,
}

pub fn arclength_check(spec: &CurveSpec, grid: &Grid) -> Result<ArclengthReport> {
    let n = spec.n();
    let mut report = ArclengthReport {
        max_deviation: 0.0,
        worst_t: grid.start,
        horizontal_identity_deviation: 0.0,
        full_sum_deviation: 0.0,
    };
    for t in grid.points() {
        let v = velocity(spec, t)?;
        let speed = model::metric(v.base(), &v, &v)?.sqrt();
        if speed == 0.0 {
            return Err(Error::IrregularPoint { t });
        }
        let dev = (speed - 1.0).abs();
        if dev > report.max_deviation {
            report.max_deviation = dev;
            report.worst_t = t;
        }
        let horizontal: f64 = v.comps()[..2 * n].iter().map(|c| c * c).sum();
        let full = horizontal + v.comps()[2 * n].powi(2);
        report.horizontal_identity_deviation =
            report.horizontal_identity_deviation.max((horizontal - 4.0).abs());
        report.full_sum_deviation = report.full_sum_deviation.max((full - 4.0).abs());
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ArclengthSample {
    pub s: f64,
    pub t: f64,
    pub point: Vec<f64>,
}

fn speed_at(spec: &CurveSpec, t: f64) -> Result<f64> {
    let v = velocity(spec, t)?;
    let speed = model::metric(v.base(), &v, &v)?.sqrt();
    if speed == 0.0 {
        return Err(Error::IrregularPoint { t });
    }
    Ok(speed)
}

/// Samples the curve at `grid.count` points equally spaced in g-arc length
/// over `[grid.start, grid.end]`.
pub fn reparametrize_arclength(spec: &CurveSpec, grid: &Grid) -> Result<Vec<ArclengthSample>> {
    grid.validate()?;
    let rule = GaussLegendre::new(10).expect("degree 10 is valid");
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let speed = |t: f64| match speed_at(spec, t) {
        Ok(s) => s,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            1.0
        }
    };
    // Fine cumulative table of s(t), then Newton on each target.
    let panels = 64 * grid.count.max(8);
    let h = (grid.end - grid.start) / panels as f64;
    let mut table = Vec::with_capacity(panels + 1);
    table.push(0.0);
    for k in 0..panels {
        let a = grid.start + h * k as f64;
        let seg = rule.integrate(a, a + h, speed);
        table.push(table[k] + seg);
    }
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    let total = table[panels];
    let count = if grid.closed { grid.count } else { grid.count - 1 };
    let mut out = Vec::with_capacity(grid.count);
    for j in 0..grid.count {
        let s_target = total * j as f64 / count as f64;
        let k = match table.binary_search_by(|v| v.partial_cmp(&s_target).unwrap()) {
            Ok(k) => k.min(panels - 1),
            Err(k) => k.saturating_sub(1).min(panels - 1),
        };
        let a = grid.start + h * k as f64;
        let mut t = a + h * ((s_target - table[k]) / (table[k + 1] - table[k]).max(f64::MIN_POSITIVE));
        for _ in 0..20 {
            let s_t = table[k] + rule.integrate(a, t, speed);
            let step = (s_t - s_target) / speed(t);
            t -= step;
            if step.abs() < 1e-14 {
                break;
            }
        }
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
        out.push(ArclengthSample {
            s: s_target,
            t,
            point: spec.point(t)?.coords().to_vec(),
        });
    }
    Ok(out)
}

/// `∇_T V` for jets: `T` and `V` are frame components along the curve.
/// The result has degree `deg(V) − 1`.
pub fn covariant_derivative_jet(tangent: &[Jet], field: &[Jet]) -> Vec<Jet> {
    let d = field[0].degree() - 1;
    let t: Vec<Jet> = tangent.iter().map(|j| j.truncate(d)).collect();
    let v: Vec<Jet> = field.iter().map(|j| j.truncate(d)).collect();
    let conn = frame_connection(&t, &v);
    field
        .iter()
        .zip(conn)
        .map(|(f, c)| f.differentiate() + c)
        .collect()
}

/// Differentiation along a curve, either by the curve parameter or by arc
/// length. All fields are frame-component jets.
#[derive(Clone, Debug)]
pub struct AlongJets {
    /// `γ'` for parameter mode, `γ'/‖γ'‖` for arc-length mode.
    pub tangent: Vec<Jet>,
    /// `dt/ds`; `None` in parameter mode.
    pub inv_speed: Option<Jet>,
}

impl AlongJets {
    pub fn parameter(velocity: Vec<Jet>) -> Self {
        Self {
            tangent: velocity,
            inv_speed: None,
        }
    }

    /// Unit tangent and `dt/ds` from the velocity; fails where the curve
    /// stops.
    pub fn arclength(velocity: &[Jet], t: f64) -> Result<Self> {
        let d = velocity[0].degree();
        let mut norm2 = Jet::zero(d);
        for v in velocity {
            norm2 = norm2 + v * v;
        }
        if !(norm2.value() > 1e-24) {
            return Err(Error::IrregularPoint { t });
        }
        let inv = norm2
            .powf(-0.5)
            .ok_or(Error::IrregularPoint { t })?;
        let tangent = velocity.iter().map(|v| v * &inv).collect();
        Ok(Self {
            tangent,
            inv_speed: Some(inv),
        })
    }

    /// Derivative of a scalar jet; the degree drops by one.
    pub fn derive_scalar(&self, f: &Jet) -> Jet {
        let df = f.differentiate();
        match &self.inv_speed {
            Some(inv) => &df * inv,
            None => df,
        }
    }

    /// Covariant derivative of a field; the degree drops by one.
    pub fn derive(&self, field: &[Jet]) -> Vec<Jet> {
        let d = field[0].degree() - 1;
        let t: Vec<Jet> = self.tangent.iter().map(|j| j.truncate(d)).collect();
        let v: Vec<Jet> = field.iter().map(|j| j.truncate(d)).collect();
        let conn = frame_connection(&t, &v);
        field
            .iter()
            .zip(conn)
            .map(|(f, c)| self.derive_scalar(f) + c)
            .collect()
    }
}

/// A vector field along a curve, expanded in the model frame.
#[derive(Clone, Debug)]
pub enum AlongField {
    /// The velocity field itself.
    Tangent,
    /// Constant frame coefficients.
    Constant(Vec<f64>),
    /// Frame coefficients given as expressions in `t`.
    Coefficients(Vec<Expr>),
    /// Frame coefficients sampled on `grid`; derivatives use five-point
    /// central differences (periodic on closed grids).
    Sampled { grid: Grid, values: Vec<Vec<f64>> },
}

/// `∇_T V` at `t` in frame components.
pub fn covariant_derivative_along(spec: &CurveSpec, field: &AlongField, t: f64) -> Result<Vec<f64>> {
    let dim = spec.dim();
    let (tangent, _) = spec.velocity_frame_jets(t, 2)?;
    let field_jets: Vec<Jet> = match field {
        AlongField::Tangent => tangent.clone(),
        AlongField::Constant(c) => {
            check_len(c.len(), dim)?;
            c.iter().map(|v| Jet::constant(*v, 1)).collect()
        }
        AlongField::Coefficients(exprs) => {
            check_len(exprs.len(), dim)?;
            exprs.iter().map(|e| e.jet(t, 1)).collect::<Result<_>>()?
        }
        AlongField::Sampled { grid, values } => {
            let k = nearest_sample(grid, t)?;
            let tangent_vals: Vec<f64> = tangent.iter().map(Jet::value).collect();
            return covariant_derivative_sampled(&tangent_vals, grid, values, k);
        }
    };
    Ok(covariant_derivative_jet(&tangent, &field_jets)
        .iter()
        .map(Jet::value)
        .collect())
}

fn check_len(found: usize, expected: usize) -> Result<()> {
    if found != expected {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

fn nearest_sample(grid: &Grid, t: f64) -> Result<usize> {
    let k = ((t - grid.start) / grid.spacing()).round();
    if k < 0.0 || k as usize >= grid.count || (grid.point(k as usize) - t).abs() > 1e-9 * grid.spacing().max(1.0) {
        return Err(Error::Structural(format!("t = {t} is not a sample of the field grid")));
    }
    Ok(k as usize)
}

/// Five-point central derivative of sampled data at index `k`.
pub fn five_point_derivative(grid: &Grid, values: &[Vec<f64>], k: usize) -> Result<Vec<f64>> {
    let count = values.len();
    let idx = |offset: isize| -> Result<usize> {
        let j = k as isize + offset;
        if grid.closed {
            Ok(j.rem_euclid(count as isize) as usize)
        } else if j < 0 || j >= count as isize {
            Err(Error::Stencil { index: k })
        } else {
            Ok(j as usize)
        }
    };
    let (m2, m1, p1, p2) = (idx(-2)?, idx(-1)?, idx(1)?, idx(2)?);
    let h = grid.spacing();
    Ok((0..values[k].len())
        .map(|c| {
            (values[m2][c] - 8.0 * values[m1][c] + 8.0 * values[p1][c] - values[p2][c]) / (12.0 * h)
        })
        .collect())
}

/// Covariant derivative of a sampled field, given the velocity's frame
/// components at sample `k`.
pub fn covariant_derivative_sampled(
    tangent: &[f64],
    grid: &Grid,
    values: &[Vec<f64>],
    k: usize,
) -> Result<Vec<f64>> {
    let rate = five_point_derivative(grid, values, k)?;
    Ok(model::covariant_derivative_frame(tangent, &values[k], &rate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn example() -> CurveSpec {
        CurveSpec::parse(2, &["sin(2*t)", "-cos(2*t)", "0", "0", "1"]).unwrap()
    }

    #[test]
    fn example_velocity_and_defect() {
        let spec = example();
        let v = velocity(&spec, 0.0).unwrap();
        assert_eq!(v.comps(), &[2.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(legendre_defect(&spec, 0.0).unwrap(), 0.0);
        let fr = v.frame_comps();
        assert_eq!(fr, vec![0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn vertical_curve_is_not_legendre() {
        let spec = CurveSpec::parse(2, &["0", "0", "0", "0", "2*t"]).unwrap();
        assert_eq!(legendre_defect(&spec, 0.4).unwrap(), 1.0);
    }

    #[test]
    fn flat_y_constant_z_is_legendre() {
        let spec = CurveSpec::parse(2, &["t^2", "sin(t)", "0", "0", "3"]).unwrap();
        for t in [0.0, 0.5, 2.0] {
            assert_eq!(legendre_defect(&spec, t).unwrap(), 0.0);
        }
    }

    #[test]
    fn make_legendre_examples() {
        let p = |s: &str| Expr::parse(s).unwrap();
        let spec = make_legendre(vec![p("sin(2*t)"), p("-cos(2*t)")], vec![p("0"), p("0")], 1.0).unwrap();
        for t in [0.0, 0.3, 2.5] {
            let j = parse_and_jet(&spec, t).unwrap();
            assert_eq!(j.values[4], 1.0);
            assert_eq!(j.derivatives[4], [0.0; 4]);
        }
        let spec = make_legendre(vec![p("t"), p("0")], vec![p("t"), p("0")], 0.0).unwrap();
        for t in [0.0, 0.7, 3.9] {
            let j = parse_and_jet(&spec, t).unwrap();
            assert_relative_eq!(j.values[4], t * t / 2.0, epsilon = 1e-13);
            assert_relative_eq!(j.derivatives[4][0], t, epsilon = 1e-15);
            assert_relative_eq!(j.derivatives[4][1], 1.0, epsilon = 1e-15);
            assert_eq!(j.derivatives[4][2], 0.0);
            assert!(legendre_defect(&spec, t).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn make_legendre_negative_time_and_trig_profile() {
        let p = |s: &str| Expr::parse(s).unwrap();
        // y x' = cos t * cos t, integral t/2 + sin(2t)/4
        let spec = make_legendre(vec![p("sin(t)")], vec![p("cos(t)")], 0.5).unwrap();
        for t in [-2.0, 0.1, 7.3] {
            let z = spec.point(t).unwrap().coords()[2];
            assert_relative_eq!(z, 0.5 + t / 2.0 + (2.0 * t).sin() / 4.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn quadrature_errors_propagate() {
        let p = |s: &str| Expr::parse(s).unwrap();
        let spec = make_legendre(vec![p("t")], vec![p("1/(t-1)")], 0.0).unwrap();
        let r = spec.point(2.0);
        assert!(matches!(r, Err(Error::Quadrature { .. })), "{r:?}");
    }

    #[test]
    fn curve_file_format() {
        let text = "# example\nn=2\nsin(2*t)\n-cos(2*t)\n0 # y1\n0\n1\n";
        let spec = CurveSpec::parse_file(text).unwrap();
        assert_eq!(spec.n(), 2);
        let legendre = "n=1\nt\nt\n@legendre 0.5\n";
        let spec = CurveSpec::parse_file(legendre).unwrap();
        assert_relative_eq!(spec.point(1.0).unwrap().coords()[2], 1.0, epsilon = 1e-13);
        assert!(matches!(
            CurveSpec::parse_file("n=1\nt\nt\n"),
            Err(Error::CurveFile { .. })
        ));
        assert!(matches!(
            CurveSpec::parse_file("n=1\nt\nsin(\n0\n"),
            Err(Error::CurveFile { line: 3, .. })
        ));
        assert!(matches!(CurveSpec::parse_file("t\n"), Err(Error::CurveFile { line: 1, .. })));
        assert!(matches!(
            CurveSpec::parse_file("n=1\n@legendre\nt\n0\n"),
            Err(Error::CurveFile { .. })
        ));
    }

    #[test]
    fn arclength_examples() {
        let grid = Grid::default_period();
        let r = arclength_check(&example(), &grid).unwrap();
        assert!(r.max_deviation < 1e-15);
        assert!(r.horizontal_identity_deviation < 1e-14);
        let stretched = CurveSpec::parse(2, &["2*sin(2*t)", "-cos(2*t)", "0", "0", "1"]).unwrap();
        assert!(arclength_check(&stretched, &grid).unwrap().max_deviation > 0.5);
        let stalled = CurveSpec::parse(1, &["t^2", "0", "0"]).unwrap();
        assert!(matches!(
            arclength_check(&stalled, &Grid::open(-1.0, 1.0, 3)),
            Err(Error::IrregularPoint { .. })
        ));
    }

    #[test]
    fn arclength_reparametrization_of_quadratic() {
        // x = t^2 on [1, 3]: g-speed t, s(t) = (t^2 - 1) / 2.
        let spec = CurveSpec::parse(1, &["t^2", "0", "0"]).unwrap();
        let samples = reparametrize_arclength(&spec, &Grid::open(1.0, 3.0, 5)).unwrap();
        for (j, s) in samples.iter().enumerate() {
            let want_s = 4.0 * j as f64 / 4.0;
            assert_relative_eq!(s.s, want_s, epsilon = 1e-12);
            assert_relative_eq!(s.t, (1.0 + 2.0 * want_s).sqrt(), epsilon = 1e-10);
        }
    }

    #[test]
    fn covariant_derivative_examples() {
        let spec = example();
        let d = covariant_derivative_along(&spec, &AlongField::Tangent, 0.0).unwrap();
        let want = [0.0, 0.0, 0.0, 2.0, 0.0];
        for (a, b) in d.iter().zip(want) {
            assert_relative_eq!(*a, b, epsilon = 1e-14);
        }
        // in coordinates this is 2 X_4 = (0, 4, 0, 0, 0)
        let p = spec.point(0.0).unwrap();
        let coords = TangentVec::from_frame(p, &d).unwrap();
        assert_relative_eq!(coords.comps()[1], 4.0, epsilon = 1e-14);

        // X_3 = X_{n+1} is parallel along the example curve, while
        // ∇_{X_3} X_1 = −ξ makes ∇_T X_1 = −cos(2t) ξ.
        let x3 = AlongField::Constant(vec![0.0, 0.0, 1.0, 0.0, 0.0]);
        let x1 = AlongField::Constant(vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        for t in [0.0, 0.4, 1.9] {
            let d = covariant_derivative_along(&spec, &x3, t).unwrap();
            assert!(d.iter().all(|v| v.abs() < 1e-15));
            let d = covariant_derivative_along(&spec, &x1, t).unwrap();
            assert!(d[..4].iter().all(|v| v.abs() < 1e-15));
            assert_relative_eq!(d[4], -(2.0 * t).cos(), epsilon = 1e-15);
        }

        let xi = AlongField::Constant(vec![0.0, 0.0, 0.0, 0.0, 1.0]);
        for t in [0.2, 1.1] {
            let d = covariant_derivative_along(&spec, &xi, t).unwrap();
            let (tangent, _) = spec.velocity_frame_jets(t, 1).unwrap();
            let tv: Vec<f64> = tangent.iter().map(Jet::value).collect();
            let phi_t = model::frame_phi(&tv);
            for (a, b) in d.iter().zip(phi_t) {
                assert_relative_eq!(*a, -b, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn sampled_derivative_matches_jet_path() {
        let spec = example();
        let grid = Grid::closed(0.0, PI, 256);
        let values: Vec<Vec<f64>> = grid
            .points()
            .iter()
            .map(|&t| {
                let (tan, _) = spec.velocity_frame_jets(t, 1).unwrap();
                tan.iter().map(Jet::value).collect()
            })
            .collect();
        let field = AlongField::Sampled { grid, values };
        let t = grid.point(17);
        let sampled = covariant_derivative_along(&spec, &field, t).unwrap();
        let exact = covariant_derivative_along(&spec, &AlongField::Tangent, t).unwrap();
        for (a, b) in sampled.iter().zip(exact) {
            assert_relative_eq!(*a, b, epsilon = 1e-6);
        }
        let open = Grid::open(0.0, 1.0, 16);
        let vals = vec![vec![0.0; 5]; 16];
        assert!(matches!(
            five_point_derivative(&open, &vals, 1),
            Err(Error::Stencil { index: 1 })
        ));
        assert!(five_point_derivative(&open, &vals, 2).is_ok());
    }
}
