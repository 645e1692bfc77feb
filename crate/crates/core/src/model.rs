//! The Sasakian space form ℝ^{2n+1}(−3) and the curvature operator of a
//! general Sasakian space form M(c).
//!
//! Coordinates are ordered `(x_1..x_n, y_1..y_n, z)`. The structure is
//!
//! * `η = ½(dz − Σ y_i dx_i)`, `ξ = 2∂_z`,
//! * `φ(u) = (u_y, −u_x, Σ y_i u_{y_i})` in coordinate components,
//! * `g = η⊗η + ¼ Σ (dx_i² + dy_i²)`,
//!
//! with the g-orthonormal frame `X_i = 2∂_{y_i}`,
//! `X_{n+i} = φX_i = 2(∂_{x_i} + y_i ∂_z)`, `X_{2n+1} = ξ`.
//!
//! Vector fields along curves are mostly handled in *frame components*
//! (coefficients on `X_1..X_{2n}, ξ`). In those components the metric is
//! the Euclidean dot product, `φ(a, b, c) = (−b, a, 0)` and the Levi-Civita
//! connection has constant coefficients, which is what makes the jet
//! calculus along curves exact.
//!
//! Curvature sign convention: `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_{[X,Y]}Z`.
//! With it the Sasakian space-form formula at `c = −3` agrees with the
//! Riemann tensor of the coordinate metric (see the oracle tests).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelPoint {
    coords: Vec<f64>,
}

impl ModelPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 3 || coords.len().is_multiple_of(2) {
            return Err(Error::Structural(format!(
                "a point of R^(2n+1) needs an odd number >= 3 of coordinates, got {}",
                coords.len()
            )));
        }
        Ok(Self { coords })
    }

    pub fn origin(n: usize) -> Self {
        Self {
            coords: vec![0.0; 2 * n + 1],
        }
    }

    pub fn n(&self) -> usize {
        (self.coords.len() - 1) / 2
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn y(&self) -> &[f64] {
        let n = self.n();
        &self.coords[n..2 * n]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TangentVec {
    base: ModelPoint,
    comps: Vec<f64>,
}

impl TangentVec {
    pub fn new(base: ModelPoint, comps: Vec<f64>) -> Result<Self> {
        if comps.len() != base.dim() {
            return Err(Error::DimensionMismatch {
                expected: base.dim(),
                found: comps.len(),
            });
        }
        Ok(Self { base, comps })
    }

    pub fn zero(base: ModelPoint) -> Self {
        let comps = vec![0.0; base.dim()];
        Self { base, comps }
    }

    /// Builds a vector from its components on `X_1..X_{2n}, ξ` at `base`.
    pub fn from_frame(base: ModelPoint, frame: &[f64]) -> Result<Self> {
        if frame.len() != base.dim() {
            return Err(Error::DimensionMismatch {
                expected: base.dim(),
                found: frame.len(),
            });
        }
        let comps = frame_to_coords(base.y(), frame);
        Ok(Self { base, comps })
    }

    pub fn base(&self) -> &ModelPoint {
        &self.base
    }

    pub fn comps(&self) -> &[f64] {
        &self.comps
    }

    /// Components on `X_1..X_{2n}, ξ`.
    pub fn frame_comps(&self) -> Vec<f64> {
        coords_to_frame(self.base.y(), &self.comps)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            base: self.base.clone(),
            comps: self.comps.iter().map(|c| c * s).collect(),
        }
    }

    /// `self + s * other`; both must share a base point.
    pub fn axpy(&self, s: f64, other: &TangentVec) -> Result<Self> {
        same_base(&self.base, other)?;
        Ok(Self {
            base: self.base.clone(),
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a + s * b)
                .collect(),
        })
    }
}

fn same_base(p: &ModelPoint, u: &TangentVec) -> Result<()> {
    if u.base.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: u.base.dim(),
        });
    }
    if u.base != *p {
        return Err(Error::Structural(
            "tangent vector is based at a different point".into(),
        ));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpaceFormParams {
    pub c: f64,
    pub n: usize,
}

impl SpaceFormParams {
    pub fn new(c: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Structural("space-form dimension needs n >= 1".into()));
        }
        Ok(Self { c, n })
    }

    /// The concrete model ℝ^{2n+1}(−3).
    pub fn model(n: usize) -> Result<Self> {
        Self::new(-3.0, n)
    }
}

/// One-based index into `X_1, ..., X_{2n}, ξ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameIndex {
    i: usize,
    n: usize,
}

impl FrameIndex {
    pub fn new(i: usize, n: usize) -> Result<Self> {
        if i == 0 || i > 2 * n + 1 {
            return Err(Error::FrameIndex {
                index: i,
                max: 2 * n + 1,
            });
        }
        Ok(Self { i, n })
    }

    pub fn xi(n: usize) -> Self {
        Self { i: 2 * n + 1, n }
    }

    pub fn get(self) -> usize {
        self.i
    }

    fn slot(self) -> usize {
        self.i - 1
    }
}

pub fn metric(p: &ModelPoint, u: &TangentVec, v: &TangentVec) -> Result<f64> {
    same_base(p, u)?;
    same_base(p, v)?;
    let n = p.n();
    let flat: f64 = (0..2 * n).map(|k| u.comps[k] * v.comps[k]).sum();
    Ok(eta_raw(p, &u.comps) * eta_raw(p, &v.comps) + 0.25 * flat)
}

pub fn eta(p: &ModelPoint, u: &TangentVec) -> Result<f64> {
    same_base(p, u)?;
    Ok(eta_raw(p, &u.comps))
}

fn eta_raw(p: &ModelPoint, comps: &[f64]) -> f64 {
    let n = p.n();
    let y = p.y();
    let yx: f64 = (0..n).map(|i| y[i] * comps[i]).sum();
    0.5 * (comps[2 * n] - yx)
}

pub fn phi(p: &ModelPoint, u: &TangentVec) -> Result<TangentVec> {
    same_base(p, u)?;
    let n = p.n();
    let y = p.y();
    let mut out = vec![0.0; 2 * n + 1];
    for i in 0..n {
        out[i] = u.comps[n + i];
        out[n + i] = -u.comps[i];
        out[2 * n] += y[i] * u.comps[n + i];
    }
    TangentVec::new(p.clone(), out)
}

pub fn xi(p: &ModelPoint) -> TangentVec {
    frame_field(p, FrameIndex::xi(p.n()))
}

pub fn frame_field(p: &ModelPoint, idx: FrameIndex) -> TangentVec {
    let mut frame = vec![0.0; p.dim()];
    frame[idx.slot()] = 1.0;
    let comps = frame_to_coords(p.y(), &frame);
    TangentVec {
        base: p.clone(),
        comps,
    }
}

/// Frame components to coordinate components at a point with `y`-coordinates `y`.
pub fn frame_to_coords(y: &[f64], frame: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut out = vec![0.0; 2 * n + 1];
    let mut z = 2.0 * frame[2 * n];
    for i in 0..n {
        out[n + i] = 2.0 * frame[i];
        out[i] = 2.0 * frame[n + i];
        z += 2.0 * frame[n + i] * y[i];
    }
    out[2 * n] = z;
    out
}

/// Coordinate components to frame components at a point with `y`-coordinates `y`.
pub fn coords_to_frame(y: &[f64], comps: &[f64]) -> Vec<f64> {
    coords_to_frame_generic(y, comps)
}

/// Generic form of [`coords_to_frame`], used on jets of curve velocities.
pub fn coords_to_frame_generic<S: Scalar>(y: &[S], comps: &[S]) -> Vec<S> {
    let n = y.len();
    let mut out: Vec<S> = comps.iter().map(|c| c.zero_like()).collect();
    let mut eta = comps[2 * n].clone();
    for i in 0..n {
        out[i] = comps[n + i].scaled(0.5);
        out[n + i] = comps[i].scaled(0.5);
        eta = eta - y[i].clone() * comps[i].clone();
    }
    out[2 * n] = eta.scaled(0.5);
    out
}

/// φ on frame components: `φX_i = X_{n+i}`, `φX_{n+i} = −X_i`, `φξ = 0`.
pub fn frame_phi<S: Scalar>(v: &[S]) -> Vec<S> {
    let n = (v.len() - 1) / 2;
    let mut out: Vec<S> = v.iter().map(|c| c.zero_like()).collect();
    for i in 0..n {
        out[i] = -v[n + i].clone();
        out[n + i] = v[i].clone();
    }
    out
}

/// Frame components of `∇_{X_i} X_j`.
pub fn connection_frame_coeffs(i: FrameIndex, j: FrameIndex) -> Vec<f64> {
    let n = i.n;
    let mut along = vec![0.0; 2 * n + 1];
    let mut field = vec![0.0; 2 * n + 1];
    along[i.slot()] = 1.0;
    field[j.slot()] = 1.0;
    frame_connection(&along, &field)
}

/// `Σ_{a,b} along_a · field_b · ∇_{X_a} X_b` in frame components.
///
/// The table is
/// `∇_{X_i}X_j = ∇_{X_{n+i}}X_{n+j} = 0`, `∇_{X_i}X_{n+j} = δ_ij ξ`,
/// `∇_{X_{n+i}}X_j = −δ_ij ξ`, `∇_{X_i}ξ = ∇_ξ X_i = −X_{n+i}`,
/// `∇_{X_{n+i}}ξ = ∇_ξ X_{n+i} = X_i`, `∇_ξ ξ = 0`.
pub fn frame_connection<S: Scalar>(along: &[S], field: &[S]) -> Vec<S> {
    let n = (along.len() - 1) / 2;
    let zero = field[0].zero_like();
    let mut out = vec![zero.clone(); 2 * n + 1];
    let ta_xi = &along[2 * n];
    let f_xi = &field[2 * n];
    let mut xi = zero;
    for i in 0..n {
        let (ta, tb) = (&along[i], &along[n + i]);
        let (fa, fb) = (&field[i], &field[n + i]);
        xi = xi + ta.clone() * fb.clone() - tb.clone() * fa.clone();
        // X_{n+i}: −along_i f_ξ − along_ξ field_i
        out[n + i] = -(ta.clone() * f_xi.clone()) - ta_xi.clone() * fa.clone();
        // X_i: along_{n+i} f_ξ + along_ξ field_{n+i}
        out[i] = tb.clone() * f_xi.clone() + ta_xi.clone() * fb.clone();
    }
    out[2 * n] = xi;
    out
}

/// Covariant derivative on the model: `∇_X Y` for a field `Y` given through
/// its frame coefficients and their directional derivatives `X(coeffs)`.
pub fn covariant_derivative_frame(along: &[f64], field: &[f64], field_rate: &[f64]) -> Vec<f64> {
    let conn = frame_connection(along, field);
    conn.iter().zip(field_rate).map(|(c, d)| c + d).collect()
}

/// All pairings the curvature formula consumes. Every entry must be set
/// for [`curvature_abstract`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PairingTable {
    pub g_xy: Option<f64>,
    pub g_xz: Option<f64>,
    pub g_yz: Option<f64>,
    /// `g(X, φY)`
    pub g_x_phi_y: Option<f64>,
    /// `g(X, φZ)`
    pub g_x_phi_z: Option<f64>,
    /// `g(Y, φZ)`
    pub g_y_phi_z: Option<f64>,
    pub eta_x: Option<f64>,
    pub eta_y: Option<f64>,
    pub eta_z: Option<f64>,
}

/// `R(X,Y)Z` written as a combination of `X, Y, φX, φY, φZ, ξ`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct CurvatureTerms {
    pub x: f64,
    pub y: f64,
    pub phi_x: f64,
    pub phi_y: f64,
    pub phi_z: f64,
    pub xi: f64,
}

pub fn curvature_abstract(c: f64, table: &PairingTable) -> Result<CurvatureTerms> {
    let fields = [
        ("g(X,Y)", table.g_xy),
        ("g(X,Z)", table.g_xz),
        ("g(Y,Z)", table.g_yz),
        ("g(X,phiY)", table.g_x_phi_y),
        ("g(X,phiZ)", table.g_x_phi_z),
        ("g(Y,phiZ)", table.g_y_phi_z),
        ("eta(X)", table.eta_x),
        ("eta(Y)", table.eta_y),
        ("eta(Z)", table.eta_z),
    ];
    let missing: Vec<&str> = fields
        .iter()
        .filter(|(_, v)| v.is_none())
        .map(|(name, _)| *name)
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingPairing(missing.join(", ")));
    }
    let v = |o: Option<f64>| o.unwrap_or_default();
    let (g_xz, g_yz) = (v(table.g_xz), v(table.g_yz));
    let (ex, ey, ez) = (v(table.eta_x), v(table.eta_y), v(table.eta_z));
    let a = (c + 3.0) / 4.0;
    let b = (c - 1.0) / 4.0;
    Ok(CurvatureTerms {
        x: a * g_yz - b * ey * ez,
        y: -a * g_xz + b * ex * ez,
        phi_x: -b * v(table.g_y_phi_z),
        phi_y: b * v(table.g_x_phi_z),
        phi_z: 2.0 * b * v(table.g_x_phi_y),
        xi: b * (g_xz * ey - g_yz * ex),
    })
}

/// `R(X,Y)Z` of the Sasakian space form with φ-sectional curvature
/// `params.c`, evaluated with the structure tensors of the model at the
/// common base point.
pub fn curvature_general(
    params: &SpaceFormParams,
    x: &TangentVec,
    y: &TangentVec,
    z: &TangentVec,
) -> Result<TangentVec> {
    let p = x.base();
    if p.n() != params.n {
        return Err(Error::DimensionMismatch {
            expected: 2 * params.n + 1,
            found: p.dim(),
        });
    }
    let (phi_x, phi_y, phi_z) = (phi(p, x)?, phi(p, y)?, phi(p, z)?);
    let table = PairingTable {
        g_xy: Some(metric(p, x, y)?),
        g_xz: Some(metric(p, x, z)?),
        g_yz: Some(metric(p, y, z)?),
        g_x_phi_y: Some(metric(p, x, &phi_y)?),
        g_x_phi_z: Some(metric(p, x, &phi_z)?),
        g_y_phi_z: Some(metric(p, y, &phi_z)?),
        eta_x: Some(eta(p, x)?),
        eta_y: Some(eta(p, y)?),
        eta_z: Some(eta(p, z)?),
    };
    let terms = curvature_abstract(params.c, &table)?;
    TangentVec::zero(p.clone())
        .axpy(terms.x, x)?
        .axpy(terms.y, y)?
        .axpy(terms.phi_x, &phi_x)?
        .axpy(terms.phi_y, &phi_y)?
        .axpy(terms.phi_z, &phi_z)?
        .axpy(terms.xi, &xi(p))
}

/// [`curvature_general`] on frame components; the model metric is the dot
/// product there.
pub fn curvature_frame(c: f64, x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    let last = x.len() - 1;
    let (phi_x, phi_y, phi_z) = (frame_phi(x), frame_phi(y), frame_phi(z));
    let table = PairingTable {
        g_xy: Some(dot(x, y)),
        g_xz: Some(dot(x, z)),
        g_yz: Some(dot(y, z)),
        g_x_phi_y: Some(dot(x, &phi_y)),
        g_x_phi_z: Some(dot(x, &phi_z)),
        g_y_phi_z: Some(dot(y, &phi_z)),
        eta_x: Some(x[last]),
        eta_y: Some(y[last]),
        eta_z: Some(z[last]),
    };
    let t = curvature_abstract(c, &table).expect("table is complete");
    let mut out: Vec<f64> = (0..x.len())
        .map(|k| t.x * x[k] + t.y * y[k] + t.phi_x * phi_x[k] + t.phi_y * phi_y[k] + t.phi_z * phi_z[k])
        .collect();
    out[last] += t.xi;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn vec_at(p: &ModelPoint, comps: &[f64]) -> TangentVec {
        TangentVec::new(p.clone(), comps.to_vec()).unwrap()
    }

    #[test]
    fn metric_examples() {
        let p = ModelPoint::origin(2);
        let x3 = frame_field(&p, FrameIndex::new(3, 2).unwrap());
        assert_eq!(x3.comps(), &[2.0, 0.0, 0.0, 0.0, 0.0]);
        assert_relative_eq!(metric(&p, &x3, &x3).unwrap(), 1.0);
        let xi_v = vec_at(&p, &[0.0, 0.0, 0.0, 0.0, 2.0]);
        assert_relative_eq!(metric(&p, &xi_v, &xi_v).unwrap(), 1.0);
        let q = ModelPoint::new(vec![0.3, -1.0, 2.0, 0.5, 7.0]).unwrap();
        let x1 = frame_field(&q, FrameIndex::new(1, 2).unwrap());
        let x2 = frame_field(&q, FrameIndex::new(2, 2).unwrap());
        assert_eq!(metric(&q, &x1, &x2).unwrap(), 0.0);
    }

    #[test]
    fn eta_examples() {
        let p = ModelPoint::origin(2);
        assert_eq!(eta(&p, &xi(&p)).unwrap(), 1.0);
        let x1 = frame_field(&p, FrameIndex::new(1, 2).unwrap());
        assert_eq!(eta(&p, &x1).unwrap(), 0.0);
        let q = ModelPoint::new(vec![0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let u = vec_at(&q, &[2.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(eta(&q, &u).unwrap(), -1.0);
    }

    #[test]
    fn phi_examples() {
        let p = ModelPoint::new(vec![0.4, 1.1, -0.7, 2.0, 3.0]).unwrap();
        let f = |i| frame_field(&p, FrameIndex::new(i, 2).unwrap());
        let phi_x1 = phi(&p, &f(1)).unwrap();
        for (a, b) in phi_x1.comps().iter().zip(f(3).comps()) {
            assert_relative_eq!(a, b, epsilon = 1e-15);
        }
        assert_eq!(phi(&p, &xi(&p)).unwrap().comps(), &[0.0; 5]);
        let back = phi(&p, &phi(&p, &f(3)).unwrap()).unwrap();
        for (a, b) in back.comps().iter().zip(f(3).comps()) {
            assert_relative_eq!(*a, -b, epsilon = 1e-15);
        }
    }

    #[test]
    fn frame_index_bounds() {
        assert!(FrameIndex::new(0, 2).is_err());
        assert!(FrameIndex::new(6, 2).is_err());
        let p = ModelPoint::origin(2);
        let xi_v = frame_field(&p, FrameIndex::new(5, 2).unwrap());
        assert_eq!(xi_v.comps(), &[0.0, 0.0, 0.0, 0.0, 2.0]);
        let x1 = frame_field(&p, FrameIndex::new(1, 2).unwrap());
        assert_eq!(x1.comps(), &[0.0, 0.0, 2.0, 0.0, 0.0]);
    }

    #[test]
    fn dimension_errors() {
        let p = ModelPoint::origin(2);
        assert!(TangentVec::new(p.clone(), vec![1.0; 3]).is_err());
        let q = ModelPoint::origin(1);
        let u = TangentVec::zero(q);
        assert!(matches!(
            metric(&p, &u, &u),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(ModelPoint::new(vec![0.0; 4]).is_err());
        assert!(SpaceFormParams::new(1.0, 0).is_err());
    }

    #[test]
    fn connection_table_entries() {
        let n = 2;
        let idx = |i| FrameIndex::new(i, n).unwrap();
        let unit = |i: usize| {
            let mut v = vec![0.0; 5];
            v[i - 1] = 1.0;
            v
        };
        assert_eq!(connection_frame_coeffs(idx(1), idx(3)), unit(5));
        assert_eq!(connection_frame_coeffs(idx(1), idx(2)), vec![0.0; 5]);
        assert_eq!(connection_frame_coeffs(idx(3), idx(5)), unit(1));
        assert_eq!(connection_frame_coeffs(idx(3), idx(1)), unit(5).iter().map(|v| -v).collect::<Vec<_>>());
        assert_eq!(connection_frame_coeffs(idx(5), idx(4)), unit(2));
        assert_eq!(connection_frame_coeffs(idx(5), idx(5)), vec![0.0; 5]);
        // ∇_X ξ = −φX on every frame direction
        for i in 1..=5 {
            let lhs = connection_frame_coeffs(idx(i), FrameIndex::xi(n));
            let rhs: Vec<f64> = frame_phi(&unit(i)).iter().map(|v| -v).collect();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn curvature_constant_curvature_case() {
        // c = 1 leaves g(Y,Z)X − g(X,Z)Y
        let x = [1.0, 0.0, 0.0, 0.0, 0.0];
        let y = [0.0, 1.0, 0.0, 0.0, 0.0];
        let r = curvature_frame(1.0, &x, &y, &y);
        assert_eq!(r, x.to_vec());
    }

    #[test]
    fn curvature_vanishes_on_example_configuration() {
        // T = X_3, E_2 = X_4: η(T) = η(E_2) = 0 and g(φT, E_2) = 0
        let t = [0.0, 0.0, 1.0, 0.0, 0.0];
        let e2 = [0.0, 0.0, 0.0, 1.0, 0.0];
        let r = curvature_frame(-3.0, &t, &e2, &t);
        assert!(r.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn abstract_mode_reports_missing_pairings() {
        let table = PairingTable {
            g_xy: Some(0.0),
            ..Default::default()
        };
        match curvature_abstract(0.5, &table) {
            Err(Error::MissingPairing(names)) => {
                assert!(names.contains("eta(Z)"));
                assert!(!names.contains("g(X,Y)"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
