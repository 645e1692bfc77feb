//! Discrete interpolating energy `δ₁∫‖γ'‖² + δ₂∫‖∇_{γ'}γ'‖²` on sampled
//! curves, its gradient, the first-variation check against the analytic
//! residual, and a projected gradient descent.
//!
//! Velocities and covariant accelerations use five-point central
//! differences, so the energy is fourth-order accurate in the spacing on
//! smooth curves. Closed curves wrap around; open curves only sum over
//! vertices with full stencils and keep their end vertices fixed.

use std::fmt::Write as _;

use serde::Serialize;

use crate::analyzer::{direct_fields, DeltaPair, Parametrization};
use crate::curve::{CurveSpec, Grid};
use crate::error::{Error, Result};
use crate::frenet::dot;
use crate::model::{coords_to_frame, curvature_frame, frame_connection, frame_to_coords};

/// Stencil half-width of one five-point difference.
const HALF: usize = 2;
/// Vertices whose energy terms a single vertex can influence, each side.
const REACH: usize = 2 * HALF;
/// Relative endpoint gap tolerated when sampling onto a periodic grid.
const CLOSURE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscreteCurve {
    pub n: usize,
    pub points: Vec<Vec<f64>>,
    pub closed: bool,
    /// Parameter spacing.
    pub h: f64,
}

impl DiscreteCurve {
    pub fn new(n: usize, points: Vec<Vec<f64>>, closed: bool, h: f64) -> Result<Self> {
        let min = if closed { 5 } else { 2 * REACH + 1 };
        if points.len() < min {
            return Err(Error::Config(format!("a discrete curve needs at least {min} samples, got {}", points.len())));
        }
        if !(h > 0.0) {
            return Err(Error::Config("sample spacing must be positive".into()));
        }
        for p in &points {
            if p.len() != 2 * n + 1 {
                return Err(Error::DimensionMismatch {
                    expected: 2 * n + 1,
                    found: p.len(),
                });
            }
        }
        let curve = Self { n, points, closed, h };
        curve.check_segments()?;
        Ok(curve)
    }

    /// Samples `spec` on `grid`.
    pub fn sample(spec: &CurveSpec, grid: &Grid) -> Result<Self> {
        grid.validate()?;
        let points = grid
            .points()
            .into_iter()
            .map(|t| spec.point(t).map(|p| p.coords().to_vec()))
            .collect::<Result<Vec<_>>>()?;
        if grid.closed {
            let a = spec.point(grid.start)?;
            let b = spec.point(grid.end)?;
            let gap = a
                .coords()
                .iter()
                .zip(b.coords())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            let scale = a.coords().iter().fold(1.0f64, |m, v| m.max(v.abs()));
            if gap > CLOSURE_TOL * scale {
                return Err(Error::Config(format!(
                    "curve does not close on the periodic grid: |γ(end) − γ(start)| = {gap:e}; use an open grid"
                )));
            }
        }
        Self::new(spec.n(), points, grid.closed, grid.spacing())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn check_segments(&self) -> Result<()> {
        let count = self.len();
        let last = if self.closed { count } else { count - 1 };
        for k in 0..last {
            let next = (k + 1) % count;
            let d: f64 = self.points[k]
                .iter()
                .zip(&self.points[next])
                .map(|(a, b)| (a - b).powi(2))
                .sum();
            if d == 0.0 {
                return Err(Error::DegenerateSegment { index: k, next });
            }
        }
        Ok(())
    }

    fn index(&self, k: isize) -> Option<usize> {
        let count = self.len() as isize;
        if self.closed {
            Some(k.rem_euclid(count) as usize)
        } else if (0..count).contains(&k) {
            Some(k as usize)
        } else {
            None
        }
    }

    /// Vertices whose energy terms have complete stencils.
    fn energy_vertices(&self) -> std::ops::Range<usize> {
        if self.closed {
            0..self.len()
        } else {
            REACH..self.len() - REACH
        }
    }

    /// Frame components of the five-point velocity at `k`.
    fn frame_velocity(&self, points: &[Vec<f64>], k: isize) -> Option<Vec<f64>> {
        let p = |o: isize| self.index(k + o).map(|i| &points[i]);
        let (m2, m1, p1, p2) = (p(-2)?, p(-1)?, p(1)?, p(2)?);
        let v: Vec<f64> = (0..m2.len())
            .map(|c| (m2[c] - 8.0 * m1[c] + 8.0 * p1[c] - p2[c]) / (12.0 * self.h))
            .collect();
        let here = &points[self.index(k)?];
        Some(coords_to_frame(&here[self.n..2 * self.n], &v))
    }

    /// `(‖γ'‖², ‖∇_{γ'}γ'‖²)` at vertex `k`.
    fn vertex_terms(&self, points: &[Vec<f64>], k: usize) -> Option<(f64, f64)> {
        let k = k as isize;
        let f: Vec<Vec<f64>> = (-2..=2)
            .map(|o| self.frame_velocity(points, k + o))
            .collect::<Option<_>>()?;
        let rate: Vec<f64> = (0..f[0].len())
            .map(|c| (f[0][c] - 8.0 * f[1][c] + 8.0 * f[3][c] - f[4][c]) / (12.0 * self.h))
            .collect();
        let conn = frame_connection(&f[2], &f[2]);
        let acc: Vec<f64> = rate.iter().zip(&conn).map(|(a, b)| a + b).collect();
        Some((dot(&f[2], &f[2]), dot(&acc, &acc)))
    }

    fn energy_of(&self, points: &[Vec<f64>], delta: DeltaPair) -> EnergyBreakdown {
        let (mut dir, mut bend) = (0.0, 0.0);
        for k in self.energy_vertices() {
            let (a, b) = self.vertex_terms(points, k).expect("stencil inside the energy range");
            dir += a;
            bend += b;
        }
        EnergyBreakdown::new(delta.delta1 * dir * self.h, delta.delta2 * bend * self.h)
    }

    /// Energy of the terms a perturbation of vertex `j` can change.
    fn local_energy(&self, points: &[Vec<f64>], j: usize, delta: DeltaPair) -> f64 {
        let range = self.energy_vertices();
        let mut total = 0.0;
        for o in -(REACH as isize)..=REACH as isize {
            let Some(k) = self.index(j as isize + o) else { continue };
            if !range.contains(&k) {
                continue;
            }
            if let Some((a, b)) = self.vertex_terms(points, k) {
                total += delta.delta1 * a + delta.delta2 * b;
            }
        }
        total * self.h
    }

    /// Fails when the sampled velocity leaves the contact distribution by
    /// more than `tol` (relative).
    pub fn check_legendre(&self, tol: f64) -> Result<()> {
        let defect = self.max_legendre_defect();
        if defect > tol {
            return Err(Error::Structural(format!(
                "chord velocities leave ker η: max |η(γ')|/‖γ'‖ = {defect:e} exceeds {tol:e}"
            )));
        }
        Ok(())
    }

    /// Max over vertices of `|η(γ')|/‖γ'‖` for the sampled velocity.
    pub fn max_legendre_defect(&self) -> f64 {
        let last = 2 * self.n;
        (0..self.len())
            .filter_map(|k| self.frame_velocity(&self.points, k as isize))
            .map(|f| f[last].abs() / dot(&f, &f).sqrt())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    /// `δ₁ Σ ‖γ'‖² h`
    pub dirichlet: f64,
    /// `δ₂ Σ ‖∇_{γ'}γ'‖² h`
    pub bending: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    fn new(dirichlet: f64, bending: f64) -> Self {
        Self {
            dirichlet,
            bending,
            total: dirichlet + bending,
        }
    }
}

pub fn discrete_energy(curve: &DiscreteCurve, delta: DeltaPair) -> EnergyBreakdown {
    curve.energy_of(&curve.points, delta)
}

/// `∂E/∂p` per vertex and coordinate by central differences of the energy.
/// Fixed end vertices of open curves get zero rows.
pub fn energy_gradient(curve: &DiscreteCurve, delta: DeltaPair) -> Vec<Vec<f64>> {
    let mut points = curve.points.clone();
    let dim = 2 * curve.n + 1;
    let movable = movable_vertices(curve);
    let mut grad = vec![vec![0.0; dim]; curve.len()];
    for j in movable {
        for c in 0..dim {
            let orig = points[j][c];
            let step = 1e-6 * orig.abs().max(1.0);
            points[j][c] = orig + step;
            let up = curve.local_energy(&points, j, delta);
            points[j][c] = orig - step;
            let down = curve.local_energy(&points, j, delta);
            points[j][c] = orig;
            grad[j][c] = (up - down) / (2.0 * step);
        }
    }
    grad
}

fn movable_vertices(curve: &DiscreteCurve) -> std::ops::Range<usize> {
    if curve.closed {
        0..curve.len()
    } else {
        REACH..curve.len() - REACH
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FirstVariation {
    /// `d/dε E(γ + εV)` at `ε = 0`, by a symmetric difference in `ε`.
    pub discrete: f64,
    /// `2∫⟨τ_δ, V⟩` with the parameter-mode residual of the curve.
    pub predicted: f64,
    pub sigma: f64,
    /// `|discrete − σ·predicted|`
    pub error: f64,
}

/// Compares the energy's first variation along `variation` (frame
/// components at the grid points) with `σ·2∫⟨τ_δ, V⟩`.
pub fn first_variation_check(
    spec: &CurveSpec,
    grid: &Grid,
    delta: DeltaPair,
    variation: &[Vec<f64>],
    eps: f64,
    sigma: f64,
) -> Result<FirstVariation> {
    let curve = DiscreteCurve::sample(spec, grid)?;
    if variation.len() != curve.len() {
        return Err(Error::DimensionMismatch {
            expected: curve.len(),
            found: variation.len(),
        });
    }
    if !curve.closed {
        let edge = variation
            .iter()
            .take(2 * REACH + 1)
            .chain(variation.iter().rev().take(2 * REACH + 1))
            .map(|v| dot(v, v).sqrt())
            .fold(0.0, f64::max);
        if edge > 1e-12 {
            return Err(Error::NonCompactSupport { magnitude: edge });
        }
    }
    let n = curve.n;
    let shifts: Vec<Vec<f64>> = curve
        .points
        .iter()
        .zip(variation)
        .map(|(p, v)| frame_to_coords(&p[n..2 * n], v))
        .collect();
    let moved = |s: f64| -> Vec<Vec<f64>> {
        curve
            .points
            .iter()
            .zip(&shifts)
            .map(|(p, d)| p.iter().zip(d).map(|(a, b)| a + s * b).collect())
            .collect()
    };
    let discrete = (curve.energy_of(&moved(eps), delta).total - curve.energy_of(&moved(-eps), delta).total) / (2.0 * eps);
    let mut integral = 0.0;
    let ts = grid.points();
    let range = curve.energy_vertices();
    for k in range {
        let fields = direct_fields(spec, ts[k], -3.0, Parametrization::Parameter)?;
        integral += dot(&fields.residual(delta), &variation[k]);
    }
    let predicted = 2.0 * integral * curve.h;
    Ok(FirstVariation {
        discrete,
        predicted,
        sigma,
        error: (discrete - sigma * predicted).abs(),
    })
}

/// Sign relating the energy gradient to the residual, fixed on the example
/// circle with `δ = (0, 1)` and the variation `V = E₂`, where
/// `2∫⟨τ₂, V⟩ = −16·π ≠ 0`.
pub fn calibrate_sigma() -> Result<f64> {
    let spec = CurveSpec::parse(2, &["sin(2*t)", "-cos(2*t)", "0", "0", "1"])?;
    let grid = Grid::closed(0.0, std::f64::consts::PI, 256);
    let variation: Vec<Vec<f64>> = grid
        .points()
        .iter()
        .map(|t| vec![0.0, 0.0, -(2.0 * t).sin(), (2.0 * t).cos(), 0.0])
        .collect();
    let fv = first_variation_check(&spec, &grid, DeltaPair::new(0.0, 1.0), &variation, 1e-4, 1.0)?;
    Ok(if fv.discrete * fv.predicted >= 0.0 { 1.0 } else { -1.0 })
}

/// Max of `‖δ₂τ₂ − δ₁τ‖` (arc-length fields) for a sampled curve, with every
/// derivative taken by five-point differences. Open curves skip a boundary
/// layer of [`BOUNDARY_LAYER`] vertices at each end: the clamp and the
/// taper of the descent live there, and the Euler–Lagrange equation does
/// not hold at clamped ends.
pub fn sampled_residual(curve: &DiscreteCurve, c: f64, delta: DeltaPair) -> f64 {
    let count = curve.len();
    let speed_and_tangent: Vec<Option<(f64, Vec<f64>)>> = (0..count)
        .map(|k| {
            curve.frame_velocity(&curve.points, k as isize).map(|f| {
                let s = dot(&f, &f).sqrt();
                (s, f.into_iter().map(|v| v / s).collect())
            })
        })
        .collect();
    let derive = |field: &[Option<Vec<f64>>]| -> Vec<Option<Vec<f64>>> {
        (0..count)
            .map(|k| {
                let at = |o: isize| curve.index(k as isize + o).and_then(|i| field[i].as_ref());
                let (m2, m1, p1, p2) = (at(-2)?, at(-1)?, at(1)?, at(2)?);
                let (speed, tangent) = speed_and_tangent[k].as_ref()?;
                let here = field[k].as_ref()?;
                let conn = frame_connection(tangent, here);
                Some(
                    (0..here.len())
                        .map(|i| (m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) / (12.0 * curve.h) / speed + conn[i])
                        .collect(),
                )
            })
            .collect()
    };
    let tangent: Vec<Option<Vec<f64>>> = speed_and_tangent.iter().map(|o| o.as_ref().map(|(_, t)| t.clone())).collect();
    let tau = derive(&tangent);
    let d2 = derive(&tau);
    let d3 = derive(&d2);
    let margin = if curve.closed { 0 } else { BOUNDARY_LAYER };
    let mut worst: f64 = 0.0;
    for k in margin..count.saturating_sub(margin) {
        let (Some(t), Some(a), Some(b)) = (&tangent[k], &tau[k], &d3[k]) else { continue };
        let r = curvature_frame(c, t, a, t);
        let res: Vec<f64> = (0..t.len())
            .map(|i| delta.delta2 * (b[i] - r[i]) - delta.delta1 * a[i])
            .collect();
        worst = worst.max(dot(&res, &res).sqrt());
    }
    worst
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub step: usize,
    pub energy: f64,
    pub max_defect: f64,
    pub analyzer_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
    /// Why the descent ended before the requested number of steps.
    pub stopped: Option<String>,
    pub final_curve: DiscreteCurve,
}

impl Trajectory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,energy,max_defect,analyzer_residual\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e}",
                r.step, r.energy, r.max_defect, r.analyzer_residual
            );
        }
        out
    }

    /// Accepted steps never raise the energy.
    pub fn is_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].energy <= w[0].energy)
    }
}

/// Binomial passes applied to each descent direction.
const SMOOTHING_PASSES: usize = 2;

/// Applies the `[1, 4, 6, 4, 1]/16` filter to a per-vertex field and
/// tapers it to zero at the fixed vertices of open curves. The filter is symmetric with
/// a nonnegative spectrum, so it damps grid-scale oscillations of the raw
/// energy gradient without reversing smooth descent directions.
fn smooth(curve: &DiscreteCurve, mut field: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    const W: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];
    let movable = movable_vertices(curve);
    for _ in 0..SMOOTHING_PASSES {
        let next: Vec<Vec<f64>> = (0..field.len())
            .map(|k| {
                if !movable.contains(&k) {
                    return vec![0.0; field[k].len()];
                }
                let mut acc = vec![0.0; field[k].len()];
                for (o, w) in (-2isize..=2).zip(W) {
                    if let Some(i) = curve.index(k as isize + o) {
                        for (a, v) in acc.iter_mut().zip(&field[i]) {
                            *a += w * v;
                        }
                    }
                }
                acc
            })
            .collect();
        field = next;
    }
    if !curve.closed {
        let count = field.len();
        for (k, row) in field.iter_mut().enumerate() {
            let w = taper(k.min(count - 1 - k));
            row.iter_mut().for_each(|v| *v *= w);
        }
    }
    field
}

/// Vertices over which open-curve updates ramp up from the clamped ends.
const TAPER: f64 = 16.0;

/// Vertices at each end of an open curve left out of [`sampled_residual`].
pub const BOUNDARY_LAYER: usize = 2 * REACH + TAPER as usize;

/// `sin²` ramp from 0 on the fixed vertices to 1 at `TAPER` vertices
/// further in, so the clamp does not leave a kink in the iterate.
fn taper(from_end: usize) -> f64 {
    let d = from_end as f64 - (REACH as f64 - 1.0);
    if d <= 0.0 {
        0.0
    } else if d >= TAPER {
        1.0
    } else {
        (std::f64::consts::FRAC_PI_2 * d / TAPER).sin().powi(2)
    }
}

/// Smallest step, relative to `rate`, tried before giving up.
const MIN_STEP_FRACTION: f64 = 1e-12;

/// Gradient descent on the discrete energy. The gradient covector is
/// turned into a vector with the model metric, its `ξ` part is removed so
/// the update stays in `ker η`, and each step backtracks until the energy
/// decreases.
pub fn descend(curve: &DiscreteCurve, delta: DeltaPair, steps: usize, rate: f64, c: f64) -> Result<Trajectory> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::Config(format!("descent rate must be positive, got {rate}")));
    }
    let n = curve.n;
    let dim = 2 * n + 1;
    let mut current = curve.clone();
    let mut energy = discrete_energy(&current, delta).total;
    let row = |step: usize, energy: f64, cur: &DiscreteCurve| TrajectoryRow {
        step,
        energy,
        max_defect: cur.max_legendre_defect(),
        analyzer_residual: sampled_residual(cur, c, delta),
    };
    let mut rows = vec![row(0, energy, &current)];
    let mut stopped = None;
    let mut alpha = rate;
    for step in 1..=steps {
        let grad = energy_gradient(&current, delta);
        let raw: Vec<Vec<f64>> = current
            .points
            .iter()
            .zip(&grad)
            .map(|(p, g)| {
                let y = &p[n..2 * n];
                // Frame components of the metric dual: g(X_a) for each
                // orthonormal frame vector X_a, with the ξ slot dropped.
                let mut frame: Vec<f64> = (0..dim)
                    .map(|a| {
                        let mut e = vec![0.0; dim];
                        e[a] = 1.0;
                        dot(g, &frame_to_coords(y, &e))
                    })
                    .collect();
                frame[dim - 1] = 0.0;
                frame_to_coords(y, &frame)
            })
            .collect();
        let direction = smooth(&current, raw);
        if direction.iter().all(|d| d.iter().all(|v| *v == 0.0)) {
            stopped = Some("gradient vanished".into());
            break;
        }
        let mut accepted = None;
        while alpha >= rate * MIN_STEP_FRACTION {
            let points: Vec<Vec<f64>> = current
                .points
                .iter()
                .zip(&direction)
                .map(|(p, d)| p.iter().zip(d).map(|(a, b)| a - alpha * b).collect())
                .collect();
            let trial = current.energy_of(&points, delta).total;
            if trial < energy {
                accepted = Some((points, trial));
                break;
            }
            alpha *= 0.5;
        }
        let Some((points, trial)) = accepted else {
            stopped = Some(format!("step-size underflow at step {step}"));
            break;
        };
        current = DiscreteCurve::new(n, points, current.closed, current.h)?;
        energy = trial;
        rows.push(row(step, energy, &current));
        // Let the step grow back after successful iterations.
        alpha = (alpha * 2.0).min(rate);
    }
    Ok(Trajectory {
        rows,
        stopped,
        final_curve: current,
    })
}
