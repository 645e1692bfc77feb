//! Independent oracles for the model geometry: the coordinate metric is
//! written out from scratch here and everything else (Christoffel symbols,
//! Riemann tensor, ∇ξ) comes from finite differences of it.

#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;

/// Coordinate metric of `ℝ^{2n+1}(−3)` at `p = (x, y, z)`:
/// `g = η⊗η + ¼Σ(dx_i² + dy_i²)` with `η = ½(dz − Σ y_i dx_i)`.
pub fn metric(p: &[f64]) -> DMatrix<f64> {
    let dim = p.len();
    let n = (dim - 1) / 2;
    let mut eta = vec![0.0; dim];
    for i in 0..n {
        eta[i] = -0.5 * p[n + i];
    }
    eta[dim - 1] = 0.5;
    DMatrix::from_fn(dim, dim, |a, b| {
        let flat = if a == b && a < 2 * n { 0.25 } else { 0.0 };
        eta[a] * eta[b] + flat
    })
}

const H: f64 = 1e-3;

fn shifted(p: &[f64], axis: usize, by: f64) -> Vec<f64> {
    let mut q = p.to_vec();
    q[axis] += by;
    q
}

/// Five-point derivative of a matrix-valued function along `axis`.
fn d_axis(f: &dyn Fn(&[f64]) -> DMatrix<f64>, p: &[f64], axis: usize) -> DMatrix<f64> {
    let at = |s: f64| f(&shifted(p, axis, s * H));
    (at(-2.0) - at(-1.0) * 8.0 + at(1.0) * 8.0 - at(2.0)) / (12.0 * H)
}

/// `Γ[k][(i, j)]`, i.e. `Γ^k_{ij}`, from differences of the metric.
pub fn christoffel(p: &[f64]) -> Vec<DMatrix<f64>> {
    let dim = p.len();
    let ginv = metric(p).try_inverse().expect("metric is positive definite");
    let dg: Vec<DMatrix<f64>> = (0..dim).map(|a| d_axis(&metric, p, a)).collect();
    (0..dim)
        .map(|k| {
            DMatrix::from_fn(dim, dim, |i, j| {
                0.5 * (0..dim)
                    .map(|l| ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]))
                    .sum::<f64>()
            })
        })
        .collect()
}

/// `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_{[X,Y]}Z` for constant coordinate
/// vectors, from differences of the Christoffel symbols.
pub fn riemann(p: &[f64], x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
    let dim = p.len();
    let gamma = christoffel(p);
    let dgamma: Vec<Vec<DMatrix<f64>>> = (0..dim)
        .map(|a| {
            let at = |s: f64| christoffel(&shifted(p, a, s * H));
            let (m2, m1, p1, p2) = (at(-2.0), at(-1.0), at(1.0), at(2.0));
            (0..dim)
                .map(|k| (&m2[k] - &m1[k] * 8.0 + &p1[k] * 8.0 - &p2[k]) / (12.0 * H))
                .collect()
        })
        .collect();
    // R^l_{ijk} = ∂_i Γ^l_{jk} − ∂_j Γ^l_{ik} + Γ^l_{im}Γ^m_{jk} − Γ^l_{jm}Γ^m_{ik}
    let mut out = vec![0.0; dim];
    for (l, slot) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    let w = x[i] * y[j] * z[k];
                    if w == 0.0 {
                        continue;
                    }
                    let mut r = dgamma[i][l][(j, k)] - dgamma[j][l][(i, k)];
                    for m in 0..dim {
                        r += gamma[l][(i, m)] * gamma[m][(j, k)] - gamma[l][(j, m)] * gamma[m][(i, k)];
                    }
                    acc += w * r;
                }
            }
        }
        *slot = acc;
    }
    out
}

/// `∇_X ξ` for `ξ = 2∂_z`, from the Christoffel symbols.
pub fn nabla_xi(p: &[f64], x: &[f64]) -> Vec<f64> {
    let dim = p.len();
    let gamma = christoffel(p);
    (0..dim)
        .map(|k| (0..dim).map(|i| 2.0 * gamma[k][(i, dim - 1)] * x[i]).sum())
        .collect()
}

pub fn random_vec<R: Rng>(rng: &mut R, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-scale..scale)).collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}
