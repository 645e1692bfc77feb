mod common;

use common::{christoffel, dist, metric, nabla_xi, norm, random_vec, riemann};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sesqui_core::analyzer::{direct_fields, Parametrization};
use sesqui_core::model::{
    coords_to_frame, curvature_frame, curvature_general, eta, frame_connection, frame_phi, frame_to_coords, metric as g,
    phi, xi, SpaceFormParams,
};
use sesqui_core::{CurveSpec, DeltaPair, ModelPoint, TangentVec};

fn point(coords: &[f64]) -> ModelPoint {
    ModelPoint::new(coords.to_vec()).unwrap()
}

fn vector(p: &ModelPoint, comps: &[f64]) -> TangentVec {
    TangentVec::new(p.clone(), comps.to_vec()).unwrap()
}

fn coords_strategy(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, dim)
}

#[test]
fn oracle_metric_matches_library() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 1..=3 {
        let dim = 2 * n + 1;
        for _ in 0..20 {
            let c = random_vec(&mut rng, dim, 2.0);
            let p = point(&c);
            let (u, v) = (random_vec(&mut rng, dim, 1.0), random_vec(&mut rng, dim, 1.0));
            let m = metric(&c);
            let want: f64 = (0..dim).flat_map(|a| (0..dim).map(move |b| (a, b))).map(|(a, b)| u[a] * m[(a, b)] * v[b]).sum();
            let got = g(&p, &vector(&p, &u), &vector(&p, &v)).unwrap();
            assert!((want - got).abs() < 1e-13);
        }
    }
}

#[test]
fn christoffels_are_symmetric() {
    let gamma = christoffel(&[0.3, -0.7, 1.1, 0.4, -0.2]);
    for k in &gamma {
        assert!((k - k.transpose()).amax() < 1e-9);
    }
}

#[test]
fn space_form_curvature_matches_finite_difference_riemann() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in [1, 2] {
        let dim = 2 * n + 1;
        let params = SpaceFormParams::model(n).unwrap();
        for _ in 0..10 {
            let c = random_vec(&mut rng, dim, 1.5);
            let p = point(&c);
            let (x, y, z) = (random_vec(&mut rng, dim, 1.0), random_vec(&mut rng, dim, 1.0), random_vec(&mut rng, dim, 1.0));
            let want = riemann(&c, &x, &y, &z);
            let got = curvature_general(&params, &vector(&p, &x), &vector(&p, &y), &vector(&p, &z)).unwrap();
            let rel = dist(&want, got.comps()) / norm(&want).max(1e-3);
            assert!(rel < 1e-6, "relative error {rel:e}");
            // Frame-component form agrees with the coordinate form.
            let yv = &c[n..2 * n];
            let framed = curvature_frame(-3.0, &coords_to_frame(yv, &x), &coords_to_frame(yv, &y), &coords_to_frame(yv, &z));
            assert!(dist(&frame_to_coords(yv, &framed), got.comps()) < 1e-12 * norm(got.comps()).max(1.0));
        }
    }
}

#[test]
fn nabla_xi_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let c = random_vec(&mut rng, 5, 2.0);
        let p = point(&c);
        let x = random_vec(&mut rng, 5, 1.0);
        let want = nabla_xi(&c, &x);
        let minus_phi: Vec<f64> = phi(&p, &vector(&p, &x)).unwrap().comps().iter().map(|v| -v).collect();
        assert!(dist(&want, &minus_phi) < 1e-8 * norm(&want).max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn phi_squared(c in coords_strategy(5), u in coords_strategy(5)) {
        let p = point(&c);
        let v = vector(&p, &u);
        let pp = phi(&p, &phi(&p, &v).unwrap()).unwrap();
        let e = eta(&p, &v).unwrap();
        let want = v.scaled(-1.0).axpy(e, &xi(&p)).unwrap();
        prop_assert!(dist(pp.comps(), want.comps()) < 1e-12);
    }

    #[test]
    fn phi_is_compatible(c in coords_strategy(7), u in coords_strategy(7), w in coords_strategy(7)) {
        let p = point(&c);
        let (a, b) = (vector(&p, &u), vector(&p, &w));
        let lhs = g(&p, &phi(&p, &a).unwrap(), &phi(&p, &b).unwrap()).unwrap();
        let rhs = g(&p, &a, &b).unwrap() - eta(&p, &a).unwrap() * eta(&p, &b).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn frame_round_trip(c in coords_strategy(5), u in coords_strategy(5)) {
        let y = &c[2..4];
        let back = frame_to_coords(y, &coords_to_frame(y, &u));
        prop_assert!(dist(&back, &u) < 1e-12);
    }

    #[test]
    fn connection_of_xi_in_frame(f in coords_strategy(5)) {
        let mut xi_frame = vec![0.0; 5];
        xi_frame[4] = 1.0;
        let got = frame_connection(&f, &xi_frame);
        let want: Vec<f64> = frame_phi(&f).iter().map(|v| -v).collect();
        prop_assert!(dist(&got, &want) < 1e-12);
    }

    #[test]
    fn curvature_is_antisymmetric_and_bianchi(x in coords_strategy(5), y in coords_strategy(5), z in coords_strategy(5), c in -5.0f64..5.0) {
        let rxy = curvature_frame(c, &x, &y, &z);
        let ryx = curvature_frame(c, &y, &x, &z);
        let scale = norm(&x) * norm(&y) * norm(&z) * (1.0 + c.abs());
        prop_assert!(rxy.iter().zip(&ryx).all(|(a, b)| (a + b).abs() < 1e-12 * scale.max(1.0)));
        let ryz = curvature_frame(c, &y, &z, &x);
        let rzx = curvature_frame(c, &z, &x, &y);
        let cyc: f64 = (0..5).map(|k| (rxy[k] + ryz[k] + rzx[k]).powi(2)).sum::<f64>().sqrt();
        prop_assert!(cyc < 1e-12 * scale.max(1.0));
    }

    #[test]
    fn residual_is_linear_in_delta(t in 0.0f64..6.3, d1 in -5.0f64..5.0, d2 in -5.0f64..5.0, s in -3.0f64..3.0) {
        let spec = CurveSpec::parse(2, &["sin(2*t)", "-cos(2*t)", "0", "0", "1"]).unwrap();
        let fields = direct_fields(&spec, t, -3.0, Parametrization::ArcLength).unwrap();
        let a = fields.residual(DeltaPair::new(d1, d2));
        let b = fields.residual(DeltaPair::new(d1, d2).scaled(s));
        prop_assert!(a.iter().zip(&b).all(|(u, v)| (s * u - v).abs() < 1e-12 * (1.0 + u.abs() * s.abs())));
        let sum = fields.residual(DeltaPair::new(d1 + 1.0, d2 + 2.0));
        let part = fields.residual(DeltaPair::new(1.0, 2.0));
        prop_assert!((0..5).all(|k| (sum[k] - a[k] - part[k]).abs() < 1e-11));
    }
}
