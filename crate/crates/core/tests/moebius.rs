use nalgebra::{Rotation3, Vector2, Vector3};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sphere_rigidity::maps::SphereMap;
use sphere_rigidity::moebius::{
    center_map, homotopy_f, random_moebius, random_moebius_from, random_unit_vector, stereo,
    stereo_inv, MoebiusTransform,
};
use sphere_rigidity::sphere::SphereGrid;
use sphere_rigidity::Error;

fn quadratic_field(x: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new(x[0] * x[1], x[1] * x[2], x[0] * x[0] - x[1] * x[1])
}

fn max_pointwise(a: &MoebiusTransform, b: &MoebiusTransform, samples: &[Vector3<f64>]) -> f64 {
    samples
        .iter()
        .map(|x| (a.apply(x) - b.apply(x)).norm())
        .fold(0.0, f64::max)
}

fn samples(seed: u64, n: usize) -> Vec<Vector3<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_unit_vector(&mut rng)).collect()
}

#[test]
fn stereographic_projection() {
    let e3 = Vector3::z();
    assert_eq!(stereo(&e3, &e3).unwrap(), Vector2::zeros());
    let p = stereo(&e3, &Vector3::x()).unwrap();
    assert!((p.norm() - 2.0).abs() < 1e-15);
    assert!((p - Vector2::new(2.0, 0.0)).norm() < 1e-15, "{p}");
    for x in samples(1, 100) {
        if (x + e3).norm() < 1e-3 {
            continue;
        }
        let back = stereo_inv(&e3, &stereo(&e3, &x).unwrap());
        assert!((back - x).norm() < 1e-12);
    }
    assert!(matches!(
        stereo(&e3, &-e3),
        Err(Error::ProjectionPole { .. })
    ));
}

#[test]
fn dilation_fixes_its_poles() {
    let xi = Vector3::new(1.0, -2.0, 0.5).normalize();
    let phi = MoebiusTransform::dilation(xi, 3.7).unwrap();
    assert!((phi.apply(&xi) - xi).norm() < 1e-15);
    assert!((phi.apply(&-xi) + xi).norm() < 1e-15);
    let unit = MoebiusTransform::dilation(Vector3::z(), 1.0).unwrap();
    for x in samples(2, 20) {
        assert!((unit.apply(&x) - x).norm() < 1e-15);
        assert!((phi.apply(&x).norm() - 1.0).abs() < 1e-13);
    }
}

#[test]
fn dilation_map_is_conformal() {
    let grid = SphereGrid::with_resolution(48).unwrap();
    let u = MoebiusTransform::dilation(Vector3::x(), 3.0)
        .unwrap()
        .as_map(&grid);
    assert!(u.deficit().unwrap().abs() <= 1e-7);
}

#[test]
fn composition_examples() {
    let pts = samples(3, 64);
    let xi = Vector3::new(0.3, 0.4, -0.2).normalize();
    let a = MoebiusTransform::dilation(xi, 2.5).unwrap();
    let b = MoebiusTransform::dilation(xi, 0.7).unwrap();
    let ab = a.compose(&b).unwrap();
    let expected = MoebiusTransform::dilation(xi, 2.5 * 0.7).unwrap();
    assert!(max_pointwise(&ab, &expected, &pts) < 1e-11);

    let inv = a.inverse();
    let expected = MoebiusTransform::dilation(xi, 1.0 / 2.5).unwrap();
    assert!(max_pointwise(&inv, &expected, &pts) < 1e-12);
    assert!(
        max_pointwise(
            &a.compose(&inv).unwrap(),
            &MoebiusTransform::identity(),
            &pts
        ) < 1e-11
    );

    let r = Rotation3::new(Vector3::new(0.2, -1.0, 0.4)).into_inner();
    let ra = MoebiusTransform::from_rotation(r)
        .unwrap()
        .compose(&a)
        .unwrap();
    assert!((ra.rotation() - r).norm() < 1e-12);
    assert!((ra.xi() - xi).norm() < 1e-12);
    assert!((ra.lambda() - 2.5).abs() < 1e-12);
}

#[test]
fn homotopy_examples() {
    let grid = SphereGrid::with_resolution(24).unwrap();
    let id = SphereMap::identity(grid.clone());
    for xi in samples(4, 5) {
        assert!(homotopy_f(&id, &xi, 1.0).unwrap().norm() < 1e-15);
    }
    let shifted = SphereMap::from_fn(grid.clone(), |x| x + Vector3::new(0.0, 0.3, 0.1)).unwrap();
    let b = shifted.mean();
    for xi in samples(5, 5) {
        assert_eq!(homotopy_f(&shifted, &xi, 1.0).unwrap(), b);
    }
    let phi = MoebiusTransform::dilation(Vector3::z(), 2.0)
        .unwrap()
        .as_map(&grid);
    assert!(homotopy_f(&phi, &Vector3::z(), 0.5).unwrap().norm() < 1e-9);
}

#[test]
fn centering_identity_is_trivial() {
    let grid = SphereGrid::with_resolution(16).unwrap();
    let c = center_map(&SphereMap::identity(grid)).unwrap();
    assert_eq!(c.psi.lambda(), 1.0);
    assert!(c.residual.norm() < 1e-15);
    assert_eq!(c.iterations, 0);
}

#[test]
fn centering_moebius_maps() {
    let grid = SphereGrid::with_resolution(48).unwrap();
    let pts = samples(6, 64);
    for seed in 0..4 {
        let phi = MoebiusTransform::dilation(samples(100 + seed, 1)[0], 0.3 + seed as f64).unwrap();
        let u = phi.as_map(&grid);
        let c = center_map(&u).unwrap();
        assert!(c.residual.norm() <= 1e-8);
        assert!(c.psi.lambda() > 0.0 && c.psi.lambda() <= 1.0);
        let centered = u.precompose(|x| c.psi.apply(x)).unwrap();
        assert!(centered.mean().norm() <= 1e-8);
        // φ∘ψ has zero mean, so it is a rotation.
        let composite = phi.compose(&c.psi).unwrap();
        let rotation = MoebiusTransform::from_rotation(*composite.canonical().rotation()).unwrap();
        assert!(
            max_pointwise(&composite, &rotation, &pts) < 1e-6,
            "{composite:?}"
        );
    }
}

#[test]
fn centering_perturbed_dilation() {
    let grid = SphereGrid::with_resolution(48).unwrap();
    let phi = MoebiusTransform::dilation(Vector3::x(), 2.0).unwrap();
    let u = SphereMap::from_fn(grid.clone(), |x| phi.apply(x) + quadratic_field(x) * 0.1).unwrap();
    let c = center_map(&u).unwrap();
    assert!(c.residual.norm() <= 1e-8);
    assert!(c.psi.lambda() > 0.0 && c.psi.lambda() <= 1.0);
    let centered = u.precompose(|x| c.psi.apply(x)).unwrap();
    assert!(centered.mean().norm() <= 1e-8);
    assert!((centered.deficit().unwrap() - u.deficit().unwrap()).abs() <= 1e-7);
}

#[test]
fn centering_rejects_wrong_degree() {
    let grid = SphereGrid::with_resolution(16).unwrap();
    let u = SphereMap::identity(grid).reflect();
    assert!(matches!(center_map(&u), Err(Error::InvalidArgument(_))));
}

#[test]
fn random_transforms() {
    assert_eq!(
        random_moebius(9, (0.25, 4.0)).unwrap(),
        random_moebius(9, (0.25, 4.0)).unwrap()
    );
    assert_ne!(
        random_moebius(9, (0.25, 4.0)).unwrap(),
        random_moebius(10, (0.25, 4.0)).unwrap()
    );
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut xi_sum = Vector3::zeros();
    for _ in 0..1000 {
        let m = random_moebius_from(&mut rng, (1.0, 1.0)).unwrap();
        assert!(m.is_rotation());
        xi_sum += m.xi();
    }
    // Standard error of the mean of 1000 uniform unit vectors is about 0.018.
    assert!((xi_sum / 1000.0).norm() <= 0.1);
    assert!(random_moebius(0, (0.01, 4.0)).is_err());
}

#[test]
fn line_round_trip() {
    let m = random_moebius(77, (0.25, 4.0)).unwrap();
    assert_eq!(MoebiusTransform::from_line(&m.to_line()).unwrap(), m);
    assert!(MoebiusTransform::from_line("1 2 3").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn group_laws(sa in any::<u64>(), sb in any::<u64>(), sc in any::<u64>()) {
        let range = (0.25, 4.0);
        let (a, b, c) = (
            random_moebius(sa, range).unwrap(),
            random_moebius(sb, range).unwrap(),
            random_moebius(sc, range).unwrap(),
        );
        let pts = samples(sa ^ sb, 32);
        let left = a.compose(&b).unwrap().compose(&c).unwrap();
        let right = a.compose(&b.compose(&c).unwrap()).unwrap();
        prop_assert!(max_pointwise(&left, &right, &pts) < 1e-10);
        let ab = a.compose(&b).unwrap();
        for x in &pts {
            prop_assert!((ab.apply(x) - a.apply(&b.apply(x))).norm() < 1e-11);
        }
        let id = MoebiusTransform::identity();
        prop_assert!(max_pointwise(&a.compose(&a.inverse()).unwrap(), &id, &pts) < 1e-11);
        prop_assert!(max_pointwise(&a.inverse().compose(&a).unwrap(), &id, &pts) < 1e-11);
    }

    #[test]
    fn transforms_stay_on_the_sphere(seed in any::<u64>()) {
        let m = random_moebius(seed, (0.1, 10.0)).unwrap();
        prop_assert!((m.rotation().transpose() * m.rotation() - nalgebra::Matrix3::identity()).norm() < 1e-12);
        prop_assert!((m.rotation().determinant() - 1.0).abs() < 1e-12);
        for x in samples(seed, 16) {
            prop_assert!((m.apply(&x).norm() - 1.0).abs() < 1e-13);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn centering_bound_holds_after_rotation(seed in any::<u64>()) {
        let grid = SphereGrid::with_resolution(32).unwrap();
        let phi = random_moebius(seed, (0.25, 4.0)).unwrap();
        let u = SphereMap::from_fn(grid.clone(), |x| phi.apply(x) + quadratic_field(x) * 0.05).unwrap();
        let r = sphere_rigidity::moebius::random_rotation(&mut ChaCha8Rng::seed_from_u64(seed ^ 1));
        for map in [u.clone(), u.rotate(&r)] {
            let c = center_map(&map).unwrap();
            prop_assert!(c.residual.norm() <= 1e-8);
            let centered = map.precompose(|x| c.psi.apply(x)).unwrap();
            prop_assert!(centered.mean().norm() <= 1e-8);
        }
    }
}
