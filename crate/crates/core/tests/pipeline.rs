use finsler_core::distance::{DistanceOracle, OracleOptions};
use finsler_core::domain::{Domain, Shape};
use finsler_core::minkowski::{MatrixField, OneFormField};
use finsler_core::reconstruction::{
    boundary_norm_recovery, embedding_check, extend_to_boundary, match_datasets, recover_norm_at, BoundaryDistanceData,
    Engine, RecoveryOptions,
};
use finsler_core::FiberNorm;
use proptest::prelude::*;

fn randers() -> FiberNorm {
    FiberNorm::randers(MatrixField::identity(2), OneFormField::constant(&[0.3, 0.2])).unwrap()
}

#[test]
fn ellipse_data_through_recovery() {
    let domain = Domain::new(
        Shape::Ellipse {
            center: [0.0, 0.0],
            semi_x: 1.2,
            semi_y: 0.8,
        },
        96,
    )
    .unwrap();
    let f = randers();
    let oracle = DistanceOracle::new(&f, &domain, OracleOptions::new(0.04)).unwrap();
    let eps = oracle.tolerance();

    let data = BoundaryDistanceData::generate(&oracle, &domain.interior_samples(30, 0.0, 3)).unwrap();
    let blind = BoundaryDistanceData::from_json(&data.clone().blinded().to_json().unwrap()).unwrap();
    assert!(blind.sources.is_none());

    let emb = embedding_check(&blind, eps, None).unwrap();
    assert!(emb.collisions.is_empty());
    assert!(emb.min_ratio.is_none());

    let m = match_datasets(&data, &blind, None, eps).unwrap();
    assert!(m.exact);
    assert!(m.assignment.iter().enumerate().all(|(i, &j)| i == j));

    let engine = Engine::new(&oracle);
    let rec = recover_norm_at(&engine, &[0.3, 0.1], &RecoveryOptions::default()).unwrap();
    assert_eq!(rec.coverage, 1.0);
    assert!(rec.max_relative_error().unwrap() < 2e-2);

    // outward vectors at the boundary: difference quotients of d(z - s y, z)
    let theta = 0.4;
    let y = [0.3, 0.1];
    let got = boundary_norm_recovery(&engine, theta, &y).unwrap();
    let want = f.value(&domain.point(theta), &y);
    assert!((got - want).abs() <= 1e-2 * want, "{got} vs {want}");
}

#[test]
fn extension_is_bounded_by_the_data() {
    let domain = Domain::unit_disk(64);
    let oracle = DistanceOracle::new(&randers(), &domain, OracleOptions::new(0.04)).unwrap();
    let data = BoundaryDistanceData::generate(&oracle, &domain.interior_samples(40, 0.0, 4)).unwrap();
    let ext = extend_to_boundary(&data);
    for (x, row) in ext.iter().enumerate() {
        assert_eq!(row[x], 0.0);
        for (z, &v) in row.iter().enumerate() {
            let direct = oracle.distance(&data.mesh[x].point, &data.mesh[z].point).unwrap();
            // a sup over interior sources never exceeds the true distance
            assert!(v <= direct + oracle.abs_tolerance(direct) * 2.0, "{x} {z}: {v} > {direct}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn boundary_rows_respect_triangle_inequality(
        ax in -0.5f64..0.5, ay in -0.5f64..0.5, bx in -0.5f64..0.5, by in -0.5f64..0.5,
    ) {
        let domain = Domain::unit_disk(48);
        let oracle = DistanceOracle::new(&randers(), &domain, OracleOptions::new(0.08)).unwrap();
        let (a, b) = ([ax, ay], [bx, by]);
        let data = BoundaryDistanceData::generate(&oracle, &[a, b]).unwrap();
        let dab = oracle.distance(&a, &b).unwrap();
        // r_a(z) <= d(a, b) + r_b(z)
        for (ra, rb) in data.r_vectors[0].iter().zip(&data.r_vectors[1]) {
            prop_assert!(*ra <= dab + rb + oracle.abs_tolerance(dab + rb));
        }
    }
}
