mod common;

use std::io::Write;

use clr_core::generate::{gen_random_instance, GenMetric, GenParams};
use clr_core::instance::{
    build_cost_matrix, derive_ufl, parse_instance, parse_instance_str, raw_cost_matrix, write_canonical, InstanceError,
    InstanceFormat,
};
use clr_core::{ExactInstance, Instance, Instance32, Rational64};
use common::{close, euclid};
use proptest::prelude::*;

const GAS_HEADER: &str = "\
CLR 5 22 4500
D 1 10 10 100 0
D 2 20 10 100 0
D 3 30 10 100 0
D 4 40 10 100 0
D 5 50 10 100 0
";

fn gas_like() -> String {
    let mut s = GAS_HEADER.to_string();
    for j in 0..22 {
        s.push_str(&format!("C {} {} {} {}\n", 6 + j, j * 3, 40 + j % 5, 100 + j));
    }
    s
}

#[test]
fn canonical_file_header_counts() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(gas_like().as_bytes()).unwrap();
    let inst: Instance = parse_instance(f.path(), InstanceFormat::Canonical).unwrap();
    assert_eq!(inst.num_depots(), 5);
    assert_eq!(inst.num_customers(), 22);
    assert_eq!(inst.capacity(), 4500.0);
}

#[test]
fn missing_file_is_io_error() {
    let err = parse_instance::<f64>(std::path::Path::new("/nonexistent/x.clr"), InstanceFormat::Canonical).unwrap_err();
    assert!(matches!(err, InstanceError::Io(_)));
}

#[test]
fn three_four_five() {
    let inst: Instance =
        parse_instance_str("CLR 1 1 1\nD 1 0 0 0 0\nC 2 3 4 1\n", "t", InstanceFormat::Canonical).unwrap();
    assert_eq!(inst.cost(0, 1), 5.0);
}

#[test]
fn vehicle_cost_folded_into_depot_edges() {
    let inst: Instance =
        parse_instance_str("CLR 1 1 1\nD 1 0 0 0 3\nC 2 2 0 1\n", "t", InstanceFormat::Canonical).unwrap();
    assert_eq!(inst.cost(0, 1), 3.5);
    assert_eq!(raw_cost_matrix(&inst).unwrap().get(0, 1), 2.0);
}

#[test]
fn unit_triangle_costs() {
    let inst: Instance = euclid(&[(0.0, 0.0, 0.0)], &[(1.0, 0.0, 1.0), (0.0, 1.0, 1.0)], 1.0);
    let w = build_cost_matrix(&inst).unwrap();
    assert_eq!(w.get(0, 1), 1.0);
    assert_eq!(w.get(0, 2), 1.0);
    assert!(close(w.get(1, 2), 2f64.sqrt(), 1e-15));
}

#[test]
fn explicit_matrix_violating_triangle_rejected() {
    let text = "CLR 1 2 1\nD 1 - - 0 0\nC 2 - - 1\nC 3 - - 1\nMATRIX\n0 1 10\n1 0 1\n10 1 0\n";
    let err = parse_instance_str::<f64>(text, "t", InstanceFormat::Canonical).unwrap_err();
    assert!(matches!(err, InstanceError::MetricViolation { .. }));
}

#[test]
fn canonical_round_trip_all_scalars() {
    let p = GenParams { metric: GenMetric::Manhattan, ..GenParams::default() };
    let inst: Instance = gen_random_instance(11, &p);
    let text = write_canonical(&inst);
    let back: Instance = parse_instance_str(&text, &inst.name, InstanceFormat::Canonical).unwrap();
    assert_eq!(write_canonical(&back), text);
    let exact: ExactInstance = parse_instance_str(&text, "t", InstanceFormat::Canonical).unwrap();
    let single: Instance32 = parse_instance_str(&text, "t", InstanceFormat::Canonical).unwrap();
    for a in 0..inst.num_vertices() {
        for b in 0..inst.num_vertices() {
            assert_eq!(exact.cost(a, b), Rational64::from_integer(inst.cost(a, b) as i64));
            assert_eq!(single.cost(a, b) as f64, inst.cost(a, b));
        }
    }
}

#[test]
fn barreto_file_rejects_ambiguous_trailer() {
    // Valid tuzun layout (one trailing value) is not a valid barreto layout.
    let text = "1\n1\n0 0\n3 4\n10\n100\n2\n7\n5\n";
    assert!(parse_instance_str::<f64>(text, "t", InstanceFormat::Tuzun).is_ok());
    assert!(matches!(parse_instance_str::<f64>(text, "t", InstanceFormat::Barreto), Err(InstanceError::Parse { .. })));
}

#[test]
fn ufl_examples() {
    // k=4, w=2, phi=3, alpha=1.461
    let inst: Instance = euclid(&[(0.0, 0.0, 3.0)], &[(2.0, 0.0, 1.0)], 4.0);
    let u = derive_ufl(&inst, 1.461).unwrap();
    assert_eq!(u.connection[0][0], 1.0);
    assert!(close(u.opening[0], 4.383, 1e-12));

    // alpha=1, k=2: identity
    let inst: Instance = euclid(&[(0.0, 0.0, 7.0), (5.0, 5.0, 2.0)], &[(2.0, 1.0, 1.0), (3.0, 3.0, 2.0)], 2.0);
    let u = derive_ufl(&inst, 1.0).unwrap();
    for d in 0..2 {
        assert_eq!(u.opening[d], inst.opening_cost(d));
        for (j, v) in inst.customer_vertices().enumerate() {
            assert_eq!(u.connection[d][j], inst.cost(d, v));
        }
    }
    assert_eq!(u.demands, vec![1.0, 2.0]);

    // k=160, w=80, phi=100, alpha=0.4
    let inst: Instance = euclid(&[(0.0, 0.0, 100.0)], &[(80.0, 0.0, 1.0)], 160.0);
    let u = derive_ufl(&inst, 0.4).unwrap();
    assert_eq!(u.connection[0][0], 1.0);
    assert!(close(u.opening[0], 40.0, 1e-12));

    assert!(derive_ufl(&inst, 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ufl_opening_is_linear(seed in 0u64..10_000, a in 1i64..20, c in 1i64..20) {
        let p = GenParams { m: 3, n: 6, metric: GenMetric::Manhattan, ..GenParams::default() };
        let inst: ExactInstance = gen_random_instance(seed, &p);
        let alpha = Rational64::new(a, 7);
        let c = Rational64::new(c, 5);
        let base = derive_ufl(&inst, alpha).unwrap();
        let scaled = derive_ufl(&inst, alpha * c).unwrap();
        for u in 0..inst.num_depots() {
            prop_assert_eq!(base.opening[u] * c, scaled.opening[u]);
        }
        prop_assert_eq!(base.connection, scaled.connection);
    }

    #[test]
    fn zero_vehicle_cost_matrix_is_raw(seed in 0u64..10_000) {
        let inst: Instance = gen_random_instance(seed, &GenParams::default());
        let w = build_cost_matrix(&inst).unwrap();
        let raw = raw_cost_matrix(&inst).unwrap();
        prop_assert_eq!(w, raw);
    }

    #[test]
    fn generated_instances_are_metric(seed in 0u64..10_000) {
        let inst: Instance = gen_random_instance(seed, &GenParams::default());
        prop_assert!(inst.costs().check_metric().is_ok());
    }
}
