use proptest::prelude::*;
use twistlab_core::moments::{round_sig, DistributionReport, MomentReport};

proptest! {
    #[test]
    fn moment_report_json_round_trip(
        x in 10.0f64..1e9,
        k in 0u32..8,
        empirical in -1e6f64..1e6,
        oracle in -1e6f64..1e6,
        extra in prop::collection::btree_map("[a-z_]{1,8}", -1e3f64..1e3, 0..4),
    ) {
        let mut r = MomentReport::new("probe", x, k as f64, empirical, oracle, 0.25);
        for (key, v) in &extra {
            r = r.with_detail(key, *v);
        }
        let json = serde_json::to_string(&r).unwrap();
        let back: MomentReport = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(&back, &r);
        prop_assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }

    #[test]
    fn rounding_is_idempotent_and_close(v in -1e12f64..1e12) {
        let r = round_sig(v);
        prop_assert_eq!(round_sig(r), r);
        prop_assert!((r - v).abs() <= 1e-11 * v.abs());
    }
}

#[test]
fn report_field_names() {
    let r = MomentReport::new("first", 2e4, 1.0, 3.0, 2.0, 0.0);
    let json: serde_json::Value = serde_json::to_value(&r).unwrap();
    assert_eq!(json["X"], 20000.0);
    assert_eq!(json["rel_err"], 0.5);
    assert!(json.get("details").is_none());
    let z = MomentReport::new("odd", 1e4, 3.0, 0.1, 0.0, 0.0);
    assert_eq!(
        serde_json::to_value(&z).unwrap()["rel_err"],
        serde_json::Value::Null
    );
    assert_eq!(z.ratio(), None);
}

#[test]
fn distribution_report_round_trip() {
    let r = DistributionReport {
        label: "log L".into(),
        x: 1e5,
        adjust: false,
        v_grid: vec![-1.0, 0.0, 1.0],
        empirical_tail: vec![0.9, 0.6, 0.1],
        gaussian_tail: vec![0.841344746069, 0.5, 0.158655253931],
        sample_size: 10,
        zero_count: 1,
        runtime_s: 0.0,
    };
    let back: DistributionReport =
        serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(back, r);
    assert_eq!(back.tail_at(0.0), Some(0.6));
    assert_eq!(back.tail_at(0.5), None);
    assert!((back.zero_share() - 0.1).abs() < 1e-15);
}
