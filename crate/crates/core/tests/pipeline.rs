use std::sync::Arc;

use twistlab_core::discriminants::admissible_classes;
use twistlab_core::lvalue::{LValueCache, LValueEngine, SmoothCutoff, DEFAULT_EPS};
use twistlab_core::moments::{
    central_values_between, first_moment, fractional_moment_ratio, FirstMomentSettings,
};
use twistlab_core::{CoefficientTable, CurveModel};

fn setup(x: u64) -> (CurveModel, Arc<CoefficientTable>) {
    let e = CurveModel::congruent_number_curve();
    let n = LValueEngine::required_table_size(&e, x, DEFAULT_EPS, 1.0);
    let t = Arc::new(CoefficientTable::build(&e, n).unwrap());
    (e, t)
}

#[test]
fn cached_values_are_reused_bit_for_bit() {
    let (e, t) = setup(3000);
    let class = &admissible_classes(&e)[1];
    let engine = LValueEngine::new(&e, class, t, DEFAULT_EPS).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let cache = LValueCache::open(dir.path(), e.hash(), DEFAULT_EPS, 1.0).unwrap();
    let fresh = central_values_between(&engine, 1, 3000, false, Some(&cache)).unwrap();
    assert!(!fresh.is_empty());
    let reopened = LValueCache::open(dir.path(), e.hash(), DEFAULT_EPS, 1.0).unwrap();
    assert_eq!(reopened.len(), fresh.len());
    let again = central_values_between(&engine, 1, 3000, false, Some(&reopened)).unwrap();
    assert_eq!(again, fresh);
    let direct = central_values_between(&engine, 1, 3000, false, None).unwrap();
    assert_eq!(direct, fresh);
}

#[test]
fn literal_and_collapsed_sums_agree() {
    let (e, t) = setup(2000);
    for class in admissible_classes(&e).iter().take(3) {
        let engine = LValueEngine::new(&e, class, t.clone(), DEFAULT_EPS).unwrap();
        for cv in central_values_between(&engine, 1, 2000, false, None)
            .unwrap()
            .into_iter()
            .step_by(7)
        {
            let lit = engine.central_value_literal(cv.d).unwrap();
            assert!(
                (lit.value - cv.value).abs() < 1e-8,
                "d={}: {} vs {}",
                cv.d,
                lit.value,
                cv.value
            );
        }
    }
}

#[test]
fn sharp_and_smooth_first_moments_have_the_same_order() {
    let x = 8000u64;
    let (e, t) = setup(5 * x / 2 + 1);
    let class = &admissible_classes(&e)[0];
    let engine = LValueEngine::new(&e, class, t, DEFAULT_EPS).unwrap();
    let cut = SmoothCutoff::default();
    let smooth = first_moment(
        &engine,
        &cut,
        1,
        1,
        x,
        &FirstMomentSettings {
            euler_cutoff: 100_000,
        },
        None,
    )
    .unwrap();
    let values = central_values_between(&engine, 1, x, false, None).unwrap();
    // sharp sum over |d| <= X with k = 1 against the smooth main term per unit X
    let sharp = fractional_moment_ratio(&values, x, &[x], 1.0).unwrap()[0] * x as f64;
    let smooth_per_unit = smooth.oracle / cut.mellin_at_zero();
    let r = sharp / smooth_per_unit;
    assert!(
        (0.5..2.0).contains(&r),
        "sharp {sharp} vs smooth {smooth_per_unit}"
    );
}
