use proptest::prelude::*;
use varlex_core::domain::{BoundingBox, DyadicCube, Grid, Rect};
use varlex_core::exponent::ExponentField;
use varlex_core::gphi::{default_conjugate_grid, power_conjugate, GPhiFunction, PowerLog};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn children_partition_the_parent(level in -6i32..8, i in -50i64..50, j in -50i64..50, dim in 1usize..=2) {
        let q = DyadicCube::new(dim, level, [i, if dim == 2 { j } else { 0 }]);
        let kids = q.children();
        prop_assert_eq!(kids.len(), 1 << dim);
        let total: f64 = kids.iter().map(|c| c.measure::<f64>()).sum();
        prop_assert!((total - q.measure::<f64>()).abs() <= 1e-12 * q.measure::<f64>());
        for c in &kids {
            prop_assert_eq!(c.parent(), q);
            prop_assert!(c.is_within(&q));
        }
    }

    #[test]
    fn containing_cube_contains_the_point(level in -4i32..12, x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let q = DyadicCube::containing(2, level, &[x, y]);
        prop_assert!(q.rect::<f64>().contains_point(&[x, y]));
    }

    #[test]
    fn cell_overlaps_sum_to_the_clipped_measure(lo in 0.0f64..1.0, side in 0.001f64..0.8) {
        let grid = Grid::new(BoundingBox::<f64>::unit(1).unwrap(), 128).unwrap();
        let r = Rect::cube(1, [lo, 0.0], side);
        let total: f64 = grid.overlaps(&r).iter().map(|e| e.1).sum();
        let clipped = (lo + side).min(1.0) - lo;
        prop_assert!((total - clipped).abs() <= 1e-12);
    }

    #[test]
    fn clamped_fields_stay_in_range(slope in -5.0f64..5.0, intercept in 0.0f64..4.0, x in 0.0f64..1.0) {
        let b = BoundingBox::unit(1).unwrap();
        let p = ExponentField::affine_clamped([slope, 0.0], intercept, 1.2, 3.0, b).unwrap();
        let v = p.value(&[x, 0.0]);
        prop_assert!((1.2..=3.0).contains(&v));
        prop_assert!(p.p_minus() <= v && v <= p.p_plus());
        let pc = p.conjugate().unwrap();
        prop_assert!((1.0 / v + 1.0 / pc.value(&[x, 0.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn region_extremes_within_global_bounds(lo in 0.0f64..0.9, side in 0.01f64..0.1) {
        let b = BoundingBox::unit(1).unwrap();
        let p = ExponentField::log_smooth(2.0, 0.3, [0.5, 0.0], b).unwrap();
        let (mn, mx) = p.extremes(&Rect::cube(1, [lo, 0.0], side)).unwrap();
        prop_assert!(mn <= mx);
        prop_assert!(p.p_minus() - 1e-12 <= mn && mx <= p.p_plus() + 1e-12);
    }

    #[test]
    fn power_log_is_increasing_and_inverted(alpha in 1.0f64..4.0, theta in 0.0f64..2.0, t in 1e-6f64..1e6) {
        let f = PowerLog::new(alpha, theta);
        prop_assert!(f.eval(t * 1.01) > f.eval(t));
        let s = f.eval(t);
        let u = f.inverse(s, 1e-12);
        prop_assert!(f.eval(u) >= s);
        prop_assert!((u / t - 1.0).abs() < 1e-8);
    }

    #[test]
    fn young_defect_nonnegative(alpha in 1.1f64..4.0, theta in 0.0f64..1.5, v in 1e-3f64..1e3, u in 1e-3f64..1e3) {
        let phi = GPhiFunction::constant(alpha, theta, BoundingBox::unit(1).unwrap()).unwrap();
        let d = phi.young_defect(&[0.5, 0.0], v, u, &default_conjugate_grid()).unwrap();
        prop_assert!(d >= -1e-9 * (1.0 + v * u), "{d}");
    }

    #[test]
    fn grid_conjugate_matches_closed_form(p in 1.1f64..4.0, u in 1e-2f64..1e2) {
        // The maximizer u^{1/(p−1)} must lie inside the default t-grid.
        let t_star = u.powf(1.0 / (p - 1.0));
        prop_assume!((1e-7..=1e7).contains(&t_star));
        let f = PowerLog::power(p);
        let exact = power_conjugate(p, u);
        let grid = default_conjugate_grid::<f64>();
        let approx = f.conjugate(u, &grid);
        prop_assert!(approx <= exact * (1.0 + 1e-12));
        prop_assert!(approx >= exact * (1.0 - 1e-6), "{approx} vs {exact}");
    }
}
