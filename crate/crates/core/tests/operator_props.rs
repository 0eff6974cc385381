use proptest::prelude::*;
use varlex_core::domain::{BoundingBox, CubeLattice, Grid, GridFunction};
use varlex_core::maximal::{maximal, MaximalSpec};
use varlex_core::symbols::{lipschitz_seminorm, CubeFunctional};

fn grid() -> Grid<f64> {
    Grid::new(BoundingBox::unit(1).unwrap(), 64).unwrap()
}

fn lattice() -> CubeLattice<f64> {
    CubeLattice::new(BoundingBox::unit(1).unwrap(), 0, 6).unwrap()
}

fn values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, 64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn maximal_is_sublinear_and_dominates(v in values(), w in values(), c in 0.01f64..10.0) {
        let spec = MaximalSpec::hardy_littlewood(lattice());
        let f = GridFunction::new(grid(), v).unwrap();
        let g = GridFunction::new(grid(), w).unwrap();
        let (mf, mg) = (maximal(&spec, &f).unwrap(), maximal(&spec, &g).unwrap());
        let mfg = maximal(&spec, &f.add(&g).unwrap()).unwrap();
        let mcf = maximal(&spec, &f.scale(c)).unwrap();
        for i in 0..f.len() {
            prop_assert!(mfg.value(i) <= mf.value(i) + mg.value(i) + 1e-12);
            prop_assert!((mcf.value(i) - c * mf.value(i)).abs() <= 1e-12 * (1.0 + c * mf.value(i)));
            // The finest lattice level is one grid cell.
            prop_assert!(mf.value(i) >= f.value(i).abs() - 1e-12);
        }
    }

    #[test]
    fn seminorm_ignores_constants_and_scales(v in values(), shift in -10.0f64..10.0, c in 0.01f64..10.0, delta in 0.0f64..1.0) {
        let a = CubeFunctional::power(delta).unwrap();
        let b = GridFunction::new(grid(), v).unwrap();
        let base = lipschitz_seminorm(&b, &a, 1.0, &lattice(), 1e-10).unwrap().seminorm;
        let shifted = lipschitz_seminorm(&b.add_constant(shift), &a, 1.0, &lattice(), 1e-10).unwrap().seminorm;
        let scaled = lipschitz_seminorm(&b.scale(c), &a, 1.0, &lattice(), 1e-10).unwrap().seminorm;
        prop_assert!((shifted - base).abs() <= 1e-9 * (1.0 + base));
        prop_assert!((scaled - c * base).abs() <= 1e-9 * (1.0 + c * base));
    }

    #[test]
    fn seminorm_is_monotone_in_rho(v in values()) {
        let b = GridFunction::new(grid(), v).unwrap();
        let a = CubeFunctional::ConstantOne;
        let s1 = lipschitz_seminorm(&b, &a, 1.0, &lattice(), 1e-10).unwrap().seminorm;
        let s2 = lipschitz_seminorm(&b, &a, 2.0, &lattice(), 1e-10).unwrap().seminorm;
        prop_assert!(s1 <= s2 * (1.0 + 1e-12));
    }
}
