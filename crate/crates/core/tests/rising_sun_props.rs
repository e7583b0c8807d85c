use std::sync::Arc;

use proptest::prelude::*;
use strongweights_core::grid::{AxisGrid, Rect};
use strongweights_core::measure::GridMeasure;
use strongweights_core::rising_sun::{rising_sun_1d, rising_sun_nd, RisingSunDecomposition};

fn instance(dims: Vec<usize>, dens: Vec<f64>, vals: Vec<f64>) -> (GridMeasure, Vec<f64>) {
    let n = dims.len();
    let g = Arc::new(AxisGrid::uniform(&vec![0.0; n], &vec![1.0; n], &dims).unwrap());
    let cells = g.cell_count();
    (GridMeasure::from_densities(g, &dens[..cells]).unwrap(), vals[..cells].to_vec())
}

fn check(d: &RisingSunDecomposition, f: &[f64], mu: &GridMeasure, root: &Rect) {
    let lambda = d.level;
    let ft = mu.weighted_table(f);
    for (r, a) in d.rects.iter().zip(&d.averages) {
        assert!(root.contains_rect(r));
        assert!((a - lambda).abs() <= 1e-10 * lambda, "average {a} vs {lambda}");
    }
    for (i, r) in d.rects.iter().enumerate() {
        for q in &d.rects[i + 1..] {
            let overlap = r.intersection(q).map_or(0.0, |x| mu.table().query(&x));
            assert!(overlap.abs() <= 1e-14, "overlap {overlap}");
        }
    }
    assert!(d.residual_max <= lambda * (1.0 + 1e-12), "residual {} > {lambda}", d.residual_max);
    let mass = d.selected_mass(mu);
    let integral: f64 = d.rects.iter().map(|r| ft.query(r)).sum();
    assert!((lambda * mass - integral).abs() <= 1e-10 * integral.max(1e-300));
}

fn level_for(f: &[f64], mu: &GridMeasure, root: &Rect, t: f64) -> f64 {
    let avg = mu.weighted_table(f).query(root) / mu.table().query(root);
    let top = f.iter().cloned().fold(0.0, f64::max);
    avg + t * (top - avg)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn one_dimensional_postconditions_on_both_paths(
        n in 1usize..9,
        dens in prop::collection::vec(0.125f64..1.0, 8),
        vals in prop::collection::vec(0.125f64..1.0, 8),
        t in 0.0f64..1.0,
        ends in (0.0f64..0.4, 0.6f64..1.0),
    ) {
        let (mu, f) = instance(vec![n], dens, vals);
        let root = Rect::interval(ends.0, ends.1);
        let lambda = level_for(&f, &mu, &root, t);
        let a = rising_sun_1d(&f, &mu, &root, lambda).unwrap();
        let b = rising_sun_nd(&f, &mu, &root, lambda).unwrap();
        check(&a, &f, &mu, &root);
        check(&b, &f, &mu, &root);
    }

    #[test]
    fn two_dimensional_postconditions(
        nx in 1usize..7,
        ny in 1usize..7,
        dens in prop::collection::vec(0.125f64..1.0, 36),
        vals in prop::collection::vec(0.125f64..1.0, 36),
        t in 0.0f64..1.0,
    ) {
        let (mu, f) = instance(vec![nx, ny], dens, vals);
        let root = mu.grid().domain();
        let lambda = level_for(&f, &mu, &root, t);
        let d = rising_sun_nd(&f, &mu, &root, lambda).unwrap();
        check(&d, &f, &mu, &root);
    }
}
