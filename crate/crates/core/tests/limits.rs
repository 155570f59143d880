use illiquid::analytics::{density_grid, empirical_moments};
use illiquid::params::{DAY, MONTH};
use illiquid::series::gaussian_density;
use illiquid::{build_truncated, eval_density, Execution, ModelParams, Truncation};

#[test]
fn zero_spread_is_gaussian_for_every_order() {
    let p = ModelParams::new(0.2, 0.0, 0.0).unwrap();
    for k in 1..=5 {
        let tb = build_truncated(&p, &Truncation::with_default_precision(80, k).unwrap()).unwrap();
        for t in [DAY, MONTH, 1.0] {
            for z in [0.0, 0.5, 1.0, 2.0, 3.0] {
                let x = z * p.std_dev(t);
                let got = eval_density(&tb, x, t).unwrap().value_f64();
                let want = gaussian_density(0.2, t, x);
                assert!((got / want - 1.0).abs() < 1e-12, "K={k} t={t} z={z}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn density_integrates_to_one() {
    for (eps, k) in [(0.0, 1), (0.005, 3), (0.002, 4)] {
        let p = ModelParams::new(0.1, eps, 0.0).unwrap();
        let tb = build_truncated(&p, &Truncation::with_default_precision(100, k).unwrap()).unwrap();
        let grid = density_grid(&tb, MONTH, 6.0, 2001, Execution::default()).unwrap();
        let m = empirical_moments(&grid).unwrap();
        // Mass beyond 6 sd of a near-Gaussian law is ~2e-9.
        assert!((m.mass - 1.0).abs() < 1e-7, "eps={eps} K={k}: mass {}", m.mass);
    }
}

#[test]
fn sequential_and_parallel_grids_agree() {
    let p = ModelParams::new(0.1, 0.005, -0.4).unwrap();
    let tb = build_truncated(&p, &Truncation::with_default_precision(60, 3).unwrap()).unwrap();
    let a = density_grid(&tb, DAY, 6.0, 301, Execution::Sequential).unwrap();
    let b = density_grid(&tb, DAY, 6.0, 301, Execution::Parallel).unwrap();
    assert_eq!(a, b);
}
