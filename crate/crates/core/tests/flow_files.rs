use bilip::flows::{fit_projected_gradient, FitOptions, Flow};
use bilip::quadrature::integrate_with_breaks;
use bilip::{PiecewiseLinearFlow64, Target64};

#[test]
fn fitted_flow_survives_csv_and_is_a_density() {
    let t = Target64::separated_bimodal(2.0, 0.2).unwrap();
    let fit = fit_projected_gradient(&t, 8.0, 4.0, &FitOptions { steps: 40, ..FitOptions::default() }).unwrap();
    let back = PiecewiseLinearFlow64::from_csv(&fit.flow.to_csv()).unwrap();
    assert_eq!(back, fit.flow);
    let c = back.certify();
    assert!(c.l1() <= 8.0 && c.l2() <= 4.0);

    let knots = back.knots_x().to_vec();
    let mass = integrate_with_breaks(&|x| back.density_1d(x), -40.0, 40.0, &knots, 8, 1e-12);
    assert!((mass.value - 1.0).abs() < 1e-9, "{}", mass.value);
}
