use std::sync::Arc;

use cauchy_core::{
    identify, measure, reconstruct_gamma1, solve_direct, CrossSection, DirectOptions, IdentifyOptions, NoiseSpec,
    NonlinearLaw, RegularizationConfig, SpectralBasis, SpectralBasisF32, TraceFunction, TraceSpace,
};
use proptest::prelude::*;

fn basis(resolution: usize, modes: usize) -> Arc<SpectralBasis<f64>> {
    Arc::new(SpectralBasis::build(CrossSection::interval(1.0, resolution).unwrap(), modes).unwrap())
}

/// Top value of `v = A cosh(s t) + B sinh(s t)` with `-v'(0) = g` and
/// `v'(1) = a v(1)`.
fn linear_robin_top(s: f64, g: f64, a: f64) -> f64 {
    let b = -g / s;
    let amp = (g * s.cosh() - a * g * s.sinh() / s) / (s * s.sinh() - a * s.cosh());
    amp * s.cosh() + b * s.sinh()
}

fn single_mode_flux(basis: &Arc<SpectralBasis<f64>>, k: usize, g: f64) -> TraceFunction<f64> {
    let mut c = vec![0.0; basis.count()];
    c[k] = g;
    TraceFunction::new(basis.clone(), &c, TraceSpace::HalfZeroZeroDual).unwrap()
}

#[test]
fn linear_law_matches_the_closed_form() {
    let b = basis(128, 16);
    for (k, a) in [(0, 0.2), (0, -0.5), (2, 1.0)] {
        let sol = solve_direct(&NonlinearLaw::linear(a), &single_mode_flux(&b, k, 1.0), &DirectOptions::default()).unwrap();
        let s = (k as f64 + 1.0) * std::f64::consts::PI;
        let top = sol.field.trace_top();
        assert!((top.coefficients()[k] - linear_robin_top(s, 1.0, a)).abs() < 1e-12, "k={k} a={a}");
        assert!(top.coefficients().iter().enumerate().all(|(j, &c)| j == k || c.abs() < 1e-14));
    }
}

#[test]
fn exact_data_reconstructs_the_top_side_and_the_law() {
    let b = basis(256, 32);
    let law = NonlinearLaw::linear(0.2);
    let sol = solve_direct(&law, &single_mode_flux(&b, 0, 1.0), &DirectOptions::default()).unwrap();
    let silent = NoiseSpec::new(0.0, TraceSpace::HalfZeroZero, 0);
    let data = measure(&sol, &silent, &NoiseSpec::new(0.0, TraceSpace::HalfZeroZeroDual, 0)).unwrap();
    let rec = reconstruct_gamma1(&data.psi, &data.g, &RegularizationConfig::new(0.5, 1e-12).unwrap()).unwrap();
    assert!(rec.u_trace.sub(&sol.field.trace_top()).unwrap().norm() < 1e-10);
    let table = identify(&rec.u_trace, &rec.flux_trace, &IdentifyOptions::with_bins(16)).unwrap();
    assert!(table.sup_error(|u| 0.2 * u).unwrap() < 1e-3);
}

#[test]
fn f32_pipeline_runs_end_to_end() {
    let b: Arc<SpectralBasisF32> = Arc::new(SpectralBasis::build(CrossSection::interval(1.0f32, 64).unwrap(), 6).unwrap());
    let mut c = vec![0.0f32; 6];
    c[0] = 1.0;
    let g = TraceFunction::new(b.clone(), &c, TraceSpace::HalfZeroZeroDual).unwrap();
    let opts = DirectOptions { tol: 1e-6f32, ..DirectOptions::default() };
    let sol = solve_direct(&NonlinearLaw::linear(0.2f32), &g, &opts).unwrap();
    let exact = linear_robin_top(std::f64::consts::PI, 1.0, 0.2);
    assert!((sol.field.trace_top().coefficients()[0] as f64 - exact).abs() < 1e-5);

    let data = measure(
        &sol,
        &NoiseSpec::new(1e-3f32, TraceSpace::HalfZeroZero, 1),
        &NoiseSpec::new(1e-3f32, TraceSpace::HalfZeroZeroDual, 2),
    )
    .unwrap();
    let rec = reconstruct_gamma1(&data.psi, &data.g, &RegularizationConfig::new(0.5f32, 1e-3).unwrap()).unwrap();
    assert_eq!(rec.cutoff, 1);
    let err = rec.u_trace.sub(&sol.field.trace_top()).unwrap().norm();
    assert!(err.is_finite() && err < 2e-2, "{err}");
}

#[test]
fn rounding_slack_does_not_hide_small_violations() {
    NonlinearLaw::linear(0.2f32).validate(-10.0, 10.0, 2001).unwrap();
    let steep = NonlinearLaw::custom(|u: f64| (0.2 + 1e-6) * u, 0.2);
    assert!(steep.validate(-10.0, 10.0, 2001).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn direct_solution_is_linear_in_the_flux(g in -3.0f64..3.0, a in -1.0f64..1.0) {
        let b = basis(64, 8);
        let law = NonlinearLaw::linear(a);
        let opts = DirectOptions::default();
        let one = solve_direct(&law, &single_mode_flux(&b, 0, 1.0), &opts).unwrap();
        let scaled = solve_direct(&law, &single_mode_flux(&b, 0, g), &opts).unwrap();
        let want = g * one.field.trace_top().coefficients()[0];
        prop_assert!((scaled.field.trace_top().coefficients()[0] - want).abs() < 1e-11 * (1.0 + g.abs()));
    }

    #[test]
    fn smaller_noise_never_raises_the_cutoff_error_bound(e in 1e-6f64..1e-2, seed in 0u64..1000) {
        // μ² ≥ α keeps more modes as ε shrinks, never fewer.
        let b = basis(64, 8);
        let big = RegularizationConfig::new(0.5, e).unwrap();
        let small = RegularizationConfig::new(0.5, e / 10.0).unwrap();
        let g = single_mode_flux(&b, 0, 1.0);
        let sol = solve_direct(&NonlinearLaw::linear(0.2), &g, &DirectOptions::default()).unwrap();
        let data = measure(&sol, &NoiseSpec::new(0.0, TraceSpace::HalfZeroZero, seed), &NoiseSpec::new(0.0, TraceSpace::HalfZeroZeroDual, seed)).unwrap();
        let k_big = reconstruct_gamma1(&data.psi, &data.g, &big).unwrap().cutoff;
        let k_small = reconstruct_gamma1(&data.psi, &data.g, &small).unwrap().cutoff;
        prop_assert!(k_small >= k_big);
    }
}
