use riemlab::evolve::Settings;
use riemlab::flow_engine::{
    bialternate_cross_check, check_metric_equivalence, integrate_flow, monitor_blow_up, FlowLaw, FlowState, Which,
};
use riemlab::tensor_kernel::chart::Chart;
use riemlab::tensor_kernel::families::{self, ConformalTorus};
use riemlab::tensor_kernel::field::MetricField;
use riemlab::wave_engine::{constant_curvature_wave_ode, integrate_wave, GeneralCoefficients, WaveLaw, WaveState};
use riemlab::Error;

fn torus_grid(points: usize) -> MetricField {
    MetricField::metric_from_fn(Chart::grid(3, points, 1.0).unwrap(), &*ConformalTorus::new(0.1, 1, 11).metric(3))
        .unwrap()
}

fn sphere_point() -> MetricField {
    MetricField::metric_from_fn(Chart::point(vec![0.0; 3], 1e-2).unwrap(), &*families::sphere_stereographic(3)).unwrap()
}

#[test]
fn restarting_from_a_snapshot_continues_the_same_trajectory() {
    let g = torus_grid(8);
    let mut whole = Settings::new(0.01, 0.1);
    whole.stride = 5;
    let full = integrate_flow(&FlowState::new(g.clone()), FlowLaw::RiemannInduced, &whole).unwrap();
    let mut half = whole.clone();
    half.t_end = 0.05;
    let first = integrate_flow(&FlowState::new(g), FlowLaw::RiemannInduced, &half).unwrap();
    let mid = first.last_snapshot().unwrap();
    let restart = FlowState { t: mid.t, g: first.metric_at(mid).unwrap() };
    // a rejected step shrinks dt for the rest of the run, so resume with the step in force
    half.dt = first.final_dt;
    let second = integrate_flow(&restart, FlowLaw::RiemannInduced, &half).unwrap();
    let (a, b) = (full.last_snapshot().unwrap(), second.last_snapshot().unwrap());
    assert!((a.t - b.t).abs() < 1e-12);
    let worst = a.g.iter().zip(&b.g).map(|(x, y)| (x - y).abs().max()).fold(0.0, f64::max);
    assert!(worst <= 1e-12, "{worst}");
}

#[test]
fn evolving_big_g_directly_agrees_with_the_induced_flow() {
    let g = MetricField::metric_from_fn(
        Chart::point(vec![0.2, 0.4, 0.7], 1e-2).unwrap(),
        &*ConformalTorus::new(0.1, 1, 4).metric(3),
    )
    .unwrap();
    let worst = bialternate_cross_check(&g, &Settings::new(1e-3, 0.05), 5).unwrap();
    assert!(worst <= 1e-8, "{worst}");
    let sphere = bialternate_cross_check(&sphere_point(), &Settings::new(1e-2, 0.5), 10).unwrap();
    assert!(sphere <= 1e-8, "{sphere}");
}

#[test]
fn general_family_with_flow_coefficients_reproduces_the_flow_bit_for_bit() {
    let g = torus_grid(8);
    let s = Settings::new(0.01, 0.05);
    let flow = integrate_flow(&FlowState::new(g.clone()), FlowLaw::RiemannInduced, &s).unwrap();
    let general = integrate_wave(&WaveState::at_rest(g.clone()), WaveLaw::General(GeneralCoefficients::FLOW), &s).unwrap();
    assert_eq!(flow.records.len(), general.records.len());
    for (a, b) in flow.snapshots.iter().zip(&general.snapshots) {
        assert_eq!(a.t, b.t);
        assert_eq!(a.g, b.g);
    }
    let wave = integrate_wave(&WaveState::at_rest(g.clone()), WaveLaw::RiemannWave, &s).unwrap();
    let general = integrate_wave(&WaveState::at_rest(g), WaveLaw::General(GeneralCoefficients::WAVE), &s).unwrap();
    for (a, b) in wave.snapshots.iter().zip(&general.snapshots) {
        assert_eq!(a.g, b.g);
    }
}

#[test]
fn degenerate_coefficients_are_rejected() {
    let law = WaveLaw::General(GeneralCoefficients::new(0.0, 0.0, 1.0, 1.0));
    let r = integrate_wave(&WaveState::at_rest(sphere_point()), law, &Settings::new(0.01, 0.1));
    assert!(matches!(r, Err(Error::DegenerateCoefficients)));
}

#[test]
fn rk4_is_fourth_order_in_time() {
    // the flow homothety is linear in t and RK4 reproduces it exactly, so the
    // order is measured on the wave, whose scale factor is not a polynomial
    let reference = constant_curvature_wave_ode(1.0, 0.0, 1e-5, 0.5).unwrap();
    let exact = *reference.f.last().unwrap();
    let errors: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&dt| {
            let mut s = Settings::new(dt, 0.5);
            s.stride = 1;
            let t = integrate_wave(&WaveState::at_rest(sphere_point()), WaveLaw::RiemannWave, &s).unwrap();
            (t.records.last().unwrap().f_est - exact).abs()
        })
        .collect();
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 4.0).abs() <= 0.3, "{errors:?}");
    }
    let linear = integrate_flow(&FlowState::new(sphere_point()), FlowLaw::RiemannInduced, &Settings::new(0.1, 0.5)).unwrap();
    assert!((linear.records.last().unwrap().f_est - 0.5).abs() < 1e-8);
}

#[test]
fn sphere_flows_collapse_where_the_homothety_does() {
    let mut s = Settings::new(1e-3, 2.0);
    s.stride = 1;
    let riemann = integrate_flow(&FlowState::new(sphere_point()), FlowLaw::RiemannInduced, &s).unwrap();
    let ricci = integrate_flow(&FlowState::new(sphere_point()), FlowLaw::Ricci, &s).unwrap();
    assert!((monitor_blow_up(&riemann).unwrap().t_est - 1.0).abs() < 1e-3);
    assert!((monitor_blow_up(&ricci).unwrap().t_est - 0.25).abs() < 1e-3);
    let hyper = MetricField::metric_from_fn(Chart::point(vec![0.0; 3], 1e-2).unwrap(), &*families::hyperbolic_poincare(3))
        .unwrap();
    let grow = integrate_flow(&FlowState::new(hyper), FlowLaw::RiemannInduced, &Settings::new(0.05, 2.0)).unwrap();
    assert!(matches!(monitor_blow_up(&grow), Err(Error::NoSingularity)));
}

#[test]
fn sandwich_holds_on_a_smooth_ricci_flow_and_catches_a_forgery() {
    let mut s = Settings::new(1e-3, 0.2);
    s.stride = 10;
    let t = integrate_flow(&FlowState::new(sphere_point()), FlowLaw::Ricci, &s).unwrap();
    assert!(check_metric_equivalence(&t, None, Which::Ricci).unwrap().pass);
    let mut forged = t.clone();
    forged.snapshots[3].g[0] *= 3.0;
    let report = check_metric_equivalence(&forged, None, Which::Ricci).unwrap();
    assert!(!report.pass);
    assert_eq!(report.worst_time, forged.snapshots[3].t);
}
