use approx::assert_relative_eq;
use squeezelab_core::nlo::{cavity_waist, enl_from_deff, CrystalSpec, FocusingGeometry};
use squeezelab_core::opo::{
    escape_efficiency, oscillation_threshold, parametric_gain, pump_power_at_x, threshold_from_gain, LossModel,
    OpoConfig,
};
use squeezelab_core::shg::{optimal_input_coupler, shg_output, DoublerConfig};
use squeezelab_core::squeezing::{squeezing_at, squeezing_vs_pump, DetectionChain};

#[test]
fn crystal_to_threshold() {
    let crystal = CrystalSpec::ppmgln(9.5e-3);
    let waist = cavity_waist(50e-3, 58e-3, 0.5, &crystal).unwrap();
    let geom = FocusingGeometry::optimized(waist).unwrap();
    let enl = enl_from_deff(&crystal, &geom).unwrap();
    // a weaker model nonlinearity means a higher threshold than the bench value
    let model = oscillation_threshold(0.21, enl, &LossModel::ppmgln()).unwrap();
    let bench = OpoConfig::ppmgln().model_threshold().unwrap();
    assert!(enl.value() < 0.043);
    assert!(model > bench, "{model} vs {bench}");
}

#[test]
fn doubler_can_drive_the_opo_to_threshold() {
    let sh = shg_output(0.57, &DoublerConfig::fitted()).unwrap();
    let opo = OpoConfig::ppmgln();
    assert!(sh.p_sh > opo.effective_threshold().unwrap());
}

#[test]
fn gain_measurement_recovers_threshold() {
    let opo = OpoConfig::ppmgln();
    let th = opo.effective_threshold().unwrap();
    for x in [0.2, 0.5, 0.8] {
        let p = x * x * th;
        let g = parametric_gain(x).unwrap();
        assert_relative_eq!(
            threshold_from_gain(g.amplification, p).unwrap(),
            th,
            max_relative = 1e-12
        );
    }
}

#[test]
fn pump_at_x_is_consistent_with_threshold() {
    let opo = OpoConfig::ppmgln();
    let th = opo.model_threshold().unwrap();
    let p = pump_power_at_x(0.7, opo.coupler, opo.enl, &opo.loss).unwrap();
    assert_relative_eq!(p, 0.49 * th, max_relative = 1e-12);
    assert!(
        escape_efficiency(opo.coupler, p, &opo.loss).unwrap() > escape_efficiency(opo.coupler, th, &opo.loss).unwrap()
    );
}

#[test]
fn squeezing_deepens_then_flattens() {
    let opo = OpoConfig::ppmgln();
    let chain = DetectionChain::ppmgln();
    let pumps: Vec<f64> = (0..=35).map(|i| i as f64 * 0.01).collect();
    let rows = squeezing_vs_pump(&opo, &chain, &pumps).unwrap();
    let sq: Vec<f64> = rows.iter().map(|(_, r)| r.as_ref().unwrap().squeeze_db).collect();
    assert_eq!(sq[0], 0.0);
    assert!(sq[..10].windows(2).all(|w| w[1] < w[0]));
    let tail =
        sq[25..].iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - sq[25..].iter().fold(0.0_f64, |a, &b| a.min(b));
    assert!(tail < 1.0, "{tail}");
}

#[test]
fn lower_loss_gives_deeper_squeezing() {
    let chain = DetectionChain::ppmgln();
    let base = OpoConfig::ppmgln();
    let mut clean = base;
    clean.loss = LossModel::new(0.001, 0.0).unwrap();
    clean.measured_threshold = None;
    let a = squeezing_at(&base, &chain, 0.2, base.effective_threshold().unwrap()).unwrap();
    let th = clean.effective_threshold().unwrap();
    let b = squeezing_at(&clean, &chain, 0.2 / 0.377 * th, th).unwrap();
    assert!(b.squeeze_db < a.squeeze_db);
}

#[test]
fn optimal_doubler_coupler_beats_fitted_one() {
    let cfg = DoublerConfig::fitted();
    let opt = optimal_input_coupler(0.57, cfg.round_trip_loss, cfg.conversion, (0.01, 0.5)).unwrap();
    let fitted = shg_output(0.57, &cfg).unwrap().efficiency;
    assert!(opt.efficiency >= fitted);
    let at_opt = DoublerConfig::new(opt.input_coupler, cfg.round_trip_loss, cfg.conversion).unwrap();
    assert_relative_eq!(
        shg_output(0.57, &at_opt).unwrap().efficiency,
        opt.efficiency,
        max_relative = 1e-9
    );
}
