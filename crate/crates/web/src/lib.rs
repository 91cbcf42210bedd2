//! Browser bindings for the demo page in `www/`.
//!
//! Every export returns a flat `Float64Array` of fixed-width rows. Points the
//! model rejects (above threshold, bad inputs) come back as NaN so the page
//! can leave gaps instead of aborting the whole curve.

use squeezelab_core::nlo::EffectiveNonlinearity;
use squeezelab_core::opo::{escape_efficiency_at_x, LossModel, OpoConfig};
use squeezelab_core::shg::{shg_output, DoublerConfig};
use squeezelab_core::squeezing::{squeezing_at, DetectionChain};
use squeezelab_core::Result;
use wasm_bindgen::prelude::*;

fn sweep(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let steps = n.max(2) - 1;
    (0..=steps).map(move |i| lo + (hi - lo) * i as f64 / steps as f64)
}

fn row<const N: usize>(out: &mut Vec<f64>, head: f64, r: Result<[f64; N]>) {
    out.push(head);
    match r {
        Ok(vals) => out.extend(vals),
        Err(_) => out.extend([f64::NAN; N]),
    }
}

/// Rows of `[pump_W, squeeze_dB, antisqueeze_dB]` from 0 to `p_max_w`.
///
/// `threshold_mw <= 0` normalizes the pump by the model threshold instead
/// of a measured one.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn squeezing_curve(
    coupler: f64,
    l0: f64,
    a_per_w: f64,
    enl: f64,
    threshold_mw: f64,
    theta_deg: f64,
    eta_homodyne: f64,
    analysis_mhz: f64,
    p_max_w: f64,
    n: usize,
) -> Vec<f64> {
    let setup = || -> Result<(OpoConfig, DetectionChain, f64)> {
        let measured = (threshold_mw > 0.0).then_some(threshold_mw * 1e-3);
        let opo = OpoConfig::new(
            coupler,
            LossModel::new(l0, a_per_w)?,
            EffectiveNonlinearity::new(enl)?,
            0.5,
            measured,
        )?;
        let omega = 2.0 * std::f64::consts::PI * analysis_mhz * 1e6;
        let chain = DetectionChain::new(eta_homodyne, 1.0, theta_deg, omega)?;
        let threshold = opo.effective_threshold()?;
        Ok((opo, chain, threshold))
    };
    let mut out = Vec::with_capacity(3 * n.max(2));
    let setup = setup();
    for p in sweep(0.0, p_max_w, n) {
        let r = setup
            .as_ref()
            .map_err(Clone::clone)
            .and_then(|(opo, chain, th)| squeezing_at(opo, chain, p, *th).map(|s| [s.squeeze_db, s.antisqueeze_db]));
        row(&mut out, p, r);
    }
    out
}

/// Rows of `[T, rho]` at normalized pump `x` for couplers in `[t_lo, t_hi]`.
#[wasm_bindgen]
pub fn escape_vs_coupler(x: f64, l0: f64, a_per_w: f64, enl: f64, t_lo: f64, t_hi: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * n.max(2));
    let model = LossModel::new(l0, a_per_w).and_then(|l| Ok((l, EffectiveNonlinearity::new(enl)?)));
    for t in sweep(t_lo, t_hi, n) {
        let r = model
            .as_ref()
            .map_err(Clone::clone)
            .and_then(|(loss, enl)| escape_efficiency_at_x(x, t, *enl, loss).map(|rho| [rho]));
        row(&mut out, t, r);
    }
    out
}

/// Rows of `[p_in_W, p_sh_W, efficiency]` from 0 to `p_max_w`.
#[wasm_bindgen]
pub fn doubler_curve(input_coupler: f64, round_trip_loss: f64, conversion: f64, p_max_w: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(3 * n.max(2));
    let cfg = DoublerConfig::new(input_coupler, round_trip_loss, conversion);
    for p in sweep(0.0, p_max_w, n) {
        let r = cfg
            .as_ref()
            .map_err(Clone::clone)
            .and_then(|c| shg_output(p, c).map(|o| [o.p_sh, o.efficiency]));
        row(&mut out, p, r);
    }
    out
}
