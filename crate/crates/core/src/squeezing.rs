//! Quadrature variances of the below-threshold OPO output as seen by a
//! homodyne detector, including detection losses and local-oscillator
//! phase jitter.

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::opo::{cavity_bandwidth, escape_efficiency, OpoConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionChain {
    pub eta_homodyne: f64,
    pub eta_propagation: f64,
    /// RMS local-oscillator phase fluctuation [degrees].
    pub phase_noise_deg: f64,
    /// Sideband analysis frequency [rad/s].
    pub analysis_omega: f64,
}

impl DetectionChain {
    pub fn new(eta_homodyne: f64, eta_propagation: f64, phase_noise_deg: f64, analysis_omega: f64) -> Result<Self> {
        for (name, eta) in [("homodyne", eta_homodyne), ("propagation", eta_propagation)] {
            if !(eta > 0.0 && eta <= 1.0) {
                return domain(format!("{name} efficiency must be in (0, 1], got {eta}"));
            }
        }
        if !(0.0..90.0).contains(&phase_noise_deg) {
            return domain(format!("phase noise must be in [0, 90) degrees, got {phase_noise_deg}"));
        }
        if !(analysis_omega >= 0.0) || !analysis_omega.is_finite() {
            return domain(format!("analysis frequency must be >= 0, got {analysis_omega}"));
        }
        Ok(DetectionChain {
            eta_homodyne,
            eta_propagation,
            phase_noise_deg,
            analysis_omega,
        })
    }

    /// Homodyne efficiency 0.968, 1.5 degree phase jitter, 2 MHz sideband.
    pub fn ppmgln() -> Self {
        DetectionChain {
            eta_homodyne: 0.968,
            eta_propagation: 1.0,
            phase_noise_deg: 1.5,
            analysis_omega: 2.0 * PI * 2e6,
        }
    }
}

/// Shot-noise-normalized variances of the squeezed and antisqueezed quadratures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraturePair {
    pub v_minus: f64,
    pub v_plus: f64,
}

/// Overall detection efficiency `rho * eta_propagation * eta_homodyne`.
pub fn total_efficiency(rho: f64, chain: &DetectionChain) -> f64 {
    rho * chain.eta_propagation * chain.eta_homodyne
}

/// `V-/+ = 1 -/+ eta 4x / ((1 +/- x)^2 + (omega/gamma)^2)`.
pub fn quadrature_variance(x: f64, omega: f64, gamma: f64, eta: f64) -> Result<QuadraturePair> {
    if !(x >= 0.0) {
        return domain(format!("x must be >= 0, got {x}"));
    }
    if x >= 1.0 {
        return Err(Error::AboveThreshold { x });
    }
    if !(gamma > 0.0) {
        return domain(format!("cavity decay rate must be > 0, got {gamma}"));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return domain(format!("efficiency must be in (0, 1], got {eta}"));
    }
    let detuning = (omega / gamma).powi(2);
    // (1 + x)^2 - 4 eta x rewritten without cancellation near x -> 1
    let lost = 4.0 * x * (1.0 - eta);
    Ok(QuadraturePair {
        v_minus: ((1.0 - x).powi(2) + lost + detuning) / ((1.0 + x).powi(2) + detuning),
        v_plus: ((1.0 + x).powi(2) - lost + detuning) / ((1.0 - x).powi(2) + detuning),
    })
}

/// Mixes the quadratures through a fixed local-oscillator phase error.
pub fn apply_phase_noise(pair: QuadraturePair, theta_deg: f64) -> QuadraturePair {
    // V cos^2 + V' sin^2 written as a transfer so the trace is kept exactly
    let transfer = (pair.v_plus - pair.v_minus) * theta_deg.to_radians().sin().powi(2);
    QuadraturePair {
        v_minus: pair.v_minus + transfer,
        v_plus: pair.v_plus - transfer,
    }
}

pub fn to_db(v: f64) -> Result<f64> {
    if !(v > 0.0) {
        return domain(format!("variance must be > 0 for dB conversion, got {v}"));
    }
    Ok(10.0 * v.log10())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezingRow {
    pub pump: f64,
    pub x: f64,
    pub squeeze_db: f64,
    pub antisqueeze_db: f64,
}

/// Detected squeezing at pump `p2w` [W] normalized by `threshold`.
///
/// Escape efficiency and linewidth follow the loss law at the actual pump.
pub fn squeezing_at(opo: &OpoConfig, chain: &DetectionChain, p2w: f64, threshold: f64) -> Result<SqueezingRow> {
    if !(p2w >= 0.0) {
        return domain(format!("pump power must be >= 0, got {p2w}"));
    }
    if !(threshold > 0.0) {
        return domain(format!("threshold must be > 0, got {threshold}"));
    }
    let x = (p2w / threshold).sqrt();
    if x >= 1.0 {
        return Err(Error::AboveThreshold { x });
    }
    let loss = opo.loss.at_pump(p2w)?;
    let rho = escape_efficiency(opo.coupler, p2w, &opo.loss)?;
    let gamma = cavity_bandwidth(opo.coupler, loss, opo.round_trip)?;
    let eta = total_efficiency(rho, chain);
    let pair = quadrature_variance(x, chain.analysis_omega, gamma, eta)?;
    let pair = apply_phase_noise(pair, chain.phase_noise_deg);
    Ok(SqueezingRow {
        pump: p2w,
        x,
        squeeze_db: to_db(pair.v_minus)?,
        antisqueeze_db: to_db(pair.v_plus)?,
    })
}

/// Squeezing and antisqueezing versus pump power, sorted by pump.
///
/// The pump is normalized by the measured threshold when one is
/// configured; each row fails independently.
pub fn squeezing_vs_pump(
    opo: &OpoConfig,
    chain: &DetectionChain,
    pumps: &[f64],
) -> Result<Vec<(f64, Result<SqueezingRow>)>> {
    let threshold = opo.effective_threshold()?;
    let mut pumps = pumps.to_vec();
    pumps.sort_by(f64::total_cmp);
    Ok(pumps
        .into_iter()
        .map(|p| (p, squeezing_at(opo, chain, p, threshold)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezingLimit {
    pub squeeze_db: f64,
    pub x: f64,
    pub pump: f64,
    /// The optimum sits on the largest grid point.
    pub at_grid_edge: bool,
}

/// Best achievable squeezing over normalized pumps `x_grid`.
pub fn predict_limit(opo: &OpoConfig, chain: &DetectionChain, x_grid: &[f64]) -> Result<SqueezingLimit> {
    if x_grid.is_empty() {
        return domain("x grid is empty");
    }
    if let Some(bad) = x_grid.iter().find(|x| !(**x >= 0.0 && **x < 1.0)) {
        return domain(format!("x grid value {bad} outside [0, 1)"));
    }
    let threshold = opo.effective_threshold()?;
    let last = x_grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut best: Option<SqueezingLimit> = None;
    for &x in x_grid {
        let pump = x * x * threshold;
        let row = squeezing_at(opo, chain, pump, threshold)?;
        if best.is_none_or(|b| row.squeeze_db < b.squeeze_db) {
            best = Some(SqueezingLimit {
                squeeze_db: row.squeeze_db,
                x,
                pump,
                at_grid_edge: x == last,
            });
        }
    }
    Ok(best.expect("grid is nonempty"))
}
