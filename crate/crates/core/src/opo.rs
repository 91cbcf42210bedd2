//! Below-threshold OPO bookkeeping: pump-dependent loss, the
//! self-consistent oscillation threshold, escape efficiency, coupler
//! optimization, probe parametric gain and cavity linewidth.

use crate::error::{domain, Error, Result};
use crate::nlo::EffectiveNonlinearity;
use crate::numerics::{golden_section_max, safeguarded_newton};
use crate::SPEED_OF_LIGHT;

/// Coupler grid spacing used by [`optimize_coupler`].
pub const COUPLER_GRID_STEP: f64 = 1e-3;

/// Linear loss law `L = passive + per_watt * P_2w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossModel {
    pub passive: f64,
    /// Pump-induced loss coefficient [1/W].
    pub per_watt: f64,
}

impl LossModel {
    pub fn new(passive: f64, per_watt: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&passive) {
            return domain(format!("passive loss must be in [0, 1), got {passive}"));
        }
        if !(per_watt >= 0.0) || !per_watt.is_finite() {
            return domain(format!("pump-induced loss coefficient must be >= 0, got {per_watt}"));
        }
        Ok(LossModel { passive, per_watt })
    }

    /// Fitted PPMgLN OPO loss: `L0 = 0.01236`, `a = 0.0246 /W`.
    pub fn ppmgln() -> Self {
        LossModel {
            passive: 0.01236,
            per_watt: 0.0246,
        }
    }

    pub fn lossless() -> Self {
        LossModel {
            passive: 0.0,
            per_watt: 0.0,
        }
    }

    /// Round-trip loss at pump power `p2w` [W].
    pub fn at_pump(&self, p2w: f64) -> Result<f64> {
        if !(p2w >= 0.0) {
            return domain(format!("pump power must be >= 0, got {p2w}"));
        }
        let loss = self.passive + self.per_watt * p2w;
        if loss >= 1.0 {
            return Err(Error::ModelValidity(format!(
                "loss {loss} at pump {p2w} W reaches unity"
            )));
        }
        Ok(loss)
    }
}

/// Convenience form of [`LossModel::at_pump`].
pub fn loss_at_pump(loss: &LossModel, p2w: f64) -> Result<f64> {
    loss.at_pump(p2w)
}

/// Least-squares line through `(pump [W], loss)` samples.
pub fn fit_loss_model(samples: &[(f64, f64)]) -> Result<LossModel> {
    let n = samples.len() as f64;
    let first = samples.first().map(|s| s.0);
    if samples.len() < 2 || samples.iter().all(|s| Some(s.0) == first) {
        return Err(Error::Fit("need at least two distinct pump powers".into()));
    }
    let mean_p = samples.iter().map(|s| s.0).sum::<f64>() / n;
    let mean_l = samples.iter().map(|s| s.1).sum::<f64>() / n;
    let sxy: f64 = samples.iter().map(|s| (s.0 - mean_p) * (s.1 - mean_l)).sum();
    let sxx: f64 = samples.iter().map(|s| (s.0 - mean_p).powi(2)).sum();
    let slope = sxy / sxx;
    LossModel::new(mean_l - slope * mean_p, slope).map_err(|e| Error::Fit(e.to_string()))
}

/// OPO cavity parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpoConfig {
    /// Output-coupler transmittance.
    pub coupler: f64,
    pub loss: LossModel,
    pub enl: EffectiveNonlinearity,
    /// Geometric round-trip length [m].
    pub round_trip: f64,
    /// Threshold measured on the bench [W], preferred over the model value
    /// when normalizing the pump.
    pub measured_threshold: Option<f64>,
}

impl OpoConfig {
    pub fn new(
        coupler: f64,
        loss: LossModel,
        enl: EffectiveNonlinearity,
        round_trip: f64,
        measured_threshold: Option<f64>,
    ) -> Result<Self> {
        check_coupler(coupler)?;
        if !(enl.value() > 0.0) {
            return domain("OPO effective nonlinearity must be > 0");
        }
        if !(round_trip > 0.0) {
            return domain(format!("round trip must be > 0, got {round_trip}"));
        }
        if let Some(p) = measured_threshold {
            if !(p > 0.0) {
                return domain(format!("measured threshold must be > 0, got {p}"));
            }
        }
        Ok(OpoConfig {
            coupler,
            loss,
            enl,
            round_trip,
            measured_threshold,
        })
    }

    /// PPMgLN OPO with the 0.21 output coupler and its measured 377 mW threshold.
    pub fn ppmgln() -> Self {
        OpoConfig {
            coupler: 0.21,
            loss: LossModel::ppmgln(),
            enl: EffectiveNonlinearity::new(0.043).expect("positive constant"),
            round_trip: 0.5,
            measured_threshold: Some(0.377),
        }
    }

    pub fn model_threshold(&self) -> Result<f64> {
        oscillation_threshold(self.coupler, self.enl, &self.loss)
    }

    /// Threshold used to normalize the pump: measured if known, else modelled.
    pub fn effective_threshold(&self) -> Result<f64> {
        match self.measured_threshold {
            Some(p) => Ok(p),
            None => self.model_threshold(),
        }
    }
}

fn check_coupler(coupler: f64) -> Result<()> {
    if !(coupler > 0.0 && coupler < 1.0) {
        return domain(format!("coupler transmittance must be in (0, 1), got {coupler}"));
    }
    Ok(())
}

/// Normalized pump `x = sqrt(P_2w / P_th)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpState {
    pub p2w: f64,
    pub x: f64,
}

impl PumpState {
    pub fn new(p2w: f64, threshold: f64) -> Result<Self> {
        if !(p2w >= 0.0) {
            return domain(format!("pump power must be >= 0, got {p2w}"));
        }
        if !(threshold > 0.0) {
            return domain(format!("threshold must be > 0, got {threshold}"));
        }
        Ok(PumpState {
            p2w,
            x: (p2w / threshold).sqrt(),
        })
    }
}

/// Oscillation threshold with the loss evaluated at the threshold pump,
/// i.e. the fixed point `P = (T + L0 + a P)^2 / (4 E_NL)`.
pub fn oscillation_threshold(coupler: f64, enl: EffectiveNonlinearity, loss: &LossModel) -> Result<f64> {
    let guess = (coupler + loss.passive).powi(2) / (4.0 * enl.value());
    oscillation_threshold_from(coupler, enl, loss, guess)
}

/// [`oscillation_threshold`] starting the iteration from `guess` [W].
pub fn oscillation_threshold_from(
    coupler: f64,
    enl: EffectiveNonlinearity,
    loss: &LossModel,
    guess: f64,
) -> Result<f64> {
    check_coupler(coupler)?;
    let e = enl.value();
    if !(e > 0.0) {
        return domain("effective nonlinearity must be > 0");
    }
    let base = coupler + loss.passive;
    let a = loss.per_watt;
    // residual p - (base + a p)^2 / 4E is concave; it is increasing up to
    // its vertex, which bounds the physical (smaller) root.
    let hi = if a > 0.0 {
        (2.0 * e / a - base) / a
    } else {
        base * base / (4.0 * e)
    };
    let residual = |p: f64| {
        let l = base + a * p;
        (p - l * l / (4.0 * e), 1.0 - 2.0 * a * l / (4.0 * e))
    };
    if !(hi > 0.0) || residual(hi).0 < 0.0 {
        return Err(Error::Solver(format!(
            "no threshold: pump-induced loss grows faster than gain (T = {coupler})"
        )));
    }
    let p = safeguarded_newton(residual, 0.0, hi, guess.max(0.0), 1e-14)?;
    loss.at_pump(p)?;
    let rel = residual(p).0.abs() / p;
    if rel >= 1e-9 {
        return Err(Error::Solver(format!("threshold residual {rel:e} too large")));
    }
    Ok(p)
}

/// `rho = T / (T + L(p2w))`.
pub fn escape_efficiency(coupler: f64, p2w: f64, loss: &LossModel) -> Result<f64> {
    check_coupler(coupler)?;
    let l = loss.at_pump(p2w)?;
    Ok(coupler / (coupler + l))
}

/// Pump power giving normalized pump `x` at the model threshold.
pub fn pump_power_at_x(x: f64, coupler: f64, enl: EffectiveNonlinearity, loss: &LossModel) -> Result<f64> {
    if !(x >= 0.0) {
        return domain(format!("x must be >= 0, got {x}"));
    }
    Ok(x * x * oscillation_threshold(coupler, enl, loss)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplerOptimum {
    pub coupler: f64,
    pub escape_efficiency: f64,
}

/// Escape efficiency at normalized pump `x` for output coupler `coupler`.
pub fn escape_efficiency_at_x(x: f64, coupler: f64, enl: EffectiveNonlinearity, loss: &LossModel) -> Result<f64> {
    let p = pump_power_at_x(x, coupler, enl, loss)?;
    escape_efficiency(coupler, p, loss)
}

/// Output coupler maximizing escape efficiency at fixed normalized pump.
///
/// Grid scan with step [`COUPLER_GRID_STEP`] over the closed range, then
/// golden-section refinement in the neighbouring cells. Ties resolve to the
/// smaller transmittance.
pub fn optimize_coupler(
    x: f64,
    enl: EffectiveNonlinearity,
    loss: &LossModel,
    range: (f64, f64),
) -> Result<CouplerOptimum> {
    let (lo, hi) = range;
    if !(lo > 0.0 && hi < 1.0 && lo < hi) {
        return domain(format!(
            "coupler range ({lo}, {hi}) must be a nonempty subset of (0, 1)"
        ));
    }
    if !(x >= 0.0) {
        return domain(format!("x must be >= 0, got {x}"));
    }
    let cells = ((hi - lo) / COUPLER_GRID_STEP).ceil() as usize;
    let step = (hi - lo) / cells as f64;
    let mut best_i = 0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=cells {
        let t = lo + i as f64 * step;
        let rho = escape_efficiency_at_x(x, t, enl, loss)?;
        if rho > best {
            best = rho;
            best_i = i;
        }
    }
    let t_grid = lo + best_i as f64 * step;
    if best_i == 0 || best_i == cells {
        return Ok(CouplerOptimum {
            coupler: t_grid,
            escape_efficiency: best,
        });
    }
    let (t, rho) = golden_section_max(
        |t| escape_efficiency_at_x(x, t, enl, loss).unwrap_or(f64::NEG_INFINITY),
        t_grid - step,
        t_grid + step,
        1e-10,
    );
    Ok(if rho > best {
        CouplerOptimum {
            coupler: t,
            escape_efficiency: rho,
        }
    } else {
        CouplerOptimum {
            coupler: t_grid,
            escape_efficiency: best,
        }
    })
}

/// Probe gains on cavity resonance for amplified and deamplified quadratures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParametricGain {
    pub amplification: f64,
    pub deamplification: f64,
}

pub fn parametric_gain(x: f64) -> Result<ParametricGain> {
    if !(x >= 0.0) {
        return domain(format!("x must be >= 0, got {x}"));
    }
    if x >= 1.0 {
        return Err(Error::AboveThreshold { x });
    }
    Ok(ParametricGain {
        amplification: (1.0 - x).powi(-2),
        deamplification: (1.0 + x).powi(-2),
    })
}

/// Threshold inferred from an amplification gain measured at pump `p_pump`.
pub fn threshold_from_gain(amplification: f64, p_pump: f64) -> Result<f64> {
    if !(amplification > 1.0) {
        return Err(Error::NoGain { gain: amplification });
    }
    if !(p_pump > 0.0) {
        return domain(format!("pump power must be > 0, got {p_pump}"));
    }
    let x = 1.0 - amplification.sqrt().recip();
    Ok(p_pump / (x * x))
}

/// Cavity field decay rate `c (T + L) / (2 round_trip)` [rad/s].
pub fn cavity_bandwidth(coupler: f64, loss: f64, round_trip: f64) -> Result<f64> {
    let total = coupler + loss;
    if !(total > 0.0 && total < 1.0) {
        return domain(format!("T + L must be in (0, 1), got {total}"));
    }
    if !(round_trip > 0.0) {
        return domain(format!("round trip must be > 0, got {round_trip}"));
    }
    Ok(SPEED_OF_LIGHT * total / (2.0 * round_trip))
}
