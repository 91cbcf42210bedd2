//! External enhancement-cavity frequency doubler on resonance.
//!
//! Single-pass conversion acts as a power-dependent loss `1 - G P_circ`
//! inside the round-trip amplitude product, so the circulating power obeys
//!
//! ```text
//! P_circ = T P_in / (1 - sqrt((1 - T)(1 - L)(1 - G P_circ)))^2
//! ```
//!
//! and the harmonic output is `G P_circ^2`.

use crate::error::{domain, Error, Result};
use crate::numerics::{bisect, golden_section_max, safeguarded_newton};

const INPUT_COUPLER_GRID_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoublerConfig {
    /// Input-coupler transmittance at the fundamental.
    pub input_coupler: f64,
    /// Passive round-trip loss excluding conversion.
    pub round_trip_loss: f64,
    /// Single-pass conversion coefficient [1/W].
    pub conversion: f64,
}

impl DoublerConfig {
    pub fn new(input_coupler: f64, round_trip_loss: f64, conversion: f64) -> Result<Self> {
        let cfg = DoublerConfig {
            input_coupler,
            round_trip_loss,
            conversion,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// 8 mm PPMgLN doubler behind a 10% input coupler. Loss and conversion
    /// are fitted to 400 mW of harmonic from 570 mW of fundamental.
    pub fn fitted() -> Self {
        DoublerConfig {
            input_coupler: 0.10,
            round_trip_loss: 0.045,
            conversion: 0.036,
        }
    }

    pub fn validate(&self) -> Result<()> {
        // a unit transmittance is allowed: it is the no-cavity limit
        if !(self.input_coupler > 0.0 && self.input_coupler <= 1.0) {
            return domain(format!("input coupler must be in (0, 1], got {}", self.input_coupler));
        }
        if !(0.0..1.0).contains(&self.round_trip_loss) {
            return domain(format!(
                "round-trip loss must be in [0, 1), got {}",
                self.round_trip_loss
            ));
        }
        if !(self.conversion >= 0.0) || !self.conversion.is_finite() {
            return domain(format!("conversion must be >= 0, got {}", self.conversion));
        }
        Ok(())
    }

    fn passive_round_trip(&self) -> f64 {
        (1.0 - self.input_coupler) * (1.0 - self.round_trip_loss)
    }

    /// Right-hand side of the buildup equation and its derivative.
    fn buildup(&self, p_in: f64, p_circ: f64) -> (f64, f64) {
        let k = self.passive_round_trip();
        let depletion = (1.0 - self.conversion * p_circ).max(0.0);
        let s = (k * depletion).sqrt();
        let value = self.input_coupler * p_in / (1.0 - s).powi(2);
        let slope = if s > 0.0 {
            -self.input_coupler * p_in * k * self.conversion / (s * (1.0 - s).powi(3))
        } else {
            f64::NEG_INFINITY
        };
        (value, slope)
    }

    /// Upper end of the physical bracket for the circulating power.
    fn bracket(&self, p_in: f64) -> Result<f64> {
        let undepleted = self.buildup(p_in, 0.0).0;
        if self.conversion == 0.0 || undepleted * self.conversion < 1.0 {
            return Ok(undepleted);
        }
        let cap = 1.0 / self.conversion;
        if cap - self.buildup(p_in, cap).0 <= 0.0 {
            return Err(Error::ModelValidity(format!(
                "conversion saturates: G * P_circ reaches 1 at P_in = {p_in} W"
            )));
        }
        Ok(cap)
    }
}

fn check_input(p_in: f64, cfg: &DoublerConfig) -> Result<()> {
    cfg.validate()?;
    if !(p_in >= 0.0) || !p_in.is_finite() {
        return domain(format!("input power must be >= 0, got {p_in}"));
    }
    Ok(())
}

/// Steady-state circulating fundamental power [W], by bisection.
pub fn circulating_power(p_in: f64, cfg: &DoublerConfig) -> Result<f64> {
    check_input(p_in, cfg)?;
    if p_in == 0.0 {
        return Ok(0.0);
    }
    let hi = cfg.bracket(p_in)?;
    let p = bisect(|p| p - cfg.buildup(p_in, p).0, 0.0, hi, 1e-15)?;
    verify(p_in, p, cfg)
}

/// Circulating power by damped (Newton-weighted) fixed-point iteration from
/// `guess`; the step `p -> p + (R(p) - p) / (1 - R'(p))` is kept inside the
/// physical bracket.
pub fn circulating_power_from(p_in: f64, cfg: &DoublerConfig, guess: f64) -> Result<f64> {
    check_input(p_in, cfg)?;
    if p_in == 0.0 {
        return Ok(0.0);
    }
    let hi = cfg.bracket(p_in)?;
    let p = safeguarded_newton(
        |p| {
            let (r, dr) = cfg.buildup(p_in, p);
            (p - r, 1.0 - dr)
        },
        0.0,
        hi,
        guess,
        1e-15,
    )?;
    verify(p_in, p, cfg)
}

fn verify(p_in: f64, p: f64, cfg: &DoublerConfig) -> Result<f64> {
    if cfg.conversion * p >= 1.0 {
        return Err(Error::ModelValidity(format!(
            "G * P_circ = {} >= 1",
            cfg.conversion * p
        )));
    }
    let residual = (p - cfg.buildup(p_in, p).0).abs();
    if residual >= 1e-9 * p {
        return Err(Error::Solver(format!("buildup residual {residual:e} too large")));
    }
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoublerOperatingPoint {
    pub p_in: f64,
    pub p_circ: f64,
    pub p_sh: f64,
    pub efficiency: f64,
}

pub fn shg_output(p_in: f64, cfg: &DoublerConfig) -> Result<DoublerOperatingPoint> {
    let p_circ = circulating_power(p_in, cfg)?;
    let p_sh = cfg.conversion * p_circ * p_circ;
    let efficiency = if p_in > 0.0 { p_sh / p_in } else { 0.0 };
    Ok(DoublerOperatingPoint {
        p_in,
        p_circ,
        p_sh,
        efficiency,
    })
}

/// Operating points for each input power, in ascending input order.
pub fn efficiency_sweep(p_in_list: &[f64], cfg: &DoublerConfig) -> Vec<(f64, Result<DoublerOperatingPoint>)> {
    let mut inputs = p_in_list.to_vec();
    inputs.sort_by(f64::total_cmp);
    inputs.into_iter().map(|p| (p, shg_output(p, cfg))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputCouplerOptimum {
    pub input_coupler: f64,
    pub efficiency: f64,
}

/// Input coupler maximizing conversion efficiency at fixed input power.
/// Grid plus golden-section refinement; ties resolve to the smaller coupler.
pub fn optimal_input_coupler(
    p_in: f64,
    round_trip_loss: f64,
    conversion: f64,
    range: (f64, f64),
) -> Result<InputCouplerOptimum> {
    let (lo, hi) = range;
    if !(lo > 0.0 && hi < 1.0 && lo < hi) {
        return domain(format!(
            "coupler range ({lo}, {hi}) must be a nonempty subset of (0, 1)"
        ));
    }
    if conversion == 0.0 || p_in == 0.0 {
        return Err(Error::DegenerateOptimum(
            "conversion efficiency is zero for every input coupler".into(),
        ));
    }
    let eff = |t: f64| -> Result<f64> {
        Ok(shg_output(p_in, &DoublerConfig::new(t, round_trip_loss, conversion)?)?.efficiency)
    };
    let cells = ((hi - lo) / INPUT_COUPLER_GRID_STEP).ceil() as usize;
    let step = (hi - lo) / cells as f64;
    let mut best_i = 0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=cells {
        let e = eff(lo + i as f64 * step)?;
        if e > best {
            best = e;
            best_i = i;
        }
    }
    let t_grid = lo + best_i as f64 * step;
    if best_i == 0 || best_i == cells {
        return Ok(InputCouplerOptimum {
            input_coupler: t_grid,
            efficiency: best,
        });
    }
    let (t, e) = golden_section_max(
        |t| eff(t).unwrap_or(f64::NEG_INFINITY),
        t_grid - step,
        t_grid + step,
        1e-10,
    );
    Ok(if e > best {
        InputCouplerOptimum {
            input_coupler: t,
            efficiency: e,
        }
    } else {
        InputCouplerOptimum {
            input_coupler: t_grid,
            efficiency: best,
        }
    })
}

/// Round-trip loss that makes the doubler emit `p_sh_target` from `p_in`
/// at the given coupler and conversion coefficient.
pub fn fit_round_trip_loss(p_in: f64, p_sh_target: f64, input_coupler: f64, conversion: f64) -> Result<f64> {
    let output = |loss: f64| -> f64 {
        DoublerConfig::new(input_coupler, loss, conversion)
            .and_then(|cfg| shg_output(p_in, &cfg))
            .map(|op| op.p_sh)
            .unwrap_or(f64::NAN)
    };
    let lossless = output(0.0);
    if !(p_sh_target > 0.0 && p_sh_target < lossless) {
        return Err(Error::Fit(format!(
            "target {p_sh_target} W not reachable (lossless cavity gives {lossless} W)"
        )));
    }
    bisect(|l| output(l) - p_sh_target, 0.0, 0.999, 1e-12).map_err(|e| Error::Fit(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn linear_buildup(cfg: &DoublerConfig) -> f64 {
        cfg.input_coupler / (1.0 - cfg.passive_round_trip().sqrt()).powi(2)
    }

    #[test]
    fn trivial_limits() {
        let open = DoublerConfig::new(1.0, 0.0, 0.0).unwrap();
        assert_relative_eq!(circulating_power(0.3, &open).unwrap(), 0.3, max_relative = 1e-12);
        assert_eq!(circulating_power(0.0, &DoublerConfig::fitted()).unwrap(), 0.0);
        let op = shg_output(0.0, &DoublerConfig::fitted()).unwrap();
        assert_eq!((op.p_sh, op.efficiency), (0.0, 0.0));
        let dark = DoublerConfig::new(0.1, 0.045, 0.0).unwrap();
        let op = shg_output(0.5, &dark).unwrap();
        assert_eq!((op.p_sh, op.efficiency), (0.0, 0.0));
    }

    #[test]
    fn fitted_endpoint() {
        let cfg = DoublerConfig::fitted();
        assert!((circulating_power(0.57, &cfg).unwrap() - 3.34).abs() < 0.01);
        let op = shg_output(0.57, &cfg).unwrap();
        assert!((op.p_sh - 0.40).abs() < 0.02, "{}", op.p_sh);
        assert!((op.efficiency - 0.70).abs() < 0.03, "{}", op.efficiency);
        assert_relative_eq!(op.p_sh, cfg.conversion * op.p_circ * op.p_circ, max_relative = 1e-15);
    }

    #[test]
    fn mid_power_efficiency() {
        // frozen from an independent bracketed-root evaluation
        let op = shg_output(0.3, &DoublerConfig::fitted()).unwrap();
        assert_relative_eq!(op.efficiency, 0.66265, epsilon = 1e-4);
    }

    #[test]
    fn sweep_shape() {
        let cfg = DoublerConfig::fitted();
        let inputs: Vec<f64> = (0..=57).map(|i| i as f64 * 0.01).collect();
        let rows = efficiency_sweep(&inputs, &cfg);
        let effs: Vec<f64> = rows.iter().map(|r| r.1.as_ref().unwrap().efficiency).collect();
        for w in effs[1..].windows(2) {
            assert!(w[1] > w[0]);
        }
        assert!((effs.last().unwrap() - 0.70).abs() < 0.03);
        assert!(efficiency_sweep(&[], &cfg).is_empty());
        let order: Vec<f64> = efficiency_sweep(&[0.3, 0.1, 0.2], &cfg).iter().map(|r| r.0).collect();
        assert_eq!(order, vec![0.1, 0.2, 0.3]);
    }

    #[test]
    fn small_signal_efficiency_is_linear() {
        let cfg = DoublerConfig::fitted();
        let slope = cfg.conversion * linear_buildup(&cfg).powi(2);
        let pts: Vec<(f64, f64)> = (1..=10)
            .map(|i| i as f64 * 1e-6)
            .map(|p| (p, shg_output(p, &cfg).unwrap().efficiency))
            .collect();
        // least-squares slope through the origin
        let fit = pts.iter().map(|(p, e)| p * e).sum::<f64>() / pts.iter().map(|(p, _)| p * p).sum::<f64>();
        assert!((fit / slope - 1.0).abs() < 0.05);
    }

    #[test]
    fn input_coupler_optimum() {
        let cfg = DoublerConfig::fitted();
        let opt = optimal_input_coupler(0.57, cfg.round_trip_loss, cfg.conversion, (0.01, 0.5)).unwrap();
        assert!(
            opt.input_coupler > 0.15 && opt.input_coupler < 0.18,
            "{}",
            opt.input_coupler
        );
        assert!(opt.efficiency >= 0.70);
        let (t_o, e_o) = (0..=4900)
            .map(|i| 0.01 + i as f64 * 1e-4)
            .map(|t| {
                (
                    t,
                    shg_output(0.57, &DoublerConfig::new(t, 0.045, 0.036).unwrap())
                        .unwrap()
                        .efficiency,
                )
            })
            .fold((0.0, 0.0), |b, p| if p.1 > b.1 { p } else { b });
        assert!((opt.input_coupler - t_o).abs() < 2e-4);
        assert!(opt.efficiency >= e_o - 1e-12);
        assert!(matches!(
            optimal_input_coupler(0.57, 0.045, 0.0, (0.01, 0.5)),
            Err(Error::DegenerateOptimum(_))
        ));
        assert!(optimal_input_coupler(0.57, 0.045, 0.036, (0.5, 0.1)).is_err());
    }

    #[test]
    fn impedance_matching_approximation() {
        let g = 1e-4;
        let p = 0.01;
        let opt = optimal_input_coupler(p, 0.0, g, (0.0002, 0.1)).unwrap();
        let approx = (g * p).sqrt();
        assert!((opt.input_coupler / approx - 1.0).abs() < 0.2);
    }

    #[test]
    fn loss_fit_reproduces_target() {
        let l = fit_round_trip_loss(0.57, 0.40, 0.10, 0.036).unwrap();
        assert!((l - 0.045).abs() < 0.002, "{l}");
        let cfg = DoublerConfig::new(0.10, l, 0.036).unwrap();
        assert_relative_eq!(shg_output(0.57, &cfg).unwrap().p_sh, 0.40, max_relative = 1e-9);
        assert!(fit_round_trip_loss(0.57, 0.6, 0.10, 0.036).is_err());
    }

    #[test]
    fn weak_conversion_matches_linear_cavity() {
        let cfg = DoublerConfig::new(0.1, 0.045, 1e-9).unwrap();
        let p = circulating_power(0.5, &cfg).unwrap();
        assert_relative_eq!(p, 0.5 * linear_buildup(&cfg), max_relative = 1e-6);
    }

    #[test]
    fn guess_independence() {
        let cfg = DoublerConfig::fitted();
        let reference = circulating_power(0.57, &cfg).unwrap();
        for k in 0..=20 {
            let guess = k as f64 * 0.5;
            let p = circulating_power_from(0.57, &cfg, guess).unwrap();
            assert_relative_eq!(p, reference, max_relative = 1e-9);
        }
    }

    proptest! {
        #[test]
        fn energy_bound(t in 0.01f64..0.5, l in 0.0f64..0.1, g in 0.0f64..0.1, p in 0.0f64..1.0) {
            let cfg = DoublerConfig::new(t, l, g).unwrap();
            let op = shg_output(p, &cfg).unwrap();
            prop_assert!(op.efficiency <= 1.0 && op.efficiency >= 0.0);
            prop_assert!(op.p_sh <= p + 1e-15);
        }

        #[test]
        fn solvers_agree(t in 0.01f64..0.5, l in 0.0f64..0.1, g in 0.0f64..0.1, p in 0.001f64..1.0, guess in 0.0f64..20.0) {
            let cfg = DoublerConfig::new(t, l, g).unwrap();
            let a = circulating_power(p, &cfg).unwrap();
            let b = circulating_power_from(p, &cfg, guess).unwrap();
            prop_assert!((a / b - 1.0).abs() < 1e-9);
        }

        #[test]
        fn buildup_monotonicity(p in 0.01f64..1.0, dp in 0.001f64..0.1, l in 0.0f64..0.09, dl in 0.001f64..0.01) {
            let cfg = DoublerConfig::new(0.1, l, 0.036).unwrap();
            let lossier = DoublerConfig::new(0.1, l + dl, 0.036).unwrap();
            let base = circulating_power(p, &cfg).unwrap();
            prop_assert!(circulating_power(p + dp, &cfg).unwrap() > base);
            prop_assert!(circulating_power(p, &lossier).unwrap() < base);
        }
    }
}
