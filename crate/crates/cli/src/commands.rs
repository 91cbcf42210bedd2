//! The `enl`, `reproduce`, `optimize` and `predict` commands. Each returns a
//! report value; printing and file output are left to the caller.

use std::fmt;

use clap::ValueEnum;

use squeezelab_core::nlo::{
    bk_focus_factor, cavity_waist, deff_from_enl, enl_from_deff, focusing_solution, optimize_sigma, FocusingSolution,
};
use squeezelab_core::opo::{
    escape_efficiency_at_x, optimize_coupler, oscillation_threshold, pump_power_at_x, LossModel,
};
use squeezelab_core::shg::{efficiency_sweep, optimal_input_coupler, shg_output, DoublerConfig};
use squeezelab_core::squeezing::{predict_limit, squeezing_vs_pump, SqueezingLimit};

use crate::artifact::CsvArtifact;
use crate::config::Model;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig2,
    Fig3a,
    Fig3b,
    Fig4b,
}

impl Figure {
    pub const ALL: [Figure; 4] = [Figure::Fig2, Figure::Fig3a, Figure::Fig3b, Figure::Fig4b];

    pub fn id(self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2",
            Figure::Fig3a => "fig3a",
            Figure::Fig3b => "fig3b",
            Figure::Fig4b => "fig4b",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Coupler,
    DoublerCoupler,
    Sigma,
}

fn provenance(command: &str, hash: &str) -> String {
    format!("squeezelab {command} config-sha256={hash}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnlReport {
    pub focus: FocusingSolution,
    pub waist: f64,
    pub enl_model: f64,
    pub enl_measured: f64,
    pub d_eff_inverted: f64,
    pub cavity_waist: Option<f64>,
}

pub fn enl(model: &Model) -> Result<EnlReport, CliError> {
    let focus = focusing_solution(&model.crystal, &model.focusing).map_err(|e| CliError::solver("focusing", e))?;
    let enl_model = enl_from_deff(&model.crystal, &model.focusing).map_err(|e| CliError::solver("E_NL", e))?;
    let d_eff_inverted = deff_from_enl(model.opo.enl, &model.crystal, &model.focusing)
        .map_err(|e| CliError::solver("d_eff inversion", e))?;
    let cavity_waist = match model.cavity {
        Some(c) => Some(
            cavity_waist(c.mirror_roc, c.curved_separation, c.round_trip, &model.crystal)
                .map_err(|e| CliError::solver("cavity waist", e))?,
        ),
        None => None,
    };
    Ok(EnlReport {
        focus,
        waist: model.focusing.waist,
        enl_model: enl_model.value(),
        enl_measured: model.opo.enl.value(),
        d_eff_inverted,
        cavity_waist,
    })
}

impl EnlReport {
    pub fn to_csv(&self, hash: &str) -> CsvArtifact {
        let mut a = CsvArtifact::new(
            "enl.csv",
            provenance("enl", hash),
            &[
                "xi",
                "confocal_m",
                "sigma",
                "h",
                "enl_model_per_W",
                "enl_measured_per_W",
                "d_eff_inverted_pm_per_V",
            ],
        );
        a.push(vec![
            self.focus.xi,
            self.focus.confocal_parameter,
            self.focus.sigma,
            self.focus.h,
            self.enl_model,
            self.enl_measured,
            self.d_eff_inverted * 1e12,
        ]);
        a
    }
}

impl fmt::Display for EnlReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "waist                = {:.3} um", self.waist * 1e6)?;
        writeln!(
            f,
            "confocal parameter b = {:.4} mm",
            self.focus.confocal_parameter * 1e3
        )?;
        writeln!(f, "xi = L/b             = {:.4}", self.focus.xi)?;
        writeln!(f, "sigma                = {:.4}", self.focus.sigma)?;
        writeln!(f, "h(sigma, xi)         = {:.5}", self.focus.h)?;
        writeln!(f, "E_NL (model)         = {:.5} /W", self.enl_model)?;
        writeln!(f, "E_NL (measured)      = {:.5} /W", self.enl_measured)?;
        writeln!(f, "d_eff from measured  = {:.3} pm/V", self.d_eff_inverted * 1e12)?;
        if let Some(w) = self.cavity_waist {
            writeln!(f, "cavity eigenmode waist = {:.3} um", w * 1e6)?;
        }
        Ok(())
    }
}

/// Model versus bench threshold for one output coupler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdGap {
    pub coupler: f64,
    pub model: f64,
    pub measured: f64,
}

impl ThresholdGap {
    /// `(measured - model) / model`.
    pub fn relative(&self) -> f64 {
        (self.measured - self.model) / self.model
    }
}

pub fn threshold_gaps(model: &Model) -> Result<Vec<ThresholdGap>, CliError> {
    model
        .threshold_measurements
        .iter()
        .map(|&(coupler, measured)| {
            let p = oscillation_threshold(coupler, model.opo.enl, &model.opo.loss)
                .map_err(|e| CliError::solver(format_args!("threshold T={coupler}"), e))?;
            Ok(ThresholdGap {
                coupler,
                model: p,
                measured,
            })
        })
        .collect()
}

pub fn reproduce(figure: Figure, model: &Model, hash: &str) -> Result<CsvArtifact, CliError> {
    let prov = provenance(&format!("reproduce {}", figure.id()), hash);
    let name = format!("{}.csv", figure.id());
    let opo = &model.opo;
    match figure {
        Figure::Fig2 => {
            let mut a = CsvArtifact::new(&name, prov, &["p_in_W", "p_sh_W", "efficiency"]);
            for (p, row) in efficiency_sweep(&model.sweep.fig2_p_in_W.points(), &model.doubler) {
                let op = row.map_err(|e| CliError::solver(format_args!("fig2 row p_in_W={p}"), e))?;
                a.push(vec![p, op.p_sh, op.efficiency]);
            }
            Ok(a)
        }
        Figure::Fig3a => {
            let mut a = CsvArtifact::new(&name, prov, &["T", "p_th_W"]);
            for t in model.sweep.fig3_T.points() {
                let p = oscillation_threshold(t, opo.enl, &opo.loss)
                    .map_err(|e| CliError::solver(format_args!("fig3a row T={t}"), e))?;
                a.push(vec![t, p]);
            }
            Ok(a)
        }
        Figure::Fig3b => {
            let mut a = CsvArtifact::new(&name, prov, &["T", "rho_x0", "rho_x07", "rho_x1"]);
            for t in model.sweep.fig3_T.points() {
                let mut row = vec![t];
                for x in [0.0, 0.7, 1.0] {
                    let rho = escape_efficiency_at_x(x, t, opo.enl, &opo.loss)
                        .map_err(|e| CliError::solver(format_args!("fig3b row T={t} x={x}"), e))?;
                    row.push(rho);
                }
                a.push(row);
            }
            Ok(a)
        }
        Figure::Fig4b => {
            let mut a = CsvArtifact::new(&name, prov, &["pump_W", "squeeze_dB", "antisqueeze_dB"]);
            let rows = squeezing_vs_pump(opo, &model.detection, &model.sweep.fig4b_pump_W.points())
                .map_err(|e| CliError::solver("fig4b threshold", e))?;
            for (p, row) in rows {
                let r = row.map_err(|e| CliError::solver(format_args!("fig4b row pump_W={p}"), e))?;
                a.push(vec![p, r.squeeze_db, r.antisqueeze_db]);
            }
            Ok(a)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeReport {
    pub target: Target,
    pub argument_name: &'static str,
    pub value_name: &'static str,
    pub argument: f64,
    pub value: f64,
    pub context: String,
    /// `(argument, value)` at 90%..110% of the optimum.
    pub sensitivity: Vec<(f64, f64)>,
}

const SENSITIVITY: [f64; 5] = [0.9, 0.95, 1.0, 1.05, 1.1];

pub fn optimize(target: Target, model: &Model, xi_override: Option<f64>) -> Result<OptimizeReport, CliError> {
    let opo = &model.opo;
    let sweep = &model.sweep;
    match target {
        Target::Coupler => {
            let x = sweep.coupler_x;
            let range = (sweep.coupler_T_range[0], sweep.coupler_T_range[1]);
            let opt = optimize_coupler(x, opo.enl, &opo.loss, range)
                .map_err(|e| CliError::solver("coupler optimization", e))?;
            let sensitivity = sweep_around(opt.coupler, |t| {
                escape_efficiency_at_x(x, t, opo.enl, &opo.loss).map_err(|e| CliError::solver(format_args!("T={t}"), e))
            })?;
            let at_config = escape_efficiency_at_x(x, opo.coupler, opo.enl, &opo.loss)
                .map_err(|e| CliError::solver("configured coupler", e))?;
            Ok(OptimizeReport {
                target,
                argument_name: "T",
                value_name: "rho",
                argument: opt.coupler,
                value: opt.escape_efficiency,
                context: format!(
                    "x = {x}, range [{}, {}]; configured T = {} gives rho = {at_config:.5}",
                    range.0, range.1, opo.coupler
                ),
                sensitivity,
            })
        }
        Target::DoublerCoupler => {
            let p_in = sweep.doubler_p_in_W;
            let d = &model.doubler;
            let range = (sweep.doubler_T_range[0], sweep.doubler_T_range[1]);
            let opt = optimal_input_coupler(p_in, d.round_trip_loss, d.conversion, range)
                .map_err(|e| CliError::solver("input-coupler optimization", e))?;
            let sensitivity = sweep_around(opt.input_coupler, |t| {
                DoublerConfig::new(t, d.round_trip_loss, d.conversion)
                    .and_then(|cfg| shg_output(p_in, &cfg))
                    .map(|op| op.efficiency)
                    .map_err(|e| CliError::solver(format_args!("T_in={t}"), e))
            })?;
            let at_config = shg_output(p_in, d).map_err(|e| CliError::solver("configured doubler", e))?;
            Ok(OptimizeReport {
                target,
                argument_name: "T_in",
                value_name: "efficiency",
                argument: opt.input_coupler,
                value: opt.efficiency,
                context: format!(
                    "p_in = {p_in} W, range [{}, {}]; configured T_in = {} gives efficiency = {:.5}",
                    range.0, range.1, d.input_coupler, at_config.efficiency
                ),
                sensitivity,
            })
        }
        Target::Sigma => {
            let xi = match xi_override {
                Some(xi) => xi,
                None => model.focusing.xi(&model.crystal),
            };
            let opt = optimize_sigma(xi).map_err(|e| CliError::solver("sigma optimization", e))?;
            let sensitivity = sweep_around(opt.sigma, |s| {
                bk_focus_factor(s, xi).map_err(|e| CliError::solver(format_args!("sigma={s}"), e))
            })?;
            Ok(OptimizeReport {
                target,
                argument_name: "sigma",
                value_name: "h",
                argument: opt.sigma,
                value: opt.h,
                context: format!("xi = {xi}"),
                sensitivity,
            })
        }
    }
}

fn sweep_around<F>(center: f64, f: F) -> Result<Vec<(f64, f64)>, CliError>
where
    F: Fn(f64) -> Result<f64, CliError>,
{
    SENSITIVITY
        .iter()
        .map(|k| {
            let arg = center * k;
            Ok((arg, f(arg)?))
        })
        .collect()
}

impl OptimizeReport {
    pub fn to_csv(&self, hash: &str) -> CsvArtifact {
        let name = match self.target {
            Target::Coupler => "optimize_coupler.csv",
            Target::DoublerCoupler => "optimize_doubler_coupler.csv",
            Target::Sigma => "optimize_sigma.csv",
        };
        let mut a = CsvArtifact::new(
            name,
            provenance(&format!("optimize {name}"), hash),
            &[self.argument_name, self.value_name],
        );
        for &(x, v) in &self.sensitivity {
            a.push(vec![x, v]);
        }
        a
    }
}

impl fmt::Display for OptimizeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.context)?;
        writeln!(
            f,
            "optimum: {} = {:.6}, {} = {:.6}",
            self.argument_name, self.argument, self.value_name, self.value
        )?;
        writeln!(f, "{:>12} {:>12} {:>10}", self.argument_name, self.value_name, "rel")?;
        for &(x, v) in &self.sensitivity {
            writeln!(f, "{x:>12.6} {v:>12.6} {:>10.5}", v / self.value)?;
        }
        Ok(())
    }
}

/// Parameter overrides for `predict`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PredictOverrides {
    pub l0: Option<f64>,
    pub a_per_w: Option<f64>,
    pub theta_deg: Option<f64>,
    pub coupler: Option<f64>,
    pub eta_homodyne: Option<f64>,
    pub analysis_mhz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictReport {
    pub limit: SqueezingLimit,
    pub threshold: f64,
    pub threshold_is_measured: bool,
    pub grid: Vec<f64>,
    pub curve: Vec<(f64, f64, f64)>,
}

pub fn predict(model: &Model, ov: PredictOverrides) -> Result<PredictReport, CliError> {
    let mut opo = model.opo;
    let mut chain = model.detection;
    if ov.l0.is_some() || ov.a_per_w.is_some() || ov.coupler.is_some() {
        // a bench threshold belongs to the cavity it was measured on
        opo.measured_threshold = None;
    }
    let loss = LossModel::new(
        ov.l0.unwrap_or(opo.loss.passive),
        ov.a_per_w.unwrap_or(opo.loss.per_watt),
    )
    .map_err(|e| CliError::Config(format!("--l0/--a-per-w: {e}")))?;
    opo.loss = loss;
    if let Some(t) = ov.coupler {
        if !(t > 0.0 && t < 1.0) {
            return Err(CliError::Config(format!("--coupler-t: must be in (0, 1), got {t}")));
        }
        opo.coupler = t;
    }
    if let Some(theta) = ov.theta_deg {
        if !(0.0..90.0).contains(&theta) {
            return Err(CliError::Config(format!(
                "--theta-deg: must be in [0, 90), got {theta}"
            )));
        }
        chain.phase_noise_deg = theta;
    }
    if let Some(eta) = ov.eta_homodyne {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(CliError::Config(format!(
                "--eta-homodyne: must be in (0, 1], got {eta}"
            )));
        }
        chain.eta_homodyne = eta;
    }
    if let Some(mhz) = ov.analysis_mhz {
        if mhz.is_nan() || mhz < 0.0 {
            return Err(CliError::Config(format!("--analysis-mhz: must be >= 0, got {mhz}")));
        }
        chain.analysis_omega = 2.0 * std::f64::consts::PI * mhz * 1e6;
    }
    let grid = model.sweep.predict_x.points();
    let limit = predict_limit(&opo, &chain, &grid).map_err(|e| CliError::solver("predict", e))?;
    let threshold = opo
        .effective_threshold()
        .map_err(|e| CliError::solver("threshold", e))?;
    let curve = grid
        .iter()
        .map(|&x| {
            let pump = x * x * threshold;
            squeezelab_core::squeezing::squeezing_at(&opo, &chain, pump, threshold)
                .map(|r| (x, pump, r.squeeze_db))
                .map_err(|e| CliError::solver(format_args!("predict x={x}"), e))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PredictReport {
        limit,
        threshold,
        threshold_is_measured: opo.measured_threshold.is_some(),
        grid,
        curve,
    })
}

impl PredictReport {
    pub fn to_csv(&self, hash: &str) -> CsvArtifact {
        let mut a = CsvArtifact::new(
            "predict.csv",
            provenance("predict", hash),
            &["x", "pump_W", "squeeze_dB"],
        );
        for &(x, p, s) in &self.curve {
            a.push(vec![x, p, s]);
        }
        a
    }

    pub fn warning(&self) -> Option<String> {
        self.limit.at_grid_edge.then(|| {
            format!(
                "warning: optimum at grid edge x = {}; squeezing may be unbounded as x -> 1",
                self.limit.x
            )
        })
    }
}

impl fmt::Display for PredictReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "threshold ({}) = {:.2} mW",
            if self.threshold_is_measured {
                "measured"
            } else {
                "model"
            },
            self.threshold * 1e3
        )?;
        writeln!(
            f,
            "best squeezing = {:.3} dB at x = {:.3} (pump {:.1} mW)",
            self.limit.squeeze_db,
            self.limit.x,
            self.limit.pump * 1e3
        )
    }
}

/// Model threshold and escape efficiency at the configured coupler.
pub fn coupler_summary(model: &Model) -> Result<(f64, f64), CliError> {
    let o = &model.opo;
    let p = oscillation_threshold(o.coupler, o.enl, &o.loss).map_err(|e| CliError::solver("threshold", e))?;
    let x1 = pump_power_at_x(1.0, o.coupler, o.enl, &o.loss).map_err(|e| CliError::solver("pump", e))?;
    let rho =
        squeezelab_core::opo::escape_efficiency(o.coupler, x1, &o.loss).map_err(|e| CliError::solver("rho", e))?;
    Ok((p, rho))
}
