//! JSON run configuration. Every physical quantity carries its unit in the
//! key name; conversion to SI happens once, in [`RunConfig::resolve`].

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use squeezelab_core::nlo::{CrystalSpec, EffectiveNonlinearity, FocusingGeometry, SigmaMode};
use squeezelab_core::numerics::grid;
use squeezelab_core::opo::{LossModel, OpoConfig};
use squeezelab_core::shg::DoublerConfig;
use squeezelab_core::squeezing::DetectionChain;

use crate::error::CliError;

pub const BUNDLED_DEFAULTS: &str = include_str!("../configs/ppmgln.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub crystal: CrystalSection,
    pub focusing: FocusingSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cavity: Option<CavitySection>,
    pub opo: OpoSection,
    pub detection: DetectionSection,
    pub doubler: DoublerSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrystalSection {
    pub d_eff_pm_per_V: f64,
    pub length_mm: f64,
    #[serde(default = "default_n_fund")]
    pub n_fund: f64,
    #[serde(default = "default_n_sh")]
    pub n_sh: f64,
    pub wavelength_nm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poling_period_um: Option<f64>,
}

fn default_n_fund() -> f64 {
    2.18
}

fn default_n_sh() -> f64 {
    2.29
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaKeyword {
    Optimize,
}

/// `"optimize"` or an explicit phase mismatch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaSetting {
    Fixed(f64),
    Keyword(SigmaKeyword),
}

impl Default for SigmaSetting {
    fn default() -> Self {
        SigmaSetting::Keyword(SigmaKeyword::Optimize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FocusingSection {
    pub waist_um: f64,
    #[serde(default)]
    pub sigma: SigmaSetting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySection {
    pub mirror_roc_mm: f64,
    pub curved_separation_mm: f64,
    pub round_trip_mm: f64,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdMeasurement {
    pub output_coupler_T: f64,
    pub threshold_mW: f64,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpoSection {
    pub output_coupler_T: f64,
    pub L0: f64,
    pub a_per_W: f64,
    pub enl_per_W: f64,
    pub round_trip_mm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measured_threshold_mW: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub threshold_measurements: Vec<ThresholdMeasurement>,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionSection {
    pub eta_homodyne: f64,
    #[serde(default = "one")]
    pub eta_propagation: f64,
    pub phase_noise_deg: f64,
    pub analysis_frequency_MHz: f64,
}

fn one() -> f64 {
    1.0
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoublerSection {
    pub input_coupler_T: f64,
    pub round_trip_loss: f64,
    pub gamma_sp_per_W: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Range {
    pub const fn new(start: f64, stop: f64, step: f64) -> Self {
        Range { start, stop, step }
    }

    pub fn points(&self) -> Vec<f64> {
        grid(self.start, self.stop, self.step)
    }
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub fig2_p_in_W: Range,
    pub fig3_T: Range,
    pub fig4b_pump_W: Range,
    pub coupler_x: f64,
    pub coupler_T_range: [f64; 2],
    pub doubler_p_in_W: f64,
    pub doubler_T_range: [f64; 2],
    pub predict_x: Range,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            fig2_p_in_W: Range::new(0.0, 0.6, 0.01),
            fig3_T: Range::new(0.05, 0.4, 0.005),
            fig4b_pump_W: Range::new(0.0, 0.35, 0.01),
            coupler_x: 1.0,
            coupler_T_range: [0.05, 0.4],
            doubler_p_in_W: 0.57,
            doubler_T_range: [0.01, 0.5],
            predict_x: Range::new(0.0, 0.99, 0.001),
        }
    }
}

/// Bow-tie geometry in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityGeometry {
    pub mirror_roc: f64,
    pub curved_separation: f64,
    pub round_trip: f64,
}

/// A validated configuration converted to model types.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub crystal: CrystalSpec,
    pub focusing: FocusingGeometry,
    pub cavity: Option<CavityGeometry>,
    pub opo: OpoConfig,
    pub detection: DetectionChain,
    pub doubler: DoublerConfig,
    /// `(coupler, threshold [W])` bench measurements.
    pub threshold_measurements: Vec<(f64, f64)>,
    pub sweep: SweepSection,
}

struct Checker(Vec<String>);

impl Checker {
    fn require(&mut self, path: &str, ok: bool, rule: &str, value: impl std::fmt::Display) {
        if !ok {
            self.0.push(format!("{path}: {rule}, got {value}"));
        }
    }

    fn range(&mut self, path: &str, r: &Range) {
        self.require(&format!("{path}.step"), r.step > 0.0, "must be > 0", r.step);
        self.require(&format!("{path}.stop"), r.stop >= r.start, "must be >= start", r.stop);
    }

    fn coupler_range(&mut self, path: &str, r: &[f64; 2]) {
        let ok = r[0] > 0.0 && r[1] < 1.0 && r[0] < r[1];
        self.require(path, ok, "must be [lo, hi] with 0 < lo < hi < 1", format!("{r:?}"));
    }
}

fn model_error(path: &str, err: squeezelab_core::Error) -> CliError {
    CliError::Config(format!("{path}: {err}"))
}

impl RunConfig {
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED_DEFAULTS).expect("bundled config parses")
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("{path}: {}", e.into_inner()))
        })
    }

    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::bundled()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                Self::from_json(&text)
            }
        }
    }

    /// SHA-256 of the canonical (re-serialized) configuration.
    pub fn content_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn resolve(&self) -> Result<Model, CliError> {
        let mut c = Checker(Vec::new());
        let cr = &self.crystal;
        c.require(
            "crystal.d_eff_pm_per_V",
            cr.d_eff_pm_per_V >= 0.0,
            "must be >= 0",
            cr.d_eff_pm_per_V,
        );
        c.require("crystal.length_mm", cr.length_mm > 0.0, "must be > 0", cr.length_mm);
        c.require("crystal.n_fund", cr.n_fund > 1.0, "must be > 1", cr.n_fund);
        c.require("crystal.n_sh", cr.n_sh > 1.0, "must be > 1", cr.n_sh);
        c.require(
            "crystal.wavelength_nm",
            cr.wavelength_nm > 0.0,
            "must be > 0",
            cr.wavelength_nm,
        );
        c.require(
            "focusing.waist_um",
            self.focusing.waist_um > 0.0,
            "must be > 0",
            self.focusing.waist_um,
        );
        if let Some(cav) = &self.cavity {
            c.require(
                "cavity.mirror_roc_mm",
                cav.mirror_roc_mm > 0.0,
                "must be > 0",
                cav.mirror_roc_mm,
            );
            c.require(
                "cavity.curved_separation_mm",
                cav.curved_separation_mm >= cr.length_mm,
                "must be >= crystal.length_mm",
                cav.curved_separation_mm,
            );
            c.require(
                "cavity.round_trip_mm",
                cav.round_trip_mm > cav.curved_separation_mm,
                "must exceed cavity.curved_separation_mm",
                cav.round_trip_mm,
            );
        }
        let o = &self.opo;
        c.require(
            "opo.output_coupler_T",
            o.output_coupler_T > 0.0 && o.output_coupler_T < 1.0,
            "must be in (0, 1)",
            o.output_coupler_T,
        );
        c.require("opo.L0", (0.0..1.0).contains(&o.L0), "must be in [0, 1)", o.L0);
        c.require("opo.a_per_W", o.a_per_W >= 0.0, "must be >= 0", o.a_per_W);
        c.require("opo.enl_per_W", o.enl_per_W > 0.0, "must be > 0", o.enl_per_W);
        c.require(
            "opo.round_trip_mm",
            o.round_trip_mm > 0.0,
            "must be > 0",
            o.round_trip_mm,
        );
        if let Some(p) = o.measured_threshold_mW {
            c.require("opo.measured_threshold_mW", p > 0.0, "must be > 0", p);
        }
        for (i, m) in o.threshold_measurements.iter().enumerate() {
            let path = format!("opo.threshold_measurements[{i}]");
            let t_ok = m.output_coupler_T > 0.0 && m.output_coupler_T < 1.0;
            c.require(
                &format!("{path}.output_coupler_T"),
                t_ok,
                "must be in (0, 1)",
                m.output_coupler_T,
            );
            c.require(
                &format!("{path}.threshold_mW"),
                m.threshold_mW > 0.0,
                "must be > 0",
                m.threshold_mW,
            );
        }
        let d = &self.detection;
        c.require(
            "detection.eta_homodyne",
            d.eta_homodyne > 0.0 && d.eta_homodyne <= 1.0,
            "must be in (0, 1]",
            d.eta_homodyne,
        );
        c.require(
            "detection.eta_propagation",
            d.eta_propagation > 0.0 && d.eta_propagation <= 1.0,
            "must be in (0, 1]",
            d.eta_propagation,
        );
        c.require(
            "detection.phase_noise_deg",
            (0.0..90.0).contains(&d.phase_noise_deg),
            "must be in [0, 90)",
            d.phase_noise_deg,
        );
        c.require(
            "detection.analysis_frequency_MHz",
            d.analysis_frequency_MHz >= 0.0,
            "must be >= 0",
            d.analysis_frequency_MHz,
        );
        let db = &self.doubler;
        c.require(
            "doubler.input_coupler_T",
            db.input_coupler_T > 0.0 && db.input_coupler_T < 1.0,
            "must be in (0, 1)",
            db.input_coupler_T,
        );
        c.require(
            "doubler.round_trip_loss",
            (0.0..1.0).contains(&db.round_trip_loss),
            "must be in [0, 1)",
            db.round_trip_loss,
        );
        c.require(
            "doubler.gamma_sp_per_W",
            db.gamma_sp_per_W >= 0.0,
            "must be >= 0",
            db.gamma_sp_per_W,
        );
        let s = &self.sweep;
        c.range("sweep.fig2_p_in_W", &s.fig2_p_in_W);
        c.range("sweep.fig3_T", &s.fig3_T);
        c.range("sweep.fig4b_pump_W", &s.fig4b_pump_W);
        c.range("sweep.predict_x", &s.predict_x);
        c.require("sweep.coupler_x", s.coupler_x >= 0.0, "must be >= 0", s.coupler_x);
        c.coupler_range("sweep.coupler_T_range", &s.coupler_T_range);
        c.require(
            "sweep.doubler_p_in_W",
            s.doubler_p_in_W > 0.0,
            "must be > 0",
            s.doubler_p_in_W,
        );
        c.coupler_range("sweep.doubler_T_range", &s.doubler_T_range);
        c.require(
            "sweep.fig3_T",
            s.fig3_T.start > 0.0 && s.fig3_T.stop < 1.0,
            "must lie inside (0, 1)",
            format!("[{}, {}]", s.fig3_T.start, s.fig3_T.stop),
        );
        c.require(
            "sweep.fig2_p_in_W.start",
            s.fig2_p_in_W.start >= 0.0,
            "must be >= 0",
            s.fig2_p_in_W.start,
        );
        c.require(
            "sweep.fig4b_pump_W.start",
            s.fig4b_pump_W.start >= 0.0,
            "must be >= 0",
            s.fig4b_pump_W.start,
        );
        c.require(
            "sweep.predict_x",
            s.predict_x.start >= 0.0 && s.predict_x.stop < 1.0,
            "must lie inside [0, 1)",
            format!("[{}, {}]", s.predict_x.start, s.predict_x.stop),
        );
        if !c.0.is_empty() {
            return Err(CliError::Config(c.0.join("; ")));
        }

        let mut crystal = CrystalSpec::new(
            cr.d_eff_pm_per_V * 1e-12,
            cr.length_mm * 1e-3,
            cr.n_fund,
            cr.n_sh,
            cr.wavelength_nm * 1e-9,
        )
        .map_err(|e| model_error("crystal", e))?;
        crystal.poling_period = cr.poling_period_um.map(|p| p * 1e-6);
        let sigma = match self.focusing.sigma {
            SigmaSetting::Fixed(s) => SigmaMode::Fixed(s),
            SigmaSetting::Keyword(SigmaKeyword::Optimize) => SigmaMode::Optimize,
        };
        let focusing =
            FocusingGeometry::new(self.focusing.waist_um * 1e-6, sigma).map_err(|e| model_error("focusing", e))?;
        let loss = LossModel::new(o.L0, o.a_per_W).map_err(|e| model_error("opo", e))?;
        let enl = EffectiveNonlinearity::new(o.enl_per_W).map_err(|e| model_error("opo.enl_per_W", e))?;
        let opo = OpoConfig::new(
            o.output_coupler_T,
            loss,
            enl,
            o.round_trip_mm * 1e-3,
            o.measured_threshold_mW.map(|p| p * 1e-3),
        )
        .map_err(|e| model_error("opo", e))?;
        let detection = DetectionChain::new(
            d.eta_homodyne,
            d.eta_propagation,
            d.phase_noise_deg,
            2.0 * PI * d.analysis_frequency_MHz * 1e6,
        )
        .map_err(|e| model_error("detection", e))?;
        let doubler = DoublerConfig::new(db.input_coupler_T, db.round_trip_loss, db.gamma_sp_per_W)
            .map_err(|e| model_error("doubler", e))?;
        let cavity = self.cavity.as_ref().map(|cav| CavityGeometry {
            mirror_roc: cav.mirror_roc_mm * 1e-3,
            curved_separation: cav.curved_separation_mm * 1e-3,
            round_trip: cav.round_trip_mm * 1e-3,
        });
        Ok(Model {
            crystal,
            focusing,
            cavity,
            opo,
            detection,
            doubler,
            threshold_measurements: o
                .threshold_measurements
                .iter()
                .map(|m| (m.output_coupler_T, m.threshold_mW * 1e-3))
                .collect(),
            sweep: s.clone(),
        })
    }
}
