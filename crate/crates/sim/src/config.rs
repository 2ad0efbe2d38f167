//! TOML configuration. Files use degrees, knots, km and minutes; everything
//! is converted to radians and km/min when building the core types.

use std::path::Path;

use serde::{Deserialize, Serialize};
use vbtrack_core::mapmle::MapMleConfig;
use vbtrack_core::pipeline::{AdaptationMode, FilterFamily, FilterOptions, MeanCarry};
use vbtrack_core::scenario::{deg, knots_to_km_per_min, CaseKind, NoiseCase, ScenarioConfig};
use vbtrack_core::vbniw::{Denominator, TuningGrid, VbOptions};

use crate::error::{Error, Result};

pub const SCENARIO1: &str = include_str!("../presets/scenario1.toml");
pub const SCENARIO2: &str = include_str!("../presets/scenario2.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub scenario: ScenarioSection,
    pub prior: PriorSection,
    pub noise: NoiseSection,
    #[serde(default)]
    pub filter: FilterSection,
    #[serde(default)]
    pub campaign: CampaignSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: String,
    pub initial_range_km: f64,
    pub initial_bearing_deg: f64,
    pub target_speed_kn: f64,
    pub target_course_deg: f64,
    pub ownship_speed_kn: f64,
    pub ownship_initial_course_deg: f64,
    pub ownship_final_course_deg: f64,
    pub maneuver_start_min: f64,
    pub maneuver_end_min: f64,
    pub sample_time_s: f64,
    pub total_time_min: f64,
    /// km²/min³
    pub process_intensity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSection {
    pub sigma_range_km: f64,
    pub sigma_speed_kn: f64,
    pub sigma_course_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub mean_deg: f64,
    /// Case 1.
    pub static_sigma_deg: f64,
    /// Case 2, at the closest and farthest noise-free ranges.
    pub varying_sigma_min_deg: f64,
    pub varying_sigma_max_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSection {
    pub ghf_order: usize,
    pub ukf_kappa: f64,
    /// Fixed-point stopping threshold on the state change (km, km/min).
    pub zeta: f64,
    pub max_iter: usize,
    /// "mean" (u - m - 1) or "mode" (u + m + 1).
    pub denominator: String,
    pub vb_alpha: f64,
    pub vb_dof: f64,
    /// "fixed", "propagate" or "recursive".
    pub vb_mean: String,
    pub dof_grid: [u32; 2],
    pub alpha_grid: [u32; 2],
    pub window: usize,
    pub mean_removed: bool,
    pub guess_fraction: f64,
}

impl Default for FilterSection {
    fn default() -> Self {
        let o = FilterOptions::default();
        Self {
            ghf_order: o.ghf_order,
            ukf_kappa: o.ukf_kappa,
            zeta: o.vb.zeta,
            max_iter: o.vb.max_iter,
            denominator: "mean".into(),
            vb_alpha: o.vb_alpha,
            vb_dof: o.vb_dof,
            vb_mean: "fixed".into(),
            dof_grid: [o.tuning.dof_min, o.tuning.dof_max],
            alpha_grid: [o.tuning.alpha_min, o.tuning.alpha_max],
            window: o.mapmle.window,
            mean_removed: o.mapmle.mean_removed,
            guess_fraction: o.guess_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignSection {
    /// Runs per cell for track loss.
    pub runs: usize,
    /// Leading runs that also feed RMSE, bias and ANEES.
    pub metric_runs: usize,
    pub seed: u64,
    pub cases: Vec<u8>,
    pub filters: Vec<String>,
    pub modes: Vec<String>,
    /// km
    pub track_loss_bound: f64,
}

impl Default for CampaignSection {
    fn default() -> Self {
        Self {
            runs: 2000,
            metric_runs: 500,
            seed: 1,
            cases: vec![1, 2],
            filters: FilterFamily::ALL.iter().map(|f| f.name().to_string()).collect(),
            modes: ["nonadaptive", "vb-tuned", "mapmle"].iter().map(|m| m.to_string()).collect(),
            track_loss_bound: vbtrack_core::metrics::TRACK_LOSS_BOUND,
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(path.display().to_string(), e))?;
        Self::parse(&text)
    }

    /// `1`, `2`, `scenario1`, `scenario2`, or a path to a TOML file.
    pub fn resolve(name: &str) -> Result<Self> {
        match name {
            "1" | "scenario1" => Self::parse(SCENARIO1),
            "2" | "scenario2" => Self::parse(SCENARIO2),
            path => Self::load(Path::new(path)),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn scenario_config(&self, case: CaseKind) -> Result<ScenarioConfig> {
        let s = &self.scenario;
        let mut cfg = ScenarioConfig {
            initial_range: s.initial_range_km,
            initial_bearing: deg(s.initial_bearing_deg),
            target_speed: knots_to_km_per_min(s.target_speed_kn),
            target_course: deg(s.target_course_deg),
            ownship_speed: knots_to_km_per_min(s.ownship_speed_kn),
            ownship_initial_course: deg(s.ownship_initial_course_deg),
            ownship_final_course: deg(s.ownship_final_course_deg),
            maneuver_start: s.maneuver_start_min,
            maneuver_end: s.maneuver_end_min,
            sigma_r: self.prior.sigma_range_km,
            sigma_s: knots_to_km_per_min(self.prior.sigma_speed_kn),
            sigma_c: deg(self.prior.sigma_course_deg),
            r_m_true: deg(self.noise.mean_deg),
            noise_case: NoiseCase::Static { sigma: deg(self.noise.static_sigma_deg) },
            q_bar: s.process_intensity,
            sample_time_s: s.sample_time_s,
            total_time: s.total_time_min,
        };
        if case == CaseKind::Varying {
            cfg = cfg.with_varying_noise(deg(self.noise.varying_sigma_min_deg), deg(self.noise.varying_sigma_max_deg));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn filter_options(&self) -> Result<FilterOptions> {
        let f = &self.filter;
        let denominator = match f.denominator.as_str() {
            "mean" => Denominator::Mean,
            "mode" => Denominator::Mode,
            _ => return Err(Error::Config("filter.denominator must be \"mean\" or \"mode\"".into())),
        };
        let vb_mean = match f.vb_mean.as_str() {
            "fixed" => MeanCarry::Fixed,
            "propagate" => MeanCarry::Propagate,
            "recursive" => MeanCarry::Recursive,
            _ => return Err(Error::Config("filter.vb_mean must be fixed, propagate or recursive".into())),
        };
        if f.dof_grid[0] > f.dof_grid[1] || f.alpha_grid[0] > f.alpha_grid[1] {
            return Err(Error::Config("tuning grids must be [min, max] with min <= max".into()));
        }
        if !(f.zeta > 0.0) || f.max_iter == 0 {
            return Err(Error::Config("zeta must be positive and max_iter at least 1".into()));
        }
        if !(f.guess_fraction > 0.0) {
            return Err(Error::Config("guess_fraction must be positive".into()));
        }
        Ok(FilterOptions {
            ghf_order: f.ghf_order,
            ukf_kappa: f.ukf_kappa,
            vb: VbOptions { zeta: f.zeta, max_iter: f.max_iter, denominator },
            tuning: TuningGrid {
                dof_min: f.dof_grid[0],
                dof_max: f.dof_grid[1],
                alpha_min: f.alpha_grid[0],
                alpha_max: f.alpha_grid[1],
            },
            vb_alpha: f.vb_alpha,
            vb_dof: f.vb_dof,
            mapmle: MapMleConfig { window: f.window, mean_removed: f.mean_removed, adapt: true },
            vb_mean,
            guess_fraction: f.guess_fraction,
        })
    }

    pub fn cases(&self) -> Result<Vec<CaseKind>> {
        self.campaign.cases.iter().map(|c| parse_case(&c.to_string())).collect()
    }

    pub fn filters(&self) -> Result<Vec<FilterFamily>> {
        self.campaign.filters.iter().map(|f| Ok(f.parse::<FilterFamily>()?)).collect()
    }

    pub fn modes(&self) -> Result<Vec<AdaptationMode>> {
        self.campaign.modes.iter().map(|m| Ok(m.parse::<AdaptationMode>()?)).collect()
    }
}

pub fn parse_case(s: &str) -> Result<CaseKind> {
    match s {
        "1" => Ok(CaseKind::Static),
        "2" => Ok(CaseKind::Varying),
        _ => Err(Error::Config(format!("case must be 1 or 2, got {s:?}"))),
    }
}

pub fn case_number(case: CaseKind) -> u8 {
    match case {
        CaseKind::Static => 1,
        CaseKind::Varying => 2,
    }
}
