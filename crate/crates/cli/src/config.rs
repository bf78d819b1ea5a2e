use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tripole::{
    CandidateGrid, DesignSpec, Direction, EpsilonPolicy, GroupNormConfig, Polarization, SolverSettings,
};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Plain,
    Reweighted,
    Ula,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Plain => "plain",
            Method::Reweighted => "reweighted",
            Method::Ula => "ula",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpsilonMode {
    Relative,
    Fixed,
}

/// Flat run configuration. Every key has a default; unknown keys are
/// rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub method: Method,
    /// Signed mainlobe elevation: `≥ 0` is `phi = +90°`, `< 0` is `phi = −90°`.
    pub theta_ml_deg: f64,
    pub gamma_deg: f64,
    pub eta_deg: f64,
    pub transition_deg: f64,
    pub sidelobe_step_deg: f64,
    pub alpha: f64,
    pub aperture_wl: f64,
    pub num_locations: usize,
    pub ula_spacing_wl: f64,
    pub prune_threshold: f64,
    pub epsilon_mode: EpsilonMode,
    pub epsilon: f64,
    pub stop_patience: usize,
    pub max_reweight_iters: usize,
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_solver_iters: usize,
    pub sweep_res_deg: f64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let group = GroupNormConfig::default();
        let solver = SolverSettings::default();
        Self {
            method: Method::Reweighted,
            theta_ml_deg: 0.0,
            gamma_deg: 55.0,
            eta_deg: 100.0,
            transition_deg: 10.0,
            sidelobe_step_deg: 1.0,
            alpha: 0.5,
            aperture_wl: 10.0,
            num_locations: 301,
            ula_spacing_wl: 0.5,
            prune_threshold: group.prune_threshold,
            epsilon_mode: EpsilonMode::Relative,
            epsilon: 1e-3,
            stop_patience: group.stop_patience,
            max_reweight_iters: group.max_reweight_iters,
            feas_tol: solver.feas_tol,
            gap_tol: solver.gap_tol,
            max_solver_iters: solver.max_iters,
            sweep_res_deg: 0.2,
            out_dir: PathBuf::from("out"),
        }
    }
}

/// Library inputs built from a validated [`RunConfig`].
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub spec: DesignSpec,
    pub group: GroupNormConfig,
    pub solver: SolverSettings,
}

impl Resolved {
    /// Grid the given method designs over: the candidate grid, or the
    /// uniform `ula_spacing_wl` grid for the ULA.
    pub fn grid_for(&self, method: Method) -> Result<CandidateGrid, CliError> {
        match method {
            Method::Ula => {
                let n = (self.config.aperture_wl / self.config.ula_spacing_wl).round() as usize + 1;
                keyed("ula_spacing_wl", CandidateGrid::from_aperture(self.config.aperture_wl, n))
            }
            _ => Ok(self.spec.grid.clone()),
        }
    }

    /// The spec with its grid swapped for the method's grid.
    pub fn spec_for(&self, method: Method) -> Result<DesignSpec, CliError> {
        Ok(DesignSpec {
            grid: self.grid_for(method)?,
            ..self.spec.clone()
        })
    }
}

fn keyed<T>(key: &str, r: tripole::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Config(format!("{key}: {e}")))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))
    }

    pub fn resolve(self) -> Result<Resolved, CliError> {
        let mainlobe = keyed("theta_ml_deg", Direction::from_signed_degrees(self.theta_ml_deg))?;
        let polarization = keyed("gamma_deg/eta_deg", Polarization::from_degrees(self.gamma_deg, self.eta_deg))?;
        if !(self.transition_deg.is_finite() && self.transition_deg >= 0.0) {
            return Err(CliError::Config(format!(
                "transition_deg: must be non-negative, got {}",
                self.transition_deg
            )));
        }
        let grid = keyed("num_locations/aperture_wl", CandidateGrid::from_aperture(self.aperture_wl, self.num_locations))?;
        let spec = keyed(
            "design",
            DesignSpec::with_transition(
                mainlobe,
                polarization,
                self.transition_deg,
                self.sidelobe_step_deg,
                self.alpha,
                grid,
            ),
        )?;
        let group = GroupNormConfig {
            epsilon: match self.epsilon_mode {
                EpsilonMode::Relative => EpsilonPolicy::Relative(self.epsilon),
                EpsilonMode::Fixed => EpsilonPolicy::Fixed(self.epsilon),
            },
            prune_threshold: self.prune_threshold,
            stop_patience: self.stop_patience,
            max_reweight_iters: self.max_reweight_iters,
        };
        keyed("reweighting", group.validate())?;
        let solver = SolverSettings {
            feas_tol: self.feas_tol,
            gap_tol: self.gap_tol,
            max_iters: self.max_solver_iters,
        };
        keyed("solver", solver.validate())?;
        if !(self.sweep_res_deg.is_finite() && self.sweep_res_deg > 0.0 && self.sweep_res_deg <= 90.0) {
            return Err(CliError::Config(format!(
                "sweep_res_deg: must be in (0, 90], got {}",
                self.sweep_res_deg
            )));
        }
        let ratio = self.aperture_wl / self.ula_spacing_wl;
        if self.method == Method::Ula && !(ratio.is_finite() && ratio >= 1.0 && (ratio - ratio.round()).abs() <= 1e-9) {
            return Err(CliError::Config(format!(
                "ula_spacing_wl: {} does not divide aperture_wl = {}",
                self.ula_spacing_wl, self.aperture_wl
            )));
        }
        Ok(Resolved {
            config: self,
            spec,
            group,
            solver,
        })
    }
}
