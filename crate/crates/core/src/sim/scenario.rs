use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    angle_svg, path_svg, trajectory_csv, verify_plan, Trajectory, VerifyReport, DEFAULT_STEPS,
};
use crate::error::{Error, Result};
use crate::planner::{plan, RootChoice, SteeringPlan};
use crate::trailer::Configuration;

/// Scenarios shipped with the crate, by name.
pub const BUNDLED_SCENARIOS: [(&str, &str); 2] = [
    ("fig1", include_str!("../../scenarios/fig1.json")),
    ("fig2", include_str!("../../scenarios/fig2.json")),
];

pub fn bundled_scenario(name: &str) -> Option<ScenarioSpec> {
    BUNDLED_SCENARIOS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| ScenarioSpec::from_json(text).expect("bundled scenarios are valid"))
}

fn default_steps() -> usize {
    DEFAULT_STEPS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub n: usize,
    pub zeta0: Vec<f64>,
    #[serde(rename = "zetaT")]
    pub zeta_t: Vec<f64>,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub root_choice: RootChoice,
}

impl ScenarioSpec {
    /// Parses and validates a scenario; missing required fields are listed
    /// together in one error.
    pub fn from_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        let obj = v
            .as_object()
            .ok_or_else(|| Error::InvalidInput("scenario must be a JSON object".into()))?;
        let missing: Vec<&str> = ["n", "zeta0", "zetaT"]
            .into_iter()
            .filter(|k| !obj.contains_key(*k))
            .collect();
        if !missing.is_empty() {
            return Err(Error::InvalidInput(format!(
                "scenario is missing fields: {}",
                missing.join(", ")
            )));
        }
        let spec: ScenarioSpec = serde_json::from_value(v)
            .map_err(|e| Error::InvalidInput(format!("bad scenario: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n != 2 {
            return Err(Error::InvalidInput(format!(
                "only two-trailer scenarios can be planned, got n = {}",
                self.n
            )));
        }
        for (field, v) in [("zeta0", &self.zeta0), ("zetaT", &self.zeta_t)] {
            if v.len() != self.n + 3 {
                return Err(Error::InvalidInput(format!(
                    "{field} needs {} entries, got {}",
                    self.n + 3,
                    v.len()
                )));
            }
        }
        if self.steps == 0 {
            return Err(Error::InvalidInput("steps must be positive".into()));
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        self.name.as_deref().unwrap_or("scenario")
    }

    /// Whether the terminal configuration lies exactly on
    /// `theta2 - theta1 = +-pi/2`, as given (no tolerance).
    pub fn terminal_on_singular_locus(&self) -> bool {
        let d = self.zeta_t[4] - self.zeta_t[3];
        d == FRAC_PI_2 || d == -FRAC_PI_2
    }
}

#[derive(Clone, Debug)]
pub struct ScenarioOutcome {
    pub spec: ScenarioSpec,
    pub plan: SteeringPlan,
    pub report: VerifyReport,
    pub trajectory: Trajectory,
}

#[derive(Serialize)]
struct OutcomeSummary<'a> {
    name: &'a str,
    terminal_on_singular_locus: bool,
    #[serde(flatten)]
    report: &'a VerifyReport,
}

impl ScenarioOutcome {
    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&OutcomeSummary {
            name: self.spec.name(),
            terminal_on_singular_locus: self.spec.terminal_on_singular_locus(),
            report: &self.report,
        })?)
    }

    /// Writes `<name>.csv`, `<name>_path.svg`, `<name>_angles.svg`,
    /// `<name>_plan.json` and `<name>_report.json` into `dir`.
    pub fn write_artifacts(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let name = self.spec.name();
        fs::write(
            dir.join(format!("{name}.csv")),
            trajectory_csv(&self.trajectory),
        )?;
        fs::write(
            dir.join(format!("{name}_path.svg")),
            path_svg(&self.trajectory, &format!("{name}: last trailer path")),
        )?;
        fs::write(
            dir.join(format!("{name}_angles.svg")),
            angle_svg(&self.trajectory, &format!("{name}: theta0, theta1, theta2")),
        )?;
        fs::write(
            dir.join(format!("{name}_plan.json")),
            serde_json::to_string_pretty(&self.plan)? + "\n",
        )?;
        fs::write(
            dir.join(format!("{name}_report.json")),
            self.summary_json()? + "\n",
        )?;
        Ok(())
    }
}

/// Plans, simulates and checks a scenario, optionally writing artifacts.
pub fn run_scenario(spec: &ScenarioSpec, out_dir: Option<&Path>) -> Result<ScenarioOutcome> {
    spec.validate()?;
    let z0 = Configuration::from_state(&spec.zeta0)?;
    let zt = Configuration::from_state(&spec.zeta_t)?;
    let plan = plan(&z0, &zt, spec.root_choice)?;
    let (report, trajectory) = verify_plan(&plan, spec.steps)?;
    let outcome = ScenarioOutcome {
        spec: spec.clone(),
        plan,
        report,
        trajectory,
    };
    if let Some(dir) = out_dir {
        outcome.write_artifacts(dir)?;
    }
    Ok(outcome)
}
