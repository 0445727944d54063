//! Experiment configurations and the runner behind the command line.

mod run;
mod sweep;

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constructions::{
    cantor_cylinder_system, convergent_sequence_space, cylinder_chart_system, damped_sequence,
    horseshoe_cascade, identity_map, koch_points, ks_alternating, list_constructions,
    power_growth_sequence, tent2, tent3, truncated_cascade, CascadeSpec, LambdaRule, MRule,
};
use crate::counting::{CountOptions, Mode, DEFAULT_EXACT_CAP};
use crate::error::{Error, Result};
use crate::estimators::{DEFAULT_BURN_IN, DEFAULT_WINDOW};
use crate::spaces::{PointCloud, Space};
use crate::systems::{MapSystem, NonAutonomousSystem, System};

pub use run::{run, CsvRow, RunOutcome};
pub use sweep::{perturbation_sweep, SweepRow};

fn default_blocks() -> usize {
    6
}

fn default_linear() -> MRule {
    MRule::Linear
}

/// Tent maps usable as bases of power-growth sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseMap {
    #[default]
    Tent2,
    Tent3,
}

impl BaseMap {
    fn system(self) -> MapSystem {
        match self {
            BaseMap::Tent2 => tent2(),
            BaseMap::Tent3 => tent3(),
        }
    }
}

/// A named construction with its parameters, e.g.
/// `{"construction": "horseshoe_cascade", "blocks": 6, "m": "linear"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "construction", rename_all = "snake_case", deny_unknown_fields)]
pub enum Construction {
    Tent3,
    Tent2,
    Identity,
    HorseshoeCascade {
        #[serde(default = "default_blocks")]
        blocks: usize,
        #[serde(default = "default_linear")]
        m: MRule,
        #[serde(default)]
        circle: bool,
    },
    TruncatedCascade {
        #[serde(default = "default_blocks")]
        blocks: usize,
        #[serde(default = "default_linear")]
        m: MRule,
        n: usize,
    },
    CantorCylinder {
        k: usize,
        depth: usize,
    },
    CantorCylinderChart {
        k: usize,
        depth: usize,
    },
    CantorWords {
        depth: usize,
    },
    KsAlternating,
    PowerGrowth {
        #[serde(default)]
        base: BaseMap,
    },
    DampedPowerGrowth {
        #[serde(default)]
        base: BaseMap,
        #[serde(default = "harmonic")]
        lambda: LambdaRule,
        #[serde(default)]
        shift: usize,
    },
    Koch {
        depth: usize,
    },
    ConvergentSequence {
        count: usize,
    },
    /// Uniform points in the unit cube, drawn from the configured seed.
    RandomCloud {
        points: usize,
        #[serde(default = "one")]
        dim: usize,
    },
}

fn harmonic() -> LambdaRule {
    LambdaRule::Harmonic
}

fn one() -> usize {
    1
}

/// What a construction produces.
#[derive(Debug, Clone)]
pub enum Built {
    Map(MapSystem),
    Sequence(NonAutonomousSystem),
    Space(Space),
}

impl Built {
    pub fn space(&self) -> Space {
        match self {
            Built::Map(m) => m.space(),
            Built::Sequence(s) => s.space().clone(),
            Built::Space(s) => s.clone(),
        }
    }

    pub fn system(&self) -> Option<System> {
        match self {
            Built::Map(m) => Some(m.clone().into()),
            Built::Sequence(s) => Some(s.clone().into()),
            Built::Space(_) => None,
        }
    }
}

impl Construction {
    /// Registry id.
    pub fn id(&self) -> String {
        let value = serde_json::to_value(self).expect("serializable");
        value["construction"].as_str().unwrap_or_default().to_string()
    }

    pub fn build(&self, seed: u64) -> Result<Built> {
        let cascade = |blocks: usize, m: &MRule, circle: bool| CascadeSpec {
            m: m.clone(),
            block_count: blocks,
            circle,
        };
        Ok(match self {
            Construction::Tent3 => Built::Map(tent3()),
            Construction::Tent2 => Built::Map(tent2()),
            Construction::Identity => Built::Map(identity_map()),
            Construction::HorseshoeCascade { blocks, m, circle } => {
                Built::Map(horseshoe_cascade(&cascade(*blocks, m, *circle))?)
            }
            Construction::TruncatedCascade { blocks, m, n } => {
                Built::Map(truncated_cascade(&cascade(*blocks, m, false), *n)?)
            }
            Construction::CantorCylinder { k, depth } => Built::Map(cantor_cylinder_system(*k, *depth)?),
            Construction::CantorCylinderChart { k, depth } => {
                Built::Map(cylinder_chart_system(*k, *depth)?)
            }
            Construction::CantorWords { depth } => Built::Space(Space::cantor(*depth)),
            Construction::KsAlternating => Built::Sequence(ks_alternating()),
            Construction::PowerGrowth { base } => Built::Sequence(power_growth_sequence(base.system())),
            Construction::DampedPowerGrowth { base, lambda, shift } => Built::Sequence(damped_sequence(
                power_growth_sequence(base.system()),
                *lambda,
                *shift,
            )?),
            Construction::Koch { depth } => Built::Space(Space::cloud(koch_points(*depth)?)),
            Construction::ConvergentSequence { count } => {
                Built::Space(Space::cloud(convergent_sequence_space(*count)?))
            }
            Construction::RandomCloud { points, dim } => {
                if *points == 0 || *dim == 0 {
                    return Err(Error::InvalidParameter("random cloud needs points and dim ≥ 1".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let coords = (0..points * dim).map(|_| rng.gen::<f64>()).collect();
                Built::Space(Space::cloud(PointCloud::from_coords(*dim, coords)?))
            }
        })
    }

    /// Parses a construction object, reporting unknown ids as such.
    pub fn from_value(value: serde_json::Value) -> Result<Self> {
        let id = value
            .get("construction")
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::InvalidParameter("missing \"construction\" id".into()))?;
        let known = list_constructions().iter().any(|c| c.id == id);
        if !known {
            return Err(Error::UnknownConstruction(id.to_string()));
        }
        Ok(serde_json::from_value(value)?)
    }
}

/// The experiment to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    /// Growth rate of counts at each scheduled scale (or of lap numbers).
    Entropy,
    /// Metric mean dimension estimate from rates across the schedule.
    Mdim,
    /// Box dimension of the construction's space or point cloud.
    Boxdim,
    /// Collapse table `sup f_1^{(k)}` for a damped sequence.
    Damping,
    /// Cascade splices of shrinking width into an interval map.
    PerturbationSweep,
}

/// How growth is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Exact lap numbers of symbolic iterates (scale free).
    Lap,
    /// Maximal separated sets on `d_n`-dense nets.
    Sep,
    /// Itinerary counts through Markov components wider than `ε`.
    Markov,
}

/// `ε_k = scale · base^{−k}` for `k_min ≤ k ≤ k_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonSchedule {
    pub base: f64,
    pub k_min: i32,
    pub k_max: i32,
    #[serde(default = "unit")]
    pub scale: f64,
}

fn unit() -> f64 {
    1.0
}

impl EpsilonSchedule {
    pub fn epsilons(&self) -> Result<Vec<f64>> {
        if !(self.base > 1.0) || !(self.scale > 0.0) || self.k_min > self.k_max {
            return Err(Error::InvalidParameter(format!("bad ε schedule {self:?}")));
        }
        let eps: Vec<f64> = (self.k_min..=self.k_max)
            .map(|k| self.scale * self.base.powi(-k))
            .collect();
        if eps.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return Err(Error::NonMonotoneSchedule("every ε must lie in (0, 1)".into()));
        }
        Ok(eps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonRange {
    pub min: usize,
    pub max: usize,
}

impl HorizonRange {
    pub fn horizons(&self) -> Result<Vec<usize>> {
        if self.min == 0 || self.min > self.max {
            return Err(Error::InvalidParameter(format!("bad horizon range {self:?}")));
        }
        Ok((self.min..=self.max).collect())
    }
}

/// Net density for separated-set counts, in the Bowen metric: either a
/// fixed mesh or a fraction of each `ε`. Both must give mesh `≤ ε/4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum NetSpec {
    Ratio(f64),
    Mesh(f64),
}

impl Default for NetSpec {
    fn default() -> Self {
        NetSpec::Ratio(0.25)
    }
}

impl NetSpec {
    pub fn mesh_for(&self, epsilon: f64) -> f64 {
        match *self {
            NetSpec::Ratio(r) => r * epsilon,
            NetSpec::Mesh(m) => m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DampingParams {
    pub k_max: usize,
    /// Number of equally spaced probes in `[0, 1]`.
    pub probes: usize,
}

impl Default for DampingParams {
    fn default() -> Self {
        Self {
            k_max: 1000,
            probes: 101,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParams {
    pub deltas: Vec<f64>,
    /// `None` leaves the base map unchanged.
    #[serde(default)]
    pub splice: Option<CascadeSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub summary: Option<PathBuf>,
}

fn default_window() -> usize {
    DEFAULT_WINDOW
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Label for the `system_id` column; defaults to the construction id.
    #[serde(default)]
    pub id: Option<String>,
    pub system: serde_json::Value,
    pub quantity: Experiment,
    #[serde(default)]
    pub method: Option<Method>,
    #[serde(default)]
    pub epsilon_schedule: Option<EpsilonSchedule>,
    #[serde(default)]
    pub horizons: Option<HorizonRange>,
    #[serde(default)]
    pub net: NetSpec,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub exact_cap: Option<usize>,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default)]
    pub damping: DampingParams,
    #[serde(default)]
    pub sweep: Option<SweepParams>,
    #[serde(default)]
    pub output: OutputPaths,
    #[serde(default)]
    pub rng_seed: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.construction()?;
        config.validate()?;
        Ok(config)
    }

    pub fn construction(&self) -> Result<Construction> {
        Construction::from_value(self.system.clone())
    }

    pub fn system_id(&self) -> Result<String> {
        match &self.id {
            Some(id) => Ok(id.clone()),
            None => Ok(self.construction()?.id()),
        }
    }

    pub fn count_options(&self) -> CountOptions {
        CountOptions {
            mode: self.mode,
            exact_cap: self.exact_cap.unwrap_or(DEFAULT_EXACT_CAP),
            ..CountOptions::default()
        }
    }

    pub fn epsilons(&self) -> Result<Vec<f64>> {
        self.epsilon_schedule
            .ok_or_else(|| Error::InvalidParameter("this experiment needs an epsilon_schedule".into()))?
            .epsilons()
    }

    pub fn horizon_list(&self) -> Result<Vec<usize>> {
        self.horizons
            .ok_or_else(|| Error::InvalidParameter("this experiment needs a horizon range".into()))?
            .horizons()
    }

    /// Method for rate experiments: lap numbers for entropy of interval
    /// maps, separated sets otherwise.
    pub fn rate_method(&self, built: &Built) -> Method {
        self.method.unwrap_or(match (self.quantity, built) {
            (Experiment::Entropy, Built::Map(m)) if m.is_scalar() && m.to_pam().is_ok() => Method::Lap,
            (Experiment::PerturbationSweep, _) => Method::Markov,
            _ => Method::Sep,
        })
    }

    /// Structural checks that need no computation.
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::InvalidParameter("window must be ≥ 1".into()));
        }
        if let Some(schedule) = &self.epsilon_schedule {
            let eps = schedule.epsilons()?;
            let smallest = eps.iter().copied().fold(f64::INFINITY, f64::min);
            let mesh = self.net.mesh_for(smallest);
            if !(mesh > 0.0) || mesh > smallest / 4.0 * (1.0 + 1e-12) {
                return Err(Error::InvalidParameter(format!(
                    "net mesh {mesh} exceeds ε/4 for the smallest ε = {smallest}"
                )));
            }
        }
        if let Some(h) = &self.horizons {
            h.horizons()?;
        }
        let needs = |what: bool, name: &str| {
            if what {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{:?} needs {name}", self.quantity)))
            }
        };
        match self.quantity {
            Experiment::Entropy => needs(self.horizons.is_some(), "horizons")?,
            Experiment::Mdim => needs(self.horizons.is_some() && self.epsilon_schedule.is_some(), "horizons and an epsilon_schedule")?,
            Experiment::Boxdim => needs(self.epsilon_schedule.is_some(), "an epsilon_schedule")?,
            Experiment::Damping => {}
            Experiment::PerturbationSweep => {
                needs(self.sweep.is_some() && self.epsilon_schedule.is_some(), "sweep parameters and an epsilon_schedule")?;
                let sweep = self.sweep.as_ref().unwrap();
                if sweep.deltas.is_empty() || sweep.deltas.iter().any(|&d| !(d > 0.0)) {
                    return Err(Error::InvalidParameter("sweep deltas must be positive".into()));
                }
            }
        }
        Ok(())
    }
}
