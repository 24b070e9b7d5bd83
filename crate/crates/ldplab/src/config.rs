//! The experiment configuration: a single JSON document, validated strictly
//! and resolved (defaults filled in) before any work starts.

use ldp_core::{
    Atom, CadlagPath, DriftRule, EventKind, JumpMeasure, LevyTriplet, MinimizeOptions, PathEvent, RateModel,
    VectorField,
};
use serde::{Deserialize, Serialize};

use crate::diagnostics::{EventSpec, Integrand, McOptions, Statistic, Target};
use crate::error::{LabError, LabResult};
use crate::formats::PathDoc;

fn default_horizon() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub x: Vec<f64>,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripletSpec {
    pub dim: usize,
    #[serde(default)]
    pub drift: Option<Vec<f64>>,
    /// `b^ε = drift + ε drift_eps_slope`.
    #[serde(default)]
    pub drift_eps_slope: Option<Vec<f64>>,
    /// Covariance rows; zero when absent.
    #[serde(default)]
    pub diffusion: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub atoms: Vec<AtomSpec>,
    #[serde(default)]
    pub compensated: bool,
}

impl TripletSpec {
    fn resolve(&mut self) {
        let d = self.dim;
        self.drift.get_or_insert_with(|| vec![0.0; d]);
        self.diffusion.get_or_insert_with(|| vec![vec![0.0; d]; d]);
    }

    pub fn diffusion_flat(&self) -> Vec<f64> {
        match &self.diffusion {
            Some(rows) => rows.iter().flatten().copied().collect(),
            None => vec![0.0; self.dim * self.dim],
        }
    }

    pub fn jumps(&self) -> LabResult<JumpMeasure> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                size: a.x.clone(),
                intensity: a.lambda,
            })
            .collect();
        Ok(JumpMeasure::new(self.dim, atoms)?)
    }

    pub fn build(&self) -> LabResult<LevyTriplet> {
        let d = self.dim;
        if d == 0 {
            return Err(LabError::Config("triplet.dim must be positive".into()));
        }
        let rows = self.diffusion.as_ref().map_or(d, |r| r.len());
        if rows != d || self.diffusion.iter().flatten().any(|r| r.len() != d) {
            return Err(LabError::Config(format!("triplet.diffusion must be a {d}x{d} matrix")));
        }
        let base = self.drift.clone().unwrap_or_else(|| vec![0.0; d]);
        if base.len() != d {
            return Err(LabError::Config(format!("triplet.drift must have length {d}")));
        }
        let drift = match &self.drift_eps_slope {
            None => DriftRule::Constant(base),
            Some(slope) => DriftRule::Affine {
                base,
                slope: slope.clone(),
            },
        };
        Ok(LevyTriplet::new(drift, &self.diffusion_flat(), self.jumps()?, self.compensated)?)
    }
}

/// Catalog of coefficients; all but `constant` are square (`n = d`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    /// `F ≡ scale I`.
    Identity {
        #[serde(default = "one")]
        scale: f64,
    },
    /// `F ≡ matrix` (`n x d` rows).
    Constant { matrix: Vec<Vec<f64>> },
    ClampLinear { scale: f64, limit: f64 },
    Tanh { scale: f64, width: f64 },
    Linear {
        scale: f64,
        #[serde(default)]
        allow_unbounded: bool,
    },
}

fn one() -> f64 {
    1.0
}

impl Default for FieldSpec {
    fn default() -> Self {
        FieldSpec::Identity { scale: 1.0 }
    }
}

impl FieldSpec {
    pub fn build(&self, d: usize) -> LabResult<VectorField> {
        let f = match self {
            FieldSpec::Identity { scale } => VectorField::scalar_identity(d, *scale)?,
            FieldSpec::Constant { matrix } => {
                if matrix.is_empty() || matrix.iter().any(|r| r.len() != d) {
                    return Err(LabError::Config(format!("field.matrix rows must have length {d}")));
                }
                let flat: Vec<f64> = matrix.iter().flatten().copied().collect();
                VectorField::constant(matrix.len(), d, &flat)?
            }
            FieldSpec::ClampLinear { scale, limit } => VectorField::clamp_linear(d, *scale, *limit)?,
            FieldSpec::Tanh { scale, width } => VectorField::tanh_scaled(d, *scale, *width)?,
            FieldSpec::Linear { scale, allow_unbounded } => VectorField::linear(d, *scale, *allow_unbounded)?,
        };
        Ok(f)
    }
}

/// Deterministic path description (controls `u` and skeleton inputs `x`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PathSpec {
    Zero,
    Constant { value: Vec<f64> },
    Linear { start: Vec<f64>, end: Vec<f64> },
    Path { path: PathDoc },
}

impl Default for PathSpec {
    fn default() -> Self {
        PathSpec::Zero
    }
}

impl PathSpec {
    pub fn build(&self, dim: usize, horizon: f64, what: &str) -> LabResult<CadlagPath> {
        let check = |v: &[f64]| {
            if v.len() == dim {
                Ok(())
            } else {
                Err(LabError::Config(format!("{what} must have dimension {dim}")))
            }
        };
        let path = match self {
            PathSpec::Zero => CadlagPath::zero(dim, horizon)?,
            PathSpec::Constant { value } => {
                check(value)?;
                CadlagPath::constant(horizon, value)?
            }
            PathSpec::Linear { start, end } => {
                check(start)?;
                check(end)?;
                CadlagPath::linear(horizon, start, end)?
            }
            PathSpec::Path { path } => {
                let p = path.to_path()?;
                if p.dim() != dim || p.horizon() != horizon {
                    return Err(LabError::Config(format!(
                        "{what} must have dimension {dim} and horizon {horizon}"
                    )));
                }
                p
            }
        };
        Ok(path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventConfig {
    #[serde(rename = "type")]
    pub kind: EventType,
    #[serde(default)]
    pub coordinate: usize,
    pub level: f64,
    #[serde(default)]
    pub tol: f64,
    #[serde(default = "default_target")]
    pub target: Target,
}

fn default_target() -> Target {
    Target::Y
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventType {
    TerminalGe,
    TerminalEq,
    SupGe,
}

impl EventConfig {
    pub fn build(&self) -> LabResult<EventSpec> {
        let kind = match self.kind {
            EventType::TerminalGe => EventKind::TerminalGe,
            EventType::TerminalEq => EventKind::TerminalEq,
            EventType::SupGe => EventKind::SupGe,
        };
        Ok(EventSpec {
            event: PathEvent::new(kind, self.coordinate, self.level, self.tol)?,
            target: self.target,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepsSpec {
    /// Brownian sampling grid; default `1e-2 T`.
    #[serde(default)]
    pub noise: Option<f64>,
    /// Euler refinement step for Monte Carlo solves; default `noise`.
    #[serde(default)]
    pub solver: Option<f64>,
    /// Skeleton solver step; default `1e-3 T`.
    #[serde(default)]
    pub skeleton: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSpec {
    /// Noise level; default the first entry of `eps`, or 1.
    #[serde(default)]
    pub eps: Option<f64>,
    /// Uniform sample count of the CSV export; default 201.
    #[serde(default)]
    pub csv_points: Option<usize>,
    /// Also solve the SDE driven by the simulated noise; default false.
    #[serde(default)]
    pub solve: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacteristicsSpec {
    #[serde(default)]
    pub trunc: Option<f64>,
    #[serde(default)]
    pub r: Option<f64>,
    /// Evaluation times; default `[T]`.
    #[serde(default)]
    pub times: Option<Vec<f64>>,
    /// Constant of the `Ξ` process; default the field constant.
    #[serde(default)]
    pub lip_c: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkeletonSpec {
    /// Finite-variation input; default the mean path `t ↦ t b`.
    #[serde(default)]
    pub x: Option<PathSpec>,
    /// Residual tolerance; default 1e-4.
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub csv_points: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelChoice {
    #[default]
    Auto,
    Brownian,
    Levy,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSpec {
    #[serde(default)]
    pub model: Option<ModelChoice>,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub starts: Option<usize>,
    #[serde(default)]
    pub stages: Option<usize>,
    /// Seed of the start perturbations; default the top-level seed.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub event_tol: Option<f64>,
    /// Skeleton step inside the optimizer; default `1e-2 T`.
    #[serde(default)]
    pub step: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    /// Noise levels of the closed-form curve.
    #[serde(default)]
    pub exact_eps: Option<Vec<f64>>,
    /// Run the Monte Carlo curve on `eps`; default true.
    #[serde(default)]
    pub monte_carlo: Option<bool>,
    /// Run the path-space optimizer; default true.
    #[serde(default)]
    pub optimize: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeProcess {
    #[default]
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProbeSpec {
    Tightness {
        statistic: Statistic,
        #[serde(default)]
        process: ProbeProcess,
        a: Vec<f64>,
    },
    /// Uses the triplet atoms when present, else jumps `±1` at rate `1/2`.
    PureDiscBound {
        #[serde(default)]
        eps: Option<f64>,
        #[serde(default)]
        t: Option<f64>,
        #[serde(default)]
        a: Option<Vec<f64>>,
        #[serde(default)]
        b: Option<Vec<f64>>,
    },
    Slominski {
        p: Vec<f64>,
    },
    Uet {
        integrands: Vec<Integrand>,
        a: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    pub seed: u64,
    pub triplet: TripletSpec,
    #[serde(default)]
    pub field: FieldSpec,
    #[serde(default)]
    pub control: PathSpec,
    #[serde(default)]
    pub event: Option<EventConfig>,
    #[serde(default)]
    pub eps: Vec<f64>,
    #[serde(default)]
    pub samples: Option<u64>,
    #[serde(default)]
    pub steps: StepsSpec,
    #[serde(default)]
    pub block_size: Option<usize>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub simulate: Option<SimulateSpec>,
    #[serde(default)]
    pub characteristics: Option<CharacteristicsSpec>,
    #[serde(default)]
    pub skeleton: Option<SkeletonSpec>,
    #[serde(default)]
    pub rate: Option<RateSpec>,
    #[serde(default)]
    pub verify: Option<VerifySpec>,
    #[serde(default)]
    pub probe: Option<ProbeSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Characteristics,
    Skeleton,
    Rate,
    VerifyLdp,
    Probe,
}

pub const DEFAULT_SAMPLES: u64 = 10_000;
pub const DEFAULT_EXACT_EPS: [f64; 5] = [0.1, 0.05, 0.02, 0.01, 0.005];
pub const DEFAULT_BOUND_A: [f64; 4] = [0.25, 0.5, 1.0, 1.5];
pub const DEFAULT_BOUND_B: [f64; 4] = [0.05, 0.15, 0.5, 1.0];

/// Parses a config; syntax and schema errors carry `line:column`.
pub fn parse(text: &str, origin: &str) -> LabResult<ExperimentConfig> {
    serde_json::from_str(text)
        .map_err(|e| LabError::Config(format!("{origin}:{}:{}: {e}", e.line(), e.column())))
}

impl ExperimentConfig {
    /// Fills every default the command reads, and validates the result.
    pub fn resolve(&mut self, command: Command) -> LabResult<()> {
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(LabError::Config("horizon must be positive".into()));
        }
        let t = self.horizon;
        self.triplet.resolve();
        let noise = *self.steps.noise.get_or_insert(1e-2 * t);
        self.steps.solver.get_or_insert(noise);
        self.steps.skeleton.get_or_insert(1e-3 * t);
        for (name, s) in [
            ("noise", self.steps.noise),
            ("solver", self.steps.solver),
            ("skeleton", self.steps.skeleton),
        ] {
            let s = s.unwrap_or(0.0);
            if !(s > 0.0 && s <= t) {
                return Err(LabError::Config(format!("steps.{name} must lie in (0, horizon]")));
            }
        }
        self.block_size.get_or_insert(10_000);
        self.workers.get_or_insert(1);
        if self.block_size == Some(0) || self.workers == Some(0) {
            return Err(LabError::Config("block_size and workers must be positive".into()));
        }
        let needs_eps = command == Command::Characteristics
            || (command == Command::Probe && !matches!(self.probe, Some(ProbeSpec::PureDiscBound { .. })))
            || (command == Command::VerifyLdp && self.verify.as_ref().and_then(|v| v.monte_carlo) != Some(false));
        if needs_eps && self.eps.is_empty() {
            return Err(LabError::Config("eps list is required for this command".into()));
        }
        match command {
            Command::Simulate => {
                let first = self.eps.first().copied().unwrap_or(1.0);
                let s = self.simulate.get_or_insert_with(Default::default);
                s.eps.get_or_insert(first);
                s.csv_points.get_or_insert(201);
                s.solve.get_or_insert(false);
            }
            Command::Characteristics => {
                let s = self.characteristics.get_or_insert_with(Default::default);
                s.trunc.get_or_insert(1.0);
                s.r.get_or_insert(1.0);
                s.times.get_or_insert_with(|| vec![t]);
            }
            Command::Skeleton => {
                let s = self.skeleton.get_or_insert_with(Default::default);
                s.tol.get_or_insert(1e-4);
                s.csv_points.get_or_insert(201);
            }
            Command::Rate => {
                self.require_event()?;
                self.resolve_rate();
            }
            Command::VerifyLdp => {
                self.require_event()?;
                let s = self.verify.get_or_insert_with(Default::default);
                s.exact_eps.get_or_insert_with(|| DEFAULT_EXACT_EPS.to_vec());
                let mc = *s.monte_carlo.get_or_insert(true);
                let opt = *s.optimize.get_or_insert(true);
                if mc {
                    self.samples.get_or_insert(DEFAULT_SAMPLES);
                }
                if opt {
                    self.resolve_rate();
                }
            }
            Command::Probe => {
                self.samples.get_or_insert(DEFAULT_SAMPLES);
                match self.probe.as_mut() {
                    None => return Err(LabError::Config("probe section is required".into())),
                    Some(ProbeSpec::PureDiscBound { eps, t: tt, a, b }) => {
                        eps.get_or_insert(0.1);
                        tt.get_or_insert(t);
                        a.get_or_insert_with(|| DEFAULT_BOUND_A.to_vec());
                        b.get_or_insert_with(|| DEFAULT_BOUND_B.to_vec());
                    }
                    Some(_) => {}
                }
            }
        }
        Ok(())
    }

    fn require_event(&self) -> LabResult<()> {
        if self.event.is_none() {
            return Err(LabError::Config("event section is required for this command".into()));
        }
        Ok(())
    }

    fn resolve_rate(&mut self) {
        let defaults = MinimizeOptions::default();
        let seed = self.seed;
        let t = self.horizon;
        let s = self.rate.get_or_insert_with(Default::default);
        s.model.get_or_insert(ModelChoice::Auto);
        s.m.get_or_insert(defaults.m);
        s.starts.get_or_insert(defaults.starts);
        s.stages.get_or_insert(defaults.stages);
        s.seed.get_or_insert(seed);
        s.event_tol.get_or_insert(defaults.event_tol);
        s.step.get_or_insert(1e-2 * t);
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn mc_options(&self) -> McOptions {
        let base = McOptions::for_horizon(self.horizon);
        McOptions {
            noise_step: self.steps.noise.unwrap_or(base.noise_step),
            solver_step: self.steps.solver.unwrap_or(base.solver_step),
            block_size: self.block_size.unwrap_or(base.block_size),
            workers: self.workers.unwrap_or(base.workers),
        }
    }

    pub fn minimize_options(&self) -> MinimizeOptions {
        let mut o = MinimizeOptions::default();
        if let Some(r) = &self.rate {
            o.m = r.m.unwrap_or(o.m);
            o.starts = r.starts.unwrap_or(o.starts);
            o.stages = r.stages.unwrap_or(o.stages);
            o.seed = r.seed.unwrap_or(self.seed);
            o.event_tol = r.event_tol.unwrap_or(o.event_tol);
            o.step = r.step.or(o.step);
        }
        o
    }

    /// Rate model of the noise: Brownian action for driftless diffusions
    /// without jumps under `auto`, the Lévy conjugate otherwise.
    pub fn rate_model(&self, triplet: &LevyTriplet) -> LabResult<RateModel> {
        let choice = self.rate.as_ref().and_then(|r| r.model).unwrap_or_default();
        let gaussian = triplet.jumps().is_empty() && triplet.drift().limit().iter().all(|b| *b == 0.0);
        match choice {
            ModelChoice::Brownian if !gaussian => Err(LabError::Config(
                "the brownian rate model needs a driftless triplet without atoms".into(),
            )),
            ModelChoice::Brownian => Ok(RateModel::brownian(triplet.diffusion(), triplet.dim(), 1.0)?),
            ModelChoice::Auto if gaussian => Ok(RateModel::brownian(triplet.diffusion(), triplet.dim(), 1.0)?),
            _ => Ok(RateModel::levy(triplet.clone())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "seed": 7,
        "triplet": {"dim": 1, "diffusion": [[1.0]]},
        "event": {"type": "terminal_ge", "level": 1.0}
    }"#;

    #[test]
    fn defaults_are_resolved() {
        let mut c = parse(BASE, "base.json").unwrap();
        c.resolve(Command::Rate).unwrap();
        assert_eq!(c.steps.noise, Some(0.01));
        assert_eq!(c.steps.solver, Some(0.01));
        assert_eq!(c.rate.as_ref().unwrap().m, Some(16));
        assert_eq!(c.rate.as_ref().unwrap().seed, Some(7));
        assert_eq!(c.triplet.drift, Some(vec![0.0]));
        assert_eq!(c.workers, Some(1));
        let v = c.to_value();
        let back: ExperimentConfig = serde_json::from_value(v).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse("{\n  \"seed\": 1,\n  \"triplet\": {\"dim\": 1},\n  \"bogus\": 2\n}", "c.json").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("c.json:4:"), "{msg}");
        assert!(msg.contains("bogus"), "{msg}");
        assert_eq!(err.exit_code(), 2);
        let err = parse("{\"triplet\": {\"dim\": 1}}", "c.json").unwrap_err();
        assert!(err.to_string().contains("seed"));
        let err = parse("{\"seed\": 1, \"triplet\": {\"dim\": 1}, \"field\": {\"kind\": \"cubic\"}}", "c.json");
        assert!(err.is_err());
    }

    #[test]
    fn builders() {
        let c = parse(BASE, "base.json").unwrap();
        let trip = c.triplet.build().unwrap();
        assert_eq!(trip.diffusion(), &[1.0]);
        let f = FieldSpec::Constant { matrix: vec![vec![2.0]] }.build(1).unwrap();
        assert_eq!(f.eval(&[0.0]), vec![2.0]);
        assert!(FieldSpec::Linear { scale: 1.0, allow_unbounded: false }.build(1).is_err());
        let u = PathSpec::Linear { start: vec![0.0], end: vec![1.0] }.build(1, 2.0, "control").unwrap();
        assert_eq!(u.terminal(), &[1.0]);
        assert!(PathSpec::Constant { value: vec![1.0, 2.0] }.build(1, 1.0, "control").is_err());
        assert!(matches!(c.rate_model(&trip).unwrap().brownian_scale(), Some(_)));
    }

    #[test]
    fn missing_sections_are_config_errors() {
        let mut c = parse(r#"{"seed": 1, "triplet": {"dim": 1}}"#, "c.json").unwrap();
        assert_eq!(c.clone().resolve(Command::Rate).unwrap_err().exit_code(), 2);
        assert_eq!(c.clone().resolve(Command::Probe).unwrap_err().exit_code(), 2);
        c.steps.noise = Some(2.0);
        assert!(c.resolve(Command::Simulate).is_err());
    }
}
