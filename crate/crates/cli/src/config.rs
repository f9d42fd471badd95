//! Scenario configuration: TOML parsing, defaults and validation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use iga_dual::assembly::{
    BoundaryCondition, DistributedLoad, End, LoadSpec, PointLoad, TrussModel,
};
use iga_dual::dynamics::{DtRule, GroundMass, Integrator};
use iga_dual::scheme::{BcMode, Lumping, Scheme, TestFunctions};
use iga_dual::spline::MeshKind;
use serde::Deserialize;

use crate::error::CliError;

fn invalid(key: &str, msg: impl fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {msg}"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Study {
    Static,
    Spectrum,
    Modeshape,
    Transient,
    Convergence,
}

impl Study {
    pub fn name(self) -> &'static str {
        match self {
            Study::Static => "static",
            Study::Spectrum => "spectrum",
            Study::Modeshape => "modeshape",
            Study::Transient => "transient",
            Study::Convergence => "convergence",
        }
    }
}

impl FromStr for Study {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "static" => Study::Static,
            "spectrum" => Study::Spectrum,
            "modeshape" => Study::Modeshape,
            "transient" => Study::Transient,
            "convergence" => Study::Convergence,
            _ => return Err(format!("unknown study \"{s}\"")),
        })
    }
}

/// Reproduction degree: an integer or `"min"` (1) / `"max"` (p).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum QSpec {
    Value(usize),
    Named(QName),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QName {
    Min,
    Max,
}

impl QSpec {
    pub fn resolve(self, p: usize) -> usize {
        match self {
            QSpec::Value(q) => q,
            QSpec::Named(QName::Min) => 1,
            QSpec::Named(QName::Max) => p,
        }
    }
}

impl FromStr for QSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "min" => Ok(QSpec::Named(QName::Min)),
            "max" => Ok(QSpec::Named(QName::Max)),
            _ => s
                .parse()
                .map(QSpec::Value)
                .map_err(|_| format!("expected an integer, \"min\" or \"max\", got \"{s}\"")),
        }
    }
}

impl fmt::Display for QSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QSpec::Value(q) => write!(f, "{q}"),
            QSpec::Named(QName::Min) => write!(f, "min"),
            QSpec::Named(QName::Max) => write!(f, "max"),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    study: String,
    model: RawModel,
    #[serde(default)]
    load: RawLoad,
    mesh: RawMesh,
    #[serde(default)]
    scheme: RawScheme,
    integrator: Option<RawIntegrator>,
    #[serde(default)]
    modeshape: RawModeshape,
    #[serde(default)]
    convergence: RawConvergence,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    length: f64,
    ea: Option<f64>,
    e: Option<f64>,
    area: Option<f64>,
    mu: Option<f64>,
    rho: Option<f64>,
    #[serde(default = "fixed")]
    left: String,
    #[serde(default = "fixed")]
    right: String,
}

fn fixed() -> String {
    "fixed".into()
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLoad {
    sine_p0: Option<f64>,
    samples_x: Option<Vec<f64>>,
    samples_q: Option<Vec<f64>>,
    point_load: Option<f64>,
    point_end: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMesh {
    p: usize,
    preset: String,
    breakpoints: Option<Vec<f64>>,
    elements: Option<usize>,
    refinement: Option<usize>,
    refinements: Option<Vec<usize>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScheme {
    test_fn: Option<String>,
    q: Option<QSpec>,
    lumping: Option<String>,
    bc_mode: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIntegrator {
    method: Option<String>,
    dt_rule: Option<String>,
    dt: Option<f64>,
    t_end: f64,
    initial: Option<String>,
    forcing: Option<String>,
    signal: Option<String>,
    ground_mass: Option<String>,
    probes: Option<Vec<f64>>,
    stride: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModeshape {
    mode: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConvergence {
    problem: Option<String>,
    quantity: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    path: Option<String>,
    samples: Option<usize>,
}

/// Mesh family.
#[derive(Clone, Debug, PartialEq)]
pub enum MeshChoice {
    Preset(MeshKind),
    /// Equal spans; `elements` base elements.
    Uniform,
    /// Non-unit-weight quadratic base mesh.
    Weighted,
    Custom(Vec<f64>),
}

impl MeshChoice {
    /// Elements of the unrefined mesh.
    pub fn base_elements(&self, uniform_elements: usize) -> usize {
        match self {
            MeshChoice::Preset(_) => 5,
            MeshChoice::Uniform => uniform_elements,
            MeshChoice::Weighted => 4,
            MeshChoice::Custom(b) => b.len() - 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeshSpec {
    pub choice: MeshChoice,
    pub p: usize,
    /// Base element count for `Uniform`.
    pub elements: usize,
    /// Knot-span subdivision factor for single-mesh studies.
    pub refinement: usize,
    /// Subdivision factors for refinement studies.
    pub refinements: Vec<usize>,
}

impl MeshSpec {
    pub fn n_elements(&self, m: usize) -> usize {
        self.choice.base_elements(self.elements) * m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialKind {
    Rest,
    /// Zero displacement, velocity `omega sin(2 pi x / L)` with `omega = (2 pi / L) sqrt(EA / mu)`.
    StandingWave,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ForcingKind {
    None,
    Ground,
    StaticLoad,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SignalSource {
    Synthetic,
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorSpec {
    pub method: Integrator,
    pub dt_rule: DtRule<f64>,
    pub t_end: f64,
    pub initial: InitialKind,
    pub forcing: ForcingKind,
    pub signal: Option<SignalSource>,
    pub ground_mass: GroundMass,
    /// Physical positions; defaults to the right end.
    pub probes: Vec<f64>,
    pub stride: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvergenceProblem {
    Static,
    StandingWave,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvergenceQuantity {
    Displacement,
    NormalForce,
}

/// Test function choice before `q` is resolved against `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestChoice {
    Nurbs,
    Ig,
    Ad(QSpec),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SchemeSpec {
    pub test: TestChoice,
    pub lumping: Lumping,
    pub bc_mode: BcMode,
}

impl SchemeSpec {
    pub fn resolve(&self, p: usize) -> Scheme {
        let test = match self.test {
            TestChoice::Nurbs => TestFunctions::Nurbs,
            TestChoice::Ig => TestFunctions::InverseGram,
            TestChoice::Ad(q) => TestFunctions::Approximate { q: q.resolve(p) },
        };
        Scheme {
            test,
            lumping: self.lumping,
            bc_mode: self.bc_mode,
        }
    }

    /// Parses `nurbs`, `ig` or `ad`, optionally followed by `+rowsum` and/or
    /// `+naive`.
    pub fn parse(s: &str, q: Option<QSpec>) -> Result<Self, String> {
        let mut parts = s.split('+');
        let base = parts.next().unwrap_or_default();
        let mut lumping = Lumping::None;
        let mut bc_mode = BcMode::Schur;
        for part in parts {
            match part {
                "rowsum" => lumping = Lumping::RowSum,
                "naive" => bc_mode = BcMode::Naive,
                other => return Err(format!("unknown scheme modifier \"{other}\"")),
            }
        }
        let test = parse_test_fn(base, q)?;
        Ok(Self {
            test,
            lumping,
            bc_mode,
        })
    }
}

fn parse_test_fn(base: &str, q: Option<QSpec>) -> Result<TestChoice, String> {
    match (base, q) {
        ("nurbs", None) => Ok(TestChoice::Nurbs),
        ("ig", None) => Ok(TestChoice::Ig),
        ("ad", Some(q)) => Ok(TestChoice::Ad(q)),
        ("ad", None) => Err("q is required when test_fn = \"ad\"".into()),
        ("nurbs" | "ig", Some(_)) => Err(format!(
            "q is only allowed with test_fn = \"ad\", not \"{base}\""
        )),
        _ => Err(format!(
            "unknown test_fn \"{base}\" (expected nurbs, ig or ad)"
        )),
    }
}

/// A fully validated study definition.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub study: Study,
    pub model: TrussModel<f64>,
    pub mesh: MeshSpec,
    pub scheme: SchemeSpec,
    pub integrator: Option<IntegratorSpec>,
    pub mode: usize,
    pub problem: ConvergenceProblem,
    pub quantity: ConvergenceQuantity,
    pub output: Option<PathBuf>,
    pub samples: usize,
}

fn bc(key: &str, s: &str) -> Result<BoundaryCondition, CliError> {
    match s {
        "fixed" => Ok(BoundaryCondition::Fixed),
        "free" => Ok(BoundaryCondition::Free),
        _ => Err(invalid(
            key,
            format!("expected \"fixed\" or \"free\", got \"{s}\""),
        )),
    }
}

fn positive(key: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(
            key,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

fn resolve_relative(base: Option<&Path>, s: &str) -> PathBuf {
    let p = PathBuf::from(s);
    match base {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p,
    }
}

/// Reads and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text, path.parent())
}

/// Parses configuration text; relative paths resolve against `base`.
pub fn parse_config_str(text: &str, base: Option<&Path>) -> Result<Scenario, CliError> {
    let de = toml::Deserializer::new(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let msg = inner.message().trim().to_string();
        if path == "." || path.is_empty() {
            CliError::Config(msg)
        } else {
            CliError::Config(format!("{path}: {msg}"))
        }
    })?;
    build(raw, base)
}

fn build(raw: RawConfig, base: Option<&Path>) -> Result<Scenario, CliError> {
    let study: Study = raw.study.parse().map_err(|e| invalid("study", e))?;
    let m = &raw.model;
    let length = positive("model.length", m.length)?;
    let ea = match (m.ea, m.e, m.area) {
        (Some(ea), None, _) => positive("model.ea", ea)?,
        (None, Some(e), Some(a)) => positive("model.e", e)? * positive("model.area", a)?,
        (None, Some(_), None) => return Err(invalid("model.area", "required with model.e")),
        (Some(_), Some(_), _) => {
            return Err(invalid(
                "model.ea",
                "give either model.ea or model.e, not both",
            ))
        }
        (None, None, _) => {
            return Err(invalid(
                "model.ea",
                "missing (or give model.e and model.area)",
            ))
        }
    };
    let mu = match (m.mu, m.rho) {
        (Some(mu), None) => positive("model.mu", mu)?,
        (None, Some(rho)) => {
            let area = m
                .area
                .ok_or_else(|| invalid("model.area", "required with model.rho"))?;
            positive("model.rho", rho)? * positive("model.area", area)?
        }
        (Some(_), Some(_)) => {
            return Err(invalid(
                "model.mu",
                "give either model.mu or model.rho, not both",
            ))
        }
        (None, None) => {
            return Err(invalid(
                "model.mu",
                "missing (or give model.rho and model.area)",
            ))
        }
    };
    let left = bc("model.left", &m.left)?;
    let right = bc("model.right", &m.right)?;

    let l = &raw.load;
    let distributed = match (l.sine_p0, &l.samples_x, &l.samples_q) {
        (None, None, None) => DistributedLoad::None,
        (Some(p0), None, None) => {
            if !p0.is_finite() {
                return Err(invalid("load.sine_p0", "must be finite"));
            }
            DistributedLoad::SineHalfWave { p0 }
        }
        (None, Some(x), Some(q)) => {
            if x.len() != q.len() || x.len() < 2 {
                return Err(invalid(
                    "load.samples_q",
                    "needs the same length as load.samples_x (at least 2)",
                ));
            }
            if x.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(invalid("load.samples_x", "must be strictly increasing"));
            }
            DistributedLoad::Samples {
                x: x.clone(),
                q: q.clone(),
            }
        }
        (Some(_), _, _) => {
            return Err(invalid(
                "load.sine_p0",
                "cannot be combined with load.samples_x/samples_q",
            ))
        }
        (None, Some(_), None) => {
            return Err(invalid("load.samples_q", "required with load.samples_x"))
        }
        (None, None, Some(_)) => {
            return Err(invalid("load.samples_x", "required with load.samples_q"))
        }
    };
    let point = match (l.point_load, l.point_end.as_deref()) {
        (None, None) => None,
        (Some(value), end) => {
            let end = match end.unwrap_or("right") {
                "left" => End::Left,
                "right" => End::Right,
                other => {
                    return Err(invalid(
                        "load.point_end",
                        format!("expected \"left\" or \"right\", got \"{other}\""),
                    ))
                }
            };
            Some(PointLoad { end, value })
        }
        (None, Some(_)) => return Err(invalid("load.point_end", "requires load.point_load")),
    };
    let model = TrussModel::new(length, ea, mu, left, right)
        .map_err(|e| invalid("model", e))?
        .with_load(LoadSpec { distributed, point });

    let mesh = build_mesh(&raw.mesh)?;
    let scheme = build_scheme(&raw.scheme)?;
    if let TestChoice::Ad(q) = scheme.test {
        check_q(q, mesh.p, "scheme.q")?;
    }

    let integrator = raw
        .integrator
        .as_ref()
        .map(|i| build_integrator(i, length, base))
        .transpose()?;
    let needs_integrator = study == Study::Transient;
    if needs_integrator && integrator.is_none() {
        return Err(invalid(
            "integrator",
            "section required for the transient study",
        ));
    }

    let mode = raw.modeshape.mode.unwrap_or(10);
    if mode == 0 {
        return Err(invalid("modeshape.mode", "modes are numbered from 1"));
    }
    let problem = match raw.convergence.problem.as_deref().unwrap_or("static") {
        "static" => ConvergenceProblem::Static,
        "standing_wave" => ConvergenceProblem::StandingWave,
        other => {
            return Err(invalid(
                "convergence.problem",
                format!("expected \"static\" or \"standing_wave\", got \"{other}\""),
            ))
        }
    };
    if study == Study::Convergence
        && problem == ConvergenceProblem::StandingWave
        && integrator.is_none()
    {
        return Err(invalid(
            "integrator",
            "section required for convergence.problem = \"standing_wave\"",
        ));
    }
    let quantity = match raw
        .convergence
        .quantity
        .as_deref()
        .unwrap_or("displacement")
    {
        "displacement" => ConvergenceQuantity::Displacement,
        "normal_force" => ConvergenceQuantity::NormalForce,
        other => {
            return Err(invalid(
                "convergence.quantity",
                format!("expected \"displacement\" or \"normal_force\", got \"{other}\""),
            ))
        }
    };
    if problem == ConvergenceProblem::StandingWave && quantity != ConvergenceQuantity::Displacement
    {
        return Err(invalid(
            "convergence.quantity",
            "standing_wave supports displacement only",
        ));
    }
    let samples = raw.output.samples.unwrap_or(101);
    if samples < 2 {
        return Err(invalid("output.samples", "at least 2"));
    }
    let output = raw
        .output
        .path
        .as_deref()
        .map(|p| resolve_relative(base, p));
    let scenario = Scenario {
        study,
        model,
        mesh,
        scheme,
        integrator,
        mode,
        problem,
        quantity,
        output,
        samples,
    };
    validate(&scenario)?;
    Ok(scenario)
}

fn check_q(q: QSpec, p: usize, key: &str) -> Result<(), CliError> {
    let v = q.resolve(p);
    if v == 0 || v > p {
        return Err(invalid(
            key,
            format!("q = {v} must satisfy 1 <= q <= p = {p}"),
        ));
    }
    Ok(())
}

fn build_mesh(m: &RawMesh) -> Result<MeshSpec, CliError> {
    if m.p == 0 || m.p > iga_dual::spline::MAX_DEGREE {
        return Err(invalid(
            "mesh.p",
            format!("must be in 1..={}", iga_dual::spline::MAX_DEGREE),
        ));
    }
    let choice = match m.preset.as_str() {
        "A" | "B" | "C" => {
            MeshChoice::Preset(m.preset.parse().map_err(|e| invalid("mesh.preset", e))?)
        }
        "uniform" => MeshChoice::Uniform,
        "weighted" => MeshChoice::Weighted,
        "custom" => {
            let b = m
                .breakpoints
                .clone()
                .ok_or_else(|| invalid("mesh.breakpoints", "required with preset = \"custom\""))?;
            if b.len() < 2 || b.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(invalid(
                    "mesh.breakpoints",
                    "need at least two strictly increasing values",
                ));
            }
            MeshChoice::Custom(b)
        }
        other => {
            return Err(invalid(
                "mesh.preset",
                format!("expected A, B, C, uniform, weighted or custom, got \"{other}\""),
            ))
        }
    };
    if m.breakpoints.is_some() && !matches!(choice, MeshChoice::Custom(_)) {
        return Err(invalid(
            "mesh.breakpoints",
            "only allowed with preset = \"custom\"",
        ));
    }
    if choice == MeshChoice::Weighted && m.p < 2 {
        return Err(invalid("mesh.p", "the weighted mesh needs p >= 2"));
    }
    let elements = match (&choice, m.elements) {
        (MeshChoice::Uniform, Some(n)) if n > 0 => n,
        (MeshChoice::Uniform, Some(_)) => return Err(invalid("mesh.elements", "must be positive")),
        (MeshChoice::Uniform, None) => {
            return Err(invalid(
                "mesh.elements",
                "required with preset = \"uniform\"",
            ))
        }
        (_, Some(_)) => {
            return Err(invalid(
                "mesh.elements",
                "only allowed with preset = \"uniform\" (use mesh.refinement)",
            ))
        }
        (_, None) => 0,
    };
    let refinement = m.refinement.unwrap_or(1);
    if refinement == 0 {
        return Err(invalid("mesh.refinement", "must be at least 1"));
    }
    let refinements = m.refinements.clone().unwrap_or_else(|| vec![1, 2, 4, 8]);
    if refinements.is_empty() || refinements.contains(&0) {
        return Err(invalid("mesh.refinements", "needs positive entries"));
    }
    if refinements.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("mesh.refinements", "must be strictly increasing"));
    }
    Ok(MeshSpec {
        choice,
        p: m.p,
        elements,
        refinement,
        refinements,
    })
}

fn build_scheme(s: &RawScheme) -> Result<SchemeSpec, CliError> {
    let base = s.test_fn.as_deref().unwrap_or("nurbs");
    let test = parse_test_fn(base, s.q).map_err(|e| {
        let key = if e.starts_with("q ") {
            "scheme.q, scheme.test_fn"
        } else {
            "scheme.test_fn"
        };
        invalid(key, e)
    })?;
    let lumping = match s.lumping.as_deref().unwrap_or("none") {
        "none" => Lumping::None,
        "rowsum" => Lumping::RowSum,
        other => {
            return Err(invalid(
                "scheme.lumping",
                format!("expected \"none\" or \"rowsum\", got \"{other}\""),
            ))
        }
    };
    let bc_mode = match s.bc_mode.as_deref().unwrap_or("schur") {
        "schur" => BcMode::Schur,
        "naive" => BcMode::Naive,
        other => {
            return Err(invalid(
                "scheme.bc_mode",
                format!("expected \"schur\" or \"naive\", got \"{other}\""),
            ))
        }
    };
    Ok(SchemeSpec {
        test,
        lumping,
        bc_mode,
    })
}

fn build_integrator(
    i: &RawIntegrator,
    length: f64,
    base: Option<&Path>,
) -> Result<IntegratorSpec, CliError> {
    let method = match i.method.as_deref().unwrap_or("cdm") {
        "cdm" => Integrator::Cdm,
        "rk4" => Integrator::Rk4,
        other => {
            return Err(invalid(
                "integrator.method",
                format!("expected \"cdm\" or \"rk4\", got \"{other}\""),
            ))
        }
    };
    let dt_rule = match (i.dt_rule.as_deref(), i.dt) {
        (Some("fixed") | None, Some(dt)) => DtRule::Fixed(positive("integrator.dt", dt)?),
        (Some("fixed"), None) => {
            return Err(invalid(
                "integrator.dt",
                "required with dt_rule = \"fixed\"",
            ))
        }
        (Some("h_over_10") | None, None) => DtRule::HOverTen,
        (Some("adapted_p"), None) => DtRule::AdaptedP,
        (Some("h_over_10" | "adapted_p"), Some(_)) => {
            return Err(invalid(
                "integrator.dt",
                "only allowed with dt_rule = \"fixed\"",
            ))
        }
        (Some(other), _) => {
            return Err(invalid(
                "integrator.dt_rule",
                format!("expected \"fixed\", \"h_over_10\" or \"adapted_p\", got \"{other}\""),
            ))
        }
    };
    let t_end = positive("integrator.t_end", i.t_end)?;
    let initial = match i.initial.as_deref().unwrap_or("rest") {
        "rest" => InitialKind::Rest,
        "standing_wave" => InitialKind::StandingWave,
        other => {
            return Err(invalid(
                "integrator.initial",
                format!("expected \"rest\" or \"standing_wave\", got \"{other}\""),
            ))
        }
    };
    let forcing = match i.forcing.as_deref().unwrap_or("none") {
        "none" => ForcingKind::None,
        "ground" => ForcingKind::Ground,
        "static_load" => ForcingKind::StaticLoad,
        other => {
            return Err(invalid(
                "integrator.forcing",
                format!("expected \"none\", \"ground\" or \"static_load\", got \"{other}\""),
            ))
        }
    };
    let signal = i.signal.as_deref().map(|s| match s {
        "synthetic" => SignalSource::Synthetic,
        path => SignalSource::File(resolve_relative(base, path)),
    });
    if forcing == ForcingKind::Ground && signal.is_none() {
        return Err(invalid(
            "integrator.signal",
            "required with forcing = \"ground\"",
        ));
    }
    if forcing != ForcingKind::Ground && signal.is_some() {
        return Err(invalid(
            "integrator.signal",
            "only allowed with forcing = \"ground\"",
        ));
    }
    let ground_mass = parse_ground_mass(i.ground_mass.as_deref().unwrap_or("scheme"))
        .map_err(|e| invalid("integrator.ground_mass", e))?;
    let probes = i.probes.clone().unwrap_or_else(|| vec![length]);
    if probes.is_empty() {
        return Err(invalid("integrator.probes", "needs at least one position"));
    }
    if let Some(x) = probes.iter().find(|&&x| !(0.0..=length).contains(&x)) {
        return Err(invalid(
            "integrator.probes",
            format!("position {x} outside [0, {length}]"),
        ));
    }
    let stride = i.stride.unwrap_or(1);
    if stride == 0 {
        return Err(invalid("integrator.stride", "must be at least 1"));
    }
    Ok(IntegratorSpec {
        method,
        dt_rule,
        t_end,
        initial,
        forcing,
        signal,
        ground_mass,
        probes,
        stride,
    })
}

pub fn parse_ground_mass(s: &str) -> Result<GroundMass, String> {
    match s {
        "scheme" => Ok(GroundMass::Scheme),
        "consistent" => Ok(GroundMass::Consistent),
        other => Err(format!(
            "expected \"scheme\" or \"consistent\", got \"{other}\""
        )),
    }
}

/// Cross-field checks that also run after command-line overrides.
pub fn validate(s: &Scenario) -> Result<(), CliError> {
    if s.mesh.p == 0 || s.mesh.p > iga_dual::spline::MAX_DEGREE {
        return Err(invalid(
            "mesh.p",
            format!("must be in 1..={}", iga_dual::spline::MAX_DEGREE),
        ));
    }
    if s.mesh.choice == MeshChoice::Weighted && s.mesh.p < 2 {
        return Err(invalid("mesh.p", "the weighted preset needs p >= 2"));
    }
    if let TestChoice::Ad(q) = s.scheme.test {
        check_q(q, s.mesh.p, "scheme.q")?;
    }
    match s.study {
        Study::Static => {
            if s.model.support() == iga_dual::assembly::Support::FreeFree {
                return Err(invalid(
                    "model.left, model.right",
                    "a static solve needs at least one fixed end",
                ));
            }
        }
        Study::Spectrum | Study::Modeshape => {
            if s.model.support() == iga_dual::assembly::Support::FreeFree {
                return Err(invalid(
                    "model.left, model.right",
                    "spectra need at least one fixed end",
                ));
            }
        }
        Study::Convergence => {
            if s.problem == ConvergenceProblem::Static
                && iga_dual::analysis::analytic_static(&s.model, 0.0).is_none()
            {
                return Err(invalid(
                    "load",
                    "no closed-form static reference for this load and support combination",
                ));
            }
            if s.mesh.refinements.len() < 3 {
                return Err(invalid(
                    "mesh.refinements",
                    "a convergence study needs at least three levels",
                ));
            }
            if s.problem == ConvergenceProblem::StandingWave {
                if s.integrator.is_none() {
                    return Err(invalid(
                        "integrator",
                        "section required for the standing_wave problem",
                    ));
                }
                if s.model.support() != iga_dual::assembly::Support::FixedFixed {
                    return Err(invalid(
                        "model.left, model.right",
                        "the standing_wave problem needs both ends fixed",
                    ));
                }
            }
        }
        Study::Transient => {
            if s.integrator.is_none() {
                return Err(invalid(
                    "integrator",
                    "section required for a transient study",
                ));
            }
        }
    }
    if let Some(i) = &s.integrator {
        if i.forcing == ForcingKind::StaticLoad && s.model.load.is_zero() {
            return Err(invalid(
                "integrator.forcing",
                "\"static_load\" needs a nonzero [load]",
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const BASE: &str = "study = \"static\"\n[model]\nlength = 2.0\ne = 4.0\narea = 0.5\nmu = 1.0\n[load]\nsine_p0 = 1.0\n[mesh]\np = 2\npreset = \"B\"\n";

    fn err(text: &str) -> String {
        parse_config_str(text, None).unwrap_err().to_string()
    }

    #[test]
    fn defaults_are_filled() {
        let s = parse_config_str(BASE, None).unwrap();
        assert_eq!(s.study, Study::Static);
        assert_eq!(s.model.ea, 2.0);
        assert_eq!(s.mesh.refinement, 1);
        assert_eq!(s.mesh.refinements, vec![1, 2, 4, 8]);
        assert_eq!(s.scheme.resolve(2), Scheme::consistent());
        assert_eq!(s.samples, 101);
        assert_eq!(s.mode, 10);
        assert!(s.integrator.is_none());
    }

    #[test]
    fn unknown_keys_name_their_path() {
        let e = err(&format!("{BASE}colour = 3\n"));
        assert!(e.contains("mesh") && e.contains("colour"), "{e}");
        let e = err(&BASE.replace("study", "studdy"));
        assert!(e.contains("studdy"), "{e}");
    }

    #[test]
    fn invalid_values_name_their_key() {
        assert!(err(&BASE.replace("length = 2.0", "length = -1.0")).contains("model.length"));
        assert!(err(&BASE.replace("preset = \"B\"", "preset = \"Z\"")).contains("mesh.preset"));
        assert!(err(&format!("{BASE}[scheme]\ntest_fn = \"ad\"\n")).contains("scheme"));
        assert!(err(&format!("{BASE}[scheme]\ntest_fn = \"ad\"\nq = 3\n")).contains("scheme.q"));
        assert!(err(&BASE.replace("mu = 1.0", "")).contains("model.mu"));
    }

    #[test]
    fn transient_requires_integrator() {
        let e = err(&BASE.replace("\"static\"", "\"transient\""));
        assert!(e.contains("integrator"), "{e}");
    }

    #[test]
    fn relative_signal_path_resolves_against_base() {
        let text = format!(
            "{}[integrator]\nt_end = 1.0\nforcing = \"ground\"\nsignal = \"sig.csv\"\n",
            BASE.replace("\"static\"", "\"transient\"")
        );
        let s = parse_config_str(&text, Some(Path::new("/data/run"))).unwrap();
        let signal = s.integrator.unwrap().signal.unwrap();
        assert_eq!(
            signal,
            SignalSource::File(PathBuf::from("/data/run/sig.csv"))
        );
    }

    #[test]
    fn scheme_strings() {
        let s = SchemeSpec::parse("ad+rowsum+naive", Some(QSpec::Named(QName::Max))).unwrap();
        assert_eq!(
            s.resolve(4),
            Scheme::ad_rowsum(4).with_bc_mode(BcMode::Naive)
        );
        assert!(SchemeSpec::parse("ig+fast", None).is_err());
        assert!(SchemeSpec::parse("nurbs", Some(QSpec::Value(1))).is_err());
    }

    proptest! {
        #[test]
        fn qspec_round_trips(v in 1usize..20) {
            let q: QSpec = v.to_string().parse().unwrap();
            prop_assert_eq!(q, QSpec::Value(v));
            prop_assert_eq!(q.to_string().parse::<QSpec>().unwrap(), q);
        }

        #[test]
        fn named_q_resolves_within_degree(p in 1usize..=8) {
            prop_assert_eq!(QSpec::Named(QName::Min).resolve(p), 1);
            prop_assert_eq!(QSpec::Named(QName::Max).resolve(p), p);
        }

        #[test]
        fn refinement_count_scales_elements(m in 1usize..40) {
            let mut text = BASE.replace("preset = \"B\"", "preset = \"uniform\"\nelements = 3");
            text.push_str(&format!("refinement = {m}\n"));
            let s = parse_config_str(&text, None).unwrap();
            prop_assert_eq!(s.mesh.n_elements(s.mesh.refinement), 3 * m);
        }
    }
}
