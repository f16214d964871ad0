//! Run configuration and the run manifest.
//!
//! Configs use plain decimal numbers; complex values are `[re, im]` pairs.
//! Forms carried in the manifest keep the bit-exact hex encoding.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::audit::AuditRow;
use crate::builder::{ExhaustionPlan, PairCase, PrescribedMap, RecipeAudit, StageLog, StageSettings};
use crate::corrector::{NewtonStep, Tolerances};
use crate::domain::{CircularDomain, Hole};
use crate::holo::{HoloForm, Laurent, PoleSeries};
use crate::weierstrass::WeierstrassTuple;
use crate::{Error, Result, C};

pub const MAX_STAGES: usize = 6;
pub const PARTIAL_MANIFEST: &str = "manifest.partial.json";
pub const MANIFEST: &str = "manifest.json";

fn cx(p: [f64; 2]) -> C {
    C::new(p[0], p[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecipeKind {
    Harmonic,
    Minimal,
    Cm,
    GaussOmit,
}

impl RecipeKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "harmonic" => Ok(RecipeKind::Harmonic),
            "minimal" => Ok(RecipeKind::Minimal),
            "cm" => Ok(RecipeKind::Cm),
            "gauss-omit" | "gauss_omit" => Ok(RecipeKind::GaussOmit),
            other => Err(Error::Config(format!("unknown recipe '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoleSpec {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    #[serde(default)]
    pub outer_center: [f64; 2],
    pub outer_radius: f64,
    #[serde(default)]
    pub holes: Vec<HoleSpec>,
}

impl DomainSpec {
    pub fn build(&self) -> Result<CircularDomain> {
        let holes = self.holes.iter().map(|h| Hole { center: cx(h.center), radius: h.radius }).collect();
        CircularDomain::new(cx(self.outer_center), self.outer_radius, holes, "config")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoleSpec {
    pub center: [f64; 2],
    /// Coefficients of `(z − center)^{−1}, (z − center)^{−2}, …`.
    pub coeffs: Vec<[f64; 2]>,
}

/// A meromorphic coefficient `g` of the form `g(z) dz` in decimal notation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormSpec {
    #[serde(default)]
    pub center: [f64; 2],
    #[serde(default)]
    pub poly: Vec<[f64; 2]>,
    #[serde(default)]
    pub poles: Vec<PoleSpec>,
}

impl FormSpec {
    pub fn constant(re: f64, im: f64) -> Self {
        FormSpec { center: [0.0, 0.0], poly: vec![[re, im]], poles: Vec::new() }
    }

    pub fn to_form(&self) -> Result<HoloForm> {
        let all = self.poly.iter().chain(self.poles.iter().flat_map(|p| p.coeffs.iter()));
        if all.flatten().any(|x| !x.is_finite()) {
            return Err(Error::Config("form coefficients must be finite".into()));
        }
        let laurent = Laurent {
            center: cx(self.center),
            poly: self.poly.iter().copied().map(cx).collect(),
            poles: self
                .poles
                .iter()
                .map(|p| PoleSeries { center: cx(p.center), coeffs: p.coeffs.iter().copied().map(cx).collect() })
                .collect(),
        };
        Ok(HoloForm::laurent(laurent))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSpec {
    #[serde(default = "default_stages")]
    pub stages: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// `d₀` as a fraction of the stage-one distance.
    #[serde(default = "default_d0_fraction")]
    pub d0_fraction: f64,
    #[serde(default)]
    pub base_point: Option<[f64; 2]>,
    /// Explicit scalings `t_n` of the final domain; overrides `stages`.
    #[serde(default)]
    pub fractions: Option<Vec<f64>>,
}

fn default_stages() -> usize {
    3
}
fn default_epsilon() -> f64 {
    0.1
}
fn default_d0_fraction() -> f64 {
    crate::builder::DEFAULT_D0_FRACTION
}

impl Default for PlanSpec {
    fn default() -> Self {
        PlanSpec { stages: 3, epsilon: 0.1, d0_fraction: default_d0_fraction(), base_point: None, fractions: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceSpec {
    pub period_tol: f64,
    pub max_iter: usize,
    /// Initial value of every corrector coefficient.
    pub newton_seed: [f64; 2],
    /// Distance lattice spacing relative to the stage outer radius.
    pub grid_spacing: f64,
    /// Mesh lattice spacing relative to the final outer radius.
    pub mesh_spacing: f64,
    pub m_max: u32,
    pub quadratic_tol: f64,
    /// Gauss-map audit samples.
    pub audit_samples: usize,
    pub incidence_floor: f64,
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        ToleranceSpec {
            period_tol: 1e-10,
            max_iter: 50,
            newton_seed: [0.0, 0.0],
            grid_spacing: 0.01,
            mesh_spacing: 0.05,
            m_max: 8,
            quadratic_tol: crate::builder::QUADRATIC_TOL,
            audit_samples: 10_000,
            incidence_floor: 0.01,
        }
    }
}

/// Input for the stand-alone corrector run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodFixSpec {
    /// `Θ/dz²`; absent selects the β-locked case with `ψ₂ = βψ₁`.
    #[serde(default)]
    pub theta: Option<FormSpec>,
    /// `η` for the case with `Θ`, `φ₁` otherwise; defaults to `dz`.
    #[serde(default)]
    pub seed: Option<FormSpec>,
    #[serde(default = "default_beta")]
    pub beta: [f64; 2],
    /// Targets `(∮ψ₁, ∮ψ₂)` per hole.
    pub targets: Vec<[[f64; 2]; 2]>,
}

fn default_beta() -> [f64; 2] {
    [0.0, 1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSpec,
    #[serde(default)]
    pub recipe: Option<RecipeKind>,
    /// Prescribed coordinates as forms `ψ_i = 2∂h_i`; defaults to `(Re z, Im z)`.
    #[serde(default)]
    pub h: Option<Vec<FormSpec>>,
    #[serde(default)]
    pub h_base: Option<Vec<f64>>,
    /// `𝔥/dz²` for the harmonic recipe.
    #[serde(default)]
    pub hopf: Option<FormSpec>,
    /// Flux vector per hole; defaults to zero.
    #[serde(default)]
    pub flux: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub lambdas: Option<Vec<[f64; 2]>>,
    /// Target dimension of the Gauss-omit recipe.
    #[serde(default)]
    pub dimension: Option<usize>,
    #[serde(default)]
    pub plan: PlanSpec,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
    #[serde(default)]
    pub period_fix: Option<PeriodFixSpec>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub rng_seed: u64,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub recipe: Option<RecipeKind>,
    pub stages: Option<usize>,
    pub period_tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub newton_seed: Option<[f64; 2]>,
    pub grid_spacing: Option<f64>,
    pub m_max: Option<u32>,
    pub out: Option<PathBuf>,
}

/// Parses JSON text. Syntax errors keep serde's line and column.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {x}")))
    }
}

impl RunConfig {
    pub fn apply(&mut self, o: &Overrides) {
        if o.recipe.is_some() {
            self.recipe = o.recipe;
        }
        if let Some(s) = o.stages {
            self.plan.stages = s;
            self.plan.fractions = None;
        }
        let t = &mut self.tolerances;
        t.period_tol = o.period_tol.unwrap_or(t.period_tol);
        t.max_iter = o.max_iter.unwrap_or(t.max_iter);
        t.newton_seed = o.newton_seed.unwrap_or(t.newton_seed);
        t.grid_spacing = o.grid_spacing.unwrap_or(t.grid_spacing);
        t.m_max = o.m_max.unwrap_or(t.m_max);
        if o.out.is_some() {
            self.output = o.out.clone();
        }
    }

    pub fn validate(&self) -> Result<()> {
        let stages = self.plan.fractions.as_ref().map_or(self.plan.stages, Vec::len);
        if !(1..=MAX_STAGES).contains(&stages) {
            return Err(Error::Config(format!("stages must lie in [1, {MAX_STAGES}], got {stages}")));
        }
        positive("plan.epsilon", self.plan.epsilon)?;
        positive("plan.d0_fraction", self.plan.d0_fraction)?;
        if self.plan.d0_fraction >= 1.0 {
            return Err(Error::Config("plan.d0_fraction must be below 1".into()));
        }
        let t = &self.tolerances;
        positive("tolerances.period_tol", t.period_tol)?;
        positive("tolerances.grid_spacing", t.grid_spacing)?;
        positive("tolerances.mesh_spacing", t.mesh_spacing)?;
        positive("tolerances.quadratic_tol", t.quadratic_tol)?;
        positive("tolerances.incidence_floor", t.incidence_floor)?;
        for (name, v) in [("max_iter", t.max_iter), ("m_max", t.m_max as usize), ("audit_samples", t.audit_samples)] {
            if v == 0 {
                return Err(Error::Config(format!("tolerances.{name} must be positive")));
            }
        }
        if t.newton_seed.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("tolerances.newton_seed must be finite".into()));
        }
        self.domain.build()?;
        Ok(())
    }

    pub fn domain(&self) -> Result<CircularDomain> {
        self.domain.build()
    }

    pub fn base_point(&self) -> C {
        self.plan.base_point.map_or(cx(self.domain.outer_center), cx)
    }

    pub fn corrector_tolerances(&self) -> Tolerances {
        Tolerances {
            period_tol: self.tolerances.period_tol,
            max_iter: self.tolerances.max_iter,
            initial_alpha: cx(self.tolerances.newton_seed),
            ..Tolerances::default()
        }
    }

    pub fn plan(&self) -> Result<ExhaustionPlan> {
        let domain = self.domain()?;
        let plan = match &self.plan.fractions {
            Some(f) => ExhaustionPlan::from_fractions(&domain, f, self.plan.epsilon, self.base_point())?,
            None => ExhaustionPlan::concentric(&domain, self.plan.stages, self.plan.epsilon, self.base_point())?,
        };
        let t = &self.tolerances;
        Ok(plan.with_settings(StageSettings {
            relative_spacing: t.grid_spacing,
            m_max: t.m_max,
            tol: self.corrector_tolerances(),
            quadratic_tol: t.quadratic_tol,
            d0_fraction: self.plan.d0_fraction,
            ..StageSettings::default()
        }))
    }

    pub fn prescribed(&self) -> Result<PrescribedMap> {
        match &self.h {
            None => Ok(PrescribedMap::coordinate_plane(self.base_point())),
            Some(specs) => {
                let forms = specs.iter().map(FormSpec::to_form).collect::<Result<Vec<_>>>()?;
                let base = self.h_base.clone().unwrap_or_else(|| vec![0.0; forms.len()]);
                PrescribedMap::new(forms, base)
            }
        }
    }

    pub fn hopf(&self) -> Result<HoloForm> {
        self.hopf.as_ref().map_or(Ok(HoloForm::zero()), FormSpec::to_form)
    }

    /// Flux per hole for a map into `ℝⁿ`.
    pub fn flux_for(&self, n: usize) -> Result<Vec<Vec<f64>>> {
        let nu = self.domain()?.nu();
        let flux = self.flux.clone().unwrap_or_else(|| vec![vec![0.0; n]; nu]);
        if flux.len() != nu || flux.iter().any(|v| v.len() != n) {
            return Err(Error::Config(format!("flux must be {nu} vectors of length {n}")));
        }
        Ok(flux)
    }

    pub fn lambdas(&self) -> Option<Vec<C>> {
        self.lambdas.as_ref().map(|v| v.iter().copied().map(cx).collect())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MeshSummary {
    pub nodes: usize,
    pub faces: usize,
    pub spacing: f64,
    pub max_closure_defect: f64,
    pub max_closure_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Complete,
    Failed,
}

/// Everything a run produced except geometry files. Wall-times live in
/// their own field so the numerics can be compared bit for bit.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub status: RunStatus,
    pub error: Option<String>,
    pub case: Option<PairCase>,
    pub d0: Option<f64>,
    pub stages: Vec<StageLog>,
    pub solver_trace: Vec<NewtonStep>,
    pub recipe_audit: Option<RecipeAudit>,
    pub audit: Vec<AuditRow>,
    pub mesh: Option<MeshSummary>,
    pub notes: Vec<String>,
    pub lambdas: Vec<C>,
    pub base_values: Vec<f64>,
    pub tuple: Option<WeierstrassTuple>,
    pub wall_times: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(command: &str, config: RunConfig) -> Self {
        RunManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config,
            status: RunStatus::Running,
            error: None,
            case: None,
            d0: None,
            stages: Vec::new(),
            solver_trace: Vec::new(),
            recipe_audit: None,
            audit: Vec::new(),
            mesh: None,
            notes: Vec::new(),
            lambdas: Vec::new(),
            base_values: Vec::new(),
            tuple: None,
            wall_times: BTreeMap::new(),
        }
    }

    /// JSON of the manifest with the wall-times removed.
    pub fn numerics_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self).map_err(|e| Error::Io(e.to_string()))?;
        if let Some(o) = v.as_object_mut() {
            o.remove("wall_times");
        }
        serde_json::to_string(&v).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn write_partial(&self, dir: &Path) -> Result<()> {
        write_json_atomic(&dir.join(PARTIAL_MANIFEST), self)
    }

    /// Final atomic write; the partial file is removed afterwards.
    pub fn write_final(&self, dir: &Path) -> Result<()> {
        write_json_atomic(&dir.join(MANIFEST), self)?;
        let partial = dir.join(PARTIAL_MANIFEST);
        if partial.exists() {
            fs::remove_file(partial)?;
        }
        Ok(())
    }
}

/// Writes through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    write_atomic(path, text.as_bytes())
}

/// The tuple and base values stored in a manifest by `synth`.
#[derive(Debug, Clone, Deserialize)]
pub struct StoredSurface {
    pub tuple: Option<WeierstrassTuple>,
    #[serde(default)]
    pub base_values: Vec<f64>,
    pub config: RunConfig,
}

pub fn load_surface(path: &Path) -> Result<(WeierstrassTuple, Vec<f64>, RunConfig)> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let s: StoredSurface =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let tuple = s.tuple.ok_or_else(|| Error::Config(format!("{} holds no surface data", path.display())))?;
    Ok((tuple, s.base_values, s.config))
}

#[cfg(test)]
mod tests {
    use super::*;

    const DISC: &str = r#"{ "domain": { "outer_radius": 1.0 }, "recipe": "cm" }"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = parse_config(DISC).unwrap();
        c.validate().unwrap();
        assert_eq!(c.recipe, Some(RecipeKind::Cm));
        assert_eq!(c.plan.stages, 3);
        assert_eq!(c.plan().unwrap().len(), 3);
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = parse_config("{\n  \"domain\": {\n    \"outer_radius\": 1.0,,\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");
        assert!(msg.contains("column"), "{msg}");
    }

    #[test]
    fn stage_bound_and_positive_tolerances() {
        let mut c = parse_config(DISC).unwrap();
        c.plan.stages = 9;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = parse_config(DISC).unwrap();
        c.tolerances.period_tol = 0.0;
        assert!(c.validate().is_err());
        let mut c = parse_config(DISC).unwrap();
        c.tolerances.grid_spacing = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(parse_config(r#"{ "domain": { "outer_radius": 1.0, "oops": 2 } }"#).is_err());
    }

    #[test]
    fn form_spec_matches_laurent() {
        let spec = FormSpec {
            center: [0.0, 0.0],
            poly: vec![[1.0, 0.0], [0.0, 2.0]],
            poles: vec![PoleSpec { center: [0.0, 0.0], coeffs: vec![[0.5, 0.0]] }],
        };
        let f = spec.to_form().unwrap();
        let z = C::new(0.7, -0.2);
        let want = C::new(1.0, 0.0) + C::new(0.0, 2.0) * z + 0.5 / z;
        assert!((f.eval(z).unwrap() - want).norm() < 1e-15);
    }

    #[test]
    fn overrides_take_precedence() {
        let mut c = parse_config(DISC).unwrap();
        c.apply(&Overrides { stages: Some(2), period_tol: Some(1e-9), recipe: Some(RecipeKind::Minimal), ..Default::default() });
        assert_eq!(c.plan.stages, 2);
        assert_eq!(c.tolerances.period_tol, 1e-9);
        assert_eq!(c.recipe, Some(RecipeKind::Minimal));
    }

    #[test]
    fn atomic_write_replaces_and_cleans_partial() {
        let dir = tempfile::tempdir().unwrap();
        let m = RunManifest::new("synth", parse_config(DISC).unwrap());
        m.write_partial(dir.path()).unwrap();
        assert!(dir.path().join(PARTIAL_MANIFEST).exists());
        m.write_final(dir.path()).unwrap();
        assert!(dir.path().join(MANIFEST).exists());
        assert!(!dir.path().join(PARTIAL_MANIFEST).exists());
        assert!(!dir.path().join("manifest.json.tmp").exists());
    }
}
