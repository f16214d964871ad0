//! The `weierforge` command line. Data goes to files, diagnostics to stderr.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::audit::{gauss_report, rows_to_csv, AuditRow, Hyperplane};
use crate::builder::{
    mesh_on_domain, omitted_hyperplanes, recipe_cm_embedding, recipe_gauss_omit, recipe_harmonic, recipe_minimal,
    DistanceEntry, RecipeOutput, StageLog, SurfaceMesh, CLOSURE_TOL, CONFORMALITY_TOL,
};
use crate::config::{load_config, load_surface, write_atomic, write_json_atomic, Overrides, RecipeKind, RunConfig, RunManifest, RunStatus};
use crate::corrector::{solve, CorrectorProblem, Mode};
use crate::domain::homology_basis;
use crate::holo::HoloForm;
use crate::labyrinth::{crossing_length, make_labyrinth, target_density, Chart, Collar, DEFAULT_FILL};
use crate::{Error, Result, C, I};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_AUDIT: i32 = 4;

/// Bound on `|Q/dz² − 𝔥/dz²|` for harmonic output.
pub const HOPF_AUDIT_TOL: f64 = 1e-9;
/// Bound on `|flux − 𝚙|` per cycle.
pub const FLUX_AUDIT_TOL: f64 = 1e-8;
const INJECTIVITY_TOL: f64 = 1e-9;

#[derive(Parser, Debug)]
#[command(name = "weierforge", version, about = "Synthesize and audit conformal minimal immersions and harmonic maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a surface from a recipe and write geometry plus manifest.
    Synth(SynthArgs),
    /// Audit the Gauss map of a stored surface against hyperplanes.
    Audit(AuditArgs),
    /// Measure labyrinth crossing lengths on a collar.
    LabyrinthBench(BenchArgs),
    /// Run the period corrector alone.
    PeriodFix(PeriodFixArgs),
    /// Re-integrate a stored surface into OBJ and CSV.
    Export(ExportArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct SolverFlags {
    #[arg(long)]
    period_tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Initial corrector coefficient as `re,im`.
    #[arg(long, value_parser = parse_pair)]
    newton_seed: Option<(f64, f64)>,
    #[arg(long)]
    quiet: bool,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    recipe: Option<String>,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    stages: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Distance lattice spacing relative to the stage radius.
    #[arg(long)]
    grid_spacing: Option<f64>,
    #[arg(long)]
    m_max: Option<u32>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args, Debug)]
struct AuditArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    hyperplanes: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    incidence_floor: Option<f64>,
    #[arg(long)]
    quiet: bool,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Collar radii `r,R`.
    #[arg(long, value_parser = parse_pair, default_value = "0.8,1")]
    collar: (f64, f64),
    #[arg(long, conflicts_with = "sweep")]
    m: Option<u32>,
    /// Inclusive range `m1..m2`.
    #[arg(long, value_parser = parse_sweep)]
    sweep: Option<(u32, u32)>,
    /// Lattice spacing; defaults to the finest the labyrinth requires.
    #[arg(long)]
    grid_spacing: Option<f64>,
    /// Use the identity chart instead of the fitted one.
    #[arg(long)]
    identity_chart: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    quiet: bool,
}

#[derive(Args, Debug)]
struct PeriodFixArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Mesh spacing relative to the outer radius.
    #[arg(long)]
    grid_spacing: Option<f64>,
    #[arg(long)]
    quiet: bool,
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected 'a,b', got '{s}'"))?;
    let p = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}"));
    Ok((p(a)?, p(b)?))
}

fn parse_sweep(s: &str) -> std::result::Result<(u32, u32), String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected 'm1..m2', got '{s}'"))?;
    let p = |t: &str| t.trim().parse::<u32>().map_err(|e| format!("'{t}': {e}"));
    let (a, b) = (p(a)?, p(b)?);
    if a > b {
        return Err(format!("empty sweep {a}..{b}"));
    }
    Ok((a, b))
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::InvalidDomain(_)
        | Error::IncompatibleTargets(_)
        | Error::SpacingTooCoarse { .. }
        | Error::ResolutionTooCoarse { .. }
        | Error::TreeTooDeep(_)
        | Error::EvalOutsideDomain { .. } => EXIT_CONFIG,
        Error::ZeroVector { .. } => EXIT_AUDIT,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_SOLVER,
    }
}

struct Log {
    quiet: bool,
}

impl Log {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn init_threads() {
    if let Some(n) = std::env::var("WEIERFORGE_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

pub fn run(args: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    init_threads();
    let result = match cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Audit(a) => cmd_audit(a),
        Command::LabyrinthBench(a) => cmd_bench(a),
        Command::PeriodFix(a) => cmd_period_fix(a),
        Command::Export(a) => cmd_export(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn overrides(solver: &SolverFlags) -> Overrides {
    Overrides {
        period_tol: solver.period_tol,
        max_iter: solver.max_iter,
        newton_seed: solver.newton_seed.map(|(a, b)| [a, b]),
        ..Overrides::default()
    }
}

fn output_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.output.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn cmd_synth(a: SynthArgs) -> Result<i32> {
    let mut cfg = load_config(&a.config)?;
    let mut o = overrides(&a.solver);
    o.recipe = a.recipe.as_deref().map(RecipeKind::parse).transpose()?;
    o.stages = a.stages;
    o.grid_spacing = a.grid_spacing;
    o.m_max = a.m_max;
    o.out = a.out;
    cfg.apply(&o);
    cfg.validate()?;
    let dir = output_dir(&cfg)?;
    let outcome = synthesize(cfg, Some(&dir), &Log { quiet: a.solver.quiet })?;
    Ok(outcome.code)
}

/// Result of a synthesis run.
pub struct SynthOutcome {
    pub manifest: RunManifest,
    pub mesh: Option<SurfaceMesh>,
    pub code: i32,
}

/// Runs a recipe, meshes and audits the result. Files are written to `dir`
/// when given. Configuration errors are returned before any work starts;
/// later failures are recorded in the manifest and the exit code.
pub fn synthesize_quiet(cfg: RunConfig, dir: Option<&Path>) -> Result<SynthOutcome> {
    synthesize(cfg, dir, &Log { quiet: true })
}

fn synthesize(cfg: RunConfig, dir: Option<&Path>, log: &Log) -> Result<SynthOutcome> {
    cfg.validate()?;
    let recipe = cfg.recipe.ok_or_else(|| Error::Config("no recipe given (use --recipe or the config field)".into()))?;
    let plan = cfg.plan()?;
    let start = Instant::now();
    let mut manifest = RunManifest::new("synth", cfg.clone());
    if let Some(d) = dir {
        manifest.write_partial(d)?;
    }
    log.say(format!("synth: recipe {recipe:?}, {} stage(s)", plan.len()));

    let built = {
        let mut on_stage = |s: &StageLog| {
            log.say(format!(
                "  stage {} ({:?}): deviation {:.3e} <= {:.3e}, distance {:.4} > {:.4}",
                s.stage, s.action, s.sup_deviation, s.deviation_budget, s.distance, s.distance_target
            ));
            manifest.stages.push(s.clone());
            if let Some(d) = dir {
                if let Err(e) = manifest.write_partial(d) {
                    log.say(format!("  warning: partial manifest not written: {e}"));
                }
            }
        };
        build_recipe(recipe, &cfg, &plan, &mut on_stage)
    };
    manifest.wall_times.insert("recipe".into(), start.elapsed().as_secs_f64());
    let out = match built {
        Ok(out) => out,
        Err(e) => {
            let code = exit_code(&e);
            log.say(format!("error: {e}"));
            manifest.status = RunStatus::Failed;
            manifest.error = Some(e.to_string());
            if let Some(d) = dir {
                manifest.write_final(d)?;
            }
            return Ok(SynthOutcome { manifest, mesh: None, code });
        }
    };

    manifest.case = Some(out.case);
    manifest.lambdas = out.lambdas.clone();
    manifest.base_values = out.base_values.clone();
    manifest.notes = out.notes.clone();
    if let Some(ex) = &out.exhaustion {
        manifest.d0 = Some(ex.d0);
        manifest.stages = ex.log.clone();
    }
    manifest.tuple = Some(out.tuple.clone());

    let t_mesh = Instant::now();
    let spacing = cfg.tolerances.mesh_spacing * plan.domain().outer_radius;
    let mesh = match mesh_on_domain(&out.tuple, &out.base_values, spacing, cfg.tolerances.period_tol) {
        Ok(mut m) => {
            m.distance_log = manifest
                .stages
                .iter()
                .map(|s| DistanceEntry { stage: s.stage, measured: s.distance, target: s.distance_target })
                .collect();
            Some(m)
        }
        Err(e) => {
            log.say(format!("error: mesh integration failed: {e}"));
            manifest.status = RunStatus::Failed;
            manifest.error = Some(e.to_string());
            None
        }
    };
    manifest.wall_times.insert("mesh".into(), t_mesh.elapsed().as_secs_f64());

    let t_audit = Instant::now();
    let mut rows = stage_rows(&manifest.stages, &cfg);
    rows.extend(recipe_rows(&out));
    if let Some(m) = &mesh {
        rows.push(AuditRow::at_most("mesh_closure_ratio", m.max_closure_ratio, CLOSURE_TOL));
        if recipe == RecipeKind::Cm {
            let ok = m.is_injective_projection(2, 3, INJECTIVITY_TOL);
            rows.push(AuditRow::at_least("injective_x3_x4", ok as u8 as f64, 1.0));
        }
        manifest.mesh = Some(crate::config::MeshSummary {
            nodes: m.params.len(),
            faces: m.faces.len(),
            spacing: m.spacing,
            max_closure_defect: m.max_closure_defect,
            max_closure_ratio: m.max_closure_ratio,
        });
    }
    if recipe == RecipeKind::GaussOmit {
        let planes = omitted_hyperplanes(out.tuple.dimension())
            .into_iter()
            .map(|(label, h)| Hyperplane::new(h, label))
            .collect::<Result<Vec<_>>>()?;
        match gauss_report(&out.tuple, &planes, mesh.as_ref(), cfg.tolerances.audit_samples, cfg.tolerances.incidence_floor) {
            Ok(r) => rows.extend(r),
            Err(e) => {
                log.say(format!("audit error: {e}"));
                rows.push(AuditRow { check: "gauss_map_nonvanishing".into(), value: 0.0, threshold: 1.0, pass: false });
            }
        }
    }
    manifest.wall_times.insert("audit".into(), t_audit.elapsed().as_secs_f64());
    for r in rows.iter().filter(|r| !r.pass) {
        log.say(format!("  audit FAIL {}: {:e} vs {:e}", r.check, r.value, r.threshold));
    }
    let audit_ok = rows.iter().all(|r| r.pass);
    manifest.audit = rows;
    let code = if mesh.is_none() {
        EXIT_SOLVER
    } else if !audit_ok {
        EXIT_AUDIT
    } else {
        EXIT_OK
    };
    if mesh.is_some() {
        manifest.status = RunStatus::Complete;
    }
    manifest.wall_times.insert("total".into(), start.elapsed().as_secs_f64());

    if let Some(d) = dir {
        if let Some(m) = &mesh {
            write_atomic(&d.join("surface.obj"), m.to_obj().as_bytes())?;
            write_atomic(&d.join("surface.csv"), m.to_csv().as_bytes())?;
            write_atomic(&d.join("distances.csv"), m.distances_csv().as_bytes())?;
        }
        manifest.write_final(d)?;
        log.say(format!("wrote {}", d.display()));
    }
    Ok(SynthOutcome { manifest, mesh, code })
}

fn build_recipe(
    recipe: RecipeKind,
    cfg: &RunConfig,
    plan: &crate::builder::ExhaustionPlan,
    on_stage: &mut dyn FnMut(&StageLog),
) -> Result<RecipeOutput> {
    match recipe {
        RecipeKind::Harmonic => {
            let h = cfg.prescribed()?;
            let flux = cfg.flux_for(h.dimension())?;
            recipe_harmonic(&h, &cfg.hopf()?, &flux, plan, None, on_stage)
        }
        RecipeKind::Minimal => {
            let h = cfg.prescribed()?;
            let flux = cfg.flux_for(h.dimension())?;
            recipe_minimal(&h, &flux, plan, on_stage)
        }
        RecipeKind::Cm => recipe_cm_embedding(plan, on_stage),
        RecipeKind::GaussOmit => {
            let n = cfg.dimension.unwrap_or(4);
            let flux = cfg.flux_for(n)?;
            recipe_gauss_omit(n, &flux, plan, cfg.lambdas())
        }
    }
}

/// Per-stage inequalities: deviation, quadratic relation, periods, distance.
pub fn stage_rows(stages: &[StageLog], cfg: &RunConfig) -> Vec<AuditRow> {
    let mut rows = Vec::new();
    for s in stages {
        let n = s.stage;
        rows.push(AuditRow::at_most(format!("stage{n}_sup_deviation"), s.sup_deviation, s.deviation_budget));
        rows.push(AuditRow::at_most(format!("stage{n}_quadratic_residual"), s.quadratic_residual, cfg.tolerances.quadratic_tol));
        rows.push(AuditRow::at_most(format!("stage{n}_period_residual"), s.period_residual, cfg.tolerances.period_tol));
        rows.push(AuditRow {
            check: format!("stage{n}_distance"),
            value: s.distance,
            threshold: s.distance_target,
            pass: s.distance_ok(),
        });
    }
    rows
}

fn recipe_rows(out: &RecipeOutput) -> Vec<AuditRow> {
    let a = &out.audit;
    let mut rows = vec![AuditRow::at_most("hopf_residual", a.hopf_residual, HOPF_AUDIT_TOL), AuditRow::at_most("flux_residual", a.flux_residual, FLUX_AUDIT_TOL)];
    if let Some(c) = a.conformality_residual {
        rows.push(AuditRow::at_most("conformality_residual", c, CONFORMALITY_TOL));
    }
    rows.push(AuditRow {
        check: "density_floor_positive".into(),
        value: a.density_floor,
        threshold: 0.0,
        pass: a.density_floor > 0.0,
    });
    rows
}

fn cmd_audit(a: AuditArgs) -> Result<i32> {
    let log = Log { quiet: a.quiet };
    let (tuple, base, cfg) = load_surface(&a.input)?;
    let planes: Vec<Hyperplane> = match &a.hyperplanes {
        None => Vec::new(),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            let raw: Vec<Hyperplane> = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            raw.into_iter().map(|h| Hyperplane::new(h.coefficients, h.label)).collect::<Result<_>>()?
        }
    };
    let spacing = cfg.tolerances.mesh_spacing * tuple.domain.outer_radius;
    let mesh = mesh_on_domain(&tuple, &base, spacing, cfg.tolerances.period_tol)?;
    let samples = a.samples.unwrap_or(cfg.tolerances.audit_samples);
    let floor = a.incidence_floor.unwrap_or(cfg.tolerances.incidence_floor);
    let rows = gauss_report(&tuple, &planes, Some(&mesh), samples, floor)?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    write_atomic(&a.out, rows_to_csv(&rows).as_bytes())?;
    for r in &rows {
        log.say(format!("{} {}: {:e} vs {:e}", if r.pass { "pass" } else { "FAIL" }, r.check, r.value, r.threshold));
    }
    Ok(if rows.iter().all(|r| r.pass) { EXIT_OK } else { EXIT_AUDIT })
}

#[derive(Serialize)]
struct BenchRow {
    m: u32,
    lambda: f64,
    mu: f64,
    measured_length: f64,
    rho_hat: f64,
    spacing: f64,
}

fn cmd_bench(a: BenchArgs) -> Result<i32> {
    let log = Log { quiet: a.quiet };
    let (r, big_r) = a.collar;
    if !(r > 0.0 && r < big_r) {
        return Err(Error::Config(format!("collar needs 0 < r < R, got {r},{big_r}")));
    }
    let (lo, hi) = match (a.m, a.sweep) {
        (Some(m), _) => (m, m),
        (None, Some(s)) => s,
        (None, None) => (3, 5),
    };
    fs::create_dir_all(&a.out)?;
    let collar = Collar::new(C::new(0.0, 0.0), r, big_r);
    let aux: Vec<(C, f64)> = collar.samples(8, 64).into_iter().map(|z| (z, 1.0)).collect();
    let one = |_: C| 1.0;
    let mut csv = String::from("m,lambda,mu,measured_length,rho_hat,spacing\n");
    let mut rows = Vec::new();
    for m in lo..=hi {
        let chart = if a.identity_chart { Chart::identity(collar.center) } else { Chart::fitted(&collar, m, DEFAULT_FILL) };
        let spec = make_labyrinth(collar, chart, m, &aux)?;
        let spacing = a.grid_spacing.unwrap_or_else(|| spec.grid_spacing());
        let sigma2 = target_density(&spec, None, I, &one);
        let t = Instant::now();
        let len = crossing_length(&spec, &sigma2, spacing)?;
        let row = BenchRow { m, lambda: spec.lambda, mu: spec.mu, measured_length: len, rho_hat: len / (spec.mu * m as f64), spacing };
        log.say(format!("m={m}: length {len:.6} rho_hat {:.6} ({:.1}s)", row.rho_hat, t.elapsed().as_secs_f64()));
        csv.push_str(&format!("{},{:e},{:e},{:e},{:e},{:e}\n", m, row.lambda, row.mu, len, row.rho_hat, spacing));
        write_atomic(&a.out.join(format!("labyrinth_m{m}.svg")), spec.to_svg(600.0).as_bytes())?;
        rows.push(row);
    }
    write_atomic(&a.out.join("bench.csv"), csv.as_bytes())?;
    write_json_atomic(&a.out.join("bench.json"), &rows)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct PeriodFixReport {
    alpha: Vec<C>,
    residual: f64,
    iterations: usize,
    condition: f64,
    perturbations: usize,
    trace: Vec<crate::corrector::NewtonStep>,
    psi1: HoloForm,
    psi2: HoloForm,
}

fn cmd_period_fix(a: PeriodFixArgs) -> Result<i32> {
    let log = Log { quiet: a.solver.quiet };
    let mut cfg = load_config(&a.config)?;
    let mut o = overrides(&a.solver);
    o.out = a.out;
    cfg.apply(&o);
    cfg.validate()?;
    let spec = cfg.period_fix.clone().ok_or_else(|| Error::Config("config has no period_fix section".into()))?;
    let domain = cfg.domain()?;
    let seed = spec.seed.as_ref().map_or(Ok(HoloForm::dz()), |s| s.to_form())?;
    let mode = match &spec.theta {
        Some(t) => Mode::CaseA { theta: t.to_form()?, eta_seed: seed },
        None => Mode::CaseB { phi1_seed: seed, beta: C::new(spec.beta[0], spec.beta[1]) },
    };
    let targets: Vec<[C; 2]> = spec.targets.iter().map(|[p, q]| [C::new(p[0], p[1]), C::new(q[0], q[1])]).collect();
    let dir = output_dir(&cfg)?;
    let mut manifest = RunManifest::new("period-fix", cfg.clone());
    let start = Instant::now();
    let problem = CorrectorProblem::new(domain.clone(), homology_basis(&domain), mode, targets)?.with_tolerances(cfg.corrector_tolerances());
    let solved = solve(&problem);
    manifest.wall_times.insert("total".into(), start.elapsed().as_secs_f64());
    let code = match solved {
        Ok(s) => {
            log.say(format!("converged in {} iteration(s), residual {:e}", s.iterations, s.residual));
            manifest.solver_trace = s.trace.clone();
            manifest.status = RunStatus::Complete;
            manifest.audit.push(AuditRow::at_most("period_residual", s.residual, cfg.tolerances.period_tol));
            let report = PeriodFixReport {
                alpha: s.alpha,
                residual: s.residual,
                iterations: s.iterations,
                condition: s.condition,
                perturbations: s.perturbations,
                trace: s.trace,
                psi1: s.psi1,
                psi2: s.psi2,
            };
            write_json_atomic(&dir.join("solution.json"), &report)?;
            EXIT_OK
        }
        Err(e) => {
            log.say(format!("error: {e}"));
            if let Error::NewtonDiverged { trace } = &e {
                manifest.solver_trace = trace.iter().map(|&r| crate::corrector::NewtonStep { residual: r, damping: f64::NAN }).collect();
            }
            manifest.status = RunStatus::Failed;
            manifest.error = Some(e.to_string());
            exit_code(&e)
        }
    };
    manifest.write_final(&dir)?;
    Ok(code)
}

fn cmd_export(a: ExportArgs) -> Result<i32> {
    let log = Log { quiet: a.quiet };
    let (tuple, base, cfg) = load_surface(&a.input)?;
    let rel = a.grid_spacing.unwrap_or(cfg.tolerances.mesh_spacing);
    if !(rel > 0.0) {
        return Err(Error::Config(format!("grid spacing must be positive, got {rel}")));
    }
    let mesh = mesh_on_domain(&tuple, &base, rel * tuple.domain.outer_radius, cfg.tolerances.period_tol)?;
    fs::create_dir_all(&a.out)?;
    write_atomic(&a.out.join("surface.obj"), mesh.to_obj().as_bytes())?;
    write_atomic(&a.out.join("surface.csv"), mesh.to_csv().as_bytes())?;
    log.say(format!("exported {} nodes, closure ratio {:e}", mesh.params.len(), mesh.max_closure_ratio));
    Ok(EXIT_OK)
}
