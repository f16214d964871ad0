//! Exhaustion loop, recipes and immersion meshes.

mod exhaustion;
mod mesh;
mod recipes;

pub use exhaustion::{
    conformal_distance, period_residual, quadratic_residual, run_exhaustion, stage_labyrinths, ExhaustionPlan,
    ExhaustionResult, PairRelation, StageAction, StageLog, StageSettings, DEFAULT_D0_FRACTION, DISC_STAGE_RATIO,
    QUADRATIC_TOL,
};
pub use mesh::{
    gauss_legendre, integrate_mesh, intrinsic_distance, mesh_on_domain, DistanceEntry, EdgeIntegrator, SurfaceMesh,
    CLOSURE_TOL,
};
pub use recipes::{
    default_eta_seed, default_lambdas, domain_zero_flux, omitted_hyperplanes, recipe_cm_embedding, recipe_gauss_omit, recipe_harmonic,
    recipe_minimal, PairCase, PrescribedMap, RecipeAudit, RecipeOutput, CONFORMALITY_TOL, NON_PROPERNESS_NOTE,
};
