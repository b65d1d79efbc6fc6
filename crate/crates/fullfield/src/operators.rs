//! The discrete forward transform, the modified time-reversal and the error
//! operator built from them.
//!
//! Forward: zero-extend from `I`, propagate to time `T`, restrict to `J`.
//! Modified time-reversal: harmonically extend exterior data, run the wave
//! equation backwards, project onto the fields vanishing on the discrete
//! boundary. The error operator `K f = f - lambda * A W f` measures how far
//! `lambda * A W` is from the identity; for relaxation in `(0,2)` it is a
//! contraction in the gradient norm, which is what the Neumann-series
//! inversion rests on.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::{h10_norm, Region};
use crate::elliptic::{harmonic_extension, project_h10, DirichletSolveOptions};
use crate::error::{Error, Result};
use crate::exec;
use crate::grid::{DiscreteDomain, Grid};
use crate::phantoms::smooth_cutoff;
use crate::wave::{propagate, same_grid, time_reverse, ScalarField, SolverConfig, SoundSpeed, Spectral};

/// Everything one pipeline run needs: grid, index sets, speed, solver and
/// elliptic settings, mutually consistent.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub dom: DiscreteDomain,
    pub speed: SoundSpeed,
    pub solver: SolverConfig,
    pub elliptic: DirichletSolveOptions,
}

impl PipelineConfig {
    pub fn new(
        dom: DiscreteDomain,
        speed: SoundSpeed,
        solver: SolverConfig,
        elliptic: DirichletSolveOptions,
    ) -> Result<PipelineConfig> {
        same_grid(dom.grid(), speed.field().grid(), "domain vs sound speed")?;
        solver.validate_for(dom.grid(), speed.c_max())?;
        Ok(PipelineConfig { dom, speed, solver, elliptic })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.dom.grid()
    }
}

/// Exterior single-time transform: initial pressure on `I` to the pressure
/// snapshot at `T` restricted to `J`.
pub fn forward_exterior(f: &ScalarField, cfg: &PipelineConfig) -> Result<ScalarField> {
    same_grid(f.grid(), cfg.grid(), "forward_exterior input")?;
    let mut extended = f.clone();
    cfg.dom.mask_inside(extended.values_mut());
    let snap = propagate(&extended, &cfg.speed, &cfg.solver)?;
    let mut g = snap.pressure;
    cfg.dom.mask_exterior(g.values_mut());
    Ok(g)
}

/// Modified time-reversal `A = P o TimeReverse o E`: harmonic extension of
/// the exterior data, backward propagation, projection. Output is supported
/// on `I` with zero trace on the discrete boundary.
pub fn modified_time_reversal(g: &ScalarField, cfg: &PipelineConfig) -> Result<ScalarField> {
    same_grid(g.grid(), cfg.grid(), "modified_time_reversal input")?;
    let extended = harmonic_extension(g, &cfg.dom, &cfg.elliptic)?;
    let q0 = time_reverse(&extended, &cfg.speed, &cfg.solver)?;
    project_h10(&q0, &cfg.dom, &cfg.elliptic)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0 && lambda <= 2.0) {
        return Err(Error::LambdaOutOfRange(lambda));
    }
    Ok(())
}

/// Error operator `K f = f - lambda * A(W f)` for relaxation in `(0, 2]`.
pub fn error_operator(f: &ScalarField, lambda: f64, cfg: &PipelineConfig) -> Result<ScalarField> {
    check_lambda(lambda)?;
    let g = forward_exterior(f, cfg)?;
    let back = modified_time_reversal(&g, cfg)?;
    let mut out = f.clone();
    cfg.dom.mask_inside(out.values_mut());
    out.add_scaled(-lambda, &back);
    Ok(out)
}

/// Empirical contraction measurements of the error operator.
#[derive(Debug, Clone)]
pub struct ContractionReport {
    pub max_ratio: f64,
    pub ratios: Vec<f64>,
}

/// Draws a smooth random field in the discrete analog of the compactly
/// supported class: Gaussian-filtered white noise times a bump vanishing
/// near the boundary, zeroed outside `I`.
pub(crate) fn random_smooth_field(seed: u64, cfg: &PipelineConfig) -> ScalarField {
    let grid = cfg.grid();
    let n = grid.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..grid.len()).map(|_| rng.random::<f64>() - 0.5).collect();

    // Low-pass at a couple of grid cells.
    let sigma = 2.0 * grid.spacing();
    let k = grid.wavevectors();
    let mut mult = vec![0.0; grid.len()];
    for i1 in 0..n {
        for i2 in 0..n {
            let ksq = k[i1] * k[i1] + k[i2] * k[i2];
            mult[i1 * n + i2] = (-0.5 * ksq * sigma * sigma).exp();
        }
    }
    let mut engine = Spectral::new(n, cfg.solver.exec);
    let mut smooth = vec![0.0; grid.len()];
    engine.apply_real_multiplier(&noise, &mult, &mut smooth);

    let crate::grid::DomainShape::Disc { center, radius } = cfg.dom.shape();
    let mut field = ScalarField::from_values(grid, smooth).expect("sized");
    for i1 in 0..n {
        for i2 in 0..n {
            let (x1, x2) = grid.point(i1, i2);
            let r = ((x1 - center.0).powi(2) + (x2 - center.1).powi(2)).sqrt();
            field.values_mut()[i1 * n + i2] *= smooth_cutoff(r, 0.75 * radius, 0.92 * radius);
        }
    }
    cfg.dom.mask_inside(field.values_mut());
    field
}

/// Runs `trials` independent draws and reports `|K f| / |f|` in the gradient
/// norm for each. Per-trial seeds derive deterministically from the master
/// seed, so trials can run in parallel without changing the output.
pub fn estimate_contraction(
    lambda: f64,
    trials: usize,
    seed: u64,
    cfg: &PipelineConfig,
) -> Result<ContractionReport> {
    check_lambda(lambda)?;
    if trials == 0 {
        return Err(Error::InvalidConfig("contraction estimate needs at least one trial".into()));
    }
    let outcomes = exec::map_trials(cfg.solver.exec, trials, |trial| -> Result<f64> {
        let trial_seed = seed ^ (trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(trial as u64);
        let f = random_smooth_field(trial_seed, cfg);
        let kf = error_operator(&f, lambda, cfg)?;
        let nf = h10_norm(&f, Region::Inside(&cfg.dom))?;
        let nk = h10_norm(&kf, Region::Inside(&cfg.dom))?;
        Ok(nk / nf)
    });
    let mut ratios = Vec::with_capacity(trials);
    for r in outcomes {
        ratios.push(r?);
    }
    let max_ratio = ratios.iter().fold(0.0f64, |m, &r| m.max(r));
    Ok(ContractionReport { max_ratio, ratios })
}
