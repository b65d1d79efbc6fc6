//! Iterative time-reversal reconstruction.
//!
//! With `A` the modified time-reversal and `W` the exterior single-time
//! transform, the loop realizes the Neumann-series partial sums through the
//! recursion
//!
//! ```text
//! f_0 = lambda * A g
//! f_j = f_{j-1} - lambda * A (W f_{j-1} - g)
//! ```
//!
//! which converges linearly whenever the error operator is a contraction.
//! Residual and (optional) truth-error norms are logged per iteration in the
//! forward-difference gradient seminorm, the residual restricted to the
//! exterior index set.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::analysis::{h10_norm, Region};
use crate::error::{Error, Result};
use crate::operators::{forward_exterior, modified_time_reversal, PipelineConfig};
use crate::wave::{same_grid, ScalarField};

/// Reconstruction parameters. The relaxation default follows the variable
/// speed experiments; 80 iterations is the reference budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconConfig {
    pub lambda: f64,
    pub max_iter: usize,
    /// Residual stopping threshold; 0 disables stopping.
    pub tol: f64,
    pub seed: u64,
}

impl Default for ReconConfig {
    fn default() -> Self {
        ReconConfig { lambda: 0.5, max_iter: 80, tol: 0.0, seed: 0 }
    }
}

impl ReconConfig {
    fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0 && self.lambda <= 2.0) {
            return Err(Error::LambdaOutOfRange(self.lambda));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("need at least one iteration".into()));
        }
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return Err(Error::InvalidConfig(format!("tolerance must be nonnegative, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    /// Gradient seminorm of `W f_j - g` over the exterior.
    pub residual_h10: f64,
    /// Gradient norm of `f_j - f_true` when ground truth was supplied.
    pub error_h10: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct ConvergenceLog {
    pub records: Vec<IterationRecord>,
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub f_rec: ScalarField,
    pub log: ConvergenceLog,
}

/// Aborts the iteration once the residual has grown by more than 1.5x for
/// five consecutive steps.
#[derive(Debug, Default)]
pub(crate) struct DivergenceGuard {
    last: Option<f64>,
    growth_streak: usize,
}

impl DivergenceGuard {
    /// Returns true when the iteration should be declared divergent.
    pub fn observe(&mut self, residual: f64) -> bool {
        if let Some(last) = self.last {
            if residual > 1.5 * last {
                self.growth_streak += 1;
            } else {
                self.growth_streak = 0;
            }
        }
        self.last = Some(residual);
        self.growth_streak >= 5
    }
}

fn step_error(iter: usize) -> impl FnOnce(Error) -> Error {
    move |source| Error::Iteration { iter, source: Box::new(source) }
}

/// Runs the recursion for `rc.max_iter` steps (or until the residual drops
/// below `rc.tol` when enabled). The reconstruction is supported on the
/// interior set with zero trace on the discrete boundary.
pub fn reconstruct(
    g: &ScalarField,
    cfg: &PipelineConfig,
    rc: &ReconConfig,
    f_true: Option<&ScalarField>,
) -> Result<Reconstruction> {
    rc.validate()?;
    same_grid(g.grid(), cfg.grid(), "data vs pipeline")?;
    if let Some(truth) = f_true {
        same_grid(truth.grid(), cfg.grid(), "truth vs pipeline")?;
    }
    if !g.is_finite() {
        return Err(Error::NonFinite { context: "in reconstruction data".into() });
    }

    let lambda = rc.lambda;
    let mut log = ConvergenceLog::default();
    let mut guard = DivergenceGuard::default();

    let mut f = modified_time_reversal(g, cfg).map_err(step_error(0))?;
    f.scale(lambda);
    let mut residual = forward_exterior(&f, cfg).map_err(step_error(0))?;
    residual.add_scaled(-1.0, g);

    let push_record = |log: &mut ConvergenceLog,
                           guard: &mut DivergenceGuard,
                           iter: usize,
                           f: &ScalarField,
                           residual: &ScalarField|
     -> Result<f64> {
        let res = h10_norm(residual, Region::Exterior(&cfg.dom))?;
        let err = match f_true {
            Some(truth) => Some(h10_norm(&f.sub(truth), Region::Inside(&cfg.dom))?),
            None => None,
        };
        log.records.push(IterationRecord { iter, residual_h10: res, error_h10: err });
        if guard.observe(res) {
            return Err(Error::Divergence { iter });
        }
        Ok(res)
    };

    let mut res = push_record(&mut log, &mut guard, 0, &f, &residual)?;
    for iter in 1..rc.max_iter {
        if rc.tol > 0.0 && res <= rc.tol {
            break;
        }
        let correction = modified_time_reversal(&residual, cfg).map_err(step_error(iter))?;
        f.add_scaled(-lambda, &correction);
        residual = forward_exterior(&f, cfg).map_err(step_error(iter))?;
        residual.add_scaled(-1.0, g);
        res = push_record(&mut log, &mut guard, iter, &f, &residual)?;
    }

    Ok(Reconstruction { f_rec: f, log })
}

/// Adds seeded Gaussian noise of standard deviation `noise_rel * max|g|` to
/// the exterior values. Zero amplitude returns the input bit for bit.
pub fn perturb_data(
    g: &ScalarField,
    noise_rel: f64,
    seed: u64,
    dom: &crate::grid::DiscreteDomain,
) -> Result<ScalarField> {
    if !(noise_rel.is_finite() && noise_rel >= 0.0) {
        return Err(Error::InvalidConfig(format!("noise level must be nonnegative, got {noise_rel}")));
    }
    let sigma = noise_rel * g.max_abs();
    if sigma == 0.0 {
        return Ok(g.clone());
    }
    let mut noisy = g.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma)
        .map_err(|e| Error::InvalidConfig(format!("bad noise distribution: {e}")))?;
    for (idx, v) in noisy.values_mut().iter_mut().enumerate() {
        if !dom.is_inside(idx) {
            *v += normal.sample(&mut rng);
        }
    }
    Ok(noisy)
}

/// Perturbs the data with seeded Gaussian noise of standard deviation
/// `noise_rel * max|g|` on the exterior set, then reconstructs. No stopping
/// rule is applied: every iteration up to the budget runs and is logged, so
/// the caller can inspect the whole error history.
pub fn reconstruct_noisy(
    g: &ScalarField,
    noise_rel: f64,
    cfg: &PipelineConfig,
    rc: &ReconConfig,
    f_true: Option<&ScalarField>,
) -> Result<Reconstruction> {
    let rc = ReconConfig { tol: 0.0, ..*rc };
    let noisy = perturb_data(g, noise_rel, rc.seed, &cfg.dom)?;
    reconstruct(&noisy, cfg, &rc, f_true)
}
