//! Pseudospectral k-space solver for the variable-sound-speed wave equation
//! on the periodic box.
//!
//! Space is handled with Fourier multipliers; time stepping is leapfrog,
//!
//! ```text
//! p[n+1] = 2 p[n] - p[n-1] + dt^2 c^2(x) Lap p[n]
//! ```
//!
//! where `Lap` is the inverse transform of `-|k|^2 sinc^2(c_ref |k| dt / 2)`
//! times the spectrum. With the sinc correction on, the scheme integrates
//! constant-speed propagation at `c = c_ref` exactly in time, and is
//! unconditionally stable for `c(x) <= c_ref`. Time reversal reuses the same
//! solver through the substitution `s = T - t`, which maps the terminal-value
//! problem to an initial-value problem with zero initial velocity.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exec::ExecMode;
use crate::exec;
use crate::grid::{DiscreteDomain, Grid};

mod spectral;

pub(crate) use spectral::{sinc, Spectral};

/// Real field sampled on the grid, flat layout with the second index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Arc<Grid>) -> ScalarField {
        ScalarField { grid: grid.clone(), values: vec![0.0; grid.len()] }
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        let n = grid.n();
        let mut values = Vec::with_capacity(n * n);
        for i1 in 0..n {
            for i2 in 0..n {
                let (x1, x2) = grid.point(i1, i2);
                values.push(f(x1, x2));
            }
        }
        ScalarField { grid: grid.clone(), values }
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> Result<ScalarField> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "field holds {} values, grid wants {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(ScalarField { grid: grid.clone(), values })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, i1: usize, i2: usize) -> f64 {
        self.values[self.grid.idx(i1, i2)]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    /// `self += factor * other`.
    pub fn add_scaled(&mut self, factor: f64, other: &ScalarField) {
        debug_assert_eq!(self.grid.as_ref(), other.grid.as_ref());
        for (v, o) in self.values.iter_mut().zip(&other.values) {
            *v += factor * o;
        }
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        debug_assert_eq!(self.grid.as_ref(), other.grid.as_ref());
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        ScalarField { grid: self.grid.clone(), values }
    }
}

pub(crate) fn same_grid(a: &Grid, b: &Grid, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::GridMismatch(format!(
            "{what}: {}x{} box {} vs {}x{} box {}",
            a.n(),
            a.n(),
            a.half_width(),
            b.n(),
            b.n(),
            b.half_width()
        )));
    }
    Ok(())
}

/// Spatially varying propagation speed, rescaled to 1 outside the imaging
/// region.
#[derive(Debug, Clone)]
pub struct SoundSpeed {
    field: ScalarField,
    c_max: f64,
}

impl SoundSpeed {
    /// Validates positivity everywhere and the exact value 1 on `J`.
    pub fn new(field: ScalarField, dom: &DiscreteDomain) -> Result<SoundSpeed> {
        same_grid(field.grid(), dom.grid(), "sound speed vs domain")?;
        let mut c_max = 0.0f64;
        for (idx, &v) in field.values().iter().enumerate() {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidSpec(format!("sound speed must be positive, got {v} at index {idx}")));
            }
            if !dom.is_inside(idx) && v != 1.0 {
                return Err(Error::InvalidSpec(format!(
                    "sound speed must equal 1 on the exterior, got {v} at index {idx}"
                )));
            }
            c_max = c_max.max(v);
        }
        Ok(SoundSpeed { field, c_max })
    }

    /// Constant speed 1; satisfies every invariant on any domain.
    pub fn uniform(grid: &Arc<Grid>) -> SoundSpeed {
        let field = ScalarField::from_values(grid, vec![1.0; grid.len()]).expect("sized");
        SoundSpeed { field, c_max: 1.0 }
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn c_max(&self) -> f64 {
        self.c_max
    }
}

/// Time-stepping parameters. `dt` is snapped so that `T` is an exact integer
/// multiple of it and the Courant number `dt*c_ref/h` never exceeds `cfl`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub t: f64,
    pub dt: f64,
    pub cfl: f64,
    pub c_ref: f64,
    pub kspace_correction: bool,
    pub exec: ExecMode,
}

pub const DEFAULT_CFL: f64 = 0.3;

impl SolverConfig {
    pub fn new(t: f64, grid: &Grid, c_max: f64) -> Result<SolverConfig> {
        SolverConfig::with_cfl(t, grid, c_max, DEFAULT_CFL)
    }

    pub fn with_cfl(t: f64, grid: &Grid, c_max: f64, cfl: f64) -> Result<SolverConfig> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::InvalidConfig(format!("propagation time must be positive, got {t}")));
        }
        if !(c_max.is_finite() && c_max > 0.0) {
            return Err(Error::InvalidConfig(format!("reference speed must be positive, got {c_max}")));
        }
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(Error::InvalidConfig(format!("cfl must lie in (0, 1], got {cfl}")));
        }
        let cap = cfl * grid.spacing() / c_max;
        let steps = (t / cap).ceil().max(1.0);
        let dt = t / steps;
        Ok(SolverConfig { t, dt, cfl, c_ref: c_max, kspace_correction: true, exec: ExecMode::default() })
    }

    /// Explicit parameters, for callers that pin `dt` themselves. `t/dt`
    /// must be an integer and the Courant bound must hold.
    pub fn manual(t: f64, dt: f64, cfl: f64, c_ref: f64, kspace_correction: bool) -> Result<SolverConfig> {
        if !(t.is_finite() && t > 0.0 && dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidConfig(format!("need positive t and dt, got t={t}, dt={dt}")));
        }
        let steps = (t / dt).round();
        if steps < 1.0 || ((steps * dt - t) / t).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("t={t} is not an integer multiple of dt={dt}")));
        }
        if !(c_ref.is_finite() && c_ref > 0.0) {
            return Err(Error::InvalidConfig(format!("reference speed must be positive, got {c_ref}")));
        }
        Ok(SolverConfig { t, dt, cfl, c_ref, kspace_correction, exec: ExecMode::default() })
    }

    pub fn steps(&self) -> usize {
        (self.t / self.dt).round() as usize
    }

    pub(crate) fn validate_for(&self, grid: &Grid, c_max: f64) -> Result<()> {
        let actual = self.dt * c_max / grid.spacing();
        if actual > self.cfl * (1.0 + 1e-12) {
            return Err(Error::CflViolation { actual, limit: self.cfl });
        }
        if c_max > self.c_ref * (1.0 + 1e-12) {
            return Err(Error::InvalidConfig(format!(
                "reference speed {} below maximum sound speed {}",
                self.c_ref, c_max
            )));
        }
        Ok(())
    }
}

/// Pressure and velocity estimate at the final time, on one grid.
#[derive(Debug, Clone)]
pub struct WaveSnapshot {
    pub pressure: ScalarField,
    pub velocity: ScalarField,
}

fn laplacian_multiplier(grid: &Grid, cfg: &SolverConfig) -> Vec<f64> {
    let n = grid.n();
    let k = grid.wavevectors();
    let mut mult = vec![0.0; n * n];
    for i1 in 0..n {
        for i2 in 0..n {
            let ksq = k[i1] * k[i1] + k[i2] * k[i2];
            mult[i1 * n + i2] = if cfg.kspace_correction {
                let s = sinc(cfg.c_ref * ksq.sqrt() * cfg.dt / 2.0);
                -ksq * s * s
            } else {
                -ksq
            };
        }
    }
    mult
}

// Under the corrected scheme a mode in a unit-speed region oscillates at
// the discrete frequency w_d with w_d*dt = 2*asin(sin(c_ref|k|dt/2)/c_ref),
// and the centered time difference underestimates its derivative by
// sinc(w_d*dt). This symbol undoes that bias exactly wherever c = 1 — the
// whole exterior after rescaling — and reduces to 1/sinc(|k|dt) when
// c_ref = 1. The argument stays below pi at any Courant number up to 1, so
// the division is safe.
fn velocity_multiplier(grid: &Grid, cfg: &SolverConfig) -> Vec<f64> {
    let n = grid.n();
    let k = grid.wavevectors();
    let mut mult = vec![0.0; n * n];
    for i1 in 0..n {
        for i2 in 0..n {
            let kn = (k[i1] * k[i1] + k[i2] * k[i2]).sqrt();
            let s = (cfg.c_ref * kn * cfg.dt / 2.0).sin() / cfg.c_ref;
            mult[i1 * n + i2] = 1.0 / sinc(2.0 * s.asin());
        }
    }
    mult
}

/// Discrete Laplacian: inverse transform of `L(k)` times the spectrum, with
/// `L(k) = -|k|^2 sinc^2(c_ref |k| dt / 2)` when the k-space correction is
/// on and `-|k|^2` otherwise.
pub fn spectral_laplacian(u: &ScalarField, cfg: &SolverConfig) -> Result<ScalarField> {
    if !u.is_finite() {
        return Err(Error::NonFinite { context: "in spectral_laplacian input".into() });
    }
    let grid = u.grid();
    let mult = laplacian_multiplier(grid, cfg);
    let mut engine = Spectral::new(grid.n(), cfg.exec);
    let mut out = ScalarField::zeros(grid);
    engine.apply_real_multiplier(u.values(), &mult, out.values_mut());
    Ok(out)
}

/// Propagates initial pressure `f` (zero initial velocity) to time `cfg.t`.
///
/// The solver steps once past `T` so the returned velocity is the centered
/// difference `(p[M+1] - p[M-1]) / (2 dt)`, the estimate of the time
/// derivative at `T` itself; with the correction on it is deconvolved by the
/// sinc factor of the discrete dispersion, making it exact for constant
/// speed `c_ref`.
pub fn propagate(f: &ScalarField, c: &SoundSpeed, cfg: &SolverConfig) -> Result<WaveSnapshot> {
    let grid = f.grid().clone();
    same_grid(&grid, c.field().grid(), "initial pressure vs sound speed")?;
    cfg.validate_for(&grid, c.c_max())?;
    if !f.is_finite() {
        return Err(Error::NonFinite { context: "in propagate initial data".into() });
    }

    let n = grid.n();
    let len = grid.len();
    let steps = cfg.steps();
    let dt = cfg.dt;
    let mult = laplacian_multiplier(&grid, cfg);
    let mut engine = Spectral::new(n, cfg.exec);

    let c2: Vec<f64> = c.field().values().iter().map(|v| v * v).collect();
    let mut prev = f.values().to_vec();
    let mut lap = vec![0.0; len];
    engine.apply_real_multiplier(&prev, &mult, &mut lap);

    // First step with zero initial velocity: p[1] = p[0] + dt^2/2 c^2 Lap p[0].
    let mut cur = vec![0.0; len];
    {
        let (prev_r, lap_r, c2_r) = (&prev, &lap, &c2);
        let half = 0.5 * dt * dt;
        exec::fill_rows(cfg.exec, &mut cur, n, |i, row| {
            let off = i * n;
            for (j, v) in row.iter_mut().enumerate() {
                *v = prev_r[off + j] + half * c2_r[off + j] * lap_r[off + j];
            }
        });
    }

    let mut before_final = if steps == 1 { prev.clone() } else { Vec::new() };
    for step in 2..=steps + 1 {
        engine.apply_real_multiplier(&cur, &mult, &mut lap);
        {
            let (cur_r, lap_r, c2_r) = (&cur, &lap, &c2);
            let dt2 = dt * dt;
            exec::for_each_row(cfg.exec, &mut prev, n, |i, row| {
                let off = i * n;
                for (j, v) in row.iter_mut().enumerate() {
                    *v = 2.0 * cur_r[off + j] - *v + dt2 * c2_r[off + j] * lap_r[off + j];
                }
            });
        }
        std::mem::swap(&mut prev, &mut cur);
        if step == steps {
            before_final = prev.clone();
        }
        if step % 50 == 0 && !cur.iter().all(|v| v.is_finite()) {
            return Err(Error::Blowup { step });
        }
    }
    // cur = p[M+1], prev = p[M], before_final = p[M-1].

    let mut velocity = vec![0.0; len];
    {
        let (cur_r, bf_r) = (&cur, &before_final);
        let inv2dt = 1.0 / (2.0 * dt);
        exec::fill_rows(cfg.exec, &mut velocity, n, |i, row| {
            let off = i * n;
            for (j, v) in row.iter_mut().enumerate() {
                *v = (cur_r[off + j] - bf_r[off + j]) * inv2dt;
            }
        });
    }
    if cfg.kspace_correction {
        let vmult = velocity_multiplier(&grid, cfg);
        let raw = std::mem::replace(&mut velocity, vec![0.0; len]);
        engine.apply_real_multiplier(&raw, &vmult, &mut velocity);
    }

    if !prev.iter().all(|v| v.is_finite()) || !velocity.iter().all(|v| v.is_finite()) {
        return Err(Error::Blowup { step: steps });
    }

    Ok(WaveSnapshot {
        pressure: ScalarField::from_values(&grid, prev)?,
        velocity: ScalarField::from_values(&grid, velocity)?,
    })
}

/// Solves the time-reversed problem with terminal data `(h, 0)` back to
/// `t = 0`. By the substitution `s = T - t` this is the forward problem with
/// initial data `(h, 0)`, so it shares `propagate`'s code path bit for bit.
pub fn time_reverse(h: &ScalarField, c: &SoundSpeed, cfg: &SolverConfig) -> Result<ScalarField> {
    Ok(propagate(h, c, cfg)?.pressure)
}

/// Wave energy `h^2 sum_i [ c^-2 v_i^2 + |grad p_i|^2 ]` with a spectral
/// gradient. Conserved by the continuous flow; the discrete drift is a
/// solver diagnostic.
pub fn energy(snapshot: &WaveSnapshot, c: &SoundSpeed) -> Result<f64> {
    let grid = snapshot.pressure.grid();
    same_grid(grid, snapshot.velocity.grid(), "snapshot pressure vs velocity")?;
    same_grid(grid, c.field().grid(), "snapshot vs sound speed")?;
    let len = grid.len();
    let mut g1 = vec![0.0; len];
    let mut g2 = vec![0.0; len];
    let mut engine = Spectral::new(grid.n(), ExecMode::default());
    engine.gradient_into(snapshot.pressure.values(), grid.wavevectors(), &mut g1, &mut g2);

    let h2 = grid.spacing() * grid.spacing();
    let mut sum = 0.0;
    let v = snapshot.velocity.values();
    let cs = c.field().values();
    for i in 0..len {
        sum += v[i] * v[i] / (cs[i] * cs[i]) + g1[i] * g1[i] + g2[i] * g2[i];
    }
    Ok(h2 * sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{discretize_domain, DomainShape};

    fn arc_grid(a: f64, n: usize) -> Arc<Grid> {
        Arc::new(Grid::new(a, n).unwrap())
    }

    fn mode_field(grid: &Arc<Grid>, m1: i32, m2: i32) -> (ScalarField, f64) {
        let a = grid.half_width();
        let k1 = std::f64::consts::PI * m1 as f64 / a;
        let k2 = std::f64::consts::PI * m2 as f64 / a;
        let f = ScalarField::from_fn(grid, |x1, x2| (k1 * x1 + k2 * x2).cos());
        (f, (k1 * k1 + k2 * k2).sqrt())
    }

    fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        let den: f64 = b.iter().map(|y| y * y).sum();
        (num / den).sqrt()
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let grid = arc_grid(2.0, 32);
        let cfg = SolverConfig::new(1.0, &grid, 1.0).unwrap();
        let u = ScalarField::from_fn(&grid, |_, _| 5.0);
        let lap = spectral_laplacian(&u, &cfg).unwrap();
        assert!(lap.max_abs() < 1e-11, "got {}", lap.max_abs());
    }

    #[test]
    fn laplacian_eigenfunction_without_correction() {
        let grid = arc_grid(2.0, 32);
        let mut cfg = SolverConfig::new(1.0, &grid, 1.0).unwrap();
        cfg.kspace_correction = false;
        let (u, kn) = mode_field(&grid, 2, 1);
        let lap = spectral_laplacian(&u, &cfg).unwrap();
        let expected: Vec<f64> = u.values().iter().map(|v| -kn * kn * v).collect();
        assert!(rel_l2(lap.values(), &expected) < 1e-12);
    }

    #[test]
    fn laplacian_correction_multiplier() {
        // dt = 0.1, c_ref = 1, |k| = pi/a: multiplier -|k|^2 sinc^2(0.05 |k|).
        let grid = arc_grid(2.0, 16);
        let cfg = SolverConfig::manual(1.0, 0.1, 0.5, 1.0, true).unwrap();
        let (u, kn) = mode_field(&grid, 1, 0);
        assert!((kn - std::f64::consts::PI / 2.0).abs() < 1e-14);
        let lap = spectral_laplacian(&u, &cfg).unwrap();
        let s = (0.05 * kn).sin() / (0.05 * kn);
        let expected: Vec<f64> = u.values().iter().map(|v| -kn * kn * s * s * v).collect();
        assert!(rel_l2(lap.values(), &expected) < 1e-12);
    }

    #[test]
    fn laplacian_rejects_nan() {
        let grid = arc_grid(2.0, 16);
        let cfg = SolverConfig::new(1.0, &grid, 1.0).unwrap();
        let mut u = ScalarField::zeros(&grid);
        u.values_mut()[3] = f64::NAN;
        assert!(matches!(spectral_laplacian(&u, &cfg), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn zero_data_stays_zero() {
        let grid = arc_grid(3.25, 32);
        let cfg = SolverConfig::new(2.0, &grid, 1.0).unwrap();
        let c = SoundSpeed::uniform(&grid);
        let snap = propagate(&ScalarField::zeros(&grid), &c, &cfg).unwrap();
        assert_eq!(snap.pressure.max_abs(), 0.0);
        assert_eq!(snap.velocity.max_abs(), 0.0);
    }

    #[test]
    fn constant_speed_single_mode_is_exact() {
        let grid = arc_grid(3.25, 64);
        let cfg = SolverConfig::new(2.0, &grid, 1.0).unwrap();
        let c = SoundSpeed::uniform(&grid);
        let (f, kn) = mode_field(&grid, 3, 2);
        let snap = propagate(&f, &c, &cfg).unwrap();
        let expected: Vec<f64> =
            f.values().iter().map(|v| (kn * cfg.t).cos() * v).collect();
        let err = rel_l2(snap.pressure.values(), &expected);
        assert!(err < 1e-12, "dispersion error {err}");
        // The sinc-deconvolved velocity is exact for the reference speed too.
        let vel_expected: Vec<f64> =
            f.values().iter().map(|v| -kn * (kn * cfg.t).sin() * v).collect();
        let verr = rel_l2(snap.velocity.values(), &vel_expected);
        assert!(verr < 1e-11, "velocity error {verr}");
    }

    #[test]
    fn time_reverse_shares_the_forward_path() {
        let grid = arc_grid(3.25, 32);
        let cfg = SolverConfig::new(2.0, &grid, 1.0).unwrap();
        let c = SoundSpeed::uniform(&grid);
        let h = ScalarField::from_fn(&grid, |x1, x2| (-(x1 * x1 + x2 * x2) / 0.08).exp());
        let q0 = time_reverse(&h, &c, &cfg).unwrap();
        let snap = propagate(&h, &c, &cfg).unwrap();
        assert_eq!(q0.values(), snap.pressure.values());
    }

    #[test]
    fn time_reversal_alone_does_not_invert() {
        let grid = arc_grid(3.25, 64);
        let cfg = SolverConfig::new(2.0, &grid, 1.0).unwrap();
        let c = SoundSpeed::uniform(&grid);
        let f = ScalarField::from_fn(&grid, |x1, x2| (-(x1 * x1 + x2 * x2) / 0.045).exp());
        let g = propagate(&f, &c, &cfg).unwrap().pressure;
        let back = time_reverse(&g, &c, &cfg).unwrap();
        assert!(back.max_abs() > 1e-3);
        assert!(rel_l2(back.values(), f.values()) > 1e-2);
    }

    #[test]
    fn linearity_to_rounding() {
        let grid = arc_grid(2.25, 32);
        let cfg = SolverConfig::new(1.0, &grid, 1.0).unwrap();
        let c = SoundSpeed::uniform(&grid);
        let f = ScalarField::from_fn(&grid, |x1, x2| (-(x1 * x1 + x2 * x2) / 0.08).exp());
        let g = ScalarField::from_fn(&grid, |x1, x2| (x1 * 1.3).sin() * (-(x2 * x2) / 0.1).exp());
        let mut combo = f.clone();
        combo.scale(2.0);
        combo.add_scaled(-0.7, &g);
        let lhs = propagate(&combo, &c, &cfg).unwrap().pressure;
        let pf = propagate(&f, &c, &cfg).unwrap().pressure;
        let pg = propagate(&g, &c, &cfg).unwrap().pressure;
        let mut rhs = pf;
        rhs.scale(2.0);
        rhs.add_scaled(-0.7, &pg);
        assert!(rel_l2(lhs.values(), rhs.values()) < 1e-12);
    }

    #[test]
    fn matches_finite_difference_reference() {
        // Independent oracle: 2nd-order FD leapfrog on a 4x finer grid.
        let n = 128;
        let grid = arc_grid(2.25, n);
        let cfg = SolverConfig::new(1.0, &grid, 1.0).unwrap();
        let c = SoundSpeed::uniform(&grid);
        let sigma2 = 2.0 * 0.2 * 0.2;
        let f = ScalarField::from_fn(&grid, |x1, x2| (-(x1 * x1 + x2 * x2) / sigma2).exp());
        let ours = propagate(&f, &c, &cfg).unwrap().pressure;

        let fine = 4 * n;
        let fine_grid = arc_grid(2.25, fine);
        let f_fine = ScalarField::from_fn(&fine_grid, |x1, x2| (-(x1 * x1 + x2 * x2) / sigma2).exp());
        let reference = fd_reference(f_fine.values(), fine, fine_grid.spacing(), 1.0, 1.0);

        let coarse_ref: Vec<f64> = (0..n)
            .flat_map(|i1| (0..n).map(move |i2| (i1, i2)))
            .map(|(i1, i2)| reference[(4 * i1) * fine + 4 * i2])
            .collect();
        let err = rel_l2(ours.values(), &coarse_ref);
        assert!(err < 1e-3, "spectral vs FD reference: {err}");
    }

    /// Plain centered-difference solver on the periodic box; kept free of any
    /// spectral machinery so it can serve as an independent reference.
    fn fd_reference(f0: &[f64], n: usize, h: f64, t: f64, c: f64) -> Vec<f64> {
        let steps = (t / (0.25 * h / c)).ceil();
        let dt = t / steps;
        let steps = steps as usize;
        let lam = (c * dt / h) * (c * dt / h);
        let lap5 = |p: &[f64], i1: usize, i2: usize| {
            let up = if i1 == 0 { n - 1 } else { i1 - 1 };
            let dn = if i1 == n - 1 { 0 } else { i1 + 1 };
            let lf = if i2 == 0 { n - 1 } else { i2 - 1 };
            let rt = if i2 == n - 1 { 0 } else { i2 + 1 };
            p[up * n + i2] + p[dn * n + i2] + p[i1 * n + lf] + p[i1 * n + rt] - 4.0 * p[i1 * n + i2]
        };
        let mut prev = f0.to_vec();
        let mut cur = vec![0.0; n * n];
        for i1 in 0..n {
            for i2 in 0..n {
                cur[i1 * n + i2] = prev[i1 * n + i2] + 0.5 * lam * lap5(&prev, i1, i2);
            }
        }
        for _ in 2..=steps {
            let mut next = vec![0.0; n * n];
            for i1 in 0..n {
                for i2 in 0..n {
                    next[i1 * n + i2] =
                        2.0 * cur[i1 * n + i2] - prev[i1 * n + i2] + lam * lap5(&cur, i1, i2);
                }
            }
            prev = cur;
            cur = next;
        }
        cur
    }

    #[test]
    fn energy_of_zero_snapshot_is_zero() {
        let grid = arc_grid(2.0, 32);
        let c = SoundSpeed::uniform(&grid);
        let snap = WaveSnapshot {
            pressure: ScalarField::zeros(&grid),
            velocity: ScalarField::zeros(&grid),
        };
        assert_eq!(energy(&snap, &c).unwrap(), 0.0);
    }

    #[test]
    fn static_mode_energy_matches_parseval() {
        // For f = cos(k.x), h^2 sum |grad f|^2 = |k|^2 * (2a)^2 / 2.
        let grid = arc_grid(2.0, 64);
        let c = SoundSpeed::uniform(&grid);
        let (f, kn) = mode_field(&grid, 2, 3);
        let snap = WaveSnapshot { pressure: f, velocity: ScalarField::zeros(&grid) };
        let e = energy(&snap, &c).unwrap();
        let expected = kn * kn * (2.0 * grid.half_width()).powi(2) / 2.0;
        assert!((e - expected).abs() / expected < 1e-12, "energy {e} vs {expected}");
    }

    #[test]
    fn single_mode_energy_is_conserved_exactly() {
        let grid = arc_grid(3.25, 64);
        let cfg = SolverConfig::new(2.0, &grid, 1.0).unwrap();
        let c = SoundSpeed::uniform(&grid);
        let (f, _) = mode_field(&grid, 3, 1);
        let e0 = energy(
            &WaveSnapshot { pressure: f.clone(), velocity: ScalarField::zeros(&grid) },
            &c,
        )
        .unwrap();
        let snap = propagate(&f, &c, &cfg).unwrap();
        let et = energy(&snap, &c).unwrap();
        assert!((et - e0).abs() / e0 < 1e-11, "drift {}", (et - e0).abs() / e0);
    }

    #[test]
    fn gaussian_energy_drift_stays_small() {
        let grid = arc_grid(3.25, 128);
        let cfg = SolverConfig::new(2.0, &grid, 1.0).unwrap();
        let c = SoundSpeed::uniform(&grid);
        let f = ScalarField::from_fn(&grid, |x1, x2| (-(x1 * x1 + x2 * x2) / (2.0 * 0.3 * 0.3)).exp());
        let e0 = energy(
            &WaveSnapshot { pressure: f.clone(), velocity: ScalarField::zeros(&grid) },
            &c,
        )
        .unwrap();
        let snap = propagate(&f, &c, &cfg).unwrap();
        let et = energy(&snap, &c).unwrap();
        let drift = (et - e0).abs() / e0;
        assert!(drift < 1e-3, "energy drift {drift}");
    }

    #[test]
    fn support_stays_in_the_light_cone() {
        // Checks that a = T + 1.25 keeps the periodic wrap inert: the field
        // outside the Euclidean T-neighborhood of the disc stays at noise level.
        let grid = arc_grid(3.25, 128);
        let dom = discretize_domain(&grid, &DomainShape::unit_disc()).unwrap();
        let cfg = SolverConfig::new(2.0, &grid, 1.0).unwrap();
        let c = SoundSpeed::uniform(&grid);
        let mut f = ScalarField::from_fn(&grid, |x1, x2| (-(x1 * x1 + x2 * x2) / (2.0 * 0.13 * 0.13)).exp());
        dom.mask_inside(f.values_mut());
        let snap = propagate(&f, &c, &cfg).unwrap();
        let n = grid.n();
        let reach = 1.0 + cfg.t + 2.0 * grid.spacing();
        let mut worst = 0.0f64;
        for i1 in 0..n {
            for i2 in 0..n {
                let (x1, x2) = grid.point(i1, i2);
                if (x1 * x1 + x2 * x2).sqrt() > reach {
                    worst = worst.max(snap.pressure.at(i1, i2).abs());
                }
            }
        }
        assert!(worst < 1e-10, "leakage {worst}");
    }

    #[test]
    fn cfl_violation_is_rejected() {
        let grid = arc_grid(2.0, 32);
        // dt ten times the Courant cap.
        let cfg = SolverConfig::manual(1.0, 0.5, 0.3, 1.0, true).unwrap();
        let c = SoundSpeed::uniform(&grid);
        let f = ScalarField::zeros(&grid);
        assert!(matches!(propagate(&f, &c, &cfg), Err(Error::CflViolation { .. })));
    }

    #[test]
    fn config_snaps_dt_to_divide_t() {
        let grid = arc_grid(3.25, 128);
        let cfg = SolverConfig::new(2.0, &grid, 1.0).unwrap();
        let steps = cfg.steps() as f64;
        assert!((steps * cfg.dt - cfg.t).abs() < 1e-12);
        assert!(cfg.dt * 1.0 / grid.spacing() <= cfg.cfl * (1.0 + 1e-12));
    }
}
