//! Discrete harmonic extension into the imaging region and the orthogonal
//! projection onto fields vanishing on its boundary.
//!
//! Both are built on the 5-point Laplace stencil with Dirichlet values read
//! from the discrete boundary, solved by plain conjugate gradient. Keeping
//! the stencil aligned with the forward-difference gradient norm makes the
//! projection exactly orthogonal in that norm.

use crate::error::{Error, Result};
use crate::grid::DiscreteDomain;
use crate::wave::{same_grid, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirichletSolveOptions {
    /// Relative residual target for the conjugate gradient solve.
    pub tol: f64,
    /// Iteration cap; `None` means `10 * N^2`.
    pub max_iter: Option<usize>,
}

impl Default for DirichletSolveOptions {
    fn default() -> Self {
        DirichletSolveOptions { tol: 1e-10, max_iter: None }
    }
}

impl DirichletSolveOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Solves the 5-point Laplace equation on `I` with Dirichlet data taken from
/// `boundary_values` at the discrete boundary. Returns the solution ordered
/// like `dom.inside()`.
fn solve_interior(
    boundary_values: &[f64],
    dom: &DiscreteDomain,
    opts: &DirichletSolveOptions,
) -> Result<Vec<f64>> {
    opts.validate()?;
    let n = dom.grid().n();
    let inside = dom.inside();
    let m = inside.len();
    if m == 0 {
        return Err(Error::EmptyInterior);
    }

    // Flat grid index -> position in the interior vector, usize::MAX outside.
    let mut pos = vec![usize::MAX; n * n];
    for (p, &idx) in inside.iter().enumerate() {
        pos[idx] = p;
    }

    // Interior points sit strictly inside the box, so all four neighbors exist.
    let neighbors = |idx: usize| [idx - n, idx + n, idx - 1, idx + 1];

    let mut b = vec![0.0; m];
    for (p, &idx) in inside.iter().enumerate() {
        let mut rhs = 0.0;
        for nb in neighbors(idx) {
            if pos[nb] == usize::MAX {
                debug_assert!(dom.is_boundary(nb));
                rhs += boundary_values[nb];
            }
        }
        b[p] = rhs;
    }

    let matvec = |x: &[f64], y: &mut [f64]| {
        for (p, &idx) in inside.iter().enumerate() {
            let mut acc = 4.0 * x[p];
            for nb in neighbors(idx) {
                let q = pos[nb];
                if q != usize::MAX {
                    acc -= x[q];
                }
            }
            y[p] = acc;
        }
    };

    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut x = vec![0.0; m];
    if b_norm == 0.0 {
        return Ok(x);
    }
    let max_iter = opts.max_iter.unwrap_or(10 * n * n);

    let mut r = b.clone();
    let mut p = r.clone();
    let mut ap = vec![0.0; m];
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    let target = opts.tol * b_norm;
    for _ in 0..max_iter {
        if rr.sqrt() <= target {
            return Ok(x);
        }
        matvec(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        let alpha = rr / pap;
        for i in 0..m {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new: f64 = r.iter().map(|v| v * v).sum();
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..m {
            p[i] = r[i] + beta * p[i];
        }
    }
    if rr.sqrt() <= target {
        Ok(x)
    } else {
        Err(Error::CgDidNotConverge { max_iter, residual: rr.sqrt() / b_norm })
    }
}

/// Extends exterior data into the interior by the discrete Dirichlet
/// problem: output equals `g` on `J` and solves the 5-point Laplace
/// equation on `I` with boundary values read from the discrete boundary.
pub fn harmonic_extension(
    g: &ScalarField,
    dom: &DiscreteDomain,
    opts: &DirichletSolveOptions,
) -> Result<ScalarField> {
    same_grid(g.grid(), dom.grid(), "harmonic extension")?;
    for (idx, &v) in g.values().iter().enumerate() {
        if !dom.is_inside(idx) && !v.is_finite() {
            return Err(Error::NonFinite { context: format!("on the exterior at index {idx}") });
        }
    }
    let sol = solve_interior(g.values(), dom, opts)?;
    let mut out = g.clone();
    for (p, &idx) in dom.inside().iter().enumerate() {
        out.values_mut()[idx] = sol[p];
    }
    Ok(out)
}

/// Subtracts the harmonic part: returns `u - h` on `I`, zero on the
/// boundary and the exterior, where `h` extends the trace of `u` on the
/// discrete boundary.
pub fn project_h10(
    u: &ScalarField,
    dom: &DiscreteDomain,
    opts: &DirichletSolveOptions,
) -> Result<ScalarField> {
    same_grid(u.grid(), dom.grid(), "h10 projection")?;
    if !u.is_finite() {
        return Err(Error::NonFinite { context: "in project_h10 input".into() });
    }
    let sol = solve_interior(u.values(), dom, opts)?;
    let mut out = ScalarField::zeros(u.grid());
    for (p, &idx) in dom.inside().iter().enumerate() {
        out.values_mut()[idx] = u.values()[idx] - sol[p];
    }
    Ok(out)
}
