//! Norms, error maps and diagnostics shared by the tests and the CLI.
//!
//! The canonical gradient seminorm sums squared forward differences over
//! every lattice edge incident to the chosen region, so fields pick up their
//! jumps across the region boundary against the stored (typically zero)
//! exterior values. With this convention the Dirichlet projection of the
//! elliptic module is exactly orthogonal at the discrete level. Spectral
//! gradients appear only in the wave-energy diagnostic.

use crate::error::{Error, Result};
use crate::grid::DiscreteDomain;
use crate::wave::{same_grid, ScalarField};

/// Region selector for norms: the interior index set, the exterior
/// (boundary included), or the whole grid.
#[derive(Debug, Clone, Copy)]
pub enum Region<'a> {
    All,
    Inside(&'a DiscreteDomain),
    Exterior(&'a DiscreteDomain),
}

impl Region<'_> {
    fn contains(&self, idx: usize) -> bool {
        match self {
            Region::All => true,
            Region::Inside(dom) => dom.is_inside(idx),
            Region::Exterior(dom) => !dom.is_inside(idx),
        }
    }

    fn is_empty(&self) -> bool {
        match self {
            Region::All => false,
            Region::Inside(dom) => dom.inside_len() == 0,
            Region::Exterior(dom) => dom.exterior_len() == 0,
        }
    }
}

/// Accumulates `sum (du)(dv)` over all grid edges with at least one endpoint
/// in the region. The `h^2` area weight and the `1/h^2` of the difference
/// quotients cancel.
pub fn h10_inner(u: &ScalarField, v: &ScalarField, region: Region) -> Result<f64> {
    same_grid(u.grid(), v.grid(), "h10 inner product")?;
    if region.is_empty() {
        return Err(Error::InvalidDomain("empty region in h10 norm".into()));
    }
    let n = u.n();
    let uu = u.values();
    let vv = v.values();
    let mut sum = 0.0;
    for i1 in 0..n {
        for i2 in 0..n {
            let idx = i1 * n + i2;
            if i2 + 1 < n && (region.contains(idx) || region.contains(idx + 1)) {
                sum += (uu[idx + 1] - uu[idx]) * (vv[idx + 1] - vv[idx]);
            }
            if i1 + 1 < n && (region.contains(idx) || region.contains(idx + n)) {
                sum += (uu[idx + n] - uu[idx]) * (vv[idx + n] - vv[idx]);
            }
        }
    }
    Ok(sum)
}

/// Discrete gradient seminorm over the region; see [`h10_inner`].
pub fn h10_norm(f: &ScalarField, region: Region) -> Result<f64> {
    Ok(h10_inner(f, f, region)?.max(0.0).sqrt())
}

/// Error summary between a reconstruction and the ground truth on `I`.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub l2_rel: f64,
    pub h10_rel: f64,
    pub max_abs: f64,
    /// Difference image `f_true - f_rec` on the full grid.
    pub pointwise: ScalarField,
}

fn rel(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// Compares two fields over the interior index set.
pub fn compare(f_rec: &ScalarField, f_true: &ScalarField, dom: &DiscreteDomain) -> Result<ErrorReport> {
    same_grid(f_rec.grid(), f_true.grid(), "compare")?;
    same_grid(f_rec.grid(), dom.grid(), "compare vs domain")?;
    let pointwise = f_true.sub(f_rec);

    let mut num2 = 0.0;
    let mut den2 = 0.0;
    let mut max_abs = 0.0f64;
    for &idx in dom.inside() {
        let d = pointwise.values()[idx];
        num2 += d * d;
        den2 += f_true.values()[idx] * f_true.values()[idx];
        max_abs = max_abs.max(d.abs());
    }
    let l2_rel = rel(num2.sqrt(), den2.sqrt());
    let h10_rel = rel(
        h10_norm(&pointwise, Region::Inside(dom))?,
        h10_norm(f_true, Region::Inside(dom))?,
    );
    Ok(ErrorReport { l2_rel, h10_rel, max_abs, pointwise })
}
