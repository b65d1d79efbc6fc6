//! Computational grid, imaging domain and the discrete index sets shared by
//! the whole pipeline.
//!
//! The box `[-a,a]^2` is sampled at `N` points per axis, `x_i = (-a,-a) +
//! 2ia/N`. The imaging region is a disc; its strict interior on the grid is
//! the index set `I`, the complement is `J`, and the discrete boundary
//! consists of the points of `J` with a 4-neighbor in `I`.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Square periodic grid on `[-a, a]^2` with `n` samples per axis.
#[derive(Debug, Clone)]
pub struct Grid {
    a: f64,
    n: usize,
    h: f64,
    wavevectors: Vec<f64>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.a == other.a
    }
}

impl Grid {
    /// Builds the grid. `n` must be even and at least 4, `a` positive.
    pub fn new(a: f64, n: usize) -> Result<Grid> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidGrid(format!("half-width must be positive, got {a}")));
        }
        if n < 4 {
            return Err(Error::InvalidGrid(format!("need at least 4 samples per axis, got {n}")));
        }
        if n % 2 != 0 {
            return Err(Error::InvalidGrid(format!("samples per axis must be even, got {n}")));
        }
        let h = 2.0 * a / n as f64;
        // FFT ordering: m = 0..n/2-1, then m = -n/2..-1.
        let wavevectors = (0..n)
            .map(|idx| {
                let m = if idx < n / 2 { idx as f64 } else { idx as f64 - n as f64 };
                std::f64::consts::PI * m / a
            })
            .collect();
        Ok(Grid { a, n, h, wavevectors })
    }

    pub fn half_width(&self) -> f64 {
        self.a
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Grid spacing `h = 2a/N`.
    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Discrete frequencies `pi*m/a` in FFT order, zero frequency first.
    pub fn wavevectors(&self) -> &[f64] {
        &self.wavevectors
    }

    /// Coordinate of sample `i` along one axis.
    pub fn coord(&self, i: usize) -> f64 {
        -self.a + 2.0 * i as f64 * self.a / self.n as f64
    }

    pub fn point(&self, i1: usize, i2: usize) -> (f64, f64) {
        (self.coord(i1), self.coord(i2))
    }

    /// Flat index, second coordinate fastest.
    pub fn idx(&self, i1: usize, i2: usize) -> usize {
        i1 * self.n + i2
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Default box half-width for observation time `t`: `t + 1.25`, comfortably
/// above the `a >= t + 1` requirement for the periodic wrap to stay inert.
pub fn default_half_width(t: f64) -> f64 {
    t + 1.25
}

/// Imaging region shape. Only discs are supported. The disc must sit inside
/// the box far enough that every realized interior point keeps a 2h margin
/// to the box boundary; `discretize_domain` enforces this.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainShape {
    Disc { center: (f64, f64), radius: f64 },
}

impl DomainShape {
    pub fn unit_disc() -> DomainShape {
        DomainShape::Disc { center: (0.0, 0.0), radius: 1.0 }
    }

    pub fn contains(&self, x: (f64, f64)) -> bool {
        match self {
            DomainShape::Disc { center, radius } => {
                let dx = x.0 - center.0;
                let dy = x.1 - center.1;
                // Strict inequality: grid points on the circle belong to J.
                (dx * dx + dy * dy).sqrt() < *radius
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    /// Member of the interior index set `I`.
    Inside,
    /// Member of the discrete boundary: in `J`, with a 4-neighbor in `I`.
    Boundary,
    /// Exterior point of `J` away from the boundary.
    Exterior,
}

/// Partition of the grid indices into interior `I`, exterior `J` and the
/// discrete boundary (a subset of `J`).
#[derive(Debug, Clone)]
pub struct DiscreteDomain {
    grid: Arc<Grid>,
    shape: DomainShape,
    labels: Vec<CellKind>,
    inside: Vec<usize>,
    boundary: Vec<usize>,
}

impl DiscreteDomain {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn shape(&self) -> DomainShape {
        self.shape
    }

    pub fn kind(&self, idx: usize) -> CellKind {
        self.labels[idx]
    }

    pub fn is_inside(&self, idx: usize) -> bool {
        self.labels[idx] == CellKind::Inside
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        self.labels[idx] == CellKind::Boundary
    }

    /// Flat indices of `I`, ascending.
    pub fn inside(&self) -> &[usize] {
        &self.inside
    }

    /// Flat indices of the discrete boundary, ascending.
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn inside_len(&self) -> usize {
        self.inside.len()
    }

    pub fn exterior_len(&self) -> usize {
        self.grid.len() - self.inside.len()
    }

    /// Zeroes all values outside `I`.
    pub fn mask_inside(&self, values: &mut [f64]) {
        for (v, k) in values.iter_mut().zip(&self.labels) {
            if *k != CellKind::Inside {
                *v = 0.0;
            }
        }
    }

    /// Zeroes all values on `I` (keeps `J`, boundary included).
    pub fn mask_exterior(&self, values: &mut [f64]) {
        for (v, k) in values.iter_mut().zip(&self.labels) {
            if *k == CellKind::Inside {
                *v = 0.0;
            }
        }
    }
}

/// Classifies every grid point against the shape and derives the discrete
/// boundary from the 4-neighbor rule.
pub fn discretize_domain(grid: &Arc<Grid>, shape: &DomainShape) -> Result<DiscreteDomain> {
    let n = grid.n();
    let DomainShape::Disc { center, radius } = *shape;
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidDomain(format!("disc radius must be positive, got {radius}")));
    }

    let mut labels = vec![CellKind::Exterior; n * n];
    let mut inside = Vec::new();
    for i1 in 0..n {
        for i2 in 0..n {
            if shape.contains(grid.point(i1, i2)) {
                // Margin of 2h to the box boundary, so interior points and
                // their discrete boundary always have on-grid neighbors.
                if i1 < 2 || i1 > n - 2 || i2 < 2 || i2 > n - 2 {
                    return Err(Error::InvalidDomain(format!(
                        "disc (center {:?}, radius {radius}) reaches within 2h of the box boundary",
                        center
                    )));
                }
                labels[i1 * n + i2] = CellKind::Inside;
                inside.push(i1 * n + i2);
            }
        }
    }
    if inside.is_empty() {
        return Err(Error::EmptyInterior);
    }

    let mut boundary = Vec::new();
    for i1 in 0..n {
        for i2 in 0..n {
            let idx = i1 * n + i2;
            if labels[idx] == CellKind::Inside {
                continue;
            }
            let has_inside_neighbor = [
                (i1 > 0).then(|| idx - n),
                (i1 + 1 < n).then(|| idx + n),
                (i2 > 0).then(|| idx - 1),
                (i2 + 1 < n).then(|| idx + 1),
            ]
            .into_iter()
            .flatten()
            .any(|j| labels[j] == CellKind::Inside);
            if has_inside_neighbor {
                labels[idx] = CellKind::Boundary;
                boundary.push(idx);
            }
        }
    }

    Ok(DiscreteDomain { grid: grid.clone(), shape: *shape, labels, inside, boundary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arc_grid(a: f64, n: usize) -> Arc<Grid> {
        Arc::new(Grid::new(a, n).unwrap())
    }

    #[test]
    fn grid_coordinates_match_formula() {
        let g = Grid::new(2.0, 4).unwrap();
        assert_eq!(g.point(0, 0), (-2.0, -2.0));
        assert_eq!(g.point(3, 3), (1.0, 1.0));
        assert_eq!(g.spacing(), 1.0);
    }

    #[test]
    fn grid_spacing_exact() {
        let g = Grid::new(3.0, 256).unwrap();
        assert_eq!(g.spacing(), 0.0234375);
        assert_eq!(g.spacing() * g.n() as f64, 2.0 * g.half_width());
    }

    #[test]
    fn wavevector_layout() {
        let g = Grid::new(3.25, 128).unwrap();
        let k = g.wavevectors();
        assert_eq!(k.len(), 128);
        assert_eq!(k[0], 0.0);
        assert!((k[1] - 0.9666).abs() < 1e-4);
        assert!((k[1] - std::f64::consts::PI / 3.25).abs() < 1e-15);
        // Negative half starts at -N/2.
        assert!((k[64] - std::f64::consts::PI * (-64.0) / 3.25).abs() < 1e-12);
        assert_eq!(k.iter().filter(|&&v| v == 0.0).count(), 1);
    }

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(Grid::new(0.0, 16).is_err());
        assert!(Grid::new(-1.0, 16).is_err());
        assert!(Grid::new(2.0, 15).is_err());
        assert!(Grid::new(2.0, 2).is_err());
    }

    #[test]
    fn unit_disc_on_tiny_grid() {
        // 16 points; only the origin lies strictly inside the unit disc.
        let g = arc_grid(2.0, 4);
        let dom = discretize_domain(&g, &DomainShape::unit_disc()).unwrap();
        assert_eq!(dom.inside(), &[g.idx(2, 2)]);
        for &b in dom.boundary() {
            assert!(!dom.is_inside(b));
        }
        assert_eq!(dom.boundary().len(), 4);
    }

    #[test]
    fn zero_radius_disc_fails() {
        let g = arc_grid(2.0, 16);
        let shape = DomainShape::Disc { center: (0.0, 0.0), radius: 0.0 };
        assert!(discretize_domain(&g, &shape).is_err());
    }

    #[test]
    fn tiny_disc_has_empty_interior() {
        let g = arc_grid(2.0, 8);
        // Radius below the spacing and centered between grid points.
        let shape = DomainShape::Disc { center: (0.125, 0.125), radius: 0.05 };
        assert!(matches!(discretize_domain(&g, &shape), Err(Error::EmptyInterior)));
    }

    #[test]
    fn disc_must_fit_with_margin() {
        let g = arc_grid(2.0, 16);
        let shape = DomainShape::Disc { center: (0.9, 0.0), radius: 1.0 };
        assert!(discretize_domain(&g, &shape).is_err());
    }

    fn brute_force_boundary(grid: &Grid, labels: &[CellKind]) -> Vec<usize> {
        let n = grid.n();
        let mut out = Vec::new();
        for i1 in 0..n {
            for i2 in 0..n {
                let idx = i1 * n + i2;
                if labels[idx] == CellKind::Inside {
                    continue;
                }
                let mut hit = false;
                if i1 > 0 && labels[idx - n] == CellKind::Inside {
                    hit = true;
                }
                if i1 + 1 < n && labels[idx + n] == CellKind::Inside {
                    hit = true;
                }
                if i2 > 0 && labels[idx - 1] == CellKind::Inside {
                    hit = true;
                }
                if i2 + 1 < n && labels[idx + 1] == CellKind::Inside {
                    hit = true;
                }
                if hit {
                    out.push(idx);
                }
            }
        }
        out
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn partition_and_boundary(n in prop::sample::select(vec![8usize, 12, 16, 24, 32]),
                                  cx in -0.3f64..0.3, cy in -0.3f64..0.3,
                                  r in 0.4f64..1.0) {
            let g = arc_grid(2.0, n);
            let shape = DomainShape::Disc { center: (cx, cy), radius: r };
            if let Ok(dom) = discretize_domain(&g, &shape) {
                // Partition: |I| + |J| = N^2.
                prop_assert_eq!(dom.inside_len() + dom.exterior_len(), n * n);
                // Boundary matches the brute-force 4-neighbor rule.
                prop_assert_eq!(dom.boundary().to_vec(), brute_force_boundary(&g, &dom.labels));
                // Every boundary point lies in J and touches I.
                for &b in dom.boundary() {
                    prop_assert!(!dom.is_inside(b));
                }
            }
        }

        #[test]
        fn radius_monotonicity(n in prop::sample::select(vec![8usize, 16, 32]),
                               r1 in 0.4f64..0.8, dr in 0.0f64..0.4) {
            let g = arc_grid(2.0, n);
            let d1 = discretize_domain(&g, &DomainShape::Disc { center: (0.0, 0.0), radius: r1 });
            let d2 = discretize_domain(&g, &DomainShape::Disc { center: (0.0, 0.0), radius: r1 + dr });
            if let (Ok(d1), Ok(d2)) = (d1, d2) {
                for idx in d1.inside() {
                    prop_assert!(d2.is_inside(*idx));
                }
            }
        }
    }
}
