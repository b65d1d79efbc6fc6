//! Initial-pressure phantoms, sound-speed profiles and oversampled data
//! simulation.
//!
//! Parameters live in `registry.txt` (embedded at compile time) so every
//! experiment is reproducible from a versioned file. Geometry is expressed
//! in disc-normalized coordinates and mapped onto whatever imaging disc the
//! pipeline uses.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::grid::{discretize_domain, DiscreteDomain, DomainShape, Grid};
use crate::operators::{forward_exterior, PipelineConfig};
use crate::wave::{ScalarField, SolverConfig, SoundSpeed};

const REGISTRY: &str = include_str!("../registry.txt");

/// Phantom support must stay this far inside the disc (normalized units).
const SUPPORT_MARGIN: f64 = 0.05;

fn phi(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// C-infinity taper: 1 for `r <= r0`, exactly 0 for `r >= r1`, smooth and
/// monotone in between. Useful for building custom compactly supported
/// fields.
pub fn smooth_cutoff(r: f64, r0: f64, r1: f64) -> f64 {
    if r <= r0 {
        1.0
    } else if r >= r1 {
        0.0
    } else {
        let t = (r - r0) / (r1 - r0);
        phi(1.0 - t) / (phi(1.0 - t) + phi(t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub center: (f64, f64),
    pub sigma: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disc {
    pub center: (f64, f64),
    pub radius: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Annulus {
    pub center: (f64, f64),
    pub r_inner: f64,
    pub r_outer: f64,
    pub amplitude: f64,
}

/// Radial taper radii in normalized units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Taper {
    pub inner: f64,
    pub outer: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhantomKind {
    ASmooth,
    BPiecewise,
    CPiecewise,
}

impl PhantomKind {
    pub fn parse(s: &str) -> Result<PhantomKind> {
        match s {
            "a" | "a_smooth" => Ok(PhantomKind::ASmooth),
            "b" | "b_piecewise" => Ok(PhantomKind::BPiecewise),
            "c" | "c_piecewise" => Ok(PhantomKind::CPiecewise),
            other => Err(Error::InvalidSpec(format!("unknown phantom '{other}', expected a|b|c"))),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            PhantomKind::ASmooth => "a",
            PhantomKind::BPiecewise => "b",
            PhantomKind::CPiecewise => "c",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    pub kind: PhantomKind,
    pub bumps: Vec<Bump>,
    pub discs: Vec<Disc>,
    pub annuli: Vec<Annulus>,
    pub taper: Taper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpeedKind {
    I,
    II,
    III,
    IV,
}

impl SpeedKind {
    pub fn parse(s: &str) -> Result<SpeedKind> {
        match s {
            "I" | "i" | "cI" | "1" => Ok(SpeedKind::I),
            "II" | "ii" | "cII" | "2" => Ok(SpeedKind::II),
            "III" | "iii" | "cIII" | "3" => Ok(SpeedKind::III),
            "IV" | "iv" | "cIV" | "4" => Ok(SpeedKind::IV),
            other => Err(Error::InvalidSpec(format!("unknown speed '{other}', expected I|II|III|IV"))),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            SpeedKind::I => "I",
            SpeedKind::II => "II",
            SpeedKind::III => "III",
            SpeedKind::IV => "IV",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedSpec {
    pub kind: SpeedKind,
    pub bumps: Vec<Bump>,
    /// Trapping well `(depth, width)` for profile IV.
    pub well: Option<(f64, f64)>,
    pub taper: Taper,
}

type Registry = BTreeMap<String, Vec<Vec<f64>>>;

fn parse_registry(text: &str) -> std::result::Result<Registry, String> {
    let mut map: Registry = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, rest) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected 'key = values'", lineno + 1))?;
        let values = rest
            .split_whitespace()
            .map(|tok| tok.parse::<f64>().map_err(|_| format!("line {}: bad number '{tok}'", lineno + 1)))
            .collect::<std::result::Result<Vec<f64>, String>>()?;
        map.entry(key.trim().to_string()).or_default().push(values);
    }
    Ok(map)
}

fn registry() -> Result<&'static Registry> {
    static CACHE: OnceLock<std::result::Result<Registry, String>> = OnceLock::new();
    match CACHE.get_or_init(|| parse_registry(REGISTRY)) {
        Ok(map) => Ok(map),
        Err(e) => Err(Error::Registry(e.clone())),
    }
}

fn row<'a>(values: &'a [f64], want: usize, key: &str) -> Result<&'a [f64]> {
    if values.len() != want {
        return Err(Error::Registry(format!("{key}: expected {want} numbers, got {}", values.len())));
    }
    Ok(values)
}

fn registry_taper(map: &Registry) -> Result<Taper> {
    let inner = map
        .get("cutoff.inner")
        .and_then(|rows| rows.first())
        .and_then(|r| r.first())
        .copied()
        .ok_or_else(|| Error::Registry("missing cutoff.inner".into()))?;
    let outer = map
        .get("cutoff.outer")
        .and_then(|rows| rows.first())
        .and_then(|r| r.first())
        .copied()
        .ok_or_else(|| Error::Registry("missing cutoff.outer".into()))?;
    Ok(Taper { inner, outer })
}

impl PhantomSpec {
    /// The canonical parameters from the registry file.
    pub fn canonical(kind: PhantomKind) -> Result<PhantomSpec> {
        let map = registry()?;
        let taper = registry_taper(map)?;
        let mut spec =
            PhantomSpec { kind, bumps: Vec::new(), discs: Vec::new(), annuli: Vec::new(), taper };
        match kind {
            PhantomKind::ASmooth => {
                for r in map.get("phantom.a.bump").map(Vec::as_slice).unwrap_or(&[]) {
                    let v = row(r, 4, "phantom.a.bump")?;
                    spec.bumps.push(Bump { center: (v[0], v[1]), sigma: v[2], amplitude: v[3] });
                }
            }
            PhantomKind::BPiecewise => {
                for r in map.get("phantom.b.disc").map(Vec::as_slice).unwrap_or(&[]) {
                    let v = row(r, 4, "phantom.b.disc")?;
                    spec.discs.push(Disc { center: (v[0], v[1]), radius: v[2], amplitude: v[3] });
                }
            }
            PhantomKind::CPiecewise => {
                for r in map.get("phantom.c.annulus").map(Vec::as_slice).unwrap_or(&[]) {
                    let v = row(r, 5, "phantom.c.annulus")?;
                    spec.annuli.push(Annulus {
                        center: (v[0], v[1]),
                        r_inner: v[2],
                        r_outer: v[3],
                        amplitude: v[4],
                    });
                }
                for r in map.get("phantom.c.disc").map(Vec::as_slice).unwrap_or(&[]) {
                    let v = row(r, 4, "phantom.c.disc")?;
                    spec.discs.push(Disc { center: (v[0], v[1]), radius: v[2], amplitude: v[3] });
                }
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Support (in normalized coordinates) must end at least `SUPPORT_MARGIN`
    /// inside the disc.
    pub fn validate(&self) -> Result<()> {
        let limit = 1.0 - SUPPORT_MARGIN;
        let norm = |c: (f64, f64)| (c.0 * c.0 + c.1 * c.1).sqrt();
        if !self.bumps.is_empty() && self.taper.outer > limit {
            return Err(Error::InvalidSpec(format!(
                "taper reaches {} but support must end by {limit}",
                self.taper.outer
            )));
        }
        for d in &self.discs {
            if norm(d.center) + d.radius > limit {
                return Err(Error::InvalidSpec(format!("disc at {:?} breaks the support margin", d.center)));
            }
        }
        for a in &self.annuli {
            if norm(a.center) + a.r_outer > limit {
                return Err(Error::InvalidSpec(format!("annulus at {:?} breaks the support margin", a.center)));
            }
            if a.r_inner >= a.r_outer {
                return Err(Error::InvalidSpec("annulus radii out of order".into()));
            }
        }
        Ok(())
    }

    /// Pointwise value in normalized coordinates.
    fn eval(&self, xi1: f64, xi2: f64) -> f64 {
        let r = (xi1 * xi1 + xi2 * xi2).sqrt();
        let mut v = 0.0;
        if !self.bumps.is_empty() {
            let taper = smooth_cutoff(r, self.taper.inner, self.taper.outer);
            if taper > 0.0 {
                for b in &self.bumps {
                    let dx = xi1 - b.center.0;
                    let dy = xi2 - b.center.1;
                    v += b.amplitude * (-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma)).exp();
                }
                v *= taper;
            }
        }
        for d in &self.discs {
            let dx = xi1 - d.center.0;
            let dy = xi2 - d.center.1;
            if (dx * dx + dy * dy).sqrt() <= d.radius {
                v += d.amplitude;
            }
        }
        for a in &self.annuli {
            let dx = xi1 - a.center.0;
            let dy = xi2 - a.center.1;
            let rr = (dx * dx + dy * dy).sqrt();
            if rr >= a.r_inner && rr <= a.r_outer {
                v += a.amplitude;
            }
        }
        v
    }
}

impl SpeedSpec {
    pub fn canonical(kind: SpeedKind) -> Result<SpeedSpec> {
        let map = registry()?;
        let taper = registry_taper(map)?;
        let mut spec = SpeedSpec { kind, bumps: Vec::new(), well: None, taper };
        let bump_key = match kind {
            SpeedKind::I => None,
            SpeedKind::II => Some("speed.II.bump"),
            SpeedKind::III => Some("speed.III.bump"),
            SpeedKind::IV => None,
        };
        if let Some(key) = bump_key {
            for r in map.get(key).map(Vec::as_slice).unwrap_or(&[]) {
                let v = row(r, 4, key)?;
                spec.bumps.push(Bump { center: (v[0], v[1]), sigma: v[2], amplitude: v[3] });
            }
        }
        if kind == SpeedKind::IV {
            let r = map
                .get("speed.IV.well")
                .and_then(|rows| rows.first())
                .ok_or_else(|| Error::Registry("missing speed.IV.well".into()))?;
            let v = row(r, 2, "speed.IV.well")?;
            spec.well = Some((v[0], v[1]));
        }
        Ok(spec)
    }

    fn eval(&self, xi1: f64, xi2: f64) -> f64 {
        let r = (xi1 * xi1 + xi2 * xi2).sqrt();
        let taper = smooth_cutoff(r, self.taper.inner, self.taper.outer);
        if taper == 0.0 {
            return 1.0;
        }
        let mut dv = 0.0;
        for b in &self.bumps {
            let dx = xi1 - b.center.0;
            let dy = xi2 - b.center.1;
            dv += b.amplitude * (-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma)).exp();
        }
        if let Some((depth, width)) = self.well {
            dv -= depth * (-(r * r) / (width * width)).exp();
        }
        1.0 + dv * taper
    }
}

fn normalized(grid: &Grid, shape: &DomainShape, i1: usize, i2: usize) -> (f64, f64) {
    let DomainShape::Disc { center, radius } = *shape;
    let (x1, x2) = grid.point(i1, i2);
    ((x1 - center.0) / radius, (x2 - center.1) / radius)
}

/// Samples the phantom on the grid, zero outside the interior index set.
/// Values land in `[0, 1]`.
pub fn make_phantom(spec: &PhantomSpec, grid: &Arc<Grid>, dom: &DiscreteDomain) -> Result<ScalarField> {
    spec.validate()?;
    let shape = dom.shape();
    let n = grid.n();
    let mut f = ScalarField::zeros(grid);
    for i1 in 0..n {
        for i2 in 0..n {
            let idx = grid.idx(i1, i2);
            if dom.is_inside(idx) {
                let (xi1, xi2) = normalized(grid, &shape, i1, i2);
                f.values_mut()[idx] = spec.eval(xi1, xi2);
            }
        }
    }
    let max = f.values().iter().fold(0.0f64, |m, &v| m.max(v));
    let min = f.values().iter().fold(0.0f64, |m, &v| m.min(v));
    if min < 0.0 || max > 1.0 + 1e-12 {
        return Err(Error::InvalidSpec(format!("phantom values [{min}, {max}] leave [0, 1]")));
    }
    Ok(f)
}

/// Samples the sound-speed profile on the grid. Exactly 1 on the exterior,
/// positive everywhere, mild (|c-1| <= 0.3) for the non-trapping profiles.
pub fn make_speed(spec: &SpeedSpec, grid: &Arc<Grid>, dom: &DiscreteDomain) -> Result<SoundSpeed> {
    if spec.kind == SpeedKind::I {
        return Ok(SoundSpeed::uniform(grid));
    }
    let shape = dom.shape();
    let n = grid.n();
    let field = ScalarField::from_values(
        grid,
        (0..n * n)
            .map(|idx| {
                if dom.is_inside(idx) {
                    let (xi1, xi2) = normalized(grid, &shape, idx / n, idx % n);
                    spec.eval(xi1, xi2)
                } else {
                    1.0
                }
            })
            .collect(),
    )?;
    let min = field.values().iter().copied().fold(f64::INFINITY, f64::min);
    if min < 0.5 {
        return Err(Error::InvalidSpec(format!("sound speed dips to {min}, below 0.5")));
    }
    if matches!(spec.kind, SpeedKind::II | SpeedKind::III) {
        let dev = field.values().iter().fold(0.0f64, |m, &v| m.max((v - 1.0).abs()));
        if dev > 0.3 + 1e-12 {
            return Err(Error::InvalidSpec(format!(
                "non-trapping profile varies by {dev}, beyond the 0.3 bound"
            )));
        }
    }
    SoundSpeed::new(field, dom)
}

/// Simulates exterior data on a finer grid and restricts it to the pipeline
/// grid at coincident points, sidestepping the inverse crime. `oversample`
/// must be odd; 1 reproduces `forward_exterior` on the pipeline grid.
pub fn simulate_data(
    spec: &PhantomSpec,
    speed: &SpeedSpec,
    cfg: &PipelineConfig,
    oversample: usize,
) -> Result<ScalarField> {
    if oversample == 0 || oversample % 2 == 0 {
        return Err(Error::InvalidConfig(format!(
            "oversample factor must be odd and positive, got {oversample}"
        )));
    }
    let grid = cfg.grid();
    if oversample == 1 {
        let f = make_phantom(spec, grid, &cfg.dom)?;
        return forward_exterior(&f, cfg);
    }

    let n = grid.n();
    let fine_n = n * oversample;
    let fine_grid = Arc::new(Grid::new(grid.half_width(), fine_n)?);
    let shape = cfg.dom.shape();
    let fine_dom = discretize_domain(&fine_grid, &shape)?;
    let fine_speed = make_speed(speed, &fine_grid, &fine_dom)?;
    let mut fine_solver =
        SolverConfig::with_cfl(cfg.solver.t, &fine_grid, fine_speed.c_max(), cfg.solver.cfl)?;
    fine_solver.kspace_correction = cfg.solver.kspace_correction;
    fine_solver.exec = cfg.solver.exec;
    let fine_cfg = PipelineConfig::new(fine_dom, fine_speed, fine_solver, cfg.elliptic)?;

    let fine_f = make_phantom(spec, &fine_grid, &fine_cfg.dom)?;
    let fine_g = forward_exterior(&fine_f, &fine_cfg)?;

    let mut g = ScalarField::zeros(grid);
    for i1 in 0..n {
        for i2 in 0..n {
            g.values_mut()[i1 * n + i2] = fine_g.values()[(oversample * i1) * fine_n + oversample * i2];
        }
    }
    cfg.dom.mask_exterior(g.values_mut());
    Ok(g)
}
