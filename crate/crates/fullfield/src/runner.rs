//! Complete, manifest-tracked runs: data simulation, reconstruction,
//! contraction studies and the batch experiments behind the CLI.
//!
//! Every file-producing run writes a plain-text manifest beside its outputs
//! recording all resolved parameters; replaying a manifest reproduces the
//! field files and CSV logs bit for bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::analysis::{compare, ErrorReport};
use crate::elliptic::DirichletSolveOptions;
use crate::error::{Error, Result};
use crate::grid::{default_half_width, discretize_domain, DomainShape, Grid};
use crate::inversion::{perturb_data, reconstruct, ConvergenceLog, ReconConfig};
use crate::io::{read_field, write_field, write_log, write_pgm};
use crate::operators::{estimate_contraction, ContractionReport, PipelineConfig};
use crate::phantoms::{make_phantom, make_speed, simulate_data, PhantomKind, PhantomSpec, SpeedKind, SpeedSpec};
use crate::wave::{same_grid, SolverConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateParams {
    pub phantom: PhantomKind,
    pub speed: SpeedKind,
    pub n: usize,
    pub t: f64,
    /// Box half-width; defaults to `t + 1.25`.
    pub a: Option<f64>,
    pub oversample: usize,
    pub noise: f64,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructParams {
    pub data: PathBuf,
    pub speed: SpeedKind,
    pub n: usize,
    pub t: f64,
    pub a: Option<f64>,
    pub lambda: f64,
    pub iters: usize,
    /// Optional ground-truth field file for error logging and images.
    pub truth: Option<PathBuf>,
    pub out_prefix: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionParams {
    pub lambda: f64,
    pub trials: usize,
    pub speed: SpeedKind,
    pub t: f64,
    pub n: usize,
    pub a: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentName {
    Constant,
    Variable,
    Noisy,
    Trapping,
}

impl ExperimentName {
    pub fn parse(s: &str) -> Result<ExperimentName> {
        match s {
            "constant" => Ok(ExperimentName::Constant),
            "variable" => Ok(ExperimentName::Variable),
            "noisy" => Ok(ExperimentName::Noisy),
            "trapping" => Ok(ExperimentName::Trapping),
            other => Err(Error::InvalidConfig(format!(
                "unknown experiment '{other}', expected constant|variable|noisy|trapping"
            ))),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            ExperimentName::Constant => "constant",
            ExperimentName::Variable => "variable",
            ExperimentName::Noisy => "noisy",
            ExperimentName::Trapping => "trapping",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentParams {
    pub name: ExperimentName,
    pub out_dir: PathBuf,
    pub n: usize,
    pub iters: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunSpec {
    Simulate(SimulateParams),
    Reconstruct(ReconstructParams),
    Experiment(ExperimentParams),
}

/// Resolved parameters plus the artifact paths a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub spec: RunSpec,
    pub artifacts: Vec<PathBuf>,
    pub path: PathBuf,
}

fn push_kv(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "{key} = {value}");
}

impl RunManifest {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        match &self.spec {
            RunSpec::Simulate(p) => {
                push_kv(&mut s, "command", "simulate");
                push_kv(&mut s, "phantom", p.phantom.tag());
                push_kv(&mut s, "speed", p.speed.tag());
                push_kv(&mut s, "n", p.n);
                push_kv(&mut s, "t", p.t);
                push_kv(&mut s, "a", p.a.expect("manifest stores the resolved half-width"));
                push_kv(&mut s, "oversample", p.oversample);
                push_kv(&mut s, "noise", p.noise);
                push_kv(&mut s, "seed", p.seed);
                push_kv(&mut s, "out", p.out.display());
            }
            RunSpec::Reconstruct(p) => {
                push_kv(&mut s, "command", "reconstruct");
                push_kv(&mut s, "data", p.data.display());
                push_kv(&mut s, "speed", p.speed.tag());
                push_kv(&mut s, "n", p.n);
                push_kv(&mut s, "t", p.t);
                push_kv(&mut s, "a", p.a.expect("manifest stores the resolved half-width"));
                push_kv(&mut s, "lambda", p.lambda);
                push_kv(&mut s, "iters", p.iters);
                if let Some(truth) = &p.truth {
                    push_kv(&mut s, "truth", truth.display());
                }
                push_kv(&mut s, "out_prefix", p.out_prefix.display());
            }
            RunSpec::Experiment(p) => {
                push_kv(&mut s, "command", "experiment");
                push_kv(&mut s, "name", p.name.tag());
                push_kv(&mut s, "n", p.n);
                push_kv(&mut s, "iters", p.iters);
                push_kv(&mut s, "seed", p.seed);
                push_kv(&mut s, "out_dir", p.out_dir.display());
            }
        }
        for artifact in &self.artifacts {
            push_kv(&mut s, "artifact", artifact.display());
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)?;
            }
        }
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<RunManifest> {
        let text = fs::read_to_string(path)?;
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        let mut artifacts = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Manifest(format!("line {}: expected 'key = value'", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "artifact" {
                artifacts.push(PathBuf::from(value));
            } else if map.insert(key.to_string(), value.to_string()).is_some() {
                return Err(Error::Manifest(format!("duplicate key '{key}'")));
            }
        }
        let get = |key: &str| -> Result<&String> {
            map.get(key).ok_or_else(|| Error::Manifest(format!("missing key '{key}'")))
        };
        let parse_f64 = |key: &str| -> Result<f64> {
            get(key)?.parse().map_err(|_| Error::Manifest(format!("bad number for '{key}'")))
        };
        let parse_usize = |key: &str| -> Result<usize> {
            get(key)?.parse().map_err(|_| Error::Manifest(format!("bad count for '{key}'")))
        };
        let parse_u64 = |key: &str| -> Result<u64> {
            get(key)?.parse().map_err(|_| Error::Manifest(format!("bad seed for '{key}'")))
        };

        let spec = match get("command")?.as_str() {
            "simulate" => RunSpec::Simulate(SimulateParams {
                phantom: PhantomKind::parse(get("phantom")?)?,
                speed: SpeedKind::parse(get("speed")?)?,
                n: parse_usize("n")?,
                t: parse_f64("t")?,
                a: Some(parse_f64("a")?),
                oversample: parse_usize("oversample")?,
                noise: parse_f64("noise")?,
                seed: parse_u64("seed")?,
                out: PathBuf::from(get("out")?),
            }),
            "reconstruct" => RunSpec::Reconstruct(ReconstructParams {
                data: PathBuf::from(get("data")?),
                speed: SpeedKind::parse(get("speed")?)?,
                n: parse_usize("n")?,
                t: parse_f64("t")?,
                a: Some(parse_f64("a")?),
                lambda: parse_f64("lambda")?,
                iters: parse_usize("iters")?,
                truth: map.get("truth").map(PathBuf::from),
                out_prefix: PathBuf::from(get("out_prefix")?),
            }),
            "experiment" => RunSpec::Experiment(ExperimentParams {
                name: ExperimentName::parse(get("name")?)?,
                out_dir: PathBuf::from(get("out_dir")?),
                n: parse_usize("n")?,
                iters: parse_usize("iters")?,
                seed: parse_u64("seed")?,
            }),
            other => return Err(Error::Manifest(format!("unknown command '{other}'"))),
        };
        Ok(RunManifest { spec, artifacts, path: path.to_path_buf() })
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    Ok(())
}

fn build_pipeline(n: usize, t: f64, a: f64, speed: SpeedKind) -> Result<PipelineConfig> {
    let grid = Arc::new(Grid::new(a, n)?);
    let dom = discretize_domain(&grid, &DomainShape::unit_disc())?;
    let c = make_speed(&SpeedSpec::canonical(speed)?, &grid, &dom)?;
    let solver = SolverConfig::new(t, &grid, c.c_max())?;
    PipelineConfig::new(dom, c, solver, DirichletSolveOptions::default())
}

/// Simulates exterior data (optionally noisy) and writes the field, a PGM
/// preview and the manifest.
pub fn run_simulate(params: &SimulateParams) -> Result<RunManifest> {
    let a = params.a.unwrap_or_else(|| default_half_width(params.t));
    let cfg = build_pipeline(params.n, params.t, a, params.speed)?;
    let spec = PhantomSpec::canonical(params.phantom)?;
    let speed_spec = SpeedSpec::canonical(params.speed)?;
    let mut data = simulate_data(&spec, &speed_spec, &cfg, params.oversample)?;
    if params.noise > 0.0 {
        data = perturb_data(&data, params.noise, params.seed, &cfg.dom)?;
    }

    ensure_parent(&params.out)?;
    write_field(&data, &params.out)?;
    let preview = params.out.with_extension("pgm");
    write_pgm(&data, &preview, None)?;

    let resolved = SimulateParams { a: Some(a), ..params.clone() };
    let manifest_path = params.out.with_extension("manifest");
    let manifest = RunManifest {
        spec: RunSpec::Simulate(resolved),
        artifacts: vec![params.out.clone(), preview],
        path: manifest_path.clone(),
    };
    manifest.write(&manifest_path)?;
    Ok(manifest)
}

#[derive(Debug)]
pub struct ReconstructOutcome {
    pub manifest: RunManifest,
    pub log: ConvergenceLog,
    pub report: Option<ErrorReport>,
}

fn prefixed(prefix: &Path, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{}{suffix}", prefix.display()))
}

/// Reconstructs from a data file and writes the field, the convergence CSV,
/// a PGM of the reconstruction, the pointwise error image when ground truth
/// is supplied, and the manifest.
pub fn run_reconstruct(params: &ReconstructParams) -> Result<ReconstructOutcome> {
    let a = params.a.unwrap_or_else(|| default_half_width(params.t));
    let data = read_field(&params.data)?;
    if data.grid().n() != params.n || (data.grid().half_width() - a).abs() > 1e-12 {
        return Err(Error::GridMismatch(format!(
            "data file is {}x{} on half-width {}, flags want {}x{} on {}",
            data.grid().n(),
            data.grid().n(),
            data.grid().half_width(),
            params.n,
            params.n,
            a
        )));
    }
    let cfg = build_pipeline(params.n, params.t, a, params.speed)?;
    let truth = match &params.truth {
        Some(path) => {
            let field = read_field(path)?;
            same_grid(field.grid(), cfg.grid(), "truth file vs pipeline")?;
            Some(field)
        }
        None => None,
    };

    let rc = ReconConfig { lambda: params.lambda, max_iter: params.iters, tol: 0.0, seed: 0 };
    let recon = reconstruct(&data, &cfg, &rc, truth.as_ref())?;

    let rec_path = prefixed(&params.out_prefix, "_rec.ff");
    ensure_parent(&rec_path)?;
    write_field(&recon.f_rec, &rec_path)?;
    let log_path = prefixed(&params.out_prefix, "_log.csv");
    write_log(&recon.log, &log_path)?;
    let rec_pgm = prefixed(&params.out_prefix, "_rec.pgm");
    write_pgm(&recon.f_rec, &rec_pgm, None)?;
    let mut artifacts = vec![rec_path, log_path, rec_pgm];

    let report = match &truth {
        Some(truth_field) => {
            let report = compare(&recon.f_rec, truth_field, &cfg.dom)?;
            let err_pgm = prefixed(&params.out_prefix, "_err.pgm");
            write_pgm(&report.pointwise, &err_pgm, None)?;
            artifacts.push(err_pgm);
            Some(report)
        }
        None => None,
    };

    let resolved = ReconstructParams { a: Some(a), ..params.clone() };
    let manifest_path = prefixed(&params.out_prefix, ".manifest");
    let manifest =
        RunManifest { spec: RunSpec::Reconstruct(resolved), artifacts, path: manifest_path.clone() };
    manifest.write(&manifest_path)?;
    Ok(ReconstructOutcome { manifest, log: recon.log, report })
}

/// Contraction study; prints nothing and writes nothing, just measures.
pub fn run_contraction(params: &ContractionParams) -> Result<ContractionReport> {
    let a = params.a.unwrap_or_else(|| default_half_width(params.t));
    let cfg = build_pipeline(params.n, params.t, a, params.speed)?;
    estimate_contraction(params.lambda, params.trials, params.seed, &cfg)
}

struct Cell {
    phantom: PhantomKind,
    speed: SpeedKind,
    lambda: f64,
    t: f64,
    noise: f64,
    oversample: usize,
}

fn experiment_cells(name: ExperimentName) -> Vec<Cell> {
    let all = [PhantomKind::ASmooth, PhantomKind::BPiecewise, PhantomKind::CPiecewise];
    match name {
        ExperimentName::Constant => all
            .iter()
            .map(|&phantom| Cell {
                phantom,
                speed: SpeedKind::I,
                lambda: 2.0,
                t: 2.0,
                noise: 0.0,
                oversample: 1,
            })
            .collect(),
        ExperimentName::Variable => [SpeedKind::II, SpeedKind::III, SpeedKind::IV]
            .iter()
            .map(|&speed| Cell {
                phantom: PhantomKind::ASmooth,
                speed,
                lambda: 0.5,
                t: 2.0,
                noise: 0.0,
                oversample: 1,
            })
            .collect(),
        ExperimentName::Noisy => [0.0, 0.02]
            .iter()
            .map(|&noise| Cell {
                phantom: PhantomKind::ASmooth,
                speed: SpeedKind::III,
                lambda: 0.5,
                t: 4.0,
                noise,
                oversample: 3,
            })
            .collect(),
        ExperimentName::Trapping => all
            .iter()
            .map(|&phantom| Cell {
                phantom,
                speed: SpeedKind::IV,
                lambda: 0.5,
                t: 2.0,
                noise: 0.02,
                oversample: 3,
            })
            .collect(),
    }
}

/// Reproduces one of the batch experiments at the configured scale,
/// emitting reconstructions, error maps, convergence CSVs and a summary
/// table of final relative errors.
pub fn run_experiment(params: &ExperimentParams) -> Result<RunManifest> {
    fs::create_dir_all(&params.out_dir)?;
    let mut artifacts = Vec::new();
    let mut summary = String::from("cell,phantom,speed,lambda,t,noise,final_l2_rel,final_h10_rel\n");

    for cell in experiment_cells(params.name) {
        let tag = format!(
            "{}_{}_c{}{}",
            params.name.tag(),
            cell.phantom.tag(),
            cell.speed.tag(),
            if cell.noise > 0.0 { "_noisy" } else { "" }
        );
        let a = default_half_width(cell.t);
        let cfg = build_pipeline(params.n, cell.t, a, cell.speed)?;
        let spec = PhantomSpec::canonical(cell.phantom)?;
        let speed_spec = SpeedSpec::canonical(cell.speed)?;
        let truth = make_phantom(&spec, cfg.grid(), &cfg.dom)?;

        let mut data = simulate_data(&spec, &speed_spec, &cfg, cell.oversample)?;
        if cell.noise > 0.0 {
            data = perturb_data(&data, cell.noise, params.seed, &cfg.dom)?;
        }
        let rc =
            ReconConfig { lambda: cell.lambda, max_iter: params.iters, tol: 0.0, seed: params.seed };
        let recon = reconstruct(&data, &cfg, &rc, Some(&truth))?;
        let report = compare(&recon.f_rec, &truth, &cfg.dom)?;

        let rec_ff = params.out_dir.join(format!("{tag}_rec.ff"));
        write_field(&recon.f_rec, &rec_ff)?;
        let rec_pgm = params.out_dir.join(format!("{tag}_rec.pgm"));
        write_pgm(&recon.f_rec, &rec_pgm, Some((0.0, 1.0)))?;
        let err_pgm = params.out_dir.join(format!("{tag}_err.pgm"));
        write_pgm(&report.pointwise, &err_pgm, None)?;
        let log_csv = params.out_dir.join(format!("{tag}_log.csv"));
        write_log(&recon.log, &log_csv)?;
        artifacts.extend([rec_ff, rec_pgm, err_pgm, log_csv]);

        let _ = writeln!(
            summary,
            "{tag},{},{},{},{},{},{:.6e},{:.6e}",
            cell.phantom.tag(),
            cell.speed.tag(),
            cell.lambda,
            cell.t,
            cell.noise,
            report.l2_rel,
            report.h10_rel
        );
    }

    let summary_path = params.out_dir.join("summary.csv");
    fs::write(&summary_path, summary)?;
    artifacts.push(summary_path);

    let manifest_path = params.out_dir.join("manifest");
    let manifest = RunManifest {
        spec: RunSpec::Experiment(params.clone()),
        artifacts,
        path: manifest_path.clone(),
    };
    manifest.write(&manifest_path)?;
    Ok(manifest)
}

fn re_root(path: &Path, root: &Path) -> PathBuf {
    match path.file_name() {
        Some(name) => root.join(name),
        None => root.to_path_buf(),
    }
}

/// Re-runs the command recorded in a manifest. With `out_root` set, output
/// locations move under that directory (inputs stay where the manifest says);
/// the produced field files and CSVs are bit-identical across replays.
pub fn replay(manifest_path: &Path, out_root: Option<&Path>) -> Result<RunManifest> {
    let manifest = RunManifest::read(manifest_path)?;
    match manifest.spec {
        RunSpec::Simulate(mut p) => {
            if let Some(root) = out_root {
                p.out = re_root(&p.out, root);
            }
            run_simulate(&p)
        }
        RunSpec::Reconstruct(mut p) => {
            if let Some(root) = out_root {
                p.out_prefix = re_root(&p.out_prefix, root);
            }
            Ok(run_reconstruct(&p)?.manifest)
        }
        RunSpec::Experiment(mut p) => {
            if let Some(root) = out_root {
                p.out_dir = re_root(&p.out_dir, root);
            }
            run_experiment(&p)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp_dir(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join("fullfield-runner-tests").join(name);
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    fn small_simulate(dir: &Path) -> SimulateParams {
        SimulateParams {
            phantom: PhantomKind::ASmooth,
            speed: SpeedKind::I,
            n: 32,
            t: 2.0,
            a: None,
            oversample: 1,
            noise: 0.0,
            seed: 7,
            out: dir.join("d.ff"),
        }
    }

    #[test]
    fn manifest_roundtrip() {
        let dir = tmp_dir("manifest-roundtrip");
        let manifest = RunManifest {
            spec: RunSpec::Reconstruct(ReconstructParams {
                data: PathBuf::from("d.ff"),
                speed: SpeedKind::III,
                n: 128,
                t: 4.0,
                a: Some(5.25),
                lambda: 0.5,
                iters: 80,
                truth: Some(PathBuf::from("truth.ff")),
                out_prefix: PathBuf::from("out/run1"),
            }),
            artifacts: vec![PathBuf::from("out/run1_rec.ff"), PathBuf::from("out/run1_log.csv")],
            path: dir.join("m"),
        };
        manifest.write(&manifest.path).unwrap();
        let back = RunManifest::read(&manifest.path).unwrap();
        assert_eq!(back, manifest);
    }

    #[test]
    fn simulate_writes_data_preview_and_manifest() {
        let dir = tmp_dir("simulate-outputs");
        let params = small_simulate(&dir);
        let manifest = run_simulate(&params).unwrap();
        assert!(params.out.exists());
        assert!(dir.join("d.pgm").exists());
        assert!(dir.join("d.manifest").exists());
        match &manifest.spec {
            RunSpec::Simulate(p) => assert_eq!(p.a, Some(3.25)),
            other => panic!("wrong spec {other:?}"),
        }
    }

    #[test]
    fn defaulted_half_width_lands_in_the_manifest() {
        let dir = tmp_dir("default-a");
        let params = SimulateParams { t: 2.0, ..small_simulate(&dir) };
        run_simulate(&params).unwrap();
        let text = fs::read_to_string(dir.join("d.manifest")).unwrap();
        assert!(text.contains("a = 3.25"), "{text}");
    }

    #[test]
    fn replay_reproduces_bit_identical_outputs() {
        let dir = tmp_dir("replay");
        let params = SimulateParams { noise: 0.02, ..small_simulate(&dir) };
        run_simulate(&params).unwrap();
        let replay_a = tmp_dir("replay-a");
        let replay_b = tmp_dir("replay-b");
        replay(&dir.join("d.manifest"), Some(&replay_a)).unwrap();
        replay(&dir.join("d.manifest"), Some(&replay_b)).unwrap();
        let a = fs::read(replay_a.join("d.ff")).unwrap();
        let b = fs::read(replay_b.join("d.ff")).unwrap();
        let orig = fs::read(dir.join("d.ff")).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, orig);
    }

    #[test]
    fn reconstruct_flags_must_match_the_data_grid() {
        let dir = tmp_dir("grid-mismatch");
        run_simulate(&small_simulate(&dir)).unwrap();
        let params = ReconstructParams {
            data: dir.join("d.ff"),
            speed: SpeedKind::I,
            n: 64,
            t: 2.0,
            a: None,
            lambda: 0.5,
            iters: 2,
            truth: None,
            out_prefix: dir.join("r"),
        };
        assert!(matches!(run_reconstruct(&params), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn reconstruct_writes_everything() {
        let dir = tmp_dir("reconstruct-outputs");
        run_simulate(&small_simulate(&dir)).unwrap();
        let params = ReconstructParams {
            data: dir.join("d.ff"),
            speed: SpeedKind::I,
            n: 32,
            t: 2.0,
            a: None,
            lambda: 0.5,
            iters: 3,
            truth: None,
            out_prefix: dir.join("r"),
        };
        let outcome = run_reconstruct(&params).unwrap();
        assert_eq!(outcome.log.records.len(), 3);
        assert!(outcome.report.is_none());
        assert!(dir.join("r_rec.ff").exists());
        assert!(dir.join("r_log.csv").exists());
        assert!(dir.join("r_rec.pgm").exists());
        assert!(!dir.join("r_err.pgm").exists());
        assert!(dir.join("r.manifest").exists());
    }

    #[test]
    fn contraction_study_runs() {
        let params = ContractionParams {
            lambda: 0.5,
            trials: 2,
            speed: SpeedKind::I,
            t: 2.0,
            n: 32,
            a: None,
            seed: 3,
        };
        let report = run_contraction(&params).unwrap();
        assert_eq!(report.ratios.len(), 2);
    }
}
