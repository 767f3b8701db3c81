//! Named, config-driven reproductions of the figure-level experiments.
//!
//! A scenario evolves a site-localized excitation, classifies the
//! spreading, samples dispersions with their inflection points or Hessian
//! zero contours, and optionally compares against the stationary-phase
//! waveform. Results land in a bundle directory:
//!
//! ```text
//! <out>/<name>/manifest.json
//! <out>/<name>/timing.json
//! <out>/<name>/snapshots/snapshot_000.csv (+ .json sidecar)
//! <out>/<name>/dispersion/<entry>.csv
//! <out>/<name>/contours.json
//! <out>/<name>/classification.json
//! <out>/<name>/spa/spa_000.csv
//! ```

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::analysis::{classify_snapshots, ClassificationReport, ClassifierParams, Label};
use crate::dispersion::{
    find_inflection_points, find_inflection_points_sampled, lattice_sum_grid_1d, lattice_sum_grid_2d,
    marching_squares, ClosedForm1d, ContourGrid, ContourSet, Cutoff2d, DispersionGrid, KAxis,
    RegularizedDispersion, StationarySet,
};
use crate::dispersion::derivatives::{curvature_minima, CurvatureMinimum};
use crate::dynamics::{evolve_with, Propagator, Section, SnapshotMeta, WaveformSnapshot};
use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;
use crate::io::{config_hash, file_sha256, write_json, write_with};
use crate::lattice::LatticeGeometry;
use crate::model::{CouplingModel, Polarization};
use crate::spa::{predicted_peaks_with_minima, spa_waveform, Normalization, PredictedPeak, SpaOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Krylov,
    Diagonalize,
}

impl Method {
    pub fn propagator(self) -> Propagator {
        match self {
            Method::Krylov => Propagator::default(),
            Method::Diagonalize => Propagator::Diagonalize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    pub sections: Vec<Section>,
    #[serde(default)]
    pub params: ClassifierParams,
    /// Qualitative outcome the run is expected to reproduce.
    #[serde(default)]
    pub expected: Option<Label>,
}

/// One dispersion product of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DispersionSpec {
    /// Exact 1D dispersion of the scenario model.
    ClosedForm { name: String, n: usize },
    /// Truncated 1D real-space sum with `cutoff` neighbors per side.
    LatticeSum1d { name: String, n: usize, cutoff: usize },
    /// Truncated 2D real-space sum with Hessian zero contours.
    LatticeSum2d {
        name: String,
        n: usize,
        radius: f64,
        window: Cutoff2d,
    },
    /// Gaussian-regularized reciprocal sum (free space, 2D).
    Regularized {
        name: String,
        n: usize,
        #[serde(default = "default_a_ho")]
        a_ho: f64,
        /// Overrides the model's `k_a`.
        #[serde(default)]
        k_a: Option<f64>,
        #[serde(default)]
        shells: Option<usize>,
        #[serde(default = "default_mask_steps")]
        mask_steps: f64,
    },
}

fn default_a_ho() -> f64 {
    crate::dispersion::regularized::DEFAULT_A_HO
}

fn default_mask_steps() -> f64 {
    0.5
}

impl DispersionSpec {
    pub fn name(&self) -> &str {
        match self {
            DispersionSpec::ClosedForm { name, .. }
            | DispersionSpec::LatticeSum1d { name, .. }
            | DispersionSpec::LatticeSum2d { name, .. }
            | DispersionSpec::Regularized { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaSpec {
    /// Rescale each SPA waveform to the exact survival probability.
    #[serde(default = "yes")]
    pub normalize_to_survival: bool,
    /// Keep only stationary points with `|k| > k_A`.
    #[serde(default)]
    pub subradiant_only: bool,
    #[serde(default = "default_spa_grid")]
    pub grid: usize,
}

fn yes() -> bool {
    true
}

fn default_spa_grid() -> usize {
    4096
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Bundle root; the CLI `--out` flag takes precedence.
    #[serde(default)]
    pub directory: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub model: CouplingModel,
    pub geometry: LatticeGeometry,
    #[serde(default)]
    pub times: Vec<f64>,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub analysis: Option<AnalysisSpec>,
    #[serde(default)]
    pub dispersion: Vec<DispersionSpec>,
    #[serde(default)]
    pub spa: Option<SpaSpec>,
    /// Free-form caveats echoed into the manifest.
    #[serde(default)]
    pub notes: Vec<String>,
    #[serde(default)]
    pub outputs: OutputSpec,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::Config(format!("invalid scenario name `{}`", self.name)));
        }
        self.model.validate()?;
        if matches!(self.model, CouplingModel::Waveguide { .. }) && self.geometry.dimension() != 1 {
            return Err(Error::Config("waveguide model requires a 1D geometry".into()));
        }
        if self.times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("times must be finite, non-negative and strictly increasing".into()));
        }
        if self.analysis.is_some() && self.times.len() < 3 {
            return Err(Error::Config("classification needs at least 3 snapshot times".into()));
        }
        if self.spa.is_some() && (self.geometry.dimension() != 1 || self.times.is_empty()) {
            return Err(Error::Config("SPA comparison needs a 1D geometry and snapshot times".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for d in &self.dispersion {
            if !seen.insert(d.name()) {
                return Err(Error::Config(format!("duplicate dispersion name `{}`", d.name())));
            }
            let two_d = matches!(d, DispersionSpec::LatticeSum2d { .. } | DispersionSpec::Regularized { .. });
            if two_d != (self.geometry.dimension() == 2) {
                return Err(Error::Config(format!(
                    "dispersion `{}` does not match the {}D geometry",
                    d.name(),
                    self.geometry.dimension()
                )));
            }
            if let DispersionSpec::Regularized { .. } = d {
                if !matches!(self.model, CouplingModel::FreeSpace { .. }) {
                    return Err(Error::Config("regularized dispersion requires the free-space model".into()));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Relative paths the bundle will contain.
    pub fn planned_outputs(&self) -> Vec<String> {
        let mut out = vec!["manifest.json".to_string(), "timing.json".to_string()];
        for i in 0..self.times.len() {
            out.push(format!("snapshots/snapshot_{i:03}.csv"));
            out.push(format!("snapshots/snapshot_{i:03}.json"));
        }
        for d in &self.dispersion {
            out.push(format!("dispersion/{}.csv", d.name()));
        }
        if self.dispersion.iter().any(|d| matches!(d, DispersionSpec::LatticeSum2d { .. } | DispersionSpec::Regularized { .. })) {
            out.push("contours.json".into());
        }
        if self.analysis.is_some() {
            out.push("classification.json".into());
        }
        if self.spa.is_some() {
            for i in 0..self.times.len() {
                out.push(format!("spa/spa_{i:03}.csv"));
            }
        }
        out
    }
}

/// Summary of one sampled dispersion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionSummary {
    pub name: String,
    pub dimension: usize,
    pub masked: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inflection_points: Option<StationarySet>,
    /// Nonzero minima of `|d2|` (1D).
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub curvature_minima: Vec<CurvatureMinimum>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contours: Option<ContourSummary>,
    pub units: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSummary {
    pub lines: usize,
    pub closed_loops: usize,
    /// Light-cone radius, for free-space models.
    pub ring: Option<f64>,
    /// Smallest distance from any contour vertex to the ring.
    pub min_ring_distance: Option<f64>,
    /// Smallest ring distance among closed loops lying entirely in `|k| > k_A`.
    pub min_inside_loop_distance: Option<f64>,
}

/// A sampled dispersion with its derived products.
#[derive(Debug, Clone)]
pub struct DispersionProduct {
    pub summary: DispersionSummary,
    pub grid: DispersionGrid,
    pub contours: Option<ContourSet>,
}

fn model_k_a(model: &CouplingModel) -> Option<f64> {
    match *model {
        CouplingModel::Waveguide { k_a } | CouplingModel::FreeSpace { k_a, .. } => Some(k_a),
        CouplingModel::PowerLaw { .. } => None,
    }
}

fn contour_product(grid: &mut DispersionGrid, ring: Option<f64>) -> Result<(ContourSet, ContourSummary)> {
    let h = grid.compute_hessian()?.clone();
    let [ax, ay] = grid.axes;
    let cg = ContourGrid {
        n: [ax.n, ay.n],
        origin: [ax.start, ay.start],
        step: [ax.step(), ay.step()],
        periodic: true,
    };
    let set = marching_squares(&h.det, cg, 0.0)?;
    let period = Some([ax.period, ay.period]);
    let (mut min_ring, mut min_inside) = (None::<f64>, None::<f64>);
    if let Some(r) = ring {
        for l in &set.lines {
            let d = l.min_distance_to_circle([0.0, 0.0], r, period);
            min_ring = Some(min_ring.map_or(d, |m| m.min(d)));
            if l.is_loop() && l.radii([0.0, 0.0], period).iter().all(|x| *x > r) {
                min_inside = Some(min_inside.map_or(d, |m| m.min(d)));
            }
        }
    }
    let summary = ContourSummary {
        lines: set.lines.len(),
        closed_loops: set.closed_loops().count(),
        ring,
        min_ring_distance: min_ring,
        min_inside_loop_distance: min_inside,
    };
    Ok((set, summary))
}

/// Samples one dispersion entry of a scenario.
pub fn compute_dispersion(config: &ScenarioConfig, spec: &DispersionSpec) -> Result<DispersionProduct> {
    let model = &config.model;
    let spacings = config.geometry.spacings();
    let grid;
    let (mut inflections, mut minima, mut contours) = (None, Vec::new(), None);
    let mut ring = model_k_a(model);
    match spec {
        DispersionSpec::ClosedForm { n, .. } => {
            let cf = ClosedForm1d::new(*model)?;
            let axis = KAxis::brillouin(*n);
            grid = DispersionGrid::sample_1d(&cf, axis, true)?;
            inflections = Some(find_inflection_points(&cf, &axis)?);
            minima = curvature_minima(&cf, &axis)?;
        }
        DispersionSpec::LatticeSum1d { n, cutoff, .. } => {
            let axis = KAxis::reciprocal(*n, spacings[0], false);
            let omega = lattice_sum_grid_1d(model, &axis, *cutoff)?;
            let mut g = DispersionGrid::from_samples_1d(axis, omega, model.units())?;
            if let Some(k_a) = ring {
                g.mark_subradiant(k_a);
            }
            g.compute_derivatives()?;
            let ks = axis.nodes();
            if axis.n >= 64 {
                inflections = Some(find_inflection_points_sampled(
                    &ks,
                    g.d1.as_ref().expect("computed"),
                    g.d2.as_ref().expect("computed"),
                )?);
            }
            grid = g;
        }
        DispersionSpec::LatticeSum2d { n, radius, window, .. } => {
            let ax = KAxis::reciprocal(*n, spacings[0], false);
            let ay = KAxis::reciprocal(*n, spacings[1], false);
            let omega = lattice_sum_grid_2d(model, &ax, &ay, spacings, *radius, *window)?;
            let mut g = DispersionGrid::from_samples_2d(ax, ay, omega, model.units())?;
            if let Some(k_a) = ring {
                g.mark_subradiant(k_a);
            }
            let (set, summary) = contour_product(&mut g, ring)?;
            contours = Some((set, summary));
            grid = g;
        }
        DispersionSpec::Regularized {
            n,
            a_ho,
            k_a,
            shells,
            mask_steps,
            ..
        } => {
            let CouplingModel::FreeSpace { k_a: model_k, polarization } = *model else {
                return Err(Error::Config("regularized dispersion requires the free-space model".into()));
            };
            let k = k_a.unwrap_or(model_k);
            ring = Some(k);
            let mut d = RegularizedDispersion::new(k, polarization);
            d.a_ho = *a_ho;
            d.spacings = spacings;
            d.shells = *shells;
            let ax = KAxis::reciprocal(*n, spacings[0], true);
            let ay = KAxis::reciprocal(*n, spacings[1], true);
            let mut g = d.sample(ax, ay, *mask_steps)?;
            let (set, summary) = contour_product(&mut g, ring)?;
            contours = Some((set, summary));
            grid = g;
        }
    }
    let (contour_set, contour_summary) = match contours {
        Some((s, m)) => (Some(s), Some(m)),
        None => (None, None),
    };
    Ok(DispersionProduct {
        summary: DispersionSummary {
            name: spec.name().to_string(),
            dimension: grid.dimension,
            masked: grid.masked.iter().filter(|m| **m).count(),
            inflection_points: inflections,
            curvature_minima: minima,
            contours: contour_summary,
            units: grid.units.energy_label(),
        },
        grid,
        contours: contour_set,
    })
}

/// Runs the exact dynamics of a scenario.
pub fn simulate(config: &ScenarioConfig) -> Result<Vec<WaveformSnapshot>> {
    let h = Hamiltonian::build(&config.geometry, &config.model)?;
    evolve_with(&h, config.geometry.origin_site(), &config.times, &config.method.propagator())
}

/// SPA waveforms at each snapshot time, on the chain coordinates.
pub fn spa_comparison(config: &ScenarioConfig, spec: &SpaSpec, exact: &[WaveformSnapshot]) -> Result<Vec<crate::spa::SpaWaveform>> {
    let cf = ClosedForm1d::new(config.model)?;
    let opts = SpaOptions {
        axis: KAxis::brillouin(spec.grid),
        periodic: true,
        subradiant_only: if spec.subradiant_only { model_k_a(&config.model) } else { None },
    };
    let a = config.geometry.spacings()[0];
    let xs: Vec<f64> = (0..config.geometry.n_sites())
        .map(|i| config.geometry.position(i).map(|r| r[0] / a))
        .collect::<Result<_>>()?;
    exact
        .iter()
        .filter(|s| s.time > 0.0)
        .map(|s| {
            let norm = if spec.normalize_to_survival {
                Normalization::ToSurvival { p: s.survival.min(1.0) }
            } else {
                Normalization::None
            };
            spa_waveform(&cf, &xs, s.time, norm, &opts)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub description: String,
    pub config: ScenarioConfig,
    pub config_hash: String,
    pub version: String,
    pub threads: usize,
    pub notes: Vec<String>,
    pub survival: Vec<[f64; 2]>,
    pub classification: Option<Label>,
    pub expected: Option<Label>,
    pub dispersion: Vec<DispersionSummary>,
    pub predicted_peaks: BTreeMap<String, Vec<PredictedPeak>>,
    pub files: Vec<FileEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_time_s: f64,
    pub stages: Vec<(String, f64)>,
}

/// Result of a completed run.
#[derive(Debug)]
pub struct ScenarioOutcome {
    pub directory: PathBuf,
    pub manifest: Manifest,
    pub snapshots: Vec<WaveformSnapshot>,
    pub classification: Option<ClassificationReport>,
    pub dispersion: Vec<DispersionProduct>,
}

fn stage<T>(config: &ScenarioConfig, name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        scenario: config.name.clone(),
        stage: name.into(),
        source: Box::new(e),
    })
}

/// Runs every stage and writes the bundle to `<root>/<name>`. The bundle is
/// assembled in a sibling staging directory and only moved into place on
/// success; on failure the staging directory is removed.
pub fn run_scenario(config: &ScenarioConfig, root: &Path) -> Result<ScenarioOutcome> {
    stage(config, "validate", config.validate())?;
    let dest = root.join(&config.name);
    let staging = root.join(format!(".{}.partial", config.name));
    if staging.exists() {
        fs::remove_dir_all(&staging)?;
    }
    let result = run_into(config, &staging);
    match result {
        Ok(mut outcome) => {
            if dest.exists() {
                fs::remove_dir_all(&dest)?;
            }
            fs::rename(&staging, &dest)?;
            outcome.directory = dest;
            Ok(outcome)
        }
        Err(e) => {
            let _ = fs::remove_dir_all(&staging);
            Err(e)
        }
    }
}

fn run_into(config: &ScenarioConfig, dir: &Path) -> Result<ScenarioOutcome> {
    let start = Instant::now();
    let mut stages = Vec::new();
    let mut lap = Instant::now();
    let mut tick = |name: &str, stages: &mut Vec<(String, f64)>| {
        let dt = lap.elapsed().as_secs_f64();
        log::debug!("{}: {name} took {dt:.3} s", config.name);
        stages.push((name.to_string(), dt));
        lap = Instant::now();
    };
    stage(config, "setup", fs::create_dir_all(dir).map_err(Error::from))?;
    let hash = stage(config, "setup", config_hash(config))?;
    let units = config.model.units();

    let snapshots = if config.times.is_empty() {
        Vec::new()
    } else {
        stage(config, "dynamics", simulate(config))?
    };
    tick("dynamics", &mut stages);
    stage(
        config,
        "write_snapshots",
        (|| {
            for (i, s) in snapshots.iter().enumerate() {
                let csv = dir.join(format!("snapshots/snapshot_{i:03}.csv"));
                write_with(&csv, |w| s.write_csv(&config.geometry, w))?;
                let meta = SnapshotMeta {
                    time: s.time,
                    survival: s.survival,
                    model: config.model.descriptor(),
                    config_hash: hash.clone(),
                    method: format!("{:?}", config.method).to_lowercase(),
                    time_unit: units.time_label(),
                };
                write_json(&dir.join(format!("snapshots/snapshot_{i:03}.json")), &meta)?;
            }
            Ok(())
        })(),
    )?;

    let classification = match &config.analysis {
        Some(spec) => {
            let mut report = stage(
                config,
                "classify",
                classify_snapshots(&snapshots, &config.geometry, &spec.sections, &spec.params),
            )?;
            report.inputs = (0..snapshots.len())
                .map(|i| file_sha256(&dir.join(format!("snapshots/snapshot_{i:03}.csv"))))
                .collect::<Result<_>>()?;
            stage(config, "classify", write_json(&dir.join("classification.json"), &report))?;
            Some(report)
        }
        None => None,
    };
    tick("classify", &mut stages);

    let mut products = Vec::new();
    let mut contour_json = BTreeMap::new();
    let mut peaks = BTreeMap::new();
    for spec in &config.dispersion {
        let p = stage(config, "dispersion", compute_dispersion(config, spec))?;
        let path = dir.join(format!("dispersion/{}.csv", spec.name()));
        stage(config, "dispersion", write_with(&path, |w| p.grid.write_csv(w)))?;
        if let Some(set) = &p.contours {
            contour_json.insert(spec.name().to_string(), set.clone());
        }
        if let Some(set) = &p.summary.inflection_points {
            if let Some(t) = config.times.last() {
                peaks.insert(
                    spec.name().to_string(),
                    predicted_peaks_with_minima(set, &p.summary.curvature_minima, *t),
                );
            }
        }
        products.push(p);
    }
    if !contour_json.is_empty() {
        stage(config, "contours", write_json(&dir.join("contours.json"), &contour_json))?;
    }
    tick("dispersion", &mut stages);

    if let Some(spec) = &config.spa {
        let waves = stage(config, "spa", spa_comparison(config, spec, &snapshots))?;
        for (i, w) in waves.iter().enumerate() {
            stage(config, "spa", write_with(&dir.join(format!("spa/spa_{i:03}.csv")), |out| w.write_csv(out)))?;
        }
    }
    tick("spa", &mut stages);

    let mut files = Vec::new();
    for rel in config.planned_outputs() {
        if rel == "manifest.json" || rel == "timing.json" {
            continue;
        }
        let p = dir.join(&rel);
        if p.exists() {
            files.push(FileEntry {
                sha256: file_sha256(&p)?,
                path: rel,
            });
        }
    }
    let manifest = Manifest {
        name: config.name.clone(),
        description: config.description.clone(),
        config: config.clone(),
        config_hash: hash,
        version: env!("CARGO_PKG_VERSION").to_string(),
        threads: rayon::current_num_threads(),
        notes: config.notes.clone(),
        survival: snapshots.iter().map(|s| [s.time, s.survival]).collect(),
        classification: classification.as_ref().map(|c| c.label),
        expected: config.analysis.as_ref().and_then(|a| a.expected),
        dispersion: products.iter().map(|p| p.summary.clone()).collect(),
        predicted_peaks: peaks,
        files,
    };
    stage(config, "manifest", write_json(&dir.join("manifest.json"), &manifest))?;
    let timing = Timing {
        wall_time_s: start.elapsed().as_secs_f64(),
        stages,
    };
    stage(config, "manifest", write_json(&dir.join("timing.json"), &timing))?;
    Ok(ScenarioOutcome {
        directory: dir.to_path_buf(),
        manifest,
        snapshots,
        classification,
        dispersion: products,
    })
}

// ---------------------------------------------------------------------------
// Builtins

const CHAIN: usize = 751;
const SQUARE: usize = 93;

fn chain() -> LatticeGeometry {
    LatticeGeometry::chain(CHAIN, 1.0).expect("valid chain")
}

fn square() -> LatticeGeometry {
    LatticeGeometry::square(SQUARE).expect("valid square")
}

fn tilted() -> Polarization {
    Polarization::spherical(PI / 12.0, PI / 4.0)
}

fn analysis(sections: &[Section], window: usize, expected: Option<Label>) -> Option<AnalysisSpec> {
    Some(AnalysisSpec {
        sections: sections.to_vec(),
        params: ClassifierParams {
            window,
            ..ClassifierParams::default()
        },
        expected,
    })
}

fn base(name: &str, description: &str, model: CouplingModel, geometry: LatticeGeometry, times: &[f64]) -> ScenarioConfig {
    ScenarioConfig {
        name: name.into(),
        description: description.into(),
        model,
        geometry,
        times: times.to_vec(),
        method: Method::Krylov,
        analysis: None,
        dispersion: Vec::new(),
        spa: None,
        notes: Vec::new(),
        outputs: OutputSpec::default(),
    }
}

fn closed_form(name: &str) -> DispersionSpec {
    DispersionSpec::ClosedForm {
        name: name.into(),
        n: 2048,
    }
}

fn power_law_chain(name: &str, description: &str, alpha: f64, times: &[f64], expected: Label) -> ScenarioConfig {
    let mut c = base(name, description, CouplingModel::PowerLaw { alpha }, chain(), times);
    c.analysis = analysis(&[Section::Chain], 7, Some(expected));
    c.dispersion = vec![closed_form("closed_form")];
    c
}

fn free_space_chain(name: &str, description: &str, k_a: f64, pol: Polarization, times: &[f64], expected: Label) -> ScenarioConfig {
    let mut c = base(name, description, CouplingModel::FreeSpace { k_a, polarization: pol }, chain(), times);
    c.analysis = analysis(&[Section::Chain], 7, Some(expected));
    c.dispersion = vec![closed_form("closed_form")];
    c.notes.push("snapshot times are illustrative".into());
    c
}

fn free_space_square(name: &str, description: &str, k_a: f64, expected: Label) -> ScenarioConfig {
    let mut c = base(
        name,
        description,
        CouplingModel::FreeSpace {
            k_a,
            polarization: tilted(),
        },
        square(),
        &[10.0, 20.0, 40.0],
    );
    c.analysis = analysis(&[Section::Row, Section::Diagonal], 7, Some(expected));
    c.notes.push("snapshot times are illustrative".into());
    c
}

fn regularized(name: &str, k_a: f64) -> DispersionSpec {
    DispersionSpec::Regularized {
        name: name.into(),
        n: SQUARE,
        a_ho: default_a_ho(),
        k_a: Some(k_a),
        shells: None,
        mask_steps: default_mask_steps(),
    }
}

fn rectangular(axis: &str, pol: Polarization) -> ScenarioConfig {
    let (ax, ay) = (0.4, 0.8);
    let mut c = base(
        &format!("sm_fig_s6_{axis}"),
        &format!("rectangular free-space array, dipoles along {axis}"),
        CouplingModel::FreeSpace {
            k_a: 0.75 * PI,
            polarization: pol,
        },
        LatticeGeometry::rectangular(SQUARE, SQUARE, ax, ay).expect("valid rectangle"),
        &[5.0, 10.0, 20.0],
    );
    c.analysis = analysis(&[Section::Row, Section::Column], 7, None);
    c.notes.push("lattice constants and k_A are illustrative".into());
    c
}

/// All builtin scenarios, in stable order.
pub fn builtins() -> Vec<ScenarioConfig> {
    let mut v = vec![
        power_law_chain("fig2a", "power law alpha=1 chain: unsplit", 1.0, &[1.0, 2.0, 4.0], Label::Unsplit),
        power_law_chain("fig2b", "power law alpha=2 chain: expanding plateau", 2.0, &[20.0, 40.0, 60.0], Label::Unsplit),
        power_law_chain("fig2c", "power law alpha=3 chain: two-packet splitting", 3.0, &[20.0, 40.0, 60.0], Label::Split),
    ];
    let mut wg = base(
        "fig3a_wg",
        "waveguide chain: stationary peaks",
        CouplingModel::Waveguide { k_a: 0.3 * PI },
        chain(),
        &[20.0, 50.0, 100.0],
    );
    wg.analysis = analysis(&[Section::Chain], 7, Some(Label::Unsplit));
    wg.dispersion = vec![closed_form("closed_form")];
    wg.notes.push("k_A = 0.3 pi is a substitute: reference value unknown".into());
    wg.notes.push("snapshot times are illustrative".into());
    v.push(wg);
    v.push(free_space_chain(
        "fig3b_par_0.6pi",
        "free-space chain, dipoles along the chain, k_A=0.6 pi: unsplit",
        0.6 * PI,
        Polarization::x(),
        &[20.0, 50.0, 100.0],
        Label::Unsplit,
    ));
    let mut par = free_space_chain(
        "fig3b_par_0.15pi",
        "free-space chain, dipoles along the chain, k_A=0.15 pi: split",
        0.15 * PI,
        Polarization::x(),
        &[2.0, 4.0, 6.0],
        Label::Split,
    );
    par.spa = Some(SpaSpec {
        normalize_to_survival: true,
        subradiant_only: false,
        grid: default_spa_grid(),
    });
    v.push(par);
    v.push(free_space_chain(
        "fig3c_perp_0.3pi",
        "free-space chain, dipoles across the chain, k_A=0.3 pi: split with subsidiary peaks",
        0.3 * PI,
        Polarization::y(),
        &[20.0, 50.0, 100.0],
        Label::Split,
    ));
    v.push(free_space_square("fig4a", "93x93 free-space array, k_A=0.3 pi: split", 0.3 * PI, Label::Split));
    v.push(free_space_square("fig4b", "93x93 free-space array, k_A=1.2 pi: unsplit", 1.2 * PI, Label::Unsplit));
    let mut s3 = power_law_chain(
        "sm_fig_s3_spa",
        "stationary-phase benchmark on the alpha=3 chain",
        3.0,
        &[20.0, 40.0, 60.0],
        Label::Split,
    );
    s3.spa = Some(SpaSpec {
        normalize_to_survival: true,
        subradiant_only: false,
        grid: default_spa_grid(),
    });
    v.push(s3);
    let mut s4 = base(
        "sm_fig_s4",
        "93x93 power law alpha=2: Hessian zero loop and axial splitting",
        CouplingModel::PowerLaw { alpha: 2.0 },
        square(),
        &[3.0, 6.0, 9.0],
    );
    s4.analysis = analysis(&[Section::Row], 1, Some(Label::Split));
    s4.dispersion = vec![DispersionSpec::LatticeSum2d {
        name: "lattice_sum".into(),
        n: 256,
        radius: 400.0,
        window: Cutoff2d::Smooth,
    }];
    v.push(s4);
    let mut s5 = base(
        "sm_fig_s5",
        "regularized free-space Hessian determinant for k_A=0.3 pi and 1.2 pi",
        CouplingModel::FreeSpace {
            k_a: 0.3 * PI,
            polarization: tilted(),
        },
        square(),
        &[],
    );
    s5.dispersion = vec![regularized("regularized_0.3pi", 0.3 * PI), regularized("regularized_1.2pi", 1.2 * PI)];
    v.push(s5);
    v.push(rectangular("x", Polarization::x()));
    v.push(rectangular("y", Polarization::y()));
    v.push(rectangular("z", Polarization::z()));
    v
}

pub fn list_scenarios() -> Vec<(String, String)> {
    builtins().into_iter().map(|c| (c.name, c.description)).collect()
}

pub fn builtin(name: &str) -> Result<ScenarioConfig> {
    builtins()
        .into_iter()
        .find(|c| c.name == name)
        .ok_or_else(|| Error::Config(format!("unknown scenario `{name}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_stable_and_valid() {
        let names: Vec<String> = list_scenarios().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names[0], "fig2a");
        assert_eq!(names, list_scenarios().into_iter().map(|(n, _)| n).collect::<Vec<_>>());
        for want in ["fig2b", "fig3a_wg", "fig3b_par_0.6pi", "fig3c_perp_0.3pi", "fig4b", "sm_fig_s5", "sm_fig_s6_z"] {
            assert!(names.iter().any(|n| n == want), "{want}");
        }
        for c in builtins() {
            c.validate().unwrap();
        }
    }

    #[test]
    fn config_round_trip_and_unknown_keys() {
        for c in builtins() {
            let text = serde_json::to_string_pretty(&c).unwrap();
            assert_eq!(ScenarioConfig::from_json(&text).unwrap(), c);
        }
        let mut v = serde_json::to_value(builtin("fig2a").unwrap()).unwrap();
        v["bogus"] = serde_json::json!(1);
        assert!(ScenarioConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn small_run_writes_bundle() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = power_law_chain("tiny", "tiny", 3.0, &[1.0, 2.0, 3.0], Label::Split);
        c.geometry = LatticeGeometry::chain(41, 1.0).unwrap();
        c.spa = Some(SpaSpec {
            normalize_to_survival: true,
            subradiant_only: false,
            grid: 512,
        });
        let out = run_scenario(&c, dir.path()).unwrap();
        for f in c.planned_outputs() {
            assert!(out.directory.join(&f).exists(), "{f}");
        }
        let first = fs::read(out.directory.join("manifest.json")).unwrap();
        let again = run_scenario(&c, dir.path()).unwrap();
        assert_eq!(first, fs::read(again.directory.join("manifest.json")).unwrap());
    }

    #[test]
    fn failed_stage_cleans_up() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = power_law_chain("broken", "broken", 2.5, &[1.0, 2.0, 3.0], Label::Split);
        c.geometry = LatticeGeometry::chain(21, 1.0).unwrap();
        let err = run_scenario(&c, dir.path()).unwrap_err();
        assert!(matches!(err, Error::Stage { ref stage, .. } if stage == "dispersion"), "{err}");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }
}
