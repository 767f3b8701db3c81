mod values;

use std::fs;
use std::io::{BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde_json::json;

use latticespread::analysis::{
    classify_snapshots, gauss_bonnet_check, moment_integral, smooth_battery_2d,
};
use latticespread::dispersion::{
    curvature_minima, find_inflection_points, hessian_2d, smooth_battery_1d, ClosedForm1d, Cutoff2d, KAxis,
};
use latticespread::dynamics::{Section, SnapshotMeta, WaveformSnapshot};
use latticespread::io::{write_json, write_with};
use latticespread::lattice::LatticeGeometry;
use latticespread::model::{CouplingModel, Polarization};
use latticespread::scenarios::{
    builtin, compute_dispersion, list_scenarios, run_scenario, DispersionSpec, Manifest, Method, ScenarioConfig,
};
use latticespread::spa::{predicted_peaks_with_minima, spa_waveform, Normalization, SpaOptions};
use latticespread::Error;

#[derive(Parser)]
#[command(name = "latticespread", version, about = "Excitation spreading in long-range coupled lattices")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "LATTICESPREAD_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true, default_value = "info")]
    log_level: log::LevelFilter,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List builtin scenarios.
    List,
    /// Run a builtin or file-defined scenario and write its bundle.
    Run(RunArgs),
    /// Evolve a site-localized excitation and write snapshots.
    Simulate(RunArgs),
    /// Sample a 1D dispersion relation.
    Dispersion(DispersionArgs),
    /// Hessian determinant and its zero contours for a 2D lattice.
    Hessian(HessianArgs),
    /// Stationary-phase waveforms for a 1D model.
    Spa(SpaArgs),
    /// Classify the snapshots of an existing bundle.
    Classify(ClassifyArgs),
    /// Run an identity check suite.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelKind {
    #[value(alias = "powerlaw")]
    PowerLaw,
    Waveguide,
    #[value(alias = "freespace")]
    FreeSpace,
}

impl ModelKind {
    fn matches(self, m: &CouplingModel) -> bool {
        matches!(
            (self, m),
            (ModelKind::PowerLaw, CouplingModel::PowerLaw { .. })
                | (ModelKind::Waveguide, CouplingModel::Waveguide { .. })
                | (ModelKind::FreeSpace, CouplingModel::FreeSpace { .. })
        )
    }
}

#[derive(Args, Clone, Default)]
struct ModelArgs {
    /// Scenario config file (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Builtin scenario used as the base configuration.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long, value_enum)]
    model: Option<ModelKind>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Light wavenumber in units of 1/a; accepts forms like `0.3pi`.
    #[arg(long, value_parser = values::angle, allow_hyphen_values = true)]
    k_a: Option<f64>,
    /// x, y, z, THETA,PHI or X,Y,Z.
    #[arg(long, value_parser = values::polarization)]
    polarization: Option<Polarization>,
    /// Chain length.
    #[arg(long, conflicts_with_all = ["nx", "ny"])]
    sites: Option<usize>,
    #[arg(long, requires = "ny")]
    nx: Option<usize>,
    #[arg(long, requires = "nx")]
    ny: Option<usize>,
    /// Lattice spacing(s), comma separated.
    #[arg(long, value_parser = values::angle, value_delimiter = ',')]
    spacing: Option<Vec<f64>>,
    /// Snapshot times, comma separated.
    #[arg(long, value_parser = values::angle, value_delimiter = ',')]
    times: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Krylov,
    Diagonalize,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Output root; the bundle goes to <out>/<name>.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DispersionArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 4096)]
    grid: usize,
    /// Write omega, d1 and d2 columns.
    #[arg(long)]
    derivs: bool,
    /// Use a truncated real-space sum with this many neighbors per side.
    #[arg(long)]
    lattice_sum: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum WindowArg {
    Sharp,
    Smooth,
}

#[derive(Args)]
struct HessianArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    grid: Option<usize>,
    /// Real-space cutoff radius for lattice sums.
    #[arg(long, default_value_t = 400.0)]
    radius: f64,
    #[arg(long, value_enum, default_value = "smooth")]
    window: WindowArg,
    /// Force a real-space lattice sum for the free-space model.
    #[arg(long)]
    lattice_sum: bool,
    #[arg(long, default_value_t = 0.1)]
    a_ho: f64,
    #[arg(long)]
    shells: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    mask_steps: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SpaArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 4096)]
    grid: usize,
    /// Keep only stationary points outside the light cone.
    #[arg(long)]
    subradiant_only: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Bundle directory written by `run` or `simulate`.
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long, value_enum)]
    section: Vec<SectionArg>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    valley: Option<f64>,
    /// Report path (default: <bundle>/classification.json).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SectionArg {
    Chain,
    Row,
    Column,
    Diagonal,
    AntiDiagonal,
    Radial,
}

impl From<SectionArg> for Section {
    fn from(s: SectionArg) -> Self {
        match s {
            SectionArg::Chain => Section::Chain,
            SectionArg::Row => Section::Row,
            SectionArg::Column => Section::Column,
            SectionArg::Diagonal => Section::Diagonal,
            SectionArg::AntiDiagonal => Section::AntiDiagonal,
            SectionArg::Radial => Section::Radial,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Suite {
    Nogo,
    GaussBonnet,
    All,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "nogo")]
    suite: Suite,
    /// Optional JSON report.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct CliError {
    code: u8,
    kind: &'static str,
    message: String,
    detail: Vec<String>,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            kind: "usage",
            message: message.into(),
            detail: Vec::new(),
        }
    }

    fn failed(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            kind: "check",
            message: message.into(),
            detail: Vec::new(),
        }
    }

    fn report(&self) {
        let mut err = std::io::stderr().lock();
        let _ = writeln!(
            err,
            "error: code={} kind={} message={}",
            self.code,
            self.kind,
            serde_json::Value::String(self.message.clone())
        );
        for d in &self.detail {
            let _ = writeln!(err, "  {d}");
        }
    }
}

fn kind_of(e: &Error) -> &'static str {
    match e {
        Error::Geometry(_) => "geometry",
        Error::SiteOutOfRange { .. } => "site_out_of_range",
        Error::Model(_) => "model",
        Error::CoincidentSites(..) => "coincident_sites",
        Error::NonFinite { .. } => "non_finite",
        Error::Dimension { .. } => "dimension",
        Error::InvalidArgument(_) => "invalid_argument",
        Error::NonConvergence { .. } => "non_convergence",
        Error::Linalg(_) => "linalg",
        Error::Singular(_) => "singular",
        Error::Caustic { .. } => "caustic",
        Error::ReciprocalSum { .. } => "reciprocal_sum",
        Error::Config(_) => "config",
        Error::Stage { source, .. } => kind_of(source),
        Error::Io(_) => "io",
        Error::Json(_) => "json",
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let mut detail = Vec::new();
        if let Error::Stage { scenario, stage, .. } = &e {
            detail.push(format!("scenario: {scenario}"));
            detail.push(format!("stage: {stage}"));
        }
        let mut src = std::error::Error::source(&e);
        while let Some(s) = src {
            detail.push(format!("caused by: {s}"));
            src = s.source();
        }
        Self {
            code: 2,
            kind: kind_of(&e),
            message: e.to_string(),
            detail,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Error::from(e).into()
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

/// Errors raised while resolving flags and config files count as usage errors.
fn usage(e: Error) -> CliError {
    let mut c = CliError::from(e);
    c.code = 1;
    c
}

fn resolve(args: &ModelArgs, default_name: &str) -> CliResult<ScenarioConfig> {
    let base = match (&args.config, &args.scenario) {
        (Some(p), Some(s)) => {
            return Err(CliError::usage(format!(
                "--scenario `{s}` conflicts with --config `{}`; give one source",
                p.display()
            )))
        }
        (Some(p), None) => Some((ScenarioConfig::load(p).map_err(usage)?, format!("config file `{}`", p.display()))),
        (None, Some(s)) => Some((builtin(s).map_err(usage)?, format!("scenario `{s}`"))),
        (None, None) => None,
    };
    let (mut cfg, source) = match base {
        Some(b) => b,
        None => {
            let kind = args
                .model
                .ok_or_else(|| CliError::usage("no model given: pass --model, --config or --scenario"))?;
            let model = match kind {
                ModelKind::PowerLaw => CouplingModel::PowerLaw {
                    alpha: args.alpha.ok_or_else(|| CliError::usage("--model power-law requires --alpha"))?,
                },
                ModelKind::Waveguide => CouplingModel::Waveguide {
                    k_a: args.k_a.ok_or_else(|| CliError::usage("--model waveguide requires --k-a"))?,
                },
                ModelKind::FreeSpace => CouplingModel::FreeSpace {
                    k_a: args.k_a.ok_or_else(|| CliError::usage("--model free-space requires --k-a"))?,
                    polarization: args
                        .polarization
                        .ok_or_else(|| CliError::usage("--model free-space requires --polarization"))?,
                },
            };
            let cfg = ScenarioConfig {
                name: default_name.into(),
                description: String::new(),
                model,
                geometry: LatticeGeometry::chain(args.sites.unwrap_or(751), 1.0).map_err(usage)?,
                times: Vec::new(),
                method: Method::Krylov,
                analysis: None,
                dispersion: Vec::new(),
                spa: None,
                notes: Vec::new(),
                outputs: Default::default(),
            };
            (cfg, "flags".to_string())
        }
    };

    if let Some(kind) = args.model {
        if !kind.matches(&cfg.model) {
            return Err(CliError::usage(format!(
                "--model {} conflicts with model `{}` from {source}",
                kind.to_possible_value().expect("named").get_name(),
                cfg.model.descriptor()
            )));
        }
    }
    match &mut cfg.model {
        CouplingModel::PowerLaw { alpha } => {
            if let Some(a) = args.alpha {
                *alpha = a;
            }
            for (flag, given) in [("--k-a", args.k_a.is_some()), ("--polarization", args.polarization.is_some())] {
                if given {
                    return Err(CliError::usage(format!("{flag} conflicts with power-law model from {source}")));
                }
            }
        }
        CouplingModel::Waveguide { k_a } => {
            if let Some(k) = args.k_a {
                *k_a = k;
            }
            for (flag, given) in [("--alpha", args.alpha.is_some()), ("--polarization", args.polarization.is_some())] {
                if given {
                    return Err(CliError::usage(format!("{flag} conflicts with waveguide model from {source}")));
                }
            }
        }
        CouplingModel::FreeSpace { k_a, polarization } => {
            if let Some(k) = args.k_a {
                *k_a = k;
            }
            if let Some(p) = args.polarization {
                *polarization = p;
            }
            if args.alpha.is_some() {
                return Err(CliError::usage(format!("--alpha conflicts with free-space model from {source}")));
            }
        }
    }

    let spacings = args.spacing.clone();
    if args.sites.is_some() || args.nx.is_some() || spacings.is_some() {
        let old = cfg.geometry.clone();
        cfg.geometry = match (args.sites, args.nx, args.ny) {
            (Some(n), _, _) => {
                let a = spacings.as_ref().map_or(old.spacings()[0], |s| s[0]);
                if spacings.as_ref().is_some_and(|s| s.len() != 1) {
                    return Err(CliError::usage("--sites takes a single --spacing"));
                }
                LatticeGeometry::chain(n, a)
            }
            (None, Some(nx), Some(ny)) => {
                let [ax, ay] = match spacings.as_deref() {
                    None => old.spacings(),
                    Some([a]) => [*a, *a],
                    Some([ax, ay]) => [*ax, *ay],
                    Some(_) => return Err(CliError::usage("--spacing takes one or two values")),
                };
                LatticeGeometry::rectangular(nx, ny, ax, ay)
            }
            _ => {
                let s = spacings.unwrap_or_default();
                let counts = old.counts();
                if old.dimension() == 1 {
                    match s[..] {
                        [a] => LatticeGeometry::chain(counts[0], a),
                        _ => return Err(CliError::usage(format!("{source} has a 1D geometry; give one --spacing"))),
                    }
                } else {
                    match s[..] {
                        [a] => LatticeGeometry::rectangular(counts[0], counts[1], a, a),
                        [ax, ay] => LatticeGeometry::rectangular(counts[0], counts[1], ax, ay),
                        _ => return Err(CliError::usage("--spacing takes one or two values")),
                    }
                }
            }
        }
        .map_err(usage)?;
    }
    if let Some(t) = &args.times {
        cfg.times = t.clone();
    }
    if let Some(m) = args.method {
        cfg.method = match m {
            MethodArg::Krylov => Method::Krylov,
            MethodArg::Diagonalize => Method::Diagonalize,
        };
    }
    Ok(cfg)
}

fn validated(cfg: ScenarioConfig) -> CliResult<ScenarioConfig> {
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

fn dry_run(value: &serde_json::Value) -> CliResult {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn out_root(cli: &Option<PathBuf>, cfg: &ScenarioConfig) -> PathBuf {
    cli.clone()
        .or_else(|| cfg.outputs.directory.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn cmd_run(args: &RunArgs, dry: bool) -> CliResult {
    if args.model.config.is_none() && args.model.scenario.is_none() {
        return Err(CliError::usage("run needs --scenario or --config"));
    }
    let cfg = validated(resolve(&args.model, "custom")?)?;
    let root = out_root(&args.out, &cfg);
    if dry {
        return dry_run(&json!({ "config": cfg, "out": root, "outputs": cfg.planned_outputs() }));
    }
    info!("running `{}` into {}", cfg.name, root.display());
    let outcome = run_scenario(&cfg, &root)?;
    if let Some(label) = outcome.manifest.classification {
        info!("classification: {label:?}");
        if let Some(expected) = outcome.manifest.expected {
            if expected != label {
                warn!("expected {expected:?}");
            }
        }
    }
    info!("bundle written to {}", outcome.directory.display());
    Ok(())
}

fn cmd_simulate(args: &RunArgs, dry: bool) -> CliResult {
    let mut cfg = resolve(&args.model, "simulation")?;
    cfg.analysis = None;
    cfg.dispersion.clear();
    cfg.spa = None;
    if cfg.times.is_empty() {
        return Err(CliError::usage("simulate needs --times"));
    }
    let cfg = validated(cfg)?;
    let root = out_root(&args.out, &cfg);
    if dry {
        return dry_run(&json!({ "config": cfg, "out": root, "outputs": cfg.planned_outputs() }));
    }
    let outcome = run_scenario(&cfg, &root)?;
    for [t, p] in &outcome.manifest.survival {
        info!("t = {t}: survival {p:.6}");
    }
    info!("snapshots written to {}", outcome.directory.display());
    Ok(())
}

fn one_d(cfg: &ScenarioConfig, what: &str) -> CliResult {
    if cfg.geometry.dimension() != 1 {
        return Err(CliError::usage(format!("{what} works on 1D geometries")));
    }
    Ok(())
}

fn cmd_dispersion(args: &DispersionArgs, dry: bool) -> CliResult {
    let cfg = validated(resolve(&args.model, "dispersion")?)?;
    one_d(&cfg, "dispersion")?;
    if args.grid < 8 {
        return Err(CliError::usage("--grid must be at least 8"));
    }
    let spec = match args.lattice_sum {
        Some(cutoff) => DispersionSpec::LatticeSum1d {
            name: "dispersion".into(),
            n: args.grid,
            cutoff,
        },
        None => DispersionSpec::ClosedForm {
            name: "dispersion".into(),
            n: args.grid,
        },
    };
    if dry {
        return dry_run(&json!({ "model": cfg.model, "geometry": cfg.geometry, "dispersion": spec, "derivs": args.derivs, "out": args.out }));
    }
    let product = compute_dispersion(&cfg, &spec)?;
    if args.derivs {
        write_with(&args.out, |w| product.grid.write_derivatives_csv(w))?;
    } else {
        write_with(&args.out, |w| product.grid.write_csv(w))?;
    }
    if let Some(set) = &product.summary.inflection_points {
        for p in &set.points {
            info!("inflection point k = {:.12}, v_g = {:.12}", p.k, p.group_velocity);
        }
    }
    info!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_hessian(args: &HessianArgs, dry: bool) -> CliResult {
    let mut cfg = resolve(&args.model, "hessian")?;
    if cfg.geometry.dimension() != 2 {
        if args.model.config.is_some() || args.model.scenario.is_some() {
            return Err(CliError::usage("hessian needs a 2D geometry"));
        }
        cfg.geometry = LatticeGeometry::square(93).map_err(usage)?;
    }
    let regularized = matches!(cfg.model, CouplingModel::FreeSpace { .. }) && !args.lattice_sum;
    let spec = if regularized {
        DispersionSpec::Regularized {
            name: "hessian".into(),
            n: args.grid.unwrap_or(93),
            a_ho: args.a_ho,
            k_a: None,
            shells: args.shells,
            mask_steps: args.mask_steps,
        }
    } else {
        DispersionSpec::LatticeSum2d {
            name: "hessian".into(),
            n: args.grid.unwrap_or(256),
            radius: args.radius,
            window: match args.window {
                WindowArg::Sharp => Cutoff2d::Sharp,
                WindowArg::Smooth => Cutoff2d::Smooth,
            },
        }
    };
    cfg.times.clear();
    cfg.analysis = None;
    cfg.spa = None;
    cfg.dispersion = vec![spec.clone()];
    let cfg = validated(cfg)?;
    if dry {
        return dry_run(&json!({ "model": cfg.model, "geometry": cfg.geometry, "dispersion": spec, "out": args.out }));
    }
    let product = compute_dispersion(&cfg, &spec)?;
    fs::create_dir_all(&args.out)?;
    write_with(&args.out.join("hessian.csv"), |w| product.grid.write_csv(w))?;
    write_json(&args.out.join("contours.json"), &product.contours)?;
    write_json(&args.out.join("summary.json"), &product.summary)?;
    if let Some(c) = &product.summary.contours {
        info!(
            "{} zero contours, {} closed; minimum ring distance {:?}",
            c.lines, c.closed_loops, c.min_ring_distance
        );
    }
    Ok(())
}

fn cmd_spa(args: &SpaArgs, dry: bool) -> CliResult {
    let cfg = validated(resolve(&args.model, "spa")?)?;
    one_d(&cfg, "spa")?;
    if cfg.times.is_empty() {
        return Err(CliError::usage("spa needs --times"));
    }
    if cfg.times.iter().any(|t| *t <= 0.0) {
        return Err(CliError::usage("spa times must be positive"));
    }
    let k_a = match cfg.model {
        CouplingModel::Waveguide { k_a } | CouplingModel::FreeSpace { k_a, .. } => Some(k_a),
        CouplingModel::PowerLaw { .. } => None,
    };
    if args.subradiant_only && k_a.is_none() {
        return Err(CliError::usage("--subradiant-only needs a light-mediated model"));
    }
    if dry {
        return dry_run(&json!({ "model": cfg.model, "geometry": cfg.geometry, "times": cfg.times, "grid": args.grid, "subradiant_only": args.subradiant_only, "out": args.out }));
    }
    let cf = ClosedForm1d::new(cfg.model)?;
    let axis = KAxis::brillouin(args.grid);
    let opts = SpaOptions {
        axis,
        periodic: true,
        subradiant_only: if args.subradiant_only { k_a } else { None },
    };
    let a = cfg.geometry.spacings()[0];
    let xs = (0..cfg.geometry.n_sites())
        .map(|i| cfg.geometry.position(i).map(|r| r[0] / a))
        .collect::<Result<Vec<_>, _>>()?;
    fs::create_dir_all(&args.out)?;
    for (i, t) in cfg.times.iter().enumerate() {
        let w = spa_waveform(&cf, &xs, *t, Normalization::None, &opts)?;
        write_with(&args.out.join(format!("spa_{i:03}.csv")), |o| w.write_csv(o))?;
    }
    let inflections = find_inflection_points(&cf, &axis)?;
    let minima = curvature_minima(&cf, &axis)?;
    let t_last = *cfg.times.last().expect("non-empty");
    let peaks = predicted_peaks_with_minima(&inflections, &minima, t_last);
    write_json(
        &args.out.join("stationary.json"),
        &json!({ "inflection_points": inflections, "curvature_minima": minima, "predicted_peaks": peaks, "time": t_last }),
    )?;
    info!("wrote {} waveforms to {}", cfg.times.len(), args.out.display());
    Ok(())
}

fn cmd_classify(args: &ClassifyArgs, dry: bool) -> CliResult {
    let manifest_path = args.bundle.join("manifest.json");
    let text = fs::read_to_string(&manifest_path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", manifest_path.display())))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("invalid manifest {}: {e}", manifest_path.display())))?;
    let cfg = manifest.config;
    let mut params = cfg.analysis.as_ref().map(|a| a.params).unwrap_or_default();
    if let Some(w) = args.window {
        params.window = w;
    }
    if let Some(t) = args.threshold {
        params.threshold_frac = t;
    }
    if let Some(v) = args.valley {
        params.valley_ratio = v;
    }
    let sections: Vec<Section> = if args.section.is_empty() {
        match &cfg.analysis {
            Some(a) => a.sections.clone(),
            None if cfg.geometry.dimension() == 1 => vec![Section::Chain],
            None => vec![Section::Row, Section::Column, Section::Diagonal],
        }
    } else {
        args.section.iter().map(|s| Section::from(*s)).collect()
    };
    let out = args.out.clone().unwrap_or_else(|| args.bundle.join("classification.json"));
    if dry {
        return dry_run(&json!({ "bundle": args.bundle, "sections": sections, "params": params, "out": out }));
    }
    let mut snaps = Vec::new();
    for i in 0..cfg.times.len() {
        let stem = args.bundle.join(format!("snapshots/snapshot_{i:03}"));
        let meta: SnapshotMeta = serde_json::from_str(&fs::read_to_string(stem.with_extension("json"))?)?;
        let file = fs::File::open(stem.with_extension("csv"))?;
        snaps.push(WaveformSnapshot::read_csv(meta.time, BufReader::new(file))?);
    }
    let mut report = classify_snapshots(&snaps, &cfg.geometry, &sections, &params)?;
    report.inputs = (0..snaps.len())
        .map(|i| latticespread::io::file_sha256(&args.bundle.join(format!("snapshots/snapshot_{i:03}.csv"))))
        .collect::<Result<_, _>>()?;
    write_json(&out, &report)?;
    info!("classification: {:?} -> {}", report.label, out.display());
    Ok(())
}

const NOGO_TOL: f64 = 1e-9;
const NOGO_GRID: usize = 4096;
const GB_TOL: f64 = 1e-3;
const GB_GRID: usize = 512;

fn verify_nogo() -> CliResult<(bool, Vec<serde_json::Value>)> {
    let mut ok = true;
    let mut rows = Vec::new();
    for d in smooth_battery_1d() {
        let m1 = moment_integral(&d, 1, NOGO_GRID)?;
        let m2 = moment_integral(&d, 2, NOGO_GRID)?;
        let moments_ok = [&m1, &m2].iter().all(|m| m.value.is_some_and(|v| v.abs() < NOGO_TOL));
        let roots_ok = if d.is_flat() {
            true
        } else {
            let set = find_inflection_points(&d, &KAxis::brillouin(NOGO_GRID))?;
            set.len() >= 2
                && set.points.iter().any(|p| p.group_velocity > 0.0)
                && set.points.iter().any(|p| p.group_velocity < 0.0)
        };
        let pass = moments_ok && roots_ok;
        ok &= pass;
        info!(
            "{} {}: |I1| = {:.3e}, |I2| = {:.3e}",
            if pass { "PASS" } else { "FAIL" },
            d.name,
            m1.value.unwrap_or(f64::NAN).abs(),
            m2.value.unwrap_or(f64::NAN).abs()
        );
        rows.push(json!({ "name": d.name, "first_moment": m1.value, "second_moment": m2.value, "pass": pass }));
    }
    Ok((ok, rows))
}

fn verify_gauss_bonnet() -> CliResult<(bool, Vec<serde_json::Value>)> {
    let mut ok = true;
    let mut rows = Vec::new();
    let h = 2.0 * std::f64::consts::PI / GB_GRID as f64;
    for f in smooth_battery_2d() {
        let field = hessian_2d(&f.sample(GB_GRID), [GB_GRID, GB_GRID], [h, h])?;
        let gb = gauss_bonnet_check(&field);
        let pass = gb.value.is_some_and(|v| v.abs() < GB_TOL);
        ok &= pass;
        info!("{} {}: chi = {:.3e}", if pass { "PASS" } else { "FAIL" }, f.name, gb.value.unwrap_or(f64::NAN));
        rows.push(json!({ "name": f.name, "euler_characteristic": gb.value, "pass": pass }));
    }
    Ok((ok, rows))
}

fn cmd_verify(args: &VerifyArgs, dry: bool) -> CliResult {
    if dry {
        return dry_run(&json!({
            "suite": args.suite.to_possible_value().expect("named").get_name(),
            "nogo": { "grid": NOGO_GRID, "tolerance": NOGO_TOL },
            "gauss_bonnet": { "grid": GB_GRID, "tolerance": GB_TOL },
            "out": args.out,
        }));
    }
    let mut ok = true;
    let mut report = serde_json::Map::new();
    if matches!(args.suite, Suite::Nogo | Suite::All) {
        let (pass, rows) = verify_nogo()?;
        ok &= pass;
        report.insert("nogo".into(), json!(rows));
    }
    if matches!(args.suite, Suite::GaussBonnet | Suite::All) {
        let (pass, rows) = verify_gauss_bonnet()?;
        ok &= pass;
        report.insert("gauss_bonnet".into(), json!(rows));
    }
    report.insert("pass".into(), json!(ok));
    if let Some(p) = &args.out {
        write_json(p, &report)?;
    }
    if ok {
        info!("all checks passed");
        Ok(())
    } else {
        Err(CliError::failed("verification suite failed"))
    }
}

fn cmd_list(dry: bool) -> CliResult {
    let list = list_scenarios();
    let mut out = std::io::stdout().lock();
    let res = if dry {
        serde_json::to_writer_pretty(&mut out, &list.iter().map(|(n, _)| n).collect::<Vec<_>>())
            .map_err(Error::from)
            .and_then(|_| writeln!(out).map_err(Error::from))
    } else {
        list.iter()
            .try_for_each(|(name, desc)| writeln!(out, "{name}\t{desc}"))
            .map_err(Error::from)
    };
    res.map_err(CliError::from)
}

fn dispatch(cli: &Cli) -> CliResult {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(e.to_string()))?;
    }
    let dry = cli.dry_run;
    match &cli.command {
        Command::List => cmd_list(dry),
        Command::Run(a) => cmd_run(a, dry),
        Command::Simulate(a) => cmd_simulate(a, dry),
        Command::Dispersion(a) => cmd_dispersion(a, dry),
        Command::Hessian(a) => cmd_hessian(a, dry),
        Command::Spa(a) => cmd_spa(a, dry),
        Command::Classify(a) => cmd_classify(a, dry),
        Command::Verify(a) => cmd_verify(a, dry),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.kind().as_str().unwrap_or("invalid arguments").to_string();
            let rendered = e.render().to_string();
            CliError {
                code: 1,
                kind: "usage",
                message: rendered.lines().next().unwrap_or(&msg).trim_start_matches("error: ").to_string(),
                detail: rendered.lines().skip(1).filter(|l| !l.trim().is_empty()).map(str::to_string).collect(),
            }
            .report();
            return ExitCode::from(1);
        }
    };
    env_logger::Builder::new()
        .filter_level(cli.log_level)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            e.report();
            ExitCode::from(e.code)
        }
    }
}

