use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use risdeploy_core::{
    evaluate_field, metrics, optimize_height_tilt, rate_cdf, sweep_x, BlockerRealization, DrawSet, LinkRasters,
    RateCdf, RisConfig, SearchSpec, ServingStatus,
};

use crate::output::{exact, fraunhofer_line, sig6, write_file, Header, Table};
use crate::scenario::{ScenarioFile, SweepMode};

#[derive(Debug, Parser)]
#[command(name = "risdeploy", version, about = "RIS deployment studies for a mmWave street cell")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Scenario TOML; built-in defaults when omitted.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Output directory (overrides `run.out_dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Base seed for the blocker draws (overrides `run.seed`)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo draws (overrides `run.n_draws`).
    #[arg(long)]
    pub draws: Option<usize>,
    /// Worker threads; 0 uses every core.
    #[arg(long, env = "RISDEPLOY_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Serving-status and rate rasters for explicit blocker positions.
    Snapshot {
        #[command(flatten)]
        common: Common,
        /// Comma-separated blocker left edges, e.g. `-15,2.5,13.8,30`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        blockers: Option<Vec<f64>>,
    },
    /// Expected metric versus RIS position along the street.
    SweepX {
        #[command(flatten)]
        common: Common,
        /// How height and tilt are held at each position (overrides `search.sweep_mode`)
        #[arg(long, value_enum)]
        mode: Option<SweepMode>,
    },
    /// Joint height and tilt search at a fixed position.
    Optimize {
        #[command(flatten)]
        common: Common,
        /// RIS position (defaults to `ris.x`).
        #[arg(long, allow_hyphen_values = true)]
        x: Option<f64>,
    },
    /// Pooled user-rate distribution with and without the RIS.
    Cdf {
        #[command(flatten)]
        common: Common,
        /// Search the tilt at the configured height first.
        #[arg(long)]
        optimal_tilt: bool,
    },
    /// Expected coverage ratio and rate with and without the RIS.
    Coverage {
        #[command(flatten)]
        common: Common,
        /// Search height and tilt at the configured position first.
        #[arg(long)]
        optimize: bool,
    },
    /// Aperture distance of the configured panel next to the quoted value.
    Fraunhofer {
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Snapshot { common, .. }
            | Command::SweepX { common, .. }
            | Command::Optimize { common, .. }
            | Command::Cdf { common, .. }
            | Command::Coverage { common, .. }
            | Command::Fraunhofer { common } => common,
        }
    }
}

/// Failure split by exit code: bad input (2) versus a run that could not
/// complete (1).
#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }

    fn classify(err: anyhow::Error) -> Self {
        let config = err.chain().any(|e| {
            matches!(e.downcast_ref::<risdeploy_core::Error>(), Some(risdeploy_core::Error::Config(_)))
                || e.downcast_ref::<toml::de::Error>().is_some()
        });
        if config {
            Failure::Config(err)
        } else {
            Failure::Runtime(err)
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "configuration error: {e:#}"),
            Failure::Runtime(e) => write!(f, "error: {e:#}"),
        }
    }
}

/// Effective scenario: file (or defaults) with command-line overrides for
/// the values that change results.
fn load_scenario(common: &Common) -> Result<ScenarioFile, Failure> {
    let mut s = match &common.scenario {
        Some(path) => ScenarioFile::load(path).map_err(Failure::Config)?,
        None => ScenarioFile::default(),
    };
    if let Some(seed) = common.seed {
        s.run.seed = seed;
    }
    if let Some(draws) = common.draws {
        s.run.n_draws = draws;
    }
    s.validate().map_err(Failure::Config)?;
    Ok(s)
}

/// Runs one command and returns the files written.
pub fn run(cli: Cli) -> Result<Vec<PathBuf>, Failure> {
    let common = cli.command.common().clone();
    let scenario = load_scenario(&common)?;
    let out = common.out.clone().unwrap_or_else(|| scenario.run.out_dir.clone());
    let threads = common.threads.unwrap_or(scenario.run.threads);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("starting worker threads")
        .map_err(Failure::Runtime)?;
    pool.install(|| dispatch(&cli.command, scenario, &out)).map_err(Failure::classify)
}

fn dispatch(command: &Command, scenario: ScenarioFile, out: &Path) -> anyhow::Result<Vec<PathBuf>> {
    match command {
        Command::Snapshot { blockers, .. } => {
            let mut s = scenario;
            if let Some(b) = blockers {
                s.blockers.positions = b.clone();
            }
            snapshot(&s, out)
        }
        Command::SweepX { mode, .. } => {
            let mut s = scenario;
            if let Some(m) = mode {
                s.search.sweep_mode = *m;
            }
            sweep(&s, out)
        }
        Command::Optimize { x, .. } => {
            let mut s = scenario;
            if let Some(x) = x {
                s.ris.x = *x;
            }
            optimize(&s, out)
        }
        Command::Cdf { optimal_tilt, .. } => cdf(&scenario, *optimal_tilt, out),
        Command::Coverage { optimize, .. } => coverage(&scenario, *optimize, out),
        Command::Fraunhofer { .. } => fraunhofer(&scenario, out),
    }
}

fn deployment_line(ris: &RisConfig) -> String {
    format!("ris: x = {} m, h = {} m, tilt = {} deg", exact(ris.x), exact(ris.height), sig6(ris.tilt.to_degrees()))
}

fn snapshot(s: &ScenarioFile, out: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let layout = s.scene_layout();
    let ris = s.ris_config();
    let realization = BlockerRealization::from_positions(&layout, &s.blockers.positions)?;
    let rasters = LinkRasters::compute(&layout, Some(&ris))?;
    let field = evaluate_field(&rasters, &realization.blockers);
    let report = metrics(&field);
    let grid = &field.grid;
    let nx = grid.nx();

    let mut columns = vec!["y".to_string()];
    columns.extend(grid.xs.iter().map(|&x| exact(x)));
    let raster = |cell: &dyn Fn(usize) -> String| {
        let mut t = Table { columns: columns.clone(), rows: Vec::new() };
        for (j, &y) in grid.ys.iter().enumerate() {
            let mut row = vec![exact(y)];
            row.extend((0..nx).map(|i| cell(j * nx + i)));
            t.push(row);
        }
        t
    };
    let header = Header::new("snapshot", s)
        .line(deployment_line(&ris))
        .line("layout: first column y (m), remaining column names x (m); rows ascending in y");
    let status = raster(&|k| field.status[k].code().to_string());
    let rate = raster(&|k| sig6(field.rate[k]));

    let (cascade, direct) = rasters.link_rate_averages();
    let mut summary = Table::new(&["quantity", "value"]);
    let mut kv = |k: &str, v: String| summary.push(vec![k.to_string(), v]);
    kv("n_points", report.n_points.to_string());
    kv("coverage_ratio", sig6(report.coverage_ratio));
    kv("area_avg_rate", sig6(report.area_avg_rate));
    for st in ServingStatus::ALL {
        kv(&format!("count_{}", st.name()), report.count(st).to_string());
        kv(&format!("mean_rate_{}", st.name()), report.region_mean(st).map(sig6).unwrap_or_default());
    }
    kv("cascade_link_mean_rate", sig6(cascade));
    kv("direct_link_mean_rate", sig6(direct));

    Ok(vec![
        write_file(
            out,
            "status.csv",
            &status.render(&header.clone().line("codes: 0 unserved, 1 bs-only, 2 ris-only, 3 both")),
        )?,
        write_file(out, "rate.csv", &rate.render(&header.clone().line("values: rate in bit/s/Hz")))?,
        write_file(out, "summary.csv", &summary.render(&header))?,
    ])
}

fn sweep(s: &ScenarioFile, out: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let layout = s.scene_layout();
    let spec = s.search_spec();
    let mode = s.hold_mode();
    let result = sweep_x(&spec, &layout, &s.ris_config(), mode)?;
    let base = spec.metric.pick(&result.baseline);

    let mut table = Table::new(&["x", "mean", "ci", "h_ris", "tilt_deg", "no_ris_mean", "no_ris_ci"]);
    for row in &result.rows {
        let mut cells = vec![exact(row.x)];
        match &row.best {
            Some(c) => cells.extend([
                sig6(c.value.mean),
                sig6(c.value.half_width_ci95),
                exact(c.config.height),
                sig6(c.config.tilt.to_degrees()),
            ]),
            None => cells.extend(vec![String::new(); 4]),
        }
        cells.extend([sig6(base.mean), sig6(base.half_width_ci95)]);
        table.push(cells);
    }
    let mut trace = Table::new(&["x", "h_ris", "tilt_deg", "mean", "ci"]);
    for c in &result.search.trace {
        trace.push(vec![
            exact(c.config.x),
            exact(c.config.height),
            sig6(c.config.tilt.to_degrees()),
            sig6(c.value.mean),
            sig6(c.value.half_width_ci95),
        ]);
    }
    let mut header = Header::new("sweep-x", s)
        .line(format!("metric: {}", spec.metric.name()))
        .line(format!("mode: {}", mode.name()));
    if let risdeploy_core::HoldMode::OptimizeHeightTilt { inner_draws } = mode {
        header = header.line(format!("inner draws: {inner_draws}"));
    }
    header = header.line(format!("best: {}", deployment_line(&result.search.best.config)));
    Ok(vec![
        write_file(out, "sweep.csv", &table.render(&header))?,
        write_file(out, "sweep_trace.csv", &trace.render(&header))?,
    ])
}

fn optimize(s: &ScenarioFile, out: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let layout = s.scene_layout();
    let spec = s.search_spec();
    let result = optimize_height_tilt(&spec, &layout, &s.ris_config(), s.ris.x)?;
    let mut table = Table::new(&["h", "best_tilt_deg", "mean", "ci"]);
    for opt in &result.per_height {
        let v = opt.best.value;
        table.push(vec![
            exact(opt.height),
            sig6(opt.best.config.tilt.to_degrees()),
            sig6(v.mean),
            sig6(v.half_width_ci95),
        ]);
    }
    let mut trace = Table::new(&["h", "tilt_deg", "mean", "ci"]);
    for c in &result.trace {
        trace.push(vec![
            exact(c.config.height),
            sig6(c.config.tilt.to_degrees()),
            sig6(c.value.mean),
            sig6(c.value.half_width_ci95),
        ]);
    }
    let skipped: Vec<String> = result.skipped_heights.iter().map(|&h| exact(h)).collect();
    let header = Header::new("optimize", s)
        .line(format!("metric: {}", spec.metric.name()))
        .line(format!("skipped heights (no feasible tilt): [{}]", skipped.join(", ")))
        .line(format!("best: {}", deployment_line(result.best_config())));
    Ok(vec![
        write_file(out, "optimize.csv", &table.render(&header))?,
        write_file(out, "optimize_trace.csv", &trace.render(&header))?,
    ])
}

/// Best tilt at the configured position and height.
fn tilt_optimized(s: &ScenarioFile) -> anyhow::Result<RisConfig> {
    let spec = SearchSpec { h_values: vec![s.ris.height], ..s.search_spec() };
    Ok(optimize_height_tilt(&spec, &s.scene_layout(), &s.ris_config(), s.ris.x)?.best.config)
}

fn cdf_table(cdf: &RateCdf) -> Table {
    let mut t = Table::new(&["rate", "cdf"]);
    for (r, f) in cdf.steps() {
        t.push(vec![sig6(r), sig6(f)]);
    }
    t
}

fn cdf(s: &ScenarioFile, optimal_tilt: bool, out: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let layout = s.scene_layout();
    let ris = if optimal_tilt { tilt_optimized(s)? } else { s.ris_config() };
    let (lambda, n, seed) = (s.blockers.lambda_b, s.run.n_draws, s.run.seed);
    let with = rate_cdf(&layout, Some(&ris), lambda, n, seed)?;
    let without = rate_cdf(&layout, None, lambda, n, seed)?;
    let header = |label: &str, c: &RateCdf| {
        Header::new("cdf", s)
            .line(deployment_line(&ris))
            .line(format!("deployment: {label}"))
            .line(format!("tilt: {}", if optimal_tilt { "searched" } else { "as configured" }))
            .line(format!("samples: {}", c.len()))
            .line(format!("median: {}", sig6(c.median())))
            .line("rows: distinct rates with the fraction of samples at or below")
    };
    Ok(vec![
        write_file(out, "cdf_ris.csv", &cdf_table(&with).render(&header("ris", &with)))?,
        write_file(out, "cdf_no_ris.csv", &cdf_table(&without).render(&header("no-ris", &without)))?,
    ])
}

fn coverage(s: &ScenarioFile, optimize: bool, out: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let layout = s.scene_layout();
    let ris = if optimize {
        optimize_height_tilt(&s.search_spec(), &layout, &s.ris_config(), s.ris.x)?.best.config
    } else {
        s.ris_config()
    };
    let draws = DrawSet::sample(&layout, s.blockers.lambda_b, s.run.n_draws, s.run.seed)?;
    let with = draws.estimate(&LinkRasters::compute(&layout, Some(&ris))?);
    let without = draws.estimate(&LinkRasters::without_ris(&layout)?);
    let mut t = Table::new(&["deployment", "coverage_mean", "coverage_ci", "rate_mean", "rate_ci"]);
    for (name, e) in [("ris", with), ("no_ris", without)] {
        t.push(vec![
            name.to_string(),
            sig6(e.coverage.mean),
            sig6(e.coverage.half_width_ci95),
            sig6(e.rate.mean),
            sig6(e.rate.half_width_ci95),
        ]);
    }
    let header = Header::new("coverage", s)
        .line(deployment_line(&ris))
        .line(format!("deployment: {}", if optimize { "searched height and tilt" } else { "as configured" }));
    Ok(vec![write_file(out, "coverage.csv", &t.render(&header))?])
}

fn fraunhofer(s: &ScenarioFile, out: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let line = fraunhofer_line(s);
    println!("{line}");
    let ris = s.ris_config();
    let mut t = Table::new(&["n_elements", "elem_a_m", "elem_b_m", "wavelength_m", "distance_m", "quoted_m"]);
    t.push(vec![
        ris.n_elements().to_string(),
        exact(ris.elem_a),
        exact(ris.elem_b),
        exact(s.wavelength()),
        sig6(risdeploy_core::fraunhofer_distance(ris.n_elements(), ris.elem_a, ris.elem_b, s.wavelength())),
        exact(crate::output::QUOTED_FRAUNHOFER_M),
    ]);
    Ok(vec![write_file(out, "fraunhofer.csv", &t.render(&Header::new("fraunhofer", s)))?])
}
