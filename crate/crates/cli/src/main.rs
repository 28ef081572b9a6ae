mod config;
mod error;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use semithermo::branches::build_family;
use semithermo::csv::{complex_cells, real};
use semithermo::measures::{
    build_grid, build_ulam_with, invariance_residual, jacobian_residual, leading_triple, triple_csv,
};
use semithermo::potential::gap_check;
use semithermo::semigroup::{check_conditions, julia_backward_sample_seeded};
use semithermo::transfer::{pressure_global, spread_sample};
use semithermo::JuliaCloud;

use config::RunConfig;
use error::CliError;

#[derive(Parser)]
#[command(name = "semithermo", version, about = "Thermodynamic formalism for rational semigroups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output directory (overrides the config)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// random seed (overrides the config)
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Sample the Julia set; write the cloud and a PPM raster
    Julia,
    /// Pointwise pressure at sampled base points
    Pressure,
    /// Ulam matrix, leading eigen-triple and residual checks
    Spectrum,
    /// Heuristic checks of the semigroup conditions and the pressure gap
    Check,
    /// Pruned families of inverse branches
    Branches,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Julia => "julia",
            Command::Pressure => "pressure",
            Command::Spectrum => "spectrum",
            Command::Check => "check",
            Command::Branches => "branches",
        }
    }
}

/// Writes files into the output directory, each opening with the run header.
struct Output {
    dir: PathBuf,
    header: String,
}

impl Output {
    fn new(dir: &Path, cmd: Command, seed: u64) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
        Ok(Output {
            dir: dir.to_path_buf(),
            header: format!("# semithermo {} command={} seed={}", env!("CARGO_PKG_VERSION"), cmd.name(), seed),
        })
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::Io { path: path.clone(), source: e })?;
        println!("wrote {}", path.display());
        Ok(())
    }

    fn csv(&self, name: &str, body: &str) -> Result<(), CliError> {
        self.write(name, format!("{}\n{body}", self.header).as_bytes())
    }
}

fn cloud(cfg: &RunConfig, samples: usize) -> Result<JuliaCloud, CliError> {
    Ok(julia_backward_sample_seeded(&cfg.gens, cfg.sampling.params(samples), cfg.seed)?)
}

fn julia(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let j = &cfg.julia;
    if j.half_width.is_nan() || j.half_width <= 0.0 || j.resolution == 0 {
        return Err(CliError::Config("`julia.half_width` and `julia.resolution` must be positive".into()));
    }
    let cloud = cloud(cfg, cfg.sampling.samples)?;
    let mut body = String::from("index,re,im\n");
    for (i, &z) in cloud.points.iter().enumerate() {
        writeln!(body, "{i},{}", complex_cells(z)).unwrap();
    }
    out.csv("julia_cloud.csv", &body)?;

    let n = j.resolution;
    let mut pixels = vec![255u8; 3 * n * n];
    let (x0, y1) = (j.center[0] - j.half_width, j.center[1] + j.half_width);
    let scale = n as f64 / (2.0 * j.half_width);
    for z in cloud.points.iter().filter_map(|z| z.finite()) {
        let (px, py) = ((z.re - x0) * scale, (y1 - z.im) * scale);
        if px >= 0.0 && py >= 0.0 && px < n as f64 && py < n as f64 {
            let k = 3 * (py as usize * n + px as usize);
            pixels[k..k + 3].fill(0);
        }
    }
    let mut ppm = format!("P6\n{}\n{n} {n}\n255\n", out.header).into_bytes();
    ppm.extend_from_slice(&pixels);
    out.write("julia.ppm", &ppm)
}

fn pressure(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let p = &cfg.pressure;
    let cloud = cloud(cfg, cfg.sampling.samples)?;
    let points = spread_sample(&cloud.points, p.points);
    let global = pressure_global(&cfg.gens, &cfg.potential, &points, p.n_max, p.mode(cfg.seed))?;
    let mut summary = String::from("point,z_re,z_im,estimate,dispersion,method,samples\n");
    for (i, e) in global.estimates.iter().enumerate() {
        out.csv(&format!("pressure_point_{i}.csv"), &e.to_csv())?;
        writeln!(
            summary,
            "{i},{},{},{},{},{}",
            complex_cells(e.z),
            real(e.estimate),
            real(e.dispersion),
            e.method.as_str(),
            e.samples
        )
        .unwrap();
    }
    writeln!(summary, "summary,estimate,dispersion,spread").unwrap();
    writeln!(
        summary,
        "summary,{},{},{}",
        real(global.max),
        real(global.max_dispersion()),
        real(global.spread)
    )
    .unwrap();
    out.csv("pressure_summary.csv", &summary)?;
    println!("pressure {} (dispersion {:e}, spread {:e})", global.max, global.max_dispersion(), global.spread);
    Ok(())
}

fn spectrum(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let s = &cfg.spectrum;
    let cloud = cloud(cfg, s.cloud_samples)?;
    let grid = build_grid(&cloud, s.cells)?;
    let op = build_ulam_with(&cfg.gens, &cfg.potential, &grid, s.samples_per_cell)?;
    let triple = leading_triple(&op, s.tol, s.max_iter)?;
    out.csv("spectrum_triple.csv", &triple_csv(&grid, &op, &triple))?;
    let (rh, rm) = triple.residuals(&op);
    // a missing injective sample is reported as nan rather than aborting the run
    let jac = match jacobian_residual(&cfg.gens, &cfg.potential, &grid, &op, &triple, s.jacobian_pairs) {
        Ok(r) => r.residual,
        Err(semithermo::Error::NoInjectiveSamples) => f64::NAN,
        Err(e) => return Err(e.into()),
    };
    let inv = invariance_residual(&cfg.gens, &grid, &op, &triple, s.invariance_quanta, cfg.seed)?;
    let mut body = String::from("field,value\n");
    for (k, v) in [
        ("lambda", triple.lambda),
        ("log_lambda", triple.log_lambda()),
        ("leak", op.leak()),
        ("residual_h", rh),
        ("residual_m", rm),
        ("iterations", triple.iterations as f64),
        ("jacobian_residual", jac),
        ("invariance_residual", inv),
    ] {
        writeln!(body, "{k},{}", real(v)).unwrap();
    }
    out.csv("spectrum_residuals.csv", &body)?;
    println!("log lambda {} (residuals {rh:e}, {rm:e})", triple.log_lambda());
    let limit = 10.0 * s.tol;
    if !(rh < limit && rm < limit) {
        return Err(CliError::Residual(format!("eigen-residuals {rh:e}, {rm:e} above {limit:e}")));
    }
    Ok(())
}

fn check(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let c = &cfg.check;
    let cloud = cloud(cfg, cfg.sampling.samples)?;
    let cond = check_conditions(&cfg.gens, &cloud, c.orbit_length)?;
    let points = spread_sample(&cloud.points, c.points);
    let global = pressure_global(&cfg.gens, &cfg.potential, &points, c.n_max, cfg.pressure.mode(cfg.seed))?;
    let gap = gap_check(&cfg.potential, &cfg.gens, global.max, &cloud)?;
    let mut body = String::from("field,value\n");
    let witness = cond
        .e3_witness
        .as_ref()
        .map(|(j, _, w)| format!("generator {j} word {w:?}").replace(',', ""))
        .unwrap_or_default();
    for (k, v) in [
        ("e1", cond.e1.as_str().to_string()),
        ("e2_sufficient", cond.e2_sufficient.as_str().to_string()),
        ("e3_heuristic", cond.e3_heuristic.as_str().to_string()),
        ("e3_witness", witness),
        ("min_cv_distance", real(cond.min_cv_distance)),
        ("delta", real(cond.delta)),
        ("spacing", real(cond.spacing)),
        ("orbit_length", cond.orbit_length.to_string()),
        ("words_checked", cond.words_checked.to_string()),
        ("pressure", real(gap.pressure)),
        ("sup_psi", real(gap.sup)),
        ("inf_psi", real(gap.inf)),
        ("log_s", real(gap.log_s)),
        ("log_degree_sum", real(gap.log_degree_sum)),
        ("gap", real(gap.gap)),
        ("slack", real(gap.slack)),
        ("hypothesis_holds", gap.hypothesis_holds().to_string()),
        ("sufficient_condition_holds", gap.sufficient_condition_holds().to_string()),
    ] {
        writeln!(body, "{k},{v}").unwrap();
    }
    out.csv("check.csv", &body)
}

fn branches(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let b = cfg
        .branches
        .as_ref()
        .ok_or_else(|| CliError::Config("missing `branches` section".into()))?;
    let report = build_family(&cfg.gens, &b.params(cfg.seed))?;
    out.csv("branches.csv", &report.to_csv())?;
    if let Some(n) = report.truncated_at {
        println!("family died out at level {n}");
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let cfg = RunConfig::load(path, cli.seed, cli.out.clone())?;
    let out = Output::new(&cfg.out, cli.command, cfg.seed)?;
    match cli.command {
        Command::Julia => julia(&cfg, &out),
        Command::Pressure => pressure(&cfg, &out),
        Command::Spectrum => spectrum(&cfg, &out),
        Command::Check => check(&cfg, &out),
        Command::Branches => branches(&cfg, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
