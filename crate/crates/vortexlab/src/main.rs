use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;
use vortexlab::config::{EvolveMethod, LapPoint, RunConfig, Stage};
use vortexlab::{pipeline, ProfileKind};

#[derive(Parser)]
#[command(name = "vortexlab", version, about = "Spectral density, Green's kernels and linearized evolution around a radial vortex")]
struct Cli {
    /// TOML run configuration; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// worker threads for the parallel sweeps
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// seed recorded in the manifest (only property tests draw random numbers)
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Algebraic,
    Gaussian,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Repr,
    Timestep,
    Both,
}

#[derive(Args, Default)]
struct GridArgs {
    /// grid spacing in v
    #[arg(long)]
    grid_h: Option<f64>,
    /// v range as MIN,MAX
    #[arg(long, value_delimiter = ',', num_args = 2, allow_hyphen_values = true)]
    domain: Option<Vec<f64>>,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the profile coefficients and check the structural assumptions
    Profile {
        #[arg(long, value_enum)]
        kind: Option<Kind>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Long-range Green's kernel and its weighted bound ratios
    Green {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        k: Option<Vec<i64>>,
        #[arg(long, allow_hyphen_values = true)]
        w: Option<f64>,
        #[arg(long)]
        grid_h: Option<f64>,
    },
    /// Spectral density limits Γ_k(·, w) with trace, jump, PV and depletion checks
    Sdf {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        k: Option<Vec<i64>>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        w_list: Option<Vec<f64>>,
        #[arg(long)]
        eps0: Option<f64>,
        #[arg(long)]
        eps_levels: Option<usize>,
        #[command(flatten)]
        grid: GridArgs,
        /// two-column CSV (v, f0)
        #[arg(long)]
        data: Option<PathBuf>,
        /// also compare against the |k| = 1 closed form and run the jump/PV checks
        #[arg(long)]
        oracle_check: bool,
    },
    /// Time evolution from the representation formula and/or the timestepper
    Evolve {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        k: Option<Vec<i64>>,
        #[arg(long, value_delimiter = ',')]
        t_list: Option<Vec<f64>>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, value_enum)]
        method: Option<Method>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        windows: Option<Vec<f64>>,
    },
    /// Spectrum of the linearized operator and limiting-absorption sweeps
    Spectrum {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        k: Option<Vec<i64>>,
        #[command(flatten)]
        grid: GridArgs,
        /// W:EPS pairs, ε in units of e^{−2|w|}, e.g. 0:1e-3,-14:1e-4
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        lap: Option<Vec<String>>,
    },
    /// Consistency checks; exits nonzero if any fails
    Verify {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        k: Option<Vec<i64>>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        w_list: Option<Vec<f64>>,
    },
    /// Run the stages listed in the configuration
    Run {
        #[arg(long, value_delimiter = ',')]
        stages: Option<Vec<String>>,
    },
    /// Print the default configuration as TOML
    DefaultConfig,
}

fn apply_grid(cfg: &mut vortexlab::config::GridConfig, g: &GridArgs) {
    if let Some(h) = g.grid_h {
        cfg.h = h;
    }
    if let Some(d) = &g.domain {
        cfg.v_min = d[0];
        cfg.v_max = d[1];
    }
}

fn parse_stage(s: &str) -> Result<Stage, String> {
    Ok(match s {
        "profile" => Stage::Profile,
        "green" => Stage::Green,
        "sdf" => Stage::Sdf,
        "evolve" => Stage::Evolve,
        "spectrum" => Stage::Spectrum,
        "verify" => Stage::Verify,
        _ => return Err(format!("unknown stage `{s}`")),
    })
}

fn parse_lap(s: &str) -> Result<LapPoint, String> {
    let (w, e) = s.split_once(':').ok_or_else(|| format!("lap point `{s}` is not W:EPS"))?;
    let w = w.trim().parse().map_err(|_| format!("bad w in `{s}`"))?;
    let eps = e.trim().parse().map_err(|_| format!("bad eps in `{s}`"))?;
    Ok(LapPoint { w, eps })
}

fn build_config(cli: &Cli) -> Result<RunConfig, String> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(|e| e.to_string())?,
        None => RunConfig::default(),
    };
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    match &cli.command {
        Command::Profile { kind, grid } => {
            cfg.stages = vec![Stage::Profile];
            if let Some(k) = kind {
                cfg.profile = match k {
                    Kind::Algebraic => ProfileKind::Algebraic,
                    Kind::Gaussian => ProfileKind::Gaussian,
                };
            }
            apply_grid(&mut cfg.grid, grid);
        }
        Command::Green { k, w, grid_h } => {
            cfg.stages = vec![Stage::Green];
            if let Some(k) = k {
                cfg.modes = k.clone();
            }
            if let Some(w) = w {
                cfg.green.w = *w;
            }
            if let Some(h) = grid_h {
                cfg.green.h = *h;
            }
        }
        Command::Sdf { k, w_list, eps0, eps_levels, grid, data, oracle_check } => {
            cfg.stages = vec![Stage::Sdf];
            if *oracle_check {
                cfg.stages.push(Stage::Verify);
            }
            if let Some(k) = k {
                cfg.modes = k.clone();
            }
            if let Some(w) = w_list {
                cfg.w_list = w.clone();
            }
            if let Some(e) = eps0 {
                cfg.eps.eps0 = *e;
            }
            if let Some(l) = eps_levels {
                cfg.eps.levels = *l;
            }
            apply_grid(&mut cfg.grid, grid);
            if data.is_some() {
                cfg.data.file = data.clone();
            }
        }
        Command::Evolve { k, t_list, data, method, windows } => {
            cfg.stages = vec![Stage::Evolve];
            if let Some(k) = k {
                cfg.modes = k.clone();
            }
            if let Some(t) = t_list {
                cfg.evolve.times = t.clone();
            }
            if data.is_some() {
                cfg.data.file = data.clone();
            }
            if let Some(m) = method {
                cfg.evolve.method = match m {
                    Method::Repr => EvolveMethod::Repr,
                    Method::Timestep => EvolveMethod::Timestep,
                    Method::Both => EvolveMethod::Both,
                };
            }
            if let Some(w) = windows {
                cfg.evolve.windows = w.clone();
            }
        }
        Command::Spectrum { k, grid, lap } => {
            cfg.stages = vec![Stage::Spectrum];
            if let Some(k) = k {
                cfg.modes = k.clone();
            }
            apply_grid(&mut cfg.spectrum.grid, grid);
            if let Some(l) = lap {
                cfg.spectrum.lap = l.iter().map(|s| parse_lap(s)).collect::<Result<_, _>>()?;
            }
        }
        Command::Verify { k, w_list } => {
            cfg.stages = vec![Stage::Verify];
            if let Some(k) = k {
                cfg.modes = k.clone();
            }
            if let Some(w) = w_list {
                cfg.w_list = w.clone();
            }
        }
        Command::Run { stages } => {
            if let Some(s) = stages {
                cfg.stages = s.iter().map(|x| parse_stage(x)).collect::<Result<_, _>>()?;
            }
        }
        Command::DefaultConfig => {}
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::DefaultConfig = cli.command {
        match RunConfig::default().to_toml() {
            Ok(s) => {
                print!("{s}");
                return ExitCode::SUCCESS;
            }
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::FAILURE;
            }
        }
    }
    let cfg = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(n) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot set thread count: {e}");
            return ExitCode::FAILURE;
        }
    }
    let (manifest, failure) = pipeline::run(&cfg);
    match manifest.write(&cfg.out) {
        Ok(path) => eprintln!("manifest written to {}", path.display()),
        Err(e) => {
            eprintln!("error: cannot write manifest: {e}");
            return ExitCode::FAILURE;
        }
    }
    for s in &manifest.stages {
        eprintln!("{:<9} {:>8.2}s  {} file(s)", s.stage, s.seconds, s.files.len());
    }
    match failure {
        Some(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
        None => ExitCode::SUCCESS,
    }
}
