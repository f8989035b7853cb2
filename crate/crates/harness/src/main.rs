use std::collections::BTreeMap;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;

use chrono::Utc;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use stereo_core::geometry::{build_level_table, DEFAULT_LEVELS};
use stereo_core::oracle::{detect_orientation, estimate_disparity, OrientationEstimate};
use stereo_core::renderer::{render, DEFAULT_DOT_COVERAGE};
use stereo_core::staircase::{simulate, SimulatedObserver};
use stereo_core::stats::analyze;
use stereo_core::{DisplayProfile, LevelTable, Orientation, StereogramSpec};
use stereo_harness::server::{self, AppState, DEFAULT_PORT};
use stereo_harness::session::{SessionRecord, SessionStore};
use stereo_harness::{dataset, png, presets, report, HarnessError, Result};

#[derive(Parser)]
#[command(name = "stereotest", version, about = "Random-dot stereoacuity stimuli, staircases and agreement statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the disparity level table for a display and distance.
    Levels {
        #[command(flatten)]
        display: DisplayArgs,
        #[arg(long)]
        distance: f64,
        #[arg(long, default_value_t = DEFAULT_LEVELS)]
        n: usize,
        #[arg(long)]
        json: bool,
    },
    /// Render one stimulus to a PNG file.
    Render {
        #[command(flatten)]
        display: DisplayArgs,
        #[arg(long)]
        distance: f64,
        /// 1 is the finest level.
        #[arg(long)]
        level: usize,
        #[arg(long, default_value = "up")]
        orientation: Orientation,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_DOT_COVERAGE)]
        coverage: f64,
        #[arg(long, default_value_t = DEFAULT_LEVELS)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recover disparity and gap orientation from a rendered PNG.
    Decode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 12)]
        search_range: u32,
        /// With a display and distance, the lag is also reported in arcsec.
        #[command(flatten)]
        display: OptionalDisplayArgs,
        #[arg(long)]
        distance: Option<f64>,
    },
    /// Run staircases against a simulated observer.
    Simulate {
        /// `deterministic:THETA` or `psychometric:THETA,SLOPE,LAPSE`.
        #[arg(long)]
        observer: String,
        #[command(flatten)]
        display: DisplayArgs,
        #[arg(long)]
        distance: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        runs: usize,
        #[arg(long, default_value_t = DEFAULT_LEVELS)]
        n: usize,
    },
    /// Summaries and agreement statistics for a measurement CSV.
    Analyze {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Also write the JSON report here.
        #[arg(long)]
        json_out: Option<PathBuf>,
    },
    /// Serve the session API on loopback.
    Serve {
        #[arg(long, env = "STEREO_PORT", default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
        bind: IpAddr,
        /// JSON-lines file for session persistence; existing sessions are restored.
        #[arg(long)]
        store: Option<PathBuf>,
    },
}

#[derive(Args)]
struct DisplayArgs {
    /// Named preset, e.g. ipad-retina-264.
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    ppi: Option<f64>,
    #[arg(long, requires = "height")]
    width: Option<u32>,
    #[arg(long, requires = "width")]
    height: Option<u32>,
}

impl DisplayArgs {
    fn resolve(&self) -> Result<DisplayProfile> {
        presets::resolve(self.profile.as_deref(), self.ppi, self.width.zip(self.height))
    }
}

#[derive(Args)]
struct OptionalDisplayArgs {
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    ppi: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Levels { display, distance, n, json } => {
            let table = build_level_table(&display.resolve()?, distance, n)?;
            if json {
                print_json(&table)?;
            } else {
                print_levels(&table);
            }
        }
        Command::Render { display, distance, level, orientation, seed, coverage, n, out } => {
            let profile = display.resolve()?;
            let table = build_level_table(&profile, distance, n)?;
            let mut spec = StereogramSpec::new(profile, distance, *table.level(level)?, orientation, seed);
            spec.dot_coverage = coverage;
            png::write(&out, &render(&spec)?)?;
            let l = table.level(level)?;
            eprintln!("wrote {} ({} arcsec, {} px shift)", out.display(), l.arcsec_rounded, l.pixel_shift);
        }
        Command::Decode { input, search_range, display, distance } => {
            let profile = match (display.profile.as_deref(), display.ppi) {
                (None, None) => None,
                (p, ppi) => Some(presets::resolve(p, ppi, None)?),
            };
            print_json(&decode(&input, search_range, profile.zip(distance))?)?;
        }
        Command::Simulate { observer, display, distance, seed, runs, n } => {
            if runs == 0 {
                return Err(HarnessError::Usage("--runs must be at least 1".into()));
            }
            let profile = display.resolve()?;
            let table = build_level_table(&profile, distance, n)?;
            print_json(&simulate_runs(&observer, profile, &table, seed, runs)?)?;
        }
        Command::Analyze { input, format, json_out } => {
            let records = dataset::read_path(&input)?;
            let report = analyze(&records)?;
            if let Some(path) = json_out {
                let text = serde_json::to_string_pretty(&report)?;
                std::fs::write(&path, text).map_err(|e| HarnessError::Usage(format!("{}: {e}", path.display())))?;
            }
            match format {
                Format::Text => print!("{}", report::render_text(&report)),
                Format::Json => print_json(&report)?,
            }
            if !report.warnings.is_empty() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Serve { port, bind, store } => {
            let app = match store {
                Some(path) => AppState::restore(SessionStore::open(path)?)?,
                None => AppState::new(None),
            };
            let runtime = tokio::runtime::Runtime::new().map_err(|e| HarnessError::Usage(e.to_string()))?;
            runtime.block_on(server::serve(SocketAddr::new(bind, port), app))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn print_levels(table: &LevelTable) {
    println!("distance {} m (reference {} m)", table.distance_m, table.reference_distance_m);
    println!("{:>5}  {:>8}  {:>10}  {:>7}", "level", "shift_px", "arcsec", "rounded");
    for l in &table.levels {
        println!("{:>5}  {:>8}  {:>10.3}  {:>7}", l.index, l.pixel_shift, l.arcsec, l.arcsec_rounded);
    }
}

#[derive(Serialize)]
struct DecodeReport {
    width: usize,
    height: usize,
    dot_px: usize,
    block_px: usize,
    stride_px: usize,
    blocks: usize,
    lag_histogram: Vec<(i32, usize)>,
    dominant_lag: Option<i32>,
    orientation: Option<OrientationEstimate>,
    arcsec: Option<f64>,
}

fn decode(input: &std::path::Path, search_range: u32, geometry: Option<(DisplayProfile, f64)>) -> Result<DecodeReport> {
    let img = png::read(input)?;
    let map = estimate_disparity(&img, search_range)?;
    let dominant_lag = map.dominant_figure_lag();
    let orientation = dominant_lag.and_then(|lag| detect_orientation(&map, lag, None).ok());
    let arcsec = match (geometry, dominant_lag) {
        (Some((profile, distance)), Some(lag)) => {
            Some(stereo_core::geometry::disparity_arcsec(lag.unsigned_abs(), &profile, distance)?)
        }
        _ => None,
    };
    Ok(DecodeReport {
        width: map.image_width,
        height: map.image_height,
        dot_px: map.dot_px,
        block_px: map.block_px,
        stride_px: map.stride_px,
        blocks: map.lags.len(),
        lag_histogram: map.lag_histogram(),
        dominant_lag,
        orientation,
        arcsec,
    })
}

fn parse_observer(text: &str, seed: u64) -> Result<SimulatedObserver> {
    let bad = || HarnessError::Usage(format!("cannot parse observer {text:?}"));
    let (kind, params) = text.split_once(':').ok_or_else(bad)?;
    let values: Vec<f64> =
        params.split(',').map(|v| v.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
    let observer = match (kind.trim(), values.as_slice()) {
        ("deterministic", &[theta]) => SimulatedObserver::deterministic(theta),
        ("psychometric", &[theta, slope, lapse]) => SimulatedObserver::psychometric(theta, slope, lapse, seed),
        _ => return Err(bad()),
    };
    observer.validate()?;
    Ok(observer)
}

#[derive(Serialize)]
struct SimulationSummary {
    runs: usize,
    /// Rounded arcsec (or "OL") to run count.
    outcomes: BTreeMap<String, usize>,
    mean_trials: f64,
    mean_elapsed_ms: f64,
}

#[derive(Serialize)]
struct SimulationReport {
    observer: SimulatedObserver,
    sessions: Vec<SessionRecord>,
    summary: SimulationSummary,
}

fn simulate_runs(
    observer_text: &str,
    profile: DisplayProfile,
    table: &LevelTable,
    seed: u64,
    runs: usize,
) -> Result<SimulationReport> {
    let mut ids = ChaCha8Rng::seed_from_u64(seed);
    let mut sessions = Vec::with_capacity(runs);
    for run in 0..runs {
        let run_seed = seed.wrapping_add(run as u64);
        let observer = parse_observer(observer_text, run_seed)?;
        let state = simulate(&observer, table, run_seed)?;
        let mut bytes = [0u8; 16];
        ids.fill_bytes(&mut bytes);
        let id = uuid::Builder::from_random_bytes(bytes).into_uuid();
        sessions.push(SessionRecord::from_state(id, Utc::now(), profile, &state));
    }
    let mut outcomes = BTreeMap::new();
    for s in &sessions {
        let key = s.outcome.map_or_else(|| "unfinished".to_string(), |a| a.to_string());
        *outcomes.entry(key).or_insert(0) += 1;
    }
    let trials: usize = sessions.iter().map(|s| s.trials.len()).sum();
    let elapsed: u64 = sessions.iter().flat_map(|s| &s.trials).map(|t| t.elapsed_ms).sum();
    Ok(SimulationReport {
        observer: parse_observer(observer_text, seed)?,
        summary: SimulationSummary {
            runs,
            outcomes,
            mean_trials: trials as f64 / runs as f64,
            mean_elapsed_ms: elapsed as f64 / runs as f64,
        },
        sessions,
    })
}
