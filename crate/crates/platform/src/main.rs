use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::{Arc, RwLock};

use clap::{Args, Parser, Subcommand};
use cleanroute_core::exposure::DEFAULT_HOUR;
use cleanroute_core::fixtures::CorridorCity;
use cleanroute_core::routegen::DEFAULT_K;
use cleanroute_platform::import::{corridor_import, import_feedback, ImportDoc};
use cleanroute_platform::model::FeedbackRecord;
use cleanroute_platform::report::{build_report, ReportFormat};
use cleanroute_platform::service::DEFAULT_SNAP_TOLERANCE_M;
use cleanroute_platform::{http, Config, Platform, PlatformError};
use serde_json::json;

/// Low-exposure school route study platform.
#[derive(Parser)]
#[command(name = "cleanroute", version)]
struct Cli {
    /// Store file; created on first write.
    #[arg(long, env = "CLEANROUTE_STORE", global = true)]
    store: Option<PathBuf>,
    /// Max distance between a trace's endpoints and home/school, meters.
    #[arg(long, default_value_t = DEFAULT_SNAP_TOLERANCE_M, global = true)]
    snap_tolerance: f64,
    /// An alternative counts as beneficial above this delta, ug/m3.
    #[arg(long, default_value_t = 0.0, global = true)]
    beneficial_threshold: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate a street network document.
    IngestNetwork {
        #[arg(long)]
        network: PathBuf,
    },
    /// Load ESRI ASCII concentration grids, one per hour.
    IngestRaster {
        /// HOUR=PATH, repeatable.
        #[arg(long = "raster", required = true, value_parser = parse_raster_arg)]
        rasters: Vec<(u8, PathBuf)>,
    },
    /// Import participants and route records.
    ImportRoutes {
        #[arg(long)]
        input: PathBuf,
    },
    /// Import feedback questionnaires.
    ImportFeedback {
        #[arg(long)]
        input: PathBuf,
    },
    /// Analyze every stored route.
    AnalyzeAll(AnalyzeArgs),
    /// Emit the cohort report.
    Report {
        #[arg(long)]
        project: Option<String>,
        #[arg(long, default_value = "json")]
        format: String,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
    /// Write the corridor-city demo inputs into a directory.
    DemoFixture {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    project: Option<String>,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    #[arg(long, default_value_t = DEFAULT_HOUR)]
    hour: u8,
    /// Also issue a package for every analyzed route.
    #[arg(long)]
    packages: bool,
}

fn parse_raster_arg(s: &str) -> Result<(u8, PathBuf), String> {
    let (hour, path) = s.split_once('=').ok_or("expected HOUR=PATH")?;
    let hour = hour
        .parse()
        .map_err(|_| format!("hour {hour:?} is not an integer 0-23"))?;
    Ok((hour, PathBuf::from(path)))
}

fn read_file(path: &Path) -> Result<Vec<u8>, PlatformError> {
    std::fs::read(path).map_err(|e| PlatformError::Invalid(format!("{}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, PlatformError> {
    serde_json::from_slice(&read_file(path)?)
        .map_err(|e| PlatformError::Invalid(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), PlatformError> {
    std::fs::write(path, bytes)
        .map_err(|e| PlatformError::Storage(format!("{}: {e}", path.display())))
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json"));
}

fn open(cli: &Cli) -> Result<Platform, PlatformError> {
    let path = cli.store.as_deref().ok_or_else(|| {
        PlatformError::Invalid("no store given (--store or CLEANROUTE_STORE)".into())
    })?;
    let config = Config {
        snap_tolerance_m: cli.snap_tolerance,
        beneficial_threshold_ugm3: cli.beneficial_threshold,
    };
    Platform::open(path, config)
}

fn analyze_all(p: &mut Platform, args: &AnalyzeArgs) -> Result<bool, PlatformError> {
    p.set_autosave(false);
    let keys: Vec<String> = p
        .routes_in(args.project.as_deref())
        .into_iter()
        .map(|(k, _)| k.clone())
        .collect();
    let (mut analyzed, mut packages, mut failed) = (0, 0, Vec::new());
    for key in &keys {
        let result = p
            .compute_alternatives(key, Some(args.k), Some(args.hour))
            .map(|_| ())
            .and_then(|()| {
                analyzed += 1;
                if args.packages {
                    p.issue_package(key)?;
                    packages += 1;
                }
                Ok(())
            });
        if let Err(e) = result {
            // Missing inputs fail every route alike.
            if matches!(e, PlatformError::Conflict(_)) && analyzed == 0 {
                return Err(e);
            }
            failed.push(json!({ "route": key, "error": e.to_json()["error"] }));
        }
    }
    p.flush()?;
    let ok = failed.is_empty();
    print_json(
        &json!({ "routes": keys.len(), "analyzed": analyzed, "packages": packages, "failed": failed }),
    );
    Ok(ok)
}

fn run(cli: &Cli) -> Result<bool, PlatformError> {
    match &cli.command {
        Command::IngestNetwork { network } => {
            let mut p = open(cli)?;
            let report = p.ingest_network(&read_file(network)?)?;
            let g = p.graph().expect("just ingested");
            print_json(&json!({
                "nodes": g.node_count(),
                "edges": g.edge_count(),
                "crs": g.crs(),
                "warnings": report.violations,
            }));
        }
        Command::IngestRaster { rasters } => {
            let mut p = open(cli)?;
            p.set_autosave(false);
            let mut hours = Vec::new();
            for (hour, path) in rasters {
                p.ingest_raster(*hour, &read_file(path)?)
                    .map_err(|e| PlatformError::Invalid(format!("{}: {e}", path.display())))?;
                hours.push(*hour);
            }
            p.flush()?;
            print_json(&json!({ "hours": hours }));
        }
        Command::ImportRoutes { input } => {
            let doc: ImportDoc = read_json(input)?;
            let mut p = open(cli)?;
            p.set_autosave(false);
            let counts = doc.apply(&mut p)?;
            p.flush()?;
            print_json(&serde_json::to_value(counts).expect("json"));
        }
        Command::ImportFeedback { input } => {
            let records: Vec<FeedbackRecord> = read_json(input)?;
            let mut p = open(cli)?;
            p.set_autosave(false);
            let counts = import_feedback(&mut p, records)?;
            p.flush()?;
            print_json(&serde_json::to_value(counts).expect("json"));
        }
        Command::AnalyzeAll(args) => {
            let mut p = open(cli)?;
            return analyze_all(&mut p, args);
        }
        Command::Report {
            project,
            format,
            out,
        } => {
            let format: ReportFormat = format.parse()?;
            let p = open(cli)?;
            let bytes = build_report(&p, project.as_deref()).render(format);
            match out {
                Some(path) => write_file(path, &bytes)?,
                None => {
                    use std::io::Write;
                    std::io::stdout()
                        .write_all(&bytes)
                        .map_err(|e| PlatformError::Storage(e.to_string()))?;
                }
            }
        }
        Command::Serve { addr } => {
            let p = open(cli)?;
            let rt = tokio::runtime::Runtime::new()
                .map_err(|e| PlatformError::Storage(e.to_string()))?;
            rt.block_on(http::serve(Arc::new(RwLock::new(p)), addr))
                .map_err(|e| PlatformError::Storage(format!("server: {e}")))?;
        }
        Command::DemoFixture { out } => {
            std::fs::create_dir_all(out)
                .map_err(|e| PlatformError::Storage(format!("{}: {e}", out.display())))?;
            let city = CorridorCity::standard();
            write_file(&out.join("network.json"), &city.network_json())?;
            write_file(
                &out.join("raster_08.asc"),
                city.raster.to_ascii_grid().as_bytes(),
            )?;
            let doc = corridor_import(&city, "corridor");
            write_file(
                &out.join("routes.json"),
                &serde_json::to_vec_pretty(&doc).expect("json"),
            )?;
            print_json(&json!({ "dir": out, "pairs": city.pairs.len() }));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", e.to_json());
            match e {
                PlatformError::Invalid(_) | PlatformError::Domain(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
