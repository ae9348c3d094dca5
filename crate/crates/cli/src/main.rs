//! `mdflow`: batch front end for the trajectory analysis engine.
//!
//! Exit codes: 0 success, 1 validation or input error, 2 runtime node error.

use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mdflow_core::config::Config;
use mdflow_core::graph::{
    execute_trajectory, Diagnostic, Direction, Graph, GraphDocument, RunCache, RunEvent, RunObserver, Severity,
};
use mdflow_core::io::{write_ssv, ColumnSpec, ImporterRegistry};
use mdflow_core::nodes::Catalog;
use mdflow_core::output::write_artifacts;
use mdflow_core::scene::{SceneDefaults, SceneDelta};
use mdflow_core::script::{manifest_of, PortDirection};
use mdflow_core::{AttributeStore, Frame, Trajectory};
use mdflow_service::{run_options, AppState, RunRequest, DEFAULT_PORT};

#[derive(Parser)]
#[command(name = "mdflow", version, about = "Dataflow analysis of molecular dynamics trajectories")]
struct Cli {
    /// TOML file with importer plugins, host timeouts and cache budget.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a graph over a trajectory.
    Run {
        graph: PathBuf,
        #[arg(long)]
        traj: PathBuf,
        /// Half-open frame range `a:b`; either end may be omitted.
        #[arg(long)]
        frames: Option<String>,
        #[arg(long, value_parser = parse_direction)]
        direction: Option<Direction>,
        /// Directory for scenes, attributes, plots and the run report.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        no_cache: bool,
        #[arg(long)]
        continue_on_error: bool,
    },
    /// Re-emit a trajectory as canonical SSV.
    Convert {
        input: PathBuf,
        output: PathBuf,
        /// Comma-separated attribute columns to keep.
        #[arg(long, value_delimiter = ',')]
        attrs: Vec<String>,
    },
    /// Validate a graph file.
    Check { graph: PathBuf },
    /// Validate a script's annotations and print its manifest.
    CheckScript {
        script: PathBuf,
        /// Overrides the language inferred from the extension.
        #[arg(long)]
        language: Option<String>,
    },
    /// Start the HTTP and WebSocket service.
    Serve {
        #[arg(long, default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

fn parse_direction(s: &str) -> Result<Direction, String> {
    match s {
        "forward" => Ok(Direction::Forward),
        "backward" => Ok(Direction::Backward),
        _ => Err(format!("expected `forward` or `backward`, got `{s}`")),
    }
}

/// A failure and the exit code it maps to.
struct Failure(u8, String);

impl Failure {
    fn invalid(msg: impl Into<String>) -> Self {
        Failure(1, msg.into())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            if !msg.is_empty() {
                eprintln!("error: {msg}");
            }
            ExitCode::from(code)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let config = match &cli.config {
        Some(p) => Config::load(p).map_err(|e| Failure::invalid(e.to_string()))?,
        None => Config::default(),
    };
    match cli.command {
        Command::Run {
            graph,
            traj,
            frames,
            direction,
            out,
            no_cache,
            continue_on_error,
        } => {
            let req = RunRequest {
                frames,
                direction,
                continue_on_error: continue_on_error.then_some(true),
                no_cache,
                out_dir: out,
                wait: true,
            };
            run(&config, &graph, &traj, &req)
        }
        Command::Convert { input, output, attrs } => convert(&config, &input, &output, &attrs),
        Command::Check { graph } => check(&config, &graph),
        Command::CheckScript { script, language } => check_script(&script, language.as_deref()),
        Command::Serve { port, host } => serve(&config, &host, port),
    }
}

fn catalog(config: &Config) -> Result<Catalog, Failure> {
    let mut c = Catalog::builtin();
    c.host_options = config.host_options().map_err(|e| Failure::invalid(e.to_string()))?;
    Ok(c)
}

fn load_document(path: &Path) -> Result<GraphDocument, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
    GraphDocument::from_json(&text).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

fn report_diagnostics(diags: &[Diagnostic]) {
    for d in diags {
        eprintln!("{d}");
    }
}

fn build(doc: &GraphDocument, catalog: &Catalog) -> Result<Graph, Failure> {
    Graph::from_document(doc, catalog).map_err(|diags| {
        report_diagnostics(&diags);
        Failure::invalid("graph is invalid")
    })
}

fn open(config: &Config, path: &Path) -> Result<Trajectory, Failure> {
    let registry: ImporterRegistry = config.registry();
    registry.open(path).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

/// Prints node failures as they happen.
struct Progress;

impl RunObserver for Progress {
    fn on_event(&mut self, event: &RunEvent, _: Option<&SceneDelta>) -> ControlFlow<()> {
        if let RunEvent::NodeError(f) = event {
            eprintln!("node {} ({}) failed at frame {}: {}", f.node, f.label, f.frame, f.message);
        }
        ControlFlow::Continue(())
    }
}

fn run(config: &Config, graph_path: &Path, traj_path: &Path, req: &RunRequest) -> Result<(), Failure> {
    let catalog = catalog(config)?;
    let doc = load_document(graph_path)?;
    let mut graph = build(&doc, &catalog)?;
    let missing = graph.unconnected_inputs();
    if !missing.is_empty() {
        report_diagnostics(&missing);
        return Err(Failure::invalid("graph has unconnected inputs"));
    }
    let opts = run_options(doc.run.as_ref(), req).map_err(|e| Failure::invalid(e.to_string()))?;
    let traj = open(config, traj_path)?;
    let count = traj.frame_count();
    if opts.range.frames(count, opts.direction).is_none() {
        return Err(Failure::invalid(format!("frame range {} is outside 0:{count}", opts.range)));
    }

    let mut store = AttributeStore::new();
    let mut cache = RunCache::new();
    let cache = opts.use_cache.then_some(&mut cache);
    let output = execute_trajectory(&mut graph, &traj, &mut store, cache, &opts, &mut Progress)
        .map_err(|e| Failure(2, e.to_string()))?;

    if let Some(dir) = &req.out_dir {
        let written = write_artifacts(dir, &traj, &output, &store, &SceneDefaults::default())
            .map_err(|e| Failure(2, e.to_string()))?;
        for path in written {
            println!("{}", path.display());
        }
    } else {
        let summary = serde_json::to_string_pretty(&output.report).expect("report serializes");
        println!("{summary}");
    }
    let report = &output.report;
    eprintln!(
        "{} frames, {} node errors, cache {} hits / {} misses",
        report.frames.len(),
        report.errors.len(),
        report.cache_hits,
        report.cache_misses
    );
    if !report.errors.is_empty() && !opts.continue_on_error {
        return Err(Failure(2, String::new()));
    }
    Ok(())
}

fn convert(config: &Config, input: &Path, output: &Path, attrs: &[String]) -> Result<(), Failure> {
    let traj = open(config, input)?;
    let available = traj.attribute_names();
    let unknown: Vec<&str> = attrs
        .iter()
        .filter(|a| !available.contains(a))
        .map(String::as_str)
        .collect();
    if !unknown.is_empty() {
        return Err(Failure::invalid(format!(
            "unknown attributes: {} (available: {})",
            unknown.join(", "),
            if available.is_empty() { "none".into() } else { available.join(", ") }
        )));
    }
    let spec = ColumnSpec::with_attributes(attrs).map_err(|e| Failure::invalid(e.to_string()))?;
    let frames: Vec<Frame> = (0..traj.frame_count())
        .map(|k| traj.load_frame(k).map(|f| (*f).clone()))
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::invalid(e.to_string()))?;
    let file = std::fs::File::create(output).map_err(|e| Failure::invalid(format!("{}: {e}", output.display())))?;
    let mut w = std::io::BufWriter::new(file);
    write_ssv(&mut w, &spec, &frames)
        .and_then(|_| std::io::Write::flush(&mut w))
        .map_err(|e| Failure(2, format!("{}: {e}", output.display())))?;
    eprintln!("wrote {} frames to {}", frames.len(), output.display());
    Ok(())
}

fn check(config: &Config, path: &Path) -> Result<(), Failure> {
    let catalog = catalog(config)?;
    let doc = load_document(path)?;
    let graph = build(&doc, &catalog)?;
    let warnings = graph.unconnected_inputs();
    report_diagnostics(&warnings);
    if warnings.iter().any(|d| d.severity == Severity::Error) {
        return Err(Failure::invalid("graph is invalid"));
    }
    println!("ok: {} nodes, {} connections", doc.nodes.len(), doc.connections.len());
    Ok(())
}

fn check_script(path: &Path, language: Option<&str>) -> Result<(), Failure> {
    let m = manifest_of(path, language).map_err(|e| Failure::invalid(format!("{}: [{}] {e}", path.display(), e.code())))?;
    println!("{} ({:?}){}", m.name, m.language, if m.stateful { " stateful" } else { "" });
    println!("{:<6} {:<16} {:<5} rank", "dir", "name", "dtype");
    for p in &m.ports {
        let dir = match p.direction {
            PortDirection::In => "in",
            PortDirection::Out => "out",
            PortDirection::Param => "param",
        };
        println!("{dir:<6} {:<16} {:<5} {}", p.name, p.dtype.to_string(), p.rank);
    }
    Ok(())
}

fn serve(config: &Config, host: &str, port: u16) -> Result<(), Failure> {
    let addr: std::net::SocketAddr = format!("{host}:{port}")
        .parse()
        .map_err(|e| Failure::invalid(format!("bad address {host}:{port}: {e}")))?;
    let state = AppState::new(catalog(config)?, config.registry());
    let rt = tokio::runtime::Runtime::new().map_err(|e| Failure(2, e.to_string()))?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| Failure::invalid(format!("cannot listen on {addr}: {e}")))?;
        eprintln!("serving on http://{addr}");
        mdflow_service::serve_on(state, listener, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Failure(2, e.to_string()))
    })
}
