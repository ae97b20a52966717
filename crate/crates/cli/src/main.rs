use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use vibroscene_core::audio::{AudioError, AudioResolver, Corpus, HttpGeneration, HttpRetrieval};
use vibroscene_core::dsp::RenderConfig;
use vibroscene_core::inference::{BackendConfig, BackendKind, InferenceError, InferredScene};
use vibroscene_core::propagation::PropagationMode;
use vibroscene_core::render::{RenderError, SessionScript};
use vibroscene_core::scene::{load_scene, SceneModel};
use vibroscene_core::session::{infer_and_resolve, PreparedScene, SessionError};
use vibroscene_server::{serve, ServerConfig, DEFAULT_PORT};

const EXIT_USAGE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_BACKEND: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "vibro", version, about = "Infer, map, render and serve vibrotactile scenes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the inference agents over a scene manifest
    Infer(InferArgs),
    /// Sample attenuation over an object's dominant face as CSV
    Map(MapArgs),
    /// Render a scripted touch session to a WAV file
    Render(RenderArgs),
    /// Export the contact graph
    Graph(GraphArgs),
    /// Serve the HTTP API
    Serve(ServeArgs),
}

#[derive(Args)]
struct AudioArgs {
    /// Corpus manifest (defaults to the bundled corpus/corpus.json)
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Directory for audio fetched by retrieval or generation adapters
    #[arg(long)]
    assets_dir: Option<PathBuf>,
}

#[derive(Args)]
struct BackendArgs {
    #[arg(long, value_enum, default_value = "mock")]
    backend: BackendChoice,
    /// Recorded responses for the replay backend
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Rule table for the mock backend
    #[arg(long)]
    mock_rules: Option<PathBuf>,
    /// Sampling temperature for the http backend
    #[arg(long)]
    temperature: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendChoice {
    Mock,
    Replay,
    Http,
}

#[derive(Args)]
struct InferArgs {
    scene: PathBuf,
    #[command(flatten)]
    backend: BackendArgs,
    #[command(flatten)]
    audio: AudioArgs,
    /// Skip audio resolution
    #[arg(long)]
    no_audio: bool,
    /// Output file; the document goes to standard output when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MapArgs {
    scene: PathBuf,
    inferred: PathBuf,
    #[arg(long)]
    object: String,
    #[arg(long, default_value_t = 32)]
    resolution: usize,
    /// Only this source's contribution (default: strongest source per cell)
    #[arg(long)]
    source: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeChoice {
    No,
    Full,
    Attenuated,
}

impl From<ModeChoice> for PropagationMode {
    fn from(m: ModeChoice) -> Self {
        match m {
            ModeChoice::No => PropagationMode::NoPropagation,
            ModeChoice::Full => PropagationMode::FullPropagation,
            ModeChoice::Attenuated => PropagationMode::Attenuated,
        }
    }
}

#[derive(Args)]
struct RenderArgs {
    scene: PathBuf,
    inferred: PathBuf,
    #[arg(long)]
    script: PathBuf,
    #[arg(long, value_enum, default_value = "attenuated")]
    mode: ModeChoice,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 48_000)]
    sample_rate: u32,
    #[command(flatten)]
    audio: AudioArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphFormat {
    Dot,
    Json,
}

#[derive(Args)]
struct GraphArgs {
    scene: PathBuf,
    inferred: PathBuf,
    #[arg(long, value_enum, default_value = "dot")]
    format: GraphFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = DEFAULT_PORT)]
    port: u16,
    /// Persist manifests and inferred documents here
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long)]
    replay: Option<PathBuf>,
    #[arg(long)]
    mock_rules: Option<PathBuf>,
    #[arg(long)]
    temperature: Option<f64>,
    #[command(flatten)]
    audio: AudioArgs,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Failure::new(EXIT_IO, format!("{}: {e}", path.display()))
    }
}

fn inference_code(e: &InferenceError) -> u8 {
    match e.root() {
        InferenceError::MissingBinding(_) | InferenceError::UnknownMaterial(_) | InferenceError::Mismatch(_) => {
            EXIT_VALIDATION
        }
        _ => EXIT_BACKEND,
    }
}

fn audio_code(e: &AudioError) -> u8 {
    match e {
        AudioError::Io(_) => EXIT_IO,
        AudioError::ResolutionFailed(_) | AudioError::Adapter(_) => EXIT_BACKEND,
        _ => EXIT_VALIDATION,
    }
}

impl From<SessionError> for Failure {
    fn from(e: SessionError) -> Self {
        let code = match &e {
            SessionError::Inference(i) => inference_code(i),
            SessionError::Audio(a) => audio_code(a),
            _ => EXIT_VALIDATION,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<InferenceError> for Failure {
    fn from(e: InferenceError) -> Self {
        SessionError::from(e).into()
    }
}

impl From<AudioError> for Failure {
    fn from(e: AudioError) -> Self {
        SessionError::from(e).into()
    }
}

fn read_scene(path: &Path) -> Result<SceneModel, Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::io(path, e))?;
    load_scene(&bytes).map_err(|e| Failure::new(EXIT_VALIDATION, format!("{}: {e}", path.display())))
}

fn read_prepared(scene: &Path, inferred: &Path) -> Result<PreparedScene, Failure> {
    let scene = read_scene(scene)?;
    let text = std::fs::read_to_string(inferred).map_err(|e| Failure::io(inferred, e))?;
    let inferred = InferredScene::from_json(&text).map_err(|e| Failure::new(EXIT_VALIDATION, e.to_string()))?;
    Ok(PreparedScene::new(scene, inferred)?)
}

fn write_output(out: Option<&Path>, contents: &[u8]) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, contents).map_err(|e| Failure::io(path, e)),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(contents).map_err(|e| Failure::new(EXIT_IO, e.to_string()))
        }
    }
}

fn default_corpus() -> Option<PathBuf> {
    let local = PathBuf::from("corpus/corpus.json");
    if local.is_file() {
        return Some(local);
    }
    let bundled = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus/corpus.json");
    bundled.is_file().then_some(bundled)
}

fn build_resolver(args: &AudioArgs) -> Result<AudioResolver, Failure> {
    let corpus = match args.corpus.clone().or_else(default_corpus) {
        Some(path) => Some(Corpus::load(&path)?),
        None => None,
    };
    let mut resolver = AudioResolver::new(corpus);
    if let Some(adapter) = HttpRetrieval::from_env() {
        resolver = resolver.with_retrieval(Box::new(adapter?));
    }
    if let Some(adapter) = HttpGeneration::from_env() {
        resolver = resolver.with_generation(Box::new(adapter?));
    }
    if let Some(dir) = &args.assets_dir {
        resolver = resolver.with_assets_dir(dir.clone());
    }
    Ok(resolver)
}

fn backend_config(args: &BackendArgs) -> BackendConfig {
    BackendConfig {
        kind: match args.backend {
            BackendChoice::Mock => BackendKind::Mock,
            BackendChoice::Replay => BackendKind::Replay,
            BackendChoice::Http => BackendKind::Http,
        },
        temperature: args.temperature,
        replay_path: args.replay.clone(),
        mock_rules: args.mock_rules.clone(),
    }
}

fn cmd_infer(args: InferArgs) -> Result<(), Failure> {
    let scene = read_scene(&args.scene)?;
    let backend = backend_config(&args.backend).build()?;
    let resolver = if args.no_audio { AudioResolver::new(None) } else { build_resolver(&args.audio)? };
    let inferred = if args.no_audio {
        let derived = vibroscene_core::scene::DerivedGeometry::derive(&scene);
        vibroscene_core::inference::infer_scene(&scene, &derived, backend.as_ref())?
    } else {
        infer_and_resolve(&scene, backend.as_ref(), &resolver)?
    };
    let document = inferred.to_json();
    write_output(args.out.as_deref(), document.as_bytes())?;
    if args.out.is_some() {
        println!("scene category: {}", inferred.scene_category);
        println!("{:<16} {:<20} {:<14} {:<8} audio", "object", "category", "material", "vibrate");
        for o in &inferred.objects {
            println!(
                "{:<16} {:<20} {:<14} {:<8} {}",
                o.id,
                o.analysis.object_category,
                o.analysis.material_category,
                if o.analysis.should_vibrate { "yes" } else { "no" },
                o.audio.as_ref().map_or("-", |a| a.id.as_str()),
            );
        }
    }
    Ok(())
}

fn cmd_map(args: MapArgs) -> Result<(), Failure> {
    let prepared = read_prepared(&args.scene, &args.inferred)?;
    if args.resolution == 0 {
        return Err(Failure::new(EXIT_VALIDATION, "--resolution must be at least 1"));
    }
    let map = prepared.attenuation_map(&args.object, args.resolution)?;
    let values = match &args.source {
        Some(source) => {
            let index = map
                .sources
                .iter()
                .position(|s| s == source)
                .ok_or_else(|| Failure::new(EXIT_VALIDATION, format!("`{source}` is not a vibration source")))?;
            map.gains[index].clone()
        }
        None => map.combined(),
    };
    write_output(args.out.as_deref(), map.to_csv(&values).as_bytes())
}

fn cmd_render(args: RenderArgs) -> Result<(), Failure> {
    let prepared = read_prepared(&args.scene, &args.inferred)?;
    let text = std::fs::read_to_string(&args.script).map_err(|e| Failure::io(&args.script, e))?;
    let script = SessionScript::from_json(&text).map_err(|e| Failure::new(EXIT_VALIDATION, e.to_string()))?;
    let config = RenderConfig { sample_rate: args.sample_rate, ..RenderConfig::default() };
    config.validate().map_err(|e| Failure::new(EXIT_VALIDATION, e.to_string()))?;
    let resolver = build_resolver(&args.audio)?;
    let assets = prepared.source_audio(&resolver, config.sample_rate).map_err(|e| match e {
        SessionError::Render(RenderError::MissingAudio(id)) => Failure::new(
            EXIT_VALIDATION,
            format!("source `{id}` has no resolved audio; re-run `vibro infer` without --no-audio"),
        ),
        other => other.into(),
    })?;
    let output = prepared.render(&assets, &script, args.mode.into(), &config)?;
    std::fs::write(&args.out, &output.wav).map_err(|e| Failure::io(&args.out, e))?;
    println!("{:>8} {:>8} {:<11} {:<24} rms", "start", "end", "mode", "touches");
    for s in &output.stats.segments {
        let touches: Vec<&str> = s.touches.values().map(String::as_str).collect();
        let touches = if touches.is_empty() { "-".to_string() } else { touches.join(",") };
        println!("{:>8.3} {:>8.3} {:<11} {:<24} {:.6}", s.start, s.end, s.mode.as_str(), touches, s.rms);
    }
    println!("clipped: {}", if output.stats.clipped { "yes" } else { "no" });
    Ok(())
}

fn cmd_graph(args: GraphArgs) -> Result<(), Failure> {
    let prepared = read_prepared(&args.scene, &args.inferred)?;
    let text = match args.format {
        GraphFormat::Dot => prepared.graph.to_dot(),
        GraphFormat::Json => {
            let edges: Vec<[String; 2]> = prepared.graph.edges().into_iter().map(|(a, b)| [a, b]).collect();
            let value = serde_json::json!({
                "nodes": prepared.graph.nodes(),
                "edges": edges,
                "sources": prepared.graph.sources(),
            });
            serde_json::to_string_pretty(&value).expect("graph serializes") + "\n"
        }
    };
    write_output(args.out.as_deref(), text.as_bytes())
}

fn cmd_serve(args: ServeArgs) -> Result<(), Failure> {
    let resolver = build_resolver(&args.audio)?;
    let config = ServerConfig {
        port: args.port,
        data_dir: args.data_dir,
        replay_path: args.replay,
        mock_rules: args.mock_rules,
        temperature: args.temperature,
        render: RenderConfig::default(),
    };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::new(EXIT_IO, e.to_string()))?;
    runtime.block_on(serve(config, resolver)).map_err(|e| Failure::new(EXIT_IO, e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Infer(a) => cmd_infer(a),
        Command::Map(a) => cmd_map(a),
        Command::Render(a) => cmd_render(a),
        Command::Graph(a) => cmd_graph(a),
        Command::Serve(a) => cmd_serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
