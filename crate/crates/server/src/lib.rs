//! JSON-over-HTTP service with a server-sent-events gain stream.
//!
//! Each scene session keeps an immutable snapshot behind a lock that is only
//! held long enough to swap a pointer; mutations are serialized by a
//! per-session writer lock so readers (maps, renders, the stream) never wait
//! on inference.

use std::collections::BTreeMap;
use std::convert::Infallible;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post, put};
use axum::{Json, Router};
use base64::Engine;
use futures::Stream;
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::Mutex;

use vibroscene_core::audio::{AudioAsset, AudioError, AudioResolver};
use vibroscene_core::dsp::RenderConfig;
use vibroscene_core::inference::{
    lookup_reference_material, run_vibration_describer, BackendConfig, BackendKind, InferenceError, InferredScene,
    MaterialProperties,
};
use vibroscene_core::propagation::{PropagationError, PropagationMode, Touch};
use vibroscene_core::render::{gain_targets, BlockRenderer, RenderError, SessionScript};
use vibroscene_core::scene::{load_scene, SceneError, SceneModel, Vec3};
use vibroscene_core::session::{infer_and_resolve, PreparedScene, SessionError};

pub const DEFAULT_PORT: u16 = 8787;
pub const MAX_MAP_RESOLUTION: usize = 256;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub port: u16,
    pub data_dir: Option<PathBuf>,
    pub replay_path: Option<PathBuf>,
    pub mock_rules: Option<PathBuf>,
    pub temperature: Option<f64>,
    pub render: RenderConfig,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            port: DEFAULT_PORT,
            data_dir: None,
            replay_path: None,
            mock_rules: None,
            temperature: None,
            render: RenderConfig::default(),
        }
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, message: message.into() }
    }

    fn not_found(what: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, format!("{what} not found"))
    }

    fn not_inferred() -> Self {
        ApiError::new(StatusCode::CONFLICT, "scene has not been inferred yet; POST /scenes/{id}/infer first")
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

fn inference_status(e: &InferenceError) -> StatusCode {
    match e.root() {
        InferenceError::Backend(_) | InferenceError::Config(_) => StatusCode::BAD_GATEWAY,
        InferenceError::Malformed { .. } | InferenceError::InvariantViolation(_) | InferenceError::EstimationUnavailable => {
            StatusCode::UNPROCESSABLE_ENTITY
        }
        _ => StatusCode::BAD_REQUEST,
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match &e {
            SessionError::Scene(_) => StatusCode::BAD_REQUEST,
            SessionError::Inference(i) => inference_status(i),
            SessionError::Propagation(_) => StatusCode::BAD_REQUEST,
            SessionError::Audio(AudioError::ResolutionFailed(_)) | SessionError::Audio(AudioError::Adapter(_)) => {
                StatusCode::BAD_GATEWAY
            }
            SessionError::Audio(_) => StatusCode::INTERNAL_SERVER_ERROR,
            SessionError::Render(RenderError::Script(_)) => StatusCode::UNPROCESSABLE_ENTITY,
            SessionError::Render(RenderError::MissingAudio(_)) => StatusCode::CONFLICT,
            SessionError::Render(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.to_string())
    }
}

impl From<PropagationError> for ApiError {
    fn from(e: PropagationError) -> Self {
        SessionError::from(e).into()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Immutable view of a session; replaced wholesale on every mutation.
#[derive(Clone)]
struct Snapshot {
    scene: Arc<SceneModel>,
    prepared: Option<Arc<PreparedScene>>,
    assets: Arc<BTreeMap<String, AudioAsset>>,
    backend: Option<BackendKind>,
    mode: PropagationMode,
    touches: BTreeMap<String, Touch>,
    targets: BTreeMap<String, f64>,
}

impl Snapshot {
    fn prepared(&self) -> ApiResult<&Arc<PreparedScene>> {
        self.prepared.as_ref().ok_or_else(ApiError::not_inferred)
    }

    fn retarget(&mut self) -> ApiResult<()> {
        self.targets = match &self.prepared {
            Some(p) => gain_targets(&p.model, &p.graph, self.touches.values(), self.mode)?,
            None => BTreeMap::new(),
        };
        Ok(())
    }
}

struct Session {
    writer: Mutex<()>,
    snapshot: RwLock<Arc<Snapshot>>,
}

impl Session {
    fn read(&self) -> Arc<Snapshot> {
        self.snapshot.read().expect("snapshot lock poisoned").clone()
    }

    fn publish(&self, next: Snapshot) {
        *self.snapshot.write().expect("snapshot lock poisoned") = Arc::new(next);
    }
}

pub struct AppState {
    config: ServerConfig,
    resolver: Arc<AudioResolver>,
    sessions: RwLock<BTreeMap<String, Arc<Session>>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(config: ServerConfig, resolver: AudioResolver) -> Arc<Self> {
        let state = AppState {
            config,
            resolver: Arc::new(resolver),
            sessions: RwLock::new(BTreeMap::new()),
            next_id: AtomicU64::new(1),
        };
        Arc::new(state)
    }

    fn session(&self, id: &str) -> ApiResult<Arc<Session>> {
        self.sessions
            .read()
            .expect("session table poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(&format!("scene `{id}`")))
    }

    fn insert(&self, scene: SceneModel) -> String {
        let id = format!("scene-{}", self.next_id.fetch_add(1, Ordering::SeqCst));
        self.insert_with_id(id.clone(), scene, None);
        id
    }

    fn insert_with_id(&self, id: String, scene: SceneModel, prepared: Option<(PreparedScene, BTreeMap<String, AudioAsset>)>) {
        let (prepared, assets) = match prepared {
            Some((p, a)) => (Some(Arc::new(p)), Arc::new(a)),
            None => (None, Arc::new(BTreeMap::new())),
        };
        let mut snapshot = Snapshot {
            scene: Arc::new(scene),
            prepared,
            assets,
            backend: None,
            mode: PropagationMode::Attenuated,
            touches: BTreeMap::new(),
            targets: BTreeMap::new(),
        };
        let _ = snapshot.retarget();
        let session = Session { writer: Mutex::new(()), snapshot: RwLock::new(Arc::new(snapshot)) };
        self.sessions.write().expect("session table poisoned").insert(id, Arc::new(session));
    }

    fn backend_config(&self, kind: BackendKind) -> BackendConfig {
        BackendConfig {
            kind,
            temperature: self.config.temperature,
            replay_path: self.config.replay_path.clone(),
            mock_rules: self.config.mock_rules.clone(),
        }
    }

    fn persist(&self, id: &str, name: &str, contents: &str) {
        if let Some(dir) = &self.config.data_dir {
            let path = dir.join(format!("{id}.{name}.json"));
            if let Err(e) = std::fs::create_dir_all(dir).and_then(|_| std::fs::write(&path, contents)) {
                eprintln!("warning: cannot persist {}: {e}", path.display());
            }
        }
    }

    /// Reloads manifests and inferred documents saved by a previous run.
    pub fn restore(&self) -> std::io::Result<usize> {
        let Some(dir) = self.config.data_dir.clone() else { return Ok(0) };
        if !dir.is_dir() {
            return Ok(0);
        }
        let mut restored = 0;
        let mut entries: Vec<_> = std::fs::read_dir(&dir)?.filter_map(|e| e.ok()).map(|e| e.path()).collect();
        entries.sort();
        for path in entries {
            let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
            let Some(id) = name.strip_suffix(".scene.json") else { continue };
            let scene = match std::fs::read(&path).map_err(|e| e.to_string()).and_then(|b| load_scene(&b).map_err(|e| e.to_string())) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("warning: skipping {}: {e}", path.display());
                    continue;
                }
            };
            let inferred_path = dir.join(format!("{id}.inferred.json"));
            let prepared = std::fs::read_to_string(&inferred_path)
                .ok()
                .and_then(|text| InferredScene::from_json(&text).ok())
                .and_then(|inferred| PreparedScene::new(scene.clone(), inferred).ok())
                .and_then(|p| {
                    let assets = p.source_audio(&self.resolver, self.config.render.sample_rate).ok()?;
                    Some((p, assets))
                });
            if let Some(n) = id.strip_prefix("scene-").and_then(|n| n.parse::<u64>().ok()) {
                self.next_id.fetch_max(n + 1, Ordering::SeqCst);
            }
            self.insert_with_id(id.to_string(), scene, prepared);
            restored += 1;
        }
        Ok(restored)
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(|| async { Json(json!({ "status": "ok" })) }))
        .route("/scenes", post(create_scene).get(list_scenes))
        .route("/scenes/{id}", get(get_scene))
        .route("/scenes/{id}/infer", post(infer))
        .route("/scenes/{id}/inferred", get(get_inferred))
        .route("/scenes/{id}/touch", post(touch))
        .route("/scenes/{id}/touch/{client}", delete(release))
        .route("/scenes/{id}/mode", get(get_mode).put(put_mode))
        .route("/scenes/{id}/objects/{object}", put(put_object))
        .route("/scenes/{id}/contacts", put(put_contact))
        .route("/scenes/{id}/attenuation-map", get(attenuation_map))
        .route("/scenes/{id}/render", get(render_get).post(render_post))
        .route("/scenes/{id}/stream", get(stream))
        .with_state(state)
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))
}

fn json_text(status: StatusCode, text: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], text).into_response()
}

async fn create_scene(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<Response> {
    let scene = load_scene(&body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?;
    let manifest = scene.to_json();
    let id = state.insert(scene);
    state.persist(&id, "scene", &manifest);
    Ok((StatusCode::CREATED, Json(json!({ "id": id }))).into_response())
}

async fn list_scenes(State(state): State<Arc<AppState>>) -> Json<Value> {
    let ids: Vec<String> = state.sessions.read().expect("session table poisoned").keys().cloned().collect();
    Json(json!({ "scenes": ids }))
}

async fn get_scene(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let snap = state.session(&id)?.read();
    let scene: Value = serde_json::from_str(&snap.scene.to_json()).expect("manifest serializes");
    let (sources, contacts) = match &snap.prepared {
        Some(p) => (
            p.graph.sources().into_iter().map(str::to_string).collect::<Vec<_>>(),
            p.graph.edges().into_iter().map(|(a, b)| vec![a.to_string(), b.to_string()]).collect::<Vec<_>>(),
        ),
        None => (Vec::new(), Vec::new()),
    };
    Ok(Json(json!({
        "id": id,
        "scene": scene,
        "inferred": snap.prepared.is_some(),
        "mode": snap.mode,
        "sources": sources,
        "contacts": contacts,
        "touches": snap.touches,
    })))
}

#[derive(Deserialize)]
struct InferQuery {
    backend: Option<String>,
}

async fn infer(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<InferQuery>,
) -> ApiResult<Response> {
    let kind: BackendKind = q
        .backend
        .as_deref()
        .unwrap_or("mock")
        .parse()
        .map_err(|e: InferenceError| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?;
    let session = state.session(&id)?;
    let _writer = session.writer.lock().await;
    let snap = session.read();
    let config = state.backend_config(kind);
    let resolver = state.resolver.clone();
    let scene = snap.scene.clone();
    let rate = state.config.render.sample_rate;
    let (prepared, assets) = blocking(move || -> Result<_, SessionError> {
        let backend = config.build()?;
        let inferred = infer_and_resolve(&scene, backend.as_ref(), &resolver)?;
        let prepared = PreparedScene::new((*scene).clone(), inferred)?;
        let assets = prepared.source_audio(&resolver, rate)?;
        Ok((prepared, assets))
    })
    .await??;
    let body = prepared.inferred.to_json();
    let mut next = (*snap).clone();
    next.prepared = Some(Arc::new(prepared));
    next.assets = Arc::new(assets);
    next.backend = Some(kind);
    next.retarget()?;
    session.publish(next);
    state.persist(&id, "inferred", &body);
    Ok(json_text(StatusCode::OK, body))
}

async fn get_inferred(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let snap = state.session(&id)?.read();
    Ok(json_text(StatusCode::OK, snap.prepared()?.inferred.to_json()))
}

#[derive(Deserialize)]
struct TouchBody {
    object_id: String,
    point: Vec3,
    #[serde(default = "default_client")]
    client: String,
}

fn default_client() -> String {
    "default".to_string()
}

async fn touch(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(body): Json<TouchBody>,
) -> ApiResult<Json<Value>> {
    let session = state.session(&id)?;
    let _writer = session.writer.lock().await;
    let mut next = (*session.read()).clone();
    let prepared = next.prepared()?.clone();
    let touch = Touch { object: body.object_id, point: body.point };
    let gains = prepared.model.touch_gain(&prepared.graph, &touch, next.mode)?;
    next.touches.insert(body.client, touch);
    next.retarget()?;
    let mode = next.mode;
    session.publish(next);
    Ok(Json(json!({ "mode": mode, "gains": gains })))
}

async fn release(
    State(state): State<Arc<AppState>>,
    Path((id, client)): Path<(String, String)>,
) -> ApiResult<StatusCode> {
    let session = state.session(&id)?;
    let _writer = session.writer.lock().await;
    let mut next = (*session.read()).clone();
    next.touches.remove(&client);
    next.retarget()?;
    session.publish(next);
    Ok(StatusCode::NO_CONTENT)
}

async fn get_mode(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    Ok(Json(json!({ "mode": state.session(&id)?.read().mode })))
}

#[derive(Deserialize)]
struct ModeBody {
    mode: PropagationMode,
}

async fn put_mode(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(body): Json<ModeBody>,
) -> ApiResult<Json<Value>> {
    let session = state.session(&id)?;
    let _writer = session.writer.lock().await;
    let mut next = (*session.read()).clone();
    next.mode = body.mode;
    next.retarget()?;
    session.publish(next);
    Ok(Json(json!({ "mode": body.mode })))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MaterialEdit {
    Reference(String),
    Properties(MaterialProperties),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectEdit {
    material: Option<MaterialEdit>,
    source: Option<bool>,
}

async fn put_object(
    State(state): State<Arc<AppState>>,
    Path((id, object)): Path<(String, String)>,
    Json(edit): Json<ObjectEdit>,
) -> ApiResult<Json<Value>> {
    let session = state.session(&id)?;
    let _writer = session.writer.lock().await;
    let snap = session.read();
    let mut prepared = (**snap.prepared()?).clone();
    if prepared.inferred.object(&object).is_none() {
        return Err(ApiError::not_found(&format!("object `{object}`")));
    }
    if let Some(material) = edit.material {
        let material = match material {
            MaterialEdit::Reference(name) => lookup_reference_material(&name)
                .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?,
            MaterialEdit::Properties(p) => p,
        };
        prepared = prepared.with_material(&object, material)?;
    }
    let mut assets = snap.assets.clone();
    if let Some(is_source) = edit.source {
        let needs_audio = is_source && prepared.inferred.object(&object).is_some_and(|o| o.audio.is_none());
        if needs_audio {
            let config = state.backend_config(snap.backend.unwrap_or(BackendKind::Mock));
            let resolver = state.resolver.clone();
            let mut inferred = prepared.inferred.clone();
            let oid = object.clone();
            inferred = blocking(move || -> Result<InferredScene, SessionError> {
                let backend = config.build()?;
                let target = inferred.object_mut(&oid).expect("checked above");
                let vibration = run_vibration_describer(
                    &target.analysis.object_category,
                    &target.analysis.usage,
                    Some(&oid),
                    backend.as_ref(),
                )?;
                target.audio = Some(resolver.resolve(&vibration)?);
                target.vibration = Some(vibration);
                target.analysis.should_vibrate = true;
                target.analysis.should_vibrate_reason = "Marked as a vibration source by the operator.".into();
                Ok(inferred)
            })
            .await??;
            prepared = PreparedScene::new(prepared.scene.clone(), inferred)?;
        }
        prepared = prepared.with_source(&object, is_source)?;
        assets = Arc::new(prepared.source_audio(&state.resolver, state.config.render.sample_rate)?);
    }
    let updated = serde_json::to_value(prepared.inferred.object(&object)).expect("inferred object serializes");
    let body = prepared.inferred.to_json();
    let mut next = (*snap).clone();
    next.scene = Arc::new(prepared.scene.clone());
    next.prepared = Some(Arc::new(prepared));
    next.assets = assets;
    next.retarget()?;
    session.publish(next);
    state.persist(&id, "inferred", &body);
    Ok(Json(updated))
}

#[derive(Deserialize)]
struct ContactEdit {
    a: String,
    b: String,
    present: bool,
}

async fn put_contact(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(edit): Json<ContactEdit>,
) -> ApiResult<Json<Value>> {
    let session = state.session(&id)?;
    let _writer = session.writer.lock().await;
    let snap = session.read();
    let prepared = snap.prepared()?.with_contact(&edit.a, &edit.b, edit.present)?;
    let edges: Vec<Vec<String>> =
        prepared.graph.edges().into_iter().map(|(a, b)| vec![a.to_string(), b.to_string()]).collect();
    let mut next = (*snap).clone();
    next.prepared = Some(Arc::new(prepared));
    next.retarget()?;
    session.publish(next);
    Ok(Json(json!({ "contacts": edges })))
}

#[derive(Deserialize)]
struct MapQuery {
    object: String,
    resolution: Option<usize>,
}

async fn attenuation_map(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<MapQuery>,
) -> ApiResult<Json<Value>> {
    let snap = state.session(&id)?.read();
    let prepared = snap.prepared()?.clone();
    let resolution = q.resolution.unwrap_or(32);
    if resolution == 0 || resolution > MAX_MAP_RESOLUTION {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            format!("resolution must lie in 1..={MAX_MAP_RESOLUTION}"),
        ));
    }
    if !prepared.graph.contains(&q.object) {
        return Err(ApiError::not_found(&format!("object `{}`", q.object)));
    }
    let map = blocking(move || prepared.attenuation_map(&q.object, resolution)).await??;
    Ok(Json(serde_json::to_value(map).expect("map serializes")))
}

#[derive(Deserialize)]
struct RenderQuery {
    script: Option<String>,
    mode: Option<PropagationMode>,
}

async fn render_get(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<RenderQuery>,
) -> ApiResult<Response> {
    let script = q
        .script
        .ok_or_else(|| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "missing `script` query parameter"))?;
    render(state, id, script.as_bytes(), q.mode).await
}

async fn render_post(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<RenderQuery>,
    body: Bytes,
) -> ApiResult<Response> {
    render(state, id, &body, q.mode).await
}

async fn render(state: Arc<AppState>, id: String, script: &[u8], mode: Option<PropagationMode>) -> ApiResult<Response> {
    let snap = state.session(&id)?.read();
    let prepared = snap.prepared()?.clone();
    let text = std::str::from_utf8(script).map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    let script = SessionScript::from_json(text).map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    let mode = mode.unwrap_or(snap.mode);
    let assets = snap.assets.clone();
    let config = state.config.render;
    let output = blocking(move || prepared.render(&assets, &script, mode, &config)).await??;
    let stats = serde_json::to_string(&output.stats).expect("stats serialize");
    Ok((
        StatusCode::OK,
        [(header::CONTENT_TYPE, "audio/wav".to_string()), (header::HeaderName::from_static("x-render-stats"), stats)],
        output.wav,
    )
        .into_response())
}

#[derive(Deserialize)]
struct StreamQuery {
    #[serde(default)]
    audio: bool,
}

/// One JSON message per block: `{t, gains, rms}` plus `audio` (base64
/// little-endian f32 samples) when requested.
pub fn stream_messages(
    session: Arc<SessionHandle>,
    config: RenderConfig,
    with_audio: bool,
) -> impl Stream<Item = Value> + Send {
    let period = Duration::from_secs_f64(config.block_duration());
    let mut interval = tokio::time::interval(period);
    interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Burst);
    let init: (tokio::time::Interval, u64, Option<(Arc<BTreeMap<String, AudioAsset>>, BlockRenderer)>) =
        (interval, 0, None);
    futures::stream::unfold(init, move |(mut interval, block, mut renderer)| {
        let session = session.clone();
        async move {
            interval.tick().await;
            let snap = session.0.read();
            let stale = renderer.as_ref().is_none_or(|(assets, _)| !Arc::ptr_eq(assets, &snap.assets));
            if stale {
                renderer = BlockRenderer::new(config, (*snap.assets).clone()).ok().map(|r| (snap.assets.clone(), r));
            }
            let t = block as f64 * config.block_duration();
            let mut message = json!({ "t": t, "gains": snap.targets, "rms": 0.0 });
            if let Some((_, r)) = renderer.as_mut() {
                if let Ok(rendered) = r.render_block(&snap.targets) {
                    message["rms"] = json!(rendered.rms);
                    if with_audio {
                        let bytes: Vec<u8> = rendered.samples.iter().flat_map(|&x| (x as f32).to_le_bytes()).collect();
                        message["audio"] = json!(base64::engine::general_purpose::STANDARD.encode(bytes));
                    }
                }
            }
            Some((message, (interval, block + 1, renderer)))
        }
    })
}

/// Opaque handle to a session, for driving [`stream_messages`] directly.
pub struct SessionHandle(Arc<Session>);

async fn stream(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<StreamQuery>,
) -> ApiResult<Sse<impl Stream<Item = Result<Event, Infallible>>>> {
    let session = state.session(&id)?;
    session.read().prepared()?;
    let handle = Arc::new(SessionHandle(session));
    let messages = stream_messages(handle, state.config.render, q.audio);
    let events = futures::StreamExt::map(messages, |m| Ok(Event::default().data(m.to_string())));
    Ok(Sse::new(events).keep_alive(KeepAlive::default()))
}

impl AppState {
    pub fn session_handle(&self, id: &str) -> Option<Arc<SessionHandle>> {
        self.session(id).ok().map(|s| Arc::new(SessionHandle(s)))
    }
}

pub async fn serve(config: ServerConfig, resolver: AudioResolver) -> std::io::Result<()> {
    config.render.validate().map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e.to_string()))?;
    let addr = SocketAddr::from(([0, 0, 0, 0], config.port));
    let state = AppState::new(config, resolver);
    let restored = state.restore()?;
    if restored > 0 {
        eprintln!("restored {restored} scene(s)");
    }
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

impl From<SceneError> for ApiError {
    fn from(e: SceneError) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, e.to_string())
    }
}
