//! Audio assets: WAV decoding, the keyword corpus, and the
//! corpus → retrieval → generation resolution chain.

use std::collections::BTreeMap;
use std::io::Cursor;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::inference::{InferredScene, VibrationDescription};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AudioError {
    #[error("cannot decode audio: {0}")]
    Decode(String),
    #[error("unsupported audio format: {0}")]
    UnsupportedFormat(String),
    #[error("{0}")]
    Io(String),
    #[error("invalid corpus manifest: {0}")]
    Manifest(String),
    #[error("no audio found for `{0}` in corpus, retrieval or generation")]
    ResolutionFailed(String),
    #[error("adapter error: {0}")]
    Adapter(String),
    #[error("audio asset `{0}` is not available")]
    MissingAsset(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AudioOrigin {
    Corpus,
    Retrieval,
    Generation,
}

impl AudioOrigin {
    pub fn as_str(self) -> &'static str {
        match self {
            AudioOrigin::Corpus => "corpus",
            AudioOrigin::Retrieval => "retrieval",
            AudioOrigin::Generation => "generation",
        }
    }
}

/// Where an object's vibration audio came from. `path` is relative to the
/// corpus manifest directory for corpus hits and to the assets directory
/// otherwise; adapter results held only in memory have no path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AudioRef {
    pub id: String,
    pub origin: AudioOrigin,
    /// Keywords for corpus/retrieval, the free-form sentence for generation.
    pub query: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AudioAsset {
    pub id: String,
    pub samples: Vec<f32>,
    pub sample_rate: u32,
    pub origin: AudioOrigin,
    pub query: String,
}

impl AudioAsset {
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Decoded, mono, resampled and peak-normalised samples.
pub fn decode_wav(bytes: &[u8], target_rate: u32) -> Result<Vec<f32>, AudioError> {
    if target_rate == 0 {
        return Err(AudioError::UnsupportedFormat("target sample rate must be positive".into()));
    }
    let reader = hound::WavReader::new(Cursor::new(bytes)).map_err(|e| match e {
        hound::Error::Unsupported => AudioError::UnsupportedFormat("unsupported WAV encoding".into()),
        other => AudioError::Decode(other.to_string()),
    })?;
    let spec = reader.spec();
    let channels = spec.channels.max(1) as usize;
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(|e| AudioError::Decode(e.to_string()))?,
        (hound::SampleFormat::Int, bits @ 8..=32) => {
            let scale = (1u64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<Result<_, _>>()
                .map_err(|e| AudioError::Decode(e.to_string()))?
        }
        (format, bits) => {
            return Err(AudioError::UnsupportedFormat(format!("{bits}-bit {format:?} samples")));
        }
    };
    let mono: Vec<f64> = interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect();
    if mono.is_empty() {
        return Err(AudioError::Decode("file contains no samples".into()));
    }
    let resampled = resample_linear(&mono, spec.sample_rate, target_rate);
    let peak = resampled.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if !peak.is_finite() {
        return Err(AudioError::Decode("non-finite samples".into()));
    }
    let mut out: Vec<f32> = resampled.iter().map(|&x| x as f32).collect();
    let peak = out.iter().fold(0.0f32, |m, x| m.max(x.abs()));
    if peak > 0.0 {
        for x in &mut out {
            *x /= peak;
        }
    }
    Ok(out)
}

/// Linear interpolation onto `round(n · to / from)` output samples.
pub fn resample_linear(input: &[f64], from: u32, to: u32) -> Vec<f64> {
    if from == to || input.len() < 2 {
        return input.to_vec();
    }
    let n_out = ((input.len() as u64 * to as u64 + from as u64 / 2) / from as u64).max(1) as usize;
    let step = from as f64 / to as f64;
    (0..n_out)
        .map(|i| {
            let pos = i as f64 * step;
            let j = pos.floor() as usize;
            if j + 1 >= input.len() {
                return input[input.len() - 1];
            }
            let frac = pos - j as f64;
            input[j] + (input[j + 1] - input[j]) * frac
        })
        .collect()
}

pub fn load_audio(path: &Path, target_rate: u32) -> Result<AudioAsset, AudioError> {
    let bytes = std::fs::read(path).map_err(|e| AudioError::Io(format!("cannot read {}: {e}", path.display())))?;
    let samples = decode_wav(&bytes, target_rate)?;
    Ok(AudioAsset {
        id: format!("file:{}", path.display()),
        samples,
        sample_rate: target_rate,
        origin: AudioOrigin::Corpus,
        query: String::new(),
    })
}

/// Mono IEEE-float WAV with a plain 16-byte format chunk.
pub fn encode_wav_f32(samples: &[f32], sample_rate: u32) -> Vec<u8> {
    let data_len = (samples.len() * 4) as u32;
    let mut out = Vec::with_capacity(44 + samples.len() * 4);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&3u16.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * 4).to_le_bytes());
    out.extend_from_slice(&4u16.to_le_bytes());
    out.extend_from_slice(&32u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

pub fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub keywords: String,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub entries: Vec<CorpusEntry>,
}

/// A loaded corpus; immutable after construction.
#[derive(Debug, Clone)]
pub struct Corpus {
    base_dir: PathBuf,
    entries: Vec<CorpusEntry>,
}

impl Corpus {
    pub fn load(manifest_path: &Path) -> Result<Self, AudioError> {
        let text = std::fs::read_to_string(manifest_path)
            .map_err(|e| AudioError::Io(format!("cannot read {}: {e}", manifest_path.display())))?;
        let manifest: CorpusManifest =
            serde_json::from_str(&text).map_err(|e| AudioError::Manifest(e.to_string()))?;
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        Corpus::from_manifest(manifest, base)
    }

    pub fn from_manifest(manifest: CorpusManifest, base_dir: &Path) -> Result<Self, AudioError> {
        for entry in &manifest.entries {
            if tokens(&entry.keywords).is_empty() {
                return Err(AudioError::Manifest(format!("entry `{}` has empty keywords", entry.path)));
            }
            if !base_dir.join(&entry.path).is_file() {
                return Err(AudioError::Manifest(format!("{} does not exist", base_dir.join(&entry.path).display())));
            }
        }
        Ok(Corpus { base_dir: base_dir.to_path_buf(), entries: manifest.entries })
    }

    pub fn entries(&self) -> &[CorpusEntry] {
        &self.entries
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn resolve_path(&self, relative: &str) -> PathBuf {
        self.base_dir.join(relative)
    }

    pub fn search(&self, keywords: &str) -> Option<&CorpusEntry> {
        search_entries(keywords, &self.entries)
    }
}

/// Overlap score of a `<category…> <verb>` query against an entry: each
/// category token present counts 2, the verb counts 1.
pub fn corpus_score(query: &str, entry_keywords: &str) -> usize {
    let q = tokens(query);
    let entry = tokens(entry_keywords);
    let Some((verb, category)) = q.split_last() else { return 0 };
    let category_hits = if category.is_empty() {
        entry.contains(verb) as usize
    } else {
        category.iter().filter(|t| entry.contains(t)).count()
    };
    let verb_hit = !category.is_empty() && entry.contains(verb);
    2 * category_hits + verb_hit as usize
}

/// Best entry by [`corpus_score`]; ties go to the lexicographically
/// smallest keyword phrase. An entry must share at least one category token.
pub fn search_entries<'a>(keywords: &str, entries: &'a [CorpusEntry]) -> Option<&'a CorpusEntry> {
    entries
        .iter()
        .map(|e| (corpus_score(keywords, &e.keywords), e))
        .filter(|(score, _)| *score >= 2)
        .min_by(|(sa, a), (sb, b)| sb.cmp(sa).then_with(|| a.keywords.cmp(&b.keywords)))
        .map(|(_, e)| e)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateLimit {
    pub burst: u32,
    pub per_second: f64,
}

#[derive(Debug)]
pub struct TokenBucket {
    limit: RateLimit,
    state: Mutex<(f64, Instant)>,
}

impl TokenBucket {
    pub fn new(limit: RateLimit) -> Self {
        TokenBucket { limit, state: Mutex::new((limit.burst as f64, Instant::now())) }
    }

    /// Blocks until a token is available.
    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut state = self.state.lock().expect("token bucket poisoned");
                let now = Instant::now();
                let refill = now.duration_since(state.1).as_secs_f64() * self.limit.per_second;
                state.0 = (state.0 + refill).min(self.limit.burst as f64);
                state.1 = now;
                if state.0 >= 1.0 {
                    state.0 -= 1.0;
                    return;
                }
                (1.0 - state.0) / self.limit.per_second
            };
            std::thread::sleep(Duration::from_secs_f64(wait.max(0.001)));
        }
    }
}

/// External keyword search returning WAV bytes, or `None` on a miss.
pub trait RetrievalAdapter: Send + Sync {
    fn retrieve(&self, keywords: &str) -> Result<Option<Vec<u8>>, AudioError>;

    fn rate_limit(&self) -> Option<RateLimit> {
        None
    }
}

/// Text-to-audio generation returning WAV bytes.
pub trait GenerationAdapter: Send + Sync {
    fn generate(&self, sentence: &str) -> Result<Option<Vec<u8>>, AudioError>;

    fn rate_limit(&self) -> Option<RateLimit> {
        None
    }
}

/// Serves files from a directory keyed by exact phrase.
#[derive(Debug, Clone, Default)]
pub struct FixtureRetrieval {
    pub files: BTreeMap<String, PathBuf>,
}

impl RetrievalAdapter for FixtureRetrieval {
    fn retrieve(&self, keywords: &str) -> Result<Option<Vec<u8>>, AudioError> {
        let key = tokens(keywords).join(" ");
        match self.files.get(&key) {
            Some(p) => std::fs::read(p).map(Some).map_err(|e| AudioError::Adapter(e.to_string())),
            None => Ok(None),
        }
    }
}

/// Answers every sentence with the same file.
#[derive(Debug, Clone)]
pub struct FixtureGeneration {
    pub file: PathBuf,
}

impl GenerationAdapter for FixtureGeneration {
    fn generate(&self, _sentence: &str) -> Result<Option<Vec<u8>>, AudioError> {
        std::fs::read(&self.file).map(Some).map_err(|e| AudioError::Adapter(e.to_string()))
    }
}

pub fn short_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))[..16].to_string()
}

/// Resolves vibration descriptions to audio and loads resolved assets.
pub struct AudioResolver {
    corpus: Option<Corpus>,
    retrieval: Option<(Box<dyn RetrievalAdapter>, Option<TokenBucket>)>,
    generation: Option<(Box<dyn GenerationAdapter>, Option<TokenBucket>)>,
    assets_dir: Option<PathBuf>,
    memory: Mutex<BTreeMap<String, Vec<u8>>>,
    log: Mutex<Vec<AudioOrigin>>,
}

impl AudioResolver {
    pub fn new(corpus: Option<Corpus>) -> Self {
        AudioResolver {
            corpus,
            retrieval: None,
            generation: None,
            assets_dir: None,
            memory: Mutex::new(BTreeMap::new()),
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn with_retrieval(mut self, adapter: Box<dyn RetrievalAdapter>) -> Self {
        let bucket = adapter.rate_limit().map(TokenBucket::new);
        self.retrieval = Some((adapter, bucket));
        self
    }

    pub fn with_generation(mut self, adapter: Box<dyn GenerationAdapter>) -> Self {
        let bucket = adapter.rate_limit().map(TokenBucket::new);
        self.generation = Some((adapter, bucket));
        self
    }

    /// Adapter results are written here and referenced by file name.
    pub fn with_assets_dir(mut self, dir: PathBuf) -> Self {
        self.assets_dir = Some(dir);
        self
    }

    pub fn corpus(&self) -> Option<&Corpus> {
        self.corpus.as_ref()
    }

    /// Stages consulted so far, in order.
    pub fn stage_log(&self) -> Vec<AudioOrigin> {
        self.log.lock().expect("log poisoned").clone()
    }

    fn note(&self, stage: AudioOrigin) {
        self.log.lock().expect("log poisoned").push(stage);
    }

    fn keep(&self, id: &str, origin: AudioOrigin, query: &str, bytes: Vec<u8>) -> Result<AudioRef, AudioError> {
        decode_wav(&bytes, 48_000)?;
        let path = match &self.assets_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir).map_err(|e| AudioError::Io(e.to_string()))?;
                let name = format!("{}-{}.wav", origin.as_str(), short_hash(id));
                std::fs::write(dir.join(&name), &bytes).map_err(|e| AudioError::Io(e.to_string()))?;
                Some(name)
            }
            None => None,
        };
        self.memory.lock().expect("memory poisoned").insert(id.to_string(), bytes);
        Ok(AudioRef { id: id.to_string(), origin, query: query.to_string(), path })
    }

    pub fn resolve(&self, desc: &VibrationDescription) -> Result<AudioRef, AudioError> {
        let mut failures = Vec::new();
        if let Some(corpus) = &self.corpus {
            self.note(AudioOrigin::Corpus);
            if let Some(entry) = corpus.search(&desc.keywords) {
                return Ok(AudioRef {
                    id: format!("corpus:{}", entry.keywords),
                    origin: AudioOrigin::Corpus,
                    query: desc.keywords.clone(),
                    path: Some(entry.path.clone()),
                });
            }
        }
        if let Some((adapter, bucket)) = &self.retrieval {
            self.note(AudioOrigin::Retrieval);
            if let Some(b) = bucket {
                b.acquire();
            }
            match adapter.retrieve(&desc.keywords) {
                Ok(Some(bytes)) => {
                    let id = format!("retrieval:{}", tokens(&desc.keywords).join(" "));
                    match self.keep(&id, AudioOrigin::Retrieval, &desc.keywords, bytes) {
                        Ok(r) => return Ok(r),
                        Err(e) => failures.push(format!("retrieval: {e}")),
                    }
                }
                Ok(None) => {}
                Err(e) => failures.push(format!("retrieval: {e}")),
            }
        }
        if let Some((adapter, bucket)) = &self.generation {
            self.note(AudioOrigin::Generation);
            if let Some(b) = bucket {
                b.acquire();
            }
            match adapter.generate(&desc.free_form) {
                Ok(Some(bytes)) => {
                    let id = format!("generation:{}", short_hash(&desc.free_form));
                    match self.keep(&id, AudioOrigin::Generation, &desc.free_form, bytes) {
                        Ok(r) => return Ok(r),
                        Err(e) => failures.push(format!("generation: {e}")),
                    }
                }
                Ok(None) => {}
                Err(e) => failures.push(format!("generation: {e}")),
            }
        }
        let mut what = desc.keywords.clone();
        if !failures.is_empty() {
            what.push_str(&format!(" ({})", failures.join("; ")));
        }
        Err(AudioError::ResolutionFailed(what))
    }

    /// Fills `audio` for every object that has a vibration description.
    pub fn resolve_scene(&self, inferred: &mut InferredScene) -> Result<(), AudioError> {
        for object in &mut inferred.objects {
            if let Some(desc) = &object.vibration {
                object.audio = Some(self.resolve(desc)?);
            }
        }
        Ok(())
    }

    pub fn load(&self, reference: &AudioRef, target_rate: u32) -> Result<AudioAsset, AudioError> {
        let bytes = if let Some(b) = self.memory.lock().expect("memory poisoned").get(&reference.id) {
            b.clone()
        } else {
            let path = match (reference.origin, &reference.path) {
                (AudioOrigin::Corpus, Some(p)) => {
                    self.corpus.as_ref().ok_or_else(|| AudioError::MissingAsset(reference.id.clone()))?.resolve_path(p)
                }
                (_, Some(p)) => self
                    .assets_dir
                    .as_ref()
                    .ok_or_else(|| AudioError::MissingAsset(reference.id.clone()))?
                    .join(p),
                (_, None) => return Err(AudioError::MissingAsset(reference.id.clone())),
            };
            std::fs::read(&path).map_err(|e| AudioError::Io(format!("cannot read {}: {e}", path.display())))?
        };
        Ok(AudioAsset {
            id: reference.id.clone(),
            samples: decode_wav(&bytes, target_rate)?,
            sample_rate: target_rate,
            origin: reference.origin,
            query: reference.query.clone(),
        })
    }
}

/// Resolve and load in one step.
pub fn resolve_vibration_audio(
    desc: &VibrationDescription,
    resolver: &AudioResolver,
    target_rate: u32,
) -> Result<AudioAsset, AudioError> {
    let reference = resolver.resolve(desc)?;
    resolver.load(&reference, target_rate)
}

#[cfg(feature = "http")]
mod http_adapters {
    use super::*;

    pub const ENV_RETRIEVAL_ENDPOINT: &str = "VIBRO_RETRIEVAL_ENDPOINT";
    pub const ENV_RETRIEVAL_KEY: &str = "VIBRO_RETRIEVAL_KEY";
    pub const ENV_GENERATION_ENDPOINT: &str = "VIBRO_GENERATION_ENDPOINT";
    pub const ENV_GENERATION_KEY: &str = "VIBRO_GENERATION_KEY";

    fn client() -> Result<reqwest::blocking::Client, AudioError> {
        reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| AudioError::Adapter(e.to_string()))
    }

    fn authed(req: reqwest::blocking::RequestBuilder, key: &Option<String>) -> reqwest::blocking::RequestBuilder {
        match key {
            Some(k) => req.bearer_auth(k),
            None => req,
        }
    }

    fn body(response: reqwest::blocking::Response) -> Result<Option<Vec<u8>>, AudioError> {
        let status = response.status();
        if status == reqwest::StatusCode::NOT_FOUND || status == reqwest::StatusCode::NO_CONTENT {
            return Ok(None);
        }
        if !status.is_success() {
            return Err(AudioError::Adapter(format!("endpoint returned {status}")));
        }
        response.bytes().map(|b| Some(b.to_vec())).map_err(|e| AudioError::Adapter(e.to_string()))
    }

    /// `GET {endpoint}?q=<keywords>` answering WAV bytes, 404 on a miss.
    pub struct HttpRetrieval {
        endpoint: String,
        key: Option<String>,
        client: reqwest::blocking::Client,
    }

    impl HttpRetrieval {
        pub fn from_env() -> Option<Result<Self, AudioError>> {
            let endpoint = std::env::var(ENV_RETRIEVAL_ENDPOINT).ok()?;
            Some(client().map(|client| HttpRetrieval { endpoint, key: std::env::var(ENV_RETRIEVAL_KEY).ok(), client }))
        }
    }

    impl RetrievalAdapter for HttpRetrieval {
        fn retrieve(&self, keywords: &str) -> Result<Option<Vec<u8>>, AudioError> {
            let req = authed(self.client.get(&self.endpoint).query(&[("q", keywords)]), &self.key);
            body(req.send().map_err(|e| AudioError::Adapter(e.to_string()))?)
        }

        fn rate_limit(&self) -> Option<RateLimit> {
            Some(RateLimit { burst: 2, per_second: 1.0 })
        }
    }

    /// `POST {endpoint}` with `{"text": sentence}` answering WAV bytes.
    pub struct HttpGeneration {
        endpoint: String,
        key: Option<String>,
        client: reqwest::blocking::Client,
    }

    impl HttpGeneration {
        pub fn from_env() -> Option<Result<Self, AudioError>> {
            let endpoint = std::env::var(ENV_GENERATION_ENDPOINT).ok()?;
            Some(client().map(|client| HttpGeneration { endpoint, key: std::env::var(ENV_GENERATION_KEY).ok(), client }))
        }
    }

    impl GenerationAdapter for HttpGeneration {
        fn generate(&self, sentence: &str) -> Result<Option<Vec<u8>>, AudioError> {
            let req = authed(self.client.post(&self.endpoint).json(&serde_json::json!({ "text": sentence })), &self.key);
            body(req.send().map_err(|e| AudioError::Adapter(e.to_string()))?)
        }

        fn rate_limit(&self) -> Option<RateLimit> {
            Some(RateLimit { burst: 1, per_second: 0.2 })
        }
    }
}

#[cfg(feature = "http")]
pub use http_adapters::*;
