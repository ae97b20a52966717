//! Session rendering: the block renderer shared by offline WAV output and
//! live streaming, and the scripted offline render.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{encode_wav_f32, AudioAsset};
use crate::dsp::{apply_gain_ramp, mix_into, rms, svf_bandpass, DspError, FilterState, RenderConfig};
use crate::graph::ContactGraph;
use crate::propagation::{PropagationError, PropagationMode, PropagationModel, Touch};
use crate::scene::Vec3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RenderError {
    #[error("invalid session script: {0}")]
    Script(String),
    #[error("vibration source `{0}` has no resolved audio")]
    MissingAudio(String),
    #[error("at t={t:.3}s: {source}")]
    Propagation { t: f64, source: PropagationError },
    #[error(transparent)]
    Dsp(#[from] DspError),
}

pub const DEFAULT_CLIENT: &str = "script";

fn default_client() -> String {
    DEFAULT_CLIENT.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ScriptEvent {
    Touch {
        t: f64,
        object: String,
        point: Vec3,
        #[serde(default = "default_client")]
        client: String,
    },
    Release {
        t: f64,
        #[serde(default = "default_client")]
        client: String,
    },
    Mode {
        t: f64,
        mode: PropagationMode,
    },
}

impl ScriptEvent {
    pub fn time(&self) -> f64 {
        match self {
            ScriptEvent::Touch { t, .. } | ScriptEvent::Release { t, .. } | ScriptEvent::Mode { t, .. } => *t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionScript {
    pub duration: f64,
    #[serde(default)]
    pub events: Vec<ScriptEvent>,
}

impl SessionScript {
    pub fn from_json(text: &str) -> Result<Self, RenderError> {
        let script: SessionScript = serde_json::from_str(text).map_err(|e| RenderError::Script(e.to_string()))?;
        script.validate()?;
        Ok(script)
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(RenderError::Script(format!("duration must be non-negative, got {}", self.duration)));
        }
        let mut last = 0.0;
        for (i, e) in self.events.iter().enumerate() {
            let t = e.time();
            if !(t >= 0.0 && t <= self.duration) {
                return Err(RenderError::Script(format!("event {i} at t={t} lies outside [0, {}]", self.duration)));
            }
            if t < last {
                return Err(RenderError::Script(format!("event {i} at t={t} precedes the previous event")));
            }
            last = t;
        }
        Ok(())
    }
}

/// Per-source gain targets: for each source, the strongest gain over all
/// active touches (0 when untouched or unreachable).
pub fn gain_targets<'a>(
    model: &PropagationModel,
    graph: &ContactGraph,
    touches: impl IntoIterator<Item = &'a Touch>,
    mode: PropagationMode,
) -> Result<BTreeMap<String, f64>, PropagationError> {
    let mut targets: BTreeMap<String, f64> = graph.sources().into_iter().map(|s| (s.to_string(), 0.0)).collect();
    for touch in touches {
        for r in model.touch_gain(graph, touch, mode)? {
            let g = targets.entry(r.source).or_insert(0.0);
            *g = g.max(r.gain);
        }
    }
    Ok(targets)
}

struct Track {
    id: String,
    samples: Vec<f64>,
    cursor: usize,
    filter: FilterState,
    gain: f64,
    scratch: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedBlock {
    pub samples: Vec<f64>,
    pub gains: BTreeMap<String, f64>,
    pub rms: f64,
    pub clipped: bool,
}

/// Filters every source continuously, ramps each to its gain target and
/// mixes. One call renders one block.
pub struct BlockRenderer {
    config: RenderConfig,
    tracks: Vec<Track>,
    blocks: u64,
}

impl BlockRenderer {
    pub fn new(config: RenderConfig, sources: BTreeMap<String, AudioAsset>) -> Result<Self, RenderError> {
        config.validate()?;
        let tracks = sources
            .into_iter()
            .map(|(id, asset)| Track {
                id,
                samples: asset.samples.iter().map(|&x| f64::from(x)).collect(),
                cursor: 0,
                filter: FilterState::new(&config),
                gain: 0.0,
                scratch: vec![0.0; config.block_size],
            })
            .collect();
        Ok(BlockRenderer { config, tracks, blocks: 0 })
    }

    pub fn config(&self) -> &RenderConfig {
        &self.config
    }

    pub fn block_index(&self) -> u64 {
        self.blocks
    }

    pub fn source_ids(&self) -> Vec<String> {
        self.tracks.iter().map(|t| t.id.clone()).collect()
    }

    pub fn render_block(&mut self, targets: &BTreeMap<String, f64>) -> Result<RenderedBlock, RenderError> {
        let n = self.config.block_size;
        for track in &mut self.tracks {
            let len = track.samples.len();
            for slot in track.scratch.iter_mut() {
                *slot = if track.cursor < len {
                    track.samples[track.cursor]
                } else {
                    0.0
                };
                track.cursor += 1;
                if self.config.loop_audio && track.cursor >= len {
                    track.cursor = 0;
                }
            }
            let mut filtered = svf_bandpass(&track.scratch, &mut track.filter)?;
            let target = targets.get(&track.id).copied().unwrap_or(0.0).clamp(0.0, 1.0);
            apply_gain_ramp(&mut filtered, track.gain, target, &self.config);
            track.gain = target;
            track.scratch.copy_from_slice(&filtered);
        }
        let blocks: Vec<&[f64]> = self.tracks.iter().map(|t| t.scratch.as_slice()).collect();
        let ones = vec![1.0; blocks.len()];
        let mut out = vec![0.0; n];
        let clipped = mix_into(&mut out, &blocks, &ones)?;
        self.blocks += 1;
        Ok(RenderedBlock {
            rms: rms(&out),
            gains: self.tracks.iter().map(|t| (t.id.clone(), t.gain)).collect(),
            samples: out,
            clipped,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentStats {
    pub start: f64,
    pub end: f64,
    pub mode: PropagationMode,
    /// Touched objects by client.
    pub touches: BTreeMap<String, String>,
    pub gains: BTreeMap<String, f64>,
    /// RMS after the first block of the segment (the gain ramp settles
    /// within it); the whole segment when it spans a single block.
    pub rms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderStats {
    pub segments: Vec<SegmentStats>,
    pub clipped: bool,
    pub peak: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput {
    pub samples: Vec<f32>,
    pub wav: Vec<u8>,
    pub stats: RenderStats,
}

/// Everything the render path needs from a session, built once.
pub struct RenderContext<'a> {
    pub model: &'a PropagationModel,
    pub graph: &'a ContactGraph,
    pub assets: &'a BTreeMap<String, AudioAsset>,
}

pub fn render_session(
    ctx: &RenderContext<'_>,
    script: &SessionScript,
    initial_mode: PropagationMode,
    config: &RenderConfig,
) -> Result<RenderOutput, RenderError> {
    config.validate()?;
    script.validate()?;
    let mut sources = BTreeMap::new();
    for id in ctx.graph.sources() {
        let asset = ctx.assets.get(id).ok_or_else(|| RenderError::MissingAudio(id.to_string()))?;
        sources.insert(id.to_string(), asset.clone());
    }
    let mut renderer = BlockRenderer::new(*config, sources)?;

    let fs = config.sample_rate as f64;
    let block = config.block_size;
    let total = (script.duration * fs).round() as usize;
    let n_blocks = total.div_ceil(block);
    let event_block = |t: f64| ((t * fs).round() as usize) / block;

    let mut mode = initial_mode;
    let mut touches: BTreeMap<String, Touch> = BTreeMap::new();
    let mut targets = gain_targets(ctx.model, ctx.graph, touches.values(), mode)
        .map_err(|source| RenderError::Propagation { t: 0.0, source })?;
    let mut events = script.events.iter().peekable();
    let mut out: Vec<f64> = Vec::with_capacity(n_blocks * block);
    let mut segments: Vec<(usize, SegmentStats)> = Vec::new();
    let mut clipped = false;

    for b in 0..n_blocks {
        let mut changed = b == 0;
        while let Some(e) = events.next_if(|e| event_block(e.time()) <= b) {
            match e {
                ScriptEvent::Touch { object, point, client, .. } => {
                    touches.insert(client.clone(), Touch { object: object.clone(), point: *point });
                }
                ScriptEvent::Release { client, .. } => {
                    touches.remove(client);
                }
                ScriptEvent::Mode { mode: m, .. } => mode = *m,
            }
            changed = true;
        }
        let t = b as f64 * block as f64 / fs;
        if changed {
            targets = gain_targets(ctx.model, ctx.graph, touches.values(), mode)
                .map_err(|source| RenderError::Propagation { t, source })?;
            segments.push((
                b * block,
                SegmentStats {
                    start: t,
                    end: t,
                    mode,
                    touches: touches.iter().map(|(c, touch)| (c.clone(), touch.object.clone())).collect(),
                    gains: targets.clone(),
                    rms: 0.0,
                },
            ));
        }
        let rendered = renderer.render_block(&targets)?;
        clipped |= rendered.clipped;
        out.extend_from_slice(&rendered.samples);
    }
    out.truncate(total);

    let bounds: Vec<usize> = segments.iter().map(|(s, _)| *s).chain(std::iter::once(total)).collect();
    let segments = segments
        .into_iter()
        .enumerate()
        .map(|(i, (start, mut stats))| {
            let end = bounds[i + 1].min(total);
            let start = start.min(end);
            let steady = if end - start > block { start + block } else { start };
            stats.end = end as f64 / fs;
            stats.rms = rms(&out[steady..end]);
            stats
        })
        .collect();
    let samples: Vec<f32> = out.iter().map(|&x| x as f32).collect();
    let peak = out.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(RenderOutput {
        wav: encode_wav_f32(&samples, config.sample_rate),
        samples,
        stats: RenderStats { segments, clipped, peak },
    })
}
