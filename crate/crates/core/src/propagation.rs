//! Flexural-wave attenuation on plates.
//!
//! Each object is treated as a thin plate with bending stiffness
//! `D = E h³ / (12 (1 − ν²))` and wavenumber `k = (ρ h ω₀² / D)^¼`; the
//! amplitude ratio at distance `d` from the excitation is `Γ = e^(−k d)`.
//! A multi-object path is split into one segment per traversed object
//! (source origin → contact → … → contact → touch point) and the segment
//! ratios are multiplied.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ContactGraph, GraphError, PropagationPath};
use crate::inference::InferredScene;
use crate::scene::{thin_axis, Aabb, DerivedGeometry, SceneModel, Vec3};

pub const DEFAULT_FREQUENCY_HZ: f64 = 250.0;
/// Segments shorter than this contribute a ratio of exactly 1.
pub const DEGENERATE_SEGMENT: f64 = 1e-9;

pub fn default_angular_frequency() -> f64 {
    2.0 * PI * DEFAULT_FREQUENCY_HZ
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PropagationError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("object `{0}` has no usable material properties or thickness")]
    MissingMaterial(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PropagationMode {
    /// Only a touched source vibrates.
    #[serde(rename = "no")]
    NoPropagation,
    /// Every surface connected to a source vibrates at source amplitude.
    #[serde(rename = "full")]
    FullPropagation,
    #[serde(rename = "attenuated")]
    Attenuated,
}

impl PropagationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PropagationMode::NoPropagation => "no",
            PropagationMode::FullPropagation => "full",
            PropagationMode::Attenuated => "attenuated",
        }
    }
}

impl fmt::Display for PropagationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PropagationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "no" | "none" | "no_propagation" => Ok(PropagationMode::NoPropagation),
            "full" | "full_propagation" => Ok(PropagationMode::FullPropagation),
            "attenuated" => Ok(PropagationMode::Attenuated),
            other => Err(format!("unknown propagation mode `{other}` (expected no, full or attenuated)")),
        }
    }
}

fn positive(name: &str, value: f64) -> Result<f64, PropagationError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(PropagationError::Domain(format!("{name} must be positive and finite, got {value}")))
    }
}

/// Plate bending stiffness in N·m.
pub fn bending_stiffness(elastic_modulus: f64, thickness: f64, poissons_ratio: f64) -> Result<f64, PropagationError> {
    positive("elastic modulus", elastic_modulus)?;
    positive("thickness", thickness)?;
    if !(0.0..0.5).contains(&poissons_ratio) {
        return Err(PropagationError::Domain(format!("Poisson's ratio must lie in [0, 0.5), got {poissons_ratio}")));
    }
    Ok(elastic_modulus * thickness.powi(3) / (12.0 * (1.0 - poissons_ratio * poissons_ratio)))
}

/// Flexural wavenumber in rad/m.
pub fn wavenumber(density: f64, thickness: f64, angular_frequency: f64, stiffness: f64) -> Result<f64, PropagationError> {
    positive("density", density)?;
    positive("thickness", thickness)?;
    positive("angular frequency", angular_frequency)?;
    positive("bending stiffness", stiffness)?;
    Ok((density * thickness * angular_frequency * angular_frequency / stiffness).sqrt().sqrt())
}

pub fn attenuation_ratio(wavenumber: f64, distance: f64) -> Result<f64, PropagationError> {
    positive("wavenumber", wavenumber)?;
    if !(distance >= 0.0 && distance.is_finite()) {
        return Err(PropagationError::Domain(format!("distance must be non-negative and finite, got {distance}")));
    }
    Ok((-wavenumber * distance).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateParams {
    pub density: f64,
    pub elastic_modulus: f64,
    pub poissons_ratio: f64,
    pub thickness: f64,
    pub angular_frequency: f64,
}

impl PlateParams {
    pub fn bending_stiffness(&self) -> Result<f64, PropagationError> {
        bending_stiffness(self.elastic_modulus, self.thickness, self.poissons_ratio)
    }

    pub fn wavenumber(&self) -> Result<f64, PropagationError> {
        wavenumber(self.density, self.thickness, self.angular_frequency, self.bending_stiffness()?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentGain {
    pub object: String,
    pub from: Vec3,
    pub to: Vec3,
    pub length: f64,
    pub wavenumber: f64,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainResult {
    pub source: String,
    pub gain: f64,
    pub path: PropagationPath,
    pub segments: Vec<SegmentGain>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttenuationQuery {
    pub path: PropagationPath,
    pub source_point: Vec3,
    pub touch_point: Vec3,
    pub mode: PropagationMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Touch {
    pub object: String,
    pub point: Vec3,
}

#[derive(Debug, Clone)]
struct ObjectPhysics {
    aabb: Aabb,
    origin: Vec3,
    wavenumber: Option<f64>,
}

/// Per-object wavenumbers and boxes, precomputed for fast touch queries.
#[derive(Debug, Clone)]
pub struct PropagationModel {
    angular_frequency: f64,
    objects: BTreeMap<String, ObjectPhysics>,
}

impl PropagationModel {
    pub fn new(
        scene: &SceneModel,
        derived: &DerivedGeometry,
        inferred: &InferredScene,
        angular_frequency: f64,
    ) -> Result<Self, PropagationError> {
        positive("angular frequency", angular_frequency)?;
        let objects = scene
            .objects
            .iter()
            .map(|o| {
                let wavenumber = inferred.object(&o.id).and_then(|io| {
                    let params = PlateParams {
                        density: io.material.density,
                        elastic_modulus: io.material.elastic_modulus,
                        poissons_ratio: io.material.poissons_ratio,
                        thickness: io.thickness().ok()?,
                        angular_frequency,
                    };
                    params.wavenumber().ok()
                });
                let aabb = derived.aabb.get(&o.id).copied().unwrap_or_else(|| o.aabb());
                (o.id.clone(), ObjectPhysics { aabb, origin: o.origin(), wavenumber })
            })
            .collect();
        Ok(PropagationModel { angular_frequency, objects })
    }

    pub fn angular_frequency(&self) -> f64 {
        self.angular_frequency
    }

    fn physics(&self, id: &str) -> Result<&ObjectPhysics, PropagationError> {
        self.objects.get(id).ok_or_else(|| GraphError::UnknownNode(id.to_string()).into())
    }

    pub fn wavenumber_of(&self, id: &str) -> Result<f64, PropagationError> {
        self.physics(id)?.wavenumber.ok_or_else(|| PropagationError::MissingMaterial(id.to_string()))
    }

    pub fn source_origin(&self, id: &str) -> Result<Vec3, PropagationError> {
        Ok(self.physics(id)?.origin)
    }

    pub fn aabb(&self, id: &str) -> Result<Aabb, PropagationError> {
        Ok(self.physics(id)?.aabb)
    }

    pub fn path_attenuation(&self, query: &AttenuationQuery) -> Result<GainResult, PropagationError> {
        let nodes = &query.path.nodes;
        if nodes.is_empty() {
            return Err(GraphError::NoPath.into());
        }
        if !query.source_point.is_finite() || !query.touch_point.is_finite() {
            return Err(PropagationError::Domain("non-finite source or touch point".into()));
        }
        let last = self.physics(query.path.target())?;
        let mut points = Vec::with_capacity(nodes.len() + 1);
        points.push(query.source_point);
        for pair in nodes.windows(2) {
            let (a, b) = (self.physics(&pair[0])?, self.physics(&pair[1])?);
            points.push(a.aabb.contact_point(&b.aabb));
        }
        points.push(last.aabb.clamp(query.touch_point));

        let mut segments = Vec::with_capacity(nodes.len());
        let mut gain = 1.0;
        for (i, object) in nodes.iter().enumerate() {
            let k = self.wavenumber_of(object)?;
            let (from, to) = (points[i], points[i + 1]);
            let length = from.distance(&to);
            // Without propagation only the source itself vibrates, with its
            // own decay away from R0, so it never exceeds the attenuated gain.
            let segment_gain = match query.mode {
                PropagationMode::NoPropagation if nodes.len() > 1 => 0.0,
                PropagationMode::FullPropagation => 1.0,
                _ if length >= DEGENERATE_SEGMENT => attenuation_ratio(k, length)?,
                _ => 1.0,
            };
            gain *= segment_gain;
            segments.push(SegmentGain { object: object.clone(), from, to, length, wavenumber: k, gain: segment_gain });
        }
        Ok(GainResult { source: nodes[0].clone(), gain, path: query.path.clone(), segments })
    }

    /// Gains felt at a touch, one entry per source that contributes.
    pub fn touch_gain(
        &self,
        graph: &ContactGraph,
        touch: &Touch,
        mode: PropagationMode,
    ) -> Result<Vec<GainResult>, PropagationError> {
        if !graph.contains(&touch.object) {
            return Err(GraphError::UnknownNode(touch.object.clone()).into());
        }
        self.physics(&touch.object)?;
        if mode == PropagationMode::NoPropagation {
            if !graph.is_source(&touch.object) {
                return Ok(Vec::new());
            }
            let path = PropagationPath { nodes: vec![touch.object.clone()] };
            let source_point = self.source_origin(&touch.object)?;
            return Ok(vec![self.path_attenuation(&AttenuationQuery { path, source_point, touch_point: touch.point, mode })?]);
        }
        graph
            .shortest_paths_to(&touch.object)?
            .into_iter()
            .map(|path| {
                let source_point = self.source_origin(path.source())?;
                self.path_attenuation(&AttenuationQuery { path, source_point, touch_point: touch.point, mode })
            })
            .collect()
    }

    pub fn attenuation_map(
        &self,
        graph: &ContactGraph,
        object: &str,
        resolution: usize,
    ) -> Result<AttenuationMap, PropagationError> {
        if resolution == 0 {
            return Err(PropagationError::Domain("resolution must be at least 1".into()));
        }
        let aabb = self.aabb(object)?;
        let size = Vec3::new(aabb.max.x - aabb.min.x, aabb.max.y - aabb.min.y, aabb.max.z - aabb.min.z);
        let normal_axis = thin_axis(size);
        let axes = match normal_axis {
            0 => [1, 2],
            1 => [0, 2],
            _ => [0, 1],
        };
        let mut map = AttenuationMap {
            object: object.to_string(),
            resolution,
            axes,
            normal_axis,
            plane: aabb.max.axis(normal_axis),
            min: [aabb.min.axis(axes[0]), aabb.min.axis(axes[1])],
            max: [aabb.max.axis(axes[0]), aabb.max.axis(axes[1])],
            sources: graph.sources().into_iter().map(str::to_string).collect(),
            gains: Vec::new(),
        };
        map.gains = vec![vec![0.0; resolution * resolution]; map.sources.len()];
        for row in 0..resolution {
            for col in 0..resolution {
                let touch = Touch { object: object.to_string(), point: map.cell_point(row, col) };
                for result in self.touch_gain(graph, &touch, PropagationMode::Attenuated)? {
                    let s = map.sources.iter().position(|s| *s == result.source).expect("graph source");
                    map.gains[s][row * resolution + col] = result.gain;
                }
            }
        }
        Ok(map)
    }
}

/// Γ sampled at cell centres of an object's dominant face, per source.
/// Cells are row-major: columns step along `axes[0]`, rows along `axes[1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttenuationMap {
    pub object: String,
    pub resolution: usize,
    pub axes: [usize; 2],
    pub normal_axis: usize,
    /// Coordinate of the face along `normal_axis` (the box's upper side).
    pub plane: f64,
    pub min: [f64; 2],
    pub max: [f64; 2],
    pub sources: Vec<String>,
    pub gains: Vec<Vec<f64>>,
}

impl AttenuationMap {
    pub fn cell_point(&self, row: usize, col: usize) -> Vec3 {
        let n = self.resolution as f64;
        let mut p = Vec3::default();
        p.set_axis(self.normal_axis, self.plane);
        p.set_axis(self.axes[0], self.min[0] + (col as f64 + 0.5) / n * (self.max[0] - self.min[0]));
        p.set_axis(self.axes[1], self.min[1] + (row as f64 + 0.5) / n * (self.max[1] - self.min[1]));
        p
    }

    /// Strongest contribution per cell across sources (0 with no sources).
    pub fn combined(&self) -> Vec<f64> {
        let cells = self.resolution * self.resolution;
        (0..cells)
            .map(|i| self.gains.iter().map(|g| g[i]).fold(0.0, f64::max))
            .collect()
    }

    pub fn to_csv(&self, values: &[f64]) -> String {
        let mut out = String::new();
        for row in values.chunks(self.resolution) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.9}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// One-shot form of [`PropagationModel::path_attenuation`].
pub fn path_attenuation(
    query: &AttenuationQuery,
    scene: &SceneModel,
    derived: &DerivedGeometry,
    inferred: &InferredScene,
    angular_frequency: f64,
) -> Result<GainResult, PropagationError> {
    PropagationModel::new(scene, derived, inferred, angular_frequency)?.path_attenuation(query)
}

/// One-shot form of [`PropagationModel::touch_gain`].
pub fn touch_gain(
    scene: &SceneModel,
    derived: &DerivedGeometry,
    graph: &ContactGraph,
    inferred: &InferredScene,
    touch: &Touch,
    mode: PropagationMode,
    angular_frequency: f64,
) -> Result<Vec<GainResult>, PropagationError> {
    PropagationModel::new(scene, derived, inferred, angular_frequency)?.touch_gain(graph, touch, mode)
}
