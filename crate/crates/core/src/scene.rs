//! Scene manifests and the geometry derived from them.
//!
//! Every object is an axis-aligned box centred on `position` with extents
//! `size`. The box stands in for the object's dominant surface (a tabletop
//! rather than the whole table), so contacts that geometry cannot see, such
//! as table legs on a floor, are declared with `explicit_contacts`.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_CONTACT_EPSILON: f64 = 0.005;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("malformed scene manifest: {0}")]
    Parse(String),
    #[error("invalid scene: {0}")]
    Validation(String),
    #[error("degenerate size {0}: every component must be positive")]
    DegenerateSize(Vec3),
    #[error("unknown object `{0}`")]
    UnknownObject(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance(&self, other: &Vec3) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn min_component(&self) -> f64 {
        self.x.min(self.y).min(self.z)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn axis(&self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    pub fn set_axis(&mut self, axis: usize, value: f64) {
        match axis {
            0 => self.x = value,
            1 => self.y = value,
            _ => self.z = value,
        }
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(v: [f64; 3]) -> Self {
        Vec3::new(v[0], v[1], v[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        v.to_array()
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// Parses the comma separated `"x,y,z"` triple agents use for sizes.
pub fn parse_size_triple(text: &str) -> Result<Vec3, SceneError> {
    let trimmed = text.trim().trim_matches(|c| c == '\'' || c == '"' || c == '(' || c == ')');
    let parts: Vec<&str> = trimmed.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(SceneError::Parse(format!("expected three comma separated values, got `{text}`")));
    }
    let mut out = [0.0; 3];
    for (slot, part) in out.iter_mut().zip(&parts) {
        *slot = part
            .parse::<f64>()
            .map_err(|_| SceneError::Parse(format!("`{part}` in `{text}` is not a number")))?;
    }
    let v = Vec3::from(out);
    if !v.is_finite() {
        return Err(SceneError::Parse(format!("non-finite size `{text}`")));
    }
    Ok(v)
}

/// Thickness of a plate-like object: its thinnest extent.
pub fn dominant_surface_thickness(size: Vec3) -> Result<f64, SceneError> {
    if !(size.x > 0.0 && size.y > 0.0 && size.z > 0.0) || !size.is_finite() {
        return Err(SceneError::DegenerateSize(size));
    }
    Ok(size.min_component())
}

/// Index of the thinnest axis (0 = x, 1 = y, 2 = z); the first wins on ties.
pub fn thin_axis(size: Vec3) -> usize {
    let mut best = 0;
    for axis in 1..3 {
        if size.axis(axis) < size.axis(best) {
            best = axis;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn from_center_size(center: Vec3, size: Vec3) -> Self {
        let half = Vec3::new(size.x / 2.0, size.y / 2.0, size.z / 2.0);
        Aabb {
            min: Vec3::new(center.x - half.x, center.y - half.y, center.z - half.z),
            max: Vec3::new(center.x + half.x, center.y + half.y, center.z + half.z),
        }
    }

    pub fn centroid(&self) -> Vec3 {
        Vec3::new(
            (self.min.x + self.max.x) / 2.0,
            (self.min.y + self.max.y) / 2.0,
            (self.min.z + self.max.z) / 2.0,
        )
    }

    pub fn inflate(&self, by: f64) -> Aabb {
        Aabb {
            min: Vec3::new(self.min.x - by, self.min.y - by, self.min.z - by),
            max: Vec3::new(self.max.x + by, self.max.y + by, self.max.z + by),
        }
    }

    /// Closed-interval overlap test on all three axes.
    pub fn overlaps(&self, other: &Aabb) -> bool {
        (0..3).all(|a| self.min.axis(a) <= other.max.axis(a) && other.min.axis(a) <= self.max.axis(a))
    }

    pub fn clamp(&self, p: Vec3) -> Vec3 {
        Vec3::new(
            p.x.clamp(self.min.x, self.max.x),
            p.y.clamp(self.min.y, self.max.y),
            p.z.clamp(self.min.z, self.max.z),
        )
    }

    /// Centroid of the overlap region of two boxes. On an axis where the
    /// boxes are disjoint the midpoint of the gap is used instead, so the
    /// result is defined for explicitly declared contacts too.
    pub fn contact_point(&self, other: &Aabb) -> Vec3 {
        let mut p = Vec3::default();
        for a in 0..3 {
            let lo = self.min.axis(a).max(other.min.axis(a));
            let hi = self.max.axis(a).min(other.max.axis(a));
            p.set_axis(a, (lo + hi) / 2.0);
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneObject {
    pub id: String,
    pub name: String,
    pub position: Vec3,
    pub size: Vec3,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub isolated_images: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub context_images: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explicit_contacts: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_override: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub material_override: Option<String>,
    /// Point where a source's vibration originates; the box centroid when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_origin: Option<Vec3>,
    /// Free-text steering passed to the object analyzer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_prompt: Option<String>,
}

impl SceneObject {
    pub fn aabb(&self) -> Aabb {
        Aabb::from_center_size(self.position, self.size)
    }

    pub fn origin(&self) -> Vec3 {
        self.source_origin.unwrap_or_else(|| self.aabb().centroid())
    }
}

fn default_epsilon() -> f64 {
    DEFAULT_CONTACT_EPSILON
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneModel {
    pub scene_name: String,
    #[serde(default)]
    pub scene_images: Vec<String>,
    #[serde(default = "default_epsilon")]
    pub contact_epsilon: f64,
    pub objects: Vec<SceneObject>,
}

impl SceneModel {
    pub fn object(&self, id: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.objects.iter().position(|o| o.id == id)
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if self.objects.is_empty() {
            return Err(SceneError::Validation("scene has no objects".into()));
        }
        if !(self.contact_epsilon > 0.0 && self.contact_epsilon.is_finite()) {
            return Err(SceneError::Validation(format!(
                "contact_epsilon must be positive, got {}",
                self.contact_epsilon
            )));
        }
        let mut seen = HashSet::new();
        for obj in &self.objects {
            if obj.id.is_empty() {
                return Err(SceneError::Validation("object with empty id".into()));
            }
            if !seen.insert(obj.id.as_str()) {
                return Err(SceneError::Validation(format!("duplicate object id `{}`", obj.id)));
            }
            if !obj.position.is_finite() {
                return Err(SceneError::Validation(format!("object `{}` has a non-finite position", obj.id)));
            }
            if let Some(origin) = obj.source_origin {
                if !origin.is_finite() {
                    return Err(SceneError::Validation(format!("object `{}` has a non-finite source_origin", obj.id)));
                }
            }
            if dominant_surface_thickness(obj.size).is_err() {
                return Err(SceneError::Validation(format!(
                    "object `{}` has non-positive size {}",
                    obj.id, obj.size
                )));
            }
        }
        for obj in &self.objects {
            for other in obj.explicit_contacts.iter().flatten() {
                if !seen.contains(other.as_str()) {
                    return Err(SceneError::Validation(format!(
                        "object `{}` declares contact with unknown object `{other}`",
                        obj.id
                    )));
                }
                if other == &obj.id {
                    return Err(SceneError::Validation(format!("object `{}` declares contact with itself", obj.id)));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serialization is infallible")
    }
}

pub fn load_scene(manifest: &[u8]) -> Result<SceneModel, SceneError> {
    let scene: SceneModel = serde_json::from_slice(manifest).map_err(|e| SceneError::Parse(e.to_string()))?;
    scene.validate()?;
    Ok(scene)
}

/// Unordered pair of object ids, stored with the smaller id first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ContactPair(pub String, pub String);

impl ContactPair {
    pub fn new(a: &str, b: &str) -> Self {
        if a <= b {
            ContactPair(a.to_string(), b.to_string())
        } else {
            ContactPair(b.to_string(), a.to_string())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivedGeometry {
    pub relative_height: BTreeMap<String, f64>,
    pub aabb: BTreeMap<String, Aabb>,
    pub contacts: BTreeSet<ContactPair>,
}

impl DerivedGeometry {
    pub fn derive(scene: &SceneModel) -> Self {
        DerivedGeometry {
            relative_height: compute_relative_heights(scene),
            aabb: scene.objects.iter().map(|o| (o.id.clone(), o.aabb())).collect(),
            contacts: derive_contacts(scene),
        }
    }

    pub fn contact_point(&self, a: &str, b: &str) -> Option<Vec3> {
        Some(self.aabb.get(a)?.contact_point(self.aabb.get(b)?))
    }
}

/// Height of each object's bottom face above the lowest bottom face in the scene.
pub fn compute_relative_heights(scene: &SceneModel) -> BTreeMap<String, f64> {
    let bottoms: Vec<(&str, f64)> = scene.objects.iter().map(|o| (o.id.as_str(), o.aabb().min.y)).collect();
    let floor = bottoms.iter().map(|(_, y)| *y).fold(f64::INFINITY, f64::min);
    bottoms.into_iter().map(|(id, y)| (id.to_string(), y - floor)).collect()
}

pub fn derive_contacts(scene: &SceneModel) -> BTreeSet<ContactPair> {
    let mut contacts = BTreeSet::new();
    let boxes: Vec<Aabb> = scene.objects.iter().map(|o| o.aabb().inflate(scene.contact_epsilon)).collect();
    for (i, a) in scene.objects.iter().enumerate() {
        for (j, b) in scene.objects.iter().enumerate().skip(i + 1) {
            if boxes[i].overlaps(&boxes[j]) {
                contacts.insert(ContactPair::new(&a.id, &b.id));
            }
        }
        for other in a.explicit_contacts.iter().flatten() {
            if other != &a.id {
                contacts.insert(ContactPair::new(&a.id, other));
            }
        }
    }
    contacts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obj(id: &str, position: [f64; 3], size: [f64; 3]) -> SceneObject {
        SceneObject {
            id: id.into(),
            name: id.into(),
            position: position.into(),
            size: size.into(),
            isolated_images: vec![],
            context_images: vec![],
            explicit_contacts: None,
            source_override: None,
            material_override: None,
            source_origin: None,
            user_prompt: None,
        }
    }

    fn scene(objects: Vec<SceneObject>) -> SceneModel {
        SceneModel {
            scene_name: "test".into(),
            scene_images: vec![],
            contact_epsilon: DEFAULT_CONTACT_EPSILON,
            objects,
        }
    }

    #[test]
    fn minimal_manifest_gets_defaults() {
        let s = load_scene(br#"{"scene_name":"x","objects":[{"id":"a","name":"A","position":[0,0,0],"size":[1,1,1]}]}"#)
            .unwrap();
        assert_eq!(s.contact_epsilon, 0.005);
        assert!(s.scene_images.is_empty());
        assert_eq!(s.objects[0].explicit_contacts, None);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = load_scene(
            br#"{"scene_name":"x","scene_images":[],"objects":[
                {"id":"table","name":"A","position":[0,0,0],"size":[1,1,1]},
                {"id":"table","name":"B","position":[5,0,0],"size":[1,1,1]}]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, SceneError::Validation(m) if m.contains("duplicate")));
    }

    #[test]
    fn unknown_keys_and_bad_sizes_rejected() {
        assert!(matches!(
            load_scene(br#"{"scene_name":"x","objects":[],"colour":1}"#),
            Err(SceneError::Parse(_))
        ));
        assert!(matches!(
            load_scene(br#"{"scene_name":"x","objects":[{"id":"a","name":"A","position":[0,0,0],"size":[1,0,1]}]}"#),
            Err(SceneError::Validation(_))
        ));
        assert!(matches!(
            load_scene(br#"{"scene_name":"x","objects":[{"id":"a","name":"A","position":[0,0,0],"size":[1,1,1],"explicit_contacts":["ghost"]}]}"#),
            Err(SceneError::Validation(m)) if m.contains("ghost")
        ));
        assert!(matches!(load_scene(br#"{"scene_name":"x","objects":[]}"#), Err(SceneError::Validation(_))));
        assert!(matches!(load_scene(b"not json"), Err(SceneError::Parse(_))));
    }

    #[test]
    fn relative_heights_from_bottom_faces() {
        let s = scene(vec![obj("floor", [0.0, 0.01, 0.0], [4.0, 0.02, 4.0]), obj("table", [0.0, 0.76, 0.0], [2.0, 0.02, 1.0])]);
        let h = compute_relative_heights(&s);
        assert_eq!(h["floor"], 0.0);
        assert!((h["table"] - 0.75).abs() < 1e-12);

        let single = scene(vec![obj("a", [3.0, 7.0, 1.0], [1.0, 1.0, 1.0])]);
        assert_eq!(compute_relative_heights(&single)["a"], 0.0);
    }

    #[test]
    fn separated_objects_have_no_contact() {
        let s = scene(vec![obj("a", [0.0, 0.0, 0.0], [1.0, 1.0, 1.0]), obj("b", [2.0, 0.0, 0.0], [1.0, 1.0, 1.0])]);
        assert!(derive_contacts(&s).is_empty());
    }

    #[test]
    fn explicit_contact_ignores_geometry() {
        let mut hover = obj("lamp", [0.0, 3.0, 0.0], [0.2, 0.2, 0.2]);
        hover.explicit_contacts = Some(vec!["floor".into()]);
        let s = scene(vec![obj("floor", [0.0, 0.0, 0.0], [4.0, 0.02, 4.0]), hover]);
        let c = derive_contacts(&s);
        assert_eq!(c.len(), 1);
        assert!(c.contains(&ContactPair::new("floor", "lamp")));
    }

    #[test]
    fn thickness_is_min_component() {
        assert_eq!(dominant_surface_thickness(Vec3::new(1.2, 0.02, 0.8)).unwrap(), 0.02);
        assert_eq!(dominant_surface_thickness(Vec3::new(0.01, 0.01, 0.01)).unwrap(), 0.01);
        let parsed = parse_size_triple("1.0,0.05,2.0").unwrap();
        assert_eq!(dominant_surface_thickness(parsed).unwrap(), 0.05);
        assert!(matches!(dominant_surface_thickness(Vec3::new(1.0, -1.0, 1.0)), Err(SceneError::DegenerateSize(_))));
        assert!(parse_size_triple("1.0,abc,2").is_err());
        assert!(parse_size_triple("1.0,2.0").is_err());
    }

    #[test]
    fn contact_point_is_overlap_centroid() {
        let phone = Aabb::from_center_size(Vec3::new(-0.8, 0.754, 0.0), Vec3::new(0.07, 0.008, 0.15));
        let table = Aabb::from_center_size(Vec3::new(0.0, 0.74, 0.0), Vec3::new(2.0, 0.02, 1.0));
        let p = phone.contact_point(&table);
        assert!((p.x + 0.8).abs() < 1e-12 && (p.y - 0.75).abs() < 1e-12 && p.z.abs() < 1e-12);
        // disjoint on y: midpoint of the gap
        let a = Aabb::from_center_size(Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 1.0, 1.0));
        let b = Aabb::from_center_size(Vec3::new(0.0, 2.0, 0.0), Vec3::new(1.0, 1.0, 1.0));
        assert!((a.contact_point(&b).y - 1.0).abs() < 1e-12);
    }
}
