//! A scene with its inference result, contact graph and propagation model,
//! ready for touch queries and rendering.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::audio::{AudioAsset, AudioError, AudioResolver};
use crate::dsp::RenderConfig;
use crate::graph::{build_graph, ContactGraph};
use crate::inference::{infer_scene, AgentBackend, InferenceError, InferredScene, MaterialOrigin, MaterialProperties};
use crate::propagation::{
    default_angular_frequency, AttenuationMap, GainResult, PropagationError, PropagationMode, PropagationModel, Touch,
};
use crate::render::{render_session, RenderContext, RenderError, RenderOutput, SessionScript};
use crate::scene::{ContactPair, DerivedGeometry, SceneError, SceneModel};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Render(#[from] RenderError),
}

/// Runs the agents, then resolves audio for every vibrating object.
pub fn infer_and_resolve(
    scene: &SceneModel,
    backend: &dyn AgentBackend,
    resolver: &AudioResolver,
) -> Result<InferredScene, SessionError> {
    let derived = DerivedGeometry::derive(scene);
    let mut inferred = infer_scene(scene, &derived, backend)?;
    resolver.resolve_scene(&mut inferred)?;
    Ok(inferred)
}

#[derive(Debug, Clone)]
pub struct PreparedScene {
    pub scene: SceneModel,
    pub derived: DerivedGeometry,
    pub inferred: InferredScene,
    pub graph: ContactGraph,
    pub model: PropagationModel,
    contact_overrides: BTreeMap<ContactPair, bool>,
}

impl PreparedScene {
    pub fn new(scene: SceneModel, inferred: InferredScene) -> Result<Self, SessionError> {
        PreparedScene::build(scene, inferred, BTreeMap::new())
    }

    fn build(
        scene: SceneModel,
        inferred: InferredScene,
        contact_overrides: BTreeMap<ContactPair, bool>,
    ) -> Result<Self, SessionError> {
        inferred.check_against(&scene)?;
        let derived = DerivedGeometry::derive(&scene);
        let mut graph = build_graph(&scene, &derived, &inferred);
        for (pair, present) in &contact_overrides {
            graph = graph.update_contact(&pair.0, &pair.1, *present).map_err(PropagationError::from)?;
        }
        let model = PropagationModel::new(&scene, &derived, &inferred, default_angular_frequency())?;
        Ok(PreparedScene { scene, derived, inferred, graph, model, contact_overrides })
    }

    pub fn contact_overrides(&self) -> &BTreeMap<ContactPair, bool> {
        &self.contact_overrides
    }

    pub fn touch_gain(&self, touch: &Touch, mode: PropagationMode) -> Result<Vec<GainResult>, SessionError> {
        Ok(self.model.touch_gain(&self.graph, touch, mode)?)
    }

    pub fn attenuation_map(&self, object: &str, resolution: usize) -> Result<AttenuationMap, SessionError> {
        Ok(self.model.attenuation_map(&self.graph, object, resolution)?)
    }

    /// Decoded audio for every current vibration source.
    pub fn source_audio(
        &self,
        resolver: &AudioResolver,
        sample_rate: u32,
    ) -> Result<BTreeMap<String, AudioAsset>, SessionError> {
        let mut assets = BTreeMap::new();
        for id in self.graph.sources() {
            let reference = self
                .inferred
                .object(id)
                .and_then(|o| o.audio.as_ref())
                .ok_or_else(|| RenderError::MissingAudio(id.to_string()))?;
            assets.insert(id.to_string(), resolver.load(reference, sample_rate)?);
        }
        Ok(assets)
    }

    pub fn render(
        &self,
        assets: &BTreeMap<String, AudioAsset>,
        script: &SessionScript,
        mode: PropagationMode,
        config: &RenderConfig,
    ) -> Result<RenderOutput, SessionError> {
        let ctx = RenderContext { model: &self.model, graph: &self.graph, assets };
        Ok(render_session(&ctx, script, mode, config)?)
    }

    /// Same scene with one object's material replaced.
    pub fn with_material(&self, id: &str, material: MaterialProperties) -> Result<Self, SessionError> {
        material.validate().map_err(|detail| InferenceError::Mismatch(format!("object `{id}`: {detail}")))?;
        let mut inferred = self.inferred.clone();
        let object = inferred.object_mut(id).ok_or_else(|| SceneError::UnknownObject(id.to_string()))?;
        object.material = material;
        object.material_origin = MaterialOrigin::Reference;
        PreparedScene::build(self.scene.clone(), inferred, self.contact_overrides.clone())
    }

    /// Same scene with a changed source flag. Enabling a source that has no
    /// vibration description is left to the caller (it needs the agents).
    pub fn with_source(&self, id: &str, is_source: bool) -> Result<Self, SessionError> {
        let mut scene = self.scene.clone();
        let index = scene.index_of(id).ok_or_else(|| SceneError::UnknownObject(id.to_string()))?;
        scene.objects[index].source_override = Some(is_source);
        PreparedScene::build(scene, self.inferred.clone(), self.contact_overrides.clone())
    }

    /// Same scene with a contact forced on or off, overriding geometry.
    pub fn with_contact(&self, a: &str, b: &str, present: bool) -> Result<Self, SessionError> {
        let mut overrides = self.contact_overrides.clone();
        overrides.insert(ContactPair::new(a, b), present);
        PreparedScene::build(self.scene.clone(), self.inferred.clone(), overrides)
    }
}
