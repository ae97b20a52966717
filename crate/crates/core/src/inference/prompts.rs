//! Prompt templates for the four agents. Placeholders are written `{name}`.

use std::collections::BTreeMap;

use super::{AgentKind, InferenceError};

const SCENE_ANALYZER: &str = "\
Your role is to recognize the category of a Unity scene from its name and images.
The name of the Unity scene is {scene_name}.
The images sent were taken from different angles in the scene.
Estimate its scene category in 1-2 words from its name and images.
This category should be very specific without ambiguity. {scene_name} does not necessarily mean the correct scene category.
The scene category should be the name of its environment or scene, not a summary of the objects in images.
Take into account only the images showing objects clearly, and ignore the other images.
Provide the scene category without any affixes. If it is extremely difficult to estimate the scene category, answer 'undefined'.";

const OBJECT_ANALYZER: &str = "\
Your role is to recognize the contexts of a Unity gameobject from its name, size, position, and images.
The user prompt is {user_prompt}. If the user prompt is not empty, conduct the below estimation with the highest importance on the user prompt.
The scene category of the Unity scene is {scene_category}.
The object name in a Unity scene is {object_name}.
The size of the object in the scene is {size} in a meter unit. It is not decided which value of this size vector is the width, height, or depth. This size is a dimension of the dominant surface of the object. For example, if the object is a table with legs, the value is the size of the tabletop.
The object is placed at the Y position of {position_y} in the scene in a meter unit.
The sent images comprise two sets. The first {len_isolated} images are isolated images that show an object of interest in the center part from different angles. The other {len_scene} images are scene images that show the same object in the scene from different angles.
Estimate its object category in 1-3 words from its name, size, position, and images. However, if {object_name} sounds like a boundary surface (e.g., floor, ceiling, wall) or a room, give the most importance for estimation to its object name and ignore its size.
This object category should be very specific without ambiguity (e.g., 'refrigerator' is better than 'appliance' in terms of clarity). {object_name} is not necessarily the correct object category.
If there are multiple options for the object category, choose the one that is most likely to exist in {scene_category}. Try not to choose a category that is not likely to exist in {scene_category}.
When you check the scene images, estimate the object category of only the object surrounded in a pink outline, and not consider the whole environment. If this pink outline does not completely surround an object or is not visualized at all in the scene images, consider the target object to be the object in the center of the scene images and most resembles the object in the isolated images.
Take into account only the images showing some objects clearly, and ignore the other images.
Take into account the object's authenticity based on whether it is being used in a physically plausible way in the scene images and whether its size roughly matches the typical size of its object category that humans use in everyday environments. This size check should not be too strict. If this object is not authentic, include a word to describe the authenticity (e.g., 'miniature' if the object is too small) in the estimated object category.
Position information can be used to estimate the object category, especially it has an ambiguous name and shape.
Do not estimate the object category from the light and reflective conditions because the images are taken from various lighting conditions.

If the object is a boundary surface, it is likely that one axis of {size} is too small in Unity. In that case, estimate the object size by replacing only that axis value with a typical value for the object category in meters and provide a reason in one sentence. Return the same value as {size} for the estimated size in the other cases. Note that you should return the value in a string format like '1.0,1.0,1.0'. For example, if the thickness of the room floor is too small, replace it with a typical value for the room floor.
Estimate its material category in 1 word from its isolated images and object category. If the object comprises multiple materials, choose the most dominant material. This material category should be as specific as possible, not a general term. (e.g., 'iron' or 'steel' should be used rather than 'metal' in terms of concreteness). If the object is not authentic, estimate the material category based on the object's authenticity. If the object seems a boundary surface and is textureless, estimate the material that is likely to be present in the {scene_category} based on its surface color.
Estimate how the object should be used in the scene in one sentence from the scene images. If humans generally use the object while holding it in the scene, consider that case.
Estimate whether the object should vibrate in the scene in some cases (bool) based on its scene images and estimated usage. For example, the target object could vibrate due to thermal energy propagated from surrounding objects or its internal mechanism. If humans generally use the object while holding it in the scene, consider that case. If the target object or an adjacent object is an electric machine, consider the vibration that can occur when they are powered on. Do not consider the propagation of mechanical vibration originating from adjacent objects.

Provide the object category and its reason, material category, usage, estimated size and its reason, whether the object should vibrate and its reason in a JSON format without any affixes. All structured outputs should be provided.";

const MATERIAL_ESTIMATOR: &str = "\
Your role is to estimate the material properties of a material category.
Estimate density in kg/m³, Young's modulus in GPa, Poisson's ratio, and damping ratio of {material_category} in float values. Strictly check that the values are provided in the correct unit.
Provide these numerical values in a JSON format without any affixes or units. All structured outputs should be provided. If you cannot estimate the material properties for some reason, assign 0 for all values.";

const VIBRATION_DESCRIBER: &str = "\
Your role is to describe how an object should vibrate in a Unity scene.
{object_category} is used in the following way: {usage}.
Describe how the object should vibrate in a simple and straightforward sentence with less than 15 words. This sentence should start from {object_category} and mention its vibration characteristics in simple words.
In Addition, provide keywords that describe the vibration by connecting two sets of words with blanks like '<Keyword A> <Keyword B>'. The first set has to be {object_category}. The second keyword should be one verb in its base form related to the vibration that best describes how the object vibrates in the scene. Do not use the word 'vibrate' in the keywords.
Provide the free-form sentence and the combined keywords in a JSON format without any affixes. All structured outputs should be provided.";

pub fn template(kind: AgentKind) -> &'static str {
    match kind {
        AgentKind::SceneAnalyzer => SCENE_ANALYZER,
        AgentKind::ObjectAnalyzer => OBJECT_ANALYZER,
        AgentKind::MaterialEstimator => MATERIAL_ESTIMATOR,
        AgentKind::VibrationDescriber => VIBRATION_DESCRIBER,
    }
}

/// Placeholder names used by a template, in order of first appearance.
pub fn placeholders(kind: AgentKind) -> Vec<&'static str> {
    let mut names = Vec::new();
    for segment in Segments::new(template(kind)) {
        if let Segment::Placeholder(name) = segment {
            if !names.contains(&name) {
                names.push(name);
            }
        }
    }
    names
}

pub fn render_prompt(kind: AgentKind, bindings: &BTreeMap<String, String>) -> Result<String, InferenceError> {
    let source = template(kind);
    let mut out = String::with_capacity(source.len() + 256);
    for segment in Segments::new(source) {
        match segment {
            Segment::Text(text) => out.push_str(text),
            Segment::Placeholder(name) => {
                let value = bindings
                    .get(name)
                    .ok_or_else(|| InferenceError::MissingBinding(name.to_string()))?;
                out.push_str(value);
            }
        }
    }
    Ok(out)
}

enum Segment<'a> {
    Text(&'a str),
    Placeholder(&'a str),
}

struct Segments<'a> {
    rest: &'a str,
}

impl<'a> Segments<'a> {
    fn new(source: &'a str) -> Self {
        Segments { rest: source }
    }
}

impl<'a> Iterator for Segments<'a> {
    type Item = Segment<'a>;

    fn next(&mut self) -> Option<Segment<'a>> {
        if self.rest.is_empty() {
            return None;
        }
        if let Some(inner) = self.rest.strip_prefix('{') {
            let end = inner.find('}').expect("templates close every placeholder");
            let name = &inner[..end];
            self.rest = &inner[end + 1..];
            return Some(Segment::Placeholder(name));
        }
        let end = self.rest.find('{').unwrap_or(self.rest.len());
        let text = &self.rest[..end];
        self.rest = &self.rest[end..];
        Some(Segment::Text(text))
    }
}
