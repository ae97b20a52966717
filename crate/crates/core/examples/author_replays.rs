//! Writes the kitchen scene manifest and the replay recordings under
//! `fixtures/`. The kitchen answers are hand-authored; the laundry recording
//! captures the bundled mock rules.
//!
//! cargo run -p vibroscene-core --example author_replays

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::json;
use vibroscene_core::inference::{
    infer_scene, AgentBackend, AgentKind, AgentRequest, InferenceError, MockBackend, RecordingBackend,
};
use vibroscene_core::scene::{load_scene, DerivedGeometry};

struct Item {
    id: &'static str,
    name: &'static str,
    position: [f64; 3],
    size: [f64; 3],
    contacts: &'static [&'static str],
    category: &'static str,
    material: &'static str,
    usage: &'static str,
    vibrate: Option<(&'static str, &'static str, &'static str)>,
}

const fn item(
    id: &'static str,
    name: &'static str,
    position: [f64; 3],
    size: [f64; 3],
    category: &'static str,
    material: &'static str,
    usage: &'static str,
) -> Item {
    Item { id, name, position, size, contacts: &[], category, material, usage, vibrate: None }
}

fn kitchen() -> Vec<Item> {
    let mut items = vec![
        item("floor", "Floor", [0.0, -0.0005, 0.0], [5.0, 0.001, 4.0], "floor", "oak", "People walk on it."),
        item("wall_n", "Wall North", [0.0, 1.3, -2.05], [5.0, 2.6, 0.1], "wall", "gypsum board", "It encloses the kitchen."),
        item("wall_s", "Wall South", [0.0, 1.3, 2.05], [5.0, 2.6, 0.1], "wall", "gypsum board", "It encloses the kitchen."),
        item("wall_e", "Wall East", [2.55, 1.3, 0.0], [0.1, 2.6, 4.0], "wall", "gypsum board", "It encloses the kitchen."),
        item("wall_w", "Wall West", [-2.55, 1.3, 0.0], [0.1, 2.6, 4.0], "wall", "gypsum board", "It encloses the kitchen."),
        item("counter", "Counter", [-1.5, 0.45, -1.7], [2.0, 0.9, 0.6], "kitchen counter", "plywood", "Food is prepared on its top."),
        item("stove", "Stove", [0.5, 0.45, -1.7], [0.6, 0.9, 0.6], "stove", "steel", "It cooks food on its heating plate."),
        item("heater", "Heater plate", [0.5, 0.905, -1.7], [0.3, 0.01, 0.3], "heating plate", "steel", "It heats cookware placed on it."),
        item("fridge", "Fridge", [1.8, 0.9, -1.65], [0.7, 1.8, 0.7], "refrigerator", "steel", "It keeps food cold."),
        item("microwave", "Microwave", [-1.8, 1.05, -1.7], [0.5, 0.3, 0.4], "microwave oven", "steel", "It reheats food."),
        item("kettle", "Kettle", [-1.25, 1.0, -1.75], [0.2, 0.2, 0.2], "kettle", "steel", "It boils water."),
        item("sink", "Sink", [-0.8, 0.85, -1.7], [0.6, 0.1, 0.45], "sink", "steel", "Dishes are washed in it."),
        item("dishwasher", "Dishwasher", [-0.15, 0.425, -1.7], [0.6, 0.85, 0.6], "dishwasher", "steel", "It washes dishes."),
        item("table", "Dining table", [0.0, 0.73, 0.6], [1.6, 0.04, 0.9], "dining table", "oak", "Meals are served on it."),
        item("pan_table", "Frying pan 2", [0.4, 0.775, 0.6], [0.28, 0.05, 0.28], "frying pan", "steel", "It is used to fry food."),
        item("chair_1", "Chair 1", [-0.5, 0.45, 0.0], [0.45, 0.04, 0.45], "chair", "oak", "People sit on it."),
        item("chair_2", "Chair 2", [0.5, 0.45, 0.0], [0.45, 0.04, 0.45], "chair", "oak", "People sit on it."),
        item("chair_3", "Chair 3", [-0.5, 0.45, 1.2], [0.45, 0.04, 0.45], "chair", "oak", "People sit on it."),
        item("chair_4", "Chair 4", [0.5, 0.45, 1.2], [0.45, 0.04, 0.45], "chair", "oak", "People sit on it."),
        item("plate_1", "Plate 1", [-0.5, 0.76, 0.35], [0.25, 0.02, 0.25], "plate", "ceramic", "Food is served on it."),
        item("plate_2", "Plate 2", [0.0, 0.76, 0.25], [0.25, 0.02, 0.25], "plate", "ceramic", "Food is served on it."),
        item("plate_3", "Plate 3", [-0.5, 0.76, 0.85], [0.25, 0.02, 0.25], "plate", "ceramic", "Food is served on it."),
        item("plate_4", "Plate 4", [0.0, 0.76, 0.95], [0.25, 0.02, 0.25], "plate", "ceramic", "Food is served on it."),
        item("cup_1", "Cup 1", [-0.7, 0.8, 0.3], [0.08, 0.1, 0.08], "cup", "ceramic", "People drink from it."),
        item("cup_2", "Cup 2", [0.2, 0.8, 0.2], [0.08, 0.1, 0.08], "cup", "ceramic", "People drink from it."),
        item("cup_3", "Cup 3", [-0.7, 0.8, 0.9], [0.08, 0.1, 0.08], "cup", "ceramic", "People drink from it."),
        item("cup_4", "Cup 4", [0.2, 0.8, 1.0], [0.08, 0.1, 0.08], "cup", "ceramic", "People drink from it."),
        item("window", "Window", [1.0, 1.5, -1.995], [1.0, 1.0, 0.01], "window pane", "glass", "It lets light in."),
        item("cabinet_1", "Wall cabinet 1", [-2.0, 1.8, -1.83], [0.55, 0.7, 0.35], "wall cabinet", "plywood", "It stores dishes."),
        item("cabinet_2", "Wall cabinet 2", [-1.4, 1.8, -1.83], [0.55, 0.7, 0.35], "wall cabinet", "plywood", "It stores dishes."),
        item("cabinet_3", "Wall cabinet 3", [-0.8, 1.8, -1.83], [0.55, 0.7, 0.35], "wall cabinet", "plywood", "It stores dishes."),
        item("hood", "Range hood", [0.5, 1.9, -1.8], [0.6, 0.3, 0.4], "range hood", "steel", "It extracts cooking fumes."),
        item("board", "Cutting board", [-1.2, 0.91, -1.5], [0.4, 0.02, 0.3], "cutting board", "oak", "Food is cut on it."),
        item("toaster", "Toaster", [-2.2, 1.0, -1.7], [0.3, 0.2, 0.2], "toaster", "steel", "It toasts bread."),
        item("bin", "Trash bin", [2.2, 0.35, 1.6], [0.35, 0.7, 0.35], "trash bin", "plexiglass", "Waste is thrown into it."),
        item("lamp", "Ceiling lamp", [0.0, 2.5, 0.5], [0.4, 0.2, 0.4], "ceiling lamp", "glass", "It lights the room."),
        item("clock", "Wall clock", [-2.48, 1.9, 0.5], [0.05, 0.3, 0.3], "wall clock", "plexiglass", "It shows the time."),
        item("radio", "Radio", [-0.4, 0.83, 0.6], [0.3, 0.16, 0.12], "radio", "plexiglass", "It plays the news."),
        item("vase", "Vase", [0.0, 0.85, 0.55], [0.12, 0.2, 0.12], "vase", "glass", "It holds flowers."),
        item("bowl", "Fruit bowl", [-0.1, 0.79, 0.8], [0.25, 0.08, 0.25], "fruit bowl", "ceramic", "It holds fruit."),
        item("pot", "Cooking pot", [0.65, 0.85, 0.4], [0.25, 0.2, 0.25], "cooking pot", "steel", "Soup is cooked in it."),
        item("rack", "Spice rack", [2.45, 1.5, -0.5], [0.1, 0.5, 0.6], "spice rack", "plywood", "It holds spice jars."),
        item("door", "Door", [2.5, 1.0, 1.2], [0.05, 2.0, 0.9], "door", "oak", "People enter through it."),
    ];
    let mut pan = item("pan_heater", "Frying pan", [0.5, 0.935, -1.7], [0.28, 0.05, 0.28], "frying pan", "steel", "It is used to fry food on the stove.");
    pan.vibrate = Some((
        "It sits on a hot heating plate, so the heat makes it tremble slightly.",
        "Frying pan sizzles and ticks softly on the hot plate",
        "frying pan sizzle",
    ));
    items.insert(9, pan);
    for it in items.iter_mut() {
        match it.id {
            "fridge" => {
                it.vibrate = Some((
                    "Its compressor runs and shakes the cabinet.",
                    "Refrigerator hums steadily as its compressor runs",
                    "fridge hum",
                ))
            }
            "dishwasher" => {
                it.vibrate = Some((
                    "Its pump and spray arms run during a wash cycle.",
                    "Dishwasher swishes and churns through its wash cycle",
                    "dishwasher swish",
                ))
            }
            "table" | "chair_1" | "chair_2" | "chair_3" | "chair_4" => it.contacts = &["floor"],
            _ => {}
        }
    }
    items
}

fn material(category: &str) -> serde_json::Value {
    let (density, e, nu, damping) = match category {
        "oak" => (700.0, 12.0, 0.30, 0.01),
        "gypsum board" => (850.0, 2.5, 0.25, 0.03),
        "plywood" => (600.0, 10.0, 0.3, 0.02),
        "steel" => (7850.0, 200.0, 0.30, 0.002),
        "glass" => (2500.0, 70.0, 0.23, 0.002),
        "plexiglass" => (1180.0, 3.3, 0.35, 0.03),
        "ceramic" => (2400.0, 70.0, 0.22, 0.01),
        _ => (0.0, 0.0, 0.0, 0.0),
    };
    json!({"density": density, "youngs_modulus": e, "poissons_ratio": nu, "damping_ratio": damping})
}

struct Scripted {
    items: BTreeMap<&'static str, Item>,
}

impl AgentBackend for Scripted {
    fn complete(&self, request: &AgentRequest) -> Result<String, InferenceError> {
        let subject = request.subject.as_deref().unwrap_or_default();
        let item = self.items.get(subject);
        let missing = || InferenceError::Backend(format!("no scripted answer for `{subject}`"));
        Ok(match request.agent {
            AgentKind::SceneAnalyzer => "Kitchen".to_string(),
            AgentKind::ObjectAnalyzer => {
                let it = item.ok_or_else(missing)?;
                let (vibrate, reason) = match it.vibrate {
                    Some((reason, _, _)) => (true, reason),
                    None if it.category == "frying pan" => (false, "A pan stays still unless a heat source warms it."),
                    None => (false, "Nothing in or under it produces motion."),
                };
                json!({
                    "object_category": it.category,
                    "object_category_reason": format!("The name and size fit a {} in a kitchen.", it.category),
                    "material_category": it.material,
                    "usage": it.usage,
                    "estimated_size": request.bindings["size"],
                    "estimated_size_reason": "The given size is typical for this object.",
                    "should_vibrate": vibrate,
                    "should_vibrate_reason": reason,
                })
                .to_string()
            }
            AgentKind::MaterialEstimator => material(&request.bindings["material_category"]).to_string(),
            AgentKind::VibrationDescriber => {
                let (_, free_form, keywords) = item.and_then(|i| i.vibrate).ok_or_else(missing)?;
                format!("```json\n{}\n```", json!({"free_form": free_form, "keywords": keywords}))
            }
        })
    }
}

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let items = kitchen();
    assert_eq!(items.len(), 44);
    let objects: Vec<_> = items
        .iter()
        .map(|it| {
            let mut o = json!({"id": it.id, "name": it.name, "position": it.position, "size": it.size});
            if !it.contacts.is_empty() {
                o["explicit_contacts"] = json!(it.contacts);
            }
            o
        })
        .collect();
    let manifest = serde_json::to_string_pretty(&json!({
        "scene_name": "Presentation",
        "scene_images": [],
        "objects": objects,
    }))
    .unwrap()
        + "\n";
    std::fs::write(root.join("scenes/kitchen_presentation.json"), &manifest).unwrap();

    let scene = load_scene(manifest.as_bytes()).unwrap();
    let derived = DerivedGeometry::derive(&scene);
    let recorder = RecordingBackend::new(Scripted { items: items.into_iter().map(|i| (i.id, i)).collect() });
    infer_scene(&scene, &derived, &recorder).unwrap();
    recorder.save(&root.join("fixtures/kitchen.replay.json")).unwrap();

    let laundry = load_scene(&std::fs::read(root.join("scenes/study2_laundry.json")).unwrap()).unwrap();
    let recorder = RecordingBackend::new(MockBackend::bundled());
    infer_scene(&laundry, &DerivedGeometry::derive(&laundry), &recorder).unwrap();
    recorder.save(&root.join("fixtures/laundry.replay.json")).unwrap();
}
