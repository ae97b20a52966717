//! Built-in reference materials.
//!
//! Density, elastic modulus and Poisson's ratio for ten everyday materials as
//! estimated by GPT-4o, which fall inside published measurement ranges.

use super::{InferenceError, MaterialProperties};

/// One row: name, density (kg/m³), elastic modulus (GPa), Poisson's ratio.
const REFERENCE_ROWS: [(&str, f64, f64, f64); 10] = [
    ("aluminum", 2700.0, 69.0, 0.33),
    ("steel", 7850.0, 200.0, 0.30),
    ("copper", 8960.0, 110.0, 0.34),
    ("glass", 2500.0, 70.0, 0.23),
    ("plywood", 600.0, 10.0, 0.3),
    ("gypsum board", 850.0, 2.5, 0.25),
    ("brick", 1920.0, 12.0, 0.20),
    ("asphalt", 2300.0, 1.0, 0.35),
    ("oak", 700.0, 12.0, 0.30),
    ("plexiglass", 1180.0, 3.3, 0.35),
];

pub fn gpa_to_pa(gpa: f64) -> f64 {
    gpa * 1e9
}

/// Names of every built-in material, in table order.
pub fn reference_material_names() -> impl Iterator<Item = &'static str> {
    REFERENCE_ROWS.iter().map(|row| row.0)
}

pub fn lookup_reference_material(name: &str) -> Result<MaterialProperties, InferenceError> {
    let key = normalize(name);
    REFERENCE_ROWS
        .iter()
        .find(|row| normalize(row.0) == key)
        .map(|&(_, density, modulus_gpa, poisson)| MaterialProperties {
            density,
            elastic_modulus: gpa_to_pa(modulus_gpa),
            poissons_ratio: poisson,
            damping_ratio: 0.0,
        })
        .ok_or_else(|| InferenceError::UnknownMaterial(name.to_string()))
}

fn normalize(name: &str) -> String {
    name.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_is_case_insensitive() {
        let glass = lookup_reference_material("Glass").unwrap();
        assert_eq!((glass.density, glass.elastic_modulus, glass.poissons_ratio), (2500.0, 70e9, 0.23));
        let oak = lookup_reference_material("OAK").unwrap();
        assert_eq!((oak.density, oak.elastic_modulus, oak.poissons_ratio), (700.0, 12e9, 0.30));
        assert!(lookup_reference_material("gypsum-board").is_ok());
        assert_eq!(oak.damping_ratio, 0.0);
    }

    #[test]
    fn unknown_material() {
        assert!(matches!(
            lookup_reference_material("unobtainium"),
            Err(InferenceError::UnknownMaterial(n)) if n == "unobtainium"
        ));
    }
}
