//! Reference computations for tests. Nothing here shares code with the
//! engine: plate quantities are evaluated in 80-digit fixed point, paths are
//! found by permutation brute force, and the filter response comes from the
//! continuous-time transfer function.

pub mod bandpass;
pub mod fixed;
pub mod paths;
pub mod plate;

/// Reference material rows as decimal strings: name, density (kg/m³),
/// elastic modulus (N/m²), Poisson's ratio.
pub const MATERIAL_ROWS: [(&str, &str, &str, &str); 10] = [
    ("aluminum", "2700", "69000000000", "0.33"),
    ("steel", "7850", "200000000000", "0.30"),
    ("copper", "8960", "110000000000", "0.34"),
    ("glass", "2500", "70000000000", "0.23"),
    ("plywood", "600", "10000000000", "0.3"),
    ("gypsum board", "850", "2500000000", "0.25"),
    ("brick", "1920", "12000000000", "0.20"),
    ("asphalt", "2300", "1000000000", "0.35"),
    ("oak", "700", "12000000000", "0.30"),
    ("plexiglass", "1180", "3300000000", "0.35"),
];

/// Relative error with an absolute floor for values at or near zero.
pub fn relative_error(actual: f64, expected: f64) -> f64 {
    if expected == 0.0 {
        actual.abs()
    } else {
        ((actual - expected) / expected).abs()
    }
}
