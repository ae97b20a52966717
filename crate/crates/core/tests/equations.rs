use std::time::Instant;

use proptest::prelude::*;
use vibroscene_core::inference::{lookup_reference_material, reference_material_names, InferenceError};
use vibroscene_core::propagation::{
    attenuation_ratio, bending_stiffness, default_angular_frequency, wavenumber, PlateParams, PropagationError,
};
use vibroscene_oracles::plate::{decay, plate};
use vibroscene_oracles::{relative_error, MATERIAL_ROWS};

const THICKNESSES: [&str; 3] = ["0.005", "0.01", "0.02"];
const DISTANCES: [&str; 4] = ["0", "0.4", "0.8", "1.2"];

#[test]
fn plate_quantities_match_high_precision_reference() {
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    for (name, density, modulus, poisson) in MATERIAL_ROWS {
        let m = lookup_reference_material(name).unwrap();
        for h in THICKNESSES {
            let (d_ref, k_ref) = plate(density, modulus, poisson, h, "250");
            let d = bending_stiffness(m.elastic_modulus, h.parse().unwrap(), m.poissons_ratio).unwrap();
            let k = wavenumber(m.density, h.parse().unwrap(), default_angular_frequency(), d).unwrap();
            worst = worst.max(relative_error(d, d_ref.to_f64()));
            worst = worst.max(relative_error(k, k_ref.to_f64()));
            for dist in DISTANCES {
                let g = attenuation_ratio(k, dist.parse().unwrap()).unwrap();
                let err = relative_error(g, decay(&k_ref, dist));
                assert!(err <= 1e-9, "{name} h={h} d={dist}: relative error {err}");
                worst = worst.max(err);
            }
        }
    }
    assert!(worst <= 1e-9, "worst relative error {worst}");
    assert!(started.elapsed().as_secs_f64() < 1.0, "took {:?}", started.elapsed());
}

#[test]
fn reference_table_is_reproduced_exactly() {
    let names: Vec<&str> = reference_material_names().collect();
    assert_eq!(names, MATERIAL_ROWS.iter().map(|r| r.0).collect::<Vec<_>>());
    for (name, density, modulus, poisson) in MATERIAL_ROWS {
        let m = lookup_reference_material(name).unwrap();
        assert_eq!(m.density, density.parse::<f64>().unwrap(), "{name}");
        assert_eq!(m.elastic_modulus, modulus.parse::<f64>().unwrap(), "{name}");
        assert_eq!(m.poissons_ratio, poisson.parse::<f64>().unwrap(), "{name}");
        assert_eq!(m.damping_ratio, 0.0);
    }
}

#[test]
fn reference_lookup_ignores_case_and_rejects_unknowns() {
    assert_eq!(lookup_reference_material("GYPSUM Board").unwrap().density, 850.0);
    assert_eq!(lookup_reference_material("Plexiglass").unwrap().elastic_modulus, 3.3e9);
    assert!(matches!(lookup_reference_material("unobtainium"), Err(InferenceError::UnknownMaterial(_))));
}

#[test]
fn out_of_domain_inputs_are_rejected() {
    assert!(matches!(bending_stiffness(1e9, 0.01, 0.5), Err(PropagationError::Domain(_))));
    assert!(matches!(bending_stiffness(1e9, -0.01, 0.3), Err(PropagationError::Domain(_))));
    assert!(matches!(bending_stiffness(0.0, 0.01, 0.3), Err(PropagationError::Domain(_))));
    assert!(matches!(wavenumber(f64::NAN, 0.01, 1.0, 1.0), Err(PropagationError::Domain(_))));
    assert!(matches!(attenuation_ratio(10.0, -0.1), Err(PropagationError::Domain(_))));
    assert!(matches!(attenuation_ratio(10.0, f64::INFINITY), Err(PropagationError::Domain(_))));
}

fn plate_strategy() -> impl Strategy<Value = PlateParams> {
    (100.0..20_000.0f64, 1e8..3e11f64, 0.0..0.49f64, 0.001..0.1f64, 20.0..2000.0f64).prop_map(
        |(density, elastic_modulus, poissons_ratio, thickness, f)| PlateParams {
            density,
            elastic_modulus,
            poissons_ratio,
            thickness,
            angular_frequency: 2.0 * std::f64::consts::PI * f,
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn doubling_frequency_scales_wavenumber_by_root_two(p in plate_strategy()) {
        let doubled = PlateParams { angular_frequency: 2.0 * p.angular_frequency, ..p };
        let ratio = doubled.wavenumber().unwrap() / p.wavenumber().unwrap();
        prop_assert!(relative_error(ratio, std::f64::consts::SQRT_2) <= 1e-12, "ratio {}", ratio);
    }

    #[test]
    fn doubling_thickness_scales_wavenumber_by_inverse_root_two(p in plate_strategy()) {
        let doubled = PlateParams { thickness: 2.0 * p.thickness, ..p };
        let ratio = doubled.wavenumber().unwrap() / p.wavenumber().unwrap();
        prop_assert!(relative_error(ratio, std::f64::consts::FRAC_1_SQRT_2) <= 1e-12, "ratio {}", ratio);
        let stiffness = doubled.bending_stiffness().unwrap() / p.bending_stiffness().unwrap();
        prop_assert!(relative_error(stiffness, 8.0) <= 1e-12);
    }

    #[test]
    fn attenuation_is_bounded_and_multiplicative(k in 0.1..100.0f64, a in 0.0..2.0f64, b in 0.0..2.0f64) {
        let ga = attenuation_ratio(k, a).unwrap();
        let gb = attenuation_ratio(k, b).unwrap();
        let gab = attenuation_ratio(k, a + b).unwrap();
        prop_assert!(ga > 0.0 && ga <= 1.0);
        prop_assert!(gab <= ga && gab <= gb);
        prop_assert!(relative_error(gab, ga * gb) <= 1e-12);
        prop_assert_eq!(attenuation_ratio(k, 0.0).unwrap(), 1.0);
    }
}
