//! Thin-plate bending stiffness, flexural wavenumber and exponential decay.

use crate::fixed::Fixed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateReference {
    pub stiffness: f64,
    pub wavenumber: f64,
}

/// D = E h³ / (12 (1 − ν²)) and k = (ρ h ω² / D)^(1/4) with ω = 2π f.
/// All inputs are decimal strings so nothing is rounded before evaluation.
pub fn plate(density: &str, modulus: &str, poisson: &str, thickness: &str, frequency_hz: &str) -> (Fixed, Fixed) {
    let rho = Fixed::parse(density);
    let e = Fixed::parse(modulus);
    let nu = Fixed::parse(poisson);
    let h = Fixed::parse(thickness);
    let omega = &(&Fixed::from_int(2) * &Fixed::pi()) * &Fixed::parse(frequency_hz);
    let h3 = &(&h * &h) * &h;
    let denom = &Fixed::from_int(12) * &(&Fixed::one() - &(&nu * &nu));
    let d = (&e * &h3).div(&denom);
    let k = (&(&rho * &h) * &(&omega * &omega)).div(&d).sqrt().sqrt();
    (d, k)
}

pub fn plate_f64(density: &str, modulus: &str, poisson: &str, thickness: &str, frequency_hz: &str) -> PlateReference {
    let (d, k) = plate(density, modulus, poisson, thickness, frequency_hz);
    PlateReference { stiffness: d.to_f64(), wavenumber: k.to_f64() }
}

/// e^(−k d) from an exact wavenumber and a decimal distance.
pub fn decay(wavenumber: &Fixed, distance: &str) -> f64 {
    (-&(wavenumber * &Fixed::parse(distance))).exp().to_f64()
}
