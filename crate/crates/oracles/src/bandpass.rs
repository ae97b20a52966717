//! Magnitude of the continuous-time second-order bandpass
//! H(s) = (ω0/Q) s / (s² + (ω0/Q) s + ω0²), evaluated at s = jω.

pub fn magnitude(f: f64, f0: f64, q: f64) -> f64 {
    let (w, w0) = (2.0 * std::f64::consts::PI * f, 2.0 * std::f64::consts::PI * f0);
    let bw = w0 / q;
    // numerator j·bw·w, denominator (w0² − w²) + j·bw·w
    let num = bw * w;
    let re = w0 * w0 - w * w;
    let im = bw * w;
    num / re.hypot(im)
}

pub fn to_db(gain: f64) -> f64 {
    20.0 * gain.log10()
}
