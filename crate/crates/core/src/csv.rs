//! Shared CSV formatting: reals round-trip with 17 significant digits.

pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn complex_cells(z: crate::ExtComplex) -> String {
    match z.finite() {
        Some(z) => format!("{},{}", real(z.re), real(z.im)),
        None => "inf,inf".to_string(),
    }
}
