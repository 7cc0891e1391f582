use congestion_core::ExtendedProb;

/// Smallest probability printed as a number; anything below prints as
/// `<1e-300`.
pub const REPORT_FLOOR: f64 = 1e-300;

/// Six significant digits in scientific notation, or `<1e-300`.
pub fn probability(p: ExtendedProb) -> String {
    if p < ExtendedProb::from_f64(REPORT_FLOOR) {
        "<1e-300".to_string()
    } else {
        p.to_scientific(6)
    }
}
