use super::HeatingParams;

/// Mean phonon occupation a time `delta_tau` after the blue pulse:
/// `a e^{-dt/tau} - b e^{-dt/eta} + n_init`, clamped at zero.
pub fn occupancy_at(heating: &HeatingParams, n_init: f64, delta_tau: f64) -> f64 {
    let d = heating.a * (-delta_tau / heating.tau).exp() - heating.b * (-delta_tau / heating.eta_rise).exp()
        + n_init;
    d.max(0.0)
}

/// Fringe model of the post-selected correlation,
/// `V cos(phi_b + phi_r - phi_c + omega)`.
pub fn ideal_correlation(phi_b: f64, phi_r: f64, visibility: f64, phi_c: f64, omega: f64) -> f64 {
    visibility * (phi_b + phi_r - phi_c + omega).cos()
}
