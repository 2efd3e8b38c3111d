//! Parameter certificate for one gain point.

use hsdelay::params::{
    dissipation_constant, kato_constant, mu_bounds, phi_matrix, phi_star_matrix, psi_matrix,
    smallness_radius, theoretical_decay_rate, validate_gains,
};
use hsdelay::{Gains, LyapunovWeights, SymMatrix2, SystemParams};
use std::fmt::Write;

#[derive(Clone, Copy, Debug)]
pub struct CertifyArgs {
    pub alpha: f64,
    pub beta: f64,
    pub length: f64,
    pub delay: f64,
    pub mu1: Option<f64>,
    pub mu2: Option<f64>,
    pub radius: Option<f64>,
}

fn matrix_line(out: &mut String, name: &str, m: &SymMatrix2) {
    let (m1, m2) = m.leading_minors();
    let _ = writeln!(
        out,
        "{name:<5} = [[{}, {}], [{}, {}]]  minors ({m1}, {m2})  negative definite: {}",
        m.a11,
        m.a12,
        m.a12,
        m.a22,
        if m.is_negative_definite() {
            "yes"
        } else {
            "no"
        }
    );
}

/// Every quantity is reported; inadmissible inputs produce a message
/// instead of an error.
pub fn certificate(a: &CertifyArgs) -> String {
    let mut out = String::new();
    let g = Gains::unchecked(a.alpha, a.beta);
    let _ = writeln!(
        out,
        "gains: alpha = {}, beta = {}; L = {}, h = {}",
        a.alpha, a.beta, a.length, a.delay
    );
    match validate_gains(a.alpha, a.beta) {
        Ok(_) => {
            let _ = writeln!(out, "admissible: yes");
        }
        Err(e) => {
            let _ = writeln!(out, "admissible: no ({e})");
        }
    }
    let _ = writeln!(
        out,
        "region margin: {}  unit-alpha margin: {}",
        g.region_margin(),
        g.unit_alpha_margin()
    );
    matrix_line(&mut out, "Phi", &phi_matrix(g));
    matrix_line(&mut out, "Phi*", &phi_star_matrix(g));

    match mu_bounds(g, a.length, None) {
        Ok(b) => {
            let _ = writeln!(out, "mu1_max = {}", b.mu1_max);
        }
        Err(e) => {
            let _ = writeln!(out, "mu1_max: {e}");
        }
    }
    if let Some(mu1) = a.mu1 {
        match mu_bounds(g, a.length, Some(mu1)) {
            Ok(b) => {
                let _ = writeln!(
                    out,
                    "mu2_max(mu1 = {mu1}) = {}",
                    b.mu2_max.unwrap_or(f64::NAN)
                );
            }
            Err(e) => {
                let _ = writeln!(out, "mu1 = {mu1} rejected: {e}");
            }
        }
    }
    let r_max = smallness_radius(a.length);
    if let (Some(mu1), Some(mu2)) = (a.mu1, a.mu2) {
        let w = LyapunovWeights::unchecked(mu1, mu2);
        matrix_line(&mut out, "Psi", &psi_matrix(g, w, a.length));
        let radius = a.radius.unwrap_or(0.0);
        let params = SystemParams {
            length: a.length,
            delay: a.delay,
            gains: g,
        };
        match theoretical_decay_rate(&params, w, radius) {
            Ok(b) => {
                let _ = writeln!(
                    out,
                    "decay at r = {radius}: lambda = {}, kappa = {}, r_max = {}",
                    b.lambda, b.kappa, b.r_max
                );
            }
            Err(e) => {
                let _ = writeln!(
                    out,
                    "decay at r = {radius}: not certified ({e}); r_max = {r_max}"
                );
            }
        }
    } else {
        let _ = writeln!(out, "r_max = {r_max}");
    }
    match dissipation_constant(g) {
        Ok(k) => {
            let _ = writeln!(out, "K = {k}");
        }
        Err(e) => {
            let _ = writeln!(out, "K: not defined ({e})");
        }
    }
    let _ = writeln!(out, "Kato constant C = {}", kato_constant(a.length, g));
    out
}
