//! Gain validation, stability matrices and closed-form decay certificates.

use crate::error::{Error, GainConstraint, Result};
use std::f64::consts::PI;

/// Absolute tolerance applied to each leading principal minor.
pub const MINOR_TOLERANCE: f64 = 1e-12;

/// Feedback gains `(alpha, beta)` of the boundary law
/// `v_x(t,L) = alpha u_x(t,L) + beta u_x(t-h,L)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gains {
    alpha: f64,
    beta: f64,
}

impl Gains {
    /// Validated constructor, see [`validate_gains`].
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        validate_gains(alpha, beta)
    }

    /// Skips the admissibility test. Useful for evaluating the matrices
    /// outside the certified region.
    pub fn unchecked(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `0.5 - (2 alpha^2 + 1.5 beta)`; positive inside the region.
    pub fn region_margin(&self) -> f64 {
        0.5 - (2.0 * self.alpha * self.alpha + 1.5 * self.beta)
    }

    /// Same margin with a unit factor on `alpha^2`, the variant that
    /// appears in the first-entry argument for the energy matrix.
    pub fn unit_alpha_margin(&self) -> f64 {
        0.5 - (self.alpha * self.alpha + 1.5 * self.beta)
    }

    pub fn is_admissible(&self) -> bool {
        validate_gains(self.alpha, self.beta).is_ok()
    }
}

/// Accepts `(alpha, beta)` iff `beta > 0` and `0 < 2 alpha^2 + 1.5 beta < 0.5`.
pub fn validate_gains(alpha: f64, beta: f64) -> Result<Gains> {
    if !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::OutOfAdmissibleRegion {
            constraint: GainConstraint::NonFinite,
            excess: f64::NAN,
        });
    }
    if beta <= 0.0 {
        return Err(Error::OutOfAdmissibleRegion {
            constraint: GainConstraint::BetaPositive,
            excess: -beta,
        });
    }
    let s = 2.0 * alpha * alpha + 1.5 * beta;
    if s <= 0.0 {
        return Err(Error::OutOfAdmissibleRegion {
            constraint: GainConstraint::RegionLower,
            excess: -s,
        });
    }
    if s >= 0.5 {
        return Err(Error::OutOfAdmissibleRegion {
            constraint: GainConstraint::RegionUpper,
            excess: s - 0.5,
        });
    }
    Ok(Gains { alpha, beta })
}

/// Domain length, delay and gains.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemParams {
    pub length: f64,
    pub delay: f64,
    pub gains: Gains,
}

impl SystemParams {
    pub fn new(length: f64, delay: f64, gains: Gains) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "L",
                value: length,
            });
        }
        if !(delay > 0.0 && delay.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "h",
                value: delay,
            });
        }
        validate_gains(gains.alpha, gains.beta)?;
        Ok(Self {
            length,
            delay,
            gains,
        })
    }
}

/// Symmetric 2x2 matrix `[[a11, a12], [a12, a22]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymMatrix2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl SymMatrix2 {
    pub fn new(a11: f64, a12: f64, a22: f64) -> Self {
        Self { a11, a12, a22 }
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    /// `(a11, det)`.
    pub fn leading_minors(&self) -> (f64, f64) {
        (self.a11, self.det())
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.a11 + self.a22);
        let half_gap = 0.5 * (self.a11 - self.a22);
        let radius = half_gap.hypot(self.a12);
        (mean - radius, mean + radius)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues().1
    }

    /// `x^T M y`.
    pub fn bilinear(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        self.a11 * x[0] * y[0] + self.a12 * (x[0] * y[1] + x[1] * y[0]) + self.a22 * x[1] * y[1]
    }

    pub fn quadratic(&self, x: [f64; 2]) -> f64 {
        self.bilinear(x, x)
    }

    pub fn is_negative_definite(&self) -> bool {
        is_negative_definite(self)
    }
}

impl std::ops::Add for SymMatrix2 {
    type Output = SymMatrix2;
    fn add(self, o: SymMatrix2) -> SymMatrix2 {
        SymMatrix2::new(self.a11 + o.a11, self.a12 + o.a12, self.a22 + o.a22)
    }
}

impl std::ops::Sub for SymMatrix2 {
    type Output = SymMatrix2;
    fn sub(self, o: SymMatrix2) -> SymMatrix2 {
        SymMatrix2::new(self.a11 - o.a11, self.a12 - o.a12, self.a22 - o.a22)
    }
}

impl std::ops::Mul<SymMatrix2> for f64 {
    type Output = SymMatrix2;
    fn mul(self, m: SymMatrix2) -> SymMatrix2 {
        SymMatrix2::new(self * m.a11, self * m.a12, self * m.a22)
    }
}

/// Leading principal minors test: `a11 < -tol` and `det > tol`.
pub fn is_negative_definite(m: &SymMatrix2) -> bool {
    let (m1, m2) = m.leading_minors();
    m1 < -MINOR_TOLERANCE && m2 > MINOR_TOLERANCE
}

/// Energy-rate matrix acting on `(u_x(t,L), u_x(t-h,L))`.
pub fn phi_matrix(g: Gains) -> SymMatrix2 {
    let (a, b) = (g.alpha, g.beta);
    SymMatrix2::new(a * a - 0.5 + b, a * b, b * b - b)
}

/// Boundary matrix of the adjoint operator.
pub fn phi_star_matrix(g: Gains) -> SymMatrix2 {
    let (a, b) = (g.alpha, g.beta);
    SymMatrix2::new(2.0 * a * a + b - 1.0, a * b, 2.0 * b * b - b)
}

/// Positive Lyapunov weights `(mu1, mu2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LyapunovWeights {
    pub mu1: f64,
    pub mu2: f64,
}

impl LyapunovWeights {
    /// Checks both weights against [`mu_bounds`].
    pub fn new(g: Gains, length: f64, mu1: f64, mu2: f64) -> Result<Self> {
        let w = Self { mu1, mu2 };
        check_weights(g, length, w)?;
        Ok(w)
    }

    pub fn unchecked(mu1: f64, mu2: f64) -> Self {
        Self { mu1, mu2 }
    }

    /// `1 + max(mu1 L, mu2)`.
    pub fn kappa(&self, length: f64) -> f64 {
        1.0 + (self.mu1 * length).max(self.mu2)
    }
}

/// Matrix of the Lyapunov derivative, `Phi + L mu1 [[a^2, ab],[ab, b^2]] + mu2 [[b, 0],[0, 0]]`.
pub fn psi_matrix(g: Gains, w: LyapunovWeights, length: f64) -> SymMatrix2 {
    let (a, b) = (g.alpha, g.beta);
    let feedback = SymMatrix2::new(a * a, a * b, b * b);
    let inflow = SymMatrix2::new(b, 0.0, 0.0);
    phi_matrix(g) + (length * w.mu1) * feedback + w.mu2 * inflow
}

/// Upper bounds on the Lyapunov weights.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MuBounds {
    pub mu1_max: f64,
    /// Present when `mu1` was supplied.
    pub mu2_max: Option<f64>,
}

/// Bounds on `mu1` and, given `mu1`, on `mu2`. A zero `alpha` makes the
/// first `mu1` constraint vacuous.
pub fn mu_bounds(g: Gains, length: f64, mu1: Option<f64>) -> Result<MuBounds> {
    let (a, b) = (g.alpha, g.beta);
    let a2 = a * a;
    let first = if a == 0.0 {
        f64::INFINITY
    } else {
        (1.0 - 2.0 * b - 2.0 * a2) / (2.0 * length * a2)
    };
    let second = (1.0 - 2.0 * a2 - 3.0 * b) / (length * (2.0 * a2 + b));
    let mu1_max = first.min(second);
    let mu2_max = match mu1 {
        None => None,
        Some(m1) => {
            if m1 >= mu1_max {
                return Err(Error::Mu1TooLarge {
                    mu1: m1,
                    bound: mu1_max,
                });
            }
            let s = 1.0 + length * m1;
            let p = (1.0 - 2.0 * b - 2.0 * s * a2) / (2.0 * b);
            let q = (1.0 - 2.0 * s * a2 - s * b - 2.0 * b) / (2.0 * b);
            Some(p.min(q))
        }
    };
    Ok(MuBounds { mu1_max, mu2_max })
}

fn check_weights(g: Gains, length: f64, w: LyapunovWeights) -> Result<()> {
    let inadmissible = Error::WeightsInadmissible {
        mu1: w.mu1,
        mu2: w.mu2,
    };
    if !(w.mu1 > 0.0 && w.mu2 > 0.0) {
        return Err(inadmissible);
    }
    let bounds = mu_bounds(g, length, Some(w.mu1))?;
    match bounds.mu2_max {
        Some(m) if w.mu2 < m => Ok(()),
        _ => Err(inadmissible),
    }
}

/// `3 / (16 L^{3/2})`.
pub fn smallness_radius(length: f64) -> f64 {
    3.0 / (16.0 * length.powf(1.5))
}

/// Decay certificate `E(t) <= kappa E(0) exp(-lambda t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayBound {
    pub lambda: f64,
    pub kappa: f64,
    pub r_max: f64,
}

/// Rate and prefactor for data of norm at most `radius`.
pub fn theoretical_decay_rate(
    p: &SystemParams,
    w: LyapunovWeights,
    radius: f64,
) -> Result<DecayBound> {
    let l = p.length;
    check_weights(p.gains, l, w)?;
    let r_max = smallness_radius(l);
    if !(radius >= 0.0) || radius > r_max {
        return Err(Error::RadiusTooLarge { radius, max: r_max });
    }
    let spatial =
        PI * PI * w.mu1 * (3.0 - 16.0 * l.powf(1.5) * radius) / (2.0 * l * l * (1.0 + l * w.mu1));
    let delay = w.mu2 / (p.delay * (1.0 + w.mu2));
    Ok(DecayBound {
        lambda: spatial.min(delay).max(0.0),
        kappa: w.kappa(l),
        r_max,
    })
}

/// `min(-lambda_max(Phi) / 2, 1/2)`.
pub fn dissipation_constant(g: Gains) -> Result<f64> {
    if !g.is_admissible() {
        return Err(Error::GainsInadmissible);
    }
    Ok((-0.5 * phi_matrix(g).max_eigenvalue()).min(0.5))
}

/// `(4/3) L (1 + alpha^2 + beta^2)`.
pub fn kato_constant(length: f64, g: Gains) -> f64 {
    4.0 / 3.0 * length * (1.0 + g.alpha * g.alpha + g.beta * g.beta)
}
