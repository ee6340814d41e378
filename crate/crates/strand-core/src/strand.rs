//! Closed-form Hamiltonians, Lagrangians and Legendre transforms of the
//! charged SO(3) strand, in unreduced variables `(R, p^t, p^s)` and reduced
//! variables `(ζ, σ^t, σ^s, μ^t, μ^s)`.
//!
//! Conventions: tangent vectors at `R` are stored as spatial vectors
//! `v = vee(Ṙ R⁻¹)`, momenta as spatial covectors under the Euclidean
//! pairing. With this identification the circle generator is `e₃` at every
//! `R`, and `R⁻¹ p` in the formulas below is a plain matrix-vector product.
//!
//! Everything here is a pure function over immutable values; concurrent use
//! is unrestricted.

use thiserror::Error;

use crate::so3::{Rot3, So3Error, SpdTensor, Vec3};

/// Tolerance for the unit-ζ and σ ⊥ ζ preconditions of [`ReducedPoint`].
pub const REDUCED_POINT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StrandError {
    #[error("zeta has norm {0}, expected unit within {REDUCED_POINT_TOL}")]
    NonUnitZeta(f64),
    #[error("sigma has component {0} along zeta, expected 0 within {REDUCED_POINT_TOL}")]
    SigmaNotTangent(f64),
    #[error(transparent)]
    So3(#[from] So3Error),
}

/// Physical data of the strand: inertia tensor `I` of each rigid body, the
/// tensor `J` opposing rotation of consecutive bodies, the electric field
/// strength `e` along the spatial `e₃` axis, and the reference dipole `χ`.
#[derive(Debug, Clone, Copy)]
pub struct StrandParams {
    pub inertia: SpdTensor,
    pub coupling: SpdTensor,
    pub field_strength: f64,
    pub dipole: Vec3,
}

impl StrandParams {
    pub fn new(inertia: SpdTensor, coupling: SpdTensor, field_strength: f64, dipole: Vec3) -> Self {
        StrandParams {
            inertia,
            coupling,
            field_strength,
            dipole,
        }
    }

    /// Unit tensors, no field: the chiral strand.
    pub fn chiral() -> Self {
        StrandParams::new(
            SpdTensor::identity(),
            SpdTensor::identity(),
            0.0,
            Vec3::ZERO,
        )
    }
}

/// A point of the unreduced multimomentum bundle over one base point.
#[derive(Debug, Clone, Copy)]
pub struct UnreducedPoint {
    pub rot: Rot3,
    pub p_t: Vec3,
    pub p_s: Vec3,
}

/// A point of the reduced bundle: ζ on the unit sphere, σ's tangent at ζ,
/// scalar momenta μ.
#[derive(Debug, Clone, Copy)]
pub struct ReducedPoint {
    pub zeta: Vec3,
    pub sigma_t: Vec3,
    pub sigma_s: Vec3,
    pub mu_t: f64,
    pub mu_s: f64,
}

impl ReducedPoint {
    /// Validated constructor enforcing ‖ζ‖ = 1 and ⟨σ, ζ⟩ = 0 to 1e−9.
    pub fn new(
        zeta: Vec3,
        sigma_t: Vec3,
        sigma_s: Vec3,
        mu_t: f64,
        mu_s: f64,
    ) -> Result<Self, StrandError> {
        let n = zeta.norm();
        if (n - 1.0).abs() > REDUCED_POINT_TOL {
            return Err(StrandError::NonUnitZeta(n));
        }
        for sigma in [sigma_t, sigma_s] {
            let along = sigma.dot(zeta);
            if along.abs() > REDUCED_POINT_TOL {
                return Err(StrandError::SigmaNotTangent(along));
            }
        }
        Ok(ReducedPoint {
            zeta,
            sigma_t,
            sigma_s,
            mu_t,
            mu_s,
        })
    }

    fn check(&self) -> Result<(), StrandError> {
        Self::new(self.zeta, self.sigma_t, self.sigma_s, self.mu_t, self.mu_s).map(|_| ())
    }

    /// Body momentum `R⁻¹ p^t = μ^t ζ − ζ × σ^t`.
    pub fn body_momentum_t(&self) -> Vec3 {
        self.zeta * self.mu_t - self.zeta.cross(self.sigma_t)
    }

    /// Body momentum `R⁻¹ p^s = μ^s ζ − ζ × σ^s`.
    pub fn body_momentum_s(&self) -> Vec3 {
        self.zeta * self.mu_s - self.zeta.cross(self.sigma_s)
    }
}

// ---------------------------------------------------------------------------
// Hamiltonians

/// `H = ½⟨R I⁻¹ R⁻¹ p^t, p^t⟩ − ½⟨R J⁻¹ R⁻¹ p^s, p^s⟩ + e e₃·Rχ`.
pub fn h_unreduced(params: &StrandParams, u: &UnreducedPoint) -> f64 {
    let qt = u.rot.apply_inverse(u.p_t);
    let qs = u.rot.apply_inverse(u.p_s);
    0.5 * params.inertia.solve(qt).dot(qt) - 0.5 * params.coupling.solve(qs).dot(qs)
        + params.field_strength * Vec3::E3.dot(u.rot.apply(params.dipole))
}

/// Partial derivatives of [`h_unreduced`]: the momentum derivatives
/// `∂H/∂p^t = R I⁻¹ R⁻¹ p^t`, `∂H/∂p^s = −R J⁻¹ R⁻¹ p^s`, and the
/// configuration derivative as a spatial vector in the left exponential
/// chart, `d/dε H(exp(ε v̂)R, p^t, p^s)|₀ = ⟨grad_r, v⟩`, holding the body
/// momenta `R⁻¹p` fixed: `grad_r = −e e₃ × Rχ`.
pub fn grad_h_unreduced(params: &StrandParams, u: &UnreducedPoint) -> (Vec3, Vec3, Vec3) {
    let dp_t = u
        .rot
        .apply(params.inertia.solve(u.rot.apply_inverse(u.p_t)));
    let dp_s = -u
        .rot
        .apply(params.coupling.solve(u.rot.apply_inverse(u.p_s)));
    let torque = Vec3::E3.cross(u.rot.apply(params.dipole)) * -params.field_strength;
    (dp_t, dp_s, torque)
}

/// Reduced Hamiltonian obtained by substituting `R⁻¹p = μζ − ζ×σ`:
///
/// `h = ½(μ^t)²⟨ζ,I⁻¹ζ⟩ + μ^t⟨σ^t, ζ×I⁻¹ζ⟩ + ½⟨ζ×σ^t, I⁻¹(ζ×σ^t)⟩`
/// `  − ½(μ^s)²⟨ζ,J⁻¹ζ⟩ − μ^s⟨σ^s, ζ×J⁻¹ζ⟩ − ½⟨ζ×σ^s, J⁻¹(ζ×σ^s)⟩ + e ζ·χ`.
pub fn h_reduced(params: &StrandParams, r: &ReducedPoint) -> Result<f64, StrandError> {
    r.check()?;
    let z = r.zeta;
    let iz = params.inertia.solve(z);
    let jz = params.coupling.solve(z);
    let zst = z.cross(r.sigma_t);
    let zss = z.cross(r.sigma_s);
    Ok(0.5 * r.mu_t * r.mu_t * z.dot(iz)
        + r.mu_t * r.sigma_t.dot(z.cross(iz))
        + 0.5 * zst.dot(params.inertia.solve(zst))
        - 0.5 * r.mu_s * r.mu_s * z.dot(jz)
        - r.mu_s * r.sigma_s.dot(z.cross(jz))
        - 0.5 * zss.dot(params.coupling.solve(zss))
        + params.field_strength * z.dot(params.dipole))
}

/// Fiber derivatives of the reduced Hamiltonian. The σ-derivatives are
/// tangent at ζ by construction and coincide with the right-hand sides of the
/// holonomy equations:
///
/// `δh/δσ^t = ζ × I⁻¹(μ^tζ − ζ×σ^t)`, `δh/δσ^s = −ζ × J⁻¹(μ^sζ − ζ×σ^s)`,
/// `δh/δμ^t = ⟨ζ, I⁻¹(μ^tζ − ζ×σ^t)⟩`, `δh/δμ^s = −⟨ζ, J⁻¹(μ^sζ − ζ×σ^s)⟩`.
pub fn fiber_derivs_h(
    params: &StrandParams,
    r: &ReducedPoint,
) -> Result<(Vec3, Vec3, f64, f64), StrandError> {
    r.check()?;
    let omega_t = params.inertia.solve(r.body_momentum_t());
    let omega_s = params.coupling.solve(r.body_momentum_s());
    Ok((
        r.zeta.cross(omega_t),
        -r.zeta.cross(omega_s),
        r.zeta.dot(omega_t),
        -r.zeta.dot(omega_s),
    ))
}

// ---------------------------------------------------------------------------
// Unreduced Lagrangian side

/// Fiber derivative of the Lagrangian: `p^t = R I R⁻¹ v_t`,
/// `p^s = −R J R⁻¹ v_s` for spatial velocity vectors `v_i = vee(∂_i R · R⁻¹)`.
pub fn legendre(params: &StrandParams, rot: Rot3, v_t: Vec3, v_s: Vec3) -> (Vec3, Vec3) {
    let p_t = rot.apply(params.inertia.apply(rot.apply_inverse(v_t)));
    let p_s = -rot.apply(params.coupling.apply(rot.apply_inverse(v_s)));
    (p_t, p_s)
}

/// Inverse of [`legendre`]: recovers the spatial velocities from momenta.
pub fn legendre_inv(params: &StrandParams, rot: Rot3, p_t: Vec3, p_s: Vec3) -> (Vec3, Vec3) {
    let v_t = rot.apply(params.inertia.solve(rot.apply_inverse(p_t)));
    let v_s = -rot.apply(params.coupling.solve(rot.apply_inverse(p_s)));
    (v_t, v_s)
}

/// `L = ½⟨R⁻¹v_t, I R⁻¹v_t⟩ − ½⟨R⁻¹v_s, J R⁻¹v_s⟩ − e e₃·Rχ`.
pub fn lagrangian(params: &StrandParams, rot: Rot3, v_t: Vec3, v_s: Vec3) -> f64 {
    let bt = rot.apply_inverse(v_t);
    let bs = rot.apply_inverse(v_s);
    0.5 * bt.dot(params.inertia.apply(bt))
        - 0.5 * bs.dot(params.coupling.apply(bs))
        - params.field_strength * Vec3::E3.dot(rot.apply(params.dipole))
}

/// `H∘Legendre = ⟨p^t, v_t⟩ + ⟨p^s, v_s⟩ − L`, evaluated as the right-hand
/// side. Equals [`h_unreduced`] at the Legendre image exactly.
pub fn hamiltonian_from_legendre(params: &StrandParams, rot: Rot3, v_t: Vec3, v_s: Vec3) -> f64 {
    let (p_t, p_s) = legendre(params, rot, v_t, v_s);
    p_t.dot(v_t) + p_s.dot(v_s) - lagrangian(params, rot, v_t, v_s)
}

// ---------------------------------------------------------------------------
// Reduced Lagrangian side

/// Reduced Lagrangian on the sphere, with the connection components
/// `η = ⟨v_t, e₃⟩`, `ξ = ⟨v_s, e₃⟩` as extra velocities:
///
/// `l = ½η²⟨ζ,Iζ⟩ + η⟨ζ, I(ζ_t×ζ)⟩ + ½⟨ζ_t×ζ, I(ζ_t×ζ)⟩`
/// `  − ½ξ²⟨ζ,Jζ⟩ − ξ⟨ζ, J(ζ_s×ζ)⟩ − ½⟨ζ_s×ζ, J(ζ_s×ζ)⟩ − e ζ·χ`.
pub fn reduced_lagrangian(
    params: &StrandParams,
    zeta: Vec3,
    zeta_t: Vec3,
    zeta_s: Vec3,
    eta: f64,
    xi: f64,
) -> Result<f64, StrandError> {
    check_tangent_config(zeta, zeta_t, zeta_s)?;
    let at = zeta_t.cross(zeta);
    let as_ = zeta_s.cross(zeta);
    Ok(0.5 * eta * eta * zeta.dot(params.inertia.apply(zeta))
        + eta * zeta.dot(params.inertia.apply(at))
        + 0.5 * at.dot(params.inertia.apply(at))
        - 0.5 * xi * xi * zeta.dot(params.coupling.apply(zeta))
        - xi * zeta.dot(params.coupling.apply(as_))
        - 0.5 * as_.dot(params.coupling.apply(as_))
        - params.field_strength * zeta.dot(params.dipole))
}

/// Vertical derivatives of the reduced Lagrangian:
///
/// `σ^t = ζ×(ηIζ + I(ζ_t×ζ))`, `μ^t = ⟨ζ, ηIζ + I(ζ_t×ζ)⟩`,
/// `σ^s = −ζ×(ξJζ + J(ζ_s×ζ))`, `μ^s = −⟨ζ, ξJζ + J(ζ_s×ζ)⟩`.
pub fn reduced_legendre(
    params: &StrandParams,
    zeta: Vec3,
    zeta_t: Vec3,
    zeta_s: Vec3,
    eta: f64,
    xi: f64,
) -> Result<ReducedPoint, StrandError> {
    check_tangent_config(zeta, zeta_t, zeta_s)?;
    let wt = params.inertia.apply(zeta * eta + zeta_t.cross(zeta));
    let ws = params.coupling.apply(zeta * xi + zeta_s.cross(zeta));
    ReducedPoint::new(
        zeta,
        zeta.cross(wt),
        -zeta.cross(ws),
        zeta.dot(wt),
        -zeta.dot(ws),
    )
}

/// The time branch of [`reduced_legendre`] alone: `(σ^t, μ^t)` from `(ζ, ζ_t, η)`.
pub fn reduced_legendre_t(
    params: &StrandParams,
    zeta: Vec3,
    zeta_t: Vec3,
    eta: f64,
) -> (Vec3, f64) {
    let wt = params.inertia.apply(zeta * eta + zeta_t.cross(zeta));
    (zeta.cross(wt), zeta.dot(wt))
}

/// The space branch of [`reduced_legendre`] alone: `(σ^s, μ^s)` from `(ζ, ζ_s, ξ)`.
pub fn reduced_legendre_s(params: &StrandParams, zeta: Vec3, zeta_s: Vec3, xi: f64) -> (Vec3, f64) {
    let ws = params.coupling.apply(zeta * xi + zeta_s.cross(zeta));
    (-zeta.cross(ws), -zeta.dot(ws))
}

/// Closed-form inverse of [`reduced_legendre`]:
///
/// `ζ_t = ζ × I⁻¹(μ^tζ − ζ×σ^t)`, `η = ⟨ζ, I⁻¹(μ^tζ − ζ×σ^t)⟩`,
/// `ζ_s = −ζ × J⁻¹(μ^sζ − ζ×σ^s)`, `ξ = −⟨ζ, J⁻¹(μ^sζ − ζ×σ^s)⟩`.
///
/// Returns `(ζ_t, ζ_s, η, ξ)`.
pub fn reduced_legendre_inv(
    params: &StrandParams,
    r: &ReducedPoint,
) -> Result<(Vec3, Vec3, f64, f64), StrandError> {
    // Identical content to the fiber derivatives of h: the holonomy equations
    // identify δh/δσ with the velocities and δh/δμ with (η, ξ).
    fiber_derivs_h(params, r)
}

/// Reduced Hamiltonian through the reduced Legendre transform:
/// `h = ⟨σ^t,ζ_t⟩ + ⟨σ^s,ζ_s⟩ + μ^tη + μ^sξ − l`. Must agree with
/// [`h_reduced`] to 1e−10.
pub fn reduced_h_from_legendre(
    params: &StrandParams,
    r: &ReducedPoint,
) -> Result<f64, StrandError> {
    let (zeta_t, zeta_s, eta, xi) = reduced_legendre_inv(params, r)?;
    let l = reduced_lagrangian(params, r.zeta, zeta_t, zeta_s, eta, xi)?;
    Ok(r.sigma_t.dot(zeta_t) + r.sigma_s.dot(zeta_s) + r.mu_t * eta + r.mu_s * xi - l)
}

fn check_tangent_config(zeta: Vec3, zeta_t: Vec3, zeta_s: Vec3) -> Result<(), StrandError> {
    let n = zeta.norm();
    if (n - 1.0).abs() > REDUCED_POINT_TOL {
        return Err(StrandError::NonUnitZeta(n));
    }
    for v in [zeta_t, zeta_s] {
        let along = v.dot(zeta);
        if along.abs() > REDUCED_POINT_TOL {
            return Err(StrandError::SigmaNotTangent(along));
        }
    }
    Ok(())
}
