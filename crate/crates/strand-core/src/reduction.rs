//! Geometry of the circle reduction of the strand: projection of SO(3) onto
//! the sphere, the mechanical connection and its curvature, the momentum
//! projection onto reduced variables, and its inverse reconstruction.
//! All operations are pure and deterministic.

use crate::so3::{vee_unchecked, Mat3, Rot3, So3Error, Vec3};
use crate::strand::{ReducedPoint, UnreducedPoint};

/// Tolerance accepted when re-orthogonalizing σ against ζ in
/// [`reconstruct_momentum`].
pub const ORTHO_DRIFT_TOL: f64 = 1e-7;

/// Bundle projection `R ↦ ζ = R⁻¹ e₃`.
pub fn project_sphere(rot: Rot3) -> Vec3 {
    rot.apply_inverse(Vec3::E3)
}

/// Mechanical connection applied to a spatial velocity vector:
/// `𝒜(v) = ⟨v, e₃⟩`.
pub fn mech_connection(v: Vec3) -> f64 {
    v.dot(Vec3::E3)
}

/// Differential of [`project_sphere`] on a spatial velocity vector at `R`:
/// `Tπ(v) = R⁻¹(e₃ × v)`.
pub fn projection_differential(rot: Rot3, v: Vec3) -> Vec3 {
    rot.apply_inverse(Vec3::E3.cross(v))
}

/// Horizontal lift of a tangent vector `v_ζ ∈ T_ζ S²` to `R`, as a spatial
/// vector: `v^h = −e₃ × (R v_ζ)`. Requires `⟨v_ζ, ζ⟩ = 0` for
/// `ζ = project_sphere(R)`.
pub fn horizontal_lift(rot: Rot3, v_zeta: Vec3) -> Result<Vec3, So3Error> {
    let zeta = project_sphere(rot);
    let along = v_zeta.dot(zeta);
    if along.abs() > 1e-9 {
        return Err(So3Error::InvalidInput(format!(
            "horizontal lift of a non-tangent vector (component {along} along zeta)"
        )));
    }
    Ok(-Vec3::E3.cross(rot.apply(v_zeta)))
}

/// Momentum projection: for `i = t, s`,
/// `σ^i = ζ × R⁻¹p^i`, `μ^i = ⟨ζ, R⁻¹p^i⟩`.
/// The output satisfies `⟨σ, ζ⟩ = 0` exactly by construction.
pub fn kappa_strand(u: &UnreducedPoint) -> ReducedPoint {
    let zeta = project_sphere(u.rot);
    let qt = u.rot.apply_inverse(u.p_t);
    let qs = u.rot.apply_inverse(u.p_s);
    ReducedPoint {
        zeta,
        sigma_t: zeta.cross(qt),
        sigma_s: zeta.cross(qs),
        mu_t: zeta.dot(qt),
        mu_s: zeta.dot(qs),
    }
}

/// Inverse of the momentum projection on one branch: the body momentum
/// `R⁻¹p = μ ζ − ζ × σ`. σ is re-orthogonalized against ζ when its normal
/// component is below [`ORTHO_DRIFT_TOL`], rejected otherwise.
pub fn reconstruct_momentum(zeta: Vec3, sigma: Vec3, mu: f64) -> Result<Vec3, So3Error> {
    let n = zeta.norm();
    if (n - 1.0).abs() > 1e-9 {
        return Err(So3Error::InvalidInput(format!(
            "reconstruct_momentum with non-unit zeta (norm {n})"
        )));
    }
    let along = sigma.dot(zeta);
    if along.abs() > ORTHO_DRIFT_TOL {
        return Err(So3Error::InvalidInput(format!(
            "sigma has component {along} along zeta, beyond drift tolerance"
        )));
    }
    let sigma = sigma - zeta * along;
    Ok(zeta * mu - zeta.cross(sigma))
}

/// Curvature of the mechanical connection paired with two tangent vectors at
/// ζ: `⟨−ζ × a, b⟩ = −⟨ζ, a × b⟩`.
pub fn curvature_pairing(zeta: Vec3, a: Vec3, b: Vec3) -> f64 {
    -zeta.dot(a.cross(b))
}

/// Spatial angular velocity reconstructing `R` from reduced data:
/// `ω = η e₃ + hor(ζ_t) = η e₃ − e₃ × (R ζ_t)`.
pub fn reconstruction_velocity(rot: Rot3, zeta_t: Vec3, eta: f64) -> Vec3 {
    Vec3::E3 * eta - Vec3::E3.cross(rot.apply(zeta_t))
}

/// Spatial velocity vector of a rotation derivative sample:
/// `vee` of the antisymmetric part of `dR · Rᵀ`. The antisymmetrization
/// absorbs the O(h²) symmetric defect of finite-difference samples.
pub fn spatial_velocity(d_rot: Mat3, rot: Rot3) -> Vec3 {
    vee_unchecked(d_rot * rot.matrix().transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::DetRng;
    use crate::so3::exp_so3;

    const PI: f64 = std::f64::consts::PI;

    fn rand_vec(rng: &mut DetRng, scale: f64) -> Vec3 {
        Vec3::new(
            rng.uniform(-scale, scale),
            rng.uniform(-scale, scale),
            rng.uniform(-scale, scale),
        )
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_sphere(Rot3::IDENTITY), Vec3::E3);
        let r = exp_so3(Vec3::E1 * (PI / 2.0));
        assert!((project_sphere(r) - Vec3::E2).norm_max() < 1e-15);
    }

    #[test]
    fn projection_is_fiber_invariant() {
        let mut rng = DetRng::new(0xfee1);
        for _ in 0..100 {
            let r = exp_so3(rand_vec(&mut rng, 2.0));
            let q = exp_so3(Vec3::E3 * rng.uniform(-PI, PI));
            let a = project_sphere(r);
            let b = project_sphere(q.compose(r));
            assert!((a - b).norm_max() < 1e-13);
        }
    }

    #[test]
    fn connection_value_and_axiom() {
        assert_eq!(mech_connection(Vec3::new(1.0, 2.0, 3.0)), 3.0);
        // The generator of the circle action has connection value 1.
        assert_eq!(mech_connection(Vec3::E3), 1.0);
    }

    #[test]
    fn horizontal_lift_hand_value() {
        // R = Id, ζ = e₃, v = e₁: lift = −e₃×e₁ = −e₂, and Tπ(−e₂) = e₁.
        let lift = horizontal_lift(Rot3::IDENTITY, Vec3::E1).unwrap();
        assert_eq!(lift, -Vec3::E2);
        assert_eq!(projection_differential(Rot3::IDENTITY, lift), Vec3::E1);
    }

    #[test]
    fn lift_is_horizontal_and_sections_projection() {
        let mut rng = DetRng::new(0xfee2);
        for _ in 0..1000 {
            let r = exp_so3(rand_vec(&mut rng, 2.0));
            let zeta = project_sphere(r);
            let v = rand_vec(&mut rng, 2.0).reject_from_unit(zeta);
            let lift = horizontal_lift(r, v).unwrap();
            assert!(mech_connection(lift).abs() < 1e-12);
            assert!((projection_differential(r, lift) - v).norm_max() < 1e-12);
        }
    }

    #[test]
    fn lift_rejects_non_tangent_input() {
        let r = Rot3::IDENTITY;
        assert!(horizontal_lift(r, Vec3::E3).is_err());
    }

    #[test]
    fn kappa_hand_values() {
        let u = UnreducedPoint {
            rot: Rot3::IDENTITY,
            p_t: Vec3::new(1.0, 2.0, 3.0),
            p_s: Vec3::ZERO,
        };
        let r = kappa_strand(&u);
        assert_eq!(r.zeta, Vec3::E3);
        assert_eq!(r.sigma_t, Vec3::new(-2.0, 1.0, 0.0));
        assert_eq!(r.mu_t, 3.0);
        assert_eq!(r.sigma_s, Vec3::ZERO);
        assert_eq!(r.mu_s, 0.0);
    }

    #[test]
    fn kappa_is_circle_invariant() {
        let mut rng = DetRng::new(0xfee3);
        for _ in 0..200 {
            let u = UnreducedPoint {
                rot: exp_so3(rand_vec(&mut rng, 2.0)),
                p_t: rand_vec(&mut rng, 2.0),
                p_s: rand_vec(&mut rng, 2.0),
            };
            let q = exp_so3(Vec3::E3 * rng.uniform(-PI, PI));
            let uq = UnreducedPoint {
                rot: q.compose(u.rot),
                p_t: q.apply(u.p_t),
                p_s: q.apply(u.p_s),
            };
            let a = kappa_strand(&u);
            let b = kappa_strand(&uq);
            assert!((a.zeta - b.zeta).norm_max() < 1e-13);
            assert!((a.sigma_t - b.sigma_t).norm_max() < 1e-12);
            assert!((a.mu_t - b.mu_t).abs() < 1e-12);
            assert!((a.sigma_s - b.sigma_s).norm_max() < 1e-12);
            assert!((a.mu_s - b.mu_s).abs() < 1e-12);
        }
    }

    #[test]
    fn reconstruct_momentum_inverts_kappa() {
        let body = reconstruct_momentum(Vec3::E3, Vec3::new(-2.0, 1.0, 0.0), 3.0).unwrap();
        assert_eq!(body, Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(
            reconstruct_momentum(Vec3::E2, Vec3::ZERO, 2.5).unwrap(),
            Vec3::E2 * 2.5
        );

        let mut rng = DetRng::new(0xfee4);
        for _ in 0..1000 {
            let u = UnreducedPoint {
                rot: exp_so3(rand_vec(&mut rng, 2.0)),
                p_t: rand_vec(&mut rng, 2.0),
                p_s: rand_vec(&mut rng, 2.0),
            };
            let r = kappa_strand(&u);
            let qt = reconstruct_momentum(r.zeta, r.sigma_t, r.mu_t).unwrap();
            let qs = reconstruct_momentum(r.zeta, r.sigma_s, r.mu_s).unwrap();
            assert!((u.rot.apply(qt) - u.p_t).norm_max() < 1e-13 * (1.0 + u.p_t.norm()));
            assert!((u.rot.apply(qs) - u.p_s).norm_max() < 1e-13 * (1.0 + u.p_s.norm()));
        }
    }

    #[test]
    fn reconstruct_momentum_rejects_large_drift() {
        let sigma = Vec3::new(1.0, 0.0, 1e-3);
        assert!(reconstruct_momentum(Vec3::E3, sigma, 0.0).is_err());
    }

    #[test]
    fn curvature_pairing_values_and_antisymmetry() {
        assert_eq!(curvature_pairing(Vec3::E3, Vec3::E1, Vec3::E2), -1.0);
        let mut rng = DetRng::new(0xfee5);
        for _ in 0..100 {
            let zeta = rand_vec(&mut rng, 1.0).normalized();
            let a = rand_vec(&mut rng, 1.0).reject_from_unit(zeta);
            let b = rand_vec(&mut rng, 1.0).reject_from_unit(zeta);
            assert!((curvature_pairing(zeta, a, b) + curvature_pairing(zeta, b, a)).abs() < 1e-13);
            assert!(curvature_pairing(zeta, a, a).abs() < 1e-13);
        }
    }

    #[test]
    fn reconstruction_velocity_pure_fiber_spin() {
        // ζ constant, η = 1: ω = e₃, so R(t) = exp(t ê₃) R₀.
        let omega = reconstruction_velocity(Rot3::IDENTITY, Vec3::ZERO, 1.0);
        assert_eq!(omega, Vec3::E3);
    }

    #[test]
    fn reconstruction_velocity_projects_back_to_zeta_t() {
        let mut rng = DetRng::new(0xfee6);
        for _ in 0..200 {
            let rot = exp_so3(rand_vec(&mut rng, 2.0));
            let zeta = project_sphere(rot);
            let zeta_t = rand_vec(&mut rng, 1.0).reject_from_unit(zeta);
            let eta = rng.uniform(-2.0, 2.0);
            let omega = reconstruction_velocity(rot, zeta_t, eta);
            assert!((mech_connection(omega) - eta).abs() < 1e-13);
            assert!((projection_differential(rot, omega) - zeta_t).norm_max() < 1e-12);
        }
    }
}
