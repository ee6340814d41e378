//! The quotient projection in adapted coordinates, its differential at the
//! identity section, the group-chart Jacobian `Z`, and the infinitesimal
//! invariance residual.

use crate::chart::fd::invert_dense;
use crate::chart::spec::{Block, ChartSpec, PointR, PointU, TangentR, TangentU};
use crate::chart::ChartError;

/// `Z^β_α(g)` for `g = exp(y·B)`: the matrix of `T_g L_{g⁻¹}` in normal
/// coordinates, computed as the Jacobian of `w ↦ chart(−y, w)` at `w = y`.
/// Returned as `z[β][α]`.
pub fn z_matrix(spec: &ChartSpec, y: &[f64]) -> Result<Block, ChartError> {
    let dg = spec.dims.d_group;
    if y.len() != dg {
        return Err(ChartError::Invalid(format!(
            "z_matrix: y has length {}, expected {dg}",
            y.len()
        )));
    }
    if spec.structure.is_abelian() {
        // Left translation is a chart translation; exact and noise-free.
        let mut id = vec![vec![0.0; dg]; dg];
        for (k, row) in id.iter_mut().enumerate() {
            row[k] = 1.0;
        }
        return Ok(id);
    }
    let neg_y: Vec<f64> = y.iter().map(|v| -v).collect();
    let f = |w: &[f64]| -> Vec<f64> {
        let out = (spec.group_chart)(&neg_y, w);
        debug_assert_eq!(out.len(), dg);
        out
    };
    let jac = spec.group_fd.jacobian(f, y, dg);
    for row in &jac {
        for v in row {
            if !v.is_finite() {
                return Err(ChartError::ChartDomain(
                    "group chart Jacobian is not finite".into(),
                ));
            }
        }
    }
    Ok(jac)
}

/// `Z(g)⁻¹`, the matrix of `T_e L_g`. Extends identity-section data to
/// general `y` by equivariance; see [`kappa_local`].
pub fn z_matrix_inv(spec: &ChartSpec, y: &[f64]) -> Result<Block, ChartError> {
    let z = z_matrix(spec, y)?;
    invert_dense(&z)
        .ok_or_else(|| ChartError::ChartDomain("group chart Jacobian is singular at this y".into()))
}

/// Principal-connection coefficients `A^α_a` at `(x, s, y)`, extended from
/// the identity section by `A(y) = Z(g)⁻¹ A(0)`.
pub fn conn_fiber_at(
    spec: &ChartSpec,
    x: &[f64],
    s: &[f64],
    y: &[f64],
) -> Result<Block, ChartError> {
    extend_by_equivariance(spec, (spec.conn_fiber)(x, s), y)
}

/// Same extension for the base components `A^α_i`.
pub fn conn_base_at(
    spec: &ChartSpec,
    x: &[f64],
    s: &[f64],
    y: &[f64],
) -> Result<Block, ChartError> {
    extend_by_equivariance(spec, (spec.conn_base)(x, s), y)
}

/// Group-direction lift coefficients `Λ^α_i(x, s, y)`.
pub fn group_lift_at(
    spec: &ChartSpec,
    x: &[f64],
    s: &[f64],
    y: &[f64],
) -> Result<Block, ChartError> {
    match &spec.group_lift {
        crate::chart::spec::GroupLiftSpec::Explicit(f) => Ok(f(x, s, y)),
        crate::chart::spec::GroupLiftSpec::Compatible => {
            extend_by_equivariance(spec, spec.compatible_group_lift_at_identity(x, s), y)
        }
    }
}

fn extend_by_equivariance(
    spec: &ChartSpec,
    at_identity: Block,
    y: &[f64],
) -> Result<Block, ChartError> {
    if spec.structure.is_abelian() || y.iter().all(|v| *v == 0.0) {
        return Ok(at_identity);
    }
    let zinv = z_matrix_inv(spec, y)?;
    let dg = spec.dims.d_group;
    let cols = if at_identity.is_empty() {
        0
    } else {
        at_identity[0].len()
    };
    let mut out = vec![vec![0.0; cols]; dg];
    for beta in 0..dg {
        for c in 0..cols {
            let mut v = 0.0;
            for gamma in 0..dg {
                v += zinv[beta][gamma] * at_identity[gamma][c];
            }
            out[beta][c] = v;
        }
    }
    Ok(out)
}

/// Local expression of the quotient projection:
///
/// `σ^i_a = p^i_a + p^i_β A^β_a(x, s, y)`, `μ^i_α = [Z(g)⁻¹]^β_α p^i_β`.
///
/// At `y = 0` this is `σ^i_a = p^i_a + p^i_α A^α_a`, `μ = p`. The general-`y`
/// extension uses `Z(g)⁻¹` throughout, which makes the projection exactly
/// invariant under the lifted group action.
pub fn kappa_local(spec: &ChartSpec, u: &PointU) -> Result<PointR, ChartError> {
    let (n, df, dg) = (spec.dims.n, spec.dims.d_fiber, spec.dims.d_group);
    let a_fiber = conn_fiber_at(spec, &u.x, &u.s, &u.y)?;
    let at_identity = spec.structure.is_abelian() || u.y.iter().all(|v| *v == 0.0);
    let zinv = if at_identity {
        None
    } else {
        Some(z_matrix_inv(spec, &u.y)?)
    };
    let mut sigma = vec![vec![0.0; df]; n];
    let mut mu = vec![vec![0.0; dg]; n];
    for i in 0..n {
        for a in 0..df {
            let mut v = u.p_fiber[i][a];
            for beta in 0..dg {
                v += u.p_group[i][beta] * a_fiber[beta][a];
            }
            sigma[i][a] = v;
        }
        for alpha in 0..dg {
            mu[i][alpha] = match &zinv {
                None => u.p_group[i][alpha],
                Some(z) => (0..dg)
                    .map(|beta| z[beta][alpha] * u.p_group[i][beta])
                    .sum(),
            };
        }
    }
    Ok(PointR {
        x: u.x.clone(),
        s: u.s.clone(),
        sigma,
        mu,
    })
}

/// Differential of [`kappa_local`] at a point on the identity section
/// (`y = 0`), applied to a coordinate tangent vector. Block map:
///
/// * `∂/∂x^i ↦ ∂/∂x^i + μ^j_γ (∂A^γ_b/∂x^i) ∂/∂σ^j_b`
/// * `∂/∂x^a ↦ ∂/∂x^a + μ^j_γ (∂A^γ_b/∂x^a) ∂/∂σ^j_b`
/// * `∂/∂y^α ↦ −½ μ^j_γ c^γ_{βα} A^β_b ∂/∂σ^j_b − ½ μ^j_γ c^γ_{βα} ∂/∂μ^j_β`
/// * `∂/∂p^i_a ↦ ∂/∂σ^i_a`
/// * `∂/∂p^i_α ↦ A^α_b ∂/∂σ^i_b + ∂/∂μ^i_α`
pub fn dkappa_local(
    spec: &ChartSpec,
    u: &PointU,
    tangent: &TangentU,
) -> Result<TangentR, ChartError> {
    if u.y.iter().any(|v| *v != 0.0) {
        return Err(ChartError::Precondition(
            "dkappa_local is tabulated at y = 0 only".into(),
        ));
    }
    let (n, df, dg) = (spec.dims.n, spec.dims.d_fiber, spec.dims.d_group);
    let a_fiber = (spec.conn_fiber)(&u.x, &u.s);
    // μ = p_group at y = 0.
    let mu = &u.p_group;
    let mut out = TangentR::zero(spec.dims);
    out.dx = tangent.dx.clone();
    out.ds = tangent.ds.clone();

    // Momentum rows.
    for i in 0..n {
        for a in 0..df {
            out.dsigma[i][a] += tangent.dp_fiber[i][a];
            for alpha in 0..dg {
                out.dsigma[i][a] += a_fiber[alpha][a] * tangent.dp_group[i][alpha];
            }
        }
        for alpha in 0..dg {
            out.dmu[i][alpha] += tangent.dp_group[i][alpha];
        }
    }

    // Base and fiber rows: derivative of A^γ_b along the base/fiber motion.
    let fd = spec.coeff_fd;
    for b in 0..df {
        for gamma in 0..dg {
            // d/dt A^γ_b(x + t·dx, s + t·ds) at t = 0.
            let da = fd.derivative(|t| {
                let x: Vec<f64> =
                    u.x.iter()
                        .zip(&tangent.dx)
                        .map(|(v, d)| v + t * d)
                        .collect();
                let s: Vec<f64> =
                    u.s.iter()
                        .zip(&tangent.ds)
                        .map(|(v, d)| v + t * d)
                        .collect();
                (spec.conn_fiber)(&x, &s)[gamma][b]
            });
            for j in 0..n {
                out.dsigma[j][b] += mu[j][gamma] * da;
            }
        }
    }

    // Group rows.
    if !spec.structure.is_abelian() {
        for alpha in 0..dg {
            let dy = tangent.dy[alpha];
            if dy == 0.0 {
                continue;
            }
            for j in 0..n {
                for gamma in 0..dg {
                    for beta in 0..dg {
                        let c = spec.structure.get(gamma, beta, alpha);
                        if c == 0.0 {
                            continue;
                        }
                        let w = -0.5 * mu[j][gamma] * c * dy;
                        out.dmu[j][beta] += w;
                        for b in 0..df {
                            out.dsigma[j][b] += w * a_fiber[beta][b];
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Infinitesimal invariance residual of a scalar `E` on the unreduced bundle
/// at a point with `y = 0`:
///
/// `res_α = ∂E/∂y^α + ½ c^γ_{βα} p^i_γ ∂E/∂p^i_β`,
///
/// returned as the max over α of the absolute value. Vanishes for functions
/// invariant under the lifted group action.
pub fn check_invariance<E>(spec: &ChartSpec, energy: E, u: &PointU) -> f64
where
    E: Fn(&PointU) -> f64,
{
    let (n, dg) = (spec.dims.n, spec.dims.d_group);
    let fd = spec.coeff_fd;
    let mut worst: f64 = 0.0;
    for alpha in 0..dg {
        let mut res = fd.derivative(|t| {
            let mut p = u.clone();
            p.y[alpha] += t;
            energy(&p)
        });
        for beta in 0..dg {
            // Skip the momentum correction when the bracket vanishes.
            let mut coeff = vec![0.0; n];
            let mut any = false;
            for gamma in 0..dg {
                let c = spec.structure.get(gamma, beta, alpha);
                if c == 0.0 {
                    continue;
                }
                any = true;
                for (i, ci) in coeff.iter_mut().enumerate() {
                    *ci += 0.5 * c * u.p_group[i][gamma];
                }
            }
            if !any {
                continue;
            }
            for (i, ci) in coeff.iter().enumerate() {
                if *ci == 0.0 {
                    continue;
                }
                let de = fd.derivative(|t| {
                    let mut p = u.clone();
                    p.p_group[i][beta] += t;
                    energy(&p)
                });
                res += ci * de;
            }
        }
        worst = worst.max(res.abs());
    }
    worst
}
