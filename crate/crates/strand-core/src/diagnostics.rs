//! Conservation laws, bracket-identity residuals, reduction-equivalence
//! metrics and mesh-refinement studies, tying numerical runs back to the
//! covariant bracket formulation and its reduction.
//!
//! Time derivatives inside residuals use the same central stencil as space;
//! the first and last snapshots of a run use one-sided second-order stencils
//! so every residual stays O(Δ²). Everything aggregates immutable snapshot
//! sequences and is parallel-safe.

use serde::Serialize;
use thiserror::Error;

use crate::chart::fixtures::StrandChart;
use crate::chart::{
    bracket_reduced, bracket_unreduced, dh_unreduced, PointR, PointU, PoissonFormSpec,
};
use crate::dynamics::{
    body_momenta_reduced, body_momenta_unreduced, derived_p_s, initial_conditions,
    integrate_reduced, integrate_unreduced, reduce_field, spatial_deriv_scalar, spatial_deriv_vec3,
    DynError, Grid, InitialKind, IntegratorConfig, ReducedField, Trajectory, UnreducedField,
};
use crate::reduction::kappa_strand;
use crate::so3::Vec3;
use crate::strand::{reduced_legendre_s, StrandParams, UnreducedPoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagError {
    #[error("need at least {need} snapshots, got {got}")]
    TooFewSnapshots { need: usize, got: usize },
    #[error("mismatched runs: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Dynamics(#[from] DynError),
}

// ---------------------------------------------------------------------------
// Conserved quantities

/// Discrete total of the circle momentum map, `Σ μ^t ds`.
pub fn total_momentum_reduced(field: &ReducedField, grid: &Grid) -> f64 {
    field.mu_t.iter().sum::<f64>() * grid.ds()
}

/// Same total read off the unreduced field: `μ^t = ⟨p^t, e₃⟩` nodewise.
pub fn total_momentum_unreduced(field: &UnreducedField, grid: &Grid) -> f64 {
    field.p_t.iter().map(|p| p.dot(Vec3::E3)).sum::<f64>() * grid.ds()
}

/// Discrete total of the time-translation (Noether) energy
/// `Σ [½⟨q^t, I⁻¹q^t⟩ + ½⟨q^s, J⁻¹q^s⟩ + e⟨ζ, χ⟩] ds`. Unlike the
/// Hamiltonian density, whose spatial kinetic term enters with a minus sign,
/// this is the quantity the flow conserves.
pub fn noether_energy_unreduced(
    params: &StrandParams,
    field: &UnreducedField,
    grid: &Grid,
    fd_order: usize,
) -> f64 {
    let momenta = body_momenta_unreduced(params, field, grid, fd_order);
    let mut total = 0.0;
    for (i, (q_t, q_s)) in momenta.iter().enumerate() {
        let zeta = field.rot[i].apply_inverse(Vec3::E3);
        total += 0.5 * params.inertia.solve(*q_t).dot(*q_t)
            + 0.5 * params.coupling.solve(*q_s).dot(*q_s)
            + params.field_strength * zeta.dot(params.dipole);
    }
    total * grid.ds()
}

/// Reduced-variables version of [`noether_energy_unreduced`].
pub fn noether_energy_reduced(
    params: &StrandParams,
    field: &ReducedField,
    grid: &Grid,
    fd_order: usize,
) -> f64 {
    let momenta = body_momenta_reduced(params, field, grid, fd_order);
    let mut total = 0.0;
    for (i, (q_t, q_s)) in momenta.iter().enumerate() {
        total += 0.5 * params.inertia.solve(*q_t).dot(*q_t)
            + 0.5 * params.coupling.solve(*q_s).dot(*q_s)
            + params.field_strength * field.zeta[i].dot(params.dipole);
    }
    total * grid.ds()
}

/// Discrete total of the Hamiltonian density (indefinite; reported for
/// reference, not conserved by the flow).
pub fn hamiltonian_total_reduced(
    params: &StrandParams,
    field: &ReducedField,
    grid: &Grid,
    fd_order: usize,
) -> f64 {
    let momenta = body_momenta_reduced(params, field, grid, fd_order);
    let mut total = 0.0;
    for (i, (q_t, q_s)) in momenta.iter().enumerate() {
        total += 0.5 * params.inertia.solve(*q_t).dot(*q_t)
            - 0.5 * params.coupling.solve(*q_s).dot(*q_s)
            + params.field_strength * field.zeta[i].dot(params.dipole);
    }
    total * grid.ds()
}

// ---------------------------------------------------------------------------
// Equivalence between the two formulations

/// Per-snapshot sup-distance between a reduced run and the projection of an
/// unreduced run: max over nodes of the chordal ζ-distance, the Euclidean
/// σ^t-distance and the absolute μ^t-distance.
pub fn equivalence_error(
    reduced: &Trajectory<ReducedField>,
    unreduced: &Trajectory<UnreducedField>,
    grid: &Grid,
    fd_order: usize,
) -> Result<Vec<f64>, DiagError> {
    if reduced.times.len() != unreduced.times.len() {
        return Err(DiagError::Mismatch(format!(
            "snapshot counts {} vs {}",
            reduced.times.len(),
            unreduced.times.len()
        )));
    }
    for (a, b) in reduced.times.iter().zip(&unreduced.times) {
        if (a - b).abs() > 1e-12 {
            return Err(DiagError::Mismatch(format!("snapshot times {a} vs {b}")));
        }
    }
    let mut out = Vec::with_capacity(reduced.times.len());
    for (rf, uf) in reduced.snapshots.iter().zip(&unreduced.snapshots) {
        if rf.zeta.len() != uf.rot.len() {
            return Err(DiagError::Mismatch("node counts differ".into()));
        }
        let projected = reduce_field(uf, grid, fd_order);
        let mut sup: f64 = 0.0;
        for i in 0..rf.zeta.len() {
            sup = sup.max((rf.zeta[i] - projected.zeta[i]).norm());
            sup = sup.max((rf.sigma_t[i] - projected.sigma_t[i]).norm());
            sup = sup.max((rf.mu_t[i] - projected.mu_t[i]).abs());
        }
        out.push(sup);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Reduced field-equation residuals (intrinsic form)

/// Sup and discrete-L² norms of one residual family over a run's interior.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct ResidualNorms {
    pub sup: f64,
    pub l2: f64,
}

impl ResidualNorms {
    fn from_values(values: &[f64], ds: f64) -> Self {
        let sup = values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let l2 = (values.iter().map(|v| v * v).sum::<f64>() * ds).sqrt();
        ResidualNorms { sup, l2 }
    }
}

/// Residual norms of the four reduced field equations evaluated on a run.
#[derive(Debug, Clone, Serialize)]
pub struct ReducedResidualReport {
    pub ver: ResidualNorms,
    pub holo_t: ResidualNorms,
    pub holo_s: ResidualNorms,
    pub hor: ResidualNorms,
}

/// A snapshot carrying both momentum branches, the common input to the
/// intrinsic residual evaluation.
struct FullReducedSnapshot {
    zeta: Vec<Vec3>,
    sigma_t: Vec<Vec3>,
    mu_t: Vec<f64>,
    sigma_s: Vec<Vec3>,
    mu_s: Vec<f64>,
}

fn full_snapshot_from_reduced(
    params: &StrandParams,
    field: &ReducedField,
    grid: &Grid,
    fd_order: usize,
) -> FullReducedSnapshot {
    let zeta_s = spatial_deriv_vec3(&field.zeta, grid, fd_order);
    let n = field.zeta.len();
    let mut sigma_s = Vec::with_capacity(n);
    let mut mu_s = Vec::with_capacity(n);
    for i in 0..n {
        let (ss, ms) = reduced_legendre_s(params, field.zeta[i], zeta_s[i], field.xi[i]);
        sigma_s.push(ss);
        mu_s.push(ms);
    }
    FullReducedSnapshot {
        zeta: field.zeta.clone(),
        sigma_t: field.sigma_t.clone(),
        mu_t: field.mu_t.clone(),
        sigma_s,
        mu_s,
    }
}

fn full_snapshot_from_unreduced(
    params: &StrandParams,
    field: &UnreducedField,
    grid: &Grid,
    fd_order: usize,
) -> FullReducedSnapshot {
    let p_s = derived_p_s(params, field, grid, fd_order);
    let n = field.rot.len();
    let mut out = FullReducedSnapshot {
        zeta: Vec::with_capacity(n),
        sigma_t: Vec::with_capacity(n),
        mu_t: Vec::with_capacity(n),
        sigma_s: Vec::with_capacity(n),
        mu_s: Vec::with_capacity(n),
    };
    for i in 0..n {
        let point = UnreducedPoint {
            rot: field.rot[i],
            p_t: field.p_t[i],
            p_s: p_s[i],
        };
        let r = kappa_strand(&point);
        out.zeta.push(r.zeta);
        out.sigma_t.push(r.sigma_t);
        out.mu_t.push(r.mu_t);
        out.sigma_s.push(r.sigma_s);
        out.mu_s.push(r.mu_s);
    }
    out
}

/// Time-derivative stencils over uniformly spaced snapshots: central in the
/// interior, one-sided second order at the ends.
fn time_deriv_scalar(series: &[Vec<f64>], k: usize, dt: f64) -> Vec<f64> {
    let last = series.len() - 1;
    let n = series[0].len();
    (0..n)
        .map(|i| {
            if k == 0 {
                (-3.0 * series[0][i] + 4.0 * series[1][i] - series[2][i]) / (2.0 * dt)
            } else if k == last {
                (3.0 * series[last][i] - 4.0 * series[last - 1][i] + series[last - 2][i])
                    / (2.0 * dt)
            } else {
                (series[k + 1][i] - series[k - 1][i]) / (2.0 * dt)
            }
        })
        .collect()
}

fn time_deriv_vec3(series: &[Vec<Vec3>], k: usize, dt: f64) -> Vec<Vec3> {
    let last = series.len() - 1;
    let n = series[0].len();
    (0..n)
        .map(|i| {
            if k == 0 {
                (series[0][i] * -3.0 + series[1][i] * 4.0 - series[2][i]) * (1.0 / (2.0 * dt))
            } else if k == last {
                (series[last][i] * 3.0 - series[last - 1][i] * 4.0 + series[last - 2][i])
                    * (1.0 / (2.0 * dt))
            } else {
                (series[k + 1][i] - series[k - 1][i]) * (1.0 / (2.0 * dt))
            }
        })
        .collect()
}

/// Residuals of the four reduced strand equations along a sequence of full
/// snapshots. The horizontal residual is evaluated tangentially (projected
/// onto the tangent plane at ζ); the normal component is slaved to the
/// constraint `⟨σ, ζ⟩ = 0` and carries no independent information.
fn intrinsic_residuals(
    params: &StrandParams,
    times: &[f64],
    snaps: &[FullReducedSnapshot],
    grid: &Grid,
    fd_order: usize,
) -> Result<ReducedResidualReport, DiagError> {
    if snaps.len() < 3 {
        return Err(DiagError::TooFewSnapshots {
            need: 3,
            got: snaps.len(),
        });
    }
    let dt = times[1] - times[0];
    for w in times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs().max(1.0) {
            return Err(DiagError::Mismatch(
                "snapshots are not uniformly spaced in time".into(),
            ));
        }
    }
    let n = grid.n_s();
    let mu_t_series: Vec<Vec<f64>> = snaps.iter().map(|s| s.mu_t.clone()).collect();
    let sigma_t_series: Vec<Vec<Vec3>> = snaps.iter().map(|s| s.sigma_t.clone()).collect();
    let zeta_series: Vec<Vec<Vec3>> = snaps.iter().map(|s| s.zeta.clone()).collect();

    let mut ver_all = Vec::new();
    let mut holo_t_all = Vec::new();
    let mut holo_s_all = Vec::new();
    let mut hor_all = Vec::new();

    for k in 0..snaps.len() {
        let snap = &snaps[k];
        let dmu_t = time_deriv_scalar(&mu_t_series, k, dt);
        let dsigma_t = time_deriv_vec3(&sigma_t_series, k, dt);
        let dzeta_t = time_deriv_vec3(&zeta_series, k, dt);
        let dmu_s = spatial_deriv_scalar(&snap.mu_s, grid, fd_order);
        let dsigma_s = spatial_deriv_vec3(&snap.sigma_s, grid, fd_order);
        let zeta_s = spatial_deriv_vec3(&snap.zeta, grid, fd_order);
        for i in 0..n {
            let z = snap.zeta[i];
            let q_t = z * snap.mu_t[i] - z.cross(snap.sigma_t[i]);
            let q_s = z * snap.mu_s[i] - z.cross(snap.sigma_s[i]);
            let omega_t = params.inertia.solve(q_t);
            let jinv_qs = params.coupling.solve(q_s);
            ver_all.push(dmu_t[i] + dmu_s[i]);
            holo_t_all.push((dzeta_t[i] - z.cross(omega_t)).norm());
            holo_s_all.push((zeta_s[i] + z.cross(jinv_qs)).norm());
            let chi_perp = params.dipole.reject_from_unit(z);
            let raw = dsigma_t[i] + dsigma_s[i] + z.cross(snap.sigma_t[i]) * z.dot(omega_t)
                - z.cross(snap.sigma_s[i]) * z.dot(jinv_qs)
                + chi_perp * params.field_strength;
            hor_all.push(raw.reject_from_unit(z.normalized()).norm());
        }
    }
    let ds = grid.ds();
    Ok(ReducedResidualReport {
        ver: ResidualNorms::from_values(&ver_all, ds * dt),
        holo_t: ResidualNorms::from_values(&holo_t_all, ds * dt),
        holo_s: ResidualNorms::from_values(&holo_s_all, ds * dt),
        hor: ResidualNorms::from_values(&hor_all, ds * dt),
    })
}

/// Intrinsic residuals of a reduced run.
pub fn pp_residuals_reduced(
    params: &StrandParams,
    traj: &Trajectory<ReducedField>,
    grid: &Grid,
    fd_order: usize,
) -> Result<ReducedResidualReport, DiagError> {
    let snaps: Vec<FullReducedSnapshot> = traj
        .snapshots
        .iter()
        .map(|f| full_snapshot_from_reduced(params, f, grid, fd_order))
        .collect();
    intrinsic_residuals(params, &traj.times, &snaps, grid, fd_order)
}

/// Intrinsic residuals of the projection of an unreduced run.
pub fn pp_residuals_projected(
    params: &StrandParams,
    traj: &Trajectory<UnreducedField>,
    grid: &Grid,
    fd_order: usize,
) -> Result<ReducedResidualReport, DiagError> {
    let snaps: Vec<FullReducedSnapshot> = traj
        .snapshots
        .iter()
        .map(|f| full_snapshot_from_unreduced(params, f, grid, fd_order))
        .collect();
    intrinsic_residuals(params, &traj.times, &snaps, grid, fd_order)
}

// ---------------------------------------------------------------------------
// Bracket-identity residual along an unreduced run

/// Residual of the bracket form of the field equations,
/// `{F,H} = d(p*F)/v − d^hF`, along an unreduced run, for the test form
/// generated by a constant spatial vector ν (the form pairs both momenta
/// with ν). Evaluated through a per-node adapted chart anchored at the
/// node's own rotation.
pub fn bracket_identity_residual(
    params: &StrandParams,
    traj: &Trajectory<UnreducedField>,
    grid: &Grid,
    fd_order: usize,
    nu: Vec3,
) -> Result<ResidualNorms, DiagError> {
    if traj.snapshots.len() < 3 {
        return Err(DiagError::TooFewSnapshots {
            need: 3,
            got: traj.snapshots.len(),
        });
    }
    let dt = traj.times[1] - traj.times[0];
    let n = grid.n_s();

    // Per-snapshot form components F^t, F^s at every node.
    let mut f_t_series = Vec::with_capacity(traj.snapshots.len());
    let mut f_s_series = Vec::with_capacity(traj.snapshots.len());
    for field in &traj.snapshots {
        let p_s = derived_p_s(params, field, grid, fd_order);
        f_t_series.push(field.p_t.iter().map(|p| p.dot(nu)).collect::<Vec<f64>>());
        f_s_series.push(p_s.iter().map(|p| p.dot(nu)).collect::<Vec<f64>>());
    }

    let mut values = Vec::new();
    for k in 0..traj.snapshots.len() {
        let field = &traj.snapshots[k];
        let p_s = derived_p_s(params, field, grid, fd_order);
        let df_t = time_deriv_scalar(&f_t_series, k, dt);
        let df_s = spatial_deriv_scalar(&f_s_series[k], grid, fd_order);
        for i in 0..n {
            // Bracket and horizontal differential through a chart anchored
            // at this node.
            let chart = StrandChart::new(*params, field.rot[i]);
            let point = UnreducedPoint {
                rot: field.rot[i],
                p_t: field.p_t[i],
                p_s: p_s[i],
            };
            let u = chart.point_u([traj.times[k], grid.node_position(i)], &point);
            let form = |j: usize, p: &PointU| -> f64 {
                let intrinsic = chart.unreduced_of(p);
                if j == 0 {
                    intrinsic.p_t.dot(nu)
                } else {
                    intrinsic.p_s.dot(nu)
                }
            };
            let h = |p: &PointU| (chart.spec.hamiltonian)(p);
            let bracket = bracket_unreduced(&chart.spec, &form, &h, &u);
            let dh = dh_unreduced(&chart.spec, &form, &u)
                .map_err(|e| DiagError::Mismatch(e.to_string()))?;
            values.push(bracket - (df_t[i] + df_s[i]) + dh);
        }
    }
    Ok(ResidualNorms::from_values(&values, grid.ds() * dt))
}

/// Residual of the reduced bracket identity along a reduced run, for the
/// affine test form built from a constant section value `xi_const`, the
/// tangent field `Y(ζ) = ζ × ν`, and constant base coefficients `omega`.
pub fn reduced_identity_residual(
    params: &StrandParams,
    traj: &Trajectory<ReducedField>,
    grid: &Grid,
    fd_order: usize,
    nu: Vec3,
    xi_const: f64,
    omega: [f64; 2],
) -> Result<ResidualNorms, DiagError> {
    if traj.snapshots.len() < 3 {
        return Err(DiagError::TooFewSnapshots {
            need: 3,
            got: traj.snapshots.len(),
        });
    }
    let dt = traj.times[1] - traj.times[0];
    let n = grid.n_s();

    // Intrinsic form components along the run.
    let full: Vec<FullReducedSnapshot> = traj
        .snapshots
        .iter()
        .map(|f| full_snapshot_from_reduced(params, f, grid, fd_order))
        .collect();
    let f_vals = |snap: &FullReducedSnapshot| -> (Vec<f64>, Vec<f64>) {
        let mut ft = Vec::with_capacity(n);
        let mut fs = Vec::with_capacity(n);
        for i in 0..n {
            let y = snap.zeta[i].cross(nu);
            ft.push(snap.sigma_t[i].dot(y) + xi_const * snap.mu_t[i] + omega[0]);
            fs.push(snap.sigma_s[i].dot(y) + xi_const * snap.mu_s[i] + omega[1]);
        }
        (ft, fs)
    };
    let series: Vec<(Vec<f64>, Vec<f64>)> = full.iter().map(f_vals).collect();
    let ft_series: Vec<Vec<f64>> = series.iter().map(|(a, _)| a.clone()).collect();
    let fs_series: Vec<Vec<f64>> = series.iter().map(|(_, b)| b.clone()).collect();

    let mut values = Vec::new();
    for k in 0..traj.snapshots.len() {
        let field = &traj.snapshots[k];
        let dft = time_deriv_scalar(&ft_series, k, dt);
        let dfs = spatial_deriv_scalar(&fs_series[k], grid, fd_order);
        for i in 0..n {
            // Recover the spatial rotation for the chart anchor from ζ only:
            // any rotation with the right sphere point works, the observables
            // are gauge invariant.
            let z = field.zeta[i];
            let anchor = rotation_with_sphere_point(z);
            let chart = StrandChart::new(*params, anchor);
            let reduced_point = crate::strand::ReducedPoint {
                zeta: z,
                sigma_t: field.sigma_t[i],
                sigma_s: full[k].sigma_s[i],
                mu_t: field.mu_t[i],
                mu_s: full[k].mu_s[i],
            };
            let r: PointR = chart.point_r([traj.times[k], grid.node_position(i)], &reduced_point);
            let frame = chart.frame;
            let form = PoissonFormSpec {
                vert: Box::new(move |s: &[f64], _mu: &crate::chart::Block| {
                    let uv = [s[0], s[1]];
                    let zeta = frame.zeta_of(uv);
                    let t = frame.dzeta(uv);
                    let y = zeta.cross(nu);
                    let scale = 1.0 / t[0].dot(t[0]);
                    vec![y.dot(t[0]) * scale, y.dot(t[1]) * scale]
                }),
                section: Box::new(move |_s: &[f64]| vec![xi_const]),
                base: Box::new(move |_x: &[f64], _s: &[f64]| vec![omega[0], omega[1]]),
            };
            let h = chart.reduced_hamiltonian();
            let bracket = bracket_reduced(&chart.spec, &form, &h, &r);
            // Trivial lifts and a base-independent connection: the horizontal
            // differential and the curvature correction both reduce to the
            // explicit base dependence, which is zero for this form.
            values.push(bracket - (dft[i] + dfs[i]));
        }
    }
    Ok(ResidualNorms::from_values(&values, grid.ds() * dt))
}

/// A rotation R with R⁻¹e₃ = ζ (geodesic transporter from e₃).
fn rotation_with_sphere_point(zeta: Vec3) -> crate::so3::Rot3 {
    use crate::so3::{hat, Mat3, Rot3};
    let d = zeta.dot(Vec3::E3);
    if d < -0.999 {
        // Antipode: rotate by π about e₁.
        return crate::so3::exp_so3(Vec3::E1 * std::f64::consts::PI);
    }
    let c = zeta.cross(Vec3::E3);
    let k = hat(c);
    Rot3::from_matrix_unchecked(Mat3::IDENTITY + k + (k * k) * (1.0 / (1.0 + d)))
}

// ---------------------------------------------------------------------------
// Convergence studies

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub n_s: usize,
    pub ds: f64,
    pub error: f64,
    /// `log₂(e_prev / e_this)` against the previous row; `None` on the first
    /// row or when either error is exactly zero ("exact").
    pub observed_order: Option<f64>,
}

/// Shared settings of a refinement study.
#[derive(Debug, Clone, Copy)]
pub struct StudySettings {
    pub cfl: f64,
    pub t_end: f64,
    pub length: f64,
    pub seed: u64,
    pub fd_order: usize,
}

impl Default for StudySettings {
    fn default() -> Self {
        StudySettings {
            cfl: 0.25,
            t_end: 1.0,
            length: 1.0,
            seed: 0,
            fd_order: 2,
        }
    }
}

/// Reduction-equivalence convergence study: for each resolution, integrate
/// both formulations from consistent initial data and measure the final-time
/// sup-distance between the reduced run and the projected unreduced run.
pub fn equivalence_convergence_study(
    params: &StrandParams,
    kind: InitialKind,
    resolutions: &[usize],
    settings: StudySettings,
) -> Result<Vec<ConvergenceRow>, DiagError> {
    if resolutions.len() < 2 {
        return Err(DiagError::Mismatch("need at least two resolutions".into()));
    }
    if resolutions.windows(2).any(|w| w[1] <= w[0]) {
        return Err(DiagError::Mismatch(
            "resolutions must be strictly increasing".into(),
        ));
    }
    let fd_order = settings.fd_order;
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &n_s in resolutions {
        let grid = Grid::new(n_s, settings.length)?;
        let mut config = IntegratorConfig::new(settings.cfl * grid.ds(), settings.t_end);
        config.fd_order = fd_order;
        let (u0, r0) = initial_conditions(kind, &grid, settings.seed, fd_order);
        let steps = config.steps();
        let u_traj = integrate_unreduced(params, u0, &grid, &config, steps.max(1))?;
        let r_traj = integrate_reduced(params, r0, &grid, &config, steps.max(1))?;
        let errors = equivalence_error(&r_traj, &u_traj, &grid, fd_order)?;
        let error = *errors.last().expect("nonempty series");
        let observed_order = rows.last().and_then(|prev: &ConvergenceRow| {
            if prev.error > 0.0 && error > 0.0 {
                Some((prev.error / error).log2())
            } else {
                None
            }
        });
        rows.push(ConvergenceRow {
            n_s,
            ds: grid.ds(),
            error,
            observed_order,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Report

/// Machine-readable diagnostics of a run (or a comparison of two runs).
#[derive(Debug, Clone, Serialize, Default)]
pub struct DiagnosticsReport {
    pub times: Vec<f64>,
    pub total_momentum: Vec<f64>,
    pub noether_energy: Vec<f64>,
    pub hamiltonian_total: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equivalence_sup_error: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduced_residuals: Option<ReducedResidualReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub projected_residuals: Option<ReducedResidualReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bracket_identity: Option<Vec<BracketIdentityEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence: Option<Vec<ConvergenceRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence_verdict: Option<ConvergenceVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identities: Option<Vec<IdentityCheck>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BracketIdentityEntry {
    pub nu: [f64; 3],
    pub sup: f64,
    pub l2: f64,
}

/// Summary judgment of a refinement study: the smallest observed order over
/// adjacent resolution pairs, and whether it clears the second-order bar
/// (vacuously true when every error is exactly zero).
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceVerdict {
    pub min_observed_order: Option<f64>,
    pub second_order: bool,
}

impl ConvergenceVerdict {
    pub fn from_rows(rows: &[ConvergenceRow]) -> Self {
        let orders: Vec<f64> = rows.iter().filter_map(|r| r.observed_order).collect();
        let min_observed_order = orders.iter().cloned().reduce(f64::min);
        let second_order = match min_observed_order {
            Some(o) => o >= 1.8,
            None => rows.iter().all(|r| r.error == 0.0),
        };
        ConvergenceVerdict {
            min_observed_order,
            second_order,
        }
    }
}

/// One verified identity: its residual against the pinned tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl DiagnosticsReport {
    /// Monotone time stamps and finite entries.
    pub fn validate(&self) -> Result<(), DiagError> {
        for w in self.times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(DiagError::Mismatch(format!(
                    "non-monotone time stamps {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        let all_finite = self.times.iter().all(|v| v.is_finite())
            && self.total_momentum.iter().all(|v| v.is_finite())
            && self.noether_energy.iter().all(|v| v.is_finite())
            && self.hamiltonian_total.iter().all(|v| v.is_finite())
            && self
                .equivalence_sup_error
                .iter()
                .flatten()
                .all(|v| v.is_finite());
        if !all_finite {
            return Err(DiagError::Mismatch("non-finite report entry".into()));
        }
        Ok(())
    }
}
