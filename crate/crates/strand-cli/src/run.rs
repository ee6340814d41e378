//! Mode dispatch: simulate, compare, verify identities, or run a
//! convergence study; emit CSV trajectories and a JSON report.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use strand_core::chart::fixtures::{
    abelian_toy, random_affine_form, random_point_u, random_reduced_scalar, so3_fiber_chart,
    StrandChart,
};
use strand_core::chart::{
    bracket_reduced, bracket_unreduced, check_invariance, dh_curvature_correction, dh_reduced,
    dh_unreduced, dkappa_local, kappa_local, pullback_form, pullback_scalar, z_matrix, ChartSpec,
    PointU, TangentR, TangentU,
};
use strand_core::diagnostics::{
    bracket_identity_residual, equivalence_convergence_study, equivalence_error,
    hamiltonian_total_reduced, noether_energy_reduced, noether_energy_unreduced,
    pp_residuals_projected, pp_residuals_reduced, total_momentum_reduced, total_momentum_unreduced,
    BracketIdentityEntry, ConvergenceVerdict, DiagnosticsReport, IdentityCheck, StudySettings,
};
use strand_core::dynamics::{
    initial_conditions, integrate_reduced, integrate_unreduced, DynError, Grid, ReducedField,
    Trajectory, UnreducedField,
};
use strand_core::rng::DetRng;
use strand_core::so3::{exp_so3, Vec3};
use strand_core::strand::StrandParams;

use crate::config::{Mode, RunConfig, Validated};

/// Failure taxonomy mapped to exit codes by `main` (config parse errors are
/// handled before a run starts).
pub enum RunError {
    Validation(String),
    BlowUp(String),
    Identity(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Validation(_) => 3,
            RunError::BlowUp(_) => 4,
            RunError::Identity(_) => 5,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            RunError::Validation(m) | RunError::BlowUp(m) | RunError::Identity(m) => m,
        }
    }
}

fn dyn_error(e: DynError) -> RunError {
    match e {
        DynError::BlowUp { .. } => RunError::BlowUp(e.to_string()),
        other => RunError::Validation(other.to_string()),
    }
}

fn io_error(e: std::io::Error, path: &Path) -> RunError {
    RunError::Validation(format!("{}: {e}", path.display()))
}

#[derive(Serialize)]
struct ReportEnvelope<'a> {
    version: &'a str,
    mode: Mode,
    config: &'a RunConfig,
    report: DiagnosticsReport,
}

pub fn run(config: &RunConfig, out_dir: &Path, quiet: bool) -> Result<(), RunError> {
    let validated = config.validate().map_err(RunError::Validation)?;
    std::fs::create_dir_all(out_dir).map_err(|e| io_error(e, out_dir))?;

    let report = match config.mode {
        Mode::SimulateUnreduced => simulate_unreduced(config, &validated, out_dir)?,
        Mode::SimulateReduced => simulate_reduced(config, &validated, out_dir)?,
        Mode::Compare => compare(config, &validated, out_dir)?,
        Mode::VerifyIdentities => verify_identities(&validated, quiet)?,
        Mode::Convergence => convergence(config, &validated)?,
    };

    report
        .validate()
        .map_err(|e| RunError::BlowUp(format!("report validation: {e}")))?;

    let envelope = ReportEnvelope {
        version: env!("CARGO_PKG_VERSION"),
        mode: config.mode,
        config,
        report,
    };
    let report_path = out_dir.join("report.json");
    let json =
        serde_json::to_string_pretty(&envelope).map_err(|e| RunError::Validation(e.to_string()))?;
    std::fs::write(&report_path, json + "\n").map_err(|e| io_error(e, &report_path))?;

    let mut files = vec![report_path];
    for name in ["unreduced_trajectory.csv", "reduced_trajectory.csv"] {
        let p = out_dir.join(name);
        if p.exists() {
            files.push(p);
        }
    }
    if let Some(pass) = envelope_identity_verdict(&envelope) {
        if !pass {
            return Err(RunError::Identity(
                "one or more identity checks failed; see report.json".into(),
            ));
        }
    }
    if !quiet {
        for f in &files {
            println!("wrote {}", f.display());
        }
    }
    Ok(())
}

fn envelope_identity_verdict(envelope: &ReportEnvelope<'_>) -> Option<bool> {
    envelope
        .report
        .identities
        .as_ref()
        .map(|checks| checks.iter().all(|c| c.pass))
}

// ---------------------------------------------------------------------------
// Simulation modes

fn series_reduced(
    params: &StrandParams,
    traj: &Trajectory<ReducedField>,
    grid: &Grid,
    fd_order: usize,
) -> DiagnosticsReport {
    DiagnosticsReport {
        times: traj.times.clone(),
        total_momentum: traj
            .snapshots
            .iter()
            .map(|f| total_momentum_reduced(f, grid))
            .collect(),
        noether_energy: traj
            .snapshots
            .iter()
            .map(|f| noether_energy_reduced(params, f, grid, fd_order))
            .collect(),
        hamiltonian_total: traj
            .snapshots
            .iter()
            .map(|f| hamiltonian_total_reduced(params, f, grid, fd_order))
            .collect(),
        ..Default::default()
    }
}

fn simulate_unreduced(
    config: &RunConfig,
    v: &Validated,
    out_dir: &Path,
) -> Result<DiagnosticsReport, RunError> {
    let (u0, _) = initial_conditions(v.initial, &v.grid, v.seed, v.integrator.fd_order);
    let traj = integrate_unreduced(
        &v.params,
        u0,
        &v.grid,
        &v.integrator,
        config.outputs.snapshot_stride,
    )
    .map_err(dyn_error)?;
    write_unreduced_csv(&traj, &v.grid, &out_dir.join("unreduced_trajectory.csv"))?;
    let fd = v.integrator.fd_order;
    let mut report = DiagnosticsReport {
        times: traj.times.clone(),
        total_momentum: traj
            .snapshots
            .iter()
            .map(|f| total_momentum_unreduced(f, &v.grid))
            .collect(),
        noether_energy: traj
            .snapshots
            .iter()
            .map(|f| noether_energy_unreduced(&v.params, f, &v.grid, fd))
            .collect(),
        hamiltonian_total: Vec::new(),
        ..Default::default()
    };
    // Hamiltonian total through the projected representation.
    report.hamiltonian_total = traj
        .snapshots
        .iter()
        .map(|f| {
            let r = strand_core::dynamics::reduce_field(f, &v.grid, fd);
            hamiltonian_total_reduced(&v.params, &r, &v.grid, fd)
        })
        .collect();
    if traj.snapshots.len() >= 3 {
        report.projected_residuals = Some(
            pp_residuals_projected(&v.params, &traj, &v.grid, fd)
                .map_err(|e| RunError::Validation(e.to_string()))?,
        );
        report.bracket_identity = Some(bracket_entries(&v.params, &traj, &v.grid, fd)?);
    }
    Ok(report)
}

fn simulate_reduced(
    config: &RunConfig,
    v: &Validated,
    out_dir: &Path,
) -> Result<DiagnosticsReport, RunError> {
    let (_, r0) = initial_conditions(v.initial, &v.grid, v.seed, v.integrator.fd_order);
    let traj = integrate_reduced(
        &v.params,
        r0,
        &v.grid,
        &v.integrator,
        config.outputs.snapshot_stride,
    )
    .map_err(dyn_error)?;
    write_reduced_csv(&traj, &v.grid, &out_dir.join("reduced_trajectory.csv"))?;
    let fd = v.integrator.fd_order;
    let mut report = series_reduced(&v.params, &traj, &v.grid, fd);
    if traj.snapshots.len() >= 3 {
        report.reduced_residuals = Some(
            pp_residuals_reduced(&v.params, &traj, &v.grid, fd)
                .map_err(|e| RunError::Validation(e.to_string()))?,
        );
    }
    Ok(report)
}

fn compare(
    config: &RunConfig,
    v: &Validated,
    out_dir: &Path,
) -> Result<DiagnosticsReport, RunError> {
    let (u0, r0) = initial_conditions(v.initial, &v.grid, v.seed, v.integrator.fd_order);
    let stride = config.outputs.snapshot_stride;
    let u_traj =
        integrate_unreduced(&v.params, u0, &v.grid, &v.integrator, stride).map_err(dyn_error)?;
    let r_traj =
        integrate_reduced(&v.params, r0, &v.grid, &v.integrator, stride).map_err(dyn_error)?;
    write_unreduced_csv(&u_traj, &v.grid, &out_dir.join("unreduced_trajectory.csv"))?;
    write_reduced_csv(&r_traj, &v.grid, &out_dir.join("reduced_trajectory.csv"))?;
    let fd = v.integrator.fd_order;
    let mut report = series_reduced(&v.params, &r_traj, &v.grid, fd);
    report.equivalence_sup_error = Some(
        equivalence_error(&r_traj, &u_traj, &v.grid, fd)
            .map_err(|e| RunError::Validation(e.to_string()))?,
    );
    if r_traj.snapshots.len() >= 3 {
        report.reduced_residuals = Some(
            pp_residuals_reduced(&v.params, &r_traj, &v.grid, fd)
                .map_err(|e| RunError::Validation(e.to_string()))?,
        );
        report.projected_residuals = Some(
            pp_residuals_projected(&v.params, &u_traj, &v.grid, fd)
                .map_err(|e| RunError::Validation(e.to_string()))?,
        );
        report.bracket_identity = Some(bracket_entries(&v.params, &u_traj, &v.grid, fd)?);
    }
    // Convergence verdict from a half-resolution companion run.
    if v.grid.n_s().is_multiple_of(2) && v.grid.n_s() / 2 >= 8 {
        let settings = StudySettings {
            cfl: v.integrator.dt / v.grid.ds(),
            t_end: v.integrator.t_end,
            length: v.grid.length(),
            seed: v.seed,
            fd_order: fd,
        };
        let rows = equivalence_convergence_study(
            &v.params,
            v.initial,
            &[v.grid.n_s() / 2, v.grid.n_s()],
            settings,
        )
        .map_err(|e| RunError::Validation(e.to_string()))?;
        report.convergence_verdict = Some(ConvergenceVerdict::from_rows(&rows));
        report.convergence = Some(rows);
    }
    Ok(report)
}

fn bracket_entries(
    params: &StrandParams,
    traj: &Trajectory<UnreducedField>,
    grid: &Grid,
    fd_order: usize,
) -> Result<Vec<BracketIdentityEntry>, RunError> {
    let mut rng = DetRng::new(0x5ca1_ab1e);
    let mut out = Vec::new();
    for _ in 0..3 {
        let nu = Vec3::new(
            rng.uniform(-1.0, 1.0),
            rng.uniform(-1.0, 1.0),
            rng.uniform(-1.0, 1.0),
        );
        let norms = bracket_identity_residual(params, traj, grid, fd_order, nu)
            .map_err(|e| RunError::Validation(e.to_string()))?;
        out.push(BracketIdentityEntry {
            nu: nu.as_array(),
            sup: norms.sup,
            l2: norms.l2,
        });
    }
    Ok(out)
}

fn convergence(config: &RunConfig, v: &Validated) -> Result<DiagnosticsReport, RunError> {
    let settings = StudySettings {
        cfl: v.integrator.dt / v.grid.ds(),
        t_end: v.integrator.t_end,
        length: v.grid.length(),
        seed: v.seed,
        fd_order: v.integrator.fd_order,
    };
    let rows = equivalence_convergence_study(&v.params, v.initial, &config.resolutions, settings)
        .map_err(|e| match e {
        strand_core::diagnostics::DiagError::Dynamics(d) => dyn_error(d),
        other => RunError::Validation(other.to_string()),
    })?;
    let verdict = ConvergenceVerdict::from_rows(&rows);
    Ok(DiagnosticsReport {
        convergence: Some(rows),
        convergence_verdict: Some(verdict),
        ..Default::default()
    })
}

// ---------------------------------------------------------------------------
// Identity verification mode

struct IdentitySuite {
    checks: Vec<IdentityCheck>,
}

impl IdentitySuite {
    fn new() -> Self {
        IdentitySuite { checks: Vec::new() }
    }

    fn record(&mut self, name: &str, max_residual: f64, tolerance: f64, quiet: bool) {
        let pass = max_residual <= tolerance;
        if !quiet {
            println!(
                "identity [{}] {name}: residual {max_residual:.3e}, tolerance {tolerance:.1e}",
                if pass { "PASS" } else { "FAIL" }
            );
        }
        self.checks.push(IdentityCheck {
            name: name.to_string(),
            max_residual,
            tolerance,
            pass,
        });
    }
}

fn verify_identities(v: &Validated, quiet: bool) -> Result<DiagnosticsReport, RunError> {
    let mut suite = IdentitySuite::new();
    let strand = StrandChart::new(v.params, exp_so3(Vec3::new(0.3, -0.2, 0.5)));
    let toy = abelian_toy(1);
    let nonabelian = so3_fiber_chart(2);
    let points = 200;

    // Bracket reduction through the projection.
    let res = bracket_residual(&strand.spec, v.seed ^ 0x01, points)
        .max(bracket_residual(&toy.spec, v.seed ^ 0x02, points))
        .max(bracket_residual(
            &nonabelian.spec,
            v.seed ^ 0x03,
            points / 2,
        ));
    suite.record("bracket-reduction", res, 1e-5, quiet);

    // Horizontal differential reduction.
    let res = dh_residual(&strand.spec, v.seed ^ 0x04, points)
        .max(dh_residual(&toy.spec, v.seed ^ 0x05, points))
        .max(dh_residual(&nonabelian.spec, v.seed ^ 0x06, points / 4));
    suite.record("horizontal-differential-reduction", res, 1e-5, quiet);

    // Group-chart Jacobian derivative against the structure constants.
    suite.record(
        "group-jacobian-bch",
        bch_residual(&nonabelian.spec),
        1e-5,
        quiet,
    );

    // Projection differential against its finite-difference Jacobian.
    let res = dkappa_residual(&strand.spec, v.seed ^ 0x07, 40)
        .max(dkappa_residual(&toy.spec, v.seed ^ 0x08, 40))
        .max(dkappa_residual(&nonabelian.spec, v.seed ^ 0x09, 40));
    suite.record("projection-differential", res, 1e-5, quiet);

    // Invariance of pulled-back observables and of the strand Hamiltonian.
    let mut rng = DetRng::new(v.seed ^ 0x0a);
    let mut inv: f64 = 0.0;
    for _ in 0..20 {
        let u = random_point_u(&strand.spec, &mut rng, false);
        inv = inv.max(check_invariance(
            &strand.spec,
            |p: &PointU| (strand.spec.hamiltonian)(p),
            &u,
        ));
        let h = random_reduced_scalar(nonabelian.spec.dims, &mut rng);
        let un = random_point_u(&nonabelian.spec, &mut rng, false);
        let big_h = pullback_scalar(&nonabelian.spec, &*h);
        inv = inv.max(check_invariance(&nonabelian.spec, big_h, &un));
    }
    suite.record("invariance", inv, 1e-5, quiet);

    Ok(DiagnosticsReport {
        identities: Some(suite.checks),
        ..Default::default()
    })
}

fn bracket_residual(spec: &ChartSpec, seed: u64, points: usize) -> f64 {
    let mut rng = DetRng::new(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let form = random_affine_form(spec.dims, &mut rng);
        let h = random_reduced_scalar(spec.dims, &mut rng);
        let u = random_point_u(spec, &mut rng, true);
        let big_f = pullback_form(spec, &form);
        let big_h = pullback_scalar(spec, &*h);
        let unreduced = bracket_unreduced(spec, &big_f, &big_h, &u);
        let r = kappa_local(spec, &u).expect("chart domain");
        worst = worst.max((unreduced - bracket_reduced(spec, &form, &*h, &r)).abs());
    }
    worst
}

fn dh_residual(spec: &ChartSpec, seed: u64, points: usize) -> f64 {
    let mut rng = DetRng::new(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let form = random_affine_form(spec.dims, &mut rng);
        let u = random_point_u(spec, &mut rng, true);
        let big_f = pullback_form(spec, &form);
        let unreduced = dh_unreduced(spec, &big_f, &u).expect("chart domain");
        let r = kappa_local(spec, &u).expect("chart domain");
        let reduced = dh_reduced(spec, &form, &r) + dh_curvature_correction(spec, &form, &r);
        worst = worst.max((unreduced - reduced).abs());
    }
    worst
}

fn bch_residual(spec: &ChartSpec) -> f64 {
    let d = spec.dims.d_group;
    let h = 1e-3;
    let mut worst: f64 = 0.0;
    for gamma in 0..d {
        let mut yp = vec![0.0; d];
        let mut ym = vec![0.0; d];
        yp[gamma] = h;
        ym[gamma] = -h;
        let zp = z_matrix(spec, &yp).expect("chart domain");
        let zm = z_matrix(spec, &ym).expect("chart domain");
        for beta in 0..d {
            for alpha in 0..d {
                let fd = (zp[beta][alpha] - zm[beta][alpha]) / (2.0 * h);
                let want = 0.5 * spec.structure.get(beta, alpha, gamma);
                worst = worst.max((fd - want).abs());
            }
        }
    }
    worst
}

fn dkappa_residual(spec: &ChartSpec, seed: u64, points: usize) -> f64 {
    let mut rng = DetRng::new(seed);
    let dims = spec.dims;
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let u = random_point_u(spec, &mut rng, false);
        for dir in 0..5 {
            let mut t = TangentU::zero(dims);
            match dir {
                0 => t.dx[rng.next_u64() as usize % dims.n] = 1.0,
                1 => t.ds[rng.next_u64() as usize % dims.d_fiber] = 1.0,
                2 => t.dy[rng.next_u64() as usize % dims.d_group] = 1.0,
                3 => {
                    t.dp_fiber[rng.next_u64() as usize % dims.n]
                        [rng.next_u64() as usize % dims.d_fiber] = 1.0
                }
                _ => {
                    t.dp_group[rng.next_u64() as usize % dims.n]
                        [rng.next_u64() as usize % dims.d_group] = 1.0
                }
            }
            let tab = dkappa_local(spec, &u, &t).expect("identity section");
            let fd = fd_kappa_jacobian(spec, &u, &t, h);
            worst = worst.max(tangent_distance(&tab, &fd));
        }
    }
    worst
}

fn fd_kappa_jacobian(spec: &ChartSpec, u: &PointU, t: &TangentU, h: f64) -> TangentR {
    let perturb = |sign: f64| {
        let mut p = u.clone();
        for (v, d) in p.x.iter_mut().zip(&t.dx) {
            *v += sign * h * d;
        }
        for (v, d) in p.s.iter_mut().zip(&t.ds) {
            *v += sign * h * d;
        }
        for (v, d) in p.y.iter_mut().zip(&t.dy) {
            *v += sign * h * d;
        }
        for (row, drow) in p.p_fiber.iter_mut().zip(&t.dp_fiber) {
            for (v, d) in row.iter_mut().zip(drow) {
                *v += sign * h * d;
            }
        }
        for (row, drow) in p.p_group.iter_mut().zip(&t.dp_group) {
            for (v, d) in row.iter_mut().zip(drow) {
                *v += sign * h * d;
            }
        }
        p
    };
    let rp = kappa_local(spec, &perturb(1.0)).expect("chart domain");
    let rm = kappa_local(spec, &perturb(-1.0)).expect("chart domain");
    let dims = spec.dims;
    let mut out = TangentR::zero(dims);
    for i in 0..dims.n {
        out.dx[i] = (rp.x[i] - rm.x[i]) / (2.0 * h);
        for a in 0..dims.d_fiber {
            out.dsigma[i][a] = (rp.sigma[i][a] - rm.sigma[i][a]) / (2.0 * h);
        }
        for al in 0..dims.d_group {
            out.dmu[i][al] = (rp.mu[i][al] - rm.mu[i][al]) / (2.0 * h);
        }
    }
    for a in 0..dims.d_fiber {
        out.ds[a] = (rp.s[a] - rm.s[a]) / (2.0 * h);
    }
    out
}

fn tangent_distance(a: &TangentR, b: &TangentR) -> f64 {
    let mut worst: f64 = 0.0;
    for (x, y) in a.dx.iter().zip(&b.dx) {
        worst = worst.max((x - y).abs());
    }
    for (x, y) in a.ds.iter().zip(&b.ds) {
        worst = worst.max((x - y).abs());
    }
    for (r1, r2) in a.dsigma.iter().zip(&b.dsigma) {
        for (x, y) in r1.iter().zip(r2) {
            worst = worst.max((x - y).abs());
        }
    }
    for (r1, r2) in a.dmu.iter().zip(&b.dmu) {
        for (x, y) in r1.iter().zip(r2) {
            worst = worst.max((x - y).abs());
        }
    }
    worst
}

// ---------------------------------------------------------------------------
// CSV writers (RFC 4180: CRLF line endings, no quoting needed here)

fn write_csv(path: &Path, content: String) -> Result<(), RunError> {
    std::fs::write(path, content).map_err(|e| io_error(e, path))
}

fn write_unreduced_csv(
    traj: &Trajectory<UnreducedField>,
    grid: &Grid,
    path: &Path,
) -> Result<(), RunError> {
    let mut out = String::new();
    out.push_str("t,s,R00,R01,R02,R10,R11,R12,R20,R21,R22,pt_x,pt_y,pt_z\r\n");
    for (k, field) in traj.snapshots.iter().enumerate() {
        let t = traj.times[k];
        for i in 0..grid.n_s() {
            let m = field.rot[i].matrix().m;
            let p = field.p_t[i];
            let _ = write!(
                out,
                "{t},{s},{},{},{},{},{},{},{},{},{},{},{},{}\r\n",
                m[0][0],
                m[0][1],
                m[0][2],
                m[1][0],
                m[1][1],
                m[1][2],
                m[2][0],
                m[2][1],
                m[2][2],
                p.x,
                p.y,
                p.z,
                s = grid.node_position(i),
            );
        }
    }
    write_csv(path, out)
}

fn write_reduced_csv(
    traj: &Trajectory<ReducedField>,
    grid: &Grid,
    path: &Path,
) -> Result<(), RunError> {
    let mut out = String::new();
    out.push_str("t,s,zeta_x,zeta_y,zeta_z,sigma_t_x,sigma_t_y,sigma_t_z,mu_t,xi\r\n");
    for (k, field) in traj.snapshots.iter().enumerate() {
        let t = traj.times[k];
        for i in 0..grid.n_s() {
            let z = field.zeta[i];
            let sg = field.sigma_t[i];
            let _ = write!(
                out,
                "{t},{s},{},{},{},{},{},{},{},{}\r\n",
                z.x,
                z.y,
                z.z,
                sg.x,
                sg.y,
                sg.z,
                field.mu_t[i],
                field.xi[i],
                s = grid.node_position(i),
            );
        }
    }
    write_csv(path, out)
}
