//! Residuals of the covariant Hamilton equations in adapted coordinates,
//! unreduced (Hamilton–Cartan form) and reduced. Sections enter as point
//! samples together with their first derivatives along the base, so the
//! residuals can be evaluated on discrete solution data.

use crate::chart::kappa::group_lift_at;
use crate::chart::spec::{Block, ChartSpec, PointR, PointU};
use crate::chart::ChartError;

/// A section sample of the unreduced bundle: the point plus the first
/// derivatives of every fiber coordinate and momentum along the base.
/// The fiber block groups `x^a` first, then `y^α` (total d_fiber + d_group
/// rows). `dp[i][slot][j] = ∂p^i_slot/∂x^j` with the same slot layout.
#[derive(Debug, Clone)]
pub struct SectionSampleU {
    pub point: PointU,
    /// `dfiber[slot][j] = ∂(fiber coord slot)/∂x^j`, (d_fiber+d_group) × n.
    pub dfiber_dx: Block,
    /// `dp[i][slot][j]`, n × (d_fiber+d_group) × n.
    pub dp_dx: Vec<Vec<Vec<f64>>>,
}

/// Residual blocks of the Hamilton–Cartan equations:
///
/// `momentum[i][slot] = ∂H/∂p^i_slot − ∂y^slot/∂x^i + Λ^slot_i`
/// `force[slot]       = ∂H/∂y^slot + ∂p^i_slot/∂x^i + (∂Λ^b_i/∂y^slot) p^i_b`
#[derive(Debug, Clone)]
pub struct HamiltonCartanResidual {
    pub momentum: Block,
    pub force: Vec<f64>,
}

impl HamiltonCartanResidual {
    pub fn max_abs(&self) -> f64 {
        let m = self
            .momentum
            .iter()
            .flatten()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()));
        self.force.iter().fold(m, |acc, v| acc.max(v.abs()))
    }
}

/// Hamilton–Cartan residuals of a section sample, treating all fiber
/// coordinates (`x^a` and `y^α`) uniformly.
pub fn hamilton_cartan_residual(
    spec: &ChartSpec,
    sample: &SectionSampleU,
) -> Result<HamiltonCartanResidual, ChartError> {
    let (n, df, dg) = (spec.dims.n, spec.dims.d_fiber, spec.dims.d_group);
    let dtot = df + dg;
    let u = &sample.point;
    let fd = spec.coeff_fd;
    let lam_fiber = (spec.lift_fiber)(&u.x, &u.s);
    let lam_group = group_lift_at(spec, &u.x, &u.s, &u.y)?;
    let h = &spec.hamiltonian;

    // Momentum equations.
    let mut momentum = vec![vec![0.0; dtot]; n];
    for i in 0..n {
        for slot in 0..dtot {
            let dh_dp = fd.derivative(|t| {
                let mut p = u.clone();
                if slot < df {
                    p.p_fiber[i][slot] += t;
                } else {
                    p.p_group[i][slot - df] += t;
                }
                h(&p)
            });
            let lam = if slot < df {
                lam_fiber[slot][i]
            } else {
                lam_group[slot - df][i]
            };
            momentum[i][slot] = dh_dp - sample.dfiber_dx[slot][i] + lam;
        }
    }

    // Force equations.
    let mut force = vec![0.0; dtot];
    for slot in 0..dtot {
        let dh_dy = fd.derivative(|t| {
            let mut p = u.clone();
            if slot < df {
                p.s[slot] += t;
            } else {
                p.y[slot - df] += t;
            }
            h(&p)
        });
        let mut div_p = 0.0;
        for i in 0..n {
            div_p += sample.dp_dx[i][slot][i];
        }
        // (∂Λ^b_i/∂y^slot) p^i_b over all fiber slots b.
        let mut conn = 0.0;
        for i in 0..n {
            for b in 0..dtot {
                let dlam = fd.derivative(|t| {
                    let mut s = u.s.clone();
                    let mut y = u.y.clone();
                    if slot < df {
                        s[slot] += t;
                    } else {
                        y[slot - df] += t;
                    }
                    if b < df {
                        (spec.lift_fiber)(&u.x, &s)[b][i]
                    } else {
                        group_lift_at(spec, &u.x, &s, &y).expect("chart domain")[b - df][i]
                    }
                });
                let p = if b < df {
                    u.p_fiber[i][b]
                } else {
                    u.p_group[i][b - df]
                };
                conn += dlam * p;
            }
        }
        force[slot] = dh_dy + div_p + conn;
    }
    Ok(HamiltonCartanResidual { momentum, force })
}

/// A section sample of the reduced bundle.
#[derive(Debug, Clone)]
pub struct SectionSampleR {
    pub point: PointR,
    /// `ds[a][j] = ∂x^a/∂x^j`, d_fiber × n.
    pub ds_dx: Block,
    /// `dsigma[i][a][j] = ∂σ^i_a/∂x^j`.
    pub dsigma_dx: Vec<Vec<Vec<f64>>>,
    /// `dmu[i][α][j] = ∂μ^i_α/∂x^j`.
    pub dmu_dx: Vec<Vec<Vec<f64>>>,
}

/// Residuals of the three groups of reduced field equations.
#[derive(Debug, Clone)]
pub struct ReducedEquationResidual {
    /// `ver[α] = ∂μ^i_α/∂x^i − μ^i_γ c^γ_{βα}(A^β_i + A^β_b ∂x^b/∂x^i)`
    /// `        − μ^i_γ c^γ_{βα} ∂h/∂μ^i_β`.
    pub ver: Vec<f64>,
    /// `holo[i][a] = ∂h/∂σ^i_a − ∂x^a/∂x^i + Λ^a_i`.
    pub holo: Block,
    /// `hor[a] = ∂h/∂x^a + μ^i_γ c^γ_{βα} A^β_a ∂h/∂μ^i_β + ∂σ^i_a/∂x^i`
    /// `       + ∂Λ^b_i/∂x^a σ^i_b − μ^i_γ (B-terms)`.
    pub hor: Vec<f64>,
}

impl ReducedEquationResidual {
    pub fn max_abs(&self) -> f64 {
        let v = self.ver.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
        let h = self
            .holo
            .iter()
            .flatten()
            .fold(v, |acc, x| acc.max(x.abs()));
        self.hor.iter().fold(h, |acc, x| acc.max(x.abs()))
    }
}

/// Reduced field-equation residuals of a section sample against a reduced
/// Hamiltonian `h`.
pub fn reduced_equation_residuals(
    spec: &ChartSpec,
    h: &dyn Fn(&PointR) -> f64,
    sample: &SectionSampleR,
) -> ReducedEquationResidual {
    let (n, df, dg) = (spec.dims.n, spec.dims.d_fiber, spec.dims.d_group);
    let r = &sample.point;
    let fd = spec.coeff_fd;
    let a_fiber = (spec.conn_fiber)(&r.x, &r.s);
    let a_base = (spec.conn_base)(&r.x, &r.s);
    let lam_fiber = (spec.lift_fiber)(&r.x, &r.s);

    let dh_dmu = |i: usize, beta: usize| {
        fd.derivative(|t| {
            let mut p = r.clone();
            p.mu[i][beta] += t;
            h(&p)
        })
    };
    let dh_dsigma = |i: usize, a: usize| {
        fd.derivative(|t| {
            let mut p = r.clone();
            p.sigma[i][a] += t;
            h(&p)
        })
    };
    let dh_ds = |a: usize| {
        fd.derivative(|t| {
            let mut p = r.clone();
            p.s[a] += t;
            h(&p)
        })
    };

    // Vertical group.
    let mut ver = vec![0.0; dg];
    for alpha in 0..dg {
        let mut res = 0.0;
        for i in 0..n {
            res += sample.dmu_dx[i][alpha][i];
        }
        for i in 0..n {
            for gamma in 0..dg {
                for beta in 0..dg {
                    let c = spec.structure.get(gamma, beta, alpha);
                    if c == 0.0 {
                        continue;
                    }
                    let mut conn = a_base[beta][i];
                    for b in 0..df {
                        conn += a_fiber[beta][b] * sample.ds_dx[b][i];
                    }
                    res -= r.mu[i][gamma] * c * conn;
                    res -= r.mu[i][gamma] * c * dh_dmu(i, beta);
                }
            }
        }
        ver[alpha] = res;
    }

    // Holonomy group.
    let mut holo = vec![vec![0.0; df]; n];
    for i in 0..n {
        for a in 0..df {
            holo[i][a] = dh_dsigma(i, a) - sample.ds_dx[a][i] + lam_fiber[a][i];
        }
    }

    // Horizontal group.
    let mut hor = vec![0.0; df];
    for a in 0..df {
        let mut res = dh_ds(a);
        // μ^i_γ c^γ_{βα} A^β_a ∂h/∂μ^i_α  (α summed over the group).
        for i in 0..n {
            for gamma in 0..dg {
                for beta in 0..dg {
                    for alpha in 0..dg {
                        let c = spec.structure.get(gamma, beta, alpha);
                        if c != 0.0 {
                            res += r.mu[i][gamma] * c * a_fiber[beta][a] * dh_dmu(i, alpha);
                        }
                    }
                }
            }
        }
        for i in 0..n {
            res += sample.dsigma_dx[i][a][i];
        }
        // ∂Λ^b_i/∂x^a σ^i_b.
        for i in 0..n {
            for b in 0..df {
                let dlam = fd.derivative(|t| {
                    let mut s = r.s.clone();
                    s[a] += t;
                    (spec.lift_fiber)(&r.x, &s)[b][i]
                });
                res += dlam * r.sigma[i][b];
            }
        }
        // Curvature block: −μ^i_γ (∂A^γ_a/∂x^i − ∂A^γ_i/∂x^a + c^γ_{βα}A^β_aA^α_i
        //                 + ∂x^b/∂x^i (∂A^γ_a/∂x^b − ∂A^γ_b/∂x^a + c^γ_{βα}A^β_aA^α_b)).
        for i in 0..n {
            for gamma in 0..dg {
                let da_dx = fd.derivative(|t| {
                    let mut x = r.x.clone();
                    x[i] += t;
                    (spec.conn_fiber)(&x, &r.s)[gamma][a]
                });
                let dai_ds = fd.derivative(|t| {
                    let mut s = r.s.clone();
                    s[a] += t;
                    (spec.conn_base)(&r.x, &s)[gamma][i]
                });
                let mut term = da_dx - dai_ds;
                for beta in 0..dg {
                    for alpha in 0..dg {
                        let c = spec.structure.get(gamma, beta, alpha);
                        if c != 0.0 {
                            term += c * a_fiber[beta][a] * a_base[alpha][i];
                        }
                    }
                }
                for b in 0..df {
                    let da_db = fd.derivative(|t| {
                        let mut s = r.s.clone();
                        s[b] += t;
                        (spec.conn_fiber)(&r.x, &s)[gamma][a]
                    });
                    let db_da = fd.derivative(|t| {
                        let mut s = r.s.clone();
                        s[a] += t;
                        (spec.conn_fiber)(&r.x, &s)[gamma][b]
                    });
                    let mut inner = da_db - db_da;
                    for beta in 0..dg {
                        for alpha in 0..dg {
                            let c = spec.structure.get(gamma, beta, alpha);
                            if c != 0.0 {
                                inner += c * a_fiber[beta][a] * a_fiber[alpha][b];
                            }
                        }
                    }
                    term += sample.ds_dx[b][i] * inner;
                }
                res -= r.mu[i][gamma] * term;
            }
        }
        hor[a] = res;
    }

    ReducedEquationResidual { ver, holo, hor }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::fd::FdScheme;
    use crate::chart::fixtures::StrandChart;
    use crate::chart::spec::{Dims, GroupLiftSpec, Structure};
    use crate::so3::{SpdTensor, Vec3};
    use crate::strand::StrandParams;

    /// Flat abelian chart with a free quadratic Hamiltonian.
    fn flat_free_chart() -> ChartSpec {
        ChartSpec {
            dims: Dims {
                n: 2,
                d_fiber: 1,
                d_group: 1,
            },
            structure: Structure::zero(1),
            conn_fiber: Box::new(|_, _| vec![vec![0.0]]),
            conn_base: Box::new(|_, _| vec![vec![0.0, 0.0]]),
            lift_fiber: Box::new(|_, _| vec![vec![0.0, 0.0]]),
            group_lift: GroupLiftSpec::Compatible,
            christoffel: Box::new(|_| vec![0.0; 8]),
            group_chart: Box::new(|a, b| vec![a[0] + b[0]]),
            hamiltonian: Box::new(|u: &PointU| {
                let pf: f64 = u.p_fiber.iter().flatten().map(|v| v * v).sum();
                let pg: f64 = u.p_group.iter().flatten().map(|v| v * v).sum();
                0.5 * (pf + pg)
            }),
            coeff_fd: FdScheme::coefficient_default(),
            group_fd: FdScheme::group_default(),
        }
    }

    fn zero_sample_u(spec: &ChartSpec) -> SectionSampleU {
        let d = spec.dims;
        SectionSampleU {
            point: PointU {
                x: vec![0.0; d.n],
                s: vec![0.0; d.d_fiber],
                y: vec![0.0; d.d_group],
                p_fiber: vec![vec![0.0; d.d_fiber]; d.n],
                p_group: vec![vec![0.0; d.d_group]; d.n],
            },
            dfiber_dx: vec![vec![0.0; d.n]; d.d_fiber + d.d_group],
            dp_dx: vec![vec![vec![0.0; d.n]; d.d_fiber + d.d_group]; d.n],
        }
    }

    #[test]
    fn free_hamiltonian_constant_section_is_an_equilibrium() {
        let spec = flat_free_chart();
        let sample = zero_sample_u(&spec);
        let res = hamilton_cartan_residual(&spec, &sample).unwrap();
        assert!(res.max_abs() < 1e-12, "residual {}", res.max_abs());
    }

    #[test]
    fn free_hamiltonian_nonzero_momentum_needs_matching_slope() {
        let spec = flat_free_chart();
        let mut sample = zero_sample_u(&spec);
        sample.point.p_fiber[0][0] = 0.75;
        // Without the matching ∂y/∂x the first momentum equation is off by p.
        let res = hamilton_cartan_residual(&spec, &sample).unwrap();
        assert!((res.momentum[0][0] - 0.75).abs() < 1e-9);
        // Supplying the slope restores the equilibrium.
        sample.dfiber_dx[0][0] = 0.75;
        let res = hamilton_cartan_residual(&spec, &sample).unwrap();
        assert!(res.max_abs() < 1e-9);
    }

    #[test]
    fn residual_is_linear_in_small_perturbations() {
        let spec = flat_free_chart();
        for eps in [1e-2, 1e-4] {
            let mut sample = zero_sample_u(&spec);
            sample.point.p_group[1][0] = eps;
            let res = hamilton_cartan_residual(&spec, &sample).unwrap();
            assert!((res.max_abs() - eps).abs() < 1e-8 + 1e-3 * eps);
        }
    }

    #[test]
    fn strand_equilibrium_has_zero_hamilton_cartan_residual() {
        // R = Id, p = 0, χ = e₃ aligned with the sphere point: a fixed point.
        let params = StrandParams::new(
            SpdTensor::diag(1.0, 2.0, 3.0).unwrap(),
            SpdTensor::diag(2.0, 1.0, 1.0).unwrap(),
            1.0,
            Vec3::E3,
        );
        let chart = StrandChart::new(params, crate::so3::Rot3::IDENTITY);
        let sample = zero_sample_u(&chart.spec);
        let res = hamilton_cartan_residual(&chart.spec, &sample).unwrap();
        assert!(res.max_abs() < 1e-9, "residual {}", res.max_abs());
    }

    #[test]
    fn constant_connection_equilibrium_reduced_residuals_vanish() {
        // Abelian group, constant A, h = ½μ², constant section.
        let spec = ChartSpec {
            dims: Dims {
                n: 1,
                d_fiber: 1,
                d_group: 1,
            },
            structure: Structure::zero(1),
            conn_fiber: Box::new(|_, _| vec![vec![0.4]]),
            conn_base: Box::new(|_, _| vec![vec![0.1]]),
            lift_fiber: Box::new(|_, _| vec![vec![0.0]]),
            group_lift: GroupLiftSpec::Compatible,
            christoffel: Box::new(|_| vec![0.0]),
            group_chart: Box::new(|a, b| vec![a[0] + b[0]]),
            hamiltonian: Box::new(|_| 0.0),
            coeff_fd: FdScheme::coefficient_default(),
            group_fd: FdScheme::group_default(),
        };
        let h = |r: &PointR| 0.5 * r.mu[0][0] * r.mu[0][0];
        let sample = SectionSampleR {
            point: PointR {
                x: vec![0.0],
                s: vec![0.3],
                sigma: vec![vec![0.7]],
                mu: vec![vec![-0.2]],
            },
            ds_dx: vec![vec![0.0]],
            dsigma_dx: vec![vec![vec![0.0]]],
            dmu_dx: vec![vec![vec![0.0]]],
        };
        let res = reduced_equation_residuals(&spec, &h, &sample);
        assert!(res.ver[0].abs() < 1e-12);
        assert!(res.hor[0].abs() < 1e-12);
        // holo is satisfied only because ∂h/∂σ = 0 here.
        assert!(res.holo[0][0].abs() < 1e-12);
    }

    #[test]
    fn manufactured_linear_section_solves_the_flat_reduced_equations() {
        // Flat chart, h = ½(σ² + μ²): a constant-momentum section whose base
        // field has slope σ solves all three equation groups.
        let spec = ChartSpec {
            dims: Dims {
                n: 1,
                d_fiber: 1,
                d_group: 1,
            },
            structure: Structure::zero(1),
            conn_fiber: Box::new(|_, _| vec![vec![0.0]]),
            conn_base: Box::new(|_, _| vec![vec![0.0]]),
            lift_fiber: Box::new(|_, _| vec![vec![0.0]]),
            group_lift: GroupLiftSpec::Compatible,
            christoffel: Box::new(|_| vec![0.0]),
            group_chart: Box::new(|a, b| vec![a[0] + b[0]]),
            hamiltonian: Box::new(|_| 0.0),
            coeff_fd: FdScheme::coefficient_default(),
            group_fd: FdScheme::group_default(),
        };
        let h = |r: &PointR| 0.5 * (r.sigma[0][0] * r.sigma[0][0] + r.mu[0][0] * r.mu[0][0]);
        let sigma = 0.8;
        let sample = SectionSampleR {
            point: PointR {
                x: vec![0.1],
                s: vec![0.4],
                sigma: vec![vec![sigma]],
                mu: vec![vec![0.3]],
            },
            ds_dx: vec![vec![sigma]],
            dsigma_dx: vec![vec![vec![0.0]]],
            dmu_dx: vec![vec![vec![0.0]]],
        };
        let res = reduced_equation_residuals(&spec, &h, &sample);
        assert!(res.max_abs() < 1e-9, "residual {}", res.max_abs());
        // A mismatched slope breaks exactly the holonomy group.
        let mut bad = sample.clone();
        bad.ds_dx[0][0] = 0.0;
        let res = reduced_equation_residuals(&spec, &h, &bad);
        assert!((res.holo[0][0] - sigma).abs() < 1e-9);
        assert!(res.ver[0].abs() < 1e-9);
    }
}
