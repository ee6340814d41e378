//! Concrete adapted charts used by the verification suite and the CLI's
//! identity checks:
//!
//! * [`abelian_toy`] — one base, one fiber and one group dimension, abelian,
//!   with nontrivial connection and Christoffel coefficients;
//! * [`so3_fiber_chart`] — one base dimension, two fiber dimensions and an
//!   SO(3) group factor, exercising every structure-constant path;
//! * [`StrandChart`] — the physical strand: a stereographic chart on the
//!   sphere factor with the circle fiber of the rotation group, together
//!   with exact dictionaries to and from the intrinsic representation.
//!
//! Also hosts seeded generators for smooth test observables.

use crate::chart::fd::FdScheme;
use crate::chart::spec::{
    Block, ChartSpec, Dims, GroupLiftSpec, PointR, PointU, PoissonFormSpec, Structure,
};
use crate::rng::DetRng;
use crate::so3::{exp_so3, hat, log_so3, Mat3, Rot3, Vec3};
use crate::strand::{ReducedPoint, StrandParams, UnreducedPoint};

// ---------------------------------------------------------------------------
// Seeded smooth functions

/// A small trigonometric polynomial: smooth, bounded, with bounded
/// derivatives of every order.
#[derive(Debug, Clone)]
pub struct TrigPoly {
    base: f64,
    /// (amplitude, frequencies, phase)
    modes: Vec<(f64, Vec<f64>, f64)>,
}

impl TrigPoly {
    pub fn seeded(rng: &mut DetRng, n_args: usize, scale: f64) -> Self {
        let base = rng.uniform(-scale, scale);
        let modes = (0..3)
            .map(|_| {
                let amp = rng.uniform(-scale, scale);
                let freqs = (0..n_args).map(|_| rng.uniform(-1.5, 1.5)).collect();
                let phase = rng.uniform(0.0, std::f64::consts::TAU);
                (amp, freqs, phase)
            })
            .collect();
        TrigPoly { base, modes }
    }

    pub fn eval(&self, args: &[f64]) -> f64 {
        let mut v = self.base;
        for (amp, freqs, phase) in &self.modes {
            let arg: f64 = freqs.iter().zip(args).map(|(f, x)| f * x).sum();
            v += amp * (arg + phase).sin();
        }
        v
    }
}

fn poly_block(
    rng: &mut DetRng,
    rows: usize,
    cols: usize,
    n_args: usize,
    scale: f64,
) -> Vec<Vec<TrigPoly>> {
    (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| TrigPoly::seeded(rng, n_args, scale))
                .collect()
        })
        .collect()
}

fn eval_block(polys: &[Vec<TrigPoly>], args: &[f64]) -> Block {
    polys
        .iter()
        .map(|row| row.iter().map(|p| p.eval(args)).collect())
        .collect()
}

// ---------------------------------------------------------------------------
// Toy charts

/// A chart spec packaged with nothing else; the coefficients carry the
/// geometry.
pub struct ToyChart {
    pub spec: ChartSpec,
}

/// n = d_fiber = d_group = 1, abelian group, smooth nonconstant coefficients.
pub fn abelian_toy(seed: u64) -> ToyChart {
    let mut rng = DetRng::new(seed.wrapping_mul(0x9e37_79b9).wrapping_add(1));
    let dims = Dims {
        n: 1,
        d_fiber: 1,
        d_group: 1,
    };
    let a_fiber = poly_block(&mut rng, 1, 1, 2, 0.5); // args (x, s)
    let a_base = poly_block(&mut rng, 1, 1, 2, 0.5);
    let lam = poly_block(&mut rng, 1, 1, 2, 0.5);
    let gamma = TrigPoly::seeded(&mut rng, 1, 0.5);
    let spec = ChartSpec {
        dims,
        structure: Structure::zero(1),
        conn_fiber: Box::new(move |x, s| eval_block(&a_fiber, &[x[0], s[0]])),
        conn_base: Box::new(move |x, s| eval_block(&a_base, &[x[0], s[0]])),
        lift_fiber: Box::new(move |x, s| eval_block(&lam, &[x[0], s[0]])),
        group_lift: GroupLiftSpec::Compatible,
        christoffel: Box::new(move |x| vec![gamma.eval(x)]),
        group_chart: Box::new(|a, b| vec![a[0] + b[0]]),
        hamiltonian: Box::new(|u: &PointU| {
            0.5 * u.p_fiber[0][0] * u.p_fiber[0][0] + 0.5 * u.p_group[0][0] * u.p_group[0][0]
        }),
        coeff_fd: FdScheme::coefficient_default(),
        group_fd: FdScheme::group_default(),
    };
    ToyChart { spec }
}

/// n = 2, d_fiber = 1, d_group = 1, abelian, with nontrivial connection,
/// lift and Christoffel coefficients: covers the multi-base-index paths.
pub fn abelian_plane_chart(seed: u64) -> ToyChart {
    let mut rng = DetRng::new(seed.wrapping_mul(0x2545_f491).wrapping_add(5));
    let dims = Dims {
        n: 2,
        d_fiber: 1,
        d_group: 1,
    };
    let a_fiber = poly_block(&mut rng, 1, 1, 3, 0.5); // args (x1, x2, s)
    let a_base = poly_block(&mut rng, 1, 2, 3, 0.5);
    let lam = poly_block(&mut rng, 1, 2, 3, 0.5);
    let gamma: Vec<TrigPoly> = (0..8).map(|_| TrigPoly::seeded(&mut rng, 2, 0.4)).collect();
    let spec = ChartSpec {
        dims,
        structure: Structure::zero(1),
        conn_fiber: Box::new(move |x, s| eval_block(&a_fiber, &[x[0], x[1], s[0]])),
        conn_base: Box::new(move |x, s| eval_block(&a_base, &[x[0], x[1], s[0]])),
        lift_fiber: Box::new(move |x, s| eval_block(&lam, &[x[0], x[1], s[0]])),
        group_lift: GroupLiftSpec::Compatible,
        christoffel: Box::new(move |x| gamma.iter().map(|p| p.eval(x)).collect()),
        group_chart: Box::new(|a, b| vec![a[0] + b[0]]),
        hamiltonian: Box::new(|u: &PointU| {
            let pf: f64 = u.p_fiber.iter().flatten().map(|v| v * v).sum();
            let pg: f64 = u.p_group.iter().flatten().map(|v| v * v).sum();
            0.5 * (pf + pg)
        }),
        coeff_fd: FdScheme::coefficient_default(),
        group_fd: FdScheme::group_default(),
    };
    ToyChart { spec }
}

/// n = 1, d_fiber = 2, d_group = 3 with the SO(3) group chart; exercises the
/// nonabelian paths of every engine operation. Valid for |y| ≲ 1.5.
pub fn so3_fiber_chart(seed: u64) -> ToyChart {
    let mut rng = DetRng::new(seed.wrapping_mul(0x517c_c1b7).wrapping_add(3));
    let dims = Dims {
        n: 1,
        d_fiber: 2,
        d_group: 3,
    };
    let a_fiber = poly_block(&mut rng, 3, 2, 3, 0.4); // args (x, s1, s2)
    let a_base = poly_block(&mut rng, 3, 1, 3, 0.4);
    let lam = poly_block(&mut rng, 2, 1, 3, 0.4);
    let gamma = TrigPoly::seeded(&mut rng, 1, 0.4);
    let spec = ChartSpec {
        dims,
        structure: Structure::so3(),
        conn_fiber: Box::new(move |x, s| eval_block(&a_fiber, &[x[0], s[0], s[1]])),
        conn_base: Box::new(move |x, s| eval_block(&a_base, &[x[0], s[0], s[1]])),
        lift_fiber: Box::new(move |x, s| eval_block(&lam, &[x[0], s[0], s[1]])),
        group_lift: GroupLiftSpec::Compatible,
        christoffel: Box::new(move |x| vec![gamma.eval(x)]),
        group_chart: Box::new(so3_group_chart),
        hamiltonian: Box::new(|u: &PointU| {
            let pf: f64 = u.p_fiber.iter().flatten().map(|v| v * v).sum();
            let pg: f64 = u.p_group.iter().flatten().map(|v| v * v).sum();
            0.5 * (pf + pg)
        }),
        coeff_fd: FdScheme::coefficient_default(),
        group_fd: FdScheme::group_default(),
    };
    ToyChart { spec }
}

/// Composition of SO(3) in exponential coordinates:
/// `(a, b) ↦ log(exp(â) exp(b̂))`.
pub fn so3_group_chart(a: &[f64], b: &[f64]) -> Vec<f64> {
    let ra = exp_so3(Vec3::new(a[0], a[1], a[2]));
    let rb = exp_so3(Vec3::new(b[0], b[1], b[2]));
    let v = log_so3(ra.compose(rb)).expect("group chart composition left the log domain");
    vec![v.x, v.y, v.z]
}

// ---------------------------------------------------------------------------
// Random points, forms, scalars

/// A random point of the unreduced bundle inside the fixtures' chart
/// domains. With `offset_group` the group coordinates are nonzero.
pub fn random_point_u(spec: &ChartSpec, rng: &mut DetRng, offset_group: bool) -> PointU {
    let d = spec.dims;
    PointU {
        x: (0..d.n).map(|_| rng.uniform(-1.0, 1.0)).collect(),
        s: (0..d.d_fiber).map(|_| rng.uniform(-0.7, 0.7)).collect(),
        y: (0..d.d_group)
            .map(|_| {
                if offset_group {
                    rng.uniform(-0.4, 0.4)
                } else {
                    0.0
                }
            })
            .collect(),
        p_fiber: (0..d.n)
            .map(|_| (0..d.d_fiber).map(|_| rng.uniform(-1.5, 1.5)).collect())
            .collect(),
        p_group: (0..d.n)
            .map(|_| (0..d.d_group).map(|_| rng.uniform(-1.5, 1.5)).collect())
            .collect(),
    }
}

/// A random point of the reduced bundle.
pub fn random_point_r(spec: &ChartSpec, rng: &mut DetRng) -> PointR {
    let d = spec.dims;
    PointR {
        x: (0..d.n).map(|_| rng.uniform(-1.0, 1.0)).collect(),
        s: (0..d.d_fiber).map(|_| rng.uniform(-0.7, 0.7)).collect(),
        sigma: (0..d.n)
            .map(|_| (0..d.d_fiber).map(|_| rng.uniform(-1.5, 1.5)).collect())
            .collect(),
        mu: (0..d.n)
            .map(|_| (0..d.d_group).map(|_| rng.uniform(-1.5, 1.5)).collect())
            .collect(),
    }
}

/// A seeded affine Poisson form with smooth coefficient functions.
pub fn random_affine_form(dims: Dims, rng: &mut DetRng) -> PoissonFormSpec {
    let y: Vec<TrigPoly> = (0..dims.d_fiber)
        .map(|_| TrigPoly::seeded(rng, dims.d_fiber, 0.8))
        .collect();
    let xi: Vec<TrigPoly> = (0..dims.d_group)
        .map(|_| TrigPoly::seeded(rng, dims.d_fiber, 0.8))
        .collect();
    let omega: Vec<TrigPoly> = (0..dims.n)
        .map(|_| TrigPoly::seeded(rng, dims.n + dims.d_fiber, 0.8))
        .collect();
    PoissonFormSpec {
        vert: Box::new(move |s, _mu| y.iter().map(|p| p.eval(s)).collect()),
        section: Box::new(move |s| xi.iter().map(|p| p.eval(s)).collect()),
        base: Box::new(move |x, s| {
            let mut args = x.to_vec();
            args.extend_from_slice(s);
            omega.iter().map(|p| p.eval(&args)).collect()
        }),
    }
}

/// A seeded smooth scalar on the reduced bundle: a trigonometric part in
/// `(x, s)` plus linear and quadratic momentum terms with smooth
/// coefficients.
pub fn random_reduced_scalar(dims: Dims, rng: &mut DetRng) -> Box<dyn Fn(&PointR) -> f64> {
    let t0 = TrigPoly::seeded(rng, dims.n + dims.d_fiber, 0.8);
    let lin_sigma = poly_block(rng, dims.n, dims.d_fiber, dims.d_fiber, 0.6);
    let lin_mu = poly_block(rng, dims.n, dims.d_group, dims.d_fiber, 0.6);
    let q_sigma = rng.uniform(-0.5, 0.5);
    let q_mu = rng.uniform(-0.5, 0.5);
    Box::new(move |r: &PointR| {
        let mut args = r.x.clone();
        args.extend_from_slice(&r.s);
        let mut v = t0.eval(&args);
        for (i, row) in r.sigma.iter().enumerate() {
            for (a, sig) in row.iter().enumerate() {
                v += lin_sigma[i][a].eval(&r.s) * sig + 0.5 * q_sigma * sig * sig;
            }
        }
        for (i, row) in r.mu.iter().enumerate() {
            for (al, m) in row.iter().enumerate() {
                v += lin_mu[i][al].eval(&r.s) * m + 0.5 * q_mu * m * m;
            }
        }
        v
    })
}

/// Move a point of the unreduced bundle along the lifted left action of the
/// group element with normal coordinates `g`: chart composition on the group
/// coordinates, contragredient Jacobian on the group momenta.
pub fn act_on_point_u(spec: &ChartSpec, g: &[f64], u: &PointU) -> PointU {
    let dg = spec.dims.d_group;
    let y_new = (spec.group_chart)(g, &u.y);
    let jac = spec
        .group_fd
        .jacobian(|w: &[f64]| (spec.group_chart)(g, w), &u.y, dg);
    let inv = crate::chart::fd::invert_dense(&jac).expect("action Jacobian is singular");
    let mut p_group = u.p_group.clone();
    for i in 0..spec.dims.n {
        for beta in 0..dg {
            p_group[i][beta] = (0..dg).map(|gam| inv[gam][beta] * u.p_group[i][gam]).sum();
        }
    }
    PointU {
        x: u.x.clone(),
        s: u.s.clone(),
        y: y_new,
        p_fiber: u.p_fiber.clone(),
        p_group,
    }
}

// ---------------------------------------------------------------------------
// The strand chart

/// Frame data of the strand chart: an anchor rotation `R₀` whose sphere
/// point is the chart center, with an orthonormal tangent frame there.
/// Everything downstream is closed-form in this data.
#[derive(Debug, Clone, Copy)]
pub struct StrandFrame {
    pub anchor: Rot3,
    pub zeta0: Vec3,
    pub e1: Vec3,
    pub e2: Vec3,
}

impl StrandFrame {
    /// Frame at the sphere point of `anchor`, with a deterministic tangent
    /// basis.
    pub fn new(anchor: Rot3) -> Self {
        let zeta0 = anchor.apply_inverse(Vec3::E3);
        // Any vector not parallel to ζ₀ seeds the tangent frame.
        let helper = if zeta0.x.abs() < 0.9 {
            Vec3::E1
        } else {
            Vec3::E2
        };
        let e1 = zeta0.cross(helper).normalized();
        let e2 = zeta0.cross(e1);
        StrandFrame {
            anchor,
            zeta0,
            e1,
            e2,
        }
    }

    /// Stereographic parametrization centered at ζ₀ (projection point at the
    /// antipode): covers the sphere minus `−ζ₀`.
    pub fn zeta_of(&self, uv: [f64; 2]) -> Vec3 {
        let [u, v] = uv;
        let d = 1.0 + u * u + v * v;
        (self.e1 * (2.0 * u) + self.e2 * (2.0 * v) + self.zeta0 * (1.0 - u * u - v * v)) * (1.0 / d)
    }

    /// Chart coordinates of a sphere point (requires `⟨ζ, ζ₀⟩ > −1`).
    pub fn coords_of_zeta(&self, zeta: Vec3) -> [f64; 2] {
        let denom = 1.0 + zeta.dot(self.zeta0);
        [zeta.dot(self.e1) / denom, zeta.dot(self.e2) / denom]
    }

    /// Coordinate tangent vectors `t_a = ∂ζ/∂u^a` (closed form).
    pub fn dzeta(&self, uv: [f64; 2]) -> [Vec3; 2] {
        let [u, v] = uv;
        let d = 1.0 + u * u + v * v;
        let zeta = self.zeta_of(uv);
        let tu = (self.e1 * 2.0 - self.zeta0 * (2.0 * u)) * (1.0 / d) - zeta * (2.0 * u / d);
        let tv = (self.e2 * 2.0 - self.zeta0 * (2.0 * v)) * (1.0 / d) - zeta * (2.0 * v / d);
        [tu, tv]
    }

    /// Rotation taking ζ₀ to ζ(u, v) along the connecting great circle.
    fn transporter(&self, uv: [f64; 2]) -> Mat3 {
        let zeta = self.zeta_of(uv);
        let c = self.zeta0.cross(zeta);
        let d = self.zeta0.dot(zeta);
        let k = hat(c);
        Mat3::IDENTITY + k + (k * k) * (1.0 / (1.0 + d))
    }

    /// Derivatives of the transporter along the chart directions.
    fn dtransporter(&self, uv: [f64; 2]) -> [Mat3; 2] {
        let zeta = self.zeta_of(uv);
        let t = self.dzeta(uv);
        let c = self.zeta0.cross(zeta);
        let d = self.zeta0.dot(zeta);
        let k = hat(c);
        let mut out = [Mat3::zero(); 2];
        for a in 0..2 {
            let dc = self.zeta0.cross(t[a]);
            let dd = self.zeta0.dot(t[a]);
            let dk = hat(dc);
            out[a] = dk + (dk * k + k * dk) * (1.0 / (1.0 + d))
                - (k * k) * (dd / ((1.0 + d) * (1.0 + d)));
        }
        out
    }

    /// Spatial rotation rates `s_a = vee(∂_a S · Sᵀ)` of the transporter.
    pub fn section_spin(&self, uv: [f64; 2]) -> [Vec3; 2] {
        let s = self.transporter(uv);
        let ds = self.dtransporter(uv);
        [
            crate::so3::vee_unchecked(ds[0] * s.transpose()),
            crate::so3::vee_unchecked(ds[1] * s.transpose()),
        ]
    }

    /// Principal-connection coefficients `A^1_a(u, v) = ⟨s_a, ζ⟩` of the
    /// mechanical connection in this trivialization.
    pub fn conn_coeff(&self, uv: [f64; 2]) -> [f64; 2] {
        let zeta = self.zeta_of(uv);
        let spin = self.section_spin(uv);
        [spin[0].dot(zeta), spin[1].dot(zeta)]
    }

    /// The trivialization `Ψ(u, v, θ) = exp(θ ê₃) R₀ Sᵀ(u, v)`.
    pub fn rotation_of(&self, uv: [f64; 2], theta: f64) -> Rot3 {
        let q = exp_so3(Vec3::E3 * theta);
        let s = self.transporter(uv);
        Rot3::from_matrix_unchecked(q.matrix() * self.anchor.matrix() * s.transpose())
    }

    /// Chart coordinates of a rotation (valid while the sphere point avoids
    /// the antipode of the chart center).
    pub fn coords_of_rotation(&self, rot: Rot3) -> ([f64; 2], f64) {
        let zeta = rot.apply_inverse(Vec3::E3);
        let uv = self.coords_of_zeta(zeta);
        let section = self.rotation_of(uv, 0.0);
        let q = rot.matrix() * section.matrix().transpose();
        let theta = q.m[1][0].atan2(q.m[0][0]);
        (uv, theta)
    }

    /// Spatial vectors of the coordinate frame `(∂_u, ∂_v)` at `(u, v, θ)`.
    pub fn frame_vectors(&self, uv: [f64; 2], theta: f64) -> [Vec3; 2] {
        let q = exp_so3(Vec3::E3 * theta);
        let s = self.transporter(uv);
        let spin = self.section_spin(uv);
        let to_spatial = |sa: Vec3| -> Vec3 {
            // w_a = −Q R₀ Sᵀ s_a
            -(q.matrix() * (self.anchor.matrix() * (s.transpose() * sa)))
        };
        [to_spatial(spin[0]), to_spatial(spin[1])]
    }

    /// Chart momenta of a spatial momentum vector: `(⟨π, w_u⟩, ⟨π, w_v⟩, ⟨π, e₃⟩)`.
    pub fn chart_momenta(&self, uv: [f64; 2], theta: f64, pi: Vec3) -> (f64, f64, f64) {
        let w = self.frame_vectors(uv, theta);
        (pi.dot(w[0]), pi.dot(w[1]), pi.dot(Vec3::E3))
    }

    /// Spatial momentum vector from chart momenta.
    pub fn spatial_momentum(
        &self,
        uv: [f64; 2],
        theta: f64,
        p_u: f64,
        p_v: f64,
        p_theta: f64,
    ) -> Vec3 {
        let w = self.frame_vectors(uv, theta);
        Mat3::from_rows(w[0], w[1], Vec3::E3)
            .solve(Vec3::new(p_u, p_v, p_theta))
            .expect("chart frame is degenerate here")
    }
}

/// The strand in an adapted chart: two base dimensions (t, s), the
/// stereographic sphere chart as the fiber, the circle as the group.
pub struct StrandChart {
    pub spec: ChartSpec,
    pub frame: StrandFrame,
    pub params: StrandParams,
}

impl StrandChart {
    pub fn new(params: StrandParams, anchor: Rot3) -> Self {
        let frame = StrandFrame::new(anchor);
        let dims = Dims {
            n: 2,
            d_fiber: 2,
            d_group: 1,
        };
        let conn_frame = frame;
        let ham_frame = frame;
        let spec = ChartSpec {
            dims,
            structure: Structure::zero(1),
            conn_fiber: Box::new(move |_x, s| {
                let a = conn_frame.conn_coeff([s[0], s[1]]);
                vec![vec![a[0], a[1]]]
            }),
            conn_base: Box::new(|_x, _s| vec![vec![0.0, 0.0]]),
            lift_fiber: Box::new(|_x, _s| vec![vec![0.0, 0.0], vec![0.0, 0.0]]),
            group_lift: GroupLiftSpec::Compatible,
            christoffel: Box::new(|_x| vec![0.0; 8]),
            group_chart: Box::new(|a, b| vec![a[0] + b[0]]),
            hamiltonian: Box::new(move |u: &PointU| {
                let point = unreduced_of_frame(&ham_frame, u);
                crate::strand::h_unreduced(&params, &point)
            }),
            coeff_fd: FdScheme::coefficient_default(),
            group_fd: FdScheme::group_default(),
        };
        StrandChart {
            spec,
            frame,
            params,
        }
    }

    /// Chart point over base `x = (t, s)` from an intrinsic unreduced point.
    pub fn point_u(&self, x: [f64; 2], point: &UnreducedPoint) -> PointU {
        let (uv, theta) = self.frame.coords_of_rotation(point.rot);
        let (ptu, ptv, ptt) = self.frame.chart_momenta(uv, theta, point.p_t);
        let (psu, psv, pst) = self.frame.chart_momenta(uv, theta, point.p_s);
        PointU {
            x: x.to_vec(),
            s: vec![uv[0], uv[1]],
            y: vec![theta],
            p_fiber: vec![vec![ptu, ptv], vec![psu, psv]],
            p_group: vec![vec![ptt], vec![pst]],
        }
    }

    /// Intrinsic unreduced point of a chart point.
    pub fn unreduced_of(&self, u: &PointU) -> UnreducedPoint {
        unreduced_of_frame(&self.frame, u)
    }

    /// Chart point of the reduced bundle from an intrinsic reduced point.
    pub fn point_r(&self, x: [f64; 2], r: &ReducedPoint) -> PointR {
        let uv = self.frame.coords_of_zeta(r.zeta);
        let t = self.frame.dzeta(uv);
        PointR {
            x: x.to_vec(),
            s: vec![uv[0], uv[1]],
            sigma: vec![
                vec![r.sigma_t.dot(t[0]), r.sigma_t.dot(t[1])],
                vec![r.sigma_s.dot(t[0]), r.sigma_s.dot(t[1])],
            ],
            mu: vec![vec![r.mu_t], vec![r.mu_s]],
        }
    }

    /// Intrinsic reduced point of a chart point.
    pub fn reduced_of(&self, r: &PointR) -> ReducedPoint {
        let uv = [r.s[0], r.s[1]];
        let zeta = self.frame.zeta_of(uv);
        let t = self.frame.dzeta(uv);
        // The chart is conformal: |t_u|² = |t_v|² = 4/D², t_u ⊥ t_v.
        let scale = 1.0 / t[0].dot(t[0]);
        let lift = |cu: f64, cv: f64| (t[0] * cu + t[1] * cv) * scale;
        ReducedPoint {
            zeta,
            sigma_t: lift(r.sigma[0][0], r.sigma[0][1]),
            sigma_s: lift(r.sigma[1][0], r.sigma[1][1]),
            mu_t: r.mu[0][0],
            mu_s: r.mu[1][0],
        }
    }

    /// The reduced Hamiltonian as a chart observable.
    pub fn reduced_hamiltonian(&self) -> impl Fn(&PointR) -> f64 + '_ {
        move |r: &PointR| {
            crate::strand::h_reduced(&self.params, &self.reduced_of(r))
                .expect("reduced point left the chart domain")
        }
    }
}

fn unreduced_of_frame(frame: &StrandFrame, u: &PointU) -> UnreducedPoint {
    let uv = [u.s[0], u.s[1]];
    let theta = u.y[0];
    let rot = frame.rotation_of(uv, theta);
    let p_t = frame.spatial_momentum(uv, theta, u.p_fiber[0][0], u.p_fiber[0][1], u.p_group[0][0]);
    let p_s = frame.spatial_momentum(uv, theta, u.p_fiber[1][0], u.p_fiber[1][1], u.p_group[1][0]);
    UnreducedPoint { rot, p_t, p_s }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::{kappa_strand, mech_connection};

    fn test_params() -> StrandParams {
        StrandParams::new(
            crate::so3::SpdTensor::diag(1.0, 2.0, 3.0).unwrap(),
            crate::so3::SpdTensor::diag(2.0, 1.0, 1.0).unwrap(),
            1.0,
            Vec3::E3,
        )
    }

    fn rand_vec(rng: &mut DetRng, scale: f64) -> Vec3 {
        Vec3::new(
            rng.uniform(-scale, scale),
            rng.uniform(-scale, scale),
            rng.uniform(-scale, scale),
        )
    }

    #[test]
    fn stereographic_roundtrip_and_conformality() {
        let frame = StrandFrame::new(exp_so3(Vec3::new(0.3, -0.5, 0.9)));
        let mut rng = DetRng::new(0xcafe_0001);
        for _ in 0..100 {
            let uv = [rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8)];
            let zeta = frame.zeta_of(uv);
            assert!((zeta.norm() - 1.0).abs() < 1e-13);
            let back = frame.coords_of_zeta(zeta);
            assert!((back[0] - uv[0]).abs() < 1e-12);
            assert!((back[1] - uv[1]).abs() < 1e-12);
            let t = frame.dzeta(uv);
            assert!(t[0].dot(t[1]).abs() < 1e-12);
            assert!((t[0].dot(t[0]) - t[1].dot(t[1])).abs() < 1e-12);
            // Tangency.
            assert!(t[0].dot(zeta).abs() < 1e-12);
            assert!(t[1].dot(zeta).abs() < 1e-12);
        }
    }

    #[test]
    fn trivialization_sections_the_bundle() {
        let frame = StrandFrame::new(exp_so3(Vec3::new(-0.2, 0.4, 1.1)));
        let mut rng = DetRng::new(0xcafe_0002);
        for _ in 0..100 {
            let uv = [rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8)];
            let theta = rng.uniform(-2.5, 2.5);
            let rot = frame.rotation_of(uv, theta);
            // The rotation's sphere point is ζ(u, v).
            let zeta = rot.apply_inverse(Vec3::E3);
            assert!((zeta - frame.zeta_of(uv)).norm_max() < 1e-12);
            // Coordinates round-trip.
            let (uv2, theta2) = frame.coords_of_rotation(rot);
            assert!((uv2[0] - uv[0]).abs() < 1e-10);
            assert!((uv2[1] - uv[1]).abs() < 1e-10);
            assert!((theta2 - theta).abs() < 1e-10);
        }
    }

    #[test]
    fn connection_coefficients_match_frame_pairing() {
        // A^1_a = −𝒜(∂_a): the frame vectors' e₃-components, with sign.
        let frame = StrandFrame::new(exp_so3(Vec3::new(0.7, 0.1, -0.3)));
        let mut rng = DetRng::new(0xcafe_0003);
        for _ in 0..50 {
            let uv = [rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8)];
            let theta = rng.uniform(-2.0, 2.0);
            let a = frame.conn_coeff(uv);
            let w = frame.frame_vectors(uv, theta);
            for i in 0..2 {
                assert!(
                    (a[i] + mech_connection(w[i])).abs() < 1e-12,
                    "A^1_{i} = {} vs -<w, e3> = {}",
                    a[i],
                    -mech_connection(w[i])
                );
            }
        }
    }

    #[test]
    fn frame_vectors_match_finite_differences_of_trivialization() {
        let frame = StrandFrame::new(exp_so3(Vec3::new(0.2, 0.8, -0.1)));
        let h = 1e-6;
        let uv = [0.23, -0.41];
        let theta = 0.9;
        let w = frame.frame_vectors(uv, theta);
        for a in 0..2 {
            let mut up = uv;
            let mut um = uv;
            up[a] += h;
            um[a] -= h;
            let d = (frame.rotation_of(up, theta).matrix() - frame.rotation_of(um, theta).matrix())
                * (1.0 / (2.0 * h));
            let fd =
                crate::so3::vee_unchecked(d * frame.rotation_of(uv, theta).matrix().transpose());
            assert!(
                (fd - w[a]).norm_max() < 1e-7,
                "direction {a}: {fd:?} vs {:?}",
                w[a]
            );
        }
    }

    #[test]
    fn momentum_dictionary_roundtrip() {
        let chart = StrandChart::new(test_params(), exp_so3(Vec3::new(0.4, -0.2, 0.6)));
        let mut rng = DetRng::new(0xcafe_0004);
        for _ in 0..100 {
            let point = UnreducedPoint {
                rot: exp_so3(rand_vec(&mut rng, 1.0)),
                p_t: rand_vec(&mut rng, 2.0),
                p_s: rand_vec(&mut rng, 2.0),
            };
            let u = chart.point_u([0.1, 0.2], &point);
            let back = chart.unreduced_of(&u);
            assert!((back.rot.matrix() - point.rot.matrix()).norm_max() < 1e-9);
            assert!((back.p_t - point.p_t).norm_max() < 1e-9);
            assert!((back.p_s - point.p_s).norm_max() < 1e-9);
        }
    }

    #[test]
    fn reduced_dictionary_roundtrip() {
        let chart = StrandChart::new(test_params(), exp_so3(Vec3::new(-0.1, 0.5, 0.2)));
        let mut rng = DetRng::new(0xcafe_0005);
        for _ in 0..100 {
            let zeta = rand_vec(&mut rng, 1.0).normalized();
            if zeta.dot(chart.frame.zeta0) < -0.3 {
                continue; // stay away from the chart's antipode
            }
            let r = ReducedPoint::new(
                zeta,
                rand_vec(&mut rng, 2.0).reject_from_unit(zeta),
                rand_vec(&mut rng, 2.0).reject_from_unit(zeta),
                rng.uniform(-2.0, 2.0),
                rng.uniform(-2.0, 2.0),
            )
            .unwrap();
            let chart_point = chart.point_r([0.0, 0.0], &r);
            let back = chart.reduced_of(&chart_point);
            assert!((back.zeta - r.zeta).norm_max() < 1e-12);
            assert!((back.sigma_t - r.sigma_t).norm_max() < 1e-10);
            assert!((back.sigma_s - r.sigma_s).norm_max() < 1e-10);
            assert!((back.mu_t - r.mu_t).abs() < 1e-12);
        }
    }

    #[test]
    fn chart_projection_agrees_with_intrinsic_projection() {
        // κ evaluated through the coefficient engine at general θ equals the
        // intrinsic momentum projection, translated by the dictionaries.
        let chart = StrandChart::new(test_params(), exp_so3(Vec3::new(0.3, 0.3, -0.4)));
        let mut rng = DetRng::new(0xcafe_0006);
        for _ in 0..100 {
            let point = UnreducedPoint {
                rot: exp_so3(rand_vec(&mut rng, 1.0)),
                p_t: rand_vec(&mut rng, 2.0),
                p_s: rand_vec(&mut rng, 2.0),
            };
            let u = chart.point_u([0.0, 0.0], &point);
            let r_chart = crate::chart::kappa::kappa_local(&chart.spec, &u).unwrap();
            let intrinsic = kappa_strand(&point);
            let expected = chart.point_r([0.0, 0.0], &intrinsic);
            for i in 0..2 {
                for a in 0..2 {
                    assert!(
                        (r_chart.sigma[i][a] - expected.sigma[i][a]).abs() < 1e-9,
                        "sigma[{i}][{a}]: {} vs {}",
                        r_chart.sigma[i][a],
                        expected.sigma[i][a]
                    );
                }
                assert!((r_chart.mu[i][0] - expected.mu[i][0]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn chart_hamiltonian_is_the_intrinsic_hamiltonian() {
        let chart = StrandChart::new(test_params(), exp_so3(Vec3::new(0.0, 0.6, 0.2)));
        let mut rng = DetRng::new(0xcafe_0007);
        for _ in 0..50 {
            let point = UnreducedPoint {
                rot: exp_so3(rand_vec(&mut rng, 1.0)),
                p_t: rand_vec(&mut rng, 2.0),
                p_s: rand_vec(&mut rng, 2.0),
            };
            let u = chart.point_u([0.0, 0.0], &point);
            let via_chart = (chart.spec.hamiltonian)(&u);
            let direct = crate::strand::h_unreduced(&chart.params, &point);
            assert!((via_chart - direct).abs() < 1e-10 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn curvature_coefficients_match_intrinsic_pairing() {
        // Chart curvature B^1_{ab} against the intrinsic mechanical-connection
        // pairing: the bracket pairs the slots in the opposite order, so
        // B^1_{uv} = ⟨ζ, t_u × t_v⟩ = −curvature_pairing(ζ, t_u, t_v).
        use crate::chart::brackets::curvature_coefficients;
        let chart = StrandChart::new(test_params(), exp_so3(Vec3::new(0.5, -0.3, 0.1)));
        let mut rng = DetRng::new(0xcafe_0008);
        for _ in 0..100 {
            let uv = [rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7)];
            let zeta = chart.frame.zeta_of(uv);
            let t = chart.frame.dzeta(uv);
            let b = curvature_coefficients(&chart.spec, &[0.0, 0.0], &[uv[0], uv[1]]);
            let intrinsic = -crate::reduction::curvature_pairing(zeta, t[0], t[1]);
            assert!(
                (b[0][0][1] - intrinsic).abs() < 1e-6,
                "B^1_uv = {} vs intrinsic {}",
                b[0][0][1],
                intrinsic
            );
            // Antisymmetry of the chart coefficients.
            assert!((b[0][0][1] + b[0][1][0]).abs() < 1e-8);
            assert!(b[0][0][0].abs() < 1e-8);
        }
    }
}
