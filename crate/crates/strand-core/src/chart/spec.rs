//! Coefficient bundles describing a trivialized bundle `P = M × F × G` in
//! adapted coordinates `(x^i, x^a, y^α, p^i_a, p^i_α)`, together with the
//! point and observable types the engine evaluates on.

use crate::chart::fd::FdScheme;
use crate::chart::ChartError;

/// `coeff[r][c]`-style small coefficient blocks.
pub type Block = Vec<Vec<f64>>;

pub fn zero_block(rows: usize, cols: usize) -> Block {
    vec![vec![0.0; cols]; rows]
}

/// Dimensions of the adapted chart: `n = dim M`, `d_fiber = dim F`,
/// `d_group = dim G`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dims {
    pub n: usize,
    pub d_fiber: usize,
    pub d_group: usize,
}

/// Structure constants `c^γ_{αβ}` of the symmetry group's Lie algebra,
/// validated for antisymmetry and the Jacobi identity at construction.
#[derive(Debug, Clone)]
pub struct Structure {
    d: usize,
    /// c[gamma][alpha][beta]
    c: Vec<f64>,
}

impl Structure {
    pub fn new(d: usize, c: Vec<f64>) -> Result<Self, ChartError> {
        if c.len() != d * d * d {
            return Err(ChartError::Invalid(format!(
                "structure constants: expected {} entries, got {}",
                d * d * d,
                c.len()
            )));
        }
        let s = Structure { d, c };
        let mut antisym: f64 = 0.0;
        for g in 0..d {
            for a in 0..d {
                for b in 0..d {
                    antisym = antisym.max((s.get(g, a, b) + s.get(g, b, a)).abs());
                }
            }
        }
        if antisym > 1e-12 {
            return Err(ChartError::Invalid(format!(
                "structure constants not antisymmetric (defect {antisym})"
            )));
        }
        let mut jacobi: f64 = 0.0;
        for a in 0..d {
            for b in 0..d {
                for e in 0..d {
                    for g in 0..d {
                        let mut sum = 0.0;
                        for m in 0..d {
                            sum += s.get(m, a, b) * s.get(g, m, e)
                                + s.get(m, b, e) * s.get(g, m, a)
                                + s.get(m, e, a) * s.get(g, m, b);
                        }
                        jacobi = jacobi.max(sum.abs());
                    }
                }
            }
        }
        if jacobi > 1e-10 {
            return Err(ChartError::Invalid(format!(
                "structure constants violate the Jacobi identity (defect {jacobi})"
            )));
        }
        Ok(s)
    }

    pub fn zero(d: usize) -> Self {
        Structure {
            d,
            c: vec![0.0; d * d * d],
        }
    }

    /// so(3) in the standard basis: `c^k_{ij} = ε_{ijk}`.
    pub fn so3() -> Self {
        let mut c = vec![0.0; 27];
        let eps = |i: usize, j: usize, k: usize| -> f64 {
            match (i, j, k) {
                (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
                (2, 1, 0) | (1, 0, 2) | (0, 2, 1) => -1.0,
                _ => 0.0,
            }
        };
        for g in 0..3 {
            for a in 0..3 {
                for b in 0..3 {
                    c[(g * 3 + a) * 3 + b] = eps(a, b, g);
                }
            }
        }
        Structure { d: 3, c }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// `c^gamma_{alpha beta}`.
    pub fn get(&self, gamma: usize, alpha: usize, beta: usize) -> f64 {
        self.c[(gamma * self.d + alpha) * self.d + beta]
    }

    pub fn is_abelian(&self) -> bool {
        self.c.iter().all(|v| *v == 0.0)
    }
}

/// A point of the unreduced bundle in adapted coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PointU {
    /// Base coordinates `x^i`, length n.
    pub x: Vec<f64>,
    /// Fiber coordinates `x^a`, length d_fiber.
    pub s: Vec<f64>,
    /// Group normal coordinates `y^α`, length d_group.
    pub y: Vec<f64>,
    /// Momenta `p^i_a`: `p_fiber[i][a]`, n × d_fiber.
    pub p_fiber: Block,
    /// Momenta `p^i_α`: `p_group[i][α]`, n × d_group.
    pub p_group: Block,
}

/// A point of the reduced bundle in adapted coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PointR {
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    /// `sigma[i][a]`, n × d_fiber.
    pub sigma: Block,
    /// `mu[i][α]`, n × d_group.
    pub mu: Block,
}

/// Coordinate tangent vector at a [`PointU`].
#[derive(Debug, Clone, PartialEq)]
pub struct TangentU {
    pub dx: Vec<f64>,
    pub ds: Vec<f64>,
    pub dy: Vec<f64>,
    pub dp_fiber: Block,
    pub dp_group: Block,
}

impl TangentU {
    pub fn zero(dims: Dims) -> Self {
        TangentU {
            dx: vec![0.0; dims.n],
            ds: vec![0.0; dims.d_fiber],
            dy: vec![0.0; dims.d_group],
            dp_fiber: zero_block(dims.n, dims.d_fiber),
            dp_group: zero_block(dims.n, dims.d_group),
        }
    }
}

/// Coordinate tangent vector at a [`PointR`].
#[derive(Debug, Clone, PartialEq)]
pub struct TangentR {
    pub dx: Vec<f64>,
    pub ds: Vec<f64>,
    pub dsigma: Block,
    pub dmu: Block,
}

impl TangentR {
    pub fn zero(dims: Dims) -> Self {
        TangentR {
            dx: vec![0.0; dims.n],
            ds: vec![0.0; dims.d_fiber],
            dsigma: zero_block(dims.n, dims.d_fiber),
            dmu: zero_block(dims.n, dims.d_group),
        }
    }
}

pub type FiberConn = Box<dyn Fn(&[f64], &[f64]) -> Block>;
pub type BaseConn = Box<dyn Fn(&[f64], &[f64]) -> Block>;
pub type FiberLift = Box<dyn Fn(&[f64], &[f64]) -> Block>;
pub type GroupLift = Box<dyn Fn(&[f64], &[f64], &[f64]) -> Block>;
pub type Christoffel = Box<dyn Fn(&[f64]) -> Vec<f64>>;
pub type GroupChart = Box<dyn Fn(&[f64], &[f64]) -> Vec<f64>>;
pub type UScalar = Box<dyn Fn(&PointU) -> f64>;

/// How the group-direction lift coefficients `Λ^α_i(x, s, y)` are obtained.
pub enum GroupLiftSpec {
    /// Derived from the compatibility relation `Λ^α_i = A^α_i + A^α_b Λ^b_i`
    /// and extended to general `y` by equivariance.
    Compatible,
    /// Supplied explicitly.
    Explicit(GroupLift),
}

/// Coefficient bundle driving the generic local-coordinate engine.
///
/// * `conn_fiber`, `conn_base`: principal-connection coefficients
///   `A^α_a(x, s)` and `A^α_i(x, s)` at the identity section; the engine
///   extends them to general `y` by equivariance.
/// * `lift_fiber`: Ehresmann-connection coefficients `Λ^a_i(x, s)`.
/// * `christoffel`: `Γ^k_{ij}(x)` flattened as `[k][i][j]`.
/// * `group_chart`: the composition map of `G` in normal coordinates,
///   `(a, b) ↦ coords(exp(a·B) · exp(b·B))`.
/// * `hamiltonian`: scalar `H(x, s, y, p)`.
pub struct ChartSpec {
    pub dims: Dims,
    pub structure: Structure,
    pub conn_fiber: FiberConn,
    pub conn_base: BaseConn,
    pub lift_fiber: FiberLift,
    pub group_lift: GroupLiftSpec,
    pub christoffel: Christoffel,
    pub group_chart: GroupChart,
    pub hamiltonian: UScalar,
    /// Scheme for coefficient and observable derivatives.
    pub coeff_fd: FdScheme,
    /// Scheme for derivatives of the group chart map (nested inside other
    /// derivatives, hence the higher-order default).
    pub group_fd: FdScheme,
}

impl ChartSpec {
    pub fn christoffel_at(&self, x: &[f64], k: usize, i: usize, j: usize) -> f64 {
        let n = self.dims.n;
        (self.christoffel)(x)[(k * n + i) * n + j]
    }

    /// `Λ^α_i(x, s, 0)` for the compatible case: `A^α_i + A^α_b Λ^b_i`.
    pub fn compatible_group_lift_at_identity(&self, x: &[f64], s: &[f64]) -> Block {
        let a_base = (self.conn_base)(x, s);
        let a_fiber = (self.conn_fiber)(x, s);
        let lam = (self.lift_fiber)(x, s);
        let (n, df, dg) = (self.dims.n, self.dims.d_fiber, self.dims.d_group);
        let mut out = zero_block(dg, n);
        for alpha in 0..dg {
            for i in 0..n {
                let mut v = a_base[alpha][i];
                for b in 0..df {
                    v += a_fiber[alpha][b] * lam[b][i];
                }
                out[alpha][i] = v;
            }
        }
        out
    }

    /// Largest violation of the compatibility relation at the given points
    /// (identically zero when `group_lift` is [`GroupLiftSpec::Compatible`]).
    pub fn compatibility_defect(&self, points: &[(Vec<f64>, Vec<f64>)]) -> f64 {
        let mut defect: f64 = 0.0;
        for (x, s) in points {
            let want = self.compatible_group_lift_at_identity(x, s);
            let got = match &self.group_lift {
                GroupLiftSpec::Compatible => want.clone(),
                GroupLiftSpec::Explicit(f) => f(x, s, &vec![0.0; self.dims.d_group]),
            };
            for alpha in 0..self.dims.d_group {
                for i in 0..self.dims.n {
                    defect = defect.max((want[alpha][i] - got[alpha][i]).abs());
                }
            }
        }
        defect
    }
}

// ---------------------------------------------------------------------------
// Poisson (n-1)-forms

pub type VertCoeff = Box<dyn Fn(&[f64], &Block) -> Vec<f64>>;
pub type SectionCoeff = Box<dyn Fn(&[f64]) -> Vec<f64>>;
pub type BaseFormCoeff = Box<dyn Fn(&[f64], &[f64]) -> Vec<f64>>;

/// An affine Poisson (n−1)-form on the reduced bundle, encoded by its three
/// coefficient families:
///
/// `f^i(x, s, σ, μ) = σ^i_a Y^a(s[, μ]) + μ^i_α ξ^α(s) + ω^i(x, s)`.
///
/// The closed horizontal part of the general decomposition cancels in every
/// bracket and residual, and is fixed to zero here.
pub struct PoissonFormSpec {
    /// Vertical-vector coefficients `Y^a(s, μ)`; reduction of an invariant
    /// form yields `Y^a(s)` (ignore the `μ` argument).
    pub vert: VertCoeff,
    /// Adjoint-bundle section coefficients `ξ^α(s)`.
    pub section: SectionCoeff,
    /// Horizontal (n−1)-form coefficients `ω^i(x, s)` on the quotient.
    pub base: BaseFormCoeff,
}

impl PoissonFormSpec {
    /// A form with constant coefficients.
    pub fn constant(y: Vec<f64>, xi: Vec<f64>, omega: Vec<f64>) -> Self {
        PoissonFormSpec {
            vert: Box::new(move |_, _| y.clone()),
            section: Box::new(move |_| xi.clone()),
            base: Box::new(move |_, _| omega.clone()),
        }
    }

    /// Component functions `f^i` on the reduced bundle.
    pub fn eval_reduced(&self, r: &PointR) -> Vec<f64> {
        let y = (self.vert)(&r.s, &r.mu);
        let xi = (self.section)(&r.s);
        let omega = (self.base)(&r.x, &r.s);
        let n = r.sigma.len();
        (0..n)
            .map(|i| {
                let mut v = omega[i];
                for (a, ya) in y.iter().enumerate() {
                    v += r.sigma[i][a] * ya;
                }
                for (al, xa) in xi.iter().enumerate() {
                    v += r.mu[i][al] * xa;
                }
                v
            })
            .collect()
    }
}
