//! Run configuration: a single JSON document, validated into core types.

use serde::{Deserialize, Serialize};
use strand_core::dynamics::{Grid, InitialKind, IntegratorConfig};
use strand_core::so3::{Mat3, SpdTensor, Vec3};
use strand_core::strand::StrandParams;

/// A symmetric positive-definite tensor, as a diagonal triple or a full
/// 3×3 matrix (row-major).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TensorSpec {
    Diag([f64; 3]),
    Full([[f64; 3]; 3]),
}

impl TensorSpec {
    pub fn build(&self, name: &str) -> Result<SpdTensor, String> {
        let m = match self {
            TensorSpec::Diag([a, b, c]) => Mat3::diag(*a, *b, *c),
            TensorSpec::Full(rows) => Mat3::new(*rows),
        };
        SpdTensor::new(m).map_err(|e| format!("{name}: {e}"))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSection {
    pub n_s: usize,
    pub length: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntegratorSection {
    /// Either a fixed time step or a CFL factor relative to ds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cfl: Option<f64>,
    pub t_end: f64,
    #[serde(default = "default_fd_order")]
    pub fd_order: usize,
    #[serde(default = "default_renormalize")]
    pub renormalize_every: usize,
}

fn default_fd_order() -> usize {
    2
}

fn default_renormalize() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhysicsSection {
    #[serde(rename = "I")]
    pub inertia: TensorSpec,
    #[serde(rename = "J")]
    pub coupling: TensorSpec,
    pub e: f64,
    pub chi: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialSection {
    Equilibrium,
    Twist { amplitude: f64, mode: u32 },
    Fourier { amplitude: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputsSection {
    pub directory: String,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    SimulateUnreduced,
    SimulateReduced,
    Compare,
    VerifyIdentities,
    Convergence,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "simulate-unreduced" => Ok(Mode::SimulateUnreduced),
            "simulate-reduced" => Ok(Mode::SimulateReduced),
            "compare" => Ok(Mode::Compare),
            "verify-identities" => Ok(Mode::VerifyIdentities),
            "convergence" => Ok(Mode::Convergence),
            other => Err(format!("unknown mode '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub grid: GridSection,
    pub integrator: IntegratorSection,
    pub physics: PhysicsSection,
    pub initial: InitialSection,
    #[serde(default)]
    pub seed: u64,
    pub outputs: OutputsSection,
    pub mode: Mode,
    /// Resolutions for convergence mode; the grid section's n_s is ignored
    /// there.
    #[serde(default = "default_resolutions")]
    pub resolutions: Vec<usize>,
}

fn default_resolutions() -> Vec<usize> {
    vec![32, 64, 128, 256]
}

/// Everything a run needs, validated.
pub struct Validated {
    pub grid: Grid,
    pub integrator: IntegratorConfig,
    pub params: StrandParams,
    pub initial: InitialKind,
    pub seed: u64,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    pub fn validate(&self) -> Result<Validated, String> {
        let grid = Grid::new(self.grid.n_s, self.grid.length).map_err(|e| e.to_string())?;
        let dt = match (self.integrator.dt, self.integrator.cfl) {
            (Some(dt), None) => dt,
            (None, Some(cfl)) => cfl * grid.ds(),
            (Some(_), Some(_)) => return Err("integrator: give either dt or cfl, not both".into()),
            (None, None) => return Err("integrator: one of dt or cfl is required".into()),
        };
        let mut integrator = IntegratorConfig::new(dt, self.integrator.t_end);
        integrator.fd_order = self.integrator.fd_order;
        integrator.renormalize_every = self.integrator.renormalize_every;
        integrator.validate(&grid).map_err(|e| e.to_string())?;
        let params = StrandParams::new(
            self.physics.inertia.build("I")?,
            self.physics.coupling.build("J")?,
            self.physics.e,
            Vec3::from_array(self.physics.chi),
        );
        let initial = match &self.initial {
            InitialSection::Equilibrium => InitialKind::Equilibrium,
            InitialSection::Twist { amplitude, mode } => InitialKind::Twist {
                amplitude: *amplitude,
                mode: *mode,
            },
            InitialSection::Fourier { amplitude } => InitialKind::Fourier {
                amplitude: *amplitude,
            },
        };
        if self.outputs.snapshot_stride == 0 {
            return Err("outputs.snapshot_stride must be >= 1".into());
        }
        for &n_s in &self.resolutions {
            Grid::new(n_s, self.grid.length).map_err(|e| e.to_string())?;
        }
        if self.mode == Mode::Convergence {
            if self.resolutions.len() < 3 {
                return Err("convergence mode needs at least 3 resolutions".into());
            }
            if self.resolutions.windows(2).any(|w| w[1] <= w[0]) {
                return Err("resolutions must be strictly increasing".into());
            }
        }
        Ok(Validated {
            grid,
            integrator,
            params,
            initial,
            seed: self.seed,
        })
    }
}
