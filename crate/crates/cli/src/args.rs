use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use liapform::Method;
use serde::{Deserialize, Serialize};

use crate::report::Format;

#[derive(Debug, Parser)]
#[command(name = "liapform", version, about = "Liapunov certificates for partially damped coupled systems")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON run configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for scan and weak rows.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true)]
    pub tol_symmetry: Option<f64>,
    #[arg(long, global = true)]
    pub tol_definiteness: Option<f64>,
    #[arg(long, global = true)]
    pub tol_root_residual: Option<f64>,
    #[arg(long, global = true)]
    pub tol_jacobi: Option<f64>,
    #[arg(long, global = true)]
    pub tol_rk4_stability: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Roots of the scalar characteristic polynomial.
    Roots(RootsArgs),
    /// Spectral decrement and certified rate over a (lambda, c) grid.
    Scan(ScanArgs),
    /// Certify one system.
    Certify(CertifyArgs),
    /// Simulate one system and record its energy functionals.
    Simulate(SimulateArgs),
    /// Certify and simulate one of the PDE examples.
    Pde(PdeArgs),
    /// Polynomial decay constants of Dirichlet truncations.
    Weak(WeakArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Roots(_) => "roots",
            Command::Scan(_) => "scan",
            Command::Certify(_) => "certify",
            Command::Simulate(_) => "simulate",
            Command::Pde(_) => "pde",
            Command::Weak(_) => "weak",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Example {
    Scalar,
    Complex,
    Wave,
    Plate,
    String,
    WavePotential,
    PlateMultiplication,
    Weak,
}

impl Example {
    pub fn as_str(self) -> &'static str {
        match self {
            Example::Scalar => "scalar",
            Example::Complex => "complex",
            Example::Wave => "wave",
            Example::Plate => "plate",
            Example::String => "string",
            Example::WavePotential => "wave-potential",
            Example::PlateMultiplication => "plate-multiplication",
            Example::Weak => "weak",
        }
    }
}

/// Coefficient functions on `[0, L]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    Zero,
    Sin,
    Cos,
    /// `x (L − x)`.
    Bump,
    /// `1 + x`.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Strong,
    Weak,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CLaw {
    /// `c = f λ` with `f` on the c grid.
    Fraction,
    /// `c = λ^e` with `e` on the c grid.
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    ExpmStep,
    Rk4,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::ExpmStep => Method::ExpmStep,
            MethodArg::Rk4 => Method::Rk4,
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RootsArgs {
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanArgs {
    #[arg(long)]
    pub lambda_min: Option<f64>,
    #[arg(long)]
    pub lambda_max: Option<f64>,
    /// Log-spaced lambda values.
    #[arg(long)]
    pub lambda_count: Option<usize>,
    #[arg(long)]
    pub c_min: Option<f64>,
    #[arg(long)]
    pub c_max: Option<f64>,
    #[arg(long)]
    pub c_count: Option<usize>,
    #[arg(long, value_enum)]
    pub c_law: Option<CLaw>,
}

/// Declares a flat argument struct carrying the system description plus
/// command-specific fields.
macro_rules! system_args {
    ($(#[$meta:meta])* pub struct $name:ident { $($extra:tt)* }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct $name {
            #[arg(long, value_enum)]
            pub example: Option<Example>,
            #[arg(long)]
            pub modes: Option<usize>,
            /// Domain length.
            #[arg(long = "L", alias = "length")]
            #[serde(rename = "L")]
            pub length: Option<f64>,
            #[arg(long)]
            pub gamma: Option<f64>,
            #[arg(long)]
            pub lambda: Option<f64>,
            #[arg(long)]
            pub c: Option<f64>,
            #[arg(long)]
            pub d: Option<f64>,
            /// Smallest eigenvalue of A (weak systems).
            #[arg(long)]
            pub lambda1: Option<f64>,
            #[arg(long, value_enum)]
            pub potential_a: Option<Profile>,
            #[arg(long, value_enum)]
            pub potential_b: Option<Profile>,
            #[arg(long, value_enum)]
            pub multiplier: Option<Profile>,
            #[arg(long)]
            pub p: Option<f64>,
            /// Fixed perturbation size; chosen automatically when absent.
            #[arg(long)]
            pub epsilon: Option<f64>,
            $($extra)*
        }

        impl $name {
            pub fn system(&self) -> crate::systems::SystemSpec {
                crate::systems::SystemSpec {
                    example: self.example,
                    modes: self.modes,
                    length: self.length,
                    gamma: self.gamma,
                    lambda: self.lambda,
                    c: self.c,
                    d: self.d,
                    lambda1: self.lambda1,
                    potential_a: self.potential_a,
                    potential_b: self.potential_b,
                    multiplier: self.multiplier,
                    p: self.p,
                    epsilon: self.epsilon,
                }
            }
        }
    };
}

system_args! {
    pub struct CertifyArgs {
        #[arg(long, value_enum)]
        pub variant: Option<Variant>,
    }
}

system_args! {
    pub struct SimulateArgs {
        #[arg(long = "T", alias = "horizon")]
        #[serde(rename = "T")]
        pub horizon: Option<f64>,
        #[arg(long)]
        pub dt: Option<f64>,
        #[arg(long, value_enum)]
        pub method: Option<MethodArg>,
        /// Seed of the random initial state.
        #[arg(long)]
        pub seed: Option<u64>,
        /// Explicit initial state, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        pub u0: Option<Vec<f64>>,
    }
}

system_args! {
    pub struct PdeArgs {
        #[arg(long = "T", alias = "horizon")]
        #[serde(rename = "T")]
        pub horizon: Option<f64>,
        #[arg(long)]
        pub dt: Option<f64>,
        #[arg(long)]
        pub seed: Option<u64>,
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeakArgs {
    /// Mode counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub modes: Option<Vec<usize>>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long = "T", alias = "horizon")]
    #[serde(rename = "T")]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long = "L", alias = "length")]
    #[serde(rename = "L")]
    pub length: Option<f64>,
    /// Sets `L = π / √λ₁`.
    #[arg(long)]
    pub lambda1: Option<f64>,
}
