use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "qgroup", version, about = "Magnus expansions, finite p-quotients and mod-p Betti numbers")]
pub struct Cli {
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Expand a word in the truncated power-series ring.
    Eval(EvalArgs),
    /// Look for a nonzero Magnus term along a truncation schedule.
    Certify(CertifyArgs),
    /// Approximate the mod-p first Betti number along the quotient chain.
    Beta1(LevelArgs),
    /// Compare augmentation-ideal subspaces at one level.
    Amalgam(AmalgamArgs),
    /// Add a root or a centralizer to a presentation.
    Extend(ExtendArgs),
    /// Order and generators of a finite p-quotient.
    QuotientInfo(QuotientArgs),
    /// Compare b_n + 1 with the ambient rank.
    Probe(LevelArgs),
    /// Randomized check of the rank-function axioms.
    Sylvester(SylvesterArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainArg {
    Q,
    Fp,
    Zpk,
}

#[derive(Debug, Args, Serialize)]
pub struct ScalarArgs {
    /// Word, e.g. "[x1^(1/2), x2]".
    #[arg(long)]
    pub expr: String,
    /// Residue characteristic; 0 selects the rationals.
    #[arg(long, default_value_t = 0)]
    pub p: u64,
    /// Coefficient domain (defaults to q for p = 0, fp otherwise).
    #[arg(long, value_enum)]
    pub domain: Option<DomainArg>,
    /// Precision k for the zpk domain.
    #[arg(long)]
    pub k: Option<u32>,
    /// Number of generators x1..xd (inferred from the word if omitted).
    #[arg(long)]
    pub d: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[command(flatten)]
    pub scalar: ScalarArgs,
    /// Truncation bound: terms of degree >= this are dropped.
    #[arg(long, default_value_t = 4)]
    pub degree: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub scalar: ScalarArgs,
    /// Largest truncation in the doubling schedule.
    #[arg(long, default_value_t = 16)]
    pub max_bound: usize,
    /// Explicit schedule, e.g. "2,4,8" (overrides --max-bound).
    #[arg(long, value_delimiter = ',')]
    pub schedule: Option<Vec<usize>>,
}

#[derive(Debug, Args, Serialize)]
pub struct CapArgs {
    /// Maximum number of enumerated group elements.
    #[arg(long, env = "QGROUP_CAP", default_value_t = 1_000_000)]
    pub cap: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct PresentationArgs {
    /// Presentation file (JSON).
    #[arg(long)]
    pub presentation: PathBuf,
    /// Prime (overrides the file).
    #[arg(long)]
    pub p: Option<u64>,
    /// Quotient by the normal closure of relators that do not vanish.
    #[arg(long)]
    pub factor_relators: bool,
    #[command(flatten)]
    pub cap: CapArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct LevelArgs {
    #[command(flatten)]
    pub pres: PresentationArgs,
    /// Levels n of the quotient chain, strictly increasing.
    #[arg(long, value_delimiter = ',', default_value = "2,3")]
    pub levels: Vec<usize>,
    /// Compute levels in parallel.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct AmalgamArgs {
    #[command(flatten)]
    pub pres: PresentationArgs,
    /// Generators of H (repeatable).
    #[arg(long = "h")]
    pub h: Vec<String>,
    /// Generators of B (repeatable).
    #[arg(long = "b")]
    pub b: Vec<String>,
    /// Generators of A (repeatable).
    #[arg(long = "a")]
    pub a: Vec<String>,
    #[arg(long)]
    pub level: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct ExtendArgs {
    /// Base presentation file; defaults to the free group on --generators.
    #[arg(long, global = true)]
    pub base: Option<PathBuf>,
    /// Generators of the default free base.
    #[arg(long, global = true, value_delimiter = ',', default_value = "a,b")]
    pub generators: Vec<String>,
    /// Prime (overrides the base file).
    #[arg(long, global = true)]
    pub p: Option<u64>,
    #[command(subcommand)]
    pub kind: ExtendKind,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtendKind {
    /// Adjoin t with t^m = w.
    Root {
        #[arg(long)]
        w: String,
        #[arg(long)]
        m: u64,
        #[arg(long, default_value = "t")]
        new_gen: String,
    },
    /// Adjoin commuting t_j centralizing w, mapped to rho(w)^lambda_j.
    Centralizer {
        #[arg(long)]
        w: String,
        /// Exponents such as "Zp(41;4)" (repeatable); suggested if omitted.
        #[arg(long = "lambda")]
        lambdas: Vec<String>,
        #[arg(long = "new-gen", default_value = "t")]
        new_gens: Vec<String>,
        /// Digits of suggested exponents.
        #[arg(long, default_value_t = 20)]
        precision: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Read an extension spec file.
    Spec {
        #[arg(long)]
        spec: PathBuf,
    },
}

#[derive(Debug, Args, Serialize)]
pub struct QuotientArgs {
    #[arg(long)]
    pub p: u64,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub cap: CapArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct SylvesterArgs {
    #[arg(long, default_value_t = 3)]
    pub p: u64,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest matrix side.
    #[arg(long, default_value_t = 3)]
    pub max_dim: usize,
    #[command(flatten)]
    pub cap: CapArgs,
}
