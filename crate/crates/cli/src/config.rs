use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use dyadic_sparse::{Generator, Rational};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    FAndG,
    GOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Dyadic,
    Lattice,
}

/// Every tunable, as read from a JSON config file or from flags. Unset fields take per-command defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// Dimension
    #[arg(long = "d", global = true)]
    pub d: Option<usize>,
    /// Tree depth J (cells per side 2^J)
    #[arg(long, global = true)]
    pub depth: Option<u32>,
    /// Kernel decay exponent
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Goodness parameter, or the grandchild depth for cz
    #[arg(long, global = true)]
    pub r: Option<u32>,
    /// Goodness exponent as "a/b" or a decimal [default: alpha/(4 alpha + 4 d)]
    #[arg(long, global = true)]
    pub gamma: Option<String>,
    /// Stopping ratio, also the multiple of the mean used by `cz --lambda auto` [default: 2^(d+2)]
    #[arg(long = "A", global = true)]
    #[serde(rename = "A")]
    pub a: Option<f64>,
    /// Initial sparse cover constant
    #[arg(long = "C", global = true)]
    #[serde(rename = "C")]
    pub c: Option<f64>,
    #[arg(long, global = true)]
    pub j_max: Option<u32>,
    #[arg(long, global = true)]
    pub samples_per_octave: Option<usize>,
    /// Time generations above the root included in square functions
    #[arg(long, global = true)]
    pub k_top: Option<u32>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads [default: all cores]
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Number of seeded random pairs (domination)
    #[arg(long, global = true)]
    pub seeds: Option<usize>,
    /// Monte Carlo samples (goodness)
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// CZ height: a number or "auto"
    #[arg(long, global = true)]
    pub lambda: Option<String>,
    #[arg(long, value_enum, global = true)]
    pub mode: Option<Mode>,
    /// Double A locally instead of failing when a stopping child is too heavy
    #[arg(long, global = true)]
    pub adapt: Option<bool>,
    /// Exponent p of the weighted norms
    #[arg(long, global = true)]
    pub p: Option<f64>,
    /// Decay exponents for offdiag, power-weight exponents for weights
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, global = true)]
    pub betas: Option<Vec<f64>>,
    #[arg(long, value_enum, global = true)]
    pub family: Option<Family>,
    /// Admissible pairs (offdiag)
    #[arg(long, global = true)]
    pub pairs: Option<usize>,
    /// Grid function for f (binary, or JSON when the name ends in .json)
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Grid function for g
    #[arg(long, global = true)]
    pub g_input: Option<PathBuf>,
    /// Generator for f as JSON, e.g. '{"kind":"constant","value":1.0}'
    #[arg(long, value_parser = parse_generator, global = true)]
    pub generator: Option<Generator>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
}

fn parse_generator(s: &str) -> Result<Generator, String> {
    serde_json::from_str(s).map_err(|e| e.to_string())
}

macro_rules! overlay {
    ($dst:ident, $src:ident, $($f:ident),*) => {
        $(if $src.$f.is_some() { $dst.$f = $src.$f.clone(); })*
    };
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// Fields set in `flags` win.
    pub fn merged(mut self, flags: &Settings) -> Self {
        overlay!(
            self,
            flags,
            d,
            depth,
            alpha,
            r,
            gamma,
            a,
            c,
            j_max,
            samples_per_octave,
            k_top,
            seed,
            threads,
            seeds,
            samples,
            lambda,
            mode,
            adapt,
            p,
            betas,
            family,
            pairs,
            input,
            g_input,
            generator,
            format
        );
        self
    }
}

pub fn parse_gamma(s: &str) -> Result<Rational, String> {
    if s.contains('/') {
        return s
            .trim()
            .parse::<Rational>()
            .map_err(|e| format!("gamma {s:?}: {e}"));
    }
    let v: f64 = s.trim().parse().map_err(|e| format!("gamma {s:?}: {e}"))?;
    Rational::approximate_float(v).ok_or_else(|| format!("gamma {s:?} not representable"))
}
