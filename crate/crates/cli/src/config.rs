//! Run settings: command-line flags merged over an optional JSON file.
//!
//! The file uses the long flag names with underscores as keys, e.g.
//! `{"modulation": "qam-bin:8,5", "distance_km": "0:100:5", "xi": 0.02}`.
//! Grids may be given as a number, an array, or a grid string.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Deserialize;

use cvqkd_core::keyrate::{Detection, KeyRateConfig};
use cvqkd_core::scan::{parse_grid, ModulationSpec, OutputFormat, VA_BRACKET};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum GridValue {
    Number(f64),
    List(Vec<f64>),
    Text(String),
}

impl GridValue {
    pub fn values(&self) -> Result<Vec<f64>> {
        match self {
            GridValue::Number(x) => Ok(vec![*x]),
            GridValue::List(v) if v.is_empty() => bail!("empty grid"),
            GridValue::List(v) => Ok(v.clone()),
            GridValue::Text(s) => Ok(parse_grid(s)?),
        }
    }
}

/// Every setting any subcommand understands.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub modulation: Option<String>,
    pub dim: Option<usize>,
    pub distance_km: Option<GridValue>,
    pub transmittance: Option<GridValue>,
    pub xi: Option<f64>,
    pub beta: Option<f64>,
    pub detection: Option<Detection>,
    pub mutual_info: Option<f64>,
    pub va: Option<GridValue>,
    pub alpha: Option<GridValue>,
    pub va_lo: Option<f64>,
    pub va_hi: Option<f64>,
    pub optimize_va: Option<bool>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub worst_case: Option<bool>,
    pub kappa: Option<f64>,
    pub eps_pe: Option<f64>,
    pub batch_out: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

macro_rules! overlay {
    ($top:expr, $base:expr, $($f:ident),*) => {
        Settings { $($f: $top.$f.or($base.$f),)* }
    };
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        serde_json::from_str(&text)
            .with_context(|| format!("parsing config file {}", path.display()))
    }

    /// Fields set in `self` win over those in `base`.
    pub fn over(self, base: Settings) -> Settings {
        overlay!(
            self,
            base,
            modulation,
            dim,
            distance_km,
            transmittance,
            xi,
            beta,
            detection,
            mutual_info,
            va,
            alpha,
            va_lo,
            va_hi,
            optimize_va,
            seed,
            samples,
            worst_case,
            kappa,
            eps_pe,
            batch_out,
            out,
            format
        )
    }

    pub fn modulation(&self) -> Result<ModulationSpec> {
        let s = self
            .modulation
            .as_deref()
            .context("no modulation given; pass --modulation, e.g. --modulation qam-bin:8,5")?;
        Ok(s.parse()?)
    }

    pub fn xi(&self) -> Result<f64> {
        self.xi.context("no excess noise given; pass --xi")
    }

    pub fn key_rate_config(&self) -> Result<KeyRateConfig> {
        let cfg = KeyRateConfig {
            beta: self.beta.unwrap_or(0.95),
            detection: self.detection.unwrap_or_default(),
            mutual_info: self.mutual_info,
        };
        if cfg.detection == Detection::Homodyne && cfg.mutual_info.is_none() {
            bail!("homodyne detection needs the mutual information; pass --mutual-info");
        }
        Ok(cfg)
    }

    /// Transmittances from whichever of distance and transmittance is set.
    pub fn transmittances(&self) -> Result<Vec<f64>> {
        match (&self.distance_km, &self.transmittance) {
            (Some(d), None) => Ok(d
                .values()?
                .into_iter()
                .map(cvqkd_core::channel::transmittance_from_km)
                .collect()),
            (None, Some(t)) => t.values(),
            (Some(_), Some(_)) => bail!("give either --distance-km or --transmittance, not both"),
            (None, None) => bail!("no channel given; pass --distance-km or --transmittance"),
        }
    }

    pub fn single_transmittance(&self) -> Result<f64> {
        match self.transmittances()?.as_slice() {
            [t] => Ok(*t),
            _ => bail!("this command takes a single distance or transmittance, not a grid"),
        }
    }

    pub fn va_bracket(&self) -> Result<(f64, f64)> {
        let lo = self.va_lo.unwrap_or(VA_BRACKET.0);
        let hi = self.va_hi.unwrap_or(VA_BRACKET.1);
        if !(lo > 0.0 && hi > lo) {
            bail!("modulation-variance bracket [{lo}, {hi}] must satisfy 0 < lo < hi");
        }
        Ok((lo, hi))
    }

    pub fn format(&self) -> OutputFormat {
        self.format.unwrap_or_default()
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON file with default settings; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// psk:M,alpha | qam-bin:m,Va | qam-dg:m,Va,nu | gauss:Va | file:PATH | mixed:PATH
    #[arg(long, short)]
    pub modulation: Option<String>,
    /// Fock-space truncation override
    #[arg(long)]
    pub dim: Option<usize>,
    /// Output file (default: stdout)
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[arg(long, value_parser = ["csv", "json"])]
    pub format: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ChannelArgs {
    /// Distance in km: a value, a list a,b,c or a range start:stop:step
    #[arg(long, short = 'd')]
    pub distance_km: Option<String>,
    /// Transmittance: a value, a list or a range
    #[arg(long, short = 't')]
    pub transmittance: Option<String>,
    /// Excess noise ξ in shot-noise units
    #[arg(long)]
    pub xi: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct RateArgs {
    /// Reconciliation efficiency [default: 0.95]
    #[arg(long)]
    pub beta: Option<f64>,
    /// heterodyne | homodyne [default: heterodyne]
    #[arg(long)]
    pub detection: Option<Detection>,
    /// Mutual information I(X;Y) in bits, replacing the Gaussian formula
    #[arg(long)]
    pub mutual_info: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct BracketArgs {
    /// Lower end of the modulation-variance search [default: 0.05]
    #[arg(long)]
    pub va_lo: Option<f64>,
    /// Upper end of the modulation-variance search [default: 20]
    #[arg(long)]
    pub va_hi: Option<f64>,
}

impl CommonArgs {
    pub fn settings(&self) -> Result<Settings> {
        let format = self.format.as_deref().map(str::parse).transpose()?;
        Ok(Settings {
            modulation: self.modulation.clone(),
            dim: self.dim,
            out: self.out.clone(),
            format,
            ..Settings::default()
        })
    }

    /// Flags given on the command line, layered over the config file.
    pub fn resolve(&self, flags: Settings) -> Result<Settings> {
        let flags = self.settings()?.over(flags);
        match &self.config {
            Some(path) => Ok(flags.over(Settings::load(path)?)),
            None => Ok(flags),
        }
    }
}

impl ChannelArgs {
    pub fn settings(&self) -> Settings {
        Settings {
            distance_km: self.distance_km.clone().map(GridValue::Text),
            transmittance: self.transmittance.clone().map(GridValue::Text),
            xi: self.xi,
            ..Settings::default()
        }
    }
}

impl RateArgs {
    pub fn settings(&self) -> Settings {
        Settings {
            beta: self.beta,
            detection: self.detection,
            mutual_info: self.mutual_info,
            ..Settings::default()
        }
    }
}

impl BracketArgs {
    pub fn settings(&self) -> Settings {
        Settings {
            va_lo: self.va_lo,
            va_hi: self.va_hi,
            ..Settings::default()
        }
    }
}
