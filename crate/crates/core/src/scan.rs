//! Scan engine: modulation specifications, parameter grids, key-rate
//! sweeps, tolerable excess noise and modulation-variance optimisation.
//!
//! One analysis is shared by every channel point of a sweep; grids are
//! evaluated in parallel and returned in grid order.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bound::{
    analyze, gaussian_analysis, ChannelStats, CovarianceBound, ModulationAnalysis, ZInterval,
};
use crate::channel::{km_from_transmittance, transmittance_from_km, Channel};
use crate::constellation::{psk, qam_binomial, qam_discrete_gaussian, Constellation};
use crate::error::{Error, Result};
use crate::keyrate::{key_rate, key_rate_from_stats, KeyRateConfig, KeyRateResult};
use crate::mixed::{analyze_mixed, MixedAnalysis, MixedConstellation};

/// Default bracket for modulation-variance searches.
pub const VA_BRACKET: (f64, f64) = (0.05, 20.0);
/// Absolute tolerance of the modulation-variance search.
pub const VA_TOL: f64 = 1e-3;
/// Bracket and iteration count of the ξ_max bisection.
pub const XI_BRACKET: (f64, f64) = (0.0, 0.5);
pub const XI_ITERATIONS: usize = 60;
/// Points of the coarse grid used when golden-section search is unreliable.
const FALLBACK_POINTS: usize = 41;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ModulationSpec {
    Psk { m: usize, alpha: f64 },
    QamBinomial { m: usize, va: f64 },
    QamDiscreteGaussian { m: usize, va: f64, nu: f64 },
    Gaussian { va: f64 },
    File(PathBuf),
    Mixed(PathBuf),
}

fn spec_err(msg: impl Into<String>) -> Error {
    Error::Parse {
        what: "modulation".into(),
        msg: msg.into(),
    }
}

impl FromStr for ModulationSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = s
            .split_once(':')
            .ok_or_else(|| spec_err(format!("{s:?} has no ':' separating kind and parameters")))?;
        let nums = |n: usize| -> Result<Vec<f64>> {
            let parts: Vec<&str> = args.split(',').map(str::trim).collect();
            if parts.len() != n {
                return Err(spec_err(format!(
                    "{kind} takes {n} parameter(s), got {:?}",
                    args
                )));
            }
            parts
                .iter()
                .map(|p| {
                    p.parse::<f64>()
                        .map_err(|_| spec_err(format!("{p:?} is not a number")))
                })
                .collect()
        };
        let size = |x: f64| -> Result<usize> {
            if x.fract() != 0.0 || x < 1.0 {
                return Err(spec_err(format!("{x} is not a positive integer")));
            }
            Ok(x as usize)
        };
        match kind.trim().to_ascii_lowercase().as_str() {
            "psk" => {
                let v = nums(2)?;
                Ok(Self::Psk {
                    m: size(v[0])?,
                    alpha: v[1],
                })
            }
            "qam-bin" => {
                let v = nums(2)?;
                Ok(Self::QamBinomial {
                    m: size(v[0])?,
                    va: v[1],
                })
            }
            "qam-dg" => {
                let v = nums(3)?;
                Ok(Self::QamDiscreteGaussian {
                    m: size(v[0])?,
                    va: v[1],
                    nu: v[2],
                })
            }
            "gauss" => Ok(Self::Gaussian { va: nums(1)?[0] }),
            "file" => Ok(Self::File(PathBuf::from(args))),
            "mixed" => Ok(Self::Mixed(PathBuf::from(args))),
            other => Err(spec_err(format!(
                "unknown kind {other:?}; expected psk, qam-bin, qam-dg, gauss, file or mixed"
            ))),
        }
    }
}

impl fmt::Display for ModulationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Psk { m, alpha } => write!(f, "psk:{m},{alpha}"),
            Self::QamBinomial { m, va } => write!(f, "qam-bin:{m},{va}"),
            Self::QamDiscreteGaussian { m, va, nu } => write!(f, "qam-dg:{m},{va},{nu}"),
            Self::Gaussian { va } => write!(f, "gauss:{va}"),
            Self::File(p) => write!(f, "file:{}", p.display()),
            Self::Mixed(p) => write!(f, "mixed:{}", p.display()),
        }
    }
}

impl TryFrom<String> for ModulationSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ModulationSpec> for String {
    fn from(spec: ModulationSpec) -> String {
        spec.to_string()
    }
}

impl ModulationSpec {
    /// The same family at modulation variance `va`.
    pub fn with_va(&self, va: f64) -> Result<Self> {
        Ok(match self {
            Self::Psk { m, .. } => Self::Psk {
                m: *m,
                alpha: (va / 2.0).sqrt(),
            },
            Self::QamBinomial { m, .. } => Self::QamBinomial { m: *m, va },
            Self::QamDiscreteGaussian { m, nu, .. } => {
                Self::QamDiscreteGaussian { m: *m, va, nu: *nu }
            }
            Self::Gaussian { .. } => Self::Gaussian { va },
            Self::File(_) | Self::Mixed(_) => {
                return Err(Error::InvalidArgument(
                    "a constellation loaded from a file has a fixed modulation variance".into(),
                ))
            }
        })
    }

    /// The same PSK at amplitude `alpha`.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        match self {
            Self::Psk { m, .. } => Ok(Self::Psk { m: *m, alpha }),
            _ => Err(Error::InvalidArgument(
                "an amplitude sweep needs a PSK modulation".into(),
            )),
        }
    }

    /// The finite constellation, if this is one.
    pub fn constellation(&self) -> Result<Option<Constellation>> {
        Ok(Some(match self {
            Self::Psk { m, alpha } => psk(*m, *alpha)?,
            Self::QamBinomial { m, va } => qam_binomial(*m, *va)?,
            Self::QamDiscreteGaussian { m, va, nu } => qam_discrete_gaussian(*m, *va, *nu)?,
            Self::File(path) => Constellation::load(path)?,
            Self::Gaussian { .. } | Self::Mixed(_) => return Ok(None),
        }))
    }

    pub fn analyze(&self, dim: Option<usize>) -> Result<Model> {
        match self {
            Self::Gaussian { va } => Ok(Model::Pure(gaussian_analysis(va / 2.0)?)),
            Self::Mixed(path) => {
                let mc = MixedConstellation::load_with_dim(path, dim)?;
                Ok(Model::Mixed(analyze_mixed(&mc)?))
            }
            _ => {
                let c = self.constellation()?.expect("finite constellation");
                Ok(Model::Pure(analyze(&c, dim)?))
            }
        }
    }
}

/// A ready-to-evaluate modulation.
#[derive(Debug, Clone)]
pub enum Model {
    Pure(ModulationAnalysis),
    Mixed(MixedAnalysis),
}

impl Model {
    pub fn va(&self) -> f64 {
        2.0 * self.signal_photon()
    }
}

impl CovarianceBound for Model {
    fn signal_photon(&self) -> f64 {
        match self {
            Model::Pure(a) => a.signal_photon(),
            Model::Mixed(a) => a.signal_photon(),
        }
    }

    fn total_photon(&self) -> f64 {
        match self {
            Model::Pure(a) => a.total_photon(),
            Model::Mixed(a) => a.total_photon(),
        }
    }

    fn w(&self) -> f64 {
        match self {
            Model::Pure(a) => a.w,
            Model::Mixed(a) => a.w,
        }
    }

    fn t1(&self) -> f64 {
        match self {
            Model::Pure(a) => a.t1,
            Model::Mixed(a) => a.t1,
        }
    }

    fn expected_stats(&self, channel: Channel) -> ChannelStats {
        match self {
            Model::Pure(a) => a.expected_stats(channel),
            Model::Mixed(a) => a.expected_stats(channel),
        }
    }

    fn z_interval(&self, stats: &ChannelStats) -> Result<ZInterval> {
        match self {
            Model::Pure(a) => a.z_interval(stats),
            Model::Mixed(a) => a.z_interval(stats),
        }
    }
}

/// Parse a grid: a comma-separated list or an inclusive `start:stop:step`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let grid_err = |msg: String| Error::Parse {
        what: "grid".into(),
        msg,
    };
    let num = |p: &str| {
        p.trim()
            .parse::<f64>()
            .map_err(|_| grid_err(format!("{p:?} is not a number")))
    };
    let values = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(grid_err(format!("{s:?} is not start:stop:step")));
        }
        let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
            return Err(grid_err(format!(
                "{s:?} needs a positive step and stop >= start"
            )));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| start + i as f64 * step).collect()
    } else {
        s.split(',').map(num).collect::<Result<Vec<f64>>>()?
    };
    if values.is_empty() {
        return Err(grid_err("empty grid".into()));
    }
    Ok(values)
}

/// One evaluated grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub d_km: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub xi: f64,
    #[serde(rename = "V_A")]
    pub va: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub chi: f64,
    pub mutual_info: f64,
    #[serde(rename = "Z_low")]
    pub z_low: f64,
    #[serde(rename = "Z_high")]
    pub z_high: f64,
    pub w: f64,
    pub t1: f64,
}

impl ScanRow {
    pub fn new<B: CovarianceBound + ?Sized>(
        model: &B,
        channel: Channel,
        result: &KeyRateResult,
    ) -> Self {
        Self {
            d_km: channel.distance_km(),
            t: channel.transmittance,
            xi: channel.excess_noise,
            va: 2.0 * model.signal_photon(),
            k: result.k,
            chi: result.chi,
            mutual_info: result.mutual_info,
            z_low: result.z_low,
            z_high: result.z_high,
            w: model.w(),
            t1: model.t1(),
        }
    }
}

pub fn evaluate<B: CovarianceBound + ?Sized>(
    model: &B,
    channel: Channel,
    cfg: &KeyRateConfig,
) -> Result<ScanRow> {
    let result = key_rate(model, channel, cfg)?;
    Ok(ScanRow::new(model, channel, &result))
}

/// Evaluate measured statistics; the row's channel columns hold the
/// effective transmittance and excess noise implied by them.
pub fn evaluate_stats<B: CovarianceBound + ?Sized>(
    model: &B,
    stats: &ChannelStats,
    cfg: &KeyRateConfig,
) -> Result<ScanRow> {
    let result = key_rate_from_stats(model, stats, cfg)?;
    let n = model.signal_photon();
    let t_eff = if n > 0.0 {
        (stats.c2 / n).powi(2)
    } else {
        f64::NAN
    };
    let xi_eff = 2.0 * (stats.n_b - stats.c2 * stats.c2 / n) / t_eff;
    Ok(ScanRow {
        d_km: km_from_transmittance(t_eff),
        t: t_eff,
        xi: xi_eff,
        va: 2.0 * n,
        k: result.k,
        chi: result.chi,
        mutual_info: result.mutual_info,
        z_low: result.z_low,
        z_high: result.z_high,
        w: model.w(),
        t1: model.t1(),
    })
}

/// Channel points for a grid of distances (km) or transmittances.
pub fn channels(
    distances_km: Option<&[f64]>,
    transmittances: Option<&[f64]>,
    xi: f64,
) -> Result<Vec<Channel>> {
    match (distances_km, transmittances) {
        (Some(d), None) => d
            .iter()
            .map(|&d| Channel::from_distance_km(d, xi))
            .collect(),
        (None, Some(t)) => t.iter().map(|&t| Channel::new(t, xi)).collect(),
        _ => Err(Error::InvalidArgument(
            "give exactly one of distance and transmittance".into(),
        )),
    }
}

/// Key rate along a list of channels, sharing one analysis.
pub fn scan_channels<B: CovarianceBound + Sync + ?Sized>(
    model: &B,
    channels: &[Channel],
    cfg: &KeyRateConfig,
) -> Result<Vec<ScanRow>> {
    channels
        .par_iter()
        .map(|&ch| evaluate(model, ch, cfg))
        .collect()
}

/// Key rate along a modulation-variance grid at a fixed channel.
pub fn scan_va(
    spec: &ModulationSpec,
    vas: &[f64],
    channel: Channel,
    cfg: &KeyRateConfig,
    dim: Option<usize>,
) -> Result<Vec<ScanRow>> {
    vas.par_iter()
        .map(|&va| evaluate(&spec.with_va(va)?.analyze(dim)?, channel, cfg))
        .collect()
}

/// Key rate along a PSK amplitude grid at a fixed channel.
pub fn scan_alpha(
    spec: &ModulationSpec,
    alphas: &[f64],
    channel: Channel,
    cfg: &KeyRateConfig,
    dim: Option<usize>,
) -> Result<Vec<ScanRow>> {
    alphas
        .par_iter()
        .map(|&a| evaluate(&spec.with_alpha(a)?.analyze(dim)?, channel, cfg))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XiStatus {
    /// A sign change was bracketed and bisected.
    Bracketed,
    /// No key even without excess noise.
    NoKey,
    /// Key is still positive at the top of the bracket.
    BracketExhausted,
}

impl fmt::Display for XiStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            XiStatus::Bracketed => "bracketed",
            XiStatus::NoKey => "no_key",
            XiStatus::BracketExhausted => "bracket_exhausted",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiMaxRow {
    pub d_km: f64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "V_A")]
    pub va: f64,
    pub xi_max: f64,
    pub status: XiStatus,
}

/// Largest ξ with `K > 0`, by bisection over [`XI_BRACKET`]. K is decreasing
/// in ξ, which is checked at the bracket ends.
pub fn xi_max<B: CovarianceBound + ?Sized>(
    model: &B,
    transmittance: f64,
    cfg: &KeyRateConfig,
) -> Result<(f64, XiStatus)> {
    let k =
        |xi: f64| -> Result<f64> { Ok(key_rate(model, Channel::new(transmittance, xi)?, cfg)?.k) };
    let (mut lo, mut hi) = XI_BRACKET;
    let (k_lo, k_hi) = (k(lo)?, k(hi)?);
    if k_hi > k_lo {
        warn!(
            "key rate increases with excess noise at T = {transmittance}; bisection may be invalid"
        );
    }
    if k_lo <= 0.0 {
        return Ok((0.0, XiStatus::NoKey));
    }
    if k_hi > 0.0 {
        return Ok((hi, XiStatus::BracketExhausted));
    }
    for _ in 0..XI_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if k(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, XiStatus::Bracketed))
}

/// Outcome of a one-dimensional maximisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
    /// The coarse-grid fallback was needed.
    pub fallback: bool,
}

fn golden_section<F>(f: &F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x)?;
    Ok([(x, fx), (c, fc), (d, fd)]
        .into_iter()
        .fold(
            (x, fx),
            |best, cand| if cand.1 > best.1 { cand } else { best },
        ))
}

/// Maximise `f` on `[lo, hi]` by golden-section search to absolute
/// tolerance `tol`, assuming unimodality. If a bracket end beats the
/// interior optimum found away from it, a coarse grid is searched instead.
pub fn maximize<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<Maximum>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if !(lo < hi) || !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "invalid search bracket [{lo}, {hi}] with tolerance {tol}"
        )));
    }
    let (x, fx) = golden_section(&f, lo, hi, tol)?;
    let (f_lo, f_hi) = (f(lo)?, f(hi)?);
    let (end, f_end) = if f_hi >= f_lo { (hi, f_hi) } else { (lo, f_lo) };
    if f_end <= fx {
        return Ok(Maximum {
            x,
            value: fx,
            fallback: false,
        });
    }
    if (end - x).abs() <= 2.0 * tol {
        return Ok(Maximum {
            x: end,
            value: f_end,
            fallback: false,
        });
    }

    warn!("objective is not unimodal on [{lo}, {hi}]; falling back to a coarse grid");
    let step = (hi - lo) / (FALLBACK_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..FALLBACK_POINTS).map(|i| lo + i as f64 * step).collect();
    let values = grid
        .par_iter()
        .map(|&x| f(x))
        .collect::<Result<Vec<f64>>>()?;
    let best = (0..grid.len())
        .max_by(|&i, &j| values[i].total_cmp(&values[j]))
        .expect("non-empty grid");
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(grid.len() - 1)];
    let (rx, rf) = golden_section(&f, a, b, tol)?;
    let (x, value) = [(rx, rf), (grid[best], values[best]), (x, fx), (end, f_end)]
        .into_iter()
        .fold(
            (rx, rf),
            |best, cand| if cand.1 > best.1 { cand } else { best },
        );
    Ok(Maximum {
        x,
        value,
        fallback: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VaOptimum {
    /// The coarse-grid fallback was needed.
    pub fallback: bool,
    /// The optimum; `row.va` is the optimal modulation variance.
    #[serde(flatten)]
    pub row: ScanRow,
}

impl VaOptimum {
    pub fn va(&self) -> f64 {
        self.row.va
    }

    pub fn k(&self) -> f64 {
        self.row.k
    }
}

/// Modulation variance maximising K at a fixed channel.
pub fn optimize_va(
    spec: &ModulationSpec,
    channel: Channel,
    cfg: &KeyRateConfig,
    bracket: (f64, f64),
    dim: Option<usize>,
) -> Result<VaOptimum> {
    let k = |va: f64| -> Result<f64> {
        Ok(key_rate(&spec.with_va(va)?.analyze(dim)?, channel, cfg)?.k)
    };
    let best = maximize(k, bracket.0, bracket.1, VA_TOL)?;
    let row = evaluate(&spec.with_va(best.x)?.analyze(dim)?, channel, cfg)?;
    Ok(VaOptimum {
        fallback: best.fallback,
        row,
    })
}

/// ξ_max at fixed modulation, or maximised over the modulation variance
/// when `optimize` carries a bracket.
pub fn xi_max_row(
    spec: &ModulationSpec,
    transmittance: f64,
    cfg: &KeyRateConfig,
    optimize: Option<(f64, f64)>,
    dim: Option<usize>,
) -> Result<XiMaxRow> {
    let row = |va: f64, (xi, status): (f64, XiStatus)| XiMaxRow {
        d_km: km_from_transmittance(transmittance),
        t: transmittance,
        va,
        xi_max: xi,
        status,
    };
    match optimize {
        None => {
            let model = spec.analyze(dim)?;
            let found = xi_max(&model, transmittance, cfg)?;
            Ok(row(model.va(), found))
        }
        Some((lo, hi)) => {
            let f = |va: f64| -> Result<f64> {
                Ok(xi_max(&spec.with_va(va)?.analyze(dim)?, transmittance, cfg)?.0)
            };
            let best = maximize(f, lo, hi, VA_TOL)?;
            let model = spec.with_va(best.x)?.analyze(dim)?;
            let found = xi_max(&model, transmittance, cfg)?;
            Ok(row(best.x, found))
        }
    }
}

/// ξ_max over a transmittance grid.
pub fn scan_xi_max(
    spec: &ModulationSpec,
    transmittances: &[f64],
    cfg: &KeyRateConfig,
    optimize: Option<(f64, f64)>,
    dim: Option<usize>,
) -> Result<Vec<XiMaxRow>> {
    if optimize.is_none() {
        let model = spec.analyze(dim)?;
        let va = model.va();
        return transmittances
            .par_iter()
            .map(|&t| {
                let (xi, status) = xi_max(&model, t, cfg)?;
                Ok(XiMaxRow {
                    d_km: km_from_transmittance(t),
                    t,
                    va,
                    xi_max: xi,
                    status,
                })
            })
            .collect();
    }
    transmittances
        .par_iter()
        .map(|&t| xi_max_row(spec, t, cfg, optimize, dim))
        .collect()
}

/// Distance grid converted to transmittances.
pub fn transmittances_from_km(distances: &[f64]) -> Vec<f64> {
    distances
        .iter()
        .map(|&d| transmittance_from_km(d))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointRow {
    pub re: f64,
    pub im: f64,
    pub prob: f64,
}

/// Constellation points and probabilities for plotting.
pub fn dump(spec: &ModulationSpec, dim: Option<usize>) -> Result<Vec<PointRow>> {
    if let ModulationSpec::Mixed(path) = spec {
        let mc = MixedConstellation::load_with_dim(path, dim)?;
        return Ok(mc
            .centers()
            .iter()
            .zip(mc.probs())
            .map(|(z, &p)| PointRow {
                re: z.re,
                im: z.im,
                prob: p,
            })
            .collect());
    }
    let c = spec.constellation()?.ok_or_else(|| {
        Error::InvalidArgument("a Gaussian modulation has no finite constellation".into())
    })?;
    Ok(c.iter()
        .map(|(z, p)| PointRow {
            re: z.re,
            im: z.im,
            prob: p,
        })
        .collect())
}

/// Fixed-column output record.
pub trait Record: Serialize {
    fn header() -> &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

impl Record for ScanRow {
    fn header() -> &'static [&'static str] {
        &[
            "d_km",
            "T",
            "xi",
            "V_A",
            "K",
            "chi",
            "mutual_info",
            "Z_low",
            "Z_high",
            "w",
            "t1",
        ]
    }

    fn fields(&self) -> Vec<String> {
        [
            self.d_km,
            self.t,
            self.xi,
            self.va,
            self.k,
            self.chi,
            self.mutual_info,
            self.z_low,
            self.z_high,
            self.w,
            self.t1,
        ]
        .into_iter()
        .map(num)
        .collect()
    }
}

impl Record for XiMaxRow {
    fn header() -> &'static [&'static str] {
        &["d_km", "T", "V_A", "xi_max", "status"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            num(self.d_km),
            num(self.t),
            num(self.va),
            num(self.xi_max),
            self.status.to_string(),
        ]
    }
}

impl Record for VaOptimum {
    fn header() -> &'static [&'static str] {
        &[
            "d_km",
            "T",
            "xi",
            "V_A",
            "K",
            "chi",
            "mutual_info",
            "Z_low",
            "Z_high",
            "w",
            "t1",
            "fallback",
        ]
    }

    fn fields(&self) -> Vec<String> {
        let mut out = self.row.fields();
        out.push(self.fallback.to_string());
        out
    }
}

impl Record for PointRow {
    fn header() -> &'static [&'static str] {
        &["re", "im", "prob"]
    }

    fn fields(&self) -> Vec<String> {
        vec![num(self.re), num(self.im), num(self.prob)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Parse {
                what: "format".into(),
                msg: format!("expected csv or json, got {other:?}"),
            }),
        }
    }
}

pub fn write_records<R: Record, W: Write>(
    rows: &[R],
    format: OutputFormat,
    mut out: W,
) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            let io = |e: csv::Error| Error::Parse {
                what: "csv".into(),
                msg: e.to_string(),
            };
            w.write_record(R::header()).map_err(io)?;
            for row in rows {
                w.write_record(row.fields()).map_err(io)?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, rows)?;
            writeln!(out)?;
        }
    }
    Ok(())
}
