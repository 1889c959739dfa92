//! Devetak-Winter key rate `K = β I(X;Y) − χ(Y;E)` from the symmetrised
//! covariance matrix `Γ′ = [[V·I, Z·σz], [Z·σz, W·I]]`.
//!
//! χ is evaluated at both ends of the Z interval and the larger value is
//! kept; nothing assumes the lower end is the worst case.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bound::{ChannelStats, CovarianceBound, ROUNDOFF_REL};
use crate::channel::Channel;
use crate::error::{Error, Result};

/// Round-off allowance on physicality conditions.
pub const PHYSICAL_TOL: f64 = 1e-9;
/// Negative entropy arguments above this are clipped to zero.
pub const ENTROPY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Detection {
    #[default]
    Heterodyne,
    Homodyne,
}

impl fmt::Display for Detection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Detection::Heterodyne => "heterodyne",
            Detection::Homodyne => "homodyne",
        })
    }
}

impl FromStr for Detection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "heterodyne" | "het" => Ok(Detection::Heterodyne),
            "homodyne" | "hom" => Ok(Detection::Homodyne),
            other => Err(Error::Parse {
                what: "detection".into(),
                msg: format!("expected heterodyne or homodyne, got {other:?}"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceParams {
    pub v: f64,
    pub w: f64,
    pub z: f64,
}

impl CovarianceParams {
    pub fn new(v: f64, w: f64, z: f64) -> Result<Self> {
        if !v.is_finite() || !w.is_finite() || !z.is_finite() {
            return Err(Error::NonFinite("covariance matrix entry"));
        }
        if v < 1.0 - PHYSICAL_TOL || w < 1.0 - PHYSICAL_TOL {
            return Err(Error::NonPhysical(format!(
                "diagonal entries V = {v}, W = {w} must be at least 1"
            )));
        }
        Ok(Self { v, w, z })
    }

    pub fn determinant_factor(&self) -> f64 {
        self.v * self.w - self.z * self.z
    }
}

/// `g(x) = (x+1) log₂(x+1) − x log₂ x`, with `g(0) = 0`.
pub fn g_entropy(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::NonFinite("entropy argument"));
    }
    if x < -ENTROPY_TOL {
        return Err(Error::NegativeEntropyArgument(x));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    Ok((x + 1.0) * (x + 1.0).log2() - x * x.log2())
}

/// Symplectic eigenvalues `(ν1, ν2)` of Γ′, `ν1 ≥ ν2`.
pub fn symplectic_eigs(cp: &CovarianceParams) -> Result<(f64, f64)> {
    let CovarianceParams { v, w, z } = *cp;
    let z2 = z * z;
    let det = v * w - z2;
    if det < 1.0 - PHYSICAL_TOL {
        return Err(Error::NonPhysical(format!("VW − Z² = {det} is below 1")));
    }
    let delta = v * v + w * w - 2.0 * z2;
    // Δ² − 4D² factored as (V − W)²((V + W)² − 4Z²) to avoid cancellation.
    let spread = (v + w) * (v + w) - 4.0 * z2;
    if spread < -PHYSICAL_TOL {
        return Err(Error::NonPhysical(format!(
            "(V + W)² − 4Z² = {spread} is negative"
        )));
    }
    let disc = (v - w) * (v - w) * spread.max(0.0);
    let nu1 = ((delta + disc.sqrt()) / 2.0).sqrt();
    let nu2 = det / nu1;
    let scale = v + w;
    let (nu1, nu2) = (snap_unit(nu1, scale), snap_unit(nu2, scale));
    if !(nu2 >= 1.0 - PHYSICAL_TOL) {
        return Err(Error::NonPhysical(format!(
            "symplectic eigenvalue ν2 = {nu2} is below 1"
        )));
    }
    Ok((nu1, nu2))
}

/// A symplectic eigenvalue within round-off of the vacuum value is the
/// vacuum value.
fn snap_unit(nu: f64, scale: f64) -> f64 {
    if (nu - 1.0).abs() <= ROUNDOFF_REL * scale {
        1.0
    } else {
        nu
    }
}

/// Symplectic eigenvalue of Eve's conditional state given Bob's outcome.
pub fn nu3(cp: &CovarianceParams, detection: Detection) -> Result<f64> {
    let CovarianceParams { v, w, z } = *cp;
    let scale = v + w;
    match detection {
        Detection::Heterodyne => Ok(snap_unit(v - z * z / (w + 1.0), scale)),
        Detection::Homodyne => {
            let radicand = v * (v - z * z / w);
            if radicand < 0.0 {
                return Err(Error::NonPhysical(format!(
                    "homodyne ν3 radicand {radicand} is negative"
                )));
            }
            Ok(snap_unit(radicand.sqrt(), scale))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolevoTerms {
    pub nu1: f64,
    pub nu2: f64,
    pub nu3: f64,
    /// χ(Y;E) in bits.
    pub chi: f64,
}

pub fn holevo_terms(cp: &CovarianceParams, detection: Detection) -> Result<HolevoTerms> {
    let (nu1, nu2) = symplectic_eigs(cp)?;
    let nu3 = nu3(cp, detection)?;
    let chi = g_entropy((nu1 - 1.0) / 2.0)? + g_entropy((nu2 - 1.0) / 2.0)?
        - g_entropy((nu3 - 1.0) / 2.0)?;
    Ok(HolevoTerms { nu1, nu2, nu3, chi })
}

/// `χ(Y;E) = g((ν1−1)/2) + g((ν2−1)/2) − g((ν3−1)/2)`.
pub fn holevo(cp: &CovarianceParams, detection: Detection) -> Result<f64> {
    Ok(holevo_terms(cp, detection)?.chi)
}

/// `log₂(1 + T V_A / (2 + Tξ))`, both quadratures of heterodyne detection.
pub fn mutual_info_gaussian(va: f64, transmittance: f64, excess_noise: f64) -> f64 {
    (1.0 + transmittance * va / (2.0 + transmittance * excess_noise)).log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRateConfig {
    /// Reconciliation efficiency in (0, 1].
    pub beta: f64,
    pub detection: Detection,
    /// Overrides the Gaussian formula; required for homodyne detection.
    pub mutual_info: Option<f64>,
}

impl KeyRateConfig {
    pub fn heterodyne(beta: f64) -> Self {
        Self {
            beta,
            detection: Detection::Heterodyne,
            mutual_info: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "reconciliation efficiency must lie in (0, 1], got {}",
                self.beta
            )));
        }
        if let Some(mi) = self.mutual_info {
            if !(mi >= 0.0) || !mi.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "mutual information must be non-negative, got {mi}"
                )));
            }
        }
        Ok(())
    }
}

impl Default for KeyRateConfig {
    fn default() -> Self {
        Self::heterodyne(0.95)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRateResult {
    pub v: f64,
    pub w: f64,
    pub z_low: f64,
    pub z_high: f64,
    /// The endpoint that maximises χ.
    pub z_used: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub nu3: f64,
    pub chi: f64,
    pub mutual_info: f64,
    pub beta: f64,
    /// `β I − χ`, unclamped.
    pub k: f64,
    pub detection: Detection,
}

/// Key rate for a modelled Gaussian channel.
pub fn key_rate<B: CovarianceBound + ?Sized>(
    an: &B,
    channel: Channel,
    cfg: &KeyRateConfig,
) -> Result<KeyRateResult> {
    key_rate_from_stats(an, &an.expected_stats(channel), cfg)
}

/// Key rate from (measured or expected) channel statistics.
///
/// The Gaussian mutual information is evaluated with the effective
/// `T = c2²/⟨n⟩²` and `ξ = 2(n_B − c2²/⟨n⟩)/T` implied by the statistics.
pub fn key_rate_from_stats<B: CovarianceBound + ?Sized>(
    an: &B,
    stats: &ChannelStats,
    cfg: &KeyRateConfig,
) -> Result<KeyRateResult> {
    cfg.validate()?;
    let interval = an.z_interval(stats)?;
    let v = 1.0 + 2.0 * an.total_photon();
    let w = 1.0 + 2.0 * stats.n_b;

    let low = CovarianceParams::new(v, w, interval.low)?;
    let mut best = (holevo_terms(&low, cfg.detection)?, interval.low);
    if interval.high != interval.low {
        let high = CovarianceParams::new(v, w, interval.high)?;
        // An upper endpoint outside the physical region cannot be attained
        // by any state and is skipped.
        match holevo_terms(&high, cfg.detection) {
            Ok(terms) if terms.chi > best.0.chi => best = (terms, interval.high),
            Ok(_) | Err(Error::NonPhysical(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let (terms, z_used) = best;

    let mutual_info = match (cfg.mutual_info, cfg.detection) {
        (Some(mi), _) => mi,
        (None, Detection::Homodyne) => return Err(Error::MissingMutualInfo),
        (None, Detection::Heterodyne) => mutual_info_from_stats(an.signal_photon(), stats),
    };

    Ok(KeyRateResult {
        v,
        w,
        z_low: interval.low,
        z_high: interval.high,
        z_used,
        nu1: terms.nu1,
        nu2: terms.nu2,
        nu3: terms.nu3,
        chi: terms.chi,
        mutual_info,
        beta: cfg.beta,
        k: cfg.beta * mutual_info - terms.chi,
        detection: cfg.detection,
    })
}

fn mutual_info_from_stats(mean_photon: f64, stats: &ChannelStats) -> f64 {
    if mean_photon <= 0.0 || stats.c2 == 0.0 {
        return 0.0;
    }
    let t_eff = (stats.c2 / mean_photon).powi(2);
    let xi_eff = 2.0 * (stats.n_b - stats.c2 * stats.c2 / mean_photon) / t_eff;
    mutual_info_gaussian(2.0 * mean_photon, t_eff, xi_eff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bound::{analyze, gaussian_analysis};
    use crate::constellation::{psk, qam_binomial};

    fn ch(t: f64, xi: f64) -> Channel {
        Channel::new(t, xi).unwrap()
    }

    #[test]
    fn entropy_function() {
        assert_eq!(g_entropy(0.0).unwrap(), 0.0);
        assert!((g_entropy(1.0).unwrap() - 2.0).abs() < 1e-15);
        let expect = 1.5 * 1.5f64.log2() + 0.5;
        assert!((g_entropy(0.5).unwrap() - expect).abs() < 1e-15);
        assert!((g_entropy(0.5).unwrap() - 1.377443751081734).abs() < 1e-12);
        assert_eq!(g_entropy(-1e-13).unwrap(), 0.0);
        assert!(g_entropy(-1e-6).is_err());
    }

    #[test]
    fn symplectic_simple_cases() {
        let (a, b) = symplectic_eigs(&CovarianceParams::new(1.0, 1.0, 0.0).unwrap()).unwrap();
        assert_eq!((a, b), (1.0, 1.0));
        let (a, b) = symplectic_eigs(&CovarianceParams::new(2.0, 5.0, 0.0).unwrap()).unwrap();
        assert!((a - 5.0).abs() < 1e-14 && (b - 2.0).abs() < 1e-14);
        for va in [1.0, 5.0, 10.0] {
            let v = va + 1.0;
            let cp = CovarianceParams::new(v, v, (v * v - 1.0f64).sqrt()).unwrap();
            let (a, b) = symplectic_eigs(&cp).unwrap();
            assert!((a - 1.0).abs() < 1e-9 && (b - 1.0).abs() < 1e-9);
            assert!((nu3(&cp, Detection::Heterodyne).unwrap() - 1.0).abs() < 1e-9);
            assert!((nu3(&cp, Detection::Homodyne).unwrap() - 1.0).abs() < 1e-9);
            assert!(holevo(&cp, Detection::Heterodyne).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn nu3_without_correlations() {
        let cp = CovarianceParams::new(3.0, 2.0, 0.0).unwrap();
        assert_eq!(nu3(&cp, Detection::Heterodyne).unwrap(), 3.0);
        assert_eq!(nu3(&cp, Detection::Homodyne).unwrap(), 3.0);
    }

    #[test]
    fn non_physical_matrices_are_rejected() {
        assert!(CovarianceParams::new(0.5, 1.0, 0.0).is_err());
        let cp = CovarianceParams::new(2.0, 2.0, 2.0).unwrap();
        assert!(matches!(symplectic_eigs(&cp), Err(Error::NonPhysical(_))));
    }

    #[test]
    fn holevo_matches_independent_value() {
        // V = 6, W and Z from a Gaussian modulation at T = 0.5, ξ = 0.02.
        let z = 4.183300132670377739890860128925937446964;
        let cp = CovarianceParams::new(6.0, 3.51, z).unwrap();
        let terms = holevo_terms(&cp, Detection::Heterodyne).unwrap();
        assert!((terms.nu1 - 3.5055364407591398).abs() < 1e-9);
        assert!((terms.nu2 - 1.0155364407591398).abs() < 1e-9);
        assert!((terms.chi - 0.82890258301964012).abs() < 1e-9);
    }

    #[test]
    fn mutual_info_values() {
        assert_eq!(mutual_info_gaussian(0.0, 0.5, 0.01), 0.0);
        assert!((mutual_info_gaussian(2.0, 1.0, 0.0) - 1.0).abs() < 1e-15);
        let expect = (1.0 + 2.5 / 2.01f64).log2();
        assert!((mutual_info_gaussian(5.0, 0.5, 0.02) - expect).abs() < 1e-15);
    }

    #[test]
    fn gaussian_noiseless_rate() {
        let an = gaussian_analysis(2.5).unwrap();
        let r = key_rate(&an, ch(1.0, 0.0), &KeyRateConfig::heterodyne(1.0)).unwrap();
        assert!(r.chi.abs() < 1e-9);
        assert!((r.k - 3.5f64.log2()).abs() < 1e-9);
    }

    #[test]
    fn gaussian_rate_reference_value() {
        let an = gaussian_analysis(2.5).unwrap();
        let r = key_rate(&an, ch(0.1, 0.02), &KeyRateConfig::heterodyne(0.95)).unwrap();
        assert!((r.chi - 0.27315281080188933).abs() < 1e-9);
        assert!((r.mutual_info - 0.32163981532982627).abs() < 1e-12);
        assert!((r.k - 0.0324050137614456).abs() < 1e-9);
        assert_eq!(r.k, r.beta * r.mutual_info - r.chi);
    }

    #[test]
    fn negative_rates_are_not_clamped() {
        let an = analyze(&qam_binomial(2, 5.0).unwrap(), None).unwrap();
        let r = key_rate(&an, ch(0.1, 0.02), &KeyRateConfig::default()).unwrap();
        assert!(r.k < 0.0);
    }

    #[test]
    fn stats_path_is_equivalent() {
        let an = analyze(&psk(4, 0.35).unwrap(), None).unwrap();
        let cfg = KeyRateConfig::default();
        let channel = ch(0.3, 0.01);
        let a = key_rate(&an, channel, &cfg).unwrap();
        let b = key_rate_from_stats(&an, &an.expected_stats(channel), &cfg).unwrap();
        assert!((a.k - b.k).abs() < 1e-10);
    }

    #[test]
    fn zero_excess_gives_single_evaluation() {
        let an = analyze(&psk(4, 0.35).unwrap(), None).unwrap();
        let r = key_rate(&an, ch(0.3, 0.0), &KeyRateConfig::default()).unwrap();
        assert_eq!(r.z_low, r.z_high);
        assert_eq!(r.z_used, r.z_low);
    }

    #[test]
    fn lower_c1_lowers_rate() {
        let an = analyze(&psk(4, 0.35).unwrap(), None).unwrap();
        let cfg = KeyRateConfig::default();
        let stats = an.expected_stats(ch(0.5, 0.01));
        let base = key_rate_from_stats(&an, &stats, &cfg).unwrap();
        let worse = ChannelStats {
            c1: 0.99 * stats.c1,
            ..stats
        };
        assert!(key_rate_from_stats(&an, &worse, &cfg).unwrap().k < base.k);
    }

    #[test]
    fn homodyne_requires_mutual_info() {
        let an = gaussian_analysis(2.5).unwrap();
        let mut cfg = KeyRateConfig {
            beta: 0.95,
            detection: Detection::Homodyne,
            mutual_info: None,
        };
        assert!(matches!(
            key_rate(&an, ch(0.5, 0.01), &cfg),
            Err(Error::MissingMutualInfo)
        ));
        cfg.mutual_info = Some(1.0);
        let r = key_rate(&an, ch(0.5, 0.01), &cfg).unwrap();
        assert_eq!(r.mutual_info, 1.0);
    }

    #[test]
    fn invalid_beta_is_rejected() {
        let an = gaussian_analysis(2.5).unwrap();
        for beta in [0.0, 1.5, f64::NAN] {
            assert!(key_rate(&an, ch(0.5, 0.01), &KeyRateConfig::heterodyne(beta)).is_err());
        }
    }

    #[test]
    fn detection_parsing() {
        assert_eq!(
            "Heterodyne".parse::<Detection>().unwrap(),
            Detection::Heterodyne
        );
        assert_eq!(
            "homodyne".parse::<Detection>().unwrap(),
            Detection::Homodyne
        );
        assert!("balanced".parse::<Detection>().is_err());
        assert_eq!(Detection::Homodyne.to_string(), "homodyne");
    }
}
