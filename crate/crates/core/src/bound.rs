//! Modulation analysis and the covariance bound on `Z = tr(ρ(ab + a†b†))`.
//!
//! `analyze` builds τ = Σ p_k |α_k⟩⟨α_k| in a truncated Fock space and
//! derives `a_τ = τ^{1/2} a τ^{-1/2}`, the non-Gaussianity `w` and
//! `t1 = tr(τ^{1/2} a τ^{1/2} a†)`. A Gaussian modulation is handled
//! analytically. The bound is valid everywhere but loose for very low loss
//! combined with high excess noise.

use log::warn;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::Channel;
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::fock::{
    annihilation, auto_dim, coherent_tail_mass, coherent_vector, sqrt_and_pinv_sqrt,
    trace_of_product, FockMatrix, RANK_TOL,
};

/// Truncated probability mass above which `analyze` refuses to proceed.
pub const TAIL_MASS_LIMIT: f64 = 1e-8;
/// Largest negative `w` accepted as round-off.
pub const W_NEGATIVE_TOL: f64 = 1e-10;
/// Largest negative `n_B − c2²/⟨n⟩` accepted as round-off.
pub const EXCESS_NEGATIVE_TOL: f64 = 1e-9;
/// Relative size below which a difference of two O(1) quantities is
/// indistinguishable from round-off and taken to be zero.
pub const ROUNDOFF_REL: f64 = 64.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy)]
pub struct AnalysisOptions {
    /// Truncation dimension; `None` selects [`auto_dim`].
    pub dim: Option<usize>,
    pub rank_tol: f64,
    /// Downgrade an excessive tail mass from an error to a warning.
    pub allow_truncation: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            dim: None,
            rank_tol: RANK_TOL,
            allow_truncation: false,
        }
    }
}

impl AnalysisOptions {
    pub fn with_dim(dim: Option<usize>) -> Self {
        Self {
            dim,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct FockOperators {
    pub tau: FockMatrix,
    pub tau_sqrt: FockMatrix,
    pub tau_pinv_sqrt: FockMatrix,
    pub a_tau: FockMatrix,
    /// Projector onto the numerical support of τ.
    pub projector: FockMatrix,
    pub rank: usize,
}

#[derive(Debug, Clone)]
pub struct ModulationAnalysis {
    /// Truncation dimension, 0 for the analytic Gaussian path.
    pub dim: usize,
    /// `None` for the analytic Gaussian path.
    pub operators: Option<FockOperators>,
    /// `⟨α_k| a_τ |α_k⟩` per constellation point; empty for Gaussian.
    pub alpha_tau: Vec<Complex64>,
    pub w: f64,
    pub t1: f64,
    pub mean_photon: f64,
    pub tail_mass: f64,
    pub constellation: Option<Constellation>,
}

impl ModulationAnalysis {
    pub fn is_analytic(&self) -> bool {
        self.operators.is_none()
    }

    /// Modulation variance `V_A = 2⟨n⟩`.
    pub fn va(&self) -> f64 {
        2.0 * self.mean_photon
    }

    pub fn expected_stats(&self, channel: Channel) -> ChannelStats {
        expected_stats(self, channel)
    }

    pub fn z_interval(&self, stats: &ChannelStats) -> Result<ZInterval> {
        z_interval(self, stats)
    }

    pub fn z_star(&self, channel: Channel) -> f64 {
        z_star_gaussian_channel(self, channel)
    }
}

/// The three estimable numbers: `c1 = Re(α_τ|β)`, `c2 = Re(α|β)` and the
/// mean photon number `n_B` at Bob.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub c1: f64,
    pub c2: f64,
    pub n_b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZInterval {
    pub low: f64,
    pub high: f64,
}

impl ZInterval {
    pub fn point(z: f64) -> Self {
        Self { low: z, high: z }
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.low + self.high)
    }

    pub fn width(&self) -> f64 {
        self.high - self.low
    }

    pub fn is_degenerate(&self) -> bool {
        self.low == self.high
    }
}

/// Anything that can turn channel statistics into a Z interval: pure
/// coherent-state modulations and general mixed-state modulations.
pub trait CovarianceBound {
    /// `Σ p_k |α_k|²`, half the modulation variance.
    fn signal_photon(&self) -> f64;
    /// `tr(τ a†a)`; exceeds the signal photon number for mixed states.
    fn total_photon(&self) -> f64;
    fn w(&self) -> f64;
    /// Expected `c1` per unit `√T`.
    fn t1(&self) -> f64;
    fn expected_stats(&self, channel: Channel) -> ChannelStats;
    fn z_interval(&self, stats: &ChannelStats) -> Result<ZInterval>;
}

impl CovarianceBound for ModulationAnalysis {
    fn signal_photon(&self) -> f64 {
        self.mean_photon
    }

    fn total_photon(&self) -> f64 {
        self.mean_photon
    }

    fn w(&self) -> f64 {
        self.w
    }

    fn t1(&self) -> f64 {
        self.t1
    }

    fn expected_stats(&self, channel: Channel) -> ChannelStats {
        expected_stats(self, channel)
    }

    fn z_interval(&self, stats: &ChannelStats) -> Result<ZInterval> {
        z_interval(self, stats)
    }
}

pub fn analyze(c: &Constellation, dim: Option<usize>) -> Result<ModulationAnalysis> {
    analyze_with(c, &AnalysisOptions::with_dim(dim))
}

pub fn analyze_with(c: &Constellation, opts: &AnalysisOptions) -> Result<ModulationAnalysis> {
    let dim = opts.dim.unwrap_or_else(|| auto_dim(c.max_abs_sq()));
    if dim == 0 {
        return Err(Error::InvalidArgument(
            "dimension must be at least 1".into(),
        ));
    }
    let m = c.len();
    let mut vectors = FockMatrix::zeros(dim, m);
    let mut weighted = FockMatrix::zeros(dim, m);
    let mut tail_mass = 0.0;
    for (k, (alpha, p)) in c.iter().enumerate() {
        let v = coherent_vector(alpha, dim)?;
        tail_mass += p * coherent_tail_mass(alpha, dim);
        weighted.set_column(k, &(&v * Complex64::new(p.sqrt(), 0.0)));
        vectors.set_column(k, &v);
    }
    if tail_mass >= TAIL_MASS_LIMIT {
        if !opts.allow_truncation {
            return Err(Error::Truncation { tail_mass, dim });
        }
        warn!("tail mass {tail_mass:e} at dimension {dim} exceeds {TAIL_MASS_LIMIT:e}");
    }

    let tau = &weighted * weighted.adjoint();
    let roots = sqrt_and_pinv_sqrt(&tau, opts.rank_tol)?;
    let a = annihilation(dim);
    let s_a = &roots.sqrt * &a;
    let a_tau = &s_a * &roots.pinv_sqrt;

    let images = &a_tau * &vectors;
    let mut alpha_tau = Vec::with_capacity(m);
    let mut w = 0.0;
    for (k, p) in c.probs().iter().enumerate() {
        let v = vectors.column(k);
        let x = images.column(k);
        let at = v.dotc(&x);
        w += p * (x.norm_squared() - at.norm_sqr());
        alpha_tau.push(at);
    }
    if w < -W_NEGATIVE_TOL {
        return Err(Error::Numerical(format!("w = {w:e} is negative")));
    }
    let w = w.max(0.0);

    let s_adag = &roots.sqrt * a.adjoint();
    let t1c = trace_of_product(&s_a, &s_adag);
    if t1c.im.abs() > 1e-10 * t1c.re.abs().max(1.0) {
        return Err(Error::Numerical(format!(
            "t1 has imaginary part {:e}",
            t1c.im
        )));
    }

    Ok(ModulationAnalysis {
        dim,
        operators: Some(FockOperators {
            tau,
            tau_sqrt: roots.sqrt,
            tau_pinv_sqrt: roots.pinv_sqrt,
            a_tau,
            projector: roots.projector,
            rank: roots.rank,
        }),
        alpha_tau,
        w,
        t1: t1c.re,
        mean_photon: c.moments().mean_photon,
        tail_mass,
        constellation: Some(c.clone()),
    })
}

/// Gaussian modulation with mean photon number `⟨n⟩`: `a_τ` is the rescaled
/// annihilation operator, so `w = 0` and `t1 = √(⟨n⟩² + ⟨n⟩)`.
pub fn gaussian_analysis(mean_photon: f64) -> Result<ModulationAnalysis> {
    if !(mean_photon > 0.0) || !mean_photon.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "mean photon number must be positive, got {mean_photon}"
        )));
    }
    Ok(ModulationAnalysis {
        dim: 0,
        operators: None,
        alpha_tau: Vec::new(),
        w: 0.0,
        t1: (mean_photon * mean_photon + mean_photon).sqrt(),
        mean_photon,
        tail_mass: 0.0,
        constellation: None,
    })
}

/// Expected statistics for a Gaussian channel:
/// `c1 = √T t1`, `c2 = √T ⟨n⟩`, `n_B = T⟨n⟩ + Tξ/2`.
pub fn expected_stats(an: &ModulationAnalysis, channel: Channel) -> ChannelStats {
    let Channel {
        transmittance: t,
        excess_noise: xi,
    } = channel;
    ChannelStats {
        c1: t.sqrt() * an.t1,
        c2: t.sqrt() * an.mean_photon,
        n_b: t * an.mean_photon + t * xi / 2.0,
    }
}

/// `n_B − c2²/norm`, clipped to zero within [`EXCESS_NEGATIVE_TOL`].
pub(crate) fn excess_term(stats: &ChannelStats, norm: f64) -> Result<f64> {
    let explained = if norm > 0.0 {
        stats.c2 * stats.c2 / norm
    } else {
        0.0
    };
    let excess = stats.n_b - explained;
    if !excess.is_finite() {
        return Err(Error::NonFinite("channel statistics"));
    }
    if excess < -EXCESS_NEGATIVE_TOL {
        return Err(Error::InconsistentStats { excess });
    }
    // The interval half-width is √(w·excess); round-off must not leak
    // through the square root.
    if excess <= ROUNDOFF_REL * stats.n_b.max(explained) {
        return Ok(0.0);
    }
    Ok(excess)
}

/// `2c1 ∓ 2√(w (n_B − c2²/⟨n⟩))`.
pub fn z_interval(an: &ModulationAnalysis, stats: &ChannelStats) -> Result<ZInterval> {
    if stats.n_b < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "n_B must be non-negative, got {}",
            stats.n_b
        )));
    }
    let excess = excess_term(stats, an.mean_photon)?;
    let centre = 2.0 * stats.c1;
    let radius = 2.0 * (an.w * excess).sqrt();
    Ok(ZInterval {
        low: centre - radius,
        high: centre + radius,
    })
}

/// `Z* = 2√T t1 − √(2Tξw)`.
pub fn z_star_gaussian_channel(an: &ModulationAnalysis, channel: Channel) -> f64 {
    let t = channel.transmittance;
    2.0 * t.sqrt() * an.t1 - (2.0 * t * channel.excess_noise * an.w).sqrt()
}

/// Closed-form quantities of an M-PSK modulation with amplitude α.
#[derive(Debug, Clone)]
pub struct PskTerms {
    /// `ν_k = (1/M) Σ_j e^{-ijkθ} exp(α² e^{ijθ})`.
    pub nu: Vec<f64>,
    pub t1: f64,
    pub w: f64,
}

pub fn psk_terms(m: usize, alpha: f64) -> Result<PskTerms> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("PSK needs M >= 2, got {m}")));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "PSK amplitude must be positive, got {alpha}"
        )));
    }
    let a2 = alpha * alpha;
    let nu = psk_nu_series(m, a2);
    // Cross-check against the Fourier form, whose absolute round-off is set
    // by the size of its terms, e^{α²}.
    let theta = 2.0 * std::f64::consts::PI / m as f64;
    let scale = a2.exp();
    for (k, &nu_k) in nu.iter().enumerate() {
        let sum: Complex64 = (0..m)
            .map(|j| {
                let phase = Complex64::from_polar(1.0, -(((j * k) % m) as f64) * theta);
                phase * Complex64::from_polar(a2, j as f64 * theta).exp()
            })
            .sum();
        let fourier = sum / m as f64;
        if fourier.im.abs() > 1e-12 * scale {
            return Err(Error::Numerical(format!(
                "ν_{k} has imaginary residue {:e}",
                fourier.im
            )));
        }
        if (fourier.re - nu_k).abs() > 1e-12 * scale {
            return Err(Error::Numerical(format!(
                "ν_{k}: Fourier sum {:e} disagrees with series {:e}",
                fourier.re, nu_k
            )));
        }
    }
    let next = |j: usize| nu[(j + 1) % m];
    let s_half: f64 = (0..m).map(|j| nu[j].powf(1.5) / next(j).sqrt()).sum();
    let s_sq: f64 = (0..m).map(|j| nu[j] * nu[j] / next(j)).sum();
    let e1 = (-a2).exp();
    let t1 = a2 * e1 * s_half;
    let w = a2 * e1 * s_sq - a2 * e1 * e1 * s_half * s_half;
    Ok(PskTerms {
        nu,
        t1,
        w: w.max(0.0),
    })
}

/// `ν_k = Σ_{n ≡ k mod M} α^{2n}/n!`, the same numbers as the Fourier form
/// but with full relative precision when `ν_k` is tiny.
fn psk_nu_series(m: usize, a2: f64) -> Vec<f64> {
    let mut nu = vec![0.0; m];
    let mut term = 1.0;
    let mut n = 0usize;
    loop {
        nu[n % m] += term;
        n += 1;
        term *= a2 / n as f64;
        if (n >= m && n as f64 > a2 && term <= 1e-18 * nu[n % m]) || term == 0.0 {
            break;
        }
    }
    nu
}

/// Closed-form `Z*(T, ξ)` for M-PSK.
pub fn psk_closed_form(m: usize, alpha: f64, channel: Channel) -> Result<f64> {
    let terms = psk_terms(m, alpha)?;
    let radicand = 2.0 * channel.excess_noise * terms.w;
    assert!(radicand >= 0.0, "negative radicand {radicand}");
    Ok(channel.transmittance.sqrt() * (2.0 * terms.t1 - radicand.sqrt()))
}
