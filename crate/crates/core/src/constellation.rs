//! Modulation alphabets: coherent-state amplitudes with their probabilities.

use std::f64::consts::PI;
use std::path::Path;

use log::warn;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Allowed deviation of `Σ p_k` from one.
pub const PROB_SUM_TOL: f64 = 1e-12;

const WEIGHT_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
    probs: Vec<f64>,
    label: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstellationMoments {
    pub mean: Complex64,
    /// `⟨n⟩ = Σ p_k |α_k|²`
    pub mean_photon: f64,
    /// Modulation variance `V_A = 2⟨n⟩`.
    pub va: f64,
}

#[derive(Serialize, Deserialize)]
struct ConstellationFile {
    points: Vec<[f64; 2]>,
    probs: Vec<f64>,
    #[serde(default)]
    label: String,
}

impl Constellation {
    pub fn new(points: Vec<Complex64>, probs: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidConstellation("no points".into()));
        }
        if points.len() != probs.len() {
            return Err(Error::InvalidConstellation(format!(
                "{} points but {} probabilities",
                points.len(),
                probs.len()
            )));
        }
        if let Some(p) = points
            .iter()
            .find(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::InvalidConstellation(format!("non-finite point {p}")));
        }
        if let Some(p) = probs.iter().find(|&&p| !(p > 0.0) || !p.is_finite()) {
            return Err(Error::InvalidConstellation(format!(
                "probability {p} is not strictly positive"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidConstellation(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(Self {
            points,
            probs,
            label: label.into(),
        })
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Complex64, f64)> + '_ {
        self.points.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn max_abs_sq(&self) -> f64 {
        self.points.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max)
    }

    pub fn moments(&self) -> ConstellationMoments {
        let mean = self.iter().map(|(z, p)| z * p).sum();
        let mean_photon = self.iter().map(|(z, p)| p * z.norm_sqr()).sum::<f64>();
        ConstellationMoments {
            mean,
            mean_photon,
            va: 2.0 * mean_photon,
        }
    }

    /// Mirror image `α_k → ᾱ_k`; its average state is the Fock-basis
    /// conjugate of the original one.
    pub fn conjugated(&self) -> Self {
        Self {
            points: self.points.iter().map(|z| z.conj()).collect(),
            probs: self.probs.clone(),
            label: format!("conj({})", self.label),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: ConstellationFile = serde_json::from_str(s)?;
        let points = raw
            .points
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect();
        Self::new(points, raw.probs, raw.label)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> Result<String> {
        let raw = ConstellationFile {
            points: self.points.iter().map(|z| [z.re, z.im]).collect(),
            probs: self.probs.clone(),
            label: self.label.clone(),
        };
        Ok(serde_json::to_string_pretty(&raw)?)
    }
}

/// `M` equiprobable states `α e^{2πik/M}`.
pub fn psk(m: usize, alpha: f64) -> Result<Constellation> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("PSK needs M >= 2, got {m}")));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "PSK amplitude must be positive, got {alpha}"
        )));
    }
    let points = (0..m)
        .map(|k| Complex64::from_polar(alpha, 2.0 * PI * k as f64 / m as f64))
        .collect();
    Constellation::new(points, vec![1.0 / m as f64; m], format!("{m}-PSK"))
}

fn check_qam_args(m: usize, va: f64) -> Result<()> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("QAM needs m >= 2, got {m}")));
    }
    if !(va > 0.0) || !va.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "modulation variance must be positive, got {va}"
        )));
    }
    Ok(())
}

/// Binomial law `C(n, k) / 2^n` for `k = 0..=n`.
fn binomial_half(n: usize) -> Vec<f64> {
    let mut row = vec![1.0f64];
    for _ in 0..n {
        let mut next = vec![1.0; row.len() + 1];
        for k in 1..row.len() {
            next[k] = row[k - 1] + row[k];
        }
        row = next;
    }
    let scale = 0.5f64.powi(n as i32);
    row.into_iter().map(|c| c * scale).collect()
}

fn product_grid(coords: &[f64], weights: &[f64]) -> (Vec<Complex64>, Vec<f64>) {
    let mut points = Vec::with_capacity(coords.len() * coords.len());
    let mut probs = Vec::with_capacity(coords.len() * coords.len());
    for (&x, &px) in coords.iter().zip(weights) {
        for (&y, &py) in coords.iter().zip(weights) {
            points.push(Complex64::new(x, y));
            probs.push(px * py);
        }
    }
    (points, probs)
}

/// `m × m` square grid with independent binomial weights per quadrature
/// (the normalized random-walk shaping). The per-coordinate variance is
/// `V_A / 4`, so `⟨n⟩ = V_A / 2`.
pub fn qam_binomial(m: usize, va: f64) -> Result<Constellation> {
    check_qam_args(m, va)?;
    let alpha = (va / 2.0).sqrt();
    let step = alpha * 2f64.sqrt() / ((m - 1) as f64).sqrt();
    let centre = (m - 1) as f64 / 2.0;
    let coords: Vec<f64> = (0..m).map(|k| step * (k as f64 - centre)).collect();
    let weights = binomial_half(m - 1);
    let (points, probs) = product_grid(&coords, &weights);
    Constellation::new(points, probs, format!("{}-QAM binomial", m * m))
}

/// Per-quadrature weights `∝ exp(−ν x²)` on the grid `Δ(j − (m−1)/2)`.
fn discrete_gaussian_axis(m: usize, spacing: f64, nu: f64) -> (Vec<f64>, Vec<f64>) {
    let centre = (m - 1) as f64 / 2.0;
    let coords: Vec<f64> = (0..m).map(|j| spacing * (j as f64 - centre)).collect();
    let raw: Vec<f64> = coords.iter().map(|x| (-nu * x * x).exp()).collect();
    let total: f64 = raw.iter().sum();
    let weights = raw.into_iter().map(|w| w / total).collect();
    (coords, weights)
}

fn axis_variance(m: usize, spacing: f64, nu: f64) -> f64 {
    let (coords, weights) = discrete_gaussian_axis(m, spacing, nu);
    coords.iter().zip(&weights).map(|(x, w)| w * x * x).sum()
}

/// Grid spacing whose per-coordinate variance equals `target`.
pub fn discrete_gaussian_spacing(m: usize, target: f64, nu: f64) -> Result<f64> {
    let mut hi = target.sqrt().max(1e-3);
    let mut grown = 0;
    while axis_variance(m, hi, nu) <= target {
        hi *= 2.0;
        grown += 1;
        if grown > 200 || !hi.is_finite() {
            return Err(Error::SpacingUnsolvable(format!(
                "m = {m}, ν = {nu}: grid variance never reaches {target}"
            )));
        }
    }
    let mut lo = 0.0;
    // the variance is 0 at Δ = 0 and above target at hi, so the bracket is valid
    debug_assert!(axis_variance(m, lo, nu) < target);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = axis_variance(m, mid, nu);
        if (v - target).abs() <= 1e-12 * target.max(1.0) {
            return Ok(mid);
        }
        if v < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `m × m` grid with weights `∝ exp(−ν(x² + p²))`, spacing solved so that
/// `⟨n⟩ = V_A / 2`.
pub fn qam_discrete_gaussian(m: usize, va: f64, nu: f64) -> Result<Constellation> {
    check_qam_args(m, va)?;
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "ν must be positive, got {nu}"
        )));
    }
    let target = va / 4.0;
    let spacing = discrete_gaussian_spacing(m, target, nu)?;
    let (coords, weights) = discrete_gaussian_axis(m, spacing, nu);
    let (points, raw) = product_grid(&coords, &weights);

    let mut kept_points = Vec::with_capacity(points.len());
    let mut kept = Vec::with_capacity(raw.len());
    for (z, w) in points.into_iter().zip(raw) {
        if w >= WEIGHT_FLOOR {
            kept_points.push(z);
            kept.push(w);
        }
    }
    if kept.len() < m * m {
        warn!(
            "discrete Gaussian QAM: dropped {} points with negligible weight",
            m * m - kept.len()
        );
    }
    let total: f64 = kept.iter().sum();
    let probs = kept.into_iter().map(|w| w / total).collect();
    Constellation::new(
        kept_points,
        probs,
        format!("{}-QAM discrete Gaussian ν={nu}", m * m),
    )
}
