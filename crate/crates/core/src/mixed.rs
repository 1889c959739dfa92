//! Covariance bound for modulations with mixed signal states τ_k, such as
//! displaced thermal states. For pure coherent states it reduces to
//! [`crate::bound`].
//!
//! Alice's measurement in the entanglement-based picture has POVM elements
//! `P_k = p_k τ̄^{-1/2} τ̄_k τ̄^{-1/2}`. The multiplier `t = c2/‖G2‖²` is
//! fixed rather than optimised, which may be suboptimal in general.

use std::path::Path;

use log::warn;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bound::{excess_term, ChannelStats, CovarianceBound, ZInterval};
use crate::channel::Channel;
use crate::constellation::{Constellation, PROB_SUM_TOL};
use crate::error::{Error, Result};
use crate::fock::{
    annihilation, auto_dim, conj_in_fock_basis, displacement, herm_eig, hermitian_deviation,
    number_operator, sqrt_and_pinv_sqrt, trace, trace_of_product, FockMatrix, HERMITIAN_TOL,
    PSD_TOL, RANK_TOL,
};

/// Unit-trace tolerance for each τ_k.
pub const TRACE_TOL: f64 = 1e-10;
/// Allowed `|tr(τ_k a) − α_k|`.
pub const CENTER_TOL: f64 = 1e-8;
/// Allowed Frobenius deviation of `Σ P_k` from the support projector.
pub const RESOLUTION_TOL: f64 = 1e-8;
/// `|corr|` above which a vanishing `w` is treated as inconsistent.
pub const CORR_TOL: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone)]
pub struct MixedConstellation {
    states: Vec<FockMatrix>,
    probs: Vec<f64>,
    centers: Vec<Complex64>,
    label: String,
}

/// Truncation for displaced thermal states: the coherent rule plus
/// `ceil(10 n_th + 10)` for the geometric tail.
pub fn thermal_dim(max_abs_sq: f64, max_n_th: f64) -> usize {
    auto_dim(max_abs_sq) + (10.0 * max_n_th.max(0.0) + 10.0).ceil() as usize
}

/// `D(α) ρ_th D(α)†` with mean thermal occupation `n_th`, renormalised to
/// unit trace after truncation.
pub fn thermal_state(center: Complex64, n_th: f64, dim: usize) -> Result<FockMatrix> {
    if !(n_th >= 0.0) || !n_th.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "thermal occupation must be non-negative, got {n_th}"
        )));
    }
    let mut rho = FockMatrix::zeros(dim, dim);
    if n_th == 0.0 {
        rho[(0, 0)] = Complex64::new(1.0, 0.0);
    } else {
        let ratio = n_th / (n_th + 1.0);
        let mut p = 1.0 / (n_th + 1.0);
        for n in 0..dim {
            rho[(n, n)] = Complex64::new(p, 0.0);
            p *= ratio;
        }
    }
    let d = displacement(center, dim)?;
    let state = &d * rho * d.adjoint();
    let tr = trace(&state).re;
    Ok(state.unscale(tr))
}

impl MixedConstellation {
    pub fn new(
        states: Vec<FockMatrix>,
        probs: Vec<f64>,
        centers: Vec<Complex64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let m = states.len();
        if m == 0 {
            return Err(Error::InvalidConstellation("no states".into()));
        }
        if probs.len() != m || centers.len() != m {
            return Err(Error::InvalidConstellation(format!(
                "{m} states, {} probabilities, {} centers",
                probs.len(),
                centers.len()
            )));
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
        let dim = states[0].nrows();
        if dim == 0 {
            return Err(Error::InvalidConstellation("empty state matrix".into()));
        }
        let a = annihilation(dim);
        for (k, (state, center)) in states.iter().zip(&centers).enumerate() {
            if state.nrows() != dim || state.ncols() != dim {
                return Err(Error::InvalidConstellation(format!(
                    "state {k} is {}x{}, expected {dim}x{dim}",
                    state.nrows(),
                    state.ncols()
                )));
            }
            let deviation = hermitian_deviation(state);
            if deviation > HERMITIAN_TOL {
                return Err(Error::NotHermitian { deviation });
            }
            let tr = trace(state);
            if (tr - 1.0).norm() > TRACE_TOL {
                return Err(Error::InvalidConstellation(format!(
                    "state {k} has trace {tr}"
                )));
            }
            let eig = herm_eig(state)?;
            let lowest = eig.eigenvalues.last().copied().unwrap_or(0.0);
            if lowest < -PSD_TOL * eig.eigenvalues[0].max(0.0) {
                return Err(Error::NotPositive { eigenvalue: lowest });
            }
            let first = trace_of_product(state, &a);
            if (first - center).norm() > CENTER_TOL {
                return Err(Error::InvalidConstellation(format!(
                    "state {k} has first moment {first}, center says {center}"
                )));
            }
        }
        Ok(Self {
            states,
            probs,
            centers,
            label: label.into(),
        })
    }

    /// Displaced thermal states; `dim` defaults to [`thermal_dim`].
    pub fn thermal(
        centers: &[Complex64],
        n_th: &[f64],
        probs: &[f64],
        dim: Option<usize>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if n_th.len() != centers.len() {
            return Err(Error::InvalidConstellation(format!(
                "{} centers but {} thermal occupations",
                centers.len(),
                n_th.len()
            )));
        }
        let max_abs_sq = centers.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
        let max_n = n_th.iter().copied().fold(0.0, f64::max);
        let dim = dim.unwrap_or_else(|| thermal_dim(max_abs_sq, max_n));
        let states = centers
            .iter()
            .zip(n_th)
            .map(|(&c, &n)| thermal_state(c, n, dim))
            .collect::<Result<Vec<_>>>()?;
        Self::new(states, probs.to_vec(), centers.to_vec(), label)
    }

    /// Pure coherent states `D(α_k)|0⟩`, built by displacing the vacuum.
    pub fn coherent(c: &Constellation, dim: Option<usize>) -> Result<Self> {
        let dim = dim.unwrap_or_else(|| auto_dim(c.max_abs_sq()));
        let zeros = vec![0.0; c.len()];
        Self::thermal(c.points(), &zeros, c.probs(), Some(dim), c.label())
    }

    pub fn dim(&self) -> usize {
        self.states[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[FockMatrix] {
        &self.states
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn centers(&self) -> &[Complex64] {
        &self.centers
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: MixedFile = serde_json::from_str(s)?;
        raw.build()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::load_with_dim(path, None)
    }

    /// Like [`MixedConstellation::load`], with `dim` overriding the file's
    /// truncation for thermal states.
    pub fn load_with_dim(path: impl AsRef<Path>, dim: Option<usize>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut raw: MixedFile = serde_json::from_str(&text)?;
        if dim.is_some() {
            raw.dim = dim;
        }
        raw.build()
    }
}

/// File format. Each state gives its center and probability plus either
/// `n_th` (displaced thermal state) or a dense matrix as `re`/`im` rows.
#[derive(Debug, Serialize, Deserialize)]
pub struct MixedFile {
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub dim: Option<usize>,
    pub states: Vec<MixedFileState>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MixedFileState {
    pub center: [f64; 2],
    pub prob: f64,
    #[serde(default)]
    pub n_th: Option<f64>,
    #[serde(default)]
    pub re: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MixedFile {
    fn build(&self) -> Result<MixedConstellation> {
        let parse_err = |msg: String| Error::Parse {
            what: "mixed constellation".into(),
            msg,
        };
        if self.states.is_empty() {
            return Err(Error::InvalidConstellation("no states".into()));
        }
        let centers: Vec<Complex64> = self
            .states
            .iter()
            .map(|s| Complex64::new(s.center[0], s.center[1]))
            .collect();
        let probs: Vec<f64> = self.states.iter().map(|s| s.prob).collect();

        let dense = self.states.iter().filter(|s| s.re.is_some()).count();
        if dense == 0 {
            let n_th = self
                .states
                .iter()
                .enumerate()
                .map(|(k, s)| {
                    s.n_th
                        .ok_or_else(|| parse_err(format!("state {k} has neither n_th nor matrix")))
                })
                .collect::<Result<Vec<_>>>()?;
            return MixedConstellation::thermal(&centers, &n_th, &probs, self.dim, &self.label);
        }
        if dense != self.states.len() {
            return Err(parse_err(
                "either every state or none must be given as a matrix".into(),
            ));
        }
        let mut states = Vec::with_capacity(self.states.len());
        for (k, s) in self.states.iter().enumerate() {
            let re = s.re.as_ref().expect("counted above");
            let n = re.len();
            let zero_rows = vec![vec![0.0; n]; n];
            let im = s.im.as_ref().unwrap_or(&zero_rows);
            if im.len() != n || re.iter().chain(im).any(|row| row.len() != n) {
                return Err(parse_err(format!("state {k} matrix is not {n}x{n}")));
            }
            states.push(FockMatrix::from_fn(n, n, |i, j| {
                Complex64::new(re[i][j], im[i][j])
            }));
        }
        MixedConstellation::new(states, probs, centers, &self.label)
    }
}

#[derive(Debug, Clone)]
pub struct MixedAnalysis {
    pub dim: usize,
    pub tau: FockMatrix,
    /// Square roots of the Fock-basis conjugate τ̄.
    pub tau_sqrt: FockMatrix,
    pub tau_pinv_sqrt: FockMatrix,
    pub projector: FockMatrix,
    pub povm: Vec<FockMatrix>,
    /// `z_k = tr(τ̄_k a_τ̄)`.
    pub z: Vec<Complex64>,
    pub g1: FockMatrix,
    pub g2: FockMatrix,
    pub w: f64,
    /// `Re Σ_{k,ℓ} (α_ℓ − α_k) z_k tr(τ̄ P_k P_ℓ)`.
    pub corr: f64,
    /// `Σ_{k,ℓ} ᾱ_k α_ℓ tr(τ̄ P_k P_ℓ) = tr(τ̄ G2 G2†)`.
    pub g2norm: f64,
    /// `Re Σ_k p_k z_k α_k`, the expected `c1` per unit `√T`.
    pub t1: f64,
    pub signal_photon: f64,
    pub total_photon: f64,
    /// `‖Σ P_k − Π‖_F`.
    pub resolution_error: f64,
}

/// Largest rank cutoff [`analyze_mixed`] escalates to.
pub const MAX_RANK_TOL: f64 = 1e-6;

/// Analysis with the default rank cutoff. Eigenvalues of τ̄ just above the
/// cutoff amplify round-off in `Σ P_k` by `λ_max/λ`; when the resolution
/// check fails for that reason the cutoff is raised tenfold, up to
/// [`MAX_RANK_TOL`].
pub fn analyze_mixed(mc: &MixedConstellation) -> Result<MixedAnalysis> {
    let mut rank_tol = RANK_TOL;
    loop {
        match analyze_mixed_with(mc, rank_tol) {
            Err(Error::Resolution { deviation }) if rank_tol < MAX_RANK_TOL => {
                warn!(
                    "resolution of the identity off by {deviation:e} at rank cutoff {rank_tol:e}, \
                     raising the cutoff"
                );
                rank_tol *= 10.0;
            }
            other => return other,
        }
    }
}

pub fn analyze_mixed_with(mc: &MixedConstellation, rank_tol: f64) -> Result<MixedAnalysis> {
    let dim = mc.dim();
    let mut tau = FockMatrix::zeros(dim, dim);
    for (state, &p) in mc.states.iter().zip(&mc.probs) {
        tau += state * Complex64::new(p, 0.0);
    }
    let tau_bar = conj_in_fock_basis(&tau);
    let roots = sqrt_and_pinv_sqrt(&tau_bar, rank_tol)?;
    let a = annihilation(dim);
    let a_bar_tau = &roots.sqrt * &a * &roots.pinv_sqrt;

    let mut povm = Vec::with_capacity(mc.len());
    let mut z = Vec::with_capacity(mc.len());
    let mut resolution = -roots.projector.clone();
    for (state, &p) in mc.states.iter().zip(&mc.probs) {
        let state_bar = conj_in_fock_basis(state);
        let pk = (&roots.pinv_sqrt * &state_bar * &roots.pinv_sqrt) * Complex64::new(p, 0.0);
        resolution += &pk;
        povm.push(pk);
        z.push(trace_of_product(&state_bar, &a_bar_tau));
    }
    let resolution_error = resolution.norm();
    if resolution_error > RESOLUTION_TOL {
        return Err(Error::Resolution {
            deviation: resolution_error,
        });
    }

    // w is invariant under conjugation, so evaluate it with τ̄ and a_τ̄.
    let spread = trace_of_product(&(&tau_bar * a_bar_tau.adjoint()), &a_bar_tau).re;
    let w_raw = spread
        - mc.probs
            .iter()
            .zip(&z)
            .map(|(p, zk)| p * zk.norm_sqr())
            .sum::<f64>();
    if w_raw < -crate::bound::W_NEGATIVE_TOL {
        return Err(Error::Numerical(format!("w = {w_raw:e} is negative")));
    }

    let mut g1 = FockMatrix::zeros(dim, dim);
    let mut g2 = FockMatrix::zeros(dim, dim);
    for ((pk, zk), alpha) in povm.iter().zip(&z).zip(&mc.centers) {
        g1 += pk * *zk;
        g2 += pk * alpha.conj();
    }

    let weighted: Vec<FockMatrix> = povm.iter().map(|pk| &tau_bar * pk).collect();
    let mut corr = ZERO;
    let mut g2norm = ZERO;
    for (k, qk) in weighted.iter().enumerate() {
        for (l, pl) in povm.iter().enumerate() {
            let tkl = trace_of_product(qk, pl);
            let (ak, al) = (mc.centers[k], mc.centers[l]);
            corr += (al - ak) * z[k] * tkl;
            g2norm += ak.conj() * al * tkl;
        }
    }

    let t1 = mc
        .probs
        .iter()
        .zip(&z)
        .zip(&mc.centers)
        .map(|((p, zk), alpha)| p * (zk * alpha).re)
        .sum();
    let signal_photon = mc
        .probs
        .iter()
        .zip(&mc.centers)
        .map(|(p, alpha)| p * alpha.norm_sqr())
        .sum();
    let total_photon = trace_of_product(&tau, &number_operator(dim)).re;

    if g2norm.re <= 0.0 && signal_photon > 0.0 {
        warn!("‖G2‖² = {:e} for a constellation with signal", g2norm.re);
    }

    Ok(MixedAnalysis {
        dim,
        tau,
        tau_sqrt: roots.sqrt,
        tau_pinv_sqrt: roots.pinv_sqrt,
        projector: roots.projector,
        povm,
        z,
        g1,
        g2,
        w: w_raw.max(0.0),
        corr: corr.re,
        g2norm: g2norm.re,
        t1,
        signal_photon,
        total_photon,
        resolution_error,
    })
}

/// `2c1 − 2c2·corr/‖G2‖² ∓ 2√(w (n_B − c2²/‖G2‖²))`.
pub fn z_interval_mixed(an: &MixedAnalysis, stats: &ChannelStats) -> Result<ZInterval> {
    if stats.n_b < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "n_B must be non-negative, got {}",
            stats.n_b
        )));
    }
    if an.w == 0.0 && an.corr.abs() > CORR_TOL {
        return Err(Error::DegenerateCorrection { corr: an.corr });
    }
    let excess = excess_term(stats, an.g2norm)?;
    let shift = if an.g2norm > 0.0 {
        stats.c2 * an.corr / an.g2norm
    } else {
        0.0
    };
    let centre = 2.0 * stats.c1 - 2.0 * shift;
    let radius = 2.0 * (an.w * excess).sqrt();
    Ok(ZInterval {
        low: centre - radius,
        high: centre + radius,
    })
}

impl MixedAnalysis {
    /// `c1 = √T Re Σ p_k z_k α_k`, `c2 = √T Σ p_k|α_k|²`,
    /// `n_B = T tr(τ a†a) + Tξ/2`.
    pub fn expected_stats(&self, channel: Channel) -> ChannelStats {
        let t = channel.transmittance;
        ChannelStats {
            c1: t.sqrt() * self.t1,
            c2: t.sqrt() * self.signal_photon,
            n_b: t * self.total_photon + t * channel.excess_noise / 2.0,
        }
    }

    pub fn z_interval(&self, stats: &ChannelStats) -> Result<ZInterval> {
        z_interval_mixed(self, stats)
    }
}

impl CovarianceBound for MixedAnalysis {
    fn signal_photon(&self) -> f64 {
        self.signal_photon
    }

    fn total_photon(&self) -> f64 {
        self.total_photon
    }

    fn w(&self) -> f64 {
        self.w
    }

    fn t1(&self) -> f64 {
        self.t1
    }

    fn expected_stats(&self, channel: Channel) -> ChannelStats {
        MixedAnalysis::expected_stats(self, channel)
    }

    fn z_interval(&self, stats: &ChannelStats) -> Result<ZInterval> {
        z_interval_mixed(self, stats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bound::analyze;
    use crate::constellation::{psk, qam_binomial};
    use crate::fock::coherent_vector;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn thermal_vacuum_and_coherent() {
        let vac = thermal_state(c(0.0, 0.0), 0.0, 10).unwrap();
        let mut expect = FockMatrix::zeros(10, 10);
        expect[(0, 0)] = c(1.0, 0.0);
        assert!((vac - expect).norm() < 1e-14);

        let alpha = c(0.7, -0.4);
        let dim = auto_dim(alpha.norm_sqr());
        let state = thermal_state(alpha, 0.0, dim).unwrap();
        let v = coherent_vector(alpha, dim).unwrap();
        assert!((state - &v * v.adjoint()).norm() < 1e-8);
    }

    #[test]
    fn thermal_moments() {
        let alpha = c(0.8, 0.3);
        let n_th = 0.4;
        let dim = thermal_dim(alpha.norm_sqr(), n_th);
        let state = thermal_state(alpha, n_th, dim).unwrap();
        let first = trace_of_product(&state, &annihilation(dim));
        let second = trace_of_product(&state, &number_operator(dim)).re;
        assert!((first - alpha).norm() < 1e-8);
        assert!((second - alpha.norm_sqr() - n_th).abs() < 1e-6);
        assert!(thermal_state(alpha, -0.1, dim).is_err());
    }

    #[test]
    fn coherent_reduction() {
        for constellation in [psk(4, 0.35).unwrap(), qam_binomial(4, 2.0).unwrap()] {
            let pure = analyze(&constellation, None).unwrap();
            let mixed = analyze_mixed(&MixedConstellation::coherent(&constellation, None).unwrap())
                .unwrap();
            assert!(mixed.corr.abs() < 1e-9, "corr = {}", mixed.corr);
            assert!((mixed.w - pure.w).abs() < 1e-9);
            assert!((mixed.g2norm - pure.mean_photon).abs() < 1e-9);
            let channel = Channel::new(0.5, 0.02).unwrap();
            let stats = pure.expected_stats(channel);
            let zp = pure.z_interval(&stats).unwrap();
            let zm = mixed.z_interval(&stats).unwrap();
            assert!((zp.low - zm.low).abs() < 1e-9 && (zp.high - zm.high).abs() < 1e-9);
        }
    }

    #[test]
    fn thermal_pair_resolves_identity() {
        let mc = MixedConstellation::thermal(
            &[c(0.5, 0.0), c(-0.5, 0.0)],
            &[0.05, 0.05],
            &[0.5, 0.5],
            None,
            "pair",
        )
        .unwrap();
        let an = analyze_mixed(&mc).unwrap();
        let sum = an
            .povm
            .iter()
            .fold(FockMatrix::zeros(an.dim, an.dim), |acc, p| acc + p);
        assert!((&sum * &sum - &sum).norm() < 1e-7);
        for p in &an.povm {
            let eig = herm_eig(p).unwrap();
            assert!(*eig.eigenvalues.last().unwrap() > -1e-9);
        }
    }

    #[test]
    fn weak_thermal_noise_is_continuous() {
        // 16 states span the low-photon sector well enough that the extra
        // support opened by thermal noise barely moves w.
        let base = qam_binomial(4, 2.0).unwrap();
        let pure = analyze(&base, None).unwrap();
        let stats = pure.expected_stats(Channel::new(0.5, 0.05).unwrap());
        let zp = pure.z_interval(&stats).unwrap();
        let mc = MixedConstellation::thermal(base.points(), &[1e-4; 16], base.probs(), None, "")
            .unwrap();
        let zm = analyze_mixed(&mc).unwrap().z_interval(&stats).unwrap();
        assert!((zp.low - zm.low).abs() < 1e-3);
        assert!((zp.high - zm.high).abs() < 1e-3);
    }

    fn psk_thermal_family() -> Vec<MixedAnalysis> {
        let base = psk(4, 0.5).unwrap();
        [0.0, 0.01, 0.05, 0.1]
            .iter()
            .map(|&n| {
                let mc =
                    MixedConstellation::thermal(base.points(), &[n; 4], base.probs(), None, "")
                        .unwrap();
                analyze_mixed(&mc).unwrap()
            })
            .collect()
    }

    #[test]
    fn interval_contains_exact_covariance_of_identity_channel() {
        // With T = 1 and ξ = 0 the shared state is the purification itself
        // and tr(ρ C) = 2 tr(τ^{1/2} a τ^{1/2} a†).
        for an in psk_thermal_family() {
            let a = annihilation(an.dim);
            let s = &an.tau_sqrt;
            let exact = 2.0 * trace_of_product(&(s * &a), &(s * a.adjoint())).re;
            let z = an
                .z_interval(&an.expected_stats(Channel::new(1.0, 0.0).unwrap()))
                .unwrap();
            assert!(
                z.low <= exact + 1e-9 && exact <= z.high + 1e-9,
                "{exact} vs {z:?}"
            );
        }
    }

    #[test]
    fn lower_endpoint_regression_over_thermal_noise() {
        // Stats fixed at the n_th = 0.1 expectation. The endpoint is not
        // monotone in n_th: the correction term grows faster than the radius.
        let family = psk_thermal_family();
        let stats = family[3].expected_stats(Channel::new(0.5, 0.05).unwrap());
        let expected = [
            0.5860803412765748,
            0.5413595353709149,
            0.5827863683234259,
            0.7590355383403321,
        ];
        for (an, want) in family.iter().zip(expected) {
            let low = an.z_interval(&stats).unwrap().low;
            assert!((low - want).abs() < 1e-6, "{low} vs {want}");
        }
    }

    #[test]
    fn cutoff_escalates_when_resolution_is_noisy() {
        let base = psk(4, 0.5).unwrap();
        let mc =
            MixedConstellation::thermal(base.points(), &[0.01; 4], base.probs(), None, "").unwrap();
        let an = analyze_mixed(&mc).unwrap();
        assert!(an.resolution_error <= RESOLUTION_TOL);
    }

    #[test]
    fn degenerate_correction_is_rejected() {
        let mc = MixedConstellation::coherent(&psk(4, 0.35).unwrap(), None).unwrap();
        let mut an = analyze_mixed(&mc).unwrap();
        an.w = 0.0;
        an.corr = 1e-3;
        let stats = ChannelStats {
            c1: 0.1,
            c2: 0.1,
            n_b: 1.0,
        };
        assert!(matches!(
            an.z_interval(&stats),
            Err(Error::DegenerateCorrection { .. })
        ));
        an.corr = 0.0;
        assert_eq!(an.z_interval(&stats).unwrap(), ZInterval::point(0.2));
    }

    #[test]
    fn validation() {
        let good = thermal_state(c(0.3, 0.0), 0.0, 30).unwrap();
        assert!(
            MixedConstellation::new(vec![good.clone()], vec![1.0], vec![c(0.3, 0.0)], "").is_ok()
        );
        assert!(
            MixedConstellation::new(vec![good.clone()], vec![1.0], vec![c(0.5, 0.0)], "").is_err()
        );
        assert!(
            MixedConstellation::new(vec![good.scale(2.0)], vec![1.0], vec![c(0.6, 0.0)], "")
                .is_err()
        );
        assert!(
            MixedConstellation::new(vec![good.clone()], vec![0.9], vec![c(0.3, 0.0)], "").is_err()
        );
    }

    #[test]
    fn json_thermal_and_dense() {
        let text = r#"{"label":"two","states":[
            {"center":[0.5,0.0],"prob":0.5,"n_th":0.1},
            {"center":[-0.5,0.0],"prob":0.5,"n_th":0.1}]}"#;
        let mc = MixedConstellation::from_json_str(text).unwrap();
        assert_eq!(mc.len(), 2);
        assert_eq!(mc.dim(), thermal_dim(0.25, 0.1));

        let dense = r#"{"states":[{"center":[0.0,0.0],"prob":1.0,
            "re":[[1.0,0.0],[0.0,0.0]]}]}"#;
        let mc = MixedConstellation::from_json_str(dense).unwrap();
        assert_eq!(mc.dim(), 2);

        let bad = r#"{"states":[{"center":[0.0,0.0],"prob":1.0}]}"#;
        assert!(MixedConstellation::from_json_str(bad).is_err());
    }
}
