//! Heterodyne outcomes over a simulated Gaussian channel and the observed
//! estimators `c1`, `c2`, `n_B`.
//!
//! Sampling is split into fixed-size chunks, each drawn from its own ChaCha
//! stream `(seed, chunk)`, so a batch depends only on the seed and not on the
//! number of threads.

use std::io::Write;
use std::path::Path;

use log::warn;
use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bound::{ChannelStats, ModulationAnalysis};
use crate::channel::Channel;
use crate::constellation::Constellation;
use crate::error::{Error, Result};

const CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub indices: Vec<usize>,
    pub outcomes: Vec<Complex64>,
    pub seed: u64,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "re_beta", "im_beta"])
            .map_err(csv_err)?;
        for (k, beta) in self.indices.iter().zip(&self.outcomes) {
            w.write_record([
                k.to_string(),
                format!("{:.16e}", beta.re),
                format!("{:.16e}", beta.im),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            what: "csv".into(),
            msg: format!("{other:?}"),
        },
    }
}

/// `n` outcomes `β = √T α_k + γ` with `k ~ p` and circular Gaussian `γ`,
/// `E|γ|² = 1 + Tξ/2`.
pub fn sample_channel(
    c: &Constellation,
    channel: Channel,
    n: usize,
    seed: u64,
) -> Result<SampleBatch> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample count must be at least 1".into(),
        ));
    }
    let weights = WeightedIndex::new(c.probs())
        .map_err(|e| Error::InvalidConstellation(format!("bad weights: {e}")))?;
    let t = channel.transmittance;
    let sigma = ((1.0 + t * channel.excess_noise / 2.0) / 2.0).sqrt();
    let noise = Normal::new(0.0, sigma)
        .map_err(|e| Error::InvalidArgument(format!("noise distribution: {e}")))?;
    let amplitudes: Vec<Complex64> = c.points().iter().map(|a| a * t.sqrt()).collect();

    let chunks: Vec<(Vec<usize>, Vec<Complex64>)> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let len = CHUNK.min(n - chunk * CHUNK);
            let mut idx = Vec::with_capacity(len);
            let mut out = Vec::with_capacity(len);
            for _ in 0..len {
                let k = weights.sample(&mut rng);
                let gamma = Complex64::new(noise.sample(&mut rng), noise.sample(&mut rng));
                idx.push(k);
                out.push(amplitudes[k] + gamma);
            }
            (idx, out)
        })
        .collect();

    let mut indices = Vec::with_capacity(n);
    let mut outcomes = Vec::with_capacity(n);
    for (idx, out) in chunks {
        indices.extend(idx);
        outcomes.extend(out);
    }
    Ok(SampleBatch {
        indices,
        outcomes,
        seed,
    })
}

/// Observed statistics: per-state sample means `β̄_k`, then
/// `c1 = Re Σ p_k conj(α_τ,k) β̄_k`, `c2 = Re Σ p_k ᾱ_k β̄_k` and
/// `n_B = (1/n) Σ |β|² − 1`. Unsampled states contribute zero.
pub fn empirical_stats(batch: &SampleBatch, an: &ModulationAnalysis) -> Result<ChannelStats> {
    let c = an.constellation.as_ref().ok_or_else(|| {
        Error::InvalidArgument("empirical statistics need a finite constellation".into())
    })?;
    if batch.is_empty() || batch.indices.len() != batch.outcomes.len() {
        return Err(Error::InvalidArgument("malformed sample batch".into()));
    }
    let m = c.len();
    let mut sums = vec![Complex64::new(0.0, 0.0); m];
    let mut counts = vec![0usize; m];
    let mut energy = 0.0;
    for (&k, beta) in batch.indices.iter().zip(&batch.outcomes) {
        if k >= m {
            return Err(Error::InvalidArgument(format!(
                "sample index {k} outside a constellation of {m} points"
            )));
        }
        sums[k] += beta;
        counts[k] += 1;
        energy += beta.norm_sqr();
    }
    let unsampled = counts.iter().filter(|&&n| n == 0).count();
    if unsampled > 0 {
        warn!("{unsampled} constellation points have no samples and contribute zero");
    }
    let mut c1 = 0.0;
    let mut c2 = 0.0;
    for k in 0..m {
        if counts[k] == 0 {
            continue;
        }
        let mean = sums[k] / counts[k] as f64;
        let p = c.probs()[k];
        c1 += p * (an.alpha_tau[k].conj() * mean).re;
        c2 += p * (c.points()[k].conj() * mean).re;
    }
    Ok(ChannelStats {
        c1,
        c2,
        n_b: energy / batch.len() as f64 - 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseStats {
    pub c1_min: f64,
    pub c2_min: f64,
    pub n_b_max: f64,
    pub eps_pe: f64,
    pub kappa: f64,
}

impl WorstCaseStats {
    pub fn stats(&self) -> ChannelStats {
        ChannelStats {
            c1: self.c1_min,
            c2: self.c2_min,
            n_b: self.n_b_max,
        }
    }
}

/// Finite-size penalties with scale `δ = √(ln(1/ε_PE)/n)`:
/// `n_B^max = n_B(1 + κδ)` and `c_i^min = c_i − κ n_B δ`. The constant κ is
/// not known analytically and must be supplied.
pub fn worst_case(obs: &ChannelStats, n: usize, eps_pe: f64, kappa: f64) -> Result<WorstCaseStats> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample count must be at least 1".into(),
        ));
    }
    if !(eps_pe > 0.0 && eps_pe < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "ε_PE must lie in (0, 1), got {eps_pe}"
        )));
    }
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "κ must be non-negative, got {kappa}"
        )));
    }
    let delta = ((1.0 / eps_pe).ln() / n as f64).sqrt();
    let penalty = kappa * obs.n_b * delta;
    Ok(WorstCaseStats {
        c1_min: obs.c1 - penalty,
        c2_min: obs.c2 - penalty,
        n_b_max: obs.n_b * (1.0 + kappa * delta),
        eps_pe,
        kappa,
    })
}
