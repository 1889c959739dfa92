mod config;

use std::fs::File;
use std::io::{self, BufWriter};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde::Serialize;

use cvqkd_core::bound::ChannelStats;
use cvqkd_core::channel::{km_from_transmittance, Channel};
use cvqkd_core::estimation::{empirical_stats, sample_channel, worst_case};
use cvqkd_core::scan::{self, Model, Record};
use cvqkd_core::CovarianceBound;

use config::{BracketArgs, ChannelArgs, CommonArgs, GridValue, RateArgs, Settings};

/// Asymptotic key-rate bounds for continuous-variable QKD with arbitrary
/// coherent-state modulations.
#[derive(Debug, Parser)]
#[command(name = "cvqkd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Key rate at one channel point
    Rate {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        channel: ChannelArgs,
        #[command(flatten)]
        rate: RateArgs,
    },
    /// Key rate over a grid of distance, transmittance, V_A or α
    Scan {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        channel: ChannelArgs,
        #[command(flatten)]
        rate: RateArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Largest excess noise with a positive key rate
    XiMax {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        channel: ChannelArgs,
        #[command(flatten)]
        rate: RateArgs,
        /// Maximise over the modulation variance at every point
        #[arg(long)]
        optimize_va: bool,
        #[command(flatten)]
        bracket: BracketArgs,
    },
    /// Modulation variance maximising the key rate
    OptimizeVa {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        channel: ChannelArgs,
        #[command(flatten)]
        rate: RateArgs,
        #[command(flatten)]
        bracket: BracketArgs,
    },
    /// Constellation points and probabilities
    Dump {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Simulate heterodyne data and estimate the key rate from it
    Estimate {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        channel: ChannelArgs,
        #[command(flatten)]
        rate: RateArgs,
        #[command(flatten)]
        est: EstimateArgs,
    },
}

#[derive(Debug, Clone, Args)]
struct GridArgs {
    /// Sweep the modulation variance (value, list or range)
    #[arg(long)]
    va: Option<String>,
    /// Sweep the PSK amplitude (value, list or range)
    #[arg(long)]
    alpha: Option<String>,
}

#[derive(Debug, Clone, Args)]
struct EstimateArgs {
    /// RNG seed (required)
    #[arg(long)]
    seed: Option<u64>,
    /// Number of channel uses [default: 1000000]
    #[arg(long)]
    samples: Option<usize>,
    /// Apply finite-size worst-case penalties (needs --kappa)
    #[arg(long)]
    worst_case: bool,
    /// Penalty constant κ
    #[arg(long)]
    kappa: Option<f64>,
    /// Parameter-estimation failure probability [default: 1e-10]
    #[arg(long)]
    eps_pe: Option<f64>,
    /// Also write the raw samples (k, re_beta, im_beta) to this CSV file
    #[arg(long)]
    batch_out: Option<std::path::PathBuf>,
}

fn flag(b: bool) -> Option<bool> {
    b.then_some(true)
}

fn emit<R: Record>(rows: &[R], s: &Settings) -> Result<()> {
    match &s.out {
        Some(path) => {
            let file =
                File::create(path).with_context(|| format!("creating {}", path.display()))?;
            scan::write_records(rows, s.format(), BufWriter::new(file))?;
            info!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => scan::write_records(rows, s.format(), io::stdout().lock())?,
    }
    Ok(())
}

fn model(s: &Settings) -> Result<Model> {
    let spec = s.modulation()?;
    let model = spec
        .analyze(s.dim)
        .with_context(|| format!("analysing {spec}"))?;
    info!("{spec}: w = {:e}, t1 = {}", model.w(), model.t1());
    Ok(model)
}

fn rate(s: &Settings) -> Result<()> {
    let channel = Channel::new(s.single_transmittance()?, s.xi()?)?;
    let row = scan::evaluate(&model(s)?, channel, &s.key_rate_config()?)?;
    emit(&[row], s)
}

fn scan_cmd(s: &Settings) -> Result<()> {
    let cfg = s.key_rate_config()?;
    let xi = s.xi()?;
    let rows = match (&s.va, &s.alpha) {
        (Some(_), Some(_)) => bail!("sweep either --va or --alpha, not both"),
        (Some(va), None) => {
            let channel = Channel::new(s.single_transmittance()?, xi)?;
            scan::scan_va(&s.modulation()?, &va.values()?, channel, &cfg, s.dim)?
        }
        (None, Some(alpha)) => {
            let channel = Channel::new(s.single_transmittance()?, xi)?;
            scan::scan_alpha(&s.modulation()?, &alpha.values()?, channel, &cfg, s.dim)?
        }
        (None, None) => {
            let channels = s
                .transmittances()?
                .into_iter()
                .map(|t| Channel::new(t, xi))
                .collect::<cvqkd_core::Result<Vec<_>>>()?;
            scan::scan_channels(&model(s)?, &channels, &cfg)?
        }
    };
    emit(&rows, s)
}

fn xi_max_cmd(s: &Settings) -> Result<()> {
    if s.xi.is_some() {
        warn!("--xi is ignored by xi-max");
    }
    let optimize = if s.optimize_va.unwrap_or(false) {
        Some(s.va_bracket()?)
    } else {
        None
    };
    let rows = scan::scan_xi_max(
        &s.modulation()?,
        &s.transmittances()?,
        &s.key_rate_config()?,
        optimize,
        s.dim,
    )?;
    emit(&rows, s)
}

fn optimize_va_cmd(s: &Settings) -> Result<()> {
    let channel = Channel::new(s.single_transmittance()?, s.xi()?)?;
    let best = scan::optimize_va(
        &s.modulation()?,
        channel,
        &s.key_rate_config()?,
        s.va_bracket()?,
        s.dim,
    )?;
    emit(&[best], s)
}

fn dump_cmd(s: &Settings) -> Result<()> {
    emit(&scan::dump(&s.modulation()?, s.dim)?, s)
}

#[derive(Debug, Serialize)]
struct EstimateRow {
    samples: usize,
    seed: u64,
    d_km: f64,
    #[serde(rename = "T")]
    t: f64,
    xi: f64,
    c1_obs: f64,
    c2_obs: f64,
    n_b_obs: f64,
    c1_exp: f64,
    c2_exp: f64,
    n_b_exp: f64,
    /// Statistics the key rate is computed from: observed, or their
    /// worst-case versions.
    c1_used: f64,
    c2_used: f64,
    n_b_used: f64,
    #[serde(rename = "K")]
    k: f64,
    chi: f64,
    mutual_info: f64,
}

impl Record for EstimateRow {
    fn header() -> &'static [&'static str] {
        &[
            "samples",
            "seed",
            "d_km",
            "T",
            "xi",
            "c1_obs",
            "c2_obs",
            "n_b_obs",
            "c1_exp",
            "c2_exp",
            "n_b_exp",
            "c1_used",
            "c2_used",
            "n_b_used",
            "K",
            "chi",
            "mutual_info",
        ]
    }

    fn fields(&self) -> Vec<String> {
        let mut out = vec![self.samples.to_string(), self.seed.to_string()];
        out.extend(
            [
                self.d_km,
                self.t,
                self.xi,
                self.c1_obs,
                self.c2_obs,
                self.n_b_obs,
                self.c1_exp,
                self.c2_exp,
                self.n_b_exp,
                self.c1_used,
                self.c2_used,
                self.n_b_used,
                self.k,
                self.chi,
                self.mutual_info,
            ]
            .into_iter()
            .map(|x| format!("{x:.16e}")),
        );
        out
    }
}

fn estimate_cmd(s: &Settings) -> Result<()> {
    let seed = s.seed.context("estimation needs an explicit --seed")?;
    let n = s.samples.unwrap_or(1_000_000);
    let channel = Channel::new(s.single_transmittance()?, s.xi()?)?;
    let cfg = s.key_rate_config()?;
    let an = match model(s)? {
        Model::Pure(an) if an.constellation.is_some() => an,
        _ => bail!("estimation needs a finite constellation of coherent states"),
    };
    let c = an.constellation.as_ref().expect("checked above");

    let batch = sample_channel(c, channel, n, seed)?;
    if let Some(path) = &s.batch_out {
        batch.save_csv(path)?;
        info!("wrote {n} samples to {}", path.display());
    }
    let obs = empirical_stats(&batch, &an)?;
    let used = if s.worst_case.unwrap_or(false) {
        let kappa = s
            .kappa
            .context("--worst-case needs the penalty constant --kappa")?;
        worst_case(&obs, n, s.eps_pe.unwrap_or(1e-10), kappa)?.stats()
    } else {
        if s.kappa.is_some() {
            warn!("--kappa has no effect without --worst-case");
        }
        obs
    };
    let exp: ChannelStats = an.expected_stats(channel);
    let result = cvqkd_core::key_rate_from_stats(&an, &used, &cfg)?;
    let row = EstimateRow {
        samples: n,
        seed,
        d_km: km_from_transmittance(channel.transmittance),
        t: channel.transmittance,
        xi: channel.excess_noise,
        c1_obs: obs.c1,
        c2_obs: obs.c2,
        n_b_obs: obs.n_b,
        c1_exp: exp.c1,
        c2_exp: exp.c2,
        n_b_exp: exp.n_b,
        c1_used: used.c1,
        c2_used: used.c2,
        n_b_used: used.n_b,
        k: result.k,
        chi: result.chi,
        mutual_info: result.mutual_info,
    };
    emit(&[row], s)
}

fn run(cli: Cli) -> Result<()> {
    let grid = |v: &Option<String>| v.clone().map(GridValue::Text);
    match cli.command {
        Command::Rate {
            common,
            channel,
            rate: r,
        } => rate(&common.resolve(channel.settings().over(r.settings()))?),
        Command::Scan {
            common,
            channel,
            rate,
            grid: g,
        } => {
            let flags = Settings {
                va: grid(&g.va),
                alpha: grid(&g.alpha),
                ..Settings::default()
            };
            scan_cmd(&common.resolve(flags.over(channel.settings()).over(rate.settings()))?)
        }
        Command::XiMax {
            common,
            channel,
            rate,
            optimize_va,
            bracket,
        } => {
            let flags = Settings {
                optimize_va: flag(optimize_va),
                ..Settings::default()
            };
            let flags = flags
                .over(channel.settings())
                .over(rate.settings())
                .over(bracket.settings());
            xi_max_cmd(&common.resolve(flags)?)
        }
        Command::OptimizeVa {
            common,
            channel,
            rate,
            bracket,
        } => {
            let flags = channel
                .settings()
                .over(rate.settings())
                .over(bracket.settings());
            optimize_va_cmd(&common.resolve(flags)?)
        }
        Command::Dump { common } => dump_cmd(&common.resolve(Settings::default())?),
        Command::Estimate {
            common,
            channel,
            rate,
            est,
        } => {
            let flags = Settings {
                seed: est.seed,
                samples: est.samples,
                worst_case: flag(est.worst_case),
                kappa: est.kappa,
                eps_pe: est.eps_pe,
                batch_out: est.batch_out,
                ..Settings::default()
            };
            estimate_cmd(&common.resolve(flags.over(channel.settings()).over(rate.settings()))?)
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
