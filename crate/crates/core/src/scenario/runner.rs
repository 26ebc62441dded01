use rayon::prelude::*;
use serde::Serialize;

use super::config::{build_network, ScenarioConfig, SweepParameter};
use super::ScenarioError;
use crate::link::LinkDirection;
use crate::network::Network;
use crate::rng::trial_seed;
use crate::units::{PowerUnit, RatioUnit};
use crate::CMat;

/// One pair's metrics for one (sweep value, trial).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRecord {
    pub trial: usize,
    /// NaN when the scenario has no sweep.
    pub sweep_value: f64,
    /// `"source->destination"`.
    pub pair: String,
    pub mutual_information_bps_hz: f64,
    pub absolute_error: f64,
    pub normalized_error: f64,
    /// `-inf` for an exact estimate.
    pub normalized_error_db: f64,
    pub snr_db: f64,
    pub transmit_power_dbm: f64,
    pub path_loss_db: f64,
    pub received_power_dbm: f64,
    pub noise_power_dbm: f64,
}

/// A forward channel realization of one link in one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDump {
    pub trial: usize,
    pub sweep_value: f64,
    pub source: String,
    pub destination: String,
    pub gain: f64,
    pub matrix: CMat,
}

/// Command-line overrides of the scenario's run block.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub trials: Option<usize>,
    pub master_seed: Option<u64>,
    pub collect_channels: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutput {
    /// Ordered by sweep index, then trial, then pair declaration order.
    pub records: Vec<MetricsRecord>,
    pub channels: Vec<ChannelDump>,
}

struct Item {
    records: Vec<MetricsRecord>,
    channels: Vec<ChannelDump>,
}

fn run_trial(
    cfg: &ScenarioConfig,
    baseline: &Network,
    seed: u64,
    trial: usize,
    sweep: Option<(SweepParameter, f64)>,
    collect_channels: bool,
) -> crate::Result<Item> {
    let mut net = baseline.clone();
    if let Some((SweepParameter::TransmitPowerDbm, p)) = sweep {
        net.set_transmit_power(p, PowerUnit::DBm)?;
    }
    net.realize(seed)?;
    if let Some((SweepParameter::SnrDb, snr)) = sweep {
        for p in &cfg.pairs {
            net.set_snr(&p.source, &p.destination, snr, RatioUnit::DB)?;
        }
    }
    net.configure_all(&cfg.strategies.transmitter, &cfg.strategies.receiver)?;
    net.draw_symbols(seed)?;
    net.compute_received_signals(seed)?;

    let sweep_value = sweep.map_or(f64::NAN, |(_, v)| v);
    let mut records = Vec::with_capacity(cfg.pairs.len());
    for p in &cfg.pairs {
        let (src, dst) = (p.source.as_str(), p.destination.as_str());
        let budget = net
            .link(src, dst)?
            .link_budget(LinkDirection::Forward, net.device(src)?, net.device(dst)?)?;
        let mi = net.report_mutual_information(src, dst)?;
        let (abs, norm) = net.report_symbol_estimation_error(src, dst)?;
        records.push(MetricsRecord {
            trial,
            sweep_value,
            pair: format!("{src}->{dst}"),
            mutual_information_bps_hz: mi,
            absolute_error: abs,
            normalized_error: norm,
            normalized_error_db: if norm > 0.0 {
                10.0 * norm.log10()
            } else {
                f64::NEG_INFINITY
            },
            snr_db: budget.snr_db,
            transmit_power_dbm: budget.transmit_power_dbm,
            path_loss_db: budget.path_loss_db,
            received_power_dbm: budget.received_power_dbm,
            noise_power_dbm: budget.noise_power_dbm,
        });
    }

    let mut channels = Vec::new();
    if collect_channels {
        for (s, d) in net.link_keys() {
            let path = net.link(&s, &d)?;
            if let (Some(h), Some(g)) = (
                path.channel_matrix(LinkDirection::Forward),
                path.gain(LinkDirection::Forward),
            ) {
                channels.push(ChannelDump {
                    trial,
                    sweep_value,
                    source: s.clone(),
                    destination: d.clone(),
                    gain: g,
                    matrix: h.clone(),
                });
            }
        }
    }
    Ok(Item { records, channels })
}

/// Runs every (sweep value, trial) on its own clone of the baseline network.
/// Trial `t` draws from `trial_seed(master, t)` for every sweep value, so an
/// SNR sweep compares the same channels at each point. Output order and bytes
/// do not depend on thread scheduling.
pub fn run_monte_carlo(cfg: &ScenarioConfig, options: RunOptions) -> Result<RunOutput, ScenarioError> {
    let trials = options.trials.unwrap_or(cfg.run.trials);
    let master = options.master_seed.unwrap_or(cfg.run.master_seed);
    let baseline = build_network(cfg)?;

    let sweeps: Vec<Option<(SweepParameter, f64)>> = match &cfg.run.sweep {
        Some(s) => s.values.iter().map(|&v| Some((s.parameter, v))).collect(),
        None => vec![None],
    };
    let jobs: Vec<(Option<(SweepParameter, f64)>, usize)> =
        sweeps.iter().flat_map(|&s| (0..trials).map(move |t| (s, t))).collect();

    let results: Vec<Result<Item, ScenarioError>> = jobs
        .par_iter()
        .map(|&(sweep, trial)| {
            let seed = trial_seed(master, trial as u64);
            run_trial(cfg, &baseline, seed, trial, sweep, options.collect_channels).map_err(|e| {
                let context = match sweep {
                    Some((_, v)) => format!("trial {trial}, sweep value {v}"),
                    None => format!("trial {trial}"),
                };
                ScenarioError::runtime(context, e)
            })
        })
        .collect();

    let mut out = RunOutput::default();
    for r in results {
        let item = r?;
        out.records.extend(item.records);
        out.channels.extend(item.channels);
    }
    Ok(out)
}
