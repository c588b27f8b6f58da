//! Monte Carlo simulation of pulsed pair generation, detection and
//! time-tagging, plus coincidence statistics (histogram, g²(0), CAR).
//!
//! Pair numbers per pulse are Poissonian; the simulator samples them
//! event-driven per block (total count ~ Poisson(mu * pulses), uniform pulse
//! assignment), which is exactly equivalent by Poisson superposition and
//! keeps multi-1e9-pulse runs cheap. The pulse train is partitioned into
//! contiguous blocks with independent ChaCha substreams derived from the
//! master seed, so results are bit-identical for a given seed regardless of
//! thread count.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::phasematch::PumpSpec;
use crate::{Error, Result};

const PULSES_PER_BLOCK: u64 = 1 << 20;

/// How many pairs a pulse produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairNumberModel {
    /// Poisson-distributed with the configured mean (the physical model).
    Poisson,
    /// Exactly `round(mu)` pairs per pulse (variance-free test mode).
    Deterministic,
}

/// Source statistics at one pump power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceStats {
    /// Mean pairs per pulse.
    pub mean_pairs_per_pulse: f64,
    /// Fluorescence rate on the idler channel, counts/s.
    pub fluorescence_rate_idler_hz: f64,
    /// Dark-count rate per channel, counts/s.
    pub dark_rate_hz: f64,
    pub pair_model: PairNumberModel,
}

impl SourceStats {
    pub fn noiseless(mu: f64) -> SourceStats {
        SourceStats {
            mean_pairs_per_pulse: mu,
            fluorescence_rate_idler_hz: 0.0,
            dark_rate_hz: 0.0,
            pair_model: PairNumberModel::Poisson,
        }
    }
}

/// Pump-power scaling of the source: pairs scale quadratically (two pump
/// photons per pair), fluorescence linearly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerScaling {
    pub reference_power_mw: f64,
    pub mu_at_reference: f64,
    pub fluorescence_at_reference_hz: f64,
    pub dark_rate_hz: f64,
}

impl PowerScaling {
    pub fn stats_at(&self, power_mw: f64) -> SourceStats {
        let ratio = power_mw / self.reference_power_mw;
        SourceStats {
            mean_pairs_per_pulse: self.mu_at_reference * ratio * ratio,
            fluorescence_rate_idler_hz: self.fluorescence_at_reference_hz * ratio,
            dark_rate_hz: self.dark_rate_hz,
            pair_model: PairNumberModel::Poisson,
        }
    }
}

/// Single-photon detector parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorModel {
    pub efficiency: f64,
    pub jitter_sigma_ps: f64,
    pub gate_window_ps: f64,
    pub dead_time_ns: f64,
}

impl DetectorModel {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::InvalidArgument(
                "efficiency must be in [0, 1]".into(),
            ));
        }
        if self.gate_window_ps <= 0.0 {
            return Err(Error::InvalidArgument("gate window must be > 0".into()));
        }
        if self.jitter_sigma_ps < 0.0 || self.dead_time_ns < 0.0 {
            return Err(Error::InvalidArgument(
                "jitter and dead time must be >= 0".into(),
            ));
        }
        Ok(())
    }

    pub fn dead_time_ps(&self) -> i64 {
        (self.dead_time_ns * 1e3).round() as i64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Signal,
    Idler,
}

/// Time-ordered detector events in integer picoseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeTagStream {
    pub channel: Channel,
    pub times_ps: Vec<i64>,
    pub duration_s: f64,
}

impl TimeTagStream {
    pub fn count(&self) -> usize {
        self.times_ps.len()
    }

    pub fn rate_hz(&self) -> f64 {
        self.times_ps.len() as f64 / self.duration_s
    }
}

/// Coincidence histogram of delays `tau = t_signal - t_idler`, bins centered
/// on integer multiples of the bin width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceHistogram {
    pub bin_width_ps: i64,
    /// Counts for bin centers `k * bin_width_ps`, `k = -n_side ..= n_side`.
    pub counts: Vec<u64>,
    pub total_pulses: u64,
}

impl CoincidenceHistogram {
    pub fn n_side(&self) -> i64 {
        (self.counts.len() as i64 - 1) / 2
    }

    pub fn bin_centers_ps(&self) -> Vec<i64> {
        (-self.n_side()..=self.n_side())
            .map(|k| k * self.bin_width_ps)
            .collect()
    }

    pub fn count_at(&self, center_ps: i64) -> u64 {
        let k = center_ps / self.bin_width_ps + self.n_side();
        self.counts[k as usize]
    }

    pub fn total_counts(&self) -> u64 {
        self.counts.iter().sum()
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

fn block_rng(master_seed: u64, block_index: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(splitmix64(master_seed ^ splitmix64(block_index + 1)))
}

fn sample_poisson(rng: &mut ChaCha12Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as u64
}

struct BlockEvents {
    signal: Vec<i64>,
    idler: Vec<i64>,
}

#[allow(clippy::too_many_arguments)]
fn simulate_block(
    stats: &SourceStats,
    det_s: &DetectorModel,
    det_i: &DetectorModel,
    period_ps: f64,
    first_pulse: u64,
    n_pulses: u64,
    master_seed: u64,
    block_index: u64,
) -> BlockEvents {
    let mut rng = block_rng(master_seed, block_index);
    let mut signal = Vec::new();
    let mut idler = Vec::new();
    let pulse_time = |pulse: u64| -> i64 { (pulse as f64 * period_ps).round() as i64 };
    let jitter_s = Normal::new(0.0, det_s.jitter_sigma_ps.max(0.0)).unwrap();
    let jitter_i = Normal::new(0.0, det_i.jitter_sigma_ps.max(0.0)).unwrap();

    let emit_pair =
        |rng: &mut ChaCha12Rng, t0: i64, signal: &mut Vec<i64>, idler: &mut Vec<i64>| {
            let keep_s = rng.gen::<f64>() < det_s.efficiency;
            let keep_i = rng.gen::<f64>() < det_i.efficiency;
            if keep_s {
                let dt = if det_s.jitter_sigma_ps > 0.0 {
                    jitter_s.sample(rng).round() as i64
                } else {
                    0
                };
                signal.push(t0 + dt);
            }
            if keep_i {
                let dt = if det_i.jitter_sigma_ps > 0.0 {
                    jitter_i.sample(rng).round() as i64
                } else {
                    0
                };
                idler.push(t0 + dt);
            }
        };

    match stats.pair_model {
        PairNumberModel::Poisson => {
            let total = sample_poisson(&mut rng, stats.mean_pairs_per_pulse * n_pulses as f64);
            for _ in 0..total {
                let pulse = first_pulse + rng.gen_range(0..n_pulses);
                emit_pair(&mut rng, pulse_time(pulse), &mut signal, &mut idler);
            }
        }
        PairNumberModel::Deterministic => {
            let per_pulse = stats.mean_pairs_per_pulse.round() as u64;
            for p in first_pulse..first_pulse + n_pulses {
                for _ in 0..per_pulse {
                    emit_pair(&mut rng, pulse_time(p), &mut signal, &mut idler);
                }
            }
        }
    }

    // uniform background processes over the block's time span
    let t_start = pulse_time(first_pulse) as f64;
    let t_end = (first_pulse + n_pulses) as f64 * period_ps;
    let span_s = (t_end - t_start) * 1e-12;
    let uniform_events = |rng: &mut ChaCha12Rng, rate_hz: f64, out: &mut Vec<i64>| {
        let n = sample_poisson(rng, rate_hz * span_s);
        for _ in 0..n {
            out.push((t_start + rng.gen::<f64>() * (t_end - t_start)).round() as i64);
        }
    };
    uniform_events(&mut rng, stats.dark_rate_hz, &mut signal);
    uniform_events(&mut rng, stats.dark_rate_hz, &mut idler);
    uniform_events(&mut rng, stats.fluorescence_rate_idler_hz, &mut idler);

    BlockEvents { signal, idler }
}

/// Non-paralyzable dead time: drops any event closer than `dead_ps` to the
/// previously accepted event. Input must be sorted; order is preserved.
fn apply_dead_time(times: &mut Vec<i64>, dead_ps: i64) {
    if dead_ps <= 0 || times.is_empty() {
        return;
    }
    let mut kept = Vec::with_capacity(times.len());
    let mut last = i64::MIN;
    for &t in times.iter() {
        if last == i64::MIN || t - last >= dead_ps {
            kept.push(t);
            last = t;
        }
    }
    *times = kept;
}

/// Simulates the full detection chain for `n_pulses` pump pulses.
///
/// Deterministic for a fixed seed: the pulse train is split into contiguous
/// blocks with independent seeded substreams, simulated in parallel, and
/// merged by block index.
pub fn simulate_time_tags(
    stats: &SourceStats,
    det_s: &DetectorModel,
    det_i: &DetectorModel,
    pump: &PumpSpec,
    n_pulses: u64,
    seed: u64,
) -> Result<(TimeTagStream, TimeTagStream)> {
    if n_pulses == 0 {
        return Err(Error::InvalidArgument("n_pulses must be >= 1".into()));
    }
    if stats.mean_pairs_per_pulse < 0.0
        || stats.fluorescence_rate_idler_hz < 0.0
        || stats.dark_rate_hz < 0.0
    {
        return Err(Error::InvalidArgument("negative rate".into()));
    }
    det_s.validate()?;
    det_i.validate()?;
    pump.validate()?;

    let period_ps = pump.pulse_period_ps();
    let n_blocks = n_pulses.div_ceil(PULSES_PER_BLOCK);
    let blocks: Vec<BlockEvents> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let first = b * PULSES_PER_BLOCK;
            let count = PULSES_PER_BLOCK.min(n_pulses - first);
            simulate_block(stats, det_s, det_i, period_ps, first, count, seed, b)
        })
        .collect();

    let mut signal = Vec::new();
    let mut idler = Vec::new();
    for b in blocks {
        signal.extend(b.signal);
        idler.extend(b.idler);
    }
    signal.sort_unstable();
    idler.sort_unstable();
    apply_dead_time(&mut signal, det_s.dead_time_ps());
    apply_dead_time(&mut idler, det_i.dead_time_ps());

    let duration_s = n_pulses as f64 / pump.repetition_rate_hz();
    Ok((
        TimeTagStream {
            channel: Channel::Signal,
            times_ps: signal,
            duration_s,
        },
        TimeTagStream {
            channel: Channel::Idler,
            times_ps: idler,
            duration_s,
        },
    ))
}

/// Rounds `tau / bin` to the nearest bin index, half away from zero, so the
/// binning is symmetric about zero delay.
fn bin_index(tau: i64, bin: i64) -> i64 {
    let half = bin / 2;
    if tau >= 0 {
        (tau + half) / bin
    } else {
        -((-tau + half) / bin)
    }
}

/// Histogram of all pairwise delays `tau = t_s - t_i` within `span_ps`,
/// linear-time two-pointer sweep over the sorted streams.
pub fn correlation_histogram(
    signal: &TimeTagStream,
    idler: &TimeTagStream,
    bin_width_ps: i64,
    span_ps: i64,
    total_pulses: u64,
) -> Result<CoincidenceHistogram> {
    if bin_width_ps <= 0 || span_ps <= 0 {
        return Err(Error::InvalidArgument(
            "bin width and span must be > 0".into(),
        ));
    }
    let n_side = span_ps / bin_width_ps;
    let mut counts = vec![0u64; (2 * n_side + 1) as usize];
    let max_tau = n_side * bin_width_ps + bin_width_ps / 2;
    let mut lo = 0usize;
    for &ts in &signal.times_ps {
        while lo < idler.times_ps.len() && idler.times_ps[lo] < ts - max_tau {
            lo += 1;
        }
        for &ti in &idler.times_ps[lo..] {
            if ti > ts + max_tau {
                break;
            }
            let k = bin_index(ts - ti, bin_width_ps);
            if k.abs() <= n_side {
                counts[(k + n_side) as usize] += 1;
            }
        }
    }
    Ok(CoincidenceHistogram {
        bin_width_ps,
        counts,
        total_pulses,
    })
}

/// Coincidences within `+-gate/2` of zero delay, two-pointer sweep.
pub fn coincidences_in_gate(signal: &TimeTagStream, idler: &TimeTagStream, gate_ps: i64) -> u64 {
    let half = gate_ps / 2;
    let mut n = 0u64;
    let mut lo = 0usize;
    for &ts in &signal.times_ps {
        while lo < idler.times_ps.len() && idler.times_ps[lo] < ts - half {
            lo += 1;
        }
        for &ti in &idler.times_ps[lo..] {
            if ti > ts + half {
                break;
            }
            n += 1;
        }
    }
    n
}

/// Normalized second-order cross-correlation at zero delay:
/// `g2 = N_si R_p / (N_s N_i)` with rates per unit time. When an off-band
/// fluorescence rate is supplied the idler rate is background-corrected
/// first.
pub fn g2_zero(
    signal: &TimeTagStream,
    idler: &TimeTagStream,
    rep_rate_hz: f64,
    gate_window_ps: f64,
    idler_background_hz: Option<f64>,
) -> Result<f64> {
    let n_si = coincidences_in_gate(signal, idler, gate_window_ps.round() as i64) as f64;
    let t = signal.duration_s;
    let rate_s = signal.rate_hz();
    let rate_i = match idler_background_hz {
        Some(bg) => subtract_fluorescence(idler.rate_hz(), bg),
        None => idler.rate_hz(),
    };
    if rate_s <= 0.0 || rate_i <= 0.0 {
        return Err(Error::UndefinedStatistic(
            "zero singles rate on a channel".into(),
        ));
    }
    Ok((n_si / t) * rep_rate_hz / (rate_s * rate_i))
}

/// Off-band background subtraction: `measured - offband`.
pub fn subtract_fluorescence(measured_hz: f64, offband_hz: f64) -> f64 {
    measured_hz - offband_hz
}

/// Coincidence-to-accidentals ratio.
pub fn car(g2: f64) -> f64 {
    g2 - 1.0
}

/// One row of a pump-power sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSweepRow {
    pub power_mw: f64,
    pub coincidence_rate_hz: f64,
    pub car: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSweep {
    pub rows: Vec<PowerSweepRow>,
    /// Log-log slope of the coincidence rate versus power.
    pub coincidence_exponent: f64,
    /// Log-log slope of the CAR versus power.
    pub car_exponent: f64,
}

fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::UndefinedStatistic(
            "log-log exponent needs at least two positive points".into(),
        ));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::UndefinedStatistic(
            "log-log exponent undefined for a single power".into(),
        ));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(sxy / sxx)
}

/// Runs the full pipeline per power and fits the scaling exponents. Each
/// power uses an independent seed substream; with fluorescence enabled an
/// off-band run (mu = 0) at the same power supplies the background estimate.
#[allow(clippy::too_many_arguments)]
pub fn power_sweep(
    scaling: &PowerScaling,
    det_s: &DetectorModel,
    det_i: &DetectorModel,
    pump: &PumpSpec,
    powers_mw: &[f64],
    n_pulses: u64,
    seed: u64,
) -> Result<PowerSweep> {
    if powers_mw.is_empty() {
        return Err(Error::InvalidArgument("no powers given".into()));
    }
    let gate_ps = det_s.gate_window_ps.max(det_i.gate_window_ps);
    let mut rows = Vec::with_capacity(powers_mw.len());
    for (i, &p) in powers_mw.iter().enumerate() {
        let stats = scaling.stats_at(p);
        let run_seed = splitmix64(seed ^ (i as u64 + 0xC0FFEE));
        let (sig, idl) = simulate_time_tags(&stats, det_s, det_i, pump, n_pulses, run_seed)?;
        let background = if stats.fluorescence_rate_idler_hz > 0.0 {
            let offband = SourceStats {
                mean_pairs_per_pulse: 0.0,
                ..stats
            };
            let (_, idl_off) =
                simulate_time_tags(&offband, det_s, det_i, pump, n_pulses, splitmix64(run_seed))?;
            Some(idl_off.rate_hz())
        } else {
            None
        };
        let g2 = g2_zero(&sig, &idl, pump.repetition_rate_hz(), gate_ps, background)?;
        let n_si = coincidences_in_gate(&sig, &idl, gate_ps.round() as i64);
        rows.push(PowerSweepRow {
            power_mw: p,
            coincidence_rate_hz: n_si as f64 / sig.duration_s,
            car: car(g2),
        });
    }
    let powers: Vec<f64> = rows.iter().map(|r| r.power_mw).collect();
    let rates: Vec<f64> = rows.iter().map(|r| r.coincidence_rate_hz).collect();
    let cars: Vec<f64> = rows.iter().map(|r| r.car).collect();
    Ok(PowerSweep {
        coincidence_exponent: log_log_slope(&powers, &rates)?,
        car_exponent: log_log_slope(&powers, &cars)?,
        rows,
    })
}
