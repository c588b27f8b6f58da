//! Subcommand implementations.

use serde::Serialize;

use biphoton_core::config::RunConfig;
use biphoton_core::counting::{
    car, coincidences_in_gate, correlation_histogram, g2_zero, power_sweep as run_power_sweep,
    simulate_time_tags, SourceStats,
};
use biphoton_core::fiber::Variant;
use biphoton_core::jointspectrum::{
    filtered_rates as jsi_filtered_rates, jsi_grid, marginal, MarginalAxis, SpectralFilter,
};
use biphoton_core::phasematch::{
    solve_tuning_point, tuning_curve as solve_tuning_curve, tuning_rate, PhaseMatchPoint,
};
use biphoton_core::{Error, Result};

use crate::output::{fmt, write_csv, write_json, Provenance};

use std::path::{Path, PathBuf};

pub struct Context {
    pub config: RunConfig,
    pub provenance: Provenance,
    pub out_dir: PathBuf,
}

impl Context {
    pub fn load(config_path: &Path, out_dir: Option<&Path>) -> Result<Context> {
        let bytes = std::fs::read(config_path)
            .map_err(|e| Error::Config(format!("{}: {e}", config_path.display())))?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|e| Error::Config(format!("{}: {e}", config_path.display())))?;
        let config = RunConfig::from_toml(&text)?;
        let out_dir = out_dir
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from(&config.output.directory));
        std::fs::create_dir_all(&out_dir)
            .map_err(|e| Error::Config(format!("{}: {e}", out_dir.display())))?;
        Ok(Context {
            config,
            provenance: Provenance::for_config_bytes(&bytes),
            out_dir,
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn solve_primary(&self, pressure: f64, variant: Variant) -> Result<PhaseMatchPoint> {
        let env = self.config.environment_at(pressure);
        Ok(solve_tuning_point(
            &env,
            &self.config.pump,
            &self.config.nonlinear,
            env.numerics.signal_search_window_nm,
            variant,
        )?[0])
    }
}

#[derive(Serialize)]
struct TuningSummary {
    variant: String,
    pressure_range_bar: (f64, f64),
    pressure_step_bar: f64,
    n_points: usize,
    gaps_bar: Vec<f64>,
    rate_thz_per_bar: f64,
    span_thz: f64,
    provenance: Provenance,
}

fn tuning_curve_cmd_name(variant: Variant) -> String {
    format!("tuning_curve_{variant}")
}

pub fn tuning_curve(
    ctx: &Context,
    pmin: f64,
    pmax: f64,
    step: f64,
    variant: Variant,
) -> Result<()> {
    let cfg = &ctx.config;
    let env = cfg.environment();
    let curve = solve_tuning_curve(&env, &cfg.pump, &cfg.nonlinear, (pmin, pmax), step, variant)?;
    if curve.points.is_empty() {
        return Err(Error::NoPhaseMatching {
            lo: env.numerics.signal_search_window_nm.0,
            hi: env.numerics.signal_search_window_nm.1,
            pressure_bar: pmin,
        });
    }
    let stem = tuning_curve_cmd_name(variant);
    let csv_path = ctx.path(&format!("{stem}.csv"));
    write_csv(
        &csv_path,
        &ctx.provenance,
        &[
            "pressure_bar",
            "lambda_s_nm",
            "lambda_i_nm",
            "residual_rad_per_m",
            "variant",
        ],
        curve.points.iter().map(|p| {
            vec![
                fmt(p.pressure_bar),
                fmt(p.lambda_s_nm),
                fmt(p.lambda_i_nm),
                fmt(p.residual_rad_per_m),
                p.variant.to_string(),
            ]
        }),
    )?;

    let bands = env.resonance_bands(env.numerics.max_resonance_order)?;
    write_csv(
        &ctx.path("resonance_bands.csv"),
        &ctx.provenance,
        &["order", "lambda_low_nm", "lambda_high_nm"],
        bands.iter().map(|b| {
            vec![
                b.order.to_string(),
                fmt(b.lambda_low_nm),
                fmt(b.lambda_high_nm),
            ]
        }),
    )?;

    let rate = tuning_rate(&curve)?;
    write_json(
        &ctx.path(&format!("{stem}.json")),
        &TuningSummary {
            variant: variant.to_string(),
            pressure_range_bar: (pmin, pmax),
            pressure_step_bar: step,
            n_points: curve.points.len(),
            gaps_bar: curve.gaps.clone(),
            rate_thz_per_bar: rate.slope_thz_per_bar,
            span_thz: rate.span_thz,
            provenance: ctx.provenance.clone(),
        },
    )?;
    println!(
        "{stem}: {} points, rate {:.1} THz/bar, span {:.1} THz -> {}",
        curve.points.len(),
        rate.slope_thz_per_bar,
        rate.span_thz,
        csv_path.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct JsiSummary {
    pressure_bar: f64,
    grid_points: usize,
    signal_window_nm: (f64, f64),
    idler_window_nm: (f64, f64),
    effective_length_cm: f64,
    pump_center_wavelength_nm: f64,
    pump_pulse_duration_fwhm_ps: f64,
    normalization: f64,
    signal_fwhm_nm: f64,
    idler_fwhm_nm: f64,
    provenance: Provenance,
}

pub fn jsi(
    ctx: &Context,
    pressure: Option<f64>,
    n: Option<usize>,
    signal_window: Option<(f64, f64)>,
    idler_window: Option<(f64, f64)>,
) -> Result<()> {
    let cfg = &ctx.config;
    let pressure = pressure.unwrap_or(cfg.environment.pressure_bar);
    let n = n.unwrap_or(cfg.jsi.grid_points);
    let signal_window = signal_window.unwrap_or(cfg.jsi.signal_window_nm);
    let idler_window = idler_window.unwrap_or(cfg.jsi.idler_window_nm);
    let env = cfg.environment_at(pressure);
    let grid = jsi_grid(
        &env,
        &cfg.pump,
        &cfg.nonlinear,
        signal_window,
        idler_window,
        n,
    )?;

    // matrix with an idler-axis header row and signal-axis first column
    let mut header: Vec<String> = vec!["signal_nm_by_idler_nm".into()];
    header.extend(grid.idler_nm.iter().map(|v| fmt(*v)));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(
        &ctx.path("jsi.csv"),
        &ctx.provenance,
        &header_refs,
        (0..grid.signal_nm.len()).map(|j| {
            let mut row = vec![fmt(grid.signal_nm[j])];
            row.extend((0..grid.idler_nm.len()).map(|k| fmt(grid.value(j, k))));
            row
        }),
    )?;

    let ms = marginal(&grid, MarginalAxis::Signal)?;
    let mi = marginal(&grid, MarginalAxis::Idler)?;
    write_csv(
        &ctx.path("jsi_marginals.csv"),
        &ctx.provenance,
        &["signal_nm", "signal_marginal", "idler_nm", "idler_marginal"],
        (0..n).map(|k| {
            vec![
                fmt(ms.axis_nm[k]),
                fmt(ms.values[k]),
                fmt(mi.axis_nm[k]),
                fmt(mi.values[k]),
            ]
        }),
    )?;

    write_json(
        &ctx.path("jsi.json"),
        &JsiSummary {
            pressure_bar: pressure,
            grid_points: n,
            signal_window_nm: signal_window,
            idler_window_nm: idler_window,
            effective_length_cm: cfg.geometry.effective_length_cm,
            pump_center_wavelength_nm: cfg.pump.center_wavelength_nm,
            pump_pulse_duration_fwhm_ps: cfg.pump.pulse_duration_fwhm_ps,
            normalization: grid.normalization,
            signal_fwhm_nm: ms.fwhm_nm,
            idler_fwhm_nm: mi.fwhm_nm,
            provenance: ctx.provenance.clone(),
        },
    )?;
    println!(
        "jsi: {n}x{n} at {pressure} bar, marginals {:.2}/{:.2} nm -> {}",
        ms.fwhm_nm,
        mi.fwhm_nm,
        ctx.path("jsi.csv").display()
    );
    Ok(())
}

#[derive(Serialize)]
struct FilteredRatesSummary {
    pressure_bar: f64,
    signal_filter_center_nm: f64,
    signal_filter_fwhm_nm: f64,
    idler_center_nm: f64,
    provenance: Provenance,
}

pub fn filtered_rates(ctx: &Context, bandwidths: Option<Vec<f64>>) -> Result<()> {
    let cfg = &ctx.config;
    let bands = bandwidths.unwrap_or_else(|| cfg.jsi.idler_bandwidths_nm.clone());
    let pressure = cfg.environment.pressure_bar;
    let pm = ctx.solve_primary(pressure, Variant::Resonant)?;
    let env = cfg.environment_at(pressure);
    let grid = jsi_grid(
        &env,
        &cfg.pump,
        &cfg.nonlinear,
        cfg.jsi.signal_window_nm,
        cfg.jsi.idler_window_nm,
        cfg.jsi.grid_points,
    )?;
    let filter = SpectralFilter::rectangular(pm.lambda_s_nm, cfg.jsi.signal_filter_fwhm_nm);
    let rates = jsi_filtered_rates(&grid, &filter, pm.lambda_i_nm, &bands)?;
    write_csv(
        &ctx.path("filtered_rates.csv"),
        &ctx.provenance,
        &["bandwidth_nm", "coincidence_norm", "singles_norm"],
        rates.iter().map(|r| {
            vec![
                fmt(r.bandwidth_nm),
                fmt(r.coincidence_norm),
                fmt(r.singles_norm),
            ]
        }),
    )?;
    write_json(
        &ctx.path("filtered_rates.json"),
        &FilteredRatesSummary {
            pressure_bar: pressure,
            signal_filter_center_nm: pm.lambda_s_nm,
            signal_filter_fwhm_nm: cfg.jsi.signal_filter_fwhm_nm,
            idler_center_nm: pm.lambda_i_nm,
            provenance: ctx.provenance.clone(),
        },
    )?;
    println!(
        "filtered-rates: {} bandwidths around {:.1} nm -> {}",
        rates.len(),
        pm.lambda_i_nm,
        ctx.path("filtered_rates.csv").display()
    );
    Ok(())
}

pub fn transmittance(ctx: &Context, lmin: f64, lmax: f64, points: usize) -> Result<()> {
    let cfg = &ctx.config;
    let env = cfg.environment();
    let params = &cfg.transmittance;
    let rows: Result<Vec<Vec<String>>> = (0..points)
        .map(|k| {
            let lam = lmin + (lmax - lmin) * k as f64 / (points as f64 - 1.0);
            let t = env.transmittance(lam, params)?;
            Ok(vec![fmt(lam), fmt(t)])
        })
        .collect();
    write_csv(
        &ctx.path("transmittance.csv"),
        &ctx.provenance,
        &["lambda_nm", "transmittance"],
        rows?,
    )?;
    println!(
        "transmittance: {points} points on [{lmin}, {lmax}] nm -> {}",
        ctx.path("transmittance.csv").display()
    );
    Ok(())
}

#[derive(Serialize)]
struct ZdwSummary {
    pressure_bar: f64,
    lambda_zdw_nm: f64,
    bracket_nm: (f64, f64),
    provenance: Provenance,
}

pub fn zdw(ctx: &Context, pressure: Option<f64>) -> Result<()> {
    let cfg = &ctx.config;
    let pressure = pressure.unwrap_or(cfg.environment.pressure_bar);
    let env = cfg.environment_at(pressure);
    let bracket = env.numerics.zdw_bracket_nm;
    let lambda = env.find_zdw(bracket, Variant::Resonant)?;
    write_json(
        &ctx.path("zdw.json"),
        &ZdwSummary {
            pressure_bar: pressure,
            lambda_zdw_nm: lambda,
            bracket_nm: bracket,
            provenance: ctx.provenance.clone(),
        },
    )?;
    println!(
        "zdw: {lambda:.3} nm at {pressure} bar -> {}",
        ctx.path("zdw.json").display()
    );
    Ok(())
}

#[derive(Serialize)]
struct MonteCarloSummary {
    pulses: u64,
    power_mw: f64,
    seed: u64,
    mean_pairs_per_pulse: f64,
    signal_counts: usize,
    idler_counts: usize,
    signal_rate_hz: f64,
    idler_rate_hz: f64,
    idler_offband_rate_hz: f64,
    coincidences_in_gate: u64,
    g2_zero: f64,
    car: f64,
    histogram_bin_ps: i64,
    histogram_span_ps: i64,
    provenance: Provenance,
}

pub fn montecarlo(
    ctx: &Context,
    pulses: Option<u64>,
    power: Option<f64>,
    seed: Option<u64>,
) -> Result<()> {
    let cfg = &ctx.config;
    let pulses = pulses.unwrap_or(cfg.simulation.pulses);
    let power = power.unwrap_or(cfg.pump.average_power_mw);
    let seed = seed.unwrap_or(cfg.simulation.seed);
    let stats = cfg.power_scaling().stats_at(power);
    let det_s = cfg.simulation.detector_signal;
    let det_i = cfg.simulation.detector_idler;
    let (signal, idler) = simulate_time_tags(&stats, &det_s, &det_i, &cfg.pump, pulses, seed)?;

    // off-band run (mu = 0, same power) estimates the fluorescence level
    let offband_stats = SourceStats {
        mean_pairs_per_pulse: 0.0,
        ..stats
    };
    let offband_rate = if stats.fluorescence_rate_idler_hz > 0.0 || stats.dark_rate_hz > 0.0 {
        let (_, idler_off) = simulate_time_tags(
            &offband_stats,
            &det_s,
            &det_i,
            &cfg.pump,
            pulses,
            seed ^ 0x0ffb4d,
        )?;
        idler_off.rate_hz()
    } else {
        0.0
    };

    // merged time-tag export, ordered by time
    let mut tags: Vec<(&str, i64)> = signal
        .times_ps
        .iter()
        .map(|&t| ("signal", t))
        .chain(idler.times_ps.iter().map(|&t| ("idler", t)))
        .collect();
    tags.sort_by_key(|&(ch, t)| (t, ch == "idler"));
    write_csv(
        &ctx.path("timetags.csv"),
        &ctx.provenance,
        &["channel", "time_ps"],
        tags.iter()
            .map(|(ch, t)| vec![ch.to_string(), t.to_string()]),
    )?;

    let bin = cfg.simulation.histogram_bin_ps.round() as i64;
    let span = (cfg.simulation.histogram_span_ns * 1e3).round() as i64;
    let hist = correlation_histogram(&signal, &idler, bin, span, pulses)?;
    write_csv(
        &ctx.path("histogram.csv"),
        &ctx.provenance,
        &["bin_center_ps", "counts"],
        hist.bin_centers_ps()
            .iter()
            .zip(&hist.counts)
            .map(|(c, n)| vec![c.to_string(), n.to_string()]),
    )?;

    let gate = det_s.gate_window_ps.max(det_i.gate_window_ps);
    let g2 = g2_zero(
        &signal,
        &idler,
        cfg.pump.repetition_rate_hz(),
        gate,
        (offband_rate > 0.0).then_some(offband_rate),
    )?;
    write_json(
        &ctx.path("montecarlo.json"),
        &MonteCarloSummary {
            pulses,
            power_mw: power,
            seed,
            mean_pairs_per_pulse: stats.mean_pairs_per_pulse,
            signal_counts: signal.count(),
            idler_counts: idler.count(),
            signal_rate_hz: signal.rate_hz(),
            idler_rate_hz: idler.rate_hz(),
            idler_offband_rate_hz: offband_rate,
            coincidences_in_gate: coincidences_in_gate(&signal, &idler, gate.round() as i64),
            g2_zero: g2,
            car: car(g2),
            histogram_bin_ps: bin,
            histogram_span_ps: span,
            provenance: ctx.provenance.clone(),
        },
    )?;
    println!(
        "montecarlo: {pulses} pulses at {power} mW, g2 = {g2:.4e} -> {}",
        ctx.path("montecarlo.json").display()
    );
    Ok(())
}

#[derive(Serialize)]
struct PowerSweepSummary {
    pulses_per_point: u64,
    seed: u64,
    coincidence_exponent: f64,
    car_exponent: f64,
    provenance: Provenance,
}

pub fn power_sweep(
    ctx: &Context,
    powers: Option<Vec<f64>>,
    pulses: Option<u64>,
    seed: Option<u64>,
) -> Result<()> {
    let cfg = &ctx.config;
    let powers = powers.unwrap_or_else(|| cfg.simulation.power_sweep_mw.clone());
    let pulses = pulses.unwrap_or(cfg.simulation.pulses);
    let seed = seed.unwrap_or(cfg.simulation.seed);
    let sweep = run_power_sweep(
        &cfg.power_scaling(),
        &cfg.simulation.detector_signal,
        &cfg.simulation.detector_idler,
        &cfg.pump,
        &powers,
        pulses,
        seed,
    )?;
    write_csv(
        &ctx.path("power_sweep.csv"),
        &ctx.provenance,
        &["power_mw", "coincidence_rate_hz", "car"],
        sweep
            .rows
            .iter()
            .map(|r| vec![fmt(r.power_mw), fmt(r.coincidence_rate_hz), fmt(r.car)]),
    )?;
    write_json(
        &ctx.path("power_sweep.json"),
        &PowerSweepSummary {
            pulses_per_point: pulses,
            seed,
            coincidence_exponent: sweep.coincidence_exponent,
            car_exponent: sweep.car_exponent,
            provenance: ctx.provenance.clone(),
        },
    )?;
    println!(
        "power-sweep: exponents {:.3} / {:.3} -> {}",
        sweep.coincidence_exponent,
        sweep.car_exponent,
        ctx.path("power_sweep.csv").display()
    );
    Ok(())
}
