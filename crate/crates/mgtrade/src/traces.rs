//! Trace ingestion and synthesis: wind speed, demand, and price series, the
//! turbine power curve, same-slot estimation, and the generation error model.
//!
//! Trace CSV format: header `timestamp,value[,mg_id]`, UTF-8, ISO-8601
//! timestamps. Rows may come at hourly resolution (aggregated to slots:
//! speeds and prices by averaging, demand by summation) or already at slot
//! resolution (taken as-is). The row spacing decides which.

use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, Duration, FixedOffset, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::equilibrium::StochasticModel;
use crate::{Error, Result};

/// Default trailing window, in days, for same-slot estimation.
pub const DEFAULT_ESTIMATION_WINDOW_DAYS: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    WindSpeed,
    Demand,
    /// Per-slot generated energy, usually derived from a wind-speed trace
    /// through a [`TurbineCurve`].
    Generation,
    Price,
}

impl TraceKind {
    /// Hourly-to-slot aggregation: energies add up, intensive quantities
    /// average.
    fn aggregates_by_sum(self) -> bool {
        matches!(self, TraceKind::Demand | TraceKind::Generation)
    }
}

/// A validated time series at slot resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSeries {
    pub kind: TraceKind,
    pub slots_per_day: usize,
    pub values: Vec<f64>,
    pub mg_id: Option<usize>,
}

impl TraceSeries {
    pub fn new(
        kind: TraceKind,
        slots_per_day: usize,
        values: Vec<f64>,
        mg_id: Option<usize>,
    ) -> Result<Self> {
        let series = TraceSeries {
            kind,
            slots_per_day,
            values,
            mg_id,
        };
        series.validate()?;
        Ok(series)
    }

    pub fn validate(&self) -> Result<()> {
        if self.slots_per_day == 0 {
            return Err(Error::Trace {
                line: None,
                message: "slots_per_day must be >= 1".into(),
            });
        }
        if self.values.is_empty() || self.values.len() % self.slots_per_day != 0 {
            return Err(Error::Trace {
                line: None,
                message: format!(
                    "length {} is not a positive multiple of {} slots per day",
                    self.values.len(),
                    self.slots_per_day
                ),
            });
        }
        if let Some((idx, v)) = self
            .values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::Trace {
                line: None,
                message: format!("value {v} at slot index {idx} is negative or non-finite"),
            });
        }
        Ok(())
    }

    pub fn days(&self) -> usize {
        self.values.len() / self.slots_per_day
    }

    pub fn value(&self, day: usize, slot: usize) -> f64 {
        self.values[day * self.slots_per_day + slot]
    }
}

/// Cut-in / cubic ramp / rated / cut-out turbine curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurbineCurve {
    pub cut_in: f64,
    pub rated: f64,
    pub cut_out: f64,
    /// Energy per slot at rated output (kWh).
    pub rated_power: f64,
}

impl TurbineCurve {
    pub fn new(cut_in: f64, rated: f64, cut_out: f64, rated_power: f64) -> Result<Self> {
        if !(0.0 < cut_in && cut_in < rated && rated < cut_out) {
            return Err(Error::InvalidParameter(
                "turbine speeds must satisfy 0 < cut_in < rated < cut_out".into(),
            ));
        }
        if rated_power <= 0.0 {
            return Err(Error::InvalidParameter(
                "rated power must be positive".into(),
            ));
        }
        Ok(TurbineCurve {
            cut_in,
            rated,
            cut_out,
            rated_power,
        })
    }
}

impl Default for TurbineCurve {
    fn default() -> Self {
        TurbineCurve {
            cut_in: 3.0,
            rated: 12.0,
            cut_out: 25.0,
            rated_power: 80.0,
        }
    }
}

/// Energy produced in one slot at the given wind speed.
///
/// Zero outside `[cut_in, cut_out)`, rated between `rated` and `cut_out`,
/// and a cubic ramp in between; continuous on `[cut_in, cut_out)`.
pub fn wind_power(speed: f64, curve: &TurbineCurve) -> f64 {
    if speed < curve.cut_in || speed >= curve.cut_out {
        0.0
    } else if speed >= curve.rated {
        curve.rated_power
    } else {
        let v3 = speed.powi(3);
        let ci3 = curve.cut_in.powi(3);
        let r3 = curve.rated.powi(3);
        curve.rated_power * (v3 - ci3) / (r3 - ci3)
    }
}

/// Loads a trace CSV and aggregates it to slot resolution.
pub fn load_trace(path: &Path, kind: TraceKind, slots_per_day: usize) -> Result<TraceSeries> {
    let text = fs::read_to_string(path)?;
    parse_trace(&text, kind, slots_per_day)
}

fn parse_trace(text: &str, kind: TraceKind, slots_per_day: usize) -> Result<TraceSeries> {
    if slots_per_day == 0 || 24 % slots_per_day != 0 {
        return Err(Error::InvalidParameter(format!(
            "slots_per_day must divide 24, got {slots_per_day}"
        )));
    }
    let mut lines = text.lines().enumerate();
    let header = match lines.next() {
        Some((_, h)) => h.trim(),
        None => {
            return Err(Error::Trace {
                line: None,
                message: "empty file".into(),
            })
        }
    };
    let has_mg_column = match header {
        "timestamp,value" => false,
        "timestamp,value,mg_id" => true,
        other => {
            return Err(Error::Trace {
                line: Some(1),
                message: format!("unexpected header {other:?}"),
            })
        }
    };

    let mut timestamps: Vec<DateTime<FixedOffset>> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut mg_id: Option<usize> = None;
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        let mut fields = row.split(',');
        let ts_text = fields.next().unwrap_or_default();
        let value_text = fields.next().ok_or_else(|| Error::Trace {
            line: Some(line_no),
            message: "missing value column".into(),
        })?;
        let ts = DateTime::parse_from_rfc3339(ts_text.trim()).map_err(|e| Error::Trace {
            line: Some(line_no),
            message: format!("bad timestamp {ts_text:?}: {e}"),
        })?;
        let value: f64 = value_text.trim().parse().map_err(|_| Error::Trace {
            line: Some(line_no),
            message: format!("bad value {value_text:?}"),
        })?;
        if !value.is_finite() || value < 0.0 {
            return Err(Error::Trace {
                line: Some(line_no),
                message: format!("negative or non-finite value {value}"),
            });
        }
        if has_mg_column {
            let id_text = fields.next().ok_or_else(|| Error::Trace {
                line: Some(line_no),
                message: "missing mg_id column".into(),
            })?;
            let id: usize = id_text.trim().parse().map_err(|_| Error::Trace {
                line: Some(line_no),
                message: format!("bad mg_id {id_text:?}"),
            })?;
            match mg_id {
                None => mg_id = Some(id),
                Some(existing) if existing != id => {
                    return Err(Error::Trace {
                        line: Some(line_no),
                        message: format!("mixed mg_id values {existing} and {id}"),
                    })
                }
                _ => {}
            }
        }
        timestamps.push(ts);
        values.push(value);
    }
    if values.is_empty() {
        return Err(Error::Trace {
            line: None,
            message: "no data rows".into(),
        });
    }

    // Row spacing decides the resolution: 1h rows are aggregated, rows
    // already spaced one slot apart are taken as-is.
    let slot_hours = 24 / slots_per_day;
    let spacing = if timestamps.len() >= 2 {
        let d = timestamps[1] - timestamps[0];
        for (i, pair) in timestamps.windows(2).enumerate() {
            if pair[1] - pair[0] != d {
                return Err(Error::Trace {
                    line: Some(i + 3),
                    message: "irregular timestamp spacing".into(),
                });
            }
        }
        d
    } else {
        Duration::hours(slot_hours as i64)
    };

    let values = if spacing == Duration::hours(1) {
        if values.len() % 24 != 0 {
            return Err(Error::Trace {
                line: None,
                message: format!("{} hourly rows do not form whole days", values.len()),
            });
        }
        let per_slot = 24 / slots_per_day;
        values
            .chunks(per_slot)
            .map(|chunk| {
                let sum: f64 = chunk.iter().sum();
                if kind.aggregates_by_sum() {
                    sum
                } else {
                    sum / chunk.len() as f64
                }
            })
            .collect()
    } else if spacing == Duration::hours(slot_hours as i64) {
        values
    } else {
        return Err(Error::Trace {
            line: None,
            message: format!(
                "row spacing {} h matches neither hourly nor slot resolution",
                spacing.num_minutes() as f64 / 60.0
            ),
        });
    };

    TraceSeries::new(kind, slots_per_day, values, mg_id)
}

/// Writes a trace at slot resolution, one row per slot.
pub fn write_trace(series: &TraceSeries, path: &Path) -> Result<()> {
    series.validate()?;
    let slot_hours = 24 / series.slots_per_day;
    if slot_hours * series.slots_per_day != 24 {
        return Err(Error::InvalidParameter(format!(
            "slots_per_day must divide 24, got {}",
            series.slots_per_day
        )));
    }
    let origin = Utc.with_ymd_and_hms(2000, 1, 1, 0, 0, 0).unwrap();
    let mut out = String::new();
    if series.mg_id.is_some() {
        out.push_str("timestamp,value,mg_id\n");
    } else {
        out.push_str("timestamp,value\n");
    }
    for (k, v) in series.values.iter().enumerate() {
        let ts = origin + Duration::hours((k * slot_hours) as i64);
        match series.mg_id {
            Some(id) => out.push_str(&format!("{},{},{}\n", ts.to_rfc3339(), v, id)),
            None => out.push_str(&format!("{},{}\n", ts.to_rfc3339(), v)),
        }
    }
    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// Same-slot estimate at `day`: the mean of that slot's values over the
/// trailing `window` days (or all available history, whichever is smaller).
pub fn estimate_at(series: &TraceSeries, day: usize, slot: usize, window: usize) -> Result<f64> {
    if day == 0 {
        return Err(Error::Domain(
            "estimation needs at least one prior day".into(),
        ));
    }
    if day > series.days() {
        return Err(Error::Domain(format!(
            "day {day} beyond trace history of {} days",
            series.days()
        )));
    }
    let span = window.max(1).min(day);
    let sum: f64 = (day - span..day).map(|d| series.value(d, slot)).sum();
    Ok(sum / span as f64)
}

/// Draws a realization from the estimation error model: the estimate with
/// probability `accuracy`, otherwise the estimate shifted by `+-delta`.
/// Negative draws clamp to zero; the flag reports the clamp.
pub fn sample_actual(estimate: f64, model: &StochasticModel, rng: &mut impl Rng) -> (f64, bool) {
    let roll: f64 = rng.gen();
    let side = (1.0 - model.accuracy) / 2.0;
    let raw = if roll < model.accuracy {
        estimate
    } else if roll < model.accuracy + side {
        estimate - model.delta
    } else {
        estimate + model.delta
    };
    if raw < 0.0 {
        log::debug!("sampled generation {raw} clamped to 0");
        (0.0, true)
    } else {
        (raw, false)
    }
}

/// Shape parameters for the bundled synthetic traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthProfile {
    /// Mean wind speed (m/s) per MG; cycled when fewer entries than MGs.
    pub wind_mean: Vec<f64>,
    /// Diurnal wind swing amplitude (m/s).
    pub wind_swing: f64,
    /// Wind noise standard deviation (m/s).
    pub wind_noise: f64,
    /// Per-MG demand scale (kWh per slot at the base level).
    pub demand_base: Vec<f64>,
    /// Peak multiplier applied at the peak slots.
    pub demand_peak_factor: f64,
    /// Slots (0-based, after aggregation) carrying the demand peaks.
    pub demand_peak_slots: Vec<usize>,
    /// Relative demand noise.
    pub demand_noise: f64,
    /// Price bounds (currency/kWh); the diurnal shape spans this range.
    pub price_min: f64,
    pub price_max: f64,
    /// Slot of the price peak.
    pub price_peak_slot: usize,
}

impl Default for SynthProfile {
    fn default() -> Self {
        SynthProfile {
            wind_mean: vec![9.5, 6.5, 6.0],
            wind_swing: 2.0,
            wind_noise: 1.2,
            demand_base: vec![18.0, 34.0, 30.0],
            demand_peak_factor: 1.8,
            demand_peak_slots: vec![2, 5],
            demand_noise: 0.10,
            price_min: 0.19,
            price_max: 0.44,
            price_peak_slot: 5,
        }
    }
}

/// The full input bundle for one simulated grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceBundle {
    pub wind_speed: Vec<TraceSeries>,
    pub demand: Vec<TraceSeries>,
    pub price: TraceSeries,
}

/// Deterministically synthesizes wind, demand, and price traces.
///
/// Same seed, same bundle. Prices stay within the profile's bounds; demand
/// carries a two-peak diurnal shape.
pub fn synth_traces(
    seed: u64,
    days: usize,
    slots_per_day: usize,
    n_mgs: usize,
    profile: &SynthProfile,
) -> Result<TraceBundle> {
    if days == 0 {
        return Err(Error::InvalidParameter("days must be >= 1".into()));
    }
    if slots_per_day == 0 || 24 % slots_per_day != 0 {
        return Err(Error::InvalidParameter(format!(
            "slots_per_day must divide 24, got {slots_per_day}"
        )));
    }
    if profile.price_min <= 0.0 || profile.price_max <= profile.price_min {
        return Err(Error::InvalidParameter(
            "price bounds must satisfy 0 < min < max".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = days * slots_per_day;
    let two_pi = std::f64::consts::TAU;

    let mut wind_speed = Vec::with_capacity(n_mgs);
    for mg in 0..n_mgs {
        let mean = profile.wind_mean[mg % profile.wind_mean.len()];
        let mut values = Vec::with_capacity(total);
        let mut carry = 0.0f64;
        for k in 0..total {
            let slot = k % slots_per_day;
            let diurnal = profile.wind_swing * (two_pi * slot as f64 / slots_per_day as f64).sin();
            carry = 0.7 * carry + profile.wind_noise * (rng.gen::<f64>() * 2.0 - 1.0);
            values.push((mean + diurnal + carry).max(0.0));
        }
        wind_speed.push(TraceSeries::new(
            TraceKind::WindSpeed,
            slots_per_day,
            values,
            Some(mg),
        )?);
    }

    let mut demand = Vec::with_capacity(n_mgs);
    for mg in 0..n_mgs {
        let base = profile.demand_base[mg % profile.demand_base.len()];
        let mut values = Vec::with_capacity(total);
        for k in 0..total {
            let slot = k % slots_per_day;
            let factor = if profile.demand_peak_slots.contains(&slot) {
                profile.demand_peak_factor
            } else {
                1.0
            };
            let noise = 1.0 + profile.demand_noise * (rng.gen::<f64>() * 2.0 - 1.0);
            values.push((base * factor * noise).max(0.0));
        }
        demand.push(TraceSeries::new(
            TraceKind::Demand,
            slots_per_day,
            values,
            Some(mg),
        )?);
    }

    let mid = 0.5 * (profile.price_min + profile.price_max);
    let half = 0.5 * (profile.price_max - profile.price_min);
    let mut price_values = Vec::with_capacity(total);
    for k in 0..total {
        let slot = k % slots_per_day;
        let phase = two_pi * (slot as f64 - profile.price_peak_slot as f64) / slots_per_day as f64;
        let shape = phase.cos(); // 1 at the peak slot
        let noise = 0.15 * half * (rng.gen::<f64>() * 2.0 - 1.0);
        let value = (mid + half * shape * 0.85 + noise).clamp(profile.price_min, profile.price_max);
        price_values.push(value);
    }
    let price = TraceSeries::new(TraceKind::Price, slots_per_day, price_values, None)?;

    Ok(TraceBundle {
        wind_speed,
        demand,
        price,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wind_power_curve_shape() {
        let curve = TurbineCurve::default();
        assert_eq!(wind_power(2.0, &curve), 0.0);
        assert_eq!(wind_power(12.0, &curve), curve.rated_power);
        assert_eq!(wind_power(20.0, &curve), curve.rated_power);
        assert_eq!(wind_power(30.0, &curve), 0.0);
        // cube-root midpoint of the ramp gives half power
        let v = ((curve.cut_in.powi(3) + curve.rated.powi(3)) / 2.0).cbrt();
        assert!((wind_power(v, &curve) - curve.rated_power / 2.0).abs() < 1e-9);
    }

    #[test]
    fn wind_power_monotone_in_operating_band() {
        let curve = TurbineCurve::default();
        let mut prev = 0.0;
        let mut v = 0.0;
        while v < curve.cut_out {
            let p = wind_power(v, &curve);
            assert!(p >= prev - 1e-12, "not monotone at {v}");
            prev = p;
            v += 0.05;
        }
    }

    fn hourly_csv(values: &[f64]) -> String {
        let mut text = String::from("timestamp,value\n");
        for (h, v) in values.iter().enumerate() {
            text.push_str(
                &format!("2000-01-01T00:00:00+00:00,{v}\n")
                    .replace("T00:", &format!("T{:02}:", h % 24)),
            );
        }
        text
    }

    #[test]
    fn hourly_rows_aggregate_to_slots() {
        let values: Vec<f64> = (0..24).map(|h| h as f64).collect();
        let text = hourly_csv(&values);
        let series = parse_trace(&text, TraceKind::Price, 6).unwrap();
        assert_eq!(series.values.len(), 6);
        // slot 0 averages hours 0..3
        assert!((series.values[0] - 1.5).abs() < 1e-12);

        let series = parse_trace(&text, TraceKind::Demand, 6).unwrap();
        assert!((series.values[0] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn negative_value_errors_name_the_row() {
        let text =
            "timestamp,value\n2000-01-01T00:00:00+00:00,1.0\n2000-01-01T01:00:00+00:00,-2.0\n";
        match parse_trace(text, TraceKind::Demand, 6) {
            Err(Error::Trace {
                line: Some(line), ..
            }) => assert_eq!(line, 3),
            other => panic!("expected trace error with line, got {other:?}"),
        }
    }

    #[test]
    fn market_band_prices_survive_ingestion() {
        let values = vec![0.19, 0.25, 0.30, 0.38, 0.44, 0.21];
        let mut text = String::from("timestamp,value\n");
        for (k, v) in values.iter().enumerate() {
            text.push_str(&format!("2000-01-01T{:02}:00:00+00:00,{v}\n", k * 4));
        }
        let series = parse_trace(&text, TraceKind::Price, 6).unwrap();
        assert_eq!(series.values, values);
    }

    #[test]
    fn round_trip_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("demand.csv");
        let series = TraceSeries::new(
            TraceKind::Demand,
            6,
            vec![
                3.25, 1.0, 0.0, 7.5, 2.125, 9.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0,
            ],
            Some(1),
        )
        .unwrap();
        write_trace(&series, &path).unwrap();
        let loaded = load_trace(&path, TraceKind::Demand, 6).unwrap();
        assert_eq!(loaded, series);
    }

    #[test]
    fn estimate_is_the_same_slot_mean() {
        let series = TraceSeries::new(
            TraceKind::Demand,
            3,
            vec![1.0, 4.0, 2.0, 1.0, 6.0, 2.0],
            None,
        )
        .unwrap();
        // constant slot stays constant
        assert_eq!(estimate_at(&series, 2, 0, 7).unwrap(), 1.0);
        // two days with 4 and 6 at slot 1 average to 5
        assert_eq!(estimate_at(&series, 2, 1, 7).unwrap(), 5.0);
        assert!(estimate_at(&series, 0, 0, 7).is_err());
    }

    #[test]
    fn estimate_uses_only_the_trailing_window() {
        let mut values = Vec::new();
        for day in 0..10 {
            values.push(day as f64);
            values.push(100.0);
        }
        let series = TraceSeries::new(TraceKind::Demand, 2, values, None).unwrap();
        let est = estimate_at(&series, 10, 0, 7).unwrap();
        let expected: f64 = (3..10).map(|d| d as f64).sum::<f64>() / 7.0;
        assert!((est - expected).abs() < 1e-12);
    }

    #[test]
    fn sample_actual_degenerate_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let certain = StochasticModel::new(1.0, 10.0).unwrap();
        let no_spread = StochasticModel::new(0.3, 0.0).unwrap();
        for _ in 0..100 {
            assert_eq!(sample_actual(20.0, &certain, &mut rng), (20.0, false));
            assert_eq!(sample_actual(20.0, &no_spread, &mut rng), (20.0, false));
        }
    }

    #[test]
    fn sample_actual_frequencies_concentrate() {
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let model = StochasticModel::new(0.8, 10.0).unwrap();
        let n = 100_000usize;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            let (v, clamped) = sample_actual(50.0, &model, &mut rng);
            assert!(!clamped);
            if v == 50.0 {
                counts[0] += 1;
            } else if v == 40.0 {
                counts[1] += 1;
            } else if v == 60.0 {
                counts[2] += 1;
            } else {
                panic!("unexpected draw {v}");
            }
        }
        // three-sigma binomial bounds around (0.8, 0.1, 0.1)
        for (count, p) in counts.iter().zip([0.8, 0.1, 0.1]) {
            let sigma = (n as f64 * p * (1.0 - p)).sqrt();
            assert!(
                ((*count as f64) - n as f64 * p).abs() <= 3.0 * sigma,
                "count {count} too far from {}",
                n as f64 * p
            );
        }
    }

    #[test]
    fn sample_actual_clamps_negative_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let model = StochasticModel::new(0.0, 10.0).unwrap();
        let mut clamps = 0;
        for _ in 0..200 {
            let (v, clamped) = sample_actual(2.0, &model, &mut rng);
            assert!(v == 0.0 || v == 12.0);
            if clamped {
                assert_eq!(v, 0.0);
                clamps += 1;
            }
        }
        assert!(clamps > 0);
    }

    #[test]
    fn synth_is_deterministic_per_seed() {
        let profile = SynthProfile::default();
        let a = synth_traces(9, 4, 6, 3, &profile).unwrap();
        let b = synth_traces(9, 4, 6, 3, &profile).unwrap();
        assert_eq!(a, b);
        let c = synth_traces(10, 4, 6, 3, &profile).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn synth_prices_stay_in_range() {
        let profile = SynthProfile::default();
        let bundle = synth_traces(1, 20, 6, 3, &profile).unwrap();
        for v in &bundle.price.values {
            assert!(*v >= 0.19 && *v <= 0.44, "price {v} out of range");
        }
    }

    #[test]
    fn synth_demand_peaks_exceed_off_peak() {
        let profile = SynthProfile::default();
        let bundle = synth_traces(2, 30, 6, 3, &profile).unwrap();
        for series in &bundle.demand {
            let mut slot_means = vec![0.0; 6];
            for day in 0..series.days() {
                for slot in 0..6 {
                    slot_means[slot] += series.value(day, slot) / series.days() as f64;
                }
            }
            let peak_min = profile
                .demand_peak_slots
                .iter()
                .map(|&s| slot_means[s])
                .fold(f64::INFINITY, f64::min);
            let off_max = (0..6)
                .filter(|s| !profile.demand_peak_slots.contains(s))
                .map(|s| slot_means[s])
                .fold(0.0, f64::max);
            assert!(peak_min > off_max);
        }
    }
}
