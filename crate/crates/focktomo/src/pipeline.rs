//! Pulsed-trace ingestion: threshold classification of detector peaks,
//! afterpulse veto for two-photon heralds, shot-noise calibration, and
//! quadrature extraction.
//!
//! Input events carry one peak voltage and one homodyne voltage per pulse
//! slot, the single sample each instrument contributes per pulse. Extracted
//! quadratures are normalized so the vacuum variance is 1/2, matching the
//! simulator convention, so tomography consumes either source unchanged.

pub mod synth;

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::homodyne::QuadratureRecord;

/// One pulse slot of a trigger: detector peak voltage and the homodyne
/// voltage at the slot's designated sample time. Volts throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub slot: u32,
    pub snspd_peak: f64,
    pub hd_value: f64,
}

/// One trigger's raw data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub trigger_id: u64,
    pub slots: Vec<SlotRecord>,
}

/// Peak-voltage thresholds separating zero-, one- and two-photon readouts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ThresholdJson", into = "ThresholdJson")]
pub struct ThresholdConfig {
    v1: f64,
    v2: f64,
}

#[derive(Serialize, Deserialize)]
struct ThresholdJson {
    v1: f64,
    v2: f64,
}

impl TryFrom<ThresholdJson> for ThresholdConfig {
    type Error = Error;

    fn try_from(j: ThresholdJson) -> Result<Self> {
        ThresholdConfig::new(j.v1, j.v2)
    }
}

impl From<ThresholdConfig> for ThresholdJson {
    fn from(c: ThresholdConfig) -> Self {
        ThresholdJson { v1: c.v1, v2: c.v2 }
    }
}

impl ThresholdConfig {
    pub fn new(v1: f64, v2: f64) -> Result<Self> {
        if !(v1.is_finite() && v2.is_finite() && 0.0 < v1 && v1 < v2) {
            return Err(Error::domain(format!(
                "thresholds must satisfy 0 < v1 < v2, got v1 = {v1}, v2 = {v2}"
            )));
        }
        Ok(ThresholdConfig { v1, v2 })
    }

    pub fn v1(&self) -> f64 {
        self.v1
    }

    pub fn v2(&self) -> f64 {
        self.v2
    }
}

/// Photon-number class of one peak voltage. Boundaries are inclusive upward:
/// a peak exactly at a threshold takes the higher class.
pub fn classify_pnr(peak: f64, cfg: &ThresholdConfig) -> u8 {
    if peak >= cfg.v2 {
        2
    } else if peak >= cfg.v1 {
        1
    } else {
        0
    }
}

/// Classes for every slot of an event, in slot order.
pub fn classify_event(event: &TraceEvent, cfg: &ThresholdConfig) -> Vec<u8> {
    event.slots.iter().map(|s| classify_pnr(s.snspd_peak, cfg)).collect()
}

/// Afterpulse veto over one time-ordered class stream.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VetoOutcome {
    /// Positions (stream indices) of kept two-photon slots.
    pub kept: Vec<usize>,
    /// Two-photon slots removed because a detection preceded them.
    pub removed: usize,
    /// Kept positions that had fewer than `window` slots of history. Start-of-
    /// record heralds are kept but flagged rather than silently dropped, which
    /// would bias counts.
    pub truncated_history: Vec<usize>,
}

/// Keep a two-photon slot only if the preceding `window` slots all read zero.
///
/// A detection in the slots just before a two-photon readout can superimpose
/// an offset that misidentifies a single photon as two, so those events are
/// removed rather than corrected.
pub fn veto_two_photon_events(classes: &[u8], window: usize) -> VetoOutcome {
    let mut out = VetoOutcome::default();
    for (i, &class) in classes.iter().enumerate() {
        if class != 2 {
            continue;
        }
        let available = i.min(window);
        let clean = classes[i - available..i].iter().all(|&c| c == 0);
        if !clean {
            out.removed += 1;
            continue;
        }
        out.kept.push(i);
        if available < window {
            out.truncated_history.push(i);
        }
    }
    out
}

/// Default veto lookback, in pulse slots.
pub const DEFAULT_VETO_WINDOW: usize = 2;

/// Shot-noise reference from a vacuum (blocked-signal) dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotNoiseCalibration {
    pub mean_v: f64,
    pub sigma_v: f64,
}

/// Minimum number of vacuum samples accepted for calibration.
pub const MIN_CALIBRATION_SAMPLES: usize = 100;

/// Sample mean and standard deviation of vacuum homodyne voltages.
pub fn calibrate_shot_noise(hd_values: &[f64]) -> Result<ShotNoiseCalibration> {
    if hd_values.len() < MIN_CALIBRATION_SAMPLES {
        return Err(Error::domain(format!(
            "insufficient calibration data: {} values, need at least {MIN_CALIBRATION_SAMPLES}",
            hd_values.len()
        )));
    }
    if let Some(bad) = hd_values.iter().find(|v| !v.is_finite()) {
        return Err(Error::domain(format!("non-finite calibration value {bad}")));
    }
    let n = hd_values.len() as f64;
    let mean_v = hd_values.iter().sum::<f64>() / n;
    let var = hd_values.iter().map(|v| (v - mean_v) * (v - mean_v)).sum::<f64>() / (n - 1.0);
    let sigma_v = var.sqrt();
    // Round-off on a constant input leaves a sigma of ~1e-17 |mean|; anything
    // that many orders below the mean is degenerate, not shot noise.
    if !(sigma_v > 1e-12 * mean_v.abs()) || sigma_v == 0.0 {
        return Err(Error::domain("calibration data has (near-)zero variance"));
    }
    Ok(ShotNoiseCalibration { mean_v, sigma_v })
}

impl ShotNoiseCalibration {
    /// Volts to shot-noise quadrature units: x = (v - mean) / (σ √2).
    ///
    /// The √2 maps the calibration's unit variance onto the vacuum-variance-
    /// 1/2 convention shared with the simulator.
    pub fn normalize(&self, volts: f64) -> f64 {
        (volts - self.mean_v) / (self.sigma_v * std::f64::consts::SQRT_2)
    }

    pub fn to_json_string(&self) -> String {
        crate::jsonfmt::to_file_string(self).expect("calibration serialization cannot fail")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cal: ShotNoiseCalibration =
            serde_json::from_str(s).map_err(|e| Error::parse(None, format!("bad calibration JSON: {e}")))?;
        if !(cal.sigma_v > 0.0) || !cal.mean_v.is_finite() {
            return Err(Error::domain(format!(
                "calibration must have sigma_v > 0, got mean_v = {}, sigma_v = {}",
                cal.mean_v, cal.sigma_v
            )));
        }
        Ok(cal)
    }
}

/// Which slots become quadrature records.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeraldFilter {
    /// Emit only slots classified exactly this value.
    pub herald_n: u8,
    /// Veto lookback; applied only when `herald_n == 2`.
    pub veto_window: usize,
}

/// Extraction result: records plus veto accounting.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Extraction {
    pub records: Vec<QuadratureRecord>,
    pub vetoed: usize,
    pub truncated_history: usize,
}

/// Normalized quadratures of every slot passing the herald filter (and the
/// afterpulse veto, for two-photon heralds).
///
/// Records carry the slot's class as the herald tag and θ = 0; phase is not
/// tracked by the trace format. Event and slot order is preserved, so equal
/// inputs produce byte-identical output.
pub fn extract_quadratures(
    events: &[TraceEvent],
    cal: &ShotNoiseCalibration,
    thresholds: &ThresholdConfig,
    filter: &HeraldFilter,
) -> Extraction {
    let mut out = Extraction::default();
    for event in events {
        let classes = classify_event(event, thresholds);
        if filter.herald_n == 2 {
            let veto = veto_two_photon_events(&classes, filter.veto_window);
            out.vetoed += veto.removed;
            out.truncated_history += veto.truncated_history.len();
            for &pos in &veto.kept {
                let slot = &event.slots[pos];
                out.records.push(QuadratureRecord {
                    x: cal.normalize(slot.hd_value),
                    theta: 0.0,
                    herald_n: 2,
                    slot: slot.slot as u64,
                });
            }
        } else {
            for (pos, &class) in classes.iter().enumerate() {
                if class == filter.herald_n {
                    let slot = &event.slots[pos];
                    out.records.push(QuadratureRecord {
                        x: cal.normalize(slot.hd_value),
                        theta: 0.0,
                        herald_n: class as u32,
                        slot: slot.slot as u64,
                    });
                }
            }
        }
    }
    out
}

/// Per-slot sample variance of normalized quadratures across events,
/// sorted by slot index. Slots seen fewer than twice are skipped.
pub fn slot_variance_profile(
    events: &[TraceEvent],
    cal: &ShotNoiseCalibration,
) -> Result<Vec<(u32, f64)>> {
    if events.len() < 2 {
        return Err(Error::domain(format!(
            "slot variance needs at least 2 events, got {}",
            events.len()
        )));
    }
    let mut by_slot: std::collections::BTreeMap<u32, Vec<f64>> = std::collections::BTreeMap::new();
    for event in events {
        for slot in &event.slots {
            by_slot.entry(slot.slot).or_default().push(cal.normalize(slot.hd_value));
        }
    }
    Ok(by_slot
        .into_iter()
        .filter(|(_, xs)| xs.len() >= 2)
        .map(|(slot, xs)| {
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
            (slot, var)
        })
        .collect())
}

/// Parse JSON-lines trace events, one `TraceEvent` per line.
pub fn read_events_jsonl<R: BufRead>(r: R) -> Result<Vec<TraceEvent>> {
    let mut events = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event: TraceEvent = serde_json::from_str(&line)
            .map_err(|e| Error::parse(Some(i + 1), format!("bad trace event: {e}")))?;
        events.push(event);
    }
    Ok(events)
}

/// Serialize trace events as JSON lines.
pub fn write_events_jsonl<W: Write>(mut w: W, events: &[TraceEvent]) -> Result<()> {
    for event in events {
        let line = crate::jsonfmt::to_string(event)?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}
