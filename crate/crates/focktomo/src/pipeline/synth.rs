//! Synthetic trace-event corpora.
//!
//! Generates trigger records with a planted signal state in one pulse slot,
//! vacuum elsewhere, and optional contamination detections in the slots
//! preceding the herald: the structure needed to exercise calibration,
//! extraction, variance profiles and the afterpulse veto end to end.

use rand::Rng;

use super::{SlotRecord, ThresholdConfig, TraceEvent};
use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::fock::DensityMatrix;
use crate::homodyne::QuadratureSampler;

#[derive(Debug, Clone)]
pub struct CorpusSpec {
    pub triggers: usize,
    pub slots_per_trigger: usize,
    /// Slot carrying the planted signal state and herald peak.
    pub herald_slot: usize,
    /// Detector class planted at the herald slot (0, 1 or 2).
    pub herald_class: u8,
    /// Per-slot probability of a single-photon detection in the slots before
    /// the herald slot.
    pub contamination: f64,
    /// State whose quadratures fill the herald slot; all others are vacuum.
    pub signal: DensityMatrix,
    pub thresholds: ThresholdConfig,
    /// Volt conversion: v = mean_v + x σ_v √2, so vacuum voltages come out
    /// Gaussian with mean `mean_v` and standard deviation `sigma_v`.
    pub mean_v: f64,
    pub sigma_v: f64,
}

/// What the generator actually planted, for exact cross-checks.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusTruth {
    /// Per trigger: slot indices that received a contamination detection.
    pub contaminated: Vec<Vec<u32>>,
}

impl CorpusTruth {
    /// Triggers with a contamination detection within `window` slots before
    /// the herald slot: exactly the events the veto must remove.
    pub fn contaminated_within(&self, herald_slot: usize, window: usize) -> usize {
        let lo = herald_slot.saturating_sub(window) as u32;
        let hi = herald_slot as u32;
        self.contaminated
            .iter()
            .filter(|slots| slots.iter().any(|&s| s >= lo && s < hi))
            .count()
    }
}

/// Expected veto removals for a corpus under a given lookback window.
pub fn expected_vetoes(spec: &CorpusSpec, window: usize) -> f64 {
    let exposed = window.min(spec.herald_slot) as i32;
    spec.triggers as f64 * (1.0 - (1.0 - spec.contamination).powi(exposed))
}

fn peak_for_class(class: u8, thresholds: &ThresholdConfig) -> f64 {
    match class {
        0 => 0.0,
        1 => 0.5 * (thresholds.v1() + thresholds.v2()),
        _ => 1.5 * thresholds.v2(),
    }
}

/// Generate a corpus; deterministic in `seed` for both execution engines.
pub fn generate(spec: &CorpusSpec, seed: u64, exec: Exec) -> Result<(Vec<TraceEvent>, CorpusTruth)> {
    if spec.herald_slot >= spec.slots_per_trigger {
        return Err(Error::domain(format!(
            "herald slot {} outside the {} slots per trigger",
            spec.herald_slot, spec.slots_per_trigger
        )));
    }
    if !(0.0..=1.0).contains(&spec.contamination) {
        return Err(Error::domain(format!(
            "contamination probability {} outside [0, 1]",
            spec.contamination
        )));
    }
    if spec.herald_class > 2 {
        return Err(Error::domain(format!("herald class {} not in {{0, 1, 2}}", spec.herald_class)));
    }
    if !(spec.sigma_v > 0.0) {
        return Err(Error::domain("sigma_v must be positive"));
    }

    let signal_sampler = QuadratureSampler::new(&spec.signal, 0.0);
    let vacuum_sampler =
        QuadratureSampler::new(&DensityMatrix::vacuum(spec.signal.cutoff()), 0.0);
    let to_volts = |x: f64| spec.mean_v + x * spec.sigma_v * std::f64::consts::SQRT_2;

    let parts = exec.map_blocks(spec.triggers, exec::BLOCK_LEN, |b, range| {
        let mut rng = exec::stream_rng(seed, exec::STREAM_SYNTH_BASE + b as u64);
        let mut events = Vec::with_capacity(range.len());
        let mut contaminated = Vec::with_capacity(range.len());
        for trigger in range {
            // Fixed draw order per trigger: contamination flags first, then
            // one quadrature per slot.
            let hits: Vec<u32> = (0..spec.herald_slot as u32)
                .filter(|_| rng.random::<f64>() < spec.contamination)
                .collect();
            let slots = (0..spec.slots_per_trigger)
                .map(|s| {
                    let u = rng.random::<f64>();
                    let (x, class) = if s == spec.herald_slot {
                        (signal_sampler.sample(u), spec.herald_class)
                    } else if hits.contains(&(s as u32)) {
                        (vacuum_sampler.sample(u), 1)
                    } else {
                        (vacuum_sampler.sample(u), 0)
                    };
                    SlotRecord {
                        slot: s as u32,
                        snspd_peak: peak_for_class(class, &spec.thresholds),
                        hd_value: to_volts(x),
                    }
                })
                .collect();
            events.push(TraceEvent { trigger_id: trigger as u64, slots });
            contaminated.push(hits);
        }
        (events, contaminated)
    });

    let mut events = Vec::with_capacity(spec.triggers);
    let mut contaminated = Vec::with_capacity(spec.triggers);
    for (ev, co) in parts {
        events.extend(ev);
        contaminated.extend(co);
    }
    Ok((events, CorpusTruth { contaminated }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockCutoff;
    use crate::pipeline::{classify_event, veto_two_photon_events};

    fn spec() -> CorpusSpec {
        CorpusSpec {
            triggers: 2000,
            slots_per_trigger: 6,
            herald_slot: 3,
            herald_class: 2,
            contamination: 0.05,
            signal: DensityMatrix::fock(2, FockCutoff::new(4)).unwrap(),
            thresholds: ThresholdConfig::new(0.2, 0.5).unwrap(),
            mean_v: 0.003,
            sigma_v: 0.18,
        }
    }

    #[test]
    fn veto_removals_match_planted_contamination_exactly() {
        let spec = spec();
        let (events, truth) = generate(&spec, 31, Exec::default()).unwrap();
        let mut removed = 0;
        for event in &events {
            let classes = classify_event(event, &spec.thresholds);
            removed += veto_two_photon_events(&classes, 2).removed;
        }
        assert_eq!(removed, truth.contaminated_within(spec.herald_slot, 2));
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = spec();
        let a = generate(&spec, 5, Exec::default()).unwrap();
        let b = generate(&spec, 5, Exec::default()).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn engines_generate_identical_corpora() {
        let spec = spec();
        let seq = generate(&spec, 6, Exec::Sequential).unwrap();
        let par = generate(&spec, 6, Exec::Parallel).unwrap();
        assert_eq!(seq.0, par.0);
    }

    #[test]
    fn spec_validation() {
        let mut s = spec();
        s.herald_slot = 6;
        assert!(generate(&s, 1, Exec::default()).is_err());
        let mut s = spec();
        s.contamination = 1.5;
        assert!(generate(&s, 1, Exec::default()).is_err());
    }
}
