use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wavelet::Reconstruction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectedEvent {
    /// Bin of largest magnitude.
    pub bin: usize,
    /// First and last significant bins of the event.
    pub first_bin: usize,
    pub last_bin: usize,
    pub polarity: i8,
    /// Absolute field value at `bin`, microtesla.
    pub peak_ut: f64,
}

/// Grouping and polarity rules for [`EventDetector::detect`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventDetector {
    /// A bin is significant when `|value| >= threshold_sigma * sigma`.
    pub threshold_sigma: f64,
    /// Sub-threshold bins tolerated inside one event; 0 merges only
    /// directly adjacent bins.
    pub merge_gap: usize,
    /// When set, an event's polarity is the sign of its earliest
    /// significant bin reaching this fraction of the event peak, instead
    /// of the sign of the peak itself.
    pub lead_fraction: Option<f64>,
}

impl EventDetector {
    pub fn new(threshold_sigma: f64) -> Self {
        Self {
            threshold_sigma,
            merge_gap: 0,
            lead_fraction: None,
        }
    }

    /// Settings for biphasic pulses seen through Haar orders
    /// `coarsest..=order` only.
    ///
    /// Dropping the orders below `coarsest` subtracts the block mean over
    /// `2^(order - coarsest + 1)` bins, which leaves opposite-sign side lobes
    /// across the whole block; the merge gap spans that block. The leading
    /// lobe of a biphasic pulse is narrower than its trailing lobe but holds
    /// the same area, so when it straddles a bin edge the trailing lobe can
    /// hold the largest bin. Polarity is therefore read from the earliest
    /// bin reaching 60% of the peak.
    pub fn biphasic(threshold_sigma: f64, coarsest: u32, order: u32) -> Self {
        let block = 1usize << (order.saturating_sub(coarsest) + 1);
        Self {
            threshold_sigma,
            merge_gap: block - 1,
            lead_fraction: Some(0.6),
        }
    }

    pub fn with_merge_gap(mut self, merge_gap: usize) -> Self {
        self.merge_gap = merge_gap;
        self
    }

    pub fn with_lead_fraction(mut self, fraction: Option<f64>) -> Self {
        self.lead_fraction = fraction;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.threshold_sigma >= 0.0 && self.threshold_sigma.is_finite()) {
            return Err(Error::Config(format!(
                "threshold must be non-negative, got {}",
                self.threshold_sigma
            )));
        }
        if let Some(f) = self.lead_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Config(format!("lead fraction must lie in (0, 1], got {f}")));
            }
        }
        Ok(())
    }

    /// Find significant excursions in a reconstruction.
    ///
    /// Significant bins no more than `merge_gap` quiet bins apart form one
    /// event, located at its largest-magnitude bin (lowest index on ties).
    /// A zero sigma marks an exact value: any non-zero value there is
    /// significant.
    pub fn detect(&self, recon: &Reconstruction) -> Result<EventDetection> {
        self.validate()?;
        if let Some(k) = recon.sigmas().iter().position(|s| !(*s >= 0.0)) {
            return Err(Error::Config(format!(
                "invalid uncertainty {} at bin {k}",
                recon.sigmas()[k]
            )));
        }
        let points = recon.points();
        let significant = |k: usize| {
            let v = points[k];
            v != 0.0 && v.abs() >= self.threshold_sigma * recon.sigmas()[k]
        };

        let mut events = Vec::new();
        let n = recon.len();
        let mut k = 0;
        while k < n {
            if !significant(k) {
                k += 1;
                continue;
            }
            let first = k;
            let mut best = k;
            let mut last = k;
            while k < n && k - last <= self.merge_gap + 1 {
                if significant(k) {
                    if points[k].abs() > points[best].abs() {
                        best = k;
                    }
                    last = k;
                }
                k += 1;
            }
            k = last + 1;

            let peak = points[best].abs();
            let sign_bin = match self.lead_fraction {
                None => best,
                Some(f) => (first..=last)
                    .find(|&j| significant(j) && points[j].abs() >= f * peak)
                    .unwrap_or(best),
            };
            events.push(DetectedEvent {
                bin: best,
                first_bin: first,
                last_bin: last,
                polarity: if points[sign_bin] > 0.0 { 1 } else { -1 },
                peak_ut: peak,
            });
        }
        Ok(EventDetection {
            events,
            detector: *self,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventDetection {
    pub events: Vec<DetectedEvent>,
    pub detector: EventDetector,
}

/// Events at `threshold_sigma` with adjacent-bin merging and the peak's
/// sign as polarity.
pub fn detect_events(recon: &Reconstruction, threshold_sigma: f64) -> Result<EventDetection> {
    EventDetector::new(threshold_sigma).detect(recon)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn recon(points: Vec<f64>) -> Reconstruction {
        let n = points.len();
        Reconstruction::new(6, points, vec![1.0; n]).unwrap()
    }

    #[test]
    fn zero_reconstruction_has_no_events() {
        let d = detect_events(&recon(vec![0.0; 64]), 5.0).unwrap();
        assert!(d.events.is_empty());
    }

    #[test]
    fn single_peak() {
        let mut p = vec![0.0; 64];
        p[17] = -10.0;
        let d = detect_events(&recon(p), 5.0).unwrap();
        assert_eq!(
            d.events,
            vec![DetectedEvent {
                bin: 17,
                first_bin: 17,
                last_bin: 17,
                polarity: -1,
                peak_ut: 10.0
            }]
        );
    }

    #[test]
    fn adjacent_bins_merge_and_ties_take_lower_index() {
        let mut p = vec![0.0; 16];
        p[4] = 6.0;
        p[5] = -8.0;
        p[6] = 8.0;
        p[10] = 7.0;
        let d = detect_events(&recon(p), 5.0).unwrap();
        assert_eq!(d.events.len(), 2);
        assert_eq!(d.events[0].bin, 5);
        assert_eq!((d.events[0].first_bin, d.events[0].last_bin), (4, 6));
        assert_eq!(d.events[0].polarity, -1);
        assert_eq!(d.events[1].bin, 10);
    }

    #[test]
    fn gap_merges_lobes_across_quiet_bins() {
        let mut p = vec![0.0; 16];
        p[3] = 9.0;
        p[4] = -1.0;
        p[5] = -7.0;
        p[9] = 6.0;
        let strict = EventDetector::new(5.0);
        assert_eq!(strict.detect(&recon(p.clone())).unwrap().events.len(), 3);
        let d = strict.with_merge_gap(1).detect(&recon(p.clone())).unwrap();
        assert_eq!(d.events.len(), 2);
        assert_eq!((d.events[0].bin, d.events[0].polarity), (3, 1));
        assert_eq!(d.events[1].bin, 9);
        assert_eq!(strict.with_merge_gap(3).detect(&recon(p)).unwrap().events.len(), 1);
    }

    #[test]
    fn lead_fraction_reads_the_leading_lobe() {
        // Leading lobe split over two bins, trailing lobe concentrated.
        let p = vec![0.0, -2.0, 6.0, 6.0, -9.0, -3.0, 0.0, 0.0];
        let peak_sign = EventDetector::new(1.5).detect(&recon(p.clone())).unwrap();
        assert_eq!(peak_sign.events[0].polarity, -1);
        let lead = EventDetector::new(1.5)
            .with_lead_fraction(Some(0.6))
            .detect(&recon(p))
            .unwrap();
        assert_eq!(lead.events.len(), 1);
        assert_eq!((lead.events[0].bin, lead.events[0].polarity), (4, 1));
    }

    #[test]
    fn biphasic_gap_spans_the_coarsest_block() {
        assert_eq!(EventDetector::biphasic(5.0, 5, 6).merge_gap, 3);
        assert_eq!(EventDetector::biphasic(5.0, 5, 5).merge_gap, 1);
    }

    #[test]
    fn exact_values_need_only_be_non_zero() {
        let r = Reconstruction::new(2, vec![0.0, 0.0, 1e-9, 0.0], vec![0.0; 4]).unwrap();
        let d = detect_events(&r, 3.0).unwrap();
        assert_eq!(d.events.len(), 1);
        assert_eq!(d.events[0].bin, 2);
        assert!(detect_events(&r, f64::NAN).is_err());
        assert!(EventDetector::new(1.0).with_lead_fraction(Some(0.0)).detect(&r).is_err());
    }
}
