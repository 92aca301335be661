//! Point-process realizations.

use serde::{Deserialize, Serialize};

use crate::domain::ObservationDomain;
use crate::error::{Error, Result};

/// One realization of a finite point process: ordered event times, optional
/// planar locations, optional integer marks (event types, 1-based).
///
/// Purely planar processes are stored with a monotone time key (a shifted
/// copy of the first coordinate) so that one representation serves temporal,
/// spatio-temporal, and planar families alike; the planar families read event
/// coordinates exclusively from `locs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSequence {
    /// Event times, strictly increasing, inside `(0, t_max)`.
    #[serde(rename = "t")]
    pub times: Vec<f64>,
    /// Planar locations, one per event, inside the spatial rectangle.
    #[serde(rename = "s", skip_serializing_if = "Option::is_none", default)]
    pub locs: Option<Vec<[f64; 2]>>,
    /// Event types in `{1..n_marks}`.
    #[serde(rename = "k", skip_serializing_if = "Option::is_none", default)]
    pub marks: Option<Vec<usize>>,
    /// Set by simulators that hit their event cap; diagnostic only, not
    /// serialized into the dataset wire format.
    #[serde(skip)]
    pub truncated: bool,
}

impl PointSequence {
    pub fn new(times: Vec<f64>) -> Self {
        PointSequence { times, locs: None, marks: None, truncated: false }
    }

    pub fn with_locs(times: Vec<f64>, locs: Vec<[f64; 2]>) -> Self {
        PointSequence { times, locs: Some(locs), marks: None, truncated: false }
    }

    pub fn with_marks(times: Vec<f64>, marks: Vec<usize>) -> Self {
        PointSequence { times, locs: None, marks: Some(marks), truncated: false }
    }

    /// Number of events.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Time of the previous event, with the convention t₀ = 0.
    /// `n` may be `len()` to address the censored tail interval `(t_N, T)`.
    pub fn t_prev(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            self.times[n - 1]
        }
    }

    /// Location of event `n`; configuration error when locations are absent.
    pub fn loc(&self, n: usize) -> Result<[f64; 2]> {
        self.locs
            .as_ref()
            .map(|l| l[n])
            .ok_or_else(|| Error::Config("sequence has no locations".into()))
    }

    /// Zero-based mark of event `n`; 0 when the process is unmarked.
    pub fn mark0(&self, n: usize) -> usize {
        self.marks.as_ref().map(|m| m[n] - 1).unwrap_or(0)
    }

    /// Check every domain invariant, reporting `seq_index` in errors.
    pub fn validate(&self, domain: &ObservationDomain, seq_index: usize) -> Result<()> {
        let fail = |reason: String| Err(Error::DomainViolation { seq_index, reason });
        let mut prev = 0.0;
        for (i, &t) in self.times.iter().enumerate() {
            if !t.is_finite() {
                return fail(format!("event {i}: non-finite time {t}"));
            }
            if t <= prev {
                return fail(format!(
                    "event {i}: time {t} not strictly greater than predecessor {prev}"
                ));
            }
            if t >= domain.t_max {
                return fail(format!("event {i}: time {t} outside (0, {})", domain.t_max));
            }
            prev = t;
        }
        match (&self.locs, &domain.space) {
            (Some(locs), Some(rect)) => {
                if locs.len() != self.times.len() {
                    return fail(format!(
                        "{} locations for {} events",
                        locs.len(),
                        self.times.len()
                    ));
                }
                for (i, s) in locs.iter().enumerate() {
                    if !(s[0].is_finite() && s[1].is_finite()) || !rect.contains(*s) {
                        return fail(format!("event {i}: location {s:?} outside {rect:?}"));
                    }
                }
            }
            (Some(_), None) => return fail("locations present but domain has no space".into()),
            (None, Some(_)) => {
                if !self.times.is_empty() {
                    return fail("domain has a spatial window but sequence has no locations".into());
                }
            }
            (None, None) => {}
        }
        match (&self.marks, domain.n_marks) {
            (Some(marks), k) => {
                if k < 2 {
                    return fail("marks present on an unmarked domain".into());
                }
                if marks.len() != self.times.len() {
                    return fail(format!("{} marks for {} events", marks.len(), self.times.len()));
                }
                for (i, &m) in marks.iter().enumerate() {
                    if m == 0 || m > k {
                        return fail(format!("event {i}: mark {m} outside 1..={k}"));
                    }
                }
            }
            (None, k) if k > 1 => {
                if !self.times.is_empty() {
                    return fail(format!("domain declares {k} mark types but sequence has no marks"));
                }
            }
            (None, _) => {}
        }
        Ok(())
    }
}
