//! Defect profiles: finite, falsifiable stand-ins for "vanishes at infinity".
//!
//! A profile records a defect value per scale (escape radius, mode cutoff,
//! boundary resolution, ray index). It decays at scale when it is
//! nonincreasing along the schedule and its final value is below the
//! tolerance. Scales skipped for lack of data are flagged and make the
//! verdict inconclusive instead of false.

use std::fmt;

/// Default decay tolerance.
pub const DEFAULT_TOLERANCE: f64 = 1e-2;

/// Default escape-radius schedule: 2, 4, ..., 128.
pub fn default_radii() -> Vec<f64> {
    (1..=7).map(|k| f64::from(1u32 << k)).collect()
}

/// Three-valued verdict. Window-limited results are `Inconclusive`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }

    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileEntry {
    pub scale: f64,
    /// `None` when the scale had no data (for instance an empty annulus).
    pub defect: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefectProfile {
    pub label: String,
    pub entries: Vec<ProfileEntry>,
    pub tolerance: f64,
}

impl DefectProfile {
    pub fn new(label: impl Into<String>, tolerance: f64) -> Self {
        DefectProfile {
            label: label.into(),
            entries: Vec::new(),
            tolerance,
        }
    }

    pub fn push(&mut self, scale: f64, defect: f64) {
        self.entries.push(ProfileEntry {
            scale,
            defect: Some(defect),
        });
    }

    pub fn push_skipped(&mut self, scale: f64) {
        self.entries.push(ProfileEntry {
            scale,
            defect: None,
        });
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn scales(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.scale).collect()
    }

    /// Defects of the non-skipped entries, in schedule order.
    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().filter_map(|e| e.defect).collect()
    }

    pub fn defect_at(&self, scale: f64) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.scale == scale)
            .and_then(|e| e.defect)
    }

    pub fn final_defect(&self) -> Option<f64> {
        self.entries.iter().rev().find_map(|e| e.defect)
    }

    pub fn has_skipped(&self) -> bool {
        self.entries.iter().any(|e| e.defect.is_none())
    }

    /// Nonincreasing along the schedule, up to rounding slack.
    pub fn is_monotone_nonincreasing(&self) -> bool {
        self.values()
            .windows(2)
            .all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-15)
    }

    /// Decay ratio `defect[i] / defect[i+1]` between consecutive entries.
    pub fn decay_ratios(&self) -> Vec<f64> {
        self.values().windows(2).map(|w| w[0] / w[1]).collect()
    }

    pub fn verdict(&self) -> Verdict {
        let Some(last) = self.final_defect() else {
            return Verdict::Inconclusive;
        };
        if self.is_monotone_nonincreasing() && last < self.tolerance {
            Verdict::Pass
        } else if self.has_skipped() {
            Verdict::Inconclusive
        } else {
            Verdict::Fail
        }
    }

    /// Rows `scale, defect, verdict`; the per-row verdict compares the row
    /// defect against the tolerance.
    pub fn csv_rows(&self) -> Vec<[String; 3]> {
        self.entries
            .iter()
            .map(|e| match e.defect {
                Some(d) => [
                    fmt_f64(e.scale),
                    fmt_f64(d),
                    Verdict::from_bool(d < self.tolerance).to_string(),
                ],
                None => [
                    fmt_f64(e.scale),
                    String::new(),
                    Verdict::Inconclusive.to_string(),
                ],
            })
            .collect()
    }

    /// CSV text with a `radius,defect,verdict` header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("radius,defect,verdict\n");
        for [a, b, c] in self.csv_rows() {
            s.push_str(&format!("{a},{b},{c}\n"));
        }
        s
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
