//! Temporal interval geometry and fake-proposal augmentation.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Fractional boundary offsets used when none are configured.
pub const DEFAULT_OFFSETS: [f64; 7] = [-0.2, -0.1, -0.05, 0.0, 0.05, 0.1, 0.2];

/// A temporal interval `[start, end]` in seconds with `start < end`.
///
/// Serialized as a two-element array, matching the `"segment"` field of the
/// annotation and submission files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Segment {
    start: f64,
    end: f64,
}

impl Segment {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if start.is_finite() && end.is_finite() && start < end {
            Ok(Segment { start, end })
        } else {
            Err(Error::InvalidSegment { start, end })
        }
    }

    #[inline]
    pub fn start(&self) -> f64 {
        self.start
    }

    #[inline]
    pub fn end(&self) -> f64 {
        self.end
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    pub fn intersection(&self, other: &Segment) -> f64 {
        (self.end.min(other.end) - self.start.max(other.start)).max(0.0)
    }

    /// Temporal intersection over union, in `[0, 1]`.
    pub fn tiou(&self, other: &Segment) -> f64 {
        let inter = self.intersection(other);
        if inter <= 0.0 {
            return 0.0;
        }
        let union = self.length() + other.length() - inter;
        (inter / union).min(1.0)
    }

    /// Clips both boundaries to `[0, duration]`.
    pub fn clamp(&self, duration: f64) -> Result<Segment> {
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "duration must be positive and finite, got {duration}"
            )));
        }
        let start = self.start.clamp(0.0, duration);
        let end = self.end.clamp(0.0, duration);
        if start < end {
            Ok(Segment { start, end })
        } else {
            Err(Error::SegmentOutsideVideo {
                start: self.start,
                end: self.end,
                duration,
            })
        }
    }

    /// Total order used for deterministic tie-breaking: start, then end.
    pub(crate) fn cmp_position(&self, other: &Segment) -> std::cmp::Ordering {
        self.start
            .total_cmp(&other.start)
            .then(self.end.total_cmp(&other.end))
    }
}

impl TryFrom<[f64; 2]> for Segment {
    type Error = Error;

    fn try_from([start, end]: [f64; 2]) -> Result<Self> {
        Segment::new(start, end)
    }
}

impl From<Segment> for [f64; 2] {
    fn from(s: Segment) -> Self {
        [s.start, s.end]
    }
}

/// Free-function form of [`Segment::tiou`].
pub fn tiou(a: &Segment, b: &Segment) -> f64 {
    a.tiou(b)
}

/// A perturbed copy of a ground-truth segment together with the boundary
/// regression target that maps it back.
///
/// Targets are normalized by the fake segment's own length:
/// `gt.start = segment.start + target.0 * segment.length()`, likewise for the end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FakeProposal {
    pub segment: Segment,
    pub target: (f64, f64),
}

impl FakeProposal {
    /// Applies the regression target, returning the reconstructed `(start, end)`.
    pub fn apply_target(&self) -> (f64, f64) {
        let d = self.segment.length();
        (
            self.segment.start + self.target.0 * d,
            self.segment.end + self.target.1 * d,
        )
    }
}

/// Emits one fake proposal per ordered `(start offset, end offset)` pair.
///
/// Offsets are fractions of the ground-truth length and must satisfy `|f| < 0.5`.
/// Pairs that would invert the segment are skipped. Output is row-major over
/// the pairs (start offset outer, end offset inner).
pub fn generate_fake_proposals(gt: &Segment, offsets: &[f64]) -> Result<Vec<FakeProposal>> {
    if offsets.is_empty() {
        return Err(Error::InvalidArgument("offset list is empty".into()));
    }
    if let Some(bad) = offsets.iter().find(|f| !(f.abs() < 0.5)) {
        return Err(Error::InvalidArgument(format!(
            "offset {bad} outside (-0.5, 0.5)"
        )));
    }
    let d = gt.length();
    let mut out = Vec::with_capacity(offsets.len() * offsets.len());
    for &fs in offsets {
        for &fe in offsets {
            let Ok(segment) = Segment::new(gt.start + fs * d, gt.end + fe * d) else {
                continue;
            };
            let d_fake = segment.length();
            out.push(FakeProposal {
                segment,
                target: (
                    (gt.start - segment.start) / d_fake,
                    (gt.end - segment.end) / d_fake,
                ),
            });
        }
    }
    Ok(out)
}
