//! Boundary-matching confidence maps: storage, weighted fusion and top-K
//! proposal extraction.
//!
//! Row `d` of the grid holds proposals spanning `d + 1` stride steps; column `t`
//! holds proposals starting at `t * stride` seconds. Cell `(d, t)` therefore
//! scores the segment `[t * stride, (t + d + 1) * stride]`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::temporal::Segment;
use crate::{Error, Execution, Result};

pub const MAGIC: &[u8; 8] = b"TADCMAP1";

/// Number of coarse proposals kept per video by default.
pub const DEFAULT_TOP_K: usize = 120;

/// Dense duration × start grid of proposal confidences for one video.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceMap {
    video_id: String,
    durations: usize,
    starts: usize,
    stride: f64,
    grid: Vec<f32>,
}

impl ConfidenceMap {
    /// `grid` is row-major with `durations` rows of `starts` values each.
    pub fn new(
        video_id: impl Into<String>,
        durations: usize,
        starts: usize,
        stride: f64,
        grid: Vec<f32>,
    ) -> Result<Self> {
        if durations == 0 || starts == 0 {
            return Err(Error::DimensionMismatch(format!(
                "map must be at least 1x1, got {durations}x{starts}"
            )));
        }
        if !(stride > 0.0) || !stride.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "stride must be positive, got {stride}"
            )));
        }
        let expected = durations * starts;
        if grid.len() != expected {
            return Err(Error::PayloadMismatch {
                expected,
                found: grid.len().to_string(),
            });
        }
        if let Some(&v) = grid.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::MapValueOutOfRange(v));
        }
        Ok(ConfidenceMap {
            video_id: video_id.into(),
            durations,
            starts,
            stride,
            grid,
        })
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    /// Number of rows (duration indices).
    pub fn durations(&self) -> usize {
        self.durations
    }

    /// Number of columns (start indices).
    pub fn starts(&self) -> usize {
        self.starts
    }

    pub fn stride(&self) -> f64 {
        self.stride
    }

    pub fn grid(&self) -> &[f32] {
        &self.grid
    }

    pub fn get(&self, d: usize, t: usize) -> f32 {
        self.grid[d * self.starts + t]
    }

    /// Unclamped segment covered by cell `(d, t)`.
    pub fn cell_bounds(&self, d: usize, t: usize) -> (f64, f64) {
        (t as f64 * self.stride, (t + d + 1) as f64 * self.stride)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let id = self.video_id.as_bytes();
        let mut out = Vec::with_capacity(8 + 4 + 4 + 8 + 4 + id.len() + 4 * self.grid.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.durations as u32).to_le_bytes());
        out.extend_from_slice(&(self.starts as u32).to_le_bytes());
        out.extend_from_slice(&self.stride.to_le_bytes());
        out.extend_from_slice(&(id.len() as u32).to_le_bytes());
        out.extend_from_slice(id);
        for v in &self.grid {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader(bytes);
        if r.take(MAGIC.len())? != MAGIC {
            return Err(Error::BadMagic);
        }
        let durations = r.u32()? as usize;
        let starts = r.u32()? as usize;
        let stride = f64::from_le_bytes(r.take(8)?.try_into().unwrap());
        let id_len = r.u32()? as usize;
        let video_id = std::str::from_utf8(r.take(id_len)?)
            .map_err(|e| Error::InvalidArgument(format!("video id is not UTF-8: {e}")))?
            .to_owned();
        let payload = r.0;
        let expected = durations * starts;
        if payload.len() != 4 * expected {
            let found = if payload.len() % 4 == 0 {
                (payload.len() / 4).to_string()
            } else {
                format!("{} bytes", payload.len())
            };
            return Err(Error::PayloadMismatch { expected, found });
        }
        let grid = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        ConfidenceMap::new(video_id, durations, starts, stride, grid)
    }
}

struct Reader<'a>(&'a [u8]);

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.0.len() < n {
            return Err(if self.0.len() < MAGIC.len() && n == MAGIC.len() {
                Error::BadMagic
            } else {
                Error::TruncatedHeader
            });
        }
        let (head, tail) = self.0.split_at(n);
        self.0 = tail;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn read_map(path: impl AsRef<Path>) -> Result<ConfidenceMap> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    ConfidenceMap::from_bytes(&bytes)
}

pub fn write_map(map: &ConfidenceMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_owned(),
        source,
    };
    let mut f = fs::File::create(path).map_err(io_err)?;
    f.write_all(&map.to_bytes()).map_err(io_err)
}

/// Per-model fusion weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionSpec {
    pub weights: Vec<f64>,
}

impl FusionSpec {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        validate_weights(&weights)?;
        Ok(FusionSpec { weights })
    }
}

pub(crate) fn validate_weights(weights: &[f64]) -> Result<()> {
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidWeights(format!(
            "weight {w} is negative or non-finite"
        )));
    }
    if !weights.iter().any(|w| *w > 0.0) {
        return Err(Error::InvalidWeights("all weights are zero".into()));
    }
    Ok(())
}

/// Weighted arithmetic mean of maps sharing video, shape and stride.
pub fn fuse_maps(maps: &[ConfidenceMap], spec: &FusionSpec) -> Result<ConfidenceMap> {
    validate_weights(&spec.weights)?;
    let first = maps
        .first()
        .ok_or_else(|| Error::InvalidArgument("no maps to fuse".into()))?;
    if maps.len() != spec.weights.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} maps but {} weights",
            maps.len(),
            spec.weights.len()
        )));
    }
    for m in &maps[1..] {
        if m.video_id != first.video_id
            || m.durations != first.durations
            || m.starts != first.starts
            || m.stride != first.stride
        {
            return Err(Error::DimensionMismatch(format!(
                "map {:?} {}x{} stride {} does not match {:?} {}x{} stride {}",
                m.video_id,
                m.durations,
                m.starts,
                m.stride,
                first.video_id,
                first.durations,
                first.starts,
                first.stride
            )));
        }
    }
    let total: f64 = spec.weights.iter().sum();
    let grid = (0..first.grid.len())
        .map(|i| {
            let acc: f64 = maps
                .iter()
                .zip(&spec.weights)
                .map(|(m, &w)| w * m.grid[i] as f64)
                .sum();
            ((acc / total) as f32).clamp(0.0, 1.0)
        })
        .collect();
    Ok(ConfidenceMap {
        grid,
        ..first.clone()
    })
}

/// Fuses one group of maps per video. Each inner slice holds one map per model.
pub fn fuse_many(
    groups: &[Vec<ConfidenceMap>],
    spec: &FusionSpec,
    exec: Execution,
) -> Result<Vec<ConfidenceMap>> {
    exec.try_map(groups, |maps| fuse_maps(maps, spec))
}

/// An unlabeled candidate segment with its confidence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub segment: Segment,
    pub score: f64,
}

/// Returns the `k` highest-confidence cells as segments clipped to the video.
///
/// Cells whose clipped segment is empty are skipped. Output is sorted by score
/// descending, then start and end ascending.
pub fn extract_top_k(map: &ConfidenceMap, k: usize, video_duration: f64) -> Vec<Proposal> {
    let mut props = Vec::with_capacity(map.grid.len());
    for d in 0..map.durations {
        for t in 0..map.starts {
            let (s, e) = map.cell_bounds(d, t);
            let (s, e) = (s.min(video_duration), e.min(video_duration));
            if let Ok(segment) = Segment::new(s, e) {
                props.push(Proposal {
                    segment,
                    score: map.get(d, t) as f64,
                });
            }
        }
    }
    let order = |a: &Proposal, b: &Proposal| {
        b.score
            .total_cmp(&a.score)
            .then(a.segment.cmp_position(&b.segment))
    };
    if k < props.len() {
        props.select_nth_unstable_by(k, order);
        props.truncate(k);
    }
    props.sort_by(order);
    props
}
