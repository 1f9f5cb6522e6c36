//! Ground-truth and prediction files, label spaces and video-level class scores.
//!
//! Both JSON formats follow the ActivityNet challenge layout. Labels are stored
//! as indices into a [`LabelSpace`]; names are matched exactly (case-sensitive).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::temporal::Segment;
use crate::{Error, Result};

/// Suffix appended to a class name to form its background counterpart.
pub const BACKGROUND_SUFFIX: &str = "--background";

/// Default `"version"` string written into prediction files.
pub const DEFAULT_VERSION: &str = "VERSION 1.3";

/// Ordered, unique class names.
///
/// An expanded space holds `2N` names where entry `i + N` is the background
/// counterpart of entry `i`.
#[derive(Debug, Clone)]
pub struct LabelSpace {
    names: Vec<String>,
    expanded: bool,
    index: HashMap<String, usize>,
}

impl PartialEq for LabelSpace {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names && self.expanded == other.expanded
    }
}

impl Eq for LabelSpace {}

impl LabelSpace {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::build(names.into_iter().map(Into::into).collect(), false)
    }

    fn build(names: Vec<String>, expanded: bool) -> Result<Self> {
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::LabelSpace(format!("empty class name at index {i}")));
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::LabelSpace(format!("duplicate class name {name:?}")));
            }
        }
        Ok(LabelSpace {
            names,
            expanded,
            index,
        })
    }

    /// Reads a JSON array of class names.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let names: Vec<String> = read_json(path)?;
        Self::new(names)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn is_expanded(&self) -> bool {
        self.expanded
    }

    /// Number of foreground classes.
    pub fn base_len(&self) -> usize {
        if self.expanded {
            self.names.len() / 2
        } else {
            self.names.len()
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(String::as_str)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| Error::UnknownLabel(name.to_owned()))
    }

    /// Appends a background class for every class: `N` names become `2N`.
    pub fn expand(&self) -> Result<LabelSpace> {
        if self.expanded {
            return Err(Error::LabelSpace("label space is already expanded".into()));
        }
        let mut names = self.names.clone();
        names.extend(self.names.iter().map(|n| format!("{n}{BACKGROUND_SUFFIX}")));
        Self::build(names, true)
    }

    /// The foreground-only space (first `N` names).
    pub fn base(&self) -> LabelSpace {
        if !self.expanded {
            return self.clone();
        }
        Self::build(self.names[..self.base_len()].to_vec(), false)
            .expect("prefix of a valid label space is valid")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path.as_ref(), &self.names)
    }
}

/// Free-function form of [`LabelSpace::expand`].
pub fn expand_label_space(base: &LabelSpace) -> Result<LabelSpace> {
    base.expand()
}

/// One annotated action instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GtInstance {
    pub segment: Segment,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoAnnotation {
    pub duration: f64,
    pub subset: String,
    pub annotations: Vec<GtInstance>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthDataset {
    pub num_classes: usize,
    pub videos: BTreeMap<String, VideoAnnotation>,
    /// Number of annotation segments that had to be clipped to `[0, duration]`.
    pub clamped_segments: usize,
}

#[derive(Deserialize)]
struct RawGroundTruth {
    database: BTreeMap<String, RawVideo>,
}

#[derive(Deserialize)]
struct RawVideo {
    duration: f64,
    #[serde(default)]
    subset: String,
    #[serde(default)]
    annotations: Vec<RawAnnotation>,
}

#[derive(Deserialize)]
struct RawAnnotation {
    segment: [f64; 2],
    label: String,
}

impl GroundTruthDataset {
    pub fn from_json_str(text: &str, labels: &LabelSpace) -> Result<Self> {
        let raw: RawGroundTruth = serde_json::from_str(text)?;
        let mut clamped_segments = 0;
        let mut videos = BTreeMap::new();
        for (video_id, raw_video) in raw.database {
            let duration = raw_video.duration;
            if !(duration > 0.0) || !duration.is_finite() {
                return Err(Error::NonPositiveDuration {
                    video: video_id,
                    duration,
                });
            }
            let mut annotations = Vec::with_capacity(raw_video.annotations.len());
            for ann in raw_video.annotations {
                let label = labels.require(&ann.label)?;
                let [start, end] = ann.segment;
                let segment = Segment::new(start, end)?;
                let clipped = segment.clamp(duration)?;
                if clipped != segment {
                    clamped_segments += 1;
                }
                annotations.push(GtInstance {
                    segment: clipped,
                    label,
                });
            }
            videos.insert(
                video_id,
                VideoAnnotation {
                    duration,
                    subset: raw_video.subset,
                    annotations,
                },
            );
        }
        Ok(GroundTruthDataset {
            num_classes: labels.len(),
            videos,
            clamped_segments,
        })
    }

    pub fn num_instances(&self) -> usize {
        self.videos.values().map(|v| v.annotations.len()).sum()
    }
}

/// Loads and validates a ground-truth file. Out-of-range segments are clipped
/// and counted in [`GroundTruthDataset::clamped_segments`].
pub fn load_ground_truth(
    path: impl AsRef<Path>,
    labels: &LabelSpace,
) -> Result<GroundTruthDataset> {
    let path = path.as_ref();
    let text = read_text(path)?;
    GroundTruthDataset::from_json_str(&text, labels).map_err(|e| with_path(e, path))
}

/// A scored, labeled segment within one video.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub segment: Segment,
    pub label: usize,
    pub score: f64,
}

impl Detection {
    pub fn new(segment: Segment, label: usize, score: f64) -> Result<Self> {
        check_score(score)?;
        Ok(Detection {
            segment,
            label,
            score,
        })
    }

    /// Ranking order: score descending, then start, end and label ascending.
    pub fn cmp_rank(&self, other: &Detection) -> std::cmp::Ordering {
        other
            .score
            .total_cmp(&self.score)
            .then(self.segment.cmp_position(&other.segment))
            .then(self.label.cmp(&other.label))
    }
}

fn check_score(score: f64) -> Result<()> {
    if (0.0..=1.0).contains(&score) {
        Ok(())
    } else {
        Err(Error::ScoreOutOfRange(score))
    }
}

/// Detections per video. Per-video lists keep insertion (file) order.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub version: String,
    pub num_classes: usize,
    pub results: BTreeMap<String, Vec<Detection>>,
}

#[derive(Serialize, Deserialize)]
struct RawPredictions {
    #[serde(default)]
    version: Option<String>,
    results: BTreeMap<String, Vec<RawDetection>>,
    #[serde(default)]
    external_data: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct RawDetection {
    segment: [f64; 2],
    label: String,
    score: f64,
}

impl PredictionSet {
    pub fn new(num_classes: usize) -> Self {
        PredictionSet {
            version: DEFAULT_VERSION.to_owned(),
            num_classes,
            results: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, video_id: &str, detection: Detection) -> Result<()> {
        check_score(detection.score)?;
        if detection.label >= self.num_classes {
            return Err(Error::ClassIndexOutOfRange {
                index: detection.label,
                len: self.num_classes,
            });
        }
        self.results
            .entry(video_id.to_owned())
            .or_default()
            .push(detection);
        Ok(())
    }

    /// Total number of detections across videos.
    pub fn len(&self) -> usize {
        self.results.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn from_json_str(text: &str, labels: &LabelSpace) -> Result<Self> {
        let raw: RawPredictions = serde_json::from_str(text)?;
        let mut set = PredictionSet::new(labels.len());
        if let Some(version) = raw.version {
            set.version = version;
        }
        for (video_id, dets) in raw.results {
            let list = set.results.entry(video_id).or_default();
            for d in dets {
                let [start, end] = d.segment;
                list.push(Detection::new(
                    Segment::new(start, end)?,
                    labels.require(&d.label)?,
                    d.score,
                )?);
            }
        }
        Ok(set)
    }

    pub fn to_json_string(&self, labels: &LabelSpace) -> Result<String> {
        if labels.len() != self.num_classes {
            return Err(Error::LabelSpaceMismatch(format!(
                "prediction set has {} classes, label space has {}",
                self.num_classes,
                labels.len()
            )));
        }
        let results = self
            .results
            .iter()
            .map(|(video, dets)| {
                let raw = dets
                    .iter()
                    .map(|d| RawDetection {
                        segment: d.segment.into(),
                        label: labels.names[d.label].clone(),
                        score: d.score,
                    })
                    .collect();
                (video.clone(), raw)
            })
            .collect();
        let raw = RawPredictions {
            version: Some(self.version.clone()),
            results,
            external_data: serde_json::Value::Object(Default::default()),
        };
        let mut text = serde_json::to_string_pretty(&raw)?;
        text.push('\n');
        Ok(text)
    }
}

pub fn load_predictions(path: impl AsRef<Path>, labels: &LabelSpace) -> Result<PredictionSet> {
    let path = path.as_ref();
    let text = read_text(path)?;
    PredictionSet::from_json_str(&text, labels).map_err(|e| with_path(e, path))
}

/// Writes a prediction file. Floats use the shortest representation that
/// parses back to the identical `f64`.
pub fn write_predictions(
    set: &PredictionSet,
    labels: &LabelSpace,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let text = set.to_json_string(labels)?;
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

/// Builds a label space from the distinct labels of a prediction file, sorted
/// lexicographically. Used when no explicit label file is given.
pub fn infer_label_space(path: impl AsRef<Path>) -> Result<LabelSpace> {
    let path = path.as_ref();
    let raw: RawPredictions = read_json(path)?;
    let names: BTreeSet<String> = raw
        .results
        .into_values()
        .flatten()
        .map(|d| d.label)
        .collect();
    LabelSpace::new(names)
}

/// A video-level probability vector over a label space.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoClassScores {
    pub video_id: String,
    pub probs: Vec<f64>,
}

/// Tolerance on the sum of a probability vector.
pub const PROB_SUM_TOLERANCE: f64 = 1e-9;

impl VideoClassScores {
    pub fn new(video_id: impl Into<String>, probs: Vec<f64>) -> Result<Self> {
        check_distribution(&probs)?;
        Ok(VideoClassScores {
            video_id: video_id.into(),
            probs,
        })
    }

    pub fn argmax(&self) -> usize {
        ranked_classes(&self.probs)[0]
    }

    /// Folds scores over an expanded space back onto the foreground classes.
    pub fn fold(&self) -> Result<VideoClassScores> {
        Ok(VideoClassScores {
            video_id: self.video_id.clone(),
            probs: fold_class_scores(&self.probs)?,
        })
    }
}

pub(crate) fn check_distribution(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidProbabilities("empty vector".into()));
    }
    if let Some(p) = probs.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidProbabilities(format!(
            "entry {p} is negative or non-finite"
        )));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
        return Err(Error::InvalidProbabilities(format!("entries sum to {sum}")));
    }
    Ok(())
}

/// Class indices ordered by probability descending, lower index first on ties.
pub fn ranked_classes(probs: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..probs.len()).collect();
    idx.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    idx
}

/// Maps a `2N`-way score vector onto `N` foreground classes: background mass is
/// discarded and the foreground renormalized. All-zero foreground gives a
/// uniform vector.
pub fn fold_class_scores(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() || !scores.len().is_multiple_of(2) {
        return Err(Error::DimensionMismatch(format!(
            "expanded score vector must have even, non-zero length, got {}",
            scores.len()
        )));
    }
    if let Some(p) = scores.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidProbabilities(format!(
            "entry {p} is negative or non-finite"
        )));
    }
    let fg = &scores[..scores.len() / 2];
    let mass: f64 = fg.iter().sum();
    if mass > 0.0 {
        Ok(fg.iter().map(|p| p / mass).collect())
    } else {
        Ok(vec![1.0 / fg.len() as f64; fg.len()])
    }
}

/// Reads a class-score file: `{"<video_id>": [p_0, p_1, ...], ...}`.
///
/// Vectors are only checked for shape here; callers decide whether they must
/// already be normalized.
pub fn load_class_scores(path: impl AsRef<Path>) -> Result<BTreeMap<String, Vec<f64>>> {
    read_json(path.as_ref())
}

pub fn write_class_scores(
    scores: &BTreeMap<String, Vec<f64>>,
    path: impl AsRef<Path>,
) -> Result<()> {
    write_json(path.as_ref(), scores)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|source| Error::Parse {
        path: path.to_owned(),
        source,
    })
}

pub(crate) fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_owned(),
        source,
    };
    let file = fs::File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(io_err)?;
    w.flush().map_err(io_err)
}

fn with_path(err: Error, path: &Path) -> Error {
    match err {
        Error::Json(source) => Error::Parse {
            path: path.to_owned(),
            source,
        },
        other => other,
    }
}
