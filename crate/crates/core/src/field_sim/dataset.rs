//! Labeled / unlabeled / test splits of simulated fields and the `FSRD` file.
//!
//! File layout, little-endian:
//!
//! ```text
//! b"FSRD" | version u32 | H u32 | W u32 | S u32
//! | n_labeled u32 | n_unlabeled u32 | n_test u32
//! | (row u32, col u32) * S
//! | per sample: id u64 | observation f64 * S | field f64 * (H*W) | split u8
//! | shift f64 | scale f64
//! ```
//!
//! Values are stored in physical units; the normalization is applied when a
//! split is turned into model inputs and targets. Unlabeled samples keep their
//! fields on disk for evaluation only.

use std::collections::HashSet;
use std::fs;
use std::io::Read;
use std::path::Path;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{sample_source_layout, solve_steady_heat, GenConfig, Grid};
use super::solver::heat_residual;
use crate::error::{Error, Result};
use crate::rng;
use crate::sensing::{observe, SensorLayout};

pub const DATASET_MAGIC: &[u8; 4] = b"FSRD";
const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[repr(u8)]
pub enum Split {
    Labeled = 0,
    Unlabeled = 1,
    Test = 2,
}

impl Split {
    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Split::Labeled),
            1 => Ok(Split::Unlabeled),
            2 => Ok(Split::Test),
            t => Err(Error::Format(format!("unknown split tag {t}"))),
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "labeled" => Ok(Split::Labeled),
            "unlabeled" => Ok(Split::Unlabeled),
            "test" => Ok(Split::Test),
            other => Err(Error::invalid(format!("unknown split '{other}'"))),
        }
    }
}

/// Min-max affine map, `normalized = (value - shift) / scale`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub shift: f64,
    pub scale: f64,
}

impl Normalization {
    #[inline]
    pub fn normalize(&self, v: f64) -> f64 {
        (v - self.shift) / self.scale
    }

    #[inline]
    pub fn denormalize(&self, v: f64) -> f64 {
        v * self.scale + self.shift
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub id: u64,
    pub observation: Vec<f64>,
    pub field: Vec<f64>,
}

/// Normalized `(inputs, targets)` rows, one per sample.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSet {
    pub inputs: Array2<f64>,
    pub targets: Array2<f64>,
}

impl LabeledSet {
    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.nrows() == 0
    }
}

/// Normalized observations only. Training code that receives this type has no
/// path to the hidden fields.
#[derive(Clone, Debug, PartialEq)]
pub struct UnlabeledSet {
    pub inputs: Array2<f64>,
}

impl UnlabeledSet {
    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.nrows() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub grid: Grid,
    pub sensors: SensorLayout,
    pub labeled: Vec<Sample>,
    pub unlabeled: Vec<Sample>,
    pub test: Vec<Sample>,
    pub normalization: Normalization,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub labeled: usize,
    pub unlabeled: usize,
    pub test: usize,
}

/// Human-readable copy of the dataset header.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format: String,
    pub version: u32,
    pub grid: Grid,
    pub sensor_count: usize,
    pub counts: SplitCounts,
    pub sensors: Vec<(usize, usize)>,
    pub normalization: Normalization,
    pub sha256: String,
}

fn stack_rows<'a>(rows: impl ExactSizeIterator<Item = &'a [f64]>, width: usize, norm: Normalization) -> Array2<f64> {
    let n = rows.len();
    let mut data = Vec::with_capacity(n * width);
    for row in rows {
        data.extend(row.iter().map(|&v| norm.normalize(v)));
    }
    Array2::from_shape_vec((n, width), data).expect("row widths validated")
}

impl Dataset {
    pub fn split(&self, split: Split) -> &[Sample] {
        match split {
            Split::Labeled => &self.labeled,
            Split::Unlabeled => &self.unlabeled,
            Split::Test => &self.test,
        }
    }

    pub fn sensor_count(&self) -> usize {
        self.sensors.len()
    }

    fn pairs(&self, samples: &[&Sample]) -> LabeledSet {
        LabeledSet {
            inputs: stack_rows(
                samples.iter().map(|s| s.observation.as_slice()),
                self.sensor_count(),
                self.normalization,
            ),
            targets: stack_rows(samples.iter().map(|s| s.field.as_slice()), self.grid.cells(), self.normalization),
        }
    }

    pub fn labeled_set(&self) -> LabeledSet {
        self.pairs(&self.labeled.iter().collect::<Vec<_>>())
    }

    /// Labeled samples at the given positions of the labeled split.
    pub fn labeled_subset(&self, indices: &[usize]) -> Result<LabeledSet> {
        let picked = indices
            .iter()
            .map(|&i| {
                self.labeled
                    .get(i)
                    .ok_or_else(|| Error::invalid(format!("labeled index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.pairs(&picked))
    }

    pub fn unlabeled_set(&self) -> UnlabeledSet {
        UnlabeledSet {
            inputs: stack_rows(
                self.unlabeled.iter().map(|s| s.observation.as_slice()),
                self.sensor_count(),
                self.normalization,
            ),
        }
    }

    /// Hidden fields of the unlabeled split, normalized. Evaluation only.
    pub fn unlabeled_truth(&self) -> Array2<f64> {
        stack_rows(self.unlabeled.iter().map(|s| s.field.as_slice()), self.grid.cells(), self.normalization)
    }

    pub fn test_set(&self) -> LabeledSet {
        self.pairs(&self.test.iter().collect::<Vec<_>>())
    }

    pub fn validate(&self) -> Result<()> {
        if self.sensors.grid() != self.grid {
            return Err(Error::invalid("sensor layout grid differs from dataset grid"));
        }
        if !(self.normalization.scale > 0.0 && self.normalization.scale.is_finite() && self.normalization.shift.is_finite()) {
            return Err(Error::invalid("normalization scale must be positive and finite"));
        }
        let mut ids = HashSet::new();
        for s in self.labeled.iter().chain(&self.unlabeled).chain(&self.test) {
            if !ids.insert(s.id) {
                return Err(Error::invalid(format!("sample id {} appears twice", s.id)));
            }
            if s.observation.len() != self.sensor_count() {
                return Err(Error::shape("observation", self.sensor_count(), s.observation.len()));
            }
            if s.field.len() != self.grid.cells() {
                return Err(Error::shape("field", self.grid.cells(), s.field.len()));
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        write_dataset(self, &mut out)?;
        Ok(out)
    }

    pub fn sha256(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_bytes()?)))
    }

    pub fn manifest(&self) -> Result<DatasetManifest> {
        Ok(DatasetManifest {
            format: "FSRD".into(),
            version: VERSION,
            grid: self.grid,
            sensor_count: self.sensor_count(),
            counts: SplitCounts {
                labeled: self.labeled.len(),
                unlabeled: self.unlabeled.len(),
                test: self.test.len(),
            },
            sensors: self.sensors.positions().to_vec(),
            normalization: self.normalization,
            sha256: self.sha256()?,
        })
    }
}

/// Simulates `n_labeled + n_unlabeled + n_test` fields and observes them with
/// `sensors`. Sample `id` is generated from `(seed, id)` alone, so each field
/// is independent of the split sizes before it.
pub fn build_dataset(
    n_labeled: usize,
    n_unlabeled: usize,
    n_test: usize,
    sensors: &SensorLayout,
    seed: u64,
    config: &GenConfig,
) -> Result<Dataset> {
    if sensors.grid() != config.grid {
        return Err(Error::invalid("sensor layout grid differs from generator grid"));
    }
    if n_labeled == 0 {
        return Err(Error::Empty("labeled split"));
    }
    let total = (n_labeled + n_unlabeled + n_test) as u64;
    let mut samples = (0..total)
        .into_par_iter()
        .map(|id| {
            let layout = sample_source_layout(rng::derive(seed, rng::stream::SAMPLE, id), config)?;
            let field = solve_steady_heat(&layout, config.solver_tol)?;
            let residual = heat_residual(&layout, &field);
            if residual > config.solver_tol {
                return Err(Error::SolverDiverged {
                    iterations: 0,
                    residual,
                });
            }
            let observation = observe(&field, sensors)?.values;
            Ok(Sample {
                id,
                observation,
                field: field.into_values(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let test = samples.split_off(n_labeled + n_unlabeled);
    let unlabeled = samples.split_off(n_labeled);
    let labeled = samples;

    let (lo, hi) = labeled
        .iter()
        .flat_map(|s| s.field.iter())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let scale = hi - lo;
    if scale.is_nan() || scale <= 0.0 {
        return Err(Error::invalid("labeled fields are constant; normalization scale is zero"));
    }
    let ds = Dataset {
        grid: config.grid,
        sensors: sensors.clone(),
        labeled,
        unlabeled,
        test,
        normalization: Normalization { shift: lo, scale },
    };
    ds.validate()?;
    Ok(ds)
}

fn u32_of(v: usize, what: &str) -> Result<[u8; 4]> {
    u32::try_from(v)
        .map(u32::to_le_bytes)
        .map_err(|_| Error::invalid(format!("{what} exceeds u32")))
}

pub fn write_dataset<W: std::io::Write>(ds: &Dataset, mut w: W) -> Result<()> {
    ds.validate()?;
    let mut buf = Vec::new();
    buf.extend_from_slice(DATASET_MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&u32_of(ds.grid.rows, "grid rows")?);
    buf.extend_from_slice(&u32_of(ds.grid.cols, "grid cols")?);
    buf.extend_from_slice(&u32_of(ds.sensor_count(), "sensor count")?);
    for n in [ds.labeled.len(), ds.unlabeled.len(), ds.test.len()] {
        buf.extend_from_slice(&u32_of(n, "split count")?);
    }
    for &(r, c) in ds.sensors.positions() {
        buf.extend_from_slice(&u32_of(r, "sensor row")?);
        buf.extend_from_slice(&u32_of(c, "sensor col")?);
    }
    w.write_all(&buf)?;
    for (split, samples) in [(Split::Labeled, &ds.labeled), (Split::Unlabeled, &ds.unlabeled), (Split::Test, &ds.test)] {
        for s in samples {
            buf.clear();
            buf.extend_from_slice(&s.id.to_le_bytes());
            for v in s.observation.iter().chain(&s.field) {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            buf.push(split as u8);
            w.write_all(&buf)?;
        }
    }
    w.write_all(&ds.normalization.shift.to_le_bytes())?;
    w.write_all(&ds.normalization.scale.to_le_bytes())?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format("dataset file truncated".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        Ok(self
            .take(n.checked_mul(8).ok_or_else(|| Error::Format("length overflow".into()))?)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn read_dataset<R: Read>(mut r: R) -> Result<Dataset> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut cur = Cursor { bytes: &bytes, pos: 0 };
    if cur.take(4)? != DATASET_MAGIC {
        return Err(Error::Format("not an FSRD dataset".into()));
    }
    let version = cur.u32()?;
    if version != VERSION as usize {
        return Err(Error::Format(format!("unsupported dataset version {version}")));
    }
    let grid = Grid::new(cur.u32()?, cur.u32()?);
    let sensor_count = cur.u32()?;
    let counts = [cur.u32()?, cur.u32()?, cur.u32()?];
    let positions = (0..sensor_count)
        .map(|_| Ok((cur.u32()?, cur.u32()?)))
        .collect::<Result<Vec<_>>>()?;
    let sensors = SensorLayout::new(grid, positions)?;
    let mut splits: [Vec<Sample>; 3] = Default::default();
    for _ in 0..counts.iter().sum::<usize>() {
        let id = cur.u64()?;
        let observation = cur.f64s(sensor_count)?;
        let field = cur.f64s(grid.cells())?;
        let split = Split::from_tag(cur.take(1)?[0])?;
        splits[split as usize].push(Sample { id, observation, field });
    }
    for (k, s) in splits.iter().enumerate() {
        if s.len() != counts[k] {
            return Err(Error::Format("split tags disagree with header counts".into()));
        }
    }
    let shift = f64::from_le_bytes(cur.take(8)?.try_into().unwrap());
    let scale = f64::from_le_bytes(cur.take(8)?.try_into().unwrap());
    if cur.pos != bytes.len() {
        return Err(Error::Format("trailing bytes after dataset".into()));
    }
    let [labeled, unlabeled, test] = splits;
    let ds = Dataset {
        grid,
        sensors,
        labeled,
        unlabeled,
        test,
        normalization: Normalization { shift, scale },
    };
    ds.validate()?;
    Ok(ds)
}

/// Writes the `FSRD` file and a JSON manifest next to it (same stem, `.json`).
pub fn save_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = ds.to_bytes()?;
    fs::write(path, &bytes)?;
    let manifest = ds.manifest()?;
    fs::write(path.with_extension("json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let bytes = fs::read(path)?;
    read_dataset(bytes.as_slice())
}
