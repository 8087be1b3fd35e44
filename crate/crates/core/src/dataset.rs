//! Sparse binary-classification data: LibSVM parsing, train/test splitting,
//! mini-batch schedules and a Gaussian synthetic generator.

use std::fmt::Write as _;
use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// A sparse feature row. Indices are 1-based feature ids, strictly increasing,
/// and no explicit zeros are stored.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SparseVector {
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVector {
    pub fn new(indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "sparse vector has {} indices but {} values",
                indices.len(),
                values.len()
            )));
        }
        let mut prev = 0usize;
        for &ix in &indices {
            if ix == 0 {
                return Err(Error::InvalidArgument("feature index must be >= 1".into()));
            }
            if ix <= prev {
                return Err(Error::InvalidArgument(format!(
                    "feature indices must be strictly increasing ({prev} then {ix})"
                )));
            }
            prev = ix;
        }
        let (indices, values) = indices.into_iter().zip(values).filter(|&(_, v)| v != 0.0).unzip();
        Ok(Self { indices, values })
    }

    /// Builds a row from a dense slice; position `j` becomes feature id `j + 1`.
    pub fn from_dense(dense: &[f64]) -> Self {
        let (indices, values) = dense
            .iter()
            .enumerate()
            .filter(|&(_, &v)| v != 0.0)
            .map(|(j, &v)| (j + 1, v))
            .unzip();
        Self { indices, values }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// Largest feature id, 0 for an empty row.
    pub fn max_index(&self) -> usize {
        self.indices.last().copied().unwrap_or(0)
    }

    /// `(zero-based position, value)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().zip(&self.values).map(|(&i, &v)| (i - 1, v))
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(j, v)| v * dense[j]).sum()
    }

    /// `dense += scale * self`
    pub fn axpy_into(&self, scale: f64, dense: &mut [f64]) {
        for (j, v) in self.iter() {
            dense[j] += scale * v;
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn scaled(&self, scale: f64) -> SparseVector {
        let (indices, values) = self
            .indices
            .iter()
            .zip(&self.values)
            .map(|(&i, &v)| (i, scale * v))
            .filter(|&(_, v)| v != 0.0)
            .unzip();
        SparseVector { indices, values }
    }

    pub fn to_dense(&self, d: usize) -> Vec<f64> {
        let mut out = vec![0.0; d];
        self.axpy_into(1.0, &mut out);
        out
    }
}

/// Rows with ±1 labels. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    rows: Vec<SparseVector>,
    labels: Vec<f64>,
    d: usize,
}

impl Dataset {
    /// Labels are thresholded at zero: `> 0` maps to +1, everything else to −1.
    /// `d` is raised to the largest index present if it is smaller.
    pub fn new(rows: Vec<SparseVector>, labels: Vec<f64>, d: usize) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let d = rows.iter().map(SparseVector::max_index).fold(d, usize::max);
        let labels = labels.into_iter().map(threshold_label).collect();
        Ok(Self { rows, labels, d })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &SparseVector {
        &self.rows[i]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn rows(&self) -> &[SparseVector] {
        &self.rows
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Subset in the given order, keeping the parent's `d`.
    pub fn select(&self, indices: &[usize]) -> Result<Dataset> {
        if indices.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let rows = indices.iter().map(|&i| self.rows[i].clone()).collect();
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Ok(Dataset {
            rows,
            labels,
            d: self.d,
        })
    }

    /// LibSVM text; labels written as `+1` / `-1`, values with shortest
    /// round-trip formatting.
    pub fn to_libsvm(&self) -> String {
        let mut out = String::new();
        for (row, &y) in self.rows.iter().zip(&self.labels) {
            out.push_str(if y > 0.0 { "+1" } else { "-1" });
            for (&ix, &v) in row.indices.iter().zip(&row.values) {
                let _ = write!(out, " {ix}:{v:?}");
            }
            out.push('\n');
        }
        out
    }
}

fn threshold_label(y: f64) -> f64 {
    if y > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Parses `<label> <idx>:<val> ...` lines. Blank lines are skipped; line
/// numbers in errors are 1-based and count blank lines.
pub fn parse_libsvm<R: BufRead>(reader: R) -> Result<Dataset> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::Io {
            path: format!("<libsvm line {lineno}>"),
            source: e,
        })?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (label, row) = parse_line(line).map_err(|message| Error::Parse { line: lineno, message })?;
        labels.push(label);
        rows.push(row);
    }
    Dataset::new(rows, labels, 0)
}

pub fn parse_libsvm_str(text: &str) -> Result<Dataset> {
    parse_libsvm(text.as_bytes())
}

pub fn load_libsvm(path: &std::path::Path) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_libsvm(std::io::BufReader::new(file))
}

fn parse_line(line: &str) -> std::result::Result<(f64, SparseVector), String> {
    let mut tokens = line.split_whitespace();
    let label_tok = tokens.next().ok_or("missing label")?;
    let label: f64 = label_tok
        .parse()
        .map_err(|_| format!("malformed label {label_tok:?}"))?;
    if !label.is_finite() {
        return Err(format!("non-finite label {label_tok:?}"));
    }
    let mut indices = Vec::new();
    let mut values = Vec::new();
    let mut prev = 0usize;
    for tok in tokens {
        let (ix, val) = tok
            .split_once(':')
            .ok_or_else(|| format!("malformed token {tok:?}, expected idx:val"))?;
        let ix: i64 = ix.parse().map_err(|_| format!("malformed index in {tok:?}"))?;
        if ix <= 0 {
            return Err(format!("feature index must be positive, got {ix}"));
        }
        let ix = ix as usize;
        if ix <= prev {
            return Err(format!("feature indices not increasing ({prev} then {ix})"));
        }
        prev = ix;
        let val: f64 = val.parse().map_err(|_| format!("malformed value in {tok:?}"))?;
        if !val.is_finite() {
            return Err(format!("non-finite value in {tok:?}"));
        }
        indices.push(ix);
        values.push(val);
    }
    let row = SparseVector::new(indices, values).map_err(|e| e.to_string())?;
    Ok((label, row))
}

/// Shuffled split; the train part receives `round(train_fraction * n)` rows,
/// clamped so both parts are non-empty.
pub fn split_train_test(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let n = ds.n();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 rows to split, got {n}"
        )));
    }
    let n_train = ((train_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let train = ds.select(&perm[..n_train])?;
    let test = ds.select(&perm[n_train..])?;
    Ok((train, test))
}

/// Random partition of `0..n` into `m = ceil(n / b)` batches, reshuffled per
/// epoch from `(seed, epoch)`. Only the last chunk of the permutation may be
/// short, and its position in the visit order is itself random.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchSchedule {
    n: usize,
    b: usize,
    seed: u64,
    epoch: u64,
    batches: Vec<Vec<usize>>,
}

impl BatchSchedule {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn m(&self) -> usize {
        self.batches.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    /// Batches in visit order.
    pub fn batches(&self) -> &[Vec<usize>] {
        &self.batches
    }

    /// Schedule for another epoch of the same `(n, b, seed)`.
    pub fn for_epoch(&self, epoch: u64) -> BatchSchedule {
        build_schedule(self.n, self.b, self.seed, epoch)
    }

    /// True when every batch has exactly `b` points.
    pub fn is_uniform(&self) -> bool {
        self.n % self.b == 0
    }
}

pub fn num_batches(n: usize, b: usize) -> usize {
    n.div_ceil(b)
}

/// Epoch-0 schedule.
pub fn make_schedule(n: usize, b: usize, seed: u64) -> Result<BatchSchedule> {
    if b == 0 || b > n {
        return Err(Error::InvalidArgument(format!(
            "batch size must satisfy 1 <= b <= n (b = {b}, n = {n})"
        )));
    }
    Ok(build_schedule(n, b, seed, 0))
}

fn build_schedule(n: usize, b: usize, seed: u64, epoch: u64) -> BatchSchedule {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut batches: Vec<Vec<usize>> = perm.chunks(b).map(<[usize]>::to_vec).collect();
    batches.shuffle(&mut rng);
    BatchSchedule {
        n,
        b,
        seed,
        epoch,
        batches,
    }
}

/// Parameters of the Gaussian synthetic generator.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    /// Shift of each point along the planted direction, towards its class
    /// side; larger means more separable.
    pub separability: f64,
    /// Probability of flipping each label.
    pub flip: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n: 200,
            d: 10,
            separability: 2.0,
            flip: 0.05,
            seed: 1,
        }
    }
}

/// Standard-normal features labelled by the side of a planted hyperplane
/// through the origin, then pushed `separability` further along its unit
/// normal towards that side. Labels are flipped with probability `flip`.
pub fn synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    if spec.n == 0 || spec.d == 0 {
        return Err(Error::InvalidArgument("synthetic n and d must be positive".into()));
    }
    if !(0.0..=1.0).contains(&spec.flip) {
        return Err(Error::InvalidArgument(format!(
            "flip probability must lie in [0, 1], got {}",
            spec.flip
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut normal: Vec<f64> = (0..spec.d).map(|_| rng.sample(StandardNormal)).collect();
    let norm = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        normal.iter_mut().for_each(|v| *v /= norm);
    }
    let mut rows = Vec::with_capacity(spec.n);
    let mut labels = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let mut x: Vec<f64> = (0..spec.d).map(|_| rng.sample(StandardNormal)).collect();
        let score: f64 = x.iter().zip(&normal).map(|(a, b)| a * b).sum();
        let mut y = if score >= 0.0 { 1.0 } else { -1.0 };
        x.iter_mut()
            .zip(&normal)
            .for_each(|(xj, u)| *xj += y * spec.separability * u);
        if rng.random::<f64>() < spec.flip {
            y = -y;
        }
        rows.push(SparseVector::from_dense(&x));
        labels.push(y);
    }
    Dataset::new(rows, labels, spec.d)
}
