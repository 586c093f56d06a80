//! Analytics over exported attention stacks and attribution grids:
//! head/layer averaging, frame histograms, spike spans, thresholding and
//! cross-sample averaging.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;

/// Tolerance for softmax rows summing to one.
pub const ROW_SUM_TOLERANCE: f64 = 1e-4;
/// Scales the median absolute deviation to a normal-consistent spread.
pub const MAD_SCALE: f64 = 1.4826;
/// Scales the mean absolute deviation to a normal-consistent spread; used
/// when more than half the histogram sits exactly on the median.
pub const MEAN_AD_SCALE: f64 = 1.253314;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TensorKind {
    EncoderSelf,
    Cross,
    Attribution,
}

impl TensorKind {
    pub fn code(self) -> u8 {
        match self {
            TensorKind::EncoderSelf => 0,
            TensorKind::Cross => 1,
            TensorKind::Attribution => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(TensorKind::EncoderSelf),
            1 => Some(TensorKind::Cross),
            2 => Some(TensorKind::Attribution),
            _ => None,
        }
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!("{rows}x{cols} matrix needs {} values, got {}", rows * cols, data.len())));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for r in 0..self.rows {
            let line: Vec<String> = self.row(r).iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join("\t"));
            out.push('\n');
        }
        out
    }
}

/// `layers × heads × queries × keys` attention weights.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionTensor {
    kind: TensorKind,
    layers: usize,
    heads: usize,
    queries: usize,
    keys: usize,
    data: Vec<f32>,
}

impl AttentionTensor {
    /// Checks shape, kind, and non-negativity. Row sums are not enforced,
    /// see [`AttentionTensor::unnormalized_rows`].
    pub fn new(kind: TensorKind, dims: [usize; 4], data: Vec<f32>) -> Result<Self> {
        let [layers, heads, queries, keys] = dims;
        if kind == TensorKind::Attribution {
            return Err(Error::WrongKind { expected: "encoder_self or cross", actual: kind });
        }
        if dims.contains(&0) {
            return Err(Error::Shape(format!("empty dimension in {dims:?}")));
        }
        if data.len() != layers * heads * queries * keys {
            return Err(Error::Shape(format!("dims {dims:?} do not match {} values", data.len())));
        }
        if kind == TensorKind::EncoderSelf && queries != keys {
            return Err(Error::Shape(format!("self-attention must be square, got {queries}x{keys}")));
        }
        if let Some(v) = data.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Format(format!("attention weight {v} is not a finite non-negative value")));
        }
        let t = AttentionTensor { kind, layers, heads, queries, keys, data };
        let bad = t.unnormalized_rows();
        if bad > 0 {
            log::warn!("{bad} attention row(s) do not sum to 1 within {ROW_SUM_TOLERANCE}");
        }
        Ok(t)
    }

    pub fn kind(&self) -> TensorKind {
        self.kind
    }

    pub fn dims(&self) -> [usize; 4] {
        [self.layers, self.heads, self.queries, self.keys]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// The `queries × keys` block for one `(layer, head)`.
    pub fn block(&self, layer: usize, head: usize) -> &[f32] {
        let size = self.queries * self.keys;
        let start = (layer * self.heads + head) * size;
        &self.data[start..start + size]
    }

    /// Rows whose sum deviates from 1 by more than [`ROW_SUM_TOLERANCE`].
    pub fn unnormalized_rows(&self) -> usize {
        self.data
            .chunks_exact(self.keys)
            .filter(|row| {
                let s: f64 = row.iter().map(|&v| v as f64).sum();
                (s - 1.0).abs() > ROW_SUM_TOLERANCE
            })
            .count()
    }

    fn mean_of_blocks(&self, blocks: &[(usize, usize)]) -> Matrix {
        let mut out = Matrix::zeros(self.queries, self.keys);
        let inv = 1.0 / blocks.len() as f64;
        let keys = self.keys;
        exec::for_each_chunk_mut(&mut out.data, keys, |q, row| {
            for &(l, h) in blocks {
                let src = &self.block(l, h)[q * keys..(q + 1) * keys];
                for (o, &v) in row.iter_mut().zip(src) {
                    *o += v as f64;
                }
            }
            for o in row.iter_mut() {
                *o *= inv;
            }
        });
        out
    }
}

/// Elementwise mean across the heads of one layer.
pub fn mean_over_heads(t: &AttentionTensor, layer: usize) -> Result<Matrix> {
    if layer >= t.layers {
        return Err(Error::IndexOutOfRange { what: "layer", index: layer, len: t.layers });
    }
    let blocks: Vec<_> = (0..t.heads).map(|h| (layer, h)).collect();
    Ok(t.mean_of_blocks(&blocks))
}

/// Elementwise mean across the layers for one head.
pub fn mean_over_layers(t: &AttentionTensor, head: usize) -> Result<Matrix> {
    if head >= t.heads {
        return Err(Error::IndexOutOfRange { what: "head", index: head, len: t.heads });
    }
    let blocks: Vec<_> = (0..t.layers).map(|l| (l, head)).collect();
    Ok(t.mean_of_blocks(&blocks))
}

/// Mean over all layers and heads.
pub fn grand_mean(t: &AttentionTensor) -> Matrix {
    let blocks: Vec<_> = (0..t.layers).flat_map(|l| (0..t.heads).map(move |h| (l, h))).collect();
    t.mean_of_blocks(&blocks)
}

/// Mean attention mass per frame over layers, heads and query tokens.
pub fn frame_attention_histogram(t: &AttentionTensor) -> Result<Vec<f64>> {
    if t.kind != TensorKind::Cross {
        return Err(Error::WrongKind { expected: "cross", actual: t.kind });
    }
    let m = grand_mean(t);
    let mut h = vec![0.0; t.keys];
    for q in 0..m.rows {
        for (acc, v) in h.iter_mut().zip(m.row(q)) {
            *acc += v;
        }
    }
    let inv = 1.0 / m.rows as f64;
    h.iter_mut().for_each(|v| *v *= inv);
    Ok(h)
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `(h - median) / spread`, with spread the scaled MAD, or the scaled mean
/// absolute deviation when the MAD is zero.
pub fn robust_z_scores(h: &[f64]) -> Result<Vec<f64>> {
    if h.len() < 2 {
        return Err(Error::TooShort(h.len()));
    }
    let med = median(h);
    let deviations: Vec<f64> = h.iter().map(|v| (v - med).abs()).collect();
    let mad = median(&deviations);
    let spread = if mad > 0.0 {
        MAD_SCALE * mad
    } else {
        MEAN_AD_SCALE * deviations.iter().sum::<f64>() / h.len() as f64
    };
    if spread.is_nan() || spread <= 0.0 {
        return Err(Error::DegenerateDistribution);
    }
    Ok(h.iter().map(|v| (v - med) / spread).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeSpan {
    /// Inclusive.
    pub start_frame: usize,
    /// Inclusive.
    pub end_frame: usize,
    pub mean_intensity: f64,
    /// Peak robust z-score inside the span.
    pub z_score: f64,
}

/// Maximal runs of frames with robust z-score `>= z_threshold`, at least
/// `min_run` long, sorted by start. A constant histogram has no spikes.
pub fn detect_spikes(h: &[f64], z_threshold: f64, min_run: usize) -> Result<Vec<SpikeSpan>> {
    let z = match robust_z_scores(h) {
        Ok(z) => z,
        Err(Error::DegenerateDistribution) => return Ok(Vec::new()),
        Err(e) => return Err(e),
    };
    let mut spans = Vec::new();
    let mut k = 0;
    while k < z.len() {
        if z[k] < z_threshold {
            k += 1;
            continue;
        }
        let start = k;
        while k < z.len() && z[k] >= z_threshold {
            k += 1;
        }
        if k - start >= min_run.max(1) {
            let span = &h[start..k];
            spans.push(SpikeSpan {
                start_frame: start,
                end_frame: k - 1,
                mean_intensity: span.iter().sum::<f64>() / span.len() as f64,
                z_score: z[start..k].iter().copied().fold(f64::NEG_INFINITY, f64::max),
            });
        }
    }
    Ok(spans)
}

/// Token × frame attribution scores with optional token labels.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributionMatrix {
    pub tokens: Vec<String>,
    pub values: Matrix,
}

impl AttributionMatrix {
    pub fn new(tokens: Vec<String>, values: Matrix) -> Result<Self> {
        if !tokens.is_empty() && tokens.len() != values.rows {
            return Err(Error::Shape(format!("{} token labels for {} rows", tokens.len(), values.rows)));
        }
        if values.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("attribution values must be finite".into()));
        }
        Ok(AttributionMatrix { tokens, values })
    }
}

/// Zeroes every value below `min_value`.
pub fn threshold_filter(a: &AttributionMatrix, min_value: f64) -> AttributionMatrix {
    let mut out = a.clone();
    for v in out.values.data.iter_mut() {
        if *v < min_value {
            *v = 0.0;
        }
    }
    out
}

/// Sample position in the source grid for output index `i`, corners aligned.
fn source_coord(i: usize, src: usize, dst: usize) -> f64 {
    if dst == 1 {
        0.5 * (src - 1) as f64
    } else {
        i as f64 * (src - 1) as f64 / (dst - 1) as f64
    }
}

/// Bilinear resampling with corners aligned.
pub fn resample_bilinear(m: &Matrix, rows: usize, cols: usize) -> Result<Matrix> {
    if rows == 0 || cols == 0 || m.rows == 0 || m.cols == 0 {
        return Err(Error::Shape("cannot resample an empty matrix".into()));
    }
    if (rows, cols) == (m.rows, m.cols) {
        return Ok(m.clone());
    }
    let mut out = Matrix::zeros(rows, cols);
    for r in 0..rows {
        let y = source_coord(r, m.rows, rows);
        let y0 = (y.floor() as usize).min(m.rows - 1);
        let y1 = (y0 + 1).min(m.rows - 1);
        let fy = y - y0 as f64;
        for c in 0..cols {
            let x = source_coord(c, m.cols, cols);
            let x0 = (x.floor() as usize).min(m.cols - 1);
            let x1 = (x0 + 1).min(m.cols - 1);
            let fx = x - x0 as f64;
            let top = m.get(y0, x0) * (1.0 - fx) + m.get(y0, x1) * fx;
            let bottom = m.get(y1, x0) * (1.0 - fx) + m.get(y1, x1) * fx;
            out.data[r * cols + c] = top * (1.0 - fy) + bottom * fy;
        }
    }
    Ok(out)
}

/// Resamples every sample to `rows × cols` and averages elementwise.
pub fn average_attributions(samples: &[AttributionMatrix], rows: usize, cols: usize) -> Result<AttributionMatrix> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let resampled = exec::map(samples, exec::Parallelism::default(), |s| resample_bilinear(&s.values, rows, cols));
    let mut acc = Matrix::zeros(rows, cols);
    for m in resampled {
        for (a, v) in acc.data.iter_mut().zip(m?.data) {
            *a += v;
        }
    }
    let inv = 1.0 / samples.len() as f64;
    acc.data.iter_mut().for_each(|v| *v *= inv);
    let tokens = samples
        .iter()
        .find(|s| s.tokens.len() == rows)
        .map(|s| s.tokens.clone())
        .unwrap_or_default();
    AttributionMatrix::new(tokens, acc)
}
