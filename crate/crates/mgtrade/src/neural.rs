//! Minimal dense/convolutional network engine with exact-gradient
//! backpropagation, sized to the fixed Q-network architecture:
//!
//! input 6x6 -> conv 20@3x3 stride 1 + ReLU -> 4x4x20
//!           -> conv 40@2x2 stride 1 + ReLU -> 3x3x40
//!           -> flatten 360 -> dense 180 + ReLU -> dense A (linear).
//!
//! Everything is 64-bit; forward and backward are read-only on the weights
//! and may run concurrently, while [`sgd_step`] needs exclusive access.

use std::fs;
use std::path::Path;

use rand::Rng;

use crate::{Error, Result};

pub const INPUT_SIDE: usize = 6;
pub const INPUT_LEN: usize = INPUT_SIDE * INPUT_SIDE;
pub const CONV1_FILTERS: usize = 20;
pub const CONV1_KERNEL: usize = 3;
pub const CONV1_SIDE: usize = 4; // 6 - 3 + 1
pub const CONV2_FILTERS: usize = 40;
pub const CONV2_KERNEL: usize = 2;
pub const CONV2_SIDE: usize = 3; // 4 - 2 + 1
pub const FLAT_LEN: usize = CONV2_FILTERS * CONV2_SIDE * CONV2_SIDE; // 360
pub const FC1_UNITS: usize = 180;

/// Dense row-major tensor of finite 64-bit values.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{expected} values for shape {shape:?}"),
                found: format!("{}", data.len()),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("tensor holds a non-finite value".into()));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Tensor {
            shape,
            data: vec![0.0; len],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// All parameters of the Q-network.
///
/// Weight layouts (row-major): `conv1_w[f][kr][kc]`, `conv2_w[f][ch][kr][kc]`,
/// `fc1_w[out][in]`, `fc2_w[out][in]`. The version tag changes on every
/// update and ties activation caches to the weights that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkWeights {
    pub conv1_w: Vec<f64>,
    pub conv1_b: Vec<f64>,
    pub conv2_w: Vec<f64>,
    pub conv2_b: Vec<f64>,
    pub fc1_w: Vec<f64>,
    pub fc1_b: Vec<f64>,
    pub fc2_w: Vec<f64>,
    pub fc2_b: Vec<f64>,
    pub actions: usize,
    pub version: u64,
}

impl NetworkWeights {
    /// All-zero parameters for `actions` outputs.
    pub fn zeros(actions: usize) -> Self {
        NetworkWeights {
            conv1_w: vec![0.0; CONV1_FILTERS * CONV1_KERNEL * CONV1_KERNEL],
            conv1_b: vec![0.0; CONV1_FILTERS],
            conv2_w: vec![0.0; CONV2_FILTERS * CONV1_FILTERS * CONV2_KERNEL * CONV2_KERNEL],
            conv2_b: vec![0.0; CONV2_FILTERS],
            fc1_w: vec![0.0; FC1_UNITS * FLAT_LEN],
            fc1_b: vec![0.0; FC1_UNITS],
            fc2_w: vec![0.0; actions * FC1_UNITS],
            fc2_b: vec![0.0; actions],
            actions,
            version: 0,
        }
    }

    /// Seeded uniform initialization in `[-r, r]` with
    /// `r = sqrt(6 / (fan_in + fan_out))` per layer; biases start at zero.
    pub fn seeded(actions: usize, rng: &mut impl Rng) -> Self {
        let mut w = NetworkWeights::zeros(actions);
        let fills: [(&mut Vec<f64>, usize, usize); 4] = [
            (
                &mut w.conv1_w,
                CONV1_KERNEL * CONV1_KERNEL,
                CONV1_FILTERS * CONV1_KERNEL * CONV1_KERNEL,
            ),
            (
                &mut w.conv2_w,
                CONV1_FILTERS * CONV2_KERNEL * CONV2_KERNEL,
                CONV2_FILTERS * CONV2_KERNEL * CONV2_KERNEL,
            ),
            (&mut w.fc1_w, FLAT_LEN, FC1_UNITS),
            (&mut w.fc2_w, FC1_UNITS, actions),
        ];
        for (array, fan_in, fan_out) in fills {
            let r = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in array.iter_mut() {
                *v = rng.gen_range(-r..=r);
            }
        }
        w
    }

    /// Declared tensor shape of each parameter array.
    pub fn shape_of(name: &str, actions: usize) -> Vec<usize> {
        match name {
            "conv1_w" => vec![CONV1_FILTERS, CONV1_KERNEL, CONV1_KERNEL],
            "conv1_b" => vec![CONV1_FILTERS],
            "conv2_w" => vec![CONV2_FILTERS, CONV1_FILTERS, CONV2_KERNEL, CONV2_KERNEL],
            "conv2_b" => vec![CONV2_FILTERS],
            "fc1_w" => vec![FC1_UNITS, FLAT_LEN],
            "fc1_b" => vec![FC1_UNITS],
            "fc2_w" => vec![actions, FC1_UNITS],
            "fc2_b" => vec![actions],
            other => panic!("unknown parameter array {other}"),
        }
    }

    /// Named views of every parameter array, in a fixed order.
    pub fn arrays(&self) -> [(&'static str, &[f64]); 8] {
        [
            ("conv1_w", &self.conv1_w),
            ("conv1_b", &self.conv1_b),
            ("conv2_w", &self.conv2_w),
            ("conv2_b", &self.conv2_b),
            ("fc1_w", &self.fc1_w),
            ("fc1_b", &self.fc1_b),
            ("fc2_w", &self.fc2_w),
            ("fc2_b", &self.fc2_b),
        ]
    }

    pub fn arrays_mut(&mut self) -> [(&'static str, &mut Vec<f64>); 8] {
        [
            ("conv1_w", &mut self.conv1_w),
            ("conv1_b", &mut self.conv1_b),
            ("conv2_w", &mut self.conv2_w),
            ("conv2_b", &mut self.conv2_b),
            ("fc1_w", &mut self.fc1_w),
            ("fc1_b", &mut self.fc1_b),
            ("fc2_w", &mut self.fc2_w),
            ("fc2_b", &mut self.fc2_b),
        ]
    }

    pub fn parameter_count(&self) -> usize {
        self.arrays().iter().map(|(_, a)| a.len()).sum()
    }

    fn check_shapes(&self) -> Result<()> {
        let expect = NetworkWeights::zeros(self.actions);
        for ((name, a), (_, b)) in self.arrays().iter().zip(expect.arrays().iter()) {
            if a.len() != b.len() {
                return Err(Error::ShapeMismatch {
                    expected: format!("{name} with {} values", b.len()),
                    found: format!("{}", a.len()),
                });
            }
        }
        Ok(())
    }
}

/// Gradients of a scalar loss with respect to every parameter; same shapes
/// as [`NetworkWeights`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub conv1_w: Vec<f64>,
    pub conv1_b: Vec<f64>,
    pub conv2_w: Vec<f64>,
    pub conv2_b: Vec<f64>,
    pub fc1_w: Vec<f64>,
    pub fc1_b: Vec<f64>,
    pub fc2_w: Vec<f64>,
    pub fc2_b: Vec<f64>,
}

impl Gradients {
    pub fn zeros(actions: usize) -> Self {
        let w = NetworkWeights::zeros(actions);
        Gradients {
            conv1_w: w.conv1_w,
            conv1_b: w.conv1_b,
            conv2_w: w.conv2_w,
            conv2_b: w.conv2_b,
            fc1_w: w.fc1_w,
            fc1_b: w.fc1_b,
            fc2_w: w.fc2_w,
            fc2_b: w.fc2_b,
        }
    }

    pub fn arrays(&self) -> [(&'static str, &[f64]); 8] {
        [
            ("conv1_w", &self.conv1_w),
            ("conv1_b", &self.conv1_b),
            ("conv2_w", &self.conv2_w),
            ("conv2_b", &self.conv2_b),
            ("fc1_w", &self.fc1_w),
            ("fc1_b", &self.fc1_b),
            ("fc2_w", &self.fc2_w),
            ("fc2_b", &self.fc2_b),
        ]
    }

    /// Adds `scale * other` into `self`; used to average minibatch samples.
    pub fn accumulate(&mut self, other: &Gradients, scale: f64) {
        let pairs: [(&mut Vec<f64>, &Vec<f64>); 8] = [
            (&mut self.conv1_w, &other.conv1_w),
            (&mut self.conv1_b, &other.conv1_b),
            (&mut self.conv2_w, &other.conv2_w),
            (&mut self.conv2_b, &other.conv2_b),
            (&mut self.fc1_w, &other.fc1_w),
            (&mut self.fc1_b, &other.fc1_b),
            (&mut self.fc2_w, &other.fc2_w),
            (&mut self.fc2_b, &other.fc2_b),
        ];
        for (dst, src) in pairs {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
    }
}

/// Activations kept from a forward pass for the matching backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub input: Vec<f64>,
    pub conv1_pre: Vec<f64>,
    pub conv2_pre: Vec<f64>,
    pub fc1_pre: Vec<f64>,
    pub q: Vec<f64>,
    pub weights_version: u64,
}

fn relu(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

/// Forward pass on a 6x6 input; returns Q-values and the activation cache.
pub fn forward(weights: &NetworkWeights, input: &Tensor) -> Result<(Vec<f64>, ForwardCache)> {
    if input.shape() != [INPUT_SIDE, INPUT_SIDE] {
        return Err(Error::ShapeMismatch {
            expected: format!("[{INPUT_SIDE}, {INPUT_SIDE}] input"),
            found: format!("{:?}", input.shape()),
        });
    }
    weights.check_shapes()?;
    let x = input.data();

    let mut conv1_pre = vec![0.0; CONV1_FILTERS * CONV1_SIDE * CONV1_SIDE];
    for f in 0..CONV1_FILTERS {
        let w = &weights.conv1_w[f * 9..(f + 1) * 9];
        let b = weights.conv1_b[f];
        for r in 0..CONV1_SIDE {
            for c in 0..CONV1_SIDE {
                let mut sum = b;
                for kr in 0..CONV1_KERNEL {
                    let row = &x[(r + kr) * INPUT_SIDE + c..(r + kr) * INPUT_SIDE + c + 3];
                    let k = &w[kr * 3..kr * 3 + 3];
                    sum += k[0] * row[0] + k[1] * row[1] + k[2] * row[2];
                }
                conv1_pre[f * 16 + r * 4 + c] = sum;
            }
        }
    }
    let conv1_post: Vec<f64> = conv1_pre.iter().copied().map(relu).collect();

    let mut conv2_pre = vec![0.0; CONV2_FILTERS * CONV2_SIDE * CONV2_SIDE];
    for f in 0..CONV2_FILTERS {
        let wf = &weights.conv2_w[f * 80..(f + 1) * 80];
        let b = weights.conv2_b[f];
        for r in 0..CONV2_SIDE {
            for c in 0..CONV2_SIDE {
                let mut sum = b;
                for ch in 0..CONV1_FILTERS {
                    let plane = &conv1_post[ch * 16..(ch + 1) * 16];
                    let k = &wf[ch * 4..ch * 4 + 4];
                    sum += k[0] * plane[r * 4 + c]
                        + k[1] * plane[r * 4 + c + 1]
                        + k[2] * plane[(r + 1) * 4 + c]
                        + k[3] * plane[(r + 1) * 4 + c + 1];
                }
                conv2_pre[f * 9 + r * 3 + c] = sum;
            }
        }
    }
    let flat: Vec<f64> = conv2_pre.iter().copied().map(relu).collect();

    let mut fc1_pre = vec![0.0; FC1_UNITS];
    for h in 0..FC1_UNITS {
        let row = &weights.fc1_w[h * FLAT_LEN..(h + 1) * FLAT_LEN];
        let mut sum = weights.fc1_b[h];
        for (w, a) in row.iter().zip(&flat) {
            sum += w * a;
        }
        fc1_pre[h] = sum;
    }
    let fc1_post: Vec<f64> = fc1_pre.iter().copied().map(relu).collect();

    let mut q = vec![0.0; weights.actions];
    for (a, out) in q.iter_mut().enumerate() {
        let row = &weights.fc2_w[a * FC1_UNITS..(a + 1) * FC1_UNITS];
        let mut sum = weights.fc2_b[a];
        for (w, h) in row.iter().zip(&fc1_post) {
            sum += w * h;
        }
        *out = sum;
    }

    let cache = ForwardCache {
        input: x.to_vec(),
        conv1_pre,
        conv2_pre,
        fc1_pre,
        q: q.clone(),
        weights_version: weights.version,
    };
    Ok((q, cache))
}

/// Exact gradients of a scalar loss given its gradient on the outputs.
///
/// The cache must come from a forward pass over the same weights version.
pub fn backward(
    weights: &NetworkWeights,
    cache: &ForwardCache,
    output_gradient: &[f64],
) -> Result<Gradients> {
    if cache.weights_version != weights.version {
        return Err(Error::StaleCache);
    }
    if output_gradient.len() != weights.actions {
        return Err(Error::ShapeMismatch {
            expected: format!("{} output gradients", weights.actions),
            found: format!("{}", output_gradient.len()),
        });
    }

    let mut g = Gradients::zeros(weights.actions);
    let fc1_post: Vec<f64> = cache.fc1_pre.iter().copied().map(relu).collect();
    let flat: Vec<f64> = cache.conv2_pre.iter().copied().map(relu).collect();
    let conv1_post: Vec<f64> = cache.conv1_pre.iter().copied().map(relu).collect();

    // dense A <- 180
    let mut d_fc1_post = vec![0.0; FC1_UNITS];
    for (a, &dq) in output_gradient.iter().enumerate() {
        g.fc2_b[a] = dq;
        let w_row = &weights.fc2_w[a * FC1_UNITS..(a + 1) * FC1_UNITS];
        let g_row = &mut g.fc2_w[a * FC1_UNITS..(a + 1) * FC1_UNITS];
        if dq != 0.0 {
            for h in 0..FC1_UNITS {
                g_row[h] = dq * fc1_post[h];
                d_fc1_post[h] += dq * w_row[h];
            }
        }
    }

    // dense 180 <- 360, through the ReLU
    let mut d_flat = vec![0.0; FLAT_LEN];
    for h in 0..FC1_UNITS {
        let d_pre = if cache.fc1_pre[h] > 0.0 {
            d_fc1_post[h]
        } else {
            0.0
        };
        g.fc1_b[h] = d_pre;
        if d_pre == 0.0 {
            continue;
        }
        let w_row = &weights.fc1_w[h * FLAT_LEN..(h + 1) * FLAT_LEN];
        let g_row = &mut g.fc1_w[h * FLAT_LEN..(h + 1) * FLAT_LEN];
        for i in 0..FLAT_LEN {
            g_row[i] = d_pre * flat[i];
            d_flat[i] += d_pre * w_row[i];
        }
    }

    // conv2, through its ReLU
    let d_conv2_pre: Vec<f64> = cache
        .conv2_pre
        .iter()
        .zip(&d_flat)
        .map(|(&pre, &d)| if pre > 0.0 { d } else { 0.0 })
        .collect();
    let mut d_conv1_post = vec![0.0; CONV1_FILTERS * CONV1_SIDE * CONV1_SIDE];
    for f in 0..CONV2_FILTERS {
        let wf = &weights.conv2_w[f * 80..(f + 1) * 80];
        let gf = &mut g.conv2_w[f * 80..(f + 1) * 80];
        for r in 0..CONV2_SIDE {
            for c in 0..CONV2_SIDE {
                let d = d_conv2_pre[f * 9 + r * 3 + c];
                if d == 0.0 {
                    continue;
                }
                g.conv2_b[f] += d;
                for ch in 0..CONV1_FILTERS {
                    let base = ch * 16;
                    let idx = [
                        base + r * 4 + c,
                        base + r * 4 + c + 1,
                        base + (r + 1) * 4 + c,
                        base + (r + 1) * 4 + c + 1,
                    ];
                    for (k, &i) in idx.iter().enumerate() {
                        gf[ch * 4 + k] += d * conv1_post[i];
                        d_conv1_post[i] += d * wf[ch * 4 + k];
                    }
                }
            }
        }
    }

    // conv1, through its ReLU
    for f in 0..CONV1_FILTERS {
        let gw = &mut g.conv1_w[f * 9..(f + 1) * 9];
        for r in 0..CONV1_SIDE {
            for c in 0..CONV1_SIDE {
                let i = f * 16 + r * 4 + c;
                let d = if cache.conv1_pre[i] > 0.0 {
                    d_conv1_post[i]
                } else {
                    0.0
                };
                if d == 0.0 {
                    continue;
                }
                g.conv1_b[f] += d;
                for kr in 0..CONV1_KERNEL {
                    for kc in 0..CONV1_KERNEL {
                        gw[kr * 3 + kc] += d * cache.input[(r + kr) * INPUT_SIDE + c + kc];
                    }
                }
            }
        }
    }

    Ok(g)
}

/// One plain gradient-descent step `w <- w - lr * g`; bumps the version.
///
/// Refuses non-finite gradients so training aborts instead of silently
/// diverging.
pub fn sgd_step(weights: &mut NetworkWeights, gradients: &Gradients, lr: f64) -> Result<()> {
    if !lr.is_finite() || lr < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "learning rate {lr} must be >= 0"
        )));
    }
    for (name, array) in gradients.arrays() {
        if array.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("gradient array {name}")));
        }
    }
    let pairs: [(&mut Vec<f64>, &[f64]); 8] = [
        (&mut weights.conv1_w, &gradients.conv1_w),
        (&mut weights.conv1_b, &gradients.conv1_b),
        (&mut weights.conv2_w, &gradients.conv2_w),
        (&mut weights.conv2_b, &gradients.conv2_b),
        (&mut weights.fc1_w, &gradients.fc1_w),
        (&mut weights.fc1_b, &gradients.fc1_b),
        (&mut weights.fc2_w, &gradients.fc2_w),
        (&mut weights.fc2_b, &gradients.fc2_b),
    ];
    for (w, g) in pairs {
        if w.len() != g.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} gradients", w.len()),
                found: format!("{}", g.len()),
            });
        }
        for (wv, gv) in w.iter_mut().zip(g) {
            *wv -= lr * gv;
        }
    }
    weights.version += 1;
    Ok(())
}

// ---------------------------------------------------------------------------
// Checkpoint container: magic, format version, then named shaped arrays of
// little-endian f64. Shapes are validated exactly on load.
// ---------------------------------------------------------------------------

const CHECKPOINT_MAGIC: &[u8; 4] = b"MGTC";
const CHECKPOINT_VERSION: u32 = 1;

/// Writes the weights as a versioned named-array container.
pub fn save_weights(weights: &NetworkWeights, path: &Path) -> Result<()> {
    weights.check_shapes()?;
    let mut buf = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(weights.actions as u64).to_le_bytes());
    buf.extend_from_slice(&weights.version.to_le_bytes());
    let arrays = weights.arrays();
    buf.extend_from_slice(&(arrays.len() as u32).to_le_bytes());
    for (name, data) in arrays {
        buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        let shape = NetworkWeights::shape_of(name, weights.actions);
        buf.extend_from_slice(&(shape.len() as u32).to_le_bytes());
        for dim in &shape {
            buf.extend_from_slice(&(*dim as u64).to_le_bytes());
        }
        for v in data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, buf)?;
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Checkpoint("truncated file".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Loads a checkpoint, validating magic, format version, and every shape.
pub fn load_weights(path: &Path) -> Result<NetworkWeights> {
    let bytes = fs::read(path)?;
    let mut r = Reader {
        buf: &bytes,
        pos: 0,
    };
    if r.take(4)? != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported format version {version}"
        )));
    }
    let actions = r.u64()? as usize;
    if actions == 0 {
        return Err(Error::Checkpoint("zero action count".into()));
    }
    let weight_version = r.u64()?;
    let count = r.u32()? as usize;

    let mut loaded = NetworkWeights::zeros(actions);
    loaded.version = weight_version;
    let expected_names: Vec<&'static str> = loaded.arrays().iter().map(|(name, _)| *name).collect();
    if count != expected_names.len() {
        return Err(Error::Checkpoint(format!(
            "expected {} arrays, found {count}",
            expected_names.len()
        )));
    }
    for expected_name in expected_names {
        let name_len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|_| Error::Checkpoint("array name is not UTF-8".into()))?
            .to_string();
        if name != expected_name {
            return Err(Error::Checkpoint(format!(
                "expected array {expected_name}, found {name}"
            )));
        }
        let ndim = r.u32()? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(r.u64()? as usize);
        }
        let expected_shape = NetworkWeights::shape_of(expected_name, actions);
        if shape != expected_shape {
            return Err(Error::ShapeMismatch {
                expected: format!("{expected_name} with shape {expected_shape:?}"),
                found: format!("{shape:?}"),
            });
        }
        let len: usize = shape.iter().product();
        let target = match expected_name {
            "conv1_w" => &mut loaded.conv1_w,
            "conv1_b" => &mut loaded.conv1_b,
            "conv2_w" => &mut loaded.conv2_w,
            "conv2_b" => &mut loaded.conv2_b,
            "fc1_w" => &mut loaded.fc1_w,
            "fc1_b" => &mut loaded.fc1_b,
            "fc2_w" => &mut loaded.fc2_w,
            "fc2_b" => &mut loaded.fc2_b,
            _ => unreachable!(),
        };
        if len != target.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{expected_name} with {} values", target.len()),
                found: format!("{len}"),
            });
        }
        let raw = r.take(len * 8)?;
        for (i, chunk) in raw.chunks_exact(8).enumerate() {
            target[i] = f64::from_le_bytes(chunk.try_into().unwrap());
        }
    }
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint("trailing bytes after last array".into()));
    }
    Ok(loaded)
}
