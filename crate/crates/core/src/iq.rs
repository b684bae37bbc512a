//! Raw IQ capture decoding and encoding.
//!
//! The canonical `.iq` payload is header-less: little-endian `i16` pairs
//! `(I, Q)`, channels interleaved per sample, fast-time samples contiguous
//! within a chirp and chirps contiguous. For chirp `n`, sample `m` and channel
//! `c` the pair starts at byte `4 * ((n * N_s + m) * num_channels + c)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Bytes per complex sample of one channel (I and Q, 16 bits each).
pub const BYTES_PER_SAMPLE: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum IqError {
    #[error("capture length {actual} bytes does not match layout ({expected} bytes expected)")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("channel {selected} out of range for {available} channel(s)")]
    ChannelOutOfRange { selected: usize, available: usize },
    #[error("sample value {value} at chirp {chirp}, sample {sample} does not fit in i16")]
    SampleOverflow {
        chirp: usize,
        sample: usize,
        value: f64,
    },
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
}

/// Shape of a raw capture and the channel to extract from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawCaptureLayout {
    pub num_chirps: usize,
    pub samples_per_chirp: usize,
    pub num_channels: usize,
    pub selected_channel: usize,
}

impl RawCaptureLayout {
    pub fn single_channel(num_chirps: usize, samples_per_chirp: usize) -> Self {
        Self {
            num_chirps,
            samples_per_chirp,
            num_channels: 1,
            selected_channel: 0,
        }
    }

    pub fn validate(&self) -> Result<(), IqError> {
        if self.num_channels == 0 {
            return Err(IqError::InvalidLayout(
                "num_channels must be positive".into(),
            ));
        }
        if self.selected_channel >= self.num_channels {
            return Err(IqError::ChannelOutOfRange {
                selected: self.selected_channel,
                available: self.num_channels,
            });
        }
        if self.num_chirps < 2 {
            return Err(IqError::InvalidLayout(
                "num_chirps must be at least 2".into(),
            ));
        }
        if self.samples_per_chirp < 2 {
            return Err(IqError::InvalidLayout(
                "samples_per_chirp must be at least 2".into(),
            ));
        }
        Ok(())
    }

    /// Exact payload size in bytes for this layout, all channels included.
    pub fn byte_len(&self) -> usize {
        BYTES_PER_SAMPLE * self.num_chirps * self.samples_per_chirp * self.num_channels
    }
}

/// Complex slow-time x fast-time matrix of one recording, row-major by chirp.
#[derive(Debug, Clone, PartialEq)]
pub struct IqFrame {
    data: Vec<Complex64>,
    slow_time_rate: f64,
    layout: RawCaptureLayout,
}

impl IqFrame {
    /// Builds a frame from row-major samples. The layout must describe
    /// `data.len() == num_chirps * samples_per_chirp`.
    pub fn new(
        data: Vec<Complex64>,
        layout: RawCaptureLayout,
        slow_time_rate: f64,
    ) -> Result<Self, IqError> {
        layout.validate()?;
        let expected = layout.num_chirps * layout.samples_per_chirp;
        if data.len() != expected {
            return Err(IqError::InvalidFrame(format!(
                "{} samples given, layout needs {expected}",
                data.len()
            )));
        }
        if !(slow_time_rate.is_finite() && slow_time_rate > 0.0) {
            return Err(IqError::InvalidFrame(format!(
                "slow_time_rate must be positive, got {slow_time_rate}"
            )));
        }
        if let Some(i) = data
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(IqError::InvalidFrame(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(Self {
            data,
            slow_time_rate,
            layout,
        })
    }

    pub fn num_chirps(&self) -> usize {
        self.layout.num_chirps
    }

    pub fn samples_per_chirp(&self) -> usize {
        self.layout.samples_per_chirp
    }

    pub fn slow_time_rate(&self) -> f64 {
        self.slow_time_rate
    }

    pub fn layout(&self) -> &RawCaptureLayout {
        &self.layout
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn chirp(&self, n: usize) -> &[Complex64] {
        let ns = self.layout.samples_per_chirp;
        &self.data[n * ns..(n + 1) * ns]
    }

    pub fn chirps(&self) -> impl Iterator<Item = &[Complex64]> {
        self.data.chunks_exact(self.layout.samples_per_chirp)
    }

    pub fn get(&self, chirp: usize, sample: usize) -> Complex64 {
        self.data[chirp * self.layout.samples_per_chirp + sample]
    }

    /// Returns a copy with every sample multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            data: self.data.iter().map(|z| z * factor).collect(),
            ..self.clone()
        }
    }
}

/// Decodes the selected channel of a raw capture into an [`IqFrame`].
pub fn parse_raw(
    bytes: &[u8],
    layout: RawCaptureLayout,
    slow_time_rate: f64,
) -> Result<IqFrame, IqError> {
    let expected = layout.byte_len();
    if bytes.len() != expected {
        return Err(IqError::LengthMismatch {
            expected,
            actual: bytes.len(),
        });
    }
    layout.validate()?;

    let stride = BYTES_PER_SAMPLE * layout.num_channels;
    let offset = BYTES_PER_SAMPLE * layout.selected_channel;
    let data = bytes
        .chunks_exact(stride)
        .map(|sample| {
            let pair = &sample[offset..offset + BYTES_PER_SAMPLE];
            let i = i16::from_le_bytes([pair[0], pair[1]]);
            let q = i16::from_le_bytes([pair[2], pair[3]]);
            Complex64::new(f64::from(i), f64::from(q))
        })
        .collect();
    IqFrame::new(data, layout, slow_time_rate)
}

fn to_i16(value: f64, chirp: usize, sample: usize) -> Result<i16, IqError> {
    // f64::round rounds half away from zero.
    let r = value.round();
    if r < f64::from(i16::MIN) || r > f64::from(i16::MAX) {
        return Err(IqError::SampleOverflow {
            chirp,
            sample,
            value,
        });
    }
    Ok(r as i16)
}

/// Encodes a frame as a single-channel canonical payload.
pub fn write_raw(frame: &IqFrame) -> Result<Vec<u8>, IqError> {
    let ns = frame.samples_per_chirp();
    let mut out = Vec::with_capacity(frame.data.len() * BYTES_PER_SAMPLE);
    for (idx, z) in frame.data.iter().enumerate() {
        let (chirp, sample) = (idx / ns, idx % ns);
        out.extend_from_slice(&to_i16(z.re, chirp, sample)?.to_le_bytes());
        out.extend_from_slice(&to_i16(z.im, chirp, sample)?.to_le_bytes());
    }
    Ok(out)
}
