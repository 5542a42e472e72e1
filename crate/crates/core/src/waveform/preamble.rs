//! 802.11ac VHT 80 MHz preamble: L-STF, L-LTF, L-SIG, VHT-SIG-A, VHT-STF,
//! VHT-LTF (one symbol, one spatial stream) and VHT-SIG-B.
//!
//! Every field is kept as a list of [`OfdmSegment`]s (spectrum + cyclic prefix)
//! next to its rendered samples, so the channel model can delay each segment
//! exactly instead of interpolating the rendered waveform.

use super::{FieldId, OfdmNumerology, WaveformError, PREAMBLE_LEN};
use crate::dsp::{bin_of, ofdm_modulate, signed_of};
use num_complex::Complex64;
use std::f64::consts::PI;

const FFT: usize = 256;

/// Non-zero L-STF tones of one 20 MHz subchannel, in units of `(1 + j)`.
const LSTF_20: [(i32, f64); 12] = [
    (-24, 1.0),
    (-20, -1.0),
    (-16, 1.0),
    (-12, -1.0),
    (-8, -1.0),
    (-4, 1.0),
    (4, -1.0),
    (8, -1.0),
    (12, 1.0),
    (16, 1.0),
    (20, 1.0),
    (24, 1.0),
];

const LTF_LEFT: [i8; 26] = [
    1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1,
];
const LTF_RIGHT: [i8; 26] = [
    1, -1, -1, 1, 1, -1, 1, -1, 1, -1, -1, -1, -1, -1, 1, 1, -1, -1, 1, -1, 1, -1, 1, 1, 1, 1,
];

/// Legacy pilots of one 20 MHz subchannel.
const LEGACY_PILOTS: [(i32, f64); 4] = [(-21, 1.0), (-7, 1.0), (7, 1.0), (21, -1.0)];

const SUBCHANNEL_CENTERS: [i32; 4] = [-96, -32, 32, 96];

/// Per-subchannel phase rotation for 80 MHz duplication.
fn rotation(k: i32) -> f64 {
    if k < -64 {
        1.0
    } else {
        -1.0
    }
}

/// L-LTF of one 20 MHz subchannel, subcarriers -26..=26.
fn lltf_20() -> Vec<(i32, f64)> {
    let mut tones = Vec::with_capacity(52);
    for (i, v) in LTF_LEFT.iter().enumerate() {
        tones.push((i as i32 - 26, *v as f64));
    }
    for (i, v) in LTF_RIGHT.iter().enumerate() {
        tones.push((i as i32 + 1, *v as f64));
    }
    tones
}

/// The 80 MHz VHT-LTF sequence on subcarriers -122..=122 (zeros at -1, 0, 1).
fn vht_ltf_80() -> Vec<f64> {
    let mut seq: Vec<f64> = Vec::with_capacity(245);
    let push_ltf = |seq: &mut Vec<f64>| {
        seq.extend(LTF_LEFT.iter().map(|v| *v as f64));
        seq.push(1.0);
        seq.extend(LTF_RIGHT.iter().map(|v| *v as f64));
    };
    push_ltf(&mut seq);
    seq.extend([-1.0, -1.0, -1.0, 1.0, 1.0, -1.0, 1.0, -1.0, 1.0, 1.0, -1.0]);
    push_ltf(&mut seq);
    seq.extend([1.0, -1.0, 1.0, -1.0, 0.0, 0.0, 0.0, 1.0, -1.0, -1.0, 1.0]);
    push_ltf(&mut seq);
    seq.extend([-1.0, -1.0, -1.0, 1.0, 1.0, -1.0, 1.0, -1.0, 1.0, 1.0, -1.0]);
    push_ltf(&mut seq);
    debug_assert_eq!(seq.len(), 245);
    seq
}

/// 802.11 scrambler (x^7 + x^4 + 1) from the all-ones state, mapped to BPSK.
fn placeholder_bpsk(n: usize, skip: usize) -> Vec<f64> {
    let mut state = [1u8; 7];
    let mut out = Vec::with_capacity(n);
    for i in 0..n + skip {
        let bit = state[6] ^ state[3];
        state.rotate_right(1);
        state[0] = bit;
        if i >= skip {
            out.push(if bit == 1 { -1.0 } else { 1.0 });
        }
    }
    out
}

/// Scales a spectrum so the rendered symbol has unit mean sample power.
fn unit_power(mut spectrum: Vec<Complex64>) -> Vec<Complex64> {
    let energy: f64 = spectrum.iter().map(|x| x.norm_sqr()).sum();
    let scale = FFT as f64 / energy.sqrt();
    spectrum.iter_mut().for_each(|x| *x *= scale);
    spectrum
}

/// Duplicates a 20 MHz tone set over the four subchannels with rotation.
fn duplicate_20(tones: &[(i32, Complex64)]) -> Vec<Complex64> {
    let mut spectrum = vec![Complex64::new(0.0, 0.0); FFT];
    for center in SUBCHANNEL_CENTERS {
        for (k, v) in tones {
            let k80 = k + center;
            spectrum[bin_of(k80, FFT)] = v * rotation(k80);
        }
    }
    unit_power(spectrum)
}

fn stf_spectrum() -> Vec<Complex64> {
    let tones: Vec<(i32, Complex64)> = LSTF_20
        .iter()
        .map(|(k, s)| (*k, Complex64::new(*s, *s)))
        .collect();
    duplicate_20(&tones)
}

fn legacy_sig_spectrum(bits: &[f64], quadrature: bool) -> Vec<Complex64> {
    let unit = if quadrature {
        Complex64::new(0.0, 1.0)
    } else {
        Complex64::new(1.0, 0.0)
    };
    let mut tones = Vec::with_capacity(52);
    let mut data = bits.iter();
    for k in (-26..=26).filter(|k| *k != 0) {
        if let Some((_, p)) = LEGACY_PILOTS.iter().find(|(pk, _)| *pk == k) {
            tones.push((k, Complex64::new(*p, 0.0)));
        } else {
            tones.push((k, unit * *data.next().expect("48 data bits")));
        }
    }
    duplicate_20(&tones)
}

fn vht_ltf_spectrum() -> Vec<Complex64> {
    let mut spectrum = vec![Complex64::new(0.0, 0.0); FFT];
    for (i, v) in vht_ltf_80().into_iter().enumerate() {
        let k = i as i32 - 122;
        spectrum[bin_of(k, FFT)] = Complex64::new(v * rotation(k), 0.0);
    }
    unit_power(spectrum)
}

fn sig_b_spectrum(numerology: &OfdmNumerology) -> Vec<Complex64> {
    let bits = placeholder_bpsk(numerology.n_used(), 144);
    let mut spectrum = vec![Complex64::new(0.0, 0.0); FFT];
    for (k, b) in numerology.used_subcarriers().iter().zip(bits) {
        spectrum[bin_of(*k, FFT)] = Complex64::new(b * rotation(*k), 0.0);
    }
    unit_power(spectrum)
}

/// Known VHT-LTF values on the 242 used subcarriers, as transmitted
/// (rotation and power scaling included), in `used_subcarriers` order.
pub fn vht_ltf_reference(numerology: &OfdmNumerology) -> Vec<Complex64> {
    let spectrum = vht_ltf_spectrum();
    numerology
        .used_subcarriers()
        .iter()
        .map(|k| spectrum[bin_of(*k, FFT)])
        .collect()
}

/// One OFDM symbol (or periodic training block) of the preamble.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmSegment {
    pub field: FieldId,
    /// First sample within the preamble.
    pub start: usize,
    pub len: usize,
    /// Samples before the first full period; the block is periodic in `N`.
    pub cyclic_prefix: usize,
    /// Frequency-domain content, FFT bin order.
    pub spectrum: Vec<Complex64>,
}

impl OfdmSegment {
    /// Renders the segment advanced by `advance ∈ [0, 1)` samples, i.e.
    /// sample `q` of the result is the continuous symbol at time `q + advance`.
    pub fn render(&self, advance: f64) -> Vec<Complex64> {
        let n = self.spectrum.len();
        let period: Vec<Complex64> = if advance == 0.0 {
            ofdm_modulate(&self.spectrum)
        } else {
            let shifted: Vec<Complex64> = self
                .spectrum
                .iter()
                .enumerate()
                .map(|(bin, x)| {
                    let k = signed_of(bin, n) as f64;
                    x * Complex64::from_polar(1.0, 2.0 * PI * k * advance / n as f64)
                })
                .collect();
            ofdm_modulate(&shifted)
        };
        (0..self.len)
            .map(|q| period[(q + n - self.cyclic_prefix % n) % n])
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldBoundary {
    pub field: FieldId,
    pub start: usize,
    pub len: usize,
}

/// A synthesized single-channel preamble.
#[derive(Debug, Clone, PartialEq)]
pub struct Preamble {
    pub samples: Vec<Complex64>,
    pub boundaries: Vec<FieldBoundary>,
    pub segments: Vec<OfdmSegment>,
}

impl Preamble {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn field(&self, field: FieldId) -> &[Complex64] {
        let b = self.boundaries[field as usize];
        &self.samples[b.start..b.start + b.len]
    }
}

pub fn build_preamble(numerology: &OfdmNumerology) -> Result<Preamble, WaveformError> {
    numerology.validate()?;

    let lsig_bits = placeholder_bpsk(48, 0);
    let siga_bits = placeholder_bpsk(96, 48);
    let stf = stf_spectrum();
    let lltf = {
        let tones: Vec<(i32, Complex64)> = lltf_20()
            .into_iter()
            .map(|(k, v)| (k, Complex64::new(v, 0.0)))
            .collect();
        duplicate_20(&tones)
    };

    let layout: Vec<(FieldId, usize, usize, Vec<Complex64>)> = vec![
        (FieldId::LStf, 640, 0, stf.clone()),
        (FieldId::LLtf, 640, 128, lltf),
        (
            FieldId::LSig,
            320,
            64,
            legacy_sig_spectrum(&lsig_bits, false),
        ),
        (
            FieldId::VhtSigA,
            320,
            64,
            legacy_sig_spectrum(&siga_bits[..48], false),
        ),
        (
            FieldId::VhtSigA,
            320,
            64,
            legacy_sig_spectrum(&siga_bits[48..], true),
        ),
        (FieldId::VhtStf, 320, 0, stf),
        (FieldId::VhtLtf, 320, 64, vht_ltf_spectrum()),
        (FieldId::VhtSigB, 320, 64, sig_b_spectrum(numerology)),
    ];

    let mut segments = Vec::with_capacity(layout.len());
    let mut start = 0;
    for (field, len, cyclic_prefix, spectrum) in layout {
        segments.push(OfdmSegment {
            field,
            start,
            len,
            cyclic_prefix,
            spectrum,
        });
        start += len;
    }

    let mut samples = Vec::with_capacity(PREAMBLE_LEN);
    for seg in &segments {
        samples.extend(seg.render(0.0));
    }
    let boundaries = FieldId::ALL
        .iter()
        .map(|f| FieldBoundary {
            field: *f,
            start: f.offset(),
            len: f.len(),
        })
        .collect();

    Ok(Preamble {
        samples,
        boundaries,
        segments,
    })
}
