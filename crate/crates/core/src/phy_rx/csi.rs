use super::{PreambleFields, RxError};
use crate::dsp::{bin_of, ofdm_demodulate};
use crate::waveform::{vht_ltf_reference, FieldId, OfdmNumerology};
use num_complex::Complex64;
use std::f64::consts::PI;

/// The VHT-LTF FFT window starts this many samples inside the guard interval.
/// The resulting linear phase is removed after the transform, so the estimate
/// is referenced to the detected frame start. Paths arriving up to this many
/// samples before the timing reference stay free of inter-symbol interference.
pub const CSI_WINDOW_BACKOFF: usize = 16;

/// Per-subcarrier, per-channel channel estimates, subcarrier-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiMatrix {
    subcarriers: Vec<i32>,
    n_channels: usize,
    values: Vec<Complex64>,
}

impl CsiMatrix {
    pub fn new(
        subcarriers: Vec<i32>,
        n_channels: usize,
        values: Vec<Complex64>,
    ) -> Result<Self, RxError> {
        if values.len() != subcarriers.len() * n_channels {
            return Err(RxError::Config(format!(
                "{} CSI values for {} subcarriers × {} channels",
                values.len(),
                subcarriers.len(),
                n_channels
            )));
        }
        Ok(Self {
            subcarriers,
            n_channels,
            values,
        })
    }

    /// Builds column by column from a closure over (subcarrier index, channel).
    pub fn from_fn(
        subcarriers: Vec<i32>,
        n_channels: usize,
        mut f: impl FnMut(i32, usize) -> Complex64,
    ) -> Self {
        let values = subcarriers
            .iter()
            .flat_map(|k| (0..n_channels).map(move |m| (*k, m)))
            .map(|(k, m)| f(k, m))
            .collect();
        Self {
            subcarriers,
            n_channels,
            values,
        }
    }

    pub fn subcarriers(&self) -> &[i32] {
        &self.subcarriers
    }

    pub fn n_subcarriers(&self) -> usize {
        self.subcarriers.len()
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, row: usize, m: usize) -> Complex64 {
        self.values[row * self.n_channels + m]
    }

    /// The array snapshot at subcarrier row `row`.
    pub fn row(&self, row: usize) -> &[Complex64] {
        &self.values[row * self.n_channels..(row + 1) * self.n_channels]
    }

    pub fn channel(&self, m: usize) -> Vec<Complex64> {
        (0..self.n_subcarriers()).map(|r| self.get(r, m)).collect()
    }

    pub fn map(&self, mut f: impl FnMut(usize, usize, Complex64) -> Complex64) -> Self {
        let n = self.n_channels;
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| f(i / n, i % n, *v))
            .collect();
        Self {
            subcarriers: self.subcarriers.clone(),
            n_channels: n,
            values,
        }
    }
}

/// `H_m(k) = Y_m(k) / L(k)` on the 242 used subcarriers.
pub fn estimate_csi(
    fields: &PreambleFields,
    numerology: &OfdmNumerology,
) -> Result<CsiMatrix, RxError> {
    numerology.validate()?;
    let block = fields
        .get(FieldId::VhtLtf)
        .ok_or(RxError::MissingField(FieldId::VhtLtf))?;
    let n = numerology.fft_size;
    let gi = FieldId::VhtLtf.len() - n;
    if block.len() != FieldId::VhtLtf.len() {
        return Err(RxError::Config(format!(
            "VHT-LTF block has {} samples",
            block.len()
        )));
    }
    let reference = vht_ltf_reference(numerology);
    let start = gi - CSI_WINDOW_BACKOFF;
    let spectra: Vec<Vec<Complex64>> = block
        .channels
        .iter()
        .map(|ch| ofdm_demodulate(&ch[start..start + n]))
        .collect();

    let subcarriers = numerology.used_subcarriers().to_vec();
    let mut values = Vec::with_capacity(subcarriers.len() * spectra.len());
    for (k, l) in subcarriers.iter().zip(&reference) {
        let bin = bin_of(*k, n);
        let undo = Complex64::from_polar(
            1.0,
            2.0 * PI * (*k as f64) * CSI_WINDOW_BACKOFF as f64 / n as f64,
        );
        for spec in &spectra {
            values.push(spec[bin] * undo / l);
        }
    }
    CsiMatrix::new(subcarriers, spectra.len(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy_rx::{extract_fields, DetectionResult};
    use crate::waveform::{
        apply_channel, apply_impairments, build_preamble, ArrayGeometry, ChannelModel,
        ImpairmentSpec, Path,
    };
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn at_zero() -> DetectionResult {
        DetectionResult {
            coarse_start: 0,
            fine_start: 0,
            metric_peak: 1.0,
        }
    }

    fn csi_for(channel: &ChannelModel, offsets: Vec<f64>) -> CsiMatrix {
        let num = OfdmNumerology::vht80();
        let p = build_preamble(&num).unwrap();
        let cap = apply_channel(&p, channel, &ArrayGeometry::default(), 80e6).unwrap();
        let spec = ImpairmentSpec {
            phase_offsets: offsets,
            ..ImpairmentSpec::none(4)
        };
        let cap = apply_impairments(&cap, &spec, &mut ChaCha8Rng::seed_from_u64(0));
        estimate_csi(&extract_fields(&cap, &at_zero()).unwrap(), &num).unwrap()
    }

    #[test]
    fn flat_channel_is_unity() {
        let csi = csi_for(&ChannelModel::single(0.0), vec![0.0; 4]);
        assert_eq!(csi.n_subcarriers(), 242);
        assert!(csi.values().iter().all(|h| (h - 1.0).norm() < 1e-9));
    }

    #[test]
    fn delay_gives_linear_phase_slope() {
        let ch = ChannelModel::new(vec![Path::new(50e-9, Complex64::new(1.0, 0.0), 0.0)]).unwrap();
        let csi = csi_for(&ch, vec![0.0; 4]);
        // least-squares slope over the contiguous upper band
        let pts: Vec<(f64, f64)> = csi
            .subcarriers()
            .iter()
            .enumerate()
            .filter(|(_, k)| **k > 0)
            .map(|(r, k)| (*k as f64, csi.get(r, 0).arg()))
            .collect();
        let mut unwrapped = vec![pts[0].1];
        for w in pts.windows(2) {
            let mut d = w[1].1 - w[0].1;
            while d > PI {
                d -= 2.0 * PI;
            }
            while d < -PI {
                d += 2.0 * PI;
            }
            unwrapped.push(unwrapped.last().unwrap() + d);
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = unwrapped.iter().sum::<f64>() / n;
        let sxy: f64 = pts
            .iter()
            .zip(&unwrapped)
            .map(|(p, y)| (p.0 - mx) * (y - my))
            .sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let slope = sxy / sxx;
        let expected = -2.0 * PI * 312.5e3 * 50e-9;
        assert!((slope - expected).abs() < 1e-6, "{slope} vs {expected}");
    }

    #[test]
    fn injected_offsets_visible_per_subcarrier() {
        let phi = [0.0, 0.7, -1.2, 2.1];
        let csi = csi_for(&ChannelModel::single(0.0), phi.to_vec());
        for r in 0..csi.n_subcarriers() {
            for m in 1..4 {
                let d = (csi.get(r, m) * csi.get(r, 0).conj()).arg();
                assert!((d - phi[m]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn linear_in_received_field() {
        let num = OfdmNumerology::vht80();
        let p = build_preamble(&num).unwrap();
        let ch = ChannelModel::new(vec![
            Path::new(0.0, Complex64::new(1.0, 0.0), 0.3),
            Path::new(80e-9, Complex64::new(0.2, 0.3), -0.4),
        ])
        .unwrap();
        let cap = apply_channel(&p, &ch, &ArrayGeometry::default(), 80e6).unwrap();
        let fields = extract_fields(&cap, &at_zero()).unwrap();
        let c = Complex64::new(-0.6, 2.5);
        let mut scaled = fields.clone();
        for ch in scaled.get_mut(FieldId::VhtLtf).unwrap().channels.iter_mut() {
            ch.iter_mut().for_each(|x| *x *= c);
        }
        let a = estimate_csi(&fields, &num).unwrap();
        let b = estimate_csi(&scaled, &num).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x * c - y).norm() <= 1e-12 * (1.0 + y.norm()));
        }
    }

    #[test]
    fn missing_vht_ltf() {
        let fields = PreambleFields { blocks: vec![] };
        assert_eq!(
            estimate_csi(&fields, &OfdmNumerology::vht80()),
            Err(RxError::MissingField(FieldId::VhtLtf))
        );
    }
}
