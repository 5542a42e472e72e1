use super::WaveformError;

/// Total preamble length at 80 MS/s: 40 µs.
pub const PREAMBLE_LEN: usize = 3200;

/// 80 MHz VHT OFDM parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmNumerology {
    pub sample_rate: f64,
    pub fft_size: usize,
    pub subcarrier_spacing: f64,
    pub short_symbol_period: f64,
    pub long_symbol_period: f64,
    used_subcarriers: Vec<i32>,
}

impl Default for OfdmNumerology {
    fn default() -> Self {
        Self::vht80()
    }
}

impl OfdmNumerology {
    pub fn vht80() -> Self {
        let used_subcarriers = (-122..=-2).chain(2..=122).collect();
        Self {
            sample_rate: 80e6,
            fft_size: 256,
            subcarrier_spacing: 312.5e3,
            short_symbol_period: 0.8e-6,
            long_symbol_period: 3.2e-6,
            used_subcarriers,
        }
    }

    /// Signed indices of the 242 used subcarriers, ascending.
    pub fn used_subcarriers(&self) -> &[i32] {
        &self.used_subcarriers
    }

    pub fn n_used(&self) -> usize {
        self.used_subcarriers.len()
    }

    /// Samples per 0.8 µs short period (64).
    pub fn short_period_samples(&self) -> usize {
        (self.short_symbol_period * self.sample_rate).round() as usize
    }

    /// Samples per 3.2 µs long period (256).
    pub fn long_period_samples(&self) -> usize {
        (self.long_symbol_period * self.sample_rate).round() as usize
    }

    /// Only the 80 MHz VHT layout is implemented.
    pub fn validate(&self) -> Result<(), WaveformError> {
        if *self != Self::vht80() {
            return Err(WaveformError::Config(format!(
                "unsupported numerology (fft {} at {} S/s); only the 80 MHz VHT layout is implemented",
                self.fft_size, self.sample_rate
            )));
        }
        Ok(())
    }
}

/// Preamble fields in transmission order. The discriminant is the on-disk id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum FieldId {
    LStf = 0,
    LLtf = 1,
    LSig = 2,
    VhtSigA = 3,
    VhtStf = 4,
    VhtLtf = 5,
    VhtSigB = 6,
}

impl FieldId {
    pub const ALL: [FieldId; 7] = [
        FieldId::LStf,
        FieldId::LLtf,
        FieldId::LSig,
        FieldId::VhtSigA,
        FieldId::VhtStf,
        FieldId::VhtLtf,
        FieldId::VhtSigB,
    ];

    pub fn from_u8(id: u8) -> Option<Self> {
        Self::ALL.get(id as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            FieldId::LStf => "L-STF",
            FieldId::LLtf => "L-LTF",
            FieldId::LSig => "L-SIG",
            FieldId::VhtSigA => "VHT-SIG-A",
            FieldId::VhtStf => "VHT-STF",
            FieldId::VhtLtf => "VHT-LTF",
            FieldId::VhtSigB => "VHT-SIG-B",
        }
    }

    /// Duration in microseconds.
    pub fn duration_us(self) -> usize {
        match self {
            FieldId::LStf | FieldId::LLtf | FieldId::VhtSigA => 8,
            _ => 4,
        }
    }

    /// Length in samples at 80 MS/s.
    pub fn len(self) -> usize {
        self.duration_us() * 80
    }

    /// Offset of the field from the start of L-STF, in samples.
    pub fn offset(self) -> usize {
        Self::ALL
            .iter()
            .take_while(|f| **f != self)
            .map(|f| f.len())
            .sum()
    }
}

impl std::fmt::Display for FieldId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
