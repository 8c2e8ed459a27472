use serde::{Deserialize, Serialize};

/// Number of unit m/z bins in a spectrum vector (bins 1..=1000).
pub const M_MAX: usize = 1000;

/// Basepeak height used for library export.
pub const BASEPEAK_HEIGHT: f64 = 999.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectrumError {
    #[error("peak at m/z {mz} falls outside bins 1..={m_max}")]
    OutOfRange { mz: f64, m_max: usize },
    #[error("spectrum has no positive intensity")]
    ZeroSpectrum,
    #[error("spectrum lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("invalid peak (m/z {mz}, intensity {intensity})")]
    InvalidPeak { mz: f64, intensity: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub mz: f64,
    pub intensity: f64,
}

/// Sparse centroided peak list with library metadata.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PeakList {
    pub name: Option<String>,
    pub compound_id: Option<String>,
    pub precursor_mz: Option<f64>,
    /// Header lines other than the recognised keys, in file order.
    pub metadata: Vec<(String, String)>,
    peaks: Vec<Peak>,
}

impl PeakList {
    /// Builds a peak list, sorting by m/z. Rejects non-positive m/z and
    /// negative or non-finite intensities.
    pub fn new(peaks: Vec<Peak>) -> Result<PeakList, SpectrumError> {
        let mut peaks = peaks;
        for p in &peaks {
            if !(p.mz.is_finite() && p.mz > 0.0 && p.intensity.is_finite() && p.intensity >= 0.0) {
                return Err(SpectrumError::InvalidPeak {
                    mz: p.mz,
                    intensity: p.intensity,
                });
            }
        }
        peaks.sort_by(|a, b| a.mz.total_cmp(&b.mz));
        Ok(PeakList {
            peaks,
            ..PeakList::default()
        })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<PeakList, SpectrumError> {
        PeakList::new(pairs.iter().map(|&(mz, intensity)| Peak { mz, intensity }).collect())
    }

    pub fn peaks(&self) -> &[Peak] {
        &self.peaks
    }

    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }

    /// Identifier used to align spectra with molecules: the compound id when
    /// present, otherwise the name.
    pub fn key(&self) -> Option<&str> {
        self.compound_id.as_deref().or(self.name.as_deref())
    }
}

/// Dense unit-bin spectrum; index `k - 1` holds bin `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    bins: Vec<f64>,
}

impl Spectrum {
    pub fn zeros(len: usize) -> Spectrum {
        Spectrum { bins: vec![0.0; len] }
    }

    /// Wraps raw bins. Negative entries are a caller bug.
    pub fn from_bins(bins: Vec<f64>) -> Spectrum {
        debug_assert!(bins.iter().all(|&b| b >= 0.0), "negative bin");
        Spectrum { bins }
    }

    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Intensity at integer m/z `k` (1-based).
    pub fn at(&self, k: usize) -> f64 {
        self.bins[k - 1]
    }

    pub fn total(&self) -> f64 {
        self.bins.iter().sum()
    }

    pub fn norm(&self) -> f64 {
        self.bins.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max(&self) -> f64 {
        self.bins.iter().copied().fold(0.0, f64::max)
    }

    /// Nonzero bins as a peak list with integer m/z.
    pub fn to_peak_list(&self) -> PeakList {
        let peaks = self
            .bins
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(|(i, &v)| Peak {
                mz: (i + 1) as f64,
                intensity: v,
            })
            .collect();
        PeakList::new(peaks).expect("bins are nonnegative")
    }
}

pub fn bin_spectrum(p: &PeakList) -> Result<Spectrum, SpectrumError> {
    bin_spectrum_with(p, M_MAX)
}

/// Adds each peak's intensity to bin `round(mz)`.
pub fn bin_spectrum_with(p: &PeakList, m_max: usize) -> Result<Spectrum, SpectrumError> {
    let mut bins = vec![0.0; m_max];
    for peak in p.peaks() {
        let k = peak.mz.round();
        if k < 1.0 || k > m_max as f64 {
            return Err(SpectrumError::OutOfRange { mz: peak.mz, m_max });
        }
        bins[k as usize - 1] += peak.intensity;
    }
    Ok(Spectrum { bins })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormMode {
    L2,
    Basepeak,
}

pub fn normalize(s: &Spectrum, mode: NormMode) -> Result<Spectrum, SpectrumError> {
    let scale = match mode {
        NormMode::L2 => s.norm(),
        NormMode::Basepeak => s.max() / BASEPEAK_HEIGHT,
    };
    if scale.is_nan() || scale <= 0.0 {
        return Err(SpectrumError::ZeroSpectrum);
    }
    Ok(Spectrum {
        bins: s.bins.iter().map(|x| x / scale).collect(),
    })
}

pub fn cosine_similarity(a: &Spectrum, b: &Spectrum) -> Result<f64, SpectrumError> {
    if a.len() != b.len() {
        return Err(SpectrumError::LengthMismatch(a.len(), b.len()));
    }
    let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    let (na, nb) = (sq(&a.bins), sq(&b.bins));
    if !(na > 0.0 && nb > 0.0) {
        return Err(SpectrumError::ZeroSpectrum);
    }
    let dot: f64 = a.bins.iter().zip(&b.bins).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb).sqrt()).clamp(0.0, 1.0))
}

pub fn cosine_distance(a: &Spectrum, b: &Spectrum) -> Result<f64, SpectrumError> {
    cosine_similarity(a, b).map(|s| 1.0 - s)
}
