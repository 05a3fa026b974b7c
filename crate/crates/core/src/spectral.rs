use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};

/// Peak-to-peak amplitude spectrum of a position series.
///
/// `pp_mm[i]` is the peak-to-peak amplitude at frequency `(i + 1) * df_hz`;
/// the 0 Hz term is kept separately as the series mean.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub df_hz: f64,
    pub mean_mm: f64,
    pub pp_mm: Vec<f64>,
}

impl Spectrum {
    pub fn bin_freq(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.df_hz
    }

    /// Iterate over `(frequency, peak-to-peak amplitude)` pairs, 0 Hz excluded.
    pub fn bins(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.pp_mm
            .iter()
            .enumerate()
            .map(|(i, &pp)| (self.bin_freq(i), pp))
    }
}

/// Rectangular-window DFT of `z`, reported as peak-to-peak amplitude per bin:
/// `pp[k] = 4/n * |X_k|` for `1 <= k <= n/2`, so a full-length cosine of
/// amplitude `a` lands in its bin as `2a`.
pub fn dft_pp(z: &[f64], rate_hz: f64) -> Result<Spectrum> {
    let n = z.len();
    if n == 0 {
        return Err(Error::EmptySeries);
    }
    if !n.is_multiple_of(2) {
        return Err(Error::OddLength(n));
    }

    let mut buf: Vec<Complex<f64>> = z.iter().map(|&x| Complex::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let scale = 4.0 / n as f64;
    let pp_mm = buf[1..=n / 2].iter().map(|x| scale * x.norm()).collect();
    Ok(Spectrum {
        df_hz: rate_hz / n as f64,
        mean_mm: z.iter().sum::<f64>() / n as f64,
        pp_mm,
    })
}

/// Highest frequency whose peak-to-peak amplitude reaches `thresh_mm`,
/// or 0.0 if no bin does.
pub fn threshold_maxfreq(s: &Spectrum, thresh_mm: f64) -> f64 {
    s.pp_mm
        .iter()
        .rposition(|&pp| pp >= thresh_mm)
        .map(|i| s.bin_freq(i))
        .unwrap_or(0.0)
}

/// Bin-wise mean of spectra sharing one frequency grid.
pub fn average_spectra(spectra: &[Spectrum]) -> Result<Spectrum> {
    let first = spectra.first().ok_or(Error::NoSpectra)?;
    for s in &spectra[1..] {
        if (s.df_hz - first.df_hz).abs() > 1e-12 {
            return Err(Error::MixedResolutions {
                a: first.df_hz,
                b: s.df_hz,
            });
        }
        if s.pp_mm.len() != first.pp_mm.len() {
            return Err(Error::MixedLengths {
                a: first.pp_mm.len(),
                b: s.pp_mm.len(),
            });
        }
    }

    let k = spectra.len() as f64;
    let mut pp_mm = vec![0.0; first.pp_mm.len()];
    for s in spectra {
        for (acc, &pp) in pp_mm.iter_mut().zip(&s.pp_mm) {
            *acc += pp;
        }
    }
    for acc in &mut pp_mm {
        *acc /= k;
    }

    Ok(Spectrum {
        df_hz: first.df_hz,
        mean_mm: spectra.iter().map(|s| s.mean_mm).sum::<f64>() / k,
        pp_mm,
    })
}

/// `pp(f) = c / f` model of involuntary fingertip tremor, with the fitted
/// band and the high-frequency noise floor used when reading spectra.
#[derive(Debug, Clone, PartialEq)]
pub struct OneOverFModel {
    pub c_mm_hz: f64,
    pub band_lo_hz: f64,
    pub band_hi_hz: f64,
    pub hf_floor_mm: f64,
}

/// Default tremor coefficient, mm·Hz.
pub const TREMOR_C_MM_HZ: f64 = 3.0 / 17.0;

impl Default for OneOverFModel {
    fn default() -> Self {
        OneOverFModel {
            c_mm_hz: TREMOR_C_MM_HZ,
            band_lo_hz: 0.25,
            band_hi_hz: 30.0,
            hf_floor_mm: 0.010,
        }
    }
}

/// Model peak-to-peak amplitude at `f_hz`.
pub fn eval_model(model: &OneOverFModel, f_hz: f64) -> Result<f64> {
    if f_hz <= 0.0 {
        return Err(Error::NonPositiveFrequency(f_hz));
    }
    Ok(model.c_mm_hz / f_hz)
}

/// Least-squares `c` for `pp ~ c/f` over bins inside `[lo, hi]` inclusive.
/// Closed form: `c = sum(pp/f) / sum(1/f^2)`.
pub fn fit_one_over_f(s: &Spectrum, band_lo_hz: f64, band_hi_hz: f64) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut bins = 0usize;
    for (f, pp) in s.bins() {
        if f >= band_lo_hz - 1e-9 && f <= band_hi_hz + 1e-9 {
            num += pp / f;
            den += 1.0 / (f * f);
            bins += 1;
        }
    }
    if bins < 3 {
        return Err(Error::BandTooNarrow {
            lo: band_lo_hz,
            hi: band_hi_hz,
            bins,
            need: 3,
        });
    }
    Ok(num / den)
}
