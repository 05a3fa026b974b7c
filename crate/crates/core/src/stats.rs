use crate::error::{Error, Result};
use crate::spectral::{dft_pp, threshold_maxfreq};
use crate::types::{RunRecord, SamplingSpec};

/// Peak-to-peak amplitude floor used when reading spectra, mm.
pub const DFT_AMPL_THRESH_MM: f64 = 0.010;

/// Default travel-amplitude histogram bin width, mm.
pub const DEFAULT_BIN_MM: f64 = 0.25;

/// Peak-to-peak extent of a series, `max - min`.
pub fn travel_amplitude(z: &[f64]) -> Result<f64> {
    if z.is_empty() {
        return Err(Error::EmptySeries);
    }
    let (min, max) = z
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    Ok(max - min)
}

/// Mean absolute sample-to-sample travel scaled to a rate, mm/s:
/// `mean(|z[i+1] - z[i]|) * rate`.
pub fn avg_abs_travel(z: &[f64], rate_hz: f64) -> Result<f64> {
    if z.len() < 2 {
        return Err(Error::TooFewSamples {
            need: 2,
            got: z.len(),
        });
    }
    let sum: f64 = z.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    Ok(sum / (z.len() - 1) as f64 * rate_hz)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JarqueBera {
    pub stat: f64,
    pub p: f64,
}

/// Jarque-Bera normality statistic from population moments, with the
/// large-sample tail `p = exp(-jb/2)`, the chi-squared(2) survival function.
pub fn jarque_bera(z: &[f64]) -> Result<JarqueBera> {
    let n = z.len();
    if n < 4 {
        return Err(Error::TooFewSamples { need: 4, got: n });
    }
    let nf = n as f64;
    let mean = z.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in z {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    if m2 <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let skew = m3 / m2.powf(1.5);
    let kurt = m4 / (m2 * m2);
    let stat = nf / 6.0 * (skew * skew + (kurt - 3.0).powi(2) / 4.0);
    Ok(JarqueBera {
        stat,
        p: (-stat / 2.0).exp(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    /// Trend of z over time, mm/s.
    pub slope_mm_s: f64,
    /// Adjusted R-squared as a fraction; 0 by convention for flat series.
    pub adj_r2: f64,
}

/// Ordinary least squares of z against time `t_i = i / rate`.
pub fn linear_fit(z: &[f64], rate_hz: f64) -> Result<LinearFit> {
    let n = z.len();
    if n < 3 {
        return Err(Error::TooFewSamples { need: 3, got: n });
    }
    let nf = n as f64;
    let t_mean = (nf - 1.0) / 2.0 / rate_hz;
    let z_mean = z.iter().sum::<f64>() / nf;
    let (mut s_tt, mut s_tz, mut s_zz) = (0.0, 0.0, 0.0);
    for (i, &x) in z.iter().enumerate() {
        let dt = i as f64 / rate_hz - t_mean;
        let dz = x - z_mean;
        s_tt += dt * dt;
        s_tz += dt * dz;
        s_zz += dz * dz;
    }
    if s_zz <= 0.0 {
        return Ok(LinearFit {
            slope_mm_s: 0.0,
            adj_r2: 0.0,
        });
    }
    let slope = s_tz / s_tt;
    let r2 = s_tz * s_tz / (s_tt * s_zz);
    Ok(LinearFit {
        slope_mm_s: slope,
        adj_r2: adjust_r2(r2, n, 2),
    })
}

fn adjust_r2(r2: f64, n: usize, params: usize) -> f64 {
    1.0 - (1.0 - r2) * (n - 1) as f64 / (n - params) as f64
}

/// Adjusted R-squared of a degree-40 polynomial trend (41 parameters).
///
/// Fitted in an orthonormalized Chebyshev basis on [-1, 1]; a raw power basis
/// at this degree is numerically singular in f64.
pub fn poly40_adj_r2(z: &[f64]) -> Result<f64> {
    const DEGREE: usize = 40;
    let n = z.len();
    if n < DEGREE + 2 {
        return Err(Error::TooFewSamples {
            need: DEGREE + 2,
            got: n,
        });
    }
    let x: Vec<f64> = (0..n)
        .map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64)
        .collect();

    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(DEGREE + 1);
    let mut model_ss = 0.0;
    let mut mean_proj = 0.0;
    let mut t_prev: Vec<f64> = vec![1.0; n];
    let mut t_cur: Vec<f64> = x.clone();
    for k in 0..=DEGREE {
        let mut col = match k {
            0 => t_prev.clone(),
            1 => t_cur.clone(),
            _ => {
                let next: Vec<f64> = x
                    .iter()
                    .zip(t_cur.iter().zip(&t_prev))
                    .map(|(&xi, (&c, &p))| 2.0 * xi * c - p)
                    .collect();
                t_prev = std::mem::replace(&mut t_cur, next.clone());
                next
            }
        };
        // Modified Gram-Schmidt with one re-orthogonalization pass.
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &col);
                for (ci, qi) in col.iter_mut().zip(q) {
                    *ci -= c * qi;
                }
            }
        }
        let norm = dot(&col, &col).sqrt();
        if norm <= 0.0 {
            return Err(Error::ZeroVariance);
        }
        for ci in &mut col {
            *ci /= norm;
        }
        let proj = dot(&col, z);
        if k == 0 {
            mean_proj = proj;
        } else {
            model_ss += proj * proj;
        }
        basis.push(col);
    }

    let total_ss = dot(z, z) - mean_proj * mean_proj;
    if total_ss <= 0.0 {
        return Ok(0.0);
    }
    let r2 = (model_ss / total_ss).min(1.0);
    Ok(adjust_r2(r2, n, DEGREE + 1))
}

/// Counts per half-open bin `[k*bin, (k+1)*bin)`, aligned so a bin edge
/// falls on 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin_mm: f64,
    /// Bin index of `counts[0]`; the bin covers `[first_bin*bin_mm, ..)`.
    pub first_bin: i64,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Iterate `(lo, hi, count)` over stored bins.
    pub fn bars(&self) -> impl Iterator<Item = (f64, f64, u64)> + '_ {
        self.counts.iter().enumerate().map(|(i, &c)| {
            let k = self.first_bin + i as i64;
            (k as f64 * self.bin_mm, (k + 1) as f64 * self.bin_mm, c)
        })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

pub fn amplitude_histogram(values: &[f64], bin_mm: f64) -> Result<Histogram> {
    if !bin_mm.is_finite() || bin_mm <= 0.0 {
        return Err(Error::NonPositiveBinWidth(bin_mm));
    }
    if values.is_empty() {
        return Ok(Histogram {
            bin_mm,
            first_bin: 0,
            counts: vec![],
        });
    }
    let idx: Vec<i64> = values
        .iter()
        .map(|&v| (v / bin_mm).floor() as i64)
        .collect();
    let lo = *idx.iter().min().unwrap();
    let hi = *idx.iter().max().unwrap();
    let mut counts = vec![0u64; (hi - lo + 1) as usize];
    for k in idx {
        counts[(k - lo) as usize] += 1;
    }
    Ok(Histogram {
        bin_mm,
        first_bin: lo,
        counts,
    })
}

/// Everything the per-run report block carries, computed from one record.
#[derive(Debug, Clone, PartialEq)]
pub struct PerRunStats {
    pub z_min_mm: f64,
    pub z_max_mm: f64,
    pub travel_mm: f64,
    pub avg_abs_travel_mm_s: f64,
    pub jb: JarqueBera,
    pub lin: LinearFit,
    pub poly40_adj_r2: f64,
    pub dft_ampl_thresh_mm: f64,
    pub maxfreq_hz: f64,
    pub histogram: Histogram,
}

pub fn per_run_stats(run: &RunRecord, sampling: &SamplingSpec) -> Result<PerRunStats> {
    let z = run.z_mm();
    let rate = sampling.position_rate_hz as f64;
    let spectrum = dft_pp(z, rate)?;
    let (min, max) = z
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    Ok(PerRunStats {
        z_min_mm: min,
        z_max_mm: max,
        travel_mm: max - min,
        avg_abs_travel_mm_s: avg_abs_travel(z, rate)?,
        jb: jarque_bera(z)?,
        lin: linear_fit(z, rate)?,
        poly40_adj_r2: poly40_adj_r2(z)?,
        dft_ampl_thresh_mm: DFT_AMPL_THRESH_MM,
        maxfreq_hz: threshold_maxfreq(&spectrum, DFT_AMPL_THRESH_MM),
        histogram: amplitude_histogram(z, DEFAULT_BIN_MM)?,
    })
}
