use statrs::distribution::{ContinuousCDF, FisherSnedecor, Normal};

use crate::error::{Error, Result};
use crate::types::ConditionId;

/// Entries per condition group: 8 subjects times 3 repeats.
pub const GROUP_SIZE: usize = 24;

/// Travel amplitudes of all 12 condition groups, in canonical column order.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeTable {
    groups: Vec<(ConditionId, Vec<f64>)>,
}

impl AmplitudeTable {
    /// Takes all 12 groups of 24 positive amplitudes, in any order.
    pub fn new(mut groups: Vec<(ConditionId, Vec<f64>)>) -> Result<Self> {
        for (id, values) in &groups {
            if values.len() != GROUP_SIZE {
                return Err(Error::WrongGroupSize {
                    name: id.group_name(),
                    need: GROUP_SIZE,
                    got: values.len(),
                });
            }
            if let Some(i) = values.iter().position(|v| !v.is_finite() || *v <= 0.0) {
                return Err(Error::NonPositiveAmplitude {
                    name: id.group_name(),
                    index: i,
                    value: values[i],
                });
            }
            if groups.iter().filter(|(other, _)| other == id).count() > 1 {
                return Err(Error::DuplicateGroup(id.group_name()));
            }
        }
        for id in ConditionId::all() {
            if !groups.iter().any(|(g, _)| *g == id) {
                return Err(Error::MissingGroup(id));
            }
        }
        groups.sort_by_key(|(id, _)| (id.m(), id.n()));
        Ok(AmplitudeTable { groups })
    }

    pub fn group(&self, id: ConditionId) -> &[f64] {
        &self.groups.iter().find(|(g, _)| *g == id).unwrap().1
    }

    pub fn groups(&self) -> impl Iterator<Item = (ConditionId, &[f64])> {
        self.groups.iter().map(|(id, v)| (*id, v.as_slice()))
    }

    /// The six haptic groups under one musical condition.
    pub fn musical_subset(&self, m: u8) -> Vec<(ConditionId, &[f64])> {
        self.groups().filter(|(id, _)| id.m() == m).collect()
    }

    /// All values of the given conditions, concatenated in table order.
    pub fn pooled(&self, ids: &[ConditionId]) -> Vec<f64> {
        ids.iter()
            .flat_map(|id| self.group(*id).iter().copied())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwResult {
    pub w: f64,
    pub p: f64,
}

/// Shapiro-Wilk W test, Royston's AS R94 algorithm (as in R's shapiro.test),
/// valid for 3 <= n <= 5000.
pub fn shapiro_wilk(x: &[f64]) -> Result<SwResult> {
    let n = x.len();
    if !(3..=5000).contains(&n) {
        return Err(Error::SampleSizeOutOfRange {
            n,
            min: 3,
            max: 5000,
        });
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let range = sorted[n - 1] - sorted[0];
    if range <= 0.0 {
        return Err(Error::ZeroVariance);
    }

    let nn2 = n / 2;
    let mut a = vec![0.0; nn2 + 1]; // 1-based like the reference code
    if n == 3 {
        a[1] = std::f64::consts::FRAC_1_SQRT_2;
    } else {
        royston_coefficients(&mut a, n);
    }

    // W as the squared correlation between the sorted sample and the
    // antisymmetric coefficient vector, numerically via 1 - w1.
    let coeff = |i: usize| -> f64 {
        let j = n - 1 - i;
        if i == j {
            0.0
        } else if i > j {
            a[j + 1]
        } else {
            -a[i + 1]
        }
    };
    let sa = (0..n).map(coeff).sum::<f64>() / n as f64;
    let sx = sorted.iter().sum::<f64>() / range / n as f64;
    let (mut ssa, mut ssx, mut sax) = (0.0, 0.0, 0.0);
    for (i, &xi) in sorted.iter().enumerate() {
        let da = coeff(i) - sa;
        let dx = xi / range - sx;
        ssa += da * da;
        ssx += dx * dx;
        sax += da * dx;
    }
    let ssassx = (ssa * ssx).sqrt();
    let w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
    let w = (1.0 - w1).clamp(0.0, 1.0);

    Ok(SwResult {
        w,
        p: royston_p(w, n),
    })
}

/// Approximate best linear unbiased coefficients for the upper half order
/// statistics, Royston (1995).
fn royston_coefficients(a: &mut [f64], n: usize) {
    const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056];
    const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];

    let nn2 = n / 2;
    let an = n as f64;
    let norm = Normal::standard();
    let mut summ2 = 0.0;
    for (i, ai) in a.iter_mut().enumerate().skip(1) {
        *ai = norm.inverse_cdf((i as f64 - 0.375) / (an + 0.25));
        summ2 += *ai * *ai;
    }
    summ2 *= 2.0;
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / an.sqrt();
    let a1 = poly(&C1, rsn) - a[1] / ssumm2;

    let (i1, fac) = if n > 5 {
        let a2 = -a[2] / ssumm2 + poly(&C2, rsn);
        let fac = ((summ2 - 2.0 * a[1] * a[1] - 2.0 * a[2] * a[2])
            / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2))
            .sqrt();
        a[2] = a2;
        (3, fac)
    } else {
        let fac = ((summ2 - 2.0 * a[1] * a[1]) / (1.0 - 2.0 * a1 * a1)).sqrt();
        (2, fac)
    };
    a[1] = a1;
    for ai in a.iter_mut().take(nn2 + 1).skip(i1) {
        *ai /= -fac;
    }
}

/// Royston's normalizing transformation of W to a standard normal tail.
fn royston_p(w: f64, n: usize) -> f64 {
    const G: [f64; 2] = [-2.273, 0.459];
    const C3: [f64; 4] = [0.544, -0.39978, 0.025054, -0.0006714];
    const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
    const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
    const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];

    if n == 3 {
        // Exact small-sample distribution.
        let stqr = (0.75f64).sqrt().asin();
        let p = 6.0 / std::f64::consts::PI * (w.sqrt().asin() - stqr);
        return p.clamp(0.0, 1.0);
    }

    let an = n as f64;
    let y = (1.0 - w).ln();
    let (z, m, s) = if n <= 11 {
        let gamma = poly(&G, an);
        if y >= gamma {
            return 1e-99;
        }
        ((-(gamma - y).ln()), poly(&C3, an), poly(&C4, an).exp())
    } else {
        (y, poly(&C5, an.ln()), poly(&C6, an.ln()).exp())
    };
    Normal::standard().sf((z - m) / s)
}

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupSummary {
    pub n: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub std: f64,
}

pub fn group_summary(x: &[f64]) -> Result<GroupSummary> {
    let n = x.len();
    if n < 2 {
        return Err(Error::TooFewSamples { need: 2, got: n });
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let ss: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    let (min, max) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    Ok(GroupSummary {
        n,
        min,
        max,
        mean,
        std: (ss / (n - 1) as f64).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnovaResult {
    pub f_stat: f64,
    pub p: f64,
    pub df_between: usize,
    pub df_within: usize,
}

/// Gate outcome: either the F test ran, or it was refused because some
/// groups failed the normality precondition.
#[derive(Debug, Clone, PartialEq)]
pub enum AnovaOutcome {
    Anova(AnovaResult),
    /// Groups whose Shapiro-Wilk p fell below alpha, with those p values.
    Refusal {
        failing: Vec<(String, f64)>,
    },
}

/// Run the one-way F test only if every group passes Shapiro-Wilk at `alpha`.
pub fn anova_gate(groups: &[(&str, &[f64])], alpha: f64) -> Result<AnovaOutcome> {
    if groups.len() < 2 {
        return Err(Error::TooFewGroups {
            need: 2,
            got: groups.len(),
        });
    }
    let mut failing = Vec::new();
    for (name, values) in groups {
        let sw = shapiro_wilk(values)?;
        if sw.p < alpha {
            failing.push((name.to_string(), sw.p));
        }
    }
    if !failing.is_empty() {
        return Ok(AnovaOutcome::Refusal { failing });
    }
    let data: Vec<&[f64]> = groups.iter().map(|(_, v)| *v).collect();
    one_way_anova(&data).map(AnovaOutcome::Anova)
}

/// Textbook one-way ANOVA: between/within sum-of-squares decomposition and
/// the F(k-1, N-k) survival probability.
pub fn one_way_anova(groups: &[&[f64]]) -> Result<AnovaResult> {
    let k = groups.len();
    if k < 2 {
        return Err(Error::TooFewGroups { need: 2, got: k });
    }
    if let Some(empty) = groups.iter().find(|g| g.is_empty()) {
        let _ = empty;
        return Err(Error::EmptySeries);
    }
    let n_total: usize = groups.iter().map(|g| g.len()).sum();
    if n_total <= k {
        return Err(Error::TooFewSamples {
            need: k + 1,
            got: n_total,
        });
    }

    let grand = groups.iter().flat_map(|g| g.iter()).sum::<f64>() / n_total as f64;
    let (mut ssb, mut ssw) = (0.0, 0.0);
    for g in groups {
        let mean = g.iter().sum::<f64>() / g.len() as f64;
        ssb += g.len() as f64 * (mean - grand).powi(2);
        ssw += g.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    }

    let df_between = k - 1;
    let df_within = n_total - k;
    if ssw <= 0.0 {
        if ssb <= 0.0 {
            return Err(Error::UndefinedFStatistic);
        }
        return Ok(AnovaResult {
            f_stat: f64::INFINITY,
            p: 0.0,
            df_between,
            df_within,
        });
    }
    let f_stat = (ssb / df_between as f64) / (ssw / df_within as f64);
    let dist = FisherSnedecor::new(df_between as f64, df_within as f64)
        .expect("degrees of freedom are positive");
    Ok(AnovaResult {
        f_stat,
        p: dist.sf(f_stat),
        df_between,
        df_within,
    })
}
