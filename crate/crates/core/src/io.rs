use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::normality::AmplitudeTable;
use crate::spectral::Spectrum;
use crate::stats::PerRunStats;
use crate::types::{ConditionId, RunRecord, SamplingSpec};

/// Header of a run CSV; one row per position sample.
pub const RUN_CSV_HEADER: &str = "time_s,z_mm,v_mm_s,f_target_n";

/// Spectrum CSVs cover this band by default, wide enough for every feature
/// the reports care about.
pub const DEFAULT_SPECTRUM_MAX_HZ: f64 = 50.0;

/// Write a run as CSV: metadata comments, header, then one row per sample
/// with times on the 1/4000 s grid. Values print in shortest round-trip
/// form, so parsing recovers the record exactly.
pub fn write_run_csv<W: Write>(w: &mut W, rec: &RunRecord, seed: Option<u64>) -> Result<()> {
    writeln!(w, "# condition={}", rec.condition())?;
    if let Some(s) = rec.subject() {
        writeln!(w, "# subject={s}")?;
    }
    if let Some(r) = rec.run_index() {
        writeln!(w, "# run={r}")?;
    }
    if let Some(s) = seed {
        writeln!(w, "# seed={s}")?;
    }
    writeln!(w, "{RUN_CSV_HEADER}")?;
    let rate = SamplingSpec::default().position_rate_hz as f64;
    for i in 0..rec.len() {
        writeln!(
            w,
            "{},{},{},{}",
            i as f64 / rate,
            rec.z_mm()[i],
            rec.v_mm_s()[i],
            rec.f_target_n()[i]
        )?;
    }
    Ok(())
}

/// A parsed run CSV: the record plus the seed comment if one was present.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedRun {
    pub record: RunRecord,
    pub seed: Option<u64>,
}

pub fn parse_run_csv<R: BufRead>(r: R) -> Result<ParsedRun> {
    let spec = SamplingSpec::default();
    let rate = spec.position_rate_hz as f64;
    let need = spec.samples_per_run();

    let mut condition: Option<ConditionId> = None;
    let mut subject = None;
    let mut run_index = None;
    let mut seed = None;
    let mut saw_header = false;
    let mut z = Vec::with_capacity(need);
    let mut v = Vec::with_capacity(need);
    let mut f = Vec::with_capacity(need);

    let bad = |line: usize, msg: String| Error::BadLine {
        path: String::new(),
        line,
        msg,
    };

    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let text = line.trim_end();
        let lineno = idx + 1;
        if text.is_empty() {
            continue;
        }
        if let Some(comment) = text.strip_prefix('#') {
            if saw_header {
                return Err(bad(lineno, "comment after header".into()));
            }
            if let Some((key, value)) = comment.split_once('=') {
                let value = value.trim();
                match key.trim() {
                    "condition" => {
                        condition = Some(value.parse::<ConditionId>()?);
                    }
                    "subject" => {
                        subject = Some(
                            value
                                .parse::<u32>()
                                .map_err(|_| bad(lineno, format!("bad subject {value:?}")))?,
                        );
                    }
                    "run" => {
                        run_index = Some(
                            value
                                .parse::<u32>()
                                .map_err(|_| bad(lineno, format!("bad run index {value:?}")))?,
                        );
                    }
                    "seed" => {
                        seed = Some(
                            value
                                .parse::<u64>()
                                .map_err(|_| bad(lineno, format!("bad seed {value:?}")))?,
                        );
                    }
                    _ => {}
                }
            }
            continue;
        }
        if !saw_header {
            if text != RUN_CSV_HEADER {
                return Err(bad(lineno, format!("expected header {RUN_CSV_HEADER:?}")));
            }
            saw_header = true;
            continue;
        }

        let mut cells = text.split(',');
        let mut next = |name: &str| -> Result<f64> {
            let cell = cells
                .next()
                .ok_or_else(|| bad(lineno, format!("missing {name} column")))?;
            cell.trim()
                .parse::<f64>()
                .map_err(|_| bad(lineno, format!("bad {name} value {cell:?}")))
        };
        let t = next("time_s")?;
        let zi = next("z_mm")?;
        let vi = next("v_mm_s")?;
        let fi = next("f_target_n")?;
        if cells.next().is_some() {
            return Err(bad(lineno, "expected 4 columns".into()));
        }
        let expected_t = z.len() as f64 / rate;
        if (t - expected_t).abs() > 1e-9 {
            return Err(bad(
                lineno,
                format!(
                    "time {t} off the 1/{} s grid (expected {expected_t})",
                    rate as u32
                ),
            ));
        }
        z.push(zi);
        v.push(vi);
        f.push(fi);
    }

    if !saw_header {
        return Err(Error::NoHeader {
            path: String::new(),
        });
    }
    if z.len() != need {
        return Err(Error::WrongRowCount {
            path: String::new(),
            need,
            got: z.len(),
        });
    }
    let condition = condition.ok_or(Error::MissingCondition {
        path: String::new(),
    })?;
    Ok(ParsedRun {
        record: RunRecord::new(condition, subject, run_index, z, v, f)?,
        seed,
    })
}

/// Header metadata of a report block. Absent fields drop out of the header;
/// with no fields at all the header line is omitted.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ReportMeta {
    pub subject: Option<u32>,
    pub run_index: Option<u32>,
    pub condition: Option<ConditionId>,
}

impl ReportMeta {
    pub fn from_record(rec: &RunRecord) -> Self {
        ReportMeta {
            subject: rec.subject(),
            run_index: rec.run_index(),
            condition: Some(rec.condition()),
        }
    }
}

/// Scientific notation with two decimals and a signed two-digit exponent,
/// the archival p-value format ("4.43e-09", "0.00e+00").
pub fn sci2(x: f64) -> String {
    if x == 0.0 {
        return "0.00e+00".to_string();
    }
    let s = format!("{x:.2e}");
    let (mant, exp) = s.split_once('e').expect("{:e} always contains an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    format!("{mant}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
}

/// Render one per-run report in the archival layout. Same stats always
/// produce byte-identical text.
pub fn render_report(stats: &PerRunStats, meta: &ReportMeta) -> String {
    let mut out = String::new();
    let mut head: Vec<String> = Vec::new();
    if let Some(s) = meta.subject {
        head.push(format!("SUBJECT {s}"));
    }
    if let Some(r) = meta.run_index {
        head.push(format!("RUN {r:02}"));
    }
    if let Some(c) = meta.condition {
        head.push(format!("CONDITION {c}"));
    }
    if !head.is_empty() {
        out.push_str(&head.join(" - "));
        out.push_str("\n\n");
    }

    let pct = |r2: f64| (r2 * 100.0).round() as i64;
    out.push_str(&format!("z_min : {:.2} mm\n", stats.z_min_mm));
    out.push_str(&format!("z_max : {:.2} mm\n", stats.z_max_mm));
    out.push_str(&format!("z_travel_amplitude : {:.2} mm\n", stats.travel_mm));
    out.push_str(&format!(
        "avg_abs_z_travel : {:.2} mm/s\n",
        stats.avg_abs_travel_mm_s
    ));
    out.push_str(&format!("z_jarque-bera_jb : {:.2}\n", stats.jb.stat));
    out.push_str(&format!("z_jarque-bera_p : {}\n", sci2(stats.jb.p)));
    out.push_str(&format!(
        "z_lin_mod_est_slope: {:.2} mm/s\n",
        stats.lin.slope_mm_s
    ));
    out.push_str(&format!("z_lin_mod_adj_R² : {} %\n", pct(stats.lin.adj_r2)));
    out.push_str(&format!(
        "z_poly40_mod_adj_R²: {} %\n",
        pct(stats.poly40_adj_r2)
    ));
    out.push_str(&format!(
        "z_dft_ampl_thresh : {:.3} mm\n",
        stats.dft_ampl_thresh_mm
    ));
    out.push_str(&format!(
        ">=threshold_maxfreq: {:.2} Hz\n",
        stats.maxfreq_hz
    ));
    out
}

/// Write a spectrum as CSV up to `max_freq_hz`; the 0 Hz row carries the mean.
pub fn write_spectrum_csv<W: Write>(w: &mut W, s: &Spectrum, max_freq_hz: f64) -> Result<()> {
    writeln!(w, "freq_hz,pp_mm")?;
    writeln!(w, "0,{}", s.mean_mm)?;
    for (f, pp) in s.bins() {
        if f > max_freq_hz + 1e-9 {
            break;
        }
        writeln!(w, "{f},{pp}")?;
    }
    Ok(())
}

/// Parse the 12-column, 24-row travel-amplitude table.
pub fn parse_amplitude_table<R: BufRead>(r: R) -> Result<AmplitudeTable> {
    let mut lines = r
        .lines()
        .collect::<std::io::Result<Vec<String>>>()?
        .into_iter()
        .map(|l| l.trim_end().to_string())
        .filter(|l| !l.is_empty());

    let header = lines.next().ok_or(Error::NoHeader {
        path: String::new(),
    })?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    if names.len() != 12 {
        return Err(Error::WrongColumnCount {
            path: String::new(),
            need: 12,
            got: names.len(),
        });
    }
    let mut ids = Vec::with_capacity(12);
    for name in &names {
        let id = ConditionId::from_group_name(name)?;
        if ids.contains(&id) {
            return Err(Error::DuplicateGroup(id.group_name()));
        }
        ids.push(id);
    }

    let mut columns: Vec<Vec<f64>> = (0..12).map(|_| Vec::with_capacity(24)).collect();
    let mut rows = 0usize;
    for line in lines {
        rows += 1;
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if rows > 24 {
            continue; // keep counting for the error message
        }
        if cells.len() != 12 {
            return Err(Error::WrongColumnCount {
                path: String::new(),
                need: 12,
                got: cells.len(),
            });
        }
        for (col, cell) in cells.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| Error::BadCell {
                path: String::new(),
                row: rows,
                col: names[col].to_string(),
                value: cell.to_string(),
            })?;
            columns[col].push(value);
        }
    }
    if rows != 24 {
        return Err(Error::WrongRowCount {
            path: String::new(),
            need: 24,
            got: rows,
        });
    }

    AmplitudeTable::new(ids.into_iter().zip(columns).collect())
}
