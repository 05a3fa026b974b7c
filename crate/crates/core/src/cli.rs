use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::thread;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::io::{
    parse_amplitude_table, parse_run_csv, render_report, write_run_csv, write_spectrum_csv,
    ReportMeta, DEFAULT_SPECTRUM_MAX_HZ,
};
use crate::normality::{anova_gate, group_summary, shapiro_wilk, AmplitudeTable, AnovaOutcome};
use crate::sim::{simulate_run, SimConfig};
use crate::spectral::{average_spectra, dft_pp, fit_one_over_f};
use crate::stats::{amplitude_histogram, per_run_stats, DEFAULT_BIN_MM};
use crate::types::{condition_label, ConditionId, SamplingSpec};

#[derive(Parser)]
#[command(
    name = "stillness",
    version,
    about = "Simulate and analyze fingertip stillness runs"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthesize runs for one condition and write them as CSV
    Simulate {
        /// Condition as "n,m": haptic 0-5, musical 0-1
        #[arg(long)]
        condition: ConditionId,
        /// Seed of the first run; run k uses seed+k
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        runs: u32,
        /// Output directory, created if missing
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        subject: Option<u32>,
        /// Scale on the synthesized movement
        #[arg(long, default_value_t = 1.0)]
        noise_scale: f64,
        /// Disable the slow drift component
        #[arg(long)]
        no_drift: bool,
        /// Emulate device imperfections: latency, force quantization, sensor noise
        #[arg(long)]
        device: bool,
    },
    /// Print per-run reports; optionally dump spectra next to the inputs
    Analyze {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Print report blocks (the default unless --spectrum-csv is given alone)
        #[arg(long)]
        report: bool,
        /// Write FILE.spectrum.csv beside each input
        #[arg(long)]
        spectrum_csv: bool,
    },
    /// Summarize amplitude groups and run the normality-gated ANOVA
    Compare {
        table: PathBuf,
        /// Restrict to one musical condition
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
        musical: Option<u8>,
    },
    /// Shapiro-Wilk W and p for each amplitude group
    Swtest { table: PathBuf },
    /// Fit the 1/f amplitude model to averaged spectra
    FitSpectrum {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Fit band as "LO:HI" in Hz
        #[arg(long, default_value = "0.25:30")]
        band: String,
    },
    /// Histogram of pooled travel amplitudes
    Hist {
        table: PathBuf,
        /// Comma-separated condition codes, e.g. 00,01
        #[arg(long)]
        conditions: String,
        #[arg(long, default_value_t = DEFAULT_BIN_MM)]
        bin: f64,
    },
}

/// Entry point behind `main`; returns the process exit code. Errors become
/// a single diagnostic line on stderr.
pub fn cli_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    match run(cli.cmd, &mut out).and_then(|()| out.flush().map_err(Error::from)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| Error::File {
            path: path.display().to_string(),
            source,
        })
}

fn load_table(path: &Path) -> Result<AmplitudeTable> {
    parse_amplitude_table(open(path)?).map_err(|e| e.with_path(&path.display().to_string()))
}

fn load_run(path: &Path) -> Result<crate::io::ParsedRun> {
    parse_run_csv(open(path)?).map_err(|e| e.with_path(&path.display().to_string()))
}

fn run(cmd: Cmd, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Cmd::Simulate {
            condition,
            seed,
            runs,
            out: dir,
            subject,
            noise_scale,
            no_drift,
            device,
        } => simulate_cmd(
            condition,
            seed,
            runs,
            &dir,
            subject,
            noise_scale,
            no_drift,
            device,
            out,
        ),
        Cmd::Analyze {
            files,
            report,
            spectrum_csv,
        } => analyze_cmd(&files, report || !spectrum_csv, spectrum_csv, out),
        Cmd::Compare { table, musical } => compare_cmd(&table, musical, out),
        Cmd::Swtest { table } => swtest_cmd(&table, out),
        Cmd::FitSpectrum { files, band } => fit_spectrum_cmd(&files, &band, out),
        Cmd::Hist {
            table,
            conditions,
            bin,
        } => hist_cmd(&table, &conditions, bin, out),
    }
}

#[allow(clippy::too_many_arguments)]
fn simulate_cmd(
    condition: ConditionId,
    seed: u64,
    runs: u32,
    dir: &Path,
    subject: Option<u32>,
    noise_scale: f64,
    no_drift: bool,
    device: bool,
    out: &mut dyn Write,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::File {
        path: dir.display().to_string(),
        source,
    })?;
    for k in 0..runs {
        let run_seed = seed + u64::from(k);
        let mut cfg = SimConfig::new(condition, run_seed);
        cfg.subject = subject;
        cfg.run_index = Some(k + 1);
        cfg.noise_scale = noise_scale;
        cfg.drift_enabled = !no_drift;
        cfg.emulate_latency = device;
        cfg.emulate_quantization = device;
        cfg.emulate_sensor_noise = device;
        let rec = simulate_run(&cfg)?;
        let name = format!(
            "run_{}{}_s{:05}.csv",
            condition.n(),
            condition.m(),
            run_seed
        );
        let path = dir.join(name);
        let file = File::create(&path).map_err(|source| Error::File {
            path: path.display().to_string(),
            source,
        })?;
        let mut w = BufWriter::new(file);
        write_run_csv(&mut w, &rec, Some(run_seed))?;
        w.flush()?;
        writeln!(out, "wrote {}", path.display())?;
    }
    Ok(())
}

fn analyze_one(
    path: &Path,
    want_report: bool,
    want_spectrum: bool,
) -> Result<(String, Option<(PathBuf, String)>)> {
    let parsed = load_run(path)?;
    let spec = SamplingSpec::default();
    let block = if want_report {
        let stats = per_run_stats(&parsed.record, &spec)?;
        render_report(&stats, &ReportMeta::from_record(&parsed.record))
    } else {
        String::new()
    };
    let side = if want_spectrum {
        let s = dft_pp(parsed.record.z_mm(), f64::from(spec.position_rate_hz))?;
        let mut buf = Vec::new();
        write_spectrum_csv(&mut buf, &s, DEFAULT_SPECTRUM_MAX_HZ)?;
        let text = String::from_utf8(buf).expect("spectrum csv is ascii");
        Some((path.with_extension("spectrum.csv"), text))
    } else {
        None
    };
    Ok((block, side))
}

fn analyze_cmd(
    files: &[PathBuf],
    want_report: bool,
    want_spectrum: bool,
    out: &mut dyn Write,
) -> Result<()> {
    // Analyses are independent; run them in parallel but emit results in
    // input order.
    let results: Vec<Result<_>> = thread::scope(|s| {
        let handles: Vec<_> = files
            .iter()
            .map(|p| s.spawn(move || analyze_one(p, want_report, want_spectrum)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("analysis worker panicked"))
            .collect()
    });

    let mut first_block = true;
    let mut written = Vec::new();
    for result in results {
        let (block, side) = result?;
        if !block.is_empty() {
            if !first_block {
                writeln!(out)?;
            }
            out.write_all(block.as_bytes())?;
            first_block = false;
        }
        if let Some((path, text)) = side {
            std::fs::write(&path, text).map_err(|source| Error::File {
                path: path.display().to_string(),
                source,
            })?;
            written.push(path);
        }
    }
    for path in written {
        writeln!(out, "wrote {}", path.display())?;
    }
    Ok(())
}

fn compare_cmd(table: &Path, musical: Option<u8>, out: &mut dyn Write) -> Result<()> {
    let table = load_table(table)?;
    let sides: Vec<u8> = match musical {
        Some(m) => vec![m],
        None => vec![0, 1],
    };
    for (i, m) in sides.iter().copied().enumerate() {
        if i > 0 {
            writeln!(out)?;
        }
        let subset = table.musical_subset(m);
        let label = condition_label(subset[0].0).1;
        writeln!(out, "m={m} ({label})")?;
        for (id, values) in &subset {
            let s = group_summary(values)?;
            writeln!(
                out,
                "{} n={} min {} max {} mean {:.3} std {:.3}",
                id.group_name(),
                s.n,
                s.min,
                s.max,
                s.mean,
                s.std
            )?;
        }
        let names: Vec<String> = subset.iter().map(|(id, _)| id.group_name()).collect();
        let groups: Vec<(&str, &[f64])> = names
            .iter()
            .map(String::as_str)
            .zip(subset.iter().map(|(_, v)| *v))
            .collect();
        match anova_gate(&groups, 0.05)? {
            AnovaOutcome::Refusal { failing } => {
                let list: Vec<String> = failing
                    .iter()
                    .map(|(name, p)| format!("{name} p={p:.3}"))
                    .collect();
                writeln!(
                    out,
                    "ANOVA refused (Shapiro-Wilk p < 0.05): {}",
                    list.join(", ")
                )?;
            }
            AnovaOutcome::Anova(res) => {
                writeln!(
                    out,
                    "ANOVA: F={:.3} p={} df=({},{})",
                    res.f_stat,
                    crate::io::sci2(res.p),
                    res.df_between,
                    res.df_within
                )?;
            }
        }
    }
    Ok(())
}

fn swtest_cmd(table: &Path, out: &mut dyn Write) -> Result<()> {
    let table = load_table(table)?;
    for (id, values) in table.groups() {
        let r = shapiro_wilk(values)?;
        writeln!(out, "{} {:.3} {:.3}", id.group_name(), r.w, r.p)?;
    }
    Ok(())
}

fn parse_band(band: &str) -> Result<(f64, f64)> {
    let parse = |s: &str| -> Option<f64> { s.trim().parse().ok() };
    band.split_once(':')
        .and_then(|(lo, hi)| Some((parse(lo)?, parse(hi)?)))
        .ok_or_else(|| Error::InvalidConfig(format!("bad band {band:?}, expected LO:HI in Hz")))
}

fn fit_spectrum_cmd(files: &[PathBuf], band: &str, out: &mut dyn Write) -> Result<()> {
    let (lo, hi) = parse_band(band)?;
    let rate = f64::from(SamplingSpec::default().position_rate_hz);
    let spectra = files
        .iter()
        .map(|p| dft_pp(load_run(p)?.record.z_mm(), rate))
        .collect::<Result<Vec<_>>>()?;
    let avg = average_spectra(&spectra)?;
    let c = fit_one_over_f(&avg, lo, hi)?;
    writeln!(
        out,
        "c = {:.6} mm*Hz (band {lo}-{hi} Hz, {} spectra)",
        c,
        spectra.len()
    )?;
    Ok(())
}

fn parse_condition_codes(codes: &str) -> Result<Vec<ConditionId>> {
    let mut ids = Vec::new();
    for code in codes.split(',') {
        let code = code.trim();
        let name = if code.starts_with("condition") {
            code.to_string()
        } else {
            format!("condition{code}")
        };
        let id = ConditionId::from_group_name(&name)?;
        if ids.contains(&id) {
            return Err(Error::DuplicateGroup(id.group_name()));
        }
        ids.push(id);
    }
    Ok(ids)
}

fn hist_cmd(table: &Path, conditions: &str, bin: f64, out: &mut dyn Write) -> Result<()> {
    let table = load_table(table)?;
    let ids = parse_condition_codes(conditions)?;
    let pooled = table.pooled(&ids);
    let hist = amplitude_histogram(&pooled, bin)?;
    let s = group_summary(&pooled)?;
    let codes: Vec<String> = ids
        .iter()
        .map(|id| format!("{}{}", id.n(), id.m()))
        .collect();
    writeln!(
        out,
        "# conditions {} n={} min {} max {} bin {}",
        codes.join(","),
        s.n,
        s.min,
        s.max,
        bin
    )?;
    writeln!(out, "bin_lo_mm,bin_hi_mm,count")?;
    let edge = |k: i64| {
        let x = k as f64 * bin;
        (x * 1e9).round() / 1e9
    };
    for (i, count) in hist.counts.iter().enumerate() {
        let k = hist.first_bin + i as i64;
        writeln!(out, "{},{},{}", edge(k), edge(k + 1), count)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_captured(cmd: Cmd) -> Result<String> {
        let mut buf = Vec::new();
        run(cmd, &mut buf)?;
        Ok(String::from_utf8(buf).unwrap())
    }

    #[test]
    fn band_parsing() {
        assert_eq!(parse_band("0.25:30").unwrap(), (0.25, 30.0));
        assert_eq!(parse_band(" 1 : 2 ").unwrap(), (1.0, 2.0));
        assert!(parse_band("nope").is_err());
        assert!(parse_band("1:two").is_err());
    }

    #[test]
    fn condition_code_parsing() {
        let ids = parse_condition_codes("00,01").unwrap();
        assert_eq!(ids.len(), 2);
        assert_eq!(ids[0], ConditionId::new(0, 0).unwrap());
        assert_eq!(ids[1], ConditionId::new(0, 1).unwrap());
        assert!(parse_condition_codes("00,00").is_err());
        assert!(parse_condition_codes("60").is_err());
        let named = parse_condition_codes("condition31").unwrap();
        assert_eq!(named[0], ConditionId::new(3, 1).unwrap());
    }

    #[test]
    fn swtest_reads_packaged_table() {
        let table = PathBuf::from(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../data/travel_amplitudes.csv"
        ));
        let text = run_captured(Cmd::Swtest { table }).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 12);
        assert!(lines[0].starts_with("condition00 "));
        assert!(lines[11].starts_with("condition51 "));
    }

    #[test]
    fn missing_file_diagnostic_names_the_path() {
        let err = run_captured(Cmd::Swtest {
            table: PathBuf::from("no_such_table.csv"),
        })
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("no_such_table.csv: "), "{msg}");
        assert!(!msg.contains('\n'));
    }

    #[test]
    fn hist_emits_plottable_csv() {
        let table = PathBuf::from(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../data/travel_amplitudes.csv"
        ));
        let text = run_captured(Cmd::Hist {
            table,
            conditions: "00,01".into(),
            bin: 0.25,
        })
        .unwrap();
        let mut lines = text.lines();
        let head = lines.next().unwrap();
        assert!(head.starts_with("# conditions 00,01 n=48 "), "{head}");
        assert_eq!(lines.next().unwrap(), "bin_lo_mm,bin_hi_mm,count");
        let total: u64 = lines
            .map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap())
            .sum();
        assert_eq!(total, 48);
    }
}
