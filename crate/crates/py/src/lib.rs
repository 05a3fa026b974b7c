//! Python bindings for the stillness toolkit.
//!
//! Exposes run synthesis, per-run reports and the group statistics as plain
//! functions plus two thin wrapper classes, `Run` and `Spectrum`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use stillness_core::io::{render_report, ReportMeta};
use stillness_core::normality::{one_way_anova, shapiro_wilk};
use stillness_core::sim::{generate_tremor, simulate_run, SimConfig};
use stillness_core::spectral::{dft_pp, fit_one_over_f, threshold_maxfreq, OneOverFModel};
use stillness_core::stats::{
    avg_abs_travel, jarque_bera, linear_fit, per_run_stats, poly40_adj_r2, travel_amplitude,
    DFT_AMPL_THRESH_MM,
};
use stillness_core::types::{condition_label, ConditionId, RunRecord, SamplingSpec};

fn err(e: stillness_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn condition(n: u8, m: u8) -> PyResult<ConditionId> {
    ConditionId::new(n, m).map_err(err)
}

/// One simulated or parsed run: positions, velocities and force commands.
#[pyclass(name = "Run")]
struct PyRun {
    rec: RunRecord,
}

#[pymethods]
impl PyRun {
    #[getter]
    fn n(&self) -> u8 {
        self.rec.condition().n()
    }

    #[getter]
    fn m(&self) -> u8 {
        self.rec.condition().m()
    }

    #[getter]
    fn z_mm(&self) -> Vec<f64> {
        self.rec.z_mm().to_vec()
    }

    #[getter]
    fn v_mm_s(&self) -> Vec<f64> {
        self.rec.v_mm_s().to_vec()
    }

    #[getter]
    fn f_target_n(&self) -> Vec<f64> {
        self.rec.f_target_n().to_vec()
    }

    fn __len__(&self) -> usize {
        self.rec.len()
    }

    /// Render the archival report block for this run.
    fn report(&self) -> PyResult<String> {
        let stats = per_run_stats(&self.rec, &SamplingSpec::default()).map_err(err)?;
        Ok(render_report(&stats, &ReportMeta::from_record(&self.rec)))
    }

    /// Per-run statistics as a dict.
    fn stats(&self, py: Python<'_>) -> PyResult<Py<pyo3::types::PyDict>> {
        let s = per_run_stats(&self.rec, &SamplingSpec::default()).map_err(err)?;
        let d = pyo3::types::PyDict::new(py);
        d.set_item("z_min_mm", s.z_min_mm)?;
        d.set_item("z_max_mm", s.z_max_mm)?;
        d.set_item("travel_mm", s.travel_mm)?;
        d.set_item("avg_abs_travel_mm_s", s.avg_abs_travel_mm_s)?;
        d.set_item("jb", s.jb.stat)?;
        d.set_item("jb_p", s.jb.p)?;
        d.set_item("slope_mm_s", s.lin.slope_mm_s)?;
        d.set_item("lin_adj_r2", s.lin.adj_r2)?;
        d.set_item("poly40_adj_r2", s.poly40_adj_r2)?;
        d.set_item("maxfreq_hz", s.maxfreq_hz)?;
        Ok(d.unbind())
    }
}

/// Peak-to-peak amplitude spectrum of a run.
#[pyclass(name = "Spectrum")]
struct PySpectrum {
    s: stillness_core::spectral::Spectrum,
}

#[pymethods]
impl PySpectrum {
    #[getter]
    fn df_hz(&self) -> f64 {
        self.s.df_hz
    }

    #[getter]
    fn mean_mm(&self) -> f64 {
        self.s.mean_mm
    }

    #[getter]
    fn pp_mm(&self) -> Vec<f64> {
        self.s.pp_mm.clone()
    }

    /// Highest frequency whose amplitude reaches the reporting threshold.
    #[pyo3(signature = (thresh_mm = DFT_AMPL_THRESH_MM))]
    fn maxfreq(&self, thresh_mm: f64) -> f64 {
        threshold_maxfreq(&self.s, thresh_mm)
    }

    /// Fit pp = c/f over [lo_hz, hi_hz]; returns c in mm*Hz.
    fn fit_one_over_f(&self, lo_hz: f64, hi_hz: f64) -> PyResult<f64> {
        fit_one_over_f(&self.s, lo_hz, hi_hz).map_err(err)
    }
}

/// Simulate one run of condition (n, m) with the given seed.
#[pyfunction(name = "simulate")]
#[pyo3(signature = (n, m, seed, noise_scale = 1.0, drift = true))]
fn py_simulate(n: u8, m: u8, seed: u64, noise_scale: f64, drift: bool) -> PyResult<PyRun> {
    let mut cfg = SimConfig::new(condition(n, m)?, seed);
    cfg.noise_scale = noise_scale;
    cfg.drift_enabled = drift;
    let rec = simulate_run(&cfg).map_err(err)?;
    Ok(PyRun { rec })
}

/// Haptic and musical labels of a condition.
#[pyfunction(name = "condition_label")]
fn py_condition_label(n: u8, m: u8) -> PyResult<(String, String)> {
    let (h, mu) = condition_label(condition(n, m)?);
    Ok((h.to_string(), mu.to_string()))
}

#[pyfunction(name = "travel_amplitude")]
fn py_travel_amplitude(z: Vec<f64>) -> PyResult<f64> {
    travel_amplitude(&z).map_err(err)
}

#[pyfunction(name = "avg_abs_travel")]
#[pyo3(signature = (z, rate_hz = 4000.0))]
fn py_avg_abs_travel(z: Vec<f64>, rate_hz: f64) -> PyResult<f64> {
    avg_abs_travel(&z, rate_hz).map_err(err)
}

/// Jarque-Bera statistic and its chi-square tail p-value.
#[pyfunction(name = "jarque_bera")]
fn py_jarque_bera(z: Vec<f64>) -> PyResult<(f64, f64)> {
    let r = jarque_bera(&z).map_err(err)?;
    Ok((r.stat, r.p))
}

/// Least-squares slope (per second) and adjusted R^2 of z against time.
#[pyfunction(name = "linear_fit")]
#[pyo3(signature = (z, rate_hz = 4000.0))]
fn py_linear_fit(z: Vec<f64>, rate_hz: f64) -> PyResult<(f64, f64)> {
    let r = linear_fit(&z, rate_hz).map_err(err)?;
    Ok((r.slope_mm_s, r.adj_r2))
}

#[pyfunction(name = "poly40_adj_r2")]
fn py_poly40(z: Vec<f64>) -> PyResult<f64> {
    poly40_adj_r2(&z).map_err(err)
}

/// Peak-to-peak spectrum of a series sampled at rate_hz.
#[pyfunction(name = "dft_pp")]
#[pyo3(signature = (z, rate_hz = 4000.0))]
fn py_dft_pp(z: Vec<f64>, rate_hz: f64) -> PyResult<PySpectrum> {
    Ok(PySpectrum {
        s: dft_pp(&z, rate_hz).map_err(err)?,
    })
}

/// Shapiro-Wilk W and p.
#[pyfunction(name = "shapiro_wilk")]
fn py_shapiro_wilk(x: Vec<f64>) -> PyResult<(f64, f64)> {
    let r = shapiro_wilk(&x).map_err(err)?;
    Ok((r.w, r.p))
}

/// One-way ANOVA over groups; returns (F, p, df_between, df_within).
#[pyfunction(name = "one_way_anova")]
fn py_anova(groups: Vec<Vec<f64>>) -> PyResult<(f64, f64, usize, usize)> {
    let views: Vec<&[f64]> = groups.iter().map(Vec::as_slice).collect();
    let r = one_way_anova(&views).map_err(err)?;
    Ok((r.f_stat, r.p, r.df_between, r.df_within))
}

/// Audible pitch mapped from a fingertip height.
#[pyfunction(name = "pitch_of_z")]
fn py_pitch_of_z(z_mm: f64) -> PyResult<f64> {
    let params = stillness_core::types::HapticParams::default();
    stillness_core::sim::pitch_of_z(z_mm, &params).map_err(err)
}

/// Raw tremor trace from the 1/f model, zero-centered, without the device.
#[pyfunction(name = "generate_tremor")]
#[pyo3(signature = (seed, duration_s = 4.0, rate_hz = 4000.0, drift = true))]
fn py_generate_tremor(seed: u64, duration_s: f64, rate_hz: f64, drift: bool) -> PyResult<Vec<f64>> {
    generate_tremor(&OneOverFModel::default(), seed, duration_s, rate_hz, drift).map_err(err)
}

/// Load the 24x12 travel-amplitude table as {group_name: [values]}.
#[pyfunction(name = "load_amplitude_table")]
fn py_load_table(py: Python<'_>, path: &str) -> PyResult<Py<pyo3::types::PyDict>> {
    let file =
        std::fs::File::open(path).map_err(|e| PyValueError::new_err(format!("{path}: {e}")))?;
    let table = stillness_core::io::parse_amplitude_table(std::io::BufReader::new(file))
        .map_err(|e| err(e.with_path(path)))?;
    let d = pyo3::types::PyDict::new(py);
    for (id, values) in table.groups() {
        d.set_item(id.group_name(), values.to_vec())?;
    }
    Ok(d.unbind())
}

#[pymodule]
fn stillness_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRun>()?;
    m.add_class::<PySpectrum>()?;
    m.add_function(wrap_pyfunction!(py_simulate, m)?)?;
    m.add_function(wrap_pyfunction!(py_condition_label, m)?)?;
    m.add_function(wrap_pyfunction!(py_travel_amplitude, m)?)?;
    m.add_function(wrap_pyfunction!(py_avg_abs_travel, m)?)?;
    m.add_function(wrap_pyfunction!(py_jarque_bera, m)?)?;
    m.add_function(wrap_pyfunction!(py_linear_fit, m)?)?;
    m.add_function(wrap_pyfunction!(py_poly40, m)?)?;
    m.add_function(wrap_pyfunction!(py_dft_pp, m)?)?;
    m.add_function(wrap_pyfunction!(py_shapiro_wilk, m)?)?;
    m.add_function(wrap_pyfunction!(py_anova, m)?)?;
    m.add_function(wrap_pyfunction!(py_pitch_of_z, m)?)?;
    m.add_function(wrap_pyfunction!(py_generate_tremor, m)?)?;
    m.add_function(wrap_pyfunction!(py_load_table, m)?)?;
    m.add("DFT_AMPL_THRESH_MM", DFT_AMPL_THRESH_MM)?;
    m.add("TREMOR_C_MM_HZ", stillness_core::spectral::TREMOR_C_MM_HZ)?;
    Ok(())
}
