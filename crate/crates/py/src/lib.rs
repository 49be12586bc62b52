//! Python bindings. Matrices cross the boundary as nested lists of `complex`.

use csb_core::airspy::AttackStep;
use csb_core::array::{beam_gain, ArrayResponse, Matrix};
use csb_core::csb_defense::{self, ShiftPair};
use csb_core::experiments::{self, run_attack};
use csb_core::{CsbError, GridIndex, Resolution};
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(csb, InfeasibleError, PyRuntimeError);

fn py_err(e: CsbError) -> PyErr {
    match e {
        CsbError::Infeasible(_) => InfeasibleError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_rows(m: &Matrix) -> Vec<Vec<Complex64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn from_rows(rows: Vec<Vec<Complex64>>) -> PyResult<Matrix> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("expected a non-empty rectangular matrix"));
    }
    let n = rows.len();
    Matrix::from_shape_vec((n, cols), rows.into_iter().flatten().collect()).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn resolution(bits: Option<u32>) -> Resolution {
    bits.map_or(Resolution::Unquantized, Resolution::Bits)
}

/// A planar `rows × cols` half-wavelength array with `bits` phase bits
/// (`None` for unquantized phases).
#[pyclass(name = "ArrayConfig", module = "csb", frozen)]
struct PyArrayConfig(csb_core::ArrayConfig);

#[pymethods]
impl PyArrayConfig {
    #[new]
    #[pyo3(signature = (rows, cols, bits=None))]
    fn new(rows: usize, cols: usize, bits: Option<u32>) -> PyResult<Self> {
        csb_core::ArrayConfig::new(rows, cols, resolution(bits)).map(Self).map_err(py_err)
    }

    #[getter]
    fn rows(&self) -> usize {
        self.0.rows
    }

    #[getter]
    fn cols(&self) -> usize {
        self.0.cols
    }

    #[getter]
    fn bits(&self) -> Option<u32> {
        self.0.resolution.levels().map(|l| l.trailing_zeros())
    }

    fn num_elements(&self) -> usize {
        self.0.num_elements()
    }

    /// Unsigned grid index of the signed pair `(i, j)`.
    fn grid(&self, i: i64, j: i64) -> (usize, usize) {
        let g = self.0.grid(i, j);
        (g.i, g.j)
    }

    fn grid_angles(&self, i: usize, j: usize) -> (f64, f64) {
        self.0.grid_angles(GridIndex::new(i, j))
    }

    fn nearest_grid(&self, theta: f64, phi: f64) -> (usize, usize) {
        let g = self.0.nearest_grid(theta, phi);
        (g.i, g.j)
    }

    fn response(&self, theta: f64, phi: f64) -> Vec<Vec<Complex64>> {
        to_rows(self.0.response(theta, phi).entries())
    }

    fn grid_response(&self, i: usize, j: usize) -> Vec<Vec<Complex64>> {
        to_rows(self.0.grid_response(GridIndex::new(i, j)).entries())
    }

    fn codeword(&self, i: usize, j: usize) -> PyBeamformer {
        PyBeamformer(self.0.codeword(GridIndex::new(i, j)))
    }

    /// Quantized codeword whose mainlobe points at grid direction `(i, j)`.
    fn beam_toward(&self, i: usize, j: usize) -> PyBeamformer {
        PyBeamformer(self.0.beam_toward(GridIndex::new(i, j)))
    }

    /// Complex gain of `f` toward `(theta, phi)` in radians.
    fn gain(&self, f: PyRef<'_, PyBeamformer>, theta: f64, phi: f64) -> PyResult<Complex64> {
        beam_gain(&self.0.response(theta, phi), &f.0).map_err(py_err)
    }

    /// Gain rotation `e^{−j2π(m·j/rows + n·i/cols)}` of shift `(m, n)` at grid `(i, j)`.
    fn shift_phase_factor(&self, m: usize, n: usize, i: usize, j: usize) -> Complex64 {
        csb_defense::shift_phase_factor(ShiftPair::new(m, n), GridIndex::new(i, j), &self.0)
    }

    fn __repr__(&self) -> String {
        format!("ArrayConfig(rows={}, cols={}, resolution={})", self.0.rows, self.0.cols, self.0.resolution)
    }
}

#[pyclass(name = "Beamformer", module = "csb", frozen)]
struct PyBeamformer(csb_core::Beamformer);

#[pymethods]
impl PyBeamformer {
    #[new]
    fn new(entries: Vec<Vec<Complex64>>) -> PyResult<Self> {
        Ok(Self(csb_core::Beamformer::from_raw(from_rows(entries)?)))
    }

    fn entries(&self) -> Vec<Vec<Complex64>> {
        to_rows(self.0.entries())
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    fn frobenius_norm(&self) -> f64 {
        self.0.frobenius_norm()
    }

    /// 2-D circulant shift by `m` rows and `n` columns.
    fn shifted(&self, m: usize, n: usize) -> Self {
        Self(csb_defense::circulant_shift(&self.0, ShiftPair::new(m, n)))
    }

    /// `⟨V, F⟩ = Σ V·conj(F)` for an array response `V`.
    fn gain(&self, response: Vec<Vec<Complex64>>) -> PyResult<Complex64> {
        beam_gain(&ArrayResponse(from_rows(response)?), &self.0).map_err(py_err)
    }
}

/// Phase-noise law seen at grid offset `(delta_i, delta_j)` under uniform shifts.
#[pyfunction]
fn apn_law<'py>(py: Python<'py>, delta_i: i64, delta_j: i64, n_t: usize) -> PyResult<Bound<'py, PyDict>> {
    let law = csb_defense::apn_law(delta_i, delta_j, n_t);
    let d = PyDict::new(py);
    d.set_item("g", law.g)?;
    d.set_item("support", &law.support)?;
    d.set_item("phases", law.support_phases())?;
    d.set_item("probability", law.probability())?;
    Ok(d)
}

/// Classes of M-PSK symbols an eavesdropper with APN gcd `g` cannot tell apart.
#[pyfunction]
fn partition_report<'py>(py: Python<'py>, m_order: usize, g: u64, n_t: usize) -> PyResult<Bound<'py, PyDict>> {
    let r = csb_defense::partition_report(m_order, g, n_t).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("class_size", r.class_size)?;
    d.set_item("num_classes", r.num_classes)?;
    d.set_item("classes", &r.classes)?;
    d.set_item("bits", r.bits())?;
    Ok(d)
}

/// Secrecy mutual information from receiver and eavesdropper SNR terms.
#[pyfunction]
fn smi(rx_snr: f64, eve_snr: f64, m_order: usize, g: u64, n_t: usize) -> f64 {
    csb_defense::smi(rx_snr, eve_snr, m_order, g, n_t)
}

/// Experiment configuration; TOML in, TOML out.
#[pyclass(name = "ExperimentConfig", module = "csb")]
struct PyExperimentConfig(csb_core::ExperimentConfig);

#[pymethods]
impl PyExperimentConfig {
    #[new]
    #[pyo3(signature = (toml=None))]
    fn new(toml: Option<&str>) -> PyResult<Self> {
        match toml {
            Some(t) => csb_core::ExperimentConfig::from_toml(t).map(Self).map_err(py_err),
            None => Ok(Self(Default::default())),
        }
    }

    fn to_toml(&self) -> String {
        self.0.to_toml()
    }

    #[getter]
    fn seed(&self) -> Option<u64> {
        self.0.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: Option<u64>) {
        self.0.seed = seed;
    }

    /// Runs a CLI command (`beam-pattern`, `smi-sweep`, `attack`, `ser`,
    /// `apn-dist`) and returns `{file name: CSV text}`.
    #[pyo3(signature = (command, tiny=false))]
    fn run(&self, py: Python<'_>, command: &str, tiny: bool) -> PyResult<Vec<(String, String)>> {
        self.0.validate().map_err(py_err)?;
        let cfg = self.0.clone();
        let command = command.to_string();
        let files = py
            .detach(move || match command.as_str() {
                "beam-pattern" => experiments::cmd_beam_pattern(&cfg),
                "smi-sweep" => experiments::cmd_smi_sweep(&cfg),
                "attack" => experiments::cmd_attack(&cfg, tiny),
                "ser" => experiments::cmd_ser(&cfg),
                "apn-dist" => experiments::cmd_apn_dist(&cfg),
                other => Err(CsbError::InvalidParameter(format!("unknown command {other:?}"))),
            })
            .map_err(py_err)?;
        Ok(files.into_iter().map(|f| (f.name, f.contents)).collect())
    }

    /// Plans the eavesdropper trajectory for a `bits`-bit transmitter.
    fn attack<'py>(&self, py: Python<'py>, bits: u32) -> PyResult<Bound<'py, PyDict>> {
        self.0.validate().map_err(py_err)?;
        let cfg = self.0.clone();
        let run = py.detach(move || run_attack(&cfg, Resolution::Bits(bits))).map_err(py_err)?;
        let d = PyDict::new(py);
        let cells: Vec<(usize, usize)> = run.trajectory.cells.iter().map(|c| (c.iu, c.iv)).collect();
        d.set_item("cells", cells)?;
        d.set_item("total_reward", run.trajectory.total_reward)?;
        d.set_item("secrecy_rate", run.profile.iter().map(|s: &AttackStep| s.secrecy_rate).collect::<Vec<_>>())?;
        d.set_item("eve_angles", run.profile.iter().map(|s| (s.eve.theta, s.eve.phi)).collect::<Vec<_>>())?;
        Ok(d)
    }
}

#[pymodule]
fn csb(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyArrayConfig>()?;
    m.add_class::<PyBeamformer>()?;
    m.add_class::<PyExperimentConfig>()?;
    m.add_function(wrap_pyfunction!(apn_law, m)?)?;
    m.add_function(wrap_pyfunction!(partition_report, m)?)?;
    m.add_function(wrap_pyfunction!(smi, m)?)?;
    m.add("InfeasibleError", m.py().get_type::<InfeasibleError>())?;
    Ok(())
}
