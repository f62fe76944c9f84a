//! Python access to stimulus rendering, the network, the lasso encoder,
//! RDMs and the stage pipeline.
//!
//! Images cross the boundary as flat lists of `CANVAS_H * CANVAS_W`
//! floats in [0, 1], row-major.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyFileNotFoundError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use wordlab::cornet::{self, Layer, NetworkConfig};
use wordlab::pipeline::{Outcome, Pipeline, RunConfig, Stage};
use wordlab::probelab::{self, encoding::LassoOptions};
use wordlab::stimgen::render::{CANVAS_H, CANVAS_W};
use wordlab::stimgen::{probes, render, GlyphSet, RenderSpec, Script, SlotString};
use wordlab::{Error, Tensor};

fn err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } | Error::MissingDependency { .. } => PyFileNotFoundError::new_err(e.to_string()),
        Error::ConfigMismatch { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn script(name: &str) -> PyResult<Script> {
    match name {
        "A" | "a" => Ok(Script::A),
        "B" | "b" => Ok(Script::B),
        _ => Err(PyValueError::new_err(format!("unknown script {name:?}, expected \"A\" or \"B\""))),
    }
}

fn layer(name: &str) -> PyResult<Layer> {
    name.parse().map_err(err)
}

fn image(pixels: Vec<f32>) -> PyResult<Tensor> {
    Tensor::new(vec![1, CANVAS_H, CANVAS_W], pixels).map_err(err)
}

/// Render a word on the slot grid in canonical style.
///
/// `offset` is the first slot; the word is centered when it is omitted.
#[pyfunction]
#[pyo3(signature = (word, script_name="A", offset=None, style=0))]
fn render_word(word: &str, script_name: &str, offset: Option<usize>, style: usize) -> PyResult<Vec<f32>> {
    let glyphs = GlyphSet::new(script(script_name)?);
    let offset = offset.unwrap_or_else(|| probes::center_offset(word.chars().count()));
    let mut spec = RenderSpec::canonical(SlotString::place(word, offset).map_err(err)?);
    spec.style = style;
    Ok(render(&glyphs, &spec).map_err(err)?.into_data())
}

/// Render an 8-slot string such as `"-ab--c--"`.
#[pyfunction]
#[pyo3(signature = (slots, script_name="A"))]
fn render_slots(slots: &str, script_name: &str) -> PyResult<Vec<f32>> {
    let glyphs = GlyphSet::new(script(script_name)?);
    let spec = RenderSpec::canonical(SlotString::parse(slots).map_err(err)?);
    Ok(render(&glyphs, &spec).map_err(err)?.into_data())
}

#[pyclass(name = "Network")]
struct PyNetwork {
    inner: cornet::Network,
}

#[pymethods]
impl PyNetwork {
    #[new]
    #[pyo3(signature = (channels=[64, 64, 128, 256], n_classes=20, seed=0))]
    fn new(channels: [usize; 4], n_classes: usize, seed: u64) -> PyResult<Self> {
        let inner = cornet::Network::init(NetworkConfig { channels, n_classes }, seed).map_err(err)?;
        Ok(PyNetwork { inner })
    }

    /// Load a checkpoint directory written by a training stage.
    #[staticmethod]
    fn load(dir: PathBuf) -> PyResult<Self> {
        Ok(PyNetwork {
            inner: cornet::load_checkpoint(dir).map_err(err)?.network,
        })
    }

    #[getter]
    fn channels(&self) -> [usize; 4] {
        self.inner.config().channels
    }

    #[getter]
    fn n_outputs(&self) -> usize {
        self.inner.n_outputs()
    }

    #[getter]
    fn n_params(&self) -> usize {
        self.inner.n_params()
    }

    fn layer_shape(&self, name: &str) -> PyResult<Vec<usize>> {
        Ok(self.inner.layer_shape(layer(name)?))
    }

    /// Activations of every layer for one image, keyed by layer name.
    fn forward(&self, pixels: Vec<f32>) -> PyResult<BTreeMap<String, Vec<f32>>> {
        let names: Vec<&str> = Layer::ALL.iter().map(|l| l.name()).collect();
        let acts = self.inner.forward_capture(&image(pixels)?, &names).map_err(err)?;
        Ok(acts.into_iter().map(|(l, t)| (l.name().to_string(), t.into_data())).collect())
    }

    /// Class scores for a batch of images.
    fn logits(&self, images: Vec<Vec<f32>>) -> PyResult<Vec<Vec<f32>>> {
        let flat: Vec<f32> = images.iter().flatten().copied().collect();
        let n = self.inner.n_outputs();
        let out = self.inner.logits(&flat).map_err(err)?;
        Ok(out.chunks(n).map(<[f32]>::to_vec).collect())
    }

    /// Activation of one unit and its gradient with respect to the pixels.
    fn unit_gradient(&self, pixels: Vec<f32>, layer_name: &str, unit: usize) -> PyResult<(f32, Vec<f32>)> {
        self.inner.unit_gradient(&pixels, layer(layer_name)?, unit).map_err(err)
    }

    /// Append `extra` freshly initialized output classes.
    #[pyo3(signature = (extra, seed=0))]
    fn extend_output(&mut self, extra: usize, seed: u64) -> PyResult<()> {
        self.inner.extend_output(extra, seed).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Network(channels={:?}, n_outputs={})", self.inner.config().channels, self.inner.n_outputs())
    }
}

/// Lasso fit of `y` on the rows of `x` with an unpenalized intercept.
///
/// Returns `(coef, intercept)`.
#[pyfunction]
#[pyo3(signature = (x, y, lam, tol=1e-6, max_sweeps=20000))]
fn lasso(x: Vec<Vec<f64>>, y: Vec<f64>, lam: f64, tol: f64, max_sweeps: usize) -> PyResult<(Vec<f64>, f64)> {
    let p = x.first().map_or(0, Vec::len);
    if x.iter().any(|r| r.len() != p) {
        return Err(PyValueError::new_err("rows of x differ in length"));
    }
    let flat: Vec<f64> = x.into_iter().flatten().collect();
    let opts = LassoOptions {
        tol,
        max_sweeps,
        ..LassoOptions::default()
    };
    let fit = probelab::lasso(&flat, p, &y, lam, &opts).map_err(err)?;
    Ok((fit.coef, fit.intercept))
}

/// Correlation-distance RDM between rows; undefined entries are `None`.
#[pyfunction]
fn rdm(acts: Vec<Vec<f32>>) -> PyResult<Vec<Vec<Option<f64>>>> {
    let d = acts.first().map_or(0, Vec::len);
    let flat: Vec<f32> = acts.into_iter().flatten().collect();
    let r = probelab::rdm(&flat, d).map_err(err)?;
    Ok((0..r.n).map(|i| (0..r.n).map(|j| r.get(i, j)).collect()).collect())
}

fn pipeline(config: Option<PathBuf>, out: Option<PathBuf>, force: bool, verbose: bool) -> PyResult<Pipeline> {
    let mut cfg = match config {
        Some(path) => RunConfig::load(&path).map_err(err)?,
        None => RunConfig::default(),
    };
    if let Some(out) = out {
        cfg.out_dir = out;
    }
    let mut p = Pipeline::new(cfg).map_err(err)?;
    p.force = force;
    p.verbose = verbose;
    Ok(p)
}

/// Run one stage, or every stage with `"all"`. Returns `"ran"`,
/// `"up-to-date"` or, for `"all"`, `"done"`.
#[pyfunction]
#[pyo3(signature = (stage, config=None, out=None, force=false, verbose=false))]
fn run_stage(
    py: Python<'_>,
    stage: &str,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    force: bool,
    verbose: bool,
) -> PyResult<&'static str> {
    let p = pipeline(config, out, force, verbose)?;
    if stage == "all" {
        py.detach(|| p.run_all()).map_err(err)?;
        return Ok("done");
    }
    let stage: Stage = stage.parse().map_err(err)?;
    match py.detach(|| p.run_stage(stage)).map_err(err)? {
        Outcome::Ran => Ok("ran"),
        Outcome::UpToDate => Ok("up-to-date"),
    }
}

/// The acceptance report of a run directory as text.
#[pyfunction]
#[pyo3(signature = (config=None, out=None))]
fn report(config: Option<PathBuf>, out: Option<PathBuf>) -> PyResult<String> {
    let p = pipeline(config, out, false, false)?;
    p.run_stage(Stage::Report).map_err(err)?;
    Ok(p.report().map_err(err)?.to_text())
}

#[pymodule]
fn pywordlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("CANVAS_H", CANVAS_H)?;
    m.add("CANVAS_W", CANVAS_W)?;
    m.add_class::<PyNetwork>()?;
    m.add_function(wrap_pyfunction!(render_word, m)?)?;
    m.add_function(wrap_pyfunction!(render_slots, m)?)?;
    m.add_function(wrap_pyfunction!(lasso, m)?)?;
    m.add_function(wrap_pyfunction!(rdm, m)?)?;
    m.add_function(wrap_pyfunction!(run_stage, m)?)?;
    m.add_function(wrap_pyfunction!(report, m)?)?;
    Ok(())
}
