//! Python bindings: the special functions, one scheme class carrying the
//! kernel parameters and measures, and the main verification entry points.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use hdhi::inequality::{self, HolderPair, NormWeights, Regime, TestFamily, WeightMode};
use hdhi::kernel;
use hdhi::measures::{ContinuousMeasure, DiscreteMeasure, Scheme as CoreScheme};
use hdhi::presets::Preset;
use hdhi::sharpness::{self, OperatorGrid};
use hdhi::weights;

fn to_py_err(e: hdhi::Error) -> PyErr {
    match e {
        hdhi::Error::Domain(_) => PyValueError::new_err(e.to_string()),
        hdhi::Error::Convergence { .. } => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Gamma function for y > 0.
#[pyfunction]
fn gamma(y: f64) -> PyResult<f64> {
    hdhi::specfun::gamma(y).map_err(to_py_err)
}

/// Hurwitz zeta `sum_{k>=0} (k+a)^(-s)` for s > 1, a > 0.
#[pyfunction]
fn hurwitz_zeta(s: f64, a: f64) -> PyResult<f64> {
    hdhi::specfun::hurwitz_zeta(s, a).map_err(to_py_err)
}

/// Riemann zeta for s > 1.
#[pyfunction]
fn riemann_zeta(s: f64) -> PyResult<f64> {
    hdhi::specfun::riemann_zeta(s).map_err(to_py_err)
}

/// One half-discrete configuration: kernel parameters, direction, measures.
#[pyclass]
struct Scheme {
    inner: CoreScheme,
}

fn family_for(kind: &str, regime: Regime, scheme: &CoreScheme) -> PyResult<TestFamily> {
    if kind == "smooth" {
        return Ok(TestFamily::smooth_for(regime, &scheme.params));
    }
    if let Some(rest) = kind.strip_prefix("extremal:") {
        let eps: f64 = rest
            .parse()
            .map_err(|_| PyValueError::new_err(format!("bad extremal epsilon: {rest}")))?;
        return Ok(TestFamily::ExtremalCutoff { eps });
    }
    Err(PyValueError::new_err(format!(
        "unknown test family {kind}; expected smooth | extremal:<eps>"
    )))
}

#[pymethods]
impl Scheme {
    #[new]
    #[pyo3(signature = (rho, alpha, gamma, sigma, delta=1, continuous="unit", discrete="unit", beta=0.0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        rho: f64,
        alpha: f64,
        gamma: f64,
        sigma: f64,
        delta: i32,
        continuous: &str,
        discrete: &str,
        beta: f64,
    ) -> PyResult<Self> {
        let params = kernel::KernelParams::new(rho, alpha, gamma, sigma).map_err(to_py_err)?;
        let cm = ContinuousMeasure::parse(continuous).map_err(to_py_err)?;
        let dm = DiscreteMeasure::parse(discrete, beta).map_err(to_py_err)?;
        Ok(Scheme {
            inner: CoreScheme::new(params, delta, cm, dm).map_err(to_py_err)?,
        })
    }

    /// Named preset: cor51 | cor52 | cor53 | cor54 | remark55.
    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        Ok(Scheme {
            inner: Preset::parse(name).map_err(to_py_err)?.scheme(),
        })
    }

    /// Kernel value h(t).
    fn h(&self, t: f64) -> PyResult<f64> {
        self.inner.params.h(t).map_err(to_py_err)
    }

    /// Best-possible constant: (closed form, quadrature value).
    #[pyo3(signature = (tol=1e-10))]
    fn kernel_constant(&self, tol: f64) -> PyResult<(f64, f64)> {
        let c = kernel::kernel_constant_closed(&self.inner.params).map_err(to_py_err)?;
        let q = kernel::kernel_constant_quadrature(&self.inner.params, tol).map_err(to_py_err)?;
        Ok((c.value, q.value))
    }

    /// Remainder fraction θ over (0, upper).
    fn theta(&self, upper: f64) -> PyResult<f64> {
        kernel::theta(&self.inner.params, upper).map_err(to_py_err)
    }

    /// Discrete-side weight coefficient ω_δ(σ, x).
    #[pyo3(signature = (x, tol=1e-8))]
    fn omega(&self, x: f64, tol: f64) -> PyResult<f64> {
        weights::omega(&self.inner, x, tol).map_err(to_py_err)
    }

    /// Continuous-side weight coefficient ϖ_δ(σ, n).
    #[pyo3(signature = (n, tol=1e-9))]
    fn varpi(&self, n: usize, tol: f64) -> PyResult<f64> {
        weights::varpi(&self.inner, n, tol).map_err(to_py_err)
    }

    /// Both weights with their bound verdicts at (x, n).
    #[pyo3(signature = (x, n, tol=1e-8))]
    fn weight_report<'py>(&self, py: Python<'py>, x: f64, n: usize, tol: f64) -> PyResult<Bound<'py, PyDict>> {
        let r = weights::weight_report(&self.inner, x, n, tol).map_err(to_py_err)?;
        let d = PyDict::new(py);
        d.set_item("x", r.x)?;
        d.set_item("n", r.n)?;
        d.set_item("omega", r.omega)?;
        d.set_item("varpi", r.varpi)?;
        d.set_item("k", r.k_value)?;
        d.set_item("theta", r.theta_value)?;
        d.set_item("upper_bound", r.bound_upper.as_str())?;
        d.set_item("varpi_bound", r.bound_varpi.as_str())?;
        d.set_item("lower_bound", r.bound_lower.as_str())?;
        Ok(d)
    }

    /// Three-relation verification; the weight mode follows the regime.
    #[pyo3(signature = (p, family="smooth", tol=1e-7))]
    fn verify<'py>(
        &self,
        py: Python<'py>,
        p: f64,
        family: &str,
        tol: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let hp = HolderPair::new(p).map_err(to_py_err)?;
        let mode = match hp.regime {
            Regime::ReverseFrac => WeightMode::ThetaAdjusted,
            _ => WeightMode::Plain,
        };
        let fam = family_for(family, hp.regime, &self.inner)?;
        let w = NormWeights::new(&self.inner, hp);
        let r = inequality::verify(&fam, &fam, &w, mode, tol).map_err(to_py_err)?;
        let d = PyDict::new(py);
        d.set_item("p", r.p)?;
        d.set_item("regime", format!("{:?}", r.regime))?;
        d.set_item("I", r.i_value)?;
        d.set_item("J1", r.j1_value)?;
        d.set_item("J2", r.j2_or_j)?;
        d.set_item("norm_f", r.norm_f)?;
        d.set_item("norm_a", r.norm_a)?;
        d.set_item("k", r.k_value)?;
        d.set_item(
            "relations",
            r.relations.iter().map(|v| v.as_str()).collect::<Vec<_>>(),
        )?;
        d.set_item("slack", r.slack.to_vec())?;
        Ok(d)
    }

    /// Extremal trace toward the constant.
    #[pyo3(signature = (eps_schedule, p=2.0, tol=1e-8))]
    fn sharpness_trace<'py>(
        &self,
        py: Python<'py>,
        eps_schedule: Vec<f64>,
        p: f64,
        tol: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let hp = HolderPair::new(p).map_err(to_py_err)?;
        let tr = sharpness::sharpness_trace(&eps_schedule, &hp, &self.inner, tol)
            .map_err(to_py_err)?;
        let d = PyDict::new(py);
        d.set_item(
            "points",
            tr.points
                .iter()
                .map(|pt| (pt.eps, pt.ratio))
                .collect::<Vec<_>>(),
        )?;
        d.set_item("failures", tr.failures.clone())?;
        d.set_item("extrapolated_limit", tr.extrapolated_limit)?;
        d.set_item("fit_residual", tr.fit_residual)?;
        d.set_item("k", tr.k_value)?;
        Ok(d)
    }

    /// Alternating-maximization estimate of the discretized operator norm.
    #[pyo3(signature = (p=2.0, x_min=1e-8, x_max=1e4, x_count=500, n_max=2000, iterations=3000, tol=1e-10))]
    #[allow(clippy::too_many_arguments)]
    fn opnorm(
        &self,
        p: f64,
        x_min: f64,
        x_max: f64,
        x_count: usize,
        n_max: usize,
        iterations: usize,
        tol: f64,
    ) -> PyResult<f64> {
        let hp = HolderPair::new(p).map_err(to_py_err)?;
        let grid =
            OperatorGrid::build(&self.inner, x_min, x_max, x_count, n_max).map_err(to_py_err)?;
        sharpness::opnorm_estimate(&grid, &hp, &self.inner, iterations, tol).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Scheme(rho={}, alpha={}, gamma={}, sigma={}, delta={}, beta={})",
            self.inner.params.rho,
            self.inner.params.alpha,
            self.inner.params.gamma,
            self.inner.params.sigma,
            self.inner.delta,
            self.inner.dm.beta()
        )
    }
}

#[pymodule]
fn hdhi_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(gamma, m)?)?;
    m.add_function(wrap_pyfunction!(hurwitz_zeta, m)?)?;
    m.add_function(wrap_pyfunction!(riemann_zeta, m)?)?;
    m.add_class::<Scheme>()?;
    Ok(())
}
