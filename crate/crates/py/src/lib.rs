//! Python bindings: `import pymasim`.

use std::sync::Arc;

use masim::energy::SchedulerKind;
use masim::oracle::OracleError;
use masim::sequence;
use masim::{EnergyParams, Instruction, MemLayout, ScheduleError, SchedulerConfig, VectorSpec};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

create_exception!(
    pymasim,
    CapacityError,
    PyException,
    "The layout has too few rows for the netlist."
);

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn layout(rows: usize, arrays: usize) -> PyResult<MemLayout> {
    if rows == 0 || arrays == 0 {
        return Err(value_err("rows and arrays must be positive"));
    }
    Ok(MemLayout::new(rows, arrays))
}

fn schedule_err(e: ScheduleError) -> PyErr {
    match e {
        ScheduleError::Capacity(_) | ScheduleError::InsufficientCapacity { .. } => {
            CapacityError::new_err(e.to_string())
        }
        _ => value_err(e),
    }
}

/// An XOR-majority graph.
#[pyclass(frozen, name = "Netlist")]
struct PyNetlist {
    inner: Arc<masim::Netlist>,
}

#[pymethods]
impl PyNetlist {
    /// Parses the `.inputs` / `.node` / `.outputs` text format.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        let inner = masim::parse_netlist(text).map_err(value_err)?;
        Ok(PyNetlist {
            inner: Arc::new(inner),
        })
    }

    #[staticmethod]
    fn random(pis: usize, nodes: usize, pos: usize, seed: u64) -> PyResult<Self> {
        random_netlist(pis, nodes, pos, seed)
    }

    #[getter]
    fn num_pis(&self) -> usize {
        self.inner.num_pis()
    }

    #[getter]
    fn num_nodes(&self) -> usize {
        self.inner.num_nodes()
    }

    #[getter]
    fn content_hash(&self) -> String {
        self.inner.content_hash()
    }

    fn node_names(&self) -> Vec<String> {
        self.inner.nodes().iter().map(|n| n.name.clone()).collect()
    }

    fn to_xmg(&self) -> String {
        self.inner.to_xmg()
    }

    /// Output values for one input assignment.
    fn simulate(&self, inputs: Vec<bool>) -> PyResult<Vec<bool>> {
        if inputs.len() != self.inner.num_pis() {
            return Err(value_err(format!(
                "expected {} inputs, got {}",
                self.inner.num_pis(),
                inputs.len()
            )));
        }
        Ok(self.inner.simulate(&inputs))
    }

    fn __repr__(&self) -> String {
        format!(
            "Netlist(pis={}, nodes={}, outputs={})",
            self.inner.num_pis(),
            self.inner.num_nodes(),
            self.inner.outputs().len()
        )
    }
}

/// An instruction sequence with its statistics.
#[pyclass(frozen, name = "Schedule")]
struct PySchedule {
    net: Arc<masim::Netlist>,
    layout: MemLayout,
    instructions: Vec<Instruction>,
    #[pyo3(get)]
    copies: usize,
    #[pyo3(get)]
    computes: usize,
    #[pyo3(get)]
    arrays_used: usize,
    #[pyo3(get)]
    seed: u64,
}

#[pymethods]
impl PySchedule {
    #[pyo3(signature = (e_compute = 1.0, e_copy = 1.87))]
    fn energy(&self, e_compute: f64, e_copy: f64) -> PyResult<f64> {
        let params = EnergyParams::new(e_compute, e_copy)
            .ok_or_else(|| value_err("energies must be positive and finite"))?;
        Ok(masim::energy_of(&self.instructions, &params))
    }

    /// Compute order as node names.
    fn order(&self) -> Vec<String> {
        self.instructions
            .iter()
            .filter_map(|i| match i {
                Instruction::Compute { node, .. } => Some(self.net.node(*node).name.clone()),
                Instruction::Copy { .. } => None,
            })
            .collect()
    }

    fn to_text(&self) -> String {
        sequence::to_text(&self.net, self.layout, &self.instructions)
    }

    fn to_json(&self) -> String {
        sequence::to_json(&self.net, self.layout, &self.instructions)
    }

    fn __len__(&self) -> usize {
        self.instructions.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Schedule(copies={}, computes={}, arrays_used={})",
            self.copies, self.computes, self.arrays_used
        )
    }
}

#[pyfunction]
fn parse(text: &str) -> PyResult<PyNetlist> {
    PyNetlist::parse(text)
}

#[pyfunction]
fn random_netlist(pis: usize, nodes: usize, pos: usize, seed: u64) -> PyResult<PyNetlist> {
    let inner = masim::random_netlist(pis, nodes, pos, seed).map_err(value_err)?;
    Ok(PyNetlist {
        inner: Arc::new(inner),
    })
}

/// Schedules `net` on `arrays` arrays of `rows` rows each.
#[pyfunction]
#[pyo3(signature = (net, rows, arrays, restarts = SchedulerConfig::DEFAULT_RESTARTS, seed = 0, improve = true, scheduler = "masim"))]
#[allow(clippy::too_many_arguments)]
fn schedule(
    py: Python<'_>,
    net: &PyNetlist,
    rows: usize,
    arrays: usize,
    restarts: usize,
    seed: u64,
    improve: bool,
    scheduler: &str,
) -> PyResult<PySchedule> {
    let kind: SchedulerKind = scheduler.parse().map_err(value_err)?;
    let cfg = SchedulerConfig::new(layout(rows, arrays)?)
        .with_restarts(restarts)
        .with_seed(seed)
        .with_improve(improve);
    let inner = net.inner.clone();
    let res = py.detach(|| kind.run(&inner, &cfg)).map_err(schedule_err)?;
    Ok(PySchedule {
        net: inner,
        layout: cfg.layout,
        copies: res.copies,
        computes: res.computes,
        arrays_used: res.arrays_used,
        seed: res.seed,
        instructions: res.instructions,
    })
}

/// Checks a sequence (text or JSON form). Returns a dict with `valid`,
/// `violations`, `equivalent` and `vectors_checked`.
#[pyfunction]
#[pyo3(signature = (net, sequence_text, rows, arrays, exhaustive = false, seed = 0))]
fn verify<'py>(
    py: Python<'py>,
    net: &PyNetlist,
    sequence_text: &str,
    rows: usize,
    arrays: usize,
    exhaustive: bool,
    seed: u64,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    let layout = layout(rows, arrays)?;
    let is = if sequence_text.trim_start().starts_with('{') {
        sequence::from_json(&net.inner, sequence_text).map(|(_, is)| is)
    } else {
        sequence::from_text(&net.inner, sequence_text).map(|(_, is)| is)
    }
    .map_err(value_err)?;
    let spec = if exhaustive {
        VectorSpec::Exhaustive
    } else {
        VectorSpec::Auto { seed }
    };
    let rep = masim::validate_is(&net.inner, &is, layout);
    let eq = masim::equivalence_check(&net.inner, &is, layout, spec);
    let out = pyo3::types::PyDict::new(py);
    out.set_item("valid", rep.is_clean())?;
    out.set_item(
        "violations",
        rep.violations
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>(),
    )?;
    out.set_item("equivalent", eq.equivalent)?;
    out.set_item("vectors_checked", eq.vectors_checked)?;
    Ok(out)
}

/// Exact minimum number of copies, with a witness schedule. Only for tiny
/// netlists.
#[pyfunction]
#[pyo3(signature = (net, rows, arrays, bound = None))]
fn min_copies(
    py: Python<'_>,
    net: &PyNetlist,
    rows: usize,
    arrays: usize,
    bound: Option<usize>,
) -> PyResult<(usize, PySchedule)> {
    let layout = layout(rows, arrays)?;
    let inner = net.inner.clone();
    let res = py
        .detach(|| masim::min_copies(&inner, layout, bound))
        .map_err(|e| match e {
            OracleError::ResourceLimit(_) => value_err(e),
            _ => CapacityError::new_err(e.to_string()),
        })?;
    let computes = res.witness.len() - res.optimum;
    let mut used = vec![false; arrays];
    used[0] = inner.num_pis() > 0;
    for ins in &res.witness {
        used[layout.array_of(ins.dst()).index()] = true;
    }
    let sched = PySchedule {
        net: inner,
        layout,
        copies: res.optimum,
        computes,
        arrays_used: used.iter().filter(|u| **u).count(),
        seed: 0,
        instructions: res.witness,
    };
    Ok((res.optimum, sched))
}

#[pymodule]
fn pymasim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNetlist>()?;
    m.add_class::<PySchedule>()?;
    m.add("CapacityError", m.py().get_type::<CapacityError>())?;
    m.add_function(wrap_pyfunction!(parse, m)?)?;
    m.add_function(wrap_pyfunction!(random_netlist, m)?)?;
    m.add_function(wrap_pyfunction!(schedule, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(min_copies, m)?)?;
    Ok(())
}
