use pyo3::prelude::*;

#[pymodule]
fn noisy_toeplitz_py(_m: &Bound<PyModule>) -> PyResult<()> { Ok(()) }
