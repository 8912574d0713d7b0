use pyo3::prelude::*;

#[pymodule]
fn sgauss_py(_m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
