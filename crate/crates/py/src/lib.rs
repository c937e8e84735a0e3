use pyo3::prelude::*;

#[pymodule]
fn apicov_py(_m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
