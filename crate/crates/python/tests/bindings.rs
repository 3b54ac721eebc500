use noonmetry_py::noonmetry_module;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::sync::Once;

fn with_module<F: FnOnce(&Bound<'_, PyDict>)>(body: F) {
    static REGISTER: Once = Once::new();
    REGISTER.call_once(|| pyo3::append_to_inittab!(noonmetry_module));
    Python::with_gil(|py| {
        let globals = PyDict::new(py);
        py.run(c"import noonmetry", Some(&globals), None).unwrap();
        body(&globals);
    });
}

fn eval<'py>(globals: &Bound<'py, PyDict>, code: &std::ffi::CStr) -> Bound<'py, PyAny> {
    globals.py().eval(code, Some(globals), None).unwrap()
}

#[test]
fn bindings_round_trip() {
    with_module(|g| {
        let p: (f64, f64) = eval(g, c"noonmetry.probs_full(0.0, 0.0, 1.0)").extract().unwrap();
        assert_eq!(p, (1.0, 0.0));

        let total: u64 = eval(g, c"noonmetry.sample_counts(0.3, 0.98, 70000, 1).total").extract().unwrap();
        assert_eq!(total, 70000);

        let phi: f64 = eval(g, c"noonmetry.estimate_joint(noonmetry.expected_counts(0.3, 0.98, 70000)).phi")
            .extract()
            .unwrap();
        assert!((phi - 0.3).abs() < 0.01);

        let f: (f64, f64, f64) = eval(g, c"noonmetry.fisher_postselected(0.0, 0.98).entries").extract().unwrap();
        assert!((f.0 - 2.0 * 0.98 * 0.98).abs() < 1e-12);

        let csv_ok: bool = eval(
            g,
            c"(lambda c: noonmetry.CountRecord.from_csv(c.to_csv()).digest() == c.digest())(noonmetry.sample_counts(0.1, 0.9, 100, 2))",
        )
        .extract()
        .unwrap();
        assert!(csv_ok);

        let f4: f64 = eval(g, c"noonmetry.optimize_phase(1, 0.0, 'phi', 19)[1]").extract().unwrap();
        assert!((f4 - 4.0).abs() < 1e-4);
    });
}

#[test]
fn library_errors_become_python_exceptions() {
    with_module(|g| {
        let py = g.py();
        let err = py
            .eval(c"noonmetry.sample_counts(0.3, 0.98, 0, 1)", Some(g), None)
            .unwrap_err();
        let ty = eval(g, c"noonmetry.NoonmetryError");
        assert!(err.get_type(py).is(&ty));
        assert!(err.to_string().contains("invalid_parameter"));
        let err = py
            .eval(c"noonmetry.CountRecord.from_csv('theta_rad,coincidences\\n0.0,x\\n')", Some(g), None)
            .unwrap_err();
        assert!(err.to_string().contains("line 2"));
    });
}
