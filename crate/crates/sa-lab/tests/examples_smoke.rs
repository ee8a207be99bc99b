//! Every example doubles as an end-to-end test: each one is compiled into
//! this target and its `main` is run to completion. An example that panics,
//! returns an error, or trips a debug assertion fails the suite.

// A module and a function may share a name (they live in different
// namespaces), so each example gets a module holding its source and a
// same-named test that runs it.
macro_rules! example {
    ($name:ident, $path:literal) => {
        #[path = $path]
        mod $name;

        #[test]
        fn $name() {
            $name::main().expect(concat!("example ", stringify!($name), " failed"));
        }
    };
}

example!(branching_estimator, "../examples/branching_estimator.rs");
example!(linear_clt, "../examples/linear_clt.rs");
example!(polyak_averaging, "../examples/polyak_averaging.rs");
example!(condition_audit, "../examples/condition_audit.rs");
example!(rate_audit, "../examples/rate_audit.rs");
example!(error_decomposition, "../examples/error_decomposition.rs");
example!(stochastic_exponential, "../examples/stochastic_exponential.rs");
