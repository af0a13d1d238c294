//! Every example runs to completion.

macro_rules! example {
    ($name:ident) => {
        mod $name {
            include!(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/examples/",
                stringify!($name),
                ".rs"
            ));
        }
        #[test]
        fn $name() {
            $name::run_example().unwrap();
        }
    };
}

example!(basis_blocks);
example!(matrix_elements);
example!(spectrum_sweep);
example!(critical_frequency);
example!(adiabatic_ramp);
example!(sudden_shift);
example!(protocol_precision);
example!(fisher_information);
example!(switch_off);
example!(result_cache);
