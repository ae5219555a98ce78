#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(grid) = depthfield::io::parse_fgrid(data) {
        // successful parses re-encode to something parseable
        let bytes = depthfield::io::fgrid_bytes(&grid);
        let again = depthfield::io::parse_fgrid(&bytes).expect("re-encode must parse");
        assert_eq!(grid.dims(), again.dims());
    }
});
