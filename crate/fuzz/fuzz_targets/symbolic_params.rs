#![no_main]

use libfuzzer_sys::fuzz_target;
use swarm_mill::controllers::SymbolicParams;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(p) = SymbolicParams::from_json(text) else {
        return;
    };
    let again = SymbolicParams::from_json(&p.to_json()).expect("serialized params reparse");
    assert_eq!(again, p);
    for h in [false, true] {
        let (v, w) = p.next(h);
        assert!(v.is_finite() && w.is_finite());
    }
});
