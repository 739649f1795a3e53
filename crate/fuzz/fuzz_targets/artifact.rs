#![no_main]

use libfuzzer_sys::fuzz_target;
use swarm_mill::controllers::ControllerSpec;
use swarm_mill::sim::WorldConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(spec) = ControllerSpec::from_json(text) else {
        return;
    };
    let again = ControllerSpec::from_json(&spec.to_json()).expect("serialized artifact reparses");
    assert_eq!(again, spec);
    let config = WorldConfig::default();
    let mut ctl = spec.instantiate().expect("parsed artifact instantiates");
    for h in [false, true, true, false] {
        let (v, w) = ctl.next(h, &config).expect("controller steps");
        assert!(v.is_finite() && w.is_finite());
        if matches!(spec, ControllerSpec::Snn(_)) {
            assert!(v.abs() <= config.v_max && w.abs() <= config.omega_max);
        }
    }
});
