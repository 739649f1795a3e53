#![no_main]

use libfuzzer_sys::fuzz_target;
use swarm_mill::snn::{Network, Processor};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(net) = Network::from_json(text) else {
        return;
    };
    let again = Network::from_json(&net.to_json()).expect("serialized network reparses");
    assert_eq!(again, net);
    let mut p = Processor::load(&net).expect("validated network loads");
    for c in 0..8 {
        p.inject_slot(0, 127, c).expect("input slot 0 exists");
    }
    p.set_counting(true);
    p.run(32);
    assert!(p.fire_counts().iter().all(|&n| n <= 32));
});
