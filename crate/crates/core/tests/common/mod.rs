//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use swarm_mill::snn::{IoMap, Network, Neuron, NeuronId, Synapse, FORMAT_VERSION, LEAK_CHOICES};

/// A stimulus on an input neuron: `(neuron id, value, cycle)`.
pub type Stim = (NeuronId, i32, u64);

/// Straightforward cycle-by-cycle simulation: every neuron leaks every
/// cycle, the full event list is scanned for due deliveries, and neurons are
/// visited in declaration order.
pub fn oracle_trace(net: &Network, stimuli: &[Stim], cycles: u64) -> Vec<(u64, NeuronId)> {
    let n = net.neurons.len();
    let pos = |id: NeuronId| net.neurons.iter().position(|x| x.id == id).unwrap();
    let mut charge = vec![0i64; n];
    let mut events: Vec<(u64, usize, i64)> = stimuli
        .iter()
        .map(|&(id, v, at)| (at, pos(id), v as i64))
        .collect();
    let mut trace = Vec::new();
    for t in 0..cycles {
        for (i, q) in charge.iter_mut().enumerate() {
            if let Some(tc) = net.neurons[i].leak_tc {
                let tc = tc as i64;
                let dec = (q.abs() + tc - 1) / tc;
                *q -= q.signum() * dec;
            }
        }
        let mut got: Vec<Option<i64>> = vec![None; n];
        for &(at, i, w) in &events {
            if at == t {
                got[i] = Some(got[i].unwrap_or(0) + w);
            }
        }
        for i in 0..n {
            let Some(w) = got[i] else { continue };
            charge[i] = (charge[i] + w).max(-127);
            if charge[i] >= net.neurons[i].threshold as i64 {
                charge[i] = 0;
                let id = net.neurons[i].id;
                trace.push((t, id));
                for s in net.synapses.iter().filter(|s| s.from == id) {
                    events.push((t + s.delay as u64 + 1, pos(s.to), s.weight as i64));
                }
            }
        }
    }
    trace
}

/// Six I/O neurons, up to four hidden ones, and at most six synapses wired
/// among an active set of at most four neurons that includes an input.
pub fn small_network(rng: &mut impl Rng) -> Network {
    let hidden = rng.random_range(0..=4u32);
    let neuron = |id: NeuronId, rng: &mut dyn rand::RngCore| Neuron {
        id,
        threshold: if rng.random_bool(0.5) {
            rng.random_range(0..=20)
        } else {
            rng.random_range(0..=127)
        },
        leak_tc: if rng.random_bool(0.3) {
            None
        } else {
            Some(LEAK_CHOICES[rng.random_range(0..LEAK_CHOICES.len())])
        },
        axonal_delay: 0,
    };
    let neurons: Vec<Neuron> = (0..6 + hidden).map(|id| neuron(id, rng)).collect();
    let mut pool: Vec<NeuronId> = (1..6 + hidden).collect();
    let mut active = vec![if rng.random_bool(0.5) { 0 } else { 1 }];
    pool.retain(|&x| x != active[0]);
    let extra = rng.random_range(0..=3);
    for _ in 0..extra {
        let k = rng.random_range(0..pool.len());
        active.push(pool.swap_remove(k));
    }
    let mut synapses: Vec<Synapse> = Vec::new();
    for _ in 0..rng.random_range(0..=6) {
        let from = active[rng.random_range(0..active.len())];
        let to = active[rng.random_range(0..active.len())];
        if synapses.iter().any(|s| s.from == from && s.to == to) {
            continue;
        }
        synapses.push(Synapse {
            from,
            to,
            weight: rng.random_range(-127..=127),
            delay: if rng.random_bool(0.8) {
                rng.random_range(0..=4)
            } else {
                rng.random_range(0..=255)
            },
        });
    }
    Network {
        version: FORMAT_VERSION,
        neurons,
        synapses,
        io: IoMap {
            inputs: vec![0, 1],
            outputs: vec![2, 3, 4, 5],
        },
    }
}

pub fn random_stimuli(rng: &mut impl Rng, cycles: u64) -> Vec<Stim> {
    (0..rng.random_range(0..=10))
        .map(|_| {
            (
                rng.random_range(0..=1),
                rng.random_range(-40..=127),
                rng.random_range(0..cycles),
            )
        })
        .collect()
}

/// Fatness straight from the definition, using squared radii.
pub fn direct_fatness(pos: &[(f64, f64)]) -> f64 {
    let n = pos.len() as f64;
    let mx = pos.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pos.iter().map(|p| p.1).sum::<f64>() / n;
    let r2: Vec<f64> = pos.iter().map(|p| (p.0 - mx).powi(2) + (p.1 - my).powi(2)).collect();
    let lo = r2.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = r2.iter().copied().fold(0.0, f64::max);
    if hi.sqrt() < 1e-12 {
        1.0
    } else {
        1.0 - lo / hi
    }
}

/// Tangentness as the mean absolute cosine between the heading vector and
/// the unit radial vector.
pub fn direct_tangentness(pos: &[(f64, f64)], headings: &[f64]) -> f64 {
    let n = pos.len() as f64;
    let mx = pos.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pos.iter().map(|p| p.1).sum::<f64>() / n;
    pos.iter()
        .zip(headings)
        .map(|(p, th)| {
            let (rx, ry) = (p.0 - mx, p.1 - my);
            let r = (rx * rx + ry * ry).sqrt();
            if r == 0.0 {
                th.cos().abs()
            } else {
                ((th.cos() * rx + th.sin() * ry) / r).abs()
            }
        })
        .sum::<f64>()
        / n
}

fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    ((p.0 - a.0 - t * dx).powi(2) + (p.1 - a.1 - t * dy).powi(2)).sqrt()
}

/// Distance from `q` to the closed circular sector with apex `o`, heading
/// `h`, half-angle `a` and radius `range`; zero when `q` lies inside.
pub fn sector_distance(o: (f64, f64), h: f64, a: f64, range: f64, q: (f64, f64)) -> f64 {
    let (dx, dy) = (q.0 - o.0, q.1 - o.1);
    let d = (dx * dx + dy * dy).sqrt();
    let bearing = dy.atan2(dx);
    let off = (bearing - h + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI;
    let within_angle = off.abs() <= a;
    if d == 0.0 || (within_angle && d <= range) {
        return 0.0;
    }
    let left = (o.0 + range * (h + a).cos(), o.1 + range * (h + a).sin());
    let right = (o.0 + range * (h - a).cos(), o.1 + range * (h - a).sin());
    let mut best = point_segment_distance(q, o, left).min(point_segment_distance(q, o, right));
    if within_angle {
        best = best.min(d - range);
    }
    best
}
