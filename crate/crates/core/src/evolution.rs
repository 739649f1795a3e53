//! Evolutionary search over spiking network structure and parameters.
//!
//! Genomes are [`Network`]s. Each generation keeps the best few verbatim,
//! replaces a fixed share with freshly initialized networks, and fills the
//! rest with tournament-selected parents that are optionally crossed over
//! and then mutated.

use std::collections::{HashMap, HashSet};

use rand::seq::{IndexedMutRandom, IndexedRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::snn::{
    IoMap, Network, Neuron, NeuronId, Synapse, DELAY_RANGE, FORMAT_VERSION, LEAK_CHOICES,
    NUM_INPUTS, NUM_OUTPUTS, THRESHOLD_RANGE, WEIGHT_RANGE,
};

fn d_population() -> usize {
    100
}
fn d_starting_nodes() -> usize {
    10
}
fn d_starting_edges() -> usize {
    20
}
fn d_crossover() -> f64 {
    0.5
}
fn d_mutation() -> f64 {
    0.9
}
fn d_add_node() -> f64 {
    0.55
}
fn d_delete_node() -> f64 {
    0.45
}
fn d_add_edge() -> f64 {
    0.6
}
fn d_delete_edge() -> f64 {
    0.4
}
fn d_tournament_size() -> f64 {
    0.1
}
fn d_tournament_best() -> f64 {
    0.9
}
fn d_random_factor() -> f64 {
    0.10
}
fn d_num_mutations() -> usize {
    3
}
fn d_node_threshold() -> f64 {
    1.0
}
fn d_edge_weight() -> f64 {
    0.65
}
fn d_edge_delay() -> f64 {
    0.35
}
fn d_num_best() -> usize {
    4
}
fn d_alpha() -> f64 {
    0.001
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeMutationWeights {
    #[serde(default = "d_node_threshold")]
    pub threshold: f64,
}

impl Default for NodeMutationWeights {
    fn default() -> Self {
        Self {
            threshold: d_node_threshold(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeMutationWeights {
    #[serde(default = "d_edge_weight")]
    pub weight: f64,
    #[serde(default = "d_edge_delay")]
    pub delay: f64,
}

impl Default for EdgeMutationWeights {
    fn default() -> Self {
        Self {
            weight: d_edge_weight(),
            delay: d_edge_delay(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    /// Set from the experiment-level population size.
    #[serde(skip, default = "d_population")]
    pub population_size: usize,
    #[serde(default = "d_starting_nodes")]
    pub starting_nodes: usize,
    #[serde(default = "d_starting_edges")]
    pub starting_edges: usize,
    #[serde(default = "d_crossover")]
    pub crossover_rate: f64,
    /// Probability that a mutation draw perturbs a parameter rather than
    /// the structure.
    #[serde(default = "d_mutation")]
    pub mutation_rate: f64,
    #[serde(default = "d_add_node")]
    pub add_node_rate: f64,
    #[serde(default = "d_delete_node")]
    pub delete_node_rate: f64,
    #[serde(default = "d_add_edge")]
    pub add_edge_rate: f64,
    #[serde(default = "d_delete_edge")]
    pub delete_edge_rate: f64,
    #[serde(default = "d_tournament_size")]
    pub tournament_size_factor: f64,
    #[serde(default = "d_tournament_best")]
    pub tournament_best_net_factor: f64,
    #[serde(default = "d_random_factor")]
    pub random_factor: f64,
    #[serde(default = "d_num_mutations")]
    pub num_mutations: usize,
    #[serde(default)]
    pub node_mutations: NodeMutationWeights,
    #[serde(default)]
    pub edge_mutations: EdgeMutationWeights,
    #[serde(default = "d_num_best")]
    pub num_best: usize,
    /// Fitness penalty per neuron and per synapse.
    #[serde(default = "d_alpha")]
    pub size_penalty_alpha: f64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            population_size: d_population(),
            starting_nodes: d_starting_nodes(),
            starting_edges: d_starting_edges(),
            crossover_rate: d_crossover(),
            mutation_rate: d_mutation(),
            add_node_rate: d_add_node(),
            delete_node_rate: d_delete_node(),
            add_edge_rate: d_add_edge(),
            delete_edge_rate: d_delete_edge(),
            tournament_size_factor: d_tournament_size(),
            tournament_best_net_factor: d_tournament_best(),
            random_factor: d_random_factor(),
            num_mutations: d_num_mutations(),
            node_mutations: NodeMutationWeights::default(),
            edge_mutations: EdgeMutationWeights::default(),
            num_best: d_num_best(),
            size_penalty_alpha: d_alpha(),
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<(), String> {
        let mut bad = Vec::new();
        if self.population_size == 0 {
            bad.push("population_size must be >= 1".to_string());
        }
        for (name, v) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
            ("add_node_rate", self.add_node_rate),
            ("delete_node_rate", self.delete_node_rate),
            ("add_edge_rate", self.add_edge_rate),
            ("delete_edge_rate", self.delete_edge_rate),
            ("tournament_size_factor", self.tournament_size_factor),
            ("tournament_best_net_factor", self.tournament_best_net_factor),
            ("random_factor", self.random_factor),
        ] {
            if !(0.0..=1.0).contains(&v) {
                bad.push(format!("{name} must lie in [0, 1] (got {v})"));
            }
        }
        for (name, a, b) in [
            ("node", self.add_node_rate, self.delete_node_rate),
            ("edge", self.add_edge_rate, self.delete_edge_rate),
        ] {
            if ((a + b) - 1.0).abs() > 1e-9 {
                bad.push(format!("add/delete {name} rates must sum to 1 (got {})", a + b));
            }
        }
        let e = &self.edge_mutations;
        if !(e.weight >= 0.0 && e.delay >= 0.0 && e.weight + e.delay > 0.0) {
            bad.push("edge mutation weights must be non-negative and not both zero".into());
        }
        if !(self.node_mutations.threshold > 0.0) {
            bad.push("node threshold mutation weight must be > 0".into());
        }
        if !(self.size_penalty_alpha >= 0.0 && self.size_penalty_alpha.is_finite()) {
            bad.push("size_penalty_alpha must be finite and >= 0".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(bad.join("; "))
        }
    }

    pub fn tournament_size(&self) -> usize {
        ((self.tournament_size_factor * self.population_size as f64).ceil() as usize).max(1)
    }

    pub fn random_count(&self) -> usize {
        (self.random_factor * self.population_size as f64).floor() as usize
    }
}

/// A genome with its evaluated fitness.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredGenome {
    pub network: Network,
    pub raw_fitness: Option<f64>,
    pub penalized_fitness: f64,
}

impl ScoredGenome {
    /// Scores a genome; an undefined raw fitness ranks below everything.
    pub fn new(network: Network, raw_fitness: Option<f64>, alpha: f64) -> Self {
        let penalized_fitness = match raw_fitness {
            Some(raw) if raw.is_finite() => raw - alpha * network.size() as f64,
            _ => f64::NEG_INFINITY,
        };
        Self {
            network,
            raw_fitness,
            penalized_fitness,
        }
    }
}

pub fn random_neuron(id: NeuronId, rng: &mut impl Rng) -> Neuron {
    let leak_choice = rng.random_range(0..=LEAK_CHOICES.len());
    Neuron {
        id,
        threshold: rng.random_range(THRESHOLD_RANGE.0..=THRESHOLD_RANGE.1),
        leak_tc: LEAK_CHOICES.get(leak_choice).copied(),
        axonal_delay: 0,
    }
}

pub fn random_synapse(from: NeuronId, to: NeuronId, rng: &mut impl Rng) -> Synapse {
    Synapse {
        from,
        to,
        weight: rng.random_range(WEIGHT_RANGE.0..=WEIGHT_RANGE.1),
        delay: rng.random_range(DELAY_RANGE.0..=DELAY_RANGE.1),
    }
}

/// Picks a uniformly random `(from, to)` pair that has no synapse yet.
fn free_pair(net: &Network, rng: &mut impl Rng) -> Option<(NeuronId, NeuronId)> {
    let existing: HashSet<(NeuronId, NeuronId)> =
        net.synapses.iter().map(|s| (s.from, s.to)).collect();
    let n = net.neurons.len();
    let free = n * n - existing.len();
    if free == 0 {
        return None;
    }
    // Rejection sampling is fast while the graph is sparse.
    if existing.len() * 2 < n * n {
        loop {
            let a = net.neurons[rng.random_range(0..n)].id;
            let b = net.neurons[rng.random_range(0..n)].id;
            if !existing.contains(&(a, b)) {
                return Some((a, b));
            }
        }
    }
    let mut k = rng.random_range(0..free);
    for a in &net.neurons {
        for b in &net.neurons {
            if !existing.contains(&(a.id, b.id)) {
                if k == 0 {
                    return Some((a.id, b.id));
                }
                k -= 1;
            }
        }
    }
    None
}

/// Fresh genome: 2 inputs, 4 outputs, `starting_nodes` floating hidden
/// neurons and `starting_edges` random synapses.
pub fn random_genome(config: &EvolutionConfig, rng: &mut impl Rng) -> Network {
    let io_count = (NUM_INPUTS + NUM_OUTPUTS) as NeuronId;
    let total = io_count + config.starting_nodes as NeuronId;
    let mut net = Network {
        version: FORMAT_VERSION,
        neurons: (0..total).map(|id| random_neuron(id, rng)).collect(),
        synapses: Vec::with_capacity(config.starting_edges),
        io: IoMap {
            inputs: (0..NUM_INPUTS as NeuronId).collect(),
            outputs: (NUM_INPUTS as NeuronId..io_count).collect(),
        },
    };
    for _ in 0..config.starting_edges {
        match free_pair(&net, rng) {
            Some((a, b)) => {
                let s = random_synapse(a, b, rng);
                net.synapses.push(s);
            }
            None => break,
        }
    }
    net
}

pub fn init_population(config: &EvolutionConfig, rng: &mut impl Rng) -> Vec<Network> {
    (0..config.population_size)
        .map(|_| random_genome(config, rng))
        .collect()
}

/// Tournament with replacement: returns the index of the winner.
pub fn tournament_select(population: &[ScoredGenome], config: &EvolutionConfig, rng: &mut impl Rng) -> usize {
    assert!(!population.is_empty(), "empty population");
    let k = config.tournament_size();
    let contenders: Vec<usize> = (0..k).map(|_| rng.random_range(0..population.len())).collect();
    if rng.random_bool(config.tournament_best_net_factor) {
        let mut best = contenders[0];
        for &c in &contenders[1..] {
            let (fc, fb) = (population[c].penalized_fitness, population[best].penalized_fitness);
            if fc > fb || (fc == fb && c < best) {
                best = c;
            }
        }
        best
    } else {
        *contenders.choose(rng).expect("non-empty tournament")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MutationKind {
    AddNode,
    DeleteNode,
    AddEdge,
    DeleteEdge,
    Threshold,
    Weight,
    Delay,
}

/// Draws which mutation to apply next.
pub fn draw_mutation(net: &Network, config: &EvolutionConfig, rng: &mut impl Rng) -> MutationKind {
    if rng.random_bool(config.mutation_rate) {
        // Parameter perturbation: pick a uniform element, then its field.
        let elements = net.neurons.len() + net.synapses.len();
        if rng.random_range(0..elements) < net.neurons.len() {
            MutationKind::Threshold
        } else {
            let e = &config.edge_mutations;
            if rng.random_bool(e.weight / (e.weight + e.delay)) {
                MutationKind::Weight
            } else {
                MutationKind::Delay
            }
        }
    } else if rng.random_bool(0.5) {
        if rng.random_bool(config.add_node_rate) {
            MutationKind::AddNode
        } else {
            MutationKind::DeleteNode
        }
    } else if rng.random_bool(config.add_edge_rate) {
        MutationKind::AddEdge
    } else {
        MutationKind::DeleteEdge
    }
}

/// Applies one mutation in place. Returns `false` when it was a no-op.
pub fn apply_mutation(net: &mut Network, kind: MutationKind, rng: &mut impl Rng) -> bool {
    match kind {
        MutationKind::AddNode => {
            let id = net.next_neuron_id();
            let src = net.neurons.choose(rng).map(|n| n.id);
            let dst = net.neurons.choose(rng).map(|n| n.id);
            net.neurons.push(random_neuron(id, rng));
            if let Some(src) = src {
                let s = random_synapse(src, id, rng);
                net.synapses.push(s);
            }
            if let Some(dst) = dst {
                let s = random_synapse(id, dst, rng);
                net.synapses.push(s);
            }
            true
        }
        MutationKind::DeleteNode => {
            let hidden: Vec<NeuronId> = net
                .neurons
                .iter()
                .map(|n| n.id)
                .filter(|id| !net.is_io(*id))
                .collect();
            let Some(&victim) = hidden.choose(rng) else {
                return false;
            };
            net.neurons.retain(|n| n.id != victim);
            net.synapses.retain(|s| s.from != victim && s.to != victim);
            true
        }
        MutationKind::AddEdge => match free_pair(net, rng) {
            Some((a, b)) => {
                let s = random_synapse(a, b, rng);
                net.synapses.push(s);
                true
            }
            None => false,
        },
        MutationKind::DeleteEdge => {
            if net.synapses.is_empty() {
                return false;
            }
            let i = rng.random_range(0..net.synapses.len());
            net.synapses.remove(i);
            true
        }
        MutationKind::Threshold => {
            let Some(n) = net.neurons.choose_mut(rng) else {
                return false;
            };
            n.threshold = rng.random_range(THRESHOLD_RANGE.0..=THRESHOLD_RANGE.1);
            true
        }
        MutationKind::Weight => {
            let Some(s) = net.synapses.choose_mut(rng) else {
                return false;
            };
            s.weight = rng.random_range(WEIGHT_RANGE.0..=WEIGHT_RANGE.1);
            true
        }
        MutationKind::Delay => {
            let Some(s) = net.synapses.choose_mut(rng) else {
                return false;
            };
            s.delay = rng.random_range(DELAY_RANGE.0..=DELAY_RANGE.1);
            true
        }
    }
}

pub fn mutate(net: &mut Network, config: &EvolutionConfig, rng: &mut impl Rng) {
    for _ in 0..config.num_mutations {
        let kind = draw_mutation(net, config, rng);
        apply_mutation(net, kind, rng);
    }
}

/// Uniform-inheritance crossover keyed by neuron id and `(from, to)` pair.
///
/// Elements present in both parents are always inherited, with their
/// parameters taken from a coin-flipped parent; elements present in one
/// parent are inherited with probability 1/2. Synapses survive only if both
/// endpoints did.
pub fn crossover(a: &Network, b: &Network, rng: &mut impl Rng) -> Network {
    let b_neurons: HashMap<NeuronId, &Neuron> = b.neurons.iter().map(|n| (n.id, n)).collect();
    let a_ids: HashSet<NeuronId> = a.neurons.iter().map(|n| n.id).collect();
    let mut neurons = Vec::new();
    for n in &a.neurons {
        match b_neurons.get(&n.id) {
            Some(other) => neurons.push(if rng.random_bool(0.5) { *n } else { **other }),
            None if a.is_io(n.id) || rng.random_bool(0.5) => neurons.push(*n),
            None => {}
        }
    }
    for n in &b.neurons {
        if !a_ids.contains(&n.id) && (a.is_io(n.id) || rng.random_bool(0.5)) {
            neurons.push(*n);
        }
    }
    let kept: HashSet<NeuronId> = neurons.iter().map(|n| n.id).collect();

    let b_syn: HashMap<(NeuronId, NeuronId), &Synapse> =
        b.synapses.iter().map(|s| ((s.from, s.to), s)).collect();
    let a_pairs: HashSet<(NeuronId, NeuronId)> = a.synapses.iter().map(|s| (s.from, s.to)).collect();
    let mut synapses = Vec::new();
    for s in &a.synapses {
        let chosen = match b_syn.get(&(s.from, s.to)) {
            Some(other) => Some(if rng.random_bool(0.5) { *s } else { **other }),
            None => rng.random_bool(0.5).then_some(*s),
        };
        if let Some(s) = chosen {
            if kept.contains(&s.from) && kept.contains(&s.to) {
                synapses.push(s);
            }
        }
    }
    for s in &b.synapses {
        if !a_pairs.contains(&(s.from, s.to))
            && rng.random_bool(0.5)
            && kept.contains(&s.from)
            && kept.contains(&s.to)
        {
            synapses.push(*s);
        }
    }
    Network {
        version: FORMAT_VERSION,
        neurons,
        synapses,
        io: a.io.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Elite,
    Bred,
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Offspring {
    pub origin: Origin,
    pub network: Network,
}

/// Indices of `population` sorted best-first by penalized fitness; ties
/// keep the lower index first.
pub fn ranking(population: &[ScoredGenome]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..population.len()).collect();
    order.sort_by(|&i, &j| {
        population[j]
            .penalized_fitness
            .total_cmp(&population[i].penalized_fitness)
            .then(i.cmp(&j))
    });
    order
}

/// Builds the next population: elites, bred children, then fresh randoms.
pub fn next_generation(
    population: &[ScoredGenome],
    config: &EvolutionConfig,
    rng: &mut impl Rng,
) -> Vec<Offspring> {
    let size = config.population_size;
    let order = ranking(population);
    let elites = config.num_best.min(size).min(population.len());
    let randoms = config.random_count().min(size - elites);
    let bred = size - elites - randoms;

    let mut next = Vec::with_capacity(size);
    for &i in order.iter().take(elites) {
        next.push(Offspring {
            origin: Origin::Elite,
            network: population[i].network.clone(),
        });
    }
    for _ in 0..bred {
        let pa = tournament_select(population, config, rng);
        let mut child = if rng.random_bool(config.crossover_rate) {
            let pb = tournament_select(population, config, rng);
            crossover(&population[pa].network, &population[pb].network, rng)
        } else {
            population[pa].network.clone()
        };
        mutate(&mut child, config, rng);
        next.push(Offspring {
            origin: Origin::Bred,
            network: child,
        });
    }
    for _ in 0..randoms {
        next.push(Offspring {
            origin: Origin::Random,
            network: random_genome(config, rng),
        });
    }
    next
}
