//! Fixed instance suites shared by the benches.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qga_core::assembler::{random_instance, InstanceShape};
use qga_core::pipeline::{BENCH_EDGE_SETS, BENCH_VERTEX_SETS};
use qga_core::CondensedBipartiteGraph;

/// `count` random instances at candidate-set size `k`, same shape as the
/// `qga bench` command.
pub fn instance_suite(count: usize, k: usize, seed: u64) -> Vec<CondensedBipartiteGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
    let shape = InstanceShape::new(BENCH_VERTEX_SETS, BENCH_EDGE_SETS, k);
    (0..count)
        .map(|_| random_instance(&mut rng, &shape))
        .collect()
}
