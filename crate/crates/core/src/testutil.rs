//! Fixtures shared by unit tests.

use alloc::vec::Vec;

use crate::graph::{NetworkStructure, VariableSpec};

/// Binary variables; the name `S` becomes a binary selection variable
/// with unsampled state `F`.
pub fn binaries(names: &[&str]) -> Vec<VariableSpec> {
    names
        .iter()
        .map(|&n| if n == "S" { VariableSpec::selection(n, &["T", "F"], "F") } else { VariableSpec::binary(n) })
        .collect()
}

pub fn structure(names: &[&str], edges: &[(&str, &str)]) -> NetworkStructure {
    NetworkStructure::with_edges(binaries(names), edges).unwrap()
}

use alloc::format;
use alloc::vec;

use crate::network::{Cpt, GeneratingNetwork};

/// Tiny deterministic generator for fixtures (splitmix64).
pub struct Mix(pub u64);

impl Mix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }
}

/// Random binary network over `V0..V{n-1}` with edges only from lower to
/// higher index and CPT entries bounded away from 0.
pub fn random_network(n: usize, seed: u64) -> GeneratingNetwork {
    let mut rng = Mix(seed);
    let vars = (0..n).map(|i| VariableSpec::binary(format!("V{i}"))).collect();
    let mut parents = vec![Vec::new(); n];
    for (c, ps) in parents.iter_mut().enumerate() {
        for p in 0..c {
            if rng.unit() < 0.5 {
                ps.push(p);
            }
        }
    }
    let s = NetworkStructure::new(vars).unwrap().with_parents(parents).unwrap();
    let cpts = (0..n)
        .map(|i| {
            let rows = (0..s.parent_configs(i))
                .map(|_| {
                    let p = rng.range(0.05, 0.95);
                    vec![p, 1.0 - p]
                })
                .collect();
            Cpt::new(rows)
        })
        .collect();
    GeneratingNetwork::new(s, cpts).unwrap()
}
