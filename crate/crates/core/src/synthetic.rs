//! Synthetic datasets with a known informative interaction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Column, ColumnValues, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlantedParity {
    pub n_samples: usize,
    /// Symbols of each of the two interacting columns.
    pub cardinality: usize,
    pub n_noise: usize,
    /// Symbols of each noise column.
    pub noise_cardinality: usize,
    pub seed: u64,
}

impl Default for PlantedParity {
    fn default() -> Self {
        Self { n_samples: 2000, cardinality: 4, n_noise: 6, noise_cardinality: 4, seed: 0 }
    }
}

pub const PLANTED_LEFT: &str = "a";
pub const PLANTED_RIGHT: &str = "b";
pub const PLANTED_LABEL: &str = "y";

impl PlantedParity {
    /// Categorical columns `a`, `b`, `n1..`: label `y` is `1` iff the symbol
    /// indices of `a` and `b` sum to an even number, so neither column alone
    /// carries any information about it.
    pub fn generate(&self) -> Result<Dataset> {
        if self.cardinality < 2 || self.noise_cardinality < 1 {
            return Err(Error::arg("planted columns need at least 2 symbols"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut a = Vec::with_capacity(self.n_samples);
        let mut b = Vec::with_capacity(self.n_samples);
        let mut noise = vec![Vec::with_capacity(self.n_samples); self.n_noise];
        let mut labels = Vec::with_capacity(self.n_samples);
        for _ in 0..self.n_samples {
            let i = rng.gen_range(0..self.cardinality);
            let j = rng.gen_range(0..self.cardinality);
            a.push(format!("a{i}"));
            b.push(format!("b{j}"));
            for col in noise.iter_mut() {
                col.push(format!("v{}", rng.gen_range(0..self.noise_cardinality)));
            }
            labels.push(if (i + j) % 2 == 0 { "1" } else { "0" }.to_string());
        }
        let mut columns = vec![
            Column { name: PLANTED_LEFT.into(), values: ColumnValues::Categorical(a) },
            Column { name: PLANTED_RIGHT.into(), values: ColumnValues::Categorical(b) },
        ];
        for (k, col) in noise.into_iter().enumerate() {
            columns.push(Column { name: format!("n{}", k + 1), values: ColumnValues::Categorical(col) });
        }
        Dataset::from_columns(PLANTED_LABEL, columns, labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_label_rule() {
        let d = PlantedParity { n_samples: 300, ..Default::default() }.generate().unwrap();
        assert_eq!(d.n_samples(), 300);
        assert_eq!(d.n_features(), 8);
        let (ColumnValues::Categorical(a), ColumnValues::Categorical(b)) =
            (&d.feature("a").unwrap().values, &d.feature("b").unwrap().values)
        else {
            panic!("categorical columns expected")
        };
        for ((x, y), l) in a.iter().zip(b).zip(d.labels()) {
            let s: usize = x[1..].parse::<usize>().unwrap() + y[1..].parse::<usize>().unwrap();
            assert_eq!(l == "1", s.is_multiple_of(2));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let g = PlantedParity { n_samples: 50, ..Default::default() };
        assert_eq!(g.generate().unwrap(), g.generate().unwrap());
        assert_ne!(g.generate().unwrap(), PlantedParity { seed: 1, ..g }.generate().unwrap());
    }
}
