//! Feature hashing of categorical tokens into a small integer range.
//!
//! Hashing is lossy: equal buckets never imply equal tokens.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const UNIT_SEPARATOR: u8 = 0x1f;

/// Largest supported modulus; buckets must fit in a `u32`.
pub const MAX_MODULUS: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashConfig {
    pub modulus: u64,
}

impl Default for HashConfig {
    fn default() -> Self {
        Self { modulus: 64 }
    }
}

impl HashConfig {
    pub fn new(modulus: u64) -> Result<Self> {
        let cfg = Self { modulus };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if (2..=MAX_MODULUS).contains(&self.modulus) {
            Ok(())
        } else {
            Err(Error::arg(format!("hash modulus {} outside [2, 2^32]", self.modulus)))
        }
    }

    pub fn width(&self) -> usize {
        self.modulus as usize
    }
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    fnv1a64_extend(FNV_OFFSET, bytes)
}

fn fnv1a64_extend(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Bucket of `token` in column `feature_name`:
/// `fnv1a64(name ++ 0x1f ++ token) mod M`.
pub fn hash_category(feature_name: &str, token: &str, cfg: HashConfig) -> u32 {
    let h = fnv1a64_extend(FNV_OFFSET, feature_name.as_bytes());
    let h = fnv1a64_extend(h, &[UNIT_SEPARATOR]);
    let h = fnv1a64_extend(h, token.as_bytes());
    (h % cfg.modulus) as u32
}

/// Column-major table of bucket ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashedTable {
    columns: Vec<Vec<u32>>,
    n_samples: usize,
    modulus: u64,
}

impl HashedTable {
    /// Wraps pre-hashed columns. Every column must have the same length and
    /// every cell must lie in `[0, modulus)`.
    pub fn from_columns(columns: Vec<Vec<u32>>, modulus: u64) -> Result<Self> {
        let n_samples = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n_samples) {
            return Err(Error::arg("hashed columns differ in length"));
        }
        if columns.iter().flatten().any(|&v| u64::from(v) >= modulus) {
            return Err(Error::arg(format!("hashed cell outside [0, {modulus})")));
        }
        Ok(Self { columns, n_samples, modulus })
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn columns(&self) -> &[Vec<u32>] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &[u32] {
        &self.columns[j]
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = u32> + '_ {
        self.columns.iter().map(move |c| c[i])
    }

    /// Restriction to the given sample indices, in that order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            columns: self.columns.iter().map(|c| rows.iter().map(|&i| c[i]).collect()).collect(),
            n_samples: rows.len(),
            modulus: self.modulus,
        }
    }
}

/// Hashes a table of `(column name, tokens)` pairs cell by cell.
pub fn hash_table<S: AsRef<str>>(features: &[(&str, &[S])], cfg: HashConfig) -> Result<HashedTable> {
    cfg.validate()?;
    let columns = features
        .iter()
        .map(|(name, tokens)| tokens.iter().map(|t| hash_category(name, t.as_ref(), cfg)).collect())
        .collect();
    HashedTable::from_columns(columns, cfg.modulus)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_vectors() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        // Reference value from an independent FNV-1a implementation.
        assert_eq!(fnv1a64(b"f1\x1fa"), 10248483535325285164);
        let wide = HashConfig::new(1 << 32).unwrap();
        assert_eq!(hash_category("f1", "a", wide), 25217836);
        assert_eq!(hash_category("f1", "a", HashConfig::default()), 44);
    }

    #[test]
    fn deterministic_and_bounded() {
        let cfg = HashConfig::default();
        assert_eq!(hash_category("job", "clerk", cfg), hash_category("job", "clerk", cfg));
        for i in 0..500 {
            assert!(hash_category("c", &i.to_string(), cfg) < 64);
        }
    }

    #[test]
    fn modulus_validation() {
        assert!(HashConfig::new(1).is_err());
        assert!(HashConfig::new(0).is_err());
        assert!(HashConfig::new((1 << 32) + 1).is_err());
        assert!(HashConfig::new(2).is_ok());
    }

    #[test]
    fn table_shapes_and_name_salting() {
        let cfg = HashConfig::default();
        let one = hash_table(&[("x", &["t"][..])], cfg).unwrap();
        assert_eq!((one.n_samples(), one.n_features()), (1, 1));

        let tokens: Vec<String> = (0..10).map(|i| i.to_string()).collect();
        let t = hash_table(&[("left", &tokens[..]), ("right", &tokens[..])], cfg).unwrap();
        assert_ne!(t.column(0), t.column(1));
        let again = hash_table(&[("left", &tokens[..]), ("right", &tokens[..])], cfg).unwrap();
        assert_eq!(t, again);
    }

    #[test]
    fn from_columns_checks_range() {
        assert!(HashedTable::from_columns(vec![vec![0, 3]], 4).is_ok());
        assert!(HashedTable::from_columns(vec![vec![0, 4]], 4).is_err());
        assert!(HashedTable::from_columns(vec![vec![0], vec![1, 2]], 4).is_err());
    }
}
