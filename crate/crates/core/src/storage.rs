//! DAOS and Lustre capacity arithmetic.

use crate::units::{GB, PB, TB};

/// Widest erasure-coding stripe accepted (data + parity shards).
pub const MAX_EC_WIDTH: usize = 18;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum StorageError {
    #[error("invalid storage spec: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StorageSpec {
    pub daos_servers: usize,
    pub drives_per_server: usize,
    pub drive_capacity: f64,
    pub nics_per_server: usize,
    pub engines_per_server: usize,
    pub peak_bw_target: f64,
    pub ec_data: usize,
    pub ec_parity: usize,
    pub lustre_capacity: f64,
    pub lustre_peak_bw: f64,
}

impl StorageSpec {
    pub fn aurora() -> Self {
        StorageSpec {
            daos_servers: 1024,
            drives_per_server: 16,
            drive_capacity: 15.3 * TB,
            nics_per_server: 2,
            engines_per_server: 2,
            peak_bw_target: 31.0 * TB,
            ec_data: 16,
            ec_parity: 2,
            lustre_capacity: 100.0 * PB,
            lustre_peak_bw: 650.0 * GB,
        }
    }

    pub fn check(&self) -> Result<(), StorageError> {
        if self.ec_data == 0 {
            return Err(StorageError::Invalid("erasure coding needs data shards".into()));
        }
        if self.ec_data + self.ec_parity > MAX_EC_WIDTH {
            return Err(StorageError::Invalid(format!(
                "EC {}+{} is wider than {MAX_EC_WIDTH}",
                self.ec_data, self.ec_parity
            )));
        }
        if self.engines_per_server != 2 {
            return Err(StorageError::Invalid(format!(
                "{} engines per server, expected one per socket (2)",
                self.engines_per_server
            )));
        }
        Ok(())
    }

    /// Server NICs per storage group when servers are spread evenly.
    pub fn endpoints_per_group(&self, storage_groups: usize) -> usize {
        if storage_groups == 0 {
            0
        } else {
            self.daos_servers / storage_groups * self.nics_per_server
        }
    }
}

impl Default for StorageSpec {
    fn default() -> Self {
        StorageSpec::aurora()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DaosCapacity {
    pub raw_bytes: f64,
    pub usable_bytes: f64,
    pub engines: usize,
}

pub fn daos_capacity(s: &StorageSpec) -> DaosCapacity {
    let raw = s.daos_servers as f64 * s.drives_per_server as f64 * s.drive_capacity;
    let usable = raw * s.ec_data as f64 / (s.ec_data + s.ec_parity) as f64;
    DaosCapacity {
        raw_bytes: raw,
        usable_bytes: usable,
        engines: s.daos_servers * s.engines_per_server,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn aurora_daos() {
        let c = daos_capacity(&StorageSpec::aurora());
        assert_relative_eq!(c.raw_bytes, 250.6752e15, max_relative = 1e-12);
        assert_relative_eq!(c.usable_bytes, 250.6752e15 * 16.0 / 18.0, max_relative = 1e-12);
        assert_eq!(c.engines, 2048);
    }

    #[test]
    fn no_parity_means_raw() {
        let s = StorageSpec {
            ec_parity: 0,
            ..StorageSpec::aurora()
        };
        let c = daos_capacity(&s);
        assert_eq!(c.usable_bytes, c.raw_bytes);
    }

    #[test]
    fn ec_width_limit() {
        let s = StorageSpec {
            ec_parity: 3,
            ..StorageSpec::aurora()
        };
        assert!(s.check().is_err());
        assert!(StorageSpec::aurora().check().is_ok());
    }

    #[test]
    fn storage_endpoints_match_fabric() {
        assert_eq!(StorageSpec::aurora().endpoints_per_group(8), 256);
    }
}
