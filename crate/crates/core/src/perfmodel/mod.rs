//! Alpha-beta-gamma cost model for point-to-point transfers and allreduce.
//!
//! `alpha` is the per-message latency, `beta` the per-byte cost of one NIC
//! link and `gamma` the per-byte cost of a local reduction. Striping over
//! `k` NICs divides the byte cost by `k * efficiency(k)`.

mod collective;
mod trend;

use std::fmt;

pub use collective::{
    allreduce_time, hierarchical_allreduce_time, Algorithm, CollectiveSpec, HierarchicalSpec,
};
pub use trend::{
    classify, powers_of_two, sweep_trend, write_sweep_csv, SweepConfig, Trend, TrendClass,
    FLAT_SLOPE, LINEAR_R2, SWEEP_HEADER,
};

use crate::units::{GB, KIB, MICROSECOND};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CostError {
    #[error("not enough {location} measurements: {what}")]
    Insufficient {
        location: BufferLocation,
        what: &'static str,
    },
    #[error("{algorithm} needs a power-of-two participant count, got {participants}")]
    NonPowerOfTwo {
        algorithm: Algorithm,
        participants: usize,
    },
    #[error("{participants} participants do not factor into {ranks_per_node} ranks per node")]
    NonFactorable {
        participants: usize,
        ranks_per_node: usize,
    },
    #[error("{requested} NICs requested, node has {available}")]
    TooManyNics { requested: usize, available: usize },
    #[error("invalid cost input: {0}")]
    Invalid(String),
}

/// Where message buffers live; selects the calibration set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BufferLocation {
    Cpu,
    Gpu,
}

impl BufferLocation {
    pub fn as_str(self) -> &'static str {
        match self {
            BufferLocation::Cpu => "cpu",
            BufferLocation::Gpu => "gpu",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "cpu" => Some(BufferLocation::Cpu),
            "gpu" => Some(BufferLocation::Gpu),
            _ => None,
        }
    }
}

impl fmt::Display for BufferLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    /// Seconds per message.
    pub alpha: f64,
    /// Seconds per byte over one NIC link.
    pub beta: f64,
    /// Seconds per byte reduced.
    pub gamma: f64,
    pub nics_per_node: usize,
    /// Striping efficiency when more than one NIC carries a transfer.
    pub multi_nic_efficiency: f64,
}

impl CostParams {
    pub fn check(&self) -> Result<(), CostError> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(v >= 0.0) || v.is_infinite() {
                return Err(CostError::Invalid(format!("{name} = {v}")));
            }
        }
        if !(self.multi_nic_efficiency > 0.0 && self.multi_nic_efficiency <= 1.0) {
            return Err(CostError::Invalid(format!(
                "multi-NIC efficiency {} outside (0, 1]",
                self.multi_nic_efficiency
            )));
        }
        if self.nics_per_node == 0 {
            return Err(CostError::Invalid("nics_per_node = 0".into()));
        }
        Ok(())
    }

    pub fn efficiency(&self, nics: usize) -> f64 {
        if nics <= 1 {
            1.0
        } else {
            self.multi_nic_efficiency
        }
    }

    /// Byte cost of a transfer striped over `nics` NICs.
    pub fn effective_beta(&self, nics: usize) -> f64 {
        let k = nics.max(1);
        self.beta / (k as f64 * self.efficiency(k))
    }

    /// Asymptotic streaming bandwidth over `nics` NICs, bytes/s.
    pub fn streaming_bandwidth(&self, nics: usize) -> f64 {
        1.0 / self.effective_beta(nics)
    }

    /// In-node all-to-all Xe-Link plane: 28 GB/s per link, one link per peer.
    pub fn xe_link(alpha: f64) -> Self {
        CostParams {
            alpha,
            beta: 1.0 / (28.0 * GB),
            gamma: 0.0,
            nics_per_node: 1,
            multi_nic_efficiency: 1.0,
        }
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        CostParams { gamma, ..self }
    }
}

/// One microbenchmark observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Measurement {
    Latency {
        location: BufferLocation,
        bytes: f64,
        seconds: f64,
    },
    Bandwidth {
        location: BufferLocation,
        bytes: f64,
        nics: usize,
        bytes_per_sec: f64,
    },
    Allreduce {
        location: BufferLocation,
        nodes: usize,
        bytes: f64,
        seconds: f64,
    },
}

impl Measurement {
    pub fn location(&self) -> BufferLocation {
        match *self {
            Measurement::Latency { location, .. }
            | Measurement::Bandwidth { location, .. }
            | Measurement::Allreduce { location, .. } => location,
        }
    }
}

/// MPICH ping-pong, bandwidth and allreduce measurements on Aurora.
pub fn aurora_mpich_measurements() -> Vec<Measurement> {
    use BufferLocation::{Cpu, Gpu};
    let lat = |location, bytes, us: f64| Measurement::Latency {
        location,
        bytes,
        seconds: us * MICROSECOND,
    };
    let bw = |location, nics, gbs: f64| Measurement::Bandwidth {
        location,
        bytes: 512.0 * KIB,
        nics,
        bytes_per_sec: gbs * GB,
    };
    let ar = |location, us: f64| Measurement::Allreduce {
        location,
        nodes: 8192,
        bytes: 8.0,
        seconds: us * MICROSECOND,
    };
    vec![
        lat(Cpu, 0.0, 1.9),
        lat(Cpu, 4.0 * KIB, 3.3),
        lat(Cpu, 64.0 * KIB, 5.9),
        lat(Gpu, 4.0 * KIB, 4.0),
        lat(Gpu, 64.0 * KIB, 6.6),
        bw(Cpu, 1, 23.5),
        bw(Cpu, 4, 94.7),
        bw(Gpu, 1, 23.0),
        bw(Gpu, 4, 35.9),
        ar(Cpu, 53.8),
        ar(Gpu, 60.5),
    ]
}

/// Fits [`CostParams`] for one buffer location.
///
/// `beta` is the inverse single-NIC bandwidth; the multi-NIC efficiency is the
/// widest multi-NIC bandwidth over `k` times the single-NIC one, clamped to 1.
/// `alpha` is the zero-byte latency when measured, otherwise the smallest
/// measured message's latency less its byte cost. Allreduce points are
/// ignored.
pub fn calibrate_cost_params(
    measurements: &[Measurement],
    location: BufferLocation,
    nics_per_node: usize,
) -> Result<CostParams, CostError> {
    let mut single = None;
    let mut multi: Option<(usize, f64)> = None;
    let mut latencies = Vec::new();
    for m in measurements.iter().filter(|m| m.location() == location) {
        match *m {
            Measurement::Bandwidth { nics: 1, bytes_per_sec, .. } => single = Some(bytes_per_sec),
            Measurement::Bandwidth { nics, bytes_per_sec, .. } if nics > 1 => {
                if multi.is_none_or(|(k, _)| nics > k) {
                    multi = Some((nics, bytes_per_sec));
                }
            }
            Measurement::Latency { bytes, seconds, .. } => latencies.push((bytes, seconds)),
            _ => {}
        }
    }
    let single = single.ok_or(CostError::Insufficient {
        location,
        what: "single-NIC bandwidth",
    })?;
    if !(single > 0.0) {
        return Err(CostError::Invalid(format!("bandwidth {single}")));
    }
    let beta = 1.0 / single;
    let multi_nic_efficiency = match multi {
        Some((k, bw)) if single.is_finite() => (bw / (k as f64 * single)).min(1.0),
        _ => 1.0,
    };
    let &(bytes, seconds) = latencies
        .iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or(CostError::Insufficient {
            location,
            what: "latency point",
        })?;
    let alpha = if bytes == 0.0 {
        seconds
    } else {
        (seconds - bytes * beta).max(0.0)
    };
    let params = CostParams {
        alpha,
        beta,
        gamma: 0.0,
        nics_per_node,
        multi_nic_efficiency,
    };
    params.check()?;
    Ok(params)
}

/// `alpha + n * beta / (nics * efficiency(nics))`.
pub fn p2p_time(params: &CostParams, bytes: f64, nics: usize) -> Result<f64, CostError> {
    if nics == 0 || nics > params.nics_per_node {
        return Err(CostError::TooManyNics {
            requested: nics,
            available: params.nics_per_node,
        });
    }
    if !(bytes >= 0.0) {
        return Err(CostError::Invalid(format!("message size {bytes}")));
    }
    Ok(params.alpha + bytes * params.effective_beta(nics))
}
