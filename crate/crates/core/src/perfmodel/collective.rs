use std::fmt;

use super::{BufferLocation, CostError, CostParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Ring,
    RecursiveDoubling,
    Rabenseifner,
    /// Costed like recursive doubling without the power-of-two restriction.
    Direct,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Ring,
        Algorithm::RecursiveDoubling,
        Algorithm::Rabenseifner,
        Algorithm::Direct,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Ring => "ring",
            Algorithm::RecursiveDoubling => "recursive_doubling",
            Algorithm::Rabenseifner => "rabenseifner",
            Algorithm::Direct => "direct",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Algorithm::ALL.into_iter().find(|a| a.as_str() == s)
    }

    pub fn requires_power_of_two(self) -> bool {
        matches!(self, Algorithm::RecursiveDoubling | Algorithm::Rabenseifner)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A flat allreduce: one rank per participant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollectiveSpec {
    pub algorithm: Algorithm,
    pub participants: usize,
    pub bytes: f64,
    pub location: BufferLocation,
    /// NICs each participant stripes over.
    pub nics: usize,
}

impl CollectiveSpec {
    pub fn new(algorithm: Algorithm, participants: usize, bytes: f64, location: BufferLocation) -> Self {
        CollectiveSpec {
            algorithm,
            participants,
            bytes,
            location,
            nics: 1,
        }
    }

    pub fn with_nics(self, nics: usize) -> Self {
        CollectiveSpec { nics, ..self }
    }

    pub fn check(&self) -> Result<(), CostError> {
        if self.participants == 0 {
            return Err(CostError::Invalid("allreduce needs at least one participant".into()));
        }
        if !(self.bytes >= 0.0) || self.bytes.is_infinite() {
            return Err(CostError::Invalid(format!("message size {}", self.bytes)));
        }
        if self.algorithm.requires_power_of_two() && !self.participants.is_power_of_two() {
            return Err(CostError::NonPowerOfTwo {
                algorithm: self.algorithm,
                participants: self.participants,
            });
        }
        Ok(())
    }
}

fn ceil_log2(p: usize) -> u32 {
    p.next_power_of_two().trailing_zeros()
}

fn nic_check(params: &CostParams, nics: usize) -> Result<(), CostError> {
    if nics == 0 || nics > params.nics_per_node {
        return Err(CostError::TooManyNics {
            requested: nics,
            available: params.nics_per_node,
        });
    }
    Ok(())
}

/// Closed-form allreduce time in seconds.
pub fn allreduce_time(spec: &CollectiveSpec, params: &CostParams) -> Result<f64, CostError> {
    spec.check()?;
    params.check()?;
    nic_check(params, spec.nics)?;
    let p = spec.participants;
    if p == 1 {
        return Ok(0.0);
    }
    let (a, b, g) = (params.alpha, params.effective_beta(spec.nics), params.gamma);
    let n = spec.bytes;
    let pf = p as f64;
    let frac = (pf - 1.0) / pf;
    let lg = ceil_log2(p) as f64;
    Ok(match spec.algorithm {
        Algorithm::Ring => 2.0 * (pf - 1.0) * a + 2.0 * frac * n * b + frac * n * g,
        Algorithm::RecursiveDoubling | Algorithm::Direct => lg * (a + n * b + n * g),
        Algorithm::Rabenseifner => 2.0 * lg * a + 2.0 * frac * n * b + frac * n * g,
    })
}

/// Two-level allreduce: in-node reduce-scatter, scale-out allreduce on
/// `bytes / ranks_per_node` shards, in-node allgather.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HierarchicalSpec {
    pub scale_out: Algorithm,
    pub nodes: usize,
    pub ranks_per_node: usize,
    pub bytes: f64,
    pub location: BufferLocation,
    pub nics: usize,
}

impl HierarchicalSpec {
    pub fn new(
        scale_out: Algorithm,
        nodes: usize,
        ranks_per_node: usize,
        bytes: f64,
        location: BufferLocation,
    ) -> Self {
        HierarchicalSpec {
            scale_out,
            nodes,
            ranks_per_node,
            bytes,
            location,
            nics: 1,
        }
    }

    /// Splits `participants` ranks into nodes of `ranks_per_node`.
    pub fn from_participants(
        scale_out: Algorithm,
        participants: usize,
        ranks_per_node: usize,
        bytes: f64,
        location: BufferLocation,
    ) -> Result<Self, CostError> {
        if ranks_per_node == 0 || participants == 0 || participants % ranks_per_node != 0 {
            return Err(CostError::NonFactorable {
                participants,
                ranks_per_node,
            });
        }
        Ok(Self::new(
            scale_out,
            participants / ranks_per_node,
            ranks_per_node,
            bytes,
            location,
        ))
    }

    pub fn with_nics(self, nics: usize) -> Self {
        HierarchicalSpec { nics, ..self }
    }

    pub fn participants(&self) -> usize {
        self.nodes * self.ranks_per_node
    }

    /// The scale-out phase as a flat collective over nodes.
    pub fn scale_out_spec(&self) -> CollectiveSpec {
        CollectiveSpec {
            algorithm: self.scale_out,
            participants: self.nodes,
            bytes: self.bytes / self.ranks_per_node as f64,
            location: self.location,
            nics: self.nics,
        }
    }
}

/// Sum of the three phase costs. In-node phases are direct all-to-all
/// exchanges over `scaleup`: every rank sends its `r - 1` shards at once and
/// reduces what it receives.
pub fn hierarchical_allreduce_time(
    spec: &HierarchicalSpec,
    scaleup: &CostParams,
    scaleout: &CostParams,
) -> Result<f64, CostError> {
    if spec.nodes == 0 || spec.ranks_per_node == 0 {
        return Err(CostError::NonFactorable {
            participants: spec.participants(),
            ranks_per_node: spec.ranks_per_node,
        });
    }
    scaleup.check()?;
    let r = spec.ranks_per_node as f64;
    let shard = spec.bytes / r;
    let (up_rs, up_ag) = if spec.ranks_per_node == 1 {
        (0.0, 0.0)
    } else {
        let b = scaleup.effective_beta(1);
        (
            scaleup.alpha + shard * b + (r - 1.0) * shard * scaleup.gamma,
            scaleup.alpha + shard * b,
        )
    };
    let out = allreduce_time(&spec.scale_out_spec(), scaleout)?;
    Ok(up_rs + out + up_ag)
}
