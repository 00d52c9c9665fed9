use std::fmt;
use std::io::Write;

use super::{
    hierarchical_allreduce_time, Algorithm, BufferLocation, CostError, CostParams,
    HierarchicalSpec,
};

/// Normalized slope per doubling below which a series counts as flat.
pub const FLAT_SLOPE: f64 = 0.05;
/// Minimum r^2 of a linear fit in node count for a linear series.
pub const LINEAR_R2: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrendClass {
    Flat,
    Linear,
    Other,
}

impl TrendClass {
    pub fn as_str(self) -> &'static str {
        match self {
            TrendClass::Flat => "flat",
            TrendClass::Linear => "linear",
            TrendClass::Other => "other",
        }
    }
}

impl fmt::Display for TrendClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub algorithm: Algorithm,
    pub nodes: Vec<usize>,
    pub ranks_per_node: usize,
    pub bytes: f64,
    pub location: BufferLocation,
    pub nics: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trend {
    pub algorithm: Algorithm,
    pub ranks_per_node: usize,
    pub bytes: f64,
    /// `(nodes, seconds)` in sweep order.
    pub series: Vec<(usize, f64)>,
    pub class: TrendClass,
    /// Least-squares slope of time against log2(nodes), over mean time.
    pub slope_per_doubling: f64,
    /// r^2 of time against nodes.
    pub r_squared: f64,
    /// `(max - min) / min` of the series.
    pub variation: f64,
}

/// Powers of two from `lo` through `hi`, both rounded up to a power of two.
pub fn powers_of_two(lo: usize, hi: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut p = lo.max(1).next_power_of_two();
    while p <= hi {
        out.push(p);
        p *= 2;
    }
    out
}

fn fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return (0.0, 1.0);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

/// Classifies a `(nodes, seconds)` series.
pub fn classify(series: &[(usize, f64)]) -> (TrendClass, f64, f64, f64) {
    if series.is_empty() {
        return (TrendClass::Other, 0.0, 0.0, 0.0);
    }
    let ys: Vec<f64> = series.iter().map(|s| s.1).collect();
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let logs: Vec<f64> = series.iter().map(|s| (s.0 as f64).log2()).collect();
    let lin: Vec<f64> = series.iter().map(|s| s.0 as f64).collect();
    let (log_slope, _) = fit(&logs, &ys);
    let normalized = if mean == 0.0 { 0.0 } else { log_slope / mean };
    let (lin_slope, r2) = fit(&lin, &ys);
    let min = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let variation = if min > 0.0 { (max - min) / min } else { 0.0 };
    let class = if normalized.abs() < FLAT_SLOPE {
        TrendClass::Flat
    } else if r2 > LINEAR_R2 && lin_slope > 0.0 {
        TrendClass::Linear
    } else {
        TrendClass::Other
    };
    (class, normalized, r2, variation)
}

/// Evaluates the two-level allreduce at each node count and classifies the
/// curve.
pub fn sweep_trend(
    cfg: &SweepConfig,
    scaleup: &CostParams,
    scaleout: &CostParams,
) -> Result<Trend, CostError> {
    if cfg.nodes.is_empty() {
        return Err(CostError::Invalid("empty node range".into()));
    }
    let mut series = Vec::with_capacity(cfg.nodes.len());
    for &nodes in &cfg.nodes {
        let spec = HierarchicalSpec::new(cfg.algorithm, nodes, cfg.ranks_per_node, cfg.bytes, cfg.location)
            .with_nics(cfg.nics);
        series.push((nodes, hierarchical_allreduce_time(&spec, scaleup, scaleout)?));
    }
    let (class, slope_per_doubling, r_squared, variation) = classify(&series);
    Ok(Trend {
        algorithm: cfg.algorithm,
        ranks_per_node: cfg.ranks_per_node,
        bytes: cfg.bytes,
        series,
        class,
        slope_per_doubling,
        r_squared,
        variation,
    })
}

pub const SWEEP_HEADER: [&str; 5] = ["algo", "nodes", "ranks_per_node", "bytes", "predicted_seconds"];

pub fn write_sweep_csv<W: Write>(trends: &[Trend], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for t in trends {
        for &(nodes, secs) in &t.series {
            w.write_record([
                t.algorithm.as_str().to_string(),
                nodes.to_string(),
                t.ranks_per_node.to_string(),
                t.bytes.to_string(),
                format!("{secs:.9e}"),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perfmodel::{aurora_mpich_measurements, calibrate_cost_params};
    use crate::units::GB;

    fn gpu() -> (CostParams, CostParams) {
        let out = calibrate_cost_params(&aurora_mpich_measurements(), BufferLocation::Gpu, 8).unwrap();
        (CostParams::xe_link(out.alpha), out)
    }

    fn sweep(algorithm: Algorithm, bytes: f64) -> Trend {
        let (up, out) = gpu();
        let cfg = SweepConfig {
            algorithm,
            nodes: powers_of_two(16, 512),
            ranks_per_node: 12,
            bytes,
            location: BufferLocation::Gpu,
            nics: 1,
        };
        sweep_trend(&cfg, &up, &out).unwrap()
    }

    #[test]
    fn node_range() {
        assert_eq!(powers_of_two(16, 512), vec![16, 32, 64, 128, 256, 512]);
        assert_eq!(powers_of_two(3, 8), vec![4, 8]);
        assert!(powers_of_two(9, 8).is_empty());
    }

    #[test]
    fn one_gigabyte_trends() {
        let rab = sweep(Algorithm::Rabenseifner, GB);
        assert_eq!(rab.class, TrendClass::Flat);
        assert!(rab.variation < 0.10);
        let ring = sweep(Algorithm::Ring, GB);
        assert_eq!(ring.class, TrendClass::Linear);
        assert!(ring.series[5].1 > ring.series[0].1);
    }

    #[test]
    fn zero_bytes_latency_only() {
        assert_eq!(sweep(Algorithm::Ring, 0.0).class, TrendClass::Linear);
        assert_eq!(sweep(Algorithm::Rabenseifner, 0.0).class, TrendClass::Other);
    }

    #[test]
    fn constant_series_is_flat() {
        let (c, s, r2, v) = classify(&[(1, 2.0), (2, 2.0), (4, 2.0)]);
        assert_eq!((c, s, r2, v), (TrendClass::Flat, 0.0, 1.0, 0.0));
    }

    #[test]
    fn csv_rows() {
        let t = sweep(Algorithm::Ring, GB);
        let mut buf = Vec::new();
        write_sweep_csv(&[t], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("algo,nodes,ranks_per_node,bytes,predicted_seconds"));
        assert!(lines.next().unwrap().starts_with("ring,16,12,1000000000,"));
        assert_eq!(text.lines().count(), 7);
    }
}
