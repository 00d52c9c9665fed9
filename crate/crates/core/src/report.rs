//! Reproduction report: every published figure the model can close, with the
//! computed value, the relative error and a verdict.

use std::fmt;
use std::io::{self, Write};

use crate::config::ModelConfig;
use crate::metrics::{bandwidth_report, BandwidthReport, Convention};
use crate::node::{aggregate_system, measured_efficiency, peak_flops, per_node_rate, power_check, Precision, XeCore};
use crate::perfmodel::{
    allreduce_time, aurora_mpich_measurements, p2p_time, powers_of_two, sweep_trend, Algorithm,
    BufferLocation, CollectiveSpec, CostError, Measurement, SweepConfig, TrendClass,
};
use crate::reference::{unit_scale, ReferenceError, ReferenceSet, ReferenceValue};
use crate::storage::daos_capacity;
use crate::topology::{aurora_preset, entity_census, Topology, TopologyError};
use crate::units::{relative_error, GB};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Reference(#[from] ReferenceError),
    #[error(transparent)]
    Cost(#[from] CostError),
}

/// How a computed value is judged against its reference.
#[derive(Debug, Clone, PartialEq)]
pub enum Check {
    /// `|computed - reference| / reference <= tol`.
    Relative(f64),
    /// `computed >= reference`.
    AtLeast,
    /// `reference / f <= computed <= reference * f`.
    WithinFactor(f64),
    /// The observed classification must equal the expected one.
    Qualitative { expected: String, observed: String },
    /// Reported for context only.
    Info,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Check::Relative(t) => write!(f, "rel<={}%", fmt_sig(t * 100.0)),
            Check::AtLeast => f.write_str(">=ref"),
            Check::WithinFactor(x) => write!(f, "within {}x", fmt_sig(*x)),
            Check::Qualitative { expected, .. } => write!(f, "is {expected}"),
            Check::Info => f.write_str("info"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Info,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Info => "INFO",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReproEntry {
    pub quantity: String,
    /// SI base units.
    pub computed: f64,
    /// SI base units; `None` for derived figures with no published value.
    pub reference: Option<f64>,
    /// Display unit; values are shown scaled into it.
    pub unit: String,
    pub citation: String,
    pub relative_error: Option<f64>,
    pub check: Check,
    pub verdict: Verdict,
}

impl ReproEntry {
    fn judged(quantity: &str, computed: f64, r: &ReferenceValue, check: Check) -> Self {
        let rel = relative_error(computed, r.value);
        let verdict = match &check {
            Check::Relative(tol) => rel.abs() <= *tol,
            Check::AtLeast => computed >= r.value,
            Check::WithinFactor(x) => computed >= r.value / x && computed <= r.value * x,
            Check::Qualitative { expected, observed } => expected == observed,
            Check::Info => true,
        };
        let verdict = match (&check, verdict) {
            (Check::Info, _) => Verdict::Info,
            (_, true) => Verdict::Pass,
            (_, false) => Verdict::Fail,
        };
        ReproEntry {
            quantity: quantity.to_string(),
            computed,
            reference: Some(r.value),
            unit: r.unit.clone(),
            citation: r.citation(),
            relative_error: Some(rel),
            check,
            verdict,
        }
    }

    fn info(quantity: &str, computed: f64, unit: &str, citation: &str) -> Self {
        ReproEntry {
            quantity: quantity.to_string(),
            computed,
            reference: None,
            unit: unit.to_string(),
            citation: citation.to_string(),
            relative_error: None,
            check: Check::Info,
            verdict: Verdict::Info,
        }
    }

    /// `computed` is the statistic behind the classification.
    fn qualitative(quantity: &str, computed: f64, citation: &str, expected: &str, observed: &str) -> Self {
        ReproEntry {
            quantity: quantity.to_string(),
            computed,
            reference: None,
            unit: "fraction".to_string(),
            citation: citation.to_string(),
            relative_error: None,
            verdict: if expected == observed { Verdict::Pass } else { Verdict::Fail },
            check: Check::Qualitative {
                expected: expected.to_string(),
                observed: observed.to_string(),
            },
        }
    }

    fn shown(&self, v: f64) -> String {
        let scale = unit_scale(&self.unit).unwrap_or(1.0);
        if self.unit == "count" && v.fract() == 0.0 {
            format!("{}", v as i64)
        } else {
            fmt_sig(v / scale)
        }
    }

    pub fn computed_shown(&self) -> String {
        match &self.check {
            Check::Qualitative { observed, .. } => format!("{observed} ({})", self.shown(self.computed)),
            _ => self.shown(self.computed),
        }
    }

    pub fn reference_shown(&self) -> String {
        self.reference.map_or_else(|| "-".to_string(), |r| self.shown(r))
    }

    pub fn error_shown(&self) -> String {
        self.relative_error
            .map_or_else(|| "-".to_string(), |e| format!("{:+.3}%", e * 100.0))
    }
}

/// Four significant figures, no exponent for ordinary magnitudes.
fn fmt_sig(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let mag = v.abs().log10().floor() as i32;
    if !(-4..=9).contains(&mag) {
        return format!("{v:.4e}");
    }
    let decimals = (3 - mag).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReproReport {
    pub entries: Vec<ReproEntry>,
}

impl ReproReport {
    pub fn passed(&self) -> usize {
        self.count(Verdict::Pass)
    }

    pub fn failed(&self) -> usize {
        self.count(Verdict::Fail)
    }

    fn count(&self, v: Verdict) -> usize {
        self.entries.iter().filter(|e| e.verdict == v).count()
    }

    pub fn all_pass(&self) -> bool {
        self.failed() == 0
    }

    pub fn entry(&self, quantity: &str) -> Option<&ReproEntry> {
        self.entries.iter().find(|e| e.quantity == quantity)
    }

    pub fn write_table<W: Write + ?Sized>(&self, out: &mut W) -> io::Result<()> {
        let rows: Vec<Vec<String>> = self.entries.iter().map(|e| self.row(e)).collect();
        out.write_all(render_table(&REPORT_HEADER, &rows).as_bytes())?;
        writeln!(
            out,
            "\n{} passed, {} failed, {} informational",
            self.passed(),
            self.failed(),
            self.count(Verdict::Info)
        )
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(REPORT_HEADER)?;
        for e in &self.entries {
            w.write_record(self.row(e))?;
        }
        w.flush()?;
        Ok(())
    }

    fn row(&self, e: &ReproEntry) -> Vec<String> {
        vec![
            e.quantity.clone(),
            e.computed_shown(),
            e.reference_shown(),
            e.unit.clone(),
            e.error_shown(),
            e.check.to_string(),
            e.verdict.to_string(),
            e.citation.clone(),
        ]
    }
}

pub const REPORT_HEADER: [&str; 8] = [
    "quantity",
    "computed",
    "reference",
    "unit",
    "relative_error",
    "check",
    "verdict",
    "citation",
];

/// Left-aligned, space-padded columns.
pub fn render_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(headers.to_vec());
    out += &line(widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().iter().map(|s| s.as_str()).collect());
    for row in rows {
        out += &line(row.iter().map(|s| s.as_str()).collect());
    }
    out
}

/// Builds the full report for `cfg` against `refs`.
pub fn reproduce(cfg: &ModelConfig, refs: &ReferenceSet) -> Result<ReproReport, ReportError> {
    let mut entries = Vec::new();
    let r = |q: &str| refs.get(q);
    let exact = || Check::Relative(0.0);
    let pct = |p: f64| Check::Relative(p / 100.0);

    let topo = Topology::build(&cfg.fabric)?;
    let census = entity_census(&topo, &cfg.node);
    for (q, v) in [
        ("nodes", census.nodes),
        ("cpus", census.cpus),
        ("gpus", census.gpus),
        ("compute_endpoints", census.compute_endpoints),
    ] {
        entries.push(ReproEntry::judged(q, v as f64, r(q)?, exact()));
    }
    entries.push(ReproEntry::judged(
        "fabric_ports",
        census.switch_ports as f64,
        r("fabric_ports")?,
        Check::AtLeast,
    ));

    let sys = aggregate_system(&cfg.node, census.nodes);
    for (q, v) in [
        ("ddr_capacity", sys.ddr_capacity),
        ("ddr_bandwidth", sys.ddr_bandwidth),
        ("hbm_capacity", sys.hbm_capacity),
        ("hbm_bandwidth", sys.hbm_bandwidth),
    ] {
        entries.push(ReproEntry::judged(q, v, r(q)?, pct(1.0)));
    }

    let bw = bandwidth_report(&topo, Convention::FullDuplexDoubled);
    entries.push(ReproEntry::judged("injection_bandwidth", bw.injection, r("injection_bandwidth")?, pct(1.0)));
    entries.push(ReproEntry::judged("global_bandwidth", bw.global, r("global_bandwidth")?, pct(1.0)));
    entries.push(ReproEntry::judged(
        "global_bandwidth_text",
        bw.global,
        r("global_bandwidth_text")?,
        pct(1.0),
    ));
    entries.push(ReproEntry::judged(
        "bisection_bandwidth",
        bw.bisection.unwrap_or(f64::NAN),
        r("bisection_bandwidth")?,
        pct(1.0),
    ));

    let gpu = &cfg.node.gpu;
    entries.push(ReproEntry::judged(
        "xecore_fp64_ops_per_clock",
        XeCore::PVC.fp64_ops_per_clock() as f64,
        r("xecore_fp64_ops_per_clock")?,
        exact(),
    ));
    entries.push(ReproEntry::judged(
        "gpu_fp64_ops_per_clock",
        gpu.ops_per_clock(Precision::Fp64).unwrap_or(0) as f64,
        r("gpu_fp64_ops_per_clock")?,
        exact(),
    ));
    let gpu_peak = peak_flops(gpu, Precision::Fp64, gpu.max_clock_ghz).unwrap_or(0.0);
    entries.push(ReproEntry::info("gpu_fp64_peak", gpu_peak, "TF/s", "xe_core: ops per clock x max clock"));
    let dgemm = r("gpu_dgemm")?;
    if let Ok(eff) = measured_efficiency(dgemm.value, gpu_peak) {
        entries.push(ReproEntry::info("gpu_dgemm_efficiency", eff, "fraction", &dgemm.citation()));
    }

    let nominal = power_check(&cfg.node, cfg.node.cpu.active_draw_w, cfg.node.gpu.active_draw_w);
    entries.push(ReproEntry::judged("node_power", nominal.total_w, r("node_power")?, pct(3.0)));
    entries.push(ReproEntry::judged(
        "node_sustained_power",
        nominal.total_w,
        r("node_sustained_power")?,
        Check::Qualitative {
            expected: "within".into(),
            observed: if nominal.sustained_ok { "within" } else { "over" }.into(),
        },
    ));

    let hpl = r("hpl_rate")?;
    let hpl_nodes = r("hpl_nodes")?.value as usize;
    let hpl_per_node = per_node_rate(hpl.value, hpl_nodes);
    entries.push(ReproEntry::info("hpl_per_node", hpl_per_node, "TF/s", &hpl.citation()));
    let single = r("hpl_single_node")?;
    entries.push(ReproEntry::info(
        "hpl_efficiency_vs_single_node",
        hpl_per_node / single.value,
        "fraction",
        &single.citation(),
    ));
    let scaling = r("hpl_scaling_efficiency")?;
    entries.push(ReproEntry::info(
        "hpl_implied_peak_per_node",
        hpl_per_node / scaling.value,
        "TF/s",
        &scaling.citation(),
    ));
    let mxp = r("hpl_mxp_rate")?;
    let mxp_nodes = r("hpl_mxp_nodes")?.value as usize;
    entries.push(ReproEntry::info(
        "hpl_mxp_per_node",
        per_node_rate(mxp.value, mxp_nodes),
        "TF/s",
        &mxp.citation(),
    ));

    let daos = daos_capacity(&cfg.storage);
    entries.push(ReproEntry::judged("daos_raw_capacity", daos.raw_bytes, r("daos_raw_capacity")?, pct(4.0)));
    entries.push(ReproEntry::judged(
        "daos_usable_capacity",
        daos.usable_bytes,
        r("daos_usable_capacity")?,
        pct(2.0),
    ));
    entries.push(ReproEntry::judged("daos_engines", daos.engines as f64, r("daos_engines")?, exact()));

    calibration_entries(cfg, refs, &mut entries)?;
    trend_entries(cfg, &mut entries)?;
    Ok(ReproReport { entries })
}

fn calibration_entries(
    cfg: &ModelConfig,
    refs: &ReferenceSet,
    entries: &mut Vec<ReproEntry>,
) -> Result<(), ReportError> {
    let quantity = |m: &Measurement| -> Option<&'static str> {
        use BufferLocation::{Cpu, Gpu};
        Some(match *m {
            Measurement::Latency { location: Cpu, bytes, .. } if bytes == 0.0 => "latency_cpu_0b",
            Measurement::Latency { location: Cpu, bytes, .. } if bytes == 4096.0 => "latency_cpu_4kib",
            Measurement::Latency { location: Cpu, bytes, .. } if bytes == 65536.0 => "latency_cpu_64kib",
            Measurement::Latency { location: Gpu, bytes, .. } if bytes == 4096.0 => "latency_gpu_4kib",
            Measurement::Latency { location: Gpu, bytes, .. } if bytes == 65536.0 => "latency_gpu_64kib",
            Measurement::Bandwidth { location: Cpu, nics: 1, .. } => "bandwidth_cpu_1nic",
            Measurement::Bandwidth { location: Cpu, nics: 4, .. } => "bandwidth_cpu_4nic",
            Measurement::Bandwidth { location: Gpu, nics: 1, .. } => "bandwidth_gpu_1nic",
            Measurement::Bandwidth { location: Gpu, nics: 4, .. } => "bandwidth_gpu_4nic",
            Measurement::Allreduce { location: Cpu, .. } => "allreduce_cpu_8192",
            Measurement::Allreduce { location: Gpu, .. } => "allreduce_gpu_8192",
            _ => return None,
        })
    };
    for m in aurora_mpich_measurements() {
        let Some(q) = quantity(&m) else { continue };
        let params = cfg.cost.params(m.location());
        let entry = match m {
            Measurement::Latency { bytes, .. } => {
                let check = if bytes == 0.0 {
                    Check::Relative(0.0)
                } else {
                    Check::Relative(0.5)
                };
                ReproEntry::judged(q, p2p_time(params, bytes, 1)?, refs.get(q)?, check)
            }
            Measurement::Bandwidth { nics, .. } => ReproEntry::judged(
                q,
                params.streaming_bandwidth(nics),
                refs.get(q)?,
                Check::Relative(0.01),
            ),
            Measurement::Allreduce { nodes, bytes, location, .. } => {
                let spec = CollectiveSpec::new(Algorithm::RecursiveDoubling, nodes, bytes, location);
                ReproEntry::judged(q, allreduce_time(&spec, params)?, refs.get(q)?, Check::WithinFactor(5.0))
            }
        };
        entries.push(entry);
    }
    Ok(())
}

/// One-gigabyte oneCCL sweep over 16..512 nodes at the configured ranks per node.
pub fn trend_sweep(cfg: &ModelConfig, algorithm: Algorithm) -> SweepConfig {
    SweepConfig {
        algorithm,
        nodes: powers_of_two(16, 512),
        ranks_per_node: cfg.cost.ranks_per_node,
        bytes: GB,
        location: BufferLocation::Gpu,
        nics: 1,
    }
}

fn trend_entries(cfg: &ModelConfig, entries: &mut Vec<ReproEntry>) -> Result<(), ReportError> {
    let citation = "oneCCL allreduce time for 1 GB, 12 ranks/node";
    let rab = sweep_trend(&trend_sweep(cfg, Algorithm::Rabenseifner), &cfg.cost.scaleup, &cfg.cost.gpu)?;
    // flat also requires under 10% spread across the sweep
    let observed = if rab.class == TrendClass::Flat && rab.variation >= 0.10 {
        TrendClass::Other
    } else {
        rab.class
    };
    entries.push(ReproEntry::qualitative(
        "allreduce_trend_rabenseifner",
        rab.variation,
        citation,
        TrendClass::Flat.as_str(),
        observed.as_str(),
    ));
    let ring = sweep_trend(&trend_sweep(cfg, Algorithm::Ring), &cfg.cost.scaleup, &cfg.cost.gpu)?;
    entries.push(ReproEntry::qualitative(
        "allreduce_trend_ring",
        ring.r_squared,
        citation,
        TrendClass::Linear.as_str(),
        ring.class.as_str(),
    ));
    Ok(())
}

/// One row of the `metrics` output.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub metric: &'static str,
    pub value: Option<f64>,
    pub convention: Convention,
    pub paper_value: Option<f64>,
}

impl MetricRow {
    pub fn relative_error(&self) -> Option<f64> {
        Some(relative_error(self.value?, self.paper_value?))
    }
}

pub const METRICS_HEADER: [&str; 5] = [
    "metric",
    "value_bytes_per_s",
    "convention",
    "paper_value",
    "relative_error",
];

/// Metric rows; published values are attached only when `fabric` is the
/// Aurora preset.
pub fn metric_rows(
    bw: &BandwidthReport,
    topo: &Topology,
    refs: &ReferenceSet,
) -> Vec<MetricRow> {
    let aurora = *topo.config() == aurora_preset();
    let paper = |q: &str| {
        if aurora {
            refs.get(q).ok().map(|r| r.value)
        } else {
            None
        }
    };
    vec![
        MetricRow {
            metric: "injection",
            value: Some(bw.injection),
            convention: Convention::Unidirectional,
            paper_value: paper("injection_bandwidth"),
        },
        MetricRow {
            metric: "global",
            value: Some(bw.global),
            convention: Convention::FullDuplexDoubled,
            paper_value: paper("global_bandwidth"),
        },
        MetricRow {
            metric: "bisection",
            value: bw.bisection,
            convention: bw.convention,
            paper_value: if bw.convention == Convention::FullDuplexDoubled {
                paper("bisection_bandwidth")
            } else {
                None
            },
        },
    ]
}

pub fn metric_cells(row: &MetricRow) -> Vec<String> {
    let opt = |v: Option<f64>, f: &dyn Fn(f64) -> String| v.map_or_else(String::new, f);
    vec![
        row.metric.to_string(),
        opt(row.value, &|v| format!("{v:.6e}")),
        row.convention.to_string(),
        opt(row.paper_value, &|v| format!("{v:.6e}")),
        opt(row.relative_error(), &|e| format!("{e:.6}")),
    ]
}

pub fn write_metrics_csv<W: Write>(rows: &[MetricRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRICS_HEADER)?;
    for row in rows {
        w.write_record(metric_cells(row))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_figures() {
        assert_eq!(fmt_sig(2.1248), "2.125");
        assert_eq!(fmt_sig(0.68890), "0.6889");
        assert_eq!(fmt_sig(358_400.0), "358400");
        assert_eq!(fmt_sig(52.4288), "52.43");
        assert_eq!(fmt_sig(1e-7), "1.0000e-7");
    }

    #[test]
    fn relative_check() {
        let r = ReferenceValue {
            table: "t".into(),
            row: "r".into(),
            quantity: "q".into(),
            printed: 100.0,
            unit: "count".into(),
            value: 100.0,
        };
        assert_eq!(ReproEntry::judged("q", 101.0, &r, Check::Relative(0.01)).verdict, Verdict::Pass);
        assert_eq!(ReproEntry::judged("q", 101.5, &r, Check::Relative(0.01)).verdict, Verdict::Fail);
        assert_eq!(ReproEntry::judged("q", 495.0, &r, Check::WithinFactor(5.0)).verdict, Verdict::Pass);
        assert_eq!(ReproEntry::judged("q", 15.0, &r, Check::WithinFactor(5.0)).verdict, Verdict::Fail);
        assert_eq!(ReproEntry::judged("q", f64::NAN, &r, Check::Relative(0.5)).verdict, Verdict::Fail);
    }

    #[test]
    fn table_alignment() {
        let t = render_table(&["a", "bb"], &[vec!["xxx".into(), "y".into()]]);
        assert_eq!(t, "a    bb\n---  --\nxxx  y\n");
    }
}
