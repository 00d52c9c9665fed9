//! Command-line front end. [`execute`] parses arguments, runs one
//! subcommand and returns the process exit status: 0 on success, 1 when a
//! reproduction or validation check fails, 2 on usage or configuration
//! errors.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::{ConfigError, ModelConfig};
use crate::metrics::{bandwidth_report, Convention};
use crate::node::{aggregate_system, peak_flops, power_check, roofline_threshold, MemoryTier, Precision};
use crate::perfmodel::{
    allreduce_time, hierarchical_allreduce_time, powers_of_two, sweep_trend, write_sweep_csv,
    Algorithm, BufferLocation, CollectiveSpec, HierarchicalSpec, SweepConfig, Trend, SWEEP_HEADER,
};
use crate::reference::ReferenceSet;
use crate::report::{metric_cells, metric_rows, render_table, reproduce, write_metrics_csv, METRICS_HEADER};
use crate::routing::{diameter, minimal_routes, valiant_route, write_routes_csv, DiameterMode};
use crate::storage::daos_capacity;
use crate::topology::{entity_census, validate_topology, write_links_csv, EndpointId, GroupId, LinkClass, Topology};
use crate::units::{parse_bytes, PB, TB};

pub const SEED_ENV: &str = "FABRICMODEL_SEED";

#[derive(Debug, Parser)]
#[command(name = "fabricmodel", version, about = "Dragonfly fabric and system capability model")]
pub struct Cli {
    /// Built-in parameter set.
    #[arg(long, global = true, value_enum, conflicts_with = "config")]
    pub preset: Option<Preset>,
    /// TOML file with [fabric], [node], [storage] and [cost] sections.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Aurora,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConventionArg {
    Unidirectional,
    FullDuplexDoubled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgoArg {
    Ring,
    RecursiveDoubling,
    Rabenseifner,
    Direct,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Ring => Algorithm::Ring,
            AlgoArg::RecursiveDoubling => Algorithm::RecursiveDoubling,
            AlgoArg::Rabenseifner => Algorithm::Rabenseifner,
            AlgoArg::Direct => Algorithm::Direct,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LocationArg {
    Cpu,
    Gpu,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the topology and export it as a link CSV.
    Generate {
        /// Write to a file instead of standard output.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Entity counts of the topology.
    Census {
        /// Read the topology from a link CSV written by `generate`.
        #[arg(long)]
        links: Option<PathBuf>,
    },
    /// Per-switch port usage and wiring-rule violations.
    Validate {
        #[arg(long)]
        links: Option<PathBuf>,
    },
    /// Injection, global and bisection bandwidth.
    Metrics {
        #[arg(long, value_enum, default_value_t = ConventionArg::FullDuplexDoubled)]
        convention: ConventionArg,
        #[arg(long)]
        links: Option<PathBuf>,
    },
    /// Minimal routes between two endpoints, or a Valiant route.
    Route {
        /// Source endpoint id (`e12` or `12`).
        src: String,
        /// Destination endpoint id.
        dst: String,
        /// Detour through this group (`g3` or `3`).
        #[arg(long)]
        valiant: Option<String>,
    },
    /// Minimal switch-hop statistics over compute endpoint pairs.
    Diameter {
        /// Visit every pair instead of sampling.
        #[arg(long)]
        exhaustive: bool,
        /// Sampled pairs; the seed comes from FABRICMODEL_SEED (default 0).
        #[arg(long, default_value_t = 10_000)]
        pairs: usize,
    },
    /// Predicted allreduce time.
    Collective {
        #[arg(long, value_enum)]
        algo: AlgoArg,
        /// Participating nodes.
        #[arg(long)]
        nodes: Option<usize>,
        /// Message size, e.g. 8, 64KiB, 1GB.
        #[arg(long)]
        bytes: String,
        #[arg(long, value_enum, default_value_t = LocationArg::Gpu)]
        location: LocationArg,
        /// Ranks per node; above 1 the in-node phases run over Xe-Link.
        #[arg(long, default_value_t = 1)]
        ranks_per_node: usize,
        /// NICs each node stripes over.
        #[arg(long, default_value_t = 1)]
        nics: usize,
        /// Sweep node counts over powers of two, `lo:hi`.
        #[arg(long)]
        sweep: Option<String>,
    },
    /// Node peaks, memory, roofline thresholds, power and machine aggregates.
    Nodespec,
    /// DAOS capacity arithmetic.
    Storage,
    /// Check every closable published figure.
    Reproduce,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Model(String),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::Io(io),
            other => CliError::Io(std::io::Error::other(format!("{other:?}"))),
        }
    }
}

fn model<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Model(e.to_string())
}

/// Runs the command line `argv` (program name first).
pub fn execute<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let seed = std::env::var(SEED_ENV).ok();
    match run(&cli, seed.as_deref(), out) {
        Ok(code) => code,
        Err(CliError::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn load_config(cli: &Cli) -> Result<ModelConfig, CliError> {
    match &cli.config {
        Some(path) => Ok(ModelConfig::load(path)?),
        None => Ok(ModelConfig::aurora()),
    }
}

fn load_topology(cfg: &ModelConfig, links: Option<&PathBuf>) -> Result<Topology, CliError> {
    match links {
        Some(path) => {
            let f = File::open(path)
                .map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))?;
            Topology::from_links_csv(&cfg.fabric, BufReader::new(f)).map_err(model)
        }
        None => Topology::build(&cfg.fabric).map_err(model),
    }
}

fn parse_id(text: &str, prefix: char, what: &str) -> Result<u32, CliError> {
    text.strip_prefix(prefix)
        .unwrap_or(text)
        .parse()
        .map_err(|_| CliError::Usage(format!("`{text}` is not a {what} id (expected {prefix}N or N)")))
}

fn emit(format: Format, headers: &[&str], rows: Vec<Vec<String>>, out: &mut dyn Write) -> Result<(), CliError> {
    match format {
        Format::Table => out.write_all(render_table(headers, &rows).as_bytes())?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(headers)?;
            for r in rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn kv(rows: &[(&str, String)]) -> Vec<Vec<String>> {
    rows.iter().map(|(k, v)| vec![k.to_string(), v.clone()]).collect()
}

fn run(cli: &Cli, seed: Option<&str>, out: &mut dyn Write) -> Result<i32, CliError> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Generate { output } => {
            let t = Topology::build(&cfg.fabric).map_err(model)?;
            match output {
                Some(path) => {
                    let f = File::create(path)
                        .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", path.display())))?;
                    write_links_csv(&t, f)?;
                }
                None => write_links_csv(&t, out)?,
            }
            Ok(0)
        }
        Command::Census { links } => {
            let t = load_topology(&cfg, links.as_ref())?;
            let c = entity_census(&t, &cfg.node);
            let mut rows = vec![
                ("compute_groups", c.compute_groups.to_string()),
                ("storage_groups", c.storage_groups.to_string()),
                ("service_groups", c.service_groups.to_string()),
                ("switches", c.switches.to_string()),
                ("switch_ports", c.switch_ports.to_string()),
                ("nodes", c.nodes.to_string()),
                ("cpus", c.cpus.to_string()),
                ("gpus", c.gpus.to_string()),
                ("compute_endpoints", c.compute_endpoints.to_string()),
                ("storage_endpoints", c.storage_endpoints.to_string()),
                ("service_endpoints", c.service_endpoints.to_string()),
            ];
            let names: Vec<String> = LinkClass::ALL.iter().map(|l| format!("links_{}", l.as_str())).collect();
            for (name, class) in names.iter().zip(LinkClass::ALL) {
                rows.push((name, c.links(class).to_string()));
            }
            rows.push(("links_total", c.total_links().to_string()));
            emit(cli.format, &["entity", "count"], kv(&rows), out)?;
            Ok(0)
        }
        Command::Validate { links } => {
            let t = load_topology(&cfg, links.as_ref())?;
            let report = validate_topology(&t);
            let headers = [
                "switch",
                "injection",
                "local_intra_chassis",
                "local_inter_chassis",
                "global_compute",
                "global_service",
                "global_storage",
                "total",
            ];
            let rows = report
                .usage
                .iter()
                .map(|u| {
                    vec![
                        u.switch.to_string(),
                        u.injection.to_string(),
                        u.local_intra_chassis.to_string(),
                        u.local_inter_chassis.to_string(),
                        u.global_compute.to_string(),
                        u.global_service.to_string(),
                        u.global_storage.to_string(),
                        u.total().to_string(),
                    ]
                })
                .collect();
            emit(cli.format, &headers, rows, out)?;
            if cli.format == Format::Table {
                writeln!(
                    out,
                    "\n{} switches, max ports used {} of {}, {} violations",
                    report.usage.len(),
                    report.max_ports_used(),
                    cfg.fabric.switch_radix,
                    report.violations.len()
                )?;
                for v in &report.violations {
                    writeln!(out, "violation: {v}")?;
                }
            }
            Ok(if report.is_valid() { 0 } else { 1 })
        }
        Command::Metrics { convention, links } => {
            let t = load_topology(&cfg, links.as_ref())?;
            let conv = match convention {
                ConventionArg::Unidirectional => Convention::Unidirectional,
                ConventionArg::FullDuplexDoubled => Convention::FullDuplexDoubled,
            };
            let rows = metric_rows(&bandwidth_report(&t, conv), &t, &ReferenceSet::builtin());
            match cli.format {
                Format::Csv => write_metrics_csv(&rows, out)?,
                Format::Table => {
                    let cells = rows
                        .iter()
                        .map(|r| {
                            let mut c = metric_cells(r);
                            c.insert(2, r.value.map_or_else(|| "n/a".into(), |v| format!("{:.4} PB/s", v / PB)));
                            c
                        })
                        .collect();
                    let headers = [
                        METRICS_HEADER[0],
                        METRICS_HEADER[1],
                        "value",
                        METRICS_HEADER[2],
                        METRICS_HEADER[3],
                        METRICS_HEADER[4],
                    ];
                    emit(cli.format, &headers, cells, out)?;
                }
            }
            Ok(0)
        }
        Command::Route { src, dst, valiant } => {
            let t = Topology::build(&cfg.fabric).map_err(model)?;
            let src = EndpointId(parse_id(src, 'e', "endpoint")?);
            let dst = EndpointId(parse_id(dst, 'e', "endpoint")?);
            let routes = match valiant {
                Some(g) => {
                    let g = GroupId(parse_id(g, 'g', "group")?);
                    vec![valiant_route(&t, src, dst, g).map_err(model)?]
                }
                None => minimal_routes(&t, src, dst).map_err(model)?,
            };
            match cli.format {
                Format::Csv => write_routes_csv(&routes, out)?,
                Format::Table => {
                    let rows = routes
                        .iter()
                        .map(|r| {
                            let path: Vec<String> = r
                                .links
                                .iter()
                                .zip(&r.classes)
                                .map(|(l, c)| format!("{l}({})", c.as_str()))
                                .collect();
                            vec![
                                r.kind.as_str().to_string(),
                                r.switch_hop_count().to_string(),
                                r.global_links().to_string(),
                                format!("{} -> {}", r.src_switch, r.dst_switch),
                                path.join(" "),
                            ]
                        })
                        .collect();
                    emit(cli.format, &["kind", "switch_hops", "global_links", "switches", "links"], rows, out)?;
                }
            }
            Ok(0)
        }
        Command::Diameter { exhaustive, pairs } => {
            let t = Topology::build(&cfg.fabric).map_err(model)?;
            let mode = if *exhaustive {
                DiameterMode::Exhaustive
            } else {
                let seed = match seed {
                    Some(s) => s
                        .parse()
                        .map_err(|_| CliError::Usage(format!("{SEED_ENV}=`{s}` is not an unsigned integer")))?,
                    None => 0,
                };
                DiameterMode::Sampled { pairs: *pairs, seed }
            };
            let stats = diameter(&t, mode).map_err(model)?;
            let mut rows: Vec<Vec<String>> = stats
                .histogram
                .iter()
                .map(|(h, n)| vec![h.to_string(), n.to_string()])
                .collect();
            if cli.format == Format::Table {
                rows.push(vec!["max".into(), stats.max.to_string()]);
                rows.push(vec!["pairs".into(), stats.pairs.to_string()]);
            }
            emit(cli.format, &["switch_hops", "pairs"], rows, out)?;
            Ok(0)
        }
        Command::Collective {
            algo,
            nodes,
            bytes,
            location,
            ranks_per_node,
            nics,
            sweep,
        } => {
            let n = parse_bytes(bytes)
                .ok_or_else(|| CliError::Usage(format!("--bytes `{bytes}` is not a size such as 8, 64KiB or 1GB")))?;
            let location = match location {
                LocationArg::Cpu => BufferLocation::Cpu,
                LocationArg::Gpu => BufferLocation::Gpu,
            };
            let algorithm = Algorithm::from(*algo);
            let scaleout = cfg.cost.params(location);
            let trend = match (sweep, nodes) {
                (Some(range), _) => {
                    let (lo, hi) = range
                        .split_once(':')
                        .and_then(|(a, b)| Some((a.parse::<usize>().ok()?, b.parse::<usize>().ok()?)))
                        .filter(|(lo, hi)| *lo >= 1 && lo <= hi)
                        .ok_or_else(|| CliError::Usage(format!("--sweep `{range}` is not lo:hi with 1 <= lo <= hi")))?;
                    let sweep_cfg = SweepConfig {
                        algorithm,
                        nodes: powers_of_two(lo, hi),
                        ranks_per_node: *ranks_per_node,
                        bytes: n,
                        location,
                        nics: *nics,
                    };
                    if sweep_cfg.nodes.is_empty() {
                        return Err(CliError::Usage(format!("--sweep `{range}` contains no power of two")));
                    }
                    sweep_trend(&sweep_cfg, &cfg.cost.scaleup, scaleout).map_err(model)?
                }
                (None, Some(nodes)) => {
                    let secs = if *ranks_per_node <= 1 {
                        let spec = CollectiveSpec::new(algorithm, *nodes, n, location).with_nics(*nics);
                        allreduce_time(&spec, scaleout)
                    } else {
                        let spec = HierarchicalSpec::new(algorithm, *nodes, *ranks_per_node, n, location).with_nics(*nics);
                        hierarchical_allreduce_time(&spec, &cfg.cost.scaleup, scaleout)
                    }
                    .map_err(model)?;
                    Trend {
                        algorithm,
                        ranks_per_node: *ranks_per_node,
                        bytes: n,
                        series: vec![(*nodes, secs)],
                        class: crate::perfmodel::TrendClass::Flat,
                        slope_per_doubling: 0.0,
                        r_squared: 1.0,
                        variation: 0.0,
                    }
                }
                (None, None) => return Err(CliError::Usage("collective needs --nodes N or --sweep lo:hi".into())),
            };
            match cli.format {
                Format::Csv => write_sweep_csv(std::slice::from_ref(&trend), out)?,
                Format::Table => {
                    let rows = trend
                        .series
                        .iter()
                        .map(|(nodes, secs)| {
                            vec![
                                algorithm.as_str().to_string(),
                                nodes.to_string(),
                                trend.ranks_per_node.to_string(),
                                trend.bytes.to_string(),
                                format!("{secs:.6e}"),
                            ]
                        })
                        .collect();
                    emit(cli.format, &SWEEP_HEADER, rows, out)?;
                    if sweep.is_some() {
                        writeln!(
                            out,
                            "\ntrend: {} (slope per doubling {:.4}, r2 {:.4}, variation {:.2}%)",
                            trend.class,
                            trend.slope_per_doubling,
                            trend.r_squared,
                            trend.variation * 100.0
                        )?;
                    }
                }
            }
            Ok(0)
        }
        Command::Nodespec => {
            let node = &cfg.node;
            let gpu_peak = peak_flops(&node.gpu, Precision::Fp64, node.gpu.max_clock_ghz).map_err(model)?;
            let power = power_check(node, node.cpu.active_draw_w, node.gpu.active_draw_w);
            let nodes = cfg.fabric.compute_nodes();
            let sys = aggregate_system(node, nodes);
            let fmt_opt = |r: Result<f64, _>| match r {
                Ok(v) => format!("{v:.2}"),
                Err(e) => format!("n/a ({e})"),
            };
            let rows = [
                ("cpus_per_node", node.cpus.to_string()),
                ("gpus_per_node", node.gpus.to_string()),
                ("nics_per_node", node.nics.to_string()),
                (
                    "gpu_fp64_ops_per_clock",
                    node.gpu.ops_per_clock(Precision::Fp64).unwrap_or(0).to_string(),
                ),
                ("gpu_fp64_peak_tflops", format!("{:.2}", gpu_peak / 1e12)),
                (
                    "gpu_roofline_fp64_hbm_flop_per_byte",
                    fmt_opt(roofline_threshold(&node.gpu, Precision::Fp64, MemoryTier::Hbm)),
                ),
                (
                    "cpu_roofline_fp64_ddr_flop_per_byte",
                    fmt_opt(roofline_threshold(&node.cpu, Precision::Fp64, MemoryTier::Ddr)),
                ),
                ("hbm_per_node_gb", format!("{:.0}", node.hbm_per_node() / 1e9)),
                ("nominal_power_w", format!("{:.0}", power.total_w)),
                ("ivocs", power.ivocs.len().to_string()),
                ("within_sustained", power.sustained_ok.to_string()),
                ("within_peak", power.peak_ok.to_string()),
                ("system_nodes", nodes.to_string()),
                ("system_hbm_capacity_pb", format!("{:.3}", sys.hbm_capacity / PB)),
                ("system_ddr_capacity_pb", format!("{:.3}", sys.ddr_capacity / PB)),
                ("system_hbm_bandwidth_pbs", format!("{:.2}", sys.hbm_bandwidth / PB)),
                ("system_ddr_bandwidth_pbs", format!("{:.2}", sys.ddr_bandwidth / PB)),
            ];
            emit(cli.format, &["quantity", "value"], kv(&rows), out)?;
            Ok(0)
        }
        Command::Storage => {
            let s = &cfg.storage;
            let c = daos_capacity(s);
            let rows = [
                ("daos_servers", s.daos_servers.to_string()),
                ("drives_per_server", s.drives_per_server.to_string()),
                ("drive_capacity_tb", format!("{}", s.drive_capacity / TB)),
                ("ec_scheme", format!("{}+{}", s.ec_data, s.ec_parity)),
                ("raw_capacity_pb", format!("{:.4}", c.raw_bytes / PB)),
                ("usable_capacity_pb", format!("{:.4}", c.usable_bytes / PB)),
                ("engines", c.engines.to_string()),
                ("lustre_capacity_pb", format!("{}", s.lustre_capacity / PB)),
            ];
            emit(cli.format, &["quantity", "value"], kv(&rows), out)?;
            Ok(0)
        }
        Command::Reproduce => {
            let report = reproduce(&cfg, &ReferenceSet::builtin()).map_err(model)?;
            match cli.format {
                Format::Table => report.write_table(out)?,
                Format::Csv => report.write_csv(out)?,
            }
            Ok(if report.all_pass() { 0 } else { 1 })
        }
    }
}
