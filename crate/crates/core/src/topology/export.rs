//! Link-list CSV: `link_id,class,medium,rate_gbps,end_a,end_b`.
//!
//! Switch ends are written `s<switch>:p<port>`, endpoint ends `e<endpoint>`.

use std::io::{Read, Write};

use super::{
    EndpointId, Link, LinkClass, LinkEnd, LinkId, Medium, Skeleton, SwitchId, Topology,
    TopologyError,
};
use crate::topology::FabricConfig;

pub const HEADER: [&str; 6] = ["link_id", "class", "medium", "rate_gbps", "end_a", "end_b"];

pub fn write_links_csv<W: Write>(t: &Topology, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for link in t.links() {
        w.write_record([
            link.id.0.to_string(),
            link.class.as_str().to_string(),
            link.medium.as_str().to_string(),
            link.rate_gbps.to_string(),
            link.a.to_string(),
            link.b.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn parse_end(s: &str) -> Option<LinkEnd> {
    if let Some(rest) = s.strip_prefix('e') {
        return Some(LinkEnd::Endpoint(EndpointId(rest.parse().ok()?)));
    }
    let (sw, port) = s.strip_prefix('s')?.split_once(":p")?;
    Some(LinkEnd::Switch {
        switch: SwitchId(sw.parse().ok()?),
        port: port.parse().ok()?,
    })
}

impl Topology {
    /// Rebuilds a topology from an exported link list. Groups, switches and
    /// endpoints come from `config`; endpoint attachments and all links come
    /// from the CSV.
    pub fn from_links_csv<R: Read>(config: &FabricConfig, input: R) -> Result<Self, TopologyError> {
        config.check()?;
        let mut skeleton = Skeleton::new(config);
        let mut reader = csv::Reader::from_reader(input);
        let bad = |record: usize, reason: String| TopologyError::Csv { record, reason };

        let headers = reader.headers().map_err(|e| bad(0, e.to_string()))?;
        if headers.iter().ne(HEADER) {
            return Err(bad(0, format!("unexpected header {headers:?}")));
        }

        let mut links = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| bad(i + 1, e.to_string()))?;
            if rec.len() != HEADER.len() {
                return Err(bad(i + 1, format!("expected 6 fields, got {}", rec.len())));
            }
            let id: usize = rec[0].parse().map_err(|_| bad(i + 1, "bad link_id".into()))?;
            if id != links.len() {
                return Err(bad(i + 1, format!("link ids must be dense, got {id}")));
            }
            let class = LinkClass::parse(&rec[1]).ok_or_else(|| bad(i + 1, "bad class".into()))?;
            let medium = Medium::parse(&rec[2]).ok_or_else(|| bad(i + 1, "bad medium".into()))?;
            let rate_gbps = rec[3].parse().map_err(|_| bad(i + 1, "bad rate".into()))?;
            let mut ends = [LinkEnd::Endpoint(EndpointId(0)); 2];
            for (k, field) in [&rec[4], &rec[5]].into_iter().enumerate() {
                let end = parse_end(field).ok_or_else(|| bad(i + 1, format!("bad end {field:?}")))?;
                match end {
                    LinkEnd::Switch { switch, .. } if switch.index() >= skeleton.switches.len() => {
                        return Err(bad(i + 1, format!("unknown switch {switch}")));
                    }
                    LinkEnd::Endpoint(e) if e.index() >= skeleton.endpoints.len() => {
                        return Err(bad(i + 1, format!("unknown endpoint {e}")));
                    }
                    _ => {}
                }
                ends[k] = end;
            }
            if let (Some(s), LinkEnd::Endpoint(e)) = (ends[0].switch(), ends[1]) {
                skeleton.endpoints[e.index()].switch = s;
            }
            links.push(Link {
                id: LinkId::from(id),
                class,
                medium,
                rate_gbps,
                a: ends[0],
                b: ends[1],
            });
        }
        Ok(Topology::assemble(config.clone(), skeleton, links))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_first_rows() {
        let t = Topology::build(&FabricConfig::tiny()).unwrap();
        let mut buf = Vec::new();
        write_links_csv(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("link_id,class,medium,rate_gbps,end_a,end_b"));
        assert_eq!(lines.next(), Some("0,injection,electrical,200,s0:p0,e0"));
        assert_eq!(lines.next(), Some("1,injection,electrical,200,s1:p0,e1"));
    }

    #[test]
    fn rejects_unknown_switch() {
        let csv = "link_id,class,medium,rate_gbps,end_a,end_b\n0,injection,electrical,200,s99:p0,e0\n";
        let err = Topology::from_links_csv(&FabricConfig::tiny(), csv.as_bytes()).unwrap_err();
        assert!(matches!(err, TopologyError::Csv { record: 1, .. }));
    }

    #[test]
    fn rejects_sparse_ids() {
        let csv = "link_id,class,medium,rate_gbps,end_a,end_b\n3,injection,electrical,200,s0:p0,e0\n";
        assert!(Topology::from_links_csv(&FabricConfig::tiny(), csv.as_bytes()).is_err());
    }

    #[test]
    fn parses_ends() {
        assert_eq!(
            parse_end("s12:p7"),
            Some(LinkEnd::Switch {
                switch: SwitchId(12),
                port: 7
            })
        );
        assert_eq!(parse_end("e5"), Some(LinkEnd::Endpoint(EndpointId(5))));
        assert_eq!(parse_end("x5"), None);
    }
}
