//! Decimal SI unit helpers.
//!
//! Everything in the crate is decimal (1 TB = 10^12 bytes, 1 PB = 10^15
//! bytes) except explicitly binary message sizes such as KiB.

pub const KB: f64 = 1e3;
pub const MB: f64 = 1e6;
pub const GB: f64 = 1e9;
pub const TB: f64 = 1e12;
pub const PB: f64 = 1e15;

pub const KIB: f64 = 1024.0;
pub const MIB: f64 = 1024.0 * 1024.0;
pub const GIB: f64 = 1024.0 * 1024.0 * 1024.0;

pub const TERA: f64 = 1e12;
pub const PETA: f64 = 1e15;
pub const EXA: f64 = 1e18;

pub const MICROSECOND: f64 = 1e-6;

/// Per-direction byte rate of a link given in Gb/s.
pub fn gbps_to_bytes_per_sec(gbps: f64) -> f64 {
    gbps * 1e9 / 8.0
}

/// Signed relative error of `computed` against `reference`.
pub fn relative_error(computed: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        if computed == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (computed - reference) / reference
    }
}

/// Parses a byte count such as `1GB`, `512KiB`, `64 KiB`, `1e9` or `0`.
pub fn parse_bytes(text: &str) -> Option<f64> {
    let t = text.trim();
    let split = t
        .find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E')
        .unwrap_or(t.len());
    let (num, suffix) = t.split_at(split);
    let value: f64 = num.trim().parse().ok()?;
    let scale = match suffix.trim() {
        "" | "B" => 1.0,
        "KB" | "kB" => KB,
        "MB" => MB,
        "GB" => GB,
        "TB" => TB,
        "KiB" => KIB,
        "MiB" => MIB,
        "GiB" => GIB,
        _ => return None,
    };
    if value < 0.0 || !value.is_finite() {
        return None;
    }
    Some(value * scale)
}
