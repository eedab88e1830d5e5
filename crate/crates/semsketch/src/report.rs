//! Storage comparison against the one-hot baseline.

use std::fmt::Write as _;

use semsketch_core::encode::storage_report;
use semsketch_core::{BitDepth, EncoderConfig, StorageReport};

use crate::error::{Error, Result};

/// Printed storage figure for the `(8, 2, 8)` configuration in the
/// published comparison, which disagrees with `n²·d·b / baseline`.
pub const PUBLISHED_ROW3_PERCENT: f64 = 4.2;

/// `(n, d, bits)` rows reported by default.
pub fn default_configs() -> Vec<EncoderConfig> {
    [(32, 2, BitDepth::B32), (16, 3, BitDepth::B32), (8, 2, BitDepth::B8)]
        .into_iter()
        .map(|(n, d, b)| EncoderConfig { n, d, bits: b })
        .collect()
}

/// Parses `n,d,bits`.
pub fn parse_config(text: &str) -> Result<EncoderConfig> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let [n, d, b] = parts[..] else {
        return Err(Error::Invalid(format!("config {text:?} is not n,d,bits")));
    };
    let num = |s: &str| s.parse::<usize>().map_err(|_| Error::Invalid(format!("bad number {s:?} in {text:?}")));
    Ok(EncoderConfig::new(num(n)?, num(d)?, BitDepth::from_bits(num(b)? as u32)?)?)
}

pub fn build_report(configs: &[EncoderConfig], baseline_bits: u64) -> Result<Vec<StorageReport>> {
    configs.iter().map(|c| Ok(storage_report(*c, baseline_bits)?)).collect()
}

fn is_row3(r: &StorageReport) -> bool {
    r.config.n == 8 && r.config.d == 2 && r.config.bits == BitDepth::B8
}

pub fn render_text(rows: &[StorageReport]) -> String {
    let mut out = String::new();
    let baseline = rows.first().map(|r| r.baseline_bits).unwrap_or(0);
    writeln!(out, "{:>4} {:>3} {:>4} {:>12} {:>9}", "n", "d", "bits", "bits/vector", "storage").unwrap();
    writeln!(out, "{:>4} {:>3} {:>4} {:>12} {:>9}", "-", "-", "1", baseline, "100%").unwrap();
    let mut footnote = None;
    for r in rows {
        let mark = if is_row3(r) {
            footnote = Some(r);
            " *"
        } else {
            ""
        };
        writeln!(
            out,
            "{:>4} {:>3} {:>4} {:>12} {:>8.3}%{mark}",
            r.config.n,
            r.config.d,
            r.config.bits.bits(),
            r.bits_per_vector,
            r.ratio * 100.0
        )
        .unwrap();
    }
    if let Some(r) = footnote {
        writeln!(
            out,
            "* n²·d·b = {} bits is {:.3}% of the baseline; the published {PUBLISHED_ROW3_PERCENT}% \
             for this configuration is inconsistent with the 32/2/32 and 16/3/32 rows.",
            r.bits_per_vector,
            r.ratio * 100.0
        )
        .unwrap();
    }
    out
}

pub fn render_csv(rows: &[StorageReport]) -> String {
    let mut out = String::from("n,d,bits,bits_per_vector,baseline_bits,ratio,percent\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{:.6},{:.3}",
            r.config.n,
            r.config.d,
            r.config.bits.bits(),
            r.bits_per_vector,
            r.baseline_bits,
            r.ratio,
            r.ratio * 100.0
        )
        .unwrap();
    }
    out
}
