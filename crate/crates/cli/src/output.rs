//! Report files: number formatting, provenance headers, atomic writes and
//! the band CSV layouts together with their readers.

use std::io::Write;
use std::path::Path;

use qeband_core::{DFBand, Grid, IntervalBand, MonotoneStepFn, ProbGrid};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// `printf("%.17g")`: 17 significant digits, trailing zeros removed, which
/// round-trips every finite `f64`.
pub fn fmt_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    if !(-4..17).contains(&exp) {
        let mut m = format!("{}.{}", &digits[..1], &digits[1..]);
        trim_fraction(&mut m);
        let esign = if exp < 0 { '-' } else { '+' };
        return format!("{sign}{m}e{esign}{:02}", exp.abs());
    }
    let mut out = if exp >= 0 {
        let int_len = exp as usize + 1;
        format!("{}.{}", &digits[..int_len], &digits[int_len..])
    } else {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    };
    trim_fraction(&mut out);
    format!("{sign}{out}")
}

fn trim_fraction(s: &mut String) {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
}

pub fn parse_number(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" | "+inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        t => t.parse().ok(),
    }
}

/// Hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Provenance carried by every report file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: String,
}

impl Provenance {
    pub fn header_line(&self) -> String {
        format!("# version={VERSION} seed={} config_hash={}\n", self.seed, self.config_hash)
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Data(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

fn csv_bytes(prov: &Provenance, header: &[&str], rows: Vec<Vec<String>>) -> CliResult<Vec<u8>> {
    let mut out = prov.header_line().into_bytes();
    {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut out);
        let werr = |e: csv::Error| CliError::Data(e.to_string());
        w.write_record(header).map_err(werr)?;
        for r in rows {
            w.write_record(&r).map_err(werr)?;
        }
        w.flush()?;
    }
    Ok(out)
}

/// `{v1;v2;...}` for an admissible set, empty when there is no support
/// restriction.
fn fmt_set(set: Option<&Vec<f64>>) -> String {
    match set {
        None => String::new(),
        Some(s) => format!("{{{}}}", s.iter().map(|&v| fmt_g17(v)).collect::<Vec<_>>().join(";")),
    }
}

fn parse_set(s: &str) -> Option<Option<Vec<f64>>> {
    if s.is_empty() {
        return Some(None);
    }
    let inner = s.strip_prefix('{')?.strip_suffix('}')?;
    if inner.is_empty() {
        return Some(Some(vec![]));
    }
    inner.split(';').map(parse_number).collect::<Option<Vec<_>>>().map(Some)
}

/// One DF-band with its point estimate, labelled by group.
pub struct DfBandRecord<'a> {
    pub label: &'a str,
    pub estimate: &'a MonotoneStepFn,
    pub band: &'a DFBand,
}

/// `group,y,estimate,lower,upper`.
pub fn df_bands_csv(prov: &Provenance, records: &[DfBandRecord]) -> CliResult<Vec<u8>> {
    let mut rows = Vec::new();
    for r in records {
        for (i, &y) in r.band.grid().points().iter().enumerate() {
            rows.push(vec![
                r.label.to_string(),
                fmt_g17(y),
                fmt_g17(r.estimate.values()[i]),
                fmt_g17(r.band.lower().values()[i]),
                fmt_g17(r.band.upper().values()[i]),
            ]);
        }
    }
    csv_bytes(prov, &["group", "y", "estimate", "lower", "upper"], rows)
}

/// Column layout of an interval-band file.
#[derive(Debug, Clone, Copy)]
pub struct IntervalLayout {
    pub key: &'static str,
    pub lo: &'static str,
    pub hi: &'static str,
}

pub const QF_LAYOUT: IntervalLayout = IntervalLayout {
    key: "group",
    lo: "q_lo",
    hi: "q_hi",
};

pub const QE_LAYOUT: IntervalLayout = IntervalLayout {
    key: "pair",
    lo: "d_lo",
    hi: "d_hi",
};

/// `<key>,a,<lo>,<hi>,admissible`.
pub fn interval_bands_csv(
    prov: &Provenance,
    layout: IntervalLayout,
    records: &[(&str, &IntervalBand)],
) -> CliResult<Vec<u8>> {
    let mut rows = Vec::new();
    for (label, band) in records {
        for (i, &a) in band.prob_grid().indices().iter().enumerate() {
            rows.push(vec![
                label.to_string(),
                fmt_g17(a),
                fmt_g17(band.lo()[i]),
                fmt_g17(band.hi()[i]),
                fmt_set(band.admissible().map(|s| &s[i])),
            ]);
        }
    }
    csv_bytes(prov, &[layout.key, "a", layout.lo, layout.hi, "admissible"], rows)
}

fn read_rows(bytes: &[u8], width: usize) -> CliResult<Vec<csv::StringRecord>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(bytes);
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Data(e.to_string()))?;
        if rec.len() != width {
            return Err(CliError::Data(format!("record {} has {} fields", i + 1, rec.len())));
        }
        rows.push(rec);
    }
    Ok(rows)
}

fn num(rec: &csv::StringRecord, k: usize) -> CliResult<f64> {
    parse_number(&rec[k]).ok_or_else(|| CliError::Data(format!("`{}` is not a number", &rec[k])))
}

/// Groups consecutive records by their first field, keeping file order.
fn grouped(rows: Vec<csv::StringRecord>) -> Vec<(String, Vec<csv::StringRecord>)> {
    let mut out: Vec<(String, Vec<csv::StringRecord>)> = Vec::new();
    for r in rows {
        match out.last_mut() {
            Some((label, v)) if *label == r[0] => v.push(r),
            _ => out.push((r[0].to_string(), vec![r])),
        }
    }
    out
}

/// Parses a DF-band file back into `(label, estimate, band)`; the grids use
/// `domain_sup` and the bands `level`.
pub fn read_df_bands(bytes: &[u8], domain_sup: f64, level: f64) -> CliResult<Vec<(String, MonotoneStepFn, DFBand)>> {
    grouped(read_rows(bytes, 5)?)
        .into_iter()
        .map(|(label, recs)| {
            let col = |k| recs.iter().map(|r| num(r, k)).collect::<CliResult<Vec<f64>>>();
            let grid = Grid::with_domain_sup(col(1)?, domain_sup)?;
            let est = MonotoneStepFn::new(grid.clone(), col(2)?)?;
            let band = DFBand::new(
                MonotoneStepFn::new(grid.clone(), col(3)?)?,
                MonotoneStepFn::new(grid, col(4)?)?,
                level,
            )?;
            Ok((label, est, band))
        })
        .collect()
}

/// Parses a QF- or QE-band file back into labelled bands.
pub fn read_interval_bands(bytes: &[u8]) -> CliResult<Vec<(String, IntervalBand)>> {
    grouped(read_rows(bytes, 5)?)
        .into_iter()
        .map(|(label, recs)| {
            let col = |k| recs.iter().map(|r| num(r, k)).collect::<CliResult<Vec<f64>>>();
            let sets = recs
                .iter()
                .map(|r| parse_set(&r[4]).ok_or_else(|| CliError::Data(format!("bad admissible set `{}`", &r[4]))))
                .collect::<CliResult<Vec<_>>>()?;
            let admissible = if sets.iter().all(Option::is_none) {
                None
            } else {
                Some(sets.into_iter().map(Option::unwrap_or_default).collect())
            };
            let band = IntervalBand::new(ProbGrid::new(col(1)?)?, col(2)?, col(3)?, admissible)?;
            Ok((label, band))
        })
        .collect()
}
