//! CSV persistence for sweep results.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use super::config::{RateUnits, Scheme};
use super::sweep::SweepRow;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 9] = [
    "scheme",
    "p_bar_w",
    "tau0",
    "lambda",
    "avg_rate_nats",
    "avg_rate_bits",
    "avg_power_w",
    "epochs_m",
    "seed",
];

/// Formats like C's `%.12g`: 12 significant digits, trailing zeros dropped,
/// scientific notation outside `1e-4 <= |x| < 1e12`.
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..12).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (11 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, x)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn optional(x: Option<f64>) -> String {
    x.map(format_sig12).unwrap_or_default()
}

fn row_record(row: &SweepRow) -> [String; 9] {
    [
        row.scheme.name().to_string(),
        format_sig12(row.p_bar),
        optional(row.tau0),
        optional(row.lambda),
        format_sig12(row.avg_rate_nats),
        format_sig12(row.avg_rate_bits),
        format_sig12(row.avg_power),
        row.epochs_m.to_string(),
        row.seed.to_string(),
    ]
}

pub fn write_rows<W: Write>(rows: &[SweepRow], out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(row_record(row))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let file = create(path)?;
    write_rows(rows, file).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn create(path: &Path) -> Result<std::fs::File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn bad_record(msg: String) -> csv::Error {
    csv::Error::from(std::io::Error::new(std::io::ErrorKind::InvalidData, msg))
}

pub fn read_rows<R: Read>(input: R) -> std::result::Result<Vec<SweepRow>, csv::Error> {
    let mut r = csv::ReaderBuilder::new().from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(bad_record(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| -> std::result::Result<f64, csv::Error> {
            rec[i].parse().map_err(|_| bad_record(format!("bad number `{}`", &rec[i])))
        };
        let opt = |i: usize| -> std::result::Result<Option<f64>, csv::Error> {
            if rec[i].is_empty() {
                Ok(None)
            } else {
                num(i).map(Some)
            }
        };
        rows.push(SweepRow {
            scheme: rec[0].parse::<Scheme>().map_err(bad_record)?,
            p_bar: num(1)?,
            tau0: opt(2)?,
            lambda: opt(3)?,
            avg_rate_nats: num(4)?,
            avg_rate_bits: num(5)?,
            avg_power: num(6)?,
            epochs_m: rec[7].parse().map_err(|_| bad_record(format!("bad count `{}`", &rec[7])))?,
            seed: rec[8].parse().map_err(|_| bad_record(format!("bad seed `{}`", &rec[8])))?,
        });
    }
    Ok(rows)
}

pub fn read_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_rows(file).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

/// Wide table for plotting: one line per budget, one column per scheme and
/// unit (e.g. `JOPTA_nats`). Missing results are left empty.
pub fn emit_plotdata(rows: &[SweepRow], units: RateUnits, path: &Path) -> Result<()> {
    let file = create(path)?;
    write_plotdata(rows, units, file).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_plotdata<W: Write>(rows: &[SweepRow], units: RateUnits, out: W) -> std::result::Result<(), csv::Error> {
    let mut schemes: Vec<Scheme> = rows.iter().map(|r| r.scheme).collect();
    schemes.sort();
    schemes.dedup();
    let suffixes: &[&str] = match units {
        RateUnits::Nats => &["nats"],
        RateUnits::Bits => &["bits"],
        RateUnits::Both => &["nats", "bits"],
    };

    // Budgets keyed by their bit pattern keep first-seen order stable.
    let mut budgets: Vec<f64> = Vec::new();
    let mut cells: BTreeMap<(u64, Scheme), &SweepRow> = BTreeMap::new();
    for row in rows {
        if !budgets.iter().any(|b| b.to_bits() == row.p_bar.to_bits()) {
            budgets.push(row.p_bar);
        }
        cells.insert((row.p_bar.to_bits(), row.scheme), row);
    }

    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut header = vec!["p_bar_w".to_string()];
    for s in &schemes {
        for suffix in suffixes {
            header.push(format!("{}_{}", s.name(), suffix));
        }
    }
    w.write_record(&header)?;
    for p in budgets {
        let mut rec = vec![format_sig12(p)];
        for s in &schemes {
            let row = cells.get(&(p.to_bits(), *s));
            for suffix in suffixes {
                rec.push(match (row, *suffix) {
                    (Some(r), "nats") => format_sig12(r.avg_rate_nats),
                    (Some(r), _) => format_sig12(r.avg_rate_bits),
                    (None, _) => String::new(),
                });
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
