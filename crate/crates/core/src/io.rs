//! CSV and JSON serialisation.
//!
//! Floats are written with 17 significant digits (`{:.16e}`), which is enough
//! for every `f64` to parse back to the same bits; the files are therefore
//! stable under regeneration and can be diffed.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::echo::EchoCurve;
use crate::error::{Error, Result};
use crate::model::PhaseLabel;
use crate::sweep::{AxisParam, Cell, Comparison, Flag, SweepResult};

const FLAG_SEPARATOR: char = '|';

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_float(field: &str) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::InvalidParams(format!("'{field}' is not a number")))
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::InvalidParams(format!("malformed CSV: {}", msg.into()))
}

fn header_of<R: Read>(reader: &mut csv::Reader<R>) -> Result<Vec<String>> {
    Ok(reader.headers()?.iter().map(str::to_string).collect())
}

fn expect_header<R: Read>(reader: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let header = header_of(reader)?;
    if header != expected {
        return Err(malformed(format!("expected header {expected:?}, got {header:?}")));
    }
    Ok(())
}

fn join_flags(flags: &[Flag]) -> String {
    flags
        .iter()
        .map(|f| f.to_string().replace(FLAG_SEPARATOR, "/"))
        .collect::<Vec<_>>()
        .join(&FLAG_SEPARATOR.to_string())
}

fn split_flags(field: &str) -> Result<Vec<Flag>> {
    if field.is_empty() {
        return Ok(Vec::new());
    }
    field.split(FLAG_SEPARATOR).map(str::parse).collect()
}

/// Header of a sweep CSV for the given second axis, with the exact columns
/// appended when present.
pub fn sweep_header(axis2: AxisParam, with_exact: bool) -> Vec<&'static str> {
    let mut header = vec!["g", axis2.column(), "L", "gamma", "phase", "flags"];
    if with_exact {
        header.extend(["L_exact", "gamma_exact"]);
    }
    header
}

pub fn write_sweep_csv<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    let with_exact = result.cells.iter().any(|c| c.exact.is_some());
    let axis2 = result.spec.axis2.param;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(sweep_header(axis2, with_exact))?;
    for cell in &result.cells {
        let x = if axis2 == AxisParam::N {
            format!("{}", cell.x as u64)
        } else {
            format_float(cell.x)
        };
        let mut record = vec![
            format_float(cell.g),
            x,
            format_float(cell.l),
            format_float(cell.gamma),
            cell.phase.to_string(),
            join_flags(&cell.flags),
        ];
        if with_exact {
            let (l, gamma) = cell.exact.unwrap_or((f64::NAN, f64::NAN));
            record.extend([format_float(l), format_float(gamma)]);
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Cells and the second-axis parameter of a sweep CSV.
pub fn read_sweep_csv<R: Read>(input: R) -> Result<(AxisParam, Vec<Cell>)> {
    let mut r = csv::Reader::from_reader(input);
    let header = header_of(&mut r)?;
    let axis2 = match header.get(1).map(String::as_str) {
        Some("t") => AxisParam::T,
        Some("N") => AxisParam::N,
        other => return Err(malformed(format!("unexpected second column {other:?}"))),
    };
    let with_exact = header.len() == 8;
    let expected = sweep_header(axis2, with_exact);
    if header != expected {
        return Err(malformed(format!("expected header {expected:?}, got {header:?}")));
    }
    let mut cells = Vec::new();
    for record in r.records() {
        let record = record?;
        let exact = if with_exact {
            let (l, gamma) = (parse_float(&record[6])?, parse_float(&record[7])?);
            (!(l.is_nan() && gamma.is_nan())).then_some((l, gamma))
        } else {
            None
        };
        cells.push(Cell {
            g: parse_float(&record[0])?,
            x: parse_float(&record[1])?,
            l: parse_float(&record[2])?,
            gamma: parse_float(&record[3])?,
            phase: record[4].parse::<PhaseLabel>()?,
            flags: split_flags(&record[5])?,
            exact,
        });
    }
    Ok((axis2, cells))
}

pub fn write_echo_csv<W: Write>(curve: &EchoCurve, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "L"])?;
    for (t, l) in curve.iter() {
        w.write_record([format_float(t), format_float(l)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_echo_csv<R: Read>(input: R) -> Result<Vec<(f64, f64)>> {
    let mut r = csv::Reader::from_reader(input);
    expect_header(&mut r, &["t", "L"])?;
    r.records()
        .map(|rec| {
            let rec = rec?;
            Ok((parse_float(&rec[0])?, parse_float(&rec[1])?))
        })
        .collect()
}

/// `t,L,ReD,ImD` for an exact echo.
pub fn write_decoherence_csv<W: Write>(times: &[f64], values: &[f64], d: &[Complex64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "L", "ReD", "ImD"])?;
    for ((t, l), d) in times.iter().zip(values).zip(d) {
        w.write_record([
            format_float(*t),
            format_float(*l),
            format_float(d.re),
            format_float(d.im),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_decoherence_csv<R: Read>(input: R) -> Result<Vec<(f64, f64, Complex64)>> {
    let mut r = csv::Reader::from_reader(input);
    expect_header(&mut r, &["t", "L", "ReD", "ImD"])?;
    r.records()
        .map(|rec| {
            let rec = rec?;
            Ok((
                parse_float(&rec[0])?,
                parse_float(&rec[1])?,
                Complex64::new(parse_float(&rec[2])?, parse_float(&rec[3])?),
            ))
        })
        .collect()
}

const COMPARISON_HEADER: [&str; 11] = [
    "g",
    "x",
    "phase",
    "gamma_analytic",
    "gamma_exact",
    "L_gaussian",
    "L_exact",
    "gamma_deviation",
    "L_deviation",
    "near_critical",
    "error",
];

pub fn write_comparison_csv<W: Write>(cmp: &Comparison, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = COMPARISON_HEADER;
    header[1] = cmp.spec.axis2.param.column();
    w.write_record(header)?;
    for row in &cmp.rows {
        w.write_record([
            format_float(row.g),
            format_float(row.x),
            row.phase.to_string(),
            format_float(row.gamma_analytic),
            format_float(row.gamma_exact),
            format_float(row.l_gaussian),
            format_float(row.l_exact),
            format_float(row.gamma_deviation),
            format_float(row.l_deviation),
            row.near_critical.to_string(),
            row.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize, W: Write>(value: &T, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned, R: Read>(input: R) -> Result<T> {
    Ok(serde_json::from_reader(input)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::{presets, run_sweep, Axis, Engine, SweepSpec};
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn floats_round_trip_bit_exactly(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let back = parse_float(&format_float(x)).unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(1.0), "1.0000000000000000e0");
    }

    fn bits(cells: &[Cell]) -> Vec<(u64, u64, u64, u64)> {
        cells
            .iter()
            .map(|c| (c.g.to_bits(), c.x.to_bits(), c.l.to_bits(), c.gamma.to_bits()))
            .collect()
    }

    #[test]
    fn sweep_csv_round_trip() {
        let result = run_sweep(&presets::fig3()).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&result, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("g,t,L,gamma,phase,flags\n"));
        let (axis, cells) = read_sweep_csv(buf.as_slice()).unwrap();
        assert_eq!(axis, AxisParam::T);
        assert_eq!(bits(&cells), bits(&result.cells));
        assert_eq!(
            cells.iter().map(|c| (&c.phase, &c.flags)).collect::<Vec<_>>(),
            result.cells.iter().map(|c| (&c.phase, &c.flags)).collect::<Vec<_>>()
        );
    }

    #[test]
    fn atom_axis_and_exact_columns() {
        let spec = SweepSpec {
            base: presets::fig2().base.with_n_atoms(4).unwrap(),
            axis1: Axis::list(AxisParam::G, vec![0.3, 0.9]).unwrap(),
            axis2: Axis::list(AxisParam::N, vec![2.0, 4.0]).unwrap(),
            engine: Engine::Both,
            ..presets::fig4()
        };
        let result = run_sweep(&spec).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&result, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("g,N,L,gamma,phase,flags,L_exact,gamma_exact\n"));
        assert!(text.lines().nth(1).unwrap().split(',').nth(1) == Some("2"));
        let (axis, cells) = read_sweep_csv(buf.as_slice()).unwrap();
        assert_eq!(axis, AxisParam::N);
        assert_eq!(bits(&cells), bits(&result.cells));
        for (a, b) in cells.iter().zip(&result.cells) {
            let (x, y) = (a.exact.unwrap(), b.exact.unwrap());
            assert_eq!((x.0.to_bits(), x.1.to_bits()), (y.0.to_bits(), y.1.to_bits()));
        }
    }

    #[test]
    fn json_round_trip() {
        let result = run_sweep(&presets::fig3()).unwrap();
        let mut buf = Vec::new();
        write_json(&result, &mut buf).unwrap();
        let back: SweepResult = read_json(buf.as_slice()).unwrap();
        assert_eq!(back, result);
    }

    #[test]
    fn rejects_foreign_headers() {
        assert!(read_echo_csv("time,L\n0,1\n".as_bytes()).is_err());
        assert!(read_sweep_csv("g,x,L\n".as_bytes()).is_err());
    }
}
