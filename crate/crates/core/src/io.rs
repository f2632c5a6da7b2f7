//! Plain-text formats: one-value-per-line signals, comma-separated grids and
//! matrices, ASCII PGM images and energy traces. Floats are written with 17
//! significant digits so they read back bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Dims, GridFunction};
use crate::operators::LinearMap;
use crate::solvers::EnergyTrace;

fn fmt_f64(out: &mut String, v: f64) {
    write!(out, "{v:.16e}").expect("writing to a String");
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("not a number: {:?}", tok.trim()),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            msg: "non-finite value".into(),
        });
    }
    Ok(v)
}

/// Rows of comma-separated numbers; blank lines and `#` comments are skipped.
pub fn parse_table(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|t| parse_f64(t, k + 1))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first().map(Vec::len) {
            if row.len() != first {
                return Err(Error::Parse {
                    line: k + 1,
                    msg: format!("expected {first} columns, found {}", row.len()),
                });
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn format_signal(u: &GridFunction) -> String {
    let mut out = String::new();
    for &v in u.values() {
        fmt_f64(&mut out, v);
        out.push('\n');
    }
    out
}

pub fn format_grid(u: &GridFunction) -> String {
    let w = u.dims().row_len();
    let mut out = String::new();
    for row in u.values().chunks(w) {
        for (k, &v) in row.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            fmt_f64(&mut out, v);
        }
        out.push('\n');
    }
    out
}

/// A 1D signal as one value per line, or a 2D grid as comma-separated rows.
pub fn write_csv(path: &Path, u: &GridFunction) -> Result<()> {
    let text = if u.dims().is_2d() {
        format_grid(u)
    } else {
        format_signal(u)
    };
    fs::write(path, text)?;
    Ok(())
}

/// Single-column files read as 1D signals, wider ones as 2D grids.
pub fn read_csv(path: &Path) -> Result<GridFunction> {
    let rows = parse_table(&fs::read_to_string(path)?)?;
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "empty file".into(),
        });
    }
    if rows[0].len() == 1 {
        Ok(GridFunction::from_1d(rows.into_iter().map(|r| r[0]).collect()))
    } else {
        Ok(GridFunction::from_rows(&rows))
    }
}

pub fn read_matrix_csv(path: &Path) -> Result<LinearMap> {
    let rows = parse_table(&fs::read_to_string(path)?)?;
    let (r, c) = (rows.len(), rows.first().map_or(0, Vec::len));
    LinearMap::dense(r, c, rows.concat())
}

pub fn write_matrix_csv(path: &Path, t: &LinearMap) -> Result<()> {
    let (rows, cols, data) = t
        .as_dense()
        .ok_or_else(|| Error::InvalidArgument("only dense operators are written as matrices".into()))?;
    let grid = GridFunction::from_raw(Dims::D2 { rows, cols }, data);
    fs::write(path, format_grid(&grid))?;
    Ok(())
}

/// ASCII PGM (P2, maxval 255). Values are clamped to [0, 1].
pub fn format_pgm(u: &GridFunction) -> String {
    let (rows, cols) = (u.dims().rows(), u.dims().row_len());
    let mut out = format!("P2\n{cols} {rows}\n255\n");
    for row in u.values().chunks(cols) {
        let line: Vec<String> = row
            .iter()
            .map(|v| ((v.clamp(0.0, 1.0) * 255.0).round() as u8).to_string())
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_pgm(path: &Path, u: &GridFunction) -> Result<()> {
    fs::write(path, format_pgm(u))?;
    Ok(())
}

/// Reads a P2 image into [0, 1].
pub fn parse_pgm(text: &str) -> Result<GridFunction> {
    let mut tokens = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        tokens.extend(line.split_whitespace().map(|t| (k + 1, t)));
    }
    let mut it = tokens.into_iter();
    match it.next() {
        Some((_, "P2")) => {}
        other => {
            return Err(Error::Parse {
                line: other.map_or(1, |t| t.0),
                msg: "expected P2 header".into(),
            })
        }
    }
    let mut header = [0usize; 3];
    for h in header.iter_mut() {
        let (line, tok) = it.next().ok_or(Error::Parse {
            line: 0,
            msg: "truncated header".into(),
        })?;
        *h = tok.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("bad header field {tok:?}"),
        })?;
    }
    let [cols, rows, maxval] = header;
    if maxval == 0 || rows == 0 || cols == 0 {
        return Err(Error::Parse {
            line: 0,
            msg: "zero dimension or maxval".into(),
        });
    }
    let mut values = Vec::with_capacity(rows * cols);
    for (line, tok) in it {
        let v: usize = tok.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("bad pixel {tok:?}"),
        })?;
        if v > maxval {
            return Err(Error::Parse {
                line,
                msg: format!("pixel {v} above maxval {maxval}"),
            });
        }
        values.push(v as f64 / maxval as f64);
    }
    if values.len() != rows * cols {
        return Err(Error::Parse {
            line: 0,
            msg: format!("expected {} pixels, found {}", rows * cols, values.len()),
        });
    }
    GridFunction::new(Dims::D2 { rows, cols }, values)
}

pub fn read_pgm(path: &Path) -> Result<GridFunction> {
    parse_pgm(&fs::read_to_string(path)?)
}

/// Reads an image by extension: `.pgm` as PGM, anything else as CSV.
pub fn read_image(path: &Path) -> Result<GridFunction> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("pgm") => read_pgm(path),
        _ => read_csv(path),
    }
}

pub fn write_image(path: &Path, u: &GridFunction) -> Result<()> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("pgm") => write_pgm(path, u),
        _ => write_csv(path, u),
    }
}

/// Any nonzero entry becomes 1.
pub fn binarize(mask: &GridFunction) -> GridFunction {
    mask.map(|v| if v != 0.0 { 1.0 } else { 0.0 })
}

pub fn format_trace(trace: &EnergyTrace) -> String {
    let mut out = String::from("iter,energy,increment,seconds\n");
    for r in &trace.records {
        write!(out, "{},", r.iter).expect("writing to a String");
        fmt_f64(&mut out, r.energy);
        out.push(',');
        fmt_f64(&mut out, r.increment);
        out.push(',');
        fmt_f64(&mut out, r.seconds);
        out.push('\n');
    }
    out
}

pub fn write_trace(path: &Path, trace: &EnergyTrace) -> Result<()> {
    fs::write(path, format_trace(trace))?;
    Ok(())
}
