//! Plain-text and PGM formats for masks and fields.
//!
//! Images are stored top row first: the first row written is `j = ny − 1`.
//! Masks use 0 for outside and 255 (PGM) or `1` (text) for inside.

use std::io::Write;

use crate::anisotropy::{Anisotropy, Stencil};
use crate::error::{CheegerError, Result};
use crate::grid::{CellSet, Grid, ScalarField};
use crate::scalar::Scalar;

/// A raster read from disk, not yet attached to a grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskImage {
    pub nx: usize,
    pub ny: usize,
    /// Row-major, bottom row first (same layout as [`CellSet::mask`]).
    pub mask: Vec<bool>,
}

impl MaskImage {
    pub fn into_set<T: Scalar>(self, grid: Grid<T>) -> Result<CellSet<T>> {
        if grid.nx() != self.nx || grid.ny() != self.ny {
            return Err(CheegerError::InvalidGrid(format!(
                "mask is {}x{} but the grid is {}x{}",
                self.nx,
                self.ny,
                grid.nx(),
                grid.ny()
            )));
        }
        CellSet::from_mask(grid, self.mask)
    }
}

fn top_down_rows(nx: usize, ny: usize) -> impl Iterator<Item = std::ops::Range<usize>> {
    (0..ny).rev().map(move |j| j * nx..(j + 1) * nx)
}

pub fn write_pgm<T: Scalar>(set: &CellSet<T>, out: &mut impl Write) -> std::io::Result<()> {
    let g = set.grid();
    write!(out, "P5\n{} {}\n255\n", g.nx(), g.ny())?;
    let mut row = Vec::with_capacity(g.nx());
    for r in top_down_rows(g.nx(), g.ny()) {
        row.clear();
        row.extend(set.mask()[r].iter().map(|&b| if b { 255u8 } else { 0 }));
        out.write_all(&row)?;
    }
    Ok(())
}

pub fn pgm_bytes<T: Scalar>(set: &CellSet<T>) -> Vec<u8> {
    let mut v = Vec::new();
    write_pgm(set, &mut v).expect("writing to memory");
    v
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
    line: usize,
}

impl Header<'_> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b'\n' => {
                    self.line += 1;
                    self.pos += 1;
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => return,
            }
        }
    }

    fn token(&mut self) -> Result<&str> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("unexpected end of file"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).map_err(|_| self.err("non-ASCII token"))
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let t = self.token()?.to_string();
        t.parse().map_err(|_| self.err(&format!("bad {what} '{t}'")))
    }

    fn err(&self, message: &str) -> CheegerError {
        CheegerError::Parse { line: self.line, message: message.to_string() }
    }
}

/// Reads a P2 (ASCII) or P5 (binary, 8-bit) graymap; pixels above half the
/// maximum value are inside.
pub fn read_pgm(bytes: &[u8]) -> Result<MaskImage> {
    let mut h = Header { bytes, pos: 0, line: 1 };
    let magic = h.token()?.to_string();
    let binary = match magic.as_str() {
        "P5" => true,
        "P2" => false,
        other => return Err(h.err(&format!("expected P2 or P5, found '{other}'"))),
    };
    let nx = h.number("width")?;
    let ny = h.number("height")?;
    let maxval = h.number("maximum value")?;
    if nx == 0 || ny == 0 || maxval == 0 || maxval > 255 {
        return Err(h.err("unsupported dimensions or maximum value"));
    }
    let mut pixels = Vec::with_capacity(nx * ny);
    if binary {
        // exactly one whitespace byte separates the header from the raster
        let start = h.pos + 1;
        let data = bytes.get(start..start + nx * ny).ok_or_else(|| h.err("raster shorter than width x height"))?;
        pixels.extend_from_slice(data);
    } else {
        for _ in 0..nx * ny {
            let v = h.number("pixel")?;
            if v > maxval {
                return Err(h.err(&format!("pixel {v} exceeds maximum {maxval}")));
            }
            pixels.push(v as u8);
        }
    }
    let mut mask = vec![false; nx * ny];
    for (row, r) in top_down_rows(nx, ny).enumerate() {
        for (k, idx) in r.enumerate() {
            mask[idx] = 2 * pixels[row * nx + k] as usize > maxval;
        }
    }
    Ok(MaskImage { nx, ny, mask })
}

pub fn format_text_mask<T: Scalar>(set: &CellSet<T>) -> String {
    let g = set.grid();
    let mut s = String::with_capacity((g.nx() + 1) * g.ny());
    for r in top_down_rows(g.nx(), g.ny()) {
        s.extend(set.mask()[r].iter().map(|&b| if b { '1' } else { '0' }));
        s.push('\n');
    }
    s
}

/// Rows of `0`/`1` characters; blank lines are ignored.
pub fn parse_text_mask(text: &str) -> Result<MaskImage> {
    let mut rows: Vec<Vec<bool>> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(CheegerError::Parse { line: n + 1, message: format!("unexpected character '{other}'") }),
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(CheegerError::Parse {
                    line: n + 1,
                    message: format!("row has {} cells, expected {}", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CheegerError::Parse { line: 1, message: "empty mask".into() });
    }
    let (nx, ny) = (rows[0].len(), rows.len());
    let mut mask = vec![false; nx * ny];
    for (row, r) in rows.iter().zip(top_down_rows(nx, ny)) {
        mask[r].copy_from_slice(row);
    }
    Ok(MaskImage { nx, ny, mask })
}

/// Whitespace-separated decimal rows, top row first, as a row-major
/// bottom-first vector plus its dimensions.
pub fn parse_field_values(text: &str) -> Result<(usize, usize, Vec<f64>)> {
    let blocks = parse_blocks(text)?;
    match blocks.as_slice() {
        [one] => Ok(one.clone()),
        _ => Err(CheegerError::Parse { line: 1, message: format!("expected one field block, found {}", blocks.len()) }),
    }
}

/// Field blocks separated by blank lines.
fn parse_blocks(text: &str) -> Result<Vec<(usize, usize, Vec<f64>)>> {
    let mut blocks = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let flush = |rows: &mut Vec<Vec<f64>>, blocks: &mut Vec<(usize, usize, Vec<f64>)>| {
        if rows.is_empty() {
            return;
        }
        let (nx, ny) = (rows[0].len(), rows.len());
        let mut v = vec![0.0; nx * ny];
        for (row, r) in rows.iter().zip(top_down_rows(nx, ny)) {
            v[r].copy_from_slice(row);
        }
        blocks.push((nx, ny, v));
        rows.clear();
    };
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            flush(&mut rows, &mut blocks);
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| CheegerError::Parse { line: n + 1, message: format!("bad number '{t}'") }))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(CheegerError::Parse {
                    line: n + 1,
                    message: format!("row has {} values, expected {}", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
    }
    flush(&mut rows, &mut blocks);
    if blocks.is_empty() {
        return Err(CheegerError::Parse { line: 1, message: "no values".into() });
    }
    Ok(blocks)
}

fn check_dims<T: Scalar>(grid: &Grid<T>, nx: usize, ny: usize) -> Result<()> {
    if grid.nx() != nx || grid.ny() != ny {
        return Err(CheegerError::InvalidGrid(format!(
            "field is {nx}x{ny} but the grid is {}x{}",
            grid.nx(),
            grid.ny()
        )));
    }
    Ok(())
}

pub fn parse_scalar_field<T: Scalar>(text: &str, grid: Grid<T>) -> Result<ScalarField<T>> {
    let (nx, ny, v) = parse_field_values(text)?;
    check_dims(&grid, nx, ny)?;
    ScalarField::new(grid, v.into_iter().map(T::lit).collect())
}

pub fn format_field<T: Scalar>(grid: &Grid<T>, values: &[T]) -> String {
    let mut s = String::new();
    for r in top_down_rows(grid.nx(), grid.ny()) {
        let row: Vec<String> = values[r].iter().map(|v| v.to_string()).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

/// One field block per stencil direction, in stencil order, separated by
/// blank lines.
pub fn parse_anisotropy<T: Scalar>(
    text: &str,
    grid: Grid<T>,
    stencil: Stencil,
    comparability: Option<T>,
) -> Result<Anisotropy<T>> {
    let blocks = parse_blocks(text)?;
    let d = stencil.len();
    if blocks.len() != d {
        return Err(CheegerError::Parse {
            line: 1,
            message: format!("expected {d} direction blocks for the {} stencil, found {}", stencil.name(), blocks.len()),
        });
    }
    for (nx, ny, _) in &blocks {
        check_dims(&grid, *nx, *ny)?;
    }
    let mut values = vec![T::zero(); grid.len() * d];
    for (k, (_, _, v)) in blocks.iter().enumerate() {
        for (c, &x) in v.iter().enumerate() {
            values[c * d + k] = T::lit(x);
        }
    }
    Anisotropy::new(grid, stencil, values, comparability)
}

pub fn format_anisotropy<T: Scalar>(g: &Anisotropy<T>) -> String {
    let d = g.stencil().len();
    let grid = g.grid();
    (0..d)
        .map(|k| {
            let v: Vec<T> = (0..grid.len()).map(|c| g.value(c, k)).collect();
            format_field(grid, &v)
        })
        .collect::<Vec<_>>()
        .join("\n")
}
