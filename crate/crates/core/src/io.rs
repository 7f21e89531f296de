//! Text formats: the colour-field file and float formatting for output files.
//!
//! A field file looks like
//!
//! ```text
//! #field triangular 3 4 2
//! #theta 1.0000000000000001e-1 5.0000000000000003e-2 2.0000000000000000e-2
//! #seed 7
//! #method 1
//! 0 1 0 0
//! 3 0 0 2
//! 0 0 1 0
//! ```
//!
//! The `#field` line (kind, rows, cols, colours) is mandatory and comes first.
//! `#theta`, `#seed` and `#method` are optional generator metadata. Lines
//! starting with `# ` are comments. The body has one line per lattice row, each
//! holding `cols` colour bitmasks.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::{Lattice, LatticeKind};
use crate::percolation::{colour_limit, ColourField, ParameterVector, SamplingMethod, MAX_COLOURS};

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldFile {
    pub field: ColourField,
    pub theta: Option<ParameterVector>,
    pub seed: Option<u64>,
    pub method: Option<SamplingMethod>,
}

impl FieldFile {
    pub fn new(field: ColourField) -> Self {
        FieldFile {
            field,
            theta: None,
            seed: None,
            method: None,
        }
    }

    pub fn render(&self) -> String {
        let lat = &self.field.lattice;
        let mut out = format!(
            "#field {} {} {} {}\n",
            lat.kind(),
            lat.rows(),
            lat.cols(),
            self.field.n_colours
        );
        if let Some(t) = &self.theta {
            let vals: Vec<String> = t.to_flat().into_iter().map(fmt_float).collect();
            writeln!(out, "#theta {}", vals.join(" ")).unwrap();
        }
        if let Some(s) = self.seed {
            writeln!(out, "#seed {s}").unwrap();
        }
        if let Some(m) = self.method {
            writeln!(out, "#method {}", m.number()).unwrap();
        }
        for row in self.field.masks.chunks(lat.cols()) {
            let cells: Vec<String> = row.iter().map(u32::to_string).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<FieldFile> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (kind, rows, cols, n_colours) = loop {
            let Some((ln, line)) = lines.next() else {
                return Err(parse_err(1, 1, "missing #field header"));
            };
            if is_blank_or_comment(line) {
                continue;
            }
            let toks = tokens(line);
            if toks.first().map(|t| t.1) != Some("#field") {
                return Err(parse_err(ln, 1, "expected #field header"));
            }
            if toks.len() != 5 {
                return Err(parse_err(ln, 1, "#field needs kind, rows, cols and colour count"));
            }
            let kind: LatticeKind = toks[1].1.parse().map_err(|_| {
                parse_err(ln, toks[1].0, format!("unknown lattice kind {:?}", toks[1].1))
            })?;
            let rows = parse_num::<usize>(ln, toks[2])?;
            let cols = parse_num::<usize>(ln, toks[3])?;
            let nc = parse_num::<usize>(ln, toks[4])?;
            if nc == 0 || nc > MAX_COLOURS {
                return Err(parse_err(ln, toks[4].0, format!("colour count must be in 1..={MAX_COLOURS}")));
            }
            break (kind, rows, cols, nc);
        };
        let lattice = Lattice::new(kind, rows, cols).map_err(|e| parse_err(1, 1, e.to_string()))?;
        let limit = colour_limit(n_colours);

        let mut file = FieldFile::new(ColourField {
            lattice: Arc::new(lattice),
            n_colours,
            masks: Vec::with_capacity(rows * cols),
        });
        let mut body_rows = 0usize;
        let mut last_line = 1;
        for (ln, line) in lines {
            last_line = ln;
            if is_blank_or_comment(line) {
                continue;
            }
            let toks = tokens(line);
            if toks[0].1.starts_with('#') {
                if body_rows > 0 {
                    return Err(parse_err(ln, toks[0].0, "header line after body"));
                }
                match toks[0].1 {
                    "#theta" => {
                        let vals = toks[1..]
                            .iter()
                            .map(|&t| parse_num::<f64>(ln, t))
                            .collect::<Result<Vec<f64>>>()?;
                        if vals.len() != n_colours + 1 {
                            return Err(parse_err(ln, 1, format!("#theta needs {} values", n_colours + 1)));
                        }
                        let theta = ParameterVector::from_flat(&vals).map_err(|e| parse_err(ln, 1, e.to_string()))?;
                        file.theta = Some(theta);
                    }
                    "#seed" if toks.len() == 2 => file.seed = Some(parse_num::<u64>(ln, toks[1])?),
                    "#method" if toks.len() == 2 => {
                        let n = parse_num::<u8>(ln, toks[1])?;
                        let m = SamplingMethod::from_number(n).map_err(|e| parse_err(ln, toks[1].0, e.to_string()))?;
                        file.method = Some(m);
                    }
                    other => return Err(parse_err(ln, toks[0].0, format!("unrecognised header {other:?}"))),
                }
                continue;
            }
            if body_rows == rows {
                return Err(parse_err(ln, 1, format!("more than {rows} body rows")));
            }
            if toks.len() != cols {
                return Err(parse_err(ln, 1, format!("expected {cols} values, found {}", toks.len())));
            }
            for t in toks {
                let m = parse_num::<u32>(ln, t)?;
                if u64::from(m) >= limit {
                    return Err(parse_err(ln, t.0, format!("mask {m} needs more than {n_colours} colours")));
                }
                file.field.masks.push(m);
            }
            body_rows += 1;
        }
        if body_rows != rows {
            return Err(parse_err(last_line + 1, 1, format!("expected {rows} body rows, found {body_rows}")));
        }
        Ok(file)
    }
}

fn is_blank_or_comment(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t == "#" || t.starts_with("# ")
}

/// Whitespace-separated tokens with their 1-based column.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        match (ch.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push((line[..s].chars().count() + 1, &line[s..i]));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((line[..s].chars().count() + 1, &line[s..]));
    }
    out
}

fn parse_num<T: std::str::FromStr>(line: usize, (col, tok): (usize, &str)) -> Result<T> {
    tok.parse()
        .map_err(|_| parse_err(line, col, format!("cannot parse {tok:?}")))
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}
