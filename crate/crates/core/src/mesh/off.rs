//! ASCII OFF reader and writer. Vertex coordinates are parsed for count
//! validation and otherwise ignored; only the combinatorics matter.

use std::io::Write;
use std::path::Path;

use super::Triangulation;
use crate::error::{Error, Result};

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Triangulation> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_off(&text)
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

pub fn parse_off(text: &str) -> Result<Triangulation> {
    // (1-based line number, tokens) with comments and blank lines removed
    let mut lines = text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then(|| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
    });

    let (line, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    if header[0] != "OFF" {
        return Err(parse_err(
            line,
            format!("expected 'OFF' header, found '{}'", header[0]),
        ));
    }
    let counts = if header.len() > 1 {
        (line, header[1..].to_vec())
    } else {
        lines
            .next()
            .ok_or_else(|| parse_err(line, "missing element counts"))?
    };
    let (cline, counts) = counts;
    if counts.len() < 2 {
        return Err(parse_err(cline, "expected '<vertices> <faces> [edges]'"));
    }
    let parse_count = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| parse_err(cline, format!("invalid count '{s}'")))
    };
    let nv = parse_count(counts[0])?;
    let nf = parse_count(counts[1])?;

    for _ in 0..nv {
        let (l, toks) = lines
            .next()
            .ok_or_else(|| parse_err(cline, "unexpected end of file in vertex list"))?;
        if toks.len() < 3 {
            return Err(parse_err(l, "vertex needs 3 coordinates"));
        }
        for t in &toks[..3] {
            t.parse::<f64>()
                .map_err(|_| parse_err(l, format!("invalid coordinate '{t}'")))?;
        }
    }

    let mut faces = Vec::with_capacity(nf);
    for fi in 0..nf {
        let (l, toks) = lines
            .next()
            .ok_or_else(|| parse_err(cline, "unexpected end of file in face list"))?;
        let arity: usize = toks[0]
            .parse()
            .map_err(|_| parse_err(l, format!("invalid face arity '{}'", toks[0])))?;
        if arity != 3 {
            return Err(Error::NonTriangleFace { face: fi, arity });
        }
        if toks.len() < 4 {
            return Err(parse_err(l, "face needs 3 vertex indices"));
        }
        let mut f = [0usize; 3];
        for (slot, t) in f.iter_mut().zip(&toks[1..4]) {
            *slot = t
                .parse()
                .map_err(|_| parse_err(l, format!("invalid vertex index '{t}'")))?;
        }
        faces.push(f);
    }
    if let Some((l, _)) = lines.next() {
        return Err(parse_err(l, "trailing data after face list"));
    }
    Triangulation::from_faces(nv, faces)
}

/// Writes `t` as OFF with all vertex coordinates set to zero.
pub fn write_off(t: &Triangulation, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    out.push_str(&format!(
        "OFF\n{} {} {}\n",
        t.num_vertices(),
        t.num_faces(),
        t.num_edges()
    ));
    for _ in 0..t.num_vertices() {
        out.push_str("0 0 0\n");
    }
    for f in t.faces() {
        out.push_str(&format!("3 {} {} {}\n", f[0], f[1], f[2]));
    }
    std::fs::File::create(path)
        .and_then(|mut file| file.write_all(out.as_bytes()))
        .map_err(|e| Error::io(path, e))
}
