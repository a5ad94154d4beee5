//! Line-oriented dump format, one term per line:
//! `k-vector | i | j | l1 | l2 | re | im`, preceded by a `# n b J` header.

use num_complex::Complex64;

use super::index::{Dims, MultiIndex};
use super::tf::TFSeries;
use crate::error::{KamError, Result};

fn join<T: ToString>(v: impl Iterator<Item = T>) -> String {
    v.map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn to_text(s: &TFSeries) -> String {
    let d = s.dims;
    let mut out = format!("# n={} b={} J={}\n", d.n, d.b, d.nw);
    for (idx, c) in s.iter() {
        out.push_str(&format!(
            "{} | {} | {} | {} | {} | {:e} | {:e}\n",
            join(idx.k[..d.n].iter()),
            join(idx.y[..d.n].iter()),
            join(idx.z[..d.nz()].iter()),
            join(idx.w[..d.nw].iter()),
            join(idx.wb[..d.nw].iter()),
            c.re,
            c.im
        ));
    }
    out
}

fn parse_err(line: usize, msg: &str) -> KamError {
    KamError::Structural(format!("line {line}: {msg}"))
}

fn ints<T: std::str::FromStr>(field: &str, len: usize, line: usize) -> Result<Vec<T>> {
    let v: Vec<T> = field
        .split_whitespace()
        .map(|t| t.parse::<T>().map_err(|_| parse_err(line, &format!("bad integer '{t}'"))))
        .collect::<Result<_>>()?;
    if v.len() != len {
        return Err(parse_err(line, &format!("expected {len} entries, found {}", v.len())));
    }
    Ok(v)
}

pub fn from_text(text: &str) -> Result<TFSeries> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hl, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    let mut n = None;
    let mut b = None;
    let mut nw = None;
    for tok in header.trim_start_matches('#').split_whitespace() {
        let (key, val) = tok.split_once('=').ok_or_else(|| parse_err(hl + 1, "bad header"))?;
        let val: usize = val.parse().map_err(|_| parse_err(hl + 1, "bad header value"))?;
        match key {
            "n" => n = Some(val),
            "b" => b = Some(val),
            "J" => nw = Some(val),
            _ => return Err(parse_err(hl + 1, &format!("unknown header key '{key}'"))),
        }
    }
    let dims = Dims::new(
        n.ok_or_else(|| parse_err(hl + 1, "missing n"))?,
        b.ok_or_else(|| parse_err(hl + 1, "missing b"))?,
        nw.ok_or_else(|| parse_err(hl + 1, "missing J"))?,
    )?;
    let mut s = TFSeries::zero(dims);
    for (ln, line) in lines {
        let ln = ln + 1;
        let f: Vec<&str> = line.split('|').map(str::trim).collect();
        if f.len() != 7 {
            return Err(parse_err(ln, "expected 7 fields"));
        }
        let k: Vec<i32> = ints(f[0], dims.n, ln)?;
        let y: Vec<u32> = ints(f[1], dims.n, ln)?;
        let z: Vec<u32> = ints(f[2], dims.nz(), ln)?;
        let w: Vec<u32> = ints(f[3], dims.nw, ln)?;
        let wb: Vec<u32> = ints(f[4], dims.nw, ln)?;
        let re: f64 = f[5].parse().map_err(|_| parse_err(ln, "bad real part"))?;
        let im: f64 = f[6].parse().map_err(|_| parse_err(ln, "bad imaginary part"))?;
        s.add_term(MultiIndex::from_parts(&k, &y, &z, &w, &wb), Complex64::new(re, im));
    }
    Ok(s)
}
