//! Text forms of laws, vertices, interval sets and numbers.
//!
//! Laws are written as calls with named arguments:
//!
//! ```text
//! exponential(rate=1)
//! uniform(a=0,b=1)
//! pareto(shape=2.5,scale=1)
//! point(value=1)
//! atoms(atoms=[0:0.7,5:0.3])
//! shifted(offset=2,inner=exponential(rate=1))
//! mixture(atoms=[0:0.2],weight=0.8,inner=uniform(a=1,b=2))
//! ```

use std::fmt::Write as _;

use fpp_core::path::Interval;
use fpp_core::{DistributionSpec, Vertex};

use crate::error::{LabError, LabResult};

/// Fixed 17-significant-digit form; `inf`, `-inf`, `nan` otherwise.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn parse_num(s: &str) -> LabResult<f64> {
    match s.trim() {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        t => t
            .parse::<f64>()
            .map_err(|_| LabError::config(format!("not a number: {t:?}"))),
    }
}

pub fn parse_vertex(s: &str) -> LabResult<Vertex> {
    let coords: Vec<i64> = s
        .split(',')
        .map(|c| {
            c.trim()
                .parse::<i64>()
                .map_err(|_| LabError::config(format!("bad coordinate {c:?} in vertex {s:?}")))
        })
        .collect::<LabResult<_>>()?;
    if coords.is_empty() || coords.len() > fpp_core::MAX_DIM {
        return Err(LabError::config(format!("vertex {s:?} needs 1 to {} coordinates", fpp_core::MAX_DIM)));
    }
    Ok(Vertex::new(&coords))
}

pub fn fmt_vertex(v: &Vertex) -> String {
    v.coords().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
}

/// `[a,b]`, `(a,b)`, `[a,b)`, `(a,b]` joined by `;`.
pub fn parse_intervals(s: &str) -> LabResult<Vec<Interval>> {
    s.split(';')
        .map(|part| {
            let p = part.trim();
            let bad = || LabError::config(format!("bad interval {p:?}"));
            let lo_closed = match p.chars().next() {
                Some('[') => true,
                Some('(') => false,
                _ => return Err(bad()),
            };
            let hi_closed = match p.chars().last() {
                Some(']') => true,
                Some(')') => false,
                _ => return Err(bad()),
            };
            let inner = &p[1..p.len() - 1];
            let (a, b) = inner.split_once(',').ok_or_else(bad)?;
            Ok(Interval { lo: parse_num(a)?, hi: parse_num(b)?, lo_closed, hi_closed })
        })
        .collect()
}

pub fn fmt_intervals(set: &[Interval]) -> String {
    set.iter()
        .map(|i| {
            format!(
                "{}{},{}{}",
                if i.lo_closed { '[' } else { '(' },
                i.lo,
                i.hi,
                if i.hi_closed { ']' } else { ')' }
            )
        })
        .collect::<Vec<_>>()
        .join(";")
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, what: &str) -> LabError {
        LabError::config(format!("law {:?}: {what} at offset {}", self.src, self.pos))
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: char) -> LabResult<()> {
        self.skip_ws();
        if self.src[self.pos..].starts_with(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.err(&format!("expected '{c}'")))
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn ident(&mut self) -> LabResult<&'a str> {
        self.skip_ws();
        let start = self.pos;
        while self.src[self.pos..].starts_with(|c: char| c.is_ascii_alphanumeric() || c == '_') {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected a name"));
        }
        Ok(&self.src[start..self.pos])
    }

    fn number(&mut self) -> LabResult<f64> {
        self.skip_ws();
        let start = self.pos;
        while self.src[self.pos..].starts_with(|c: char| c.is_ascii_alphanumeric() || "+-.".contains(c)) {
            self.pos += 1;
        }
        parse_num(&self.src[start..self.pos]).map_err(|_| self.err("expected a number"))
    }

    fn atoms(&mut self) -> LabResult<Vec<(f64, f64)>> {
        self.eat('[')?;
        let mut out = Vec::new();
        if self.peek() == Some(']') {
            self.eat(']')?;
            return Ok(out);
        }
        loop {
            let v = self.number()?;
            self.eat(':')?;
            let p = self.number()?;
            out.push((v, p));
            match self.peek() {
                Some(',') => self.eat(',')?,
                _ => break,
            }
        }
        self.eat(']')?;
        Ok(out)
    }

    fn spec(&mut self) -> LabResult<DistributionSpec> {
        let name = self.ident()?;
        self.eat('(')?;
        let mut nums: Vec<(&str, f64)> = Vec::new();
        let mut atoms = None;
        let mut inner = None;
        if self.peek() != Some(')') {
            loop {
                let key = self.ident()?;
                self.eat('=')?;
                match key {
                    "inner" => inner = Some(self.spec()?),
                    "atoms" => atoms = Some(self.atoms()?),
                    _ => {
                        let v = self.number()?;
                        nums.push((key, v));
                    }
                }
                match self.peek() {
                    Some(',') => self.eat(',')?,
                    _ => break,
                }
            }
        }
        self.eat(')')?;
        let mut take = |key: &str| -> LabResult<f64> {
            let i = nums
                .iter()
                .position(|(k, _)| *k == key)
                .ok_or_else(|| LabError::config(format!("{name}(...) needs {key}=")))?;
            Ok(nums.remove(i).1)
        };
        let spec = match name {
            "exponential" => DistributionSpec::exponential(take("rate")?),
            "uniform" => DistributionSpec::uniform(take("a")?, take("b")?),
            "pareto" => DistributionSpec::pareto(take("shape")?, take("scale")?),
            "point" => DistributionSpec::point_mass(take("value")?),
            "shifted" => {
                let offset = take("offset")?;
                let inner = inner.take().ok_or_else(|| LabError::config("shifted(...) needs inner="))?;
                DistributionSpec::shifted(offset, inner)
            }
            "atoms" => DistributionSpec::atoms(atoms.take().ok_or_else(|| LabError::config("atoms(...) needs atoms="))?),
            "mixture" => {
                let weight = take("weight")?;
                let inner = inner.take().ok_or_else(|| LabError::config("mixture(...) needs inner="))?;
                DistributionSpec::mixture(atoms.take().unwrap_or_default(), weight, inner)
            }
            other => return Err(LabError::config(format!("unknown law {other:?}"))),
        };
        if let Some((k, _)) = nums.first() {
            return Err(LabError::config(format!("{name}(...) has no argument {k:?}")));
        }
        if atoms.is_some() || inner.is_some() {
            return Err(LabError::config(format!("{name}(...) takes no atoms= or inner=")));
        }
        Ok(spec)
    }
}

/// Parses and validates a law.
pub fn parse_spec(s: &str) -> LabResult<DistributionSpec> {
    let mut p = Parser { src: s, pos: 0 };
    let spec = p.spec()?;
    p.skip_ws();
    if p.pos != s.len() {
        return Err(p.err("trailing input"));
    }
    spec.validate()?;
    Ok(spec)
}

/// Inverse of [`parse_spec`].
pub fn fmt_spec(spec: &DistributionSpec) -> String {
    let mut s = String::new();
    match spec {
        DistributionSpec::Exponential { rate } => write!(s, "exponential(rate={rate})"),
        DistributionSpec::Uniform { a, b } => write!(s, "uniform(a={a},b={b})"),
        DistributionSpec::Pareto { shape, scale } => write!(s, "pareto(shape={shape},scale={scale})"),
        DistributionSpec::Shifted { offset, inner } => write!(s, "shifted(offset={offset},inner={})", fmt_spec(inner)),
        DistributionSpec::AtomMixture { atoms, continuous } => {
            let list = atoms.iter().map(|(v, p)| format!("{v}:{p}")).collect::<Vec<_>>().join(",");
            match continuous {
                None if atoms.len() == 1 && atoms[0].1 == 1.0 => write!(s, "point(value={})", atoms[0].0),
                None => write!(s, "atoms(atoms=[{list}])"),
                Some((w, inner)) => write!(s, "mixture(atoms=[{list}],weight={w},inner={})", fmt_spec(inner)),
            }
        }
    }
    .expect("writing to a string");
    s
}
