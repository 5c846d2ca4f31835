//! File formats.
//!
//! Numbers are written with [`fmt_num`] (17 significant digits, `inf` for
//! infinity) so that equal results give equal bytes.
//!
//! * Edge field CSV: header `x1,..,xd,axis,weight`; one row per edge, the
//!   edge from `x` to `x + e_axis` (axis 1-based), in slot order. A first
//!   comment line `# box lo .. hi` records the box.
//! * Edge field binary: magic `FPPE`, `u32` version 1, `u32` d, `d` x `i64`
//!   lower corner, `d` x `i64` upper corner, then one `f64` per edge in the
//!   same order as the CSV. Little-endian throughout.
//! * Path CSV: header `step,x1,..,xd`.
//! * Experiment results CSV: header `experiment,n,replicas,estimate,stderr`.

use std::io::{BufRead, Read, Write};

use fpp_core::experiment::{ExperimentResult, ReplicaOutcome};
use fpp_core::{EdgeField, LatticeBox, Vertex};

use crate::error::{LabError, LabResult};
use crate::text::{fmt_num, fmt_vertex, parse_num, parse_vertex};

const MAGIC: &[u8; 4] = b"FPPE";
const VERSION: u32 = 1;

fn coord_header(d: usize) -> String {
    (1..=d).map(|i| format!("x{i}")).collect::<Vec<_>>().join(",")
}

fn bad(msg: impl Into<String>) -> LabError {
    LabError::Runtime(msg.into())
}

pub fn write_field_csv(field: &EdgeField, mut out: impl Write) -> LabResult<()> {
    let bx = field.lattice_box();
    writeln!(out, "# box {} .. {}", fmt_vertex(bx.lo()), fmt_vertex(bx.hi()))?;
    writeln!(out, "{},axis,weight", coord_header(bx.dim()))?;
    for (e, w) in field.iter() {
        writeln!(out, "{},{},{}", fmt_vertex(&e.base), e.axis, fmt_num(w))?;
    }
    Ok(())
}

pub fn read_field_csv(input: impl BufRead) -> LabResult<EdgeField> {
    let mut lines = input.lines();
    let first = lines.next().ok_or_else(|| bad("empty field file"))??;
    let (lo, hi) = first
        .strip_prefix("# box ")
        .and_then(|r| r.split_once(".."))
        .ok_or_else(|| bad("field csv must start with `# box lo .. hi`"))?;
    let bx = LatticeBox::from_corners(parse_vertex(lo)?, parse_vertex(hi)?)?;
    let d = bx.dim();
    let header = lines.next().ok_or_else(|| bad("missing header"))??;
    if header != format!("{},axis,weight", coord_header(d)) {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let mut weights = vec![f64::NAN; bx.edge_slot_count()];
    let mut seen = 0usize;
    for line in lines {
        let line = line?;
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != d + 2 {
            return Err(bad(format!("bad row {line:?}")));
        }
        let base = parse_vertex(&cols[..d].join(","))?;
        let axis: usize = cols[d].parse().map_err(|_| bad(format!("bad axis in {line:?}")))?;
        if axis == 0 || axis > d {
            return Err(bad(format!("axis out of range in {line:?}")));
        }
        let e = fpp_core::EdgeId { base, axis };
        let slot = bx.edge_slot(&e).ok_or_else(|| bad(format!("edge outside box: {line:?}")))?;
        weights[slot] = parse_num(cols[d + 1])?;
        seen += 1;
    }
    if seen != bx.edge_count() {
        return Err(bad(format!("expected {} edges, found {seen}", bx.edge_count())));
    }
    Ok(EdgeField::from_slot_weights(bx, weights, None)?)
}

pub fn write_field_binary(field: &EdgeField, mut out: impl Write) -> LabResult<()> {
    let bx = field.lattice_box();
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(bx.dim() as u32).to_le_bytes())?;
    for c in bx.lo().coords().iter().chain(bx.hi().coords()) {
        out.write_all(&c.to_le_bytes())?;
    }
    for (_, w) in field.iter() {
        out.write_all(&w.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field_binary(mut input: impl Read) -> LabResult<EdgeField> {
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    if &word != MAGIC {
        return Err(bad("not an FPPE field file"));
    }
    input.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != VERSION {
        return Err(bad(format!("unsupported FPPE version {version}")));
    }
    input.read_exact(&mut word)?;
    let d = u32::from_le_bytes(word) as usize;
    if d == 0 || d > fpp_core::MAX_DIM {
        return Err(bad(format!("bad dimension {d}")));
    }
    let mut long = [0u8; 8];
    let mut corner = |input: &mut dyn Read| -> LabResult<Vertex> {
        let mut c = Vec::with_capacity(d);
        for _ in 0..d {
            input.read_exact(&mut long)?;
            c.push(i64::from_le_bytes(long));
        }
        Ok(Vertex::new(&c))
    };
    let lo = corner(&mut input)?;
    let hi = corner(&mut input)?;
    let bx = LatticeBox::from_corners(lo, hi)?;
    let mut weights = vec![f64::NAN; bx.edge_slot_count()];
    for e in bx.edges() {
        input.read_exact(&mut long)?;
        weights[bx.edge_slot(&e).expect("edge of box")] = f64::from_le_bytes(long);
    }
    if input.read(&mut long)? != 0 {
        return Err(bad("trailing bytes after field"));
    }
    Ok(EdgeField::from_slot_weights(bx, weights, None)?)
}

pub fn write_path_csv(vertices: &[Vertex], mut out: impl Write) -> LabResult<()> {
    let d = vertices.first().map_or(0, Vertex::dim);
    writeln!(out, "step,{}", coord_header(d))?;
    for (i, v) in vertices.iter().enumerate() {
        writeln!(out, "{i},{}", fmt_vertex(v))?;
    }
    Ok(())
}

pub fn read_path_csv(input: impl BufRead) -> LabResult<Vec<Vertex>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if !line.starts_with("step,") {
                return Err(bad(format!("unexpected header {line:?}")));
            }
            continue;
        }
        let (step, rest) = line.split_once(',').ok_or_else(|| bad(format!("bad row {line:?}")))?;
        if step != (i - 1).to_string() {
            return Err(bad(format!("steps out of order at {line:?}")));
        }
        out.push(parse_vertex(rest)?);
    }
    Ok(out)
}

pub const RESULTS_HEADER: &str = "experiment,n,replicas,estimate,stderr";

pub fn write_results_csv(res: &ExperimentResult, mut out: impl Write) -> LabResult<()> {
    writeln!(out, "{RESULTS_HEADER}")?;
    for r in &res.rows {
        writeln!(out, "{},{},{},{},{}", res.kind.name(), r.n, r.replicas, fmt_num(r.estimate), fmt_num(r.stderr))?;
    }
    Ok(())
}

/// Per-row diagnostics: `experiment,n,name,value`.
pub fn write_extras_csv(res: &ExperimentResult, mut out: impl Write) -> LabResult<()> {
    writeln!(out, "experiment,n,name,value")?;
    for r in &res.rows {
        for (name, v) in &r.extras {
            writeln!(out, "{},{},{name},{}", res.kind.name(), r.n, fmt_num(*v))?;
        }
    }
    Ok(())
}

/// Whole-run figures, rate fit included: `experiment,name,value`.
pub fn write_summary_csv(res: &ExperimentResult, mut out: impl Write) -> LabResult<()> {
    let name = res.kind.name();
    writeln!(out, "experiment,name,value")?;
    for (k, v) in &res.summary {
        writeln!(out, "{name},{k},{}", fmt_num(*v))?;
    }
    if let Some(fit) = &res.fit {
        writeln!(out, "{name},fit_rate,{}", fmt_num(fit.rate))?;
        writeln!(out, "{name},fit_intercept,{}", fmt_num(fit.intercept))?;
        writeln!(out, "{name},fit_rows_used,{}", fit.rows_used)?;
        for (i, r) in fit.residuals.iter().enumerate() {
            writeln!(out, "{name},fit_residual_{i},{}", fmt_num(*r))?;
        }
    }
    Ok(())
}

/// One line per replica: `n,replica,seed,value,secondary,tie`.
pub fn write_replicas_csv(outcomes: &[ReplicaOutcome], mut out: impl Write) -> LabResult<()> {
    writeln!(out, "n,replica,seed,value,secondary,tie")?;
    for o in outcomes {
        let secondary = o.secondary.map(fmt_num).unwrap_or_default();
        writeln!(out, "{},{},{},{},{secondary},{}", o.n, o.replica, o.seed, fmt_num(o.value), o.tie as u8)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use fpp_core::{sample_edge_field, DistributionSpec};

    fn field() -> EdgeField {
        let bx = LatticeBox::new(&[-2, 0], &[1, 2]).unwrap();
        sample_edge_field(&bx, &DistributionSpec::exponential(1.0), 5).unwrap()
    }

    fn same(a: &EdgeField, b: &EdgeField) {
        assert_eq!(a.lattice_box(), b.lattice_box());
        for (e, w) in a.iter() {
            assert_eq!(w.to_bits(), b.weight(&e).unwrap().to_bits());
        }
    }

    #[test]
    fn field_csv_round_trip() {
        let f = field();
        let mut buf = Vec::new();
        write_field_csv(&f, &mut buf).unwrap();
        same(&f, &read_field_csv(&buf[..]).unwrap());
    }

    #[test]
    fn field_binary_round_trip_and_layout() {
        let f = field();
        let mut buf = Vec::new();
        write_field_binary(&f, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"FPPE");
        assert_eq!(buf.len(), 4 + 4 + 4 + 2 * 2 * 8 + 8 * f.lattice_box().edge_count());
        same(&f, &read_field_binary(&buf[..]).unwrap());
        buf.push(0);
        assert!(read_field_binary(&buf[..]).is_err());
    }

    #[test]
    fn path_round_trip() {
        let p = vec![Vertex::new(&[0, 0]), Vertex::new(&[1, 0]), Vertex::new(&[1, -1])];
        let mut buf = Vec::new();
        write_path_csv(&p, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "step,x1,x2\n0,0,0\n1,1,0\n2,1,-1\n");
        assert_eq!(read_path_csv(&buf[..]).unwrap(), p);
    }
}
