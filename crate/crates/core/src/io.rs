//! Text formats: CSV tables with 17-significant-digit floats and a plain-text
//! container for bilinear systems.
//!
//! System container layout (one item per line, `#` starts a comment):
//!
//! ```text
//! bilinear-system 1
//! dim <n>
//! inputs <m>
//! outputs <p | none>
//! initial <k>
//! generator <i> sparse|dense <nnz>
//! <row> <col> <value>          (nnz lines, 0-based indices)
//! s0                           (n lines of k values)
//! v                            (1 line of k values)
//! c                            (p lines of n values, absent when outputs = none)
//! end
//! ```

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};

use crate::balancing::HankelRow;
use crate::bilinear::{BilinearSystem, Generator};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::learning::ErrorReport;
use crate::scalar::{lit, to_f64, Scalar};
use crate::signature::UnitPattern;
use crate::trajectory::Trajectory;

/// Lossless decimal rendering of a double (17 significant digits).
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt<T: Scalar>(x: T) -> String {
    format_float(to_f64(x))
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Parse { line, message: format!("{other:?}") },
        }
    }
}

fn parse_float<T: Scalar>(s: &str, line: usize) -> Result<T> {
    s.trim()
        .parse::<f64>()
        .map(lit)
        .map_err(|e| Error::Parse { line, message: format!("invalid number {s:?}: {e}") })
}

fn parse_usize(s: &str, line: usize) -> Result<usize> {
    s.trim().parse::<usize>().map_err(|e| Error::Parse { line, message: format!("invalid integer {s:?}: {e}") })
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).flexible(true).from_writer(w)
}

/// Trajectory as CSV: header `t,<names>`, one row per grid point.
pub fn write_trajectory_csv<T: Scalar, W: Write>(w: W, traj: &Trajectory<T>, names: &[String]) -> Result<()> {
    if names.len() != traj.dim() {
        return Err(Error::shape("column names", traj.dim(), names.len()));
    }
    let mut out = writer(w);
    let mut header = vec!["t".to_string()];
    header.extend(names.iter().cloned());
    out.write_record(&header)?;
    for (j, t) in traj.grid().times().enumerate() {
        let mut row = vec![fmt(t)];
        row.extend(traj.values().row(j).iter().map(|&v| fmt(v)));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Default column names `<prefix>0, <prefix>1, ...`.
pub fn column_names(prefix: &str, count: usize) -> Vec<String> {
    (0..count).map(|i| format!("{prefix}{i}")).collect()
}

/// Reads a trajectory written by [`write_trajectory_csv`]; the time column must be uniform.
pub fn read_trajectory_csv<T: Scalar, R: std::io::Read>(r: R) -> Result<(Trajectory<T>, Vec<String>)> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let names: Vec<String> = reader.headers()?.iter().skip(1).map(str::to_string).collect();
    let mut times = Vec::new();
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != names.len() + 1 {
            return Err(Error::Parse { line, message: format!("expected {} fields, got {}", names.len() + 1, rec.len()) });
        }
        times.push(parse_float::<T>(&rec[0], line)?);
        for field in rec.iter().skip(1) {
            rows.push(parse_float::<T>(field, line)?);
        }
    }
    let grid = TimeGrid::from_times(&times)?;
    let values = DMatrix::from_row_slice(times.len(), names.len(), &rows);
    Ok((Trajectory::new(grid, values)?, names))
}

/// Dense matrix, one CSV row per matrix row, no header.
pub fn write_matrix_csv<T: Scalar, W: Write>(w: W, m: &DMatrix<T>) -> Result<()> {
    let mut out = writer(w);
    for row in m.row_iter() {
        out.write_record(row.iter().map(|&v| fmt(v)))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_matrix_csv<T: Scalar, R: std::io::Read>(r: R) -> Result<DMatrix<T>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        if *cols.get_or_insert(rec.len()) != rec.len() {
            return Err(Error::Parse { line: i + 1, message: "ragged matrix row".into() });
        }
        for f in rec.iter() {
            data.push(parse_float::<T>(f, i + 1)?);
        }
        rows += 1;
    }
    Ok(DMatrix::from_row_slice(rows, cols.unwrap_or(0), &data))
}

/// Output matrix file: a header row `n,p,N,m` followed by the `p` rows of `C`.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputMatrixFile<T: Scalar> {
    pub order: usize,
    pub inputs: usize,
    pub c: DMatrix<T>,
}

pub fn write_output_matrix<T: Scalar, W: Write>(w: W, file: &OutputMatrixFile<T>) -> Result<()> {
    let mut out = writer(w);
    out.write_record([
        file.c.ncols().to_string(),
        file.c.nrows().to_string(),
        file.order.to_string(),
        file.inputs.to_string(),
    ])?;
    for row in file.c.row_iter() {
        out.write_record(row.iter().map(|&v| fmt(v)))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_output_matrix<T: Scalar, R: std::io::Read>(r: R) -> Result<OutputMatrixFile<T>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(r);
    let mut records = reader.records();
    let header = records.next().ok_or(Error::Parse { line: 1, message: "missing header row".into() })??;
    if header.len() != 4 {
        return Err(Error::Parse { line: 1, message: "header must be n,p,N,m".into() });
    }
    let n = parse_usize(&header[0], 1)?;
    let p = parse_usize(&header[1], 1)?;
    let order = parse_usize(&header[2], 1)?;
    let inputs = parse_usize(&header[3], 1)?;
    let mut data = Vec::with_capacity(n * p);
    let mut rows = 0;
    for (i, rec) in records.enumerate() {
        let rec = rec?;
        if rec.len() != n {
            return Err(Error::Parse { line: i + 2, message: format!("expected {n} values, got {}", rec.len()) });
        }
        for f in rec.iter() {
            data.push(parse_float::<T>(f, i + 2)?);
        }
        rows += 1;
    }
    if rows != p {
        return Err(Error::Parse { line: rows + 1, message: format!("expected {p} rows of C, got {rows}") });
    }
    Ok(OutputMatrixFile { order, inputs, c: DMatrix::from_row_slice(p, n, &data) })
}

/// Spectrum as `index,value` with 1-based indices.
pub fn write_spectrum_csv<T: Scalar, W: Write>(w: W, values: &[T]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["index", "value"])?;
    for (i, &v) in values.iter().enumerate() {
        out.write_record([(i + 1).to_string(), fmt(v)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_hankel_csv<T: Scalar, W: Write>(w: W, rows: &[HankelRow<T>]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["index", "sigma", "sigma_rel"])?;
    for row in rows {
        out.write_record([row.index.to_string(), fmt(row.sigma), fmt(row.relative)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_hankel_csv<T: Scalar, R: std::io::Read>(r: R) -> Result<Vec<HankelRow<T>>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != 3 {
            return Err(Error::Parse { line, message: "expected index,sigma,sigma_rel".into() });
        }
        out.push(HankelRow {
            index: parse_usize(&rec[0], line)?,
            sigma: parse_float(&rec[1], line)?,
            relative: parse_float(&rec[2], line)?,
        });
    }
    Ok(out)
}

pub fn write_errors_csv<T: Scalar, W: Write>(w: W, reports: &[ErrorReport<T>]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["r", "E_sig", "E_MOR", "E_red_sig"])?;
    for rep in reports {
        out.write_record([rep.r.to_string(), fmt(rep.e_sig), fmt(rep.e_mor), fmt(rep.e_red_sig)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_errors_csv<T: Scalar, R: std::io::Read>(r: R) -> Result<Vec<ErrorReport<T>>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != 4 {
            return Err(Error::Parse { line, message: "expected r,E_sig,E_MOR,E_red_sig".into() });
        }
        out.push(ErrorReport {
            r: parse_usize(&rec[0], line)?,
            e_sig: parse_float(&rec[1], line)?,
            e_mor: parse_float(&rec[2], line)?,
            e_red_sig: parse_float(&rec[3], line)?,
        });
    }
    Ok(out)
}

/// Writes a bilinear system in the text container described in the module docs.
pub fn write_system<T: Scalar, W: Write>(mut w: W, sys: &BilinearSystem<T>) -> Result<()> {
    let n = sys.dim();
    let s0 = sys.initial_subspace();
    writeln!(w, "bilinear-system 1")?;
    writeln!(w, "dim {n}")?;
    writeln!(w, "inputs {}", sys.inputs())?;
    match sys.outputs() {
        Some(p) => writeln!(w, "outputs {p}")?,
        None => writeln!(w, "outputs none")?,
    }
    writeln!(w, "initial {}", s0.ncols())?;
    for (i, g) in sys.generators().iter().enumerate() {
        match g {
            Generator::Sparse(p) => {
                writeln!(w, "generator {i} sparse {}", p.nnz())?;
                for &(r, c) in p.entries() {
                    writeln!(w, "{r} {c} {}", format_float(1.0))?;
                }
            }
            Generator::Dense(m) => {
                let nnz = m.iter().filter(|&&v| v != T::zero()).count();
                writeln!(w, "generator {i} dense {nnz}")?;
                for c in 0..n {
                    for r in 0..n {
                        let v = m[(r, c)];
                        if v != T::zero() {
                            writeln!(w, "{r} {c} {}", fmt(v))?;
                        }
                    }
                }
            }
        }
    }
    let join = |it: &mut dyn Iterator<Item = T>| it.map(fmt).collect::<Vec<_>>().join(" ");
    writeln!(w, "s0")?;
    for row in s0.row_iter() {
        writeln!(w, "{}", join(&mut row.iter().copied()))?;
    }
    writeln!(w, "v")?;
    writeln!(w, "{}", join(&mut sys.initial_coefficients().iter().copied()))?;
    if let Some(c) = sys.output_matrix() {
        writeln!(w, "c")?;
        for row in c.row_iter() {
            writeln!(w, "{}", join(&mut row.iter().copied()))?;
        }
    }
    writeln!(w, "end")?;
    w.flush()?;
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<String> {
        loop {
            self.line += 1;
            match self.inner.next() {
                Some(l) => {
                    let l = l?;
                    let content = l.split('#').next().unwrap_or("").trim().to_string();
                    if !content.is_empty() {
                        return Ok(content);
                    }
                }
                None => return Err(self.err("unexpected end of file")),
            }
        }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse { line: self.line, message: message.into() }
    }

    fn keyed(&mut self, key: &str) -> Result<String> {
        let l = self.next()?;
        let mut parts = l.splitn(2, ' ');
        if parts.next() != Some(key) {
            return Err(self.err(format!("expected `{key}`, got `{l}`")));
        }
        Ok(parts.next().unwrap_or("").trim().to_string())
    }

    fn floats<T: Scalar>(&mut self, count: usize) -> Result<Vec<T>> {
        let l = self.next()?;
        let vals: Vec<T> = l.split_whitespace().map(|s| parse_float(s, self.line)).collect::<Result<_>>()?;
        if vals.len() != count {
            return Err(self.err(format!("expected {count} values, got {}", vals.len())));
        }
        Ok(vals)
    }
}

/// Reads a system written by [`write_system`].
pub fn read_system<T: Scalar, R: BufRead>(r: R) -> Result<BilinearSystem<T>> {
    let mut lines = Lines { inner: r.lines(), line: 0 };
    let magic = lines.next()?;
    if magic != "bilinear-system 1" {
        return Err(lines.err(format!("unknown container header `{magic}`")));
    }
    let n = parse_usize(&lines.keyed("dim")?, lines.line)?;
    let m = parse_usize(&lines.keyed("inputs")?, lines.line)?;
    let outputs = lines.keyed("outputs")?;
    let p = if outputs == "none" { None } else { Some(parse_usize(&outputs, lines.line)?) };
    let k = parse_usize(&lines.keyed("initial")?, lines.line)?;
    let mut generators = Vec::with_capacity(m + 1);
    for i in 0..=m {
        let head = lines.keyed("generator")?;
        let parts: Vec<&str> = head.split_whitespace().collect();
        if parts.len() != 3 || parse_usize(parts[0], lines.line)? != i {
            return Err(lines.err(format!("malformed generator header `{head}`")));
        }
        let nnz = parse_usize(parts[2], lines.line)?;
        let mut triplets = Vec::with_capacity(nnz);
        for _ in 0..nnz {
            let l = lines.next()?;
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 3 {
                return Err(lines.err("expected `row col value`"));
            }
            let (r, c) = (parse_usize(f[0], lines.line)?, parse_usize(f[1], lines.line)?);
            if r >= n || c >= n {
                return Err(lines.err(format!("entry ({r}, {c}) outside {n}x{n}")));
            }
            triplets.push((r, c, parse_float::<T>(f[2], lines.line)?));
        }
        generators.push(match parts[1] {
            "sparse" => {
                if triplets.iter().any(|t| t.2 != T::one()) {
                    return Err(lines.err("sparse generators must have unit entries"));
                }
                Generator::Sparse(UnitPattern::new(n, triplets.iter().map(|t| (t.0, t.1)).collect())?)
            }
            "dense" => {
                let mut mat = DMatrix::zeros(n, n);
                for (r, c, v) in triplets {
                    mat[(r, c)] = v;
                }
                Generator::Dense(mat)
            }
            other => return Err(lines.err(format!("unknown generator storage `{other}`"))),
        });
    }
    lines.keyed("s0")?;
    let mut s0 = DMatrix::zeros(n, k);
    for r in 0..n {
        let vals = lines.floats::<T>(k)?;
        for (c, v) in vals.into_iter().enumerate() {
            s0[(r, c)] = v;
        }
    }
    lines.keyed("v")?;
    let v = DVector::from_vec(lines.floats::<T>(k)?);
    let c = match p {
        Some(p) => {
            lines.keyed("c")?;
            let mut c = DMatrix::zeros(p, n);
            for r in 0..p {
                let vals = lines.floats::<T>(n)?;
                for (j, x) in vals.into_iter().enumerate() {
                    c[(r, j)] = x;
                }
            }
            Some(c)
        }
        None => None,
    };
    lines.keyed("end")?;
    BilinearSystem::new(generators, s0, v, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signature::SignatureSystem;

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn system_round_trip() {
        let sys = SignatureSystem::<f64>::for_inputs(2, 2).unwrap();
        let c = DMatrix::from_fn(2, sys.dim(), |i, j| (i as f64 + 1.0) / (j as f64 + 3.0));
        let full = sys.to_bilinear().with_output_matrix(c).unwrap();
        let mut buf = Vec::new();
        write_system(&mut buf, &full).unwrap();
        let back: BilinearSystem<f64> = read_system(buf.as_slice()).unwrap();
        assert_eq!(back.output_matrix(), full.output_matrix());
        for (a, b) in back.generators().iter().zip(full.generators()) {
            assert!(matches!(a, Generator::Sparse(_)));
            assert_eq!(a.to_dense(), b.to_dense());
        }
        let dense = full.project(&DMatrix::identity(full.dim(), full.dim()), &DMatrix::identity(full.dim(), full.dim()));
        let mut buf2 = Vec::new();
        write_system(&mut buf2, &dense).unwrap();
        let back2: BilinearSystem<f64> = read_system(buf2.as_slice()).unwrap();
        let mut buf3 = Vec::new();
        write_system(&mut buf3, &back2).unwrap();
        assert_eq!(buf2, buf3);
        assert!(read_system::<f64, _>(&b"bilinear-system 2\n"[..]).is_err());
    }

    #[test]
    fn output_matrix_round_trip() {
        let file = OutputMatrixFile { order: 3, inputs: 2, c: DMatrix::from_fn(1, 40, |_, j| (j as f64).sqrt()) };
        let mut buf = Vec::new();
        write_output_matrix(&mut buf, &file).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("40,1,3,2\n"));
        assert_eq!(read_output_matrix::<f64, _>(buf.as_slice()).unwrap(), file);
    }
}
