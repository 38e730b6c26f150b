//! Binary container and CSV formats for paths, estimator matrices,
//! spectra, kernels, transforms, and reconstructed curves.
//!
//! The binary container is one ASCII header line
//! `HDLSD1 <p> <n> <q> <kind> <complex 0|1> <seed> <model_hash:016x>`
//! followed by column-major little-endian f64 data, complex entries
//! interleaved as (re, im).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::autocov::HermMatrix;
use crate::error::{Error, Result};
use crate::inversion::SpectralCurve;
use crate::lsd_solver::StieltjesKernelGrid;
use crate::simulate::{PathEntries, PathKind, PathMeta, SimulatedPath};
use crate::spectra::Esd;

const MAGIC: &str = "HDLSD1";

/// Largest entry count a reader will allocate for (matches the
/// simulation budget).
const MAX_READ_ENTRIES: u128 = 1 << 26;

/// Parsed header of a binary container.
#[derive(Clone, Debug, PartialEq)]
pub struct ContainerHeader {
    pub p: usize,
    pub n: usize,
    pub q: usize,
    /// "lag" or "circulant" for paths; "autocov" or "tapered" for
    /// estimator matrices.
    pub kind: String,
    pub complex: bool,
    pub seed: u64,
    pub model_hash: u64,
}

impl ContainerHeader {
    fn line(&self) -> String {
        format!(
            "{MAGIC} {} {} {} {} {} {} {:016x}\n",
            self.p,
            self.n,
            self.q,
            self.kind,
            u8::from(self.complex),
            self.seed,
            self.model_hash
        )
    }

    fn parse(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 8 {
            return Err(Error::Container(format!(
                "header has {} fields, expected 8",
                fields.len()
            )));
        }
        if fields[0] != MAGIC {
            return Err(Error::Container(format!("bad magic {:?}", fields[0])));
        }
        let num = |s: &str, what: &str| -> Result<usize> {
            s.parse()
                .map_err(|_| Error::Container(format!("bad {what} field {s:?}")))
        };
        let complex = match fields[5] {
            "0" => false,
            "1" => true,
            other => return Err(Error::Container(format!("bad complex flag {other:?}"))),
        };
        Ok(ContainerHeader {
            p: num(fields[1], "p")?,
            n: num(fields[2], "n")?,
            q: num(fields[3], "q")?,
            kind: fields[4].to_string(),
            complex,
            seed: fields[6]
                .parse()
                .map_err(|_| Error::Container(format!("bad seed field {:?}", fields[6])))?,
            model_hash: u64::from_str_radix(fields[7], 16)
                .map_err(|_| Error::Container(format!("bad hash field {:?}", fields[7])))?,
        })
    }

    fn entry_count(&self) -> Result<usize> {
        let entries = self.p as u128 * self.n as u128;
        if entries == 0 || entries > MAX_READ_ENTRIES {
            return Err(Error::Container(format!(
                "container dimensions {}x{} out of range",
                self.p, self.n
            )));
        }
        Ok(entries as usize)
    }
}

fn write_reals<W: Write>(w: &mut W, values: impl Iterator<Item = f64>) -> Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_reals<R: Read>(r: &mut R, count: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; count * 8];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn write_container<W: Write>(
    w: &mut W,
    header: &ContainerHeader,
    real: Option<&DMatrix<f64>>,
    complex: Option<&DMatrix<Complex64>>,
) -> Result<()> {
    w.write_all(header.line().as_bytes())?;
    match (real, complex) {
        (Some(m), None) => write_reals(w, m.as_slice().iter().copied())?,
        (None, Some(m)) => {
            write_reals(w, m.as_slice().iter().flat_map(|z| [z.re, z.im]))?
        }
        _ => unreachable!("exactly one payload"),
    }
    w.flush()?;
    Ok(())
}

fn read_header<R: BufRead>(r: &mut R) -> Result<ContainerHeader> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    if line.is_empty() {
        return Err(Error::Container("empty container".into()));
    }
    ContainerHeader::parse(line.trim_end())
}

/// Payload of a container: exactly one side is populated, matching the
/// header's `complex` flag.
type Payload = (Option<DMatrix<f64>>, Option<DMatrix<Complex64>>);

fn read_payload<R: BufRead>(r: &mut R, header: &ContainerHeader) -> Result<Payload> {
    let entries = header.entry_count()?;
    if header.complex {
        let raw = read_reals(r, entries * 2)?;
        let data: Vec<Complex64> = raw
            .chunks_exact(2)
            .map(|c| Complex64::new(c[0], c[1]))
            .collect();
        Ok((None, Some(DMatrix::from_column_slice(header.p, header.n, &data))))
    } else {
        let raw = read_reals(r, entries)?;
        Ok((Some(DMatrix::from_column_slice(header.p, header.n, &raw)), None))
    }
}

/// Writes a simulated path to the binary container format.
pub fn write_path<W: Write>(path: &SimulatedPath, w: &mut W) -> Result<()> {
    let header = ContainerHeader {
        p: path.meta.p,
        n: path.meta.n,
        q: path.meta.q,
        kind: path.meta.kind.as_str().to_string(),
        complex: path.entries.is_complex(),
        seed: path.meta.seed,
        model_hash: path.meta.model_hash,
    };
    match &path.entries {
        PathEntries::Real(m) => write_container(w, &header, Some(m), None),
        PathEntries::Complex(m) => write_container(w, &header, None, Some(m)),
    }
}

/// Reads a path container. The rotation seed is not stored in the
/// format, so the restored provenance has `rotation_seed = None`.
pub fn read_path<R: BufRead>(r: &mut R) -> Result<SimulatedPath> {
    let header = read_header(r)?;
    let kind = PathKind::parse(&header.kind)
        .ok_or_else(|| Error::Container(format!("not a path container: kind {:?}", header.kind)))?;
    let (real, complex) = read_payload(r, &header)?;
    let entries = match (real, complex) {
        (Some(m), None) => PathEntries::Real(m),
        (None, Some(m)) => PathEntries::Complex(m),
        _ => unreachable!(),
    };
    Ok(SimulatedPath {
        entries,
        meta: PathMeta {
            p: header.p,
            n: header.n,
            q: header.q,
            seed: header.seed,
            model_hash: header.model_hash,
            kind,
            rotation_seed: None,
        },
    })
}

/// Writes an estimator matrix in the same container format as paths.
/// `kind` tags the estimator ("autocov" or "tapered") and `q` records
/// the lag or taper horizon.
pub fn write_matrix<W: Write>(
    m: &HermMatrix,
    kind: &str,
    q: usize,
    seed: u64,
    model_hash: u64,
    w: &mut W,
) -> Result<()> {
    if PathKind::parse(kind).is_some() {
        return Err(Error::Container(format!(
            "matrix kind {kind:?} collides with a path kind"
        )));
    }
    let header = ContainerHeader {
        p: m.p(),
        n: m.p(),
        q,
        kind: kind.to_string(),
        complex: m.is_complex(),
        seed,
        model_hash,
    };
    match m {
        HermMatrix::Real(m) => write_container(w, &header, Some(m), None),
        HermMatrix::Complex(m) => write_container(w, &header, None, Some(m)),
    }
}

/// Reads an estimator matrix container, returning the matrix and its
/// header fields.
pub fn read_matrix<R: BufRead>(r: &mut R) -> Result<(HermMatrix, ContainerHeader)> {
    let header = read_header(r)?;
    if PathKind::parse(&header.kind).is_some() {
        return Err(Error::Container(format!(
            "container holds a path (kind {:?}), not a matrix",
            header.kind
        )));
    }
    if header.p != header.n {
        return Err(Error::Container(format!(
            "matrix container is {}x{}, expected square",
            header.p, header.n
        )));
    }
    let (real, complex) = read_payload(r, &header)?;
    let matrix = match (real, complex) {
        (Some(m), None) => HermMatrix::Real(m),
        (None, Some(m)) => HermMatrix::Complex(m),
        _ => unreachable!(),
    };
    Ok((matrix, header))
}

/// Writes a path container to a file.
pub fn write_path_file(path: &SimulatedPath, file: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(file)?);
    write_path(path, &mut w)
}

/// Reads a path container from a file.
pub fn read_path_file(file: &Path) -> Result<SimulatedPath> {
    let mut r = BufReader::new(File::open(file)?);
    read_path(&mut r)
}

/// Writes an eigenvalue sample as CSV with a `sigma` header column.
pub fn write_esd_csv<W: Write>(esd: &Esd, w: &mut W) -> Result<()> {
    writeln!(w, "sigma")?;
    for v in esd.values() {
        writeln!(w, "{v}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an eigenvalue CSV produced by `write_esd_csv`.
pub fn read_esd_csv<R: BufRead>(r: &mut R) -> Result<Esd> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::Container("empty spectrum file".into()))?;
    if header.trim() != "sigma" {
        return Err(Error::Container(format!("bad spectrum header {header:?}")));
    }
    let mut values = Vec::new();
    for line in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        values.push(parse_f64(t)?);
    }
    Esd::from_values(values)
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Container(format!("bad numeric field {s:?}")))
}

/// Writes a solved kernel grid as CSV columns `nu,re_K,im_K`.
pub fn write_kernel_csv<W: Write>(grid: &StieltjesKernelGrid, w: &mut W) -> Result<()> {
    writeln!(w, "nu,re_K,im_K")?;
    for (nu, k) in grid.nu.iter().zip(&grid.values) {
        writeln!(w, "{nu},{},{}", k.re, k.im)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the columns of a kernel CSV: frequencies and complex values.
pub fn read_kernel_csv<R: BufRead>(r: &mut R) -> Result<(Vec<f64>, Vec<Complex64>)> {
    let rows = read_csv_rows(r, "nu,re_K,im_K", 3)?;
    let nu = rows.iter().map(|c| c[0]).collect();
    let values = rows.iter().map(|c| Complex64::new(c[1], c[2])).collect();
    Ok((nu, values))
}

/// Writes (z, s(z)) pairs as CSV columns `re_z,im_z,re_s,im_s`.
pub fn write_transform_csv<W: Write>(rows: &[(Complex64, Complex64)], w: &mut W) -> Result<()> {
    writeln!(w, "re_z,im_z,re_s,im_s")?;
    for (z, s) in rows {
        writeln!(w, "{},{},{},{}", z.re, z.im, s.re, s.im)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a transform CSV back into (z, s(z)) pairs.
pub fn read_transform_csv<R: BufRead>(r: &mut R) -> Result<Vec<(Complex64, Complex64)>> {
    let rows = read_csv_rows(r, "re_z,im_z,re_s,im_s", 4)?;
    Ok(rows
        .iter()
        .map(|c| (Complex64::new(c[0], c[1]), Complex64::new(c[2], c[3])))
        .collect())
}

/// Writes a reconstructed curve as CSV columns `x,density,cdf`, with the
/// atom mass in a leading comment line `# atom0=<value>`.
pub fn write_curve_csv<W: Write>(curve: &SpectralCurve, w: &mut W) -> Result<()> {
    writeln!(w, "# atom0={}", curve.atom_at_zero)?;
    writeln!(w, "x,density,cdf")?;
    for j in 0..curve.x_grid.len() {
        writeln!(w, "{},{},{}", curve.x_grid[j], curve.density[j], curve.cdf[j])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a curve CSV. The evaluation heights are not stored in the
/// format, so the restored curve has empty `v_used`.
pub fn read_curve_csv<R: BufRead>(r: &mut R) -> Result<SpectralCurve> {
    let mut first = String::new();
    r.read_line(&mut first)?;
    let atom_at_zero = first
        .trim()
        .strip_prefix("# atom0=")
        .ok_or_else(|| Error::Container(format!("missing atom comment line: {first:?}")))
        .and_then(parse_f64)?;
    let rows = read_csv_rows(r, "x,density,cdf", 3)?;
    Ok(SpectralCurve {
        x_grid: rows.iter().map(|c| c[0]).collect(),
        density: rows.iter().map(|c| c[1]).collect(),
        cdf: rows.iter().map(|c| c[2]).collect(),
        atom_at_zero,
        v_used: Vec::new(),
    })
}

fn read_csv_rows<R: BufRead>(r: &mut R, header: &str, cols: usize) -> Result<Vec<Vec<f64>>> {
    let mut lines = r.lines();
    let first = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::Container("empty csv".into()))?;
    if first.trim() != header {
        return Err(Error::Container(format!(
            "bad csv header {first:?}, expected {header:?}"
        )));
    }
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let fields: Vec<f64> = t.split(',').map(parse_f64).collect::<Result<_>>()?;
        if fields.len() != cols {
            return Err(Error::Container(format!(
                "csv row has {} fields, expected {cols}: {t:?}",
                fields.len()
            )));
        }
        rows.push(fields);
    }
    Ok(rows)
}
