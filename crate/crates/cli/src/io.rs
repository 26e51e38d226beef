//! Persisted formats: CSV field tables, the STWV coefficient container and
//! the run manifest.
//!
//! Bulk tables list one row per (vertical node, horizontal grid point),
//! node-major, with columns `node, y, x1[, x2]` followed by the field
//! components. Surface tables list one row per grid point with columns
//! `x1[, x2]` followed by one column per surface quantity. Floats are written
//! with 17 significant digits.
//!
//! STWV layout, all little-endian:
//!
//! | bytes | content |
//! |---|---|
//! | 4 | magic `STWV` |
//! | u32 | format version (1) |
//! | u32 × 6 | n, m, modes, degree, nnodes, mode (0 surface tension, 1 none) |
//! | f64 | period |
//! | f64 × m | depths |
//! | u64 | number of complex coefficients |
//! | (f64, f64) × count | p, then u, then eta_1..eta_m |
//!
//! `p` and `u` follow the in-memory order `[frequency][component][node]`,
//! each surface follows the frequency order of the torus.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use stwave::symbols::fmt17;
use stwave::{Discretization, Error, FlatState, HField, Mode, Result, VField, C64};

pub const STWV_MAGIC: &[u8; 4] = b"STWV";
pub const STWV_VERSION: u32 = 1;

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::InvalidConfig(format!("{}: {e}", path.display()))
}

/// Coordinate column names for the horizontal grid.
pub fn x_columns(n: usize) -> Vec<String> {
    (1..n).map(|i| format!("x{i}")).collect()
}

fn x_values(disc: &Discretization, pt: usize) -> Vec<f64> {
    disc.torus.point(pt)[..disc.hdim()].to_vec()
}

/// Writes a CSV table with a one-line header.
pub fn write_table(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Reads a CSV table, checking the header, and returns the numeric rows.
pub fn read_table(path: &Path, header: &[String]) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let got: Vec<String> = r.headers().map_err(|e| io_err(path, e))?.iter().map(|s| s.trim().to_string()).collect();
    if got != header {
        return Err(io_err(path, format!("header {got:?}, expected {header:?}")));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let row = rec
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|e| io_err(path, format!("row {}: {e}", i + 1))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Header of a bulk table with the given field columns.
pub fn bulk_header(n: usize, fields: &[String]) -> Vec<String> {
    let mut h = vec!["node".to_string(), "y".to_string()];
    h.extend(x_columns(n));
    h.extend(fields.iter().cloned());
    h
}

pub fn surface_header(n: usize, fields: &[String]) -> Vec<String> {
    let mut h = x_columns(n);
    h.extend(fields.iter().cloned());
    h
}

/// Rows of a bulk table for fields given as `[comp][node][point]` samples.
pub fn bulk_rows(disc: &Discretization, samples: &[Vec<f64>]) -> Vec<Vec<String>> {
    let nodes = disc.mesh.nodes();
    let np = disc.torus.npoints();
    let mut rows = Vec::with_capacity(nodes.len() * np);
    for (j, y) in nodes.iter().enumerate() {
        for pt in 0..np {
            let mut r = vec![j.to_string(), fmt17(*y)];
            r.extend(x_values(disc, pt).into_iter().map(fmt17));
            for s in samples {
                let ncomp = s.len() / (nodes.len() * np);
                for c in 0..ncomp {
                    r.push(fmt17(s[(c * nodes.len() + j) * np + pt]));
                }
            }
            rows.push(r);
        }
    }
    rows
}

pub fn surface_rows(disc: &Discretization, fields: &[HField]) -> Vec<Vec<String>> {
    let samples: Vec<Vec<f64>> = fields.iter().map(|h| h.to_samples(&disc.torus)).collect();
    (0..disc.torus.npoints())
        .map(|pt| {
            let mut r: Vec<String> = x_values(disc, pt).into_iter().map(fmt17).collect();
            r.extend(samples.iter().map(|s| fmt17(s[pt])));
            r
        })
        .collect()
}

/// Checks the coordinate columns of a row against the grid.
fn check_coords(path: &Path, disc: &Discretization, row: &[f64], pt: usize, offset: usize) -> Result<()> {
    let want = x_values(disc, pt);
    let tol = 1e-9 * disc.torus.period;
    for (k, w) in want.iter().enumerate() {
        if (row[offset + k] - w).abs() > tol {
            return Err(io_err(path, format!("row for grid point {pt} has x{} = {}, expected {w}", k + 1, row[offset + k])));
        }
    }
    Ok(())
}

/// Reads bulk fields with `ncomps[i]` components each.
pub fn read_bulk(path: &Path, disc: &Discretization, fields: &[String], ncomps: &[usize]) -> Result<Vec<VField>> {
    let n = disc.torus.n;
    let rows = read_table(path, &bulk_header(n, fields))?;
    let nodes = disc.mesh.nodes();
    let np = disc.torus.npoints();
    if rows.len() != nodes.len() * np {
        return Err(io_err(path, format!("{} rows, expected {} nodes x {np} points", rows.len(), nodes.len())));
    }
    let total: usize = ncomps.iter().sum();
    let mut samples: Vec<Vec<f64>> = ncomps.iter().map(|&c| vec![0.0; c * nodes.len() * np]).collect();
    for (i, row) in rows.iter().enumerate() {
        let (j, pt) = (i / np, i % np);
        if row[0] != j as f64 || (row[1] - nodes[j]).abs() > 1e-9 * nodes[j].abs().max(1.0) {
            return Err(io_err(path, format!("row {} should hold node {j} at y = {}", i + 1, nodes[j])));
        }
        check_coords(path, disc, row, pt, 2)?;
        let mut col = 2 + disc.hdim();
        debug_assert_eq!(row.len(), col + total);
        for (f, &nc) in ncomps.iter().enumerate() {
            for c in 0..nc {
                samples[f][(c * nodes.len() + j) * np + pt] = row[col];
                col += 1;
            }
        }
    }
    samples
        .iter()
        .zip(ncomps)
        .map(|(s, &nc)| {
            let mut v = VField::from_samples(disc, nc, s)?;
            v.zero_nyquist(&disc.torus);
            Ok(v)
        })
        .collect()
}

/// Reads `fields.len()` horizontal fields.
pub fn read_surface(path: &Path, disc: &Discretization, fields: &[String]) -> Result<Vec<HField>> {
    let rows = read_table(path, &surface_header(disc.torus.n, fields))?;
    let np = disc.torus.npoints();
    if rows.len() != np {
        return Err(io_err(path, format!("{} rows, expected {np} grid points", rows.len())));
    }
    let mut samples = vec![vec![0.0; np]; fields.len()];
    for (pt, row) in rows.iter().enumerate() {
        check_coords(path, disc, row, pt, 0)?;
        for (f, s) in samples.iter_mut().enumerate() {
            s[pt] = row[disc.hdim() + f];
        }
    }
    samples
        .iter()
        .map(|s| {
            let mut h = HField::from_samples(&disc.torus, s)?;
            h.zero_nyquist(&disc.torus);
            Ok(h)
        })
        .collect()
}

fn numbered(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|i| format!("{prefix}{i}")).collect()
}

/// Column names of the data tables: `g, f1..fn` and `k{l}_{c}, h{l}`.
pub fn data_columns(n: usize, m: usize) -> (Vec<String>, Vec<String>) {
    let mut bulk = vec!["g".to_string()];
    bulk.extend(numbered("f", n));
    let mut surf = Vec::new();
    for l in 1..=m {
        surf.extend((1..=n).map(|c| format!("k{l}_{c}")));
    }
    surf.extend(numbered("h", m));
    (bulk, surf)
}

/// Column names of the state tables: `p, u1..un` and `eta1..etam`.
pub fn state_columns(n: usize, m: usize) -> (Vec<String>, Vec<String>) {
    let mut bulk = vec!["p".to_string()];
    bulk.extend(numbered("u", n));
    (bulk, numbered("eta", m))
}

pub fn write_data_tables(disc: &Discretization, data: &stwave::DataTuple, bulk: &Path, surface: &Path) -> Result<()> {
    let n = disc.torus.n;
    let m = data.h.len();
    let (bc, sc) = data_columns(n, m);
    write_table(bulk, &bulk_header(n, &bc), bulk_rows(disc, &[data.g.to_samples(disc), data.f.to_samples(disc)]))?;
    let fields: Vec<HField> = data.k.iter().flatten().chain(&data.h).cloned().collect();
    write_table(surface, &surface_header(n, &sc), surface_rows(disc, &fields))
}

pub fn read_data_tables(disc: &Discretization, m: usize, bulk: &Path, surface: &Path) -> Result<stwave::DataTuple> {
    let n = disc.torus.n;
    let (bc, sc) = data_columns(n, m);
    let mut b = read_bulk(bulk, disc, &bc, &[1, n])?.into_iter();
    let (g, f) = (b.next().expect("two fields"), b.next().expect("two fields"));
    let mut s = read_surface(surface, disc, &sc)?;
    let h = s.split_off(n * m);
    let k = s.chunks(n).map(|c| c.to_vec()).collect();
    Ok(stwave::DataTuple { g, f, k, h })
}

pub fn write_state_tables(disc: &Discretization, x: &FlatState, bulk: &Path, surface: &Path) -> Result<()> {
    let n = disc.torus.n;
    let (bc, sc) = state_columns(n, x.eta.len());
    write_table(bulk, &bulk_header(n, &bc), bulk_rows(disc, &[x.p.to_samples(disc), x.u.to_samples(disc)]))?;
    write_table(surface, &surface_header(n, &sc), surface_rows(disc, &x.eta))
}

pub fn read_state_tables(disc: &Discretization, m: usize, mode: Mode, bulk: &Path, surface: &Path) -> Result<FlatState> {
    let n = disc.torus.n;
    let (bc, sc) = state_columns(n, m);
    let mut b = read_bulk(bulk, disc, &bc, &[1, n])?.into_iter();
    let (p, u) = (b.next().expect("two fields"), b.next().expect("two fields"));
    let eta = read_surface(surface, disc, &sc)?;
    Ok(FlatState { p, u, eta, mode })
}

/// Grid description stored in an STWV header.
#[derive(Debug, Clone, PartialEq)]
pub struct StwvHeader {
    pub n: usize,
    pub modes: usize,
    pub degree: usize,
    pub nnodes: usize,
    pub period: f64,
    pub depths: Vec<f64>,
    pub mode: Mode,
}

impl StwvHeader {
    pub fn discretization(&self) -> Result<Discretization> {
        let torus = stwave::TorusGrid::new(self.n, self.period, self.modes)?;
        let disc = Discretization::layered(torus, &self.depths, self.degree);
        if disc.nnodes() != self.nnodes {
            return Err(Error::Shape(format!("header lists {} nodes, mesh has {}", self.nnodes, disc.nnodes())));
        }
        Ok(disc)
    }
}

fn coefficient_count(disc: &Discretization, n: usize, m: usize) -> usize {
    disc.nfreq() * ((1 + n) * disc.nnodes() + m)
}

pub fn write_stwv(path: &Path, header: &StwvHeader, x: &FlatState) -> Result<()> {
    let f = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(f);
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(STWV_MAGIC);
    buf.extend_from_slice(&STWV_VERSION.to_le_bytes());
    let mode = match header.mode {
        Mode::SurfaceTension => 0u32,
        Mode::ZeroSurfaceTension => 1u32,
    };
    for v in [header.n, header.depths.len(), header.modes, header.degree, header.nnodes] {
        buf.extend_from_slice(&(v as u32).to_le_bytes());
    }
    buf.extend_from_slice(&mode.to_le_bytes());
    buf.extend_from_slice(&header.period.to_le_bytes());
    for d in &header.depths {
        buf.extend_from_slice(&d.to_le_bytes());
    }
    let coefs = x.p.data.iter().chain(&x.u.data).chain(x.eta.iter().flat_map(|e| &e.coef));
    let count = x.p.data.len() + x.u.data.len() + x.eta.iter().map(HField::len).sum::<usize>();
    buf.extend_from_slice(&(count as u64).to_le_bytes());
    for c in coefs {
        buf.extend_from_slice(&c.re.to_le_bytes());
        buf.extend_from_slice(&c.im.to_le_bytes());
    }
    w.write_all(&buf).and_then(|_| w.flush()).map_err(|e| io_err(path, e))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
    path: &'a Path,
}

impl Cursor<'_> {
    fn take<const K: usize>(&mut self) -> Result<[u8; K]> {
        let s = self.bytes.get(self.at..self.at + K).ok_or_else(|| io_err(self.path, "truncated STWV file"))?;
        self.at += K;
        Ok(s.try_into().expect("slice of length K"))
    }
    fn u32(&mut self) -> Result<u32> {
        self.take::<4>().map(u32::from_le_bytes)
    }
    fn f64(&mut self) -> Result<f64> {
        self.take::<8>().map(f64::from_le_bytes)
    }
}

pub fn read_stwv(path: &Path) -> Result<(StwvHeader, FlatState)> {
    let mut bytes = Vec::new();
    File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(|e| io_err(path, e))?;
    let mut c = Cursor { bytes: &bytes, at: 0, path };
    if &c.take::<4>()? != STWV_MAGIC {
        return Err(io_err(path, "not an STWV file"));
    }
    let version = c.u32()?;
    if version != STWV_VERSION {
        return Err(io_err(path, format!("unsupported STWV version {version}")));
    }
    let dims: Vec<usize> = (0..5).map(|_| c.u32().map(|v| v as usize)).collect::<Result<_>>()?;
    let mode = match c.u32()? {
        0 => Mode::SurfaceTension,
        1 => Mode::ZeroSurfaceTension,
        v => return Err(io_err(path, format!("unknown mode tag {v}"))),
    };
    let period = c.f64()?;
    let depths = (0..dims[1]).map(|_| c.f64()).collect::<Result<Vec<f64>>>()?;
    let header = StwvHeader { n: dims[0], modes: dims[2], degree: dims[3], nnodes: dims[4], period, depths, mode };
    let disc = header.discretization()?;
    let (n, m) = (header.n, header.depths.len());
    let count = u64::from_le_bytes(c.take::<8>()?) as usize;
    if count != coefficient_count(&disc, n, m) {
        return Err(io_err(path, format!("{count} coefficients, expected {}", coefficient_count(&disc, n, m))));
    }
    let mut next = |k: usize| -> Result<Vec<C64>> { (0..k).map(|_| Ok(C64::new(c.f64()?, c.f64()?))).collect() };
    let (nf, nn) = (disc.nfreq(), disc.nnodes());
    let p = VField { ncomp: 1, nnodes: nn, data: next(nf * nn)?, real: true };
    let u = VField { ncomp: n, nnodes: nn, data: next(nf * n * nn)?, real: true };
    let eta = (0..m).map(|_| next(nf).map(|coef| HField { coef, real: true })).collect::<Result<Vec<_>>>()?;
    Ok((header, FlatState { p, u, eta, mode }))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
pub struct OutputEntry {
    pub file: String,
    pub sha256: String,
}

/// Provenance record written next to every run's outputs.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config_sha256: String,
    pub stwave_version: String,
    pub cli_version: String,
    pub seed: u64,
    pub outputs: Vec<OutputEntry>,
}

impl Manifest {
    pub fn new(command: &str, config_bytes: &[u8], seed: u64) -> Self {
        Manifest {
            command: command.to_string(),
            config_sha256: sha256_hex(config_bytes),
            stwave_version: stwave::VERSION.to_string(),
            cli_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            outputs: Vec::new(),
        }
    }

    /// Hashes the listed files of `dir` and writes `manifest.json`.
    pub fn write(mut self, dir: &Path, files: &[&str]) -> Result<PathBuf> {
        for f in files {
            let p = dir.join(f);
            let bytes = std::fs::read(&p).map_err(|e| io_err(&p, e))?;
            self.outputs.push(OutputEntry { file: f.to_string(), sha256: sha256_hex(&bytes) });
        }
        let path = dir.join("manifest.json");
        write_json(&path, &self)?;
        Ok(path)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use stwave::random::seeded;
    use stwave::{DataTuple, TorusGrid};

    fn temp(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("stwave-io-{}-{name}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    fn disc(n: usize) -> Discretization {
        let t = if n == 2 { TorusGrid::new(2, 8.0, 8) } else { TorusGrid::new(3, 4.0, 4) }.unwrap();
        Discretization::layered(t, &[1.0, 2.0], 8)
    }

    #[test]
    fn stwv_preserves_coefficients_bitwise() {
        let dir = temp("stwv");
        for n in [2, 3] {
            let d = disc(n);
            let x = FlatState::random(&d, &mut seeded(n as u64), 2.0, Mode::SurfaceTension);
            let header = StwvHeader { n, modes: d.torus.modes, degree: 8, nnodes: d.nnodes(), period: d.torus.period, depths: vec![1.0, 2.0], mode: Mode::SurfaceTension };
            let path = dir.join(format!("x{n}.stwv"));
            write_stwv(&path, &header, &x).unwrap();
            let (h, y) = read_stwv(&path).unwrap();
            assert_eq!(h, header);
            assert_eq!(y, x);
            let bytes = std::fs::read(&path).unwrap();
            assert_eq!(&bytes[..4], b"STWV");
            assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        }
    }

    #[test]
    fn truncated_or_foreign_containers_are_refused() {
        let dir = temp("bad");
        let d = disc(2);
        let x = FlatState::zeros(&d, 2, Mode::SurfaceTension);
        let header = StwvHeader { n: 2, modes: 8, degree: 8, nnodes: d.nnodes(), period: 8.0, depths: vec![1.0, 2.0], mode: Mode::SurfaceTension };
        let path = dir.join("x.stwv");
        write_stwv(&path, &header, &x).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(read_stwv(&path).is_err());
        let mut foreign = bytes.clone();
        foreign[0] = b'X';
        std::fs::write(&path, &foreign).unwrap();
        assert!(read_stwv(&path).is_err());
    }

    #[test]
    fn data_tables_round_trip() {
        let dir = temp("tables");
        let d = disc(2);
        let data = DataTuple::random(&d, &mut seeded(3), 2.0);
        let (b, s) = (dir.join("bulk.csv"), dir.join("surface.csv"));
        write_data_tables(&d, &data, &b, &s).unwrap();
        let back = read_data_tables(&d, 2, &b, &s).unwrap();
        assert!(back.sub(&data).max_abs() <= 1e-14 * data.max_abs());
        let head = std::fs::read_to_string(&s).unwrap();
        assert!(head.starts_with("x1,k1_1,k1_2,k2_1,k2_2,h1,h2\n"));
    }

    #[test]
    fn misordered_rows_are_refused() {
        let dir = temp("order");
        let d = disc(2);
        let x = FlatState::random(&d, &mut seeded(4), 2.0, Mode::SurfaceTension);
        let (b, s) = (dir.join("b.csv"), dir.join("s.csv"));
        write_state_tables(&d, &x, &b, &s).unwrap();
        let text = std::fs::read_to_string(&s).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        lines.swap(1, 2);
        std::fs::write(&s, lines.join("\n")).unwrap();
        assert!(read_state_tables(&d, 2, Mode::SurfaceTension, &b, &s).is_err());
        assert!(read_state_tables(&d, 3, Mode::SurfaceTension, &b, &s).is_err());
    }
}
