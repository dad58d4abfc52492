//! Persistence: little-endian binary caches for ground states and heat
//! kernels, CSV and binary path ensembles, and JSON-lines records.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path as FsPath;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::reference::{Path, TimeGrid};
use crate::spectral::{GroundState, HeatKernel, SpaceGrid, SymTridiagonal};

const GS_MAGIC: &[u8; 4] = b"GLGS";
const HK_MAGIC: &[u8; 4] = b"GLHK";
const ENS_MAGIC: &[u8; 4] = b"GLPE";
const VERSION: u32 = 1;

fn write_header(w: &mut impl Write, magic: &[u8; 4]) -> Result<()> {
    w.write_all(magic)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    Ok(())
}

fn read_header(r: &mut impl Read, magic: &[u8; 4]) -> Result<()> {
    let mut m = [0u8; 4];
    r.read_exact(&mut m)?;
    if &m != magic {
        return Err(Error::Format(format!("bad magic {:?}, expected {:?}", m, magic)));
    }
    let v = r.read_u32::<LittleEndian>()?;
    if v != VERSION {
        return Err(Error::Format(format!("unsupported version {v}")));
    }
    Ok(())
}

fn write_grid(w: &mut impl Write, g: &SpaceGrid) -> Result<()> {
    w.write_f64::<LittleEndian>(g.lower)?;
    w.write_f64::<LittleEndian>(g.upper)?;
    w.write_u64::<LittleEndian>(g.points as u64)?;
    Ok(())
}

fn read_grid(r: &mut impl Read) -> Result<SpaceGrid> {
    let lower = r.read_f64::<LittleEndian>()?;
    let upper = r.read_f64::<LittleEndian>()?;
    let points = r.read_u64::<LittleEndian>()? as usize;
    SpaceGrid::new(lower, upper, points)
}

fn write_f64s(w: &mut impl Write, v: &[f64]) -> Result<()> {
    for &x in v {
        w.write_f64::<LittleEndian>(x)?;
    }
    Ok(())
}

fn read_f64s(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut v = vec![0.0; n];
    r.read_f64_into::<LittleEndian>(&mut v)?;
    Ok(v)
}

pub fn write_ground_state(w: &mut impl Write, gs: &GroundState) -> Result<()> {
    write_header(w, GS_MAGIC)?;
    write_grid(w, &gs.grid)?;
    w.write_f64::<LittleEndian>(gs.energy)?;
    write_f64s(w, &gs.psi)?;
    write_f64s(w, &gs.shifted.diag)?;
    write_f64s(w, &gs.shifted.off)?;
    Ok(())
}

pub fn read_ground_state(r: &mut impl Read) -> Result<GroundState> {
    read_header(r, GS_MAGIC)?;
    let grid = read_grid(r)?;
    let energy = r.read_f64::<LittleEndian>()?;
    let n = grid.points;
    let psi = read_f64s(r, n)?;
    let diag = read_f64s(r, n)?;
    let off = read_f64s(r, n - 1)?;
    Ok(GroundState { energy, psi, grid, shifted: SymTridiagonal::new(diag, off)? })
}

pub fn write_heat_kernel(w: &mut impl Write, k: &HeatKernel) -> Result<()> {
    write_header(w, HK_MAGIC)?;
    write_grid(w, &k.grid)?;
    w.write_f64::<LittleEndian>(k.dt)?;
    write_f64s(w, k.matrix.as_slice())?;
    Ok(())
}

pub fn read_heat_kernel(r: &mut impl Read) -> Result<HeatKernel> {
    read_header(r, HK_MAGIC)?;
    let grid = read_grid(r)?;
    let dt = r.read_f64::<LittleEndian>()?;
    let n = grid.points;
    let data = read_f64s(r, n * n)?;
    Ok(HeatKernel { dt, grid, matrix: DMatrix::from_vec(n, n, data) })
}

pub fn save_ground_state(path: impl AsRef<FsPath>, gs: &GroundState) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_ground_state(&mut w, gs)?;
    w.flush()?;
    Ok(())
}

pub fn load_ground_state(path: impl AsRef<FsPath>) -> Result<GroundState> {
    read_ground_state(&mut BufReader::new(File::open(path)?))
}

pub fn save_heat_kernel(path: impl AsRef<FsPath>, k: &HeatKernel) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_heat_kernel(&mut w, k)?;
    w.flush()?;
    Ok(())
}

pub fn load_heat_kernel(path: impl AsRef<FsPath>) -> Result<HeatKernel> {
    read_heat_kernel(&mut BufReader::new(File::open(path)?))
}

/// Paths as CSV: a header row of times, then one path per row. Lines
/// starting with `#` are comments.
pub fn write_paths_csv(w: &mut impl Write, paths: &[Path]) -> Result<()> {
    let Some(first) = paths.first() else {
        return Err(Error::Empty("path ensemble"));
    };
    let times: Vec<String> = first.grid.times().iter().map(|t| format!("{t}")).collect();
    writeln!(w, "{}", times.join(","))?;
    for p in paths {
        if p.grid != first.grid {
            return Err(Error::Grid("paths in one CSV must share a time grid".into()));
        }
        let row: Vec<String> = p.positions.iter().map(|x| format!("{x}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_paths_csv(r: impl BufRead) -> Result<Vec<Path>> {
    let mut lines = r.lines().enumerate().filter(|(_, l)| !matches!(l, Ok(s) if s.starts_with('#')));
    let parse_row = |line: usize, s: &str| -> Result<Vec<f64>> {
        s.split(',')
            .map(|f| f.trim().parse::<f64>().map_err(|e| Error::Parse { line: line + 1, msg: e.to_string() }))
            .collect()
    };
    let (l0, header) = lines.next().ok_or(Error::Empty("CSV header"))?;
    let times = parse_row(l0, &header?)?;
    if times.len() < 3 {
        return Err(Error::Parse { line: 1, msg: "need at least three time points".into() });
    }
    let dt = times[1] - times[0];
    let grid = TimeGrid::new(times[times.len() - 1], dt)?;
    if grid.len() != times.len() {
        return Err(Error::Parse { line: 1, msg: "time header is not a symmetric uniform grid".into() });
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(Path::new(grid, parse_row(i, &line)?)?);
    }
    Ok(out)
}

/// Binary ensemble: header, `T`, `dt`, path count, then positions row by row.
pub fn write_ensemble(w: &mut impl Write, paths: &[Path]) -> Result<()> {
    let Some(first) = paths.first() else {
        return Err(Error::Empty("path ensemble"));
    };
    write_header(w, ENS_MAGIC)?;
    w.write_f64::<LittleEndian>(first.grid.t_half)?;
    w.write_f64::<LittleEndian>(first.grid.dt)?;
    w.write_u64::<LittleEndian>(paths.len() as u64)?;
    for p in paths {
        if p.grid != first.grid {
            return Err(Error::Grid("ensemble paths must share a time grid".into()));
        }
        write_f64s(w, &p.positions)?;
    }
    Ok(())
}

pub fn read_ensemble(r: &mut impl Read) -> Result<Vec<Path>> {
    read_header(r, ENS_MAGIC)?;
    let t = r.read_f64::<LittleEndian>()?;
    let dt = r.read_f64::<LittleEndian>()?;
    let count = r.read_u64::<LittleEndian>()? as usize;
    let grid = TimeGrid::new(t, dt)?;
    (0..count).map(|_| Path::new(grid, read_f64s(r, grid.len())?)).collect()
}

/// Append one JSON object per line.
pub struct JsonLines<W: Write> {
    inner: W,
}

impl<W: Write> JsonLines<W> {
    pub fn new(inner: W) -> Self {
        Self { inner }
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> Result<()> {
        serde_json::to_writer(&mut self.inner, record).map_err(|e| Error::Format(e.to_string()))?;
        self.inner.write_all(b"\n")?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.inner
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PotentialV;
    use crate::spectral::{heat_kernel, solve_ground_state};

    #[test]
    fn caches_round_trip_bit_exact() {
        let grid = SpaceGrid::symmetric(3.0, 31).unwrap();
        let gs = solve_ground_state(&PotentialV::harmonic(1.0), &grid).unwrap();
        let k = heat_kernel(&gs, 0.2).unwrap();
        let mut buf = Vec::new();
        write_ground_state(&mut buf, &gs).unwrap();
        let back = read_ground_state(&mut buf.as_slice()).unwrap();
        assert_eq!(back.psi, gs.psi);
        assert_eq!(back.energy.to_bits(), gs.energy.to_bits());
        let mut buf = Vec::new();
        write_heat_kernel(&mut buf, &k).unwrap();
        let back = read_heat_kernel(&mut buf.as_slice()).unwrap();
        assert_eq!(back.matrix, k.matrix);
        assert!(read_ground_state(&mut buf.as_slice()).is_err());
    }

    #[test]
    fn ensembles_round_trip() {
        let g = TimeGrid::new(1.0, 0.25).unwrap();
        let paths = vec![Path::from_fn(g, |t| t * 0.1), Path::from_fn(g, |t| -t + 1.0 / 3.0)];
        let mut buf = b"# comment\n".to_vec();
        write_paths_csv(&mut buf, &paths).unwrap();
        assert_eq!(read_paths_csv(buf.as_slice()).unwrap(), paths);
        let mut buf = Vec::new();
        write_ensemble(&mut buf, &paths).unwrap();
        assert_eq!(read_ensemble(&mut buf.as_slice()).unwrap(), paths);
    }

    #[test]
    fn json_lines() {
        let mut j = JsonLines::new(Vec::new());
        j.write(&serde_json::json!({"a": 1})).unwrap();
        j.write(&serde_json::json!({"b": 2})).unwrap();
        let s = String::from_utf8(j.into_inner()).unwrap();
        assert_eq!(s, "{\"a\":1}\n{\"b\":2}\n");
    }
}
