//! Binary field snapshots.
//!
//! ```text
//! "SGHF" | version u32 = 1 | ndim u32 | counts u32 × ndim | lengths f64 × ndim
//!        | ncomp u32 | payload f64 × (nodes · ncomp)
//! ```
//!
//! All little-endian; payload is node-major, x fastest, components contiguous.

use std::path::{Path, PathBuf};

use crate::error::SnapshotError;
use crate::grid::{Field, FieldValue, Grid};

pub const MAGIC: [u8; 4] = *b"SGHF";
pub const VERSION: u32 = 1;

/// A decoded snapshot with its component count.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub grid: Grid,
    pub ncomp: usize,
    pub data: Vec<f64>,
}

impl Snapshot {
    pub fn from_field<T: FieldValue>(field: &Field<T>) -> Snapshot {
        let mut data = Vec::with_capacity(field.values().len() * T::NCOMP);
        for v in field.values() {
            v.write_components(&mut data);
        }
        Snapshot {
            grid: *field.grid(),
            ncomp: T::NCOMP,
            data,
        }
    }

    /// Typed view; `None` when the component count does not match `T`.
    pub fn to_field<T: FieldValue>(&self) -> Option<Field<T>> {
        if self.ncomp != T::NCOMP {
            return None;
        }
        let values = self.data.chunks_exact(self.ncomp).map(T::from_components).collect();
        Field::from_values(self.grid, values).ok()
    }

    pub fn encode(&self) -> Vec<u8> {
        let dim = self.grid.dim();
        let mut out = Vec::with_capacity(16 + 12 * dim + 8 * self.data.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(dim as u32).to_le_bytes());
        for &n in self.grid.counts() {
            out.extend_from_slice(&(n as u32).to_le_bytes());
        }
        for &l in self.grid.lengths() {
            out.extend_from_slice(&l.to_le_bytes());
        }
        out.extend_from_slice(&(self.ncomp as u32).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8], path: &Path) -> Result<Snapshot, SnapshotError> {
        let mut r = Reader { bytes, pos: 0, path };
        let magic: [u8; 4] = r.take(4, "magic")?.try_into().expect("4 bytes");
        if magic != MAGIC {
            return Err(SnapshotError::BadMagic {
                path: path.to_path_buf(),
                found: magic,
            });
        }
        let version = r.u32("version")?;
        if version != VERSION {
            return Err(SnapshotError::BadVersion {
                path: path.to_path_buf(),
                version,
            });
        }
        let dim = r.u32("ndim")? as usize;
        if !(2..=3).contains(&dim) {
            return Err(r.header(format!("ndim {dim}")));
        }
        let mut counts = Vec::with_capacity(dim);
        for _ in 0..dim {
            counts.push(r.u32("node counts")? as usize);
        }
        let mut lengths = Vec::with_capacity(dim);
        for _ in 0..dim {
            lengths.push(f64::from_le_bytes(r.take(8, "lengths")?.try_into().expect("8 bytes")));
        }
        let grid = Grid::new(&counts, &lengths).map_err(|e| r.header(e.to_string()))?;
        let ncomp = r.u32("ncomp")? as usize;
        if ncomp == 0 {
            return Err(r.header("ncomp 0".into()));
        }
        let total = grid
            .len()
            .checked_mul(ncomp)
            .ok_or_else(|| r.header("payload size overflows".into()))?;
        let remaining = bytes.len() - r.pos;
        if remaining < total * 8 {
            return Err(SnapshotError::Truncated {
                path: path.to_path_buf(),
                detail: format!("payload has {remaining} bytes, expected {}", total * 8),
            });
        }
        if remaining > total * 8 {
            return Err(r.header(format!("{} trailing bytes", remaining - total * 8)));
        }
        let data = bytes[r.pos..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok(Snapshot { grid, ncomp, data })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], SnapshotError> {
        if self.bytes.len() - self.pos < n {
            return Err(SnapshotError::Truncated {
                path: self.path.to_path_buf(),
                detail: format!("ends inside {what}"),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32, SnapshotError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn header(&self, detail: String) -> SnapshotError {
        SnapshotError::Header {
            path: self.path.to_path_buf(),
            detail,
        }
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> SnapshotError + '_ {
    move |source| SnapshotError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_snapshot<T: FieldValue>(field: &Field<T>, path: &Path) -> Result<(), SnapshotError> {
    std::fs::write(path, Snapshot::from_field(field).encode()).map_err(io_error(path))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, SnapshotError> {
    let bytes = std::fs::read(path).map_err(io_error(path))?;
    Snapshot::decode(&bytes, path)
}

/// `snap_<step>.sghf` inside `dir`.
pub fn snapshot_path(dir: &Path, step: u64) -> PathBuf {
    dir.join(format!("snap_{step}.sghf"))
}
