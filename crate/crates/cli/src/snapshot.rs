//! Binary snapshots: `"PKS1"`, version, dim, N, t, A, then `n` and `C` as
//! little-endian `f64`, row-major with `x` fastest.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use pks_core::{Field, PksState, TorusGrid};

pub const MAGIC: [u8; 4] = *b"PKS1";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub a: f64,
    pub state: PksState,
}

pub fn write_snapshot<W: Write>(mut w: W, state: &PksState, a: f64) -> io::Result<()> {
    let grid = state.n.grid();
    w.write_all(&MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    w.write_u32::<LittleEndian>(grid.dim() as u32)?;
    w.write_u32::<LittleEndian>(grid.n_points() as u32)?;
    w.write_f64::<LittleEndian>(state.t)?;
    w.write_f64::<LittleEndian>(a)?;
    for field in [&state.n, &state.c] {
        for v in field.values() {
            w.write_f64::<LittleEndian>(v)?;
        }
    }
    w.flush()
}

fn invalid(msg: String) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg)
}

pub fn read_snapshot<R: Read>(mut r: R) -> io::Result<Snapshot> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(invalid(format!("bad magic {magic:?}")));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(invalid(format!("unsupported snapshot version {version}")));
    }
    let dim = r.read_u32::<LittleEndian>()? as usize;
    let n = r.read_u32::<LittleEndian>()? as usize;
    let grid = TorusGrid::new(dim, n).map_err(|e| invalid(e.to_string()))?;
    let t = r.read_f64::<LittleEndian>()?;
    let a = r.read_f64::<LittleEndian>()?;
    let mut read_field = || -> io::Result<Field> {
        let mut v = vec![0.0; grid.len()];
        r.read_f64_into::<LittleEndian>(&mut v)?;
        Field::from_physical(&grid, v).map_err(|e| invalid(e.to_string()))
    };
    let n_field = read_field()?;
    let c_field = read_field()?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(invalid("trailing bytes after payload".into()));
    }
    Ok(Snapshot {
        a,
        state: PksState {
            t,
            n: n_field,
            c: c_field,
        },
    })
}

pub fn save(path: &Path, state: &PksState, a: f64) -> io::Result<()> {
    write_snapshot(BufWriter::new(File::create(path)?), state, a)
}

pub fn load(path: &Path) -> io::Result<Snapshot> {
    read_snapshot(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_round_trip() {
        let g = TorusGrid::new(2, 8).unwrap();
        let state = PksState {
            t: 1.25,
            n: Field::from_fn(&g, |p| 1.0 + p[0].sin() * p[1].cos()),
            c: Field::from_fn(&g, |p| (2.0 * p[1]).sin() / 3.0),
        };
        let mut bytes = Vec::new();
        write_snapshot(&mut bytes, &state, 64.0).unwrap();
        assert_eq!(bytes.len(), 4 + 12 + 16 + 2 * 64 * 8);
        assert_eq!(&bytes[..4], b"PKS1");
        let snap = read_snapshot(bytes.as_slice()).unwrap();
        assert_eq!(snap.a, 64.0);
        assert_eq!(snap.state.t, 1.25);
        assert_eq!(snap.state.n.values(), state.n.values());
        let mut again = Vec::new();
        write_snapshot(&mut again, &snap.state, snap.a).unwrap();
        assert_eq!(again, bytes);
        assert!(read_snapshot(&bytes[..bytes.len() - 1]).is_err());
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(read_snapshot(longer.as_slice()).is_err());
    }
}
