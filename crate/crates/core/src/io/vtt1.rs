//! `.vtt1` tensor files: the 8-byte magic `VTTENSR1`, a little-endian u32
//! rank, one u32 extent per axis, then row-major f32 payload.

use super::{IoError, IoResult};
use crate::tensor::Tensor;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"VTTENSR1";
const MAX_RANK: u32 = 8;
const MAX_ELEMS: u64 = 1 << 31;

/// Encode a tensor in the `.vtt1` layout without touching the filesystem,
/// for callers that embed tensors inside larger files.
pub fn vtt1_bytes(tensor: &Tensor<f32>) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 4 + 4 * tensor.rank() + 4 * tensor.data().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(tensor.rank() as u32).to_le_bytes());
    for &e in tensor.shape() {
        out.extend_from_slice(&(e as u32).to_le_bytes());
    }
    for v in tensor.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decode one complete `.vtt1` image produced by [`vtt1_bytes`].
pub fn vtt1_from_bytes(bytes: &[u8]) -> IoResult<Tensor<f32>> {
    read_stream(&mut std::io::Cursor::new(bytes))
}

pub fn write_vtt1(path: &Path, tensor: &Tensor<f32>) -> IoResult<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(&vtt1_bytes(tensor))?;
    out.flush()?;
    Ok(())
}

pub fn read_vtt1(path: &Path) -> IoResult<Tensor<f32>> {
    read_stream(&mut BufReader::new(File::open(path)?))
}

fn read_stream(input: &mut impl Read) -> IoResult<Tensor<f32>> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(IoError::BadMagic { expected: "vtt1" });
    }
    let rank = read_u32(input)?;
    if rank == 0 || rank > MAX_RANK {
        return Err(malformed(format!("rank {rank} outside 1..={MAX_RANK}")));
    }
    let mut shape = Vec::with_capacity(rank as usize);
    let mut total: u64 = 1;
    for _ in 0..rank {
        let e = read_u32(input)?;
        if e == 0 {
            return Err(malformed("zero extent".into()));
        }
        total = total.saturating_mul(e as u64);
        shape.push(e as usize);
    }
    if total > MAX_ELEMS {
        return Err(malformed(format!("{total} elements exceeds limit")));
    }
    let mut bytes = vec![0u8; total as usize * 4];
    input.read_exact(&mut bytes)?;
    let mut trailing = [0u8; 1];
    if input.read(&mut trailing)? != 0 {
        return Err(malformed("trailing bytes after payload".into()));
    }
    let data: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Tensor::new(shape, data).map_err(|e| malformed(e.to_string()))
}

fn read_u32(r: &mut impl Read) -> IoResult<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn malformed(detail: String) -> IoError {
    IoError::Malformed {
        format: "vtt1",
        detail,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.vtt1");
        let t = Tensor::new(
            vec![2, 3],
            vec![0.0f32, -1.5, f32::MIN_POSITIVE, 3.25e7, 1e-30, 42.0],
        )
        .unwrap();
        write_vtt1(&path, &t).unwrap();
        let back = read_vtt1(&path).unwrap();
        assert_eq!(back.shape(), t.shape());
        assert_eq!(
            back.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn wrong_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.vtt1");
        std::fs::write(&path, b"NOTRIGHT\x01\x00\x00\x00\x01\x00\x00\x00\x00\x00\x80\x3f").unwrap();
        assert!(matches!(
            read_vtt1(&path),
            Err(IoError::BadMagic { expected: "vtt1" })
        ));
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.vtt1");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"VTTENSR1");
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&1.0f32.to_le_bytes()); // 1 of 4 floats
        std::fs::write(&path, bytes).unwrap();
        assert!(read_vtt1(&path).is_err());
    }
}
