//! Little-endian helpers shared by the binary profile store and checkpoints.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub(crate) fn put_u8(w: &mut impl Write, v: u8) -> Result<()> {
    w.write_all(&[v])?;
    Ok(())
}

pub(crate) fn put_u32(w: &mut impl Write, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn put_u64(w: &mut impl Write, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn put_i64(w: &mut impl Write, v: i64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn put_len(w: &mut impl Write, len: usize, what: &'static str) -> Result<()> {
    let v = u32::try_from(len).map_err(|_| Error::format(what, format!("length {len} exceeds u32")))?;
    put_u32(w, v)
}

pub(crate) fn put_str(w: &mut impl Write, s: &str, what: &'static str) -> Result<()> {
    put_len(w, s.len(), what)?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

pub(crate) fn put_f32s(w: &mut impl Write, vals: &[f32]) -> Result<()> {
    let mut buf = Vec::with_capacity(vals.len() * 4);
    for v in vals {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn take<const N: usize>(r: &mut impl Read, what: &'static str) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::format(what, "truncated"),
        _ => Error::Io(e),
    })?;
    Ok(b)
}

pub(crate) fn get_u8(r: &mut impl Read, what: &'static str) -> Result<u8> {
    Ok(take::<1>(r, what)?[0])
}

pub(crate) fn get_u32(r: &mut impl Read, what: &'static str) -> Result<u32> {
    Ok(u32::from_le_bytes(take(r, what)?))
}

pub(crate) fn get_u64(r: &mut impl Read, what: &'static str) -> Result<u64> {
    Ok(u64::from_le_bytes(take(r, what)?))
}

pub(crate) fn get_i64(r: &mut impl Read, what: &'static str) -> Result<i64> {
    Ok(i64::from_le_bytes(take(r, what)?))
}

pub(crate) fn get_bytes(r: &mut impl Read, len: usize, what: &'static str) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    r.take(len as u64).read_to_end(&mut buf)?;
    if buf.len() != len {
        return Err(Error::format(what, "truncated"));
    }
    Ok(buf)
}

pub(crate) fn get_str(r: &mut impl Read, what: &'static str) -> Result<String> {
    let len = get_u32(r, what)? as usize;
    String::from_utf8(get_bytes(r, len, what)?).map_err(|_| Error::format(what, "non-UTF-8 string"))
}

pub(crate) fn get_f32s(r: &mut impl Read, count: usize, what: &'static str) -> Result<Vec<f32>> {
    let bytes = get_bytes(r, count * 4, what)?;
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

pub(crate) fn expect_magic(r: &mut impl Read, magic: &[u8; 4], what: &'static str) -> Result<()> {
    let got = take::<4>(r, what)?;
    if &got != magic {
        return Err(Error::format(what, format!("bad magic {got:?}")));
    }
    Ok(())
}
