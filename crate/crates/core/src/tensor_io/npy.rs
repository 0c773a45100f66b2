//! NPY format version 1.0, restricted to C-ordered little-endian `f4`/`f8`.
//!
//! Layout: six magic bytes `\x93NUMPY`, version `1 0`, a little-endian
//! `u16` header length, an ASCII Python dict literal padded with spaces and
//! a final newline so the whole preamble is a multiple of 64 bytes, then
//! the raw payload.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use super::feature_map::{Dtype, FeatureMap, FeatureMeta};
use super::write_atomic;
use crate::error::{Error, Result};

const MAGIC: &[u8; 6] = b"\x93NUMPY";
const PREAMBLE: usize = 10;
const ALIGN: usize = 64;

/// Parsed header of a tensor file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NpyHeader {
    pub dtype: Dtype,
    pub shape: Vec<usize>,
    /// Byte offset of the payload.
    pub data_offset: usize,
}

impl NpyHeader {
    pub fn element_count(&self) -> Option<usize> {
        self.shape.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d))
    }

    /// `(channels, height, width)` after promoting rank-2 shapes.
    pub fn feature_shape(&self) -> Result<(usize, usize, usize)> {
        match self.shape.as_slice() {
            [h, w] => Ok((1, *h, *w)),
            [c, h, w] => Ok((*c, *h, *w)),
            other => Err(Error::RankError(other.len())),
        }
    }
}

/// Read a tensor file into a [`FeatureMap`]. The image id defaults to the
/// file stem; the timestep is left unassigned.
pub fn read_tensor(path: impl AsRef<Path>) -> Result<FeatureMap> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut map = decode_tensor(&bytes)?;
    map.meta.image_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(map)
}

/// Read and validate only the header of a tensor file.
pub fn read_header(path: impl AsRef<Path>) -> Result<NpyHeader> {
    let path = path.as_ref();
    let mut f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut pre = [0u8; PREAMBLE];
    read_up_to(&mut f, &mut pre, path)?;
    let hlen = check_preamble(&pre)?;
    let mut buf = vec![0u8; PREAMBLE + hlen];
    buf[..PREAMBLE].copy_from_slice(&pre);
    read_up_to(&mut f, &mut buf[PREAMBLE..], path)?;
    let header = parse_header(&buf)?;
    header.feature_shape()?;
    Ok(header)
}

fn read_up_to(f: &mut File, buf: &mut [u8], path: &Path) -> Result<()> {
    let mut filled = 0;
    while filled < buf.len() {
        let n = f.read(&mut buf[filled..]).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            return Err(Error::MalformedHeader(format!(
                "{}: file ends inside the header",
                path.display()
            )));
        }
        filled += n;
    }
    Ok(())
}

/// Decode an in-memory tensor file.
pub fn decode_tensor(bytes: &[u8]) -> Result<FeatureMap> {
    let header = parse_header(bytes)?;
    let (c, h, w) = header.feature_shape()?;
    let count = header
        .element_count()
        .ok_or_else(|| Error::MalformedHeader("shape overflows usize".into()))?;
    let payload = &bytes[header.data_offset..];
    let expected = count
        .checked_mul(header.dtype.size())
        .ok_or_else(|| Error::MalformedHeader("payload size overflows usize".into()))?;
    if payload.len() != expected {
        return Err(Error::MalformedHeader(format!(
            "payload is {} bytes, shape {:?} needs {expected}",
            payload.len(),
            header.shape
        )));
    }
    let values: Vec<f64> = match header.dtype {
        Dtype::F32 => payload
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
            .collect(),
        Dtype::F64 => payload
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect(),
    };
    let map = FeatureMap::new(c, h, w, values)?;
    Ok(map.with_meta(FeatureMeta {
        dtype: header.dtype,
        ..FeatureMeta::default()
    }))
}

/// Encode a map as an NPY v1.0 byte buffer of shape `(c, h, w)`.
pub fn encode_tensor(map: &FeatureMap, dtype: Dtype) -> Result<Vec<u8>> {
    if let Some(v) = map.values().iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue(format!("refusing to write {v}")));
    }
    if dtype == Dtype::F32 {
        if let Some(v) = map.values().iter().find(|v| !(**v as f32).is_finite()) {
            return Err(Error::NonFiniteValue(format!("{v} overflows f32")));
        }
    }
    let (c, h, w) = map.shape();
    let dict = format!(
        "{{'descr': '{}', 'fortran_order': False, 'shape': ({c}, {h}, {w}), }}",
        dtype.descr()
    );
    // Pad with spaces; the newline is the last header byte.
    let unpadded = PREAMBLE + dict.len() + 1;
    let total = unpadded.div_ceil(ALIGN) * ALIGN;
    let hlen = total - PREAMBLE;
    let hlen16 = u16::try_from(hlen)
        .map_err(|_| Error::MalformedHeader(format!("header of {hlen} bytes too long for v1.0")))?;

    let mut out = Vec::with_capacity(total + map.values().len() * dtype.size());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&hlen16.to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    out.resize(total - 1, b' ');
    out.push(b'\n');
    match dtype {
        Dtype::F32 => {
            for &v in map.values() {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        Dtype::F64 => {
            for &v in map.values() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    Ok(out)
}

/// Write `map` to `path` atomically.
pub fn write_tensor(map: &FeatureMap, path: impl AsRef<Path>, dtype: Dtype) -> Result<()> {
    let bytes = encode_tensor(map, dtype)?;
    write_atomic(path.as_ref(), &bytes)
}

fn check_preamble(pre: &[u8]) -> Result<usize> {
    if pre.len() < PREAMBLE {
        return Err(Error::MalformedHeader(format!(
            "file is {} bytes, shorter than the preamble",
            pre.len()
        )));
    }
    if &pre[..6] != MAGIC {
        return Err(Error::MalformedHeader("bad magic bytes".into()));
    }
    if pre[6] != 1 || pre[7] != 0 {
        return Err(Error::MalformedHeader(format!(
            "unsupported format version {}.{}",
            pre[6], pre[7]
        )));
    }
    Ok(u16::from_le_bytes([pre[8], pre[9]]) as usize)
}

fn parse_header(bytes: &[u8]) -> Result<NpyHeader> {
    let hlen = check_preamble(bytes)?;
    let end = PREAMBLE + hlen;
    if bytes.len() < end {
        return Err(Error::MalformedHeader(format!(
            "declared header length {hlen} exceeds the file"
        )));
    }
    let text = std::str::from_utf8(&bytes[PREAMBLE..end])
        .ok()
        .filter(|s| s.is_ascii())
        .ok_or_else(|| Error::MalformedHeader("header is not ASCII".into()))?;
    let dict = HeaderDict::parse(text)?;
    let dtype = match dict.descr.as_str() {
        "<f4" => Dtype::F32,
        "<f8" => Dtype::F64,
        other => return Err(Error::UnsupportedDtype(format!("descr '{other}'"))),
    };
    if dict.fortran_order {
        return Err(Error::MalformedHeader("fortran_order=True is not supported".into()));
    }
    if dict.shape.contains(&0) {
        return Err(Error::MalformedHeader(format!("zero-sized dimension in {:?}", dict.shape)));
    }
    Ok(NpyHeader {
        dtype,
        shape: dict.shape,
        data_offset: end,
    })
}

struct HeaderDict {
    descr: String,
    fortran_order: bool,
    shape: Vec<usize>,
}

enum Literal {
    Str(String),
    Bool(bool),
    Tuple(Vec<usize>),
}

/// Minimal reader for the Python dict literal numpy writes.
struct Cursor<'a> {
    s: &'a [u8],
    pos: usize,
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedHeader(msg.into())
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn expect(&mut self, ch: u8) -> Result<()> {
        if self.peek() == Some(ch) {
            self.pos += 1;
            Ok(())
        } else {
            Err(malformed(format!("expected '{}' at byte {}", ch as char, self.pos)))
        }
    }

    fn string(&mut self) -> Result<String> {
        let quote = match self.peek() {
            Some(q @ (b'\'' | b'"')) => q,
            _ => return Err(malformed(format!("expected string at byte {}", self.pos))),
        };
        self.pos += 1;
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos] != quote {
            self.pos += 1;
        }
        if self.pos >= self.s.len() {
            return Err(malformed("unterminated string"));
        }
        let out = String::from_utf8_lossy(&self.s[start..self.pos]).into_owned();
        self.pos += 1;
        Ok(out)
    }

    fn word(&mut self) -> &'a [u8] {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        &self.s[start..self.pos]
    }

    fn tuple(&mut self) -> Result<Vec<usize>> {
        self.expect(b'(')?;
        let mut dims = Vec::new();
        loop {
            if self.peek() == Some(b')') {
                self.pos += 1;
                return Ok(dims);
            }
            let w = self.word();
            if w.is_empty() || !w.iter().all(u8::is_ascii_digit) {
                return Err(malformed(format!("bad shape dimension at byte {}", self.pos)));
            }
            let d = std::str::from_utf8(w)
                .unwrap()
                .parse::<usize>()
                .map_err(|_| malformed("shape dimension out of range"))?;
            dims.push(d);
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(b')') => {}
                _ => return Err(malformed("expected ',' or ')' in shape")),
            }
        }
    }

    fn literal(&mut self) -> Result<Literal> {
        match self.peek() {
            Some(b'\'' | b'"') => Ok(Literal::Str(self.string()?)),
            Some(b'(') => Ok(Literal::Tuple(self.tuple()?)),
            _ => match self.word() {
                b"True" => Ok(Literal::Bool(true)),
                b"False" => Ok(Literal::Bool(false)),
                _ => Err(malformed(format!("unexpected value at byte {}", self.pos))),
            },
        }
    }
}

impl HeaderDict {
    fn parse(text: &str) -> Result<Self> {
        let mut cur = Cursor {
            s: text.as_bytes(),
            pos: 0,
        };
        cur.expect(b'{')?;
        let (mut descr, mut fortran, mut shape) = (None, None, None);
        loop {
            if cur.peek() == Some(b'}') {
                cur.pos += 1;
                break;
            }
            let key = cur.string()?;
            cur.expect(b':')?;
            let value = cur.literal()?;
            match (key.as_str(), value) {
                ("descr", Literal::Str(s)) => descr = Some(s),
                ("fortran_order", Literal::Bool(b)) => fortran = Some(b),
                ("shape", Literal::Tuple(t)) => shape = Some(t),
                (k, _) => return Err(malformed(format!("unexpected key or value type for '{k}'"))),
            }
            match cur.peek() {
                Some(b',') => cur.pos += 1,
                Some(b'}') => {}
                _ => return Err(malformed("expected ',' or '}' in header dict")),
            }
        }
        if cur.peek().is_some() {
            return Err(malformed("trailing bytes after header dict"));
        }
        Ok(HeaderDict {
            descr: descr.ok_or_else(|| malformed("missing 'descr'"))?,
            fortran_order: fortran.ok_or_else(|| malformed("missing 'fortran_order'"))?,
            shape: shape.ok_or_else(|| malformed("missing 'shape'"))?,
        })
    }
}
