//! Tensor and image file formats.
//!
//! Raw tensor layout (all little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "DACT"
//! 4       1     version (1)
//! 5       1     rank (channels axis included)
//! 6       1     dtype (1 = f64)
//! 7       9     zero padding
//! 16      4*r   extents as u32, channel axis first
//! ...     8*n   data as f64, row-major
//! ```

use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Error, Result};
use crate::tensor::FeatureMap;

pub const MAGIC: &[u8; 4] = b"DACT";
pub const VERSION: u8 = 1;
pub const DTYPE_F64: u8 = 1;
const HEADER_LEN: usize = 16;

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

pub fn write_tensor<W: Write>(mut out: W, map: &FeatureMap) -> Result<()> {
    let shape = map.shape();
    let mut header = [0u8; HEADER_LEN];
    header[..4].copy_from_slice(MAGIC);
    header[4] = VERSION;
    header[5] = shape.len() as u8;
    header[6] = DTYPE_F64;
    out.write_all(&header)?;
    for &extent in &shape {
        let extent = u32::try_from(extent).map_err(|_| format_err("extent exceeds u32"))?;
        out.write_all(&extent.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(map.data().len() * 8);
    for v in map.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn encode_tensor(map: &FeatureMap) -> Vec<u8> {
    let mut buf = Vec::new();
    write_tensor(&mut buf, map).expect("writing to a Vec cannot fail");
    buf
}

pub fn read_tensor<R: Read>(mut input: R) -> Result<FeatureMap> {
    let mut header = [0u8; HEADER_LEN];
    input
        .read_exact(&mut header)
        .map_err(|_| format_err("truncated header"))?;
    if &header[..4] != MAGIC {
        return Err(format_err("bad magic"));
    }
    if header[4] != VERSION {
        return Err(format_err(format!("unsupported version {}", header[4])));
    }
    if header[6] != DTYPE_F64 {
        return Err(format_err(format!("unsupported dtype {}", header[6])));
    }
    let rank = header[5] as usize;
    if !(2..=4).contains(&rank) {
        return Err(format_err(format!("unsupported rank {rank}")));
    }
    let mut shape = Vec::with_capacity(rank);
    for _ in 0..rank {
        let mut b = [0u8; 4];
        input
            .read_exact(&mut b)
            .map_err(|_| format_err("truncated extents"))?;
        shape.push(u32::from_le_bytes(b) as usize);
    }
    let count: usize = shape.iter().product();
    let mut bytes = Vec::with_capacity(count * 8);
    input.read_to_end(&mut bytes)?;
    if bytes.len() != count * 8 {
        return Err(format_err(format!(
            "expected {} data bytes, found {}",
            count * 8,
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    FeatureMap::new(shape[0], &shape[1..], data)
}

/// PGM flavour: `P2` is ASCII, `P5` is binary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PgmFormat {
    Ascii,
    Binary,
}

/// Min-max scales an `h x w` plane to 8-bit gray. A constant plane renders black.
pub fn to_gray8(plane: &[f64]) -> Vec<u8> {
    let (lo, hi) = plane
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = hi - lo;
    plane
        .iter()
        .map(|&v| {
            if span > 0.0 {
                ((v - lo) / span * 255.0).round() as u8
            } else {
                0
            }
        })
        .collect()
}

pub fn write_pgm<W: Write>(
    mut out: W,
    plane: &[f64],
    height: usize,
    width: usize,
    format: PgmFormat,
) -> Result<()> {
    if plane.len() != height * width {
        return Err(Error::ShapeMismatch(format!(
            "plane of {} values is not {height}x{width}",
            plane.len()
        )));
    }
    let gray = to_gray8(plane);
    match format {
        PgmFormat::Binary => {
            write!(out, "P5\n{width} {height}\n255\n")?;
            out.write_all(&gray)?;
        }
        PgmFormat::Ascii => {
            write!(out, "P2\n{width} {height}\n255\n")?;
            for row in gray.chunks(width) {
                let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                writeln!(out, "{}", line.join(" "))?;
            }
        }
    }
    Ok(())
}

fn next_token<R: BufRead>(input: &mut R) -> Result<String> {
    let mut token = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        if input.read(&mut byte)? == 0 {
            break;
        }
        match byte[0] {
            b'#' if token.is_empty() => {
                let mut skip = Vec::new();
                input.read_until(b'\n', &mut skip)?;
            }
            b if b.is_ascii_whitespace() => {
                if !token.is_empty() {
                    break;
                }
            }
            b => token.push(b),
        }
    }
    if token.is_empty() {
        return Err(format_err("unexpected end of PGM header"));
    }
    String::from_utf8(token).map_err(|_| format_err("non-ASCII PGM header"))
}

fn parse_num(tok: &str) -> Result<usize> {
    tok.parse()
        .map_err(|_| format_err(format!("bad PGM number {tok:?}")))
}

/// Reads a P2 or P5 image as a `(1, H, W)` map with gray levels scaled to `[0, 1]`.
pub fn read_pgm<R: Read>(input: R) -> Result<FeatureMap> {
    let mut input = BufReader::new(input);
    let magic = next_token(&mut input)?;
    let width = parse_num(&next_token(&mut input)?)?;
    let height = parse_num(&next_token(&mut input)?)?;
    let maxval = parse_num(&next_token(&mut input)?)?;
    if maxval == 0 || maxval > 65535 {
        return Err(format_err(format!("bad PGM maxval {maxval}")));
    }
    let count = width * height;
    let raw: Vec<usize> = match magic.as_str() {
        "P2" => (0..count)
            .map(|_| next_token(&mut input).and_then(|t| parse_num(&t)))
            .collect::<Result<_>>()?,
        "P5" => {
            let bytes_per = if maxval > 255 { 2 } else { 1 };
            let mut buf = vec![0u8; count * bytes_per];
            input
                .read_exact(&mut buf)
                .map_err(|_| format_err("truncated PGM raster"))?;
            if bytes_per == 1 {
                buf.into_iter().map(usize::from).collect()
            } else {
                buf.chunks_exact(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]]) as usize)
                    .collect()
            }
        }
        other => return Err(format_err(format!("unsupported PGM magic {other:?}"))),
    };
    let scale = maxval as f64;
    FeatureMap::new(
        1,
        &[height, width],
        raw.into_iter().map(|v| v as f64 / scale).collect(),
    )
}
