//! Input loading and atomic output.

use std::fs;
use std::path::{Path, PathBuf};

use dirac_core::io::{encode_tensor, read_pgm, read_tensor, write_pgm, PgmFormat};
use dirac_core::FeatureMap;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::CliError;

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Usage(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CliError::io(path, e)
    })
}

/// `<prefix>_<part>.<ext>`.
pub fn with_suffix(prefix: &Path, part: &str, ext: &str) -> PathBuf {
    let mut name = prefix
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(format!("_{part}.{ext}"));
    prefix.with_file_name(name)
}

/// Loads a `.pgm` image or a raw tensor, by extension.
pub fn read_map(path: &Path) -> Result<FeatureMap, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let is_pgm = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    let parsed = if is_pgm {
        read_pgm(file)
    } else {
        read_tensor(file)
    };
    parsed.map_err(|source| CliError::Input {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_vec_pretty(value).expect("serializable value");
    text.push(b'\n');
    write_atomic(path, &text)
}

pub fn write_map(path: &Path, map: &FeatureMap) -> Result<(), CliError> {
    write_atomic(path, &encode_tensor(map))
}

pub fn write_plane(
    path: &Path,
    plane: &[f64],
    h: usize,
    w: usize,
    ascii: bool,
) -> Result<(), CliError> {
    let format = if ascii {
        PgmFormat::Ascii
    } else {
        PgmFormat::Binary
    };
    let mut buf = Vec::new();
    write_pgm(&mut buf, plane, h, w, format)?;
    write_atomic(path, &buf)
}

/// Renders every `(channel, slice)` plane of a 2D or 3D map. A single plane is
/// written as `<prefix>_<part>.pgm`; otherwise `_c<channel>` and `_z<slice>` are
/// appended to the part.
pub fn write_planes(
    prefix: &Path,
    part: &str,
    map: &FeatureMap,
    ascii: bool,
) -> Result<Vec<PathBuf>, CliError> {
    let dims = map.dims();
    let (d, h, w) = match dims {
        &[h, w] => (1, h, w),
        &[d, h, w] => (d, h, w),
        other => return Err(CliError::Usage(format!("cannot render extents {other:?}"))),
    };
    let single = map.channels() == 1 && d == 1;
    let mut written = Vec::new();
    for c in 0..map.channels() {
        let channel = map.channel(c);
        for z in 0..d {
            let mut name = part.to_string();
            if !single {
                name.push_str(&format!("_c{c}"));
                if dims.len() == 3 {
                    name.push_str(&format!("_z{z}"));
                }
            }
            let path = with_suffix(prefix, &name, "pgm");
            write_plane(&path, &channel[z * h * w..(z + 1) * h * w], h, w, ascii)?;
            written.push(path);
        }
    }
    Ok(written)
}

pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| CliError::Usage(format!("csv: {e}")))?;
    }
    w.into_inner()
        .map_err(|e| CliError::Usage(format!("csv: {e}")))
}
