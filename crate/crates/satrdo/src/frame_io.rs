//! Luma frame files: binary PGM (`P5`, maxval 255) and headerless 8-bit raw.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use satrdo_core::frame::check_dims;
use satrdo_core::{Frame, FrameSet};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: not a binary PGM: {reason}")]
    BadPgm { path: PathBuf, reason: String },
    #[error("{path}: {actual} bytes, but {width}x{height} needs {expected}")]
    SizeMismatch {
        path: PathBuf,
        width: usize,
        height: usize,
        expected: usize,
        actual: usize,
    },
    #[error("{path}: raw frames need explicit --width and --height")]
    MissingDims { path: PathBuf },
    #[error("{path}: {width}x{height} differs from the first frame's {first_width}x{first_height}")]
    MixedDims {
        path: PathBuf,
        width: usize,
        height: usize,
        first_width: usize,
        first_height: usize,
    },
    #[error("{path}: no such file or directory")]
    Missing { path: PathBuf },
    #[error("{path}: no frame files found")]
    Empty { path: PathBuf },
    #[error("{path}: {source}")]
    Invalid {
        path: PathBuf,
        #[source]
        source: satrdo_core::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameFormat {
    Pgm,
    Raw { width: usize, height: usize },
}

/// Extensions picked up when listing a directory.
pub const FRAME_EXTENSIONS: [&str; 4] = ["pgm", "y8", "raw", "yuv"];

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn invalid(path: &Path) -> impl FnOnce(satrdo_core::Error) -> IoError + '_ {
    move |source| IoError::Invalid {
        path: path.to_path_buf(),
        source,
    }
}

/// PGM for `.pgm`, raw for everything else (requires `dims`).
pub fn format_for(path: &Path, dims: Option<(usize, usize)>) -> Result<FrameFormat, IoError> {
    let is_pgm = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    match (is_pgm, dims) {
        (true, _) => Ok(FrameFormat::Pgm),
        (false, Some((width, height))) => Ok(FrameFormat::Raw { width, height }),
        (false, None) => Err(IoError::MissingDims {
            path: path.to_path_buf(),
        }),
    }
}

pub fn load_frame(path: &Path, format: FrameFormat) -> Result<Frame, IoError> {
    if let FrameFormat::Raw { width, height } = format {
        check_dims(width, height).map_err(invalid(path))?;
    }
    let bytes = fs::read(path).map_err(io_err(path))?;
    match format {
        FrameFormat::Raw { width, height } => {
            if bytes.len() != width * height {
                return Err(IoError::SizeMismatch {
                    path: path.to_path_buf(),
                    width,
                    height,
                    expected: width * height,
                    actual: bytes.len(),
                });
            }
            Frame::new(width, height, bytes).map_err(invalid(path))
        }
        FrameFormat::Pgm => {
            let (width, height, offset) = parse_pgm_header(&bytes).map_err(|reason| IoError::BadPgm {
                path: path.to_path_buf(),
                reason,
            })?;
            check_dims(width, height).map_err(invalid(path))?;
            let body = &bytes[offset..];
            if body.len() != width * height {
                return Err(IoError::SizeMismatch {
                    path: path.to_path_buf(),
                    width,
                    height,
                    expected: width * height,
                    actual: body.len(),
                });
            }
            Frame::new(width, height, body.to_vec()).map_err(invalid(path))
        }
    }
}

/// Returns `(width, height, offset of the first sample)`.
fn parse_pgm_header(bytes: &[u8]) -> Result<(usize, usize, usize), String> {
    if !bytes.starts_with(b"P5") {
        return Err("missing P5 magic".into());
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err("truncated header".into());
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or("header number out of range")?;
    }
    if fields[2] != 255 {
        return Err(format!("maxval {} (only 255 is supported)", fields[2]));
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err("missing whitespace after maxval".into());
    }
    Ok((fields[0], fields[1], pos + 1))
}

pub fn save_frame(frame: &Frame, path: &Path, format: FrameFormat) -> Result<(), IoError> {
    let mut out = Vec::with_capacity(frame.pixel_count() + 20);
    if format == FrameFormat::Pgm {
        write!(out, "P5\n{} {}\n255\n", frame.width(), frame.height()).expect("writing to a Vec");
    }
    out.extend_from_slice(frame.samples());
    fs::write(path, out).map_err(io_err(path))
}

/// Frame files of a directory, sorted by file name.
pub fn list_frames(dir: &Path) -> Result<Vec<PathBuf>, IoError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| FRAME_EXTENSIONS.iter().any(|x| e.eq_ignore_ascii_case(x)))
        })
        .collect();
    paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    if paths.is_empty() {
        return Err(IoError::Empty {
            path: dir.to_path_buf(),
        });
    }
    Ok(paths)
}

/// Expands a directory into its frame files; files are kept as given.
pub fn expand_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, IoError> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            out.extend(list_frames(p)?);
        } else if p.exists() {
            out.push(p.clone());
        } else {
            return Err(IoError::Missing { path: p.clone() });
        }
    }
    Ok(out)
}

/// Loads frames in order and checks they share one size.
pub fn load_frames(paths: &[PathBuf], dims: Option<(usize, usize)>) -> Result<FrameSet, IoError> {
    let first = paths.first().ok_or_else(|| IoError::Empty { path: PathBuf::new() })?;
    let mut frames: Vec<Frame> = Vec::with_capacity(paths.len());
    for p in paths {
        let f = load_frame(p, format_for(p, dims)?)?;
        if let Some(f0) = frames.first() {
            if !f0.same_dims(&f) {
                return Err(IoError::MixedDims {
                    path: p.clone(),
                    width: f.width(),
                    height: f.height(),
                    first_width: f0.width(),
                    first_height: f0.height(),
                });
            }
        }
        frames.push(f);
    }
    FrameSet::new(frames).map_err(invalid(first))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_with_comments() {
        let mut b = b"P5\n# made by hand\n16 8\n# depth\n255\n".to_vec();
        let off = b.len();
        b.extend(std::iter::repeat_n(7u8, 128));
        assert_eq!(parse_pgm_header(&b).unwrap(), (16, 8, off));
    }

    #[test]
    fn header_errors() {
        assert!(parse_pgm_header(b"P2\n8 8\n255\n").is_err());
        assert!(parse_pgm_header(b"P5\n8 8\n65535\n").is_err());
        assert!(parse_pgm_header(b"P5\n8").is_err());
    }
}
