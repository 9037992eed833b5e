//! 8-bit PGM reading and writing (P2 ASCII and P5 binary).

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgmFormat {
    /// ASCII raster.
    P2,
    /// Binary raster.
    P5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PgmHeader {
    pub format: PgmFormat,
    pub width: usize,
    pub height: usize,
    pub maxval: u32,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn error(&self, message: impl Into<String>) -> Error {
        Error::Pgm {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn read_number(&mut self, field: &str) -> Result<u32> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(if self.pos >= self.bytes.len() {
                self.error(format!("unexpected end of data reading {field}"))
            } else {
                self.error(format!("expected a decimal number for {field}"))
            });
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Pgm {
                offset: start,
                message: format!("{field} out of range"),
            })
    }
}

fn parse_header(cursor: &mut Cursor<'_>) -> Result<PgmHeader> {
    let format = match cursor.bytes.get(..2) {
        Some(b"P2") => PgmFormat::P2,
        Some(b"P5") => PgmFormat::P5,
        _ => return Err(cursor.error("bad magic, expected P2 or P5")),
    };
    cursor.pos = 2;
    let width = cursor.read_number("width")? as usize;
    let height = cursor.read_number("height")? as usize;
    if width == 0 || height == 0 {
        return Err(cursor.error(format!("zero dimension {width}x{height}")));
    }
    cursor.skip_whitespace_and_comments();
    let maxval_offset = cursor.pos;
    let maxval = cursor.read_number("maxval")?;
    if maxval != 255 {
        return Err(Error::Pgm {
            offset: maxval_offset,
            message: format!("maxval {maxval} unsupported, only 255 is accepted"),
        });
    }
    Ok(PgmHeader {
        format,
        width,
        height,
        maxval,
    })
}

/// Reads only the header of a PGM stream.
pub fn read_pgm_header(bytes: &[u8]) -> Result<PgmHeader> {
    parse_header(&mut Cursor { bytes, pos: 0 })
}

/// Decodes a P2 or P5 byte stream with maxval 255.
pub fn read_pgm(bytes: &[u8]) -> Result<Image> {
    let mut cursor = Cursor { bytes, pos: 0 };
    let header = parse_header(&mut cursor)?;
    let count = header
        .width
        .checked_mul(header.height)
        .ok_or_else(|| cursor.error("image too large"))?;

    let data = match header.format {
        PgmFormat::P5 => {
            // exactly one whitespace byte separates maxval from the raster
            match bytes.get(cursor.pos) {
                Some(b) if b.is_ascii_whitespace() => cursor.pos += 1,
                _ => return Err(cursor.error("missing whitespace before raster")),
            }
            let raster = &bytes[cursor.pos..];
            if raster.len() < count {
                return Err(Error::Pgm {
                    offset: bytes.len(),
                    message: format!(
                        "truncated raster: expected {count} bytes, found {}",
                        raster.len()
                    ),
                });
            }
            raster[..count].iter().map(|&b| f64::from(b)).collect()
        }
        PgmFormat::P2 => {
            let mut data = Vec::with_capacity(count);
            for i in 0..count {
                cursor.skip_whitespace_and_comments();
                if cursor.pos >= bytes.len() {
                    return Err(cursor.error(format!(
                        "truncated raster: expected {count} samples, found {i}"
                    )));
                }
                let start = cursor.pos;
                let v = cursor.read_number("sample")?;
                if v > header.maxval {
                    return Err(Error::Pgm {
                        offset: start,
                        message: format!("sample {v} exceeds maxval {}", header.maxval),
                    });
                }
                data.push(f64::from(v));
            }
            data
        }
    };
    Image::new(header.width, header.height, data)
}

/// Quantizes one intensity the way files store it: round half away from
/// zero, then clamp to `[0, 255]`.
#[inline]
pub fn quantize(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Encodes an image as 8-bit PGM, quantizing with [`quantize`].
pub fn write_pgm(img: &Image, format: PgmFormat) -> Vec<u8> {
    let (w, h) = (img.width(), img.height());
    match format {
        PgmFormat::P5 => {
            let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
            out.extend(img.pixels().iter().map(|&v| quantize(v)));
            out
        }
        PgmFormat::P2 => {
            let mut out = format!("P2\n{w} {h}\n255\n");
            for y in 0..h {
                // keep lines under 70 characters
                for (i, chunk) in img.row(y).chunks(16).enumerate() {
                    if i > 0 {
                        out.push('\n');
                    }
                    let line: Vec<String> =
                        chunk.iter().map(|&v| quantize(v).to_string()).collect();
                    out.push_str(&line.join(" "));
                }
                out.push('\n');
            }
            out.into_bytes()
        }
    }
}

pub fn read_pgm_file(path: impl AsRef<Path>) -> Result<Image> {
    read_pgm(&fs::read(path)?)
}

pub fn write_pgm_file(path: impl AsRef<Path>, img: &Image, format: PgmFormat) -> Result<()> {
    fs::write(path, write_pgm(img, format))?;
    Ok(())
}
