//! Minimal 8-bit binary PGM (`P5`) reader and writer.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PgmError {
    #[error("missing P5 magic")]
    BadMagic,
    #[error("malformed header: {0}")]
    Header(String),
    #[error("only maxval 1..=255 is supported, got {0}")]
    MaxVal(u32),
    #[error("expected {expected} pixel bytes, found {found}")]
    Truncated { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u8,
    /// Row-major, top row first.
    pub pixels: Vec<u8>,
}

pub fn encode(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(pixels.len(), width * height, "pixel buffer does not match dimensions");
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

pub fn decode(data: &[u8]) -> Result<GrayImage, PgmError> {
    if !data.starts_with(b"P5") {
        return Err(PgmError::BadMagic);
    }
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in fields.iter_mut() {
        // whitespace and comments between header tokens
        loop {
            match data.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while let Some(&b) = data.get(pos) {
                        pos += 1;
                        if b == b'\n' {
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while data.get(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        if start == pos {
            return Err(PgmError::Header(format!("expected a number at byte {start}")));
        }
        let text = std::str::from_utf8(&data[start..pos]).expect("ascii digits");
        *field = text
            .parse()
            .map_err(|_| PgmError::Header(format!("number {text} too large")))?;
    }
    match data.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(PgmError::Header("missing whitespace after maxval".into())),
    }
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > 255 {
        return Err(PgmError::MaxVal(maxval));
    }
    let expected = (width as usize)
        .checked_mul(height as usize)
        .ok_or_else(|| PgmError::Header("image dimensions overflow".into()))?;
    let body = &data[pos..];
    if body.len() < expected {
        return Err(PgmError::Truncated {
            expected,
            found: body.len(),
        });
    }
    Ok(GrayImage {
        width: width as usize,
        height: height as usize,
        maxval: maxval as u8,
        pixels: body[..expected].to_vec(),
    })
}
