//! PNG codec glue: grayscale images, binary masks and RGB id maps.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use png::{BitDepth as PngDepth, ColorType, Decoder, Encoder, Transformations};

use crate::error::{Error, Result};
use crate::types::{BinaryMask, BitDepth, GrayImage};

pub(crate) struct RawPng {
    pub width: usize,
    pub height: usize,
    pub color: ColorType,
    pub depth: PngDepth,
    pub bytes: Vec<u8>,
}

pub(crate) fn decode(path: &Path) -> Result<RawPng> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let decode_err = |e: png::DecodingError| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut decoder = Decoder::new(BufReader::new(file));
    decoder.set_transformations(Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(decode_err)?;
    let size = reader.output_buffer_size().ok_or_else(|| Error::Decode {
        path: path.to_path_buf(),
        message: "image too large".into(),
    })?;
    let mut bytes = vec![0; size];
    let frame = reader.next_frame(&mut bytes).map_err(decode_err)?;
    bytes.truncate(frame.buffer_size());
    Ok(RawPng {
        width: frame.width as usize,
        height: frame.height as usize,
        color: frame.color_type,
        depth: frame.bit_depth,
        bytes,
    })
}

pub(crate) fn encode(
    path: &Path,
    width: usize,
    height: usize,
    color: ColorType,
    depth: PngDepth,
    bytes: &[u8],
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = Encoder::new(BufWriter::new(file), width as u32, height as u32);
    encoder.set_color(color);
    encoder.set_depth(depth);
    let encode_err = |e: png::EncodingError| match e {
        png::EncodingError::IoError(e) => Error::io(path, e),
        other => Error::UnsupportedFormat {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    };
    let mut writer = encoder.write_header().map_err(encode_err)?;
    writer.write_image_data(bytes).map_err(encode_err)?;
    writer.finish().map_err(encode_err)
}

/// Reads an 8- or 16-bit single-channel PNG.
pub fn read_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let raw = decode(path)?;
    if raw.color != ColorType::Grayscale {
        return Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            message: format!("expected single-channel grayscale, found {:?}", raw.color),
        });
    }
    let (depth, data) = match raw.depth {
        PngDepth::Eight => (
            BitDepth::Eight,
            raw.bytes.iter().map(|&b| b as u16).collect(),
        ),
        PngDepth::Sixteen => (
            BitDepth::Sixteen,
            raw.bytes
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]))
                .collect(),
        ),
        other => {
            return Err(Error::UnsupportedFormat {
                path: path.to_path_buf(),
                message: format!("unsupported bit depth {other:?}"),
            })
        }
    };
    GrayImage::new(raw.width, raw.height, depth, data)
}

pub fn write_gray(path: impl AsRef<Path>, img: &GrayImage) -> Result<()> {
    let (depth, bytes): (PngDepth, Vec<u8>) = match img.depth() {
        BitDepth::Eight => (
            PngDepth::Eight,
            img.data().iter().map(|&v| v as u8).collect(),
        ),
        BitDepth::Sixteen => (
            PngDepth::Sixteen,
            img.data().iter().flat_map(|v| v.to_be_bytes()).collect(),
        ),
    };
    encode(
        path.as_ref(),
        img.width(),
        img.height(),
        ColorType::Grayscale,
        depth,
        &bytes,
    )
}

/// Reads a grayscale mask; any non-zero pixel is foreground.
pub fn read_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let img = read_gray(path)?;
    let bits = img.data().iter().map(|&v| v != 0).collect();
    BinaryMask::from_bits(img.width(), img.height(), bits)
}

/// Writes a mask as an 8-bit PNG with foreground 255.
pub fn write_mask(path: impl AsRef<Path>, mask: &BinaryMask) -> Result<()> {
    let data: Vec<u8> = mask
        .bits()
        .iter()
        .map(|&b| if b { 255 } else { 0 })
        .collect();
    encode(
        path.as_ref(),
        mask.width(),
        mask.height(),
        ColorType::Grayscale,
        PngDepth::Eight,
        &data,
    )
}
