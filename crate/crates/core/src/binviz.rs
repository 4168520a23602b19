//! Byte-stream visualization.
//!
//! Each sampled byte is classified against the ASCII table into one of five
//! color classes and placed on a square grid along the Hilbert curve:
//! printable bytes render blue, control bytes green, extended bytes red, and
//! the two singleton classes `0x00` (null) and `0xFF` (non-breaking space)
//! render black and white.

use std::path::Path;

use crate::error::{Error, Result};
use crate::hilbert::{self, index_to_point_unchecked};

/// Default cap on the image side; files larger than `256^2` bytes are
/// downsampled rather than rendered onto a bigger grid.
pub const DEFAULT_MAX_SIDE: u32 = 256;

/// ASCII-derived classification of a byte value. The five classes partition
/// the byte range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColorClass {
    /// `0x20..=0x7E`
    Printable,
    /// `0x01..=0x1F` and `0x7F`
    Control,
    /// `0x80..=0xFE`
    Extended,
    /// `0x00`
    Null,
    /// `0xFF`
    NonBreaking,
}

impl ColorClass {
    pub const ALL: [ColorClass; 5] = [
        ColorClass::Printable,
        ColorClass::Control,
        ColorClass::Extended,
        ColorClass::Null,
        ColorClass::NonBreaking,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ColorClass::Printable => "printable",
            ColorClass::Control => "control",
            ColorClass::Extended => "extended",
            ColorClass::Null => "null",
            ColorClass::NonBreaking => "non-breaking",
        }
    }

    /// Position of this class in [`ColorClass::ALL`].
    pub fn index(self) -> usize {
        match self {
            ColorClass::Printable => 0,
            ColorClass::Control => 1,
            ColorClass::Extended => 2,
            ColorClass::Null => 3,
            ColorClass::NonBreaking => 4,
        }
    }
}

/// An 8-bit RGB pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rgb {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl Rgb {
    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Rgb { r, g, b }
    }
}

pub fn classify_byte(b: u8) -> ColorClass {
    match b {
        0x00 => ColorClass::Null,
        0xFF => ColorClass::NonBreaking,
        0x20..=0x7E => ColorClass::Printable,
        0x01..=0x1F | 0x7F => ColorClass::Control,
        0x80..=0xFE => ColorClass::Extended,
    }
}

/// Fixed palette: saturated primaries plus black and white.
pub fn class_to_rgb(c: ColorClass) -> Rgb {
    match c {
        ColorClass::Printable => Rgb::new(0, 0, 255),
        ColorClass::Control => Rgb::new(0, 255, 0),
        ColorClass::Extended => Rgb::new(255, 0, 0),
        ColorClass::Null => Rgb::new(0, 0, 0),
        ColorClass::NonBreaking => Rgb::new(255, 255, 255),
    }
}

/// FNV-1a digest of the palette, recorded in model files so a model is never
/// applied to images rendered with different color semantics.
pub fn palette_hash() -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |byte: u8| {
        h ^= u64::from(byte);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    };
    for class in ColorClass::ALL {
        for byte in class.name().bytes() {
            eat(byte);
        }
        let rgb = class_to_rgb(class);
        eat(rgb.r);
        eat(rgb.g);
        eat(rgb.b);
    }
    format!("{h:016x}")
}

/// A rendered byte image: one palette pixel per grid cell, plus the sampled
/// byte that produced it (kept for the raw-byte extractor variant).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ByteImage {
    side: u32,
    cells: Vec<u8>,
    pixels: Vec<Rgb>,
    source_len: u64,
    file_ext: Option<String>,
}

impl ByteImage {
    pub fn side(&self) -> u32 {
        self.side
    }

    /// Palette pixels, row-major.
    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    /// Sampled source bytes, row-major (padding cells hold `0x00`).
    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn pixel(&self, x: u32, y: u32) -> Rgb {
        self.pixels[(y * self.side + x) as usize]
    }

    pub fn source_len(&self) -> u64 {
        self.source_len
    }

    pub fn file_ext(&self) -> Option<&str> {
        self.file_ext.as_deref()
    }
}

/// Render a byte stream onto the Hilbert grid.
///
/// The order is chosen by [`hilbert::order_for_length`]. When the input is
/// longer than the grid, cell `d` samples the byte at `floor(d * len / cells)`;
/// shorter inputs are laid out directly and the curve tail is padded with
/// `0x00`. An empty input yields the 2x2 all-black image.
pub fn render(bytes: &[u8], max_side: u32, file_ext: Option<&str>) -> Result<ByteImage> {
    let len = bytes.len() as u64;
    let order = hilbert::order_for_length(len, max_side)?;
    let side = order.side();
    let cell_count = order.cells();

    let mut cells = vec![0u8; cell_count as usize];
    let mut pixels = vec![class_to_rgb(ColorClass::Null); cell_count as usize];
    for d in 0..cell_count {
        let byte = if len > cell_count {
            bytes[((u128::from(d) * u128::from(len)) / u128::from(cell_count)) as usize]
        } else if d < len {
            bytes[d as usize]
        } else {
            0x00
        };
        let p = index_to_point_unchecked(order, d);
        let idx = (p.y * side + p.x) as usize;
        cells[idx] = byte;
        pixels[idx] = class_to_rgb(classify_byte(byte));
    }

    Ok(ByteImage {
        side,
        cells,
        pixels,
        source_len: len,
        file_ext: file_ext.map(|e| e.to_ascii_lowercase()),
    })
}

/// Write the image as an 8-bit RGB PNG.
pub fn write_png(img: &ByteImage, path: &Path) -> Result<()> {
    let mut raw = Vec::with_capacity(img.pixels.len() * 3);
    for px in &img.pixels {
        raw.extend_from_slice(&[px.r, px.g, px.b]);
    }
    let buf = image::RgbImage::from_raw(img.side, img.side, raw)
        .expect("buffer length matches side * side * 3");
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| Error::Png {
            path: path.into(),
            source,
        })
}
