//! Stripe-histogram feature extraction.
//!
//! The image is split into four equal-height horizontal stripes (top,
//! upper-middle, lower-middle, bottom). Each stripe contributes one
//! 256-bin color histogram, normalized by the stripe's pixel count; the
//! four histograms concatenate to the fixed 1024-length feature vector.

use std::fmt;
use std::str::FromStr;

use crate::binviz::{ByteImage, Rgb};
use crate::error::{Error, Result};

/// Feature vector length: 4 stripes x 256 bins.
pub const FEATURE_LEN: usize = 1024;
pub const STRIPE_COUNT: usize = 4;
pub const BINS_PER_STRIPE: usize = 256;

/// One of the four horizontal bands of the image, top to bottom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StripeId {
    Top,
    UpperMiddle,
    LowerMiddle,
    Bottom,
}

impl StripeId {
    pub const ALL: [StripeId; STRIPE_COUNT] = [
        StripeId::Top,
        StripeId::UpperMiddle,
        StripeId::LowerMiddle,
        StripeId::Bottom,
    ];

    /// Position of this stripe in the concatenation order.
    pub fn index(self) -> usize {
        match self {
            StripeId::Top => 0,
            StripeId::UpperMiddle => 1,
            StripeId::LowerMiddle => 2,
            StripeId::Bottom => 3,
        }
    }
}

/// How a stripe's pixels map to histogram bins.
///
/// `Rgb332` quantizes the pixel color to 8 bits (3-3-2); `RawByte` bins the
/// sampled source byte itself. Models record which variant produced their
/// training vectors, and the two must never be mixed within one model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExtractorVariant {
    #[default]
    Rgb332,
    RawByte,
}

impl ExtractorVariant {
    pub fn name(self) -> &'static str {
        match self {
            ExtractorVariant::Rgb332 => "rgb332",
            ExtractorVariant::RawByte => "raw-byte",
        }
    }
}

impl fmt::Display for ExtractorVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExtractorVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rgb332" => Ok(ExtractorVariant::Rgb332),
            "raw-byte" => Ok(ExtractorVariant::RawByte),
            other => Err(Error::InvalidParam(format!(
                "unknown extractor variant '{other}' (expected 'rgb332' or 'raw-byte')"
            ))),
        }
    }
}

/// The fixed-length feature vector of one image.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
    source_ext: Option<String>,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, source_ext: Option<String>) -> Result<Self> {
        if values.len() != FEATURE_LEN {
            return Err(Error::DimensionMismatch {
                expected: FEATURE_LEN,
                got: values.len(),
            });
        }
        Ok(FeatureVector { values, source_ext })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn source_ext(&self) -> Option<&str> {
        self.source_ext.as_deref()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// 8-bit color quantization: 3 bits of red, 3 of green, 2 of blue.
pub fn quantize_color(p: Rgb) -> u8 {
    ((p.r >> 5) << 5) | ((p.g >> 5) << 2) | (p.b >> 6)
}

/// Normalized 256-bin histogram of one stripe under the default
/// [`ExtractorVariant::Rgb332`] binning.
pub fn stripe_histogram(img: &ByteImage, stripe: StripeId) -> Result<[f64; BINS_PER_STRIPE]> {
    stripe_histogram_with(img, stripe, ExtractorVariant::Rgb332)
}

pub fn stripe_histogram_with(
    img: &ByteImage,
    stripe: StripeId,
    variant: ExtractorVariant,
) -> Result<[f64; BINS_PER_STRIPE]> {
    let side = img.side();
    if side < STRIPE_COUNT as u32 {
        return Err(Error::ImageTooSmall { side });
    }
    let height = side / STRIPE_COUNT as u32;
    let row_start = stripe.index() as u32 * height;

    let mut counts = [0u64; BINS_PER_STRIPE];
    let start = (row_start * side) as usize;
    let end = ((row_start + height) * side) as usize;
    match variant {
        ExtractorVariant::Rgb332 => {
            for &px in &img.pixels()[start..end] {
                counts[quantize_color(px) as usize] += 1;
            }
        }
        ExtractorVariant::RawByte => {
            for &byte in &img.cells()[start..end] {
                counts[byte as usize] += 1;
            }
        }
    }

    let total = (height * side) as f64;
    let mut hist = [0.0; BINS_PER_STRIPE];
    for (h, &c) in hist.iter_mut().zip(&counts) {
        *h = c as f64 / total;
    }
    Ok(hist)
}

/// Extract the 1024-length feature vector with the default variant.
pub fn extract(img: &ByteImage) -> Result<FeatureVector> {
    extract_with(img, ExtractorVariant::Rgb332)
}

/// Extract the 1024-length feature vector: stripe histograms concatenated in
/// top, upper-middle, lower-middle, bottom order.
pub fn extract_with(img: &ByteImage, variant: ExtractorVariant) -> Result<FeatureVector> {
    let mut values = Vec::with_capacity(FEATURE_LEN);
    for stripe in StripeId::ALL {
        values.extend_from_slice(&stripe_histogram_with(img, stripe, variant)?);
    }
    FeatureVector::new(values, img.file_ext().map(str::to_owned))
}
