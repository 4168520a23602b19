//! Shared test support: independent oracles and synthetic data generators.
//!
//! Everything here deliberately avoids the library's implementation paths:
//! the curve comes from the recursive quadrant construction, byte coloring
//! and histogramming are naive per-pixel table code, and nearest-node search
//! is a plain linear scan.

// Each test binary uses its own subset of these helpers.
#![allow(dead_code)]

use binsight::binviz::Rgb;
use binsight::pipeline::{DatasetRow, Label};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Visit order of the order-`n` Hilbert curve by recursive construction:
/// four transformed copies of the order-`n-1` curve.
pub fn hilbert_visit_order(order: u8) -> Vec<(u32, u32)> {
    if order == 0 {
        return vec![(0, 0)];
    }
    let prev = hilbert_visit_order(order - 1);
    let s = 1u32 << (order - 1);
    let mut seq = Vec::with_capacity(prev.len() * 4);
    // bottom-left quadrant: transposed copy
    seq.extend(prev.iter().map(|&(x, y)| (y, x)));
    // top-left: translated copy
    seq.extend(prev.iter().map(|&(x, y)| (x, y + s)));
    // top-right: translated copy
    seq.extend(prev.iter().map(|&(x, y)| (x + s, y + s)));
    // bottom-right: anti-transposed copy
    seq.extend(prev.iter().map(|&(x, y)| (2 * s - 1 - y, s - 1 - x)));
    seq
}

/// Naive byte coloring, written out as an independent table.
pub fn byte_color_oracle(b: u8) -> Rgb {
    if b == 0x00 {
        Rgb::new(0, 0, 0)
    } else if b == 0xFF {
        Rgb::new(255, 255, 255)
    } else if (0x20..=0x7E).contains(&b) {
        Rgb::new(0, 0, 255)
    } else if b <= 0x1F || b == 0x7F {
        Rgb::new(0, 255, 0)
    } else {
        Rgb::new(255, 0, 0)
    }
}

/// Naive per-pixel rendering oracle: same sampling contract, independent
/// curve and coloring code. Returns `(side, row-major pixels)`.
pub fn render_oracle(bytes: &[u8], max_side: u32) -> (u32, Vec<Rgb>) {
    let len = bytes.len() as u64;
    let cap = max_side.trailing_zeros() as u8;
    let mut n = 1u8;
    while n < cap && (1u64 << (2 * n)) < len {
        n += 1;
    }
    let side = 1u32 << n;
    let cells = 1u64 << (2 * n);
    let visit = hilbert_visit_order(n);
    let mut pixels = vec![byte_color_oracle(0x00); (side * side) as usize];
    for d in 0..cells {
        let byte = if len > cells {
            bytes[((u128::from(d) * u128::from(len)) / u128::from(cells)) as usize]
        } else if d < len {
            bytes[d as usize]
        } else {
            0x00
        };
        let (x, y) = visit[d as usize];
        pixels[(y * side + x) as usize] = byte_color_oracle(byte);
    }
    (side, pixels)
}

/// Naive stripe-histogram oracle over rendered pixels (3-3-2 binning).
pub fn extract_oracle(side: u32, pixels: &[Rgb]) -> Vec<f64> {
    let height = side / 4;
    let mut out = Vec::with_capacity(1024);
    for stripe in 0..4u32 {
        let mut counts = [0u64; 256];
        for y in (stripe * height)..((stripe + 1) * height) {
            for x in 0..side {
                let p = pixels[(y * side + x) as usize];
                let bin =
                    ((p.r >> 5) as usize) << 5 | ((p.g >> 5) as usize) << 2 | (p.b >> 6) as usize;
                counts[bin] += 1;
            }
        }
        let total = (height * side) as f64;
        out.extend(counts.iter().map(|&c| c as f64 / total));
    }
    out
}

/// Linear-scan nearest neighbor; ties break to the smallest id.
pub fn nearest_scan(nodes: &[(u64, Vec<f64>)], query: &[f64]) -> (u64, f64) {
    let mut best: Option<(u64, f64)> = None;
    for (id, weight) in nodes {
        let d = query
            .iter()
            .zip(weight)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        match best {
            Some((_, bd)) if d >= bd => {}
            _ => best = Some((*id, d)),
        }
    }
    best.expect("non-empty node set")
}

/// Standard normal draw (Box-Muller).
pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Two 2-D Gaussian clusters: benign at the origin, malicious at
/// `(separation, 0)`, `n_per_class` points each.
pub fn two_gaussian_dataset(
    n_per_class: usize,
    sigma: f64,
    separation: f64,
    seed: u64,
) -> Vec<DatasetRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(2 * n_per_class);
    for i in 0..(2 * n_per_class) {
        let malicious = i % 2 == 1;
        let cx = if malicious { separation } else { 0.0 };
        rows.push(DatasetRow {
            values: vec![cx + sigma * gaussian(&mut rng), sigma * gaussian(&mut rng)],
            label: if malicious {
                Label::Malicious
            } else {
                Label::Benign
            },
            file_ext: None,
        });
    }
    rows
}
