//! Hilbert space-filling curve on a `2^n x 2^n` grid.
//!
//! The curve visits every cell of the grid exactly once, and consecutive
//! curve positions are always grid-adjacent. Laying a file's bytes along the
//! curve therefore keeps byte runs spatially grouped in the image, which is
//! what makes structural patterns visible after rendering.
//!
//! Orientation is fixed: the curve starts at `(0, 0)` and the order-1
//! visiting sequence is `(0,0), (0,1), (1,1), (1,0)`.

use crate::error::{Error, Result};

/// Curve order `n`. The grid side is `2^n` and the curve has `4^n` cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CurveOrder(u8);

impl CurveOrder {
    /// Largest supported order (grid side 65536).
    pub const MAX: u8 = 16;

    pub fn new(n: u8) -> Result<Self> {
        if n == 0 || n > Self::MAX {
            return Err(Error::InvalidOrder { n: u32::from(n) });
        }
        Ok(CurveOrder(n))
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Grid side length, `2^n`.
    pub fn side(self) -> u32 {
        1u32 << self.0
    }

    /// Number of cells on the curve, `4^n`.
    pub fn cells(self) -> u64 {
        1u64 << (2 * self.0)
    }
}

/// A cell of the grid; `x` is the column, `y` the row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridPoint {
    pub x: u32,
    pub y: u32,
}

/// Coordinates of the `d`-th cell along the order-`n` curve.
///
/// ```
/// use binsight::hilbert::{index_to_point, CurveOrder};
///
/// let order = CurveOrder::new(1).unwrap();
/// let visits: Vec<(u32, u32)> = (0..4)
///     .map(|d| index_to_point(order, d).map(|p| (p.x, p.y)).unwrap())
///     .collect();
/// assert_eq!(visits, [(0, 0), (0, 1), (1, 1), (1, 0)]);
/// ```
pub fn index_to_point(order: CurveOrder, d: u64) -> Result<GridPoint> {
    if d >= order.cells() {
        return Err(Error::IndexOutOfRange {
            index: d,
            order: order.get(),
            cells: order.cells(),
        });
    }
    Ok(index_to_point_unchecked(order, d))
}

/// Curve position of a grid cell; exact inverse of [`index_to_point`].
pub fn point_to_index(order: CurveOrder, p: GridPoint) -> Result<u64> {
    let side = order.side();
    if p.x >= side || p.y >= side {
        return Err(Error::PointOutOfRange {
            x: p.x,
            y: p.y,
            order: order.get(),
        });
    }
    let (mut x, mut y) = (p.x, p.y);
    let mut d = 0u64;
    let mut s = side / 2;
    while s > 0 {
        let rx = u32::from(x & s > 0);
        let ry = u32::from(y & s > 0);
        d += u64::from(s) * u64::from(s) * u64::from((3 * rx) ^ ry);
        // Drop the processed high bit so the rotation acts inside the
        // sub-square; equivalent to the usual signed-arithmetic variant.
        x &= s - 1;
        y &= s - 1;
        rotate(s, &mut x, &mut y, rx, ry);
        s /= 2;
    }
    Ok(d)
}

/// Smallest order whose cell count holds `byte_count` bytes, capped so the
/// grid side does not exceed `max_side`. Zero bytes still get a 2x2 grid.
pub fn order_for_length(byte_count: u64, max_side: u32) -> Result<CurveOrder> {
    let cap = order_of_side(max_side)?;
    let mut n = 1u8;
    while n < cap && (1u64 << (2 * n)) < byte_count {
        n += 1;
    }
    CurveOrder::new(n)
}

pub(crate) fn index_to_point_unchecked(order: CurveOrder, d: u64) -> GridPoint {
    let side = order.side();
    let (mut x, mut y) = (0u32, 0u32);
    let mut t = d;
    let mut s = 1u32;
    while s < side {
        let rx = (t >> 1) as u32 & 1;
        let ry = (t as u32 ^ rx) & 1;
        rotate(s, &mut x, &mut y, rx, ry);
        x += s * rx;
        y += s * ry;
        t >>= 2;
        s <<= 1;
    }
    GridPoint { x, y }
}

/// Rotate/reflect a sub-square of side `s`; callers keep `x, y < s`.
fn rotate(s: u32, x: &mut u32, y: &mut u32, rx: u32, ry: u32) {
    if ry == 0 {
        if rx == 1 {
            *x = s - 1 - *x;
            *y = s - 1 - *y;
        }
        std::mem::swap(x, y);
    }
}

fn order_of_side(side: u32) -> Result<u8> {
    if !(2..=65536).contains(&side) || !side.is_power_of_two() {
        return Err(Error::InvalidMaxSide { side });
    }
    Ok(side.trailing_zeros() as u8)
}
