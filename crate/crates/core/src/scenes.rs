//! Synthetic test fields.

use std::f64::consts::{PI, TAU};

use crate::error::Result;
use crate::field::{AngleField, GridSpec, Mask};

/// Hue of pure blue.
pub const BLUE: f64 = 4.0 * PI / 3.0;
/// Hue of pure green.
pub const GREEN: f64 = 2.0 * PI / 3.0;

/// `u(i, j) = 4π i / rows mod 2π` with 1-based row index `i`: two full turns
/// down the image, wrapping between rows `rows/2 - 2` and `rows/2 - 1`
/// (0-based) and again at the last row.
pub fn rainbow(rows: usize, cols: usize) -> Result<AngleField> {
    let grid = GridSpec::image(rows, cols)?;
    let values = (0..grid.len())
        .map(|k| {
            // reduce in integers so the wrap lands exactly on 0
            let i = grid.row_col(k).0 + 1;
            ((2 * i) % rows) as f64 * TAU / rows as f64
        })
        .collect();
    AngleField::new(grid, values)
}

/// The interior row pair `(above, below)` where the rainbow wraps from just
/// under `2π` back to 0.
pub fn rainbow_wrap_rows(rows: usize) -> (usize, usize) {
    (rows / 2 - 2, rows / 2 - 1)
}

/// Two plateaus split by a vertical edge: blue on the left half, green on
/// the right.
pub fn two_color_blocks(rows: usize, cols: usize) -> Result<AngleField> {
    let grid = GridSpec::image(rows, cols)?;
    let edge = cols / 2;
    let values = (0..grid.len())
        .map(|k| if grid.row_col(k).1 < edge { BLUE } else { GREEN })
        .collect();
    AngleField::new(grid, values)
}

/// Top-left corners of the nine `side × side` squares of [`block_mask`].
pub fn block_squares(rows: usize, cols: usize, side: usize) -> Vec<(usize, usize)> {
    let place = |n: usize| {
        let mid = n / 2 - side / 2;
        let first = (mid - side) / 2;
        [first, mid, n - side - first]
    };
    let rs = place(rows);
    let cs = place(cols);
    rs.iter().flat_map(|&r| cs.iter().map(move |&c| (r, c))).collect()
}

/// Nine unknown squares on a 3×3 layout. The middle column of squares is
/// centered on the edge of [`two_color_blocks`]; the other six lie inside a
/// plateau.
pub fn block_mask(rows: usize, cols: usize, side: usize) -> Result<Mask> {
    let grid = GridSpec::image(rows, cols)?;
    let squares = block_squares(rows, cols, side);
    Mask::from_unknown(grid, |k| {
        let (r, c) = grid.row_col(k);
        squares
            .iter()
            .any(|&(r0, c0)| (r0..r0 + side).contains(&r) && (c0..c0 + side).contains(&c))
    })
}

fn smootherstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (t * (6.0 * t - 15.0) + 10.0)
}

/// A wrapped phase on `(0, 1)` that rests at 5.5, climbs smoothly by 1.5
/// radians across the wrap at `2π` over the middle 40% of the interval, and
/// rests again. Sampled at cell centers.
pub fn phase_signal(n: usize) -> Result<AngleField> {
    let grid = GridSpec::line(n, 1.0)?;
    AngleField::from_fn(grid, |x| 5.5 + 1.5 * smootherstep((x[0] - 0.3) / 0.4))
}
