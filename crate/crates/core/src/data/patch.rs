use crate::error::{Error, Result};
use crate::scalar::Real;

use super::SceneCube;

/// A `size x size x bands` window around a labeled pixel, stored
/// row-major with the band index fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Patch<T> {
    pub size: usize,
    pub bands: usize,
    pub values: Vec<T>,
    pub center_row: usize,
    pub center_col: usize,
    pub label: u16,
}

impl<T: Real> Patch<T> {
    pub fn pixel(&self, row: usize, col: usize) -> &[T] {
        let start = (row * self.size + col) * self.bands;
        &self.values[start..start + self.bands]
    }

    pub fn center(&self) -> &[T] {
        let half = self.size / 2;
        self.pixel(half, half)
    }
}

/// Mirror reflection about the border without repeating the edge sample:
/// `-1 -> 1` and `n -> n - 2`. Offsets further out keep bouncing.
pub fn reflect_index(i: isize, n: usize) -> usize {
    assert!(n > 0, "cannot reflect into an empty axis");
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

pub fn extract_patch<T: Real>(
    cube: &SceneCube<T>,
    row: usize,
    col: usize,
    size: usize,
) -> Result<Patch<T>> {
    if size.is_multiple_of(2) {
        return Err(Error::Config(format!("patch size must be odd, got {size}")));
    }
    if row >= cube.height || col >= cube.width {
        return Err(Error::Config(format!(
            "pixel ({row}, {col}) lies outside the {}x{} scene",
            cube.height, cube.width
        )));
    }
    let label = cube.label(row, col);
    if label == 0 {
        return Err(Error::Split {
            class: 0,
            message: format!("pixel ({row}, {col}) is unlabeled"),
        });
    }
    Ok(window(cube, row, col, size, label))
}

/// Same window as [`extract_patch`] without the label requirement; used
/// when rendering every pixel of a scene.
pub(crate) fn window<T: Real>(
    cube: &SceneCube<T>,
    row: usize,
    col: usize,
    size: usize,
    label: u16,
) -> Patch<T> {
    let half = (size / 2) as isize;
    let mut values = Vec::with_capacity(size * size * cube.bands);
    for dr in -half..=half {
        let r = reflect_index(row as isize + dr, cube.height);
        for dc in -half..=half {
            let c = reflect_index(col as isize + dc, cube.width);
            values.extend_from_slice(cube.pixel(r, c));
        }
    }
    Patch {
        size,
        bands: cube.bands,
        values,
        center_row: row,
        center_col: col,
        label,
    }
}
