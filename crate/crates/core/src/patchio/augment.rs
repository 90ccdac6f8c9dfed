use crate::error::{Error, Result};
use crate::grid::Grid;

/// Mirror about the horizontal axis (reverses row order).
pub fn flip_x<T: Copy>(patch: &Grid<T>) -> Grid<T> {
    let mut data = Vec::with_capacity(patch.data().len());
    for r in (0..patch.rows()).rev() {
        data.extend_from_slice(patch.row(r));
    }
    Grid::new(patch.rows(), patch.cols(), data).expect("same shape")
}

/// Counterclockwise quarter turn about the grid centre.
pub fn rotate90<T: Copy>(patch: &Grid<T>) -> Result<Grid<T>> {
    if !patch.is_square() {
        return Err(Error::shape(format!("rotate90 needs a square grid, got {}x{}", patch.rows(), patch.cols())));
    }
    let n = patch.rows();
    let mut data = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            data.push(patch.get(c, n - 1 - r));
        }
    }
    Grid::new(n, n, data)
}
