//! Rectangular sample grids for rendered fields (intensities, quasiprobability
//! distributions). Row-major storage: `values[iy * nx + ix]`.

/// Uniformly sampled scalar field on an axis-aligned rectangle. Sample `(ix, iy)`
/// sits at the cell center of a `nx` by `ny` partition of `[x0, x1] x [y0, y1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid2 {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl Grid2 {
    /// Fill a grid by evaluating `f(x, y)` at every cell center.
    pub fn sample<F: Fn(f64, f64) -> f64>(
        (x0, x1): (f64, f64),
        (y0, y1): (f64, f64),
        nx: usize,
        ny: usize,
        f: F,
    ) -> Self {
        assert!(nx > 0 && ny > 0, "grid must have at least one cell per axis");
        let mut values = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            let y = y0 + (y1 - y0) * (iy as f64 + 0.5) / ny as f64;
            for ix in 0..nx {
                let x = x0 + (x1 - x0) * (ix as f64 + 0.5) / nx as f64;
                values.push(f(x, y));
            }
        }
        Self { x0, x1, y0, y1, nx, ny, values }
    }

    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nx + ix]
    }

    /// Coordinates of a sample point.
    pub fn point(&self, ix: usize, iy: usize) -> (f64, f64) {
        (
            self.x0 + (self.x1 - self.x0) * (ix as f64 + 0.5) / self.nx as f64,
            self.y0 + (self.y1 - self.y0) * (iy as f64 + 0.5) / self.ny as f64,
        )
    }

    /// Midpoint-rule integral of the sampled field over the rectangle.
    pub fn integral(&self) -> f64 {
        let cell = (self.x1 - self.x0) / self.nx as f64 * (self.y1 - self.y0) / self.ny as f64;
        self.values.iter().sum::<f64>() * cell
    }
}
