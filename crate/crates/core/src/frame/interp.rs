/// Cubic Hermite interpolation of vector-valued samples on a uniform grid
/// `t_k = k h`, `k = 0..=intervals`.
#[derive(Clone, Debug)]
pub(crate) struct GridHermite {
    h: f64,
    intervals: usize,
    width: usize,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl GridHermite {
    pub(crate) fn new(h: f64, width: usize, values: Vec<f64>, slopes: Vec<f64>) -> Self {
        assert!(width > 0 && values.len() % width == 0 && values.len() == slopes.len());
        let intervals = values.len() / width - 1;
        assert!(intervals >= 1);
        Self {
            h,
            intervals,
            width,
            values,
            slopes,
        }
    }

    /// Slopes from second-order finite differences of the samples.
    pub(crate) fn with_fd_slopes(h: f64, width: usize, values: Vec<f64>) -> Self {
        let rows = values.len() / width;
        let mut slopes = vec![0.0; values.len()];
        let at = |k: usize, j: usize| values[k * width + j];
        for k in 0..rows {
            for j in 0..width {
                slopes[k * width + j] = if rows < 3 {
                    (at(rows - 1, j) - at(0, j)) / (h * (rows - 1) as f64)
                } else if k == 0 {
                    (-3.0 * at(0, j) + 4.0 * at(1, j) - at(2, j)) / (2.0 * h)
                } else if k == rows - 1 {
                    (3.0 * at(k, j) - 4.0 * at(k - 1, j) + at(k - 2, j)) / (2.0 * h)
                } else {
                    (at(k + 1, j) - at(k - 1, j)) / (2.0 * h)
                };
            }
        }
        Self::new(h, width, values, slopes)
    }

    #[cfg(test)]
    pub(crate) fn span(&self) -> f64 {
        self.h * self.intervals as f64
    }

    #[inline]
    pub(crate) fn eval(&self, t: f64, out: &mut [f64]) {
        let u = (t / self.h).clamp(0.0, self.intervals as f64);
        let k = (u.floor() as usize).min(self.intervals - 1);
        let s = u - k as f64;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = (s3 - 2.0 * s2 + s) * self.h;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = (s3 - s2) * self.h;
        let a = k * self.width;
        let b = a + self.width;
        for j in 0..self.width {
            out[j] = h00 * self.values[a + j]
                + h10 * self.slopes[a + j]
                + h01 * self.values[b + j]
                + h11 * self.slopes[b + j];
        }
    }

    #[inline]
    pub(crate) fn eval_scalar(&self, t: f64) -> f64 {
        let mut out = [0.0];
        self.eval(t, &mut out);
        out[0]
    }
}
