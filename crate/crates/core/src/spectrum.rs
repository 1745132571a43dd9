/// Per-mode intensities over a detuning grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub nu: Vec<f64>,
    /// `I_k` at `detection_time`.
    pub intensity_at_detection: Vec<f64>,
    /// `I_k^T`, the intensity integrated over all detection time.
    pub integrated: Vec<f64>,
    pub detection_time: f64,
    pub t_end: f64,
    /// Parameter snapshot as ordered key/value pairs.
    pub params: Vec<(String, String)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Column {
    Detection,
    Integrated,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }

    pub fn column(&self, which: Column) -> &[f64] {
        match which {
            Column::Detection => &self.intensity_at_detection,
            Column::Integrated => &self.integrated,
        }
    }

    /// Multiplies both intensity columns by `factor`.
    pub fn scaled(&self, factor: f64) -> Spectrum {
        let mut out = self.clone();
        out.intensity_at_detection
            .iter_mut()
            .for_each(|v| *v *= factor);
        out.integrated.iter_mut().for_each(|v| *v *= factor);
        out
    }

    /// Divides each intensity column by its own maximum.
    pub fn unit_max(&self) -> Spectrum {
        let mut out = self.clone();
        for col in [&mut out.intensity_at_detection, &mut out.integrated] {
            let max = col.iter().cloned().fold(0.0, f64::max);
            if max > 0.0 {
                col.iter_mut().for_each(|v| *v /= max);
            }
        }
        out
    }

    /// Linear interpolation of a column at detuning `nu`; clamps outside the grid.
    pub fn interpolate(&self, which: Column, nu: f64) -> f64 {
        let values = self.column(which);
        let grid = &self.nu;
        if nu <= grid[0] {
            return values[0];
        }
        let last = grid.len() - 1;
        if nu >= grid[last] {
            return values[last];
        }
        let hi = grid.partition_point(|&x| x <= nu).min(last);
        let lo = hi - 1;
        let w = (nu - grid[lo]) / (grid[hi] - grid[lo]);
        values[lo] * (1.0 - w) + values[hi] * w
    }
}
