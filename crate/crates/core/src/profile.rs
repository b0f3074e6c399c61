//! One-dimensional intensity line-outs with physical coordinates.

/// Intensity samples along one axis. Sample `k` covers
/// `[coords[k] - pitch/2, coords[k] + pitch/2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineProfile {
    pub coords: Vec<f64>,
    pub pitch: f64,
    pub values: Vec<f64>,
}

impl LineProfile {
    pub fn new(coords: Vec<f64>, pitch: f64, values: Vec<f64>) -> Self {
        debug_assert_eq!(coords.len(), values.len());
        LineProfile {
            coords,
            pitch,
            values,
        }
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.pitch
    }

    fn overlap(&self, k: usize, lo: f64, hi: f64) -> f64 {
        let a = self.coords[k] - 0.5 * self.pitch;
        let b = self.coords[k] + 0.5 * self.pitch;
        (b.min(hi) - a.max(lo)).max(0.0)
    }

    fn index_range(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let first = self.coords[0];
        let n = self.coords.len();
        let start = (((lo - first) / self.pitch).floor() as isize - 1).clamp(0, n as isize) as usize;
        let end = (((hi - first) / self.pitch).ceil() as isize + 2).clamp(0, n as isize) as usize;
        start..end.max(start)
    }

    /// ∫ profile over `[lo, hi]`, splitting samples that straddle an edge.
    pub fn integrate(&self, lo: f64, hi: f64) -> f64 {
        self.index_range(lo, hi)
            .map(|k| self.values[k] * self.overlap(k, lo, hi))
            .sum()
    }

    pub fn centroid(&self) -> f64 {
        let (mut m0, mut m1) = (0.0, 0.0);
        for (c, v) in self.coords.iter().zip(&self.values) {
            m0 += v;
            m1 += v * c;
        }
        m1 / m0
    }

    /// Centroid restricted to `[center - half_width, center + half_width]`.
    pub fn centroid_within(&self, center: f64, half_width: f64) -> f64 {
        let (lo, hi) = (center - half_width, center + half_width);
        let (mut m0, mut m1) = (0.0, 0.0);
        for k in self.index_range(lo, hi) {
            let w = self.values[k] * self.overlap(k, lo, hi);
            m0 += w;
            m1 += w * self.coords[k];
        }
        m1 / m0
    }

    pub fn peak_index(&self) -> usize {
        let mut best = 0;
        for (k, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = k;
            }
        }
        best
    }

    /// Index of the largest sample within `half_width` of `center`.
    pub fn peak_near(&self, center: f64, half_width: f64) -> usize {
        let mut range = self.index_range(center - half_width, center + half_width);
        let first = range.next().unwrap_or(0);
        range.fold(first, |best, k| {
            if (self.coords[k] - center).abs() <= half_width && self.values[k] > self.values[best] {
                k
            } else {
                best
            }
        })
    }

    /// Distance between the first minima on either side of the peak at
    /// `peak`, each refined by a parabola through the three lowest samples.
    pub fn first_zero_width(&self, peak: usize) -> Option<f64> {
        let right = self.walk_to_minimum(peak, 1)?;
        let left = self.walk_to_minimum(peak, -1)?;
        Some(right - left)
    }

    fn walk_to_minimum(&self, peak: usize, dir: isize) -> Option<f64> {
        let n = self.values.len() as isize;
        let mut k = peak as isize;
        loop {
            let next = k + dir;
            if next <= 0 || next >= n - 1 {
                return None;
            }
            if self.values[next as usize] > self.values[k as usize] && k != peak as isize {
                break;
            }
            k = next;
        }
        let k = k as usize;
        let (y0, y1, y2) = (self.values[k - 1], self.values[k], self.values[k + 1]);
        let denom = y0 - 2.0 * y1 + y2;
        let shift = if denom > 0.0 {
            (0.5 * (y0 - y2) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        Some(self.coords[k] + shift * self.pitch)
    }
}
