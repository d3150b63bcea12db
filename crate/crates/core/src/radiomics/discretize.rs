//! Gray-level discretization of a masked region.

use crate::volume::{Dims, Mask, ScalarVolume};

/// Fixed-width bin index, 1-based from the bin holding the minimum.
pub fn bin_width_levels(values: &[f64], bin_width: f64) -> Vec<u32> {
    assert!(bin_width > 0.0, "bin width must be positive");
    let Some(min) = values.iter().copied().reduce(f64::min) else {
        return Vec::new();
    };
    let base = (min / bin_width).floor();
    values
        .iter()
        .map(|&v| ((v / bin_width).floor() - base) as u32 + 1)
        .collect()
}

/// Fixed-count bins spanning `[min, max]`; the maximum falls in the last
/// bin and a constant region maps entirely to level 1.
pub fn bin_count_levels(values: &[f64], bin_count: usize) -> Vec<u32> {
    assert!(bin_count > 0, "bin count must be positive");
    let Some(min) = values.iter().copied().reduce(f64::min) else {
        return Vec::new();
    };
    let max = values.iter().copied().fold(min, f64::max);
    if max == min {
        return vec![1; values.len()];
    }
    let n = bin_count as f64;
    values
        .iter()
        .map(|&v| (((v - min) / (max - min) * n).floor() as u32 + 1).min(bin_count as u32))
        .collect()
}

/// Discretized region of interest: one gray level per grid voxel, 0 outside.
#[derive(Clone, Debug)]
pub struct GrayRoi {
    pub dims: Dims,
    pub levels: Vec<u32>,
    /// Voxel indices inside the region, ascending.
    pub voxels: Vec<usize>,
    /// Gray levels that occur in the region, ascending.
    pub present: Vec<u32>,
}

impl GrayRoi {
    pub fn from_levels(dims: Dims, voxels: Vec<usize>, voxel_levels: &[u32]) -> Self {
        let mut levels = vec![0u32; dims.len()];
        for (&idx, &l) in voxels.iter().zip(voxel_levels) {
            debug_assert!(l > 0);
            levels[idx] = l;
        }
        let mut present: Vec<u32> = voxel_levels.to_vec();
        present.sort_unstable();
        present.dedup();
        Self {
            dims,
            levels,
            voxels,
            present,
        }
    }

    /// Discretizes `image` inside `mask` into `bin_count` fixed-count bins.
    pub fn with_bin_count(image: &ScalarVolume, mask: &Mask, bin_count: usize) -> Self {
        let voxels: Vec<usize> = mask.indices().collect();
        let values: Vec<f64> = voxels.iter().map(|&i| image.data()[i] as f64).collect();
        let levels = bin_count_levels(&values, bin_count);
        Self::from_levels(mask.dims(), voxels, &levels)
    }

    /// Position of `level` within [`GrayRoi::present`].
    pub fn level_index(&self) -> Vec<usize> {
        let max = self.present.last().copied().unwrap_or(0) as usize;
        let mut lut = vec![usize::MAX; max + 1];
        for (n, &l) in self.present.iter().enumerate() {
            lut[l as usize] = n;
        }
        lut
    }

    pub fn gray_values(&self) -> Vec<f64> {
        self.present.iter().map(|&l| l as f64).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bin_width_from_min() {
        assert_eq!(bin_width_levels(&[0.0, 24.9, 25.0, 60.0], 25.0), vec![1, 1, 2, 3]);
        assert_eq!(bin_width_levels(&[-10.0, 10.0], 25.0), vec![1, 2]);
    }

    #[test]
    fn bin_count_edges() {
        assert_eq!(bin_count_levels(&[0.0, 0.5, 1.0], 2), vec![1, 2, 2]);
        assert_eq!(bin_count_levels(&[3.0, 3.0], 32), vec![1, 1]);
        let v: Vec<f64> = (0..=32).map(|x| x as f64).collect();
        let l = bin_count_levels(&v, 32);
        assert_eq!(l[0], 1);
        assert_eq!(l[31], 32);
        assert_eq!(l[32], 32);
    }
}
