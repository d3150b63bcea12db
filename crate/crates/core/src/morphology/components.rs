use std::collections::VecDeque;

use super::Connectivity;
use crate::volume::{Dims, Mask};

/// Component ids over a binary mask. Id 0 is background; components are
/// numbered `1..=count` in the scan order of their first voxel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentLabeling {
    dims: Dims,
    labels: Vec<u32>,
    sizes: Vec<usize>,
}

impl ComponentLabeling {
    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    /// Voxel count of component `id` (1-based).
    pub fn size(&self, id: u32) -> usize {
        self.sizes[id as usize - 1]
    }

    /// Sizes indexed by `id - 1`.
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn component_mask(&self, id: u32) -> Mask {
        Mask::from_fn(self.dims, |idx| self.labels[idx] == id)
    }

    /// Mask of every component for which `keep(id, size)` holds.
    pub fn select(&self, keep: impl Fn(u32, usize) -> bool) -> Mask {
        let kept: Vec<bool> = std::iter::once(false)
            .chain(self.sizes.iter().enumerate().map(|(n, &s)| keep(n as u32 + 1, s)))
            .collect();
        Mask::from_fn(self.dims, |idx| kept[self.labels[idx] as usize])
    }

    /// Voxel indices of each component, in id order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self.sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
        for (idx, &l) in self.labels.iter().enumerate() {
            if l > 0 {
                out[l as usize - 1].push(idx);
            }
        }
        out
    }
}

pub fn connected_components(mask: &Mask, connectivity: Connectivity) -> ComponentLabeling {
    let dims = mask.dims();
    let offsets = connectivity.offsets();
    let mut labels = vec![0u32; dims.len()];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..dims.len() {
        if !mask.get(start) || labels[start] != 0 {
            continue;
        }
        let id = sizes.len() as u32 + 1;
        labels[start] = id;
        queue.push_back(start);
        let mut size = 0;
        while let Some(idx) = queue.pop_front() {
            size += 1;
            let c = dims.coords(idx);
            for &o in offsets {
                if let Some(n) = dims.offset(c, o) {
                    if mask.get(n) && labels[n] == 0 {
                        labels[n] = id;
                        queue.push_back(n);
                    }
                }
            }
        }
        sizes.push(size);
    }
    ComponentLabeling { dims, labels, sizes }
}

/// Keeps only components with at least `min_size` voxels.
pub fn remove_small_components(mask: &Mask, min_size: usize, connectivity: Connectivity) -> Mask {
    if min_size == 0 {
        return mask.clone();
    }
    connected_components(mask, connectivity).select(|_, size| size >= min_size)
}
