//! Binary-mask geometry: connectivity, dilation, surfaces, and the exact
//! Euclidean distance transform.

mod components;
mod edt;

use serde::{Deserialize, Serialize};

use crate::volume::Mask;

pub use components::{connected_components, remove_small_components, ComponentLabeling};
pub use edt::{euclidean_distance_transform, squared_distance_transform};

/// Voxel adjacency used for components, dilation, and surfaces.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Connectivity {
    /// Face adjacency.
    #[serde(rename = "6")]
    Six,
    /// Face, edge, and vertex adjacency.
    #[default]
    #[serde(rename = "26")]
    TwentySix,
}

impl Connectivity {
    pub fn offsets(self) -> &'static [(isize, isize, isize)] {
        match self {
            Connectivity::Six => &FACE_OFFSETS,
            Connectivity::TwentySix => &NEIGHBOR_26,
        }
    }

    pub fn from_count(n: u32) -> Option<Self> {
        match n {
            6 => Some(Connectivity::Six),
            26 => Some(Connectivity::TwentySix),
            _ => None,
        }
    }

    pub fn count(self) -> u32 {
        match self {
            Connectivity::Six => 6,
            Connectivity::TwentySix => 26,
        }
    }
}

const FACE_OFFSETS: [(isize, isize, isize); 6] =
    [(-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0), (0, 0, -1), (0, 0, 1)];

const NEIGHBOR_26: [(isize, isize, isize); 26] = {
    let mut out = [(0, 0, 0); 26];
    let mut n = 0;
    let mut dz = -1;
    while dz <= 1 {
        let mut dy = -1;
        while dy <= 1 {
            let mut dx = -1;
            while dx <= 1 {
                if !(dx == 0 && dy == 0 && dz == 0) {
                    out[n] = (dx, dy, dz);
                    n += 1;
                }
                dx += 1;
            }
            dy += 1;
        }
        dz += 1;
    }
    out
};

/// Grows `mask` by its connectivity neighborhood `iterations` times.
pub fn dilate(mask: &Mask, iterations: usize, connectivity: Connectivity) -> Mask {
    let mut current = mask.clone();
    for _ in 0..iterations {
        current = match connectivity {
            // The 26-neighborhood is a 3x3x3 cube, which separates into
            // three 1D max filters.
            Connectivity::TwentySix => {
                let mut m = current;
                for axis in 0..3 {
                    m = dilate_axis(&m, axis);
                }
                m
            }
            Connectivity::Six => {
                let mut out = current.clone();
                for axis in 0..3 {
                    let step = dilate_axis(&current, axis);
                    for (o, s) in out.data_mut().iter_mut().zip(step.data()) {
                        *o |= *s;
                    }
                }
                out
            }
        };
    }
    current
}

fn dilate_axis(mask: &Mask, axis: usize) -> Mask {
    let dims = mask.dims();
    let n = dims.as_array()[axis];
    let stride = [1, dims.nx, dims.nx * dims.ny][axis];
    let src = mask.data();
    let mut out = src.to_vec();
    for (idx, &on) in src.iter().enumerate() {
        if !on {
            continue;
        }
        let pos = (idx / stride) % n;
        if pos > 0 {
            out[idx - stride] = true;
        }
        if pos + 1 < n {
            out[idx + stride] = true;
        }
    }
    Mask::new(dims, out).expect("same dims")
}

/// Foreground voxels with at least one background or out-of-grid neighbor.
pub fn boundary_voxels(mask: &Mask, connectivity: Connectivity) -> Mask {
    let dims = mask.dims();
    let offsets = connectivity.offsets();
    Mask::from_fn(dims, |idx| {
        if !mask.get(idx) {
            return false;
        }
        let c = dims.coords(idx);
        offsets
            .iter()
            .any(|&o| dims.offset(c, o).is_none_or(|n| !mask.get(n)))
    })
}
