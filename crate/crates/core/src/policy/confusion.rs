use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::volume::LabelMap;

/// Voxel counts with ground-truth label as row and predicted label as column.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 5]; 5],
}

impl ConfusionMatrix {
    /// Adds one congruent (prediction, ground truth) pair.
    pub fn tally(&mut self, pred: &LabelMap, gt: &LabelMap) -> Result<(), String> {
        if !pred.same_geometry(gt) {
            return Err(format!("grid mismatch: {} vs {}", pred.dims(), gt.dims()));
        }
        for (&p, &g) in pred.data().iter().zip(gt.data()) {
            self.counts[g as usize][p as usize] += 1;
        }
        Ok(())
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a LabelMap, &'a LabelMap)>) -> Result<Self, String> {
        let mut cm = Self::default();
        for (p, g) in pairs {
            cm.tally(p, g)?;
        }
        Ok(cm)
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for g in 0..5 {
            for p in 0..5 {
                self.counts[g][p] += other.counts[g][p];
            }
        }
    }

    pub fn row_sum(&self, gt_label: usize) -> u64 {
        self.counts[gt_label].iter().sum()
    }

    /// The `n` largest off-diagonal tumor-label entries as `(src, dst)` =
    /// (predicted, true) label pairs; larger counts first, then by
    /// `(row, col)`. Zero entries and the background row and column are
    /// never returned.
    pub fn top_confusions(&self, n: usize) -> Vec<(u8, u8)> {
        let mut entries: Vec<(u64, usize, usize)> = Vec::new();
        for g in 1..5 {
            for p in 1..5 {
                if g != p && self.counts[g][p] > 0 {
                    entries.push((self.counts[g][p], g, p));
                }
            }
        }
        entries.sort_by(|a, b| b.0.cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
        entries.into_iter().take(n).map(|(_, g, p)| (p as u8, g as u8)).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["gt\\pred", "0", "1", "2", "3", "4"])?;
        for (g, row) in self.counts.iter().enumerate() {
            let rec = std::iter::once(g.to_string()).chain(row.iter().map(u64::to_string));
            w.write_record(rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Fixed-width text table.
    pub fn render(&self) -> String {
        let width = self
            .counts
            .iter()
            .flatten()
            .map(|c| c.to_string().len())
            .max()
            .unwrap_or(1)
            .max(4);
        let mut out = format!("{:>6}", "gt\\pr");
        for p in 0..5 {
            out += &format!(" {p:>width$}");
        }
        out.push('\n');
        for (g, row) in self.counts.iter().enumerate() {
            out += &format!("{g:>6}");
            for c in row {
                out += &format!(" {c:>width$}");
            }
            out.push('\n');
        }
        out
    }
}
