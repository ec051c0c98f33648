//! Labelled images in the form the network consumes.

use mipt_core::dataset::Dataset;

use crate::error::{NnError, Result};

/// `n` images of `rows × cols` outcomes in {−1, 0, +1} with ±1 labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Examples {
    pub rows: usize,
    pub cols: usize,
    pub images: Vec<i8>,
    pub labels: Vec<i8>,
}

impl Examples {
    pub fn new(rows: usize, cols: usize, images: Vec<i8>, labels: Vec<i8>) -> Result<Self> {
        if rows == 0 || cols == 0 || images.len() != rows * cols * labels.len() {
            return Err(NnError::Shape(format!(
                "{} pixels for {} images of {rows}x{cols}",
                images.len(),
                labels.len()
            )));
        }
        if labels.iter().any(|&y| y != 1 && y != -1) {
            return Err(NnError::InvalidArgument("labels must be ±1".into()));
        }
        Ok(Examples { rows, cols, images, labels })
    }

    pub fn from_dataset(ds: &Dataset) -> Self {
        let images = ds.samples.iter().flat_map(|s| s.outcomes.iter().copied()).collect();
        let labels = ds.samples.iter().map(|s| s.label).collect();
        Examples { rows: ds.rows(), cols: ds.cols(), images, labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image(&self, i: usize) -> &[i8] {
        let k = self.rows * self.cols;
        &self.images[i * k..(i + 1) * k]
    }

    /// First `n` examples.
    pub fn head(&self, n: usize) -> Examples {
        let n = n.min(self.len());
        Examples {
            rows: self.rows,
            cols: self.cols,
            images: self.images[..n * self.rows * self.cols].to_vec(),
            labels: self.labels[..n].to_vec(),
        }
    }

    pub fn select(&self, idx: &[usize]) -> Examples {
        Examples {
            rows: self.rows,
            cols: self.cols,
            images: idx.iter().flat_map(|&i| self.image(i).iter().copied()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Same images, labels negated.
    pub fn negated(&self) -> Examples {
        Examples { labels: self.labels.iter().map(|&y| -y).collect(), ..self.clone() }
    }
}
