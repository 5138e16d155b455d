//! The file library shared by the root server and all caches.

/// Dense index of a file in the catalog.
pub type FileId = usize;

/// Immutable library of files with per-file sizes in volume units.
///
/// External identifiers (e.g. ids found in a trace) are mapped to dense
/// indices on ingestion; `labels` keeps the original names when they exist.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    sizes: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl Catalog {
    pub fn new(sizes: Vec<f64>) -> Self {
        Catalog { sizes, labels: None }
    }

    pub fn with_labels(sizes: Vec<f64>, labels: Vec<String>) -> Self {
        assert_eq!(sizes.len(), labels.len());
        Catalog { sizes, labels: Some(labels) }
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn size(&self, file: FileId) -> f64 {
        self.sizes[file]
    }

    pub fn sizes(&self) -> &[f64] {
        &self.sizes
    }

    /// Original identifier of `file`, when the catalog came from a trace.
    pub fn label(&self, file: FileId) -> Option<&str> {
        self.labels.as_ref().map(|l| l[file].as_str())
    }

    pub fn total_volume(&self) -> f64 {
        self.sizes.iter().sum()
    }

    pub fn mean_size(&self) -> f64 {
        if self.sizes.is_empty() {
            0.0
        } else {
            self.total_volume() / self.sizes.len() as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn totals_and_means() {
        let c = Catalog::new(vec![1.0, 2.0, 3.0]);
        assert_eq!(c.len(), 3);
        assert_eq!(c.total_volume(), 6.0);
        assert_eq!(c.mean_size(), 2.0);
        assert_eq!(c.size(2), 3.0);
        assert!(c.label(0).is_none());
    }

    #[test]
    fn labels_round_trip() {
        let c = Catalog::with_labels(vec![1.0], vec!["vod-17".into()]);
        assert_eq!(c.label(0), Some("vod-17"));
    }
}
