use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("expected {expected} values, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("non-finite flow value at edge {edge}, sample {sample}")]
    NonFinite { edge: usize, sample: usize },
}

/// Dense `edges x samples` matrix of edge flows, stored column-major so that
/// each sample is a contiguous slice in edge order.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMatrix {
    edges: usize,
    samples: usize,
    data: Vec<f64>,
}

impl FlowMatrix {
    pub fn zeros(edges: usize, samples: usize) -> Self {
        Self {
            edges,
            samples,
            data: vec![0.0; edges * samples],
        }
    }

    pub fn from_columns(edges: usize, columns: Vec<Vec<f64>>) -> Result<Self, FlowError> {
        let samples = columns.len();
        let mut data = Vec::with_capacity(edges * samples);
        for col in columns {
            if col.len() != edges {
                return Err(FlowError::Shape {
                    expected: edges,
                    got: col.len(),
                });
            }
            data.extend(col);
        }
        Self::from_column_major(edges, samples, data)
    }

    /// Builds from per-edge rows, the layout of flow files.
    pub fn from_rows(samples: usize, rows: &[Vec<f64>]) -> Result<Self, FlowError> {
        let edges = rows.len();
        let mut m = Self::zeros(edges, samples);
        for (e, row) in rows.iter().enumerate() {
            if row.len() != samples {
                return Err(FlowError::Shape {
                    expected: samples,
                    got: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                m.set(e, j, v);
            }
        }
        m.check_finite()?;
        Ok(m)
    }

    pub fn from_column_major(edges: usize, samples: usize, data: Vec<f64>) -> Result<Self, FlowError> {
        if data.len() != edges * samples {
            return Err(FlowError::Shape {
                expected: edges * samples,
                got: data.len(),
            });
        }
        let m = Self {
            edges,
            samples,
            data,
        };
        m.check_finite()?;
        Ok(m)
    }

    fn check_finite(&self) -> Result<(), FlowError> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(FlowError::NonFinite {
                edge: i % self.edges.max(1),
                sample: i / self.edges.max(1),
            }),
            None => Ok(()),
        }
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn sample_count(&self) -> usize {
        self.samples
    }

    pub fn get(&self, edge: usize, sample: usize) -> f64 {
        self.data[sample * self.edges + edge]
    }

    pub fn set(&mut self, edge: usize, sample: usize, value: f64) {
        self.data[sample * self.edges + edge] = value;
    }

    pub fn column(&self, sample: usize) -> &[f64] {
        &self.data[sample * self.edges..(sample + 1) * self.edges]
    }

    pub fn column_mut(&mut self, sample: usize) -> &mut [f64] {
        &mut self.data[sample * self.edges..(sample + 1) * self.edges]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.samples).map(move |j| self.column(j))
    }

    /// Flow values of one edge across all samples.
    pub fn row(&self, edge: usize) -> Vec<f64> {
        (0..self.samples).map(|j| self.get(edge, j)).collect()
    }

    /// `sum_j |F[edge, j]|`
    pub fn row_l1(&self, edge: usize) -> f64 {
        (0..self.samples).map(|j| self.get(edge, j).abs()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `self - other`
    pub fn sub(&self, other: &FlowMatrix) -> FlowMatrix {
        assert_eq!((self.edges, self.samples), (other.edges, other.samples));
        FlowMatrix {
            edges: self.edges,
            samples: self.samples,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }
}
