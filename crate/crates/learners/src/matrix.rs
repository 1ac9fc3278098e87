use serde::{Deserialize, Serialize};

/// Row-major numeric matrix with named columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub columns: Vec<String>,
    rows: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Panics when `data.len() != rows * columns.len()`.
    pub fn new(columns: Vec<String>, rows: usize, data: Vec<f64>) -> Matrix {
        assert_eq!(data.len(), rows * columns.len(), "matrix data does not match its shape");
        Matrix { columns, rows, data }
    }

    pub fn from_rows(columns: Vec<String>, rows: &[Vec<f64>]) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * columns.len());
        for r in rows {
            assert_eq!(r.len(), columns.len(), "row width does not match the columns");
            data.extend_from_slice(r);
        }
        Matrix::new(columns, rows.len(), data)
    }

    /// Columns named `x0`, `x1`, ...
    pub fn unnamed(rows: &[Vec<f64>]) -> Matrix {
        let width = rows.first().map_or(0, Vec::len);
        Matrix::from_rows((0..width).map(|i| format!("x{i}")).collect(), rows)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols() + j]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols());
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix::new(self.columns.clone(), idx.len(), data)
    }

    /// Same rows with columns reordered by `order` (indices into the current columns).
    pub fn select_columns(&self, order: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * order.len());
        for r in self.iter_rows() {
            data.extend(order.iter().map(|&j| r[j]));
        }
        Matrix::new(
            order.iter().map(|&j| self.columns[j].clone()).collect(),
            self.rows,
            data,
        )
    }

    /// First non-finite cell as (row, column).
    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        let c = self.cols().max(1);
        self.data.iter().position(|x| !x.is_finite()).map(|k| (k / c, k % c))
    }
}
