/// Sparse payoff matrix stored twice: row-major for `A y` and column-major
/// for `A^T x`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparsePayoffMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    row_vals: Vec<f64>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    col_vals: Vec<f64>,
}

impl SparsePayoffMatrix {
    /// Builds the matrix from `(row, col, value)` triplets, summing
    /// duplicates. Entries that sum to exactly zero are dropped.
    ///
    /// # Panics
    /// If a triplet lies outside `rows x cols`.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Self {
        let mut merged: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        for &(r, c, _) in &merged {
            assert!(r < rows && c < cols, "entry ({r}, {c}) outside {rows}x{cols}");
        }
        merged.sort_by_key(|&(r, c, _)| (r, c));
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(merged.len());
        for (r, c, v) in merged {
            match entries.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => entries.push((r, c, v)),
            }
        }
        entries.retain(|e| e.2 != 0.0);

        let mut row_ptr = vec![0; rows + 1];
        for &(r, _, _) in &entries {
            row_ptr[r + 1] += 1;
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        let col_idx = entries.iter().map(|e| e.1).collect();
        let row_vals = entries.iter().map(|e| e.2).collect();

        let mut by_col = entries;
        by_col.sort_by_key(|&(r, c, _)| (c, r));
        let mut col_ptr = vec![0; cols + 1];
        for &(_, c, _) in &by_col {
            col_ptr[c + 1] += 1;
        }
        for c in 0..cols {
            col_ptr[c + 1] += col_ptr[c];
        }
        let row_idx = by_col.iter().map(|e| e.0).collect();
        let col_vals = by_col.iter().map(|e| e.2).collect();

        Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            row_vals,
            col_ptr,
            row_idx,
            col_vals,
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_triplets(rows, cols, std::iter::empty())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.row_vals.len()
    }

    /// Row-major `(row, col, value)` iterator.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.row_vals[k]))
        })
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let span = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.col_idx[span.clone()].binary_search(&col) {
            Ok(k) => self.row_vals[span.start + k],
            Err(_) => 0.0,
        }
    }

    /// `max |A_ij|`, the operator norm from L1 to L-infinity.
    pub fn max_abs(&self) -> f64 {
        self.row_vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `A y`
    pub fn mul(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.cols);
        (0..self.rows)
            .map(|r| {
                (self.row_ptr[r]..self.row_ptr[r + 1])
                    .map(|k| self.row_vals[k] * y[self.col_idx[k]])
                    .sum()
            })
            .collect()
    }

    /// `A^T x`
    pub fn mul_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows);
        (0..self.cols)
            .map(|c| {
                (self.col_ptr[c]..self.col_ptr[c + 1])
                    .map(|k| self.col_vals[k] * x[self.row_idx[k]])
                    .sum()
            })
            .collect()
    }

    /// `x^T A y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        self.mul(y).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.cols]; self.rows];
        for (r, c, v) in self.entries() {
            out[r][c] = v;
        }
        out
    }
}
