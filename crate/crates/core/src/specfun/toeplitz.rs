use crate::error::{invalid, Result, Error};

/// First column of a lower-triangular Toeplitz matrix; the column fully
/// determines the matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ToeplitzColumn {
    entries: Vec<f64>,
}

impl ToeplitzColumn {
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Induced 1-norm of the matrix, which for lower-triangular Toeplitz is
    /// the absolute sum of the first column.
    pub fn l1_norm(&self) -> f64 {
        self.entries.iter().map(|v| v.abs()).sum()
    }

    /// Sum of the first `n` entries.
    pub fn prefix_sum(&self, n: usize) -> f64 {
        self.entries[..n.min(self.entries.len())].iter().sum()
    }
}

/// First column of `exp(Q)` where `Q` is lower-triangular Toeplitz with
/// first column `q[0..dim]`.
pub fn lt_toeplitz_exp_column(q: &[f64], dim: usize) -> Result<ToeplitzColumn> {
    if dim == 0 {
        return Err(invalid("dim", "must be at least 1"));
    }
    if q.len() < dim {
        return Err(invalid("q", format!("needs {dim} entries, got {}", q.len())));
    }
    let mut x = Vec::with_capacity(dim);
    x.push(q[0].exp());
    for m in 1..dim {
        let mut acc = 0.0;
        for k in 0..m {
            acc += (m - k) as f64 * q[m - k] * x[k];
        }
        x.push(acc / m as f64);
    }
    Ok(ToeplitzColumn { entries: x })
}

/// First column of `W⁻¹` where `W` has `diag` on the diagonal and `-sub[k-1]`
/// on the k-th subdiagonal.
pub fn lt_toeplitz_inv_column(diag: f64, sub: &[f64], dim: usize) -> Result<ToeplitzColumn> {
    if dim == 0 {
        return Err(invalid("dim", "must be at least 1"));
    }
    if sub.len() + 1 < dim {
        return Err(invalid("sub", format!("needs {} entries, got {}", dim - 1, sub.len())));
    }
    if diag == 0.0 || !diag.is_finite() {
        return Err(Error::Singular {
            routine: "lt_toeplitz_inv_column",
            detail: format!("diagonal is {diag}"),
        });
    }
    let inv = 1.0 / diag;
    let mut x = Vec::with_capacity(dim);
    x.push(inv);
    for m in 1..dim {
        let mut acc = 0.0;
        for k in 0..m {
            acc += sub[m - k - 1] * x[k];
        }
        x.push(inv * acc);
    }
    Ok(ToeplitzColumn { entries: x })
}
