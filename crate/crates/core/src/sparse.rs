//! Square compressed-sparse-row matrices with complex entries.
//!
//! Entries are kept sorted by `(row, col)` with duplicates summed and exact
//! zeros dropped, so two matrices assembled from the same triplets in any
//! order are bit-identical.

use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    pub fn zeros(dim: usize) -> Self {
        CsrMatrix {
            dim,
            row_ptr: vec![0; dim + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_triplets(dim, (0..dim).map(|i| (i, i, C64::new(1.0, 0.0))))
    }

    /// Assembles a matrix from `(row, col, value)` triplets.
    ///
    /// Panics if an index is out of range.
    pub fn from_triplets<I>(dim: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let mut entries: Vec<(usize, usize, C64)> = triplets.into_iter().collect();
        for &(r, c, _) in &entries {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) outside dim {dim}");
        }
        entries.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));

        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<C64> = Vec::with_capacity(entries.len());
        let mut rows = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            if let (Some(&last_r), Some(&last_c)) = (rows.last(), col_idx.last()) {
                if last_r == r && last_c == c {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            col_idx.push(c);
            values.push(v);
        }
        // drop exact cancellations
        let mut keep_rows = Vec::with_capacity(rows.len());
        let mut keep_cols = Vec::with_capacity(rows.len());
        let mut keep_vals = Vec::with_capacity(rows.len());
        for ((r, c), v) in rows.into_iter().zip(col_idx).zip(values) {
            if v != C64::new(0.0, 0.0) {
                keep_rows.push(r);
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for &r in &keep_rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            dim,
            row_ptr,
            col_idx: keep_cols,
            values: keep_vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates over stored entries in ascending `(row, col)` order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.col_idx[k], self.values[k]))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        match self.col_idx[lo..hi].binary_search(&c) {
            Ok(k) => self.values[lo + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.dim];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *out = acc;
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.dim, self.iter().map(|(r, c, v)| (c, r, v.conj())))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_triplets(self.dim, self.iter().map(|(r, c, v)| (r, c, v * s)))
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self::from_triplets(self.dim, self.iter().chain(other.iter()))
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self::from_triplets(
            self.dim,
            self.iter().chain(other.iter().map(|(r, c, v)| (r, c, -v))),
        )
    }

    /// Sparse product `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut triplets = Vec::new();
        let mut acc = vec![C64::new(0.0, 0.0); self.dim];
        let mut touched = Vec::new();
        let mut seen = vec![false; self.dim];
        for r in 0..self.dim {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if !seen[c] {
                        seen[c] = true;
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                triplets.push((r, c, acc[c]));
                acc[c] = C64::new(0.0, 0.0);
                seen[c] = false;
            }
            touched.clear();
        }
        Self::from_triplets(self.dim, triplets)
    }

    /// `self · other − other · self`.
    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    /// Largest entry magnitude (0 for an empty matrix).
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Max-norm of `M − M†`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.sub(&self.adjoint()).max_abs()
    }

    /// Largest imaginary part magnitude.
    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Keeps only entries whose row and column both satisfy `keep`.
    pub fn restrict(&self, keep: impl Fn(usize) -> bool) -> Self {
        Self::from_triplets(self.dim, self.iter().filter(|&(r, c, _)| keep(r) && keep(c)))
    }

    /// Keeps only entries whose row satisfies `keep`.
    pub fn restrict_rows(&self, keep: impl Fn(usize) -> bool) -> Self {
        Self::from_triplets(self.dim, self.iter().filter(|&(r, _, _)| keep(r)))
    }

    /// Writes the sparse triplet text format: a `dim nnz` header followed by
    /// one `row col re im` line per stored entry, rows ascending.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.dim, self.nnz())?;
        for (r, c, v) in self.iter() {
            writeln!(w, "{} {} {:e} {:e}", r, c, v.re, v.im)?;
        }
        Ok(())
    }

    pub fn read_triplets<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing header line".into()))?
            .map_err(|e| Error::Parse(e.to_string()))?;
        let mut head = header.split_whitespace();
        let dim: usize = parse_field(head.next(), "dim")?;
        let nnz: usize = parse_field(head.next(), "nnz")?;
        let mut triplets = Vec::with_capacity(nnz);
        let mut last_row = 0usize;
        for line in lines {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut f = line.split_whitespace();
            let row: usize = parse_field(f.next(), "row")?;
            let col: usize = parse_field(f.next(), "col")?;
            let re: f64 = parse_field(f.next(), "re")?;
            let im: f64 = parse_field(f.next(), "im")?;
            if row >= dim || col >= dim {
                return Err(Error::Parse(format!("entry ({row}, {col}) outside dim {dim}")));
            }
            if row < last_row {
                return Err(Error::Parse("rows must be ascending".into()));
            }
            last_row = row;
            triplets.push((row, col, C64::new(re, im)));
        }
        if triplets.len() != nnz {
            return Err(Error::Parse(format!(
                "header declares {nnz} entries, found {}",
                triplets.len()
            )));
        }
        Ok(Self::from_triplets(dim, triplets))
    }
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, name: &str) -> Result<T> {
    field
        .ok_or_else(|| Error::Parse(format!("missing field `{name}`")))?
        .parse()
        .map_err(|_| Error::Parse(format!("malformed field `{name}`")))
}

pub fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// `⟨x|y⟩`, conjugate-linear in `x`.
pub fn inner(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn duplicates_are_summed_and_cancellations_dropped() {
        let m = CsrMatrix::from_triplets(3, vec![(0, 1, c(1.0)), (0, 1, c(2.0)), (2, 0, c(1.0)), (2, 0, c(-1.0))]);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 1), c(3.0));
        assert_eq!(m.get(2, 0), c(0.0));
    }

    #[test]
    fn product_matches_dense() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 0, c(1.0)), (0, 1, c(2.0)), (1, 1, C64::new(0.0, 1.0))]);
        let b = CsrMatrix::from_triplets(2, vec![(0, 0, c(3.0)), (1, 0, c(4.0)), (1, 1, c(5.0))]);
        let p = a.mul(&b);
        assert_eq!(p.get(0, 0), c(11.0));
        assert_eq!(p.get(0, 1), c(10.0));
        assert_eq!(p.get(1, 0), C64::new(0.0, 4.0));
        assert_eq!(p.get(1, 1), C64::new(0.0, 5.0));
    }

    #[test]
    fn triplet_reader_rejects_bad_header() {
        let text = "3 2\n0 0 1 0\n";
        assert!(CsrMatrix::read_triplets(text.as_bytes()).is_err());
        let text = "2 2\n1 0 1 0\n0 1 1 0\n";
        assert!(CsrMatrix::read_triplets(text.as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn triplet_text_round_trip(entries in proptest::collection::vec((0usize..6, 0usize..6, -5.0f64..5.0, -5.0f64..5.0), 0..30)) {
            let m = CsrMatrix::from_triplets(6, entries.into_iter().map(|(r, c, re, im)| (r, c, C64::new(re, im))));
            let mut buf = Vec::new();
            m.write_triplets(&mut buf).unwrap();
            let back = CsrMatrix::read_triplets(buf.as_slice()).unwrap();
            prop_assert_eq!(back, m);
        }

        #[test]
        fn adjoint_is_an_involution(entries in proptest::collection::vec((0usize..5, 0usize..5, -5.0f64..5.0, -5.0f64..5.0), 0..20)) {
            let m = CsrMatrix::from_triplets(5, entries.into_iter().map(|(r, c, re, im)| (r, c, C64::new(re, im))));
            prop_assert_eq!(m.adjoint().adjoint(), m);
        }
    }
}
