//! Orthant datasets, CSV ingestion and empirical moments.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether coordinates live on `[0, inf)` or on the non-negative integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportKind {
    Continuous,
    Count,
}

/// An `n x d` matrix of non-negative observations with column labels.
///
/// Values are stored row-major. Construction validates that every entry is
/// finite and non-negative, and integral when the support is `Count`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    n: usize,
    d: usize,
    labels: Vec<String>,
    support: SupportKind,
}

impl Dataset {
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<String>, support: SupportKind) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        let d = rows[0].len();
        if d == 0 {
            return Err(Error::domain("dataset needs at least one column"));
        }
        if labels.len() != d {
            return Err(Error::Format(format!("{} labels for {} columns", labels.len(), d)));
        }
        let mut values = Vec::with_capacity(n * d);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Format(format!(
                    "row {} has {} fields, expected {}",
                    i + 1,
                    row.len(),
                    d
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                check_entry(v, support, i, j)?;
                values.push(v);
            }
        }
        Ok(Self {
            values,
            n,
            d,
            labels,
            support,
        })
    }

    /// Builds a dataset with default labels `X1..Xd`.
    pub fn from_rows_unlabeled(rows: &[Vec<f64>], support: SupportKind) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        Self::from_rows(rows, default_labels(d), support)
    }

    /// One-column dataset.
    pub fn from_column(values: &[f64], support: SupportKind) -> Result<Self> {
        let rows: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
        Self::from_rows_unlabeled(&rows, support)
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.d
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn support(&self) -> SupportKind {
        self.support
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.d + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.d)
    }

    /// Sub-dataset keeping the given columns in the given order.
    pub fn select(&self, columns: &[usize]) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::domain("no columns selected"));
        }
        if let Some(&bad) = columns.iter().find(|&&c| c >= self.d) {
            return Err(Error::domain(format!("column index {bad} out of range (d={})", self.d)));
        }
        let mut values = Vec::with_capacity(self.n * columns.len());
        for i in 0..self.n {
            values.extend(columns.iter().map(|&j| self.get(i, j)));
        }
        Ok(Self {
            values,
            n: self.n,
            d: columns.len(),
            labels: columns.iter().map(|&j| self.labels[j].clone()).collect(),
            support: self.support,
        })
    }

    /// Sub-dataset by column labels.
    pub fn select_labels<S: AsRef<str>>(&self, names: &[S]) -> Result<Self> {
        let idx = names
            .iter()
            .map(|name| {
                self.labels
                    .iter()
                    .position(|l| l == name.as_ref())
                    .ok_or_else(|| Error::domain(format!("unknown column {:?}", name.as_ref())))
            })
            .collect::<Result<Vec<_>>>()?;
        self.select(&idx)
    }

    /// Rows in a new order; `order` must be a permutation of `0..n`.
    pub fn permute_rows(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.n];
        if order.len() != self.n || order.iter().any(|&i| i >= self.n || std::mem::replace(&mut seen[i], true)) {
            return Err(Error::domain("row order is not a permutation"));
        }
        let mut values = Vec::with_capacity(self.values.len());
        for &i in order {
            values.extend_from_slice(self.row(i));
        }
        Ok(Self { values, ..self.clone() })
    }

    /// Dataset with row `i` removed.
    pub fn without_row(&self, i: usize) -> Result<Self> {
        if self.n < 2 || i >= self.n {
            return Err(Error::InsufficientData { needed: 2, got: self.n });
        }
        let mut values = Vec::with_capacity(self.values.len() - self.d);
        for (k, row) in self.rows().enumerate() {
            if k != i {
                values.extend_from_slice(row);
            }
        }
        Ok(Self {
            values,
            n: self.n - 1,
            ..self.clone()
        })
    }

    /// Every row repeated `times` times, keeping the original order of blocks.
    pub fn replicate(&self, times: usize) -> Self {
        let mut values = Vec::with_capacity(self.values.len() * times);
        for _ in 0..times {
            values.extend_from_slice(&self.values);
        }
        Self {
            values,
            n: self.n * times,
            ..self.clone()
        }
    }

    /// Writes the dataset as CSV with a header row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.labels).map_err(csv_err)?;
        for row in self.rows() {
            w.write_record(row.iter().map(|v| format!("{v}"))).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_entry(v: f64, support: SupportKind, i: usize, j: usize) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::domain(format!("entry ({}, {}) is not finite", i + 1, j + 1)));
    }
    if v < 0.0 {
        return Err(Error::domain(format!("entry ({}, {}) = {v} is negative", i + 1, j + 1)));
    }
    if support == SupportKind::Count && v.fract() != 0.0 {
        return Err(Error::domain(format!(
            "entry ({}, {}) = {v} is not an integer count",
            i + 1,
            j + 1
        )));
    }
    Ok(())
}

pub(crate) fn default_labels(d: usize) -> Vec<String> {
    (1..=d).map(|j| format!("X{j}")).collect()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

/// Reads a comma-separated numeric table.
pub fn read_csv<R: Read>(reader: R, has_header: bool, support: SupportKind) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let labels = if has_header {
        Some(rdr.headers().map_err(csv_err)?.iter().map(str::to_owned).collect::<Vec<_>>())
    } else {
        None
    };
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(j, field)| {
                if field.is_empty() {
                    return Err(Error::Format(format!("missing value at row {}, column {}", i + 1, j + 1)));
                }
                field
                    .parse::<f64>()
                    .map_err(|_| Error::Format(format!("non-numeric field {field:?} at row {}, column {}", i + 1, j + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let labels = labels.unwrap_or_else(|| default_labels(rows[0].len()));
    if labels.len() != rows[0].len() {
        return Err(Error::Format(format!(
            "header has {} names but rows have {} fields",
            labels.len(),
            rows[0].len()
        )));
    }
    Dataset::from_rows(&rows, labels, support)
}

/// Loads a CSV file; see [`read_csv`].
pub fn load_csv(path: impl AsRef<Path>, has_header: bool, support: SupportKind) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    read_csv(std::io::BufReader::new(file), has_header, support)
}

const WATERPUMPS: [[u16; 3]; 42] = [
    [23, 97, 26], [261, 93, 52], [87, 94, 22], [10, 100, 39], [120, 98, 23], [14, 84, 26],
    [62, 96, 32], [15, 110, 17], [47, 121, 10], [225, 73, 39], [71, 90, 31], [20, 93, 42],
    [246, 103, 52], [21, 116, 26], [19, 114, 26], [42, 82, 36], [20, 96, 43], [5, 94, 36],
    [12, 77, 6], [120, 91, 27], [17, 117, 15], [11, 103, 36], [3, 99, 9], [14, 113, 52],
    [71, 79, 11], [11, 109, 20], [5, 84, 25], [14, 118, 37], [11, 98, 25], [16, 93, 18],
    [90, 94, 43], [1, 103, 43], [16, 109, 24], [52, 110, 38], [95, 89, 6], [10, 108, 40],
    [1, 101, 21], [14, 93, 34], [4, 102, 15], [7, 138, 23], [14, 103, 68], [20, 96, 37],
];

/// The drinking-water-pump fixture: 42 rows of failure time (months),
/// distance to the repair centre (km) and average daily volume (m^3).
pub fn waterpumps() -> Dataset {
    let rows: Vec<Vec<f64>> = WATERPUMPS
        .iter()
        .map(|r| r.iter().map(|&v| f64::from(v)).collect())
        .collect();
    Dataset::from_rows(&rows, default_labels(3), SupportKind::Continuous).expect("fixture is valid")
}

/// Covariance divisor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Divisor {
    N,
    /// Unbiased divisor; reproduces the published water-pump index table.
    #[default]
    NMinus1,
}

/// Mean vector, covariance and correlation of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSummary {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub corr: DMatrix<f64>,
    pub divisor: Divisor,
    /// Columns with zero variance; their off-diagonal correlations are 0.
    pub degenerate_columns: Vec<usize>,
}

impl MomentSummary {
    pub fn variances(&self) -> DVector<f64> {
        self.cov.diagonal()
    }
}

pub fn empirical_moments(data: &Dataset, divisor: Divisor) -> Result<MomentSummary> {
    let (n, d) = (data.nrows(), data.ncols());
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let mean = DVector::from_fn(d, |j, _| {
        let col = data.column(j);
        crate::special::pairwise_sum(&col) / n as f64
    });
    let denom = match divisor {
        Divisor::N => n as f64,
        Divisor::NMinus1 => (n - 1) as f64,
    };
    let mut cov = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            let prods: Vec<f64> = data
                .rows()
                .map(|r| (r[a] - mean[a]) * (r[b] - mean[b]))
                .collect();
            let c = crate::special::pairwise_sum(&prods) / denom;
            cov[(a, b)] = c;
            cov[(b, a)] = c;
        }
    }
    let degenerate_columns: Vec<usize> = (0..d).filter(|&j| cov[(j, j)] <= 0.0).collect();
    let corr = DMatrix::from_fn(d, d, |a, b| {
        if a == b {
            1.0
        } else if cov[(a, a)] <= 0.0 || cov[(b, b)] <= 0.0 {
            0.0
        } else {
            (cov[(a, b)] / (cov[(a, a)].sqrt() * cov[(b, b)].sqrt())).clamp(-1.0, 1.0)
        }
    });
    Ok(MomentSummary {
        mean,
        cov,
        corr,
        divisor,
        degenerate_columns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn waterpumps_shape_and_first_row() {
        let w = waterpumps();
        assert_eq!((w.nrows(), w.ncols()), (42, 3));
        assert_eq!(w.row(0), &[23.0, 97.0, 26.0]);
        assert_eq!(w.labels(), &["X1", "X2", "X3"]);
    }

    #[test]
    fn waterpumps_column_sums() {
        // summed by hand from the published table
        let w = waterpumps();
        let sums: Vec<f64> = (0..3).map(|j| w.column(j).iter().sum()).collect();
        assert_eq!(sums, vec![1937.0, 4181.0, 1251.0]);
    }

    #[test]
    fn csv_all_zero_row_is_accepted() {
        let d = read_csv("0,0\n".as_bytes(), false, SupportKind::Count).unwrap();
        assert_eq!((d.nrows(), d.ncols()), (1, 2));
    }

    #[test]
    fn csv_negative_is_domain_error() {
        let e = read_csv("1,2\n-1,3\n".as_bytes(), false, SupportKind::Continuous).unwrap_err();
        assert!(matches!(e, Error::Domain(_)));
    }

    #[test]
    fn csv_fraction_in_count_data_is_domain_error() {
        let e = read_csv("1,2.5\n".as_bytes(), false, SupportKind::Count).unwrap_err();
        assert!(matches!(e, Error::Domain(_)));
    }

    #[test]
    fn csv_ragged_rows_are_format_error() {
        let e = read_csv("a,b\n1,2\n3\n".as_bytes(), true, SupportKind::Continuous).unwrap_err();
        assert!(matches!(e, Error::Format(_)));
    }

    #[test]
    fn csv_missing_value_rejected() {
        let e = read_csv("1,\n".as_bytes(), false, SupportKind::Continuous).unwrap_err();
        assert!(matches!(e, Error::Format(_)));
    }

    #[test]
    fn csv_header_gives_labels_and_round_trips() {
        let w = waterpumps();
        let mut buf = Vec::new();
        w.write_csv(&mut buf).unwrap();
        let back = read_csv(buf.as_slice(), true, SupportKind::Continuous).unwrap();
        assert_eq!(back, w);
    }

    #[test]
    fn moments_need_two_rows() {
        let d = Dataset::from_column(&[1.0], SupportKind::Continuous).unwrap();
        assert!(matches!(
            empirical_moments(&d, Divisor::NMinus1),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn constant_column_is_flagged() {
        let d = Dataset::from_rows_unlabeled(&[vec![1.0, 3.0], vec![2.0, 3.0], vec![4.0, 3.0]], SupportKind::Continuous)
            .unwrap();
        let m = empirical_moments(&d, Divisor::NMinus1).unwrap();
        assert_eq!(m.cov[(1, 1)], 0.0);
        assert_eq!(m.degenerate_columns, vec![1]);
        assert_eq!(m.corr[(0, 1)], 0.0);
        assert_eq!(m.corr[(1, 1)], 1.0);
    }

    #[test]
    fn waterpumps_mean_and_correlation() {
        let m = empirical_moments(&waterpumps(), Divisor::NMinus1).unwrap();
        assert!((m.mean[0] - 1937.0 / 42.0).abs() < 1e-12);
        assert!((m.corr[(0, 1)] - (-0.3090)).abs() < 5e-4);
        assert!((m.corr.determinant() - 0.8325).abs() < 5e-4);
    }

    #[test]
    fn divisors_differ_by_n_over_n_minus_1() {
        let w = waterpumps();
        let a = empirical_moments(&w, Divisor::N).unwrap();
        let b = empirical_moments(&w, Divisor::NMinus1).unwrap();
        assert!(((b.cov[(0, 2)] / a.cov[(0, 2)]) - 42.0 / 41.0).abs() < 1e-12);
        assert!((&a.corr - &b.corr).amax() < 1e-12);
    }
}
