//! Relative variability indexes: dispersion (count reference: uncorrelated
//! Poisson) and variation (continuous reference: uncorrelated exponential),
//! their marginal versions, relative ratios, and the generic trace form
//! `tr(cov_x · W⁺)`.

use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::data::{empirical_moments, Dataset, Divisor};
use crate::error::{Error, Result};

/// Tolerance used when classifying analytic index values.
pub const ANALYTIC_EPS: f64 = 1e-6;
/// Default tolerance for empirical index values.
pub const EMPIRICAL_EPS: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variability {
    Under,
    Equi,
    Over,
}

impl Variability {
    /// `Equi` iff `|value - 1| <= eps`.
    pub fn classify(value: f64, eps: f64) -> Self {
        if (value - 1.0).abs() <= eps {
            Variability::Equi
        } else if value > 1.0 {
            Variability::Over
        } else {
            Variability::Under
        }
    }
}

fn check_inputs(mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<()> {
    let d = mean.len();
    if d == 0 {
        return Err(Error::domain("empty mean vector"));
    }
    if cov.nrows() != d || cov.ncols() != d {
        return Err(Error::domain(format!(
            "covariance is {}x{}, mean has length {d}",
            cov.nrows(),
            cov.ncols()
        )));
    }
    if let Some(j) = mean.iter().position(|&m| !(m > 0.0)) {
        return Err(Error::domain(format!("mean component {j} = {} is not positive", mean[j])));
    }
    Ok(())
}

/// Generalized dispersion index `(√m)ᵀ Σ √m / (mᵀm)`.
pub fn gdi(mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<f64> {
    check_inputs(mean, cov)?;
    let root = mean.map(f64::sqrt);
    Ok((root.transpose() * cov * &root)[(0, 0)] / mean.dot(mean))
}

/// Generalized variation index `mᵀ Σ m / (mᵀm)²`.
pub fn gvi(mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<f64> {
    check_inputs(mean, cov)?;
    let mm = mean.dot(mean);
    Ok((mean.transpose() * cov * mean)[(0, 0)] / (mm * mm))
}

/// Marginal dispersion index: GDI with the covariance replaced by its diagonal.
pub fn mdi(mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<f64> {
    check_inputs(mean, cov)?;
    let num: f64 = mean.iter().zip(cov.diagonal().iter()).map(|(m, v)| m * v).sum();
    Ok(num / mean.dot(mean))
}

/// Marginal variation index: GVI with the covariance replaced by its diagonal.
pub fn mvi(mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<f64> {
    check_inputs(mean, cov)?;
    let num: f64 = mean.iter().zip(cov.diagonal().iter()).map(|(m, v)| m * m * v).sum();
    let mm = mean.dot(mean);
    Ok(num / (mm * mm))
}

/// Ratio of two indexes with its classification against 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Relative {
    pub value: f64,
    pub class: Variability,
}

fn relative(x: f64, y: f64, eps: f64) -> Result<Relative> {
    if !(y > 0.0) {
        return Err(Error::domain(format!("reference index {y} is not positive")));
    }
    let value = x / y;
    Ok(Relative {
        value,
        class: Variability::classify(value, eps),
    })
}

/// Relative dispersion index `GDI(X) / GDI(Y)`.
pub fn rdi(gdi_x: f64, gdi_y: f64) -> Result<Relative> {
    relative(gdi_x, gdi_y, ANALYTIC_EPS)
}

/// Relative variation index `GVI(X) / GVI(Y)`.
pub fn rvi(gvi_x: f64, gvi_y: f64) -> Result<Relative> {
    relative(gvi_x, gvi_y, ANALYTIC_EPS)
}

/// Moore–Penrose inverse of a symmetric matrix by spectral decomposition;
/// eigenvalues below `1e-12 · max|λ|` are treated as zero.
pub fn pinv_symmetric(w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_symmetric(w)?;
    let eig = SymmetricEigen::new(w.clone());
    let max = eig.eigenvalues.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    let cutoff = 1e-12 * max;
    let inv = eig.eigenvalues.map(|l| if l.abs() > cutoff { 1.0 / l } else { 0.0 });
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose())
}

fn check_symmetric(w: &DMatrix<f64>) -> Result<()> {
    if !w.is_square() {
        return Err(Error::domain("matrix is not square"));
    }
    let scale = w.amax().max(f64::MIN_POSITIVE);
    for i in 0..w.nrows() {
        for j in (i + 1)..w.ncols() {
            if (w[(i, j)] - w[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::domain(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// Relative variability index `tr(cov_x · W⁺)` for a symmetric PSD `w`.
pub fn rwi(cov_x: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<f64> {
    if cov_x.shape() != w.shape() {
        return Err(Error::domain("cov_x and w must have the same shape"));
    }
    let pinv = pinv_symmetric(w)?;
    Ok((cov_x * pinv).trace())
}

/// `rwi` for `w = v vᵀ`, using `W⁺ = v vᵀ / ‖v‖⁴`.
pub fn rwi_rank_one(cov_x: &DMatrix<f64>, v: &DVector<f64>) -> Result<f64> {
    if cov_x.nrows() != v.len() || !cov_x.is_square() {
        return Err(Error::domain("dimension mismatch"));
    }
    let vv = v.dot(v);
    if vv == 0.0 {
        return Ok(0.0);
    }
    Ok((v.transpose() * cov_x * v)[(0, 0)] / (vv * vv))
}

/// All four indexes for one column subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetIndexes {
    pub columns: Vec<usize>,
    pub labels: Vec<String>,
    pub gdi: f64,
    pub gvi: f64,
    pub mdi: f64,
    pub mvi: f64,
    pub gdi_class: Variability,
    pub gvi_class: Variability,
    pub mdi_class: Variability,
    pub mvi_class: Variability,
}

/// Univariate, pairwise and joint indexes of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub labels: Vec<String>,
    pub divisor: Divisor,
    pub eps: f64,
    pub margins: Vec<SubsetIndexes>,
    pub pairs: Vec<SubsetIndexes>,
    pub joint: SubsetIndexes,
}

fn subset(mean: &DVector<f64>, cov: &DMatrix<f64>, cols: &[usize], labels: &[String], eps: f64) -> Result<SubsetIndexes> {
    let m = DVector::from_iterator(cols.len(), cols.iter().map(|&j| mean[j]));
    let s = DMatrix::from_fn(cols.len(), cols.len(), |a, b| cov[(cols[a], cols[b])]);
    let (g, v, md, mv) = (gdi(&m, &s)?, gvi(&m, &s)?, mdi(&m, &s)?, mvi(&m, &s)?);
    Ok(SubsetIndexes {
        columns: cols.to_vec(),
        labels: cols.iter().map(|&j| labels[j].clone()).collect(),
        gdi: g,
        gvi: v,
        mdi: md,
        mvi: mv,
        gdi_class: Variability::classify(g, eps),
        gvi_class: Variability::classify(v, eps),
        mdi_class: Variability::classify(md, eps),
        mvi_class: Variability::classify(mv, eps),
    })
}

pub fn index_table(data: &Dataset) -> Result<IndexReport> {
    index_table_with(data, Divisor::default(), EMPIRICAL_EPS)
}

pub fn index_table_with(data: &Dataset, divisor: Divisor, eps: f64) -> Result<IndexReport> {
    let mom = empirical_moments(data, divisor)?;
    let labels = data.labels().to_vec();
    let d = data.ncols();
    let margins = (0..d)
        .map(|j| subset(&mom.mean, &mom.cov, &[j], &labels, eps))
        .collect::<Result<Vec<_>>>()?;
    let mut pairs = Vec::new();
    for a in 0..d {
        for b in (a + 1)..d {
            pairs.push(subset(&mom.mean, &mom.cov, &[a, b], &labels, eps)?);
        }
    }
    let all: Vec<usize> = (0..d).collect();
    let joint = subset(&mom.mean, &mom.cov, &all, &labels, eps)?;
    Ok(IndexReport {
        labels,
        divisor,
        eps,
        margins,
        pairs,
        joint,
    })
}

impl IndexReport {
    fn pair(&self, a: usize, b: usize) -> Option<&SubsetIndexes> {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        self.pairs.iter().find(|p| p.columns == [a, b])
    }

    /// Square table of GVI (or GDI) values: univariate on the diagonal,
    /// pairwise off the diagonal.
    pub fn matrix(&self, dispersion: bool) -> DMatrix<f64> {
        let d = self.labels.len();
        let pick = |s: &SubsetIndexes| if dispersion { s.gdi } else { s.gvi };
        DMatrix::from_fn(d, d, |a, b| {
            if a == b {
                pick(&self.margins[a])
            } else {
                pick(self.pair(a, b).expect("all pairs computed"))
            }
        })
    }

    /// Two stacked blocks (variation then dispersion); the corner cell of
    /// each block holds the joint index. Values are rounded to 4 decimals.
    pub fn write_table_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for (name, dispersion, joint) in [("GVI", false, self.joint.gvi), ("GDI", true, self.joint.gdi)] {
            write!(w, "{name}={joint:.4}")?;
            for l in &self.labels {
                write!(w, ",{l}")?;
            }
            writeln!(w)?;
            let m = self.matrix(dispersion);
            for (a, l) in self.labels.iter().enumerate() {
                write!(w, "{l}")?;
                for b in 0..self.labels.len() {
                    write!(w, ",{:.4}", m[(a, b)])?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{waterpumps, SupportKind};

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn unit_mean_identity_cov_is_equidispersed() {
        assert_eq!(gdi(&v(&[1.0, 1.0]), &DMatrix::identity(2, 2)).unwrap(), 1.0);
    }

    #[test]
    fn exponential_margin_has_unit_vi() {
        let m = 2.5;
        assert_eq!(gvi(&v(&[m]), &DMatrix::from_element(1, 1, m * m)).unwrap(), 1.0);
    }

    #[test]
    fn non_positive_mean_is_rejected() {
        let e = gdi(&v(&[1.0, 0.0]), &DMatrix::identity(2, 2)).unwrap_err();
        assert!(matches!(e, Error::Domain(_)));
        assert!(gvi(&v(&[-1.0]), &DMatrix::identity(1, 1)).is_err());
    }

    #[test]
    fn diagonal_cov_marginal_equals_generalized() {
        let m = v(&[2.0, 3.0, 0.5]);
        let s = DMatrix::from_diagonal(&v(&[1.0, 4.0, 0.3]));
        assert_eq!(mvi(&m, &s).unwrap(), gvi(&m, &s).unwrap());
        assert!((mdi(&m, &s).unwrap() - gdi(&m, &s).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn relative_indexes() {
        let r = rvi(0.0533, 0.0533).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.class, Variability::Equi);
        assert_eq!(rdi(15.1229, 1.0).unwrap().value, 15.1229);
        assert!(rdi(1.0, 0.0).is_err());
        assert!(rvi(1.0, -2.0).is_err());
    }

    #[test]
    fn rwi_identity_is_trace() {
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 5.0]);
        assert_eq!(rwi(&s, &DMatrix::identity(2, 2)).unwrap(), 7.0);
    }

    #[test]
    fn rwi_zero_cov_is_zero() {
        let w = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 2.0]);
        assert_eq!(rwi(&DMatrix::zeros(2, 2), &w).unwrap(), 0.0);
    }

    #[test]
    fn rwi_rejects_asymmetric_weight() {
        let w = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.1, 2.0]);
        assert!(matches!(rwi(&DMatrix::identity(2, 2), &w), Err(Error::Domain(_))));
    }

    #[test]
    fn rwi_rank_one_routes_agree() {
        let s = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, -0.2, 0.5, -0.2, 2.0]);
        let vv = v(&[1.5, 0.7, 2.2]);
        let w = &vv * vv.transpose();
        let spectral = rwi(&s, &w).unwrap();
        let closed = rwi_rank_one(&s, &vv).unwrap();
        assert!((spectral - closed).abs() <= 1e-12 * closed.abs());
    }

    #[test]
    fn waterpumps_table_entries() {
        let r = index_table(&waterpumps()).unwrap();
        let tol = 5e-4;
        assert!((r.joint.gdi - 15.1229).abs() < tol);
        assert!((r.joint.gvi - 0.0533).abs() < tol);
        assert!((r.margins[0].gdi - 89.5860).abs() < tol);
        assert!((r.margins[0].gvi - 1.9425).abs() < tol);
        assert!((r.margins[1].gvi - 0.0167).abs() < tol);
        assert!((r.margins[2].gvi - 0.2122).abs() < tol);
        assert!((r.pair(1, 2).unwrap().gdi - 2.0884).abs() < tol);
        assert!((r.pair(0, 2).unwrap().gvi - 1.0549).abs() < tol);
        assert!((r.pair(0, 2).unwrap().mvi - 0.9857).abs() < tol);
        assert!((r.joint.mvi - 0.0634).abs() < tol);
    }

    #[test]
    fn repeated_row_gives_zero_indexes() {
        let d = Dataset::from_rows_unlabeled(&vec![vec![2.0, 3.0]; 4], SupportKind::Continuous).unwrap();
        let r = index_table(&d).unwrap();
        for s in r.margins.iter().chain(&r.pairs).chain(std::iter::once(&r.joint)) {
            assert_eq!((s.gdi, s.gvi, s.mdi, s.mvi), (0.0, 0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn table_csv_has_corner_values() {
        let r = index_table(&waterpumps()).unwrap();
        let mut buf = Vec::new();
        r.write_table_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("GVI=0.0533,X1,X2,X3\nX1,1.9425,"));
        assert!(s.contains("GDI=15.1230,X1,X2,X3\n"));
        assert!(s.contains("X2,14.3224,1.6623,2.0884\n"));
    }
}
