//! Principal component analysis and the one-vs-rest means variant used
//! for node-local split directions.
//!
//! The solver is self-contained: covariance (or Gram, when there are
//! fewer points than dimensions) matrices are diagonalized with a cyclic
//! Jacobi sweep, which is accurate and entirely adequate at the matrix
//! sizes seen here (at most `min(m, d)` square).

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::row_slice;

/// Relative variance below which a component is considered numerically
/// zero and dropped.
const VARIANCE_FLOOR: f64 = 1e-12;

/// An orthonormal basis fitted to a point cloud: the centroid, the
/// retained component rows, and their variances in non-increasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaBasis {
    center: Vec<f64>,
    components: Vec<Vec<f64>>,
    variances: Vec<f64>,
}

impl PcaBasis {
    pub fn p(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn component(&self, k: usize) -> &[f64] {
        &self.components[k]
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    /// Projects one sample onto the basis.
    pub fn transform_row(&self, sample: &[f64]) -> Result<Vec<f64>> {
        if sample.len() != self.dim() {
            return Err(Error::contract(format!(
                "sample dimension {} does not match basis dimension {}",
                sample.len(),
                self.dim()
            )));
        }
        Ok(self
            .components
            .iter()
            .map(|component| centered_dot(sample, &self.center, component))
            .collect())
    }
}

/// Dot product of `x - center` with `direction`, accumulated in index
/// order. Training-time projections and inference share this exact
/// arithmetic so routing decisions agree bit for bit.
pub fn centered_dot(x: &[f64], center: &[f64], direction: &[f64]) -> f64 {
    let mut acc = 0.0;
    for j in 0..direction.len() {
        acc += (x[j] - center[j]) * direction[j];
    }
    acc
}

/// Fits a PCA basis to all rows of `points`.
pub fn fit_pca(points: &Array2<f64>) -> Result<PcaBasis> {
    let rows: Vec<usize> = (0..points.nrows()).collect();
    fit_pca_rows(points, &rows)
}

/// Fits a PCA basis to the given subset of rows.
///
/// Components are eigenvectors of the sample covariance (divisor m-1)
/// when `d <= m`, or derived from the Gram matrix of the centered rows
/// otherwise. All components with variance above the relative floor are
/// retained. Each component is oriented so its largest-magnitude entry
/// is positive.
pub fn fit_pca_rows(points: &Array2<f64>, rows: &[usize]) -> Result<PcaBasis> {
    let m = rows.len();
    let d = points.ncols();
    if m == 0 {
        return Err(Error::contract("cannot fit PCA to zero points"));
    }

    let mut center = vec![0.0f64; d];
    for &r in rows {
        for (j, &v) in row_slice(points, r).iter().enumerate() {
            center[j] += v;
        }
    }
    for c in &mut center {
        *c /= m as f64;
    }

    if m == 1 || d == 0 {
        return Ok(PcaBasis {
            center,
            components: Vec::new(),
            variances: Vec::new(),
        });
    }

    let mut eigens: Vec<(f64, Vec<f64>)> = if d <= m {
        // d x d covariance route
        let mut cov = vec![vec![0.0f64; d]; d];
        for &r in rows {
            let x = row_slice(points, r);
            for a in 0..d {
                let da = x[a] - center[a];
                for b in a..d {
                    cov[a][b] += da * (x[b] - center[b]);
                }
            }
        }
        let denom = (m - 1) as f64;
        for a in 0..d {
            for b in a..d {
                cov[a][b] /= denom;
                cov[b][a] = cov[a][b];
            }
        }
        let (values, vectors) = jacobi_eigen(cov);
        values.into_iter().zip(vectors).collect()
    } else {
        // m x m Gram route: eigenvectors of Y Y^T / (m-1) lift to
        // component directions Y^T u / |Y^T u|.
        let centered: Vec<Vec<f64>> = rows
            .iter()
            .map(|&r| {
                row_slice(points, r)
                    .iter()
                    .zip(&center)
                    .map(|(&v, &c)| v - c)
                    .collect()
            })
            .collect();
        let denom = (m - 1) as f64;
        let mut gram = vec![vec![0.0f64; m]; m];
        for a in 0..m {
            for b in a..m {
                let mut acc = 0.0;
                for j in 0..d {
                    acc += centered[a][j] * centered[b][j];
                }
                gram[a][b] = acc / denom;
                gram[b][a] = gram[a][b];
            }
        }
        let (values, vectors) = jacobi_eigen(gram);
        let mut out = Vec::new();
        for (lambda, u) in values.into_iter().zip(vectors) {
            if lambda <= 0.0 {
                continue;
            }
            let mut direction = vec![0.0f64; d];
            for (a, &w) in u.iter().enumerate() {
                for j in 0..d {
                    direction[j] += w * centered[a][j];
                }
            }
            let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            for v in &mut direction {
                *v /= norm;
            }
            out.push((lambda, direction));
        }
        out
    };

    for (lambda, _) in &mut eigens {
        if *lambda < 0.0 {
            *lambda = 0.0;
        }
    }
    eigens.sort_by(|a, b| b.0.total_cmp(&a.0));

    let max_var = eigens.first().map_or(0.0, |e| e.0);
    let cutoff = VARIANCE_FLOOR * max_var.max(VARIANCE_FLOOR);
    let mut components = Vec::new();
    let mut variances = Vec::new();
    for (lambda, mut v) in eigens {
        if lambda <= cutoff {
            break;
        }
        orient(&mut v);
        variances.push(lambda);
        components.push(v);
    }

    Ok(PcaBasis {
        center,
        components,
        variances,
    })
}

// Deterministic sign convention: largest-magnitude entry made positive.
fn orient(v: &mut [f64]) {
    let mut idx = 0;
    for (j, x) in v.iter().enumerate() {
        if x.abs() > v[idx].abs() {
            idx = j;
        }
    }
    if v[idx] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Maps `points` into the basis: row i becomes
/// `(x_i - center) . components^T`, a k x p matrix.
pub fn transform(points: &Array2<f64>, basis: &PcaBasis) -> Result<Array2<f64>> {
    let rows: Vec<usize> = (0..points.nrows()).collect();
    transform_rows(points, &rows, basis)
}

/// As [`transform`] for a subset of rows.
pub fn transform_rows(
    points: &Array2<f64>,
    rows: &[usize],
    basis: &PcaBasis,
) -> Result<Array2<f64>> {
    if points.ncols() != basis.dim() {
        return Err(Error::contract(format!(
            "point dimension {} does not match basis dimension {}",
            points.ncols(),
            basis.dim()
        )));
    }
    let p = basis.p();
    let mut data = Vec::with_capacity(rows.len() * p);
    for &r in rows {
        let x = row_slice(points, r);
        for component in basis.components() {
            data.push(centered_dot(x, basis.center(), component));
        }
    }
    Array2::from_shape_vec((rows.len(), p), data).map_err(|e| Error::Internal(e.to_string()))
}

/// For every class present among the rows, the mean of all rows NOT in
/// that class, in ascending class order. A single-class input yields an
/// empty (0 x d) result.
pub fn rest_means(features: &Array2<f64>, labels: &[usize], class_count: usize) -> Array2<f64> {
    let rows: Vec<usize> = (0..features.nrows()).collect();
    rest_means_rows(features, &rows, labels, class_count)
}

/// As [`rest_means`] for a subset of rows (`labels[i]` labels `rows[i]`).
pub fn rest_means_rows(
    features: &Array2<f64>,
    rows: &[usize],
    labels: &[usize],
    class_count: usize,
) -> Array2<f64> {
    let d = features.ncols();
    let n = rows.len();
    let mut class_sum = vec![vec![0.0f64; d]; class_count];
    let mut class_n = vec![0usize; class_count];
    let mut total = vec![0.0f64; d];
    for (&r, &y) in rows.iter().zip(labels) {
        let x = row_slice(features, r);
        for j in 0..d {
            class_sum[y][j] += x[j];
            total[j] += x[j];
        }
        class_n[y] += 1;
    }

    let present: Vec<usize> = (0..class_count).filter(|&c| class_n[c] > 0).collect();
    if present.len() < 2 {
        return Array2::zeros((0, d));
    }
    let mut data = Vec::with_capacity(present.len() * d);
    for &c in &present {
        let rest_n = (n - class_n[c]) as f64;
        for j in 0..d {
            data.push((total[j] - class_sum[c][j]) / rest_n);
        }
    }
    Array2::from_shape_vec((present.len(), d), data).expect("rest-means shape")
}

/// Fits PCA to the one-vs-rest mean points of the rows' classes. With
/// `c` classes present this yields at most `c - 1` components.
pub fn fit_means_pca(
    features: &Array2<f64>,
    labels: &[usize],
    class_count: usize,
) -> Result<PcaBasis> {
    let rows: Vec<usize> = (0..features.nrows()).collect();
    fit_means_pca_rows(features, &rows, labels, class_count)
}

/// As [`fit_means_pca`] for a subset of rows.
pub fn fit_means_pca_rows(
    features: &Array2<f64>,
    rows: &[usize],
    labels: &[usize],
    class_count: usize,
) -> Result<PcaBasis> {
    let means = rest_means_rows(features, rows, labels, class_count);
    if means.nrows() < 2 {
        return Err(Error::contract(
            "means PCA requires at least two classes present",
        ));
    }
    fit_pca(&means)
}

// Cyclic Jacobi diagonalization of a symmetric matrix. Returns
// (eigenvalues, eigenvectors), one vector per eigenvalue.
fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let s = a.len();
    if s == 0 {
        return (Vec::new(), Vec::new());
    }
    // v[r][k]: component r of eigenvector k
    let mut v = vec![vec![0.0f64; s]; s];
    for (k, row) in v.iter_mut().enumerate() {
        row[k] = 1.0;
    }
    let scale: f64 = a
        .iter()
        .flat_map(|row| row.iter().map(|x| x.abs()))
        .fold(0.0, f64::max)
        .max(1.0);
    let tol = 1e-15 * scale;

    for _sweep in 0..64 {
        let mut off = 0.0f64;
        for p in 0..s {
            for q in (p + 1)..s {
                off = off.max(a[p][q].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..s {
            for q in (p + 1)..s {
                if a[p][q].abs() <= tol * 1e-2 {
                    continue;
                }
                let apq = a[p][q];
                let diff = a[q][q] - a[p][p];
                let theta = 0.5 * diff / apq;
                // stable tangent of the rotation angle
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;

                for k in 0..s {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - sn * akq;
                    a[k][q] = sn * akp + c * akq;
                }
                for k in 0..s {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - sn * aqk;
                    a[q][k] = sn * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let rp = row[p];
                    let rq = row[q];
                    row[p] = c * rp - sn * rq;
                    row[q] = sn * rp + c * rq;
                }
            }
        }
    }

    let values: Vec<f64> = (0..s).map(|k| a[k][k]).collect();
    let vectors: Vec<Vec<f64>> = (0..s).map(|k| (0..s).map(|r| v[r][k]).collect()).collect();
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn collinear_points_yield_one_component() {
        let pts = array![[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]];
        let basis = fit_pca(&pts).unwrap();
        assert_eq!(basis.p(), 1);
        assert!((basis.component(0)[0] - SQRT_HALF).abs() < 1e-12);
        assert!((basis.component(0)[1] - SQRT_HALF).abs() < 1e-12);
        assert!((basis.variances()[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_covariance_orders_axes_by_variance() {
        let pts = array![[1.0, 0.0], [-1.0, 0.0], [0.0, 0.5], [0.0, -0.5]];
        let basis = fit_pca(&pts).unwrap();
        assert_eq!(basis.p(), 2);
        assert!((basis.component(0)[0] - 1.0).abs() < 1e-12);
        assert!(basis.component(0)[1].abs() < 1e-12);
        assert!((basis.component(1)[1] - 1.0).abs() < 1e-12);
        let ratio = basis.variances()[0] / basis.variances()[1];
        assert!((ratio - 4.0).abs() < 1e-9);
    }

    #[test]
    fn single_point_has_no_components() {
        let pts = array![[3.0, 4.0, 5.0]];
        let basis = fit_pca(&pts).unwrap();
        assert_eq!(basis.p(), 0);
        assert_eq!(basis.center(), &[3.0, 4.0, 5.0]);
    }

    #[test]
    fn transform_line_fit_gives_signed_distances() {
        let pts = array![[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]];
        let basis = fit_pca(&pts).unwrap();
        let t = transform(&pts, &basis).unwrap();
        let sqrt2 = std::f64::consts::SQRT_2;
        assert!((t[[0, 0]] + sqrt2).abs() < 1e-12);
        assert!(t[[1, 0]].abs() < 1e-12);
        assert!((t[[2, 0]] - sqrt2).abs() < 1e-12);
    }

    #[test]
    fn transform_center_is_zero() {
        let pts = array![[1.0, 2.0], [3.0, 6.0], [2.0, 4.0]];
        let basis = fit_pca(&pts).unwrap();
        let center = Array2::from_shape_vec((1, 2), basis.center().to_vec()).unwrap();
        let t = transform(&center, &basis).unwrap();
        assert!(t.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn zero_component_basis_transforms_to_empty() {
        let pts = array![[1.0, 2.0]];
        let basis = fit_pca(&pts).unwrap();
        let t = transform(&pts, &basis).unwrap();
        assert_eq!(t.shape(), &[1, 0]);
    }

    #[test]
    fn transform_dimension_mismatch_is_contract_error() {
        let basis = fit_pca(&array![[0.0, 0.0], [1.0, 1.0]]).unwrap();
        assert!(transform(&array![[1.0]], &basis).is_err());
        assert!(basis.transform_row(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn rest_means_worked_example_is_exact() {
        let pts = array![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let means = rest_means(&pts, &[0, 1, 2], 3);
        assert_eq!(
            means,
            array![[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]]
        );
    }

    #[test]
    fn rest_means_binary_swaps_class_means() {
        let pts = array![[0.0, 0.0], [2.0, 2.0]];
        let means = rest_means(&pts, &[0, 1], 2);
        assert_eq!(means, array![[2.0, 2.0], [0.0, 0.0]]);
    }

    #[test]
    fn rest_means_single_class_is_empty() {
        let pts = array![[1.0, 2.0], [3.0, 4.0]];
        let means = rest_means(&pts, &[1, 1], 2);
        assert_eq!(means.nrows(), 0);
    }

    #[test]
    fn means_pca_three_class_example_has_two_components() {
        let pts = array![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let basis = fit_means_pca(&pts, &[0, 1, 2], 3).unwrap();
        assert_eq!(basis.p(), 2);
    }

    #[test]
    fn means_pca_binary_has_one_component() {
        let pts = array![
            [0.0, 0.0, 0.0],
            [0.1, -0.1, 0.2],
            [5.0, 5.0, 5.0],
            [5.2, 4.9, 5.1]
        ];
        let basis = fit_means_pca(&pts, &[0, 0, 1, 1], 2).unwrap();
        assert_eq!(basis.p(), 1);
    }

    #[test]
    fn means_pca_coincident_means_has_no_components() {
        // class means coincide, so both rest-means are the same point
        let pts = array![[0.0, 1.0], [0.0, -1.0], [1.0, 0.0], [-1.0, 0.0]];
        let basis = fit_means_pca(&pts, &[0, 0, 1, 1], 2).unwrap();
        assert_eq!(basis.p(), 0);
    }

    #[test]
    fn means_pca_single_class_is_contract_error() {
        let pts = array![[1.0, 2.0], [3.0, 4.0]];
        assert!(fit_means_pca(&pts, &[0, 0], 2).is_err());
    }

    #[test]
    fn gram_route_matches_covariance_route() {
        // 3 points in 5 dims forces the Gram route; verify against the
        // covariance route on an equivalent padded problem.
        let pts = array![
            [1.0, 2.0, 0.0, -1.0, 3.0],
            [0.0, 1.0, 1.0, 0.5, 2.0],
            [2.0, 0.0, -1.0, 1.0, 1.0]
        ];
        let basis = fit_pca(&pts).unwrap();
        assert!(basis.p() <= 2);
        // orthonormal rows
        for a in 0..basis.p() {
            for b in 0..basis.p() {
                let dot: f64 = basis
                    .component(a)
                    .iter()
                    .zip(basis.component(b))
                    .map(|(x, y)| x * y)
                    .sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-8);
            }
        }
        // variances equal the variances of the projected points
        let t = transform(&pts, &basis).unwrap();
        for k in 0..basis.p() {
            let col: Vec<f64> = t.column(k).to_vec();
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let var =
                col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (col.len() - 1) as f64;
            assert!((var - basis.variances()[k]).abs() < 1e-8 * var.max(1.0));
        }
    }
}
