//! Deterministic fallback 2-D projection: principal directions of the
//! mean-centered vectors, with canonicalized loading signs. Stands in for an
//! externally computed embedding when none is imported.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

use super::{MapCoordinates, MapProvenance, PointSpace, VectorStore};

/// Projects the store onto its top-2 principal directions. Orientation is
/// canonicalized: each loading's largest-magnitude component is positive, so
/// two runs on identical input are bit-for-bit identical.
pub fn fallback_project(store: &VectorStore) -> Result<MapCoordinates> {
    let n = store.len();
    let d = store.dim();
    if n < 3 {
        return Err(Error::invalid(format!(
            "fallback projection needs at least 3 vectors, got {n}"
        )));
    }

    // Mean-centered data, f64.
    let mut centered = DMatrix::<f64>::zeros(n, d);
    let mut mean = vec![0.0f64; d];
    for i in 0..n {
        for (j, v) in store.row(i).iter().enumerate() {
            mean[j] += *v as f64;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    for i in 0..n {
        for (j, v) in store.row(i).iter().enumerate() {
            centered[(i, j)] = *v as f64 - mean[j];
        }
    }

    // Work in whichever space is smaller: the d×d scatter matrix, or the
    // n×n Gram matrix when the dimension exceeds the sample count.
    let loadings = if d <= n {
        let scatter = centered.transpose() * &centered;
        top2_eigenvectors(&scatter)?
    } else {
        let gram = &centered * centered.transpose();
        let u = top2_eigenvectors(&gram)?;
        // Map Gram-space eigenvectors back to loadings and renormalize.
        u.into_iter()
            .map(|col| {
                let v = centered.transpose() * DMatrix::from_column_slice(n, 1, &col);
                let norm = v.norm();
                if norm <= 0.0 {
                    return Err(Error::invalid("zero-variance input: degenerate loading"));
                }
                Ok(v.column(0).iter().map(|x| x / norm).collect::<Vec<f64>>())
            })
            .collect::<Result<Vec<_>>>()?
    };

    let canonical: Vec<Vec<f64>> = loadings.into_iter().map(canonicalize_sign).collect();

    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = 0.0;
        let mut y = 0.0;
        for j in 0..d {
            let c = centered[(i, j)];
            x += c * canonical[0][j];
            y += c * canonical[1][j];
        }
        points.push([x, y]);
    }

    MapCoordinates::from_parts(
        store.ids().to_vec(),
        points,
        MapProvenance::FallbackProjection,
    )
}

/// Top-2 eigenvectors of a symmetric PSD matrix, sorted by descending
/// eigenvalue (index order on ties). Errors when the leading eigenvalue is
/// not positive, i.e. the input had zero variance.
fn top2_eigenvectors(mat: &DMatrix<f64>) -> Result<Vec<Vec<f64>>> {
    let m = mat.nrows();
    let eigen = mat.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .total_cmp(&eigen.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let tol = 1e-12 * mat.trace().abs().max(1.0);
    if eigen.eigenvalues[order[0]] <= tol {
        return Err(Error::invalid("zero-variance input: nothing to project"));
    }
    Ok(order
        .iter()
        .take(2)
        .map(|&i| eigen.eigenvectors.column(i).iter().copied().collect())
        .collect())
}

/// Flips the vector if its largest-magnitude component (first such index on
/// ties) is negative.
fn canonicalize_sign(mut v: Vec<f64>) -> Vec<f64> {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in &mut v {
            *x = -*x;
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::PaperId;

    fn store_from(rows: Vec<Vec<f32>>) -> VectorStore {
        let dim = rows[0].len();
        let entries = rows
            .into_iter()
            .enumerate()
            .map(|(i, v)| (PaperId::new(format!("p{i:03}")), v))
            .collect();
        VectorStore::from_parts(dim, entries).unwrap()
    }

    #[test]
    fn two_d_diagonal_covariance_is_identity_up_to_convention() {
        // Centered points with variance 3 along x and 1 along y.
        let rows = vec![
            vec![3.0f32, 0.0],
            vec![-3.0, 0.0],
            vec![3.0, 0.0],
            vec![-3.0, 0.0],
            vec![0.0, 2.0],
            vec![0.0, -2.0],
        ];
        let store = store_from(rows.clone());
        let coords = fallback_project(&store).unwrap();
        for (i, row) in rows.iter().enumerate() {
            let p = coords.point(i);
            assert!((p[0] - row[0] as f64).abs() < 1e-9, "x at {i}: {p:?}");
            assert!((p[1] - row[1] as f64).abs() < 1e-9, "y at {i}: {p:?}");
        }
    }

    #[test]
    fn identical_vectors_error() {
        let store = store_from(vec![vec![1.0f32, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]]);
        let err = fallback_project(&store).unwrap_err();
        assert!(err.to_string().contains("zero-variance"));
    }

    #[test]
    fn projection_is_deterministic() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let rows: Vec<Vec<f32>> = (0..40)
            .map(|_| (0..6).map(|_| rng.gen_range(-1.0f32..1.0)).collect())
            .collect();
        let store = store_from(rows);
        let a = fallback_project(&store).unwrap();
        let b = fallback_project(&store).unwrap();
        for i in 0..a.len() {
            assert_eq!(a.point(i), b.point(i));
        }
    }

    #[test]
    fn gram_path_used_when_dim_exceeds_count() {
        // 3 points in 5-D spanning a plane.
        let rows = vec![
            vec![1.0f32, 0.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0, 0.0],
            vec![-1.0, -1.0, 0.0, 0.0, 0.0],
        ];
        let store = store_from(rows);
        let coords = fallback_project(&store).unwrap();
        assert_eq!(coords.len(), 3);
        for i in 0..3 {
            assert!(coords.point(i).iter().all(|v| v.is_finite()));
        }
    }
}
