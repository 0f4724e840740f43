//! Dense linear algebra for the PCA and SIF paths.
//!
//! The only heavy primitive is an uncentered SVD restricted to right singular
//! vectors, computed with one-sided Jacobi (Hestenes) rotations. The sweep
//! order is fixed, so results are deterministic for identical inputs.

/// Right singular vectors and singular values of a row matrix.
pub struct Svd {
    /// Singular values in descending order, one per requested component.
    pub singular_values: Vec<f64>,
    /// Right singular vectors as columns, each of length `dim`. Components
    /// whose singular value is numerically zero are zero vectors.
    pub right_vectors: Vec<Vec<f64>>,
    /// Number of requested components that fell below the rank tolerance.
    pub zeroed: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Compute the top `top` right singular vectors of the `n x dim` matrix given
/// as rows. No centering is applied. Sign convention: the entry of largest
/// magnitude in each returned vector is positive (first such entry on ties).
#[allow(clippy::needless_range_loop)] // paired column rotations update cols[p] and cols[q] in lockstep
pub fn right_singular_vectors(rows: &[Vec<f64>], top: usize) -> Svd {
    let n = rows.len();
    let dim = if n == 0 { 0 } else { rows[0].len() };
    let top = top.min(dim);
    if n == 0 || dim == 0 || top == 0 {
        return Svd {
            singular_values: vec![0.0; top],
            right_vectors: vec![vec![0.0; dim]; top],
            zeroed: top,
        };
    }

    // Column-major working copy of A and accumulated rotations V.
    let mut cols: Vec<Vec<f64>> = (0..dim).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
    let mut v: Vec<Vec<f64>> = (0..dim)
        .map(|j| (0..dim).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    let tol = 1e-14;
    let max_sweeps = 64;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..dim.saturating_sub(1) {
            for q in (p + 1)..dim {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                if gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let ap = cols[p][i];
                    let aq = cols[q][i];
                    cols[p][i] = c * ap - s * aq;
                    cols[q][i] = s * ap + c * aq;
                }
                for i in 0..dim {
                    let vp = v[p][i];
                    let vq = v[q][i];
                    v[p][i] = c * vp - s * vq;
                    v[q][i] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..dim).collect();
    let norms: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap().then(a.cmp(&b)));

    let sigma_max = norms[order[0]];
    let rank_tol = sigma_max * 1e-12 * (n.max(dim) as f64);

    let mut singular_values = Vec::with_capacity(top);
    let mut right_vectors = Vec::with_capacity(top);
    let mut zeroed = 0;
    for &j in order.iter().take(top) {
        if norms[j] <= rank_tol || sigma_max == 0.0 {
            singular_values.push(0.0);
            right_vectors.push(vec![0.0; dim]);
            zeroed += 1;
        } else {
            singular_values.push(norms[j]);
            right_vectors.push(fix_sign(v[j].clone()));
        }
    }
    Svd {
        singular_values,
        right_vectors,
        zeroed,
    }
}

/// Flip the vector so its largest-magnitude entry (first on ties) is positive.
pub fn fix_sign(mut v: Vec<f64>) -> Vec<f64> {
    let mut best = 0;
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

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine distance `1 - cos(a, b)`; zero-norm inputs give distance 0, and
/// bit-identical inputs give exactly 0.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    if a == b {
        return 0.0;
    }
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (1.0 - dot(a, b) / (na * nb)).max(0.0)
}
