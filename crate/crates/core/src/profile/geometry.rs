use nalgebra::{DMatrix, DVector};

use crate::dynamics::sq_dist;
use crate::error::{HkError, Result};

/// Largest pairwise distance, which is also the diameter of the convex hull.
pub fn diameter<'a>(points: impl IntoIterator<Item = &'a [f64]>) -> Result<f64> {
    sq_diameter(points).map(f64::sqrt)
}

/// Largest squared pairwise distance.
pub fn sq_diameter<'a>(points: impl IntoIterator<Item = &'a [f64]>) -> Result<f64> {
    let pts: Vec<&[f64]> = points.into_iter().collect();
    if pts.is_empty() {
        return Err(HkError::Domain("diameter of an empty point set".into()));
    }
    let mut best = 0.0f64;
    for (i, p) in pts.iter().enumerate() {
        for q in &pts[i + 1..] {
            best = best.max(sq_dist(p, q));
        }
    }
    Ok(best)
}

/// Every pair of points at most `delta` apart. The empty set is trivially so.
/// Compared on squares, like the neighbor test, so that a distance just above
/// `delta` is not rounded onto it by the square root.
pub fn is_delta_trivial<'a>(points: impl IntoIterator<Item = &'a [f64]>, delta: f64) -> bool {
    let pts: Vec<&[f64]> = points.into_iter().collect();
    pts.is_empty() || sq_diameter(pts).map(|d| d <= delta * delta).unwrap_or(true)
}

#[derive(Debug, Clone, Copy)]
pub struct HullDistanceOptions {
    /// Certified absolute accuracy of the returned distance.
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for HullDistanceOptions {
    fn default() -> Self {
        Self { tolerance: 1e-9, max_iter: 200_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HullDistance {
    /// Upper bound realised by a feasible pair of hull points (0 if the hulls meet).
    pub distance: f64,
    /// Separating-hyperplane lower bound.
    pub lower_bound: f64,
    pub iterations: usize,
}

/// Euclidean distance between `conv(p)` and `conv(q)`.
pub fn hull_distance<P: AsRef<[f64]>, Q: AsRef<[f64]>>(p: &[P], q: &[Q]) -> Result<f64> {
    hull_distance_with(p, q, HullDistanceOptions::default()).map(|h| h.distance)
}

/// Minimum-norm point of `conv(p) - conv(q)` by Wolfe's corral method. The
/// linear oracle over the difference set splits into `argmin <z, p_i>` and
/// `argmax <z, q_j>`, so the difference vertices are never enumerated. Stops once
/// the support-function lower bound meets the current norm.
pub fn hull_distance_with<P: AsRef<[f64]>, Q: AsRef<[f64]>>(
    p: &[P],
    q: &[Q],
    opts: HullDistanceOptions,
) -> Result<HullDistance> {
    let p: Vec<&[f64]> = p.iter().map(AsRef::as_ref).collect();
    let q: Vec<&[f64]> = q.iter().map(AsRef::as_ref).collect();
    if p.is_empty() || q.is_empty() {
        return Err(HkError::Domain("hull distance needs two nonempty point sets".into()));
    }
    let d = p[0].len();
    if p.iter().chain(&q).any(|v| v.len() != d) {
        return Err(HkError::Domain("hull distance: points of mixed dimension".into()));
    }

    let scale = p.iter().chain(&q).flat_map(|v| v.iter()).fold(1.0f64, |m, v| m.max(v.abs()));
    let target = (1e-13 * scale).min(opts.tolerance);

    let vertex = |(i, j): (usize, usize)| -> Vec<f64> { p[i].iter().zip(q[j]).map(|(a, b)| a - b).collect() };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let combine = |corral: &[(usize, usize)], w: &[f64]| {
        let mut z = vec![0.0; d];
        for (&(i, j), &wk) in corral.iter().zip(w) {
            for ((zk, a), b) in z.iter_mut().zip(p[i]).zip(q[j]) {
                *zk += wk * (a - b);
            }
        }
        z
    };

    // start at the closest vertex pair
    let (mut i0, mut j0, mut best) = (0, 0, f64::INFINITY);
    for (i, a) in p.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            let s = sq_dist(a, b);
            if s < best {
                (i0, j0, best) = (i, j, s);
            }
        }
    }
    let mut corral = vec![(i0, j0)];
    let mut w = vec![1.0];
    let mut lower: f64 = 0.0;
    let mut upper = best.sqrt();

    for iter in 0..opts.max_iter {
        let z = combine(&corral, &w);
        upper = dot(&z, &z).sqrt();
        if upper <= target {
            return Ok(HullDistance { distance: 0.0, lower_bound: 0.0, iterations: iter });
        }
        let pz: Vec<f64> = p.iter().map(|v| dot(&z, v)).collect();
        let qz: Vec<f64> = q.iter().map(|v| dot(&z, v)).collect();
        let s = argmin(&pz, |_| true);
        let t = argmax(&qz, |_| true);
        lower = lower.max((pz[s] - qz[t]) / upper);
        if upper - lower <= target {
            return Ok(HullDistance { distance: upper, lower_bound: lower.max(0.0).min(upper), iterations: iter });
        }
        if corral.contains(&(s, t)) {
            break;
        }
        corral.push((s, t));
        w.push(0.0);

        // minor cycle: move to the affine minimiser of the corral, dropping
        // vertices whose weight would turn nonpositive
        loop {
            let pts: Vec<Vec<f64>> = corral.iter().map(|&c| vertex(c)).collect();
            let a = affine_min_norm(&pts);
            if a.iter().all(|&v| v > 0.0) {
                w = a;
                break;
            }
            let mut theta = 1.0;
            let mut drop = 0;
            for k in 0..a.len() {
                if a[k] <= 0.0 {
                    let th = w[k] / (w[k] - a[k]);
                    if th < theta {
                        theta = th;
                        drop = k;
                    }
                }
            }
            for k in 0..w.len() {
                w[k] += theta * (a[k] - w[k]);
            }
            w[drop] = 0.0;
            let keep: Vec<usize> = (0..w.len()).filter(|&k| w[k] > 0.0).collect();
            corral = keep.iter().map(|&k| corral[k]).collect();
            w = keep.iter().map(|&k| w[k]).collect();
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= total);
            if corral.len() == 1 {
                break;
            }
        }
    }

    if upper <= opts.tolerance {
        return Ok(HullDistance { distance: 0.0, lower_bound: 0.0, iterations: opts.max_iter });
    }
    let lower = lower.max(0.0);
    if upper - lower <= opts.tolerance {
        return Ok(HullDistance { distance: upper, lower_bound: lower.min(upper), iterations: opts.max_iter });
    }
    Err(HkError::Numerical { message: "hull distance did not converge".into(), best: upper, gap: upper - lower })
}

/// Weights `a` with `sum a = 1` minimising `|sum a_k v_k|`, by least squares on
/// the differences `v_k - v_0`.
fn affine_min_norm(v: &[Vec<f64>]) -> Vec<f64> {
    let m = v.len();
    if m == 1 {
        return vec![1.0];
    }
    let d = v[0].len();
    let diffs = DMatrix::from_fn(d, m - 1, |r, c| v[c + 1][r] - v[0][r]);
    let rhs = DVector::from_fn(d, |r, _| -v[0][r]);
    let b = diffs
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .unwrap_or_else(|_| DVector::zeros(m - 1));
    let mut a = Vec::with_capacity(m);
    a.push(1.0 - b.iter().sum::<f64>());
    a.extend(b.iter().copied());
    a
}

fn argmin(v: &[f64], keep: impl Fn(usize) -> bool) -> usize {
    (0..v.len()).filter(|&i| keep(i)).min_by(|&a, &b| v[a].total_cmp(&v[b])).expect("nonempty")
}

fn argmax(v: &[f64], keep: impl Fn(usize) -> bool) -> usize {
    (0..v.len()).filter(|&i| keep(i)).max_by(|&a, &b| v[a].total_cmp(&v[b])).expect("nonempty")
}

/// Distance from a point to a segment in closed form; test oracle.
#[cfg(test)]
pub(crate) fn point_segment_distance(x: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab: Vec<f64> = b.iter().zip(a).map(|(u, v)| u - v).collect();
    let ax: Vec<f64> = x.iter().zip(a).map(|(u, v)| u - v).collect();
    let len2: f64 = ab.iter().map(|v| v * v).sum();
    let t = if len2 == 0.0 { 0.0 } else { (ax.iter().zip(&ab).map(|(u, v)| u * v).sum::<f64>() / len2).clamp(0.0, 1.0) };
    let proj: Vec<f64> = a.iter().zip(&ab).map(|(u, v)| u + t * v).collect();
    crate::dynamics::dist(x, &proj)
}
