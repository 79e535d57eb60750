//! Rewriting a zero-sum combination `sum_i l_i x_i` as a nonnegative combination
//! of differences `c (x_j - x_k)`, with total coefficient mass equal to the
//! positive part of `l`.

use serde::{Deserialize, Serialize};

use crate::dynamics::sq_dist;
use crate::error::{HkError, Result};
use crate::profile::diameter;

/// Zero-sum tolerance on the input weights, relative to their absolute sum.
pub const ZERO_SUM_RTOL: f64 = 1e-12;

/// `coef * (x_plus - x_minus)` with `coef >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedTerm {
    pub coef: f64,
    pub plus: usize,
    pub minus: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MatchedForm {
    pub terms: Vec<MatchedTerm>,
    pub positive_mass: f64,
}

/// Peels the most negative weight against a prefix of the largest positive
/// ones, leaves the partial remainder on the last prefix entry, and recurses on
/// what is left. Ties in the descending order are broken by index.
pub fn match_decomposition(lambda: &[f64]) -> Result<MatchedForm> {
    if lambda.is_empty() {
        return Err(HkError::Precondition("need at least one weight".into()));
    }
    if lambda.iter().any(|l| !l.is_finite()) {
        return Err(HkError::Precondition("weights must be finite".into()));
    }
    let abs_sum: f64 = lambda.iter().map(|l| l.abs()).sum();
    let drift: f64 = lambda.iter().sum();
    if drift.abs() > ZERO_SUM_RTOL * abs_sum {
        return Err(HkError::Precondition(format!(
            "weights must sum to zero (sum = {drift:e}, absolute sum = {abs_sum:e})"
        )));
    }

    let mut vals = lambda.to_vec();
    if drift != 0.0 {
        let k = (0..vals.len()).max_by(|&a, &b| vals[a].abs().total_cmp(&vals[b].abs())).expect("nonempty");
        vals[k] -= drift;
    }

    let mut window: Vec<usize> = (0..vals.len()).collect();
    let mut form = MatchedForm::default();
    let emit = |coef: f64, plus: usize, minus: usize, form: &mut MatchedForm| {
        if coef > 0.0 {
            form.terms.push(MatchedTerm { coef, plus, minus });
            form.positive_mass += coef;
        }
    };
    while window.len() >= 2 {
        window.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
        let last = *window.last().expect("len >= 2");
        let need = -vals[last];
        if need <= 0.0 {
            break;
        }
        let body = &window[..window.len() - 1];
        let mut prefix = 0.0;
        let mut cut = body.len() - 1;
        for (m, &k) in body.iter().enumerate() {
            // the last entry absorbs whatever rounding left uncovered
            if m + 1 == body.len() || prefix + vals[k] >= need {
                cut = m;
                break;
            }
            prefix += vals[k];
        }
        for &k in &body[..cut] {
            emit(vals[k], k, last, &mut form);
        }
        let pivot = body[cut];
        emit(need - prefix, pivot, last, &mut form);
        vals[pivot] = prefix + vals[pivot] - need;
        vals[last] = 0.0;
        window = body[cut..].to_vec();
    }
    Ok(form)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionCheck {
    pub ok: bool,
    /// `|sum_i l_i x_i - sum c (x_plus - x_minus)|`.
    pub residual: f64,
    pub residual_bound: f64,
    /// `|positive_mass - sum_{l_j >= 0} l_j|`.
    pub mass_error: f64,
}

pub const RESIDUAL_RTOL: f64 = 1e-10;
pub const MASS_TOL: f64 = 1e-10;

/// Checks both identities of a matched form against the original weights.
pub fn verify_decomposition<P: AsRef<[f64]>>(lambda: &[f64], points: &[P], form: &MatchedForm) -> DecompositionCheck {
    let pts: Vec<&[f64]> = points.iter().map(AsRef::as_ref).collect();
    let d = pts.first().map_or(0, |p| p.len());
    let shapes_ok = lambda.len() == pts.len()
        && pts.iter().all(|p| p.len() == d)
        && form.terms.iter().all(|t| t.plus < pts.len() && t.minus < pts.len());
    if !shapes_ok {
        return DecompositionCheck { ok: false, residual: f64::INFINITY, residual_bound: 0.0, mass_error: f64::INFINITY };
    }

    let mut r = vec![0.0; d];
    for (l, p) in lambda.iter().zip(&pts) {
        r.iter_mut().zip(*p).for_each(|(ri, pi)| *ri += l * pi);
    }
    for t in &form.terms {
        for ((ri, a), b) in r.iter_mut().zip(pts[t.plus]).zip(pts[t.minus]) {
            *ri -= t.coef * (a - b);
        }
    }
    let residual = r.iter().map(|v| v * v).sum::<f64>().sqrt();

    let abs_sum: f64 = lambda.iter().map(|l| l.abs()).sum();
    let diam = if pts.is_empty() { 0.0 } else { diameter(pts.iter().copied()).unwrap_or(0.0) };
    let max_norm = pts.iter().map(|p| sq_dist(p, &vec![0.0; d]).sqrt()).fold(0.0, f64::max);
    // the floor covers rounding in forming sum_i l_i x_i when the points coincide
    let residual_bound = RESIDUAL_RTOL * abs_sum * diam + 4.0 * f64::EPSILON * abs_sum * max_norm;

    let positive: f64 = lambda.iter().filter(|&&l| l >= 0.0).sum();
    let coef_sum: f64 = form.terms.iter().map(|t| t.coef).sum();
    let mass_error = (form.positive_mass - positive).abs().max((coef_sum - positive).abs());

    let ok = form.terms.iter().all(|t| t.coef >= 0.0) && residual <= residual_bound && mass_error <= MASS_TOL;
    DecompositionCheck { ok, residual, residual_bound, mass_error }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn term(coef: f64, plus: usize, minus: usize) -> MatchedTerm {
        MatchedTerm { coef, plus, minus }
    }

    #[test]
    fn two_term_base_case() {
        let f = match_decomposition(&[1.0, -1.0]).unwrap();
        assert_eq!(f.terms, vec![term(1.0, 0, 1)]);
        assert_eq!(f.positive_mass, 1.0);
    }

    #[test]
    fn hand_traced_three_terms() {
        // most negative (ties: later index last) is index 2; 2 >= 1 so pivot is 0
        let f = match_decomposition(&[2.0, -1.0, -1.0]).unwrap();
        assert_eq!(f.terms, vec![term(1.0, 0, 2), term(1.0, 0, 1)]);
        assert_eq!(f.positive_mass, 2.0);
    }

    #[test]
    fn zero_weights_give_empty_form() {
        let f = match_decomposition(&[0.0, 0.0, 0.0]).unwrap();
        assert!(f.terms.is_empty());
        assert_eq!(f.positive_mass, 0.0);
        let pts = [[1.0], [2.0], [3.0]];
        assert!(verify_decomposition(&[0.0; 3], &pts, &f).ok);
    }

    #[test]
    fn non_zero_sum_is_rejected() {
        assert!(matches!(match_decomposition(&[1.0, -0.5]), Err(HkError::Precondition(_))));
    }

    #[test]
    fn tampered_coefficient_fails() {
        let lambda = [0.5, 0.25, -0.75];
        let pts = [[0.0, 1.0], [2.0, 0.0], [1.0, 1.0]];
        let mut f = match_decomposition(&lambda).unwrap();
        assert!(verify_decomposition(&lambda, &pts, &f).ok);
        f.terms[0].coef += 0.1;
        let check = verify_decomposition(&lambda, &pts, &f);
        assert!(!check.ok);
        assert!(check.residual > 0.0);
    }

    fn zero_sum(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1.0..1.0f64, n).prop_map(|mut v| {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            v.iter_mut().for_each(|x| *x -= mean);
            v
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]
        #[test]
        fn decomposition_verifies(
            (lambda, pts) in (1usize..=12, 1usize..=4).prop_flat_map(|(n, d)| {
                (zero_sum(n), prop::collection::vec(prop::collection::vec(-5.0..5.0f64, d), n))
            })
        ) {
            let f = match_decomposition(&lambda).unwrap();
            let check = verify_decomposition(&lambda, &pts, &f);
            prop_assert!(check.ok, "{:?}", check);
            prop_assert!(f.terms.iter().all(|t| t.coef >= -1e-15));
            prop_assert!(f.terms.len() <= 2 * lambda.len());

            // |sum l_i x_i| <= positive mass * max pairwise distance
            let d = pts[0].len();
            let mut s = vec![0.0; d];
            for (l, p) in lambda.iter().zip(&pts) {
                s.iter_mut().zip(p).for_each(|(si, pi)| *si += l * pi);
            }
            let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
            let diam = diameter(pts.iter().map(|p| &p[..])).unwrap();
            prop_assert!(norm <= f.positive_mass * diam + 1e-12);
        }
    }
}
