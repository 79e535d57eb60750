use crate::dynamics::{neighborhoods, sq_dist, OpinionState};

/// `Z = sum_{i,j} min(|x_i - x_j|^2, eps^2)` over ordered pairs.
pub fn energy(state: &OpinionState) -> f64 {
    let eps2 = state.epsilon() * state.epsilon();
    let n = state.n();
    let mut z = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            z += sq_dist(state.opinion(i), state.opinion(j)).min(eps2);
        }
    }
    2.0 * z
}

/// `|x_i(t) - x_i(t+1)|^2` per agent.
pub fn displacement_sq(state: &OpinionState, next: &OpinionState) -> Vec<f64> {
    (0..state.n()).map(|i| sq_dist(state.opinion(i), next.opinion(i))).collect()
}

/// `4 sum_i (1 + |N_i| a_i / (1 - a_i) 1{a_i < 1}) |x_i(t) - x_i(t+1)|^2`.
pub fn nl8_lower_bound(state: &OpinionState, next: &OpinionState, alpha: &[f64]) -> f64 {
    nl8_lower_bound_with(&neighborhoods(state), state, next, alpha)
}

pub(crate) fn nl8_lower_bound_with(
    nbrs: &[Vec<usize>],
    state: &OpinionState,
    next: &OpinionState,
    alpha: &[f64],
) -> f64 {
    let disp = displacement_sq(state, next);
    let terms = alpha.iter().zip(nbrs).zip(&disp).map(|((&a, list), &dsq)| {
        let coef = if a < 1.0 { 1.0 + list.len() as f64 * a / (1.0 - a) } else { 1.0 };
        coef * dsq
    });
    4.0 * terms.sum::<f64>()
}

/// Slack for energy inequalities: `1e-9 n^2 eps^2`.
pub fn energy_slack(state: &OpinionState) -> f64 {
    let n = state.n() as f64;
    1e-9 * n * n * state.epsilon() * state.epsilon()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::step;

    /// Brute-force double loop over ordered pairs.
    fn energy_oracle(rows: &[Vec<f64>], eps: f64) -> f64 {
        let mut z = 0.0;
        for a in rows {
            for b in rows {
                let d2: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
                z += d2.min(eps * eps);
            }
        }
        z
    }

    #[test]
    fn energy_examples() {
        let s = OpinionState::new(0, 1, 1.0, vec![0.0, 2.0]).unwrap();
        assert_eq!(energy(&s), 2.0);
        assert_eq!(energy(&s), energy_oracle(&s.rows(), 1.0));
        let s = OpinionState::new(0, 2, 0.4, vec![0.3, 0.3, 0.3, 0.3, 0.3, 0.3]).unwrap();
        assert_eq!(energy(&s), 0.0);
        for eps in [1.0, 0.5, 3.0] {
            let s = OpinionState::new(0, 1, eps, vec![0.0, eps]).unwrap();
            assert_eq!(energy(&s), 2.0 * eps * eps);
        }
    }

    #[test]
    fn energy_matches_oracle() {
        let rows = vec![vec![0.1, 0.2], vec![0.9, 0.4], vec![0.5, 0.5], vec![0.0, 1.0]];
        let s = OpinionState::from_rows(0, 0.6, &rows).unwrap();
        assert!((energy(&s) - energy_oracle(&rows, 0.6)).abs() < 1e-15);
    }

    #[test]
    fn example1_attains_equality() {
        let s = OpinionState::new(0, 1, 1.0, vec![0.0, 1.0]).unwrap();
        let alpha = [0.5, 0.5];
        let next = step(&s, &alpha).unwrap();
        let lhs = energy(&s) - energy(&next);
        let rhs = nl8_lower_bound(&s, &next, &alpha);
        assert!((lhs - 1.5).abs() < 1e-12);
        assert!((rhs - 1.5).abs() < 1e-12);
    }

    #[test]
    fn stubborn_and_synchronous_cases() {
        let s = OpinionState::new(0, 1, 1.0, vec![0.0, 0.4, 0.9]).unwrap();
        let next = step(&s, &[1.0; 3]).unwrap();
        assert_eq!(nl8_lower_bound(&s, &next, &[1.0; 3]), 0.0);

        let next = step(&s, &[0.0; 3]).unwrap();
        let plain: f64 = 4.0 * displacement_sq(&s, &next).iter().sum::<f64>();
        assert_eq!(nl8_lower_bound(&s, &next, &[0.0; 3]), plain);
    }
}
