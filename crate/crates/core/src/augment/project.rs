/// Euclidean projection onto `{s in [0, 1]^n : sum(s) <= budget}`.
///
/// The projection is `clip(v - t, 0, 1)` for the smallest shift `t >= 0` that
/// meets the budget; `t` is found by bisection and the upper end of the final
/// bracket is used so the result never exceeds the budget.
pub fn project_budget(values: &[f64], budget: f64) -> Vec<f64> {
    let budget = budget.max(0.0);
    let clipped: Vec<f64> = values.iter().map(|v| clip(*v)).collect();
    if clipped.iter().sum::<f64>() <= budget {
        return clipped;
    }
    let mass = |t: f64| values.iter().map(|v| clip(v - t)).sum::<f64>();
    let (mut lo, mut hi) = (0.0, values.iter().copied().fold(0.0, f64::max));
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mass(mid) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    values.iter().map(|v| clip(v - hi)).collect()
}

fn clip(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn water_filling_example() {
        let s = project_budget(&[0.5, 0.5], 0.6);
        assert_abs_diff_eq!(s[0], 0.3, epsilon = 1e-11);
        assert_abs_diff_eq!(s[1], 0.3, epsilon = 1e-11);
    }

    #[test]
    fn pure_clipping() {
        assert_eq!(project_budget(&[1.7, -0.2], 10.0), vec![1.0, 0.0]);
    }

    #[test]
    fn feasible_unchanged() {
        let v = [0.1, 0.25, 0.0, 0.6];
        assert_eq!(project_budget(&v, 1.0), v.to_vec());
    }

    #[test]
    fn zero_budget_gives_zeros() {
        assert!(project_budget(&[0.4, 2.0, 0.1], 0.0).iter().all(|x| *x == 0.0));
    }

    proptest! {
        #[test]
        fn feasible_and_idempotent(
            v in prop::collection::vec(-1.0f64..2.0, 1..20),
            budget in 0.0f64..5.0,
        ) {
            let s = project_budget(&v, budget);
            prop_assert!(s.iter().all(|x| (0.0..=1.0).contains(x)));
            prop_assert!(s.iter().sum::<f64>() <= budget + 1e-9);
            let t = project_budget(&s, budget);
            for (a, b) in s.iter().zip(&t) {
                prop_assert!((a - b).abs() <= 1e-10);
            }
        }
    }
}
