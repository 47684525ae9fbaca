use num_traits::{FromPrimitive, Num};

/// Gini coefficient of a non-negative wealth vector.
///
/// Uses the rank form `sum_i (2i - n - 1) x_(i) / (n sum x)` over the ascending
/// order statistics, so it is exact for exact number types and returns
/// `(n-1)/n` when one holder owns everything. An all-zero vector has Gini 0.
pub fn wealth_gini<T>(assets: &[T]) -> T
where
    T: Clone + PartialOrd + Num + FromPrimitive,
{
    let n = assets.len();
    if n == 0 {
        return T::zero();
    }
    let mut sorted = assets.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let total = sorted.iter().cloned().fold(T::zero(), |acc, x| acc + x);
    if total == T::zero() {
        return T::zero();
    }
    let n_i = n as i64;
    let weighted = sorted
        .into_iter()
        .enumerate()
        .fold(T::zero(), |acc, (idx, x)| {
            let rank = idx as i64 + 1;
            let w = T::from_i64(2 * rank - n_i - 1).expect("rank weight");
            acc + w * x
        });
    weighted / (T::from_usize(n).expect("n") * total)
}
