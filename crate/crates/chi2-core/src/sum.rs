/// Neumaier-compensated summation. Keeps the accumulated rounding error below
/// a few ulps independently of the number of terms, which matters for
/// divergence sums over 1e4+ classes whose terms span many orders of
/// magnitude.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
