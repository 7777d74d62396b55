use crate::scalar::Scalar;

/// `C(m, i)` as a scalar, by the multiplicative formula.
pub fn binomial<S: Scalar>(m: usize, i: usize) -> S {
    if i > m {
        return S::zero();
    }
    let i = i.min(m - i);
    let mut c = S::one();
    for j in 1..=i {
        c = c * S::from_count(m - i + j) / S::from_count(j);
    }
    c
}

/// Single basis polynomial `C(m, i) x^i (1-x)^(m-i)`.
pub fn bernstein_term<S: Scalar>(m: usize, i: usize, x: S) -> S {
    if i > m {
        return S::zero();
    }
    let up = i32::try_from(i).expect("degree fits i32");
    let down = i32::try_from(m - i).expect("degree fits i32");
    binomial::<S>(m, i) * x.powi(up) * (S::one() - x).powi(down)
}

/// `sum_{i=0}^{m} coef(i) C(m, i) x^i (1-x)^(m-i)` for `x` in `[0, 1]`.
///
/// Terms are generated by the ratio `t_{i+1}/t_i = (m-i)/(i+1) * x/(1-x)`,
/// starting from whichever end of the basis carries the larger weight so the
/// seed term never underflows before the bulk of the mass is reached. With
/// `f64` this is accurate up to `m` around 1000; `f32` degrades past ~120.
pub fn bernstein_sum<S, F>(m: usize, x: S, coef: F) -> S
where
    S: Scalar,
    F: Fn(usize) -> S,
{
    let one = S::one();
    if x <= S::zero() {
        return coef(0);
    }
    if x >= one {
        return coef(m);
    }
    if m == 0 {
        return coef(0);
    }
    let mut acc = S::zero();
    if x <= S::half() {
        let ratio = x / (one - x);
        let mut t = (one - x).powi(m as i32);
        for i in 0..=m {
            acc = acc + coef(i) * t;
            if i < m {
                t = t * S::from_count(m - i) / S::from_count(i + 1) * ratio;
            }
        }
    } else {
        let ratio = (one - x) / x;
        let mut t = x.powi(m as i32);
        for i in (0..=m).rev() {
            acc = acc + coef(i) * t;
            if i > 0 {
                t = t * S::from_count(i) / S::from_count(m - i + 1) * ratio;
            }
        }
    }
    acc
}
