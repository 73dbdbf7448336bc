// Float helpers that core does not provide without std.

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn expm1(x: f64) -> f64 {
    libm::expm1(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn hypot(a: f64, b: f64) -> f64 {
    libm::hypot(a, b)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

pub(crate) fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Four-point Gauss–Legendre rule on `[0, 1]`: (node, weight) pairs.
pub(crate) const GAUSS_4: [(f64, f64); 4] = [
    (0.069_431_844_202_973_71, 0.173_927_422_568_726_84),
    (0.330_009_478_207_571_87, 0.326_072_577_431_273_1),
    (0.669_990_521_792_428_1, 0.326_072_577_431_273_1),
    (0.930_568_155_797_026_2, 0.173_927_422_568_726_84),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rule_integrates_degree_seven_exactly() {
        for deg in 0..=7 {
            let approx: f64 = GAUSS_4.iter().map(|(s, w)| w * s.powi(deg)).sum();
            let exact = 1.0 / (deg as f64 + 1.0);
            assert!((approx - exact).abs() < 1e-15, "degree {deg}");
        }
    }
}
