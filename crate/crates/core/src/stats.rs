//! Summary statistics and Student-t tail probabilities.

/// Neumaier compensated summation; result is insensitive to input order up to
/// the last ulp for well-conditioned sums.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut acc = CompensatedSum::default();
    xs.into_iter().for_each(|x| acc.add(x));
    acc.value()
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(compensated_sum(xs.iter().copied()) / xs.len() as f64)
    }
}

/// Sample standard deviation with divisor `n - ddof`.
pub fn std_dev(xs: &[f64], ddof: usize) -> Option<f64> {
    if xs.len() <= ddof {
        return None;
    }
    let m = mean(xs)?;
    let ss = compensated_sum(xs.iter().map(|x| (x - m) * (x - m)));
    Some((ss / (xs.len() - ddof) as f64).sqrt())
}

/// Moment skewness `m3 / m2^1.5` (population moments). `None` for n < 3 or zero spread.
pub fn skewness(xs: &[f64]) -> Option<f64> {
    if xs.len() < 3 {
        return None;
    }
    let m = mean(xs)?;
    let n = xs.len() as f64;
    let m2 = compensated_sum(xs.iter().map(|x| (x - m).powi(2))) / n;
    let m3 = compensated_sum(xs.iter().map(|x| (x - m).powi(3))) / n;
    if m2 <= 0.0 {
        None
    } else {
        Some(m3 / m2.powf(1.5))
    }
}

/// Linear-interpolation quantile of already-sorted data (Hyndman-Fan type 7).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() || !(0.0..=1.0).contains(&q) {
        return None;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let mut a = LANCZOS[0];
        let t = x + LANCZOS_G + 0.5;
        for (i, c) in LANCZOS.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
    }
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..20_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function I_x(a, b).
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

/// Two-sided tail probability P(|T| ≥ |t|) for Student's t with `df` degrees of freedom.
pub fn student_t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_nan() || df <= 0.0 {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    regularized_incomplete_beta(0.5 * df, 0.5, x).clamp(0.0, 1.0)
}

/// Upper quantile of Student's t: the `t` with P(T > t) = `upper`, found by bisection.
pub fn student_t_upper_quantile(upper: f64, df: f64) -> f64 {
    let target = 2.0 * upper;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while student_t_two_sided_p(hi, df) > target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if student_t_two_sided_p(mid, df) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Outcome of a one-sample, two-sided t-test against zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TTest {
    Done { t: f64, p: f64, df: f64 },
    TooFewObservations,
    ZeroVariance,
}

pub fn one_sample_t_test(xs: &[f64]) -> TTest {
    if xs.len() < 2 {
        return TTest::TooFewObservations;
    }
    let m = mean(xs).unwrap_or(0.0);
    let sd = std_dev(xs, 1).unwrap_or(0.0);
    if sd == 0.0 || !sd.is_finite() {
        return TTest::ZeroVariance;
    }
    let n = xs.len() as f64;
    let t = m / (sd / n.sqrt());
    let df = n - 1.0;
    TTest::Done {
        t,
        p: student_t_two_sided_p(t, df),
        df,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(1.0)).abs() < 1e-14);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-13);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
    }

    #[test]
    fn t_tail_closed_forms() {
        // df = 1 is Cauchy: P(|T| >= t) = 1 - 2 atan(t) / pi
        for &t in &[0.3f64, 1.0, 2.5, 10.0] {
            let exact = 1.0 - 2.0 * f64::atan(t) / std::f64::consts::PI;
            assert!((student_t_two_sided_p(t, 1.0) - exact).abs() < 1e-13);
        }
        // df = 2: P(|T| >= t) = 1 - t / sqrt(2 + t^2)
        for &t in &[0.1f64, 0.7, 3.0, 40.0] {
            let exact = 1.0 - t / (2.0 + t * t).sqrt();
            assert!((student_t_two_sided_p(t, 2.0) - exact).abs() < 1e-13);
        }
        assert_eq!(student_t_two_sided_p(0.0, 7.0), 1.0);
    }

    #[test]
    fn quantile_inverts_tail() {
        let q = student_t_upper_quantile(0.025, 10.0);
        assert!((q - 2.228_138_851_986_274).abs() < 1e-9);
    }

    #[test]
    fn t_test_degenerate_cases() {
        assert_eq!(one_sample_t_test(&[0.1]), TTest::TooFewObservations);
        assert_eq!(one_sample_t_test(&[0.1; 4]), TTest::ZeroVariance);
        assert_eq!(one_sample_t_test(&[0.0; 4]), TTest::ZeroVariance);
    }

    #[test]
    fn moments() {
        let xs = [1.0, 2.0, 3.0, 4.0, 10.0];
        assert_eq!(mean(&xs), Some(4.0));
        assert!((std_dev(&xs, 1).unwrap() - 12.5f64.sqrt()).abs() < 1e-12);
        assert!(skewness(&xs).unwrap() > 0.0);
        assert!(skewness(&[1.0, 2.0, 3.0]).unwrap().abs() < 1e-15);
        let sorted = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(quantile_sorted(&sorted, 0.5), Some(1.5));
    }
}
