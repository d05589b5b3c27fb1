//! Exponential integrals `Ei(x)` and `E1(x)` for real arguments.
//!
//! `Ei(x)` for `x > 0`: power series up to `x = 40`, asymptotic series beyond.
//! `Ei(x)` for `x < 0` is `-E1(-x)`; `E1` uses its power series below 1 and a
//! continued fraction from 1 up.

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SERIES_LIMIT: f64 = 40.0;

/// `E1(x) = ∫_x^∞ e^{-t}/t dt`, `x > 0`.
pub fn e1(x: f64) -> f64 {
    assert!(x > 0.0, "E1 requires a positive argument, got {x}");
    if x < 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -x / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        // Modified Lentz evaluation of the continued fraction.
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// `Ei(x) = PV ∫_{-∞}^x e^t/t dt`, `x ≠ 0`.
pub fn ei(x: f64) -> f64 {
    assert!(x != 0.0, "Ei is singular at zero");
    if x < 0.0 {
        -e1(-x)
    } else if x <= SERIES_LIMIT {
        EULER_GAMMA + x.ln() + ei_series_tail(x)
    } else {
        x.exp() * asymptotic_scaled(x)
    }
}

/// `Ei(x) e^{-x}`, finite for every `x > 0`.
pub fn ei_scaled(x: f64) -> f64 {
    if x > SERIES_LIMIT {
        asymptotic_scaled(x)
    } else {
        ei(x) * (-x).exp()
    }
}

/// `Σ_{k≥1} x^k / (k·k!)`.
fn ei_series_tail(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..400 {
        term *= x / k as f64;
        let add = term / k as f64;
        sum += add;
        if add.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// `(1/x) Σ k!/x^k`, truncated at the smallest term.
fn asymptotic_scaled(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    for k in 1..200 {
        let next = term * k as f64 / x;
        if next > term {
            break;
        }
        term = next;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum / x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn tabulated_values() {
        assert!(rel(ei(1.0), 1.895_117_816_355_936_8) < 1e-14);
        assert!(rel(ei(-1.0), -0.219_383_934_395_520_27) < 1e-14);
        assert!(rel(ei(10.0), 2_492.228_976_241_877_8) < 1e-14);
        assert!(rel(ei(50.0), 1.058_563_689_713_169e20) < 1e-13);
        assert!(rel(ei(-5.0), -0.001_148_295_591_275_326) < 1e-13);
        assert!(rel(e1(0.5), 0.559_773_594_776_160_8) < 1e-14);
    }

    #[test]
    fn derivative_is_exp_over_x() {
        for &x in &[-7.0f64, -1.5, -0.3, 0.2, 0.9, 3.0, 25.0, 39.9, 40.1, 80.0] {
            let h = 1e-5 * x.abs().min(1.0);
            let fd = (ei(x + h) - ei(x - h)) / (2.0 * h);
            assert!(rel(fd, x.exp() / x) < 1e-7, "x = {x}");
        }
    }

    #[test]
    fn branches_agree_at_switch_points() {
        assert!(rel(e1(1.0 - 1e-12), e1(1.0)) < 1e-11);
        let below = EULER_GAMMA + 40.0f64.ln() + ei_series_tail(40.0);
        assert!(rel(below, 40.0f64.exp() * asymptotic_scaled(40.0)) < 1e-14);
    }

    #[test]
    fn scaled_form_stays_finite() {
        let v = ei_scaled(5000.0);
        assert!(v.is_finite() && rel(v, 1.0 / 5000.0 * (1.0 + 1.0 / 5000.0)) < 1e-6);
    }
}
