//! Monotone piecewise-cubic Hermite interpolation (Fritsch–Carlson slopes).

/// Shape-preserving cubic interpolant through `(xs[i], ys[i])`.
///
/// `xs` must be strictly increasing. Evaluation outside `[xs[0], xs[n-1]]`
/// returns `None`.
#[derive(Debug, Clone)]
pub struct MonotoneCubic<'a> {
    xs: &'a [f64],
    ys: &'a [f64],
    slopes: Vec<f64>,
}

impl<'a> MonotoneCubic<'a> {
    pub fn new(xs: &'a [f64], ys: &'a [f64]) -> Self {
        assert_eq!(xs.len(), ys.len());
        assert!(xs.len() >= 2, "need at least two nodes");
        let n = xs.len();
        let secants: Vec<f64> = (0..n - 1)
            .map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]))
            .collect();
        let mut slopes = vec![0.0; n];
        if n == 2 {
            slopes[0] = secants[0];
            slopes[1] = secants[0];
        } else {
            for i in 1..n - 1 {
                let (d0, d1) = (secants[i - 1], secants[i]);
                if d0 * d1 <= 0.0 {
                    slopes[i] = 0.0;
                } else {
                    // weighted harmonic mean for non-uniform spacing
                    let h0 = xs[i] - xs[i - 1];
                    let h1 = xs[i + 1] - xs[i];
                    let w0 = 2.0 * h1 + h0;
                    let w1 = h1 + 2.0 * h0;
                    slopes[i] = (w0 + w1) / (w0 / d0 + w1 / d1);
                }
            }
            slopes[0] = end_slope(xs[1] - xs[0], xs[2] - xs[1], secants[0], secants[1]);
            slopes[n - 1] = end_slope(
                xs[n - 1] - xs[n - 2],
                xs[n - 2] - xs[n - 3],
                secants[n - 2],
                secants[n - 3],
            );
        }
        Self { xs, ys, slopes }
    }

    pub fn eval(&self, x: f64) -> Option<f64> {
        let n = self.xs.len();
        if !(x >= self.xs[0] && x <= self.xs[n - 1]) {
            return None;
        }
        let i = match self.xs.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(i) => return Some(self.ys[i]),
            Err(i) => i - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        Some(
            h00 * self.ys[i]
                + h10 * h * self.slopes[i]
                + h01 * self.ys[i + 1]
                + h11 * h * self.slopes[i + 1],
        )
    }
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if s.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        s
    }
}

/// Lagrange interpolation through up to four points.
pub(crate) fn lagrange(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for (i, (&xi, &yi)) in xs.iter().zip(ys).enumerate() {
        let mut w = 1.0;
        for (j, &xj) in xs.iter().enumerate() {
            if i != j {
                w *= (x - xj) / (xi - xj);
            }
        }
        acc += w * yi;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_nodes_and_linear_data() {
        let xs = [0.0, 0.3, 1.0, 1.7, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let mc = MonotoneCubic::new(&xs, &ys);
        for (&x, &y) in xs.iter().zip(&ys) {
            assert_eq!(mc.eval(x), Some(y));
        }
        for i in 0..=60 {
            let x = 3.0 * i as f64 / 60.0;
            assert!((mc.eval(x).unwrap() - (2.0 * x + 1.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn preserves_monotonicity() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let ys = [0.0, 0.0, 0.1, 5.0, 5.0, 5.1];
        let mc = MonotoneCubic::new(&xs, &ys);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=500 {
            let v = mc.eval(5.0 * i as f64 / 500.0).unwrap();
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn outside_range_is_none() {
        let xs = [0.0, 1.0];
        let ys = [1.0, 2.0];
        let mc = MonotoneCubic::new(&xs, &ys);
        assert!(mc.eval(-1e-9).is_none());
        assert!(mc.eval(1.0 + 1e-9).is_none());
        assert!(mc.eval(f64::NAN).is_none());
    }

    #[test]
    fn smooth_data_converges() {
        let err = |n: usize| {
            let xs: Vec<f64> = (0..n).map(|i| 2.0 * i as f64 / (n - 1) as f64).collect();
            let ys: Vec<f64> = xs.iter().map(|x| (2.0 + x * x).sqrt()).collect();
            let mc = MonotoneCubic::new(&xs, &ys);
            (0..1000)
                .map(|i| {
                    let x = 2.0 * (i as f64 + 0.5) / 1000.0;
                    (mc.eval(x).unwrap() - (2.0 + x * x).sqrt()).abs()
                })
                .fold(0.0, f64::max)
        };
        assert!(err(41) < err(21) / 4.0);
    }

    #[test]
    fn lagrange_is_exact_on_cubics() {
        let xs = [0.0, 0.5, 1.25, 2.0];
        let f = |x: f64| 1.0 - x + 0.5 * x * x - 0.25 * x * x * x;
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        for x in [0.1, 0.7, 1.9] {
            assert!((lagrange(&xs, &ys, x) - f(x)).abs() < 1e-13);
        }
    }
}
