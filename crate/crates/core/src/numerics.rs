//! Small numerical helpers: compensated sums and least-squares fits.

use num_complex::Complex64;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

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

/// Componentwise compensated complex sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanComplex {
    re: KahanSum,
    im: KahanSum,
}

impl KahanComplex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

pub fn kahan_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut s = KahanSum::new();
    for x in it {
        s.add(x);
    }
    s.value()
}

/// Float formatting used in every emitted file: 17 significant digits in
/// scientific notation, so values round-trip exactly.
pub fn fmt_sci(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Ordinary least-squares line `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub rms_residual: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = kahan_sum(x.iter().copied()) / n as f64;
    let my = kahan_sum(y.iter().copied()) / n as f64;
    let sxx = kahan_sum(x.iter().map(|&a| (a - mx) * (a - mx)));
    if sxx <= 0.0 {
        return None;
    }
    let sxy = kahan_sum(x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)));
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss = kahan_sum(
        x.iter()
            .zip(y)
            .map(|(&a, &b)| (b - intercept - slope * a).powi(2)),
    );
    Some(LineFit {
        slope,
        intercept,
        rms_residual: (rss / n as f64).sqrt(),
    })
}

/// Least-squares parabola `y = c0 + c1 x + c2 x^2`, returned as `[c0, c1, c2]`.
pub fn fit_quadratic(x: &[f64], y: &[f64]) -> Option<[f64; 3]> {
    let n = x.len();
    if n < 3 || y.len() != n {
        return None;
    }
    // center and scale for conditioning
    let mx = kahan_sum(x.iter().copied()) / n as f64;
    let sx = x.iter().map(|a| (a - mx).abs()).fold(0.0, f64::max);
    if sx == 0.0 {
        return None;
    }
    let mut m = [[0.0; 3]; 3];
    let mut r = [0.0; 3];
    for (&a, &b) in x.iter().zip(y) {
        let s = (a - mx) / sx;
        let p = [1.0, s, s * s];
        for i in 0..3 {
            r[i] += p[i] * b;
            for j in 0..3 {
                m[i][j] += p[i] * p[j];
            }
        }
    }
    let c = solve3(m, r)?;
    // undo the affine change s = (x - mx) / sx
    let c2 = c[2] / (sx * sx);
    let c1 = c[1] / sx - 2.0 * c2 * mx;
    let c0 = c[0] - c[1] * mx / sx + c2 * mx * mx;
    Some([c0, c1, c2])
}

fn solve3(mut m: [[f64; 3]; 3], mut r: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            r[row] -= f * r[col];
        }
    }
    let mut out = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|k| m[i][k] * out[k]).sum();
        out[i] = (r[i] - s) / m[i][i];
    }
    Some(out)
}

/// `n` points spaced evenly in log between `a` and `b` (both positive).
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect()
}
