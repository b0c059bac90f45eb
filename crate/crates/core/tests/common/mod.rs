//! Small dense complex matrices built from scratch, for cross-checks.
#![allow(dead_code)]

use num_complex::Complex64;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Clone, Debug)]
pub struct Dense {
    pub n: usize,
    pub a: Vec<Complex64>,
}

impl Dense {
    pub fn zeros(n: usize) -> Self {
        Self { n, a: vec![Complex64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.a[i * self.n + j]
    }

    pub fn kron(&self, other: &Dense) -> Dense {
        let n = self.n * other.n;
        let mut m = Dense::zeros(n);
        for i in 0..self.n {
            for j in 0..self.n {
                for k in 0..other.n {
                    for l in 0..other.n {
                        m.a[(i * other.n + k) * n + j * other.n + l] = self.get(i, j) * other.get(k, l);
                    }
                }
            }
        }
        m
    }

    pub fn mul(&self, other: &Dense) -> Dense {
        let n = self.n;
        let mut m = Dense::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let x = self.a[i * n + k];
                if x == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    m.a[i * n + j] += x * other.a[k * n + j];
                }
            }
        }
        m
    }

    pub fn add(&self, other: &Dense) -> Dense {
        Dense { n: self.n, a: self.a.iter().zip(&other.a).map(|(x, y)| x + y).collect() }
    }

    pub fn scale(&self, s: Complex64) -> Dense {
        Dense { n: self.n, a: self.a.iter().map(|x| x * s).collect() }
    }

    pub fn commutator(&self, other: &Dense) -> Dense {
        self.mul(other).add(&other.mul(self).scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum()).collect()
    }

    /// `exp(s·self)` by Taylor series with scaling and squaring.
    pub fn exp_scaled(&self, s: Complex64) -> Dense {
        let norm: f64 = self.a.iter().map(|x| x.norm()).sum::<f64>() * s.norm();
        let mut squarings = 0;
        while norm / f64::powi(2.0, squarings) > 0.1 {
            squarings += 1;
        }
        let arg = self.scale(s / f64::powi(2.0, squarings));
        let mut result = Dense::identity(self.n);
        let mut term = Dense::identity(self.n);
        for k in 1..=20 {
            term = term.mul(&arg).scale(Complex64::new(1.0 / k as f64, 0.0));
            result = result.add(&term);
        }
        for _ in 0..squarings {
            result = result.mul(&result);
        }
        result
    }
}

pub fn pauli(kind: char) -> Dense {
    let z = Complex64::new(0.0, 0.0);
    let o = Complex64::new(1.0, 0.0);
    let a = match kind {
        'I' => vec![o, z, z, o],
        'X' => vec![z, o, o, z],
        'Y' => vec![z, -I, I, z],
        'Z' => vec![o, z, z, -o],
        _ => panic!("unknown Pauli {kind}"),
    };
    Dense { n: 2, a }
}

/// Pauli `kind` on `site` of an `sites`-spin register, site 0 being the
/// least significant bit of the basis index.
pub fn on_site(kind: char, site: usize, sites: usize) -> Dense {
    // kron puts its first factor on the most significant bit
    (0..sites).rev().fold(Dense::identity(1), |acc, s| acc.kron(&pauli(if s == site { kind } else { 'I' })))
}

pub fn static_h(fields: &[f64], coupling: f64) -> Dense {
    let l = fields.len();
    let mut h = Dense::zeros(1 << l);
    for (i, hi) in fields.iter().enumerate() {
        h = h.add(&on_site('Z', i, l).scale(Complex64::new(*hi, 0.0)));
    }
    for i in 0..l - 1 {
        h = h.add(&on_site('Z', i, l).mul(&on_site('Z', i + 1, l)).scale(Complex64::new(coupling, 0.0)));
    }
    h
}

pub fn drive_h(sites: usize, amplitude: f64) -> Dense {
    let mut h = Dense::zeros(1 << sites);
    for i in 0..sites {
        h = h.add(&on_site('X', i, sites).scale(Complex64::new(amplitude, 0.0)));
    }
    h
}

pub fn envelope(t: f64, omega: f64) -> f64 {
    (1.0 - (omega * t).cos()) / 2.0
}

/// Time-ordered one-period propagator from `steps` exact midpoint exponentials.
pub fn midpoint_propagator(fields: &[f64], coupling: f64, amplitude: f64, omega: f64, steps: usize) -> Dense {
    let h0 = static_h(fields, coupling);
    let hd = drive_h(fields.len(), amplitude);
    let dt = 2.0 * std::f64::consts::PI / omega / steps as f64;
    let mut u = Dense::identity(h0.n);
    for k in 0..steps {
        let t = (k as f64 + 0.5) * dt;
        let h = h0.add(&hd.scale(Complex64::new(envelope(t, omega), 0.0)));
        u = h.exp_scaled(-I * dt).mul(&u);
    }
    u
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            loop {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    let w = 2.0 / ((1.0 - x * x) * dp * dp);
                    return (x, w);
                }
            }
        })
        .collect()
}
