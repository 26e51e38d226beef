//! Chebyshev–Gauss–Lobatto toolkit on the reference interval [-1, 1].
//!
//! Nodes are stored in ascending order, `x_j = -cos(pi j / d)`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

/// Nodes, weights and dense operators for one polynomial degree.
#[derive(Debug)]
pub struct ChebBasis {
    pub degree: usize,
    pub nodes: Vec<f64>,
    /// Barycentric weights.
    pub bary: Vec<f64>,
    /// Clenshaw–Curtis quadrature weights on [-1, 1].
    pub quad: Vec<f64>,
    /// First derivative matrix, row-major `(d+1) x (d+1)`.
    pub diff: Vec<f64>,
    /// Second derivative matrix, row-major.
    pub diff2: Vec<f64>,
    /// Cumulative integral from -1 to each node, row-major.
    pub cumint: Vec<f64>,
}

impl ChebBasis {
    pub fn new(degree: usize) -> Self {
        assert!(degree >= 1, "Chebyshev degree must be at least 1");
        let d = degree;
        let np = d + 1;
        let theta: Vec<f64> = (0..np).map(|j| PI * j as f64 / d as f64).collect();
        // -cos(theta_j) written as a sine keeps the node set exactly symmetric.
        let nodes: Vec<f64> = (0..np)
            .map(|j| (PI * (2.0 * j as f64 - d as f64) / (2.0 * d as f64)).sin())
            .collect();
        let bary: Vec<f64> = (0..np)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == d {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();

        let mut diff = vec![0.0; np * np];
        for i in 0..np {
            let mut row_sum = 0.0;
            for j in 0..np {
                if i == j {
                    continue;
                }
                // x_i - x_j = 2 sin((t_i + t_j)/2) sin((t_i - t_j)/2)
                let dx = 2.0 * ((theta[i] + theta[j]) / 2.0).sin() * ((theta[i] - theta[j]) / 2.0).sin();
                let v = bary[j] / bary[i] / dx;
                diff[i * np + j] = v;
                row_sum += v;
            }
            diff[i * np + i] = -row_sum;
        }
        let diff2 = matmul(&diff, &diff, np);

        let quad = clenshaw_curtis(d, &theta);
        let cumint = cumulative_integral(d);

        ChebBasis { degree, nodes, bary, quad, diff, diff2, cumint }
    }

    pub fn len(&self) -> usize {
        self.degree + 1
    }

    /// Shared instance for `degree`, built at most once per process.
    pub fn cached(degree: usize) -> Arc<ChebBasis> {
        static CACHE: OnceLock<RwLock<HashMap<usize, Arc<ChebBasis>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
        if let Some(b) = cache.read().expect("basis cache poisoned").get(&degree) {
            return b.clone();
        }
        let built = Arc::new(ChebBasis::new(degree));
        let mut w = cache.write().expect("basis cache poisoned");
        w.entry(degree).or_insert(built).clone()
    }

    /// Barycentric interpolation weights for evaluating the interpolant at `x`.
    pub fn interp_row(&self, x: f64) -> Vec<f64> {
        let np = self.len();
        let mut row = vec![0.0; np];
        for j in 0..np {
            if x == self.nodes[j] {
                row[j] = 1.0;
                return row;
            }
        }
        let mut denom = 0.0;
        for j in 0..np {
            let t = self.bary[j] / (x - self.nodes[j]);
            row[j] = t;
            denom += t;
        }
        for r in row.iter_mut() {
            *r /= denom;
        }
        row
    }

    /// Row-major `(2d+1) x (d+1)` matrix evaluating the interpolant on the
    /// degree-2d node set; with the degree-2d weights it integrates products of
    /// two interpolants exactly.
    pub fn upsample(&self) -> Arc<Vec<f64>> {
        static CACHE: OnceLock<RwLock<HashMap<usize, Arc<Vec<f64>>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
        if let Some(m) = cache.read().expect("upsample cache poisoned").get(&self.degree) {
            return m.clone();
        }
        let fine = ChebBasis::cached(2 * self.degree);
        let mut m = Vec::with_capacity(fine.len() * self.len());
        for &x in &fine.nodes {
            m.extend(self.interp_row(x));
        }
        let built = Arc::new(m);
        cache.write().expect("upsample cache poisoned").entry(self.degree).or_insert(built).clone()
    }

    /// Chebyshev coefficients of the interpolant through nodal values.
    pub fn coefficients(&self, values: &[f64]) -> Vec<f64> {
        coefficients(self.degree, values)
    }
}

fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    c
}

fn clenshaw_curtis(d: usize, theta: &[f64]) -> Vec<f64> {
    let np = d + 1;
    let mut w = vec![0.0; np];
    if d == 1 {
        return vec![1.0, 1.0];
    }
    let interior: Vec<usize> = (1..d).collect();
    let mut v = vec![1.0; np];
    if d % 2 == 0 {
        w[0] = 1.0 / (d * d - 1) as f64;
        w[d] = w[0];
        for k in 1..d / 2 {
            for &j in &interior {
                v[j] -= 2.0 * (2.0 * k as f64 * theta[j]).cos() / (4 * k * k - 1) as f64;
            }
        }
        for &j in &interior {
            v[j] -= (d as f64 * theta[j]).cos() / (d * d - 1) as f64;
        }
    } else {
        w[0] = 1.0 / (d * d) as f64;
        w[d] = w[0];
        for k in 1..=(d - 1) / 2 {
            for &j in &interior {
                v[j] -= 2.0 * (2.0 * k as f64 * theta[j]).cos() / (4 * k * k - 1) as f64;
            }
        }
    }
    for &j in &interior {
        w[j] = 2.0 * v[j] / d as f64;
    }
    // Nodes are symmetric so ascending order leaves the weights unchanged.
    w
}

/// Matrix mapping nodal values to the integral of the interpolant from -1 to
/// each node.
fn cumulative_integral(d: usize) -> Vec<f64> {
    let basis_nodes: Vec<f64> = (0..=d)
        .map(|j| (PI * (2.0 * j as f64 - d as f64) / (2.0 * d as f64)).sin())
        .collect();
    let np = d + 1;
    let mut m = vec![0.0; np * np];
    for col in 0..np {
        let mut e = vec![0.0; np];
        e[col] = 1.0;
        let c = coefficients(d, &e);
        // Integrate the Chebyshev series: coefficients of degree up to d+1.
        let mut ic = vec![0.0; d + 2];
        for (k, &ck) in c.iter().enumerate() {
            match k {
                0 => ic[1] += ck,
                1 => ic[2] += ck / 4.0,
                _ => {
                    ic[k + 1] += ck / (2.0 * (k + 1) as f64);
                    ic[k - 1] -= ck / (2.0 * (k - 1) as f64);
                }
            }
        }
        let at_minus_one: f64 = ic
            .iter()
            .enumerate()
            .map(|(k, &a)| if k % 2 == 0 { a } else { -a })
            .sum();
        for (i, &x) in basis_nodes.iter().enumerate() {
            m[i * np + col] = clenshaw(&ic, x) - at_minus_one;
        }
    }
    m
}

fn coefficients(d: usize, values: &[f64]) -> Vec<f64> {
    let np = d + 1;
    let mut c = vec![0.0; np];
    for (k, ck) in c.iter_mut().enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let mut s = 0.0;
        for j in 0..np {
            let t = (k as f64 * PI * j as f64 / d as f64).cos() * sign;
            let w = if j == 0 || j == d { 0.5 } else { 1.0 };
            s += w * values[j] * t;
        }
        let scale = if k == 0 || k == d { 1.0 / d as f64 } else { 2.0 / d as f64 };
        *ck = s * scale;
    }
    c
}

/// Evaluates a Chebyshev series at `x` by Clenshaw recurrence.
pub fn clenshaw(c: &[f64], x: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &ck in c.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    x * b1 - b2 + c.first().copied().unwrap_or(0.0)
}
