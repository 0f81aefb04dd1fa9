//! Gauss-Legendre rules on intervals and on the square split at its diagonal.

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on the Legendre recurrence.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let pn = if n == 1 { x } else { p1 };
                let pm = if n == 1 { 1.0 } else { p0 };
                dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
                let dx = pn / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// `int_a^b int_a^b f(s, u) ds du` for integrands that are smooth on each
    /// side of `s = u` but may have a kink on it. Each triangle is mapped to
    /// the unit square (`s = a + (u - a) xi`), so the kink sits on an edge.
    pub fn integrate_square<F: FnMut(f64, f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let mut total = 0.0;
        for (u, wu) in self.mapped(a, b) {
            let len = u - a;
            for (x, wx) in self.mapped(0.0, 1.0) {
                let s = a + len * x;
                let w = wu * wx * len;
                total += w * (f(s, u) + f(u, s));
            }
        }
        total
    }

    /// `int_a^b du int_a^u ds f(s, u)`.
    pub fn integrate_triangle<F: FnMut(f64, f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let mut total = 0.0;
        for (u, wu) in self.mapped(a, b) {
            let len = u - a;
            for (x, wx) in self.mapped(0.0, 1.0) {
                total += wu * wx * len * f(a + len * x, u);
            }
        }
        total
    }
}
