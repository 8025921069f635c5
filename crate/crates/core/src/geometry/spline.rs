use crate::{Error, Result, Vec2};

/// Periodic C² cubic interpolant through the nodes of a closed curve,
/// parametrized by cumulative chord length.
#[derive(Clone, Debug)]
pub struct PeriodicSpline {
    knots: Vec<f64>,
    points: Vec<Vec2>,
    second: Vec<Vec2>,
}

impl PeriodicSpline {
    pub fn new(points: &[Vec2]) -> Result<Self> {
        let n = points.len();
        if n < 3 {
            return Err(Error::Geometry(format!(
                "periodic spline needs at least 3 nodes, got {n}"
            )));
        }
        let mut knots = Vec::with_capacity(n + 1);
        knots.push(0.0);
        for i in 0..n {
            let h = (points[(i + 1) % n] - points[i]).norm();
            if h <= 0.0 || !h.is_finite() {
                return Err(Error::Geometry(format!(
                    "zero-length chord between nodes {i} and {}",
                    (i + 1) % n
                )));
            }
            knots.push(knots[i] + h);
        }
        let h: Vec<f64> = (0..n).map(|i| knots[i + 1] - knots[i]).collect();
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rx = vec![0.0; n];
        let mut ry = vec![0.0; n];
        for i in 0..n {
            let im = (i + n - 1) % n;
            let ip = (i + 1) % n;
            sub[i] = h[im];
            diag[i] = 2.0 * (h[im] + h[i]);
            sup[i] = h[i];
            let d = (points[ip] - points[i]) / h[i] - (points[i] - points[im]) / h[im];
            rx[i] = 6.0 * d.x;
            ry[i] = 6.0 * d.y;
        }
        let mx = solve_cyclic(&sub, &diag, &sup, &rx);
        let my = solve_cyclic(&sub, &diag, &sup, &ry);
        let second = mx.iter().zip(&my).map(|(&x, &y)| Vec2::new(x, y)).collect();
        Ok(Self {
            knots,
            points: points.to_vec(),
            second,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Total parameter length (perimeter of the control polygon).
    pub fn period(&self) -> f64 {
        self.knots[self.points.len()]
    }

    /// Parameter value of node `i`.
    pub fn knot(&self, i: usize) -> f64 {
        self.knots[i]
    }

    fn locate(&self, s: f64) -> (usize, f64) {
        let l = self.period();
        let mut s = s.rem_euclid(l);
        if s >= l {
            s = 0.0;
        }
        let i = match self
            .knots
            .binary_search_by(|k| k.partial_cmp(&s).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => i.min(self.points.len() - 1),
            Err(i) => i - 1,
        };
        (i, s)
    }

    fn segment(&self, i: usize, s: f64) -> (f64, f64, f64, Vec2, Vec2, Vec2, Vec2) {
        let n = self.points.len();
        let j = (i + 1) % n;
        let h = self.knots[i + 1] - self.knots[i];
        let a = (self.knots[i + 1] - s) / h;
        let b = 1.0 - a;
        (h, a, b, self.points[i], self.points[j], self.second[i], self.second[j])
    }

    pub fn eval(&self, s: f64) -> Vec2 {
        let (i, s) = self.locate(s);
        let (h, a, b, p0, p1, m0, m1) = self.segment(i, s);
        p0 * a + p1 * b + (m0 * (a * a * a - a) + m1 * (b * b * b - b)) * (h * h / 6.0)
    }

    pub fn derivative(&self, s: f64) -> Vec2 {
        let (i, s) = self.locate(s);
        let (h, a, b, p0, p1, m0, m1) = self.segment(i, s);
        (p1 - p0) / h + (m1 * (3.0 * b * b - 1.0) - m0 * (3.0 * a * a - 1.0)) * (h / 6.0)
    }

    pub fn second_derivative(&self, s: f64) -> Vec2 {
        let (i, s) = self.locate(s);
        let (_, a, b, _, _, m0, m1) = self.segment(i, s);
        m0 * a + m1 * b
    }

    pub fn tangent(&self, s: f64) -> Vec2 {
        self.derivative(s).normalize()
    }

    /// Outward unit normal for a counterclockwise curve.
    pub fn normal(&self, s: f64) -> Vec2 {
        let t = self.tangent(s);
        Vec2::new(t.y, -t.x)
    }

    /// Signed curvature (positive where the curve turns left).
    pub fn curvature(&self, s: f64) -> f64 {
        let d = self.derivative(s);
        let dd = self.second_derivative(s);
        (d.x * dd.y - d.y * dd.x) / d.norm().powi(3)
    }

    /// Uniform samples inside segment `i` (start point included, end excluded).
    pub fn segment_samples(&self, i: usize, per_segment: usize) -> impl Iterator<Item = (f64, Vec2)> + '_ {
        let a = self.knots[i];
        let h = self.knots[i + 1] - a;
        (0..per_segment).map(move |k| {
            let s = a + h * k as f64 / per_segment as f64;
            (s, self.eval(s))
        })
    }
}

/// Solves a cyclic tridiagonal system (Sherman-Morrison on the corner terms).
/// Row `i` reads `sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]`, indices modulo `n`.
pub(crate) fn solve_cyclic(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let alpha = sup[n - 1];
    let beta = sub[0];
    let gamma = -diag[0];
    let mut bb = diag.to_vec();
    bb[0] = diag[0] - gamma;
    bb[n - 1] = diag[n - 1] - alpha * beta / gamma;
    let x = solve_tridiagonal(sub, &bb, sup, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = solve_tridiagonal(sub, &bb, sup, &u);
    let fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i] * c[i - 1];
        c[i] = sup[i] / m;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}
