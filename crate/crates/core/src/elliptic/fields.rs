use std::fmt::Write as _;
use std::sync::Arc;

use crate::fem::{p1_norms, vector_norms, FieldNorms, P2Space};
use crate::{Error, Result, Vec2};

/// Quadratic vector field on a [`P2Space`]; coefficient `2 * node + c` is component `c`.
#[derive(Clone, Debug)]
pub struct VelocityField {
    pub space: Arc<P2Space>,
    pub coeffs: Vec<f64>,
}

impl VelocityField {
    pub fn new(space: Arc<P2Space>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.n_velocity() {
            return Err(Error::InvalidInput(format!(
                "velocity has {} coefficients, space needs {}",
                coeffs.len(),
                space.n_velocity()
            )));
        }
        if coeffs.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite velocity coefficient".into()));
        }
        Ok(Self { space, coeffs })
    }

    pub fn zeros(space: Arc<P2Space>) -> Self {
        let n = space.n_velocity();
        Self { space, coeffs: vec![0.0; n] }
    }

    pub fn from_fn(space: Arc<P2Space>, f: impl Fn(Vec2) -> Vec2) -> Self {
        let coeffs = space.interpolate(f);
        Self { space, coeffs }
    }

    pub fn node(&self, i: usize) -> Vec2 {
        Vec2::new(self.coeffs[2 * i], self.coeffs[2 * i + 1])
    }

    pub fn eval(&self, p: Vec2) -> Option<Vec2> {
        self.space.eval(&self.coeffs, p)
    }

    pub fn norms(&self) -> FieldNorms {
        vector_norms(&self.space, &self.coeffs)
    }

    /// CSV rows `id,x,y,component,value`, one per coefficient.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("id,x,y,component,value\n");
        for (i, p) in self.space.node_pos.iter().enumerate() {
            for c in 0..2 {
                let _ = writeln!(s, "{i},{},{},{c},{}", p.x, p.y, self.coeffs[2 * i + c]);
            }
        }
        s
    }
}

/// Linear scalar field on the mesh vertices.
#[derive(Clone, Debug)]
pub struct PressureField {
    pub space: Arc<P2Space>,
    pub values: Vec<f64>,
}

impl PressureField {
    pub fn new(space: Arc<P2Space>, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.n_vertices() {
            return Err(Error::InvalidInput(format!(
                "pressure has {} values, mesh has {} vertices",
                values.len(),
                space.n_vertices()
            )));
        }
        Ok(Self { space, values })
    }

    pub fn zeros(space: Arc<P2Space>) -> Self {
        let n = space.n_vertices();
        Self { space, values: vec![0.0; n] }
    }

    /// Area-weighted mean.
    pub fn mean(&self) -> f64 {
        let (mut s, mut a) = (0.0, 0.0);
        for (e, t) in self.space.mesh.triangles.iter().enumerate() {
            let area = 0.5 * self.space.geom[e].det;
            s += area * (self.values[t[0]] + self.values[t[1]] + self.values[t[2]]) / 3.0;
            a += area;
        }
        s / a
    }

    pub fn subtract_mean(&mut self) {
        let m = self.mean();
        self.values.iter_mut().for_each(|v| *v -= m);
    }

    pub fn norms(&self) -> FieldNorms {
        p1_norms(&self.space, &self.values)
    }

    /// CSV rows `id,x,y,component,value` with component 0.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("id,x,y,component,value\n");
        for (i, p) in self.space.mesh.vertices.iter().enumerate() {
            let _ = writeln!(s, "{i},{},{},0,{}", p.x, p.y, self.values[i]);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{triangulate, BoundaryCurve, RegionTag};

    fn disk() -> Arc<P2Space> {
        let n = 40;
        let nodes: Vec<Vec2> = (0..n)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                Vec2::new(t.cos(), t.sin())
            })
            .collect();
        let curve = BoundaryCurve::new(nodes, vec![RegionTag::Other; n], None).unwrap();
        Arc::new(P2Space::new(triangulate(&curve, 0.3).unwrap()))
    }

    #[test]
    fn evaluation_reproduces_quadratics() {
        let s = disk();
        let f = |p: Vec2| Vec2::new(p.x * p.y - 1.0, p.y * p.y);
        let u = VelocityField::from_fn(s, f);
        for p in [Vec2::new(0.1, 0.2), Vec2::new(-0.5, 0.3), Vec2::new(0.0, -0.7)] {
            assert!((u.eval(p).unwrap() - f(p)).norm() < 1e-12);
        }
        assert!(u.eval(Vec2::new(2.0, 0.0)).is_none());
    }

    #[test]
    fn csv_has_one_row_per_coefficient() {
        let s = disk();
        let u = VelocityField::zeros(s.clone());
        assert_eq!(u.to_csv().lines().count(), 1 + s.n_velocity());
        assert!(VelocityField::new(s, vec![0.0; 3]).is_err());
    }

    #[test]
    fn subtract_mean_zeroes_mean() {
        let s = disk();
        let vals = s.mesh.vertices.iter().map(|v| 3.0 + v.x * v.x).collect();
        let mut p = PressureField::new(s, vals).unwrap();
        p.subtract_mean();
        assert!(p.mean().abs() < 1e-14);
    }
}
