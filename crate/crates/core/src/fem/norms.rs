//! Discrete norms in reference coordinates.

use super::space::{p2_hessian, P2Space, NQ};
use crate::{Mat2, Vec2};

/// `L2` norm and `H1`, broken `H2` seminorms.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FieldNorms {
    pub l2: f64,
    pub h1_semi: f64,
    pub h2_semi: f64,
}

impl FieldNorms {
    pub fn h1(&self) -> f64 {
        (self.l2 * self.l2 + self.h1_semi * self.h1_semi).sqrt()
    }

    pub fn h2(&self) -> f64 {
        (self.l2 * self.l2 + self.h1_semi * self.h1_semi + self.h2_semi * self.h2_semi).sqrt()
    }
}

fn physical_hessians(space: &P2Space, e: usize) -> [Mat2; 6] {
    let inv = space.geom[e].inv;
    p2_hessian().map(|h| {
        let m = Mat2::new(h[0], h[1], h[1], h[2]);
        inv.transpose() * m * inv
    })
}

/// Norms of a P2 vector field (interleaved coefficients).
pub fn vector_norms(space: &P2Space, coeffs: &[f64]) -> FieldNorms {
    let w = P2Space::weights();
    let (mut l2, mut h1, mut h2) = (0.0, 0.0, 0.0);
    for e in 0..space.n_elements() {
        let nodes = &space.elem_nodes[e];
        let hs = physical_hessians(space, e);
        let det = space.geom[e].det;
        let mut hess = [Mat2::zeros(); 2];
        for a in 0..6 {
            for c in 0..2 {
                hess[c] += hs[a] * coeffs[2 * nodes[a] + c];
            }
        }
        let h2e: f64 = hess.iter().map(|h| h.norm_squared()).sum();
        for q in 0..NQ {
            let g = space.grads(e, q);
            let mut val = Vec2::zeros();
            let mut grad = Mat2::zeros();
            for a in 0..6 {
                let c = Vec2::new(coeffs[2 * nodes[a]], coeffs[2 * nodes[a] + 1]);
                val += c * space.phi[q][a];
                grad += c * g[a].transpose();
            }
            let wt = w[q] * det;
            l2 += wt * val.norm_squared();
            h1 += wt * grad.norm_squared();
            h2 += wt * h2e;
        }
    }
    FieldNorms { l2: l2.sqrt(), h1_semi: h1.sqrt(), h2_semi: h2.sqrt() }
}

/// `L2` norm and `H1` seminorm of a P1 scalar field on the mesh vertices.
pub fn p1_norms(space: &P2Space, p: &[f64]) -> FieldNorms {
    let w = P2Space::weights();
    let dl = [Vec2::new(-1.0, -1.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
    let (mut l2, mut h1) = (0.0, 0.0);
    for (e, t) in space.mesh.triangles.iter().enumerate() {
        let g = space.geom[e];
        let grad = (0..3).fold(Vec2::zeros(), |acc, a| acc + g.inv.transpose() * dl[a] * p[t[a]]);
        for q in 0..NQ {
            let v: f64 = (0..3).map(|a| p[t[a]] * space.psi[q][a]).sum();
            l2 += w[q] * g.det * v * v;
        }
        h1 += 0.5 * g.det * grad.norm_squared();
    }
    FieldNorms { l2: l2.sqrt(), h1_semi: h1.sqrt(), h2_semi: 0.0 }
}

/// `L2` distance between a P2 vector field and an exact field.
pub fn vector_l2_error(space: &P2Space, coeffs: &[f64], exact: impl Fn(Vec2) -> Vec2) -> f64 {
    let w = P2Space::weights();
    let mut s = 0.0;
    for e in 0..space.n_elements() {
        let nodes = &space.elem_nodes[e];
        for q in 0..NQ {
            let x = space.quad_point(e, q);
            let val = (0..6).fold(Vec2::zeros(), |acc, a| {
                acc + Vec2::new(coeffs[2 * nodes[a]], coeffs[2 * nodes[a] + 1]) * space.phi[q][a]
            });
            s += w[q] * space.geom[e].det * (val - exact(x)).norm_squared();
        }
    }
    s.sqrt()
}

/// `L2` distance between a P1 field and an exact scalar, both taken with
/// zero mean when `zero_mean` is set.
pub fn p1_l2_error(space: &P2Space, p: &[f64], exact: impl Fn(Vec2) -> f64, zero_mean: bool) -> f64 {
    let w = P2Space::weights();
    let mut samples = Vec::with_capacity(space.n_elements() * NQ);
    let (mut mean_d, mut area) = (0.0, 0.0);
    for (e, t) in space.mesh.triangles.iter().enumerate() {
        for q in 0..NQ {
            let x = space.quad_point(e, q);
            let v: f64 = (0..3).map(|a| p[t[a]] * space.psi[q][a]).sum();
            let wt = w[q] * space.geom[e].det;
            let d = v - exact(x);
            mean_d += wt * d;
            area += wt;
            samples.push((wt, d));
        }
    }
    let shift = if zero_mean { mean_d / area } else { 0.0 };
    samples.iter().map(|(wt, d)| wt * (d - shift).powi(2)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assembly::tests::square_space;

    #[test]
    fn norms_of_polynomial_field_are_exact() {
        // u = (x^2, x y) on the unit square
        let s = square_space(4);
        let c = s.interpolate(|p| Vec2::new(p.x * p.x, p.x * p.y));
        let n = vector_norms(&s, &c);
        // int x^4 + x^2 y^2 = 1/5 + 1/9
        assert!((n.l2 * n.l2 - (1.0 / 5.0 + 1.0 / 9.0)).abs() < 1e-12);
        // |grad|^2 = 4x^2 + y^2 + x^2
        assert!((n.h1_semi * n.h1_semi - (5.0 / 3.0 + 1.0 / 3.0)).abs() < 1e-12);
        // second derivatives: u1_xx = 2, u2_xy = u2_yx = 1
        assert!((n.h2_semi * n.h2_semi - 6.0).abs() < 1e-12);
        assert!(vector_l2_error(&s, &c, |p| Vec2::new(p.x * p.x, p.x * p.y)) < 1e-13);
    }

    #[test]
    fn p1_norms_of_linear_field() {
        let s = square_space(3);
        let p: Vec<f64> = s.mesh.vertices.iter().map(|v| 2.0 * v.x - v.y).collect();
        let n = p1_norms(&s, &p);
        assert!((n.h1_semi * n.h1_semi - 5.0).abs() < 1e-12);
        // int (2x - y)^2 = 4/3 - 1 + 1/3
        assert!((n.l2 * n.l2 - 2.0 / 3.0).abs() < 1e-12);
        assert!(p1_l2_error(&s, &p, |x| 2.0 * x.x - x.y + 7.0, true) < 1e-12);
    }
}
