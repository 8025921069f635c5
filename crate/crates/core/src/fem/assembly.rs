use faer::sparse::{SparseColMat, SymbolicSparseColMat, Triplet};
use rayon::prelude::*;

use super::solver::{LuSolver, Solution, SparseSystem};
use super::space::{P2Space, NQ};
use crate::{Error, Mat2, Result, Vec2};

/// Deformation data at one quadrature point of the current configuration.
#[derive(Clone, Copy, Debug)]
pub struct QuadKinematics {
    /// Gradient of the configuration map with respect to reference coordinates.
    pub grad: Mat2,
    pub det: f64,
    /// Gradients of the six shape functions with respect to current coordinates.
    pub grads: [Vec2; 6],
    /// Quadrature weight times the reference and configuration Jacobians.
    pub weight: f64,
    /// Current position of the quadrature point.
    pub x: Vec2,
}

/// Kinematics of element `e` for the configuration `pos` (interleaved P2 node positions).
pub fn element_kinematics(space: &P2Space, pos: &[f64], e: usize) -> [QuadKinematics; NQ] {
    let nodes = &space.elem_nodes[e];
    let w = P2Space::weights();
    let ref_det = space.geom[e].det;
    std::array::from_fn(|q| {
        let gx = space.grads(e, q);
        let mut grad = Mat2::zeros();
        let mut x = Vec2::zeros();
        for a in 0..6 {
            let p = Vec2::new(pos[2 * nodes[a]], pos[2 * nodes[a] + 1]);
            grad += p * gx[a].transpose();
            x += p * space.phi[q][a];
        }
        let det = grad.determinant();
        let inv_t = grad.try_inverse().unwrap_or_else(Mat2::zeros).transpose();
        QuadKinematics { grad, det, grads: gx.map(|g| inv_t * g), weight: w[q] * ref_det * det, x }
    })
}

/// Smallest configuration Jacobian over all quadrature points, with its element.
pub fn min_det(space: &P2Space, pos: &[f64]) -> (f64, usize) {
    (0..space.n_elements())
        .map(|e| {
            let k = element_kinematics(space, pos, e);
            (k.iter().map(|q| q.det).fold(f64::INFINITY, f64::min), e)
        })
        .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViscousForm {
    /// `nu * grad u : grad w`.
    Laplace,
    /// `nu/2 * Def u : Def w` with `Def u = grad u + grad u^T`; traction is natural.
    Deformation,
}

/// Coefficients of the generalized Stokes operator `mass * u - nu div(...) + grad p`.
#[derive(Clone, Copy, Debug)]
pub struct StokesOperator {
    pub nu: f64,
    pub mass: f64,
    pub form: ViscousForm,
    /// Append a Lagrange multiplier row fixing the pressure mean to zero.
    pub pressure_mean: bool,
    /// Integrate the mass term over the reference configuration instead of
    /// the current one (Lagrangian momentum with unit reference density).
    pub reference_mass: bool,
}

/// Velocity boundary data. Node frames have the unit outward normal in
/// column 0 and the tangent in column 1; a framed node's dofs hold the
/// (normal, tangential) components.
#[derive(Clone, Debug, Default)]
pub struct VelocityConstraints {
    pub frames: Vec<Option<Mat2>>,
    pub fixed: Vec<Option<f64>>,
}

impl VelocityConstraints {
    pub fn free(space: &P2Space) -> Self {
        Self { frames: vec![None; space.n_nodes()], fixed: vec![None; space.n_velocity()] }
    }

    /// Full Dirichlet data `g` (Cartesian) at every boundary node.
    pub fn dirichlet(space: &P2Space, g: impl Fn(usize) -> Vec2) -> Self {
        let mut c = Self::free(space);
        for &i in &space.boundary_nodes {
            let v = g(i);
            c.fixed[2 * i] = Some(v.x);
            c.fixed[2 * i + 1] = Some(v.y);
        }
        c
    }

    /// Prescribed outward normal components at boundary nodes; the tangential
    /// component is left free. `normal_values` follows [`P2Space::boundary_nodes`].
    pub fn slip(space: &P2Space, pos: &[f64], normal_values: &[f64]) -> Self {
        let mut c = Self::free(space);
        let w = space.boundary_weights(pos);
        for (k, &i) in space.boundary_nodes.iter().enumerate() {
            let n = w[k].normalize();
            c.frames[i] = Some(Mat2::new(n.x, -n.y, n.y, n.x));
            c.fixed[2 * i] = Some(normal_values[k]);
        }
        c
    }
}

/// Right-hand side data.
#[derive(Default)]
pub struct Loads<'a> {
    /// Body force evaluated at current positions.
    pub body: Option<&'a (dyn Fn(Vec2) -> Vec2 + Sync)>,
    /// Previous velocity, weighted by `mass` in the right-hand side.
    pub previous: Option<&'a [f64]>,
    /// Prescribed divergence evaluated at current positions.
    pub divergence: Option<&'a (dyn Fn(Vec2) -> f64 + Sync)>,
}

/// Assembled saddle system with the bookkeeping to unpack its solution.
#[derive(Clone, Debug)]
pub struct SaddleSystem {
    pub system: SparseSystem,
    pub n_velocity: usize,
    pub n_pressure: usize,
    pub has_mean_row: bool,
    pub frames: Vec<Option<Mat2>>,
}

/// Unpacked saddle solution with Cartesian velocity coefficients.
#[derive(Clone, Debug)]
pub struct SaddleSolution {
    pub velocity: Vec<f64>,
    pub pressure: Vec<f64>,
    /// Pressure-mean multiplier; nonzero values measure data incompatibility.
    pub multiplier: f64,
    pub residual: f64,
}

struct Local {
    k: [[f64; 15]; 15],
    rhs: [f64; 15],
    mean: [f64; 3],
}

fn local_system(space: &P2Space, pos: &[f64], e: usize, op: &StokesOperator, loads: &Loads<'_>) -> Local {
    let kin = element_kinematics(space, pos, e);
    let nodes = &space.elem_nodes[e];
    let mut k = [[0.0; 15]; 15];
    let mut rhs = [0.0; 15];
    let mut mean = [0.0; 3];
    for (q, kq) in kin.iter().enumerate() {
        let (g, wt, phi, psi) = (&kq.grads, kq.weight, &space.phi[q], &space.psi[q]);
        let mass_wt = if op.reference_mass { wt / kq.det } else { wt };
        for a in 0..6 {
            for b in 0..6 {
                let m = op.mass * phi[a] * phi[b] * mass_wt;
                let lap = op.nu * g[a].dot(&g[b]) * wt;
                for i in 0..2 {
                    k[2 * a + i][2 * b + i] += m + lap;
                    if op.form == ViscousForm::Deformation {
                        for j in 0..2 {
                            k[2 * a + i][2 * b + j] += op.nu * g[a][j] * g[b][i] * wt;
                        }
                    }
                }
            }
            for p in 0..3 {
                for j in 0..2 {
                    let v = -psi[p] * g[a][j] * wt;
                    k[12 + p][2 * a + j] += v;
                    k[2 * a + j][12 + p] += v;
                }
            }
        }
        for p in 0..3 {
            mean[p] += psi[p] * wt;
        }
        let mut f = Vec2::zeros();
        let mut inertia = Vec2::zeros();
        if let Some(body) = loads.body {
            f += body(kq.x);
        }
        if let Some(prev) = loads.previous {
            for b in 0..6 {
                inertia += Vec2::new(prev[2 * nodes[b]], prev[2 * nodes[b] + 1]) * (op.mass * phi[b]);
            }
        }
        for a in 0..6 {
            rhs[2 * a] += (f.x * wt + inertia.x * mass_wt) * phi[a];
            rhs[2 * a + 1] += (f.y * wt + inertia.y * mass_wt) * phi[a];
        }
        if let Some(div) = loads.divergence {
            let d = div(kq.x);
            for p in 0..3 {
                rhs[12 + p] -= psi[p] * d * wt;
            }
        }
    }
    Local { k, rhs, mean }
}

/// `K <- T^T K T`, `rhs <- T^T rhs` for the framed nodes of one element.
fn rotate(local: &mut Local, nodes: &[usize; 6], frames: &[Option<Mat2>]) {
    for a in 0..6 {
        let Some(r) = frames[nodes[a]] else { continue };
        let (c0, c1) = (2 * a, 2 * a + 1);
        // columns
        for row in local.k.iter_mut() {
            let (x, y) = (row[c0], row[c1]);
            row[c0] = r[(0, 0)] * x + r[(1, 0)] * y;
            row[c1] = r[(0, 1)] * x + r[(1, 1)] * y;
        }
        // rows
        for col in 0..15 {
            let (x, y) = (local.k[c0][col], local.k[c1][col]);
            local.k[c0][col] = r[(0, 0)] * x + r[(1, 0)] * y;
            local.k[c1][col] = r[(0, 1)] * x + r[(1, 1)] * y;
        }
        let (x, y) = (local.rhs[c0], local.rhs[c1]);
        local.rhs[c0] = r[(0, 0)] * x + r[(1, 0)] * y;
        local.rhs[c1] = r[(0, 1)] * x + r[(1, 1)] * y;
    }
}

const SKIP: usize = usize::MAX;

/// Sparsity pattern of a saddle system for a fixed space, set of fixed
/// dofs and multiplier choice, with the value slot of every local entry.
#[derive(Clone, Debug)]
pub struct SaddlePattern {
    n: usize,
    n_velocity: usize,
    n_pressure: usize,
    pressure_mean: bool,
    fixed_mask: Vec<bool>,
    symbolic: SymbolicSparseColMat<usize>,
    elem_slots: Vec<[usize; 225]>,
    mean_slots: Vec<[usize; 6]>,
    diag_slots: Vec<(usize, usize)>,
}

fn element_dof(space: &P2Space, e: usize, r: usize) -> usize {
    if r < 12 {
        2 * space.elem_nodes[e][r / 2] + r % 2
    } else {
        space.n_velocity() + space.mesh.triangles[e][r - 12]
    }
}

impl SaddlePattern {
    pub fn new(space: &P2Space, fixed_mask: Vec<bool>, pressure_mean: bool) -> Self {
        let nu = space.n_velocity();
        let np = space.n_vertices();
        let n = nu + np + usize::from(pressure_mean);
        let is_fixed = |i: usize| i < nu && fixed_mask[i];
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
        for e in 0..space.n_elements() {
            for r in 0..15 {
                let gi = element_dof(space, e, r);
                if is_fixed(gi) {
                    continue;
                }
                for c in 0..15 {
                    let gj = element_dof(space, e, c);
                    if !is_fixed(gj) {
                        cols[gj].push(gi);
                    }
                }
            }
            if pressure_mean {
                for &v in &space.mesh.triangles[e] {
                    cols[n - 1].push(nu + v);
                    cols[nu + v].push(n - 1);
                }
            }
        }
        for i in (0..nu).filter(|&i| fixed_mask[i]) {
            cols[i].push(i);
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0);
        for c in cols.iter_mut() {
            c.sort_unstable();
            c.dedup();
            row_idx.extend_from_slice(c);
            col_ptr.push(row_idx.len());
        }
        let slot = |r: usize, c: usize| col_ptr[c] + row_idx[col_ptr[c]..col_ptr[c + 1]].binary_search(&r).unwrap();
        let elem_slots = (0..space.n_elements())
            .map(|e| {
                let mut m = [SKIP; 225];
                for r in 0..15 {
                    let gi = element_dof(space, e, r);
                    for c in 0..15 {
                        let gj = element_dof(space, e, c);
                        if !is_fixed(gi) && !is_fixed(gj) {
                            m[15 * r + c] = slot(gi, gj);
                        }
                    }
                }
                m
            })
            .collect();
        let mean_slots = if pressure_mean {
            space
                .mesh
                .triangles
                .iter()
                .map(|t| {
                    let mut m = [0; 6];
                    for p in 0..3 {
                        m[2 * p] = slot(nu + t[p], n - 1);
                        m[2 * p + 1] = slot(n - 1, nu + t[p]);
                    }
                    m
                })
                .collect()
        } else {
            Vec::new()
        };
        let diag_slots = (0..nu).filter(|&i| fixed_mask[i]).map(|i| (i, slot(i, i))).collect();
        let symbolic = SymbolicSparseColMat::new_checked(n, n, col_ptr, None, row_idx);
        Self { n, n_velocity: nu, n_pressure: np, pressure_mean, fixed_mask, symbolic, elem_slots, mean_slots, diag_slots }
    }

    pub fn matches(&self, bc: &VelocityConstraints, pressure_mean: bool) -> bool {
        self.pressure_mean == pressure_mean
            && bc.fixed.len() == self.fixed_mask.len()
            && bc.fixed.iter().zip(&self.fixed_mask).all(|(f, m)| f.is_some() == *m)
    }

    /// Assembles the generalized Stokes saddle system on the configuration
    /// `pos`. Fixed dofs are eliminated symmetrically (unit diagonal, columns
    /// moved to the right-hand side).
    pub fn assemble(
        &self,
        space: &P2Space,
        pos: &[f64],
        op: &StokesOperator,
        bc: &VelocityConstraints,
        loads: &Loads<'_>,
    ) -> Result<SaddleSystem> {
        let nu = self.n_velocity;
        if pos.len() != nu || bc.frames.len() != space.n_nodes() || !self.matches(bc, op.pressure_mean) {
            return Err(Error::InvalidInput("assembly inputs do not match the space or pattern".into()));
        }
        if let Some(prev) = loads.previous {
            if prev.len() != nu {
                return Err(Error::InvalidInput("previous velocity has wrong length".into()));
            }
        }
        let locals: Vec<Local> = (0..space.n_elements())
            .into_par_iter()
            .map(|e| {
                let mut l = local_system(space, pos, e, op, loads);
                rotate(&mut l, &space.elem_nodes[e], &bc.frames);
                l
            })
            .collect();
        let mut values = vec![0.0; self.symbolic.row_idx().len()];
        let mut rhs = vec![0.0; self.n];
        for (e, l) in locals.iter().enumerate() {
            let slots = &self.elem_slots[e];
            for r in 0..15 {
                let gi = element_dof(space, e, r);
                if gi < nu && self.fixed_mask[gi] {
                    continue;
                }
                rhs[gi] += l.rhs[r];
                for c in 0..15 {
                    let s = slots[15 * r + c];
                    if s == SKIP {
                        let gj = element_dof(space, e, c);
                        rhs[gi] -= l.k[r][c] * bc.fixed[gj].unwrap_or(0.0);
                    } else {
                        values[s] += l.k[r][c];
                    }
                }
            }
            if self.pressure_mean {
                for p in 0..3 {
                    values[self.mean_slots[e][2 * p]] += l.mean[p];
                    values[self.mean_slots[e][2 * p + 1]] += l.mean[p];
                }
            }
        }
        for &(i, s) in &self.diag_slots {
            values[s] = 1.0;
            rhs[i] = bc.fixed[i].unwrap_or(0.0);
        }
        Ok(SaddleSystem {
            system: SparseSystem { matrix: SparseColMat::new(self.symbolic.clone(), values), rhs },
            n_velocity: nu,
            n_pressure: self.n_pressure,
            has_mean_row: self.pressure_mean,
            frames: bc.frames.clone(),
        })
    }
}

/// One-off assembly; see [`SaddlePattern::assemble`].
pub fn assemble_saddle(
    space: &P2Space,
    pos: &[f64],
    op: &StokesOperator,
    bc: &VelocityConstraints,
    loads: &Loads<'_>,
) -> Result<SaddleSystem> {
    if bc.fixed.len() != space.n_velocity() {
        return Err(Error::InvalidInput("constraint vector does not match the space".into()));
    }
    let mask = bc.fixed.iter().map(Option::is_some).collect();
    SaddlePattern::new(space, mask, op.pressure_mean).assemble(space, pos, op, bc, loads)
}

impl SaddleSystem {
    /// Splits a raw solution vector, rotating framed nodes back to Cartesian components.
    pub fn unpack(&self, sol: &Solution) -> SaddleSolution {
        let x = &sol.x;
        let mut velocity = x[..self.n_velocity].to_vec();
        for (i, f) in self.frames.iter().enumerate() {
            if let Some(r) = f {
                let v = r * Vec2::new(x[2 * i], x[2 * i + 1]);
                velocity[2 * i] = v.x;
                velocity[2 * i + 1] = v.y;
            }
        }
        let pressure = x[self.n_velocity..self.n_velocity + self.n_pressure].to_vec();
        let multiplier = if self.has_mean_row { x[x.len() - 1] } else { 0.0 };
        SaddleSolution { velocity, pressure, multiplier, residual: sol.residual }
    }

    pub fn solve(&self, solver: &mut LuSolver) -> Result<SaddleSolution> {
        Ok(self.unpack(&solver.solve(&self.system)?))
    }
}

/// Symmetric P1 Laplace stiffness triplets and the load `int f psi`
/// on the reference configuration.
pub fn p1_poisson(space: &P2Space, f: &[[f64; NQ]]) -> (Vec<Triplet<usize, usize, f64>>, Vec<f64>) {
    let np = space.n_vertices();
    let mut trip = Vec::with_capacity(9 * space.n_elements());
    let mut rhs = vec![0.0; np];
    let grads = [Vec2::new(-1.0, -1.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
    let w = P2Space::weights();
    for (e, t) in space.mesh.triangles.iter().enumerate() {
        let g = space.geom[e];
        let gx = grads.map(|d| g.inv.transpose() * d);
        let area = 0.5 * g.det;
        for a in 0..3 {
            for b in 0..3 {
                trip.push(Triplet::new(t[a], t[b], gx[a].dot(&gx[b]) * area));
            }
            for q in 0..NQ {
                rhs[t[a]] += f[e][q] * space.psi[q][a] * w[q] * g.det;
            }
        }
    }
    (trip, rhs)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::geometry::{triangulate, BoundaryCurve, RegionTag};

    pub(crate) fn square_space(n: usize) -> P2Space {
        let mut nodes = Vec::new();
        for i in 0..n {
            nodes.push(Vec2::new(i as f64 / n as f64, 0.0));
        }
        for i in 0..n {
            nodes.push(Vec2::new(1.0, i as f64 / n as f64));
        }
        for i in 0..n {
            nodes.push(Vec2::new(1.0 - i as f64 / n as f64, 1.0));
        }
        for i in 0..n {
            nodes.push(Vec2::new(0.0, 1.0 - i as f64 / n as f64));
        }
        let tags = vec![RegionTag::Other; nodes.len()];
        let curve = BoundaryCurve::new(nodes, tags, None).unwrap();
        P2Space::new(triangulate(&curve, 1.5 / n as f64).unwrap())
    }

    #[test]
    fn identity_kinematics_have_unit_jacobian() {
        let s = square_space(4);
        let pos = s.identity_map();
        let mut area = 0.0;
        for e in 0..s.n_elements() {
            for k in element_kinematics(&s, &pos, e) {
                assert!((k.det - 1.0).abs() < 1e-12);
                assert!((k.grad - Mat2::identity()).norm() < 1e-12);
                area += k.weight;
            }
        }
        assert!((area - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rigid_motions_in_deformation_kernel() {
        let s = square_space(3);
        let pos = s.identity_map();
        let op = StokesOperator { nu: 1.0, mass: 0.0, form: ViscousForm::Deformation, pressure_mean: false, reference_mass: false };
        let sys = assemble_saddle(&s, &pos, &op, &VelocityConstraints::free(&s), &Loads::default()).unwrap();
        let nu = s.n_velocity();
        for field in [|_: Vec2| Vec2::new(1.0, 0.0), |_: Vec2| Vec2::new(0.0, 1.0), |p: Vec2| Vec2::new(-p.y, p.x)] {
            let mut x = s.interpolate(field);
            x.resize(sys.system.dim(), 0.0);
            let y = sys.system.apply(&x);
            assert!(y[..nu].iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn divergence_rows_vanish_on_solenoidal_field() {
        let s = square_space(3);
        let pos = s.identity_map();
        let op = StokesOperator { nu: 1.0, mass: 0.0, form: ViscousForm::Laplace, pressure_mean: false, reference_mass: false };
        let sys = assemble_saddle(&s, &pos, &op, &VelocityConstraints::free(&s), &Loads::default()).unwrap();
        // u = (x^2, -2xy) is quadratic and divergence free
        let mut x = s.interpolate(|p| Vec2::new(p.x * p.x, -2.0 * p.x * p.y));
        x.resize(sys.system.dim(), 0.0);
        let y = sys.system.apply(&x);
        assert!(y[s.n_velocity()..].iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn rotation_preserves_solution() {
        // Dirichlet data imposed in Cartesian and in rotated frames give the same field.
        let s = square_space(4);
        let pos = s.identity_map();
        let g = |p: Vec2| Vec2::new(p.y * (1.0 - p.y), 0.0);
        let op = StokesOperator { nu: 1.0, mass: 0.0, form: ViscousForm::Laplace, pressure_mean: true, reference_mass: false };
        let cart = VelocityConstraints::dirichlet(&s, |i| g(s.node_pos[i]));
        let a = assemble_saddle(&s, &pos, &op, &cart, &Loads::default()).unwrap().solve(&mut LuSolver::new()).unwrap();
        let mut rot = VelocityConstraints::free(&s);
        for &i in &s.boundary_nodes {
            let th = 0.3 + i as f64;
            let r = Mat2::new(th.cos(), -th.sin(), th.sin(), th.cos());
            let v = r.transpose() * g(s.node_pos[i]);
            rot.frames[i] = Some(r);
            rot.fixed[2 * i] = Some(v.x);
            rot.fixed[2 * i + 1] = Some(v.y);
        }
        let b = assemble_saddle(&s, &pos, &op, &rot, &Loads::default()).unwrap().solve(&mut LuSolver::new()).unwrap();
        for (x, y) in a.velocity.iter().zip(&b.velocity) {
            assert!((x - y).abs() < 1e-10);
        }
        // Poiseuille profile is reproduced exactly by quadratics
        for (i, p) in s.node_pos.iter().enumerate() {
            assert!((a.velocity[2 * i] - g(*p).x).abs() < 1e-9);
        }
    }
}
