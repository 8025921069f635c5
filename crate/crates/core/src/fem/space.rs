use std::collections::HashMap;

use super::quadrature::{TRI7_POINTS, TRI7_WEIGHTS};
use crate::geometry::{RegionTag, TriMesh};
use crate::{Mat2, Vec2};

/// Number of quadrature points per element.
pub const NQ: usize = 7;

/// Quadratic shape functions on the reference triangle. Nodes 0..3 are the
/// vertices, 3, 4, 5 the midpoints of edges (0,1), (1,2), (2,0).
pub fn p2_shape(xi: f64, eta: f64) -> [f64; 6] {
    let l = [1.0 - xi - eta, xi, eta];
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

/// Reference gradients of [`p2_shape`].
pub fn p2_grad(xi: f64, eta: f64) -> [Vec2; 6] {
    let l = [1.0 - xi - eta, xi, eta];
    let dl = [Vec2::new(-1.0, -1.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
    let v = |i: usize| dl[i] * (4.0 * l[i] - 1.0);
    let e = |i: usize, j: usize| (dl[i] * l[j] + dl[j] * l[i]) * 4.0;
    [v(0), v(1), v(2), e(0, 1), e(1, 2), e(2, 0)]
}

/// Constant reference second derivatives `[d_xx, d_xy, d_yy]` of [`p2_shape`].
pub fn p2_hessian() -> [[f64; 3]; 6] {
    let dl = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
    let h = |i: usize, j: usize, s: f64| {
        [
            s * dl[i][0] * dl[j][0],
            s * 0.5 * (dl[i][0] * dl[j][1] + dl[i][1] * dl[j][0]),
            s * dl[i][1] * dl[j][1],
        ]
    };
    let sym = |i: usize, j: usize| {
        let a = h(i, j, 4.0);
        let b = h(j, i, 4.0);
        [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
    };
    [h(0, 0, 4.0), h(1, 1, 4.0), h(2, 2, 4.0), sym(0, 1), sym(1, 2), sym(2, 0)]
}

pub fn p1_shape(xi: f64, eta: f64) -> [f64; 3] {
    [1.0 - xi - eta, xi, eta]
}

/// Per-element affine data of the reference mesh.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElementGeometry {
    /// Inverse of the affine map Jacobian (reference triangle to element).
    pub inv: Mat2,
    /// Determinant of the affine map Jacobian (twice the element area).
    pub det: f64,
}

/// Quadratic (velocity) / linear (pressure) Taylor-Hood space on a
/// straight-sided mesh. Global P2 nodes are the mesh vertices followed by
/// one node per edge; velocity dof `2 * node + c` holds component `c`.
#[derive(Clone, Debug)]
pub struct P2Space {
    pub mesh: TriMesh,
    pub elem_nodes: Vec<[usize; 6]>,
    pub edges: Vec<[usize; 2]>,
    /// Reference position of every P2 node.
    pub node_pos: Vec<Vec2>,
    pub geom: Vec<ElementGeometry>,
    /// `[start vertex, end vertex, midpoint node]` per boundary edge, in curve order.
    pub boundary_edge_nodes: Vec<[usize; 3]>,
    /// Boundary P2 nodes in curve order: vertex, midpoint, vertex, ...
    pub boundary_nodes: Vec<usize>,
    /// Element owning each boundary edge and the local edge index (0, 1, 2).
    pub boundary_edge_elem: Vec<(usize, usize)>,
    /// Reference shape values and gradients at the quadrature points.
    pub phi: [[f64; 6]; NQ],
    pub dphi: [[Vec2; 6]; NQ],
    pub psi: [[f64; 3]; NQ],
}

impl P2Space {
    pub fn new(mesh: TriMesh) -> Self {
        let nv = mesh.vertices.len();
        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut elem_nodes = Vec::with_capacity(mesh.triangles.len());
        for t in &mesh.triangles {
            let mut nodes = [t[0], t[1], t[2], 0, 0, 0];
            for (k, (a, b)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
                let key = (t[a].min(t[b]), t[a].max(t[b]));
                let id = *edge_index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edges.len() - 1
                });
                nodes[3 + k] = nv + id;
            }
            elem_nodes.push(nodes);
        }
        let mut node_pos = mesh.vertices.clone();
        node_pos.extend(edges.iter().map(|e| (mesh.vertices[e[0]] + mesh.vertices[e[1]]) * 0.5));

        let geom = mesh
            .triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| mesh.vertices[i]);
                let jac = Mat2::from_columns(&[b - a, c - a]);
                let det = jac.determinant();
                ElementGeometry { inv: jac.try_inverse().unwrap_or_else(Mat2::zeros), det }
            })
            .collect();

        // boundary edge to owning element
        let mut directed: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        for (e, t) in mesh.triangles.iter().enumerate() {
            for (k, (a, b)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
                directed.insert((t[a], t[b]), (e, k));
            }
        }
        let mut boundary_edge_nodes = Vec::with_capacity(mesh.boundary_edges.len());
        let mut boundary_edge_elem = Vec::with_capacity(mesh.boundary_edges.len());
        let mut boundary_nodes = Vec::with_capacity(2 * mesh.boundary_edges.len());
        for be in &mesh.boundary_edges {
            let key = (be.a.min(be.b), be.a.max(be.b));
            let mid = nv + edge_index[&key];
            boundary_edge_nodes.push([be.a, be.b, mid]);
            boundary_edge_elem.push(directed[&(be.a, be.b)]);
            boundary_nodes.push(be.a);
            boundary_nodes.push(mid);
        }

        let mut phi = [[0.0; 6]; NQ];
        let mut dphi = [[Vec2::zeros(); 6]; NQ];
        let mut psi = [[0.0; 3]; NQ];
        for q in 0..NQ {
            let [x, y] = TRI7_POINTS[q];
            phi[q] = p2_shape(x, y);
            dphi[q] = p2_grad(x, y);
            psi[q] = p1_shape(x, y);
        }
        Self {
            mesh,
            elem_nodes,
            edges,
            node_pos,
            geom,
            boundary_edge_nodes,
            boundary_nodes,
            boundary_edge_elem,
            phi,
            dphi,
            psi,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.node_pos.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.mesh.vertices.len()
    }

    pub fn n_velocity(&self) -> usize {
        2 * self.n_nodes()
    }

    pub fn n_elements(&self) -> usize {
        self.elem_nodes.len()
    }

    pub fn weights() -> [f64; NQ] {
        TRI7_WEIGHTS
    }

    /// Reference-coordinate gradients of the element's P2 shape functions at quadrature point `q`.
    pub fn grads(&self, e: usize, q: usize) -> [Vec2; 6] {
        let inv_t = self.geom[e].inv.transpose();
        self.dphi[q].map(|g| inv_t * g)
    }

    /// Reference-coordinate position of quadrature point `q` of element `e`.
    pub fn quad_point(&self, e: usize, q: usize) -> Vec2 {
        let n = &self.elem_nodes[e];
        (0..6).fold(Vec2::zeros(), |acc, a| acc + self.node_pos[n[a]] * self.phi[q][a])
    }

    /// Tag of the boundary edge owning boundary node position `k` in [`Self::boundary_nodes`]
    /// (vertices take the tag of the edge that starts there).
    pub fn boundary_tag(&self, k: usize) -> RegionTag {
        self.mesh.boundary_edges[k / 2].tag
    }

    /// Nodal interpolant of `f` (two components per node).
    pub fn interpolate(&self, f: impl Fn(Vec2) -> Vec2) -> Vec<f64> {
        let mut out = vec![0.0; self.n_velocity()];
        for (i, p) in self.node_pos.iter().enumerate() {
            let v = f(*p);
            out[2 * i] = v.x;
            out[2 * i + 1] = v.y;
        }
        out
    }

    /// Node positions as an interleaved coefficient vector.
    pub fn identity_map(&self) -> Vec<f64> {
        self.interpolate(|p| p)
    }

    /// Value of a P2 vector field at reference barycentric point `(xi, eta)` of element `e`.
    pub fn eval_in(&self, coeffs: &[f64], e: usize, xi: f64, eta: f64) -> Vec2 {
        let phi = p2_shape(xi, eta);
        let n = &self.elem_nodes[e];
        (0..6).fold(Vec2::zeros(), |acc, a| acc + Vec2::new(coeffs[2 * n[a]], coeffs[2 * n[a] + 1]) * phi[a])
    }

    /// Locates `p` in the reference mesh, returning element and local coordinates.
    pub fn locate(&self, p: Vec2) -> Option<(usize, f64, f64)> {
        let mut best: Option<(usize, f64, f64, f64)> = None;
        for (e, t) in self.mesh.triangles.iter().enumerate() {
            let a = self.mesh.vertices[t[0]];
            let l = self.geom[e].inv * (p - a);
            let outside = (-l.x).max(-l.y).max(l.x + l.y - 1.0);
            if best.map_or(true, |b| outside < b.3) {
                best = Some((e, l.x, l.y, outside));
            }
            if outside <= 0.0 {
                break;
            }
        }
        best.filter(|b| b.3 < 1e-9).map(|b| (b.0, b.1, b.2))
    }

    /// Value of a P2 vector field at reference point `p`, if inside the mesh.
    pub fn eval(&self, coeffs: &[f64], p: Vec2) -> Option<Vec2> {
        self.locate(p).map(|(e, x, y)| self.eval_in(coeffs, e, x, y))
    }

    /// Consistent boundary normals: for every boundary node, `int phi_i n ds`
    /// over the straight boundary edges of the configuration `pos`
    /// (interleaved node positions). Returned in [`Self::boundary_nodes`] order.
    pub fn boundary_weights(&self, pos: &[f64]) -> Vec<Vec2> {
        let nb = self.boundary_edge_nodes.len();
        let mut w = vec![Vec2::zeros(); 2 * nb];
        let at = |i: usize| Vec2::new(pos[2 * i], pos[2 * i + 1]);
        for (k, [a, b, _]) in self.boundary_edge_nodes.iter().enumerate() {
            let d = at(*b) - at(*a);
            // outward normal times edge length for a counterclockwise boundary
            let nl = Vec2::new(d.y, -d.x);
            w[2 * k] += nl / 6.0;
            w[(2 * k + 2) % (2 * nb)] += nl / 6.0;
            w[2 * k + 1] += nl * (2.0 / 3.0);
        }
        w
    }
}
