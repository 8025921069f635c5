use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::fem::P2Space;
use crate::geometry::{discrete_sobolev_norm, DeviationSamples, RegionTag};
use crate::{Error, Result, Vec2};

/// `exp(-1/t)` smooth step from 0 at `t <= 0` to 1 at `t >= 1`.
pub fn smooth_step(t: f64) -> f64 {
    let f = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        f(t) / (f(t) + f(1.0 - t))
    }
}

/// Smooth plateau: 1 for `|d| <= radius/2`, 0 for `|d| >= radius`.
pub fn plateau(d: f64, radius: f64) -> f64 {
    1.0 - smooth_step((d.abs() - 0.5 * radius) / (0.5 * radius))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileOptions {
    /// Arclength radius of the bump support around the falling point.
    pub bump_radius: f64,
    /// Value on the bump plateau is `-amplitude`.
    pub amplitude: f64,
    /// Boundary region whose longest run carries the mean correction.
    pub correction_tag: RegionTag,
    /// Tags on which the profile must vanish.
    pub zero_tags: [RegionTag; 2],
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            bump_radius: 0.4,
            amplitude: 1.0,
            correction_tag: RegionTag::Other,
            zero_tags: [RegionTag::Trough, RegionTag::Neck],
        }
    }
}

/// Boundary normal-velocity profile `b0` on the boundary nodes of a
/// [`P2Space`], measured along the inward normal: the fluid at the bump
/// center moves into the domain's exterior gap with speed `amplitude`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryProfile {
    /// Values at [`P2Space::boundary_nodes`].
    pub values: Vec<f64>,
    /// Arclength of each boundary node from the first one.
    pub arclength: Vec<f64>,
    pub tags: Vec<RegionTag>,
    /// `|int phi_i n ds|` for each boundary node.
    pub weights: Vec<f64>,
    pub perimeter: f64,
    pub center: f64,
    pub options: ProfileOptions,
    pub correction_center: f64,
    pub correction_halfwidth: f64,
    pub correction_amplitude: f64,
}

fn periodic_distance(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

/// Builds `b0` around boundary node `center_node` (a mesh vertex index).
pub fn build_b0(space: &P2Space, center_node: usize, opts: &ProfileOptions) -> Result<BoundaryProfile> {
    if !(opts.bump_radius > 0.0) || !opts.amplitude.is_finite() {
        return Err(Error::InvalidInput("bump radius must be positive and amplitude finite".into()));
    }
    let bn = &space.boundary_nodes;
    let nb = bn.len();
    let k_center = bn
        .iter()
        .position(|&i| i == center_node)
        .ok_or_else(|| Error::InvalidInput(format!("node {center_node} is not on the boundary")))?;
    let pos = space.identity_map();
    let weights: Vec<f64> = space.boundary_weights(&pos).iter().map(|w| w.norm()).collect();
    let mut arclength = vec![0.0; nb];
    for k in 1..nb {
        arclength[k] = arclength[k - 1] + (space.node_pos[bn[k]] - space.node_pos[bn[k - 1]]).norm();
    }
    let perimeter = arclength[nb - 1] + (space.node_pos[bn[0]] - space.node_pos[bn[nb - 1]]).norm();
    let tags: Vec<RegionTag> = (0..nb).map(|k| space.boundary_tag(k)).collect();
    let center = arclength[k_center];

    let bump: Vec<f64> = arclength
        .iter()
        .map(|&s| -opts.amplitude * plateau(periodic_distance(s, center, perimeter), opts.bump_radius))
        .collect();
    if let Some(k) = (0..nb).find(|&k| bump[k] != 0.0 && opts.zero_tags.contains(&tags[k])) {
        return Err(Error::InvalidInput(format!(
            "bump of radius {} reaches the {} region at arclength {:.4}",
            opts.bump_radius, tags[k], arclength[k]
        )));
    }

    // longest run of consecutive boundary edges with the correction tag
    let ne = nb / 2;
    let edge_tag = |e: usize| space.mesh.boundary_edges[e % ne].tag;
    let start = (0..ne).find(|&e| edge_tag(e) != opts.correction_tag);
    let (mut best, mut cur) = ((0usize, 0usize), (0usize, 0usize));
    match start {
        None => best = (0, ne),
        Some(s0) => {
            for off in 1..=ne {
                let e = (s0 + off) % ne;
                if edge_tag(e) == opts.correction_tag {
                    if cur.1 == 0 {
                        cur.0 = e;
                    }
                    cur.1 += 1;
                    if cur.1 > best.1 {
                        best = cur;
                    }
                } else {
                    cur = (0, 0);
                }
            }
        }
    }
    if best.1 < 8 {
        return Err(Error::InvalidInput(format!(
            "correction region ({}) has {} boundary edges, too few to absorb the mean",
            opts.correction_tag, best.1
        )));
    }
    let run_start = arclength[2 * best.0];
    let run_len: f64 = (best.0..best.0 + best.1)
        .map(|e| {
            let [a, b, _] = space.boundary_edge_nodes[e % ne];
            (space.node_pos[b] - space.node_pos[a]).norm()
        })
        .sum();
    let correction_center = (run_start + 0.5 * run_len).rem_euclid(perimeter);
    let correction_halfwidth = 0.5 * run_len;
    let chi: Vec<f64> = arclength
        .iter()
        .map(|&s| plateau(periodic_distance(s, correction_center, perimeter), correction_halfwidth))
        .collect();
    let flux_bump: f64 = bump.iter().zip(&weights).map(|(b, w)| b * w).sum();
    let flux_chi: f64 = chi.iter().zip(&weights).map(|(c, w)| c * w).sum();
    if flux_chi <= 0.0 {
        return Err(Error::InvalidInput("correction region carries no weight".into()));
    }
    let correction_amplitude = -flux_bump / flux_chi;
    let values = bump.iter().zip(&chi).map(|(b, c)| b + correction_amplitude * c).collect();
    Ok(BoundaryProfile {
        values,
        arclength,
        tags,
        weights,
        perimeter,
        center,
        options: *opts,
        correction_center,
        correction_halfwidth,
        correction_amplitude,
    })
}

impl BoundaryProfile {
    /// Profile as a function of boundary arclength.
    pub fn value_at(&self, s: f64) -> f64 {
        let o = &self.options;
        -o.amplitude * plateau(periodic_distance(s, self.center, self.perimeter), o.bump_radius)
            + self.correction_amplitude
                * plateau(periodic_distance(s, self.correction_center, self.perimeter), self.correction_halfwidth)
    }

    /// Discrete boundary integral `sum_i b_i |int phi_i n ds|`.
    pub fn integral(&self) -> f64 {
        self.values.iter().zip(&self.weights).map(|(b, w)| b * w).sum()
    }

    /// Discrete norm with up to two tangential derivatives, from `samples`
    /// uniform arclength samples.
    pub fn norm_surrogate(&self, samples: usize) -> Result<f64> {
        let h = self.perimeter / samples as f64;
        let vals = (0..samples).map(|i| self.value_at(i as f64 * h)).collect();
        discrete_sobolev_norm(&DeviationSamples::scalar(vals, h, true), 2)
    }

    /// Outward normal velocity components imposed by the profile.
    pub fn outward_normal_values(&self) -> Vec<f64> {
        self.values.iter().map(|b| -b).collect()
    }

    /// CSV rows `node,arclength,value,tag`.
    pub fn to_csv(&self, space: &P2Space) -> String {
        let mut s = String::from("node,arclength,value,tag\n");
        for (k, &i) in space.boundary_nodes.iter().enumerate() {
            let _ = writeln!(s, "{i},{},{},{}", self.arclength[k], self.values[k], self.tags[k]);
        }
        s
    }
}

/// Boundary normals of the bump center: consistent outward normal at `node`.
pub fn outward_normal_at(space: &P2Space, node: usize) -> Option<Vec2> {
    let w = space.boundary_weights(&space.identity_map());
    space.boundary_nodes.iter().position(|&i| i == node).map(|k| w[k].normalize())
}
