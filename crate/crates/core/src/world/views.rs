use std::f64::consts::{PI, TAU};

use super::{WorldError, WorldState};
use crate::Vec2;

pub const VIEW_COUNT: usize = 5;
pub const VIEW_BINS: usize = 32;
pub const VIEW_ANGLES_DEG: [f64; VIEW_COUNT] = [0.0, 72.0, 144.0, 216.0, 288.0];

/// Occupancy binning: `sectors` angular sectors centered on the view axis
/// times `ring_edges.len() - 1` distance rings.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewParams {
    pub sectors: usize,
    pub ring_edges: Vec<f64>,
    /// Radius whose disc has unit mass.
    pub unit_radius: f64,
    /// Concentric sample rings per disc (ring k holds 6k points).
    pub sample_rings: usize,
}

impl Default for ViewParams {
    fn default() -> Self {
        ViewParams {
            sectors: 8,
            ring_edges: vec![0.0, 0.1, 0.2, 0.35, 0.5],
            unit_radius: 0.05,
            sample_rings: 4,
        }
    }
}

impl ViewParams {
    pub fn bins(&self) -> usize {
        self.sectors * (self.ring_edges.len() - 1)
    }

    pub fn sensing_radius(&self) -> f64 {
        *self.ring_edges.last().unwrap()
    }

    /// Bin of an offset given as (bearing relative to the view axis, distance).
    pub fn bin(&self, bearing: f64, dist: f64) -> Option<usize> {
        if dist >= self.sensing_radius() {
            return None;
        }
        let ring = self
            .ring_edges
            .windows(2)
            .position(|e| dist >= e[0] && dist < e[1])?;
        let width = TAU / self.sectors as f64;
        let a = (bearing + width / 2.0).rem_euclid(TAU);
        let sector = ((a / width).floor() as usize).min(self.sectors - 1);
        Some(ring * self.sectors + sector)
    }
}

/// Hexagonal sample pattern over a disc, equal weights.
fn disc_samples(center: Vec2, radius: f64, rings: usize) -> Vec<Vec2> {
    let mut pts = vec![center];
    for k in 1..=rings {
        let rk = radius * k as f64 / (rings as f64 + 0.5);
        let n = 6 * k;
        for j in 0..n {
            let a = TAU * j as f64 / n as f64;
            pts.push(center + Vec2::new(a.cos(), a.sin()) * rk);
        }
    }
    pts
}

/// Five occupancy views around `object`.
///
/// Bearings are measured from the approach axis (object towards the robot);
/// view `k` looks along that axis rotated by `72° k`. Each view bins the mass
/// of the other clutter objects within the sensing radius.
pub fn render_views(w: &WorldState, object: &str) -> Result<Vec<Vec<f64>>, WorldError> {
    render_views_with(w, object, &ViewParams::default())
}

pub fn render_views_with(
    w: &WorldState,
    object: &str,
    vp: &ViewParams,
) -> Result<Vec<Vec<f64>>, WorldError> {
    let o = w
        .object(object)
        .ok_or_else(|| WorldError::UnknownObject(object.to_string()))?;
    let axis = (w.robot - o.position)
        .normalized()
        .unwrap_or_else(|| Vec2::new(1.0, 0.0));
    let mut views = vec![vec![0.0; vp.bins()]; VIEW_COUNT];
    let unit_area = vp.unit_radius * vp.unit_radius;
    for n in w.clutter().filter(|n| n.name != o.name) {
        if n.position.dist(o.position) - n.radius >= vp.sensing_radius() {
            continue;
        }
        let pts = disc_samples(n.position, n.radius, vp.sample_rings);
        let mass = n.radius * n.radius / unit_area / pts.len() as f64;
        for p in pts {
            let d = p - o.position;
            let bearing = axis.cross(d).atan2(axis.dot(d));
            let dist = d.norm();
            for (k, view) in views.iter_mut().enumerate() {
                let rel = bearing - VIEW_ANGLES_DEG[k] * PI / 180.0;
                if let Some(b) = vp.bin(rel, dist) {
                    view[b] += mass;
                }
            }
        }
    }
    Ok(views)
}
