//! Indoor-factory deployment: hall, gNB grid, target and reference UEs.

use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, SimRng};

pub type GnbId = u32;
pub type UeId = u32;

/// Hall-local Cartesian position in meters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Position3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3D {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_valid(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite() && self.z >= 0.0
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn offset(self, dx: f64, dy: f64, dz: f64) -> Self {
        Self::new(self.x + dx, self.y + dy, self.z + dz)
    }

    /// Distance in the x-y plane.
    pub fn horizontal_distance(&self, other: &Position3D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Euclidean 3D distance.
pub fn distance(a: &Position3D, b: &Position3D) -> f64 {
    let (dx, dy, dz) = (a.x - b.x, a.y - b.y, a.z - b.z);
    (dx * dx + dy * dy + dz * dz).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayoutConfig {
    pub hall_length: f64,
    pub hall_width: f64,
    pub gnb_spacing: f64,
    pub gnb_count: usize,
    pub gnb_height_min: f64,
    pub gnb_height_max: f64,
    pub ceiling_height: f64,
    pub ue_height: f64,
    pub reference_ue_count: usize,
    /// Clock biases are drawn uniformly on `[-clock_bias_max, clock_bias_max]` seconds.
    pub clock_bias_max: f64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            hall_length: 300.0,
            hall_width: 150.0,
            gnb_spacing: 50.0,
            gnb_count: 18,
            gnb_height_min: 3.0,
            gnb_height_max: 10.0,
            ceiling_height: 10.0,
            ue_height: 1.5,
            reference_ue_count: 4,
            clock_bias_max: 1e-6,
        }
    }
}

impl LayoutConfig {
    /// Grid dimensions `(columns along x, rows along y)`.
    pub fn grid_shape(&self) -> Result<(usize, usize)> {
        let cols = self.hall_length / self.gnb_spacing;
        let rows = self.hall_width / self.gnb_spacing;
        let integral = |v: f64| v >= 1.0 && (v - v.round()).abs() < 1e-9;
        if !integral(cols) || !integral(rows) {
            return Err(Error::Config(format!(
                "gNB spacing {} m does not tile a {} m x {} m hall",
                self.gnb_spacing, self.hall_length, self.hall_width
            )));
        }
        Ok((cols.round() as usize, rows.round() as usize))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("hall_length", self.hall_length),
            ("hall_width", self.hall_width),
            ("gnb_spacing", self.gnb_spacing),
            ("ceiling_height", self.ceiling_height),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0 < self.gnb_height_min
            && self.gnb_height_min < self.gnb_height_max
            && self.gnb_height_max <= self.ceiling_height)
        {
            return Err(Error::Config(format!(
                "gNB heights need 0 < min < max <= ceiling, got [{}, {}] under {}",
                self.gnb_height_min, self.gnb_height_max, self.ceiling_height
            )));
        }
        if !(self.ue_height >= 0.0 && self.ue_height < self.ceiling_height) {
            return Err(Error::Config(format!(
                "UE height {} must lie in [0, ceiling)",
                self.ue_height
            )));
        }
        if self.reference_ue_count == 0 {
            return Err(Error::Config("at least one reference UE is required".into()));
        }
        if !(self.clock_bias_max.is_finite() && self.clock_bias_max >= 0.0) {
            return Err(Error::Config("clock_bias_max must be non-negative".into()));
        }
        let (cols, rows) = self.grid_shape()?;
        if cols * rows != self.gnb_count {
            return Err(Error::Config(format!(
                "grid of {cols}x{rows} gNBs does not match gnb_count {}",
                self.gnb_count
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnbNode {
    pub id: GnbId,
    pub position: Position3D,
    /// Transmitter clock bias, seconds.
    pub clock_bias: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum UeKind {
    Target,
    Reference,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UeNode {
    pub id: UeId,
    pub position: Position3D,
    /// Receiver clock bias, seconds.
    pub clock_bias: f64,
    pub kind: UeKind,
    pub serving_gnb: GnbId,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Deployment {
    pub config: LayoutConfig,
    pub gnbs: Vec<GnbNode>,
    pub target_ues: Vec<UeNode>,
    pub reference_ues: Vec<UeNode>,
    pub seed: u64,
}

impl Deployment {
    pub fn gnb(&self, id: GnbId) -> Option<&GnbNode> {
        self.gnbs.iter().find(|g| g.id == id)
    }

    /// Reference UE closest (3D) to the given gNB; ties go to the lowest id.
    pub fn nearest_reference(&self, gnb: &GnbNode) -> Option<&UeNode> {
        self.reference_ues.iter().min_by(|a, b| {
            distance(&a.position, &gnb.position)
                .total_cmp(&distance(&b.position, &gnb.position))
                .then(a.id.cmp(&b.id))
        })
    }
}

/// Centroids of an equal partition of the hall into `count` cells.
///
/// The partition uses `rows x cols` cells with `rows` the largest divisor of
/// `count` not above its square root; the longer hall side gets the columns.
pub fn reference_positions(config: &LayoutConfig) -> Vec<Position3D> {
    let count = config.reference_ue_count;
    let short = (1..=count)
        .filter(|d| count.is_multiple_of(*d) && d * d <= count)
        .max()
        .unwrap_or(1);
    let long = count / short;
    let (nx, ny) = if config.hall_length >= config.hall_width {
        (long, short)
    } else {
        (short, long)
    };
    let (cell_x, cell_y) = (config.hall_length / nx as f64, config.hall_width / ny as f64);
    let mut out = Vec::with_capacity(count);
    for iy in 0..ny {
        for ix in 0..nx {
            out.push(Position3D::new(
                cell_x * (ix as f64 + 0.5),
                cell_y * (iy as f64 + 0.5),
                config.ue_height,
            ));
        }
    }
    out
}

fn uniform_bias(rng: &mut SimRng, max: f64) -> f64 {
    if max == 0.0 {
        0.0
    } else {
        rng.random_range(-max..=max)
    }
}

/// Builds one seeded deployment.
///
/// gNBs sit on a regular grid offset by half a spacing from the walls, with
/// heights drawn uniformly on `[gnb_height_min, gnb_height_max]`. Target UEs
/// are uniform over the floor at `ue_height`; reference UEs occupy the cell
/// centroids from [`reference_positions`] and never depend on the seed.
pub fn generate_layout(config: &LayoutConfig, n_target_ues: usize, seed: u64) -> Result<Deployment> {
    config.validate()?;
    if n_target_ues == 0 {
        return Err(Error::Config("at least one target UE is required".into()));
    }
    let mut rng = rng::seeded(seed);
    let (cols, rows) = config.grid_shape()?;
    let half = config.gnb_spacing / 2.0;

    let mut gnbs = Vec::with_capacity(config.gnb_count);
    for iy in 0..rows {
        for ix in 0..cols {
            let z = rng.random_range(config.gnb_height_min..=config.gnb_height_max);
            gnbs.push(GnbNode {
                id: (iy * cols + ix) as GnbId,
                position: Position3D::new(
                    half + ix as f64 * config.gnb_spacing,
                    half + iy as f64 * config.gnb_spacing,
                    z,
                ),
                clock_bias: 0.0,
            });
        }
    }
    for g in &mut gnbs {
        g.clock_bias = uniform_bias(&mut rng, config.clock_bias_max);
    }

    let mut target_ues = Vec::with_capacity(n_target_ues);
    for id in 0..n_target_ues {
        let position = Position3D::new(
            rng.random_range(0.0..=config.hall_length),
            rng.random_range(0.0..=config.hall_width),
            config.ue_height,
        );
        let clock_bias = uniform_bias(&mut rng, config.clock_bias_max);
        target_ues.push(UeNode {
            id: id as UeId,
            position,
            clock_bias,
            kind: UeKind::Target,
            serving_gnb: assign_serving(&position, &gnbs),
        });
    }

    let reference_ues = reference_positions(config)
        .into_iter()
        .enumerate()
        .map(|(k, position)| UeNode {
            id: (n_target_ues + k) as UeId,
            position,
            clock_bias: uniform_bias(&mut rng, config.clock_bias_max),
            kind: UeKind::Reference,
            serving_gnb: assign_serving(&position, &gnbs),
        })
        .collect();

    Ok(Deployment {
        config: config.clone(),
        gnbs,
        target_ues,
        reference_ues,
        seed,
    })
}

/// Nearest gNB in 3D; ties broken by lowest id.
///
/// Panics if `gnbs` is empty.
pub fn assign_serving(ue: &Position3D, gnbs: &[GnbNode]) -> GnbId {
    gnbs.iter()
        .map(|g| (distance(ue, &g.position), g.id))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, id)| id)
        .expect("serving assignment needs at least one gNB")
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Convex hull of the gNB floor projections, counter-clockwise.
#[derive(Clone, Debug, PartialEq)]
pub struct Hull2D {
    vertices: Vec<(f64, f64)>,
    tolerance: f64,
}

impl Hull2D {
    pub fn from_gnbs(gnbs: &[GnbNode]) -> Result<Self> {
        let mut pts: Vec<(f64, f64)> = gnbs.iter().map(|g| (g.position.x, g.position.y)).collect();
        if pts.len() < 3 {
            return Err(Error::DegenerateGeometry(format!(
                "convex hull needs at least 3 gNBs, got {}",
                pts.len()
            )));
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        pts.dedup();

        // Andrew's monotone chain, dropping collinear points.
        let mut lower: Vec<(f64, f64)> = Vec::new();
        for &p in &pts {
            while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<(f64, f64)> = Vec::new();
        for &p in pts.iter().rev() {
            while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);

        if lower.len() < 3 {
            return Err(Error::DegenerateGeometry(
                "gNB floor projections are collinear".into(),
            ));
        }
        let span = pts
            .iter()
            .fold(0.0_f64, |m, p| m.max(p.0.abs()).max(p.1.abs()))
            .max(1.0);
        Ok(Self {
            vertices: lower,
            tolerance: 1e-9 * span * span,
        })
    }

    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.vertices
    }

    /// Boundary points count as inside.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let n = self.vertices.len();
        (0..n).all(|k| cross(self.vertices[k], self.vertices[(k + 1) % n], (x, y)) >= -self.tolerance)
    }
}

/// Whether `p` lies in the 2D convex hull of the gNB (x, y) projections.
pub fn in_convex_hull(p: &Position3D, gnbs: &[GnbNode]) -> Result<bool> {
    Ok(Hull2D::from_gnbs(gnbs)?.contains(p.x, p.y))
}
