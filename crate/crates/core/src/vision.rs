//! Geometry-only stand-in for the camera pipelines.
//!
//! Masks are rendered analytically from rod capsules under orthographic
//! projection, so a pixel is occupied iff the ray through its center passes
//! within `radius` of the rod's axis segment. The rectangle fit, grasp
//! generation and side-view slip observation operate on those masks only.

use std::io::Write;

use nalgebra::{Matrix3, Vector2, Vector3};

use crate::error::{Error, Result};
use crate::scene::{CameraKind, CameraModel, GraspPose, ObjectTransform, RodObject};
use crate::transform::{wrap_angle, wrap_half_angle, RigidTransform};

#[derive(Debug, Clone)]
pub struct OccupancyMask {
    width: usize,
    height: usize,
    cells: Vec<bool>,
    camera: CameraModel,
    /// Half-open row span that may hold occupied cells.
    rows: (usize, usize),
}

impl PartialEq for OccupancyMask {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.camera == other.camera
            && self.cells == other.cells
    }
}

impl OccupancyMask {
    pub fn empty(camera: &CameraModel) -> Self {
        Self {
            width: camera.width,
            height: camera.height,
            cells: vec![false; camera.width * camera.height],
            camera: camera.clone(),
            rows: (0, 0),
        }
    }

    /// Builds a mask from row-major cells; used for hand-made test masks.
    pub fn from_cells(camera: &CameraModel, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != camera.width * camera.height {
            return Err(Error::DimensionMismatch {
                expected: camera.width * camera.height,
                got: cells.len(),
            });
        }
        Ok(Self {
            width: camera.width,
            height: camera.height,
            cells,
            camera: camera.clone(),
            rows: (0, camera.height),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn scale(&self) -> f64 {
        self.camera.scale
    }

    pub fn camera(&self) -> &CameraModel {
        &self.camera
    }

    pub fn get(&self, col: usize, row: usize) -> bool {
        self.cells[row * self.width + col]
    }

    pub fn set(&mut self, col: usize, row: usize, value: bool) {
        self.cells[row * self.width + col] = value;
        if value {
            self.rows = if self.rows.0 == self.rows.1 {
                (row, row + 1)
            } else {
                (self.rows.0.min(row), self.rows.1.max(row + 1))
            };
        }
    }

    fn active_cells(&self) -> &[bool] {
        &self.cells[self.rows.0 * self.width..self.rows.1 * self.width]
    }

    pub fn count(&self) -> usize {
        self.active_cells().iter().filter(|c| **c).count()
    }

    /// Image-plane centers of all occupied pixels, row-major.
    pub fn occupied_points(&self) -> Vec<Vector2<f64>> {
        let mut pts = Vec::new();
        for row in self.rows.0..self.rows.1 {
            for col in 0..self.width {
                if self.get(col, row) {
                    pts.push(self.camera.pixel_center(col, row));
                }
            }
        }
        pts
    }

    /// Leftmost and rightmost occupied pixel centers of every row. Their
    /// convex hull equals the hull of all occupied pixels.
    fn row_extremes(&self) -> Vec<Vector2<f64>> {
        let mut pts = Vec::new();
        for row in self.rows.0..self.rows.1 {
            let line = &self.cells[row * self.width..(row + 1) * self.width];
            let first = line.iter().position(|c| *c);
            let last = line.iter().rposition(|c| *c);
            if let (Some(a), Some(b)) = (first, last) {
                pts.push(self.camera.pixel_center(a, row));
                if b != a {
                    pts.push(self.camera.pixel_center(b, row));
                }
            }
        }
        pts
    }

    /// Binary greymap (PGM `P5`): header `P5\n<W> <H>\n255\n`, then one byte
    /// per pixel row-major, 255 occupied, 0 free.
    pub fn write_pgm<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "P5\n{} {}\n255\n", self.width, self.height)?;
        let bytes: Vec<u8> = self.cells.iter().map(|c| if *c { 255 } else { 0 }).collect();
        out.write_all(&bytes)
    }
}

/// Capsule projected into the image plane: a segment plus radius, in metres.
struct ProjectedCapsule {
    a: Vector2<f64>,
    b: Vector2<f64>,
    radius: f64,
}

impl ProjectedCapsule {
    fn contains(&self, p: &Vector2<f64>) -> bool {
        point_segment_distance(p, &self.a, &self.b) <= self.radius
    }
}

pub fn point_segment_distance(p: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p - (a + ab * t)).norm()
}

/// Renders rods as capsules (axis segment of length `l`, radius `d`).
pub fn render_mask(objects: &[RodObject], camera: &CameraModel) -> Result<OccupancyMask> {
    let mut mask = OccupancyMask::empty(camera);
    for rod in objects {
        let (p0, p1) = rod.endpoints();
        let cap = ProjectedCapsule {
            a: camera.project(&p0),
            b: camera.project(&p1),
            radius: rod.radius,
        };
        // Pixel window covering the capsule's bounding box.
        let lo = cap.a.inf(&cap.b).add_scalar(-cap.radius);
        let hi = cap.a.sup(&cap.b).add_scalar(cap.radius);
        let to_col = |x: f64| x / camera.scale + camera.width as f64 / 2.0 - 0.5;
        let to_row = |y: f64| y / camera.scale + camera.height as f64 / 2.0 - 0.5;
        let c0 = to_col(lo.x).floor().max(0.0);
        let c1 = to_col(hi.x).ceil().min(camera.width as f64 - 1.0);
        let r0 = to_row(lo.y).floor().max(0.0);
        let r1 = to_row(hi.y).ceil().min(camera.height as f64 - 1.0);
        if c0 > c1 || r0 > r1 {
            continue;
        }
        for row in r0 as usize..=r1 as usize {
            for col in c0 as usize..=c1 as usize {
                if cap.contains(&camera.pixel_center(col, row)) {
                    mask.set(col, row, true);
                }
            }
        }
    }
    if mask.count() == 0 {
        return Err(Error::EmptyMask("no object intersects the camera frustum".into()));
    }
    Ok(mask)
}

/// Minimal-area oriented rectangle around a point set, in image-plane metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinAreaRect {
    pub center: Vector2<f64>,
    /// Major-axis unit direction, angle in `(−π/2, π/2]`.
    pub u: Vector2<f64>,
    /// Minor-axis unit direction, `u` rotated by +90°.
    pub v: Vector2<f64>,
    /// `(a, b)` with `a ≥ b`.
    pub half_extents: (f64, f64),
}

impl MinAreaRect {
    pub fn area(&self) -> f64 {
        4.0 * self.half_extents.0 * self.half_extents.1
    }

    /// Angle of `u` to the image `+x` axis.
    pub fn angle(&self) -> f64 {
        self.u.y.atan2(self.u.x)
    }

    pub fn corners(&self) -> [Vector2<f64>; 4] {
        let (a, b) = self.half_extents;
        let (u, v) = (self.u * a, self.v * b);
        [
            self.center + u + v,
            self.center - u + v,
            self.center - u - v,
            self.center + u - v,
        ]
    }
}

fn cross(o: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Andrew's monotone chain; counter-clockwise, collinear points dropped.
pub fn convex_hull(points: &[Vector2<f64>]) -> Vec<Vector2<f64>> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Vector2<f64>> = Vec::with_capacity(2 * pts.len());
    for p in &pts {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(*p);
    }
    let lower_len = hull.len() + 1;
    for p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(*p);
    }
    hull.pop();
    if hull.len() < 3 {
        // All points collinear: keep the two extremes.
        return vec![pts[0], pts[pts.len() - 1]];
    }
    hull
}

/// Rectangle with sides along `dir` (unit) that encloses `hull`.
fn rect_along(hull: &[Vector2<f64>], dir: Vector2<f64>) -> MinAreaRect {
    let perp = Vector2::new(-dir.y, dir.x);
    let (mut umin, mut umax, mut vmin, mut vmax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in hull {
        let (pu, pv) = (p.dot(&dir), p.dot(&perp));
        umin = umin.min(pu);
        umax = umax.max(pu);
        vmin = vmin.min(pv);
        vmax = vmax.max(pv);
    }
    let center = dir * ((umin + umax) / 2.0) + perp * ((vmin + vmax) / 2.0);
    let (hu, hv) = ((umax - umin) / 2.0, (vmax - vmin) / 2.0);
    let (major, a, b) = if hu >= hv { (dir, hu, hv) } else { (perp, hv, hu) };
    let angle = wrap_half_angle(major.y.atan2(major.x));
    let u = Vector2::new(angle.cos(), angle.sin());
    MinAreaRect {
        center,
        u,
        v: Vector2::new(-u.y, u.x),
        half_extents: (a, b),
    }
}

/// Relative area tolerance under which two candidate rectangles tie.
const AREA_TIE: f64 = 1e-12;

/// Minimal-area enclosing rectangle of a point set via convex hull and
/// rotating calipers. Ties go to the candidate whose major axis makes the
/// smallest angle with `+x`.
pub fn min_area_rect_points(points: &[Vector2<f64>]) -> Result<MinAreaRect> {
    if points.is_empty() {
        return Err(Error::EmptyMask("no occupied pixels".into()));
    }
    let hull = convex_hull(points);
    match hull.len() {
        1 => {
            return Ok(MinAreaRect {
                center: hull[0],
                u: Vector2::x(),
                v: Vector2::y(),
                half_extents: (0.0, 0.0),
            })
        }
        2 => {
            let d = hull[1] - hull[0];
            return Ok(rect_along(&hull, d / d.norm()));
        }
        _ => {}
    }

    let n = hull.len();
    let edge_dir = |i: usize| {
        let e = hull[(i + 1) % n] - hull[i];
        e / e.norm()
    };
    let along = |k: usize, d: &Vector2<f64>| hull[k % n].dot(d);
    let across = |k: usize, d: &Vector2<f64>| {
        let perp = Vector2::new(-d.y, d.x);
        hull[k % n].dot(&perp)
    };

    // Calipers: farthest point along the edge, farthest from the edge and
    // nearest along the edge. Each only ever advances around the hull.
    let d0 = edge_dir(0);
    let argmax = |f: &dyn Fn(usize) -> f64| (0..n).max_by(|a, b| f(*a).total_cmp(&f(*b))).unwrap_or(0);
    let mut far_along = argmax(&|k| along(k, &d0));
    let mut far_across = argmax(&|k| across(k, &d0));
    let mut near_along = argmax(&|k| -along(k, &d0));

    let mut best: Option<(f64, MinAreaRect)> = None;
    for i in 0..n {
        let dir = edge_dir(i);
        for _ in 0..n {
            if along(far_along + 1, &dir) > along(far_along, &dir) {
                far_along += 1;
            } else {
                break;
            }
        }
        for _ in 0..n {
            if across(far_across + 1, &dir) > across(far_across, &dir) {
                far_across += 1;
            } else {
                break;
            }
        }
        for _ in 0..n {
            if along(near_along + 1, &dir) < along(near_along, &dir) {
                near_along += 1;
            } else {
                break;
            }
        }
        let length = along(far_along, &dir) - along(near_along, &dir);
        let width = across(far_across, &dir) - across(i, &dir);
        let area = (length * width).max(0.0);
        let replace = match &best {
            None => true,
            Some((best_area, rect)) => {
                let tol = AREA_TIE * best_area.max(f64::MIN_POSITIVE);
                if (area - best_area).abs() <= tol {
                    let cand = rect_along(&hull, dir);
                    let (ca, ba) = (cand.angle(), rect.angle());
                    ca.abs() < ba.abs() || (ca.abs() == ba.abs() && ca > ba)
                } else {
                    area < *best_area
                }
            }
        };
        if replace {
            best = Some((area, rect_along(&hull, dir)));
        }
    }
    Ok(best.expect("hull has at least three edges").1)
}

/// Minimal-area rectangle of the occupied pixel centers of a mask.
pub fn min_area_rect(mask: &OccupancyMask) -> Result<MinAreaRect> {
    let pts = mask.row_extremes();
    if pts.is_empty() {
        return Err(Error::EmptyMask("cannot fit a rectangle to an empty mask".into()));
    }
    min_area_rect_points(&pts)
}

/// Known table geometry used to lift a top-down detection into a 3-D grasp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableContext {
    pub table_z: f64,
    pub rod_radius: f64,
    pub grip_force: f64,
}

/// Rod pose on the table as seen from above.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopDownDetection {
    pub center: Vector3<f64>,
    /// Horizontal unit direction of the rod axis, heading in `(−π/2, π/2]`.
    pub axis: Vector3<f64>,
    pub rect: MinAreaRect,
}

/// Minimum ratio of major to minor half-extent accepted as a rod.
const ROD_ASPECT: f64 = 1.05;

pub fn detect_topdown(mask: &OccupancyMask, table: &TableContext) -> Result<TopDownDetection> {
    if mask.camera().kind != CameraKind::TopDown {
        return Err(Error::InvalidInput(
            "top-down detection needs a top-down camera mask".into(),
        ));
    }
    let rect = min_area_rect(mask)?;
    let (a, b) = rect.half_extents;
    if a <= ROD_ASPECT * b {
        return Err(Error::AmbiguousOrientation { a, b });
    }
    let cam = mask.camera();
    let mut center = cam.unproject(&rect.center);
    center.z = table.table_z + table.rod_radius;
    let mut axis = cam.unproject_direction(&rect.u);
    axis.z = 0.0;
    let heading = wrap_half_angle(axis.y.atan2(axis.x));
    Ok(TopDownDetection {
        center,
        axis: Vector3::new(heading.cos(), heading.sin(), 0.0),
        rect,
    })
}

/// Geometric-center grasp from a top-down mask: jaws perpendicular to the
/// rectangle's major axis, eelink on the rod axis height.
pub fn grasp_from_topdown(mask: &OccupancyMask, table: &TableContext) -> Result<GraspPose> {
    let det = detect_topdown(mask, table)?;
    let heading = det.axis.y.atan2(det.axis.x);
    GraspPose::new(
        det.center.x,
        det.center.y,
        det.center.z,
        wrap_angle(heading + std::f64::consts::FRAC_PI_2),
        table.grip_force,
    )
}

/// Thresholds for declaring a slip from the side view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlipThresholds {
    /// Tilt (radians) beyond which the grasp counts as slipping.
    pub theta_slip: f64,
    /// Contact drift (metres) beyond which the grasp counts as slipping.
    pub slip_distance: f64,
    /// Half-width of the finger band that hides the rod around the eelink.
    pub finger_halfwidth: f64,
}

impl Default for SlipThresholds {
    fn default() -> Self {
        Self {
            theta_slip: 10f64.to_radians(),
            slip_distance: 0.005,
            finger_halfwidth: 0.008,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlipObservation {
    /// Tilt of the rod axis to the image horizontal; positive when the end
    /// toward eelink `+x` is raised.
    pub tilt: f64,
    /// Signed position of the gripper centerline along the rod axis from
    /// the rod's center, measured toward eelink `+x`.
    pub contact_offset: f64,
    pub slipped: bool,
}

/// Fraction of the unoccluded rod that must stay visible.
const MIN_VISIBLE_FRACTION: f64 = 0.2;

/// Side-camera slip observation of a held rod.
///
/// `camera` must be the eelink-mounted side camera; `rod` carries its current
/// (possibly tilted) world pose; `initial_contact_offset` is the reading
/// taken right after closing the jaws, when available.
pub fn observe_side(
    rod: &RodObject,
    camera: &CameraModel,
    initial_contact_offset: Option<f64>,
    thresholds: &SlipThresholds,
) -> Result<SlipObservation> {
    if camera.kind != CameraKind::Side {
        return Err(Error::InvalidInput("side observation needs a side camera".into()));
    }
    let full = render_mask(std::slice::from_ref(rod), camera)
        .map_err(|_| Error::ObservationUnavailable { visible_fraction: 0.0 })?;
    let total = full.count();
    let mut visible = full;
    let band = thresholds.finger_halfwidth;
    for col in 0..visible.width() {
        let x = camera.pixel_center(col, 0).x;
        if x.abs() <= band {
            for row in 0..visible.height() {
                visible.set(col, row, false);
            }
        }
    }
    let fraction = visible.count() as f64 / total as f64;
    if fraction < MIN_VISIBLE_FRACTION {
        return Err(Error::ObservationUnavailable {
            visible_fraction: fraction,
        });
    }

    let rect = min_area_rect(&visible)?;
    // Orient the major axis toward image +x, which is eelink +x.
    let u = if rect.u.x < 0.0 { -rect.u } else { rect.u };
    if u.x.abs() < 1e-12 {
        return Err(Error::ObservationUnavailable {
            visible_fraction: fraction,
        });
    }
    // Image y points along eelink z (down), so "up" is −y.
    let tilt = (-u.y).atan2(u.x);
    let contact_offset = -rect.center.x / u.x;
    let drift = initial_contact_offset.map_or(0.0, |c0| (contact_offset - c0).abs());
    let slipped = drift > thresholds.slip_distance || tilt.abs() > thresholds.theta_slip;
    Ok(SlipObservation {
        tilt,
        contact_offset,
        slipped,
    })
}

/// eelink→object transform from a side observation.
///
/// The object frame is rotated from the eelink frame by the observed tilt
/// about eelink `y`, and its origin sits `contact_offset` behind the eelink
/// along the rod. `rod_axis` is the rod's own `+x` direction in world while it
/// lay on the table; when it opposes the eelink `x` axis the frame is turned
/// by π about `z` so that coordinates refer to the rod's own axis.
pub fn eelink_to_object(
    obs: &SlipObservation,
    eelink_frame: &RigidTransform,
    rod_axis: &Vector3<f64>,
) -> Result<ObjectTransform> {
    let (s, c) = obs.tilt.sin_cos();
    // R_y(−θ)
    let aligned_rot = Matrix3::new(c, 0.0, -s, 0.0, 1.0, 0.0, s, 0.0, c);
    let aligned = RigidTransform::new(aligned_rot, Vector3::new(obs.contact_offset, 0.0, 0.0))?;
    let ee_x = eelink_frame.rotation().column(0).into_owned();
    let m = if ee_x.dot(rod_axis) < 0.0 {
        let flip = RigidTransform::new(Matrix3::from_diagonal(&Vector3::new(-1.0, -1.0, 1.0)), Vector3::zeros())?;
        flip * aligned
    } else {
        aligned
    };
    let out = ObjectTransform::new(m);
    out.check_r33()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{paper_objects, table_pose};
    use std::f64::consts::FRAC_PI_2;

    fn topdown_cam() -> CameraModel {
        CameraModel::top_down(Vector2::new(0.3, 0.0), 2.0, 600, 600, 0.001).unwrap()
    }

    fn rod_at(x: f64, y: f64, yaw: f64) -> RodObject {
        paper_objects()[3].lying_at(Vector2::new(x, y), yaw, 0.0)
    }

    #[test]
    fn axis_aligned_capsule_extent() {
        let cam = topdown_cam();
        let rod = rod_at(0.3, 0.0, 0.0);
        let mask = render_mask(std::slice::from_ref(&rod), &cam).unwrap();
        let (mut cmin, mut cmax, mut rmin, mut rmax) = (usize::MAX, 0, usize::MAX, 0);
        for r in 0..mask.height() {
            for c in 0..mask.width() {
                if mask.get(c, r) {
                    cmin = cmin.min(c);
                    cmax = cmax.max(c);
                    rmin = rmin.min(r);
                    rmax = rmax.max(r);
                }
            }
        }
        let w = (cmax - cmin + 1) as f64;
        let h = (rmax - rmin + 1) as f64;
        assert!(
            (w - (rod.length + 2.0 * rod.radius) / cam.scale).abs() <= 1.0,
            "w = {w}"
        );
        assert!((h - 2.0 * rod.radius / cam.scale).abs() <= 1.0, "h = {h}");
    }

    #[test]
    fn empty_scene_is_an_error() {
        assert!(matches!(render_mask(&[], &topdown_cam()), Err(Error::EmptyMask(_))));
        let far = rod_at(5.0, 5.0, 0.0);
        assert!(matches!(render_mask(&[far], &topdown_cam()), Err(Error::EmptyMask(_))));
    }

    #[test]
    fn axis_aligned_block_rect() {
        let cam = CameraModel::top_down(Vector2::zeros(), 1.0, 40, 30, 1.0).unwrap();
        let mut mask = OccupancyMask::empty(&cam);
        for r in 10..16 {
            for c in 5..25 {
                mask.set(c, r, true);
            }
        }
        let rect = min_area_rect(&mask).unwrap();
        // Pixel centers span 19 × 5 px.
        assert!((rect.half_extents.0 - 9.5).abs() < 1e-12);
        assert!((rect.half_extents.1 - 2.5).abs() < 1e-12);
        assert!((rect.u - Vector2::x()).norm() < 1e-12);
        assert!((rect.u.dot(&rect.v)).abs() < 1e-12);
    }

    #[test]
    fn single_pixel_rect_is_degenerate() {
        let cam = CameraModel::top_down(Vector2::zeros(), 1.0, 8, 8, 1.0).unwrap();
        let mut mask = OccupancyMask::empty(&cam);
        mask.set(3, 4, true);
        let rect = min_area_rect(&mask).unwrap();
        assert_eq!(rect.half_extents, (0.0, 0.0));
        assert_eq!(rect.center, cam.pixel_center(3, 4));
    }

    #[test]
    fn collinear_mask_gives_zero_width() {
        let cam = CameraModel::top_down(Vector2::zeros(), 1.0, 20, 20, 1.0).unwrap();
        let mut mask = OccupancyMask::empty(&cam);
        for k in 2..12 {
            mask.set(k, k, true);
        }
        let rect = min_area_rect(&mask).unwrap();
        assert!(rect.half_extents.1.abs() < 1e-12);
        assert!((rect.half_extents.0 - 9.0 * 2f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn empty_mask_rejected() {
        let mask = OccupancyMask::empty(&topdown_cam());
        assert!(min_area_rect(&mask).is_err());
    }

    #[test]
    fn topdown_grasp_at_center() {
        let rod = rod_at(0.3, 0.2, 0.0);
        let cam = CameraModel::top_down(Vector2::new(0.3, 0.2), 2.0, 500, 500, 0.001).unwrap();
        let mask = render_mask(std::slice::from_ref(&rod), &cam).unwrap();
        let table = TableContext {
            table_z: 0.0,
            rod_radius: rod.radius,
            grip_force: 10.0,
        };
        let g = grasp_from_topdown(&mask, &table).unwrap();
        assert!((g.x - 0.3).abs() < 1e-9);
        assert!((g.y - 0.2).abs() < 1e-9);
        assert!((g.z - rod.radius).abs() < 1e-12);
        assert!((g.yaw - FRAC_PI_2).abs() < 1e-9);
    }

    #[test]
    fn topdown_grasp_is_camera_invariant() {
        let rod = rod_at(0.3, 0.2, 0.0);
        let table = TableContext {
            table_z: 0.0,
            rod_radius: rod.radius,
            grip_force: 10.0,
        };
        let cam_a = CameraModel::top_down(Vector2::new(0.3, 0.2), 2.0, 500, 500, 0.001).unwrap();
        let cam_b = CameraModel::top_down(Vector2::new(0.25, 0.17), 2.4, 500, 500, 0.001).unwrap();
        let ga = grasp_from_topdown(&render_mask(std::slice::from_ref(&rod), &cam_a).unwrap(), &table).unwrap();
        let gb = grasp_from_topdown(&render_mask(&[rod], &cam_b).unwrap(), &table).unwrap();
        assert!((ga.position() - gb.position()).norm() < 1e-9);
        assert!((ga.yaw - gb.yaw).abs() < 1e-9);
    }

    #[test]
    fn round_blob_is_ambiguous() {
        let cam = CameraModel::top_down(Vector2::zeros(), 1.0, 50, 50, 1.0).unwrap();
        let mut mask = OccupancyMask::empty(&cam);
        for r in 0..50 {
            for c in 0..50 {
                let p = cam.pixel_center(c, r);
                if p.norm() < 10.0 {
                    mask.set(c, r, true);
                }
            }
        }
        let table = TableContext {
            table_z: 0.0,
            rod_radius: 0.01,
            grip_force: 1.0,
        };
        assert!(matches!(
            grasp_from_topdown(&mask, &table),
            Err(Error::AmbiguousOrientation { .. })
        ));
    }

    fn side_setup(tilt: f64, contact: f64) -> (RodObject, CameraModel, RigidTransform) {
        let eelink = GraspPose::new(0.4, 0.0, 0.3, FRAC_PI_2, 10.0).unwrap().eelink_frame();
        let base = paper_objects()[2].clone();
        // Rod held with tilt about eelink y, eelink sitting `contact` from center.
        let (s, c) = tilt.sin_cos();
        let r_y = Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c);
        let origin = r_y * Vector3::new(-contact, 0.0, 0.0);
        let held = RigidTransform::new(r_y, origin).unwrap();
        let mut rod = base.clone();
        rod.world_pose = eelink * held;
        let cam = CameraModel::side_mounted(&eelink, 1200, 1200, 0.0005).unwrap();
        (rod, cam, eelink)
    }

    #[test]
    fn static_centered_grasp_reads_no_slip() {
        let (rod, cam, _) = side_setup(0.0, 0.0);
        let obs = observe_side(&rod, &cam, Some(0.0), &SlipThresholds::default()).unwrap();
        assert!(obs.tilt.abs() < 1e-9);
        assert!(obs.contact_offset.abs() < 1e-9);
        assert!(!obs.slipped);
    }

    #[test]
    fn tilt_and_offset_recovered() {
        let (rod, cam, _) = side_setup(0.3, 0.05);
        let obs = observe_side(&rod, &cam, Some(0.05), &SlipThresholds::default()).unwrap();
        assert!(
            (obs.tilt - 0.3).abs() < 0.5 * cam.scale / rod.length * 4.0,
            "tilt {}",
            obs.tilt
        );
        assert!(
            (obs.contact_offset - 0.05).abs() < cam.scale,
            "offset {}",
            obs.contact_offset
        );
        assert!(obs.slipped);
    }

    #[test]
    fn mirrored_grasp_flips_contact_sign() {
        let (rod_a, cam, _) = side_setup(0.0, 0.06);
        let (rod_b, _, _) = side_setup(0.0, -0.06);
        let t = SlipThresholds::default();
        let a = observe_side(&rod_a, &cam, None, &t).unwrap();
        let b = observe_side(&rod_b, &cam, None, &t).unwrap();
        assert!(a.contact_offset > 0.0 && b.contact_offset < 0.0);
        assert!((a.contact_offset + b.contact_offset).abs() < cam.scale);
    }

    #[test]
    fn heavy_occlusion_is_unavailable() {
        let (rod, cam, _) = side_setup(0.0, 0.0);
        let t = SlipThresholds {
            finger_halfwidth: 0.9 * rod.length / 2.0 + rod.radius,
            ..Default::default()
        };
        assert!(matches!(
            observe_side(&rod, &cam, None, &t),
            Err(Error::ObservationUnavailable { .. })
        ));
    }

    #[test]
    fn identity_observation_gives_identity_transform() {
        let obs = SlipObservation {
            tilt: 0.0,
            contact_offset: 0.0,
            slipped: false,
        };
        let ee = GraspPose::new(0.0, 0.0, 0.0, FRAC_PI_2, 1.0).unwrap().eelink_frame();
        let m = eelink_to_object(&obs, &ee, &Vector3::x()).unwrap();
        assert_eq!(m.m, RigidTransform::identity());
    }

    #[test]
    fn pure_translation_transform() {
        let obs = SlipObservation {
            tilt: 0.0,
            contact_offset: 0.1,
            slipped: false,
        };
        let ee = GraspPose::new(0.0, 0.0, 0.0, FRAC_PI_2, 1.0).unwrap().eelink_frame();
        let m = eelink_to_object(&obs, &ee, &Vector3::x()).unwrap();
        assert_eq!(*m.m.rotation(), Matrix3::identity());
        assert_eq!(m.p(), Vector3::new(0.1, 0.0, 0.0));
    }

    #[test]
    fn vertical_rod_is_singular() {
        let obs = SlipObservation {
            tilt: FRAC_PI_2,
            contact_offset: 0.0,
            slipped: true,
        };
        let ee = RigidTransform::identity();
        assert!(matches!(
            eelink_to_object(&obs, &ee, &Vector3::x()),
            Err(Error::NearSingularPose { .. })
        ));
    }

    #[test]
    fn pgm_header_and_size() {
        let cam = CameraModel::top_down(Vector2::zeros(), 1.0, 4, 3, 1.0).unwrap();
        let mut mask = OccupancyMask::empty(&cam);
        mask.set(1, 2, true);
        let mut buf = Vec::new();
        mask.write_pgm(&mut buf).unwrap();
        assert!(buf.starts_with(b"P5\n4 3\n255\n"));
        let body = &buf[b"P5\n4 3\n255\n".len()..];
        assert_eq!(body.len(), 12);
        assert_eq!(body[2 * 4 + 1], 255);
        assert_eq!(body.iter().filter(|b| **b == 255).count(), 1);
    }

    #[test]
    fn table_pose_matches_rotation_convention() {
        let p = table_pose(Vector2::new(1.0, 2.0), 0.0, 0.5);
        assert_eq!(p.transform_vector(&Vector3::z()), Vector3::new(0.0, 0.0, -1.0));
    }
}
