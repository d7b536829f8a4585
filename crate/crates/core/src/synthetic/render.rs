//! Depth renderer with two projections.
//!
//! Nadir (the default) sees every person or prop from straight above: a pixel
//! maps to the floor point given by the pinhole model at the depth of the
//! object's top, and takes the vertical depth of the upper surface there. The
//! silhouette of a head is then its horizontal outline at any image position.
//!
//! Perspective casts the true pinhole ray through each pixel center and
//! stores the vertical depth of the first surface hit, so off-axis objects
//! also show their sides.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{PersonGeometry, Projection, Prop, ScenarioScript, ScriptedPerson};
use crate::depth::{BackgroundModel, DepthFrame};
use crate::error::{Error, Result};
use crate::room::RoomModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Part {
    Head,
    Shoulders,
    Torso,
    Prop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Visibility {
    Out,
    /// Some pixels, touching the image border.
    Partial,
    Full,
}

impl Visibility {
    pub fn as_str(self) -> &'static str {
        match self {
            Visibility::Out => "out",
            Visibility::Partial => "partial",
            Visibility::Full => "full",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RenderOutput {
    pub frame: DepthFrame,
    /// Per pixel: owning object (person index, or prop index for
    /// [`Part::Prop`]) and part, before noise.
    pub labels: Vec<Option<(usize, Part)>>,
    /// Per scripted person.
    pub visibility: Vec<Visibility>,
    /// Per scripted person: whether any head pixel was rendered.
    pub head_visible: Vec<bool>,
}

/// Ray through pixel `(u, v)`: origin `(ox, oy)` at the camera and horizontal
/// displacement `(du, dv)` per meter of depth. Height above floor is `h - z`.
#[derive(Clone, Copy)]
struct Ray {
    ox: f64,
    oy: f64,
    du: f64,
    dv: f64,
    h: f64,
}

enum Shape {
    Ellipsoid {
        center: (f64, f64, f64),
        semi: (f64, f64, f64),
        yaw: f64,
    },
    Cylinder {
        center: (f64, f64),
        semi: (f64, f64),
        yaw: f64,
        bottom: f64,
        top: f64,
    },
    Box {
        min: (f64, f64),
        max: (f64, f64),
        top: f64,
    },
}

impl Shape {
    /// Horizontal bounding radius and top/bottom heights.
    fn extent(&self) -> ((f64, f64), f64, f64, f64) {
        match *self {
            Shape::Ellipsoid { center, semi, .. } => {
                ((center.0, center.1), semi.0.max(semi.1), center.2 + semi.2, center.2 - semi.2)
            }
            Shape::Cylinder { center, semi, top, bottom, .. } => (center, semi.0.max(semi.1), top, bottom),
            Shape::Box { min, max, top } => {
                let c = ((min.0 + max.0) / 2.0, (min.1 + max.1) / 2.0);
                let r = ((max.0 - min.0).powi(2) + (max.1 - min.1).powi(2)).sqrt() / 2.0;
                (c, r, top, 0.0)
            }
        }
    }

    /// Height of the upper surface above floor point `(x, y)`, if covered.
    fn top_height(&self, x: f64, y: f64) -> Option<f64> {
        match *self {
            Shape::Ellipsoid { center, semi, yaw } => {
                let (s, c) = yaw.sin_cos();
                let (px, py) = (x - center.0, y - center.1);
                let (lx, ly) = (px * c + py * s, -px * s + py * c);
                let q = 1.0 - lx * lx / (semi.0 * semi.0) - ly * ly / (semi.1 * semi.1);
                (q >= 0.0).then(|| center.2 + semi.2 * q.sqrt())
            }
            Shape::Cylinder { center, semi, yaw, top, .. } => {
                let (s, c) = yaw.sin_cos();
                let (px, py) = (x - center.0, y - center.1);
                let (lx, ly) = (px * c + py * s, -px * s + py * c);
                (lx * lx / (semi.0 * semi.0) + ly * ly / (semi.1 * semi.1) <= 1.0).then_some(top)
            }
            Shape::Box { min, max, top } => (x >= min.0 && x <= max.0 && y >= min.1 && y <= max.1).then_some(top),
        }
    }

    /// Depth of the first hit along the ray, if any.
    fn hit(&self, ray: &Ray) -> Option<f64> {
        match *self {
            Shape::Ellipsoid { center, semi, yaw } => {
                let (s, c) = yaw.sin_cos();
                let (px, py) = (ray.ox - center.0, ray.oy - center.1);
                let (ox, oy) = (px * c + py * s, -px * s + py * c);
                let (sx, sy) = (ray.du * c + ray.dv * s, -ray.du * s + ray.dv * c);
                let oz = ray.h - center.2;
                let (a2, b2, c2) = (semi.0 * semi.0, semi.1 * semi.1, semi.2 * semi.2);
                let qa = sx * sx / a2 + sy * sy / b2 + 1.0 / c2;
                let qb = 2.0 * (ox * sx / a2 + oy * sy / b2 - oz / c2);
                let qc = ox * ox / a2 + oy * oy / b2 + oz * oz / c2 - 1.0;
                let disc = qb * qb - 4.0 * qa * qc;
                if disc < 0.0 {
                    return None;
                }
                let z = (-qb - disc.sqrt()) / (2.0 * qa);
                (z > 0.0).then_some(z)
            }
            Shape::Cylinder { center, semi, yaw, bottom, top } => {
                let (s, c) = yaw.sin_cos();
                let (px, py) = (ray.ox - center.0, ray.oy - center.1);
                let (ox, oy) = (px * c + py * s, -px * s + py * c);
                let (sx, sy) = (ray.du * c + ray.dv * s, -ray.du * s + ray.dv * c);
                let (a2, b2) = (semi.0 * semi.0, semi.1 * semi.1);
                let inside = |z: f64| {
                    let (x, y) = (ox + z * sx, oy + z * sy);
                    x * x / a2 + y * y / b2 <= 1.0
                };
                let z_top = ray.h - top;
                let mut best = (z_top > 0.0 && inside(z_top)).then_some(z_top);
                let qa = sx * sx / a2 + sy * sy / b2;
                if qa > 0.0 {
                    let qb = 2.0 * (ox * sx / a2 + oy * sy / b2);
                    let qc = ox * ox / a2 + oy * oy / b2 - 1.0;
                    let disc = qb * qb - 4.0 * qa * qc;
                    if disc >= 0.0 {
                        let z = (-qb - disc.sqrt()) / (2.0 * qa);
                        let height = ray.h - z;
                        if z > 0.0 && height >= bottom && height <= top {
                            best = Some(best.map_or(z, |b: f64| b.min(z)));
                        }
                    }
                }
                best
            }
            Shape::Box { min, max, top } => {
                let mut lo = (ray.h - top).max(0.0);
                let mut hi = ray.h;
                for (o, d, a, b) in [(ray.ox, ray.du, min.0, max.0), (ray.oy, ray.dv, min.1, max.1)] {
                    if d == 0.0 {
                        if o < a || o > b {
                            return None;
                        }
                    } else {
                        let (t0, t1) = ((a - o) / d, (b - o) / d);
                        lo = lo.max(t0.min(t1));
                        hi = hi.min(t0.max(t1));
                    }
                }
                (lo <= hi && lo > 0.0).then_some(lo)
            }
        }
    }
}

/// The three body parts of a person standing at `pos` with head yaw `phi`.
fn person_shapes(g: &PersonGeometry, pos: (f64, f64), phi: f64) -> [(Part, Shape); 3] {
    let head_z = g.height_m - g.head_half_height_m;
    let shoulder_half_height = 0.10;
    let shoulder_z = g.height_m - g.shoulder_depth_drop_m - shoulder_half_height;
    [
        (
            Part::Head,
            Shape::Ellipsoid {
                center: (pos.0, pos.1, head_z),
                semi: (g.head_radius_major_m, g.head_radius_minor_m, g.head_half_height_m),
                yaw: phi,
            },
        ),
        (
            Part::Shoulders,
            Shape::Ellipsoid {
                center: (pos.0, pos.1, shoulder_z),
                semi: (g.shoulder_thickness_m / 2.0, g.shoulder_width_m / 2.0, shoulder_half_height),
                yaw: phi,
            },
        ),
        (
            Part::Torso,
            Shape::Cylinder {
                center: pos,
                semi: (g.shoulder_thickness_m * 0.4, g.shoulder_width_m * 0.375),
                yaw: phi,
                bottom: 0.0,
                top: shoulder_z,
            },
        ),
    ]
}

fn prop_shape(p: &Prop) -> Shape {
    let (hx, hy) = (p.size_m[0] / 2.0, p.size_m[1] / 2.0);
    Shape::Box {
        min: (p.center_m[0] - hx, p.center_m[1] - hy),
        max: (p.center_m[0] + hx, p.center_m[1] + hy),
        top: p.height_m,
    }
}

fn depth_to_u16(z_m: f64) -> u16 {
    (z_m * 1000.0).round().clamp(1.0, u16::MAX as f64) as u16
}

/// Empty-room depth: the floor at camera height everywhere.
pub fn render_background(room: &RoomModel) -> BackgroundModel {
    let (w, h) = room.image_size;
    BackgroundModel::new(DepthFrame::filled(w, h, depth_to_u16(room.camera_height_m)))
}

struct Object {
    owner: usize,
    part: Part,
    shape: Shape,
    /// Height whose depth sets the nadir scale of the whole owner.
    scale_height: f64,
}

fn scene_objects(script: &ScenarioScript, k: u64) -> Vec<Object> {
    let mut objects = Vec::new();
    for (i, p) in script.persons.iter().enumerate() {
        if let Some(pos) = p.position(k) {
            for (part, shape) in person_shapes(&p.geometry, pos, p.phi(k)) {
                objects.push(Object {
                    owner: i,
                    part,
                    shape,
                    scale_height: p.geometry.height_m,
                });
            }
        }
    }
    for (i, p) in script.props.iter().enumerate() {
        objects.push(Object {
            owner: i,
            part: Part::Prop,
            shape: prop_shape(p),
            scale_height: p.height_m,
        });
    }
    objects
}

/// Image rectangle that can contain the object, clipped to the image.
fn pixel_bounds(room: &RoomModel, shape: &Shape, scale_height: f64) -> Option<(usize, usize, usize, usize)> {
    let (c, r, top, bottom) = shape.extent();
    let top = top.max(scale_height);
    let (w, h) = room.image_size;
    let (cx, cy) = room.camera_position;
    let (u0, v0) = room.principal_point;
    let f = room.focal_px;
    let z_near = (room.camera_height_m - top).max(1e-3);
    let z_far = (room.camera_height_m - bottom).max(z_near);
    let mut umin = f64::INFINITY;
    let mut umax = f64::NEG_INFINITY;
    let mut vmin = f64::INFINITY;
    let mut vmax = f64::NEG_INFINITY;
    for z in [z_near, z_far] {
        for (dx, dy) in [(-r, -r), (r, r)] {
            let u = u0 + (c.0 + dx - cx) * f / z;
            let v = v0 + (c.1 + dy - cy) * f / z;
            umin = umin.min(u);
            umax = umax.max(u);
            vmin = vmin.min(v);
            vmax = vmax.max(v);
        }
    }
    // the camera column inside the footprint sees everything in between
    let (u_cam, v_cam) = (u0, v0);
    if (c.0 - cx).abs() <= r {
        umin = umin.min(u_cam);
        umax = umax.max(u_cam);
    }
    if (c.1 - cy).abs() <= r {
        vmin = vmin.min(v_cam);
        vmax = vmax.max(v_cam);
    }
    let lo_u = umin.floor().max(0.0);
    let hi_u = umax.ceil().min(w as f64 - 1.0);
    let lo_v = vmin.floor().max(0.0);
    let hi_v = vmax.ceil().min(h as f64 - 1.0);
    (lo_u <= hi_u && lo_v <= hi_v).then_some((lo_u as usize, hi_u as usize, lo_v as usize, hi_v as usize))
}

/// Renders frame `k` with per-pixel labels and per-person visibility.
pub fn render_labeled(script: &ScenarioScript, k: u64, room: &RoomModel) -> Result<RenderOutput> {
    if k >= script.duration_frames {
        return Err(Error::Precondition(format!(
            "frame {k} beyond scenario duration {}",
            script.duration_frames
        )));
    }
    let (w, h) = room.image_size;
    let floor = room.camera_height_m;
    let mut zbuf = vec![floor; w * h];
    let mut labels: Vec<Option<(usize, Part)>> = vec![None; w * h];
    let (u0, v0) = room.principal_point;
    for obj in scene_objects(script, k) {
        let Some((ua, ub, va, vb)) = pixel_bounds(room, &obj.shape, obj.scale_height) else {
            continue;
        };
        // nadir: a person is seen from straight above at the scale of the head top
        let z_ref = floor - obj.scale_height;
        for v in va..=vb {
            for u in ua..=ub {
                let (du, dv) = ((u as f64 - u0) / room.focal_px, (v as f64 - v0) / room.focal_px);
                let hit = match script.projection {
                    Projection::Nadir => {
                        let (x, y) = (room.camera_position.0 + du * z_ref, room.camera_position.1 + dv * z_ref);
                        obj.shape.top_height(x, y).map(|height| floor - height)
                    }
                    Projection::Perspective => obj.shape.hit(&Ray {
                        ox: room.camera_position.0,
                        oy: room.camera_position.1,
                        du,
                        dv,
                        h: floor,
                    }),
                };
                if let Some(z) = hit {
                    let i = v * w + u;
                    if z < zbuf[i] {
                        zbuf[i] = z;
                        labels[i] = Some((obj.owner, obj.part));
                    }
                }
            }
        }
    }

    let n = script.persons.len();
    let mut seen = vec![false; n];
    let mut border = vec![false; n];
    let mut head_visible = vec![false; n];
    for v in 0..h {
        for u in 0..w {
            if let Some((owner, part)) = labels[v * w + u] {
                if part == Part::Prop {
                    continue;
                }
                seen[owner] = true;
                if part == Part::Head {
                    head_visible[owner] = true;
                }
                if u == 0 || v == 0 || u == w - 1 || v == h - 1 {
                    border[owner] = true;
                }
            }
        }
    }
    let visibility = (0..n)
        .map(|i| match (seen[i], border[i]) {
            (false, _) => Visibility::Out,
            (true, true) => Visibility::Partial,
            (true, false) => Visibility::Full,
        })
        .collect();

    let mut depth: Vec<u16> = zbuf.iter().map(|&z| depth_to_u16(z)).collect();
    if script.noise_sigma_mm > 0.0 {
        let normal = Normal::new(0.0, script.noise_sigma_mm)
            .map_err(|e| Error::invariant("noise_sigma_mm", e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(script.seed);
        rng.set_stream(k);
        for (d, z) in depth.iter_mut().zip(&zbuf) {
            *d = depth_to_u16(z + normal.sample(&mut rng) / 1000.0);
        }
    }
    let frame = DepthFrame::new(w, h, depth)?.with_index(k, 0.0);
    Ok(RenderOutput {
        frame,
        labels,
        visibility,
        head_visible,
    })
}

pub fn render_frame(script: &ScenarioScript, k: u64, room: &RoomModel) -> Result<DepthFrame> {
    Ok(render_labeled(script, k, room)?.frame)
}

/// Person standing still at `pos` facing `phi`, rendered without noise.
pub fn render_person(geometry: &PersonGeometry, pos: (f64, f64), phi: f64, room: &RoomModel) -> Result<RenderOutput> {
    render_person_with(geometry, pos, phi, room, Projection::Nadir)
}

pub fn render_person_with(
    geometry: &PersonGeometry,
    pos: (f64, f64),
    phi: f64,
    room: &RoomModel,
    projection: Projection,
) -> Result<RenderOutput> {
    let mut script = ScenarioScript::empty("single", 1);
    script.projection = projection;
    script.persons.push(ScriptedPerson {
        geometry: geometry.clone(),
        waypoints: vec![super::Waypoint { frame: 0, position: pos }],
        head: vec![super::HeadKey { frame: 0, phi }],
    });
    render_labeled(&script, 0, room)
}
