use serde::{Deserialize, Serialize};

use super::story::Story;
use crate::error::{Error, Result};
use crate::geometry::{Cylinder, RayHit, Scene};
use crate::linalg::Vec3;
use crate::real::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint<T> {
    pub x: Vec3<T>,
    /// Unit direction.
    pub xi: Vec3<T>,
}

impl<T: Real> PhasePoint<T> {
    pub fn new(x: Vec3<T>, xi: Vec3<T>) -> Self {
        Self { x, xi: xi.normalize() }
    }

    pub fn reversed(&self) -> Self {
        Self { x: self.x, xi: -self.xi }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event<T> {
    pub time: T,
    pub body: u8,
    pub point: Vec3<T>,
    pub cosine: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T> {
    pub initial: PhasePoint<T>,
    pub events: Vec<Event<T>>,
    pub final_state: PhasePoint<T>,
    pub story: Story,
    /// No obstacle lies ahead of the final ray.
    pub escaped: bool,
    /// Time at which the final ray leaves the escape ball, when it escapes.
    pub escape_time: Option<T>,
    /// Truncated at a grazing contact.
    pub tangential: bool,
    pub duration: T,
}

/// Specular reflection `xi - 2 (xi·n) n` of an incoming unit direction.
pub fn reflect_direction<T: Real>(xi: Vec3<T>, n: Vec3<T>) -> Result<Vec3<T>> {
    let c = xi.dot(n);
    if c >= T::zero() {
        return Err(Error::NotIncoming(c.to_f64_lossy()));
    }
    Ok(xi - n * (c + c))
}

/// Parameter at which `x + s d` leaves the ball `|p - m| <= r`.
fn ball_exit<T: Real>(x: Vec3<T>, d: Vec3<T>, m: Vec3<T>, r: T) -> T {
    let o = x - m;
    let b = o.dot(d);
    let c = o.norm_sq() - r * r;
    let disc = (b * b - c).max(T::zero());
    (-b + disc.sqrt()).max(T::zero())
}

/// Broken bicharacteristic flow at unit speed for time `t`.
pub fn flow<T: Real>(scene: &Scene<T>, p: PhasePoint<T>, t: T) -> Result<Trajectory<T>> {
    if !scene.outside_bodies(p.x) {
        return Err(Error::InvalidInput("flow must start outside the obstacles".into()));
    }
    if t < T::zero() {
        return Err(Error::InvalidInput("flow time must be nonnegative".into()));
    }
    let mut x = p.x;
    let mut d = p.xi.normalize();
    let mut elapsed = T::zero();
    let mut events = Vec::new();
    let mut story = Story::empty();
    let mut tangential = false;
    loop {
        let remaining = t - elapsed;
        match scene.first_hit(x, d) {
            Some((_, RayHit::Tangential(h))) if h.length <= remaining => {
                x = h.point();
                elapsed = elapsed + h.length;
                tangential = true;
                break;
            }
            Some((j, RayHit::Hit(h))) if h.length <= remaining => {
                x = h.point();
                elapsed = elapsed + h.length;
                d = reflect_direction(d, h.normal())?;
                events.push(Event {
                    time: elapsed,
                    body: j,
                    point: x,
                    cosine: h.cosine,
                });
                story.push(j)?;
            }
            _ => {
                x = x + d * remaining;
                elapsed = t;
                break;
            }
        }
    }
    let escaped = !tangential && scene.first_hit(x, d).is_none();
    let escape_time = escaped.then(|| {
        let last = events.last().map_or(p.x, |e| e.point);
        let last_t = events.last().map_or(T::zero(), |e| e.time);
        last_t + ball_exit(last, d, scene.midpoint(), scene.escape_radius())
    });
    Ok(Trajectory {
        initial: p,
        events,
        final_state: PhasePoint { x, xi: d },
        story,
        escaped,
        escape_time,
        tangential,
        duration: elapsed,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BackwardState<T> {
    pub point: Vec3<T>,
    /// Forward-time direction at `point`.
    pub dir: Vec3<T>,
    pub reflections: usize,
    /// Reflection points in the order they were met going backward.
    pub last_hit: Option<Vec3<T>>,
}

/// `X_{-t}` following the story backward: only obstacle `j_k` is considered
/// while consuming the k-th reflection from the end; after `|J|`
/// reflections, obstacles are ignored.
pub fn backward_flow_constrained<T: Real>(
    scene: &Scene<T>,
    x: Vec3<T>,
    grad: Vec3<T>,
    story: &Story,
    t: T,
) -> Result<BackwardState<T>> {
    let mut pos = x;
    let mut back = -grad.normalize();
    let mut remaining = t;
    let mut reflections = 0;
    let mut last_hit = None;
    for &j in story.indices().iter().rev() {
        let hit = scene.body(j).ray_intersect(pos, back, scene.tangency());
        match hit {
            Some(RayHit::Hit(h)) if h.length <= remaining => {
                pos = h.point();
                remaining = remaining - h.length;
                back = reflect_direction(back, h.normal())?;
                reflections += 1;
                last_hit = Some(pos);
            }
            Some(RayHit::Tangential(h)) if h.length <= remaining => {
                return Err(Error::Tangential {
                    point: h.point().to_f64(),
                    cosine: h.cosine.to_f64_lossy(),
                });
            }
            _ => break,
        }
    }
    Ok(BackwardState {
        point: pos + back * remaining,
        dir: -back,
        reflections,
        last_hit,
    })
}

/// First time the forward ray leaves the cylinder, capped at `t_max`.
/// Returns `t_max` (not an exit) when the ray stays inside throughout.
/// The cylinder gauge is convex, so along each straight piece the exit is
/// bracketed by the piece's endpoints.
pub fn exit_time<T: Real>(scene: &Scene<T>, p: PhasePoint<T>, region: &Cylinder<T>, t_max: T) -> T {
    if region.nu(p.x) > T::one() {
        return T::zero();
    }
    let mut x = p.x;
    let mut d = p.xi;
    let mut elapsed = T::zero();
    loop {
        let remaining = t_max - elapsed;
        let (seg, next) = match scene.first_hit(x, d) {
            Some((_, RayHit::Hit(h))) if h.length <= remaining => (h.length, Some(h)),
            Some((_, RayHit::Tangential(h))) if h.length <= remaining => {
                // Grazing: treat as leaving, the ray is not trapped.
                return elapsed + h.length;
            }
            _ => (remaining, None),
        };
        let end = x + d * seg;
        if region.nu(end) > T::one() {
            let (mut lo, mut hi) = (T::zero(), seg);
            for _ in 0..60 {
                let mid = (lo + hi) * T::lit(0.5);
                if region.nu(x + d * mid) > T::one() {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return elapsed + hi;
        }
        match next {
            Some(h) => {
                x = end;
                elapsed = elapsed + seg;
                d = match reflect_direction(d, h.normal()) {
                    Ok(v) => v,
                    Err(_) => return elapsed,
                };
            }
            None => return t_max,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3<f64> {
        Vec3::new(x, y, z)
    }

    #[test]
    fn reflection_examples() {
        let r = reflect_direction(v(-1.0, 0.0, 0.0), v(1.0, 0.0, 0.0)).unwrap();
        assert!((r - v(1.0, 0.0, 0.0)).norm() < 1e-15);
        let s = 0.5f64.sqrt();
        let r = reflect_direction(v(-s, s, 0.0), v(1.0, 0.0, 0.0)).unwrap();
        assert!((r - v(s, s, 0.0)).norm() < 1e-15);
        assert!(reflect_direction(v(1.0, 0.0, 0.0), v(1.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn axial_orbit_is_periodic() {
        let s = Scene::<f64>::standard();
        let tr = flow(&s, PhasePoint::new(v(2.0, 0.0, 0.0), v(1.0, 0.0, 0.0)), 6.0).unwrap();
        assert_eq!(tr.story, Story::new(vec![2, 1, 2]).unwrap());
        assert!((tr.events[0].point - v(3.0, 0.0, 0.0)).norm() < 1e-14);
        assert!((tr.events[1].point - v(1.0, 0.0, 0.0)).norm() < 1e-14);
        assert!((tr.events[0].time - 1.0).abs() < 1e-14);
        assert!((tr.events[2].time - 5.0).abs() < 1e-14);
        // After 6 = 1.5 periods the ray is back at the midpoint, moving -e.
        assert!((tr.final_state.x - v(2.0, 0.0, 0.0)).norm() < 1e-13);
        assert!((tr.final_state.xi - v(-1.0, 0.0, 0.0)).norm() < 1e-14);
        let tr = flow(&s, PhasePoint::new(v(2.0, 0.0, 0.0), v(1.0, 0.0, 0.0)), 4.0).unwrap();
        assert!((tr.final_state.x - v(2.0, 0.0, 0.0)).norm() < 1e-13);
        assert!((tr.final_state.xi - v(1.0, 0.0, 0.0)).norm() < 1e-14);
        assert!(!tr.escaped);
    }

    #[test]
    fn missing_ray_escapes() {
        let s = Scene::<f64>::standard();
        let tr = flow(&s, PhasePoint::new(v(2.0, 2.0, 0.0), v(0.0, 0.0, 1.0)), 5.0).unwrap();
        assert!(tr.events.is_empty());
        assert!((tr.final_state.x - v(2.0, 2.0, 5.0)).norm() < 1e-15);
        assert!(tr.escaped);
    }

    #[test]
    fn backward_flow_consumes_story() {
        let s = Scene::<f64>::standard();
        let st = Story::new(vec![1]).unwrap();
        let b = backward_flow_constrained(&s, v(2.0, 0.0, 0.0), v(1.0, 0.0, 0.0), &st, 3.0).unwrap();
        assert_eq!(b.reflections, 1);
        assert!((b.point - v(3.0, 0.0, 0.0)).norm() < 1e-14);
        // Forward direction at the earlier time was -e (toward body 1).
        assert!((b.dir - v(-1.0, 0.0, 0.0)).norm() < 1e-14);

        let free = backward_flow_constrained(&s, v(2.0, 0.0, 0.0), v(1.0, 0.0, 0.0), &Story::empty(), 3.0)
            .unwrap();
        assert!((free.point - v(-1.0, 0.0, 0.0)).norm() < 1e-14);

        // Story longer than the available hits within the time: free flight afterwards.
        let st = Story::alternating(2, 5);
        let b = backward_flow_constrained(&s, v(2.0, 0.0, 0.0), v(-1.0, 0.0, 0.0), &st, 2.5).unwrap();
        assert_eq!(b.reflections, 1);
        assert!((b.point - v(1.5, 0.0, 0.0)).norm() < 1e-14);
        // The first obstacle met is ignored when it is not the last of the story.
        let b = backward_flow_constrained(&s, v(2.0, 0.0, 0.0), v(1.0, 0.0, 0.0), &st, 2.5).unwrap();
        assert_eq!(b.reflections, 0);
        assert!((b.point - v(-0.5, 0.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn exit_time_of_the_trapped_ray_is_capped() {
        let s = Scene::<f64>::standard();
        let d = s.default_region();
        let t = exit_time(&s, PhasePoint::new(v(2.0, 0.0, 0.0), v(1.0, 0.0, 0.0)), &d, 50.0);
        assert_eq!(t, 50.0);
        let t = exit_time(&s, PhasePoint::new(v(2.0, 0.0, 0.0), v(0.0, 1.0, 0.0)), &d, 50.0);
        assert!((t - 0.5).abs() < 1e-12);
    }
}
