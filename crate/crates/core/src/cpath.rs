//! Piecewise paths in the complex time plane.
//!
//! A [`CPath`] is a chain of straight segments and circular arcs, parametrized
//! globally by `s ∈ [0, 1]` proportional to arc length. Loops used for
//! monodromy are built with [`loop_around`]: an approach polyline from the base
//! point, a number of full turns around a circle, and the approach reversed.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Maximum gap tolerated between consecutive pieces, and for closure.
pub const JOIN_TOL: f64 = 1e-12;
/// Points closer than this to a path have no winding number.
pub const ON_PATH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("base point lies inside the loop disk")]
    BaseInsideDisk,
    #[error("waypoint {0} lies inside the loop disk")]
    WaypointInsideDisk(usize),
    #[error("number of turns must be non-zero")]
    ZeroTurns,
    #[error("paths do not join (gap {0:e})")]
    Discontinuous(f64),
    #[error("path parameter {0} outside [0, 1]")]
    ParameterOutOfRange(f64),
    #[error("point lies on the path (distance {0:e})")]
    PointOnPath(f64),
    #[error("path is not closed (gap {0:e})")]
    NotClosed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Piece {
    Segment {
        start: Complex64,
        end: Complex64,
    },
    /// Points `center + radius·e^{iθ}` for θ from `angle_start` through
    /// `angle_start + angle_sweep` (positive sweep is counterclockwise).
    Arc {
        center: Complex64,
        radius: f64,
        angle_start: f64,
        angle_sweep: f64,
    },
}

impl Piece {
    pub fn length(&self) -> f64 {
        match *self {
            Piece::Segment { start, end } => (end - start).norm(),
            Piece::Arc {
                radius,
                angle_sweep,
                ..
            } => radius * angle_sweep.abs(),
        }
    }

    pub fn start(&self) -> Complex64 {
        self.point_at_length(0.0)
    }

    pub fn end(&self) -> Complex64 {
        self.point_at_length(self.length())
    }

    /// Point at arc length `u` from the start of this piece.
    pub fn point_at_length(&self, u: f64) -> Complex64 {
        match *self {
            Piece::Segment { start, end } => {
                let len = (end - start).norm();
                if len == 0.0 {
                    start
                } else {
                    start + (end - start) * (u / len)
                }
            }
            Piece::Arc {
                center,
                radius,
                angle_start,
                angle_sweep,
            } => {
                let theta = angle_start + angle_sweep.signum() * u / radius;
                center + Complex64::from_polar(radius, theta)
            }
        }
    }

    /// dt/du at arc length `u`; a unit complex number.
    pub fn tangent_at_length(&self, u: f64) -> Complex64 {
        match *self {
            Piece::Segment { start, end } => {
                let d = end - start;
                let len = d.norm();
                if len == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    d / len
                }
            }
            Piece::Arc {
                radius,
                angle_start,
                angle_sweep,
                ..
            } => {
                let sign = angle_sweep.signum();
                let theta = angle_start + sign * u / radius;
                Complex64::new(0.0, sign) * Complex64::from_polar(1.0, theta)
            }
        }
    }

    pub fn reversed(&self) -> Piece {
        match *self {
            Piece::Segment { start, end } => Piece::Segment {
                start: end,
                end: start,
            },
            Piece::Arc {
                center,
                radius,
                angle_start,
                angle_sweep,
            } => Piece::Arc {
                center,
                radius,
                angle_start: angle_start + angle_sweep,
                angle_sweep: -angle_sweep,
            },
        }
    }

    /// Change of `arg(t − z)` along the piece. Requires `z` off the piece.
    fn angle_change(&self, z: Complex64) -> f64 {
        match *self {
            Piece::Segment { start, end } => ((end - z) / (start - z)).arg(),
            Piece::Arc {
                center,
                radius,
                angle_start,
                angle_sweep,
            } => {
                // Sub-arcs of at most a quarter turn. Seen from a point outside
                // the disk, the circle subtends less than π, so the principal
                // value is exact; from inside, arg(t − z) is monotone in θ
                // and each quarter-turn changes it by less than 2π.
                let inside = (z - center).norm() < radius;
                let pieces = (angle_sweep.abs() / (PI / 2.0)).ceil().max(1.0) as usize;
                let step = angle_sweep / pieces as f64;
                let mut total = 0.0;
                for k in 0..pieces {
                    let a = center + Complex64::from_polar(radius, angle_start + step * k as f64);
                    let b = center
                        + Complex64::from_polar(radius, angle_start + step * (k + 1) as f64);
                    let mut d = ((b - z) / (a - z)).arg();
                    if inside {
                        if step > 0.0 && d < 0.0 {
                            d += TAU;
                        } else if step < 0.0 && d > 0.0 {
                            d -= TAU;
                        }
                    }
                    total += d;
                }
                total
            }
        }
    }

    fn distance_to(&self, z: Complex64) -> f64 {
        match *self {
            Piece::Segment { start, end } => {
                let d = end - start;
                let len2 = d.norm_sqr();
                if len2 == 0.0 {
                    return (z - start).norm();
                }
                let t = (((z - start) * d.conj()).re / len2).clamp(0.0, 1.0);
                (z - (start + d * t)).norm()
            }
            Piece::Arc {
                center,
                radius,
                angle_start,
                angle_sweep,
            } => {
                let w = z - center;
                if angle_sweep.abs() >= TAU {
                    return (w.norm() - radius).abs();
                }
                // Is arg(w) within the swept range?
                let (lo, sweep) = if angle_sweep >= 0.0 {
                    (angle_start, angle_sweep)
                } else {
                    (angle_start + angle_sweep, -angle_sweep)
                };
                let rel = (w.arg() - lo).rem_euclid(TAU);
                if w.norm() > 0.0 && rel <= sweep {
                    (w.norm() - radius).abs()
                } else {
                    (z - self.start()).norm().min((z - self.end()).norm())
                }
            }
        }
    }
}

/// A continuous chain of pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CPath {
    start: Complex64,
    pieces: Vec<Piece>,
}

impl CPath {
    /// The zero-length path at `point`.
    pub fn empty(point: Complex64) -> CPath {
        CPath {
            start: point,
            pieces: Vec::new(),
        }
    }

    pub fn segment(start: Complex64, end: Complex64) -> CPath {
        let mut p = CPath::empty(start);
        p.push(Piece::Segment { start, end });
        p
    }

    pub fn arc(center: Complex64, radius: f64, angle_start: f64, angle_sweep: f64) -> CPath {
        let piece = Piece::Arc {
            center,
            radius,
            angle_start,
            angle_sweep,
        };
        let mut p = CPath::empty(piece.start());
        p.push(piece);
        p
    }

    /// Full counterclockwise circle starting at angle 0.
    pub fn circle(center: Complex64, radius: f64) -> CPath {
        CPath::arc(center, radius, 0.0, TAU)
    }

    /// Polyline through `points`.
    pub fn polyline(points: &[Complex64]) -> CPath {
        let mut p = CPath::empty(points.first().copied().unwrap_or_default());
        for w in points.windows(2) {
            p.push(Piece::Segment {
                start: w[0],
                end: w[1],
            });
        }
        p
    }

    fn push(&mut self, piece: Piece) {
        if piece.length() > 0.0 {
            self.pieces.push(piece);
        }
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn start(&self) -> Complex64 {
        self.start
    }

    pub fn end(&self) -> Complex64 {
        self.pieces.last().map_or(self.start, Piece::end)
    }

    pub fn length(&self) -> f64 {
        self.pieces.iter().map(Piece::length).sum()
    }

    pub fn is_closed(&self) -> bool {
        (self.end() - self.start).norm() <= JOIN_TOL
    }

    /// Largest gap between consecutive pieces.
    pub fn max_gap(&self) -> f64 {
        let mut prev = self.start;
        let mut gap: f64 = 0.0;
        for p in &self.pieces {
            gap = gap.max((p.start() - prev).norm());
            prev = p.end();
        }
        gap
    }

    /// Point at global parameter `s ∈ [0, 1]`, proportional to arc length.
    pub fn point_at(&self, s: f64) -> Result<Complex64, PathError> {
        if !(0.0..=1.0).contains(&s) {
            return Err(PathError::ParameterOutOfRange(s));
        }
        if s == 1.0 {
            return Ok(self.end());
        }
        let mut remaining = s * self.length();
        for p in &self.pieces {
            let len = p.length();
            if remaining <= len {
                return Ok(p.point_at_length(remaining));
            }
            remaining -= len;
        }
        Ok(self.end())
    }

    /// `self` followed by `other`.
    pub fn compose(&self, other: &CPath) -> Result<CPath, PathError> {
        let gap = (self.end() - other.start).norm();
        if gap > JOIN_TOL {
            return Err(PathError::Discontinuous(gap));
        }
        let mut out = self.clone();
        out.pieces.extend(other.pieces.iter().copied());
        Ok(out)
    }

    pub fn reversed(&self) -> CPath {
        CPath {
            start: self.end(),
            pieces: self.pieces.iter().rev().map(Piece::reversed).collect(),
        }
    }

    /// Distance from `z` to the nearest point of the path.
    pub fn distance_to(&self, z: Complex64) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.distance_to(z))
            .fold((z - self.start).norm(), f64::min)
    }

    /// Winding number of a closed path around `z`.
    pub fn winding_number(&self, z: Complex64) -> Result<i64, PathError> {
        let gap = (self.end() - self.start).norm();
        if gap > JOIN_TOL {
            return Err(PathError::NotClosed(gap));
        }
        let d = self.distance_to(z);
        if d <= ON_PATH_TOL {
            return Err(PathError::PointOnPath(d));
        }
        let total: f64 = self.pieces.iter().map(|p| p.angle_change(z)).sum();
        Ok((total / TAU).round() as i64)
    }
}

/// The three legs of a loop built by [`loop_around`].
#[derive(Debug, Clone, PartialEq)]
pub struct LoopLegs {
    /// Base point to the entry point on the circle.
    pub approach: CPath,
    /// One full turn from the entry point, oriented by the sign of `turns`.
    pub lap: CPath,
    pub turns: i64,
}

impl LoopLegs {
    pub fn retreat(&self) -> CPath {
        self.approach.reversed()
    }

    /// The whole closed loop: approach, `|turns|` laps, retreat.
    pub fn path(&self) -> CPath {
        let mut p = self.approach.clone();
        for _ in 0..self.turns.unsigned_abs() {
            p = p.compose(&self.lap).expect("lap starts at entry point");
        }
        p.compose(&self.retreat()).expect("retreat starts at entry point")
    }
}

/// Loop legs based at `base` encircling `center` `turns` times.
///
/// The approach runs through `waypoints` and then radially to the circle point
/// nearest the last approach point. Positive `turns` are counterclockwise.
pub fn loop_legs(
    base: Complex64,
    center: Complex64,
    radius: f64,
    turns: i64,
    waypoints: &[Complex64],
) -> Result<LoopLegs, PathError> {
    if radius.is_nan() || radius <= 0.0 {
        return Err(PathError::NonPositiveRadius(radius));
    }
    if turns == 0 {
        return Err(PathError::ZeroTurns);
    }
    if (base - center).norm() <= radius {
        return Err(PathError::BaseInsideDisk);
    }
    if let Some(i) = waypoints.iter().position(|w| (w - center).norm() <= radius) {
        return Err(PathError::WaypointInsideDisk(i));
    }
    let last = waypoints.last().copied().unwrap_or(base);
    let theta = (last - center).arg();
    let entry = center + Complex64::from_polar(radius, theta);
    let mut points = Vec::with_capacity(waypoints.len() + 2);
    points.push(base);
    points.extend_from_slice(waypoints);
    points.push(entry);
    let approach = CPath::polyline(&points);
    let lap = CPath::arc(center, radius, theta, TAU * turns.signum() as f64);
    Ok(LoopLegs {
        approach,
        lap,
        turns,
    })
}

/// Closed loop based at `base` winding `turns` times around `center`.
pub fn loop_around(
    base: Complex64,
    center: Complex64,
    radius: f64,
    turns: i64,
    waypoints: &[Complex64],
) -> Result<CPath, PathError> {
    loop_legs(base, center, radius, turns, waypoints).map(|legs| legs.path())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn loop_around_upper_target() {
        let p = loop_around(c(1.0, 0.0), c(0.2, 2.5), 0.4, 1, &[]).unwrap();
        assert!(p.is_closed());
        assert_eq!(p.winding_number(c(0.2, 2.5)).unwrap(), 1);
        assert_eq!(p.winding_number(c(0.2, -2.5)).unwrap(), 0);
    }

    #[test]
    fn loop_around_twice() {
        let p = loop_around(c(0.0, 0.0), c(4.8, 0.8), 0.3, 2, &[]).unwrap();
        assert_eq!(p.winding_number(c(4.8, 0.8)).unwrap(), 2);
        let cw = loop_around(c(0.0, 0.0), c(4.8, 0.8), 0.3, -3, &[]).unwrap();
        assert_eq!(cw.winding_number(c(4.8, 0.8)).unwrap(), -3);
    }

    #[test]
    fn loop_around_rejects_bad_geometry() {
        assert_eq!(
            loop_around(c(0.0, 0.0), c(1.0, 0.0), 2.0, 1, &[]),
            Err(PathError::BaseInsideDisk)
        );
        assert_eq!(
            loop_around(c(0.0, 0.0), c(1.0, 0.0), 0.0, 1, &[]),
            Err(PathError::NonPositiveRadius(0.0))
        );
        assert_eq!(
            loop_around(c(0.0, 0.0), c(1.0, 0.0), 0.5, 1, &[c(1.1, 0.0)]),
            Err(PathError::WaypointInsideDisk(0))
        );
        assert_eq!(
            loop_around(c(0.0, 0.0), c(1.0, 0.0), 0.5, 0, &[]),
            Err(PathError::ZeroTurns)
        );
    }

    #[test]
    fn waypoints_route_the_approach() {
        let p = loop_around(c(0.0, 0.0), c(3.0, 0.0), 0.5, 1, &[c(0.0, 2.0), c(3.0, 2.0)]).unwrap();
        assert!(p.is_closed());
        assert!((p.point_at(0.0).unwrap() - c(0.0, 0.0)).norm() < 1e-15);
        assert_eq!(p.winding_number(c(3.0, 0.0)).unwrap(), 1);
        // Entry point is straight below the last waypoint.
        let entry = p.pieces()[2].end();
        assert!((entry - c(3.0, 0.5)).norm() < 1e-12);
    }

    #[test]
    fn point_at_segment_and_circle() {
        let s = CPath::segment(c(0.0, 0.0), c(2.0, 0.0));
        assert!((s.point_at(0.5).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        let circ = CPath::circle(c(0.0, 0.0), 1.0);
        assert!((circ.point_at(0.25).unwrap() - c(0.0, 1.0)).norm() < 1e-15);
        assert!((circ.point_at(1.0).unwrap() - circ.point_at(0.0).unwrap()).norm() < 1e-12);
        assert_eq!(s.point_at(1.5), Err(PathError::ParameterOutOfRange(1.5)));
    }

    #[test]
    fn unit_circle_winding() {
        let circ = CPath::circle(c(0.0, 0.0), 1.0);
        assert_eq!(circ.winding_number(c(0.0, 0.0)).unwrap(), 1);
        assert_eq!(circ.winding_number(c(3.0, 0.0)).unwrap(), 0);
        assert_eq!(circ.winding_number(c(0.999, 0.0)).unwrap(), 1);
        assert!(matches!(
            circ.winding_number(c(1.0, 0.0)),
            Err(PathError::PointOnPath(_))
        ));
        let open = CPath::segment(c(0.0, 0.0), c(1.0, 0.0));
        assert!(matches!(
            open.winding_number(c(0.0, 1.0)),
            Err(PathError::NotClosed(_))
        ));
    }

    #[test]
    fn compose_with_reverse_has_no_winding() {
        let g = loop_around(c(0.0, 0.0), c(2.0, 1.0), 0.5, 1, &[]).unwrap();
        let gg = g.compose(&g.reversed()).unwrap();
        assert!(gg.is_closed());
        for z in [c(2.0, 1.0), c(-1.0, 0.5), c(5.0, 5.0)] {
            assert_eq!(gg.winding_number(z).unwrap(), 0);
        }
    }

    #[test]
    fn compose_two_loops_from_common_base() {
        let a = loop_around(c(0.0, 0.0), c(2.0, 1.0), 0.5, 1, &[]).unwrap();
        let b = loop_around(c(0.0, 0.0), c(2.0, -1.0), 0.5, 1, &[]).unwrap();
        let ab = a.compose(&b).unwrap();
        assert_eq!(ab.winding_number(c(2.0, 1.0)).unwrap(), 1);
        assert_eq!(ab.winding_number(c(2.0, -1.0)).unwrap(), 1);
        let far = CPath::segment(c(7.0, 0.0), c(8.0, 0.0));
        assert!(matches!(a.compose(&far), Err(PathError::Discontinuous(_))));
    }

    #[test]
    fn empty_path_is_a_point() {
        let p = CPath::empty(c(1.0, 2.0));
        assert_eq!(p.length(), 0.0);
        assert_eq!(p.point_at(0.7).unwrap(), c(1.0, 2.0));
    }

    #[test]
    fn path_serializes_as_piece_list() {
        let p = loop_around(c(1.0, 0.0), c(0.2, 2.5), 0.4, 1, &[]).unwrap();
        let json = serde_json::to_value(&p).unwrap();
        assert_eq!(json["pieces"][0]["kind"], "segment");
        assert_eq!(json["pieces"][1]["kind"], "arc");
        let back: CPath = serde_json::from_value(json).unwrap();
        assert_eq!(back, p);
    }
}
