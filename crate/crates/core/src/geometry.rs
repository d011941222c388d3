//! Plan-view geometry: points, discs and the rectangular sweep corridors a
//! skill drags through the scene.

use std::ops::{Add, Mul, Neg, Sub};

use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Vec2<T> {
    pub fn new(x: T, y: T) -> Self {
        Vec2 { x, y }
    }

    pub fn zero() -> Self {
        Vec2::new(T::zero(), T::zero())
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3-D cross product.
    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    pub fn dist(self, o: Self) -> T {
        (self - o).norm()
    }

    /// Unit vector, or `None` for the zero vector.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > T::zero() {
            Some(self * (T::one() / n))
        } else {
            None
        }
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Self {
        Vec2::new(-self.y, self.x)
    }

    /// Rotate counter-clockwise by `angle` radians.
    pub fn rotated(self, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        Vec2::new(self.x * c - self.y * s, self.x * s + self.y * c)
    }

    pub fn angle(self) -> T {
        self.y.atan2(self.x)
    }
}

impl<T: Scalar> Add for Vec2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Scalar> Sub for Vec2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Scalar> Mul<T> for Vec2<T> {
    type Output = Self;
    fn mul(self, k: T) -> Self {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl<T: Scalar> Neg for Vec2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Vec2::new(-self.x, -self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disc<T> {
    pub center: Vec2<T>,
    pub radius: T,
}

impl<T: Scalar> Disc<T> {
    pub fn new(center: Vec2<T>, radius: T) -> Self {
        Disc { center, radius }
    }

    /// Open-set overlap: touching discs do not overlap.
    pub fn overlaps(&self, o: &Disc<T>) -> bool {
        self.center.dist(o.center) < self.radius + o.radius
    }

    pub fn contains(&self, p: Vec2<T>) -> bool {
        self.center.dist(p) <= self.radius
    }
}

/// Rectangle swept by a segment `start → end` with the given half-width.
/// No end caps: the rectangle stops at both endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corridor<T> {
    pub start: Vec2<T>,
    pub end: Vec2<T>,
    pub half_width: T,
}

impl<T: Scalar> Corridor<T> {
    pub fn new(start: Vec2<T>, end: Vec2<T>, half_width: T) -> Self {
        Corridor {
            start,
            end,
            half_width,
        }
    }

    pub fn length(&self) -> T {
        self.start.dist(self.end)
    }

    /// Unit axis; degenerate corridors fall back to +x.
    pub fn axis(&self) -> Vec2<T> {
        (self.end - self.start)
            .normalized()
            .unwrap_or_else(|| Vec2::new(T::one(), T::zero()))
    }

    /// (along-axis, signed perpendicular) coordinates of `p`.
    pub fn local(&self, p: Vec2<T>) -> (T, T) {
        let axis = self.axis();
        let d = p - self.start;
        (d.dot(axis), axis.cross(d))
    }

    /// Euclidean distance from `p` to the closed rectangle.
    pub fn distance_to(&self, p: Vec2<T>) -> T {
        let (u, v) = self.local(p);
        let len = self.length();
        let du = (-u).max(u - len).max(T::zero());
        let dv = (v.abs() - self.half_width).max(T::zero());
        (du * du + dv * dv).sqrt()
    }

    pub fn intersects(&self, disc: &Disc<T>) -> bool {
        self.distance_to(disc.center) < disc.radius
    }

    /// Sideways push direction for a disc touched by the corridor.
    pub fn push_normal(&self, p: Vec2<T>) -> Vec2<T> {
        let (_, v) = self.local(p);
        let left = self.axis().perp();
        if v < T::zero() {
            -left
        } else {
            left
        }
    }
}

/// Region a skill sweeps: approach corridor plus a disc envelope at its end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweptRegion<T> {
    pub corridor: Corridor<T>,
    pub envelope: Disc<T>,
}

impl<T: Scalar> SweptRegion<T> {
    pub fn intersects(&self, disc: &Disc<T>) -> bool {
        self.envelope.overlaps(disc) || self.corridor.intersects(disc)
    }

    /// Contact normal for a disc inside the region: radial from the envelope
    /// when the envelope is touched, sideways from the corridor otherwise.
    pub fn contact_normal(&self, disc: &Disc<T>) -> Vec2<T> {
        if self.envelope.overlaps(disc) {
            (disc.center - self.envelope.center)
                .normalized()
                .unwrap_or_else(|| self.corridor.axis())
        } else {
            self.corridor.push_normal(disc.center)
        }
    }
}
