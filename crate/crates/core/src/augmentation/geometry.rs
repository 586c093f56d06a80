//! Planar affine maps and homographies.

use crate::pose::{BBox, Keypoint2D};

/// `p -> M p + t` with `M = [[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub tx: f64,
    pub ty: f64,
}

impl Affine2 {
    pub const IDENTITY: Affine2 = Affine2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0, tx: 0.0, ty: 0.0 };

    /// Linear map `m` applied about `pivot`: `p -> m (p - pivot) + pivot`.
    pub fn about(pivot: Keypoint2D, a: f64, b: f64, c: f64, d: f64) -> Self {
        Affine2 {
            a,
            b,
            c,
            d,
            tx: pivot.x - (a * pivot.x + b * pivot.y),
            ty: pivot.y - (c * pivot.x + d * pivot.y),
        }
    }

    /// Rotation by `degrees` about `pivot`. With y pointing down, a positive
    /// angle turns clockwise on screen: `(1, 0) -> (0, 1)` for 90°.
    pub fn rotation(pivot: Keypoint2D, degrees: f64) -> Self {
        let (s, c) = degrees.to_radians().sin_cos();
        Affine2::about(pivot, c, -s, s, c)
    }

    /// `[[1, tan ax], [tan ay, 1]]` about `pivot`.
    pub fn shear(pivot: Keypoint2D, angle_x: f64, angle_y: f64) -> Self {
        Affine2::about(pivot, 1.0, angle_x.to_radians().tan(), angle_y.to_radians().tan(), 1.0)
    }

    #[inline]
    pub fn apply(&self, p: Keypoint2D) -> Keypoint2D {
        Keypoint2D::new(
            self.a * p.x + self.b * p.y + self.tx,
            self.c * p.x + self.d * p.y + self.ty,
        )
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn inverse(&self) -> Option<Affine2> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let (a, b, c, d) = (self.d / det, -self.b / det, -self.c / det, self.a / det);
        Some(Affine2 {
            a,
            b,
            c,
            d,
            tx: -(a * self.tx + b * self.ty),
            ty: -(c * self.tx + d * self.ty),
        })
    }
}

/// Projective map in homogeneous coordinates, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography(pub [[f64; 3]; 3]);

impl Homography {
    pub const IDENTITY: Homography = Homography([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    /// Maps the unit square corners `(0,0), (1,0), (1,1), (0,1)` onto `quad`
    /// in that order (closed-form square-to-quad construction).
    pub fn square_to_quad(quad: [Keypoint2D; 4]) -> Option<Homography> {
        let [p0, p1, p2, p3] = quad;
        let (dx1, dx2, dx3) = (p1.x - p2.x, p3.x - p2.x, p0.x - p1.x + p2.x - p3.x);
        let (dy1, dy2, dy3) = (p1.y - p2.y, p3.y - p2.y, p0.y - p1.y + p2.y - p3.y);
        let (g, h) = if dx3 == 0.0 && dy3 == 0.0 {
            (0.0, 0.0)
        } else {
            let den = dx1 * dy2 - dx2 * dy1;
            if den == 0.0 {
                return None;
            }
            ((dx3 * dy2 - dx2 * dy3) / den, (dx1 * dy3 - dx3 * dy1) / den)
        };
        Some(Homography([
            [p1.x - p0.x + g * p1.x, p3.x - p0.x + h * p3.x, p0.x],
            [p1.y - p0.y + g * p1.y, p3.y - p0.y + h * p3.y, p0.y],
            [g, h, 1.0],
        ]))
    }

    /// Maps the corners of `from` (min/min, max/min, max/max, min/max) onto `quad`.
    pub fn box_to_quad(from: &BBox, quad: [Keypoint2D; 4]) -> Option<Homography> {
        let (w, h) = (from.width(), from.height());
        if !(w > 0.0 && h > 0.0) {
            return None;
        }
        let to_unit = Homography([
            [1.0 / w, 0.0, -from.min_x / w],
            [0.0, 1.0 / h, -from.min_y / h],
            [0.0, 0.0, 1.0],
        ]);
        Some(Homography::square_to_quad(quad)?.compose(&to_unit))
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Homography) -> Homography {
        let (a, b) = (&self.0, &other.0);
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        Homography(m)
    }

    #[inline]
    pub fn apply(&self, p: Keypoint2D) -> Keypoint2D {
        let m = &self.0;
        let w = m[2][0] * p.x + m[2][1] * p.y + m[2][2];
        Keypoint2D::new(
            (m[0][0] * p.x + m[0][1] * p.y + m[0][2]) / w,
            (m[1][0] * p.x + m[1][1] * p.y + m[1][2]) / w,
        )
    }

    /// Inverse via the adjugate.
    pub fn inverse(&self) -> Option<Homography> {
        let m = &self.0;
        let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        let adj = [
            [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
            [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
            [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
        ];
        let det = m[0][0] * adj[0][0] + m[0][1] * adj[1][0] + m[0][2] * adj[2][0];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let mut inv = [[0.0; 3]; 3];
        for (i, row) in inv.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = adj[i][j] / det;
            }
        }
        Some(Homography(inv))
    }
}
