//! 2×2 helpers. Vectors are `[f64; 2]`, matrices row-major `[[f64; 2]; 2]`.

pub type Vec2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

pub fn det(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn norm(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

pub fn add(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn scale(s: f64, a: Vec2) -> Vec2 {
    [s * a[0], s * a[1]]
}

pub fn mat_vec(m: Mat2, v: Vec2) -> Vec2 {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

pub fn mat_mul(a: Mat2, b: Mat2) -> Mat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

pub fn mat_det(m: Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Solve `m x = rhs`; `None` when `|det m|` is below `tol`.
pub fn solve(m: Mat2, rhs: Vec2, tol: f64) -> Option<Vec2> {
    let d = mat_det(m);
    if !(d.abs() > tol) {
        return None;
    }
    Some([(rhs[0] * m[1][1] - m[0][1] * rhs[1]) / d, (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / d])
}

/// Coefficients `(x, y)` with `v = x·a + y·b`.
pub fn expand(v: Vec2, a: Vec2, b: Vec2, tol: f64) -> Option<(f64, f64)> {
    solve([[a[0], b[0]], [a[1], b[1]]], v, tol).map(|s| (s[0], s[1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expansion_recovers_coefficients() {
        let (x, y) = expand([3.0, -1.0], [1.0, 1.0], [1.0, -1.0], 1e-12).unwrap();
        assert!((x - 1.0).abs() < 1e-15 && (y - 2.0).abs() < 1e-15);
        assert!(expand([1.0, 0.0], [1.0, 2.0], [2.0, 4.0], 1e-12).is_none());
    }
}
