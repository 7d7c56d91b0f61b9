//! Quaternion arithmetic and the standard hypercomplex matrices on `H^q`.
//!
//! Quaternions are `[a, b, c, d] = a + b·i + c·j + d·k`. The standard
//! structures are `I_α = −R_{q_α}` (right multiplication by `−i, −j, −k`), so
//! that `I₁I₂ = I₃`.

use nalgebra::{DMatrix, Matrix3};
use rand::Rng;

pub type Quat = [f64; 4];

pub const ONE: Quat = [1.0, 0.0, 0.0, 0.0];
pub const I: Quat = [0.0, 1.0, 0.0, 0.0];
pub const J: Quat = [0.0, 0.0, 1.0, 0.0];
pub const K: Quat = [0.0, 0.0, 0.0, 1.0];
pub const UNITS: [Quat; 3] = [I, J, K];

pub fn mul(a: &Quat, b: &Quat) -> Quat {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

pub fn conj(a: &Quat) -> Quat {
    [a[0], -a[1], -a[2], -a[3]]
}

/// Matrix of `h ↦ h·c` on `R⁴`.
pub fn right_matrix(c: &Quat) -> [[f64; 4]; 4] {
    let mut m = [[0.0; 4]; 4];
    for col in 0..4 {
        let mut e = [0.0; 4];
        e[col] = 1.0;
        let r = mul(&e, c);
        for row in 0..4 {
            m[row][col] = r[row];
        }
    }
    m
}

/// Matrix of `h ↦ c·h` on `R⁴`.
pub fn left_matrix(c: &Quat) -> [[f64; 4]; 4] {
    let mut m = [[0.0; 4]; 4];
    for col in 0..4 {
        let mut e = [0.0; 4];
        e[col] = 1.0;
        let r = mul(c, &e);
        for row in 0..4 {
            m[row][col] = r[row];
        }
    }
    m
}

/// Block-diagonal `q`-fold copy of a 4×4 block.
pub fn block_diag(block: &[[f64; 4]; 4], q: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(4 * q, 4 * q);
    for b in 0..q {
        for i in 0..4 {
            for j in 0..4 {
                m[(4 * b + i, 4 * b + j)] = block[i][j];
            }
        }
    }
    m
}

/// The standard `I_α` (α = 0, 1, 2) on `R^{4q}`.
pub fn standard_structure(alpha: usize, q: usize) -> DMatrix<f64> {
    -block_diag(&right_matrix(&UNITS[alpha]), q)
}

pub fn standard_triple(q: usize) -> [DMatrix<f64>; 3] {
    [0, 1, 2].map(|a| standard_structure(a, q))
}

/// Rotation of `R³ = Im H` given by `v ↦ u v ū` for a unit quaternion `u`.
pub fn rotation_of(u: &Quat) -> Matrix3<f64> {
    let mut m = Matrix3::zeros();
    for col in 0..3 {
        let r = mul(&mul(u, &UNITS[col]), &conj(u));
        for row in 0..3 {
            m[(row, col)] = r[row + 1];
        }
    }
    m
}

/// A rotation of a hypercomplex basis, `I'_α = Σ_β matrix[α][β] I_β`, with a
/// unit quaternion lift. If `G⁻¹ I_α G` are the standard structures then so
/// are `(G R_u)⁻¹ I'_α (G R_u)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisRotation {
    pub matrix: Matrix3<f64>,
    pub lift: Quat,
}

impl BasisRotation {
    pub fn from_lift(u: Quat) -> Self {
        let n = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        let u = u.map(|x| x / n);
        BasisRotation {
            matrix: rotation_of(&u),
            lift: u,
        }
    }

    pub fn identity() -> Self {
        BasisRotation::from_lift(ONE)
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let v = random_unit::<R, 4>(rng);
        BasisRotation::from_lift(v)
    }

    /// Gauge factor `R_u` on `R^{4q}`.
    pub fn gauge_factor(&self, q: usize) -> DMatrix<f64> {
        block_diag(&right_matrix(&self.lift), q)
    }
}

/// A uniformly distributed unit vector, by rejection from the cube.
pub fn random_unit<R: Rng + ?Sized, const N: usize>(rng: &mut R) -> [f64; N] {
    loop {
        let mut v = [0.0; N];
        for x in v.iter_mut() {
            *x = rng.random_range(-1.0..1.0);
        }
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 > 1e-4 && n2 <= 1.0 {
            let n = n2.sqrt();
            return v.map(|x| x / n);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &DMatrix<f64>, b: &DMatrix<f64>) -> bool {
        (a - b).abs().max() < 1e-13
    }

    #[test]
    fn quaternion_units() {
        assert_eq!(mul(&I, &J), K);
        assert_eq!(mul(&J, &K), I);
        assert_eq!(mul(&K, &I), J);
        assert_eq!(mul(&I, &I), [-1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn standard_triple_identities() {
        for q in 1..=2 {
            let [i1, i2, i3] = standard_triple(q);
            let id = DMatrix::identity(4 * q, 4 * q);
            for m in [&i1, &i2, &i3] {
                assert!(close(&(m * m), &(-&id)));
            }
            assert!(close(&(&i1 * &i2), &i3));
            assert!(close(&(&i2 * &i3), &i1));
            assert!(close(&(&i3 * &i1), &i2));
        }
    }

    #[test]
    fn gauge_lift_conjugates_rotated_basis_to_standard() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = 2;
        let std = standard_triple(q);
        for _ in 0..5 {
            let r = BasisRotation::random(&mut rng);
            assert!((r.matrix.determinant() - 1.0).abs() < 1e-12);
            let g = r.gauge_factor(q);
            let gi = g.clone().try_inverse().unwrap();
            for a in 0..3 {
                let mut rot = DMatrix::zeros(4 * q, 4 * q);
                for b in 0..3 {
                    rot += &std[b] * r.matrix[(a, b)];
                }
                assert!(close(&(&gi * rot * &g), &std[a]));
            }
        }
    }
}
