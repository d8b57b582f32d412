//! Integer Heisenberg group: unipotent upper-triangular 3x3 matrices.

use std::ops::Mul;

/// `[[1, x, z], [0, 1, y], [0, 0, 1]]` with integer entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct UnipotentMatrix {
    pub x: i64,
    pub y: i64,
    pub z: i64,
}

impl UnipotentMatrix {
    pub const IDENTITY: UnipotentMatrix = UnipotentMatrix { x: 0, y: 0, z: 0 };
    pub const GEN_X: UnipotentMatrix = UnipotentMatrix { x: 1, y: 0, z: 0 };
    pub const GEN_Y: UnipotentMatrix = UnipotentMatrix { x: 0, y: 1, z: 0 };
    pub const GEN_Z: UnipotentMatrix = UnipotentMatrix { x: 0, y: 0, z: 1 };

    pub const fn new(x: i64, y: i64, z: i64) -> Self {
        UnipotentMatrix { x, y, z }
    }

    pub fn to_array(self) -> [[i64; 3]; 3] {
        [[1, self.x, self.z], [0, 1, self.y], [0, 0, 1]]
    }

    pub fn inverse(self) -> Self {
        UnipotentMatrix { x: -self.x, y: -self.y, z: self.x * self.y - self.z }
    }

    pub fn pow(self, n: i64) -> Self {
        let base = if n < 0 { self.inverse() } else { self };
        (0..n.unsigned_abs()).fold(Self::IDENTITY, |acc, _| acc * base)
    }

    /// `[a, b] = a b a^-1 b^-1`
    pub fn commutator(a: Self, b: Self) -> Self {
        a * b * a.inverse() * b.inverse()
    }

    /// `a^(b) = b a b^-1`
    pub fn conjugate_by(self, b: Self) -> Self {
        b * self * b.inverse()
    }
}

impl Mul for UnipotentMatrix {
    type Output = UnipotentMatrix;

    fn mul(self, rhs: Self) -> Self {
        UnipotentMatrix { x: self.x + rhs.x, y: self.y + rhs.y, z: self.z + rhs.z + self.x * rhs.y }
    }
}

/// Checks `z^(j + offset) = y^(x^j) y^-1`. With `offset = 0` this is an
/// identity in the integer lattice for every `j`.
pub fn relation_holds_at(j: i64, offset: i64) -> bool {
    use UnipotentMatrix as U;
    let lhs = U::GEN_Z.pow(j + offset);
    let rhs = U::GEN_Y.conjugate_by(U::GEN_X.pow(j)) * U::GEN_Y.inverse();
    lhs == rhs
}

/// [`relation_holds_at`] for all `j = 1..=jmax`.
pub fn relation_holds(jmax: u32, offset: i64) -> bool {
    (1..=jmax as i64).all(|j| relation_holds_at(j, offset))
}
