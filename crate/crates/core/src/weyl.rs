//! Generalized Pauli (clock and shift) operators of a single `d`-level site.
//!
//! The convention is `U_{r1,r2} = X^{r1} Z^{r2}` with `X|s⟩ = |s+1 mod d⟩` and
//! `Z|s⟩ = ω^s |s⟩`, `ω = e^{2πi/d}`. With it
//!
//! ```text
//! U_{r1,r2} U_{t1,t2} = ω^{t1·r2} U_{r1+t1, r2+t2}
//! ```
//!
//! holds exactly. Phases are carried as integer exponents of `ω` and only
//! turned into floating point when a matrix is requested.

use crate::error::{LabError, Result};
use crate::linalg::{CMat, C64, ONE, ZERO};

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(LabError::InvalidDimension(d));
    }
    Ok(())
}

/// `e^{2πi k/d}` computed from the reduced exponent.
pub fn root_of_unity(k: i64, d: usize) -> C64 {
    let k = k.rem_euclid(d as i64);
    if (4 * k) % d as i64 == 0 {
        return match 4 * k / d as i64 {
            0 => ONE,
            1 => crate::linalg::I,
            2 => -ONE,
            _ => -crate::linalg::I,
        };
    }
    let theta = 2.0 * std::f64::consts::PI * k as f64 / d as f64;
    C64::from_polar(1.0, theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WeylIndex {
    r1: usize,
    r2: usize,
    d: usize,
}

impl WeylIndex {
    /// Components are reduced mod `d`.
    pub fn new(r1: i64, r2: i64, d: usize) -> Result<Self> {
        check_dim(d)?;
        let m = d as i64;
        Ok(Self {
            r1: r1.rem_euclid(m) as usize,
            r2: r2.rem_euclid(m) as usize,
            d,
        })
    }

    pub fn identity(d: usize) -> Result<Self> {
        Self::new(0, 0, d)
    }

    pub fn r1(&self) -> usize {
        self.r1
    }

    pub fn r2(&self) -> usize {
        self.r2
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn is_identity(&self) -> bool {
        self.r1 == 0 && self.r2 == 0
    }

    /// All `d²` indices in lexicographic `(r1, r2)` order.
    pub fn all(d: usize) -> Result<Vec<Self>> {
        check_dim(d)?;
        Ok((0..d)
            .flat_map(|r1| (0..d).map(move |r2| Self { r1, r2, d }))
            .collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        Self::new(
            (self.r1 + other.r1) as i64,
            (self.r2 + other.r2) as i64,
            self.d,
        )
    }

    fn same_dim(&self, other: &Self) -> Result<()> {
        if self.d != other.d {
            return Err(LabError::DimensionMismatch {
                expected: self.d,
                found: other.d,
            });
        }
        Ok(())
    }
}

/// A Weyl operator times an exact `d`-th root of unity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PhasedWeyl {
    pub index: WeylIndex,
    phase_exponent: usize,
}

impl PhasedWeyl {
    pub fn new(index: WeylIndex, phase_exponent: i64) -> Self {
        let d = index.d as i64;
        Self {
            index,
            phase_exponent: phase_exponent.rem_euclid(d) as usize,
        }
    }

    pub fn plain(index: WeylIndex) -> Self {
        Self::new(index, 0)
    }

    pub fn phase_exponent(&self) -> usize {
        self.phase_exponent
    }

    pub fn phase(&self) -> C64 {
        root_of_unity(self.phase_exponent as i64, self.index.d)
    }

    pub fn matrix(&self) -> Result<CMat> {
        let mut m = weyl_matrix(&self.index)?;
        let p = self.phase();
        for z in m.iter_mut() {
            *z *= p;
        }
        Ok(m)
    }
}

/// `U_{r1,r2} = X^{r1} Z^{r2}`: entry `⟨s+r1|U|s⟩ = ω^{r2·s}`.
pub fn weyl_matrix(idx: &WeylIndex) -> Result<CMat> {
    check_dim(idx.d)?;
    let d = idx.d;
    let mut m = CMat::from_element(d, d, ZERO);
    for s in 0..d {
        let row = (s + idx.r1) % d;
        m[(row, s)] = root_of_unity((idx.r2 * s) as i64, d);
    }
    Ok(m)
}

pub fn weyl_product(a: &PhasedWeyl, b: &PhasedWeyl) -> Result<PhasedWeyl> {
    a.index.same_dim(&b.index)?;
    let index = a.index.add(&b.index)?;
    let cross = b.index.r1 * a.index.r2;
    Ok(PhasedWeyl::new(
        index,
        (a.phase_exponent + b.phase_exponent + cross) as i64,
    ))
}

/// `c` with `U_a U_b = ω^c U_b U_a`, i.e. `c = b1·a2 − a1·b2 mod d`.
pub fn commutation_phase(a: &WeylIndex, b: &WeylIndex) -> Result<usize> {
    a.same_dim(b)?;
    let d = a.d as i64;
    let c = (b.r1 * a.r2) as i64 - (a.r1 * b.r2) as i64;
    Ok(c.rem_euclid(d) as usize)
}

/// The clock operator `Z = U_{0,1}`.
pub fn clock(d: usize) -> Result<CMat> {
    weyl_matrix(&WeylIndex::new(0, 1, d)?)
}

/// The shift operator `X = U_{1,0}`.
pub fn shift_op(d: usize) -> Result<CMat> {
    weyl_matrix(&WeylIndex::new(1, 0, d)?)
}

pub mod pauli {
    //! Qubit Pauli matrices.
    use crate::linalg::{CMat, I, ONE, ZERO};

    pub fn x() -> CMat {
        CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    pub fn y() -> CMat {
        CMat::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
    }

    pub fn z() -> CMat {
        CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
    }

    pub fn id() -> CMat {
        CMat::identity(2, 2)
    }

    pub fn by_name(name: &str) -> Option<CMat> {
        match name {
            "I" | "1" => Some(id()),
            "X" => Some(x()),
            "Y" => Some(y()),
            "Z" => Some(z()),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, max_abs_diff};
    use proptest::prelude::*;

    fn idx(r1: i64, r2: i64, d: usize) -> WeylIndex {
        WeylIndex::new(r1, r2, d).unwrap()
    }

    #[test]
    fn rejects_small_dimension() {
        assert!(matches!(
            WeylIndex::new(0, 0, 1),
            Err(LabError::InvalidDimension(1))
        ));
    }

    #[test]
    fn identity_and_bit_flip() {
        assert_eq!(weyl_matrix(&idx(0, 0, 2)).unwrap(), identity(2));
        assert_eq!(weyl_matrix(&idx(1, 0, 2)).unwrap(), pauli::x());
        assert_eq!(weyl_matrix(&idx(0, 1, 2)).unwrap(), pauli::z());
    }

    #[test]
    fn qutrit_clock_is_diagonal_roots() {
        let z = weyl_matrix(&idx(0, 1, 3)).unwrap();
        let w = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        let expected = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![ONE, w, w * w]));
        assert!(max_abs_diff(&z, &expected) < 1e-15);
    }

    #[test]
    fn product_examples() {
        let p = weyl_product(
            &PhasedWeyl::plain(idx(0, 1, 2)),
            &PhasedWeyl::plain(idx(1, 0, 2)),
        )
        .unwrap();
        assert_eq!((p.index, p.phase_exponent()), (idx(1, 1, 2), 1));

        let p = weyl_product(
            &PhasedWeyl::plain(idx(1, 0, 3)),
            &PhasedWeyl::plain(idx(1, 0, 3)),
        )
        .unwrap();
        assert_eq!((p.index, p.phase_exponent()), (idx(2, 0, 3), 0));

        let a = PhasedWeyl::plain(idx(1, 1, 2));
        let p = weyl_product(&a, &a).unwrap();
        assert_eq!((p.index, p.phase_exponent()), (idx(0, 0, 2), 1));
        // oracle: square the 2×2 matrix directly
        let m = weyl_matrix(&idx(1, 1, 2)).unwrap();
        assert!(max_abs_diff(&(&m * &m), &(-identity(2))) < 1e-15);
    }

    #[test]
    fn product_dimension_mismatch() {
        let r = weyl_product(
            &PhasedWeyl::plain(idx(1, 0, 2)),
            &PhasedWeyl::plain(idx(1, 0, 3)),
        );
        assert!(matches!(r, Err(LabError::DimensionMismatch { .. })));
        assert!(commutation_phase(&idx(1, 0, 2), &idx(1, 0, 3)).is_err());
    }

    /// `c` read off from the matrices: `U_a U_b = ω^c U_b U_a`.
    fn phase_from_matrices(a: &WeylIndex, b: &WeylIndex) -> usize {
        let ua = weyl_matrix(a).unwrap();
        let ub = weyl_matrix(b).unwrap();
        let lhs = &ua * &ub;
        let rhs = &ub * &ua;
        (0..a.dim())
            .find(|&c| max_abs_diff(&lhs, &(&rhs * root_of_unity(c as i64, a.dim()))) < 1e-12)
            .expect("Weyl operators commute up to a root of unity")
    }

    #[test]
    fn commutation_examples() {
        assert_eq!(commutation_phase(&idx(1, 0, 2), &idx(0, 1, 2)).unwrap(), 1);
        assert_eq!(phase_from_matrices(&idx(1, 0, 2), &idx(0, 1, 2)), 1);
        // X Z = ω^{-1} Z X on three levels, so the reduced phase is 2.
        assert_eq!(phase_from_matrices(&idx(1, 0, 3), &idx(0, 1, 3)), 2);
        assert_eq!(commutation_phase(&idx(1, 0, 3), &idx(0, 1, 3)).unwrap(), 2);
        for d in [2, 3, 5] {
            for a in WeylIndex::all(d).unwrap() {
                assert_eq!(commutation_phase(&a, &a).unwrap(), 0);
            }
        }
    }

    #[test]
    fn hilbert_schmidt_orthogonality() {
        for d in [2, 3, 5] {
            let all = WeylIndex::all(d).unwrap();
            for a in &all {
                let ua = weyl_matrix(a).unwrap();
                for b in &all {
                    let ub = weyl_matrix(b).unwrap();
                    let ip = crate::linalg::hs_inner(&ua, &ub);
                    let expected = if a == b { d as f64 } else { 0.0 };
                    assert!((ip - C64::from(expected)).norm() < 1e-12);
                }
            }
        }
    }

    fn arb_pair() -> impl Strategy<Value = (usize, i64, i64, i64, i64, i64, i64)> {
        prop_oneof![Just(2usize), Just(3usize), Just(5usize)].prop_flat_map(|d| {
            let m = d as i64;
            (
                Just(d),
                0..m,
                0..m,
                0..m,
                0..m,
                0..m,
                0..m,
            )
        })
    }

    proptest! {
        #[test]
        fn product_matches_matrices((d, a1, a2, b1, b2, pa, pb) in arb_pair()) {
            let a = PhasedWeyl::new(idx(a1, a2, d), pa);
            let b = PhasedWeyl::new(idx(b1, b2, d), pb);
            let ab = weyl_product(&a, &b).unwrap();
            let lhs = ab.matrix().unwrap();
            let rhs = a.matrix().unwrap() * b.matrix().unwrap();
            prop_assert!(max_abs_diff(&lhs, &rhs) < 1e-12);
        }

        #[test]
        fn unitary_and_antisymmetric((d, a1, a2, b1, b2, _pa, _pb) in arb_pair()) {
            let a = idx(a1, a2, d);
            let b = idx(b1, b2, d);
            let u = weyl_matrix(&a).unwrap();
            prop_assert!(max_abs_diff(&(u.adjoint() * &u), &identity(d)) < 1e-12);
            let cab = commutation_phase(&a, &b).unwrap();
            let cba = commutation_phase(&b, &a).unwrap();
            prop_assert_eq!((cab + cba) % d, 0);
            prop_assert_eq!(cab, phase_from_matrices(&a, &b));
        }
    }
}
