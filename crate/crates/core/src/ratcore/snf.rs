use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use super::{IntMatrix, RatError};

/// `u * m * v = diag(d)` with `u`, `v` unimodular and `d[0] | d[1] | ...`, all positive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmithForm {
    pub u: IntMatrix,
    pub d: Vec<BigInt>,
    pub v: IntMatrix,
}

impl SmithForm {
    pub fn diagonal_matrix(&self) -> IntMatrix {
        let n = self.d.len();
        let mut m = IntMatrix::identity(n);
        for (i, di) in self.d.iter().enumerate() {
            *m.get_mut(i, i) = di.clone();
        }
        m
    }
}

/// Smith normal form of a square nonsingular integer matrix.
pub fn smith_normal_form(m: &IntMatrix) -> Result<SmithForm, RatError> {
    if m.rows() != m.cols() {
        return Err(RatError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let n = m.rows();
    let mut a = m.clone();
    let mut u = IntMatrix::identity(n);
    let mut v = IntMatrix::identity(n);

    for t in 0..n {
        loop {
            // Smallest nonzero entry of the trailing block becomes the pivot.
            let mut best: Option<(usize, usize)> = None;
            for r in t..n {
                for c in t..n {
                    let x = a.get(r, c);
                    if x.is_zero() {
                        continue;
                    }
                    if best.is_none_or(|(br, bc)| x.abs() < a.get(br, bc).abs()) {
                        best = Some((r, c));
                    }
                }
            }
            let Some((pr, pc)) = best else {
                return Err(RatError::Singular);
            };
            a.swap_rows(t, pr);
            u.swap_rows(t, pr);
            a.swap_cols(t, pc);
            v.swap_cols(t, pc);

            let mut clean = true;
            for r in t + 1..n {
                let q = a.get(r, t).div_floor(a.get(t, t));
                if !q.is_zero() {
                    let f = -q;
                    a.add_row_multiple(r, t, &f);
                    u.add_row_multiple(r, t, &f);
                }
                if !a.get(r, t).is_zero() {
                    clean = false;
                }
            }
            for c in t + 1..n {
                let q = a.get(t, c).div_floor(a.get(t, t));
                if !q.is_zero() {
                    let f = -q;
                    a.add_col_multiple(c, t, &f);
                    v.add_col_multiple(c, t, &f);
                }
                if !a.get(t, c).is_zero() {
                    clean = false;
                }
            }
            if !clean {
                continue;
            }
            // Divisibility: fold any offending row into row t and retry.
            let pivot = a.get(t, t).clone();
            let offender = (t + 1..n)
                .find(|&r| (t + 1..n).any(|c| !a.get(r, c).is_multiple_of(&pivot)));
            match offender {
                Some(r) => {
                    let one = BigInt::from(1);
                    a.add_row_multiple(t, r, &one);
                    u.add_row_multiple(t, r, &one);
                }
                None => break,
            }
        }
        if a.get(t, t).is_negative() {
            a.negate_row(t);
            u.negate_row(t);
        }
    }
    let d = (0..n).map(|i| a.get(i, i).clone()).collect();
    Ok(SmithForm { u, d, v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;
    use proptest::prelude::*;

    fn check(m: &IntMatrix) -> SmithForm {
        let s = smith_normal_form(m).unwrap();
        assert_eq!(s.u.matmul(m).matmul(&s.v), s.diagonal_matrix());
        for w in s.d.windows(2) {
            assert!(w[1].is_multiple_of(&w[0]), "{:?} does not divide", s.d);
        }
        assert!(s.d.iter().all(|x| x.is_positive()));
        assert!(s.u.abs_det().unwrap().is_one());
        assert!(s.v.abs_det().unwrap().is_one());
        s
    }

    #[test]
    fn examples() {
        let s = check(&IntMatrix::from_i64_rows(&[[4, 2], [2, 2]]));
        assert_eq!(s.d, vec![BigInt::from(2), BigInt::from(2)]);
        let s = check(&IntMatrix::identity(3));
        assert!(s.d.iter().all(|x| x.is_one()));
        let s = check(&IntMatrix::from_i64_rows(&[[2, 0], [0, 2]]));
        assert_eq!(s.d, vec![BigInt::from(2), BigInt::from(2)]);
        let s = check(&IntMatrix::from_i64_rows(&[[2, 0], [0, 3]]));
        assert_eq!(s.d, vec![BigInt::from(1), BigInt::from(6)]);
    }

    #[test]
    fn singular_rejected() {
        let m = IntMatrix::from_i64_rows(&[[1, 2], [2, 4]]);
        assert_eq!(smith_normal_form(&m), Err(RatError::Singular));
    }

    proptest! {
        #[test]
        fn det_preserved(entries in proptest::collection::vec(-9i64..=9, 9)) {
            let rows: Vec<Vec<i64>> = entries.chunks(3).map(|c| c.to_vec()).collect();
            let m = IntMatrix::from_i64_rows(&rows);
            let det = m.det().unwrap();
            prop_assume!(!det.is_zero());
            let s = check(&m);
            let prod = s.d.iter().fold(BigInt::one(), |a, b| a * b);
            prop_assert_eq!(prod, det.abs());
        }
    }
}
