//! Exact Gaussian elimination over the rationals.

use crate::rational::Rational;

/// Solve `matrix · x = rhs`. Free variables are set to zero; `None` when the
/// system is inconsistent.
pub fn solve(matrix: &[Vec<Rational>], rhs: &[Rational]) -> Option<Vec<Rational>> {
    let rows = matrix.len();
    let cols = matrix.first().map_or(0, Vec::len);
    let mut aug: Vec<Vec<Rational>> = matrix
        .iter()
        .zip(rhs)
        .map(|(row, b)| {
            let mut r = row.clone();
            r.push(b.clone());
            r
        })
        .collect();

    let mut pivots = Vec::new();
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows).find(|&r| !aug[r][c].is_zero()) else {
            continue;
        };
        aug.swap(rank, p);
        let inv = aug[rank][c].recip();
        for x in aug[rank].iter_mut() {
            *x *= &inv;
        }
        for r in 0..rows {
            if r == rank || aug[r][c].is_zero() {
                continue;
            }
            let factor = aug[r][c].clone();
            let pivot_row = aug[rank].clone();
            for (x, p) in aug[r].iter_mut().zip(&pivot_row).skip(c) {
                *x -= &(&factor * p);
            }
        }
        pivots.push(c);
        rank += 1;
    }
    if aug[rank..].iter().any(|row| !row[cols].is_zero()) {
        return None;
    }
    let mut x = vec![Rational::zero(); cols];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = aug[r][cols].clone();
    }
    Some(x)
}

pub fn determinant(matrix: &[Vec<Rational>]) -> Rational {
    let n = matrix.len();
    let mut m = matrix.to_vec();
    let mut det = Rational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&r| !m[r][c].is_zero()) else {
            return Rational::zero();
        };
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        det *= &m[c][c];
        let inv = m[c][c].recip();
        for r in c + 1..n {
            if m[r][c].is_zero() {
                continue;
            }
            let factor = &m[r][c] * &inv;
            let pivot_row = m[c].clone();
            for (x, p) in m[r].iter_mut().zip(&pivot_row).skip(c) {
                *x -= &(&factor * p);
            }
        }
    }
    det
}

/// Sylvester's criterion: leading minors alternate in sign, starting negative.
pub fn is_negative_definite(matrix: &[Vec<Rational>]) -> bool {
    (1..=matrix.len()).all(|k| {
        let minor: Vec<Vec<Rational>> = matrix[..k].iter().map(|r| r[..k].to_vec()).collect();
        let d = determinant(&minor);
        if k % 2 == 1 {
            d.is_negative()
        } else {
            d.is_positive()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn m(rows: &[&[i64]]) -> Vec<Vec<Rational>> {
        rows.iter().map(|r| r.iter().map(|&x| Rational::integer(x)).collect()).collect()
    }

    #[test]
    fn solves_square_and_degenerate_systems() {
        let a = m(&[&[2, 1], &[1, 3]]);
        let x = solve(&a, &[q(3, 1), q(5, 1)]).unwrap();
        assert_eq!(x, vec![q(4, 5), q(7, 5)]);
        let lines = m(&[&[1, 1], &[1, 1]]);
        assert_eq!(solve(&lines, &[q(3, 1), q(3, 1)]).unwrap(), vec![q(3, 1), q(0, 1)]);
        assert!(solve(&lines, &[q(3, 1), q(2, 1)]).is_none());
    }

    #[test]
    fn determinants_and_definiteness() {
        assert_eq!(determinant(&m(&[&[-2, 1], &[1, -2]])), q(3, 1));
        assert!(is_negative_definite(&m(&[&[-2, 1], &[1, -2]])));
        assert!(!is_negative_definite(&m(&[&[-1, 1], &[1, -1]])));
        assert!(is_negative_definite(&m(&[&[-2, 1, 0], &[1, -2, 1], &[0, 1, -2]])));
        assert!(is_negative_definite(&[]));
    }
}
