//! Smith normal form over the integers.
//!
//! Pivoting is deterministic: the nonzero entry of minimal absolute value in
//! the remaining submatrix, ties broken in row-major order. Diagonal entries
//! are normalized to be nonnegative with the divisibility chain
//! `d_1 | d_2 | ...` and zeros last.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::IntMatrix;

/// Unimodular decomposition `U * A * V = D` with `D` in Smith normal form.
#[derive(Debug, Clone)]
pub struct SmithDecomposition {
    pub u: IntMatrix,
    pub d: IntMatrix,
    pub v: IntMatrix,
}

impl SmithDecomposition {
    /// Nonzero diagonal entries `d_1 | d_2 | ...`.
    pub fn diagonal(&self) -> Vec<BigInt> {
        let n = self.d.rows().min(self.d.cols());
        (0..n)
            .map(|i| self.d[(i, i)].clone())
            .take_while(|x| !x.is_zero())
            .collect()
    }
}

/// Full decomposition with both transforms.
pub fn smith_normal_form(a: &IntMatrix) -> SmithDecomposition {
    let calc = SnfCalc::run(a.clone(), true, true, false);
    SmithDecomposition {
        u: calc.u.unwrap(),
        d: calc.a,
        v: calc.v.unwrap(),
    }
}

/// Invariant factors (diagonal entries >= 2) of the cokernel of `a`, without
/// computing any transform. Cheap enough for presentations with thousands of
/// generators.
pub fn invariant_factors_of(a: &IntMatrix) -> Vec<BigInt> {
    let calc = SnfCalc::run(a.clone(), false, false, false);
    let n = calc.a.rows().min(calc.a.cols());
    (0..n)
        .map(|i| calc.a[(i, i)].clone())
        .filter(|x| *x > BigInt::one())
        .collect()
}

/// Extended gcd returning `(g, s, t)` with `s*x + t*y = g`, `g >= 0`.
/// When `x` already divides `y` the cofactors are chosen as `(sign(x), 0)` so
/// that the rotation built from them degenerates to a plain row subtraction.
pub(crate) fn gcdx(x: &BigInt, y: &BigInt) -> (BigInt, BigInt, BigInt) {
    if !x.is_zero() && (y % x).is_zero() {
        let s = if x.is_negative() {
            -BigInt::one()
        } else {
            BigInt::one()
        };
        return (x.abs(), s, BigInt::zero());
    }
    let e = x.extended_gcd(y);
    (e.gcd, e.x, e.y)
}

pub(crate) struct SnfCalc {
    pub a: IntMatrix,
    pub u: Option<IntMatrix>,
    pub v: Option<IntMatrix>,
    pub vinv: Option<IntMatrix>,
}

impl SnfCalc {
    pub fn run(a: IntMatrix, want_u: bool, want_v: bool, want_vinv: bool) -> SnfCalc {
        let mut calc = SnfCalc {
            u: want_u.then(|| IntMatrix::identity(a.rows())),
            v: want_v.then(|| IntMatrix::identity(a.cols())),
            vinv: want_vinv.then(|| IntMatrix::identity(a.cols())),
            a,
        };
        calc.reduce();
        calc
    }

    fn reduce(&mut self) {
        let steps = self.a.rows().min(self.a.cols());
        let mut rank = 0;
        for k in 0..steps {
            if !self.pivot_step(k) {
                break;
            }
            rank += 1;
        }
        self.normalize_chain(rank);
    }

    /// Bring a pivot to (k, k) and clear its row and column. Returns false
    /// when the remaining submatrix is zero.
    fn pivot_step(&mut self, k: usize) -> bool {
        let Some((pi, pj)) = self.select_pivot(k) else {
            return false;
        };
        if pi != k {
            self.swap_rows(k, pi);
        }
        if pj != k {
            self.swap_cols(k, pj);
        }
        loop {
            let mut dirty = false;
            for i in k + 1..self.a.rows() {
                if !self.a[(i, k)].is_zero() {
                    self.rotate_rows(k, i);
                    dirty = true;
                }
            }
            for j in k + 1..self.a.cols() {
                if !self.a[(k, j)].is_zero() {
                    self.rotate_cols(k, j);
                    dirty = true;
                }
            }
            if !dirty {
                break;
            }
            // Column rotations can reintroduce entries below the pivot; loop
            // until both the row and the column are clean. Each pass strictly
            // shrinks |pivot| or the set of nonzeros, so this terminates.
            let col_clean = (k + 1..self.a.rows()).all(|i| self.a[(i, k)].is_zero());
            let row_clean = (k + 1..self.a.cols()).all(|j| self.a[(k, j)].is_zero());
            if col_clean && row_clean {
                break;
            }
        }
        if self.a[(k, k)].is_negative() {
            self.negate_row(k);
        }
        true
    }

    /// Minimal-absolute-value nonzero entry in the submatrix at (k, k),
    /// row-major tie-break, short-circuiting on 1.
    fn select_pivot(&self, k: usize) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize)> = None;
        let mut best_abs = BigInt::zero();
        for i in k..self.a.rows() {
            for j in k..self.a.cols() {
                let e = &self.a[(i, j)];
                if e.is_zero() {
                    continue;
                }
                let a = e.abs();
                if a.is_one() {
                    return Some((i, j));
                }
                if best.is_none() || a < best_abs {
                    best = Some((i, j));
                    best_abs = a;
                }
            }
        }
        best
    }

    /// Unimodular row operation sending rows (i, j) to
    /// `(s*r_i + t*r_j, -b*r_i + a*r_j)` where `g = s*x + t*y`, `a = x/g`,
    /// `b = y/g` for `x = a[i][k0]`, `y = a[j][k0]` at the pivot column `i`.
    fn rotate_rows(&mut self, i: usize, j: usize) {
        let x = self.a[(i, i)].clone();
        let y = self.a[(j, i)].clone();
        let (g, s, t) = gcdx(&x, &y);
        let ax = &x / &g;
        let by = &y / &g;
        for col in 0..self.a.cols() {
            let ri = self.a[(i, col)].clone();
            let rj = self.a[(j, col)].clone();
            self.a[(i, col)] = &s * &ri + &t * &rj;
            self.a[(j, col)] = -&by * &ri + &ax * &rj;
        }
        if let Some(u) = self.u.as_mut() {
            for col in 0..u.cols() {
                let ri = u[(i, col)].clone();
                let rj = u[(j, col)].clone();
                u[(i, col)] = &s * &ri + &t * &rj;
                u[(j, col)] = -&by * &ri + &ax * &rj;
            }
        }
    }

    /// Column analogue of `rotate_rows`, clearing `a[i][j]` against the pivot
    /// `a[i][i]`.
    fn rotate_cols(&mut self, i: usize, j: usize) {
        let x = self.a[(i, i)].clone();
        let y = self.a[(i, j)].clone();
        let (g, s, t) = gcdx(&x, &y);
        let ax = &x / &g;
        let by = &y / &g;
        for row in 0..self.a.rows() {
            let ci = self.a[(row, i)].clone();
            let cj = self.a[(row, j)].clone();
            self.a[(row, i)] = &ci * &s + &cj * &t;
            self.a[(row, j)] = -&ci * &by + &cj * &ax;
        }
        if let Some(v) = self.v.as_mut() {
            for row in 0..v.rows() {
                let ci = v[(row, i)].clone();
                let cj = v[(row, j)].clone();
                v[(row, i)] = &ci * &s + &cj * &t;
                v[(row, j)] = -&ci * &by + &cj * &ax;
            }
        }
        if let Some(vinv) = self.vinv.as_mut() {
            // Inverse of [[s, -b], [t, a]] is [[a, b], [-t, s]], applied on
            // the left to rows (i, j).
            for col in 0..vinv.cols() {
                let ri = vinv[(i, col)].clone();
                let rj = vinv[(j, col)].clone();
                vinv[(i, col)] = &ax * &ri + &by * &rj;
                vinv[(j, col)] = -&t * &ri + &s * &rj;
            }
        }
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        for col in 0..self.a.cols() {
            let tmp = self.a[(i, col)].clone();
            self.a[(i, col)] = self.a[(j, col)].clone();
            self.a[(j, col)] = tmp;
        }
        if let Some(u) = self.u.as_mut() {
            for col in 0..u.cols() {
                let tmp = u[(i, col)].clone();
                u[(i, col)] = u[(j, col)].clone();
                u[(j, col)] = tmp;
            }
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        for row in 0..self.a.rows() {
            let tmp = self.a[(row, i)].clone();
            self.a[(row, i)] = self.a[(row, j)].clone();
            self.a[(row, j)] = tmp;
        }
        if let Some(v) = self.v.as_mut() {
            for row in 0..v.rows() {
                let tmp = v[(row, i)].clone();
                v[(row, i)] = v[(row, j)].clone();
                v[(row, j)] = tmp;
            }
        }
        if let Some(vinv) = self.vinv.as_mut() {
            for col in 0..vinv.cols() {
                let tmp = vinv[(i, col)].clone();
                vinv[(i, col)] = vinv[(j, col)].clone();
                vinv[(j, col)] = tmp;
            }
        }
    }

    fn negate_row(&mut self, i: usize) {
        for col in 0..self.a.cols() {
            let x = -self.a[(i, col)].clone();
            self.a[(i, col)] = x;
        }
        if let Some(u) = self.u.as_mut() {
            for col in 0..u.cols() {
                let x = -u[(i, col)].clone();
                u[(i, col)] = x;
            }
        }
    }

    /// Enforce `d_i | d_(i+1)` on the nonzero diagonal block of size `rank`.
    fn normalize_chain(&mut self, rank: usize) {
        if rank < 2 {
            return;
        }
        loop {
            let mut changed = false;
            for i in 0..rank - 1 {
                let x = self.a[(i, i)].clone();
                let y = self.a[(i + 1, i + 1)].clone();
                if (&y % &x).is_zero() {
                    continue;
                }
                changed = true;
                // Fold y into position (i+1, i), then clear the 2x2 block;
                // the pivot becomes gcd(x, y) and the other corner lcm(x, y).
                self.add_row_into(i + 1, i);
                self.rotate_rows_at(i, i + 1, i);
                self.rotate_cols_at(i, i + 1, i);
                // A single rotation pair may leave a stray entry; finish the
                // 2x2 block off with the generic cleaner.
                while !self.a[(i + 1, i)].is_zero() || !self.a[(i, i + 1)].is_zero() {
                    if !self.a[(i + 1, i)].is_zero() {
                        self.rotate_rows_at(i, i + 1, i);
                    }
                    if !self.a[(i, i + 1)].is_zero() {
                        self.rotate_cols_at(i, i + 1, i);
                    }
                }
                if self.a[(i, i)].is_negative() {
                    self.negate_row(i);
                }
                if self.a[(i + 1, i + 1)].is_negative() {
                    self.negate_row(i + 1);
                }
            }
            if !changed {
                break;
            }
        }
    }

    /// Row op: row_j += row_i (unimodular).
    fn add_row_into(&mut self, i: usize, j: usize) {
        for col in 0..self.a.cols() {
            let x = self.a[(i, col)].clone();
            self.a[(j, col)] += x;
        }
        if let Some(u) = self.u.as_mut() {
            for col in 0..u.cols() {
                let x = u[(i, col)].clone();
                u[(j, col)] += x;
            }
        }
    }

    /// `rotate_rows` variant with an explicit working column.
    fn rotate_rows_at(&mut self, i: usize, j: usize, col0: usize) {
        let x = self.a[(i, col0)].clone();
        let y = self.a[(j, col0)].clone();
        if y.is_zero() {
            return;
        }
        let (g, s, t) = gcdx(&x, &y);
        let ax = &x / &g;
        let by = &y / &g;
        for col in 0..self.a.cols() {
            let ri = self.a[(i, col)].clone();
            let rj = self.a[(j, col)].clone();
            self.a[(i, col)] = &s * &ri + &t * &rj;
            self.a[(j, col)] = -&by * &ri + &ax * &rj;
        }
        if let Some(u) = self.u.as_mut() {
            for col in 0..u.cols() {
                let ri = u[(i, col)].clone();
                let rj = u[(j, col)].clone();
                u[(i, col)] = &s * &ri + &t * &rj;
                u[(j, col)] = -&by * &ri + &ax * &rj;
            }
        }
    }

    fn rotate_cols_at(&mut self, i: usize, j: usize, row0: usize) {
        let x = self.a[(row0, i)].clone();
        let y = self.a[(row0, j)].clone();
        if y.is_zero() {
            return;
        }
        let (g, s, t) = gcdx(&x, &y);
        let ax = &x / &g;
        let by = &y / &g;
        for row in 0..self.a.rows() {
            let ci = self.a[(row, i)].clone();
            let cj = self.a[(row, j)].clone();
            self.a[(row, i)] = &ci * &s + &cj * &t;
            self.a[(row, j)] = -&ci * &by + &cj * &ax;
        }
        if let Some(v) = self.v.as_mut() {
            for row in 0..v.rows() {
                let ci = v[(row, i)].clone();
                let cj = v[(row, j)].clone();
                v[(row, i)] = &ci * &s + &cj * &t;
                v[(row, j)] = -&ci * &by + &cj * &ax;
            }
        }
        if let Some(vinv) = self.vinv.as_mut() {
            for col in 0..vinv.cols() {
                let ri = vinv[(i, col)].clone();
                let rj = vinv[(j, col)].clone();
                vinv[(i, col)] = &ax * &ri + &by * &rj;
                vinv[(j, col)] = -&t * &ri + &s * &rj;
            }
        }
    }
}
