//! Finitely presented abelian groups in invariant-factor coordinates.
//!
//! A group is presented as `Z^r / rowspace(relations)`. Canonical coordinates
//! list the torsion components (invariant factors `d_i >= 2`, divisibility
//! chain) followed by the free components. Basis-change data is kept so that
//! ambient expressions can be evaluated and endomorphisms induced.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::snf::SnfCalc;
use super::{invariant_factors_of, IntMatrix};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum AbelianError {
    #[error("endomorphism does not preserve the relation lattice")]
    IncompatibleEndo,
    #[error("element has infinite order (nonzero free component)")]
    InfiniteOrder,
    #[error("internal error: {0}")]
    Internal(String),
}

/// Finite(ly generated) abelian group with basis-change data.
#[derive(Debug, Clone)]
pub struct FinAbGroup {
    invariant_factors: Vec<BigInt>,
    rank_free: usize,
    ambient_rank: usize,
    /// ambient_rank x k: maps ambient row vectors to canonical coordinates.
    to_canonical: IntMatrix,
    /// k x ambient_rank: lifts of the canonical generators.
    from_canonical: IntMatrix,
    /// The presenting relations (rows span the relation lattice).
    relations: IntMatrix,
}

/// Element in canonical coordinates, torsion entries reduced mod `d_i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupElement {
    pub coords: Vec<BigInt>,
}

/// Endomorphism in both ambient and canonical coordinates. Rows are images:
/// the image of `x` is the row vector `x * matrix`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupEndo {
    pub ambient: IntMatrix,
    pub canonical: IntMatrix,
}

/// A subgroup: its abstract structure plus generators inside the parent,
/// aligned index-by-index with `group`'s invariant factors.
#[derive(Debug, Clone)]
pub struct KernelSubgroup {
    pub group: FinAbGroup,
    pub generators: Vec<GroupElement>,
}

/// The group `Z^r / rowspace(relations)` with `r = relations.cols()`.
/// Trivial factors (`d_i = 1`) are dropped.
pub fn cokernel(relations: IntMatrix) -> FinAbGroup {
    let r = relations.cols();
    let calc = SnfCalc::run(relations.clone(), false, true, true);
    let v = calc.v.unwrap();
    let vinv = calc.vinv.unwrap();
    let diag_len = calc.a.rows().min(calc.a.cols());

    let mut torsion_idx = Vec::new();
    let mut free_idx = Vec::new();
    for i in 0..diag_len {
        let d = &calc.a[(i, i)];
        if d.is_zero() {
            free_idx.push(i);
        } else if !d.is_one() {
            torsion_idx.push(i);
        }
    }
    free_idx.extend(diag_len..r);

    let invariant_factors: Vec<BigInt> =
        torsion_idx.iter().map(|&i| calc.a[(i, i)].clone()).collect();
    let kept: Vec<usize> = torsion_idx.iter().chain(free_idx.iter()).copied().collect();

    let mut to_canonical = IntMatrix::zeros(r, kept.len());
    for row in 0..r {
        for (c, &i) in kept.iter().enumerate() {
            to_canonical[(row, c)] = v[(row, i)].clone();
        }
    }
    let mut from_canonical = IntMatrix::zeros(kept.len(), r);
    for (c, &i) in kept.iter().enumerate() {
        for col in 0..r {
            from_canonical[(c, col)] = vinv[(i, col)].clone();
        }
    }

    FinAbGroup {
        rank_free: free_idx.len(),
        invariant_factors,
        ambient_rank: r,
        to_canonical,
        from_canonical,
        relations,
    }
}

impl FinAbGroup {
    /// Convenience presentation `Z/d_1 + Z/d_2 + ...` (ambient = one
    /// generator per listed factor; factors need not form a chain).
    pub fn from_factors(factors: &[u64]) -> FinAbGroup {
        let d: Vec<BigInt> = factors.iter().map(|&x| BigInt::from(x)).collect();
        cokernel(IntMatrix::diagonal(&d))
    }

    pub fn invariant_factors(&self) -> &[BigInt] {
        &self.invariant_factors
    }

    pub fn rank_free(&self) -> usize {
        self.rank_free
    }

    pub fn ambient_rank(&self) -> usize {
        self.ambient_rank
    }

    pub fn to_canonical(&self) -> &IntMatrix {
        &self.to_canonical
    }

    pub fn relations(&self) -> &IntMatrix {
        &self.relations
    }

    pub fn torsion_rank(&self) -> usize {
        self.invariant_factors.len()
    }

    fn k_total(&self) -> usize {
        self.invariant_factors.len() + self.rank_free
    }

    pub fn is_trivial(&self) -> bool {
        self.k_total() == 0
    }

    /// Group order; `None` when the free rank is positive.
    pub fn order(&self) -> Option<BigInt> {
        if self.rank_free > 0 {
            return None;
        }
        Some(self.invariant_factors.iter().product())
    }

    pub fn zero(&self) -> GroupElement {
        GroupElement {
            coords: vec![BigInt::zero(); self.k_total()],
        }
    }

    /// The i-th canonical generator.
    pub fn canonical_gen(&self, i: usize) -> GroupElement {
        let mut z = self.zero();
        z.coords[i] = BigInt::one();
        self.reduced(z)
    }

    fn reduced(&self, mut x: GroupElement) -> GroupElement {
        for (i, d) in self.invariant_factors.iter().enumerate() {
            x.coords[i] = x.coords[i].mod_floor(d);
        }
        x
    }

    /// Image of an ambient row vector in canonical coordinates.
    pub fn element_from_ambient(&self, x: &[BigInt]) -> GroupElement {
        assert_eq!(x.len(), self.ambient_rank, "ambient dimension mismatch");
        self.reduced(GroupElement {
            coords: self.to_canonical.apply_row(x),
        })
    }

    pub fn add(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        let coords = a
            .coords
            .iter()
            .zip(&b.coords)
            .map(|(x, y)| x + y)
            .collect();
        self.reduced(GroupElement { coords })
    }

    pub fn neg(&self, a: &GroupElement) -> GroupElement {
        let coords = a.coords.iter().map(|x| -x).collect();
        self.reduced(GroupElement { coords })
    }

    pub fn sub(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        self.add(a, &self.neg(b))
    }

    pub fn scalar_mul(&self, c: &BigInt, a: &GroupElement) -> GroupElement {
        let coords = a.coords.iter().map(|x| c * x).collect();
        self.reduced(GroupElement { coords })
    }

    pub fn is_zero_elt(&self, a: &GroupElement) -> bool {
        a.coords.iter().all(|x| x.is_zero())
    }

    pub fn apply(&self, f: &GroupEndo, x: &GroupElement) -> GroupElement {
        self.reduced(GroupElement {
            coords: f.canonical.apply_row(&x.coords),
        })
    }

    /// `f` then `g` as a single endomorphism.
    pub fn compose(&self, f: &GroupEndo, g: &GroupEndo) -> GroupEndo {
        GroupEndo {
            ambient: f.ambient.mul(&g.ambient),
            canonical: self.reduce_matrix(f.canonical.mul(&g.canonical)),
        }
    }

    /// Endomorphism equality as maps on the group (entries compared mod d).
    pub fn endo_eq(&self, f: &GroupEndo, g: &GroupEndo) -> bool {
        self.reduce_matrix(f.canonical.clone()) == self.reduce_matrix(g.canonical.clone())
    }

    pub fn identity_endo(&self) -> GroupEndo {
        GroupEndo {
            ambient: IntMatrix::identity(self.ambient_rank),
            canonical: IntMatrix::identity(self.k_total()),
        }
    }

    /// Multiplication by a fixed integer (always lattice-compatible).
    pub fn scalar_endo(&self, c: &BigInt) -> GroupEndo {
        let k = self.k_total();
        let mut canonical = IntMatrix::zeros(k, k);
        for i in 0..k {
            canonical[(i, i)] = c.clone();
        }
        let mut ambient = IntMatrix::zeros(self.ambient_rank, self.ambient_rank);
        for i in 0..self.ambient_rank {
            ambient[(i, i)] = c.clone();
        }
        GroupEndo {
            ambient,
            canonical: self.reduce_matrix(canonical),
        }
    }

    fn reduce_matrix(&self, mut m: IntMatrix) -> IntMatrix {
        for i in 0..m.rows() {
            for (j, d) in self.invariant_factors.iter().enumerate() {
                let r = m[(i, j)].mod_floor(d);
                m[(i, j)] = r;
            }
        }
        m
    }

    /// Iterate all elements. Panics if the free rank is positive; callers
    /// are expected to bound the group order themselves.
    pub fn elements(&self) -> Elements<'_> {
        assert_eq!(self.rank_free, 0, "cannot enumerate an infinite group");
        Elements {
            group: self,
            current: Some(vec![BigInt::zero(); self.invariant_factors.len()]),
        }
    }
}

/// `f * f = identity` on the group.
pub fn is_involution(g: &FinAbGroup, f: &GroupEndo) -> bool {
    g.endo_eq(&g.compose(f, f), &g.identity_endo())
}

/// Exact order of an element.
pub fn element_order(g: &FinAbGroup, x: &GroupElement) -> Result<BigInt, AbelianError> {
    let t = g.torsion_rank();
    if x.coords[t..].iter().any(|c| !c.is_zero()) {
        return Err(AbelianError::InfiniteOrder);
    }
    let mut order = BigInt::one();
    for (i, d) in g.invariant_factors.iter().enumerate() {
        let gcd = x.coords[i].gcd(d);
        order = order.lcm(&(d / gcd));
    }
    Ok(order)
}

/// Exact order of the subgroup generated by `gens`.
pub fn subgroup_order(g: &FinAbGroup, gens: &[GroupElement]) -> Result<BigInt, AbelianError> {
    let total = g.order().ok_or(AbelianError::InfiniteOrder)?;
    if gens.is_empty() {
        return Ok(BigInt::one());
    }
    let k = g.torsion_rank();
    let rows: Vec<Vec<BigInt>> = gens.iter().map(|x| x.coords.clone()).collect();
    let stack = IntMatrix::from_rows(k, rows)
        .stack_below(&IntMatrix::diagonal(&g.invariant_factors));
    let quotient: BigInt = invariant_factors_of(&stack).iter().product();
    Ok(total / quotient)
}

/// Endomorphism induced by an integer matrix acting on ambient generators
/// (row convention: image of `x` is `x * m`). Errors if the matrix does not
/// map the relation lattice into itself.
pub fn induced_endo(g: &FinAbGroup, m: &IntMatrix) -> Result<GroupEndo, AbelianError> {
    assert_eq!(m.rows(), g.ambient_rank);
    assert_eq!(m.cols(), g.ambient_rank);
    for i in 0..g.relations.rows() {
        let image = m.apply_row(g.relations.row(i));
        if !g.is_zero_elt(&g.element_from_ambient(&image)) {
            return Err(AbelianError::IncompatibleEndo);
        }
    }
    let k = g.k_total();
    let mut canonical = IntMatrix::zeros(k, k);
    for i in 0..k {
        let image = m.apply_row(g.from_canonical.row(i));
        let elt = g.element_from_ambient(&image);
        for j in 0..k {
            canonical[(i, j)] = elt.coords[j].clone();
        }
    }
    Ok(GroupEndo {
        ambient: m.clone(),
        canonical,
    })
}

/// The subgroup `{x in G : f(x) = 0 for all f}` with explicit generators.
///
/// Solves `f(x) in relation lattice` by stacking the endomorphism matrices
/// over a lattice basis and computing an integer kernel via SNF.
pub fn kernel_of_endos(
    g: &FinAbGroup,
    endos: &[GroupEndo],
) -> Result<KernelSubgroup, AbelianError> {
    if g.rank_free > 0 {
        return Err(AbelianError::InfiniteOrder);
    }
    let k = g.torsion_rank();
    if k == 0 || endos.is_empty() {
        // Kernel of nothing is everything; kernel inside the trivial group is trivial.
        let generators = (0..k).map(|i| g.canonical_gen(i)).collect();
        return Ok(KernelSubgroup {
            group: g.clone(),
            generators,
        });
    }
    let r = endos.len();

    // B = [E_1 | ... | E_r] stacked over block-diagonal copies of -diag(d).
    let mut b = IntMatrix::zeros(k + r * k, r * k);
    for (j, f) in endos.iter().enumerate() {
        for i in 0..k {
            for c in 0..k {
                b[(i, j * k + c)] = f.canonical[(i, c)].clone();
            }
        }
        for c in 0..k {
            b[(k + j * k + c, j * k + c)] = -g.invariant_factors[c].clone();
        }
    }

    let calc = SnfCalc::run(b, true, false, false);
    let u = calc.u.unwrap();
    let diag_len = calc.a.rows().min(calc.a.cols());
    let rank = (0..diag_len)
        .take_while(|&i| !calc.a[(i, i)].is_zero())
        .count();
    let kernel_rows: Vec<usize> = (rank..u.rows()).collect();
    if kernel_rows.len() != k {
        return Err(AbelianError::Internal(format!(
            "kernel lattice has rank {} instead of {k}",
            kernel_rows.len()
        )));
    }

    // Solution lattice S (contains the diagonal lattice), as rows over Z^k.
    let s_mat = IntMatrix::from_rows(
        k,
        kernel_rows
            .iter()
            .map(|&i| u.row(i)[..k].to_vec())
            .collect(),
    );

    // Express diag(d) in the S basis: C * S = diag(d), C integral.
    let c = solve_left(&s_mat, &IntMatrix::diagonal(&g.invariant_factors))
        .ok_or_else(|| AbelianError::Internal("lattice basis is singular".into()))?;

    let sub = cokernel(c);
    let generators = (0..sub.k_total())
        .map(|i| {
            // from_canonical rows are lifts in S coordinates; push through
            // the S basis to land in g's canonical (torsion) coordinates.
            let lift = s_mat.apply_row(sub.from_canonical.row(i));
            g.reduced(GroupElement { coords: lift })
        })
        .collect();

    Ok(KernelSubgroup {
        group: sub,
        generators,
    })
}

impl KernelSubgroup {
    pub fn order(&self) -> BigInt {
        self.group.order().expect("kernel subgroups are finite")
    }
}

/// Solve `X * S = B` exactly over the rationals and return `X` if integral.
fn solve_left(s: &IntMatrix, b: &IntMatrix) -> Option<IntMatrix> {
    let n = s.rows();
    assert_eq!(s.cols(), n);
    assert_eq!(b.cols(), n);
    // Transpose: S^T * X^T = B^T; solve one column of X^T per row of X.
    let st: Vec<Vec<BigRational>> = (0..n)
        .map(|i| (0..n).map(|j| BigRational::from(s[(j, i)].clone())).collect())
        .collect();
    let mut rows_out: Vec<Vec<BigInt>> = Vec::with_capacity(b.rows());
    for bi in 0..b.rows() {
        let rhs: Vec<BigRational> = (0..n)
            .map(|j| BigRational::from(b[(bi, j)].clone()))
            .collect();
        let sol = gauss_solve(st.clone(), rhs)?;
        let mut introw = Vec::with_capacity(n);
        for x in sol {
            if !x.is_integer() {
                return None;
            }
            introw.push(x.to_integer());
        }
        rows_out.push(introw);
    }
    Some(IntMatrix::from_rows(n, rows_out))
}

fn gauss_solve(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n).find(|&i| !a[i][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col].clone();
        for j in col..n {
            a[col][j] = &a[col][j] / &p;
        }
        b[col] = &b[col] / &p;
        for i in 0..n {
            if i == col || a[i][col].is_zero() {
                continue;
            }
            let f = a[i][col].clone();
            for j in col..n {
                let t = &a[col][j] * &f;
                a[i][j] = &a[i][j] - t;
            }
            let t = &b[col] * &f;
            b[i] = &b[i] - t;
        }
    }
    Some(b)
}

/// Odometer over all elements of a finite group.
pub struct Elements<'a> {
    group: &'a FinAbGroup,
    current: Option<Vec<BigInt>>,
}

impl Iterator for Elements<'_> {
    type Item = GroupElement;
    fn next(&mut self) -> Option<GroupElement> {
        let cur = self.current.clone()?;
        let out = GroupElement { coords: cur.clone() };
        let mut next = cur;
        let mut i = 0;
        loop {
            if i == next.len() {
                self.current = None;
                break;
            }
            next[i] += 1;
            if next[i] < self.group.invariant_factors[i] {
                self.current = Some(next);
                break;
            }
            next[i] = BigInt::zero();
            i += 1;
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(x: i64) -> BigInt {
        BigInt::from(x)
    }

    #[test]
    fn cokernel_no_relations_is_free() {
        let g = cokernel(IntMatrix::zeros(0, 1));
        assert_eq!(g.rank_free(), 1);
        assert!(g.invariant_factors().is_empty());
        assert_eq!(g.order(), None);
    }

    #[test]
    fn cokernel_presentation_z5() {
        // rows {2w - 3t, w + t} over rank 2 -> Z/5
        let rel = IntMatrix::from_i64(2, &[&[2, -3], &[1, 1]]);
        let g = cokernel(rel);
        assert_eq!(g.invariant_factors(), &[big(5)]);
        assert_eq!(g.rank_free(), 0);
        // to_canonical kills the relations
        for i in 0..g.relations().rows() {
            let row = g.relations().row(i).to_vec();
            assert!(g.is_zero_elt(&g.element_from_ambient(&row)));
        }
    }

    #[test]
    fn cokernel_z2() {
        let rel = IntMatrix::from_i64(2, &[&[1, -1], &[1, 1]]);
        let g = cokernel(rel);
        assert_eq!(g.invariant_factors(), &[big(2)]);
    }

    #[test]
    fn element_orders() {
        let g = FinAbGroup::from_factors(&[8]);
        let one = g.element_from_ambient(&[big(1)]);
        assert_eq!(element_order(&g, &one).unwrap(), big(8));
        let four = g.scalar_mul(&big(4), &one);
        assert_eq!(element_order(&g, &four).unwrap(), big(2));
        assert_eq!(element_order(&g, &g.zero()).unwrap(), big(1));

        let free = cokernel(IntMatrix::zeros(0, 1));
        let x = GroupElement { coords: vec![big(2)] };
        assert_eq!(element_order(&free, &x), Err(AbelianError::InfiniteOrder));
    }

    #[test]
    fn subgroup_order_full() {
        // Z/8 + Z/3 with both ambient generators: the whole group.
        let g = FinAbGroup::from_factors(&[8, 3]);
        let a = g.element_from_ambient(&[big(1), big(0)]);
        let b = g.element_from_ambient(&[big(0), big(1)]);
        assert_eq!(subgroup_order(&g, &[a.clone(), b]).unwrap(), big(24));
        assert_eq!(subgroup_order(&g, &[a]).unwrap(), big(8));
        assert_eq!(subgroup_order(&g, &[]).unwrap(), big(1));
    }

    #[test]
    fn involution_checks() {
        let g = FinAbGroup::from_factors(&[28]);
        assert!(is_involution(&g, &g.scalar_endo(&big(15)))); // 15^2 = 225 = 1 mod 28
        assert!(is_involution(&g, &g.identity_endo()));
        let h = FinAbGroup::from_factors(&[5]);
        assert!(!is_involution(&h, &h.scalar_endo(&big(2))));
    }

    #[test]
    fn induced_endo_identity_and_scalar() {
        let rel = IntMatrix::from_i64(2, &[&[2, -3], &[1, 1]]);
        let g = cokernel(rel);
        let id = induced_endo(&g, &IntMatrix::identity(2)).unwrap();
        assert!(g.endo_eq(&id, &g.identity_endo()));
        let mut three = IntMatrix::zeros(2, 2);
        three[(0, 0)] = big(3);
        three[(1, 1)] = big(3);
        let s = induced_endo(&g, &three).unwrap();
        assert!(g.endo_eq(&s, &g.scalar_endo(&big(3))));
    }

    #[test]
    fn induced_endo_rejects_corrupted_matrix() {
        // Swapping the generators of Z/8 + Z/3 sends the relation (8, 0) to
        // (0, 8), which is not in the lattice {(8a, 3b)}.
        let g = FinAbGroup::from_factors(&[8, 3]);
        let swap = IntMatrix::from_i64(2, &[&[0, 1], &[1, 0]]);
        assert_eq!(induced_endo(&g, &swap), Err(AbelianError::IncompatibleEndo));
    }

    fn brute_kernel_size(g: &FinAbGroup, endos: &[GroupEndo]) -> usize {
        g.elements()
            .filter(|x| endos.iter().all(|f| g.is_zero_elt(&g.apply(f, x))))
            .count()
    }

    #[test]
    fn kernel_identity_and_empty() {
        let g = FinAbGroup::from_factors(&[8, 3]);
        let k = kernel_of_endos(&g, &[g.identity_endo()]).unwrap();
        assert_eq!(k.order(), big(1));
        let all = kernel_of_endos(&g, &[]).unwrap();
        assert_eq!(all.order(), big(24));
    }

    #[test]
    fn kernel_example_z3() {
        // G = Z/8 + Z/3 (ambient generators in that order),
        // endos = [mult-by-3, diag(2, 0)] -> Z/3.
        let g = FinAbGroup::from_factors(&[8, 3]);
        let mult3 = g.scalar_endo(&big(3));
        let diag = induced_endo(&g, &IntMatrix::from_i64(2, &[&[2, 0], &[0, 0]])).unwrap();
        let k = kernel_of_endos(&g, &[mult3.clone(), diag.clone()]).unwrap();
        assert_eq!(k.group.invariant_factors(), &[big(3)]);
        assert_eq!(k.order(), big(3));
        // brute force over all 24 elements agrees
        assert_eq!(brute_kernel_size(&g, &[mult3, diag]), 3);
        // the generator really lies in the kernel and has order 3
        let gen = &k.generators[0];
        assert_eq!(element_order(&g, gen).unwrap(), big(3));
    }

    #[test]
    fn kernel_matches_brute_force_randomish() {
        // Fixed small sweep standing in for randomized checks: a couple of
        // groups, a few scalar/matrix endos.
        let g = FinAbGroup::from_factors(&[4, 6]);
        let cases: Vec<Vec<GroupEndo>> = vec![
            vec![g.scalar_endo(&big(2))],
            vec![g.scalar_endo(&big(3))],
            vec![g.scalar_endo(&big(2)), g.scalar_endo(&big(3))],
            vec![induced_endo(&g, &IntMatrix::from_i64(2, &[&[1, 0], &[0, 3]])).unwrap()],
        ];
        for endos in cases {
            let k = kernel_of_endos(&g, &endos).unwrap();
            let brute = brute_kernel_size(&g, &endos);
            assert_eq!(k.order(), BigInt::from(brute), "endos: {endos:?}");
            // generated subgroup has the right order and lies in the kernel
            assert_eq!(subgroup_order(&g, &k.generators).unwrap(), BigInt::from(brute));
            for gen in &k.generators {
                for f in &endos {
                    assert!(g.is_zero_elt(&g.apply(f, gen)));
                }
            }
        }
    }
}
