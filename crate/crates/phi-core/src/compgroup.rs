//! The component group itself: an abstract model of the supersingular points
//! with their Frobenius involution, the generators-and-relations presentation
//! solved by Smith normal form, and the closed-form decomposition into a
//! cyclic part plus elementary 2- and 3-families with explicit generators.
//!
//! The two routes are independent and are cross-validated against each other
//! by [`verify_decomposition`] and by the pipeline layer.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::abelian::{
    self, cokernel, invariant_factors_of, AbelianError, FinAbGroup, GroupElement, IntMatrix,
};
use crate::levels::{CaseTag, LevelError, LevelInvariants};

/// Hard upper bound on the size of a fully materialized presentation.
pub const MAX_FULL_POINTS: usize = 4000;

/// Default materialization bound for the one-generator-per-point relation
/// matrix; the collapsed presentation is always available and gives the same
/// group, so the full matrix is only built when it is cheap enough to audit.
pub const DEFAULT_FULL_POINTS: usize = 1024;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum CompgroupError {
    #[error("frob2 is not a permutation of the sigma2 index set")]
    InvalidPermutation,
    #[error("no supersingular points (impossible for q >= 5)")]
    EmptySigma,
    #[error("presentation has an infinite quotient (malformed relations)")]
    InfiniteQuotient,
    #[error("required order is not an integer: {0}")]
    DivisibilityViolation(String),
    #[error("generator {0} is not present in this model")]
    UnknownLabel(String),
    #[error(transparent)]
    Level(#[from] LevelError),
    #[error(transparent)]
    Abelian(#[from] AbelianError),
}

/// A supersingular point, named by its stratum and index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PointLabel {
    /// Automorphism order 2 (weight 1).
    S(usize),
    /// Automorphism order 4 (weight 2).
    W(usize),
    /// Automorphism order 6 (weight 3).
    T(usize),
}

impl fmt::Display for PointLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointLabel::S(i) => write!(f, "s{}", i + 1),
            PointLabel::W(i) => write!(f, "w{}", i + 1),
            PointLabel::T(i) => write!(f, "t{}", i + 1),
        }
    }
}

/// Abstract set of supersingular points partitioned by automorphism order,
/// with the Frobenius involution.
///
/// The extra-automorphism strata are paired consecutively
/// (`w_(2k-1) <-> w_(2k)`); a stratum of size one (only possible when
/// `nu = 0`) is Frobenius-fixed. The involution on the anonymous sigma2
/// stratum is irrelevant to the group and defaults to the identity, but a
/// permutation can be supplied to exercise that independence.
#[derive(Debug, Clone)]
pub struct SigmaModel {
    s2_count: BigInt,
    s4_count: usize,
    s6_count: usize,
    /// None = identity. Only permitted when `s2_count` fits in `usize`.
    frob2: Option<Vec<usize>>,
    frob4: Vec<usize>,
    frob6: Vec<usize>,
}

fn consecutive_pairing(count: usize) -> Vec<usize> {
    if count == 1 {
        return vec![0];
    }
    debug_assert!(count % 2 == 0);
    (0..count).map(|i| i ^ 1).collect()
}

fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    p.iter().all(|&i| {
        if i < seen.len() && !seen[i] {
            seen[i] = true;
            true
        } else {
            false
        }
    })
}

/// Build the abstract point model from the level invariants.
pub fn build_sigma_model(
    inv: &LevelInvariants,
    frob2: Option<Vec<usize>>,
) -> Result<SigmaModel, CompgroupError> {
    if let Some(p) = &frob2 {
        if BigInt::from(p.len()) != inv.s2 || !is_permutation(p) {
            return Err(CompgroupError::InvalidPermutation);
        }
    }
    Ok(SigmaModel {
        s2_count: inv.s2.clone(),
        s4_count: inv.s4 as usize,
        s6_count: inv.s6 as usize,
        frob2,
        frob4: consecutive_pairing(inv.s4 as usize),
        frob6: consecutive_pairing(inv.s6 as usize),
    })
}

impl SigmaModel {
    pub fn s2_count(&self) -> &BigInt {
        &self.s2_count
    }

    pub fn s4_count(&self) -> usize {
        self.s4_count
    }

    pub fn s6_count(&self) -> usize {
        self.s6_count
    }

    /// Test hook: replace the stratum pairings (must be involutions, and
    /// fixed-point-free when the stratum has more than one point).
    pub fn with_pairings(
        mut self,
        frob4: Vec<usize>,
        frob6: Vec<usize>,
    ) -> Result<Self, CompgroupError> {
        let ok = |p: &[usize], n: usize| {
            p.len() == n
                && is_permutation(p)
                && (0..n).all(|i| p[p[i]] == i && (n < 2 || p[i] != i))
        };
        if !ok(&frob4, self.s4_count) || !ok(&frob6, self.s6_count) {
            return Err(CompgroupError::InvalidPermutation);
        }
        self.frob4 = frob4;
        self.frob6 = frob6;
        Ok(self)
    }

    /// Automorphism weight `e = #Aut / 2`.
    pub fn weight(&self, p: PointLabel) -> u8 {
        match p {
            PointLabel::S(_) => 1,
            PointLabel::W(_) => 2,
            PointLabel::T(_) => 3,
        }
    }

    pub fn frob(&self, p: PointLabel) -> PointLabel {
        match p {
            PointLabel::S(i) => PointLabel::S(match &self.frob2 {
                Some(perm) => perm[i],
                None => i,
            }),
            PointLabel::W(i) => PointLabel::W(self.frob4[i]),
            PointLabel::T(i) => PointLabel::T(self.frob6[i]),
        }
    }

    /// Total number of points, if it fits a usize.
    pub fn total_points(&self) -> Option<usize> {
        let s2: usize = usize::try_from(&self.s2_count).ok()?;
        s2.checked_add(self.s4_count)?.checked_add(self.s6_count)
    }
}

/// One generator of a presentation: either an individual point or the
/// identified class of all sigma2 points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsiGen {
    SClass,
    Point(PointLabel),
}

impl fmt::Display for PsiGen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PsiGen::SClass => write!(f, "s"),
            PsiGen::Point(p) => write!(f, "{p}"),
        }
    }
}

/// A generator system for the component group: labeled generators and the
/// relation matrix (rows are relations).
#[derive(Debug, Clone)]
pub struct GeneratorSystem {
    pub gens: Vec<PsiGen>,
    pub relations: IntMatrix,
}

/// The presentation of the component group derived from a point model.
///
/// `reduced` identifies all sigma2 generators to a single representative
/// (forced by the relations, since `e(s) = e(t) = 1` gives `psi_s = psi_t`);
/// `full` keeps one generator per point and is materialized only for models
/// small enough to solve directly.
#[derive(Debug, Clone)]
pub struct Presentation {
    pub model: SigmaModel,
    pub reduced: GeneratorSystem,
    pub full: Option<GeneratorSystem>,
}

fn relation_matrix(weights: &[u8], sum_coeffs: &[BigInt]) -> IntMatrix {
    let n = weights.len();
    let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(n);
    for k in 1..n {
        let mut row = vec![BigInt::zero(); n];
        row[0] = BigInt::from(weights[0]);
        row[k] = -BigInt::from(weights[k]);
        rows.push(row);
    }
    rows.push(sum_coeffs.to_vec());
    IntMatrix::from_rows(n, rows)
}

/// Build both presentations, materializing the full one only up to
/// `full_cap` points (clamped to [`MAX_FULL_POINTS`]).
pub fn build_presentation_with(
    model: &SigmaModel,
    full_cap: usize,
) -> Result<Presentation, CompgroupError> {
    if model.s2_count.is_zero() && model.s4_count == 0 && model.s6_count == 0 {
        return Err(CompgroupError::EmptySigma);
    }

    // Collapsed system: [s-class?, w_1..w_s4, t_1..t_s6] with the pair
    // relations e(x_1) psi_(x_1) = e(x_k) psi_(x_k) for a star at the first
    // generator, and the sum relation s2 psi_s + sum psi_w + sum psi_t = 0.
    let mut gens: Vec<PsiGen> = Vec::new();
    if model.s2_count.is_positive() {
        gens.push(PsiGen::SClass);
    }
    gens.extend((0..model.s4_count).map(|i| PsiGen::Point(PointLabel::W(i))));
    gens.extend((0..model.s6_count).map(|i| PsiGen::Point(PointLabel::T(i))));
    let weights: Vec<u8> = gens
        .iter()
        .map(|g| match g {
            PsiGen::SClass => 1,
            PsiGen::Point(p) => model.weight(*p),
        })
        .collect();
    let sum_coeffs: Vec<BigInt> = gens
        .iter()
        .map(|g| match g {
            PsiGen::SClass => model.s2_count.clone(),
            PsiGen::Point(_) => BigInt::one(),
        })
        .collect();
    let reduced = GeneratorSystem {
        relations: relation_matrix(&weights, &sum_coeffs),
        gens,
    };

    let cap = full_cap.min(MAX_FULL_POINTS);
    let full = match model.total_points() {
        Some(total) if total <= cap => {
            let s2 = usize::try_from(&model.s2_count).expect("bounded by cap");
            let mut gens: Vec<PsiGen> = Vec::with_capacity(total);
            gens.extend((0..s2).map(|i| PsiGen::Point(PointLabel::S(i))));
            gens.extend((0..model.s4_count).map(|i| PsiGen::Point(PointLabel::W(i))));
            gens.extend((0..model.s6_count).map(|i| PsiGen::Point(PointLabel::T(i))));
            let weights: Vec<u8> = gens
                .iter()
                .map(|g| match g {
                    PsiGen::Point(p) => model.weight(*p),
                    PsiGen::SClass => unreachable!(),
                })
                .collect();
            let ones = vec![BigInt::one(); total];
            Some(GeneratorSystem {
                relations: relation_matrix(&weights, &ones),
                gens,
            })
        }
        _ => None,
    };

    Ok(Presentation {
        model: model.clone(),
        reduced,
        full,
    })
}

/// Default-capped variant of [`build_presentation_with`].
pub fn build_presentation(model: &SigmaModel) -> Result<Presentation, CompgroupError> {
    build_presentation_with(model, DEFAULT_FULL_POINTS)
}

/// The solved component group together with the embedding of every
/// `Psi_x` symbol.
#[derive(Debug, Clone)]
pub struct PresentedGroup {
    pub group: FinAbGroup,
    pub gens: Vec<PsiGen>,
    /// `Some(s2)` when sigma2 points are individual generators.
    s2_individual: Option<usize>,
    s4_count: usize,
    s6_count: usize,
}

impl PresentedGroup {
    fn has_sclass(&self) -> bool {
        matches!(self.gens.first(), Some(PsiGen::SClass))
    }

    /// Ambient generator index of a point label.
    pub fn index_of(&self, p: PointLabel) -> Result<usize, CompgroupError> {
        let missing = || CompgroupError::UnknownLabel(p.to_string());
        let base = match self.s2_individual {
            Some(s2) => s2,
            None => usize::from(self.has_sclass()),
        };
        match p {
            PointLabel::S(i) => match self.s2_individual {
                Some(s2) if i < s2 => Ok(i),
                Some(_) => Err(missing()),
                // every sigma2 point maps to the identified class generator
                None if self.has_sclass() => Ok(0),
                None => Err(missing()),
            },
            PointLabel::W(i) if i < self.s4_count => Ok(base + i),
            PointLabel::T(i) if i < self.s6_count => Ok(base + self.s4_count + i),
            _ => Err(missing()),
        }
    }

    /// Image `Psi_x` of a point generator in the group.
    pub fn psi(&self, p: PointLabel) -> Result<GroupElement, CompgroupError> {
        let idx = self.index_of(p)?;
        let mut unit = vec![BigInt::zero(); self.gens.len()];
        unit[idx] = BigInt::one();
        Ok(self.group.element_from_ambient(&unit))
    }

    /// Evaluate a formal combination of `Psi` symbols.
    pub fn eval(&self, expr: &PsiExpr) -> Result<GroupElement, CompgroupError> {
        let mut acc = self.group.zero();
        for (c, p) in &expr.terms {
            let term = self.group.scalar_mul(c, &self.psi(*p)?);
            acc = self.group.add(&acc, &term);
        }
        Ok(acc)
    }
}

fn solve_system(
    sys: &GeneratorSystem,
    s2_individual: Option<usize>,
    s4_count: usize,
    s6_count: usize,
) -> Result<PresentedGroup, CompgroupError> {
    let group = cokernel(sys.relations.clone());
    if group.rank_free() > 0 {
        return Err(CompgroupError::InfiniteQuotient);
    }
    Ok(PresentedGroup {
        group,
        gens: sys.gens.clone(),
        s2_individual,
        s4_count,
        s6_count,
    })
}

/// Solve the collapsed presentation (the production path).
pub fn presented_group(pres: &Presentation) -> Result<PresentedGroup, CompgroupError> {
    solve_system(
        &pres.reduced,
        None,
        pres.model.s4_count,
        pres.model.s6_count,
    )
}

/// Solve the one-generator-per-point presentation, when materialized.
pub fn presented_group_full(
    pres: &Presentation,
) -> Result<Option<PresentedGroup>, CompgroupError> {
    let Some(full) = &pres.full else {
        return Ok(None);
    };
    let s2 = usize::try_from(&pres.model.s2_count).expect("full system exists");
    Ok(Some(solve_system(
        full,
        Some(s2),
        pres.model.s4_count,
        pres.model.s6_count,
    )?))
}

/// Invariant factors of the full presentation without any transform
/// bookkeeping (cheap audit of the collapse optimization).
pub fn full_invariant_factors(pres: &Presentation) -> Option<Vec<BigInt>> {
    pres.full.as_ref().map(|f| invariant_factors_of(&f.relations))
}

/// Formal integer combination of `Psi` symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PsiExpr {
    pub terms: Vec<(BigInt, PointLabel)>,
}

impl PsiExpr {
    pub fn single(p: PointLabel) -> Self {
        PsiExpr {
            terms: vec![(BigInt::one(), p)],
        }
    }

    pub fn scaled(c: i64, p: PointLabel) -> Self {
        PsiExpr {
            terms: vec![(BigInt::from(c), p)],
        }
    }

    pub fn combination(terms: Vec<(i64, PointLabel)>) -> Self {
        PsiExpr {
            terms: terms
                .into_iter()
                .map(|(c, p)| (BigInt::from(c), p))
                .collect(),
        }
    }
}

impl fmt::Display for PsiExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (c, p)) in self.terms.iter().enumerate() {
            if i == 0 {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let a = c.abs();
            if !a.is_one() {
                write!(f, "{a}*")?;
            }
            write!(f, "Psi({p})")?;
        }
        Ok(())
    }
}

/// One direct summand of the closed-form decomposition.
#[derive(Debug, Clone)]
pub struct Summand {
    pub label: String,
    pub order: BigInt,
    pub generator: PsiExpr,
}

/// Closed-form structure of the component group: an ordered list of direct
/// summands (cyclic part first) and the `T_q` matrix on that basis (row `i`
/// is the image of the `i`-th summand generator).
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub case: CaseTag,
    pub summands: Vec<Summand>,
    pub tq: IntMatrix,
    pub notes: Vec<String>,
}

/// Order of the cyclic summand: `2^u 3^v n` in Case 1, and `3n`, `4n`, `12n`
/// in Cases 2-4.
pub fn cyclic_order(inv: &LevelInvariants) -> Result<BigInt, CompgroupError> {
    let k = match inv.case_tag {
        CaseTag::Case1 => 2u32.pow(inv.u as u32) * 3u32.pow(inv.v as u32),
        CaseTag::Case2 => 3,
        CaseTag::Case3 => 4,
        CaseTag::Case4 => 12,
    };
    inv.n_multiple(k)
        .map_err(|e| CompgroupError::DivisibilityViolation(e.to_string()))
}

fn w_of(i1: usize) -> PointLabel {
    PointLabel::W(i1 - 1)
}

fn t_of(i1: usize) -> PointLabel {
    PointLabel::T(i1 - 1)
}

/// The `v`-family of order-3 summands on the sigma6 stratum
/// (`i = 1 .. 2^nu - 1`), shared by Cases 2 and 4:
/// `v_(2k-1) = Psi_(t_(2k-1)) - Psi_(t_(2k))` and
/// `v_(2k) = Psi_(t_(2k-1)) + Psi_(t_(2k)) - Psi_t - Psi_t'` where
/// `t, t'` are the last Frobenius pair.
fn three_family(nu: u32) -> Vec<Summand> {
    let m = 1usize << nu; // s6
    let (t, tp) = (m - 1, m); // 1-based labels of the distinguished pair
    let mut out = Vec::new();
    for i in 1..m {
        let generator = if i % 2 == 1 {
            let k = (i + 1) / 2;
            PsiExpr::combination(vec![(1, t_of(2 * k - 1)), (-1, t_of(2 * k))])
        } else {
            let k = i / 2;
            PsiExpr::combination(vec![
                (1, t_of(2 * k - 1)),
                (1, t_of(2 * k)),
                (-1, t_of(t)),
                (-1, t_of(tp)),
            ])
        };
        out.push(Summand {
            label: format!("v{i}"),
            order: BigInt::from(3),
            generator,
        });
    }
    out
}

/// The `u`-family of order-2 summands on the sigma4 stratum
/// (`i = 1 .. 2^nu - 2`), shared by Cases 3 and 4. The last pair has its own
/// generators: `u_(2^nu-3) = Psi_(w_(2^nu-3)) - Psi_w` and
/// `u_(2^nu-2) = Psi_(w_(2^nu-3)) - Psi_(w_(2^nu-2))`.
fn two_family(nu: u32) -> Vec<Summand> {
    let m = 1usize << nu; // s4
    let (w, wp) = (m - 1, m);
    let mut out = Vec::new();
    let pairs = m / 2 - 1; // k = 1 .. 2^(nu-1) - 1, the last one special
    for k in 1..=pairs {
        let (odd, even) = if k < pairs {
            (
                PsiExpr::combination(vec![(1, w_of(2 * k - 1)), (-1, w_of(w))]),
                PsiExpr::combination(vec![
                    (1, w_of(2 * k - 1)),
                    (1, w_of(2 * k)),
                    (-1, w_of(w)),
                    (-1, w_of(wp)),
                ]),
            )
        } else {
            (
                PsiExpr::combination(vec![(1, w_of(m - 3)), (-1, w_of(w))]),
                PsiExpr::combination(vec![(1, w_of(m - 3)), (-1, w_of(m - 2))]),
            )
        };
        out.push(Summand {
            label: format!("u{}", 2 * k - 1),
            order: BigInt::from(2),
            generator: odd,
        });
        out.push(Summand {
            label: format!("u{}", 2 * k),
            order: BigInt::from(2),
            generator: even,
        });
    }
    out
}

/// `T_q` on the summand basis, layout [cyclic, u-family, v-family].
/// `psi_w_coeff` is the coefficient in front of `Psi_w` in the two
/// exceptional images (`2n` in Case 3, `6n` in Case 4).
fn tq_matrix_on(
    case: CaseTag,
    nu: u32,
    u_count: usize,
    v_count: usize,
    psi_w_coeff: Option<&BigInt>,
) -> IntMatrix {
    let dim = 1 + u_count + v_count;
    let mut m = IntMatrix::zeros(dim, dim);
    match case {
        CaseTag::Case1 | CaseTag::Case2 => {
            m[(0, 0)] = BigInt::one();
        }
        CaseTag::Case3 | CaseTag::Case4 => {
            let coeff = psi_w_coeff.expect("coefficient required");
            // T_q(Psi_w) = (1 + coeff) Psi_w + sum of u_(2i), i = 1 .. 2^(nu-1)-1
            m[(0, 0)] = coeff + BigInt::one();
            for i in 1..(1usize << (nu - 1)) {
                m[(0, 2 * i)] = BigInt::one();
            }
            let pairs = (1usize << (nu - 1)) - 1;
            for k in 1..=pairs {
                let (row_odd, row_even) = (2 * k - 1, 2 * k);
                if k < pairs {
                    // T_q(u_(2k-1)) = u_(2k-1) + u_(2k); T_q(u_(2k)) = u_(2k)
                    m[(row_odd, row_odd)] = BigInt::one();
                    m[(row_odd, row_even)] = BigInt::one();
                } else {
                    // T_q(u_(2^nu-3)) = coeff * Psi_w + u_(2^nu-3)
                    //                   + sum of u_(2i), i = 1 .. 2^(nu-1)-2
                    m[(row_odd, 0)] = coeff.clone();
                    m[(row_odd, row_odd)] = BigInt::one();
                    for i in 1..(1usize << (nu - 1)) - 1 {
                        m[(row_odd, 2 * i)] = BigInt::one();
                    }
                }
                m[(row_even, row_even)] = BigInt::one();
            }
        }
    }
    // v-family: T_q acts on v_i by (-1)^i.
    let base = 1 + u_count;
    for i in 1..=v_count {
        m[(base + i - 1, base + i - 1)] = if i % 2 == 1 {
            -BigInt::one()
        } else {
            BigInt::one()
        };
    }
    m
}

pub(crate) fn closed_tq_matrix(
    case: CaseTag,
    inv: &LevelInvariants,
    u_count: usize,
    v_count: usize,
) -> Result<IntMatrix, CompgroupError> {
    let coeff = match case {
        CaseTag::Case3 => Some(
            inv.n_multiple(2)
                .map_err(|e| CompgroupError::DivisibilityViolation(e.to_string()))?,
        ),
        CaseTag::Case4 => Some(
            inv.n_multiple(6)
                .map_err(|e| CompgroupError::DivisibilityViolation(e.to_string()))?,
        ),
        _ => None,
    };
    Ok(tq_matrix_on(case, inv.nu, u_count, v_count, coeff.as_ref()))
}

/// Closed-form decomposition of the component group with explicit
/// generators and the `T_q` matrix.
pub fn closed_form(inv: &LevelInvariants) -> Result<Decomposition, CompgroupError> {
    let case = inv.case_tag;
    let cyclic = cyclic_order(inv)?;
    let mut notes = Vec::new();
    let mut summands = Vec::new();

    match case {
        CaseTag::Case1 => {
            let generator = match (inv.u, inv.v) {
                (0, 0) => PsiExpr::single(PointLabel::S(0)),
                (0, 1) => PsiExpr::single(PointLabel::T(0)),
                // (1, 0) and (1, 1): the aut-4 point generates.
                _ => PsiExpr::single(PointLabel::W(0)),
            };
            if (inv.u, inv.v) == (1, 1) {
                notes.push(
                    "case (u,v)=(1,1), nu=0: cyclic order taken as 2^u*3^v*n = 6n, \
                     which the presentation forces; the alternative multiplier \
                     2u+3v = 5 would give a non-integral order"
                        .to_string(),
                );
            }
            summands.push(Summand {
                label: "Phi".into(),
                order: cyclic,
                generator,
            });
        }
        CaseTag::Case2 => {
            summands.push(Summand {
                label: "B0".into(),
                order: cyclic,
                generator: PsiExpr::scaled(3, PointLabel::T(0)),
            });
            notes.push(
                "B0 generator emitted as 3*Psi(t1) = Psi(s), the class of the sigma2 points \
                 (the cyclic cuspidal part)"
                    .into(),
            );
            summands.extend(three_family(inv.nu));
        }
        CaseTag::Case3 => {
            summands.push(Summand {
                label: "A0".into(),
                order: cyclic,
                generator: PsiExpr::single(w_of((1 << inv.nu) - 1)),
            });
            summands.extend(two_family(inv.nu));
        }
        CaseTag::Case4 => {
            summands.push(Summand {
                label: "A0".into(),
                order: cyclic,
                generator: PsiExpr::single(w_of((1 << inv.nu) - 1)),
            });
            summands.extend(two_family(inv.nu));
            summands.extend(three_family(inv.nu));
        }
    }

    let u_count = summands.iter().filter(|s| s.label.starts_with('u')).count();
    let v_count = summands.iter().filter(|s| s.label.starts_with('v')).count();
    let tq = closed_tq_matrix(case, inv, u_count, v_count)?;

    Ok(Decomposition {
        case,
        summands,
        tq,
        notes,
    })
}

impl Decomposition {
    /// Invariant factors of the decomposition, in canonical ascending chain
    /// form. Only the primes 2 and 3 can be shared between summands, so the
    /// recombination needs no general factorization.
    pub fn invariant_factors(&self) -> Vec<BigInt> {
        let mut e2: Vec<u32> = Vec::new();
        let mut e3: Vec<u32> = Vec::new();
        let mut rest = BigInt::one();
        for s in &self.summands {
            let mut o = s.order.clone();
            if o.is_one() {
                continue;
            }
            let mut x = 0;
            while (&o % BigInt::from(2)).is_zero() {
                o /= 2;
                x += 1;
            }
            let mut y = 0;
            while (&o % BigInt::from(3)).is_zero() {
                o /= 3;
                y += 1;
            }
            if x > 0 {
                e2.push(x);
            }
            if y > 0 {
                e3.push(y);
            }
            if !o.is_one() {
                assert!(rest.is_one(), "only one summand may carry primes > 3");
                rest = o;
            }
        }
        e2.sort_unstable_by(|a, b| b.cmp(a));
        e3.sort_unstable_by(|a, b| b.cmp(a));
        let len = e2.len().max(e3.len()).max(usize::from(!rest.is_one()));
        let mut chain: Vec<BigInt> = (0..len)
            .map(|j| {
                let mut d = BigInt::one();
                if let Some(&x) = e2.get(j) {
                    d *= BigInt::from(2u32).pow(x);
                }
                if let Some(&y) = e3.get(j) {
                    d *= BigInt::from(3u32).pow(y);
                }
                if j == 0 {
                    d *= &rest;
                }
                d
            })
            .collect();
        chain.reverse();
        chain
    }

    /// Product of the summand orders.
    pub fn order(&self) -> BigInt {
        self.summands.iter().map(|s| &s.order).product()
    }
}

/// One validated identity (or a failure with the offending identity).
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn all_ok(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.ok)
    }

    pub(crate) fn push(&mut self, name: impl Into<String>, ok: bool, detail: impl Into<String>) {
        self.checks.push(CheckResult {
            name: name.into(),
            ok,
            detail: detail.into(),
        });
    }
}

/// Verify the closed form inside the presented group: every summand
/// generator has exactly the claimed order, the sum of the summands is
/// direct, and the total order matches the presented group. Failures are
/// report entries, not errors.
pub fn verify_decomposition(
    pg: &PresentedGroup,
    dec: &Decomposition,
) -> Result<VerificationReport, CompgroupError> {
    let mut report = VerificationReport::default();

    let mut gens = Vec::with_capacity(dec.summands.len());
    for s in &dec.summands {
        let g = pg.eval(&s.generator)?;
        let order = abelian::element_order(&pg.group, &g)?;
        report.push(
            format!("order({})", s.label),
            order == s.order,
            format!("order({}) = {order}, claimed {}", s.generator, s.order),
        );
        gens.push(g);
    }

    let claimed: BigInt = dec.order();
    let span = abelian::subgroup_order(&pg.group, &gens)?;
    report.push(
        "directness",
        span == claimed,
        format!(
            "subgroup generated by all summand generators has order {span}, \
             product of claimed orders {claimed}"
        ),
    );

    let total = pg.group.order().ok_or(CompgroupError::InfiniteQuotient)?;
    report.push(
        "total-order",
        claimed == total,
        format!("product of summand orders {claimed}, presented group order {total}"),
    );

    let dec_factors = dec.invariant_factors();
    let pres_factors = pg.group.invariant_factors().to_vec();
    report.push(
        "invariant-factors",
        dec_factors == pres_factors,
        format!("closed form {dec_factors:?}, presentation {pres_factors:?}"),
    );

    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levels::level_invariants;

    fn big(x: i64) -> BigInt {
        BigInt::from(x)
    }

    fn setup(n: u64, q: u64) -> (LevelInvariants, Presentation) {
        let inv = level_invariants(n, q).unwrap();
        let model = build_sigma_model(&inv, None).unwrap();
        let pres = build_presentation(&model).unwrap();
        (inv, pres)
    }

    #[test]
    fn sigma_model_examples() {
        let inv = level_invariants(7, 5).unwrap();
        let m = build_sigma_model(&inv, None).unwrap();
        assert_eq!(m.s2_count(), &big(2));
        assert_eq!(m.s4_count(), 0);
        assert_eq!(m.s6_count(), 2);
        assert_eq!(m.frob(PointLabel::T(0)), PointLabel::T(1));
        assert_eq!(m.frob(PointLabel::T(1)), PointLabel::T(0));

        let inv = level_invariants(1, 13).unwrap();
        let m = build_sigma_model(&inv, None).unwrap();
        assert_eq!(m.s2_count(), &big(1));
        assert_eq!((m.s4_count(), m.s6_count()), (0, 0));

        let inv = level_invariants(13, 7).unwrap();
        let m = build_sigma_model(&inv, None).unwrap();
        assert_eq!(m.s2_count(), &big(6));
        assert_eq!(m.s4_count(), 2);
        assert_eq!(m.frob(PointLabel::W(0)), PointLabel::W(1));
    }

    #[test]
    fn frob2_must_be_permutation() {
        let inv = level_invariants(7, 5).unwrap(); // s2 = 2
        assert!(build_sigma_model(&inv, Some(vec![1, 0])).is_ok());
        assert_eq!(
            build_sigma_model(&inv, Some(vec![0, 0])),
            Err(CompgroupError::InvalidPermutation).map(|_: SigmaModel| unreachable!())
        );
        assert!(build_sigma_model(&inv, Some(vec![0])).is_err());
    }

    #[test]
    fn presentation_n1_q11() {
        let (_, pres) = setup(1, 11);
        // generators {psi_w, psi_t}, relations {2 psi_w - 3 psi_t, psi_w + psi_t}
        let full = pres.full.as_ref().unwrap();
        assert_eq!(full.gens.len(), 2);
        assert_eq!(
            full.relations,
            IntMatrix::from_i64(2, &[&[2, -3], &[1, 1]])
        );
        let pg = presented_group_full(&pres).unwrap().unwrap();
        assert_eq!(pg.group.invariant_factors(), &[big(5)]);
        // reduced system agrees
        let pg2 = presented_group(&pres).unwrap();
        assert_eq!(pg2.group.invariant_factors(), &[big(5)]);
    }

    #[test]
    fn presentation_n1_q13_trivial() {
        let (_, pres) = setup(1, 13);
        let pg = presented_group(&pres).unwrap();
        assert!(pg.group.invariant_factors().is_empty());
        assert_eq!(pg.group.order(), Some(big(1)));
    }

    #[test]
    fn presentation_n7_q5() {
        let (_, pres) = setup(7, 5);
        let full = pres.full.as_ref().unwrap();
        assert_eq!(full.gens.len(), 4);
        // star at s1 plus the sum relation
        assert_eq!(
            full.relations,
            IntMatrix::from_i64(4, &[
                &[1, -1, 0, 0],
                &[1, 0, -3, 0],
                &[1, 0, 0, -3],
                &[1, 1, 1, 1],
            ])
        );
        let pg = presented_group_full(&pres).unwrap().unwrap();
        assert_eq!(pg.group.invariant_factors(), &[big(24)]);
        assert_eq!(
            presented_group(&pres).unwrap().group.invariant_factors(),
            &[big(24)]
        );
    }

    #[test]
    fn presentation_n4_q7() {
        let (_, pres) = setup(4, 7);
        let pg = presented_group(&pres).unwrap();
        assert_eq!(pg.group.invariant_factors(), &[big(3)]);
    }

    #[test]
    fn psi_images_collapse_in_reduced_system() {
        let (_, pres) = setup(7, 5);
        let pg = presented_group(&pres).unwrap();
        // all sigma2 labels resolve to the class generator
        assert_eq!(pg.psi(PointLabel::S(0)).unwrap(), pg.psi(PointLabel::S(1)).unwrap());
        // 3 Psi_t1 = Psi_s
        let lhs = pg.group.scalar_mul(&big(3), &pg.psi(PointLabel::T(0)).unwrap());
        assert_eq!(lhs, pg.psi(PointLabel::S(0)).unwrap());
        assert!(pg.psi(PointLabel::W(0)).is_err());
    }

    #[test]
    fn closed_form_case2_n7_q5() {
        let inv = level_invariants(7, 5).unwrap();
        let dec = closed_form(&inv).unwrap();
        assert_eq!(dec.case, CaseTag::Case2);
        assert_eq!(dec.summands.len(), 2);
        assert_eq!(dec.summands[0].label, "B0");
        assert_eq!(dec.summands[0].order, big(8));
        assert_eq!(dec.summands[0].generator.to_string(), "3*Psi(t1)");
        assert_eq!(dec.summands[1].label, "v1");
        assert_eq!(dec.summands[1].order, big(3));
        assert_eq!(dec.summands[1].generator.to_string(), "Psi(t1) - Psi(t2)");
        assert_eq!(dec.tq, IntMatrix::from_i64(2, &[&[1, 0], &[0, -1]]));
        assert_eq!(dec.invariant_factors(), vec![big(24)]);
    }

    #[test]
    fn closed_form_case3_n13_q7() {
        let inv = level_invariants(13, 7).unwrap();
        let dec = closed_form(&inv).unwrap();
        assert_eq!(dec.case, CaseTag::Case3);
        assert_eq!(dec.summands.len(), 1); // nu = 1: no u-family
        assert_eq!(dec.summands[0].label, "A0");
        assert_eq!(dec.summands[0].order, big(28));
        assert_eq!(dec.summands[0].generator.to_string(), "Psi(w1)");
        assert_eq!(dec.tq, IntMatrix::from_i64(1, &[&[15]])); // 1 + 2n, n = 7
    }

    #[test]
    fn closed_form_case1_anomaly_n1_q11() {
        let inv = level_invariants(1, 11).unwrap();
        let dec = closed_form(&inv).unwrap();
        assert_eq!(dec.case, CaseTag::Case1);
        assert_eq!(dec.summands[0].order, big(5)); // 6n = (q-1)/2
        assert!(!dec.notes.is_empty());
        assert_eq!(dec.invariant_factors(), vec![big(5)]);
    }

    #[test]
    fn closed_form_case3_n221_q7() {
        let inv = level_invariants(221, 7).unwrap();
        let dec = closed_form(&inv).unwrap();
        assert_eq!(dec.case, CaseTag::Case3);
        let labels: Vec<&str> = dec.summands.iter().map(|s| s.label.as_str()).collect();
        assert_eq!(labels, vec!["A0", "u1", "u2"]);
        assert_eq!(dec.summands[0].order, big(504));
        assert_eq!(dec.summands[1].generator.to_string(), "Psi(w1) - Psi(w3)");
        assert_eq!(dec.summands[2].generator.to_string(), "Psi(w1) - Psi(w2)");
        // T_q rows: Psi_w -> 253 Psi_w + u2; u1 -> 252 Psi_w + u1; u2 -> u2
        assert_eq!(
            dec.tq,
            IntMatrix::from_i64(3, &[&[253, 0, 1], &[252, 1, 0], &[0, 0, 1]])
        );
        assert_eq!(
            dec.invariant_factors(),
            vec![big(2), big(2), big(504)]
        );
    }

    #[test]
    fn closed_form_case4_n13_q11() {
        let inv = level_invariants(13, 11).unwrap();
        let dec = closed_form(&inv).unwrap();
        assert_eq!(dec.case, CaseTag::Case4);
        let labels: Vec<&str> = dec.summands.iter().map(|s| s.label.as_str()).collect();
        assert_eq!(labels, vec!["A0", "v1"]);
        assert_eq!(dec.summands[0].order, big(140)); // 12n
        assert_eq!(
            dec.tq,
            IntMatrix::from_i64(2, &[&[71, 0], &[0, -1]]) // 1 + 6n = 71
        );
        assert_eq!(dec.invariant_factors(), vec![big(420)]);
    }

    #[test]
    fn verify_decomposition_examples() {
        for (n, q) in [(7u64, 5u64), (1, 13), (4, 7), (1, 11), (13, 7), (221, 7), (13, 11)] {
            let (inv, pres) = setup(n, q);
            let pg = presented_group(&pres).unwrap();
            let dec = closed_form(&inv).unwrap();
            let report = verify_decomposition(&pg, &dec).unwrap();
            assert!(
                report.all_ok(),
                "({n}, {q}): {:?}",
                report.failures().collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn verify_n221_q7_orders() {
        let (inv, pres) = setup(221, 7);
        let pg = presented_group(&pres).unwrap();
        let dec = closed_form(&inv).unwrap();
        // order(Psi_w) = 504, u1 and u2 independent of order 2, total 2016
        let a0 = pg.eval(&dec.summands[0].generator).unwrap();
        assert_eq!(abelian::element_order(&pg.group, &a0).unwrap(), big(504));
        assert_eq!(pg.group.order(), Some(big(2016)));
    }

    #[test]
    fn collapse_is_invisible_small_sweep() {
        // reduced and full presentations give identical invariant factors
        for q in crate::arith::primes_in(5, 23) {
            for n in 1..=30u64 {
                if n % q == 0 {
                    continue;
                }
                let (_, pres) = setup(n, q);
                let reduced = presented_group(&pres).unwrap();
                let full = full_invariant_factors(&pres).expect("small models have full systems");
                assert_eq!(
                    reduced.group.invariant_factors(),
                    &full[..],
                    "mismatch at ({n}, {q})"
                );
            }
        }
    }

    #[test]
    fn empty_sigma_is_impossible_but_guarded() {
        let model = SigmaModel {
            s2_count: BigInt::zero(),
            s4_count: 0,
            s6_count: 0,
            frob2: None,
            frob4: vec![],
            frob6: vec![],
        };
        assert!(matches!(
            build_presentation(&model),
            Err(CompgroupError::EmptySigma)
        ));
    }
}
