//! The perturbed Lie-Poisson structure on W* = g* (+) V*:
//!
//! ```text
//! {f,g}(p) = p([A+x, B+y]) + Phi(p)(x, y),   df_p = A + x, dg_p = B + y,
//! ```
//!
//! with Phi(p) = phi2(p, p, ., .) + c sigma for the admissible map. The
//! bracket, Jacobiator, and admissibility conditions are verified as exact
//! polynomial identities; the bivector rank is computed exactly at rational
//! points.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::curvature::{curvature_space, jet_from_phi2, jet_space, JetElem};
use crate::linalg::{self, DenseMatrix};
use crate::rep::{rep_data, RepData, RepError, RepSpec};
use crate::scalar::{random_rat, Scalar};

/// Coordinate indexing on W* = g* (+) V*: the first `dim_g` variables are
/// a-components, the remaining `dim_v` are b-components.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseCoords {
    pub dim_g: usize,
    pub dim_v: usize,
}

impl PhaseCoords {
    pub fn of(rep: &RepData) -> Self {
        PhaseCoords {
            dim_g: rep.dim_g,
            dim_v: rep.dim_v,
        }
    }

    pub fn dim_w(&self) -> usize {
        self.dim_g + self.dim_v
    }

    pub fn a_var(&self, i: usize) -> usize {
        debug_assert!(i < self.dim_g);
        i
    }

    pub fn b_var(&self, s: usize) -> usize {
        debug_assert!(s < self.dim_v);
        self.dim_g + s
    }

    pub fn var_name(&self, v: usize) -> String {
        if v < self.dim_g {
            format!("a{}", v + 1)
        } else {
            format!("b{}", v - self.dim_g + 1)
        }
    }
}

/// Sparse multivariate polynomial with exact coefficients, in canonical
/// monomial normal form (zero coefficients removed, exponents dense).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyFn {
    pub nvars: usize,
    pub terms: BTreeMap<Vec<u16>, Scalar>,
}

impl PolyFn {
    pub fn zero(nvars: usize) -> Self {
        PolyFn {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: Scalar) -> Self {
        let mut p = PolyFn::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    pub fn var(nvars: usize, v: usize) -> Self {
        let mut exp = vec![0u16; nvars];
        exp[v] = 1;
        let mut p = PolyFn::zero(nvars);
        p.terms.insert(exp, Scalar::one());
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&x| x as usize).sum())
            .max()
            .unwrap_or(0)
    }

    fn insert(&mut self, exp: Vec<u16>, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(exp) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = &*e.get() + &c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &PolyFn) -> PolyFn {
        debug_assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.insert(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &PolyFn) -> PolyFn {
        debug_assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.insert(e.clone(), -c);
        }
        out
    }

    pub fn neg(&self) -> PolyFn {
        PolyFn {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, factor: &Scalar) -> PolyFn {
        if factor.is_zero() {
            return PolyFn::zero(self.nvars);
        }
        PolyFn {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), c * factor))
                .collect(),
        }
    }

    pub fn mul(&self, other: &PolyFn) -> PolyFn {
        debug_assert_eq!(self.nvars, other.nvars);
        let mut out = PolyFn::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let exp: Vec<u16> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.insert(exp, c1 * c2);
            }
        }
        out
    }

    pub fn deriv(&self, v: usize) -> PolyFn {
        let mut out = PolyFn::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[v] == 0 {
                continue;
            }
            let mut exp = e.clone();
            exp[v] -= 1;
            out.insert(exp, c * &Scalar::from_int(e[v] as i64));
        }
        out
    }

    pub fn eval(&self, point: &[Scalar]) -> Scalar {
        debug_assert_eq!(point.len(), self.nvars);
        let mut acc = Scalar::zero();
        for (e, c) in &self.terms {
            let mut term = c.clone();
            for (v, &k) in e.iter().enumerate() {
                for _ in 0..k {
                    term = &term * &point[v];
                }
            }
            acc += &term;
        }
        acc
    }

    /// Human-readable form for failure witnesses.
    pub fn display(&self, coords: &PhaseCoords) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut parts = Vec::new();
        for (e, c) in &self.terms {
            let mut factors = Vec::new();
            let cs = c.to_string_exact();
            if cs != "1" || e.iter().all(|&x| x == 0) {
                factors.push(cs);
            }
            for (v, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => factors.push(coords.var_name(v)),
                    _ => factors.push(format!("{}^{}", coords.var_name(v), k)),
                }
            }
            parts.push(factors.join("*"));
        }
        parts.join(" + ")
    }
}

/// The map phi = phi2 + c sigma generating the perturbed bracket: a
/// quadratic jet part plus a constant invariant 2-form. Construct the
/// canonical admissible map with `make_phi`; `from_quadratic` accepts
/// arbitrary quadratic data (used for negative controls) and performs no
/// admissibility check.
pub struct AdmissibleMap {
    pub rep: Arc<RepData>,
    pub quad: JetElem,
    pub c: Scalar,
    /// phi(p)(v_s, v_t) per Lambda^2 pair, a polynomial in the a-variables
    /// (represented over all of W* for uniformity).
    pub phi_forms: Vec<PolyFn>,
}

impl AdmissibleMap {
    /// The 2-form value phi(p)(v_s, v_t) for arbitrary s, t.
    pub fn phi_form_signed(&self, s: usize, t: usize) -> PolyFn {
        let nvars = self.rep.dim_g + self.rep.dim_v;
        match s.cmp(&t) {
            std::cmp::Ordering::Less => self.phi_forms[self.rep.pair_pos[&(s, t)]].clone(),
            std::cmp::Ordering::Greater => self.phi_forms[self.rep.pair_pos[&(t, s)]].neg(),
            std::cmp::Ordering::Equal => PolyFn::zero(nvars),
        }
    }
}

/// Builds phi = phi2 + c sigma with the canonical jet generator: the
/// B-transported phi2 for tensor families, the computed J2 generator
/// (normalized to leading coefficient 1) otherwise.
pub fn make_phi(spec: RepSpec, c: Scalar) -> Result<AdmissibleMap, RepError> {
    let rep = rep_data(spec)?;
    let quad = if spec.is_tensor() && !spec.include_center {
        jet_from_phi2(&rep)?
    } else {
        let j2 = jet_space(spec)?;
        if j2.dim() != 1 {
            return Err(RepError::Unsupported(format!(
                "no canonical jet generator: dim J2 = {}",
                j2.dim()
            )));
        }
        let gen = &j2.basis[0];
        let lead = gen
            .coeffs
            .iter()
            .find(|c| !c.is_zero())
            .expect("nonzero generator")
            .clone();
        gen.scale(&lead.recip())
    };
    from_quadratic(rep, quad, c)
}

/// Wraps arbitrary quadratic data (no admissibility check performed).
pub fn from_quadratic(
    rep: Arc<RepData>,
    quad: JetElem,
    c: Scalar,
) -> Result<AdmissibleMap, RepError> {
    if !c.is_zero() && rep.sigma_mat.is_none() {
        return Err(RepError::Unsupported(
            "constant term requested but the family carries no invariant 2-form".to_string(),
        ));
    }
    let coords = PhaseCoords::of(&rep);
    let nvars = coords.dim_w();
    let mut phi_forms = Vec::with_capacity(rep.pairs.len());
    for (pos, &(s, t)) in rep.pairs.iter().enumerate() {
        let mut p = PolyFn::zero(nvars);
        for i in 0..rep.dim_g {
            for j in 0..rep.dim_g {
                let tc = quad.coeff(&rep, i, j, pos);
                if tc.is_zero() {
                    continue;
                }
                let mut exp = vec![0u16; nvars];
                exp[coords.a_var(i)] += 1;
                exp[coords.a_var(j)] += 1;
                p.insert(exp, tc.clone());
            }
        }
        if !c.is_zero() {
            let sig = rep.sigma_mat.as_ref().expect("checked above").get(s, t);
            if !sig.is_zero() {
                p.insert(vec![0u16; nvars], &c * sig);
            }
        }
        phi_forms.push(p);
    }
    Ok(AdmissibleMap {
        rep,
        quad,
        c,
        phi_forms,
    })
}

/// Admissibility report: condition (i) is infinitesimal G-equivariance of
/// phi as a polynomial identity, condition (ii) is d phi(p) in K(g) for all
/// p (checked monomial-by-monomial).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdmissibilityReport {
    pub equivariant: bool,
    pub derivative_in_curvature_space: bool,
    pub witness: Option<String>,
}

impl AdmissibilityReport {
    pub fn passed(&self) -> bool {
        self.equivariant && self.derivative_in_curvature_space
    }
}

pub fn admissibility_check(phi: &AdmissibleMap) -> Result<AdmissibilityReport, RepError> {
    let rep = &phi.rep;
    let coords = PhaseCoords::of(rep);
    let nvars = coords.dim_w();
    let mut witness = None;

    // (i) d phi_p(ad*_a p) = a . phi(p) for every g basis element a, as an
    // exact polynomial identity per 2-form component.
    let mut equivariant = true;
    'outer_i: for a in 0..rep.dim_g {
        // Coadjoint direction: (ad*_a p)_j = -p([a, g_j]) = -sum_k C^k_{a,j} a_k.
        let coad: Vec<PolyFn> = (0..rep.dim_g)
            .map(|j| {
                let mut p = PolyFn::zero(nvars);
                for (k, c) in rep.struct_consts[a][j].iter().enumerate() {
                    if !c.is_zero() {
                        let mut exp = vec![0u16; nvars];
                        exp[coords.a_var(k)] = 1;
                        p.insert(exp, -c);
                    }
                }
                p
            })
            .collect();
        let e = &rep.action[a];
        for (pos, &(s, t)) in rep.pairs.iter().enumerate() {
            let mut lhs = PolyFn::zero(nvars);
            for (j, dir) in coad.iter().enumerate() {
                if dir.is_zero() {
                    continue;
                }
                let d = phi.phi_forms[pos].deriv(coords.a_var(j));
                if !d.is_zero() {
                    lhs = lhs.add(&d.mul(dir));
                }
            }
            // (a . phi(p))(v_s, v_t) = -phi(p)(E_a v_s, v_t) - phi(p)(v_s, E_a v_t)
            let mut rhs = PolyFn::zero(nvars);
            for u in 0..rep.dim_v {
                let eus = e.get(u, s);
                if !eus.is_zero() {
                    rhs = rhs.sub(&phi.phi_form_signed(u, t).scale(eus));
                }
                let eut = e.get(u, t);
                if !eut.is_zero() {
                    rhs = rhs.sub(&phi.phi_form_signed(s, u).scale(eut));
                }
            }
            let diff = lhs.sub(&rhs);
            if !diff.is_zero() {
                equivariant = false;
                witness = Some(format!(
                    "equivariance fails for a = {} on the ({}, {}) component: residual {}",
                    rep.g_labels[a],
                    rep.v_labels[s],
                    rep.v_labels[t],
                    diff.display(&coords)
                ));
                break 'outer_i;
            }
        }
    }

    // (ii) d phi(p) lies in span K(g) for all p: every monomial coefficient
    // of the g-indexed family of 2-forms must lie in the span.
    let kspace = curvature_space(rep.spec)?;
    let kflat = kspace.basis_flat();
    let mut in_k = true;
    let mut monomials: BTreeSet<Vec<u16>> = BTreeSet::new();
    let derivs: Vec<Vec<PolyFn>> = (0..rep.dim_g)
        .map(|j| {
            phi.phi_forms
                .iter()
                .map(|f| f.deriv(coords.a_var(j)))
                .collect()
        })
        .collect();
    for row in &derivs {
        for d in row {
            monomials.extend(d.terms.keys().cloned());
        }
    }
    'outer_ii: for mono in &monomials {
        let mut vec = vec![Scalar::zero(); rep.pairs.len() * rep.dim_g];
        for (j, row) in derivs.iter().enumerate() {
            for (pos, d) in row.iter().enumerate() {
                if let Some(c) = d.terms.get(mono) {
                    vec[pos * rep.dim_g + j] = c.clone();
                }
            }
        }
        if !linalg::span_contains(&kflat, &vec).expect("consistent ambient") {
            in_k = false;
            let mut mono_poly = PolyFn::zero(nvars);
            mono_poly.insert(mono.clone(), Scalar::one());
            witness.get_or_insert_with(|| {
                format!(
                    "d phi(p) leaves the curvature space at monomial {}",
                    mono_poly.display(&coords)
                )
            });
            break 'outer_ii;
        }
    }

    Ok(AdmissibilityReport {
        equivariant,
        derivative_in_curvature_space: in_k,
        witness,
    })
}

/// A deterministic symmetric quadratic map outside J2, for negative
/// controls: the first S^2 g (x) Lambda^2 V* basis tensor whose flattening
/// is not in the span of J2.
pub fn non_admissible_control(rep: &Arc<RepData>) -> Result<JetElem, RepError> {
    let j2 = jet_space(rep.spec)?;
    let j2_flat: Vec<Vec<Scalar>> = j2.basis.iter().map(|b| b.coeffs.clone()).collect();
    let n_pairs = rep.pairs.len();
    for &(i, j) in &rep.sym_pairs {
        for pos in 0..n_pairs {
            let mut jet = JetElem::zero(rep);
            jet.coeffs[(i * rep.dim_g + j) * n_pairs + pos] = Scalar::one();
            jet.coeffs[(j * rep.dim_g + i) * n_pairs + pos] = Scalar::one();
            if !linalg::span_contains(&j2_flat, &jet.coeffs).expect("ambient") {
                return Ok(jet);
            }
        }
    }
    Err(RepError::Unsupported(
        "every symmetric tensor lies in J2".to_string(),
    ))
}

/// The perturbed Lie-Poisson bracket as an exact polynomial.
pub fn poisson_bracket(f: &PolyFn, g: &PolyFn, phi: &AdmissibleMap) -> PolyFn {
    let rep = &phi.rep;
    let coords = PhaseCoords::of(rep);
    let nvars = coords.dim_w();
    debug_assert_eq!(f.nvars, nvars);
    debug_assert_eq!(g.nvars, nvars);

    let fa: Vec<PolyFn> = (0..rep.dim_g).map(|i| f.deriv(coords.a_var(i))).collect();
    let ga: Vec<PolyFn> = (0..rep.dim_g).map(|i| g.deriv(coords.a_var(i))).collect();
    let fb: Vec<PolyFn> = (0..rep.dim_v).map(|s| f.deriv(coords.b_var(s))).collect();
    let gb: Vec<PolyFn> = (0..rep.dim_v).map(|s| g.deriv(coords.b_var(s))).collect();

    let mut out = PolyFn::zero(nvars);

    // p([A, B]) over the g-part of the differentials.
    for i in 0..rep.dim_g {
        for j in (i + 1)..rep.dim_g {
            let anti = fa[i].mul(&ga[j]).sub(&fa[j].mul(&ga[i]));
            if anti.is_zero() {
                continue;
            }
            for (k, c) in rep.struct_consts[i][j].iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let ak = PolyFn::var(nvars, coords.a_var(k));
                out = out.add(&anti.mul(&ak).scale(c));
            }
        }
    }

    // p(A . y - B . x) mixed terms.
    for i in 0..rep.dim_g {
        for s in 0..rep.dim_v {
            let mixed = fa[i].mul(&gb[s]).sub(&ga[i].mul(&fb[s]));
            if mixed.is_zero() {
                continue;
            }
            for t in 0..rep.dim_v {
                let d = rep.action[i].get(t, s);
                if d.is_zero() {
                    continue;
                }
                let bt = PolyFn::var(nvars, coords.b_var(t));
                out = out.add(&mixed.mul(&bt).scale(d));
            }
        }
    }

    // Phi(p)(x, y) over the V-part.
    for (pos, &(s, t)) in rep.pairs.iter().enumerate() {
        if phi.phi_forms[pos].is_zero() {
            continue;
        }
        let anti = fb[s].mul(&gb[t]).sub(&fb[t].mul(&gb[s]));
        if !anti.is_zero() {
            out = out.add(&anti.mul(&phi.phi_forms[pos]));
        }
    }

    out
}

/// {f,{g,h}} + {g,{h,f}} + {h,{f,g}} in normal form.
pub fn jacobiator(f: &PolyFn, g: &PolyFn, h: &PolyFn, phi: &AdmissibleMap) -> PolyFn {
    let t1 = poisson_bracket(f, &poisson_bracket(g, h, phi), phi);
    let t2 = poisson_bracket(g, &poisson_bracket(h, f, phi), phi);
    let t3 = poisson_bracket(h, &poisson_bracket(f, g, phi), phi);
    t1.add(&t2).add(&t3)
}

/// The bivector matrix Lambda(p)(w, w') = p([w,w']) + Phi(p)(x_w, x_w') on
/// the W basis, at an exact rational point.
pub fn bivector_exact(phi: &AdmissibleMap, point: &[Scalar]) -> DenseMatrix {
    let rep = &phi.rep;
    let dim_g = rep.dim_g;
    let dim_v = rep.dim_v;
    let dim_w = dim_g + dim_v;
    debug_assert_eq!(point.len(), dim_w);
    let mut m = DenseMatrix::zero(dim_w, dim_w);
    for i in 0..dim_g {
        for j in (i + 1)..dim_g {
            let mut acc = Scalar::zero();
            for (k, c) in rep.struct_consts[i][j].iter().enumerate() {
                if !c.is_zero() {
                    acc += &(c * &point[k]);
                }
            }
            if !acc.is_zero() {
                m.set(i, j, acc.clone());
                m.set(j, i, -&acc);
            }
        }
    }
    for i in 0..dim_g {
        for s in 0..dim_v {
            let mut acc = Scalar::zero();
            for t in 0..dim_v {
                let d = rep.action[i].get(t, s);
                if !d.is_zero() {
                    acc += &(d * &point[dim_g + t]);
                }
            }
            if !acc.is_zero() {
                m.set(i, dim_g + s, acc.clone());
                m.set(dim_g + s, i, -&acc);
            }
        }
    }
    for (pos, &(s, t)) in rep.pairs.iter().enumerate() {
        let val = phi.phi_forms[pos].eval(point);
        if !val.is_zero() {
            m.set(dim_g + s, dim_g + t, val.clone());
            m.set(dim_g + t, dim_g + s, -&val);
        }
    }
    m
}

/// Exact bivector rank at a rational point (always even: the matrix is
/// skew over a field).
pub fn rank_at_exact(phi: &AdmissibleMap, point: &[Scalar]) -> usize {
    bivector_exact(phi, point).rank()
}

/// dim s = dim W* - 2k.
pub fn symmetry_dimension(rep: &RepData, half_rank: usize) -> usize {
    let dim_w = rep.dim_g + rep.dim_v;
    assert!(2 * half_rank <= dim_w, "half-rank exceeds dim W*/2");
    dim_w - 2 * half_rank
}

/// Generic half-rank estimate: the maximum exact rank over seeded random
/// rational points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankScan {
    pub seed: u64,
    pub points: usize,
    pub ranks: Vec<usize>,
    pub max_rank: usize,
    pub half_rank: usize,
    pub all_even: bool,
}

pub fn rank_scan(phi: &AdmissibleMap, points: usize, seed: u64) -> RankScan {
    let rep = &phi.rep;
    let dim_w = rep.dim_g + rep.dim_v;
    let complex = rep.spec.is_complex();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ranks = Vec::with_capacity(points);
    for _ in 0..points {
        let point: Vec<Scalar> = (0..dim_w)
            .map(|_| {
                if complex {
                    Scalar::complex(random_rat(&mut rng), random_rat(&mut rng))
                } else {
                    Scalar::from_rat(random_rat(&mut rng))
                }
            })
            .collect();
        ranks.push(rank_at_exact(phi, &point));
    }
    let max_rank = ranks.iter().copied().max().unwrap_or(0);
    let all_even = ranks.iter().all(|r| r % 2 == 0);
    RankScan {
        seed,
        points,
        ranks,
        max_rank,
        half_rank: max_rank / 2,
        all_even,
    }
}

/// Solution space of tau(x, a.y) = tau(y, a.x) inside V* (x) V*, with the
/// antisymmetry verification and the comparison against sigma.
#[derive(Debug, Clone)]
pub struct LemmaRepsReport {
    pub dim: usize,
    pub basis: Vec<Vec<Scalar>>,
    pub all_antisymmetric: bool,
    /// Whether the solution space equals the sigma line (None when the
    /// family has no invariant 2-form).
    pub equals_sigma_line: Option<bool>,
}

pub fn lemma_reps_solution_space(spec: RepSpec) -> Result<LemmaRepsReport, RepError> {
    let rep = rep_data(spec)?;
    let dv = rep.dim_v;
    let mut rows = Vec::new();
    for e in &rep.action {
        for s in 0..dv {
            for t in (s + 1)..dv {
                // tau(v_s, E v_t) - tau(v_t, E v_s) = 0 over tau_{u,w}.
                let mut row = vec![Scalar::zero(); dv * dv];
                for w in 0..dv {
                    let ewt = e.get(w, t);
                    if !ewt.is_zero() {
                        row[s * dv + w] += ewt;
                    }
                    let ews = e.get(w, s);
                    if !ews.is_zero() {
                        row[t * dv + w] -= ews;
                    }
                }
                rows.push(row);
            }
        }
    }
    let basis = DenseMatrix::from_rows(rows).nullspace();
    let all_antisymmetric = basis.iter().all(|tau| {
        (0..dv).all(|s| {
            (s..dv).all(|t| {
                let sum = &tau[s * dv + t] + &tau[t * dv + s];
                sum.is_zero()
            })
        })
    });
    let equals_sigma_line = rep.sigma_mat.as_ref().map(|sig| {
        if basis.len() != 1 {
            return false;
        }
        let sig_flat: Vec<Scalar> = (0..dv)
            .flat_map(|s| (0..dv).map(move |t| sig.get(s, t).clone()))
            .collect();
        linalg::span_contains(&basis, &sig_flat).expect("ambient")
    });
    Ok(LemmaRepsReport {
        dim: basis.len(),
        basis,
        all_antisymmetric,
        equals_sigma_line,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rat;

    fn s(n: i64) -> Scalar {
        Scalar::from_int(n)
    }

    fn coords(phi: &AdmissibleMap) -> PhaseCoords {
        PhaseCoords::of(&phi.rep)
    }

    #[test]
    fn poly_arithmetic() {
        let x = PolyFn::var(2, 0);
        let y = PolyFn::var(2, 1);
        let p = x.add(&y).mul(&x.sub(&y)); // x^2 - y^2
        assert_eq!(p.terms.len(), 2);
        assert_eq!(p.deriv(0), x.scale(&s(2)));
        assert_eq!(p.eval(&[s(3), s(2)]), s(5));
        assert_eq!(p.sub(&p), PolyFn::zero(2));
        assert_eq!(p.degree(), 2);
    }

    #[test]
    fn bracket_of_linear_a_functionals_is_lie_poisson() {
        let phi = make_phi(RepSpec::tensor_real(2, 1), Scalar::one()).unwrap();
        let rep = phi.rep.clone();
        let co = coords(&phi);
        let nv = co.dim_w();
        for i in 0..rep.dim_g {
            for j in 0..rep.dim_g {
                let f = PolyFn::var(nv, co.a_var(i));
                let g = PolyFn::var(nv, co.a_var(j));
                let br = poisson_bracket(&f, &g, &phi);
                // Expected: l_{[g_i, g_j]}.
                let mut expected = PolyFn::zero(nv);
                for (k, c) in rep.struct_consts[i][j].iter().enumerate() {
                    if !c.is_zero() {
                        expected = expected.add(&PolyFn::var(nv, co.a_var(k)).scale(c));
                    }
                }
                assert_eq!(br, expected);
            }
        }
    }

    #[test]
    fn bracket_of_b_functionals_is_phi() {
        let phi = make_phi(RepSpec::tensor_real(2, 1), s(7)).unwrap();
        let co = coords(&phi);
        let nv = co.dim_w();
        for (pos, &(st, tt)) in phi.rep.pairs.clone().iter().enumerate() {
            let f = PolyFn::var(nv, co.b_var(st));
            let g = PolyFn::var(nv, co.b_var(tt));
            assert_eq!(poisson_bracket(&f, &g, &phi), phi.phi_forms[pos]);
        }
    }

    #[test]
    fn bracket_antisymmetry_and_leibniz() {
        let phi = make_phi(RepSpec::tensor_real(2, 1), Scalar::one()).unwrap();
        let co = coords(&phi);
        let nv = co.dim_w();
        let f = PolyFn::var(nv, co.a_var(1)).add(&PolyFn::var(nv, co.b_var(2)));
        let g = PolyFn::var(nv, co.a_var(4)).mul(&PolyFn::var(nv, co.b_var(0)));
        let h = PolyFn::var(nv, co.b_var(5));

        assert!(poisson_bracket(&f, &f, &phi).is_zero());
        let fg = poisson_bracket(&f, &g, &phi);
        let gf = poisson_bracket(&g, &f, &phi);
        assert_eq!(fg, gf.neg());

        // {f, gh} = {f,g} h + g {f,h}
        let lhs = poisson_bracket(&f, &g.mul(&h), &phi);
        let rhs = fg.mul(&h).add(&g.mul(&poisson_bracket(&f, &h, &phi)));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn pure_lie_poisson_brackets_of_linear_are_linear() {
        let phi = make_phi(RepSpec::tensor_real(2, 1), Scalar::zero()).unwrap();
        let co = coords(&phi);
        let nv = co.dim_w();
        // With the quadratic part active the bracket of b-functionals is
        // quadratic; zeroing the quadratic part recovers linear brackets.
        let zero_quad = from_quadratic(
            phi.rep.clone(),
            JetElem::zero(&phi.rep),
            Scalar::zero(),
        )
        .unwrap();
        for v in 0..nv {
            for w in 0..nv {
                let f = PolyFn::var(nv, v);
                let g = PolyFn::var(nv, w);
                let br = poisson_bracket(&f, &g, &zero_quad);
                assert!(br.degree() <= 1);
            }
        }
    }

    #[test]
    fn jacobi_identity_for_admissible_maps() {
        for spec in [RepSpec::tensor_real(2, 1), RepSpec::binary_cubic(false)] {
            for c in [Scalar::zero(), Scalar::one(), s(-2)] {
                let phi = make_phi(spec, c).unwrap();
                let co = coords(&phi);
                let nv = co.dim_w();
                for f in 0..nv {
                    for g in (f + 1)..nv {
                        for h in (g + 1)..nv {
                            let j = jacobiator(
                                &PolyFn::var(nv, f),
                                &PolyFn::var(nv, g),
                                &PolyFn::var(nv, h),
                                &phi,
                            );
                            assert!(
                                j.is_zero(),
                                "nonzero Jacobiator at ({f},{g},{h}) for {spec:?}: {}",
                                j.display(&co)
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn non_admissible_control_breaks_jacobi() {
        let spec = RepSpec::tensor_real(2, 1);
        let rep = rep_data(spec).unwrap();
        let bad = non_admissible_control(&rep).unwrap();
        let phi = from_quadratic(rep, bad, Scalar::zero()).unwrap();
        let co = coords(&phi);
        let nv = co.dim_w();
        let mut found_nonzero = false;
        'search: for f in 0..nv {
            for g in (f + 1)..nv {
                for h in (g + 1)..nv {
                    let j = jacobiator(
                        &PolyFn::var(nv, f),
                        &PolyFn::var(nv, g),
                        &PolyFn::var(nv, h),
                        &phi,
                    );
                    if !j.is_zero() {
                        found_nonzero = true;
                        break 'search;
                    }
                }
            }
        }
        assert!(found_nonzero);
    }

    #[test]
    fn admissibility_of_canonical_map() {
        for c in [Scalar::zero(), Scalar::one()] {
            let phi = make_phi(RepSpec::tensor_real(3, 0), c).unwrap();
            let report = admissibility_check(&phi).unwrap();
            assert!(report.passed(), "witness: {:?}", report.witness);
        }
        // The constant map phi = c sigma alone is admissible (d phi = 0).
        let rep = rep_data(RepSpec::tensor_real(3, 0)).unwrap();
        let constant = from_quadratic(rep.clone(), JetElem::zero(&rep), s(3)).unwrap();
        assert!(admissibility_check(&constant).unwrap().passed());
    }

    #[test]
    fn admissibility_negative_control_fails_derivative_condition() {
        let spec = RepSpec::tensor_real(3, 0);
        let rep = rep_data(spec).unwrap();
        let bad = non_admissible_control(&rep).unwrap();
        let phi = from_quadratic(rep, bad, Scalar::zero()).unwrap();
        let report = admissibility_check(&phi).unwrap();
        assert!(!report.derivative_in_curvature_space);
        assert!(report.witness.is_some());
    }

    #[test]
    fn make_phi_values_match_phi2_example() {
        // p = B-flat(x1^x2), c = 0: phi(p)(e1 (x) x1, e2 (x) x1) = 3.
        let spec = RepSpec::tensor_real(3, 0);
        let phi = make_phi(spec, Scalar::zero()).unwrap();
        let rep = phi.rep.clone();
        let co = coords(&phi);
        let p_g = rep.b_flat(&rep.basis_alg(3));
        let mut point = vec![Scalar::zero(); co.dim_w()];
        point[..rep.dim_g].clone_from_slice(&p_g);
        let u = rep.v_index(0, 0);
        let v = rep.v_index(1, 0);
        let val = phi.phi_forms[rep.pair_pos[&(u, v)]].eval(&point);
        assert_eq!(val, s(3));

        // c = 1 at p = 0 gives sigma.
        let phi1 = make_phi(spec, Scalar::one()).unwrap();
        let zero = vec![Scalar::zero(); co.dim_w()];
        for (pos, &(st, tt)) in rep.pairs.iter().enumerate() {
            assert_eq!(
                phi1.phi_forms[pos].eval(&zero),
                rep.sigma_mat.as_ref().unwrap().get(st, tt).clone()
            );
        }
    }

    #[test]
    fn bivector_rank_at_origin() {
        let spec = RepSpec::tensor_real(2, 1);
        let rep = rep_data(spec).unwrap();
        let dim_w = rep.dim_g + rep.dim_v;
        let origin = vec![Scalar::zero(); dim_w];

        let phi = make_phi(spec, Scalar::one()).unwrap();
        assert_eq!(rank_at_exact(&phi, &origin), 2 * spec.tensor_n());

        let phi0 = make_phi(spec, Scalar::zero()).unwrap();
        assert_eq!(rank_at_exact(&phi0, &origin), 0);
    }

    #[test]
    fn bivector_rank_is_even_at_random_points() {
        let phi = make_phi(RepSpec::tensor_real(2, 1), Scalar::one()).unwrap();
        let scan = rank_scan(&phi, 8, 42);
        assert!(scan.all_even);
        assert!(scan.max_rank <= phi.rep.dim_g + phi.rep.dim_v);
    }

    #[test]
    fn symmetry_dimension_formula() {
        let rep = rep_data(RepSpec::tensor_real(3, 0)).unwrap();
        assert_eq!(symmetry_dimension(&rep, 0), 12);
        assert_eq!(symmetry_dimension(&rep, 5), 2);
    }

    #[test]
    fn lemma_reps_sigma_line_for_tensor_and_cubic() {
        for spec in [
            RepSpec::tensor_real(3, 0),
            RepSpec::tensor_real(2, 1),
            RepSpec::binary_cubic(false),
        ] {
            let report = lemma_reps_solution_space(spec).unwrap();
            assert_eq!(report.dim, 1, "{spec:?}");
            assert!(report.all_antisymmetric);
            assert_eq!(report.equals_sigma_line, Some(true));
        }
    }

    #[test]
    fn lemma_reps_control_is_trivial() {
        let report = lemma_reps_solution_space(RepSpec::binary_quadratic(false)).unwrap();
        assert_eq!(report.dim, 0);
        assert!(report.all_antisymmetric);
        assert_eq!(report.equals_sigma_line, None);
    }

    #[test]
    fn make_phi_rejects_constant_without_two_form() {
        let err = make_phi(RepSpec::binary_quadratic(false), Scalar::one());
        assert!(err.is_err());
        let _ = Rat::zero();
    }
}
