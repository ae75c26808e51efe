//! Curvature spaces by exact elimination: the space K(g) of maps
//! Lambda^2 V -> g satisfying the first Bianchi identity, the second
//! curvature space K1(g) of maps V -> K(g) satisfying the second Bianchi
//! identity, and the jet space J2(g) = (S^2 g (x) Lambda^2 V*) /\
//! (g (x) K(g)), together with the explicit curvature map rho, the quadratic
//! generator phi2, the induced maps, and the Berger / full-curvature tests.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::linalg::DenseMatrix;
#[cfg(test)]
use crate::linalg;
use crate::rep::{rep_data, AlgElem, RepData, RepError, RepSpec, VecElem};
use crate::scalar::Scalar;

/// Element of Lambda^2 V* (x) g. Flat coefficient layout:
/// `pair_index * dim_g + g_index` over the lexicographic pair table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurvatureElem {
    pub spec: RepSpec,
    pub coeffs: Vec<Scalar>,
}

impl CurvatureElem {
    /// Value on two vectors, an element of g.
    pub fn eval(&self, rep: &RepData, u: &VecElem, v: &VecElem) -> AlgElem {
        let dim_g = rep.dim_g;
        let mut out = vec![Scalar::zero(); dim_g];
        for (pos, &(k, l)) in rep.pairs.iter().enumerate() {
            let w = &(&u.coeffs[k] * &v.coeffs[l]) - &(&u.coeffs[l] * &v.coeffs[k]);
            if w.is_zero() {
                continue;
            }
            let slice = &self.coeffs[pos * dim_g..(pos + 1) * dim_g];
            for (o, c) in out.iter_mut().zip(slice) {
                if !c.is_zero() {
                    *o += &(&w * c);
                }
            }
        }
        rep.alg_from_coeffs(out)
    }

    /// Value on a basis pair (k < l): a direct slice of the coefficients.
    pub fn value_at_pair<'a>(&'a self, rep: &RepData, k: usize, l: usize) -> &'a [Scalar] {
        let pos = rep.pair_pos[&(k, l)];
        &self.coeffs[pos * rep.dim_g..(pos + 1) * rep.dim_g]
    }
}

/// Element of V* (x) K(g). Flat layout: `v_index * dim_K + k_index` against
/// the computed basis of K(g).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Curvature2Elem {
    pub spec: RepSpec,
    pub coeffs: Vec<Scalar>,
}

impl Curvature2Elem {
    /// Value on a vector, an element of K(g).
    pub fn eval(&self, rep: &RepData, kspace: &CurvatureSpace, x: &VecElem) -> CurvatureElem {
        let dim_k = kspace.basis.len();
        let flat = rep.pairs.len() * rep.dim_g;
        let mut out = vec![Scalar::zero(); flat];
        for (s, xs) in x.coeffs.iter().enumerate() {
            if xs.is_zero() {
                continue;
            }
            for (alpha, kelem) in kspace.basis.iter().enumerate() {
                let c = &self.coeffs[s * dim_k + alpha];
                if c.is_zero() {
                    continue;
                }
                let factor = xs * c;
                for (o, kc) in out.iter_mut().zip(&kelem.coeffs) {
                    if !kc.is_zero() {
                        *o += &(&factor * kc);
                    }
                }
            }
        }
        CurvatureElem {
            spec: self.spec,
            coeffs: out,
        }
    }

    /// Flattens into the ambient V* (x) Lambda^2 V* (x) g.
    pub fn flatten(&self, rep: &RepData, kspace: &CurvatureSpace) -> Vec<Scalar> {
        let dim_k = kspace.basis.len();
        let flat = rep.pairs.len() * rep.dim_g;
        let mut out = vec![Scalar::zero(); rep.dim_v * flat];
        for s in 0..rep.dim_v {
            for (alpha, kelem) in kspace.basis.iter().enumerate() {
                let c = &self.coeffs[s * dim_k + alpha];
                if c.is_zero() {
                    continue;
                }
                for (pos, kc) in kelem.coeffs.iter().enumerate() {
                    if !kc.is_zero() {
                        out[s * flat + pos] += &(c * kc);
                    }
                }
            }
        }
        out
    }
}

/// Element of S^2 g (x) Lambda^2 V*, stored as the full tensor
/// `(i * dim_g + j) * n_pairs + pair` with symmetric (i, j) slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JetElem {
    pub spec: RepSpec,
    pub coeffs: Vec<Scalar>,
}

impl JetElem {
    pub fn zero(rep: &RepData) -> JetElem {
        JetElem {
            spec: rep.spec,
            coeffs: vec![Scalar::zero(); rep.dim_g * rep.dim_g * rep.pairs.len()],
        }
    }

    #[inline]
    pub fn coeff<'a>(&'a self, rep: &RepData, i: usize, j: usize, pair: usize) -> &'a Scalar {
        &self.coeffs[(i * rep.dim_g + j) * rep.pairs.len() + pair]
    }

    /// Symmetric bilinear evaluation on two dual-coordinate vectors and two
    /// vectors of V.
    pub fn eval(
        &self,
        rep: &RepData,
        p1: &[Scalar],
        p2: &[Scalar],
        u: &VecElem,
        v: &VecElem,
    ) -> Scalar {
        let mut acc = Scalar::zero();
        for (pos, &(k, l)) in rep.pairs.iter().enumerate() {
            let w = &(&u.coeffs[k] * &v.coeffs[l]) - &(&u.coeffs[l] * &v.coeffs[k]);
            if w.is_zero() {
                continue;
            }
            let mut inner = Scalar::zero();
            for (i, p1i) in p1.iter().enumerate() {
                if p1i.is_zero() {
                    continue;
                }
                for (j, p2j) in p2.iter().enumerate() {
                    if p2j.is_zero() {
                        continue;
                    }
                    let t = self.coeff(rep, i, j, pos);
                    if !t.is_zero() {
                        inner += &(&(p1i * p2j) * t);
                    }
                }
            }
            acc += &(&w * &inner);
        }
        acc
    }

    /// Contraction against the first g slot: an element of
    /// Lambda^2 V* (x) g (the map phi2' applied to p).
    pub fn contract_first(&self, rep: &RepData, p: &[Scalar]) -> CurvatureElem {
        let n_pairs = rep.pairs.len();
        let mut out = vec![Scalar::zero(); n_pairs * rep.dim_g];
        for (i, pi) in p.iter().enumerate() {
            if pi.is_zero() {
                continue;
            }
            for j in 0..rep.dim_g {
                for pos in 0..n_pairs {
                    let t = self.coeff(rep, i, j, pos);
                    if !t.is_zero() {
                        out[pos * rep.dim_g + j] += &(pi * t);
                    }
                }
            }
        }
        CurvatureElem {
            spec: self.spec,
            coeffs: out,
        }
    }

    pub fn scale(&self, factor: &Scalar) -> JetElem {
        JetElem {
            spec: self.spec,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }
}

/// Basis of K(g).
pub struct CurvatureSpace {
    pub spec: RepSpec,
    pub basis: Vec<CurvatureElem>,
}

impl CurvatureSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis_flat(&self) -> Vec<Vec<Scalar>> {
        self.basis.iter().map(|b| b.coeffs.clone()).collect()
    }
}

/// Basis of K1(g).
pub struct SecondCurvatureSpace {
    pub spec: RepSpec,
    pub basis: Vec<Curvature2Elem>,
}

impl SecondCurvatureSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

/// Basis of J2(g) plus the infinitesimal-invariance report.
pub struct JetSpace {
    pub spec: RepSpec,
    pub basis: Vec<JetElem>,
    /// True when every basis element is annihilated by the whole g-action
    /// (trivially false when the center is included, which scales the
    /// 2-form slot).
    pub g_invariant: bool,
}

impl JetSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

type Cache<T> = OnceLock<Mutex<HashMap<RepSpec, Arc<T>>>>;

static K_CACHE: Cache<CurvatureSpace> = OnceLock::new();
static K1_CACHE: Cache<SecondCurvatureSpace> = OnceLock::new();
static J2_CACHE: Cache<JetSpace> = OnceLock::new();

fn cached<T, F>(cache: &Cache<T>, spec: RepSpec, build: F) -> Result<Arc<T>, RepError>
where
    F: FnOnce() -> Result<T, RepError>,
{
    let map = cache.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(found) = map.lock().unwrap().get(&spec) {
        return Ok(found.clone());
    }
    let built = Arc::new(build()?);
    let mut guard = map.lock().unwrap();
    Ok(guard.entry(spec).or_insert(built).clone())
}

/// K(g): exact kernel of Lambda^2 V* (x) g -> Lambda^3 V* (x) V.
pub fn curvature_space(spec: RepSpec) -> Result<Arc<CurvatureSpace>, RepError> {
    cached(&K_CACHE, spec, || {
        let rep = rep_data(spec)?;
        let dim_g = rep.dim_g;
        let dim_v = rep.dim_v;
        let n_pairs = rep.pairs.len();
        let mut m = DenseMatrix::zero(rep.triples.len() * dim_v, n_pairs * dim_g);
        for (t_idx, &(p, q, r)) in rep.triples.iter().enumerate() {
            // Skew-symmetrization of omega_pair (x) g_k evaluated on
            // (v_p, v_q, v_r): the three cyclic terms select three pairs.
            let terms = [(p, q, r, 1i64), (q, r, p, 1), (p, r, q, -1)];
            for &(a, b, c, sign) in &terms {
                let pos = rep.pair_pos[&(a, b)];
                for k in 0..dim_g {
                    let col = pos * dim_g + k;
                    for s in 0..dim_v {
                        let e = rep.action[k].get(s, c);
                        if e.is_zero() {
                            continue;
                        }
                        let row = t_idx * dim_v + s;
                        let val = if sign == 1 { e.clone() } else { -e };
                        let cur = m.get(row, col) + &val;
                        m.set(row, col, cur);
                    }
                }
            }
        }
        let basis = m
            .nullspace()
            .into_iter()
            .map(|coeffs| CurvatureElem { spec, coeffs })
            .collect();
        Ok(CurvatureSpace { spec, basis })
    })
}

/// K1(g): exact kernel of V* (x) K(g) -> Lambda^3 V* (x) g.
pub fn second_curvature_space(spec: RepSpec) -> Result<Arc<SecondCurvatureSpace>, RepError> {
    cached(&K1_CACHE, spec, || {
        let rep = rep_data(spec)?;
        let kspace = curvature_space(spec)?;
        let dim_g = rep.dim_g;
        let dim_k = kspace.dim();
        let mut m = DenseMatrix::zero(rep.triples.len() * dim_g, rep.dim_v * dim_k);
        for (t_idx, &(p, q, r)) in rep.triples.iter().enumerate() {
            // Q(v_p)(v_q,v_r) + Q(v_q)(v_r,v_p) + Q(v_r)(v_p,v_q) = 0.
            let terms = [(p, q, r, 1i64), (q, p, r, -1), (r, p, q, 1)];
            for &(s, a, b, sign) in &terms {
                for (alpha, kelem) in kspace.basis.iter().enumerate() {
                    let col = s * dim_k + alpha;
                    let val = kelem.value_at_pair(&rep, a, b);
                    for k in 0..dim_g {
                        if val[k].is_zero() {
                            continue;
                        }
                        let row = t_idx * dim_g + k;
                        let delta = if sign == 1 {
                            val[k].clone()
                        } else {
                            -&val[k]
                        };
                        let cur = m.get(row, col) + &delta;
                        m.set(row, col, cur);
                    }
                }
            }
        }
        let basis = m
            .nullspace()
            .into_iter()
            .map(|coeffs| Curvature2Elem { spec, coeffs })
            .collect();
        Ok(SecondCurvatureSpace { spec, basis })
    })
}

/// J2(g) = (S^2 g (x) Lambda^2 V*) /\ (g (x) K(g)), computed as the
/// symmetry constraint on g (x) K(g) coordinates (equivalent to the direct
/// subspace intersection, which the tests cross-check on small instances).
pub fn jet_space(spec: RepSpec) -> Result<Arc<JetSpace>, RepError> {
    cached(&J2_CACHE, spec, || {
        let rep = rep_data(spec)?;
        let kspace = curvature_space(spec)?;
        let dim_g = rep.dim_g;
        let dim_k = kspace.dim();
        let n_pairs = rep.pairs.len();
        // Unknowns t_{i,alpha}; constraint: the expanded tensor is symmetric
        // in the two g slots.
        let n_sym = dim_g * (dim_g - 1) / 2;
        let mut m = DenseMatrix::zero(n_sym * n_pairs, dim_g * dim_k);
        let mut row = 0usize;
        for i in 0..dim_g {
            for j in (i + 1)..dim_g {
                for pos in 0..n_pairs {
                    for (alpha, kelem) in kspace.basis.iter().enumerate() {
                        let kj = &kelem.coeffs[pos * dim_g + j];
                        if !kj.is_zero() {
                            let cur = m.get(row, i * dim_k + alpha) + kj;
                            m.set(row, i * dim_k + alpha, cur);
                        }
                        let ki = &kelem.coeffs[pos * dim_g + i];
                        if !ki.is_zero() {
                            let cur = m.get(row, j * dim_k + alpha) - ki;
                            m.set(row, j * dim_k + alpha, cur);
                        }
                    }
                    row += 1;
                }
            }
        }
        let null = m.nullspace();
        let mut basis = Vec::with_capacity(null.len());
        for t in &null {
            let mut jet = JetElem::zero(&rep);
            for i in 0..dim_g {
                for (alpha, kelem) in kspace.basis.iter().enumerate() {
                    let ti = &t[i * dim_k + alpha];
                    if ti.is_zero() {
                        continue;
                    }
                    for pos in 0..n_pairs {
                        for j in 0..dim_g {
                            let kc = &kelem.coeffs[pos * dim_g + j];
                            if !kc.is_zero() {
                                jet.coeffs[(i * dim_g + j) * n_pairs + pos] += &(ti * kc);
                            }
                        }
                    }
                }
            }
            basis.push(jet);
        }
        let g_invariant = basis
            .iter()
            .all(|jet| jet_action_residual_is_zero(&rep, jet));
        Ok(JetSpace {
            spec,
            basis,
            g_invariant,
        })
    })
}

/// True iff a . J = 0 for every g basis element a, acting adjointly on both
/// g slots and dually on the 2-form slot.
fn jet_action_residual_is_zero(rep: &RepData, jet: &JetElem) -> bool {
    let dim_g = rep.dim_g;
    let n_pairs = rep.pairs.len();
    for a in 0..dim_g {
        // Dual action on the 2-form slot:
        // (a . omega_kl)(v_p, v_q) = -omega_kl(E_a v_p, v_q) - omega_kl(v_p, E_a v_q).
        let e = &rep.action[a];
        let mut form_action = vec![Scalar::zero(); n_pairs * n_pairs];
        for (src, &(k, l)) in rep.pairs.iter().enumerate() {
            for (dst, &(p, q)) in rep.pairs.iter().enumerate() {
                let mut c = Scalar::zero();
                if q == l {
                    c -= e.get(k, p);
                }
                if q == k {
                    c += e.get(l, p);
                }
                if p == k {
                    c -= e.get(l, q);
                }
                if p == l {
                    c += e.get(k, q);
                }
                form_action[src * n_pairs + dst] = c;
            }
        }
        for i in 0..dim_g {
            for j in 0..dim_g {
                for dst in 0..n_pairs {
                    let mut acc = Scalar::zero();
                    // Adjoint action on the first and second g slots.
                    for ip in 0..dim_g {
                        let c = &rep.struct_consts[a][ip][i];
                        if !c.is_zero() {
                            acc += &(c * jet.coeff(rep, ip, j, dst));
                        }
                        let c = &rep.struct_consts[a][ip][j];
                        if !c.is_zero() {
                            acc += &(c * jet.coeff(rep, i, ip, dst));
                        }
                    }
                    for src in 0..n_pairs {
                        let fa = &form_action[src * n_pairs + dst];
                        if !fa.is_zero() {
                            acc += &(fa * jet.coeff(rep, i, j, src));
                        }
                    }
                    if !acc.is_zero() {
                        return false;
                    }
                }
            }
        }
    }
    true
}

fn require_tensor_no_center(spec: RepSpec, what: &str) -> Result<(), RepError> {
    if !spec.is_tensor() {
        return Err(RepError::Unsupported(format!(
            "{what} is defined for the tensor families only"
        )));
    }
    if spec.include_center {
        return Err(RepError::Unsupported(format!(
            "{what} is defined on sl(2) (+) so(n), without the center"
        )));
    }
    Ok(())
}

/// The explicit curvature map: rho_(A+M)(e (x) x, f (x) y) =
/// <e,f>[(x,y)(A+M) + x^(My) + y^(Mx)] + (x,My) ef - <Ae,f> x^y,
/// extended bilinearly. Tensor families only.
pub fn rho_eval(
    rep: &RepData,
    a: &AlgElem,
    u: &VecElem,
    v: &VecElem,
) -> Result<AlgElem, RepError> {
    require_tensor_no_center(rep.spec, "rho")?;
    if a.spec != rep.spec || u.spec != rep.spec || v.spec != rep.spec {
        return Err(RepError::SpecMismatch);
    }
    let n = rep.spec.tensor_n();
    let a2 = rep.sl2_endo(a);
    let m = rep.so_endo(a);
    let mut out = rep.zero_alg();

    let slice =
        |w: &VecElem, part: usize| -> Vec<Scalar> { w.coeffs[part * n..(part + 1) * n].to_vec() };
    // <e_a, e_b> for the basis of W2.
    let area = |ea: usize, eb: usize| -> i64 {
        match (ea, eb) {
            (0, 1) => 1,
            (1, 0) => -1,
            _ => 0,
        }
    };
    // <A e_a, e_b> from the 2x2 endomorphism columns.
    let a_pair = |ea: usize, eb: usize| -> Scalar {
        if eb == 0 {
            -&a2[1][ea]
        } else {
            a2[0][ea].clone()
        }
    };

    for ea in 0..2 {
        let x = slice(u, ea);
        if x.iter().all(Scalar::is_zero) {
            continue;
        }
        let mx = m.mul_vec(&x).expect("dimensions");
        for eb in 0..2 {
            let y = slice(v, eb);
            if y.iter().all(Scalar::is_zero) {
                continue;
            }
            let my = m.mul_vec(&y).expect("dimensions");
            let ar = area(ea, eb);
            if ar != 0 {
                let ar = Scalar::from_int(ar);
                // (x,y)(A+M)
                let xy = rep.wn_inner(&x, &y);
                if !xy.is_zero() {
                    let f = &ar * &xy;
                    for (o, c) in out.coeffs.iter_mut().zip(&a.coeffs) {
                        if !c.is_zero() {
                            *o += &(&f * c);
                        }
                    }
                }
                // x ^ (My) + y ^ (Mx)
                let w1 = rep.wedge_to_g(&x, &my);
                let w2 = rep.wedge_to_g(&y, &mx);
                for k in 0..rep.dim_g {
                    let t = &(&w1.coeffs[k] + &w2.coeffs[k]) * &ar;
                    if !t.is_zero() {
                        out.coeffs[k] += &t;
                    }
                }
            }
            // (x, My) e_a e_b
            let xmy = rep.wn_inner(&x, &my);
            if !xmy.is_zero() {
                let mut ue = [Scalar::zero(), Scalar::zero()];
                ue[ea] = Scalar::one();
                let mut ve = [Scalar::zero(), Scalar::zero()];
                ve[eb] = Scalar::one();
                let sym = rep.sym2_to_g(&ue, &ve);
                for k in 0..3 {
                    if !sym.coeffs[k].is_zero() {
                        out.coeffs[k] += &(&xmy * &sym.coeffs[k]);
                    }
                }
            }
            // -<A e_a, e_b> x ^ y
            let ap = a_pair(ea, eb);
            if !ap.is_zero() {
                let w = rep.wedge_to_g(&x, &y);
                for k in 0..rep.dim_g {
                    if !w.coeffs[k].is_zero() {
                        out.coeffs[k] -= &(&ap * &w.coeffs[k]);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// rho as a flattened element of Lambda^2 V* (x) g.
pub fn rho_flat(rep: &RepData, a: &AlgElem) -> Result<CurvatureElem, RepError> {
    let mut coeffs = vec![Scalar::zero(); rep.pairs.len() * rep.dim_g];
    for (pos, &(k, l)) in rep.pairs.iter().enumerate() {
        let val = rho_eval(rep, a, &rep.basis_vec(k), &rep.basis_vec(l))?;
        coeffs[pos * rep.dim_g..(pos + 1) * rep.dim_g].clone_from_slice(&val.coeffs);
    }
    Ok(CurvatureElem {
        spec: rep.spec,
        coeffs,
    })
}

/// The quadratic generator phi2 of the jet space, evaluated on two algebra
/// elements and two vectors. Tensor families only.
pub fn phi2_eval(
    rep: &RepData,
    a1: &AlgElem,
    a2: &AlgElem,
    u: &VecElem,
    v: &VecElem,
) -> Result<Scalar, RepError> {
    require_tensor_no_center(rep.spec, "phi2")?;
    if a1.spec != rep.spec || a2.spec != rep.spec || u.spec != rep.spec || v.spec != rep.spec {
        return Err(RepError::SpecMismatch);
    }
    let n = rep.spec.tensor_n();
    let e1 = rep.sl2_endo(a1);
    let e2 = rep.sl2_endo(a2);
    let m1 = rep.so_endo(a1);
    let m2 = rep.so_endo(a2);
    let b12 = rep.pair_b(a1, a2)?;

    let area = |ea: usize, eb: usize| -> i64 {
        match (ea, eb) {
            (0, 1) => 1,
            (1, 0) => -1,
            _ => 0,
        }
    };
    let sl_pair = |e: &[[Scalar; 2]; 2], ea: usize, eb: usize| -> Scalar {
        if eb == 0 {
            -&e[1][ea]
        } else {
            e[0][ea].clone()
        }
    };

    let mut acc = Scalar::zero();
    for ea in 0..2 {
        let x = u.coeffs[ea * n..(ea + 1) * n].to_vec();
        if x.iter().all(Scalar::is_zero) {
            continue;
        }
        let m1x = m1.mul_vec(&x).expect("dimensions");
        let m2x = m2.mul_vec(&x).expect("dimensions");
        for eb in 0..2 {
            let y = v.coeffs[eb * n..(eb + 1) * n].to_vec();
            if y.iter().all(Scalar::is_zero) {
                continue;
            }
            let m1y = m1.mul_vec(&y).expect("dimensions");
            let m2y = m2.mul_vec(&y).expect("dimensions");
            let ar = area(ea, eb);
            // sigma(u, v) B(a1, a2)
            if ar != 0 {
                let xy = rep.wn_inner(&x, &y);
                if !xy.is_zero() && !b12.is_zero() {
                    acc += &(&(&Scalar::from_int(ar) * &xy) * &b12);
                }
            }
            // -[B(A1, e_a e_b) B(M2, x^y) + B(A2, e_a e_b) B(M1, x^y)]
            // with B(M, x^y) = (Mx, y).
            let b_a1 = sl_pair(&e1, ea, eb);
            if !b_a1.is_zero() {
                let bm2 = rep.wn_inner(&m2x, &y);
                if !bm2.is_zero() {
                    acc -= &(&b_a1 * &bm2);
                }
            }
            let b_a2 = sl_pair(&e2, ea, eb);
            if !b_a2.is_zero() {
                let bm1 = rep.wn_inner(&m1x, &y);
                if !bm1.is_zero() {
                    acc -= &(&b_a2 * &bm1);
                }
            }
            // <e_a, e_b> [(M1 x, M2 y) + (M1 y, M2 x)]
            if ar != 0 {
                let t = &rep.wn_inner(&m1x, &m2y) + &rep.wn_inner(&m1y, &m2x);
                if !t.is_zero() {
                    acc += &(&Scalar::from_int(ar) * &t);
                }
            }
        }
    }
    Ok(acc)
}

/// The canonical jet generator for a tensor family: phi2 transported to
/// S^2 g (x) Lambda^2 V* through the pairing B.
pub fn jet_from_phi2(rep: &RepData) -> Result<JetElem, RepError> {
    require_tensor_no_center(rep.spec, "phi2")?;
    let dim_g = rep.dim_g;
    let n_pairs = rep.pairs.len();
    // B-sharp images of the dual basis covectors.
    let sharp: Vec<AlgElem> = (0..dim_g)
        .map(|i| {
            let mut p = vec![Scalar::zero(); dim_g];
            p[i] = Scalar::one();
            rep.b_sharp(&p)
        })
        .collect();
    let mut jet = JetElem::zero(rep);
    for i in 0..dim_g {
        for j in i..dim_g {
            for (pos, &(k, l)) in rep.pairs.iter().enumerate() {
                let val = phi2_eval(
                    rep,
                    &sharp[i],
                    &sharp[j],
                    &rep.basis_vec(k),
                    &rep.basis_vec(l),
                )?;
                jet.coeffs[(i * dim_g + j) * n_pairs + pos] = val.clone();
                jet.coeffs[(j * dim_g + i) * n_pairs + pos] = val;
            }
        }
    }
    Ok(jet)
}

/// The induced linear maps of a jet element: phi2' : g* -> K(g) as a
/// `(n_pairs * dim_g) x dim_g` matrix and phi2'' : V* -> K1(g) flattened
/// into V* (x) Lambda^2 V* (x) g, a `(dim_v * n_pairs * dim_g) x dim_v`
/// matrix.
pub struct InducedMaps {
    pub phi2_prime: DenseMatrix,
    pub phi2_prime_rank: usize,
    pub phi2_dblprime: DenseMatrix,
    pub phi2_dblprime_rank: usize,
}

pub fn induced_maps(rep: &RepData, jet: &JetElem) -> InducedMaps {
    let dim_g = rep.dim_g;
    let dim_v = rep.dim_v;
    let n_pairs = rep.pairs.len();
    let flat = n_pairs * dim_g;

    let mut prime = DenseMatrix::zero(flat, dim_g);
    for i in 0..dim_g {
        for j in 0..dim_g {
            for pos in 0..n_pairs {
                let t = jet.coeff(rep, i, j, pos);
                if !t.is_zero() {
                    prime.set(pos * dim_g + j, i, t.clone());
                }
            }
        }
    }

    // phi2''(v_s*)(x) = phi2'(j(v_s* (x) x)) with j(beta (x) x)(g_i) = beta(g_i x).
    let mut dbl = DenseMatrix::zero(dim_v * flat, dim_v);
    for s in 0..dim_v {
        for t_col in 0..dim_v {
            for i in 0..dim_g {
                let e = rep.action[i].get(s, t_col);
                if e.is_zero() {
                    continue;
                }
                for j in 0..dim_g {
                    for pos in 0..n_pairs {
                        let tc = jet.coeff(rep, i, j, pos);
                        if !tc.is_zero() {
                            let row = t_col * flat + pos * dim_g + j;
                            let cur = dbl.get(row, s) + &(e * tc);
                            dbl.set(row, s, cur);
                        }
                    }
                }
            }
        }
    }

    let phi2_prime_rank = prime.rank();
    let phi2_dblprime_rank = dbl.rank();
    InducedMaps {
        phi2_prime: prime,
        phi2_prime_rank,
        phi2_dblprime: dbl,
        phi2_dblprime_rank,
    }
}

/// Result of the Berger first-criterion span computation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BergerReport {
    pub span_dim: usize,
    pub dim_g: usize,
    /// True iff the curvature values span a proper subalgebra.
    pub proper_subalgebra: bool,
    /// For specs with the center included: whether every basis element has
    /// zero center component (the Gl -> Sl reduction).
    pub center_components_zero: Option<bool>,
}

/// Span of all values of all basis elements of K inside g.
pub fn berger_check(rep: &RepData, basis: &[CurvatureElem]) -> BergerReport {
    let mut rows = Vec::new();
    for elem in basis {
        for pos in 0..rep.pairs.len() {
            let slice = &elem.coeffs[pos * rep.dim_g..(pos + 1) * rep.dim_g];
            if slice.iter().any(|c| !c.is_zero()) {
                rows.push(slice.to_vec());
            }
        }
    }
    let span_dim = if rows.is_empty() {
        0
    } else {
        DenseMatrix::from_rows(rows).rank()
    };
    let center_components_zero = rep.center_index.map(|ci| {
        basis
            .iter()
            .all(|elem| (0..rep.pairs.len()).all(|pos| elem.coeffs[pos * rep.dim_g + ci].is_zero()))
    });
    BergerReport {
        span_dim,
        dim_g: rep.dim_g,
        proper_subalgebra: span_dim < rep.dim_g,
        center_components_zero,
    }
}

/// True iff the values of a single curvature element span all of g.
pub fn full_curvature_check(rep: &RepData, r: &CurvatureElem) -> bool {
    berger_check(rep, std::slice::from_ref(r)).span_dim == rep.dim_g
}

/// The single constant c with phi2'(B-flat(a)) = c rho_a for all a, for the
/// canonical jet generator. Errors if the two maps fail to be proportional,
/// which would indicate an inconsistency between the conventions.
pub fn rho_phi2_proportionality(rep: &RepData) -> Result<Scalar, RepError> {
    let jet = jet_from_phi2(rep)?;
    let mut constant: Option<Scalar> = None;
    for i in 0..rep.dim_g {
        let a = rep.basis_alg(i);
        let lhs = jet.contract_first(rep, &rep.b_flat(&a));
        let rhs = rho_flat(rep, &a)?;
        for (l, r) in lhs.coeffs.iter().zip(&rhs.coeffs) {
            match (l.is_zero(), r.is_zero()) {
                (true, true) => {}
                (false, false) => {
                    let ratio = l / r;
                    match &constant {
                        None => constant = Some(ratio),
                        Some(c) if *c == ratio => {}
                        Some(c) => {
                            return Err(RepError::Unsupported(format!(
                                "phi2' o B-flat is not proportional to rho: ratios {c} and {ratio}"
                            )))
                        }
                    }
                }
                _ => {
                    return Err(RepError::Unsupported(
                        "phi2' o B-flat and rho have different supports".to_string(),
                    ))
                }
            }
        }
    }
    constant.ok_or_else(|| RepError::Unsupported("rho vanishes identically".to_string()))
}

/// First Bianchi residual of an arbitrary element, evaluated through the
/// action (an independent route from the kernel-matrix assembly).
pub fn bianchi1_residual_is_zero(rep: &RepData, r: &CurvatureElem) -> bool {
    for &(p, q, s) in &rep.triples {
        let vp = rep.basis_vec(p);
        let vq = rep.basis_vec(q);
        let vs = rep.basis_vec(s);
        let t1 = rep.act(&r.eval(rep, &vp, &vq), &vs).expect("same spec");
        let t2 = rep.act(&r.eval(rep, &vq, &vs), &vp).expect("same spec");
        let t3 = rep.act(&r.eval(rep, &vs, &vp), &vq).expect("same spec");
        for k in 0..rep.dim_v {
            let total = &(&t1.coeffs[k] + &t2.coeffs[k]) + &t3.coeffs[k];
            if !total.is_zero() {
                return false;
            }
        }
    }
    true
}

/// Second Bianchi residual through evaluation.
pub fn bianchi2_residual_is_zero(
    rep: &RepData,
    kspace: &CurvatureSpace,
    q: &Curvature2Elem,
) -> bool {
    for &(a, b, c) in &rep.triples {
        let va = rep.basis_vec(a);
        let vb = rep.basis_vec(b);
        let vc = rep.basis_vec(c);
        let t1 = q.eval(rep, kspace, &va).eval(rep, &vb, &vc);
        let t2 = q.eval(rep, kspace, &vb).eval(rep, &vc, &va);
        let t3 = q.eval(rep, kspace, &vc).eval(rep, &va, &vb);
        for k in 0..rep.dim_g {
            let total = &(&t1.coeffs[k] + &t2.coeffs[k]) + &t3.coeffs[k];
            if !total.is_zero() {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::random_scalar;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn s(n: i64) -> Scalar {
        Scalar::from_int(n)
    }

    #[test]
    fn curvature_dimension_equals_dim_g_for_n3() {
        let spec = RepSpec::tensor_real(3, 0);
        let k = curvature_space(spec).unwrap();
        assert_eq!(k.dim(), 6);
    }

    #[test]
    fn curvature_dimension_nine_for_n2() {
        assert_eq!(curvature_space(RepSpec::tensor_real(2, 0)).unwrap().dim(), 9);
        assert_eq!(curvature_space(RepSpec::tensor_real(1, 1)).unwrap().dim(), 9);
    }

    #[test]
    fn first_bianchi_holds_on_basis() {
        for spec in [RepSpec::tensor_real(2, 1), RepSpec::binary_cubic(false)] {
            let rep = rep_data(spec).unwrap();
            let k = curvature_space(spec).unwrap();
            for elem in &k.basis {
                assert!(bianchi1_residual_is_zero(&rep, elem));
            }
        }
    }

    #[test]
    fn second_curvature_dimension_equals_dim_v() {
        for (spec, expect) in [
            (RepSpec::tensor_real(3, 0), 6),
            (RepSpec::tensor_real(2, 1), 6),
            (RepSpec::binary_cubic(false), 4),
        ] {
            let k1 = second_curvature_space(spec).unwrap();
            assert_eq!(k1.dim(), expect);
        }
    }

    #[test]
    fn second_bianchi_holds_on_basis() {
        let spec = RepSpec::tensor_real(2, 1);
        let rep = rep_data(spec).unwrap();
        let k = curvature_space(spec).unwrap();
        let k1 = second_curvature_space(spec).unwrap();
        for q in &k1.basis {
            assert!(bianchi2_residual_is_zero(&rep, &k, q));
        }
    }

    #[test]
    fn jet_space_one_dimensional_and_invariant() {
        for spec in [
            RepSpec::tensor_real(3, 0),
            RepSpec::tensor_real(2, 1),
            RepSpec::binary_cubic(false),
        ] {
            let j2 = jet_space(spec).unwrap();
            assert_eq!(j2.dim(), 1, "spec {spec:?}");
            assert!(j2.g_invariant, "spec {spec:?}");
        }
    }

    #[test]
    fn jet_space_for_n2_is_larger() {
        // With dim K = 9 > dim g the jet space grows: computed dimension 16,
        // not G-invariant as a whole, but still containing the phi2 line.
        for spec in [RepSpec::tensor_real(2, 0), RepSpec::tensor_real(1, 1)] {
            let rep = rep_data(spec).unwrap();
            let j2 = jet_space(spec).unwrap();
            assert_eq!(j2.dim(), 16);
            assert!(!j2.g_invariant);
            let jet = jet_from_phi2(&rep).unwrap();
            let basis: Vec<Vec<Scalar>> = j2.basis.iter().map(|b| b.coeffs.clone()).collect();
            assert!(linalg::span_contains(&basis, &jet.coeffs).unwrap());
        }
    }

    #[test]
    fn jet_space_matches_direct_intersection_for_n3() {
        // Cross-check of the constraint formulation against the literal
        // subspace intersection inside g (x) g (x) Lambda^2 V*.
        let spec = RepSpec::tensor_real(3, 0);
        let rep = rep_data(spec).unwrap();
        let k = curvature_space(spec).unwrap();
        let dim_g = rep.dim_g;
        let n_pairs = rep.pairs.len();
        let ambient = dim_g * dim_g * n_pairs;
        // Basis of S^2 g (x) Lambda^2 V*.
        let mut sym_basis = Vec::new();
        for &(i, j) in &rep.sym_pairs {
            for pos in 0..n_pairs {
                let mut v = vec![Scalar::zero(); ambient];
                v[(i * dim_g + j) * n_pairs + pos] = Scalar::one();
                v[(j * dim_g + i) * n_pairs + pos] = Scalar::one();
                sym_basis.push(v);
            }
        }
        // Basis of g (x) K.
        let mut gk_basis = Vec::new();
        for i in 0..dim_g {
            for kelem in &k.basis {
                let mut v = vec![Scalar::zero(); ambient];
                for pos in 0..n_pairs {
                    for j in 0..dim_g {
                        let c = &kelem.coeffs[pos * dim_g + j];
                        if !c.is_zero() {
                            v[(i * dim_g + j) * n_pairs + pos] = c.clone();
                        }
                    }
                }
                gk_basis.push(v);
            }
        }
        let inter = linalg::intersect_subspaces(&sym_basis, &gk_basis).unwrap();
        assert_eq!(inter.len(), 1);
        let jet = &jet_space(spec).unwrap().basis[0];
        assert!(linalg::span_contains(&inter, &jet.coeffs).unwrap());
    }

    #[test]
    fn rho_example_values() {
        let spec = RepSpec::tensor_real(3, 0);
        let rep = rep_data(spec).unwrap();
        // a = x1^x2 on (e1 (x) x1, e2 (x) x2) gives -e1e2.
        let a = rep.basis_alg(3);
        let u = rep.basis_vec(rep.v_index(0, 0));
        let v = rep.basis_vec(rep.v_index(1, 1));
        let out = rho_eval(&rep, &a, &u, &v).unwrap();
        let mut expected = rep.zero_alg();
        expected.coeffs[1] = s(-1);
        assert_eq!(out, expected);

        // a = e1^2 on (e1 (x) x1, e2 (x) x1) gives e1^2.
        let a = rep.basis_alg(0);
        let u = rep.basis_vec(rep.v_index(0, 0));
        let v = rep.basis_vec(rep.v_index(1, 0));
        let out = rho_eval(&rep, &a, &u, &v).unwrap();
        let mut expected = rep.zero_alg();
        expected.coeffs[0] = s(1);
        assert_eq!(out, expected);

        // Linearity: rho_0 = 0.
        let out = rho_eval(&rep, &rep.zero_alg(), &u, &v).unwrap();
        assert!(out.coeffs.iter().all(Scalar::is_zero));
    }

    #[test]
    fn rho_lands_in_k_and_spans() {
        for spec in [RepSpec::tensor_real(3, 0), RepSpec::tensor_real(2, 1)] {
            let rep = rep_data(spec).unwrap();
            let k = curvature_space(spec).unwrap();
            let kflat = k.basis_flat();
            let mut rho_rows = Vec::new();
            for i in 0..rep.dim_g {
                let r = rho_flat(&rep, &rep.basis_alg(i)).unwrap();
                assert!(linalg::span_contains(&kflat, &r.coeffs).unwrap());
                rho_rows.push(r.coeffs);
            }
            assert_eq!(DenseMatrix::from_rows(rho_rows).rank(), k.dim());
        }
    }

    #[test]
    fn rho_equivariance_infinitesimal() {
        // rho_[b,a] = b . rho_a with the natural action on Lambda^2 V* (x) g.
        let spec = RepSpec::tensor_real(2, 1);
        let rep = rep_data(spec).unwrap();
        for bi in 0..rep.dim_g {
            let b = rep.basis_alg(bi);
            for ai in 0..rep.dim_g {
                let a = rep.basis_alg(ai);
                let lhs = rho_flat(&rep, &rep.bracket(&b, &a).unwrap()).unwrap();
                let ra = rho_flat(&rep, &a).unwrap();
                for (pos, &(k, l)) in rep.pairs.iter().enumerate() {
                    let vk = rep.basis_vec(k);
                    let vl = rep.basis_vec(l);
                    // [b, ra(v_k, v_l)] - ra(b v_k, v_l) - ra(v_k, b v_l)
                    let val = rep.alg_from_coeffs(
                        ra.coeffs[pos * rep.dim_g..(pos + 1) * rep.dim_g].to_vec(),
                    );
                    let t1 = rep.bracket(&b, &val).unwrap();
                    let t2 = ra.eval(&rep, &rep.act(&b, &vk).unwrap(), &vl);
                    let t3 = ra.eval(&rep, &vk, &rep.act(&b, &vl).unwrap());
                    for g in 0..rep.dim_g {
                        let rhs = &(&t1.coeffs[g] - &t2.coeffs[g]) - &t3.coeffs[g];
                        assert_eq!(lhs.coeffs[pos * rep.dim_g + g], rhs);
                    }
                }
            }
        }
    }

    #[test]
    fn phi2_example_values() {
        let spec = RepSpec::tensor_real(3, 0);
        let rep = rep_data(spec).unwrap();
        let m = rep.basis_alg(3); // x1^x2
        let u = rep.basis_vec(rep.v_index(0, 0)); // e1 (x) x1
        let v = rep.basis_vec(rep.v_index(1, 0)); // e2 (x) x1
        assert_eq!(phi2_eval(&rep, &m, &m, &u, &v).unwrap(), s(3));

        let a = rep.basis_alg(0); // e1^2
        let v2 = rep.basis_vec(rep.v_index(1, 1)); // e2 (x) x2
        assert_eq!(phi2_eval(&rep, &a, &a, &u, &v2).unwrap(), s(0));

        assert_eq!(phi2_eval(&rep, &rep.zero_alg(), &m, &u, &v).unwrap(), s(0));
    }

    #[test]
    fn phi2_symmetries() {
        let spec = RepSpec::tensor_real(2, 1);
        let rep = rep_data(spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..4 {
            let a1 = rep.alg_from_coeffs(
                (0..rep.dim_g)
                    .map(|_| random_scalar(&mut rng, false))
                    .collect(),
            );
            let a2 = rep.alg_from_coeffs(
                (0..rep.dim_g)
                    .map(|_| random_scalar(&mut rng, false))
                    .collect(),
            );
            let u = rep.vec_from_coeffs(
                (0..rep.dim_v)
                    .map(|_| random_scalar(&mut rng, false))
                    .collect(),
            );
            let v = rep.vec_from_coeffs(
                (0..rep.dim_v)
                    .map(|_| random_scalar(&mut rng, false))
                    .collect(),
            );
            let base = phi2_eval(&rep, &a1, &a2, &u, &v).unwrap();
            assert_eq!(phi2_eval(&rep, &a2, &a1, &u, &v).unwrap(), base);
            assert_eq!(phi2_eval(&rep, &a1, &a2, &v, &u).unwrap(), -&base);
        }
    }

    #[test]
    fn phi2_spans_jet_space() {
        for spec in [RepSpec::tensor_real(3, 0), RepSpec::tensor_real(2, 2)] {
            let rep = rep_data(spec).unwrap();
            let jet = jet_from_phi2(&rep).unwrap();
            let j2 = jet_space(spec).unwrap();
            assert_eq!(j2.dim(), 1);
            let basis: Vec<Vec<Scalar>> = j2.basis.iter().map(|b| b.coeffs.clone()).collect();
            assert!(linalg::span_contains(&basis, &jet.coeffs).unwrap());
            assert!(jet.coeffs.iter().any(|c| !c.is_zero()));
        }
    }

    #[test]
    fn induced_maps_are_bijections_for_n3() {
        let spec = RepSpec::tensor_real(3, 0);
        let rep = rep_data(spec).unwrap();
        let jet = jet_from_phi2(&rep).unwrap();
        let maps = induced_maps(&rep, &jet);
        assert_eq!(maps.phi2_prime_rank, 6);
        assert_eq!(maps.phi2_dblprime_rank, 6);

        let zero = JetElem::zero(&rep);
        let zmaps = induced_maps(&rep, &zero);
        assert_eq!(zmaps.phi2_prime_rank, 0);
        assert_eq!(zmaps.phi2_dblprime_rank, 0);
    }

    #[test]
    fn proportionality_constant_is_global() {
        for spec in [RepSpec::tensor_real(3, 0), RepSpec::tensor_real(2, 1)] {
            let rep = rep_data(spec).unwrap();
            let c = rho_phi2_proportionality(&rep).unwrap();
            assert!(!c.is_zero());
        }
    }

    #[test]
    fn berger_spans_g_without_center() {
        let spec = RepSpec::tensor_real(2, 1);
        let rep = rep_data(spec).unwrap();
        let k = curvature_space(spec).unwrap();
        let report = berger_check(&rep, &k.basis);
        assert_eq!(report.span_dim, rep.dim_g);
        assert!(!report.proper_subalgebra);
        assert_eq!(report.center_components_zero, None);

        let empty = berger_check(&rep, &[]);
        assert_eq!(empty.span_dim, 0);
        assert!(empty.proper_subalgebra);
    }

    #[test]
    fn center_excluded_from_curvature() {
        let spec = RepSpec::tensor_complex(3).with_center();
        let rep = rep_data(spec).unwrap();
        let k = curvature_space(spec).unwrap();
        // Same dimension as without the center.
        assert_eq!(k.dim(), 6);
        let report = berger_check(&rep, &k.basis);
        assert_eq!(report.center_components_zero, Some(true));
        assert!(report.proper_subalgebra);
        assert_eq!(report.span_dim, rep.dim_g - 1);
    }

    #[test]
    fn full_curvature_for_generic_element() {
        let spec = RepSpec::tensor_real(2, 1);
        let rep = rep_data(spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let mut a = rep.zero_alg();
        for k in 0..rep.dim_g {
            a.coeffs[k] = random_scalar(&mut rng, false);
        }
        let r = rho_flat(&rep, &a).unwrap();
        assert!(full_curvature_check(&rep, &r));
        let zero = rho_flat(&rep, &rep.zero_alg()).unwrap();
        assert!(!full_curvature_check(&rep, &zero));
    }
}
