//! The representation families: g = sl(W2) (+) so(Wn) acting on V = W2 (x) Wn
//! over R with signature (p,q) or over C, the binary cubics (sl(2) on the
//! 4-dimensional space of degree-3 forms), and the binary quadratics used as
//! a negative control.
//!
//! sl(W2) and so(Wn) are stored in S^2(W2) / Lambda^2(Wn) coordinates, fixed
//! by the identities
//!
//! ```text
//! (e1 e2) . e3  = <e1,e3> e2 + <e2,e3> e1
//! (x1 ^ x2) . x3 = (x1,x3) x2 - (x2,x3) x1
//! ```
//!
//! with `<e1,e2> = 1` and `(x_i,x_j) = delta_ij eps_i`, `eps_1 = +1`.
//! Conversion to endomorphism matrices happens only inside the action.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use thiserror::Error;

use crate::linalg::{self, DenseMatrix};
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RepError {
    #[error("invalid representation spec: {0}")]
    InvalidSpec(String),
    #[error("elements belong to different representation specs")]
    SpecMismatch,
    #[error("operation not supported for this representation family: {0}")]
    Unsupported(String),
}

/// Representation family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Sl(2,R) SO(p,q) on R^2 (x) R^(p+q).
    TensorReal { p: u32, q: u32 },
    /// Sl(2,C) SO(n,C) on C^2 (x) C^n.
    TensorComplex { n: u32 },
    /// Sl(2,F) on binary cubics, dim V = 4.
    BinaryCubic { complex: bool },
    /// Sl(2,F) on binary quadratics, dim V = 3. Even symmetric power,
    /// carries no invariant 2-form; used as a negative control.
    BinaryQuadratic { complex: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RepSpec {
    pub family: Family,
    pub include_center: bool,
}

impl RepSpec {
    pub fn tensor_real(p: u32, q: u32) -> Self {
        RepSpec {
            family: Family::TensorReal { p, q },
            include_center: false,
        }
    }

    pub fn tensor_complex(n: u32) -> Self {
        RepSpec {
            family: Family::TensorComplex { n },
            include_center: false,
        }
    }

    pub fn binary_cubic(complex: bool) -> Self {
        RepSpec {
            family: Family::BinaryCubic { complex },
            include_center: false,
        }
    }

    pub fn binary_quadratic(complex: bool) -> Self {
        RepSpec {
            family: Family::BinaryQuadratic { complex },
            include_center: false,
        }
    }

    pub fn with_center(mut self) -> Self {
        self.include_center = true;
        self
    }

    pub fn validate(&self) -> Result<(), RepError> {
        match self.family {
            Family::TensorReal { p, q } => {
                if p + q < 2 {
                    return Err(RepError::InvalidSpec(format!(
                        "tensor family needs p+q >= 2, got ({p},{q})"
                    )));
                }
                if p == 0 {
                    return Err(RepError::InvalidSpec(format!(
                        "signature (0,{q}) violates the eps_1 = +1 normalization; \
                         use the sign-flipped signature ({q},0)"
                    )));
                }
            }
            Family::TensorComplex { n } => {
                if n < 2 {
                    return Err(RepError::InvalidSpec(format!(
                        "complex tensor family needs n >= 2, got {n}"
                    )));
                }
            }
            Family::BinaryCubic { .. } | Family::BinaryQuadratic { .. } => {
                if self.include_center {
                    return Err(RepError::InvalidSpec(
                        "the center flag applies to the tensor families only".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn is_complex(&self) -> bool {
        match self.family {
            Family::TensorReal { .. } => false,
            Family::TensorComplex { .. } => true,
            Family::BinaryCubic { complex } | Family::BinaryQuadratic { complex } => complex,
        }
    }

    pub fn is_tensor(&self) -> bool {
        matches!(
            self.family,
            Family::TensorReal { .. } | Family::TensorComplex { .. }
        )
    }

    /// n = dim Wn for tensor families, 0 otherwise.
    pub fn tensor_n(&self) -> usize {
        match self.family {
            Family::TensorReal { p, q } => (p + q) as usize,
            Family::TensorComplex { n } => n as usize,
            _ => 0,
        }
    }
}

/// Signature values for the orthonormal basis x_1..x_n of Wn.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Metric {
    pub eps: Vec<i8>,
}

impl Metric {
    pub fn inner(&self, i: usize, j: usize) -> Scalar {
        if i == j {
            Scalar::from_int(self.eps[i] as i64)
        } else {
            Scalar::zero()
        }
    }
}

/// Kind of a g-basis element in the fixed ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GBasisKind {
    /// e1^2, e1e2, e2^2 (index 0, 1, 2).
    Sl2(usize),
    /// x_i ^ x_j with i < j.
    So(usize, usize),
    /// F . id.
    Center,
}

/// Element of g in the S^2(W2) / Lambda^2(Wn) coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgElem {
    pub spec: RepSpec,
    pub coeffs: Vec<Scalar>,
}

/// Element of V over the basis {e_a (x) x_i} (tensor) or the monomial basis
/// (binary families).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VecElem {
    pub spec: RepSpec,
    pub coeffs: Vec<Scalar>,
}

/// All per-spec data: bases, action matrices, structure constants, the
/// invariant pairing and 2-form, and index tables shared by every module.
pub struct RepData {
    pub spec: RepSpec,
    pub dim_g: usize,
    pub dim_v: usize,
    pub g_labels: Vec<String>,
    pub v_labels: Vec<String>,
    pub g_kinds: Vec<GBasisKind>,
    pub metric: Option<Metric>,
    /// Action matrix of each g basis element on V (column j = image of v_j).
    pub action: Vec<DenseMatrix>,
    /// [g_i, g_j] expanded over the g basis.
    pub struct_consts: Vec<Vec<Vec<Scalar>>>,
    /// Gram matrix of the invariant pairing B on the g basis.
    pub gram: DenseMatrix,
    pub gram_inv: DenseMatrix,
    /// Matrix of the invariant 2-form sigma on the V basis; `None` when the
    /// family carries no invariant 2-form.
    pub sigma_mat: Option<DenseMatrix>,
    /// Lambda^2 V* index table: lexicographic pairs k < l.
    pub pairs: Vec<(usize, usize)>,
    pub pair_pos: HashMap<(usize, usize), usize>,
    /// Lambda^3 V* index table: lexicographic triples.
    pub triples: Vec<(usize, usize, usize)>,
    /// S^2 g index table: pairs i <= j.
    pub sym_pairs: Vec<(usize, usize)>,
    pub center_index: Option<usize>,
}

static CACHE: OnceLock<Mutex<HashMap<RepSpec, Arc<RepData>>>> = OnceLock::new();

/// Builds (or fetches memoized) representation data for a spec.
pub fn rep_data(spec: RepSpec) -> Result<Arc<RepData>, RepError> {
    spec.validate()?;
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(found) = cache.lock().unwrap().get(&spec) {
        return Ok(found.clone());
    }
    let built = Arc::new(RepData::build(spec)?);
    let mut guard = cache.lock().unwrap();
    Ok(guard.entry(spec).or_insert(built).clone())
}

impl RepData {
    fn build(spec: RepSpec) -> Result<RepData, RepError> {
        let (dim_v, n, metric) = match spec.family {
            Family::TensorReal { p, q } => {
                let n = (p + q) as usize;
                let mut eps = vec![1i8; p as usize];
                eps.extend(std::iter::repeat(-1i8).take(q as usize));
                (2 * n, n, Some(Metric { eps }))
            }
            Family::TensorComplex { n } => {
                let n = n as usize;
                (2 * n, n, Some(Metric { eps: vec![1i8; n] }))
            }
            Family::BinaryCubic { .. } => (4, 0, None),
            Family::BinaryQuadratic { .. } => (3, 0, None),
        };

        let mut g_labels = vec!["e1^2".to_string(), "e1e2".to_string(), "e2^2".to_string()];
        let mut g_kinds = vec![GBasisKind::Sl2(0), GBasisKind::Sl2(1), GBasisKind::Sl2(2)];
        if spec.is_tensor() {
            for i in 0..n {
                for j in i + 1..n {
                    g_labels.push(format!("x{}^x{}", i + 1, j + 1));
                    g_kinds.push(GBasisKind::So(i, j));
                }
            }
            if spec.include_center {
                g_labels.push("id".to_string());
                g_kinds.push(GBasisKind::Center);
            }
        }
        let dim_g = g_labels.len();
        let center_index = g_kinds
            .iter()
            .position(|k| matches!(k, GBasisKind::Center));

        let v_labels: Vec<String> = match spec.family {
            Family::TensorReal { .. } | Family::TensorComplex { .. } => (0..2)
                .flat_map(|a| (0..n).map(move |i| format!("e{}*x{}", a + 1, i + 1)))
                .collect(),
            Family::BinaryCubic { .. } => ["e1^3", "e1^2e2", "e1e2^2", "e2^3"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            Family::BinaryQuadratic { .. } => ["e1^2", "e1e2", "e2^2"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        };

        let action: Vec<DenseMatrix> = g_kinds
            .iter()
            .map(|kind| Self::action_matrix(spec, metric.as_ref(), dim_v, n, *kind))
            .collect();

        // Structure constants by solving [E_i, E_j] in the span of the E_k:
        // unique because the representations are faithful.
        let flat = |m: &DenseMatrix| -> Vec<Scalar> {
            (0..dim_v)
                .flat_map(|r| (0..dim_v).map(move |c| m.get(r, c).clone()))
                .collect()
        };
        let basis_flat: Vec<Vec<Scalar>> = action.iter().map(&flat).collect();
        let basis_mat = DenseMatrix::from_cols(&basis_flat, dim_v * dim_v);
        let mut struct_consts = vec![vec![Vec::new(); dim_g]; dim_g];
        for i in 0..dim_g {
            for j in 0..dim_g {
                if j < i {
                    let mirrored: Vec<Scalar> =
                        struct_consts[j][i].iter().map(|c| -c).collect();
                    struct_consts[i][j] = mirrored;
                    continue;
                }
                if i == j {
                    struct_consts[i][j] = vec![Scalar::zero(); dim_g];
                    continue;
                }
                let comm = commutator(&action[i], &action[j]);
                let sol = linalg::solve(&basis_mat, &flat(&comm))
                    .expect("consistent dimensions")
                    .expect("commutator stays inside the algebra");
                struct_consts[i][j] = sol;
            }
        }

        let gram = Self::gram_matrix(spec, metric.as_ref(), &g_kinds, &action, dim_v);
        let gram_inv = invert(&gram).ok_or_else(|| {
            RepError::InvalidSpec("invariant pairing is degenerate".to_string())
        })?;

        let pairs: Vec<(usize, usize)> = (0..dim_v)
            .flat_map(|k| ((k + 1)..dim_v).map(move |l| (k, l)))
            .collect();
        let pair_pos: HashMap<(usize, usize), usize> = pairs
            .iter()
            .enumerate()
            .map(|(idx, &p)| (p, idx))
            .collect();
        let triples: Vec<(usize, usize, usize)> = (0..dim_v)
            .flat_map(|k| {
                ((k + 1)..dim_v)
                    .flat_map(move |l| ((l + 1)..dim_v).map(move |m| (k, l, m)))
            })
            .collect();
        let sym_pairs: Vec<(usize, usize)> = (0..dim_g)
            .flat_map(|i| (i..dim_g).map(move |j| (i, j)))
            .collect();

        let sigma_mat = Self::sigma_matrix(spec, metric.as_ref(), &action, dim_v, n, &pairs);

        Ok(RepData {
            spec,
            dim_g,
            dim_v,
            g_labels,
            v_labels,
            g_kinds,
            metric,
            action,
            struct_consts,
            gram,
            gram_inv,
            sigma_mat,
            pairs,
            pair_pos,
            triples,
            sym_pairs,
            center_index,
        })
    }

    fn action_matrix(
        spec: RepSpec,
        metric: Option<&Metric>,
        dim_v: usize,
        n: usize,
        kind: GBasisKind,
    ) -> DenseMatrix {
        let mut m = DenseMatrix::zero(dim_v, dim_v);
        match spec.family {
            Family::TensorReal { .. } | Family::TensorComplex { .. } => {
                let idx = |a: usize, i: usize| a * n + i;
                match kind {
                    GBasisKind::Sl2(s) => {
                        // e1^2: e2 -> 2 e1; e1e2: e1 -> -e1, e2 -> e2;
                        // e2^2: e1 -> -2 e2. Tensored with the identity on Wn.
                        for i in 0..n {
                            match s {
                                0 => m.set(idx(0, i), idx(1, i), Scalar::from_int(2)),
                                1 => {
                                    m.set(idx(0, i), idx(0, i), Scalar::from_int(-1));
                                    m.set(idx(1, i), idx(1, i), Scalar::from_int(1));
                                }
                                _ => m.set(idx(1, i), idx(0, i), Scalar::from_int(-2)),
                            }
                        }
                    }
                    GBasisKind::So(i, j) => {
                        // x_i -> eps_i x_j, x_j -> -eps_j x_i on Wn.
                        let eps = metric.expect("tensor family has a metric");
                        for a in 0..2 {
                            m.set(
                                idx(a, j),
                                idx(a, i),
                                Scalar::from_int(eps.eps[i] as i64),
                            );
                            m.set(
                                idx(a, i),
                                idx(a, j),
                                Scalar::from_int(-(eps.eps[j] as i64)),
                            );
                        }
                    }
                    GBasisKind::Center => {
                        for s in 0..dim_v {
                            m.set(s, s, Scalar::one());
                        }
                    }
                }
            }
            Family::BinaryCubic { .. } | Family::BinaryQuadratic { .. } => {
                // Derivation action on e1^(d-k) e2^k, k = 0..d.
                let d = dim_v - 1;
                let GBasisKind::Sl2(s) = kind else {
                    unreachable!("binary families have no so part")
                };
                for k in 0..=d {
                    match s {
                        // e1^2 sends e2 -> 2 e1.
                        0 => {
                            if k >= 1 {
                                m.set(k - 1, k, Scalar::from_int(2 * k as i64));
                            }
                        }
                        // e1e2 scales the monomial by (2k - d).
                        1 => m.set(k, k, Scalar::from_int(2 * k as i64 - d as i64)),
                        // e2^2 sends e1 -> -2 e2.
                        _ => {
                            if k < d {
                                m.set(k + 1, k, Scalar::from_int(-2 * (d - k) as i64));
                            }
                        }
                    }
                }
            }
        }
        m
    }

    fn gram_matrix(
        spec: RepSpec,
        metric: Option<&Metric>,
        kinds: &[GBasisKind],
        action: &[DenseMatrix],
        dim_v: usize,
    ) -> DenseMatrix {
        let dim_g = kinds.len();
        let mut gram = DenseMatrix::zero(dim_g, dim_g);
        if spec.is_tensor() {
            let eps = metric.expect("tensor family has a metric");
            for (k, kk) in kinds.iter().enumerate() {
                for (l, kl) in kinds.iter().enumerate() {
                    let val = match (kk, kl) {
                        // B(ef, gh) = <e,g><f,h> + <f,g><e,h> on S^2(W2);
                        // on the basis this gives the block below.
                        (GBasisKind::Sl2(a), GBasisKind::Sl2(b)) => match (a, b) {
                            (0, 2) | (2, 0) => Scalar::from_int(2),
                            (1, 1) => Scalar::from_int(-1),
                            _ => Scalar::zero(),
                        },
                        // B(x_i^x_j, x_k^x_l) = eps_i eps_j on the diagonal.
                        (GBasisKind::So(i, j), GBasisKind::So(k2, l2)) => {
                            if (i, j) == (k2, l2) {
                                Scalar::from_int((eps.eps[*i] * eps.eps[*j]) as i64)
                            } else {
                                Scalar::zero()
                            }
                        }
                        // The displayed pairing does not cover the center;
                        // extend by the trace form so that B stays invariant
                        // and nondegenerate: B(id, id) = dim V.
                        (GBasisKind::Center, GBasisKind::Center) => {
                            Scalar::from_int(dim_v as i64)
                        }
                        _ => Scalar::zero(),
                    };
                    gram.set(k, l, val);
                }
            }
        } else {
            // Trace form of the action, scaled so that B(e1e2, e1e2) = -1,
            // matching the tensor-family normalization on sl(2).
            let trace = |a: &DenseMatrix, b: &DenseMatrix| -> Scalar {
                let mut acc = Scalar::zero();
                for r in 0..dim_v {
                    for c in 0..dim_v {
                        acc += &(a.get(r, c) * b.get(c, r));
                    }
                }
                acc
            };
            let scale = trace(&action[1], &action[1]);
            for k in 0..dim_g {
                for l in 0..dim_g {
                    gram.set(k, l, &(-&trace(&action[k], &action[l])) / &scale);
                }
            }
        }
        gram
    }

    fn sigma_matrix(
        spec: RepSpec,
        metric: Option<&Metric>,
        action: &[DenseMatrix],
        dim_v: usize,
        n: usize,
        pairs: &[(usize, usize)],
    ) -> Option<DenseMatrix> {
        if spec.is_tensor() {
            // sigma(e_a (x) x_i, e_b (x) x_j) = <e_a, e_b> (x_i, x_j).
            let eps = metric.expect("tensor family has a metric");
            let mut m = DenseMatrix::zero(dim_v, dim_v);
            for i in 0..n {
                m.set(i, n + i, Scalar::from_int(eps.eps[i] as i64));
                m.set(n + i, i, Scalar::from_int(-(eps.eps[i] as i64)));
            }
            return Some(m);
        }
        // Invariant 2-forms as the exact nullspace of the invariance
        // constraints over the Lambda^2 V* coordinates.
        let n_pairs = pairs.len();
        let mut rows = Vec::new();
        for e in action {
            for p in 0..dim_v {
                for q in (p + 1)..dim_v {
                    let mut row = vec![Scalar::zero(); n_pairs];
                    for (pos, &(k, l)) in pairs.iter().enumerate() {
                        // omega_kl(E v_p, v_q) + omega_kl(v_p, E v_q)
                        let mut c = Scalar::zero();
                        if q == l {
                            c += e.get(k, p);
                        }
                        if q == k {
                            c -= e.get(l, p);
                        }
                        if p == k {
                            c += e.get(l, q);
                        }
                        if p == l {
                            c -= e.get(k, q);
                        }
                        row[pos] = c;
                    }
                    rows.push(row);
                }
            }
        }
        let null = DenseMatrix::from_rows(rows).nullspace();
        match null.len() {
            0 => None,
            1 => {
                let mut coeffs = null.into_iter().next().unwrap();
                let lead = coeffs
                    .iter()
                    .find(|c| !c.is_zero())
                    .expect("nonzero basis vector")
                    .clone();
                let inv = lead.recip();
                for c in &mut coeffs {
                    *c = &*c * &inv;
                }
                let mut m = DenseMatrix::zero(dim_v, dim_v);
                for (pos, &(k, l)) in pairs.iter().enumerate() {
                    m.set(k, l, coeffs[pos].clone());
                    m.set(l, k, -&coeffs[pos]);
                }
                Some(m)
            }
            more => unreachable!("invariant 2-form space has dimension {more} > 1"),
        }
    }

    fn check_same_spec(&self, spec: RepSpec) -> Result<(), RepError> {
        if spec == self.spec {
            Ok(())
        } else {
            Err(RepError::SpecMismatch)
        }
    }

    pub fn zero_alg(&self) -> AlgElem {
        AlgElem {
            spec: self.spec,
            coeffs: vec![Scalar::zero(); self.dim_g],
        }
    }

    pub fn alg_from_coeffs(&self, coeffs: Vec<Scalar>) -> AlgElem {
        assert_eq!(coeffs.len(), self.dim_g);
        AlgElem {
            spec: self.spec,
            coeffs,
        }
    }

    pub fn basis_alg(&self, k: usize) -> AlgElem {
        let mut a = self.zero_alg();
        a.coeffs[k] = Scalar::one();
        a
    }

    pub fn vec_from_coeffs(&self, coeffs: Vec<Scalar>) -> VecElem {
        assert_eq!(coeffs.len(), self.dim_v);
        VecElem {
            spec: self.spec,
            coeffs,
        }
    }

    pub fn basis_vec(&self, s: usize) -> VecElem {
        let mut coeffs = vec![Scalar::zero(); self.dim_v];
        coeffs[s] = Scalar::one();
        VecElem {
            spec: self.spec,
            coeffs,
        }
    }

    /// (A+M) . v on V.
    pub fn act(&self, a: &AlgElem, v: &VecElem) -> Result<VecElem, RepError> {
        self.check_same_spec(a.spec)?;
        self.check_same_spec(v.spec)?;
        let mut out = vec![Scalar::zero(); self.dim_v];
        for (k, c) in a.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let img = self.action[k].mul_vec(&v.coeffs).expect("dimensions");
            for (o, x) in out.iter_mut().zip(img) {
                if !x.is_zero() {
                    *o += &(c * &x);
                }
            }
        }
        Ok(self.vec_from_coeffs(out))
    }

    /// Lie bracket, computed through the structure constants.
    pub fn bracket(&self, a: &AlgElem, b: &AlgElem) -> Result<AlgElem, RepError> {
        self.check_same_spec(a.spec)?;
        self.check_same_spec(b.spec)?;
        let mut out = vec![Scalar::zero(); self.dim_g];
        for (i, ai) in a.coeffs.iter().enumerate() {
            if ai.is_zero() {
                continue;
            }
            for (j, bj) in b.coeffs.iter().enumerate() {
                if bj.is_zero() {
                    continue;
                }
                let prod = ai * bj;
                for (k, c) in self.struct_consts[i][j].iter().enumerate() {
                    if !c.is_zero() {
                        out[k] += &(&prod * c);
                    }
                }
            }
        }
        Ok(self.alg_from_coeffs(out))
    }

    /// The invariant pairing B (Killing-type normalization of the paper's
    /// displayed formula; trace form for the binary families).
    pub fn pair_b(&self, a: &AlgElem, b: &AlgElem) -> Result<Scalar, RepError> {
        self.check_same_spec(a.spec)?;
        self.check_same_spec(b.spec)?;
        let mut acc = Scalar::zero();
        for (k, ak) in a.coeffs.iter().enumerate() {
            if ak.is_zero() {
                continue;
            }
            for (l, bl) in b.coeffs.iter().enumerate() {
                if bl.is_zero() {
                    continue;
                }
                let g = self.gram.get(k, l);
                if !g.is_zero() {
                    acc += &(&(ak * bl) * g);
                }
            }
        }
        Ok(acc)
    }

    /// The invariant 2-form sigma.
    pub fn sigma(&self, u: &VecElem, v: &VecElem) -> Result<Scalar, RepError> {
        self.check_same_spec(u.spec)?;
        self.check_same_spec(v.spec)?;
        let m = self.sigma_mat.as_ref().ok_or_else(|| {
            RepError::Unsupported("this family carries no invariant 2-form".to_string())
        })?;
        let mut acc = Scalar::zero();
        for (s, us) in u.coeffs.iter().enumerate() {
            if us.is_zero() {
                continue;
            }
            for (t, vt) in v.coeffs.iter().enumerate() {
                if vt.is_zero() {
                    continue;
                }
                let g = m.get(s, t);
                if !g.is_zero() {
                    acc += &(&(us * vt) * g);
                }
            }
        }
        Ok(acc)
    }

    /// B-flat: g -> g*, coordinates against the dual basis.
    pub fn b_flat(&self, a: &AlgElem) -> Vec<Scalar> {
        self.gram.mul_vec(&a.coeffs).expect("dimensions")
    }

    /// B-sharp: g* -> g.
    pub fn b_sharp(&self, p: &[Scalar]) -> AlgElem {
        self.alg_from_coeffs(self.gram_inv.mul_vec(p).expect("dimensions"))
    }

    /// 2x2 endomorphism of W2 determined by the sl(2) part (tensor and
    /// binary families share the S^2 W2 coordinates).
    pub fn sl2_endo(&self, a: &AlgElem) -> [[Scalar; 2]; 2] {
        let c0 = &a.coeffs[0];
        let c1 = &a.coeffs[1];
        let c2 = &a.coeffs[2];
        [
            [-c1, &Scalar::from_int(2) * c0],
            [&Scalar::from_int(-2) * c2, c1.clone()],
        ]
    }

    /// n x n endomorphism of Wn determined by the so part.
    pub fn so_endo(&self, a: &AlgElem) -> DenseMatrix {
        let n = self.spec.tensor_n();
        let eps = &self.metric.as_ref().expect("tensor family").eps;
        let mut m = DenseMatrix::zero(n, n);
        for (k, kind) in self.g_kinds.iter().enumerate() {
            let GBasisKind::So(i, j) = kind else { continue };
            let c = &a.coeffs[k];
            if c.is_zero() {
                continue;
            }
            let mji = m.get(*j, *i) + &(c * &Scalar::from_int(eps[*i] as i64));
            m.set(*j, *i, mji);
            let mij = m.get(*i, *j) - &(c * &Scalar::from_int(eps[*j] as i64));
            m.set(*i, *j, mij);
        }
        m
    }

    /// Inner product (x, y) on Wn coordinates.
    pub fn wn_inner(&self, x: &[Scalar], y: &[Scalar]) -> Scalar {
        let eps = &self.metric.as_ref().expect("tensor family").eps;
        let mut acc = Scalar::zero();
        for i in 0..x.len() {
            if !x[i].is_zero() && !y[i].is_zero() {
                acc += &(&(&x[i] * &y[i]) * &Scalar::from_int(eps[i] as i64));
            }
        }
        acc
    }

    /// Area form <e, f> on W2 coordinates.
    pub fn w2_area(e: &[Scalar; 2], f: &[Scalar; 2]) -> Scalar {
        &(&e[0] * &f[1]) - &(&e[1] * &f[0])
    }

    /// x ^ y expanded over the Lambda^2 Wn part of the g basis.
    pub fn wedge_to_g(&self, x: &[Scalar], y: &[Scalar]) -> AlgElem {
        let mut a = self.zero_alg();
        for (k, kind) in self.g_kinds.iter().enumerate() {
            let GBasisKind::So(i, j) = kind else { continue };
            a.coeffs[k] = &(&x[*i] * &y[*j]) - &(&x[*j] * &y[*i]);
        }
        a
    }

    /// e f expanded over the S^2 W2 part of the g basis.
    pub fn sym2_to_g(&self, e: &[Scalar; 2], f: &[Scalar; 2]) -> AlgElem {
        let mut a = self.zero_alg();
        a.coeffs[0] = &e[0] * &f[0];
        a.coeffs[1] = &(&e[0] * &f[1]) + &(&e[1] * &f[0]);
        a.coeffs[2] = &e[1] * &f[1];
        a
    }

    /// Index of e_a (x) x_i in the V basis.
    pub fn v_index(&self, a: usize, i: usize) -> usize {
        a * self.spec.tensor_n() + i
    }

    /// Dimensions of the derived spaces used downstream.
    pub fn space_dims(&self) -> SpaceDims {
        SpaceDims {
            dim_g: self.dim_g,
            dim_v: self.dim_v,
            dim_lambda2: self.pairs.len(),
            dim_lambda3: self.triples.len(),
            dim_sym2_g: self.sym_pairs.len(),
        }
    }
}

/// Sizes of the indexed bases returned by `space_dims`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpaceDims {
    pub dim_g: usize,
    pub dim_v: usize,
    pub dim_lambda2: usize,
    pub dim_lambda3: usize,
    pub dim_sym2_g: usize,
}

fn commutator(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let n = a.rows();
    let mut m = DenseMatrix::zero(n, n);
    for r in 0..n {
        for c in 0..n {
            let mut acc = Scalar::zero();
            for k in 0..n {
                let ab = a.get(r, k) * b.get(k, c);
                let ba = b.get(r, k) * a.get(k, c);
                acc += &(&ab - &ba);
            }
            m.set(r, c, acc);
        }
    }
    m
}

fn invert(m: &DenseMatrix) -> Option<DenseMatrix> {
    let n = m.rows();
    let mut inv = DenseMatrix::zero(n, n);
    for k in 0..n {
        let mut e = vec![Scalar::zero(); n];
        e[k] = Scalar::one();
        let col = linalg::solve(m, &e).ok()??;
        for r in 0..n {
            inv.set(r, k, col[r].clone());
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(n: i64) -> Scalar {
        Scalar::from_int(n)
    }

    #[test]
    fn dimensions_match_counts() {
        let d = rep_data(RepSpec::tensor_real(3, 0)).unwrap();
        assert_eq!(d.dim_g, 6);
        assert_eq!(d.dim_v, 6);
        assert_eq!(d.space_dims().dim_lambda2, 15);

        let d = rep_data(RepSpec::tensor_real(2, 0)).unwrap();
        assert_eq!(d.dim_g, 4);
        assert_eq!(d.dim_v, 4);

        let d = rep_data(RepSpec::binary_cubic(false)).unwrap();
        assert_eq!(d.dim_g, 3);
        assert_eq!(d.dim_v, 4);

        let d = rep_data(RepSpec::tensor_complex(3).with_center()).unwrap();
        assert_eq!(d.dim_g, 7);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(rep_data(RepSpec::tensor_real(1, 0)).is_err());
        assert!(rep_data(RepSpec::tensor_real(0, 3)).is_err());
        assert!(rep_data(RepSpec::tensor_complex(1)).is_err());
        assert!(rep_data(RepSpec::binary_cubic(false).with_center()).is_err());
    }

    #[test]
    fn so_action_on_basis_vector() {
        // x1^x2 acting on x2 gives -x1 (signature (3,0)).
        let d = rep_data(RepSpec::tensor_real(3, 0)).unwrap();
        let a = d.basis_alg(3); // x1^x2
        let m = d.so_endo(&a);
        assert_eq!(m.get(0, 1), &s(-1));
        assert_eq!(m.get(1, 0), &s(1));
        // On V: (x1^x2).(e1 (x) x2) = -e1 (x) x1.
        let v = d.basis_vec(d.v_index(0, 1));
        let out = d.act(&a, &v).unwrap();
        assert_eq!(out.coeffs[d.v_index(0, 0)], s(-1));
    }

    #[test]
    fn sl2_action_on_basis_vector() {
        // e1e2 acting on e1 gives -e1 (with <e1,e2> = 1).
        let d = rep_data(RepSpec::tensor_real(3, 0)).unwrap();
        let a = d.basis_alg(1);
        let e = d.sl2_endo(&a);
        assert_eq!(e[0][0], s(-1));
        assert_eq!(e[1][1], s(1));
    }

    #[test]
    fn act_is_linear_in_zero() {
        let d = rep_data(RepSpec::tensor_real(2, 1)).unwrap();
        let v = d.basis_vec(2);
        let out = d.act(&d.zero_alg(), &v).unwrap();
        assert!(out.coeffs.iter().all(Scalar::is_zero));
    }

    #[test]
    fn bracket_of_so_elements() {
        // [x1^x2, x2^x3] = -(x1^x3) for signature (3,0).
        let d = rep_data(RepSpec::tensor_real(3, 0)).unwrap();
        let a = d.basis_alg(3); // x1^x2
        let b = d.basis_alg(5); // x2^x3
        let c = d.bracket(&a, &b).unwrap();
        let mut expected = d.zero_alg();
        expected.coeffs[4] = s(-1); // x1^x3
        assert_eq!(c, expected);
    }

    #[test]
    fn bracket_antisymmetric_and_blockwise() {
        let d = rep_data(RepSpec::tensor_real(2, 1)).unwrap();
        for i in 0..d.dim_g {
            let gi = d.basis_alg(i);
            assert!(d
                .bracket(&gi, &gi)
                .unwrap()
                .coeffs
                .iter()
                .all(Scalar::is_zero));
        }
        // Cross block sl(2) x so vanishes.
        let a = d.basis_alg(0);
        let m = d.basis_alg(4);
        assert!(d
            .bracket(&a, &m)
            .unwrap()
            .coeffs
            .iter()
            .all(Scalar::is_zero));
    }

    #[test]
    fn act_respects_brackets() {
        for spec in [
            RepSpec::tensor_real(2, 1),
            RepSpec::tensor_complex(3),
            RepSpec::binary_cubic(false),
            RepSpec::binary_quadratic(false),
            RepSpec::tensor_complex(3).with_center(),
        ] {
            let d = rep_data(spec).unwrap();
            for i in 0..d.dim_g {
                for j in 0..d.dim_g {
                    let br = d.bracket(&d.basis_alg(i), &d.basis_alg(j)).unwrap();
                    for v in 0..d.dim_v {
                        let vv = d.basis_vec(v);
                        let lhs = d.act(&br, &vv).unwrap();
                        let ij = d
                            .act(&d.basis_alg(i), &d.act(&d.basis_alg(j), &vv).unwrap())
                            .unwrap();
                        let ji = d
                            .act(&d.basis_alg(j), &d.act(&d.basis_alg(i), &vv).unwrap())
                            .unwrap();
                        for t in 0..d.dim_v {
                            assert_eq!(lhs.coeffs[t], &ij.coeffs[t] - &ji.coeffs[t]);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn pairing_values_and_symmetry() {
        let d = rep_data(RepSpec::tensor_real(3, 0)).unwrap();
        let so12 = d.basis_alg(3);
        assert_eq!(d.pair_b(&so12, &so12).unwrap(), s(1));
        let e1e2 = d.basis_alg(1);
        assert_eq!(d.pair_b(&e1e2, &e1e2).unwrap(), s(-1));
        assert_eq!(d.pair_b(&e1e2, &so12).unwrap(), s(0));
        // Indefinite signature flips the so diagonal.
        let d = rep_data(RepSpec::tensor_real(2, 1)).unwrap();
        let so13 = d.basis_alg(4);
        assert_eq!(d.pair_b(&so13, &so13).unwrap(), s(-1));
    }

    #[test]
    fn pairing_nondegenerate_and_invariant() {
        for spec in [
            RepSpec::tensor_real(2, 2),
            RepSpec::tensor_complex(3),
            RepSpec::binary_cubic(false),
            RepSpec::tensor_complex(3).with_center(),
        ] {
            let d = rep_data(spec).unwrap();
            assert_eq!(d.gram.rank(), d.dim_g);
            // B([c,a], b) + B(a, [c,b]) = 0 over all basis triples.
            for c in 0..d.dim_g {
                for a in 0..d.dim_g {
                    for b in 0..d.dim_g {
                        let ca = d.bracket(&d.basis_alg(c), &d.basis_alg(a)).unwrap();
                        let cb = d.bracket(&d.basis_alg(c), &d.basis_alg(b)).unwrap();
                        let lhs = d.pair_b(&ca, &d.basis_alg(b)).unwrap();
                        let rhs = d.pair_b(&d.basis_alg(a), &cb).unwrap();
                        assert!((&lhs + &rhs).is_zero());
                    }
                }
            }
        }
    }

    #[test]
    fn binary_cubic_pairing_matches_sl2_normalization() {
        let d = rep_data(RepSpec::binary_cubic(false)).unwrap();
        let h = d.basis_alg(1);
        assert_eq!(d.pair_b(&h, &h).unwrap(), s(-1));
        let x = d.basis_alg(0);
        let y = d.basis_alg(2);
        assert_eq!(d.pair_b(&x, &y).unwrap(), s(2));
    }

    #[test]
    fn sigma_values() {
        let d = rep_data(RepSpec::tensor_real(3, 0)).unwrap();
        let u = d.basis_vec(d.v_index(0, 0)); // e1 (x) x1
        let v = d.basis_vec(d.v_index(1, 0)); // e2 (x) x1
        assert_eq!(d.sigma(&u, &v).unwrap(), s(1));
        assert_eq!(d.sigma(&u, &u).unwrap(), s(0));
        let w = d.basis_vec(d.v_index(0, 1)); // e1 (x) x2
        assert_eq!(d.sigma(&u, &w).unwrap(), s(0));
    }

    #[test]
    fn sigma_invariance() {
        for spec in [
            RepSpec::tensor_real(2, 1),
            RepSpec::tensor_complex(3),
            RepSpec::binary_cubic(false),
        ] {
            let d = rep_data(spec).unwrap();
            for k in 0..d.dim_g {
                if matches!(d.g_kinds[k], GBasisKind::Center) {
                    continue;
                }
                let a = d.basis_alg(k);
                for s_idx in 0..d.dim_v {
                    for t in 0..d.dim_v {
                        let u = d.basis_vec(s_idx);
                        let v = d.basis_vec(t);
                        let au = d.act(&a, &u).unwrap();
                        let av = d.act(&a, &v).unwrap();
                        let total =
                            &d.sigma(&au, &v).unwrap() + &d.sigma(&u, &av).unwrap();
                        assert!(total.is_zero());
                    }
                }
            }
        }
    }

    #[test]
    fn binary_quadratic_has_no_invariant_two_form() {
        let d = rep_data(RepSpec::binary_quadratic(false)).unwrap();
        assert!(d.sigma_mat.is_none());
        let u = d.basis_vec(0);
        assert!(matches!(
            d.sigma(&u, &u),
            Err(RepError::Unsupported(_))
        ));
    }

    #[test]
    fn b_flat_sharp_round_trip() {
        let d = rep_data(RepSpec::tensor_real(2, 1)).unwrap();
        for k in 0..d.dim_g {
            let a = d.basis_alg(k);
            let p = d.b_flat(&a);
            let back = d.b_sharp(&p);
            assert_eq!(back, a);
        }
    }

    #[test]
    fn area_form_invariance_under_sl2() {
        let d = rep_data(RepSpec::tensor_real(2, 1)).unwrap();
        for k in 0..3 {
            let e = d.sl2_endo(&d.basis_alg(k));
            // <Ae, e'> + <e, Ae'> = 0 for basis vectors.
            for a in 0..2 {
                for b in 0..2 {
                    let ea: [Scalar; 2] = [e[0][a].clone(), e[1][a].clone()];
                    let eb: [Scalar; 2] = [e[0][b].clone(), e[1][b].clone()];
                    let mut unit_a = [Scalar::zero(), Scalar::zero()];
                    unit_a[a] = Scalar::one();
                    let mut unit_b = [Scalar::zero(), Scalar::zero()];
                    unit_b[b] = Scalar::one();
                    let total = &RepData::w2_area(&ea, &unit_b) + &RepData::w2_area(&unit_a, &eb);
                    assert!(total.is_zero());
                }
            }
        }
    }

    #[test]
    fn so_endo_is_metric_skew() {
        let d = rep_data(RepSpec::tensor_real(2, 2)).unwrap();
        let mut a = d.zero_alg();
        for k in 3..d.dim_g {
            a.coeffs[k] = Scalar::from_int((k as i64 % 3) - 1);
        }
        let m = d.so_endo(&a);
        let n = d.spec.tensor_n();
        for i in 0..n {
            for j in 0..n {
                // (M x_i, x_j) + (x_i, M x_j) = 0
                let col_i: Vec<Scalar> = (0..n).map(|r| m.get(r, i).clone()).collect();
                let col_j: Vec<Scalar> = (0..n).map(|r| m.get(r, j).clone()).collect();
                let mut xi = vec![Scalar::zero(); n];
                xi[i] = Scalar::one();
                let mut xj = vec![Scalar::zero(); n];
                xj[j] = Scalar::one();
                let total = &d.wn_inner(&col_i, &xj) + &d.wn_inner(&xi, &col_j);
                assert!(total.is_zero());
            }
        }
    }
}
