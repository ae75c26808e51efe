//! Theorem-level checks shared by the CLI and the acceptance suite: each
//! criterion runs a concrete computation at a pinned tolerance and reports
//! one pass/fail line per asserted quantity.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::curvature::{
    berger_check, curvature_space, full_curvature_check, induced_maps, jet_from_phi2, jet_space,
    rho_flat, rho_phi2_proportionality, second_curvature_space,
};
use crate::dynamics::{
    build_witness_frame, commutator_defect_extrapolated, incompleteness_witness, integrate,
    ode_lemma_scan, witness_initial_point, FlowSpec, IntegratorSettings, Monitor, NumericPhi,
    PhasePoint, C64,
};
use crate::linalg::{self, DenseMatrix};
use crate::poisson::{
    from_quadratic, jacobiator, lemma_reps_solution_space, make_phi, non_admissible_control,
    rank_scan, symmetry_dimension, PhaseCoords, PolyFn,
};
use crate::rep::{rep_data, RepSpec};
use crate::report::CheckLine;
use crate::scalar::{random_scalar, Rat, Scalar};

/// Outcome of one named check: sub-lines plus machine-readable values.
pub struct CheckOutcome {
    pub name: String,
    pub lines: Vec<CheckLine>,
    pub values: BTreeMap<String, Value>,
}

impl CheckOutcome {
    pub fn new(name: impl Into<String>) -> Self {
        CheckOutcome {
            name: name.into(),
            lines: Vec::new(),
            values: BTreeMap::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.passed)
    }

    pub fn exact(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.lines.push(CheckLine::exact(name, passed, detail));
    }

    pub fn residual(&mut self, name: impl Into<String>, residual: f64, tol: f64) {
        self.lines
            .push(CheckLine::residual(name, residual < tol, residual, tol));
    }

    pub fn value(&mut self, key: impl Into<String>, v: Value) {
        self.values.insert(key.into(), v);
    }

    pub fn fail(&mut self, name: impl Into<String>, detail: impl Into<String>) {
        self.lines.push(CheckLine {
            name: name.into(),
            passed: false,
            detail: detail.into(),
        });
    }

    pub fn summary(&self) -> String {
        format!(
            "{}: {}",
            self.name,
            if self.passed() { "PASS" } else { "FAIL" }
        )
    }
}

fn spec_label(spec: RepSpec) -> String {
    use crate::rep::Family;
    let center = if spec.include_center { "+center" } else { "" };
    match spec.family {
        Family::TensorReal { p, q } => format!("tensor-real({p},{q}){center}"),
        Family::TensorComplex { n } => format!("tensor-complex({n}){center}"),
        Family::BinaryCubic { complex } => {
            format!("binary-cubic({})", if complex { "C" } else { "R" })
        }
        Family::BinaryQuadratic { complex } => {
            format!("binary-quadratic({})", if complex { "C" } else { "R" })
        }
    }
}

/// All real signatures with p >= 1 for a given n.
pub fn real_signatures(n: u32) -> Vec<RepSpec> {
    (1..=n).map(|p| RepSpec::tensor_real(p, n - p)).collect()
}

/// The tensor specs of the acceptance criteria: every real signature with
/// p + q in {3, 4, 5} plus the complex families n = 3, 4.
pub fn acceptance_tensor_specs() -> Vec<RepSpec> {
    let mut specs = Vec::new();
    for n in 3..=5 {
        specs.extend(real_signatures(n));
    }
    specs.push(RepSpec::tensor_complex(3));
    specs.push(RepSpec::tensor_complex(4));
    specs
}

fn expected_dim_g(n: usize) -> usize {
    3 + n * (n - 1) / 2
}

/// Criterion 1: dim K(g) = dim g for every tensor spec with n in {3,4,5}
/// real (all signatures) and n in {3,4} complex; dim K = 9 for n = 2.
pub fn criterion_1_curvature_dims() -> CheckOutcome {
    let mut out = CheckOutcome::new("criterion-1-curvature-dimensions");
    for spec in acceptance_tensor_specs() {
        let n = spec.tensor_n();
        match curvature_space(spec) {
            Ok(k) => {
                let expect = expected_dim_g(n);
                out.exact(
                    format!("dim K = dim g for {}", spec_label(spec)),
                    k.dim() == expect,
                    format!("dim K = {}, dim g = {expect}", k.dim()),
                );
                out.value(format!("dim_K/{}", spec_label(spec)), json!(k.dim()));
            }
            Err(e) => out.fail(spec_label(spec), e.to_string()),
        }
    }
    for spec in [RepSpec::tensor_real(2, 0), RepSpec::tensor_real(1, 1)] {
        match curvature_space(spec) {
            Ok(k) => {
                out.exact(
                    format!("dim K = 9 for {}", spec_label(spec)),
                    k.dim() == 9,
                    format!("dim K = {}", k.dim()),
                );
                out.value(format!("dim_K/{}", spec_label(spec)), json!(k.dim()));
            }
            Err(e) => out.fail(spec_label(spec), e.to_string()),
        }
    }
    out
}

/// Criterion 2: dim J2 = 1 with trivial infinitesimal g-action for the
/// n >= 3 tensor specs and the binary cubics.
pub fn criterion_2_jet_spaces() -> CheckOutcome {
    let mut out = CheckOutcome::new("criterion-2-jet-spaces");
    let mut specs = acceptance_tensor_specs();
    specs.push(RepSpec::binary_cubic(false));
    specs.push(RepSpec::binary_cubic(true));
    for spec in specs {
        match jet_space(spec) {
            Ok(j2) => {
                out.exact(
                    format!("dim J2 = 1 for {}", spec_label(spec)),
                    j2.dim() == 1,
                    format!("dim J2 = {}", j2.dim()),
                );
                out.exact(
                    format!("J2 acted on trivially for {}", spec_label(spec)),
                    j2.g_invariant,
                    format!("g-invariant = {}", j2.g_invariant),
                );
            }
            Err(e) => out.fail(spec_label(spec), e.to_string()),
        }
    }
    out
}

/// Criterion 3: rho lands in K and spans it, and phi2' o B-flat = c rho
/// with the single constant c = 1.
pub fn criterion_3_rho_spans() -> CheckOutcome {
    let mut out = CheckOutcome::new("criterion-3-rho-spans-curvature");
    for spec in acceptance_tensor_specs() {
        let run = || -> Result<(bool, usize, usize, Scalar), crate::rep::RepError> {
            let rep = rep_data(spec)?;
            let k = curvature_space(spec)?;
            let kflat = k.basis_flat();
            let mut rows = Vec::with_capacity(rep.dim_g);
            let mut all_in_k = true;
            for i in 0..rep.dim_g {
                let r = rho_flat(&rep, &rep.basis_alg(i))?;
                all_in_k &= linalg::span_contains(&kflat, &r.coeffs).expect("ambient");
                rows.push(r.coeffs);
            }
            let rank = DenseMatrix::from_rows(rows).rank();
            let c = rho_phi2_proportionality(&rep)?;
            Ok((all_in_k, rank, k.dim(), c))
        };
        match run() {
            Ok((all_in_k, rank, dim_k, c)) => {
                out.exact(
                    format!("rho lands in K for {}", spec_label(spec)),
                    all_in_k,
                    "span membership of every basis image",
                );
                out.exact(
                    format!("rho spans K for {}", spec_label(spec)),
                    rank == dim_k,
                    format!("rank {rank} vs dim K {dim_k}"),
                );
                out.exact(
                    format!("phi2' o B-flat = c rho for {}", spec_label(spec)),
                    c.is_one(),
                    format!("c = {}", c.to_string_exact()),
                );
                out.value(
                    format!("proportionality/{}", spec_label(spec)),
                    json!(c.to_string_exact()),
                );
            }
            Err(e) => out.fail(spec_label(spec), e.to_string()),
        }
    }
    out
}

/// Criterion 4: phi2'' : V* -> K1 is a bijection (exact rank dim V = dim
/// K1, image inside K1).
pub fn criterion_4_induced_bijections() -> CheckOutcome {
    let mut out = CheckOutcome::new("criterion-4-phi2-induced-maps");
    let mut specs = acceptance_tensor_specs();
    specs.push(RepSpec::binary_cubic(false));
    specs.push(RepSpec::binary_cubic(true));
    for spec in specs {
        let run = || -> Result<(usize, usize, usize, usize, bool), crate::rep::RepError> {
            let rep = rep_data(spec)?;
            let jet = if spec.is_tensor() {
                jet_from_phi2(&rep)?
            } else {
                make_phi(spec, Scalar::zero())?.quad
            };
            let k1 = second_curvature_space(spec)?;
            let k = curvature_space(spec)?;
            let maps = induced_maps(&rep, &jet);
            let k1_flat: Vec<Vec<Scalar>> =
                k1.basis.iter().map(|b| b.flatten(&rep, &k)).collect();
            let mut image_in_k1 = true;
            for s in 0..rep.dim_v {
                let col: Vec<Scalar> = (0..maps.phi2_dblprime.rows())
                    .map(|r| maps.phi2_dblprime.get(r, s).clone())
                    .collect();
                image_in_k1 &= linalg::span_contains(&k1_flat, &col).expect("ambient");
            }
            Ok((
                maps.phi2_prime_rank,
                maps.phi2_dblprime_rank,
                rep.dim_v,
                k1.dim(),
                image_in_k1,
            ))
        };
        match run() {
            Ok((prime_rank, dbl_rank, dim_v, dim_k1, image_in_k1)) => {
                out.exact(
                    format!("phi2'' bijective for {}", spec_label(spec)),
                    dbl_rank == dim_v && dim_v == dim_k1 && image_in_k1,
                    format!(
                        "rank {dbl_rank}, dim V = {dim_v}, dim K1 = {dim_k1}, image in K1 = {image_in_k1}"
                    ),
                );
                out.value(
                    format!("phi2_prime_rank/{}", spec_label(spec)),
                    json!(prime_rank),
                );
            }
            Err(e) => out.fail(spec_label(spec), e.to_string()),
        }
    }
    out
}

/// Criterion 5: with the center included, every K basis element of the
/// complex tensor families has zero center component.
pub fn criterion_5_center_exclusion() -> CheckOutcome {
    let mut out = CheckOutcome::new("criterion-5-center-exclusion");
    for n in [3u32, 4] {
        let spec = RepSpec::tensor_complex(n).with_center();
        let run = || -> Result<(usize, crate::curvature::BergerReport), crate::rep::RepError> {
            let rep = rep_data(spec)?;
            let k = curvature_space(spec)?;
            Ok((k.dim(), berger_check(&rep, &k.basis)))
        };
        match run() {
            Ok((dim_k, report)) => {
                let expect = expected_dim_g(n as usize);
                out.exact(
                    format!("center components vanish for {}", spec_label(spec)),
                    report.center_components_zero == Some(true),
                    "every basis element, every 2-form slot",
                );
                out.exact(
                    format!("dim K matches the centerless algebra for {}", spec_label(spec)),
                    dim_k == expect,
                    format!("dim K = {dim_k}, dim g0 = {expect}"),
                );
                out.exact(
                    format!("curvature span is proper (Gl -> Sl) for {}", spec_label(spec)),
                    report.proper_subalgebra && report.span_dim == expect,
                    format!("span {} inside dim g = {}", report.span_dim, report.dim_g),
                );
            }
            Err(e) => out.fail(spec_label(spec), e.to_string()),
        }
    }
    out
}

/// Criterion 6: the Jacobiator of every coordinate triple is the zero
/// polynomial for phi = phi2 + c sigma, c in {0, 1, -2}; the non-admissible
/// control yields a nonzero Jacobiator.
pub fn criterion_6_jacobi() -> CheckOutcome {
    let mut out = CheckOutcome::new("criterion-6-jacobi-identity");
    let specs = [
        RepSpec::tensor_real(2, 1),
        RepSpec::tensor_real(3, 0),
        RepSpec::tensor_real(2, 2),
        RepSpec::binary_cubic(false),
    ];
    for spec in specs {
        for cval in [0i64, 1, -2] {
            let run = || -> Result<(bool, usize), crate::rep::RepError> {
                let phi = make_phi(spec, Scalar::from_int(cval))?;
                let co = PhaseCoords::of(&phi.rep);
                let nv = co.dim_w();
                let vars: Vec<PolyFn> = (0..nv).map(|v| PolyFn::var(nv, v)).collect();
                let mut zero = true;
                let mut count = 0usize;
                'outer: for f in 0..nv {
                    for g in (f + 1)..nv {
                        for h in (g + 1)..nv {
                            count += 1;
                            if !jacobiator(&vars[f], &vars[g], &vars[h], &phi).is_zero() {
                                zero = false;
                                break 'outer;
                            }
                        }
                    }
                }
                Ok((zero, count))
            };
            match run() {
                Ok((zero, count)) => out.exact(
                    format!("Jacobiator vanishes for {} at c = {cval}", spec_label(spec)),
                    zero,
                    format!("{count} coordinate triples, zero polynomial each"),
                ),
                Err(e) => out.fail(spec_label(spec), e.to_string()),
            }
        }
    }
    // Negative control.
    let control = || -> Result<bool, crate::rep::RepError> {
        let spec = RepSpec::tensor_real(2, 1);
        let rep = rep_data(spec)?;
        let bad = non_admissible_control(&rep)?;
        let phi = from_quadratic(rep, bad, Scalar::zero())?;
        let co = PhaseCoords::of(&phi.rep);
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
                    if !j.is_zero() {
                        return Ok(true);
                    }
                }
            }
        }
        Ok(false)
    };
    match control() {
        Ok(found) => out.exact(
            "non-admissible control breaks Jacobi",
            found,
            "some coordinate triple has a nonzero Jacobiator",
        ),
        Err(e) => out.fail("non-admissible control", e.to_string()),
    }
    out
}

/// Criterion 7: Berger's first criterion passes (curvature span = g), and
/// random rational a with both parts nonzero give full curvature 20/20.
pub fn criterion_7_berger_full_curvature() -> CheckOutcome {
    let mut out = CheckOutcome::new("criterion-7-berger-and-full-curvature");
    let mut span_specs = acceptance_tensor_specs();
    span_specs.push(RepSpec::tensor_real(2, 0));
    span_specs.push(RepSpec::tensor_real(1, 1));
    for spec in span_specs {
        let run = || -> Result<crate::curvature::BergerReport, crate::rep::RepError> {
            let rep = rep_data(spec)?;
            let k = curvature_space(spec)?;
            Ok(berger_check(&rep, &k.basis))
        };
        match run() {
            Ok(report) => out.exact(
                format!("curvature span = g for {}", spec_label(spec)),
                !report.proper_subalgebra,
                format!("span {} of dim g = {}", report.span_dim, report.dim_g),
            ),
            Err(e) => out.fail(spec_label(spec), e.to_string()),
        }
    }
    let full_specs = [
        RepSpec::tensor_real(3, 0),
        RepSpec::tensor_real(2, 1),
        RepSpec::tensor_real(2, 2),
        RepSpec::tensor_real(2, 0),
        RepSpec::tensor_complex(3),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_7);
    for spec in full_specs {
        let run = |rng: &mut ChaCha8Rng| -> Result<usize, crate::rep::RepError> {
            let rep = rep_data(spec)?;
            let complex = spec.is_complex();
            let mut hits = 0usize;
            for _ in 0..20 {
                let mut a = rep.zero_alg();
                loop {
                    for k in 0..rep.dim_g {
                        a.coeffs[k] = random_scalar(rng, complex);
                    }
                    let sl_nonzero = a.coeffs[..3].iter().any(|c| !c.is_zero());
                    let so_nonzero = a.coeffs[3..].iter().any(|c| !c.is_zero());
                    if sl_nonzero && so_nonzero {
                        break;
                    }
                }
                let r = rho_flat(&rep, &a)?;
                if full_curvature_check(&rep, &r) {
                    hits += 1;
                }
            }
            Ok(hits)
        };
        match run(&mut rng) {
            Ok(hits) => out.exact(
                format!("full curvature 20/20 for {}", spec_label(spec)),
                hits == 20,
                format!("{hits}/20 random rational a with both parts nonzero"),
            ),
            Err(e) => out.fail(spec_label(spec), e.to_string()),
        }
    }
    out
}

/// Criterion 8: the solution space of tau(x, a.y) = tau(y, a.x) is the
/// sigma line for the tensor families and binary cubics, and vanishes for
/// the even-symmetric-power control.
pub fn criterion_8_lemma_reps() -> CheckOutcome {
    let mut out = CheckOutcome::new("criterion-8-invariant-two-form-lemma");
    let sigma_specs = [
        RepSpec::tensor_real(3, 0),
        RepSpec::tensor_real(2, 1),
        RepSpec::tensor_real(2, 2),
        RepSpec::tensor_complex(3),
        RepSpec::binary_cubic(false),
    ];
    for spec in sigma_specs {
        match lemma_reps_solution_space(spec) {
            Ok(report) => out.exact(
                format!("solution space = sigma line for {}", spec_label(spec)),
                report.dim == 1
                    && report.all_antisymmetric
                    && report.equals_sigma_line == Some(true),
                format!(
                    "dim {}, antisymmetric {}, sigma line {:?}",
                    report.dim, report.all_antisymmetric, report.equals_sigma_line
                ),
            ),
            Err(e) => out.fail(spec_label(spec), e.to_string()),
        }
    }
    let control = RepSpec::binary_quadratic(false);
    match lemma_reps_solution_space(control) {
        Ok(report) => out.exact(
            format!("solution space trivial for {}", spec_label(control)),
            report.dim == 0,
            format!("dim {}", report.dim),
        ),
        Err(e) => out.fail(spec_label(control), e.to_string()),
    }
    out
}

/// Criterion 9: measured generic half-rank gives dim s = dim W* - 2k >= 2
/// for n = 3 and >= 1 for n = 4, 5, for every scanned c.
pub fn criterion_9_symmetry_dimension() -> CheckOutcome {
    let mut out = CheckOutcome::new("criterion-9-symmetry-dimension");
    let seed = 0x5eed_9;
    for n in 3..=5u32 {
        let bound = if n == 3 { 2 } else { 1 };
        for spec in real_signatures(n) {
            for cval in [0i64, 1, -2] {
                let run = || -> Result<(usize, usize, bool), crate::rep::RepError> {
                    let phi = make_phi(spec, Scalar::from_int(cval))?;
                    let scan = rank_scan(&phi, 64, seed);
                    let rep = rep_data(spec)?;
                    let dim_s = symmetry_dimension(&rep, scan.half_rank);
                    Ok((scan.half_rank, dim_s, scan.all_even))
                };
                match run() {
                    Ok((k, dim_s, all_even)) => {
                        out.exact(
                            format!(
                                "dim s >= {bound} for {} at c = {cval}",
                                spec_label(spec)
                            ),
                            dim_s >= bound && all_even,
                            format!("measured k = {k}, dim s = {dim_s}, ranks even = {all_even}"),
                        );
                        out.value(
                            format!("half_rank/{}/c={}", spec_label(spec), cval),
                            json!(k),
                        );
                    }
                    Err(e) => out.fail(spec_label(spec), e.to_string()),
                }
            }
        }
    }
    out
}

/// Criterion 10: the incompleteness witness for TensorReal(2,1) and
/// TensorComplex(3): identity residuals < 1e-6, conserved drift < 1e-6,
/// the f'' = f^2 + C residual < 1e-5, and a finite blow-up time for the
/// proof-arranged initial data; identities also at a random point.
pub fn criterion_10_incompleteness_witness() -> CheckOutcome {
    let mut out = CheckOutcome::new("criterion-10-incompleteness-witness");
    let settings = IntegratorSettings::default();
    for spec in [RepSpec::tensor_real(2, 1), RepSpec::tensor_complex(3)] {
        let run = |out: &mut CheckOutcome| -> Result<(), Box<dyn std::error::Error>> {
            let rep = rep_data(spec)?;
            let phi = make_phi(spec, Scalar::one())?;
            let np = NumericPhi::new(&phi);
            let frame = build_witness_frame(spec)?;
            let p0 = witness_initial_point(&rep, &frame);
            let report = incompleteness_witness(&np, &frame, &p0, 1.0, 1.0, &settings)?;
            out.residual(
                format!("identity residuals (arranged p0) for {}", spec_label(spec)),
                report.max_identity_residual,
                1e-6,
            );
            out.residual(
                format!("conserved-quantity drift for {}", spec_label(spec)),
                report.conserved_drift,
                1e-6,
            );
            out.residual(
                format!("f'' = f^2 + C residual for {}", spec_label(spec)),
                report.ode_residual,
                1e-5,
            );
            out.exact(
                format!("finite blow-up time for {}", spec_label(spec)),
                report.blow_up_time.is_some(),
                format!("blow-up time {:?}", report.blow_up_time),
            );
            if let Some(t) = report.blow_up_time {
                out.value(format!("blow_up_time/{}", spec_label(spec)), json!(t));
            }
            // Identities at a seeded random point with nonzero M and b
            // parts (no blow-up arrangement implied).
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_10);
            let mut short = settings;
            short.max_time = 0.5;
            let complex = spec.is_complex();
            let rand_c64 = |rng: &mut ChaCha8Rng| {
                C64::new(
                    rng.gen_range(-1.0..1.0),
                    if complex { rng.gen_range(-1.0..1.0) } else { 0.0 },
                )
            };
            let a_sharp: Vec<C64> = (0..rep.dim_g).map(|_| rand_c64(&mut rng)).collect();
            // a = B-flat(a#) through float Gram.
            let mut a = vec![C64::new(0.0, 0.0); rep.dim_g];
            for i in 0..rep.dim_g {
                for j in 0..rep.dim_g {
                    let g = rep.gram.get(i, j);
                    if !g.is_zero() {
                        a[i] += g.to_c64() * a_sharp[j];
                    }
                }
            }
            let p_rand = PhasePoint {
                a,
                b: (0..rep.dim_v).map(|_| rand_c64(&mut rng)).collect(),
            };
            let rand_report = incompleteness_witness(&np, &frame, &p_rand, 1.0, 1.0, &short)?;
            out.residual(
                format!("identity residuals (random p0) for {}", spec_label(spec)),
                rand_report.max_identity_residual,
                1e-6,
            );
            Ok(())
        };
        if let Err(e) = run(&mut out) {
            out.fail(spec_label(spec), e.to_string());
        }
    }
    out
}

/// Criterion 11: the scalar scan of y'' = y^2 + C over the grid: every
/// sampled IC satisfying the lemma's hypothesis blows up in finite time in
/// at least one direction; first-integral drift < 1e-8 per unit time.
pub fn criterion_11_ode_scan() -> CheckOutcome {
    let mut out = CheckOutcome::new("criterion-11-ode-blow-up-scan");
    let settings = IntegratorSettings {
        max_time: 30.0,
        ..Default::default()
    };
    let linspace = |lo: f64, hi: f64, count: usize| -> Vec<f64> {
        (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect()
    };
    let y0_grid = linspace(0.1, 5.0, 21);
    let v0_grid = linspace(-3.0, 3.0, 21);
    for c in [-1.0, 0.0, 1.0] {
        let report = ode_lemma_scan(c, &y0_grid, &v0_grid, &settings);
        out.exact(
            format!("all hypothesis cases blow up at C = {c}"),
            report.all_hypothesis_cases_blow_up,
            format!("{} hypothesis cases on the 21x21 grid", report.hypothesis_cases),
        );
        out.residual(
            format!("first-integral drift rate at C = {c}"),
            report.max_drift_rate,
            1e-8,
        );
    }
    out
}

/// Criterion 12: the extrapolated commutator defect over s in
/// {1e-2, 5e-3, 2.5e-3} matches the analytic bracket direction within
/// 1e-4 relative, on 10 seeded random configurations for TensorReal(2,1).
pub fn criterion_12_commutator_defect() -> CheckOutcome {
    let mut out = CheckOutcome::new("criterion-12-commutator-defect");
    let spec = RepSpec::tensor_real(2, 1);
    let run = |out: &mut CheckOutcome| -> Result<(), Box<dyn std::error::Error>> {
        let rep = rep_data(spec)?;
        let phi = make_phi(spec, Scalar::one())?;
        let np = NumericPhi::new(&phi);
        let settings = IntegratorSettings {
            rel_tol: 1e-12,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_12);
        let draw = |rng: &mut ChaCha8Rng| -> f64 {
            let mag = rng.gen_range(0.2..1.0);
            if rng.gen_bool(0.5) {
                mag
            } else {
                -mag
            }
        };
        let mut config = 0usize;
        while config < 10 {
            let p0 = PhasePoint {
                a: (0..rep.dim_g).map(|_| C64::new(draw(&mut rng), 0.0)).collect(),
                b: (0..rep.dim_v).map(|_| C64::new(draw(&mut rng), 0.0)).collect(),
            };
            let x: Vec<C64> = (0..rep.dim_v).map(|_| C64::new(draw(&mut rng), 0.0)).collect();
            let y: Vec<C64> = (0..rep.dim_v).map(|_| C64::new(draw(&mut rng), 0.0)).collect();
            let ex = commutator_defect_extrapolated(
                &np,
                &p0,
                &x,
                &y,
                &[1e-2, 5e-3, 2.5e-3],
                &settings,
            )?;
            let ref_norm: f64 = ex
                .reference
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>()
                .sqrt();
            // Re-draw the rare near-degenerate configuration where the
            // bracket direction nearly vanishes and a relative comparison
            // is ill-posed.
            if ref_norm < 1e-3 {
                continue;
            }
            config += 1;
            out.residual(
                format!("defect/s^2 matches bracket direction (config {config})"),
                ex.rel_error,
                1e-4,
            );
        }
        Ok(())
    };
    if let Err(e) = run(&mut out) {
        out.fail(spec_label(spec), e.to_string());
    }
    out
}

pub const CRITERIA_COUNT: usize = 12;

pub fn run_criterion(index: usize) -> CheckOutcome {
    match index {
        1 => criterion_1_curvature_dims(),
        2 => criterion_2_jet_spaces(),
        3 => criterion_3_rho_spans(),
        4 => criterion_4_induced_bijections(),
        5 => criterion_5_center_exclusion(),
        6 => criterion_6_jacobi(),
        7 => criterion_7_berger_full_curvature(),
        8 => criterion_8_lemma_reps(),
        9 => criterion_9_symmetry_dimension(),
        10 => criterion_10_incompleteness_witness(),
        11 => criterion_11_ode_scan(),
        12 => criterion_12_commutator_defect(),
        other => {
            let mut out = CheckOutcome::new(format!("criterion-{other}"));
            out.fail("index", format!("no criterion {other}"));
            out
        }
    }
}

/// Runs the full suite; independent criteria run concurrently.
pub fn all_criteria() -> Vec<CheckOutcome> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = (1..=CRITERIA_COUNT)
            .map(|i| scope.spawn(move || run_criterion(i)))
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join().unwrap_or_else(|_| {
                    let mut out = CheckOutcome::new("criterion-panicked");
                    out.fail("panic", "criterion thread panicked");
                    out
                })
            })
            .collect()
    })
}

/// A generic geodesic run used by the `geodesic` and `holonomy` commands:
/// seeded random initial point and direction, bivector-rank monitor.
pub struct GeodesicRun {
    pub trajectory: crate::dynamics::Trajectory,
    pub numeric: NumericPhi,
    pub rank_constant: bool,
    pub initial_rank: usize,
}

pub fn geodesic_run(
    spec: RepSpec,
    c: Rat,
    seed: u64,
    settings: IntegratorSettings,
) -> Result<GeodesicRun, Box<dyn std::error::Error>> {
    let rep = rep_data(spec)?;
    let phi = make_phi(spec, Scalar::from_rat(c))?;
    let np = NumericPhi::new(&phi);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let complex = spec.is_complex();
    let rand_c64 = |rng: &mut ChaCha8Rng| {
        C64::new(
            rng.gen_range(-1.0..1.0),
            if complex { rng.gen_range(-1.0..1.0) } else { 0.0 },
        )
    };
    let p0 = PhasePoint {
        a: (0..rep.dim_g).map(|_| rand_c64(&mut rng)).collect(),
        b: (0..rep.dim_v).map(|_| rand_c64(&mut rng)).collect(),
    };
    let direction: Vec<C64> = (0..rep.dim_v).map(|_| rand_c64(&mut rng)).collect();
    let fs = FlowSpec {
        direction,
        settings,
    };
    let np_ref = &np;
    let monitors: Vec<Monitor<'_>> = vec![
        (
            "bivector_rank".to_string(),
            Box::new(move |_, s: &[C64]| np_ref.bivector_rank(s) as f64),
        ),
        (
            "max_norm".to_string(),
            Box::new(|_, s: &[C64]| crate::dynamics::max_norm(s)),
        ),
    ];
    let trajectory = integrate(&np, &p0, &fs, monitors);
    let ranks = trajectory.monitor("bivector_rank").expect("registered");
    // Leaf invariance: the floating rank stays constant over well-scaled
    // samples (rank detection degrades as the state escapes).
    let sane: Vec<f64> = ranks
        .iter()
        .zip(trajectory.monitor("max_norm").expect("registered"))
        .filter(|&(_, &n)| n < 1e6)
        .map(|(&r, _)| r)
        .collect();
    let initial_rank = sane.first().map(|&r| r as usize).unwrap_or(0);
    let rank_constant = sane.iter().all(|&r| r as usize == initial_rank);
    Ok(GeodesicRun {
        trajectory,
        numeric: np,
        rank_constant,
        initial_rank,
    })
}

/// Helper shared by tests: a complex scalar sampler is already in
/// `scalar`; this re-exports the float variant used in checks.
pub fn seeded_point(rep: &crate::rep::RepData, seed: u64) -> PhasePoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let complex = rep.spec.is_complex();
    let rand_c64 = |rng: &mut ChaCha8Rng| {
        C64::new(
            rng.gen_range(-1.0..1.0),
            if complex { rng.gen_range(-1.0..1.0) } else { 0.0 },
        )
    };
    PhasePoint {
        a: (0..rep.dim_g).map(|_| rand_c64(&mut rng)).collect(),
        b: (0..rep.dim_v).map(|_| rand_c64(&mut rng)).collect(),
    }
}

/// One complex scalar used in random draws.
pub fn complex64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_criteria_pass() {
        // The full suite runs in the acceptance tests; here only the
        // cheapest criteria run as a smoke check.
        for outcome in [criterion_5_center_exclusion(), criterion_8_lemma_reps()] {
            assert!(outcome.passed(), "{}", outcome.summary());
        }
    }

    #[test]
    fn geodesic_run_keeps_rank() {
        let run = geodesic_run(
            RepSpec::tensor_real(2, 1),
            Rat::one(),
            13,
            IntegratorSettings {
                max_time: 0.5,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(run.rank_constant);
        assert!(run.initial_rank % 2 == 0);
    }
}
