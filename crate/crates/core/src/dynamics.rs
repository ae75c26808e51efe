//! Floating-point flows on W* = g* (+) V*: the reduced geodesic equations
//!
//! ```text
//! da(B)/dt = b(B . x),      db(y)/dt = phi2(a#, a#, x, y) + c sigma(x, y),
//! ```
//!
//! integrated with an embedded Runge-Kutta-Fehlberg 4(5) pair (the 4th-order
//! solution is propagated), finite-time blow-up detection with bisection on
//! the final step, commutator-defect checks, the null-frame incompleteness
//! witness, and the scalar scan for y'' = y^2 + C.
//!
//! Complex families integrate componentwise over complex floats; norms and
//! blow-up use the modulus.
//!
//! Sign convention: the displayed component equations above are normative
//! for all flows. With this convention the bracket relation of the composed
//! flows reads [xi_x, xi_y] = xi_{dPhi(p)(y,x)} (arguments swapped relative
//! to the Hamiltonian-field convention); `commutator_reference` returns that
//! direction. The swap is applied uniformly and pinned by a symbolic test.

use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::curvature::rho_flat;
use crate::poisson::AdmissibleMap;
use crate::rep::{GBasisKind, RepData, RepError, RepSpec};
use crate::scalar::Scalar;

pub type C64 = Complex64;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Rep(#[from] RepError),
    #[error("witness precondition violated: {0}")]
    Precondition(String),
    #[error("flow escaped during a composed-flow evaluation")]
    EscapedDuringComposition,
}

/// Integrator settings shared by every flow.
#[derive(Debug, Clone, Copy)]
pub struct IntegratorSettings {
    pub initial_step: f64,
    /// Relative tolerance; the absolute tolerance is `rel_tol * 1e-2`.
    pub rel_tol: f64,
    pub max_time: f64,
    pub blowup_threshold: f64,
    pub step_underflow: f64,
    pub max_steps: usize,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        IntegratorSettings {
            initial_step: 1e-3,
            rel_tol: 1e-10,
            max_time: 20.0,
            blowup_threshold: 1e8,
            step_underflow: 1e-12,
            max_steps: 2_000_000,
        }
    }
}

impl IntegratorSettings {
    fn atol(&self) -> f64 {
        self.rel_tol * 1e-2
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    TimeLimit,
    BlowUp { time: f64 },
    StepUnderflow { time: f64 },
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::TimeLimit => "time-limit",
            Termination::BlowUp { .. } => "blow-up",
            Termination::StepUnderflow { .. } => "step-underflow",
        }
    }

    pub fn blow_up_time(&self) -> Option<f64> {
        match self {
            Termination::BlowUp { time } => Some(*time),
            _ => None,
        }
    }
}

/// Sampled solution: times, states, accepted step sizes, termination
/// reason, and monitored-invariant series (one value per sample).
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<C64>>,
    pub steps: Vec<f64>,
    pub termination: Termination,
    pub monitors: Vec<(String, Vec<f64>)>,
}

impl Trajectory {
    pub fn last_state(&self) -> &[C64] {
        self.states.last().expect("trajectory has samples")
    }

    pub fn monitor(&self, name: &str) -> Option<&[f64]> {
        self.monitors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }
}

pub type Monitor<'a> = (String, Box<dyn Fn(f64, &[C64]) -> f64 + 'a>);

pub fn max_norm(y: &[C64]) -> f64 {
    y.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

// Fehlberg 4(5) tableau. The 4th-order solution is propagated; the embedded
// 5th-order solution provides the error estimate.
const A2: [f64; 1] = [1.0 / 4.0];
const A3: [f64; 2] = [3.0 / 32.0, 9.0 / 32.0];
const A4: [f64; 3] = [1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0];
const A5: [f64; 4] = [439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0];
const A6: [f64; 5] = [
    -8.0 / 27.0,
    2.0,
    -3544.0 / 2565.0,
    1859.0 / 4104.0,
    -11.0 / 40.0,
];
const B4: [f64; 6] = [
    25.0 / 216.0,
    0.0,
    1408.0 / 2565.0,
    2197.0 / 4104.0,
    -1.0 / 5.0,
    0.0,
];
const B5: [f64; 6] = [
    16.0 / 135.0,
    0.0,
    6656.0 / 12825.0,
    28561.0 / 56430.0,
    -9.0 / 50.0,
    2.0 / 55.0,
];

/// One Fehlberg step: returns the propagated 4th-order state and the
/// embedded error estimate.
pub fn rkf45_step<F>(rhs: &F, y: &[C64], h: f64) -> (Vec<C64>, Vec<C64>)
where
    F: Fn(&[C64], &mut [C64]) + ?Sized,
{
    let n = y.len();
    let mut k = vec![vec![C64::new(0.0, 0.0); n]; 6];
    let mut stage = vec![C64::new(0.0, 0.0); n];

    rhs(y, &mut k[0]);
    let weights: [&[f64]; 5] = [&A2, &A3, &A4, &A5, &A6];
    for (s, w) in weights.iter().enumerate() {
        for i in 0..n {
            let mut acc = y[i];
            for (j, &c) in w.iter().enumerate() {
                if c != 0.0 {
                    acc += k[j][i] * (c * h);
                }
            }
            stage[i] = acc;
        }
        let (head, tail) = k.split_at_mut(s + 1);
        let _ = head;
        rhs(&stage, &mut tail[0]);
    }

    let mut y4 = vec![C64::new(0.0, 0.0); n];
    let mut err = vec![C64::new(0.0, 0.0); n];
    for i in 0..n {
        let mut acc4 = y[i];
        let mut acc_err = C64::new(0.0, 0.0);
        for j in 0..6 {
            if B4[j] != 0.0 {
                acc4 += k[j][i] * (B4[j] * h);
            }
            let d = B5[j] - B4[j];
            if d != 0.0 {
                acc_err += k[j][i] * (d * h);
            }
        }
        y4[i] = acc4;
        err[i] = acc_err;
    }
    (y4, err)
}

/// Fixed-step integration (no error control), for order measurements.
pub fn integrate_fixed<F>(rhs: &F, y0: &[C64], h: f64, t_end: f64) -> Vec<C64>
where
    F: Fn(&[C64], &mut [C64]) + ?Sized,
{
    let mut y = y0.to_vec();
    let steps = (t_end / h).round() as usize;
    for _ in 0..steps {
        y = rkf45_step(rhs, &y, h).0;
    }
    y
}

fn error_ratio(err: &[C64], y: &[C64], y_new: &[C64], settings: &IntegratorSettings) -> f64 {
    let atol = settings.atol();
    let mut worst: f64 = 0.0;
    for i in 0..err.len() {
        let scale = atol + settings.rel_tol * y[i].norm().max(y_new[i].norm());
        let r = err[i].norm() / scale;
        if !r.is_finite() {
            return f64::INFINITY;
        }
        worst = worst.max(r);
    }
    worst
}

/// Adaptive solve of the autonomous system `dy/dt = rhs(y)` with blow-up
/// detection. Monitors are evaluated at every accepted sample.
pub fn solve_ode<F>(
    rhs: &F,
    y0: &[C64],
    settings: &IntegratorSettings,
    monitors: Vec<Monitor<'_>>,
) -> Trajectory
where
    F: Fn(&[C64], &mut [C64]) + ?Sized,
{
    let mut times = vec![0.0];
    let mut states = vec![y0.to_vec()];
    let mut steps = Vec::new();
    let (names, funcs): (Vec<String>, Vec<_>) = monitors.into_iter().unzip();
    let mut series: Vec<Vec<f64>> = names.iter().map(|_| Vec::new()).collect();
    for (s, f) in series.iter_mut().zip(&funcs) {
        s.push(f(0.0, y0));
    }

    let mut t = 0.0;
    let mut y = y0.to_vec();
    let mut h = settings.initial_step.min(settings.max_time);
    let mut termination = Termination::TimeLimit;
    let mut n_steps = 0usize;

    if max_norm(&y) >= settings.blowup_threshold {
        return Trajectory {
            times,
            states,
            steps,
            termination: Termination::BlowUp { time: 0.0 },
            monitors: names.into_iter().zip(series).collect(),
        };
    }

    while t < settings.max_time {
        if n_steps >= settings.max_steps {
            break;
        }
        n_steps += 1;
        if t + h > settings.max_time {
            h = settings.max_time - t;
        }
        let (y_new, err) = rkf45_step(rhs, &y, h);
        let ratio = error_ratio(&err, &y, &y_new, settings);
        if ratio <= 1.0 {
            let crossed = max_norm(&y_new) >= settings.blowup_threshold
                || y_new.iter().any(|z| !z.is_finite());
            if crossed {
                // Bracket the threshold crossing by bisection on the final
                // step; the reported blow-up time is the bracketed crossing.
                let mut lo = 0.0f64;
                let mut hi = h;
                let mut y_hi = y_new.clone();
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= 0.0 || mid == lo || mid == hi {
                        break;
                    }
                    let (y_mid, _) = rkf45_step(rhs, &y, mid);
                    let escaped = max_norm(&y_mid) >= settings.blowup_threshold
                        || y_mid.iter().any(|z| !z.is_finite());
                    if escaped {
                        hi = mid;
                        y_hi = y_mid;
                    } else {
                        lo = mid;
                    }
                }
                t += hi;
                times.push(t);
                steps.push(hi);
                for (s, f) in series.iter_mut().zip(&funcs) {
                    s.push(f(t, &y_hi));
                }
                states.push(y_hi);
                termination = Termination::BlowUp { time: t };
                break;
            }
            t += h;
            y = y_new;
            times.push(t);
            steps.push(h);
            states.push(y.clone());
            for (s, f) in series.iter_mut().zip(&funcs) {
                s.push(f(t, &y));
            }
            let factor = if ratio == 0.0 {
                5.0
            } else {
                (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= factor;
        } else {
            let factor = if ratio.is_finite() {
                (0.9 * ratio.powf(-0.2)).clamp(0.2, 0.9)
            } else {
                0.5
            };
            h *= factor;
        }
        if h < settings.step_underflow {
            termination = Termination::StepUnderflow { time: t };
            break;
        }
    }

    Trajectory {
        times,
        states,
        steps,
        termination,
        monitors: names.into_iter().zip(series).collect(),
    }
}

/// Point of W* split into its g* and V* components.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub a: Vec<C64>,
    pub b: Vec<C64>,
}

impl PhasePoint {
    pub fn from_state(dim_g: usize, state: &[C64]) -> Self {
        PhasePoint {
            a: state[..dim_g].to_vec(),
            b: state[dim_g..].to_vec(),
        }
    }

    pub fn to_state(&self) -> Vec<C64> {
        let mut s = self.a.clone();
        s.extend_from_slice(&self.b);
        s
    }

    pub fn max_norm(&self) -> f64 {
        max_norm(&self.a).max(max_norm(&self.b))
    }

    pub fn is_escaped(&self, threshold: f64) -> bool {
        self.max_norm() >= threshold
    }
}

/// Flow specification: the direction x in V, with the admissible-map
/// parameters carried by the `NumericPhi`.
pub struct FlowSpec {
    pub direction: Vec<C64>,
    pub settings: IntegratorSettings,
}

/// Float tables of one admissible map: structure constants, actions, the
/// invariant 2-form, the quadratic jet tensor, and the pairing.
pub struct NumericPhi {
    pub rep: Arc<RepData>,
    pub c: C64,
    pub dim_g: usize,
    pub dim_v: usize,
    /// [(i * dim_g + j) * n_pairs + pair]
    quad: Vec<C64>,
    /// [i][row * dim_v + col]
    action: Vec<Vec<C64>>,
    /// [(i * dim_g + j) * dim_g + k]
    struct_consts: Vec<C64>,
    /// [s * dim_v + t]; zero matrix when the family has no invariant 2-form.
    sigma: Vec<C64>,
    /// [i * dim_g + j]
    gram_inv: Vec<C64>,
}

impl NumericPhi {
    pub fn new(phi: &AdmissibleMap) -> Self {
        let rep = phi.rep.clone();
        let dim_g = rep.dim_g;
        let dim_v = rep.dim_v;
        let n_pairs = rep.pairs.len();
        let quad: Vec<C64> = phi.quad.coeffs.iter().map(Scalar::to_c64).collect();
        debug_assert_eq!(quad.len(), dim_g * dim_g * n_pairs);
        let action: Vec<Vec<C64>> = rep
            .action
            .iter()
            .map(|m| {
                (0..dim_v)
                    .flat_map(|r| (0..dim_v).map(move |c| m.get(r, c).to_c64()))
                    .collect()
            })
            .collect();
        let mut struct_consts = vec![C64::new(0.0, 0.0); dim_g * dim_g * dim_g];
        for i in 0..dim_g {
            for j in 0..dim_g {
                for (k, c) in rep.struct_consts[i][j].iter().enumerate() {
                    struct_consts[(i * dim_g + j) * dim_g + k] = c.to_c64();
                }
            }
        }
        let sigma = match rep.sigma_mat.as_ref() {
            Some(m) => (0..dim_v)
                .flat_map(|r| (0..dim_v).map(move |c| m.get(r, c).to_c64()))
                .collect(),
            None => vec![C64::new(0.0, 0.0); dim_v * dim_v],
        };
        let mut gram_inv = Vec::with_capacity(dim_g * dim_g);
        for r in 0..dim_g {
            for c in 0..dim_g {
                gram_inv.push(rep.gram_inv.get(r, c).to_c64());
            }
        }
        NumericPhi {
            rep,
            c: phi.c.to_c64(),
            dim_g,
            dim_v,
            quad,
            action,
            struct_consts,
            sigma,
            gram_inv,
        }
    }

    pub fn spec(&self) -> RepSpec {
        self.rep.spec
    }

    pub fn dim_w(&self) -> usize {
        self.dim_g + self.dim_v
    }

    fn act_vec(&self, i: usize, x: &[C64], out: &mut [C64]) {
        let m = &self.action[i];
        for r in 0..self.dim_v {
            let mut acc = C64::new(0.0, 0.0);
            for (c, xc) in x.iter().enumerate() {
                let e = m[r * self.dim_v + c];
                if e.norm_sqr() != 0.0 {
                    acc += e * xc;
                }
            }
            out[r] = acc;
        }
    }

    pub fn sigma_form(&self, x: &[C64], y: &[C64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for s in 0..self.dim_v {
            if x[s].norm_sqr() == 0.0 {
                continue;
            }
            for t in 0..self.dim_v {
                let e = self.sigma[s * self.dim_v + t];
                if e.norm_sqr() != 0.0 {
                    acc += x[s] * y[t] * e;
                }
            }
        }
        acc
    }

    /// The jet part evaluated at (p, p, x, y) for dual coordinates p.
    pub fn quad_form(&self, a: &[C64], x: &[C64], y: &[C64]) -> C64 {
        let n_pairs = self.rep.pairs.len();
        let mut acc = C64::new(0.0, 0.0);
        for (pos, &(k, l)) in self.rep.pairs.iter().enumerate() {
            let w = x[k] * y[l] - x[l] * y[k];
            if w.norm_sqr() == 0.0 {
                continue;
            }
            let mut inner = C64::new(0.0, 0.0);
            for i in 0..self.dim_g {
                if a[i].norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..self.dim_g {
                    let t = self.quad[(i * self.dim_g + j) * n_pairs + pos];
                    if t.norm_sqr() != 0.0 {
                        inner += a[i] * a[j] * t;
                    }
                }
            }
            acc += w * inner;
        }
        acc
    }

    /// Phi(p)(x, y) = quad(a, a, x, y) + c sigma(x, y).
    pub fn phi_form(&self, a: &[C64], x: &[C64], y: &[C64]) -> C64 {
        self.quad_form(a, x, y) + self.c * self.sigma_form(x, y)
    }

    /// dPhi(p)(x, y) as a g-coefficient vector: 2 sum_i quad[i][j] a_i
    /// contracted with omega(x, y).
    pub fn d_phi(&self, a: &[C64], x: &[C64], y: &[C64]) -> Vec<C64> {
        let n_pairs = self.rep.pairs.len();
        let mut omega = vec![C64::new(0.0, 0.0); n_pairs];
        for (pos, &(k, l)) in self.rep.pairs.iter().enumerate() {
            omega[pos] = x[k] * y[l] - x[l] * y[k];
        }
        let mut out = vec![C64::new(0.0, 0.0); self.dim_g];
        for j in 0..self.dim_g {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..self.dim_g {
                if a[i].norm_sqr() == 0.0 {
                    continue;
                }
                for (pos, om) in omega.iter().enumerate() {
                    if om.norm_sqr() == 0.0 {
                        continue;
                    }
                    let t = self.quad[(i * self.dim_g + j) * n_pairs + pos];
                    if t.norm_sqr() != 0.0 {
                        acc += a[i] * om * t * 2.0;
                    }
                }
            }
            out[j] = acc;
        }
        out
    }

    /// B-sharp on float coordinates.
    pub fn b_sharp(&self, a: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.dim_g];
        for r in 0..self.dim_g {
            let mut acc = C64::new(0.0, 0.0);
            for c in 0..self.dim_g {
                let e = self.gram_inv[r * self.dim_g + c];
                if e.norm_sqr() != 0.0 {
                    acc += e * a[c];
                }
            }
            out[r] = acc;
        }
        out
    }

    /// The normative flow field of a general direction w = (A, x) in W:
    /// da_i = a([A, g_i]) + b(g_i . x), db_s = b(A . v_s) + Phi(p)(x, v_s).
    pub fn xi_field(&self, w_g: &[C64], w_v: &[C64], state: &[C64], out: &mut [C64]) {
        let dim_g = self.dim_g;
        let dim_v = self.dim_v;
        let (a, b) = state.split_at(dim_g);
        let mut gx = vec![C64::new(0.0, 0.0); dim_v];

        for i in 0..dim_g {
            let mut acc = C64::new(0.0, 0.0);
            // a([A, g_i]) = sum_j A_j sum_k C^k_{ji} a_k
            for j in 0..dim_g {
                if w_g[j].norm_sqr() == 0.0 {
                    continue;
                }
                for k in 0..dim_g {
                    let c = self.struct_consts[(j * dim_g + i) * dim_g + k];
                    if c.norm_sqr() != 0.0 {
                        acc += w_g[j] * c * a[k];
                    }
                }
            }
            // b(g_i . x)
            if w_v.iter().any(|z| z.norm_sqr() != 0.0) {
                self.act_vec(i, w_v, &mut gx);
                for t in 0..dim_v {
                    if gx[t].norm_sqr() != 0.0 {
                        acc += b[t] * gx[t];
                    }
                }
            }
            out[i] = acc;
        }

        let mut av = vec![C64::new(0.0, 0.0); dim_v];
        let mut basis = vec![C64::new(0.0, 0.0); dim_v];
        for s in 0..dim_v {
            let mut acc = C64::new(0.0, 0.0);
            // b(A . v_s)
            for j in 0..dim_g {
                if w_g[j].norm_sqr() == 0.0 {
                    continue;
                }
                basis.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
                basis[s] = C64::new(1.0, 0.0);
                self.act_vec(j, &basis, &mut av);
                for t in 0..dim_v {
                    if av[t].norm_sqr() != 0.0 {
                        acc += w_g[j] * b[t] * av[t];
                    }
                }
            }
            // Phi(p)(x, v_s)
            if w_v.iter().any(|z| z.norm_sqr() != 0.0) {
                basis.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
                basis[s] = C64::new(1.0, 0.0);
                acc += self.phi_form(a, w_v, &basis);
            }
            out[dim_g + s] = acc;
        }
    }

    /// Geodesic right-hand side for the direction x in V.
    pub fn geodesic_rhs(&self, x: &[C64], state: &[C64], out: &mut [C64]) {
        let zeros = vec![C64::new(0.0, 0.0); self.dim_g];
        self.xi_field(&zeros, x, state, out);
    }

    /// The bivector matrix at a float point, as complex entries.
    pub fn bivector(&self, state: &[C64]) -> Vec<C64> {
        let dim_g = self.dim_g;
        let dim_v = self.dim_v;
        let dim_w = dim_g + dim_v;
        let (a, b) = state.split_at(dim_g);
        let mut m = vec![C64::new(0.0, 0.0); dim_w * dim_w];
        for i in 0..dim_g {
            for j in (i + 1)..dim_g {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..dim_g {
                    let c = self.struct_consts[(i * dim_g + j) * dim_g + k];
                    if c.norm_sqr() != 0.0 {
                        acc += c * a[k];
                    }
                }
                m[i * dim_w + j] = acc;
                m[j * dim_w + i] = -acc;
            }
        }
        let mut basis = vec![C64::new(0.0, 0.0); dim_v];
        let mut img = vec![C64::new(0.0, 0.0); dim_v];
        for i in 0..dim_g {
            for s in 0..dim_v {
                basis.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
                basis[s] = C64::new(1.0, 0.0);
                self.act_vec(i, &basis, &mut img);
                let mut acc = C64::new(0.0, 0.0);
                for t in 0..dim_v {
                    if img[t].norm_sqr() != 0.0 {
                        acc += b[t] * img[t];
                    }
                }
                m[i * dim_w + (dim_g + s)] = acc;
                m[(dim_g + s) * dim_w + i] = -acc;
            }
        }
        let mut xb = vec![C64::new(0.0, 0.0); dim_v];
        let mut yb = vec![C64::new(0.0, 0.0); dim_v];
        for &(s, t) in &self.rep.pairs {
            xb.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            yb.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            xb[s] = C64::new(1.0, 0.0);
            yb[t] = C64::new(1.0, 0.0);
            let val = self.phi_form(a, &xb, &yb);
            m[(dim_g + s) * dim_w + (dim_g + t)] = val;
            m[(dim_g + t) * dim_w + (dim_g + s)] = -val;
        }
        m
    }

    /// Floating bivector rank with the relative singular-value threshold.
    pub fn bivector_rank(&self, state: &[C64]) -> usize {
        let dim_w = self.dim_w();
        let m = self.bivector(state);
        float_rank_complex(&m, dim_w, dim_w)
    }
}

/// Rank of a complex float matrix: singular values of the realification,
/// counted above `1e-9 x max entry modulus`, halved.
pub fn float_rank_complex(m: &[C64], rows: usize, cols: usize) -> usize {
    let mut real = nalgebra::DMatrix::<f64>::zeros(2 * rows, 2 * cols);
    let mut max_entry: f64 = 0.0;
    for r in 0..rows {
        for c in 0..cols {
            let z = m[r * cols + c];
            max_entry = max_entry.max(z.norm());
            real[(r, c)] = z.re;
            real[(r, cols + c)] = -z.im;
            real[(rows + r, c)] = z.im;
            real[(rows + r, cols + c)] = z.re;
        }
    }
    if max_entry == 0.0 {
        return 0;
    }
    let threshold = 1e-9 * max_entry;
    let svd = real.svd(false, false);
    let count = svd
        .singular_values
        .iter()
        .filter(|&&s| s > threshold)
        .count();
    count / 2
}

/// Integrates the geodesic flow from a phase point.
pub fn integrate(
    np: &NumericPhi,
    p0: &PhasePoint,
    fs: &FlowSpec,
    monitors: Vec<Monitor<'_>>,
) -> Trajectory {
    let rhs = |y: &[C64], out: &mut [C64]| np.geodesic_rhs(&fs.direction, y, out);
    solve_ode(&rhs, &p0.to_state(), &fs.settings, monitors)
}

/// Endpoint of the flow of direction w = (A, x) for time `t` (negative `t`
/// flows the reversed field).
fn flow_endpoint(
    np: &NumericPhi,
    w_g: &[C64],
    w_v: &[C64],
    state: &[C64],
    t: f64,
    settings: &IntegratorSettings,
) -> Result<Vec<C64>, DynamicsError> {
    if t == 0.0 {
        return Ok(state.to_vec());
    }
    let sign = if t < 0.0 { -1.0 } else { 1.0 };
    let rhs = |y: &[C64], out: &mut [C64]| {
        np.xi_field(w_g, w_v, y, out);
        if sign < 0.0 {
            out.iter_mut().for_each(|z| *z = -*z);
        }
    };
    let mut local = *settings;
    local.max_time = t.abs();
    local.initial_step = (t.abs() / 16.0).min(settings.initial_step);
    let traj = solve_ode(&rhs, state, &local, Vec::new());
    match traj.termination {
        Termination::TimeLimit => Ok(traj.states.last().expect("samples").clone()),
        _ => Err(DynamicsError::EscapedDuringComposition),
    }
}

/// Composed-flow commutator defect at a point, with the analytic reference.
pub struct DefectReport {
    pub s: f64,
    pub defect: Vec<C64>,
    /// s^2 xi_{dPhi(p)(y,x)}(p); see the module docs for the orientation.
    pub reference: Vec<C64>,
}

/// The flow-convention-adjusted bracket direction at p: dPhi(p)(y, x).
pub fn commutator_reference(np: &NumericPhi, state: &[C64], x: &[C64], y: &[C64]) -> Vec<C64> {
    let (a, _) = state.split_at(np.dim_g);
    let w = np.d_phi(a, y, x);
    let zeros_v = vec![C64::new(0.0, 0.0); np.dim_v];
    let mut out = vec![C64::new(0.0, 0.0); np.dim_w()];
    np.xi_field(&w, &zeros_v, state, &mut out);
    out
}

pub fn commutator_defect(
    np: &NumericPhi,
    p0: &PhasePoint,
    x: &[C64],
    y: &[C64],
    s: f64,
    settings: &IntegratorSettings,
) -> Result<DefectReport, DynamicsError> {
    assert!(s > 0.0, "step must be positive");
    let state0 = p0.to_state();
    let zeros_g = vec![C64::new(0.0, 0.0); np.dim_g];
    // Travel x, y, -x, -y.
    let s1 = flow_endpoint(np, &zeros_g, x, &state0, s, settings)?;
    let s2 = flow_endpoint(np, &zeros_g, y, &s1, s, settings)?;
    let s3 = flow_endpoint(np, &zeros_g, x, &s2, -s, settings)?;
    let s4 = flow_endpoint(np, &zeros_g, y, &s3, -s, settings)?;
    let defect: Vec<C64> = s4.iter().zip(&state0).map(|(a, b)| a - b).collect();
    let reference = commutator_reference(np, &state0, x, y)
        .into_iter()
        .map(|z| z * (s * s))
        .collect();
    Ok(DefectReport {
        s,
        defect,
        reference,
    })
}

/// Richardson-extrapolates defect/s^2 over halving steps and compares with
/// the analytic reference field value.
pub struct ExtrapolatedDefect {
    pub extrapolated: Vec<C64>,
    pub reference: Vec<C64>,
    pub rel_error: f64,
}

pub fn commutator_defect_extrapolated(
    np: &NumericPhi,
    p0: &PhasePoint,
    x: &[C64],
    y: &[C64],
    s_values: &[f64],
    settings: &IntegratorSettings,
) -> Result<ExtrapolatedDefect, DynamicsError> {
    assert!(s_values.len() >= 2, "need at least two step values");
    let scaled: Vec<Vec<C64>> = s_values
        .iter()
        .map(|&s| {
            commutator_defect(np, p0, x, y, s, settings).map(|r| {
                r.defect
                    .iter()
                    .map(|z| z / (s * s))
                    .collect::<Vec<C64>>()
            })
        })
        .collect::<Result<_, _>>()?;
    // defect/s^2 = L + O(s): one Richardson level on the two finest values.
    let k = scaled.len();
    let fine = &scaled[k - 1];
    let coarse = &scaled[k - 2];
    let extrapolated: Vec<C64> = fine
        .iter()
        .zip(coarse)
        .map(|(f, c)| f * 2.0 - c)
        .collect();
    let reference = commutator_reference(np, &p0.to_state(), x, y);
    let num: f64 = extrapolated
        .iter()
        .zip(&reference)
        .map(|(e, r)| (e - r).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let den: f64 = reference
        .iter()
        .map(|r| r.norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(ExtrapolatedDefect {
        extrapolated,
        reference,
        rel_error: if den > 0.0 { num / den } else { num },
    })
}

/// Null frame for the incompleteness witness: basis {x_1..x_{n-2}, y, z} of
/// Wn with (y,y) = (z,z) = 0, (y,z) = 1, eps_1 = +1, plus the distinguished
/// elements A_0 = -e1^2 and M_0 = 2 y ^ x_1.
pub struct WitnessFrame {
    pub spec: RepSpec,
    /// Exact Wn coordinates of the frame vectors x_1..x_{n-2}.
    pub frame_x: Vec<Vec<Scalar>>,
    /// Exact metric squares (x_i, x_i) of the frame vectors.
    pub frame_eps: Vec<i64>,
    pub y: Vec<Scalar>,
    pub z: Vec<Scalar>,
    pub a0: Vec<Scalar>,
    pub m0: Vec<Scalar>,
    /// g-coefficient vectors of y ^ x_i for the analytic xi2(g) value.
    pub wedge_y_xi: Vec<Vec<Scalar>>,
    /// V coordinates of the flow directions e1 (x) x_1 and e2 (x) y, and of
    /// e1 (x) y entering g = -2 b(e1 (x) y).
    pub dir1: Vec<Scalar>,
    pub dir2: Vec<Scalar>,
    pub e1_y: Vec<Scalar>,
}

/// Builds the exact null frame. Real signatures need p >= 2 and q >= 1
/// (for p = 1 flip the metric sign, i.e. use the spec (q, p)); complex
/// specs build the null pair from the last two orthonormal vectors.
pub fn build_witness_frame(spec: RepSpec) -> Result<WitnessFrame, DynamicsError> {
    let rep = crate::rep::rep_data(spec)?;
    if !spec.is_tensor() || spec.include_center {
        return Err(DynamicsError::Precondition(
            "the witness frame is defined for tensor families without center".into(),
        ));
    }
    let n = spec.tensor_n();
    if n < 3 {
        return Err(DynamicsError::Precondition(format!(
            "witness frame needs n >= 3, got n = {n}"
        )));
    }
    let complex = spec.is_complex();
    let metric = rep.metric.as_ref().expect("tensor family");
    let unit = |i: usize| -> Vec<Scalar> {
        let mut v = vec![Scalar::zero(); n];
        v[i] = Scalar::one();
        v
    };

    let (y, z, frame_idx): (Vec<Scalar>, Vec<Scalar>, Vec<usize>) = if complex {
        // y = x_{n-1} + i x_n, z = (x_{n-1} - i x_n)/2.
        let mut y = unit(n - 2);
        y[n - 1] = Scalar::i();
        let mut z = unit(n - 2);
        for c in z.iter_mut() {
            *c = &*c * &Scalar::new(1, 2);
        }
        z[n - 1] = &(-Scalar::i()) * &Scalar::new(1, 2);
        (y, z, (0..n - 2).collect())
    } else {
        let p = metric.eps.iter().filter(|&&e| e > 0).count();
        let q = n - p;
        if q < 1 {
            return Err(DynamicsError::Precondition(
                "definite signature admits no null vectors".into(),
            ));
        }
        if p < 2 {
            return Err(DynamicsError::Precondition(format!(
                "signature ({p},{q}) leaves no positive frame vector; \
                 use the sign-flipped spec ({q},{p})"
            )));
        }
        // u = x'_1 (+1), v = x'_n (-1): y = u + v, z = (u - v)/2.
        let mut y = unit(0);
        y[n - 1] = Scalar::one();
        let mut z = unit(0);
        for c in z.iter_mut() {
            *c = &*c * &Scalar::new(1, 2);
        }
        z[n - 1] = Scalar::new(-1, 2);
        (y, z, (1..n - 1).collect())
    };

    let frame_x: Vec<Vec<Scalar>> = frame_idx.iter().map(|&i| unit(i)).collect();
    let frame_eps: Vec<i64> = frame_idx.iter().map(|&i| metric.eps[i] as i64).collect();

    // Verify the frame conditions exactly.
    let inner = |u: &[Scalar], v: &[Scalar]| rep.wn_inner(u, v);
    for (i, xi) in frame_x.iter().enumerate() {
        for (j, xj) in frame_x.iter().enumerate() {
            let expect = if i == j {
                Scalar::from_int(frame_eps[i])
            } else {
                Scalar::zero()
            };
            assert_eq!(inner(xi, xj), expect, "frame orthogonality");
        }
        assert!(inner(xi, &y).is_zero() && inner(xi, &z).is_zero());
    }
    assert_eq!(frame_eps.first(), Some(&1), "eps_1 = +1 in the frame");
    assert!(inner(&y, &y).is_zero());
    assert!(inner(&z, &z).is_zero());
    assert!(inner(&y, &z).is_one());

    let mut a0 = vec![Scalar::zero(); rep.dim_g];
    a0[0] = Scalar::from_int(-1);
    let m0_elem = rep.wedge_to_g(&y, &frame_x[0]);
    let m0: Vec<Scalar> = m0_elem
        .coeffs
        .iter()
        .map(|c| c * &Scalar::from_int(2))
        .collect();
    let wedge_y_xi: Vec<Vec<Scalar>> = frame_x
        .iter()
        .map(|xi| rep.wedge_to_g(&y, xi).coeffs)
        .collect();

    let tensor_vec = |part: usize, w: &[Scalar]| -> Vec<Scalar> {
        let mut v = vec![Scalar::zero(); rep.dim_v];
        for (i, c) in w.iter().enumerate() {
            v[rep.v_index(part, i)] = c.clone();
        }
        v
    };
    let dir1 = tensor_vec(0, &frame_x[0]);
    let dir2 = tensor_vec(1, &y);
    let e1_y = tensor_vec(0, &y);

    Ok(WitnessFrame {
        spec,
        frame_x,
        frame_eps,
        y,
        z,
        a0,
        m0,
        wedge_y_xi,
        dir1,
        dir2,
        e1_y,
    })
}

/// The proof-arranged initial point: a# = -e2^2 + z ^ x_1, b the dual
/// covector of e1 (x) y. Gives f1 = 2, f2 = 2, g = -2, nu = 1.
pub fn witness_initial_point(rep: &RepData, frame: &WitnessFrame) -> PhasePoint {
    let mut a_sharp = rep.zero_alg();
    a_sharp.coeffs[2] = Scalar::from_int(-1); // -e2^2
    let zw = rep.wedge_to_g(&frame.z, &frame.frame_x[0]);
    for (k, c) in zw.coeffs.iter().enumerate() {
        if !c.is_zero() {
            a_sharp.coeffs[k] = &a_sharp.coeffs[k] + c;
        }
    }
    let a = rep.b_flat(&a_sharp);
    // b(e1 (x) y) = 1 through the first nonzero coordinate of y.
    let mut b = vec![Scalar::zero(); rep.dim_v];
    let k = frame
        .y
        .iter()
        .position(|c| !c.is_zero())
        .expect("y is nonzero");
    b[rep.v_index(0, k)] = frame.y[k].recip();
    PhasePoint {
        a: a.iter().map(Scalar::to_c64).collect(),
        b: b.iter().map(Scalar::to_c64).collect(),
    }
}

/// Incompleteness report: finite-difference residuals of the derivative
/// identities, drift of the conserved quantity, the residual of
/// f'' = f^2 + C, and the blow-up time when reached.
pub struct WitnessReport {
    pub identity_residuals: Vec<(String, f64)>,
    pub max_identity_residual: f64,
    pub conserved_drift: f64,
    pub ode_residual: f64,
    pub c_constant: C64,
    pub nu: C64,
    pub f1_0: C64,
    pub f2_0: C64,
    pub g_0: C64,
    pub f_0: C64,
    pub fpp_0: C64,
    pub blow_up_time: Option<f64>,
    pub termination: Termination,
    pub samples: usize,
}

struct WitnessFns {
    a0: Vec<C64>,
    m0: Vec<C64>,
    e1_y: Vec<C64>,
    wedges: Vec<Vec<C64>>,
    eps: Vec<f64>,
    c1: C64,
    c2: C64,
    dim_g: usize,
}

impl WitnessFns {
    fn new(frame: &WitnessFrame, c1: C64, c2: C64, dim_g: usize) -> Self {
        WitnessFns {
            a0: frame.a0.iter().map(Scalar::to_c64).collect(),
            m0: frame.m0.iter().map(Scalar::to_c64).collect(),
            e1_y: frame.e1_y.iter().map(Scalar::to_c64).collect(),
            wedges: frame
                .wedge_y_xi
                .iter()
                .map(|w| w.iter().map(Scalar::to_c64).collect())
                .collect(),
            eps: frame.frame_eps.iter().map(|&e| e as f64).collect(),
            c1,
            c2,
            dim_g,
        }
    }

    fn f1(&self, state: &[C64]) -> C64 {
        dot(&state[..self.dim_g], &self.a0)
    }

    fn f2(&self, state: &[C64]) -> C64 {
        dot(&state[..self.dim_g], &self.m0)
    }

    fn g(&self, state: &[C64]) -> C64 {
        dot(&state[self.dim_g..], &self.e1_y) * -2.0
    }

    /// xi2(g) = 4 (M_p y, M_p y) = 4 sum_i eps_i a(y ^ x_i)^2.
    fn h(&self, state: &[C64]) -> C64 {
        let a = &state[..self.dim_g];
        let mut acc = C64::new(0.0, 0.0);
        for (w, &e) in self.wedges.iter().zip(&self.eps) {
            let v = dot(a, w);
            acc += v * v * e;
        }
        acc * 4.0
    }

    fn conserved(&self, state: &[C64]) -> C64 {
        let f1 = self.f1(state);
        let f2 = self.f2(state);
        let d = self.c1 * f1 - self.c2 * f2;
        d * d - (self.h(state) - f2 * f2) * (self.c2 * self.c2 * 3.0)
    }

    fn f(&self, state: &[C64]) -> C64 {
        self.c1 * self.c1 * self.f1(state) + self.c1 * self.c2 * self.f2(state) * 2.0
    }

    /// The analytic second derivative of f along xi = c1 xi_1 + c2 xi_2:
    /// xi^2(f) = 3 c1^2 c2 (2 c1 f1 f2 + c2 xi2(g)).
    fn fpp(&self, state: &[C64]) -> C64 {
        let inner = self.c1 * self.f1(state) * self.f2(state) * 2.0 + self.c2 * self.h(state);
        self.c1 * self.c1 * self.c2 * inner * 3.0
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Central finite difference with one Richardson level along the flow of a
/// V-direction, step relative to the state norm.
fn directional_derivative(
    np: &NumericPhi,
    dir: &[C64],
    state: &[C64],
    f: &dyn Fn(&[C64]) -> C64,
    settings: &IntegratorSettings,
) -> Result<C64, DynamicsError> {
    let h = 1e-4 * (1.0 + max_norm(state));
    let zeros_g = vec![C64::new(0.0, 0.0); np.dim_g];
    let central = |hh: f64| -> Result<C64, DynamicsError> {
        let plus = flow_endpoint(np, &zeros_g, dir, state, hh, settings)?;
        let minus = flow_endpoint(np, &zeros_g, dir, state, -hh, settings)?;
        Ok((f(&plus) - f(&minus)) / (2.0 * hh))
    };
    let d1 = central(h)?;
    let d2 = central(h / 2.0)?;
    Ok((d2 * 4.0 - d1) / 3.0)
}

/// Runs the incompleteness witness: integrates xi = c1 xi_1 + c2 xi_2 from
/// p0, checks the derivative identities by finite differences at sane
/// sample points, monitors the conserved quantity and the f'' = f^2 + C
/// residual, and reports the blow-up time.
pub fn incompleteness_witness(
    np: &NumericPhi,
    frame: &WitnessFrame,
    p0: &PhasePoint,
    c1: f64,
    c2: f64,
    settings: &IntegratorSettings,
) -> Result<WitnessReport, DynamicsError> {
    assert!(c1 != 0.0 && c2 != 0.0, "c1, c2 must be nonzero");
    let rep = &np.rep;
    let fns = WitnessFns::new(frame, C64::new(c1, 0.0), C64::new(c2, 0.0), rep.dim_g);

    // Preconditions: M-part of a# and b-part nonzero.
    let a_sharp = np.b_sharp(&p0.a);
    let m_part_nonzero = rep
        .g_kinds
        .iter()
        .enumerate()
        .any(|(k, kind)| matches!(kind, GBasisKind::So(_, _)) && a_sharp[k].norm() > 1e-12);
    if !m_part_nonzero {
        return Err(DynamicsError::Precondition(
            "the so-part of a# vanishes at p0".into(),
        ));
    }
    if max_norm(&p0.b) <= 1e-12 {
        return Err(DynamicsError::Precondition("b vanishes at p0".into()));
    }

    let state0 = p0.to_state();
    let nu = fns.h(&state0) / 4.0;
    let g0 = fns.g(&state0);

    // Main flow direction c1 (e1 (x) x_1) + c2 (e2 (x) y).
    let dir1: Vec<C64> = frame.dir1.iter().map(Scalar::to_c64).collect();
    let dir2: Vec<C64> = frame.dir2.iter().map(Scalar::to_c64).collect();
    let dir: Vec<C64> = dir1
        .iter()
        .zip(&dir2)
        .map(|(d1, d2)| d1 * c1 + d2 * c2)
        .collect();

    let q0 = fns.conserved(&state0);
    let c_const = -q0 * (c1 * c1);

    let fs = FlowSpec {
        direction: dir,
        settings: *settings,
    };
    let monitors: Vec<Monitor<'_>> = vec![
        ("f".into(), Box::new(|_, s: &[C64]| fns.f(s).norm())),
        (
            "conserved".into(),
            Box::new(|_, s: &[C64]| fns.conserved(s).norm()),
        ),
    ];
    let traj = integrate(np, p0, &fs, monitors);

    // Conserved-quantity drift and the f'' - f^2 - C residual along the
    // trajectory (analytic xi^2 f, no differencing).
    let mut conserved_drift: f64 = 0.0;
    let mut ode_residual: f64 = 0.0;
    for state in &traj.states {
        let q = fns.conserved(state);
        let drift = (q - q0).norm() / q0.norm().max(1.0);
        conserved_drift = conserved_drift.max(drift);
        let f = fns.f(state);
        let res = (fns.fpp(state) - f * f - c_const).norm()
            / f.norm_sqr().max(c_const.norm()).max(1.0);
        ode_residual = ode_residual.max(res);
    }

    // Identity checks at up to five well-scaled samples.
    let sane: Vec<usize> = (0..traj.states.len())
        .filter(|&i| max_norm(&traj.states[i]) < 100.0)
        .collect();
    let picks: Vec<usize> = if sane.len() <= 5 {
        sane
    } else {
        (0..5).map(|k| sane[k * (sane.len() - 1) / 4]).collect()
    };
    let mut residuals: Vec<(String, f64)> = Vec::new();
    let rel = |got: C64, expect: C64| (got - expect).norm() / expect.norm().max(1.0);
    for &idx in &picks {
        let state = &traj.states[idx];
        let checks: [(&str, &[C64], &dyn Fn(&[C64]) -> C64, C64); 6] = [
            ("xi1(f1)=0", &dir1, &|s| fns.f1(s), C64::new(0.0, 0.0)),
            ("xi2(f2)=0", &dir2, &|s| fns.f2(s), C64::new(0.0, 0.0)),
            ("xi1(f2)=g", &dir1, &|s| fns.f2(s), fns.g(state)),
            ("xi2(f1)=g", &dir2, &|s| fns.f1(s), fns.g(state)),
            (
                "xi1(g)=2f1f2",
                &dir1,
                &|s| fns.g(s),
                fns.f1(state) * fns.f2(state) * 2.0,
            ),
            ("xi2(g)=4(My,My)", &dir2, &|s| fns.g(s), fns.h(state)),
        ];
        for (name, d, f, expect) in checks {
            let fd = directional_derivative(np, d, state, f, settings)?;
            let r = rel(fd, expect);
            match residuals.iter_mut().find(|(n, _)| n == name) {
                Some((_, worst)) => *worst = worst.max(r),
                None => residuals.push((name.to_string(), r)),
            }
        }
    }
    let max_identity_residual = residuals.iter().map(|(_, r)| *r).fold(0.0, f64::max);

    Ok(WitnessReport {
        identity_residuals: residuals,
        max_identity_residual,
        conserved_drift,
        ode_residual,
        c_constant: c_const,
        nu,
        f1_0: fns.f1(&state0),
        f2_0: fns.f2(&state0),
        g_0: g0,
        f_0: fns.f(&state0),
        fpp_0: fns.fpp(&state0),
        blow_up_time: traj.termination.blow_up_time(),
        termination: traj.termination,
        samples: traj.states.len(),
    })
}

/// One initial condition of the scalar scan for y'' = y^2 + C.
#[derive(Debug, Clone, Copy)]
pub struct OdeScanOutcome {
    pub y0: f64,
    pub v0: f64,
    pub c: f64,
    pub forward_blowup: Option<f64>,
    pub backward_blowup: Option<f64>,
    /// Max first-integral drift per unit time over both directions.
    pub drift_rate: f64,
    /// Whether the lemma's hypothesis applies: y0 > 0, v0 != 0, y0^2+C >= 0.
    pub hypothesis: bool,
}

impl OdeScanOutcome {
    pub fn blows_up(&self) -> bool {
        self.forward_blowup.is_some() || self.backward_blowup.is_some()
    }
}

pub struct OdeScanReport {
    pub c: f64,
    pub outcomes: Vec<OdeScanOutcome>,
    pub hypothesis_cases: usize,
    pub all_hypothesis_cases_blow_up: bool,
    pub max_drift_rate: f64,
}

/// First integral of y'' = y^2 + C: E = v^2 - (2/3) y^3 - 2 C y.
pub fn ode_first_integral(c: f64, y: f64, v: f64) -> f64 {
    v * v - (2.0 / 3.0) * y * y * y - 2.0 * c * y
}

fn ode_run(c: f64, y0: f64, v0: f64, settings: &IntegratorSettings) -> (Option<f64>, f64) {
    let rhs = move |s: &[C64], out: &mut [C64]| {
        out[0] = s[1];
        out[1] = s[0] * s[0] + c;
    };
    let e0 = ode_first_integral(c, y0, v0);
    let drift = move |_t: f64, s: &[C64]| -> f64 {
        let y = s[0].re;
        let v = s[1].re;
        let e = ode_first_integral(c, y, v);
        let scale = (v * v)
            .abs()
            .max((2.0 / 3.0) * (y * y * y).abs())
            .max((2.0 * c * y).abs())
            .max(e0.abs())
            .max(1.0);
        (e - e0).abs() / scale
    };
    let y0c = [C64::new(y0, 0.0), C64::new(v0, 0.0)];
    let traj = solve_ode(
        &rhs,
        &y0c,
        settings,
        vec![("drift".into(), Box::new(drift))],
    );
    let series = traj.monitor("drift").expect("registered");
    let mut rate: f64 = 0.0;
    for (i, &d) in series.iter().enumerate() {
        let t = traj.times[i].max(0.1);
        rate = rate.max(d / t);
    }
    (traj.termination.blow_up_time(), rate)
}

/// Integrates every grid point forward and backward, classifying blow-up
/// against the lemma's hypothesis.
pub fn ode_lemma_scan(
    c: f64,
    y0_grid: &[f64],
    v0_grid: &[f64],
    settings: &IntegratorSettings,
) -> OdeScanReport {
    let mut outcomes = Vec::with_capacity(y0_grid.len() * v0_grid.len());
    for &y0 in y0_grid {
        for &v0 in v0_grid {
            let (forward, rate_f) = ode_run(c, y0, v0, settings);
            // Backward direction: time reversal is (y, v) -> (y, -v).
            let (backward, rate_b) = ode_run(c, y0, -v0, settings);
            outcomes.push(OdeScanOutcome {
                y0,
                v0,
                c,
                forward_blowup: forward,
                backward_blowup: backward,
                drift_rate: rate_f.max(rate_b),
                hypothesis: y0 > 0.0 && v0 != 0.0 && y0 * y0 + c >= 0.0,
            });
        }
    }
    let hypothesis_cases = outcomes.iter().filter(|o| o.hypothesis).count();
    let all_hypothesis_cases_blow_up = outcomes
        .iter()
        .filter(|o| o.hypothesis)
        .all(OdeScanOutcome::blows_up);
    let max_drift_rate = outcomes.iter().map(|o| o.drift_rate).fold(0.0, f64::max);
    OdeScanReport {
        c,
        outcomes,
        hypothesis_cases,
        all_hypothesis_cases_blow_up,
        max_drift_rate,
    }
}

/// Curvature span dimensions along a trajectory: at each sample the span of
/// rho_{a#(t)} values (floating rank), plus the running-union dimension.
pub struct HolonomySeries {
    pub per_sample: Vec<usize>,
    pub running_union: Vec<usize>,
}

pub fn holonomy_span_along(
    np: &NumericPhi,
    traj: &Trajectory,
) -> Result<HolonomySeries, DynamicsError> {
    let rep = &np.rep;
    let dim_g = rep.dim_g;
    let n_pairs = rep.pairs.len();
    // Float structure tensor of rho on the g basis.
    let mut rho_basis: Vec<Vec<C64>> = Vec::with_capacity(dim_g);
    for k in 0..dim_g {
        let r = rho_flat(rep, &rep.basis_alg(k))?;
        rho_basis.push(r.coeffs.iter().map(Scalar::to_c64).collect());
    }
    let mut per_sample = Vec::with_capacity(traj.states.len());
    let mut running_union = Vec::with_capacity(traj.states.len());
    let mut union_rows: Vec<C64> = Vec::new();
    let mut union_count = 0usize;
    for state in &traj.states {
        let a_sharp = np.b_sharp(&state[..dim_g]);
        let mut values = vec![C64::new(0.0, 0.0); n_pairs * dim_g];
        for (k, rb) in rho_basis.iter().enumerate() {
            if a_sharp[k].norm_sqr() == 0.0 {
                continue;
            }
            for (i, c) in rb.iter().enumerate() {
                if c.norm_sqr() != 0.0 {
                    values[i] += a_sharp[k] * c;
                }
            }
        }
        per_sample.push(float_rank_complex(&values, n_pairs, dim_g));
        union_rows.extend_from_slice(&values);
        union_count += n_pairs;
        let union_rank = float_rank_complex(&union_rows, union_count, dim_g);
        running_union.push(union_rank);
        if union_rank == dim_g {
            // Saturated: keep a compact spanning block to bound the matrix.
            union_rows = values;
            union_count = n_pairs;
        }
    }
    Ok(HolonomySeries {
        per_sample,
        running_union,
    })
}
