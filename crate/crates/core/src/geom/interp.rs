//! Periodic interpolation of sampled fields on a regular torus grid.
//!
//! Two schemes:
//!
//! * trigonometric: the unique band-limited interpolant, Nyquist modes
//!   symmetrized as `cos(Nθ/2)`. Pointwise evaluation uses the Hermitian
//!   half spectrum along the last axis; spectra whose mass concentrates in
//!   few modes are evaluated as sparse term lists after discarding the
//!   smallest coefficients under a total budget of one machine epsilon
//!   (relative), so the pointwise error introduced is below rounding level.
//! * cubic: tensor-product periodic cubic B-spline interpolation.
//!
//! Resampling onto a finer regular grid (values or first derivatives) is
//! exact zero-padding for the trigonometric scheme.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interp {
    Trig,
    Cubic,
}

impl Interp {
    pub fn as_str(&self) -> &'static str {
        match self {
            Interp::Trig => "trig",
            Interp::Cubic => "cubic",
        }
    }
}

pub fn grid_total(grid: &[usize]) -> usize {
    grid.iter().product()
}

/// Multi-index of a flat row-major index (last axis fastest).
#[inline]
pub(crate) fn unravel(mut flat: usize, grid: &[usize], out: &mut [usize]) {
    for a in (0..grid.len()).rev() {
        out[a] = flat % grid[a];
        flat /= grid[a];
    }
}

/// Coordinates of grid node `flat`.
#[inline]
pub(crate) fn node_coords<T: Real>(flat: usize, grid: &[usize], periods: &[T], out: &mut [T]) {
    let mut f = flat;
    for a in (0..grid.len()).rev() {
        let j = f % grid[a];
        f /= grid[a];
        out[a] = periods[a] * T::of_usize(j) / T::of_usize(grid[a]);
    }
}

/// Signed wavenumber of FFT index `idx` on an `n`-point axis, and whether
/// it is the (symmetrized) Nyquist mode.
#[inline]
fn wavenumber(idx: usize, n: usize) -> (i64, bool) {
    if n.is_multiple_of(2) && idx == n / 2 {
        ((n / 2) as i64, true)
    } else if idx <= n / 2 {
        (idx as i64, false)
    } else {
        (idx as i64 - n as i64, false)
    }
}

/// In-place N-d FFT over a row-major array.
pub(crate) fn fftn<T: Real>(data: &mut [Complex<T>], dims: &[usize], inverse: bool) {
    let total = grid_total(dims);
    assert_eq!(data.len(), total);
    let mut lanes = Vec::with_capacity(total);
    for a in 0..dims.len() {
        let n = dims[a];
        let stride: usize = dims[a + 1..].iter().product();
        let outer: usize = dims[..a].iter().product();
        lanes.clear();
        for o in 0..outer {
            for inner in 0..stride {
                let base = o * n * stride + inner;
                lanes.extend((0..n).map(|j| data[base + j * stride]));
            }
        }
        T::fft_lanes(&mut lanes, n, inverse);
        let mut it = lanes.iter();
        for o in 0..outer {
            for inner in 0..stride {
                let base = o * n * stride + inner;
                for j in 0..n {
                    data[base + j * stride] = *it.next().unwrap();
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
enum TrigEval<T> {
    /// Half spectrum (weights folded in), shape `grid[..m-1] × (N_m/2 + 1)`.
    Dense(Vec<Complex<T>>),
    /// Flattened per-axis indices (`m` per term) and weighted coefficients.
    Sparse { idx: Vec<u32>, coef: Vec<Complex<T>> },
}

#[derive(Clone, Debug)]
enum Scheme<T> {
    Trig {
        /// Full normalized spectra, one per component.
        spectra: Vec<Vec<Complex<T>>>,
        evals: Vec<TrigEval<T>>,
        /// Per axis, the FFT indices whose basis values are needed.
        needed: Vec<Vec<usize>>,
    },
    Cubic {
        coeffs: Vec<Vec<T>>,
    },
}

/// Interpolant of `ncomp` scalar fields sampled on a common grid.
#[derive(Clone, Debug)]
pub(crate) struct Interpolant<T> {
    grid: Vec<usize>,
    periods: Vec<T>,
    ncomp: usize,
    scheme: Scheme<T>,
}

impl<T: Real> Interpolant<T> {
    /// `samples` is component-major, each block row-major over `grid`.
    pub(crate) fn new(kind: Interp, grid: &[usize], periods: &[T], ncomp: usize, samples: &[T]) -> Self {
        let total = grid_total(grid);
        assert_eq!(samples.len(), total * ncomp);
        let scheme = match kind {
            Interp::Trig => Self::build_trig(grid, ncomp, samples),
            Interp::Cubic => Self::build_cubic(grid, ncomp, samples),
        };
        Self { grid: grid.to_vec(), periods: periods.to_vec(), ncomp, scheme }
    }

    fn build_trig(grid: &[usize], ncomp: usize, samples: &[T]) -> Scheme<T> {
        let m = grid.len();
        let total = grid_total(grid);
        let scale = T::one() / T::of_usize(total);
        let last = grid[m - 1];
        let h = last / 2 + 1;
        let lead = total / last;
        let mut spectra = Vec::with_capacity(ncomp);
        let mut evals = Vec::with_capacity(ncomp);
        let mut needed: Vec<Vec<bool>> =
            grid.iter().enumerate().map(|(a, &n)| vec![false; if a == m - 1 { h } else { n }]).collect();
        let mut multi = vec![0usize; m];
        for c in 0..ncomp {
            let mut spec: Vec<Complex<T>> =
                samples[c * total..(c + 1) * total].iter().map(|&v| Complex::new(v, T::zero())).collect();
            fftn(&mut spec, grid, false);
            for v in spec.iter_mut() {
                *v = *v * scale;
            }
            let mut half = Vec::with_capacity(lead * h);
            for p in 0..lead {
                for j in 0..h {
                    let w = if j == 0 || (last.is_multiple_of(2) && j == last / 2) { T::one() } else { T::lit(2.0) };
                    half.push(spec[p * last + j] * w);
                }
            }
            // prune the smallest terms within a roundoff-sized total budget
            let mut order: Vec<usize> = (0..half.len()).collect();
            let mags: Vec<T> = half.iter().map(|z| z.norm()).collect();
            let sum = mags.iter().fold(T::zero(), |a, &b| a + b);
            order.sort_by(|&i, &j| mags[i].partial_cmp(&mags[j]).unwrap());
            let budget = T::epsilon() * T::lit(8.0) * T::of_usize(total).sqrt() * sum.max(T::one());
            let mut cum = T::zero();
            let mut cut = 0;
            while cut < order.len() && cum + mags[order[cut]] <= budget {
                cum = cum + mags[order[cut]];
                cut += 1;
            }
            let kept = order.len() - cut;
            let half_dims: Vec<usize> = grid[..m - 1].iter().copied().chain(std::iter::once(h)).collect();
            if kept * 4 <= half.len() {
                let mut keep: Vec<usize> = order[cut..].to_vec();
                keep.sort_unstable();
                let mut idx = Vec::with_capacity(keep.len() * m);
                let mut coef = Vec::with_capacity(keep.len());
                for &f in &keep {
                    unravel(f, &half_dims, &mut multi);
                    for a in 0..m {
                        idx.push(multi[a] as u32);
                        needed[a][multi[a]] = true;
                    }
                    coef.push(half[f]);
                }
                evals.push(TrigEval::Sparse { idx, coef });
            } else {
                for row in needed.iter_mut() {
                    row.iter_mut().for_each(|b| *b = true);
                }
                evals.push(TrigEval::Dense(half));
            }
            spectra.push(spec);
        }
        let needed = needed
            .into_iter()
            .map(|row| row.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect())
            .collect();
        Scheme::Trig { spectra, evals, needed }
    }

    fn build_cubic(grid: &[usize], ncomp: usize, samples: &[T]) -> Scheme<T> {
        let m = grid.len();
        let total = grid_total(grid);
        let mut multi = vec![0usize; m];
        // per-flat-index symbol of the interpolation operator
        let symbols: Vec<T> = (0..total)
            .map(|f| {
                unravel(f, grid, &mut multi);
                (0..m).fold(T::one(), |acc, a| {
                    let phase = T::TAU() * T::of_usize(multi[a]) / T::of_usize(grid[a]);
                    acc * (T::lit(4.0) + T::lit(2.0) * phase.cos()) / T::lit(6.0)
                })
            })
            .collect();
        let scale = T::one() / T::of_usize(total);
        let coeffs = (0..ncomp)
            .map(|c| {
                let mut spec: Vec<Complex<T>> =
                    samples[c * total..(c + 1) * total].iter().map(|&v| Complex::new(v, T::zero())).collect();
                fftn(&mut spec, grid, false);
                for (v, &s) in spec.iter_mut().zip(&symbols) {
                    *v = *v / s;
                }
                fftn(&mut spec, grid, true);
                spec.iter().map(|z| z.re * scale).collect()
            })
            .collect();
        Scheme::Cubic { coeffs }
    }

    /// Number of stored terms per component (dense components count every
    /// half-spectrum entry).
    #[allow(dead_code)]
    pub(crate) fn term_counts(&self) -> Vec<usize> {
        match &self.scheme {
            Scheme::Trig { evals, .. } => evals
                .iter()
                .map(|e| match e {
                    TrigEval::Dense(h) => h.len(),
                    TrigEval::Sparse { coef, .. } => coef.len(),
                })
                .collect(),
            Scheme::Cubic { coeffs } => coeffs.iter().map(|c| c.len()).collect(),
        }
    }

    /// Evaluates every component at `x`; if `grads` is given it receives the
    /// `ncomp × m` row-major gradient.
    pub(crate) fn eval(&self, x: &[T], vals: &mut [T], grads: Option<&mut [T]>) {
        match &self.scheme {
            Scheme::Trig { evals, needed, .. } => self.eval_trig(evals, needed, x, vals, grads),
            Scheme::Cubic { coeffs } => self.eval_cubic(coeffs, x, vals, grads),
        }
    }

    fn eval_trig(
        &self,
        evals: &[TrigEval<T>],
        needed: &[Vec<usize>],
        x: &[T],
        vals: &mut [T],
        mut grads: Option<&mut [T]>,
    ) {
        let m = self.grid.len();
        let want_grad = grads.is_some();
        let zero = Complex::new(T::zero(), T::zero());
        // per-axis basis values and derivatives at the needed indices
        let mut basis: Vec<Vec<Complex<T>>> = Vec::with_capacity(m);
        let mut dbasis: Vec<Vec<Complex<T>>> = Vec::with_capacity(m);
        for a in 0..m {
            let n = self.grid[a];
            let len = if a == m - 1 { n / 2 + 1 } else { n };
            let mut b = vec![zero; len];
            let mut db = vec![zero; if want_grad { len } else { 0 }];
            let scale = T::TAU() / self.periods[a];
            let theta = x[a] * scale;
            for &i in &needed[a] {
                let (k, nyq) = wavenumber(i, n);
                let kf = T::of_i64(k);
                let (s, c) = (kf * theta).sin_cos();
                if nyq {
                    b[i] = Complex::new(c, T::zero());
                    if want_grad {
                        db[i] = Complex::new(-kf * scale * s, T::zero());
                    }
                } else {
                    b[i] = Complex::new(c, s);
                    if want_grad {
                        db[i] = Complex::new(-s, c) * (kf * scale);
                    }
                }
            }
            basis.push(b);
            dbasis.push(db);
        }
        let mut g_local = vec![zero; m];
        for (comp, ev) in evals.iter().enumerate() {
            g_local.iter_mut().for_each(|g| *g = zero);
            let v = match ev {
                TrigEval::Sparse { idx, coef } => {
                    let mut acc = zero;
                    if want_grad {
                        let mut prefix = vec![zero; m + 1];
                        let mut suffix = vec![zero; m + 1];
                        for (t, &c) in coef.iter().enumerate() {
                            let ix = &idx[t * m..(t + 1) * m];
                            prefix[0] = c;
                            for a in 0..m {
                                prefix[a + 1] = prefix[a] * basis[a][ix[a] as usize];
                            }
                            suffix[m] = Complex::new(T::one(), T::zero());
                            for a in (0..m).rev() {
                                suffix[a] = suffix[a + 1] * basis[a][ix[a] as usize];
                            }
                            acc = acc + prefix[m];
                            for a in 0..m {
                                g_local[a] = g_local[a] + prefix[a] * dbasis[a][ix[a] as usize] * suffix[a + 1];
                            }
                        }
                    } else {
                        for (t, &c) in coef.iter().enumerate() {
                            let ix = &idx[t * m..(t + 1) * m];
                            let mut p = c;
                            for a in 0..m {
                                p = p * basis[a][ix[a] as usize];
                            }
                            acc = acc + p;
                        }
                    }
                    acc
                }
                TrigEval::Dense(half) => self.contract_dense(half, &basis, &dbasis, want_grad, &mut g_local),
            };
            vals[comp] = v.re;
            if let Some(g) = grads.as_deref_mut() {
                for a in 0..m {
                    g[comp * m + a] = g_local[a].re;
                }
            }
        }
    }

    /// Contracts the half spectrum with per-axis bases, last axis first.
    fn contract_dense(
        &self,
        half: &[Complex<T>],
        basis: &[Vec<Complex<T>>],
        dbasis: &[Vec<Complex<T>>],
        want_grad: bool,
        grad_out: &mut [Complex<T>],
    ) -> Complex<T> {
        let m = self.grid.len();
        let zero = Complex::new(T::zero(), T::zero());
        let dims: Vec<usize> =
            self.grid[..m - 1].iter().copied().chain(std::iter::once(self.grid[m - 1] / 2 + 1)).collect();
        // value tensor and gradient tensors (for already-reduced axes)
        let mut value: Vec<Complex<T>> = Vec::new();
        let mut grads: Vec<Vec<Complex<T>>> = Vec::new();
        let mut first = true;
        for a in (0..m).rev() {
            let n = dims[a];
            let outer: usize = dims[..a].iter().product();
            let src: &[Complex<T>] = if first { half } else { &value };
            let b = &basis[a];
            let mut new_value = vec![zero; outer];
            let mut new_grads: Vec<Vec<Complex<T>>> = Vec::new();
            if want_grad {
                let db = &dbasis[a];
                let mut g_here = vec![zero; outer];
                for p in 0..outer {
                    let row = &src[p * n..(p + 1) * n];
                    let mut sv = zero;
                    let mut sd = zero;
                    for j in 0..n {
                        sv = sv + row[j] * b[j];
                        sd = sd + row[j] * db[j];
                    }
                    new_value[p] = sv;
                    g_here[p] = sd;
                }
                for g in &grads {
                    let mut reduced = vec![zero; outer];
                    for p in 0..outer {
                        let row = &g[p * n..(p + 1) * n];
                        let mut s = zero;
                        for j in 0..n {
                            s = s + row[j] * b[j];
                        }
                        reduced[p] = s;
                    }
                    new_grads.push(reduced);
                }
                // gradient tensors are kept ordered by axis descending
                new_grads.push(g_here);
            } else {
                for p in 0..outer {
                    let row = &src[p * n..(p + 1) * n];
                    let mut sv = zero;
                    for j in 0..n {
                        sv = sv + row[j] * b[j];
                    }
                    new_value[p] = sv;
                }
            }
            value = new_value;
            grads = new_grads;
            first = false;
        }
        if want_grad {
            // grads[i] corresponds to axis m-1-i
            for (i, g) in grads.iter().enumerate() {
                grad_out[m - 1 - i] = g[0];
            }
        }
        value[0]
    }

    fn eval_cubic(&self, coeffs: &[Vec<T>], x: &[T], vals: &mut [T], grads: Option<&mut [T]>) {
        let m = self.grid.len();
        let mut idx = vec![[0usize; 4]; m];
        let mut w = vec![[T::zero(); 4]; m];
        let mut dw = vec![[T::zero(); 4]; m];
        let sixth = T::one() / T::lit(6.0);
        let half = T::lit(0.5);
        for a in 0..m {
            let n = self.grid[a];
            let hstep = self.periods[a] / T::of_usize(n);
            let u = x[a] / hstep;
            let fl = u.floor();
            let t = u - fl;
            let i = fl.to_i64().unwrap().rem_euclid(n as i64) as usize;
            for (s, slot) in idx[a].iter_mut().enumerate() {
                *slot = (i + n + s - 1) % n;
            }
            let omt = T::one() - t;
            let t2 = t * t;
            let t3 = t2 * t;
            w[a] = [
                omt * omt * omt * sixth,
                (T::lit(3.0) * t3 - T::lit(6.0) * t2 + T::lit(4.0)) * sixth,
                (-T::lit(3.0) * t3 + T::lit(3.0) * t2 + T::lit(3.0) * t + T::one()) * sixth,
                t3 * sixth,
            ];
            let inv_h = T::one() / hstep;
            dw[a] = [
                -omt * omt * half * inv_h,
                (T::lit(3.0) * t2 - T::lit(4.0) * t) * half * inv_h,
                (-T::lit(3.0) * t2 + T::lit(2.0) * t + T::one()) * half * inv_h,
                t2 * half * inv_h,
            ];
        }
        let nterms = 4usize.pow(m as u32);
        let mut sel = vec![0usize; m];
        let want_grad = grads.is_some();
        let mut gacc = vec![T::zero(); m * self.ncomp];
        for (comp, c) in coeffs.iter().enumerate() {
            let mut acc = T::zero();
            for t in 0..nterms {
                let mut r = t;
                for s in sel.iter_mut().rev() {
                    *s = r % 4;
                    r /= 4;
                }
                let mut flat = 0usize;
                let mut weight = T::one();
                for a in 0..m {
                    flat = flat * self.grid[a] + idx[a][sel[a]];
                    weight = weight * w[a][sel[a]];
                }
                let cv = c[flat];
                acc = acc + cv * weight;
                if want_grad {
                    for d in 0..m {
                        let mut wd = T::one();
                        for a in 0..m {
                            wd = wd * if a == d { dw[a][sel[a]] } else { w[a][sel[a]] };
                        }
                        gacc[comp * m + d] = gacc[comp * m + d] + cv * wd;
                    }
                }
            }
            vals[comp] = acc;
        }
        if let Some(g) = grads {
            g.copy_from_slice(&gacc);
        }
    }

    /// Values (`deriv = None`) or the derivative along axis `deriv` of every
    /// component at the nodes of the regular grid `fine` (component-major).
    /// Each `fine[a]` must be at least the storage grid count.
    pub(crate) fn resample(&self, fine: &[usize], deriv: Option<usize>) -> Vec<T> {
        let m = self.grid.len();
        assert_eq!(fine.len(), m);
        let ftotal = grid_total(fine);
        match &self.scheme {
            Scheme::Trig { spectra, .. } if fine.iter().zip(&self.grid).all(|(f, g)| f >= g) => {
                let total = grid_total(&self.grid);
                let mut out = Vec::with_capacity(ftotal * self.ncomp);
                let mut multi = vec![0usize; m];
                // per-axis targets of every coarse index: (fine index, weight)
                let targets: Vec<Vec<Vec<(usize, T)>>> = (0..m)
                    .map(|a| {
                        let n = self.grid[a];
                        let nf = fine[a];
                        (0..n)
                            .map(|i| {
                                let (k, nyq) = wavenumber(i, n);
                                let to_fine = |k: i64| k.rem_euclid(nf as i64) as usize;
                                if nyq {
                                    vec![(to_fine(k), T::lit(0.5)), (to_fine(-k), T::lit(0.5))]
                                } else {
                                    vec![(to_fine(k), T::one())]
                                }
                            })
                            .collect()
                    })
                    .collect();
                let mut fidx = vec![0usize; m];
                for spec in spectra {
                    let mut fs = vec![Complex::new(T::zero(), T::zero()); ftotal];
                    for f in 0..total {
                        let c = spec[f];
                        if c.re == T::zero() && c.im == T::zero() {
                            continue;
                        }
                        unravel(f, &self.grid, &mut multi);
                        // enumerate the cartesian product of per-axis targets
                        let counts: Vec<usize> = (0..m).map(|a| targets[a][multi[a]].len()).collect();
                        let combos: usize = counts.iter().product();
                        for mut combo in 0..combos {
                            let mut weight = T::one();
                            for a in (0..m).rev() {
                                let (fi, w) = targets[a][multi[a]][combo % counts[a]];
                                combo /= counts[a];
                                fidx[a] = fi;
                                weight = weight * w;
                            }
                            let mut flat = 0;
                            for a in 0..m {
                                flat = flat * fine[a] + fidx[a];
                            }
                            fs[flat] = fs[flat] + c * weight;
                        }
                    }
                    if let Some(d) = deriv {
                        let nf = fine[d];
                        let scale = T::TAU() / self.periods[d];
                        for (f, v) in fs.iter_mut().enumerate() {
                            unravel(f, fine, &mut fidx);
                            let (k, nyq) = wavenumber(fidx[d], nf);
                            *v = if nyq {
                                Complex::new(T::zero(), T::zero())
                            } else {
                                *v * Complex::new(T::zero(), T::of_i64(k) * scale)
                            };
                        }
                    }
                    fftn(&mut fs, fine, true);
                    out.extend(fs.iter().map(|z| z.re));
                }
                out
            }
            _ => {
                // pointwise evaluation
                let mut out = vec![T::zero(); ftotal * self.ncomp];
                let mut x = vec![T::zero(); m];
                let mut vals = vec![T::zero(); self.ncomp];
                let mut grads = vec![T::zero(); self.ncomp * m];
                for f in 0..ftotal {
                    node_coords(f, fine, &self.periods, &mut x);
                    match deriv {
                        None => self.eval(&x, &mut vals, None),
                        Some(d) => {
                            self.eval(&x, &mut vals, Some(&mut grads));
                            for c in 0..self.ncomp {
                                vals[c] = grads[c * m + d];
                            }
                        }
                    }
                    for c in 0..self.ncomp {
                        out[c * ftotal + f] = vals[c];
                    }
                }
                out
            }
        }
    }

    #[cfg(test)]
    /// Normalized full spectrum of component `c` (trigonometric scheme only).
    pub(crate) fn spectrum(&self, c: usize) -> Option<&[Complex<T>]> {
        match &self.scheme {
            Scheme::Trig { spectra, .. } => Some(&spectra[c]),
            Scheme::Cubic { .. } => None,
        }
    }
}
