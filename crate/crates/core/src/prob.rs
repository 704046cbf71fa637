//! Finite-alphabet probability arithmetic.
//!
//! Everything here is dense and exact up to floating point: distributions are
//! validated once at construction (non-negative, mass 1 within
//! [`NORM_TOL`]) and never silently renormalised. Divergences follow the
//! usual conventions `0 ln(0/q) = 0` and `p ln(p/0) = +inf`.

use crate::{Error, ExtReal, Result};

/// Largest alphabet allowed on any named axis.
pub const MAX_ALPHABET: usize = 16;

/// Allowed drift of total mass from 1.
pub const NORM_TOL: f64 = 1e-12;

fn check_mass(what: &str, entries: &[f64]) -> Result<()> {
    if entries.is_empty() {
        return Err(Error::InvalidDistribution {
            what: what.to_string(),
            detail: "empty".into(),
        });
    }
    for (i, &v) in entries.iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidDistribution {
                what: what.to_string(),
                detail: format!("entry {i} is {v}"),
            });
        }
    }
    let total: f64 = entries.iter().sum();
    if (total - 1.0).abs() > NORM_TOL {
        return Err(Error::InvalidDistribution {
            what: what.to_string(),
            detail: format!("mass is {total:.15}"),
        });
    }
    Ok(())
}

/// A probability vector over a finite alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexVector(Vec<f64>);

impl SimplexVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        check_mass("simplex vector", &entries)?;
        Ok(SimplexVector(entries))
    }

    pub fn uniform(n: usize) -> Self {
        SimplexVector(vec![1.0 / n as f64; n])
    }

    pub fn point_mass(n: usize, at: usize) -> Self {
        let mut v = vec![0.0; n];
        v[at] = 1.0;
        SimplexVector(v)
    }

    pub(crate) fn from_vec_unchecked(entries: Vec<f64>) -> Self {
        debug_assert!(check_mass("internal", &entries).is_ok());
        SimplexVector(entries)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    /// Indices carrying positive mass.
    pub fn support(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&i| self.0[i] > 0.0).collect()
    }

    pub fn max_abs_diff(&self, other: &SimplexVector) -> f64 {
        max_abs_diff(&self.0, &other.0)
    }
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// A row-stochastic matrix: row `i` is the output law given input symbol `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Kernel {
    /// Output alphabets are capped at [`MAX_ALPHABET`]; inputs may be a product
    /// of up to three capped axes.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if cols > MAX_ALPHABET {
            return Err(Error::AlphabetTooLarge {
                axis: "kernel output".into(),
                size: cols,
                limit: MAX_ALPHABET,
            });
        }
        let row_limit = MAX_ALPHABET.pow(3);
        if rows > row_limit {
            return Err(Error::AlphabetTooLarge {
                axis: "kernel input".into(),
                size: rows,
                limit: row_limit,
            });
        }
        if rows == 0 || cols == 0 {
            return Err(Error::Input("kernel with an empty alphabet".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::dim("kernel data", rows * cols, data.len()));
        }
        for r in 0..rows {
            check_mass(&format!("kernel row {r}"), &data[r * cols..(r + 1) * cols])?;
        }
        Ok(Kernel { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * cols);
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != cols {
                return Err(Error::dim(format!("kernel row {i}"), cols, r.len()));
            }
            data.extend(r);
        }
        Kernel::new(n, cols, data)
    }

    pub(crate) fn from_data_unchecked(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Kernel { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Kernel::deterministic(n, n, |i| i)
    }

    /// Every input maps to `out` with certainty.
    pub fn deterministic(rows: usize, cols: usize, map: impl Fn(usize) -> usize) -> Self {
        let mut data = vec![0.0; rows * cols];
        for r in 0..rows {
            data[r * cols + map(r)] = 1.0;
        }
        Kernel { rows, cols, data }
    }

    /// Output independent of the input.
    pub fn constant(rows: usize, out: &SimplexVector) -> Self {
        let mut data = Vec::with_capacity(rows * out.len());
        for _ in 0..rows {
            data.extend_from_slice(out.as_slice());
        }
        Kernel {
            rows,
            cols: out.len(),
            data,
        }
    }

    /// Binary symmetric channel with crossover `p`.
    pub fn bsc(p: f64) -> Result<Self> {
        Kernel::new(2, 2, vec![1.0 - p, p, p, 1.0 - p])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Cascade: `(self ∘ next)(k|i) = Σ_j self(j|i) next(k|j)`.
    pub fn compose(&self, next: &Kernel) -> Result<Kernel> {
        if self.cols != next.rows {
            return Err(Error::dim("kernel composition", self.cols, next.rows));
        }
        let mut data = vec![0.0; self.rows * next.cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                if a == 0.0 {
                    continue;
                }
                for k in 0..next.cols {
                    data[i * next.cols + k] += a * next.get(j, k);
                }
            }
        }
        Ok(Kernel::from_data_unchecked(self.rows, next.cols, data))
    }

    pub fn max_abs_diff(&self, other: &Kernel) -> Result<f64> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::dim("kernel comparison", self.rows * self.cols, other.rows * other.cols));
        }
        Ok(max_abs_diff(&self.data, &other.data))
    }
}

pub(crate) fn kl_slices(p: &[f64], q: &[f64]) -> ExtReal {
    let mut acc = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return ExtReal::PosInf;
            }
            acc += pi * (pi / qi).ln();
        }
    }
    // Rounding can leave a tiny negative total when p == q.
    ExtReal::Finite(acc.max(0.0))
}

/// `D(p‖q)` in nats.
pub fn kl_divergence(p: &SimplexVector, q: &SimplexVector) -> Result<ExtReal> {
    if p.len() != q.len() {
        return Err(Error::dim("kl_divergence", p.len(), q.len()));
    }
    Ok(kl_slices(p.as_slice(), q.as_slice()))
}

/// `Σ_u w(u) D(pk(·|u) ‖ qk(·|u))`. Rows with zero weight are skipped.
pub fn conditional_kl(pk: &Kernel, qk: &Kernel, w: &SimplexVector) -> Result<ExtReal> {
    if pk.rows != qk.rows || pk.cols != qk.cols {
        return Err(Error::dim("conditional_kl kernels", pk.rows * pk.cols, qk.rows * qk.cols));
    }
    if w.len() != pk.rows {
        return Err(Error::dim("conditional_kl weights", pk.rows, w.len()));
    }
    let mut acc = ExtReal::ZERO;
    for u in 0..pk.rows {
        let wu = w.get(u);
        if wu == 0.0 {
            continue;
        }
        acc = acc.checked_add(kl_slices(pk.row(u), qk.row(u)).scale(wu), "conditional_kl")?;
    }
    Ok(acc)
}

/// Output marginal of `p` through `k`.
pub fn push_forward(p: &SimplexVector, k: &Kernel) -> Result<SimplexVector> {
    if p.len() != k.rows {
        return Err(Error::dim("push_forward", k.rows, p.len()));
    }
    Ok(SimplexVector::from_vec_unchecked(push_slice(p.as_slice(), k)))
}

pub(crate) fn push_slice(p: &[f64], k: &Kernel) -> Vec<f64> {
    let mut out = vec![0.0; k.cols];
    for (i, &pi) in p.iter().enumerate() {
        if pi == 0.0 {
            continue;
        }
        for (o, &kij) in out.iter_mut().zip(k.row(i)) {
            *o += pi * kij;
        }
    }
    out
}

/// Shannon entropy in nats.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>()
}

/// A named finite alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Axis {
    pub name: String,
    pub size: usize,
}

impl Axis {
    pub fn new(name: impl Into<String>, size: usize) -> Self {
        Axis {
            name: name.into(),
            size,
        }
    }
}

/// Dense joint distribution over named axes, row-major in axis order.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    axes: Vec<Axis>,
    data: Vec<f64>,
}

/// Result of conditioning a joint table.
#[derive(Debug, Clone, PartialEq)]
pub struct Conditional {
    /// Rows indexed by the flattened conditioning axes.
    pub kernel: Kernel,
    /// Conditioning symbols with zero mass; their rows are uniform placeholders.
    pub zero_mass_rows: Vec<usize>,
}

impl JointTable {
    pub fn new(axes: Vec<Axis>, data: Vec<f64>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::Input("joint table without axes".into()));
        }
        for (i, a) in axes.iter().enumerate() {
            if a.size == 0 {
                return Err(Error::Input(format!("axis '{}' is empty", a.name)));
            }
            if a.size > MAX_ALPHABET {
                return Err(Error::AlphabetTooLarge {
                    axis: a.name.clone(),
                    size: a.size,
                    limit: MAX_ALPHABET,
                });
            }
            if axes[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::OverlappingAxes(a.name.clone()));
            }
        }
        let total: usize = axes.iter().map(|a| a.size).product();
        if data.len() != total {
            return Err(Error::dim("joint table data", total, data.len()));
        }
        let names: Vec<&str> = axes.iter().map(|a| a.name.as_str()).collect();
        check_mass(&format!("joint table over {}", names.join(",")), &data)?;
        Ok(JointTable { axes, data })
    }

    /// Two-axis table from rows indexed by the first axis.
    pub fn from_rows(first: &str, second: &str, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * m);
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != m {
                return Err(Error::dim(format!("joint table row {i}"), m, r.len()));
            }
            data.extend(r);
        }
        JointTable::new(vec![Axis::new(first, n), Axis::new(second, m)], data)
    }

    pub(crate) fn from_parts_unchecked(axes: Vec<Axis>, data: Vec<f64>) -> Self {
        JointTable { axes, data }
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn axis_index(&self, name: &str) -> Result<usize> {
        self.axes
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| Error::UnknownAxis(name.to_string()))
    }

    pub fn size_of(&self, name: &str) -> Result<usize> {
        Ok(self.axes[self.axis_index(name)?].size)
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.axes.len()];
        for i in (0..self.axes.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.axes[i + 1].size;
        }
        s
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        let idx: usize = index.iter().zip(self.strides()).map(|(i, s)| i * s).sum();
        self.data[idx]
    }

    /// The table as a flat distribution (for divergences between joints).
    pub fn as_simplex(&self) -> SimplexVector {
        SimplexVector::from_vec_unchecked(self.data.clone())
    }

    fn resolve(&self, names: &[&str]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(names.len());
        for n in names {
            let i = self.axis_index(n)?;
            if out.contains(&i) {
                return Err(Error::OverlappingAxes(n.to_string()));
            }
            out.push(i);
        }
        Ok(out)
    }

    /// Sum out every axis not in `keep`; the result follows `keep`'s order.
    pub fn marginal(&self, keep: &[&str]) -> Result<JointTable> {
        let idx = self.resolve(keep)?;
        let out_axes: Vec<Axis> = idx.iter().map(|&i| self.axes[i].clone()).collect();
        let out_len: usize = out_axes.iter().map(|a| a.size).product();
        // stride of each source axis inside the output (0 when summed out)
        let mut out_stride = vec![0usize; self.axes.len()];
        let mut s = 1;
        for &i in idx.iter().rev() {
            out_stride[i] = s;
            s *= self.axes[i].size;
        }
        let mut out = vec![0.0; out_len];
        let mut counter = vec![0usize; self.axes.len()];
        for &v in &self.data {
            let o: usize = counter.iter().zip(&out_stride).map(|(c, s)| c * s).sum();
            out[o] += v;
            for d in (0..counter.len()).rev() {
                counter[d] += 1;
                if counter[d] < self.axes[d].size {
                    break;
                }
                counter[d] = 0;
            }
        }
        Ok(JointTable::from_parts_unchecked(out_axes, out))
    }

    /// Permute axes into `order`, which must name every axis.
    pub fn reorder(&self, order: &[&str]) -> Result<JointTable> {
        if order.len() != self.axes.len() {
            return Err(Error::dim("reorder", self.axes.len(), order.len()));
        }
        self.marginal(order)
    }

    /// Kernel from the flattened `given` axes to the remaining axes (in table order).
    pub fn condition(&self, given: &[&str]) -> Result<Conditional> {
        let gidx = self.resolve(given)?;
        let rest: Vec<&str> = self
            .axes
            .iter()
            .enumerate()
            .filter(|(i, _)| !gidx.contains(i))
            .map(|(_, a)| a.name.as_str())
            .collect();
        if rest.is_empty() {
            return Err(Error::Input("conditioning on every axis leaves nothing".into()));
        }
        let order: Vec<&str> = given.iter().copied().chain(rest.iter().copied()).collect();
        let t = self.marginal(&order)?;
        let rows: usize = gidx.iter().map(|&i| self.axes[i].size).product();
        let cols = t.data.len() / rows;
        let mut data = t.data;
        let mut zero_mass_rows = Vec::new();
        for r in 0..rows {
            let row = &mut data[r * cols..(r + 1) * cols];
            let mass: f64 = row.iter().sum();
            if mass > 0.0 {
                row.iter_mut().for_each(|v| *v /= mass);
            } else {
                row.iter_mut().for_each(|v| *v = 1.0 / cols as f64);
                zero_mass_rows.push(r);
            }
        }
        let kernel = if cols <= MAX_ALPHABET {
            Kernel::new(rows, cols, data)?
        } else {
            // Joint outputs beyond the per-axis cap are still valid kernels.
            Kernel::from_data_unchecked(rows, cols, data)
        };
        Ok(Conditional {
            kernel,
            zero_mass_rows,
        })
    }

    /// Append a new axis drawn from `k`, whose rows index the flattened table.
    pub fn extend(&self, k: &Kernel, name: &str) -> Result<JointTable> {
        if k.rows() != self.data.len() {
            return Err(Error::dim("joint extension", self.data.len(), k.rows()));
        }
        if self.axes.iter().any(|a| a.name == name) {
            return Err(Error::OverlappingAxes(name.to_string()));
        }
        let mut data = Vec::with_capacity(self.data.len() * k.cols());
        for (i, &p) in self.data.iter().enumerate() {
            data.extend(k.row(i).iter().map(|&v| p * v));
        }
        let mut axes = self.axes.clone();
        axes.push(Axis::new(name, k.cols()));
        Ok(JointTable::from_parts_unchecked(axes, data))
    }

    /// Collapse `names` into one axis `merged`, appended last.
    pub fn merge_axes(&self, names: &[&str], merged: &str) -> Result<JointTable> {
        let idx = self.resolve(names)?;
        let size: usize = idx.iter().map(|&i| self.axes[i].size).product();
        if size > MAX_ALPHABET {
            return Err(Error::AlphabetTooLarge {
                axis: merged.to_string(),
                size,
                limit: MAX_ALPHABET,
            });
        }
        let mut order: Vec<&str> = self
            .axes
            .iter()
            .enumerate()
            .filter(|(i, _)| !idx.contains(i))
            .map(|(_, a)| a.name.as_str())
            .collect();
        if order.contains(&merged) {
            return Err(Error::OverlappingAxes(merged.to_string()));
        }
        let mut axes: Vec<Axis> = order.iter().map(|n| self.axes[self.axis_index(n).unwrap()].clone()).collect();
        order.extend_from_slice(names);
        let t = self.reorder(&order)?;
        axes.push(Axis::new(merged, size));
        Ok(JointTable::from_parts_unchecked(axes, t.data))
    }

    pub fn rename(&self, from: &str, to: &str) -> Result<JointTable> {
        let i = self.axis_index(from)?;
        if from != to && self.axis_index(to).is_ok() {
            return Err(Error::OverlappingAxes(to.to_string()));
        }
        let mut t = self.clone();
        t.axes[i].name = to.to_string();
        Ok(t)
    }

    fn same_shape(&self, other: &JointTable) -> bool {
        self.axes == other.axes
    }

    /// `D(self ‖ other)`; both tables must have identical axes.
    pub fn kl(&self, other: &JointTable) -> Result<ExtReal> {
        if !self.same_shape(other) {
            return Err(Error::dim("joint divergence", self.data.len(), other.data.len()));
        }
        Ok(kl_slices(&self.data, &other.data))
    }

    pub fn max_abs_diff(&self, other: &JointTable) -> Result<f64> {
        if !self.same_shape(other) {
            return Err(Error::dim("joint comparison", self.data.len(), other.data.len()));
        }
        Ok(max_abs_diff(&self.data, &other.data))
    }
}

/// Joint of an input law and a channel, axes `(input, output)`.
pub fn compose_joint(p: &SimplexVector, k: &Kernel, input: &str, output: &str) -> Result<JointTable> {
    if p.len() != k.rows() {
        return Err(Error::dim("compose_joint", k.rows(), p.len()));
    }
    if p.len() > MAX_ALPHABET || k.cols() > MAX_ALPHABET {
        return Err(Error::AlphabetTooLarge {
            axis: input.to_string(),
            size: p.len().max(k.cols()),
            limit: MAX_ALPHABET,
        });
    }
    if input == output {
        return Err(Error::OverlappingAxes(input.to_string()));
    }
    let base = JointTable::from_parts_unchecked(vec![Axis::new(input, p.len())], p.as_slice().to_vec());
    base.extend(k, output)
}

/// `I(A;B|C)` in nats; each argument is a set of axis names and `c` may be empty.
pub fn conditional_mi(joint: &JointTable, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Input("mutual information needs non-empty variable sets".into()));
    }
    let all: Vec<&str> = a.iter().chain(b).chain(c).copied().collect();
    let t = joint.marginal(&all)?;
    let size = |names: &[&str]| -> usize { names.iter().map(|n| joint.size_of(n).unwrap()).product() };
    let (na, nb, nc) = (size(a), size(b), size(c));
    let mut p_ac = vec![0.0; na * nc];
    let mut p_bc = vec![0.0; nb * nc];
    let mut p_c = vec![0.0; nc];
    for ia in 0..na {
        for ib in 0..nb {
            for ic in 0..nc {
                let v = t.data[(ia * nb + ib) * nc + ic];
                p_ac[ia * nc + ic] += v;
                p_bc[ib * nc + ic] += v;
                p_c[ic] += v;
            }
        }
    }
    let mut acc = 0.0;
    for ia in 0..na {
        for ib in 0..nb {
            for ic in 0..nc {
                let v = t.data[(ia * nb + ib) * nc + ic];
                if v > 0.0 {
                    acc += v * ((v * p_c[ic]) / (p_ac[ia * nc + ic] * p_bc[ib * nc + ic])).ln();
                }
            }
        }
    }
    Ok(acc.max(0.0))
}
