//! States of a 2 x L x M x N system: sparse amplitude tensors, ket-notation
//! parsing, the matrix-pair view along the qubit axis, and local operator
//! action.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{ExactMatrix, Gaussian};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct StateShape {
    pub dims: [usize; 4],
}

impl StateShape {
    pub fn new(dims: [usize; 4]) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::Parse(format!("shape {dims:?} has a zero dimension")));
        }
        Ok(StateShape { dims })
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn contains(&self, idx: [usize; 4]) -> bool {
        idx.iter().zip(&self.dims).all(|(&i, &d)| 1 <= i && i <= d)
    }
}

/// Sparse amplitude tensor; keys are 1-based (i, l, m, n), absent = zero.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct StateTensor {
    pub shape: StateShape,
    amplitudes: BTreeMap<[usize; 4], Gaussian>,
}

impl StateTensor {
    pub fn new(shape: StateShape) -> Self {
        StateTensor { shape, amplitudes: BTreeMap::new() }
    }

    pub fn amp(&self, idx: [usize; 4]) -> Gaussian {
        self.amplitudes.get(&idx).cloned().unwrap_or_else(Gaussian::zero)
    }

    pub fn set(&mut self, idx: [usize; 4], amp: Gaussian) -> Result<()> {
        if !self.shape.contains(idx) {
            return Err(Error::IndexOutOfRange(format!(
                "index {idx:?} outside shape {:?}",
                self.shape.dims
            )));
        }
        if amp.is_zero() {
            self.amplitudes.remove(&idx);
        } else {
            self.amplitudes.insert(idx, amp);
        }
        Ok(())
    }

    pub fn accumulate(&mut self, idx: [usize; 4], amp: &Gaussian) -> Result<()> {
        let total = &self.amp(idx) + amp;
        self.set(idx, total)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[usize; 4], &Gaussian)> {
        self.amplitudes.iter()
    }

    pub fn nonzero_count(&self) -> usize {
        self.amplitudes.len()
    }

    /// A state must have at least one nonzero amplitude.
    pub fn is_valid(&self) -> bool {
        !self.amplitudes.is_empty()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum CompositeSide {
    Columns,
    Rows,
}

/// Which side of the pair carries the composite (M,N) index: columns when
/// L < M*N, rows otherwise.
pub fn composite_side_for(single_dim: usize, m: usize, n: usize) -> CompositeSide {
    if single_dim < m * n {
        CompositeSide::Columns
    } else {
        CompositeSide::Rows
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MatrixPair {
    pub gamma1: ExactMatrix,
    pub gamma2: ExactMatrix,
    pub composite_side: CompositeSide,
    /// (M, N); composite index c = (m-1)*N + n.
    pub factor_dims: (usize, usize),
    pub single_dim: usize,
}

impl MatrixPair {
    pub fn rows(&self) -> usize {
        self.gamma1.rows
    }

    pub fn cols(&self) -> usize {
        self.gamma1.cols
    }

    /// gamma_i' = sum_j t2[i][j] * row_op * gamma_j * col_op.
    pub fn transform(
        &self,
        t2: &ExactMatrix,
        row_op: &ExactMatrix,
        col_op: &ExactMatrix,
    ) -> Result<MatrixPair> {
        if t2.rows != 2 || t2.cols != 2 {
            return Err(Error::DimensionMismatch("qubit operator must be 2x2".into()));
        }
        let g = [&self.gamma1, &self.gamma2];
        let mut out = Vec::with_capacity(2);
        for i in 0..2 {
            let mut acc = ExactMatrix::zeros(self.rows(), self.cols());
            for (j, gj) in g.iter().enumerate() {
                let coeff = t2.at(i, j);
                if coeff.is_zero() {
                    continue;
                }
                let term = row_op.matmul(gj).matmul(col_op).scale(coeff);
                acc = acc.add(&term);
            }
            out.push(acc);
        }
        let gamma2 = out.pop().unwrap();
        let gamma1 = out.pop().unwrap();
        Ok(MatrixPair { gamma1, gamma2, ..self.clone() })
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LocalOperatorQuad {
    pub a1: ExactMatrix,
    pub a2: ExactMatrix,
    pub a3: ExactMatrix,
    pub a4: ExactMatrix,
}

impl LocalOperatorQuad {
    pub fn identity(shape: &StateShape) -> Self {
        LocalOperatorQuad {
            a1: ExactMatrix::identity(shape.dims[0]),
            a2: ExactMatrix::identity(shape.dims[1]),
            a3: ExactMatrix::identity(shape.dims[2]),
            a4: ExactMatrix::identity(shape.dims[3]),
        }
    }

    pub fn ops(&self) -> [&ExactMatrix; 4] {
        [&self.a1, &self.a2, &self.a3, &self.a4]
    }

    pub fn inverse(&self) -> Result<Self> {
        Ok(LocalOperatorQuad {
            a1: self.a1.invert()?,
            a2: self.a2.invert()?,
            a3: self.a3.invert()?,
            a4: self.a4.invert()?,
        })
    }

    /// Componentwise product: (self o other).apply = self.apply after other.apply.
    pub fn compose(&self, other: &Self) -> Self {
        LocalOperatorQuad {
            a1: self.a1.matmul(&other.a1),
            a2: self.a2.matmul(&other.a2),
            a3: self.a3.matmul(&other.a3),
            a4: self.a4.matmul(&other.a4),
        }
    }
}

/// How the axes of the input tensor were permuted into (qubit, single,
/// factor1, factor2) order. `arranged_from[k]` is the 1-based original axis
/// now sitting at arranged position k.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct ArrangementRecord {
    pub arranged_from: [usize; 4],
    pub composite_side: CompositeSide,
}

impl ArrangementRecord {
    /// Slot in arranged order holding original axis `orig` (1-based both ways).
    pub fn arranged_slot(&self, orig: usize) -> usize {
        self.arranged_from.iter().position(|&a| a == orig).unwrap() + 1
    }

    /// Reorder an arranged-axis operator quadruple back onto the original
    /// axes, so each operator acts on the particle it was derived for.
    pub fn unarrange_quad(&self, q: &LocalOperatorQuad) -> LocalOperatorQuad {
        let arranged = [&q.a1, &q.a2, &q.a3, &q.a4];
        let mut out: [Option<ExactMatrix>; 4] = [None, None, None, None];
        for (k, op) in arranged.into_iter().enumerate() {
            out[self.arranged_from[k] - 1] = Some(op.clone());
        }
        let [o1, o2, o3, o4] = out;
        LocalOperatorQuad { a1: o1.unwrap(), a2: o2.unwrap(), a3: o3.unwrap(), a4: o4.unwrap() }
    }
}

/// Permute axes so the order is (qubit, single, factor1, factor2); the two
/// factor axes keep their original relative order. Axes are 1-based.
pub fn arrange_axes(
    t: &StateTensor,
    qubit_axis: usize,
    single_axis: usize,
) -> Result<(StateTensor, ArrangementRecord)> {
    if !(1..=4).contains(&qubit_axis) || !(1..=4).contains(&single_axis) || qubit_axis == single_axis
    {
        return Err(Error::NoQubitAxis(format!(
            "axis designation (qubit={qubit_axis}, single={single_axis}) is not a pair of distinct axes in 1..=4"
        )));
    }
    if t.shape.dims[qubit_axis - 1] != 2 {
        return Err(Error::NoQubitAxis(format!(
            "axis {qubit_axis} has dimension {}, expected 2",
            t.shape.dims[qubit_axis - 1]
        )));
    }
    let factors: Vec<usize> = (1..=4).filter(|&a| a != qubit_axis && a != single_axis).collect();
    let arranged_from = [qubit_axis, single_axis, factors[0], factors[1]];
    let dims = arranged_from.map(|a| t.shape.dims[a - 1]);
    let mut out = StateTensor::new(StateShape { dims });
    for (idx, amp) in t.terms() {
        let new_idx = arranged_from.map(|a| idx[a - 1]);
        out.set(new_idx, amp.clone())?;
    }
    let record = ArrangementRecord {
        arranged_from,
        composite_side: composite_side_for(dims[1], dims[2], dims[3]),
    };
    Ok((out, record))
}

/// Matrix-pair view of an arranged tensor: gamma_i[(l, c)] (or [(c, l)] when
/// the composite index is on the rows) with c = (m-1)*N + n.
pub fn to_matrix_pair(t: &StateTensor) -> Result<MatrixPair> {
    let [d1, l, m, n] = t.shape.dims;
    if d1 != 2 {
        return Err(Error::NoQubitAxis(format!(
            "first axis has dimension {d1}; arrange_axes must run first"
        )));
    }
    let side = composite_side_for(l, m, n);
    let (rows, cols) = match side {
        CompositeSide::Columns => (l, m * n),
        CompositeSide::Rows => (m * n, l),
    };
    let mut gammas = [ExactMatrix::zeros(rows, cols), ExactMatrix::zeros(rows, cols)];
    for (&[i, li, mi, ni], amp) in t.terms() {
        let c = (mi - 1) * n + ni;
        let (r, col) = match side {
            CompositeSide::Columns => (li - 1, c - 1),
            CompositeSide::Rows => (c - 1, li - 1),
        };
        *gammas[i - 1].at_mut(r, col) = amp.clone();
    }
    let [gamma1, gamma2] = gammas;
    Ok(MatrixPair { gamma1, gamma2, composite_side: side, factor_dims: (m, n), single_dim: l })
}

pub fn from_matrix_pair(pair: &MatrixPair) -> Result<StateTensor> {
    let (m, n) = pair.factor_dims;
    let l = pair.single_dim;
    let shape = StateShape::new([2, l, m, n])?;
    let mut t = StateTensor::new(shape);
    for (i, g) in [&pair.gamma1, &pair.gamma2].into_iter().enumerate() {
        for r in 0..g.rows {
            for col in 0..g.cols {
                let amp = g.at(r, col);
                if amp.is_zero() {
                    continue;
                }
                let (li, c) = match pair.composite_side {
                    CompositeSide::Columns => (r + 1, col + 1),
                    CompositeSide::Rows => (col + 1, r + 1),
                };
                let (mi, ni) = ((c - 1) / n + 1, (c - 1) % n + 1);
                t.set([i + 1, li, mi, ni], amp.clone())?;
            }
        }
    }
    Ok(t)
}

/// Rank of each single-axis flattening (axis k against the other three).
/// Invariant under invertible local operators.
pub fn local_ranks(t: &StateTensor) -> [usize; 4] {
    let dims = t.shape.dims;
    let mut out = [0usize; 4];
    for k in 0..4 {
        let cols: usize =
            dims.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, &d)| d).product();
        let mut m = ExactMatrix::zeros(dims[k], cols);
        for (idx, amp) in t.terms() {
            let mut c = 0usize;
            for j in 0..4 {
                if j != k {
                    c = c * dims[j] + (idx[j] - 1);
                }
            }
            *m.at_mut(idx[k] - 1, c) = amp.clone();
        }
        out[k] = m.rank();
    }
    out
}

/// gamma'_{i'l'm'n'} = sum A1_{i'i} A2_{l'l} A3_{m'm} A4_{n'n} gamma_{ilmn}.
pub fn apply_slocc(t: &StateTensor, ops: &LocalOperatorQuad) -> Result<StateTensor> {
    for (k, op) in ops.ops().into_iter().enumerate() {
        let d = t.shape.dims[k];
        if op.rows != d || op.cols != d {
            return Err(Error::DimensionMismatch(format!(
                "operator {} is {}x{}, axis dimension is {d}",
                k + 1,
                op.rows,
                op.cols
            )));
        }
        if op.det().is_zero() {
            return Err(Error::Singular(format!("operator {} is not invertible", k + 1)));
        }
    }
    let mut out = StateTensor::new(t.shape);
    let dims = t.shape.dims;
    for (idx, amp) in t.terms() {
        // Distribute this term over all target indices with nonzero weight.
        let mut partial: Vec<([usize; 4], Gaussian)> = vec![([0; 4], amp.clone())];
        for (axis, op) in ops.ops().into_iter().enumerate() {
            let src = idx[axis] - 1;
            let mut next = Vec::with_capacity(partial.len() * dims[axis]);
            for (tgt_prefix, coeff) in &partial {
                for dst in 0..dims[axis] {
                    let w = op.at(dst, src);
                    if w.is_zero() {
                        continue;
                    }
                    let mut tgt = *tgt_prefix;
                    tgt[axis] = dst + 1;
                    next.push((tgt, coeff * w));
                }
            }
            partial = next;
        }
        for (tgt, coeff) in partial {
            out.accumulate(tgt, &coeff)?;
        }
    }
    Ok(out)
}

/// Rank of the flattening that isolates `axis` (1-based) against the rest.
pub fn local_rank(t: &StateTensor, axis: usize) -> usize {
    let d = t.shape.dims[axis - 1];
    let rest: usize = t.shape.total() / d;
    let mut flat = ExactMatrix::zeros(d, rest);
    let dims = t.shape.dims;
    for (idx, amp) in t.terms() {
        let mut c = 0usize;
        for k in 0..4 {
            if k == axis - 1 {
                continue;
            }
            c = c * dims[k] + (idx[k] - 1);
        }
        *flat.at_mut(idx[axis - 1] - 1, c) = amp.clone();
    }
    flat.rank()
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RandomMode {
    /// Uniform integers in [0, bound].
    NonnegativeInteger,
    /// Re and im parts uniform in [-bound, bound].
    SignedGaussian,
}

/// Deterministic under (seed, shape, bound, mode). May return the zero
/// tensor (bound 0, or unlucky draw); callers check is_valid.
pub fn random_state(shape: StateShape, entry_bound: u64, seed: u64, mode: RandomMode) -> StateTensor {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut t = StateTensor::new(shape);
    let [d1, d2, d3, d4] = shape.dims;
    for i in 1..=d1 {
        for l in 1..=d2 {
            for m in 1..=d3 {
                for n in 1..=d4 {
                    let amp = match mode {
                        RandomMode::NonnegativeInteger => {
                            Gaussian::from_i64(rng.gen_range(0..=entry_bound) as i64, 0)
                        }
                        RandomMode::SignedGaussian => {
                            let b = entry_bound as i64;
                            Gaussian::from_i64(rng.gen_range(-b..=b), rng.gen_range(-b..=b))
                        }
                    };
                    t.set([i, l, m, n], amp).unwrap();
                }
            }
        }
    }
    t
}

// --- ket notation ---------------------------------------------------------

/// Parses listings like "|1111> + |1222> - 2i|2111>". Coefficients default
/// to 1; the sign between terms multiplies the coefficient; single-digit
/// indices may omit commas. Repeated kets sum (possibly to zero).
pub fn parse_ket(text: &str, shape: StateShape) -> Result<StateTensor> {
    let mut t = StateTensor::new(shape);
    let bytes = text.as_bytes();
    let mut pos = 0usize;
    let mut first = true;
    let mut any = false;
    loop {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos == bytes.len() {
            break;
        }
        // Separator sign (optional before the first term).
        let mut sign = 1i64;
        match bytes[pos] {
            b'+' => {
                pos += 1;
            }
            b'-' => {
                sign = -1;
                pos += 1;
            }
            _ if first => {}
            other => {
                return Err(Error::Parse(format!(
                    "expected '+' or '-' between terms at byte {pos}, found {:?}",
                    other as char
                )))
            }
        }
        first = false;
        let bar = text[pos..]
            .find('|')
            .map(|k| pos + k)
            .ok_or_else(|| Error::Parse(format!("expected '|' after byte {pos}")))?;
        let coeff_text = text[pos..bar].trim();
        let mut coeff: Gaussian = if coeff_text.is_empty() {
            Gaussian::one()
        } else {
            coeff_text
                .parse()
                .map_err(|e| Error::Parse(format!("coefficient at byte {pos}: {e}")))?
        };
        if sign < 0 {
            coeff = -coeff;
        }
        let close = text[bar..]
            .find('>')
            .map(|k| bar + k)
            .ok_or_else(|| Error::Parse(format!("unterminated ket at byte {bar}")))?;
        let idx = parse_ket_indices(&text[bar + 1..close], bar + 1)?;
        if !shape.contains(idx) {
            return Err(Error::IndexOutOfRange(format!(
                "ket {idx:?} outside shape {:?} at byte {bar}",
                shape.dims
            )));
        }
        t.accumulate(idx, &coeff)?;
        any = true;
        pos = close + 1;
    }
    if !any {
        return Err(Error::Parse("no ket terms found".into()));
    }
    Ok(t)
}

fn parse_ket_indices(body: &str, at: usize) -> Result<[usize; 4]> {
    let parts: Vec<&str> = if body.contains(',') {
        body.split(',').map(str::trim).collect()
    } else {
        let b = body.trim();
        if b.len() != 4 || !b.bytes().all(|c| c.is_ascii_digit()) {
            return Err(Error::Parse(format!(
                "ket body {b:?} at byte {at} must be four comma-separated indices or four digits"
            )));
        }
        return Ok([
            (b.as_bytes()[0] - b'0') as usize,
            (b.as_bytes()[1] - b'0') as usize,
            (b.as_bytes()[2] - b'0') as usize,
            (b.as_bytes()[3] - b'0') as usize,
        ]);
    };
    if parts.len() != 4 {
        return Err(Error::Parse(format!(
            "ket at byte {at} lists {} indices, need 4",
            parts.len()
        )));
    }
    let mut idx = [0usize; 4];
    for (k, p) in parts.iter().enumerate() {
        idx[k] = p
            .parse()
            .map_err(|_| Error::Parse(format!("bad index {p:?} in ket at byte {at}")))?;
    }
    Ok(idx)
}

/// Renders nonzero terms in index order; inverse of parse_ket on valid states.
pub fn format_ket(t: &StateTensor) -> String {
    let mut out = String::new();
    for (idx, amp) in t.terms() {
        let (sign, mag) = if amp.re < num_rational::BigRational::from_integer(0.into())
            || (amp.re == num_rational::BigRational::from_integer(0.into())
                && amp.im < num_rational::BigRational::from_integer(0.into()))
        {
            ("-", -amp)
        } else {
            ("+", amp.clone())
        };
        if out.is_empty() {
            if sign == "-" {
                out.push('-');
            }
        } else {
            out.push_str(&format!(" {sign} "));
        }
        let needs_parens = !mag.re.numer().is_zero() && !mag.im.numer().is_zero();
        if !mag.is_one() {
            if needs_parens {
                out.push_str(&format!("({mag})"));
            } else {
                out.push_str(&mag.to_string());
            }
        }
        let digits: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
        if idx.iter().all(|&i| i <= 9) {
            out.push_str(&format!("|{}>", digits.join("")));
        } else {
            out.push_str(&format!("|{}>", digits.join(",")));
        }
    }
    out
}

// --- file formats ----------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct TermRecord {
    idx: [usize; 4],
    amp: String,
}

#[derive(Serialize, Deserialize)]
struct StateFile {
    shape: [usize; 4],
    #[serde(default = "default_qubit_axis")]
    qubit_axis: usize,
    #[serde(default = "default_single_axis")]
    single_axis: usize,
    terms: Vec<TermRecord>,
}

fn default_qubit_axis() -> usize {
    1
}

fn default_single_axis() -> usize {
    2
}

/// Returns the tensor plus (qubit_axis, single_axis) designations.
pub fn read_state_json(text: &str) -> Result<(StateTensor, usize, usize)> {
    let file: StateFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("state JSON: {e}")))?;
    let shape = StateShape::new(file.shape)?;
    let mut t = StateTensor::new(shape);
    for term in &file.terms {
        let amp: Gaussian = term
            .amp
            .parse()
            .map_err(|e| Error::Parse(format!("amplitude {:?}: {e}", term.amp)))?;
        t.accumulate(term.idx, &amp)?;
    }
    Ok((t, file.qubit_axis, file.single_axis))
}

pub fn write_state_json(t: &StateTensor, qubit_axis: usize, single_axis: usize) -> String {
    let file = StateFile {
        shape: t.shape.dims,
        qubit_axis,
        single_axis,
        terms: t
            .terms()
            .map(|(idx, amp)| TermRecord { idx: *idx, amp: amp.to_string() })
            .collect(),
    };
    serde_json::to_string_pretty(&file).unwrap()
}

impl fmt::Display for StateTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_ket(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(d: [usize; 4]) -> StateShape {
        StateShape::new(d).unwrap()
    }

    fn g(s: &str) -> Gaussian {
        s.parse().unwrap()
    }

    #[test]
    fn ket_parse_and_format() {
        let t = parse_ket("|1111> + |1222> + |2111>", shape([2, 2, 2, 2])).unwrap();
        assert_eq!(t.nonzero_count(), 3);
        assert_eq!(t.amp([1, 2, 2, 2]), g("1"));
        assert_eq!(format_ket(&t), "|1111> + |1222> + |2111>");

        let t2 = parse_ket("2i|1,1,1,1> - 1/2|2,1,1,1>", shape([2, 2, 2, 2])).unwrap();
        assert_eq!(t2.amp([1, 1, 1, 1]), g("2i"));
        assert_eq!(t2.amp([2, 1, 1, 1]), g("-1/2"));

        // Repeated kets accumulate, full cancellation is representable.
        let z = parse_ket("|1111> - |1111>", shape([2, 2, 2, 2])).unwrap();
        assert!(!z.is_valid());
    }

    #[test]
    fn ket_rejects_bad_input() {
        let s = shape([2, 2, 2, 2]);
        assert!(matches!(parse_ket("|123>", s), Err(Error::Parse(_))));
        assert!(matches!(parse_ket("|1311>", s), Err(Error::IndexOutOfRange(_))));
        assert!(matches!(parse_ket("", s), Err(Error::Parse(_))));
        assert!(matches!(parse_ket("|1111> |1111>", s), Err(Error::Parse(_))));
        assert!(matches!(parse_ket("q|1111>", s), Err(Error::Parse(_))));
    }

    #[test]
    fn arrange_moves_qubit_first() {
        // (3, 2, 4, 2): qubit on axis 2, single on axis 1.
        let mut t = StateTensor::new(shape([3, 2, 4, 2]));
        t.set([3, 2, 4, 1], g("5")).unwrap();
        let (a, rec) = arrange_axes(&t, 2, 1).unwrap();
        assert_eq!(a.shape.dims, [2, 3, 4, 2]);
        assert_eq!(a.amp([2, 3, 4, 1]), g("5"));
        assert_eq!(rec.arranged_from, [2, 1, 3, 4]);
        // L = 3 < 8 = MN.
        assert_eq!(rec.composite_side, CompositeSide::Columns);

        let t2 = StateTensor::new(shape([2, 2, 2, 4]));
        let (_, rec2) = arrange_axes(&t2, 1, 4).unwrap();
        // Single dim 4 = MN: rows carry the composite index.
        assert_eq!(rec2.composite_side, CompositeSide::Rows);

        assert!(matches!(
            arrange_axes(&StateTensor::new(shape([3, 3, 3, 3])), 1, 2),
            Err(Error::NoQubitAxis(_))
        ));
    }

    #[test]
    fn pair_round_trip() {
        let t = parse_ket("|1234> + 2|2111> - i|1122>", shape([2, 2, 3, 4])).unwrap();
        let pair = to_matrix_pair(&t).unwrap();
        assert_eq!(pair.composite_side, CompositeSide::Columns);
        assert_eq!((pair.rows(), pair.cols()), (2, 12));
        // c = (m-1)*4 + n: |1234> -> gamma1 row l-1 = 1, col c-1 = (3-1)*4+4-1 = 11.
        assert_eq!(*pair.gamma1.at(1, 11), g("1"));
        assert_eq!(*pair.gamma2.at(0, 0), g("2"));
        assert_eq!(*pair.gamma1.at(0, 5), g("-i"));
        assert_eq!(from_matrix_pair(&pair).unwrap(), t);
    }

    #[test]
    fn pair_rows_side_round_trip() {
        let t = parse_ket("|1411> + 3|2122>", shape([2, 4, 2, 2])).unwrap();
        let pair = to_matrix_pair(&t).unwrap();
        assert_eq!(pair.composite_side, CompositeSide::Rows);
        assert_eq!((pair.rows(), pair.cols()), (4, 4));
        assert_eq!(*pair.gamma1.at(0, 3), g("1"));
        assert_eq!(*pair.gamma2.at(3, 0), g("3"));
        assert_eq!(from_matrix_pair(&pair).unwrap(), t);
    }

    #[test]
    fn product_state_pair() {
        let t = parse_ket("|1111>", shape([2, 2, 2, 2])).unwrap();
        let pair = to_matrix_pair(&t).unwrap();
        assert_eq!(*pair.gamma1.at(0, 0), g("1"));
        assert!(pair.gamma2.is_zero());
    }

    #[test]
    fn slocc_identity_and_round_trip() {
        let s = shape([2, 2, 2, 2]);
        let t = parse_ket("|1111> + |1222> + |2111>", s).unwrap();
        let id = LocalOperatorQuad::identity(&s);
        assert_eq!(apply_slocc(&t, &id).unwrap(), t);

        let ops = LocalOperatorQuad {
            a1: ExactMatrix::from_i64(&[&[1, 1], &[0, 1]]),
            a2: ExactMatrix::from_i64(&[&[2, 0], &[1, 1]]),
            a3: ExactMatrix::from_i64(&[&[1, -1], &[1, 1]]),
            a4: ExactMatrix::from_i64(&[&[0, 1], &[1, 0]]),
        };
        let moved = apply_slocc(&t, &ops).unwrap();
        let back = apply_slocc(&moved, &ops.inverse().unwrap()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn slocc_is_group_action() {
        let s = shape([2, 2, 2, 2]);
        let t = random_state(s, 2, 7, RandomMode::SignedGaussian);
        let ops1 = LocalOperatorQuad {
            a1: ExactMatrix::from_i64(&[&[1, 2], &[0, 1]]),
            a2: ExactMatrix::from_i64(&[&[1, 0], &[3, 1]]),
            a3: ExactMatrix::from_i64(&[&[2, 1], &[1, 1]]),
            a4: ExactMatrix::from_i64(&[&[1, 1], &[-1, 1]]),
        };
        let ops2 = LocalOperatorQuad {
            a1: ExactMatrix::from_i64(&[&[0, 1], &[-1, 0]]),
            a2: ExactMatrix::from_i64(&[&[1, 1], &[0, 2]]),
            a3: ExactMatrix::from_i64(&[&[1, 0], &[0, 3]]),
            a4: ExactMatrix::from_i64(&[&[2, 1], &[1, 1]]),
        };
        let seq = apply_slocc(&apply_slocc(&t, &ops1).unwrap(), &ops2).unwrap();
        let composed = apply_slocc(&t, &ops2.compose(&ops1)).unwrap();
        assert_eq!(seq, composed);
    }

    #[test]
    fn slocc_rejects_singular_and_mismatched() {
        let s = shape([2, 2, 2, 2]);
        let t = parse_ket("|1111>", s).unwrap();
        let mut ops = LocalOperatorQuad::identity(&s);
        ops.a3 = ExactMatrix::from_i64(&[&[1, 1], &[1, 1]]);
        assert!(matches!(apply_slocc(&t, &ops), Err(Error::Singular(_))));
        let mut ops2 = LocalOperatorQuad::identity(&s);
        ops2.a2 = ExactMatrix::identity(3);
        assert!(matches!(apply_slocc(&t, &ops2), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn pair_transform_matches_tensor_action() {
        // Columns case: row op A2, column op (A3 kron A4)^T, qubit mix A1.
        let s = shape([2, 2, 2, 3]);
        let t = random_state(s, 2, 11, RandomMode::SignedGaussian);
        let ops = LocalOperatorQuad {
            a1: ExactMatrix::from_i64(&[&[1, 1], &[1, -1]]),
            a2: ExactMatrix::from_i64(&[&[2, 1], &[1, 1]]),
            a3: ExactMatrix::from_i64(&[&[1, 2], &[0, 1]]),
            a4: ExactMatrix::from_i64(&[&[1, 0, 1], &[0, 1, 0], &[1, 0, 0]]),
        };
        let pair = to_matrix_pair(&t).unwrap();
        let q = ops.a3.kron(&ops.a4).transpose();
        let moved_pair = pair.transform(&ops.a1, &ops.a2, &q).unwrap();
        let moved_tensor = to_matrix_pair(&apply_slocc(&t, &ops).unwrap()).unwrap();
        assert_eq!(moved_pair.gamma1, moved_tensor.gamma1);
        assert_eq!(moved_pair.gamma2, moved_tensor.gamma2);
    }

    #[test]
    fn pair_transform_rows_side() {
        // Rows case: row op A3 kron A4, column op A2^T.
        let s = shape([2, 4, 2, 2]);
        let t = random_state(s, 2, 13, RandomMode::SignedGaussian);
        let ops = LocalOperatorQuad {
            a1: ExactMatrix::from_i64(&[&[1, 0], &[2, 1]]),
            a2: ExactMatrix::from_i64(&[
                &[1, 0, 0, 1],
                &[0, 1, 1, 0],
                &[0, 0, 1, 0],
                &[1, 0, 0, 0],
            ]),
            a3: ExactMatrix::from_i64(&[&[1, 1], &[0, 1]]),
            a4: ExactMatrix::from_i64(&[&[3, 1], &[2, 1]]),
        };
        let pair = to_matrix_pair(&t).unwrap();
        let row_op = ops.a3.kron(&ops.a4);
        let col_op = ops.a2.transpose();
        let moved_pair = pair.transform(&ops.a1, &row_op, &col_op).unwrap();
        let moved_tensor = to_matrix_pair(&apply_slocc(&t, &ops).unwrap()).unwrap();
        assert_eq!(moved_pair.gamma1, moved_tensor.gamma1);
        assert_eq!(moved_pair.gamma2, moved_tensor.gamma2);
    }

    #[test]
    fn local_ranks_invariant() {
        let s = shape([2, 3, 2, 2]);
        let t = random_state(s, 2, 3, RandomMode::SignedGaussian);
        let ops = LocalOperatorQuad {
            a1: ExactMatrix::from_i64(&[&[1, 2], &[1, 3]]),
            a2: ExactMatrix::from_i64(&[&[1, 0, 2], &[0, 1, 0], &[0, 0, 1]]),
            a3: ExactMatrix::from_i64(&[&[0, 1], &[1, 1]]),
            a4: ExactMatrix::from_i64(&[&[1, -1], &[2, 1]]),
        };
        let moved = apply_slocc(&t, &ops).unwrap();
        for axis in 1..=4 {
            assert_eq!(local_rank(&t, axis), local_rank(&moved, axis), "axis {axis}");
        }
    }

    #[test]
    fn random_state_is_deterministic() {
        let s = shape([2, 4, 3, 2]);
        let a = random_state(s, 1, 42, RandomMode::NonnegativeInteger);
        let b = random_state(s, 1, 42, RandomMode::NonnegativeInteger);
        assert_eq!(a, b);
        let c = random_state(s, 1, 43, RandomMode::NonnegativeInteger);
        assert_ne!(a, c);
        // Bound 0 gives the zero tensor, which is flagged invalid.
        let z = random_state(s, 0, 1, RandomMode::NonnegativeInteger);
        assert!(!z.is_valid());
        // Nonnegative mode stays within [0, bound].
        for (_, amp) in a.terms() {
            assert!(amp.im.is_zero());
            let v = amp.re.to_integer();
            assert!(v >= 0.into() && v <= 1.into());
        }
    }

    #[test]
    fn state_json_round_trip() {
        let t = parse_ket("|1111> - 2i|1222> + 1/3|2111>", shape([2, 2, 2, 2])).unwrap();
        let text = write_state_json(&t, 1, 2);
        let (back, qa, sa) = read_state_json(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!((qa, sa), (1, 2));
        // Defaults apply when axes are omitted.
        let (_, qa2, sa2) = read_state_json(
            r#"{"shape":[2,2,2,2],"terms":[{"idx":[1,1,1,1],"amp":"1"}]}"#,
        )
        .unwrap();
        assert_eq!((qa2, sa2), (1, 2));
    }
}
