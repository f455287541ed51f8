//! Parity-check description of a binary linear code.
//!
//! A [`CodeModel`] stores the Tanner graph in compressed form: edges are
//! numbered check by check, so the variables of check `j` occupy the edge
//! range `check_ptr[j]..check_ptr[j + 1]`. Every per-edge array used by the
//! decoders (check-polytope copies, dual variables, messages) follows the
//! same numbering.

use std::fmt::Write as _;

use crate::error::{AlistErrorKind, Error, Result};

/// Immutable parity-check matrix with row and column adjacency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeModel {
    n_vars: usize,
    check_ptr: Vec<usize>,
    edge_var: Vec<usize>,
    var_ptr: Vec<usize>,
    var_edge: Vec<usize>,
}

impl CodeModel {
    /// Builds a code from per-check variable lists (0-based).
    ///
    /// Each row is sorted; duplicate or out-of-range indices and checks of
    /// degree below two are rejected.
    pub fn from_check_rows(n_vars: usize, rows: Vec<Vec<usize>>) -> Result<Self> {
        let mut check_ptr = Vec::with_capacity(rows.len() + 1);
        let mut edge_var = Vec::new();
        check_ptr.push(0);
        for (j, mut row) in rows.into_iter().enumerate() {
            row.sort_unstable();
            if let Some(&bad) = row.iter().find(|&&i| i >= n_vars) {
                return Err(Error::Config(format!(
                    "check {j} references variable {bad} but the code has {n_vars} variables"
                )));
            }
            if row.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Config(format!("check {j} lists a variable twice")));
            }
            if row.len() < 2 {
                return Err(Error::Config(format!(
                    "check {j} has degree {}, at least 2 required",
                    row.len()
                )));
            }
            edge_var.extend_from_slice(&row);
            check_ptr.push(edge_var.len());
        }

        let mut var_count = vec![0usize; n_vars];
        for &i in &edge_var {
            var_count[i] += 1;
        }
        let mut var_ptr = Vec::with_capacity(n_vars + 1);
        var_ptr.push(0);
        for &c in &var_count {
            var_ptr.push(var_ptr.last().unwrap() + c);
        }
        let mut fill = var_ptr[..n_vars].to_vec();
        let mut var_edge = vec![0usize; edge_var.len()];
        for (e, &i) in edge_var.iter().enumerate() {
            var_edge[fill[i]] = e;
            fill[i] += 1;
        }

        Ok(CodeModel {
            n_vars,
            check_ptr,
            edge_var,
            var_ptr,
            var_edge,
        })
    }

    /// Builds a code from a dense 0/1 parity-check matrix.
    pub fn from_dense(h: &[Vec<u8>]) -> Result<Self> {
        let n = h.first().map_or(0, Vec::len);
        let rows = h
            .iter()
            .map(|row| {
                if row.len() != n {
                    return Err(Error::LengthMismatch {
                        expected: n,
                        got: row.len(),
                    });
                }
                Ok(row
                    .iter()
                    .enumerate()
                    .filter(|(_, &b)| b != 0)
                    .map(|(i, _)| i)
                    .collect())
            })
            .collect::<Result<Vec<Vec<usize>>>>()?;
        Self::from_check_rows(n, rows)
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_checks(&self) -> usize {
        self.check_ptr.len() - 1
    }

    /// Number of ones in H.
    pub fn n_edges(&self) -> usize {
        self.edge_var.len()
    }

    /// Design rate `(N - M) / N`.
    pub fn rate(&self) -> f64 {
        (self.n_vars as f64 - self.n_checks() as f64) / self.n_vars as f64
    }

    /// Sorted variable indices taking part in check `j`.
    pub fn check(&self, j: usize) -> &[usize] {
        &self.edge_var[self.check_ptr[j]..self.check_ptr[j + 1]]
    }

    /// Edge index range of check `j`.
    pub fn check_edges(&self, j: usize) -> std::ops::Range<usize> {
        self.check_ptr[j]..self.check_ptr[j + 1]
    }

    pub fn check_degree(&self, j: usize) -> usize {
        self.check_ptr[j + 1] - self.check_ptr[j]
    }

    pub fn var_degree(&self, i: usize) -> usize {
        self.var_ptr[i + 1] - self.var_ptr[i]
    }

    /// Edges incident to variable `i`, in increasing check order.
    pub fn var_edges(&self, i: usize) -> &[usize] {
        &self.var_edge[self.var_ptr[i]..self.var_ptr[i + 1]]
    }

    /// Variable at the end of edge `e`.
    pub fn edge_var(&self, e: usize) -> usize {
        self.edge_var[e]
    }

    pub fn check_rows(&self) -> impl Iterator<Item = &[usize]> + '_ {
        (0..self.n_checks()).map(move |j| self.check(j))
    }

    pub fn check_degrees(&self) -> Vec<usize> {
        (0..self.n_checks()).map(|j| self.check_degree(j)).collect()
    }

    pub fn var_degrees(&self) -> Vec<usize> {
        (0..self.n_vars).map(|i| self.var_degree(i)).collect()
    }

    /// Distinct check degrees, ascending.
    pub fn distinct_check_degrees(&self) -> Vec<usize> {
        let mut d = self.check_degrees();
        d.sort_unstable();
        d.dedup();
        d
    }

    /// True iff every check has even parity over `bits`.
    pub fn syndrome_ok(&self, bits: &[u8]) -> Result<bool> {
        if bits.len() != self.n_vars {
            return Err(Error::LengthMismatch {
                expected: self.n_vars,
                got: bits.len(),
            });
        }
        Ok(self.syndrome_holds(bits))
    }

    pub(crate) fn syndrome_holds(&self, bits: &[u8]) -> bool {
        self.check_rows()
            .all(|row| row.iter().fold(0u8, |acc, &i| acc ^ (bits[i] & 1)) == 0)
    }

    /// Returns a copy with checks reordered so that new check `k` is old
    /// check `order[k]`.
    pub fn permute_checks(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.n_checks() {
            return Err(Error::LengthMismatch {
                expected: self.n_checks(),
                got: order.len(),
            });
        }
        let rows = order.iter().map(|&j| self.check(j).to_vec()).collect();
        Self::from_check_rows(self.n_vars, rows)
    }

    /// Serializes to alist text, zero-padding short index lists.
    pub fn to_alist(&self) -> String {
        let m = self.n_checks();
        let col_deg = self.var_degrees();
        let row_deg = self.check_degrees();
        let max_col = col_deg.iter().copied().max().unwrap_or(0);
        let max_row = row_deg.iter().copied().max().unwrap_or(0);

        let mut out = String::new();
        let join = |xs: &mut dyn Iterator<Item = usize>| {
            xs.map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
        };
        let _ = writeln!(out, "{} {}", self.n_vars, m);
        let _ = writeln!(out, "{max_col} {max_row}");
        let _ = writeln!(out, "{}", join(&mut col_deg.iter().copied()));
        let _ = writeln!(out, "{}", join(&mut row_deg.iter().copied()));
        for i in 0..self.n_vars {
            let mut checks: Vec<usize> = self
                .var_edges(i)
                .iter()
                .map(|&e| self.check_of_edge(e) + 1)
                .collect();
            checks.resize(max_col, 0);
            let _ = writeln!(out, "{}", join(&mut checks.into_iter()));
        }
        for j in 0..m {
            let mut vars: Vec<usize> = self.check(j).iter().map(|&i| i + 1).collect();
            vars.resize(max_row, 0);
            let _ = writeln!(out, "{}", join(&mut vars.into_iter()));
        }
        out
    }

    fn check_of_edge(&self, e: usize) -> usize {
        // check_ptr is sorted; the owning check is the last start <= e.
        self.check_ptr.partition_point(|&p| p <= e) - 1
    }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    /// Next non-blank line as parsed integers, with its 1-based number.
    fn next_numbers(&mut self) -> Result<Option<(usize, Vec<usize>)>> {
        for (idx, line) in self.inner.by_ref() {
            let line_no = idx + 1;
            self.last = line_no;
            if line.trim().is_empty() {
                continue;
            }
            let nums = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<usize>().map_err(|_| Error::Alist {
                        line: line_no,
                        kind: AlistErrorKind::Syntax(format!("'{tok}' is not a non-negative integer")),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(Some((line_no, nums)));
        }
        Ok(None)
    }

    fn expect_numbers(&mut self, what: &str) -> Result<(usize, Vec<usize>)> {
        self.next_numbers()?.ok_or_else(|| Error::Alist {
            line: self.last + 1,
            kind: AlistErrorKind::DimensionMismatch(format!("unexpected end of input, expected {what}")),
        })
    }
}

fn alist_err(line: usize, kind: AlistErrorKind) -> Error {
    Error::Alist { line, kind }
}

/// Parses the standard alist layout (1-based indices, zero padding allowed).
///
/// The column and row sections must describe the same matrix.
pub fn parse_alist(text: &str) -> Result<CodeModel> {
    let mut lines = Lines::new(text);

    let (l, dims) = lines.expect_numbers("'N M'")?;
    let [n, m] = dims[..] else {
        return Err(alist_err(
            l,
            AlistErrorKind::DimensionMismatch(format!("expected 2 numbers, found {}", dims.len())),
        ));
    };
    let (l, maxes) = lines.expect_numbers("maximum degrees")?;
    let [max_col, max_row] = maxes[..] else {
        return Err(alist_err(
            l,
            AlistErrorKind::DimensionMismatch(format!("expected 2 numbers, found {}", maxes.len())),
        ));
    };

    let (l, col_deg) = lines.expect_numbers("column degrees")?;
    if col_deg.len() != n {
        return Err(alist_err(
            l,
            AlistErrorKind::DimensionMismatch(format!("{} column degrees for N = {n}", col_deg.len())),
        ));
    }
    if let Some(&d) = col_deg.iter().find(|&&d| d > max_col) {
        return Err(alist_err(
            l,
            AlistErrorKind::DimensionMismatch(format!("column degree {d} exceeds maximum {max_col}")),
        ));
    }
    let (l, row_deg) = lines.expect_numbers("row degrees")?;
    if row_deg.len() != m {
        return Err(alist_err(
            l,
            AlistErrorKind::DimensionMismatch(format!("{} row degrees for M = {m}", row_deg.len())),
        ));
    }
    if let Some(&d) = row_deg.iter().find(|&&d| d > max_row) {
        return Err(alist_err(
            l,
            AlistErrorKind::DimensionMismatch(format!("row degree {d} exceeds maximum {max_row}")),
        ));
    }

    let mut read_section = |count: usize, bound: usize, degrees: &[usize], what: &str| {
        let mut lists = Vec::with_capacity(count);
        for (k, &deg) in degrees.iter().enumerate().take(count) {
            let (l, nums) = lines.expect_numbers(what)?;
            let mut idx = Vec::with_capacity(deg);
            for x in nums {
                if x == 0 {
                    continue;
                }
                if x > bound {
                    return Err(alist_err(l, AlistErrorKind::IndexOutOfRange { index: x, bound }));
                }
                idx.push(x - 1);
            }
            if idx.len() != deg {
                return Err(alist_err(
                    l,
                    AlistErrorKind::Inconsistent(format!(
                        "{what} {} lists {} entries but its degree is {deg}",
                        k + 1,
                        idx.len()
                    )),
                ));
            }
            let mut sorted = idx.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(alist_err(
                    l,
                    AlistErrorKind::Inconsistent(format!("{what} {} repeats an index", k + 1)),
                ));
            }
            lists.push((l, sorted));
        }
        Ok::<_, Error>(lists)
    };

    let cols = read_section(n, m, &col_deg, "column")?;
    let rows = read_section(m, n, &row_deg, "row")?;

    if let Some((l, _)) = lines.next_numbers()? {
        return Err(alist_err(
            l,
            AlistErrorKind::Inconsistent(format!("extra index section beyond the declared {m} rows")),
        ));
    }

    // Cross-validate: every (row, col) pair from the columns must appear in
    // the rows and vice versa. Equal totals plus one-way inclusion suffice.
    let col_total: usize = col_deg.iter().sum();
    let row_total: usize = row_deg.iter().sum();
    if col_total != row_total {
        return Err(alist_err(
            rows.last().map_or(lines.last, |r| r.0),
            AlistErrorKind::Inconsistent(format!(
                "column section has {col_total} ones, row section has {row_total}"
            )),
        ));
    }
    for (i, (l, checks)) in cols.iter().enumerate() {
        for &j in checks {
            if rows[j].1.binary_search(&i).is_err() {
                return Err(alist_err(
                    *l,
                    AlistErrorKind::Inconsistent(format!(
                        "column {} lists row {} but that row does not list the column",
                        i + 1,
                        j + 1
                    )),
                ));
            }
        }
    }

    for (j, (l, row)) in rows.iter().enumerate() {
        if row.len() < 2 {
            return Err(alist_err(
                *l,
                AlistErrorKind::DegenerateCheck {
                    check: j + 1,
                    degree: row.len(),
                },
            ));
        }
    }

    CodeModel::from_check_rows(n, rows.into_iter().map(|(_, r)| r).collect())
}
