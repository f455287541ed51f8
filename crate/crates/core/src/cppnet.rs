//! CPP-net: a `d → ⌈d/2⌉ → 1` perceptron predicting the projection shift.
//!
//! Weights are restricted to `{0, ±1, ±2, …, ±128}` so every product is a
//! sign flip or a binary shift; biases stay full precision. Both layers use
//! [`sin_act`].

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::projection::OpCount;

/// Largest shift exponent a weight may use.
pub const MAX_EXPONENT: u32 = 7;

const MAGIC: &str = "cppnet-v1";

/// `(sin(πx/2) + 1) / 2` on `[-1, 1]`, saturating to 0 and 1 outside.
pub fn sin_act(x: f64) -> f64 {
    if x < -1.0 {
        0.0
    } else if x > 1.0 {
        1.0
    } else {
        0.5 * ((FRAC_PI_2 * x).sin() + 1.0)
    }
}

/// A weight in `{0} ∪ {±2^k : 0 ≤ k ≤ 7}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QWeight(i32);

impl QWeight {
    pub const ZERO: QWeight = QWeight(0);

    pub fn new(value: i32) -> Option<QWeight> {
        let mag = value.unsigned_abs();
        if mag == 0 || (mag.is_power_of_two() && mag.trailing_zeros() <= MAX_EXPONENT) {
            Some(QWeight(value))
        } else {
            None
        }
    }

    pub fn value(self) -> i32 {
        self.0
    }

    /// `w·x` using only a sign flip and an exponent shift.
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        let mag = self.0.unsigned_abs();
        let scaled = match mag {
            0 => return 0.0,
            1 => x,
            _ => scale_pow2(x, mag.trailing_zeros()),
        };
        if self.0 < 0 {
            -scaled
        } else {
            scaled
        }
    }

    /// Non-zero weights other than ±1 cost one shift.
    pub fn is_shift(self) -> bool {
        self.0.unsigned_abs() > 1
    }
}

/// Exact `x · 2^k` by adding to the binary exponent.
#[inline]
fn scale_pow2(x: f64, k: u32) -> f64 {
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as u32;
    if exp == 0 || exp + k >= 0x7ff {
        // zero, subnormal, inf/nan or overflow: let the FPU handle it
        return x * f64::from(1u32 << k);
    }
    f64::from_bits(bits + (u64::from(k) << 52))
}

/// How [`sin_act`] is evaluated inside the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Direct,
    /// Nearest-entry table with `2^bits` samples over `[-1, 1]`.
    Table { bits: u8 },
}

/// Subnetwork for one check degree.
#[derive(Debug, Clone, PartialEq)]
pub struct Subnet {
    degree: usize,
    /// Row-major `hidden × degree`.
    wa: Vec<QWeight>,
    ba: Vec<f64>,
    wb: Vec<QWeight>,
    bb: f64,
    table: Option<Vec<f64>>,
}

/// Hidden width for degree `d`.
pub fn hidden_size(d: usize) -> usize {
    d.div_ceil(2)
}

impl Subnet {
    pub fn new(degree: usize, wa: Vec<QWeight>, ba: Vec<f64>, wb: Vec<QWeight>, bb: f64) -> Result<Self> {
        let h = hidden_size(degree);
        if degree < 2 {
            return Err(Error::Config(format!("subnetwork degree {degree} below 2")));
        }
        if wa.len() != h * degree || ba.len() != h || wb.len() != h {
            return Err(Error::Config(format!(
                "subnetwork for d = {degree} needs Wa {h}x{degree}, ba {h}, wb {h}"
            )));
        }
        if ba.iter().chain(std::iter::once(&bb)).any(|b| !b.is_finite()) {
            return Err(Error::Config("subnetwork bias is not finite".into()));
        }
        Ok(Subnet {
            degree,
            wa,
            ba,
            wb,
            bb,
            table: None,
        })
    }

    /// All-zero weights and biases.
    pub fn zeros(degree: usize) -> Self {
        let h = hidden_size(degree);
        Subnet::new(
            degree,
            vec![QWeight::ZERO; h * degree],
            vec![0.0; h],
            vec![QWeight::ZERO; h],
            0.0,
        )
        .expect("zero subnet is well formed")
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn hidden(&self) -> usize {
        self.ba.len()
    }

    pub fn wa(&self) -> &[QWeight] {
        &self.wa
    }

    pub fn ba(&self) -> &[f64] {
        &self.ba
    }

    pub fn wb(&self) -> &[QWeight] {
        &self.wb
    }

    pub fn bb(&self) -> f64 {
        self.bb
    }

    pub fn set_biases(&mut self, ba: Vec<f64>, bb: f64) -> Result<()> {
        if ba.len() != self.hidden() {
            return Err(Error::LengthMismatch {
                expected: self.hidden(),
                got: ba.len(),
            });
        }
        self.ba = ba;
        self.bb = bb;
        Ok(())
    }

    fn set_activation(&mut self, activation: Activation) {
        self.table = match activation {
            Activation::Direct => None,
            Activation::Table { bits } => {
                let n = 1usize << bits;
                Some(
                    (0..n)
                        .map(|k| sin_act(-1.0 + 2.0 * k as f64 / (n - 1) as f64))
                        .collect(),
                )
            }
        };
    }

    #[inline]
    fn act(&self, x: f64) -> f64 {
        match &self.table {
            None => sin_act(x),
            Some(t) => {
                if x <= -1.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    let n = t.len() - 1;
                    let k = ((x + 1.0) * 0.5 * n as f64).round() as usize;
                    t[k.min(n)]
                }
            }
        }
    }

    /// Shift-and-add inference.
    pub fn forward(&self, v: &[f64]) -> f64 {
        assert_eq!(v.len(), self.degree);
        let mut out = 0.0;
        for (row, (&b, &wo)) in self.wa.chunks_exact(self.degree).zip(self.ba.iter().zip(&self.wb)) {
            let mut acc = 0.0;
            for (&w, &x) in row.iter().zip(v) {
                if w.0 != 0 {
                    acc += w.apply(x);
                }
            }
            let hidden = self.act(acc + b);
            if wo.0 != 0 {
                out += wo.apply(hidden);
            }
        }
        self.act(out + self.bb)
    }

    /// Same network evaluated with ordinary floating-point products.
    pub fn forward_float(&self, v: &[f64]) -> f64 {
        assert_eq!(v.len(), self.degree);
        let mut out = 0.0;
        for (row, (&b, &wo)) in self.wa.chunks_exact(self.degree).zip(self.ba.iter().zip(&self.wb)) {
            let mut acc = 0.0;
            for (&w, &x) in row.iter().zip(v) {
                if w.0 != 0 {
                    acc += f64::from(w.0) * x;
                }
            }
            let hidden = self.act(acc + b);
            if wo.0 != 0 {
                out += f64::from(wo.0) * hidden;
            }
        }
        self.act(out + self.bb)
    }

    /// Operation count of one forward pass.
    ///
    /// Each weight of magnitude two or more is one (shift) multiply. A neuron
    /// with `n ≥ 1` non-zero inputs costs `n - 1` additions to combine them
    /// and one for its bias; activations are table lookups and free.
    pub fn forward_cost(&self) -> OpCount {
        let mut cost = OpCount::default();
        let mut neuron = |weights: &[QWeight]| {
            let nnz = weights.iter().filter(|w| w.0 != 0).count() as u64;
            cost.muls += weights.iter().filter(|w| w.is_shift()).count() as u64;
            cost.adds += nnz;
        };
        for row in self.wa.chunks_exact(self.degree) {
            neuron(row);
        }
        neuron(&self.wb);
        cost
    }
}

/// Per-degree collection of subnetworks.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CppNet {
    subnets: BTreeMap<usize, Subnet>,
}

impl CppNet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, subnet: Subnet) -> Option<Subnet> {
        self.subnets.insert(subnet.degree, subnet)
    }

    pub fn subnet(&self, d: usize) -> Result<&Subnet> {
        self.subnets
            .get(&d)
            .ok_or_else(|| Error::Config(format!("no CPP-net subnetwork for check degree {d}")))
    }

    pub fn degrees(&self) -> impl Iterator<Item = usize> + '_ {
        self.subnets.keys().copied()
    }

    pub fn forward(&self, v: &[f64]) -> Result<f64> {
        Ok(self.subnet(v.len())?.forward(v))
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        for s in self.subnets.values_mut() {
            s.set_activation(activation);
        }
        self
    }

    /// Parses a cppnet-v1 weight file.
    pub fn from_text(text: &str) -> Result<Self> {
        parse_weights(text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        parse_weights(&std::fs::read_to_string(path)?)
    }

    /// Renders the cppnet-v1 text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(MAGIC);
        out.push('\n');
        let join_w = |ws: &[QWeight]| ws.iter().map(|w| w.0.to_string()).collect::<Vec<_>>().join(" ");
        for (k, s) in self.subnets.values().enumerate() {
            if k > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "degree {}", s.degree);
            let _ = writeln!(out, "hidden {}", s.hidden());
            out.push_str("Wa\n");
            for row in s.wa.chunks_exact(s.degree) {
                let _ = writeln!(out, "{}", join_w(row));
            }
            out.push_str("ba\n");
            let _ = writeln!(
                out,
                "{}",
                s.ba.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(" ")
            );
            out.push_str("wb\n");
            let _ = writeln!(out, "{}", join_w(&s.wb));
            out.push_str("bb\n");
            let _ = writeln!(out, "{}", s.bb);
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

fn parse_weights(text: &str) -> Result<CppNet> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .peekable();
    let bad = |line: usize, msg: String| Error::Weights { line, msg };

    match lines.next() {
        Some((_, MAGIC)) => {}
        Some((line, other)) => return Err(bad(line, format!("bad magic '{other}', expected '{MAGIC}'"))),
        None => return Err(bad(1, "empty weight file".into())),
    }

    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| bad(text.lines().count() + 1, format!("unexpected end of file, expected {what}")))
    };

    let mut net = CppNet::new();
    loop {
        let (line, head) = match next("degree") {
            Ok(x) => x,
            Err(_) if !net.subnets.is_empty() => break,
            Err(e) => return Err(e),
        };
        let degree = keyword_value(line, head, "degree")?;
        let (line, head) = next("hidden")?;
        let hidden = keyword_value(line, head, "hidden")?;
        if hidden != hidden_size(degree) {
            return Err(bad(
                line,
                format!("dimension mismatch: hidden {hidden} for degree {degree}, expected {}", hidden_size(degree)),
            ));
        }
        expect_keyword(next("Wa")?, "Wa")?;
        let mut wa = Vec::with_capacity(hidden * degree);
        for _ in 0..hidden {
            let (line, row) = next("Wa row")?;
            wa.extend(parse_weight_row(line, row, degree)?);
        }
        expect_keyword(next("ba")?, "ba")?;
        let (line, row) = next("ba values")?;
        let ba = parse_real_row(line, row, hidden)?;
        expect_keyword(next("wb")?, "wb")?;
        let (line, row) = next("wb values")?;
        let wb = parse_weight_row(line, row, hidden)?;
        expect_keyword(next("bb")?, "bb")?;
        let (line, row) = next("bb value")?;
        let bb = parse_real_row(line, row, 1)?[0];

        let subnet = Subnet::new(degree, wa, ba, wb, bb).map_err(|e| bad(line, e.to_string()))?;
        if net.insert(subnet).is_some() {
            return Err(bad(line, format!("duplicate block for degree {degree}")));
        }
    }
    Ok(net)
}

fn keyword_value(line: usize, text: &str, key: &str) -> Result<usize> {
    let mut parts = text.split_whitespace();
    match (parts.next(), parts.next(), parts.next()) {
        (Some(k), Some(v), None) if k == key => v.parse().map_err(|_| Error::Weights {
            line,
            msg: format!("'{v}' is not a valid {key}"),
        }),
        _ => Err(Error::Weights {
            line,
            msg: format!("expected '{key} <n>', found '{text}'"),
        }),
    }
}

fn expect_keyword((line, text): (usize, &str), key: &str) -> Result<()> {
    if text == key {
        Ok(())
    } else {
        Err(Error::Weights {
            line,
            msg: format!("expected '{key}', found '{text}'"),
        })
    }
}

fn parse_weight_row(line: usize, text: &str, len: usize) -> Result<Vec<QWeight>> {
    let ws = text
        .split_whitespace()
        .map(|tok| {
            let value: i32 = tok.parse().map_err(|_| Error::Weights {
                line,
                msg: format!("'{tok}' is not an integer weight"),
            })?;
            QWeight::new(value).ok_or_else(|| Error::Weights {
                line,
                msg: format!("weight {value} not in {{0, ±2^k}} with k <= {MAX_EXPONENT}"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if ws.len() != len {
        return Err(Error::Weights {
            line,
            msg: format!("dimension mismatch: {} entries, expected {len}", ws.len()),
        });
    }
    Ok(ws)
}

fn parse_real_row(line: usize, text: &str, len: usize) -> Result<Vec<f64>> {
    let xs = text
        .split_whitespace()
        .map(|tok| {
            tok.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| Error::Weights {
                line,
                msg: format!("'{tok}' is not a finite real"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if xs.len() != len {
        return Err(Error::Weights {
            line,
            msg: format!("dimension mismatch: {} entries, expected {len}", xs.len()),
        });
    }
    Ok(xs)
}

/// One training example: a projection input, its converged shift and the
/// number of loop passes the iterative projector needed.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSample {
    pub features: Vec<f64>,
    pub label: f64,
    pub k_iters: u32,
}

impl ProjectionSample {
    pub fn degree(&self) -> usize {
        self.features.len()
    }
}

/// Minimum loop count for a stored sample.
pub const MIN_SAMPLE_ITERS: u32 = 2;

/// File name used for the samples of degree `d`.
pub fn sample_file_name(d: usize) -> String {
    format!("samples_d{d}.csv")
}

/// Writes `samples` (all of degree `degree`) as CSV with header
/// `v1,...,v<d>,s_hat,k_iters`.
pub fn write_samples<W: Write>(writer: W, degree: usize, samples: &[ProjectionSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (1..=degree).map(|i| format!("v{i}")).collect();
    header.push("s_hat".into());
    header.push("k_iters".into());
    w.write_record(&header)?;
    let mut record = Vec::with_capacity(degree + 2);
    for (n, s) in samples.iter().enumerate() {
        if s.degree() != degree {
            return Err(Error::Samples(format!(
                "sample {n} has degree {}, file degree is {degree}",
                s.degree()
            )));
        }
        if s.k_iters < MIN_SAMPLE_ITERS {
            return Err(Error::Samples(format!(
                "sample {n} has k_iters = {}, samples need at least {MIN_SAMPLE_ITERS}",
                s.k_iters
            )));
        }
        record.clear();
        record.extend(s.features.iter().map(|x| x.to_string()));
        record.push(s.label.to_string());
        record.push(s.k_iters.to_string());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a sample CSV, returning its degree and rows.
pub fn read_samples<R: Read>(reader: R) -> Result<(usize, Vec<ProjectionSample>)> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    let cols = header.len();
    if cols < 4 {
        return Err(Error::Samples(format!("header has {cols} columns, need at least 4")));
    }
    let degree = cols - 2;
    for (i, name) in header.iter().enumerate() {
        let expected = match i {
            i if i < degree => format!("v{}", i + 1),
            i if i == degree => "s_hat".into(),
            _ => "k_iters".into(),
        };
        if name != expected {
            return Err(Error::Samples(format!("header column {} is '{name}', expected '{expected}'", i + 1)));
        }
    }
    let mut samples = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = n + 2;
        let real = |k: usize| -> Result<f64> {
            rec[k]
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Samples(format!("row {row}: '{}' is not a finite real", &rec[k])))
        };
        let features = (0..degree).map(real).collect::<Result<Vec<_>>>()?;
        let label = real(degree)?;
        let k_iters: u32 = rec[degree + 1]
            .parse()
            .map_err(|_| Error::Samples(format!("row {row}: bad k_iters '{}'", &rec[degree + 1])))?;
        if k_iters < MIN_SAMPLE_ITERS {
            return Err(Error::Samples(format!("row {row}: k_iters = {k_iters} below {MIN_SAMPLE_ITERS}")));
        }
        samples.push(ProjectionSample {
            features,
            label,
            k_iters,
        });
    }
    Ok((degree, samples))
}

/// Writes one `samples_d<d>.csv` per degree present in `samples`.
pub fn write_sample_files(dir: &Path, samples: &[ProjectionSample]) -> Result<Vec<PathBuf>> {
    let mut by_degree: BTreeMap<usize, Vec<ProjectionSample>> = BTreeMap::new();
    for s in samples {
        by_degree.entry(s.degree()).or_default().push(s.clone());
    }
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for (d, group) in by_degree {
        let path = dir.join(sample_file_name(d));
        let file = std::io::BufWriter::new(std::fs::File::create(&path)?);
        write_samples(file, d, &group)?;
        paths.push(path);
    }
    Ok(paths)
}

pub fn read_sample_file(path: &Path) -> Result<(usize, Vec<ProjectionSample>)> {
    read_samples(std::io::BufReader::new(std::fs::File::open(path)?))
}
