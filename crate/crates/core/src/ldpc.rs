//! GF(2) core: packed bit vectors, Gallager parity-check matrices built from a
//! 32-byte seed, and syndrome evaluation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hashvector::{keccak256, Digest256};

/// Fixed-length binary vector, packed 64 bits per word.
///
/// Bit `i` lives in word `i / 64` at bit position `i % 64`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut v = Self::zeros(0);
        for b in bits {
            if v.len.is_multiple_of(64) {
                v.words.push(0);
            }
            v.len += 1;
            v.set(v.len - 1, b);
        }
        v
    }

    /// Unit vector `e_j` of length `len`.
    pub fn unit(len: usize, j: usize) -> Self {
        let mut v = Self::zeros(len);
        v.set(j, true);
        v
    }

    /// Takes the first `len` bits of `bytes`, most significant bit of each byte first.
    pub fn from_bytes_msb(bytes: &[u8], len: usize) -> Self {
        assert!(len <= bytes.len() * 8, "not enough bytes for {len} bits");
        let mut v = Self::zeros(len);
        for i in 0..len {
            if bytes[i / 8] >> (7 - i % 8) & 1 == 1 {
                v.set(i, true);
            }
        }
        v
    }

    /// Packs bits MSB-first into `ceil(len / 8)` bytes, zero-padding the tail.
    pub fn to_bytes_msb(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.len.div_ceil(8)];
        for i in self.ones() {
            out[i / 8] |= 0x80 >> (i % 8);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    /// Hamming weight.
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn xor(&self, other: &Self) -> Result<Self> {
        if self.len != other.len {
            return Err(Error::Dimension {
                expected: self.len,
                actual: other.len,
            });
        }
        Ok(Self {
            len: self.len,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a ^ b)
                .collect(),
        })
    }

    pub fn hamming_distance(&self, other: &Self) -> usize {
        assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// Indices of set bits, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitVector::from_bits)
    }
}

/// Code length and Gallager weights of a regular LDPC code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LdpcParams {
    pub n: usize,
    pub wc: usize,
    pub wr: usize,
}

impl LdpcParams {
    pub fn new(n: usize, wc: usize, wr: usize) -> Result<Self> {
        let p = Self { n, wc, wr };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason| {
            Err(Error::InvalidParams {
                n: self.n,
                wc: self.wc,
                wr: self.wr,
                reason,
            })
        };
        if self.n == 0 {
            return fail("code length must be positive");
        }
        if self.wc < 2 {
            return fail("column weight must be at least 2");
        }
        if self.wr == 0 || !self.n.is_multiple_of(self.wr) {
            return fail("row weight must divide the code length");
        }
        if self.wr <= self.wc {
            return fail("row weight must exceed column weight (m < n)");
        }
        Ok(())
    }

    /// Number of parity checks, `n * wc / wr`.
    pub fn m(&self) -> usize {
        self.n * self.wc / self.wr
    }

    /// Rows per band, `n / wr`.
    pub fn band_rows(&self) -> usize {
        self.n / self.wr
    }
}

impl fmt::Display for LdpcParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.n, self.wc, self.wr)
    }
}

/// Expandable byte stream `Keccak256(seed || i_be64)` for `i = 0, 1, ...`.
#[derive(Debug, Clone)]
pub struct SeedStream {
    seed: Digest256,
    counter: u64,
    block: [u8; 32],
    pos: usize,
}

impl SeedStream {
    pub fn new(seed: &Digest256) -> Self {
        Self {
            seed: *seed,
            counter: 0,
            block: [0; 32],
            pos: 32,
        }
    }

    pub fn next_byte(&mut self) -> u8 {
        if self.pos == 32 {
            let mut input = [0u8; 40];
            input[..32].copy_from_slice(self.seed.as_bytes());
            input[32..].copy_from_slice(&self.counter.to_be_bytes());
            self.block = *keccak256(&input).as_bytes();
            self.counter += 1;
            self.pos = 0;
        }
        let b = self.block[self.pos];
        self.pos += 1;
        b
    }

    pub fn next_u32(&mut self) -> u32 {
        u32::from_be_bytes([
            self.next_byte(),
            self.next_byte(),
            self.next_byte(),
            self.next_byte(),
        ])
    }

    /// Uniform draw from `0..k` by rejection of words `>= floor(2^32 / k) * k`.
    pub fn below(&mut self, k: u32) -> u32 {
        assert!(k > 0);
        let limit = (1u64 << 32) / k as u64 * k as u64;
        loop {
            let v = self.next_u32() as u64;
            if v < limit {
                return (v % k as u64) as u32;
            }
        }
    }

    /// Fisher-Yates shuffle of `0..n`, swapping position `i` (descending from
    /// `n - 1`) with a draw from `0..=i`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.below(i as u32 + 1) as usize;
            perm.swap(i, j);
        }
        perm
    }
}

/// Sparse binary `m x n` matrix stored as ascending column lists per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityCheckMatrix {
    params: LdpcParams,
    rows: Vec<Vec<usize>>,
}

impl ParityCheckMatrix {
    /// Builds the matrix from explicit rows, checking every structural invariant.
    pub fn from_rows(params: LdpcParams, rows: Vec<Vec<usize>>) -> Result<Self> {
        params.validate()?;
        if rows.len() != params.m() {
            return Err(Error::Dimension {
                expected: params.m(),
                actual: rows.len(),
            });
        }
        let mut col_weight = vec![0usize; params.n];
        for row in &rows {
            if row.len() != params.wr {
                return Err(Error::Parse(format!(
                    "row has {} entries, expected {}",
                    row.len(),
                    params.wr
                )));
            }
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Parse(
                    "row indices must be strictly ascending".into(),
                ));
            }
            for &c in row {
                if c >= params.n {
                    return Err(Error::Parse(format!("column index {c} out of range")));
                }
                col_weight[c] += 1;
            }
        }
        if col_weight.iter().any(|&w| w != params.wc) {
            return Err(Error::Parse(format!(
                "every column must appear in exactly {} rows",
                params.wc
            )));
        }
        Ok(Self { params, rows })
    }

    pub fn params(&self) -> LdpcParams {
        self.params
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.rows[i]
    }

    /// Rows containing column `j`, ascending.
    pub fn column(&self, j: usize) -> Vec<usize> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.binary_search(&j).is_ok())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i].binary_search(&j).is_ok()
    }

    /// Debug dump: header line `n wc wr m`, then one line of ascending column indices per row.
    pub fn to_dump(&self) -> String {
        let p = self.params;
        let mut s = format!("{} {} {} {}\n", p.n, p.wc, p.wr, p.m());
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_dump(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header: Vec<usize> = lines
            .next()
            .ok_or_else(|| Error::Parse("empty dump".into()))?
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::Parse(format!("bad header token {t:?}")))
            })
            .collect::<Result<_>>()?;
        let [n, wc, wr, m] = header[..] else {
            return Err(Error::Parse("header must be `n wc wr m`".into()));
        };
        let params = LdpcParams::new(n, wc, wr)?;
        if params.m() != m {
            return Err(Error::Parse(format!(
                "header m={m} inconsistent with n, wc, wr"
            )));
        }
        let rows = lines
            .map(|l| {
                l.split_whitespace()
                    .map(|t| {
                        t.parse()
                            .map_err(|_| Error::Parse(format!("bad index {t:?}")))
                    })
                    .collect::<Result<Vec<usize>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(params, rows)
    }
}

/// Gallager construction: band 0 is the canonical staircase, each further band
/// is a seeded column permutation of it.
pub fn generate_pcm(seed: &Digest256, params: LdpcParams) -> Result<ParityCheckMatrix> {
    params.validate()?;
    let LdpcParams { n, wc, wr } = params;
    let band_rows = params.band_rows();
    let mut rows = Vec::with_capacity(params.m());
    for i in 0..band_rows {
        rows.push((i * wr..(i + 1) * wr).collect::<Vec<_>>());
    }
    let mut stream = SeedStream::new(seed);
    for _band in 1..wc {
        let perm = stream.permutation(n);
        for i in 0..band_rows {
            let mut row: Vec<usize> = perm[i * wr..(i + 1) * wr].to_vec();
            row.sort_unstable();
            rows.push(row);
        }
    }
    Ok(ParityCheckMatrix { params, rows })
}

/// `H c` over GF(2).
pub fn syndrome(h: &ParityCheckMatrix, c: &BitVector) -> Result<BitVector> {
    if c.len() != h.n() {
        return Err(Error::Dimension {
            expected: h.n(),
            actual: c.len(),
        });
    }
    let mut s = BitVector::zeros(h.m());
    for (i, row) in h.rows.iter().enumerate() {
        let parity = row.iter().fold(false, |acc, &j| acc ^ c.get(j));
        if parity {
            s.set(i, true);
        }
    }
    Ok(s)
}

pub fn is_codeword(h: &ParityCheckMatrix, c: &BitVector) -> Result<bool> {
    if c.len() != h.n() {
        return Err(Error::Dimension {
            expected: h.n(),
            actual: c.len(),
        });
    }
    Ok(h.rows
        .iter()
        .all(|row| !row.iter().fold(false, |acc, &j| acc ^ c.get(j))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_seed() -> Digest256 {
        Digest256::from([0u8; 32])
    }

    #[test]
    fn params_validation() {
        assert!(LdpcParams::new(8, 2, 4).is_ok());
        assert!(LdpcParams::new(24, 3, 6).is_ok());
        assert!(matches!(
            LdpcParams::new(10, 2, 4),
            Err(Error::InvalidParams { .. })
        ));
        assert!(matches!(
            LdpcParams::new(8, 4, 4),
            Err(Error::InvalidParams { .. })
        ));
        assert!(matches!(
            LdpcParams::new(8, 1, 4),
            Err(Error::InvalidParams { .. })
        ));
        assert!(matches!(
            LdpcParams::new(0, 2, 4),
            Err(Error::InvalidParams { .. })
        ));
        assert_eq!(LdpcParams::new(24, 3, 6).unwrap().m(), 12);
    }

    #[test]
    fn base_band_is_canonical() {
        let h = generate_pcm(&zero_seed(), LdpcParams::new(8, 2, 4).unwrap()).unwrap();
        assert_eq!(h.m(), 4);
        assert_eq!(h.row(0), &[0, 1, 2, 3]);
        assert_eq!(h.row(1), &[4, 5, 6, 7]);
        let other = generate_pcm(&keccak256(b"x"), h.params()).unwrap();
        assert_eq!(&other.rows()[..2], &h.rows()[..2]);
    }

    #[test]
    fn generation_is_deterministic() {
        let p = LdpcParams::new(36, 3, 4).unwrap();
        let seed = keccak256(b"seed");
        assert_eq!(
            generate_pcm(&seed, p).unwrap(),
            generate_pcm(&seed, p).unwrap()
        );
    }

    #[test]
    fn weights_are_exact() {
        for (n, wc, wr) in [(8, 2, 4), (24, 3, 6), (36, 3, 4), (120, 4, 8)] {
            let p = LdpcParams::new(n, wc, wr).unwrap();
            let h = generate_pcm(&keccak256(&[n as u8]), p).unwrap();
            assert!(h.rows().iter().all(|r| r.len() == wr));
            for j in 0..n {
                assert_eq!(h.column(j).len(), wc, "column {j} of {p}");
            }
            // every band covers each column exactly once
            for band in h.rows().chunks(p.band_rows()) {
                let mut cols: Vec<usize> = band.iter().flatten().copied().collect();
                cols.sort_unstable();
                assert_eq!(cols, (0..n).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn syndrome_edge_cases() {
        let h = generate_pcm(&keccak256(b"genesis"), LdpcParams::new(24, 3, 6).unwrap()).unwrap();
        assert!(syndrome(&h, &BitVector::zeros(24)).unwrap().is_zero());
        for j in 0..24 {
            let s = syndrome(&h, &BitVector::unit(24, j)).unwrap();
            assert_eq!(s.ones().collect::<Vec<_>>(), h.column(j));
            assert!(!is_codeword(&h, &BitVector::unit(24, j)).unwrap());
        }
        assert!(is_codeword(&h, &BitVector::zeros(24)).unwrap());
        assert!(matches!(
            syndrome(&h, &BitVector::zeros(23)),
            Err(Error::Dimension {
                expected: 24,
                actual: 23
            })
        ));
        assert!(is_codeword(&h, &BitVector::zeros(25)).is_err());
    }

    #[test]
    fn dump_round_trip() {
        let h = generate_pcm(&keccak256(b"dump"), LdpcParams::new(12, 3, 4).unwrap()).unwrap();
        let text = h.to_dump();
        assert!(text.starts_with("12 3 4 9\n"));
        assert_eq!(ParityCheckMatrix::from_dump(&text).unwrap(), h);
        assert!(ParityCheckMatrix::from_dump("12 3 4 8\n").is_err());
    }

    #[test]
    fn stream_rejection_is_unbiased_at_the_boundary() {
        let mut s = SeedStream::new(&zero_seed());
        for _ in 0..1000 {
            assert!(s.below(3) < 3);
        }
        assert_eq!(s.below(1), 0);
    }

    #[test]
    fn bit_vector_basics() {
        let v: BitVector = "10110".parse().unwrap();
        assert_eq!(v.len(), 5);
        assert_eq!(v.weight(), 3);
        assert_eq!(v.to_bytes_msb(), vec![0b1011_0000]);
        assert_eq!(BitVector::from_bytes_msb(&[0b1011_0000], 5), v);
        assert_eq!(v.to_string(), "10110");
        assert!("10x".parse::<BitVector>().is_err());
        let w = BitVector::unit(5, 0);
        assert_eq!(v.xor(&w).unwrap().to_string(), "00110");
        assert!(v.xor(&BitVector::zeros(4)).is_err());
    }

    #[test]
    #[should_panic]
    fn out_of_range_bit_panics() {
        BitVector::zeros(3).get(3);
    }
}
