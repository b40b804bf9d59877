//! Zigzag mapping and order-k Exp-Golomb coding.
//!
//! A coded plane is one byte holding `k` followed by the MSB-first bit
//! payload, zero-padded to a whole byte.

use crate::error::{Result, SlfError};

pub const MAX_ORDER: u8 = 31;

pub fn zigzag(v: i64) -> u64 {
    ((v << 1) ^ (v >> 63)) as u64
}

pub fn unzigzag(u: u64) -> i64 {
    ((u >> 1) as i64) ^ -((u & 1) as i64)
}

/// Bit length of the order-`k` Exp-Golomb codeword for `u`.
pub fn codeword_len(u: u64, k: u8) -> u64 {
    let x = u as u128 + (1u128 << k);
    let n = 128 - x.leading_zeros() as u64;
    2 * n - 1 - k as u64
}

/// The order in `0..=31` with the fewest total bits; ties go to the smaller order.
pub fn best_order(symbols: &[u64]) -> u8 {
    (0..=MAX_ORDER)
        .min_by_key(|&k| symbols.iter().map(|&u| codeword_len(u, k)).sum::<u64>())
        .expect("non-empty range")
}

#[derive(Debug, Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    used: u32,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_bit(&mut self, bit: bool) {
        if self.used == 0 {
            self.bytes.push(0);
        }
        if bit {
            *self.bytes.last_mut().expect("byte pushed") |= 0x80 >> self.used;
        }
        self.used = (self.used + 1) % 8;
    }

    /// Writes the low `n` bits of `value`, most significant first.
    pub fn push_bits(&mut self, value: u128, n: u32) {
        for i in (0..n).rev() {
            self.push_bit((value >> i) & 1 == 1);
        }
    }

    pub fn finish(self) -> Vec<u8> {
        self.bytes
    }
}

#[derive(Debug)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub fn read_bit(&mut self) -> Result<bool> {
        let byte = self
            .bytes
            .get(self.pos / 8)
            .ok_or_else(|| SlfError::corrupt("bit payload truncated"))?;
        let bit = byte & (0x80 >> (self.pos % 8)) != 0;
        self.pos += 1;
        Ok(bit)
    }

    pub fn read_bits(&mut self, n: u32) -> Result<u128> {
        let mut v = 0u128;
        for _ in 0..n {
            v = (v << 1) | self.read_bit()? as u128;
        }
        Ok(v)
    }

    pub fn bits_read(&self) -> usize {
        self.pos
    }
}

pub fn write_exp_golomb(w: &mut BitWriter, u: u64, k: u8) {
    let x = u as u128 + (1u128 << k);
    let n = 128 - x.leading_zeros();
    w.push_bits(0, n - 1 - k as u32);
    w.push_bits(x, n);
}

pub fn read_exp_golomb(r: &mut BitReader, k: u8) -> Result<u64> {
    let mut zeros = 0u32;
    while !r.read_bit()? {
        zeros += 1;
        if zeros + k as u32 >= 64 {
            return Err(SlfError::corrupt("exp-golomb prefix too long"));
        }
    }
    let rest = r.read_bits(zeros + k as u32)?;
    let x = (1u128 << (zeros + k as u32)) | rest;
    let u = x - (1u128 << k);
    u64::try_from(u).map_err(|_| SlfError::corrupt("exp-golomb value overflows"))
}

/// A coded plane: chosen order and the padded payload (without the order byte).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedPlane {
    pub k: u8,
    pub payload: Vec<u8>,
}

impl CodedPlane {
    pub fn encode(levels: &[i64]) -> Self {
        let symbols: Vec<u64> = levels.iter().map(|&v| zigzag(v)).collect();
        let k = best_order(&symbols);
        let mut w = BitWriter::new();
        for &u in &symbols {
            write_exp_golomb(&mut w, u, k);
        }
        Self { k, payload: w.finish() }
    }

    pub fn decode(&self, count: usize) -> Result<Vec<i64>> {
        if self.k > MAX_ORDER {
            return Err(SlfError::corrupt(format!("exp-golomb order {} above {MAX_ORDER}", self.k)));
        }
        let mut r = BitReader::new(&self.payload);
        let levels = (0..count)
            .map(|_| read_exp_golomb(&mut r, self.k).map(unzigzag))
            .collect::<Result<Vec<_>>>()?;
        if r.bits_read().div_ceil(8) != self.payload.len() {
            return Err(SlfError::corrupt("trailing bytes after plane payload"));
        }
        Ok(levels)
    }
}

/// Order byte followed by the payload.
pub fn entropy_encode(levels: &[i64]) -> Vec<u8> {
    let plane = CodedPlane::encode(levels);
    let mut out = Vec::with_capacity(plane.payload.len() + 1);
    out.push(plane.k);
    out.extend_from_slice(&plane.payload);
    out
}

pub fn entropy_decode(bytes: &[u8], count: usize) -> Result<Vec<i64>> {
    let (&k, payload) = bytes
        .split_first()
        .ok_or_else(|| SlfError::corrupt("missing exp-golomb order byte"))?;
    CodedPlane {
        k,
        payload: payload.to_vec(),
    }
    .decode(count)
}
