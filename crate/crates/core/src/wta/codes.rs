use crate::error::{Error, Result};

/// Word layout for packed codes.
///
/// Each code takes `bits = ceil(log2 M)` bits. Codes fill 64-bit words
/// LSB-first, `floor(64 / bits)` per word; a code never straddles two words
/// and unused high bits are zero. A row of `L` codes spans
/// `ceil(L / codes_per_word)` words.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CodeLayout {
    l: usize,
    m: usize,
    bits: u32,
    per_word: usize,
    words_per_row: usize,
    /// Bit 0 of every field in a word.
    field_mask: u64,
}

impl CodeLayout {
    /// Version tag recorded in serialized dictionaries.
    pub const VERSION: u8 = 1;

    pub fn new(l: usize, m: usize) -> Result<Self> {
        if l == 0 || !(2..=1 << 16).contains(&m) {
            return Err(Error::InvalidParameter(format!(
                "code layout needs L >= 1 and 2 <= M <= 65536 (L = {l}, M = {m})"
            )));
        }
        let bits = usize::BITS - (m - 1).leading_zeros();
        let per_word = (64 / bits) as usize;
        let field_mask = (0..per_word).fold(0u64, |acc, i| acc | 1 << (i as u32 * bits));
        Ok(Self {
            l,
            m,
            bits,
            per_word,
            words_per_row: l.div_ceil(per_word),
            field_mask,
        })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn bits_per_code(&self) -> u32 {
        self.bits
    }

    pub fn codes_per_word(&self) -> usize {
        self.per_word
    }

    pub fn words_per_row(&self) -> usize {
        self.words_per_row
    }

    /// Bytes one packed row occupies in memory and on disk.
    pub fn bytes_per_frame(&self) -> usize {
        self.words_per_row * 8
    }

    /// Information content of a row, `bits * L`.
    pub fn payload_bits(&self) -> usize {
        self.bits as usize * self.l
    }

    /// Smallest whole-byte container for the payload bits.
    pub fn min_bytes(&self) -> usize {
        self.payload_bits().div_ceil(8)
    }

    pub fn pack_into(&self, codes: &[u16], out: &mut [u64]) -> Result<()> {
        if codes.len() != self.l {
            return Err(Error::DimensionMismatch {
                what: "code row",
                expected: self.l,
                got: codes.len(),
            });
        }
        debug_assert_eq!(out.len(), self.words_per_row);
        out.fill(0);
        for (i, &c) in codes.iter().enumerate() {
            if c as usize >= self.m {
                return Err(Error::CodeOutOfRange { code: c, m: self.m });
            }
            let shift = (i % self.per_word) as u32 * self.bits;
            out[i / self.per_word] |= (c as u64) << shift;
        }
        Ok(())
    }

    pub fn pack(&self, codes: &[u16]) -> Result<Vec<u64>> {
        let mut out = vec![0; self.words_per_row];
        self.pack_into(codes, &mut out)?;
        Ok(out)
    }

    pub fn unpack(&self, words: &[u64]) -> Vec<u16> {
        let mask = (1u64 << self.bits) - 1;
        (0..self.l)
            .map(|i| {
                let shift = (i % self.per_word) as u32 * self.bits;
                ((words[i / self.per_word] >> shift) & mask) as u16
            })
            .collect()
    }

    /// Check a packed row: codes below `M`, padding bits zero.
    fn validate_row(&self, words: &[u64]) -> Result<()> {
        for &c in &self.unpack(words) {
            if c as usize >= self.m {
                return Err(Error::CodeOutOfRange { code: c, m: self.m });
            }
        }
        let repacked = self.pack(&self.unpack(words))?;
        if repacked != words {
            return Err(Error::InvalidParameter(
                "nonzero padding bits in packed row".into(),
            ));
        }
        Ok(())
    }

    /// Number of positions at which two packed rows hold equal codes.
    #[inline]
    pub fn matches(&self, a: &[u64], b: &[u64]) -> u32 {
        let mut differing = 0;
        for (&x, &y) in a.iter().zip(b) {
            let diff = x ^ y;
            let mut folded = diff;
            for s in 1..self.bits {
                folded |= diff >> s;
            }
            differing += (folded & self.field_mask).count_ones();
        }
        self.l as u32 - differing
    }
}

/// Pack `codes` (each `< m`) into 64-bit words.
pub fn pack(codes: &[u16], m: usize) -> Result<Vec<u64>> {
    CodeLayout::new(codes.len(), m)?.pack(codes)
}

/// Inverse of [`pack`] for a row of `l` codes.
pub fn unpack(packed: &[u64], l: usize, m: usize) -> Result<Vec<u16>> {
    let layout = CodeLayout::new(l, m)?;
    if packed.len() != layout.words_per_row() {
        return Err(Error::DimensionMismatch {
            what: "packed row words",
            expected: layout.words_per_row(),
            got: packed.len(),
        });
    }
    Ok(layout.unpack(packed))
}

/// Borrowed packed row together with its layout.
#[derive(Clone, Copy, Debug)]
pub struct CodeRow<'a> {
    layout: CodeLayout,
    words: &'a [u64],
}

impl<'a> CodeRow<'a> {
    pub fn new(layout: CodeLayout, words: &'a [u64]) -> Result<Self> {
        if words.len() != layout.words_per_row() {
            return Err(Error::DimensionMismatch {
                what: "packed row words",
                expected: layout.words_per_row(),
                got: words.len(),
            });
        }
        Ok(Self { layout, words })
    }

    pub fn layout(&self) -> &CodeLayout {
        &self.layout
    }

    pub fn words(&self) -> &'a [u64] {
        self.words
    }

    pub fn codes(&self) -> Vec<u16> {
        self.layout.unpack(self.words)
    }
}

/// Fraction of the `L` positions at which two rows agree.
pub fn hamming_similarity(a: CodeRow<'_>, b: CodeRow<'_>) -> Result<f64> {
    if a.layout.l != b.layout.l {
        return Err(Error::DimensionMismatch {
            what: "code length L",
            expected: a.layout.l,
            got: b.layout.l,
        });
    }
    if a.layout.m != b.layout.m {
        return Err(Error::DimensionMismatch {
            what: "subsample size M",
            expected: a.layout.m,
            got: b.layout.m,
        });
    }
    Ok(a.layout.matches(a.words, b.words) as f64 / a.layout.l as f64)
}

/// `N` packed code rows sharing one layout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HashCodes {
    layout: CodeLayout,
    n: usize,
    words: Vec<u64>,
}

impl HashCodes {
    pub fn new(layout: CodeLayout) -> Self {
        Self::with_capacity(layout, 0)
    }

    pub fn with_capacity(layout: CodeLayout, rows: usize) -> Self {
        Self {
            layout,
            n: 0,
            words: Vec::with_capacity(rows * layout.words_per_row),
        }
    }

    /// Pack a flat `N x L` array of codes.
    pub fn from_codes(l: usize, m: usize, codes: &[u16]) -> Result<Self> {
        let layout = CodeLayout::new(l, m)?;
        if !codes.len().is_multiple_of(l) {
            return Err(Error::DimensionMismatch {
                what: "flat code array",
                expected: codes.len().div_ceil(l) * l,
                got: codes.len(),
            });
        }
        let mut out = Self::with_capacity(layout, codes.len() / l);
        for row in codes.chunks_exact(l) {
            out.push(row)?;
        }
        Ok(out)
    }

    /// Wrap already-packed words, validating every row.
    pub fn from_packed(layout: CodeLayout, n: usize, words: Vec<u64>) -> Result<Self> {
        if words.len() != n * layout.words_per_row {
            return Err(Error::DimensionMismatch {
                what: "packed code words",
                expected: n * layout.words_per_row,
                got: words.len(),
            });
        }
        for row in words.chunks_exact(layout.words_per_row) {
            layout.validate_row(row)?;
        }
        Ok(Self { layout, n, words })
    }

    pub fn push(&mut self, codes: &[u16]) -> Result<()> {
        let start = self.words.len();
        self.words.resize(start + self.layout.words_per_row, 0);
        if let Err(e) = self.layout.pack_into(codes, &mut self.words[start..]) {
            self.words.truncate(start);
            return Err(e);
        }
        self.n += 1;
        Ok(())
    }

    pub fn layout(&self) -> &CodeLayout {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn row(&self, i: usize) -> CodeRow<'_> {
        let w = self.layout.words_per_row;
        CodeRow {
            layout: self.layout,
            words: &self.words[i * w..(i + 1) * w],
        }
    }

    pub fn codes(&self, i: usize) -> Vec<u16> {
        self.row(i).codes()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }
}
