//! Sobol' low-discrepancy sequences for up to 21 dimensions.
//!
//! Direction numbers follow the usual Gray-code construction: dimension 1
//! is the van der Corput sequence in base 2, higher dimensions use
//! primitive polynomials over GF(2) with Joe-Kuo style initial values.
//! The unscrambled sequence starts at the origin: the first two
//! one-dimensional points are `0` and `0.5`.
//!
//! A nonzero `seed` applies a random digital shift (a per-dimension XOR
//! mask), which relocates the sequence while preserving its net structure;
//! `seed == 0` yields the canonical sequence.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::Error;

/// Largest supported dimension.
pub const MAX_DIM: usize = 21;

const BITS: usize = 32;

/// (degree, polynomial coefficient encoding, initial values m_1..m_s) for
/// dimensions 2..=21.
const PARAMS: [(usize, u32, [u32; 7]); 20] = [
    (1, 0, [1, 0, 0, 0, 0, 0, 0]),
    (2, 1, [1, 3, 0, 0, 0, 0, 0]),
    (3, 1, [1, 3, 1, 0, 0, 0, 0]),
    (3, 2, [1, 1, 1, 0, 0, 0, 0]),
    (4, 1, [1, 1, 3, 3, 0, 0, 0]),
    (4, 4, [1, 3, 5, 13, 0, 0, 0]),
    (5, 2, [1, 1, 5, 5, 17, 0, 0]),
    (5, 4, [1, 1, 5, 5, 5, 0, 0]),
    (5, 7, [1, 1, 7, 11, 19, 0, 0]),
    (5, 11, [1, 1, 5, 1, 1, 0, 0]),
    (5, 13, [1, 1, 1, 3, 11, 0, 0]),
    (5, 14, [1, 3, 5, 5, 31, 0, 0]),
    (6, 1, [1, 3, 3, 9, 7, 49, 0]),
    (6, 13, [1, 1, 1, 15, 21, 21, 0]),
    (6, 16, [1, 3, 1, 13, 27, 49, 0]),
    (6, 19, [1, 1, 1, 15, 7, 5, 0]),
    (6, 22, [1, 3, 1, 3, 25, 9, 0]),
    (6, 25, [1, 1, 5, 7, 11, 59, 0]),
    (7, 1, [1, 3, 7, 13, 3, 35, 61]),
    (7, 4, [1, 1, 3, 13, 31, 57, 77]),
];

const fn van_der_corput() -> [u32; BITS] {
    let mut v = [0u32; BITS];
    let mut c = 0;
    while c < BITS {
        v[c] = 1u32 << (31 - c);
        c += 1;
    }
    v
}

const fn directions_for(s: usize, a: u32, m: [u32; 7]) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    let mut c = 0;
    while c < s {
        v[c] = m[c] << (31 - c);
        c += 1;
    }
    while c < BITS {
        let mut val = v[c - s] ^ (v[c - s] >> s);
        let mut j = 1;
        while j < s {
            if (a >> (s - 1 - j)) & 1 == 1 {
                val ^= v[c - j];
            }
            j += 1;
        }
        v[c] = val;
        c += 1;
    }
    v
}

const fn all_directions() -> [[u32; BITS]; MAX_DIM] {
    let mut dirs = [[0u32; BITS]; MAX_DIM];
    dirs[0] = van_der_corput();
    let mut d = 1;
    while d < MAX_DIM {
        let (s, a, m) = PARAMS[d - 1];
        dirs[d] = directions_for(s, a, m);
        d += 1;
    }
    dirs
}

static DIRECTIONS: [[u32; BITS]; MAX_DIM] = all_directions();

/// Incremental Sobol' generator over `[0,1)^dim`.
pub struct SobolSequence {
    dim: usize,
    index: u32,
    state: [u32; MAX_DIM],
    shift: [u32; MAX_DIM],
}

impl SobolSequence {
    /// `seed == 0` gives the canonical sequence starting at the origin; a
    /// nonzero seed applies a digital shift.
    pub fn new(dim: usize, seed: u64) -> Result<Self, Error> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidSpace(format!(
                "sobol dimension must be in 1..={MAX_DIM}, got {dim}"
            )));
        }
        let mut shift = [0u32; MAX_DIM];
        if seed != 0 {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            for s in shift.iter_mut().take(dim) {
                *s = rng.next_u32();
            }
        }
        Ok(Self { dim, index: 0, state: [0; MAX_DIM], shift })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Next point of the sequence.
    pub fn next_point(&mut self) -> Vec<f64> {
        let out = self
            .state
            .iter()
            .zip(&self.shift)
            .take(self.dim)
            .map(|(&x, &s)| (x ^ s) as f64 / 4294967296.0)
            .collect();
        // Gray-code increment: flip direction number c, where c is the
        // number of trailing ones of the current index.
        let c = (!self.index).trailing_zeros() as usize;
        for (x, dirs) in self.state.iter_mut().zip(&DIRECTIONS).take(self.dim) {
            *x ^= dirs[c.min(BITS - 1)];
        }
        self.index = self.index.wrapping_add(1);
        out
    }

    /// Skips `n` points.
    pub fn skip(&mut self, n: usize) {
        for _ in 0..n {
            self.next_point();
        }
    }
}

/// First `n` points of the `dim`-dimensional Sobol' sequence.
///
/// `seed == 0` is the unscrambled sequence; nonzero applies a digital
/// shift. Deterministic in all arguments.
pub fn sobol_points(dim: usize, n: usize, seed: u64) -> Result<Vec<Vec<f64>>, Error> {
    if n == 0 {
        return Err(Error::InvalidSpace("sobol_points requires n >= 1".into()));
    }
    let mut seq = SobolSequence::new(dim, seed)?;
    Ok((0..n).map(|_| seq.next_point()).collect())
}
