//! Counter-based random streams.
//!
//! A stream is identified by a master seed plus a path of labels (trial,
//! draw kind, step, ...). Each stream exposes an indexable sequence of 64-bit
//! words: word `n` of a stream is the `n`-th output of SplitMix64 started at
//! the stream key, computed directly without iterating. Nothing is stateful,
//! so a draw depends only on `(master_seed, path, counter)`.

/// Golden-ratio increment used by SplitMix64.
const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// What a random draw is used for. Part of the stream path so that, for
/// example, hold decisions and noise flips at the same step never share bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DrawKind {
    Hold = 1,
    Noise = 2,
    Fill = 3,
    Pore = 4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    key: u64,
}

impl RngStream {
    pub fn new(master_seed: u64) -> Self {
        RngStream {
            key: mix64(master_seed ^ 0x6A09_E667_F3BC_C909),
        }
    }

    /// Extends the stream path by one label.
    #[must_use]
    pub fn child(&self, label: u64) -> Self {
        RngStream {
            key: mix64(self.key.rotate_left(23) ^ mix64(label.wrapping_add(GAMMA))),
        }
    }

    /// Stream for the draws of one kind at one time step.
    #[must_use]
    pub fn draws(&self, kind: DrawKind, step: u64) -> Self {
        self.child(kind as u64).child(step)
    }

    #[inline]
    pub fn word(&self, counter: u64) -> u64 {
        mix64(self.key.wrapping_add(counter.wrapping_add(1).wrapping_mul(GAMMA)))
    }

    /// Uniform double in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&self, counter: u64) -> f64 {
        (self.word(counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// A probability quantized to 64 fractional bits, used to draw 64
/// independent Bernoulli lanes at once.
///
/// Lane `l` of a mask is true iff `U_l < p`, where the bits of the uniform
/// `U_l` are lane `l` of consecutive stream words (most significant first).
/// Words are generated lazily and the loop stops once every lane is decided,
/// so roughly `log2(64) + 2` words are consumed per mask whatever `p` is.
/// Since `U_l` does not depend on `p`, masks drawn from the same stream are
/// monotone in `p` (coupled sampling).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bernoulli {
    Never,
    Always,
    Fraction(u64),
}

/// Words reserved per mask in the counter space.
pub const PLANES_PER_MASK: u64 = 64;

impl Bernoulli {
    pub fn new(p: f64) -> Self {
        if !(p > 0.0) {
            Bernoulli::Never
        } else if p >= 1.0 {
            Bernoulli::Always
        } else {
            let scaled = p * 18_446_744_073_709_551_616.0;
            if scaled >= u64::MAX as f64 {
                Bernoulli::Always
            } else {
                match scaled as u64 {
                    0 => Bernoulli::Never,
                    k => Bernoulli::Fraction(k),
                }
            }
        }
    }

    /// The quantized probability.
    pub fn probability(&self) -> f64 {
        match *self {
            Bernoulli::Never => 0.0,
            Bernoulli::Always => 1.0,
            Bernoulli::Fraction(k) => k as f64 / 18_446_744_073_709_551_616.0,
        }
    }

    /// 64 Bernoulli lanes drawn from mask slot `slot` of `stream`.
    #[inline]
    pub fn mask(&self, stream: &RngStream, slot: u64) -> u64 {
        let threshold = match *self {
            Bernoulli::Never => return 0,
            Bernoulli::Always => return !0,
            Bernoulli::Fraction(k) => k,
        };
        let base = slot.wrapping_mul(PLANES_PER_MASK);
        let mut result = 0u64;
        let mut undecided = !0u64;
        for plane in 0..64 {
            let r = stream.word(base + plane);
            let kbit = if (threshold >> (63 - plane)) & 1 == 1 { !0 } else { 0 };
            result |= undecided & !r & kbit;
            undecided &= !(r ^ kbit);
            // Undecided lanes equal the threshold prefix; if no threshold bits
            // remain they can only be >= threshold.
            if undecided == 0 || plane == 63 || threshold << (plane + 1) == 0 {
                break;
            }
        }
        result
    }

    /// Lane `lane` of [`Bernoulli::mask`], evaluated on its own.
    pub fn lane(&self, stream: &RngStream, slot: u64, lane: u32) -> bool {
        let threshold = match *self {
            Bernoulli::Never => return false,
            Bernoulli::Always => return true,
            Bernoulli::Fraction(k) => k,
        };
        let base = slot.wrapping_mul(PLANES_PER_MASK);
        for plane in 0..64 {
            let r = (stream.word(base + plane) >> lane) & 1;
            let k = (threshold >> (63 - plane)) & 1;
            if r != k {
                return r < k;
            }
            if threshold << (plane + 1) == 0 {
                return false;
            }
        }
        false
    }
}
