//! Counter-based random numbers: every draw is a pure function of
//! `(seed, stream, index)`, so values never depend on generation order.
//!
//! Transcendental functions come from `libm`, which is implemented in
//! software and gives the same bits on every platform.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combines two words into a new stream or seed identifier.
#[inline]
pub fn derive(a: u64, b: u64) -> u64 {
    mix(mix(a ^ 0x5851_F42D_4C95_7F2D).wrapping_add(b.wrapping_mul(GOLDEN)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    seed: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn bits(&self, stream: u64, index: u64) -> u64 {
        let key = derive(self.seed, stream);
        mix(key ^ mix(index.wrapping_add(1).wrapping_mul(GOLDEN)))
    }

    /// Uniform in the open interval `(0, 1)`.
    #[inline]
    pub fn uniform(&self, stream: u64, index: u64) -> f64 {
        ((self.bits(stream, index) >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box–Muller (cosine branch only).
    pub fn normal(&self, stream: u64, index: u64) -> f64 {
        let u1 = self.uniform(stream, index.wrapping_mul(2));
        let u2 = self.uniform(stream, index.wrapping_mul(2).wrapping_add(1));
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
    }

    /// Laplace with location 0 and scale 1, by inverting the CDF.
    pub fn laplace(&self, stream: u64, index: u64) -> f64 {
        let u = self.uniform(stream, index) - 0.5;
        let mag = -libm::log(1.0 - 2.0 * u.abs());
        if u < 0.0 {
            -mag
        } else {
            mag
        }
    }
}
