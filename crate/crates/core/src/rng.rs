//! Counter-based random numbers.
//!
//! Every random quantity in the crate is a pure function of a 64-bit key and a
//! 128-bit counter, evaluated with the Philox4x32-10 bijection. Environment
//! sites use the counter `(x, n, replica)` directly, so any site can be read
//! in any order without storing the field. Monte Carlo streams use
//! [`CounterRng`], which walks the counter sequentially.

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

/// Domain tags folded into the key so that environment draws and the
/// various Monte Carlo streams never share counters.
pub mod domain {
    pub const ENVIRONMENT: u64 = 0x656e_7669_726f_6e00;
    pub const WALK_PATHS: u64 = 0x7061_7468_7300_0001;
    pub const POLYMER_PATHS: u64 = 0x706f_6c79_6d00_0002;
    pub const BOUND_BLOCKS: u64 = 0x626c_6f63_6b00_0003;
    pub const CELL_SEEDS: u64 = 0x6365_6c6c_0000_0004;
}

#[inline(always)]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = (a as u64) * (b as u64);
    ((p >> 32) as u32, p as u32)
}

/// Philox4x32 with 10 rounds.
#[inline]
pub fn philox4x32(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = counter;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(PHILOX_W0);
            k[1] = k[1].wrapping_add(PHILOX_W1);
        }
        let (hi0, lo0) = mulhilo(PHILOX_M0, c[0]);
        let (hi1, lo1) = mulhilo(PHILOX_M1, c[2]);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

/// SplitMix64 finalizer; used only to derive keys, never for draws.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
pub fn key_for(seed: u64, domain: u64) -> [u32; 2] {
    let k = mix64(seed ^ mix64(domain));
    [k as u32, (k >> 32) as u32]
}

/// Seed of one grid cell, keyed by the cell's coordinates so that a
/// duplicated cell reproduces its seed and distinct cells never share one.
pub fn cell_seed(master: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(mix64(master ^ domain::CELL_SEEDS), |acc, &c| mix64(acc ^ c))
}

/// Open-interval uniform from the top 52 bits of `bits`.
#[inline(always)]
pub fn unit_open(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / 4_503_599_627_370_496.0)
}

#[inline(always)]
pub fn join(lo: u32, hi: u32) -> u64 {
    (lo as u64) | ((hi as u64) << 32)
}

/// Sequential generator over a keyed counter space.
///
/// The stream is identified by `(seed, domain, stream, replica)`; the low 64
/// bits of the counter advance one block (two 64-bit outputs) at a time.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: [u32; 2],
    stream: u32,
    replica: u32,
    index: u64,
    buf: [u64; 2],
    pos: usize,
}

impl CounterRng {
    pub fn new(seed: u64, domain: u64, stream: u64, replica: u64) -> Self {
        CounterRng {
            key: key_for(seed ^ mix64(stream.rotate_left(17) ^ 0x5eed), domain),
            stream: stream as u32 ^ (stream >> 32) as u32,
            replica: replica as u32 ^ (replica >> 32) as u32,
            index: 0,
            buf: [0; 2],
            pos: 2,
        }
    }

    fn refill(&mut self) {
        let out = philox4x32(
            [self.index as u32, (self.index >> 32) as u32, self.stream, self.replica],
            self.key,
        );
        self.index = self.index.wrapping_add(1);
        self.buf = [join(out[0], out[1]), join(out[2], out[3])];
        self.pos = 0;
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        if self.pos == 2 {
            self.refill();
        }
        let v = self.buf[self.pos];
        self.pos += 1;
        v
    }

    /// Uniform on (0, 1).
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        unit_open(self.next_u64())
    }

    /// Uniform index in `0..n` (Lemire's multiply-shift; `n` > 0).
    #[inline]
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        loop {
            let m = (self.next_u64() as u128) * (n as u128);
            let lo = m as u64;
            if lo >= n.wrapping_neg() % n {
                return (m >> 64) as u64;
            }
        }
    }
}
