//! Counter-based splittable random number generation.
//!
//! Streams are addressed, not advanced: `SplitRng::stream(&[draw, segment,
//! channel])` derives an independent `CounterRng` purely from the seed and
//! the path of indices, so batch generation can fan out across threads in
//! any order and still produce bit-identical output.

use rand::RngCore;

/// splitmix64 finalizer: a bijective 64-bit mixer with good avalanche.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// A keyed counter generator: output_i = mix(key, i).
#[derive(Debug, Clone, Copy)]
pub struct CounterRng {
    key: u64,
    counter: u64,
    buffered: Option<u32>,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        CounterRng { key, counter: 0, buffered: None }
    }

    #[inline]
    fn block(&mut self) -> u64 {
        let c = self.counter;
        self.counter = self.counter.wrapping_add(1);
        // Two mixing rounds keyed on both words.
        mix64(mix64(c ^ self.key).wrapping_add(self.key.rotate_left(17)))
    }

    /// Uniform draw in [0, 1) with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
    }

    /// Uniform draw in (0, 1] — safe to pass through `ln`.
    #[inline]
    pub fn uniform_open0(&mut self) -> f64 {
        1.0 - self.uniform()
    }
}

impl RngCore for CounterRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        if let Some(hi) = self.buffered.take() {
            return hi;
        }
        let block = self.block();
        self.buffered = Some((block >> 32) as u32);
        block as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.buffered = None;
        self.block()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}

/// Splittable root: derives independent substreams from index paths.
#[derive(Debug, Clone, Copy)]
pub struct SplitRng {
    seed: u64,
}

impl SplitRng {
    pub fn new(seed: u64) -> Self {
        SplitRng { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derive the substream addressed by `path` (e.g. `[draw, segment, channel]`).
    pub fn stream(&self, path: &[u64]) -> CounterRng {
        let mut key = mix64(self.seed);
        for (depth, &idx) in path.iter().enumerate() {
            key = mix64(key ^ mix64(idx.wrapping_add(0x632be59bd9b4e019u64.wrapping_mul(depth as u64 + 1))));
        }
        CounterRng::new(key)
    }
}
