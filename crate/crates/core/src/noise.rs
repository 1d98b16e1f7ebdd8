//! Counter-addressed Gaussian increments.
//!
//! Each replica owns a ChaCha stream keyed by its seed. Draw number `p`
//! always comes from the same keystream words, so `(seed, stream, p)`
//! determines the increment independently of how work is scheduled.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// 32-bit keystream words consumed per Gaussian pair.
const WORDS_PER_PAIR: u128 = 4;

#[derive(Debug, Clone)]
pub struct NoiseStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
    position: u64,
}

impl NoiseStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            seed,
            stream,
            rng,
            position: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Index of the next Gaussian draw.
    pub fn position(&self) -> u64 {
        self.position
    }

    /// Moves to draw number `position`; must be even (draws come in pairs).
    pub fn seek(&mut self, position: u64) {
        assert!(position.is_multiple_of(2), "noise positions are pair-aligned");
        self.rng.set_word_pos(position as u128 / 2 * WORDS_PER_PAIR);
        self.position = position;
    }

    /// The Gaussian at `position`, without disturbing the stream.
    pub fn gaussian_at(&self, position: u64) -> f64 {
        let mut probe = self.clone();
        probe.seek(position & !1);
        let mut pair = [0.0; 2];
        probe.fill(&mut pair);
        pair[(position & 1) as usize]
    }

    /// Fills `out` with standard normals. An odd-length request still consumes
    /// a whole pair so positions stay aligned.
    pub fn fill(&mut self, out: &mut [f64]) {
        let mut chunks = out.chunks_mut(2);
        for chunk in &mut chunks {
            let (z0, z1) = self.pair();
            chunk[0] = z0;
            if let Some(slot) = chunk.get_mut(1) {
                *slot = z1;
            }
        }
        self.position += (out.len() as u64 + 1) & !1;
    }

    fn pair(&mut self) -> (f64, f64) {
        // Box-Muller with u1 in (0, 1].
        let u1 = ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        (r * theta.cos(), r * theta.sin())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_are_addressable() {
        let mut s = NoiseStream::new(7, 3);
        let mut a = vec![0.0; 10];
        s.fill(&mut a);
        assert_eq!(s.position(), 10);
        for (p, &z) in a.iter().enumerate() {
            assert_eq!(s.gaussian_at(p as u64), z);
        }
        s.seek(4);
        let mut b = vec![0.0; 2];
        s.fill(&mut b);
        assert_eq!(b, a[4..6]);
    }

    #[test]
    fn odd_requests_keep_alignment() {
        let mut s = NoiseStream::new(1, 0);
        let mut x = vec![0.0; 3];
        s.fill(&mut x);
        assert_eq!(s.position(), 4);
        let mut y = vec![0.0; 2];
        s.fill(&mut y);
        assert_eq!(y[0], s.gaussian_at(4));
    }

    #[test]
    fn streams_differ_and_moments_look_normal() {
        let mut a = NoiseStream::new(1, 0);
        let mut b = NoiseStream::new(1, 1);
        let mut xa = vec![0.0; 200_000];
        let mut xb = vec![0.0; 4];
        a.fill(&mut xa);
        b.fill(&mut xb);
        assert_ne!(xa[..4], xb[..]);
        let n = xa.len() as f64;
        let mean = xa.iter().sum::<f64>() / n;
        let var = xa.iter().map(|x| x * x).sum::<f64>() / n - mean * mean;
        let kurt = xa.iter().map(|x| x.powi(4)).sum::<f64>() / n;
        assert!(mean.abs() < 0.01);
        assert!((var - 1.0).abs() < 0.01);
        assert!((kurt - 3.0).abs() < 0.05);
    }
}
