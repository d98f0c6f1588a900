use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SchedRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SchedRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a master seed with a path of indices (run, iteration, pass, ...).
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &p| {
        splitmix64(acc ^ splitmix64(p))
    })
}

/// Uniform choice among an unknown number of tied candidates (reservoir of
/// size one).
#[derive(Default)]
pub(crate) struct Ties {
    seen: u32,
}

impl Ties {
    /// Starts over with a strictly better candidate.
    pub fn reset(&mut self) {
        self.seen = 1;
    }

    /// Offers another tied candidate; returns true if it should replace the
    /// current pick.
    pub fn offer<R: Rng>(&mut self, rng: &mut R) -> bool {
        self.seen += 1;
        rng.random_range(0..self.seen) == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(42, &[1]);
        let b = derive_seed(42, &[2]);
        let c = derive_seed(43, &[1]);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, derive_seed(42, &[1]));
        assert_ne!(derive_seed(1, &[0, 1]), derive_seed(1, &[1, 0]));
    }

    #[test]
    fn ties_are_roughly_uniform() {
        let mut rng = rng_from_seed(5);
        let mut hits = [0u32; 4];
        for _ in 0..4000 {
            let mut t = Ties::default();
            t.reset();
            let mut pick = 0;
            for k in 1..4 {
                if t.offer(&mut rng) {
                    pick = k;
                }
            }
            hits[pick] += 1;
        }
        assert!(hits.iter().all(|&h| (850..1150).contains(&h)), "{hits:?}");
    }
}
