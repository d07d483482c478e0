use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Splittable random stream keyed by a global seed and a path of labels.
///
/// Two streams with different paths are independent by construction, and a
/// stream always yields the same numbers for the same path.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Stream {
    key: [u8; 32],
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        let mut h = Sha256::new();
        h.update(b"salemkit-stream");
        h.update(seed.to_le_bytes());
        Stream { key: finish(h) }
    }

    fn derive(&self, tag: u8, bytes: &[u8]) -> Stream {
        let mut h = Sha256::new();
        h.update(self.key);
        h.update([tag]);
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
        Stream { key: finish(h) }
    }

    pub fn child(&self, label: &str) -> Stream {
        self.derive(1, label.as_bytes())
    }

    pub fn index(&self, i: u64) -> Stream {
        self.derive(2, &i.to_le_bytes())
    }

    pub fn point(&self, p: &[i64]) -> Stream {
        let bytes: Vec<u8> = p.iter().flat_map(|c| c.to_le_bytes()).collect();
        self.derive(3, &bytes)
    }

    /// Stream for a tree node given by its digit path.
    pub fn path(&self, path: &[Vec<i64>]) -> Stream {
        let mut s = self.derive(4, &(path.len() as u64).to_le_bytes());
        for p in path {
            s = s.point(p);
        }
        s
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::from_seed(self.key)
    }
}

fn finish(h: Sha256) -> [u8; 32] {
    let out = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&out);
    key
}
