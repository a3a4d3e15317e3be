use std::fmt;

/// Subset of players `0..players`, stored as a bitset.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coalition {
    words: Vec<u64>,
    players: usize,
}

impl Coalition {
    pub fn empty(players: usize) -> Self {
        Coalition {
            words: vec![0; players.div_ceil(64)],
            players,
        }
    }

    pub fn full(players: usize) -> Self {
        let mut c = Coalition::empty(players);
        for (k, w) in c.words.iter_mut().enumerate() {
            let remaining = players - 64 * k;
            *w = if remaining >= 64 { u64::MAX } else { (1u64 << remaining) - 1 };
        }
        c
    }

    pub fn from_members<I: IntoIterator<Item = usize>>(players: usize, members: I) -> Self {
        let mut c = Coalition::empty(players);
        for i in members {
            c.insert(i);
        }
        c
    }

    /// Coalition whose membership is the low `players` bits of `bits`.
    pub fn from_bits(players: usize, bits: u64) -> Self {
        assert!(players <= 64);
        let mut c = Coalition::empty(players);
        if players > 0 {
            c.words[0] = bits;
        }
        c
    }

    /// Membership as a bitmask; requires at most 64 players.
    pub fn to_bits(&self) -> u64 {
        assert!(self.players <= 64);
        self.words.first().copied().unwrap_or(0)
    }

    pub fn players(&self) -> usize {
        self.players
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        assert!(i < self.players, "player {i} out of range");
        self.words[i / 64] |= 1 << (i % 64);
    }

    #[inline]
    pub fn remove(&mut self, i: usize) {
        assert!(i < self.players, "player {i} out of range");
        self.words[i / 64] &= !(1 << (i % 64));
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        i < self.players && self.words[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.players).filter(move |&i| self.contains(i))
    }

    pub fn complement(&self) -> Self {
        let full = Coalition::full(self.players);
        Coalition {
            words: self.words.iter().zip(&full.words).map(|(a, f)| !a & f).collect(),
            players: self.players,
        }
    }

    pub fn union_with(&mut self, other: &Coalition) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn is_disjoint(&self, other: &Coalition) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    /// Writes membership into a dense boolean mask.
    pub fn fill_mask(&self, mask: &mut [bool]) {
        for (i, m) in mask.iter_mut().enumerate() {
            *m = self.contains(i);
        }
    }
}

impl fmt::Debug for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.members()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_operations() {
        let mut c = Coalition::empty(130);
        c.insert(0);
        c.insert(129);
        c.insert(64);
        assert_eq!(c.len(), 3);
        assert!(c.contains(129) && !c.contains(128));
        c.remove(64);
        assert_eq!(c.members().collect::<Vec<_>>(), vec![0, 129]);
        let comp = c.complement();
        assert_eq!(comp.len(), 128);
        assert!(comp.is_disjoint(&c));
        let mut u = comp.clone();
        u.union_with(&c);
        assert_eq!(u, Coalition::full(130));
    }

    #[test]
    fn bits_round_trip() {
        let c = Coalition::from_bits(5, 0b10110);
        assert_eq!(c.members().collect::<Vec<_>>(), vec![1, 2, 4]);
        assert_eq!(c.to_bits(), 0b10110);
        assert_eq!(Coalition::full(64).len(), 64);
        assert_eq!(Coalition::full(0).len(), 0);
    }
}
