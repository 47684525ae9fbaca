use rand::Rng;

/// Fixed-capacity FIFO ring buffer with uniform sampling without replacement.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    items: Vec<T>,
    capacity: usize,
    cursor: usize,
}

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            items: Vec::new(),
            capacity,
            cursor: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Appends, overwriting the oldest item once full.
    pub fn push(&mut self, item: T) {
        if self.items.len() < self.capacity {
            self.items.push(item);
        } else {
            self.items[self.cursor] = item;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    /// Item by age rank: 0 is the oldest still stored.
    pub fn get(&self, rank: usize) -> Option<&T> {
        if rank >= self.items.len() {
            return None;
        }
        let start = if self.items.len() < self.capacity { 0 } else { self.cursor };
        self.items.get((start + rank) % self.capacity)
    }

    /// Oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &T> {
        (0..self.items.len()).filter_map(move |r| self.get(r))
    }

    /// `batch` distinct storage slots, uniformly at random.
    pub fn sample_indices<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Option<Vec<usize>> {
        if batch > self.items.len() {
            return None;
        }
        Some(rand::seq::index::sample(rng, self.items.len(), batch).into_vec())
    }

    /// Item by storage slot, as returned by [`ReplayBuffer::sample_indices`].
    pub fn slot(&self, index: usize) -> &T {
        &self.items[index]
    }

    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Option<Vec<&T>> {
        self.sample_indices(batch, rng)
            .map(|idx| idx.into_iter().map(|i| &self.items[i]).collect())
    }
}
