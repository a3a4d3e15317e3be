use serde::{Deserialize, Serialize};

/// Read access to one feature row. Lets models score masked composites
/// without materialising them.
pub trait FeatureSource {
    fn width(&self) -> usize;
    fn value(&self, j: usize) -> f64;

    fn fill(&self, buf: &mut [f64]) {
        for (j, v) in buf.iter_mut().enumerate() {
            *v = self.value(j);
        }
    }
}

impl FeatureSource for [f64] {
    #[inline]
    fn width(&self) -> usize {
        self.len()
    }

    #[inline]
    fn value(&self, j: usize) -> f64 {
        self[j]
    }

    fn fill(&self, buf: &mut [f64]) {
        buf.copy_from_slice(self);
    }
}

impl FeatureSource for Vec<f64> {
    #[inline]
    fn width(&self) -> usize {
        self.len()
    }

    #[inline]
    fn value(&self, j: usize) -> f64 {
        self[j]
    }
}

/// `instance` values where `keep[j]`, `background` values elsewhere.
#[derive(Debug, Clone, Copy)]
pub struct MaskedRow<'a> {
    pub instance: &'a [f64],
    pub background: &'a [f64],
    pub keep: &'a [bool],
}

impl FeatureSource for MaskedRow<'_> {
    #[inline]
    fn width(&self) -> usize {
        self.instance.len()
    }

    #[inline]
    fn value(&self, j: usize) -> f64 {
        if self.keep[j] {
            self.instance[j]
        } else {
            self.background[j]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf { value: f64 },
}

/// Binary tree stored as a node arena rooted at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    #[inline]
    pub fn predict<F: FeatureSource + ?Sized>(&self, row: &F) -> f64 {
        let mut i = 0usize;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row.value(*feature) <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    pub fn leaves(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { value } => Some(*value),
            _ => None,
        })
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + walk(t, *left as usize).max(walk(t, *right as usize))
                }
            }
        }
        if self.nodes.is_empty() {
            0
        } else {
            walk(self, 0)
        }
    }

    /// Features of every split where some mix of `a` and `b` values could go
    /// either way. Empty exactly when `a` and `b` reach the same leaf.
    pub(crate) fn divergent_features(&self, a: &[f64], b: &[f64], out: &mut Vec<usize>) {
        out.clear();
        if self.nodes.is_empty() {
            return;
        }
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            if let Node::Split {
                feature,
                threshold,
                left,
                right,
            } = &self.nodes[i]
            {
                let go_a = a[*feature] <= *threshold;
                let go_b = b[*feature] <= *threshold;
                if go_a == go_b {
                    stack.push(if go_a { *left } else { *right } as usize);
                } else {
                    if !out.contains(feature) {
                        out.push(*feature);
                    }
                    stack.push(*left as usize);
                    stack.push(*right as usize);
                }
            }
        }
    }

    pub(crate) fn push(&mut self, node: Node) -> u32 {
        self.nodes.push(node);
        (self.nodes.len() - 1) as u32
    }
}

/// Threshold strictly between two adjacent sorted values, never equal to `hi`.
#[inline]
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m >= hi || !m.is_finite() {
        lo
    } else {
        m
    }
}
