use super::{exact_shapley_with_cap, Coalition, CoalitionGame, ShapleyMethod, ShapleyResult, DEFAULT_EXACT_CAP};
use crate::dataset::FeatureSchema;
use crate::error::{Error, Result};

/// Disjoint groups covering every player exactly once.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    players: usize,
    groups: Vec<Coalition>,
    names: Vec<String>,
}

impl Partition {
    pub fn new(players: usize, groups: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = Coalition::empty(players);
        let mut out = Vec::with_capacity(groups.len());
        for g in groups {
            if g.is_empty() {
                return Err(Error::Partition("empty group".into()));
            }
            let mut c = Coalition::empty(players);
            for i in g {
                if i >= players {
                    return Err(Error::Partition(format!("player {i} out of range 0..{players}")));
                }
                if seen.contains(i) || c.contains(i) {
                    return Err(Error::Partition(format!("player {i} appears in more than one group")));
                }
                c.insert(i);
            }
            seen.union_with(&c);
            out.push(c);
        }
        if seen.len() != players {
            let missing: Vec<usize> = seen.complement().members().collect();
            return Err(Error::Partition(format!("players {missing:?} are not covered")));
        }
        let names = (0..out.len()).map(|g| format!("G{g}")).collect();
        Ok(Partition {
            players,
            groups: out,
            names,
        })
    }

    pub fn singletons(players: usize) -> Self {
        Partition {
            players,
            groups: (0..players).map(|i| Coalition::from_members(players, [i])).collect(),
            names: (0..players).map(|i| format!("G{i}")).collect(),
        }
    }

    /// One group per contiguous schema block (the document parts).
    pub fn from_schema(schema: &FeatureSchema) -> Self {
        let blocks = schema.group_blocks();
        let groups = blocks.iter().map(|(_, r)| r.clone().collect()).collect();
        Partition::new(schema.len(), groups)
            .expect("schema blocks form an exact cover")
            .with_names(blocks.iter().map(|(g, _)| g.to_string()).collect())
            .expect("one name per block")
    }

    /// Replaces the default `G0, G1, ...` labels.
    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.groups.len() {
            return Err(Error::Partition(format!(
                "{} names for {} groups",
                names.len(),
                self.groups.len()
            )));
        }
        self.names = names;
        Ok(self)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn players(&self) -> usize {
        self.players
    }

    pub fn groups(&self) -> &[Coalition] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

/// Exact Shapley values of the quotient game whose players are the groups.
pub fn partition_shapley(game: &CoalitionGame<'_>, partition: &Partition) -> Result<ShapleyResult> {
    if partition.players() != game.players() {
        return Err(Error::Partition(format!(
            "partition covers {} players but the game has {}",
            partition.players(),
            game.players()
        )));
    }
    let before = game.evaluations();
    let m = game.players();
    let quotient = CoalitionGame::from_fn(partition.len(), |t: &Coalition| {
        let mut s = Coalition::empty(m);
        for g in t.members() {
            s.union_with(&partition.groups[g]);
        }
        game.value(&s)
    });
    let mut r = exact_shapley_with_cap(&quotient, DEFAULT_EXACT_CAP)?;
    r.method = ShapleyMethod::Partition;
    r.evaluations_used = game.evaluations() - before;
    Ok(r)
}
